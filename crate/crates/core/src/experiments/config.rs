//! `key = value` run configuration files.
//!
//! ```text
//! # lines starting with '#' are comments
//! nx = 500
//! beta2 = 1e-3
//! bc_mode = experiment
//! snapshot_times = 0.1, 0.25, 0.5
//! ```

use super::initial::InitialCondition;
use crate::fv::{BoundaryMode, DiffusionModel, SimConfig};
use std::collections::BTreeMap;
use std::str::FromStr;
use thiserror::Error;

/// A simulation configuration together with its initial data.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub initial: InitialCondition,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` given twice (first on line {first})")]
    Duplicate { line: usize, key: String, first: usize },
    #[error("line {line}: cannot read `{value}` as {expected} for `{key}`")]
    Value { line: usize, key: String, value: String, expected: &'static str },
    /// A value that parsed but violates a constraint; `line` is `None` when
    /// the offending key was left at its default.
    #[error("{}`{key}` {reason}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Range { line: Option<usize>, key: String, reason: String },
}

impl ParseError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { line }
            | ParseError::UnknownKey { line, .. }
            | ParseError::Duplicate { line, .. }
            | ParseError::Value { line, .. } => Some(*line),
            ParseError::Range { line, .. } => *line,
        }
    }
}

const KEYS: &[&str] = &[
    "nx",
    "nz",
    "beta2",
    "viscosity_ratio",
    "end_time",
    "cfl",
    "bc_mode",
    "dt_max",
    "solver_tol",
    "clamp",
    "diffusion",
    "snapshot_times",
    "initial",
    "plateau",
    "steepness",
    "value",
    "amplitude",
];

struct Entries<'a> {
    map: BTreeMap<&'a str, (usize, &'a str)>,
}

impl<'a> Entries<'a> {
    fn get<T: FromStr>(&self, key: &str, expected: &'static str) -> Result<Option<T>, ParseError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(&(line, value)) => value.parse().map(Some).map_err(|_| ParseError::Value {
                line,
                key: key.to_string(),
                value: value.to_string(),
                expected,
            }),
        }
    }

    fn choice<T: Copy>(&self, key: &str, options: &[(&str, T)], expected: &'static str) -> Result<Option<T>, ParseError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(&(line, value)) => options
                .iter()
                .find(|(name, _)| *name == value)
                .map(|(_, v)| Some(*v))
                .ok_or_else(|| ParseError::Value { line, key: key.to_string(), value: value.to_string(), expected }),
        }
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.map.get(key).map(|&(l, _)| l)
    }

    fn range(&self, key: &str, reason: impl Into<String>) -> ParseError {
        ParseError::Range { line: self.line(key), key: key.to_string(), reason: reason.into() }
    }
}

/// Parses and validates a configuration. Missing keys keep the defaults of
/// [`RunConfig::default`].
pub fn parse_config(text: &str) -> Result<RunConfig, ParseError> {
    let mut map = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or(ParseError::Syntax { line })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ParseError::Syntax { line });
        }
        if !KEYS.contains(&key) {
            return Err(ParseError::UnknownKey { line, key: key.to_string() });
        }
        if let Some(&(first, _)) = map.get(key) {
            return Err(ParseError::Duplicate { line, key: key.to_string(), first });
        }
        map.insert(key, (line, value));
    }
    let e = Entries { map };

    let mut sim = SimConfig::default();
    if let Some(v) = e.get("nx", "an integer")? {
        sim.nx = v;
    }
    if let Some(v) = e.get("nz", "an integer")? {
        sim.nz = v;
    }
    if let Some(v) = e.get("beta2", "a number")? {
        sim.beta2 = v;
    }
    if let Some(v) = e.get("viscosity_ratio", "a number")? {
        sim.viscosity_ratio = v;
    }
    if let Some(v) = e.get("end_time", "a number")? {
        sim.end_time = v;
    }
    if let Some(v) = e.get("cfl", "a number")? {
        sim.cfl = v;
    }
    if let Some(v) = e.get("dt_max", "a number")? {
        sim.dt_max = v;
    }
    if let Some(v) = e.get("solver_tol", "a number")? {
        sim.solver_tol = v;
    }
    if let Some(v) = e.get("clamp", "true or false")? {
        sim.clamp = v;
    }
    let modes = [("experiment", BoundaryMode::Experiment), ("analysis", BoundaryMode::Analysis), ("closed", BoundaryMode::Closed)];
    if let Some(v) = e.choice("bc_mode", &modes, "experiment, analysis or closed")? {
        sim.bc_mode = v;
    }
    let diffusions = [("nonlinear", DiffusionModel::Nonlinear), ("unit", DiffusionModel::Unit)];
    if let Some(v) = e.choice("diffusion", &diffusions, "nonlinear or unit")? {
        sim.diffusion = v;
    }
    if let Some(&(line, value)) = e.map.get("snapshot_times") {
        sim.snapshot_times = parse_list(value).map_err(|_| ParseError::Value {
            line,
            key: "snapshot_times".into(),
            value: value.into(),
            expected: "a comma-separated list of numbers",
        })?;
    }

    let kinds = [("slab", 0u8), ("constant", 1), ("bump", 2)];
    let kind = e.choice("initial", &kinds, "slab, constant or bump")?.unwrap_or(0);
    let allowed: &[&str] = match kind {
        0 => &["plateau", "steepness"],
        1 => &["value"],
        _ => &["amplitude"],
    };
    for key in ["plateau", "steepness", "value", "amplitude"] {
        if !allowed.contains(&key) && e.line(key).is_some() {
            return Err(e.range(key, "does not apply to this initial condition"));
        }
    }
    let initial = match kind {
        0 => InitialCondition::Slab {
            plateau: e.get("plateau", "a number")?.unwrap_or(0.9),
            steepness: e.get("steepness", "a number")?.unwrap_or(1e5),
        },
        1 => InitialCondition::Constant(e.get("value", "a number")?.unwrap_or(0.0)),
        _ => InitialCondition::Bump { amplitude: e.get("amplitude", "a number")?.unwrap_or(0.5) },
    };
    if !initial.is_admissible() {
        let key = match initial {
            InitialCondition::Slab { plateau, .. } if !(0.0..=1.0).contains(&plateau) => "plateau",
            InitialCondition::Slab { .. } => "steepness",
            InitialCondition::Constant(_) => "value",
            InitialCondition::Bump { .. } => "amplitude",
        };
        return Err(e.range(key, "puts the initial saturation outside [0, 1] or is not positive"));
    }

    if !(sim.end_time > 0.0) {
        return Err(e.range("end_time", "must be positive"));
    }
    sim.validate().map_err(|err| e.range(err.field, err.reason))?;
    Ok(RunConfig { sim, initial })
}

/// Comma-separated numbers.
pub fn parse_list(text: &str) -> Result<Vec<f64>, std::num::ParseFloatError> {
    text.split(',').map(|s| s.trim()).filter(|s| !s.is_empty()).map(str::parse).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!((cfg.sim.nx, cfg.sim.nz, cfg.sim.cfl, cfg.sim.solver_tol), (500, 20, 0.5, 1e-10));
        assert_eq!(cfg.sim.bc_mode, BoundaryMode::Experiment);
        let cfg = parse_config("# only a comment\n\n   \n").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn reads_values() {
        let cfg = parse_config(
            "beta2 = 1e-3\nnx=64 # trailing comment\n nz = 8\nbc_mode = analysis\ndiffusion = unit\n\
             snapshot_times = 0.1, 0.2\nclamp = true\ninitial = bump\namplitude = 0.3\nend_time = 0.4\n",
        )
        .unwrap();
        assert_eq!(cfg.sim.beta2, 1e-3);
        assert_eq!((cfg.sim.nx, cfg.sim.nz), (64, 8));
        assert_eq!(cfg.sim.bc_mode, BoundaryMode::Analysis);
        assert_eq!(cfg.sim.diffusion, DiffusionModel::Unit);
        assert_eq!(cfg.sim.snapshot_times, vec![0.1, 0.2]);
        assert!(cfg.sim.clamp);
        assert_eq!(cfg.initial, InitialCondition::Bump { amplitude: 0.3 });
    }

    #[test]
    fn negative_beta2_names_key_and_line() {
        let err = parse_config("nx = 10\nbeta2 = -1\n").unwrap_err();
        assert_eq!(err, ParseError::Range { line: Some(2), key: "beta2".into(), reason: "must be finite and non-negative".into() });
        assert!(err.to_string().contains("beta2"));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("nx = 10\nbogus = 1\n", 2),
            ("\n\nnx 10\n", 3),
            ("nx = ten\n", 1),
            ("nx = 10\nnx = 12\n", 2),
            ("bc_mode = sideways\n", 1),
            ("cfl = 2\n", 1),
            ("initial = constant\nplateau = 0.5\n", 2),
            ("initial = constant\nvalue = 1.5\n", 2),
            ("end_time = 0.1\nsnapshot_times = 0.05, 0.2\n", 2),
            ("clamp = maybe\n", 1),
        ];
        for (text, line) in cases {
            let err = parse_config(text).unwrap_err();
            assert_eq!(err.line(), Some(line), "{text:?}: {err}");
            assert!(err.to_string().starts_with(&format!("line {line}:")));
        }
    }

    #[test]
    fn zero_end_time_is_rejected() {
        assert!(matches!(parse_config("end_time = 0\n"), Err(ParseError::Range { line: Some(1), .. })));
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list("1e-2, 1e-3,1e-4").unwrap(), vec![1e-2, 1e-3, 1e-4]);
        assert!(parse_list("1e-2, x").is_err());
        assert!(parse_list("").unwrap().is_empty());
    }
}
