//! Parameter sweeps and the Brinkman/Darcy comparison.

use super::config::RunConfig;
use crate::coefficients::{CoefficientError, CoefficientSet};
use crate::diagnostics::{self, FRONT_LEVEL, FRONT_LINE_Z, WIDTH_LEVELS};
use crate::fv::{run, InitialData, RunError, RunOutput, SimConfig};
use rayon::prelude::*;
use std::fmt::Write as _;
use thiserror::Error;

/// The `β²` values of the default sweep, in sweep order.
pub const DEFAULT_SWEEP: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];
/// `β²` of the Brinkman run in the comparison.
pub const COMPARE_BVE_BETA2: f64 = 1e-6;
/// Required overshoot of the Brinkman run above the plateau.
pub const OVERSHOOT_MIN: f64 = 0.01;
/// Largest overshoot tolerated in the Darcy run.
pub const DARCY_OVERSHOOT_MAX: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriverError {
    #[error("the β² list is empty")]
    EmptySweep,
    #[error(transparent)]
    Coefficients(#[from] CoefficientError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The check has nothing to measure (no front, no motion).
    Degenerate,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Degenerate => "DEGENERATE",
        }
    }
}

/// Final-time front geometry of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontSummary {
    pub overshoot_max: f64,
    pub front_position: Option<f64>,
    pub front_width: Option<f64>,
    pub max_saturation: f64,
}

impl FrontSummary {
    pub fn of(out: &RunOutput, plateau: f64) -> Self {
        let s = &out.final_state.s;
        Self {
            overshoot_max: out.report.max_overshoot().max(diagnostics::overshoot_max(s, plateau)),
            front_position: diagnostics::locate_front(s, FRONT_LEVEL, FRONT_LINE_Z),
            front_width: diagnostics::front_width(s, WIDTH_LEVELS.0, WIDTH_LEVELS.1, FRONT_LINE_Z),
            max_saturation: s.max(),
        }
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

#[derive(Debug)]
pub struct SweepEntry {
    pub beta2: f64,
    pub result: Result<RunOutput, RunError>,
    pub summary: Option<FrontSummary>,
}

#[derive(Debug)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    /// Front width strictly decreasing along the list.
    pub verdict: Verdict,
}

impl SweepReport {
    pub fn widths(&self) -> Vec<Option<f64>> {
        self.entries.iter().map(|e| e.summary.and_then(|s| s.front_width)).collect()
    }

    pub fn table_csv(&self) -> String {
        let mut out = String::from("beta2,front_width,front_position,overshoot_max,status\n");
        for e in &self.entries {
            let status = match &e.result {
                Ok(_) => "ok".to_string(),
                Err(err) => format!("failed: {}", err.to_string().lines().next().unwrap_or("").replace(',', ";")),
            };
            let _ = writeln!(
                out,
                "{:.16e},{},{},{},{}",
                e.beta2,
                cell(e.summary.and_then(|s| s.front_width)),
                cell(e.summary.and_then(|s| s.front_position)),
                cell(e.summary.map(|s| s.overshoot_max)),
                status
            );
        }
        out
    }
}

fn with_beta2(base: &SimConfig, beta2: f64) -> SimConfig {
    SimConfig { beta2, ..base.clone() }
}

/// Runs `base` once per `β²`, in parallel. A failed run is recorded and the
/// others continue.
pub fn run_sweep(base: &RunConfig, beta2_list: &[f64]) -> Result<SweepReport, DriverError> {
    if beta2_list.is_empty() {
        return Err(DriverError::EmptySweep);
    }
    let coeffs = CoefficientSet::corey(base.sim.viscosity_ratio)?;
    let plateau = base.initial.plateau();
    let entries: Vec<SweepEntry> = beta2_list
        .par_iter()
        .map(|&beta2| {
            let result = run(&with_beta2(&base.sim, beta2), &coeffs, &base.initial);
            let summary = result.as_ref().ok().map(|o| FrontSummary::of(o, plateau));
            SweepEntry { beta2, result, summary }
        })
        .collect();
    let widths: Vec<Option<f64>> = entries.iter().map(|e| e.summary.and_then(|s| s.front_width)).collect();
    let verdict = if widths.iter().any(Option::is_none) {
        if entries.iter().all(|e| e.result.is_ok()) {
            Verdict::Degenerate
        } else {
            Verdict::Fail
        }
    } else {
        let w: Vec<f64> = widths.into_iter().flatten().collect();
        Verdict::from_bool(w.windows(2).all(|p| p[1] < p[0]))
    };
    Ok(SweepReport { entries, verdict })
}

#[derive(Debug)]
pub struct CompareReport {
    pub bve_beta2: f64,
    pub dve_beta2: f64,
    pub bve: Result<RunOutput, RunError>,
    pub dve: Result<RunOutput, RunError>,
    pub bve_summary: Option<FrontSummary>,
    pub dve_summary: Option<FrontSummary>,
    pub overshoot_verdict: Verdict,
    pub darcy_verdict: Verdict,
    pub front_verdict: Verdict,
}

impl CompareReport {
    pub fn verdicts(&self) -> [(&'static str, Verdict); 3] {
        [
            ("brinkman_overshoot", self.overshoot_verdict),
            ("darcy_no_overshoot", self.darcy_verdict),
            ("brinkman_front_behind", self.front_verdict),
        ]
    }

    pub fn passed(&self) -> bool {
        self.verdicts().iter().all(|(_, v)| *v == Verdict::Pass)
    }

    pub fn table_csv(&self) -> String {
        let mut out = String::from("model,beta2,overshoot_max,front_position,front_width,max_saturation\n");
        for (name, beta2, s) in [("bve", self.bve_beta2, self.bve_summary), ("dve", self.dve_beta2, self.dve_summary)] {
            let _ = writeln!(
                out,
                "{name},{beta2:.16e},{},{},{},{}",
                cell(s.map(|s| s.overshoot_max)),
                cell(s.and_then(|s| s.front_position)),
                cell(s.and_then(|s| s.front_width)),
                cell(s.map(|s| s.max_saturation)),
            );
        }
        out.push_str("verdict,value\n");
        for (name, v) in self.verdicts() {
            let _ = writeln!(out, "{name},{}", v.name());
        }
        out
    }
}

/// Runs the same setup with `bve_beta2` and `dve_beta2` (normally
/// [`COMPARE_BVE_BETA2`] and 0) and checks that the first overshoots the
/// plateau by at least [`OVERSHOOT_MIN`], the second stays below it, and the
/// first front trails the second.
pub fn run_compare(base: &RunConfig, bve_beta2: f64, dve_beta2: f64) -> Result<CompareReport, DriverError> {
    let coeffs = CoefficientSet::corey(base.sim.viscosity_ratio)?;
    let plateau = base.initial.plateau();
    let (bve, dve) = rayon::join(
        || run(&with_beta2(&base.sim, bve_beta2), &coeffs, &base.initial),
        || run(&with_beta2(&base.sim, dve_beta2), &coeffs, &base.initial),
    );
    let bve_summary = bve.as_ref().ok().map(|o| FrontSummary::of(o, plateau));
    let dve_summary = dve.as_ref().ok().map(|o| FrontSummary::of(o, plateau));

    let (overshoot_verdict, darcy_verdict, front_verdict) = match (bve_summary, dve_summary) {
        (Some(b), Some(d)) => {
            let still = b.max_saturation <= 0.0 && d.max_saturation <= 0.0;
            let fronts = b.front_position.zip(d.front_position);
            if still {
                (Verdict::Degenerate, Verdict::Degenerate, Verdict::Degenerate)
            } else {
                (
                    Verdict::from_bool(b.overshoot_max >= OVERSHOOT_MIN),
                    Verdict::from_bool(d.overshoot_max <= DARCY_OVERSHOOT_MAX),
                    fronts.map_or(Verdict::Degenerate, |(bp, dp)| Verdict::from_bool(bp <= dp)),
                )
            }
        }
        _ => (Verdict::Fail, Verdict::Fail, Verdict::Fail),
    };
    Ok(CompareReport {
        bve_beta2,
        dve_beta2,
        bve,
        dve,
        bve_summary,
        dve_summary,
        overshoot_verdict,
        darcy_verdict,
        front_verdict,
    })
}
