//! Mass-conservative finite-volume time stepping.
//!
//! One step freezes the velocity and the diffusivity at `S^n`, treats
//! advection explicitly and the pseudo-parabolic and diffusion terms
//! implicitly:
//!
//! ```text
//! [(I − β²Δ_h) + Δt·β·L_H(S^n)] S^{n+1} = (I − β²Δ_h) S^n − Δt·A_h(S^n)
//! ```
//!
//! with `L_H = −∇_h·(H∇_h ·)`. It is solved for the increment
//! `δ = S^{n+1} − S^n`, which keeps the boundary data out of the unknown and
//! makes the operator the same symmetric positive-definite matrix for every
//! boundary mode. With `β² = 0` the step is plain forward-Euler upwind
//! transport.

mod advection;
mod implicit;

pub use advection::{advective_divergence, Advection};
pub use implicit::{ImplicitOperator, LinePreconditioner};

use crate::coefficients::CoefficientSet;
use crate::diagnostics::{self, DiagnosticsReport, StepRecord};
use crate::grid::{gradient_norm_sq, div_kappa_grad, BoundaryConditions, FaceCoefficients, Grid, GridError, ScalarField};
use crate::linear_solver::{cg_solve, SolverError};
use crate::velocity::{incompressibility_residual, VelocityError, VelocityField};
use thiserror::Error;

/// Boundary setting of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    /// Prescribed inflow profile at `x = 0`, free outflow at `x = 1`,
    /// impermeable top and bottom.
    Experiment,
    /// `S = 0` on the whole boundary.
    Analysis,
    /// Periodic in `x`, impermeable top and bottom. Nothing enters or leaves.
    Closed,
}

impl BoundaryMode {
    pub fn name(&self) -> &'static str {
        match self {
            BoundaryMode::Experiment => "experiment",
            BoundaryMode::Analysis => "analysis",
            BoundaryMode::Closed => "closed",
        }
    }

    pub fn boundary_conditions(&self, grid: &Grid, inflow: impl Fn(f64) -> f64) -> BoundaryConditions {
        match self {
            BoundaryMode::Experiment => BoundaryConditions::inflow((0..grid.nz()).map(|j| inflow(grid.z(j))).collect()),
            BoundaryMode::Analysis => BoundaryConditions::homogeneous_dirichlet(grid),
            BoundaryMode::Closed => BoundaryConditions::periodic_x(),
        }
    }
}

/// Capillary diffusivity in the implicit diffusion term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffusionModel {
    /// `H(S)` from the coefficient set.
    Nonlinear,
    /// `H ≡ 1`. The setting in which the discrete energy inequality with the
    /// plain gradient norm holds.
    Unit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub nx: usize,
    pub nz: usize,
    /// `β²`; zero selects the Darcy limit.
    pub beta2: f64,
    pub viscosity_ratio: f64,
    pub end_time: f64,
    pub cfl: f64,
    pub bc_mode: BoundaryMode,
    pub dt_max: f64,
    /// Relative residual of the implicit solve.
    pub solver_tol: f64,
    /// Clip `S` to `[0, 1]` after every step.
    pub clamp: bool,
    pub diffusion: DiffusionModel,
    /// Output times in `(0, T]`. Empty means `0.2T`, `0.5T` and `T`.
    pub snapshot_times: Vec<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            nx: 500,
            nz: 20,
            beta2: 1e-2,
            viscosity_ratio: 2.0,
            end_time: 0.5,
            cfl: 0.5,
            bc_mode: BoundaryMode::Experiment,
            dt_max: 1e-3,
            solver_tol: 1e-10,
            clamp: false,
            diffusion: DiffusionModel::Nonlinear,
            snapshot_times: Vec::new(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid {field}: {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: String,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |field, reason: &str| Err(ConfigError { field, reason: reason.to_string() });
        if self.nx < 4 || self.nz < 4 {
            return fail(if self.nx < 4 { "nx" } else { "nz" }, "at least 4 cells are required");
        }
        if !(self.beta2 >= 0.0 && self.beta2.is_finite()) {
            return fail("beta2", "must be finite and non-negative");
        }
        if !(self.viscosity_ratio > 0.0 && self.viscosity_ratio.is_finite()) {
            return fail("viscosity_ratio", "must be finite and positive");
        }
        if !(self.end_time >= 0.0 && self.end_time.is_finite()) {
            return fail("end_time", "must be finite and non-negative");
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return fail("cfl", "must lie in (0, 1]");
        }
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return fail("dt_max", "must be finite and positive");
        }
        if !(self.solver_tol > 0.0 && self.solver_tol < 1.0) {
            return fail("solver_tol", "must lie in (0, 1)");
        }
        if let Some(t) = self.snapshot_times.iter().find(|t| !(**t >= 0.0 && **t <= self.end_time)) {
            return Err(ConfigError { field: "snapshot_times", reason: format!("{t} is outside [0, {}]", self.end_time) });
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, GridError> {
        Grid::new(self.nx, self.nz)
    }

    pub fn beta(&self) -> f64 {
        self.beta2.sqrt()
    }

    /// Iteration cap of the implicit solve, `10·√(nx·nz)`.
    pub fn max_cg_iterations(&self) -> usize {
        (10.0 * ((self.nx * self.nz) as f64).sqrt()).ceil() as usize
    }

    /// Sorted output times in `(0, T]`, always ending with `T`.
    pub fn snapshot_schedule(&self) -> Vec<f64> {
        let t = self.end_time;
        let mut times: Vec<f64> = if self.snapshot_times.is_empty() {
            vec![0.2 * t, 0.5 * t, t]
        } else {
            self.snapshot_times.iter().copied().filter(|&s| s > 0.0).collect()
        };
        times.push(t);
        times.sort_by(f64::total_cmp);
        times.dedup();
        times.retain(|&s| s > 0.0);
        times
    }
}

/// Initial and boundary data of a run.
pub trait InitialData {
    fn saturation(&self, x: f64, z: f64) -> f64;
    /// Boundary value at `x = 0` in experiment mode.
    fn inflow(&self, z: f64) -> f64;
    /// Level against which overshoot is measured.
    fn plateau(&self) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeStepState {
    pub t: f64,
    pub s: ScalarField,
    pub s_prev: ScalarField,
    /// Size of the step that produced `s`; zero before the first step.
    pub dt_last: f64,
}

impl TimeStepState {
    pub fn initial(s: ScalarField) -> Self {
        Self { t: 0.0, s_prev: s.clone(), s, dt_last: 0.0 }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("velocity reconstruction failed at t = {t}: {source}")]
    Velocity { t: f64, source: VelocityError },
    #[error("implicit solve failed at t = {t}, dt = {dt:e}: {source}\n{dump}")]
    Solver { t: f64, dt: f64, source: SolverError, dump: String },
    #[error("non-finite saturation after the step from t = {t}")]
    NonFinite { t: f64 },
}

/// Result of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: TimeStepState,
    pub cg_iterations: usize,
    /// `∫_∂Ω f(S^n) V·n` over the step's frozen velocity.
    pub boundary_outflow: f64,
    /// Discrete incompressibility residual of the frozen velocity.
    pub velocity_residual: f64,
}

/// A configured time stepper.
#[derive(Debug, Clone)]
pub struct Stepper {
    cfg: SimConfig,
    coeffs: CoefficientSet,
    grid: Grid,
    bc: BoundaryConditions,
}

impl Stepper {
    pub fn new(cfg: SimConfig, coeffs: CoefficientSet, bc: BoundaryConditions) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let grid = cfg.grid().map_err(|e| ConfigError { field: "nx", reason: e.to_string() })?;
        Ok(Self { cfg, coeffs, grid, bc })
    }

    /// Stepper for `bc_mode` with the inflow profile of `ic`.
    pub fn for_initial_data(cfg: SimConfig, coeffs: CoefficientSet, ic: &dyn InitialData) -> Result<Self, ConfigError> {
        let grid = cfg.grid().map_err(|e| ConfigError { field: "nx", reason: e.to_string() })?;
        let bc = cfg.bc_mode.boundary_conditions(&grid, |z| ic.inflow(z));
        Self::new(cfg, coeffs, bc)
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn coefficients(&self) -> &CoefficientSet {
        &self.coeffs
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn boundary_conditions(&self) -> &BoundaryConditions {
        &self.bc
    }

    pub fn initial_state(&self, ic: &dyn InitialData) -> TimeStepState {
        TimeStepState::initial(ScalarField::from_fn(self.grid, |x, z| ic.saturation(x, z)))
    }

    pub fn velocity(&self, state: &TimeStepState) -> Result<VelocityField, StepError> {
        VelocityField::from_saturation(&state.s, &self.coeffs, self.bc.topology())
            .map_err(|source| StepError::Velocity { t: state.t, source })
    }

    /// `cfl / (L_f · max_cells ½ Σ_faces |v_f|/h_f)`, capped by `dt_max` and
    /// `T − t`; in one dimension this is `cfl · dx / (|u| · L_f)`. Returns
    /// `dt_max` (or `T − t`) when nothing moves. Explicit upwind transport is
    /// monotone for `cfl ≤ 1`.
    pub fn choose_dt(&self, state: &TimeStepState, v: &VelocityField) -> f64 {
        let rate = v.max_cell_rate(self.bc.topology()) * self.coeffs.lipschitz_f();
        let cfl_dt = if rate > 0.0 { self.cfg.cfl / rate } else { f64::INFINITY };
        let remaining = self.cfg.end_time - state.t;
        let dt = cfl_dt.min(self.cfg.dt_max);
        if remaining > 0.0 {
            dt.min(remaining)
        } else {
            dt
        }
    }

    /// Advances by `dt` using the velocity frozen at the current state.
    pub fn step(&self, state: &TimeStepState, v: &VelocityField, dt: f64) -> Result<StepOutcome, StepError> {
        let s = &state.s;
        let adv = advective_divergence(s, v, &self.coeffs, &self.bc);
        let n = self.grid.len();
        let mut rhs: Vec<f64> = adv.divergence.values().iter().map(|d| -dt * d).collect();

        let (delta, cg_iterations) = if self.cfg.beta2 == 0.0 {
            (rhs, 0)
        } else {
            let beta = self.cfg.beta();
            let kappa = match self.cfg.diffusion {
                DiffusionModel::Nonlinear => FaceCoefficients::arithmetic_mean(s, &self.bc, |x| self.coeffs.diffusion_ext(x)),
                DiffusionModel::Unit => FaceCoefficients::ones(&self.grid),
            };
            let diffusion = div_kappa_grad(s, &self.bc, &kappa);
            for (r, d) in rhs.iter_mut().zip(diffusion.values()) {
                *r += dt * beta * d;
            }
            let op = ImplicitOperator::new(self.grid, &self.bc, self.cfg.beta2, dt * beta, &kappa);
            let precond = LinePreconditioner::new(&op);
            // warm start from the previous increment rescaled to this step
            let x0: Vec<f64> = if state.dt_last > 0.0 {
                let scale = dt / state.dt_last;
                s.values().iter().zip(state.s_prev.values()).map(|(a, b)| (a - b) * scale).collect()
            } else {
                vec![0.0; n]
            };
            match cg_solve(&op, &rhs, &x0, self.cfg.solver_tol, self.cfg.max_cg_iterations(), &precond) {
                Ok(out) => (out.x, out.iterations),
                Err(source) => {
                    let dump = format!(
                        "state: t = {}, min S = {}, max S = {}, mass = {}, max |A_h| = {}",
                        state.t,
                        s.min(),
                        s.max(),
                        s.integral(),
                        adv.divergence.values().iter().fold(0.0f64, |m, d| m.max(d.abs())),
                    );
                    return Err(StepError::Solver { t: state.t, dt, source, dump });
                }
            }
        };

        let mut next = s.clone();
        for (x, d) in next.values_mut().iter_mut().zip(&delta) {
            *x += d;
            if self.cfg.clamp {
                *x = x.clamp(0.0, 1.0);
            }
        }
        if next.check_finite().is_err() {
            return Err(StepError::NonFinite { t: state.t });
        }
        Ok(StepOutcome {
            state: TimeStepState { t: state.t + dt, s: next, s_prev: s.clone(), dt_last: dt },
            cg_iterations,
            boundary_outflow: adv.boundary_outflow,
            velocity_residual: incompressibility_residual(v, self.bc.topology()),
        })
    }

    /// Diagnostics of `state`; `incoming` describes the step that produced it.
    pub fn record(&self, step: usize, state: &TimeStepState, plateau: f64, incoming: Option<&StepOutcome>) -> StepRecord {
        let beta2 = self.cfg.beta2;
        let s = &state.s;
        let grad = gradient_norm_sq(s, &self.bc);
        let increment = if state.dt_last > 0.0 {
            let mut d = s.clone();
            d.axpy(-1.0, &state.s_prev);
            let g = if beta2 > 0.0 { gradient_norm_sq(&d, &self.bc.homogeneous()) } else { 0.0 };
            d.l2_norm_sq() + beta2 * g
        } else {
            0.0
        };
        StepRecord {
            step,
            t: state.t,
            dt: state.dt_last,
            total_mass: diagnostics::total_mass(s),
            energy: s.l2_norm_sq() + beta2 * grad,
            gradient_norm_sq: grad,
            increment,
            overshoot_max: diagnostics::overshoot_max(s, plateau),
            front_position: diagnostics::front_position(s, diagnostics::FRONT_LEVEL, diagnostics::FRONT_LINE_Z),
            front_width: diagnostics::front_width(
                s,
                diagnostics::WIDTH_LEVELS.0,
                diagnostics::WIDTH_LEVELS.1,
                diagnostics::FRONT_LINE_Z,
            ),
            incompressibility_residual: incoming.map_or(0.0, |o| o.velocity_residual),
            cg_iterations: incoming.map_or(0, |o| o.cg_iterations),
            boundary_outflow: incoming.map_or(0.0, |o| o.boundary_outflow),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub field: ScalarField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: DiagnosticsReport,
    /// The initial state followed by every scheduled output time reached.
    pub snapshots: Vec<Snapshot>,
    pub final_state: TimeStepState,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// A step failed; everything computed before it is kept.
    #[error("{source}")]
    Step { source: StepError, partial: Box<RunOutput> },
}

/// Runs to `T` and collects snapshots and per-step diagnostics.
pub fn run(cfg: &SimConfig, coeffs: &CoefficientSet, ic: &dyn InitialData) -> Result<RunOutput, RunError> {
    run_with_hook(cfg, coeffs, ic, &mut |_, _| {})
}

/// As [`run`], calling `hook` after every completed step.
pub fn run_with_hook(
    cfg: &SimConfig,
    coeffs: &CoefficientSet,
    ic: &dyn InitialData,
    hook: &mut dyn FnMut(&TimeStepState, &StepRecord),
) -> Result<RunOutput, RunError> {
    let stepper = Stepper::for_initial_data(cfg.clone(), *coeffs, ic)?;
    stepper.run_from(stepper.initial_state(ic), ic.plateau(), hook)
}

impl Stepper {
    /// Steps `state` to `T`, hitting every scheduled output time exactly.
    pub fn run_from(
        &self,
        state: TimeStepState,
        plateau: f64,
        hook: &mut dyn FnMut(&TimeStepState, &StepRecord),
    ) -> Result<RunOutput, RunError> {
        let end = self.cfg.end_time;
        let schedule = self.cfg.snapshot_schedule();
        let mut out = RunOutput {
            report: DiagnosticsReport { initial: Some(self.record(0, &state, plateau, None)), steps: Vec::new() },
            snapshots: vec![Snapshot { t: state.t, field: state.s.clone() }],
            final_state: state,
        };
        let mut next_snapshot = schedule.iter().position(|&t| t > out.final_state.t);
        let mut step = 0;
        while out.final_state.t < end {
            let state = &out.final_state;
            let outcome = self
                .velocity(state)
                .and_then(|v| {
                    let mut dt = self.choose_dt(state, &v);
                    if let Some(k) = next_snapshot {
                        dt = dt.min(schedule[k] - state.t);
                    }
                    self.step(state, &v, dt)
                });
            let mut outcome = match outcome {
                Ok(o) => o,
                Err(source) => return Err(RunError::Step { source, partial: Box::new(out) }),
            };
            step += 1;
            // land exactly on output times despite rounding in t + dt
            if let Some(k) = next_snapshot {
                if (outcome.state.t - schedule[k]).abs() <= 1e-12 * end.max(1.0) {
                    outcome.state.t = schedule[k];
                }
            }
            let record = self.record(step, &outcome.state, plateau, Some(&outcome));
            hook(&outcome.state, &record);
            out.report.steps.push(record);
            out.final_state = outcome.state;
            if let Some(k) = next_snapshot {
                if out.final_state.t >= schedule[k] {
                    out.snapshots.push(Snapshot { t: schedule[k], field: out.final_state.s.clone() });
                    next_snapshot = (k + 1 < schedule.len()).then_some(k + 1);
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Data<F: Fn(f64, f64) -> f64> {
        f: F,
        inflow: f64,
    }

    impl<F: Fn(f64, f64) -> f64> InitialData for Data<F> {
        fn saturation(&self, x: f64, z: f64) -> f64 {
            (self.f)(x, z)
        }
        fn inflow(&self, _: f64) -> f64 {
            self.inflow
        }
        fn plateau(&self) -> f64 {
            self.inflow
        }
    }

    fn corey() -> CoefficientSet {
        CoefficientSet::corey(2.0).unwrap()
    }

    fn small(beta2: f64, mode: BoundaryMode) -> SimConfig {
        SimConfig { nx: 32, nz: 8, beta2, end_time: 0.05, bc_mode: mode, ..SimConfig::default() }
    }

    #[test]
    fn default_config_is_valid() {
        let cfg = SimConfig::default();
        cfg.validate().unwrap();
        assert_eq!((cfg.nx, cfg.nz, cfg.cfl, cfg.solver_tol), (500, 20, 0.5, 1e-10));
        assert_eq!(cfg.max_cg_iterations(), 1000);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = SimConfig::default();
        let bad = [
            SimConfig { beta2: -1e-3, ..base.clone() },
            SimConfig { cfl: 0.0, ..base.clone() },
            SimConfig { cfl: 1.5, ..base.clone() },
            SimConfig { end_time: f64::NAN, ..base.clone() },
            SimConfig { viscosity_ratio: 0.0, ..base.clone() },
            SimConfig { nx: 3, ..base.clone() },
            SimConfig { snapshot_times: vec![2.0], ..base.clone() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn schedule_defaults_and_ordering() {
        let cfg = SimConfig { end_time: 1.0, ..SimConfig::default() };
        assert_eq!(cfg.snapshot_schedule(), vec![0.2, 0.5, 1.0]);
        let cfg = SimConfig { end_time: 1.0, snapshot_times: vec![0.7, 0.1, 0.7, 0.0], ..SimConfig::default() };
        assert_eq!(cfg.snapshot_schedule(), vec![0.1, 0.7, 1.0]);
    }

    #[test]
    fn zero_velocity_gives_dt_max() {
        let cfg = small(1e-2, BoundaryMode::Closed);
        let st = Stepper::new(cfg.clone(), corey(), BoundaryConditions::periodic_x()).unwrap();
        let state = TimeStepState::initial(ScalarField::zeros(*st.grid()));
        assert_eq!(st.choose_dt(&state, &VelocityField::zero(*st.grid())), cfg.dt_max);
    }

    #[test]
    fn doubling_cfl_doubles_dt() {
        let mk = |cfl| {
            let cfg = SimConfig { cfl, dt_max: 1.0, ..small(1e-2, BoundaryMode::Closed) };
            Stepper::new(cfg, corey(), BoundaryConditions::periodic_x()).unwrap()
        };
        let (a, b) = (mk(0.2), mk(0.4));
        let state = TimeStepState::initial(ScalarField::from_fn(*a.grid(), |x, z| 0.5 + 0.3 * (6.0 * x + z).sin()));
        let v = a.velocity(&state).unwrap();
        let (da, db) = (a.choose_dt(&state, &v), b.choose_dt(&state, &v));
        assert!((db - 2.0 * da).abs() < 1e-15 * db);
    }

    #[test]
    fn dt_never_passes_end_time() {
        let cfg = SimConfig { end_time: 1e-4, dt_max: 1.0, ..small(1e-2, BoundaryMode::Closed) };
        let st = Stepper::new(cfg, corey(), BoundaryConditions::periodic_x()).unwrap();
        let mut state = TimeStepState::initial(ScalarField::zeros(*st.grid()));
        state.t = 0.6e-4;
        let dt = st.choose_dt(&state, &VelocityField::zero(*st.grid()));
        assert!((dt - 0.4e-4).abs() < 1e-18);
    }

    #[test]
    fn constant_state_is_preserved() {
        for beta2 in [0.0, 1e-4, 1e-2] {
            let ic = Data { f: |_, _| 0.5, inflow: 0.5 };
            let cfg = small(beta2, BoundaryMode::Closed);
            let out = run(&cfg, &corey(), &ic).unwrap();
            let dev = out.final_state.s.values().iter().fold(0.0f64, |m, v| m.max((v - 0.5).abs()));
            assert!(dev < 1e-12, "β² = {beta2}: {dev}");
        }
    }

    #[test]
    fn constant_inflow_state_is_preserved_in_experiment_mode() {
        let ic = Data { f: |_, _| 0.9, inflow: 0.9 };
        let out = run(&small(1e-3, BoundaryMode::Experiment), &corey(), &ic).unwrap();
        let dev = out.final_state.s.values().iter().fold(0.0f64, |m, v| m.max((v - 0.9).abs()));
        assert!(dev < 1e-10, "{dev}");
    }

    #[test]
    fn zero_data_stays_zero_in_analysis_mode() {
        let ic = Data { f: |_, _| 0.0, inflow: 0.0 };
        let out = run(&small(1e-2, BoundaryMode::Analysis), &corey(), &ic).unwrap();
        assert!(out.final_state.s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_end_time_returns_initial_snapshot_only() {
        let ic = Data { f: |x, _| x, inflow: 0.0 };
        let cfg = SimConfig { end_time: 0.0, ..small(1e-2, BoundaryMode::Analysis) };
        let out = run(&cfg, &corey(), &ic).unwrap();
        assert_eq!(out.snapshots.len(), 1);
        assert_eq!(out.snapshots[0].t, 0.0);
        assert!(out.report.steps.is_empty());
    }

    #[test]
    fn run_lands_on_snapshot_times_and_end_time() {
        let ic = Data { f: |x, z| 0.2 + 0.5 * x * z, inflow: 0.9 };
        let cfg = SimConfig { snapshot_times: vec![0.013, 0.031], ..small(1e-3, BoundaryMode::Experiment) };
        let out = run(&cfg, &corey(), &ic).unwrap();
        let times: Vec<f64> = out.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(times, vec![0.0, 0.013, 0.031, 0.05]);
        assert_eq!(out.final_state.t, 0.05);
        assert_eq!(out.report.steps.len(), out.report.steps.last().unwrap().step);
    }

    #[test]
    fn darcy_limit_obeys_maximum_principle() {
        let ic = Data { f: |x, z| if x < 0.3 && z > 0.4 { 0.9 } else { 0.1 * z }, inflow: 0.9 };
        let cfg = SimConfig { nx: 64, nz: 8, beta2: 0.0, end_time: 0.2, ..SimConfig::default() };
        let out = run(&cfg, &corey(), &ic).unwrap();
        for s in &out.snapshots {
            assert!(s.field.max() <= 0.9 + 1e-12, "{}", s.field.max());
            assert!(s.field.min() >= -1e-12);
        }
    }

    #[test]
    fn closed_box_conserves_mass() {
        let ic = Data { f: |x, z| 0.3 + 0.4 * (-(30.0 * ((x - 0.4).powi(2) + (z - 0.5).powi(2)))).exp(), inflow: 0.0 };
        for beta2 in [0.0, 1e-3] {
            let cfg = small(beta2, BoundaryMode::Closed);
            let out = run(&cfg, &corey(), &ic).unwrap();
            let m0 = out.report.initial.as_ref().unwrap().total_mass;
            let mut prev = m0;
            for r in &out.report.steps {
                assert!((r.total_mass - prev).abs() <= 1e-10 * prev, "{} {}", r.total_mass, prev);
                prev = r.total_mass;
            }
        }
    }

    #[test]
    fn experiment_mass_balance_matches_boundary_flux() {
        // in the Darcy limit the only boundary flux is advective
        let ic = Data { f: |_, _| 0.0, inflow: 0.9 };
        let cfg = SimConfig { nx: 64, nz: 8, beta2: 0.0, end_time: 0.1, ..SimConfig::default() };
        let out = run(&cfg, &corey(), &ic).unwrap();
        let mut prev = 0.0;
        for r in &out.report.steps {
            let expect = prev - r.dt * r.boundary_outflow;
            assert!((r.total_mass - expect).abs() < 1e-13, "{} {}", r.total_mass, expect);
            prev = r.total_mass;
        }
    }

    #[test]
    fn implicit_step_is_first_order_in_time() {
        // self-convergence of S(T) under dt halving with fixed steps
        let ic = Data { f: |x, z| 0.3 + 0.4 * (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * z).sin(), inflow: 0.0 };
        let solve = |dt: f64| {
            let cfg = SimConfig { nx: 32, nz: 8, beta2: 1e-2, end_time: 0.02, dt_max: dt, bc_mode: BoundaryMode::Analysis, solver_tol: 1e-13, ..SimConfig::default() };
            run(&cfg, &corey(), &ic).unwrap().final_state.s
        };
        let dts = [2e-3, 1e-3, 5e-4, 2.5e-4];
        let sols: Vec<_> = dts.iter().map(|&dt| solve(dt)).collect();
        let diff = |a: &ScalarField, b: &ScalarField| {
            let mut d = a.clone();
            d.axpy(-1.0, b);
            d.l2_norm_sq().sqrt()
        };
        for k in 0..2 {
            let order = (diff(&sols[k], &sols[k + 1]) / diff(&sols[k + 1], &sols[k + 2])).log2();
            assert!((0.9..=1.1).contains(&order), "order {order}");
        }
    }

    #[test]
    fn failing_solver_keeps_partial_output() {
        // an unreachable tolerance exhausts the iteration cap on the first implicit step
        let ic = Data { f: |x, z| 0.2 + 0.6 * x * (1.0 - x) * z, inflow: 0.9 };
        let cfg = SimConfig { solver_tol: 1e-300, ..small(1e-2, BoundaryMode::Experiment) };
        match run(&cfg, &corey(), &ic) {
            Err(RunError::Step { source: StepError::Solver { source, dump, .. }, partial }) => {
                assert!(matches!(source, SolverError::NotConverged { iterations, .. } if iterations == cfg.max_cg_iterations()));
                assert!(dump.contains("max S"));
                assert_eq!(partial.snapshots.len(), 1);
                assert!(partial.report.initial.is_some());
            }
            other => panic!("expected a solver failure, got {other:?}"),
        }
    }
}
