//! Scalar functionals of saturation snapshots.

use crate::grid::{gradient_norm_sq, BoundaryConditions, ScalarField};

/// Height of the line on which fronts are measured.
pub const FRONT_LINE_Z: f64 = 0.5;
/// Level used for the front position.
pub const FRONT_LEVEL: f64 = 0.5;
/// Saturation levels bracketing the smeared zone for the front width.
pub const WIDTH_LEVELS: (f64, f64) = (0.1, 0.8);

/// `max S − plateau`; positive values mean the saturation overshoots the injected level.
pub fn overshoot_max(s: &ScalarField, plateau: f64) -> f64 {
    s.max() - plateau
}

/// `∫ S`.
pub fn total_mass(s: &ScalarField) -> f64 {
    s.integral()
}

/// `‖S‖² + β²‖∇_h S‖²`.
pub fn energy(s: &ScalarField, beta2: f64, bc: &BoundaryConditions) -> f64 {
    let grad = if beta2 == 0.0 { 0.0 } else { gradient_norm_sq(s, bc) };
    s.l2_norm_sq() + beta2 * grad
}

/// Saturation along the horizontal line `z = z_line`, linearly interpolated
/// between the two rows of cell centres that bracket it.
pub fn line_profile(s: &ScalarField, z_line: f64) -> Vec<f64> {
    let g = s.grid();
    let pos = (z_line / g.dz() - 0.5).clamp(0.0, (g.nz() - 1) as f64);
    let j0 = (pos.floor() as usize).min(g.nz() - 1);
    let j1 = (j0 + 1).min(g.nz() - 1);
    let t = pos - j0 as f64;
    (0..g.nx()).map(|i| (1.0 - t) * s[(i, j0)] + t * s[(i, j1)]).collect()
}

/// Largest `x` on the line where the profile is at or above `level`, linearly
/// interpolated between cell centres. `None` if the level is never reached.
pub fn locate_front(s: &ScalarField, level: f64, z_line: f64) -> Option<f64> {
    let g = s.grid();
    let line = line_profile(s, z_line);
    let last = line.iter().rposition(|&v| v >= level)?;
    if last + 1 == line.len() {
        return Some(1.0);
    }
    let (a, b) = (line[last], line[last + 1]);
    let frac = if a > b { (a - level) / (a - b) } else { 0.0 };
    Some(g.x(last) + frac * g.dx())
}

/// Front position; `0` when the level is never reached and `1` when it is
/// reached in the last cell.
pub fn front_position(s: &ScalarField, level: f64, z_line: f64) -> f64 {
    locate_front(s, level, z_line).unwrap_or(0.0)
}

/// `pos(lo) − pos(hi)` for saturation levels `lo < hi`; `None` if either
/// front is absent.
pub fn front_width(s: &ScalarField, lo_level: f64, hi_level: f64, z_line: f64) -> Option<f64> {
    let lo = locate_front(s, lo_level, z_line)?;
    let hi = locate_front(s, hi_level, z_line)?;
    Some((lo - hi).max(0.0))
}

/// Diagnostics after one completed step (or of the initial state).
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub total_mass: f64,
    pub energy: f64,
    /// `‖∇_h S‖²` of the new state.
    pub gradient_norm_sq: f64,
    /// `‖S^n − S^{n−1}‖² + β²‖∇_h(S^n − S^{n−1})‖²`.
    pub increment: f64,
    pub overshoot_max: f64,
    pub front_position: f64,
    pub front_width: Option<f64>,
    pub incompressibility_residual: f64,
    pub cg_iterations: usize,
    /// Net advective outflow through the boundary during the step, `∫_∂Ω f(S) V·n`.
    pub boundary_outflow: f64,
}

/// Time series of a run: the initial state plus one record per completed step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagnosticsReport {
    pub initial: Option<StepRecord>,
    pub steps: Vec<StepRecord>,
}

impl DiagnosticsReport {
    pub fn last(&self) -> Option<&StepRecord> {
        self.steps.last().or(self.initial.as_ref())
    }

    pub fn max_overshoot(&self) -> f64 {
        self.initial.iter().chain(&self.steps).map(|r| r.overshoot_max).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_dt(&self) -> Option<f64> {
        self.steps.iter().map(|r| r.dt).reduce(f64::min)
    }

    pub fn total_cg_iterations(&self) -> usize {
        self.steps.iter().map(|r| r.cg_iterations).sum()
    }

    /// `min_n (E⁰ − Eⁿ − 2β Σ_{k≤n} Δt_k ‖∇Sᵏ‖²)` over the recorded steps,
    /// with `E = ‖S‖² + β²‖∇S‖²`; negative when the discrete energy
    /// inequality fails. `None` without an initial record.
    pub fn energy_margin(&self, beta2: f64) -> Option<f64> {
        let e0 = self.initial.as_ref()?.energy;
        let beta = beta2.sqrt();
        let mut dissipated = 0.0;
        let mut margin = f64::INFINITY;
        for r in &self.steps {
            dissipated += 2.0 * beta * r.dt * r.gradient_norm_sq;
            margin = margin.min(e0 - r.energy - dissipated);
        }
        Some(if self.steps.is_empty() { 0.0 } else { margin })
    }
}

/// Outcome of one named verification check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name, passed, detail: detail.into() }
    }
}

/// A list of checks, printed one `name PASS|FAIL detail` line each.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckReport {
    pub checks: Vec<Check>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl std::fmt::Display for CheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            writeln!(f, "{:<24} {}  {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail)?;
        }
        Ok(())
    }
}
