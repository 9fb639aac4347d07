//! Spectral checks of the a priori estimates along Galerkin trajectories.

use super::{CoefVector, SineBasis, Trajectory};
use std::fmt;

/// Per-step energy inequality
///
/// ```text
/// ‖Sⁿ‖² + β²‖∇Sⁿ‖² + 2β Σ_{k≤n} Δt ‖∇Sᵏ‖² ≤ ‖S⁰‖² + β²‖∇S⁰‖²
/// ```
///
/// obtained by testing slab `k` with `Sᵏ` and summing. It implies the
/// `ess sup` bound over `t > 0` of the piecewise-constant interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub initial: f64,
    /// `‖Sⁿ‖² + β²‖∇Sⁿ‖²`, `n = 0..=N`.
    pub energies: Vec<f64>,
    /// `2β Σ_{k≤n} Δt ‖∇Sᵏ‖²`.
    pub dissipation: Vec<f64>,
    /// `min_{n≥1} (rhs − lhs)`; negative when the inequality is violated.
    pub margin: f64,
    pub slack: f64,
    pub passed: bool,
}

impl fmt::Display for EnergyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "energy estimate: {} (initial {:.6e}, final {:.6e}, dissipation {:.6e}, margin {:.3e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.initial,
            self.energies.last().copied().unwrap_or(0.0),
            self.dissipation.last().copied().unwrap_or(0.0),
            self.margin
        )
    }
}

/// Checks the energy inequality at every slab with tolerance
/// `slack·(1 + E⁰)`.
pub fn check_energy_estimate(coefs: &[CoefVector], basis: &SineBasis, beta2: f64, dt: f64, slack: f64) -> EnergyReport {
    let beta = beta2.sqrt();
    let energy = |c: &CoefVector| basis.l2_norm_sq(c) + beta2 * basis.gradient_norm_sq(c);
    let energies: Vec<f64> = coefs.iter().map(energy).collect();
    let initial = energies.first().copied().unwrap_or(0.0);
    let mut dissipation = Vec::with_capacity(coefs.len());
    let mut acc = 0.0;
    let mut margin = f64::INFINITY;
    for (n, c) in coefs.iter().enumerate() {
        if n > 0 {
            acc += 2.0 * beta * dt * basis.gradient_norm_sq(c);
        }
        dissipation.push(acc);
        if n > 0 || coefs.len() == 1 {
            margin = margin.min(initial - energies[n] - acc);
        }
    }
    if coefs.is_empty() {
        margin = 0.0;
    }
    let passed = margin >= -slack * (1.0 + initial);
    EnergyReport { initial, energies, dissipation, margin, slack, passed }
}

/// `Σₙ Δt (‖Sⁿ − Sⁿ⁻¹‖² + β²‖∇(Sⁿ − Sⁿ⁻¹)‖²)`, the space-time norm of the
/// time increments of the piecewise-constant interpolant.
pub fn increment_energy(traj: &Trajectory, basis: &SineBasis) -> f64 {
    traj.coefs
        .windows(2)
        .map(|p| {
            let d = CoefVector(p[1].0.iter().zip(&p[0].0).map(|(a, b)| a - b).collect());
            traj.dt * (basis.l2_norm_sq(&d) + traj.beta2 * basis.gradient_norm_sq(&d))
        })
        .sum()
}

/// Least-squares slope of `log y` against `log x`. `None` with fewer than
/// two points or any non-positive value.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncrementReport {
    /// Abscissa of the study (`Δt` or `β²`).
    pub parameters: Vec<f64>,
    pub increments: Vec<f64>,
    /// `increment · β² / Δt²` per run.
    pub constants: Vec<f64>,
    /// `None` when every increment vanishes.
    pub slope: Option<f64>,
    pub passed: bool,
}

impl fmt::Display for IncrementReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let slope = self.slope.map(|s| format!("{s:.4}")).unwrap_or_else(|| "n/a".into());
        let c = self.constants.iter().copied().fold(0.0, f64::max);
        write!(f, "{} (slope {slope}, largest C {c:.4e}, {} runs)", if self.passed { "PASS" } else { "FAIL" }, self.parameters.len())
    }
}

/// Fits the log-log slope of [`increment_energy`] over `runs` against
/// `parameter(run)` and checks it lies in `range`. Identically zero
/// increments pass vacuously.
pub fn check_increment_estimate(
    runs: &[Trajectory],
    basis: &SineBasis,
    parameter: impl Fn(&Trajectory) -> f64,
    range: (f64, f64),
) -> IncrementReport {
    let parameters: Vec<f64> = runs.iter().map(&parameter).collect();
    let increments: Vec<f64> = runs.iter().map(|t| increment_energy(t, basis)).collect();
    let constants = runs.iter().zip(&increments).map(|(t, i)| i * t.beta2 / (t.dt * t.dt)).collect();
    let vacuous = increments.iter().all(|v| *v == 0.0);
    let slope = if vacuous { None } else { loglog_slope(&parameters, &increments) };
    let passed = vacuous || slope.is_some_and(|s| s >= range.0 && s <= range.1);
    IncrementReport { parameters, increments, constants, slope, passed }
}
