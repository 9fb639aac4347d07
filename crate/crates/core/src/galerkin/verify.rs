//! The Galerkin verification suite behind `bve verify-galerkin`.

use super::{
    check_energy_estimate, check_increment_estimate, project_initial, run_trajectory, residual_k, CoefVector,
    GalerkinError, InitialDatum, SineBasis, SlabProblem, Trajectory, NEWTON_TOLERANCE,
};
use crate::coefficients::CoefficientSet;
use crate::diagnostics::{Check, CheckReport};
use crate::experiments::InitialCondition;
use crate::fv::{run, BoundaryMode, DiffusionModel, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub mx: usize,
    pub mz: usize,
    pub slabs: usize,
    pub end_time: f64,
    pub beta2: f64,
    pub viscosity_ratio: f64,
    /// Amplitude of the `a·sin(πx)·sin(πz)` initial data.
    pub amplitude: f64,
    pub energy_slack: f64,
    /// Slab counts of the `Δt` study (linear transport).
    pub dt_study_slabs: Vec<usize>,
    /// `β²` values of the fixed-`Δt` study.
    pub beta2_study: Vec<f64>,
    /// Modes per direction and slab count of the comparison with the
    /// finite-volume solver, and its grid.
    pub cross_modes: usize,
    pub cross_end_time: f64,
    pub cross_slabs: usize,
    pub cross_grid: usize,
    pub cross_tolerance: f64,
    pub seed: u64,
    pub probes: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            mx: 4,
            mz: 4,
            slabs: 20,
            end_time: 0.1,
            beta2: 1e-2,
            viscosity_ratio: 2.0,
            amplitude: 0.5,
            energy_slack: 1e-8,
            dt_study_slabs: vec![5, 10, 20, 40, 80],
            beta2_study: vec![1e-2, 5e-3, 2.5e-3, 1.25e-3],
            cross_modes: 8,
            cross_end_time: 0.05,
            cross_slabs: 20,
            cross_grid: 64,
            cross_tolerance: 0.05,
            seed: 0,
            probes: 100,
        }
    }
}

fn bump(amplitude: f64) -> impl Fn(f64, f64) -> f64 {
    move |x, z| amplitude * (PI * x).sin() * (PI * z).sin()
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> CoefVector {
    let c = CoefVector((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let norm = c.norm();
    CoefVector(c.0.iter().map(|v| v / norm).collect())
}

/// Runs every check. Only a setup error (invalid basis or coefficients)
/// aborts; solver failures become failed checks.
pub fn verify(cfg: &VerifyConfig) -> Result<CheckReport, GalerkinError> {
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let basis = SineBasis::new(cfg.mx, cfg.mz)?;
    let corey = CoefficientSet::corey(cfg.viscosity_ratio).map_err(|e| GalerkinError::Basis(e.to_string()))?;
    let linear = CoefficientSet::linear_transport();
    let dt = cfg.end_time / cfg.slabs as f64;
    let ic = bump(cfg.amplitude);
    let c0 = project_initial(InitialDatum::Analytic(&ic), &basis);

    checks.push(Check {
        name: "gram",
        passed: basis.gram_error() <= super::GRAM_TOLERANCE,
        detail: format!("max |G − I| = {:.3e}", basis.gram_error()),
    });

    // projection of a pure mode
    let w11 = |x: f64, z: f64| basis.eval(0, x, z);
    let e = project_initial(InitialDatum::Analytic(&w11), &basis);
    let err = e.0.iter().enumerate().map(|(m, v)| (v - if m == 0 { 1.0 } else { 0.0 }).abs()).fold(0.0, f64::max);
    checks.push(Check { name: "projection", passed: err <= 1e-8, detail: format!("w₁₁ ↦ e₁ within {err:.3e}") });

    // finite-difference Jacobian against the assembled one, linear transport
    let problem = SlabProblem { dt, beta2: cfg.beta2, coeffs: &linear, basis: &basis };
    let cp = random_unit(basis.len(), &mut rng);
    let c = random_unit(basis.len(), &mut rng);
    let jac_err = problem.jacobian_fd(&cp, &c).map(|j| (j - assembled_linear_jacobian(&problem)).abs().max());
    checks.push(match jac_err {
        Ok(e) => Check { name: "linear_jacobian", passed: e <= 1e-6, detail: format!("max deviation {e:.3e}") },
        Err(e) => Check { name: "linear_jacobian", passed: false, detail: e.to_string() },
    });

    // coercivity on random points of norm 10
    let beta = cfg.beta2.sqrt();
    let data = 0.5 * basis.l2_norm_sq(&c0) + 0.5 * cfg.beta2 * basis.gradient_norm_sq(&c0);
    let mut worst = f64::INFINITY;
    for _ in 0..cfg.probes {
        let c = CoefVector(random_unit(basis.len(), &mut rng).0.iter().map(|v| 10.0 * v).collect());
        let k = residual_k(&c0, &c, dt, cfg.beta2, &corey, &basis)?;
        let lower = (0.5 + cfg.beta2 / 2.0 + dt * beta) * c.dot(&c) - data;
        worst = worst.min(k.dot(&c) - lower);
    }
    checks.push(Check {
        name: "coercivity",
        passed: worst >= 0.0,
        detail: format!("min K·c − bound = {worst:.4e} over {} probes", cfg.probes),
    });

    // nonlinear trajectory: residuals and energy
    match run_trajectory(c0.clone(), dt, cfg.slabs, cfg.beta2, &corey, &basis) {
        Ok(traj) => {
            let res = traj.max_residual();
            checks.push(Check {
                name: "newton",
                passed: res <= NEWTON_TOLERANCE,
                detail: format!(
                    "{} slabs, max ‖K‖ = {res:.3e}, max iterations {}",
                    cfg.slabs,
                    traj.iterations.iter().max().unwrap_or(&0)
                ),
            });
            let energy = check_energy_estimate(&traj.coefs, &basis, cfg.beta2, dt, cfg.energy_slack);
            checks.push(Check { name: "energy", passed: energy.passed, detail: energy.to_string() });
        }
        Err(e) => {
            checks.push(Check { name: "newton", passed: false, detail: e.to_string() });
            checks.push(Check { name: "energy", passed: false, detail: "no trajectory".into() });
        }
    }

    // increment scaling in Δt, linear transport
    let dt_runs: Result<Vec<Trajectory>, _> = cfg
        .dt_study_slabs
        .iter()
        .map(|&n| run_trajectory(c0.clone(), cfg.end_time / n as f64, n, cfg.beta2, &linear, &basis))
        .collect();
    checks.push(match dt_runs {
        Ok(runs) => {
            let r = check_increment_estimate(&runs, &basis, |t| t.dt, (1.8, 2.2));
            Check { name: "increment_dt", passed: r.passed, detail: format!("vs Δt: {r}") }
        }
        Err(e) => Check { name: "increment_dt", passed: false, detail: e.to_string() },
    });

    // increment growth as β² decreases, fixed Δt
    let beta_runs: Result<Vec<Trajectory>, _> = cfg
        .beta2_study
        .iter()
        .map(|&b2| run_trajectory(c0.clone(), dt, cfg.slabs, b2, &corey, &basis))
        .collect();
    checks.push(match beta_runs {
        Ok(runs) => {
            let r = check_increment_estimate(&runs, &basis, |t| t.beta2, (-1.1, f64::INFINITY));
            Check { name: "increment_beta2", passed: r.passed, detail: format!("vs β²: {r}") }
        }
        Err(e) => Check { name: "increment_beta2", passed: false, detail: e.to_string() },
    });

    checks.push(cross_check(cfg, &corey)?);
    Ok(CheckReport { checks })
}

/// The linear-transport Jacobian assembled node by node.
fn assembled_linear_jacobian(p: &SlabProblem<'_>) -> nalgebra::DMatrix<f64> {
    let b = p.basis;
    let g = *b.quadrature_grid();
    let n = b.len();
    let mut jac = nalgebra::DMatrix::zeros(n, n);
    for i in 0..n {
        let (k, l) = b.mode(i);
        let (kp, lp) = (k as f64 * PI, l as f64 * PI);
        for m in 0..n {
            let mut adv = 0.0;
            for a in 0..g.nx() {
                for c in 0..g.nz() {
                    let (x, z) = (g.x(a), g.z(c));
                    adv += b.eval(m, x, z) * 2.0 * kp * (kp * x).cos() * (lp * z).sin();
                }
            }
            jac[(i, m)] = -p.dt * adv * g.cell_area();
        }
        let lam = b.stiffness(i);
        jac[(i, i)] += 1.0 + p.beta2 * lam + p.beta2.sqrt() * p.dt * lam;
    }
    jac
}

/// Relative L² distance between the Galerkin solution and the
/// finite-volume solution with unit diffusion in the analysis box.
fn cross_check(cfg: &VerifyConfig, coeffs: &CoefficientSet) -> Result<Check, GalerkinError> {
    let basis = SineBasis::new(cfg.cross_modes, cfg.cross_modes)?;
    let ic = bump(cfg.amplitude);
    let c0 = project_initial(InitialDatum::Analytic(&ic), &basis);
    let dt = cfg.cross_end_time / cfg.cross_slabs as f64;
    let traj = match run_trajectory(c0, dt, cfg.cross_slabs, cfg.beta2, coeffs, &basis) {
        Ok(t) => t,
        Err(e) => return Ok(Check { name: "fv_cross_check", passed: false, detail: e.to_string() }),
    };
    let sim = SimConfig {
        nx: cfg.cross_grid,
        nz: cfg.cross_grid,
        beta2: cfg.beta2,
        viscosity_ratio: cfg.viscosity_ratio,
        end_time: cfg.cross_end_time,
        bc_mode: BoundaryMode::Analysis,
        diffusion: DiffusionModel::Unit,
        ..SimConfig::default()
    };
    let fv = match run(&sim, coeffs, &InitialCondition::Bump { amplitude: cfg.amplitude }) {
        Ok(out) => out.final_state.s,
        Err(e) => return Ok(Check { name: "fv_cross_check", passed: false, detail: e.to_string() }),
    };
    let spectral = basis.synthesize_on(traj.last(), *fv.grid());
    let mut diff = spectral.clone();
    diff.axpy(-1.0, &fv);
    let rel = (diff.l2_norm_sq() / fv.l2_norm_sq()).sqrt();
    Ok(Check {
        name: "fv_cross_check",
        passed: rel <= cfg.cross_tolerance,
        detail: format!("relative L² distance {rel:.4e} at t = {}", cfg.cross_end_time),
    })
}
