//! The twelve acceptance criteria, each printed as one PASS/FAIL line.
//!
//! Run with `cargo test -p bve --test acceptance -- --nocapture` to see the
//! table. Criterion 9 is a known failure, analysed in the README; the test
//! fails if any other criterion fails or if 9 starts passing.

use bve::coefficients::CoefficientSet;
use bve::diagnostics::CheckReport;
use bve::experiments::{run_compare, run_sweep, InitialCondition, RunConfig, Verdict, COMPARE_BVE_BETA2, DEFAULT_SWEEP};
use bve::fv::{run, BoundaryMode, DiffusionModel, InitialData, SimConfig, Stepper};
use bve::galerkin::{verify, VerifyConfig};
use bve::invariants::{constant_state_suite, mass_suite, velocity_bounds_suite, velocity_suite, InvariantConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

const KNOWN_RED: &[usize] = &[9];

struct Outcome {
    id: usize,
    passed: bool,
    detail: String,
    elapsed: Duration,
}

fn all_pass(report: &CheckReport, names: &[&str]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in names {
        match report.get(n) {
            Some(c) => {
                ok &= c.passed;
                parts.push(format!("{n}: {}", c.detail));
            }
            None => {
                ok = false;
                parts.push(format!("{n}: missing"));
            }
        }
    }
    (ok, parts.join("; "))
}

fn timed(id: usize, limit: Option<Duration>, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (mut passed, mut detail) = f();
    let elapsed = start.elapsed();
    if let Some(limit) = limit {
        if elapsed > limit {
            passed = false;
            detail.push_str(&format!("; runtime {elapsed:?} over {limit:?}"));
        }
    }
    Outcome { id, passed, detail, elapsed }
}

fn corey() -> CoefficientSet {
    CoefficientSet::corey(2.0).unwrap()
}

fn suite_config() -> InvariantConfig {
    InvariantConfig { seed: 2024, ..InvariantConfig::default() }
}

fn criterion_1_2() -> (Outcome, Outcome) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let report = CheckReport { checks: velocity_suite(&suite_config(), &corey(), &mut rng) };
    let elapsed = start.elapsed();
    let (p1, d1) = all_pass(&report, &["velocity_normalization", "velocity_top_w"]);
    let (p2, d2) = all_pass(&report, &["incompressibility", "stencil_control"]);
    let limit = Duration::from_secs(5);
    (
        Outcome { id: 1, passed: p1 && elapsed < limit, detail: d1, elapsed },
        Outcome { id: 2, passed: p2, detail: d2, elapsed },
    )
}

fn criterion_3() -> Outcome {
    timed(3, None, || {
        let c = corey();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let report = CheckReport { checks: velocity_bounds_suite(&suite_config(), &c, &mut rng) };
        let (ok, detail) = all_pass(&report, &["u_uniform_bound", "u_lipschitz", "w_growth"]);
        // sup λ / a = 2 / (2/3) for M = 2
        let sup_over_a = c.velocity_bound();
        (ok && (sup_over_a - 3.0).abs() < 1e-6, format!("sup/a = {sup_over_a:.6}; {detail}"))
    })
}

fn criterion_4() -> Outcome {
    timed(4, None, || {
        let c = constant_state_suite(&suite_config(), &corey());
        (c.passed, c.detail)
    })
}

fn criterion_5() -> Outcome {
    timed(5, None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = mass_suite(&suite_config(), &corey(), &mut rng);
        (c.passed, c.detail)
    })
}

/// Depends on `x` only; inflow at the plateau.
struct Layered;

impl InitialData for Layered {
    fn saturation(&self, x: f64, _z: f64) -> f64 {
        0.9 * (1.0 - x).powi(2) / (400.0 * x * x + (1.0 - x).powi(2))
    }
    fn inflow(&self, _z: f64) -> f64 {
        0.9
    }
    fn plateau(&self) -> f64 {
        0.9
    }
}

// Independent 1-D Buckley–Leverett upwind scheme with U ≡ 1.
fn bl_flux(s: f64) -> f64 {
    let w = 2.0 * s * s;
    w / (w + (1.0 - s) * (1.0 - s))
}

fn bl_step(s: &[f64], inflow: f64, dt: f64, dx: f64) -> Vec<f64> {
    let n = s.len();
    (0..n)
        .map(|i| {
            let left = if i == 0 { bl_flux(inflow) } else { bl_flux(s[i - 1]) };
            s[i] - dt / dx * (bl_flux(s[i]) - left)
        })
        .collect()
}

fn criterion_6() -> Outcome {
    timed(6, None, || {
        let cfg = SimConfig { nx: 256, nz: 4, beta2: 0.0, end_time: 1.0, bc_mode: BoundaryMode::Experiment, ..SimConfig::default() };
        let stepper = Stepper::for_initial_data(cfg, corey(), &Layered).unwrap();
        let g = *stepper.grid();
        let mut state = stepper.initial_state(&Layered);
        let mut oracle: Vec<f64> = (0..g.nx()).map(|i| state.s[(i, 0)]).collect();
        // f' ≤ 2 for M = 2
        let dt = 0.4 * g.dx() / 2.0;
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let v = stepper.velocity(&state).unwrap();
            state = stepper.step(&state, &v, dt).unwrap().state;
            oracle = bl_step(&oracle, 0.9, dt, g.dx());
            for i in 0..g.nx() {
                for j in 0..g.nz() {
                    worst = worst.max((state.s[(i, j)] - oracle[i]).abs());
                }
            }
        }
        (worst <= 1e-12, format!("max |S₂D − S₁D| over 100 steps {worst:.3e} (bound 1e-12)"))
    })
}

fn criterion_7(galerkin: &CheckReport) -> Outcome {
    timed(7, None, || {
        let cfg = SimConfig {
            nx: 128,
            nz: 16,
            beta2: 1e-2,
            end_time: 0.1,
            bc_mode: BoundaryMode::Analysis,
            diffusion: DiffusionModel::Unit,
            ..SimConfig::default()
        };
        let out = run(&cfg, &corey(), &InitialCondition::Bump { amplitude: 0.5 }).unwrap();
        let e0 = out.report.initial.as_ref().unwrap().energy;
        let margin = out.report.energy_margin(cfg.beta2).unwrap();
        let fv_ok = margin >= -1e-8 * (1.0 + e0);
        let (g_ok, g_detail) = all_pass(galerkin, &["energy"]);
        (
            fv_ok && g_ok,
            format!("FV: {} steps, min margin {margin:.3e} (E⁰ = {e0:.4e}); Galerkin {g_detail}", out.report.steps.len()),
        )
    })
}

fn criterion_8(galerkin: &CheckReport, galerkin_time: Duration) -> Outcome {
    let (ok, detail) = all_pass(galerkin, &["increment_dt", "increment_beta2"]);
    let limit = Duration::from_secs(120);
    Outcome { id: 8, passed: ok && galerkin_time < limit, detail, elapsed: galerkin_time }
}

fn desk_slab() -> RunConfig {
    RunConfig {
        sim: SimConfig { nx: 500, nz: 20, viscosity_ratio: 2.0, end_time: 0.5, ..SimConfig::default() },
        initial: InitialCondition::default(),
    }
}

fn criterion_9() -> Outcome {
    timed(9, Some(Duration::from_secs(600)), || {
        let report = run_sweep(&desk_slab(), &DEFAULT_SWEEP).unwrap();
        let widths: Vec<String> = report
            .entries
            .iter()
            .map(|e| match e.summary.and_then(|s| s.front_width) {
                Some(w) => format!("{:e}: {w:.4}", e.beta2),
                None => format!("{:e}: none", e.beta2),
            })
            .collect();
        (report.verdict == Verdict::Pass, format!("widths {}", widths.join(", ")))
    })
}

fn criterion_10() -> Outcome {
    timed(10, Some(Duration::from_secs(300)), || {
        let mut cfg = desk_slab();
        cfg.sim.nx = 2000;
        cfg.sim.nz = 40;
        let report = run_compare(&cfg, COMPARE_BVE_BETA2, 0.0).unwrap();
        let (b, d) = (report.bve_summary.unwrap(), report.dve_summary.unwrap());
        (
            report.passed(),
            format!(
                "2000×40: BVE overshoot {:.4e}, DVE overshoot {:.3e}, fronts {:.4} ≤ {:.4}",
                b.overshoot_max,
                d.overshoot_max,
                b.front_position.unwrap_or(f64::NAN),
                d.front_position.unwrap_or(f64::NAN)
            ),
        )
    })
}

fn criterion_11(galerkin: &CheckReport, galerkin_time: Duration) -> Outcome {
    let (ok, detail) = all_pass(galerkin, &["newton", "linear_jacobian", "fv_cross_check"]);
    Outcome { id: 11, passed: ok, detail, elapsed: galerkin_time }
}

fn criterion_12() -> Outcome {
    timed(12, None, || {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("c.cfg");
        std::fs::write(&cfg_path, "nx = 64\nnz = 8\nbeta2 = 1e-3\nend_time = 0.05\n").unwrap();
        let mut texts = Vec::new();
        for k in 0..2 {
            let out = dir.path().join(format!("out{k}"));
            let cfg = cfg_path.to_str().unwrap();
            let o = out.to_str().unwrap();
            assert_eq!(bve::cli::main_with_args(["bve", "run", "--config", cfg, "--out", o, "--seed", "7"]), 0);
            assert_eq!(bve::cli::main_with_args(["bve", "check-invariants", "--out", o, "--seed", "7"]), 0);
            let mut files: Vec<_> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
            files.sort();
            texts.push(files.iter().map(|p| (p.file_name().unwrap().to_owned(), std::fs::read(p).unwrap())).collect::<Vec<_>>());
        }
        let same = texts[0] == texts[1];
        (same && texts[0].len() >= 3, format!("{} files compared byte for byte", texts[0].len()))
    })
}

#[test]
fn acceptance_criteria() {
    let mut outcomes = Vec::new();
    let (o1, o2) = criterion_1_2();
    outcomes.extend([o1, o2, criterion_3(), criterion_4(), criterion_5(), criterion_6()]);

    let start = Instant::now();
    let galerkin = verify(&VerifyConfig::default()).unwrap();
    let galerkin_time = start.elapsed();
    outcomes.push(criterion_7(&galerkin));
    outcomes.push(criterion_8(&galerkin, galerkin_time));
    outcomes.push(criterion_9());
    outcomes.push(criterion_10());
    outcomes.push(criterion_11(&galerkin, galerkin_time));
    outcomes.push(criterion_12());

    let mut unexpected = Vec::new();
    for o in &outcomes {
        let known = KNOWN_RED.contains(&o.id);
        let tag = if o.passed { "PASS" } else if known { "FAIL (known)" } else { "FAIL" };
        println!("criterion {:>2}: {tag:<12} [{:>8.2?}] {}", o.id, o.elapsed, o.detail);
        if o.passed == known {
            unexpected.push(o.id);
        }
    }
    assert!(unexpected.is_empty(), "criteria with an unexpected verdict: {unexpected:?}");
}
