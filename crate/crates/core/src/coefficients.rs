//! Constitutive functions of saturation.
//!
//! The production model uses quadratic (Corey) phase mobilities with viscosity
//! ratio `M`:
//!
//! ```text
//! λ_w(s)   = M s²          λ_tot(s) = M s² + (1 - s)²
//! f(s)     = λ_w / λ_tot    H(s)     = M s² (1 - s)² / λ_tot
//! F(s)     = ∫₀ˢ f(q) dq
//! ```
//!
//! The total mobility is not given by the experiments this crate reproduces;
//! `M s² + (1 - s)²` is the only total mobility for which `f` above is the
//! wetting-phase fractional flow of a Corey pair with `λ_w = M s²`, so it is
//! used here as a modelling assumption.
//!
//! Two auxiliary models exist for verification runs: linear transport
//! (`f(s) = s`, `λ_tot ≡ 1`, `H ≡ 1`) and a no-flow model (`f ≡ 0`).
//!
//! Bounds (`a`, `sup λ_tot`, Lipschitz constants) are computed once at
//! construction by a dense scan of `[0, 1]`.

use thiserror::Error;

/// Inputs this far outside `[0, 1]` are clamped silently by the checked API.
pub const DOMAIN_TOLERANCE: f64 = 1e-12;

const SCAN_POINTS: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoefficientError {
    #[error("saturation {0} outside [0, 1]")]
    Domain(f64),
    #[error("viscosity ratio must be finite and positive, got {0}")]
    InvalidViscosityRatio(f64),
    #[error("adaptive quadrature did not converge at s = {0}")]
    Quadrature(f64),
}

/// Which family of constitutive functions is in use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientModel {
    /// Quadratic mobilities with the given viscosity ratio `M`.
    Corey { viscosity_ratio: f64 },
    /// `f(s) = s`, `λ_tot ≡ 1`, `H ≡ 1`; defined on all of ℝ.
    LinearTransport,
    /// `f ≡ 0`, `λ_tot ≡ 1`, `H ≡ 0`.
    NoFlow,
}

/// Constitutive functions plus their derived bounds. Immutable after construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSet {
    model: CoefficientModel,
    lambda_floor: f64,
    lambda_sup: f64,
    lipschitz_f: f64,
    lipschitz_lambda: f64,
}

impl CoefficientSet {
    pub fn corey(viscosity_ratio: f64) -> Result<Self, CoefficientError> {
        if !(viscosity_ratio.is_finite() && viscosity_ratio > 0.0) {
            return Err(CoefficientError::InvalidViscosityRatio(viscosity_ratio));
        }
        Ok(Self::from_model(CoefficientModel::Corey { viscosity_ratio }))
    }

    pub fn linear_transport() -> Self {
        Self::from_model(CoefficientModel::LinearTransport)
    }

    pub fn no_flow() -> Self {
        Self::from_model(CoefficientModel::NoFlow)
    }

    fn from_model(model: CoefficientModel) -> Self {
        let mut set = Self {
            model,
            lambda_floor: f64::INFINITY,
            lambda_sup: 0.0,
            lipschitz_f: 0.0,
            lipschitz_lambda: 0.0,
        };
        let h = 1.0 / SCAN_POINTS as f64;
        let mut prev_f = set.eval_f(0.0);
        let mut prev_l = set.eval_lambda(0.0);
        set.lambda_floor = prev_l;
        set.lambda_sup = prev_l;
        for k in 1..=SCAN_POINTS {
            let s = k as f64 * h;
            let fk = set.eval_f(s);
            let lk = set.eval_lambda(s);
            set.lambda_floor = set.lambda_floor.min(lk);
            set.lambda_sup = set.lambda_sup.max(lk);
            set.lipschitz_f = set.lipschitz_f.max((fk - prev_f).abs() / h);
            set.lipschitz_lambda = set.lipschitz_lambda.max((lk - prev_l).abs() / h);
            prev_f = fk;
            prev_l = lk;
        }
        set
    }

    pub fn model(&self) -> CoefficientModel {
        self.model
    }

    /// Viscosity ratio of the Corey model; `None` for the auxiliary models.
    pub fn viscosity_ratio(&self) -> Option<f64> {
        match self.model {
            CoefficientModel::Corey { viscosity_ratio } => Some(viscosity_ratio),
            _ => None,
        }
    }

    /// Lower bound `a` of the total mobility on `[0, 1]`.
    pub fn lambda_floor(&self) -> f64 {
        self.lambda_floor
    }

    pub fn lambda_sup(&self) -> f64 {
        self.lambda_sup
    }

    pub fn lipschitz_f(&self) -> f64 {
        self.lipschitz_f
    }

    pub fn lipschitz_lambda(&self) -> f64 {
        self.lipschitz_lambda
    }

    /// `sup λ_tot / a`, the uniform bound on the normalized horizontal velocity.
    pub fn velocity_bound(&self) -> f64 {
        self.lambda_sup / self.lambda_floor
    }

    /// `2 · sup λ_tot · L_λ / a²`, the Lipschitz and growth constant of the
    /// nonlocal velocity operators.
    pub fn velocity_lipschitz(&self) -> f64 {
        2.0 * self.lambda_sup * self.lipschitz_lambda / (self.lambda_floor * self.lambda_floor)
    }

    fn check(s: f64) -> Result<f64, CoefficientError> {
        if !s.is_finite() || !(-DOMAIN_TOLERANCE..=1.0 + DOMAIN_TOLERANCE).contains(&s) {
            return Err(CoefficientError::Domain(s));
        }
        Ok(s.clamp(0.0, 1.0))
    }

    pub fn frac_flow(&self, s: f64) -> Result<f64, CoefficientError> {
        Self::check(s).map(|s| self.eval_f(s))
    }

    pub fn diffusion(&self, s: f64) -> Result<f64, CoefficientError> {
        Self::check(s).map(|s| self.eval_h(s))
    }

    pub fn total_mobility(&self, s: f64) -> Result<f64, CoefficientError> {
        Self::check(s).map(|s| self.eval_lambda(s))
    }

    /// `F(s) = ∫₀ˢ f`, by adaptive Simpson quadrature to an absolute
    /// tolerance of 1e-12.
    pub fn frac_flow_primitive(&self, s: f64) -> Result<f64, CoefficientError> {
        let s = Self::check(s)?;
        if s == 0.0 {
            return Ok(0.0);
        }
        let f = |q: f64| self.eval_f(q);
        let (fa, fm, fb) = (f(0.0), f(0.5 * s), f(s));
        let whole = (s / 6.0) * (fa + 4.0 * fm + fb);
        adaptive_simpson(&f, 0.0, s, fa, fm, fb, whole, 1e-12, 48)
            .ok_or(CoefficientError::Quadrature(s))
    }

    // The `*_ext` evaluators are the constant extension of each function
    // outside [0, 1] (identity for linear transport). Solvers use them so that
    // a state drifting slightly out of range never aborts a run; the state
    // itself is left untouched.

    #[inline]
    pub fn frac_flow_ext(&self, s: f64) -> f64 {
        match self.model {
            CoefficientModel::LinearTransport => s,
            _ => self.eval_f(s.clamp(0.0, 1.0)),
        }
    }

    #[inline]
    pub fn diffusion_ext(&self, s: f64) -> f64 {
        self.eval_h(s.clamp(0.0, 1.0))
    }

    #[inline]
    pub fn total_mobility_ext(&self, s: f64) -> f64 {
        self.eval_lambda(s.clamp(0.0, 1.0))
    }

    #[inline]
    fn eval_f(&self, s: f64) -> f64 {
        match self.model {
            CoefficientModel::Corey { viscosity_ratio: m } => {
                let w = m * s * s;
                w / (w + (1.0 - s) * (1.0 - s))
            }
            CoefficientModel::LinearTransport => s,
            CoefficientModel::NoFlow => 0.0,
        }
    }

    #[inline]
    fn eval_h(&self, s: f64) -> f64 {
        match self.model {
            CoefficientModel::Corey { viscosity_ratio: m } => {
                let w = m * s * s;
                let n = (1.0 - s) * (1.0 - s);
                w * n / (w + n)
            }
            CoefficientModel::LinearTransport => 1.0,
            CoefficientModel::NoFlow => 0.0,
        }
    }

    #[inline]
    fn eval_lambda(&self, s: f64) -> f64 {
        match self.model {
            CoefficientModel::Corey { viscosity_ratio: m } => m * s * s + (1.0 - s) * (1.0 - s),
            _ => 1.0,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Option<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Some(left + right + delta / 15.0);
    }
    if depth == 0 {
        return None;
    }
    let l = adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Some(l + r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m2() -> CoefficientSet {
        CoefficientSet::corey(2.0).unwrap()
    }

    #[test]
    fn fractional_flow_values() {
        let c = m2();
        assert_eq!(c.frac_flow(0.0).unwrap(), 0.0);
        assert_eq!(c.frac_flow(1.0).unwrap(), 1.0);
        assert!((c.frac_flow(0.5).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn diffusion_values() {
        let c = m2();
        assert_eq!(c.diffusion(0.0).unwrap(), 0.0);
        assert_eq!(c.diffusion(1.0).unwrap(), 0.0);
        assert!((c.diffusion(0.5).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        for k in 0..=1000 {
            assert!(c.diffusion(k as f64 / 1000.0).unwrap() >= 0.0);
        }
    }

    #[test]
    fn total_mobility_values_and_floor() {
        let c = m2();
        assert_eq!(c.total_mobility(0.0).unwrap(), 1.0);
        assert_eq!(c.total_mobility(1.0).unwrap(), 2.0);
        // independent scan at 1e-6 resolution
        let (mut best_s, mut best) = (0.0, f64::INFINITY);
        for k in 0..=1_000_000 {
            let s = k as f64 * 1e-6;
            let v = 2.0 * s * s + (1.0 - s) * (1.0 - s);
            if v < best {
                best = v;
                best_s = s;
            }
        }
        assert!((best - 2.0 / 3.0).abs() < 1e-11);
        assert!((best_s - 1.0 / 3.0).abs() < 1e-6);
        assert!((c.lambda_floor() - 2.0 / 3.0).abs() < 1e-11);
        assert!((c.lambda_sup() - 2.0).abs() < 1e-15);
        assert!((c.velocity_bound() - 3.0).abs() < 1e-10);
    }

    #[test]
    fn domain_errors_and_clamping() {
        let c = m2();
        assert_eq!(c.frac_flow(-1e-13).unwrap(), 0.0);
        assert_eq!(c.frac_flow(1.0 + 1e-13).unwrap(), 1.0);
        assert_eq!(c.frac_flow(-1e-9), Err(CoefficientError::Domain(-1e-9)));
        assert!(c.diffusion(1.5).is_err());
        assert!(c.total_mobility(f64::NAN).is_err());
        assert!(CoefficientSet::corey(0.0).is_err());
        assert!(CoefficientSet::corey(-2.0).is_err());
    }

    #[test]
    fn primitive_matches_trapezoid_oracle() {
        let c = m2();
        assert_eq!(c.frac_flow_primitive(0.0).unwrap(), 0.0);
        let n = 1_000_000;
        let h = 1.0 / n as f64;
        let f = |s: f64| 2.0 * s * s / (2.0 * s * s + (1.0 - s) * (1.0 - s));
        let mut trap = 0.5 * (f(0.0) + f(1.0));
        for k in 1..n {
            trap += f(k as f64 * h);
        }
        trap *= h;
        let got = c.frac_flow_primitive(1.0).unwrap();
        assert!((got - trap).abs() < 1e-10, "{got} vs {trap}");
    }

    #[test]
    fn primitive_is_monotone() {
        for m in [0.3, 1.0, 2.0, 10.0] {
            let c = CoefficientSet::corey(m).unwrap();
            assert!(c.frac_flow_primitive(0.8).unwrap() >= c.frac_flow_primitive(0.3).unwrap());
        }
    }

    #[test]
    fn lipschitz_bounds_hold_on_random_pairs() {
        let c = m2();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let (a, b): (f64, f64) = (rng.gen(), rng.gen());
            let df = (c.frac_flow(a).unwrap() - c.frac_flow(b).unwrap()).abs();
            let dl = (c.total_mobility(a).unwrap() - c.total_mobility(b).unwrap()).abs();
            assert!(df <= c.lipschitz_f() * (a - b).abs() * (1.0 + 1e-9));
            assert!(dl <= c.lipschitz_lambda() * (a - b).abs() * (1.0 + 1e-9));
        }
    }

    #[test]
    fn mobility_stays_within_derived_bounds() {
        let c = m2();
        for k in 0..=100_000 {
            let l = c.total_mobility(k as f64 * 1e-5).unwrap();
            assert!(l >= c.lambda_floor() && l <= c.lambda_sup());
        }
    }

    #[test]
    fn viscosity_ratio_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let m: f64 = rng.gen_range(0.1..10.0);
            let s: f64 = rng.gen();
            let c = CoefficientSet::corey(m).unwrap();
            let r = CoefficientSet::corey(1.0 / m).unwrap();
            let lhs = c.frac_flow(s).unwrap();
            let rhs = 1.0 - r.frac_flow(1.0 - s).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn auxiliary_models() {
        let lin = CoefficientSet::linear_transport();
        assert_eq!(lin.frac_flow_ext(-0.25), -0.25);
        assert_eq!(lin.total_mobility(0.3).unwrap(), 1.0);
        assert!((lin.lipschitz_f() - 1.0).abs() < 1e-9);
        assert_eq!(lin.lipschitz_lambda(), 0.0);
        let none = CoefficientSet::no_flow();
        assert_eq!(none.frac_flow(0.7).unwrap(), 0.0);
        assert_eq!(none.frac_flow_primitive(1.0).unwrap(), 0.0);
    }

    #[test]
    fn extension_is_constant_outside_unit_interval() {
        let c = m2();
        assert_eq!(c.frac_flow_ext(-0.2), 0.0);
        assert_eq!(c.frac_flow_ext(1.3), 1.0);
        assert_eq!(c.total_mobility_ext(1.3), 2.0);
        assert_eq!(c.diffusion_ext(-4.0), 0.0);
    }
}
