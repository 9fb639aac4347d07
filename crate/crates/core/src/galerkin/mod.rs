//! Spectral Galerkin discretization of the time-discrete problem.
//!
//! Each time slab of length `Δt` looks for `S = Σ cᵢ wᵢ` in the span of the
//! sine modes `w_{k,l} = 2 sin(kπx) sin(lπz)` such that `K(c) = 0`, where
//!
//! ```text
//! kᵢ(c) = ∫ (S − S_prev) wᵢ − Δt ∫ f(S) (U[S] ∂x wᵢ + W[S] ∂z wᵢ)
//!       + ∫ (βΔt ∇S + β² ∇(S − S_prev)) · ∇wᵢ
//! ```
//!
//! The nonlocal velocities are evaluated on a midpoint quadrature grid with
//! the same code the finite-volume solver uses. The modes are discretely
//! orthogonal on that grid, so the linear terms are written spectrally and
//! agree with their quadrature to rounding.

mod estimates;
mod verify;

pub use verify::{verify, VerifyConfig};
pub use estimates::{
    check_energy_estimate, check_increment_estimate, increment_energy, loglog_slope, EnergyReport, IncrementReport,
};

use crate::coefficients::CoefficientSet;
use crate::grid::{Grid, ScalarField, XTopology};
use crate::velocity::{VelocityError, VelocityField};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use std::f64::consts::PI;
use thiserror::Error;

/// Gram-matrix deviation from the identity accepted at construction.
pub const GRAM_TOLERANCE: f64 = 1e-8;
/// Quadrature cells per direction per mode, at least.
pub const QUADRATURE_FACTOR: usize = 8;
/// Newton stops once `‖K(c)‖₂` is at most this.
pub const NEWTON_TOLERANCE: f64 = 1e-10;
pub const NEWTON_MAX_ITERATIONS: usize = 50;
pub const NEWTON_MAX_HALVINGS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GalerkinError {
    #[error("invalid basis: {0}")]
    Basis(String),
    #[error("coefficient vector has {got} entries, basis has {expected}")]
    Length { expected: usize, got: usize },
    #[error(transparent)]
    Velocity(#[from] VelocityError),
    #[error("Newton stalled after {iterations} iterations with ‖K‖ = {residual:e}")]
    Stagnation { iterations: usize, residual: f64, best: CoefVector },
    #[error("singular Jacobian at Newton iteration {iteration}")]
    Singular { iteration: usize },
}

/// Galerkin coefficients, indexed like [`SineBasis::mode`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoefVector(pub Vec<f64>);

impl CoefVector {
    pub fn zeros(n: usize) -> Self {
        CoefVector(vec![0.0; n])
    }

    pub fn unit(n: usize, m: usize) -> Self {
        let mut c = Self::zeros(n);
        c.0[m] = 1.0;
        c
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    fn axpy(&self, alpha: f64, d: &[f64]) -> Self {
        CoefVector(self.0.iter().zip(d).map(|(a, b)| a + alpha * b).collect())
    }
}

/// Tensor sine basis with `mx·mz` modes and a `q×q` midpoint quadrature grid.
#[derive(Debug, Clone)]
pub struct SineBasis {
    mx: usize,
    mz: usize,
    quad: Grid,
    // sin(kπx_a), kπ cos(kπx_a) at the quadrature nodes, row k−1
    sx: Vec<Vec<f64>>,
    dx: Vec<Vec<f64>>,
    sz: Vec<Vec<f64>>,
    dz: Vec<Vec<f64>>,
}

fn tables(modes: usize, grid_pts: impl Fn(usize) -> f64, n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let s = (1..=modes).map(|k| (0..n).map(|a| (k as f64 * PI * grid_pts(a)).sin()).collect()).collect();
    let d = (1..=modes)
        .map(|k| {
            let kp = k as f64 * PI;
            (0..n).map(|a| kp * (kp * grid_pts(a)).cos()).collect()
        })
        .collect();
    (s, d)
}

impl SineBasis {
    /// Basis with the smallest admissible quadrature, `8·max(mx, mz)` cells.
    pub fn new(mx: usize, mz: usize) -> Result<Self, GalerkinError> {
        Self::with_quadrature(mx, mz, QUADRATURE_FACTOR * mx.max(mz))
    }

    pub fn with_quadrature(mx: usize, mz: usize, q: usize) -> Result<Self, GalerkinError> {
        if mx == 0 || mz == 0 {
            return Err(GalerkinError::Basis("mode counts must be positive".into()));
        }
        if q < QUADRATURE_FACTOR * mx.max(mz) {
            return Err(GalerkinError::Basis(format!(
                "quadrature of {q} cells is below {QUADRATURE_FACTOR} per mode ({} needed)",
                QUADRATURE_FACTOR * mx.max(mz)
            )));
        }
        let quad = Grid::new(q, q).map_err(|e| GalerkinError::Basis(e.to_string()))?;
        let (sx, dx) = tables(mx, |a| quad.x(a), q);
        let (sz, dz) = tables(mz, |b| quad.z(b), q);
        let basis = Self { mx, mz, quad, sx, dx, sz, dz };
        let err = basis.gram_error();
        if err > GRAM_TOLERANCE {
            return Err(GalerkinError::Basis(format!("Gram matrix deviates from identity by {err:e}")));
        }
        Ok(basis)
    }

    pub fn len(&self) -> usize {
        self.mx * self.mz
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mx(&self) -> usize {
        self.mx
    }

    pub fn mz(&self) -> usize {
        self.mz
    }

    pub fn quadrature_grid(&self) -> &Grid {
        &self.quad
    }

    /// `(k, l)` of mode `m = (k−1)·mz + (l−1)`.
    pub fn mode(&self, m: usize) -> (usize, usize) {
        (m / self.mz + 1, m % self.mz + 1)
    }

    pub fn eval(&self, m: usize, x: f64, z: f64) -> f64 {
        let (k, l) = self.mode(m);
        2.0 * (k as f64 * PI * x).sin() * (l as f64 * PI * z).sin()
    }

    /// `‖∇w_{k,l}‖² = π²(k² + l²)`.
    pub fn stiffness(&self, m: usize) -> f64 {
        let (k, l) = self.mode(m);
        PI * PI * (k * k + l * l) as f64
    }

    /// `‖S‖²` of `S = Σ cᵢwᵢ`.
    pub fn l2_norm_sq(&self, c: &CoefVector) -> f64 {
        c.dot(c)
    }

    /// `‖∇S‖²` of `S = Σ cᵢwᵢ`.
    pub fn gradient_norm_sq(&self, c: &CoefVector) -> f64 {
        c.0.iter().enumerate().map(|(m, v)| self.stiffness(m) * v * v).sum()
    }

    /// Mass matrix under the quadrature rule.
    pub fn gram_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let h2 = self.quad.cell_area();
        let q = self.quad.nx();
        let mut g = DMatrix::zeros(n, n);
        for a in 0..n {
            let (ka, la) = self.mode(a);
            for b in 0..=a {
                let (kb, lb) = self.mode(b);
                let ix: f64 = (0..q).map(|i| self.sx[ka - 1][i] * self.sx[kb - 1][i]).sum();
                let iz: f64 = (0..q).map(|j| self.sz[la - 1][j] * self.sz[lb - 1][j]).sum();
                g[(a, b)] = 4.0 * h2 * ix * iz;
                g[(b, a)] = g[(a, b)];
            }
        }
        g
    }

    pub fn gram_error(&self) -> f64 {
        (self.gram_matrix() - DMatrix::identity(self.len(), self.len())).abs().max()
    }

    fn check_len(&self, c: &CoefVector) -> Result<(), GalerkinError> {
        if c.len() == self.len() {
            Ok(())
        } else {
            Err(GalerkinError::Length { expected: self.len(), got: c.len() })
        }
    }

    /// `Σ cᵢwᵢ` at the quadrature nodes.
    pub fn synthesize(&self, c: &CoefVector) -> ScalarField {
        let q = self.quad.nx();
        // t[k][b] = Σ_l c_{k,l} sin(lπz_b)
        let t: Vec<Vec<f64>> = (0..self.mx)
            .map(|k| (0..q).map(|b| (0..self.mz).map(|l| c.0[k * self.mz + l] * self.sz[l][b]).sum()).collect())
            .collect();
        let mut s = ScalarField::zeros(self.quad);
        for a in 0..q {
            for (b, v) in s.column_mut(a).iter_mut().enumerate() {
                *v = 2.0 * (0..self.mx).map(|k| self.sx[k][a] * t[k][b]).sum::<f64>();
            }
        }
        s
    }

    /// `Σ cᵢwᵢ` at the cell centres of an arbitrary grid.
    pub fn synthesize_on(&self, c: &CoefVector, grid: Grid) -> ScalarField {
        ScalarField::from_fn(grid, |x, z| (0..self.len()).map(|m| c.0[m] * self.eval(m, x, z)).sum())
    }

    /// `∫ gx ∂x wᵢ + gz ∂z wᵢ` for fields given at the quadrature nodes.
    fn test_gradient(&self, gx: &ScalarField, gz: &ScalarField) -> Vec<f64> {
        let q = self.quad.nx();
        let h2 = self.quad.cell_area();
        let mut out = vec![0.0; self.len()];
        // ax[k][b] = Σ_a gx(a,b) kπcos(kπx_a), az[k][b] = Σ_a gz(a,b) sin(kπx_a)
        for k in 0..self.mx {
            let mut ax = vec![0.0; q];
            let mut az = vec![0.0; q];
            for a in 0..q {
                let (cx, sx) = (self.dx[k][a], self.sx[k][a]);
                for (b, (gxv, gzv)) in gx.column(a).iter().zip(gz.column(a)).enumerate() {
                    ax[b] += gxv * cx;
                    az[b] += gzv * sx;
                }
            }
            for l in 0..self.mz {
                let v: f64 = (0..q).map(|b| ax[b] * self.sz[l][b] + az[b] * self.dz[l][b]).sum();
                out[k * self.mz + l] = 2.0 * h2 * v;
            }
        }
        out
    }
}

/// Initial data for [`project_initial`].
pub enum InitialDatum<'a> {
    /// Integrated with a Gauss–Legendre product rule.
    Analytic(&'a dyn Fn(f64, f64) -> f64),
    /// Cell averages on a grid, integrated with the midpoint rule.
    Gridded(&'a ScalarField),
}

/// Gauss–Legendre nodes and weights on `[0, 1]` (Golub–Welsch).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jac = DMatrix::zeros(n, n);
    for k in 1..n {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        jac[(k, k - 1)] = b;
        jac[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (0.5 * (eig.eigenvalues[i] + 1.0), eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Nodes per direction of the analytic projection rule.
const PROJECTION_NODES: usize = 64;

/// L² projection onto the span of the basis. For an orthonormal basis this
/// is `cᵢ = ∫ S₀ wᵢ`.
pub fn project_initial(s0: InitialDatum<'_>, basis: &SineBasis) -> CoefVector {
    match s0 {
        InitialDatum::Analytic(f) => {
            let n = PROJECTION_NODES.max(4 * basis.mx.max(basis.mz));
            let (x, w) = gauss_legendre(n);
            let values: Vec<f64> = (0..n * n).map(|p| f(x[p / n], x[p % n])).collect();
            let coef = (0..basis.len())
                .map(|m| {
                    let (k, l) = basis.mode(m);
                    let sk: Vec<f64> = x.iter().map(|&t| (k as f64 * PI * t).sin()).collect();
                    let sl: Vec<f64> = x.iter().map(|&t| (l as f64 * PI * t).sin()).collect();
                    let mut acc = 0.0;
                    for a in 0..n {
                        let row: f64 = (0..n).map(|b| w[b] * sl[b] * values[a * n + b]).sum();
                        acc += w[a] * sk[a] * row;
                    }
                    2.0 * acc
                })
                .collect();
            CoefVector(coef)
        }
        InitialDatum::Gridded(field) => {
            let g = field.grid();
            let coef = (0..basis.len())
                .map(|m| {
                    let mut acc = 0.0;
                    for i in 0..g.nx() {
                        for (j, v) in field.column(i).iter().enumerate() {
                            acc += v * basis.eval(m, g.x(i), g.z(j));
                        }
                    }
                    acc * g.cell_area()
                })
                .collect();
            CoefVector(coef)
        }
    }
}

/// Parameters of one time slab.
#[derive(Debug, Clone, Copy)]
pub struct SlabProblem<'a> {
    pub dt: f64,
    pub beta2: f64,
    pub coeffs: &'a CoefficientSet,
    pub basis: &'a SineBasis,
}

impl SlabProblem<'_> {
    /// The nonlocal advective term `∫ f(S)(U ∂x wᵢ + W ∂z wᵢ)`.
    pub fn advective_term(&self, c: &CoefVector) -> Result<Vec<f64>, GalerkinError> {
        let s = self.basis.synthesize(c);
        let v = VelocityField::from_saturation(&s, self.coeffs, XTopology::Bounded)?;
        let f = s.map(|v| self.coeffs.frac_flow_ext(v));
        let w = v.w.to_cells();
        let mut gx = f.clone();
        let mut gz = f;
        for (g, u) in gx.values_mut().iter_mut().zip(v.u.values()) {
            *g *= u;
        }
        for (g, w) in gz.values_mut().iter_mut().zip(w.values()) {
            *g *= w;
        }
        Ok(self.basis.test_gradient(&gx, &gz))
    }

    pub fn residual(&self, c_prev: &CoefVector, c: &CoefVector) -> Result<CoefVector, GalerkinError> {
        self.basis.check_len(c_prev)?;
        self.basis.check_len(c)?;
        let beta = self.beta2.sqrt();
        let adv = if self.coeffs.model() == crate::coefficients::CoefficientModel::NoFlow {
            vec![0.0; c.len()]
        } else {
            self.advective_term(c)?
        };
        let k = (0..c.len())
            .map(|m| {
                let lam = self.basis.stiffness(m);
                (c.0[m] - c_prev.0[m]) * (1.0 + self.beta2 * lam) + beta * self.dt * lam * c.0[m] - self.dt * adv[m]
            })
            .collect();
        Ok(CoefVector(k))
    }

    /// Central finite-difference Jacobian of [`Self::residual`] in `c`.
    pub fn jacobian_fd(&self, c_prev: &CoefVector, c: &CoefVector) -> Result<DMatrix<f64>, GalerkinError> {
        let n = c.len();
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let h = 1e-6 * (1.0 + c.0[j].abs());
            let mut plus = c.clone();
            plus.0[j] += h;
            let mut minus = c.clone();
            minus.0[j] -= h;
            let kp = self.residual(c_prev, &plus)?;
            let km = self.residual(c_prev, &minus)?;
            for i in 0..n {
                jac[(i, j)] = (kp.0[i] - km.0[i]) / (2.0 * h);
            }
        }
        Ok(jac)
    }

    /// Damped Newton from `c_prev`.
    pub fn solve(&self, c_prev: &CoefVector) -> Result<SlabSolution, GalerkinError> {
        let mut c = c_prev.clone();
        let mut k = self.residual(c_prev, &c)?;
        let mut norm = k.norm();
        for it in 0..=NEWTON_MAX_ITERATIONS {
            if norm <= NEWTON_TOLERANCE {
                return Ok(SlabSolution { c, residual: norm, iterations: it });
            }
            if it == NEWTON_MAX_ITERATIONS {
                break;
            }
            let jac = self.jacobian_fd(c_prev, &c)?;
            let rhs = -DVector::from_column_slice(&k.0);
            let step = jac.lu().solve(&rhs).ok_or(GalerkinError::Singular { iteration: it + 1 })?;
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..=NEWTON_MAX_HALVINGS {
                let trial = c.axpy(alpha, step.as_slice());
                let kt = self.residual(c_prev, &trial)?;
                let nt = kt.norm();
                if nt < norm {
                    accepted = Some((trial, kt, nt));
                    break;
                }
                alpha *= 0.5;
            }
            match accepted {
                Some((trial, kt, nt)) => {
                    c = trial;
                    k = kt;
                    norm = nt;
                }
                None => return Err(GalerkinError::Stagnation { iterations: it + 1, residual: norm, best: c }),
            }
        }
        Err(GalerkinError::Stagnation { iterations: NEWTON_MAX_ITERATIONS, residual: norm, best: c })
    }
}

/// `K(c)` for the slab that starts from `c_prev`.
pub fn residual_k(
    c_prev: &CoefVector,
    c: &CoefVector,
    dt: f64,
    beta2: f64,
    coeffs: &CoefficientSet,
    basis: &SineBasis,
) -> Result<CoefVector, GalerkinError> {
    SlabProblem { dt, beta2, coeffs, basis }.residual(c_prev, c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlabSolution {
    pub c: CoefVector,
    /// `‖K(c)‖₂` at the returned point.
    pub residual: f64,
    pub iterations: usize,
}

pub fn solve_slab(
    c_prev: &CoefVector,
    dt: f64,
    beta2: f64,
    coeffs: &CoefficientSet,
    basis: &SineBasis,
) -> Result<SlabSolution, GalerkinError> {
    SlabProblem { dt, beta2, coeffs, basis }.solve(c_prev)
}

/// Coefficients at `t = 0, Δt, …, NΔt` with per-slab solver statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub beta2: f64,
    pub coefs: Vec<CoefVector>,
    pub residuals: Vec<f64>,
    pub iterations: Vec<usize>,
}

impl Trajectory {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn last(&self) -> &CoefVector {
        self.coefs.last().expect("trajectory holds the initial coefficients")
    }
}

/// Solves `slabs` consecutive slabs starting from `c0`.
pub fn run_trajectory(
    c0: CoefVector,
    dt: f64,
    slabs: usize,
    beta2: f64,
    coeffs: &CoefficientSet,
    basis: &SineBasis,
) -> Result<Trajectory, GalerkinError> {
    basis.check_len(&c0)?;
    let problem = SlabProblem { dt, beta2, coeffs, basis };
    let mut traj = Trajectory { dt, beta2, coefs: vec![c0], residuals: Vec::new(), iterations: Vec::new() };
    for _ in 0..slabs {
        let sol = problem.solve(traj.last())?;
        traj.residuals.push(sol.residual);
        traj.iterations.push(sol.iterations);
        traj.coefs.push(sol.c);
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_coefs(n: usize, rng: &mut ChaCha8Rng, scale: f64) -> CoefVector {
        CoefVector((0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect())
    }

    #[test]
    fn gram_is_identity() {
        for (mx, mz) in [(1, 1), (4, 4), (3, 6), (8, 8)] {
            let b = SineBasis::new(mx, mz).unwrap();
            assert!(b.gram_error() < 1e-12, "{mx}x{mz}");
            assert_eq!(b.len(), mx * mz);
        }
    }

    #[test]
    fn basis_rejects_coarse_quadrature() {
        assert!(matches!(SineBasis::with_quadrature(4, 4, 31), Err(GalerkinError::Basis(_))));
        assert!(matches!(SineBasis::new(0, 4), Err(GalerkinError::Basis(_))));
        assert!(SineBasis::with_quadrature(4, 4, 32).is_ok());
    }

    #[test]
    fn modes_vanish_on_boundary() {
        let b = SineBasis::new(4, 3).unwrap();
        for m in 0..b.len() {
            for t in [0.0, 0.13, 0.5, 0.77, 1.0] {
                for v in [b.eval(m, 0.0, t), b.eval(m, 1.0, t), b.eval(m, t, 0.0), b.eval(m, t, 1.0)] {
                    assert!(v.abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn mode_indexing() {
        let b = SineBasis::new(3, 4).unwrap();
        assert_eq!(b.mode(0), (1, 1));
        assert_eq!(b.mode(3), (1, 4));
        assert_eq!(b.mode(4), (2, 1));
        assert_eq!(b.mode(11), (3, 4));
    }

    #[test]
    fn synthesize_matches_pointwise_sum() {
        let b = SineBasis::new(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = random_coefs(b.len(), &mut rng, 1.0);
        let s = b.synthesize(&c);
        let direct = b.synthesize_on(&c, *b.quadrature_grid());
        assert!(s.max_abs_diff(&direct) < 1e-13);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(6);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        // degree 11 is exact: ∫₀¹ t¹¹ = 1/12
        let v: f64 = x.iter().zip(&w).map(|(t, w)| w * t.powi(11)).sum();
        assert!((v - 1.0 / 12.0).abs() < 1e-14);
    }

    #[test]
    fn projection_of_a_mode_is_a_unit_vector() {
        let b = SineBasis::new(4, 4).unwrap();
        let w11 = |x: f64, z: f64| 2.0 * (PI * x).sin() * (PI * z).sin();
        let c = project_initial(InitialDatum::Analytic(&w11), &b);
        let e1 = CoefVector::unit(16, 0);
        assert!(c.0.iter().zip(&e1.0).all(|(a, b)| (a - b).abs() < 1e-8));
        let zero = project_initial(InitialDatum::Analytic(&|_, _| 0.0), &b);
        assert_eq!(zero, CoefVector::zeros(16));
    }

    #[test]
    fn projection_of_gridded_mode() {
        let b = SineBasis::new(2, 2).unwrap();
        let g = Grid::new(64, 64).unwrap();
        let field = ScalarField::from_fn(g, |x, z| b.eval(3, x, z));
        let c = project_initial(InitialDatum::Gridded(&field), &b);
        assert!((c.0[3] - 1.0).abs() < 1e-12);
        assert!(c.0[..3].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn stationary_trivial_dynamics() {
        let b = SineBasis::new(3, 3).unwrap();
        let coeffs = CoefficientSet::no_flow();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = random_coefs(9, &mut rng, 1.0);
        let k = residual_k(&c, &c, 0.1, 0.0, &coeffs, &b).unwrap();
        assert!(k.0.iter().all(|v| *v == 0.0));
        let sol = solve_slab(&c, 0.1, 0.0, &coeffs, &b).unwrap();
        assert_eq!(sol.c, c);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn length_mismatch_is_reported() {
        let b = SineBasis::new(2, 2).unwrap();
        let err = residual_k(&CoefVector::zeros(3), &CoefVector::zeros(4), 0.1, 0.0, &CoefficientSet::no_flow(), &b);
        assert_eq!(err.unwrap_err(), GalerkinError::Length { expected: 4, got: 3 });
    }

    #[test]
    fn linear_jacobian_matches_assembled() {
        // U ≡ 1, W ≡ 0, f(s) = s: K is affine with Jacobian
        // (1 + β²λ_m + βΔtλ_m)δ_im − Δt Σ_nodes w_m ∂x w_i h²
        let b = SineBasis::new(4, 3).unwrap();
        let (dt, beta2): (f64, f64) = (0.05, 0.01);
        let problem = SlabProblem { dt, beta2, coeffs: &CoefficientSet::linear_transport(), basis: &b };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cp = random_coefs(b.len(), &mut rng, 0.3);
        let c = random_coefs(b.len(), &mut rng, 0.3);
        let jac = problem.jacobian_fd(&cp, &c).unwrap();
        let g = *b.quadrature_grid();
        let mut worst = 0.0f64;
        for i in 0..b.len() {
            let (ki, li) = b.mode(i);
            for m in 0..b.len() {
                let lam = b.stiffness(m);
                let diag = if i == m { 1.0 + beta2 * lam + beta2.sqrt() * dt * lam } else { 0.0 };
                let mut adv = 0.0;
                for a in 0..g.nx() {
                    for bz in 0..g.nz() {
                        let (x, z) = (g.x(a), g.z(bz));
                        let dxw = 2.0 * ki as f64 * PI * (ki as f64 * PI * x).cos() * (li as f64 * PI * z).sin();
                        adv += b.eval(m, x, z) * dxw * g.cell_area();
                    }
                }
                worst = worst.max((jac[(i, m)] - (diag - dt * adv)).abs());
            }
        }
        assert!(worst < 1e-6, "{worst:e}");
    }

    #[test]
    fn quadrature_converges_at_second_order() {
        // the test-function integrals of the transport term are midpoint
        // sums, exact only for the mass and stiffness parts
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for coeffs in [CoefficientSet::linear_transport(), CoefficientSet::corey(2.0).unwrap()] {
            let cp = random_coefs(9, &mut rng, 0.2);
            let c = random_coefs(9, &mut rng, 0.2);
            let k: Vec<CoefVector> = [24, 48, 96]
                .iter()
                .map(|&q| residual_k(&cp, &c, 0.05, 1e-2, &coeffs, &SineBasis::with_quadrature(3, 3, q).unwrap()).unwrap())
                .collect();
            let diff = |a: &CoefVector, b: &CoefVector| a.0.iter().zip(&b.0).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            let (d1, d2) = (diff(&k[0], &k[1]), diff(&k[1], &k[2]));
            let order = (d1 / d2).log2();
            assert!((1.8..2.3).contains(&order), "{order}");
        }
    }

    #[test]
    fn linear_transport_without_flow_terms_is_exact() {
        // with Δt = 0 only the mass and stiffness terms remain
        let coeffs = CoefficientSet::linear_transport();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let cp = random_coefs(16, &mut rng, 1.0);
        let c = random_coefs(16, &mut rng, 1.0);
        let a = residual_k(&cp, &c, 0.0, 1e-2, &coeffs, &SineBasis::new(4, 4).unwrap()).unwrap();
        let f = residual_k(&cp, &c, 0.0, 1e-2, &coeffs, &SineBasis::with_quadrature(4, 4, 64).unwrap()).unwrap();
        assert_eq!(a, f);
    }

    #[test]
    fn linear_newton_converges_in_two_iterations() {
        let b = SineBasis::new(4, 4).unwrap();
        let coeffs = CoefficientSet::linear_transport();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cp = random_coefs(b.len(), &mut rng, 0.2);
        let sol = solve_slab(&cp, 0.01, 1e-2, &coeffs, &b).unwrap();
        assert!(sol.iterations <= 2, "{}", sol.iterations);
        assert!(sol.residual <= NEWTON_TOLERANCE);
    }

    #[test]
    fn coercivity_probe() {
        let b = SineBasis::new(3, 3).unwrap();
        let coeffs = CoefficientSet::corey(2.0).unwrap();
        let (dt, beta2): (f64, f64) = (0.02, 1e-2);
        let beta = beta2.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let cp = random_coefs(9, &mut rng, 0.1);
        let data = 0.5 * b.l2_norm_sq(&cp) + 0.5 * beta2 * b.gradient_norm_sq(&cp);
        for _ in 0..100 {
            let mut c = random_coefs(9, &mut rng, 1.0);
            let scale = 10.0 / c.norm();
            c.0.iter_mut().for_each(|v| *v *= scale);
            let k = residual_k(&cp, &c, dt, beta2, &coeffs, &b).unwrap();
            let lower = (0.5 + beta2 / 2.0 + dt * beta) * c.dot(&c) - data;
            assert!(k.dot(&c) >= lower, "{} < {lower}", k.dot(&c));
        }
    }

    #[test]
    fn nonlinear_slabs_converge() {
        let b = SineBasis::new(4, 4).unwrap();
        let coeffs = CoefficientSet::corey(2.0).unwrap();
        let c0 = project_initial(InitialDatum::Analytic(&|x, z| 0.5 * (PI * x).sin() * (PI * z).sin()), &b);
        let traj = run_trajectory(c0, 0.005, 5, 1e-2, &coeffs, &b).unwrap();
        assert_eq!(traj.coefs.len(), 6);
        assert!(traj.max_residual() <= NEWTON_TOLERANCE);
        assert!(traj.coefs.iter().all(CoefVector::is_finite));
    }
}
