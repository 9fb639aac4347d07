//! Preconditioned conjugate gradients for the symmetric positive-definite
//! per-step systems. Operators are matrix free.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("conjugate gradients stopped after {iterations} iterations at relative residual {relative_residual:e}")]
    NotConverged { iterations: usize, relative_residual: f64 },
    #[error("conjugate gradients broke down: non-positive curvature {curvature:e} at iteration {iteration}")]
    Breakdown { iteration: usize, curvature: f64 },
    #[error("dimension mismatch: operator {operator}, vector {vector}")]
    Dimension { operator: usize, vector: usize },
}

/// A symmetric positive-definite operator applied without assembly.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn diagonal(&self) -> Vec<f64>;
}

pub trait Preconditioner {
    /// `z ← P⁻¹ r`
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

/// Diagonal scaling.
#[derive(Debug, Clone)]
pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(op: &dyn LinearOperator) -> Self {
        Self { inv_diag: op.diagonal().into_iter().map(|d| 1.0 / d).collect() }
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((z, r), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *z = r * d;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    /// `‖r_k‖ / ‖b‖` after every iteration, starting with the initial guess.
    pub history: Vec<f64>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` from `x0` until `‖b − A x‖ / ‖b‖ ≤ tol`.
pub fn cg_solve(
    a: &dyn LinearOperator,
    b: &[f64],
    x0: &[f64],
    tol: f64,
    max_iter: usize,
    precond: &dyn Preconditioner,
) -> Result<CgOutcome, SolverError> {
    let n = a.dim();
    for len in [b.len(), x0.len()] {
        if len != n {
            return Err(SolverError::Dimension { operator: n, vector: len });
        }
    }
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(CgOutcome { x: vec![0.0; n], iterations: 0, relative_residual: 0.0, history: vec![0.0] });
    }
    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut iterations = 0;
    let mut history = Vec::new();

    // Outer loop restarts from the true residual if the recursive one drifted.
    loop {
        a.apply(&x, &mut ap);
        for k in 0..n {
            r[k] = b[k] - ap[k];
        }
        let mut rel = dot(&r, &r).sqrt() / b_norm;
        history.push(rel);
        if rel <= tol {
            return Ok(CgOutcome { x, iterations, relative_residual: rel, history });
        }
        if iterations >= max_iter {
            return Err(SolverError::NotConverged { iterations, relative_residual: rel });
        }
        precond.apply(&r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while iterations < max_iter {
            a.apply(&p, &mut ap);
            let curvature = dot(&p, &ap);
            if !(curvature > 0.0) {
                return Err(SolverError::Breakdown { iteration: iterations, curvature });
            }
            let alpha = rz / curvature;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            iterations += 1;
            rel = dot(&r, &r).sqrt() / b_norm;
            if rel <= tol {
                break;
            }
            history.push(rel);
            precond.apply(&r, &mut z);
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
        }
    }
}
