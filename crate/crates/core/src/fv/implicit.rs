//! The per-step operator `I − ∇_h·((β² + Δt·β·κ)∇_h ·)` with homogeneous
//! boundary data, and an x-line preconditioner for it.

use crate::grid::{div_kappa_grad_into, BoundaryConditions, EdgeCondition, FaceCoefficients, Grid, XBoundary};
use crate::linear_solver::{LinearOperator, Preconditioner};

/// `A δ = δ − ∇_h·(c ∇_h δ)` with face coefficients `c = β² + Δt·β·κ`.
///
/// Both the pseudo-parabolic term `−β²Δ_h` and the implicit diffusion
/// `Δt·β·L_H` share the five-point stencil, so they are merged into one set of
/// face weights. Symmetric, with diagonal `1 + Σ` off-diagonal magnitudes.
#[derive(Debug, Clone)]
pub struct ImplicitOperator {
    grid: Grid,
    bc: BoundaryConditions,
    faces: FaceCoefficients,
}

impl ImplicitOperator {
    /// `bc` supplies the edge types; its prescribed values are ignored.
    pub fn new(grid: Grid, bc: &BoundaryConditions, beta2: f64, dt_beta: f64, kappa: &FaceCoefficients) -> Self {
        let merge = |k: &[f64]| k.iter().map(|&k| beta2 + dt_beta * k).collect();
        Self { grid, bc: bc.homogeneous(), faces: FaceCoefficients { x: merge(&kappa.x), z: merge(&kappa.z) } }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Face weights `c / h²` of the row of cell `(i, j)`: west, east, south, north.
    /// Dirichlet edges count twice (half-cell distance); Neumann edges are zero.
    fn weights(&self, i: usize, j: usize) -> [f64; 4] {
        let g = &self.grid;
        let (nx, nz) = (g.nx(), g.nz());
        let (idx2, idz2) = (1.0 / (g.dx() * g.dx()), 1.0 / (g.dz() * g.dz()));
        let edge = |e: &EdgeCondition| match e {
            EdgeCondition::Dirichlet(_) => 2.0,
            EdgeCondition::Neumann => 0.0,
        };
        let (lf, rf, periodic) = match &self.bc.x {
            XBoundary::Periodic => (1.0, 1.0, true),
            XBoundary::Walls { left, right } => (edge(left), edge(right), false),
        };
        let west = if i > 0 { 1.0 } else { lf } * self.faces.x[i * nz + j] * idx2;
        // periodic faces 0 and nx coincide; face 0 holds the weight
        let east_face = if i + 1 == nx && periodic { j } else { (i + 1) * nz + j };
        let east = if i + 1 < nx { 1.0 } else { rf } * self.faces.x[east_face] * idx2;
        let zb = i * (nz + 1);
        let south = if j > 0 { 1.0 } else { edge(&self.bc.bottom) } * self.faces.z[zb + j] * idz2;
        let north = if j + 1 < nz { 1.0 } else { edge(&self.bc.top) } * self.faces.z[zb + j + 1] * idz2;
        [west, east, south, north]
    }

    /// Strict diagonal dominance with positive diagonal, which certifies that
    /// the operator is positive definite.
    pub fn is_diagonally_dominant(&self) -> bool {
        let g = &self.grid;
        let periodic = matches!(self.bc.x, XBoundary::Periodic);
        (0..g.nx()).all(|i| {
            (0..g.nz()).all(|j| {
                let w = self.weights(i, j);
                let diag = 1.0 + w.iter().sum::<f64>();
                // Dirichlet edges add to the diagonal only; interior and periodic faces couple
                let mut off = 0.0;
                if i > 0 || periodic {
                    off += w[0];
                }
                if i + 1 < g.nx() || periodic {
                    off += w[1];
                }
                if j > 0 {
                    off += w[2];
                }
                if j + 1 < g.nz() {
                    off += w[3];
                }
                diag > off && diag > 0.0
            })
        })
    }
}

impl LinearOperator for ImplicitOperator {
    fn dim(&self) -> usize {
        self.grid.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        div_kappa_grad_into(x, &self.grid, &self.bc, &self.faces, y);
        for (y, x) in y.iter_mut().zip(x) {
            *y = x - *y;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let g = &self.grid;
        let mut d = vec![0.0; g.len()];
        for i in 0..g.nx() {
            for j in 0..g.nz() {
                d[g.idx(i, j)] = 1.0 + self.weights(i, j).iter().sum::<f64>();
            }
        }
        d
    }
}

/// Exact solve of the `x`-coupling along each row of cells, with all
/// `z`-coupling lumped onto the diagonal. The `x` stencil weight `β²/dx²`
/// dominates `β²/dz²` on flat grids, so this captures most of the operator.
/// The periodic wrap-around coupling is dropped; the result stays symmetric
/// positive definite.
#[derive(Debug, Clone)]
pub struct LinePreconditioner {
    nx: usize,
    nz: usize,
    /// Thomas factors per row `j`: sub-diagonal, inverse pivots, upper ratios.
    lower: Vec<f64>,
    inv_pivot: Vec<f64>,
    upper: Vec<f64>,
}

impl LinePreconditioner {
    pub fn new(op: &ImplicitOperator) -> Self {
        let g = op.grid;
        let (nx, nz) = (g.nx(), g.nz());
        let diag = op.diagonal();
        let idx2 = 1.0 / (g.dx() * g.dx());
        let mut lower = vec![0.0; nx * nz];
        let mut inv_pivot = vec![0.0; nx * nz];
        let mut upper = vec![0.0; nx * nz];
        for j in 0..nz {
            // row-major storage along the line: k = j·nx + i
            let mut prev_ratio = 0.0;
            for i in 0..nx {
                let k = j * nx + i;
                let a = if i > 0 { -op.faces.x[i * nz + j] * idx2 } else { 0.0 };
                let c = if i + 1 < nx { -op.faces.x[(i + 1) * nz + j] * idx2 } else { 0.0 };
                let pivot = diag[g.idx(i, j)] - a * prev_ratio;
                lower[k] = a;
                inv_pivot[k] = 1.0 / pivot;
                upper[k] = c / pivot;
                prev_ratio = upper[k];
            }
        }
        Self { nx, nz, lower, inv_pivot, upper }
    }
}

impl Preconditioner for LinePreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let (nx, nz) = (self.nx, self.nz);
        let mut d = vec![0.0; nx];
        for j in 0..nz {
            let base = j * nx;
            let mut prev = 0.0;
            for i in 0..nx {
                let k = base + i;
                d[i] = (r[i * nz + j] - self.lower[k] * prev) * self.inv_pivot[k];
                prev = d[i];
            }
            for i in (0..nx - 1).rev() {
                d[i] -= self.upper[base + i] * d[i + 1];
            }
            for i in 0..nx {
                z[i * nz + j] = d[i];
            }
        }
    }
}
