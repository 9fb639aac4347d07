//! Cartesian grid on the unit square, cell-centred fields and the discrete
//! differential operators shared by the finite-volume and Galerkin solvers.
//!
//! Cell `(i, j)` has centre `((i + ½)·dx, (j + ½)·dz)`; `i` runs along the
//! flow direction `x`, `j` along the height `z`. Values are stored with `i`
//! outermost so that every column `i` is a contiguous slice, which is the
//! access pattern of the nonlocal velocity reconstruction.

use std::ops::{Index, IndexMut};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least 4 cells per direction, got {nx}x{nz}")]
    TooSmall { nx: usize, nz: usize },
    #[error("field has {got} values, grid has {expected} cells")]
    Length { expected: usize, got: usize },
    #[error("non-finite value at cell ({i}, {j})")]
    NonFinite { i: usize, j: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    nx: usize,
    nz: usize,
    dx: f64,
    dz: f64,
}

impl Grid {
    pub fn new(nx: usize, nz: usize) -> Result<Self, GridError> {
        if nx < 4 || nz < 4 {
            return Err(GridError::TooSmall { nx, nz });
        }
        Ok(Self { nx, nz, dx: 1.0 / nx as f64, dz: 1.0 / nz as f64 })
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn nz(&self) -> usize {
        self.nz
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.dx
    }

    #[inline]
    pub fn dz(&self) -> f64 {
        self.dz
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dz
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nz + j
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    #[inline]
    pub fn z(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dz
    }
}

/// A cell-centred scalar on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self { grid, values: vec![value; grid.len()] }
    }

    /// Samples `f(x, z)` at cell centres.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx {
            let x = grid.x(i);
            for j in 0..grid.nz {
                values.push(f(x, grid.z(j)));
            }
        }
        Self { grid, values }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::Length { expected: grid.len(), got: values.len() });
        }
        let field = Self { grid, values };
        field.check_finite()?;
        Ok(field)
    }

    pub fn check_finite(&self) -> Result<(), GridError> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(k) => Err(GridError::NonFinite { i: k / self.grid.nz, j: k % self.grid.nz }),
            None => Ok(()),
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn column(&self, i: usize) -> &[f64] {
        let nz = self.grid.nz;
        &self.values[i * nz..(i + 1) * nz]
    }

    #[inline]
    pub fn column_mut(&mut self, i: usize) -> &mut [f64] {
        let nz = self.grid.nz;
        &mut self.values[i * nz..(i + 1) * nz]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// `self ← self + alpha · other`
    pub fn axpy(&mut self, alpha: f64, other: &ScalarField) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `∫ S dx dz` by the midpoint rule.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    /// `∫ a·b dx dz` by the midpoint rule.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.grid.cell_area()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for ScalarField {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.values[self.grid.idx(i, j)]
    }
}

impl IndexMut<(usize, usize)> for ScalarField {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        let k = self.grid.idx(i, j);
        &mut self.values[k]
    }
}

/// Condition on one edge of the box.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeCondition {
    /// Prescribed boundary value for each boundary cell along the edge
    /// (`nz` values on left/right, `nx` values on bottom/top).
    Dirichlet(Vec<f64>),
    /// Zero normal derivative.
    Neumann,
}

impl EdgeCondition {
    #[inline]
    fn value(&self, k: usize) -> Option<f64> {
        match self {
            EdgeCondition::Dirichlet(v) => Some(v[k]),
            EdgeCondition::Neumann => None,
        }
    }

    fn zeroed(&self) -> Self {
        match self {
            EdgeCondition::Dirichlet(v) => EdgeCondition::Dirichlet(vec![0.0; v.len()]),
            EdgeCondition::Neumann => EdgeCondition::Neumann,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum XBoundary {
    Periodic,
    Walls { left: EdgeCondition, right: EdgeCondition },
}

/// Whether difference stencils in `x` wrap around.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XTopology {
    Bounded,
    Periodic,
}

/// Boundary data for the scalar unknown on all four edges.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConditions {
    pub x: XBoundary,
    pub bottom: EdgeCondition,
    pub top: EdgeCondition,
}

impl BoundaryConditions {
    /// Prescribed inflow profile at `x = 0`, zero-gradient outflow at `x = 1`,
    /// impermeable top and bottom.
    pub fn inflow(inflow: Vec<f64>) -> Self {
        Self {
            x: XBoundary::Walls { left: EdgeCondition::Dirichlet(inflow), right: EdgeCondition::Neumann },
            bottom: EdgeCondition::Neumann,
            top: EdgeCondition::Neumann,
        }
    }

    /// `S = 0` on the whole boundary.
    pub fn homogeneous_dirichlet(grid: &Grid) -> Self {
        Self {
            x: XBoundary::Walls {
                left: EdgeCondition::Dirichlet(vec![0.0; grid.nz]),
                right: EdgeCondition::Dirichlet(vec![0.0; grid.nz]),
            },
            bottom: EdgeCondition::Dirichlet(vec![0.0; grid.nx]),
            top: EdgeCondition::Dirichlet(vec![0.0; grid.nx]),
        }
    }

    /// Periodic in `x`, zero-gradient in `z`.
    pub fn periodic_x() -> Self {
        Self { x: XBoundary::Periodic, bottom: EdgeCondition::Neumann, top: EdgeCondition::Neumann }
    }

    /// Zero-gradient on every edge.
    pub fn neumann() -> Self {
        Self {
            x: XBoundary::Walls { left: EdgeCondition::Neumann, right: EdgeCondition::Neumann },
            bottom: EdgeCondition::Neumann,
            top: EdgeCondition::Neumann,
        }
    }

    pub fn topology(&self) -> XTopology {
        match self.x {
            XBoundary::Periodic => XTopology::Periodic,
            XBoundary::Walls { .. } => XTopology::Bounded,
        }
    }

    /// Same edge types with all prescribed values set to zero.
    pub fn homogeneous(&self) -> Self {
        Self {
            x: match &self.x {
                XBoundary::Periodic => XBoundary::Periodic,
                XBoundary::Walls { left, right } => XBoundary::Walls { left: left.zeroed(), right: right.zeroed() },
            },
            bottom: self.bottom.zeroed(),
            top: self.top.zeroed(),
        }
    }

    pub fn left_value(&self, j: usize) -> Option<f64> {
        match &self.x {
            XBoundary::Walls { left, .. } => left.value(j),
            XBoundary::Periodic => None,
        }
    }

    pub fn right_value(&self, j: usize) -> Option<f64> {
        match &self.x {
            XBoundary::Walls { right, .. } => right.value(j),
            XBoundary::Periodic => None,
        }
    }
}

/// Per-face coefficients for `∇·(κ ∇ ·)`.
///
/// `x[i·nz + j]` sits on the vertical face `x = i·dx` of row `j`
/// (`i = 0..=nx`); `z[i·(nz+1) + j]` on the horizontal face `z = j·dz` of
/// column `i` (`j = 0..=nz`). For periodic `x` faces `0` and `nx` coincide
/// and face `0` is used.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceCoefficients {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

impl FaceCoefficients {
    pub fn ones(grid: &Grid) -> Self {
        Self { x: vec![1.0; (grid.nx + 1) * grid.nz], z: vec![1.0; grid.nx * (grid.nz + 1)] }
    }

    /// Arithmetic mean of a cell quantity on every face. At Dirichlet edges
    /// the boundary value `g` enters as `κ(g)`; Neumann and periodic faces use
    /// the cell value(s) only.
    pub fn arithmetic_mean(field: &ScalarField, bc: &BoundaryConditions, kappa: impl Fn(f64) -> f64) -> Self {
        let g = *field.grid();
        let (nx, nz) = (g.nx, g.nz);
        let cell: Vec<f64> = field.values().iter().map(|&s| kappa(s)).collect();
        let mut x = vec![0.0; (nx + 1) * nz];
        let mut z = vec![0.0; nx * (nz + 1)];
        for j in 0..nz {
            for i in 1..nx {
                x[i * nz + j] = 0.5 * (cell[g.idx(i - 1, j)] + cell[g.idx(i, j)]);
            }
            match &bc.x {
                XBoundary::Periodic => {
                    let v = 0.5 * (cell[g.idx(nx - 1, j)] + cell[g.idx(0, j)]);
                    x[j] = v;
                    x[nx * nz + j] = v;
                }
                XBoundary::Walls { left, right } => {
                    let c0 = cell[g.idx(0, j)];
                    let cn = cell[g.idx(nx - 1, j)];
                    x[j] = left.value(j).map_or(c0, |v| 0.5 * (c0 + kappa(v)));
                    x[nx * nz + j] = right.value(j).map_or(cn, |v| 0.5 * (cn + kappa(v)));
                }
            }
        }
        for i in 0..nx {
            let base = i * (nz + 1);
            for j in 1..nz {
                z[base + j] = 0.5 * (cell[g.idx(i, j - 1)] + cell[g.idx(i, j)]);
            }
            let c0 = cell[g.idx(i, 0)];
            let cn = cell[g.idx(i, nz - 1)];
            z[base] = bc.bottom.value(i).map_or(c0, |v| 0.5 * (c0 + kappa(v)));
            z[base + nz] = bc.top.value(i).map_or(cn, |v| 0.5 * (cn + kappa(v)));
        }
        Self { x, z }
    }
}

/// `∇·(κ∇S)` with the five-point stencil. Boundary values enter through
/// ghost cells: `2g − S` at Dirichlet edges, `S` at Neumann edges, the wrapped
/// neighbour for periodic `x`.
pub fn div_kappa_grad(field: &ScalarField, bc: &BoundaryConditions, kappa: &FaceCoefficients) -> ScalarField {
    let mut out = ScalarField::zeros(*field.grid());
    div_kappa_grad_into(field.values(), field.grid(), bc, kappa, out.values_mut());
    out
}

pub(crate) fn div_kappa_grad_into(s: &[f64], g: &Grid, bc: &BoundaryConditions, kappa: &FaceCoefficients, out: &mut [f64]) {
    let (nx, nz) = (g.nx, g.nz);
    let (idx2, idz2) = (1.0 / (g.dx * g.dx), 1.0 / (g.dz * g.dz));
    for i in 0..nx {
        for j in 0..nz {
            let c = s[i * nz + j];
            // x-direction
            let west = if i > 0 {
                kappa.x[i * nz + j] * (s[(i - 1) * nz + j] - c)
            } else {
                match &bc.x {
                    XBoundary::Periodic => kappa.x[j] * (s[(nx - 1) * nz + j] - c),
                    XBoundary::Walls { left, .. } => match left.value(j) {
                        Some(v) => kappa.x[j] * 2.0 * (v - c),
                        None => 0.0,
                    },
                }
            };
            let east = if i + 1 < nx {
                kappa.x[(i + 1) * nz + j] * (s[(i + 1) * nz + j] - c)
            } else {
                match &bc.x {
                    XBoundary::Periodic => kappa.x[j] * (s[j] - c),
                    XBoundary::Walls { right, .. } => match right.value(j) {
                        Some(v) => kappa.x[nx * nz + j] * 2.0 * (v - c),
                        None => 0.0,
                    },
                }
            };
            let zb = i * (nz + 1);
            let south = if j > 0 {
                kappa.z[zb + j] * (s[i * nz + j - 1] - c)
            } else {
                bc.bottom.value(i).map_or(0.0, |v| kappa.z[zb] * 2.0 * (v - c))
            };
            let north = if j + 1 < nz {
                kappa.z[zb + j + 1] * (s[i * nz + j + 1] - c)
            } else {
                bc.top.value(i).map_or(0.0, |v| kappa.z[zb + nz] * 2.0 * (v - c))
            };
            out[i * nz + j] = (west + east) * idx2 + (south + north) * idz2;
        }
    }
}

/// Five-point Laplacian with boundary data from `bc`.
pub fn laplacian(field: &ScalarField, bc: &BoundaryConditions) -> ScalarField {
    div_kappa_grad(field, bc, &FaceCoefficients::ones(field.grid()))
}

/// `‖∇_h S‖²`: sum over faces of squared face differences, with half-cell
/// distance to Dirichlet boundary values. For homogeneous data it equals
/// `−⟨Δ_h S, S⟩`, so the discrete energy identities close exactly.
pub fn gradient_norm_sq(field: &ScalarField, bc: &BoundaryConditions) -> f64 {
    let g = field.grid();
    let (nx, nz) = (g.nx, g.nz);
    let s = field.values();
    let (rx, rz) = (g.dz / g.dx, g.dx / g.dz);
    let mut sum_x = 0.0;
    let mut sum_z = 0.0;
    for j in 0..nz {
        for i in 1..nx {
            let d = s[i * nz + j] - s[(i - 1) * nz + j];
            sum_x += d * d;
        }
        match &bc.x {
            XBoundary::Periodic => {
                let d = s[j] - s[(nx - 1) * nz + j];
                sum_x += d * d;
            }
            XBoundary::Walls { left, right } => {
                if let Some(v) = left.value(j) {
                    let d = s[j] - v;
                    sum_x += 2.0 * d * d;
                }
                if let Some(v) = right.value(j) {
                    let d = s[(nx - 1) * nz + j] - v;
                    sum_x += 2.0 * d * d;
                }
            }
        }
    }
    for i in 0..nx {
        let col = &s[i * nz..(i + 1) * nz];
        for j in 1..nz {
            let d = col[j] - col[j - 1];
            sum_z += d * d;
        }
        if let Some(v) = bc.bottom.value(i) {
            sum_z += 2.0 * (col[0] - v) * (col[0] - v);
        }
        if let Some(v) = bc.top.value(i) {
            sum_z += 2.0 * (col[nz - 1] - v) * (col[nz - 1] - v);
        }
    }
    sum_x * rx + sum_z * rz
}

/// Difference stencil used by [`gradient_x_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XStencil {
    /// Centred differences, one-sided second order at bounded `x` edges.
    SecondOrder,
    /// First-order forward differences (backward in the last column).
    Forward,
}

/// `∂x` with [`XStencil::SecondOrder`].
pub fn gradient_x(field: &ScalarField, topology: XTopology) -> ScalarField {
    gradient_x_with(field, topology, XStencil::SecondOrder)
}

pub fn gradient_x_with(field: &ScalarField, topology: XTopology, stencil: XStencil) -> ScalarField {
    let g = *field.grid();
    let mut out = ScalarField::zeros(g);
    gradient_x_slices(field.values(), &g, g.nz, topology, stencil, out.values_mut());
    out
}

/// Applies the x-difference to a column-major array with `rows` entries per column.
pub(crate) fn gradient_x_slices(s: &[f64], g: &Grid, rows: usize, topology: XTopology, stencil: XStencil, out: &mut [f64]) {
    let nx = g.nx;
    let inv2 = 0.5 / g.dx;
    let inv = 1.0 / g.dx;
    let at = |i: usize, j: usize| s[i * rows + j];
    for i in 0..nx {
        for j in 0..rows {
            out[i * rows + j] = match (stencil, topology) {
                (XStencil::SecondOrder, XTopology::Periodic) => {
                    (at((i + 1) % nx, j) - at((i + nx - 1) % nx, j)) * inv2
                }
                (XStencil::SecondOrder, XTopology::Bounded) => {
                    if i == 0 {
                        (-3.0 * at(0, j) + 4.0 * at(1, j) - at(2, j)) * inv2
                    } else if i == nx - 1 {
                        (3.0 * at(nx - 1, j) - 4.0 * at(nx - 2, j) + at(nx - 3, j)) * inv2
                    } else {
                        (at(i + 1, j) - at(i - 1, j)) * inv2
                    }
                }
                (XStencil::Forward, XTopology::Periodic) => (at((i + 1) % nx, j) - at(i, j)) * inv,
                (XStencil::Forward, XTopology::Bounded) => {
                    if i + 1 < nx {
                        (at(i + 1, j) - at(i, j)) * inv
                    } else {
                        (at(i, j) - at(i - 1, j)) * inv
                    }
                }
            };
        }
    }
}

/// Running integral `∫₀^{z_{j+½}} S dz` for every cell: the value at `(i, j)`
/// is `dz · Σ_{j' ≤ j} S(i, j')`, summed bottom-up.
pub fn column_cumulative_integral(field: &ScalarField) -> ScalarField {
    let g = *field.grid();
    let mut out = ScalarField::zeros(g);
    for i in 0..g.nx {
        let mut acc = 0.0;
        for (o, v) in out.column_mut(i).iter_mut().zip(field.column(i)) {
            acc += v;
            *o = acc * g.dz;
        }
    }
    out
}

/// The cumulative integral at a single level `j_top` for every column.
pub fn column_integral_at(field: &ScalarField, j_top: usize) -> Vec<f64> {
    let g = field.grid();
    (0..g.nx).map(|i| field.column(i)[..=j_top].iter().sum::<f64>() * g.dz).collect()
}
