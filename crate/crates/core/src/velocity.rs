//! Nonlocal velocity reconstruction.
//!
//! The horizontal velocity is the column-normalized total mobility,
//!
//! ```text
//! U[S](x, z) = λ_tot(S(x, z)) / ∫₀¹ λ_tot(S(x, r)) dr
//! W[S](x, z) = −∂x ∫₀ᶻ U[S](x, r) dr
//! ```
//!
//! so no pressure equation is solved. `U` is cell-centred. `W` is stored on the
//! horizontal faces `z = j·dz`, which is where the running column integral of
//! `U` lives: face `0` is the bottom wall (`W = 0` exactly) and face `nz` the
//! top wall, where the full-column integral is `1` in every column and `W`
//! vanishes up to rounding.
//!
//! Because `W` is built from the discrete `U` with the same `x` stencil that
//! defines the face velocities, `D_x U + D_z W = 0` holds cell by cell to
//! rounding error. The continuous integral over `z` is understood in the trace
//! sense for `H¹` data; the cell-average representation has no further need of
//! that.

use thiserror::Error;

use crate::coefficients::CoefficientSet;
use crate::grid::{gradient_x, gradient_x_slices, Grid, ScalarField, XStencil, XTopology};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VelocityError {
    #[error("non-finite saturation at cell ({i}, {j})")]
    NonFinite { i: usize, j: usize },
    #[error("column {column} has mobility integral {integral:e}, below half the mobility floor")]
    DegenerateColumn { column: usize, integral: f64 },
}

/// Values on the horizontal faces `z = j·dz`, `j = 0..=nz`, of every column.
#[derive(Debug, Clone, PartialEq)]
pub struct ZFaceField {
    grid: Grid,
    values: Vec<f64>,
}

impl ZFaceField {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.nx() * (grid.nz() + 1)] }
    }

    #[inline]
    pub fn get(&self, i: usize, face: usize) -> f64 {
        self.values[i * (self.grid.nz() + 1) + face]
    }

    #[inline]
    pub fn column(&self, i: usize) -> &[f64] {
        let n = self.grid.nz() + 1;
        &self.values[i * n..(i + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Largest magnitude over the top faces.
    pub fn max_abs_top(&self) -> f64 {
        let nz = self.grid.nz();
        (0..self.grid.nx()).map(|i| self.get(i, nz).abs()).fold(0.0, f64::max)
    }

    /// Average of the two faces bounding each cell.
    pub fn to_cells(&self) -> ScalarField {
        let g = self.grid;
        let mut out = ScalarField::zeros(g);
        for i in 0..g.nx() {
            let col = self.column(i);
            for (j, o) in out.column_mut(i).iter_mut().enumerate() {
                *o = 0.5 * (col[j] + col[j + 1]);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub u: ScalarField,
    pub w: ZFaceField,
}

impl VelocityField {
    pub fn from_saturation(s: &ScalarField, coeffs: &CoefficientSet, topology: XTopology) -> Result<Self, VelocityError> {
        let u = compute_u(s, coeffs)?;
        let w = compute_w(&u, topology);
        Ok(Self { u, w })
    }

    pub fn zero(grid: Grid) -> Self {
        Self { u: ScalarField::zeros(grid), w: ZFaceField::zeros(grid) }
    }

    /// Horizontal velocity on the vertical faces `x = i·dx`, laid out like
    /// [`crate::grid::FaceCoefficients::x`].
    ///
    /// Interior faces average the two neighbouring cells. At bounded `x`
    /// edges the outside cell is the quadratic extrapolation
    /// `3U₀ − 3U₁ + U₂`, which is exactly the ghost value implied by the
    /// one-sided second-order stencil inside `W`; this keeps the face fluxes
    /// discretely divergence free in the boundary columns as well.
    pub fn x_face_velocity(&self, topology: XTopology) -> Vec<f64> {
        let g = *self.u.grid();
        let (nx, nz) = (g.nx(), g.nz());
        let u = &self.u;
        let mut out = vec![0.0; (nx + 1) * nz];
        for j in 0..nz {
            for i in 1..nx {
                out[i * nz + j] = 0.5 * (u[(i - 1, j)] + u[(i, j)]);
            }
            match topology {
                XTopology::Periodic => {
                    let v = 0.5 * (u[(nx - 1, j)] + u[(0, j)]);
                    out[j] = v;
                    out[nx * nz + j] = v;
                }
                XTopology::Bounded => {
                    let ghost_l = 3.0 * u[(0, j)] - 3.0 * u[(1, j)] + u[(2, j)];
                    let ghost_r = 3.0 * u[(nx - 1, j)] - 3.0 * u[(nx - 2, j)] + u[(nx - 3, j)];
                    out[j] = 0.5 * (ghost_l + u[(0, j)]);
                    out[nx * nz + j] = 0.5 * (u[(nx - 1, j)] + ghost_r);
                }
            }
        }
        out
    }

    /// Largest face speed `max(|u_face|, |w_face|)` over all faces that carry flux.
    pub fn max_face_speed(&self, topology: XTopology) -> f64 {
        let ux = self.x_face_velocity(topology).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let g = self.w.grid();
        let mut wz = 0.0f64;
        for i in 0..g.nx() {
            for &v in &self.w.column(i)[1..g.nz()] {
                wz = wz.max(v.abs());
            }
        }
        ux.max(wz)
    }
    /// `max over cells of ½ Σ_faces |v_f| / h_f`: the rate at which a cell is
    /// flushed. For discretely divergence-free face fluxes the inflow part
    /// of that sum equals the outflow part, so explicit upwind transport is
    /// monotone when `Δt · L_f · rate ≤ 1`.
    pub fn max_cell_rate(&self, topology: XTopology) -> f64 {
        let g = *self.u.grid();
        let (nx, nz) = (g.nx(), g.nz());
        let uf = self.x_face_velocity(topology);
        let (hx, hz) = (0.5 / g.dx(), 0.5 / g.dz());
        let mut worst = 0.0f64;
        for i in 0..nx {
            let w = self.w.column(i);
            for j in 0..nz {
                let ux = (uf[i * nz + j].abs() + uf[(i + 1) * nz + j].abs()) * hx;
                let wz = (w[j].abs() + w[j + 1].abs()) * hz;
                worst = worst.max(ux + wz);
            }
        }
        worst
    }
}

/// `U[S] = λ_tot(S) / ∫₀¹ λ_tot(S) dz`, column by column.
pub fn compute_u(s: &ScalarField, coeffs: &CoefficientSet) -> Result<ScalarField, VelocityError> {
    if let Err(crate::grid::GridError::NonFinite { i, j }) = s.check_finite() {
        return Err(VelocityError::NonFinite { i, j });
    }
    let mobility = s.map(|v| coeffs.total_mobility_ext(v));
    normalize_columns(&mobility, coeffs.lambda_floor())
}

/// Divides every column by its midpoint-rule integral over `z`. Columns whose
/// integral falls below `floor / 2` are rejected.
pub fn normalize_columns(mobility: &ScalarField, floor: f64) -> Result<ScalarField, VelocityError> {
    let g = *mobility.grid();
    let mut u = mobility.clone();
    for i in 0..g.nx() {
        let out = u.column_mut(i);
        let integral = out.iter().sum::<f64>() * g.dz();
        if !(integral >= 0.5 * floor) {
            return Err(VelocityError::DegenerateColumn { column: i, integral });
        }
        let inv = 1.0 / integral;
        out.iter_mut().for_each(|o| *o *= inv);
    }
    Ok(u)
}

/// `W = −∂x ∫₀ᶻ U dr` on horizontal faces, using the second-order `x` stencil.
pub fn compute_w(u: &ScalarField, topology: XTopology) -> ZFaceField {
    compute_w_with(u, topology, XStencil::SecondOrder)
}

/// As [`compute_w`] with an explicit `x` stencil. Anything other than
/// [`XStencil::SecondOrder`] breaks compatibility with the face velocities and
/// exists for negative controls.
pub fn compute_w_with(u: &ScalarField, topology: XTopology, stencil: XStencil) -> ZFaceField {
    let g = *u.grid();
    let (nx, nz) = (g.nx(), g.nz());
    // D_x commutes with the column sum, so W is accumulated from D_x U.
    // Compensated summation keeps D_z W = −D_x U to a few ulps of |W|.
    let mut d = vec![0.0; nx * nz];
    gradient_x_slices(u.values(), &g, nz, topology, stencil, &mut d);
    let mut w = ZFaceField::zeros(g);
    for i in 0..nx {
        let base = i * (nz + 1);
        let (mut sum, mut carry) = (0.0f64, 0.0f64);
        for j in 0..nz {
            let term = -g.dz() * d[i * nz + j];
            let t = sum + term;
            carry += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
            sum = t;
            w.values[base + j + 1] = sum + carry;
        }
    }
    w
}

/// `max |D_x U + D_z W|` over all cells, where `D_z` differences consecutive
/// faces and `D_x` is the second-order stencil used inside [`compute_w`].
pub fn incompressibility_residual(v: &VelocityField, topology: XTopology) -> f64 {
    let g = *v.u.grid();
    let dux = gradient_x(&v.u, topology);
    let inv_dz = 1.0 / g.dz();
    let mut worst = 0.0f64;
    for i in 0..g.nx() {
        let wc = v.w.column(i);
        for (j, d) in dux.column(i).iter().enumerate() {
            worst = worst.max((d + (wc[j + 1] - wc[j]) * inv_dz).abs());
        }
    }
    worst
}
