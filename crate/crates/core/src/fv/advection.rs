//! First-order upwind discretization of `∂x(f(S)U) + ∂z(f(S)W)`.

use crate::coefficients::CoefficientSet;
use crate::grid::{BoundaryConditions, ScalarField, XBoundary};
use crate::velocity::VelocityField;

/// Cell divergence of the upwind fluxes together with the net flux leaving
/// through the boundary, `∫_∂Ω f(S) V·n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Advection {
    pub divergence: ScalarField,
    pub boundary_outflow: f64,
}

/// Upwind flux divergence. Face velocities come from
/// [`VelocityField::x_face_velocity`] and the stored `W` faces; the face value
/// of `f` is taken in the upwind cell. At Dirichlet edges the upwind value for
/// inflow is the boundary value; at Neumann edges it is the boundary cell
/// itself. Top and bottom carry no flux.
pub fn advective_divergence(
    s: &ScalarField,
    v: &VelocityField,
    coeffs: &CoefficientSet,
    bc: &BoundaryConditions,
) -> Advection {
    let g = *s.grid();
    let (nx, nz) = (g.nx(), g.nz());
    let topology = bc.topology();
    let f: Vec<f64> = s.values().iter().map(|&x| coeffs.frac_flow_ext(x)).collect();
    let u_face = v.x_face_velocity(topology);

    // x-face fluxes, laid out like the face velocities
    let mut fx = vec![0.0; (nx + 1) * nz];
    for j in 0..nz {
        for i in 1..nx {
            let u = u_face[i * nz + j];
            let up = if u >= 0.0 { f[(i - 1) * nz + j] } else { f[i * nz + j] };
            fx[i * nz + j] = u * up;
        }
        match &bc.x {
            XBoundary::Periodic => {
                let u = u_face[j];
                let up = if u >= 0.0 { f[(nx - 1) * nz + j] } else { f[j] };
                fx[j] = u * up;
                fx[nx * nz + j] = u * up;
            }
            XBoundary::Walls { .. } => {
                let u = u_face[j];
                let up = match (u >= 0.0, bc.left_value(j)) {
                    (true, Some(gv)) => coeffs.frac_flow_ext(gv),
                    _ => f[j],
                };
                fx[j] = u * up;
                let u = u_face[nx * nz + j];
                let up = match (u >= 0.0, bc.right_value(j)) {
                    (false, Some(gv)) => coeffs.frac_flow_ext(gv),
                    _ => f[(nx - 1) * nz + j],
                };
                fx[nx * nz + j] = u * up;
            }
        }
    }

    let (idx, idz) = (1.0 / g.dx(), 1.0 / g.dz());
    let mut div = ScalarField::zeros(g);
    let out = div.values_mut();
    for i in 0..nx {
        let w = v.w.column(i);
        let fc = &f[i * nz..(i + 1) * nz];
        // interior z-faces only; bottom and top are impermeable
        let mut below = 0.0;
        for j in 0..nz {
            let above = if j + 1 < nz {
                let wf = w[j + 1];
                wf * if wf >= 0.0 { fc[j] } else { fc[j + 1] }
            } else {
                0.0
            };
            out[i * nz + j] = (fx[(i + 1) * nz + j] - fx[i * nz + j]) * idx + (above - below) * idz;
            below = above;
        }
    }

    let boundary_outflow = match bc.x {
        XBoundary::Periodic => 0.0,
        XBoundary::Walls { .. } => (0..nz).map(|j| fx[nx * nz + j] - fx[j]).sum::<f64>() * g.dz(),
    };
    Advection { divergence: div, boundary_outflow }
}
