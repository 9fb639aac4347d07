//! Nonlocal pseudo-parabolic two-phase flow in a vertical-equilibrium
//! reduced domain: a finite-volume solver with an IMEX time step, a
//! sine-Galerkin verifier for the a priori estimates, and the experiment
//! drivers built on top of them.

pub mod cli;
pub mod coefficients;
pub mod diagnostics;
pub mod experiments;
pub mod fv;
pub mod galerkin;
pub mod grid;
pub mod invariants;
pub mod linear_solver;
pub mod velocity;
