//! Shared numerical machinery: quadrature, interpolation, finite
//! differences, ODE integrators, line fits and prefix integrals.

pub mod cumulative;
pub mod fd;
pub mod fit;
pub mod interp;
pub mod ode;
pub mod quad;
