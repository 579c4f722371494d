//! Numerical primitives shared by the physics modules.

mod bessel;
mod differentiate;
mod fit;
mod gauss;
mod quadrature;
mod roots;

pub use bessel::{bessel_j, bessel_j012};
pub use differentiate::second_derivative;
pub use fit::{loglog_slope, LogLogFit};
pub use gauss::gauss_legendre;
pub use quadrature::{
    integrate_adaptive, integrate_with_breakpoints, Interval, QuadValue, Quadrature,
    QuadratureReport, ToleranceSpec,
};
pub use roots::{bisect, Bracket};
