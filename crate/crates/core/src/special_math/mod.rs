//! Numerical primitives shared by the physics modules.

mod dawson;
pub mod fourier;
pub mod quadrature;

pub use dawson::dawson;
pub use fourier::{invert_charfn, invert_charfn_with_edge, CharFnGrid, EdgeModel};
pub use quadrature::{
    gauss_legendre, integrate_interval, integrate_radial, integrate_radial_complex,
    QuadEstimate, QuadratureSpec,
};
