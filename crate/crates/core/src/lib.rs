//! Magnetic spin-flip rates and spatial coherence of atoms trapped near
//! layered conducting surfaces.
//!
//! The crate is organised bottom-up: [`numerics`] holds the quadrature, Bessel
//! and root-finding primitives; [`layered_media`] computes Fresnel reflection
//! of planar stacks; [`green_kernel`] turns reflection into the magnetic
//! Green kernel of the surface; [`rates_coherence`] contracts that kernel with
//! atomic spin matrix elements into rates, line shifts and coherence
//! functions.

pub mod atomics;
pub mod error;
pub mod green_kernel;
pub mod layered_media;
pub mod numerics;
pub mod rates_coherence;

pub use error::{Error, Result};
