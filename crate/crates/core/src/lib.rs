//! Approximate acoustic and quantum cloaks built from radially layered
//! isotropic media.
//!
//! The pipeline runs: cloak geometry ([`cloakmap`]) → isotropic laminate
//! ([`homog`]) → per-degree radial solves ([`radial`]) → scattering data
//! ([`scatter`]), Dirichlet-to-Neumann spectra and trapped states
//! ([`dnspec`]), and the Schrödinger picture ([`quantum`]). [`config`] and
//! [`run`] drive batch experiments.

pub mod cloakmap;
pub mod config;
pub mod dnspec;
pub mod error;
pub mod homog;
pub mod presets;
pub mod quantum;
pub mod radial;
pub mod run;
pub mod scatter;
pub mod specfun;

pub use error::{Error, Result};
