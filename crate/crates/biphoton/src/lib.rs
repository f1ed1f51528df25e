//! Spatial correlations of photon pairs behind a birefringent double slit.
//!
//! A nonlinear crystal pumped at 351 nm emits collinear photon pairs with
//! orthogonal polarizations. A double slit with crossed quarter-wave plates
//! imprints a polarization-dependent phase, and two detectors in the far
//! field scan the fourth-order correlation G(x1, x2). For the right plate
//! setting the coincidence rate vanishes at x1 = x2 while singles stay flat,
//! the spatial analogue of photon antibunching; any classical intensity
//! model obeys a Schwarz-type bound that the measured pattern violates.
//!
//! The crate provides the pieces of that chain as separate modules:
//!
//! - [`setup`]: geometry and wavelengths of source, mask and detection plane.
//! - [`spectrum`]: the two-photon angular spectrum leaving the crystal and
//!   its free propagation to the slit plane.
//! - [`aperture`]: polarization-resolved slit masks and transfer functions.
//! - [`amplitude`]: detection amplitudes, in closed form for delta slits and
//!   by adaptive quadrature for the general mask.
//! - [`correlation`]: normalized coincidence grids, the antibunching witness
//!   and the classical benchmark it is compared against.
//! - [`model`]: runtime-selectable coincidence models behind one trait.
//! - [`montecarlo`]: seeded rejection sampling of coincidence events.
//! - [`io`]: plain-text serialization of grids, events and reports.
//!
//! Lengths are meters, angles radians, transverse momenta rad/m throughout.

pub mod amplitude;
pub mod aperture;
pub mod correlation;
pub mod error;
pub mod io;
pub mod model;
pub mod montecarlo;
pub mod numerics;
pub mod setup;
pub mod spectrum;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use setup::{PhysicalSetup, Polarization, TransverseVector};
