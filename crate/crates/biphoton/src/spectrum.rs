//! Two-photon angular spectrum of the source and its transport to the slit
//! plane.
//!
//! The pair is emitted with a spectrum that factorizes in the sum and
//! difference of the transverse momenta: the sum inherits the pump's Gaussian
//! profile, the difference carries the phase-matching sinc of the crystal.
//! Free propagation to the slit plane adds one quadratic phase per photon.

use num_complex::Complex64;

use crate::numerics::sinc;
use crate::setup::{PhysicalSetup, TransverseVector};

/// Pump angular spectrum: Gaussian of waist `pump_waist` times the quadratic
/// phase accumulated over the crystal-to-slit distance, written so that the
/// waist sits on the slit plane.
pub fn pump_angular_spectrum(q: TransverseVector, setup: &PhysicalSetup) -> Complex64 {
    let w0 = setup.pump_waist;
    let big_k = setup.pump_wavenumber();
    let s = setup.crystal_aperture_distance;
    let q2 = q.norm_sq();
    let modulus = (-w0 * w0 * q2 / 4.0).exp();
    let phase = s * (big_k - q2 / (2.0 * big_k));
    Complex64::from_polar(modulus, phase)
}

/// Two-photon angular spectrum at the crystal exit face.
///
/// Real by construction: the Gaussian pump profile times the phase-matching
/// sinc, whose sign it inherits in the outer lobes.
pub fn biphoton_angular_spectrum(
    q1: TransverseVector,
    q2: TransverseVector,
    setup: &PhysicalSetup,
) -> f64 {
    let big_k = setup.pump_wavenumber();
    let length = setup.crystal_length;
    let w0 = setup.pump_waist;
    let prefactor = (2.0 * length / (std::f64::consts::PI.powi(2) * big_k)).sqrt();
    let sum_sq = TransverseVector::new(q1.x + q2.x, q1.y + q2.y).norm_sq();
    let diff_sq = TransverseVector::new(q1.x - q2.x, q1.y - q2.y).norm_sq();
    prefactor * (-w0 * w0 * sum_sq / 4.0).exp() * sinc(length * diff_sq / (4.0 * big_k))
}

/// Quadratic phase of free flight from crystal to slit plane, one factor of
/// exp(-i s q^2 / 2k) per photon written in sum and difference coordinates.
/// Unit modulus always; exactly 1 when the slit sits at the crystal.
pub fn propagate_to_aperture(
    q1: TransverseVector,
    q2: TransverseVector,
    setup: &PhysicalSetup,
) -> Complex64 {
    let big_k = setup.pump_wavenumber();
    let s = setup.crystal_aperture_distance;
    let sum_sq = TransverseVector::new(q1.x + q2.x, q1.y + q2.y).norm_sq();
    let diff_sq = TransverseVector::new(q1.x - q2.x, q1.y - q2.y).norm_sq();
    Complex64::from_polar(1.0, -s / (2.0 * big_k) * (sum_sq + diff_sq))
}

/// Two-photon spectrum on the slit plane with the pump waist there.
///
/// The crystal-plane pump converges toward the slit plane, so its spectrum
/// carries the conjugate of the propagation curvature in the sum coordinate.
/// That factor cancels against half of `propagate_to_aperture`, leaving the
/// bare Gaussian in q1+q2 and the free-flight chirp only in q1-q2. Composing
/// the pieces naively without the cancellation would defocus the pump by the
/// crystal-to-slit flight and change the interference weights.
pub fn aperture_plane_spectrum(
    q1: TransverseVector,
    q2: TransverseVector,
    setup: &PhysicalSetup,
) -> Complex64 {
    let big_k = setup.pump_wavenumber();
    let s = setup.crystal_aperture_distance;
    let diff_sq = TransverseVector::new(q1.x - q2.x, q1.y - q2.y).norm_sq();
    let real_part = biphoton_angular_spectrum(q1, q2, setup);
    real_part * Complex64::from_polar(1.0, -s * diff_sq / (2.0 * big_k))
}
