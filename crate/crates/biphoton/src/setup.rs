//! Geometry and beam parameters shared by every model in the crate.
//!
//! The source is collinear degenerate type-II down-conversion: a pump of
//! wavelength `pump_wavelength` produces signal and idler at twice that
//! wavelength. Everything downstream is paraxial and one-dimensional in the
//! transverse `x` coordinate; slits are treated as infinite along `y`.

use crate::error::{Error, Result};

/// Transverse wave-vector (or position) components, in the plane normal to
/// the propagation axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseVector {
    pub x: f64,
    pub y: f64,
}

impl TransverseVector {
    pub const fn new(x: f64, y: f64) -> Self {
        TransverseVector { x, y }
    }

    /// Squared Euclidean norm.
    pub fn norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }
}

/// Down-converted polarization label. `E` is the extraordinary photon,
/// `O` the ordinary one; the pair is always born as one of each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    E,
    O,
}

/// Fixed experimental geometry: crystal, pump, double slit and detection
/// plane. All lengths in meters.
///
/// Distances are measured along the propagation axis: the crystal sits at the
/// origin, the slit plane at `crystal_aperture_distance`, the scanning
/// detectors another `aperture_detector_distance` behind the slits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalSetup {
    /// Pump wavelength (the down-converted photons are at twice this).
    pub pump_wavelength: f64,
    /// Nonlinear crystal length along the pump.
    pub crystal_length: f64,
    /// Crystal exit face to slit plane.
    pub crystal_aperture_distance: f64,
    /// Slit plane to detection plane.
    pub aperture_detector_distance: f64,
    /// Center-to-center slit separation.
    pub slit_separation: f64,
    /// Slit opening width; 0 selects the idealized delta-slit limit.
    pub slit_width: f64,
    /// Pump beam waist, taken to sit on the slit plane.
    pub pump_waist: f64,
}

impl PhysicalSetup {
    pub fn new(
        pump_wavelength: f64,
        crystal_length: f64,
        crystal_aperture_distance: f64,
        aperture_detector_distance: f64,
        slit_separation: f64,
        slit_width: f64,
        pump_waist: f64,
    ) -> Result<Self> {
        let setup = PhysicalSetup {
            pump_wavelength,
            crystal_length,
            crystal_aperture_distance,
            aperture_detector_distance,
            slit_separation,
            slit_width,
            pump_waist,
        };
        setup.validate()?;
        Ok(setup)
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("pump_wavelength", self.pump_wavelength),
            ("crystal_length", self.crystal_length),
            ("aperture_detector_distance", self.aperture_detector_distance),
            ("slit_separation", self.slit_separation),
            ("pump_waist", self.pump_waist),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveParameter { name, value });
            }
        }
        let non_negative = [
            ("crystal_aperture_distance", self.crystal_aperture_distance),
            ("slit_width", self.slit_width),
        ];
        for (name, value) in non_negative {
            if value < 0.0 || !value.is_finite() {
                return Err(Error::NegativeParameter { name, value });
            }
        }
        if self.slit_width >= self.slit_separation {
            return Err(Error::OverlappingSlits {
                separation: self.slit_separation,
                width: self.slit_width,
            });
        }
        Ok(())
    }

    /// Pump wavenumber K = 2pi / pump_wavelength.
    pub fn pump_wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.pump_wavelength
    }

    /// Down-converted wavenumber. Degenerate collinear phase matching is
    /// hard-wired, so this is exactly K/2.
    pub fn downconverted_wavenumber(&self) -> f64 {
        self.pump_wavenumber() / 2.0
    }

    /// Down-converted wavelength, twice the pump wavelength.
    pub fn downconverted_wavelength(&self) -> f64 {
        2.0 * self.pump_wavelength
    }

    /// Period of the coincidence fringe in the detector-difference coordinate
    /// x1 - x2, i.e. 2 pi z / (k d).
    pub fn fringe_period(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.aperture_detector_distance
            / (self.downconverted_wavenumber() * self.slit_separation)
    }

    /// True when a detection window of the given half-width is comfortably
    /// paraxial for this geometry. Callers should warn, not fail, when this
    /// returns false.
    pub fn paraxial_ok(&self, window_half_width: f64) -> bool {
        window_half_width <= self.aperture_detector_distance / 20.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> PhysicalSetup {
        // 351 nm pump, so the pair is at 702 nm.
        PhysicalSetup::new(351e-9, 5e-3, 25e-3, 1.0, 200e-6, 0.0, 20e-6).unwrap()
    }

    #[test]
    fn wavenumbers_are_degenerate() {
        let s = reference();
        let k_pump = s.pump_wavenumber();
        assert!((k_pump - 2.0 * std::f64::consts::PI / 351e-9).abs() < 1e-3);
        assert_eq!(s.downconverted_wavenumber(), k_pump / 2.0);
        assert!((s.downconverted_wavelength() - 702e-9).abs() < 1e-24);
    }

    #[test]
    fn fringe_period_matches_geometry() {
        // 2 pi z / (k d) with lambda = 702 nm, d = 200 um, z = 1 m
        // is lambda z / d = 3.51 mm.
        let s = reference();
        assert!(
            (s.fringe_period() - 3.51e-3).abs() < 1e-8,
            "fringe period {} m",
            s.fringe_period()
        );
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(PhysicalSetup::new(0.0, 5e-3, 25e-3, 1.0, 200e-6, 0.0, 20e-6).is_err());
        assert!(PhysicalSetup::new(351e-9, -1.0, 25e-3, 1.0, 200e-6, 0.0, 20e-6).is_err());
        assert!(PhysicalSetup::new(351e-9, 5e-3, -25e-3, 1.0, 200e-6, 0.0, 20e-6).is_err());
        // slit wider than the separation would merge the openings
        assert!(matches!(
            PhysicalSetup::new(351e-9, 5e-3, 25e-3, 1.0, 200e-6, 300e-6, 20e-6),
            Err(Error::OverlappingSlits { .. })
        ));
    }

    #[test]
    fn zero_crystal_aperture_distance_is_allowed() {
        // Slit directly at the crystal face is a legitimate limit.
        assert!(PhysicalSetup::new(351e-9, 5e-3, 0.0, 1.0, 200e-6, 0.0, 20e-6).is_ok());
    }

    #[test]
    fn paraxial_guard() {
        let s = reference();
        assert!(s.paraxial_ok(4e-3));
        assert!(!s.paraxial_ok(0.3));
    }
}
