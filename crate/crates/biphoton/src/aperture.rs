//! Polarization-dependent slit masks and their momentum-space transfer
//! functions.
//!
//! The central object is a double slit with a quarter-wave plate over each
//! opening, fast axes crossed: an ordinary photon picks up exp(-i phi) at one
//! slit, an extraordinary one at the other. With phi = pi/2 that relative
//! phase is what turns the two-slit pattern into an antibunched one. The
//! retardance is a parameter so imperfect plates (and their removal, phi = 0)
//! can be studied with the same code path.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::sinc;
use crate::setup::Polarization;

/// One rectangular opening: position, width and a complex transmission in
/// polar form. Width 0 means the idealized delta slit. The transmission is
/// kept as modulus and phase so config round-trips are lossless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitElement {
    pub center: f64,
    pub width: f64,
    pub transmission_modulus: f64,
    pub transmission_phase: f64,
}

impl SlitElement {
    pub fn new(center: f64, width: f64, transmission: Complex64) -> Result<Self> {
        Self::from_polar(center, width, transmission.norm(), transmission.arg())
    }

    pub fn from_polar(center: f64, width: f64, modulus: f64, phase: f64) -> Result<Self> {
        if width < 0.0 || !width.is_finite() {
            return Err(Error::NegativeParameter { name: "slit width", value: width });
        }
        if !center.is_finite() {
            return Err(Error::NegativeParameter { name: "slit center", value: center });
        }
        if !(0.0..=1.0).contains(&modulus) {
            return Err(Error::TransmissionTooLarge(modulus));
        }
        Ok(SlitElement { center, width, transmission_modulus: modulus, transmission_phase: phase })
    }

    pub fn transmission(&self) -> Complex64 {
        Complex64::from_polar(self.transmission_modulus, self.transmission_phase)
    }
}

/// A transverse mask per polarization channel. `ee` acts on extraordinary
/// light, `oo` on ordinary; the cross channels exist in the type but stay
/// empty here since a wave plate does not convert polarizations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ApertureFunction {
    pub ee: Vec<SlitElement>,
    pub oo: Vec<SlitElement>,
    pub eo: Vec<SlitElement>,
    pub oe: Vec<SlitElement>,
}

impl ApertureFunction {
    /// Elements coupling `input` polarization to `output` polarization.
    pub fn channel(&self, input: Polarization, output: Polarization) -> &[SlitElement] {
        use Polarization::{E, O};
        match (input, output) {
            (E, E) => &self.ee,
            (O, O) => &self.oo,
            (E, O) => &self.eo,
            (O, E) => &self.oe,
        }
    }

    pub fn has_cross_channels(&self) -> bool {
        !self.eo.is_empty() || !self.oe.is_empty()
    }

    /// Checks that openings within each channel do not overlap.
    pub fn validate(&self) -> Result<()> {
        for slits in [&self.ee, &self.oo, &self.eo, &self.oe] {
            let mut sorted: Vec<&SlitElement> = slits.iter().collect();
            sorted.sort_by(|a, b| a.center.total_cmp(&b.center));
            for pair in sorted.windows(2) {
                let gap = pair[1].center - pair[0].center;
                let needed = (pair[0].width + pair[1].width) / 2.0;
                if gap < needed {
                    return Err(Error::OverlappingSlits { separation: gap, width: needed });
                }
            }
        }
        Ok(())
    }
}

/// The standard mask: two slits separated by `separation`, quarter-wave
/// plates with crossed fast axes. The ordinary channel carries exp(-i pi/2)
/// at +d/2, the extraordinary one at -d/2.
pub fn birefringent_double_slit(separation: f64, width: f64) -> Result<ApertureFunction> {
    birefringent_double_slit_with_retardance(separation, width, std::f64::consts::FRAC_PI_2)
}

/// Same mask with an arbitrary wave-plate retardance. Zero retardance
/// degenerates into a plain double slit, identical in both channels.
pub fn birefringent_double_slit_with_retardance(
    separation: f64,
    width: f64,
    retardance: f64,
) -> Result<ApertureFunction> {
    if !(separation > 0.0) || !separation.is_finite() {
        return Err(Error::NonPositiveParameter { name: "slit_separation", value: separation });
    }
    if width >= separation {
        return Err(Error::OverlappingSlits { separation, width });
    }
    if !retardance.is_finite() {
        return Err(Error::NegativeParameter { name: "retardance", value: retardance });
    }
    let half = separation / 2.0;
    let delayed = |c: f64| SlitElement::from_polar(c, width, 1.0, -retardance);
    let open = |c: f64| SlitElement::from_polar(c, width, 1.0, 0.0);
    Ok(ApertureFunction {
        ee: vec![open(half)?, delayed(-half)?],
        oo: vec![delayed(half)?, open(-half)?],
        eo: Vec::new(),
        oe: Vec::new(),
    })
}

/// Fourier transform of one channel of the mask at transverse momentum `qx`.
///
/// Each opening contributes transmission * sinc(qx w / 2) * exp(-i qx c);
/// slit transmissions are normalized per opening so the width-0 limit goes
/// over smoothly into the delta-slit expression. Empty channels give an
/// exact 0.
pub fn transfer_function(
    aperture: &ApertureFunction,
    input: Polarization,
    output: Polarization,
    qx: f64,
) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for slit in aperture.channel(input, output) {
        let envelope = sinc(qx * slit.width / 2.0);
        acc += slit.transmission() * envelope * Complex64::from_polar(1.0, -qx * slit.center);
    }
    acc
}

/// Writes the aperture as one `slit` line per element, e.g.
/// `slit channel=oo center_m=0.0001 width_m=0 t_mod=1 t_phase=-1.5707963267948966`.
pub fn to_config_block(aperture: &ApertureFunction) -> String {
    let mut out = String::new();
    let channels: [(&str, &[SlitElement]); 4] = [
        ("ee", &aperture.ee),
        ("oo", &aperture.oo),
        ("eo", &aperture.eo),
        ("oe", &aperture.oe),
    ];
    for (name, slits) in channels {
        for s in slits {
            out.push_str(&format!(
                "slit channel={name} center_m={} width_m={} t_mod={} t_phase={}\n",
                s.center, s.width, s.transmission_modulus, s.transmission_phase
            ));
        }
    }
    out
}

/// Parses the block format written by [`to_config_block`]. Lines starting
/// with `#` and blank lines are ignored; anything else must be a full `slit`
/// line. Errors carry the 1-based line number.
pub fn from_config_block(block: &str) -> Result<ApertureFunction> {
    let mut aperture = ApertureFunction::default();
    for (idx, raw) in block.lines().enumerate() {
        let line = raw.trim();
        let lineno = idx + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        if tokens.next() != Some("slit") {
            return Err(Error::ApertureParse {
                line: lineno,
                message: format!("expected a `slit` line, got `{line}`"),
            });
        }
        let mut channel = None;
        let mut center = None;
        let mut width = None;
        let mut t_mod = None;
        let mut t_phase = None;
        for token in tokens {
            let (key, value) = token.split_once('=').ok_or_else(|| Error::ApertureParse {
                line: lineno,
                message: format!("`{token}` is not a key=value pair"),
            })?;
            let parse_f64 = |v: &str| {
                v.parse::<f64>().map_err(|_| Error::ApertureParse {
                    line: lineno,
                    message: format!("`{v}` is not a number (key {key})"),
                })
            };
            match key {
                "channel" => channel = Some(value.to_string()),
                "center_m" => center = Some(parse_f64(value)?),
                "width_m" => width = Some(parse_f64(value)?),
                "t_mod" => t_mod = Some(parse_f64(value)?),
                "t_phase" => t_phase = Some(parse_f64(value)?),
                other => {
                    return Err(Error::ApertureParse {
                        line: lineno,
                        message: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        let missing = |what: &str| Error::ApertureParse {
            line: lineno,
            message: format!("missing {what}"),
        };
        let slit = SlitElement::from_polar(
            center.ok_or_else(|| missing("center_m"))?,
            width.ok_or_else(|| missing("width_m"))?,
            t_mod.ok_or_else(|| missing("t_mod"))?,
            t_phase.ok_or_else(|| missing("t_phase"))?,
        )
        .map_err(|e| Error::ApertureParse { line: lineno, message: e.to_string() })?;
        match channel.ok_or_else(|| missing("channel"))?.as_str() {
            "ee" => aperture.ee.push(slit),
            "oo" => aperture.oo.push(slit),
            "eo" => aperture.eo.push(slit),
            "oe" => aperture.oe.push(slit),
            other => {
                return Err(Error::ApertureParse {
                    line: lineno,
                    message: format!("unknown channel `{other}`"),
                })
            }
        }
    }
    aperture.validate()?;
    Ok(aperture)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setup::Polarization::{E, O};
    use approx::assert_relative_eq;

    const D: f64 = 200e-6;

    #[test]
    fn standard_mask_matches_the_quarter_wave_layout() {
        let ap = birefringent_double_slit(D, 0.0).unwrap();
        // Ordinary channel: exp(-i pi/2) at +d/2, clear at -d/2.
        assert_eq!(ap.oo[0].center, D / 2.0);
        assert_relative_eq!(ap.oo[0].transmission().im, -1.0, max_relative = 1e-15);
        assert!(ap.oo[0].transmission().re.abs() < 1e-15);
        assert_eq!(ap.oo[1].transmission(), Complex64::new(1.0, 0.0));
        // Extraordinary channel mirrored.
        assert_eq!(ap.ee[0].transmission(), Complex64::new(1.0, 0.0));
        assert_relative_eq!(ap.ee[1].transmission().im, -1.0, max_relative = 1e-15);
        assert!(!ap.has_cross_channels());
    }

    #[test]
    fn zero_retardance_gives_a_plain_double_slit() {
        let ap = birefringent_double_slit_with_retardance(D, 0.0, 0.0).unwrap();
        for slit in ap.ee.iter().chain(ap.oo.iter()) {
            assert_eq!(slit.transmission(), Complex64::new(1.0, 0.0));
        }
        assert_eq!(ap.ee, ap.oo);
    }

    #[test]
    fn transfer_at_zero_momentum_is_the_transmission_sum() {
        let ap = birefringent_double_slit_with_retardance(D, 0.0, 0.0).unwrap();
        let t = transfer_function(&ap, O, O, 0.0);
        assert_relative_eq!(t.re, 2.0, max_relative = 1e-15);
        assert!(t.im.abs() < 1e-15);
    }

    #[test]
    fn delta_transfer_matches_the_two_term_expression() {
        let ap = birefringent_double_slit(D, 0.0).unwrap();
        for qx in [-3e4, -1e3, 0.0, 2e4, 9e4] {
            let got = transfer_function(&ap, O, O, qx);
            let want = Complex64::new(0.0, -1.0) * Complex64::from_polar(1.0, -qx * D / 2.0)
                + Complex64::from_polar(1.0, qx * D / 2.0);
            assert!((got - want).norm() < 1e-14, "qx = {qx}: {got} vs {want}");
        }
    }

    #[test]
    fn cross_channels_are_exactly_zero() {
        let ap = birefringent_double_slit(D, 50e-6).unwrap();
        assert_eq!(transfer_function(&ap, E, O, 1.7e4), Complex64::new(0.0, 0.0));
        assert_eq!(transfer_function(&ap, O, E, -8e3), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn finite_width_converges_to_the_delta_form() {
        let delta = birefringent_double_slit(D, 0.0).unwrap();
        let narrow = birefringent_double_slit(D, D / 1e6).unwrap();
        for i in 0..10 {
            let qx = -9e4 + 2e4 * i as f64;
            let a = transfer_function(&delta, E, E, qx);
            let b = transfer_function(&narrow, E, E, qx);
            assert!(
                (a - b).norm() < 1e-6 * a.norm().max(1e-30),
                "qx = {qx}: delta {a} vs narrow {b}"
            );
        }
    }

    #[test]
    fn finite_width_carries_the_sinc_envelope() {
        let width = 70e-6;
        let ap = birefringent_double_slit_with_retardance(D, width, 0.0).unwrap();
        // First envelope zero: qx w / 2 = pi.
        let qx = 2.0 * std::f64::consts::PI / width;
        assert!(transfer_function(&ap, E, E, qx).norm() < 1e-12);
    }

    #[test]
    fn channel_swap_mirrors_momentum() {
        let ap = birefringent_double_slit(D, 30e-6).unwrap();
        for qx in [-7.3e4, -100.0, 0.0, 5e3, 8.8e4] {
            let ee = transfer_function(&ap, E, E, qx);
            let oo = transfer_function(&ap, O, O, -qx);
            assert!((ee - oo).norm() < 1e-14, "swap relation broken at qx = {qx}");
        }
    }

    #[test]
    fn transfer_modulus_is_bounded_by_total_transmission() {
        let ap = birefringent_double_slit(D, 40e-6).unwrap();
        for qx in [-1e5, -1.7e4, 0.0, 3.3e4, 1e5] {
            assert!(transfer_function(&ap, O, O, qx).norm() <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn config_block_round_trips_bitwise() {
        let ap = birefringent_double_slit(D, 55.5e-6).unwrap();
        let block = to_config_block(&ap);
        let back = from_config_block(&block).unwrap();
        assert_eq!(ap, back);
    }

    #[test]
    fn config_block_errors_carry_line_numbers() {
        let err = from_config_block("slit channel=ee center_m=0 width_m=0 t_mod=1 t_phase=0\nnot_a_slit\n")
            .unwrap_err();
        match err {
            Error::ApertureParse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected a parse error, got {other:?}"),
        }
        let err = from_config_block("slit channel=ee center_m=zero width_m=0 t_mod=1 t_phase=0\n")
            .unwrap_err();
        assert!(matches!(err, Error::ApertureParse { line: 1, .. }));
    }

    #[test]
    fn overlapping_slits_rejected() {
        assert!(matches!(
            birefringent_double_slit(D, D),
            Err(Error::OverlappingSlits { .. })
        ));
        let block = "slit channel=ee center_m=0 width_m=3e-4 t_mod=1 t_phase=0\n\
                     slit channel=ee center_m=1e-4 width_m=3e-4 t_mod=1 t_phase=0\n";
        assert!(from_config_block(block).is_err());
    }
}
