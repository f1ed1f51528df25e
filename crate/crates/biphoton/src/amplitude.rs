//! Two-photon detection amplitudes at the observation plane.
//!
//! Detector 1 sits behind a polarizer passing extraordinary light, detector 2
//! behind one passing ordinary light, both at distance z from the slits. The
//! coincidence amplitude for the (e, o) assignment convolves the two-photon
//! spectrum at the slit plane with one mask transfer function per detector
//! arm; the (o, e) assignment swaps the masks. The coincidence probability is
//! the incoherent sum of the two, since the polarizers make the assignments
//! distinguishable.
//!
//! Two evaluation routes are provided. For the standard mask with idealized
//! zero-width slits the double integral factorizes into one integral over the
//! symmetric momentum Q = q1 + q2 (a Gaussian times a slit-pair cosine) and
//! one over the antisymmetric P = q1 - q2 (the phase-matching sinc times the
//! free-propagation chirp), leaving a handful of closed coefficients that are
//! reused for every detector position. Finite slit widths fall back to a full
//! tensor-product quadrature in the rotated (Q, P) coordinates. Both routes
//! gate their answers on a node-doubling check against an absolute field
//! scale, because the interesting values (the diagonal of an antibunched
//! pattern) are legitimately twenty orders of magnitude below the peak and a
//! relative test would reject them as noise.
//!
//! There is also a closed-form amplitude for the delta-slit limit with the
//! pump focused on the slit plane. It drops overall scale and phase, which a
//! normalized correlation never sees, and is what the quadrature route is
//! validated against.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::aperture::{ApertureFunction, SlitElement};
use crate::error::{Error, Result};
use crate::numerics::{nodes_weights, sinc, QuadRule, QuadratureSpec};
use crate::setup::PhysicalSetup;

/// One joint detector setting: transverse positions at the observation plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorPair {
    pub x1: f64,
    pub x2: f64,
}

impl DetectorPair {
    pub fn new(x1: f64, x2: f64) -> Self {
        DetectorPair { x1, x2 }
    }
}

/// Amplitudes for the two distinguishable polarization assignments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiphotonAmplitude {
    /// Detector 1 catches the extraordinary photon, detector 2 the ordinary.
    pub eo: Complex64,
    /// The swapped assignment.
    pub oe: Complex64,
}

impl BiphotonAmplitude {
    /// Unnormalized coincidence rate: the assignments add incoherently.
    pub fn coincidence_probability(&self) -> f64 {
        self.eo.norm_sqr() + self.oe.norm_sqr()
    }
}

/// Propagation model from the slit plane to the detectors.
///
/// Fraunhofer keeps only the linear phase of each slit; Fresnel retains the
/// quadratic phase of the slit centers, which matters once the mask stops
/// being small against the sqrt(z / k) Fresnel zone. Widths are still treated
/// as locally flat, so this is a narrow-slit correction, not full near-field
/// diffraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionKernel {
    Fraunhofer,
    Fresnel,
}

impl DetectionKernel {
    pub fn name(&self) -> &'static str {
        match self {
            DetectionKernel::Fraunhofer => "fraunhofer",
            DetectionKernel::Fresnel => "fresnel",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fraunhofer" => Some(DetectionKernel::Fraunhofer),
            "fresnel" => Some(DetectionKernel::Fresnel),
            _ => None,
        }
    }
}

/// Closed-form amplitude for the standard quarter-wave double slit.
pub fn amplitude_closed_form(pair: DetectorPair, setup: &PhysicalSetup) -> BiphotonAmplitude {
    amplitude_closed_form_with_retardance(pair, setup, std::f64::consts::FRAC_PI_2)
}

/// Closed-form amplitude for arbitrary wave-plate retardance.
///
/// Valid in the delta-slit limit with the pump waist on the slit plane:
///
/// ```text
/// psi_eo = eps cos(beta (x1 + x2)) + cos(beta (x1 - x2) - phi)
/// psi_oe = eps cos(beta (x1 + x2)) + cos(beta (x1 - x2) + phi)
/// ```
///
/// with beta = k d / 2z for the detected wavenumber k and eps the overlap of
/// the pump profile with the slit separation, exp(-(d / 2 w0)^2). The sum
/// coordinate fringes are carried by the pump width, the difference
/// coordinate fringes by the phase-matched correlations; a quarter-wave
/// retardance turns the latter into sin(beta (x1 - x2)) with opposite signs
/// in the two channels, which is what kills the coincidence rate at x1 = x2.
pub fn amplitude_closed_form_with_retardance(
    pair: DetectorPair,
    setup: &PhysicalSetup,
    retardance: f64,
) -> BiphotonAmplitude {
    let d = setup.slit_separation;
    let eps = (-(d / (2.0 * setup.pump_waist)).powi(2)).exp();
    let beta =
        setup.downconverted_wavenumber() * d / (2.0 * setup.aperture_detector_distance);
    let sum = beta * (pair.x1 + pair.x2);
    let diff = beta * (pair.x1 - pair.x2);
    let pump_term = eps * sum.cos();
    BiphotonAmplitude {
        eo: Complex64::new(pump_term + (diff - retardance).cos(), 0.0),
        oe: Complex64::new(pump_term + (diff + retardance).cos(), 0.0),
    }
}

/// One term of the factorized delta-slit field: a fixed complex coefficient
/// carrying the momentum integrals, attached to the pair of slit centers that
/// set its detector-position phase.
#[derive(Debug, Clone, Copy)]
struct FactoredTerm {
    coeff: Complex64,
    c1: f64,
    c2: f64,
}

#[derive(Debug, Clone)]
struct FactoredField {
    eo: Vec<FactoredTerm>,
    oe: Vec<FactoredTerm>,
}

/// Quadrature evaluator for the detection amplitudes of an arbitrary mask.
///
/// Construction validates the mask, resolves the momentum-space quadrature
/// (domain truncation and node counts follow the integrand's phase budget
/// unless an explicit spec is given) and, for all-delta masks, precomputes
/// the factorized coefficient tables, failing up front if the node-doubling
/// check does not converge.
#[derive(Debug, Clone)]
pub struct NumericAmplitude {
    setup: PhysicalSetup,
    spec: QuadratureSpec,
    ee: Vec<SlitElement>,
    oo: Vec<SlitElement>,
    field_scale: f64,
    factored: Option<FactoredField>,
}

impl NumericAmplitude {
    /// Evaluator with automatic quadrature resolution and defaults suitable
    /// for the standard geometries.
    pub fn new(
        setup: &PhysicalSetup,
        aperture: &ApertureFunction,
        kernel: DetectionKernel,
    ) -> Result<Self> {
        Self::with_options(setup, aperture, kernel, 1.0, 1e-8, false)
    }

    /// Evaluator with tunable truncation and tolerance.
    ///
    /// `domain_factor` scales both momentum half-widths; `force_general`
    /// routes even all-delta masks through the tensor quadrature, mainly for
    /// cross-checking the factorized path.
    pub fn with_options(
        setup: &PhysicalSetup,
        aperture: &ApertureFunction,
        kernel: DetectionKernel,
        domain_factor: f64,
        tolerance: f64,
        force_general: bool,
    ) -> Result<Self> {
        let spec = auto_quadrature_spec(setup, aperture, domain_factor, tolerance)?;
        Self::with_spec(setup, aperture, kernel, spec, force_general)
    }

    /// Evaluator with a caller-supplied quadrature spec.
    pub fn with_spec(
        setup: &PhysicalSetup,
        aperture: &ApertureFunction,
        kernel: DetectionKernel,
        spec: QuadratureSpec,
        force_general: bool,
    ) -> Result<Self> {
        spec.validate()?;
        aperture.validate()?;
        if aperture.has_cross_channels() {
            return Err(Error::CrossChannelAperture);
        }
        if aperture.ee.is_empty() {
            return Err(Error::EmptyApertureChannel("ee"));
        }
        if aperture.oo.is_empty() {
            return Err(Error::EmptyApertureChannel("oo"));
        }
        let ee = effective_slits(&aperture.ee, kernel, setup);
        let oo = effective_slits(&aperture.oo, kernel, setup);
        let mut eval = NumericAmplitude {
            setup: *setup,
            spec,
            ee,
            oo,
            field_scale: 0.0,
            factored: None,
        };
        eval.field_scale = eval.absolute_field_scale();
        let all_delta =
            eval.ee.iter().chain(eval.oo.iter()).all(|s| s.width == 0.0);
        if all_delta && !force_general {
            eval.factored = Some(eval.build_factored_field()?);
        }
        Ok(eval)
    }

    pub fn quadrature_spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    /// True when the evaluator runs on the factorized delta-slit tables.
    pub fn uses_factored_path(&self) -> bool {
        self.factored.is_some()
    }

    /// Detection amplitudes at one detector setting.
    pub fn amplitude(&self, pair: DetectorPair) -> Result<BiphotonAmplitude> {
        for x in [pair.x1, pair.x2] {
            if !self.setup.paraxial_ok(x.abs()) {
                return Err(Error::ParaxialViolation {
                    half_width: x.abs(),
                    distance: self.setup.aperture_detector_distance,
                });
            }
        }
        let k = self.setup.downconverted_wavenumber();
        let z = self.setup.aperture_detector_distance;
        let (a1, a2) = (k * pair.x1 / z, k * pair.x2 / z);
        match &self.factored {
            Some(field) => Ok(BiphotonAmplitude {
                eo: eval_terms(&field.eo, a1, a2),
                oe: eval_terms(&field.oe, a1, a2),
            }),
            None => Ok(BiphotonAmplitude {
                eo: self.tensor_channel(a1, a2, &self.ee, &self.oo)?,
                oe: self.tensor_channel(a1, a2, &self.oo, &self.ee)?,
            }),
        }
    }

    /// Unnormalized coincidence rate at one detector setting.
    pub fn probability(&self, pair: DetectorPair) -> Result<f64> {
        Ok(self.amplitude(pair)?.coincidence_probability())
    }

    /// Amplitudes over the full cartesian grid of detector positions,
    /// row-major: entry `i * n + j` belongs to (positions[i], positions[j]).
    pub fn amplitude_grid(&self, positions: &[f64]) -> Result<Vec<BiphotonAmplitude>> {
        let rows: Vec<Result<Vec<BiphotonAmplitude>>> = positions
            .par_iter()
            .map(|&x1| {
                positions
                    .iter()
                    .map(|&x2| self.amplitude(DetectorPair::new(x1, x2)))
                    .collect()
            })
            .collect();
        let mut out = Vec::with_capacity(positions.len() * positions.len());
        for row in rows {
            out.extend(row?);
        }
        Ok(out)
    }

    /// Upper bound on |psi| from pulling moduli through both integrals; the
    /// node-doubling checks measure against this so that genuine zeros of
    /// the field are not mistaken for nonconvergence.
    fn absolute_field_scale(&self) -> f64 {
        let n = [self.spec.nodes[0] * 2, self.spec.nodes[1] * 2];
        let g_mass = self
            .even_integral(0, n[0], |q| Complex64::new(self.pump_profile(q), 0.0))
            .re;
        let s_mass = self
            .even_integral(1, n[1], |p| Complex64::new(self.phase_matched_chirp(p).norm(), 0.0))
            .re;
        let t_ee: f64 = self.ee.iter().map(|s| s.transmission_modulus).sum();
        let t_oo: f64 = self.oo.iter().map(|s| s.transmission_modulus).sum();
        0.5 * g_mass * s_mass * t_ee * t_oo
    }

    /// Pump envelope at the slit plane as a function of Q = q1 + q2.
    fn pump_profile(&self, q: f64) -> f64 {
        (-(self.setup.pump_waist * q / 2.0).powi(2)).exp()
    }

    /// Phase-matching sinc times the crystal-to-slit chirp as a function of
    /// P = q1 - q2, including the spectrum normalization.
    fn phase_matched_chirp(&self, p: f64) -> Complex64 {
        let big_k = self.setup.pump_wavenumber();
        let length = self.setup.crystal_length;
        let prefactor =
            (2.0 * length / (std::f64::consts::PI.powi(2) * big_k)).sqrt();
        let envelope = prefactor * sinc(length * p * p / (4.0 * big_k));
        let chirp = -self.setup.crystal_aperture_distance * p * p / (2.0 * big_k);
        Complex64::from_polar(envelope, chirp)
        // from_polar with a negative modulus would flip the phase; sinc lobes
        // do go negative, so route the sign through the real prefactor.
    }

    /// Integral of an even function over one quadrature axis, touching only
    /// the non-negative nodes so results are exactly even in any parameter
    /// the integrand is even in.
    fn even_integral<F>(&self, axis: usize, n: usize, f: F) -> Complex64
    where
        F: Fn(f64) -> Complex64,
    {
        let nw = nodes_weights(self.spec.half_width[axis], n, self.spec.rule);
        let mut acc = Complex64::new(0.0, 0.0);
        for &(x, w) in &nw[n - n / 2..] {
            acc += f(x) * (2.0 * w);
        }
        if n % 2 == 1 {
            let (x, w) = nw[n / 2];
            acc += f(x) * w;
        }
        acc
    }

    /// Pump-envelope integral against the slit-pair cosine, even in sigma.
    fn pump_cosine_integral(&self, sigma: f64, n: usize) -> f64 {
        self.even_integral(0, n, |q| {
            Complex64::new(self.pump_profile(q) * (q * sigma / 2.0).cos(), 0.0)
        })
        .re
    }

    /// Chirped-sinc integral against the slit-pair cosine, even in sigma.
    fn chirp_cosine_integral(&self, sigma: f64, n: usize) -> Complex64 {
        self.even_integral(1, n, |p| {
            self.phase_matched_chirp(p) * (p * sigma / 2.0).cos()
        })
    }

    /// Precomputes the factorized coefficients for an all-delta mask, with
    /// the node-doubling convergence gate applied to each distinct integral.
    fn build_factored_field(&self) -> Result<FactoredField> {
        let mut q_args: Vec<f64> = Vec::new();
        let mut p_args: Vec<f64> = Vec::new();
        for a in &self.ee {
            for b in &self.oo {
                q_args.push((a.center + b.center).abs());
                p_args.push((a.center - b.center).abs());
            }
        }
        dedup_exact(&mut q_args);
        dedup_exact(&mut p_args);

        let [nq, np] = self.spec.nodes;
        let q_scale = self.pump_cosine_integral(0.0, 2 * nq);
        let p_scale = self
            .even_integral(1, 2 * np, |p| {
                Complex64::new(self.phase_matched_chirp(p).norm(), 0.0)
            })
            .re;

        let mut q_table: Vec<(f64, f64)> = Vec::new();
        for &sigma in &q_args {
            let coarse = self.pump_cosine_integral(sigma, nq);
            let fine = self.pump_cosine_integral(sigma, 2 * nq);
            check_refinement((fine - coarse).abs(), q_scale, self.spec.tolerance)?;
            q_table.push((sigma, fine));
        }
        let mut p_table: Vec<(f64, Complex64)> = Vec::new();
        for &sigma in &p_args {
            let coarse = self.chirp_cosine_integral(sigma, np);
            let fine = self.chirp_cosine_integral(sigma, 2 * np);
            check_refinement((fine - coarse).norm(), p_scale, self.spec.tolerance)?;
            p_table.push((sigma, fine));
        }

        let weight = |a: &SlitElement, b: &SlitElement| -> Complex64 {
            let gq = lookup(&q_table, (a.center + b.center).abs());
            let sp = lookup(&p_table, (a.center - b.center).abs());
            0.5 * gq * sp
        };
        let terms = |first: &[SlitElement], second: &[SlitElement]| -> Vec<FactoredTerm> {
            let mut out = Vec::with_capacity(first.len() * second.len());
            for a in first {
                for b in second {
                    out.push(FactoredTerm {
                        coeff: a.transmission() * b.transmission() * weight(a, b),
                        c1: a.center,
                        c2: b.center,
                    });
                }
            }
            out
        };
        Ok(FactoredField {
            eo: terms(&self.ee, &self.oo),
            oe: terms(&self.oo, &self.ee),
        })
    }

    /// Full tensor-product quadrature for one polarization assignment, with
    /// the per-call doubling gate. `first` is the mask seen from detector 1.
    fn tensor_channel(
        &self,
        a1: f64,
        a2: f64,
        first: &[SlitElement],
        second: &[SlitElement],
    ) -> Result<Complex64> {
        let coarse = self.tensor_channel_once(a1, a2, first, second, self.spec.nodes);
        let fine = self.tensor_channel_once(
            a1,
            a2,
            first,
            second,
            [self.spec.nodes[0] * 2, self.spec.nodes[1] * 2],
        );
        check_refinement((fine - coarse).norm(), self.field_scale, self.spec.tolerance)?;
        Ok(fine)
    }

    fn tensor_channel_once(
        &self,
        a1: f64,
        a2: f64,
        first: &[SlitElement],
        second: &[SlitElement],
        nodes: [usize; 2],
    ) -> Complex64 {
        let q_nw = nodes_weights(self.spec.half_width[0], nodes[0], self.spec.rule);
        let p_nw = nodes_weights(self.spec.half_width[1], nodes[1], self.spec.rule);
        let mut total = Complex64::new(0.0, 0.0);
        for &(q, wq) in &q_nw {
            let pump = self.pump_profile(q);
            let mut row = Complex64::new(0.0, 0.0);
            for &(p, wp) in &p_nw {
                let spectrum = self.phase_matched_chirp(p);
                let t1 = slit_sum(first, a1 - (q + p) / 2.0);
                let t2 = slit_sum(second, a2 - (q - p) / 2.0);
                row += spectrum * t1 * t2 * wp;
            }
            total += row * (pump * wq);
        }
        // The Jacobian of (q1, q2) -> (Q, P).
        0.5 * total
    }
}

/// One-shot helper for a single detector setting.
pub fn amplitude_numeric(
    pair: DetectorPair,
    setup: &PhysicalSetup,
    aperture: &ApertureFunction,
) -> Result<BiphotonAmplitude> {
    NumericAmplitude::new(setup, aperture, DetectionKernel::Fraunhofer)?.amplitude(pair)
}

fn eval_terms(terms: &[FactoredTerm], a1: f64, a2: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for t in terms {
        acc += t.coeff * Complex64::from_polar(1.0, -(a1 * t.c1 + a2 * t.c2));
    }
    acc
}

fn slit_sum(slits: &[SlitElement], q: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for s in slits {
        acc += s.transmission()
            * sinc(q * s.width / 2.0)
            * Complex64::from_polar(1.0, -q * s.center);
    }
    acc
}

/// Applies the detection kernel to a channel: Fresnel keeps each slit
/// center's quadratic phase, referenced to the detected wavenumber.
fn effective_slits(
    slits: &[SlitElement],
    kernel: DetectionKernel,
    setup: &PhysicalSetup,
) -> Vec<SlitElement> {
    let k = setup.downconverted_wavenumber();
    let z = setup.aperture_detector_distance;
    slits
        .iter()
        .map(|s| {
            let mut out = *s;
            if kernel == DetectionKernel::Fresnel {
                out.transmission_phase += k * s.center * s.center / (2.0 * z);
            }
            out
        })
        .collect()
}

fn check_refinement(delta: f64, scale: f64, tolerance: f64) -> Result<()> {
    if scale == 0.0 {
        return Ok(());
    }
    if delta > tolerance * scale {
        return Err(Error::QuadratureNonConvergence {
            delta: delta / scale,
            tolerance,
        });
    }
    Ok(())
}

fn dedup_exact(values: &mut Vec<f64>) {
    values.sort_by(f64::total_cmp);
    values.dedup();
}

fn lookup<T: Copy>(table: &[(f64, T)], key: f64) -> T {
    table
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .expect("factorized tables cover every slit pair by construction")
}

/// Truncation and node counts from the integrand's own scales: the pump
/// envelope dies by 12 / w0, the phase-matching sinc is kept out to four
/// times its first zero, and each axis gets at least eight nodes per period
/// of the fastest phase it has to resolve (chirp, sinc lobes, slit carrier).
fn auto_quadrature_spec(
    setup: &PhysicalSetup,
    aperture: &ApertureFunction,
    domain_factor: f64,
    tolerance: f64,
) -> Result<QuadratureSpec> {
    if !(domain_factor > 0.0) || !domain_factor.is_finite() {
        return Err(Error::InvalidQuadratureSpec(format!(
            "domain_factor must be positive and finite, got {domain_factor}"
        )));
    }
    let big_k = setup.pump_wavenumber();
    let q_max = 12.0 / setup.pump_waist * domain_factor;
    let p_max =
        4.0 * (4.0 * std::f64::consts::PI * big_k / setup.crystal_length).sqrt() * domain_factor;
    let mut reach: f64 = 0.0;
    for slits in [&aperture.ee, &aperture.oo, &aperture.eo, &aperture.oe] {
        for s in slits.iter() {
            reach = reach.max(s.center.abs() + s.width);
        }
    }
    let sigma = 2.0 * reach;
    let q_phase = q_max * sigma;
    let p_phase = setup.crystal_aperture_distance * p_max * p_max / big_k
        + setup.crystal_length * p_max * p_max / (2.0 * big_k)
        + p_max * sigma;
    let per_phase = |phase: f64| (4.0 * phase / std::f64::consts::PI).ceil() as usize;
    let nq = per_phase(q_phase).max(64);
    let np = per_phase(p_phase).max(64);
    QuadratureSpec::new([q_max, p_max], [nq, np], QuadRule::GaussLegendre, tolerance)
}
