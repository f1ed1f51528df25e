//! Normalized coincidence grids, the antibunching witness and the classical
//! benchmark it is measured against.
//!
//! The observable is the coincidence rate on a square grid of detector
//! position pairs, normalized to unit grid mean; call it g(x1, x2). Any
//! classical intensity field, however correlated, obeys a Schwarz-type
//! inequality: the equal-position rate cannot fall below every nearby
//! unequal-position rate the way it does here, so
//!
//! ```text
//! g(x, x) averaged on the diagonal  <  max of g off the diagonal
//! ```
//!
//! by a margin of order the grid mean is a witness of nonclassical spatial
//! correlation. The classical comparison model is a stochastic double-slit
//! field detected in intensity coincidence: a baseline plus a fringe of
//! visibility at most one half, which is the classical fringe-visibility
//! ceiling for intensity correlations.

use rayon::prelude::*;

use crate::amplitude::DetectorPair;
use crate::error::{Error, Result};
use crate::setup::PhysicalSetup;

/// Detector scan range, one dimension, both arms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
}

impl Window {
    pub fn new(x_min: f64, x_max: f64) -> Result<Self> {
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::DegenerateWindow { x_min, x_max });
        }
        Ok(Window { x_min, x_max })
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Uniform scan positions, endpoints included exactly.
    pub fn positions(&self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| self.x_min + self.width() * (i as f64 / (n - 1) as f64))
            .collect()
    }
}

/// A coincidence-rate grid over `window` x `window`, normalized to unit
/// mean. Row-major: `values[i * n + j]` belongs to (x1_i, x2_j).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationGrid {
    pub window: Window,
    pub n: usize,
    pub values: Vec<f64>,
}

impl CorrelationGrid {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn positions(&self) -> Vec<f64> {
        self.window.positions(self.n)
    }

    pub fn step(&self) -> f64 {
        self.window.width() / (self.n - 1) as f64
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Evaluates a coincidence density over the grid and normalizes to unit
/// mean.
///
/// The density must be exchange symmetric; a relative asymmetry beyond 1e-9
/// is rejected since every model here describes indistinguishable detection
/// arms and an asymmetric grid means the caller's density is broken.
pub fn g22_grid<F>(density: F, window: &Window, n: usize) -> Result<CorrelationGrid>
where
    F: Fn(DetectorPair) -> Result<f64> + Sync,
{
    if n < 3 {
        return Err(Error::GridTooSmall(n));
    }
    let positions = window.positions(n);
    let rows: Vec<Result<Vec<f64>>> = positions
        .par_iter()
        .map(|&x1| {
            positions
                .iter()
                .map(|&x2| density(DetectorPair::new(x1, x2)))
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(n * n);
    for row in rows {
        values.extend(row?);
    }

    let peak = values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if peak > 0.0 {
        let mut asym = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                asym = asym.max((values[i * n + j] - values[j * n + i]).abs());
            }
        }
        if asym > 1e-9 * peak {
            return Err(Error::AsymmetricGrid(asym / peak));
        }
    }

    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if mean == 0.0 {
        return Err(Error::ZeroMeanGrid);
    }
    for v in &mut values {
        *v /= mean;
    }
    Ok(CorrelationGrid { window: *window, n, values })
}

/// Margins below this do not count as a violation; they are grid noise.
pub const DEFAULT_WITNESS_TOLERANCE: f64 = 1e-9;

/// Outcome of the antibunching witness on one grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessReport {
    /// Average rate on the grid diagonal, x1 = x2.
    pub g_zero: f64,
    /// Largest rate found off the diagonal.
    pub g_max_offdiag: f64,
    /// |x1 - x2| of the first cell attaining that maximum, row-major scan.
    pub delta_at_max: f64,
    /// (g_max_offdiag - g_zero) / grid mean; scale invariant.
    pub margin: f64,
    /// True when the margin clears the tolerance: the diagonal is a genuine
    /// depression, which no classical intensity model reproduces.
    pub violated: bool,
}

pub fn schwarz_witness(grid: &CorrelationGrid) -> Result<WitnessReport> {
    schwarz_witness_with_tolerance(grid, DEFAULT_WITNESS_TOLERANCE)
}

pub fn schwarz_witness_with_tolerance(
    grid: &CorrelationGrid,
    tolerance: f64,
) -> Result<WitnessReport> {
    let n = grid.n;
    if n < 3 {
        return Err(Error::GridTooSmall(n));
    }
    let mean = grid.mean();
    if mean == 0.0 {
        return Err(Error::ZeroMeanGrid);
    }
    let g_zero = (0..n).map(|i| grid.value(i, i)).sum::<f64>() / n as f64;
    let positions = grid.positions();
    let mut g_max_offdiag = f64::NEG_INFINITY;
    let mut delta_at_max = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let v = grid.value(i, j);
            if v > g_max_offdiag {
                g_max_offdiag = v;
                delta_at_max = (positions[i] - positions[j]).abs();
            }
        }
    }
    let margin = (g_max_offdiag - g_zero) / mean;
    Ok(WitnessReport {
        g_zero,
        g_max_offdiag,
        delta_at_max,
        margin,
        violated: margin > tolerance,
    })
}

/// Antibunching witness on a one-dimensional cut along the detector
/// separation, such as the x1 + x2 = 0 anti-diagonal of a coincidence grid.
///
/// `deltas` and `values` are parallel arrays; the sample whose separation is
/// closest to zero plays the role of the grid diagonal and is compared with
/// the largest rate found anywhere else on the cut. A dip at zero separation
/// that clears the tolerance is reported as a violation, exactly as in the
/// two-dimensional witness.
pub fn schwarz_witness_on_cut(deltas: &[f64], values: &[f64]) -> Result<WitnessReport> {
    schwarz_witness_on_cut_with_tolerance(deltas, values, DEFAULT_WITNESS_TOLERANCE)
}

pub fn schwarz_witness_on_cut_with_tolerance(
    deltas: &[f64],
    values: &[f64],
    tolerance: f64,
) -> Result<WitnessReport> {
    if deltas.len() != values.len() {
        return Err(Error::MismatchedCut {
            deltas: deltas.len(),
            values: values.len(),
        });
    }
    if values.len() < 3 {
        return Err(Error::GridTooSmall(values.len()));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if mean == 0.0 {
        return Err(Error::ZeroMeanGrid);
    }
    let center = deltas
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.abs().partial_cmp(&b.abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let g_zero = values[center];
    let mut g_max_offdiag = f64::NEG_INFINITY;
    let mut delta_at_max = 0.0;
    for (i, (&delta, &v)) in deltas.iter().zip(values).enumerate() {
        if i == center {
            continue;
        }
        if v > g_max_offdiag {
            g_max_offdiag = v;
            delta_at_max = delta.abs();
        }
    }
    let margin = (g_max_offdiag - g_zero) / mean;
    Ok(WitnessReport {
        g_zero,
        g_max_offdiag,
        delta_at_max,
        margin,
        violated: margin > tolerance,
    })
}

/// Spread of the grid along lines of constant detector separation.
///
/// Cells with equal index difference share x1 - x2 up to rounding; for each
/// such line the spread (max - min) / line mean is computed, and the largest
/// over all lines whose mean is at least half the grid mean is returned.
/// Patterns that depend on the positions only through x1 - x2 score 0; a
/// visible dependence on x1 + x2, as with a loosely focused pump, scores of
/// order 1 and beyond. The floor keeps nearly empty lines, where the ratio
/// is all noise, out of the result.
pub fn homogeneity_check(grid: &CorrelationGrid) -> Result<f64> {
    let n = grid.n;
    if n < 3 {
        return Err(Error::GridTooSmall(n));
    }
    let mean = grid.mean();
    if mean == 0.0 {
        return Err(Error::ZeroMeanGrid);
    }
    let mut worst = 0.0f64;
    for shift in 0..n {
        // Lines i - j = shift and j - i = shift.
        for (di, dj) in [(shift, 0), (0, shift)] {
            let len = n - shift;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let mut sum = 0.0;
            for t in 0..len {
                let v = grid.value(t + di, t + dj);
                lo = lo.min(v);
                hi = hi.max(v);
                sum += v;
            }
            let line_mean = sum / len as f64;
            if line_mean >= 0.5 * mean {
                worst = worst.max((hi - lo) / line_mean);
            }
            if shift == 0 {
                // The diagonal is one line, not two.
                break;
            }
        }
    }
    Ok(worst)
}

/// Classical intensity-correlation benchmark: baseline plus a fringe in the
/// detector separation. Visibility beyond one half is not classically
/// reachable for thermal-like double-slit illumination, so it is rejected
/// rather than silently modeling something unphysical.
pub fn classical_coincidence(
    pair: DetectorPair,
    setup: &PhysicalSetup,
    visibility: f64,
) -> Result<f64> {
    if !(0.0..=0.5).contains(&visibility) {
        return Err(Error::VisibilityOutOfRange(visibility));
    }
    let k = setup.downconverted_wavenumber();
    let z = setup.aperture_detector_distance;
    let phase = k * setup.slit_separation * (pair.x1 - pair.x2) / z;
    Ok(1.0 + visibility * phase.cos())
}

/// Classical singles rate behind one slit of width a: the diffraction
/// envelope, Gaussian in the paraxial approximation, with transverse scale
/// z / (k a). Zero width would make the envelope flat and the scale
/// meaningless, so it is an error here.
pub fn classical_singles(x: f64, setup: &PhysicalSetup) -> Result<f64> {
    if setup.slit_width == 0.0 {
        return Err(Error::ZeroSlitWidth);
    }
    let k = setup.downconverted_wavenumber();
    let sigma = setup.aperture_detector_distance / (k * setup.slit_width);
    Ok((-(x * x) / (2.0 * sigma * sigma)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitude::amplitude_closed_form;
    use approx::assert_relative_eq;

    fn setup() -> PhysicalSetup {
        PhysicalSetup::new(351e-9, 5e-3, 25e-3, 1.0, 200e-6, 0.0, 20e-6).unwrap()
    }

    fn quantum_grid(n: usize) -> CorrelationGrid {
        let s = setup();
        let window = Window::new(-4e-3, 4e-3).unwrap();
        g22_grid(
            |pair| Ok(amplitude_closed_form(pair, &s).coincidence_probability()),
            &window,
            n,
        )
        .unwrap()
    }

    #[test]
    fn window_positions_hit_the_endpoints_exactly() {
        let w = Window::new(-4e-3, 4e-3).unwrap();
        let xs = w.positions(201);
        assert_eq!(xs[0], -4e-3);
        assert_eq!(xs[200], 4e-3);
        assert_eq!(xs.len(), 201);
    }

    #[test]
    fn degenerate_windows_are_rejected() {
        assert!(matches!(Window::new(1.0, 1.0), Err(Error::DegenerateWindow { .. })));
        assert!(matches!(Window::new(2.0, -2.0), Err(Error::DegenerateWindow { .. })));
    }

    #[test]
    fn grid_is_normalized_to_unit_mean() {
        let g = quantum_grid(41);
        assert_relative_eq!(g.mean(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn quantum_grid_violates_the_witness() {
        let g = quantum_grid(81);
        let report = schwarz_witness(&g).unwrap();
        assert!(report.violated, "expected a violation: {report:?}");
        assert!(report.g_zero < 1e-9, "diagonal should be dark: {}", report.g_zero);
        assert!(report.margin > 1.0, "margin should be of order the mean: {}", report.margin);
    }

    #[test]
    fn witness_peak_sits_half_a_fringe_period_out() {
        let s = setup();
        let g = quantum_grid(201);
        let report = schwarz_witness(&g).unwrap();
        let expected = s.fringe_period() / 2.0;
        assert!(
            (report.delta_at_max - expected).abs() <= 1.5 * g.step(),
            "fringe peak at {} but expected {}",
            report.delta_at_max,
            expected
        );
    }

    #[test]
    fn classical_grid_does_not_violate_the_witness() {
        let s = setup();
        let window = Window::new(-4e-3, 4e-3).unwrap();
        let g = g22_grid(
            |pair| classical_coincidence(pair, &s, 0.5),
            &window,
            81,
        )
        .unwrap();
        let report = schwarz_witness(&g).unwrap();
        assert!(!report.violated, "classical fringes must stay legal: {report:?}");
        assert!(report.g_zero > report.g_max_offdiag - 1e-9);
    }

    #[test]
    fn separation_cut_with_a_central_dip_violates() {
        let s = setup();
        let beta = s.downconverted_wavenumber() * s.slit_separation
            / (2.0 * s.aperture_detector_distance);
        let deltas: Vec<f64> = (0..201).map(|i| -4e-3 + 8e-3 * i as f64 / 200.0).collect();
        let values: Vec<f64> = deltas.iter().map(|&d| (beta * d).sin().powi(2)).collect();
        let report = schwarz_witness_on_cut(&deltas, &values).unwrap();
        assert!(report.violated, "sin^2 cut dips at zero: {report:?}");
        assert!(report.g_zero < 1e-12);
        assert_relative_eq!(report.g_max_offdiag, 1.0, max_relative = 1e-3);
    }

    #[test]
    fn separation_cut_peaked_at_zero_stays_legal() {
        let s = setup();
        let beta = s.downconverted_wavenumber() * s.slit_separation
            / (2.0 * s.aperture_detector_distance);
        let deltas: Vec<f64> = (0..201).map(|i| -4e-3 + 8e-3 * i as f64 / 200.0).collect();
        let values: Vec<f64> = deltas.iter().map(|&d| (beta * d).cos().powi(2)).collect();
        let report = schwarz_witness_on_cut(&deltas, &values).unwrap();
        assert!(!report.violated, "cos^2 peaks at zero separation: {report:?}");
        assert!(report.margin <= 0.0, "margin should not be positive: {}", report.margin);
    }

    #[test]
    fn separation_cut_rejects_mismatched_arrays() {
        let deltas = [0.0, 1.0, 2.0];
        let values = [1.0, 2.0];
        assert!(matches!(
            schwarz_witness_on_cut(&deltas, &values),
            Err(Error::MismatchedCut { deltas: 3, values: 2 })
        ));
    }

    #[test]
    fn witness_is_invariant_under_rescaling() {
        let g = quantum_grid(61);
        let mut scaled = g.clone();
        for v in &mut scaled.values {
            *v *= 7.25e4;
        }
        let a = schwarz_witness(&g).unwrap();
        let b = schwarz_witness(&scaled).unwrap();
        assert_relative_eq!(a.margin, b.margin, max_relative = 1e-12);
        assert_eq!(a.violated, b.violated);
        assert_eq!(a.delta_at_max, b.delta_at_max);
    }

    #[test]
    fn difference_only_patterns_are_perfectly_homogeneous() {
        let s = setup();
        let window = Window::new(-4e-3, 4e-3).unwrap();
        let g = g22_grid(
            |pair| classical_coincidence(pair, &s, 0.4),
            &window,
            51,
        )
        .unwrap();
        let h = homogeneity_check(&g).unwrap();
        assert!(h < 1e-12, "difference-only pattern should score 0, got {h}");
    }

    #[test]
    fn wide_pump_spoils_homogeneity() {
        // A pump waist comparable to the slit separation carries strong
        // sum-coordinate fringes, so constant-separation lines are modulated.
        let wide = PhysicalSetup::new(351e-9, 5e-3, 25e-3, 1.0, 200e-6, 0.0, 200e-6).unwrap();
        let window = Window::new(-4e-3, 4e-3).unwrap();
        let g = g22_grid(
            |pair| Ok(amplitude_closed_form(pair, &wide).coincidence_probability()),
            &window,
            81,
        )
        .unwrap();
        let h = homogeneity_check(&g).unwrap();
        assert!(h > 0.5, "sum fringes should register, got {h}");
    }

    #[test]
    fn asymmetric_densities_are_rejected() {
        let window = Window::new(-1e-3, 1e-3).unwrap();
        let err = g22_grid(|pair| Ok(1.0 + pair.x1 - 0.5 * pair.x2), &window, 11).unwrap_err();
        assert!(matches!(err, Error::AsymmetricGrid(_)), "got {err:?}");
    }

    #[test]
    fn degenerate_grids_are_rejected() {
        let window = Window::new(-1e-3, 1e-3).unwrap();
        assert!(matches!(
            g22_grid(|_| Ok(1.0), &window, 2),
            Err(Error::GridTooSmall(2))
        ));
        assert!(matches!(
            g22_grid(|_| Ok(0.0), &window, 11),
            Err(Error::ZeroMeanGrid)
        ));
    }

    #[test]
    fn classical_visibility_is_capped_at_one_half() {
        let s = setup();
        let pair = DetectorPair::new(0.0, 1e-3);
        assert!(classical_coincidence(pair, &s, 0.5).is_ok());
        assert!(matches!(
            classical_coincidence(pair, &s, 0.51),
            Err(Error::VisibilityOutOfRange(_))
        ));
        assert!(matches!(
            classical_coincidence(pair, &s, -0.01),
            Err(Error::VisibilityOutOfRange(_))
        ));
    }

    #[test]
    fn classical_fringe_period_matches_the_geometry() {
        let s = setup();
        let v = 0.5;
        let at_zero = classical_coincidence(DetectorPair::new(0.0, 0.0), &s, v).unwrap();
        assert_relative_eq!(at_zero, 1.5, max_relative = 1e-15);
        let period = s.fringe_period();
        let one_period = classical_coincidence(DetectorPair::new(period, 0.0), &s, v).unwrap();
        assert_relative_eq!(one_period, 1.5, max_relative = 1e-9);
        let half = classical_coincidence(DetectorPair::new(period / 2.0, 0.0), &s, v).unwrap();
        assert_relative_eq!(half, 0.5, max_relative = 1e-9);
    }

    #[test]
    fn singles_envelope_scale_matches_the_slit_diffraction() {
        let s = PhysicalSetup::new(351e-9, 5e-3, 25e-3, 1.0, 200e-6, 70e-6, 20e-6).unwrap();
        let k = s.downconverted_wavenumber();
        let sigma = s.aperture_detector_distance / (k * s.slit_width);
        assert_relative_eq!(sigma, 1.596e-3, max_relative = 1e-3);
        let ratio = classical_singles(sigma, &s).unwrap() / classical_singles(0.0, &s).unwrap();
        assert_relative_eq!(ratio, (-0.5f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn zero_width_slits_have_no_singles_envelope() {
        let s = setup();
        assert!(matches!(classical_singles(0.0, &s), Err(Error::ZeroSlitWidth)));
    }
}
