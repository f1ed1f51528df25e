//! Seeded Monte Carlo sampling of coincidence events.
//!
//! Events are drawn by rejection from a model's coincidence density against
//! its declared envelope, which mirrors how a scanning coincidence counter
//! accumulates clicks. The stream is split into a fixed number of counter
//! shards, each a separate stream of the same seeded generator, and shards
//! are merged in index order, so a run is reproducible bit for bit no matter
//! how many threads execute it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::correlation::Window;
use crate::error::{Error, Result};
use crate::model::CoincidenceModel;

/// One recorded coincidence: the two detector positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoincidenceEvent {
    pub x1: f64,
    pub x2: f64,
}

/// Shard count is part of the output contract: changing it changes every
/// sampled stream, so it is fixed rather than tied to the thread count.
pub const SAMPLER_SHARDS: usize = 16;

/// Draws `count` coincidence events from the model's density over
/// `window` squared, reproducibly for a given seed.
pub fn sample_coincidences(
    model: &dyn CoincidenceModel,
    window: &Window,
    count: usize,
    seed: u64,
) -> Result<Vec<CoincidenceEvent>> {
    let bound = model.density_bound(window)?;
    if !(bound > 0.0) || !bound.is_finite() {
        return Err(Error::NonPositiveParameter { name: "density bound", value: bound });
    }
    let quotas: Vec<usize> = (0..SAMPLER_SHARDS)
        .map(|i| count / SAMPLER_SHARDS + usize::from(i < count % SAMPLER_SHARDS))
        .collect();
    let shards: Vec<Result<Vec<CoincidenceEvent>>> = quotas
        .into_par_iter()
        .enumerate()
        .map(|(shard, quota)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard as u64);
            let mut events = Vec::with_capacity(quota);
            while events.len() < quota {
                let x1 = window.x_min + window.width() * rng.gen::<f64>();
                let x2 = window.x_min + window.width() * rng.gen::<f64>();
                let level = bound * rng.gen::<f64>();
                let density = model.density(crate::amplitude::DetectorPair::new(x1, x2))?;
                if density < 0.0 {
                    return Err(Error::NegativeParameter {
                        name: "coincidence density",
                        value: density,
                    });
                }
                if density > bound * (1.0 + 1e-9) {
                    return Err(Error::DensityAboveBound { density, bound });
                }
                if level <= density {
                    events.push(CoincidenceEvent { x1, x2 });
                }
            }
            Ok(events)
        })
        .collect();
    let mut merged = Vec::with_capacity(count);
    for shard in shards {
        merged.extend(shard?);
    }
    Ok(merged)
}

/// Histogram of the detector separation x1 - x2.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceHistogram {
    /// `counts.len() + 1` edges, uniform from -width to +width of the
    /// sampling window.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl CoincidenceHistogram {
    pub fn bin_centers(&self) -> Vec<f64> {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, _)| (self.bin_edges[i] + self.bin_edges[i + 1]) / 2.0)
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Bins the separations of `events` over [-width, +width] of the window the
/// events were sampled in, so every event lands in a bin by construction.
pub fn histogram_delta(
    events: &[CoincidenceEvent],
    bins: usize,
    window: &Window,
) -> Result<CoincidenceHistogram> {
    if bins < 2 {
        return Err(Error::TooFewBins(bins));
    }
    if events.is_empty() {
        return Err(Error::EmptyHistogram);
    }
    let reach = window.width();
    let bin_width = 2.0 * reach / bins as f64;
    let bin_edges: Vec<f64> =
        (0..=bins).map(|i| -reach + bin_width * i as f64).collect();
    let mut counts = vec![0u64; bins];
    for e in events {
        let delta = e.x1 - e.x2;
        let idx = (((delta + reach) / bin_width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Ok(CoincidenceHistogram { bin_edges, counts })
}

/// Dip depth estimated from a separation histogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipEstimate {
    /// Count in the central bins relative to the mean count per bin; raw,
    /// with no correction for the triangular window acceptance, so a flat
    /// density scores somewhat above 1 here.
    pub g2_dip: f64,
    /// Poisson standard error of the estimate. The mean-count denominator
    /// contributes at the sqrt(total) level and is neglected.
    pub std_error: f64,
}

/// Ratio of the zero-separation rate to the histogram mean.
///
/// The central value averages every bin whose closed interval contains
/// separation zero: one bin when the count is odd, the two bins meeting at
/// zero when it is even.
pub fn estimate_g2_dip(histogram: &CoincidenceHistogram) -> Result<DipEstimate> {
    let bins = histogram.counts.len();
    if bins < 2 {
        return Err(Error::TooFewBins(bins));
    }
    let total = histogram.total();
    if total == 0 {
        return Err(Error::EmptyHistogram);
    }
    let central: Vec<u64> = (0..bins)
        .filter(|&i| histogram.bin_edges[i] <= 0.0 && 0.0 <= histogram.bin_edges[i + 1])
        .map(|i| histogram.counts[i])
        .collect();
    if central.is_empty() {
        return Err(Error::EmptyHistogram);
    }
    let mean_count = total as f64 / bins as f64;
    let central_sum: u64 = central.iter().sum();
    let central_mean = central_sum as f64 / central.len() as f64;
    let std_error = (central_sum.max(1) as f64).sqrt() / (central.len() as f64 * mean_count);
    Ok(DipEstimate { g2_dip: central_mean / mean_count, std_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ClassicalHbt, ModelContext, ModelRegistry, QuantumClosedForm};
    use crate::setup::PhysicalSetup;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn setup() -> PhysicalSetup {
        PhysicalSetup::new(351e-9, 5e-3, 25e-3, 1.0, 200e-6, 0.0, 20e-6).unwrap()
    }

    fn window() -> Window {
        Window::new(-4e-3, 4e-3).unwrap()
    }

    fn quantum() -> QuantumClosedForm {
        QuantumClosedForm { setup: setup(), retardance: std::f64::consts::FRAC_PI_2 }
    }

    #[test]
    fn sampling_is_reproducible_and_thread_independent() {
        let model = quantum();
        let w = window();
        let reference = sample_coincidences(&model, &w, 1000, 7).unwrap();
        for threads in [1, 4] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let run = pool
                .install(|| sample_coincidences(&model, &w, 1000, 7))
                .unwrap();
            assert_eq!(run, reference, "stream changed with {threads} threads");
        }
    }

    #[test]
    fn different_seeds_give_different_streams() {
        let model = quantum();
        let w = window();
        let a = sample_coincidences(&model, &w, 200, 1).unwrap();
        let b = sample_coincidences(&model, &w, 200, 2).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn events_fill_the_requested_count_inside_the_window() {
        let model = quantum();
        let w = window();
        // 1003 does not divide evenly into shards.
        let events = sample_coincidences(&model, &w, 1003, 11).unwrap();
        assert_eq!(events.len(), 1003);
        for e in &events {
            assert!(e.x1 >= w.x_min && e.x1 <= w.x_max);
            assert!(e.x2 >= w.x_min && e.x2 <= w.x_max);
        }
    }

    #[test]
    fn flat_density_yields_a_triangular_separation_histogram() {
        // Visibility zero removes the fringe; the separation of two
        // independent uniforms is triangular. Pearson's statistic against
        // that shape should look like chi-squared with bins - 1 dof.
        let model = ClassicalHbt { setup: setup(), visibility: 0.0 };
        let w = window();
        let n = 200_000usize;
        let events = sample_coincidences(&model, &w, n, 42).unwrap();
        let bins = 64;
        let hist = histogram_delta(&events, bins, &w).unwrap();
        let reach = w.width();
        let mut stat = 0.0;
        for (i, &count) in hist.counts.iter().enumerate() {
            let lo = hist.bin_edges[i] / reach;
            let hi = hist.bin_edges[i + 1] / reach;
            // CDF of the triangular density on [-1, 1] at t.
            let cdf = |t: f64| {
                if t <= 0.0 {
                    (1.0 + t) * (1.0 + t) / 2.0
                } else {
                    1.0 - (1.0 - t) * (1.0 - t) / 2.0
                }
            };
            let expected = n as f64 * (cdf(hi) - cdf(lo));
            stat += (count as f64 - expected).powi(2) / expected;
        }
        let dist = ChiSquared::new((bins - 1) as f64).unwrap();
        let p_tail = 1.0 - dist.cdf(stat);
        assert!(p_tail > 1e-6, "triangle shape rejected: stat {stat}, tail {p_tail}");
    }

    #[test]
    fn quantum_events_respect_the_strip_probability() {
        // The analytic probability that an event falls within an eighth of
        // a fringe period of the diagonal, from a fine deterministic sum.
        let model = quantum();
        let w = window();
        let strip = setup().fringe_period() / 8.0;
        let m = 801;
        let xs = w.positions(m);
        let mut inside = 0.0;
        let mut total = 0.0;
        for &x1 in &xs {
            for &x2 in &xs {
                let d = model
                    .density(crate::amplitude::DetectorPair::new(x1, x2))
                    .unwrap();
                total += d;
                if (x1 - x2).abs() < strip {
                    inside += d;
                }
            }
        }
        let p = inside / total;
        let n = 100_000usize;
        for seed in [5, 17, 23] {
            let events = sample_coincidences(&model, &w, n, seed).unwrap();
            let hits = events.iter().filter(|e| (e.x1 - e.x2).abs() < strip).count();
            let p_hat = hits as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!(
                (p_hat - p).abs() < 3.5 * se,
                "seed {seed}: {p_hat} vs {p} (se {se})"
            );
        }
    }

    #[test]
    fn histogram_reflects_when_events_swap_arms() {
        let model = quantum();
        let w = window();
        let events = sample_coincidences(&model, &w, 5000, 3).unwrap();
        let swapped: Vec<CoincidenceEvent> = events
            .iter()
            .map(|e| CoincidenceEvent { x1: e.x2, x2: e.x1 })
            .collect();
        let a = histogram_delta(&events, 64, &w).unwrap();
        let b = histogram_delta(&swapped, 64, &w).unwrap();
        let reversed: Vec<u64> = b.counts.iter().rev().copied().collect();
        assert_eq!(a.counts, reversed);
    }

    #[test]
    fn histogram_accounts_for_every_event() {
        let model = ClassicalHbt { setup: setup(), visibility: 0.3 };
        let w = window();
        let events = sample_coincidences(&model, &w, 2500, 9).unwrap();
        let hist = histogram_delta(&events, 32, &w).unwrap();
        assert_eq!(hist.total(), 2500);
        assert_eq!(hist.bin_edges.len(), 33);
    }

    #[test]
    fn degenerate_histograms_are_rejected() {
        let w = window();
        let one = [CoincidenceEvent { x1: 0.0, x2: 1e-3 }];
        assert!(matches!(
            histogram_delta(&one, 1, &w),
            Err(Error::TooFewBins(1))
        ));
        assert!(matches!(
            histogram_delta(&[], 16, &w),
            Err(Error::EmptyHistogram)
        ));
    }

    #[test]
    fn antibunched_events_dip_where_bunched_events_peak() {
        let w = window();
        let n = 150_000usize;
        let anti = sample_coincidences(&quantum(), &w, n, 21).unwrap();
        let classical = ClassicalHbt { setup: setup(), visibility: 0.5 };
        let bunched = sample_coincidences(&classical, &w, n, 21).unwrap();
        let dip_a = estimate_g2_dip(&histogram_delta(&anti, 64, &w).unwrap()).unwrap();
        let dip_b = estimate_g2_dip(&histogram_delta(&bunched, 64, &w).unwrap()).unwrap();
        assert!(dip_a.g2_dip < 0.1, "expected a deep dip, got {}", dip_a.g2_dip);
        assert!(
            dip_b.g2_dip > 10.0 * dip_a.g2_dip,
            "classical fringes should fill the dip: {} vs {}",
            dip_b.g2_dip,
            dip_a.g2_dip
        );
        assert!(dip_a.std_error > 0.0);
    }

    #[test]
    fn lying_envelopes_are_caught() {
        struct Liar;
        impl CoincidenceModel for Liar {
            fn name(&self) -> &'static str {
                "liar"
            }
            fn density(&self, _pair: crate::amplitude::DetectorPair) -> Result<f64> {
                Ok(2.0)
            }
            fn density_bound(&self, _window: &Window) -> Result<f64> {
                Ok(1.0)
            }
        }
        let err = sample_coincidences(&Liar, &window(), 10, 0).unwrap_err();
        assert!(matches!(err, Error::DensityAboveBound { .. }), "got {err:?}");
    }

    #[test]
    fn registry_models_sample_through_the_same_interface() {
        let reg = ModelRegistry::with_standard_models();
        let ctx = ModelContext::new(setup());
        let model = reg.build("classical_hbt", &ctx).unwrap();
        let events = sample_coincidences(model.as_ref(), &window(), 500, 4).unwrap();
        assert_eq!(events.len(), 500);
    }
}
