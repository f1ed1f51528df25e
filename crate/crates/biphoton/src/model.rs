//! Runtime-selectable coincidence models.
//!
//! Every way of producing a coincidence density, the closed-form quantum
//! pattern, the quadrature evaluator, the classical benchmark, sits behind
//! one trait, and a registry maps stable names to builders so front ends can
//! pick the model from a config file without a compile-time switch. The
//! registry is also the extension point: a new model is a builder function
//! and a `register` call, nothing else has to change.

use std::collections::BTreeMap;

use crate::amplitude::{
    amplitude_closed_form_with_retardance, DetectionKernel, DetectorPair, NumericAmplitude,
};
use crate::aperture::{birefringent_double_slit_with_retardance, ApertureFunction};
use crate::correlation::{classical_coincidence, g22_grid, CorrelationGrid, Window};
use crate::error::{Error, Result};
use crate::setup::PhysicalSetup;

/// A coincidence density over detector pairs, with enough structure for
/// grids and rejection sampling.
pub trait CoincidenceModel: Send + Sync {
    /// The registry name of this model.
    fn name(&self) -> &'static str;

    /// Coincidence density at one detector setting. Arbitrary scale; grids
    /// and samplers normalize it away.
    fn density(&self, pair: DetectorPair) -> Result<f64>;

    /// An upper bound on the density over the window, for rejection
    /// sampling envelopes. Models without a cheap analytic bound report
    /// [`Error::NoDensityBound`] and cannot be sampled directly.
    fn density_bound(&self, window: &Window) -> Result<f64>;

    /// Unit-mean grid of the density over `window` squared.
    fn density_grid(&self, window: &Window, n: usize) -> Result<CorrelationGrid> {
        g22_grid(|pair| self.density(pair), window, n)
    }
}

/// Closed-form two-photon pattern of the quarter-wave double slit in the
/// delta-slit limit.
pub struct QuantumClosedForm {
    pub setup: PhysicalSetup,
    pub retardance: f64,
}

impl CoincidenceModel for QuantumClosedForm {
    fn name(&self) -> &'static str {
        "quantum_closed_form"
    }

    fn density(&self, pair: DetectorPair) -> Result<f64> {
        Ok(amplitude_closed_form_with_retardance(pair, &self.setup, self.retardance)
            .coincidence_probability())
    }

    fn density_bound(&self, _window: &Window) -> Result<f64> {
        // Each channel amplitude is at most eps + 1 in magnitude.
        let eps = (-(self.setup.slit_separation / (2.0 * self.setup.pump_waist)).powi(2)).exp();
        Ok(2.0 * (1.0 + eps).powi(2))
    }
}

/// Quadrature-based pattern for arbitrary masks and detection kernels.
pub struct QuantumNumeric {
    evaluator: NumericAmplitude,
}

impl QuantumNumeric {
    pub fn new(evaluator: NumericAmplitude) -> Self {
        QuantumNumeric { evaluator }
    }

    pub fn evaluator(&self) -> &NumericAmplitude {
        &self.evaluator
    }
}

impl CoincidenceModel for QuantumNumeric {
    fn name(&self) -> &'static str {
        "quantum_numeric"
    }

    fn density(&self, pair: DetectorPair) -> Result<f64> {
        self.evaluator.probability(pair)
    }

    fn density_bound(&self, _window: &Window) -> Result<f64> {
        // A sup over quadrature output has no closed expression; sampling
        // should run against the closed form or a tabulated envelope.
        Err(Error::NoDensityBound("quantum_numeric"))
    }
}

/// Classical intensity-interferometry benchmark: unit baseline plus a
/// capped-visibility fringe in the detector separation.
pub struct ClassicalHbt {
    pub setup: PhysicalSetup,
    pub visibility: f64,
}

impl CoincidenceModel for ClassicalHbt {
    fn name(&self) -> &'static str {
        "classical_hbt"
    }

    fn density(&self, pair: DetectorPair) -> Result<f64> {
        classical_coincidence(pair, &self.setup, self.visibility)
    }

    fn density_bound(&self, _window: &Window) -> Result<f64> {
        if !(0.0..=0.5).contains(&self.visibility) {
            return Err(Error::VisibilityOutOfRange(self.visibility));
        }
        Ok(1.0 + self.visibility)
    }
}

/// Everything a model builder may draw on. `aperture` of `None` means the
/// standard double slit built from the setup geometry and `retardance`.
#[derive(Debug, Clone)]
pub struct ModelContext {
    pub setup: PhysicalSetup,
    pub aperture: Option<ApertureFunction>,
    pub kernel: DetectionKernel,
    pub retardance: f64,
    pub visibility: f64,
    pub domain_factor: f64,
    pub tolerance: f64,
    pub force_general: bool,
}

impl ModelContext {
    pub fn new(setup: PhysicalSetup) -> Self {
        ModelContext {
            setup,
            aperture: None,
            kernel: DetectionKernel::Fraunhofer,
            retardance: std::f64::consts::FRAC_PI_2,
            visibility: 0.5,
            domain_factor: 1.0,
            tolerance: 1e-8,
            force_general: false,
        }
    }

    /// The mask to use: the explicit one if set, otherwise the standard
    /// double slit with this context's retardance.
    pub fn resolve_aperture(&self) -> Result<ApertureFunction> {
        match &self.aperture {
            Some(ap) => Ok(ap.clone()),
            None => birefringent_double_slit_with_retardance(
                self.setup.slit_separation,
                self.setup.slit_width,
                self.retardance,
            ),
        }
    }
}

type ModelBuilder = fn(&ModelContext) -> Result<Box<dyn CoincidenceModel>>;

/// Name-to-builder map for coincidence models.
pub struct ModelRegistry {
    builders: BTreeMap<&'static str, ModelBuilder>,
}

impl ModelRegistry {
    pub fn empty() -> Self {
        ModelRegistry { builders: BTreeMap::new() }
    }

    /// Registry preloaded with the standard model family.
    pub fn with_standard_models() -> Self {
        let mut reg = Self::empty();
        reg.register("quantum_closed_form", |ctx| {
            Ok(Box::new(QuantumClosedForm {
                setup: ctx.setup,
                retardance: ctx.retardance,
            }))
        });
        reg.register("quantum_numeric", |ctx| {
            let aperture = ctx.resolve_aperture()?;
            let evaluator = NumericAmplitude::with_options(
                &ctx.setup,
                &aperture,
                ctx.kernel,
                ctx.domain_factor,
                ctx.tolerance,
                ctx.force_general,
            )?;
            Ok(Box::new(QuantumNumeric::new(evaluator)))
        });
        reg.register("classical_hbt", |ctx| {
            Ok(Box::new(ClassicalHbt {
                setup: ctx.setup,
                visibility: ctx.visibility,
            }))
        });
        reg
    }

    /// Later registrations under the same name win, so callers can shadow a
    /// standard model with their own variant.
    pub fn register(&mut self, name: &'static str, builder: ModelBuilder) {
        self.builders.insert(name, builder);
    }

    pub fn build(&self, name: &str, ctx: &ModelContext) -> Result<Box<dyn CoincidenceModel>> {
        match self.builders.get(name) {
            Some(builder) => builder(ctx),
            None => Err(Error::UnknownModel(name.to_string())),
        }
    }

    /// Registered names in sorted order.
    pub fn names(&self) -> Vec<&'static str> {
        self.builders.keys().copied().collect()
    }
}
