//! Run configuration: a flat sectioned key-value format with mandatory unit
//! suffixes on every physical quantity.
//!
//! Sections are `[setup]`, `[grid]`, `[model]`, `[aperture]`, `[quadrature]`
//! and `[montecarlo]`. Lines are `key = value`, `#` starts a whole-line
//! comment, and every error carries the 1-based line it came from. Unknown
//! sections and keys are rejected rather than ignored, and quantities
//! without a unit do not parse, so a config cannot silently change meaning.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use anyhow::{anyhow, bail, Context, Result};
use biphoton::amplitude::DetectionKernel;
use biphoton::aperture::{from_config_block, ApertureFunction};
use biphoton::correlation::Window;
use biphoton::model::ModelContext;
use biphoton::{Error as LibError, PhysicalSetup};

/// Evaluation route for the coincidence density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelPath {
    ClosedForm,
    Numeric,
}

/// Which physics produces the coincidences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Quantum,
    Classical,
}

/// Sampling block; present only when the config declares `[montecarlo]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloBlock {
    pub events: usize,
    pub bins: usize,
    pub seed: u64,
}

/// Everything a run needs, validated before any computation starts.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub setup: PhysicalSetup,
    pub window: Window,
    pub points: usize,
    /// Sum-coordinate offsets at which separation cuts are taken.
    pub slices: Vec<f64>,
    pub path: ModelPath,
    pub source: Source,
    pub visibility: f64,
    pub retardance: f64,
    pub kernel: DetectionKernel,
    pub aperture: Option<ApertureFunction>,
    pub domain_factor: f64,
    pub tolerance: f64,
    pub force_general: bool,
    pub montecarlo: Option<MonteCarloBlock>,
}

impl RunConfig {
    /// Registry name of the configured model.
    pub fn model_name(&self) -> &'static str {
        match (self.source, self.path) {
            (Source::Quantum, ModelPath::ClosedForm) => "quantum_closed_form",
            (Source::Quantum, ModelPath::Numeric) => "quantum_numeric",
            (Source::Classical, ModelPath::ClosedForm) => "classical_hbt",
            (Source::Classical, ModelPath::Numeric) => {
                unreachable!("rejected during config validation")
            }
        }
    }

    /// Build context carrying every model parameter of this run.
    pub fn model_context(&self) -> ModelContext {
        let mut ctx = ModelContext::new(self.setup);
        ctx.aperture = self.aperture.clone();
        ctx.kernel = self.kernel;
        ctx.retardance = self.retardance;
        ctx.visibility = self.visibility;
        ctx.domain_factor = self.domain_factor;
        ctx.tolerance = self.tolerance;
        ctx.force_general = self.force_general;
        ctx
    }
}

const SECTIONS: [&str; 6] = ["setup", "grid", "model", "aperture", "quadrature", "montecarlo"];

const LENGTH_UNITS: [(&str, f64); 6] = [
    ("pm", 1e-12),
    ("nm", 1e-9),
    ("um", 1e-6),
    ("mm", 1e-3),
    ("cm", 1e-2),
    ("m", 1.0),
];

/// Splits a value into its numeric part and a trailing alphabetic unit.
fn split_unit(raw: &str) -> (&str, &str) {
    let trimmed = raw.trim();
    let boundary = trimmed
        .rfind(|c: char| !c.is_ascii_alphabetic())
        .map_or(0, |i| i + 1);
    (trimmed[..boundary].trim(), trimmed[boundary..].trim())
}

fn parse_number(number: &str, raw: &str, line: usize) -> Result<f64> {
    let value: f64 = number
        .parse()
        .map_err(|_| anyhow!("line {line}: cannot parse '{raw}' as a number"))?;
    if !value.is_finite() {
        bail!("line {line}: '{raw}' is not finite");
    }
    Ok(value)
}

fn parse_length(raw: &str, line: usize) -> Result<f64> {
    let (number, unit) = split_unit(raw);
    let scale = LENGTH_UNITS
        .iter()
        .find(|(suffix, _)| *suffix == unit)
        .map(|(_, scale)| *scale)
        .ok_or_else(|| {
            anyhow!("line {line}: length '{raw}' needs a unit suffix (pm, nm, um, mm, cm, m)")
        })?;
    Ok(parse_number(number, raw, line)? * scale)
}

fn parse_angle(raw: &str, line: usize) -> Result<f64> {
    let (number, unit) = split_unit(raw);
    let scale = match unit {
        "rad" => 1.0,
        "pi" => PI,
        _ => bail!("line {line}: angle '{raw}' needs a unit suffix (rad, or pi as multiplier)"),
    };
    Ok(parse_number(number, raw, line)? * scale)
}

fn parse_bare(raw: &str, line: usize) -> Result<f64> {
    let (number, unit) = split_unit(raw);
    if !unit.is_empty() {
        bail!("line {line}: '{raw}' is dimensionless, drop the suffix '{unit}'");
    }
    parse_number(number, raw, line)
}

fn parse_count(raw: &str, line: usize) -> Result<usize> {
    raw.trim()
        .parse()
        .map_err(|_| anyhow!("line {line}: cannot parse '{raw}' as a positive integer"))
}

fn parse_seed(raw: &str, line: usize) -> Result<u64> {
    raw.trim()
        .parse()
        .map_err(|_| anyhow!("line {line}: cannot parse '{raw}' as a seed (unsigned integer)"))
}

fn parse_bool(raw: &str, line: usize) -> Result<bool> {
    match raw.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => bail!("line {line}: expected true or false, got '{other}'"),
    }
}

/// Key-value entries per section, each remembering its source line.
struct Entries {
    map: BTreeMap<String, BTreeMap<String, (usize, String)>>,
    aperture_lines: Vec<(usize, String)>,
}

impl Entries {
    fn take(&mut self, section: &str, key: &str) -> Option<(usize, String)> {
        self.map.get_mut(section).and_then(|keys| keys.remove(key))
    }

    fn require(&mut self, section: &str, key: &str) -> Result<(usize, String)> {
        self.take(section, key)
            .ok_or_else(|| anyhow!("missing key '{key}' in [{section}]"))
    }

    fn has_section(&self, section: &str) -> bool {
        self.map.contains_key(section)
    }

    /// After all known keys were taken, anything left is unknown.
    fn reject_leftovers(&self) -> Result<()> {
        let mut leftovers: Vec<(usize, String, String)> = Vec::new();
        for (section, keys) in &self.map {
            for (key, (line, _)) in keys {
                leftovers.push((*line, section.clone(), key.clone()));
            }
        }
        if let Some((line, section, key)) = leftovers.into_iter().min() {
            bail!("line {line}: unknown key '{key}' in [{section}]");
        }
        Ok(())
    }
}

fn scan(text: &str) -> Result<Entries> {
    let mut entries = Entries { map: BTreeMap::new(), aperture_lines: Vec::new() };
    let mut section: Option<String> = None;
    for (index, raw_line) in text.lines().enumerate() {
        let line = index + 1;
        let trimmed = raw_line.trim();
        let in_aperture = section.as_deref() == Some("aperture");
        if trimmed.starts_with('[') {
            if !trimmed.ends_with(']') {
                bail!("line {line}: unterminated section header '{trimmed}'");
            }
            let name = trimmed[1..trimmed.len() - 1].trim().to_string();
            if !SECTIONS.contains(&name.as_str()) {
                bail!("line {line}: unknown section [{name}]");
            }
            let already_seen = if name == "aperture" {
                !entries.aperture_lines.is_empty()
            } else {
                entries.map.contains_key(&name)
            };
            if already_seen {
                bail!("line {line}: duplicate section [{name}]");
            }
            if name != "aperture" {
                entries.map.entry(name.clone()).or_default();
            }
            section = Some(name);
            continue;
        }
        if in_aperture {
            // The aperture block has its own line format; keep it verbatim,
            // comments included, so reported line numbers stay aligned.
            entries.aperture_lines.push((line, raw_line.to_string()));
            continue;
        }
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let section_name = section
            .clone()
            .ok_or_else(|| anyhow!("line {line}: key outside of any [section]"))?;
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| anyhow!("line {line}: expected 'key = value', got '{trimmed}'"))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            bail!("line {line}: expected 'key = value', got '{trimmed}'");
        }
        let keys = entries.map.entry(section_name).or_default();
        if let Some((previous, _)) = keys.get(&key) {
            bail!("line {line}: duplicate key '{key}', first set on line {previous}");
        }
        keys.insert(key, (line, value));
    }
    Ok(entries)
}

fn parse_aperture(lines: &[(usize, String)]) -> Result<ApertureFunction> {
    let block: String =
        lines.iter().map(|(_, text)| text.as_str()).collect::<Vec<_>>().join("\n");
    let aperture = from_config_block(&block).map_err(|err| match err {
        LibError::ApertureParse { line, message } => {
            let file_line = lines.get(line - 1).map_or(0, |(n, _)| *n);
            anyhow!("line {file_line}: {message}")
        }
        other => anyhow!("in [aperture]: {other}"),
    })?;
    if aperture.has_cross_channels() {
        bail!("in [aperture]: cross-polarization channels are not supported by the evaluator");
    }
    Ok(aperture)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut entries = scan(text)?;

    for required in ["setup", "grid", "model"] {
        if !entries.has_section(required) {
            bail!("missing section [{required}]");
        }
    }

    let mut setup_length = |key: &str| -> Result<f64> {
        let (line, value) = entries.require("setup", key)?;
        parse_length(&value, line)
    };
    let pump_wavelength = setup_length("pump_wavelength")?;
    let crystal_length = setup_length("crystal_length")?;
    let crystal_aperture_distance = setup_length("crystal_aperture_distance")?;
    let aperture_detector_distance = setup_length("aperture_detector_distance")?;
    let slit_separation = setup_length("slit_separation")?;
    let slit_width = setup_length("slit_width")?;
    let pump_waist = setup_length("pump_waist")?;
    let setup = PhysicalSetup::new(
        pump_wavelength,
        crystal_length,
        crystal_aperture_distance,
        aperture_detector_distance,
        slit_separation,
        slit_width,
        pump_waist,
    )
    .with_context(|| "in [setup]".to_string())?;

    if let Some((line, value)) = entries.take("setup", "downconverted_wavelength") {
        let declared = parse_length(&value, line)?;
        let expected = 2.0 * pump_wavelength;
        if (declared - expected).abs() > 1e-9 * expected {
            bail!(
                "line {line}: downconverted_wavelength {declared} m contradicts \
                 twice the pump wavelength ({expected} m)"
            );
        }
    }

    let (line, value) = entries.require("grid", "x_min")?;
    let x_min = parse_length(&value, line)?;
    let (line, value) = entries.require("grid", "x_max")?;
    let x_max = parse_length(&value, line)?;
    let window = Window::new(x_min, x_max).with_context(|| "in [grid]".to_string())?;
    let (line, value) = entries.require("grid", "points")?;
    let points = parse_count(&value, line)?;
    if points < 3 {
        bail!("line {line}: points must be at least 3, got {points}");
    }
    let slices = match entries.take("grid", "slices") {
        Some((line, value)) => value
            .split(',')
            .map(|piece| parse_length(piece, line))
            .collect::<Result<Vec<f64>>>()?,
        None => vec![0.0],
    };

    let (line, value) = entries.require("model", "path")?;
    let path = match value.as_str() {
        "closed_form" => ModelPath::ClosedForm,
        "numeric" => ModelPath::Numeric,
        other => bail!("line {line}: unknown path '{other}' (closed_form, numeric)"),
    };
    let (line, value) = entries.require("model", "source")?;
    let source = match value.as_str() {
        "quantum" => Source::Quantum,
        "classical" => Source::Classical,
        other => bail!("line {line}: unknown source '{other}' (quantum, classical)"),
    };
    if source == Source::Classical && path == ModelPath::Numeric {
        bail!("line {line}: the classical source has no numeric path");
    }

    let visibility = match entries.take("model", "visibility") {
        Some((line, value)) => {
            if source != Source::Classical {
                bail!("line {line}: visibility applies to the classical source only");
            }
            let v = parse_bare(&value, line)?;
            if !(0.0..=0.5).contains(&v) {
                bail!("line {line}: visibility must lie in [0, 0.5], got {v}");
            }
            v
        }
        None => 0.5,
    };
    let retardance = match entries.take("model", "retardance") {
        Some((line, value)) => {
            if source != Source::Quantum {
                bail!("line {line}: retardance applies to the quantum source only");
            }
            parse_angle(&value, line)?
        }
        None => FRAC_PI_2,
    };
    let kernel = match entries.take("model", "kernel") {
        Some((line, value)) => {
            if path != ModelPath::Numeric {
                bail!("line {line}: kernel selection applies to the numeric path only");
            }
            DetectionKernel::parse(&value)
                .ok_or_else(|| anyhow!("line {line}: unknown kernel '{value}' (fraunhofer, fresnel)"))?
        }
        None => DetectionKernel::Fraunhofer,
    };

    if entries.has_section("quadrature") && path != ModelPath::Numeric {
        bail!("[quadrature] applies to the numeric path only");
    }
    let domain_factor = match entries.take("quadrature", "domain_factor") {
        Some((line, value)) => parse_bare(&value, line)?,
        None => 1.0,
    };
    let tolerance = match entries.take("quadrature", "tolerance") {
        Some((line, value)) => parse_bare(&value, line)?,
        None => 1e-8,
    };
    let force_general = match entries.take("quadrature", "force_general") {
        Some((line, value)) => parse_bool(&value, line)?,
        None => false,
    };

    let aperture = if entries.aperture_lines.is_empty() {
        None
    } else {
        if path != ModelPath::Numeric {
            bail!("[aperture] applies to the numeric path only");
        }
        Some(parse_aperture(&entries.aperture_lines)?)
    };

    let montecarlo = if entries.has_section("montecarlo") {
        if path == ModelPath::Numeric {
            bail!(
                "[montecarlo] cannot run on the numeric path: its density has \
                 no analytic envelope for rejection sampling"
            );
        }
        let (line, value) = entries.require("montecarlo", "events")?;
        let events = parse_count(&value, line)?;
        if events == 0 {
            bail!("line {line}: events must be positive");
        }
        let (line, value) = entries.require("montecarlo", "bins")?;
        let bins = parse_count(&value, line)?;
        if bins < 2 {
            bail!("line {line}: at least 2 bins are required, got {bins}");
        }
        let (line, value) = entries.require("montecarlo", "seed")?;
        let seed = parse_seed(&value, line)?;
        Some(MonteCarloBlock { events, bins, seed })
    } else {
        None
    };

    entries.reject_leftovers()?;

    Ok(RunConfig {
        setup,
        window,
        points,
        slices,
        path,
        source,
        visibility,
        retardance,
        kernel,
        aperture,
        domain_factor,
        tolerance,
        force_general,
        montecarlo,
    })
}

/// Replaces one parameter for a sweep run and returns its SI value.
///
/// Only numeric physics and grid parameters can be swept; structural
/// choices such as the path or the source would change what the summary
/// columns mean between rows.
pub fn apply_override(config: &mut RunConfig, param: &str, raw: &str) -> Result<f64> {
    let raw = raw.trim();
    let value = match param {
        "setup.pump_wavelength"
        | "setup.crystal_length"
        | "setup.crystal_aperture_distance"
        | "setup.aperture_detector_distance"
        | "setup.slit_separation"
        | "setup.slit_width"
        | "setup.pump_waist" => {
            let length = parse_length(raw, 0)
                .map_err(|_| anyhow!("value '{raw}' for {param} needs a length unit"))?;
            let field = param.strip_prefix("setup.").unwrap();
            let s = &config.setup;
            let mut fields = [
                s.pump_wavelength,
                s.crystal_length,
                s.crystal_aperture_distance,
                s.aperture_detector_distance,
                s.slit_separation,
                s.slit_width,
                s.pump_waist,
            ];
            let index = [
                "pump_wavelength",
                "crystal_length",
                "crystal_aperture_distance",
                "aperture_detector_distance",
                "slit_separation",
                "slit_width",
                "pump_waist",
            ]
            .iter()
            .position(|name| *name == field)
            .unwrap();
            fields[index] = length;
            config.setup = PhysicalSetup::new(
                fields[0], fields[1], fields[2], fields[3], fields[4], fields[5], fields[6],
            )
            .with_context(|| format!("sweeping {param} to {raw}"))?;
            length
        }
        "grid.x_min" | "grid.x_max" => {
            let length = parse_length(raw, 0)
                .map_err(|_| anyhow!("value '{raw}' for {param} needs a length unit"))?;
            let (lo, hi) = if param == "grid.x_min" {
                (length, config.window.x_max)
            } else {
                (config.window.x_min, length)
            };
            config.window =
                Window::new(lo, hi).with_context(|| format!("sweeping {param} to {raw}"))?;
            length
        }
        "grid.points" => {
            let points = parse_count(raw, 0)?;
            if points < 3 {
                bail!("sweeping grid.points to {points}: must be at least 3");
            }
            config.points = points;
            points as f64
        }
        "model.visibility" => {
            if config.source != Source::Classical {
                bail!("model.visibility can only be swept with a classical source");
            }
            let v = parse_bare(raw, 0)?;
            if !(0.0..=0.5).contains(&v) {
                bail!("sweeping model.visibility to {v}: must lie in [0, 0.5]");
            }
            config.visibility = v;
            v
        }
        "model.retardance" => {
            if config.source != Source::Quantum {
                bail!("model.retardance can only be swept with a quantum source");
            }
            let angle = parse_angle(raw, 0)
                .map_err(|_| anyhow!("value '{raw}' for {param} needs rad or pi"))?;
            config.retardance = angle;
            angle
        }
        "quadrature.domain_factor" | "quadrature.tolerance" => {
            if config.path != ModelPath::Numeric {
                bail!("{param} can only be swept on the numeric path");
            }
            let v = parse_bare(raw, 0)?;
            if param == "quadrature.domain_factor" {
                config.domain_factor = v;
            } else {
                config.tolerance = v;
            }
            v
        }
        other => bail!("parameter '{other}' is not sweepable"),
    };
    Ok(value)
}
