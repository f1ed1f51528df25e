//! The pipelines behind the subcommands: grid and cut evaluation, witness
//! reporting, event sampling and parameter sweeps. All file output goes
//! through atomic writes so an interrupted run never leaves half a file.

use std::path::Path;

use anyhow::{bail, Context, Result};
use biphoton::amplitude::DetectorPair;
use biphoton::correlation::{homogeneity_check, schwarz_witness, CorrelationGrid, WitnessReport};
use biphoton::io::{
    atomic_write, write_events_csv, write_fringe_csv, write_grid_csv, write_histogram_csv,
    write_witness_report,
};
use biphoton::model::{CoincidenceModel, ModelRegistry};
use biphoton::montecarlo::{estimate_g2_dip, histogram_delta, sample_coincidences};

use crate::config::{apply_override, RunConfig};

fn build_model(config: &RunConfig) -> Result<Box<dyn CoincidenceModel>> {
    ModelRegistry::with_standard_models()
        .build(config.model_name(), &config.model_context())
        .with_context(|| format!("building model '{}'", config.model_name()))
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    atomic_write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn grid_bytes(grid: &CorrelationGrid) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    write_grid_csv(&mut bytes, grid)?;
    Ok(bytes)
}

/// Density along the separation cut x1 - x2 at a fixed sum coordinate. The
/// separation spans the configured window, so the detectors stay inside
/// half of it on either side of the slice center.
fn separation_cut(
    model: &dyn CoincidenceModel,
    config: &RunConfig,
    sum: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let deltas = config.window.positions(config.points);
    let values = deltas
        .iter()
        .map(|&delta| {
            model
                .density(DetectorPair::new((sum + delta) / 2.0, (sum - delta) / 2.0))
                .map_err(anyhow::Error::from)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((deltas, values))
}

/// Writes grid.csv plus one separation-cut CSV per configured slice.
pub fn cmd_fringe(config: &RunConfig, out: &Path) -> Result<usize> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let model = build_model(config)?;
    let grid = model.density_grid(&config.window, config.points)?;
    write_atomically(&out.join("grid.csv"), &grid_bytes(&grid)?)?;
    for (index, &sum) in config.slices.iter().enumerate() {
        let (deltas, values) = separation_cut(model.as_ref(), config, sum)?;
        let mut bytes = Vec::new();
        write_fringe_csv(&mut bytes, &deltas, &values)?;
        let name = if index == 0 {
            "fringe.csv".to_string()
        } else {
            format!("fringe_slice{index}.csv")
        };
        write_atomically(&out.join(name), &bytes)?;
    }
    Ok(config.slices.len())
}

fn witness_pipeline(config: &RunConfig, out: &Path) -> Result<(CorrelationGrid, WitnessReport)> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let model = build_model(config)?;
    let grid = model.density_grid(&config.window, config.points)?;
    let report = schwarz_witness(&grid)?;
    write_atomically(&out.join("grid.csv"), &grid_bytes(&grid)?)?;
    let mut bytes = Vec::new();
    write_witness_report(&mut bytes, &report)?;
    write_atomically(&out.join("witness.txt"), &bytes)?;
    Ok((grid, report))
}

/// Writes grid.csv and witness.txt; the caller maps the verdict to an exit
/// status.
pub fn cmd_witness(config: &RunConfig, out: &Path) -> Result<WitnessReport> {
    Ok(witness_pipeline(config, out)?.1)
}

/// Samples events, writes events.csv, histogram.csv and dip.txt.
pub fn cmd_montecarlo(config: &RunConfig, out: &Path, seed_override: Option<u64>) -> Result<u64> {
    let Some(mc) = config.montecarlo else {
        bail!("the montecarlo command needs a [montecarlo] section in the config");
    };
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let seed = seed_override.unwrap_or(mc.seed);
    let model = build_model(config)?;
    let events = sample_coincidences(model.as_ref(), &config.window, mc.events, seed)?;

    let mut bytes = Vec::new();
    write_events_csv(&mut bytes, &events)?;
    write_atomically(&out.join("events.csv"), &bytes)?;

    let histogram = histogram_delta(&events, mc.bins, &config.window)?;
    let mut bytes = Vec::new();
    write_histogram_csv(&mut bytes, &histogram)?;
    write_atomically(&out.join("histogram.csv"), &bytes)?;

    let dip = estimate_g2_dip(&histogram)?;
    let report = format!(
        "g2_dip={}\nstd_error={}\nevents={}\nbins={}\nseed={}\n",
        dip.g2_dip,
        dip.std_error,
        events.len(),
        mc.bins,
        seed
    );
    write_atomically(&out.join("dip.txt"), report.as_bytes())?;
    Ok(seed)
}

/// One witness run per parameter value, each in its own subdirectory, plus
/// a summary table of margins and homogeneity scores.
pub fn cmd_sweep(config: &RunConfig, out: &Path, param: &str, values: &str) -> Result<usize> {
    let pieces: Vec<&str> =
        values.split(',').map(str::trim).filter(|piece| !piece.is_empty()).collect();
    if pieces.is_empty() {
        bail!("--values must list at least one value");
    }
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut summary = String::from("value,witness_margin,homogeneity\n");
    for (index, piece) in pieces.iter().enumerate() {
        let mut run = config.clone();
        let value = apply_override(&mut run, param, piece)
            .with_context(|| format!("sweep value {index} ('{piece}')"))?;
        let subdir = out.join(format!("value_{index}"));
        let (grid, report) = witness_pipeline(&run, &subdir)?;
        let homogeneity = homogeneity_check(&grid)?;
        summary.push_str(&format!("{},{},{}\n", value, report.margin, homogeneity));
    }
    write_atomically(&out.join("summary.csv"), summary.as_bytes())?;
    Ok(pieces.len())
}
