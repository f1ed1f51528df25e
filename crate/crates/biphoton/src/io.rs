//! Plain-text serialization of grids, events, histograms and reports.
//!
//! Everything here is hand-rolled on purpose: the output contract is byte
//! reproducibility across runs, floats are written in Rust's shortest
//! round-trip form and parsed back bit-exact, and parse errors must point at
//! the offending line. Writers take `io::Write` so they serve files, pipes
//! and in-memory buffers alike; `atomic_write` is the file-side helper that
//! keeps half-written output from ever appearing under the final name.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::correlation::{CorrelationGrid, Window, WitnessReport};
use crate::error::{Error, Result};
use crate::montecarlo::{CoincidenceEvent, CoincidenceHistogram};

/// Writes a correlation grid as `x1_m,x2_m,g22` records, row-major.
pub fn write_grid_csv<W: Write>(mut out: W, grid: &CorrelationGrid) -> Result<()> {
    let positions = grid.positions();
    writeln!(out, "x1_m,x2_m,g22")?;
    for (i, &x1) in positions.iter().enumerate() {
        for (j, &x2) in positions.iter().enumerate() {
            writeln!(out, "{},{},{}", x1, x2, grid.value(i, j))?;
        }
    }
    Ok(())
}

/// Reads a grid written by [`write_grid_csv`]. The record count must be a
/// perfect square and the positions a consistent row-major scan.
pub fn read_grid_csv<R: BufRead>(input: R) -> Result<CorrelationGrid> {
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if idx == 0 {
            if line != "x1_m,x2_m,g22" {
                return Err(Error::MalformedRecord {
                    line: lineno,
                    message: format!("expected header `x1_m,x2_m,g22`, got `{line}`"),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::MalformedRecord {
                line: lineno,
                message: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        rows.push((
            parse_float(fields[0], lineno)?,
            parse_float(fields[1], lineno)?,
            parse_float(fields[2], lineno)?,
        ));
    }
    let count = rows.len();
    let n = (count as f64).sqrt().round() as usize;
    if n < 3 || n * n != count {
        return Err(Error::MalformedRecord {
            line: count + 1,
            message: format!("{count} records do not form a square grid"),
        });
    }
    let window = Window::new(rows[0].0, rows[count - 1].0)?;
    let positions = window.positions(n);
    let mut values = Vec::with_capacity(count);
    for (r, &(x1, x2, v)) in rows.iter().enumerate() {
        let (i, j) = (r / n, r % n);
        if x1 != positions[i] || x2 != positions[j] {
            return Err(Error::MalformedRecord {
                line: r + 2,
                message: format!(
                    "positions ({x1}, {x2}) break the row-major scan at ({i}, {j})"
                ),
            });
        }
        values.push(v);
    }
    Ok(CorrelationGrid { window, n, values })
}

/// Writes a one-dimensional cut as `delta_m,g22` records.
pub fn write_fringe_csv<W: Write>(mut out: W, deltas: &[f64], values: &[f64]) -> Result<()> {
    writeln!(out, "delta_m,g22")?;
    for (d, v) in deltas.iter().zip(values) {
        writeln!(out, "{},{}", d, v)?;
    }
    Ok(())
}

/// Writes sampled events as `x1_m,x2_m` records.
pub fn write_events_csv<W: Write>(mut out: W, events: &[CoincidenceEvent]) -> Result<()> {
    writeln!(out, "x1_m,x2_m")?;
    for e in events {
        writeln!(out, "{},{}", e.x1, e.x2)?;
    }
    Ok(())
}

/// Reads events written by [`write_events_csv`].
pub fn read_events_csv<R: BufRead>(input: R) -> Result<Vec<CoincidenceEvent>> {
    let mut events = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if idx == 0 {
            if line != "x1_m,x2_m" {
                return Err(Error::MalformedRecord {
                    line: lineno,
                    message: format!("expected header `x1_m,x2_m`, got `{line}`"),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(Error::MalformedRecord {
                line: lineno,
                message: format!("expected 2 fields, got {}", fields.len()),
            });
        }
        events.push(CoincidenceEvent {
            x1: parse_float(fields[0], lineno)?,
            x2: parse_float(fields[1], lineno)?,
        });
    }
    Ok(events)
}

/// Writes a separation histogram as `delta_lo_m,delta_hi_m,count` records.
pub fn write_histogram_csv<W: Write>(mut out: W, histogram: &CoincidenceHistogram) -> Result<()> {
    writeln!(out, "delta_lo_m,delta_hi_m,count")?;
    for (i, &count) in histogram.counts.iter().enumerate() {
        writeln!(
            out,
            "{},{},{}",
            histogram.bin_edges[i],
            histogram.bin_edges[i + 1],
            count
        )?;
    }
    Ok(())
}

/// Writes a witness report as `key=value` lines.
pub fn write_witness_report<W: Write>(mut out: W, report: &WitnessReport) -> Result<()> {
    writeln!(out, "g_zero={}", report.g_zero)?;
    writeln!(out, "g_max_offdiag={}", report.g_max_offdiag)?;
    writeln!(out, "delta_at_max_m={}", report.delta_at_max)?;
    writeln!(out, "margin={}", report.margin)?;
    writeln!(out, "violated={}", report.violated)?;
    Ok(())
}

/// Writes `bytes` to `path` through a same-directory temporary file and an
/// atomic rename, so readers never observe a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("`{}` has no file name", path.display())))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(format!(".tmp.{}", std::process::id()));
    let tmp_path = match dir {
        Some(d) => d.join(&tmp_name),
        None => tmp_name.clone().into(),
    };
    std::fs::write(&tmp_path, bytes)?;
    std::fs::rename(&tmp_path, path)?;
    Ok(())
}

fn parse_float(field: &str, line: usize) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::MalformedRecord {
        line,
        message: format!("`{field}` is not a number"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitude::amplitude_closed_form;
    use crate::correlation::g22_grid;
    use crate::model::QuantumClosedForm;
    use crate::montecarlo::{histogram_delta, sample_coincidences};
    use crate::setup::PhysicalSetup;

    fn setup() -> PhysicalSetup {
        PhysicalSetup::new(351e-9, 5e-3, 25e-3, 1.0, 200e-6, 0.0, 20e-6).unwrap()
    }

    fn small_grid() -> CorrelationGrid {
        let s = setup();
        let window = Window::new(-4e-3, 4e-3).unwrap();
        g22_grid(
            |pair| Ok(amplitude_closed_form(pair, &s).coincidence_probability()),
            &window,
            11,
        )
        .unwrap()
    }

    #[test]
    fn grid_csv_round_trips_byte_for_byte() {
        let grid = small_grid();
        let mut first = Vec::new();
        write_grid_csv(&mut first, &grid).unwrap();
        let back = read_grid_csv(first.as_slice()).unwrap();
        let mut second = Vec::new();
        write_grid_csv(&mut second, &back).unwrap();
        assert_eq!(first, second);
        assert_eq!(back.values, grid.values);
    }

    #[test]
    fn events_csv_round_trips_exactly() {
        let model = QuantumClosedForm {
            setup: setup(),
            retardance: std::f64::consts::FRAC_PI_2,
        };
        let window = Window::new(-4e-3, 4e-3).unwrap();
        let events = sample_coincidences(&model, &window, 300, 13).unwrap();
        let mut buffer = Vec::new();
        write_events_csv(&mut buffer, &events).unwrap();
        let back = read_events_csv(buffer.as_slice()).unwrap();
        assert_eq!(back, events);
    }

    #[test]
    fn histogram_csv_has_the_expected_shape() {
        let window = Window::new(-1.0, 1.0).unwrap();
        let events = [
            CoincidenceEvent { x1: 0.5, x2: -0.25 },
            CoincidenceEvent { x1: -0.5, x2: 0.5 },
            CoincidenceEvent { x1: 0.0, x2: 0.0 },
        ];
        let hist = histogram_delta(&events, 4, &window).unwrap();
        let mut buffer = Vec::new();
        write_histogram_csv(&mut buffer, &hist).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        // The -1.0 separation lands on a bin edge; bins are half-open from
        // below, so it counts in [-1, 0).
        let expected = "delta_lo_m,delta_hi_m,count\n-2,-1,0\n-1,0,1\n0,1,2\n1,2,0\n";
        assert_eq!(text, expected);
    }

    #[test]
    fn witness_report_text_is_stable() {
        let report = WitnessReport {
            g_zero: 0.25,
            g_max_offdiag: 2.0,
            delta_at_max: 0.0018,
            margin: 1.75,
            violated: true,
        };
        let mut buffer = Vec::new();
        write_witness_report(&mut buffer, &report).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        assert_eq!(
            text,
            "g_zero=0.25\ng_max_offdiag=2\ndelta_at_max_m=0.0018\nmargin=1.75\nviolated=true\n"
        );
    }

    #[test]
    fn fringe_csv_pairs_deltas_with_values() {
        let mut buffer = Vec::new();
        write_fringe_csv(&mut buffer, &[-0.001, 0.0, 0.001], &[1.5, 0.0, 1.5]).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        assert_eq!(text, "delta_m,g22\n-0.001,1.5\n0,0\n0.001,1.5\n");
    }

    #[test]
    fn malformed_records_point_at_their_line() {
        let bad = "x1_m,x2_m,g22\n-0.004,-0.004,1\nnot,a\n";
        match read_grid_csv(bad.as_bytes()) {
            Err(Error::MalformedRecord { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected a parse error, got {other:?}"),
        }
        let wrong_header = "a,b\n0,0\n";
        assert!(matches!(
            read_events_csv(wrong_header.as_bytes()),
            Err(Error::MalformedRecord { line: 1, .. })
        ));
    }

    #[test]
    fn non_square_grids_are_rejected() {
        let bad = "x1_m,x2_m,g22\n0,0,1\n0,1,1\n1,0,1\n1,1,1\n2,2,1\n";
        assert!(matches!(
            read_grid_csv(bad.as_bytes()),
            Err(Error::MalformedRecord { .. })
        ));
    }

    #[test]
    fn atomic_write_replaces_content_without_leftovers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.csv");
        atomic_write(&path, b"first\n").unwrap();
        atomic_write(&path, b"second\n").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second\n");
        let names: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names.len(), 1, "temporary files should not linger: {names:?}");
    }
}
