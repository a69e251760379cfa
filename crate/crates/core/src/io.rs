//! CSV emission: time series, space-time heatmaps, diffusion-surface
//! dumps, and sweep tables. All values print with 17 significant
//! digits, so files round-trip at full double precision and reruns are
//! byte-identical.

use crate::coefficients::DiffusionField;
use crate::metrics::{totals, SummaryRow};
use crate::model::{Compartment, Region, SimulationConfig};
use crate::stepper::SimulationRecord;
use crate::sweep::{GridPoint, SweepPoint};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

#[derive(Debug)]
pub struct IoError {
    pub path: String,
    pub source: std::io::Error,
}

impl fmt::Display for IoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cannot write {}: {}", self.path, self.source)
    }
}

impl std::error::Error for IoError {}

/// 17 significant digits: enough to reproduce any f64 exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{:.16e}", v)
}

fn writer(path: &Path) -> Result<BufWriter<File>, IoError> {
    File::create(path).map(BufWriter::new).map_err(|e| IoError {
        path: path.display().to_string(),
        source: e,
    })
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<(), IoError> {
    w.flush().map_err(|e| IoError {
        path: path.display().to_string(),
        source: e,
    })
}

macro_rules! wline {
    ($w:expr, $path:expr, $($arg:tt)*) => {
        writeln!($w, $($arg)*).map_err(|e| IoError {
            path: $path.display().to_string(),
            source: e,
        })?
    };
}

/// Per-frame, per-region totals and probe values:
/// `t,region,S_total,I_total,R_total,S_at_probe,I_at_probe,R_at_probe,N_total,interface_mode`.
pub fn emit_timeseries(record: &SimulationRecord, path: &Path) -> Result<(), IoError> {
    let cfg = &record.cfg;
    let probe = cfg.probe_cell;
    let mut w = writer(path)?;
    wline!(
        w,
        path,
        "t,region,S_total,I_total,R_total,S_at_probe,I_at_probe,R_at_probe,N_total,interface_mode"
    );
    for frame in &record.frames {
        let t = totals(
            &frame.region1,
            &frame.region2,
            &cfg.grid,
            cfg.initial.population_scale,
        );
        for (ri, state) in [(0usize, &frame.region1), (1usize, &frame.region2)] {
            let sum =
                |v: &[f64]| v.iter().sum::<f64>() * cfg.grid.dx * cfg.initial.population_scale;
            wline!(
                w,
                path,
                "{},{},{},{},{},{},{},{},{},{}",
                fmt_f64(frame.time),
                ri + 1,
                fmt_f64(sum(&state.s)),
                fmt_f64(sum(&state.i)),
                fmt_f64(sum(&state.r)),
                fmt_f64(state.s[probe]),
                fmt_f64(state.i[probe]),
                fmt_f64(state.r[probe]),
                fmt_f64(t.per_region_population[ri]),
                frame.iface[ri].mode
            );
        }
    }
    finish(w, path)
}

/// Long-form `t,x,value` rows for one compartment over the full
/// two-region axis at every recorded frame; x at cell centers, values
/// exactly the recorded fields.
pub fn emit_heatmap(
    record: &SimulationRecord,
    compartment: Compartment,
    path: &Path,
) -> Result<(), IoError> {
    let cfg = &record.cfg;
    let n = cfg.grid.n_cells_per_region;
    let mut w = writer(path)?;
    wline!(w, path, "t,x,value");
    for frame in &record.frames {
        for (region, state) in [(Region::One, &frame.region1), (Region::Two, &frame.region2)] {
            let field = state.field(compartment);
            for k in 0..n {
                wline!(
                    w,
                    path,
                    "{},{},{}",
                    fmt_f64(frame.time),
                    fmt_f64(cfg.grid.cell_center(region, k)),
                    fmt_f64(field[k])
                );
            }
        }
    }
    finish(w, path)
}

/// Surface dump of the diffusion coefficient: `t,y,sigma` on the cell
/// centers of both regions at `t_samples` uniformly spaced times.
pub fn emit_sigma_surface(
    cfg: &SimulationConfig,
    t_samples: usize,
    path: &Path,
) -> Result<(), IoError> {
    let n = cfg.grid.n_cells_per_region;
    let mut w = writer(path)?;
    wline!(w, path, "t,y,sigma");
    let steps = t_samples.max(2);
    for it in 0..steps {
        let t = cfg.t_final * it as f64 / (steps - 1) as f64;
        for region in Region::BOTH {
            let field = DiffusionField::for_region(cfg, region);
            for k in 0..n {
                let y = cfg.grid.cell_center(region, k);
                wline!(
                    w,
                    path,
                    "{},{},{}",
                    fmt_f64(t),
                    fmt_f64(y),
                    fmt_f64(field.spatial(y) * field.kappa(t))
                );
            }
        }
    }
    finish(w, path)
}

/// Single-run summary: header plus one row.
pub fn emit_summary(row: &SummaryRow, path: &Path) -> Result<(), IoError> {
    let mut w = writer(path)?;
    wline!(w, path, "{}", SummaryRow::CSV_HEADER);
    wline!(w, path, "{}", row.csv_row());
    finish(w, path)
}

/// Sweep table: `lambda` column followed by the summary columns; failed
/// points carry the error text in an `error` column and empty metrics.
pub fn emit_sweep_table(points: &[SweepPoint], path: &Path) -> Result<(), IoError> {
    let mut w = writer(path)?;
    wline!(w, path, "lambda,{},error", SummaryRow::CSV_HEADER);
    for p in points {
        match &p.outcome {
            Ok(row) => wline!(w, path, "{},{},", fmt_f64(p.lambda), row.csv_row()),
            Err(e) => wline!(
                w,
                path,
                "{},,,,,,,\"{}\"",
                fmt_f64(p.lambda),
                e.replace('"', "'")
            ),
        }
    }
    finish(w, path)
}

/// Long-form grid output: `lambda1,lambda2,peak_infected,lockdown_days`.
pub fn emit_grid_table(points: &[GridPoint], path: &Path) -> Result<(), IoError> {
    let mut w = writer(path)?;
    wline!(w, path, "lambda1,lambda2,peak_infected,lockdown_days,error");
    for p in points {
        match &p.outcome {
            Ok((peak, lockdown)) => wline!(
                w,
                path,
                "{},{},{},{},",
                fmt_f64(p.lambda1),
                fmt_f64(p.lambda2),
                fmt_f64(*peak),
                fmt_f64(*lockdown)
            ),
            Err(e) => wline!(
                w,
                path,
                "{},{},,,\"{}\"",
                fmt_f64(p.lambda1),
                fmt_f64(p.lambda2),
                e.replace('"', "'")
            ),
        }
    }
    finish(w, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SimulationConfig, TwoRegionGrid};
    use crate::stepper::run_simulation;

    fn tiny_record() -> SimulationRecord {
        let mut cfg = SimulationConfig::baseline();
        cfg.grid = TwoRegionGrid::new(0.0, 1.0, 2.0, 4).unwrap();
        cfg.probe_cell = 1;
        cfg.t_final = 0.05;
        cfg.dt = 0.0125;
        cfg.output_stride = 2;
        run_simulation(&cfg).unwrap()
    }

    #[test]
    fn fmt_f64_round_trips() {
        for v in [
            0.0,
            1.0,
            0.1,
            2.0 / 3.0,
            1e-60,
            12345.6789e200,
            -0.0036787944117144233,
        ] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{}", s);
        }
    }

    #[test]
    fn timeseries_row_count_and_initial_totals() {
        let rec = tiny_record();
        let dir = std::env::temp_dir().join("twosir_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ts.csv");
        emit_timeseries(&rec, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 2 * rec.frames.len());
        // first frame totals match the configured initial totals
        let t0 = totals(
            &rec.frames[0].region1,
            &rec.frames[0].region2,
            &rec.cfg.grid,
            rec.cfg.initial.population_scale,
        );
        let first: Vec<&str> = lines[1].split(',').collect();
        let s_total: f64 = first[2].parse().unwrap();
        assert!((s_total - 0.8 * 300.0).abs() < 1e-9);
        assert!((t0.population - 600.0).abs() < 1e-9);
    }

    #[test]
    fn heatmap_shape_and_exact_values() {
        let rec = tiny_record();
        let dir = std::env::temp_dir().join("twosir_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("hm.csv");
        emit_heatmap(&rec, Compartment::I, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + rec.frames.len() * 8);
        // a value survives the round trip bit-exactly
        let row: Vec<&str> = lines[1].split(',').collect();
        let v: f64 = row[2].parse().unwrap();
        assert_eq!(v.to_bits(), rec.frames[0].region1.i[0].to_bits());
    }

    #[test]
    fn rewriting_is_byte_identical() {
        let rec = tiny_record();
        let dir = std::env::temp_dir().join("twosir_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rewrite.csv");
        emit_timeseries(&rec, &path).unwrap();
        let a = std::fs::read(&path).unwrap();
        emit_timeseries(&rec, &path).unwrap();
        let b = std::fs::read(&path).unwrap();
        assert_eq!(a, b);
    }
}
