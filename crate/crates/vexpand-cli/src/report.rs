use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use vexpand::spectral::{ClassifiedEig, TrigPoly};
use vexpand::{Error, Result};

use crate::config::Config;

pub const REPORT_SCHEMA_VERSION: &str = "1";

/// Top-level report.json: schema version, config echo, per-command results,
/// and timing. Everything except `timing_seconds` is deterministic.
#[derive(Serialize)]
pub struct Report {
    pub schema_version: &'static str,
    pub tool_version: &'static str,
    pub command: String,
    pub config: Config,
    pub results: Value,
    pub timing_seconds: f64,
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::InvalidParameter(format!("cannot write {path:?}: {e}"))
}

pub fn write_report(dir: &Path, report: &Report) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join("report.json");
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::InvalidParameter(format!("serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

/// spectrum.csv: re,im,modulus,stable_flag per eigenvalue.
pub fn write_spectrum_csv(dir: &Path, eigs: &[ClassifiedEig]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join("spectrum.csv");
    let mut f = std::fs::File::create(&path).map_err(|e| io_err(&path, e))?;
    writeln!(f, "re,im,modulus,stable_flag").map_err(|e| io_err(&path, e))?;
    for e in eigs {
        writeln!(
            f,
            "{},{},{},{}",
            e.re,
            e.im,
            e.modulus,
            if e.stable { 1 } else { 0 }
        )
        .map_err(|er| io_err(&path, er))?;
    }
    Ok(path)
}

/// density.csv: coordinate columns then the real density value, on a uniform
/// evaluation grid with `per_axis` points per axis.
pub fn write_density_csv(dir: &Path, density: &TrigPoly, per_axis: usize) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join("density.csv");
    let mut f = std::fs::File::create(&path).map_err(|e| io_err(&path, e))?;
    use vexpand::dynamics::Point;
    if density.dim() == 1 {
        writeln!(f, "x,value").map_err(|e| io_err(&path, e))?;
        for i in 0..per_axis {
            let x = i as f64 / per_axis as f64;
            let v = density.eval(&Point::new1(x)).re;
            writeln!(f, "{x},{v}").map_err(|e| io_err(&path, e))?;
        }
    } else {
        writeln!(f, "x,y,value").map_err(|e| io_err(&path, e))?;
        for i in 0..per_axis {
            for j in 0..per_axis {
                let x = i as f64 / per_axis as f64;
                let y = j as f64 / per_axis as f64;
                let v = density.eval(&Point::new2(x, y)).re;
                writeln!(f, "{x},{y},{v}").map_err(|e| io_err(&path, e))?;
            }
        }
    }
    Ok(path)
}
