//! CSV traces and JSON records.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rvo_core::trace::SpectrumTrace;
use serde::Serialize;

use crate::error::CliError;

/// Twelve significant digits in scientific notation.
pub fn format_value(v: f64) -> String {
    format!("{v:.11e}")
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Writes `{axis},value` followed by one line per sample.
pub fn write_trace(trace: &SpectrumTrace, path: &Path) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(io_error(path))?;
    let mut w = BufWriter::new(file);
    let mut body = String::with_capacity(40 * (trace.len() + 1));
    body.push_str(&trace.axis);
    body.push_str(",value\n");
    for (x, v) in trace.points() {
        body.push_str(&format_value(x));
        body.push(',');
        body.push_str(&format_value(v));
        body.push('\n');
    }
    w.write_all(body.as_bytes()).map_err(io_error(path))?;
    w.flush().map_err(io_error(path))
}

/// Reads a file written by [`write_trace`] back into `(axis name, x, value)`.
pub fn read_trace(path: &Path) -> Result<(String, Vec<f64>, Vec<f64>), CliError> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    let bad = |line: usize, what: &str| CliError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {line}: {what}")),
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad(1, "empty file"))?;
    let axis = header.strip_suffix(",value").ok_or_else(|| bad(1, "bad header"))?.to_string();
    let (mut xs, mut vs) = (Vec::new(), Vec::new());
    for (i, line) in lines.enumerate() {
        let (x, v) = line.split_once(',').ok_or_else(|| bad(i + 2, "missing comma"))?;
        xs.push(x.parse().map_err(|_| bad(i + 2, "bad axis value"))?);
        vs.push(v.parse().map_err(|_| bad(i + 2, "bad value"))?);
    }
    Ok((axis, xs, vs))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("records serialize to JSON");
    text.push('\n');
    fs::write(path, text).map_err(io_error(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_trace_has_three_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let t = SpectrumTrace::new("frequency_hz", -1e9, 2e9, vec![0.25, 1.0]).unwrap();
        write_trace(&t, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "frequency_hz,value\n-1.00000000000e9,2.50000000000e-1\n1.00000000000e9,1.00000000000e0\n");
    }

    #[test]
    fn round_trip_keeps_values_and_grid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let values: Vec<f64> = (0..1001).map(|i| (i as f64 * 0.37).sin() * 1e-3 + 1.0 / 3.0).collect();
        let t = SpectrumTrace::sample("frequency_hz", -6e9, 8e9, values.len(), |f| (f * 1e-9).cos() / 7.0).unwrap();
        let t = SpectrumTrace { values, ..t };
        write_trace(&t, &path).unwrap();
        let (axis, xs, vs) = read_trace(&path).unwrap();
        assert_eq!(axis, "frequency_hz");
        for (i, (&x, &v)) in xs.iter().zip(&vs).enumerate() {
            assert!((v - t.values[i]).abs() <= 1e-11 * t.values[i].abs());
            let x0 = t.axis_value(i);
            assert!((x - x0).abs() <= 1e-11 * x0.abs().max(t.step));
        }
        // Each axis value carries up to 5e-12 relative rounding.
        let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for w in xs.windows(2) {
            assert!(((w[1] - w[0]) - t.step).abs() <= 1e-11 * scale);
        }
    }

    #[test]
    fn special_values_are_written_readably() {
        assert_eq!(format_value(0.0), "0.00000000000e0");
        assert_eq!(format_value(f64::INFINITY), "inf");
        assert_eq!("inf".parse::<f64>().unwrap(), f64::INFINITY);
    }
}
