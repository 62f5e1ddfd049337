//! Uniformly sampled traces.

use serde::Serialize;

use crate::{Error, Result};

/// `n` evenly spaced points covering `[start, stop]` inclusive.
pub fn uniform_grid(start: f64, stop: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidGrid(format!("need at least 2 points, got {n}")));
    }
    if !(start.is_finite() && stop.is_finite()) || !(stop > start) {
        return Err(Error::InvalidGrid(format!("bad range [{start}, {stop}]")));
    }
    let step = (stop - start) / (n - 1) as f64;
    Ok((0..n).map(|i| start + step * i as f64).collect())
}

/// A trace sampled on a uniform axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumTrace {
    /// Axis name used as the CSV header, e.g. `frequency_hz`.
    pub axis: String,
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl SpectrumTrace {
    pub fn new(axis: impl Into<String>, start: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0) || !start.is_finite() {
            return Err(Error::InvalidGrid(format!("start {start}, step {step}")));
        }
        if values.is_empty() {
            return Err(Error::InvalidGrid("empty trace".into()));
        }
        Ok(SpectrumTrace { axis: axis.into(), start, step, values })
    }

    /// Builds a trace by evaluating `f` on [`uniform_grid`].
    pub fn sample<F>(axis: &str, start: f64, stop: f64, n: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Sync,
    {
        use rayon::prelude::*;
        let grid = uniform_grid(start, stop, n)?;
        let values = grid.par_iter().map(|&x| f(x)).collect();
        SpectrumTrace::new(axis, start, grid[1] - grid[0], values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn axis_value(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (self.axis_value(i), v))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Indices of strict local maxima above `threshold`.
    pub fn local_maxima(&self, threshold: f64) -> Vec<usize> {
        let v = &self.values;
        (1..v.len().saturating_sub(1))
            .filter(|&i| v[i] > threshold && v[i] > v[i - 1] && v[i] >= v[i + 1])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_are_exact() {
        let g = uniform_grid(-9e9, 9e9, 7201).unwrap();
        assert_eq!(g.len(), 7201);
        assert_eq!(g[0], -9e9);
        assert!((g[7200] - 9e9).abs() < 1e-3);
        assert!((g[1] - g[0] - 2.5e6).abs() < 1e-6);
    }

    #[test]
    fn grid_rejects_degenerate_input() {
        assert!(uniform_grid(0.0, 1.0, 1).is_err());
        assert!(uniform_grid(1.0, 0.0, 10).is_err());
        assert!(uniform_grid(0.0, f64::NAN, 10).is_err());
    }

    #[test]
    fn local_maxima_finds_peaks() {
        let t = SpectrumTrace::new("x", 0.0, 1.0, vec![0.0, 1.0, 0.0, 0.5, 2.0, 1.0]).unwrap();
        assert_eq!(t.local_maxima(0.1), vec![1, 4]);
        assert_eq!(t.local_maxima(1.5), vec![4]);
    }
}
