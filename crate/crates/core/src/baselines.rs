//! Classical reference filters for the benchmark harness: separable Gaussian
//! convolution and square-window median filtering, both reflect-padded.

use crate::error::{CoreError, Result};
use crate::field::{pad_reflect, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    Gaussian,
    Median,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    pub kind: FilterKind,
    /// Window radius in pixels; the window spans `2 radius + 1`.
    pub radius: usize,
    /// Spatial standard deviation; Gaussian only.
    pub sigma: f64,
}

impl FilterSpec {
    pub fn gaussian(radius: usize, sigma: f64) -> Result<Self> {
        if radius == 0 {
            return Err(CoreError::InvalidArgument("radius must be at least 1".into()));
        }
        if !(sigma > 0.0) {
            return Err(CoreError::InvalidArgument(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        Ok(Self {
            kind: FilterKind::Gaussian,
            radius,
            sigma,
        })
    }

    pub fn median(radius: usize) -> Result<Self> {
        if radius == 0 {
            return Err(CoreError::InvalidArgument("radius must be at least 1".into()));
        }
        Ok(Self {
            kind: FilterKind::Median,
            radius,
            sigma: 0.0,
        })
    }

    /// Normalized 1D weights `w_i  ~ exp(-i^2 / (2 sigma^2))`, `i` in
    /// `[-radius, radius]`.
    pub fn gaussian_weights(&self) -> Vec<f64> {
        let r = self.radius as isize;
        let mut w: Vec<f64> = (-r..=r)
            .map(|i| (-((i * i) as f64) / (2.0 * self.sigma * self.sigma)).exp())
            .collect();
        let sum: f64 = w.iter().sum();
        for v in &mut w {
            *v /= sum;
        }
        w
    }
}

/// Separable Gaussian convolution with reflect padding.
pub fn gaussian_filter(u: &Grid, spec: &FilterSpec) -> Result<Grid> {
    if spec.kind != FilterKind::Gaussian {
        return Err(CoreError::InvalidArgument(
            "gaussian_filter needs a gaussian FilterSpec".into(),
        ));
    }
    let w = spec.gaussian_weights();
    let r = spec.radius;
    let padded = pad_reflect(u, r);
    let rows = Grid::from_fn(u.width(), u.height(), u.h(), |x, y| {
        w.iter()
            .enumerate()
            .map(|(i, &wi)| wi * padded.get(x + i, y + r))
            .sum()
    });
    let padded = pad_reflect(&rows, r);
    Ok(Grid::from_fn(u.width(), u.height(), u.h(), |x, y| {
        w.iter()
            .enumerate()
            .map(|(i, &wi)| wi * padded.get(x + r, y + i))
            .sum()
    }))
}

/// Median of the `(2 radius + 1)^2` reflect-padded neighborhood. The window
/// holds an odd count, so the median is always a member of the input values.
pub fn median_filter(u: &Grid, spec: &FilterSpec) -> Result<Grid> {
    if spec.kind != FilterKind::Median {
        return Err(CoreError::InvalidArgument(
            "median_filter needs a median FilterSpec".into(),
        ));
    }
    let r = spec.radius;
    let padded = pad_reflect(u, r);
    let side = 2 * r + 1;
    let mut window = vec![0.0; side * side];
    let mut out = Grid::zeros(u.width(), u.height(), u.h());
    for y in 0..u.height() {
        for x in 0..u.width() {
            let mut n = 0;
            for wy in 0..side {
                for wx in 0..side {
                    window[n] = padded.get(x + wx, y + wy);
                    n += 1;
                }
            }
            window.sort_by(f64::total_cmp);
            out.set(x, y, window[window.len() / 2]);
        }
    }
    Ok(out)
}
