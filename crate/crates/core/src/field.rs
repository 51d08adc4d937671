//! 2D scalar fields and the fractional gradient / divergence operators.
//!
//! Axis convention: `x` runs along a row (width), `y` down the columns
//! (height). `D_x` differentiates along rows, `D_y` along columns. Zero-flux
//! boundaries are realized by symmetric reflection padding with the edge
//! pixel duplicated (`[1,2,3]` padded by 2 becomes `[2,1,1,2,3,3,2]`), applied
//! before every operator evaluation.

use crate::error::{CoreError, Result};
use crate::fracops::{apply_frac_derivative_1d, TwoSidedKernel};

/// Row-major 2D scalar field. Image intensities live in `[0, 255]`; derived
/// fields (gradients, fluxes) are unrestricted.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    h: f64,
    data: Vec<f64>,
}

impl Grid {
    pub fn filled(width: usize, height: usize, h: f64, value: f64) -> Self {
        Self {
            width,
            height,
            h,
            data: vec![value; width * height],
        }
    }

    pub fn zeros(width: usize, height: usize, h: f64) -> Self {
        Self::filled(width, height, h, 0.0)
    }

    pub fn from_fn(width: usize, height: usize, h: f64, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            h,
            data,
        }
    }

    pub fn from_data(width: usize, height: usize, h: f64, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(CoreError::InvalidArgument(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            h,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid {
            width: self.width,
            height: self.height,
            h: self.h,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Grid, f: impl Fn(f64, f64) -> f64) -> Result<Grid> {
        if !self.same_shape(other) {
            return Err(CoreError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(Grid {
            width: self.width,
            height: self.height,
            h: self.h,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn transposed(&self) -> Grid {
        Grid::from_fn(self.height, self.width, self.h, |x, y| self.get(y, x))
    }

    pub fn clamped(&self, lo: f64, hi: f64) -> Grid {
        self.map(|v| v.clamp(lo, hi))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.data.iter().map(|&v| (v - m) * (v - m)).sum::<f64>() / self.data.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// First non-finite pixel, if any.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|v| !v.is_finite())
            .map(|i| (i % self.width, i / self.width))
    }

    /// Rectangular crop with origin `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, width: usize, height: usize) -> Result<Grid> {
        if width == 0 || height == 0 || x + width > self.width || y + height > self.height {
            return Err(CoreError::InvalidArgument(format!(
                "crop {width}x{height}+{x}+{y} does not fit a {}x{} grid",
                self.width, self.height
            )));
        }
        Ok(Grid::from_fn(width, height, self.h, |cx, cy| {
            self.get(x + cx, y + cy)
        }))
    }
}

/// Map an out-of-range coordinate into `[0, n)` by mirror reflection with
/// edge duplication; the fold repeats for margins wider than the grid.
#[inline]
fn reflect(mut t: isize, n: isize) -> usize {
    loop {
        if t < 0 {
            t = -t - 1;
        } else if t >= n {
            t = 2 * n - 1 - t;
        } else {
            return t as usize;
        }
    }
}

/// Symmetric reflection padding by `margin` pixels on every side.
pub fn pad_reflect(u: &Grid, margin: usize) -> Grid {
    let m = margin as isize;
    let (w, h) = (u.width as isize, u.height as isize);
    Grid::from_fn(
        u.width + 2 * margin,
        u.height + 2 * margin,
        u.h,
        |x, y| u.get(reflect(x as isize - m, w), reflect(y as isize - m, h)),
    )
}

/// A pair of equally-shaped grids holding the x and y components of a field.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub fx: Grid,
    pub fy: Grid,
}

impl VectorField {
    pub fn new(fx: Grid, fy: Grid) -> Result<Self> {
        if !fx.same_shape(&fy) {
            return Err(CoreError::DimensionMismatch(format!(
                "components {}x{} vs {}x{}",
                fx.width(),
                fx.height(),
                fy.width(),
                fy.height()
            )));
        }
        Ok(Self { fx, fy })
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> Grid {
        self.fx
            .zip_map(&self.fy, f64::hypot)
            .expect("components share a shape by construction")
    }
}

fn check_step(u: &Grid, kernel: &TwoSidedKernel) -> Result<()> {
    if (u.h - kernel.h()).abs() > 1e-12 {
        return Err(CoreError::InvalidArgument(format!(
            "grid step {} does not match kernel step {}",
            u.h,
            kernel.h()
        )));
    }
    Ok(())
}

// Derivative along rows of an already padded grid; output has the unpadded
// shape of the original.
fn derivative_rows(padded: &Grid, kernel: &TwoSidedKernel, out_w: usize, out_h: usize) -> Grid {
    let m = kernel.margin();
    let mut out = Grid::zeros(out_w, out_h, kernel.h());
    for y in 0..out_h {
        let row_start = (y + m) * padded.width;
        let row = &padded.data[row_start..row_start + padded.width];
        let d = apply_frac_derivative_1d(row, kernel)
            .expect("padded row covers the stencil support");
        out.data[y * out_w..(y + 1) * out_w].copy_from_slice(&d);
    }
    out
}

// Derivative along columns of an already padded grid.
fn derivative_cols(padded: &Grid, kernel: &TwoSidedKernel, out_w: usize, out_h: usize) -> Grid {
    let m = kernel.margin();
    let mut out = Grid::zeros(out_w, out_h, kernel.h());
    let mut column = vec![0.0; padded.height];
    for x in 0..out_w {
        for y in 0..padded.height {
            column[y] = padded.get(x + m, y);
        }
        let d = apply_frac_derivative_1d(&column, kernel)
            .expect("padded column covers the stencil support");
        for (y, &v) in d.iter().enumerate() {
            out.set(x, y, v);
        }
    }
    out
}

/// Two-sided fractional gradient `(D_x u, D_y u)`.
pub fn frac_gradient(u: &Grid, kernel: &TwoSidedKernel) -> Result<VectorField> {
    check_step(u, kernel)?;
    let padded = pad_reflect(u, kernel.margin());
    let fx = derivative_rows(&padded, kernel, u.width, u.height);
    let fy = derivative_cols(&padded, kernel, u.width, u.height);
    VectorField::new(fx, fy)
}

/// Two-sided fractional divergence `D_x f_x + D_y f_y`.
pub fn frac_divergence(v: &VectorField, kernel: &TwoSidedKernel) -> Result<Grid> {
    check_step(&v.fx, kernel)?;
    let m = kernel.margin();
    let px = pad_reflect(&v.fx, m);
    let py = pad_reflect(&v.fy, m);
    let dx = derivative_rows(&px, kernel, v.fx.width, v.fx.height);
    let dy = derivative_cols(&py, kernel, v.fy.width, v.fy.height);
    dx.zip_map(&dy, |a, b| a + b)
}

/// Pointwise magnitude of the fractional gradient, `|grad^a u|`.
pub fn gradient_magnitude(u: &Grid, kernel: &TwoSidedKernel) -> Result<Grid> {
    Ok(frac_gradient(u, kernel)?.magnitude())
}

/// Classical gradient magnitude from central differences, reflect-padded.
/// Used by the integer-order baseline and the feature-map comparison.
pub fn central_gradient_magnitude(u: &Grid) -> Grid {
    let p = pad_reflect(u, 1);
    let scale = 1.0 / (2.0 * u.h);
    Grid::from_fn(u.width, u.height, u.h, |x, y| {
        let gx = (p.get(x + 2, y + 1) - p.get(x, y + 1)) * scale;
        let gy = (p.get(x + 1, y + 2) - p.get(x + 1, y)) * scale;
        gx.hypot(gy)
    })
}
