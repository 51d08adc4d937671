//! Image quality metrics (MSE, PSNR, SSIM) and reproducible additive
//! Gaussian white noise.
//!
//! Noise generator: each pixel draws its own pair of uniforms from a
//! SplitMix64 sequence indexed by pixel position (`state = seed + k * gamma`
//! for the k-th output, evaluated directly at `k = 2 i + 1, 2 i + 2` for
//! pixel `i`) and maps them through Box-Muller. Every sample is a pure
//! function of `(seed, pixel index)`, so realizations are identical across
//! platforms, runs, and any evaluation order.

use crate::error::{CoreError, Result};
use crate::field::Grid;

/// Peak intensity of 8-bit images, `2^8 - 1`.
pub const PEAK: f64 = 255.0;

const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

/// Additive Gaussian white-noise parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Standard deviation in intensity units.
    pub sigma: f64,
    pub seed: u64,
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

// SplitMix64 output mix.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Standard normal deviate for one pixel; pure in `(seed, index)`.
fn normal_at(seed: u64, index: u64) -> f64 {
    let s1 = seed.wrapping_add((2 * index + 1).wrapping_mul(GOLDEN));
    let s2 = seed.wrapping_add((2 * index + 2).wrapping_mul(GOLDEN));
    // 53-bit uniforms; u1 shifted into (0, 1] so the log is always finite
    let u1 = ((mix(s1) >> 11) + 1) as f64 * (1.0 / 9007199254740992.0);
    let u2 = (mix(s2) >> 11) as f64 * (1.0 / 9007199254740992.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// `u + N(0, sigma^2)` i.i.d. per pixel. The output is deliberately not
/// clamped; denoisers see the raw corruption and clamping happens only when
/// an 8-bit file is written.
pub fn add_gaussian_noise(u: &Grid, spec: &NoiseSpec) -> Grid {
    let w = u.width() as u64;
    Grid::from_fn(u.width(), u.height(), u.h(), |x, y| {
        let index = y as u64 * w + x as u64;
        u.get(x, y) + spec.sigma * normal_at(spec.seed, index)
    })
}

/// Mean squared pixel difference.
pub fn mse(u: &Grid, u_star: &Grid) -> Result<f64> {
    if !u.same_shape(u_star) {
        return Err(CoreError::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            u.width(),
            u.height(),
            u_star.width(),
            u_star.height()
        )));
    }
    let sum: f64 = u
        .data()
        .iter()
        .zip(u_star.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / u.data().len() as f64)
}

/// `10 log10(255^2 / MSE)` in dB; identical images yield `+inf`.
pub fn psnr(u: &Grid, u_star: &Grid) -> Result<f64> {
    let m = mse(u, u_star)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (PEAK * PEAK / m).log10())
}

/// Which statistics window the SSIM uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SsimMode {
    /// Single set of whole-image statistics.
    #[default]
    Global,
    /// Mean of the index over all 8x8 sliding windows.
    Windowed8,
}

fn ssim_stats(u: &[f64], v: &[f64]) -> f64 {
    let n = u.len() as f64;
    let mu_u = u.iter().sum::<f64>() / n;
    let mu_v = v.iter().sum::<f64>() / n;
    let mut var_u = 0.0;
    let mut var_v = 0.0;
    let mut cov = 0.0;
    for (&a, &b) in u.iter().zip(v) {
        let da = a - mu_u;
        let db = b - mu_v;
        var_u += da * da;
        var_v += db * db;
        cov += da * db;
    }
    var_u /= n;
    var_v /= n;
    cov /= n;
    let c1 = (SSIM_K1 * PEAK) * (SSIM_K1 * PEAK);
    let c2 = (SSIM_K2 * PEAK) * (SSIM_K2 * PEAK);
    ((2.0 * mu_u * mu_v + c1) * (2.0 * cov + c2))
        / ((mu_u * mu_u + mu_v * mu_v + c1) * (var_u + var_v + c2))
}

/// Structural similarity with stabilizers `c1 = (0.01 * 255)^2`,
/// `c2 = (0.03 * 255)^2`.
pub fn ssim(u: &Grid, u_star: &Grid, mode: SsimMode) -> Result<f64> {
    if !u.same_shape(u_star) {
        return Err(CoreError::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            u.width(),
            u.height(),
            u_star.width(),
            u_star.height()
        )));
    }
    match mode {
        SsimMode::Global => Ok(ssim_stats(u.data(), u_star.data())),
        SsimMode::Windowed8 => {
            const W: usize = 8;
            if u.width() < W || u.height() < W {
                return Err(CoreError::InvalidArgument(format!(
                    "windowed SSIM needs at least {W}x{W} pixels, got {}x{}",
                    u.width(),
                    u.height()
                )));
            }
            let mut wu = [0.0; W * W];
            let mut wv = [0.0; W * W];
            let mut total = 0.0;
            let mut count = 0usize;
            for y0 in 0..=u.height() - W {
                for x0 in 0..=u.width() - W {
                    let mut n = 0;
                    for y in y0..y0 + W {
                        for x in x0..x0 + W {
                            wu[n] = u.get(x, y);
                            wv[n] = u_star.get(x, y);
                            n += 1;
                        }
                    }
                    total += ssim_stats(&wu, &wv);
                    count += 1;
                }
            }
            Ok(total / count as f64)
        }
    }
}

/// One evaluation of a processed image against its reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub mse: f64,
    pub psnr_db: f64,
    pub ssim: f64,
}

impl QualityReport {
    pub fn on(u: &Grid, u_star: &Grid, mode: SsimMode) -> Result<Self> {
        Ok(Self {
            mse: mse(u, u_star)?,
            psnr_db: psnr(u, u_star)?,
            ssim: ssim(u, u_star, mode)?,
        })
    }

    pub const CSV_HEADER: &'static str = "image,method,sigma,step,psnr_db,ssim,mse";

    pub fn csv_row(&self, image: &str, method: &str, sigma: f64, step: usize) -> String {
        format!(
            "{image},{method},{sigma},{step},{:.4},{:.6},{:.6}",
            self.psnr_db, self.ssim, self.mse
        )
    }
}
