//! Grünwald-Letnikov coefficients, one-sided G2 sums, and the symmetric
//! two-sided kernel used by the diffusion solver.
//!
//! The two-sided derivative of order `alpha` is the average of the left- and
//! right-sided derivatives. Each side is approximated by the second-order G2
//! scheme: the plain GL sum with weights `w_k`, where every history sample is
//! replaced by a three-point interpolation toward the shifted node
//! `x - (k - alpha/2) h`. Truncating both sums after `n_mem - 2` terms
//! (the Short Memory Principle) and collecting the averaged stencil yields a
//! symmetric kernel `C_0 .. C_{n_mem-2}`:
//!
//! ```text
//! D^a f(x) ~= h^-a ( C_0 f(x) + sum_j C_j (f(x - j h) + f(x + j h)) )
//! ```

use crate::error::{CoreError, Result};
use crate::gamma::gamma;

/// One-sided Grünwald-Letnikov coefficient sequence `w_0 .. w_{K-1}`.
///
/// `w_k = (-1)^k C(alpha, k)`; computed by the multiplicative recurrence
/// `w_0 = 1`, `w_k = w_{k-1} (k - 1 - alpha) / k`, which stays stable where
/// direct Gamma-ratio evaluation overflows and cancels.
#[derive(Debug, Clone, PartialEq)]
pub struct GLKernel {
    alpha: f64,
    weights: Vec<f64>,
}

impl GLKernel {
    pub fn new(alpha: f64, count: usize) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(CoreError::InvalidArgument(format!(
                "GL order must be positive, got {alpha}"
            )));
        }
        if count == 0 {
            return Err(CoreError::InvalidArgument(
                "coefficient count must be at least 1".into(),
            ));
        }
        let mut weights = Vec::with_capacity(count);
        weights.push(1.0);
        for k in 1..count {
            let prev = weights[k - 1];
            weights.push(prev * (k as f64 - 1.0 - alpha) / k as f64);
        }
        Ok(Self { alpha, weights })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Convenience wrapper for [`GLKernel::new`] returning the bare weights.
pub fn gl_coefficients(alpha: f64, count: usize) -> Result<Vec<f64>> {
    GLKernel::new(alpha, count).map(|k| k.weights)
}

/// Which side of the evaluation point a one-sided sum reaches into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// History at `x - k h` (backward).
    Left,
    /// History at `x + k h` (forward).
    Right,
}

// G2 interpolation factors: term k touches the nodes at offsets k-1, k, k+1
// with weights A, B, C (A on the node nearer the evaluation point).
fn g2_factors(alpha: f64) -> (f64, f64, f64) {
    let a2 = alpha * alpha;
    (
        alpha / 4.0 + a2 / 8.0,
        1.0 - a2 / 4.0,
        a2 / 8.0 - alpha / 4.0,
    )
}

fn check_order(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(CoreError::InvalidArgument(format!(
            "fractional order must lie in (0, 2], got {alpha}"
        )));
    }
    Ok(())
}

/// Truncated one-sided G2 sum applied to a padded signal.
///
/// The caller supplies `n_terms` samples of padding on both ends; the output
/// covers only the unpadded interior, `signal.len() - 2 * n_terms` values.
/// This is the building block the two-sided kernel is validated against, and
/// it is what the truncation-error tests drive directly.
pub fn one_sided_g2(
    signal: &[f64],
    alpha: f64,
    n_terms: usize,
    side: Side,
    h: f64,
) -> Result<Vec<f64>> {
    check_order(alpha)?;
    if n_terms < 3 {
        return Err(CoreError::InvalidArgument(format!(
            "G2 sum needs at least 3 terms, got {n_terms}"
        )));
    }
    if !(h > 0.0) {
        return Err(CoreError::InvalidArgument(format!(
            "spatial step must be positive, got {h}"
        )));
    }
    if signal.len() < 2 * n_terms + 1 {
        return Err(CoreError::InvalidArgument(format!(
            "signal of length {} is shorter than the stencil support {}",
            signal.len(),
            2 * n_terms + 1
        )));
    }
    let w = GLKernel::new(alpha, n_terms)?;
    let (fa, fb, fc) = g2_factors(alpha);
    let scale = h.powf(-alpha);
    let dir: isize = match side {
        Side::Left => 1,
        Side::Right => -1,
    };
    let out_len = signal.len() - 2 * n_terms;
    let mut out = Vec::with_capacity(out_len);
    for i in 0..out_len {
        let p = (i + n_terms) as isize;
        let mut acc = 0.0;
        for (k, &wk) in w.weights().iter().enumerate() {
            let k = k as isize;
            let near = signal[(p - dir * (k - 1)) as usize];
            let at = signal[(p - dir * k) as usize];
            let far = signal[(p - dir * (k + 1)) as usize];
            acc += wk * (fa * near + fb * at + fc * far);
        }
        out.push(acc * scale);
    }
    Ok(out)
}

/// Symmetric two-sided G2 kernel `C_0 .. C_{n_mem - 2}` at fixed memory
/// length `n_mem` (the retained points per side; memory length `a = n_mem h`).
///
/// The constructor evaluates the closed-form coefficients and then replays
/// the averaged one-sided sums against a discrete impulse; any disagreement
/// beyond 1e-9 aborts construction, so a transcription slip in either path
/// cannot reach the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSidedKernel {
    alpha: f64,
    n_mem: usize,
    h: f64,
    coeffs: Vec<f64>,
}

impl TwoSidedKernel {
    pub fn new(alpha: f64, n_mem: usize, h: f64) -> Result<Self> {
        check_order(alpha)?;
        if n_mem < 5 {
            return Err(CoreError::InvalidArgument(format!(
                "memory length must be at least 5, got {n_mem}"
            )));
        }
        if !(h > 0.0) {
            return Err(CoreError::InvalidArgument(format!(
                "spatial step must be positive, got {h}"
            )));
        }
        let coeffs = closed_form_coeffs(alpha, n_mem)?;
        let oracle = impulse_response_coeffs(alpha, n_mem)?;
        for (index, (&closed, &oracle)) in coeffs.iter().zip(oracle.iter()).enumerate() {
            if (closed - oracle).abs() > 1e-9 {
                return Err(CoreError::KernelMismatch {
                    index,
                    closed,
                    oracle,
                });
            }
        }
        Ok(Self {
            alpha,
            n_mem,
            h,
            coeffs,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n_mem(&self) -> usize {
        self.n_mem
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `C_0 .. C_{n_mem - 2}`, unscaled (`h^-alpha` is applied on use).
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Padding required on each side of a signal before application.
    pub fn margin(&self) -> usize {
        self.n_mem - 1
    }

    /// Sum of absolute stencil weights, `|C_0| + 2 sum_j |C_j|`.
    pub fn stencil_l1(&self) -> f64 {
        self.coeffs[0].abs() + 2.0 * self.coeffs[1..].iter().map(|c| c.abs()).sum::<f64>()
    }

    /// Signed stencil sum; the truncation residual a constant signal sees
    /// (exact GL sums of a constant vanish, truncated ones do not).
    pub fn stencil_sum(&self) -> f64 {
        self.coeffs[0] + 2.0 * self.coeffs[1..].iter().sum::<f64>()
    }
}

// Closed forms of the averaged stencil. With A, B, C the G2 factors and w_k
// the GL coefficients truncated at k = n_mem - 3:
//   C_0     = B + w_1 A                      = 1 - a^2/2 - a^3/8
//   C_1     = A/2 + (w_2 A + w_1 B + w_0 C)/2
//   C_j     = (w_{j+1} A + w_j B + w_{j-1} C)/2        2 <= j <= n_mem-4
//   C_{n-3} = (w_{n-3} B + w_{n-4} C)/2
//   C_{n-2} = (w_{n-3} C)/2
fn closed_form_coeffs(alpha: f64, n_mem: usize) -> Result<Vec<f64>> {
    let (fa, fb, fc) = g2_factors(alpha);
    let w = GLKernel::new(alpha, n_mem - 2)?;
    let w = w.weights();
    let n = n_mem;
    let mut c = vec![0.0; n - 1];
    c[0] = 1.0 - alpha * alpha / 2.0 - alpha * alpha * alpha / 8.0;
    c[1] = fa / 2.0 + 0.5 * (w[2] * fa + w[1] * fb + w[0] * fc);
    for j in 2..n - 3 {
        c[j] = 0.5 * (w[j + 1] * fa + w[j] * fb + w[j - 1] * fc);
    }
    c[n - 3] = 0.5 * (w[n - 3] * fb + w[n - 4] * fc);
    c[n - 2] = 0.5 * (w[n - 3] * fc);
    Ok(c)
}

// Brute-force path: average the two one-sided G2 sums over a discrete delta
// and read the stencil off the response. Shares nothing with the closed
// forms except the GL recurrence.
fn impulse_response_coeffs(alpha: f64, n_mem: usize) -> Result<Vec<f64>> {
    let n_terms = n_mem - 2;
    let len = 6 * n_mem + 1;
    let mut delta = vec![0.0; len];
    let center = len / 2;
    delta[center] = 1.0;
    let left = one_sided_g2(&delta, alpha, n_terms, Side::Left, 1.0)?;
    let right = one_sided_g2(&delta, alpha, n_terms, Side::Right, 1.0)?;
    let out_center = center - n_terms;
    let response: Vec<f64> = left
        .iter()
        .zip(right.iter())
        .map(|(l, r)| 0.5 * (l + r))
        .collect();
    // Response at offset -j from the impulse is the stencil weight at +j.
    let mut c = vec![0.0; n_mem - 1];
    for (j, cj) in c.iter_mut().enumerate() {
        *cj = response[out_center - j];
    }
    Ok(c)
}

/// Apply a two-sided kernel to a padded 1D signal.
///
/// The caller supplies `kernel.margin()` samples of padding on each end; the
/// output covers the unpadded interior.
pub fn apply_frac_derivative_1d(signal: &[f64], kernel: &TwoSidedKernel) -> Result<Vec<f64>> {
    let margin = kernel.margin();
    if signal.len() < 2 * margin + 1 {
        return Err(CoreError::InvalidArgument(format!(
            "signal of length {} is shorter than the stencil support {}",
            signal.len(),
            2 * margin + 1
        )));
    }
    let scale = kernel.h.powf(-kernel.alpha);
    let c = &kernel.coeffs;
    let out_len = signal.len() - 2 * margin;
    let mut out = Vec::with_capacity(out_len);
    for i in 0..out_len {
        let p = i + margin;
        let mut acc = c[0] * signal[p];
        for (j, &cj) in c.iter().enumerate().skip(1) {
            acc += cj * (signal[p - j] + signal[p + j]);
        }
        out.push(acc * scale);
    }
    Ok(out)
}

/// Truncation error bound of the Short Memory Principle:
/// `M a^-alpha / |Gamma(1 - alpha)|` for `sup|f| = M` and memory length `a`.
pub fn short_memory_bound(sup_f: f64, mem_len: f64, alpha: f64) -> Result<f64> {
    if !(sup_f >= 0.0) {
        return Err(CoreError::InvalidArgument(format!(
            "supremum must be non-negative, got {sup_f}"
        )));
    }
    if !(mem_len > 0.0) {
        return Err(CoreError::InvalidArgument(format!(
            "memory length must be positive, got {mem_len}"
        )));
    }
    if !(alpha > 0.0) || alpha.fract() == 0.0 {
        // Gamma(1 - alpha) has poles at non-negative integer orders.
        return Err(CoreError::InvalidArgument(format!(
            "order must be positive and non-integer, got {alpha}"
        )));
    }
    Ok(sup_f * mem_len.powf(-alpha) / gamma(1.0 - alpha).abs())
}

/// Magnitude of the `(i w)^alpha` frequency-response factor: `w^alpha`.
pub fn amplitude_response(alpha: f64, omega: f64) -> f64 {
    omega.powf(alpha)
}

/// Coefficient dump: header line then one value per line, 17 significant
/// digits. Shared by the GL and two-sided kernel dumps.
pub fn dump_coefficients(alpha: f64, n: usize, h: f64, coeffs: &[f64]) -> String {
    let mut s = format!("# alpha={alpha} N={n} h={h}\n");
    for c in coeffs {
        s.push_str(&format!("{c:.16e}\n"));
    }
    s
}

impl TwoSidedKernel {
    pub fn dump_text(&self) -> String {
        dump_coefficients(self.alpha, self.n_mem, self.h, &self.coeffs)
    }
}
