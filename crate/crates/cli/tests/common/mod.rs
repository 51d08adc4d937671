//! Shared helpers for the integration and acceptance suites: deterministic
//! synthetic test images with the texture/edge mix the denoisers are judged
//! on, plus small conveniences.

use glad_core::Grid;

/// Ridge pattern covering the whole field, fingerprint-like: concentric
/// waves with an angular wobble. Texture-dominated, the regime where
/// edge-preserving denoisers separate.
pub fn fingerprint(n: usize) -> Grid {
    let nf = n as f64;
    Grid::from_fn(n, n, 1.0, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let r = (xf - nf * 0.45).hypot(yf - nf * 0.55);
        let theta = (yf - nf * 0.45).atan2(xf - nf * 0.55);
        let phase = 2.0 * std::f64::consts::PI * r / 11.0 + 2.5 * (3.0 * theta).sin();
        (128.0 + 70.0 * phase.sin()).clamp(0.0, 255.0)
    })
}

/// Four quadrants of oriented stripe textures plus one flat disc.
pub fn stripes(n: usize) -> Grid {
    let nf = n as f64;
    let q = n / 2;
    let tau = 2.0 * std::f64::consts::PI;
    Grid::from_fn(n, n, 1.0, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        if (xf - nf * 0.5).hypot(yf - nf * 0.5) < nf * 0.08 {
            return 210.0;
        }
        let v = match (x < q, y < q) {
            (true, true) => (tau * xf / 10.0).sin(),
            (false, true) => (tau * (xf + yf) / 13.0).sin(),
            (true, false) => (tau * (yf - 0.5 * xf) / 9.0).sin(),
            (false, false) => (tau * yf / 11.0).sin() * (tau * xf / 11.0).sin(),
        };
        (128.0 + 60.0 * v).clamp(0.0, 255.0)
    })
}

/// Piecewise-smooth phantom: ramp background, flat shapes, two stripe
/// patches. Closer to classic test charts than the texture fields above.
pub fn shapes(n: usize) -> Grid {
    let nf = n as f64;
    let tau = 2.0 * std::f64::consts::PI;
    Grid::from_fn(n, n, 1.0, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let mut v = 90.0 + 60.0 * xf / nf;
        if (xf - nf * 0.3).hypot(yf - nf * 0.3) < nf * 0.18 {
            v = 200.0;
        }
        if (xf - nf * 0.72).abs() < nf * 0.12 && (yf - nf * 0.25).abs() < nf * 0.12 {
            v = 40.0;
        }
        if yf > nf * 0.55 && xf < nf * 0.45 {
            v = 128.0 + 55.0 * (tau * (xf + yf) / 12.0).sin();
        }
        if yf > nf * 0.55 && xf > nf * 0.55 {
            v = 128.0 + 45.0 * (tau * xf / 7.0).sin();
        }
        v.clamp(0.0, 255.0)
    })
}
