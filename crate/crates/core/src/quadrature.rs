//! Numerical integration helpers.

use crate::error::{Error, Result};

// 10-point Gauss-Legendre nodes and weights on [-1, 1].
const GL_NODES: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_4,
    0.219_086_362_515_982_0,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// Fixed 10-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = 0.0;
    for i in 0..5 {
        let dx = half * GL_NODES[i];
        sum += GL_WEIGHTS[i] * (f(mid - dx) + f(mid + dx));
    }
    sum * half
}

/// Composite Gauss-Legendre over `pieces` equal panels.
pub fn gauss_legendre_composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, pieces: usize) -> f64 {
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| gauss_legendre(&f, a + i as f64 * h, a + (i + 1) as f64 * h))
        .sum()
}

/// Adaptive Gauss-Legendre: bisect panels until halves agree with the whole to `abs_tol`.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> Result<f64> {
        let m = 0.5 * (a + b);
        let left = gauss_legendre(f, a, m);
        let right = gauss_legendre(f, m, b);
        let err = (left + right - whole).abs();
        if err <= tol || (b - a) < 1e-14 * (1.0 + a.abs()) {
            return Ok(left + right);
        }
        if depth == 0 {
            return Err(Error::QuadratureFailure);
        }
        Ok(recurse(f, a, m, left, tol / 2.0, depth - 1)? + recurse(f, m, b, right, tol / 2.0, depth - 1)?)
    }
    if a == b {
        return Ok(0.0);
    }
    let whole = gauss_legendre(&f, a, b);
    recurse(&f, a, b, whole, abs_tol, 40)
}
