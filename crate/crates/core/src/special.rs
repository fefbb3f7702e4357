//! Modified Bessel functions and the normal distribution helpers used across the crate.

use statrs::distribution::{ContinuousCDF, Normal};

/// `I_order(x) * exp(-x)` for `order` in {0, 1} and `x >= 0`.
pub fn bessel_i_scaled(order: u32, x: f64) -> f64 {
    let x = x.abs();
    if x <= 40.0 {
        // power series; all terms positive
        let q = x * x / 4.0;
        let mut term = if order == 0 { 1.0 } else { x / 2.0 };
        let mut sum = term;
        let mut k = 1.0;
        loop {
            term *= q / (k * (k + order as f64));
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        // Hankel asymptotic expansion
        let mu = 4.0 * (order as f64).powi(2);
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..30 {
            let kf = k as f64;
            let odd = 2.0 * kf - 1.0;
            let next = -term * (mu - odd * odd) / (kf * 8.0 * x);
            if next.abs() > term.abs() {
                break;
            }
            term = next;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}

/// Mean resultant length of a von Mises distribution, `A(κ) = I1(κ)/I0(κ)`.
pub fn mean_resultant(kappa: f64) -> f64 {
    if kappa <= 0.0 {
        return 0.0;
    }
    bessel_i_scaled(1, kappa) / bessel_i_scaled(0, kappa)
}

/// Inverse of [`mean_resultant`]: the κ whose mean resultant length is `r`.
pub fn inverse_mean_resultant(r: f64) -> f64 {
    const KAPPA_MAX: f64 = 1e5;
    if r <= 0.0 {
        return 0.0;
    }
    if r >= 1.0 - 1e-12 {
        return KAPPA_MAX;
    }
    let mut k = if r < 0.53 {
        2.0 * r + r.powi(3) + 5.0 * r.powi(5) / 6.0
    } else if r < 0.85 {
        -0.4 + 1.39 * r + 0.43 / (1.0 - r)
    } else {
        1.0 / (r.powi(3) - 4.0 * r * r + 3.0 * r)
    };
    for _ in 0..50 {
        let a = mean_resultant(k);
        let da = 1.0 - a / k - a * a;
        if da <= 0.0 {
            break;
        }
        let step = (a - r) / da;
        let next = (k - step).max(k / 10.0);
        if (next - k).abs() < 1e-14 * k.max(1.0) {
            k = next;
            break;
        }
        k = next;
    }
    k.min(KAPPA_MAX)
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn norm_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

/// Upper tail `1 - Φ(x)`, accurate far into the right tail.
pub fn norm_sf(x: f64) -> f64 {
    std_normal().sf(x)
}

pub fn norm_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// Inverse of the upper tail: the `x` with `1 - Φ(x) = p`.
pub fn norm_isf(p: f64) -> f64 {
    -norm_quantile(p)
}
