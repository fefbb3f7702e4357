//! Finite von Mises mixtures fitted by EM, used as the reference density for
//! the plug-in concentration.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::circular::{reduce, CircularSample};
use crate::error::{Error, Result};
use crate::special::{bessel_i_scaled, inverse_mean_resultant};

pub const KAPPA_MAX: f64 = 1e4;
const MIN_WEIGHT: f64 = 1e-4;
const EM_ITERATIONS: usize = 200;
const EM_TOLERANCE: f64 = 1e-8;

/// Von Mises density with mean `mu` and concentration `kappa`.
pub fn vm_density(theta: f64, mu: f64, kappa: f64) -> f64 {
    (kappa * ((theta - mu).cos() - 1.0)).exp() / (TAU * bessel_i_scaled(0, kappa))
}

/// Fourth derivative of the von Mises density.
pub fn vm_fourth_derivative(theta: f64, mu: f64, kappa: f64) -> f64 {
    let (s, c) = (theta - mu).sin_cos();
    let k = kappa;
    let poly = k * c + 3.0 * k * k * c * c - 4.0 * k * k * s * s - 6.0 * k.powi(3) * s * s * c + k.powi(4) * s.powi(4);
    poly * vm_density(theta, mu, kappa)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VonMisesMixture {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub kappas: Vec<f64>,
    pub log_likelihood: f64,
}

impl VonMisesMixture {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn density(&self, theta: f64) -> f64 {
        self.iter().map(|(w, m, k)| w * vm_density(theta, m, k)).sum()
    }

    pub fn fourth_derivative(&self, theta: f64) -> f64 {
        self.iter().map(|(w, m, k)| w * vm_fourth_derivative(theta, m, k)).sum()
    }

    /// `∫ (f⁽⁴⁾)²` by the trapezoid rule on `points` nodes.
    pub fn roughness_fourth(&self, points: usize) -> f64 {
        let h = TAU / points as f64;
        (0..points).map(|i| self.fourth_derivative(i as f64 * h).powi(2)).sum::<f64>() * h
    }

    pub fn aic(&self) -> f64 {
        2.0 * (3 * self.components() - 1) as f64 - 2.0 * self.log_likelihood
    }

    fn iter(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.kappas)
            .map(|((&w, &m), &k)| (w, m, k))
    }
}

/// Fit mixtures with `1..=max_components` components and keep the lowest AIC.
/// Fits that degenerate are skipped; a single component always succeeds.
pub fn fit_vm_mixture(sample: &CircularSample, max_components: usize) -> Result<VonMisesMixture> {
    if max_components == 0 {
        return Err(Error::InvalidArgument("max_components must be >= 1".into()));
    }
    let mut best: Option<VonMisesMixture> = None;
    for m in 1..=max_components.min(sample.len()) {
        match fit_fixed(sample, m) {
            Ok(fit) => {
                if best.as_ref().map_or(true, |b| fit.aic() < b.aic()) {
                    best = Some(fit);
                }
            }
            Err(e) => log::debug!("mixture with {m} components skipped: {e}"),
        }
    }
    best.ok_or_else(|| Error::FitFailure("no mixture could be fitted".into()))
}

/// EM for a fixed number of components.
pub fn fit_fixed(sample: &CircularSample, m: usize) -> Result<VonMisesMixture> {
    let x = sample.angles();
    let n = x.len();
    if m == 0 || m > n {
        return Err(Error::FitFailure(format!("cannot fit {m} components to {n} points")));
    }
    let labels = circular_kmeans(sample, m);
    let mut resp = vec![0.0; n * m];
    for (i, &l) in labels.iter().enumerate() {
        resp[i * m + l] = 1.0;
    }
    let mut mix = m_step(x, &resp, m)?;
    let mut prev = f64::NEG_INFINITY;
    for _ in 0..EM_ITERATIONS {
        let ll = e_step(x, &mix, &mut resp);
        mix.log_likelihood = ll;
        if (ll - prev).abs() < EM_TOLERANCE {
            break;
        }
        prev = ll;
        let ll_keep = ll;
        mix = m_step(x, &resp, m)?;
        mix.log_likelihood = ll_keep;
    }
    mix.log_likelihood = e_step(x, &mix, &mut resp);
    Ok(mix)
}

fn e_step(x: &[f64], mix: &VonMisesMixture, resp: &mut [f64]) -> f64 {
    let m = mix.components();
    let mut ll = 0.0;
    let log_norm: Vec<f64> = mix
        .iter()
        .map(|(w, _, k)| w.ln() - (TAU * bessel_i_scaled(0, k)).ln())
        .collect();
    for (i, &t) in x.iter().enumerate() {
        let row = &mut resp[i * m..(i + 1) * m];
        let mut top = f64::NEG_INFINITY;
        for (j, (_, mu, k)) in mix.iter().enumerate() {
            row[j] = log_norm[j] + k * ((t - mu).cos() - 1.0);
            top = top.max(row[j]);
        }
        let mut total = 0.0;
        for r in row.iter_mut() {
            *r = (*r - top).exp();
            total += *r;
        }
        row.iter_mut().for_each(|r| *r /= total);
        ll += top + total.ln();
    }
    ll
}

fn m_step(x: &[f64], resp: &[f64], m: usize) -> Result<VonMisesMixture> {
    let n = x.len();
    let mut weights = Vec::with_capacity(m);
    let mut means = Vec::with_capacity(m);
    let mut kappas = Vec::with_capacity(m);
    for j in 0..m {
        let (mut w, mut c, mut s) = (0.0, 0.0, 0.0);
        for (i, &t) in x.iter().enumerate() {
            let r = resp[i * m + j];
            w += r;
            c += r * t.cos();
            s += r * t.sin();
        }
        let weight = w / n as f64;
        if m > 1 && weight < MIN_WEIGHT {
            return Err(Error::FitFailure(format!("component {j} weight collapsed")));
        }
        let rbar = (c * c + s * s).sqrt() / w;
        let mut kappa = inverse_mean_resultant(rbar.min(1.0));
        if !kappa.is_finite() || kappa > KAPPA_MAX {
            if m > 1 {
                return Err(Error::FitFailure(format!("component {j} concentration diverged")));
            }
            kappa = KAPPA_MAX;
        }
        weights.push(weight);
        means.push(reduce(s.atan2(c)));
        kappas.push(kappa.max(0.0));
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(VonMisesMixture { weights, means, kappas, log_likelihood: f64::NEG_INFINITY })
}

/// Lloyd iterations on the circle from quantile-spaced starting centres.
fn circular_kmeans(sample: &CircularSample, m: usize) -> Vec<usize> {
    let sorted = sample.sorted();
    let n = sorted.len();
    let mut centres: Vec<f64> = (0..m).map(|j| sorted[((2 * j + 1) * n) / (2 * m)]).collect();
    let x = sample.angles();
    let mut labels = vec![0usize; n];
    for _ in 0..50 {
        let mut changed = false;
        for (i, &t) in x.iter().enumerate() {
            let best = (0..m)
                .min_by(|&a, &b| dist(t, centres[a]).total_cmp(&dist(t, centres[b])))
                .unwrap_or(0);
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        for (j, centre) in centres.iter_mut().enumerate() {
            let (mut c, mut s) = (0.0, 0.0);
            for (i, &t) in x.iter().enumerate() {
                if labels[i] == j {
                    c += t.cos();
                    s += t.sin();
                }
            }
            if c != 0.0 || s != 0.0 {
                *centre = reduce(s.atan2(c));
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

fn dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}
