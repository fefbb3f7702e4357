//! Concentration selection: the critical concentration `ν_k` (largest `ν` at
//! which the kernel estimate has at most `k` modes) and a plug-in
//! concentration for estimating second derivatives.
//!
//! The plug-in rule treats the wrapped-normal kernel as a Gaussian with
//! bandwidth `h = √(−2 ln ν)` and minimises
//!
//! ```text
//! AMISE(h) = 3 / (8√π n h⁵) + h⁴/4 · ∫ (f⁽⁴⁾)²
//! ```
//!
//! with `∫ (f⁽⁴⁾)²` taken from a von Mises mixture fitted by EM and chosen by
//! AIC. Both the AMISE form and the AIC rule are implementation choices.

use std::sync::Arc;

use serde::Serialize;

use crate::circular::CircularSample;
use crate::error::{Error, Result};
use crate::kde::{KdeFamily, KdeModel, TurningPointSet, DEFAULT_GRID};
use crate::mixture::{fit_vm_mixture, VonMisesMixture};

pub const NU_MIN: f64 = 1e-4;
pub const NU_MAX: f64 = 1.0 - 1e-4;
pub const DEFAULT_TOLERANCE: f64 = 1e-5;
pub const DEFAULT_MAX_COMPONENTS: usize = 5;
const ROUGHNESS_POINTS: usize = 4096;
const ZERO_DENSITY: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalConcentration {
    pub nu_k: f64,
    pub k: usize,
    pub bracket_width: f64,
    /// False when even the upper search bound has at most `k` modes; `nu_k`
    /// is then that bound.
    pub attained: bool,
}

/// Number of modes of the kernel estimate at `nu`.
pub fn count_modes(sample: &CircularSample, nu: f64) -> Result<usize> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::InvalidConcentration(nu));
    }
    if nu < NU_MIN {
        return Ok(1);
    }
    KdeModel::new(Arc::new(sample.clone()), nu)?.count_modes(DEFAULT_GRID)
}

fn count_in(family: &KdeFamily, nu: f64) -> Result<usize> {
    if nu < NU_MIN {
        return Ok(1);
    }
    family.model(nu)?.count_modes(DEFAULT_GRID)
}

/// Bisection for `ν_k` on `[NU_MIN, NU_MAX]`. A numerically flat estimate
/// counts as having at most `k` modes.
pub fn critical_concentration(sample: &CircularSample, k: usize, tol: f64) -> Result<CriticalConcentration> {
    if k == 0 {
        return Err(Error::InvalidK { k, n: sample.len() });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let family = KdeFamily::new(Arc::new(sample.clone()), NU_MAX);
    let at_most_k = |nu: f64| -> Result<bool> {
        match count_in(&family, nu) {
            Ok(c) => Ok(c <= k),
            Err(Error::DegenerateDensity) => Ok(true),
            Err(e) => Err(e),
        }
    };
    if at_most_k(NU_MAX)? {
        return Ok(CriticalConcentration { nu_k: NU_MAX, k, bracket_width: 0.0, attained: false });
    }
    let (mut lo, mut hi) = (NU_MIN, NU_MAX);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if at_most_k(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CriticalConcentration { nu_k: lo, k, bracket_width: hi - lo, attained: true })
}

pub fn kernel_bandwidth(nu: f64) -> f64 {
    (-2.0 * nu.ln()).sqrt()
}

/// AMISE of the second-derivative estimator at concentration `nu`.
pub fn amise_second_derivative(nu: f64, n: usize, roughness: f64) -> f64 {
    let h = kernel_bandwidth(nu);
    let variance = 3.0 / (8.0 * std::f64::consts::PI.sqrt() * n as f64 * h.powi(5));
    variance + h.powi(4) / 4.0 * roughness
}

#[derive(Clone, Debug, Serialize)]
pub struct PluginConcentration {
    pub nu: f64,
    pub reference: VonMisesMixture,
    pub roughness: f64,
}

pub fn plugin_concentration(sample: &CircularSample) -> Result<f64> {
    Ok(plugin_concentration_detail(sample)?.nu)
}

pub fn plugin_concentration_detail(sample: &CircularSample) -> Result<PluginConcentration> {
    if sample.len() < 10 {
        return Err(Error::InvalidArgument(format!("plug-in concentration needs n >= 10, got {}", sample.len())));
    }
    let reference = fit_vm_mixture(sample, DEFAULT_MAX_COMPONENTS)?;
    let roughness = reference.roughness_fourth(ROUGHNESS_POINTS);
    let nu = minimise_amise(sample.len(), roughness);
    Ok(PluginConcentration { nu, reference, roughness })
}

/// Golden-section search of the AMISE over `ν ∈ (NU_MIN, NU_MAX)`.
pub fn minimise_amise(n: usize, roughness: f64) -> f64 {
    let f = |nu: f64| amise_second_derivative(nu, n, roughness);
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (NU_MIN, NU_MAX);
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-10 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// `d̂_i = |f̂''_{ν_PI}(θ̂_i)| / f̂_{ν_k}(θ̂_i)³` for the modes and antimodes in
/// increasing angle, as returned by [`TurningPointSet::ordered`].
pub fn curvature_ratios(sample: &CircularSample, nu_k: f64, nu_pi: f64, points: &TurningPointSet) -> Result<Vec<f64>> {
    let shared = Arc::new(sample.clone());
    let base = KdeModel::new(shared.clone(), nu_k)?;
    let plugin = KdeModel::new(shared, nu_pi)?;
    points
        .ordered()
        .iter()
        .map(|tp| {
            let height = base.eval(tp.angle);
            if height < ZERO_DENSITY {
                return Err(Error::ZeroDensity(tp.angle));
            }
            Ok(plugin.derivative(tp.angle, 2).abs() / height.powi(3))
        })
        .collect()
}
