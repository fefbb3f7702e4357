//! Bootstrap tests of `H₀: j = k` modes against `H_a: j > k`.
//!
//! Both tests draw resample `b` from its own ChaCha stream under the given
//! seed, so p-values do not depend on the number of worker threads.

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{build_calibration, sample_calibration, CalibrationOptions};
use crate::circular::{reduce, CircularSample};
use crate::concentration::{critical_concentration, kernel_bandwidth, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::excess_mass::delta_value;
use crate::kde::KdeModel;
use crate::rng::stream_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExcessMass,
    WatsonU2,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ExcessMass => "excess-mass",
            Method::WatsonU2 => "watson-u2",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s.to_ascii_lowercase().as_str() {
            "excess-mass" | "excess_mass" | "em" => Ok(Method::ExcessMass),
            "watson-u2" | "watson_u2" | "watson" | "u2" => Ok(Method::WatsonU2),
            _ => Err(Error::InvalidArgument(format!("unknown test method {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub pvalue: f64,
    #[serde(rename = "B")]
    pub b: usize,
    pub k: usize,
    pub method: Method,
    pub seed: u64,
}

impl TestResult {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.pvalue <= alpha
    }
}

#[derive(Clone, Debug, Default)]
pub struct TestOptions {
    pub calibration: CalibrationOptions,
    /// Report `(#{T* ≥ T} + 1)/(B + 1)` instead of `#{T* ≥ T}/B`.
    pub plus_one: bool,
}

fn check(sample: &CircularSample, k: usize, b: usize) -> Result<()> {
    if k == 0 || k + 1 > sample.len() {
        return Err(Error::InvalidK { k, n: sample.len() });
    }
    if b == 0 {
        return Err(Error::InvalidArgument("B must be at least 1".into()));
    }
    Ok(())
}

fn pvalue(observed: f64, boot: &[f64], plus_one: bool) -> f64 {
    // ties count as exceedances
    let tol = 1e-12 * observed.abs().max(1e-300);
    let hits = boot.iter().filter(|&&t| t >= observed - tol).count();
    if plus_one {
        (hits + 1) as f64 / (boot.len() + 1) as f64
    } else {
        hits as f64 / boot.len() as f64
    }
}

pub fn excess_mass_test(sample: &CircularSample, k: usize, b: usize, seed: u64) -> Result<TestResult> {
    excess_mass_test_with(sample, k, b, seed, &TestOptions::default())
}

pub fn excess_mass_test_with(
    sample: &CircularSample,
    k: usize,
    b: usize,
    seed: u64,
    opts: &TestOptions,
) -> Result<TestResult> {
    check(sample, k, b)?;
    let (observed, _) = delta_value(sample, k)?;
    let g = build_calibration(sample, k, &opts.calibration)?;
    let n = sample.len();
    let boot = (0..b as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let x = sample_calibration(&g, n, &mut rng)?;
            Ok(delta_value(&x, k)?.0)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(TestResult {
        statistic: observed,
        pvalue: pvalue(observed, &boot, opts.plus_one),
        b,
        k,
        method: Method::ExcessMass,
        seed,
    })
}

/// Watson's `U²` of `sample` against the distribution of its own kernel
/// estimate at `ν_k`.
pub fn watson_u2_statistic(sample: &CircularSample, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidK { k, n: sample.len() });
    }
    let nu = critical_concentration(sample, k, DEFAULT_TOLERANCE)?.nu_k;
    let model = KdeModel::new(Arc::new(sample.clone()), nu)?;
    let u: Vec<f64> = sample.sorted().iter().map(|&x| model.cdf(x)).collect();
    Ok(u2_from_uniforms(&u))
}

/// `U²` for sorted probability-integral transforms `u`.
pub fn u2_from_uniforms(u: &[f64]) -> f64 {
    let n = u.len() as f64;
    let mean = u.iter().sum::<f64>() / n;
    let w2: f64 = u
        .iter()
        .enumerate()
        .map(|(i, &ui)| {
            let e = ui - (2 * i + 1) as f64 / (2.0 * n);
            e * e
        })
        .sum::<f64>()
        + 1.0 / (12.0 * n);
    (w2 - n * (mean - 0.5).powi(2)).max(0.0)
}

/// Bootstrap from the kernel estimate at `ν_k`: a uniformly chosen data
/// point plus wrapped-normal noise is an exact draw from it.
pub fn watson_test(sample: &CircularSample, k: usize, b: usize, seed: u64) -> Result<TestResult> {
    watson_test_with(sample, k, b, seed, &TestOptions::default())
}

pub fn watson_test_with(sample: &CircularSample, k: usize, b: usize, seed: u64, opts: &TestOptions) -> Result<TestResult> {
    check(sample, k, b)?;
    let observed = watson_u2_statistic(sample, k)?;
    let nu = critical_concentration(sample, k, opts.calibration.nu_tolerance)?.nu_k;
    let noise = Normal::new(0.0, kernel_bandwidth(nu)).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let data = sample.angles();
    let n = data.len();
    let boot = (0..b as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let x: Vec<f64> = (0..n)
                .map(|_| reduce(data[rng.random_range(0..n)] + noise.sample(&mut rng)))
                .map(|t| if t >= TAU { 0.0 } else { t })
                .collect();
            watson_u2_statistic(&CircularSample::new(x)?, k)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(TestResult {
        statistic: observed,
        pvalue: pvalue(observed, &boot, opts.plus_one),
        b,
        k,
        method: Method::WatsonU2,
        seed,
    })
}

pub fn run_test(method: Method, sample: &CircularSample, k: usize, b: usize, seed: u64, opts: &TestOptions) -> Result<TestResult> {
    match method {
        Method::ExcessMass => excess_mass_test_with(sample, k, b, seed, opts),
        Method::WatsonU2 => watson_test_with(sample, k, b, seed, opts),
    }
}
