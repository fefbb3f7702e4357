//! Circular distributions used in the simulation study: von Mises, wrapped
//! normal, wrapped Cauchy, cardioid, their sine-skewed variants, and finite
//! mixtures of them, together with the named models M1–M25.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Cauchy, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::circular::{reduce, CircularSample};
use crate::error::{Error, Result};
use crate::kde::{series_terms, SERIES_TOLERANCE};
use crate::mixture::vm_density;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kind {
    VonMises { kappa: f64 },
    WrappedNormal { rho: f64 },
    WrappedCauchy { rho: f64 },
    Cardioid { rho: f64 },
    SineSkewedWrappedNormal { rho: f64, lambda: f64, harmonic: u32 },
    SineSkewedVonMises { kappa: f64, lambda: f64, harmonic: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub mu: f64,
    #[serde(flatten)]
    pub kind: Kind,
}

impl Primitive {
    pub fn new(mu: f64, kind: Kind) -> Result<Primitive> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("{what} out of range in {kind:?}")));
        match kind {
            Kind::VonMises { kappa } | Kind::SineSkewedVonMises { kappa, .. } if !(kappa >= 0.0) => return bad("kappa"),
            Kind::WrappedNormal { rho } | Kind::WrappedCauchy { rho } | Kind::SineSkewedWrappedNormal { rho, .. }
                if !(rho > 0.0 && rho < 1.0) =>
            {
                return bad("rho")
            }
            Kind::Cardioid { rho } if !(-0.5..=0.5).contains(&rho) => return bad("rho"),
            _ => {}
        }
        match kind {
            Kind::SineSkewedVonMises { lambda, harmonic, .. } | Kind::SineSkewedWrappedNormal { lambda, harmonic, .. }
                if !(lambda > -1.0 && lambda < 1.0) || harmonic == 0 =>
            {
                return bad("skew")
            }
            _ => {}
        }
        if !mu.is_finite() {
            return Err(Error::NonFiniteAngle(mu));
        }
        Ok(Primitive { mu: reduce(mu), kind })
    }

    pub fn density(&self, theta: f64) -> f64 {
        let u = theta - self.mu;
        match self.kind {
            Kind::VonMises { kappa } => vm_density(theta, self.mu, kappa),
            Kind::WrappedNormal { rho } => wrapped_normal_density(u, rho),
            Kind::WrappedCauchy { rho } => (1.0 - rho * rho) / (TAU * (1.0 + rho * rho - 2.0 * rho * u.cos())),
            Kind::Cardioid { rho } => (1.0 + 2.0 * rho * u.cos()) / TAU,
            Kind::SineSkewedWrappedNormal { rho, lambda, harmonic } => {
                wrapped_normal_density(u, rho) * (1.0 + lambda * (harmonic as f64 * u).sin())
            }
            Kind::SineSkewedVonMises { kappa, lambda, harmonic } => {
                vm_density(theta, self.mu, kappa) * (1.0 + lambda * (harmonic as f64 * u).sin())
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mu = self.mu;
        match self.kind {
            Kind::VonMises { kappa } => draw_vm(rng, mu, kappa),
            Kind::WrappedNormal { rho } => draw_wn(rng, mu, rho),
            Kind::WrappedCauchy { rho } => {
                let c = Cauchy::new(0.0, -rho.ln()).expect("valid scale");
                reduce(mu + c.sample(rng))
            }
            Kind::Cardioid { rho } => loop {
                let t: f64 = rng.random_range(0.0..TAU);
                let accept = (1.0 + 2.0 * rho * (t - mu).cos()) / (1.0 + 2.0 * rho.abs());
                if rng.random::<f64>() < accept {
                    break reduce(t);
                }
            },
            Kind::SineSkewedWrappedNormal { rho, lambda, harmonic } => {
                skew_accept(rng, mu, lambda, harmonic, |r| draw_wn(r, mu, rho))
            }
            Kind::SineSkewedVonMises { kappa, lambda, harmonic } => {
                skew_accept(rng, mu, lambda, harmonic, |r| draw_vm(r, mu, kappa))
            }
        }
    }
}

fn skew_accept<R: Rng + ?Sized, F: Fn(&mut R) -> f64>(rng: &mut R, mu: f64, lambda: f64, harmonic: u32, base: F) -> f64 {
    loop {
        let t = base(rng);
        if rng.random::<f64>() < (1.0 + lambda * (harmonic as f64 * (t - mu)).sin()) / 2.0 {
            return t;
        }
    }
}

/// Wrapped normal density at offset `u` from the mean, via the theta series.
pub fn wrapped_normal_density(u: f64, rho: f64) -> f64 {
    let terms = series_terms(rho, SERIES_TOLERANCE);
    let s: f64 = (1..=terms).map(|p| rho.powi((p * p) as i32) * (p as f64 * u).cos()).sum();
    (1.0 + 2.0 * s) / TAU
}

fn draw_wn<R: Rng + ?Sized>(rng: &mut R, mu: f64, rho: f64) -> f64 {
    let sd = (-2.0 * rho.ln()).sqrt();
    reduce(mu + Normal::new(0.0, sd).expect("valid sd").sample(rng))
}

/// Best–Fisher rejection sampler for the von Mises distribution.
fn draw_vm<R: Rng + ?Sized>(rng: &mut R, mu: f64, kappa: f64) -> f64 {
    if kappa < 1e-8 {
        return rng.random_range(0.0..TAU);
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let turn = f.clamp(-1.0, 1.0).acos();
            return reduce(if rng.random::<f64>() < 0.5 { mu + turn } else { mu - turn });
        }
    }
}

/// `n` von Mises draws.
pub fn sample_vm<R: Rng + ?Sized>(rng: &mut R, mu: f64, kappa: f64, n: usize) -> Vec<f64> {
    (0..n).map(|_| draw_vm(rng, mu, kappa)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel {
    pub id: Option<String>,
    pub weights: Vec<f64>,
    pub components: Vec<Primitive>,
}

impl MixtureModel {
    pub fn new(weights: Vec<f64>, components: Vec<Primitive>) -> Result<MixtureModel> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(Error::InvalidArgument("weights and components must match and be nonempty".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument("mixture weights must be nonnegative and sum to 1".into()));
        }
        Ok(MixtureModel { id: None, weights, components })
    }

    pub fn single(p: Primitive) -> MixtureModel {
        MixtureModel { id: None, weights: vec![1.0], components: vec![p] }
    }

    pub fn with_id(mut self, id: &str) -> MixtureModel {
        self.id = Some(id.to_string());
        self
    }

    pub fn density(&self, theta: f64) -> f64 {
        self.weights.iter().zip(&self.components).map(|(w, c)| w * c.density(theta)).sum()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut u: f64 = rng.random();
        let last = self.components.len() - 1;
        for (i, (w, c)) in self.weights.iter().zip(&self.components).enumerate() {
            if u < *w || i == last {
                return c.sample(rng);
            }
            u -= w;
        }
        unreachable!()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<CircularSample> {
        CircularSample::new((0..n).map(|_| self.draw(rng)).collect::<Vec<_>>())
    }
}

/// Density of `model` at `theta`.
pub fn model_density(model: &MixtureModel, theta: f64) -> f64 {
    model.density(theta)
}

/// `n` independent draws from `model`.
pub fn model_sample<R: Rng + ?Sized>(model: &MixtureModel, n: usize, rng: &mut R) -> Result<CircularSample> {
    model.sample(n, rng)
}

fn vm(mu: f64, kappa: f64) -> Primitive {
    Primitive { mu: reduce(mu), kind: Kind::VonMises { kappa } }
}

fn wn(mu: f64, rho: f64) -> Primitive {
    Primitive { mu: reduce(mu), kind: Kind::WrappedNormal { rho } }
}

fn wc(mu: f64, rho: f64) -> Primitive {
    Primitive { mu: reduce(mu), kind: Kind::WrappedCauchy { rho } }
}

fn mix(parts: &[(f64, Primitive)]) -> MixtureModel {
    MixtureModel { id: None, weights: parts.iter().map(|p| p.0).collect(), components: parts.iter().map(|p| p.1).collect() }
}

/// Named simulation model `M1`…`M25`.
pub fn named_model(id: usize) -> Result<MixtureModel> {
    let m = match id {
        1 => MixtureModel::single(vm(PI, 1.0)),
        2 => MixtureModel::single(wn(PI, 0.9)),
        3 => MixtureModel::single(wc(PI, 0.8)),
        4 => MixtureModel::single(Primitive { mu: PI, kind: Kind::Cardioid { rho: 0.5 } }),
        5 => mix(&[(0.9, vm(PI, 10.0)), (0.1, vm(PI, 1.0))]),
        6 => mix(&[(0.2, vm(2.0 * PI / 3.0, 3.0)), (0.6, vm(PI, 1.4)), (0.2, vm(4.0 * PI / 3.0, 3.0))]),
        7 => mix(&[(0.05, vm(2.0 * PI / 3.0, 7.0)), (0.9, vm(PI, 1.0)), (0.05, vm(4.0 * PI / 3.0, 7.0))]),
        8 => mix(&[(0.05, vm(2.0 * PI / 3.0, 4.0)), (0.9, vm(PI, 1.0)), (0.05, vm(4.0 * PI / 3.0, 7.0))]),
        9 => MixtureModel::single(Primitive {
            mu: PI,
            kind: Kind::SineSkewedWrappedNormal { rho: 0.4, lambda: 0.99, harmonic: 1 },
        }),
        10 => MixtureModel::single(Primitive {
            mu: PI,
            kind: Kind::SineSkewedVonMises { kappa: 1.0, lambda: 0.9, harmonic: 1 },
        }),
        11 => mix(&[(0.5, vm(2.0, 5.0)), (0.5, vm(4.0, 5.0))]),
        12 => mix(&[(0.9, vm(FRAC_PI_2, 2.0)), (0.1, vm(3.0 * FRAC_PI_2, 5.0))]),
        13 => mix(&[(0.5, vm(PI - 1.0, 1.5)), (0.5, vm(PI + 1.0, 1.5))]),
        14 => mix(&[(0.3, vm(FRAC_PI_2, 6.0)), (0.5, vm(3.0 * PI / 4.0, 2.0)), (0.2, vm(7.0 * PI / 4.0, 4.0))]),
        15 => MixtureModel::single(Primitive {
            mu: PI,
            kind: Kind::SineSkewedWrappedNormal { rho: 0.5, lambda: 0.9, harmonic: 2 },
        }),
        16 => MixtureModel::single(Primitive {
            mu: PI,
            kind: Kind::SineSkewedVonMises { kappa: 1.0, lambda: 0.8, harmonic: 2 },
        }),
        17 => mix(&[(0.5, vm(0.0, 4.0)), (0.5, vm(PI, 4.0))]),
        18 => mix(&[(0.1, vm(0.0, 2.0)), (0.6, vm(FRAC_PI_2, 4.0)), (0.3, vm(3.0 * FRAC_PI_2, 5.0))]),
        19 => mix(&[(0.5, vm(0.0, 0.2)), (0.25, wn(FRAC_PI_2, 0.5)), (0.25, wc(3.0 * FRAC_PI_2, 0.5))]),
        20 => mix(&[(0.75, vm(PI, 1.0)), (0.25, vm(7.0 * PI / 4.0, 10.0))]),
        21 => mix(&[(0.4, vm(0.5, 6.0)), (0.4, vm(3.0, 6.0)), (0.2, vm(5.0, 24.0))]),
        22 => mix(&[
            (1.0 / 6.0, vm(PI - 0.8, 30.0)),
            (0.5, vm(PI, 1.0)),
            (1.0 / 6.0, vm(PI, 30.0)),
            (1.0 / 6.0, vm(PI + 0.8, 30.0)),
        ]),
        23 => mix(&[(0.2, vm(FRAC_PI_2, 5.0)), (0.2, vm(7.0 * PI / 8.0, 5.0)), (0.6, wn(7.0 * PI / 4.0, 0.8))]),
        24 => mix(&[(0.2, vm(FRAC_PI_2, 6.0)), (0.2, vm(7.0 * PI / 8.0, 2.0)), (0.6, wc(7.0 * PI / 4.0, 0.7))]),
        25 => MixtureModel::single(Primitive {
            mu: PI,
            kind: Kind::SineSkewedWrappedNormal { rho: 0.5, lambda: 0.99, harmonic: 3 },
        }),
        _ => return Err(Error::InvalidArgument(format!("unknown model M{id}"))),
    };
    Ok(m.with_id(&format!("M{id}")))
}

/// Number of modes of a named model: 1 for M1–M10, 2 for M11–M20, 3 for M21–M25.
pub fn true_modes(id: usize) -> usize {
    match id {
        1..=10 => 1,
        11..=20 => 2,
        _ => 3,
    }
}

/// Parses `"M7"`, `"m7"` or `"7"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ModelId(pub usize);

impl FromStr for ModelId {
    type Err = Error;
    fn from_str(s: &str) -> Result<ModelId> {
        let digits = s.trim().trim_start_matches(['M', 'm']);
        let id: usize = digits.parse().map_err(|_| Error::InvalidArgument(format!("bad model id {s:?}")))?;
        if !(1..=25).contains(&id) {
            return Err(Error::InvalidArgument(format!("unknown model {s:?}")));
        }
        Ok(ModelId(id))
    }
}

impl TryFrom<String> for ModelId {
    type Error = Error;
    fn try_from(s: String) -> Result<ModelId> {
        s.parse()
    }
}

impl From<ModelId> for String {
    fn from(m: ModelId) -> String {
        format!("M{}", m.0)
    }
}

impl std::fmt::Display for ModelId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "M{}", self.0)
    }
}
