//! The resampling density `g` for the excess-mass bootstrap.
//!
//! `g` equals the kernel estimate at the critical concentration except near
//! its turning points and saddles. Around each mode or antimode `θ̂_i` a bump
//! `𝒦` with prescribed curvature ratio `|𝒦''(θ̂_i)|/𝒦(θ̂_i)³ = d̂_i` is joined
//! to the estimate by two `C¹` link functions; around each saddle the
//! estimate is replaced by a single monotone link. The bump exponent uses
//! `|f̂''_{ν_PI}(θ̂_i)|`, so the bump has the shape of its turning point even
//! when the plug-in curvature has the opposite sign.
//!
//! `g` is renormalised explicitly. Curvature ratios hold exactly before
//! normalisation; after dividing by a normaliser `c` they become `d̂_i c²`.

use std::f64::consts::TAU;
use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::circular::{reduce, wrapped_distance, CircularSample};
use crate::concentration::{critical_concentration, plugin_concentration, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::kde::{find_turning_points, turning_points_of, KdeModel, TurningKind, TurningPointSet};
use crate::quadrature::gauss_legendre_composite;

pub const DEFAULT_SIGMA: f64 = 0.05;
pub const DEFAULT_VARPI: f64 = 0.1;
pub const CDF_GRID: usize = 8192;
const MAX_RETRIES: usize = 5;
const MIN_CURVATURE: f64 = 1e-300;
const ZERO_DENSITY: f64 = 1e-12;

/// `C¹` monotone bridge on `[u, v]` from value `a0`, slope `b0` to value
/// `a1`, slope `b1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinkSpec {
    pub u: f64,
    pub v: f64,
    pub a0: f64,
    pub a1: f64,
    pub b0: f64,
    pub b1: f64,
}

impl LinkSpec {
    pub fn new(u: f64, v: f64, a0: f64, a1: f64, b0: f64, b1: f64) -> Result<LinkSpec> {
        if !(v > u) || a0 == a1 || b0 * b1 < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "link needs v > u, a0 != a1, b0*b1 >= 0 (u={u}, v={v}, a0={a0}, a1={a1}, b0={b0}, b1={b1})"
            )));
        }
        Ok(LinkSpec { u, v, a0, a1, b0, b1 })
    }

    fn parts(&self, theta: f64) -> (f64, f64, f64, f64, f64) {
        let len = self.v - self.u;
        let t = (theta - self.u) / len;
        let half = (self.a0 - self.a1) / 2.0;
        let e0 = (2.0 * (theta - self.u) * self.b0 / (self.a0 - self.a1)).exp();
        let e1 = (2.0 * (self.v - theta) * self.b1 / (self.a0 - self.a1)).exp();
        (t, len, half, e0, e1)
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let (t, _, half, e0, e1) = self.parts(theta);
        let h1 = 1.0 + 2.0 * t.powi(3) - 3.0 * t * t;
        let h2 = 2.0 * t.powi(3) - 3.0 * t * t;
        half * h1 * e0 + half * h2 * e1 + (self.a0 + self.a1) / 2.0
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        let (t, len, half, e0, e1) = self.parts(theta);
        let h1 = 1.0 + 2.0 * t.powi(3) - 3.0 * t * t;
        let h2 = 2.0 * t.powi(3) - 3.0 * t * t;
        let dh = (6.0 * t * t - 6.0 * t) / len;
        let k0 = 2.0 * self.b0 / (self.a0 - self.a1);
        let k1 = -2.0 * self.b1 / (self.a0 - self.a1);
        half * (dh * e0 + h1 * k0 * e0) + half * (dh * e1 + h2 * k1 * e1)
    }
}

/// `𝒦(θ) = H (1 + δ((θ − θ̂)/η)²)^{η²|F₂|/(2H)}` with `δ = −1` at a mode and
/// `+1` at an antimode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BumpSpec {
    pub center: f64,
    pub height: f64,
    pub curvature: f64,
    pub eta: f64,
    pub delta: f64,
}

impl BumpSpec {
    pub fn new(center: f64, height: f64, curvature: f64, eta: f64, kind: TurningKind) -> Result<BumpSpec> {
        if !(height > 0.0) || !(eta > 0.0) || !curvature.is_finite() {
            return Err(Error::InvalidArgument(format!("bump needs height > 0, eta > 0 (height={height}, eta={eta})")));
        }
        let delta = match kind {
            TurningKind::Mode => -1.0,
            TurningKind::Antimode => 1.0,
        };
        Ok(BumpSpec { center, height, curvature, eta, delta })
    }

    pub fn exponent(&self) -> f64 {
        self.eta * self.eta * self.curvature.abs().max(MIN_CURVATURE) / (2.0 * self.height)
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let x = (theta - self.center) / self.eta;
        self.height * (1.0 + self.delta * x * x).powf(self.exponent())
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        let x = (theta - self.center) / self.eta;
        let e = self.exponent();
        let base = 1.0 + self.delta * x * x;
        self.height * e * base.powf(e - 1.0) * 2.0 * self.delta * x / self.eta
    }

    /// `𝒦''(θ̂) = δ|F₂|`.
    pub fn center_second_derivative(&self) -> f64 {
        2.0 * self.height * self.exponent() * self.delta / (self.eta * self.eta)
    }
}

/// Modification around one turning point, in unrolled coordinates.
#[derive(Clone, Debug, Serialize)]
pub struct TurningNeighborhood {
    pub kind: TurningKind,
    pub theta: f64,
    pub d_hat: f64,
    pub sigma: f64,
    pub level: f64,
    pub r: f64,
    pub v: f64,
    pub w: f64,
    pub s: f64,
    pub left: LinkSpec,
    pub bump: BumpSpec,
    pub right: LinkSpec,
}

impl TurningNeighborhood {
    fn eval(&self, t: f64) -> f64 {
        if t < self.v {
            self.left.eval(t)
        } else if t <= self.w {
            self.bump.eval(t)
        } else {
            self.right.eval(t)
        }
    }

    fn derivative(&self, t: f64) -> f64 {
        if t < self.v {
            self.left.derivative(t)
        } else if t <= self.w {
            self.bump.derivative(t)
        } else {
            self.right.derivative(t)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SaddleNeighborhood {
    pub zeta: f64,
    pub link: LinkSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CalibrationOptions {
    pub sigma: f64,
    pub varpi: f64,
    pub nu_tolerance: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions { sigma: DEFAULT_SIGMA, varpi: DEFAULT_VARPI, nu_tolerance: DEFAULT_TOLERANCE }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentTag {
    Base,
    Link,
    Bump,
    Saddle,
}

#[derive(Clone, Debug)]
pub struct CalibrationDensity {
    base: KdeModel,
    nu_pi: f64,
    varpi: f64,
    turning: TurningPointSet,
    neighborhoods: Vec<TurningNeighborhood>,
    saddles: Vec<SaddleNeighborhood>,
    normalizer: f64,
    table_x: Vec<f64>,
    table_cdf: Vec<f64>,
}

/// Grid size resolving a wrapped-normal kernel at concentration `nu`.
pub fn grid_for(nu: f64) -> usize {
    let sd = (-2.0 * nu.ln()).sqrt();
    let needed = (16.0 * TAU / sd).ceil() as usize;
    needed.next_power_of_two().clamp(1024, 1 << 16)
}

/// Builds `g` for `sample` under the hypothesis of `k` modes.
pub fn build_calibration(sample: &CircularSample, k: usize, opts: &CalibrationOptions) -> Result<CalibrationDensity> {
    if k + 1 > sample.len() {
        return Err(Error::InvalidK { k, n: sample.len() });
    }
    let nu_k = critical_concentration(sample, k, opts.nu_tolerance)?.nu_k;
    let nu_pi = plugin_concentration(sample)?;
    build_with_concentrations(Arc::new(sample.clone()), nu_k, nu_pi, opts)
}

/// Builds `g` from already selected concentrations.
pub fn build_with_concentrations(
    sample: Arc<CircularSample>,
    nu_k: f64,
    nu_pi: f64,
    opts: &CalibrationOptions,
) -> Result<CalibrationDensity> {
    if !(opts.sigma > 0.0 && opts.sigma < 0.5) {
        return Err(Error::InvalidArgument(format!("sigma {} outside (0, 1/2)", opts.sigma)));
    }
    if !(opts.varpi > 0.0 && opts.varpi < 0.25) {
        return Err(Error::InvalidArgument(format!("varpi {} outside (0, 1/4)", opts.varpi)));
    }
    let base = KdeModel::new(sample.clone(), nu_k)?;
    let plugin = KdeModel::new(sample, nu_pi)?;
    let turning = match find_turning_points(&base, grid_for(nu_k)) {
        Ok(tp) => tp,
        Err(Error::DegenerateDensity) => TurningPointSet::default(),
        Err(e) => return Err(e),
    };
    let mut sigma = opts.sigma;
    for _ in 0..=MAX_RETRIES {
        match assemble(&base, &plugin, &turning, sigma, opts.varpi) {
            Err(Error::CollidingNeighborhoods(_)) => sigma /= 2.0,
            other => return other,
        }
    }
    Err(Error::CollidingNeighborhoods(MAX_RETRIES))
}

fn assemble(
    base: &KdeModel,
    plugin: &KdeModel,
    turning: &TurningPointSet,
    sigma: f64,
    varpi: f64,
) -> Result<CalibrationDensity> {
    let points = turning.ordered();
    let m = points.len();
    let mut neighborhoods = Vec::with_capacity(m);
    if m >= 2 {
        let heights: Vec<f64> = points.iter().map(|p| base.eval(p.angle)).collect();
        for (i, p) in points.iter().enumerate() {
            let h = heights[i];
            if h < ZERO_DENSITY {
                // an antimode in an empty stretch: resamples never land here
                log::debug!("turning point at {} has negligible density; left unmodified", p.angle);
                continue;
            }
            let prev_i = (i + m - 1) % m;
            let next_i = (i + 1) % m;
            let prev_t = if i == 0 { points[prev_i].angle - TAU } else { points[prev_i].angle };
            let next_t = if i == m - 1 { points[next_i].angle + TAU } else { points[next_i].angle };
            let delta = if p.kind == TurningKind::Mode { -1.0 } else { 1.0 };
            let gap = (h - heights[prev_i]).abs().min((h - heights[next_i]).abs());
            let level = h + delta * sigma * gap;
            let curvature = plugin.derivative(p.angle, 2);
            let d_hat = curvature.abs() / h.powi(3);
            let r = level_crossing(base, prev_t, p.angle, level);
            let s = level_crossing(base, p.angle, next_t, level);
            // largest bump width keeping 𝒦(θ̂ ± γ/2) on the inner side of the
            // midpoint between the height and the level
            let c = curvature.abs().max(MIN_CURVATURE);
            let gamma2 = 2.0 * h * ((h + level) / (2.0 * h)).ln() / (c * (1.0 + delta / 4.0).ln());
            let eta = gamma2.sqrt().min(p.angle - r).min(s - p.angle);
            let bump = BumpSpec::new(p.angle, h, curvature, eta, p.kind)?;
            let (v, w) = (p.angle - eta / 2.0, p.angle + eta / 2.0);
            let left = LinkSpec::new(r, v, base.eval(r), bump.eval(v), base.derivative(r, 1), bump.derivative(v))?;
            let right = LinkSpec::new(w, s, bump.eval(w), base.eval(s), bump.derivative(w), base.derivative(s, 1))?;
            neighborhoods.push(TurningNeighborhood {
                kind: p.kind,
                theta: p.angle,
                d_hat,
                sigma,
                level,
                r,
                v,
                w,
                s,
                left,
                bump,
                right,
            });
        }
        let count = neighborhoods.len();
        for i in 0..count {
            let a = &neighborhoods[i];
            let b = &neighborhoods[(i + 1) % count];
            let b_r = if i == count - 1 { b.r + TAU } else { b.r };
            if a.s >= b_r {
                return Err(Error::CollidingNeighborhoods(i));
            }
        }
    }

    let inside_j = |z: f64| neighborhoods.iter().any(|nb| [z, z - TAU, z + TAU].iter().any(|&t| nb.r < t && t < nb.s));
    let zetas: Vec<f64> = turning.saddles.iter().copied().filter(|&z| !inside_j(z)).collect();
    let mut saddles = Vec::new();
    if !zetas.is_empty() {
        let mut marks: Vec<f64> = zetas.clone();
        for nb in &neighborhoods {
            marks.push(reduce(nb.r));
            marks.push(reduce(nb.s));
        }
        let mut xi = f64::INFINITY;
        for a in 0..marks.len() {
            for b in a + 1..marks.len() {
                xi = xi.min(wrapped_distance(marks[a].into(), marks[b].into()));
            }
        }
        if xi.is_finite() && xi > 0.0 {
            for &z in &zetas {
                let (z1, z2) = (z - varpi * xi, z + varpi * xi);
                let link = LinkSpec::new(z1, z2, base.eval(z1), base.eval(z2), base.derivative(z1, 1), base.derivative(z2, 1));
                match link {
                    Ok(link) => saddles.push(SaddleNeighborhood { zeta: z, link }),
                    Err(e) => log::debug!("saddle at {z} left unmodified: {e}"),
                }
            }
        }
    }

    let mut g = CalibrationDensity {
        base: base.clone(),
        nu_pi: plugin.nu(),
        varpi,
        turning: turning.clone(),
        neighborhoods,
        saddles,
        normalizer: 1.0,
        table_x: Vec::new(),
        table_cdf: Vec::new(),
    };
    g.normalizer = g.raw_integral();
    if !(g.normalizer > 0.0) {
        return Err(Error::QuadratureFailure);
    }
    let (xs, cdf) = g.build_table();
    g.table_x = xs;
    g.table_cdf = cdf;
    Ok(g)
}

/// Point in `[a, b]` where the monotone `f̂` crosses `level`.
fn level_crossing(base: &KdeModel, a: f64, b: f64, level: f64) -> f64 {
    let fa = base.eval(a) - level;
    let (mut lo, mut hi) = (a, b);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (base.eval(mid) - level > 0.0) == (fa > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    0.5 * (lo + hi)
}

impl CalibrationDensity {
    pub fn base(&self) -> &KdeModel {
        &self.base
    }

    pub fn nu_k(&self) -> f64 {
        self.base.nu()
    }

    pub fn nu_pi(&self) -> f64 {
        self.nu_pi
    }

    pub fn varpi(&self) -> f64 {
        self.varpi
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn turning_points(&self) -> &TurningPointSet {
        &self.turning
    }

    pub fn neighborhoods(&self) -> &[TurningNeighborhood] {
        &self.neighborhoods
    }

    pub fn saddle_neighborhoods(&self) -> &[SaddleNeighborhood] {
        &self.saddles
    }

    /// Target curvature ratios, in the order of [`TurningPointSet::ordered`].
    pub fn d_hat(&self) -> Vec<f64> {
        self.neighborhoods.iter().map(|n| n.d_hat).collect()
    }

    fn locate(&self, theta: f64) -> (SegmentTag, Option<(usize, f64)>, Option<(usize, f64)>) {
        let x = reduce(theta);
        for (i, nb) in self.neighborhoods.iter().enumerate() {
            for t in [x, x - TAU, x + TAU] {
                if nb.r < t && t < nb.s {
                    let tag = if t >= nb.v && t <= nb.w { SegmentTag::Bump } else { SegmentTag::Link };
                    return (tag, Some((i, t)), None);
                }
            }
        }
        for (p, sd) in self.saddles.iter().enumerate() {
            for t in [x, x - TAU, x + TAU] {
                if sd.link.u < t && t < sd.link.v {
                    return (SegmentTag::Saddle, None, Some((p, t)));
                }
            }
        }
        (SegmentTag::Base, None, None)
    }

    /// `g` before normalisation.
    pub fn raw(&self, theta: f64) -> f64 {
        match self.locate(theta) {
            (_, Some((i, t)), _) => self.neighborhoods[i].eval(t),
            (_, _, Some((p, t))) => self.saddles[p].link.eval(t),
            _ => self.base.eval(theta),
        }
    }

    /// Derivative of `g` before normalisation.
    pub fn raw_derivative(&self, theta: f64) -> f64 {
        match self.locate(theta) {
            (_, Some((i, t)), _) => self.neighborhoods[i].derivative(t),
            (_, _, Some((p, t))) => self.saddles[p].link.derivative(t),
            _ => self.base.derivative(theta, 1),
        }
    }

    pub fn segment_tag(&self, theta: f64) -> SegmentTag {
        self.locate(theta).0
    }

    /// Normalised density.
    pub fn eval(&self, theta: f64) -> f64 {
        self.raw(theta) / self.normalizer
    }

    /// Junctions of the piecewise definition, reduced to `[0, 2π)` and sorted.
    pub fn knots(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self
            .neighborhoods
            .iter()
            .flat_map(|n| [n.r, n.v, n.w, n.s])
            .chain(self.saddles.iter().flat_map(|s| [s.link.u, s.link.v]))
            .map(reduce)
            .collect();
        k.sort_by(f64::total_cmp);
        k
    }

    fn pieces(&self) -> Vec<(f64, f64)> {
        let mut cuts = vec![0.0];
        cuts.extend(self.knots());
        cuts.push(TAU);
        cuts.dedup();
        cuts.windows(2).filter(|w| w[1] > w[0]).map(|w| (w[0], w[1])).collect()
    }

    fn raw_integral(&self) -> f64 {
        let sd = self.base.kernel_variance().sqrt();
        self.pieces()
            .iter()
            .map(|&(a, b)| {
                let pieces = ((b - a) / (0.25 * sd)).ceil().clamp(2.0, 4000.0) as usize;
                let mid = 0.5 * (a + b);
                // evaluate inside this piece's own branch
                let (_, j, l) = self.locate(mid);
                match (j, l) {
                    (Some((i, t)), _) => {
                        let shift = t - mid;
                        gauss_legendre_composite(|x| self.neighborhoods[i].eval(x + shift), a, b, pieces)
                    }
                    (_, Some((p, t))) => {
                        let shift = t - mid;
                        gauss_legendre_composite(|x| self.saddles[p].link.eval(x + shift), a, b, pieces)
                    }
                    _ => self.base.integral(a, b),
                }
            })
            .sum()
    }

    /// Cumulative table on the uniform grid plus the knots, trapezoid rule.
    fn build_table(&self) -> (Vec<f64>, Vec<f64>) {
        let mut xs: Vec<f64> = (0..=CDF_GRID).map(|i| TAU * i as f64 / CDF_GRID as f64).collect();
        xs.extend(self.knots());
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let base_grid = self.base.grid_values(CDF_GRID, 0);
        let value = |x: f64, idx: Option<usize>| -> f64 {
            match (self.segment_tag(x), idx) {
                (SegmentTag::Base, Some(i)) => base_grid[i % CDF_GRID],
                _ => self.raw(x),
            }
        };
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let pos = x / TAU * CDF_GRID as f64;
                let idx = if (pos - pos.round()).abs() < 1e-9 { Some(pos.round() as usize) } else { None };
                value(x, idx).max(0.0)
            })
            .collect();
        let mut cdf = Vec::with_capacity(xs.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for i in 1..xs.len() {
            acc += 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
            cdf.push(acc);
        }
        let total = acc;
        cdf.iter_mut().for_each(|c| *c /= total);
        (xs, cdf)
    }

    /// Tabulated distribution function from the origin.
    pub fn table_cdf(&self, x: f64) -> f64 {
        let x = reduce(x);
        let i = self.table_x.partition_point(|&t| t <= x).clamp(1, self.table_x.len() - 1);
        let (x0, x1) = (self.table_x[i - 1], self.table_x[i]);
        let (c0, c1) = (self.table_cdf[i - 1], self.table_cdf[i]);
        c0 + (c1 - c0) * (x - x0) / (x1 - x0)
    }

    /// One draw by inverting the tabulated distribution function.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let i = self.table_cdf.partition_point(|&c| c <= u).clamp(1, self.table_cdf.len() - 1);
        let (c0, c1) = (self.table_cdf[i - 1], self.table_cdf[i]);
        let (x0, x1) = (self.table_x[i - 1], self.table_x[i]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        reduce(x0 + t * (x1 - x0))
    }

    /// Modes, antimodes and saddles of `g` located on a `grid`-point grid.
    pub fn find_turning_points(&self, grid: usize) -> Result<TurningPointSet> {
        let xs: Vec<f64> = (0..grid).map(|i| TAU * i as f64 / grid as f64).collect();
        let d0: Vec<f64> = xs.iter().map(|&x| self.raw(x)).collect();
        let d1: Vec<f64> = xs.iter().map(|&x| self.raw_derivative(x)).collect();
        turning_points_of(&d0, &d1, |t| self.raw_derivative(t), crate::kde::SADDLE_TOLERANCE)
    }

    /// Debug dump of `theta,g,segment` rows.
    pub fn write_csv<W: Write>(&self, out: W, points: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["theta", "g", "kde", "segment"])?;
        for i in 0..points {
            let t = TAU * i as f64 / points as f64;
            let tag = match self.segment_tag(t) {
                SegmentTag::Base => "base",
                SegmentTag::Link => "link",
                SegmentTag::Bump => "bump",
                SegmentTag::Saddle => "saddle",
            };
            w.write_record([format!("{t:.8}"), format!("{:.10e}", self.eval(t)), format!("{:.10e}", self.base.eval(t)), tag.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `n` draws from `g`.
pub fn sample_calibration<R: Rng + ?Sized>(g: &CalibrationDensity, n: usize, rng: &mut R) -> Result<CircularSample> {
    CircularSample::new((0..n).map(|_| g.draw(rng)).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::named_model;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_link(rng: &mut ChaCha8Rng) -> LinkSpec {
        let u: f64 = rng.random_range(-1.0..3.0);
        let v = u + rng.random_range(0.01..2.0);
        let a0: f64 = rng.random_range(0.01..2.0);
        let mut a1: f64 = rng.random_range(0.01..2.0);
        if (a1 - a0).abs() < 1e-3 {
            a1 = a0 + 0.1;
        }
        let dir = (a1 - a0).signum();
        let b0 = dir * rng.random_range(0.0..5.0);
        let b1 = dir * rng.random_range(0.0..5.0);
        LinkSpec::new(u, v, a0, a1, b0, b1).unwrap()
    }

    #[test]
    fn link_boundary_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let l = random_link(&mut rng);
            assert!((l.eval(l.u) - l.a0).abs() < 1e-12);
            assert!((l.eval(l.v) - l.a1).abs() < 1e-12);
            let h = 1e-6;
            let d0 = (l.eval(l.u + h) - l.eval(l.u - h)) / (2.0 * h);
            let d1 = (l.eval(l.v + h) - l.eval(l.v - h)) / (2.0 * h);
            assert!((d0 - l.b0).abs() < 1e-6 * l.b0.abs().max(1.0), "{d0} {}", l.b0);
            assert!((d1 - l.b1).abs() < 1e-6 * l.b1.abs().max(1.0), "{d1} {}", l.b1);
            assert!((l.derivative(l.u) - l.b0).abs() < 1e-9 * (1.0 + l.b0.abs()));
            assert!((l.derivative(l.v) - l.b1).abs() < 1e-9 * (1.0 + l.b1.abs()));
        }
    }

    #[test]
    fn link_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let l = random_link(&mut rng);
            let dir = (l.a1 - l.a0).signum();
            for i in 1..1000 {
                let t = l.u + (l.v - l.u) * i as f64 / 1000.0;
                assert!(dir * l.derivative(t) >= -1e-12);
            }
        }
    }

    #[test]
    fn link_rejects_invalid() {
        assert!(LinkSpec::new(1.0, 0.5, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(LinkSpec::new(0.0, 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(LinkSpec::new(0.0, 1.0, 0.0, 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn bump_center_and_ratio() {
        for (kind, curv) in [(TurningKind::Mode, -3.0), (TurningKind::Antimode, 2.0), (TurningKind::Mode, 0.7)] {
            let b = BumpSpec::new(1.0, 0.4, curv, 0.3, kind).unwrap();
            assert_eq!(b.eval(1.0), 0.4);
            let h = 1e-4;
            let fd2 = (b.eval(1.0 + h) - 2.0 * b.eval(1.0) + b.eval(1.0 - h)) / (h * h);
            let ratio = fd2.abs() / 0.4f64.powi(3);
            let d_hat = curv.abs() / 0.4f64.powi(3);
            assert!((ratio - d_hat).abs() < 1e-6 * d_hat, "{ratio} {d_hat}");
            assert!((b.center_second_derivative().abs() - curv.abs()).abs() < 1e-12);
            if kind == TurningKind::Mode {
                for i in 1..100 {
                    let t = 1.0 + 0.15 * i as f64 / 100.0;
                    assert!(b.eval(t) < b.eval(t - 0.0015));
                    assert!(b.eval(2.0 - t) < b.eval(2.0 - t + 0.0015));
                }
            }
        }
    }

    fn check_invariants(g: &CalibrationDensity, k_expected: usize) {
        // normalisation
        let total = g.raw_integral() / g.normalizer();
        assert!((total - 1.0).abs() < 1e-8, "integral {total}");
        assert!(g.normalizer() > 0.9 && g.normalizer() < 1.1, "normaliser {}", g.normalizer());
        // positivity
        for i in 0..4096 {
            let t = TAU * i as f64 / 4096.0;
            // where the kernel estimate is itself at roundoff level only the sign floor applies
            let floor = if g.base().eval(t) < ZERO_DENSITY { -1e-12 } else { 0.0 };
            assert!(g.raw(t) > floor, "g({t}) = {}", g.raw(t));
        }
        // continuity of g and g' at every junction
        for &x in &g.knots() {
            let e = 1e-9;
            // one-sided limits, extrapolated to the junction
            let l = g.raw(x - e) + e * g.raw_derivative(x - e);
            let r = g.raw(x + e) - e * g.raw_derivative(x + e);
            assert!((l - r).abs() <= 1e-6 * l.abs().max(1e-12) + 1e-12, "g jump at {x}: {l} {r}");
            let dl = 2.0 * g.raw_derivative(x - e) - g.raw_derivative(x - 2.0 * e);
            let dr = 2.0 * g.raw_derivative(x + e) - g.raw_derivative(x + 2.0 * e);
            let scale = dl.abs().max(dr.abs()).max(1e-6);
            assert!((dl - dr).abs() <= 1e-6 * scale + 1e-7, "g' jump at {x}: {dl} {dr}");
        }
        // turning points of g coincide with those of the kernel estimate
        let tp = g.find_turning_points(1 << 14).unwrap();
        assert_eq!(tp.modes.len(), k_expected, "{tp:?}");
        assert_eq!(tp.antimodes.len(), k_expected);
        // near-tangencies flagged by the relative tolerance in flat stretches
        // must still have a strictly one-signed derivative
        for &z in tp.saddles.iter().filter(|&&z| g.base().eval(z) > 1e-9) {
            let sign = g.raw_derivative(z).signum();
            assert!(sign != 0.0);
            for i in -50..=50 {
                assert_eq!(g.raw_derivative(z + i as f64 * 1e-4).signum(), sign, "g' vanishes near {z}");
            }
        }

        let base = g.turning_points();
        for (a, b) in tp.modes.iter().zip(&base.modes).chain(tp.antimodes.iter().zip(&base.antimodes)) {
            assert!(wrapped_distance((*a).into(), (*b).into()) < 1e-6, "{a} vs {b}");
        }
        // curvature ratios before normalisation
        for nb in g.neighborhoods() {
            let t = nb.theta;
            // central difference of the analytic first derivative
            let h = 1e-3 * nb.bump.eta / nb.bump.exponent().max(1.0).sqrt();
            let fd2 = (g.raw_derivative(t + h) - g.raw_derivative(t - h)) / (2.0 * h);
            let ratio = fd2.abs() / g.raw(t).powi(3);
            assert!((ratio - nb.d_hat).abs() <= 1e-4 * nb.d_hat.max(1e-9) + 1e-9, "{ratio} vs {}", nb.d_hat);
        }
    }

    #[test]
    fn invariants_on_random_samples() {
        let opts = CalibrationOptions::default();
        let mut done = 0;
        for seed in 0..50u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let model = named_model(if seed % 2 == 0 { 1 } else { 11 }).unwrap();
            let n = 50 + (seed as usize % 4) * 50;
            let x = model.sample(n, &mut rng).unwrap();
            for k in 1..=2 {
                let g = build_calibration(&x, k, &opts).unwrap();
                let modes = g.turning_points().modes.len();
                check_invariants(&g, modes);
                assert!(modes <= k);
                done += 1;
            }
        }
        assert_eq!(done, 100);
    }

    #[test]
    fn unmodified_outside_neighbourhoods() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = named_model(11).unwrap().sample(200, &mut rng).unwrap();
        let base = KdeModel::new(Arc::new(x.clone()), 0.5).unwrap();
        let k = base.count_modes(1024).unwrap();
        let g = build_with_concentrations(Arc::new(x), 0.5, 0.7, &CalibrationOptions::default()).unwrap();
        assert!(g.saddle_neighborhoods().is_empty());
        assert_eq!(g.turning_points().modes.len(), k);
        for i in 0..500 {
            let t = TAU * i as f64 / 500.0;
            if g.segment_tag(t) == SegmentTag::Base {
                assert_eq!(g.raw(t), base.eval(t));
            }
        }
    }

    #[test]
    fn saddle_neighbourhood_is_a_monotone_link() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = Arc::new(named_model(1).unwrap().sample(100, &mut rng).unwrap());
        let base = KdeModel::new(x.clone(), 0.3).unwrap();
        let plugin = KdeModel::new(x, 0.6).unwrap();
        let mut tp = find_turning_points(&base, 1024).unwrap();
        assert_eq!(tp.modes.len(), 1);
        // declare a point on the rising flank a saddle
        let (lo, hi) = (tp.antimodes[0], tp.modes[0]);
        let hi = if hi < lo { hi + TAU } else { hi };
        let zeta = reduce(0.5 * (lo + hi));
        tp.saddles.push(zeta);
        let g = assemble(&base, &plugin, &tp, DEFAULT_SIGMA, DEFAULT_VARPI).unwrap();
        assert_eq!(g.saddle_neighborhoods().len(), 1);
        let sd = &g.saddle_neighborhoods()[0];
        assert_eq!(g.segment_tag(zeta), SegmentTag::Saddle);
        let dir = (sd.link.a1 - sd.link.a0).signum();
        for i in 1..200 {
            let t = sd.link.u + (sd.link.v - sd.link.u) * i as f64 / 200.0;
            assert!(dir * g.raw_derivative(t) > 0.0);
        }
        for &z in &[sd.link.u, sd.link.v] {
            assert!((g.raw(z - 1e-9) - g.raw(z + 1e-9)).abs() < 1e-8);
            assert!((g.raw_derivative(z - 1e-9) - g.raw_derivative(z + 1e-9)).abs() < 1e-6);
        }
    }

    #[test]
    fn sampler_matches_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = named_model(11).unwrap().sample(200, &mut rng).unwrap();
        let g = build_calibration(&x, 2, &CalibrationOptions::default()).unwrap();
        let mut draws: Vec<f64> = (0..100_000).map(|_| g.draw(&mut rng)).collect();
        draws.sort_by(f64::total_cmp);
        let n = draws.len() as f64;
        let ks = draws
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let c = g.table_cdf(t);
                (c - i as f64 / n).abs().max((c - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "{ks}");
        // table agrees with the normalised density
        let q = gauss_legendre_composite(|t| g.eval(t), 0.0, PI, 400);
        assert!((g.table_cdf(PI) - q).abs() < 1e-4);
    }

    #[test]
    fn sampler_is_deterministic_and_centred() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = named_model(5).unwrap().sample(300, &mut rng).unwrap();
        let g = build_calibration(&x, 1, &CalibrationOptions::default()).unwrap();
        let a = sample_calibration(&g, 10_000, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = sample_calibration(&g, 10_000, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a.angles(), b.angles());
        let (mean, _) = a.mean_direction();
        let mode = g.turning_points().modes[0];
        assert!(wrapped_distance(mean.into(), mode.into()) < 0.1);
    }
}
