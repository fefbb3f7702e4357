//! Robust empirical semivariogram and a weighted least-squares exponential
//! fit.

use serde::Serialize;

use crate::error::{Error, Result};

pub const EARTH_RADIUS_KM: f64 = 6371.0088;
pub const BINS: usize = 15;
pub const MIN_CELLS: usize = 30;
const MIN_VARIANCE: f64 = 1e-12;

/// Great-circle distance in km between `(lat, lon)` points in degrees.
pub fn haversine_km(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (la1, lo1) = (a.0.to_radians(), a.1.to_radians());
    let (la2, lo2) = (b.0.to_radians(), b.1.to_radians());
    let s = ((la2 - la1) / 2.0).sin().powi(2) + la1.cos() * la2.cos() * ((lo2 - lo1) / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * s.sqrt().min(1.0).asin()
}

/// `γ(h) = nugget + sill·(1 − e^{−h/range})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VariogramModel {
    pub nugget: f64,
    pub sill: f64,
    pub range: f64,
    /// True when the fit failed and the fallback model was used.
    pub fallback: bool,
}

impl VariogramModel {
    pub fn gamma(&self, h: f64) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        self.nugget + self.sill * (1.0 - (-h / self.range).exp())
    }

    /// Point variance `σ̂ = nugget + sill`.
    pub fn total_variance(&self) -> f64 {
        self.nugget + self.sill
    }

    /// `1 − γ(h)/σ̂` clamped to `[0, 1]`; the flag reports whether clamping
    /// changed the value.
    pub fn correlation(&self, h: f64) -> (f64, bool) {
        let r = 1.0 - self.gamma(h) / self.total_variance();
        let c = r.clamp(0.0, 1.0);
        (c, c != r)
    }

    /// Pure-nugget model with the given variance.
    pub fn uncorrelated(variance: f64, range: f64) -> VariogramModel {
        VariogramModel { nugget: 0.0, sill: variance.max(MIN_VARIANCE), range: range.max(f64::MIN_POSITIVE), fallback: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalVariogram {
    pub lags: Vec<f64>,
    pub gamma: Vec<f64>,
    pub counts: Vec<usize>,
}

fn pair_distances(points: &[(f64, f64)]) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for i in 0..points.len() {
        for j in 0..i {
            out.push((i, j, haversine_km(points[i], points[j])));
        }
    }
    out
}

/// Cressie–Hawkins estimator on [`BINS`] equal bins up to half the largest
/// pairwise distance. Empty bins are omitted.
pub fn robust_empirical(points: &[(f64, f64)], values: &[f64]) -> EmpiricalVariogram {
    let pairs = pair_distances(points);
    let max_lag = pairs.iter().map(|p| p.2).fold(0.0, f64::max) / 2.0;
    let width = max_lag / BINS as f64;
    let mut sums = vec![0.0; BINS];
    let mut lag_sums = vec![0.0; BINS];
    let mut counts = vec![0usize; BINS];
    if width > 0.0 {
        for &(i, j, h) in &pairs {
            if h <= 0.0 || h > max_lag {
                continue;
            }
            let b = (((h / width).ceil() as usize).max(1) - 1).min(BINS - 1);
            sums[b] += (values[i] - values[j]).abs().sqrt();
            lag_sums[b] += h;
            counts[b] += 1;
        }
    }
    let mut v = EmpiricalVariogram { lags: vec![], gamma: vec![], counts: vec![] };
    for b in 0..BINS {
        if counts[b] == 0 {
            continue;
        }
        let n = counts[b] as f64;
        v.lags.push(lag_sums[b] / n);
        v.gamma.push((sums[b] / n).powi(4) / (2.0 * (0.457 + 0.494 / n)));
        v.counts.push(counts[b]);
    }
    v
}

/// Weighted least squares of `nugget + sill·s(h)` for fixed basis values `s`.
/// Returns `(nugget, sill, loss)` with both coefficients kept nonnegative.
fn linear_fit(basis: &[f64], target: &[f64], weights: &[f64]) -> (f64, f64, f64) {
    let loss = |a: f64, b: f64| -> f64 {
        basis.iter().zip(target).zip(weights).map(|((s, t), w)| w * (a + b * s - t).powi(2)).sum()
    };
    let (mut sw, mut ss, mut st, mut sss, mut sst) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((s, t), w) in basis.iter().zip(target).zip(weights) {
        sw += w;
        ss += w * s;
        st += w * t;
        sss += w * s * s;
        sst += w * s * t;
    }
    let det = sw * sss - ss * ss;
    let mut candidates = Vec::with_capacity(3);
    if det.abs() > 1e-300 {
        let a = (sss * st - ss * sst) / det;
        let b = (sw * sst - ss * st) / det;
        if a >= 0.0 && b >= 0.0 {
            candidates.push((a, b));
        }
    }
    // boundary solutions
    if sss > 0.0 {
        candidates.push((0.0, (sst / sss).max(0.0)));
    }
    if sw > 0.0 {
        candidates.push(((st / sw).max(0.0), 0.0));
    }
    candidates
        .into_iter()
        .map(|(a, b)| (a, b, loss(a, b)))
        .min_by(|x, y| x.2.total_cmp(&y.2))
        .unwrap_or((0.0, 0.0, f64::INFINITY))
}

fn fit_for_range(v: &EmpiricalVariogram, range: f64) -> (f64, f64, f64) {
    let basis: Vec<f64> = v.lags.iter().map(|h| 1.0 - (-h / range).exp()).collect();
    // iteratively reweighted with Cressie's N(h)/γ(h)² weights
    let floor = v.gamma.iter().cloned().fold(0.0, f64::max) * 1e-6 + 1e-300;
    let mut weights: Vec<f64> = v.counts.iter().zip(&v.gamma).map(|(n, g)| *n as f64 / g.max(floor).powi(2)).collect();
    let mut fit = linear_fit(&basis, &v.gamma, &weights);
    for _ in 0..5 {
        weights = v
            .counts
            .iter()
            .zip(&basis)
            .map(|(n, s)| *n as f64 / (fit.0 + fit.1 * s).max(floor).powi(2))
            .collect();
        fit = linear_fit(&basis, &v.gamma, &weights);
    }
    // compare ranges on a common, range-independent loss
    let base: Vec<f64> = v.counts.iter().zip(&v.gamma).map(|(n, g)| *n as f64 / g.max(floor).powi(2)).collect();
    let loss = basis
        .iter()
        .zip(&v.gamma)
        .zip(&base)
        .map(|((s, g), w)| w * (fit.0 + fit.1 * s - g).powi(2))
        .sum();
    (fit.0, fit.1, loss)
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

fn variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)
}

/// Exponential model fitted to the robust empirical variogram. The range is
/// profiled over a log grid and refined by golden section; nugget and sill
/// are solved exactly for each range. When no positive fit exists the
/// fallback `nugget = 0`, `sill = sample variance`, `range = median distance`
/// is returned with `fallback = true`.
pub fn fit_variogram(points: &[(f64, f64)], values: &[f64]) -> Result<VariogramModel> {
    if points.len() != values.len() {
        return Err(Error::InvalidArgument("points and values differ in length".into()));
    }
    if points.len() < MIN_CELLS {
        return Err(Error::InvalidArgument(format!("variogram needs at least {MIN_CELLS} cells, got {}", points.len())));
    }
    let fallback = || {
        let d = median(pair_distances(points).into_iter().map(|p| p.2).collect());
        log::warn!("variogram fit failed; using the fallback model");
        VariogramModel::uncorrelated(variance(values), d)
    };
    let v = robust_empirical(points, values);
    if v.lags.len() < 3 || v.gamma.iter().all(|g| *g <= 0.0) {
        return Ok(fallback());
    }
    let max_lag = v.lags.iter().cloned().fold(0.0, f64::max);
    // practical range (3·range) kept within the fitted lags
    let (lo, hi) = ((max_lag * 1e-3).ln(), (max_lag / 3.0).ln());
    let steps = 60;
    let loss_at = |t: f64| fit_for_range(&v, t.exp()).2;
    let grid: Vec<f64> = (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect();
    let best = (0..=steps).min_by(|&a, &b| loss_at(grid[a]).total_cmp(&loss_at(grid[b]))).unwrap_or(0);
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(steps)]);
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let (mut fc, mut fd) = (loss_at(c), loss_at(d));
    while b - a > 1e-8 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = loss_at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = loss_at(d);
        }
    }
    let range = (0.5 * (a + b)).exp();
    let (nugget, sill, loss) = fit_for_range(&v, range);
    if !loss.is_finite() || !(nugget + sill > MIN_VARIANCE) || !(sill > 0.0) {
        let mut m = fallback();
        if nugget > MIN_VARIANCE {
            m.sill = nugget;
        }
        return Ok(m);
    }
    Ok(VariogramModel { nugget, sill, range, fallback: false })
}
