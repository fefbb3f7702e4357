//! Wrapped-normal kernel density estimation on the circle.
//!
//! With concentration `ν ∈ (0, 1)` the estimator has the Fourier form
//!
//! ```text
//! f(θ) = 1/(2πn) Σ_i [1 + 2 Σ_{p≥1} ν^{p²} cos(p(θ − Θ_i))]
//! ```
//!
//! which we evaluate through the empirical trigonometric moments of the
//! sample. The series is truncated at the first `p` with `ν^{p²}` below the
//! series tolerance.

use std::cell::RefCell;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::circular::{reduce, CircularSample};
use crate::error::{Error, Result};

pub const SERIES_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_GRID: usize = 1024;
pub const SADDLE_TOLERANCE: f64 = 1e-8;
pub const ROOT_TOLERANCE: f64 = 1e-10;
const MAX_GRID: usize = 1 << 16;
/// Below this the density is recomputed by direct summation.
const TAIL_SWITCH: f64 = 1e-9;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Number of series terms kept for concentration `nu`.
pub fn series_terms(nu: f64, tolerance: f64) -> usize {
    if nu <= 0.0 {
        return 0;
    }
    if nu < tolerance {
        return 0;
    }
    ((tolerance.ln() / nu.ln()).sqrt().floor() as usize).max(1)
}

/// Empirical trigonometric moments `(1/n) Σ cos(pΘ_i)`, `(1/n) Σ sin(pΘ_i)` for `p = 1..=order`.
#[derive(Clone, Debug)]
pub struct TrigMoments {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TrigMoments {
    pub fn new(sample: &CircularSample, order: usize) -> TrigMoments {
        let mut cos = vec![0.0; order];
        let mut sin = vec![0.0; order];
        for &a in sample.angles() {
            let step = Complex64::new(a.cos(), a.sin());
            let mut z = step;
            for p in 0..order {
                cos[p] += z.re;
                sin[p] += z.im;
                z *= step;
                // renormalise periodically against drift
                if p % 64 == 63 {
                    let phase = (p + 2) as f64 * a;
                    z = Complex64::new(phase.cos(), phase.sin());
                }
            }
        }
        let n = sample.len() as f64;
        cos.iter_mut().for_each(|c| *c /= n);
        sin.iter_mut().for_each(|s| *s /= n);
        TrigMoments { cos, sin }
    }

    pub fn order(&self) -> usize {
        self.cos.len()
    }

    /// `p`-th moment, `p >= 1`.
    pub fn get(&self, p: usize) -> (f64, f64) {
        (self.cos[p - 1], self.sin[p - 1])
    }
}

/// A sample with moments cached up to the order needed at the largest
/// concentration of interest; hands out [`KdeModel`]s cheaply.
#[derive(Clone, Debug)]
pub struct KdeFamily {
    sample: Arc<CircularSample>,
    moments: TrigMoments,
    max_nu: f64,
}

impl KdeFamily {
    pub fn new(sample: Arc<CircularSample>, max_nu: f64) -> KdeFamily {
        let order = series_terms(max_nu, SERIES_TOLERANCE);
        let moments = TrigMoments::new(&sample, order);
        KdeFamily { sample, moments, max_nu }
    }

    pub fn sample(&self) -> &Arc<CircularSample> {
        &self.sample
    }

    pub fn model(&self, nu: f64) -> Result<KdeModel> {
        if !(nu > 0.0 && nu < 1.0) {
            return Err(Error::InvalidConcentration(nu));
        }
        if nu > self.max_nu {
            return KdeModel::new(self.sample.clone(), nu);
        }
        Ok(KdeModel::from_moments(self.sample.clone(), &self.moments, nu, SERIES_TOLERANCE))
    }
}

/// Kernel density estimate at a fixed concentration.
#[derive(Clone, Debug)]
pub struct KdeModel {
    sample: Arc<CircularSample>,
    nu: f64,
    series_tolerance: f64,
    // ν^{p²}·C_p and ν^{p²}·S_p for p = 1..=P
    cos_coef: Vec<f64>,
    sin_coef: Vec<f64>,
}

impl KdeModel {
    pub fn new(sample: Arc<CircularSample>, nu: f64) -> Result<KdeModel> {
        KdeModel::with_tolerance(sample, nu, SERIES_TOLERANCE)
    }

    pub fn with_tolerance(sample: Arc<CircularSample>, nu: f64, series_tolerance: f64) -> Result<KdeModel> {
        if !(nu > 0.0 && nu < 1.0) {
            return Err(Error::InvalidConcentration(nu));
        }
        if !(series_tolerance > 0.0) {
            return Err(Error::InvalidArgument("series tolerance must be positive".into()));
        }
        let moments = TrigMoments::new(&sample, series_terms(nu, series_tolerance));
        Ok(KdeModel::from_moments(sample, &moments, nu, series_tolerance))
    }

    fn from_moments(sample: Arc<CircularSample>, moments: &TrigMoments, nu: f64, tol: f64) -> KdeModel {
        let terms = series_terms(nu, tol).min(moments.order());
        let log_nu = nu.ln();
        let mut cos_coef = Vec::with_capacity(terms);
        let mut sin_coef = Vec::with_capacity(terms);
        for p in 1..=terms {
            let w = (log_nu * (p * p) as f64).exp();
            let (c, s) = moments.get(p);
            cos_coef.push(w * c);
            sin_coef.push(w * s);
        }
        KdeModel { sample, nu, series_tolerance: tol, cos_coef, sin_coef }
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn series_tolerance(&self) -> f64 {
        self.series_tolerance
    }

    pub fn terms(&self) -> usize {
        self.cos_coef.len()
    }

    pub fn sample(&self) -> &Arc<CircularSample> {
        &self.sample
    }

    /// Variance of the wrapped normal kernel on the line, `σ² = −2 ln ν`.
    pub fn kernel_variance(&self) -> f64 {
        -2.0 * self.nu.ln()
    }

    /// Derivative of order `order` (0 gives the density itself).
    pub fn derivative(&self, theta: f64, order: u32) -> f64 {
        // d^r/dθ^r [c cos pθ + s sin pθ] = p^r [c cos(pθ + rπ/2) + s sin(pθ + rπ/2)]
        let step = Complex64::new(theta.cos(), theta.sin());
        let mut z = step;
        let mut acc = 0.0;
        for (i, (&c, &s)) in self.cos_coef.iter().zip(&self.sin_coef).enumerate() {
            let p = (i + 1) as f64;
            let (cs, sn) = match order % 4 {
                0 => (z.re, z.im),
                1 => (-z.im, z.re),
                2 => (-z.re, -z.im),
                _ => (z.im, -z.re),
            };
            acc += p.powi(order as i32) * (c * cs + s * sn);
            z *= step;
            if i % 64 == 63 {
                let phase = (i + 2) as f64 * theta;
                z = Complex64::new(phase.cos(), phase.sin());
            }
        }
        let base = if order == 0 { 1.0 } else { 0.0 };
        (base + 2.0 * acc) / TAU
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let v = self.derivative(theta, 0);
        if v > TAIL_SWITCH {
            v
        } else {
            // the series cancels to roundoff here and can dip below zero
            self.direct_eval(theta)
        }
    }

    /// `f(θ)` as a sum of positive wrapped-Gaussian terms.
    pub fn direct_eval(&self, theta: f64) -> f64 {
        let var = self.kernel_variance();
        let sd = var.sqrt();
        let wraps = (8.0 * sd / TAU).ceil() as i32 + 1;
        let norm = 1.0 / (sd * TAU.sqrt());
        let mut acc = 0.0;
        for &x in self.sample.angles() {
            let d = reduce(theta - x);
            for m in -wraps..=wraps {
                let u = d + TAU * m as f64;
                acc += (-0.5 * u * u / var).exp();
            }
        }
        norm * acc / self.sample.len() as f64
    }

    /// `∫_a^b f` for unrolled endpoints `a <= b` (may span more than one turn).
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let mut acc = 0.0;
        for (i, (&c, &s)) in self.cos_coef.iter().zip(&self.sin_coef).enumerate() {
            let p = (i + 1) as f64;
            let (sb, cb) = (p * b).sin_cos();
            let (sa, ca) = (p * a).sin_cos();
            acc += (c * (sb - sa) - s * (cb - ca)) / p;
        }
        (b - a) / TAU + acc / PI
    }

    /// Probability of the arc traversed counterclockwise from `from` to `to`.
    /// A difference of exactly `2π` is the full circle.
    pub fn cdf_arc(&self, from: f64, to: f64) -> f64 {
        let d = to - from;
        let len = if (0.0..=TAU).contains(&d) { d } else { reduce(d) };
        self.integral(from, from + len)
    }

    /// Distribution function from the origin, `F(x) = ∫_0^x f`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.integral(0.0, reduce(x))
    }

    /// Values of the `order`-th derivative on the uniform grid `2πg/G`.
    pub fn grid_values(&self, grid: usize, order: u32) -> Vec<f64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); grid];
        for (i, (&c, &s)) in self.cos_coef.iter().zip(&self.sin_coef).enumerate() {
            let p = i + 1;
            let pf = p as f64;
            let rot = match order % 4 {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, 1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, -1.0),
            };
            buf[p % grid] += rot * pf.powi(order as i32) * Complex64::new(c, -s);
        }
        PLANNER.with(|pl| pl.borrow_mut().plan_fft_inverse(grid).process(&mut buf));
        let base = if order == 0 { 1.0 } else { 0.0 };
        buf.iter().map(|z| (base + 2.0 * z.re) / TAU).collect()
    }

    /// Number of local maxima detected on a grid of `grid` points.
    pub fn count_modes_on_grid(&self, grid: usize) -> Result<usize> {
        let d1 = self.grid_values(grid, 1);
        if is_flat(&d1) {
            return Err(Error::DegenerateDensity);
        }
        Ok(count_down_crossings(&d1, 1))
    }

    /// Mode count with the grid doubled from `base` until three successive
    /// resolutions agree.
    pub fn count_modes(&self, base: usize) -> Result<usize> {
        let mut fine = base * 4;
        loop {
            let d1 = self.grid_values(fine, 1);
            if is_flat(&d1) {
                return Err(Error::DegenerateDensity);
            }
            let c4 = count_down_crossings(&d1, 4);
            let c2 = count_down_crossings(&d1, 2);
            let c1 = count_down_crossings(&d1, 1);
            if (c4 == c2 && c2 == c1) || fine >= MAX_GRID {
                return Ok(c1);
            }
            fine *= 2;
        }
    }
}

fn is_flat(d1: &[f64]) -> bool {
    d1.iter().fold(0.0f64, |m, v| m.max(v.abs())) < 1e-13
}

/// Relative level below which derivative values are treated as zero, so that
/// truncation ripple in the far tails does not register as turning points.
const NOISE_FLOOR: f64 = 1e-9;
const NEGLIGIBLE_DENSITY: f64 = 1e-6;

/// A change of sign of `f'` between grid indices `from` (last point of the old
/// sign) and `to` (first point of the new sign), ignoring values within the
/// noise floor. `to` may wrap past the end of the grid.
#[derive(Clone, Copy, Debug)]
struct Crossing {
    from: usize,
    to: usize,
    up: bool,
}

/// Sign changes of `values[0], values[stride], …` taken cyclically, with
/// hysteresis at `NOISE_FLOOR · max|values|`. Indices are in units of the
/// full array.
fn crossings(values: &[f64], stride: usize) -> Vec<Crossing> {
    let m = values.len() / stride;
    let at = |g: usize| values[(g % m) * stride];
    let (start, top) = (0..m).fold((0, 0.0f64), |(bi, bv), g| if at(g).abs() > bv { (g, at(g).abs()) } else { (bi, bv) });
    let thr = NOISE_FLOOR * top;
    let mut out = Vec::new();
    let mut positive = at(start) > 0.0;
    let mut last = start;
    for g in start + 1..=start + m {
        let v = at(g);
        if v.abs() <= thr {
            continue;
        }
        if (v > 0.0) != positive {
            out.push(Crossing { from: (last % m) * stride, to: (g % m) * stride, up: positive });
            positive = v > 0.0;
        }
        last = g;
    }
    out
}

/// Number of local maxima (`+ → −` changes of `f'`) on the strided grid.
fn count_down_crossings(values: &[f64], stride: usize) -> usize {
    crossings(values, stride).iter().filter(|c| c.up).count()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TurningKind {
    Mode,
    Antimode,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct TurningPoint {
    pub angle: f64,
    pub kind: TurningKind,
}

/// Modes, antimodes and saddle points of a density.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TurningPointSet {
    pub modes: Vec<f64>,
    pub antimodes: Vec<f64>,
    pub saddles: Vec<f64>,
}

impl TurningPointSet {
    /// Modes and antimodes merged in increasing angle.
    pub fn ordered(&self) -> Vec<TurningPoint> {
        let mut all: Vec<TurningPoint> = self
            .modes
            .iter()
            .map(|&angle| TurningPoint { angle, kind: TurningKind::Mode })
            .chain(self.antimodes.iter().map(|&angle| TurningPoint { angle, kind: TurningKind::Antimode }))
            .collect();
        all.sort_by(|a, b| a.angle.total_cmp(&b.angle));
        all
    }

    /// Modes and antimodes alternate around the circle.
    pub fn alternates(&self) -> bool {
        let all = self.ordered();
        self.modes.len() == self.antimodes.len()
            && all.windows(2).all(|w| w[0].kind != w[1].kind)
            && (all.len() < 2 || all[0].kind != all[all.len() - 1].kind)
    }
}

/// Turning points of a smooth periodic function from its derivative sampled on
/// a uniform grid. Crossing direction classifies modes and antimodes; grid
/// minima of `|f'|` that touch zero without a sign change, where the function
/// itself is not negligible, are saddles.
pub(crate) fn turning_points_of<D1>(d0_grid: &[f64], d1_grid: &[f64], d1: D1, saddle_tolerance: f64) -> Result<TurningPointSet>
where
    D1: Fn(f64) -> f64,
{
    let grid = d1_grid.len();
    let h = TAU / grid as f64;
    let scale = d1_grid.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale < 1e-13 {
        return Err(Error::DegenerateDensity);
    }
    let mut set = TurningPointSet::default();
    for c in crossings(d1_grid, 1) {
        let mut span = c.to as f64 - c.from as f64;
        if span <= 0.0 {
            span += grid as f64;
        }
        let (mut lo, mut hi) = (c.from as f64 * h, (c.from as f64 + span) * h);
        while hi - lo > ROOT_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            if (d1(mid) > 0.0) == c.up {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = reduce(0.5 * (lo + hi));
        if c.up {
            set.modes.push(root);
        } else {
            set.antimodes.push(root);
        }
    }
    // tangencies: local minima of |f'| without a sign change
    let level = NEGLIGIBLE_DENSITY * d0_grid.iter().fold(0.0f64, |m, v| m.max(*v));
    for g in 0..grid {
        let prev = d1_grid[(g + grid - 1) % grid];
        let cur = d1_grid[g];
        let next = d1_grid[(g + 1) % grid];
        let same = (prev > 0.0) == (cur > 0.0) && (cur > 0.0) == (next > 0.0);
        if !same || cur.abs() > prev.abs() || cur.abs() > next.abs() || d0_grid[g] < level {
            continue;
        }
        let (mut a, mut b) = ((g as f64 - 1.0) * h, (g as f64 + 1.0) * h);
        let invphi = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - invphi * (b - a);
        let mut d = a + invphi * (b - a);
        while b - a > ROOT_TOLERANCE {
            if d1(c).abs() < d1(d).abs() {
                b = d;
            } else {
                a = c;
            }
            c = b - invphi * (b - a);
            d = a + invphi * (b - a);
        }
        let z = 0.5 * (a + b);
        if d1(z).abs() <= saddle_tolerance * scale {
            let z = reduce(z);
            let near_turning = set
                .modes
                .iter()
                .chain(&set.antimodes)
                .any(|&t| crate::circular::wrapped_distance(t.into(), z.into()) < 2.0 * h);
            if !near_turning && !set.saddles.iter().any(|&s| (s - z).abs() < 2.0 * h) {
                set.saddles.push(z);
            }
        }
    }
    set.modes.sort_by(f64::total_cmp);
    set.antimodes.sort_by(f64::total_cmp);
    set.saddles.sort_by(f64::total_cmp);
    Ok(set)
}

/// Locate modes, antimodes and saddles of `model` on a `grid_size` grid,
/// refining each by bisection to [`ROOT_TOLERANCE`].
pub fn find_turning_points(model: &KdeModel, grid_size: usize) -> Result<TurningPointSet> {
    find_turning_points_with(model, grid_size, SADDLE_TOLERANCE)
}

pub fn find_turning_points_with(model: &KdeModel, grid_size: usize, saddle_tolerance: f64) -> Result<TurningPointSet> {
    if grid_size < 256 {
        return Err(Error::InvalidArgument(format!("grid size {grid_size} < 256")));
    }
    let d0 = model.grid_values(grid_size, 0);
    let d1 = model.grid_values(grid_size, 1);
    turning_points_of(&d0, &d1, |t| model.derivative(t, 1), saddle_tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre_composite;

    fn sample(v: &[f64]) -> Arc<CircularSample> {
        Arc::new(CircularSample::new(v.to_vec()).unwrap())
    }

    // direct sum of wrapped Gaussians, independent of the Fourier route
    fn wrapped_gauss(sample: &CircularSample, nu: f64, theta: f64) -> f64 {
        let var = -2.0 * nu.ln();
        let norm = 1.0 / (2.0 * PI * var).sqrt();
        let mut total = 0.0;
        for &x in sample.angles() {
            for k in -10..=10 {
                let d = theta - x + TAU * k as f64;
                total += norm * (-d * d / (2.0 * var)).exp();
            }
        }
        total / sample.len() as f64
    }

    // theta-function series summed to a fixed large number of terms
    fn one_point_series(nu: f64, theta: f64, terms: usize) -> f64 {
        let s: f64 = (1..=terms).map(|p| nu.powi((p * p) as i32) * (p as f64 * theta).cos()).sum();
        (1.0 + 2.0 * s) / TAU
    }

    #[test]
    fn uniform_limit() {
        let m = KdeModel::new(sample(&[0.3, 1.0, 4.0]), 1e-13).unwrap();
        assert!((m.eval(2.0) - 1.0 / TAU).abs() < 1e-15);
        assert!((m.cdf_arc(1.0, 1.0 + PI) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn one_point_center_matches_series() {
        let m = KdeModel::new(sample(&[0.0]), 0.5).unwrap();
        let expect = one_point_series(0.5, 0.0, 40);
        assert!((m.eval(0.0) - expect).abs() < 1e-12, "{} vs {}", m.eval(0.0), expect);
    }

    #[test]
    fn agrees_with_wrapped_gaussian_sum() {
        let s = sample(&[0.1, 2.0, 2.2, 3.14, 5.9, 6.2]);
        for &nu in &[0.3, 0.7, 0.95] {
            let m = KdeModel::new(s.clone(), nu).unwrap();
            for i in 0..50 {
                let t = i as f64 * 0.127;
                assert!((m.eval(t) - wrapped_gauss(&s, nu, t)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn positive_in_empty_tails() {
        // two tight clusters leave a gap where the series is pure roundoff
        let s = sample(&[1.0, 1.02, 1.05, 4.1, 4.12, 4.15]);
        let m = KdeModel::new(s.clone(), 0.995).unwrap();
        for i in 0..2000 {
            let t = TAU * i as f64 / 2000.0;
            let v = m.eval(t);
            assert!(v > 0.0, "f({t}) = {v}");
            let exact = wrapped_gauss(&s, 0.995, t);
            assert!((v - exact).abs() <= 1e-10 * exact.max(1e-3), "{v} vs {exact}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let s = sample(&[0.5, 1.7, 2.9, 3.3, 5.0]);
        let m = KdeModel::new(s, 0.8).unwrap();
        let h = 1e-5;
        for i in 0..40 {
            let t = 0.05 + i as f64 * 0.15;
            let fd1 = (m.eval(t + h) - m.eval(t - h)) / (2.0 * h);
            let fd2 = (m.derivative(t + h, 1) - m.derivative(t - h, 1)) / (2.0 * h);
            let d1 = m.derivative(t, 1);
            let d2 = m.derivative(t, 2);
            assert!((fd1 - d1).abs() <= 1e-6 * d1.abs().max(1e-3), "{fd1} {d1}");
            assert!((fd2 - d2).abs() <= 1e-6 * d2.abs().max(1e-3), "{fd2} {d2}");
        }
    }

    #[test]
    fn derivative_integrates_to_zero() {
        let m = KdeModel::new(sample(&[0.5, 1.7, 2.9]), 0.9).unwrap();
        let v = gauss_legendre_composite(|t| m.derivative(t, 1), 0.0, TAU, 200);
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn cdf_matches_quadrature_and_full_circle() {
        let m = KdeModel::new(sample(&[0.5, 1.7, 2.9, 6.0]), 0.85).unwrap();
        assert!((m.cdf_arc(1.3, 1.3 + TAU) - 1.0).abs() < 1e-13);
        let cases = [(0.2, 1.9), (5.5, 0.7), (3.0, 3.1)];
        for &(a, b) in &cases {
            let len = reduce(b - a);
            let q = gauss_legendre_composite(|t| m.eval(t), a, a + len, 400);
            assert!((m.cdf_arc(a, b) - q).abs() < 1e-8);
        }
    }

    #[test]
    fn grid_values_agree_with_pointwise() {
        let m = KdeModel::new(sample(&[0.5, 1.7, 2.9, 6.0]), 0.97).unwrap();
        for order in 0..3 {
            let g = m.grid_values(512, order);
            for i in (0..512).step_by(37) {
                let t = TAU * i as f64 / 512.0;
                assert!((g[i] - m.derivative(t, order)).abs() < 1e-9 * (1.0 + g[i].abs()));
            }
        }
    }

    #[test]
    fn two_antipodal_points_have_two_modes() {
        let m = KdeModel::new(sample(&[0.0, PI]), 0.9).unwrap();
        let tp = find_turning_points(&m, 1024).unwrap();
        assert_eq!(tp.modes.len(), 2);
        assert!(tp.alternates());
        let near = |x: f64, y: f64| crate::circular::wrapped_distance(x.into(), y.into()) < 1e-8;
        assert!(tp.modes.iter().any(|&t| near(t, 0.0)));
        assert!(tp.modes.iter().any(|&t| near(t, PI)));
    }

    #[test]
    fn turning_points_stable_under_grid_refinement() {
        let s = sample(&[0.2, 0.4, 1.9, 2.0, 2.1, 4.4, 4.6, 5.5]);
        let m = KdeModel::new(s, 0.93).unwrap();
        let a = find_turning_points(&m, 1024).unwrap();
        let b = find_turning_points(&m, 2048).unwrap();
        assert_eq!(a.modes.len(), b.modes.len());
        for (x, y) in a.modes.iter().zip(&b.modes).chain(a.antimodes.iter().zip(&b.antimodes)) {
            assert!((x - y).abs() < 1e-8);
        }
        for &t in &a.modes {
            assert!(m.derivative(t, 1).abs() < 1e-6);
        }
    }

    #[test]
    fn small_grid_rejected() {
        let m = KdeModel::new(sample(&[0.0]), 0.5).unwrap();
        assert!(find_turning_points(&m, 100).is_err());
        assert!(KdeModel::new(sample(&[0.0]), 1.0).is_err());
    }
}
