//! Patch-level weighted FDR and the within-patch trimming procedure.

use serde::Serialize;

use crate::error::Result;
use crate::quadrature::adaptive;
use crate::special::{norm_isf, norm_pdf, norm_sf};

const QUAD_TOL: f64 = 1e-9;
const UPPER_SPAN: f64 = 12.0;
const LOWER_LIMIT: f64 = -14.0;
/// Above this the trimming correlation is treated as exactly one.
const RHO_ONE: f64 = 1.0 - 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatchStatistic {
    pub mean_z: f64,
    /// `σ̂_{Z̄}`.
    pub std_error: f64,
    pub pvalue: f64,
    /// Correlation of each member's z-score with the patch mean.
    pub member_correlation: Vec<f64>,
}

/// Patch p-value from member z-scores, point variance `sigma` and the
/// pairwise correlation matrix `rho` (row-major, `L×L`).
pub fn patch_pvalue(z: &[f64], sigma: f64, rho: &[f64]) -> PatchStatistic {
    let l = z.len();
    assert!(l > 0 && rho.len() == l * l);
    let lf = l as f64;
    let mean_z = z.iter().sum::<f64>() / lf;
    let mut pair_sum = 0.0;
    let mut row_sums = vec![0.0; l];
    for a in 0..l {
        for b in 0..l {
            if a != b {
                row_sums[a] += rho[a * l + b];
                if b < a {
                    pair_sum += rho[a * l + b];
                }
            }
        }
    }
    let std_error = sigma / lf * (lf + 2.0 * pair_sum).sqrt();
    let member_correlation = row_sums.iter().map(|s| ((1.0 + s) * sigma / (lf * std_error)).min(1.0)).collect();
    PatchStatistic { mean_z, std_error, pvalue: norm_sf(mean_z / std_error), member_correlation }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedBh {
    /// Indices into the input, smallest p-value first.
    pub rejected: Vec<usize>,
    pub count: usize,
    /// Threshold at the last rejection; 0 when nothing is rejected.
    pub cutoff: f64,
}

fn ascending(p: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    order
}

/// Step-up rule with thresholds proportional to cumulative weights.
pub fn weighted_bh(p: &[f64], weights: &[f64], alpha: f64) -> WeightedBh {
    assert_eq!(p.len(), weights.len());
    let order = ascending(p);
    let total: f64 = weights.iter().sum();
    let mut cum = 0.0;
    let mut count = 0;
    let mut cutoff = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        cum += weights[i];
        let t = cum / total * alpha;
        if p[i] <= t {
            count = rank + 1;
            cutoff = t;
        }
    }
    WeightedBh { rejected: order[..count].to_vec(), count, cutoff }
}

/// Number of rejections of the classical step-up rule with `m` hypotheses.
fn step_up(sorted: &[f64], m: f64, alpha: f64) -> usize {
    sorted.iter().enumerate().filter(|(i, p)| **p <= (*i + 1) as f64 / m * alpha).map(|(i, _)| i + 1).max().unwrap_or(0)
}

/// Two-stage step-up at `α' = α/(1+α)`; returns rejected indices.
pub fn two_stage_bh(p: &[f64], alpha: f64) -> Vec<usize> {
    let order = ascending(p);
    let sorted: Vec<f64> = order.iter().map(|&i| p[i]).collect();
    let a = alpha / (1.0 + alpha);
    let l = p.len();
    let k1 = step_up(&sorted, l as f64, a);
    if k1 == l {
        return order;
    }
    let k2 = step_up(&sorted, (l - k1) as f64, a);
    order[..k2].to_vec()
}

/// Inputs of the conditional p-value shared by the cells of one patch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionalParams {
    pub cutoff: f64,
    /// `Ĵ₀/J`, the estimated null share of patches.
    pub null_share: f64,
    /// `μ̂` for the patch.
    pub mu: f64,
}

/// Conditional p-value of a cell with z-score `z` and correlation `rho`
/// with its patch mean, given that the patch was rejected.
pub fn conditional_pvalue(z: f64, rho: f64, c: &ConditionalParams) -> Result<f64> {
    let q = norm_isf(c.cutoff);
    let r = c.null_share;
    let denom = r * c.cutoff + (1.0 - r) * norm_sf(q - c.mu);
    if !(denom > 0.0) {
        return Ok(1.0);
    }
    let numer = if rho >= RHO_ONE {
        // the inner tails become indicators of u > q and u > q − μ
        r * norm_sf(z.max(q)) + (1.0 - r) * norm_sf(z.max(q - c.mu))
    } else {
        let s = (1.0 - rho * rho).sqrt();
        let f = |u: f64| {
            (r * norm_sf((q - rho * u) / s) + (1.0 - r) * norm_sf((q - rho * u - c.mu) / s)) * norm_pdf(u)
        };
        let lo = z.max(LOWER_LIMIT);
        let hi = z.max(0.0) + UPPER_SPAN;
        if lo >= hi {
            0.0
        } else {
            // split where the inner tails switch so each panel is smooth
            let mut cuts = vec![lo, hi];
            if rho.abs() > 1e-12 {
                for t in [q / rho, (q - c.mu) / rho] {
                    if t > lo && t < hi {
                        cuts.push(t);
                    }
                }
            }
            cuts.sort_by(f64::total_cmp);
            let mut sum = 0.0;
            for w in cuts.windows(2) {
                sum += adaptive(f, w[0], w[1], QUAD_TOL)?;
            }
            sum
        }
    };
    Ok((numer / denom).clamp(0.0, 1.0))
}
