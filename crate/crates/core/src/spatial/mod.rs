//! Hierarchical FDR over a grid of cells: patch testing, then trimming
//! inside the rejected patches.

pub mod fdr;
pub mod landcover;
pub mod patches;
pub mod variogram;

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};
use crate::special::norm_isf;

pub use fdr::{conditional_pvalue, patch_pvalue, two_stage_bh, weighted_bh, ConditionalParams, PatchStatistic, WeightedBh};
pub use landcover::{aggregate_land_cover, CellLabel, LandClass, Pixel};
pub use patches::{build_patches, GridIndex, LabelGrid, Patch};
pub use variogram::{fit_variogram, haversine_km, VariogramModel};

const JEFFREYS_STREAM: u64 = 0x4A45_4646;

/// One grid cell with its test p-value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub id: usize,
    pub row: i64,
    pub col: i64,
    /// `(lat, lon)` of the centroid, degrees.
    pub centroid: (f64, f64),
    pub n: usize,
    pub pvalue: f64,
}

impl Cell {
    pub fn index(&self) -> GridIndex {
        (self.row, self.col)
    }
}

/// `Φ⁻¹(1 − p)`, with p-values of exactly 0 or 1 replaced by draws from
/// `Beta(1/2, B+1/2)` or `Beta(B+1/2, 1/2)`.
pub fn zscore_from_pvalue<R: Rng + ?Sized>(p: f64, b: usize, rng: &mut R) -> f64 {
    let bf = b as f64;
    let p = if p <= 0.0 {
        Beta::new(0.5, bf + 0.5).expect("valid beta").sample(rng)
    } else if p >= 1.0 {
        Beta::new(bf + 0.5, 0.5).expect("valid beta").sample(rng)
    } else {
        p
    };
    // a Beta draw can still round to an endpoint
    norm_isf(p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatchOutcome {
    pub id: usize,
    pub label: String,
    pub size: usize,
    pub statistic: PatchStatistic,
    pub rejected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellOutcome {
    pub id: usize,
    pub zscore: f64,
    pub patch: usize,
    /// Set only for cells of rejected patches.
    pub conditional_pvalue: Option<f64>,
    pub rejected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FdrOutcome {
    pub alpha_c: f64,
    pub alpha_r: f64,
    pub variogram: VariogramModel,
    pub patches: Vec<PatchOutcome>,
    /// Number of rejected patches.
    pub rejected_patch_count: usize,
    pub cutoff: f64,
    /// Cells in input order; cells outside every patch are absent.
    pub cells: Vec<CellOutcome>,
    pub rejected_cells: Vec<usize>,
    /// Pair correlations changed by clamping to `[0, 1]`.
    pub clamped_correlations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HierarchicalOptions {
    pub alpha_c: f64,
    pub alpha_r: f64,
    /// Bootstrap size behind the p-values, used for the Jeffreys draws.
    pub b: usize,
    pub seed: u64,
}

fn check_alpha(a: f64) -> Result<()> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidArgument(format!("level {a} outside (0, 1)")));
    }
    Ok(())
}

/// Patch testing followed by trimming. Cells whose position belongs to no
/// patch are ignored.
pub fn hierarchical_test(cells: &[Cell], patches: &[Patch], opts: &HierarchicalOptions) -> Result<FdrOutcome> {
    check_alpha(opts.alpha_c)?;
    check_alpha(opts.alpha_r)?;
    let position: HashMap<GridIndex, usize> = cells.iter().enumerate().map(|(i, c)| (c.index(), i)).collect();
    let members: Vec<Vec<usize>> = patches
        .iter()
        .map(|p| p.cells.iter().filter_map(|g| position.get(g).copied()).collect::<Vec<_>>())
        .collect();
    let mut patch_of = vec![None; cells.len()];
    for (j, m) in members.iter().enumerate() {
        for &i in m {
            patch_of[i] = Some(j);
        }
    }
    let tested: Vec<usize> = (0..cells.len()).filter(|&i| patch_of[i].is_some()).collect();
    if tested.is_empty() {
        return Err(Error::InvalidArgument("no cell belongs to a patch".into()));
    }

    let jeffreys = derive_seed(opts.seed, &[JEFFREYS_STREAM]);
    let z: Vec<f64> = cells
        .iter()
        .map(|c| zscore_from_pvalue(c.pvalue, opts.b, &mut stream_rng(jeffreys, c.id as u64)))
        .collect();

    let points: Vec<(f64, f64)> = tested.iter().map(|&i| cells[i].centroid).collect();
    let values: Vec<f64> = tested.iter().map(|&i| z[i]).collect();
    let variogram = if tested.len() >= variogram::MIN_CELLS {
        fit_variogram(&points, &values)?
    } else {
        log::warn!("{} cells are too few for a variogram; treating cells as uncorrelated", tested.len());
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        VariogramModel::uncorrelated(if var > 0.0 { var } else { 1.0 }, f64::MIN_POSITIVE)
    };
    let sigma = variogram.total_variance();
    let global_mean = values.iter().sum::<f64>() / values.len() as f64;

    let mut clamped = 0;
    let mut stats = Vec::with_capacity(patches.len());
    for m in &members {
        if m.is_empty() {
            stats.push(None);
            continue;
        }
        let l = m.len();
        let mut rho = vec![1.0; l * l];
        for a in 0..l {
            for b in 0..a {
                let (r, c) = variogram.correlation(haversine_km(cells[m[a]].centroid, cells[m[b]].centroid));
                clamped += c as usize;
                rho[a * l + b] = r;
                rho[b * l + a] = r;
            }
        }
        let zs: Vec<f64> = m.iter().map(|&i| z[i]).collect();
        stats.push(Some(patch_pvalue(&zs, sigma, &rho)));
    }

    let live: Vec<usize> = (0..patches.len()).filter(|&j| stats[j].is_some()).collect();
    let pvals: Vec<f64> = live.iter().map(|&j| stats[j].as_ref().unwrap().pvalue).collect();
    let sizes: Vec<f64> = live.iter().map(|&j| members[j].len() as f64).collect();
    let bh = weighted_bh(&pvals, &sizes, opts.alpha_c);
    let mut patch_rejected = vec![false; patches.len()];
    for &r in &bh.rejected {
        patch_rejected[live[r]] = true;
    }

    let mut conditional = vec![None; cells.len()];
    let mut cell_rejected = vec![false; cells.len()];
    if bh.count > 0 {
        let total = live.len() as f64;
        let null_share = ((total - bh.count as f64) / (1.0 - opts.alpha_c) / total).min(1.0);
        for &j in &live {
            if !patch_rejected[j] {
                continue;
            }
            let st = stats[j].as_ref().unwrap();
            let params = ConditionalParams { cutoff: bh.cutoff, null_share, mu: global_mean / st.std_error };
            let p: Vec<f64> = members[j]
                .iter()
                .zip(&st.member_correlation)
                .map(|(&i, &rho)| conditional_pvalue(z[i], rho, &params))
                .collect::<Result<_>>()?;
            for &r in &two_stage_bh(&p, opts.alpha_r) {
                cell_rejected[members[j][r]] = true;
            }
            for (&i, pv) in members[j].iter().zip(p) {
                conditional[i] = Some(pv);
            }
        }
    }
    if clamped > 0 {
        log::warn!("{clamped} pair correlations clamped to [0, 1]");
    }

    let patches_out = live
        .iter()
        .map(|&j| PatchOutcome {
            id: patches[j].id,
            label: patches[j].label.clone(),
            size: members[j].len(),
            statistic: stats[j].clone().unwrap(),
            rejected: patch_rejected[j],
        })
        .collect();
    let cells_out: Vec<CellOutcome> = tested
        .iter()
        .map(|&i| CellOutcome {
            id: cells[i].id,
            zscore: z[i],
            patch: patches[patch_of[i].unwrap()].id,
            conditional_pvalue: conditional[i],
            rejected: cell_rejected[i],
        })
        .collect();
    let rejected_cells = cells_out.iter().filter(|c| c.rejected).map(|c| c.id).collect();
    Ok(FdrOutcome {
        alpha_c: opts.alpha_c,
        alpha_r: opts.alpha_r,
        variogram,
        patches: patches_out,
        rejected_patch_count: bh.count,
        cutoff: bh.cutoff,
        cells: cells_out,
        rejected_cells,
        clamped_correlations: clamped,
    })
}
