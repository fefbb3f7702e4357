//! Monte Carlo rejection-rate study over the built-in models.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{model_sample, named_model, ModelId};
use crate::rng::{derive_seed, stream_rng};
use crate::testing::{run_test, Method, TestOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub models: Vec<ModelId>,
    pub k: usize,
    pub n: Vec<usize>,
    pub reps: usize,
    pub b: usize,
    pub alphas: Vec<f64>,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub workers: Option<usize>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            models: vec![ModelId(1)],
            k: 1,
            n: vec![50],
            reps: 500,
            b: 500,
            alphas: vec![0.01, 0.05, 0.10],
            methods: vec![Method::ExcessMass],
            seed: 0,
            workers: None,
        }
    }
}

impl StudyConfig {
    pub fn from_file(path: &Path) -> Result<StudyConfig> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))
    }

    fn validate(&self) -> Result<()> {
        if self.reps == 0 || self.b == 0 || self.k == 0 {
            return Err(Error::Config("reps, b and k must be positive".into()));
        }
        if self.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(Error::Config("alphas must lie in (0, 1)".into()));
        }
        for m in &self.models {
            named_model(m.0)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateCell {
    pub alpha: f64,
    pub rate: f64,
    /// `1.96·√(r(1−r)/reps)`.
    pub half_width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyRow {
    pub model: ModelId,
    pub n: usize,
    pub k: usize,
    pub method: Method,
    pub reps: usize,
    /// Replications whose test returned an error; excluded from the rates.
    pub failed: usize,
    pub rates: Vec<RateCell>,
    pub pvalues: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyTable {
    pub rows: Vec<StudyRow>,
}

/// Rejection rates with `pvalue ≤ α`, reps run in parallel on seed-derived
/// streams.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyTable> {
    cfg.validate()?;
    match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(|| study_rows(cfg)),
        None => study_rows(cfg),
    }
}

fn study_rows(cfg: &StudyConfig) -> Result<StudyTable> {
    let opts = TestOptions::default();
    let mut rows = Vec::new();
    for &model_id in &cfg.models {
        let model = named_model(model_id.0)?;
        for &n in &cfg.n {
            for &method in &cfg.methods {
                let outcomes: Vec<Option<f64>> = (0..cfg.reps as u64)
                    .into_par_iter()
                    .map(|rep| {
                        let data_seed = derive_seed(cfg.seed, &[model_id.0 as u64, n as u64, rep]);
                        let x = model_sample(&model, n, &mut stream_rng(data_seed, 0)).ok()?;
                        let test_seed = derive_seed(data_seed, &[method as u64]);
                        match run_test(method, &x, cfg.k, cfg.b, test_seed, &opts) {
                            Ok(r) => Some(r.pvalue),
                            Err(e) => {
                                log::warn!("{model_id} n={n} rep {rep}: {e}");
                                None
                            }
                        }
                    })
                    .collect();
                let pvalues: Vec<f64> = outcomes.iter().flatten().copied().collect();
                let done = pvalues.len().max(1) as f64;
                let rates = cfg
                    .alphas
                    .iter()
                    .map(|&alpha| {
                        let rate = pvalues.iter().filter(|&&p| p <= alpha).count() as f64 / done;
                        RateCell { alpha, rate, half_width: 1.96 * (rate * (1.0 - rate) / done).sqrt() }
                    })
                    .collect();
                rows.push(StudyRow {
                    model: model_id,
                    n,
                    k: cfg.k,
                    method,
                    reps: cfg.reps,
                    failed: cfg.reps - pvalues.len(),
                    rates,
                    pvalues,
                });
            }
        }
    }
    Ok(StudyTable { rows })
}

impl StudyTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["model", "n", "k", "method", "alpha", "rate", "half_width", "reps", "failed"])?;
        for r in &self.rows {
            for c in &r.rates {
                w.write_record([
                    r.model.to_string(),
                    r.n.to_string(),
                    r.k.to_string(),
                    r.method.to_string(),
                    c.alpha.to_string(),
                    c.rate.to_string(),
                    c.half_width.to_string(),
                    r.reps.to_string(),
                    r.failed.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// One line per model, n and method; entries read `rate(half-width)`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let alphas: Vec<f64> = self.rows.first().map(|r| r.rates.iter().map(|c| c.alpha).collect()).unwrap_or_default();
        let _ = write!(out, "{:<6} {:>6} {:>3} {:<12}", "model", "n", "k", "method");
        for a in &alphas {
            let _ = write!(out, " {:>14}", format!("α={a}"));
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{:<6} {:>6} {:>3} {:<12}", r.model.to_string(), r.n, r.k, r.method.name());
            for c in &r.rates {
                let _ = write!(out, " {:>14}", format!("{:.3}({:.3})", c.rate, c.half_width));
            }
            if r.failed > 0 {
                let _ = write!(out, "  [{} failed]", r.failed);
            }
            out.push('\n');
        }
        out
    }
}
