//! End-to-end run over gridded event records: jitter, grid, filter, per-cell
//! tests, patches, hierarchical FDR and output files.

pub mod fixture;

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::circular::CircularSample;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};
use crate::spatial::{build_patches, hierarchical_test, Cell, FdrOutcome, GridIndex, HierarchicalOptions, LabelGrid};
use crate::testing::excess_mass_test;

pub const DAYS_IN_YEAR: f64 = 366.0;
const JITTER_STREAM: u64 = 1;
const TEST_STREAM: u64 = 2;
const FDR_STREAM: u64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub lat: f64,
    pub lon: f64,
    pub day_of_year: u32,
    pub year: i32,
}

impl EventRecord {
    fn validate(&self) -> Result<()> {
        if !(1..=366).contains(&self.day_of_year) {
            return Err(Error::InvalidArgument(format!("day_of_year {} outside 1..=366", self.day_of_year)));
        }
        if !self.lat.is_finite() || !self.lon.is_finite() {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LowIncidenceRule {
    pub min_fires: usize,
    pub max_low_years: usize,
    pub span_years: i32,
    /// Scale `max_low_years` to the observed span instead of failing.
    pub scale_to_span: bool,
}

impl Default for LowIncidenceRule {
    fn default() -> Self {
        LowIncidenceRule { min_fires: 10, max_low_years: 7, span_years: 10, scale_to_span: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub cell_size: f64,
    pub k: usize,
    pub b: usize,
    pub alpha_c: f64,
    pub alpha_r: f64,
    pub seed: u64,
    pub workers: Option<usize>,
    pub low_incidence: LowIncidenceRule,
    pub events: PathBuf,
    pub labels: Option<PathBuf>,
    pub output: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            cell_size: 0.5,
            k: 1,
            b: 500,
            alpha_c: 0.01,
            alpha_r: 0.01,
            seed: 0,
            workers: None,
            low_incidence: LowIncidenceRule::default(),
            events: PathBuf::from("events.csv"),
            labels: None,
            output: PathBuf::from("out"),
        }
    }
}

impl PipelineConfig {
    /// Reads a TOML file; relative paths are resolved against its directory.
    pub fn from_file(path: &Path) -> Result<PipelineConfig> {
        let text = fs::read_to_string(path)?;
        let mut cfg: PipelineConfig = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut cfg.events);
        fix(&mut cfg.output);
        if let Some(l) = cfg.labels.as_mut() {
            fix(l);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size > 0.0) {
            return Err(Error::Config(format!("cell_size {} must be positive", self.cell_size)));
        }
        for (name, a) in [("alpha_c", self.alpha_c), ("alpha_r", self.alpha_r)] {
            if !(a > 0.0 && a <= 0.5) {
                return Err(Error::Config(format!("{name} {a} outside (0, 0.5]")));
            }
        }
        if self.k == 0 || self.b == 0 {
            return Err(Error::Config("k and b must be positive".into()));
        }
        Ok(())
    }
}

pub fn read_events(path: &Path) -> Result<Vec<EventRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let events = reader.deserialize().collect::<std::result::Result<Vec<EventRecord>, _>>()?;
    for e in &events {
        e.validate()?;
    }
    Ok(events)
}

/// `Θ = 2π(X + ε)/366` with `ε ~ U(−1, 0)`.
pub fn jitter_to_angles<R: Rng + ?Sized>(days: &[u32], rng: &mut R) -> Result<CircularSample> {
    if days.is_empty() {
        return Err(Error::EmptySample);
    }
    let angles: Vec<f64> = days
        .iter()
        .map(|&d| {
            if !(1..=366).contains(&d) {
                return Err(Error::InvalidArgument(format!("day_of_year {d} outside 1..=366")));
            }
            // ε in [−1, 0) keeps day 366 below 2π
            let e = rng.random::<f64>() - 1.0;
            Ok(TAU * (d as f64 + e) / DAYS_IN_YEAR)
        })
        .collect::<Result<_>>()?;
    CircularSample::new(angles)
}

/// Floor binning from the origin; points on a boundary fall in the higher cell.
pub fn cell_index(lat: f64, lon: f64, cell_size: f64) -> GridIndex {
    ((lat / cell_size).floor() as i64, (lon / cell_size).floor() as i64)
}

pub fn cell_centroid(at: GridIndex, cell_size: f64) -> (f64, f64) {
    ((at.0 as f64 + 0.5) * cell_size, (at.1 as f64 + 0.5) * cell_size)
}

/// Events grouped by cell, each group in a canonical order so the grid does
/// not depend on input order.
pub fn grid_events(events: &[EventRecord], cell_size: f64) -> BTreeMap<GridIndex, Vec<EventRecord>> {
    let mut grid: BTreeMap<GridIndex, Vec<EventRecord>> = BTreeMap::new();
    for e in events {
        grid.entry(cell_index(e.lat, e.lon, cell_size)).or_default().push(*e);
    }
    for v in grid.values_mut() {
        v.sort_by(|a, b| {
            (a.year, a.day_of_year)
                .cmp(&(b.year, b.day_of_year))
                .then(a.lat.total_cmp(&b.lat))
                .then(a.lon.total_cmp(&b.lon))
        });
    }
    grid
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DropReport {
    pub kept: usize,
    pub dropped: Vec<GridIndex>,
    pub first_year: i32,
    pub last_year: i32,
    pub max_low_years: usize,
}

/// Drops cells with fewer than `min_fires` events in more than
/// `max_low_years` years of the observed span.
pub fn filter_low_incidence(
    grid: BTreeMap<GridIndex, Vec<EventRecord>>,
    rule: &LowIncidenceRule,
) -> Result<(BTreeMap<GridIndex, Vec<EventRecord>>, DropReport)> {
    let years = grid.values().flatten().map(|e| e.year);
    let (first, last) = years.fold((i32::MAX, i32::MIN), |(lo, hi), y| (lo.min(y), hi.max(y)));
    if first > last {
        return Err(Error::NoEvents);
    }
    let span = last - first + 1;
    let mut max_low = rule.max_low_years;
    if span != rule.span_years {
        if !rule.scale_to_span {
            return Err(Error::SpanMismatch { observed: span, configured: rule.span_years });
        }
        max_low = (rule.max_low_years as f64 * span as f64 / rule.span_years as f64).floor() as usize;
        log::warn!("data span {span} years; low-incidence rule scaled to more than {max_low} years");
    }
    let mut report = DropReport { first_year: first, last_year: last, max_low_years: max_low, ..Default::default() };
    let mut kept = BTreeMap::new();
    for (at, events) in grid {
        let mut per_year = vec![0usize; span as usize];
        for e in &events {
            per_year[(e.year - first) as usize] += 1;
        }
        let low = per_year.iter().filter(|&&c| c < rule.min_fires).count();
        if low > max_low {
            report.dropped.push(at);
        } else {
            kept.insert(at, events);
        }
    }
    report.kept = kept.len();
    Ok((kept, report))
}

pub fn read_labels(path: &Path) -> Result<LabelGrid> {
    #[derive(Deserialize)]
    struct Row {
        row: i64,
        col: i64,
        label: String,
    }
    let mut grid = LabelGrid::new();
    for r in csv::Reader::from_path(path)?.deserialize::<Row>() {
        let r = r?;
        grid.insert((r.row, r.col), r.label.trim());
    }
    Ok(grid)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Reject,
    Retain,
    Unlabelled,
    Failed,
}

impl Decision {
    pub fn name(self) -> &'static str {
        match self {
            Decision::Reject => "reject",
            Decision::Retain => "retain",
            Decision::Unlabelled => "unlabelled",
            Decision::Failed => "failed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellRecord {
    pub id: usize,
    pub row: i64,
    pub col: i64,
    pub lat: f64,
    pub lon: f64,
    pub n: usize,
    pub pvalue: Option<f64>,
    pub zscore: Option<f64>,
    pub patch: Option<usize>,
    pub conditional_pvalue: Option<f64>,
    pub decision: Decision,
}

#[derive(Debug)]
pub struct PipelineRun {
    pub cells: Vec<CellRecord>,
    pub outcome: Option<FdrOutcome>,
    pub report: DropReport,
}

/// Cell tests and FDR without touching the file system.
pub fn analyse(events: &[EventRecord], labels: Option<&LabelGrid>, cfg: &PipelineConfig) -> Result<PipelineRun> {
    cfg.validate()?;
    if events.is_empty() {
        return Err(Error::NoEvents);
    }
    let grid = grid_events(events, cfg.cell_size);
    let (kept, report) = filter_low_incidence(grid, &cfg.low_incidence)?;
    let jitter_seed = derive_seed(cfg.seed, &[JITTER_STREAM]);
    let test_seed = derive_seed(cfg.seed, &[TEST_STREAM]);
    let kept: Vec<(GridIndex, Vec<EventRecord>)> = kept.into_iter().collect();

    let tested: Vec<(Option<f64>, usize)> = kept
        .par_iter()
        .map(|(at, events)| {
            let days: Vec<u32> = events.iter().map(|e| e.day_of_year).collect();
            let cell_seed = derive_seed(jitter_seed, &[at.0 as u64, at.1 as u64]);
            let result = jitter_to_angles(&days, &mut stream_rng(cell_seed, 0)).and_then(|x| {
                excess_mass_test(&x, cfg.k, cfg.b, derive_seed(test_seed, &[at.0 as u64, at.1 as u64]))
            });
            match result {
                Ok(r) => (Some(r.pvalue), days.len()),
                Err(e) => {
                    log::warn!("cell {:?} excluded: {e}", at);
                    (None, days.len())
                }
            }
        })
        .collect();

    let mut cells = Vec::new();
    let mut records = Vec::new();
    for (id, ((at, _), (p, n))) in kept.iter().zip(&tested).enumerate() {
        let (lat, lon) = cell_centroid(*at, cfg.cell_size);
        records.push(CellRecord {
            id,
            row: at.0,
            col: at.1,
            lat,
            lon,
            n: *n,
            pvalue: *p,
            zscore: None,
            patch: None,
            conditional_pvalue: None,
            decision: if p.is_some() { Decision::Unlabelled } else { Decision::Failed },
        });
        if let Some(p) = p {
            cells.push(Cell { id, row: at.0, col: at.1, centroid: (lat, lon), n: *n, pvalue: *p });
        }
    }

    let mut label_grid = match labels {
        Some(l) => l.clone(),
        None => {
            let mut g = LabelGrid::new();
            for c in &cells {
                g.insert(c.index(), "all");
            }
            g
        }
    };
    let usable: std::collections::HashSet<GridIndex> = cells.iter().map(Cell::index).collect();
    label_grid.retain(|at| usable.contains(&at));
    if label_grid.is_empty() {
        log::warn!("no tested cell carries a label; skipping the FDR stage");
        return Ok(PipelineRun { cells: records, outcome: None, report });
    }
    let patches = build_patches(&label_grid);
    let opts = HierarchicalOptions {
        alpha_c: cfg.alpha_c,
        alpha_r: cfg.alpha_r,
        b: cfg.b,
        seed: derive_seed(cfg.seed, &[FDR_STREAM]),
    };
    let outcome = hierarchical_test(&cells, &patches, &opts)?;
    for c in &outcome.cells {
        let r = &mut records[c.id];
        r.zscore = Some(c.zscore);
        r.patch = Some(c.patch);
        r.conditional_pvalue = c.conditional_pvalue;
        r.decision = if c.rejected { Decision::Reject } else { Decision::Retain };
    }
    Ok(PipelineRun { cells: records, outcome: Some(outcome), report })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_cells_csv<W: Write>(out: W, cells: &[CellRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "row", "col", "lat", "lon", "n", "pvalue", "zscore", "patch", "conditional_pvalue", "decision"])?;
    for c in cells {
        w.write_record([
            c.id.to_string(),
            c.row.to_string(),
            c.col.to_string(),
            c.lat.to_string(),
            c.lon.to_string(),
            c.n.to_string(),
            opt(c.pvalue),
            opt(c.zscore),
            c.patch.map(|p| p.to_string()).unwrap_or_default(),
            opt(c.conditional_pvalue),
            c.decision.name().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Cell squares as a GeoJSON feature collection (coordinates lon, lat).
pub fn geojson(cells: &[CellRecord], cell_size: f64) -> serde_json::Value {
    let features: Vec<serde_json::Value> = cells
        .iter()
        .map(|c| {
            let (s, w) = (c.row as f64 * cell_size, c.col as f64 * cell_size);
            let (n, e) = (s + cell_size, w + cell_size);
            json!({
                "type": "Feature",
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [[[w, s], [e, s], [e, n], [w, n], [w, s]]]
                },
                "properties": {
                    "id": c.id,
                    "n": c.n,
                    "pvalue": c.pvalue,
                    "zscore": c.zscore,
                    "patch": c.patch,
                    "conditional_pvalue": c.conditional_pvalue,
                    "decision": c.decision.name()
                }
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}

/// Reads inputs, runs [`analyse`] and writes `cells.csv`,
/// `decisions.geojson` and `manifest.json`. Nothing is written when the
/// inputs fail to load.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineRun> {
    cfg.validate()?;
    let events = read_events(&cfg.events)?;
    if events.is_empty() {
        return Err(Error::NoEvents);
    }
    let labels = cfg.labels.as_deref().map(read_labels).transpose()?;
    let run = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(|| analyse(&events, labels.as_ref(), cfg))?,
        None => analyse(&events, labels.as_ref(), cfg)?,
    };

    fs::create_dir_all(&cfg.output)?;
    write_cells_csv(fs::File::create(cfg.output.join("cells.csv"))?, &run.cells)?;
    let geo = geojson(&run.cells, cfg.cell_size);
    fs::write(cfg.output.join("decisions.geojson"), serde_json::to_string_pretty(&geo)?)?;
    let mut manifest_cfg = cfg.clone();
    manifest_cfg.workers = None;
    let manifest = json!({
        "package": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": manifest_cfg,
        "events": events.len(),
        "low_incidence": run.report,
        "cells": run.cells.len(),
        "failed_cells": run.cells.iter().filter(|c| c.decision == Decision::Failed).count(),
        "rejected_patches": run.outcome.as_ref().map(|o| o.rejected_patch_count),
        "rejected_cells": run.outcome.as_ref().map(|o| o.rejected_cells.len()),
        "variogram": run.outcome.as_ref().map(|o| o.variogram),
    });
    fs::write(cfg.output.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ev(lat: f64, lon: f64, day: u32, year: i32) -> EventRecord {
        EventRecord { lat, lon, day_of_year: day, year }
    }

    #[test]
    fn jitter_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let last = jitter_to_angles(&[366; 200], &mut rng).unwrap();
        assert!(last.angles().iter().all(|&a| a >= TAU * 365.0 / 366.0 && a < TAU));
        let first = jitter_to_angles(&[1; 200], &mut rng).unwrap();
        assert!(first.angles().iter().all(|&a| (0.0..TAU / 366.0).contains(&a)));
        assert!(jitter_to_angles(&[0], &mut rng).is_err());
    }

    #[test]
    fn jitter_of_uniform_days_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let days: Vec<u32> = (0..100_000).map(|_| rng.random_range(1..=366)).collect();
        let x = jitter_to_angles(&days, &mut rng).unwrap();
        assert!(x.mean_direction().1 < 0.02);
        let mut s = x.sorted().to_vec();
        s.dedup();
        assert_eq!(s.len(), x.len());
    }

    #[test]
    fn grid_indexing() {
        let g = grid_events(&[ev(10.0, 20.0, 5, 2000)], 0.5);
        assert_eq!(g.keys().copied().collect::<Vec<_>>(), vec![(20, 40)]);
        assert_eq!(cell_index(10.25, 20.25, 0.5), (20, 40));
        assert_eq!(cell_index(-0.1, -0.6, 0.5), (-1, -2));
        let events: Vec<EventRecord> = (0..50).map(|i| ev(i as f64 * 0.37 % 3.0, i as f64 * 0.91 % 2.0, 1 + i, 2000 + (i as i32 % 3))).collect();
        let mut rev = events.clone();
        rev.reverse();
        assert_eq!(grid_events(&events, 0.5), grid_events(&rev, 0.5));
    }

    fn cell_with(counts: &[usize]) -> Vec<EventRecord> {
        counts
            .iter()
            .enumerate()
            .flat_map(|(y, &c)| (0..c).map(move |d| ev(0.1, 0.1, 1 + d as u32, 2001 + y as i32)))
            .collect()
    }

    #[test]
    fn low_incidence_rule() {
        let rule = LowIncidenceRule::default();
        let run = |counts: &[usize]| {
            let mut g = BTreeMap::new();
            g.insert((0, 0), cell_with(counts));
            // a second cell pins the observed span to ten years
            g.insert((5, 5), cell_with(&[10; 10]));
            filter_low_incidence(g, &rule).unwrap().0.contains_key(&(0, 0))
        };
        assert!(run(&[10; 10]));
        assert!(!run(&[9, 9, 9, 9, 9, 9, 9, 9, 10, 10]));
        assert!(run(&[0, 0, 0, 0, 0, 0, 0, 10, 10, 10]));
        let mut short = BTreeMap::new();
        short.insert((0, 0), cell_with(&[10; 5]));
        assert!(matches!(filter_low_incidence(short.clone(), &rule), Err(Error::SpanMismatch { observed: 5, configured: 10 })));
        let scaled = LowIncidenceRule { scale_to_span: true, ..rule };
        let (kept, report) = filter_low_incidence(short, &scaled).unwrap();
        assert_eq!(report.max_low_years, 3);
        assert_eq!(kept.len(), 1);
    }

    #[test]
    fn empty_events_write_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let events = dir.path().join("events.csv");
        fs::write(&events, "lat,lon,day_of_year,year\n").unwrap();
        let cfg = PipelineConfig { events, output: dir.path().join("out"), ..Default::default() };
        assert!(matches!(run_pipeline(&cfg), Err(Error::NoEvents)));
        assert!(!dir.path().join("out").exists());
    }

    #[test]
    fn geojson_has_one_feature_per_cell() {
        let cells = vec![CellRecord {
            id: 0,
            row: 2,
            col: -1,
            lat: 1.25,
            lon: -0.25,
            n: 40,
            pvalue: Some(0.5),
            zscore: Some(0.0),
            patch: Some(0),
            conditional_pvalue: None,
            decision: Decision::Retain,
        }];
        let g = geojson(&cells, 0.5);
        assert_eq!(g["features"].as_array().unwrap().len(), 1);
        let ring = &g["features"][0]["geometry"]["coordinates"][0];
        assert_eq!(ring[0], json!([-0.5, 1.0]));
        assert_eq!(ring[2], json!([0.0, 1.5]));
        assert_eq!(ring[0], ring[4]);
    }

    #[test]
    fn config_parses_and_validates() {
        let cfg: PipelineConfig = toml::from_str("b = 50\nseed = 3\n[low_incidence]\nmin_fires = 5\n").unwrap();
        assert_eq!(cfg.b, 50);
        assert_eq!(cfg.low_incidence.min_fires, 5);
        assert_eq!(cfg.low_incidence.max_low_years, 7);
        assert!(cfg.validate().is_ok());
        assert!(PipelineConfig { alpha_c: 0.7, ..cfg }.validate().is_err());
        assert!(toml::from_str::<PipelineConfig>("bogus = 1").is_err());
    }
}
