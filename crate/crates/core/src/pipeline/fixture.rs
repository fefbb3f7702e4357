//! Synthetic event and label files: a rectangular grid of unimodal cells
//! with one planted bimodal block.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::models::{named_model, ModelId};
use crate::rng::{derive_seed, stream_rng};

use super::{cell_centroid, EventRecord, DAYS_IN_YEAR};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub rows: i64,
    pub cols: i64,
    /// Grid index of the south-west cell.
    pub origin: (i64, i64),
    pub cell_size: f64,
    pub first_year: i32,
    pub years: i32,
    /// Events in each of the busy years.
    pub busy_count: usize,
    pub busy_years: usize,
    /// Events in each remaining year.
    pub quiet_count: usize,
    pub background: ModelId,
    pub planted: ModelId,
    /// Top-left cell offset and side of the planted block.
    pub planted_at: (i64, i64),
    pub planted_side: i64,
    /// Cells (offsets) given too few events to pass the low-incidence rule.
    pub sparse: Vec<(i64, i64)>,
    pub seed: u64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            rows: 20,
            cols: 20,
            origin: (80, -10),
            cell_size: 0.5,
            first_year: 2001,
            years: 10,
            busy_count: 40,
            busy_years: 3,
            quiet_count: 4,
            background: ModelId(1),
            planted: ModelId(11),
            planted_at: (7, 7),
            planted_side: 5,
            sparse: vec![(0, 0), (0, 19), (19, 0)],
            seed: 20_240_601,
        }
    }
}

impl FixtureSpec {
    pub fn is_planted(&self, r: i64, c: i64) -> bool {
        let (pr, pc) = self.planted_at;
        (pr..pr + self.planted_side).contains(&r) && (pc..pc + self.planted_side).contains(&c)
    }
}

fn angle_to_day(theta: f64) -> u32 {
    ((theta / std::f64::consts::TAU * DAYS_IN_YEAR).floor() as u32 + 1).min(366)
}

/// Events and `(row, col, label)` rows for the fixture.
pub fn generate(spec: &FixtureSpec) -> Result<(Vec<EventRecord>, Vec<(i64, i64, String)>)> {
    let background = named_model(spec.background.0)?;
    let planted = named_model(spec.planted.0)?;
    let mut events = Vec::new();
    let mut labels = Vec::new();
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let at = (spec.origin.0 + r, spec.origin.1 + c);
            let mut rng = stream_rng(derive_seed(spec.seed, &[r as u64, c as u64]), 0);
            let hot = spec.is_planted(r, c);
            let model = if hot { &planted } else { &background };
            let sparse = spec.sparse.contains(&(r, c));
            let (lat0, lon0) = cell_centroid(at, spec.cell_size);
            for y in 0..spec.years {
                let count = if sparse {
                    spec.quiet_count.min(9)
                } else if (y as usize) < spec.busy_years {
                    spec.busy_count
                } else {
                    spec.quiet_count
                };
                for _ in 0..count {
                    let half = spec.cell_size * 0.49;
                    events.push(EventRecord {
                        lat: lat0 + rng.random_range(-half..half),
                        lon: lon0 + rng.random_range(-half..half),
                        day_of_year: angle_to_day(model.draw(&mut rng)),
                        year: spec.first_year + y,
                    });
                }
            }
            labels.push((at.0, at.1, if hot { "cropland".to_string() } else { "forest".to_string() }));
        }
    }
    Ok((events, labels))
}

/// Writes `events.csv`, `labels.csv` and `pipeline.toml` into `dir`.
pub fn write_fixture(dir: &Path, spec: &FixtureSpec, b: usize) -> Result<()> {
    let (events, labels) = generate(spec)?;
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("events.csv"))?;
    for e in &events {
        w.serialize(e)?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join("labels.csv"))?;
    w.write_record(["row", "col", "label"])?;
    for (r, c, l) in &labels {
        w.write_record([r.to_string(), c.to_string(), l.clone()])?;
    }
    w.flush()?;
    let config = format!(
        "cell_size = {}\nk = 1\nb = {b}\nalpha_c = 0.05\nalpha_r = 0.05\nseed = {}\nevents = \"events.csv\"\nlabels = \"labels.csv\"\noutput = \"out\"\n\n[low_incidence]\nmin_fires = 10\nmax_low_years = 7\nspan_years = {}\n",
        spec.cell_size, spec.seed, spec.years
    );
    fs::write(dir.join("pipeline.toml"), config)?;
    Ok(())
}
