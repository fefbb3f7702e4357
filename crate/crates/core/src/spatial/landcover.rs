//! Aggregation of fine land-cover pixels into one label per grid cell.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LandClass {
    Cropland,
    Forest,
    Shrubland,
    Grassland,
    LichensMosses,
    LowVegetation,
}

impl LandClass {
    pub const ALL: [LandClass; 6] = [
        LandClass::Cropland,
        LandClass::Forest,
        LandClass::Shrubland,
        LandClass::Grassland,
        LandClass::LichensMosses,
        LandClass::LowVegetation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LandClass::Cropland => "cropland",
            LandClass::Forest => "forest",
            LandClass::Shrubland => "shrubland",
            LandClass::Grassland => "grassland",
            LandClass::LichensMosses => "lichens-mosses",
            LandClass::LowVegetation => "low-vegetation",
        }
    }
}

impl std::str::FromStr for LandClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<LandClass> {
        LandClass::ALL
            .into_iter()
            .find(|c| c.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown land class {s:?}")))
    }
}

/// One fine pixel. A use listing several classes (e.g. "tree and shrub") is
/// divided in proportion to the cell's pure pixels of those classes.
#[derive(Clone, Debug, PartialEq)]
pub enum Pixel {
    Pure(LandClass),
    Mixed { principal: Vec<LandClass>, secondary: Vec<LandClass> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CellLabel {
    Single(LandClass),
    /// Two classes, stored in class order so the pair is unordered.
    Pair(LandClass, LandClass),
    MixedVegetation,
}

impl fmt::Display for CellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellLabel::Single(c) => f.write_str(c.name()),
            CellLabel::Pair(a, b) => write!(f, "{}/{}", a.name(), b.name()),
            CellLabel::MixedVegetation => f.write_str("mixed-vegetation"),
        }
    }
}

pub const PRINCIPAL_SHARE: f64 = 0.75;
pub const MAJORITY: f64 = 0.6;
pub const PAIR_FLOOR: f64 = 0.3;

/// Fraction of the cell covered by each class.
pub fn class_shares(pixels: &[Pixel]) -> Result<BTreeMap<LandClass, f64>> {
    if pixels.is_empty() {
        return Err(Error::EmptyRaster);
    }
    let mut pure: BTreeMap<LandClass, f64> = BTreeMap::new();
    for p in pixels {
        if let Pixel::Pure(c) = p {
            *pure.entry(*c).or_default() += 1.0;
        }
    }
    let mut cover = pure.clone();
    let mut spread = |classes: &[LandClass], amount: f64| {
        let total: f64 = classes.iter().map(|c| pure.get(c).copied().unwrap_or(0.0)).sum();
        for c in classes {
            let part = if total > 0.0 {
                pure.get(c).copied().unwrap_or(0.0) / total
            } else {
                1.0 / classes.len() as f64
            };
            *cover.entry(*c).or_default() += amount * part;
        }
    };
    for p in pixels {
        if let Pixel::Mixed { principal, secondary } = p {
            spread(principal, PRINCIPAL_SHARE);
            spread(secondary, 1.0 - PRINCIPAL_SHARE);
        }
    }
    let n = pixels.len() as f64;
    Ok(cover.into_iter().map(|(c, v)| (c, v / n)).collect())
}

pub fn label_from_shares(shares: &BTreeMap<LandClass, f64>) -> CellLabel {
    let mut ranked: Vec<(LandClass, f64)> = shares.iter().map(|(c, v)| (*c, *v)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    match ranked.as_slice() {
        [] => CellLabel::MixedVegetation,
        [(c, v), ..] if *v >= MAJORITY => CellLabel::Single(*c),
        [(a, va), (b, vb), ..]
            if *va > PAIR_FLOOR
                && *vb > PAIR_FLOOR
                && *a != LandClass::LowVegetation
                && *b != LandClass::LowVegetation =>
        {
            CellLabel::Pair((*a).min(*b), (*a).max(*b))
        }
        _ => CellLabel::MixedVegetation,
    }
}

pub fn aggregate_land_cover(pixels: &[Pixel]) -> Result<CellLabel> {
    Ok(label_from_shares(&class_shares(pixels)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use LandClass::*;

    fn pixels(counts: &[(LandClass, usize)]) -> Vec<Pixel> {
        counts.iter().flat_map(|&(c, n)| std::iter::repeat_n(Pixel::Pure(c), n)).collect()
    }

    #[test]
    fn unanimous_cell() {
        assert_eq!(aggregate_land_cover(&pixels(&[(Cropland, 50)])).unwrap(), CellLabel::Single(Cropland));
        assert!(matches!(aggregate_land_cover(&[]), Err(Error::EmptyRaster)));
    }

    #[test]
    fn mixed_pixel_divided_by_surroundings() {
        let mut px = pixels(&[(Forest, 20_000), (Shrubland, 10_000)]);
        px.push(Pixel::Mixed { principal: vec![Forest, Shrubland], secondary: vec![Grassland] });
        let only_mixed = class_shares(&px).unwrap();
        let n = px.len() as f64;
        // the mixed pixel contributes 0.50 forest, 0.25 shrubland, 0.25 grassland
        assert!((only_mixed[&Forest] * n - 20_000.5).abs() < 1e-9);
        assert!((only_mixed[&Shrubland] * n - 10_000.25).abs() < 1e-9);
        assert!((only_mixed[&Grassland] * n - 0.25).abs() < 1e-9);
    }

    #[test]
    fn pair_and_fallback_rules() {
        let label = aggregate_land_cover(&pixels(&[(Forest, 45), (Grassland, 40), (Shrubland, 15)])).unwrap();
        assert_eq!(label, CellLabel::Pair(Forest, Grassland));
        assert_eq!(label.to_string(), "forest/grassland");
        let low = aggregate_land_cover(&pixels(&[(Forest, 45), (LowVegetation, 40), (Shrubland, 15)])).unwrap();
        assert_eq!(low, CellLabel::MixedVegetation);
        let thin = aggregate_land_cover(&pixels(&[(Forest, 40), (Grassland, 30), (Shrubland, 30)])).unwrap();
        assert_eq!(thin, CellLabel::MixedVegetation);
        let major = aggregate_land_cover(&pixels(&[(Shrubland, 60), (Grassland, 40)])).unwrap();
        assert_eq!(major, CellLabel::Single(Shrubland));
    }

    /// Independent walk through the rule table for two-class covers.
    #[test]
    fn rule_table_walkthrough() {
        for a in 0..=100usize {
            let b = 100 - a;
            let label = aggregate_land_cover(&pixels(&[(Forest, a), (Cropland, b)])).unwrap();
            let expect = if a >= 60 {
                CellLabel::Single(Forest)
            } else if b >= 60 {
                CellLabel::Single(Cropland)
            } else {
                CellLabel::Pair(Cropland, Forest)
            };
            assert_eq!(label, expect, "{a}/{b}");
        }
    }

    #[test]
    fn class_names_parse() {
        for c in LandClass::ALL {
            assert_eq!(c.name().parse::<LandClass>().unwrap(), c);
        }
    }
}
