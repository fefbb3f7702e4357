//! Angles on the unit circle and samples of them.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An angle in radians, always reduced to `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    pub fn new(radians: f64) -> Angle {
        Angle(reduce(radians))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn add(self, delta: f64) -> Angle {
        Angle::new(self.0 + delta)
    }

    pub fn reflect(self) -> Angle {
        Angle::new(-self.0)
    }
}

impl From<f64> for Angle {
    fn from(x: f64) -> Angle {
        Angle::new(x)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Reduce `x` modulo 2π into `[0, 2π)`.
#[inline]
pub fn reduce(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Geodesic distance on the circle, in `[0, π]`.
pub fn wrapped_distance(a: Angle, b: Angle) -> f64 {
    let d = (a.0 - b.0).abs();
    let d = d.min(TAU - d);
    d.clamp(0.0, PI)
}

/// A nonempty sample of angles. Keeps the input order and a sorted copy.
#[derive(Clone, Debug)]
pub struct CircularSample {
    angles: Vec<f64>,
    sorted: Vec<f64>,
}

impl CircularSample {
    pub fn new<I>(angles: I) -> Result<CircularSample>
    where
        I: IntoIterator,
        I::Item: Into<f64>,
    {
        let mut raw = Vec::new();
        for a in angles {
            let a: f64 = a.into();
            if !a.is_finite() {
                return Err(Error::NonFiniteAngle(a));
            }
            raw.push(reduce(a));
        }
        if raw.is_empty() {
            return Err(Error::EmptySample);
        }
        let mut sorted = raw.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(CircularSample { angles: raw, sorted })
    }

    pub fn from_angles(angles: &[Angle]) -> Result<CircularSample> {
        CircularSample::new(angles.iter().map(|a| a.value()))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// Nondecreasing view of the angles.
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn rotate(&self, delta: f64) -> CircularSample {
        CircularSample::new(self.angles.iter().map(|a| a + delta)).expect("nonempty")
    }

    pub fn reflect(&self) -> CircularSample {
        CircularSample::new(self.angles.iter().map(|a| -a)).expect("nonempty")
    }

    /// Mean direction and mean resultant length.
    pub fn mean_direction(&self) -> (f64, f64) {
        let n = self.len() as f64;
        let (s, c) = self
            .angles
            .iter()
            .fold((0.0, 0.0), |(s, c), a| (s + a.sin(), c + a.cos()));
        (reduce(s.atan2(c)), (s * s + c * c).sqrt() / n)
    }
}
