//! Coordinate charts and points.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radius below which polar-type charts are treated as singular.
pub const POLAR_CUTOFF: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coordinate {
    pub name: String,
    /// Period for angular coordinates.
    pub period: Option<f64>,
    /// Closed interval; `None` on either side means unbounded.
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Coordinate {
    pub fn free(name: &str) -> Self {
        Coordinate {
            name: name.to_string(),
            period: None,
            lower: None,
            upper: None,
        }
    }

    pub fn periodic(name: &str, period: f64) -> Self {
        Coordinate {
            period: Some(period),
            ..Coordinate::free(name)
        }
    }

    pub fn bounded(name: &str, lower: f64, upper: f64) -> Self {
        Coordinate {
            lower: Some(lower),
            upper: Some(upper),
            ..Coordinate::free(name)
        }
    }

    pub fn at_least(name: &str, lower: f64) -> Self {
        Coordinate {
            lower: Some(lower),
            ..Coordinate::free(name)
        }
    }
}

/// Open regions where chart components degenerate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExcludedRegion {
    /// `x[coord] < threshold`.
    CoordBelow { coord: usize, threshold: f64 },
    /// `x[a]² + x[b]² < threshold²`.
    RadiusBelow { a: usize, b: usize, threshold: f64 },
    /// `|x| < threshold` over the listed coordinates.
    NormBelow { coords: Vec<usize>, threshold: f64 },
}

impl ExcludedRegion {
    pub fn contains(&self, x: &[f64]) -> bool {
        match *self {
            ExcludedRegion::CoordBelow { coord, threshold } => x[coord] < threshold,
            ExcludedRegion::RadiusBelow { a, b, threshold } => {
                x[a] * x[a] + x[b] * x[b] < threshold * threshold
            }
            ExcludedRegion::NormBelow {
                ref coords,
                threshold,
            } => coords.iter().map(|&i| x[i] * x[i]).sum::<f64>() < threshold * threshold,
        }
    }
}

impl fmt::Display for ExcludedRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExcludedRegion::CoordBelow { coord, threshold } => {
                write!(f, "x[{coord}] < {threshold}")
            }
            ExcludedRegion::RadiusBelow { a, b, threshold } => {
                write!(f, "|(x[{a}], x[{b}])| < {threshold}")
            }
            ExcludedRegion::NormBelow { coords, threshold } => {
                write!(f, "|x{coords:?}| < {threshold}")
            }
        }
    }
}

/// A single coordinate chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartManifold {
    pub name: String,
    pub coords: Vec<Coordinate>,
    #[serde(default)]
    pub excluded: Vec<ExcludedRegion>,
}

impl ChartManifold {
    pub fn new(name: &str, coords: Vec<Coordinate>) -> Result<Arc<Self>> {
        Self::with_exclusions(name, coords, Vec::new())
    }

    pub fn with_exclusions(
        name: &str,
        coords: Vec<Coordinate>,
        excluded: Vec<ExcludedRegion>,
    ) -> Result<Arc<Self>> {
        let chart = ChartManifold {
            name: name.to_string(),
            coords,
            excluded,
        };
        chart.validate()?;
        Ok(Arc::new(chart))
    }

    pub fn validate(&self) -> Result<()> {
        if self.coords.is_empty() {
            return Err(Error::InvalidChart(format!("{}: no coordinates", self.name)));
        }
        for c in &self.coords {
            if let Some(p) = c.period {
                if !(p > 0.0 && p.is_finite()) {
                    return Err(Error::InvalidChart(format!(
                        "{}: period of `{}` must be positive",
                        self.name, c.name
                    )));
                }
            }
            if let (Some(lo), Some(hi)) = (c.lower, c.upper) {
                if lo > hi {
                    return Err(Error::InvalidChart(format!(
                        "{}: empty interval for `{}`",
                        self.name, c.name
                    )));
                }
            }
        }
        let n = self.dim();
        for r in &self.excluded {
            let ok = match r {
                ExcludedRegion::CoordBelow { coord, .. } => *coord < n,
                ExcludedRegion::RadiusBelow { a, b, .. } => *a < n && *b < n,
                ExcludedRegion::NormBelow { coords, .. } => coords.iter().all(|&i| i < n),
            };
            if !ok {
                return Err(Error::InvalidChart(format!(
                    "{}: excluded region {r} refers to a missing coordinate",
                    self.name
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coord_names(&self) -> Vec<String> {
        self.coords.iter().map(|c| c.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c.name == name)
    }

    /// Wraps periodic coordinates into `[0, period)`.
    pub fn normalize(&self, x: &mut [f64]) {
        for (v, c) in x.iter_mut().zip(&self.coords) {
            if let Some(p) = c.period {
                *v = v.rem_euclid(p);
                if *v >= p {
                    *v = 0.0;
                }
            }
        }
    }

    /// Checks bounds and excluded regions without normalising.
    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        for (v, c) in x.iter().zip(&self.coords) {
            if !v.is_finite() {
                return Err(Error::OutOfBounds {
                    coord: c.name.clone(),
                    value: *v,
                    lo: c.lower.unwrap_or(f64::NEG_INFINITY),
                    hi: c.upper.unwrap_or(f64::INFINITY),
                });
            }
            if c.period.is_some() {
                continue;
            }
            let lo = c.lower.unwrap_or(f64::NEG_INFINITY);
            let hi = c.upper.unwrap_or(f64::INFINITY);
            if *v < lo || *v > hi {
                return Err(Error::OutOfBounds {
                    coord: c.name.clone(),
                    value: *v,
                    lo,
                    hi,
                });
            }
        }
        if let Some(r) = self.excluded.iter().find(|r| r.contains(x)) {
            return Err(Error::Excluded {
                region: format!("{} ({})", r, self.name),
                coords: x.to_vec(),
            });
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.check(x).is_ok()
    }

    /// Coordinate difference with periodic coordinates taken to the nearest
    /// representative.
    pub fn difference(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter()
            .zip(b)
            .zip(&self.coords)
            .map(|((x, y), c)| match c.period {
                Some(p) => {
                    let d = (x - y).rem_euclid(p);
                    if d > p / 2.0 {
                        d - p
                    } else {
                        d
                    }
                }
                None => x - y,
            })
            .collect()
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.difference(a, b).iter().map(|d| d * d).sum::<f64>().sqrt()
    }
}

/// A validated point of a chart.
#[derive(Clone, Debug)]
pub struct Point {
    chart: Arc<ChartManifold>,
    coords: Vec<f64>,
}

impl Point {
    pub fn new(chart: &Arc<ChartManifold>, coords: Vec<f64>) -> Result<Point> {
        let mut coords = coords;
        if coords.len() != chart.dim() {
            return Err(Error::DimensionMismatch {
                expected: chart.dim(),
                got: coords.len(),
            });
        }
        chart.normalize(&mut coords);
        chart.check(&coords)?;
        Ok(Point {
            chart: Arc::clone(chart),
            coords,
        })
    }

    pub fn chart(&self) -> &Arc<ChartManifold> {
        &self.chart
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        same_chart(&self.chart, &other.chart) && self.coords == other.coords
    }
}

pub fn same_chart(a: &Arc<ChartManifold>, b: &Arc<ChartManifold>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

pub fn ensure_same_chart(a: &Arc<ChartManifold>, b: &Arc<ChartManifold>) -> Result<()> {
    if same_chart(a, b) {
        Ok(())
    } else {
        Err(Error::ChartMismatch(a.name.clone(), b.name.clone()))
    }
}

/// Standard charts used across the catalog.
pub mod standard {
    use super::*;
    use std::f64::consts::TAU;

    pub fn euclidean(name: &str, names: &[&str]) -> Arc<ChartManifold> {
        ChartManifold::new(name, names.iter().map(|n| Coordinate::free(n)).collect())
            .expect("static chart")
    }

    /// `(r, θ, z)` with the polar axis excluded.
    pub fn cylindrical(name: &str) -> Arc<ChartManifold> {
        ChartManifold::with_exclusions(
            name,
            vec![
                Coordinate::at_least("r", 0.0),
                Coordinate::periodic("theta", TAU),
                Coordinate::free("z"),
            ],
            vec![ExcludedRegion::CoordBelow {
                coord: 0,
                threshold: POLAR_CUTOFF,
            }],
        )
        .expect("static chart")
    }
}
