//! Reproducible point clouds over chart boxes.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chart::{ChartManifold, Point};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleStrategy {
    #[default]
    Halton,
    Uniform,
    Grid,
}

impl fmt::Display for SampleStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SampleStrategy::Halton => "halton",
            SampleStrategy::Uniform => "uniform",
            SampleStrategy::Grid => "grid",
        })
    }
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// The `i`-th Halton point in the unit cube of dimension `d` (`d ≤ 12`).
pub fn halton(i: u64, d: usize) -> Vec<f64> {
    (0..d).map(|k| radical_inverse(i, PRIMES[k])).collect()
}

/// Axis-aligned box in chart coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(&upper).any(|(a, b)| a.partial_cmp(b).is_none_or(|o| o.is_gt())) {
            return Err(Error::InvalidParameter(format!(
                "empty box {lower:?} .. {upper:?}"
            )));
        }
        Ok(BoxDomain { lower, upper })
    }

    pub fn cube(dim: usize, half_width: f64) -> Self {
        BoxDomain {
            lower: vec![-half_width; dim],
            upper: vec![half_width; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn map_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(t, (a, b))| a + t * (b - a))
            .collect()
    }
}

/// A reproducible sample of chart points; all points satisfy the chart's
/// bounds, its excluded regions, and the optional extra predicate.
#[derive(Clone, Debug)]
pub struct SampleSet {
    pub strategy: SampleStrategy,
    pub seed: u64,
    pub requested: usize,
    pub points: Vec<Point>,
    /// Candidates rejected by the domain predicate.
    pub rejected: usize,
}

pub type DomainPredicate<'a> = &'a dyn Fn(&[f64]) -> bool;

impl SampleSet {
    pub fn generate(
        chart: &Arc<ChartManifold>,
        domain: &BoxDomain,
        strategy: SampleStrategy,
        count: usize,
        seed: u64,
    ) -> Result<Self> {
        Self::generate_filtered(chart, domain, strategy, count, seed, None)
    }

    pub fn generate_filtered(
        chart: &Arc<ChartManifold>,
        domain: &BoxDomain,
        strategy: SampleStrategy,
        count: usize,
        seed: u64,
        keep: Option<DomainPredicate<'_>>,
    ) -> Result<Self> {
        if domain.dim() != chart.dim() {
            return Err(Error::DimensionMismatch {
                expected: chart.dim(),
                got: domain.dim(),
            });
        }
        if count == 0 {
            return Err(Error::EmptySampleSet);
        }
        let d = chart.dim();
        if strategy == SampleStrategy::Halton && d > PRIMES.len() {
            return Err(Error::InvalidParameter(format!(
                "Halton sampling supports at most {} dimensions",
                PRIMES.len()
            )));
        }
        let mut points = Vec::with_capacity(count);
        let mut rejected = 0;
        let mut accept = |x: Vec<f64>, points: &mut Vec<Point>| {
            if keep.is_none_or(|k| k(&x)) {
                if let Ok(p) = Point::new(chart, x) {
                    points.push(p);
                    return;
                }
            }
            rejected += 1;
        };
        let max_attempts = count.saturating_mul(50).max(1000);
        match strategy {
            SampleStrategy::Halton => {
                let mut i = 1 + seed;
                let mut attempts = 0;
                while points.len() < count && attempts < max_attempts {
                    accept(domain.map_unit(&halton(i, d)), &mut points);
                    i += 1;
                    attempts += 1;
                }
            }
            SampleStrategy::Uniform => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut attempts = 0;
                while points.len() < count && attempts < max_attempts {
                    let u: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
                    accept(domain.map_unit(&u), &mut points);
                    attempts += 1;
                }
            }
            SampleStrategy::Grid => {
                let m = (count as f64).powf(1.0 / d as f64).ceil().max(1.0) as usize;
                let total = m.pow(d as u32);
                for flat in 0..total {
                    let mut rem = flat;
                    let u: Vec<f64> = (0..d)
                        .map(|_| {
                            let i = rem % m;
                            rem /= m;
                            (i as f64 + 0.5) / m as f64
                        })
                        .collect();
                    accept(domain.map_unit(&u), &mut points);
                }
            }
        }
        if points.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        Ok(SampleSet {
            strategy,
            seed,
            requested: count,
            points,
            rejected,
        })
    }

    /// Wraps existing points.
    pub fn from_points(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        Ok(SampleSet {
            strategy: SampleStrategy::Grid,
            seed: 0,
            requested: points.len(),
            points,
            rejected: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Point> {
        self.points.iter()
    }

    pub fn coords(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.coords().to_vec()).collect()
    }
}
