//! Scalar and vector fields over a chart, and the differentiation backend.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chart::{ensure_same_chart, ChartManifold, Point};
use crate::error::{Error, Result};
use crate::jet::{constants, Jet};

pub type ScalarFn = Arc<dyn Fn(&[Jet]) -> Jet + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// How coordinate derivatives of coefficient functions are taken.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
#[derive(Default)]
pub enum DiffBackend {
    /// Forward mode through [`Jet`] arithmetic.
    #[default]
    Dual,
    /// Central differences with step `h · max(1, |x_i|)`.
    CentralDifference { h: f64 },
}


impl fmt::Display for DiffBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiffBackend::Dual => write!(f, "dual"),
            DiffBackend::CentralDifference { h } => write!(f, "central-difference(h={h:e})"),
        }
    }
}

impl DiffBackend {
    pub const DEFAULT_STEP: f64 = 1e-5;

    pub fn central() -> Self {
        DiffBackend::CentralDifference {
            h: Self::DEFAULT_STEP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DiffBackend::CentralDifference { h } if !(h > 0.0 && h.is_finite()) => Err(
                Error::InvalidParameter(format!("difference step must be positive, got {h}")),
            ),
            _ => Ok(()),
        }
    }

    /// `∂f/∂x_i` at `x`. Works on jet inputs in both modes, so results can
    /// be differentiated again.
    pub fn partial(&self, x: &[Jet], i: usize, f: &(dyn Fn(&[Jet]) -> Jet + Send + Sync)) -> Jet {
        match *self {
            DiffBackend::Dual => Jet::partial(x, i, f),
            DiffBackend::CentralDifference { h } => {
                let step = h * x[i].value().abs().max(1.0);
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] = xp[i] + step;
                xm[i] = xm[i] - step;
                (f(&xp) - f(&xm)) / (2.0 * step)
            }
        }
    }

    /// Directional derivative of a vector-valued map.
    pub fn directional_vec(
        &self,
        x: &[Jet],
        dir: &[Jet],
        f: &(dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync),
    ) -> Vec<Jet> {
        match *self {
            DiffBackend::Dual => Jet::directional_vec(x, dir, f),
            DiffBackend::CentralDifference { h } => {
                let scale = x.iter().map(|v| v.value().abs()).fold(1.0, f64::max);
                let step = h * scale;
                let xp: Vec<Jet> = x.iter().zip(dir).map(|(a, d)| *a + *d * step).collect();
                let xm: Vec<Jet> = x.iter().zip(dir).map(|(a, d)| *a - *d * step).collect();
                f(&xp)
                    .into_iter()
                    .zip(f(&xm))
                    .map(|(p, m)| (p - m) / (2.0 * step))
                    .collect()
            }
        }
    }
}

#[derive(Clone)]
pub struct ScalarField {
    chart: Arc<ChartManifold>,
    f: ScalarFn,
    gradient: Option<GradientFn>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("chart", &self.chart.name)
            .field("analytic_gradient", &self.gradient.is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn new<F>(chart: &Arc<ChartManifold>, f: F) -> Self
    where
        F: Fn(&[Jet]) -> Jet + Send + Sync + 'static,
    {
        ScalarField {
            chart: Arc::clone(chart),
            f: Arc::new(f),
            gradient: None,
        }
    }

    pub fn from_fn(chart: &Arc<ChartManifold>, f: ScalarFn) -> Self {
        ScalarField {
            chart: Arc::clone(chart),
            f,
            gradient: None,
        }
    }

    pub fn constant(chart: &Arc<ChartManifold>, c: f64) -> Self {
        Self::new(chart, move |_| Jet::constant(c))
    }

    pub fn coordinate(chart: &Arc<ChartManifold>, i: usize) -> Self {
        Self::new(chart, move |x| x[i])
    }

    pub fn with_gradient<G>(mut self, g: G) -> Self
    where
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn chart(&self) -> &Arc<ChartManifold> {
        &self.chart
    }

    pub fn func(&self) -> &ScalarFn {
        &self.f
    }

    pub fn eval_jet(&self, x: &[Jet]) -> Jet {
        (self.f)(x)
    }

    pub fn eval(&self, p: &Point) -> Result<f64> {
        ensure_same_chart(&self.chart, p.chart())?;
        Ok((self.f)(&constants(p.coords())).value())
    }

    /// Gradient from the analytic formula if present, else from `backend`.
    pub fn gradient(&self, p: &Point, backend: DiffBackend) -> Result<Vec<f64>> {
        ensure_same_chart(&self.chart, p.chart())?;
        if let Some(g) = &self.gradient {
            return Ok(g(p.coords()));
        }
        Ok(self.backend_gradient(p.coords(), backend))
    }

    fn backend_gradient(&self, x: &[f64], backend: DiffBackend) -> Vec<f64> {
        let xj = constants(x);
        (0..x.len())
            .map(|i| backend.partial(&xj, i, self.f.as_ref()).value())
            .collect()
    }

    /// Largest discrepancy between the analytic gradient and central
    /// differences over `points`; `None` without an analytic gradient.
    pub fn check_gradient(&self, points: &[Point]) -> Option<f64> {
        let g = self.gradient.as_ref()?;
        let worst = points
            .iter()
            .map(|p| {
                let fd = self.backend_gradient(p.coords(), DiffBackend::central());
                g(p.coords())
                    .iter()
                    .zip(&fd)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        Some(worst)
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        let f = Arc::clone(&self.f);
        ScalarField::new(&self.chart, move |x| f(x) * c)
    }

    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        ensure_same_chart(&self.chart, &other.chart)?;
        let (f, g) = (Arc::clone(&self.f), Arc::clone(&other.f));
        Ok(ScalarField::new(&self.chart, move |x| f(x) + g(x)))
    }
}

#[derive(Clone)]
pub struct VectorField {
    chart: Arc<ChartManifold>,
    f: VectorFn,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("chart", &self.chart.name)
            .finish()
    }
}

impl VectorField {
    pub fn new<F>(chart: &Arc<ChartManifold>, f: F) -> Self
    where
        F: Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    {
        VectorField {
            chart: Arc::clone(chart),
            f: Arc::new(f),
        }
    }

    pub fn from_fn(chart: &Arc<ChartManifold>, f: VectorFn) -> Self {
        VectorField {
            chart: Arc::clone(chart),
            f,
        }
    }

    /// The coordinate field `∂/∂x_i`.
    pub fn coordinate(chart: &Arc<ChartManifold>, i: usize) -> Self {
        let n = chart.dim();
        Self::new(chart, move |_| {
            let mut v = vec![Jet::zero(); n];
            v[i] = Jet::one();
            v
        })
    }

    pub fn constant(chart: &Arc<ChartManifold>, components: Vec<f64>) -> Self {
        Self::new(chart, move |_| constants(&components))
    }

    pub fn zero(chart: &Arc<ChartManifold>) -> Self {
        let n = chart.dim();
        Self::new(chart, move |_| vec![Jet::zero(); n])
    }

    pub fn chart(&self) -> &Arc<ChartManifold> {
        &self.chart
    }

    pub fn func(&self) -> &VectorFn {
        &self.f
    }

    pub fn eval_jet(&self, x: &[Jet]) -> Vec<Jet> {
        (self.f)(x)
    }

    pub fn eval_raw(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(&constants(x)).iter().map(Jet::value).collect()
    }

    pub fn eval(&self, p: &Point) -> Result<Vec<f64>> {
        ensure_same_chart(&self.chart, p.chart())?;
        let v = self.eval_raw(p.coords());
        if v.len() != self.chart.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.chart.dim(),
                got: v.len(),
            });
        }
        Ok(v)
    }

    pub fn scale(&self, c: f64) -> VectorField {
        let f = Arc::clone(&self.f);
        VectorField::new(&self.chart, move |x| f(x).into_iter().map(|v| v * c).collect())
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        ensure_same_chart(&self.chart, &other.chart)?;
        let (f, g) = (Arc::clone(&self.f), Arc::clone(&other.f));
        Ok(VectorField::new(&self.chart, move |x| {
            f(x).into_iter().zip(g(x)).map(|(a, b)| a + b).collect()
        }))
    }

    /// Derivative of a scalar field along this vector field.
    pub fn apply(&self, h: &ScalarField, backend: DiffBackend) -> Result<ScalarField> {
        ensure_same_chart(&self.chart, h.chart())?;
        let (f, g) = (Arc::clone(&self.f), Arc::clone(h.func()));
        Ok(ScalarField::new(&self.chart, move |x| {
            let v = f(x);
            (0..x.len())
                .map(|i| v[i] * backend.partial(x, i, g.as_ref()))
                .sum()
        }))
    }
}
