//! Differential forms stored by coefficient functions over sorted
//! multi-indices, with pointwise exterior calculus.

use std::fmt;
use std::sync::Arc;

use crate::chart::{ensure_same_chart, ChartManifold, Point};
use crate::error::{Error, Result};
use crate::field::{DiffBackend, ScalarField, ScalarFn, VectorField, VectorFn};
use crate::jet::{constants, Jet};

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Strictly increasing `k`-subsets of `0..n` in lexicographic order.
pub fn multi_indices(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::with_capacity(binomial(n, k));
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// Position of a strictly increasing multi-index in [`multi_indices`] order.
pub fn rank(n: usize, idx: &[usize]) -> usize {
    let k = idx.len();
    let mut r = 0;
    let mut prev = 0;
    for (j, &v) in idx.iter().enumerate() {
        for skipped in prev..v {
            r += binomial(n - skipped - 1, k - j - 1);
        }
        prev = v + 1;
    }
    r
}

/// Sorts `idx` in place and returns the permutation sign, or `None` when an
/// index repeats.
pub fn sort_with_sign(idx: &mut [usize]) -> Option<f64> {
    let mut sign = 1.0;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

fn det_jet(m: &mut [Vec<Jet>]) -> Jet {
    let n = m.len();
    match n {
        0 => Jet::one(),
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            // Laplace expansion along the first row; k <= 7 here.
            let mut total = Jet::zero();
            for c in 0..n {
                if m[0][c].value() == 0.0 && m[0][c].tags() == 0 {
                    continue;
                }
                let mut minor: Vec<Vec<Jet>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(j, _)| *j != c)
                            .map(|(_, v)| *v)
                            .collect()
                    })
                    .collect();
                let term = m[0][c] * det_jet(&mut minor);
                if c % 2 == 0 {
                    total += term;
                } else {
                    total -= term;
                }
            }
            total
        }
    }
}

#[derive(Clone)]
pub struct DifferentialForm {
    chart: Arc<ChartManifold>,
    degree: usize,
    /// One entry per multi-index in [`multi_indices`] order; `None` is the
    /// identically zero coefficient.
    coeffs: Vec<Option<ScalarFn>>,
}

impl fmt::Debug for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nonzero: Vec<Vec<usize>> = multi_indices(self.dim(), self.degree)
            .into_iter()
            .zip(&self.coeffs)
            .filter(|(_, c)| c.is_some())
            .map(|(i, _)| i)
            .collect();
        f.debug_struct("DifferentialForm")
            .field("chart", &self.chart.name)
            .field("degree", &self.degree)
            .field("support", &nonzero)
            .finish()
    }
}

impl DifferentialForm {
    /// The zero `k`-form. For `k > dim` this has no coefficients.
    pub fn zero(chart: &Arc<ChartManifold>, degree: usize) -> Self {
        DifferentialForm {
            chart: Arc::clone(chart),
            degree,
            coeffs: vec![None; binomial(chart.dim(), degree)],
        }
    }

    /// Builds a form from `(multi-index, coefficient)` pairs. Indices need
    /// not be sorted; permutation signs are applied and repeated entries add.
    pub fn from_terms(
        chart: &Arc<ChartManifold>,
        degree: usize,
        terms: Vec<(Vec<usize>, ScalarFn)>,
    ) -> Result<Self> {
        let n = chart.dim();
        let mut grouped: Vec<Vec<(f64, ScalarFn)>> = vec![Vec::new(); binomial(n, degree)];
        for (mut idx, f) in terms {
            if idx.len() != degree || idx.iter().any(|&i| i >= n) {
                return Err(Error::InvalidParameter(format!(
                    "multi-index {idx:?} invalid for a {degree}-form on {n} coordinates"
                )));
            }
            let Some(sign) = sort_with_sign(&mut idx) else {
                continue;
            };
            grouped[rank(n, &idx)].push((sign, f));
        }
        let coeffs = grouped
            .into_iter()
            .map(|g| -> Option<ScalarFn> {
                match g.len() {
                    0 => None,
                    1 if g[0].0 > 0.0 => Some(Arc::clone(&g[0].1)),
                    _ => Some(Arc::new(move |x: &[Jet]| {
                        g.iter().map(|(s, f)| f(x) * *s).sum()
                    })),
                }
            })
            .collect();
        Ok(DifferentialForm {
            chart: Arc::clone(chart),
            degree,
            coeffs,
        })
    }

    /// A 1-form `Σ a_i dx_i`; `None` entries are zero.
    pub fn one_form(chart: &Arc<ChartManifold>, components: Vec<Option<ScalarFn>>) -> Result<Self> {
        if components.len() != chart.dim() {
            return Err(Error::DimensionMismatch {
                expected: chart.dim(),
                got: components.len(),
            });
        }
        Ok(DifferentialForm {
            chart: Arc::clone(chart),
            degree: 1,
            coeffs: components,
        })
    }

    /// Convenience: a 1-form from closures indexed by coordinate.
    pub fn one_form_from<F>(chart: &Arc<ChartManifold>, terms: Vec<(usize, F)>) -> Result<Self>
    where
        F: Fn(&[Jet]) -> Jet + Send + Sync + 'static,
    {
        let terms = terms
            .into_iter()
            .map(|(i, f)| (vec![i], Arc::new(f) as ScalarFn))
            .collect();
        Self::from_terms(chart, 1, terms)
    }

    /// The coordinate differential `dx_i`.
    pub fn coordinate_differential(chart: &Arc<ChartManifold>, i: usize) -> Self {
        let mut f = Self::zero(chart, 1);
        f.coeffs[i] = Some(Arc::new(|_| Jet::one()));
        f
    }

    pub fn function(field: &ScalarField) -> Self {
        DifferentialForm {
            chart: Arc::clone(field.chart()),
            degree: 0,
            coeffs: vec![Some(Arc::clone(field.func()))],
        }
    }

    pub fn chart(&self) -> &Arc<ChartManifold> {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// True when the degree exceeds the chart dimension (wedge overflow).
    pub fn is_overflow(&self) -> bool {
        self.degree > self.dim()
    }

    pub fn is_identically_zero(&self) -> bool {
        self.coeffs.iter().all(Option::is_none)
    }

    pub fn coefficient_fn(&self, idx: &[usize]) -> Option<&ScalarFn> {
        if idx.len() != self.degree {
            return None;
        }
        self.coeffs[rank(self.dim(), idx)].as_ref()
    }

    /// All coefficients at a jet point, in multi-index order.
    pub fn coefficients_jet(&self, x: &[Jet]) -> Vec<Jet> {
        self.coeffs
            .iter()
            .map(|c| c.as_ref().map_or(Jet::zero(), |f| f(x)))
            .collect()
    }

    pub fn coefficients(&self, p: &Point) -> Result<Vec<f64>> {
        ensure_same_chart(&self.chart, p.chart())?;
        Ok(self
            .coefficients_jet(&constants(p.coords()))
            .iter()
            .map(Jet::value)
            .collect())
    }

    /// Coefficients of a 1-form at a raw point.
    pub fn covector_raw(&self, x: &[f64]) -> Vec<f64> {
        self.coefficients_jet(&constants(x))
            .iter()
            .map(Jet::value)
            .collect()
    }

    /// Evaluation on `degree` tangent vectors at a jet point.
    pub fn eval_jet(&self, x: &[Jet], vectors: &[Vec<Jet>]) -> Jet {
        debug_assert_eq!(vectors.len(), self.degree);
        if self.degree == 0 {
            return self.coeffs[0].as_ref().map_or(Jet::zero(), |f| f(x));
        }
        if self.degree == 1 {
            return self
                .coeffs
                .iter()
                .zip(&vectors[0])
                .filter_map(|(c, v)| c.as_ref().map(|f| f(x) * *v))
                .sum();
        }
        let n = self.dim();
        let mut total = Jet::zero();
        for (idx, c) in multi_indices(n, self.degree).iter().zip(&self.coeffs) {
            let Some(f) = c else { continue };
            let mut m: Vec<Vec<Jet>> = idx
                .iter()
                .map(|&row| vectors.iter().map(|v| v[row]).collect())
                .collect();
            let det = det_jet(&mut m);
            if det.value() == 0.0 && det.tags() == 0 {
                continue;
            }
            total += f(x) * det;
        }
        total
    }

    pub fn eval_raw(&self, x: &[f64], vectors: &[Vec<f64>]) -> f64 {
        let vj: Vec<Vec<Jet>> = vectors.iter().map(|v| constants(v)).collect();
        self.eval_jet(&constants(x), &vj).value()
    }

    pub fn eval(&self, p: &Point, vectors: &[Vec<f64>]) -> Result<f64> {
        ensure_same_chart(&self.chart, p.chart())?;
        if vectors.len() != self.degree {
            return Err(Error::InvalidParameter(format!(
                "{}-form evaluated on {} vectors",
                self.degree,
                vectors.len()
            )));
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != self.dim()) {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(self.eval_raw(p.coords(), vectors))
    }

    /// Largest absolute coefficient at `p`.
    pub fn max_abs_coefficient(&self, p: &Point) -> Result<f64> {
        Ok(self
            .coefficients(p)?
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max))
    }

    pub fn add(&self, other: &DifferentialForm) -> Result<DifferentialForm> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &DifferentialForm) -> Result<DifferentialForm> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &DifferentialForm, s: f64) -> Result<DifferentialForm> {
        ensure_same_chart(&self.chart, &other.chart)?;
        if self.degree != other.degree {
            return Err(Error::InvalidParameter(format!(
                "cannot add forms of degree {} and {}",
                self.degree, other.degree
            )));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| -> Option<ScalarFn> {
                match (a, b) {
                    (None, None) => None,
                    (Some(a), None) => Some(Arc::clone(a)),
                    (None, Some(b)) => {
                        let b = Arc::clone(b);
                        Some(Arc::new(move |x: &[Jet]| b(x) * s))
                    }
                    (Some(a), Some(b)) => {
                        let (a, b) = (Arc::clone(a), Arc::clone(b));
                        Some(Arc::new(move |x: &[Jet]| a(x) + b(x) * s))
                    }
                }
            })
            .collect();
        Ok(DifferentialForm {
            chart: Arc::clone(&self.chart),
            degree: self.degree,
            coeffs,
        })
    }

    pub fn scale(&self, c: f64) -> DifferentialForm {
        let coeffs = self
            .coeffs
            .iter()
            .map(|a| -> Option<ScalarFn> {
                a.as_ref().map(|a| {
                    let a = Arc::clone(a);
                    Arc::new(move |x: &[Jet]| a(x) * c) as ScalarFn
                })
            })
            .collect();
        DifferentialForm {
            chart: Arc::clone(&self.chart),
            degree: self.degree,
            coeffs,
        }
    }

    /// Pointwise product with a function.
    pub fn multiply(&self, h: &ScalarField) -> Result<DifferentialForm> {
        wedge(&DifferentialForm::function(h), self)
    }
}

/// `a ∧ b`. A degree sum above the chart dimension yields the empty zero
/// form, detectable through [`DifferentialForm::is_overflow`].
pub fn wedge(a: &DifferentialForm, b: &DifferentialForm) -> Result<DifferentialForm> {
    ensure_same_chart(&a.chart, &b.chart)?;
    let n = a.dim();
    let (p, q) = (a.degree, b.degree);
    let k = p + q;
    if k > n {
        return Ok(DifferentialForm::zero(&a.chart, k));
    }
    let mut coeffs: Vec<Option<ScalarFn>> = Vec::with_capacity(binomial(n, k));
    for idx in multi_indices(n, k) {
        // Split idx into I (size p) and J (size q).
        let mut terms: Vec<(f64, ScalarFn, ScalarFn)> = Vec::new();
        for sel in multi_indices(k, p) {
            let i_idx: Vec<usize> = sel.iter().map(|&s| idx[s]).collect();
            let j_idx: Vec<usize> = (0..k)
                .filter(|s| !sel.contains(s))
                .map(|s| idx[s])
                .collect();
            let (Some(fa), Some(fb)) = (a.coefficient_fn(&i_idx), b.coefficient_fn(&j_idx)) else {
                continue;
            };
            let mut perm: Vec<usize> = i_idx.iter().chain(&j_idx).copied().collect();
            let sign = sort_with_sign(&mut perm).expect("disjoint split");
            terms.push((sign, Arc::clone(fa), Arc::clone(fb)));
        }
        coeffs.push(if terms.is_empty() {
            None
        } else {
            Some(Arc::new(move |x: &[Jet]| {
                terms.iter().map(|(s, fa, fb)| fa(x) * fb(x) * *s).sum()
            }))
        });
    }
    Ok(DifferentialForm {
        chart: Arc::clone(&a.chart),
        degree: k,
        coeffs,
    })
}

/// `d a`, taking coordinate derivatives with `backend`.
pub fn exterior_derivative(a: &DifferentialForm, backend: DiffBackend) -> Result<DifferentialForm> {
    backend.validate()?;
    let n = a.dim();
    let k = a.degree;
    if k >= n {
        return Err(Error::Precondition(format!(
            "exterior derivative of a {k}-form on a {n}-dimensional chart"
        )));
    }
    let mut coeffs: Vec<Option<ScalarFn>> = Vec::with_capacity(binomial(n, k + 1));
    for idx in multi_indices(n, k + 1) {
        let mut terms: Vec<(f64, usize, ScalarFn)> = Vec::new();
        for j in 0..=k {
            let rest: Vec<usize> = idx
                .iter()
                .enumerate()
                .filter(|(m, _)| *m != j)
                .map(|(_, v)| *v)
                .collect();
            if let Some(f) = a.coefficient_fn(&rest) {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                terms.push((sign, idx[j], Arc::clone(f)));
            }
        }
        coeffs.push(if terms.is_empty() {
            None
        } else {
            Some(Arc::new(move |x: &[Jet]| {
                terms
                    .iter()
                    .map(|(s, i, f)| backend.partial(x, *i, f.as_ref()) * *s)
                    .sum()
            }))
        });
    }
    Ok(DifferentialForm {
        chart: Arc::clone(&a.chart),
        degree: k + 1,
        coeffs,
    })
}

/// `i_X a`.
pub fn interior_product(x_field: &VectorField, a: &DifferentialForm) -> Result<DifferentialForm> {
    ensure_same_chart(x_field.chart(), &a.chart)?;
    let n = a.dim();
    let k = a.degree;
    if k == 0 {
        return Err(Error::Precondition(
            "interior product of a 0-form".to_string(),
        ));
    }
    let xf: VectorFn = Arc::clone(x_field.func());
    let mut coeffs: Vec<Option<ScalarFn>> = Vec::with_capacity(binomial(n, k - 1));
    for j_idx in multi_indices(n, k - 1) {
        // (i_X a)_J = Σ_i X^i a(e_i, e_J)
        let mut terms: Vec<(f64, usize, ScalarFn)> = Vec::new();
        for i in 0..n {
            let mut full: Vec<usize> = std::iter::once(i).chain(j_idx.iter().copied()).collect();
            let Some(sign) = sort_with_sign(&mut full) else {
                continue;
            };
            if let Some(f) = a.coefficient_fn(&full) {
                terms.push((sign, i, Arc::clone(f)));
            }
        }
        coeffs.push(if terms.is_empty() {
            None
        } else {
            let xf = Arc::clone(&xf);
            Some(Arc::new(move |x: &[Jet]| {
                let v = xf(x);
                terms
                    .iter()
                    .filter(|(_, i, _)| !(v[*i].value() == 0.0 && v[*i].tags() == 0))
                    .map(|(s, i, f)| f(x) * v[*i] * *s)
                    .sum()
            }))
        });
    }
    Ok(DifferentialForm {
        chart: Arc::clone(&a.chart),
        degree: k - 1,
        coeffs,
    })
}

/// `L_X a = d(i_X a) + i_X(d a)`.
pub fn lie_derivative(
    x_field: &VectorField,
    a: &DifferentialForm,
    backend: DiffBackend,
) -> Result<DifferentialForm> {
    ensure_same_chart(x_field.chart(), &a.chart)?;
    let n = a.dim();
    let k = a.degree;
    let second = if k < n {
        Some(interior_product(x_field, &exterior_derivative(a, backend)?)?)
    } else {
        None
    };
    let first = if k >= 1 {
        Some(exterior_derivative(&interior_product(x_field, a)?, backend)?)
    } else {
        None
    };
    match (first, second) {
        (Some(f), Some(s)) => f.add(&s),
        (Some(f), None) => Ok(f),
        (None, Some(s)) => Ok(s),
        (None, None) => Ok(DifferentialForm::zero(&a.chart, k)),
    }
}

/// A smooth map between charts, evaluated on jets so its differential is
/// available by forward mode.
#[derive(Clone)]
pub struct SmoothMap {
    pub source: Arc<ChartManifold>,
    pub target: Arc<ChartManifold>,
    pub f: VectorFn,
    pub backend: DiffBackend,
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmoothMap({} -> {})", self.source.name, self.target.name)
    }
}

impl SmoothMap {
    pub fn new<F>(source: &Arc<ChartManifold>, target: &Arc<ChartManifold>, f: F) -> Self
    where
        F: Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    {
        SmoothMap {
            source: Arc::clone(source),
            target: Arc::clone(target),
            f: Arc::new(f),
            backend: DiffBackend::Dual,
        }
    }

    pub fn identity(chart: &Arc<ChartManifold>) -> Self {
        SmoothMap::new(chart, chart, |x| x.to_vec())
    }

    pub fn with_backend(mut self, backend: DiffBackend) -> Self {
        self.backend = backend;
        self
    }

    pub fn apply_jet(&self, x: &[Jet]) -> Vec<Jet> {
        (self.f)(x)
    }

    pub fn apply_raw(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(&constants(x)).iter().map(Jet::value).collect()
    }

    /// Pushforward of `v` at `x`.
    pub fn push_jet(&self, x: &[Jet], v: &[Jet]) -> Vec<Jet> {
        self.backend.directional_vec(x, v, self.f.as_ref())
    }

    pub fn push_raw(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        self.push_jet(&constants(x), &constants(v))
            .iter()
            .map(Jet::value)
            .collect()
    }

    /// Jacobian columns `dφ(e_j)` at `x`.
    pub fn tangent_columns(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let n = x.len();
        (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                self.push_raw(x, &e)
            })
            .collect()
    }
}

/// `φ^* a`.
pub fn pullback(map: &SmoothMap, a: &DifferentialForm) -> Result<DifferentialForm> {
    ensure_same_chart(&map.target, &a.chart)?;
    let n = map.source.dim();
    let k = a.degree;
    let a = a.clone();
    let mut coeffs: Vec<Option<ScalarFn>> = Vec::with_capacity(binomial(n, k));
    for idx in multi_indices(n, k) {
        let a = a.clone();
        let map = map.clone();
        coeffs.push(Some(Arc::new(move |x: &[Jet]| {
            let y = map.apply_jet(x);
            let vectors: Vec<Vec<Jet>> = idx
                .iter()
                .map(|&j| {
                    let mut e = vec![Jet::zero(); n];
                    e[j] = Jet::one();
                    map.push_jet(x, &e)
                })
                .collect();
            a.eval_jet(&y, &vectors)
        })));
    }
    Ok(DifferentialForm {
        chart: Arc::clone(&map.source),
        degree: k,
        coeffs,
    })
}
