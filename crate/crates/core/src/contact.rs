//! Contact forms: volume, Reeb and Hamiltonian solvers, and checks on maps
//! and submanifolds.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chart::{ensure_same_chart, ChartManifold, Point};
use crate::error::{Error, Result};
use crate::field::{DiffBackend, ScalarField, ScalarFn, VectorField};
use crate::form::{binomial, exterior_derivative, multi_indices, rank, sort_with_sign, DifferentialForm, SmoothMap};
use crate::jet::{constants, values, Jet};
use crate::linalg::{dot, lu_solve, normalized_gram_determinant, orthogonal_complement};
use crate::sampling::SampleSet;

/// Relative pivot threshold for the pointwise solves.
pub const PIVOT_TOL: f64 = 1e-12;
pub const DEFAULT_TOL_CONTACT: f64 = 1e-6;

#[derive(Clone)]
pub struct ContactForm {
    name: String,
    alpha: DifferentialForm,
    dalpha: DifferentialForm,
    orientation_sign: f64,
    backend: DiffBackend,
}

impl fmt::Debug for ContactForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContactForm")
            .field("name", &self.name)
            .field("chart", &self.alpha.chart().name)
            .field("orientation_sign", &self.orientation_sign)
            .field("backend", &self.backend)
            .finish()
    }
}

impl ContactForm {
    pub fn new(name: &str, alpha: DifferentialForm, backend: DiffBackend) -> Result<Self> {
        if alpha.degree() != 1 {
            return Err(Error::Precondition(format!(
                "contact form must have degree 1, got {}",
                alpha.degree()
            )));
        }
        if alpha.dim().is_multiple_of(2) {
            return Err(Error::Precondition(format!(
                "contact forms live in odd dimension, chart has {}",
                alpha.dim()
            )));
        }
        let dalpha = exterior_derivative(&alpha, backend)?;
        Ok(ContactForm {
            name: name.to_string(),
            alpha,
            dalpha,
            orientation_sign: 1.0,
            backend,
        })
    }

    pub fn with_orientation(mut self, sign: f64) -> Self {
        self.orientation_sign = if sign < 0.0 { -1.0 } else { 1.0 };
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn chart(&self) -> &Arc<ChartManifold> {
        self.alpha.chart()
    }

    pub fn alpha(&self) -> &DifferentialForm {
        &self.alpha
    }

    pub fn dalpha(&self) -> &DifferentialForm {
        &self.dalpha
    }

    pub fn dim(&self) -> usize {
        self.alpha.dim()
    }

    pub fn backend(&self) -> DiffBackend {
        self.backend
    }

    pub fn orientation_sign(&self) -> f64 {
        self.orientation_sign
    }

    /// Coefficients `a_i` of α and the matrix `Ω_ij = dα(e_i, e_j)`.
    pub fn structure_jet(&self, x: &[Jet]) -> (Vec<Jet>, Vec<Vec<Jet>>) {
        let n = x.len();
        let a = self.alpha.coefficients_jet(x);
        let coeffs = |y: &[Jet]| self.alpha.coefficients_jet(y);
        let mut jac = Vec::with_capacity(n);
        for i in 0..n {
            let mut e = vec![Jet::zero(); n];
            e[i] = Jet::one();
            jac.push(self.backend.directional_vec(x, &e, &coeffs));
        }
        let mut omega = vec![vec![Jet::zero(); n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let w = jac[i][j] - jac[j][i];
                omega[i][j] = w;
                omega[j][i] = -w;
            }
        }
        (a, omega)
    }

    pub fn structure(&self, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let (a, o) = self.structure_jet(&constants(x));
        (values(&a), o.iter().map(|r| values(r)).collect())
    }

    /// `α ∧ (dα)^{n-1}` on the coordinate frame, times the orientation sign.
    pub fn volume_raw(&self, x: &[f64]) -> f64 {
        let (a, omega) = self.structure(x);
        self.orientation_sign * top_power(&a, &omega)
    }

    pub fn contact_volume(&self, p: &Point) -> Result<f64> {
        ensure_same_chart(self.chart(), p.chart())?;
        Ok(self.volume_raw(p.coords()))
    }

    /// Solves `α(R) = 1`, `i_R dα = 0` at a jet point.
    pub fn reeb_jet(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        let (a, omega) = self.structure_jet(x);
        let n = a.len();
        let mut m = vec![vec![Jet::zero(); n + 1]; n + 1];
        for i in 0..n {
            m[i][..n].copy_from_slice(&omega[i]);
            m[i][n] = a[i];
            m[n][i] = a[i];
        }
        let mut rhs = vec![Jet::zero(); n + 1];
        rhs[n] = Jet::one();
        let mut sol = lu_solve(m, rhs, PIVOT_TOL).ok_or_else(|| Error::SingularSystem {
            what: format!("Reeb system of {}", self.name),
            at: values(x),
        })?;
        sol.truncate(n);
        Ok(sol)
    }

    pub fn reeb_raw(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(values(&self.reeb_jet(&constants(x))?))
    }

    pub fn reeb_at(&self, p: &Point) -> Result<Vec<f64>> {
        ensure_same_chart(self.chart(), p.chart())?;
        self.reeb_raw(p.coords())
    }

    /// Solves `α(X) = H`, `i_X dα = (d_R H) α − dH` at a jet point.
    pub fn hamiltonian_jet(&self, x: &[Jet], h: &ScalarFn) -> Result<Vec<Jet>> {
        let n = x.len();
        let (a, omega) = self.structure_jet(x);
        let grad: Vec<Jet> = (0..n).map(|i| self.backend.partial(x, i, h.as_ref())).collect();
        let reeb = self.reeb_jet(x)?;
        let dr_h: Jet = grad.iter().zip(&reeb).map(|(g, r)| *g * *r).sum();
        let mut m = vec![vec![Jet::zero(); n + 1]; n + 1];
        let mut rhs = vec![Jet::zero(); n + 1];
        for i in 0..n {
            for j in 0..n {
                m[i][j] = -omega[i][j];
            }
            m[i][n] = a[i];
            m[n][i] = a[i];
            rhs[i] = dr_h * a[i] - grad[i];
        }
        rhs[n] = h(x);
        let mut sol = lu_solve(m, rhs, PIVOT_TOL).ok_or_else(|| Error::SingularSystem {
            what: format!("Hamiltonian system of {}", self.name),
            at: values(x),
        })?;
        sol.truncate(n);
        Ok(sol)
    }

    /// `α` evaluated on a vector at `x`.
    pub fn alpha_on(&self, x: &[f64], v: &[f64]) -> f64 {
        dot(&self.alpha.covector_raw(x), v)
    }
}

/// `α ∧ ω^k` on the coordinate frame of `ℝ^{2k+1}`, with `ω` given by its
/// antisymmetric matrix.
pub fn top_power(a: &[f64], omega: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let two: Vec<f64> = multi_indices(n, 2)
        .iter()
        .map(|ij| omega[ij[0]][ij[1]])
        .collect();
    let mut acc = a.to_vec();
    let mut deg = 1;
    while deg < n {
        acc = numeric_wedge(n, deg, &acc, 2, &two);
        deg += 2;
    }
    acc[0]
}

/// Wedge of two constant forms given by coefficient vectors.
pub fn numeric_wedge(n: usize, p: usize, a: &[f64], q: usize, b: &[f64]) -> Vec<f64> {
    let k = p + q;
    if k > n {
        return Vec::new();
    }
    let mut out = vec![0.0; binomial(n, k)];
    for (ia, ai) in multi_indices(n, p).iter().zip(a) {
        if *ai == 0.0 {
            continue;
        }
        for (ib, bi) in multi_indices(n, q).iter().zip(b) {
            if *bi == 0.0 {
                continue;
            }
            let mut idx: Vec<usize> = ia.iter().chain(ib).copied().collect();
            if let Some(s) = sort_with_sign(&mut idx) {
                out[rank(n, &idx)] += s * ai * bi;
            }
        }
    }
    out
}

/// The Reeb field as a vector field; points where the system is singular
/// evaluate to NaN (use [`ContactForm::reeb_at`] for checked access).
#[derive(Clone, Debug)]
pub struct ReebField {
    pub field: VectorField,
    pub source: String,
}

pub fn reeb_field(cf: &ContactForm) -> ReebField {
    let cf2 = cf.clone();
    let n = cf.dim();
    ReebField {
        field: VectorField::new(cf.chart(), move |x| {
            cf2.reeb_jet(x)
                .unwrap_or_else(|_| vec![Jet::constant(f64::NAN); n])
        }),
        source: cf.name.clone(),
    }
}

/// `(|α(R) − 1|, max_i |dα(R, e_i)|)` at `x`.
pub fn reeb_residuals(cf: &ContactForm, x: &[f64], r: &[f64]) -> (f64, f64) {
    let (a, omega) = cf.structure(x);
    let e1 = (dot(&a, r) - 1.0).abs();
    let e2 = (0..a.len())
        .map(|i| (0..a.len()).map(|j| r[j] * omega[j][i]).sum::<f64>().abs())
        .fold(0.0, f64::max);
    (e1, e2)
}

/// The contact Hamiltonian vector field of `h`.
pub fn hamiltonian_field(cf: &ContactForm, h: &ScalarField) -> Result<VectorField> {
    ensure_same_chart(cf.chart(), h.chart())?;
    let cf2 = cf.clone();
    let hf = Arc::clone(h.func());
    let n = cf.dim();
    Ok(VectorField::new(cf.chart(), move |x| {
        cf2.hamiltonian_jet(x, &hf)
            .unwrap_or_else(|_| vec![Jet::constant(f64::NAN); n])
    }))
}

/// Residuals `(|α(X) − H|, max_i |dα(X, e_i) − (d_R H) a_i + ∂_i H|)`.
pub fn hamiltonian_residuals(cf: &ContactForm, h: &ScalarField, x: &[f64], v: &[f64]) -> Result<(f64, f64)> {
    let n = x.len();
    let xj = constants(x);
    let (a, omega) = cf.structure(x);
    let grad: Vec<f64> = (0..n)
        .map(|i| cf.backend.partial(&xj, i, h.func().as_ref()).value())
        .collect();
    let r = cf.reeb_raw(x)?;
    let dr_h = dot(&grad, &r);
    let e1 = (dot(&a, v) - h.eval_jet(&xj).value()).abs();
    let e2 = (0..n)
        .map(|i| {
            let lhs: f64 = (0..n).map(|j| v[j] * omega[j][i]).sum();
            (lhs - (dr_h * a[i] - grad[i])).abs()
        })
        .fold(0.0, f64::max);
    Ok((e1, e2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactVerdict {
    pub min_abs_volume: f64,
    pub argmin: Vec<f64>,
    pub median_abs_volume: f64,
    pub tol_contact: f64,
    /// All sampled volumes carry the orientation sign.
    pub sign_consistent: bool,
    pub samples: usize,
    pub passed: bool,
}

pub fn verify_contact(cf: &ContactForm, samples: &SampleSet, tol_contact: f64) -> Result<ContactVerdict> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let mut vols = Vec::with_capacity(samples.len());
    for p in samples.iter() {
        vols.push(cf.contact_volume(p)?);
    }
    if let Some(i) = vols.iter().position(|v| !v.is_finite()) {
        return Err(Error::SingularSystem {
            what: "contact volume is not finite".to_string(),
            at: samples.points[i].coords().to_vec(),
        });
    }
    let (imin, min_abs) = vols
        .iter()
        .map(|v| v.abs())
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let mut abs: Vec<f64> = vols.iter().map(|v| v.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let median = abs[abs.len() / 2];
    let passed = median > 0.0 && min_abs > tol_contact * median;
    Ok(ContactVerdict {
        min_abs_volume: min_abs,
        argmin: samples.points[imin].coords().to_vec(),
        median_abs_volume: median,
        tol_contact,
        sign_consistent: vols.iter().all(|v| *v > 0.0),
        samples: vols.len(),
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalReport {
    pub max_kernel_violation: f64,
    /// `(point, λ)` with `m^*α = λ α` fitted by least squares.
    pub conformal_factor_samples: Vec<(Vec<f64>, f64)>,
    pub min_lambda: f64,
    pub max_abs_lambda_minus_one: f64,
}

impl ConformalReport {
    pub fn accepted(&self, tol: f64) -> bool {
        self.max_kernel_violation <= tol && self.min_lambda > 0.0
    }
}

/// Measures how far `map` is from preserving `ker α` on the sampled points.
pub fn check_contactomorphism(cf: &ContactForm, map: &SmoothMap, samples: &[Point]) -> Result<ConformalReport> {
    ensure_same_chart(cf.chart(), &map.source)?;
    ensure_same_chart(cf.chart(), &map.target)?;
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let mut max_violation: f64 = 0.0;
    let mut lambdas = Vec::with_capacity(samples.len());
    for p in samples {
        ensure_same_chart(cf.chart(), p.chart())?;
        let x = p.coords();
        let a = cf.alpha.covector_raw(x);
        let na = dot(&a, &a).sqrt();
        let y = map.apply_raw(x);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::LeftDomain {
                t: 1.0,
                reason: format!("map undefined at {x:?}"),
            });
        }
        let a_img = cf.alpha.covector_raw(&y);
        for w in orthogonal_complement(&a) {
            let dw = map.push_raw(x, &w);
            max_violation = max_violation.max(dot(&a_img, &dw).abs());
        }
        let unit: Vec<f64> = a.iter().map(|v| v / na).collect();
        let lambda = dot(&a_img, &map.push_raw(x, &unit)) / na;
        lambdas.push((x.to_vec(), lambda));
    }
    let min_lambda = lambdas.iter().map(|l| l.1).fold(f64::INFINITY, f64::min);
    let dev = lambdas.iter().map(|l| (l.1 - 1.0).abs()).fold(0.0, f64::max);
    Ok(ConformalReport {
        max_kernel_violation: max_violation,
        conformal_factor_samples: lambdas,
        min_lambda,
        max_abs_lambda_minus_one: dev,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotropyReport {
    pub max_violation: f64,
    pub argmax: Vec<f64>,
    /// Parameters where the differential lost rank.
    pub rank_deficient: Vec<Vec<f64>>,
    pub samples: usize,
}

impl IsotropyReport {
    pub fn is_isotropic(&self, tol: f64) -> bool {
        self.max_violation <= tol && self.rank_deficient.is_empty()
    }
}

pub const RANK_TOL: f64 = 1e-10;

/// Largest `|α(T)|` over the given tangent vectors at `x`.
pub fn isotropy_violation(cf: &ContactForm, x: &[f64], tangents: &[Vec<f64>]) -> f64 {
    let a = cf.alpha.covector_raw(x);
    tangents
        .iter()
        .map(|t| dot(&a, t).abs())
        .fold(0.0, f64::max)
}

/// `max |α(dι(e_j))|` over parameter samples of an immersion.
pub fn check_isotropic(cf: &ContactForm, immersion: &SmoothMap, params: &[Vec<f64>]) -> Result<IsotropyReport> {
    ensure_same_chart(cf.chart(), &immersion.target)?;
    if params.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let mut report = IsotropyReport {
        max_violation: 0.0,
        argmax: params[0].clone(),
        rank_deficient: Vec::new(),
        samples: params.len(),
    };
    for u in params {
        if u.len() != immersion.source.dim() {
            return Err(Error::DimensionMismatch {
                expected: immersion.source.dim(),
                got: u.len(),
            });
        }
        let x = immersion.apply_raw(u);
        let cols = immersion.tangent_columns(u);
        if normalized_gram_determinant(&cols) < RANK_TOL {
            report.rank_deficient.push(u.clone());
            continue;
        }
        let v = isotropy_violation(cf, &x, &cols);
        if v > report.max_violation {
            report.max_violation = v;
            report.argmax = u.clone();
        }
    }
    Ok(report)
}
