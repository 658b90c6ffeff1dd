//! The T²-invariant form `ε(Φ₁ dθ₁ + Φ₂ dθ₂) + β` on `S³ × T²` built from
//! the open book of `z₁` on the standard sphere.

use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::catalog::{product_chart, product_fibration, Terms};
use crate::chart::{standard, ChartManifold, Coordinate};
use crate::contact::{top_power, ContactForm};
use crate::error::{Error, Result};
use crate::fibration::ContactFibration;
use crate::field::{DiffBackend, ScalarFn};
use crate::form::{pullback, DifferentialForm, SmoothMap};
use crate::jet::{constants, Jet};
use crate::linalg::{norm, orthogonal_complement};

/// Inverse stereographic projection `ℝ³ → S³ ⊂ ℂ²`,
/// `u ↦ (2u, |u|² − 1) / (|u|² + 1)` as `(x₁, y₁, x₂, y₂)`.
pub fn inverse_stereographic(u: &[Jet]) -> Vec<Jet> {
    let s = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    let d = (s + 1.0).recip();
    vec![u[0] * d * 2.0, u[1] * d * 2.0, u[2] * d * 2.0, (s - 1.0) * d]
}

pub fn torus_chart() -> Arc<ChartManifold> {
    ChartManifold::new(
        "T2",
        vec![Coordinate::periodic("theta1", TAU), Coordinate::periodic("theta2", TAU)],
    )
    .expect("static chart")
}

/// Open book `(z₁ = 0, arg z₁)` on `S³` with smoothed radial profile
/// `ρ(|z₁|) = |z₁| ρ_max / √(ρ_max² + |z₁|²)`.
#[derive(Clone, Debug)]
pub struct OpenBookData {
    pub rho_max: f64,
    /// `β`: the standard contact form of `S³` in the stereographic chart.
    pub page_form: ContactForm,
    pub embedding: SmoothMap,
}

impl OpenBookData {
    pub fn standard_s3(rho_max: f64, backend: DiffBackend) -> Result<Self> {
        if rho_max.is_nan() || rho_max <= 0.0 {
            return Err(Error::InvalidParameter(format!("ρ_max must be positive, got {rho_max}")));
        }
        let chart = standard::euclidean("S3-stereo", &["u1", "u2", "u3"]);
        let c2 = standard::euclidean("C2", &["x1", "y1", "x2", "y2"]);
        let half = |i: usize, j: usize, sign: f64| -> (Vec<usize>, ScalarFn) {
            (vec![i], Arc::new(move |x: &[Jet]| x[j] * (0.5 * sign)))
        };
        // ½ Σ (x dy − y dx)
        let lambda = DifferentialForm::from_terms(&c2, 1, vec![half(1, 0, 1.0), half(0, 1, -1.0), half(3, 2, 1.0), half(2, 3, -1.0)])?;
        let embedding = SmoothMap::new(&chart, &c2, inverse_stereographic);
        let beta = pullback(&embedding, &lambda)?;
        Ok(OpenBookData {
            rho_max,
            page_form: ContactForm::new("S3-std", beta, backend)?,
            embedding,
        })
    }

    /// `(Φ₁, Φ₂) = ρ(|z₁|) · z₁/|z₁|`, smooth across the binding.
    pub fn phi_jet(&self, u: &[Jet]) -> (Jet, Jet) {
        let e = inverse_stereographic(u);
        let m = self.rho_max;
        let scale = (e[0] * e[0] + e[1] * e[1] + m * m).sqrt().recip() * m;
        (e[0] * scale, e[1] * scale)
    }

    pub fn phi(&self, u: &[f64]) -> (f64, f64) {
        let (a, b) = self.phi_jet(&constants(u));
        (a.value(), b.value())
    }

    /// Page angle `arg z₁`; `None` on the binding.
    pub fn phase(&self, u: &[f64]) -> Option<f64> {
        let (a, b) = self.phi(u);
        (a.hypot(b) > 0.0).then(|| b.atan2(a))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    /// Smallest `|dβ|` on unit-area page tangent planes.
    pub min_page_area: f64,
    /// Largest normal component of the Reeb field of `β` on binding samples.
    pub max_binding_reeb_normal: f64,
    pub page_samples: usize,
    pub binding_samples: usize,
}

/// Pages symplectic for `dβ` and Reeb field tangent to the binding.
pub fn check_open_book(ob: &OpenBookData, page_points: &[Vec<f64>], binding_heights: &[f64]) -> Result<CompatibilityReport> {
    let cf = &ob.page_form;
    let mut min_area = f64::INFINITY;
    let mut used = 0;
    for u in page_points {
        // tangent plane of the page: kernel of d(arg z₁) = d atan2(Φ₂, Φ₁)
        let uj = constants(u);
        let grad: Vec<f64> = (0..3)
            .map(|i| {
                Jet::partial(&uj, i, |x| {
                    let (a, b) = ob.phi_jet(x);
                    b.atan2(a)
                })
                .value()
            })
            .collect();
        if norm(&grad) == 0.0 || ob.phase(u).is_none() {
            continue;
        }
        let plane = orthogonal_complement(&grad);
        let (_, omega) = cf.structure(u);
        let w: f64 = (0..3)
            .map(|i| (0..3).map(|j| plane[0][i] * omega[i][j] * plane[1][j]).sum::<f64>())
            .sum();
        min_area = min_area.min(w.abs());
        used += 1;
    }
    let mut max_normal: f64 = 0.0;
    for &h in binding_heights {
        let r = cf.reeb_raw(&[0.0, 0.0, h])?;
        max_normal = max_normal.max(r[0].hypot(r[1]) / norm(&r));
    }
    Ok(CompatibilityReport {
        min_page_area: min_area,
        max_binding_reeb_normal: max_normal,
        page_samples: used,
        binding_samples: binding_heights.len(),
    })
}

/// Orientation sign of the form at a reference point off the binding.
fn reference_orientation(fib_alpha: &ContactForm) -> f64 {
    let (a, o) = fib_alpha.structure(&[0.3, 0.2, 0.1, 0.0, 0.0]);
    let v = top_power(&a, &o);
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// `α_ε` without the `ε ≠ 0` check, for probing the degenerate case.
pub fn bourgeois_raw(ob: &OpenBookData, eps: f64) -> Result<ContactFibration> {
    let m = 3;
    let terms: Terms = (0..2)
        .map(|k| {
            let ob = ob.clone();
            (
                vec![m + k],
                Arc::new(move |x: &[Jet]| {
                    let (a, b) = ob.phi_jet(&x[..m]);
                    if k == 0 {
                        a * eps
                    } else {
                        b * eps
                    }
                }) as ScalarFn,
            )
        })
        .collect();
    let torus = torus_chart();
    let probe = product_fibration(&format!("bourgeois[{eps}]"), &ob.page_form, &torus, terms.clone(), 1.0)?;
    let orient = reference_orientation(probe.total());
    product_fibration(&format!("bourgeois[{eps}]"), &ob.page_form, &torus, terms, orient)
}

/// `α_ε = ε(Φ₁ dθ₁ + Φ₂ dθ₂) + β` on `S³ × T²`, fibered over `T²`.
pub fn bourgeois_form(ob: &OpenBookData, eps: f64) -> Result<ContactFibration> {
    if eps == 0.0 || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("ε must be nonzero and finite, got {eps}")));
    }
    bourgeois_raw(ob, eps)
}

/// The total chart `S³-stereo × T²`.
pub fn bourgeois_chart(ob: &OpenBookData) -> Result<Arc<ChartManifold>> {
    product_chart(ob.page_form.chart(), &torus_chart())
}
