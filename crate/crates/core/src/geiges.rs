//! Rotationally symmetric gluing profile for fibered sums: the form
//! `α₀ + zρr²dθ` restricted to `F × H` with `H = {F(r, z) = 0}`.

use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::catalog::{base_chart, product_fibration, rotation_terms, BaseCoords};
use crate::chart::{ChartManifold, Coordinate};
use crate::contact::ContactForm;
use crate::error::{Error, Result};
use crate::fibration::ContactFibration;
use crate::field::ScalarFn;
use crate::jet::Jet;
use crate::paths::smooth_step;

pub const DEFAULT_KAPPA: f64 = 0.5;
pub const DEFAULT_RHO: f64 = 0.05;
/// Branch charts cover `|z| ≥ BRANCH_Z`, the neck chart `|z| ≤ NECK_Z`.
pub const BRANCH_Z: f64 = 0.5;
pub const NECK_Z: f64 = 0.9;
/// Outer radius of the annulus charts.
pub const OUTER_R: f64 = 1.0;

/// `exp(1 − 1/(1 − z²))` on `|z| < 1`, zero outside.
pub fn psi(z: Jet) -> Jet {
    let q = Jet::one() - z * z;
    if q.value() < 1e-3 {
        return Jet::zero();
    }
    (Jet::one() - q.recip()).exp()
}

/// `−1` near the axis, `+1` for `r ≥ 1/2`.
pub fn outer_level(r: Jet) -> Jet {
    smooth_step(r * 2.0, 1.0) * 2.0 - 1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GluingProfile {
    pub kappa: f64,
    pub rho: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileCertificate {
    pub grid: usize,
    /// Most negative `∂F/∂r` on the grid (should be ≥ 0).
    pub min_dfdr: f64,
    /// Smallest `∂F/∂r` on `z = 0`.
    pub min_dfdr_on_axis_plane: f64,
    /// Largest `z ∂F/∂z` on the grid (should be ≤ 0).
    pub max_z_dfdz: f64,
    /// Largest `|F(r, ±1)|` for `r ≥ 1/2`.
    pub max_residual_on_planes: f64,
    /// Smallest `|∇F|` on zero-set samples.
    pub min_gradient_on_zero_set: f64,
    pub passed: bool,
}

impl Default for GluingProfile {
    fn default() -> Self {
        GluingProfile {
            kappa: DEFAULT_KAPPA,
            rho: DEFAULT_RHO,
        }
    }
}

impl GluingProfile {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("ρ must be positive, got {rho}")));
        }
        Ok(GluingProfile {
            rho,
            ..Default::default()
        })
    }

    /// `F(r, z) = a(r) − z² + κ r ψ(z)`.
    pub fn f(&self, r: Jet, z: Jet) -> Jet {
        outer_level(r) - z * z + r * psi(z) * self.kappa
    }

    pub fn f_raw(&self, r: f64, z: f64) -> f64 {
        self.f(Jet::constant(r), Jet::constant(z)).value()
    }

    pub fn gradient(&self, r: f64, z: f64) -> (f64, f64) {
        let x = [Jet::constant(r), Jet::constant(z)];
        let fr = Jet::partial(&x, 0, |y| self.f(y[0], y[1])).value();
        let fz = Jet::partial(&x, 1, |y| self.f(y[0], y[1])).value();
        (fr, fz)
    }

    /// `z = Z(r) > 0` on the upper sheet, by Newton iteration in `z`.
    pub fn upper_height(&self, r: Jet) -> Jet {
        let rv = Jet::constant(r.value());
        let mut z = 1.0;
        for _ in 0..60 {
            let zj = Jet::constant(z);
            let f = self.f(rv, zj).value();
            let fz = Jet::partial(&[zj], 0, |y| self.f(rv, y[0])).value();
            let step = f / fz;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        self.refine(Jet::constant(z), |zz| self.f(r, zz))
    }

    /// `r = R(z)` on the neck, by Newton iteration in `r`.
    pub fn neck_radius(&self, z: Jet) -> Jet {
        let zv = Jet::constant(z.value());
        let (mut lo, mut hi) = (0.0, OUTER_R);
        // F is increasing in r for |z| ≤ NECK_Z
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.f(Jet::constant(mid), zv).value() < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-16 {
                break;
            }
        }
        self.refine(Jet::constant(0.5 * (lo + hi)), |rr| self.f(rr, z))
    }

    // Newton steps carried out on jets from a converged value: each step
    // fixes one further order of the infinitesimal parts.
    fn refine<G: Fn(Jet) -> Jet>(&self, mut x: Jet, g: G) -> Jet {
        for _ in 0..6 {
            let gx = g(x);
            let dg = Jet::partial(&[x], 0, |y| g(y[0]));
            x -= gx / dg;
        }
        x
    }

    /// Smallest radius on the upper sheet at height `BRANCH_Z`.
    pub fn branch_inner_radius(&self) -> f64 {
        self.neck_radius(Jet::constant(BRANCH_Z)).value()
    }

    /// Derivative conditions on an `n × n` grid of `[0, 1.5] × [−1.5, 1.5]`.
    pub fn certify(&self, n: usize) -> ProfileCertificate {
        let mut min_dfdr = f64::INFINITY;
        let mut max_zfz = f64::NEG_INFINITY;
        for i in 0..n {
            let r = 1.5 * i as f64 / (n - 1) as f64;
            for j in 0..n {
                let z = -1.5 + 3.0 * j as f64 / (n - 1) as f64;
                let (fr, fz) = self.gradient(r, z);
                min_dfdr = min_dfdr.min(fr);
                max_zfz = max_zfz.max(z * fz);
            }
        }
        let mut min_axis = f64::INFINITY;
        let mut max_plane: f64 = 0.0;
        let mut min_grad = f64::INFINITY;
        for i in 0..n {
            let r = 1.5 * i as f64 / (n - 1) as f64;
            min_axis = min_axis.min(self.gradient(r, 0.0).0);
            if r >= 0.5 {
                max_plane = max_plane.max(self.f_raw(r, 1.0).abs()).max(self.f_raw(r, -1.0).abs());
            }
            // zero set: neck points and upper sheet points
            let z = -NECK_Z + 2.0 * NECK_Z * i as f64 / (n - 1) as f64;
            let rn = self.neck_radius(Jet::constant(z)).value();
            let (a, b) = self.gradient(rn, z);
            min_grad = min_grad.min(a.hypot(b));
            let rb = self.branch_inner_radius() + (OUTER_R - self.branch_inner_radius()) * i as f64 / (n - 1) as f64;
            let zb = self.upper_height(Jet::constant(rb)).value();
            let (a, b) = self.gradient(rb, zb);
            min_grad = min_grad.min(a.hypot(b));
        }
        ProfileCertificate {
            grid: n,
            passed: min_dfdr >= -1e-12 && min_axis > 0.0 && max_zfz <= 1e-12 && max_plane <= 1e-12 && min_grad > 1e-6,
            min_dfdr,
            min_dfdr_on_axis_plane: min_axis,
            max_z_dfdz: max_zfz,
            max_residual_on_planes: max_plane,
            min_gradient_on_zero_set: min_grad,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sheet {
    Upper,
    Lower,
    Neck,
}

fn annulus_chart(lo: f64) -> Arc<ChartManifold> {
    ChartManifold::new(
        "annulus",
        vec![Coordinate::bounded("r", lo, OUTER_R), Coordinate::periodic("theta", TAU)],
    )
    .expect("static chart")
}

fn neck_chart() -> Arc<ChartManifold> {
    ChartManifold::new(
        "neck",
        vec![Coordinate::bounded("z", -NECK_Z, NECK_Z), Coordinate::periodic("theta", TAU)],
    )
    .expect("static chart")
}

/// The glued form on one chart of `F × H`, fibered over the `(r, θ)` or
/// `(z, θ)` coordinates of `H`.
pub fn glued_fibration(profile: &GluingProfile, fiber: &ContactForm, sheet: Sheet) -> Result<ContactFibration> {
    let m = fiber.dim();
    let rho = profile.rho;
    let p = profile.clone();
    let name = format!("geiges-glued[{sheet:?}, ρ={rho}]");
    match sheet {
        Sheet::Upper | Sheet::Lower => {
            let sign = if sheet == Sheet::Upper { 1.0 } else { -1.0 };
            let base = annulus_chart(p.branch_inner_radius());
            let coef: ScalarFn = Arc::new(move |x: &[Jet]| {
                let r = x[m];
                p.upper_height(r) * r * r * (sign * rho)
            });
            product_fibration(&name, fiber, &base, vec![(vec![m + 1], coef)], sign)
        }
        Sheet::Neck => {
            let base = neck_chart();
            let coef: ScalarFn = Arc::new(move |x: &[Jet]| {
                let z = x[m];
                let r = p.neck_radius(z);
                z * r * r * rho
            });
            product_fibration(&name, fiber, &base, vec![(vec![m + 1], coef)], 1.0)
        }
    }
}

/// The normal model `α₀ + ρ(−1)^j r²dθ` on the polar disk.
pub fn normal_model(fiber: &ContactForm, rho: f64, j: u32) -> Result<ContactFibration> {
    let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
    let m = fiber.dim();
    let terms = rotation_terms(m, BaseCoords::Polar, sign * rho);
    product_fibration(&format!("normal-model[{j}]"), fiber, &base_chart(BaseCoords::Polar), terms, sign)
}
