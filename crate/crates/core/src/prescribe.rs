//! Realizing a time-dependent contact Hamiltonian flow as the monodromy of
//! a deformed product fibration along a radial segment.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI, TAU};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::catalog::{base_chart, product_fibration, rotation_terms, BaseCoords};
use crate::chart::Point;
use crate::contact::{verify_contact, ContactForm, ContactVerdict};
use crate::error::{Error, Result};
use crate::fibration::{ContactFibration, MonodromyMap};
use crate::field::ScalarFn;
use crate::jet::{constants, values, Jet};
use crate::ode::{rk4, IntegratorSettings};
use crate::paths::{smooth_step, BasePath};
use crate::sampling::{BoxDomain, SampleSet, SampleStrategy};

/// Steepness of the angular cutoff; keeps `|ξ'| ≤ 4`.
pub const XI_STEEPNESS: f64 = 0.7;
/// Steepness of the time reparametrization.
pub const REPARAM_STEEPNESS: f64 = 1.0;
pub const DEFAULT_BETA: f64 = 0.1;

/// `g_t(p)` as a function of `(t, p)`.
pub type HamiltonianFamily = Arc<dyn Fn(Jet, &[Jet]) -> Jet + Send + Sync>;

/// Angular cutoff: 1 on `|θ| < π/8`, 0 on `|θ| ≥ π/4`, angles taken mod 2π.
pub fn xi(theta: Jet) -> Jet {
    let shift = (theta.value() / TAU).round() * TAU;
    let th = theta - shift;
    smooth_step((-th.abs() + FRAC_PI_4) / FRAC_PI_8, XI_STEEPNESS)
}

/// `t(s)`: 0 on `[0, β]`, 1 on `[1 − β, 1]`.
pub fn reparam(s: Jet, beta: f64) -> Jet {
    smooth_step((s - beta) / (1.0 - 2.0 * beta), REPARAM_STEEPNESS)
}

#[derive(Clone)]
pub struct MonodromyPrescription {
    pub name: String,
    pub family: HamiltonianFamily,
    pub delta: f64,
    pub beta: f64,
}

impl fmt::Debug for MonodromyPrescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MonodromyPrescription")
            .field("name", &self.name)
            .field("delta", &self.delta)
            .field("beta", &self.beta)
            .finish()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub sup_g: f64,
    /// Gradient in `(t, p)`.
    pub sup_dg: f64,
    pub samples: usize,
}

impl MonodromyPrescription {
    pub fn new<F>(name: &str, delta: f64, family: F) -> Result<Self>
    where
        F: Fn(Jet, &[Jet]) -> Jet + Send + Sync + 'static,
    {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("δ must be positive, got {delta}")));
        }
        Ok(MonodromyPrescription {
            name: name.to_string(),
            family: Arc::new(family),
            delta,
            beta: DEFAULT_BETA,
        })
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 0.5) {
            return Err(Error::InvalidParameter(format!("β must lie in (0, 1/2), got {beta}")));
        }
        self.beta = beta;
        Ok(self)
    }

    /// The family scaled by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let g = Arc::clone(&self.family);
        MonodromyPrescription {
            name: format!("{}×{c}", self.name),
            family: Arc::new(move |t, p| g(t, p) * c),
            delta: self.delta,
            beta: self.beta,
        }
    }

    /// `ĝ_s = t'(s) g_{t(s)}`; vanishes for `s ∉ (β, 1 − β)`.
    pub fn g_hat(&self, s: Jet, p: &[Jet]) -> Jet {
        let beta = self.beta;
        let ts = reparam(s, beta);
        let dt = Jet::partial(&[s], 0, |x| reparam(x[0], beta));
        if dt.value() == 0.0 && dt.tags() == 0 {
            return Jet::zero();
        }
        dt * (self.family)(ts, p)
    }

    /// `g̃(r, θ, p) = ξ(θ) (2/δ) ĝ_{2(r − δ/4)/δ}(p)`.
    pub fn g_tilde(&self, r: Jet, theta: Jet, p: &[Jet]) -> Jet {
        let x = xi(theta);
        if x.value() == 0.0 && x.tags() == 0 {
            return Jet::zero();
        }
        let s = (r - self.delta / 4.0) * (2.0 / self.delta);
        x * self.g_hat(s, p) * (2.0 / self.delta)
    }

    /// The segment `r ∈ [δ/4, 3δ/4]`, `θ = 0`, on the polar disk.
    pub fn path(&self) -> BasePath {
        BasePath::radial(&base_chart(BaseCoords::Polar), self.delta / 4.0, 3.0 * self.delta / 4.0, 0.0)
    }

    /// `sup |g|` and `sup |d_{t,p} g|` over `t`-grid × fiber samples.
    pub fn bounds(&self, fiber_points: &[Vec<f64>], t_grid: usize) -> BoundsReport {
        let mut sup_g: f64 = 0.0;
        let mut sup_dg: f64 = 0.0;
        let mut n = 0;
        for k in 0..=t_grid {
            let t = k as f64 / t_grid.max(1) as f64;
            for p in fiber_points {
                let mut x = vec![t];
                x.extend_from_slice(p);
                let xj = constants(&x);
                let f = |y: &[Jet]| (self.family)(y[0], &y[1..]);
                sup_g = sup_g.max(f(&xj).value().abs());
                let grad: f64 = (0..x.len())
                    .map(|i| Jet::partial(&xj, i, f).value().powi(2))
                    .sum::<f64>()
                    .sqrt();
                sup_dg = sup_dg.max(grad);
                n += 1;
            }
        }
        BoundsReport {
            sup_g,
            sup_dg,
            samples: n,
        }
    }
}

/// `ᾱ = α₀ + r²dθ − g̃ dr` on `fiber × D²(δ)` in polar base coordinates.
pub fn prescribe_monodromy(presc: &MonodromyPrescription, fiber: &ContactForm) -> Result<ContactFibration> {
    let m = fiber.dim();
    let base = base_chart(BaseCoords::Polar);
    let mut extra = rotation_terms(m, BaseCoords::Polar, 1.0);
    let p = presc.clone();
    extra.push((
        vec![m],
        Arc::new(move |x: &[Jet]| -p.g_tilde(x[m], x[m + 1], &x[..m])) as ScalarFn,
    ));
    product_fibration(&format!("prescribed[{}]", presc.name), fiber, &base, extra, 1.0)
}

/// Samples of the total chart with base points in the deformation support
/// `[δ/4, 3δ/4] × [−π/4, π/4]` and fiber points in `fiber_box`.
pub fn support_samples(fib: &ContactFibration, delta: f64, fiber_box: &BoxDomain, count: usize, seed: u64) -> Result<SampleSet> {
    let mut lower = fiber_box.lower.clone();
    let mut upper = fiber_box.upper.clone();
    lower.extend([delta / 4.0, -FRAC_PI_4]);
    upper.extend([3.0 * delta / 4.0, FRAC_PI_4]);
    SampleSet::generate(fib.total().chart(), &BoxDomain::new(lower, upper)?, SampleStrategy::Halton, count, seed)
}

/// Contactness of `ᾱ` on the support samples: passes when the volume keeps
/// its sign and stays away from zero.
pub fn prescribed_contact(presc: &MonodromyPrescription, fiber: &ContactForm, fiber_box: &BoxDomain, count: usize, tol_contact: f64) -> Result<ContactVerdict> {
    let fib = prescribe_monodromy(presc, fiber)?;
    let s = support_samples(&fib, presc.delta, fiber_box, count, 0)?;
    let mut v = verify_contact(fib.total(), &s, tol_contact)?;
    v.passed &= v.sign_consistent;
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonEstimate {
    /// Largest tested scale `c` for which `c · g / sup|g|` keeps `ᾱ` contact.
    pub epsilon: f64,
    /// Smallest tested failing scale, if any.
    pub first_failure: Option<f64>,
    pub bisection_steps: usize,
}

/// Bisects the largest sup-norm scale keeping `ᾱ` contact on the samples.
pub fn estimate_epsilon(
    presc: &MonodromyPrescription,
    fiber: &ContactForm,
    fiber_box: &BoxDomain,
    count: usize,
    tol_contact: f64,
    c_max: f64,
    steps: usize,
) -> Result<EpsilonEstimate> {
    let fiber_pts = SampleSet::generate(fiber.chart(), fiber_box, SampleStrategy::Halton, 64, 0)?.coords();
    let sup = presc.bounds(&fiber_pts, 16).sup_g;
    if sup == 0.0 {
        return Err(Error::InvalidParameter("Hamiltonian family vanishes identically".into()));
    }
    let passes = |c: f64| -> Result<bool> {
        Ok(prescribed_contact(&presc.scaled(c / sup), fiber, fiber_box, count, tol_contact)?.passed)
    };
    if passes(c_max)? {
        return Ok(EpsilonEstimate {
            epsilon: c_max,
            first_failure: None,
            bisection_steps: 0,
        });
    }
    let (mut lo, mut hi) = (0.0, c_max);
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if passes(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(EpsilonEstimate {
        epsilon: lo,
        first_failure: Some(hi),
        bisection_steps: steps,
    })
}

/// Time-1 flow of the time-dependent Hamiltonian `g_t` on the fiber,
/// integrated directly from the contact Hamiltonian equations.
pub fn hamiltonian_time_one(fiber: &ContactForm, family: &HamiltonianFamily, p0: &[f64], steps: usize) -> Result<Vec<f64>> {
    let y = rk4(
        |t, x| {
            let g = Arc::clone(family);
            let h: ScalarFn = Arc::new(move |p: &[Jet]| g(t, p));
            fiber.hamiltonian_jet(x, &h)
        },
        Jet::zero(),
        Jet::one(),
        constants(p0),
        steps,
        |_, _, _| Ok(()),
    )?;
    Ok(values(&y))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrescriptionCheck {
    pub max_discrepancy: f64,
    pub samples: usize,
}

/// Compares the monodromy along the prescription path with the directly
/// integrated Hamiltonian flow at the given fiber points.
pub fn check_prescription(presc: &MonodromyPrescription, fiber: &ContactForm, points: &[Vec<f64>], settings: IntegratorSettings) -> Result<PrescriptionCheck> {
    let fib = prescribe_monodromy(presc, fiber)?;
    let map = MonodromyMap::new(&fib, &presc.path(), settings)?;
    let mut worst: f64 = 0.0;
    for p in points {
        Point::new(fiber.chart(), p.clone())?;
        let m = map.apply(p)?;
        let h = hamiltonian_time_one(fiber, &presc.family, p, settings.steps)?;
        worst = worst.max(fiber.chart().distance(&m, &h));
    }
    Ok(PrescriptionCheck {
        max_discrepancy: worst,
        samples: points.len(),
    })
}

/// Largest `|ξ'|` on a uniform grid over `[−π, π]`.
pub fn xi_derivative_bound(n: usize) -> f64 {
    (0..=n)
        .map(|k| {
            let th = -PI + TAU * k as f64 / n as f64;
            Jet::partial(&[Jet::constant(th)], 0, |x| xi(x[0])).value().abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{std_product_form, std_r3};
    use crate::field::DiffBackend;

    #[test]
    fn cutoff_meets_its_constraints() {
        assert!(xi_derivative_bound(20000) <= 4.0);
        for k in 0..=2000 {
            let th = -PI + TAU * k as f64 / 2000.0;
            let v = xi(Jet::constant(th)).value();
            assert!((0.0..=1.0).contains(&v));
            if th.abs() < FRAC_PI_8 {
                assert_eq!(v, 1.0);
            }
            if th.abs() >= FRAC_PI_4 {
                assert_eq!(v, 0.0);
            }
        }
        assert_eq!(xi(Jet::constant(TAU - 0.1)).value(), 1.0);
    }

    #[test]
    fn reparametrization_is_flat_near_the_ends() {
        for s in [0.0, 0.05, 0.1] {
            assert_eq!(reparam(Jet::constant(s), 0.1).value(), 0.0);
        }
        for s in [0.9, 0.95, 1.0] {
            assert_eq!(reparam(Jet::constant(s), 0.1).value(), 1.0);
        }
        let p = MonodromyPrescription::new("c", 1.0, |_, _| Jet::constant(0.3)).unwrap();
        assert_eq!(p.g_hat(Jet::constant(0.05), &[]).value(), 0.0);
        // ∫ ĝ ds = ∫ g dt
        let n = 4000;
        let integral: f64 = (0..n)
            .map(|k| p.g_hat(Jet::constant((k as f64 + 0.5) / n as f64), &[]).value() / n as f64)
            .sum();
        assert!((integral - 0.3).abs() < 1e-6, "{integral}");
    }

    #[test]
    fn zero_family_reproduces_the_product_form() {
        let fiber = std_r3(DiffBackend::Dual).unwrap();
        let p = MonodromyPrescription::new("zero", 2.0, |_, _| Jet::zero()).unwrap();
        let fib = prescribe_monodromy(&p, &fiber).unwrap();
        let std = std_product_form(&fiber, 1.0, BaseCoords::Polar).unwrap();
        for x in [[0.1, 0.2, 0.3, 0.7, 0.1], [1.0, -1.0, 0.0, 1.2, 6.0]] {
            assert_eq!(fib.total().alpha().covector_raw(&x), std.total().alpha().covector_raw(&x));
        }
    }

    #[test]
    fn linear_hamiltonian_monodromy_matches_closed_form() {
        // X_{c x} = c ∂y + c x ∂z for dz − y dx: flow y += c, z += c x
        let fiber = std_r3(DiffBackend::Dual).unwrap();
        let c = 0.05;
        let p = MonodromyPrescription::new("cx", 2.0, move |_, q| q[0] * c).unwrap();
        let pts = vec![vec![0.3, -0.2, 0.1], vec![-0.5, 0.4, 0.0]];
        let chk = check_prescription(&p, &fiber, &pts, IntegratorSettings::with_steps(400)).unwrap();
        assert!(chk.max_discrepancy < 1e-8, "{chk:?}");
        let fib = prescribe_monodromy(&p, &fiber).unwrap();
        let m = MonodromyMap::new(&fib, &p.path(), IntegratorSettings::with_steps(400)).unwrap();
        let end = m.apply(&pts[0]).unwrap();
        assert!((end[1] - (-0.2 + c)).abs() < 1e-8 && (end[2] - (0.1 + c * 0.3)).abs() < 1e-8);
    }
}
