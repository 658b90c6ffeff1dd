//! Named contact forms and product fibrations used throughout the toolkit.

use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chart::{standard, ChartManifold, Coordinate, ExcludedRegion, POLAR_CUTOFF};
use crate::contact::ContactForm;
use crate::error::{Error, Result};
use crate::fibration::ContactFibration;
use crate::field::{DiffBackend, ScalarFn};
use crate::form::DifferentialForm;
use crate::jet::Jet;

/// `cos √s`, smooth at `s = 0`.
pub fn cos_sqrt(s: Jet) -> Jet {
    if s.value() < 1e-2 {
        series(s, |k| 1.0 / factorial(2 * k))
    } else {
        s.sqrt().cos()
    }
}

/// `sin √s / √s`, smooth at `s = 0`.
pub fn sinc_sqrt(s: Jet) -> Jet {
    if s.value() < 1e-2 {
        series(s, |k| 1.0 / factorial(2 * k + 1))
    } else {
        let r = s.sqrt();
        r.sin() / r
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

// Σ (−s)^k c_k, truncated well below f64 resolution for s < 1e-2.
fn series(s: Jet, c: impl Fn(usize) -> f64) -> Jet {
    let mut acc = Jet::zero();
    let mut pow = Jet::one();
    for k in 0..8 {
        acc += pow * c(k);
        pow *= -s;
    }
    acc
}

fn one() -> ScalarFn {
    Arc::new(|_: &[Jet]| Jet::one())
}

/// `dz − y dx` on `(x, y, z)`.
pub fn std_r3(backend: DiffBackend) -> Result<ContactForm> {
    let chart = standard::euclidean("std-r3", &["x", "y", "z"]);
    let alpha = DifferentialForm::from_terms(
        &chart,
        1,
        vec![(vec![2], one()), (vec![0], Arc::new(|x: &[Jet]| -x[1]))],
    )?;
    ContactForm::new("std-r3", alpha, backend)
}

/// `cos r dz + r sin r dθ` written on `(x, y, z)` as
/// `cos r dz + (sin r / r)(x dy − y dx)`.
pub fn ot_r3(backend: DiffBackend) -> Result<ContactForm> {
    let chart = standard::euclidean("ot-r3", &["x", "y", "z"]);
    let s = |x: &[Jet]| x[0] * x[0] + x[1] * x[1];
    let alpha = DifferentialForm::from_terms(
        &chart,
        1,
        vec![
            (vec![2], Arc::new(move |x: &[Jet]| cos_sqrt(s(x))) as ScalarFn),
            (vec![1], Arc::new(move |x: &[Jet]| sinc_sqrt(s(x)) * x[0])),
            (vec![0], Arc::new(move |x: &[Jet]| -sinc_sqrt(s(x)) * x[1])),
        ],
    )?;
    ContactForm::new("ot-r3", alpha, backend)
}

/// The same form on the cylindrical chart `(r, θ, z)`.
pub fn ot_r3_cylindrical(backend: DiffBackend) -> Result<ContactForm> {
    let chart = standard::cylindrical("ot-r3-cyl");
    let alpha = DifferentialForm::from_terms(
        &chart,
        1,
        vec![
            (vec![2], Arc::new(|x: &[Jet]| x[0].cos()) as ScalarFn),
            (vec![1], Arc::new(|x: &[Jet]| x[0] * x[0].sin())),
        ],
    )?;
    ContactForm::new("ot-r3-cyl", alpha, backend)
}

/// Closed-form Reeb field of the overtwisted form: `(∂z, ∂θ)` components
/// at radius `r`.
pub fn ot_reeb_closed_form(r: f64) -> (f64, f64) {
    let den = r + r.sin() * r.cos();
    ((r.sin() + r * r.cos()) / den, r.sin() / den)
}

/// The closed form in Cartesian components, `∂θ = −y ∂x + x ∂y`.
pub fn ot_reeb_cartesian(x: &[f64]) -> [f64; 3] {
    let r = x[0].hypot(x[1]);
    if r < 1e-8 {
        // limits: z-component → 1, θ-component → 1/2
        return [-0.5 * x[1], 0.5 * x[0], 1.0];
    }
    let (rz, rt) = ot_reeb_closed_form(r);
    [-rt * x[1], rt * x[0], rz]
}

/// Coordinates used on the base disk of a product fibration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseCoords {
    /// `(bx, by)` with `r²dθ = bx dby − by dbx`.
    #[default]
    Cartesian,
    /// `(r, theta)`, polar axis excluded.
    Polar,
}

pub fn base_chart(kind: BaseCoords) -> Arc<ChartManifold> {
    match kind {
        BaseCoords::Cartesian => standard::euclidean("disk", &["bx", "by"]),
        BaseCoords::Polar => ChartManifold::with_exclusions(
            "disk-polar",
            vec![Coordinate::at_least("r", 0.0), Coordinate::periodic("theta", TAU)],
            vec![ExcludedRegion::CoordBelow {
                coord: 0,
                threshold: POLAR_CUTOFF,
            }],
        )
        .expect("static chart"),
    }
}

/// Total chart `fiber × base`, fiber coordinates first. Base names that
/// collide with fiber names get a `_b` suffix.
pub fn product_chart(fiber: &Arc<ChartManifold>, base: &Arc<ChartManifold>) -> Result<Arc<ChartManifold>> {
    let m = fiber.dim();
    let mut coords = fiber.coords.clone();
    for c in &base.coords {
        let mut c = c.clone();
        if fiber.index_of(&c.name).is_some() {
            c.name.push_str("_b");
        }
        coords.push(c);
    }
    let mut excluded = fiber.excluded.clone();
    for e in &base.excluded {
        excluded.push(match e {
            ExcludedRegion::CoordBelow { coord, threshold } => ExcludedRegion::CoordBelow {
                coord: coord + m,
                threshold: *threshold,
            },
            ExcludedRegion::RadiusBelow { a, b, threshold } => ExcludedRegion::RadiusBelow {
                a: a + m,
                b: b + m,
                threshold: *threshold,
            },
            ExcludedRegion::NormBelow { coords, threshold } => ExcludedRegion::NormBelow {
                coords: coords.iter().map(|c| c + m).collect(),
                threshold: *threshold,
            },
        });
    }
    ChartManifold::with_exclusions(&format!("{}x{}", fiber.name, base.name), coords, excluded)
}

/// One-form terms on the total chart, indexed by total coordinate.
pub type Terms = Vec<(Vec<usize>, ScalarFn)>;

/// `fiber α` pulled back to `fiber × base` plus `extra` terms, as a
/// fibration over `base`. `orientation` is the declared sign of the
/// contact volume in coordinate order.
pub fn product_fibration(
    name: &str,
    fiber: &ContactForm,
    base: &Arc<ChartManifold>,
    extra: Terms,
    orientation: f64,
) -> Result<ContactFibration> {
    if fiber.alpha().degree() != 1 {
        return Err(Error::Precondition("fiber form must be a 1-form".into()));
    }
    let total_chart = product_chart(fiber.chart(), base)?;
    let m = fiber.dim();
    let mut terms: Terms = Vec::new();
    for k in 0..m {
        if let Some(f) = fiber.alpha().coefficient_fn(&[k]) {
            let f = Arc::clone(f);
            terms.push((vec![k], Arc::new(move |x: &[Jet]| f(&x[..m]))));
        }
    }
    terms.extend(extra);
    let alpha = DifferentialForm::from_terms(&total_chart, 1, terms)?;
    let total = ContactForm::new(name, alpha, fiber.backend())?.with_orientation(orientation);
    ContactFibration::new(
        name,
        total,
        fiber.clone(),
        (0..m).collect(),
        (m..m + base.dim()).collect(),
        Arc::clone(base),
    )
}

/// The `± r²dθ` term on the base, in total coordinates.
pub fn rotation_terms(m: usize, kind: BaseCoords, sign: f64) -> Terms {
    match kind {
        BaseCoords::Cartesian => vec![
            (vec![m + 1], Arc::new(move |x: &[Jet]| x[m] * sign) as ScalarFn),
            (vec![m], Arc::new(move |x: &[Jet]| x[m + 1] * (-sign))),
        ],
        BaseCoords::Polar => vec![(vec![m + 1], Arc::new(move |x: &[Jet]| x[m] * x[m] * sign) as ScalarFn)],
    }
}

/// `α₀ ± r²dθ` on `fiber × D²`.
pub fn std_product_form(fiber: &ContactForm, sign: f64, kind: BaseCoords) -> Result<ContactFibration> {
    if sign != 1.0 && sign != -1.0 {
        return Err(Error::InvalidParameter(format!("sign must be ±1, got {sign}")));
    }
    let base = base_chart(kind);
    let name = format!("std-product[{}{}]", fiber.name(), if sign > 0.0 { "+" } else { "-" });
    let extra = rotation_terms(fiber.dim(), kind, sign);
    product_fibration(&name, fiber, &base, extra, sign)
}

/// Catalog fiber forms addressable by name.
pub fn fiber_by_name(name: &str, backend: DiffBackend) -> Result<ContactForm> {
    match name {
        "std-r3" => std_r3(backend),
        "ot-r3" => ot_r3(backend),
        "ot-r3-cyl" => ot_r3_cylindrical(backend),
        other => Err(Error::InvalidParameter(format!(
            "unknown fiber form `{other}` (expected std-r3, ot-r3, ot-r3-cyl)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Point;
    use crate::contact::{reeb_residuals, top_power, verify_contact};
    use crate::sampling::{BoxDomain, SampleSet, SampleStrategy};

    #[test]
    fn series_helpers_match_direct_formulas() {
        for s in [0.0, 1e-6, 5e-3, 0.0099, 0.0101, 2.0, 30.0] {
            let j = Jet::constant(s);
            let r: f64 = s.sqrt();
            assert!((cos_sqrt(j).value() - r.cos()).abs() < 1e-15);
            let sinc = if r == 0.0 { 1.0 } else { r.sin() / r };
            assert!((sinc_sqrt(j).value() - sinc).abs() < 1e-15);
        }
        // derivative continuity across the switch: d/ds cos √s = −sinc(√s)/2
        for s in [0.0099999, 0.0100001] {
            let d = Jet::partial(&[Jet::constant(s)], 0, |x| cos_sqrt(x[0]));
            assert!((d.value() + 0.5 * sinc_sqrt(Jet::constant(s)).value()).abs() < 1e-14);
        }
    }

    #[test]
    fn ot_reeb_sign_at_pi_and_two_pi() {
        let (z1, _) = ot_reeb_closed_form(std::f64::consts::PI);
        let (z2, _) = ot_reeb_closed_form(TAU);
        assert!((z1 + 1.0).abs() < 1e-12);
        assert!((z2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ot_reeb_solver_matches_closed_form() {
        let cf = ot_r3(DiffBackend::Dual).unwrap();
        for x in [[0.3, 0.1, 0.0], [1.0, -2.0, 0.5], [0.0, 2.9, 1.0], [1e-9, 0.0, 0.0]] {
            let r = cf.reeb_raw(&x).unwrap();
            let e = ot_reeb_cartesian(&x);
            for k in 0..3 {
                assert!((r[k] - e[k]).abs() < 1e-10, "{x:?}: {r:?} vs {e:?}");
            }
        }
        let cyl = ot_r3_cylindrical(DiffBackend::Dual).unwrap();
        let r = cyl.reeb_raw(&[2.0, 0.3, 0.0]).unwrap();
        let (rz, rt) = ot_reeb_closed_form(2.0);
        assert!(r[0].abs() < 1e-13 && (r[1] - rt).abs() < 1e-13 && (r[2] - rz).abs() < 1e-13);
    }

    #[test]
    fn product_forms_are_contact_with_fiber_reeb() {
        let fiber = std_r3(DiffBackend::Dual).unwrap();
        for (sign, kind) in [(1.0, BaseCoords::Cartesian), (-1.0, BaseCoords::Cartesian), (1.0, BaseCoords::Polar)] {
            let fib = std_product_form(&fiber, sign, kind).unwrap();
            let chart = fib.total().chart();
            let dom = match kind {
                BaseCoords::Cartesian => BoxDomain::cube(5, 1.0),
                BaseCoords::Polar => BoxDomain::new(vec![-1.0, -1.0, -1.0, 0.0, 0.0], vec![1.0, 1.0, 1.0, 1.0, TAU]).unwrap(),
            };
            let s = SampleSet::generate(chart, &dom, SampleStrategy::Halton, 200, 0).unwrap();
            let v = verify_contact(fib.total(), &s, 1e-6).unwrap();
            assert!(v.passed && v.sign_consistent, "{kind:?} {sign}: {v:?}");
            let p = &s.points[3];
            let (a, o) = fib.total().structure(p.coords());
            assert_eq!(top_power(&a, &o).signum(), sign);
            let r = fib.total().reeb_at(p).unwrap();
            assert!((r[2] - 1.0).abs() < 1e-14 && r.iter().enumerate().all(|(i, c)| i == 2 || c.abs() < 1e-14));
            let (e1, e2) = reeb_residuals(fib.total(), p.coords(), &r);
            assert!(e1 < 1e-14 && e2 < 1e-14);
        }
    }

    #[test]
    fn product_chart_renames_collisions() {
        let fiber = ot_r3_cylindrical(DiffBackend::Dual).unwrap();
        let fib = std_product_form(&fiber, 1.0, BaseCoords::Polar).unwrap();
        assert_eq!(fib.total().chart().coord_names(), ["r", "theta", "z", "r_b", "theta_b"]);
        assert!(Point::new(fib.total().chart(), vec![1.0, 0.0, 0.0, 1e-4, 0.0]).is_err());
    }
}
