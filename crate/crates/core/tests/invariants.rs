//! Structural invariants of the calculus, contact and transport layers.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use contactlab::bourgeois::{bourgeois_form, OpenBookData};
use contactlab::catalog::{ot_r3, ot_r3_cylindrical, std_product_form, std_r3, BaseCoords};
use contactlab::contact::{check_contactomorphism, hamiltonian_field, reeb_field, reeb_residuals, verify_contact, ContactForm};
use contactlab::fibration::{horizontality_defect, lift_from_fiber, transport_submanifold, MonodromyMap};
use contactlab::field::ScalarFn;
use contactlab::form::{exterior_derivative, SmoothMap};
use contactlab::geiges::{glued_fibration, GluingProfile, Sheet};
use contactlab::linalg::orthogonal_complement;
use contactlab::ode::{flow, flow_map, IntegratorSettings};
use contactlab::paths::BasePath;
use contactlab::prescribe::{check_prescription, prescribe_monodromy, MonodromyPrescription};
use contactlab::sampling::{BoxDomain, SampleSet, SampleStrategy};
use contactlab::{ChartManifold, DiffBackend, DifferentialForm, Jet, Point, ScalarField};

fn chart_box(chart: &ChartManifold) -> BoxDomain {
    let lower = chart.coords.iter().map(|c| c.lower.unwrap_or(if c.period.is_some() { 0.0 } else { -1.0 })).collect();
    let upper = chart.coords.iter().map(|c| c.upper.or(c.period).unwrap_or(1.0)).collect();
    BoxDomain::new(lower, upper).unwrap()
}

fn samples(chart: &Arc<ChartManifold>, n: usize) -> SampleSet {
    SampleSet::generate(chart, &chart_box(chart), SampleStrategy::Halton, n, 0).unwrap()
}

fn catalog() -> Vec<(String, ContactForm)> {
    let std = std_r3(DiffBackend::Dual).unwrap();
    let ot = ot_r3(DiffBackend::Dual).unwrap();
    let ob = OpenBookData::standard_s3(0.5, DiffBackend::Dual).unwrap();
    let presc = MonodromyPrescription::new("x", 2.0, |_, p| p[0] * 0.05).unwrap();
    let profile = GluingProfile::new(0.05).unwrap();
    let mut out = vec![
        ("std-r3".to_string(), std.clone()),
        ("ot-r3".to_string(), ot.clone()),
        ("ot-r3-cylindrical".to_string(), ot_r3_cylindrical(DiffBackend::Dual).unwrap()),
        ("std-product".to_string(), std_product_form(&std, 1.0, BaseCoords::Cartesian).unwrap().total().clone()),
        ("std-product-minus".to_string(), std_product_form(&std, -1.0, BaseCoords::Polar).unwrap().total().clone()),
        ("ot-product".to_string(), std_product_form(&ot, 1.0, BaseCoords::Cartesian).unwrap().total().clone()),
        ("prescribed".to_string(), prescribe_monodromy(&presc, &std).unwrap().total().clone()),
        ("s3".to_string(), ob.page_form.clone()),
        ("bourgeois".to_string(), bourgeois_form(&ob, 0.05).unwrap().total().clone()),
    ];
    for sheet in [Sheet::Upper, Sheet::Lower, Sheet::Neck] {
        out.push((format!("geiges-{sheet:?}"), glued_fibration(&profile, &std, sheet).unwrap().total().clone()));
    }
    out
}

#[test]
fn catalog_forms_are_contact_with_their_orientation() {
    for (name, cf) in catalog() {
        let v = verify_contact(&cf, &samples(cf.chart(), 500), 1e-6).unwrap();
        assert!(v.passed && v.sign_consistent, "{name}: {v:?}");
    }
}

#[test]
fn reeb_defining_equations_hold_on_the_catalog() {
    for (name, cf) in catalog() {
        let mut worst: f64 = 0.0;
        for p in samples(cf.chart(), 1000).iter() {
            let r = cf.reeb_at(p).unwrap();
            let (e1, e2) = reeb_residuals(&cf, p.coords(), &r);
            worst = worst.max(e1).max(e2);
        }
        assert!(worst <= 1e-8, "{name}: {worst}");
    }
}

#[test]
fn reeb_field_is_the_unique_solution() {
    let cf = ot_r3(DiffBackend::Dual).unwrap();
    for p in samples(cf.chart(), 50).iter() {
        let x = p.coords();
        let r = cf.reeb_raw(x).unwrap();
        let base = {
            let (a, b) = reeb_residuals(&cf, x, &r);
            a + b
        };
        for w in orthogonal_complement(&cf.alpha().covector_raw(x)) {
            for s in [1e-3, 0.1, -0.5] {
                let q: Vec<f64> = r.iter().zip(&w).map(|(a, b)| a + s * b).collect();
                let (a, b) = reeb_residuals(&cf, x, &q);
                assert!(a + b > base, "perturbation {s} along {w:?} at {x:?}");
            }
        }
    }
}

#[test]
fn central_difference_d_squared_is_small() {
    let chart = contactlab::chart::standard::euclidean("R3", &["x", "y", "z"]);
    let a = DifferentialForm::one_form_from(
        &chart,
        vec![
            (0, Arc::new(|x: &[Jet]| x[1] * x[1] * x[2]) as ScalarFn),
            (1, Arc::new(|x: &[Jet]| x[0] * x[2] * x[2] * x[2])),
            (2, Arc::new(|x: &[Jet]| x[0] * x[1] * x[0])),
        ]
        .into_iter()
        .map(|(i, f)| (i, move |x: &[Jet]| f(x)))
        .collect(),
    )
    .unwrap();
    let backend = DiffBackend::CentralDifference { h: 1e-3 };
    let dd = exterior_derivative(&exterior_derivative(&a, backend).unwrap(), backend).unwrap();
    for p in samples(&chart, 100).iter() {
        let c = dd.coefficients(p).unwrap();
        assert!(c.iter().all(|v| v.abs() <= 1e-8), "{c:?}");
    }
}

#[test]
fn hamiltonian_flow_is_a_contactomorphism_at_integrator_order() {
    let cf = ot_r3(DiffBackend::Dual).unwrap();
    let h = ScalarField::new(cf.chart(), |x: &[Jet]| x[0].sin() + x[1] * x[2]);
    let field = hamiltonian_field(&cf, &h).unwrap();
    let pts: Vec<Point> = samples(cf.chart(), 30).points;
    let violation = |steps: usize| {
        check_contactomorphism(&cf, &flow_map(&field, 0.5, steps), &pts)
            .unwrap()
            .max_kernel_violation
    };
    let (v1, v2, v3) = (violation(4), violation(8), violation(16));
    assert!(v1 / v2 > 8.0 && v2 / v3 > 8.0, "{v1} {v2} {v3}");
    assert!(v3 < 1e-5);
}

fn ot_product() -> (ContactForm, contactlab::fibration::ContactFibration) {
    let fiber = ot_r3(DiffBackend::Dual).unwrap();
    let fib = std_product_form(&fiber, 1.0, BaseCoords::Cartesian).unwrap();
    (fiber, fib)
}

#[test]
fn horizontality_defect_decays_at_integrator_order() {
    let (_, fib) = ot_product();
    let path = BasePath::circle(fib.base_chart(), [0.0, 0.0], 0.7, 1.0);
    let defect = |steps: usize| {
        let traj = lift_from_fiber(&fib, &path, &[0.4, -0.3, 0.2], &IntegratorSettings { steps, checkpoint_every: 1 }).unwrap();
        horizontality_defect(&fib, &traj, 1)
    };
    let (d1, d2) = (defect(50), defect(100));
    assert!(d1 / d2 > 8.0, "{d1} -> {d2}");
}

#[test]
fn ellipse_monodromy_follows_the_area_law() {
    let (fiber, fib) = ot_product();
    let (a, b) = (0.6, 0.25);
    for turns in [1.0, -1.0] {
        let path = BasePath::ellipse(fib.base_chart(), [0.1, -0.2], a, b, turns);
        let m = MonodromyMap::new(&fib, &path, IntegratorSettings::with_steps(1000)).unwrap();
        for v in [[0.3, 0.1, -0.2], [-0.5, 0.6, 0.4]] {
            let got = m.apply(&v).unwrap();
            let want = flow(&reeb_field(&fiber).field, &v, -2.0 * turns * PI * a * b, 4000).unwrap();
            let err = got.iter().zip(&want).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8, "{turns}: {err}");
        }
    }
}

#[test]
fn monodromy_of_concatenated_loops_composes() {
    let (_, fib) = ot_product();
    let c1 = BasePath::circle(fib.base_chart(), [0.0, 0.0], 0.5, 1.0);
    let c2 = BasePath::ellipse(fib.base_chart(), [0.0, 0.0], 0.5, 0.3, -1.0);
    let both = c1.then(&c2).unwrap();
    let m1 = MonodromyMap::new(&fib, &c1, IntegratorSettings::with_steps(1000)).unwrap();
    let m2 = MonodromyMap::new(&fib, &c2, IntegratorSettings::with_steps(1000)).unwrap();
    let m12 = MonodromyMap::new(&fib, &both, IntegratorSettings::with_steps(2000)).unwrap();
    for v in [[0.2, 0.3, 0.1], [-0.7, 0.1, 0.5]] {
        let composed = m2.apply(&m1.apply(&v).unwrap()).unwrap();
        let direct = m12.apply(&v).unwrap();
        let err = composed.iter().zip(&direct).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }
}

#[test]
fn transported_legendrian_arc_stays_isotropic() {
    let (fiber, fib) = ot_product();
    // radial segments at constant height are Legendrian for cos r dz + r sin r dθ
    let params_chart = contactlab::chart::standard::euclidean("s", &["s"]);
    let arc = SmoothMap::new(&params_chart, fiber.chart(), |u: &[Jet]| {
        vec![u[0] * 0.8, u[0] * 0.6, Jet::constant(0.2)]
    });
    let params: Vec<Vec<f64>> = (0..12).map(|k| vec![0.2 + 0.15 * k as f64]).collect();
    let path = BasePath::circle(fib.base_chart(), [0.0, 0.0], 0.5, 1.0);
    let settings = IntegratorSettings { steps: 400, checkpoint_every: 40 };
    let rep = transport_submanifold(&fib, &path, &arc, &params, &settings, 1e-10).unwrap();
    assert!(rep.legendrian);
    assert_eq!(rep.rank_deficient, 0);
    assert!(rep.max_violation < 1e-6, "{}", rep.max_violation);
}

#[test]
fn prescribed_monodromy_converges_at_integrator_order() {
    let fiber = std_r3(DiffBackend::Dual).unwrap();
    let presc = MonodromyPrescription::new("nonlinear", 2.0, |t, p| (t * PI).sin() * (p[1] * 2.0).sin() * 0.05 + p[0] * p[2] * 0.02).unwrap();
    let pts = vec![vec![0.3, -0.2, 0.1], vec![-0.6, 0.5, 0.7]];
    let d = |steps: usize| check_prescription(&presc, &fiber, &pts, IntegratorSettings::with_steps(steps)).unwrap().max_discrepancy;
    let (d1, d2, d3) = (d(10), d(20), d(400));
    assert!(d1 / d2 > 8.0, "{d1} -> {d2}");
    assert!(d3 < 1e-10, "{d3}");
}

#[test]
fn bourgeois_coefficients_ignore_torus_angles() {
    let ob = OpenBookData::standard_s3(0.5, DiffBackend::Dual).unwrap();
    let fib = bourgeois_form(&ob, -0.05).unwrap();
    for p in samples(ob.page_form.chart(), 50).iter() {
        let c = p.coords();
        let a = fib.total().alpha().covector_raw(&[c[0], c[1], c[2], 0.0, 0.0]);
        for (t1, t2) in [(1.0, 2.0), (TAU - 1e-9, 3.3), (0.5, 6.0)] {
            assert_eq!(a, fib.total().alpha().covector_raw(&[c[0], c[1], c[2], t1, t2]));
        }
    }
}
