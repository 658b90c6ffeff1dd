//! The default scenario registry.

use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Ctx, Expectation, Recorder, Relation, ScenarioSpec};
use crate::bourgeois::{bourgeois_form, bourgeois_raw, check_open_book, torus_chart, OpenBookData};
use crate::catalog::{base_chart, ot_r3, ot_r3_cylindrical, ot_reeb_cartesian, std_product_form, std_r3, BaseCoords};
use crate::chart::{ChartManifold, Point};
use crate::contact::{hamiltonian_field, reeb_field, reeb_residuals, verify_contact, ContactForm};
use crate::error::Result;
use crate::fibration::{lift_from_fiber, monodromy, ContactFibration, MonodromyMap};
use crate::field::{DiffBackend, ScalarField};
use crate::form::{exterior_derivative, lie_derivative};
use crate::geiges::{glued_fibration, normal_model, GluingProfile, Sheet};
use crate::holonomy::estimate_holonomy_bound;
use crate::jet::{constants, Jet};
use crate::linalg::{dot, norm};
use crate::milnor::{milnor_checks, MilnorData};
use crate::ode::{flow, flow_map, IntegratorSettings};
use crate::paths::{BasePath, CompositePath, HalfSymmetry};
use crate::plastikstufe::{overtwisted_disk, transport_plastikstufe, verify_plastikstufe, MeshGrid};
use crate::prescribe::{check_prescription, estimate_epsilon, prescribe_monodromy, prescribed_contact, MonodromyPrescription};
use crate::sampling::{BoxDomain, SampleSet, SampleStrategy};

/// Anchor keys with a one-line statement of what they refer to.
pub static ANCHORS: &[(&str, &str)] = &[
    ("overtwisted-reeb-field", "closed-form Reeb field of the overtwisted form on R3"),
    ("loop-monodromy-area-law", "monodromy of a product loop is Reeb flow for minus twice the enclosed area"),
    ("zero-area-loop", "a loop enclosing zero total area has trivial monodromy"),
    ("monodromy-contactomorphism", "parallel transport along a loop is a contactomorphism of the fiber"),
    ("contact-hamiltonian-equations", "alpha(X) = H and i_X d alpha = (R.H) alpha - dH"),
    ("monodromy-prescription", "a deformation supported in a sector realizes a prescribed contact isotopy as monodromy"),
    ("bourgeois-form", "the T2-invariant form eps(Phi1 dtheta1 + Phi2 dtheta2) + beta from an open book"),
    ("transport-hamiltonian-bound", "the generating Hamiltonian of transport is linear in the deformation parameter"),
    ("fibered-sum-gluing", "the glued form on the fibered sum restricts to the normal models"),
    ("milnor-open-book", "Milnor fibration of z1 conj(z2) and its three-variable extension"),
    ("plastikstufe-definition", "isotropic core, isotropic leaves, Legendrian boundary, elliptic singular set"),
    ("plastikstufe-transport", "a plastikstufe swept along a loop with trivial monodromy"),
    ("composite-loop", "the two-lobed loop in the disk, its arc radii and the removed central disk"),
    ("exterior-calculus", "d o d = 0 and the Cartan formula against finite flows"),
];

macro_rules! scenario {
    ($name:expr, $anchor:expr, $desc:expr, $exp:ident, $samples:expr, $steps:expr, $body:path) => {
        ScenarioSpec {
            name: $name,
            anchor: $anchor,
            description: $desc,
            expectation: Expectation::$exp,
            default_samples: $samples,
            default_steps: $steps,
            body: $body,
        }
    };
}

pub static SCENARIOS: &[ScenarioSpec] = &[
    scenario!("reeb-ot-closed-form", "overtwisted-reeb-field", "solved Reeb field of the overtwisted form vs the closed form", Pass, 1000, 1, reeb_ot_closed_form),
    scenario!("area-law-circle", "loop-monodromy-area-law", "circle monodromy over the overtwisted fiber vs Reeb flow at -2 pi r^2", Pass, 4, 2000, area_law_circle),
    scenario!("figure-eight-identity", "zero-area-loop", "figure-eight loop has identity monodromy", Pass, 200, 400, figure_eight_identity),
    scenario!("monodromy-contactomorphism", "monodromy-contactomorphism", "kernel preservation and conformal factor on random loops", Pass, 12, 400, monodromy_contactomorphism),
    scenario!("hamiltonian-solver", "contact-hamiltonian-equations", "Reeb, linearity, Lie derivative and a hand example", Pass, 200, 1, hamiltonian_solver),
    scenario!("prescription-monodromy", "monodromy-prescription", "prescribed monodromy vs directly integrated Hamiltonian flow", Pass, 12, 400, prescription_monodromy),
    scenario!("prescription-epsilon", "monodromy-prescription", "largest Hamiltonian scale keeping the prescribed form contact", Measured, 400, 1, prescription_epsilon),
    scenario!("prescription-oversized", "monodromy-prescription", "an oversized Hamiltonian breaks contactness", ExpectedFail, 400, 1, prescription_oversized),
    scenario!("bourgeois-contact", "bourgeois-form", "contact volume for eps = +-0.05 and open-book compatibility", Pass, 10000, 1, bourgeois_contact),
    scenario!("bourgeois-eps-zero", "bourgeois-form", "eps = 0 is degenerate", ExpectedFail, 500, 1, bourgeois_eps_zero),
    scenario!("bourgeois-holonomy-sweep", "transport-hamiltonian-bound", "sup |H| against eps on a straight torus segment", Pass, 4, 200, bourgeois_holonomy_sweep),
    scenario!("geiges-gluing", "fibered-sum-gluing", "profile certification, contactness and normal models", Pass, 2000, 1, geiges_gluing),
    scenario!("geiges-holonomy-sweep", "transport-hamiltonian-bound", "sup |H| against rho on the glued annulus", Pass, 4, 200, geiges_holonomy_sweep),
    scenario!("geiges-rho-probe", "fibered-sum-gluing", "contact volume margin of the glued sheets for large rho", Measured, 1000, 1, geiges_rho_probe),
    scenario!("milnor-checks", "milnor-open-book", "holomorphy, Morse Hessian, phase submersion, tube transversality", Pass, 1000, 1, milnor),
    scenario!("plastikstufe-ot-disk", "plastikstufe-definition", "overtwisted disk mesh in the overtwisted fiber", Pass, 1, 1, plastikstufe_ot_disk),
    scenario!("plastikstufe-perturbed", "plastikstufe-definition", "graph-perturbed disk has non-isotropic leaves", ExpectedFail, 1, 1, plastikstufe_perturbed),
    scenario!("plastikstufe-swept", "plastikstufe-transport", "overtwisted disk swept over the figure-eight", Pass, 1, 200, plastikstufe_swept),
    scenario!("composite-path", "composite-loop", "area, arc radii, symmetry and rerouting of the composite loop", Pass, 4000, 1, composite_path),
    scenario!("calculus-kernel", "exterior-calculus", "d o d on the catalog and Cartan vs flow", Pass, 100, 1, calculus_kernel),
];

fn cube_points(chart: &Arc<ChartManifold>, half: f64, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    Ok(SampleSet::generate(chart, &BoxDomain::cube(chart.dim(), half), SampleStrategy::Halton, n, seed)?.coords())
}

/// A box over the chart's declared bounds, `±half` where unbounded.
fn chart_box(chart: &ChartManifold, half: f64) -> Result<BoxDomain> {
    let lower = chart.coords.iter().map(|c| c.lower.unwrap_or(if c.period.is_some() { 0.0 } else { -half })).collect();
    let upper = chart.coords.iter().map(|c| c.upper.or(c.period).unwrap_or(half)).collect();
    BoxDomain::new(lower, upper)
}

fn chart_samples(chart: &Arc<ChartManifold>, half: f64, n: usize, seed: u64) -> Result<SampleSet> {
    SampleSet::generate(chart, &chart_box(chart, half)?, SampleStrategy::Halton, n, seed)
}

fn reeb_ot_closed_form(ctx: &Ctx, rec: &mut Recorder) -> Result<()> {
    let cf = ot_r3(DiffBackend::Dual)?;
    let dom = BoxDomain::new(vec![-3.0, -3.0, -1.0], vec![3.0, 3.0, 1.0])?;
    let keep = |x: &[f64]| (0.1..=3.0).contains(&x[0].hypot(x[1]));
    let s = SampleSet::generate_filtered(cf.chart(), &dom, SampleStrategy::Halton, ctx.samples, ctx.seed, Some(&keep))?;
    let (mut err, mut res): (f64, f64) = (0.0, 0.0);
    for p in s.iter() {
        let r = cf.reeb_at(p)?;
        let e = ot_reeb_cartesian(p.coords());
        err = err.max((0..3).map(|i| (r[i] - e[i]).abs()).fold(0.0, f64::max));
        let (e1, e2) = reeb_residuals(&cf, p.coords(), &r);
        res = res.max(e1.max(e2));
    }
    rec.check("max-component-error", err, Relation::AtMost, 1e-8);
    rec.check("reeb-residual", res, Relation::AtMost, 1e-10);
    rec.check("samples", s.len() as f64, Relation::Equals, ctx.samples as f64);
    Ok(())
}

fn ot_product() -> Result<(ContactForm, ContactFibration)> {
    let fiber = ot_r3(DiffBackend::Dual)?;
    let fib = std_product_form(&fiber, 1.0, BaseCoords::Cartesian)?;
    Ok((fiber, fib))
}

fn area_law_error(fib: &ContactFibration, fiber: &ContactForm, r: f64, v0: &[f64], steps: usize) -> Result<f64> {
    let path = BasePath::circle(fib.base_chart(), [0.0, 0.0], r, 1.0);
    let traj = lift_from_fiber(fib, &path, v0, &IntegratorSettings::with_steps(steps))?;
    let (end, _) = fib.split(traj.end());
    let oracle = flow(&reeb_field(fiber).field, v0, -TAU * r * r, 8000)?;
    Ok(norm(&fiber.chart().difference(&end, &oracle)))
}

fn area_law_circle(ctx: &Ctx, rec: &mut Recorder) -> Result<()> {
    let (fiber, fib) = ot_product()?;
    let pts = cube_points(fiber.chart(), 1.0, ctx.samples, ctx.seed)?;
    let mut worst: f64 = 0.0;
    for r in [0.3, 0.5, 0.7] {
        for v0 in &pts {
            worst = worst.max(area_law_error(&fib, &fiber, r, v0, ctx.steps)?);
        }
    }
    rec.check("max-fiber-error", worst, Relation::AtMost, 1e-3);
    let v0 = &pts[0];
    let errs: Vec<f64> = [25, 50, 100]
        .iter()
        .map(|&n| area_law_error(&fib, &fiber, 0.7, v0, n))
        .collect::<Result<_>>()?;
    rec.check("error-reduction-two-doublings", errs[0] / errs[2], Relation::AtLeast, 8.0);
    rec.measure("observed-order", (errs[0] / errs[2]).log2() / 2.0);

    let path = BasePath::circle(fib.base_chart(), [0.0, 0.0], 0.5, 1.0);
    let traj = lift_from_fiber(&fib, &path, v0, &ctx.settings())?;
    let fiber_names: Vec<String> = fib.fiber_coords().iter().map(|&i| traj.coord_names[i].clone()).collect();
    let mut columns = vec!["t".to_string(), "r".to_string(), "theta".to_string()];
    columns.extend(fiber_names);
    let rows = traj
        .checkpoints(ctx.settings().checkpoint_every)
        .into_iter()
        .map(|(t, x)| {
            let (v, b) = fib.split(&x);
            let mut row = vec![t, b[0].hypot(b[1]), b[1].atan2(b[0])];
            row.extend(v);
            row
        })
        .collect();
    rec.payload("trajectory", columns, rows);
    Ok(())
}

fn figure_eight_identity(ctx: &Ctx, rec: &mut Recorder) -> Result<()> {
    let (fiber, fib) = ot_product()?;
    let path = BasePath::figure_eight(fib.base_chart(), 0.5);
    rec.check("signed-area", path.signed_area(4000).abs(), Relation::AtMost, 1e-12);
    let map = MonodromyMap::new(&fib, &path, ctx.settings())?;
    let pts = cube_points(fiber.chart(), 1.0, ctx.samples, ctx.seed)?;
    rec.check("max-displacement", map.max_displacement(&pts)?, Relation::AtMost, 1e-3);
    Ok(())
}

fn random_loops(chart: &Arc<ChartManifold>, n: usize, seed: u64) -> Vec<BasePath> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let c = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
            let (a, b) = (rng.gen_range(0.1..0.5), rng.gen_range(0.1..0.5));
            let turns = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            BasePath::ellipse(chart, c, a, b, turns)
        })
        .collect()
}

fn monodromy_contactomorphism(ctx: &Ctx, rec: &mut Recorder) -> Result<()> {
    for (label, fiber) in [("std", std_r3(DiffBackend::Dual)?), ("ot", ot_r3(DiffBackend::Dual)?)] {
        let fib = std_product_form(&fiber, 1.0, BaseCoords::Cartesian)?;
        let pts: Vec<Point> = cube_points(fiber.chart(), 1.0, ctx.samples, ctx.seed)?
            .into_iter()
            .map(|c| Point::new(fiber.chart(), c))
            .collect::<Result<_>>()?;
        let (mut kv, mut lmin, mut ldev) = (0.0_f64, f64::INFINITY, 0.0_f64);
        for path in random_loops(fib.base_chart(), 5, ctx.seed) {
            let (_, rep) = monodromy(&fib, &path, &pts, ctx.settings())?;
            kv = kv.max(rep.max_kernel_violation);
            lmin = lmin.min(rep.min_lambda);
            ldev = ldev.max(rep.max_abs_lambda_minus_one);
        }
        rec.check(&format!("{label}-kernel-violation"), kv, Relation::AtMost, 1e-4);
        rec.check(&format!("{label}-min-lambda"), lmin, Relation::Above, 0.0);
        rec.check(&format!("{label}-lambda-minus-one"), ldev, Relation::AtMost, 1e-4);
    }
    Ok(())
}

fn hamiltonian_solver(ctx: &Ctx, rec: &mut Recorder) -> Result<()> {
    for (label, cf) in [("std", std_r3(DiffBackend::Dual)?), ("ot", ot_r3(DiffBackend::Dual)?)] {
        let chart = cf.chart();
        let pts = cube_points(chart, 1.0, ctx.samples, ctx.seed)?;
        let one = hamiltonian_field(&cf, &ScalarField::constant(chart, 1.0))?;
        let h1 = ScalarField::new(chart, |x: &[Jet]| x[0].sin() + x[1] * x[2] + 0.3);
        let h2 = ScalarField::new(chart, |x: &[Jet]| x[2] * x[2] - x[0] * x[1]);
        let (a, b) = (0.7, -1.3);
        let comb = h1.scale(a).add(&h2.scale(b))?;
        let (x1, x2, xc) = (hamiltonian_field(&cf, &h1)?, hamiltonian_field(&cf, &h2)?, hamiltonian_field(&cf, &comb)?);
        let lie = lie_derivative(&x1, cf.alpha(), DiffBackend::Dual)?;
        let (mut reeb_err, mut lin_err, mut lie_err) = (0.0_f64, 0.0_f64, 0.0_f64);
        for x in &pts {
            let r = cf.reeb_raw(x)?;
            let o = one.eval_raw(x);
            reeb_err = reeb_err.max((0..3).map(|i| (r[i] - o[i]).abs()).fold(0.0, f64::max));
            let (v1, v2, vc) = (x1.eval_raw(x), x2.eval_raw(x), xc.eval_raw(x));
            lin_err = lin_err.max((0..3).map(|i| (vc[i] - a * v1[i] - b * v2[i]).abs()).fold(0.0, f64::max));
            // L_X α = (R·H) α
            let xj = constants(x);
            let grad: Vec<f64> = (0..3).map(|i| Jet::partial(&xj, i, |y| h1.eval_jet(y)).value()).collect();
            let dr_h = dot(&grad, &r);
            let lhs = lie.covector_raw(x);
            let al = cf.alpha().covector_raw(x);
            lie_err = lie_err.max((0..3).map(|i| (lhs[i] - dr_h * al[i]).abs()).fold(0.0, f64::max));
        }
        rec.check(&format!("{label}-unit-hamiltonian-is-reeb"), reeb_err, Relation::AtMost, 0.0);
        rec.check(&format!("{label}-linearity"), lin_err, Relation::AtMost, 1e-10);
        rec.check(&format!("{label}-lie-derivative"), lie_err, Relation::AtMost, 1e-6);
    }
    // H = x on dz − y dx gives ∂y + x ∂z
    let cf = std_r3(DiffBackend::Dual)?;
    let xf = hamiltonian_field(&cf, &ScalarField::coordinate(cf.chart(), 0))?;
    let mut hand: f64 = 0.0;
    for x in cube_points(cf.chart(), 2.0, ctx.samples, ctx.seed)? {
        let v = xf.eval_raw(&x);
        hand = hand.max(v[0].abs()).max((v[1] - 1.0).abs()).max((v[2] - x[0]).abs());
    }
    rec.check("hand-example", hand, Relation::AtMost, 1e-10);
    Ok(())
}

pub(crate) const PRESCRIPTION_DELTA: f64 = 2.0;

/// Families used against the measured ε; all have sup-norm 0.05 on the unit
/// fiber cube.
pub(crate) fn prescription_families() -> Result<Vec<MonodromyPrescription>> {
    Ok(vec![
        MonodromyPrescription::new("const", PRESCRIPTION_DELTA, |_, _| Jet::constant(0.05))?,
        MonodromyPrescription::new("linear-x", PRESCRIPTION_DELTA, |_, p| p[0] * 0.05)?,
        MonodromyPrescription::new("sin-time", PRESCRIPTION_DELTA, |t, p| (t * PI).sin() * p[1].sin() * 0.05)?,
    ])
}

fn unit_box() -> BoxDomain {
    BoxDomain::cube(3, 1.0)
}

fn prescription_monodromy(ctx: &Ctx, rec: &mut Recorder) -> Result<()> {
    let fiber = std_r3(DiffBackend::Dual)?;
    let pts = cube_points(fiber.chart(), 1.0, ctx.samples, ctx.seed)?;
    let std = std_product_form(&fiber, 1.0, BaseCoords::Polar)?;
    for presc in prescription_families()? {
        let name = presc.name.clone();
        let chk = check_prescription(&presc, &fiber, &pts, ctx.settings())?;
        rec.check(&format!("{name}-flow-discrepancy"), chk.max_discrepancy, Relation::AtMost, 1e-3);
        let v = prescribed_contact(&presc, &fiber, &unit_box(), 20 * ctx.samples, 1e-6)?;
        rec.flag(&format!("{name}-contact"), v.passed);
        // exact agreement with the product form off the support
        let fib = prescribe_monodromy(&presc, &fiber)?;
        let d = PRESCRIPTION_DELTA;
        let dom = BoxDomain::new(vec![-1.0, -1.0, -1.0, 0.0, 0.0], vec![1.0, 1.0, 1.0, d, TAU])?;
        let outside = |x: &[f64]| {
            let th = crate::paths::wrap_angle(x[4]);
            x[3] < d / 4.0 || x[3] > 3.0 * d / 4.0 || th.abs() > FRAC_PI_4
        };
        let s = SampleSet::generate_filtered(fib.total().chart(), &dom, SampleStrategy::Halton, 20 * ctx.samples, ctx.seed, Some(&outside))?;
        let mut diff: f64 = 0.0;
        for p in s.iter() {
            let a = fib.total().alpha().covector_raw(p.coords());
            let b = std.total().alpha().covector_raw(p.coords());
            diff = diff.max(a.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max));
        }
        rec.check(&format!("{name}-off-support-difference"), diff, Relation::Equals, 0.0);
    }
    Ok(())
}

fn prescription_epsilon(ctx: &Ctx, rec: &mut Recorder) -> Result<()> {
    let fiber = std_r3(DiffBackend::Dual)?;
    let presc = MonodromyPrescription::new("x", PRESCRIPTION_DELTA, |_, p| p[0])?;
    let est = estimate_epsilon(&presc, &fiber, &unit_box(), ctx.samples, 1e-6, 1.0, 6)?;
    rec.measure("epsilon", est.epsilon);
    rec.measure("first-failure", est.first_failure.unwrap_or(f64::NAN));
    // the families used for the monodromy comparison stay below it
    rec.check("families-within-epsilon", 0.05, Relation::AtMost, est.epsilon);
    Ok(())
}

fn prescription_oversized(ctx: &Ctx, rec: &mut Recorder) -> Result<()> {
    let fiber = std_r3(DiffBackend::Dual)?;
    let presc = MonodromyPrescription::new("x", PRESCRIPTION_DELTA, |_, p| p[0])?;
    let v = prescribed_contact(&presc.scaled(1.0), &fiber, &unit_box(), ctx.samples, 1e-6)?;
    rec.expect_fail("contact", f64::from(u8::from(v.passed)), Relation::Equals, 1.0);
    rec.measure("min-abs-volume", v.min_abs_volume);
    Ok(())
}

fn bourgeois_samples(fib: &ContactFibration, n: usize, seed: u64) -> Result<SampleSet> {
    let dom = BoxDomain::new(vec![-2.0, -2.0, -2.0, 0.0, 0.0], vec![2.0, 2.0, 2.0, TAU, TAU])?;
    SampleSet::generate(fib.total().chart(), &dom, SampleStrategy::Halton, n, seed)
}

fn bourgeois_contact(ctx: &Ctx, rec: &mut Recorder) -> Result<()> {
    let ob = OpenBookData::standard_s3(0.5, DiffBackend::Dual)?;
    for eps in [0.05, -0.05] {
        let fib = bourgeois_form(&ob, eps)?;
        let s = bourgeois_samples(&fib, ctx.samples, ctx.seed)?;
        let v = verify_contact(fib.total(), &s, 1e-6)?;
        let tag = if eps > 0.0 { "plus" } else { "minus" };
        rec.check(&format!("eps-{tag}-min-abs-volume"), v.min_abs_volume, Relation::Above, 0.0);
        rec.flag(&format!("eps-{tag}-verdict"), v.passed && v.sign_consistent);
    }
    let pts = cube_points(ob.page_form.chart(), 2.0, 200, ctx.seed)?;
    let heights: Vec<f64> = (0..21).map(|k| -3.0 + 0.3 * k as f64).collect();
    let compat = check_open_book(&ob, &pts, &heights)?;
    rec.check("page-area", compat.min_page_area, Relation::Above, 1e-6);
    rec.check("binding-reeb-normal", compat.max_binding_reeb_normal, Relation::AtMost, 1e-12);
    Ok(())
}

fn bourgeois_eps_zero(ctx: &Ctx, rec: &mut Recorder) -> Result<()> {
    let ob = OpenBookData::standard_s3(0.5, DiffBackend::Dual)?;
    rec.flag("constructor-rejects-zero", bourgeois_form(&ob, 0.0).is_err());
    let fib = bourgeois_raw(&ob, 0.0)?;
    let s = bourgeois_samples(&fib, ctx.samples, ctx.seed)?;
    let max_vol = s
        .iter()
        .map(|p| fib.total().volume_raw(p.coords()).abs())
        .fold(0.0, f64::max);
    rec.expect_fail("max-abs-volume", max_vol, Relation::Above, 1e-12);
    Ok(())
}

fn sweep_payload(rec: &mut Recorder, param: &str, fit: &crate::holonomy::HolonomyFit) {
    let rows = fit
        .params
        .iter()
        .zip(&fit.sup_h)
        .map(|(p, h)| vec![*p, *h, fit.relative_residual])
        .collect();
    rec.payload(&format!("{param}-sweep"), vec![param.to_string(), "sup_h".into(), "fit_residual".into()], rows);
}

fn bourgeois_holonomy_sweep(ctx: &Ctx, rec: &mut Recorder) -> Result<()> {
    let ob = OpenBookData::standard_s3(0.5, DiffBackend::Dual)?;
    let a: f64 = 0.4;
    let path = BasePath::segment(&torus_chart(), [0.3, 0.2], [a.cos(), a.sin()]);
    let pts = cube_points(ob.page_form.chart(), 1.0, ctx.samples, ctx.seed)?;
    let fit = estimate_holonomy_bound(&[0.01, 0.02, 0.04], |e| bourgeois_form(&ob, e), &path, &pts, &ctx.settings(), 0.1)?;
    rec.check("fit-residual", fit.relative_residual, Relation::AtMost, 0.1);
    rec.check("slope", fit.slope, Relation::Above, 0.0);
    sweep_payload(rec, "eps", &fit);
    Ok(())
}

fn geiges_gluing(ctx: &Ctx, rec: &mut Recorder) -> Result<()> {
    let profile = GluingProfile::new(0.05)?;
    let cert = profile.certify(200);
    rec.flag("profile-certificate", cert.passed);
    rec.check("min-dfdr-on-axis-plane", cert.min_dfdr_on_axis_plane, Relation::Above, 0.0);
    let fiber = std_r3(DiffBackend::Dual)?;
    for sheet in [Sheet::Upper, Sheet::Lower, Sheet::Neck] {
        let fib = glued_fibration(&profile, &fiber, sheet)?;
        let s = chart_samples(fib.total().chart(), 1.0, ctx.samples, ctx.seed)?;
        let v = verify_contact(fib.total(), &s, 1e-6)?;
        rec.flag(&format!("{sheet:?}-contact").to_lowercase(), v.passed && v.sign_consistent);
    }
    let mut worst: f64 = 0.0;
    for (sheet, j) in [(Sheet::Upper, 0), (Sheet::Lower, 1)] {
        let fib = glued_fibration(&profile, &fiber, sheet)?;
        let model = normal_model(&fiber, profile.rho, j)?;
        let dom = BoxDomain::new(vec![-1.0, -1.0, -1.0, 0.5, 0.0], vec![1.0, 1.0, 1.0, 1.0, TAU])?;
        for p in SampleSet::generate(fib.total().chart(), &dom, SampleStrategy::Halton, ctx.samples, ctx.seed)?.iter() {
            let a = fib.total().alpha().covector_raw(p.coords());
            let b = model.total().alpha().covector_raw(p.coords());
            worst = worst.max(a.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max));
        }
    }
    rec.check("normal-model-difference", worst, Relation::AtMost, 1e-12);
    Ok(())
}

fn geiges_holonomy_sweep(ctx: &Ctx, rec: &mut Recorder) -> Result<()> {
    let fiber = std_r3(DiffBackend::Dual)?;
    let probe = glued_fibration(&GluingProfile::new(0.05)?, &fiber, Sheet::Upper)?;
    // unit-speed drift along θ at r = 0.7; purely radial paths carry no holonomy
    let path = BasePath::segment(probe.base_chart(), [0.7, 0.0], [0.0, 1.0 / 0.7]);
    let pts = cube_points(fiber.chart(), 1.0, ctx.samples, ctx.seed)?;
    let build = |rho: f64| glued_fibration(&GluingProfile::new(rho)?, &fiber, Sheet::Upper);
    let fit = estimate_holonomy_bound(&[0.02, 0.04, 0.08], build, &path, &pts, &ctx.settings(), 0.1)?;
    rec.check("fit-residual", fit.relative_residual, Relation::AtMost, 0.1);
    rec.check("slope", fit.slope, Relation::Above, 0.0);
    sweep_payload(rec, "rho", &fit);
    Ok(())
}

fn geiges_rho_probe(ctx: &Ctx, rec: &mut Recorder) -> Result<()> {
    let fiber = std_r3(DiffBackend::Dual)?;
    for rho in [0.05, 0.5, 2.0, 10.0] {
        for sheet in [Sheet::Upper, Sheet::Neck] {
            let fib = glued_fibration(&GluingProfile::new(rho)?, &fiber, sheet)?;
            let s = chart_samples(fib.total().chart(), 1.0, ctx.samples, ctx.seed)?;
            let v = verify_contact(fib.total(), &s, 1e-6)?;
            rec.measure(
                &format!("{sheet:?}-rho-{rho}-min-over-median").to_lowercase(),
                v.min_abs_volume / v.median_abs_volume,
            );
        }
    }
    Ok(())
}

fn milnor(ctx: &Ctx, rec: &mut Recorder) -> Result<()> {
    let rep = milnor_checks(&MilnorData::default(), ctx.samples, ctx.seed)?;
    rec.check("dbar-g-after-e", rep.dbar_g_after_e, Relation::AtMost, 1e-12);
    rec.check("dbar-g", rep.dbar_g, Relation::Above, 1e-12);
    rec.check("hessian-det", rep.hessian_det, Relation::Equals, 2.0);
    rec.check("phase-gradient", rep.min_phase_gradient, Relation::Above, 1e-8);
    rec.check("sphere-samples", rep.sphere_samples as f64, Relation::Equals, ctx.samples as f64);
    rec.measure("excluded-near-link", rep.excluded_near_link as f64);
    rec.flag("restriction-exact", rep.restriction_exact);
    rec.check("tube-transversality", rep.min_tube_transversality, Relation::Above, 1e-8);
    Ok(())
}

fn plastikstufe_checks(rec: &mut Recorder, prefix: &str, rep: &crate::plastikstufe::PlastikstufeReport) {
    rec.check(&format!("{prefix}core-violation"), rep.core_violation, Relation::AtMost, 1e-4);
    rec.check(&format!("{prefix}leaf-violation"), rep.leaf_violation, Relation::AtMost, 1e-4);
    rec.check(&format!("{prefix}boundary-violation"), rep.boundary_violation, Relation::AtMost, 1e-4);
    rec.check(&format!("{prefix}winding-number"), rep.winding_number.map_or(f64::NAN, |w| w as f64), Relation::Equals, 1.0);
}

fn plastikstufe_ot_disk(_ctx: &Ctx, rec: &mut Recorder) -> Result<()> {
    let cf = ot_r3(DiffBackend::Dual)?;
    let (mesh, r_b) = overtwisted_disk(&cf, 0.0, MeshGrid::default())?;
    rec.check("boundary-radius-minus-pi", (r_b - PI).abs(), Relation::AtMost, 1e-10);
    let rep = verify_plastikstufe(&cf, &mesh, 1e-4)?;
    plastikstufe_checks(rec, "", &rep);
    rec.payload(
        "mesh",
        ["rho", "phi", "x", "y", "z"].iter().map(|s| s.to_string()).collect(),
        mesh.leaves.iter().map(|s| [&s.param[..2], &s.point[..]].concat()).collect(),
    );
    Ok(())
}

fn plastikstufe_perturbed(_ctx: &Ctx, rec: &mut Recorder) -> Result<()> {
    let cf = ot_r3(DiffBackend::Dual)?;
    let (mesh, _) = overtwisted_disk(&cf, 0.05, MeshGrid::default())?;
    let rep = verify_plastikstufe(&cf, &mesh, 1e-4)?;
    rec.expect_fail("leaf-violation", rep.leaf_violation, Relation::AtMost, 1e-4);
    Ok(())
}

fn plastikstufe_swept(ctx: &Ctx, rec: &mut Recorder) -> Result<()> {
    let (fiber, fib) = ot_product()?;
    let grid = MeshGrid {
        radial: 4,
        angular: 8,
        core: 1,
        ring_radius: 0.05,
        ring_points: 16,
    };
    let (mesh, _) = overtwisted_disk(&fiber, 0.0, grid)?;
    let path = BasePath::figure_eight(fib.base_chart(), 0.5);
    let settings = IntegratorSettings {
        steps: ctx.steps,
        checkpoint_every: (ctx.steps / 4).max(1),
    };
    let swept = transport_plastikstufe(&fib, &path, &mesh, &settings, 1e-3)?;
    let rep = verify_plastikstufe(fib.total(), &swept, 1e-4)?;
    plastikstufe_checks(rec, "swept-", &rep);
    let base = verify_plastikstufe(&fiber, &mesh, 1e-4)?;
    plastikstufe_checks(rec, "fiber-", &base);
    Ok(())
}

fn composite_path(ctx: &Ctx, rec: &mut Recorder) -> Result<()> {
    let chart = base_chart(BaseCoords::Cartesian);
    let (delta, rho) = (1.0, 0.1);
    let n = ctx.samples;
    let mirror = CompositePath::new(&chart, delta, rho, HalfSymmetry::Mirror, false)?;
    rec.check("mirror-signed-area", mirror.path.signed_area(n).abs(), Relation::AtMost, 1e-9);
    rec.flag("closed", mirror.path.is_closed(1e-12));
    let (t0, t1) = mirror.first_arc_interval();
    let radii: Vec<f64> = (0..=n)
        .map(|k| norm(&mirror.path.point(t0 + (t1 - t0) * k as f64 / n as f64)))
        .collect();
    let margin = radii
        .iter()
        .map(|r| (r - 0.75 * delta).min(delta - r))
        .fold(f64::INFINITY, f64::min);
    rec.check("arc-radius-margin", margin, Relation::Above, 0.0);
    let point = CompositePath::new(&chart, delta, rho, HalfSymmetry::PointReflection, false)?;
    // dyadic parameters keep the half-period shift exact
    let dyadic = 1usize << 12;
    let asym = (0..dyadic)
        .map(|k| {
            let t = 0.5 * k as f64 / dyadic as f64;
            let (a, b) = (point.path.point(t), point.path.point(t + 0.5));
            (a[0] + b[0]).abs().max((a[1] + b[1]).abs())
        })
        .fold(0.0, f64::max);
    rec.check("point-symmetry-defect", asym, Relation::Equals, 0.0);
    rec.measure("point-symmetric-signed-area", point.path.signed_area(n));
    let rerouted = CompositePath::new(&chart, delta, rho, HalfSymmetry::Mirror, true)?;
    let closest = (0..=n)
        .map(|k| norm(&rerouted.path.point(k as f64 / n as f64)))
        .fold(f64::INFINITY, f64::min);
    rec.check("rerouted-clearance", closest - rho, Relation::Above, 0.0);
    rerouted.path.validate(n.min(2000))?;
    rec.flag("rerouted-immersed", true);
    Ok(())
}

/// Contact forms of the catalog, by label.
pub(crate) fn catalog_forms() -> Result<Vec<(String, ContactForm)>> {
    let std = std_r3(DiffBackend::Dual)?;
    let ot = ot_r3(DiffBackend::Dual)?;
    let mut out = vec![
        ("std-r3".to_string(), std.clone()),
        ("ot-r3".to_string(), ot.clone()),
        ("ot-r3-cylindrical".to_string(), ot_r3_cylindrical(DiffBackend::Dual)?),
        ("std-product".to_string(), std_product_form(&std, 1.0, BaseCoords::Cartesian)?.total().clone()),
        ("std-product-minus".to_string(), std_product_form(&std, -1.0, BaseCoords::Polar)?.total().clone()),
        ("ot-product".to_string(), std_product_form(&ot, 1.0, BaseCoords::Cartesian)?.total().clone()),
    ];
    for p in prescription_families()? {
        out.push((format!("prescribed-{}", p.name), prescribe_monodromy(&p, &std)?.total().clone()));
    }
    let ob = OpenBookData::standard_s3(0.5, DiffBackend::Dual)?;
    out.push(("s3".to_string(), ob.page_form.clone()));
    out.push(("bourgeois".to_string(), bourgeois_form(&ob, 0.05)?.total().clone()));
    let profile = GluingProfile::new(0.05)?;
    for sheet in [Sheet::Upper, Sheet::Lower, Sheet::Neck] {
        out.push((format!("geiges-{sheet:?}").to_lowercase(), glued_fibration(&profile, &std, sheet)?.total().clone()));
    }
    Ok(out)
}

/// `max |d(dα)|` over the samples.
pub(crate) fn dd_residual(cf: &ContactForm, samples: &SampleSet) -> Result<f64> {
    let dd = exterior_derivative(cf.dalpha(), cf.backend())?;
    Ok(samples
        .iter()
        .flat_map(|p| dd.coefficients_jet(&constants(p.coords())))
        .map(|c| c.value().abs())
        .fold(0.0, f64::max))
}

/// `|(φ_h^*α − φ_{−h}^*α)/2h − L_X α|` at `x`, with `X = X_H` on std-r3.
pub(crate) fn cartan_flow_error(h: f64, x: &[f64]) -> Result<f64> {
    let cf = std_r3(DiffBackend::Dual)?;
    let ham = ScalarField::new(cf.chart(), |y: &[Jet]| y[0].sin() + y[1] * y[2]);
    let field = hamiltonian_field(&cf, &ham)?;
    let lie = lie_derivative(&field, cf.alpha(), DiffBackend::Dual)?.covector_raw(x);
    let pulled = |t: f64| {
        let map = flow_map(&field, t, 8);
        let a = cf.alpha().covector_raw(&map.apply_raw(x));
        (0..3)
            .map(|i| {
                let mut e = vec![0.0; 3];
                e[i] = 1.0;
                dot(&a, &map.push_raw(x, &e))
            })
            .collect::<Vec<f64>>()
    };
    let (p, m) = (pulled(h), pulled(-h));
    Ok((0..3).map(|i| ((p[i] - m[i]) / (2.0 * h) - lie[i]).abs()).fold(0.0, f64::max))
}

fn calculus_kernel(ctx: &Ctx, rec: &mut Recorder) -> Result<()> {
    let mut worst: f64 = 0.0;
    for (label, cf) in catalog_forms()? {
        let s = chart_samples(cf.chart(), 1.0, ctx.samples, ctx.seed)?;
        let r = dd_residual(&cf, &s)?;
        rec.measure(&format!("dd-{label}"), r);
        worst = worst.max(r);
    }
    rec.check("dd-max", worst, Relation::AtMost, 1e-12);
    let x = [0.3, -0.4, 0.2];
    let (e1, e2) = (cartan_flow_error(0.02, &x)?, cartan_flow_error(0.01, &x)?);
    rec.check("cartan-error", e2, Relation::AtMost, 1e-3);
    rec.check("cartan-order", (e1 / e2).log2(), Relation::AtLeast, 1.8);
    Ok(())
}
