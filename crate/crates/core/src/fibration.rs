//! Contact fibrations, the contact connection, path lifting and monodromy.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::chart::{ensure_same_chart, ChartManifold, Point};
use crate::contact::{check_contactomorphism, check_isotropic, isotropy_violation, top_power, ConformalReport, ContactForm, PIVOT_TOL, RANK_TOL};
use crate::error::{Error, Result};
use crate::form::{pullback, SmoothMap};
use crate::jet::{constants, values, Jet};
use crate::linalg::{dot, lu_solve, normalized_gram_determinant, orthogonal_complement};
use crate::ode::{rk4, IntegratorSettings};
use crate::paths::BasePath;
use crate::sampling::SampleSet;

/// A total contact chart split into fiber and base coordinates.
#[derive(Clone)]
pub struct ContactFibration {
    pub name: String,
    total: ContactForm,
    fiber_form: ContactForm,
    fiber_coords: Vec<usize>,
    base_coords: Vec<usize>,
    base_chart: Arc<ChartManifold>,
}

impl fmt::Debug for ContactFibration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContactFibration")
            .field("name", &self.name)
            .field("total", &self.total)
            .field("fiber_coords", &self.fiber_coords)
            .field("base_coords", &self.base_coords)
            .finish()
    }
}

impl ContactFibration {
    pub fn new(
        name: &str,
        total: ContactForm,
        fiber_form: ContactForm,
        fiber_coords: Vec<usize>,
        base_coords: Vec<usize>,
        base_chart: Arc<ChartManifold>,
    ) -> Result<Self> {
        let n = total.dim();
        let mut all: Vec<usize> = fiber_coords.iter().chain(&base_coords).copied().collect();
        all.sort_unstable();
        if all != (0..n).collect::<Vec<_>>() {
            return Err(Error::InvalidParameter(format!(
                "fiber {fiber_coords:?} and base {base_coords:?} do not partition {n} coordinates"
            )));
        }
        if fiber_form.dim() != fiber_coords.len() {
            return Err(Error::DimensionMismatch {
                expected: fiber_coords.len(),
                got: fiber_form.dim(),
            });
        }
        if base_chart.dim() != base_coords.len() {
            return Err(Error::DimensionMismatch {
                expected: base_coords.len(),
                got: base_chart.dim(),
            });
        }
        Ok(ContactFibration {
            name: name.to_string(),
            total,
            fiber_form,
            fiber_coords,
            base_coords,
            base_chart,
        })
    }

    pub fn total(&self) -> &ContactForm {
        &self.total
    }

    pub fn fiber_form(&self) -> &ContactForm {
        &self.fiber_form
    }

    pub fn fiber_chart(&self) -> &Arc<ChartManifold> {
        self.fiber_form.chart()
    }

    pub fn base_chart(&self) -> &Arc<ChartManifold> {
        &self.base_chart
    }

    pub fn fiber_coords(&self) -> &[usize] {
        &self.fiber_coords
    }

    pub fn base_coords(&self) -> &[usize] {
        &self.base_coords
    }

    pub fn assemble(&self, fiber: &[Jet], base: &[Jet]) -> Vec<Jet> {
        let mut x = vec![Jet::zero(); self.total.dim()];
        for (v, &i) in fiber.iter().zip(&self.fiber_coords) {
            x[i] = *v;
        }
        for (v, &i) in base.iter().zip(&self.base_coords) {
            x[i] = *v;
        }
        x
    }

    pub fn assemble_raw(&self, fiber: &[f64], base: &[f64]) -> Vec<f64> {
        values(&self.assemble(&constants(fiber), &constants(base)))
    }

    pub fn split<T: Copy>(&self, x: &[T]) -> (Vec<T>, Vec<T>) {
        (
            self.fiber_coords.iter().map(|&i| x[i]).collect(),
            self.base_coords.iter().map(|&i| x[i]).collect(),
        )
    }

    pub fn project(&self, p: &Point) -> Result<Vec<f64>> {
        ensure_same_chart(self.total.chart(), p.chart())?;
        Ok(self.split(p.coords()).1)
    }

    /// The total form restricted to the fiber over `base`.
    pub fn fiber_restriction(&self, base: &[f64]) -> Result<ContactForm> {
        let me = self.clone();
        let b = constants(base);
        let inclusion = SmoothMap::new(self.fiber_chart(), self.total.chart(), move |v| me.assemble(v, &b));
        let alpha = pullback(&inclusion, self.total.alpha())?;
        ContactForm::new(
            &format!("{}|fiber", self.total.name()),
            alpha,
            self.total.backend(),
        )
    }

    /// The horizontal lift of the base vector `u` at `x`: `dπ(X) = u`,
    /// `α(X) = 0`, and `dα(X, w) = 0` for `w ∈ TF ∩ ker α`.
    pub fn horizontal_lift_jet(&self, x: &[Jet], u: &[Jet]) -> Result<Vec<Jet>> {
        let (a, omega) = self.total.structure_jet(x);
        let m = self.fiber_coords.len();
        // Unknowns: fiber components v and a multiplier s with
        //   Σ_f' Ω_{f'f} v_f' − s a_f = −Σ_b u_b Ω_{bf}
        //   Σ_f a_f v_f = −Σ_b a_b u_b
        let mut mat = vec![vec![Jet::zero(); m + 1]; m + 1];
        let mut rhs = vec![Jet::zero(); m + 1];
        for (r, &f) in self.fiber_coords.iter().enumerate() {
            for (c, &fp) in self.fiber_coords.iter().enumerate() {
                mat[r][c] = omega[fp][f];
            }
            mat[r][m] = -a[f];
            mat[m][r] = a[f];
            rhs[r] = -self
                .base_coords
                .iter()
                .zip(u)
                .map(|(&b, ub)| *ub * omega[b][f])
                .sum::<Jet>();
        }
        rhs[m] = -self
            .base_coords
            .iter()
            .zip(u)
            .map(|(&b, ub)| *ub * a[b])
            .sum::<Jet>();
        let sol = lu_solve(mat, rhs, PIVOT_TOL).ok_or_else(|| Error::SingularSystem {
            what: format!("horizontal lift in {}", self.name),
            at: values(x),
        })?;
        let mut out = vec![Jet::zero(); x.len()];
        for (k, &f) in self.fiber_coords.iter().enumerate() {
            out[f] = sol[k];
        }
        for (ub, &b) in u.iter().zip(&self.base_coords) {
            out[b] = *ub;
        }
        Ok(out)
    }

    pub fn horizontal_lift(&self, p: &Point, u: &[f64]) -> Result<Vec<f64>> {
        ensure_same_chart(self.total.chart(), p.chart())?;
        if u.len() != self.base_coords.len() {
            return Err(Error::DimensionMismatch {
                expected: self.base_coords.len(),
                got: u.len(),
            });
        }
        Ok(values(&self.horizontal_lift_jet(&constants(p.coords()), &constants(u))?))
    }

    /// `(|α(X)|, max |dα(X, w)|)` over an orthonormal basis `w` of
    /// `TF ∩ ker α` at `x`.
    pub fn lift_residuals(&self, x: &[f64], v: &[f64]) -> (f64, f64) {
        let (a, omega) = self.total.structure(x);
        let e1 = dot(&a, v).abs();
        let (a_f, _) = self.split(&a);
        let mut e2: f64 = 0.0;
        for w_f in orthogonal_complement(&a_f) {
            let w = self.assemble_raw(&w_f, &vec![0.0; self.base_coords.len()]);
            let val: f64 = (0..v.len())
                .map(|i| (0..v.len()).map(|j| v[i] * omega[i][j] * w[j]).sum::<f64>())
                .sum();
            e2 = e2.max(val.abs());
        }
        (e1, e2)
    }

    /// Fiberwise contact volume and transversality at sampled total points.
    pub fn verify(&self, samples: &SampleSet, tol_contact: f64) -> Result<FibrationReport> {
        if samples.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        let mut vols = Vec::with_capacity(samples.len());
        let mut min_fiber_alpha = f64::INFINITY;
        for p in samples.iter() {
            ensure_same_chart(self.total.chart(), p.chart())?;
            let (a, omega) = self.total.structure(p.coords());
            let a_f: Vec<f64> = self.fiber_coords.iter().map(|&i| a[i]).collect();
            let o_f: Vec<Vec<f64>> = self
                .fiber_coords
                .iter()
                .map(|&i| self.fiber_coords.iter().map(|&j| omega[i][j]).collect())
                .collect();
            vols.push(top_power(&a_f, &o_f).abs());
            min_fiber_alpha = min_fiber_alpha.min(dot(&a_f, &a_f).sqrt());
        }
        let mut sorted = vols.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        let min = sorted[0];
        Ok(FibrationReport {
            min_fiber_volume: min,
            median_fiber_volume: median,
            min_fiber_alpha_norm: min_fiber_alpha,
            passed: median > 0.0 && min > tol_contact * median && min_fiber_alpha > 0.0,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FibrationReport {
    pub min_fiber_volume: f64,
    pub median_fiber_volume: f64,
    pub min_fiber_alpha_norm: f64,
    pub passed: bool,
}

/// A lifted path, one entry per integrator step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub coord_names: Vec<String>,
    pub ts: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    /// Set when integration stopped early; the points cover the part
    /// computed before the failure.
    pub diagnostic: Option<String>,
}

impl Trajectory {
    pub fn end(&self) -> &[f64] {
        self.points.last().map(|p| p.as_slice()).unwrap_or(&[])
    }

    pub fn is_complete(&self) -> bool {
        self.diagnostic.is_none()
    }

    /// Rows `t, coords…` at every `every`-th step plus the last one.
    pub fn checkpoints(&self, every: usize) -> Vec<(f64, Vec<f64>)> {
        let every = every.max(1);
        let n = self.points.len();
        (0..n)
            .filter(|k| k % every == 0 || *k + 1 == n)
            .map(|k| (self.ts[k], self.points[k].clone()))
            .collect()
    }
}

/// Integrates the fiber state along `path` from `t = 0` to `t_end` and
/// returns the final fiber state; `observe` sees total points.
pub fn transport_jet<O>(
    fib: &ContactFibration,
    path: &BasePath,
    v0: &[Jet],
    t_end: Jet,
    steps: usize,
    mut observe: O,
) -> Result<Vec<Jet>>
where
    O: FnMut(usize, Jet, &[Jet]) -> Result<()>,
{
    let chart = Arc::clone(fib.total.chart());
    rk4(
        |t, v| {
            let b = path.point_jet(t);
            let u = path.velocity_jet(t);
            let x = fib.assemble(v, &b);
            let lift = fib.horizontal_lift_jet(&x, &u)?;
            Ok(fib.fiber_coords.iter().map(|&i| lift[i]).collect())
        },
        Jet::zero(),
        t_end,
        v0.to_vec(),
        steps,
        |k, t, v| {
            let x = fib.assemble(v, &path.point_jet(t));
            let mut xr = values(&x);
            chart.normalize(&mut xr);
            chart.check(&xr).map_err(|e| Error::LeftDomain {
                t: t.value(),
                reason: e.to_string(),
            })?;
            observe(k, t, &x)
        },
    )
}

/// Horizontal lift of `path` through the total point `p0`.
pub fn lift_path(fib: &ContactFibration, path: &BasePath, p0: &Point, settings: &IntegratorSettings) -> Result<Trajectory> {
    settings.validate()?;
    ensure_same_chart(fib.total.chart(), p0.chart())?;
    ensure_same_chart(&fib.base_chart, path.chart())?;
    let (v0, b0) = fib.split(p0.coords());
    let start = path.point(0.0);
    if fib.base_chart.distance(&b0, &start) > 1e-12 {
        return Err(Error::Precondition(format!(
            "start point projects to {b0:?}, path starts at {start:?}"
        )));
    }
    let mut traj = Trajectory {
        coord_names: fib.total.chart().coord_names(),
        ts: Vec::with_capacity(settings.steps + 1),
        points: Vec::with_capacity(settings.steps + 1),
        diagnostic: None,
    };
    let res = transport_jet(fib, path, &constants(&v0), Jet::one(), settings.steps, |_, t, x| {
        traj.ts.push(t.value());
        traj.points.push(values(x));
        Ok(())
    });
    match res {
        Ok(_) => Ok(traj),
        Err(e @ Error::LeftDomain { .. }) => {
            traj.diagnostic = Some(e.to_string());
            Ok(traj)
        }
        Err(e) => {
            if traj.points.is_empty() {
                Err(e)
            } else {
                traj.diagnostic = Some(e.to_string());
                Ok(traj)
            }
        }
    }
}

/// Lift starting from fiber coordinates over `path(0)`.
pub fn lift_from_fiber(fib: &ContactFibration, path: &BasePath, v0: &[f64], settings: &IntegratorSettings) -> Result<Trajectory> {
    let x0 = fib.assemble_raw(v0, &path.point(0.0));
    let p0 = Point::new(fib.total.chart(), x0)?;
    lift_path(fib, path, &p0, settings)
}

/// Largest `|α(γ̃')|` at checkpoints, with `γ̃'` from a five-point stencil
/// of the discrete trajectory; decays at the integrator's order.
pub fn horizontality_defect(fib: &ContactFibration, traj: &Trajectory, every: usize) -> f64 {
    let n = traj.points.len();
    if n < 5 {
        return 0.0;
    }
    let h = traj.ts[1] - traj.ts[0];
    let chart = fib.total.chart();
    let mut worst: f64 = 0.0;
    for k in (2..n - 2).step_by(every.max(1)) {
        let p = &traj.points;
        let d = |a: usize, b: usize| chart.difference(&p[a], &p[b]);
        let (d1, d2) = (d(k + 1, k - 1), d(k + 2, k - 2));
        let v: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| (8.0 * a - b) / (12.0 * h)).collect();
        worst = worst.max(fib.total.alpha_on(&p[k], &v).abs());
    }
    worst
}

fn key(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

/// Fiber transport along a fixed path; trajectories are integrated on
/// demand and endpoints are memoized per start point.
pub struct MonodromyMap {
    fib: ContactFibration,
    path: BasePath,
    settings: IntegratorSettings,
    cache: Mutex<HashMap<Vec<u64>, Vec<f64>>>,
}

impl fmt::Debug for MonodromyMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MonodromyMap")
            .field("fibration", &self.fib.name)
            .field("path", &self.path.name)
            .field("settings", &self.settings)
            .finish()
    }
}

impl MonodromyMap {
    pub fn new(fib: &ContactFibration, path: &BasePath, settings: IntegratorSettings) -> Result<Self> {
        settings.validate()?;
        ensure_same_chart(&fib.base_chart, path.chart())?;
        Ok(MonodromyMap {
            fib: fib.clone(),
            path: path.clone(),
            settings,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn path(&self) -> &BasePath {
        &self.path
    }

    pub fn settings(&self) -> &IntegratorSettings {
        &self.settings
    }

    pub fn apply_jet(&self, v: &[Jet]) -> Result<Vec<Jet>> {
        transport_jet(&self.fib, &self.path, v, Jet::one(), self.settings.steps, |_, _, _| Ok(()))
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let k = key(v);
        if let Some(hit) = self.cache.lock().expect("cache poisoned").get(&k) {
            return Ok(hit.clone());
        }
        let out = values(&self.apply_jet(&constants(v))?);
        self.cache
            .lock()
            .expect("cache poisoned")
            .entry(k)
            .or_insert_with(|| out.clone());
        Ok(out)
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().expect("cache poisoned").len()
    }

    /// `dm(w)` at `v`, through the integrator.
    pub fn tangent(&self, v: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        let tag = 0;
        let vj: Vec<Jet> = v
            .iter()
            .zip(w)
            .map(|(a, b)| Jet::constant(*a).with_infinitesimal(tag, Jet::constant(*b)))
            .collect();
        Ok(self
            .apply_jet(&vj)?
            .iter()
            .map(|c| c.infinitesimal_part(tag).value())
            .collect())
    }

    /// The map as a [`SmoothMap`] on the fiber chart; failures map to NaN.
    pub fn as_smooth_map(self: &Arc<Self>) -> SmoothMap {
        let me = Arc::clone(self);
        let chart = Arc::clone(self.fib.fiber_chart());
        SmoothMap::new(&chart, &chart, move |v| {
            if v.iter().all(|c| c.tags() == 0) {
                if let Ok(r) = me.apply(&values(v)) {
                    return constants(&r);
                }
            }
            me.apply_jet(v)
                .unwrap_or_else(|_| vec![Jet::constant(f64::NAN); v.len()])
        })
    }

    /// Largest fiber displacement `|m(v) − v|` over the points.
    pub fn max_displacement(&self, points: &[Vec<f64>]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for v in points {
            let w = self.apply(v)?;
            worst = worst.max(self.fib.fiber_chart().distance(&w, v));
        }
        Ok(worst)
    }
}

/// Monodromy of a closed loop with its contactomorphism report on the
/// sampled fiber points.
pub fn monodromy(
    fib: &ContactFibration,
    path: &BasePath,
    samples: &[Point],
    settings: IntegratorSettings,
) -> Result<(Arc<MonodromyMap>, ConformalReport)> {
    if !path.is_closed(1e-9) {
        return Err(Error::Precondition(format!("path `{}` is not closed", path.name)));
    }
    let map = Arc::new(MonodromyMap::new(fib, path, settings)?);
    let fiber = fib.fiber_restriction(&path.point(0.0))?;
    let report = check_contactomorphism(&fiber, &map.as_smooth_map(), samples)?;
    Ok((map, report))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweptSample {
    pub param: Vec<f64>,
    pub t: f64,
    pub point: Vec<f64>,
    /// Transported parameter tangents followed by the lift velocity.
    pub tangents: Vec<Vec<f64>>,
}

/// Sweeps fiber points with tangent frames along `path`, recording states
/// at every checkpoint. Each item is `(fiber point, fiber tangents)`.
pub fn sweep(
    fib: &ContactFibration,
    path: &BasePath,
    items: &[(Vec<f64>, Vec<Vec<f64>>)],
    settings: &IntegratorSettings,
) -> Result<Vec<Vec<SweptSample>>> {
    settings.validate()?;
    let every = settings.checkpoint_every;
    let steps = settings.steps;
    let mut out = Vec::with_capacity(items.len());
    for (v0, frame) in items {
        let mut states: Vec<(f64, Vec<f64>, Vec<Vec<f64>>)> = Vec::new();
        let runs = frame.len().max(1);
        for r in 0..runs {
            let vj: Vec<Jet> = match frame.get(r) {
                Some(w) => v0
                    .iter()
                    .zip(w)
                    .map(|(a, b)| Jet::constant(*a).with_infinitesimal(0, Jet::constant(*b)))
                    .collect(),
                None => constants(v0),
            };
            let mut idx = 0;
            transport_jet(fib, path, &vj, Jet::one(), steps, |k, t, x| {
                if k % every == 0 || k == steps {
                    if r == 0 {
                        states.push((t.value(), values(x), Vec::new()));
                    }
                    if !frame.is_empty() {
                        let tan: Vec<f64> = x.iter().map(|c| c.infinitesimal_part(0).value()).collect();
                        states[idx].2.push(tan);
                    }
                    idx += 1;
                }
                Ok(())
            })?;
        }
        let samples = states
            .into_iter()
            .map(|(t, point, mut tangents)| {
                let u = path.velocity(t);
                let vel = fib
                    .horizontal_lift_jet(&constants(&point), &constants(&u))
                    .map(|v| values(&v))?;
                tangents.push(vel);
                Ok(SweptSample {
                    param: Vec::new(),
                    t,
                    point,
                    tangents,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(samples);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub start_violation: f64,
    pub max_violation: f64,
    pub rank_deficient: usize,
    /// The swept submanifold has the maximal isotropic dimension.
    pub legendrian: bool,
    pub samples: Vec<SweptSample>,
}

/// Sweeps an isotropic immersion `ι: params → fiber` along `path` and
/// measures the isotropy of the swept immersion.
pub fn transport_submanifold(
    fib: &ContactFibration,
    path: &BasePath,
    immersion: &SmoothMap,
    params: &[Vec<f64>],
    settings: &IntegratorSettings,
    tol_iso: f64,
) -> Result<SweepReport> {
    ensure_same_chart(fib.fiber_chart(), &immersion.target)?;
    let start_form = fib.fiber_restriction(&path.point(0.0))?;
    let start = check_isotropic(&start_form, immersion, params)?;
    if start.max_violation > tol_iso {
        return Err(Error::Precondition(format!(
            "start submanifold is not isotropic: |α(T)| = {:.3e} at {:?}",
            start.max_violation, start.argmax
        )));
    }
    let items: Vec<(Vec<f64>, Vec<Vec<f64>>)> = params
        .iter()
        .map(|u| (immersion.apply_raw(u), immersion.tangent_columns(u)))
        .collect();
    let swept = sweep(fib, path, &items, settings)?;
    let mut report = SweepReport {
        start_violation: start.max_violation,
        max_violation: 0.0,
        rank_deficient: 0,
        legendrian: immersion.source.dim() + 1 == (fib.total.dim() - 1) / 2,
        samples: Vec::new(),
    };
    for (u, states) in params.iter().zip(swept) {
        for mut s in states {
            let tangents = &s.tangents;
            if normalized_gram_determinant(tangents) < RANK_TOL {
                report.rank_deficient += 1;
            }
            report.max_violation = report
                .max_violation
                .max(isotropy_violation(&fib.total, &s.point, tangents));
            s.param = u.clone();
            report.samples.push(s);
        }
    }
    Ok(report)
}
