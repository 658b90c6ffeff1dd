//! Sampled plastikstufe meshes, their defining checks, and transport along
//! loops with trivial monodromy.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chart::{ensure_same_chart, ChartManifold, Coordinate};
use crate::contact::{isotropy_violation, reeb_field, ContactForm, RANK_TOL};
use crate::error::{Error, Result};
use crate::fibration::{sweep, ContactFibration};
use crate::form::SmoothMap;
use crate::jet::Jet;
use crate::linalg::{dot, normalized_gram_determinant};
use crate::ode::{flow, IntegratorSettings};
use crate::paths::{wrap_angle, BasePath};

/// Parameter chart `(ρ, φ[, s])` of `D² × S` with `S` a point or a circle.
pub fn parameter_chart(core_dim: usize) -> Result<Arc<ChartManifold>> {
    let mut coords = vec![Coordinate::bounded("rho", 0.0, 1.0), Coordinate::periodic("phi", TAU)];
    match core_dim {
        0 => {}
        1 => coords.push(Coordinate::periodic("s", 1.0)),
        d => return Err(Error::InvalidParameter(format!("core dimension {d} not supported"))),
    }
    ChartManifold::new(&format!("plastikstufe-param-{core_dim}"), coords)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshSample {
    pub param: Vec<f64>,
    pub point: Vec<f64>,
    pub tangents: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshGrid {
    pub radial: usize,
    pub angular: usize,
    pub core: usize,
    pub ring_radius: f64,
    pub ring_points: usize,
}

impl Default for MeshGrid {
    fn default() -> Self {
        MeshGrid {
            radial: 8,
            angular: 16,
            core: 8,
            ring_radius: 0.05,
            ring_points: 32,
        }
    }
}

/// `D² × S` sampled along its leaf structure. Leaves are the rays
/// `{φ} × (0, 1) × S`; the singular set is `{0} × S`.
#[derive(Clone, Debug)]
pub struct PlastikstufeMesh {
    pub name: String,
    pub chart: Arc<ChartManifold>,
    pub core_dim: usize,
    /// `ρ = 0`; tangents are the core directions.
    pub core: Vec<MeshSample>,
    /// `0 < ρ < 1`; tangents `∂ρ` then the core directions.
    pub leaves: Vec<MeshSample>,
    /// `ρ = 1`; tangents `∂φ` then the core directions.
    pub boundary: Vec<MeshSample>,
    /// Small circles `ρ = const` around each core sample, ordered by `φ`;
    /// tangents `∂ρ, ∂φ`.
    pub rings: Vec<Vec<MeshSample>>,
}

impl PlastikstufeMesh {
    pub fn from_immersion(name: &str, map: &SmoothMap, grid: MeshGrid) -> Result<Self> {
        let src = map.source.dim();
        if src < 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: src });
        }
        let core_dim = src - 2;
        if grid.radial < 2 || grid.angular < 3 || grid.ring_points < 8 || !(grid.ring_radius > 0.0 && grid.ring_radius < 1.0) {
            return Err(Error::InvalidParameter(format!("mesh grid too coarse: {grid:?}")));
        }
        let cores: Vec<Vec<f64>> = match core_dim {
            0 => vec![vec![]],
            1 => (0..grid.core.max(1)).map(|j| vec![j as f64 / grid.core.max(1) as f64]).collect(),
            d => return Err(Error::InvalidParameter(format!("core dimension {d} not supported"))),
        };
        let sample = |rho: f64, phi: f64, s: &[f64], pick: &[usize]| {
            let mut param = vec![rho, phi];
            param.extend_from_slice(s);
            let cols = map.tangent_columns(&param);
            let mut tangents: Vec<Vec<f64>> = pick.iter().map(|&i| cols[i].clone()).collect();
            tangents.extend(cols[2..].iter().cloned());
            MeshSample {
                point: map.apply_raw(&param),
                param,
                tangents,
            }
        };
        let mut mesh = PlastikstufeMesh {
            name: name.to_string(),
            chart: Arc::clone(&map.target),
            core_dim,
            core: Vec::new(),
            leaves: Vec::new(),
            boundary: Vec::new(),
            rings: Vec::new(),
        };
        for s in &cores {
            mesh.core.push(sample(0.0, 0.0, s, &[]));
            for k in 0..grid.angular {
                let phi = TAU * k as f64 / grid.angular as f64;
                for i in 1..grid.radial {
                    mesh.leaves.push(sample(i as f64 / grid.radial as f64, phi, s, &[0]));
                }
                mesh.boundary.push(sample(1.0, phi, s, &[1]));
            }
            let ring = (0..grid.ring_points)
                .map(|k| {
                    let phi = TAU * k as f64 / grid.ring_points as f64;
                    let mut smp = sample(grid.ring_radius, phi, s, &[0, 1]);
                    smp.tangents.truncate(2);
                    smp
                })
                .collect();
            mesh.rings.push(ring);
        }
        Ok(mesh)
    }

    pub fn len(&self) -> usize {
        self.core.len() + self.leaves.len() + self.boundary.len() + self.rings.iter().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rows `kind, params…, coords…` for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("kind,rho,phi");
        for k in 0..self.core_dim {
            out.push_str(&format!(",s{k}"));
        }
        for n in self.chart.coord_names() {
            out.push(',');
            out.push_str(&n);
        }
        out.push('\n');
        let groups: [(&str, Vec<&MeshSample>); 4] = [
            ("core", self.core.iter().collect()),
            ("leaf", self.leaves.iter().collect()),
            ("boundary", self.boundary.iter().collect()),
            ("ring", self.rings.iter().flatten().collect()),
        ];
        for (kind, samples) in groups {
            for s in samples {
                out.push_str(kind);
                for v in s.param.iter().chain(&s.point) {
                    out.push(',');
                    out.push_str(&format!("{v}"));
                }
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlastikstufeReport {
    pub tol: f64,
    /// Condition (i): core directions in `ker α`.
    pub core_violation: f64,
    /// Condition (iii): leaves isotropic.
    pub leaf_violation: f64,
    /// Condition (iv): boundary Legendrian.
    pub boundary_violation: f64,
    /// Condition (v): winding of the characteristic line field per ring.
    pub windings: Vec<f64>,
    pub winding_number: Option<i64>,
    pub core_ok: bool,
    pub leaves_ok: bool,
    pub boundary_ok: bool,
    pub elliptic_ok: bool,
}

impl PlastikstufeReport {
    pub fn passed(&self) -> bool {
        self.core_ok && self.leaves_ok && self.boundary_ok && self.elliptic_ok
    }
}

/// Winding number of `w = (α(T_v), −α(T_u))` around one ring, where
/// `(u, v) = ρ(cos φ, sin φ)` are Cartesian disk parameters.
pub fn ring_winding(cf: &ContactForm, ring: &[MeshSample]) -> f64 {
    let angles: Vec<f64> = ring
        .iter()
        .map(|s| {
            let (rho, phi) = (s.param[0], s.param[1]);
            let a = cf.alpha().covector_raw(&s.point);
            let (ar, ap) = (dot(&a, &s.tangents[0]), dot(&a, &s.tangents[1]));
            let au = phi.cos() * ar - phi.sin() / rho * ap;
            let av = phi.sin() * ar + phi.cos() / rho * ap;
            (-au).atan2(av)
        })
        .collect();
    let n = angles.len();
    let total: f64 = (0..n).map(|k| wrap_angle(angles[(k + 1) % n] - angles[k])).sum();
    total / TAU
}

/// Checks (i), (iii), (iv) and (v) on a mesh. Conditions on the singular
/// set and the leaf topology hold by construction of the mesh.
pub fn verify_plastikstufe(cf: &ContactForm, mesh: &PlastikstufeMesh, tol: f64) -> Result<PlastikstufeReport> {
    ensure_same_chart(cf.chart(), &mesh.chart)?;
    if mesh.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    for s in mesh.leaves.iter().chain(&mesh.boundary) {
        if normalized_gram_determinant(&s.tangents) < RANK_TOL {
            return Err(Error::RankDeficient { at: s.param.clone() });
        }
    }
    let worst = |set: &[MeshSample]| {
        set.iter()
            .map(|s| isotropy_violation(cf, &s.point, &s.tangents))
            .fold(0.0, f64::max)
    };
    let core_violation = worst(&mesh.core);
    let leaf_violation = worst(&mesh.leaves);
    let boundary_violation = worst(&mesh.boundary);
    let windings: Vec<f64> = mesh.rings.iter().map(|r| ring_winding(cf, r)).collect();
    let rounded: Vec<i64> = windings.iter().map(|w| w.round() as i64).collect();
    let winding_number = match rounded.first() {
        Some(&w0) if rounded.iter().all(|&w| w == w0) && windings.iter().all(|w| (w - w.round()).abs() < 1e-6) => Some(w0),
        _ => None,
    };
    Ok(PlastikstufeReport {
        tol,
        core_violation,
        leaf_violation,
        boundary_violation,
        core_ok: core_violation <= tol,
        leaves_ok: leaf_violation <= tol,
        boundary_ok: boundary_violation <= tol,
        elliptic_ok: winding_number == Some(1),
        windings,
        winding_number,
    })
}

/// Sweeps a mesh in the fiber over `path(0)` along a closed path whose
/// monodromy fixes the mesh, giving a mesh with core `S × S¹` in the total
/// chart. The new core parameter is the path time.
pub fn transport_plastikstufe(
    fib: &ContactFibration,
    path: &BasePath,
    mesh: &PlastikstufeMesh,
    settings: &IntegratorSettings,
    tol_mono: f64,
) -> Result<PlastikstufeMesh> {
    ensure_same_chart(fib.fiber_chart(), &mesh.chart)?;
    if !path.is_closed(1e-9) {
        return Err(Error::Precondition(format!("path `{}` is not closed", path.name)));
    }
    let groups = [&mesh.core[..], &mesh.leaves[..], &mesh.boundary[..]];
    let mut items: Vec<(Vec<f64>, Vec<Vec<f64>>)> = Vec::new();
    for g in groups {
        items.extend(g.iter().map(|s| (s.point.clone(), s.tangents.clone())));
    }
    for ring in &mesh.rings {
        items.extend(ring.iter().map(|s| (s.point.clone(), s.tangents.clone())));
    }
    let swept = sweep(fib, path, &items, settings)?;

    let mut max_disp: f64 = 0.0;
    for ((v0, _), states) in items.iter().zip(&swept) {
        let end = states.last().expect("sweep records the endpoint");
        let (v1, _) = fib.split(&end.point);
        max_disp = max_disp.max(fib.fiber_chart().distance(&v1, v0));
    }
    if max_disp > tol_mono {
        return Err(Error::MonodromyNotIdentity {
            max_displacement: max_disp,
            tol: tol_mono,
        });
    }

    let mut out = PlastikstufeMesh {
        name: format!("{} swept along {}", mesh.name, path.name),
        chart: Arc::clone(fib.total().chart()),
        core_dim: mesh.core_dim + 1,
        core: Vec::new(),
        leaves: Vec::new(),
        boundary: Vec::new(),
        rings: Vec::new(),
    };
    let mut it = swept.into_iter();
    let mut take = |src: &[MeshSample], drop_velocity: bool| -> Vec<Vec<MeshSample>> {
        src.iter()
            .map(|s| {
                it.next()
                    .expect("one sweep per sample")
                    .into_iter()
                    .map(|st| {
                        let mut param = s.param.clone();
                        param.push(st.t);
                        let mut tangents = st.tangents;
                        if drop_velocity {
                            tangents.pop();
                        } else {
                            // velocity is the new core direction; keep the
                            // leaf or boundary direction first
                            let vel = tangents.pop().expect("velocity recorded");
                            tangents.push(vel);
                        }
                        MeshSample {
                            param,
                            point: st.point,
                            tangents,
                        }
                    })
                    .collect()
            })
            .collect()
    };
    out.core = take(&mesh.core, false).into_iter().flatten().collect();
    out.leaves = take(&mesh.leaves, false).into_iter().flatten().collect();
    out.boundary = take(&mesh.boundary, false).into_iter().flatten().collect();
    for ring in &mesh.rings {
        // per ring: one list per sample, each over checkpoints; regroup by time
        let per_sample = take(ring, true);
        let n_t = per_sample.first().map_or(0, Vec::len);
        for k in 0..n_t {
            out.rings.push(per_sample.iter().map(|s| s[k].clone()).collect());
        }
    }
    Ok(out)
}

/// The disk `z = c(1 − cos r)(1 − ρ²)`, `r = r_b ρ`, in a Cartesian
/// `(x, y, z)` chart.
pub fn graph_disk(target: &Arc<ChartManifold>, r_b: f64, c: f64) -> Result<SmoothMap> {
    if target.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: target.dim() });
    }
    let param = parameter_chart(0)?;
    Ok(SmoothMap::new(&param, target, move |u| {
        let r = u[0] * r_b;
        let z = (Jet::one() - r.cos()) * (Jet::one() - u[0] * u[0]) * c;
        vec![r * u[1].cos(), r * u[1].sin(), z]
    }))
}

/// First radius in `(lo, hi)` where the circle of that radius in the
/// plane `z = 0` is Legendrian, by bisection on `α(∂θ)`.
pub fn legendrian_boundary_radius(cf: &ContactForm, lo: f64, hi: f64) -> Result<f64> {
    let g = |r: f64| cf.alpha_on(&[r, 0.0, 0.0], &[0.0, r, 0.0]);
    let (mut a, mut b) = (lo, hi);
    let (mut ga, gb) = (g(a), g(b));
    if ga.signum() == gb.signum() {
        return Err(Error::Precondition(format!(
            "α(∂θ) does not change sign on [{lo}, {hi}]"
        )));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let gm = g(m);
        if gm == 0.0 || b - a < 1e-15 {
            return Ok(m);
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// The overtwisted disk of the `ot-r3` form: boundary radius from the
/// Legendrian condition and graph perturbation `c`.
pub fn overtwisted_disk(cf: &ContactForm, c: f64, grid: MeshGrid) -> Result<(PlastikstufeMesh, f64)> {
    let r_b = legendrian_boundary_radius(cf, 2.0, 4.0)?;
    let map = graph_disk(cf.chart(), r_b, c)?;
    Ok((PlastikstufeMesh::from_immersion("overtwisted disk", &map, grid)?, r_b))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub time: f64,
    /// `(r, z-displacement)` of points of the flat disk after the flow.
    pub profile: Vec<(f64, f64)>,
    pub sign_changes: Vec<f64>,
    pub intersects: bool,
    pub reeb_z_at_zero: f64,
    pub reeb_z_at_pi: f64,
    pub reeb_z_at_two_pi: f64,
}

/// Flows the flat disk `z = 0, r ≤ r_max` by the Reeb field for time `t` and
/// scans the sign of the vertical displacement along a ray.
pub fn reeb_disk_overlap(cf: &ContactForm, t: f64, r_max: f64, n: usize) -> Result<OverlapReport> {
    if t == 0.0 {
        return Err(Error::InvalidParameter("flow time must be nonzero".into()));
    }
    if cf.dim() != 3 || n < 2 {
        return Err(Error::InvalidParameter("expects a Cartesian 3-chart and n ≥ 2".into()));
    }
    let reeb = reeb_field(cf);
    let mut profile = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let r = r_max * k as f64 / n as f64;
        let end = flow(&reeb.field, &[r, 0.0, 0.0], t, 100)?;
        profile.push((r, end[2]));
    }
    let sign_changes: Vec<f64> = profile
        .windows(2)
        .filter(|w| w[0].1.signum() != w[1].1.signum())
        .map(|w| w[0].0 - w[0].1 * (w[1].0 - w[0].0) / (w[1].1 - w[0].1))
        .collect();
    let rz = |r: f64| cf.reeb_raw(&[r, 0.0, 0.0]).map(|v| v[2]);
    Ok(OverlapReport {
        time: t,
        intersects: !sign_changes.is_empty(),
        profile,
        sign_changes,
        reeb_z_at_zero: rz(0.0)?,
        reeb_z_at_pi: rz(PI)?,
        reeb_z_at_two_pi: rz(TAU)?,
    })
}
