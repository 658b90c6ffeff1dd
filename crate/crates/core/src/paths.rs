//! Paths in two-dimensional base charts.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::sync::Arc;

use crate::chart::ChartManifold;
use crate::error::{Error, Result};
use crate::jet::{constants, values, Jet};

pub type CurveFn = Arc<dyn Fn(Jet) -> Vec<Jet> + Send + Sync>;

/// A parametrized path `t ∈ [0, 1] → base chart`.
#[derive(Clone)]
pub struct BasePath {
    pub name: String,
    chart: Arc<ChartManifold>,
    curve: CurveFn,
    immersed: bool,
}

impl fmt::Debug for BasePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BasePath")
            .field("name", &self.name)
            .field("chart", &self.chart.name)
            .field("immersed", &self.immersed)
            .finish()
    }
}

impl BasePath {
    pub fn new<F>(name: &str, chart: &Arc<ChartManifold>, immersed: bool, curve: F) -> Self
    where
        F: Fn(Jet) -> Vec<Jet> + Send + Sync + 'static,
    {
        BasePath {
            name: name.to_string(),
            chart: Arc::clone(chart),
            curve: Arc::new(curve),
            immersed,
        }
    }

    pub fn chart(&self) -> &Arc<ChartManifold> {
        &self.chart
    }

    pub fn immersed(&self) -> bool {
        self.immersed
    }

    pub fn point_jet(&self, t: Jet) -> Vec<Jet> {
        (self.curve)(t)
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        values(&(self.curve)(Jet::constant(t)))
    }

    /// `γ'(t)` by forward mode in `t`; works for jet-valued `t`.
    pub fn velocity_jet(&self, t: Jet) -> Vec<Jet> {
        let tag = Jet::fresh_tag(&[t]);
        let tt = t.with_infinitesimal(tag, Jet::one());
        (self.curve)(tt)
            .iter()
            .map(|c| c.infinitesimal_part(tag))
            .collect()
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        values(&self.velocity_jet(Jet::constant(t)))
    }

    pub fn is_closed(&self, tol: f64) -> bool {
        self.chart.distance(&self.point(0.0), &self.point(1.0)) <= tol
    }

    /// Checks that the path stays in the chart and, when flagged immersed,
    /// has nonvanishing velocity on `n` sample parameters.
    pub fn validate(&self, n: usize) -> Result<()> {
        for k in 0..=n {
            let t = k as f64 / n as f64;
            let p = self.point(t);
            if p.len() != self.chart.dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.chart.dim(),
                    got: p.len(),
                });
            }
            let mut q = p.clone();
            self.chart.normalize(&mut q);
            self.chart.check(&q)?;
            if self.immersed {
                let v = self.velocity(t);
                if v.iter().all(|c| c.abs() < 1e-12) {
                    return Err(Error::Precondition(format!(
                        "path `{}` flagged immersed has zero velocity at t = {t}",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// The constant path.
    pub fn constant(chart: &Arc<ChartManifold>, b: Vec<f64>) -> Self {
        let b = constants(&b);
        BasePath::new("constant", chart, false, move |_| b.clone())
    }

    /// `c + r (cos 2πkt, sin 2πkt)` in a Cartesian base chart.
    pub fn circle(chart: &Arc<ChartManifold>, center: [f64; 2], radius: f64, turns: f64) -> Self {
        Self::ellipse(chart, center, radius, radius, turns)
    }

    pub fn ellipse(chart: &Arc<ChartManifold>, center: [f64; 2], a: f64, b: f64, turns: f64) -> Self {
        BasePath::new(
            &format!("ellipse({a},{b})"),
            chart,
            true,
            move |t| {
                let s = t * (TAU * turns);
                vec![s.cos() * a + center[0], s.sin() * b + center[1]]
            },
        )
    }

    /// Gerono lemniscate `a (sin 2πt, sin 2πt cos 2πt)`; mirror symmetric,
    /// enclosed signed area zero, crossing itself at the origin.
    pub fn figure_eight(chart: &Arc<ChartManifold>, a: f64) -> Self {
        BasePath::new("figure-eight", chart, true, move |t| {
            let s = t * TAU;
            let sn = s.sin();
            vec![sn * a, sn * s.cos() * a]
        })
    }

    /// `(r0 + t (r1 − r0), θ0)` in a polar base chart.
    pub fn radial(chart: &Arc<ChartManifold>, r0: f64, r1: f64, theta: f64) -> Self {
        BasePath::new("radial", chart, r0 != r1, move |t| {
            vec![t * (r1 - r0) + r0, Jet::constant(theta)]
        })
    }

    /// Straight segment `b + t v`.
    pub fn segment(chart: &Arc<ChartManifold>, b: [f64; 2], v: [f64; 2]) -> Self {
        BasePath::new("segment", chart, v != [0.0, 0.0], move |t| {
            vec![t * v[0] + b[0], t * v[1] + b[1]]
        })
    }

    /// Traverse `self` on `[0, ½]` and `other` on `[½, 1]`.
    ///
    /// Each half is eased by `s - sin(2πs)/2π`, so the velocity and its
    /// derivative vanish at the joint and fixed-step RK4 keeps its order
    /// across it. The result is therefore not immersed.
    pub fn then(&self, other: &BasePath) -> Result<BasePath> {
        if !Arc::ptr_eq(&self.chart, &other.chart) && *self.chart != *other.chart {
            return Err(Error::ChartMismatch(self.chart.name.clone(), other.chart.name.clone()));
        }
        let (a, b) = (Arc::clone(&self.curve), Arc::clone(&other.curve));
        let ease = |s: Jet| s - (s * TAU).sin() * (1.0 / TAU);
        Ok(BasePath::new(&format!("{}+{}", self.name, other.name), &self.chart, false, move |t| {
            if t.value() <= 0.5 {
                a(ease(t * 2.0))
            } else {
                b(ease(t * 2.0 - 1.0))
            }
        }))
    }

    pub fn reversed(&self) -> BasePath {
        let a = Arc::clone(&self.curve);
        BasePath::new(&format!("-{}", self.name), &self.chart, self.immersed, move |t| {
            a(Jet::one() - t)
        })
    }

    /// `½ ∮ (x dy − y dx)` by the composite Simpson rule on `n` (even)
    /// intervals; meaningful for closed paths in a Cartesian chart.
    pub fn signed_area(&self, n: usize) -> f64 {
        let n = n + n % 2;
        let h = 1.0 / n as f64;
        let f = |t: f64| {
            let p = self.point(t);
            let v = self.velocity(t);
            0.5 * (p[0] * v[1] - p[1] * v[0])
        };
        let mut s = f(0.0) + f(1.0);
        for k in 1..n {
            s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }
}

/// Which symmetry produces the second half of the composite path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HalfSymmetry {
    /// Reflection in the line `y = −x`: a figure-eight with zero signed
    /// area and a transverse crossing at the origin.
    Mirror,
    /// `γ(p + ½) = −γ(p)`: both lobes carry the same orientation.
    PointReflection,
}

/// The composite path in `D²(δ)`: a quarter-pie lobe (radial segment,
/// outer arc with radius in `(3δ/4, δ)`, radial return) with filleted
/// corners, completed by a symmetric second lobe. With `reroute`, passages
/// through the origin are pushed sideways so the path avoids `D²(ρ)`.
#[derive(Clone, Debug)]
pub struct CompositePath {
    pub delta: f64,
    pub rho: f64,
    pub arc_radius: f64,
    pub fillet: f64,
    pub symmetry: HalfSymmetry,
    pub path: BasePath,
}

/// Arc-length parametrized quarter lobe, `s ∈ [0, L]`.
#[derive(Clone, Copy, Debug)]
struct Lobe {
    ra: f64,
    f: f64,
    cx: f64,
    theta_f: f64,
}

impl Lobe {
    fn new(delta: f64) -> Self {
        let ra = 7.0 * delta / 8.0;
        let f = delta / 16.0;
        let cx = ((ra - f).powi(2) - f * f).sqrt();
        let theta_f = f.atan2(cx);
        Lobe { ra, f, cx, theta_f }
    }

    fn pieces(&self) -> [f64; 5] {
        let fil = self.f * (FRAC_PI_2 + self.theta_f);
        let arc = self.ra * (FRAC_PI_2 - 2.0 * self.theta_f);
        [self.cx, fil, arc, fil, self.cx]
    }

    fn length(&self) -> f64 {
        self.pieces().iter().sum()
    }

    fn eval(&self, s: Jet) -> Vec<Jet> {
        let p = self.pieces();
        let mut start = 0.0;
        let sv = s.value();
        let mut piece = 4;
        for (i, len) in p.iter().enumerate() {
            if sv <= start + len || i == 4 {
                piece = i;
                break;
            }
            start += len;
        }
        let u = s - start;
        match piece {
            0 => vec![u, Jet::zero()],
            1 => {
                // fillet around (cx, f), from angle −π/2 up to θ_f
                let a = u / self.f - FRAC_PI_2;
                vec![a.cos() * self.f + self.cx, a.sin() * self.f + self.f]
            }
            2 => {
                let a = u / self.ra + self.theta_f;
                vec![a.cos() * self.ra, a.sin() * self.ra]
            }
            3 => {
                // mirror of piece 1 in the diagonal, traversed backwards
                let a = (Jet::constant(p[3]) - u) / self.f - FRAC_PI_2;
                vec![a.sin() * self.f + self.f, a.cos() * self.f + self.cx]
            }
            _ => vec![Jet::zero(), Jet::constant(p[4]) - u],
        }
    }
}

/// Smooth step: 0 for `x ≤ 0`, 1 for `x ≥ 1`, with steepness `k`.
pub fn smooth_step(x: Jet, k: f64) -> Jet {
    let v = x.value();
    if v <= 0.0 {
        Jet::zero()
    } else if v >= 1.0 {
        Jet::one()
    } else {
        let arg = (x.recip() - (Jet::one() - x).recip()) * k;
        // beyond ±700 the value and all derivatives are flat to f64 precision
        if arg.value() > 700.0 {
            Jet::zero()
        } else if arg.value() < -700.0 {
            Jet::one()
        } else {
            (arg.exp() + 1.0).recip()
        }
    }
}

impl CompositePath {
    pub fn new(chart: &Arc<ChartManifold>, delta: f64, rho: f64, symmetry: HalfSymmetry, reroute: bool) -> Result<Self> {
        if delta.is_nan() || delta <= 0.0 {
            return Err(Error::InvalidParameter(format!("δ must be positive, got {delta}")));
        }
        if !(rho > 0.0 && rho < delta / 4.0) {
            return Err(Error::InvalidParameter(format!(
                "removed disk radius must lie in (0, δ/4), got {rho}"
            )));
        }
        let lobe = Lobe::new(delta);
        let len = lobe.length();
        let second: fn(Vec<Jet>) -> Vec<Jet> = match symmetry {
            HalfSymmetry::Mirror => |p| vec![-p[1], -p[0]],
            HalfSymmetry::PointReflection => |p| vec![-p[0], -p[1]],
        };
        let base = move |t: Jet| -> Vec<Jet> {
            if t.value() <= 0.5 {
                lobe.eval(t * (2.0 * len))
            } else {
                second(lobe.eval((t - 0.5) * (2.0 * len)))
            }
        };
        let detour = (rho + delta / 4.0) / 2.0;
        let reach = delta / 4.0;
        let name = match (symmetry, reroute) {
            (HalfSymmetry::Mirror, false) => "composite",
            (HalfSymmetry::Mirror, true) => "composite-rerouted",
            (HalfSymmetry::PointReflection, false) => "composite-point-symmetric",
            (HalfSymmetry::PointReflection, true) => "composite-point-symmetric-rerouted",
        };
        let path = if reroute {
            BasePath::new(name, chart, true, move |t: Jet| {
                let tag = Jet::fresh_tag(&[t]);
                let tt = t.with_infinitesimal(tag, Jet::one());
                let full = base(tt);
                let p: Vec<Jet> = full.iter().map(|c| c.standard_part(tag)).collect();
                let v: Vec<Jet> = full.iter().map(|c| c.infinitesimal_part(tag)).collect();
                let speed = (v[0] * v[0] + v[1] * v[1]).sqrt();
                let dist = (p[0] * p[0] + p[1] * p[1]).sqrt();
                // offset along the right-hand normal, full size inside the detour radius
                let b = smooth_step((Jet::constant(reach) - dist) / (reach - detour), 1.0) * detour;
                vec![p[0] + b * v[1] / speed, p[1] - b * v[0] / speed]
            })
        } else {
            BasePath::new(name, chart, true, base)
        };
        Ok(CompositePath {
            delta,
            rho,
            arc_radius: lobe.ra,
            fillet: lobe.f,
            symmetry,
            path,
        })
    }

    /// Parameter interval of the outer arc within the first lobe.
    pub fn first_arc_interval(&self) -> (f64, f64) {
        let lobe = Lobe::new(self.delta);
        let p = lobe.pieces();
        let total = 2.0 * lobe.length();
        ((p[0] + p[1]) / total, (p[0] + p[1] + p[2]) / total)
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}
