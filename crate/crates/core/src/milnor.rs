//! Milnor-fibration checks for `f = z₁z̄₂` and
//! `g = z₁z̄₂ + z₁z₃ + z̄₂z₃`, with complex coordinates as real pairs.

use std::ops::{Add, Mul};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{constants, Jet};
use crate::linalg::{determinant, norm, normalized_gram_determinant};

/// A complex number with jet components.
#[derive(Clone, Copy, Debug)]
pub struct Cx {
    pub re: Jet,
    pub im: Jet,
}

impl Cx {
    pub fn new(re: Jet, im: Jet) -> Self {
        Cx { re, im }
    }

    pub fn conj(self) -> Self {
        Cx::new(self.re, -self.im)
    }

}

impl Mul for Cx {
    type Output = Cx;
    fn mul(self, o: Cx) -> Cx {
        Cx::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}

impl Add for Cx {
    type Output = Cx;
    fn add(self, o: Cx) -> Cx {
        Cx::new(self.re + o.re, self.im + o.im)
    }
}

/// Complex coordinates from interleaved real ones `(x₁, y₁, x₂, y₂, …)`.
pub fn complex_coords(x: &[Jet]) -> Vec<Cx> {
    x.chunks(2).map(|c| Cx::new(c[0], c[1])).collect()
}

pub fn f_poly(x: &[Jet]) -> Cx {
    let z = complex_coords(x);
    z[0] * z[1].conj()
}

pub fn g_poly(x: &[Jet]) -> Cx {
    let z = complex_coords(x);
    z[0] * z[1].conj() + z[0] * z[2] + z[1].conj() * z[2]
}

/// `e(z₁, z₂, z₃) = (z₁, z̄₂, z₃)`.
pub fn conj_second(x: &[Jet]) -> Vec<Jet> {
    vec![x[0], x[1], x[2], -x[3], x[4], x[5]]
}

pub fn g_after_e(x: &[Jet]) -> Cx {
    g_poly(&conj_second(x))
}

/// `max_k |∂h/∂z̄_k|` at `x`, with `∂/∂z̄ = ½(∂x + i∂y)`.
pub fn dbar_residual(h: &dyn Fn(&[Jet]) -> Cx, x: &[f64]) -> f64 {
    let xj = constants(x);
    let mut worst: f64 = 0.0;
    for k in 0..x.len() / 2 {
        let ux = Jet::partial(&xj, 2 * k, |y| h(y).re).value();
        let uy = Jet::partial(&xj, 2 * k + 1, |y| h(y).re).value();
        let vx = Jet::partial(&xj, 2 * k, |y| h(y).im).value();
        let vy = Jet::partial(&xj, 2 * k + 1, |y| h(y).im).value();
        worst = worst.max((0.5 * (ux - vy)).hypot(0.5 * (vx + uy)));
    }
    worst
}

/// Complex Hessian `∂²h/∂z_j∂z_k` of a holomorphic `h` at `x`, as real and
/// imaginary parts.
pub fn holomorphic_hessian(h: &dyn Fn(&[Jet]) -> Cx, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = x.len() / 2;
    let xj = constants(x);
    let mut re = vec![vec![0.0; n]; n];
    let mut im = vec![vec![0.0; n]; n];
    for j in 0..n {
        for k in 0..n {
            let second = |part: fn(Cx) -> Jet| {
                Jet::partial(&xj, 2 * j, |y| Jet::partial(y, 2 * k, |w| part(h(w)))).value()
            };
            re[j][k] = second(|c| c.re);
            im[j][k] = second(|c| c.im);
        }
    }
    (re, im)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MilnorData {
    /// Sphere radius for the `g` checks.
    pub sphere_radius: f64,
    /// Tube radius `|f| = δ` for the `f` checks.
    pub tube_radius: f64,
    /// Samples with `|g| ≤ link_margin · ε²` count as near the link.
    pub link_margin: f64,
}

impl Default for MilnorData {
    fn default() -> Self {
        MilnorData {
            sphere_radius: 1.0,
            tube_radius: 0.05,
            link_margin: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MilnorReport {
    pub dbar_g_after_e: f64,
    /// Nonzero: `g` itself is not holomorphic.
    pub dbar_g: f64,
    pub hessian: Vec<Vec<f64>>,
    pub hessian_imag_max: f64,
    pub hessian_det: f64,
    /// Smallest tangential gradient of `arg g` on the sphere samples.
    pub min_phase_gradient: f64,
    pub sphere_samples: usize,
    pub excluded_near_link: usize,
    /// `g(z₁, z₂, 0) = z₁z̄₂` held bitwise on every sample.
    pub restriction_exact: bool,
    /// Smallest normalized Gram determinant of `∇Re f, ∇Im f, ∇|p|²` on
    /// tube points of the sphere.
    pub min_tube_transversality: f64,
    pub tube_samples: usize,
}

impl MilnorReport {
    pub fn passed(&self, dbar_tol: f64, rank_tol: f64) -> bool {
        self.dbar_g_after_e <= dbar_tol
            && self.dbar_g > dbar_tol
            && (self.hessian_det - 2.0).abs() < 1e-12
            && self.hessian_imag_max < 1e-12
            && self.min_phase_gradient > rank_tol
            && self.restriction_exact
            && self.min_tube_transversality > rank_tol
    }
}

fn sphere_point(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    loop {
        let v: Vec<f64> = (0..dim).map(|_| normal.sample(rng)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.iter().map(|c| c * radius / n).collect();
        }
    }
}

pub fn milnor_checks(md: &MilnorData, samples: usize, seed: u64) -> Result<MilnorReport> {
    if samples == 0 {
        return Err(Error::EmptySampleSet);
    }
    let eps = md.sphere_radius;
    let delta = md.tube_radius;
    if !(eps > 0.0 && delta > 0.0 && 2.0 * delta < eps * eps) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < 2δ < ε² (ε = {eps}, δ = {delta})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dbar_ge: f64 = 0.0;
    let mut dbar_g: f64 = 0.0;
    let mut min_grad = f64::INFINITY;
    let mut used = 0;
    let mut excluded = 0;
    let mut restriction_exact = true;
    while used < samples {
        let p = sphere_point(&mut rng, 6, eps);
        let pj = constants(&p);
        dbar_ge = dbar_ge.max(dbar_residual(&g_after_e, &p));
        dbar_g = dbar_g.max(dbar_residual(&g_poly, &p));
        let mut q = pj.clone();
        q[4] = Jet::zero();
        q[5] = Jet::zero();
        let (gq, fq) = (g_poly(&q), f_poly(&q[..4]));
        restriction_exact &= gq.re.value() == fq.re.value() && gq.im.value() == fq.im.value();
        let g = g_poly(&pj);
        if g.re.value().hypot(g.im.value()) <= md.link_margin * eps * eps {
            excluded += 1;
            if excluded > 50 * samples {
                return Err(Error::EmptySampleSet);
            }
            continue;
        }
        let grad: Vec<f64> = (0..6)
            .map(|i| {
                Jet::partial(&pj, i, |y| {
                    let g = g_poly(y);
                    g.im.atan2(g.re)
                })
                .value()
            })
            .collect();
        let radial: f64 = grad.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>() / (eps * eps);
        let tangential: Vec<f64> = grad.iter().zip(&p).map(|(a, b)| a - radial * b).collect();
        min_grad = min_grad.min(norm(&tangential) * eps);
        used += 1;
    }

    let (hre, him) = holomorphic_hessian(&g_after_e, &[0.0; 6]);
    let hessian_imag_max = him.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    let hessian_det = determinant(&hre);

    // tube points on the sphere: |z₁| = a, |z₂| = b, a² + b² = ε², ab = δ
    let s = (eps.powi(4) - 4.0 * delta * delta).sqrt();
    let a = ((eps * eps + s) / 2.0).sqrt();
    let b = delta / a;
    let angle = Uniform::new(0.0, std::f64::consts::TAU);
    let mut min_tr = f64::INFINITY;
    let tube_samples = samples.min(1000);
    for k in 0..tube_samples {
        let (ra, rb) = if k % 2 == 0 { (a, b) } else { (b, a) };
        let (t1, t2) = (angle.sample(&mut rng), angle.sample(&mut rng));
        let p = [ra * t1.cos(), ra * t1.sin(), rb * t2.cos(), rb * t2.sin()];
        let pj = constants(&p);
        let gre: Vec<f64> = (0..4).map(|i| Jet::partial(&pj, i, |y| f_poly(y).re).value()).collect();
        let gim: Vec<f64> = (0..4).map(|i| Jet::partial(&pj, i, |y| f_poly(y).im).value()).collect();
        let gs: Vec<f64> = p.iter().map(|c| 2.0 * c).collect();
        min_tr = min_tr.min(normalized_gram_determinant(&[gre, gim, gs]));
    }

    Ok(MilnorReport {
        dbar_g_after_e: dbar_ge,
        dbar_g,
        hessian: hre,
        hessian_imag_max,
        hessian_det,
        min_phase_gradient: min_grad,
        sphere_samples: used,
        excluded_near_link: excluded,
        restriction_exact,
        min_tube_transversality: min_tr,
        tube_samples,
    })
}
