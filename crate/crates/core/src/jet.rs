//! Forward-mode differentiation with tagged nilpotent infinitesimals.
//!
//! A [`Jet`] is a truncated polynomial in commuting infinitesimals
//! `ε_0 … ε_{MAX_TAGS-1}` with `ε_k² = 0`. Coefficients are indexed by the
//! bitmask of the infinitesimals in the monomial. Each nested derivative
//! takes a fresh tag, so derivatives of derivatives compose without any
//! bookkeeping in the calling code: an evaluator written once against
//! `&[Jet]` can be differentiated any number of times up to `MAX_TAGS`.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Maximum nesting depth of derivatives.
pub const MAX_TAGS: usize = 5;
const WIDTH: usize = 1 << MAX_TAGS;

#[derive(Clone, Copy)]
pub struct Jet {
    c: [f64; WIDTH],
    /// Number of active tags; every coefficient with mask `>= 1 << tags` is zero.
    tags: u8,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = 1usize << self.tags;
        f.debug_struct("Jet")
            .field("tags", &self.tags)
            .field("coeffs", &&self.c[..w])
            .finish()
    }
}

impl Default for Jet {
    fn default() -> Self {
        Jet::constant(0.0)
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        let w = 1usize << self.tags.max(other.tags);
        self.c[..w] == other.c[..w]
    }
}

impl From<f64> for Jet {
    fn from(v: f64) -> Self {
        Jet::constant(v)
    }
}

impl Jet {
    pub const fn constant(v: f64) -> Self {
        let mut c = [0.0; WIDTH];
        c[0] = v;
        Jet { c, tags: 0 }
    }

    pub fn zero() -> Self {
        Jet::constant(0.0)
    }

    pub fn one() -> Self {
        Jet::constant(1.0)
    }

    /// Real part.
    #[inline]
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn tags(&self) -> usize {
        self.tags as usize
    }

    /// Coefficient of the monomial given by `mask`.
    pub fn coeff(&self, mask: usize) -> f64 {
        if mask < WIDTH {
            self.c[mask]
        } else {
            0.0
        }
    }

    fn width(&self) -> usize {
        1 << self.tags
    }

    /// Smallest tag not used by any of `xs`.
    pub fn fresh_tag(xs: &[Jet]) -> usize {
        let t = xs.iter().map(|x| x.tags as usize).max().unwrap_or(0);
        assert!(
            t < MAX_TAGS,
            "derivative nesting deeper than {MAX_TAGS} levels"
        );
        t
    }

    /// `self + coeff · ε_tag`, where `coeff` must not use `tag` or higher.
    pub fn with_infinitesimal(mut self, tag: usize, coeff: Jet) -> Jet {
        debug_assert!(coeff.tags as usize <= tag && self.tags as usize <= tag);
        let bit = 1usize << tag;
        for m in 0..coeff.width() {
            self.c[m | bit] += coeff.c[m];
        }
        self.tags = (tag + 1) as u8;
        self
    }

    /// Removes the `ε_tag` part of `self` and returns its coefficient.
    pub fn infinitesimal_part(&self, tag: usize) -> Jet {
        let mut out = Jet::zero();
        if (self.tags as usize) <= tag {
            return out;
        }
        let bit = 1usize << tag;
        for m in 0..bit {
            out.c[m] = self.c[m | bit];
        }
        out.tags = tag as u8;
        out.trim()
    }

    /// Drops `ε_tag` terms, keeping the part independent of `tag`.
    pub fn standard_part(&self, tag: usize) -> Jet {
        let mut out = *self;
        if (self.tags as usize) <= tag {
            return out;
        }
        let bit = 1usize << tag;
        for m in bit..(1usize << self.tags) {
            out.c[m] = 0.0;
        }
        out.tags = tag as u8;
        out.trim()
    }

    fn trim(mut self) -> Jet {
        while self.tags > 0 {
            let lo = 1usize << (self.tags - 1);
            let hi = 1usize << self.tags;
            if self.c[lo..hi].iter().all(|&v| v == 0.0) {
                self.tags -= 1;
            } else {
                break;
            }
        }
        self
    }

    /// Directional derivative of `f` at `x` along `dir`.
    pub fn directional<F>(x: &[Jet], dir: &[Jet], f: F) -> Jet
    where
        F: FnOnce(&[Jet]) -> Jet,
    {
        let tag = Jet::fresh_tag_with(x, dir);
        let seeded: Vec<Jet> = x
            .iter()
            .zip(dir)
            .map(|(xi, di)| xi.with_infinitesimal(tag, *di))
            .collect();
        f(&seeded).infinitesimal_part(tag)
    }

    /// Partial derivative of `f` at `x` with respect to coordinate `i`.
    pub fn partial<F>(x: &[Jet], i: usize, f: F) -> Jet
    where
        F: FnOnce(&[Jet]) -> Jet,
    {
        let tag = Jet::fresh_tag(x);
        let seeded: Vec<Jet> = x
            .iter()
            .enumerate()
            .map(|(k, xk)| {
                if k == i {
                    xk.with_infinitesimal(tag, Jet::one())
                } else {
                    *xk
                }
            })
            .collect();
        f(&seeded).infinitesimal_part(tag)
    }

    /// Directional derivative of a vector-valued map.
    pub fn directional_vec<F>(x: &[Jet], dir: &[Jet], f: F) -> Vec<Jet>
    where
        F: FnOnce(&[Jet]) -> Vec<Jet>,
    {
        let tag = Jet::fresh_tag_with(x, dir);
        let seeded: Vec<Jet> = x
            .iter()
            .zip(dir)
            .map(|(xi, di)| xi.with_infinitesimal(tag, *di))
            .collect();
        f(&seeded)
            .iter()
            .map(|y| y.infinitesimal_part(tag))
            .collect()
    }

    fn fresh_tag_with(x: &[Jet], dir: &[Jet]) -> usize {
        let a = Jet::fresh_tag(x);
        let b = Jet::fresh_tag(dir);
        a.max(b)
    }

    /// Jacobian of a vector-valued map at an `f64` point; `jac[i][j] = ∂f_i/∂x_j`.
    pub fn jacobian<F>(x: &[f64], f: F) -> (Vec<f64>, Vec<Vec<f64>>)
    where
        F: Fn(&[Jet]) -> Vec<Jet>,
    {
        let xj: Vec<Jet> = x.iter().map(|&v| Jet::constant(v)).collect();
        let value: Vec<f64> = f(&xj).iter().map(Jet::value).collect();
        let mut jac = vec![vec![0.0; x.len()]; value.len()];
        for j in 0..x.len() {
            let mut dir = vec![Jet::zero(); x.len()];
            dir[j] = Jet::one();
            let col = Jet::directional_vec(&xj, &dir, &f);
            for (i, c) in col.iter().enumerate() {
                jac[i][j] = c.value();
            }
        }
        (value, jac)
    }

    /// Applies a scalar function given its scaled Taylor coefficients
    /// `t[k] = f^(k)(v) / k!` at the real part `v`.
    fn compose(&self, taylor: &[f64]) -> Jet {
        let mut n = *self;
        n.c[0] = 0.0;
        let k_max = (self.tags as usize).min(taylor.len() - 1);
        let mut out = Jet::constant(taylor[k_max]);
        for k in (0..k_max).rev() {
            out *= n;
            out.c[0] += taylor[k];
        }
        out
    }

    fn order(&self) -> usize {
        self.tags as usize
    }

    pub fn sin(self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cyc = [s, c, -s, -c];
        let t: Vec<f64> = (0..=self.order())
            .map(|k| cyc[k % 4] / factorial(k))
            .collect();
        self.compose(&t)
    }

    pub fn cos(self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cyc = [c, -s, -c, s];
        let t: Vec<f64> = (0..=self.order())
            .map(|k| cyc[k % 4] / factorial(k))
            .collect();
        self.compose(&t)
    }

    pub fn exp(self) -> Jet {
        let e = self.value().exp();
        let t: Vec<f64> = (0..=self.order()).map(|k| e / factorial(k)).collect();
        self.compose(&t)
    }

    pub fn ln(self) -> Jet {
        let v = self.value();
        let mut t = vec![v.ln()];
        for k in 1..=self.order() {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            t.push(sign / (k as f64 * v.powi(k as i32)));
        }
        self.compose(&t)
    }

    pub fn recip(self) -> Jet {
        let v = self.value();
        let t: Vec<f64> = (0..=self.order())
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign / v.powi(k as i32 + 1)
            })
            .collect();
        self.compose(&t)
    }

    /// Real power `self^p` for positive real part.
    pub fn powf(self, p: f64) -> Jet {
        let v = self.value();
        let mut t = Vec::with_capacity(self.order() + 1);
        let mut binom = 1.0;
        for k in 0..=self.order() {
            t.push(binom * v.powf(p - k as f64));
            binom *= (p - k as f64) / (k as f64 + 1.0);
        }
        self.compose(&t)
    }

    pub fn sqrt(self) -> Jet {
        self.powf(0.5)
    }

    pub fn powi(self, n: i32) -> Jet {
        if n < 0 {
            return self.powi(-n).recip();
        }
        let mut out = Jet::one();
        for _ in 0..n {
            out *= self;
        }
        out
    }

    pub fn square(self) -> Jet {
        self * self
    }

    pub fn atan(self) -> Jet {
        let v = self.value();
        // atan(x) = atan(v) + atan(w) with nilpotent w = (x - v) / (1 + x v)
        let mut n = self;
        n.c[0] = 0.0;
        let w = n / (self * v + 1.0);
        let mut out = Jet::constant(v.atan());
        let mut wp = w;
        let w2 = w * w;
        let mut k = 1;
        while k <= self.order() {
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            out += wp * (sign / k as f64);
            wp *= w2;
            k += 2;
        }
        out
    }

    /// Two-argument arctangent; the branch is chosen from the real parts.
    pub fn atan2(self, x: Jet) -> Jet {
        let base = self.value().atan2(x.value());
        // rotate so the real part sits on the positive axis
        let (s, c) = base.sin_cos();
        let xr = x * c + self * s;
        let yr = self * c - x * s;
        (yr / xr).atan() + base
    }

    pub fn abs(self) -> Jet {
        if self.value() < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn tanh(self) -> Jet {
        let e2 = (self * 2.0).exp();
        (e2 - 1.0) / (e2 + 1.0)
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(mut self, rhs: Jet) -> Jet {
        let t = self.tags.max(rhs.tags);
        for m in 0..(1usize << rhs.tags) {
            self.c[m] += rhs.c[m];
        }
        self.tags = t;
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(mut self, rhs: Jet) -> Jet {
        let t = self.tags.max(rhs.tags);
        for m in 0..(1usize << rhs.tags) {
            self.c[m] -= rhs.c[m];
        }
        self.tags = t;
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    #[inline]
    fn neg(mut self) -> Jet {
        for m in 0..self.width() {
            self.c[m] = -self.c[m];
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, rhs: Jet) -> Jet {
        if self.tags == 0 {
            return rhs * self.c[0];
        }
        if rhs.tags == 0 {
            return self * rhs.c[0];
        }
        let t = self.tags.max(rhs.tags);
        let w = 1usize << t;
        let mut out = Jet {
            c: [0.0; WIDTH],
            tags: t,
        };
        for m in 0..w {
            let mut s = 0.0;
            let mut sub = m;
            loop {
                s += self.c[sub] * rhs.c[m ^ sub];
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & m;
            }
            out.c[m] = s;
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    #[inline]
    fn div(self, rhs: Jet) -> Jet {
        if rhs.tags == 0 {
            return self * (1.0 / rhs.c[0]);
        }
        self * rhs.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn sub(mut self, rhs: f64) -> Jet {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn mul(mut self, rhs: f64) -> Jet {
        for m in 0..self.width() {
            self.c[m] *= rhs;
        }
        self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn div(self, rhs: f64) -> Jet {
        self * (1.0 / rhs)
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        rhs + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        -rhs + self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs * self
    }
}

impl Div<Jet> for f64 {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Jet) -> Jet {
        rhs.recip() * self
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = *self - rhs;
    }
}

impl MulAssign for Jet {
    fn mul_assign(&mut self, rhs: Jet) {
        *self = *self * rhs;
    }
}

impl std::iter::Sum for Jet {
    fn sum<I: Iterator<Item = Jet>>(iter: I) -> Jet {
        iter.fold(Jet::zero(), |a, b| a + b)
    }
}

/// Lifts an `f64` slice to constant jets.
pub fn constants(x: &[f64]) -> Vec<Jet> {
    x.iter().map(|&v| Jet::constant(v)).collect()
}

/// Real parts of a jet slice.
pub fn values(x: &[Jet]) -> Vec<f64> {
    x.iter().map(Jet::value).collect()
}
