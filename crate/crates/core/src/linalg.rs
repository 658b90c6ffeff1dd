//! Small dense linear algebra used by the pointwise solvers.

#![allow(clippy::needless_range_loop)]

use crate::jet::Jet;

/// Solves `a · x = b` by LU with partial pivoting. Pivots are chosen on the
/// real parts, so derivative information flows through the solve.
///
/// Returns `None` when a pivot falls below `pivot_tol` times the largest
/// entry of `a`.
pub fn lu_solve(mut a: Vec<Vec<Jet>>, mut b: Vec<Jet>, pivot_tol: f64) -> Option<Vec<Jet>> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|r| r.len() == n));
    let scale = a
        .iter()
        .flat_map(|r| r.iter().map(|v| v.value().abs()))
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let (piv, pmax) = (col..n)
            .map(|r| (r, a[r][col].value().abs()))
            .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pmax <= pivot_tol * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = a[col][col].recip();
        for r in (col + 1)..n {
            let factor = a[r][col] * inv;
            if factor.value() == 0.0 && factor.tags() == 0 {
                continue;
            }
            for c in col..n {
                let v = a[col][c];
                a[r][c] -= factor * v;
            }
            let v = b[col];
            b[r] -= factor * v;
        }
    }
    let mut x = vec![Jet::zero(); n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in (r + 1)..n {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    Some(x)
}

/// `f64` convenience wrapper around [`lu_solve`].
pub fn lu_solve_f64(a: &[Vec<f64>], b: &[f64], pivot_tol: f64) -> Option<Vec<f64>> {
    let aj = a
        .iter()
        .map(|r| r.iter().map(|&v| Jet::constant(v)).collect())
        .collect();
    let bj = b.iter().map(|&v| Jet::constant(v)).collect();
    lu_solve(aj, bj, pivot_tol).map(|x| x.iter().map(Jet::value).collect())
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap_or(col);
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        for r in (col + 1)..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    det
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthonormal basis of the orthogonal complement of `v` (Gram–Schmidt
/// against the coordinate basis).
pub fn orthogonal_complement(v: &[f64]) -> Vec<Vec<f64>> {
    let n = v.len();
    let nv = norm(v);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    if nv > 0.0 {
        basis.push(v.iter().map(|x| x / nv).collect());
    }
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    // Try coordinate vectors in order of least alignment with v.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| v[i].abs().total_cmp(&v[j].abs()));
    for i in order {
        if basis.len() == n {
            break;
        }
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        for b in &basis {
            let p = dot(&e, b);
            for k in 0..n {
                e[k] -= p * b[k];
            }
        }
        let ne = norm(&e);
        if ne > 1e-8 {
            let u: Vec<f64> = e.iter().map(|x| x / ne).collect();
            basis.push(u.clone());
            out.push(u);
        }
    }
    out
}

/// Gram determinant of a set of vectors normalised by the product of their
/// squared lengths; 1 for orthogonal sets, 0 for dependent ones.
pub fn normalized_gram_determinant(vectors: &[Vec<f64>]) -> f64 {
    let k = vectors.len();
    if k == 0 {
        return 1.0;
    }
    let gram: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| dot(&vectors[i], &vectors[j])).collect())
        .collect();
    let scale: f64 = (0..k).map(|i| gram[i][i]).product();
    if scale == 0.0 {
        return 0.0;
    }
    determinant(&gram) / scale
}
