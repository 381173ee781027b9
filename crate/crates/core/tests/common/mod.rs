//! Test-only oracles, independent of the library's code paths.

#![allow(dead_code)]

use nalgebra::DMatrix;

/// Cyclic Jacobi rotations; eigenvalues ascending.
pub fn jacobi_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Real root of `c^3 + c^2 + c - 1 = 0` by Cardano's formula.
///
/// Substituting `c = t - 1/3` gives `t^3 + p t + q = 0` with `p = 2/3`,
/// `q = -34/27`; the discriminant is positive so there is one real root.
pub fn cubic_boundary_root() -> f64 {
    let p: f64 = 2.0 / 3.0;
    let q: f64 = -34.0 / 27.0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let t = (-q / 2.0 + disc.sqrt()).cbrt() + (-q / 2.0 - disc.sqrt()).cbrt();
    t - 1.0 / 3.0
}

/// Every ordered triple of distinct indices with
/// `d[i][j] > d[i][k] + d[k][j] + tol`, as `(min(i, j), max(i, j), k)`.
pub fn brute_force_violations(d: &DMatrix<f64>, tol: f64) -> Vec<(usize, usize, usize, f64)> {
    let n = d.nrows();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i == j || j == k || i == k {
                    continue;
                }
                let margin = d[(i, j)] - d[(i, k)] - d[(k, j)];
                if margin > tol && i < j {
                    out.push((i, j, k, margin));
                }
            }
        }
    }
    out
}

/// `R(theta)` written out from its closed form.
pub fn counterexample_matrix(theta: f64) -> DMatrix<f64> {
    let c = theta.cos();
    let c4 = c * c * c * c;
    DMatrix::from_row_slice(3, 3, &[1.0, c4, c, c4, 1.0, c, c, c, 1.0])
}
