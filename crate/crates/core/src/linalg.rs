//! Small dense linear algebra on row-major `Vec<f64>` storage.

use crate::error::{Error, Result};

/// Determinant by LU with partial pivoting.
pub fn determinant(m: &[f64], n: usize) -> f64 {
    let (sign, log_abs) = log_abs_determinant(m, n);
    sign * log_abs.exp()
}

/// (sign, log|det|) by LU with partial pivoting; sign is 0 for singular input.
pub fn log_abs_determinant(m: &[f64], n: usize) -> (f64, f64) {
    assert_eq!(m.len(), n * n);
    let mut a = m.to_vec();
    let mut sign = 1.0;
    let mut log_abs = 0.0;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
            .unwrap();
        let piv = a[p * n + k];
        if piv == 0.0 {
            return (0.0, f64::NEG_INFINITY);
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            sign = -sign;
        }
        if piv < 0.0 {
            sign = -sign;
        }
        log_abs += piv.abs().ln();
        for i in k + 1..n {
            let f = a[i * n + k] / piv;
            if f != 0.0 {
                for j in k + 1..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
    }
    (sign, log_abs)
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Descending.
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector of `values[k]`.
    pub vectors: Option<Vec<Vec<f64>>>,
    pub sweeps: usize,
}

const JACOBI_MAX_SWEEPS: usize = 50;
const JACOBI_OFF_TOL: f64 = 1e-14;

/// Cyclic Jacobi with a fixed (p, q) sweep order.
pub fn jacobi_eigen(m: &[f64], n: usize, want_vectors: bool) -> Result<SymmetricEigen> {
    assert_eq!(m.len(), n * n);
    let mut a = m.to_vec();
    let mut v = if want_vectors {
        let mut id = vec![0.0; n * n];
        for i in 0..n {
            id[i * n + i] = 1.0;
        }
        Some(id)
    } else {
        None
    };
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let skip = 1e-22 * frob.max(f64::MIN_POSITIVE);
    let mut sweeps = 0;
    loop {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_OFF_TOL * frob.max(1.0) || n < 2 {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence("Jacobi eigensolver"));
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= skip {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, n, p, q, c, s);
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                if let Some(v) = v.as_mut() {
                    // columns p, q of V, stored transposed as rows for locality
                    let (rp, rq) = (p * n, q * n);
                    for k in 0..n {
                        let vp = v[rp + k];
                        let vq = v[rq + k];
                        v[rp + k] = c * vp - s * vq;
                        v[rq + k] = s * vp + c * vq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = v.map(|v| order.iter().map(|&i| v[i * n..(i + 1) * n].to_vec()).collect());
    Ok(SymmetricEigen { values, vectors, sweeps })
}

/// Apply the two-sided rotation to rows/columns p, q (diagonal and (p,q) handled by caller).
fn rotate(a: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        let nkp = c * akp - s * akq;
        let nkq = s * akp + c * akq;
        a[k * n + p] = nkp;
        a[p * n + k] = nkp;
        a[k * n + q] = nkq;
        a[q * n + k] = nkq;
    }
}

/// Squared singular values of a rows×cols matrix by one-sided (Hestenes) Jacobi.
///
/// Orthogonalizes columns; the squared column norms at convergence are the
/// eigenvalues of AᵀA (and the nonzero ones of AAᵀ), each to high relative accuracy.
pub fn gram_eigenvalues(m: &[f64], rows: usize, cols: usize) -> Result<Vec<f64>> {
    assert_eq!(m.len(), rows * cols);
    // column-major copy
    let mut c: Vec<Vec<f64>> = (0..cols).map(|j| (0..rows).map(|i| m[i * cols + j]).collect()).collect();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let mut converged = false;
    for _ in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = dot(&c[p], &c[p]);
                let beta = dot(&c[q], &c[q]);
                let gamma = dot(&c[p], &c[q]);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                let (lo, hi) = c.split_at_mut(q);
                let (cp, cq) = (&mut lo[p], &mut hi[0]);
                for k in 0..rows {
                    let xp = cp[k];
                    let xq = cq[k];
                    cp[k] = cs * xp - sn * xq;
                    cq[k] = sn * xp + cs * xq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence("one-sided Jacobi"));
    }
    let mut vals: Vec<f64> = c.iter().map(|col| dot(col, col)).collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    Ok(vals)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hilbert(n: usize) -> Vec<f64> {
        (0..n * n).map(|k| 1.0 / ((k / n + k % n + 1) as f64)).collect()
    }

    #[test]
    fn determinant_small() {
        assert!((determinant(&[2.0, 1.0, 1.0, 3.0], 2) - 5.0).abs() < 1e-15);
        assert_eq!(determinant(&[1.0, 2.0, 2.0, 4.0], 2), 0.0);
        assert!((determinant(&[0.0, 1.0, 1.0, 0.0], 2) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn jacobi_reconstructs() {
        let n = 12;
        let a = hilbert(n);
        let e = jacobi_eigen(&a, n, true).unwrap();
        let v = e.vectors.as_ref().unwrap();
        for i in 0..n {
            for j in 0..n {
                let r: f64 = (0..n).map(|k| e.values[k] * v[k][i] * v[k][j]).sum();
                assert!((r - a[i * n + j]).abs() < 1e-13);
            }
        }
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
        assert!((e.values.iter().sum::<f64>() - trace).abs() < 1e-13);
    }

    #[test]
    fn gram_route_has_relative_accuracy() {
        // diag(1, 1e-10, 1e-20) · orthogonal, as a factor G with GGᵀ having those squares
        let s = [1.0f64, 1e-5, 1e-10];
        let (c, sn) = (0.6f64, 0.8f64);
        let g = vec![c * s[0], -sn * s[1], 0.0, sn * s[0], c * s[1], 0.0, 0.0, 0.0, s[2]];
        let vals = gram_eigenvalues(&g, 3, 3).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-15);
        assert!((vals[1] / 1e-10 - 1.0).abs() < 1e-12);
        assert!((vals[2] / 1e-20 - 1.0).abs() < 1e-12);
    }
}
