//! Thin dense-algebra layer over `faer`: log-determinants with an explicit
//! phase, Hermitian and general eigendecompositions, and a Padé-13
//! scaling-and-squaring matrix exponential.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{c64, Mat, MatRef, Side};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type CMat = Mat<c64>;

#[inline]
pub fn cis(x: f64) -> c64 {
    let (s, c) = x.sin_cos();
    c64::new(c, s)
}

#[inline]
pub fn czero() -> c64 {
    c64::new(0.0, 0.0)
}

/// Wraps an angle into (-π, π].
pub fn wrap_phase(mut x: f64) -> f64 {
    x %= 2.0 * PI;
    if x <= -PI {
        x += 2.0 * PI;
    } else if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// `log det` split into modulus and phase; `ln_abs` is `-inf` for singular input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    pub ln_abs: f64,
    pub phase: f64,
}

impl LogDet {
    pub fn as_complex(&self) -> c64 {
        c64::new(self.ln_abs, self.phase)
    }

    pub fn exp(&self) -> c64 {
        cis(self.phase) * self.ln_abs.exp()
    }
}

fn permutation_is_odd(fwd: &[usize]) -> bool {
    let mut seen = vec![false; fwd.len()];
    let mut transpositions = 0usize;
    for start in 0..fwd.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0usize;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = fwd[j];
            len += 1;
        }
        transpositions += len - 1;
    }
    transpositions % 2 == 1
}

/// Log-determinant via partial-pivoting LU.
pub fn log_det(a: MatRef<'_, c64>) -> LogDet {
    assert_eq!(a.nrows(), a.ncols(), "log_det needs a square matrix");
    if a.nrows() == 0 {
        return LogDet { ln_abs: 0.0, phase: 0.0 };
    }
    let lu = a.partial_piv_lu();
    let u = lu.U();
    let mut ln_abs = 0.0;
    let mut phase = 0.0;
    for i in 0..u.nrows() {
        let d = u[(i, i)];
        let r = d.norm();
        if r == 0.0 {
            return LogDet { ln_abs: f64::NEG_INFINITY, phase: 0.0 };
        }
        ln_abs += r.ln();
        phase += d.arg();
    }
    let fwd: Vec<usize> = lu.P().arrays().0.to_vec();
    if permutation_is_odd(&fwd) {
        phase += PI;
    }
    LogDet { ln_abs, phase: wrap_phase(phase) }
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { c64::new(1.0, 0.0) } else { czero() })
}

pub fn adjoint(a: MatRef<'_, c64>) -> CMat {
    a.adjoint().to_owned()
}

pub fn fro_norm(a: MatRef<'_, c64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn one_norm(a: MatRef<'_, c64>) -> f64 {
    (0..a.ncols()).map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_defect(a: MatRef<'_, c64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Ascending eigenvalues and column eigenvectors of a Hermitian matrix.
pub fn herm_eigen(a: MatRef<'_, c64>) -> Result<(Vec<f64>, CMat)> {
    let evd = a.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Linalg(format!("hermitian eigensolver: {e:?}")))?;
    let vals = (0..a.nrows()).map(|i| evd.S()[i].re).collect();
    Ok((vals, evd.U().to_owned()))
}

pub fn herm_eigenvalues(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    a.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Linalg(format!("hermitian eigensolver: {e:?}")))
}

/// Eigenvalues and right eigenvectors of a general complex matrix.
pub fn eigen(a: MatRef<'_, c64>) -> Result<(Vec<c64>, CMat)> {
    let evd = a.eigen().map_err(|e| Error::Linalg(format!("eigensolver: {e:?}")))?;
    let vals = (0..a.nrows()).map(|i| evd.S()[i]).collect();
    Ok((vals, evd.U().to_owned()))
}

pub fn inverse(a: MatRef<'_, c64>) -> CMat {
    a.partial_piv_lu().inverse()
}

/// Solves `a x = b`.
pub fn solve(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    a.partial_piv_lu().solve(b)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn lin3(a: &CMat, ca: f64, b: &CMat, cb: f64, c: &CMat, cc: f64) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * ca + b[(i, j)] * cb + c[(i, j)] * cc)
}

/// Matrix exponential by Padé-13 scaling and squaring.
pub fn expm(a: MatRef<'_, c64>) -> CMat {
    let n = a.nrows();
    let norm = one_norm(a);
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil().max(0.0) as i32 } else { 0 };
    let scale = 0.5f64.powi(s);
    let a: CMat = Mat::from_fn(n, n, |i, j| a[(i, j)] * scale);
    let id = identity(n);
    let b = &PADE13;
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let inner_u = lin3(&a6, b[13], &a4, b[11], &a2, b[9]);
    let tail_u = lin3(&a6, b[7], &a4, b[5], &a2, b[3]);
    let w = &a6 * &inner_u;
    let w = Mat::from_fn(n, n, |i, j| w[(i, j)] + tail_u[(i, j)] + id[(i, j)] * b[1]);
    let u = &a * &w;

    let inner_v = lin3(&a6, b[12], &a4, b[10], &a2, b[8]);
    let tail_v = lin3(&a6, b[6], &a4, b[4], &a2, b[2]);
    let z = &a6 * &inner_v;
    let v = Mat::from_fn(n, n, |i, j| z[(i, j)] + tail_v[(i, j)] + id[(i, j)] * b[0]);

    let p = Mat::from_fn(n, n, |i, j| v[(i, j)] + u[(i, j)]);
    let q = Mat::from_fn(n, n, |i, j| v[(i, j)] - u[(i, j)]);
    let mut r = solve(q.as_ref(), p.as_ref());
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_det_matches_known_determinant() {
        let a = Mat::from_fn(3, 3, |i, j| {
            c64::new((i * 3 + j) as f64 + if i == j { 2.0 } else { 0.0 }, (i as f64) - (j as f64))
        });
        let d = a.as_ref().determinant();
        let ld = log_det(a.as_ref());
        assert!((ld.exp() - d).norm() < 1e-10 * d.norm());
    }

    #[test]
    fn permutation_parity() {
        assert!(!permutation_is_odd(&[0, 1, 2]));
        assert!(permutation_is_odd(&[1, 0, 2]));
        assert!(!permutation_is_odd(&[1, 2, 0]));
    }

    #[test]
    fn expm_of_diagonal_and_rotation() {
        let d = Mat::from_fn(2, 2, |i, j| if i == j { c64::new(i as f64 + 0.5, 1.0) } else { czero() });
        let e = expm(d.as_ref());
        assert!((e[(0, 0)] - c64::new(0.5, 1.0).exp()).norm() < 1e-13);
        assert!((e[(1, 1)] - c64::new(1.5, 1.0).exp()).norm() < 1e-12);
        // large-norm generator exercises the squaring phase
        let t = 40.0;
        let r = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => c64::new(-t, 0.0),
            (1, 0) => c64::new(t, 0.0),
            _ => czero(),
        });
        let e = expm(r.as_ref());
        assert!((e[(0, 0)].re - t.cos()).abs() < 1e-10);
        assert!((e[(1, 0)].re - t.sin()).abs() < 1e-10);
    }

    #[test]
    fn herm_eigen_reconstructs() {
        let a = Mat::from_fn(4, 4, |i, j| {
            let x = c64::new((i + j) as f64, i as f64 - j as f64);
            if i == j {
                c64::new(x.re + 1.0, 0.0)
            } else {
                x
            }
        });
        let (w, v) = herm_eigen(a.as_ref()).unwrap();
        for k in 0..4 {
            let col = v.col(k);
            for i in 0..4 {
                let lhs: c64 = (0..4).map(|j| a[(i, j)] * col[j]).sum();
                assert!((lhs - col[i] * w[k]).norm() < 1e-12);
            }
        }
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
    }
}
