//! Dense and sparse numerical kernels backing the master-equation solvers.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};
use crate::operator::{SparseComplexMatrix, C64, ZERO};

/// Solves `A x = b` with a sparse LU factorisation (partial pivoting).
///
/// Returns the solution together with a crude condition estimate
/// `‖A‖₁ ‖x‖₁ / ‖b‖₁`, which is a lower bound on the true 1-norm condition
/// number and is what gets reported when the solve fails.
pub(crate) fn sparse_solve(a: &SparseComplexMatrix, b: &[C64]) -> Result<(Vec<C64>, f64)> {
    let n = a.rows();
    let triplets: Vec<Triplet<usize, usize, C64>> =
        a.iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
    let mat = SparseColMat::<usize, C64>::try_new_from_triplets(n, a.cols(), &triplets)
        .map_err(|e| Error::Numerical(format!("sparse assembly failed: {e:?}")))?;
    let lu = mat.sp_lu().map_err(|_| Error::SingularSystem {
        condition_estimate: f64::INFINITY,
        residual: f64::NAN,
    })?;
    let rhs = Mat::<C64>::from_fn(n, 1, |i, _| b[i]);
    let x = lu.solve(&rhs);
    let x: Vec<C64> = (0..n).map(|i| x[(i, 0)]).collect();

    let x_norm: f64 = x.iter().map(|v| v.norm()).sum();
    let b_norm: f64 = b.iter().map(|v| v.norm()).sum();
    let cond = a.norm_1() * x_norm / b_norm.max(f64::MIN_POSITIVE);
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::SingularSystem {
            condition_estimate: f64::INFINITY,
            residual: f64::NAN,
        });
    }
    Ok((x, cond))
}

pub(crate) fn dense_one_norm(a: &Mat<C64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaled(a: &Mat<C64>, s: f64) -> Mat<C64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

fn lincomb(terms: &[(f64, &Mat<C64>)], identity_coef: f64, n: usize) -> Mat<C64> {
    Mat::from_fn(n, n, |i, j| {
        let mut v = if i == j { C64::new(identity_coef, 0.0) } else { ZERO };
        for (c, m) in terms {
            v += m[(i, j)] * *c;
        }
        v
    })
}

/// Matrix exponential by degree-13 Padé approximation with scaling and
/// squaring (Higham 2005).
pub(crate) fn expm(a: &Mat<C64>) -> Result<Mat<C64>> {
    const B: [f64; 14] = [
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
    const THETA_13: f64 = 5.371920351148152;

    let n = a.nrows();
    let norm = dense_one_norm(a);
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let a = scaled(a, 0.5f64.powi(squarings));
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let inner_u = lincomb(&[(B[13], &a6), (B[11], &a4), (B[9], &a2)], 0.0, n);
    let outer_u = lincomb(&[(B[7], &a6), (B[5], &a4), (B[3], &a2)], B[1], n);
    let u = &a * &(&(&a6 * &inner_u) + &outer_u);

    let inner_v = lincomb(&[(B[12], &a6), (B[10], &a4), (B[8], &a2)], 0.0, n);
    let outer_v = lincomb(&[(B[6], &a6), (B[4], &a4), (B[2], &a2)], B[0], n);
    let v = &(&a6 * &inner_v) + &outer_v;

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..squarings {
        r = &r * &r;
    }
    if (0..n).any(|j| (0..n).any(|i| !r[(i, j)].re.is_finite() || !r[(i, j)].im.is_finite())) {
        return Err(Error::Numerical("matrix exponential overflowed".into()));
    }
    Ok(r)
}

/// `exp(t·A) v` by a truncated Taylor series over substeps with `‖A h‖₁ ≤ 1`.
///
/// Returns the number of sparse products performed.
pub(crate) fn expmv(a: &SparseComplexMatrix, t: f64, v: &mut [C64], norm_1: f64) -> Result<usize> {
    if t == 0.0 {
        return Ok(0);
    }
    let substeps = (norm_1 * t.abs()).ceil().max(1.0) as usize;
    let h = t / substeps as f64;
    let n = v.len();
    let mut term = vec![ZERO; n];
    let mut next = vec![ZERO; n];
    let mut products = 0usize;
    for step in 0..substeps {
        term.copy_from_slice(v);
        let mut small_in_a_row = 0;
        for k in 1..=60 {
            a.matvec(&term, &mut next);
            products += 1;
            let f = h / k as f64;
            let mut term_max: f64 = 0.0;
            let mut v_max: f64 = 0.0;
            for i in 0..n {
                term[i] = next[i] * f;
                v[i] += term[i];
                term_max = term_max.max(term[i].norm());
                v_max = v_max.max(v[i].norm());
            }
            if !v_max.is_finite() {
                return Err(Error::Integrator {
                    tau: h * step as f64,
                    steps: step,
                    message: "non-finite state".into(),
                });
            }
            if term_max <= 1e-17 * v_max {
                small_in_a_row += 1;
                if small_in_a_row == 2 {
                    break;
                }
            } else {
                small_in_a_row = 0;
            }
            if k == 60 {
                return Err(Error::Integrator {
                    tau: h * step as f64,
                    steps: step,
                    message: "Taylor series failed to converge".into(),
                });
            }
        }
    }
    Ok(products)
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub(crate) fn hermitian_eigenvalues(m: &Mat<C64>) -> Result<Vec<f64>> {
    let h = Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let mut ev = h
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))?;
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::ONE;

    #[test]
    fn expm_of_diagonal_and_nilpotent() {
        let mut a = Mat::<C64>::zeros(2, 2);
        a[(0, 0)] = C64::new(-1.0, 3.0);
        a[(1, 1)] = C64::new(0.5, 0.0);
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)] - C64::new(-1.0, 3.0).exp()).norm() < 1e-14);
        assert!((e[(1, 1)] - C64::new(0.5f64.exp(), 0.0)).norm() < 1e-14);

        let mut n = Mat::<C64>::zeros(2, 2);
        n[(0, 1)] = C64::new(40.0, 0.0);
        let e = expm(&n).unwrap();
        assert!((e[(0, 1)] - C64::new(40.0, 0.0)).norm() < 1e-12);
        assert!((e[(0, 0)] - ONE).norm() < 1e-14);
    }

    #[test]
    fn expm_rotation_with_large_norm() {
        // exp(θ [[0, -1], [1, 0]]) is a rotation; θ = 50 forces squarings.
        let theta = 50.0;
        let mut a = Mat::<C64>::zeros(2, 2);
        a[(0, 1)] = C64::new(-theta, 0.0);
        a[(1, 0)] = C64::new(theta, 0.0);
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)].re - theta.cos()).abs() < 1e-11);
        assert!((e[(1, 0)].re - theta.sin()).abs() < 1e-11);
    }

    #[test]
    fn expmv_agrees_with_expm() {
        let entries = [
            (0, 0, C64::new(-1.0, 2.0)),
            (0, 1, C64::new(0.3, 0.0)),
            (1, 2, C64::new(0.0, -4.0)),
            (2, 0, C64::new(1.5, 0.5)),
            (2, 2, C64::new(-0.2, -7.0)),
        ];
        let a = SparseComplexMatrix::from_triplets(3, 3, entries);
        let t = 2.7;
        let e = expm(&Mat::from_fn(3, 3, |i, j| a.get(i, j) * t)).unwrap();
        let mut v = vec![ONE, C64::new(0.0, 1.0), C64::new(-2.0, 0.0)];
        let v0 = v.clone();
        expmv(&a, t, &mut v, a.norm_1()).unwrap();
        for i in 0..3 {
            let r: C64 = (0..3).map(|j| e[(i, j)] * v0[j]).sum();
            assert!((r - v[i]).norm() < 1e-11, "{r} vs {}", v[i]);
        }
    }
}
