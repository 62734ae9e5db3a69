//! Small dense helpers: polynomial roots through a balanced companion
//! matrix, adjugates, and symmetric-matrix checks.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Parlett–Reinsch balancing by powers of two; similarity-preserving, so
/// eigenvalues are unchanged while their conditioning improves.
fn balance(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    let radix = 2.0f64;
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += m[(j, i)].abs();
                    row += m[(i, j)].abs();
                }
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let total = col + row;
            let mut f = 1.0;
            let mut g = row / radix;
            while col < g {
                f *= radix;
                col *= radix * radix;
            }
            g = row * radix;
            while col > g {
                f /= radix;
                col /= radix * radix;
            }
            if (col + row) / f < 0.95 * total {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// Evaluates a monic polynomial `x^d + c[d-1] x^(d-1) + ... + c[0]` and its
/// derivative.
fn eval_monic(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut v = 1.0;
    let mut dv = 0.0;
    for &c in coeffs.iter().rev() {
        dv = dv * x + v;
        v = v * x + c;
    }
    (v, dv)
}

/// Roots of the monic polynomial `x^d + c[d-1] x^(d-1) + ... + c[0]`.
pub fn monic_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let d = coeffs.len();
    if d == 0 {
        return Ok(Vec::new());
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::Numerical("polynomial has non-finite coefficients".into()));
    }
    let mut companion = DMatrix::zeros(d, d);
    for i in 1..d {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..d {
        companion[(i, d - 1)] = -coeffs[i];
    }
    balance(&mut companion);
    let roots = companion.complex_eigenvalues();
    Ok(roots.iter().copied().collect())
}

/// Newton refinement of a real root of a monic polynomial.
pub fn polish_real_root(coeffs: &[f64], mut x: f64) -> f64 {
    for _ in 0..8 {
        let (v, dv) = eval_monic(coeffs, x);
        if dv == 0.0 {
            break;
        }
        let step = v / dv;
        let next = x - step;
        if !next.is_finite() || step.abs() > 1e-3 * (1.0 + x.abs()) {
            break;
        }
        x = next;
        if step.abs() <= 4.0 * f64::EPSILON * x.abs() {
            break;
        }
    }
    x
}

/// Roots of a complex polynomial given low-to-high coefficients, via the
/// complex Schur form of its companion matrix.
pub fn complex_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut coeffs = coeffs.to_vec();
    while coeffs.last().is_some_and(|c| c.norm() == 0.0) {
        coeffs.pop();
    }
    let d = coeffs.len().saturating_sub(1);
    if d == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[d];
    let mut companion = DMatrix::<Complex64>::zeros(d, d);
    for i in 1..d {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..d {
        companion[(i, d - 1)] = -coeffs[i] / lead;
    }
    let schur = nalgebra::Schur::try_new(companion, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("complex Schur decomposition did not converge".into()))?;
    let eig = schur
        .eigenvalues()
        .ok_or_else(|| Error::Numerical("complex Schur form has no eigenvalues".into()))?;
    Ok(eig.iter().copied().collect())
}

/// Adjugate (transposed cofactor matrix). Exact cofactor expansion up to
/// 5x5; larger matrices go through an SVD, which stays valid when the matrix
/// is singular.
pub fn adjugate(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "adjugate needs a square matrix");
    if n == 1 {
        return DMatrix::from_element(1, 1, 1.0);
    }
    if n <= 5 {
        let mut adj = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let minor = m.clone().remove_row(i).remove_column(j);
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                adj[(j, i)] = sign * cofactor_det(&minor);
            }
        }
        return adj;
    }
    // A = U S V'  =>  adj(A) = det(U) det(V) V adj(S) U'
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V'");
    let s = svd.singular_values;
    let adj_s = DVector::from_iterator(
        n,
        (0..n).map(|i| (0..n).filter(|&k| k != i).map(|k| s[k]).product::<f64>()),
    );
    let sign = u.determinant().signum() * vt.determinant().signum();
    vt.transpose() * DMatrix::from_diagonal(&adj_s) * u.transpose() * sign
}

/// Determinant by Laplace expansion along the first row; used only for the
/// small minors of [`adjugate`].
fn cofactor_det(m: &DMatrix<f64>) -> f64 {
    match m.nrows() {
        0 => 1.0,
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        n => (0..n)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * m[(0, j)] * cofactor_det(&m.clone().remove_row(0).remove_column(j))
            })
            .sum(),
    }
}

/// Largest absolute asymmetry `|m_ij - m_ji|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

/// Averages `m` with its transpose.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    symmetrize(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monic_roots_of_known_cubic() {
        // (x - 0.2)(x - 1)(x - 1.8)
        let coeffs = [-0.36, 2.36, -3.0];
        let mut r: Vec<f64> = monic_roots(&coeffs)
            .unwrap()
            .iter()
            .map(|z| {
                assert!(z.im.abs() < 1e-12);
                polish_real_root(&coeffs, z.re)
            })
            .collect();
        r.sort_by(f64::total_cmp);
        for (got, want) in r.iter().zip([0.2, 1.0, 1.8]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn complex_roots_of_quadratic() {
        // z^2 + 1
        let c = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        let mut r = complex_roots(&c).unwrap();
        r.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((r[0] - Complex64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((r[1] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn adjugate_identity_on_random_matrices() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for n in 1..=7 {
            let a = DMatrix::from_fn(n, n, |_, _| next());
            let a = &a + a.transpose();
            let adj = adjugate(&a);
            let lhs = &adj * &a;
            let rhs = DMatrix::identity(n, n) * a.determinant();
            assert!((lhs - rhs).amax() < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn adjugate_of_singular_matrix() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(adjugate(&g), DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        // rank-deficient 6x6 through the SVD branch
        let v = DVector::from_vec(vec![1.0, 2.0, 0.5, -1.0, 3.0, 0.25]);
        let w = DVector::from_vec(vec![0.3, -1.0, 2.0, 1.0, 0.0, 1.5]);
        let a = &v * v.transpose() + &w * w.transpose();
        let adj = adjugate(&a);
        assert!((&adj * &a).amax() < 1e-10);
    }
}
