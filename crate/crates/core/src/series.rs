//! Truncated power series at `z = 0` and the explicit CLT mean and
//! covariance for the spectral moments of the SSCM.
//!
//! The limiting mean `v_j` and covariance `psi_ij` of
//! `p (beta_hat_j - beta_j)` are Taylor coefficients of rational functions
//! built from
//!
//! ```text
//! P_{s,t}(z) = int x^s (1 + x z)^(-t) dH(x),     P(z) = c z P_{1,1}(z) - 1.
//! ```
//!
//! Evaluating them as truncated series gives exact coefficients (up to
//! rounding) at `O(K^2)` cost per product, without step sizes.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::moments::gamma_to_beta;
use crate::psd::{theta_to_moments, DiscretePsd};

/// Taylor coefficients `a_0..a_K` of a function at `z = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<f64>,
}

impl TruncatedSeries {
    /// A series of truncation order `coeffs.len() - 1`.
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least a constant term");
        Self { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self::new(vec![0.0; order + 1])
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = value;
        s
    }

    /// The identity function `z`.
    pub fn variable(order: usize) -> Self {
        let mut s = Self::zero(order);
        if order >= 1 {
            s.coeffs[1] = 1.0;
        }
        s
    }

    /// Truncation order `K`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `z^m`, `m <= K`.
    pub fn coeff(&self, m: usize) -> f64 {
        self.coeffs[m]
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * factor).collect())
    }

    /// Multiplies by `z^m`.
    pub fn shift(&self, m: usize) -> Self {
        let k = self.order();
        let mut out = Self::zero(k);
        for i in m..=k {
            out.coeffs[i] = self.coeffs[i - m];
        }
        out
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self::new(self.coeffs[..=order.min(self.order())].to_vec())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        let mut out = vec![0.0; k + 1];
        for (m, slot) in out.iter_mut().enumerate() {
            *slot = (0..=m).map(|i| self.coeffs[i] * other.coeffs[m - i]).sum();
        }
        Self::new(out)
    }

    /// Long division; needs a nonzero constant term in the divisor.
    pub fn div(&self, other: &Self) -> Result<Self> {
        let b0 = other.coeffs[0];
        if !(b0.abs() > 1e-14) {
            return Err(Error::SingularSeries(b0));
        }
        let k = self.order().min(other.order());
        let mut q = vec![0.0; k + 1];
        for m in 0..=k {
            let s: f64 = (1..=m).map(|i| other.coeffs[i] * q[m - i]).sum();
            q[m] = (self.coeffs[m] - s) / b0;
        }
        Ok(Self::new(q))
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut result = Self::constant(1.0, self.order());
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let k = self.order().min(other.order());
        Self::new((0..=k).map(|m| f(self.coeffs[m], other.coeffs[m])).collect())
    }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn add(self, rhs: Self) -> TruncatedSeries {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn sub(self, rhs: Self) -> TruncatedSeries {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn mul(self, rhs: Self) -> TruncatedSeries {
        TruncatedSeries::mul(self, rhs)
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn neg(self) -> TruncatedSeries {
        self.scale(-1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesOp {
    Add,
    Sub,
    Mul,
    Div,
    /// `a^n`; the second operand is ignored.
    Pow(u32),
}

pub fn series_arith(a: &TruncatedSeries, b: &TruncatedSeries, op: SeriesOp) -> Result<TruncatedSeries> {
    Ok(match op {
        SeriesOp::Add => a + b,
        SeriesOp::Sub => a - b,
        SeriesOp::Mul => a * b,
        SeriesOp::Div => a.div(b)?,
        SeriesOp::Pow(n) => a.powi(n),
    })
}

/// `P_{s,t}(z) = int x^s (1 + x z)^(-t) dH(x)` to order `order`.
pub fn p_st_series(psd: &DiscretePsd, s: u32, t: u32, order: usize) -> TruncatedSeries {
    assert!(t >= 1, "P_(s,t) needs t >= 1");
    let mut coeffs = vec![0.0; order + 1];
    // (-1)^m binom(t + m - 1, m), built incrementally
    let mut binom = 1.0;
    for (m, slot) in coeffs.iter_mut().enumerate() {
        if m > 0 {
            binom *= -((t as usize + m - 1) as f64) / m as f64;
        }
        *slot = binom
            * psd
                .atoms()
                .iter()
                .zip(psd.weights())
                .map(|(a, w)| w * a.powi((s as usize + m) as i32))
                .sum::<f64>();
    }
    TruncatedSeries::new(coeffs)
}

/// Default truncation order for moments up to `k`.
pub fn default_truncation(k: usize) -> usize {
    2 * k + 4
}

/// `P(z) = c z P_{1,1}(z) - 1`.
fn p_series(psd: &DiscretePsd, c: f64, order: usize) -> TruncatedSeries {
    let p11 = p_st_series(psd, 1, 1, order);
    &p11.shift(1).scale(c) - &TruncatedSeries::constant(1.0, order)
}

fn check_k(k: usize) -> Result<()> {
    if !(2..=crate::moments::MAX_ORDER).contains(&k) {
        return Err(Error::UnsupportedOrder {
            order: k,
            min: 2,
            max: crate::moments::MAX_ORDER,
        });
    }
    Ok(())
}

/// Limiting mean `v_2..v_k` of `p (beta_hat_j - beta_j)`.
pub fn mean_correction(psd: &DiscretePsd, c: f64, k: usize) -> Result<Vec<f64>> {
    mean_correction_with_order(psd, c, k, default_truncation(k))
}

/// [`mean_correction`] at an explicit truncation order `K >= k - 2`.
pub fn mean_correction_with_order(
    psd: &DiscretePsd,
    c: f64,
    k: usize,
    order: usize,
) -> Result<Vec<f64>> {
    check_k(k)?;
    if order < k - 2 {
        return Err(Error::InvalidParameter(format!(
            "truncation order {order} is below k - 2 = {}",
            k - 2
        )));
    }
    let gamma2 = psd.moment(2);
    let p11 = p_st_series(psd, 1, 1, order);
    let p12 = p_st_series(psd, 1, 2, order);
    let p21 = p_st_series(psd, 2, 1, order);
    let p22 = p_st_series(psd, 2, 2, order);
    let p23 = p_st_series(psd, 2, 3, order);
    let one = TruncatedSeries::constant(1.0, order);

    let denom = &one - &p22.shift(2).scale(c);
    let first = p23.div(&denom)?;
    let bracket = &(&(&first + &(&p11 * &p12).scale(2.0 * gamma2)) - &(&p21 * &p12).scale(2.0))
        - &(&p11 * &p22).scale(2.0);
    let p = p_series(psd, c, order);

    // [c P^j bracket / (j-2)!]^(j-2) at 0 is the coefficient of z^(j-2).
    Ok((2..=k)
        .map(|j| c * (&p.powi(j as u32) * &bracket).coeff(j - 2))
        .collect())
}

/// `u_{s,t}` = coefficient of `z^t` in `P(z)^s`, for `s = 0..=k`.
fn u_table(psd: &DiscretePsd, c: f64, k: usize, order: usize) -> Vec<TruncatedSeries> {
    let p = p_series(psd, c, order);
    let mut table = Vec::with_capacity(k + 1);
    table.push(TruncatedSeries::constant(1.0, order));
    for s in 1..=k {
        let next = &table[s - 1] * &p;
        table.push(next);
    }
    table
}

/// Limiting covariance `Psi = (psi_ij)`, `i, j = 2..=k`.
pub fn covariance_matrix(psd: &DiscretePsd, c: f64, k: usize) -> Result<DMatrix<f64>> {
    covariance_matrix_with_order(psd, c, k, default_truncation(k))
}

/// [`covariance_matrix`] at an explicit truncation order `K >= 2k`.
pub fn covariance_matrix_with_order(
    psd: &DiscretePsd,
    c: f64,
    k: usize,
    order: usize,
) -> Result<DMatrix<f64>> {
    check_k(k)?;
    if order < 2 * k {
        return Err(Error::InvalidParameter(format!(
            "truncation order {order} is below 2k = {}",
            2 * k
        )));
    }
    let gamma2 = psd.moment(2);
    let beta = gamma_to_beta(&theta_to_moments(psd, k)?, c, k)?;
    let u = u_table(psd, c, k, order);
    let uc = |s: usize, t: usize| u[s].coeff(t);
    let dim = k - 1;
    let mut psi = DMatrix::zeros(dim, dim);
    for i in 2..=k {
        for j in 2..=k {
            let (fi, fj) = (i as f64, j as f64);
            let (bi, bj) = (beta.get(i), beta.get(j));
            let sum: f64 = (0..i)
                .map(|l| (i - l) as f64 * uc(i, l) * uc(j, i + j - l))
                .sum();
            psi[(i - 2, j - 2)] = 2.0 * sum
                + 2.0 * c * gamma2 * fi * fj * bi * bj
                + 2.0 * fj * bj * uc(i, i + 1)
                + 2.0 * fi * bi * uc(j, j + 1);
        }
    }
    Ok(psi)
}

/// Mean and covariance of the moment CLT for one `(psd, c, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CltCorrection {
    pub psd: DiscretePsd,
    pub ratio_c: f64,
    pub order: usize,
    /// `v_2..v_k`.
    pub mean: Vec<f64>,
    /// `(psi_ij)` for `i, j = 2..=k`.
    pub covariance: DMatrix<f64>,
}

impl CltCorrection {
    pub fn new(psd: &DiscretePsd, c: f64, k: usize) -> Result<Self> {
        Ok(Self {
            psd: psd.clone(),
            ratio_c: c,
            order: k,
            mean: mean_correction(psd, c, k)?,
            covariance: covariance_matrix(psd, c, k)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model1() -> DiscretePsd {
        DiscretePsd::new(vec![0.5, 1.5], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn self_division_is_one() {
        let a = TruncatedSeries::new(vec![1.0, 1.0, 0.0, 0.0, 0.0]);
        let q = series_arith(&a, &a, SeriesOp::Div).unwrap();
        assert_eq!(q.coeffs(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn geometric_series() {
        let one = TruncatedSeries::constant(1.0, 10);
        let den = TruncatedSeries::new(vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let q = one.div(&den).unwrap();
        for m in 0..=10 {
            assert_eq!(q.coeff(m), if m % 2 == 0 { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn division_by_zero_constant_term() {
        let a = TruncatedSeries::variable(4);
        assert!(matches!(
            series_arith(&a, &a, SeriesOp::Div),
            Err(Error::SingularSeries(_))
        ));
    }

    #[test]
    fn product_matches_naive_convolution() {
        let mut state = 99u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let a: Vec<f64> = (0..=12).map(|_| next()).collect();
        let b: Vec<f64> = (0..=12).map(|_| next()).collect();
        let prod = &TruncatedSeries::new(a.clone()) * &TruncatedSeries::new(b.clone());
        let mut naive = vec![0.0; 13];
        for i in 0..=12 {
            for j in 0..=12 {
                if i + j <= 12 {
                    naive[i + j] += a[i] * b[j];
                }
            }
        }
        for m in 0..=12 {
            assert_eq!(prod.coeff(m), naive[m]);
        }
    }

    #[test]
    fn power_matches_repeated_product() {
        let a = TruncatedSeries::new(vec![0.5, -1.0, 0.25, 2.0, 0.0, 1.0]);
        let mut r = TruncatedSeries::constant(1.0, 5);
        for _ in 0..5 {
            r = &r * &a;
        }
        let p = series_arith(&a, &a, SeriesOp::Pow(5)).unwrap();
        for m in 0..=5 {
            assert!((p.coeff(m) - r.coeff(m)).abs() < 1e-13);
        }
    }

    #[test]
    fn p_st_for_unit_mass_is_binomial() {
        for t in 1..=4u32 {
            let s = p_st_series(&DiscretePsd::unit(), 2, t, 8);
            for m in 0..=8usize {
                let binom: f64 = (1..=m).map(|i| (t as usize + i - 1) as f64 / i as f64).product();
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                assert!((s.coeff(m) - sign * binom).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn p_st_constant_term_is_the_moment() {
        let psd = model1();
        for s in 0..5 {
            for t in 1..4 {
                assert!((p_st_series(&psd, s, t, 3).coeff(0) - psd.moment(s as usize)).abs() < 1e-15);
            }
        }
        assert!((p_st_series(&psd, 1, 1, 0).coeff(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spherical_mean_is_minus_c() {
        for c in [0.1, 0.5, 1.0, 2.0, 7.0] {
            let v = mean_correction(&DiscretePsd::unit(), c, 2).unwrap();
            assert!((v[0] + c).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_ratio_gives_zero_mean_and_covariance() {
        let psd = model1();
        assert!(mean_correction(&psd, 0.0, 6).unwrap().iter().all(|v| *v == 0.0));
        let psi = covariance_matrix(&psd, 0.0, 5).unwrap();
        assert!(psi.amax() == 0.0);
    }

    #[test]
    fn spherical_variance_is_four_c_squared() {
        // Var tr(B^2) for sphere-uniform rows: pairwise-uncorrelated
        // (y_j'y_l)^2 terms each with variance ~2p^2, giving 4 c^2 in the limit.
        for c in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let psi = covariance_matrix(&DiscretePsd::unit(), c, 2).unwrap();
            assert!((psi[(0, 0)] - 4.0 * c * c).abs() < 1e-10 * c * c, "c = {c}");
        }
    }

    #[test]
    fn u_constant_terms_alternate() {
        let u = u_table(&model1(), 1.3, 6, 10);
        for (s, series) in u.iter().enumerate() {
            assert_eq!(series.coeff(0), if s % 2 == 0 { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn covariance_is_symmetric_psd() {
        let psd = DiscretePsd::new(vec![0.2, 1.0, 1.8], vec![0.3, 0.4, 0.3]).unwrap();
        for c in [0.25, 1.0, 2.0] {
            let psi = covariance_matrix(&psd, c, 5).unwrap();
            assert!(crate::linalg::asymmetry(&psi) < 1e-9 * psi.amax().max(1.0));
            assert!(crate::linalg::min_eigenvalue(&psi) > -1e-8 * psi.amax().max(1.0));
        }
    }

    #[test]
    fn truncation_order_is_checked() {
        assert!(covariance_matrix_with_order(&model1(), 1.0, 3, 5).is_err());
        assert!(mean_correction_with_order(&model1(), 1.0, 4, 1).is_err());
        assert!(mean_correction(&model1(), 1.0, 1).is_err());
    }

    #[test]
    fn relabeling_atoms_changes_nothing() {
        let a = DiscretePsd::new(vec![0.5, 1.5], vec![0.5, 0.5]).unwrap();
        let b = DiscretePsd::new(vec![1.5, 0.5], vec![0.5, 0.5]).unwrap();
        assert_eq!(mean_correction(&a, 2.0, 5).unwrap(), mean_correction(&b, 2.0, 5).unwrap());
        assert_eq!(covariance_matrix(&a, 2.0, 4).unwrap(), covariance_matrix(&b, 2.0, 4).unwrap());
    }

    #[test]
    fn outputs_are_continuous_in_c() {
        let psd = model1();
        for c in [0.5, 1.0, 2.0] {
            let v0 = mean_correction(&psd, c, 5).unwrap();
            let v1 = mean_correction(&psd, c + 1e-8, 5).unwrap();
            let p0 = covariance_matrix(&psd, c, 5).unwrap();
            let p1 = covariance_matrix(&psd, c + 1e-8, 5).unwrap();
            for (a, b) in v0.iter().zip(&v1) {
                assert!((a - b).abs() < 1e-5 * a.abs().max(1.0));
            }
            assert!((&p0 - &p1).amax() < 1e-6 * p0.amax().max(1.0));
        }
    }

    proptest! {
        #[test]
        fn coefficients_do_not_depend_on_truncation(
            coeffs_a in prop::collection::vec(-2.0f64..2.0, 9),
            coeffs_b in prop::collection::vec(-2.0f64..2.0, 9),
            b0 in 0.5f64..2.0,
        ) {
            let k = 8;
            let mut b = coeffs_b.clone();
            b[0] = b0;
            let small_a = TruncatedSeries::new(coeffs_a.clone());
            let small_b = TruncatedSeries::new(b.clone());
            let mut big_a = coeffs_a.clone();
            big_a.extend([0.3, -0.7, 1.1, 0.9]);
            let mut big_b = b.clone();
            big_b.extend([-0.4, 0.2, 0.8, -1.3]);
            let big_a = TruncatedSeries::new(big_a);
            let big_b = TruncatedSeries::new(big_b);
            for op in [SeriesOp::Add, SeriesOp::Sub, SeriesOp::Mul, SeriesOp::Div, SeriesOp::Pow(3)] {
                let s = series_arith(&small_a, &small_b, op).unwrap();
                let l = series_arith(&big_a, &big_b, op).unwrap();
                prop_assert_eq!(s.coeffs(), &l.coeffs()[..=k]);
            }
        }
    }
}
