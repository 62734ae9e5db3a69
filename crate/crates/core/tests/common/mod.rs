//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sscm_core::moments::{beta_to_gamma, gamma_to_beta, jacobian_g2, MomentVector};
use sscm_core::psd::{g1_solve, jacobian_g1, theta_to_moments, DiscretePsd};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random order-`d` spectrum with atoms at least `gap` apart (before
/// normalisation) and weights bounded away from zero.
pub fn random_psd<R: Rng>(rng: &mut R, d: usize, gap: f64) -> DiscretePsd {
    loop {
        let mut atoms: Vec<f64> = (0..d).map(|_| rng.random_range(0.1..3.0)).collect();
        atoms.sort_by(f64::total_cmp);
        if atoms.windows(2).any(|w| w[1] - w[0] < gap) {
            continue;
        }
        let weights: Vec<f64> = (0..d).map(|_| rng.random_range(0.2..1.0)).collect();
        if let Ok(psd) = DiscretePsd::normalized(atoms, weights) {
            if psd.min_gap() >= 0.5 * gap {
                return psd;
            }
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `beta_j` by scanning the whole box `0 <= i_l <= j / l` for solutions of
/// `sum_l l i_l = j`, with weights in floating point.
pub fn brute_force_beta(gamma: &[f64], c: f64, j: usize) -> f64 {
    let bounds: Vec<usize> = (1..=j).map(|l| j / l).collect();
    let mut idx = vec![0usize; j];
    let mut total = 0.0;
    loop {
        let weight_sum: usize = idx.iter().enumerate().map(|(l, &i)| (l + 1) * i).sum();
        if weight_sum == j {
            let parts: usize = idx.iter().sum();
            let phi = factorial(j)
                / (idx.iter().map(|&i| factorial(i)).product::<f64>() * factorial(j + 1 - parts));
            let mut term = phi * c.powi(parts as i32 - 1);
            for (l, &i) in idx.iter().enumerate().skip(1) {
                term *= gamma[l].powi(i as i32);
            }
            total += term;
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == j {
                return total;
            }
            if idx[pos] < bounds[pos] {
                idx[pos] += 1;
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Marčenko–Pastur moments of the unit spectrum (Narayana polynomials).
pub fn narayana(j: usize, c: f64) -> f64 {
    let binom = |n: usize, k: usize| -> f64 {
        (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product()
    };
    (0..j)
        .map(|r| binom(j, r) * binom(j - 1, r) / (r + 1) as f64 * c.powi(r as i32))
        .sum()
}

/// Trapezoid rule on the circle `|z| = r`: the `n`-th Taylor coefficient of
/// `f` up to aliasing from order `n + points`.
fn contour_coeff(f: &dyn Fn(Complex64) -> Complex64, n: usize, r: f64, points: usize) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..points {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / points as f64;
        let z = Complex64::from_polar(r, theta);
        acc += f(z) * Complex64::from_polar(1.0, -(n as f64) * theta);
    }
    (acc / (points as f64 * r.powi(n as i32))).re
}

/// Taylor coefficient `[z^n] f` by Cauchy-integral differentiation
/// (Lyness–Moler) with one Richardson step in the radius: the leading
/// aliasing error scales like `r^points`.
pub fn taylor_coeff(f: &dyn Fn(Complex64) -> Complex64, n: usize, r: f64) -> f64 {
    taylor_coeff_with(f, n, r, 32)
}

pub fn taylor_coeff_with(f: &dyn Fn(Complex64) -> Complex64, n: usize, r: f64, points: usize) -> f64 {
    let coarse = contour_coeff(f, n, r, points);
    let fine = contour_coeff(f, n, r / 2.0, points);
    let w = 2f64.powi(points as i32);
    (w * fine - coarse) / (w - 1.0)
}

/// `P_{s,t}(z) = sum_i w_i a_i^s (1 + a_i z)^(-t)`, evaluated pointwise.
pub fn p_st(psd: &DiscretePsd, s: i32, t: i32, z: Complex64) -> Complex64 {
    psd.atoms()
        .iter()
        .zip(psd.weights())
        .map(|(&a, &w)| w * a.powi(s) * (1.0 + a * z).powi(-t))
        .sum()
}

/// Relative error, absolute below `1e-12`.
pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-12)
}

fn central_column(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], i: usize, h: f64) -> Vec<f64> {
    let (mut up, mut down) = (x.to_vec(), x.to_vec());
    up[i] += h;
    down[i] -= h;
    f(&up).iter().zip(f(&down)).map(|(u, d)| (u - d) / (2.0 * h)).collect()
}

/// Central differences of `f` at `x` with step `h`, one column per
/// coordinate, plus one Richardson step against `h / 2` to cancel the
/// `O(h^2)` truncation term.
pub fn central_jacobian(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> DMatrix<f64> {
    let rows = f(x).len();
    let mut jac = DMatrix::zeros(rows, x.len());
    for i in 0..x.len() {
        let coarse = central_column(f, x, i, h);
        let fine = central_column(f, x, i, h / 2.0);
        for r in 0..rows {
            jac[(r, i)] = (4.0 * fine[r] - coarse[r]) / 3.0;
        }
    }
    jac
}

/// `||a - b||_F / ||b||_F`.
pub fn frobenius_rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Relative gap between `jacobian_g2` and differences of `beta_to_gamma`
/// at the limiting moments of `psd` under ratio `c`.
pub fn g2_fd_error(psd: &DiscretePsd, c: f64, k: usize) -> f64 {
    let gamma = theta_to_moments(psd, k).unwrap();
    let beta = gamma_to_beta(&gamma, c, k).unwrap();
    let analytic = jacobian_g2(&beta, c).unwrap();
    let f = |tail: &[f64]| {
        let mut b = vec![1.0];
        b.extend_from_slice(tail);
        beta_to_gamma(&MomentVector::beta(b, c).unwrap(), c).unwrap().tail().to_vec()
    };
    frobenius_rel(&analytic, &central_jacobian(&f, beta.tail(), 1e-6))
}

/// Relative gap between `jacobian_g1` and differences of `g1_solve` around
/// the population moments of `psd`.
pub fn g1_fd_error(psd: &DiscretePsd) -> f64 {
    let d = psd.order();
    let gamma = theta_to_moments(psd, 2 * d - 1).unwrap();
    let analytic = jacobian_g1(psd).unwrap();
    let f = |tail: &[f64]| {
        let mut g = vec![1.0];
        g.extend_from_slice(tail);
        g1_solve(&MomentVector::gamma(g).unwrap(), d).unwrap().theta()
    };
    frobenius_rel(&analytic, &central_jacobian(&f, gamma.tail(), 1e-6))
}

/// Contour radius well inside the disc of analyticity of every generating
/// function involved.
pub fn radius(psd: &DiscretePsd, c: f64) -> f64 {
    0.2 / (psd.atoms().last().unwrap() * c.sqrt().max(1.0))
}

pub fn big_p(psd: &DiscretePsd, c: f64, z: Complex64) -> Complex64 {
    c * z * p_st(psd, 1, 1, z) - 1.0
}

/// `v_j` straight from the closed form: `c P^j (bracket)` differentiated
/// `j - 2` times at zero.
pub fn oracle_mean(psd: &DiscretePsd, c: f64, j: usize) -> f64 {
    let g2 = psd.moment(2);
    let f = |z: Complex64| {
        let bracket = p_st(psd, 2, 3, z) / (1.0 - c * z * z * p_st(psd, 2, 2, z))
            + 2.0 * g2 * p_st(psd, 1, 1, z) * p_st(psd, 1, 2, z)
            - 2.0 * p_st(psd, 2, 1, z) * p_st(psd, 1, 2, z)
            - 2.0 * p_st(psd, 1, 1, z) * p_st(psd, 2, 2, z);
        c * big_p(psd, c, z).powi(j as i32) * bracket
    };
    taylor_coeff(&f, j - 2, radius(psd, c))
}

pub fn oracle_u(psd: &DiscretePsd, c: f64, s: usize, t: usize) -> f64 {
    // P^s is a polynomial in 1 / (1 + a z): analytic for |z| < 1 / a_max,
    // so a wide contour keeps high-order coefficients clear of roundoff
    let f = |z: Complex64| big_p(psd, c, z).powi(s as i32);
    taylor_coeff_with(&f, t, 0.6 / psd.atoms().last().unwrap(), 128)
}

pub fn oracle_psi(psd: &DiscretePsd, c: f64, i: usize, j: usize) -> f64 {
    let gamma: Vec<f64> = (1..=i.max(j)).map(|k| psd.moment(k)).collect();
    let beta = |k: usize| brute_force_beta(&gamma, c, k);
    let (fi, fj) = (i as f64, j as f64);
    let sum: f64 = (0..i)
        .map(|l| (i - l) as f64 * oracle_u(psd, c, i, l) * oracle_u(psd, c, j, i + j - l))
        .sum();
    2.0 * sum
        + 2.0 * c * psd.moment(2) * fi * fj * beta(i) * beta(j)
        + 2.0 * fj * beta(j) * oracle_u(psd, c, i, i + 1)
        + 2.0 * fi * beta(i) * oracle_u(psd, c, j, j + 1)
}
