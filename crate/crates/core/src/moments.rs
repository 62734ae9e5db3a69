//! Spectral moments of the SSCM and the partition recursion linking the
//! moments `beta_j` of the limiting spectral distribution to the moments
//! `gamma_j` of the population spectral distribution.
//!
//! ```text
//! beta_j = sum over (i_1..i_j) with i_1 + 2 i_2 + ... + j i_j = j of
//!          c^(i_1 + ... + i_j - 1) * gamma_2^i_2 ... gamma_j^i_j * phi(i)
//! phi(i) = j! / (i_1! ... i_j! (j + 1 - i_1 - ... - i_j)!)
//! ```
//!
//! The recursion is triangular: `gamma_j` enters `beta_j` once, with
//! coefficient one, which makes the inverse map exact and sequential.

use std::fmt;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use twofloat::TwoFloat;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampling::{Flavor, SampleMatrix, Sscm};

/// Highest moment order supported by the partition tables.
pub const MAX_ORDER: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentFlavor {
    /// Moments of the (limiting or empirical) spectral distribution of `B_n`.
    Beta,
    /// Moments of the population spectral distribution.
    Gamma,
}

/// Moments of orders `1..=k`; the first is always exactly one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentVector {
    flavor: MomentFlavor,
    values: Vec<f64>,
    ratio_c: Option<f64>,
}

impl MomentVector {
    fn build(flavor: MomentFlavor, mut values: Vec<f64>, ratio_c: Option<f64>) -> Result<Self> {
        let first = *values
            .first()
            .ok_or_else(|| Error::InvalidParameter("moment vector needs at least one order".into()))?;
        if (first - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "first moment must be 1, got {first}"
            )));
        }
        values[0] = 1.0;
        if let Some(c) = ratio_c {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::InvalidParameter(format!("ratio c must be >= 0, got {c}")));
            }
        }
        Ok(Self {
            flavor,
            values,
            ratio_c,
        })
    }

    /// Moments `beta_1..beta_k` computed under ratio `c`.
    pub fn beta(values: Vec<f64>, c: f64) -> Result<Self> {
        Self::build(MomentFlavor::Beta, values, Some(c))
    }

    /// Moments `gamma_1..gamma_k` of a population spectral distribution.
    pub fn gamma(values: Vec<f64>) -> Result<Self> {
        Self::build(MomentFlavor::Gamma, values, None)
    }

    pub fn flavor(&self) -> MomentFlavor {
        self.flavor
    }

    pub fn ratio_c(&self) -> Option<f64> {
        self.ratio_c
    }

    /// Highest available order `k`.
    pub fn order(&self) -> usize {
        self.values.len()
    }

    /// Moment of order `j` (1-based).
    pub fn get(&self, j: usize) -> f64 {
        self.values[j - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Orders `2..=k`, the random part of the vector.
    pub fn tail(&self) -> &[f64] {
        &self.values[1..]
    }

    /// Keeps orders `1..=k`.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.order() {
            return Err(Error::Arity {
                needed: k,
                got: self.order(),
            });
        }
        Ok(Self {
            flavor: self.flavor,
            values: self.values[..k].to_vec(),
            ratio_c: self.ratio_c,
        })
    }

    fn require(&self, flavor: MomentFlavor, k: usize) -> Result<()> {
        if self.flavor != flavor {
            return Err(Error::Contract(format!(
                "expected {flavor:?} moments, got {:?}",
                self.flavor
            )));
        }
        if self.order() < k {
            return Err(Error::Arity {
                needed: k,
                got: self.order(),
            });
        }
        Ok(())
    }
}

/// One solution `(i_1, ..., i_j)` of `i_1 + 2 i_2 + ... + j i_j = j` with its
/// exact combinatorial weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionTerm {
    multiplicities: Vec<u32>,
    weight: u128,
}

impl PartitionTerm {
    /// `multiplicities()[l - 1]` is `i_l`.
    pub fn multiplicities(&self) -> &[u32] {
        &self.multiplicities
    }

    pub fn weight(&self) -> u128 {
        self.weight
    }

    /// Total number of parts `i_1 + ... + i_j`.
    pub fn parts(&self) -> u32 {
        self.multiplicities.iter().sum()
    }

    /// The order `j` this term belongs to.
    pub fn order(&self) -> usize {
        self.multiplicities.len()
    }

    /// `c^(parts - 1) * prod_l gamma_l^i_l * phi` in double-double, with
    /// `gamma[l - 1] = gamma_l`.
    fn evaluate_dd(&self, gamma: &[TwoFloat], c: TwoFloat) -> TwoFloat {
        // twofloat's powi maps 0^0 to NaN
        let pow = |x: TwoFloat, e: u32| (0..e).fold(TwoFloat::from(1.0), |acc, _| acc * x);
        let mut v = TwoFloat::from(self.weight as f64) * pow(c, self.parts() - 1);
        for (l, &i) in self.multiplicities.iter().enumerate().skip(1) {
            v *= pow(gamma[l], i);
        }
        v
    }

    /// Partial derivative of [`Self::evaluate_dd`] with respect to `gamma_m`.
    fn derivative(&self, gamma: &[f64], c: f64, m: usize) -> f64 {
        let im = self.multiplicities.get(m - 1).copied().unwrap_or(0);
        if m < 2 || im == 0 {
            return 0.0;
        }
        let mut v = self.weight as f64 * c.powi(self.parts() as i32 - 1) * im as f64;
        for (l, &i) in self.multiplicities.iter().enumerate().skip(1) {
            let e = if l + 1 == m { i - 1 } else { i };
            if e > 0 {
                v *= gamma[l].powi(e as i32);
            }
        }
        v
    }

    fn is_leading(&self) -> bool {
        self.multiplicities.last() == Some(&1)
    }
}

impl fmt::Display for PartitionTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.multiplicities.iter().map(u32::to_string).collect();
        write!(f, "({}): {}", parts.join(","), self.weight)
    }
}

fn factorial(n: u32) -> u128 {
    (1..=n as u128).product()
}

fn partition_weight(mult: &[u32]) -> u128 {
    let j = mult.len() as u32;
    let parts: u32 = mult.iter().sum();
    let denom = mult.iter().map(|&i| factorial(i)).product::<u128>() * factorial(j + 1 - parts);
    let num = factorial(j);
    debug_assert_eq!(num % denom, 0, "partition weight must be integral");
    num / denom
}

fn enumerate_uncached(j: usize) -> Vec<PartitionTerm> {
    fn recurse(l: usize, remaining: usize, j: usize, cur: &mut Vec<u32>, out: &mut Vec<PartitionTerm>) {
        if l > j {
            if remaining == 0 {
                out.push(PartitionTerm {
                    weight: partition_weight(cur),
                    multiplicities: cur.clone(),
                });
            }
            return;
        }
        for i in (0..=remaining / l).rev() {
            cur.push(i as u32);
            recurse(l + 1, remaining - i * l, j, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    recurse(1, j, j, &mut Vec::with_capacity(j), &mut out);
    out
}

fn partition_table() -> &'static [Vec<PartitionTerm>] {
    static TABLE: OnceLock<Vec<Vec<PartitionTerm>>> = OnceLock::new();
    TABLE.get_or_init(|| (0..=MAX_ORDER).map(enumerate_uncached).collect())
}

/// All partition terms of order `j`, in descending lexicographic order of
/// `(i_1, ..., i_j)`.
pub fn enumerate_partitions(j: usize) -> Result<&'static [PartitionTerm]> {
    if !(1..=MAX_ORDER).contains(&j) {
        return Err(Error::UnsupportedOrder {
            order: j,
            min: 1,
            max: MAX_ORDER,
        });
    }
    Ok(&partition_table()[j])
}

fn check_order(k: usize) -> Result<()> {
    if !(1..=MAX_ORDER).contains(&k) {
        return Err(Error::UnsupportedOrder {
            order: k,
            min: 1,
            max: MAX_ORDER,
        });
    }
    Ok(())
}

/// Maps population moments to limiting spectral moments under ratio `c`.
///
/// Terms are accumulated in double-double so the result is close to
/// correctly rounded; the inverse below cancels almost all of `beta_j`.
pub fn gamma_to_beta(g: &MomentVector, c: f64, k: usize) -> Result<MomentVector> {
    check_order(k)?;
    g.require(MomentFlavor::Gamma, k)?;
    let gamma: Vec<TwoFloat> = g.values()[..k].iter().map(|&x| TwoFloat::from(x)).collect();
    let c2 = TwoFloat::from(c);
    let mut beta = vec![1.0; k];
    for j in 2..=k {
        let sum = partition_table()[j]
            .iter()
            .fold(TwoFloat::from(0.0), |acc, t| acc + t.evaluate_dd(&gamma, c2));
        beta[j - 1] = sum.hi();
    }
    MomentVector::beta(beta, c)
}

/// Inverts [`gamma_to_beta`] order by order.
pub fn beta_to_gamma(b: &MomentVector, c: f64) -> Result<MomentVector> {
    let k = b.order();
    check_order(k)?;
    b.require(MomentFlavor::Beta, k)?;
    let c2 = TwoFloat::from(c);
    let mut gamma = vec![TwoFloat::from(1.0); k];
    for j in 2..=k {
        let lower = partition_table()[j]
            .iter()
            .filter(|t| !t.is_leading())
            .fold(TwoFloat::from(0.0), |acc, t| acc + t.evaluate_dd(&gamma, c2));
        gamma[j - 1] = TwoFloat::from(b.get(j)) - lower;
    }
    MomentVector::gamma(gamma.iter().map(TwoFloat::hi).collect())
}

/// `d beta_j / d gamma_m` for `j, m = 2..=k`, assembled analytically.
/// Lower triangular with unit diagonal.
pub fn beta_gamma_derivative(g: &MomentVector, c: f64, k: usize) -> Result<DMatrix<f64>> {
    check_order(k)?;
    g.require(MomentFlavor::Gamma, k)?;
    let gamma = &g.values()[..k];
    let dim = k.saturating_sub(1);
    let mut d = DMatrix::zeros(dim, dim);
    for j in 2..=k {
        for m in 2..=j {
            d[(j - 2, m - 2)] = partition_table()[j]
                .iter()
                .map(|t| t.derivative(gamma, c, m))
                .sum();
        }
    }
    Ok(d)
}

/// Jacobian of `(beta_2..beta_k) -> (gamma_2..gamma_k)` at `b`.
pub fn jacobian_g2(b: &MomentVector, c: f64) -> Result<DMatrix<f64>> {
    let g = beta_to_gamma(b, c)?;
    jacobian_g2_at_gamma(&g, c)
}

/// Same Jacobian, evaluated from the population moments directly.
pub fn jacobian_g2_at_gamma(g: &MomentVector, c: f64) -> Result<DMatrix<f64>> {
    let k = g.order();
    let d = beta_gamma_derivative(g, c, k)?;
    let dim = d.nrows();
    let mut inv = DMatrix::identity(dim, dim);
    // unit lower triangular: forward substitution, column by column
    for col in 0..dim {
        for row in (col + 1)..dim {
            let s: f64 = (col..row).map(|m| d[(row, m)] * inv[(m, col)]).sum();
            inv[(row, col)] = -s;
        }
    }
    Ok(inv)
}

/// Empirical moments `tr(B^j) / p`, `j = 1..=k`, from the eigenvalues of `B`.
pub fn esd_moments(b: &Sscm, k: usize) -> Result<MomentVector> {
    check_order(k)?;
    let eig = symmetric_eigenvalues(b.matrix())?;
    moments_from_eigenvalues(&eig, b.p(), b.ratio(), k)
}

/// All `p` eigenvalues of the SSCM in ascending order, computed from the
/// compact Gram matrix and padded with the `p - n` structural zeros.
pub fn sscm_eigenvalues(y: &SampleMatrix) -> Result<Vec<f64>> {
    let mut eig = symmetric_eigenvalues(&compact_gram(y)?)?;
    eig.resize(y.p(), 0.0);
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "eigendecomposition of a {}x{} matrix with non-finite entries",
            m.nrows(),
            m.ncols()
        )));
    }
    let eig = m.clone().symmetric_eigenvalues();
    if eig.iter().any(|v| !v.is_finite()) {
        let norm = m.norm();
        return Err(Error::Numerical(format!(
            "symmetric eigendecomposition diverged (dimension {}, Frobenius norm {norm:e})",
            m.nrows()
        )));
    }
    Ok(eig.iter().copied().collect())
}

fn moments_from_eigenvalues(eig: &[f64], p: usize, c: f64, k: usize) -> Result<MomentVector> {
    let mut values = vec![0.0; k];
    for &lam in eig {
        let mut pow = 1.0;
        for v in values.iter_mut() {
            pow *= lam;
            *v += pow;
        }
    }
    values.iter_mut().for_each(|v| *v /= p as f64);
    finish_empirical(values, c)
}

fn finish_empirical(mut values: Vec<f64>, c: f64) -> Result<MomentVector> {
    if (values[0] - 1.0).abs() > 1e-9 {
        return Err(Error::Numerical(format!(
            "first empirical moment is {}, expected 1 (tr B = p)",
            values[0]
        )));
    }
    values[0] = 1.0;
    MomentVector::beta(values, c)
}

/// The smaller of `Y'Y/n` (p x p) and `YY'/n` (n x n). Both share the
/// nonzero eigenvalues of the SSCM.
pub fn compact_gram(y: &SampleMatrix) -> Result<DMatrix<f64>> {
    if y.flavor() != Flavor::SpatialSign {
        return Err(Error::Contract("moments expect spatial-sign observations".into()));
    }
    let data = y.data();
    let mut g = if y.n() < y.p() {
        data * data.transpose()
    } else {
        data.transpose() * data
    };
    g /= y.n() as f64;
    Ok(g)
}

/// Strategy for computing `tr(B^j)/p` from spatial-sign observations.
pub trait SpectralMoments: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn moments(&self, y: &SampleMatrix, k: usize) -> Result<MomentVector>;
}

/// One symmetric eigendecomposition of the compact Gram matrix serves every
/// order.
#[derive(Debug, Clone, Copy, Default)]
pub struct EigenMoments;

impl SpectralMoments for EigenMoments {
    fn name(&self) -> &'static str {
        "eigen"
    }

    fn moments(&self, y: &SampleMatrix, k: usize) -> Result<MomentVector> {
        check_order(k)?;
        let g = compact_gram(y)?;
        let eig = symmetric_eigenvalues(&g)?;
        moments_from_eigenvalues(&eig, y.p(), y.ratio(), k)
    }
}

/// Traces of Gram-matrix powers via Frobenius products: `ceil(k/2) - 1`
/// extra matrix products, cheaper than an eigendecomposition for small `k`.
#[derive(Debug, Clone, Copy, Default)]
pub struct TracePowerMoments;

impl SpectralMoments for TracePowerMoments {
    fn name(&self) -> &'static str {
        "trace"
    }

    fn moments(&self, y: &SampleMatrix, k: usize) -> Result<MomentVector> {
        check_order(k)?;
        let g = compact_gram(y)?;
        let half = k.div_ceil(2);
        let mut powers = vec![g];
        for _ in 1..half {
            let next = powers.last().unwrap() * &powers[0];
            powers.push(next);
        }
        let p = y.p() as f64;
        let mut values = Vec::with_capacity(k);
        values.push(powers[0].trace() / p);
        for j in 2..=k {
            let a = j / 2;
            let b = j - a;
            values.push(powers[a - 1].dot(&powers[b - 1]) / p);
        }
        finish_empirical(values, y.ratio())
    }
}

type MomentBuilder = fn() -> Box<dyn SpectralMoments>;

const MOMENT_BACKENDS: &[(&str, MomentBuilder)] = &[
    ("eigen", || Box::new(EigenMoments)),
    ("trace", || Box::new(TracePowerMoments)),
];

pub fn moment_backend_names() -> Vec<&'static str> {
    MOMENT_BACKENDS.iter().map(|(n, _)| *n).collect()
}

pub fn moment_backend(name: &str) -> Result<Box<dyn SpectralMoments>> {
    MOMENT_BACKENDS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, build)| build())
        .ok_or_else(|| Error::UnknownName {
            kind: "moment backend",
            name: name.to_string(),
            available: moment_backend_names().join(", "),
        })
}
