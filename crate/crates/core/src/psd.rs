//! Discrete population spectral distributions and their moment-based
//! estimation from the SSCM.
//!
//! A PSD of order `d` is `H = w_1 delta_{a_1} + ... + w_d delta_{a_d}` with
//! `sum w_i = 1` and `sum a_i w_i = 1`. The free parameter is
//! `theta = (a_1, w_1, ..., a_{d-1}, w_{d-1})`; `(a_d, w_d)` follow from the
//! two constraints.
//!
//! Estimation runs the moment pipeline `beta -> gamma -> theta`, first
//! subtracting the `O(1/p)` CLT bias from the empirical moments, and turns the
//! moment CLT into parameter intervals with the delta method.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::linalg;
use crate::moments::{
    beta_to_gamma, jacobian_g2_at_gamma, EigenMoments, MomentVector, SpectralMoments,
};
use crate::sampling::{spatial_sign, SampleMatrix};
use crate::series::{covariance_matrix, mean_correction};

const CONSTRAINT_TOL: f64 = 1e-10;

/// `w_1 delta_{a_1} + ... + w_d delta_{a_d}` with sorted atoms, unit mass and
/// unit mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretePsd {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscretePsd {
    /// Validates and sorts the atoms; the constraints must already hold.
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let (atoms, weights) = Self::sorted(atoms, weights)?;
        let mass: f64 = weights.iter().sum();
        let mean: f64 = atoms.iter().zip(&weights).map(|(a, w)| a * w).sum();
        if (mass - 1.0).abs() > CONSTRAINT_TOL {
            return Err(Error::InvalidParameter(format!("weights sum to {mass}, not 1")));
        }
        if (mean - 1.0).abs() > CONSTRAINT_TOL {
            return Err(Error::InvalidParameter(format!(
                "spectral mean is {mean}, not 1 (tr(Sigma) = p)"
            )));
        }
        Ok(Self { atoms, weights })
    }

    /// Like [`DiscretePsd::new`] but renormalises the weights to unit mass and
    /// rescales the atoms to unit mean.
    pub fn normalized(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let (mut atoms, mut weights) = Self::sorted(atoms, weights)?;
        let mass: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= mass);
        let mean: f64 = atoms.iter().zip(&weights).map(|(a, w)| a * w).sum();
        atoms.iter_mut().for_each(|a| *a /= mean);
        Ok(Self { atoms, weights })
    }

    /// The point mass at one (the spherical case).
    pub fn unit() -> Self {
        Self {
            atoms: vec![1.0],
            weights: vec![1.0],
        }
    }

    fn sorted(atoms: Vec<f64>, weights: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "need matching, non-empty atoms and weights (got {} and {})",
                atoms.len(),
                weights.len()
            )));
        }
        if atoms.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::InvalidParameter(format!("atoms must be positive: {atoms:?}")));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "weights must be positive: {weights:?}"
            )));
        }
        let mut pairs: Vec<(f64, f64)> = atoms.into_iter().zip(weights).collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        if pairs.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidParameter("atoms must be distinct".into()));
        }
        Ok(pairs.into_iter().unzip())
    }

    /// Rebuilds a PSD of order `d` from `theta = (a_1, w_1, ..., a_{d-1}, w_{d-1})`.
    pub fn from_theta(theta: &[f64], d: usize) -> Result<Self> {
        if d == 0 || theta.len() != 2 * (d - 1) {
            return Err(Error::InvalidParameter(format!(
                "theta of length {} does not describe an order-{d} psd",
                theta.len()
            )));
        }
        let mut atoms: Vec<f64> = theta.iter().step_by(2).copied().collect();
        let mut weights: Vec<f64> = theta.iter().skip(1).step_by(2).copied().collect();
        let wd = 1.0 - weights.iter().sum::<f64>();
        let ad = (1.0 - atoms.iter().zip(&weights).map(|(a, w)| a * w).sum::<f64>()) / wd;
        atoms.push(ad);
        weights.push(wd);
        Self::new(atoms, weights)
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn order(&self) -> usize {
        self.atoms.len()
    }

    /// `(a_1, w_1, ..., a_{d-1}, w_{d-1})`.
    pub fn theta(&self) -> Vec<f64> {
        let d = self.order();
        self.atoms[..d - 1]
            .iter()
            .zip(&self.weights[..d - 1])
            .flat_map(|(&a, &w)| [a, w])
            .collect()
    }

    /// `int t^j dH(t)`.
    pub fn moment(&self, j: usize) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(a, w)| w * a.powi(j as i32))
            .sum()
    }

    /// Smallest gap between consecutive atoms.
    pub fn min_gap(&self) -> f64 {
        self.atoms
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

impl fmt::Display for DiscretePsd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .atoms
            .iter()
            .zip(&self.weights)
            .map(|(a, w)| format!("{a}:{w}"))
            .collect();
        f.write_str(&parts.join(","))
    }
}

/// Parses `atom:weight,atom:weight,...`, normalising to unit mass and mean.
impl FromStr for DiscretePsd {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut atoms = Vec::new();
        let mut weights = Vec::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (a, w) = item
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected atom:weight, got `{item}`")))?;
            let parse = |t: &str| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad number `{t}` in psd `{s}`")))
            };
            atoms.push(parse(a)?);
            weights.push(parse(w)?);
        }
        Self::normalized(atoms, weights)
    }
}

/// Population moments `gamma_1..gamma_k`.
pub fn theta_to_moments(psd: &DiscretePsd, k: usize) -> Result<MomentVector> {
    if k == 0 {
        return Err(Error::InvalidParameter("moment order must be at least 1".into()));
    }
    let mut values: Vec<f64> = (1..=k).map(|j| psd.moment(j)).collect();
    values[0] = 1.0;
    MomentVector::gamma(values)
}

/// Result of moment inversion with a note on any projection applied.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentInversion {
    pub psd: DiscretePsd,
    pub projected: bool,
}

/// Recovers an order-`d` PSD from `gamma_1..gamma_{2d-1}`.
pub fn g1_solve(g: &MomentVector, d: usize) -> Result<DiscretePsd> {
    g1_solve_detailed(g, d).map(|s| s.psd)
}

/// [`g1_solve`], also reporting whether the weights had to be clamped back
/// into the parameter space.
pub fn g1_solve_detailed(g: &MomentVector, d: usize) -> Result<MomentInversion> {
    if d == 0 {
        return Err(Error::InvalidParameter("psd order must be at least 1".into()));
    }
    let need = 2 * d - 1;
    if g.order() < need {
        return Err(Error::Arity {
            needed: need,
            got: g.order(),
        });
    }
    if d == 1 {
        return Ok(MomentInversion {
            psd: DiscretePsd::unit(),
            projected: false,
        });
    }
    let gamma = |j: usize| if j == 0 { 1.0 } else { g.get(j) };

    // Hankel system for the monic polynomial whose roots are the atoms.
    let hankel = DMatrix::from_fn(d, d, |m, k| gamma(m + k));
    let rhs = DVector::from_fn(d, |m, _| -gamma(d + m));
    let coeffs = hankel.lu().solve(&rhs).ok_or_else(|| {
        Error::InvalidMomentSequence(format!("moment Hankel matrix of order {d} is singular"))
    })?;
    let coeffs: Vec<f64> = coeffs.iter().copied().collect();

    let roots = linalg::monic_roots(&coeffs)?;
    let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
    if let Some(r) = roots.iter().find(|r| r.im.abs() > 1e-8 * scale) {
        return Err(Error::InvalidMomentSequence(format!(
            "moment polynomial has a complex root {r}"
        )));
    }
    let mut atoms: Vec<f64> = roots
        .iter()
        .map(|r| linalg::polish_real_root(&coeffs, r.re))
        .collect();
    atoms.sort_by(f64::total_cmp);
    if atoms.windows(2).any(|w| w[1] - w[0] <= 1e-10 * scale) {
        return Err(Error::InvalidMomentSequence(format!(
            "moment polynomial has repeated roots {atoms:?}"
        )));
    }
    if atoms[0] <= 0.0 {
        return Err(Error::InfeasiblePsd(format!(
            "recovered atoms {atoms:?} are not all positive"
        )));
    }

    let vandermonde = DMatrix::from_fn(d, d, |m, i| atoms[i].powi(m as i32));
    let rhs = DVector::from_fn(d, |m, _| gamma(m));
    let weights = vandermonde.lu().solve(&rhs).ok_or_else(|| {
        Error::InvalidMomentSequence("Vandermonde system for the weights is singular".into())
    })?;
    let mut weights: Vec<f64> = weights.iter().copied().collect();
    if let Some(w) = weights.iter().find(|w| **w < -1e-8) {
        return Err(Error::InfeasiblePsd(format!(
            "recovered weight {w} is negative (weights {weights:?})"
        )));
    }
    let mut projected = false;
    for w in weights.iter_mut() {
        if *w < 1e-10 {
            *w = 1e-10;
            projected = true;
        }
    }
    let mass: f64 = weights.iter().sum();
    let mean: f64 = atoms.iter().zip(&weights).map(|(a, w)| a * w).sum::<f64>() / mass;
    if (mass - 1.0).abs() > CONSTRAINT_TOL || (mean - 1.0).abs() > CONSTRAINT_TOL {
        projected = projected || (mass - 1.0).abs() > 1e-8 || (mean - 1.0).abs() > 1e-8;
    }
    weights.iter_mut().for_each(|w| *w /= mass);
    atoms.iter_mut().for_each(|a| *a /= mean);
    let psd = DiscretePsd::new(atoms, weights)?;
    Ok(MomentInversion { psd, projected })
}

/// `d(gamma_2..gamma_{2d-1}) / d theta` with `(a_d, w_d)` eliminated.
pub fn moment_theta_derivative(psd: &DiscretePsd) -> DMatrix<f64> {
    let d = psd.order();
    let dim = 2 * d - 2;
    let (a, w) = (psd.atoms(), psd.weights());
    let ad = a[d - 1];
    let mut f = DMatrix::zeros(dim, dim);
    for row in 0..dim {
        let j = row + 2;
        let jf = j as f64;
        for i in 0..d - 1 {
            f[(row, 2 * i)] = jf * w[i] * (a[i].powi(j as i32 - 1) - ad.powi(j as i32 - 1));
            f[(row, 2 * i + 1)] =
                a[i].powi(j as i32) - ad.powi(j as i32) + jf * ad.powi(j as i32 - 1) * (ad - a[i]);
        }
    }
    f
}

/// Jacobian of the moment inversion `gamma_{2d-1} -> theta`.
pub fn jacobian_g1(psd: &DiscretePsd) -> Result<DMatrix<f64>> {
    if psd.order() < 2 {
        return Err(Error::InvalidParameter(
            "the moment-inversion Jacobian needs d >= 2".into(),
        ));
    }
    let f = moment_theta_derivative(psd);
    let det = f.determinant();
    if !det.is_finite() || det.abs() < 1e-300 {
        return Err(Error::DegeneratePsd(format!(
            "moment map is singular at {psd} (det {det:e})"
        )));
    }
    f.try_inverse()
        .ok_or_else(|| Error::DegeneratePsd(format!("moment map is singular at {psd}")))
}

/// Derivative of the full parameter `(a_1, w_1, ..., a_d, w_d)` with respect
/// to `theta`.
pub fn full_parameter_derivative(psd: &DiscretePsd) -> DMatrix<f64> {
    let d = psd.order();
    let dim = 2 * d - 2;
    let (a, w) = (psd.atoms(), psd.weights());
    let (ad, wd) = (a[d - 1], w[d - 1]);
    let mut g = DMatrix::zeros(2 * d, dim);
    for i in 0..dim {
        g[(i, i)] = 1.0;
    }
    for i in 0..d - 1 {
        g[(dim, 2 * i)] = -w[i] / wd;
        g[(dim, 2 * i + 1)] = (ad - a[i]) / wd;
        g[(dim + 1, 2 * i + 1)] = -1.0;
    }
    g
}

/// Names `a1, w1, ..., ad, wd` of the full parameter vector.
pub fn parameter_names(d: usize) -> Vec<String> {
    (1..=d).flat_map(|i| [format!("a{i}"), format!("w{i}")]).collect()
}

/// A marginal normal confidence interval for one parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterInterval {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ParameterInterval {
    pub fn covers(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// Output of [`estimate_psd`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsdEstimate {
    pub psd: DiscretePsd,
    pub n: usize,
    pub p: usize,
    pub ratio_c: f64,
    pub level: f64,
    /// Empirical moments `beta_1..beta_{2d-1}`.
    pub beta_hat: Vec<f64>,
    /// Bias-corrected moments.
    pub beta_corrected: Vec<f64>,
    /// Population moments recovered from the corrected moments.
    pub gamma_corrected: MomentVector,
    /// Limiting covariance of `p (theta_hat - theta)`.
    #[serde(skip)]
    pub theta_cov: DMatrix<f64>,
    /// Finite-sample covariance of `(a_1, w_1, ..., a_d, w_d)`.
    #[serde(skip)]
    pub parameter_cov: DMatrix<f64>,
    pub intervals: Vec<ParameterInterval>,
    pub diagnostics: Vec<String>,
}

impl PsdEstimate {
    pub fn interval(&self, name: &str) -> Option<&ParameterInterval> {
        self.intervals.iter().find(|i| i.name == name)
    }
}

/// Two-sided standard normal quantile for a confidence level.
pub(crate) fn normal_quantile_two_sided(level: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + 0.5 * level)
}

/// Configured PSD estimator; the moment backend is a runtime choice.
#[derive(Debug)]
pub struct PsdEstimator {
    order: usize,
    level: f64,
    backend: Box<dyn SpectralMoments>,
}

impl PsdEstimator {
    pub fn new(order: usize, level: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter("psd order must be at least 1".into()));
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "confidence level must lie in (0, 1), got {level}"
            )));
        }
        Ok(Self {
            order,
            level,
            backend: Box::new(EigenMoments),
        })
    }

    pub fn with_backend(mut self, backend: Box<dyn SpectralMoments>) -> Self {
        self.backend = backend;
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn estimate(&self, data: &SampleMatrix) -> Result<PsdEstimate> {
        let d = self.order;
        let (n, p) = (data.n(), data.p());
        if n < 2 * d || p < 2 * d {
            return Err(Error::InvalidDimension(format!(
                "order {d} needs n, p >= {}, got n = {n}, p = {p}",
                2 * d
            )));
        }
        let c = p as f64 / n as f64;
        let y = spatial_sign(data)?;
        let k = 2 * d - 1;
        let beta_hat = self.backend.moments(&y, k).map_err(|e| e.at_stage("moments"))?;
        let mut diagnostics = Vec::new();

        if d == 1 {
            // both parameters are pinned to one by the constraints
            let intervals = parameter_names(1)
                .into_iter()
                .map(|name| ParameterInterval {
                    name,
                    estimate: 1.0,
                    std_error: 0.0,
                    lower: 1.0,
                    upper: 1.0,
                })
                .collect();
            return Ok(PsdEstimate {
                psd: DiscretePsd::unit(),
                n,
                p,
                ratio_c: c,
                level: self.level,
                beta_hat: beta_hat.values().to_vec(),
                beta_corrected: beta_hat.values().to_vec(),
                gamma_corrected: MomentVector::gamma(vec![1.0])?,
                theta_cov: DMatrix::zeros(0, 0),
                parameter_cov: DMatrix::zeros(2, 2),
                intervals,
                diagnostics,
            });
        }

        let corrected = bias_correct(&beta_hat, c, p, d)?;
        if corrected.first_pass.projected {
            diagnostics.push("first-pass estimate projected onto the parameter space".into());
        }
        let beta_corrected = corrected.beta_corrected;
        let gamma_corrected = corrected.gamma_corrected;
        let solved =
            g1_solve_detailed(&gamma_corrected, d).map_err(|e| e.at_stage("corrected inversion"))?;
        if solved.projected {
            diagnostics.push("corrected estimate projected onto the parameter space".into());
        }
        let psd = solved.psd;

        let theta_cov = theta_covariance(&psd, c, p).map_err(|e| e.at_stage("delta method"))?;
        let g = full_parameter_derivative(&psd);
        let parameter_cov = linalg::symmetrize(&(&g * &theta_cov * g.transpose()));
        let z = normal_quantile_two_sided(self.level);
        let estimates: Vec<f64> = psd
            .atoms()
            .iter()
            .zip(psd.weights())
            .flat_map(|(&a, &w)| [a, w])
            .collect();
        let intervals = parameter_names(d)
            .into_iter()
            .zip(estimates)
            .enumerate()
            .map(|(i, (name, estimate))| {
                let var = parameter_cov[(i, i)];
                if var < 0.0 {
                    diagnostics.push(format!("negative variance {var:e} for {name} clamped to 0"));
                }
                let se = var.max(0.0).sqrt();
                ParameterInterval {
                    name,
                    estimate,
                    std_error: se,
                    lower: estimate - z * se,
                    upper: estimate + z * se,
                }
            })
            .collect();

        Ok(PsdEstimate {
            psd,
            n,
            p,
            ratio_c: c,
            level: self.level,
            beta_hat: beta_hat.values().to_vec(),
            beta_corrected: beta_corrected.values().to_vec(),
            gamma_corrected,
            theta_cov: theta_cov * (p as f64).powi(2),
            parameter_cov,
            intervals,
            diagnostics,
        })
    }
}

/// Empirical moments after removing the CLT mean `v / p`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasCorrection {
    /// Order-`d` fit to the uncorrected moments, at which `v` is evaluated.
    pub first_pass: MomentInversion,
    pub beta_corrected: MomentVector,
    pub gamma_corrected: MomentVector,
}

/// Corrects `beta_hat` (through any order `k >= 2d - 1`) using the mean of the
/// moment CLT evaluated at a first-pass order-`d` fit.
pub fn bias_correct(beta_hat: &MomentVector, c: f64, p: usize, d: usize) -> Result<BiasCorrection> {
    let k = beta_hat.order();
    let gamma_first = beta_to_gamma(beta_hat, c)?;
    let first_pass =
        g1_solve_detailed(&gamma_first, d).map_err(|e| e.at_stage("first-pass inversion"))?;
    let mut corrected = beta_hat.values().to_vec();
    if k >= 2 {
        let v = mean_correction(&first_pass.psd, c, k)?;
        for (j, vj) in (2..=k).zip(&v) {
            corrected[j - 1] -= vj / p as f64;
        }
    }
    let beta_corrected = MomentVector::beta(corrected, c)?;
    let gamma_corrected = beta_to_gamma(&beta_corrected, c)?;
    Ok(BiasCorrection {
        first_pass,
        beta_corrected,
        gamma_corrected,
    })
}

/// Finite-sample covariance `J1 J2 Psi J2' J1' / p^2` of `theta_hat`, evaluated
/// at `psd`.
pub fn theta_covariance(psd: &DiscretePsd, c: f64, p: usize) -> Result<DMatrix<f64>> {
    let d = psd.order();
    let k = 2 * d - 1;
    let psi = covariance_matrix(psd, c, k)?;
    let j2 = jacobian_g2_at_gamma(&theta_to_moments(psd, k)?, c)?;
    let j1 = jacobian_g1(psd)?;
    let j = &j1 * &j2;
    let cov = &j * psi * j.transpose() / (p as f64).powi(2);
    Ok(linalg::symmetrize(&cov))
}

/// Runs the full estimation pipeline with the default eigen moment backend.
pub fn estimate_psd(data: &SampleMatrix, d: usize, level: f64) -> Result<PsdEstimate> {
    PsdEstimator::new(d, level)?.estimate(data)
}
