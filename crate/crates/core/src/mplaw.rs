//! The generalized Marčenko–Pastur law `F^{c,H}`: Stieltjes transform,
//! density and support.
//!
//! The transform solves
//!
//! ```text
//! m = int dH(t) / (t (1 - c - c z m) - z),      z in C+,
//! ```
//!
//! in the class `{m : -(1 - c)/z + c m in C+}`. Equivalently the companion
//! transform `mu = c m - (1 - c)/z` inverts
//!
//! ```text
//! z = -1/mu + c int t / (1 + t mu) dH(t).
//! ```

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::psd::DiscretePsd;

/// Default imaginary offset used to evaluate the density on the real axis.
pub const DEFAULT_EPS: f64 = 1e-6;

const RESIDUAL_TOL: f64 = 1e-12;

/// A solved point of the Stieltjes transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StieltjesPoint {
    pub z: Complex64,
    /// Transform of `F^{c,H}`.
    pub m: Complex64,
    /// Transform of the companion law `c F^{c,H} + (1 - c) delta_0`.
    pub m_under: Complex64,
}

impl StieltjesPoint {
    fn from_m(z: Complex64, m: Complex64, c: f64) -> Self {
        Self {
            z,
            m,
            m_under: c * m - (1.0 - c) / z,
        }
    }

    fn from_m_under(z: Complex64, m_under: Complex64, c: f64) -> Self {
        Self {
            z,
            m: (m_under + (1.0 - c) / z) / c,
            m_under,
        }
    }

    /// Density estimate `Im m / pi` (meaningful when `z` is close to the real
    /// axis).
    pub fn density(&self) -> f64 {
        self.m.im / std::f64::consts::PI
    }
}

/// Right-hand side of the fixed-point equation for `m`.
fn mp_map(m: Complex64, z: Complex64, psd: &DiscretePsd, c: f64) -> Complex64 {
    let factor = 1.0 - c - c * z * m;
    psd.atoms()
        .iter()
        .zip(psd.weights())
        .map(|(&t, &w)| w / (t * factor - z))
        .sum()
}

/// Relative residual of the solution, taking the better conditioned of the
/// two equivalent forms: `|m - map(m)| / max(1, |m|)` or the same for the
/// companion fixed point `mu = 1 / (-z + c int t / (1 + t mu) dH)`. Near
/// `z = 0` with `c > 1` the `m` form cancels catastrophically while `mu`
/// stays bounded.
pub fn residual(point: &StieltjesPoint, psd: &DiscretePsd, c: f64) -> f64 {
    let direct = (point.m - mp_map(point.m, point.z, psd, c)).norm() / point.m.norm().max(1.0);
    let mu = point.m_under;
    let companion = (mu * (inverse_companion(mu, psd, c) + 1.0 / mu - point.z) - 1.0).norm()
        * mu.norm()
        / mu.norm().max(1.0);
    direct.min(companion)
}

/// `z(mu) = -1/mu + c int t / (1 + t mu) dH(t)` for complex `mu`.
pub fn inverse_companion(mu: Complex64, psd: &DiscretePsd, c: f64) -> Complex64 {
    -1.0 / mu
        + c * psd
            .atoms()
            .iter()
            .zip(psd.weights())
            .map(|(&t, &w)| w * t / (1.0 + t * mu))
            .sum::<Complex64>()
}

fn validate(z: Complex64, c: f64) -> Result<()> {
    if !(z.im > 0.0 && z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "the Stieltjes transform is solved for Im z > 0, got z = {z}"
        )));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("ratio c must be positive, got {c}")));
    }
    Ok(())
}

/// Checks the residual and the uniqueness class of a candidate solution.
fn accept(point: StieltjesPoint, psd: &DiscretePsd, c: f64) -> Result<StieltjesPoint> {
    let r = residual(&point, psd, c);
    if !(r < RESIDUAL_TOL) || !(point.m_under.im > 0.0) || point.m.im < 0.0 {
        return Err(Error::SolverFailure {
            z: point.z,
            residual: r,
        });
    }
    Ok(point)
}

/// Strategy for solving the Marčenko–Pastur equation at one point.
pub trait StieltjesSolver: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn solve(&self, z: Complex64, psd: &DiscretePsd, c: f64) -> Result<StieltjesPoint>;
}

/// Damped fixed-point iteration on the `m` equation. The step is halved once
/// the residual stops decreasing.
#[derive(Debug, Clone, Copy)]
pub struct FixedPointSolver {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for FixedPointSolver {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            tol: 1e-13,
        }
    }
}

impl StieltjesSolver for FixedPointSolver {
    fn name(&self) -> &'static str {
        "fixed-point"
    }

    fn solve(&self, z: Complex64, psd: &DiscretePsd, c: f64) -> Result<StieltjesPoint> {
        validate(z, c)?;
        let mut m = -1.0 / z;
        let mut damping = 1.0;
        let mut last = f64::INFINITY;
        for _ in 0..self.max_iter {
            let next = mp_map(m, z, psd, c);
            let step = next - m;
            let size = step.norm();
            if !size.is_finite() {
                break;
            }
            if size >= last {
                damping = 0.5;
            }
            last = size;
            m += damping * step;
            if size <= self.tol * m.norm().max(1.0) {
                return accept(StieltjesPoint::from_m(z, m, c), psd, c);
            }
        }
        Err(Error::SolverFailure {
            z,
            residual: (m - mp_map(m, z, psd, c)).norm(),
        })
    }
}

/// Clears denominators in the companion equation and takes the unique root
/// in the upper half plane.
#[derive(Debug, Clone, Copy, Default)]
pub struct PolynomialSolver;

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

impl PolynomialSolver {
    /// Coefficients (low to high) of
    /// `(z mu + 1) prod_i (1 + a_i mu) - c mu sum_i w_i a_i prod_{k != i} (1 + a_k mu)`.
    fn coefficients(z: Complex64, psd: &DiscretePsd, c: f64) -> Vec<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        let factors: Vec<[Complex64; 2]> =
            psd.atoms().iter().map(|&a| [one, Complex64::new(a, 0.0)]).collect();
        let product = |skip: Option<usize>| {
            factors
                .iter()
                .enumerate()
                .filter(|(i, _)| Some(*i) != skip)
                .fold(vec![one], |acc, (_, f)| poly_mul(&acc, f))
        };
        let d = psd.order();
        let mut coeffs = poly_mul(&[one, z], &product(None));
        for (i, (&a, &w)) in psd.atoms().iter().zip(psd.weights()).enumerate() {
            let term = poly_mul(&[Complex64::new(-c * w * a, 0.0)], &product(Some(i)));
            // multiply by mu
            for (k, t) in term.iter().enumerate() {
                coeffs[k + 1] += t;
            }
        }
        debug_assert_eq!(coeffs.len(), d + 2);
        coeffs
    }

    fn polish(mu: Complex64, z: Complex64, psd: &DiscretePsd, c: f64) -> Complex64 {
        let mut mu = mu;
        for _ in 0..6 {
            let f = inverse_companion(mu, psd, c) - z;
            let df = 1.0 / (mu * mu)
                - c * psd
                    .atoms()
                    .iter()
                    .zip(psd.weights())
                    .map(|(&t, &w)| w * t * t / ((1.0 + t * mu) * (1.0 + t * mu)))
                    .sum::<Complex64>();
            let step = f / df;
            if !step.norm().is_finite() {
                break;
            }
            let next = mu - step;
            if next.im <= 0.0 {
                break;
            }
            mu = next;
            if step.norm() <= 1e-16 * mu.norm() {
                break;
            }
        }
        mu
    }
}

impl StieltjesSolver for PolynomialSolver {
    fn name(&self) -> &'static str {
        "polynomial"
    }

    fn solve(&self, z: Complex64, psd: &DiscretePsd, c: f64) -> Result<StieltjesPoint> {
        validate(z, c)?;
        let roots = linalg::complex_roots(&Self::coefficients(z, psd, c))?;
        let mu = roots
            .into_iter()
            .filter(|r| r.im > 0.0 && r.norm().is_finite())
            .max_by(|a, b| a.im.total_cmp(&b.im))
            .ok_or(Error::SolverFailure {
                z,
                residual: f64::INFINITY,
            })?;
        let mu = Self::polish(mu, z, psd, c);
        accept(StieltjesPoint::from_m_under(z, mu, c), psd, c)
    }
}

/// Fixed-point iteration first, root finding when it fails.
#[derive(Debug, Clone, Copy, Default)]
pub struct FallbackSolver {
    pub fixed_point: FixedPointSolver,
    pub polynomial: PolynomialSolver,
}

impl StieltjesSolver for FallbackSolver {
    fn name(&self) -> &'static str {
        "auto"
    }

    fn solve(&self, z: Complex64, psd: &DiscretePsd, c: f64) -> Result<StieltjesPoint> {
        validate(z, c)?;
        match self.fixed_point.solve(z, psd, c) {
            Ok(point) => Ok(point),
            Err(first) => self.polynomial.solve(z, psd, c).map_err(|second| {
                log::debug!("both Stieltjes solvers failed at {z}: {first}; {second}");
                second
            }),
        }
    }
}

type SolverBuilder = fn() -> Box<dyn StieltjesSolver>;

const SOLVERS: &[(&str, SolverBuilder)] = &[
    ("auto", || Box::new(FallbackSolver::default())),
    ("fixed-point", || Box::new(FixedPointSolver::default())),
    ("polynomial", || Box::new(PolynomialSolver)),
];

pub fn solver_names() -> Vec<&'static str> {
    SOLVERS.iter().map(|(n, _)| *n).collect()
}

pub fn solver(name: &str) -> Result<Box<dyn StieltjesSolver>> {
    SOLVERS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, build)| build())
        .ok_or_else(|| Error::UnknownName {
            kind: "Stieltjes solver",
            name: name.to_string(),
            available: solver_names().join(", "),
        })
}

/// Solves at `z` with the default fixed-point-then-roots strategy.
pub fn stieltjes_solve(z: Complex64, psd: &DiscretePsd, c: f64) -> Result<StieltjesPoint> {
    FallbackSolver::default().solve(z, psd, c)
}

/// Density `Im m(x + i eps) / pi` on a grid; failures are reported per point.
pub fn density_eval(x_grid: &[f64], psd: &DiscretePsd, c: f64, eps: f64) -> Vec<Result<f64>> {
    density_eval_with(&FallbackSolver::default(), x_grid, psd, c, eps)
}

pub fn density_eval_with(
    solver: &dyn StieltjesSolver,
    x_grid: &[f64],
    psd: &DiscretePsd,
    c: f64,
    eps: f64,
) -> Vec<Result<f64>> {
    x_grid
        .iter()
        .map(|&x| {
            if !(eps > 0.0) {
                return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
            }
            solver
                .solve(Complex64::new(x, eps), psd, c)
                .map(|pt| pt.density())
        })
        .collect()
}

/// Support of `F^{c,H}` on the positive axis, plus its atom at zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportIntervals {
    pub intervals: Vec<(f64, f64)>,
    pub zero_atom: bool,
    pub zero_mass: f64,
}

impl SupportIntervals {
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        (self.zero_atom && x.abs() <= tol)
            || self
                .intervals
                .iter()
                .any(|&(l, r)| x >= l - tol && x <= r + tol)
    }

    /// Total length of the continuous part.
    pub fn length(&self) -> f64 {
        self.intervals.iter().map(|(l, r)| r - l).sum()
    }
}

fn z_real(mu: f64, psd: &DiscretePsd, c: f64) -> f64 {
    -1.0 / mu
        + c * psd
            .atoms()
            .iter()
            .zip(psd.weights())
            .map(|(&t, &w)| w * t / (1.0 + t * mu))
            .sum::<f64>()
}

fn dz_real(mu: f64, psd: &DiscretePsd, c: f64) -> f64 {
    1.0 / (mu * mu)
        - c * psd
            .atoms()
            .iter()
            .zip(psd.weights())
            .map(|(&t, &w)| w * t * t / ((1.0 + t * mu) * (1.0 + t * mu)))
            .sum::<f64>()
}

/// Boundary of a scanned segment of the real `mu` axis.
#[derive(Debug, Clone, Copy, PartialEq)]
enum End {
    /// `mu -> -inf` or `+inf`: z tends to zero.
    Infinite,
    /// `mu -> 0`: z tends to `+inf` from the left, `-inf` from the right.
    Zero,
    /// A pole `-1/a_i`.
    Pole(f64),
}

/// A segment of the `mu` axis between consecutive singularities, mapped from
/// the unit interval.
struct Segment {
    left: End,
    right: End,
}

impl Segment {
    fn point(&self, t: f64) -> f64 {
        match (self.left, self.right) {
            (End::Infinite, End::Pole(r)) => r - (1.0 - t) / t * r.abs(),
            (End::Zero, End::Infinite) => t / (1.0 - t),
            (l, r) => {
                let l = Self::finite(l);
                let r = Self::finite(r);
                l + (r - l) * t
            }
        }
    }

    fn finite(e: End) -> f64 {
        match e {
            End::Pole(v) => v,
            End::Zero => 0.0,
            End::Infinite => unreachable!("infinite ends are mapped separately"),
        }
    }

    /// Limit of z when a segment end is approached from inside the segment.
    fn limit(end: End, at_left_end: bool) -> f64 {
        match (end, at_left_end) {
            (End::Infinite, _) => 0.0,
            // mu -> 0+ and mu -> 0-
            (End::Zero, true) => f64::NEG_INFINITY,
            (End::Zero, false) => f64::INFINITY,
            // right of a pole 1 + a mu -> 0+, left of it 0-
            (End::Pole(_), true) => f64::INFINITY,
            (End::Pole(_), false) => f64::NEG_INFINITY,
        }
    }
}

const SCAN_POINTS: usize = 4096;

/// Locates the support from the increasing branches of `z(mu)` on the real
/// axis: `x` lies outside the support exactly when `x = z(mu)` for some real
/// `mu` with `z'(mu) > 0`.
pub fn support_find(psd: &DiscretePsd, c: f64) -> Result<SupportIntervals> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("ratio c must be positive, got {c}")));
    }
    // poles sorted ascending: -1/a_1 < ... < -1/a_d < 0
    let poles: Vec<f64> = psd.atoms().iter().map(|a| -1.0 / a).collect();
    let mut segments = Vec::new();
    segments.push(Segment {
        left: End::Infinite,
        right: End::Pole(poles[0]),
    });
    for w in poles.windows(2) {
        segments.push(Segment {
            left: End::Pole(w[0]),
            right: End::Pole(w[1]),
        });
    }
    segments.push(Segment {
        left: End::Pole(*poles.last().unwrap()),
        right: End::Zero,
    });
    segments.push(Segment {
        left: End::Zero,
        right: End::Infinite,
    });

    let mut images: Vec<(f64, f64)> = Vec::new();
    for seg in &segments {
        // cosine spacing resolves critical points crowding the ends
        let ts: Vec<f64> = (0..SCAN_POINTS)
            .map(|k| 0.5 - 0.5 * (std::f64::consts::PI * (k as f64 + 0.5) / SCAN_POINTS as f64).cos())
            .collect();
        let deriv = |t: f64| dz_real(seg.point(t), psd, c);
        let mut crit = Vec::new();
        for w in ts.windows(2) {
            let (fa, fb) = (deriv(w[0]), deriv(w[1]));
            if !(fa.is_finite() && fb.is_finite()) {
                return Err(Error::SupportResolution(format!(
                    "non-finite z'(mu) while scanning near mu = {}",
                    seg.point(w[0])
                )));
            }
            if fa == 0.0 {
                crit.push(w[0]);
            } else if fa.signum() != fb.signum() && fb != 0.0 {
                let (mut lo, mut hi) = (w[0], w[1]);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if deriv(mid).signum() == fa.signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                crit.push(0.5 * (lo + hi));
            }
        }
        // sub-intervals between critical points; keep the increasing ones
        let mut bounds = vec![0.0];
        bounds.extend(&crit);
        bounds.push(1.0);
        for (i, w) in bounds.windows(2).enumerate() {
            let mid = 0.5 * (w[0] + w[1]);
            if !(deriv(mid) > 0.0) {
                continue;
            }
            let lo = if i == 0 {
                Segment::limit(seg.left, true)
            } else {
                z_real(seg.point(w[0]), psd, c)
            };
            let hi = if i == bounds.len() - 2 {
                Segment::limit(seg.right, false)
            } else {
                z_real(seg.point(w[1]), psd, c)
            };
            if lo < hi {
                images.push((lo, hi));
            }
        }
    }
    if images.is_empty() {
        return Err(Error::SupportResolution(
            "no increasing branch of z(mu) found".into(),
        ));
    }

    images.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (l, r) in images {
        match merged.last_mut() {
            Some(last) if l < last.1 => last.1 = last.1.max(r),
            _ => merged.push((l, r)),
        }
    }
    let scale = psd.atoms().last().copied().unwrap_or(1.0) * (1.0 + c.sqrt()).powi(2);
    let min_len = 1e-12 * scale;
    let mut intervals = Vec::new();
    let mut cursor = 0.0f64;
    for (l, r) in merged {
        if r <= cursor {
            continue;
        }
        if l > cursor + min_len {
            intervals.push((cursor, l));
        }
        cursor = cursor.max(r);
    }
    if cursor.is_finite() {
        return Err(Error::SupportResolution(format!(
            "increasing branches do not cover a neighbourhood of +inf (last edge {cursor})"
        )));
    }
    let zero_atom = c > 1.0;
    Ok(SupportIntervals {
        intervals,
        zero_atom,
        zero_mass: if zero_atom { 1.0 - 1.0 / c } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mp_density(x: f64, c: f64) -> f64 {
        let (a, b) = ((1.0 - c.sqrt()).powi(2), (1.0 + c.sqrt()).powi(2));
        if x <= a || x >= b {
            0.0
        } else {
            ((b - x) * (x - a)).sqrt() / (2.0 * std::f64::consts::PI * c * x)
        }
    }

    #[test]
    fn closed_form_density_at_one() {
        let pt = stieltjes_solve(Complex64::new(1.0, 1e-9), &DiscretePsd::unit(), 1.0).unwrap();
        let want = 3f64.sqrt() / (2.0 * std::f64::consts::PI);
        assert!((pt.density() - want).abs() < 1e-6, "{} vs {want}", pt.density());
        assert!(residual(&pt, &DiscretePsd::unit(), 1.0) < 1e-12);
    }

    #[test]
    fn solvers_agree_off_axis() {
        let psd = DiscretePsd::new(vec![0.5, 1.5], vec![0.5, 0.5]).unwrap();
        for &(x, y) in &[(0.3, 1.0), (2.0, 0.5), (5.0, 0.1), (-1.0, 2.0)] {
            let z = Complex64::new(x, y);
            for c in [0.25, 1.0, 2.0] {
                let a = FixedPointSolver::default().solve(z, &psd, c).unwrap();
                let b = PolynomialSolver.solve(z, &psd, c).unwrap();
                assert!((a.m - b.m).norm() < 1e-10, "z = {z}, c = {c}");
            }
        }
    }

    #[test]
    fn companion_identity_and_inversion() {
        let psd = DiscretePsd::new(vec![0.2, 1.0, 1.8], vec![0.3, 0.4, 0.3]).unwrap();
        for c in [0.25, 1.0, 3.0] {
            for x in [0.1, 0.7, 1.3, 2.5, 4.0] {
                let z = Complex64::new(x, 1e-3);
                let pt = stieltjes_solve(z, &psd, c).unwrap();
                let expect = c * pt.m - (1.0 - c) / z;
                assert!((pt.m_under - expect).norm() < 1e-10);
                assert!((inverse_companion(pt.m_under, &psd, c) - z).norm() < 1e-10);
                assert!(pt.m.im >= 0.0);
            }
        }
    }

    #[test]
    fn rejects_lower_half_plane() {
        let r = stieltjes_solve(Complex64::new(1.0, -1.0), &DiscretePsd::unit(), 1.0);
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn density_matches_closed_form_at_c_one() {
        let grid: Vec<f64> = (1..200).map(|i| i as f64 * 0.02).collect();
        let dens = density_eval(&grid, &DiscretePsd::unit(), 1.0, DEFAULT_EPS);
        for (x, f) in grid.iter().zip(dens) {
            let f = f.unwrap();
            assert!((f - mp_density(*x, 1.0)).abs() < 1e-3, "x = {x}: {f}");
        }
    }

    #[test]
    fn density_positive_exactly_on_mp_support() {
        let c = 0.25;
        let grid: Vec<f64> = (0..300).map(|i| 0.01 + i as f64 * 0.01).collect();
        let dens = density_eval(&grid, &DiscretePsd::unit(), c, DEFAULT_EPS);
        for (x, f) in grid.iter().zip(dens) {
            let f = f.unwrap();
            assert!(f >= -1e-8);
            let inside = *x > 0.25 + 0.01 && *x < 2.25 - 0.01;
            let outside = *x < 0.25 - 0.01 || *x > 2.25 + 0.01;
            if inside {
                assert!(f > 1e-3, "x = {x}: {f}");
            }
            if outside {
                assert!(f < 1e-4, "x = {x}: {f}");
            }
        }
    }

    #[test]
    fn far_from_support_density_vanishes() {
        let psd = DiscretePsd::new(vec![0.5, 1.5], vec![0.5, 0.5]).unwrap();
        for c in [0.5f64, 2.0] {
            let x = 10.0 * (1.0 + c.sqrt()).powi(2);
            let f = density_eval(&[x], &psd, c, DEFAULT_EPS).pop().unwrap().unwrap();
            assert!(f < 1e-4);
        }
    }

    #[test]
    fn classical_support() {
        for c in [0.1, 0.25, 0.5, 0.9] {
            let s = support_find(&DiscretePsd::unit(), c).unwrap();
            assert_eq!(s.intervals.len(), 1);
            let (l, r) = s.intervals[0];
            assert!((l - (1.0 - c.sqrt()).powi(2)).abs() < 1e-9, "c = {c}: {l}");
            assert!((r - (1.0 + c.sqrt()).powi(2)).abs() < 1e-9, "c = {c}: {r}");
            assert!(!s.zero_atom);
        }
        let s = support_find(&DiscretePsd::unit(), 1.0).unwrap();
        assert_eq!(s.intervals.len(), 1);
        assert!(s.intervals[0].0.abs() < 1e-9 && (s.intervals[0].1 - 4.0).abs() < 1e-9);
    }

    #[test]
    fn support_with_zero_atom() {
        let s = support_find(&DiscretePsd::unit(), 4.0).unwrap();
        assert!(s.zero_atom);
        assert!((s.zero_mass - 0.75).abs() < 1e-15);
        let (l, r) = s.intervals[0];
        assert!((l - 1.0).abs() < 1e-9 && (r - 9.0).abs() < 1e-9);
    }

    #[test]
    fn separated_atoms_split_the_support() {
        let psd = DiscretePsd::normalized(vec![1.0, 10.0], vec![0.5, 0.5]).unwrap();
        let s = support_find(&psd, 0.05).unwrap();
        assert_eq!(s.intervals.len(), 2, "{s:?}");
        let model1 = DiscretePsd::new(vec![0.5, 1.5], vec![0.5, 0.5]).unwrap();
        let s = support_find(&model1, 2.0).unwrap();
        assert_eq!(s.intervals.len(), 1);
    }

    #[test]
    fn registry_lookup() {
        for name in solver_names() {
            assert_eq!(solver(name).unwrap().name(), name);
        }
        assert!(solver("newton").is_err());
    }
}
