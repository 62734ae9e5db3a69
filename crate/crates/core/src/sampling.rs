//! Elliptical sampling, the spatial-sign transform and the SSCM.
//!
//! Shape matrices are carried as spectra and realised as diagonal matrices:
//! SSCM eigenvalues are invariant under orthogonal changes of basis, so the
//! eigenvectors of the shape matrix never matter here.

use std::fmt;
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, LogNormal, Pareto, StandardNormal};

use crate::error::{Error, Result};
use crate::psd::DiscretePsd;

/// Spectrum of the shape matrix `T = AA'`, normalised so that `tr(T) = p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSpectrum {
    eigenvalues: Vec<f64>,
}

impl ShapeSpectrum {
    /// Builds a spectrum, rescaling it to mean one.
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidDimension("shape spectrum is empty".into()));
        }
        if let Some(bad) = eigenvalues.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "shape eigenvalues must be finite and strictly positive, got {bad}"
            )));
        }
        let mean = eigenvalues.iter().sum::<f64>() / eigenvalues.len() as f64;
        if (mean - 1.0).abs() > 1e-6 {
            log::warn!("shape spectrum has mean {mean}; rescaling to tr(T) = p");
        }
        let eigenvalues = eigenvalues.into_iter().map(|v| v / mean).collect();
        Ok(Self { eigenvalues })
    }

    /// Identity shape of dimension `p`.
    pub fn identity(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidDimension("p must be at least 1".into()));
        }
        Ok(Self {
            eigenvalues: vec![1.0; p],
        })
    }

    /// Realises a discrete spectral distribution in dimension `p`: atom `a_i`
    /// is repeated about `w_i p` times (largest-remainder rounding).
    pub fn from_psd(psd: &DiscretePsd, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidDimension("p must be at least 1".into()));
        }
        let ideal: Vec<f64> = psd.weights().iter().map(|w| w * p as f64).collect();
        let mut counts: Vec<usize> = ideal.iter().map(|x| x.floor() as usize).collect();
        let mut short = p - counts.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..ideal.len()).collect();
        order.sort_by(|&i, &j| {
            let ri = ideal[i] - ideal[i].floor();
            let rj = ideal[j] - ideal[j].floor();
            rj.total_cmp(&ri).then(i.cmp(&j))
        });
        for &i in order.iter().cycle() {
            if short == 0 {
                break;
            }
            counts[i] += 1;
            short -= 1;
        }
        if ideal.iter().zip(&counts).any(|(x, &k)| (x - k as f64).abs() > 1e-9) {
            log::debug!("psd weights are not multiples of 1/{p}; atom counts rounded to {counts:?}");
        }
        let eigenvalues = psd
            .atoms()
            .iter()
            .zip(&counts)
            .flat_map(|(&a, &k)| std::iter::repeat_n(a, k))
            .collect();
        Self::new(eigenvalues)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Law of the radius `w` in `x = w A u`.
///
/// The SSCM discards `w`, so every law yields the same spatial signs; several
/// are provided to exercise that invariance.
pub trait RadiusLaw: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;

    /// Draws one radius for an observation of dimension `p`.
    fn sample(&self, p: usize, rng: &mut dyn rand::RngCore) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantRadius;

impl RadiusLaw for ConstantRadius {
    fn name(&self) -> &'static str {
        "constant"
    }

    fn sample(&self, _p: usize, _rng: &mut dyn rand::RngCore) -> f64 {
        1.0
    }
}

/// Chi radius with `p` degrees of freedom: the Gaussian population.
#[derive(Debug, Clone, Copy)]
pub struct ChiRadius;

impl RadiusLaw for ChiRadius {
    fn name(&self) -> &'static str {
        "chi"
    }

    fn sample(&self, p: usize, rng: &mut dyn rand::RngCore) -> f64 {
        let chi2 = ChiSquared::new(p as f64).expect("p >= 1");
        chi2.sample(rng).sqrt()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LogNormalRadius {
    law: LogNormal<f64>,
}

impl LogNormalRadius {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lognormal radius needs finite mu and sigma > 0, got ({mu}, {sigma})"
            )));
        }
        let law = LogNormal::new(mu, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(Self { law })
    }
}

impl RadiusLaw for LogNormalRadius {
    fn name(&self) -> &'static str {
        "lognormal"
    }

    fn sample(&self, _p: usize, rng: &mut dyn rand::RngCore) -> f64 {
        self.law.sample(rng)
    }
}

/// Pareto radius with unit scale and tail index `alpha`.
#[derive(Debug, Clone, Copy)]
pub struct ParetoRadius {
    law: Pareto<f64>,
}

impl ParetoRadius {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "pareto radius needs alpha > 1, got {alpha}"
            )));
        }
        let law = Pareto::new(1.0, alpha).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(Self { law })
    }
}

impl RadiusLaw for ParetoRadius {
    fn name(&self) -> &'static str {
        "pareto"
    }

    fn sample(&self, _p: usize, rng: &mut dyn rand::RngCore) -> f64 {
        self.law.sample(rng)
    }
}

type RadiusBuilder = fn(&[f64]) -> Result<Box<dyn RadiusLaw>>;

fn expect_params(name: &str, params: &[f64], want: usize) -> Result<()> {
    if params.len() != want {
        return Err(Error::InvalidParameter(format!(
            "radius law `{name}` takes {want} parameter(s), got {}",
            params.len()
        )));
    }
    Ok(())
}

const RADIUS_LAWS: &[(&str, RadiusBuilder)] = &[
    ("constant", |p| {
        expect_params("constant", p, 0)?;
        Ok(Box::new(ConstantRadius))
    }),
    ("chi", |p| {
        expect_params("chi", p, 0)?;
        Ok(Box::new(ChiRadius))
    }),
    ("lognormal", |p| {
        expect_params("lognormal", p, 2)?;
        Ok(Box::new(LogNormalRadius::new(p[0], p[1])?))
    }),
    ("pareto", |p| {
        expect_params("pareto", p, 1)?;
        Ok(Box::new(ParetoRadius::new(p[0])?))
    }),
];

/// Names accepted by [`radius_law`].
pub fn radius_law_names() -> Vec<&'static str> {
    RADIUS_LAWS.iter().map(|(n, _)| *n).collect()
}

/// Looks up a radius law from a spec such as `chi`, `lognormal:0:1` or
/// `pareto:3`.
pub fn radius_law(spec: &str) -> Result<Box<dyn RadiusLaw>> {
    let mut parts = spec.split(':');
    let name = parts.next().unwrap_or_default().trim();
    let params = parts
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad radius parameter `{s}` in `{spec}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let (_, build) = RADIUS_LAWS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::UnknownName {
            kind: "radius law",
            name: name.to_string(),
            available: radius_law_names().join(", "),
        })?;
    build(&params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Raw,
    SpatialSign,
}

/// An `n x p` data matrix, one observation per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: DMatrix<f64>,
    flavor: Flavor,
}

impl SampleMatrix {
    pub fn raw(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidDimension(format!(
                "sample matrix must be non-empty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("sample matrix has non-finite entries".into()));
        }
        Ok(Self {
            data,
            flavor: Flavor::Raw,
        })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    /// Dimension-to-sample-size ratio `p / n`.
    pub fn ratio(&self) -> f64 {
        self.p() as f64 / self.n() as f64
    }

    /// Multiplies every entry by `factor`; the result is raw data.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::raw(&self.data * factor)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        read_csv_matrix(reader).and_then(Self::raw)
    }

    pub fn read_csv_path(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    /// Writes the matrix as headerless CSV, full round-trip precision.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut line = String::new();
        for i in 0..self.n() {
            line.clear();
            for j in 0..self.p() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{:?}", self.data[(i, j)]));
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

/// Reads comma-separated rows of numbers. A first row that does not parse as
/// numbers is taken to be a header and skipped.
fn read_csv_matrix<R: Read>(reader: R) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if line == 0 => continue,
            Err(e) => {
                return Err(Error::Parse(format!("line {}: {e}", line + 1)));
            }
        };
        match ncols {
            None => ncols = Some(row.len()),
            Some(k) if k != row.len() => {
                return Err(Error::Parse(format!(
                    "line {}: expected {k} fields, found {}",
                    line + 1,
                    row.len()
                )));
            }
            _ => {}
        }
        values.extend(row);
        nrows += 1;
    }
    let ncols = ncols.ok_or_else(|| Error::Parse("no numeric rows in CSV input".into()))?;
    Ok(DMatrix::from_row_slice(nrows, ncols, &values))
}

fn fill_direction<R: Rng + ?Sized>(buf: &mut [f64], rng: &mut R) {
    loop {
        let mut norm2 = 0.0;
        for v in buf.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v = z;
            norm2 += z * z;
        }
        if norm2 > 0.0 {
            let norm = norm2.sqrt();
            buf.iter_mut().for_each(|v| *v /= norm);
            return;
        }
    }
}

/// Uniform draw from the unit sphere in `R^p`.
pub fn sample_sphere<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Result<DVector<f64>> {
    if p == 0 {
        return Err(Error::InvalidDimension("sphere dimension must be at least 1".into()));
    }
    let mut buf = vec![0.0; p];
    fill_direction(&mut buf, rng);
    Ok(DVector::from_vec(buf))
}

/// Draws `n` i.i.d. observations `w A u` with `A = diag(sqrt(eigenvalues))`.
///
/// All directions are drawn before any radius, so the direction stream is the
/// same for every radius law.
pub fn sample_elliptical<R: Rng + ?Sized>(
    n: usize,
    shape: &ShapeSpectrum,
    radius: &dyn RadiusLaw,
    rng: &mut R,
) -> Result<SampleMatrix> {
    if n == 0 {
        return Err(Error::InvalidDimension("sample size must be at least 1".into()));
    }
    let p = shape.dim();
    let scale: Vec<f64> = shape.eigenvalues().iter().map(|v| v.sqrt()).collect();
    let mut rows = vec![0.0; n * p];
    for row in rows.chunks_exact_mut(p) {
        fill_direction(row, rng);
        row.iter_mut().zip(&scale).for_each(|(v, s)| *v *= s);
    }
    let mut adapter = RngAdapter(rng);
    for row in rows.chunks_exact_mut(p) {
        let w = radius.sample(p, &mut adapter);
        row.iter_mut().for_each(|v| *v *= w);
    }
    SampleMatrix::raw(DMatrix::from_row_slice(n, p, &rows))
}

/// Bridges a possibly unsized generic generator to `dyn RngCore`.
struct RngAdapter<'a, R: Rng + ?Sized>(&'a mut R);

impl<R: Rng + ?Sized> rand::RngCore for RngAdapter<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// Projects every row onto the sphere of radius `sqrt(p)`.
pub fn spatial_sign(x: &SampleMatrix) -> Result<SampleMatrix> {
    if x.flavor != Flavor::Raw {
        return Err(Error::Contract(
            "spatial_sign expects raw observations".into(),
        ));
    }
    let p = x.p();
    let root_p = (p as f64).sqrt();
    let mut data = x.data.clone();
    for (i, mut row) in data.row_iter_mut().enumerate() {
        let norm = row.norm();
        if norm == 0.0 {
            return Err(Error::DegenerateObservation { row: i });
        }
        row *= root_p / norm;
    }
    Ok(SampleMatrix {
        data,
        flavor: Flavor::SpatialSign,
    })
}

/// The spatial-sign covariance matrix `B = Y'Y / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sscm {
    matrix: DMatrix<f64>,
    n: usize,
}

impl Sscm {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ratio(&self) -> f64 {
        self.p() as f64 / self.n as f64
    }
}

pub fn sscm(y: &SampleMatrix) -> Result<Sscm> {
    if y.flavor != Flavor::SpatialSign {
        return Err(Error::Contract(
            "sscm expects spatial-sign observations".into(),
        ));
    }
    let n = y.n();
    let mut matrix = y.data.transpose() * &y.data;
    matrix /= n as f64;
    // Enforce exact symmetry; the product is symmetric only up to rounding.
    for i in 0..matrix.nrows() {
        for j in 0..i {
            let avg = 0.5 * (matrix[(i, j)] + matrix[(j, i)]);
            matrix[(i, j)] = avg;
            matrix[(j, i)] = avg;
        }
    }
    Ok(Sscm { matrix, n })
}
