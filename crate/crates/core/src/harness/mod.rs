//! Reproducible Monte Carlo experiments.
//!
//! An [`ExperimentSpec`] names a design, a population spectrum (a registered
//! model or an explicit `atom:weight` list) and the grid of `(n, c, x)` cells.
//! Replication `r` of the `(n, c)` cell draws from its own counter-based
//! stream, so tables do not depend on the number of worker threads. The same
//! streams are reused across `x`, which gives power curves common random
//! numbers.

mod designs;
mod models;
mod table;

use std::fmt;

use rayon::ThreadPoolBuilder;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::psd::DiscretePsd;
use crate::rng::StreamFactory;
use crate::sampling::{radius_law, sample_elliptical, RadiusLaw, SampleMatrix, ShapeSpectrum};

pub use designs::{
    design, design_names, parse_grid, DensityDesign, EstimationDesign, SizePowerDesign,
};
pub use models::{merged, model_names, Model};
pub use table::{binomial_se, ks_standard_normal, summarize, ResultRow, ResultTable, Summary};

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "SSCM_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    Estimation,
    SizePower,
    Density,
}

impl Design {
    pub fn name(self) -> &'static str {
        match self {
            Design::Estimation => "estimation",
            Design::SizePower => "size_power",
            Design::Density => "density",
        }
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Accepts either a number or a list of numbers.
fn one_or_many<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(de)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

/// Configuration of one experiment; mirrors the JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub design: Design,
    /// Registered model name; see [`model_names`].
    pub model: Option<String>,
    /// Explicit spectrum `atom:weight,...`; overrides `model`.
    pub psd: Option<String>,
    /// Ratios `c = p/n`; a single number is accepted.
    #[serde(deserialize_with = "one_or_many")]
    pub c: Vec<f64>,
    pub n_list: Vec<usize>,
    /// Separations for `model3`/`model4`.
    pub x_list: Vec<f64>,
    pub replications: usize,
    /// Confidence level of the estimation intervals.
    pub level: f64,
    /// Significance level of the order test.
    pub alpha: f64,
    /// Hypothesised order for the test design.
    pub d0: Option<usize>,
    /// Fitted order for the estimation design.
    pub order: Option<usize>,
    pub seed: u64,
    /// Radius law, e.g. `chi`, `constant`, `lognormal:0:1`, `pareto:3`.
    pub radius: String,
    /// Worker threads; `SSCM_THREADS` takes precedence.
    pub threads: Option<usize>,
    /// Moment backend (`eigen` or `trace`).
    pub backend: String,
    /// Density grid `lo:hi:count`.
    pub grid: Option<String>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            design: Design::Estimation,
            model: None,
            psd: None,
            c: Vec::new(),
            n_list: Vec::new(),
            x_list: Vec::new(),
            replications: 2000,
            level: 0.95,
            alpha: 0.05,
            d0: None,
            order: None,
            seed: 0,
            radius: "chi".into(),
            threads: None,
            backend: "eigen".into(),
            grid: None,
        }
    }
}

/// A resolved `(n, c, x)` cell.
#[derive(Debug, Clone)]
pub struct Cell {
    pub n: usize,
    pub p: usize,
    pub c: f64,
    pub x: Option<f64>,
    pub psd: DiscretePsd,
    shape: ShapeSpectrum,
    /// Index of the `(n, c)` pair; selects the block of random streams.
    stream_block: u64,
}

impl Cell {
    /// Raw observations for replication `rep`.
    pub fn sample(&self, spec: &ExperimentSpec, radius: &dyn RadiusLaw, rep: u64) -> Result<SampleMatrix> {
        let mut rng = StreamFactory::new(spec.seed).stream((self.stream_block << 32) | rep);
        sample_elliptical(self.n, &self.shape, radius, &mut rng)
    }
}

/// `p = round(n c)`, with a warning when `n c` is not an integer.
pub fn dimension_for(n: usize, c: f64) -> Result<usize> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("ratio c must be positive, got {c}")));
    }
    let exact = n as f64 * c;
    let p = exact.round();
    if (exact - p).abs() > 1e-9 {
        log::warn!("n c = {exact} is not an integer; using p = {p}");
    }
    if p < 1.0 {
        return Err(Error::InvalidDimension(format!("n = {n}, c = {c} gives p = 0")));
    }
    Ok(p as usize)
}

impl ExperimentSpec {
    /// Spec for `design` with the ratios, sample sizes and `x` grid of a
    /// registered model.
    pub fn for_model(design: Design, model: &str) -> Result<Self> {
        let m = Model::by_name(model)?;
        let (c, n_list, x_list) = m.defaults();
        Ok(Self {
            design,
            model: Some(model.to_string()),
            c,
            n_list,
            x_list,
            ..Self::default()
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("experiment config: {e}")))
    }

    fn model_entry(&self) -> Result<Option<Model>> {
        self.model.as_deref().map(Model::by_name).transpose()
    }

    /// Spectrum at separation `x` (ignored unless the model takes one).
    pub fn psd_at(&self, x: Option<f64>) -> Result<DiscretePsd> {
        if let Some(s) = &self.psd {
            return s.parse();
        }
        match self.model_entry()? {
            Some(m) => m.psd(x.unwrap_or(0.0)),
            None => Err(Error::InvalidParameter(
                "experiment needs either `model` or `psd`".into(),
            )),
        }
    }

    pub fn ratios(&self) -> Result<Vec<f64>> {
        if !self.c.is_empty() {
            return Ok(self.c.clone());
        }
        match self.model_entry()? {
            Some(m) => Ok(m.defaults().0),
            None => Err(Error::InvalidParameter("no ratio c given".into())),
        }
    }

    pub fn sample_sizes(&self) -> Result<Vec<usize>> {
        if !self.n_list.is_empty() {
            return Ok(self.n_list.clone());
        }
        match self.model_entry()? {
            Some(m) => Ok(m.defaults().1),
            None => Err(Error::InvalidParameter("no sample sizes given".into())),
        }
    }

    /// `x` values, or a single `None` when the spectrum is fixed.
    pub fn separations(&self) -> Result<Vec<Option<f64>>> {
        match self.model_entry()? {
            Some(m) if m.takes_x() && self.psd.is_none() => {
                let xs = if self.x_list.is_empty() {
                    m.defaults().2
                } else {
                    self.x_list.clone()
                };
                Ok(xs.into_iter().map(Some).collect())
            }
            _ => Ok(vec![None]),
        }
    }

    /// Hypothesised order for the test design.
    pub fn null_order(&self) -> Result<usize> {
        if let Some(d0) = self.d0 {
            return Ok(d0);
        }
        match self.model_entry()? {
            Some(m) => Ok(m.null_order()),
            None => Err(Error::InvalidParameter("the test design needs d0".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be at least 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidParameter(format!("level must lie in (0, 1), got {}", self.level)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.replications as u64 >= 1 << 32 {
            return Err(Error::InvalidParameter("too many replications".into()));
        }
        radius_law(&self.radius)?;
        crate::moments::moment_backend(&self.backend)?;
        Ok(())
    }

    /// All cells in table order: `n` outermost, then `c`, then `x`.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let ratios = self.ratios()?;
        let sizes = self.sample_sizes()?;
        let xs = self.separations()?;
        let mut cells = Vec::new();
        for (i, &n) in sizes.iter().enumerate() {
            for (j, &c) in ratios.iter().enumerate() {
                let p = dimension_for(n, c)?;
                for &x in &xs {
                    let psd = self.psd_at(x)?;
                    let shape = ShapeSpectrum::from_psd(&psd, p)?;
                    cells.push(Cell {
                        n,
                        p,
                        c: p as f64 / n as f64,
                        x,
                        psd,
                        shape,
                        stream_block: (i * ratios.len() + j) as u64,
                    });
                }
            }
        }
        Ok(cells)
    }

    /// Worker count: `SSCM_THREADS`, then `threads`, else the rayon default.
    pub fn worker_threads(&self) -> Result<Option<usize>> {
        match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse::<usize>()
                .map(Some)
                .map_err(|_| Error::Parse(format!("{THREADS_ENV}={v} is not a thread count"))),
            Err(_) => Ok(self.threads),
        }
    }
}

/// Experiment runner behind the design registry.
pub trait ExperimentDesign: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;

    /// Runs every cell; parallelism comes from the ambient rayon pool.
    fn run(&self, spec: &ExperimentSpec) -> Result<ResultTable>;
}

/// Validates `spec`, builds the worker pool and runs its design.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    let runner = design(spec.design.name())?;
    let mut builder = ThreadPoolBuilder::new();
    if let Some(t) = spec.worker_threads()? {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot build worker pool: {e}")))?;
    pool.install(|| runner.run(spec))
}

pub fn run_estimation_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    check_design(spec, Design::Estimation)?;
    run_experiment(spec)
}

pub fn run_test_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    check_design(spec, Design::SizePower)?;
    run_experiment(spec)
}

fn check_design(spec: &ExperimentSpec, want: Design) -> Result<()> {
    if spec.design != want {
        return Err(Error::InvalidParameter(format!(
            "expected a {want} design, got {}",
            spec.design
        )));
    }
    Ok(())
}

/// The raw sample that replication `rep` of the first cell draws.
pub fn simulate_dataset(spec: &ExperimentSpec, rep: u64) -> Result<SampleMatrix> {
    spec.validate()?;
    let cell = spec
        .cells()?
        .into_iter()
        .next()
        .ok_or_else(|| Error::InvalidParameter("experiment has no cells".into()))?;
    let radius = radius_law(&spec.radius)?;
    cell.sample(spec, radius.as_ref(), rep)
}
