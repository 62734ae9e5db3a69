use rayon::prelude::*;

use super::table::{binomial_se, summarize};
use super::{Cell, ExperimentDesign, ExperimentSpec, ResultRow, ResultTable};
use crate::error::{Error, Result};
use crate::moments::{moment_backend, sscm_eigenvalues};
use crate::mplaw::{density_eval, DEFAULT_EPS};
use crate::order_test::{OrderTest, OrderTestReport};
use crate::psd::{parameter_names, PsdEstimator};
use crate::sampling::{radius_law, spatial_sign};

/// Runs `f` for every replication in parallel and returns the results in
/// replication order.
fn replicate<T, F>(spec: &ExperimentSpec, f: F) -> Vec<Result<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..spec.replications as u64).into_par_iter().map(f).collect()
}

/// Splits replication outcomes into successes and a failure count. Usage
/// errors are systematic rather than per-draw, so the first one aborts.
fn partition<T>(outcomes: Vec<Result<T>>, cell: &Cell) -> Result<(Vec<T>, usize)> {
    let mut ok = Vec::with_capacity(outcomes.len());
    let mut failures = 0;
    for (rep, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(v) => ok.push(v),
            Err(e) if e.is_usage() => return Err(e),
            Err(e) => {
                log::debug!("replication {rep} (n = {}, c = {}) failed: {e}", cell.n, cell.c);
                failures += 1;
            }
        }
    }
    if failures > 0 {
        log::warn!(
            "{failures} of {} replications failed at n = {}, c = {}",
            failures + ok.len(),
            cell.n,
            cell.c
        );
    }
    Ok((ok, failures))
}

fn x_key(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_else(|| "-".into())
}

/// Point estimates and interval coverage of the order-`d` spectrum.
#[derive(Debug, Clone, Copy, Default)]
pub struct EstimationDesign;

impl ExperimentDesign for EstimationDesign {
    fn name(&self) -> &'static str {
        "estimation"
    }

    fn run(&self, spec: &ExperimentSpec) -> Result<ResultTable> {
        let radius = radius_law(&spec.radius)?;
        let mut table = ResultTable::new(self.name());
        for cell in spec.cells()? {
            let d = spec.order.unwrap_or(cell.psd.order());
            let estimator =
                PsdEstimator::new(d, spec.level)?.with_backend(moment_backend(&spec.backend)?);
            let names = parameter_names(d);
            let truth: Vec<Option<f64>> = if d == cell.psd.order() {
                cell.psd
                    .atoms()
                    .iter()
                    .zip(cell.psd.weights())
                    .flat_map(|(&a, &w)| [Some(a), Some(w)])
                    .collect()
            } else {
                vec![None; 2 * d]
            };
            let outcomes = replicate(spec, |rep| {
                let x = cell.sample(spec, radius.as_ref(), rep)?;
                let est = estimator.estimate(&x)?;
                Ok(est
                    .intervals
                    .iter()
                    .zip(&truth)
                    .map(|(iv, t)| (iv.estimate, t.map(|t| iv.covers(t))))
                    .collect::<Vec<_>>())
            });
            let (ok, failures) = partition(outcomes, &cell)?;
            for (i, name) in names.iter().enumerate() {
                let values: Vec<f64> = ok.iter().map(|r| r[i].0).collect();
                let s = summarize(&values);
                let rate = truth[i].map(|_| {
                    let hits = ok.iter().filter(|r| r[i].1 == Some(true)).count();
                    if ok.is_empty() {
                        f64::NAN
                    } else {
                        hits as f64 / ok.len() as f64
                    }
                });
                table.rows.push(ResultRow {
                    key: name.clone(),
                    n: cell.n,
                    p: cell.p,
                    c: cell.c,
                    truth: truth[i],
                    mean: s.mean,
                    sd: s.sd,
                    mean_se: s.mean_se,
                    rate,
                    rate_se: rate.map(|q| binomial_se(q, ok.len())),
                    replications: ok.len(),
                    failures,
                    infeasible: 0,
                });
            }
        }
        Ok(table)
    }
}

/// Rejection rates of the order test over a grid of separations.
#[derive(Debug, Clone, Copy, Default)]
pub struct SizePowerDesign;

impl ExperimentDesign for SizePowerDesign {
    fn name(&self) -> &'static str {
        "size_power"
    }

    fn run(&self, spec: &ExperimentSpec) -> Result<ResultTable> {
        let radius = radius_law(&spec.radius)?;
        let d0 = spec.null_order()?;
        let test = OrderTest::new(d0, spec.alpha)?.with_backend(moment_backend(&spec.backend)?);
        let mut table = ResultTable::new(self.name());
        for cell in spec.cells()? {
            let outcomes = replicate(spec, |rep| {
                let x = cell.sample(spec, radius.as_ref(), rep)?;
                test.run(&x)
            });
            let (ok, failures) = partition::<OrderTestReport>(outcomes, &cell)?;
            let stats: Vec<f64> = ok.iter().filter_map(|r| r.t_n).collect();
            let s = summarize(&stats);
            let rejections = ok.iter().filter(|r| r.reject).count();
            let infeasible = ok.iter().filter(|r| r.infeasible_null).count();
            let rate = if ok.is_empty() {
                f64::NAN
            } else {
                rejections as f64 / ok.len() as f64
            };
            table.rows.push(ResultRow {
                key: x_key(cell.x),
                n: cell.n,
                p: cell.p,
                c: cell.c,
                truth: None,
                mean: s.mean,
                sd: s.sd,
                mean_se: s.mean_se,
                rate: Some(rate),
                rate_se: Some(binomial_se(rate, ok.len())),
                replications: ok.len(),
                failures,
                infeasible,
            });
        }
        Ok(table)
    }
}

/// Histogram of SSCM eigenvalues against the limiting density on a grid.
/// `truth` is the limiting density at the bin centre, `mean` the average
/// histogram height.
#[derive(Debug, Clone, Copy, Default)]
pub struct DensityDesign;

/// Parses `lo:hi:count` into `count` equally spaced points.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Parse(format!("grid must be lo:hi:count, got `{spec}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count == 0 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!("empty or reversed grid `{spec}`")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let h = (hi - lo) / (count - 1) as f64;
    Ok((0..count).map(|i| lo + i as f64 * h).collect())
}

impl ExperimentDesign for DensityDesign {
    fn name(&self) -> &'static str {
        "density"
    }

    fn run(&self, spec: &ExperimentSpec) -> Result<ResultTable> {
        let radius = radius_law(&spec.radius)?;
        let mut table = ResultTable::new(self.name());
        for cell in spec.cells()? {
            let grid = match &spec.grid {
                Some(g) => parse_grid(g)?,
                None => {
                    let top = cell.psd.atoms().last().unwrap() * (1.0 + cell.c.sqrt()).powi(2);
                    parse_grid(&format!("0:{}:200", 1.2 * top))?
                }
            };
            let width = if grid.len() > 1 { grid[1] - grid[0] } else { 1.0 };
            let limit = density_eval(&grid, &cell.psd, cell.c, DEFAULT_EPS);
            let outcomes = replicate(spec, |rep| {
                let x = cell.sample(spec, radius.as_ref(), rep)?;
                let eig = sscm_eigenvalues(&spatial_sign(&x)?)?;
                let mut counts = vec![0usize; grid.len()];
                for lam in eig {
                    let pos = ((lam - grid[0]) / width + 0.5).floor();
                    if pos >= 0.0 && (pos as usize) < grid.len() {
                        counts[pos as usize] += 1;
                    }
                }
                Ok(counts
                    .into_iter()
                    .map(|k| k as f64 / (cell.p as f64 * width))
                    .collect::<Vec<_>>())
            });
            let (ok, failures) = partition(outcomes, &cell)?;
            for (i, (&x, lim)) in grid.iter().zip(limit).enumerate() {
                let heights: Vec<f64> = ok.iter().map(|h| h[i]).collect();
                let s = summarize(&heights);
                table.rows.push(ResultRow {
                    key: x.to_string(),
                    n: cell.n,
                    p: cell.p,
                    c: cell.c,
                    truth: lim.ok(),
                    mean: s.mean,
                    sd: s.sd,
                    mean_se: s.mean_se,
                    rate: None,
                    rate_se: None,
                    replications: ok.len(),
                    failures,
                    infeasible: 0,
                });
            }
        }
        Ok(table)
    }
}

type DesignBuilder = fn() -> Box<dyn ExperimentDesign>;

const DESIGNS: &[(&str, DesignBuilder)] = &[
    ("estimation", || Box::new(EstimationDesign)),
    ("size_power", || Box::new(SizePowerDesign)),
    ("density", || Box::new(DensityDesign)),
];

pub fn design_names() -> Vec<&'static str> {
    DESIGNS.iter().map(|(n, _)| *n).collect()
}

pub fn design(name: &str) -> Result<Box<dyn ExperimentDesign>> {
    DESIGNS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, build)| build())
        .ok_or_else(|| Error::UnknownName {
            kind: "experiment design",
            name: name.to_string(),
            available: design_names().join(", "),
        })
}

#[cfg(test)]
mod tests {
    use super::super::Design;
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = parse_grid("0:6:600").unwrap();
        assert_eq!(g.len(), 600);
        assert_eq!(g[0], 0.0);
        assert!((g[599] - 6.0).abs() < 1e-12);
        assert!(parse_grid("1:0:5").is_err());
        assert!(parse_grid("0:1").is_err());
    }

    #[test]
    fn single_replication_has_binary_coverage() {
        let spec = ExperimentSpec {
            n_list: vec![60],
            replications: 1,
            seed: 3,
            ..ExperimentSpec::for_model(Design::Estimation, "model1").unwrap()
        };
        let table = super::super::run_experiment(&spec).unwrap();
        assert_eq!(table.rows.len(), 4);
        for row in &table.rows {
            assert_eq!(row.replications + row.failures, 1);
            if row.replications == 1 {
                let q = row.rate.unwrap();
                assert!(q == 0.0 || q == 1.0);
            }
        }
    }

    #[test]
    fn registry_lookup() {
        for name in design_names() {
            assert_eq!(design(name).unwrap().name(), name);
        }
        assert!(design("bootstrap").is_err());
    }
}
