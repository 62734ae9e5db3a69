use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use sscm_core::harness::{self, Design, ExperimentSpec};
use sscm_core::moments::{beta_to_gamma, gamma_to_beta, moment_backend};
use sscm_core::mplaw::{self, support_find};
use sscm_core::order_test::OrderTest;
use sscm_core::psd::{theta_to_moments, DiscretePsd, PsdEstimator};
use sscm_core::sampling::{spatial_sign, SampleMatrix};
use sscm_core::series::CltCorrection;
use sscm_core::Error;

/// Spectral inference for spatial-sign covariance matrices.
#[derive(Debug, Parser)]
#[command(name = "sscm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment and write its result table as CSV.
    Simulate(SimulateArgs),
    /// Estimate a discrete population spectrum from a data CSV (JSON out).
    Estimate(EstimateArgs),
    /// Test whether the population spectrum has at most d0 atoms (JSON out).
    Test(TestArgs),
    /// Spectral moments, empirical (--data) or limiting (--psd, --c).
    Moments(MomentsArgs),
    /// Limiting spectral density on a grid (CSV), or its support (JSON).
    Density(DensityArgs),
}

#[derive(Debug, Args)]
struct Output {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// JSON experiment config; flags below override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// estimation, size_power or density.
    #[arg(long)]
    design: Option<String>,
    /// Registered model (model1/table1, model2/table2, model3, model4).
    #[arg(long)]
    model: Option<String>,
    /// Explicit spectrum `atom:weight,...`.
    #[arg(long)]
    psd: Option<String>,
    /// Ratio p/n; repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',')]
    c: Vec<f64>,
    /// Sample size; repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Separation for model3/model4; repeat or comma-separate.
    #[arg(long, value_delimiter = ',')]
    x: Vec<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    d0: Option<usize>,
    #[arg(long)]
    order: Option<usize>,
    /// Radius law (chi, constant, lognormal:MU:SIGMA, pareto:ALPHA).
    #[arg(long)]
    radius: Option<String>,
    /// Moment backend (eigen, trace).
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    /// Density grid lo:hi:count.
    #[arg(long)]
    grid: Option<String>,
    /// Also write the raw sample of the first replication as CSV.
    #[arg(long)]
    emit_data: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Raw observations, one per row.
    #[arg(long)]
    data: PathBuf,
    /// Number of atoms to fit.
    #[arg(long, default_value_t = 2)]
    order: usize,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value = "eigen")]
    backend: String,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct TestArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    d0: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value = "eigen")]
    backend: String,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct MomentsArgs {
    #[arg(long, conflicts_with = "psd")]
    data: Option<PathBuf>,
    #[arg(long, requires = "c")]
    psd: Option<String>,
    #[arg(long)]
    c: Option<f64>,
    /// Highest order.
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value = "eigen")]
    backend: String,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct DensityArgs {
    #[arg(long)]
    psd: String,
    #[arg(long)]
    c: f64,
    /// lo:hi:count
    #[arg(long, default_value = "0:5:500")]
    grid: String,
    #[arg(long, default_value_t = mplaw::DEFAULT_EPS)]
    eps: f64,
    /// Stieltjes solver (auto, fixed-point, polynomial).
    #[arg(long, default_value = "auto")]
    solver: String,
    /// Print the support intervals instead of the density.
    #[arg(long)]
    support: bool,
    #[command(flatten)]
    output: Output,
}

fn open_output(out: &Output) -> Result<Box<dyn Write>, Error> {
    Ok(match &out.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(out: &Output, value: &impl serde::Serialize) -> Result<(), Error> {
    let mut w = open_output(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Parse(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn load(path: &Path) -> Result<SampleMatrix, Error> {
    SampleMatrix::read_csv_path(path)
}

fn simulate(args: SimulateArgs) -> Result<(), Error> {
    let mut spec = match &args.config {
        Some(path) => ExperimentSpec::from_json(&std::fs::read_to_string(path)?)?,
        None => ExperimentSpec::default(),
    };
    if let Some(m) = args.model {
        spec.model = Some(m);
    }
    if let Some(psd) = args.psd {
        spec.psd = Some(psd);
    }
    match args.design.as_deref() {
        Some(name) => {
            spec.design = serde_json::from_value(json!(name))
                .map_err(|_| Error::UnknownName {
                    kind: "experiment design",
                    name: name.to_string(),
                    available: harness::design_names().join(", "),
                })?;
        }
        None if args.config.is_none() => {
            // test models default to the test design
            let model = spec.model.as_deref().map(harness::Model::by_name).transpose()?;
            if model.is_some_and(|m| m.takes_x()) {
                spec.design = Design::SizePower;
            }
        }
        None => {}
    }
    if !args.c.is_empty() {
        spec.c = args.c;
    }
    if !args.n.is_empty() {
        spec.n_list = args.n;
    }
    if !args.x.is_empty() {
        spec.x_list = args.x;
    }
    macro_rules! set {
        ($($field:ident <- $value:expr),*) => {
            $(if let Some(v) = $value { spec.$field = v.into(); })*
        };
    }
    set!(replications <- args.reps, seed <- args.seed, level <- args.level,
         alpha <- args.alpha, radius <- args.radius, backend <- args.backend);
    if args.d0.is_some() {
        spec.d0 = args.d0;
    }
    if args.order.is_some() {
        spec.order = args.order;
    }
    if args.threads.is_some() {
        spec.threads = args.threads;
    }
    if args.grid.is_some() {
        spec.grid = args.grid;
    }

    let table = harness::run_experiment(&spec)?;
    if let Some(path) = &args.emit_data {
        harness::simulate_dataset(&spec, 0)?.write_csv(BufWriter::new(File::create(path)?))?;
    }
    let mut w = open_output(&args.output)?;
    table.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn estimate(args: EstimateArgs) -> Result<(), Error> {
    let data = load(&args.data)?;
    let est = PsdEstimator::new(args.order, args.level)?
        .with_backend(moment_backend(&args.backend)?)
        .estimate(&data)?;
    write_json(&args.output, &est)
}

fn test(args: TestArgs) -> Result<(), Error> {
    let data = load(&args.data)?;
    let report = OrderTest::new(args.d0, args.alpha)?
        .with_backend(moment_backend(&args.backend)?)
        .run(&data)?;
    write_json(&args.output, &report)
}

fn moments(args: MomentsArgs) -> Result<(), Error> {
    if let Some(path) = &args.data {
        let data = load(path)?;
        let c = data.ratio();
        let beta = moment_backend(&args.backend)?.moments(&spatial_sign(&data)?, args.k)?;
        let gamma = beta_to_gamma(&beta, c)?;
        return write_json(
            &args.output,
            &json!({ "n": data.n(), "p": data.p(), "c": c, "beta": beta.values(), "gamma": gamma.values() }),
        );
    }
    let (Some(psd), Some(c)) = (&args.psd, args.c) else {
        return Err(Error::InvalidParameter("moments needs --data or --psd with --c".into()));
    };
    let psd: DiscretePsd = psd.parse()?;
    let gamma = theta_to_moments(&psd, args.k)?;
    let beta = gamma_to_beta(&gamma, c, args.k)?;
    let mut doc = json!({ "c": c, "psd": psd.to_string(), "beta": beta.values(), "gamma": gamma.values() });
    if args.k >= 2 {
        let clt = CltCorrection::new(&psd, c, args.k)?;
        let cov: Vec<Vec<f64>> = clt
            .covariance
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect();
        doc["clt_mean"] = json!(clt.mean);
        doc["clt_covariance"] = json!(cov);
    }
    write_json(&args.output, &doc)
}

fn density(args: DensityArgs) -> Result<(), Error> {
    let psd: DiscretePsd = args.psd.parse()?;
    if args.support {
        return write_json(&args.output, &support_find(&psd, args.c)?);
    }
    let grid = harness::parse_grid(&args.grid)?;
    let solver = mplaw::solver(&args.solver)?;
    let values = mplaw::density_eval_with(solver.as_ref(), &grid, &psd, args.c, args.eps);
    let mut w = open_output(&args.output)?;
    writeln!(w, "x,density")?;
    let mut failed = 0;
    for (x, v) in grid.iter().zip(values) {
        match v {
            Ok(f) => writeln!(w, "{x},{f}")?,
            Err(e) => {
                log::warn!("density at x = {x}: {e}");
                failed += 1;
                writeln!(w, "{x},")?;
            }
        }
    }
    w.flush()?;
    if failed > 0 {
        return Err(Error::Numerical(format!("{failed} grid points failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Test(a) => test(a),
        Command::Moments(a) => moments(a),
        Command::Density(a) => density(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
