//! Batch CLI for the regression discontinuity toolkit: dataset ingestion,
//! DGP sampling, estimation, score collapsing, density diagnostics, and
//! Monte Carlo studies.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/numeric error. Diagnostics
//! carry a machine-parseable `error[CODE]:` prefix.

mod study;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rdd_core::{
    buffered_eval_points, collapse, emit_table, estimate_at, fit_rd, presets, run_mc,
    transform, zero_density_diagnostic, AssignmentRule, Bandwidth, BoundaryPoint, CollapseSpec,
    DGPSpec, Dataset, ForestConfig, KernelSpec, MethodSpec, RDMethodConfig, RidgeLambda,
    ScorePoint, TableFormat,
};
use std::path::{Path, PathBuf};
use study::{parse_kernel_shape, parse_split_rule, StudyFile};

#[derive(Parser, Debug)]
#[command(
    name = "rdd",
    about = "Regression discontinuity estimation toolkit",
    disable_version_flag = true
)]
struct Cli {
    /// Cap worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print the version and default-parameter fingerprint.
    #[arg(long)]
    version: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Data-generating process utilities.
    Dgp {
        #[command(subcommand)]
        command: DgpCommand,
    },
    /// Print the ground-truth conditional effect of a DGP at a boundary point.
    TrueEffect {
        #[command(flatten)]
        dgp: DgpSource,
        /// Boundary point coordinates, comma separated.
        #[arg(long)]
        at: String,
    },
    /// Estimate the conditional effect at a boundary point from a CSV dataset.
    Estimate(Box<EstimateArgs>),
    /// Collapse multivariate scores to a signed distance from a center point.
    Collapse {
        /// Input dataset CSV.
        #[arg(long)]
        data: PathBuf,
        /// Center coordinates, comma separated.
        #[arg(long)]
        center: String,
        /// Assignment rule JSON file (supplies the sign).
        #[arg(long)]
        rule: PathBuf,
        /// Distance rescaling factor.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Histogram-based zero-density diagnostic on a univariate score.
    DiagnoseDensity {
        /// Input dataset CSV (univariate; the x1 column is the score).
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = transform::DEFAULT_DIAGNOSTIC_BINS)]
        bins: usize,
        /// Near-zero window; defaults to 1/200 of the score range.
        #[arg(long)]
        window: Option<f64>,
        #[arg(long, default_value_t = transform::DEFAULT_DIAGNOSTIC_THRESHOLD)]
        threshold: f64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte Carlo study described by a JSON config.
    Mc {
        /// Study configuration JSON.
        #[arg(long)]
        config: PathBuf,
        /// Output table path.
        #[arg(long)]
        out: PathBuf,
        /// Output format.
        #[arg(long, default_value = "csv")]
        format: String,
        /// Record measured wall times (makes output non-reproducible).
        #[arg(long)]
        timing: bool,
    },
}

#[derive(Subcommand, Debug)]
enum DgpCommand {
    /// Simulate a dataset and write it as CSV.
    Sample {
        #[command(flatten)]
        dgp: DgpSource,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct DgpSource {
    /// Built-in DGP preset (lee, kt-price, kt-age, kt-turnout).
    #[arg(long)]
    preset: Option<String>,
    /// DGP specification JSON file.
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Input dataset CSV.
    #[arg(long)]
    data: PathBuf,
    /// Estimator: rf, llf, or llr.
    #[arg(long)]
    method: String,
    /// Boundary point coordinates, comma separated.
    #[arg(long)]
    at: String,
    /// Assignment rule JSON file; defaults to a univariate threshold at the
    /// evaluation point.
    #[arg(long)]
    rule: Option<PathBuf>,
    /// Cutoff for the default univariate threshold rule.
    #[arg(long)]
    cutoff: Option<f64>,
    /// Kernel shape for llr (triangular|epanechnikov|uniform).
    #[arg(long)]
    kernel: Option<String>,
    /// Bandwidth for llr: a number or "rot".
    #[arg(long)]
    bandwidth: Option<String>,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    mtry: Option<usize>,
    #[arg(long = "min-node")]
    min_node: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long = "c-scale")]
    c_scale: Option<f64>,
    #[arg(long = "honesty-fraction")]
    honesty_fraction: Option<f64>,
    /// Ridge penalty for llf: a number or "auto".
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long = "split-rule")]
    split_rule: Option<String>,
    #[arg(long = "ci-group-size")]
    ci_group_size: Option<usize>,
    /// Evaluation buffer for forest methods.
    #[arg(long)]
    buffer: Option<f64>,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Core(rdd_core::Error),
}

impl From<rdd_core::Error> for CliError {
    fn from(e: rdd_core::Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() -> std::process::ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return std::process::ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error[E_USAGE]: --threads must be positive");
            return std::process::ExitCode::from(1);
        }
        // Ignore the error when a global pool already exists (tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    if cli.version {
        println!("{}", version_line());
        return std::process::ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error[E_USAGE]: missing subcommand; see --help");
        return std::process::ExitCode::from(1);
    };
    match run(command) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error[E_USAGE]: {msg}");
            std::process::ExitCode::from(1)
        }
        Err(CliError::Core(e)) => {
            eprintln!("error[{}]: {e}", e.code());
            std::process::ExitCode::from(2)
        }
    }
}

/// Version plus a fingerprint of the default parameters, for reproducibility
/// records.
fn version_line() -> String {
    let defaults = "trees=2000 mtry=1 min-node=5 alpha=0.05 honesty=0.5 c-scale=0.4 \
                    lambda=0.1 ci-group=2 buffer=1e-9 level=0.95 kernel=triangular \
                    bandwidth=rot bins=10000 threshold=0.25";
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in defaults.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("rdd {} (defaults: {defaults}; fingerprint {hash:016x})", env!("CARGO_PKG_VERSION"))
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Dgp { command: DgpCommand::Sample { dgp, n, seed, out } } => {
            let spec = load_dgp(&dgp)?;
            let data = spec.simulate(n, seed)?;
            data.write_csv_path(&out)?;
            eprintln!("wrote {} rows to {}", data.n(), out.display());
            Ok(())
        }
        Command::TrueEffect { dgp, at } => {
            let spec = load_dgp(&dgp)?;
            let x_c = parse_point(&at)?;
            let effect = spec.true_effect(&x_c)?;
            println!("{}", format_sig(effect, 6));
            Ok(())
        }
        Command::Estimate(args) => run_estimate(*args),
        Command::Collapse { data, center, rule, scale, out } => {
            let rule = load_rule(&rule)?;
            let dataset = Dataset::read_csv_path(&data, Some(&rule))?;
            let spec = CollapseSpec::new(parse_point(&center)?, scale, rule)?;
            let collapsed = collapse(&dataset, &spec)?;
            collapsed.write_csv_path(&out)?;
            eprintln!("wrote {} collapsed rows to {}", collapsed.n(), out.display());
            Ok(())
        }
        Command::DiagnoseDensity { data, bins, window, threshold, out } => {
            let dataset = read_csv_lenient(&data)?;
            if dataset.dim() != 1 {
                return Err(usage("diagnose-density needs a univariate score; collapse first"));
            }
            let scores = dataset.xs();
            let window = window.unwrap_or_else(|| transform::default_diagnostic_window(scores));
            let report = zero_density_diagnostic(scores, bins, window, threshold)?;
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Core(e.into()))?;
            write_or_print(out.as_deref(), &json)?;
            Ok(())
        }
        Command::Mc { config, out, format, timing } => {
            let format = match format.as_str() {
                "csv" => TableFormat::Csv,
                "json" => TableFormat::Json,
                other => return Err(usage(format!("unknown format '{other}' (csv|json)"))),
            };
            let text = std::fs::read_to_string(&config).map_err(|e| {
                CliError::Core(rdd_core::Error::Config(format!(
                    "cannot read study file {}: {e}",
                    config.display()
                )))
            })?;
            let study: StudyFile = serde_json::from_str(&text)
                .map_err(|e| usage(format!("invalid study file: {e}")))?;
            let mc_config = study.into_mc_config(timing)?;
            let result = run_mc(&mc_config)?;
            eprintln!("truth: {}", format_sig(result.truth, 6));
            let mut bytes = Vec::new();
            emit_table(&result, format, &mut bytes)?;
            std::fs::write(&out, &bytes).map_err(rdd_core::Error::from)?;
            eprintln!("wrote {} result rows to {}", result.rows.len(), out.display());
            Ok(())
        }
    }
}

fn run_estimate(args: EstimateArgs) -> CliResult<()> {
    let x_c_point = parse_point(&args.at)?;
    let rule = match (&args.rule, args.cutoff) {
        (Some(path), None) => load_rule(path)?,
        (None, cutoff) => {
            if x_c_point.dim() != 1 {
                return Err(usage(
                    "multivariate designs need --rule; --cutoff only applies to univariate data",
                ));
            }
            let c = cutoff.unwrap_or(x_c_point.coords()[0]);
            AssignmentRule::univariate_threshold(c).map_err(CliError::Core)?
        }
        (Some(_), Some(_)) => {
            return Err(usage("--rule and --cutoff are mutually exclusive"));
        }
    };

    let config = build_method_config(&args)?;
    let data = Dataset::read_csv_path(&args.data, Some(&rule))?;
    let fitted = fit_rd(&data, &rule, &config)?;
    let x_c = BoundaryPoint::new(x_c_point, rule)?;
    if let MethodSpec::Rf(_) | MethodSpec::Llf(_) = config.method {
        let buffered = buffered_eval_points(&x_c, config.buffer_epsilon)?;
        if buffered.floored {
            eprintln!(
                "note: buffer {} is below floating-point resolution; using {}",
                config.buffer_epsilon, buffered.epsilon_effective
            );
        }
    }
    let report = estimate_at(&fitted, &x_c)?;
    let json =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Core(e.into()))?;
    write_or_print(args.out.as_deref(), &json)?;
    eprintln!(
        "estimate {} (se {}, {}% CI [{}, {}])",
        format_sig(report.estimate, 6),
        format_sig(report.std_error, 6),
        report.level * 100.0,
        format_sig(report.ci_lower, 6),
        format_sig(report.ci_upper, 6),
    );
    Ok(())
}

fn build_method_config(args: &EstimateArgs) -> CliResult<RDMethodConfig> {
    let forest_flags_used = args.trees.is_some()
        || args.mtry.is_some()
        || args.min_node.is_some()
        || args.alpha.is_some()
        || args.c_scale.is_some()
        || args.honesty_fraction.is_some()
        || args.lambda.is_some()
        || args.split_rule.is_some()
        || args.ci_group_size.is_some()
        || args.buffer.is_some();
    let kernel_flags_used = args.kernel.is_some() || args.bandwidth.is_some();

    let mut config = match args.method.as_str() {
        "rf" | "llf" => {
            if kernel_flags_used {
                return Err(usage(format!(
                    "--kernel/--bandwidth do not apply to method '{}'",
                    args.method
                )));
            }
            let base = if args.method == "rf" {
                ForestConfig::default()
            } else {
                ForestConfig::llf_default()
            };
            let mut forest = ForestConfig { seed: args.seed, ..base };
            if let Some(v) = args.trees {
                forest.num_trees = v;
            }
            if let Some(v) = args.mtry {
                forest.mtry = v;
            }
            if let Some(v) = args.min_node {
                forest.min_node_size = v;
            }
            if let Some(v) = args.alpha {
                forest.alpha = v;
            }
            if let Some(v) = args.c_scale {
                forest.c_scale = v;
            }
            if let Some(v) = args.honesty_fraction {
                forest.honesty_fraction = v;
            }
            if let Some(rule) = &args.split_rule {
                forest.split_rule = parse_split_rule(rule).map_err(CliError::Core)?;
            }
            if let Some(lambda) = &args.lambda {
                forest.ridge_lambda = if lambda == "auto" {
                    RidgeLambda::Auto
                } else {
                    let v: f64 = lambda
                        .parse()
                        .map_err(|_| usage(format!("--lambda must be a number or 'auto', got '{lambda}'")))?;
                    RidgeLambda::Fixed(v)
                };
            }
            if let Some(v) = args.ci_group_size {
                forest.ci_group_size = v;
            }
            if args.method == "rf" {
                RDMethodConfig::rf(forest)
            } else {
                RDMethodConfig::llf(forest)
            }
        }
        "llr" => {
            if forest_flags_used {
                return Err(usage("forest flags do not apply to method 'llr'"));
            }
            let mut kernel = KernelSpec::default();
            if let Some(shape) = &args.kernel {
                kernel.shape = parse_kernel_shape(shape).map_err(CliError::Core)?;
            }
            if let Some(bandwidth) = &args.bandwidth {
                kernel.bandwidth = if bandwidth == "rot" {
                    Bandwidth::RuleOfThumb
                } else {
                    let h: f64 = bandwidth.parse().map_err(|_| {
                        usage(format!("--bandwidth must be a number or 'rot', got '{bandwidth}'"))
                    })?;
                    Bandwidth::Fixed(h)
                };
            }
            RDMethodConfig::llr(kernel)
        }
        other => return Err(usage(format!("unknown method '{other}' (rf|llf|llr)"))),
    };
    if let Some(buffer) = args.buffer {
        config.buffer_epsilon = buffer;
    }
    config.level = args.level;
    config.validate().map_err(CliError::Core)?;
    Ok(config)
}

fn load_dgp(source: &DgpSource) -> CliResult<DGPSpec> {
    match (&source.preset, &source.spec) {
        (Some(name), None) => Ok(presets::by_name(name)?.spec),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Core(rdd_core::Error::Config(format!(
                    "cannot read DGP spec {}: {e}",
                    path.display()
                )))
            })?;
            let spec: DGPSpec = serde_json::from_str(&text)
                .map_err(|e| usage(format!("invalid DGP spec: {e}")))?;
            spec.validate()?;
            Ok(spec)
        }
        _ => Err(usage("exactly one of --preset/--spec is required")),
    }
}

fn load_rule(path: &Path) -> CliResult<AssignmentRule> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Core(rdd_core::Error::Config(format!(
            "cannot read rule file {}: {e}",
            path.display()
        )))
    })?;
    let rule: AssignmentRule =
        serde_json::from_str(&text).map_err(|e| usage(format!("invalid rule file: {e}")))?;
    rule.validate()?;
    Ok(rule)
}

/// Reads a dataset whose `d` column may be missing by synthesizing labels
/// from a trivial rule when needed; used by diagnostics that ignore labels.
fn read_csv_lenient(path: &Path) -> CliResult<Dataset> {
    match Dataset::read_csv_path(path, None) {
        Ok(data) => Ok(data),
        Err(_) => {
            let rule = AssignmentRule::univariate_threshold(0.0).map_err(CliError::Core)?;
            Ok(Dataset::read_csv_path(path, Some(&rule))?)
        }
    }
}

fn parse_point(text: &str) -> CliResult<ScorePoint> {
    let coords: Result<Vec<f64>, _> =
        text.split(',').map(|c| c.trim().parse::<f64>()).collect();
    let coords = coords.map_err(|e| usage(format!("invalid coordinates '{text}': {e}")))?;
    ScorePoint::new(coords).map_err(CliError::Core)
}

fn write_or_print(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(path) => {
            std::fs::write(path, format!("{text}\n")).map_err(rdd_core::Error::from)?;
            Ok(())
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// Formats with the given number of significant digits (fixed notation).
fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}
