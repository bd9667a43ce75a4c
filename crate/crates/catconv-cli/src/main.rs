//! Command-line driver. All statistical work lives in the catconv library;
//! this binary parses flags, wires files to the library, and maps errors to
//! the exit-code contract (1 usage, 2 data, 3 numerical).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use catconv::bootstrap::{BootstrapConfig, NullModel};
use catconv::chain::{CategoryAlphabet, SegmentSet};
use catconv::diagnose::{self, Checkpoints, DiagnosticRequest, Mode};
use catconv::io::{
    parse_chain_csv, write_bench_csv, write_chains_wide, write_concordance_csv, write_report_to,
    write_study_csv, ChainFormat, HeaderMode, ReportFormat,
};
use catconv::simulate::{
    derive_stream, simulate_dar1, simulate_markov, simulate_ndarma, Dar1Params, MarkovParams,
    NdarmaParams,
};
use catconv::stats::Method;
use catconv::study::{self, BenchGrid, StudyGrid};
use catconv::{Error, Result};

#[derive(Parser)]
#[command(
    name = "catconv",
    version,
    about = "Convergence assessment for discrete-parameter MCMC samplers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test convergence of sampled chains from a CSV file
    Diagnose(DiagnoseArgs),
    /// Generate synthetic categorical chains as a wide CSV
    Simulate(SimulateArgs),
    /// Run the operating-characteristics simulation study
    Simstudy(StudyArgs),
    /// Time each procedure over a grid of problem sizes
    Bench(BenchArgs),
}

fn v_chain_format(s: &str) -> std::result::Result<ChainFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn v_header(s: &str) -> std::result::Result<HeaderMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn v_report_format(s: &str) -> std::result::Result<ReportFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn v_null(s: &str) -> std::result::Result<NullModel, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Chain CSV to assess
    #[arg(long, value_name = "PATH")]
    input: PathBuf,

    /// Input layout: long (chain,iter,value rows) or wide (column per chain)
    #[arg(long, default_value = "long", value_parser = v_chain_format)]
    format: ChainFormat,

    /// Header handling: auto, yes, no
    #[arg(long, default_value = "auto", value_parser = v_header)]
    header: HeaderMode,

    /// hangartner, weiss, darboot, mcboot, billingsley, billingsleyboot, or all
    #[arg(long)]
    method: Option<String>,

    /// Default method family when --method is omitted: marginal picks weiss,
    /// transition picks billingsley
    #[arg(long, value_parser = ["marginal", "transition"])]
    method_family: Option<String>,

    /// Comparison mode
    #[arg(long, default_value = "between", value_parser = ["between", "within"])]
    mode: String,

    /// Share of each chain in the head and tail windows (within mode)
    #[arg(long, value_name = "F", default_value_t = diagnose::DEFAULT_WINDOW_FRACTION)]
    window_fraction: f64,

    /// Re-test cumulative prefixes at K evenly spaced checkpoints
    #[arg(long, value_name = "K")]
    sequential: Option<usize>,

    /// Explicit checkpoint lengths, e.g. 100,200,400 (implies sequential)
    #[arg(long, value_name = "LIST", conflicts_with = "sequential")]
    checkpoints: Option<String>,

    /// Test level
    #[arg(long, default_value_t = diagnose::DEFAULT_ALPHA)]
    alpha: f64,

    /// Bootstrap replicates for darboot, mcboot, billingsleyboot
    #[arg(long = "boot-B", value_name = "B", default_value_t = 1000)]
    boot_b: usize,

    /// Bootstrap null fit: as-estimated (per segment) or pooled
    #[arg(long, default_value = "as-estimated", value_parser = v_null)]
    null: NullModel,

    /// RNG seed for bootstrap resampling
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Bootstrap worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,

    /// Report destination (default: stdout)
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Report encoding: csv or jsonl
    #[arg(long, default_value = "csv", value_parser = v_report_format)]
    report_format: ReportFormat,
}

#[derive(Args)]
struct SimulateArgs {
    /// Generating model
    #[arg(long, value_parser = ["dar1", "ndarma", "markov"])]
    model: String,

    /// Marginal probabilities, e.g. 0.25,0.3,0.45 (dar1 and ndarma)
    #[arg(long, value_name = "LIST")]
    p: Option<String>,

    /// Copy probability (dar1)
    #[arg(long)]
    phi: Option<f64>,

    /// AR selector weights phi_1..phi_p (ndarma)
    #[arg(long, value_name = "LIST")]
    phi_weights: Option<String>,

    /// MA selector weights varphi_0..varphi_q (ndarma)
    #[arg(long, value_name = "LIST")]
    varphi_weights: Option<String>,

    /// Row-major transition matrix with ';' between rows,
    /// e.g. 0.9,0.1;0.2,0.8 (markov)
    #[arg(long, value_name = "ROWS")]
    transition: Option<String>,

    /// Initial distribution (markov; default uniform)
    #[arg(long, value_name = "LIST")]
    initial: Option<String>,

    /// Iterations per chain
    #[arg(long)]
    length: usize,

    /// Number of chains
    #[arg(long, default_value_t = 1)]
    chains: usize,

    /// RNG seed; chain i draws from stream (seed, i)
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Wide CSV destination (default: stdout)
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    /// Chain lengths t
    #[arg(long, value_name = "LIST", default_value = "10,100,1000")]
    lengths: String,

    /// DAR(1) dependence values
    #[arg(long, value_name = "LIST", default_value = "0,0.5,0.75")]
    phis: String,

    /// Mixing weights toward the target marginal (1 = converged null)
    #[arg(long, value_name = "LIST", default_value = "0,0.5,1")]
    betas: String,

    /// Target marginal
    #[arg(long, value_name = "LIST", default_value = "0.25,0.3,0.45")]
    p: String,

    /// Second-segment marginal mixed against the target
    #[arg(long, value_name = "LIST", default_value = "0.75,0.05,0.2")]
    q: String,

    /// Monte Carlo replications per cell
    #[arg(long, default_value_t = 200)]
    replications: usize,

    /// Methods to evaluate: comma list or all
    #[arg(long, default_value = "all")]
    methods: String,

    /// Bootstrap replicates inside each evaluation
    #[arg(long = "boot-B", value_name = "B", default_value_t = 200)]
    boot_b: usize,

    /// Bootstrap null fit; pooled keeps the bootstrap tests powered
    /// against heterogeneous segments
    #[arg(long, default_value = "pooled", value_parser = v_null)]
    null: NullModel,

    /// Test level
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,

    /// Directory receiving cells.csv and concordance.csv
    #[arg(long, value_name = "DIR")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Chain counts
    #[arg(long, value_name = "LIST", default_value = "2,4,6,8,10")]
    chains: String,

    /// Category counts
    #[arg(long, value_name = "LIST", default_value = "4")]
    categories: String,

    /// Chain lengths
    #[arg(long, value_name = "LIST", default_value = "10000")]
    lengths: String,

    /// Methods to time: comma list or all
    #[arg(long, default_value = "all")]
    methods: String,

    /// Bootstrap replicates for the bootstrap procedures
    #[arg(long = "boot-B", value_name = "B", default_value_t = 200)]
    boot_b: usize,

    /// Timing repetitions per grid point
    #[arg(long, default_value_t = 5)]
    reps: usize,

    /// RNG seed for the synthetic inputs
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// CSV destination (default: stdout)
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse().map_err(|_| Error::InvalidParameter(format!("invalid {what} '{t}'")))
        })
        .collect()
}

fn parse_matrix(s: &str) -> Result<Vec<Vec<f64>>> {
    s.split(';').map(|row| parse_list(row, "transition probability")).collect()
}

fn parse_methods(s: &str) -> Result<Vec<Method>> {
    if s.trim().eq_ignore_ascii_case("all") {
        Ok(Method::ALL.to_vec())
    } else {
        parse_list(s, "method")
    }
}

fn resolve_methods(method: Option<&str>, family: Option<&str>) -> Result<Vec<Method>> {
    match method {
        Some(m) => parse_methods(m),
        None => Ok(vec![match family {
            Some("transition") => Method::Billingsley,
            _ => Method::Weiss,
        }]),
    }
}

fn require<T>(opt: Option<T>, flag: &str, model: &str) -> Result<T> {
    opt.ok_or_else(|| Error::InvalidParameter(format!("--{flag} is required for model {model}")))
}

fn write_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => f(&mut io::stdout().lock()),
    }
}

fn run_diagnose(args: &DiagnoseArgs) -> Result<()> {
    let methods = resolve_methods(args.method.as_deref(), args.method_family.as_deref())?;
    let sequential = args.sequential.is_some() || args.checkpoints.is_some();
    if sequential && args.mode == "within" {
        return Err(Error::InvalidParameter(
            "--sequential cannot be combined with --mode within".into(),
        ));
    }
    let mode = if sequential {
        Mode::Sequential
    } else if args.mode == "within" {
        Mode::Within
    } else {
        Mode::Between
    };
    let checkpoints = match (&args.checkpoints, args.sequential) {
        (Some(list), _) => Checkpoints::Explicit(parse_list(list, "checkpoint")?),
        (None, Some(k)) => Checkpoints::Count(k),
        (None, None) => Checkpoints::default(),
    };
    let request = DiagnosticRequest {
        methods,
        mode,
        window_fraction: args.window_fraction,
        checkpoints,
        alpha: args.alpha,
        bootstrap: BootstrapConfig {
            replicates: args.boot_b,
            seed: args.seed,
            workers: args.workers,
            null_model: args.null,
        },
    };
    let set = parse_chain_csv(&args.input, args.format, args.header)?;
    let report = diagnose::run(&set, &request)?;
    write_output(args.output.as_deref(), |w| {
        write_report_to(&report, w, args.report_format)
    })
}

fn run_simulate(args: &SimulateArgs) -> Result<()> {
    if args.chains == 0 {
        return Err(Error::InvalidParameter("--chains must be at least 1".into()));
    }
    enum Model {
        Dar1(Dar1Params),
        Ndarma(NdarmaParams),
        Markov(MarkovParams),
    }
    let model = match args.model.as_str() {
        "dar1" => {
            let p = parse_list(require(args.p.as_deref(), "p", "dar1")?, "probability")?;
            let phi = require(args.phi, "phi", "dar1")?;
            Model::Dar1(Dar1Params::new(p, phi)?)
        }
        "ndarma" => {
            let p = parse_list(require(args.p.as_deref(), "p", "ndarma")?, "probability")?;
            let phi_w = match args.phi_weights.as_deref() {
                Some(s) => parse_list(s, "weight")?,
                None => Vec::new(),
            };
            let varphi_w = parse_list(
                require(args.varphi_weights.as_deref(), "varphi-weights", "ndarma")?,
                "weight",
            )?;
            Model::Ndarma(NdarmaParams::new(p, phi_w, varphi_w)?)
        }
        "markov" => {
            let transition =
                parse_matrix(require(args.transition.as_deref(), "transition", "markov")?)?;
            let initial = match args.initial.as_deref() {
                Some(s) => parse_list(s, "probability")?,
                None => vec![1.0 / transition.len() as f64; transition.len()],
            };
            Model::Markov(MarkovParams::new(transition, initial)?)
        }
        other => {
            return Err(Error::InvalidParameter(format!("unknown model '{other}'")));
        }
    };
    let categories = match &model {
        Model::Dar1(m) => m.p.len(),
        Model::Ndarma(m) => m.p.len(),
        Model::Markov(m) => m.transition.len(),
    };
    let mut segments = Vec::with_capacity(args.chains);
    for i in 0..args.chains {
        let mut rng = derive_stream(args.seed, i as u64);
        let path = match &model {
            Model::Dar1(m) => simulate_dar1(m, args.length, &mut rng)?,
            Model::Ndarma(m) => simulate_ndarma(m, args.length, &mut rng)?,
            Model::Markov(m) => simulate_markov(m, args.length, &mut rng)?,
        };
        segments.push(path);
    }
    let set = SegmentSet::from_indices(segments, CategoryAlphabet::integers(categories))?;
    write_output(args.output.as_deref(), |w| write_chains_wide(&set, w))
}

fn run_simstudy(args: &StudyArgs) -> Result<()> {
    let grid = StudyGrid {
        lengths: parse_list(&args.lengths, "length")?,
        phis: parse_list(&args.phis, "phi")?,
        betas: parse_list(&args.betas, "beta")?,
        p: parse_list(&args.p, "probability")?,
        q: parse_list(&args.q, "probability")?,
        replications: args.replications,
        alpha: args.alpha,
        methods: parse_methods(&args.methods)?,
        bootstrap_replicates: args.boot_b,
        seed: args.seed,
        keep_pvalues: true,
        workers: args.workers,
        null_model: args.null,
    };
    let result = study::run_study(&grid)?;
    let concordance = result.concordance()?;
    std::fs::create_dir_all(&args.output_dir)?;
    write_output(Some(&args.output_dir.join("cells.csv")), |w| {
        write_study_csv(&result, w)
    })?;
    write_output(Some(&args.output_dir.join("concordance.csv")), |w| {
        write_concordance_csv(&concordance, w)
    })?;
    println!(
        "wrote {} cells and {} concordance rows",
        result.cells.len(),
        concordance.len()
    );
    Ok(())
}

fn run_bench(args: &BenchArgs) -> Result<()> {
    let grid = BenchGrid {
        chains: parse_list(&args.chains, "chain count")?,
        categories: parse_list(&args.categories, "category count")?,
        lengths: parse_list(&args.lengths, "length")?,
        methods: parse_methods(&args.methods)?,
        bootstrap_replicates: args.boot_b,
        repetitions: args.reps,
        seed: args.seed,
    };
    let rows = study::run_bench(&grid)?;
    write_output(args.output.as_deref(), |w| write_bench_csv(&rows, w))
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Diagnose(args) => run_diagnose(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Simstudy(args) => run_simstudy(args),
        Command::Bench(args) => run_bench(args),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
