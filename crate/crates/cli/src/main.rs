//! `coherence`: generate datasets, compare the SVD and DBMR pipelines, and
//! evaluate the Frobenius-KL bound from the command line.
//!
//! Exit codes: 0 on success, 2 for invalid input or arguments, 3 when a
//! numerical routine fails.

use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use coherence_core::bounds::{frobenius_kl_bound, KappaChoice};
use coherence_core::dbmr::{output_partition, DbmrProblem, DbmrSettings};
use coherence_core::generators::{gen_double_gyre, gen_interval_map, gen_three_coherent, GyreConfig, GyreMetadata};
use coherence_core::io::{self, DataFile};
use coherence_core::model::{estimate, prune_empty};
use coherence_core::report::{self, CompareSettings};
use coherence_core::{Error, Execution, Partition, Result};

#[derive(Parser)]
#[command(name = "coherence", version, about = "Coherent sets from transition counts: truncated SVD versus DBMR")]
struct Cli {
    /// Run every stage on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic pairs file and its `.meta.json` sidecar.
    Generate(GenerateArgs),
    /// Run both pipelines and write a JSON report (and optional images).
    Compare(CompareArgs),
    /// Independent DBMR runs with per-run spectra and optional trajectories.
    Multirun(MultirunArgs),
    /// Evaluate the Frobenius-KL bound for a given affiliation.
    Bounds(BoundsArgs),
    /// Render a matrix (CSV) or the transition matrix of a data file as PPM.
    Render(RenderArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Example {
    ThreeCoherent,
    IntervalMap,
    DoubleGyre,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    example: Example,
    /// Perturbation window (three-coherent and interval-map).
    #[arg(long, default_value_t = 0)]
    epsilon: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    gyre: GyreArgs,
}

#[derive(Args)]
struct GyreArgs {
    #[arg(long = "A")]
    a: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    t1: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    points_per_box: Option<usize>,
}

impl GyreArgs {
    fn config(&self, seed: u64) -> GyreConfig {
        let d = GyreConfig::default();
        GyreConfig {
            a: self.a.unwrap_or(d.a),
            delta: self.delta.unwrap_or(d.delta),
            omega: self.omega.unwrap_or(d.omega),
            t0: self.t0.unwrap_or(d.t0),
            t1: self.t1.unwrap_or(d.t1),
            h: self.step.unwrap_or(d.h),
            rho: self.rho.unwrap_or(d.rho),
            points_per_box: self.points_per_box.unwrap_or(d.points_per_box),
            seed,
            ..d
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Number of latent states / clusters.
    #[arg(long, default_value_t = 3)]
    rank: usize,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximal DBMR iterations per run.
    #[arg(long, default_value_t = 500)]
    hmax: usize,
    /// Stop a run once the relaxed likelihood improves by at most this.
    #[arg(long, default_value_t = 0.0)]
    tolerance: f64,
}

#[derive(Args)]
struct CompareArgs {
    /// Pairs file or count file.
    data: PathBuf,
    #[command(flatten)]
    run: RunArgs,
    /// Ground-truth input labels; defaults to the generator sidecar if present.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Directory for P, P_red and Lambda heatmaps.
    #[arg(long)]
    images: Option<PathBuf>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MultirunArgs {
    data: PathBuf,
    #[command(flatten)]
    run: RunArgs,
    /// Also export every iterate of every run.
    #[arg(long)]
    trace: bool,
    /// JSON record path; `.spectra.csv` and `.trajectories.csv` are written
    /// next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kappa {
    Post,
    Q1,
    Q2,
    Pr,
}

#[derive(Args)]
struct BoundsArgs {
    data: PathBuf,
    /// 1-based latent state per input category.
    #[arg(long)]
    affiliation: PathBuf,
    /// m x r factor as CSV; the likelihood-optimal one when omitted.
    #[arg(long)]
    lambda: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "post")]
    kappa: Kappa,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    /// Matrix CSV, or a pairs/count file whose transition matrix is drawn.
    input: PathBuf,
    /// Labels coloring the bottom strip (columns).
    #[arg(long)]
    bottom: Option<PathBuf>,
    /// Labels coloring the left strip (rows).
    #[arg(long)]
    left: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    example: Example,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    epsilon: Option<usize>,
    seed: u64,
    records: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    default_input: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    gyre: Option<GyreMetadata>,
}

fn sidecar_path(data: &Path) -> PathBuf {
    let mut name = data.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn read_sidecar(data: &Path) -> Result<Option<Sidecar>> {
    let path = sidecar_path(data);
    if !path.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_str(&fs::read_to_string(path)?)?))
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn read_labels(path: &Path) -> Result<Partition> {
    io::parse_labels(BufReader::new(fs::File::open(path)?))
}

fn dbmr_settings(run: &RunArgs, execution: Execution) -> DbmrSettings {
    DbmrSettings {
        h_max: run.hmax,
        tolerance: run.tolerance,
        snapshots: false,
        execution,
    }
}

fn generate(args: &GenerateArgs, execution: Execution) -> Result<()> {
    let (dataset, sidecar) = match args.example {
        Example::ThreeCoherent | Example::IntervalMap => {
            let (ds, labels) = match args.example {
                Example::ThreeCoherent => gen_three_coherent(args.epsilon, args.seed),
                _ => gen_interval_map(args.epsilon, args.seed),
            };
            let sidecar = Sidecar {
                example: args.example,
                epsilon: Some(args.epsilon),
                seed: args.seed,
                records: ds.len(),
                default_input: Some(labels.input.to_one_based()),
                gyre: None,
            };
            (ds, sidecar)
        }
        Example::DoubleGyre => {
            let (ds, meta) = gen_double_gyre(&args.gyre.config(args.seed), execution)?;
            if meta.clamped > 0 {
                eprintln!("warning: {} trajectory endpoints left the domain and were clamped", meta.clamped);
            }
            let sidecar = Sidecar {
                example: args.example,
                epsilon: None,
                seed: args.seed,
                records: ds.len(),
                default_input: None,
                gyre: Some(meta),
            };
            (ds, sidecar)
        }
    };
    io::save_pairs(&dataset, &args.out)?;
    write_json(&sidecar, Some(&sidecar_path(&args.out)))?;
    eprintln!("wrote {} records to {}", dataset.len(), args.out.display());
    Ok(())
}

fn compare(args: &CompareArgs, execution: Execution) -> Result<()> {
    let counts = io::read_data(&args.data)?.counts()?;
    let sidecar = read_sidecar(&args.data)?;
    let default = match (&args.labels, &sidecar) {
        (Some(path), _) => Some(read_labels(path)?),
        (None, Some(Sidecar { default_input: Some(l), .. })) => Some(Partition::from_one_based(l)?),
        _ => None,
    };
    let settings = CompareSettings {
        rank: args.run.rank,
        runs: args.run.runs,
        seed: args.run.seed,
        dbmr: dbmr_settings(&args.run, execution),
    };
    let mut cmp = report::compare(&counts, default.as_ref(), &settings)?;
    if let Some(s) = &sidecar {
        cmp.report.provenance.example = serde_json::to_value(s.example)?.as_str().map(str::to_owned);
        cmp.report.provenance.epsilon = s.epsilon;
    }
    if let Some(dir) = &args.images {
        fs::create_dir_all(dir)?;
        let model = &cmp.problem.model;
        let best = cmp.multi.best_run();
        let dbmr_f = output_partition(&best.reduced.lambda);
        let default_pruned = default.as_ref().map(|d| d.restrict(&cmp.pruned.col_map)).transpose()?;
        let classical = &cmp.classical;
        report::write_matrix_image(
            &model.transition,
            default_pruned.as_ref(),
            None,
            &dir.join("P.ppm"),
        )?;
        report::write_matrix_image(&classical.p_red, Some(&classical.e), Some(&classical.f), &dir.join("P_red.ppm"))?;
        report::write_matrix_image(
            &best.reduced.product(),
            Some(&best.reduced.affiliation),
            Some(&dbmr_f),
            &dir.join("Lambda.ppm"),
        )?;
    }
    let r = &cmp.report;
    eprintln!(
        "sigma(P~) = {:?}, sigma(Lambda~) = {:?}, l(DBMR) = {:.4}, l(P, Id) = {:.4}",
        r.criteria_a.p_tilde_sigma2.zip(r.criteria_a.p_tilde_sigma3),
        r.criteria_a.lambda_tilde_sigma2.zip(r.criteria_a.lambda_tilde_sigma3),
        r.criteria_b.dbmr,
        r.criteria_b.reference
    );
    write_json(&cmp.report, args.out.as_deref())
}

fn multirun(args: &MultirunArgs, execution: Execution) -> Result<()> {
    let counts = io::read_data(&args.data)?.counts()?;
    let pruned = prune_empty(&counts)?;
    let problem = DbmrProblem::new(&pruned.counts)?;
    let record = report::multirun(
        &problem,
        args.run.rank,
        args.run.runs,
        args.run.seed,
        args.trace,
        &dbmr_settings(&args.run, execution),
    )?;
    write_json(&record, Some(&args.out))?;
    let with_suffix = |suffix: &str| {
        let mut name = args.out.as_os_str().to_owned();
        name.push(suffix);
        PathBuf::from(name)
    };
    report::write_spectra_csv(&record, BufWriter::new(fs::File::create(with_suffix(".spectra.csv"))?))?;
    if args.trace {
        report::write_trajectories_csv(&record, BufWriter::new(fs::File::create(with_suffix(".trajectories.csv"))?))?;
    }
    eprintln!(
        "{} runs, best run {} with l = {:.4}",
        record.runs.len(),
        record.best_run,
        record.runs[record.best_run].relaxed_likelihood
    );
    Ok(())
}

fn bounds(args: &BoundsArgs) -> Result<()> {
    let counts = io::read_data(&args.data)?.counts()?;
    if !counts.is_pruned() {
        return Err(Error::NotPruned);
    }
    let problem = DbmrProblem::new(&counts)?;
    let affiliation = read_labels(&args.affiliation)?;
    let mut reduced = problem.update_lambda(&affiliation)?;
    if let Some(path) = &args.lambda {
        let lambda = io::parse_matrix_csv(BufReader::new(fs::File::open(path)?))?;
        if lambda.shape() != reduced.lambda.shape() {
            return Err(Error::Shape(format!(
                "lambda is {:?}, expected {:?}",
                lambda.shape(),
                reduced.lambda.shape()
            )));
        }
        for (k, col) in lambda.column_iter().enumerate() {
            let col: Vec<f64> = col.iter().copied().collect();
            coherence_core::model::check_probability(&col)
                .map_err(|e| Error::InvalidArgument(format!("lambda column {}: {e}", k + 1)))?;
        }
        reduced.lambda = lambda;
    }
    let choice = match args.kappa {
        Kappa::Post => KappaChoice::Post,
        Kappa::Q1 => KappaChoice::Q1,
        Kappa::Q2 => KappaChoice::Q2,
        Kappa::Pr => KappaChoice::Pr,
    };
    let report = frobenius_kl_bound(&problem, &reduced, choice)?;
    eprintln!(
        "||P~ - Lambda~||^2 = {:e} <= {:e} (kappa = {:e})",
        report.lhs, report.mid, report.kappa_used
    );
    write_json(&report, args.out.as_deref())
}

fn render(args: &RenderArgs) -> Result<()> {
    let is_csv = args.input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let matrix = if is_csv {
        io::parse_matrix_csv(BufReader::new(fs::File::open(&args.input)?))?
    } else {
        let counts = match io::read_data(&args.input)? {
            DataFile::Pairs(ds) => coherence_core::model::ingest_pairs(&ds)?,
            DataFile::Counts(c) => c,
        };
        estimate(&prune_empty(&counts)?.counts)?.transition
    };
    let bottom = args.bottom.as_deref().map(read_labels).transpose()?;
    let left = args.left.as_deref().map(read_labels).transpose()?;
    report::write_matrix_image(&matrix, bottom.as_ref(), left.as_ref(), &args.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let execution = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let result = match &cli.command {
        Command::Generate(a) => generate(a, execution),
        Command::Compare(a) => compare(a, execution),
        Command::Multirun(a) => multirun(a, execution),
        Command::Bounds(a) => bounds(a),
        Command::Render(a) => render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
