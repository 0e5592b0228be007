//! The `prisample` command line: build samples from flow records, persist
//! them, query subset sums, and run the verification and comparison suites.
//!
//! Exit status is 0 on success, 1 when a verification check fails and 2 for
//! usage or input errors.

use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use priority_sampling::analysis::{SchemeTag, WrMode};
use priority_sampling::estimators::{EstimateReport, SubsetPredicate};
use priority_sampling::harness::{
    generate_trace, run_comparison, ComparisonSpec, MatrixSpec, NamedSubset, Status, APP_KEY,
    IN_KEY, MIN_TRIALS, OUT_KEY,
};
use priority_sampling::SeededGenerator;

pub mod ingest;
pub mod sampling;
pub mod store;
pub mod suites;
pub mod synthetic;

pub use ingest::read_flows;
pub use sampling::{Builder, Built, SamplerKind};
pub use store::PersistedSample;
pub use suites::{run_suite, Line, Suite};
pub use synthetic::parse_synthetic;

#[derive(Debug, Parser)]
#[command(
    name = "prisample",
    version,
    about = "Priority sampling for subset-sum estimation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a flow-record CSV or a synthetic trace and save the sample.
    Sample(SampleArgs),
    /// Estimate a subset sum from a saved sample.
    Estimate(EstimateArgs),
    /// Run a verification suite; exits 1 if any check fails.
    Verify(VerifyArgs),
    /// Compare schemes over replicated samples of a synthetic trace.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct SourceArgs {
    /// CSV with `id`, `weight`, optional `secondary` and attribute columns; `-` reads stdin.
    #[arg(long, group = "source")]
    pub input: Option<PathBuf>,
    /// Synthetic trace, e.g. `pareto:n=1000,shape=1.1` or a JSON spec file.
    #[arg(long, group = "source")]
    pub synthetic: Option<String>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_enum, default_value_t = SamplerKind::Pri)]
    pub scheme: SamplerKind,
    /// Sample size.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Where to write the sample JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub sample: PathBuf,
    /// `key=value` attribute match; repeat for a conjunction.
    #[arg(long = "where", value_name = "KEY=VALUE")]
    pub terms: Vec<String>,
    /// Half-open weight range `lo:hi`; either end may be empty.
    #[arg(long, value_name = "LO:HI")]
    pub weight_range: Option<String>,
    #[arg(long, conflicts_with = "csv")]
    pub json: bool,
    #[arg(long)]
    pub csv: bool,
    /// Estimator for with-replacement samples.
    #[arg(long, value_enum, default_value_t = ModeArg::Presence)]
    pub mode: ModeArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Presence,
    Count,
}

impl From<ModeArg> for WrMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Presence => WrMode::Presence,
            ModeArg::Count => WrMode::Count,
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Monte Carlo trials per case (at least 10000).
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, default_value = "table1-mix")]
    pub synthetic: String,
    /// Comma-separated scheme tags: pri, thr, uwr, wwr, wwr-count.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "pri,thr,uwr,wwr,wwr-count"
    )]
    pub schemes: Vec<SchemeTag>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "25,50,100,150,200,400,800"
    )]
    pub k_grid: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for `errors.csv`, `distinct.csv` and `matrix.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` and runs the command, mapping outcomes to exit codes.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let stdout = io::stdout();
    match run(cli.command, &mut stdout.lock()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Runs one command. `Ok(false)` means a verification check failed.
pub fn run(command: Command, out: &mut dyn Write) -> Result<bool> {
    match command {
        Command::Sample(a) => sample(&a, out).map(|_| true),
        Command::Estimate(a) => estimate(&a, out).map(|_| true),
        Command::Verify(a) => verify(&a, out),
        Command::Compare(a) => compare(&a, out).map(|_| true),
    }
}

/// Streams `input` once through a reservoir of `kind`.
pub fn sample_reader<R: Read>(input: R, kind: SamplerKind, k: usize, seed: u64) -> Result<Built> {
    let mut gen = SeededGenerator::new(seed);
    let mut builder = Builder::new(kind, k);
    read_flows(input, |item| builder.push(item, &mut gen))?;
    Ok(builder.finish())
}

fn sample(a: &SampleArgs, out: &mut dyn Write) -> Result<()> {
    let k = a.k as usize;
    let built = if let Some(path) = &a.source.input {
        if path == Path::new("-") {
            sample_reader(io::stdin().lock(), a.scheme, k, a.seed)?
        } else {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            sample_reader(BufReader::new(file), a.scheme, k, a.seed)?
        }
    } else {
        let text = a.source.synthetic.as_deref().unwrap_or_default();
        let spec = parse_synthetic(text, a.seed)?;
        let trace = generate_trace(&spec)?;
        let mut gen = SeededGenerator::new(a.seed);
        let mut builder = Builder::new(a.scheme, k);
        for item in trace.items {
            builder.push(item, &mut gen);
        }
        builder.finish()
    };
    let persisted = PersistedSample::new(a.scheme, k, a.seed, &built);
    std::fs::write(&a.out, persisted.to_json()?)
        .with_context(|| format!("writing {}", a.out.display()))?;
    let threshold = built
        .threshold()
        .map_or_else(|| "none".to_string(), |t| t.to_string());
    writeln!(
        out,
        "n={} distinct={} threshold={threshold}",
        built.items_seen(),
        built.distinct()
    )?;
    Ok(())
}

/// Loads a saved sample and answers a subset query.
pub fn query(
    sample: &Built,
    predicate: &SubsetPredicate,
    mode: WrMode,
) -> (EstimateReport, Vec<String>) {
    let unknown = predicate
        .keys()
        .filter(|key| !sample.knows_key(key))
        .map(str::to_string)
        .collect();
    (sample.estimate(mode, predicate), unknown)
}

fn estimate(a: &EstimateArgs, out: &mut dyn Write) -> Result<()> {
    let text = std::fs::read_to_string(&a.sample)
        .with_context(|| format!("reading {}", a.sample.display()))?;
    let built = PersistedSample::from_json(&text)?.to_built()?;
    let mut predicate = SubsetPredicate::all();
    for term in &a.terms {
        let (key, value) = SubsetPredicate::parse_term(term)?;
        predicate = predicate.with_term(key, value);
    }
    if let Some(range) = &a.weight_range {
        let (lo, hi) = SubsetPredicate::parse_range(range)?;
        predicate = predicate.with_weight_range(lo, hi);
    }
    let (report, unknown) = query(&built, &predicate, a.mode.into());
    for key in unknown {
        eprintln!(
            "warning: no sampled item has attribute {key:?}; the subset may exist but be unsampled"
        );
    }
    if report.variance_unreliable {
        eprintln!("warning: variance estimate is unreliable for this sample size");
    }
    if a.csv {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "scheme",
            "k",
            "items_seen",
            "estimate",
            "variance",
            "variance_unreliable",
            "contributing",
        ])?;
        w.write_record([
            report.scheme.to_string(),
            report.k.to_string(),
            report.items_seen.to_string(),
            report.estimate.to_string(),
            report.variance.to_string(),
            report.variance_unreliable.to_string(),
            report.contributions.len().to_string(),
        ])?;
        w.flush()?;
    } else {
        writeln!(out, "{}", serde_json::to_string(&report)?)?;
    }
    Ok(())
}

fn verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<bool> {
    if a.trials < MIN_TRIALS {
        bail!("--trials must be at least {MIN_TRIALS}, got {}", a.trials);
    }
    let lines = run_suite(a.suite, a.trials, a.seed)?;
    let failed = lines.iter().filter(|l| l.status == Status::Fail).count();
    for line in &lines {
        writeln!(out, "{}", serde_json::to_string(line)?)?;
    }
    eprintln!("{} checks, {failed} failed", lines.len());
    Ok(failed == 0)
}

fn compare(a: &CompareArgs, out: &mut dyn Write) -> Result<()> {
    let trace = generate_trace(&parse_synthetic(&a.synthetic, a.seed)?)?;
    let labelled = trace.items.iter().any(|i| i.attribute(APP_KEY).is_some());
    let subsets = if labelled {
        trace
            .summary
            .label_totals
            .iter()
            .filter(|(_, &total)| total > 0.0)
            .map(|(label, _)| {
                NamedSubset::new(
                    label.clone(),
                    SubsetPredicate::all().with_term(APP_KEY, label),
                )
            })
            .collect()
    } else {
        vec![NamedSubset::new("all", SubsetPredicate::all())]
    };
    let has_matrix = trace
        .items
        .iter()
        .any(|i| i.attribute(IN_KEY).is_some() && i.attribute(OUT_KEY).is_some());
    if a.k_grid.is_empty() || a.schemes.is_empty() {
        bail!("--k-grid and --schemes need at least one entry");
    }
    let spec = ComparisonSpec {
        schemes: a.schemes.clone(),
        ks: a.k_grid.clone(),
        replicates: a.replicates,
        seed: a.seed,
        subsets,
        matrix: has_matrix.then(MatrixSpec::default),
    };
    let result = run_comparison(&trace, &spec)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_csv(&a.out.join("errors.csv"), &result.rows)?;
    write_csv(&a.out.join("distinct.csv"), &result.distinct)?;
    if has_matrix {
        write_csv(&a.out.join("matrix.csv"), &result.matrix)?;
    }
    writeln!(out, "scheme,k,median_distinct_percent,median_matrix_error")?;
    for &scheme in &spec.schemes {
        for &k in &spec.ks {
            let distinct = result
                .median_distinct_percent(scheme, k)
                .unwrap_or(f64::NAN);
            let matrix = result.median_matrix_error(scheme, k).unwrap_or(f64::NAN);
            writeln!(out, "{scheme},{k},{distinct},{matrix}")?;
        }
    }
    Ok(())
}

fn write_csv<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
