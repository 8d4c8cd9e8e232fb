use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use layercode::cluster::Schedule;
use layercode::layer::Variant;
use layercode_bench::ensemble::{build_ensemble, EnsembleManifest};
use layercode_bench::experiment::{
    ensemble_rng, memory_experiment, threshold_experiment, DecoderKind, ExperimentSpec, InputDecoderKind, SummaryRow,
};
use layercode_bench::output::{load_csv, save_csv, save_json, write_jsonl};
use layercode_bench::report::fit_report;
use layercode_bench::BenchError;

#[derive(Parser)]
#[command(name = "layercode", about = "Layer code experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample random input codes and keep the best balanced ones.
    Ensemble {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Logical failure rate under i.i.d. bit flips.
    Threshold {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        /// Trials per point recorded as decode traces (cluster decoder only).
        #[arg(long, default_value_t = 0)]
        trace: usize,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        code: CodeArgs,
    },
    /// Memory time under thermal noise.
    Memory {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        beta: Vec<f64>,
        /// Clock at which surviving trials are censored.
        #[arg(long, default_value_t = 1e9)]
        t_max: f64,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        code: CodeArgs,
    },
    /// Scaling fits from a memory summary CSV.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 40)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Codes sampled per length.
    #[arg(long, default_value_t = 2000)]
    candidates: usize,
    /// Codes kept per length.
    #[arg(long, default_value_t = 20)]
    keep: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CodeArgs {
    #[arg(long, default_value = "cluster")]
    decoder: DecoderKind,
    /// Cluster growth schedule: linear or exponential.
    #[arg(long, default_value = "linear")]
    schedule: Schedule,
    #[arg(long, default_value = "minw")]
    input_decoder: InputDecoderKind,
    /// Layer spacing.
    #[arg(long = "K", default_value_t = 1)]
    spacing: usize,
    #[arg(long, default_value = "terminated")]
    variant: Variant,
}

#[derive(Serialize)]
struct Manifest<'a> {
    spec: &'a ExperimentSpec,
    ensembles: &'a [EnsembleManifest],
}

fn prepare(dir: &Path) -> Result<(), BenchError> {
    Ok(fs::create_dir_all(dir)?)
}

fn spec_from(mut spec: ExperimentSpec, common: &Common, code: &CodeArgs) -> ExperimentSpec {
    spec.workers = common.workers;
    spec.candidates = common.candidates;
    spec.keep = common.keep;
    spec.decoder = code.decoder;
    spec.schedule = code.schedule;
    spec.input_decoder = code.input_decoder;
    spec.spacing = code.spacing;
    spec.variant = code.variant;
    spec
}

fn run(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Ensemble { n, common } => {
            prepare(&common.out)?;
            let pool = rayon::ThreadPoolBuilder::new().num_threads(common.workers).build()?;
            for &n in &n {
                let mut rng = ensemble_rng(common.seed, n);
                let e = pool.install(|| build_ensemble(n, common.candidates, common.keep, &mut rng))?;
                if e.shortfall() > 0 {
                    eprintln!("n = {n}: kept {} of {} requested codes", e.codes.len(), e.requested);
                }
                for c in &e.codes {
                    fs::write(common.out.join(format!("code_n{n}_{}.txt", c.id)), c.code.to_text())?;
                }
                save_json(&e.manifest(common.seed), &common.out.join(format!("ensemble_n{n}.json")))?;
            }
        }
        Command::Threshold { n, p, trace, common, code } => {
            prepare(&common.out)?;
            let mut spec = spec_from(ExperimentSpec::threshold(n, p, common.trials, common.seed), &common, &code);
            spec.traced_trials = trace;
            let out = threshold_experiment(&spec)?;
            save_csv(&out.rows, &common.out.join("threshold.csv"))?;
            if !out.traces.is_empty() {
                write_jsonl(&out.traces, fs::File::create(common.out.join("trace.jsonl"))?)?;
            }
            let manifest = Manifest {
                spec: &spec,
                ensembles: &out.ensembles,
            };
            save_json(&manifest, &common.out.join("manifest.json"))?;
        }
        Command::Memory {
            n,
            beta,
            t_max,
            common,
            code,
        } => {
            prepare(&common.out)?;
            let mut spec = spec_from(ExperimentSpec::memory(n, beta, common.trials, common.seed), &common, &code);
            spec.t_max = t_max;
            let out = memory_experiment(&spec)?;
            save_csv(&out.trials, &common.out.join("memory_trials.csv"))?;
            save_csv(&out.summary, &common.out.join("memory_summary.csv"))?;
            let manifest = Manifest {
                spec: &spec,
                ensembles: &out.ensembles,
            };
            save_json(&manifest, &common.out.join("manifest.json"))?;
        }
        Command::Fit { input, out } => {
            let rows: Vec<SummaryRow> = load_csv(&input)?;
            save_json(&fit_report(&rows)?, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
