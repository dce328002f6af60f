use std::path::PathBuf;
use std::process::ExitCode;

use airtran::scoring::{Method, ScoreConfig, Similarity};
use airtran_cli::{
    cmd_eval, cmd_plot, cmd_sample, cmd_score, cmd_sweep, cmd_synth, cmd_validate, CliError, RunOptions, SweepPlan,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "airtran",
    version,
    about = "Estimate how well pretrained embedding models transfer to a retrieval dataset"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Airtran,
    Rank,
    Qtran,
    Loglik,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Airtran => Method::Airtran,
            MethodArg::Rank => Method::Rank,
            MethodArg::Qtran => Method::Qtran,
            MethodArg::Loglik => Method::Loglik,
        }
    }
}

#[derive(Args)]
struct StageArgs {
    /// Seed for candidate sampling and sampled uniformity.
    #[arg(long, env = "AIRTRAN_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = airtran::isotropize::DEFAULT_EPSILON_REL)]
    epsilon_rel: f64,
    #[arg(long, default_value_t = airtran::adascale::DEFAULT_LAMBDA_REL)]
    lambda_rel: f64,
    #[arg(long)]
    no_whiten: bool,
    #[arg(long)]
    no_adascale: bool,
    /// Cosine instead of dot-product similarity.
    #[arg(long)]
    cosine: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Write zero timings so repeated runs give identical bytes.
    #[arg(long)]
    reproducible: bool,
}

impl StageArgs {
    fn options(&self, method: Method) -> RunOptions {
        RunOptions {
            method,
            seed: self.seed,
            config: ScoreConfig {
                use_whitening: !self.no_whiten,
                use_adaptive_scaling: !self.no_adascale,
                epsilon_rel: self.epsilon_rel,
                lambda_rel: self.lambda_rel,
                similarity: if self.cosine {
                    Similarity::Cosine
                } else {
                    Similarity::Dot
                },
            },
            jobs: self.jobs,
            reproducible: self.reproducible,
            expected_k: None,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Score every model in a pool directory.
    Score {
        /// Directory with one <model_id>/{queries,docs}.mat per model.
        pool: PathBuf,
        /// Candidate-group manifest (JSONL).
        manifest: PathBuf,
        #[arg(long, value_enum, default_value = "airtran")]
        method: MethodArg,
        /// Expected candidate size; checked against the manifest.
        #[arg(long)]
        k: Option<usize>,
        /// Dataset name recorded in the report (default: pool directory name).
        #[arg(long)]
        dataset: Option<String>,
        #[command(flatten)]
        stages: StageArgs,
        /// Report path; printed to stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Kendall tau and best-model rank of a report against ground truth.
    Eval {
        report: PathBuf,
        truth: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generate a synthetic pool from a JSON config.
    Synth {
        config: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Sample candidate groups from relevant pairs.
    Sample {
        /// JSONL of {"q", "d"} relevant pairs.
        pairs: PathBuf,
        #[arg(long)]
        pool_size: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, env = "AIRTRAN_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = airtran::data::DEFAULT_MAX_QUERIES)]
        max_queries: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Score and evaluate over a grid of candidate sizes and seeds.
    Sweep {
        pool: PathBuf,
        /// Relevant pairs (default: <pool>/relevant.jsonl).
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// Ground truth (default: <pool>/truth.json).
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "airtran")]
        method: Vec<MethodArg>,
        /// Candidate sizes, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6,7,8,9,10")]
        k: Vec<usize>,
        /// Number of seeds, counting up from --seed.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long, default_value_t = airtran::data::DEFAULT_MAX_QUERIES)]
        max_queries: usize,
        #[command(flatten)]
        stages: StageArgs,
        #[arg(long)]
        output: PathBuf,
    },
    /// Draw tau-vs-k and seconds-vs-k SVG charts from a sweep CSV.
    Plot {
        sweep: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Check a pool and manifest for consistency without scoring.
    Validate { pool: PathBuf, manifest: PathBuf },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Score {
            pool,
            manifest,
            method,
            k,
            dataset,
            stages,
            output,
        } => {
            let opts = RunOptions {
                expected_k: k,
                ..stages.options(method.into())
            };
            let report = cmd_score(&pool, &manifest, dataset.as_deref(), &opts, output.as_deref())?;
            match output {
                Some(_) => {
                    if let Some(top) = report.top() {
                        println!("{}", top.model);
                    }
                }
                None => print!("{}", report.to_json()),
            }
        }
        Command::Eval { report, truth, output } => {
            let eval = cmd_eval(&report, &truth, output.as_deref())?;
            println!(
                "tau {:.4}  tau_b {:.4}  best model ranked {} of {}",
                eval.tau, eval.tau_b, eval.best_model_estimated_rank, eval.model_count
            );
        }
        Command::Synth { config, output } => {
            let cfg = cmd_synth(&config, &output)?;
            println!("wrote {} models to {}", cfg.model_count, output.display());
        }
        Command::Sample {
            pairs,
            pool_size,
            k,
            seed,
            max_queries,
            output,
        } => {
            let ds = cmd_sample(&pairs, pool_size, k, seed, Some(max_queries), &output)?;
            println!("{} queries, {} pairs", ds.query_count(), ds.pair_count());
        }
        Command::Sweep {
            pool,
            pairs,
            truth,
            method,
            k,
            seeds,
            max_queries,
            stages,
            output,
        } => {
            let opts = stages.options(Method::Airtran);
            let plan = SweepPlan {
                pairs: pairs.unwrap_or_else(|| pool.join("relevant.jsonl")),
                truth: truth.unwrap_or_else(|| pool.join("truth.json")),
                pool_dir: pool,
                ks: k,
                seeds: (0..seeds).map(|i| stages.seed.wrapping_add(i)).collect(),
                methods: method.into_iter().map(Method::from).collect(),
                max_queries: Some(max_queries),
            };
            let rows = cmd_sweep(&plan, &opts, &output)?;
            println!("{} rows written to {}", rows.len(), output.display());
        }
        Command::Plot { sweep, output } => {
            for path in cmd_plot(&sweep, &output)? {
                println!("{}", path.display());
            }
        }
        Command::Validate { pool, manifest } => {
            let summary = cmd_validate(&pool, &manifest)?;
            println!(
                "{} queries, k = {}, {} models ok",
                summary.queries,
                summary.k,
                summary.models.len()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            // Malformed arguments count as bad configuration, not a missing file.
            return ExitCode::from(airtran_cli::exit::BAD_CONFIG as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
