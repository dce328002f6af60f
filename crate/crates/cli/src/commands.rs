use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use airtran::data::{
    read_manifest, read_relevant_pairs, sample_candidates, write_manifest, ModelPoolTruth, RankingDataset,
};
use airtran::evaluation::{evaluate_report, EvalReport};
use airtran::scoring::{score_model, Method, ModelScore, ReportConfig, ScoreConfig, TransferabilityReport};
use airtran::synthpool::{generate_pool, SynthConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io::{self, load_model, model_ids, ModelEmbeddings};

/// Settings shared by the scoring commands.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub method: Method,
    pub seed: u64,
    pub config: ScoreConfig,
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
    /// Record zero seconds so reports are byte-identical across runs.
    pub reproducible: bool,
    /// Candidate size the manifest must have, when given.
    pub expected_k: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            method: Method::Airtran,
            seed: 0,
            config: ScoreConfig::default(),
            jobs: None,
            reproducible: false,
            expected_k: None,
        }
    }
}

impl RunOptions {
    fn thread_pool(&self) -> Result<rayon::ThreadPool> {
        if self.jobs == Some(0) {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))
    }

    fn check(&self) -> Result<()> {
        let c = &self.config;
        if !(c.epsilon_rel.is_finite() && c.epsilon_rel > 0.0) {
            return Err(CliError::Config(format!(
                "epsilon-rel must be positive, got {}",
                c.epsilon_rel
            )));
        }
        if !(c.lambda_rel.is_finite() && c.lambda_rel >= 0.0) {
            return Err(CliError::Config(format!(
                "lambda-rel must be non-negative, got {}",
                c.lambda_rel
            )));
        }
        if !self.method.uses_stages() && !(c.use_whitening && c.use_adaptive_scaling) {
            log::warn!(
                "method {} works on raw embeddings; stage flags are ignored",
                self.method
            );
        }
        Ok(())
    }
}

fn score_all(models: &[ModelEmbeddings], dataset: &RankingDataset, opts: &RunOptions) -> Result<Vec<ModelScore>> {
    let pool = opts.thread_pool()?;
    pool.install(|| {
        models
            .par_iter()
            .map(|m| score_one(m, dataset, opts))
            .collect::<Result<Vec<_>>>()
    })
}

fn score_one(m: &ModelEmbeddings, dataset: &RankingDataset, opts: &RunOptions) -> Result<ModelScore> {
    let fail = |e| CliError::model(&m.id, e);
    dataset.check_bounds(m.queries.rows(), m.docs.rows()).map_err(fail)?;
    let timed = score_model(opts.method, dataset, &m.queries, &m.docs, &opts.config, opts.seed).map_err(fail)?;
    log::info!("{}: {:.6} in {:.3}s", m.id, timed.score, timed.seconds);
    Ok(ModelScore {
        model: m.id.clone(),
        score: timed.score,
        seconds: if opts.reproducible { 0.0 } else { timed.seconds },
    })
}

fn load_pool(pool_dir: &Path, opts: &RunOptions) -> Result<Vec<ModelEmbeddings>> {
    let ids = model_ids(pool_dir)?;
    opts.thread_pool()?
        .install(|| ids.par_iter().map(|id| load_model(pool_dir, id)).collect())
}

fn dataset_name(pool_dir: &Path) -> String {
    pool_dir
        .canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "pool".into())
}

/// Scores every model under `pool_dir` on the manifest's candidate groups.
pub fn cmd_score(
    pool_dir: &Path,
    manifest: &Path,
    dataset: Option<&str>,
    opts: &RunOptions,
    output: Option<&Path>,
) -> Result<TransferabilityReport> {
    opts.check()?;
    let ds = io::read_with(manifest, read_manifest)?;
    if let Some(k) = opts.expected_k.filter(|&k| k != ds.k()) {
        return Err(CliError::Config(format!(
            "--k {k} but the manifest has groups of {}",
            ds.k()
        )));
    }
    let models = load_pool(pool_dir, opts)?;
    let scores = score_all(&models, &ds, opts)?;
    let name = dataset.map(str::to_string).unwrap_or_else(|| dataset_name(pool_dir));
    let report = TransferabilityReport::new(
        name,
        ds.k(),
        opts.seed,
        ReportConfig::new(opts.method, &opts.config),
        scores,
    )?;
    if let Some(path) = output {
        io::write_text(path, &report.to_json())?;
    }
    Ok(report)
}

/// Compares a report against ground truth.
pub fn cmd_eval(report: &Path, truth: &Path, output: Option<&Path>) -> Result<EvalReport> {
    let report = io::read_with(report, TransferabilityReport::read)?;
    let truth = io::read_with(truth, ModelPoolTruth::read)?;
    let eval = evaluate_report(&report, &truth)?;
    if let Some(path) = output {
        io::write_text(path, &to_json(&eval))?;
    }
    Ok(eval)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Generates a synthetic pool into `out_dir`: per-model matrices plus
/// `manifest.jsonl`, `relevant.jsonl`, `truth.json` and a copy of the config.
pub fn cmd_synth(config: &Path, out_dir: &Path) -> Result<SynthConfig> {
    let text = std::fs::read_to_string(config).map_err(|e| CliError::io(config, e))?;
    let cfg: SynthConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", config.display())))?;
    let pool = generate_pool(&cfg).map_err(|e| CliError::Config(format!("{}: {e}", config.display())))?;
    for m in &pool.models {
        for (name, matrix) in [("queries.mat", &m.queries), ("docs.mat", &m.docs)] {
            let path = out_dir.join(&m.id).join(name);
            io::write_atomic(&path, |w| airtran::data::write_matrix(matrix, w))?;
        }
    }
    io::write_atomic(&out_dir.join("manifest.jsonl"), |w| write_manifest(&pool.dataset, w))?;
    io::write_text(&out_dir.join("relevant.jsonl"), &relevant_lines(&pool.relevant_pairs))?;
    io::write_atomic(&out_dir.join("truth.json"), |w| pool.truth.write(w))?;
    io::write_text(&out_dir.join("synth.json"), &to_json(&cfg))?;
    Ok(cfg)
}

fn relevant_lines(pairs: &[(usize, usize)]) -> String {
    pairs
        .iter()
        .map(|(q, d)| format!("{{\"q\":{q},\"d\":{d}}}\n"))
        .collect()
}

/// Draws candidate groups of size `k` from relevant pairs.
pub fn cmd_sample(
    pairs: &Path,
    pool_size: usize,
    k: usize,
    seed: u64,
    max_queries: Option<usize>,
    output: &Path,
) -> Result<RankingDataset> {
    let relevant = io::read_with(pairs, read_relevant_pairs)?;
    let ds = sample_candidates(&relevant, pool_size, k, seed, max_queries).map_err(|e| CliError::file(pairs, e))?;
    io::write_atomic(output, |w| write_manifest(&ds, w))?;
    Ok(ds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub seed: u64,
    pub method: Method,
    pub tau: f64,
    pub tau_b: f64,
    pub best_rank: usize,
    pub mean_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub pool_dir: PathBuf,
    pub pairs: PathBuf,
    pub truth: PathBuf,
    pub ks: Vec<usize>,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub max_queries: Option<usize>,
}

/// Scores and evaluates the pool for every (method, k, seed) combination,
/// resampling candidate groups per (k, seed).
pub fn cmd_sweep(plan: &SweepPlan, opts: &RunOptions, output: &Path) -> Result<Vec<SweepRow>> {
    if plan.ks.is_empty() || plan.seeds.is_empty() || plan.methods.is_empty() {
        return Err(CliError::Config("sweep needs at least one k, seed and method".into()));
    }
    opts.check()?;
    let relevant = io::read_with(&plan.pairs, read_relevant_pairs)?;
    let truth = io::read_with(&plan.truth, ModelPoolTruth::read)?;
    let models = load_pool(&plan.pool_dir, opts)?;
    let pool_size = models[0].docs.rows();
    if let Some(m) = models.iter().find(|m| m.docs.rows() != pool_size) {
        return Err(CliError::model(
            &m.id,
            airtran::Error::Shape(format!("{} documents, expected {pool_size}", m.docs.rows())),
        ));
    }
    let mut rows = Vec::new();
    for &method in &plan.methods {
        for &k in &plan.ks {
            for &seed in &plan.seeds {
                let ds = sample_candidates(&relevant, pool_size, k, seed, plan.max_queries)
                    .map_err(|e| CliError::file(&plan.pairs, e))?;
                let run = RunOptions {
                    method,
                    seed,
                    ..opts.clone()
                };
                let scores = score_all(&models, &ds, &run)?;
                let mean_seconds = scores.iter().map(|s| s.seconds).sum::<f64>() / scores.len() as f64;
                let report = TransferabilityReport::new(
                    dataset_name(&plan.pool_dir),
                    k,
                    seed,
                    ReportConfig::new(method, &opts.config),
                    scores,
                )?;
                let eval = evaluate_report(&report, &truth)?;
                log::info!("{method} k={k} seed={seed}: tau {:.4}", eval.tau);
                rows.push(SweepRow {
                    k,
                    seed,
                    method,
                    tau: eval.tau,
                    tau_b: eval.tau_b,
                    best_rank: eval.best_model_estimated_rank,
                    mean_seconds,
                });
            }
        }
    }
    write_sweep(output, &rows)?;
    Ok(rows)
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Config(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(format!("csv: {e}")))?;
    io::write_text(path, &String::from_utf8(bytes).expect("csv is utf-8"))
}

pub fn read_sweep(path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(io::open(path)?);
    r.deserialize()
        .collect::<std::result::Result<Vec<SweepRow>, _>>()
        .map_err(|e| CliError::file(path, airtran::Error::Schema(format!("sweep csv: {e}"))))
}

/// Shape summary of a pool checked against a manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoolSummary {
    pub queries: usize,
    pub k: usize,
    pub models: BTreeMap<String, [usize; 3]>,
}

/// Loads every model and checks it against the manifest without scoring.
pub fn cmd_validate(pool_dir: &Path, manifest: &Path) -> Result<PoolSummary> {
    let ds = io::read_with(manifest, read_manifest)?;
    let mut models = BTreeMap::new();
    for id in model_ids(pool_dir)? {
        let m = load_model(pool_dir, &id)?;
        let fail = |e| CliError::model(&id, e);
        if m.queries.dim() != m.docs.dim() {
            return Err(fail(airtran::Error::Shape(format!(
                "query dim {} but doc dim {}",
                m.queries.dim(),
                m.docs.dim()
            ))));
        }
        ds.check_bounds(m.queries.rows(), m.docs.rows()).map_err(fail)?;
        models.insert(id, [m.queries.rows(), m.docs.rows(), m.queries.dim()]);
    }
    Ok(PoolSummary {
        queries: ds.query_count(),
        k: ds.k(),
        models,
    })
}

/// Writes `tau_vs_k.svg` and `seconds_vs_k.svg` from a sweep CSV.
pub fn cmd_plot(sweep_csv: &Path, out_dir: &Path) -> Result<[PathBuf; 2]> {
    let rows = read_sweep(sweep_csv)?;
    if rows.is_empty() {
        return Err(CliError::file(
            sweep_csv,
            airtran::Error::EmptyInput("sweep has no rows".into()),
        ));
    }
    let tau = crate::plot::line_chart(
        "Kendall tau vs candidate size",
        "k",
        "tau",
        &crate::plot::series(&rows, |r| r.tau),
    );
    let secs = crate::plot::line_chart(
        "Scoring time vs candidate size",
        "k",
        "mean seconds per model",
        &crate::plot::series(&rows, |r| r.mean_seconds),
    );
    let paths = [out_dir.join("tau_vs_k.svg"), out_dir.join("seconds_vs_k.svg")];
    io::write_text(&paths[0], &tau)?;
    io::write_text(&paths[1], &secs)?;
    Ok(paths)
}
