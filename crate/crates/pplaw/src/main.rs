#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pplaw::export::{self, StatsRecord};
use pplaw::io::{self, read_corpus, read_json, read_observations, write_json};
use pplaw::{fit_parallel, read_law, FitArtifact};
use pplaw_core::fit::residuals;
use pplaw_core::stats::log_histogram;
use pplaw_core::synth::{
    generate_corpus, generate_observations, law_with_optimum, simulate_training_curves, PplLaw,
    SyntheticCorpusSpec, SyntheticSpec,
};
use pplaw_core::{
    baseline_select, brute_force_select, chunk_corpus, descent_paths, evaluate_grid, find_optimum,
    greedy_select, split_observations, validate, BandConfig, DescentConfig, DosTarget, FitConfig,
    FitLoss, LawForm, LawParams, Method, OptimumReport, SearchBox, SelectOptions,
    SelectionManifest, Split, WeightingMode,
};
use serde::Serialize;
use serde_json::json;

#[derive(Debug, Parser, Serialize)]
#[command(name = "pplaw", version, about = "Perplexity-aware data scaling laws")]
struct Cli {
    /// Diagnostics printed to stderr.
    #[arg(long, value_enum, global = true, default_value_t = LogLevel::Info)]
    log_level: LogLevel,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum LogLevel {
    Error,
    Warn,
    Info,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
enum Command {
    /// Perplexity statistics and histogram of a corpus.
    Stats(StatsArgs),
    /// Fit a law to observations and validate it on a held-out split.
    Fit(FitArgs),
    /// Loss grid, descent paths and optimum of a fitted law.
    Landscape(LandscapeArgs),
    /// Select chunks under a token budget.
    Select(SelectArgs),
    /// Loss curves a law predicts for selected subsets.
    Simulate(SimulateArgs),
    /// Synthetic laws, observations and corpora.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
enum GenCommand {
    Law(GenLawArgs),
    Obs(GenObsArgs),
    Corpus(GenCorpusArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
enum ModeArg {
    PerDocument,
    TokenWeighted,
}

impl From<ModeArg> for WeightingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::PerDocument => Self::PerDocument,
            ModeArg::TokenWeighted => Self::TokenWeighted,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
enum FormArg {
    Basic,
    Interaction,
}

impl From<FormArg> for LawForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Basic => Self::Basic,
            FormArg::Interaction => Self::Interaction,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "UPPERCASE")]
enum MethodArg {
    #[value(name = "DOS", alias = "dos")]
    Dos,
    #[value(name = "RS", alias = "rs")]
    Rs,
    #[value(name = "LPS", alias = "lps")]
    Lps,
    #[value(name = "HPS", alias = "hps")]
    Hps,
    #[value(name = "BRUTE", alias = "brute")]
    Brute,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Dos => Self::Dos,
            MethodArg::Rs => Self::Rs,
            MethodArg::Lps => Self::Lps,
            MethodArg::Hps => Self::Hps,
            MethodArg::Brute => Self::Brute,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
enum PplLawArg {
    Lognormal,
    ZipfMixture,
}

/// `lo,hi` with `0 < lo < hi`.
fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `lo,hi`, got `{s}`"))?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("`{b}`: {e}"))?;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(format!("need 0 < lo < hi, got {lo},{hi}"));
    }
    Ok((lo, hi))
}

#[derive(Debug, Args, Serialize)]
struct StatsArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::PerDocument)]
    mode: ModeArg,
    /// Skip and count invalid records instead of failing.
    #[arg(long)]
    lenient: bool,
    #[arg(long, default_value_t = 64)]
    bins: usize,
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct FitArgs {
    /// CSV with header `mu,sigma,d_tokens,test_loss[,tag]`, or `.jsonl`.
    #[arg(long)]
    observations: PathBuf,
    #[arg(long, value_enum, default_value_t = FormArg::Interaction)]
    law_form: FormArg,
    /// Held-out share; 0 fits on everything and skips validation.
    #[arg(long, default_value_t = 0.1)]
    val_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for the restarts (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Use only the first N restart points.
    #[arg(long)]
    max_restarts: Option<usize>,
    /// Huber loss with this threshold instead of squared error.
    #[arg(long)]
    huber_delta: Option<f64>,
    #[arg(long, default_value_t = 13.48)]
    band_mu_center: f64,
    #[arg(long, default_value_t = 2.17)]
    band_mu_half_width: f64,
    #[arg(long, default_value_t = 25.0)]
    band_sigma_lo: f64,
    #[arg(long, default_value_t = 1600.0)]
    band_sigma_hi: f64,
    #[arg(long, default_value_t = 0.0)]
    band_margin: f64,
    /// Token count of the band CSV sweep (default: geometric mean of the data).
    #[arg(long)]
    band_d_tokens: Option<f64>,
    #[arg(long, default_value_t = 200)]
    band_points: usize,
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct LandscapeArgs {
    /// Fit artifact or bare law parameters.
    #[arg(long)]
    fit: PathBuf,
    /// Default: the fit's data box.
    #[arg(long, value_parser = parse_range)]
    mu_range: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_range)]
    sigma_range: Option<(f64, f64)>,
    #[arg(long, default_value_t = 64)]
    resolution: usize,
    /// Default: the largest token count in the fit data.
    #[arg(long)]
    d_tokens: Option<f64>,
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SelectArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Fit artifact used to derive the target; not needed when both targets
    /// are given.
    #[arg(long)]
    fit: Option<PathBuf>,
    #[arg(long)]
    budget_tokens: u64,
    #[arg(long, default_value_t = 100)]
    n_chunks: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Dos)]
    method: MethodArg,
    /// Seeds chunking and the RS permutation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    target_mu: Option<f64>,
    #[arg(long)]
    target_sigma2: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    w_mu: f64,
    #[arg(long, default_value_t = 1.0)]
    w_sigma: f64,
    /// Weigh squared relative errors: `w_mu = 1/mu^2`, `w_sigma = 1/sigma2^2`.
    #[arg(long, conflicts_with_all = ["w_mu", "w_sigma"])]
    relative_weights: bool,
    #[arg(long, value_enum, default_value_t = ModeArg::PerDocument)]
    mode: ModeArg,
    /// LPS/HPS chunk perplexity cutoff (default: the target mean).
    #[arg(long)]
    ppl_cutoff: Option<f64>,
    /// Search box for the optimum (default: the fit's data box).
    #[arg(long, value_parser = parse_range)]
    mu_range: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_range)]
    sigma_range: Option<(f64, f64)>,
    #[arg(long)]
    lenient: bool,
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    /// Law parameters or fit artifact of the ground truth.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long = "manifest", required = true)]
    manifests: Vec<PathBuf>,
    /// Comma-separated token counts (default: 10 log-spaced points up to the
    /// largest budget).
    #[arg(long, value_delimiter = ',')]
    d_schedule: Vec<f64>,
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct GenLawArgs {
    #[arg(long, value_enum, default_value_t = FormArg::Interaction)]
    law_form: FormArg,
    #[arg(long, default_value_t = 1.5)]
    e: f64,
    #[arg(long, default_value_t = 2000.0)]
    d_c: f64,
    #[arg(long, default_value_t = 0.3)]
    alpha_d: f64,
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    alpha0: f64,
    #[arg(long, default_value_t = -0.001, allow_hyphen_values = true)]
    alpha1: f64,
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    beta0: f64,
    #[arg(long, default_value_t = -0.002, allow_hyphen_values = true)]
    beta1: f64,
    /// With `--sigma-star`, solve alpha0 and beta0 so the loss has its
    /// minimum at this point.
    #[arg(long, requires = "sigma_star")]
    mu_star: Option<f64>,
    #[arg(long, requires = "mu_star")]
    sigma_star: Option<f64>,
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct GenObsArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value_t = 200)]
    n_obs: usize,
    #[arg(long, value_parser = parse_range, default_value = "5,30")]
    mu_range: (f64, f64),
    #[arg(long, value_parser = parse_range, default_value = "10,400")]
    sigma_range: (f64, f64),
    #[arg(long, value_parser = parse_range, default_value = "1e7,1e10")]
    d_range: (f64, f64),
    #[arg(long, default_value_t = 0.0)]
    noise_tau: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write `observations.jsonl` instead of CSV.
    #[arg(long)]
    jsonl: bool,
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct GenCorpusArgs {
    #[arg(long, default_value_t = 10_000)]
    n_docs: usize,
    #[arg(long, value_enum, default_value_t = PplLawArg::Lognormal)]
    ppl_law: PplLawArg,
    /// Log of the median perplexity (of the first component for zipf).
    #[arg(long, default_value_t = 13.48f64.ln())]
    log_mean: f64,
    #[arg(long, default_value_t = 0.5)]
    log_std: f64,
    #[arg(long, default_value_t = 1.1)]
    zipf_s: f64,
    #[arg(long, default_value_t = 8)]
    components: u32,
    #[arg(long, default_value_t = 0.4)]
    log_step: f64,
    #[arg(long, default_value_t = 1000.0)]
    token_median: f64,
    #[arg(long, default_value_t = 0.8)]
    token_spread: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output_dir: PathBuf,
}

struct Log(LogLevel);

impl Log {
    fn info(&self, msg: impl AsRef<str>) {
        if self.0 >= LogLevel::Info {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn warn(&self, msg: impl AsRef<str>) {
        if self.0 >= LogLevel::Warn {
            eprintln!("warning: {}", msg.as_ref());
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: &Cli) -> Result<()> {
    let log = Log(cli.log_level);
    match &cli.command {
        Command::Stats(a) => stats(cli, a, &log),
        Command::Fit(a) => fit(cli, a, &log),
        Command::Landscape(a) => landscape(cli, a, &log),
        Command::Select(a) => select(cli, a, &log),
        Command::Simulate(a) => simulate(cli, a, &log),
        Command::Gen(GenCommand::Law(a)) => gen_law(cli, a, &log),
        Command::Gen(GenCommand::Obs(a)) => gen_obs(cli, a, &log),
        Command::Gen(GenCommand::Corpus(a)) => gen_corpus(cli, a, &log),
    }
}

fn output_dir(dir: &Path) -> Result<&Path> {
    fs::create_dir_all(dir).with_context(|| format!("--output-dir {}", dir.display()))?;
    Ok(dir)
}

/// `run.json`: the parsed command line plus values resolved from inputs.
fn write_run(dir: &Path, cli: &Cli, resolved: serde_json::Value) -> Result<()> {
    let run = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "args": cli,
        "resolved": resolved,
    });
    write_json(&dir.join("run.json"), &run)
}

fn stats(cli: &Cli, a: &StatsArgs, log: &Log) -> Result<()> {
    let dir = output_dir(&a.output_dir)?;
    let ingest = read_corpus(&a.corpus, !a.lenient)?;
    if ingest.skipped > 0 {
        log.warn(format!("skipped {} invalid records", ingest.skipped));
    }
    let corpus = &ingest.corpus;
    let record = StatsRecord::new(&corpus.stats(a.mode.into()))?;
    let ppls: Vec<f64> = corpus.documents().iter().map(|d| d.ppl).collect();
    let hist = log_histogram(&ppls, a.bins)?;
    write_json(&dir.join("stats.json"), &record)?;
    export::write_histogram(&dir.join("histogram.csv"), &hist)?;
    write_run(
        dir,
        cli,
        json!({ "n_documents": corpus.len(), "total_tokens": corpus.total_tokens(), "skipped": ingest.skipped }),
    )?;
    println!("{}", serde_json::to_string_pretty(&record)?);
    Ok(())
}

fn geometric_mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v.ln(), n + 1));
    (sum / n as f64).exp()
}

fn fit(cli: &Cli, a: &FitArgs, log: &Log) -> Result<()> {
    let dir = output_dir(&a.output_dir)?;
    let obs = read_observations(&a.observations)?;
    let split = if a.val_fraction == 0.0 {
        Split {
            train: obs.clone(),
            val: Vec::new(),
        }
    } else {
        split_observations(&obs, a.val_fraction, a.seed).context("--val-fraction")?
    };
    let config = FitConfig {
        max_restarts: a.max_restarts,
        loss: a
            .huber_delta
            .map_or(FitLoss::Squared, |delta| FitLoss::Huber { delta }),
        ..FitConfig::default()
    };
    let band = BandConfig {
        mu_center: a.band_mu_center,
        mu_half_width: a.band_mu_half_width,
        sigma_lo: a.band_sigma_lo,
        sigma_hi: a.band_sigma_hi,
        loss_margin: a.band_margin,
    };
    let mut result = fit_parallel(&split.train, a.law_form.into(), &config, a.threads)?;
    let validation = if split.val.is_empty() {
        None
    } else {
        let v = validate(&result, &split.val, &band)?;
        result.record_validation(&v);
        Some(v)
    };
    if !result.converged {
        log.warn("best restart hit the iteration cap");
    }

    let params = result.params;
    let mut rows = Vec::with_capacity(obs.len());
    for (name, set) in [("train", &split.train), ("val", &split.val)] {
        for (o, r) in set.iter().zip(residuals(&params, set)?) {
            rows.push((name, o, r));
        }
    }
    export::write_residuals_csv(&dir.join("residuals.csv"), &rows)?;
    let band_d = a
        .band_d_tokens
        .unwrap_or_else(|| geometric_mean(obs.iter().map(|o| o.d_tokens)));
    export::write_band_csv(
        &dir.join("band.csv"),
        &band.curve(&params, band_d, a.band_points)?,
    )?;

    let artifact = FitArtifact {
        result,
        validation,
        config,
        band,
        val_fraction: a.val_fraction,
        seed: a.seed,
        data_box: SearchBox::around_observations(&obs, 0.0)?,
        d_max: obs.iter().map(|o| o.d_tokens).fold(0.0, f64::max),
    };
    write_json(&dir.join("fit.json"), &artifact)?;
    write_run(
        dir,
        cli,
        json!({ "fit_config": config, "band": band, "band_d_tokens": band_d }),
    )?;
    log.info(format!(
        "n_train={} n_val={} train_rmse={:.3e} val_rmse={}",
        artifact.result.n_train,
        artifact.result.n_val,
        artifact.result.train_rmse,
        artifact
            .result
            .val_rmse
            .map_or("n/a".to_string(), |v| format!("{v:.3e}")),
    ));
    Ok(())
}

/// Search box from explicit ranges, falling back to the fit's data box.
fn search_box(
    fit: Option<&FitArtifact>,
    mu: Option<(f64, f64)>,
    sigma: Option<(f64, f64)>,
) -> Result<SearchBox> {
    let fallback = fit.map(|f| f.data_box);
    let mu = mu
        .or(fallback.map(|b| (b.mu_lo, b.mu_hi)))
        .context("--mu-range is required when the law has no fit data box")?;
    let sigma = sigma
        .or(fallback.map(|b| (b.sigma_lo, b.sigma_hi)))
        .context("--sigma-range is required when the law has no fit data box")?;
    Ok(SearchBox::new(mu, sigma)?)
}

/// The artifact if `path` is one, plus the law it carries.
fn load_fit(path: &Path) -> Result<(Option<FitArtifact>, LawParams)> {
    let params = read_law(path)?;
    let artifact = read_json::<FitArtifact>(path).ok();
    Ok((artifact, params))
}

fn landscape(cli: &Cli, a: &LandscapeArgs, log: &Log) -> Result<()> {
    let dir = output_dir(&a.output_dir)?;
    let (artifact, params) = load_fit(&a.fit)?;
    let bounds = search_box(artifact.as_ref(), a.mu_range, a.sigma_range)?;
    let d = a
        .d_tokens
        .or(artifact.as_ref().map(|f| f.d_max))
        .context("--d-tokens is required for a bare law file")?;
    let grid = evaluate_grid(&params, &bounds, a.resolution, d)?;
    let starts = [
        (bounds.mu_lo, bounds.sigma_lo),
        (bounds.mu_hi, bounds.sigma_lo),
        (bounds.mu_lo, bounds.sigma_hi),
    ];
    let paths = descent_paths(&params, &bounds, &starts, d, &DescentConfig::default())?;
    let opt = find_optimum(&params, &bounds, d)?;
    if opt.clamped {
        log.warn("optimum lies on the search box boundary");
    }
    export::write_grid_csv(&dir.join("grid.csv"), &grid)?;
    write_json(&dir.join("grid.json"), &grid)?;
    export::write_paths_csv(&dir.join("paths.csv"), &paths)?;
    write_json(&dir.join("optimum.json"), &opt)?;
    write_run(
        dir,
        cli,
        json!({ "search_box": bounds, "d_tokens": d, "starts": starts }),
    )?;
    log.info(format!(
        "mu_hat={} sigma_hat={} loss={} clamped={}",
        opt.mu_hat, opt.sigma_hat, opt.loss_at_opt, opt.clamped
    ));
    Ok(())
}

fn select(cli: &Cli, a: &SelectArgs, log: &Log) -> Result<()> {
    let dir = output_dir(&a.output_dir)?;
    let mut optimum: Option<OptimumReport> = None;
    let mut bounds = None;
    let (mu_hat, sigma2_hat) = match (a.target_mu, a.target_sigma2) {
        (Some(m), Some(s2)) => (m, s2),
        (m, s2) => {
            let path = a
                .fit
                .as_ref()
                .context("--fit is required unless --target-mu and --target-sigma2 are both set")?;
            let (artifact, params) = load_fit(path)?;
            let b = search_box(artifact.as_ref(), a.mu_range, a.sigma_range)?;
            let opt = find_optimum(&params, &b, a.budget_tokens as f64)?;
            if opt.clamped {
                log.warn("optimum is clamped to the search box; using it as the target anyway");
            }
            bounds = Some(b);
            optimum = Some(opt);
            (
                m.unwrap_or(opt.mu_hat),
                s2.unwrap_or(opt.sigma_hat * opt.sigma_hat),
            )
        }
    };
    let target = if a.relative_weights {
        DosTarget::relative(mu_hat, sigma2_hat)?
    } else {
        DosTarget::with_weights(mu_hat, sigma2_hat, a.w_mu, a.w_sigma)?
    };

    let ingest = read_corpus(&a.corpus, !a.lenient)?;
    if ingest.skipped > 0 {
        log.warn(format!("skipped {} invalid records", ingest.skipped));
    }
    let corpus = &ingest.corpus;
    let chunks = chunk_corpus(corpus, a.n_chunks, a.seed).context("--n-chunks")?;
    let opts = SelectOptions {
        mode: a.mode.into(),
        early_stop_factor: None,
    };
    let method: Method = a.method.into();
    let manifest: SelectionManifest = match method {
        Method::Dos => greedy_select(&chunks, corpus, &target, a.budget_tokens, &opts),
        Method::Brute => brute_force_select(&chunks, corpus, &target, a.budget_tokens, &opts),
        m => baseline_select(
            &chunks,
            corpus,
            m,
            a.budget_tokens,
            a.seed,
            a.ppl_cutoff,
            &target,
            &opts,
        ),
    }
    .context("--budget-tokens")?;

    let doc_ids = manifest.document_ids(&chunks)?;
    write_json(&dir.join("manifest.json"), &manifest)?;
    io::write_lines(&dir.join("doc_ids.txt"), &doc_ids)?;
    io::write_chunks(&dir.join("chunks.jsonl"), &chunks)?;
    write_run(
        dir,
        cli,
        json!({ "target": target, "optimum": optimum, "search_box": bounds, "skipped": ingest.skipped }),
    )?;
    log.info(format!(
        "{}: {} chunks, {} documents, {} tokens, final_J={}",
        method.as_str(),
        manifest.selected.len(),
        doc_ids.len(),
        manifest.tokens(),
        manifest.final_j
    ));
    Ok(())
}

fn simulate(cli: &Cli, a: &SimulateArgs, log: &Log) -> Result<()> {
    let dir = output_dir(&a.output_dir)?;
    let truth = read_law(&a.truth)?;
    let manifests = a
        .manifests
        .iter()
        .map(|p| read_json::<SelectionManifest>(p))
        .collect::<Result<Vec<_>>>()?;
    let schedule = if a.d_schedule.is_empty() {
        let d_max = manifests.iter().map(|m| m.t_budget).max().unwrap_or(0) as f64;
        if !(d_max > 0.0) {
            bail!("--d-schedule is required when manifests carry no budget");
        }
        (0..10)
            .map(|i| d_max * 100f64.powf(i as f64 / 9.0 - 1.0))
            .collect()
    } else {
        a.d_schedule.clone()
    };
    let curves = simulate_training_curves(&truth, &manifests, &schedule)?;
    export::write_curves_csv(&dir.join("curves.csv"), &curves)?;
    write_json(&dir.join("curves.json"), &curves)?;
    write_run(dir, cli, json!({ "d_schedule": schedule }))?;
    for c in &curves {
        log.info(format!(
            "{}: final loss {}",
            c.method.as_str(),
            c.final_loss().unwrap_or(f64::NAN)
        ));
    }
    Ok(())
}

fn gen_law(cli: &Cli, a: &GenLawArgs, log: &Log) -> Result<()> {
    let dir = output_dir(&a.output_dir)?;
    let law = match (a.mu_star, a.sigma_star, a.law_form) {
        (Some(m), Some(s), FormArg::Interaction) => {
            law_with_optimum(a.e, a.d_c, a.alpha_d, a.alpha1, a.beta1, m, s)?
        }
        (Some(_), _, FormArg::Basic) => bail!("--mu-star needs the interaction form"),
        (_, _, FormArg::Basic) => LawParams::basic(a.e, a.d_c, a.alpha0, a.beta0, a.alpha_d)?,
        _ => LawParams::interaction(a.e, a.d_c, a.alpha0, a.alpha1, a.beta0, a.beta1, a.alpha_d)?,
    };
    write_json(&dir.join("law.json"), &law)?;
    write_run(dir, cli, json!({ "law": law }))?;
    log.info(serde_json::to_string(&law)?);
    Ok(())
}

fn gen_obs(cli: &Cli, a: &GenObsArgs, log: &Log) -> Result<()> {
    let dir = output_dir(&a.output_dir)?;
    let spec = SyntheticSpec {
        truth: read_law(&a.truth)?,
        mu_range: a.mu_range,
        sigma_range: a.sigma_range,
        d_range: a.d_range,
        n_obs: a.n_obs,
        noise_tau: a.noise_tau,
        seed: a.seed,
    };
    let obs = generate_observations(&spec)?;
    let name = if a.jsonl {
        "observations.jsonl"
    } else {
        "observations.csv"
    };
    io::write_observations(&dir.join(name), &obs)?;
    write_run(dir, cli, json!({ "spec": spec }))?;
    log.info(format!("wrote {} observations", obs.len()));
    Ok(())
}

fn gen_corpus(cli: &Cli, a: &GenCorpusArgs, log: &Log) -> Result<()> {
    let dir = output_dir(&a.output_dir)?;
    let ppl_law = match a.ppl_law {
        PplLawArg::Lognormal => PplLaw::LogNormal {
            log_mean: a.log_mean,
            log_std: a.log_std,
        },
        PplLawArg::ZipfMixture => PplLaw::ZipfMixture {
            s: a.zipf_s,
            components: a.components,
            log_mean: a.log_mean,
            log_step: a.log_step,
            log_std: a.log_std,
        },
    };
    let spec = SyntheticCorpusSpec {
        n_docs: a.n_docs,
        ppl_law,
        token_median: a.token_median,
        token_spread: a.token_spread,
        seed: a.seed,
    };
    let corpus = generate_corpus(&spec)?;
    io::write_corpus(&dir.join("corpus.jsonl"), &corpus)?;
    write_run(dir, cli, json!({ "spec": spec }))?;
    log.info(format!(
        "wrote {} documents, {} tokens",
        corpus.len(),
        corpus.total_tokens()
    ));
    Ok(())
}
