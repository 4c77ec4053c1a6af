//! `ocbp` — build stabilizer codes, generate overcomplete check matrices,
//! decode syndromes, train decoder weights, and run Monte Carlo FER sweeps.

mod manifest;

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use ocbp::code::{BuiltCode, CodeFile, Syndrome};
use ocbp::decoder::{decode, init_priors, DecodeOptions, DecoderGraph, NbpWeights};
use ocbp::nbp::{train, AdamConfig, MultiLossMode, TrainingConfig, TrainingPhase, WeightsFile};
use ocbp::overcomplete::{
    assemble_overcomplete, find_low_weight_rows, AssembleOptions, OvercompleteFile,
    OvercompleteMatrix, SearchEffort, SelectionBudget,
};
use ocbp::sim::{records_from_csv, FerHarness, FerRecord, HarnessConfig};
use ocbp::{DefaultScalar, PauliVector};

use manifest::{load_config_value, RunManifest};

#[derive(Parser)]
#[command(name = "ocbp", version, about = "Quaternary BP decoding of quantum LDPC codes over overcomplete check matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Code construction utilities.
    #[command(subcommand)]
    Code(CodeCommand),
    /// Overcomplete check matrix utilities.
    #[command(subcommand)]
    Oc(OcCommand),
    /// Decode a single syndrome (or an injected error).
    Decode(DecodeArgs),
    /// Train per-iteration decoder weights.
    Train(TrainArgs),
    /// Monte Carlo frame-error-rate sweeps.
    Simulate(SimulateArgs),
    /// Convert a results CSV into a plot-ready table.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum CodeCommand {
    /// Check the CSS/symplectic criterion and print code parameters.
    Validate(ValidateArgs),
}

#[derive(Subcommand)]
enum OcCommand {
    /// Search low-weight redundant checks and assemble the matrix file.
    Gen(OcGenArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Code(CodeCommand::Validate(args)) => cmd_validate(args),
        Command::Oc(OcCommand::Gen(args)) => cmd_oc_gen(args),
        Command::Decode(args) => cmd_decode(args),
        Command::Train(args) => cmd_train(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}

fn load_code(path: &Path) -> Result<BuiltCode> {
    let file = CodeFile::load(path).map_err(|e| anyhow!("{e}"))?;
    file.build().map_err(|e| anyhow!("{e}"))
}

fn load_oc(path: &Path, built: &BuiltCode) -> Result<OvercompleteMatrix> {
    if !built.is_css {
        bail!("overcomplete matrices apply to CSS codes (separate X/Z sides) only");
    }
    let file = OvercompleteFile::load(path).map_err(|e| anyhow!("{e}"))?;
    file.to_matrix(&built.code).map_err(|e| anyhow!("{e}"))
}

fn init_thread_pool(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("initializing the thread pool")?;
    }
    Ok(())
}

/// Parses `2,3` and `3..9` (inclusive) forms into a list.
fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let lo: usize = a.trim().parse().context("range start")?;
        let hi: usize = b.trim().trim_start_matches('=').parse().context("range end")?;
        if hi < lo {
            bail!("empty range {s}");
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',')
        .map(|p| p.trim().parse::<usize>().with_context(|| format!("bad entry '{p}'")))
        .collect()
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad entry '{p}'")))
        .collect()
}

// --------------------------------------------------------------------------
// code validate

#[derive(Args)]
struct ValidateArgs {
    /// Code definition JSON.
    #[arg(long)]
    code: PathBuf,
}

fn cmd_validate(args: ValidateArgs) -> Result<i32> {
    let built = load_code(&args.code)?;
    let code = &built.code;
    println!(
        "code '{}': n = {}, k = {}, d = {}, {} checks ({} X, {} Z), digest {}",
        code.name,
        code.qubits(),
        code.logical_qubits(),
        code.d.map_or_else(|| "?".into(), |d| d.to_string()),
        code.check_count(),
        code.hx.rows(),
        code.hz.rows(),
        &code.digest()[..16],
    );
    if built.is_css {
        let report = code.validate();
        println!("{report}");
        if !report.is_valid() {
            return Ok(2);
        }
    }
    // pairwise commutation of the quaternary rows (also covers explicit
    // generator lists)
    match built.check_matrix() {
        Ok(_) => {
            println!("all checks commute");
            Ok(0)
        }
        Err(e) => {
            println!("check matrix rejected: {e}");
            Ok(2)
        }
    }
}

// --------------------------------------------------------------------------
// oc gen

#[derive(Args)]
struct OcGenArgs {
    /// Code definition JSON.
    #[arg(long)]
    code: PathBuf,
    /// Keep only combination rows of weight at most this.
    #[arg(long)]
    max_weight: Option<usize>,
    /// Cap on extra rows kept per side (lowest weight first).
    #[arg(long)]
    count: Option<usize>,
    /// Seed of the probabilistic search (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Random information sets tried per side.
    #[arg(long)]
    effort_iters: Option<usize>,
    /// Enumerate every nonzero row combination instead of searching.
    #[arg(long)]
    all_combinations: bool,
    /// Output matrix file (JSON).
    #[arg(long)]
    out: PathBuf,
    /// JSON file with a stored configuration (flags override it).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct OcGenConfig {
    code: PathBuf,
    max_weight: usize,
    count: Option<usize>,
    seed: u64,
    effort_iters: usize,
    combo_depth: usize,
    all_combinations: bool,
    out: PathBuf,
}

fn cmd_oc_gen(args: OcGenArgs) -> Result<i32> {
    let mut cfg = match &args.config {
        Some(path) => serde_json::from_value::<OcGenConfig>(load_config_value(path)?)
            .context("parsing --config")?,
        None => OcGenConfig {
            code: args.code.clone(),
            max_weight: 0,
            count: None,
            seed: 0,
            effort_iters: 200,
            combo_depth: 3,
            all_combinations: false,
            out: args.out.clone(),
        },
    };
    cfg.code = args.code;
    if let Some(w) = args.max_weight {
        cfg.max_weight = w;
    }
    if let Some(c) = args.count {
        cfg.count = Some(c);
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(it) = args.effort_iters {
        cfg.effort_iters = it;
    }
    if args.all_combinations {
        cfg.all_combinations = true;
    }
    cfg.out = args.out;

    let built = load_code(&cfg.code)?;
    if !built.is_css {
        bail!("overcomplete generation needs a CSS code (separate X/Z sides)");
    }
    let code = &built.code;
    if cfg.max_weight == 0 {
        if cfg.all_combinations {
            cfg.max_weight = code.qubits();
        } else {
            bail!("--max-weight is required unless --all-combinations is given");
        }
    }
    let effort = if cfg.all_combinations {
        SearchEffort::exhaustive()
    } else {
        SearchEffort {
            iterations: cfg.effort_iters,
            combo_depth: cfg.combo_depth,
            rng_seed: cfg.seed,
            exhaustive: false,
        }
    };
    let x_rows = find_low_weight_rows(&code.hx, cfg.max_weight, &effort).map_err(|e| anyhow!("{e}"))?;
    let z_rows = find_low_weight_rows(&code.hz, cfg.max_weight, &effort).map_err(|e| anyhow!("{e}"))?;
    let options = AssembleOptions {
        budget: SelectionBudget {
            per_weight: None,
            total: cfg.count,
        },
        dedup: true,
    };
    let oc = assemble_overcomplete(code, &x_rows, &z_rows, &options).map_err(|e| anyhow!("{e}"))?;
    OvercompleteFile::from_matrix(&oc)
        .save(&cfg.out)
        .map_err(|e| anyhow!("{e}"))?;
    RunManifest::new("oc gen", &cfg, &[cfg.code.as_path()])?.write_for(&cfg.out)?;
    println!(
        "wrote {}: {} rows ({} X, {} Z) over {} qubits",
        cfg.out.display(),
        oc.row_count(),
        oc.x_row_count(),
        oc.z_row_count(),
        oc.matrix().qubits(),
    );
    Ok(0)
}

// --------------------------------------------------------------------------
// decode

#[derive(Args)]
struct DecodeArgs {
    /// Code definition JSON.
    #[arg(long)]
    code: PathBuf,
    /// `original` or a path to an overcomplete matrix file.
    #[arg(long)]
    matrix: Option<String>,
    /// Syndrome to decode: 0/1 string or 0x-hex, measured against the
    /// original checks.
    #[arg(long)]
    syndrome: Option<String>,
    /// Inject this error instead (dense `IIXYZ..` or sparse `Y7` form,
    /// 1-based positions); its syndrome is computed and decoded.
    #[arg(long)]
    error: Option<String>,
    /// Maximum decoding iterations (default 32).
    #[arg(long)]
    iters: Option<usize>,
    /// Channel prior used to initialize the decoder (default 0.1).
    #[arg(long)]
    epsilon0: Option<f64>,
    /// Trained weights file.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Also write the result JSON here (with a run manifest).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file with a stored configuration (flags override it).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct DecodeConfig {
    code: PathBuf,
    matrix: String,
    syndrome: Option<String>,
    error: Option<String>,
    iters: usize,
    epsilon0: f64,
    weights: Option<PathBuf>,
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct DecodeOutput {
    e_hat: String,
    converged: bool,
    iterations_used: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    logically_equivalent: Option<bool>,
}

fn cmd_decode(args: DecodeArgs) -> Result<i32> {
    let mut cfg = match &args.config {
        Some(path) => serde_json::from_value::<DecodeConfig>(load_config_value(path)?)
            .context("parsing --config")?,
        None => DecodeConfig {
            code: args.code.clone(),
            matrix: "original".into(),
            syndrome: None,
            error: None,
            iters: 32,
            epsilon0: 0.1,
            weights: None,
            out: None,
        },
    };
    cfg.code = args.code;
    if let Some(m) = args.matrix {
        cfg.matrix = m;
    }
    if let Some(s) = args.syndrome {
        cfg.syndrome = Some(s);
        cfg.error = None;
    }
    if let Some(e) = args.error {
        cfg.error = Some(e);
        cfg.syndrome = None;
    }
    if let Some(it) = args.iters {
        cfg.iters = it;
    }
    if let Some(e0) = args.epsilon0 {
        cfg.epsilon0 = e0;
    }
    if let Some(w) = args.weights {
        cfg.weights = Some(w);
    }
    if let Some(o) = args.out {
        cfg.out = Some(o);
    }

    let built = load_code(&cfg.code)?;
    let original = built.check_matrix().map_err(|e| anyhow!("{e}"))?;
    let n = original.qubits();
    let oc = match cfg.matrix.as_str() {
        "original" => None,
        path => Some(load_oc(Path::new(path), &built)?),
    };
    let graph = match &oc {
        Some(oc) => DecoderGraph::from_check_matrix(oc.matrix()),
        None => DecoderGraph::from_check_matrix(&original),
    };
    let weights = cfg
        .weights
        .as_ref()
        .map(|p| -> Result<NbpWeights<DefaultScalar>> {
            let file = WeightsFile::load(p).map_err(|e| anyhow!("{e}"))?;
            file.to_weights(graph.digest()).map_err(|e| anyhow!("{e}"))
        })
        .transpose()?;

    let (z_used, injected) = match (&cfg.syndrome, &cfg.error) {
        (Some(s), None) => {
            let z = Syndrome::parse(s, original.row_count()).map_err(|e| anyhow!("{e}"))?;
            let z_used = match &oc {
                Some(oc) => oc.map_syndrome(&z).map_err(|e| anyhow!("{e}"))?,
                None => z,
            };
            (z_used, None)
        }
        (None, Some(e)) => {
            let e = PauliVector::parse(e, n).map_err(|e| anyhow!("{e}"))?;
            let z = original.syndrome(&e).map_err(|e| anyhow!("{e}"))?;
            let z_used = match &oc {
                Some(oc) => oc.map_syndrome(&z).map_err(|e| anyhow!("{e}"))?,
                None => z,
            };
            (z_used, Some(e))
        }
        _ => bail!("exactly one of --syndrome or --error is required"),
    };

    let prior = init_priors::<DefaultScalar>(cfg.epsilon0).map_err(|e| anyhow!("{e}"))?;
    let result = decode(
        &graph,
        &z_used,
        &prior,
        weights.as_ref(),
        &DecodeOptions::new(cfg.iters),
    )
    .map_err(|e| anyhow!("{e}"))?;

    let logically_equivalent = match &injected {
        Some(e) => {
            let normalizer = original.normalizer();
            Some(
                normalizer
                    .logically_equivalent(e, &result.e_hat)
                    .map_err(|e| anyhow!("{e}"))?,
            )
        }
        None => None,
    };
    let output = DecodeOutput {
        e_hat: result.e_hat.to_string(),
        converged: result.converged,
        iterations_used: result.iterations_used,
        logically_equivalent,
    };
    let text = serde_json::to_string_pretty(&output)?;
    println!("{text}");
    if let Some(out) = &cfg.out {
        std::fs::write(out, &text).with_context(|| format!("writing {}", out.display()))?;
        let mut inputs = vec![cfg.code.as_path()];
        if cfg.matrix != "original" {
            inputs.push(Path::new(&cfg.matrix));
        }
        if let Some(w) = &cfg.weights {
            inputs.push(w.as_path());
        }
        RunManifest::new("decode", &cfg, &inputs)?.write_for(out)?;
    }
    Ok(0)
}

// --------------------------------------------------------------------------
// train

#[derive(Args)]
struct TrainArgs {
    /// Code definition JSON.
    #[arg(long)]
    code: PathBuf,
    /// Overcomplete matrix file to train on (omit to train on the original
    /// checks).
    #[arg(long)]
    oc_matrix: Option<PathBuf>,
    /// Unrolled decoder iterations L (default 3).
    #[arg(long)]
    iters: Option<usize>,
    /// Adam learning rate (default 0.001).
    #[arg(long)]
    lr: Option<f64>,
    /// Pre-training batches (default 1500).
    #[arg(long)]
    batches_phase1: Option<usize>,
    /// Main training batches (default 600).
    #[arg(long)]
    batches_phase2: Option<usize>,
    /// Samples per batch (default 100).
    #[arg(long)]
    batch_size: Option<usize>,
    /// Error weights drawn in phase 1, e.g. `2,3`.
    #[arg(long)]
    phase1_weights: Option<String>,
    /// Error weights drawn in phase 2, e.g. `3..9`.
    #[arg(long)]
    phase2_weights: Option<String>,
    /// Channel prior used to initialize the decoder (default 0.1).
    #[arg(long)]
    epsilon0: Option<f64>,
    /// Master seed for the training sample stream (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output weights file.
    #[arg(long)]
    out: PathBuf,
    /// Training log CSV (defaults to `<out>.log.csv`).
    #[arg(long)]
    log: Option<PathBuf>,
    /// Directory for per-phase checkpoints.
    #[arg(long)]
    checkpoint_dir: Option<PathBuf>,
    /// JSON file with a stored configuration (flags override it).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TrainCliConfig {
    code: PathBuf,
    oc_matrix: Option<PathBuf>,
    iters: usize,
    lr: f64,
    batches_phase1: usize,
    batches_phase2: usize,
    batch_size: usize,
    phase1_weights: Vec<usize>,
    phase2_weights: Vec<usize>,
    epsilon0: f64,
    seed: u64,
    out: PathBuf,
    log: PathBuf,
    checkpoint_dir: Option<PathBuf>,
}

fn cmd_train(args: TrainArgs) -> Result<i32> {
    init_thread_pool(args.threads)?;
    let default_log = |out: &Path| -> PathBuf {
        let mut name = out.file_name().unwrap_or_default().to_os_string();
        name.push(".log.csv");
        out.with_file_name(name)
    };
    let mut cfg = match &args.config {
        Some(path) => serde_json::from_value::<TrainCliConfig>(load_config_value(path)?)
            .context("parsing --config")?,
        None => TrainCliConfig {
            code: args.code.clone(),
            oc_matrix: None,
            iters: 3,
            lr: 0.001,
            batches_phase1: 1500,
            batches_phase2: 600,
            batch_size: 100,
            phase1_weights: vec![2, 3],
            phase2_weights: (3..=9).collect(),
            epsilon0: 0.1,
            seed: 0,
            out: args.out.clone(),
            log: default_log(&args.out),
        checkpoint_dir: None,
        },
    };
    cfg.code = args.code;
    if let Some(m) = args.oc_matrix {
        cfg.oc_matrix = Some(m);
    }
    if let Some(v) = args.iters {
        cfg.iters = v;
    }
    if let Some(v) = args.lr {
        cfg.lr = v;
    }
    if let Some(v) = args.batches_phase1 {
        cfg.batches_phase1 = v;
    }
    if let Some(v) = args.batches_phase2 {
        cfg.batches_phase2 = v;
    }
    if let Some(v) = args.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = &args.phase1_weights {
        cfg.phase1_weights = parse_usize_list(v)?;
    }
    if let Some(v) = &args.phase2_weights {
        cfg.phase2_weights = parse_usize_list(v)?;
    }
    if let Some(v) = args.epsilon0 {
        cfg.epsilon0 = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    cfg.out = args.out;
    cfg.log = args.log.unwrap_or_else(|| default_log(&cfg.out));
    if let Some(d) = args.checkpoint_dir {
        cfg.checkpoint_dir = Some(d);
    }

    let built = load_code(&cfg.code)?;
    let original = built.check_matrix().map_err(|e| anyhow!("{e}"))?;
    let normalizer = original.normalizer();
    let oc = cfg
        .oc_matrix
        .as_ref()
        .map(|p| load_oc(p, &built))
        .transpose()?;
    let graph = match &oc {
        Some(oc) => DecoderGraph::from_check_matrix(oc.matrix()),
        None => DecoderGraph::from_check_matrix(&original),
    };

    let training = TrainingConfig {
        adam: AdamConfig {
            learning_rate: cfg.lr,
            ..AdamConfig::default()
        },
        batch_size: cfg.batch_size,
        phase1: TrainingPhase {
            batches: cfg.batches_phase1,
            error_weights: cfg.phase1_weights.clone(),
        },
        phase2: TrainingPhase {
            batches: cfg.batches_phase2,
            error_weights: cfg.phase2_weights.clone(),
        },
        iterations: cfg.iters,
        rng_seed: cfg.seed,
        multi_loss_mode: MultiLossMode::AverageAll,
    };
    if let Some(dir) = &cfg.checkpoint_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let (weights, log) = train::<f64>(
        &graph,
        &normalizer,
        cfg.epsilon0,
        &training,
        cfg.checkpoint_dir.as_deref(),
    )
    .map_err(|e| anyhow!("{e}"))?;

    WeightsFile::from_weights(&weights, graph.digest())
        .save(&cfg.out)
        .map_err(|e| anyhow!("{e}"))?;
    std::fs::write(&cfg.log, log.to_csv()).with_context(|| format!("writing {}", cfg.log.display()))?;
    let mut inputs = vec![cfg.code.as_path()];
    if let Some(m) = &cfg.oc_matrix {
        inputs.push(m.as_path());
    }
    let manifest = RunManifest::new("train", &cfg, &inputs)?;
    manifest.write_for(&cfg.out)?;
    manifest.write_for(&cfg.log)?;
    let final_loss = log.rows.last().map(|r| r.mean_loss).unwrap_or(f64::NAN);
    println!(
        "trained {} batches; final batch mean loss {final_loss:.6}; wrote {} and {}",
        log.rows.len(),
        cfg.out.display(),
        cfg.log.display(),
    );
    // diagnostic: mean check weight by check degree (low-degree checks tend
    // to end up with the larger weights)
    let mut by_degree: std::collections::BTreeMap<usize, (f64, usize)> = Default::default();
    for j in 0..graph.check_count() {
        let deg = graph.check_edges(j).len();
        let mean_over_iters: f64 =
            weights.w_c.iter().map(|row| row[j]).sum::<f64>() / weights.w_c.len() as f64;
        let entry = by_degree.entry(deg).or_insert((0.0, 0));
        entry.0 += mean_over_iters;
        entry.1 += 1;
    }
    let summary: Vec<String> = by_degree
        .iter()
        .map(|(deg, (sum, count))| format!("deg {deg}: {:.4}", sum / *count as f64))
        .collect();
    println!("mean w_c by check degree: {}", summary.join(", "));
    Ok(0)
}

// --------------------------------------------------------------------------
// simulate

#[derive(Args)]
struct SimulateArgs {
    /// Code definition JSON.
    #[arg(long)]
    code: PathBuf,
    /// `original` or a path to an overcomplete matrix file.
    #[arg(long)]
    matrix: Option<String>,
    /// Trained weights file.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Maximum decoding iterations (default 32).
    #[arg(long)]
    iters: Option<usize>,
    /// Channel prior used to initialize the decoder (default 0.1).
    #[arg(long)]
    epsilon0: Option<f64>,
    /// Depolarizing probabilities, e.g. `0.1,0.08,0.06`.
    #[arg(long)]
    epsilons: Option<String>,
    /// Exact error weights, e.g. `1..10` or `2,3`.
    #[arg(long)]
    error_weights: Option<String>,
    /// Frame errors per data point (default 300).
    #[arg(long)]
    target_errors: Option<u64>,
    /// Trial cap per data point (default 10^7).
    #[arg(long)]
    max_trials: Option<u64>,
    /// Master seed; all trial randomness derives from it (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Results CSV path (a JSON twin is written next to it).
    #[arg(long)]
    out: PathBuf,
    /// JSON file with a stored configuration (flags override it).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SimulateConfig {
    code: PathBuf,
    matrix: String,
    weights: Option<PathBuf>,
    iters: usize,
    epsilon0: f64,
    epsilons: Option<Vec<f64>>,
    error_weights: Option<Vec<usize>>,
    target_errors: u64,
    max_trials: u64,
    seed: u64,
    out: PathBuf,
}

fn cmd_simulate(args: SimulateArgs) -> Result<i32> {
    init_thread_pool(args.threads)?;
    let mut cfg = match &args.config {
        Some(path) => serde_json::from_value::<SimulateConfig>(load_config_value(path)?)
            .context("parsing --config")?,
        None => SimulateConfig {
            code: args.code.clone(),
            matrix: "original".into(),
            weights: None,
            iters: 32,
            epsilon0: 0.1,
            epsilons: None,
            error_weights: None,
            target_errors: 300,
            max_trials: 10_000_000,
            seed: 0,
            out: args.out.clone(),
        },
    };
    cfg.code = args.code;
    if let Some(m) = args.matrix {
        cfg.matrix = m;
    }
    if let Some(w) = args.weights {
        cfg.weights = Some(w);
    }
    if let Some(v) = args.iters {
        cfg.iters = v;
    }
    if let Some(v) = args.epsilon0 {
        cfg.epsilon0 = v;
    }
    if let Some(v) = &args.epsilons {
        cfg.epsilons = Some(parse_f64_list(v)?);
        cfg.error_weights = None;
    }
    if let Some(v) = &args.error_weights {
        cfg.error_weights = Some(parse_usize_list(v)?);
        cfg.epsilons = None;
    }
    if let Some(v) = args.target_errors {
        cfg.target_errors = v;
    }
    if let Some(v) = args.max_trials {
        cfg.max_trials = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    cfg.out = args.out;

    let built = load_code(&cfg.code)?;
    let original = built.check_matrix().map_err(|e| anyhow!("{e}"))?;
    let normalizer = original.normalizer();
    let oc = match cfg.matrix.as_str() {
        "original" => None,
        path => Some(load_oc(Path::new(path), &built)?),
    };
    let prior = init_priors::<DefaultScalar>(cfg.epsilon0).map_err(|e| anyhow!("{e}"))?;
    let mut harness_cfg = HarnessConfig::new(cfg.iters, cfg.seed);
    harness_cfg.target_failures = cfg.target_errors;
    harness_cfg.max_trials = cfg.max_trials;

    // the graph (and therefore the weight binding) depends on the matrix
    let run = |weights: Option<&NbpWeights<DefaultScalar>>| -> Result<Vec<FerRecord>> {
        let harness = FerHarness::new(
            &original,
            oc.as_ref(),
            &normalizer,
            prior,
            weights,
            harness_cfg,
        )
        .map_err(|e| anyhow!("{e}"))?;
        let records = match (&cfg.epsilons, &cfg.error_weights) {
            (Some(eps), None) => harness.run_epsilon_sweep(eps).map_err(|e| anyhow!("{e}"))?,
            (None, Some(ws)) => harness.run_weight_sweep(ws).map_err(|e| anyhow!("{e}"))?,
            _ => bail!("exactly one of --epsilons or --error-weights is required"),
        };
        Ok(records)
    };
    let records = match &cfg.weights {
        Some(path) => {
            let file = WeightsFile::load(path).map_err(|e| anyhow!("{e}"))?;
            let graph = match &oc {
                Some(oc) => DecoderGraph::from_check_matrix(oc.matrix()),
                None => DecoderGraph::from_check_matrix(&original),
            };
            let weights: NbpWeights<DefaultScalar> =
                file.to_weights(graph.digest()).map_err(|e| anyhow!("{e}"))?;
            run(Some(&weights))?
        }
        None => run(None)?,
    };

    ocbp::sim::write_csv(&cfg.out, &records).map_err(|e| anyhow!("{e}"))?;
    let json_path = cfg.out.with_extension("json");
    ocbp::sim::write_json(&json_path, &records).map_err(|e| anyhow!("{e}"))?;
    let mut inputs = vec![cfg.code.as_path()];
    if cfg.matrix != "original" {
        inputs.push(Path::new(&cfg.matrix));
    }
    if let Some(w) = &cfg.weights {
        inputs.push(w.as_path());
    }
    let manifest = RunManifest::new("simulate", &cfg, &inputs)?;
    manifest.write_for(&cfg.out)?;
    manifest.write_for(&json_path)?;
    for r in &records {
        println!(
            "x = {:<8} FER = {:.6} ({} failures / {} trials, CI [{:.6}, {:.6}]){}",
            r.x,
            r.fer,
            r.flagged_failures + r.unflagged_failures,
            r.trials,
            r.ci_low,
            r.ci_high,
            if r.target_reached { "" } else { " [trial cap hit]" },
        );
    }
    println!("wrote {} and {}", cfg.out.display(), json_path.display());
    Ok(0)
}

// --------------------------------------------------------------------------
// report

#[derive(Args)]
struct ReportArgs {
    /// Results CSV produced by `simulate`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output table (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// `loglog` (FER vs physical error rate) or `linear` (FER vs weight);
    /// inferred from the x column when omitted.
    #[arg(long)]
    axes: Option<String>,
}

fn cmd_report(args: ReportArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let records = records_from_csv(&text).map_err(|e| anyhow!("{e}"))?;
    let axes = match args.axes.as_deref() {
        Some("loglog") => "loglog",
        Some("linear") => "linear",
        Some(other) => bail!("unknown axes '{other}' (use loglog or linear)"),
        None => {
            // integral x values starting at >= 1 indicate a weight sweep
            if !records.is_empty() && records.iter().all(|r| r.x >= 1.0 && r.x.fract() == 0.0) {
                "linear"
            } else {
                "loglog"
            }
        }
    };
    let mut out = String::new();
    out.push_str(&format!("# axes: {axes}"));
    out.push_str(if axes == "loglog" {
        " (x: physical error rate, log; y: FER, log)\n"
    } else {
        " (x: error weight, linear; y: FER, linear)\n"
    });
    out.push_str("# columns: x fer ci_lo ci_hi trials\n");
    for r in &records {
        out.push_str(&format!(
            "{} {} {} {} {}\n",
            r.x, r.fer, r.ci_low, r.ci_high, r.trials
        ));
    }
    match &args.out {
        Some(path) => {
            std::fs::write(path, &out).with_context(|| format!("writing {}", path.display()))?;
            #[derive(Serialize)]
            struct ReportConfig<'a> {
                input: &'a Path,
                out: &'a Path,
                axes: &'a str,
            }
            RunManifest::new(
                "report",
                &ReportConfig {
                    input: &args.input,
                    out: path,
                    axes,
                },
                &[args.input.as_path()],
            )?
            .write_for(path)?;
        }
        None => print!("{out}"),
    }
    Ok(0)
}
