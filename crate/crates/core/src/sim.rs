//! Monte Carlo frame-error-rate harness.
//!
//! Trials are indexed and seeded independently, evaluated in fixed-size
//! chunks (parallel within a chunk), and counted in trial-index order until
//! the target number of frame errors is reached. The records are therefore
//! identical for any worker count and chunk evaluation order.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_depolarizing, sample_fixed_weight_trial, DepolarizingConfig};
use crate::code::{CheckMatrix, NormalizerMatrix};
use crate::decoder::{decode, DecodeOptions, DecoderGraph, LlrTriple, NbpWeights};
use crate::gf4::PauliVector;
use crate::overcomplete::OvercompleteMatrix;
use crate::{Error, LlrScalar, Result};

/// Classification of one decoding trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrialOutcome {
    /// Converged and logically equivalent to the true error.
    Success,
    /// The decoder never matched the syndrome.
    Flagged,
    /// Syndrome matched but the estimate is in the wrong logical coset: an
    /// undetected failure.
    Unflagged,
}

impl TrialOutcome {
    pub fn is_failure(self) -> bool {
        !matches!(self, TrialOutcome::Success)
    }
}

/// Error process of a sweep point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TrialNoise {
    Depolarizing { epsilon: f64 },
    FixedWeight { weight: usize },
}

impl TrialNoise {
    fn x_value(&self) -> f64 {
        match self {
            TrialNoise::Depolarizing { epsilon } => *epsilon,
            TrialNoise::FixedWeight { weight } => *weight as f64,
        }
    }
}

/// One Monte Carlo data point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FerRecord {
    /// Depolarizing probability or error weight.
    pub x: f64,
    pub trials: u64,
    pub flagged_failures: u64,
    pub unflagged_failures: u64,
    pub fer: f64,
    /// Wilson 95% interval on the FER.
    pub ci_low: f64,
    pub ci_high: f64,
    pub wall_time_s: f64,
    /// False when the trial cap stopped the run before the target frame
    /// errors were collected (low-confidence point).
    pub target_reached: bool,
}

/// Wilson score interval for `k` successes in `n` trials at 95% confidence.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054_f64;
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    // the bounds are exactly 0 / 1 at the extremes; avoid rounding residue
    let low = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let high = if k == n { 1.0 } else { (center + half).min(1.0) };
    (low, high)
}

/// Stop rule and bookkeeping of a sweep.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub max_iterations: usize,
    pub master_seed: u64,
    /// Frame errors collected per data point.
    pub target_failures: u64,
    /// Hard trial cap for low-FER points.
    pub max_trials: u64,
    /// Largest parallel evaluation chunk. Chunks grow from 256 up to this;
    /// the schedule depends only on the configuration, never on the worker
    /// count, and trials are always counted in index order, so the records
    /// are thread-count independent either way.
    pub chunk_size: u64,
}

impl HarnessConfig {
    pub fn new(max_iterations: usize, master_seed: u64) -> Self {
        HarnessConfig {
            max_iterations,
            master_seed,
            target_failures: 300,
            max_trials: 10_000_000,
            chunk_size: 4096,
        }
    }
}

/// A configured decoder + channel, ready to run sweep points.
pub struct FerHarness<'a, R: LlrScalar> {
    original: &'a CheckMatrix,
    oc: Option<&'a OvercompleteMatrix>,
    normalizer: &'a NormalizerMatrix,
    graph: DecoderGraph,
    prior: LlrTriple<R>,
    weights: Option<&'a NbpWeights<R>>,
    pub config: HarnessConfig,
}

impl<'a, R: LlrScalar> FerHarness<'a, R> {
    /// Decodes against the original matrix, or against `oc` when given (the
    /// syndrome is then remapped through the combination matrices).
    pub fn new(
        original: &'a CheckMatrix,
        oc: Option<&'a OvercompleteMatrix>,
        normalizer: &'a NormalizerMatrix,
        prior: LlrTriple<R>,
        weights: Option<&'a NbpWeights<R>>,
        config: HarnessConfig,
    ) -> Result<Self> {
        let graph = match oc {
            Some(oc) => DecoderGraph::from_check_matrix(oc.matrix()),
            None => DecoderGraph::from_check_matrix(original),
        };
        if let Some(w) = weights {
            w.validate(&graph, config.max_iterations)?;
        }
        Ok(FerHarness {
            original,
            oc,
            normalizer,
            graph,
            prior,
            weights,
            config,
        })
    }

    pub fn graph(&self) -> &DecoderGraph {
        &self.graph
    }

    /// Decodes one injected error and classifies the outcome.
    pub fn classify(&self, e: &PauliVector) -> Result<TrialOutcome> {
        let z = self.original.syndrome(e)?;
        let z_used = match self.oc {
            Some(oc) => oc.map_syndrome(&z)?,
            None => z,
        };
        let opts = DecodeOptions::new(self.config.max_iterations);
        let r = decode(&self.graph, &z_used, &self.prior, self.weights, &opts)?;
        if !r.converged {
            return Ok(TrialOutcome::Flagged);
        }
        if self.normalizer.logically_equivalent(e, &r.e_hat)? {
            Ok(TrialOutcome::Success)
        } else {
            Ok(TrialOutcome::Unflagged)
        }
    }

    /// Samples the trial's error and classifies it.
    pub fn run_trial(&self, noise: &TrialNoise, trial_index: u64) -> Result<TrialOutcome> {
        let n = self.original.qubits();
        let e = match noise {
            TrialNoise::Depolarizing { epsilon } => {
                let cfg = DepolarizingConfig::new(*epsilon, self.config.master_seed)?;
                sample_depolarizing(n, &cfg, trial_index)
            }
            TrialNoise::FixedWeight { weight } => {
                sample_fixed_weight_trial(n, *weight, self.config.master_seed, trial_index)?
            }
        };
        self.classify(&e)
    }

    /// Runs one sweep point until `target_failures` frame errors or
    /// `max_trials` trials.
    pub fn run_point(&self, noise: &TrialNoise) -> Result<FerRecord> {
        if let TrialNoise::FixedWeight { weight } = noise {
            if *weight > self.original.qubits() {
                return Err(Error::InvalidParameter(format!(
                    "error weight {weight} exceeds {} qubits",
                    self.original.qubits()
                )));
            }
        }
        let start = Instant::now();
        let mut flagged = 0u64;
        let mut unflagged = 0u64;
        let mut trials = 0u64;
        let mut target_reached = false;
        let mut chunk = 256.min(self.config.chunk_size).max(1);
        'outer: while trials < self.config.max_trials {
            let chunk_start = trials;
            let chunk_end = (chunk_start + chunk).min(self.config.max_trials);
            chunk = (chunk * 2).min(self.config.chunk_size);
            let outcomes: Vec<Result<TrialOutcome>> = (chunk_start..chunk_end)
                .into_par_iter()
                .map(|t| self.run_trial(noise, t))
                .collect();
            for outcome in outcomes {
                let outcome = outcome?;
                trials += 1;
                match outcome {
                    TrialOutcome::Success => {}
                    TrialOutcome::Flagged => flagged += 1,
                    TrialOutcome::Unflagged => unflagged += 1,
                }
                if flagged + unflagged >= self.config.target_failures {
                    target_reached = true;
                    break 'outer;
                }
            }
        }
        let failures = flagged + unflagged;
        let fer = if trials == 0 {
            0.0
        } else {
            failures as f64 / trials as f64
        };
        let (ci_low, ci_high) = wilson_interval(failures, trials);
        Ok(FerRecord {
            x: noise.x_value(),
            trials,
            flagged_failures: flagged,
            unflagged_failures: unflagged,
            fer,
            ci_low,
            ci_high,
            wall_time_s: start.elapsed().as_secs_f64(),
            target_reached,
        })
    }

    /// FER vs depolarizing probability.
    pub fn run_epsilon_sweep(&self, epsilons: &[f64]) -> Result<Vec<FerRecord>> {
        if epsilons.is_empty() {
            return Err(Error::InvalidParameter("empty epsilon sweep".into()));
        }
        epsilons
            .iter()
            .map(|&epsilon| self.run_point(&TrialNoise::Depolarizing { epsilon }))
            .collect()
    }

    /// FER vs exact error weight.
    pub fn run_weight_sweep(&self, weights: &[usize]) -> Result<Vec<FerRecord>> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("empty weight sweep".into()));
        }
        weights
            .iter()
            .map(|&weight| self.run_point(&TrialNoise::FixedWeight { weight }))
            .collect()
    }
}

/// CSV image of a record list; `wall_time_s` and `target_reached` stay out
/// of the CSV so reruns are byte-identical (they remain in the JSON form).
pub fn records_to_csv(records: &[FerRecord]) -> String {
    let mut out = String::from("x,trials,flagged,unflagged,fer,ci_lo,ci_hi\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.x, r.trials, r.flagged_failures, r.unflagged_failures, r.fer, r.ci_low, r.ci_high
        ));
    }
    out
}

/// Parses a CSV produced by [`records_to_csv`]. Timing and stop-rule fields
/// are not in the CSV and come back as defaults.
pub fn records_from_csv(text: &str) -> Result<Vec<FerRecord>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty results CSV".into()))?;
    if header.trim() != "x,trials,flagged,unflagged,fer,ci_lo,ci_hi" {
        return Err(Error::Parse(format!("unexpected CSV header: {header}")));
    }
    let mut out = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Parse(format!(
                "line {}: expected 7 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad number '{s}'")))
        };
        let parse_u = |s: &str| -> Result<u64> {
            s.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad count '{s}'")))
        };
        out.push(FerRecord {
            x: parse_f(fields[0])?,
            trials: parse_u(fields[1])?,
            flagged_failures: parse_u(fields[2])?,
            unflagged_failures: parse_u(fields[3])?,
            fer: parse_f(fields[4])?,
            ci_low: parse_f(fields[5])?,
            ci_high: parse_f(fields[6])?,
            wall_time_s: 0.0,
            target_reached: true,
        });
    }
    Ok(out)
}

pub fn write_csv(path: &Path, records: &[FerRecord]) -> Result<()> {
    std::fs::write(path, records_to_csv(records))
        .map_err(|e| Error::Io(format!("writing {}: {e}", path.display())))
}

pub fn write_json(path: &Path, records: &[FerRecord]) -> Result<()> {
    let text = serde_json::to_string_pretty(records)
        .map_err(|e| Error::Io(format!("serializing records: {e}")))?;
    std::fs::write(path, text).map_err(|e| Error::Io(format!("writing {}: {e}", path.display())))
}
