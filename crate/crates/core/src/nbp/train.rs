//! Two-phase weight training: Adam on the batched multi-loss gradient.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::sample_fixed_weight;
use crate::code::NormalizerMatrix;
use crate::decoder::{decode, init_priors, DecodeOptions, DecoderGraph, NbpWeights};
use crate::nbp::{backward, GradientSet, MultiLossMode, WeightsFile};
use crate::{derive_seed, streams, Error, LlrScalar, Result};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Adam hyperparameters. The learning rate defaults to 1e-3; the moment
/// decay rates and epsilon follow the optimizer's standard values.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates, same shape as the weights.
#[derive(Clone, Debug)]
pub struct AdamState<R> {
    m: GradientSet<R>,
    v: GradientSet<R>,
    step: usize,
}

impl<R: LlrScalar> AdamState<R> {
    pub fn new(iterations: usize, checks: usize, variables: usize) -> Self {
        AdamState {
            m: GradientSet::zeros(iterations, checks, variables),
            v: GradientSet::zeros(iterations, checks, variables),
            step: 0,
        }
    }
}

/// One Adam update of the weights in place.
pub fn adam_step<R: LlrScalar>(
    weights: &mut NbpWeights<R>,
    grads: &GradientSet<R>,
    state: &mut AdamState<R>,
    cfg: &AdamConfig,
) {
    state.step += 1;
    let t = state.step as i32;
    let b1 = R::from_f64(cfg.beta1).unwrap();
    let b2 = R::from_f64(cfg.beta2).unwrap();
    let lr = R::from_f64(cfg.learning_rate).unwrap();
    let eps = R::from_f64(cfg.epsilon).unwrap();
    let bias1 = R::one() - b1.powi(t);
    let bias2 = R::one() - b2.powi(t);
    let update = |w: &mut Vec<Vec<R>>, g: &Vec<Vec<R>>, m: &mut Vec<Vec<R>>, v: &mut Vec<Vec<R>>| {
        for ((wr, gr), (mr, vr)) in w.iter_mut().zip(g).zip(m.iter_mut().zip(v.iter_mut())) {
            for ((w, &g), (m, v)) in wr.iter_mut().zip(gr).zip(mr.iter_mut().zip(vr.iter_mut())) {
                *m = b1 * *m + (R::one() - b1) * g;
                *v = b2 * *v + (R::one() - b2) * g * g;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                *w = *w - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    };
    update(&mut weights.w_c, &grads.w_c, &mut state.m.w_c, &mut state.v.w_c);
    update(&mut weights.w_v, &grads.w_v, &mut state.m.w_v, &mut state.v.w_v);
}

/// One training phase: how many batches and which error weights they draw.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainingPhase {
    pub batches: usize,
    pub error_weights: Vec<usize>,
}

/// Full training schedule. The defaults follow the two-phase recipe:
/// pre-train on weight-2/3 errors, then train on weight-3..9 errors;
/// weight-1 errors are omitted since their loss is already near zero.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub phase1: TrainingPhase,
    pub phase2: TrainingPhase,
    /// Unrolled decoder iterations L.
    pub iterations: usize,
    pub rng_seed: u64,
    pub multi_loss_mode: MultiLossMode,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            adam: AdamConfig::default(),
            batch_size: 100,
            phase1: TrainingPhase {
                batches: 1500,
                error_weights: vec![2, 3],
            },
            phase2: TrainingPhase {
                batches: 600,
                error_weights: (3..=9).collect(),
            },
            iterations: 3,
            rng_seed: 0,
            multi_loss_mode: MultiLossMode::AverageAll,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrainingLogRow {
    pub batch: usize,
    pub phase: usize,
    pub mean_loss: f64,
}

#[derive(Clone, Debug, Default)]
pub struct TrainingLog {
    pub rows: Vec<TrainingLogRow>,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("batch,phase,mean_loss\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.batch, r.phase, r.mean_loss));
        }
        out
    }

    /// Mean loss of the first and last `k` batches, for trend checks.
    pub fn head_tail_means(&self, k: usize) -> Option<(f64, f64)> {
        if self.rows.len() < 2 * k {
            return None;
        }
        let head = self.rows[..k].iter().map(|r| r.mean_loss).sum::<f64>() / k as f64;
        let tail = self.rows[self.rows.len() - k..]
            .iter()
            .map(|r| r.mean_loss)
            .sum::<f64>()
            / k as f64;
        Some((head, tail))
    }
}

/// Trains per-iteration weights on the given decoding graph.
///
/// Forward passes run the fixed-depth unrolled decoder (no early stop);
/// per-sample gradients within a batch are computed in parallel and reduced
/// in sample order, so results do not depend on the thread count. A NaN or
/// infinite batch loss aborts with [`Error::TrainingDiverged`]; drawing
/// training errors straight from the depolarizing channel is the known way
/// to trigger it.
///
/// Checkpoints (after phase 1 and at the end) are written into
/// `checkpoint_dir` when given.
pub fn train<R: LlrScalar>(
    graph: &DecoderGraph,
    s_perp: &NormalizerMatrix,
    epsilon0: f64,
    cfg: &TrainingConfig,
    checkpoint_dir: Option<&Path>,
) -> Result<(NbpWeights<R>, TrainingLog)> {
    let n = graph.variable_count();
    for phase in [&cfg.phase1, &cfg.phase2] {
        if phase.batches > 0 {
            if phase.error_weights.is_empty() {
                return Err(Error::InvalidParameter(
                    "training phase has no error weights".into(),
                ));
            }
            if let Some(&w) = phase.error_weights.iter().find(|&&w| w > n || w == 0) {
                return Err(Error::InvalidParameter(format!(
                    "training error weight {w} invalid for a {n}-qubit code"
                )));
            }
        }
    }
    if cfg.batch_size == 0 || cfg.iterations == 0 {
        return Err(Error::InvalidParameter(
            "batch size and iterations must be positive".into(),
        ));
    }
    let prior = init_priors::<R>(epsilon0)?;
    let mut weights = NbpWeights::unit(cfg.iterations, graph.check_count(), n);
    let mut adam = AdamState::new(cfg.iterations, graph.check_count(), n);
    let mut log = TrainingLog::default();
    let opts = DecodeOptions {
        max_iterations: cfg.iterations,
        early_stop: false,
        record_history: true,
    };

    let mut global_batch = 0usize;
    for (phase_index, phase) in [&cfg.phase1, &cfg.phase2].into_iter().enumerate() {
        for _ in 0..phase.batches {
            let weights_ref = &weights;
            let samples: Vec<Result<(f64, GradientSet<R>)>> = (0..cfg.batch_size)
                .into_par_iter()
                .map(|s| {
                    let sample_index = (global_batch * cfg.batch_size + s) as u64;
                    let seed = derive_seed(cfg.rng_seed, streams::TRAIN, sample_index);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let w = phase.error_weights[rng.gen_range(0..phase.error_weights.len())];
                    let e = sample_fixed_weight(n, w, &mut rng)?;
                    let z = graph.syndrome_of(&e);
                    let r = decode(graph, &z, &prior, Some(weights_ref), &opts)?;
                    let (loss, grads) = backward(
                        graph,
                        &z,
                        &prior,
                        weights_ref,
                        &r.trace,
                        &e,
                        s_perp,
                        cfg.multi_loss_mode,
                    )?;
                    Ok((loss.to_f64().unwrap(), grads))
                })
                .collect();
            let mut mean_grads =
                GradientSet::zeros(cfg.iterations, graph.check_count(), n);
            let mut mean_loss = 0.0f64;
            for s in samples {
                let (loss, grads) = s?;
                mean_loss += loss;
                mean_grads.add_assign(&grads);
            }
            mean_loss /= cfg.batch_size as f64;
            mean_grads.scale(R::from_usize(cfg.batch_size).unwrap().recip());
            if !mean_loss.is_finite() || !mean_grads.is_finite() {
                return Err(Error::TrainingDiverged {
                    phase: phase_index + 1,
                    batch: global_batch,
                    loss: mean_loss,
                });
            }
            adam_step(&mut weights, &mean_grads, &mut adam, &cfg.adam);
            log.rows.push(TrainingLogRow {
                batch: global_batch,
                phase: phase_index + 1,
                mean_loss,
            });
            global_batch += 1;
        }
        if let Some(dir) = checkpoint_dir {
            let name = format!("phase{}.weights.json", phase_index + 1);
            WeightsFile::from_weights(&weights, graph.digest()).save(&dir.join(name))?;
        }
    }
    Ok((weights, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::CssCode;
    use crate::overcomplete::all_combinations;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_gradient_leaves_weights_unchanged() {
        let mut w = NbpWeights::<f64>::unit(2, 3, 4);
        let g = GradientSet::zeros(2, 3, 4);
        let mut state = AdamState::new(2, 3, 4);
        adam_step(&mut w, &g, &mut state, &AdamConfig::default());
        assert_eq!(w, NbpWeights::unit(2, 3, 4));
    }

    #[test]
    fn single_step_matches_hand_computation() {
        let cfg = AdamConfig::default();
        let mut w = NbpWeights::<f64>::unit(1, 1, 1);
        let mut g = GradientSet::zeros(1, 1, 1);
        g.w_c[0][0] = 0.25;
        let mut state = AdamState::new(1, 1, 1);
        adam_step(&mut w, &g, &mut state, &cfg);
        // m = (1-b1) g, v = (1-b2) g^2; bias correction makes
        // m_hat = g, v_hat = g^2; step = lr * g / (|g| + eps)
        let expected = 1.0 - cfg.learning_rate * 0.25 / (0.25 + cfg.epsilon);
        assert_abs_diff_eq!(w.w_c[0][0], expected, epsilon = 1e-15);
        assert_abs_diff_eq!(w.w_v[0][0], 1.0, epsilon = 0.0);
    }

    /// Adam normalization: under a constant gradient the step magnitude
    /// approaches the learning rate.
    #[test]
    fn constant_gradient_step_approaches_learning_rate() {
        let cfg = AdamConfig::default();
        let mut w = NbpWeights::<f64>::unit(1, 1, 1);
        let mut g = GradientSet::zeros(1, 1, 1);
        g.w_v[0][0] = 3.7;
        let mut state = AdamState::new(1, 1, 1);
        let mut prev = w.w_v[0][0];
        let mut last_step = 0.0;
        for _ in 0..2000 {
            adam_step(&mut w, &g, &mut state, &cfg);
            last_step = (prev - w.w_v[0][0]).abs();
            prev = w.w_v[0][0];
        }
        assert_abs_diff_eq!(last_step, cfg.learning_rate, epsilon = 1e-6);
    }

    #[test]
    fn training_smoke_run_reduces_loss_and_is_deterministic() {
        let code = CssCode::bch_7_1_3();
        let s = code.to_quaternary().unwrap();
        let s_perp = s.normalizer();
        let oc = all_combinations(&code, 7).unwrap();
        let graph = DecoderGraph::from_check_matrix(oc.matrix());
        let cfg = TrainingConfig {
            adam: AdamConfig {
                learning_rate: 0.01,
                ..AdamConfig::default()
            },
            batch_size: 50,
            phase1: TrainingPhase {
                batches: 20,
                error_weights: vec![2, 3],
            },
            phase2: TrainingPhase {
                batches: 0,
                error_weights: vec![],
            },
            iterations: 3,
            rng_seed: 7,
            ..TrainingConfig::default()
        };
        let (w1, log1) = train::<f64>(&graph, &s_perp, 0.1, &cfg, None).unwrap();
        let (w2, _) = train::<f64>(&graph, &s_perp, 0.1, &cfg, None).unwrap();
        assert_eq!(w1, w2);
        let (head, tail) = log1.head_tail_means(5).unwrap();
        assert!(
            tail < head,
            "training should reduce the mean loss: head {head}, tail {tail}"
        );
    }

    #[test]
    fn first_batch_loss_equals_unit_weight_multi_loss() {
        // with unit initialization the first logged loss is exactly the
        // plain-BP multi-loss of the same batch
        let code = CssCode::bch_7_1_3();
        let s = code.to_quaternary().unwrap();
        let s_perp = s.normalizer();
        let oc = all_combinations(&code, 7).unwrap();
        let graph = DecoderGraph::from_check_matrix(oc.matrix());
        let cfg = TrainingConfig {
            batch_size: 8,
            phase1: TrainingPhase {
                batches: 1,
                error_weights: vec![2],
            },
            phase2: TrainingPhase {
                batches: 0,
                error_weights: vec![],
            },
            iterations: 2,
            rng_seed: 99,
            ..TrainingConfig::default()
        };
        let (_, log) = train::<f64>(&graph, &s_perp, 0.1, &cfg, None).unwrap();
        let prior = init_priors::<f64>(0.1).unwrap();
        let opts = DecodeOptions {
            max_iterations: 2,
            early_stop: false,
            record_history: true,
        };
        let mut expected = 0.0;
        for sample in 0..8u64 {
            let seed = derive_seed(99, streams::TRAIN, sample);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let _w = rng.gen_range(0..1usize);
            let e = sample_fixed_weight(7, 2, &mut rng).unwrap();
            let z = graph.syndrome_of(&e);
            let r = decode(&graph, &z, &prior, None, &opts).unwrap();
            let gammas: Vec<_> = r.trace.iter().map(|t| t.gamma.clone()).collect();
            expected +=
                crate::nbp::multi_loss(&gammas, &e, &s_perp, MultiLossMode::AverageAll).unwrap();
        }
        expected /= 8.0;
        assert_abs_diff_eq!(log.rows[0].mean_loss, expected, epsilon = 1e-12);
    }

    #[test]
    fn f32_training_runs_and_stays_finite() {
        let code = CssCode::bch_7_1_3();
        let s = code.to_quaternary().unwrap();
        let s_perp = s.normalizer();
        let graph = DecoderGraph::from_check_matrix(&s);
        let cfg = TrainingConfig {
            batch_size: 4,
            phase1: TrainingPhase {
                batches: 2,
                error_weights: vec![2],
            },
            phase2: TrainingPhase {
                batches: 0,
                error_weights: vec![],
            },
            iterations: 2,
            rng_seed: 1,
            ..TrainingConfig::default()
        };
        let (weights, log) = train::<f32>(&graph, &s_perp, 0.1, &cfg, None).unwrap();
        assert_eq!(log.rows.len(), 2);
        assert!(log.rows.iter().all(|r| r.mean_loss.is_finite()));
        assert!(weights
            .w_c
            .iter()
            .chain(weights.w_v.iter())
            .all(|row| row.iter().all(|w| w.is_finite())));
    }

    #[test]
    fn invalid_training_weights_are_rejected() {
        let code = CssCode::bch_7_1_3();
        let s = code.to_quaternary().unwrap();
        let s_perp = s.normalizer();
        let graph = DecoderGraph::from_check_matrix(&s);
        let cfg = TrainingConfig {
            phase1: TrainingPhase {
                batches: 1,
                error_weights: vec![9], // > n = 7
            },
            ..TrainingConfig::default()
        };
        assert!(train::<f64>(&graph, &s_perp, 0.1, &cfg, None).is_err());
    }
}
