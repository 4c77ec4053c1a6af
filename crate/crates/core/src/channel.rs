//! Pauli error sampling: depolarizing noise and fixed-weight errors.
//!
//! Every trial derives its own RNG from `(master seed, trial index)`, so
//! samples are independent of evaluation order and thread count.

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::gf4::{Pauli, PauliVector};
use crate::{derive_seed, streams, Error, Result};

/// Depolarizing channel: each qubit independently suffers X, Y or Z with
/// probability `epsilon / 3` each.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DepolarizingConfig {
    pub epsilon: f64,
    pub rng_seed: u64,
}

impl DepolarizingConfig {
    pub fn new(epsilon: f64, rng_seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::InvalidParameter(format!(
                "depolarizing probability {epsilon} outside [0, 1)"
            )));
        }
        Ok(DepolarizingConfig { epsilon, rng_seed })
    }
}

fn trial_rng(master: u64, trial_index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, streams::TRIAL, trial_index))
}

/// Samples one depolarizing error on `n` qubits for the given trial.
pub fn sample_depolarizing(n: usize, cfg: &DepolarizingConfig, trial_index: u64) -> PauliVector {
    let mut rng = trial_rng(cfg.rng_seed, trial_index);
    let mut e = PauliVector::identity(n);
    if cfg.epsilon == 0.0 {
        return e;
    }
    let third = cfg.epsilon / 3.0;
    for i in 0..n {
        let u: f64 = rng.gen();
        let p = if u < third {
            Pauli::X
        } else if u < 2.0 * third {
            Pauli::Y
        } else if u < cfg.epsilon {
            Pauli::Z
        } else {
            Pauli::I
        };
        if p != Pauli::I {
            e.set(i, p);
        }
    }
    e
}

/// Samples an error of exact weight `w`: a uniform w-subset of qubits, each
/// hit by a uniform non-identity Pauli.
pub fn sample_fixed_weight(n: usize, w: usize, rng: &mut impl Rng) -> Result<PauliVector> {
    if w > n {
        return Err(Error::InvalidParameter(format!(
            "weight {w} exceeds qubit count {n}"
        )));
    }
    let mut e = PauliVector::identity(n);
    for i in sample_indices(rng, n, w) {
        e.set(i, [Pauli::X, Pauli::Y, Pauli::Z][rng.gen_range(0..3)]);
    }
    Ok(e)
}

/// Fixed-weight sample keyed by trial index, mirroring the depolarizing
/// derivation.
pub fn sample_fixed_weight_trial(
    n: usize,
    w: usize,
    master_seed: u64,
    trial_index: u64,
) -> Result<PauliVector> {
    let mut rng = trial_rng(master_seed, trial_index);
    sample_fixed_weight(n, w, &mut rng)
}
