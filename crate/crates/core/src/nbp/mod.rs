//! Trainable decoder weights: degeneracy-aware loss, exact reverse-mode
//! gradients through the unrolled decoder, Adam, and the two-phase training
//! schedule.

mod grad;
mod loss;
mod train;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::decoder::NbpWeights;
use crate::{Error, LlrScalar, Result};

pub use grad::backward;
pub use loss::{degeneracy_loss, degeneracy_loss_grad, multi_loss, soft_equivalence_probability};
pub use train::{
    adam_step, train, AdamConfig, AdamState, TrainingConfig, TrainingLog, TrainingLogRow,
    TrainingPhase,
};

/// How the per-iteration losses combine into the training objective.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiLossMode {
    /// Mean over all executed iterations.
    #[default]
    AverageAll,
    /// Mean over iterations up to (and including) the one with the smallest
    /// loss; the cutoff is treated as constant when differentiating.
    AverageUpToBest,
}

impl MultiLossMode {
    /// Per-iteration loss coefficients for a given history of losses.
    pub(crate) fn iteration_weights<R: LlrScalar>(&self, losses: &[R]) -> Vec<R> {
        match self {
            MultiLossMode::AverageAll => {
                let w = R::one() / R::from_usize(losses.len()).unwrap();
                vec![w; losses.len()]
            }
            MultiLossMode::AverageUpToBest => {
                let mut best = 0;
                for (i, &l) in losses.iter().enumerate() {
                    if l < losses[best] {
                        best = i;
                    }
                }
                let w = R::one() / R::from_usize(best + 1).unwrap();
                let mut out = vec![R::zero(); losses.len()];
                for coeff in out.iter_mut().take(best + 1) {
                    *coeff = w;
                }
                out
            }
        }
    }
}

/// Partial derivatives of the training objective with respect to every
/// weight, same shape as [`NbpWeights`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet<R> {
    pub w_c: Vec<Vec<R>>,
    pub w_v: Vec<Vec<R>>,
}

impl<R: LlrScalar> GradientSet<R> {
    pub fn zeros(iterations: usize, checks: usize, variables: usize) -> Self {
        GradientSet {
            w_c: vec![vec![R::zero(); checks]; iterations],
            w_v: vec![vec![R::zero(); variables]; iterations],
        }
    }

    pub fn add_assign(&mut self, other: &GradientSet<R>) {
        for (a, b) in self.w_c.iter_mut().zip(&other.w_c) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y;
            }
        }
        for (a, b) in self.w_v.iter_mut().zip(&other.w_v) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y;
            }
        }
    }

    pub fn scale(&mut self, factor: R) {
        for row in self.w_c.iter_mut().chain(self.w_v.iter_mut()) {
            for x in row.iter_mut() {
                *x = *x * factor;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.w_c
            .iter()
            .chain(self.w_v.iter())
            .all(|row| row.iter().all(|x| x.is_finite()))
    }
}

/// JSON checkpoint of trained weights, bound to the decoding graph it was
/// trained on. Tensors are row-major: `w_c[iteration][check]`,
/// `w_v[iteration][variable]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightsFile {
    pub graph_digest: String,
    pub iterations: usize,
    pub w_c: Vec<Vec<f64>>,
    pub w_v: Vec<Vec<f64>>,
}

impl WeightsFile {
    pub fn from_weights<R: LlrScalar>(weights: &NbpWeights<R>, graph_digest: &str) -> Self {
        let pack = |t: &Vec<Vec<R>>| {
            t.iter()
                .map(|row| row.iter().map(|x| x.to_f64().unwrap()).collect())
                .collect()
        };
        WeightsFile {
            graph_digest: graph_digest.to_string(),
            iterations: weights.iterations(),
            w_c: pack(&weights.w_c),
            w_v: pack(&weights.w_v),
        }
    }

    pub fn to_weights<R: LlrScalar>(&self, graph_digest: &str) -> Result<NbpWeights<R>> {
        if self.graph_digest != graph_digest {
            return Err(Error::ArtifactMismatch(format!(
                "weights were trained for graph digest {}..., got {}...",
                &self.graph_digest[..12.min(self.graph_digest.len())],
                &graph_digest[..12.min(graph_digest.len())]
            )));
        }
        let unpack = |t: &Vec<Vec<f64>>| -> Result<Vec<Vec<R>>> {
            t.iter()
                .map(|row| {
                    row.iter()
                        .map(|&x| {
                            R::from_f64(x).ok_or_else(|| {
                                Error::Parse("weight not representable in scalar type".into())
                            })
                        })
                        .collect()
                })
                .collect()
        };
        Ok(NbpWeights {
            w_c: unpack(&self.w_c)?,
            w_v: unpack(&self.w_v)?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Io(format!("serializing weights: {e}")))?;
        std::fs::write(path, text)
            .map_err(|e| Error::Io(format!("writing {}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<WeightsFile> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("reading {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("parsing {}: {e}", path.display())))
    }
}
