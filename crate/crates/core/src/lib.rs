//! Quaternary belief-propagation decoding of quantum LDPC codes.
//!
//! The crate builds CSS / generalized-bicycle stabilizer codes, derives
//! overcomplete check matrices from low-weight row combinations, decodes
//! syndromes with a refined scalar-message BP4 decoder (optionally with
//! trained per-iteration weights), and measures frame error rates under
//! depolarizing noise with a reproducible Monte Carlo harness.
//!
//! All LLR arithmetic is generic over the scalar type through [`LlrScalar`]
//! (`f32` or `f64`); the exact GF(2)/GF(4) layers are bit-packed and
//! scalar-free. `f64` aliases for the generic types live at the crate root.
//!
//! ```
//! use ocbp::code::CssCode;
//! use ocbp::decoder::{decode, init_priors, DecodeOptions, DecoderGraph};
//! use ocbp::overcomplete::all_combinations;
//! use ocbp::PauliVector;
//!
//! // the [[7,1,3]] code and its 14-row overcomplete check matrix
//! let code = CssCode::bch_7_1_3();
//! let original = code.to_quaternary()?;
//! let oc = all_combinations(&code, 7)?;
//! let graph = DecoderGraph::from_check_matrix(oc.matrix());
//!
//! // measure a weight-1 Y error against the original checks, remap, decode
//! let error = PauliVector::parse("Y7", 7)?;
//! let syndrome = oc.map_syndrome(&original.syndrome(&error)?)?;
//! let prior = init_priors::<f64>(0.1)?;
//! let result = decode(&graph, &syndrome, &prior, None, &DecodeOptions::new(32))?;
//! assert!(result.converged);
//! assert_eq!(result.e_hat, error);
//! # Ok::<(), ocbp::Error>(())
//! ```

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::AddAssign;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use thiserror::Error as ThisError;

pub mod bits;
pub mod channel;
pub mod code;
pub mod decoder;
pub mod gf4;
pub mod nbp;
pub mod overcomplete;
pub mod sim;

pub use bits::{BitMatrix, BitVec};
pub use code::{BuiltCode, CheckMatrix, CodeFile, CssCode, NormalizerMatrix, Syndrome};
pub use decoder::{DecodeOptions, DecodeResult, DecoderGraph, LlrTriple, NbpWeights};
pub use gf4::{BinarySymplecticVector, Pauli, PauliVector};
pub use overcomplete::OvercompleteMatrix;

/// Scalar type of the LLR domain: `f32` or `f64`.
pub trait LlrScalar:
    Float + FromPrimitive + ToPrimitive + AddAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Saturation bound for every message and LLR component, in nats.
    fn clip_llr() -> Self {
        Self::from_f64(CLIP_LLR).unwrap()
    }

    /// `atanh` inputs are clamped to `+-(1 - atanh_guard())`. The guard must
    /// be representable below 1 in the scalar type.
    fn atanh_guard() -> Self;
}

impl LlrScalar for f32 {
    fn atanh_guard() -> Self {
        1e-6
    }
}

impl LlrScalar for f64 {
    fn atanh_guard() -> Self {
        1e-12
    }
}

/// Message saturation bound in nats; far above any decision-relevant
/// magnitude but small enough that `tanh`/`exp` stay clean in `f32` too.
pub const CLIP_LLR: f64 = 30.0;

/// Default scalar used by the CLI and the f64 type aliases.
pub type DefaultScalar = f64;

pub type LlrTriple64 = decoder::LlrTriple<f64>;
pub type NbpWeights64 = decoder::NbpWeights<f64>;
pub type DecodeResult64 = decoder::DecodeResult<f64>;
pub type GradientSet64 = nbp::GradientSet<f64>;

#[derive(Debug, ThisError)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid code: {0}")]
    InvalidCode(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("training diverged at phase {phase}, batch {batch}: mean loss {loss}")]
    TrainingDiverged {
        phase: usize,
        batch: usize,
        loss: f64,
    },
    #[error("artifact mismatch: {0}")]
    ArtifactMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Derives an independent 64-bit seed from a master seed, a stream tag and an
/// index (SplitMix64-style finalizers). Every random draw in the crate flows
/// through this, so trials are order-independent and parallel-safe.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut s = master
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    s ^= s >> 30;
    s = s.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    s ^= s >> 27;
    s = s.wrapping_mul(0x94D0_49BB_1331_11EB);
    s ^= s >> 31;
    s
}

/// Stream tags for [`derive_seed`].
pub mod streams {
    /// Monte Carlo channel trials.
    pub const TRIAL: u64 = 1;
    /// Training sample generation.
    pub const TRAIN: u64 = 2;
    /// Low-weight row search iterations.
    pub const SEARCH: u64 = 3;
}
