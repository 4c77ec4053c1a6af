//! Degeneracy-aware loss on the hard-decision beliefs.
//!
//! For every normalizer generator the loss adds `f(sum_i p_ji)` with
//! `f(x) = |sin(pi x / 2)|`, where `p_ji` is the estimated probability that
//! the residual `e_i + e_hat_i` anticommutes with the generator's i-th
//! entry. In the saturated limit the inner sums become integers and each
//! term reduces to the parity of the logical-equivalence check, so the loss
//! vanishes exactly on all estimates that equal the error up to a stabilizer.

use crate::decoder::{belief_quantize, belief_quantize_grad, sigmoid_neg, LlrTriple};
use crate::code::NormalizerMatrix;
use crate::gf4::{Pauli, PauliVector};
use crate::{Error, LlrScalar, Result};

/// `P(<e_hat_i, eta> = 1 | z)` from the hard-decision triple of variable
/// node i: the quantized belief, pushed through a logistic.
pub fn soft_equivalence_probability<R: LlrScalar>(gamma: &LlrTriple<R>, eta: Pauli) -> R {
    sigmoid_neg(belief_quantize(gamma, eta))
}

fn check_shapes<R: LlrScalar>(
    gammas: &[LlrTriple<R>],
    e: &PauliVector,
    s_perp: &NormalizerMatrix,
) -> Result<()> {
    if gammas.len() != e.len() {
        return Err(Error::Dimension(format!(
            "{} belief triples against {} qubits",
            gammas.len(),
            e.len()
        )));
    }
    if let Some(row) = s_perp.rows().first() {
        if row.len() != e.len() {
            return Err(Error::Dimension(format!(
                "normalizer rows on {} qubits against {} qubits",
                row.len(),
                e.len()
            )));
        }
    }
    Ok(())
}

/// `f(x) = |sin(pi x / 2)|` and its derivative (zero at the kinks).
fn f_and_deriv<R: LlrScalar>(x: R) -> (R, R) {
    let half_pi = R::from_f64(std::f64::consts::FRAC_PI_2).unwrap();
    let s = (half_pi * x).sin();
    let c = (half_pi * x).cos();
    let sign = if s > R::zero() {
        R::one()
    } else if s < R::zero() {
        -R::one()
    } else {
        R::zero()
    };
    (s.abs(), half_pi * c * sign)
}

/// The degeneracy loss of one hard-decision snapshot against the true error.
pub fn degeneracy_loss<R: LlrScalar>(
    gammas: &[LlrTriple<R>],
    e: &PauliVector,
    s_perp: &NormalizerMatrix,
) -> Result<R> {
    check_shapes(gammas, e, s_perp)?;
    let mut total = R::zero();
    for row in s_perp.rows() {
        let mut inner = R::zero();
        for (i, eta) in row.support() {
            let q = soft_equivalence_probability(&gammas[i], eta);
            let p = if e.get(i).trace_inner_product(eta) {
                R::one() - q
            } else {
                q
            };
            inner += p;
        }
        total += f_and_deriv(inner).0;
    }
    Ok(total)
}

/// Loss plus its partial derivatives with respect to every hard-decision
/// LLR component.
pub fn degeneracy_loss_grad<R: LlrScalar>(
    gammas: &[LlrTriple<R>],
    e: &PauliVector,
    s_perp: &NormalizerMatrix,
) -> Result<(R, Vec<LlrTriple<R>>)> {
    check_shapes(gammas, e, s_perp)?;
    let n = gammas.len();
    // First pass: inner sums per row need the probabilities; cache the
    // quantized LLR per (variable, label) on demand.
    let mut q_cache: Vec<LlrTriple<R>> = vec![LlrTriple::uniform(R::nan()); n];
    let mut q_of = |i: usize, eta: Pauli, gammas: &[LlrTriple<R>]| -> R {
        let cached = q_cache[i].get(eta);
        if cached.is_nan() {
            let q = soft_equivalence_probability(&gammas[i], eta);
            q_cache[i].set(eta, q);
            q
        } else {
            cached
        }
    };
    let mut total = R::zero();
    // coeff[i][eta]: sum over rows of f'(inner) * dpsign
    let mut coeff: Vec<LlrTriple<R>> = vec![LlrTriple::uniform(R::zero()); n];
    for row in s_perp.rows() {
        let support = row.support();
        let mut inner = R::zero();
        for &(i, eta) in &support {
            let q = q_of(i, eta, gammas);
            let p = if e.get(i).trace_inner_product(eta) {
                R::one() - q
            } else {
                q
            };
            inner += p;
        }
        let (value, deriv) = f_and_deriv(inner);
        total += value;
        if deriv == R::zero() {
            continue;
        }
        for &(i, eta) in &support {
            let sign = if e.get(i).trace_inner_product(eta) {
                -R::one()
            } else {
                R::one()
            };
            let c = coeff[i].get(eta) + deriv * sign;
            coeff[i].set(eta, c);
        }
    }
    // Second pass: chain through q = sigmoid(-lambda_eta(Gamma_i)).
    let mut grads = vec![LlrTriple::uniform(R::zero()); n];
    for i in 0..n {
        for eta in Pauli::NONZERO {
            let c = coeff[i].get(eta);
            if c == R::zero() {
                continue;
            }
            let lambda = belief_quantize(&gammas[i], eta);
            let q = sigmoid_neg(lambda);
            let dq_dlambda = -q * (R::one() - q);
            let qg = belief_quantize_grad(&gammas[i], eta);
            for zeta in Pauli::NONZERO {
                let g = grads[i].get(zeta) + c * dq_dlambda * qg.get(zeta);
                grads[i].set(zeta, g);
            }
        }
    }
    Ok((total, grads))
}

/// Multi-loss over a decode history: the weighted mean of the per-iteration
/// degeneracy losses (see [`super::MultiLossMode`]).
pub fn multi_loss<R: LlrScalar>(
    per_iteration_gammas: &[Vec<LlrTriple<R>>],
    e: &PauliVector,
    s_perp: &NormalizerMatrix,
    mode: super::MultiLossMode,
) -> Result<R> {
    if per_iteration_gammas.is_empty() {
        return Err(Error::InvalidParameter(
            "multi-loss needs at least one recorded iteration".into(),
        ));
    }
    let losses = per_iteration_gammas
        .iter()
        .map(|g| degeneracy_loss(g, e, s_perp))
        .collect::<Result<Vec<R>>>()?;
    let weights = mode.iteration_weights(&losses);
    Ok(losses
        .iter()
        .zip(&weights)
        .map(|(&l, &w)| l * w)
        .fold(R::zero(), |a, b| a + b))
}
