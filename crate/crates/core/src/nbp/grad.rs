//! Exact reverse-mode differentiation of the multi-loss through the
//! unrolled decoder.
//!
//! The forward pass must have run without early stopping and with history
//! recording, so the trace holds one entry per weight row. Intermediates
//! that the trace does not store (tanh products, per-edge LLR triples) are
//! recomputed from the recorded messages. Clamped values get a straight-zero
//! gradient outside the clip range.

use crate::code::{NormalizerMatrix, Syndrome};
use crate::decoder::{
    belief_quantize, belief_quantize_grad, DecoderGraph, IterationTrace, LlrTriple, NbpWeights,
};
use crate::gf4::{Pauli, PauliVector};
use crate::nbp::{loss, GradientSet, MultiLossMode};
use crate::{Error, LlrScalar, Result};

/// Reverse-mode gradients of the multi-loss with respect to every weight.
/// Returns the loss value together with the gradient set.
#[allow(clippy::too_many_arguments, clippy::needless_range_loop)]
pub fn backward<R: LlrScalar>(
    graph: &DecoderGraph,
    syndrome: &Syndrome,
    prior: &LlrTriple<R>,
    weights: &NbpWeights<R>,
    trace: &[IterationTrace<R>],
    e: &PauliVector,
    s_perp: &NormalizerMatrix,
    mode: MultiLossMode,
) -> Result<(R, GradientSet<R>)> {
    if trace.is_empty() {
        return Err(Error::InvalidParameter(
            "backward needs a recorded decode trace".into(),
        ));
    }
    if trace.len() != weights.iterations() {
        return Err(Error::Dimension(format!(
            "trace covers {} iterations, weights {}; train without early stop",
            trace.len(),
            weights.iterations()
        )));
    }
    let iterations = trace.len();
    let n = graph.variable_count();
    let m = graph.check_count();
    let clip = R::clip_llr();
    let guard = R::one() - R::atanh_guard();
    let two = R::from_f64(2.0).unwrap();

    // Per-iteration losses and their Gamma adjoints, then the combination
    // coefficients of the multi-loss.
    let mut losses = Vec::with_capacity(iterations);
    let mut gamma_bars = Vec::with_capacity(iterations);
    for it in trace {
        let (l, g) = loss::degeneracy_loss_grad(&it.gamma, e, s_perp)?;
        losses.push(l);
        gamma_bars.push(g);
    }
    let coeffs = mode.iteration_weights(&losses);
    let total = losses
        .iter()
        .zip(&coeffs)
        .map(|(&l, &c)| l * c)
        .fold(R::zero(), |a, b| a + b);

    let mut grads = GradientSet::zeros(iterations, m, n);
    // Adjoint of the lambda messages produced by the current iteration's VN
    // update (zero for the final iteration: those messages are never read).
    let mut lambda_bar = vec![R::zero(); graph.edge_count()];

    for ell in (0..iterations).rev() {
        let it = &trace[ell];
        let w_c = &weights.w_c[ell];
        let w_v = &weights.w_v[ell];
        let mut delta_bar = vec![R::zero(); graph.edge_count()];

        // ---- hard decision: Gamma_i = clamp(w_v * prior + T_zeta) --------
        for i in 0..n {
            let sums = label_sums(graph, i, &it.delta);
            for zeta in Pauli::NONZERO {
                let g_bar = gamma_bars[ell][i].get(zeta) * coeffs[ell];
                if g_bar == R::zero() {
                    continue;
                }
                let raw = w_v[i] * prior.get(zeta) + anticommuting_total(&sums, zeta);
                if raw.abs() > clip {
                    continue;
                }
                grads.w_v[ell][i] += g_bar * prior.get(zeta);
                for &edge in graph.vn_edges(i) {
                    let edge = edge as usize;
                    if zeta.trace_inner_product(graph.edge_label(edge)) {
                        delta_bar[edge] += g_bar;
                    }
                }
            }
        }

        // ---- VN update (the messages feeding iteration ell + 1) ----------
        if ell + 1 < iterations {
            for i in 0..n {
                let edges = graph.vn_edges(i);
                let sums = label_sums(graph, i, &it.delta);
                // Per-edge Gamma-triple adjoints, then redistribute onto the
                // extrinsic deltas via per-label totals.
                let mut edge_gamma_bars: Vec<LlrTriple<R>> = Vec::with_capacity(edges.len());
                let mut totals = LlrTriple::uniform(R::zero());
                for &edge in edges {
                    let edge = edge as usize;
                    let eta = graph.edge_label(edge);
                    let mut l_bar = lambda_bar[edge];
                    let mut triple_raw = LlrTriple::uniform(R::zero());
                    let mut triple = LlrTriple::uniform(R::zero());
                    for zeta in Pauli::NONZERO {
                        let mut t = anticommuting_total(&sums, zeta);
                        if zeta.trace_inner_product(eta) {
                            t = t - it.delta[edge];
                        }
                        let raw = w_v[i] * prior.get(zeta) + t;
                        triple_raw.set(zeta, raw);
                        triple.set(zeta, clamp(raw, clip));
                    }
                    if l_bar != R::zero() && belief_quantize(&triple, eta).abs() > clip {
                        l_bar = R::zero();
                    }
                    let mut g_bar = LlrTriple::uniform(R::zero());
                    if l_bar != R::zero() {
                        let qg = belief_quantize_grad(&triple, eta);
                        for zeta in Pauli::NONZERO {
                            if triple_raw.get(zeta).abs() > clip {
                                continue;
                            }
                            let g = l_bar * qg.get(zeta);
                            g_bar.set(zeta, g);
                            grads.w_v[ell][i] += g * prior.get(zeta);
                            totals.set(zeta, totals.get(zeta) + g);
                        }
                    }
                    edge_gamma_bars.push(g_bar);
                }
                // delta on edge e' feeds the Gamma of every *other* edge of
                // this VN whose zeta anticommutes with e's label.
                for (k, &edge) in edges.iter().enumerate() {
                    let edge = edge as usize;
                    let eta_prime = graph.edge_label(edge);
                    let mut acc = R::zero();
                    for zeta in Pauli::NONZERO {
                        if zeta.trace_inner_product(eta_prime) {
                            acc += totals.get(zeta) - edge_gamma_bars[k].get(zeta);
                        }
                    }
                    delta_bar[edge] += acc;
                }
            }
        }

        // ---- CN update -----------------------------------------------
        let mut lambda_in_bar = vec![R::zero(); graph.edge_count()];
        for j in 0..m {
            let range = graph.check_edges(j);
            let deg = range.len();
            let sign = if syndrome.get(j) { -R::one() } else { R::one() };
            let first = range.start;
            let t: Vec<R> = range
                .clone()
                .map(|edge| (it.lambda_in[edge] / two).tanh())
                .collect();
            let mut prefix = vec![R::one(); deg + 1];
            for k in 0..deg {
                prefix[k + 1] = prefix[k] * t[k];
            }
            let mut suffix = vec![R::one(); deg + 1];
            for k in (0..deg).rev() {
                suffix[k] = suffix[k + 1] * t[k];
            }
            let mut a_bar = vec![R::zero(); deg];
            for k in 0..deg {
                let d_bar = delta_bar[first + k];
                if d_bar == R::zero() {
                    continue;
                }
                let extrinsic = prefix[k] * suffix[k + 1];
                let a = clamp(extrinsic, guard);
                let u = two * a.atanh();
                let raw = sign * w_c[j] * u;
                if raw.abs() > clip {
                    continue;
                }
                grads.w_c[ell][j] += d_bar * sign * u;
                if extrinsic.abs() > guard {
                    continue; // clamped atanh input: zero pass-through
                }
                a_bar[k] = d_bar * sign * w_c[j] * two / (R::one() - a * a);
            }
            // t_bar[k'] = sum_{k != k'} a_bar[k] * prod_{k'' notin {k, k'}} t
            for k in 0..deg {
                if a_bar[k] == R::zero() {
                    continue;
                }
                // prefix/suffix products over t with index k removed
                let mut run = R::one();
                let mut pe = vec![R::one(); deg]; // product of t[j'] for j' < k', j' != k
                for kp in 0..deg {
                    pe[kp] = run;
                    if kp != k {
                        run = run * t[kp];
                    }
                }
                let mut run = R::one();
                let mut ps = vec![R::one(); deg];
                for kp in (0..deg).rev() {
                    ps[kp] = run;
                    if kp != k {
                        run = run * t[kp];
                    }
                }
                for kp in 0..deg {
                    if kp == k {
                        continue;
                    }
                    let t_bar = a_bar[k] * pe[kp] * ps[kp];
                    // d tanh(x/2) / dx = (1 - tanh^2) / 2
                    lambda_in_bar[first + kp] += t_bar * (R::one() - t[kp] * t[kp]) / two;
                }
            }
        }
        lambda_bar = lambda_in_bar;
    }
    Ok((total, grads))
}

#[inline]
fn clamp<R: LlrScalar>(v: R, bound: R) -> R {
    if v > bound {
        bound
    } else if v < -bound {
        -bound
    } else {
        v
    }
}

struct Sums<R> {
    x: R,
    y: R,
    z: R,
}

#[inline]
fn label_sums<R: LlrScalar>(graph: &DecoderGraph, i: usize, delta: &[R]) -> Sums<R> {
    let mut s = Sums {
        x: R::zero(),
        y: R::zero(),
        z: R::zero(),
    };
    for &edge in graph.vn_edges(i) {
        let d = delta[edge as usize];
        match graph.edge_label(edge as usize) {
            Pauli::X => s.x += d,
            Pauli::Y => s.y += d,
            Pauli::Z => s.z += d,
            Pauli::I => unreachable!(),
        }
    }
    s
}

#[inline]
fn anticommuting_total<R: LlrScalar>(s: &Sums<R>, zeta: Pauli) -> R {
    match zeta {
        Pauli::X => s.y + s.z,
        Pauli::Y => s.x + s.z,
        Pauli::Z => s.x + s.y,
        Pauli::I => unreachable!(),
    }
}
