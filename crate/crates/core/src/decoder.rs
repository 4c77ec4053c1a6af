//! Refined quaternary belief propagation with scalar messages.
//!
//! The syndrome of a stabilizer code is binary, so instead of passing
//! 3-component GF(4) LLR vectors the decoder quantizes each variable-node
//! belief to the scalar LLR of the commutation variable with the edge's check
//! label. One iteration of the flooding schedule is: check-node update,
//! variable-node update, hard decision, syndrome check. Per-iteration
//! multiplicative weights (one per check, one per variable node) turn the
//! same code path into the trainable decoder; with unit weights the two are
//! bit-for-bit identical.

use serde::{Deserialize, Serialize};

use crate::code::{CheckMatrix, Syndrome};
use crate::gf4::{Pauli, PauliVector};
use crate::{Error, LlrScalar, Result};

/// LLRs of the three non-identity error hypotheses at one variable node,
/// `ln(P(e = I) / P(e = p))` for `p` in X, Y, Z.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LlrTriple<R> {
    pub x: R,
    pub y: R,
    pub z: R,
}

impl<R: LlrScalar> LlrTriple<R> {
    pub fn uniform(v: R) -> Self {
        LlrTriple { x: v, y: v, z: v }
    }

    pub fn new(x: R, y: R, z: R) -> Self {
        LlrTriple { x, y, z }
    }

    #[inline]
    pub fn get(&self, p: Pauli) -> R {
        match p {
            Pauli::X => self.x,
            Pauli::Y => self.y,
            Pauli::Z => self.z,
            Pauli::I => panic!("the identity has no LLR component"),
        }
    }

    #[inline]
    pub fn set(&mut self, p: Pauli, v: R) {
        match p {
            Pauli::X => self.x = v,
            Pauli::Y => self.y = v,
            Pauli::Z => self.z = v,
            Pauli::I => panic!("the identity has no LLR component"),
        }
    }

    pub fn clamped(&self, bound: R) -> Self {
        LlrTriple {
            x: clamp(self.x, bound),
            y: clamp(self.y, bound),
            z: clamp(self.z, bound),
        }
    }
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

/// `ln(1 + e^(-x))`, stable for large |x|.
#[inline]
fn softplus_neg<R: LlrScalar>(x: R) -> R {
    if x >= R::zero() {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// `ln(e^(-a) + e^(-b))`, stable for large |a|, |b|.
#[inline]
fn logsumexp_neg<R: LlrScalar>(a: R, b: R) -> R {
    let m = a.min(b);
    -m + (-(a - b).abs()).exp().ln_1p()
}

/// Channel prior for a depolarizing channel with estimated error probability
/// `epsilon0`: all three components equal `ln((1 - e0) / (e0 / 3))`.
pub fn init_priors<R: LlrScalar>(epsilon0: f64) -> Result<LlrTriple<R>> {
    if !(epsilon0 > 0.0 && epsilon0 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon0 {epsilon0} outside (0, 1)"
        )));
    }
    let v = ((1.0 - epsilon0) / (epsilon0 / 3.0)).ln();
    Ok(LlrTriple::uniform(R::from_f64(v).ok_or_else(|| {
        Error::InvalidParameter("prior not representable in scalar type".into())
    })?))
}

/// Belief quantization: the scalar LLR of the binary variable "e_i
/// anticommutes with `eta`",
///
/// ```text
/// lambda_eta(L) = ln( (1 + e^(-L_eta)) / sum_{zeta != 0, eta} e^(-L_zeta) )
/// ```
///
/// `eta` must be non-identity.
pub fn belief_quantize<R: LlrScalar>(triple: &LlrTriple<R>, eta: Pauli) -> R {
    assert!(!eta.is_identity(), "quantization label must be nonzero");
    let (a, b) = match eta {
        Pauli::X => (triple.y, triple.z),
        Pauli::Y => (triple.x, triple.z),
        Pauli::Z => (triple.x, triple.y),
        Pauli::I => unreachable!(),
    };
    softplus_neg(triple.get(eta)) - logsumexp_neg(a, b)
}

/// `1 / (1 + e^t)`, i.e. the logistic sigmoid of `-t`.
#[inline]
pub(crate) fn sigmoid_neg<R: LlrScalar>(t: R) -> R {
    R::one() / (R::one() + t.exp())
}

/// Partial derivatives of [`belief_quantize`] with respect to the three
/// input components, returned as a triple in the same layout.
pub(crate) fn belief_quantize_grad<R: LlrScalar>(
    triple: &LlrTriple<R>,
    eta: Pauli,
) -> LlrTriple<R> {
    let (pa, pb) = match eta {
        Pauli::X => (Pauli::Y, Pauli::Z),
        Pauli::Y => (Pauli::X, Pauli::Z),
        Pauli::Z => (Pauli::X, Pauli::Y),
        Pauli::I => panic!("quantization label must be nonzero"),
    };
    let ga = triple.get(pa);
    let gb = triple.get(pb);
    let mut out = LlrTriple::uniform(R::zero());
    // d/dL ln(1 + e^(-L)) = -1 / (1 + e^L)
    out.set(eta, -sigmoid_neg(triple.get(eta)));
    // d/dL_a [-ln(e^(-L_a) + e^(-L_b))] = 1 / (1 + e^(L_a - L_b))
    out.set(pa, sigmoid_neg(ga - gb));
    out.set(pb, sigmoid_neg(gb - ga));
    out
}

/// Tanner graph of a check matrix in CSR form, edges ordered by check.
#[derive(Clone, Debug)]
pub struct DecoderGraph {
    n: usize,
    m: usize,
    check_ptr: Vec<u32>,
    edge_vn: Vec<u32>,
    edge_label: Vec<Pauli>,
    vn_ptr: Vec<u32>,
    vn_edges: Vec<u32>,
    rows: Vec<PauliVector>,
    max_check_degree: usize,
    digest: String,
}

impl DecoderGraph {
    pub fn from_check_matrix(matrix: &CheckMatrix) -> Self {
        let n = matrix.qubits();
        let m = matrix.row_count();
        let mut check_ptr = Vec::with_capacity(m + 1);
        let mut edge_vn = Vec::new();
        let mut edge_label = Vec::new();
        check_ptr.push(0u32);
        for row in matrix.rows() {
            for (i, p) in row.support() {
                edge_vn.push(i as u32);
                edge_label.push(p);
            }
            check_ptr.push(edge_vn.len() as u32);
        }
        let mut vn_counts = vec![0u32; n];
        for &v in &edge_vn {
            vn_counts[v as usize] += 1;
        }
        let mut vn_ptr = Vec::with_capacity(n + 1);
        vn_ptr.push(0u32);
        for c in &vn_counts {
            vn_ptr.push(vn_ptr.last().unwrap() + c);
        }
        let mut cursor: Vec<u32> = vn_ptr[..n].to_vec();
        let mut vn_edges = vec![0u32; edge_vn.len()];
        for (e, &v) in edge_vn.iter().enumerate() {
            vn_edges[cursor[v as usize] as usize] = e as u32;
            cursor[v as usize] += 1;
        }
        let max_check_degree = (0..m)
            .map(|j| (check_ptr[j + 1] - check_ptr[j]) as usize)
            .max()
            .unwrap_or(0);
        DecoderGraph {
            n,
            m,
            check_ptr,
            edge_vn,
            edge_label,
            vn_ptr,
            vn_edges,
            rows: matrix.rows().to_vec(),
            max_check_degree,
            digest: matrix.digest(),
        }
    }

    pub fn variable_count(&self) -> usize {
        self.n
    }

    pub fn check_count(&self) -> usize {
        self.m
    }

    pub fn edge_count(&self) -> usize {
        self.edge_vn.len()
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    #[inline]
    pub fn check_edges(&self, j: usize) -> std::ops::Range<usize> {
        self.check_ptr[j] as usize..self.check_ptr[j + 1] as usize
    }

    #[inline]
    pub fn vn_edges(&self, i: usize) -> &[u32] {
        &self.vn_edges[self.vn_ptr[i] as usize..self.vn_ptr[i + 1] as usize]
    }

    #[inline]
    pub fn edge_label(&self, e: usize) -> Pauli {
        self.edge_label[e]
    }

    #[inline]
    pub fn edge_vn(&self, e: usize) -> usize {
        self.edge_vn[e] as usize
    }

    /// Syndrome of a candidate error against the rows of this graph's
    /// check matrix.
    pub fn syndrome_of(&self, e: &PauliVector) -> Syndrome {
        let mut bits = crate::bits::BitVec::zeros(self.m);
        for (j, row) in self.rows.iter().enumerate() {
            if row.trace_inner_product_unchecked(e) {
                bits.set(j, true);
            }
        }
        Syndrome::new(bits)
    }
}

/// Per-iteration multiplicative weights: `w_c[l][j]` scales the outgoing
/// messages of check j at iteration l+1, `w_v[l][i]` scales the channel
/// prior of variable node i. Unit weights reproduce the plain decoder.
#[derive(Clone, Debug, PartialEq)]
pub struct NbpWeights<R> {
    pub w_c: Vec<Vec<R>>,
    pub w_v: Vec<Vec<R>>,
}

impl<R: LlrScalar> NbpWeights<R> {
    pub fn unit(iterations: usize, checks: usize, variables: usize) -> Self {
        NbpWeights {
            w_c: vec![vec![R::one(); checks]; iterations],
            w_v: vec![vec![R::one(); variables]; iterations],
        }
    }

    pub fn iterations(&self) -> usize {
        self.w_c.len()
    }

    pub fn validate(&self, graph: &DecoderGraph, max_iterations: usize) -> Result<()> {
        if self.w_c.len() != self.w_v.len() {
            return Err(Error::Dimension(format!(
                "weight tensors disagree on iterations: {} vs {}",
                self.w_c.len(),
                self.w_v.len()
            )));
        }
        if self.w_c.len() < max_iterations {
            return Err(Error::Dimension(format!(
                "weights cover {} iterations, decode wants {max_iterations}",
                self.w_c.len()
            )));
        }
        for row in &self.w_c {
            if row.len() != graph.check_count() {
                return Err(Error::Dimension(format!(
                    "w_c row of length {} against {} checks",
                    row.len(),
                    graph.check_count()
                )));
            }
        }
        for row in &self.w_v {
            if row.len() != graph.variable_count() {
                return Err(Error::Dimension(format!(
                    "w_v row of length {} against {} variable nodes",
                    row.len(),
                    graph.variable_count()
                )));
            }
        }
        Ok(())
    }
}

/// Edge messages of one decode call. `lambda` flows variable -> check,
/// `delta` check -> variable; both stay within the clip bound.
#[derive(Clone, Debug)]
pub struct MessageState<R> {
    pub lambda: Vec<R>,
    pub delta: Vec<R>,
}

impl<R: LlrScalar> MessageState<R> {
    /// Initial messages: the quantized channel prior on every edge.
    pub fn init(graph: &DecoderGraph, prior: &LlrTriple<R>) -> Self {
        let clip = R::clip_llr();
        let lambda = (0..graph.edge_count())
            .map(|e| clamp(belief_quantize(prior, graph.edge_label(e)), clip))
            .collect();
        MessageState {
            lambda,
            delta: vec![R::zero(); graph.edge_count()],
        }
    }
}

/// Check-node update: for every check j and neighbor i,
///
/// ```text
/// delta_{i<-j} = (-1)^(z_j) * 2 * w_c_j * atanh( prod_{i' != i} tanh(lambda_{i'->j} / 2) )
/// ```
///
/// computed with division-free prefix/suffix products; the atanh argument and
/// the result are clamped.
pub fn cn_update<R: LlrScalar>(
    graph: &DecoderGraph,
    syndrome: &Syndrome,
    lambda: &[R],
    delta: &mut [R],
    w_c: Option<&[R]>,
) {
    let clip = R::clip_llr();
    let guard = R::one() - R::atanh_guard();
    let two = R::from_f64(2.0).unwrap();
    let d = graph.max_check_degree;
    let mut t = vec![R::zero(); d];
    let mut prefix = vec![R::one(); d + 1];
    let mut suffix = vec![R::one(); d + 1];
    for j in 0..graph.check_count() {
        let range = graph.check_edges(j);
        let deg = range.len();
        let sign = if syndrome.get(j) { -R::one() } else { R::one() };
        let w = w_c.map_or_else(R::one, |w| w[j]);
        for (k, e) in range.clone().enumerate() {
            t[k] = (lambda[e] / two).tanh();
        }
        prefix[0] = R::one();
        for k in 0..deg {
            prefix[k + 1] = prefix[k] * t[k];
        }
        suffix[deg] = R::one();
        for k in (0..deg).rev() {
            suffix[k] = suffix[k + 1] * t[k];
        }
        for (k, e) in range.enumerate() {
            let extrinsic = clamp(prefix[k] * suffix[k + 1], guard);
            delta[e] = clamp(sign * two * w * extrinsic.atanh(), clip);
        }
    }
}

/// Sums of incoming check messages at one variable node, bucketed by the
/// edge label; `anticommuting_total(zeta)` is the sum over all edges whose
/// label anticommutes with `zeta`.
#[derive(Clone, Copy)]
struct LabelSums<R> {
    x: R,
    y: R,
    z: R,
}

impl<R: LlrScalar> LabelSums<R> {
    fn gather(graph: &DecoderGraph, i: usize, delta: &[R]) -> Self {
        let mut sums = LabelSums {
            x: R::zero(),
            y: R::zero(),
            z: R::zero(),
        };
        for &e in graph.vn_edges(i) {
            let d = delta[e as usize];
            match graph.edge_label(e as usize) {
                Pauli::X => sums.x += d,
                Pauli::Y => sums.y += d,
                Pauli::Z => sums.z += d,
                Pauli::I => unreachable!("graph edges carry nonzero labels"),
            }
        }
        sums
    }

    #[inline]
    fn anticommuting_total(&self, zeta: Pauli) -> R {
        match zeta {
            Pauli::X => self.y + self.z,
            Pauli::Y => self.x + self.z,
            Pauli::Z => self.x + self.y,
            Pauli::I => unreachable!(),
        }
    }
}

/// Variable-node update: recomputes every outgoing `lambda` message from the
/// weighted prior plus the extrinsic anticommuting check messages.
pub fn vn_update<R: LlrScalar>(
    graph: &DecoderGraph,
    prior: &LlrTriple<R>,
    delta: &[R],
    lambda: &mut [R],
    w_v: Option<&[R]>,
) {
    let clip = R::clip_llr();
    for i in 0..graph.variable_count() {
        let w = w_v.map_or_else(R::one, |w| w[i]);
        let sums = LabelSums::gather(graph, i, delta);
        for &e in graph.vn_edges(i) {
            let e = e as usize;
            let eta = graph.edge_label(e);
            let mut triple = LlrTriple::uniform(R::zero());
            for zeta in Pauli::NONZERO {
                let mut total = sums.anticommuting_total(zeta);
                if zeta.trace_inner_product(eta) {
                    total = total - delta[e];
                }
                triple.set(zeta, clamp(w * prior.get(zeta) + total, clip));
            }
            lambda[e] = clamp(belief_quantize(&triple, eta), clip);
        }
    }
}

/// Hard decision: the aggregated (non-extrinsic) LLR triple per variable
/// node, and the resulting error estimate. A component of exactly zero
/// counts as "not positive"; argmin ties break in the order Y, X, Z.
pub fn hard_decision<R: LlrScalar>(
    graph: &DecoderGraph,
    prior: &LlrTriple<R>,
    delta: &[R],
    w_v: Option<&[R]>,
) -> (Vec<LlrTriple<R>>, PauliVector) {
    let clip = R::clip_llr();
    let mut gammas = Vec::with_capacity(graph.variable_count());
    let mut e_hat = PauliVector::identity(graph.variable_count());
    for i in 0..graph.variable_count() {
        let w = w_v.map_or_else(R::one, |w| w[i]);
        let sums = LabelSums::gather(graph, i, delta);
        let mut triple = LlrTriple::uniform(R::zero());
        for zeta in Pauli::NONZERO {
            let g = w * prior.get(zeta) + sums.anticommuting_total(zeta);
            triple.set(zeta, clamp(g, clip));
        }
        gammas.push(triple);
        let all_positive = Pauli::NONZERO.iter().all(|&z| triple.get(z) > R::zero());
        if !all_positive {
            let mut best = Pauli::Y;
            let mut best_val = triple.get(Pauli::Y);
            for zeta in [Pauli::X, Pauli::Z] {
                if triple.get(zeta) < best_val {
                    best = zeta;
                    best_val = triple.get(zeta);
                }
            }
            e_hat.set(i, best);
        }
    }
    (gammas, e_hat)
}

/// Knobs of a single decode call.
#[derive(Clone, Copy, Debug)]
pub struct DecodeOptions {
    pub max_iterations: usize,
    /// Stop as soon as the estimate reproduces the syndrome. Disabled during
    /// training so the unrolled graph has a fixed depth.
    pub early_stop: bool,
    /// Keep the per-iteration message and hard-decision history (needed for
    /// the training loss and its gradients).
    pub record_history: bool,
}

impl DecodeOptions {
    pub fn new(max_iterations: usize) -> Self {
        DecodeOptions {
            max_iterations,
            early_stop: true,
            record_history: false,
        }
    }
}

/// Message history of one unrolled decode, one entry per executed iteration.
#[derive(Clone, Debug)]
pub struct IterationTrace<R> {
    /// Variable-to-check messages entering the iteration's CN update.
    pub lambda_in: Vec<R>,
    /// Check-to-variable messages after the CN update.
    pub delta: Vec<R>,
    /// Clipped hard-decision LLR triples.
    pub gamma: Vec<LlrTriple<R>>,
}

#[derive(Clone, Debug)]
pub struct DecodeResult<R> {
    pub e_hat: PauliVector,
    /// True iff the final estimate reproduces the input syndrome.
    pub converged: bool,
    pub iterations_used: usize,
    pub trace: Vec<IterationTrace<R>>,
}

/// Runs the flooding decoder for at most `opts.max_iterations` iterations.
/// Non-convergence is a result state, not an error.
pub fn decode<R: LlrScalar>(
    graph: &DecoderGraph,
    syndrome: &Syndrome,
    prior: &LlrTriple<R>,
    weights: Option<&NbpWeights<R>>,
    opts: &DecodeOptions,
) -> Result<DecodeResult<R>> {
    if syndrome.len() != graph.check_count() {
        return Err(Error::Dimension(format!(
            "syndrome of length {} against {} checks",
            syndrome.len(),
            graph.check_count()
        )));
    }
    if opts.max_iterations == 0 {
        return Err(Error::InvalidParameter("max_iterations must be >= 1".into()));
    }
    if let Some(w) = weights {
        w.validate(graph, opts.max_iterations)?;
    }
    let mut state = MessageState::init(graph, prior);
    let mut trace = Vec::new();
    let mut e_hat = PauliVector::identity(graph.variable_count());
    let mut converged = false;
    let mut iterations_used = 0;
    for ell in 0..opts.max_iterations {
        let w_c = weights.map(|w| w.w_c[ell].as_slice());
        let w_v = weights.map(|w| w.w_v[ell].as_slice());
        let lambda_in = opts.record_history.then(|| state.lambda.clone());
        cn_update(graph, syndrome, &state.lambda, &mut state.delta, w_c);
        vn_update(graph, prior, &state.delta, &mut state.lambda, w_v);
        let (gammas, estimate) = hard_decision(graph, prior, &state.delta, w_v);
        if let Some(lambda_in) = lambda_in {
            trace.push(IterationTrace {
                lambda_in,
                delta: state.delta.clone(),
                gamma: gammas,
            });
        }
        e_hat = estimate;
        iterations_used = ell + 1;
        converged = graph.syndrome_of(&e_hat) == *syndrome;
        if converged && opts.early_stop {
            break;
        }
    }
    Ok(DecodeResult {
        e_hat,
        converged,
        iterations_used,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::CssCode;
    use crate::overcomplete::all_combinations;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn toy_graph() -> DecoderGraph {
        DecoderGraph::from_check_matrix(&CssCode::bch_7_1_3().to_quaternary().unwrap())
    }

    fn toy_oc_graph() -> DecoderGraph {
        let code = CssCode::bch_7_1_3();
        DecoderGraph::from_check_matrix(all_combinations(&code, 7).unwrap().matrix())
    }

    #[test]
    fn prior_values() {
        let p: LlrTriple<f64> = init_priors(0.75).unwrap();
        assert_eq!(p.x, 0.0);
        let p: LlrTriple<f64> = init_priors(0.1).unwrap();
        assert_abs_diff_eq!(p.x, 27f64.ln(), epsilon = 1e-12);
        assert!(init_priors::<f64>(0.0).is_err());
        assert!(init_priors::<f64>(1.0).is_err());
    }

    #[test]
    fn quantized_prior_is_ln_14() {
        // epsilon0 = 0.1: every initial scalar message is ln 14 = 2.639
        let p: LlrTriple<f64> = init_priors(0.1).unwrap();
        for eta in Pauli::NONZERO {
            assert_abs_diff_eq!(belief_quantize(&p, eta), 14f64.ln(), epsilon = 1e-12);
            assert_abs_diff_eq!(belief_quantize(&p, eta), 2.639, epsilon = 0.005);
        }
        // symmetric uncertainty quantizes to zero
        let zero = LlrTriple::uniform(0.0f64);
        for eta in Pauli::NONZERO {
            assert_abs_diff_eq!(belief_quantize(&zero, eta), 0.0, epsilon = 1e-15);
        }
    }

    /// Probability-domain oracle for the quantizer: convert LLRs to the four
    /// error probabilities, compute ln(P(commute)/P(anticommute)) directly.
    fn quantize_oracle(t: &LlrTriple<f64>, eta: Pauli) -> f64 {
        let probs = [
            (Pauli::I, 1.0),
            (Pauli::X, (-t.x).exp()),
            (Pauli::Y, (-t.y).exp()),
            (Pauli::Z, (-t.z).exp()),
        ];
        let mut commute = 0.0;
        let mut anti = 0.0;
        for (p, w) in probs {
            if p.trace_inner_product(eta) {
                anti += w;
            } else {
                commute += w;
            }
        }
        (commute / anti).ln()
    }

    #[test]
    fn quantizer_matches_probability_oracle() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..2000 {
            let t = LlrTriple::new(
                rng.gen_range(-25.0..25.0),
                rng.gen_range(-25.0..25.0),
                rng.gen_range(-25.0..25.0),
            );
            for eta in Pauli::NONZERO {
                let got = belief_quantize(&t, eta);
                let want = quantize_oracle(&t, eta);
                assert!((got - want).abs() < 1e-9, "{got} vs {want}");
            }
        }
    }

    #[test]
    fn quantizer_skewed_triple() {
        // error strongly believed to be X: commutes with X, anticommutes
        // with Y and Z
        let t = LlrTriple::new(-10.0f64, 10.0, 10.0);
        assert!(belief_quantize(&t, Pauli::X) > 15.0);
        assert!(belief_quantize(&t, Pauli::Y) < -5.0);
        assert!(belief_quantize(&t, Pauli::Z) < -5.0);
        for eta in Pauli::NONZERO {
            assert_abs_diff_eq!(
                belief_quantize(&t, eta),
                quantize_oracle(&t, eta),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn first_cn_messages_on_toy_are_minus_1_55() {
        let graph = toy_graph();
        let prior: LlrTriple<f64> = init_priors(0.1).unwrap();
        let state = MessageState::init(&graph, &prior);
        let e = PauliVector::parse("Y7", 7).unwrap();
        let z = graph.syndrome_of(&e);
        let mut delta = vec![0.0; graph.edge_count()];
        cn_update(&graph, &z, &state.lambda, &mut delta, None);
        let expected = -2.0 * (13.0f64 / 15.0).powi(3).atanh();
        for &d in &delta {
            assert_abs_diff_eq!(d, expected, epsilon = 1e-12);
            assert_abs_diff_eq!(d, -1.554, epsilon = 0.005);
        }
    }

    #[test]
    fn cn_sign_follows_syndrome_bit() {
        let graph = toy_graph();
        let prior: LlrTriple<f64> = init_priors(0.1).unwrap();
        let state = MessageState::init(&graph, &prior);
        let z0 = Syndrome::zeros(6);
        let mut delta = vec![0.0; graph.edge_count()];
        cn_update(&graph, &z0, &state.lambda, &mut delta, None);
        let e = PauliVector::parse("Y7", 7).unwrap();
        let z1 = graph.syndrome_of(&e);
        let mut delta1 = vec![0.0; graph.edge_count()];
        cn_update(&graph, &z1, &state.lambda, &mut delta1, None);
        for (a, b) in delta.iter().zip(&delta1) {
            assert_abs_diff_eq!(*a, -*b, epsilon = 1e-15);
        }
    }

    #[test]
    fn degree_one_check_saturates_at_the_atanh_guard() {
        // single weight-1 X check on one qubit
        let mut support = crate::bits::BitVec::zeros(1);
        support.set(0, true);
        let m = CheckMatrix::new(vec![PauliVector::x_type(&support)], 1).unwrap();
        let graph = DecoderGraph::from_check_matrix(&m);
        let prior: LlrTriple<f64> = init_priors(0.1).unwrap();
        let state = MessageState::init(&graph, &prior);
        let mut delta = vec![0.0; 1];
        let z = Syndrome::parse("1", 1).unwrap();
        cn_update(&graph, &z, &state.lambda, &mut delta, None);
        // empty product = 1, clamped to 1 - 1e-12 before atanh
        let expected = -2.0 * (1.0f64 - 1e-12).atanh();
        assert_abs_diff_eq!(delta[0], expected, epsilon = 1e-9);
        assert!(delta[0].abs() <= crate::CLIP_LLR);
    }

    #[test]
    fn first_hard_decision_original_matrix_is_the_unflagged_estimate() {
        let graph = toy_graph();
        let prior: LlrTriple<f64> = init_priors(0.1).unwrap();
        let e = PauliVector::parse("Y7", 7).unwrap();
        let z = graph.syndrome_of(&e);
        let state = MessageState::init(&graph, &prior);
        let mut delta = vec![0.0; graph.edge_count()];
        cn_update(&graph, &z, &state.lambda, &mut delta, None);
        let (_, e_hat) = hard_decision(&graph, &prior, &delta, None);
        assert_eq!(e_hat, PauliVector::parse("Y3Y5Y6Y7", 7).unwrap());
        // it reproduces the syndrome, i.e. the decoder "converges" to it
        assert_eq!(graph.syndrome_of(&e_hat), z);
    }

    #[test]
    fn first_hard_decision_with_tiny_prior_changes_the_estimate() {
        let graph = toy_graph();
        let prior: LlrTriple<f64> = init_priors(0.001).unwrap();
        let e = PauliVector::parse("Y7", 7).unwrap();
        let z = graph.syndrome_of(&e);
        let state = MessageState::init(&graph, &prior);
        let mut delta = vec![0.0; graph.edge_count()];
        cn_update(&graph, &z, &state.lambda, &mut delta, None);
        let (_, e_hat) = hard_decision(&graph, &prior, &delta, None);
        assert_ne!(e_hat, PauliVector::parse("Y3Y5Y6Y7", 7).unwrap());
    }

    #[test]
    fn first_hard_decision_overcomplete_matrix_finds_y7() {
        let code = CssCode::bch_7_1_3();
        let oc = all_combinations(&code, 7).unwrap();
        let graph = DecoderGraph::from_check_matrix(oc.matrix());
        let prior: LlrTriple<f64> = init_priors(0.1).unwrap();
        let e = PauliVector::parse("Y7", 7).unwrap();
        let z = oc
            .map_syndrome(&code.to_quaternary().unwrap().syndrome(&e).unwrap())
            .unwrap();
        let state = MessageState::init(&graph, &prior);
        let mut delta = vec![0.0; graph.edge_count()];
        cn_update(&graph, &z, &state.lambda, &mut delta, None);
        let (_, e_hat) = hard_decision(&graph, &prior, &delta, None);
        assert_eq!(e_hat, e);
    }

    #[test]
    fn vn_update_single_neighbor_reverts_to_prior() {
        // v0 in the toy graph has degree 2 (one X check, one Z check); use a
        // 1-qubit 1-check graph for the degenerate single-neighbor case.
        let mut support = crate::bits::BitVec::zeros(1);
        support.set(0, true);
        let m = CheckMatrix::new(vec![PauliVector::x_type(&support)], 1).unwrap();
        let graph = DecoderGraph::from_check_matrix(&m);
        let prior: LlrTriple<f64> = init_priors(0.1).unwrap();
        let mut state = MessageState::init(&graph, &prior);
        let initial = state.lambda.clone();
        // no extrinsic neighbors: lambda must equal the quantized prior
        // regardless of delta
        state.delta[0] = -7.0;
        vn_update(&graph, &prior, &state.delta.clone(), &mut state.lambda, None);
        assert_eq!(state.lambda, initial);
    }

    #[test]
    fn all_zero_delta_reverts_messages_to_initial() {
        let graph = toy_graph();
        let prior: LlrTriple<f64> = init_priors(0.1).unwrap();
        let mut state = MessageState::init(&graph, &prior);
        let initial = state.lambda.clone();
        let delta = vec![0.0; graph.edge_count()];
        vn_update(&graph, &prior, &delta, &mut state.lambda, None);
        for (a, b) in state.lambda.iter().zip(&initial) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-15);
        }
    }

    /// Hand-rolled single-iteration oracle for one VN message on the toy
    /// graph: v1 (index 0) has one X check and one Z check; the message to
    /// the X check for each zeta uses only the Z check's delta.
    #[test]
    fn vn_update_extrinsic_sum_matches_hand_computation() {
        let graph = toy_graph();
        let prior: LlrTriple<f64> = init_priors(0.1).unwrap();
        let e = PauliVector::parse("Y7", 7).unwrap();
        let z = graph.syndrome_of(&e);
        let mut state = MessageState::init(&graph, &prior);
        cn_update(&graph, &z, &state.lambda.clone(), &mut state.delta, None);
        let delta_val = -2.0 * (13.0f64 / 15.0).powi(3).atanh();
        vn_update(&graph, &prior, &state.delta.clone(), &mut state.lambda, None);
        // locate v0's edge to its X-type check (check 0: support 1,3,5,7)
        let edges = graph.vn_edges(0);
        assert_eq!(edges.len(), 2);
        let to_x_check = edges
            .iter()
            .map(|&e| e as usize)
            .find(|&e| graph.edge_label(e) == Pauli::X)
            .unwrap();
        // extrinsic = the Z check's message; zeta = X and Y anticommute with
        // the Z label, zeta = Z does not
        let expected_triple = LlrTriple::new(
            prior.x + delta_val, // X anticommutes with Z label
            prior.y + delta_val, // Y too
            prior.z,             // Z commutes
        );
        let expected = belief_quantize(&expected_triple, Pauli::X);
        assert_abs_diff_eq!(state.lambda[to_x_check], expected, epsilon = 1e-12);
    }

    #[test]
    fn decode_zero_syndrome_converges_immediately() {
        let graph = toy_graph();
        let prior: LlrTriple<f64> = init_priors(0.1).unwrap();
        let z = Syndrome::zeros(6);
        let r = decode(&graph, &z, &prior, None, &DecodeOptions::new(32)).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations_used, 1);
        assert!(r.e_hat.is_identity());
    }

    #[test]
    fn decode_toy_overcomplete_succeeds_in_one_iteration() {
        let code = CssCode::bch_7_1_3();
        let oc = all_combinations(&code, 7).unwrap();
        let graph = DecoderGraph::from_check_matrix(oc.matrix());
        let prior: LlrTriple<f64> = init_priors(0.1).unwrap();
        let e = PauliVector::parse("Y7", 7).unwrap();
        let z = graph.syndrome_of(&e);
        let r = decode(&graph, &z, &prior, None, &DecodeOptions::new(32)).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations_used, 1);
        assert_eq!(r.e_hat, e);
    }

    #[test]
    fn unit_weights_reproduce_plain_bp_bit_for_bit() {
        let graph = toy_oc_graph();
        let prior: LlrTriple<f64> = init_priors(0.1).unwrap();
        let weights = NbpWeights::unit(8, graph.check_count(), graph.variable_count());
        let mut rng = StdRng::seed_from_u64(404);
        let mut opts = DecodeOptions::new(8);
        opts.record_history = true;
        for _ in 0..200 {
            let mut e = PauliVector::identity(7);
            for i in 0..7 {
                e.set(i, [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][rng.gen_range(0..4)]);
            }
            let z = graph.syndrome_of(&e);
            let plain = decode(&graph, &z, &prior, None, &opts).unwrap();
            let unit = decode(&graph, &z, &prior, Some(&weights), &opts).unwrap();
            assert_eq!(plain.e_hat, unit.e_hat);
            assert_eq!(plain.converged, unit.converged);
            assert_eq!(plain.iterations_used, unit.iterations_used);
            for (a, b) in plain.trace.iter().zip(&unit.trace) {
                assert_eq!(a.lambda_in, b.lambda_in); // bit-exact
                assert_eq!(a.delta, b.delta);
            }
        }
    }

    #[test]
    fn messages_never_leave_the_clip_range() {
        let graph = toy_oc_graph();
        let mut rng = StdRng::seed_from_u64(77);
        let mut opts = DecodeOptions::new(32);
        opts.record_history = true;
        opts.early_stop = false;
        for &eps0 in &[0.001, 0.1, 0.4, 0.75] {
            let prior: LlrTriple<f64> = init_priors(eps0).unwrap();
            for _ in 0..20 {
                let mut e = PauliVector::identity(7);
                for i in 0..7 {
                    e.set(i, [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][rng.gen_range(0..4)]);
                }
                let z = graph.syndrome_of(&e);
                let r = decode(&graph, &z, &prior, None, &opts).unwrap();
                for it in &r.trace {
                    for &v in it.lambda_in.iter().chain(&it.delta) {
                        assert!(v.is_finite() && v.abs() <= crate::CLIP_LLR);
                    }
                    for g in &it.gamma {
                        for zeta in Pauli::NONZERO {
                            let v = g.get(zeta);
                            assert!(v.is_finite() && v.abs() <= crate::CLIP_LLR);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn converged_estimate_reproduces_the_syndrome() {
        let graph = toy_graph();
        let prior: LlrTriple<f64> = init_priors(0.1).unwrap();
        let cfg = crate::channel::DepolarizingConfig::new(0.15, 8).unwrap();
        for t in 0..500 {
            let e = crate::channel::sample_depolarizing(7, &cfg, t);
            let z = graph.syndrome_of(&e);
            let r = decode(&graph, &z, &prior, None, &DecodeOptions::new(32)).unwrap();
            if r.converged {
                assert_eq!(graph.syndrome_of(&r.e_hat), z);
            }
        }
    }

    #[test]
    fn decoding_is_deterministic() {
        let graph = toy_oc_graph();
        let prior: LlrTriple<f64> = init_priors(0.1).unwrap();
        let e = PauliVector::parse("X2Z5", 7).unwrap();
        let z = graph.syndrome_of(&e);
        let a = decode(&graph, &z, &prior, None, &DecodeOptions::new(32)).unwrap();
        let b = decode(&graph, &z, &prior, None, &DecodeOptions::new(32)).unwrap();
        assert_eq!(a.e_hat, b.e_hat);
        assert_eq!(a.iterations_used, b.iterations_used);
    }

    #[test]
    fn f32_decoder_agrees_with_f64_on_the_toy() {
        let graph = toy_graph();
        let prior32: LlrTriple<f32> = init_priors(0.1).unwrap();
        let prior64: LlrTriple<f64> = init_priors(0.1).unwrap();
        let e = PauliVector::parse("Y7", 7).unwrap();
        let z = graph.syndrome_of(&e);
        let r32 = decode(&graph, &z, &prior32, None, &DecodeOptions::new(4)).unwrap();
        let r64 = decode(&graph, &z, &prior64, None, &DecodeOptions::new(4)).unwrap();
        assert_eq!(r32.e_hat, r64.e_hat);
        assert_eq!(r32.converged, r64.converged);
    }

    #[test]
    fn weight_shape_validation() {
        let graph = toy_graph();
        let prior: LlrTriple<f64> = init_priors(0.1).unwrap();
        let z = Syndrome::zeros(6);
        let short = NbpWeights::unit(2, graph.check_count(), graph.variable_count());
        assert!(decode(&graph, &z, &prior, Some(&short), &DecodeOptions::new(8)).is_err());
        let wrong = NbpWeights::unit(8, 5, graph.variable_count());
        assert!(decode(&graph, &z, &prior, Some(&wrong), &DecodeOptions::new(8)).is_err());
    }
}
