//! Redundant low-weight checks from linear row combinations.
//!
//! Redundant rows of a binary parity-check matrix are low-weight dual
//! codewords. They are found with an information-set search in the style of
//! Leon's probabilistic algorithm: repeatedly row-reduce the matrix on a
//! random pivot-column order and enumerate XORs of a few reduced rows. The
//! combination coefficients are carried through every row operation, so each
//! found row `r` comes with a vector `c` satisfying `r = c * H` exactly.
//! That makes the overcomplete syndrome a free linear remap `z_oc = M * z`
//! of the measured syndrome, with no extra measurements.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{BitMatrix, BitVec};
use crate::code::{CheckMatrix, CssCode, Syndrome};
use crate::gf4::PauliVector;
use crate::{derive_seed, streams, Error, Result};

/// A redundant check: a nonzero GF(2) combination of the rows of some base
/// matrix, together with the coefficients that produce it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RedundantRow {
    /// The combined row, length n.
    pub row: BitVec,
    /// Combination coefficients over the base rows, length m; nonzero.
    pub combo: BitVec,
    /// Popcount of `row`.
    pub weight: usize,
}

impl RedundantRow {
    fn new(row: BitVec, combo: BitVec) -> Self {
        let weight = row.weight();
        RedundantRow { row, combo, weight }
    }

    /// Recomputes `combo * H` and compares with `row`.
    pub fn verify(&self, h: &BitMatrix) -> bool {
        if self.combo.len() != h.rows() || self.combo.is_zero() {
            return false;
        }
        let mut acc = BitVec::zeros(h.cols());
        for i in self.combo.support() {
            acc.xor_assign(h.row(i));
        }
        acc == self.row
    }
}

/// Search effort knobs for [`find_low_weight_rows`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchEffort {
    /// Number of random information sets to try.
    pub iterations: usize,
    /// Maximum number of reduced rows XOR-ed together per candidate.
    pub combo_depth: usize,
    pub rng_seed: u64,
    /// Enumerate all `2^m - 1` combinations instead (m <= 30 enforced).
    pub exhaustive: bool,
}

impl SearchEffort {
    pub fn probabilistic(iterations: usize, rng_seed: u64) -> Self {
        SearchEffort {
            iterations,
            combo_depth: 3,
            rng_seed,
            exhaustive: false,
        }
    }

    pub fn exhaustive() -> Self {
        SearchEffort {
            iterations: 0,
            combo_depth: 0,
            rng_seed: 0,
            exhaustive: true,
        }
    }
}

/// Canonical ordering of found rows: ascending weight, then lexicographic on
/// the row bits (position 0 first).
fn row_order(a: &RedundantRow, b: &RedundantRow) -> Ordering {
    a.weight
        .cmp(&b.weight)
        .then_with(|| a.row.cmp_lex(&b.row))
}

/// Map key wrapper so rows can index a BTreeMap in lexicographic order.
#[derive(PartialEq, Eq)]
struct LexKey(BitVec);

impl Ord for LexKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp_lex(&other.0)
    }
}

impl PartialOrd for LexKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Keep the canonical combo when the same row is produced twice: fewest
/// coefficients, then lexicographically smallest.
fn insert_candidate(found: &mut BTreeMap<LexKey, BitVec>, row: BitVec, combo: BitVec) {
    match found.entry(LexKey(row)) {
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert(combo);
        }
        std::collections::btree_map::Entry::Occupied(mut e) => {
            let old = e.get();
            let better = match combo.weight().cmp(&old.weight()) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => combo.cmp_lex(old) == Ordering::Less,
            };
            if better {
                e.insert(combo);
            }
        }
    }
}

/// Finds nonzero row combinations of `h` with weight at most `max_weight`.
///
/// Results are deduplicated by row value, carry exact combination vectors and
/// come back sorted by (weight, lex). Deterministic for a given effort.
pub fn find_low_weight_rows(
    h: &BitMatrix,
    max_weight: usize,
    effort: &SearchEffort,
) -> Result<Vec<RedundantRow>> {
    if h.rows() == 0 {
        return Err(Error::InvalidParameter("empty base matrix".into()));
    }
    let m = h.rows();
    let mut found: BTreeMap<LexKey, BitVec> = BTreeMap::new();

    if effort.exhaustive {
        if m > 30 {
            return Err(Error::InvalidParameter(format!(
                "exhaustive enumeration over {m} rows is infeasible"
            )));
        }
        // Gray-code walk over all nonzero combinations: one row XOR per step.
        let mut row = BitVec::zeros(h.cols());
        let mut prev_gray = 0u32;
        for i in 1u32..(1u32 << m) {
            let gray = i ^ (i >> 1);
            let flipped = (gray ^ prev_gray).trailing_zeros() as usize;
            prev_gray = gray;
            row.xor_assign(h.row(flipped));
            if row.weight() <= max_weight {
                let mut combo = BitVec::zeros(m);
                for b in 0..m {
                    if (gray >> b) & 1 == 1 {
                        combo.set(b, true);
                    }
                }
                insert_candidate(&mut found, row.clone(), combo);
            }
        }
    } else {
        for iter in 0..effort.iterations {
            let seed = derive_seed(effort.rng_seed, streams::SEARCH, iter as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // Row-reduce on a random pivot-column order, tracking combos in
            // an augmented identity.
            let mut rows: Vec<BitVec> = h.iter_rows().cloned().collect();
            let mut combos: Vec<BitVec> = (0..m)
                .map(|i| {
                    let mut c = BitVec::zeros(m);
                    c.set(i, true);
                    c
                })
                .collect();
            let mut col_order: Vec<usize> = (0..h.cols()).collect();
            col_order.shuffle(&mut rng);
            let mut pivot_row = 0usize;
            for &col in &col_order {
                let Some(r) = (pivot_row..m).find(|&r| rows[r].get(col)) else {
                    continue;
                };
                rows.swap(pivot_row, r);
                combos.swap(pivot_row, r);
                let (prow, pcombo) = (rows[pivot_row].clone(), combos[pivot_row].clone());
                for r2 in 0..m {
                    if r2 != pivot_row && rows[r2].get(col) {
                        rows[r2].xor_assign(&prow);
                        combos[r2].xor_assign(&pcombo);
                    }
                }
                pivot_row += 1;
                if pivot_row == m {
                    break;
                }
            }
            // Zero rows (rank deficiency) carry nonzero combos but empty
            // values; skip them as candidates and as combination members.
            let rank = pivot_row;
            let depth = effort.combo_depth.min(rank).max(1);
            let mut stack: Vec<usize> = Vec::with_capacity(depth);
            enumerate_combos(
                &rows[..rank],
                &combos[..rank],
                max_weight,
                depth,
                &mut stack,
                &BitVec::zeros(h.cols()),
                &BitVec::zeros(m),
                0,
                &mut found,
            );
        }
    }

    let mut out: Vec<RedundantRow> = found
        .into_iter()
        .filter(|(row, _)| !row.0.is_zero())
        .map(|(row, combo)| RedundantRow::new(row.0, combo))
        .collect();
    out.sort_by(row_order);
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn enumerate_combos(
    rows: &[BitVec],
    combos: &[BitVec],
    max_weight: usize,
    depth: usize,
    stack: &mut Vec<usize>,
    acc_row: &BitVec,
    acc_combo: &BitVec,
    start: usize,
    found: &mut BTreeMap<LexKey, BitVec>,
) {
    for i in start..rows.len() {
        let mut row = acc_row.clone();
        row.xor_assign(&rows[i]);
        let mut combo = acc_combo.clone();
        combo.xor_assign(&combos[i]);
        if !row.is_zero() && row.weight() <= max_weight {
            insert_candidate(found, row.clone(), combo.clone());
        }
        if stack.len() + 1 < depth {
            stack.push(i);
            enumerate_combos(rows, combos, max_weight, depth, stack, &row, &combo, i + 1, found);
            stack.pop();
        }
    }
}

/// Row-selection budget for [`assemble_overcomplete`]. The original checks
/// are always kept; the budget only limits the extra rows, which are taken
/// in (weight, lex) order.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SelectionBudget {
    /// Cap on extra rows per side per weight class.
    pub per_weight: Option<usize>,
    /// Cap on total extra rows per side.
    pub total: Option<usize>,
}

impl SelectionBudget {
    pub fn unlimited() -> Self {
        SelectionBudget::default()
    }
}

/// Assembly options; `dedup` removes exact duplicates (against the original
/// rows and within the candidate set). Turning it off reproduces the
/// matrix-augmentation baseline of duplicated checks.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssembleOptions {
    pub budget: SelectionBudget,
    pub dedup: bool,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions {
            budget: SelectionBudget::unlimited(),
            dedup: true,
        }
    }
}

/// A check matrix with redundant rows plus the combination matrices that map
/// the measured syndrome onto it.
#[derive(Clone, Debug)]
pub struct OvercompleteMatrix {
    /// X-side rows then Z-side rows, each side in (weight, lex) order when
    /// redundant rows are present, original order otherwise.
    matrix: CheckMatrix,
    /// Per-side combination matrices: `x_combos` is m_oc_x rows of length
    /// m_x (the original X check count); similarly for Z.
    x_combos: BitMatrix,
    z_combos: BitMatrix,
    code_digest: String,
}

impl OvercompleteMatrix {
    pub fn matrix(&self) -> &CheckMatrix {
        &self.matrix
    }

    pub fn row_count(&self) -> usize {
        self.matrix.row_count()
    }

    pub fn x_row_count(&self) -> usize {
        self.x_combos.rows()
    }

    pub fn z_row_count(&self) -> usize {
        self.z_combos.rows()
    }

    pub fn x_combos(&self) -> &BitMatrix {
        &self.x_combos
    }

    pub fn z_combos(&self) -> &BitMatrix {
        &self.z_combos
    }

    pub fn code_digest(&self) -> &str {
        &self.code_digest
    }

    /// Remaps a syndrome measured against the original checks:
    /// `z_oc = M * z`, applied per side.
    pub fn map_syndrome(&self, z: &Syndrome) -> Result<Syndrome> {
        let m_x = self.x_combos.cols();
        let m_z = self.z_combos.cols();
        if z.len() != m_x + m_z {
            return Err(Error::Dimension(format!(
                "syndrome of length {} against an original check count of {}",
                z.len(),
                m_x + m_z
            )));
        }
        let mut zx = BitVec::zeros(m_x);
        let mut zz = BitVec::zeros(m_z);
        for i in 0..m_x {
            zx.set(i, z.get(i));
        }
        for i in 0..m_z {
            zz.set(i, z.get(m_x + i));
        }
        let ox = self.x_combos.mul_vec(&zx);
        let oz = self.z_combos.mul_vec(&zz);
        let mut bits = BitVec::zeros(self.row_count());
        for i in 0..ox.len() {
            bits.set(i, ox.get(i));
        }
        for i in 0..oz.len() {
            bits.set(ox.len() + i, oz.get(i));
        }
        Ok(Syndrome::new(bits))
    }
}

/// Assembles the overcomplete check matrix from per-side candidate rows.
///
/// The original checks are always included (as unit combinations). When no
/// extra rows survive deduplication and budgeting, the result is exactly the
/// original quaternary matrix with identity combination matrices; otherwise
/// each side is sorted by ascending weight with lexicographic ties.
pub fn assemble_overcomplete(
    code: &CssCode,
    x_rows: &[RedundantRow],
    z_rows: &[RedundantRow],
    options: &AssembleOptions,
) -> Result<OvercompleteMatrix> {
    let side = |base: &BitMatrix, candidates: &[RedundantRow]| -> Result<Vec<RedundantRow>> {
        let m = base.rows();
        let mut rows: Vec<RedundantRow> = (0..m)
            .map(|i| {
                let mut combo = BitVec::zeros(m);
                combo.set(i, true);
                RedundantRow::new(base.row(i).clone(), combo)
            })
            .collect();
        let mut extras: Vec<RedundantRow> = Vec::new();
        let mut seen: BTreeMap<LexKey, ()> = rows
            .iter()
            .map(|r| (LexKey(r.row.clone()), ()))
            .collect();
        for cand in candidates {
            if cand.combo.len() != m {
                return Err(Error::Dimension(format!(
                    "candidate combo of length {} against {m} base rows",
                    cand.combo.len()
                )));
            }
            if !cand.verify(base) {
                return Err(Error::InvalidParameter(
                    "candidate row does not match its combination vector".into(),
                ));
            }
            if options.dedup {
                if seen.contains_key(&LexKey(cand.row.clone())) {
                    continue;
                }
                seen.insert(LexKey(cand.row.clone()), ());
            }
            extras.push(cand.clone());
        }
        extras.sort_by(row_order);
        // budget: lowest weight first, deterministic within each class
        let mut taken = Vec::new();
        let mut per_weight_count: BTreeMap<usize, usize> = BTreeMap::new();
        for extra in extras {
            if let Some(total) = options.budget.total {
                if taken.len() >= total {
                    break;
                }
            }
            if let Some(cap) = options.budget.per_weight {
                let count = per_weight_count.entry(extra.weight).or_insert(0);
                if *count >= cap {
                    continue;
                }
                *count += 1;
            }
            taken.push(extra);
        }
        let had_extras = !taken.is_empty();
        rows.extend(taken);
        if had_extras {
            rows.sort_by(row_order);
        }
        Ok(rows)
    };

    let x_side = side(&code.hx, x_rows)?;
    let z_side = side(&code.hz, z_rows)?;

    let n = code.qubits();
    let mut pauli_rows = Vec::with_capacity(x_side.len() + z_side.len());
    let mut x_combos = BitMatrix::new(code.hx.rows());
    let mut z_combos = BitMatrix::new(code.hz.rows());
    for r in &x_side {
        pauli_rows.push(PauliVector::x_type(&r.row));
        x_combos.push_row(r.combo.clone());
    }
    for r in &z_side {
        pauli_rows.push(PauliVector::z_type(&r.row));
        z_combos.push_row(r.combo.clone());
    }
    // CheckMatrix::new re-checks pairwise commutation; a violation here means
    // the candidate rows were not generated from this code.
    let matrix = CheckMatrix::new(pauli_rows, n)?;
    Ok(OvercompleteMatrix {
        matrix,
        x_combos,
        z_combos,
        code_digest: code.digest(),
    })
}

/// Builds the toy-style overcomplete matrix containing every nonzero row
/// combination of each side up to `max_weight`.
pub fn all_combinations(code: &CssCode, max_weight: usize) -> Result<OvercompleteMatrix> {
    let effort = SearchEffort::exhaustive();
    let x = find_low_weight_rows(&code.hx, max_weight, &effort)?;
    let z = find_low_weight_rows(&code.hz, max_weight, &effort)?;
    assemble_overcomplete(code, &x, &z, &AssembleOptions::default())
}

/// JSON image of an [`OvercompleteMatrix`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OvercompleteFile {
    pub code_digest: String,
    pub n: usize,
    pub x: Vec<StoredRow>,
    pub z: Vec<StoredRow>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StoredRow {
    /// Row support as a 0/1 string of length n.
    pub row: String,
    /// Combination coefficients as a 0/1 string of length m_side.
    pub combo: String,
}

impl OvercompleteFile {
    pub fn from_matrix(oc: &OvercompleteMatrix) -> Self {
        let rows = oc.matrix().rows();
        let x_count = oc.x_row_count();
        let x = (0..x_count)
            .map(|i| StoredRow {
                row: rows[i].x_part().to_bit_string(),
                combo: oc.x_combos.row(i).to_bit_string(),
            })
            .collect();
        let z = (0..oc.z_row_count())
            .map(|i| StoredRow {
                row: rows[x_count + i].z_part().to_bit_string(),
                combo: oc.z_combos.row(i).to_bit_string(),
            })
            .collect();
        OvercompleteFile {
            code_digest: oc.code_digest().to_string(),
            n: oc.matrix().qubits(),
            x,
            z,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Io(format!("serializing overcomplete matrix: {e}")))?;
        std::fs::write(path, text)
            .map_err(|e| Error::Io(format!("writing {}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<OvercompleteFile> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("reading {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("parsing {}: {e}", path.display())))
    }

    /// Rebuilds the matrix against its source code, re-verifying every
    /// combination and the code digest.
    pub fn to_matrix(&self, code: &CssCode) -> Result<OvercompleteMatrix> {
        if code.digest() != self.code_digest {
            return Err(Error::ArtifactMismatch(format!(
                "overcomplete matrix was generated for code digest {}..., got {}...",
                &self.code_digest[..12.min(self.code_digest.len())],
                &code.digest()[..12]
            )));
        }
        let unpack = |stored: &[StoredRow]| -> Result<Vec<RedundantRow>> {
            stored
                .iter()
                .map(|s| {
                    let row = BitVec::from_bit_str(&s.row)
                        .ok_or_else(|| Error::Parse("bad row bit string".into()))?;
                    let combo = BitVec::from_bit_str(&s.combo)
                        .ok_or_else(|| Error::Parse("bad combo bit string".into()))?;
                    Ok(RedundantRow::new(row, combo))
                })
                .collect()
        };
        // The stored rows already include the originals; assembling with
        // dedup folds them back onto the always-included unit combos.
        let x = unpack(&self.x)?;
        let z = unpack(&self.z)?;
        assemble_overcomplete(code, &x, &z, &AssembleOptions::default())
    }
}
