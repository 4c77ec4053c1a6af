//! CSS / generalized-bicycle stabilizer code construction, check matrices,
//! syndromes, and the logical-equivalence test.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bits::{BitMatrix, BitVec};
use crate::gf4::PauliVector;
use crate::{Error, Result};

/// A CSS stabilizer code given by its X-type and Z-type binary check
/// matrices. `hx * hz^T = 0` over GF(2) is required for the checks to
/// commute.
#[derive(Clone, Debug)]
pub struct CssCode {
    pub name: String,
    pub hx: BitMatrix,
    pub hz: BitMatrix,
    /// Declared minimum distance, metadata only.
    pub d: Option<usize>,
}

impl CssCode {
    pub fn new(name: impl Into<String>, hx: BitMatrix, hz: BitMatrix, d: Option<usize>) -> Result<Self> {
        if hx.cols() != hz.cols() {
            return Err(Error::Dimension(format!(
                "hx has {} columns, hz has {}",
                hx.cols(),
                hz.cols()
            )));
        }
        Ok(CssCode {
            name: name.into(),
            hx,
            hz,
            d,
        })
    }

    pub fn qubits(&self) -> usize {
        self.hx.cols()
    }

    /// Number of logical qubits, `n - rank(hx) - rank(hz)`.
    pub fn logical_qubits(&self) -> usize {
        self.qubits() - self.hx.rank() - self.hz.rank()
    }

    pub fn check_count(&self) -> usize {
        self.hx.rows() + self.hz.rows()
    }

    /// The `[[7,1,3]]` quantum BCH code: both sides are the parity-check
    /// matrix of the `[7,4,3]` BCH (Hamming) code.
    pub fn bch_7_1_3() -> CssCode {
        let h = BitMatrix::from_int_rows(
            &[
                vec![1, 0, 1, 0, 1, 0, 1],
                vec![0, 1, 1, 0, 0, 1, 1],
                vec![0, 0, 0, 1, 1, 1, 1],
            ],
            7,
        )
        .expect("static matrix");
        CssCode::new("bch713", h.clone(), h, Some(3)).expect("static code")
    }

    /// Generalized bicycle construction: `hx = (A | B)`, `hz = (B^T | A^T)`
    /// with circulant `A`, `B` generated by the given coefficient vectors.
    /// Circulants commute, so the CSS criterion holds by construction.
    pub fn generalized_bicycle(
        name: impl Into<String>,
        a_coeffs: &BitVec,
        b_coeffs: &BitVec,
    ) -> Result<CssCode> {
        let half_n = a_coeffs.len();
        if half_n == 0 {
            return Err(Error::InvalidParameter("half_n must be at least 1".into()));
        }
        if b_coeffs.len() != half_n {
            return Err(Error::Dimension(format!(
                "circulant generators of lengths {} and {}",
                half_n,
                b_coeffs.len()
            )));
        }
        let n = 2 * half_n;
        let circulant_row = |coeffs: &BitVec, shift: usize| {
            let mut row = BitVec::zeros(half_n);
            for e in coeffs.support() {
                row.set((e + shift) % half_n, true);
            }
            row
        };
        let mut hx = BitMatrix::new(n);
        let mut hz = BitMatrix::new(n);
        for i in 0..half_n {
            // hx row i: (row i of A | row i of B)
            let mut row = BitVec::zeros(n);
            for c in circulant_row(a_coeffs, i).support() {
                row.set(c, true);
            }
            for c in circulant_row(b_coeffs, i).support() {
                row.set(half_n + c, true);
            }
            hx.push_row(row);
            // hz row i: (row i of B^T | row i of A^T); the transpose of a
            // circulant is the circulant of the reversed generator.
            let mut row = BitVec::zeros(n);
            for e in b_coeffs.support() {
                row.set((half_n + i - e) % half_n, true);
            }
            for e in a_coeffs.support() {
                row.set(half_n + (half_n + i - e) % half_n, true);
            }
            hz.push_row(row);
        }
        CssCode::new(name, hx, hz, None)
    }

    /// Keeps only the first `m / 2` checks of each side (`m` even). The GB
    /// circulant rows are linearly dependent, so dropping trailing rows
    /// preserves the stabilizer group as long as `m / 2` is at least the
    /// per-side rank.
    pub fn select_rows(&self, m: usize) -> Result<CssCode> {
        if !m.is_multiple_of(2) || m / 2 > self.hx.rows() || m / 2 > self.hz.rows() {
            return Err(Error::InvalidParameter(format!(
                "cannot select {m} rows from a {}+{} check matrix",
                self.hx.rows(),
                self.hz.rows()
            )));
        }
        let take = |mat: &BitMatrix| {
            let mut out = BitMatrix::new(mat.cols());
            for i in 0..m / 2 {
                out.push_row(mat.row(i).clone());
            }
            out
        };
        CssCode::new(self.name.clone(), take(&self.hx), take(&self.hz), self.d)
    }

    /// Keeps explicitly listed rows (0-based) of each side.
    pub fn select_explicit(&self, x_rows: &[usize], z_rows: &[usize]) -> Result<CssCode> {
        let take = |mat: &BitMatrix, idx: &[usize]| -> Result<BitMatrix> {
            let mut out = BitMatrix::new(mat.cols());
            for &i in idx {
                if i >= mat.rows() {
                    return Err(Error::InvalidParameter(format!(
                        "row index {i} out of range 0..{}",
                        mat.rows()
                    )));
                }
                out.push_row(mat.row(i).clone());
            }
            Ok(out)
        };
        CssCode::new(
            self.name.clone(),
            take(&self.hx, x_rows)?,
            take(&self.hz, z_rows)?,
            self.d,
        )
    }

    /// Checks `hx * hz^T = 0` over GF(2), reporting every offending row pair.
    pub fn validate(&self) -> CssValidation {
        let mut violations = Vec::new();
        for i in 0..self.hx.rows() {
            for j in 0..self.hz.rows() {
                if self.hx.row(i).dot(self.hz.row(j)) {
                    violations.push((i, j));
                }
            }
        }
        CssValidation { violations }
    }

    /// The quaternary check matrix: all X-type rows (entries in `{0, omega}`)
    /// followed by all Z-type rows (entries in `{0, omega-bar}`).
    pub fn to_quaternary(&self) -> Result<CheckMatrix> {
        let validation = self.validate();
        if !validation.is_valid() {
            return Err(Error::InvalidCode(format!(
                "CSS criterion fails: {validation}"
            )));
        }
        let mut rows = Vec::with_capacity(self.check_count());
        for row in self.hx.iter_rows() {
            rows.push(PauliVector::x_type(row));
        }
        for row in self.hz.iter_rows() {
            rows.push(PauliVector::z_type(row));
        }
        CheckMatrix::new(rows, self.qubits())
    }

    /// Stable content digest used to bind derived artifacts (overcomplete
    /// matrices, trained weights) to the code they came from.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.qubits().to_le_bytes());
        for row in self.hx.iter_rows().chain(self.hz.iter_rows()) {
            hasher.update(row.to_bit_string().as_bytes());
            hasher.update(*b";");
        }
        hex_string(&hasher.finalize())
    }
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Result of the CSS criterion check.
#[derive(Clone, Debug)]
pub struct CssValidation {
    /// Pairs `(hx row, hz row)` with odd overlap.
    pub violations: Vec<(usize, usize)>,
}

impl CssValidation {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for CssValidation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            write!(f, "CSS criterion holds")
        } else {
            write!(f, "{} anticommuting row pair(s):", self.violations.len())?;
            for (i, j) in self.violations.iter().take(8) {
                write!(f, " (hx {i}, hz {j})")?;
            }
            if self.violations.len() > 8 {
                write!(f, " ...")?;
            }
            Ok(())
        }
    }
}

/// An m x n check matrix over GF(4); rows are stabilizer generators and must
/// mutually commute.
#[derive(Clone, Debug)]
pub struct CheckMatrix {
    rows: Vec<PauliVector>,
    n: usize,
}

impl CheckMatrix {
    pub fn new(rows: Vec<PauliVector>, n: usize) -> Result<Self> {
        for row in &rows {
            if row.len() != n {
                return Err(Error::Dimension(format!(
                    "check row of length {} in a {n}-qubit matrix",
                    row.len()
                )));
            }
        }
        for i in 0..rows.len() {
            for j in (i + 1)..rows.len() {
                if rows[i].trace_inner_product_unchecked(&rows[j]) {
                    return Err(Error::InvalidCode(format!(
                        "check rows {i} and {j} anticommute"
                    )));
                }
            }
        }
        Ok(CheckMatrix { rows, n })
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[PauliVector] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// Binary image: row i maps to `(x part | z part)`, a 2n-bit vector.
    pub fn binary_image(&self) -> BitMatrix {
        let mut out = BitMatrix::new(2 * self.n);
        for row in &self.rows {
            let mut bits = BitVec::zeros(2 * self.n);
            for i in row.x_part().support() {
                bits.set(i, true);
            }
            for i in row.z_part().support() {
                bits.set(self.n + i, true);
            }
            out.push_row(bits);
        }
        out
    }

    /// GF(2) rank of the binary image.
    pub fn binary_rank(&self) -> usize {
        self.binary_image().rank()
    }

    /// Measures the syndrome of `error`: bit i is the trace inner product
    /// with row i.
    pub fn syndrome(&self, error: &PauliVector) -> Result<Syndrome> {
        if error.len() != self.n {
            return Err(Error::Dimension(format!(
                "error on {} qubits against a {}-qubit check matrix",
                error.len(),
                self.n
            )));
        }
        let mut bits = BitVec::zeros(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            if row.trace_inner_product_unchecked(error) {
                bits.set(i, true);
            }
        }
        Ok(Syndrome { bits })
    }

    /// Generators of the normalizer: a GF(2) basis of all Paulis commuting
    /// with every check. Found as the nullspace of the binary image with the
    /// X/Z halves swapped (the symplectic form in matrix form).
    pub fn normalizer(&self) -> NormalizerMatrix {
        let mut swapped = BitMatrix::new(2 * self.n);
        for row in &self.rows {
            let mut bits = BitVec::zeros(2 * self.n);
            for i in row.z_part().support() {
                bits.set(i, true);
            }
            for i in row.x_part().support() {
                bits.set(self.n + i, true);
            }
            swapped.push_row(bits);
        }
        let kernel = swapped.nullspace();
        let effective_rank = 2 * self.n - kernel.len();
        let rows = kernel
            .into_iter()
            .map(|v| {
                let mut x = BitVec::zeros(self.n);
                let mut z = BitVec::zeros(self.n);
                for i in v.support() {
                    if i < self.n {
                        x.set(i, true);
                    } else {
                        z.set(i - self.n, true);
                    }
                }
                PauliVector::from_parts(x, z).expect("equal halves")
            })
            .collect();
        NormalizerMatrix {
            rows,
            effective_rank,
        }
    }

    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.n.to_le_bytes());
        for row in &self.rows {
            hasher.update(row.to_string().as_bytes());
            hasher.update(*b";");
        }
        hex_string(&hasher.finalize())
    }
}

/// The `2n - rank` generators of the normalizer of a check matrix.
#[derive(Clone, Debug)]
pub struct NormalizerMatrix {
    rows: Vec<PauliVector>,
    /// GF(2) rank of the binary image of the check matrix this was built
    /// from; differs from the declared row count for redundant check sets.
    pub effective_rank: usize,
}

impl NormalizerMatrix {
    pub fn rows(&self) -> &[PauliVector] {
        &self.rows
    }

    pub fn generator_count(&self) -> usize {
        self.rows.len()
    }

    /// Decoding success up to degeneracy: true iff `e + e_hat` commutes with
    /// every normalizer generator, i.e. lies in the stabilizer row space.
    pub fn logically_equivalent(&self, e: &PauliVector, e_hat: &PauliVector) -> Result<bool> {
        let diff = e.sum(e_hat)?;
        for row in &self.rows {
            if row.trace_inner_product(&diff)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// A measured syndrome: one bit per check row.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Syndrome {
    bits: BitVec,
}

impl Syndrome {
    pub fn new(bits: BitVec) -> Self {
        Syndrome { bits }
    }

    pub fn zeros(m: usize) -> Self {
        Syndrome {
            bits: BitVec::zeros(m),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits.get(i)
    }

    pub fn bits(&self) -> &BitVec {
        &self.bits
    }

    pub fn is_zero(&self) -> bool {
        self.bits.is_zero()
    }

    /// Parses `0/1` strings or hex strings with an `0x` prefix (big-endian
    /// nibbles, left-padded to `m` bits).
    pub fn parse(s: &str, m: usize) -> Result<Syndrome> {
        let s = s.trim();
        if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
            let mut bits = BitVec::zeros(m);
            let total = hex.len() * 4;
            if total < m {
                return Err(Error::Parse(format!(
                    "hex syndrome '{s}' has {total} bits, expected {m}"
                )));
            }
            for (pos, c) in hex.chars().enumerate() {
                let v = c
                    .to_digit(16)
                    .ok_or_else(|| Error::Parse(format!("bad hex digit '{c}'")))?;
                for k in 0..4 {
                    let bit_index = pos * 4 + k;
                    let bit = (v >> (3 - k)) & 1 == 1;
                    // skip left padding
                    if bit_index < total - m {
                        if bit {
                            return Err(Error::Parse(format!(
                                "hex syndrome '{s}' does not fit in {m} bits"
                            )));
                        }
                        continue;
                    }
                    bits.set(bit_index - (total - m), bit);
                }
            }
            return Ok(Syndrome { bits });
        }
        let bits = BitVec::from_bit_str(s)
            .ok_or_else(|| Error::Parse(format!("syndrome '{s}' is not a 0/1 string")))?;
        if bits.len() != m {
            return Err(Error::Dimension(format!(
                "syndrome has {} bits, expected {m}",
                bits.len()
            )));
        }
        Ok(Syndrome { bits })
    }
}

impl fmt::Display for Syndrome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bits.to_bit_string())
    }
}

/// On-disk code definition.
///
/// ```json
/// { "name": "bch713", "type": "css", "hx": [[1,0,...]], "hz": [[...]], "d": 3 }
/// { "name": "gb48", "type": "gb", "half_n": 24, "a_coeffs": [0,1,5], "b_coeffs": [0,2,7], "m": 42 }
/// { "name": "s", "type": "explicit", "hx": [[...]], "hz": [[...]] }
/// ```
///
/// For `gb`, `a_coeffs`/`b_coeffs` list the exponents with coefficient 1 and
/// `m` (or `rows_selected`) optionally restricts the check set; the default
/// keeps all `2 * half_n` rows. For `explicit`, `hx` and `hz` are the X and Z
/// halves of the same generator list (equal row counts) and only the
/// symplectic criterion is enforced.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CodeFile {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: CodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_coeffs: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_coeffs: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows_selected: Option<RowSelection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hx: Option<Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hz: Option<Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeKind {
    Css,
    Gb,
    Explicit,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RowSelection {
    pub x: Vec<usize>,
    pub z: Vec<usize>,
}

impl CodeFile {
    pub fn load(path: &Path) -> Result<CodeFile> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("reading {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("parsing {}: {e}", path.display())))
    }

    pub fn build(&self) -> Result<BuiltCode> {
        match self.kind {
            CodeKind::Gb => {
                let half_n = self
                    .half_n
                    .ok_or_else(|| Error::Parse("gb code needs half_n".into()))?;
                let to_vec = |coeffs: &Option<Vec<usize>>, which: &str| -> Result<BitVec> {
                    let exps = coeffs
                        .as_ref()
                        .ok_or_else(|| Error::Parse(format!("gb code needs {which}")))?;
                    let mut v = BitVec::zeros(half_n);
                    for &e in exps {
                        if e >= half_n {
                            return Err(Error::InvalidParameter(format!(
                                "{which} exponent {e} out of range 0..{half_n}"
                            )));
                        }
                        v.set(e, true);
                    }
                    Ok(v)
                };
                let a = to_vec(&self.a_coeffs, "a_coeffs")?;
                let b = to_vec(&self.b_coeffs, "b_coeffs")?;
                let full = CssCode::generalized_bicycle(self.name.clone(), &a, &b)?;
                let mut code = match (&self.rows_selected, self.m) {
                    (Some(sel), _) => full.select_explicit(&sel.x, &sel.z)?,
                    (None, Some(m)) => full.select_rows(m)?,
                    (None, None) => full,
                };
                code.d = self.d;
                Ok(BuiltCode {
                    code,
                    is_css: true,
                })
            }
            CodeKind::Css | CodeKind::Explicit => {
                let parse = |rows: &Option<Vec<Vec<u8>>>, which: &str| -> Result<BitMatrix> {
                    let rows = rows
                        .as_ref()
                        .ok_or_else(|| Error::Parse(format!("code needs {which}")))?;
                    let cols = rows.first().map(|r| r.len()).unwrap_or(0);
                    BitMatrix::from_int_rows(rows, cols)
                        .ok_or_else(|| Error::Parse(format!("{which} is not a 0/1 matrix")))
                };
                let mut hx = parse(&self.hx, "hx")?;
                let mut hz = parse(&self.hz, "hz")?;
                // a row-less side inherits the qubit count of the other
                if hx.rows() == 0 && hz.rows() > 0 {
                    hx = BitMatrix::new(hz.cols());
                }
                if hz.rows() == 0 && hx.rows() > 0 {
                    hz = BitMatrix::new(hx.cols());
                }
                if self.kind == CodeKind::Explicit && hx.rows() != hz.rows() {
                    return Err(Error::Parse(
                        "explicit codes pair hx/hz rows; row counts must match".into(),
                    ));
                }
                let code = CssCode::new(self.name.clone(), hx, hz, self.d)?;
                Ok(BuiltCode {
                    code,
                    is_css: self.kind == CodeKind::Css,
                })
            }
        }
    }
}

/// A code built from a [`CodeFile`]. Explicit (possibly non-CSS) generator
/// lists share the `CssCode` container but map to GF(4) row-by-row rather
/// than side-by-side.
#[derive(Clone, Debug)]
pub struct BuiltCode {
    pub code: CssCode,
    pub is_css: bool,
}

impl BuiltCode {
    pub fn check_matrix(&self) -> Result<CheckMatrix> {
        if self.is_css {
            self.code.to_quaternary()
        } else {
            let n = self.code.qubits();
            let rows = self
                .code
                .hx
                .iter_rows()
                .zip(self.code.hz.iter_rows())
                .map(|(x, z)| PauliVector::from_parts(x.clone(), z.clone()))
                .collect::<Result<Vec<_>>>()?;
            CheckMatrix::new(rows, n)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf4::Pauli;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn toy() -> CssCode {
        CssCode::bch_7_1_3()
    }

    #[test]
    fn toy_code_parameters() {
        let code = toy();
        assert_eq!(code.qubits(), 7);
        assert_eq!(code.logical_qubits(), 1);
        assert!(code.validate().is_valid());
        assert_eq!(code.digest().len(), 64);
    }

    #[test]
    fn css_violation_is_reported() {
        // hx = (1 0), hz = (1 0): single anticommuting pair
        let hx = BitMatrix::from_int_rows(&[vec![1, 0]], 2).unwrap();
        let hz = BitMatrix::from_int_rows(&[vec![1, 0]], 2).unwrap();
        let code = CssCode::new("bad", hx, hz, None).unwrap();
        let report = code.validate();
        assert!(!report.is_valid());
        assert_eq!(report.violations, vec![(0, 0)]);
        assert!(code.to_quaternary().is_err());
        // hx = hz = (1 1): even overlap, passes
        let h = BitMatrix::from_int_rows(&[vec![1, 1]], 2).unwrap();
        let code = CssCode::new("ok", h.clone(), h, None).unwrap();
        assert!(code.validate().is_valid());
    }

    #[test]
    fn quaternary_layout_of_toy() {
        let s = toy().to_quaternary().unwrap();
        assert_eq!(s.row_count(), 6);
        assert_eq!(s.qubits(), 7);
        for (i, row) in s.rows().iter().enumerate() {
            for (_, p) in row.support() {
                if i < 3 {
                    assert_eq!(p, Pauli::X);
                } else {
                    assert_eq!(p, Pauli::Z);
                }
            }
        }
        // pure-X matrix when hz is empty
        let code = CssCode::new(
            "xonly",
            toy().hx.clone(),
            BitMatrix::new(7),
            None,
        )
        .unwrap();
        let s = code.to_quaternary().unwrap();
        assert_eq!(s.row_count(), 3);
        assert!(s
            .rows()
            .iter()
            .all(|r| r.support().iter().all(|&(_, p)| p == Pauli::X)));
    }

    #[test]
    fn toy_syndrome_of_y7_is_all_ones() {
        let s = toy().to_quaternary().unwrap();
        let e = PauliVector::parse("Y7", 7).unwrap();
        let z = s.syndrome(&e).unwrap();
        assert_eq!(z.to_string(), "111111");
        // zero error, zero syndrome
        assert!(s.syndrome(&PauliVector::identity(7)).unwrap().is_zero());
    }

    #[test]
    fn syndrome_is_linear_in_the_error() {
        let s = toy().to_quaternary().unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..50 {
            let rand_pv = |rng: &mut StdRng| {
                let mut v = PauliVector::identity(7);
                for i in 0..7 {
                    v.set(i, [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][rng.gen_range(0..4)]);
                }
                v
            };
            let e1 = rand_pv(&mut rng);
            let e2 = rand_pv(&mut rng);
            let z1 = s.syndrome(&e1).unwrap();
            let z2 = s.syndrome(&e2).unwrap();
            let zsum = s.syndrome(&e1.sum(&e2).unwrap()).unwrap();
            let mut xor = z1.bits().clone();
            xor.xor_assign(z2.bits());
            assert_eq!(zsum.bits(), &xor);
        }
    }

    #[test]
    fn stabilizer_row_sums_have_zero_syndrome() {
        let s = toy().to_quaternary().unwrap();
        let mut rng = StdRng::seed_from_u64(99);
        for _ in 0..30 {
            let mut e = PauliVector::identity(7);
            for row in s.rows() {
                if rng.gen::<bool>() {
                    e.add_assign(row);
                }
            }
            assert!(s.syndrome(&e).unwrap().is_zero());
        }
    }

    #[test]
    fn normalizer_of_toy_has_8_commuting_generators() {
        let s = toy().to_quaternary().unwrap();
        let norm = s.normalizer();
        assert_eq!(norm.generator_count(), 8); // 2n - m = 14 - 6
        assert_eq!(norm.effective_rank, 6);
        for g in norm.rows() {
            for row in s.rows() {
                assert!(!g.trace_inner_product(row).unwrap());
            }
        }
    }

    #[test]
    fn normalizer_of_single_x_check() {
        let mut support = BitVec::zeros(1);
        support.set(0, true);
        let s = CheckMatrix::new(vec![PauliVector::x_type(&support)], 1).unwrap();
        let norm = s.normalizer();
        assert_eq!(norm.generator_count(), 1);
        assert_eq!(norm.rows()[0].get(0), Pauli::X);
    }

    #[test]
    fn unflagged_toy_pair_is_not_equivalent() {
        let s = toy().to_quaternary().unwrap();
        let norm = s.normalizer();
        let e = PauliVector::parse("Y7", 7).unwrap();
        let e_hat = PauliVector::parse("Y3Y5Y6Y7", 7).unwrap();
        // same syndrome...
        assert_eq!(s.syndrome(&e).unwrap(), s.syndrome(&e_hat).unwrap());
        // ...but not the same logical coset
        assert!(!norm.logically_equivalent(&e, &e_hat).unwrap());
        assert!(norm.logically_equivalent(&e, &e).unwrap());
    }

    #[test]
    fn stabilizer_offsets_stay_equivalent() {
        let s = toy().to_quaternary().unwrap();
        let norm = s.normalizer();
        let e = PauliVector::parse("Y7", 7).unwrap();
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..40 {
            let mut e_hat = e.clone();
            for row in s.rows() {
                if rng.gen::<bool>() {
                    e_hat.add_assign(row);
                }
            }
            assert!(norm.logically_equivalent(&e, &e_hat).unwrap());
        }
    }

    #[test]
    fn gb_identity_generators() {
        let mut a = BitVec::zeros(4);
        a.set(0, true);
        let code = CssCode::generalized_bicycle("gb-id", &a.clone(), &a).unwrap();
        assert!(code.validate().is_valid());
        // hx = (I | I): row i has ones at i and half_n + i
        for i in 0..4 {
            assert_eq!(code.hx.row(i).support(), vec![i, 4 + i]);
            assert_eq!(code.hz.row(i).support(), vec![i, 4 + i]);
        }
    }

    #[test]
    fn gb_random_pairs_pass_css() {
        let mut rng = StdRng::seed_from_u64(20240601);
        for _ in 0..100 {
            let half_n = 8;
            let mut a = BitVec::zeros(half_n);
            let mut b = BitVec::zeros(half_n);
            for i in 0..half_n {
                a.set(i, rng.gen::<bool>());
                b.set(i, rng.gen::<bool>());
            }
            let code = CssCode::generalized_bicycle("gb-rand", &a, &b).unwrap();
            assert!(code.validate().is_valid());
            assert!(code.to_quaternary().is_ok());
        }
    }

    /// Exhaustive CSS criterion over all generator pairs with weight <= 3
    /// for half_n <= 5.
    #[test]
    fn gb_exhaustive_low_weight_generators() {
        for half_n in 1..=5usize {
            for a_bits in 0u32..(1 << half_n) {
                if a_bits.count_ones() > 3 {
                    continue;
                }
                for b_bits in 0u32..(1 << half_n) {
                    if b_bits.count_ones() > 3 {
                        continue;
                    }
                    let mut a = BitVec::zeros(half_n);
                    let mut b = BitVec::zeros(half_n);
                    for i in 0..half_n {
                        a.set(i, (a_bits >> i) & 1 == 1);
                        b.set(i, (b_bits >> i) & 1 == 1);
                    }
                    let code = CssCode::generalized_bicycle("gb", &a, &b).unwrap();
                    assert!(code.validate().is_valid(), "a={a_bits:b} b={b_bits:b}");
                }
            }
        }
    }

    #[test]
    fn gb_row_selection() {
        let mut a = BitVec::zeros(6);
        a.set(0, true);
        a.set(1, true);
        let mut b = BitVec::zeros(6);
        b.set(0, true);
        b.set(3, true);
        let full = CssCode::generalized_bicycle("gb12", &a, &b).unwrap();
        assert_eq!(full.check_count(), 12);
        let selected = full.select_rows(10).unwrap();
        assert_eq!(selected.check_count(), 10);
        assert_eq!(selected.hx.row(0), full.hx.row(0));
        assert!(selected.validate().is_valid());
        assert!(full.select_rows(14).is_err());
    }

    #[test]
    fn code_file_roundtrip() {
        let file = CodeFile {
            name: "bch713".into(),
            kind: CodeKind::Css,
            half_n: None,
            a_coeffs: None,
            b_coeffs: None,
            m: None,
            rows_selected: None,
            hx: Some(vec![
                vec![1, 0, 1, 0, 1, 0, 1],
                vec![0, 1, 1, 0, 0, 1, 1],
                vec![0, 0, 0, 1, 1, 1, 1],
            ]),
            hz: Some(vec![
                vec![1, 0, 1, 0, 1, 0, 1],
                vec![0, 1, 1, 0, 0, 1, 1],
                vec![0, 0, 0, 1, 1, 1, 1],
            ]),
            d: Some(3),
        };
        let json = serde_json::to_string(&file).unwrap();
        let parsed: CodeFile = serde_json::from_str(&json).unwrap();
        let built = parsed.build().unwrap();
        assert_eq!(built.code.digest(), CssCode::bch_7_1_3().digest());
    }

    #[test]
    fn gb_code_file_builds() {
        let json = r#"{
            "name": "gb16", "type": "gb", "half_n": 8,
            "a_coeffs": [0, 1, 3], "b_coeffs": [0, 2, 5]
        }"#;
        let file: CodeFile = serde_json::from_str(json).unwrap();
        let built = file.build().unwrap();
        assert_eq!(built.code.qubits(), 16);
        assert_eq!(built.code.check_count(), 16);
        assert!(built.code.validate().is_valid());
    }

    #[test]
    fn explicit_code_file_allows_mixed_generators() {
        // single generator Y Y: hx = (1 1), hz = (1 1); commutes with itself
        let json = r#"{
            "name": "yy", "type": "explicit",
            "hx": [[1, 1]], "hz": [[1, 1]]
        }"#;
        let file: CodeFile = serde_json::from_str(json).unwrap();
        let built = file.build().unwrap();
        let s = built.check_matrix().unwrap();
        assert_eq!(s.rows()[0].to_string(), "YY");
    }

    #[test]
    fn pure_x_code_file_builds() {
        let json = r#"{
            "name": "xonly", "type": "css",
            "hx": [[1, 1, 0], [0, 1, 1]], "hz": []
        }"#;
        let file: CodeFile = serde_json::from_str(json).unwrap();
        let built = file.build().unwrap();
        assert_eq!(built.code.qubits(), 3);
        let s = built.check_matrix().unwrap();
        assert_eq!(s.row_count(), 2);
        assert!(s
            .rows()
            .iter()
            .all(|r| r.support().iter().all(|&(_, p)| p == Pauli::X)));
    }

    #[test]
    fn syndrome_parsing() {
        let z = Syndrome::parse("111111", 6).unwrap();
        assert_eq!(z.to_string(), "111111");
        let z = Syndrome::parse("0x3f", 6).unwrap();
        assert_eq!(z.to_string(), "111111");
        let z = Syndrome::parse("0x2a", 6).unwrap();
        assert_eq!(z.to_string(), "101010");
        assert!(Syndrome::parse("11", 6).is_err());
        assert!(Syndrome::parse("0xff", 6).is_err());
    }
}
