//! Pauli operators as GF(4) symbols and the trace inner product.
//!
//! A single-qubit Pauli is a bit pair `(x, z)`: `I = (0,0)`, `X = (1,0)`,
//! `Z = (0,1)`, `Y = (1,1)`. Under the usual GF(4) identification this is
//! `0 = I`, `omega = X`, `omega-bar = Z`, `1 = Y`; addition is the XOR of bit
//! pairs and the trace inner product
//!
//! ```text
//! <a, b> = a_x * b_z + a_z * b_x  (mod 2)
//! ```
//!
//! is 1 exactly when the two Paulis anticommute. Only addition and the trace
//! inner product are exposed; GF(4) multiplication is not needed by any of
//! the decoding algorithms here.

use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use crate::bits::BitVec;
use crate::{Error, Result};

/// A single-qubit Pauli operator (phase ignored).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// All non-identity Paulis, in the tie-break order used by the decoder's
    /// hard decision (GF(4) order 1, omega, omega-bar).
    pub const NONZERO: [Pauli; 3] = [Pauli::Y, Pauli::X, Pauli::Z];

    #[inline]
    pub fn from_xz(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (false, true) => Pauli::Z,
            (true, true) => Pauli::Y,
        }
    }

    #[inline]
    pub fn xz(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Z => (false, true),
            Pauli::Y => (true, true),
        }
    }

    #[inline]
    pub fn is_identity(self) -> bool {
        self == Pauli::I
    }

    /// Trace inner product over GF(4): true (1) iff `self` and `other`
    /// anticommute.
    #[inline]
    pub fn trace_inner_product(self, other: Pauli) -> bool {
        let (ax, az) = self.xz();
        let (bx, bz) = other.xz();
        (ax & bz) ^ (az & bx)
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Pauli> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

impl Add for Pauli {
    type Output = Pauli;

    /// GF(4) addition: componentwise XOR of the bit pairs.
    fn add(self, rhs: Pauli) -> Pauli {
        let (ax, az) = self.xz();
        let (bx, bz) = rhs.xz();
        Pauli::from_xz(ax ^ bx, az ^ bz)
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// An n-qubit Pauli operator stored as two bitmaps (X part, Z part).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliVector {
    x: BitVec,
    z: BitVec,
}

impl PauliVector {
    pub fn identity(n: usize) -> Self {
        PauliVector {
            x: BitVec::zeros(n),
            z: BitVec::zeros(n),
        }
    }

    pub fn from_parts(x: BitVec, z: BitVec) -> Result<Self> {
        if x.len() != z.len() {
            return Err(Error::Dimension(format!(
                "X part has {} qubits, Z part has {}",
                x.len(),
                z.len()
            )));
        }
        Ok(PauliVector { x, z })
    }

    /// Builds a pure-X (`omega`) row from a binary support vector.
    pub fn x_type(support: &BitVec) -> Self {
        PauliVector {
            x: support.clone(),
            z: BitVec::zeros(support.len()),
        }
    }

    /// Builds a pure-Z (`omega-bar`) row from a binary support vector.
    pub fn z_type(support: &BitVec) -> Self {
        PauliVector {
            x: BitVec::zeros(support.len()),
            z: support.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> Pauli {
        Pauli::from_xz(self.x.get(i), self.z.get(i))
    }

    pub fn set(&mut self, i: usize, p: Pauli) {
        let (x, z) = p.xz();
        self.x.set(i, x);
        self.z.set(i, z);
    }

    /// Number of non-identity entries.
    pub fn weight(&self) -> usize {
        self.x
            .words()
            .iter()
            .zip(self.z.words())
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    /// GF(4) addition (XOR of both bitmaps).
    pub fn add_assign(&mut self, other: &PauliVector) {
        self.x.xor_assign(&other.x);
        self.z.xor_assign(&other.z);
    }

    pub fn sum(&self, other: &PauliVector) -> Result<PauliVector> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "cannot add Pauli vectors of lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        let mut out = self.clone();
        out.add_assign(other);
        Ok(out)
    }

    /// XOR-accumulated trace inner product; true iff the operators
    /// anticommute.
    pub fn trace_inner_product(&self, other: &PauliVector) -> Result<bool> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "trace inner product of lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(self.trace_inner_product_unchecked(other))
    }

    /// Hot-path variant without the length check; lengths must agree.
    #[inline]
    pub fn trace_inner_product_unchecked(&self, other: &PauliVector) -> bool {
        self.x.dot(&other.z) ^ self.z.dot(&other.x)
    }

    pub fn commutes_with(&self, other: &PauliVector) -> Result<bool> {
        Ok(!self.trace_inner_product(other)?)
    }

    /// Indices (0-based) of non-identity entries with their Pauli labels.
    pub fn support(&self) -> Vec<(usize, Pauli)> {
        let mut out = Vec::new();
        let n = self.len();
        for (wi, (&wx, &wz)) in self.x.words().iter().zip(self.z.words()).enumerate() {
            let mut w = wx | wz;
            while w != 0 {
                let i = wi * 64 + w.trailing_zeros() as usize;
                if i < n {
                    out.push((i, self.get(i)));
                }
                w &= w - 1;
            }
        }
        out
    }

    pub fn to_binary_symplectic(&self) -> BinarySymplecticVector {
        BinarySymplecticVector {
            x: self.x.clone(),
            z: self.z.clone(),
        }
    }

    pub fn x_part(&self) -> &BitVec {
        &self.x
    }

    pub fn z_part(&self) -> &BitVec {
        &self.z
    }
}

impl fmt::Debug for PauliVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliVector({self})")
    }
}

impl fmt::Display for PauliVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            write!(f, "{}", self.get(i).to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliVector {
    type Err = Error;

    /// Parses a dense string (`IIYZX`, one character per qubit). Sparse
    /// strings need an explicit length and go through [`PauliVector::parse`];
    /// here a digit anywhere is an error.
    fn from_str(s: &str) -> Result<Self> {
        let mut paulis = Vec::with_capacity(s.len());
        for c in s.trim().chars() {
            let p = Pauli::from_char(c).ok_or_else(|| {
                Error::Parse(format!("invalid Pauli character '{c}' in \"{s}\""))
            })?;
            paulis.push(p);
        }
        let mut v = PauliVector::identity(paulis.len());
        for (i, p) in paulis.into_iter().enumerate() {
            v.set(i, p);
        }
        Ok(v)
    }
}

impl PauliVector {
    /// Parses `X1 Y7 Z12`-style sparse notation with 1-based qubit positions;
    /// whitespace between terms is optional. Falls back to dense parsing when
    /// no digits are present.
    pub fn parse(s: &str, n: usize) -> Result<PauliVector> {
        let s = s.trim();
        if !s.chars().any(|c| c.is_ascii_digit()) {
            let v: PauliVector = s.parse()?;
            if v.len() != n {
                return Err(Error::Dimension(format!(
                    "Pauli string has {} qubits, expected {n}",
                    v.len()
                )));
            }
            return Ok(v);
        }
        let mut v = PauliVector::identity(n);
        let mut chars = s.chars().peekable();
        while let Some(c) = chars.next() {
            if c.is_whitespace() {
                continue;
            }
            let p = Pauli::from_char(c)
                .ok_or_else(|| Error::Parse(format!("invalid Pauli character '{c}' in \"{s}\"")))?;
            let mut digits = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(*d);
                chars.next();
            }
            if digits.is_empty() {
                return Err(Error::Parse(format!("missing qubit index after '{c}' in \"{s}\"")));
            }
            let pos: usize = digits
                .parse()
                .map_err(|_| Error::Parse(format!("bad qubit index '{digits}'")))?;
            if pos == 0 || pos > n {
                return Err(Error::Dimension(format!(
                    "qubit index {pos} out of range 1..={n}"
                )));
            }
            v.set(pos - 1, v.get(pos - 1) + p);
        }
        Ok(v)
    }
}

/// The binary image `(x_1..x_n | z_1..z_n)` of an n-qubit Pauli.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BinarySymplecticVector {
    x: BitVec,
    z: BitVec,
}

impl BinarySymplecticVector {
    pub fn new(x: BitVec, z: BitVec) -> Result<Self> {
        if x.len() != z.len() {
            return Err(Error::Dimension(format!(
                "symplectic halves of lengths {} and {}",
                x.len(),
                z.len()
            )));
        }
        Ok(BinarySymplecticVector { x, z })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x_part(&self) -> &BitVec {
        &self.x
    }

    pub fn z_part(&self) -> &BitVec {
        &self.z
    }

    /// Symplectic product: `sum a_x b_z + sum a_z b_x (mod 2)`.
    pub fn symplectic_product(&self, other: &BinarySymplecticVector) -> Result<bool> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "symplectic product of lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(self.x.dot(&other.z) ^ self.z.dot(&other.x))
    }

    /// The GF(4) image, `p_i = x_i * omega + z_i * omega-bar`.
    pub fn to_pauli_vector(&self) -> PauliVector {
        PauliVector {
            x: self.x.clone(),
            z: self.z.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    #[test]
    fn trace_inner_product_table() {
        // self-products vanish
        for p in ALL {
            assert!(!p.trace_inner_product(p));
        }
        // <1, 1> = 0 (Y with Y), <omega, omega-bar> = 1 (X with Z),
        // <1, omega> = 1 (Y with X)
        assert!(!Pauli::Y.trace_inner_product(Pauli::Y));
        assert!(Pauli::X.trace_inner_product(Pauli::Z));
        assert!(Pauli::Y.trace_inner_product(Pauli::X));
        // identity commutes with everything
        for p in ALL {
            assert!(!Pauli::I.trace_inner_product(p));
        }
    }

    #[test]
    fn trace_inner_product_symmetric_and_bilinear() {
        for a in ALL {
            for b in ALL {
                assert_eq!(a.trace_inner_product(b), b.trace_inner_product(a));
                for c in ALL {
                    let lhs = (a + b).trace_inner_product(c);
                    let rhs = a.trace_inner_product(c) ^ b.trace_inner_product(c);
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn addition_is_xor_of_bit_pairs() {
        assert_eq!(Pauli::X + Pauli::Z, Pauli::Y);
        assert_eq!(Pauli::X + Pauli::Y, Pauli::Z);
        assert_eq!(Pauli::Z + Pauli::Z, Pauli::I);
        for p in ALL {
            assert_eq!(p + Pauli::I, p);
            assert_eq!(p + p, Pauli::I);
        }
    }

    #[test]
    fn vector_product_matches_toy_syndrome_bit() {
        // e = Y on qubit 7 of n = 7 against the X-type row 1010101
        let e = PauliVector::parse("Y7", 7).unwrap();
        let row = PauliVector::x_type(&BitVec::from_bit_str("1010101").unwrap());
        assert!(e.trace_inner_product(&row).unwrap());
        // the zero operator commutes with everything
        let id = PauliVector::identity(7);
        assert!(!id.trace_inner_product(&row).unwrap());
        // antisymmetry diagonal
        assert!(!e.trace_inner_product(&e).unwrap());
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let a = PauliVector::identity(3);
        let b = PauliVector::identity(4);
        assert!(a.trace_inner_product(&b).is_err());
    }

    #[test]
    fn binary_gf4_single_qubit() {
        // (x=1 | z=1) maps to Y
        let v = BinarySymplecticVector::new(
            BitVec::from_bit_str("1").unwrap(),
            BitVec::from_bit_str("1").unwrap(),
        )
        .unwrap();
        assert_eq!(v.to_pauli_vector().get(0), Pauli::Y);
        // (x=10 | z=01) maps to (omega, omega-bar) = (X, Z)
        let v = BinarySymplecticVector::new(
            BitVec::from_bit_str("10").unwrap(),
            BitVec::from_bit_str("01").unwrap(),
        )
        .unwrap();
        let p = v.to_pauli_vector();
        assert_eq!((p.get(0), p.get(1)), (Pauli::X, Pauli::Z));
    }

    #[test]
    fn symplectic_product_anticommuting_pair() {
        let n = 7;
        let mut x = BitVec::zeros(n);
        x.set(0, true);
        let a = BinarySymplecticVector::new(x, BitVec::zeros(n)).unwrap();
        let mut z = BitVec::zeros(n);
        z.set(0, true);
        let b = BinarySymplecticVector::new(BitVec::zeros(n), z).unwrap();
        assert!(a.symplectic_product(&b).unwrap());
        assert!(!a.symplectic_product(&a).unwrap());
    }

    /// Exhaustive consistency of the binary symplectic product with the GF(4)
    /// trace inner product for all vector pairs up to n = 4.
    #[test]
    fn symplectic_matches_gf4_exhaustively() {
        for n in 1..=4usize {
            for a_bits in 0u32..(1 << (2 * n)) {
                for b_bits in 0u32..(1 << (2 * n)) {
                    let unpack = |bits: u32| {
                        let mut x = BitVec::zeros(n);
                        let mut z = BitVec::zeros(n);
                        for i in 0..n {
                            x.set(i, (bits >> i) & 1 == 1);
                            z.set(i, (bits >> (n + i)) & 1 == 1);
                        }
                        BinarySymplecticVector::new(x, z).unwrap()
                    };
                    let a = unpack(a_bits);
                    let b = unpack(b_bits);
                    let lhs = a.symplectic_product(&b).unwrap();
                    let rhs = a
                        .to_pauli_vector()
                        .trace_inner_product(&b.to_pauli_vector())
                        .unwrap();
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn parse_dense_and_sparse() {
        let dense: PauliVector = "IIYIYYY".parse().unwrap();
        let sparse = PauliVector::parse("Y3Y5Y6Y7", 7).unwrap();
        assert_eq!(dense, sparse);
        assert_eq!(sparse.to_string(), "IIYIYYY");
        assert_eq!(sparse.weight(), 4);
        assert!(PauliVector::parse("Y8", 7).is_err());
        assert!(PauliVector::parse("Q1", 7).is_err());
    }

    proptest! {
        #[test]
        fn binary_roundtrip(xs in proptest::collection::vec(any::<bool>(), 1..120),
                            zs_seed in any::<u64>()) {
            let n = xs.len();
            let mut zs = Vec::with_capacity(n);
            let mut s = zs_seed;
            for _ in 0..n {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                zs.push(s >> 63 == 1);
            }
            let v = BinarySymplecticVector::new(
                BitVec::from_bools(&xs), BitVec::from_bools(&zs)).unwrap();
            let back = v.to_pauli_vector().to_binary_symplectic();
            prop_assert_eq!(v, back);
        }

        #[test]
        fn vector_bilinearity(n in 1usize..40, seed in any::<u64>()) {
            let mut s = seed;
            let mut next = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(99991); s };
            let rand_pv = |s: &mut dyn FnMut() -> u64| {
                let mut v = PauliVector::identity(n);
                for i in 0..n {
                    let r = s() % 4;
                    v.set(i, [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][r as usize]);
                }
                v
            };
            let a = rand_pv(&mut next);
            let b = rand_pv(&mut next);
            let c = rand_pv(&mut next);
            let ab = a.sum(&b).unwrap();
            let lhs = ab.trace_inner_product(&c).unwrap();
            let rhs = a.trace_inner_product(&c).unwrap() ^ b.trace_inner_product(&c).unwrap();
            prop_assert_eq!(lhs, rhs);
            // symmetry and zero diagonal
            prop_assert_eq!(a.trace_inner_product(&b).unwrap(), b.trace_inner_product(&a).unwrap());
            prop_assert!(!a.trace_inner_product(&a).unwrap());
        }
    }
}
