//! Signed Pauli strings in the symplectic bit-pair encoding and their
//! Heisenberg-picture conjugation through Clifford gates.
//!
//! Qubit `q` carries the letter given by `(x_q, z_q)`:
//! `(0,0) = I`, `(1,0) = X`, `(1,1) = Y`, `(0,1) = Z`.
//! The sign is kept as a single bit; conjugating a Hermitian Pauli by a
//! Clifford always yields a Hermitian Pauli, so `±i` never appears.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PauliError {
    #[error("qubit index {qubit} out of range for {n} qubits")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("two-qubit gate {gate} acts twice on qubit {qubit}")]
    RepeatedQubit { gate: &'static str, qubit: usize },
    #[error("qubit count mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid Pauli character {found:?} at index {position}")]
    InvalidCharacter { position: usize, found: char },
    #[error("Pauli string has no qubits")]
    Empty,
    #[error("unknown gate name {0:?}")]
    UnknownGate(String),
    #[error("gate {gate} takes {expected} qubit(s), found {found}")]
    Arity {
        gate: &'static str,
        expected: usize,
        found: usize,
    },
}

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliAxis {
    I,
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 4] = [PauliAxis::I, PauliAxis::X, PauliAxis::Y, PauliAxis::Z];

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => PauliAxis::I,
            (true, false) => PauliAxis::X,
            (true, true) => PauliAxis::Y,
            (false, true) => PauliAxis::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            PauliAxis::I => (false, false),
            PauliAxis::X => (true, false),
            PauliAxis::Y => (true, true),
            PauliAxis::Z => (false, true),
        }
    }

    /// Base-4 digit used by the dense oracle (`I=0, X=1, Y=2, Z=3`).
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i & 3]
    }

    pub fn letter(self) -> char {
        match self {
            PauliAxis::I => 'I',
            PauliAxis::X => 'X',
            PauliAxis::Y => 'Y',
            PauliAxis::Z => 'Z',
        }
    }
}

impl fmt::Display for PauliAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

const WORD: usize = 64;

fn words_for(n: usize) -> usize {
    n.div_ceil(WORD)
}

/// An `n`-qubit Pauli operator with a `±1` sign.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    negative: bool,
}

impl PauliString {
    /// The identity on `n` qubits.
    ///
    /// # Panics
    /// Panics if `n == 0`.
    pub fn identity(n: usize) -> Self {
        assert!(n >= 1, "Pauli strings need at least one qubit");
        Self {
            n,
            x: vec![0; words_for(n)],
            z: vec![0; words_for(n)],
            negative: false,
        }
    }

    pub fn from_axes(axes: &[PauliAxis]) -> Result<Self, PauliError> {
        if axes.is_empty() {
            return Err(PauliError::Empty);
        }
        let mut p = Self::identity(axes.len());
        for (q, &a) in axes.iter().enumerate() {
            p.set_axis(q, a);
        }
        Ok(p)
    }

    /// A weight-one or weight-two string such as `Z_i Z_j`.
    pub fn with_letters(n: usize, letters: &[(usize, PauliAxis)]) -> Result<Self, PauliError> {
        let mut p = Self::identity(n);
        for &(q, a) in letters {
            if q >= n {
                return Err(PauliError::QubitOutOfRange { qubit: q, n });
            }
            p.set_axis(q, a);
        }
        Ok(p)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    /// `+1.0` or `-1.0`.
    pub fn sign(&self) -> f64 {
        if self.negative {
            -1.0
        } else {
            1.0
        }
    }

    pub fn negate(&mut self) {
        self.negative = !self.negative;
    }

    pub fn set_negative(&mut self, negative: bool) {
        self.negative = negative;
    }

    #[inline]
    fn bit(words: &[u64], q: usize) -> bool {
        (words[q / WORD] >> (q % WORD)) & 1 == 1
    }

    #[inline]
    fn put(words: &mut [u64], q: usize, v: bool) {
        let mask = 1u64 << (q % WORD);
        if v {
            words[q / WORD] |= mask;
        } else {
            words[q / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn x_bit(&self, q: usize) -> bool {
        Self::bit(&self.x, q)
    }

    #[inline]
    pub fn z_bit(&self, q: usize) -> bool {
        Self::bit(&self.z, q)
    }

    /// Letter at qubit `q`.
    ///
    /// # Panics
    /// Panics if `q >= n`.
    #[inline]
    pub fn axis(&self, q: usize) -> PauliAxis {
        assert!(q < self.n, "qubit {q} out of range for {} qubits", self.n);
        PauliAxis::from_bits(self.x_bit(q), self.z_bit(q))
    }

    /// Overwrites the letter at `q` without touching the sign.
    #[inline]
    pub fn set_axis(&mut self, q: usize, axis: PauliAxis) {
        assert!(q < self.n, "qubit {q} out of range for {} qubits", self.n);
        let (x, z) = axis.bits();
        Self::put(&mut self.x, q, x);
        Self::put(&mut self.z, q, z);
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().all(|&w| w == 0) && self.z.iter().all(|&w| w == 0)
    }

    /// True when every letter is `I` or `Z`, i.e. `<0|P|0> != 0`.
    pub fn is_diagonal(&self) -> bool {
        self.x.iter().all(|&w| w == 0)
    }

    /// `<0...0| P |0...0>`, which is the sign for diagonal strings and zero otherwise.
    pub fn vacuum_expectation(&self) -> f64 {
        if self.is_diagonal() {
            self.sign()
        } else {
            0.0
        }
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x | z).count_ones() as usize)
            .sum()
    }

    pub fn axes(&self) -> impl Iterator<Item = PauliAxis> + '_ {
        (0..self.n).map(|q| self.axis(q))
    }

    /// Base-4 index with qubit 0 least significant (`I=0, X=1, Y=2, Z=3`).
    /// Only meaningful for `n <= 31`.
    pub fn dense_index(&self) -> usize {
        (0..self.n)
            .rev()
            .fold(0usize, |acc, q| acc * 4 + self.axis(q).index())
    }

    pub fn from_dense_index(n: usize, mut index: usize) -> Self {
        let mut p = Self::identity(n);
        for q in 0..n {
            p.set_axis(q, PauliAxis::from_index(index));
            index >>= 2;
        }
        p
    }

    /// Unsigned copy, useful as a map key.
    pub fn unsigned(&self) -> Self {
        let mut p = self.clone();
        p.negative = false;
        p
    }

    /// In-place `g† P g`. The gate must already be validated for this width.
    pub fn apply_gate(&mut self, gate: &CliffordGate) {
        use CliffordGate::*;
        match *gate {
            H(q) => {
                let (x, z) = (self.x_bit(q), self.z_bit(q));
                self.negative ^= x & z;
                Self::put(&mut self.x, q, z);
                Self::put(&mut self.z, q, x);
            }
            S(q) => {
                // X -> -Y, Y -> X
                let (x, z) = (self.x_bit(q), self.z_bit(q));
                self.negative ^= x & !z;
                Self::put(&mut self.z, q, z ^ x);
            }
            Sdg(q) => {
                // X -> Y, Y -> -X
                let (x, z) = (self.x_bit(q), self.z_bit(q));
                self.negative ^= x & z;
                Self::put(&mut self.z, q, z ^ x);
            }
            X(q) => self.negative ^= self.z_bit(q),
            Y(q) => self.negative ^= self.x_bit(q) ^ self.z_bit(q),
            Z(q) => self.negative ^= self.x_bit(q),
            CX(c, t) => {
                let (xc, zc, xt, zt) = (self.x_bit(c), self.z_bit(c), self.x_bit(t), self.z_bit(t));
                self.negative ^= xc & zt & !(xt ^ zc);
                Self::put(&mut self.x, t, xt ^ xc);
                Self::put(&mut self.z, c, zc ^ zt);
            }
            CZ(a, b) => {
                let (xa, za, xb, zb) = (self.x_bit(a), self.z_bit(a), self.x_bit(b), self.z_bit(b));
                self.negative ^= xa & xb & (za ^ zb);
                Self::put(&mut self.z, a, za ^ xb);
                Self::put(&mut self.z, b, zb ^ xa);
            }
            Swap(a, b) => {
                let (xa, za, xb, zb) = (self.x_bit(a), self.z_bit(a), self.x_bit(b), self.z_bit(b));
                Self::put(&mut self.x, a, xb);
                Self::put(&mut self.z, a, zb);
                Self::put(&mut self.x, b, xa);
                Self::put(&mut self.z, b, za);
            }
        }
    }

    /// In-place Heisenberg conjugation by a whole layer (gates folded in reverse).
    pub fn apply_layer(&mut self, layer: &CliffordLayer) {
        for g in layer.gates.iter().rev() {
            self.apply_gate(g);
        }
    }
}

/// Returns `g† p g`.
pub fn conjugate_gate(p: &PauliString, gate: &CliffordGate) -> Result<PauliString, PauliError> {
    gate.validate(p.num_qubits())?;
    let mut out = p.clone();
    out.apply_gate(gate);
    Ok(out)
}

/// Returns `U† p U` for `U` the product of the layer's gates in listed (Schrödinger) order.
pub fn conjugate_layer(p: &PauliString, layer: &CliffordLayer) -> Result<PauliString, PauliError> {
    layer.validate(p.num_qubits())?;
    let mut out = p.clone();
    out.apply_layer(layer);
    Ok(out)
}

pub fn pauli_axis(p: &PauliString, q: usize) -> Result<PauliAxis, PauliError> {
    if q >= p.num_qubits() {
        return Err(PauliError::QubitOutOfRange {
            qubit: q,
            n: p.num_qubits(),
        });
    }
    Ok(p.axis(q))
}

impl FromStr for PauliString {
    type Err = PauliError;

    /// Accepts an optional `+`, `-` or `−` prefix followed by `I/X/Y/Z`;
    /// character `i` of the body is qubit `i`.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut chars = text.char_indices().peekable();
        let mut negative = false;
        let mut offset = 0;
        if let Some(&(_, c)) = chars.peek() {
            if c == '+' || c == '-' || c == '\u{2212}' {
                negative = c != '+';
                chars.next();
                offset = 1;
            }
        }
        let mut axes = Vec::new();
        for (pos, (_, c)) in chars.enumerate() {
            let a = match c {
                'I' => PauliAxis::I,
                'X' => PauliAxis::X,
                'Y' => PauliAxis::Y,
                'Z' => PauliAxis::Z,
                other => {
                    return Err(PauliError::InvalidCharacter {
                        position: pos + offset,
                        found: other,
                    })
                }
            };
            axes.push(a);
        }
        let mut p = Self::from_axes(&axes)?;
        p.negative = negative;
        Ok(p)
    }
}

pub fn parse_pauli(text: &str) -> Result<PauliString, PauliError> {
    text.parse()
}

/// Canonical text: `-` prefix for negative strings, no prefix otherwise.
pub fn format_pauli(p: &PauliString) -> String {
    p.to_string()
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negative {
            write!(f, "-")?;
        }
        for a in self.axes() {
            write!(f, "{}", a.letter())?;
        }
        Ok(())
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Supported Clifford generators. Two-qubit gates list `(control, target)` for `CX`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CliffordGate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Y(usize),
    Z(usize),
    CX(usize, usize),
    CZ(usize, usize),
    Swap(usize, usize),
}

impl CliffordGate {
    pub fn name(&self) -> &'static str {
        use CliffordGate::*;
        match self {
            H(_) => "H",
            S(_) => "S",
            Sdg(_) => "SDG",
            X(_) => "X",
            Y(_) => "Y",
            Z(_) => "Z",
            CX(..) => "CX",
            CZ(..) => "CZ",
            Swap(..) => "SWAP",
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        use CliffordGate::*;
        match *self {
            H(q) | S(q) | Sdg(q) | X(q) | Y(q) | Z(q) => vec![q],
            CX(a, b) | CZ(a, b) | Swap(a, b) => vec![a, b],
        }
    }

    pub fn from_parts(name: &str, qubits: &[usize]) -> Result<Self, PauliError> {
        let one = |gate: &'static str| -> Result<usize, PauliError> {
            match qubits {
                [q] => Ok(*q),
                _ => Err(PauliError::Arity {
                    gate,
                    expected: 1,
                    found: qubits.len(),
                }),
            }
        };
        let two = |gate: &'static str| -> Result<(usize, usize), PauliError> {
            match qubits {
                [a, b] => Ok((*a, *b)),
                _ => Err(PauliError::Arity {
                    gate,
                    expected: 2,
                    found: qubits.len(),
                }),
            }
        };
        Ok(match name {
            "H" => CliffordGate::H(one("H")?),
            "S" => CliffordGate::S(one("S")?),
            "SDG" => CliffordGate::Sdg(one("SDG")?),
            "X" => CliffordGate::X(one("X")?),
            "Y" => CliffordGate::Y(one("Y")?),
            "Z" => CliffordGate::Z(one("Z")?),
            "CX" => {
                let (a, b) = two("CX")?;
                CliffordGate::CX(a, b)
            }
            "CZ" => {
                let (a, b) = two("CZ")?;
                CliffordGate::CZ(a, b)
            }
            "SWAP" => {
                let (a, b) = two("SWAP")?;
                CliffordGate::Swap(a, b)
            }
            other => return Err(PauliError::UnknownGate(other.to_string())),
        })
    }

    pub fn inverse(&self) -> Self {
        match *self {
            CliffordGate::S(q) => CliffordGate::Sdg(q),
            CliffordGate::Sdg(q) => CliffordGate::S(q),
            g => g,
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), PauliError> {
        let qs = self.qubits();
        for &q in &qs {
            if q >= n {
                return Err(PauliError::QubitOutOfRange { qubit: q, n });
            }
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(PauliError::RepeatedQubit {
                gate: self.name(),
                qubit: qs[0],
            });
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct GateRecord {
    gate: String,
    qubits: Vec<usize>,
}

impl Serialize for CliffordGate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GateRecord {
            gate: self.name().to_string(),
            qubits: self.qubits(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CliffordGate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rec = GateRecord::deserialize(d)?;
        CliffordGate::from_parts(&rec.gate, &rec.qubits).map_err(serde::de::Error::custom)
    }
}

/// Gates in Schrödinger order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CliffordLayer {
    pub gates: Vec<CliffordGate>,
}

impl CliffordLayer {
    pub fn new(gates: Vec<CliffordGate>) -> Self {
        Self { gates }
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn push(&mut self, g: CliffordGate) {
        self.gates.push(g);
    }

    pub fn validate(&self, n: usize) -> Result<(), PauliError> {
        self.gates.iter().try_for_each(|g| g.validate(n))
    }

    /// The layer implementing `U†`.
    pub fn inverse(&self) -> Self {
        Self {
            gates: self.gates.iter().rev().map(CliffordGate::inverse).collect(),
        }
    }
}

impl FromIterator<CliffordGate> for CliffordLayer {
    fn from_iter<T: IntoIterator<Item = CliffordGate>>(iter: T) -> Self {
        Self {
            gates: iter.into_iter().collect(),
        }
    }
}
