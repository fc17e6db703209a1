use std::fmt;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Largest register a [`PauliProduct`] can describe; one machine word per bit plane.
pub const MAX_QUBITS: usize = 64;

/// Single-qubit factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }
}

/// An N-qubit Pauli product `i^phase · σ_0 ⊗ σ_1 ⊗ …` in symplectic form.
///
/// Bit `j` of `x`/`z` describes qubit `j`; the letters are X = (1,0), Y = (1,1), Z = (0,1),
/// so Y is stored as itself (not as XZ). `phase` is the exponent of `i` modulo 4.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliProduct {
    n_qubits: u8,
    x: u64,
    z: u64,
    phase: u8,
}

fn mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::TooManyQubits { got: n, max: MAX_QUBITS });
    }
    Ok(())
}

impl PauliProduct {
    pub fn identity(n_qubits: usize) -> Self {
        assert!((1..=MAX_QUBITS).contains(&n_qubits));
        Self { n_qubits: n_qubits as u8, x: 0, z: 0, phase: 0 }
    }

    /// Builds a product from bit planes; bits above `n_qubits` are rejected.
    pub fn from_bits(n_qubits: usize, x: u64, z: u64) -> Result<Self> {
        check_n(n_qubits)?;
        let m = mask(n_qubits);
        if x & !m != 0 || z & !m != 0 {
            return Err(Error::Invalid(format!("bits set above qubit {}", n_qubits - 1)));
        }
        Ok(Self { n_qubits: n_qubits as u8, x, z, phase: 0 })
    }

    pub fn from_letters(letters: &[Letter]) -> Result<Self> {
        check_n(letters.len())?;
        let (mut x, mut z) = (0u64, 0u64);
        for (j, l) in letters.iter().enumerate() {
            let (bx, bz) = l.bits();
            x |= (bx as u64) << j;
            z |= (bz as u64) << j;
        }
        Ok(Self { n_qubits: letters.len() as u8, x, z, phase: 0 })
    }

    /// Single-qubit factor `letter` on `qubit`, identity elsewhere.
    pub fn single(n_qubits: usize, qubit: usize, letter: Letter) -> Result<Self> {
        check_n(n_qubits)?;
        if qubit >= n_qubits {
            return Err(Error::IndexOutOfRange { index: qubit, len: n_qubits });
        }
        let (bx, bz) = letter.bits();
        Ok(Self { n_qubits: n_qubits as u8, x: (bx as u64) << qubit, z: (bz as u64) << qubit, phase: 0 })
    }

    /// Parses the sparse text form, e.g. `"X0 Z2 Y5"`; `"I"` or `""` is the identity.
    pub fn parse(text: &str, n_qubits: usize) -> Result<Self> {
        check_n(n_qubits)?;
        let mut p = Self::identity(n_qubits);
        let bad = || Error::PauliText(text.to_string());
        for tok in text.split_whitespace() {
            if tok == "I" {
                continue;
            }
            let mut chars = tok.chars();
            let letter = chars.next().and_then(Letter::from_char).ok_or_else(bad)?;
            let q: usize = chars.as_str().parse().map_err(|_| bad())?;
            if q >= n_qubits {
                return Err(Error::IndexOutOfRange { index: q, len: n_qubits });
            }
            if p.letter(q) != Letter::I {
                return Err(bad());
            }
            p = p.with_letter(q, letter);
        }
        Ok(p)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits as usize
    }

    pub fn x_bits(&self) -> u64 {
        self.x
    }

    pub fn z_bits(&self) -> u64 {
        self.z
    }

    /// Exponent `k` of the global factor `i^k`.
    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn phase_factor(&self) -> Complex64 {
        match self.phase & 3 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    pub fn with_phase(mut self, phase: u8) -> Self {
        self.phase = phase & 3;
        self
    }

    /// Same letters with phase `+1`.
    pub fn without_phase(self) -> Self {
        self.with_phase(0)
    }

    pub fn letter(&self, qubit: usize) -> Letter {
        Letter::from_bits((self.x >> qubit) & 1 == 1, (self.z >> qubit) & 1 == 1)
    }

    pub fn with_letter(mut self, qubit: usize, letter: Letter) -> Self {
        let (bx, bz) = letter.bits();
        self.x = (self.x & !(1 << qubit)) | ((bx as u64) << qubit);
        self.z = (self.z & !(1 << qubit)) | ((bz as u64) << qubit);
        self
    }

    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> usize {
        self.support().count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Diagonal in the computational basis (only I and Z factors).
    pub fn is_z_type(&self) -> bool {
        self.x == 0
    }

    fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::QubitMismatch(self.n_qubits(), other.n_qubits()));
        }
        Ok(())
    }

    /// Exact operator product `self · other`, phase included.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        let (x1, z1, x2, z2) = (self.x, self.z, other.x, other.z);
        let (xa, ya, za) = (x1 & !z1, x1 & z1, !x1 & z1);
        let (xb, yb, zb) = (x2 & !z2, x2 & z2, !x2 & z2);
        // XY = iZ, YZ = iX, ZX = iY and the reversed orders pick up -i.
        let plus = (xa & yb) | (ya & zb) | (za & xb);
        let minus = (ya & xb) | (za & yb) | (xa & zb);
        let k = self.phase as i64 + other.phase as i64 + plus.count_ones() as i64 - minus.count_ones() as i64;
        Self { n_qubits: self.n_qubits, x: x1 ^ x2, z: z1 ^ z2, phase: k.rem_euclid(4) as u8 }
    }

    /// `true` iff the operators commute (even symplectic inner product).
    pub fn commutes_fully(&self, other: &Self) -> Result<bool> {
        self.check_same(other)?;
        Ok(self.commutes_unchecked(other))
    }

    pub(crate) fn commutes_unchecked(&self, other: &Self) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones().is_multiple_of(2)
    }

    /// `true` iff on every qubit the factors agree or one of them is the identity.
    pub fn commutes_qubitwise(&self, other: &Self) -> Result<bool> {
        self.check_same(other)?;
        Ok(self.qwc_unchecked(other))
    }

    pub(crate) fn qwc_unchecked(&self, other: &Self) -> bool {
        let overlap = self.support() & other.support();
        ((self.x ^ other.x) | (self.z ^ other.z)) & overlap == 0
    }

    /// Action on a computational basis state: `P|b⟩ = i^k |b'⟩`, returns `(b', k)`.
    #[inline]
    pub fn apply_to_basis(&self, b: u64) -> (u64, u8) {
        let k = self.phase as u32 + self.y_count() + 2 * (b & self.z).count_ones();
        (b ^ self.x, (k & 3) as u8)
    }

    /// Adjoint: letters are Hermitian, so only the phase conjugates.
    pub fn adjoint(&self) -> Self {
        self.with_phase((4 - self.phase) & 3)
    }

    /// Uniformly random letters with phase `+1`.
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Self {
        let m = mask(n_qubits);
        Self { n_qubits: n_qubits as u8, x: rng.random::<u64>() & m, z: rng.random::<u64>() & m, phase: 0 }
    }

    /// Text form without the phase, e.g. `"X0 Z2"`; the identity prints as `"I"`.
    pub fn label(&self) -> String {
        if self.is_identity() {
            return "I".into();
        }
        let mut parts = Vec::new();
        for q in 0..self.n_qubits() {
            let l = self.letter(q);
            if l != Letter::I {
                parts.push(format!("{}{}", l.as_char(), q));
            }
        }
        parts.join(" ")
    }

    /// Dense letter string over all qubits, e.g. `"XIZI"`.
    pub fn dense_label(&self) -> String {
        (0..self.n_qubits()).map(|q| self.letter(q).as_char()).collect()
    }
}

impl fmt::Display for PauliProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = ["", "i·", "-", "-i·"][self.phase as usize];
        write!(f, "{}{}", prefix, self.label())
    }
}

impl fmt::Debug for PauliProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pauli({}; n={})", self, self.n_qubits)
    }
}
