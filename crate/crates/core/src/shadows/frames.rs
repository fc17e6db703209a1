//! Measurement frames and their stabilizer descriptions.
//!
//! Every frame measures `n` independent commuting Hermitian Paulis `g_j` at once. A Pauli
//! `P` is covered when `P = ±∏_{j∈T} g_j` for some subset `T`, and its single-shot value is
//! then `±(−1)^{b·T}` for the joint outcome `b`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::Mapping;
use crate::pauli::{Letter, PauliProduct};

/// Images of `X_0..X_{n−1}` followed by `Z_0..Z_{n−1}` under a Clifford conjugation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tableau {
    n_qubits: usize,
    images: Vec<PauliProduct>,
}

type Sym = (u64, u64);

fn form(a: Sym, b: Sym) -> u32 {
    ((a.0 & b.1) ^ (a.1 & b.0)).count_ones() & 1
}

fn project(mut v: Sym, pairs: &[(Sym, Sym)]) -> Sym {
    for &(a, b) in pairs {
        let (fa, fb) = (form(v, a), form(v, b));
        if fb == 1 {
            v = (v.0 ^ a.0, v.1 ^ a.1);
        }
        if fa == 1 {
            v = (v.0 ^ b.0, v.1 ^ b.1);
        }
    }
    v
}

impl Tableau {
    pub fn identity(n_qubits: usize) -> Self {
        let mut images: Vec<PauliProduct> =
            (0..n_qubits).map(|q| PauliProduct::from_bits(n_qubits, 1 << q, 0).expect("in range")).collect();
        images.extend((0..n_qubits).map(|q| PauliProduct::from_bits(n_qubits, 0, 1 << q).expect("in range")));
        Self { n_qubits, images }
    }

    /// Builds from explicit images; they must be Hermitian and satisfy the canonical relations.
    pub fn from_images(images: Vec<PauliProduct>) -> Result<Self> {
        let n = images.len() / 2;
        if images.len() != 2 * n || n == 0 || images.iter().any(|p| p.n_qubits() != n) {
            return Err(Error::Invalid("a tableau needs 2n images on n qubits".into()));
        }
        if images.iter().any(|p| p.phase() % 2 == 1) {
            return Err(Error::Invalid("tableau images must be Hermitian".into()));
        }
        let t = Self { n_qubits: n, images };
        if !t.is_symplectic() {
            return Err(Error::Invalid("tableau does not preserve the commutation form".into()));
        }
        Ok(t)
    }

    /// Uniform over the symplectic group, with independent uniform signs.
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Self {
        let mask = if n_qubits == 64 { u64::MAX } else { (1u64 << n_qubits) - 1 };
        let draw = |rng: &mut R| (rng.random::<u64>() & mask, rng.random::<u64>() & mask);
        let mut pairs: Vec<(Sym, Sym)> = Vec::with_capacity(n_qubits);
        for _ in 0..n_qubits {
            let v = loop {
                let v = project(draw(rng), &pairs);
                if v != (0, 0) {
                    break v;
                }
            };
            let w = loop {
                let w = project(draw(rng), &pairs);
                if form(v, w) == 1 {
                    break w;
                }
            };
            pairs.push((v, w));
        }
        let mut images = Vec::with_capacity(2 * n_qubits);
        let sign = |rng: &mut R| if rng.random::<bool>() { 0 } else { 2 };
        for &(v, _) in &pairs {
            images.push(PauliProduct::from_bits(n_qubits, v.0, v.1).expect("in range").with_phase(sign(rng)));
        }
        for &(_, w) in &pairs {
            images.push(PauliProduct::from_bits(n_qubits, w.0, w.1).expect("in range").with_phase(sign(rng)));
        }
        Self { n_qubits, images }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_image(&self, q: usize) -> PauliProduct {
        self.images[q]
    }

    pub fn z_image(&self, q: usize) -> PauliProduct {
        self.images[self.n_qubits + q]
    }

    /// Images pairwise commute except `X_q`, `Z_q`, which anticommute.
    pub fn is_symplectic(&self) -> bool {
        let n = self.n_qubits;
        for a in 0..2 * n {
            for b in a + 1..2 * n {
                let expect_anti = b == a + n && a < n;
                if self.images[a].commutes_unchecked(&self.images[b]) == expect_anti {
                    return false;
                }
            }
        }
        true
    }

    /// Conjugated image of `p`, phase included.
    pub fn pauli_image(&self, p: &PauliProduct) -> PauliProduct {
        let mut out = PauliProduct::identity(self.n_qubits).with_phase(p.phase());
        for q in 0..self.n_qubits {
            let factor = match p.letter(q) {
                Letter::I => continue,
                Letter::X => self.x_image(q),
                Letter::Z => self.z_image(q),
                Letter::Y => {
                    let xz = self.x_image(q).mul_unchecked(&self.z_image(q));
                    xz.with_phase((xz.phase() + 1) % 4)
                }
            };
            out = out.mul_unchecked(&factor);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FrameKind {
    /// Single-qubit measurement basis per qubit.
    QwcBasis(Vec<Letter>),
    /// Measure `U† Z_j U` where the tableau holds the images of `Z_j`.
    CliffordTableau(Tableau),
    /// Perfect matching of the `2N` Majorana indices; each pair `(a, b)` measures `iγ_aγ_b`.
    MajoranaPairing(Vec<(u16, u16)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementFrame {
    pub kind: FrameKind,
    /// Probability of drawing this frame.
    pub weight: f64,
}

impl MeasurementFrame {
    pub fn n_qubits(&self) -> usize {
        match &self.kind {
            FrameKind::QwcBasis(l) => l.len(),
            FrameKind::CliffordTableau(t) => t.n_qubits(),
            FrameKind::MajoranaPairing(p) => p.len(),
        }
    }

    /// The `n` commuting generators measured by this frame.
    pub fn stabilizers(&self, mapping: Mapping) -> Vec<PauliProduct> {
        let n = self.n_qubits();
        match &self.kind {
            FrameKind::QwcBasis(letters) => {
                letters.iter().enumerate().map(|(q, l)| PauliProduct::single(n, q, *l).expect("in range")).collect()
            }
            FrameKind::CliffordTableau(t) => (0..n).map(|q| t.z_image(q)).collect(),
            FrameKind::MajoranaPairing(pairs) => pairs
                .iter()
                .map(|&(a, b)| {
                    let g = mapping.majorana_image(n, a as usize).mul_unchecked(&mapping.majorana_image(n, b as usize));
                    g.with_phase((g.phase() + 1) % 4)
                })
                .collect(),
        }
    }

    /// Basis string such as `"XZY"` for a QWC frame.
    pub fn bases(&self) -> Option<String> {
        match &self.kind {
            FrameKind::QwcBasis(l) => Some(l.iter().map(|x| x.as_char()).collect()),
            _ => None,
        }
    }
}

const QWC_LETTERS: [Letter; 3] = [Letter::X, Letter::Y, Letter::Z];

pub fn sample_qwc_frame<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> MeasurementFrame {
    let letters = (0..n_qubits).map(|_| QWC_LETTERS[rng.random_range(0..3)]).collect();
    MeasurementFrame { kind: FrameKind::QwcBasis(letters), weight: 3f64.powi(-(n_qubits as i32)) }
}

pub fn sample_clifford_frame<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> MeasurementFrame {
    MeasurementFrame { kind: FrameKind::CliffordTableau(Tableau::random(n_qubits, rng)), weight: 0.0 }
}

pub fn sample_majorana_frame<R: Rng + ?Sized>(n_modes: usize, rng: &mut R) -> MeasurementFrame {
    let mut idx: Vec<u16> = (0..2 * n_modes as u16).collect();
    idx.shuffle(rng);
    let mut pairs: Vec<(u16, u16)> = idx.chunks(2).map(|c| (c[0].min(c[1]), c[0].max(c[1]))).collect();
    pairs.sort_unstable();
    MeasurementFrame { kind: FrameKind::MajoranaPairing(pairs), weight: 1.0 / double_factorial(2 * n_modes as i64 - 1) }
}

/// `m!!` for odd `m ≥ −1`.
pub fn double_factorial(m: i64) -> f64 {
    let mut out = 1.0;
    let mut k = m;
    while k > 1 {
        out *= k as f64;
        k -= 2;
    }
    out
}

/// All `3^n` QWC frames with equal weight.
pub fn enumerate_qwc_frames(n_qubits: usize) -> Vec<MeasurementFrame> {
    let total = 3usize.pow(n_qubits as u32);
    let w = 1.0 / total as f64;
    (0..total)
        .map(|mut i| {
            let letters = (0..n_qubits)
                .map(|_| {
                    let l = QWC_LETTERS[i % 3];
                    i /= 3;
                    l
                })
                .collect();
            MeasurementFrame { kind: FrameKind::QwcBasis(letters), weight: w }
        })
        .collect()
}

/// All `(2N−1)!!` perfect matchings of `2N` Majorana indices with equal weight.
pub fn enumerate_majorana_frames(n_modes: usize) -> Vec<MeasurementFrame> {
    fn rec(rest: &mut Vec<u16>, acc: &mut Vec<(u16, u16)>, out: &mut Vec<Vec<(u16, u16)>>) {
        if rest.is_empty() {
            out.push(acc.clone());
            return;
        }
        let a = rest.remove(0);
        for i in 0..rest.len() {
            let b = rest.remove(i);
            acc.push((a, b));
            rec(rest, acc, out);
            acc.pop();
            rest.insert(i, b);
        }
        rest.insert(0, a);
    }
    let mut out = Vec::new();
    rec(&mut (0..2 * n_modes as u16).collect(), &mut Vec::new(), &mut out);
    let w = 1.0 / out.len() as f64;
    out.into_iter().map(|p| MeasurementFrame { kind: FrameKind::MajoranaPairing(p), weight: w }).collect()
}

/// Expresses Paulis as signed products of a fixed independent generator list (≤ 64).
#[derive(Clone, Debug)]
pub struct Decomposer {
    n_qubits: usize,
    generators: Vec<PauliProduct>,
    /// Echelon rows `(x, z, combination)`, each with a distinct pivot bit.
    rows: Vec<(u64, u64, u64)>,
}

fn pivot(x: u64, z: u64) -> Option<u32> {
    if x != 0 {
        Some(x.trailing_zeros())
    } else if z != 0 {
        Some(64 + z.trailing_zeros())
    } else {
        None
    }
}

fn has_bit(x: u64, z: u64, bit: u32) -> bool {
    if bit < 64 {
        x >> bit & 1 == 1
    } else {
        z >> (bit - 64) & 1 == 1
    }
}

impl Decomposer {
    pub fn new(generators: Vec<PauliProduct>) -> Result<Self> {
        let n = generators.first().map_or(1, PauliProduct::n_qubits);
        if generators.len() > 64 {
            return Err(Error::Invalid("at most 64 generators".into()));
        }
        let mut rows: Vec<(u64, u64, u64)> = Vec::new();
        for (j, g) in generators.iter().enumerate() {
            let (mut x, mut z, mut c) = (g.x_bits(), g.z_bits(), 1u64 << j);
            for &(rx, rz, rc) in &rows {
                let p = pivot(rx, rz).expect("nonzero row");
                if has_bit(x, z, p) {
                    x ^= rx;
                    z ^= rz;
                    c ^= rc;
                }
            }
            if pivot(x, z).is_none() {
                return Err(Error::Invalid("generators are linearly dependent".into()));
            }
            // keep rows fully reduced so a single pass suffices
            let p = pivot(x, z).expect("nonzero");
            for r in rows.iter_mut() {
                if has_bit(r.0, r.1, p) {
                    r.0 ^= x;
                    r.1 ^= z;
                    r.2 ^= c;
                }
            }
            rows.push((x, z, c));
        }
        Ok(Self { n_qubits: n, generators, rows })
    }

    pub fn generators(&self) -> &[PauliProduct] {
        &self.generators
    }

    /// Subset mask `T` with `∏_{j∈T} g_j = i^k P` as bit planes; `None` if outside the span.
    pub fn mask(&self, p: &PauliProduct) -> Option<u64> {
        let (mut x, mut z, mut c) = (p.x_bits(), p.z_bits(), 0u64);
        for &(rx, rz, rc) in &self.rows {
            if has_bit(x, z, pivot(rx, rz).expect("nonzero")) {
                x ^= rx;
                z ^= rz;
                c ^= rc;
            }
        }
        (x == 0 && z == 0).then_some(c)
    }

    /// Ordered product `∏_{j∈T} g_j` in ascending `j`.
    pub fn product(&self, mask: u64) -> PauliProduct {
        let mut out = PauliProduct::identity(self.n_qubits);
        let mut m = mask;
        while m != 0 {
            let j = m.trailing_zeros() as usize;
            out = out.mul_unchecked(&self.generators[j]);
            m &= m - 1;
        }
        out
    }

    /// `(T, s)` with `P = s ∏_{j∈T} g_j` and `s = ±1`, when that holds with a real sign.
    pub fn signed(&self, p: &PauliProduct) -> Option<(u64, f64)> {
        let t = self.mask(p)?;
        let q = self.product(t);
        match (4 + p.phase() - q.phase()) % 4 {
            0 => Some((t, 1.0)),
            2 => Some((t, -1.0)),
            _ => None,
        }
    }
}

/// Frame-sequence JSON entry for QWC frames.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct BasesJson {
    pub bases: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_tableaux_are_symplectic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..6 {
            for _ in 0..20 {
                assert!(Tableau::random(n, &mut rng).is_symplectic());
            }
        }
        assert!(Tableau::identity(3).is_symplectic());
    }

    #[test]
    fn image_preserves_products_and_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = Tableau::random(4, &mut rng);
        assert!(t.pauli_image(&PauliProduct::identity(4)).is_identity());
        for _ in 0..50 {
            let a = PauliProduct::random(4, &mut rng);
            let b = PauliProduct::random(4, &mut rng);
            let lhs = t.pauli_image(&a.mul_unchecked(&b));
            let rhs = t.pauli_image(&a).mul_unchecked(&t.pauli_image(&b));
            assert_eq!(lhs, rhs);
            assert_eq!(a.commutes_unchecked(&b), t.pauli_image(&a).commutes_unchecked(&t.pauli_image(&b)));
        }
    }

    #[test]
    fn enumeration_sizes() {
        assert_eq!(enumerate_qwc_frames(3).len(), 27);
        assert_eq!(enumerate_majorana_frames(3).len(), 15);
        assert_eq!(double_factorial(7), 105.0);
        assert_eq!(double_factorial(-1), 1.0);
    }

    #[test]
    fn majorana_pair_stabilizers_commute() {
        for mapping in [Mapping::Jw, Mapping::Bk] {
            for f in enumerate_majorana_frames(3) {
                let g = f.stabilizers(mapping);
                assert!(g.iter().all(|p| p.phase() % 2 == 0));
                for a in &g {
                    for b in &g {
                        assert!(a.commutes_unchecked(b));
                    }
                }
                Decomposer::new(g).unwrap();
            }
        }
    }

    #[test]
    fn decomposition_recovers_products() {
        let gens = vec![PauliProduct::parse("X0 X1", 2).unwrap(), PauliProduct::parse("Z0 Z1", 2).unwrap()];
        let d = Decomposer::new(gens).unwrap();
        // X0X1 · Z0Z1 = (XZ)(XZ) = (−iY)(−iY) = −Y0Y1
        assert_eq!(d.signed(&PauliProduct::parse("Y0 Y1", 2).unwrap()), Some((0b11, -1.0)));
        assert_eq!(d.signed(&PauliProduct::parse("Z0 Z1", 2).unwrap()), Some((0b10, 1.0)));
        assert_eq!(d.mask(&PauliProduct::parse("Z0", 2).unwrap()), None);
    }
}
