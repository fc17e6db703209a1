//! Lowest eigenpairs of a Pauli Hamiltonian restricted to a set of basis states.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::wave::{inner, WaveVector};
use crate::error::{Error, Result};
use crate::fermion::Mapping;
use crate::pauli::PauliPolynomial;

/// Largest subspace handled by dense diagonalization.
pub const DENSE_LIMIT: usize = 4096;
/// Residual at which a Krylov Ritz pair counts as converged.
pub const KRYLOV_TOL: f64 = 1e-9;
const KRYLOV_SEED: u64 = 0x5eed;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I_POW: [Complex64; 4] =
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, -1.0)];

/// Sparse Hermitian matrix of `H` on a list of computational basis states.
pub struct SubspaceMatrix {
    n_qubits: usize,
    basis: Vec<u64>,
    /// Column-major entries `(row, value)`.
    columns: Vec<Vec<(u32, Complex64)>>,
}

impl SubspaceMatrix {
    pub fn new(h: &PauliPolynomial, mut basis: Vec<u64>) -> Result<Self> {
        let n = h.n_qubits();
        if n > 30 {
            return Err(Error::TooManyQubits { got: n, max: 30 });
        }
        basis.sort_unstable();
        basis.dedup();
        let mut position = vec![u32::MAX; 1 << n];
        for (i, b) in basis.iter().enumerate() {
            if *b >> n != 0 {
                return Err(Error::IndexOutOfRange { index: *b as usize, len: 1 << n });
            }
            position[*b as usize] = i as u32;
        }
        let terms: Vec<_> = h.iter().map(|(p, c)| (*p, *c)).collect();
        let columns = basis
            .iter()
            .map(|&b| {
                let mut col: Vec<(u32, Complex64)> = Vec::new();
                for (p, c) in &terms {
                    let (b2, k) = p.apply_to_basis(b);
                    let row = position[b2 as usize];
                    if row != u32::MAX {
                        col.push((row, *c * I_POW[k as usize]));
                    }
                }
                col.sort_unstable_by_key(|e| e.0);
                let mut merged: Vec<(u32, Complex64)> = Vec::with_capacity(col.len());
                for (r, v) in col {
                    match merged.last_mut() {
                        Some(last) if last.0 == r => last.1 += v,
                        _ => merged.push((r, v)),
                    }
                }
                merged.retain(|e| e.1.norm() > 1e-15);
                merged
            })
            .collect();
        Ok(Self { n_qubits: n, basis, columns })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[u64] {
        &self.basis
    }

    fn is_real(&self) -> bool {
        self.columns.iter().flatten().all(|(_, v)| v.im.abs() < 1e-14)
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; x.len()];
        for (j, col) in self.columns.iter().enumerate() {
            let xj = x[j];
            if xj == ZERO {
                continue;
            }
            for (r, v) in col {
                y[*r as usize] += v * xj;
            }
        }
        y
    }

    fn embed(&self, coeffs: &[Complex64], label: usize, energy: f64) -> WaveVector {
        let mut amps = vec![ZERO; 1 << self.n_qubits];
        for (b, c) in self.basis.iter().zip(coeffs) {
            amps[*b as usize] = *c;
        }
        WaveVector { n_qubits: self.n_qubits, amplitudes: amps, label, energy: Some(energy) }
    }

    /// The `count` lowest eigenpairs, embedded in the full register, energies ascending.
    pub fn lowest(&self, count: usize) -> Result<Vec<WaveVector>> {
        let d = self.dim();
        if count > d {
            return Err(Error::TooManyStates { requested: count, available: d });
        }
        let pairs = if d <= DENSE_LIMIT { self.dense_lowest(count) } else { self.krylov_lowest(count)? };
        Ok(pairs.into_iter().enumerate().map(|(i, (e, v))| self.embed(&v, i, e)).collect())
    }

    fn dense_lowest(&self, count: usize) -> Vec<(f64, Vec<Complex64>)> {
        let d = self.dim();
        if self.is_real() {
            let mut m = DMatrix::<f64>::zeros(d, d);
            for (j, col) in self.columns.iter().enumerate() {
                for (r, v) in col {
                    m[(*r as usize, j)] = v.re;
                }
            }
            let eig = SymmetricEigen::new(m);
            let order = ascending(eig.eigenvalues.as_slice());
            order
                .into_iter()
                .take(count)
                .map(|i| {
                    let v = eig.eigenvectors.column(i).iter().map(|x| Complex64::new(*x, 0.0)).collect();
                    (eig.eigenvalues[i], v)
                })
                .collect()
        } else {
            let mut m = DMatrix::<Complex64>::zeros(d, d);
            for (j, col) in self.columns.iter().enumerate() {
                for (r, v) in col {
                    m[(*r as usize, j)] = *v;
                }
            }
            let eig = SymmetricEigen::new(m);
            let order = ascending(eig.eigenvalues.as_slice());
            order
                .into_iter()
                .take(count)
                .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).iter().copied().collect()))
                .collect()
        }
    }

    /// Block Krylov Rayleigh–Ritz with full reorthogonalization.
    fn krylov_lowest(&self, count: usize) -> Result<Vec<(f64, Vec<Complex64>)>> {
        let d = self.dim();
        let block = count.max(2);
        let mut rng = ChaCha8Rng::seed_from_u64(KRYLOV_SEED);
        let mut q: Vec<Vec<Complex64>> = Vec::new();
        let mut aq: Vec<Vec<Complex64>> = Vec::new();
        let mut next: Vec<Vec<Complex64>> =
            (0..block).map(|_| (0..d).map(|_| Complex64::new(rng.random::<f64>() - 0.5, 0.0)).collect()).collect();
        loop {
            let mut added = 0;
            for mut v in next.drain(..) {
                for _ in 0..2 {
                    for u in &q {
                        let c = inner(u, &v);
                        for (vi, ui) in v.iter_mut().zip(u) {
                            *vi -= c * ui;
                        }
                    }
                }
                let nrm = inner(&v, &v).re.sqrt();
                if nrm < 1e-10 {
                    continue;
                }
                for vi in &mut v {
                    *vi /= nrm;
                }
                aq.push(self.matvec(&v));
                q.push(v);
                added += 1;
            }
            let m = q.len();
            let t = DMatrix::<Complex64>::from_fn(m, m, |i, j| inner(&q[i], &aq[j]));
            let t = (&t + t.adjoint()) * Complex64::new(0.5, 0.0);
            let eig = SymmetricEigen::new(t);
            let order = ascending(eig.eigenvalues.as_slice());
            let mut out = Vec::with_capacity(count);
            let mut converged = true;
            for &i in order.iter().take(count) {
                let y: DVector<Complex64> = eig.eigenvectors.column(i).into();
                let theta = eig.eigenvalues[i];
                let mut x = vec![ZERO; d];
                let mut r = vec![ZERO; d];
                for k in 0..m {
                    for idx in 0..d {
                        x[idx] += y[k] * q[k][idx];
                        r[idx] += y[k] * aq[k][idx];
                    }
                }
                let res: f64 = r.iter().zip(&x).map(|(ri, xi)| (ri - xi * theta).norm_sqr()).sum::<f64>().sqrt();
                if res > KRYLOV_TOL {
                    converged = false;
                }
                out.push((theta, x));
            }
            if (converged && m >= count) || m >= d || added == 0 {
                if !converged && m < d {
                    return Err(Error::Invalid("Krylov iteration stalled".into()));
                }
                return Ok(out);
            }
            next = aq[m - added..].to_vec();
        }
    }
}

fn ascending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    idx
}

/// All occupations of `n_modes` with exactly `n_electrons` set bits, ascending.
pub fn occupations_with_weight(n_modes: usize, n_electrons: usize) -> Vec<u64> {
    if n_electrons > n_modes {
        return Vec::new();
    }
    if n_electrons == 0 {
        return vec![0];
    }
    let mut out = Vec::new();
    // Gosper's hack
    let mut v: u64 = (1u64 << n_electrons) - 1;
    let limit = 1u64 << n_modes;
    while v < limit {
        out.push(v);
        let c = v & v.wrapping_neg();
        let r = v + c;
        v = (((r ^ v) >> 2) / c) | r;
    }
    out
}

/// Lowest `count` eigenstates of `h` among states with `n_electrons` particles.
pub fn lowest_eigenstates(
    h: &PauliPolynomial,
    mapping: Mapping,
    n_electrons: usize,
    count: usize,
) -> Result<Vec<WaveVector>> {
    let n = h.n_qubits();
    let basis = occupations_with_weight(n, n_electrons).into_iter().map(|o| mapping.basis_of(n, o)).collect();
    SubspaceMatrix::new(h, basis)?.lowest(count)
}

/// Reference plus all single and double substitutions, as occupation bit strings.
pub fn cisd_occupations(n_modes: usize, reference: u64) -> Vec<u64> {
    let occ: Vec<usize> = (0..n_modes).filter(|p| reference >> p & 1 == 1).collect();
    let virt: Vec<usize> = (0..n_modes).filter(|p| reference >> p & 1 == 0).collect();
    let mut out = vec![reference];
    for &i in &occ {
        for &a in &virt {
            out.push(reference ^ (1 << i) ^ (1 << a));
        }
    }
    for (x, &i) in occ.iter().enumerate() {
        for &j in &occ[x + 1..] {
            for (y, &a) in virt.iter().enumerate() {
                for &b in &virt[y + 1..] {
                    out.push(reference ^ (1 << i) ^ (1 << j) ^ (1 << a) ^ (1 << b));
                }
            }
        }
    }
    out
}

/// Lowest `count` eigenvectors of `h` in the CISD space of `reference`.
pub fn cisd_states(h: &PauliPolynomial, mapping: Mapping, reference: u64, count: usize) -> Result<Vec<WaveVector>> {
    let n = h.n_qubits();
    if reference >> n != 0 {
        return Err(Error::Invalid("reference occupies modes outside the register".into()));
    }
    let basis = cisd_occupations(n, reference).into_iter().map(|o| mapping.basis_of(n, o)).collect();
    SubspaceMatrix::new(h, basis)?.lowest(count)
}
