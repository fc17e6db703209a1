//! Fermionic measurement fragments: low-rank factorization of the two-electron tensor
//! into fragments `W_α p_α(N̂) W_α†` diagonal in rotated orbitals, and fluid fermionic
//! fragments (F³), which move each fragment's diagonal one-body part into a single
//! collected one-electron fragment.
//!
//! Fragments are spin-restricted: rotations act identically on both spins and the
//! polynomials are in spatial occupations `N_p = n_pα + n_pβ`.

mod optimize;
mod orbitals;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{FermionPolynomial, Ladder, Mapping};
use crate::molecular::{effective_one_body, spin_orbital, MolecularIntegrals};
use crate::state::WaveVector;

pub use optimize::{f3_optimize, F3Options, F3Result, OptimizerKind};
pub use orbitals::{rotate_occupation_state, rotation_generator, Givens, GivensNetwork};

/// Default cutoff on supermatrix eigenvalues.
pub const LR_THRESHOLD: f64 = 1e-8;

/// `constant + Σ_p linear_p N_p + Σ_pq quadratic_pq N_p N_q`.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupationPolynomial {
    pub constant: f64,
    pub linear: DVector<f64>,
    pub quadratic: DMatrix<f64>,
}

impl OccupationPolynomial {
    pub fn zeros(n_spatial: usize) -> Self {
        Self { constant: 0.0, linear: DVector::zeros(n_spatial), quadratic: DMatrix::zeros(n_spatial, n_spatial) }
    }

    pub fn n_spatial(&self) -> usize {
        self.linear.len()
    }

    /// Value on an occupation bit string over interleaved spin-orbitals.
    pub fn evaluate(&self, occupation: u64) -> f64 {
        let n = self.n_spatial();
        let occ: Vec<f64> = (0..n).map(|p| ((occupation >> (2 * p)) & 0b11).count_ones() as f64).collect();
        let mut v = self.constant;
        for p in 0..n {
            if occ[p] == 0.0 {
                continue;
            }
            v += self.linear[p] * occ[p];
            for q in 0..n {
                v += self.quadratic[(p, q)] * occ[p] * occ[q];
            }
        }
        v
    }
}

/// `W(U) p(N̂) W(U)†` with `W a†_{qσ} W† = Σ_p U_pq a†_{pσ}`.
#[derive(Clone, Debug)]
pub struct FermionicFragment {
    /// Proper rotation `U` (spatial orbitals).
    pub orbitals: DMatrix<f64>,
    /// Antisymmetric `θ` with `exp(θ) = U`.
    pub generator: DMatrix<f64>,
    pub polynomial: OccupationPolynomial,
    /// Fluid coefficient `c_α` used when the fragment was last collected.
    pub fluid: f64,
    network: GivensNetwork,
}

impl FermionicFragment {
    pub fn new(orbitals: DMatrix<f64>, polynomial: OccupationPolynomial) -> Result<Self> {
        if orbitals.nrows() != polynomial.n_spatial() {
            return Err(Error::DimensionMismatch(orbitals.nrows(), polynomial.n_spatial()));
        }
        let generator = rotation_generator(&orbitals)?;
        let network = GivensNetwork::factor(&orbitals)?;
        Ok(Self { orbitals, generator, polynomial, fluid: 0.0, network })
    }

    /// Diagonalizes a symmetric one-body matrix `Σ_pq m_pq E_pq` into a fragment.
    pub fn from_one_body(m: &DMatrix<f64>) -> Result<Self> {
        let (u, eps) = proper_eigen(m);
        let mut poly = OccupationPolynomial::zeros(m.nrows());
        poly.linear = eps;
        Self::new(u, poly)
    }

    pub fn n_spatial(&self) -> usize {
        self.orbitals.nrows()
    }

    pub fn with_polynomial(&self, polynomial: OccupationPolynomial) -> Self {
        Self { polynomial, ..self.clone() }
    }

    /// The fragment's diagonal one-body part `Σ_p λ_pp N_p` in its own frame.
    pub fn diagonal_part(&self) -> Self {
        let mut poly = OccupationPolynomial::zeros(self.n_spatial());
        poly.linear = self.polynomial.quadratic.diagonal();
        self.with_polynomial(poly)
    }

    /// `U diag(d) Uᵀ`: the lab-frame one-body matrix of `Σ_p d_p N_p` in this frame.
    pub fn lab_one_body(&self, d: &DVector<f64>) -> DMatrix<f64> {
        &self.orbitals * DMatrix::from_diagonal(d) * self.orbitals.transpose()
    }

    /// Second-quantized operator over `2·n_spatial` spin-orbitals (small systems only).
    pub fn to_fermion(&self) -> Result<FermionPolynomial> {
        let n = self.n_spatial();
        let modes = 2 * n;
        let rotated: Vec<FermionPolynomial> = (0..n)
            .map(|k| {
                let mut products = Vec::new();
                for r in 0..n {
                    for s in 0..n {
                        let v = self.orbitals[(r, k)] * self.orbitals[(s, k)];
                        if v == 0.0 {
                            continue;
                        }
                        for sigma in 0..2 {
                            products.push((
                                vec![
                                    Ladder::create(spin_orbital(r, sigma)),
                                    Ladder::annihilate(spin_orbital(s, sigma)),
                                ],
                                v,
                            ));
                        }
                    }
                }
                FermionPolynomial::from_products(modes, products)
            })
            .collect::<Result<_>>()?;
        let mut out = FermionPolynomial::new(modes);
        out.add(self.polynomial.constant, &FermionPolynomial::identity(modes))?;
        for p in 0..n {
            out.add(self.polynomial.linear[p], &rotated[p])?;
            for q in 0..n {
                let v = self.polynomial.quadratic[(p, q)];
                if v != 0.0 {
                    out.add(v, &rotated[p].multiply(&rotated[q])?)?;
                }
            }
        }
        Ok(out)
    }

    /// `W† |ψ⟩` in the occupation basis.
    fn to_own_frame(&self, state: &WaveVector, mapping: Mapping) -> Result<Vec<Complex64>> {
        if state.n_qubits != 2 * self.n_spatial() {
            return Err(Error::ModeMismatch(2 * self.n_spatial(), state.n_qubits));
        }
        let mut v = to_occupation_basis(state, mapping);
        rotate_occupation_state(&mut v, &self.network, true);
        Ok(v)
    }

    /// `(⟨F⟩, ⟨F²⟩)` on `state`.
    pub fn moments(&self, state: &WaveVector, mapping: Mapping) -> Result<(f64, f64)> {
        let v = self.to_own_frame(state, mapping)?;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (b, a) in v.iter().enumerate() {
            let w = a.norm_sqr();
            if w == 0.0 {
                continue;
            }
            let f = self.polynomial.evaluate(b as u64);
            m1 += w * f;
            m2 += w * f * f;
        }
        Ok((m1, m2))
    }

    /// `F |ψ⟩` in the occupation basis.
    pub fn apply(&self, state: &WaveVector, mapping: Mapping) -> Result<Vec<Complex64>> {
        let mut v = self.to_own_frame(state, mapping)?;
        for (b, a) in v.iter_mut().enumerate() {
            *a *= self.polynomial.evaluate(b as u64);
        }
        rotate_occupation_state(&mut v, &self.network, false);
        Ok(v)
    }

    pub fn to_json(&self) -> FragmentJson {
        let n = self.n_spatial();
        let generator = (0..n).flat_map(|p| (0..p).map(move |q| (p, q))).map(|(p, q)| self.generator[(p, q)]).collect();
        let polynomial = if self.polynomial.quadratic.iter().all(|v| *v == 0.0) {
            PolynomialJson::Linear {
                constant: self.polynomial.constant,
                linear: self.polynomial.linear.iter().copied().collect(),
            }
        } else {
            PolynomialJson::Quadratic {
                constant: self.polynomial.constant,
                linear: self.polynomial.linear.iter().copied().collect(),
                quadratic: self.polynomial.quadratic.row_iter().map(|r| r.iter().copied().collect()).collect(),
            }
        };
        FragmentJson { generator, polynomial, c: self.fluid }
    }

    /// Rebuilds a fragment from its generator, keeping the stored generator as is.
    pub fn from_json(raw: &FragmentJson) -> Result<Self> {
        let (constant, linear, quadratic) = match &raw.polynomial {
            PolynomialJson::Linear { constant, linear } => (*constant, linear.clone(), None),
            PolynomialJson::Quadratic { constant, linear, quadratic } => (*constant, linear.clone(), Some(quadratic)),
        };
        let n = linear.len();
        if raw.generator.len() != n * n.saturating_sub(1) / 2 {
            return Err(Error::DimensionMismatch(raw.generator.len(), n * n.saturating_sub(1) / 2));
        }
        let mut theta = DMatrix::zeros(n, n);
        let mut it = raw.generator.iter();
        for p in 0..n {
            for q in 0..p {
                let v = *it.next().expect("length checked");
                theta[(p, q)] = v;
                theta[(q, p)] = -v;
            }
        }
        let mut poly = OccupationPolynomial::zeros(n);
        poly.constant = constant;
        poly.linear = DVector::from_vec(linear);
        if let Some(rows) = quadratic {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::Invalid("quadratic block must be square".into()));
            }
            poly.quadratic = DMatrix::from_fn(n, n, |p, q| rows[p][q]);
        }
        let mut f = Self::new(theta.clone().exp(), poly)?;
        f.generator = theta;
        f.fluid = raw.c;
        Ok(f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolynomialJson {
    Linear { constant: f64, linear: Vec<f64> },
    Quadratic { constant: f64, linear: Vec<f64>, quadratic: Vec<Vec<f64>> },
}

/// Generator as the strict lower triangle, row by row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FragmentJson {
    pub generator: Vec<f64>,
    pub polynomial: PolynomialJson,
    pub c: f64,
}

/// Amplitudes reindexed by occupation bit string.
pub fn to_occupation_basis(state: &WaveVector, mapping: Mapping) -> Vec<Complex64> {
    match mapping {
        Mapping::Jw => state.amplitudes.clone(),
        Mapping::Bk => {
            let n = state.n_qubits;
            let mut v = vec![Complex64::new(0.0, 0.0); state.dim()];
            for (b, a) in state.amplitudes.iter().enumerate() {
                v[mapping.occupation_of(n, b as u64) as usize] = *a;
            }
            v
        }
    }
}

/// Eigenvectors as a proper rotation (det +1) with their eigenvalues.
fn proper_eigen(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut u = eig.eigenvectors;
    if u.determinant() < 0.0 {
        u.column_mut(0).neg_mut();
    }
    (u, eig.eigenvalues)
}

/// Low-rank split of the Hamiltonian: `H = Σ_pq h'_pq E_pq + Σ_α F_α + const`.
#[derive(Clone, Debug)]
pub struct LowRank {
    /// Spatial one-body matrix `h'`.
    pub one_body: DMatrix<f64>,
    pub fragments: Vec<FermionicFragment>,
    /// Largest entry of the discarded part of the supermatrix.
    pub reconstruction_error: f64,
}

/// Eigendecomposition of the `(pq),(rs)` supermatrix; every retained eigenvector `L`
/// gives `½ w (Σ_pq L_pq E_pq)²`, diagonal in the eigenbasis of `L`.
pub fn lr_decompose(mi: &MolecularIntegrals, threshold: f64) -> Result<LowRank> {
    let n = mi.n_spatial;
    let v = mi.supermatrix();
    let asym = (&v - v.transpose()).amax();
    if asym > 1e-10 {
        return Err(Error::NotSymmetric(asym));
    }
    let eig = SymmetricEigen::new(v.clone());
    let mut fragments = Vec::new();
    let mut kept = DMatrix::zeros(n * n, n * n);
    for (l, w) in eig.eigenvalues.iter().enumerate() {
        if w.abs() < threshold {
            continue;
        }
        let col = eig.eigenvectors.column(l);
        kept += col * col.transpose() * *w;
        let mat = DMatrix::from_fn(n, n, |p, q| col[p * n + q]);
        let sym = (&mat + mat.transpose()) * 0.5;
        let (u, eps) = proper_eigen(&sym);
        let mut poly = OccupationPolynomial::zeros(n);
        poly.quadratic = &eps * eps.transpose() * (0.5 * w);
        fragments.push(FermionicFragment::new(u, poly)?);
    }
    let reconstruction_error = if n == 0 { 0.0 } else { (&v - kept).amax() };
    Ok(LowRank { one_body: effective_one_body(mi), fragments, reconstruction_error })
}

/// F³ collection with fluid coefficients `c`: fragment α loses `c_α Σ_p λ_pp N_p`
/// (exact because it is reabsorbed below), and the collected one-electron fragment
/// diagonalizes `h' + Σ_α c_α U_α diag(λ_α) U_αᵀ`.
pub fn f3_collect(
    fragments: &[FermionicFragment],
    one_body: &DMatrix<f64>,
    c: &[f64],
) -> Result<(FermionicFragment, Vec<FermionicFragment>)> {
    if c.len() != fragments.len() {
        return Err(Error::DimensionMismatch(c.len(), fragments.len()));
    }
    let mut total = one_body.clone();
    let mut out = Vec::with_capacity(fragments.len());
    for (f, &ca) in fragments.iter().zip(c) {
        let d = f.polynomial.quadratic.diagonal();
        total += f.lab_one_body(&d) * ca;
        let mut poly = f.polynomial.clone();
        poly.linear -= &d * ca;
        let mut g = f.with_polynomial(poly);
        g.fluid = ca;
        out.push(g);
    }
    let total = (&total + total.transpose()) * 0.5;
    Ok((FermionicFragment::from_one_body(&total)?, out))
}

/// Variance of a fragment on one state.
pub fn fragment_variance(fragment: &FermionicFragment, state: &WaveVector, mapping: Mapping) -> Result<f64> {
    let (m1, m2) = fragment.moments(state, mapping)?;
    Ok((m2 - m1 * m1).max(0.0))
}

/// Variance over the trace-1 mixture `Σ_i w_i |ψ_i⟩⟨ψ_i|`.
pub fn fragment_ensemble_variance(
    fragment: &FermionicFragment,
    states: &[WaveVector],
    weights: &[f64],
    mapping: Mapping,
) -> Result<f64> {
    if states.len() != weights.len() {
        return Err(Error::DimensionMismatch(states.len(), weights.len()));
    }
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (s, w) in states.iter().zip(weights) {
        let (a, b) = fragment.moments(s, mapping)?;
        m1 += w * a;
        m2 += w * b;
    }
    Ok((m2 - m1 * m1).max(0.0))
}
