use super::integrals::MolecularIntegrals;
use crate::error::{Error, Result};
use crate::fermion::{FermionPolynomial, Ladder};

/// Spin-orbital index of spatial orbital `p` with spin `sigma` (0 = α, 1 = β).
#[inline]
pub fn spin_orbital(p: usize, sigma: usize) -> usize {
    2 * p + sigma
}

/// One-body matrix of the `Σ h' E^p_q + ½ Σ (pq|rs) E^p_q E^r_s` form:
/// `h'_ps = h_ps − ½ Σ_q (pq|qs)` (spatial orbitals).
pub fn effective_one_body(mi: &MolecularIntegrals) -> nalgebra::DMatrix<f64> {
    let n = mi.n_spatial;
    let mut h = mi.one_body.clone();
    for p in 0..n {
        for s in 0..n {
            let mut acc = 0.0;
            for q in 0..n {
                acc += mi.eri(p, q, q, s);
            }
            h[(p, s)] -= 0.5 * acc;
        }
    }
    h
}

/// Electronic Hamiltonian on `2·n_spatial` interleaved spin-orbitals, without nuclear repulsion.
///
/// Written as `Σ h'_PQ E^P_Q + ½ Σ (PQ|RS) E^P_Q E^R_S` with spin-conserving excitations.
pub fn build_electronic_hamiltonian(mi: &MolecularIntegrals) -> FermionPolynomial {
    let n = mi.n_spatial;
    let modes = mi.n_modes();
    let h1 = effective_one_body(mi);
    let mut products: Vec<(Vec<Ladder>, f64)> = Vec::new();
    for p in 0..n {
        for q in 0..n {
            let v = h1[(p, q)];
            if v == 0.0 {
                continue;
            }
            for sigma in 0..2 {
                products.push((
                    vec![Ladder::create(spin_orbital(p, sigma)), Ladder::annihilate(spin_orbital(q, sigma))],
                    v,
                ));
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let v = 0.5 * mi.eri(p, q, r, s);
                    if v == 0.0 {
                        continue;
                    }
                    for sigma in 0..2 {
                        for tau in 0..2 {
                            products.push((
                                vec![
                                    Ladder::create(spin_orbital(p, sigma)),
                                    Ladder::annihilate(spin_orbital(q, sigma)),
                                    Ladder::create(spin_orbital(r, tau)),
                                    Ladder::annihilate(spin_orbital(s, tau)),
                                ],
                                v,
                            ));
                        }
                    }
                }
            }
        }
    }
    FermionPolynomial::from_products(modes, products).expect("indices within register")
}

/// Electronic Hamiltonian plus the nuclear-repulsion constant. The constant is inert for
/// `H` alone but not inside dressed operators `O_I† H O_J`.
pub fn build_molecular_hamiltonian(mi: &MolecularIntegrals) -> FermionPolynomial {
    let mut h = build_electronic_hamiltonian(mi);
    h.add(mi.nuclear_repulsion, &FermionPolynomial::identity(mi.n_modes())).expect("same register");
    h
}

/// `{1} ∪ {E^p_q : q occupied, p virtual}` over the lowest-`n_electrons` reference.
pub fn build_cis_operators(n_electrons: usize, n_modes: usize) -> Result<Vec<FermionPolynomial>> {
    if n_electrons > n_modes {
        return Err(Error::Invalid(format!("{n_electrons} electrons in {n_modes} modes")));
    }
    let mut ops = vec![FermionPolynomial::identity(n_modes)];
    for q in 0..n_electrons {
        for p in n_electrons..n_modes {
            ops.push(FermionPolynomial::excitation(n_modes, p, q)?);
        }
    }
    Ok(ops)
}

/// Number of CIS operators, `1 + n_occ · n_virt`.
pub fn cis_dimension(n_electrons: usize, n_modes: usize) -> usize {
    1 + n_electrons * (n_modes - n_electrons)
}
