mod common;

use common::{determinant_ci_energies, fci_reference, load};
use qmeasure::fermion::{FermionPolynomial, Mapping};
use qmeasure::molecular::{
    build_cis_operators, build_electronic_hamiltonian, build_qse_observables, parse_fcidump, write_fcidump,
    MolecularIntegrals, ObservableKind, QseForm,
};
use qmeasure::state::lowest_eigenstates;

#[test]
fn h2_header_fields() {
    let mi = load("h2");
    assert_eq!(mi.n_spatial, 2);
    assert_eq!(mi.n_electrons, 2);
    assert!(mi.symmetry_defect() < 1e-14);
}

#[test]
fn reduced_dump_reconstructs_full_tensor() {
    let mi = load("h4");
    let full = parse_fcidump(write_fcidump(&mi, false).as_bytes()).unwrap();
    let reduced = parse_fcidump(write_fcidump(&mi, true).as_bytes()).unwrap();
    assert_eq!(full, reduced);
    assert_eq!(full, mi);
    assert!(write_fcidump(&mi, true).lines().count() < write_fcidump(&mi, false).lines().count());
}

#[test]
fn json_and_fcidump_agree() {
    let mi = load("lih");
    let text = serde_json::to_string(&mi.to_json()).unwrap();
    let back = MolecularIntegrals::from_json_str(&text).unwrap();
    assert_eq!(back.one_body, mi.one_body);
    assert_eq!(back.supermatrix(), mi.supermatrix());
}

#[test]
fn fci_energy_matches_determinant_oracle() {
    for molecule in ["h2", "h3p", "h4"] {
        let mi = load(molecule);
        let oracle = determinant_ci_energies(&mi);
        let h = build_electronic_hamiltonian(&mi);
        for mapping in [Mapping::Jw, Mapping::Bk] {
            let q = mapping.encode(&h).unwrap();
            let states = lowest_eigenstates(&q, mapping, mi.n_electrons, 3).unwrap();
            for (s, e) in states.iter().zip(&oracle) {
                assert!((s.energy.unwrap() - e).abs() < 1e-8, "{molecule} {mapping:?}");
            }
            let total = states[0].energy.unwrap() + mi.nuclear_repulsion;
            assert!((total - fci_reference(molecule)).abs() < 1e-8, "{molecule}: {total}");
        }
    }
}

#[test]
fn hamiltonian_conserves_number() {
    let mi = load("h3p");
    let h = build_electronic_hamiltonian(&mi);
    let mut n = FermionPolynomial::new(mi.n_modes());
    for p in 0..mi.n_modes() {
        n.add(1.0, &FermionPolynomial::number(mi.n_modes(), p).unwrap()).unwrap();
    }
    let mut comm = h.multiply(&n).unwrap();
    comm.add(-1.0, &n.multiply(&h).unwrap()).unwrap();
    assert!(comm.iter().all(|(_, c)| c.abs() < 1e-12));
}

#[test]
fn h2_qse_counts() {
    let mi = load("h2");
    let h = build_electronic_hamiltonian(&mi);
    let jw = Mapping::Jw.encode(&h).unwrap();
    assert_eq!(jw.n_paulis(), 14);
    let ops = build_cis_operators(mi.n_electrons, mi.n_modes()).unwrap();
    let set = build_qse_observables(&h, &ops, Mapping::Jw, QseForm::Complex).unwrap();
    assert_eq!(set.n_op(), 30);
    assert_eq!(set.n_p(), 127);
    let herm = build_qse_observables(&h, &ops, Mapping::Jw, QseForm::Hermitian).unwrap();
    assert_eq!(herm.n_p(), 71);
    for n in 0..set.n_op() {
        assert_eq!(set.reconstruct(n), *set.observable(n));
    }
    let first = set.labels()[0];
    assert_eq!((first.i, first.j, first.kind), (0, 0, ObservableKind::HamiltonianDressed));
    assert_eq!(*set.observable(0), jw.to_sum());
}
