//! Independent reference implementations used only by tests.
#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use qmeasure::molecular::MolecularIntegrals;
use qmeasure::pauli::{Letter, PauliPolynomial, PauliProduct};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn load(molecule: &str) -> MolecularIntegrals {
    MolecularIntegrals::load(&data_path(&format!("{molecule}.fcidump"))).unwrap()
}

pub fn fci_reference(molecule: &str) -> f64 {
    let text = std::fs::read_to_string(data_path("fci_reference.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v[molecule].as_f64().or_else(|| v[molecule]["e_fci"].as_f64()).unwrap()
}

/// Dense matrix of a single Pauli letter.
fn letter_matrix(l: Letter) -> DMatrix<Complex64> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    match l {
        Letter::I => DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]),
        Letter::X => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        Letter::Y => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
        Letter::Z => DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
    }
}

/// Kronecker product with qubit 0 as the least significant bit.
pub fn dense_pauli(p: &PauliProduct) -> DMatrix<Complex64> {
    let n = p.n_qubits();
    let mut m = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for q in (0..n).rev() {
        m = m.kronecker(&letter_matrix(p.letter(q)));
    }
    m * p.phase_factor()
}

pub fn dense_polynomial(op: &PauliPolynomial) -> DMatrix<Complex64> {
    let d = 1 << op.n_qubits();
    let mut m = DMatrix::zeros(d, d);
    for (p, c) in op.iter() {
        m += dense_pauli(p) * Complex64::new(*c, 0.0);
    }
    m
}

/// Applies a string of ladder operators (rightmost first) to an occupation bit string.
fn apply_ladders(ops: &[(usize, bool)], mut det: u64) -> Option<(u64, f64)> {
    let mut sign = 1.0;
    for &(p, dagger) in ops.iter().rev() {
        let occupied = det >> p & 1 == 1;
        if occupied == dagger {
            return None;
        }
        if (det & ((1u64 << p) - 1)).count_ones() % 2 == 1 {
            sign = -sign;
        }
        det ^= 1 << p;
    }
    Some((det, sign))
}

/// Determinant-basis CI matrix in the `n_electrons` sector, from raw integrals.
pub fn determinant_ci(mi: &MolecularIntegrals) -> (Vec<u64>, DMatrix<f64>) {
    let n = mi.n_spatial;
    let modes = 2 * n;
    let dets: Vec<u64> = (0..1u64 << modes).filter(|d| d.count_ones() as usize == mi.n_electrons).collect();
    let index: std::collections::HashMap<u64, usize> = dets.iter().enumerate().map(|(i, d)| (*d, i)).collect();
    let mut h = DMatrix::zeros(dets.len(), dets.len());
    for (j, &d) in dets.iter().enumerate() {
        for p in 0..modes {
            for q in 0..modes {
                if p % 2 != q % 2 {
                    continue;
                }
                let v = mi.one_body[(p / 2, q / 2)];
                if let Some((d2, s)) = apply_ladders(&[(p, true), (q, false)], d) {
                    h[(index[&d2], j)] += v * s;
                }
            }
        }
        for p in 0..modes {
            for q in 0..modes {
                if p % 2 != q % 2 {
                    continue;
                }
                for r in 0..modes {
                    for s in 0..modes {
                        if r % 2 != s % 2 {
                            continue;
                        }
                        let v = 0.5 * mi.eri(p / 2, q / 2, r / 2, s / 2);
                        if v == 0.0 {
                            continue;
                        }
                        let ops = [(p, true), (r, true), (s, false), (q, false)];
                        if let Some((d2, sg)) = apply_ladders(&ops, d) {
                            h[(index[&d2], j)] += v * sg;
                        }
                    }
                }
            }
        }
    }
    (dets, h)
}

/// Sorted eigenvalues of the determinant CI matrix.
pub fn determinant_ci_energies(mi: &MolecularIntegrals) -> Vec<f64> {
    let (_, h) = determinant_ci(mi);
    let mut e: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}
