//! Real orbital rotations: Givens factorization, exact action on states, and the
//! antisymmetric generator of a proper rotation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const ORTHOGONALITY_TOL: f64 = 1e-10;

/// One plane rotation `G` with `G_pp = G_qq = c`, `G_qp = s`, `G_pq = −s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Givens {
    pub p: usize,
    pub q: usize,
    pub c: f64,
    pub s: f64,
}

/// `U = G_1 ⋯ G_m · diag(signs)` for an orthogonal `U`.
#[derive(Clone, Debug, PartialEq)]
pub struct GivensNetwork {
    pub rotations: Vec<Givens>,
    pub signs: Vec<f64>,
}

pub fn orthogonality_defect(u: &DMatrix<f64>) -> f64 {
    (u.transpose() * u - DMatrix::identity(u.nrows(), u.ncols())).amax()
}

impl GivensNetwork {
    pub fn factor(u: &DMatrix<f64>) -> Result<Self> {
        let n = u.nrows();
        if u.ncols() != n {
            return Err(Error::DimensionMismatch(n, u.ncols()));
        }
        let defect = orthogonality_defect(u);
        if defect > ORTHOGONALITY_TOL {
            return Err(Error::Invalid(format!("orbital matrix is not orthogonal (defect {defect:.3e})")));
        }
        let mut r = u.clone();
        let mut rotations = Vec::new();
        for j in 0..n {
            for i in j + 1..n {
                let (a, b) = (r[(j, j)], r[(i, j)]);
                if b == 0.0 {
                    continue;
                }
                let h = a.hypot(b);
                let (c, s) = (a / h, b / h);
                // rows j, i ← Gᵀ applied from the left
                for k in 0..n {
                    let (x, y) = (r[(j, k)], r[(i, k)]);
                    r[(j, k)] = c * x + s * y;
                    r[(i, k)] = -s * x + c * y;
                }
                rotations.push(Givens { p: j, q: i, c, s });
            }
        }
        let signs = (0..n).map(|k| r[(k, k)].signum()).collect();
        Ok(Self { rotations, signs })
    }

    /// Dense matrix of the network, for checks.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.signs.len();
        let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.signs.clone()));
        for g in self.rotations.iter().rev() {
            let mut full = DMatrix::identity(n, n);
            full[(g.p, g.p)] = g.c;
            full[(g.q, g.q)] = g.c;
            full[(g.q, g.p)] = g.s;
            full[(g.p, g.q)] = -g.s;
            m = full * m;
        }
        m
    }
}

/// Applies the spin-restricted orbital rotation `W(U)` (or `W(U)†` when `adjoint`) to a
/// state stored in the occupation basis over interleaved spin-orbitals `2p + σ`.
/// `W a†_{qσ} W† = Σ_p U_pq a†_{pσ}`.
pub fn rotate_occupation_state(amps: &mut [Complex64], net: &GivensNetwork, adjoint: bool) {
    // W = W(G_1) ⋯ W(G_m) W(D); the rightmost factor acts first.
    let apply_signs = |amps: &mut [Complex64]| {
        for (p, s) in net.signs.iter().enumerate() {
            if *s < 0.0 {
                let mask = 0b11u64 << (2 * p);
                for (b, a) in amps.iter_mut().enumerate() {
                    if (b as u64 & mask).count_ones() % 2 == 1 {
                        *a = -*a;
                    }
                }
            }
        }
    };
    if adjoint {
        for g in &net.rotations {
            apply_givens(amps, g, true);
        }
        apply_signs(amps);
    } else {
        apply_signs(amps);
        for g in net.rotations.iter().rev() {
            apply_givens(amps, g, false);
        }
    }
}

fn apply_givens(amps: &mut [Complex64], g: &Givens, transpose: bool) {
    let s = if transpose { -g.s } else { g.s };
    for sigma in 0..2 {
        let (p, q) = (2 * g.p + sigma, 2 * g.q + sigma);
        let (lo, hi) = (p.min(q), p.max(q));
        let between = ((1u64 << hi) - 1) & !((1u64 << (lo + 1)) - 1);
        for b in 0..amps.len() as u64 {
            // visit each (p occupied, q empty) pair once
            if b >> p & 1 == 0 || b >> q & 1 == 1 {
                continue;
            }
            let b2 = b ^ (1 << p) ^ (1 << q);
            let sign = if (b & between).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            let (x, y) = (amps[b as usize], amps[b2 as usize]);
            // a†_p ↦ c a†_p + s a†_q and a†_q ↦ c a†_q − s a†_p
            amps[b as usize] = g.c * x - sign * s * y;
            amps[b2 as usize] = sign * s * x + g.c * y;
        }
    }
}

/// Antisymmetric `κ` with `exp(κ) = U` for a proper rotation `U` (det +1).
pub fn rotation_generator(u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = u.nrows();
    let defect = orthogonality_defect(u);
    if defect > ORTHOGONALITY_TOL {
        return Err(Error::Invalid(format!("orbital matrix is not orthogonal (defect {defect:.3e})")));
    }
    if u.determinant() < 0.0 {
        return Err(Error::Invalid("orbital matrix is an improper rotation".into()));
    }
    let (q, t) = u.clone().schur().unpack();
    let mut log = DMatrix::zeros(n, n);
    let mut flipped = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)].abs() > 1e-12 {
            let theta = t[(i + 1, i)].atan2(t[(i, i)]);
            log[(i + 1, i)] = theta;
            log[(i, i + 1)] = -theta;
            i += 2;
        } else {
            if t[(i, i)] < 0.0 {
                flipped.push(i);
            }
            i += 1;
        }
    }
    // det +1 leaves an even number of −1 eigenvalues; pair them into π rotations
    for pair in flipped.chunks(2) {
        if let [a, b] = pair {
            log[(*b, *a)] = std::f64::consts::PI;
            log[(*a, *b)] = -std::f64::consts::PI;
        }
    }
    let k = &q * log * q.transpose();
    Ok((&k - k.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_rotation(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let mut q = a.qr().q();
        if q.determinant() < 0.0 {
            q.column_mut(0).neg_mut();
        }
        q
    }

    #[test]
    fn network_reproduces_the_matrix() {
        for seed in 0..5 {
            let u = random_rotation(5, seed);
            let net = GivensNetwork::factor(&u).unwrap();
            assert!((net.matrix() - &u).amax() < 1e-12);
        }
    }

    #[test]
    fn generator_exponentiates_back() {
        for seed in 0..5 {
            let u = random_rotation(4, seed);
            let k = rotation_generator(&u).unwrap();
            assert!((&k + k.transpose()).amax() < 1e-12);
            assert!((k.exp() - &u).amax() < 1e-10);
        }
        // a half turn in one plane has eigenvalues −1, −1
        let mut u = DMatrix::identity(3, 3);
        u[(0, 0)] = -1.0;
        u[(2, 2)] = -1.0;
        assert!((rotation_generator(&u).unwrap().exp() - &u).amax() < 1e-12);
    }

    #[test]
    fn rotation_round_trip_is_identity() {
        let u = random_rotation(3, 7);
        let net = GivensNetwork::factor(&u).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let orig: Vec<Complex64> =
            (0..64).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let mut v = orig.clone();
        rotate_occupation_state(&mut v, &net, false);
        rotate_occupation_state(&mut v, &net, true);
        for (a, b) in v.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
