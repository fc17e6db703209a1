//! Choice of the F³ fluid coefficients.
//!
//! With `A_α` a two-electron fragment, `B_α` its diagonal one-body part and `H₁` the
//! one-electron term, the collected fragments are `A_α − c_α B_α` and `H₁ + Σ c_α B_α`,
//! so every fragment variance is a quadratic in `c` whose coefficients are covariances
//! on the proxy ensemble, computed once.

use std::sync::{Arc, Mutex};

use argmin::core::observers::{Observe, ObserverMode};
use argmin::core::{CostFunction, Error as ArgminError, Executor, Gradient, State, KV};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::neldermead::NelderMead;
use argmin::solver::quasinewton::BFGS;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{to_occupation_basis, FermionicFragment, LowRank};
use crate::error::{Error, Result};
use crate::fermion::Mapping;
use crate::state::WaveVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Bfgs,
    NelderMead,
}

#[derive(Clone, Copy, Debug)]
pub struct F3Options {
    pub max_iters: u64,
    /// Stop once the objective changes by less than this fraction.
    pub rel_tol: f64,
}

impl Default for F3Options {
    fn default() -> Self {
        Self { max_iters: 500, rel_tol: 1e-6 }
    }
}

#[derive(Clone, Debug)]
pub struct F3Result {
    pub coefficients: Vec<f64>,
    /// `(Σ_β √Var_β)²` at the returned coefficients.
    pub cost: f64,
    pub cost_at_zero: f64,
    /// Objective at the start and after every accepted iterate.
    pub history: Vec<f64>,
    pub optimizer: OptimizerKind,
    /// Set when the quasi-Newton run failed and the simplex result is returned.
    pub flagged: bool,
}

/// Quadratic forms of all fragment variances in `c`.
#[derive(Clone, Debug)]
pub(crate) struct VarianceTables {
    var_a: Vec<f64>,
    cov_ab: Vec<f64>,
    var_b: Vec<f64>,
    var_h: f64,
    cov_hb: Vec<f64>,
    cov_bb: Vec<Vec<f64>>,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum()
}

impl VarianceTables {
    pub(crate) fn new(lr: &LowRank, states: &[WaveVector], weights: &[f64], mapping: Mapping) -> Result<Self> {
        if states.len() != weights.len() {
            return Err(Error::DimensionMismatch(states.len(), weights.len()));
        }
        let l = lr.fragments.len();
        let h1 = FermionicFragment::from_one_body(&lr.one_body)?;
        let diag: Vec<FermionicFragment> = lr.fragments.iter().map(|f| f.diagonal_part()).collect();
        // Per state: ψ, H₁ψ, A_αψ, B_αψ in the occupation basis.
        type Images = (Vec<Complex64>, Vec<Complex64>, Vec<Vec<Complex64>>, Vec<Vec<Complex64>>);
        let images: Vec<Images> = states
            .par_iter()
            .map(|s| {
                let psi = to_occupation_basis(s, mapping);
                let h = h1.apply(s, mapping)?;
                let a = lr.fragments.iter().map(|f| f.apply(s, mapping)).collect::<Result<_>>()?;
                let b = diag.iter().map(|f| f.apply(s, mapping)).collect::<Result<_>>()?;
                Ok((psi, h, a, b))
            })
            .collect::<Result<_>>()?;
        let mean = |pick: &dyn Fn(&Images) -> &Vec<Complex64>| -> f64 {
            images.iter().zip(weights).map(|(im, w)| w * dot(&im.0, pick(im))).sum()
        };
        let second = |x: &dyn Fn(&Images) -> &Vec<Complex64>, y: &dyn Fn(&Images) -> &Vec<Complex64>| -> f64 {
            images.iter().zip(weights).map(|(im, w)| w * dot(x(im), y(im))).sum()
        };
        let mh = mean(&|im| &im.1);
        let ma: Vec<f64> = (0..l).map(|a| mean(&|im| &im.2[a])).collect();
        let mb: Vec<f64> = (0..l).map(|a| mean(&|im| &im.3[a])).collect();
        let var_h = second(&|im| &im.1, &|im| &im.1) - mh * mh;
        let var_a = (0..l).map(|a| second(&|im| &im.2[a], &|im| &im.2[a]) - ma[a] * ma[a]).collect();
        let var_b = (0..l).map(|a| second(&|im| &im.3[a], &|im| &im.3[a]) - mb[a] * mb[a]).collect();
        let cov_ab = (0..l).map(|a| second(&|im| &im.2[a], &|im| &im.3[a]) - ma[a] * mb[a]).collect();
        let cov_hb = (0..l).map(|a| second(&|im| &im.1, &|im| &im.3[a]) - mh * mb[a]).collect();
        let cov_bb =
            (0..l).map(|a| (0..l).map(|b| second(&|im| &im.3[a], &|im| &im.3[b]) - mb[a] * mb[b]).collect()).collect();
        Ok(Self { var_a, cov_ab, var_b, var_h, cov_hb, cov_bb })
    }

    /// Variances of the one-electron fragment followed by every two-electron fragment.
    pub(crate) fn variances(&self, c: &[f64]) -> Vec<f64> {
        let l = c.len();
        let mut v0 = self.var_h;
        for a in 0..l {
            v0 += 2.0 * c[a] * self.cov_hb[a];
            for b in 0..l {
                v0 += c[a] * c[b] * self.cov_bb[a][b];
            }
        }
        let mut out = Vec::with_capacity(l + 1);
        out.push(v0.max(0.0));
        for a in 0..l {
            out.push((self.var_a[a] - 2.0 * c[a] * self.cov_ab[a] + c[a] * c[a] * self.var_b[a]).max(0.0));
        }
        out
    }

    pub(crate) fn cost(&self, c: &[f64]) -> f64 {
        let s: f64 = self.variances(c).iter().map(|v| v.sqrt()).sum();
        s * s
    }

    pub(crate) fn gradient(&self, c: &[f64]) -> Vec<f64> {
        let l = c.len();
        let v = self.variances(c);
        let s: f64 = v.iter().map(|x| x.sqrt()).sum();
        // a vanished variance sits at the bottom of its parabola; take the zero subgradient
        let floor = 1e-14 * s * s;
        let inv: Vec<f64> = v.iter().map(|x| if *x > floor { 1.0 / x.sqrt() } else { 0.0 }).collect();
        (0..l)
            .map(|a| {
                let mut d0 = 2.0 * self.cov_hb[a];
                for b in 0..l {
                    d0 += 2.0 * c[b] * self.cov_bb[a][b];
                }
                let da = -2.0 * self.cov_ab[a] + 2.0 * c[a] * self.var_b[a];
                // d(S²) = 2S Σ dV/(2√V)
                s * (d0 * inv[0] + da * inv[a + 1])
            })
            .collect()
    }
}

struct Objective<'a>(&'a VarianceTables);

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, c: &Self::Param) -> std::result::Result<f64, ArgminError> {
        Ok(self.0.cost(c))
    }
}

impl Gradient for Objective<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, c: &Self::Param) -> std::result::Result<Vec<f64>, ArgminError> {
        Ok(self.0.gradient(c))
    }
}

#[derive(Clone, Default)]
struct History(Arc<Mutex<Vec<f64>>>);

impl<I: State<Float = f64>> Observe<I> for History {
    fn observe_iter(&mut self, state: &I, _kv: &KV) -> std::result::Result<(), ArgminError> {
        self.0.lock().expect("history lock").push(state.get_cost());
        Ok(())
    }
}

fn run_bfgs(t: &VarianceTables, l: usize, opts: F3Options, cost0: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let history = History::default();
    let eye: Vec<Vec<f64>> = (0..l).map(|i| (0..l).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let solver = BFGS::new(MoreThuenteLineSearch::new())
        .with_tolerance_cost(opts.rel_tol * cost0)
        .ok()?
        .with_tolerance_grad(1e-10 * cost0.max(1e-300))
        .ok()?;
    let res = Executor::new(Objective(t), solver)
        .configure(|s| s.param(vec![0.0; l]).inv_hessian(eye).max_iters(opts.max_iters))
        .add_observer(history.clone(), ObserverMode::Always)
        .run()
        .ok()?;
    let best = res.state.get_best_param()?.clone();
    let trace = history.0.lock().expect("history lock").clone();
    best.iter().all(|x| x.is_finite()).then_some((best, trace))
}

fn run_simplex(t: &VarianceTables, l: usize, opts: F3Options) -> Result<(Vec<f64>, Vec<f64>)> {
    let history = History::default();
    let mut vertices = vec![vec![0.0; l]];
    for i in 0..l {
        let mut v = vec![0.0; l];
        v[i] = 0.5;
        vertices.push(v);
    }
    let solver = NelderMead::new(vertices).with_sd_tolerance(1e-12).map_err(|e| Error::Invalid(e.to_string()))?;
    let res = Executor::new(Objective(t), solver)
        .configure(|s| s.max_iters(opts.max_iters * 10))
        .add_observer(history.clone(), ObserverMode::Always)
        .run()
        .map_err(|e| Error::Invalid(e.to_string()))?;
    let best = res.state.get_best_param().cloned().unwrap_or_else(|| vec![0.0; l]);
    let trace = history.0.lock().expect("history lock").clone();
    Ok((best, trace))
}

/// Minimizes `(Σ_β √Var_ρ(F_β))²` over the fluid coefficients, starting from `c = 0`;
/// `states` and `weights` define the proxy ensemble (one state for the ground task).
pub fn f3_optimize(
    lr: &LowRank,
    states: &[WaveVector],
    weights: &[f64],
    mapping: Mapping,
    opts: F3Options,
) -> Result<F3Result> {
    let l = lr.fragments.len();
    let t = VarianceTables::new(lr, states, weights, mapping)?;
    let zero = vec![0.0; l];
    let cost0 = t.cost(&zero);
    if l == 0 || cost0 == 0.0 {
        return Ok(F3Result {
            coefficients: zero,
            cost: cost0,
            cost_at_zero: cost0,
            history: vec![cost0],
            optimizer: OptimizerKind::Bfgs,
            flagged: false,
        });
    }
    let (mut c, trace, optimizer, flagged) = match run_bfgs(&t, l, opts, cost0) {
        Some((c, trace)) => (c, trace, OptimizerKind::Bfgs, false),
        None => {
            let (c, trace) = run_simplex(&t, l, opts)?;
            (c, trace, OptimizerKind::NelderMead, true)
        }
    };
    if !(t.cost(&c) <= cost0) {
        c = zero;
    }
    let cost = t.cost(&c);
    let mut history = vec![cost0];
    for v in trace {
        // simplex iterations report the best vertex, line searches only accepted points
        let last = *history.last().expect("non-empty");
        history.push(v.min(last));
    }
    history.push(cost.min(*history.last().expect("non-empty")));
    Ok(F3Result { coefficients: c, cost, cost_at_zero: cost0, history, optimizer, flagged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragments::{f3_collect, fragment_ensemble_variance, lr_decompose, OccupationPolynomial};
    use crate::molecular::MolecularIntegrals;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy() -> MolecularIntegrals {
        let mut mi = MolecularIntegrals::zeros(2, 2);
        mi.one_body = DMatrix::from_row_slice(2, 2, &[-1.2, 0.15, 0.15, -0.4]);
        mi.set_eri_symmetric(0, 0, 0, 0, 0.65);
        mi.set_eri_symmetric(1, 1, 1, 1, 0.7);
        mi.set_eri_symmetric(0, 0, 1, 1, 0.6);
        mi.set_eri_symmetric(0, 1, 0, 1, 0.18);
        mi.set_eri_symmetric(0, 0, 0, 1, 0.05);
        mi
    }

    fn states(seed: u64) -> Vec<WaveVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..3)
            .map(|_| {
                let amps = (0..16)
                    .map(|b: u32| {
                        if b.count_ones() == 2 {
                            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    })
                    .collect();
                WaveVector::new(4, amps).unwrap().normalized()
            })
            .collect()
    }

    #[test]
    fn tables_match_direct_variances() {
        let lr = lr_decompose(&toy(), 1e-8).unwrap();
        let s = states(1);
        let w = vec![0.5, 0.3, 0.2];
        let t = VarianceTables::new(&lr, &s, &w, Mapping::Jw).unwrap();
        let c: Vec<f64> = (0..lr.fragments.len()).map(|i| 0.3 + 0.2 * i as f64).collect();
        let (one, frags) = f3_collect(&lr.fragments, &lr.one_body, &c).unwrap();
        let mut direct = vec![fragment_ensemble_variance(&one, &s, &w, Mapping::Jw).unwrap()];
        for f in &frags {
            direct.push(fragment_ensemble_variance(f, &s, &w, Mapping::Jw).unwrap());
        }
        for (a, b) in t.variances(&c).iter().zip(&direct) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let lr = lr_decompose(&toy(), 1e-8).unwrap();
        let t = VarianceTables::new(&lr, &states(2), &[0.4, 0.4, 0.2], Mapping::Jw).unwrap();
        let c: Vec<f64> = (0..lr.fragments.len()).map(|i| 0.1 * i as f64 - 0.2).collect();
        let g = t.gradient(&c);
        for i in 0..c.len() {
            let h = 1e-6;
            let mut up = c.clone();
            up[i] += h;
            let mut dn = c.clone();
            dn[i] -= h;
            let fd = (t.cost(&up) - t.cost(&dn)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()), "{fd} vs {}", g[i]);
        }
    }

    #[test]
    fn optimization_never_loses_to_zero() {
        let lr = lr_decompose(&toy(), 1e-8).unwrap();
        let r = f3_optimize(&lr, &states(3), &[1.0 / 3.0; 3], Mapping::Jw, F3Options::default()).unwrap();
        assert!(r.cost <= r.cost_at_zero);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn fragment_without_diagonal_ignores_its_coefficient() {
        let mut poly = OccupationPolynomial::zeros(2);
        poly.quadratic = DMatrix::from_row_slice(2, 2, &[0.0, 0.3, 0.3, 0.0]);
        let f = FermionicFragment::new(DMatrix::identity(2, 2), poly).unwrap();
        let lr = LowRank {
            one_body: DMatrix::from_row_slice(2, 2, &[-1.0, 0.1, 0.1, 0.2]),
            fragments: vec![f],
            reconstruction_error: 0.0,
        };
        let s = states(4);
        let t = VarianceTables::new(&lr, &s, &[1.0 / 3.0; 3], Mapping::Jw).unwrap();
        assert!((t.cost(&[0.0]) - t.cost(&[2.5])).abs() < 1e-12);
    }
}
