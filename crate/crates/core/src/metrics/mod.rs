//! Figures of merit. Every metric is `ε²M(ε) = Σ_α Var(H_α)/m_α` in hartree², so the
//! shot count at accuracy `ε` is the metric divided by `ε²`; with `ε = 10⁻³` the metric
//! read in units of `10⁻⁶` is the count in millions.

mod bench;
mod shots;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::Mapping;
use crate::fragments::{fragment_variance, FermionicFragment, FragmentJson};
use crate::grouping::{group_variances, Ensemble, MeasurementPlan, PlanJson};
use crate::molecular::{ObservableKind, ObservableSet};
use crate::shadows::{frame_resolved_variance, Budget, ShadowScheme};
use crate::state::{apply_sum, inner, WaveVector};

pub use bench::{
    build_strategy, evaluate, evaluate_plan_file, make_plan_file, n_crit_table, run_benchmark, write_reports,
    BenchConfig, BenchmarkResult, Method, MoleculeEntry, NCritRow, PlanFile, Problem, ResultProvenance, StateChoice,
    StrategyOptions, Task,
};
pub use shots::{simulate_plan_shots, ShotSimulation};

/// Default target accuracy in hartree.
pub const DEFAULT_EPSILON: f64 = 1e-3;
/// Default cutoff on overlap eigenvalues in [`solve_qse`].
pub const QSE_THRESHOLD: f64 = 1e-8;

/// Collected fragments (the one-electron fragment first) with their shot shares.
#[derive(Clone, Debug)]
pub struct FragmentPlan {
    pub fragments: Vec<FermionicFragment>,
    pub allocations: Vec<f64>,
    pub mapping: Mapping,
}

/// A way of measuring: deterministic groups, a randomized frame distribution, or
/// fermionic fragments.
#[derive(Clone, Debug)]
pub enum Strategy {
    Plan(MeasurementPlan),
    Shadow { scheme: ShadowScheme, mapping: Mapping, budget: Budget },
    Fragments(FragmentPlan),
}

impl Strategy {
    pub fn n_groups(&self) -> Option<usize> {
        match self {
            Strategy::Plan(p) => Some(p.n_groups()),
            Strategy::Fragments(f) => Some(f.fragments.len()),
            Strategy::Shadow { .. } => None,
        }
    }
}

/// Serialized form of a [`Strategy`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StrategyJson {
    Groups(PlanJson),
    Shadow { scheme: ShadowScheme, frames: Option<usize>, seed: u64 },
    Fragments { fragments: Vec<FragmentJson>, allocations: Vec<f64> },
}

impl Strategy {
    pub fn to_json(&self, set: &ObservableSet) -> StrategyJson {
        match self {
            Strategy::Plan(p) => StrategyJson::Groups(p.to_json(set)),
            Strategy::Shadow { scheme, budget, .. } => match budget {
                Budget::Exact => StrategyJson::Shadow { scheme: *scheme, frames: None, seed: 0 },
                Budget::Frames { count, seed } => {
                    StrategyJson::Shadow { scheme: *scheme, frames: Some(*count), seed: *seed }
                }
            },
            Strategy::Fragments(f) => StrategyJson::Fragments {
                fragments: f.fragments.iter().map(FermionicFragment::to_json).collect(),
                allocations: f.allocations.clone(),
            },
        }
    }

    pub fn from_json(raw: &StrategyJson, set: &ObservableSet, mapping: Mapping) -> Result<Self> {
        Ok(match raw {
            StrategyJson::Groups(p) => Strategy::Plan(MeasurementPlan::from_json(p, set)?),
            StrategyJson::Shadow { scheme, frames, seed } => Strategy::Shadow {
                scheme: *scheme,
                mapping,
                budget: frames.map_or(Budget::Exact, |count| Budget::Frames { count, seed: *seed }),
            },
            StrategyJson::Fragments { fragments, allocations } => {
                if fragments.len() != allocations.len() {
                    return Err(Error::DimensionMismatch(fragments.len(), allocations.len()));
                }
                Strategy::Fragments(FragmentPlan {
                    fragments: fragments.iter().map(FermionicFragment::from_json).collect::<Result<_>>()?,
                    allocations: allocations.clone(),
                    mapping,
                })
            }
        })
    }
}

/// `ε²M(ε)` with its Monte Carlo standard error (zero when exact).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: f64,
    pub stderr: f64,
}

impl Metric {
    /// `M(ε)`.
    pub fn shots(&self, epsilon: f64) -> f64 {
        self.value / (epsilon * epsilon)
    }

    pub fn millions(&self, epsilon: f64) -> f64 {
        self.shots(epsilon) * 1e-6
    }

    pub fn stderr_millions(&self, epsilon: f64) -> f64 {
        self.stderr / (epsilon * epsilon) * 1e-6
    }
}

/// `Σ_α Var_ψ(A_n^(α))/m_α` for every observable.
pub fn per_observable_costs(plan: &MeasurementPlan, set: &ObservableSet, state: &WaveVector) -> Result<Vec<f64>> {
    plan.validate(set)?;
    let ens = Ensemble::pure(state);
    let mut out = vec![0.0; set.n_op()];
    for g in &plan.groups {
        for (n, v) in group_variances(g, set, &ens)? {
            if v == 0.0 {
                continue;
            }
            if g.m <= 0.0 {
                return Err(Error::Invalid("a group with nonzero variance has no shots".into()));
            }
            out[n as usize] += v / g.m;
        }
    }
    Ok(out)
}

fn fragment_cost(plan: &FragmentPlan, state: &WaveVector) -> Result<f64> {
    plan.fragments.iter().zip(&plan.allocations).try_fold(0.0, |acc, (f, m)| {
        let v = fragment_variance(f, state, plan.mapping)?;
        Ok(if v == 0.0 { acc } else { acc + v / m })
    })
}

fn single_observable(set: &ObservableSet) -> Result<()> {
    if set.n_op() != 1 {
        return Err(Error::Invalid(format!("expected a single observable, got {}", set.n_op())));
    }
    Ok(())
}

/// Ground-state metric for the single observable in `set`.
pub fn ground_metric(strategy: &Strategy, set: &ObservableSet, state: &WaveVector) -> Result<Metric> {
    single_observable(set)?;
    match strategy {
        Strategy::Plan(plan) => Ok(Metric { value: per_observable_costs(plan, set, state)?[0], stderr: 0.0 }),
        Strategy::Shadow { scheme, mapping, budget } => {
            let e = frame_resolved_variance(*scheme, set, state, *budget, *mapping)?;
            Ok(Metric { value: e.variances[0], stderr: e.stderr[0] })
        }
        Strategy::Fragments(f) => Ok(Metric { value: fragment_cost(f, state)?, stderr: 0.0 }),
    }
}

/// `max_n Σ_α Var_ψ(A_n^(α))/m_α`.
pub fn qse_metric(strategy: &Strategy, set: &ObservableSet, state: &WaveVector) -> Result<Metric> {
    match strategy {
        Strategy::Plan(plan) => {
            let costs = per_observable_costs(plan, set, state)?;
            Ok(Metric { value: costs.into_iter().fold(0.0, f64::max), stderr: 0.0 })
        }
        Strategy::Shadow { scheme, mapping, budget } => {
            let (value, stderr) = frame_resolved_variance(*scheme, set, state, *budget, *mapping)?.max();
            Ok(Metric { value, stderr })
        }
        Strategy::Fragments(_) => {
            Err(Error::Invalid("fragment plans measure a single Hamiltonian, not QSE matrix elements".into()))
        }
    }
}

/// `Σ_i Σ_α Var_{ψ_i}(H_α)/m_α` with one shared plan.
pub fn mc_metric(strategy: &Strategy, set: &ObservableSet, states: &[WaveVector], n_states: usize) -> Result<Metric> {
    if states.len() != n_states {
        return Err(Error::DimensionMismatch(states.len(), n_states));
    }
    let mut value = 0.0;
    let mut var = 0.0;
    for s in states {
        let m = ground_metric(strategy, set, s)?;
        value += m.value;
        var += m.stderr * m.stderr;
    }
    Ok(Metric { value, stderr: var.sqrt() })
}

/// Smallest `k` with `k·(mc − ground) > qse`.
pub fn n_crit(mc_per_iteration: f64, ground_per_iteration: f64, qse_total: f64) -> Result<u64> {
    let extra = mc_per_iteration - ground_per_iteration;
    if !(extra > 0.0) {
        return Err(Error::Invalid(format!(
            "ensemble cost {mc_per_iteration} does not exceed ground cost {ground_per_iteration}"
        )));
    }
    if qse_total < 0.0 {
        return Err(Error::Invalid("negative QSE cost".into()));
    }
    let k = (qse_total / extra).floor() as u64 + 1;
    // guard against rounding at exact multiples
    Ok(if (k - 1) as f64 * extra > qse_total { k - 1 } else { k })
}

/// QSE matrices `H_IJ = ⟨O_I† H O_J⟩` and `S_IJ = ⟨O_I† O_J⟩` from their observables.
pub fn qse_matrices(set: &ObservableSet, state: &WaveVector) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let values: Vec<Complex64> =
        set.observables().iter().map(|a| inner(&state.amplitudes, &apply_sum(a, &state.amplitudes))).collect();
    qse_matrices_from_values(set, &values)
}

/// Fills both matrices from estimated `⟨A_n⟩`, using Hermiticity for `I > J`.
pub fn qse_matrices_from_values(
    set: &ObservableSet,
    values: &[Complex64],
) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    if values.len() != set.n_op() {
        return Err(Error::DimensionMismatch(values.len(), set.n_op()));
    }
    let d = set.labels().iter().map(|l| l.j + 1).max().unwrap_or(0);
    let mut h = DMatrix::zeros(d, d);
    let mut s = DMatrix::zeros(d, d);
    for (l, v) in set.labels().iter().zip(values) {
        let m = match l.kind {
            ObservableKind::HamiltonianDressed => &mut h,
            ObservableKind::Overlap => &mut s,
            ObservableKind::Hamiltonian => return Err(Error::Invalid("not a QSE observable set".into())),
        };
        m[(l.i, l.j)] = *v;
        m[(l.j, l.i)] = v.conj();
        if l.i == l.j {
            m[(l.i, l.i)] = Complex64::new(v.re, 0.0);
        }
    }
    Ok((h, s))
}

fn hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    (m - m.adjoint()).iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Eigenvalues of the pencil `(H, S)` after dropping `S` eigendirections below
/// `threshold`, ascending. `S` may dip below zero by at most `threshold`.
pub fn solve_qse(h: &DMatrix<Complex64>, s: &DMatrix<Complex64>, threshold: f64) -> Result<Vec<f64>> {
    if h.shape() != s.shape() || h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch(h.nrows(), s.nrows()));
    }
    let scale = s.iter().map(|x| x.norm()).fold(1.0, f64::max);
    for m in [h, s] {
        let d = hermitian_defect(m);
        if d > 1e-10 * scale.max(h.iter().map(|x| x.norm()).fold(0.0, f64::max)) {
            return Err(Error::NonHermitian(d));
        }
    }
    let es = SymmetricEigen::new((s + s.adjoint()) * Complex64::new(0.5, 0.0));
    let lowest = es.eigenvalues.min();
    if lowest < -threshold.max(1e-12 * scale) {
        return Err(Error::IndefiniteOverlap(lowest));
    }
    let kept: Vec<usize> = (0..es.eigenvalues.len()).filter(|&i| es.eigenvalues[i] > threshold).collect();
    if kept.is_empty() {
        return Ok(Vec::new());
    }
    // X = V_kept Λ^{-1/2}; the reduced problem X† H X is ordinary
    let x =
        DMatrix::from_fn(h.nrows(), kept.len(), |r, c| es.eigenvectors[(r, kept[c])] / es.eigenvalues[kept[c]].sqrt());
    let reduced = x.adjoint() * h * &x;
    let reduced = (&reduced + reduced.adjoint()) * Complex64::new(0.5, 0.0);
    let mut out: Vec<f64> = SymmetricEigen::new(reduced).eigenvalues.iter().copied().collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// A matrix entry: a real number or `{"re": .., "im": ..}`.
#[derive(Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Complex { re: f64, im: f64 },
}

/// Parses a square matrix given as nested JSON rows.
pub fn parse_matrix(json: &str) -> Result<DMatrix<Complex64>> {
    let rows: Vec<Vec<Entry>> = serde_json::from_str(json).map_err(|e| Error::Invalid(format!("matrix: {e}")))?;
    let n = rows.len();
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(n, r.len()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| match rows[i][j] {
        Entry::Real(x) => Complex64::new(x, 0.0),
        Entry::Complex { re, im } => Complex64::new(re, im),
    }))
}
