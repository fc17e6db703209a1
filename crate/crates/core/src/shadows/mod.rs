//! Randomized measurement schemes: QWC, global-Clifford and Majorana-pairing classical
//! shadows, and the derandomized QWC scheme.
//!
//! A Pauli covered by a frame with probability `q_k` is reweighted by `1/q_k`, so the
//! single-shot estimator of `A = Σ_k c_k P_k` is unbiased. Its second moment is
//! `Σ_{k,l} c̄_k c_l ⟨P_k P_l⟩ q_{kl} / (q_k q_l)`, where `q_{kl}` is the probability
//! that one frame covers both.
//!
//! Treating every frame as a measurement group with `m_α` equal to its probability gives
//! the frame-resolved variance `Σ_α m_α Var(est | α)`, the same `Σ_α Var(H_α)/m_α`
//! bookkeeping used for deterministic plans. It drops the between-frame spread of the
//! conditional means and replaces `⟨P_k P_l⟩` by the covariance in the pair sum.

mod derand;
mod frames;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::Mapping;
use crate::molecular::ObservableSet;
use crate::pauli::PauliProduct;
use crate::state::{walsh_hadamard, PauliExpectations, WaveVector};

pub use derand::{derand_plan, derandomize, DerandOptions, Derandomized};
pub use frames::{
    double_factorial, enumerate_majorana_frames, enumerate_qwc_frames, sample_clifford_frame, sample_majorana_frame,
    sample_qwc_frame, BasesJson, Decomposer, FrameKind, MeasurementFrame, Tableau,
};

/// Relative standard error above which a Monte Carlo estimate is flagged.
pub const TARGET_REL_STDERR: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShadowScheme {
    QwcCs,
    FcCs,
    MajoranaCs,
}

impl ShadowScheme {
    pub fn name(self) -> &'static str {
        match self {
            ShadowScheme::QwcCs => "qwc-cs",
            ShadowScheme::FcCs => "fc-cs",
            ShadowScheme::MajoranaCs => "majorana-cs",
        }
    }

    pub fn sample_frame<R: Rng + ?Sized>(self, n_qubits: usize, rng: &mut R) -> MeasurementFrame {
        match self {
            ShadowScheme::QwcCs => sample_qwc_frame(n_qubits, rng),
            ShadowScheme::FcCs => sample_clifford_frame(n_qubits, rng),
            ShadowScheme::MajoranaCs => sample_majorana_frame(n_qubits, rng),
        }
    }
}

/// Combinatorial coverage probabilities of a fixed Pauli list under one scheme.
#[derive(Clone, Debug)]
pub struct Coverage {
    scheme: ShadowScheme,
    n_qubits: usize,
    paulis: Vec<PauliProduct>,
    /// Majorana index sets, one bit per index.
    majorana: Vec<u64>,
}

fn popcount(x: u64) -> i64 {
    x.count_ones() as i64
}

impl Coverage {
    pub fn new(scheme: ShadowScheme, paulis: &[PauliProduct], mapping: Mapping) -> Result<Self> {
        let n = paulis.first().map_or(1, PauliProduct::n_qubits);
        let mut majorana = Vec::new();
        if scheme == ShadowScheme::MajoranaCs {
            if n > 32 {
                return Err(Error::TooManyQubits { got: n, max: 32 });
            }
            let d = Decomposer::new((0..2 * n).map(|j| mapping.majorana_image(n, j)).collect())?;
            for p in paulis {
                let s = d.mask(p).expect("Majorana images span every Pauli");
                if s.count_ones() % 2 == 1 {
                    return Err(Error::Invalid(format!("{p} is odd in Majorana operators")));
                }
                majorana.push(s);
            }
        }
        Ok(Self { scheme, n_qubits: n, paulis: paulis.to_vec(), majorana })
    }

    pub fn scheme(&self) -> ShadowScheme {
        self.scheme
    }

    /// Probability that a random frame covers Pauli `k`.
    pub fn single(&self, k: usize) -> f64 {
        let n = self.n_qubits as i64;
        match self.scheme {
            ShadowScheme::QwcCs => 3f64.powi(-(self.paulis[k].weight() as i32)),
            ShadowScheme::FcCs => 1.0 / (2f64.powi(n as i32) + 1.0),
            ShadowScheme::MajoranaCs => {
                let s = popcount(self.majorana[k]);
                double_factorial(s - 1) * double_factorial(2 * n - s - 1) / double_factorial(2 * n - 1)
            }
        }
    }

    /// Probability that one frame covers both `k` and `l`.
    pub fn joint(&self, k: usize, l: usize) -> f64 {
        if k == l {
            return self.single(k);
        }
        let (a, b) = (&self.paulis[k], &self.paulis[l]);
        let n = self.n_qubits as i64;
        match self.scheme {
            ShadowScheme::QwcCs => {
                if a.qwc_unchecked(b) {
                    3f64.powi(-((a.support() | b.support()).count_ones() as i32))
                } else {
                    0.0
                }
            }
            ShadowScheme::FcCs => {
                if a.commutes_unchecked(b) {
                    1.0 / ((2f64.powi(n as i32) + 1.0) * (2f64.powi(n as i32 - 1) + 1.0))
                } else {
                    0.0
                }
            }
            ShadowScheme::MajoranaCs => {
                let (s, t) = (self.majorana[k], self.majorana[l]);
                let parts = [popcount(s & t), popcount(s & !t), popcount(t & !s)];
                if parts.iter().any(|p| p % 2 == 1) {
                    return 0.0;
                }
                let rest = 2 * n - popcount(s | t);
                parts.iter().map(|p| double_factorial(p - 1)).product::<f64>() * double_factorial(rest - 1)
                    / double_factorial(2 * n - 1)
            }
        }
    }
}

/// How the expectation over frames is taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Budget {
    /// Closed-form average over the whole frame distribution.
    Exact,
    /// Monte Carlo over `count` frames, each evaluated exactly over its outcomes.
    Frames { count: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowEstimate {
    /// Single-shot estimator variance of each observable.
    pub variances: Vec<f64>,
    /// Standard error of each variance; zero for exact evaluation.
    pub stderr: Vec<f64>,
    pub frames_used: usize,
    /// Set when some relative standard error exceeds [`TARGET_REL_STDERR`].
    pub flagged: bool,
}

impl ShadowEstimate {
    /// Largest variance over observables, with its standard error.
    pub fn max(&self) -> (f64, f64) {
        self.variances.iter().zip(&self.stderr).fold((0.0, 0.0), |acc, (v, s)| if *v > acc.0 { (*v, *s) } else { acc })
    }
}

/// Members `(k, c_{n,k})` of each observable.
pub(crate) fn observable_rows(set: &ObservableSet) -> Vec<Vec<(usize, Complex64)>> {
    let mut rows = vec![Vec::new(); set.n_op()];
    for k in 0..set.n_p() {
        for &(n, c) in set.members(k) {
            rows[n as usize].push((k, c));
        }
    }
    rows
}

fn means(set: &ObservableSet, rows: &[Vec<(usize, Complex64)>], table: &PauliExpectations) -> Vec<Complex64> {
    rows.iter().map(|row| row.iter().map(|(k, c)| c * table.get(&set.pauli(*k))).sum()).collect()
}

/// Pair sum over each observable; `centered` swaps `⟨P_k P_l⟩` for the covariance.
fn exact_pair_sums(
    set: &ObservableSet,
    rows: &[Vec<(usize, Complex64)>],
    cov: &Coverage,
    table: &PauliExpectations,
    centered: bool,
) -> Vec<f64> {
    let q: Vec<f64> = (0..set.n_p()).map(|k| cov.single(k)).collect();
    let mean: Vec<f64> =
        if centered { (0..set.n_p()).map(|k| table.get(&set.pauli(k))).collect() } else { vec![0.0; set.n_p()] };
    rows.par_iter()
        .map(|row| {
            let mut s = 0.0;
            for (a, &(k, ck)) in row.iter().enumerate() {
                s += ck.norm_sqr() / q[k] * (1.0 - mean[k] * mean[k]);
                let pk = set.pauli(k);
                for &(l, cl) in &row[a + 1..] {
                    let ql = cov.joint(k, l);
                    if ql == 0.0 {
                        continue;
                    }
                    let e = table.get(&pk.mul_unchecked(&set.pauli(l))) - mean[k] * mean[l];
                    s += 2.0 * (ck.conj() * cl).re * ql / (q[k] * q[l]) * e;
                }
            }
            s
        })
        .collect()
}

/// One frame's joint outcome distribution and, per observable, the estimator value at
/// every outcome (`None` when the frame covers none of its Paulis).
pub struct FrameOutcomes {
    pub probabilities: Vec<f64>,
    pub values: Vec<Option<Vec<Complex64>>>,
}

impl FrameOutcomes {
    pub fn second_moment(&self, n: usize) -> f64 {
        self.values[n].as_ref().map_or(0.0, |v| v.iter().zip(&self.probabilities).map(|(x, p)| p * x.norm_sqr()).sum())
    }

    /// Outcome variance of observable `n` within this frame.
    pub fn variance(&self, n: usize) -> f64 {
        let Some(v) = self.values[n].as_ref() else { return 0.0 };
        let mean: Complex64 = v.iter().zip(&self.probabilities).map(|(x, p)| p * x).sum();
        (self.second_moment(n) - mean.norm_sqr()).max(0.0)
    }
}

pub fn frame_outcomes(
    frame: &MeasurementFrame,
    mapping: Mapping,
    set: &ObservableSet,
    cov: &Coverage,
    table: &PauliExpectations,
) -> Result<FrameOutcomes> {
    let d = Decomposer::new(frame.stabilizers(mapping))?;
    let n = set.n_qubits();
    let dim = 1usize << n;
    let g = d.generators();
    let mut products = vec![PauliProduct::identity(n); dim];
    let mut e = vec![0.0; dim];
    e[0] = 1.0;
    for t in 1..dim {
        let low = t.trailing_zeros() as usize;
        products[t] = g[low].mul_unchecked(&products[t & (t - 1)]);
        e[t] = table.get(&products[t]);
    }
    walsh_hadamard(&mut e);
    let probabilities: Vec<f64> = e.into_iter().map(|x| x / dim as f64).collect();

    let mut acc: Vec<Option<Vec<Complex64>>> = vec![None; set.n_op()];
    for k in 0..set.n_p() {
        let Some((t, s)) = d.signed(&set.pauli(k)) else { continue };
        let w = s / cov.single(k);
        for &(obs, c) in set.members(k) {
            let a = acc[obs as usize].get_or_insert_with(|| vec![Complex64::new(0.0, 0.0); dim]);
            a[t as usize] += c * w;
        }
    }
    for a in acc.iter_mut().flatten() {
        walsh_hadamard(a);
    }
    Ok(FrameOutcomes { probabilities, values: acc })
}

fn frame_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Single-shot estimator variance `E|est|² − |⟨A_n⟩|²` of every observable on `state`.
pub fn one_shot_variance(
    scheme: ShadowScheme,
    set: &ObservableSet,
    state: &WaveVector,
    budget: Budget,
    mapping: Mapping,
) -> Result<ShadowEstimate> {
    estimate(scheme, set, state, budget, mapping, false)
}

/// Frame-resolved variance `Σ_α m_α Var(est | α)`: frames act as groups with allocation
/// equal to their probability. Never exceeds [`one_shot_variance`].
pub fn frame_resolved_variance(
    scheme: ShadowScheme,
    set: &ObservableSet,
    state: &WaveVector,
    budget: Budget,
    mapping: Mapping,
) -> Result<ShadowEstimate> {
    estimate(scheme, set, state, budget, mapping, true)
}

fn estimate(
    scheme: ShadowScheme,
    set: &ObservableSet,
    state: &WaveVector,
    budget: Budget,
    mapping: Mapping,
    resolved: bool,
) -> Result<ShadowEstimate> {
    let table = PauliExpectations::pure(state)?;
    let cov = Coverage::new(scheme, set.paulis(), mapping)?;
    let rows = observable_rows(set);
    let (moment, err, frames_used) = match budget {
        Budget::Exact => (exact_pair_sums(set, &rows, &cov, &table, resolved), vec![0.0; set.n_op()], 0),
        Budget::Frames { count, seed } => {
            if count < 2 {
                return Err(Error::Invalid("Monte Carlo needs at least two frames".into()));
            }
            let samples: Vec<Vec<f64>> = (0..count)
                .into_par_iter()
                .map(|i| {
                    let frame = scheme.sample_frame(set.n_qubits(), &mut frame_rng(seed, i));
                    let out = frame_outcomes(&frame, mapping, set, &cov, &table)?;
                    Ok((0..set.n_op()).map(|n| if resolved { out.variance(n) } else { out.second_moment(n) }).collect())
                })
                .collect::<Result<_>>()?;
            let f = count as f64;
            let mut mean = vec![0.0; set.n_op()];
            let mut sq = vec![0.0; set.n_op()];
            for s in &samples {
                for (n, v) in s.iter().enumerate() {
                    mean[n] += v / f;
                    sq[n] += v * v / f;
                }
            }
            let err = mean.iter().zip(&sq).map(|(m, s)| ((s - m * m).max(0.0) / (f - 1.0)).sqrt()).collect();
            (mean, err, count)
        }
    };
    let variances: Vec<f64> = if resolved {
        moment.into_iter().map(|v| v.max(0.0)).collect()
    } else {
        let mu = means(set, &rows, &table);
        moment.iter().zip(&mu).map(|(s, m)| (s - m.norm_sqr()).max(0.0)).collect()
    };
    let flagged = variances.iter().zip(&err).any(|(v, e)| *e > TARGET_REL_STDERR * v.max(1e-300));
    Ok(ShadowEstimate { variances, stderr: err, frames_used, flagged })
}

/// Exact average over an explicit weighted frame list; used to certify the closed forms.
pub fn enumerated_second_moments(
    frames: &[MeasurementFrame],
    scheme: ShadowScheme,
    set: &ObservableSet,
    state: &WaveVector,
    mapping: Mapping,
) -> Result<Vec<f64>> {
    let table = PauliExpectations::pure(state)?;
    let cov = Coverage::new(scheme, set.paulis(), mapping)?;
    let mut out = vec![0.0; set.n_op()];
    for f in frames {
        let o = frame_outcomes(f, mapping, set, &cov, &table)?;
        for (n, v) in out.iter_mut().enumerate() {
            *v += f.weight * o.second_moment(n);
        }
    }
    Ok(out)
}

/// Simulated shadow estimates of every `⟨A_n⟩` from `shots` single-shot draws, with
/// their standard errors.
pub fn simulate_shadow(
    scheme: ShadowScheme,
    set: &ObservableSet,
    state: &WaveVector,
    shots: usize,
    seed: u64,
    mapping: Mapping,
) -> Result<(Vec<Complex64>, Vec<f64>)> {
    let table = PauliExpectations::pure(state)?;
    let cov = Coverage::new(scheme, set.paulis(), mapping)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = vec![Complex64::new(0.0, 0.0); set.n_op()];
    let mut sq = vec![0.0; set.n_op()];
    for _ in 0..shots {
        let frame = scheme.sample_frame(set.n_qubits(), &mut rng);
        let out = frame_outcomes(&frame, mapping, set, &cov, &table)?;
        let mut r: f64 = rng.random();
        let mut b = out.probabilities.len() - 1;
        for (i, p) in out.probabilities.iter().enumerate() {
            if r < *p {
                b = i;
                break;
            }
            r -= p;
        }
        for n in 0..set.n_op() {
            let v = out.values[n].as_ref().map_or(Complex64::new(0.0, 0.0), |v| v[b]);
            sum[n] += v;
            sq[n] += v.norm_sqr();
        }
    }
    let s = shots as f64;
    let est = (0..set.n_op()).map(|n| sum[n] / s + set.observable(n).identity_coefficient()).collect();
    let err = (0..set.n_op()).map(|n| ((sq[n] / s - (sum[n] / s).norm_sqr()).max(0.0) / s).sqrt()).collect();
    Ok((est, err))
}
