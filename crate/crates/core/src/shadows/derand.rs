//! Derandomized QWC frames: each qubit's basis is fixed greedily to minimize the
//! conditional expectation of `Σ_k exp(−η_k · hits_k)`.

use std::collections::HashMap;

use super::frames::BasesJson;
use crate::error::{Error, Result};
use crate::grouping::{Compat, Group, MeasurementPlan, Provenance};
use crate::molecular::ObservableSet;
use crate::pauli::Letter;

#[derive(Clone, Copy, Debug)]
pub struct DerandOptions {
    /// Confidence parameter `η`.
    pub eta: f64,
    /// Number of frames; `None` means `10 · N_P`.
    pub budget: Option<usize>,
}

impl Default for DerandOptions {
    fn default() -> Self {
        Self { eta: 1.0, budget: None }
    }
}

#[derive(Clone, Debug)]
pub struct Derandomized {
    pub frames: Vec<Vec<Letter>>,
    /// Objective before any choice, then after every single-qubit choice.
    pub objective: Vec<f64>,
}

impl Derandomized {
    pub fn to_json(&self) -> Vec<BasesJson> {
        self.frames.iter().map(|f| BasesJson { bases: f.iter().map(|l| l.as_char()).collect() }).collect()
    }
}

const LETTERS: [Letter; 3] = [Letter::X, Letter::Y, Letter::Z];

/// Greedy derandomization; a Pauli with weight `w_k` uses rate `η_k = η/2 · max_w / w_k`,
/// so heavier Paulis keep a larger penalty until they are hit more often.
pub fn derandomize(set: &ObservableSet, weights: &[f64], opts: DerandOptions) -> Result<Derandomized> {
    let n_p = set.n_p();
    if weights.len() != n_p {
        return Err(Error::DimensionMismatch(weights.len(), n_p));
    }
    let budget = opts.budget.unwrap_or(10 * n_p);
    if budget == 0 {
        return Err(Error::Invalid("derandomization needs a positive frame budget".into()));
    }
    let n = set.n_qubits();
    let w_max = weights.iter().copied().fold(0.0, f64::max);
    if !(w_max > 0.0) {
        return Err(Error::Invalid("importance weights must have a positive entry".into()));
    }
    let rate: Vec<f64> = weights.iter().map(|w| 0.5 * opts.eta * w_max / w.max(1e-300)).collect();
    let nu: Vec<f64> = rate.iter().map(|r| 1.0 - (-r).exp()).collect();
    let size: Vec<i32> = (0..n_p).map(|k| set.pauli(k).weight() as i32).collect();
    let mut on_qubit: Vec<Vec<usize>> = vec![Vec::new(); n];
    for k in 0..n_p {
        let s = set.pauli(k).support();
        for (q, list) in on_qubit.iter_mut().enumerate() {
            if s >> q & 1 == 1 {
                list.push(k);
            }
        }
    }

    let mut hits = vec![0u32; n_p];
    let mut decay: Vec<f64> = vec![1.0; n_p];
    let mut frames = Vec::with_capacity(budget);
    let mut objective = Vec::with_capacity(budget * n + 1);
    let term = |d: f64, nu: f64, alive: bool, r: i32| if alive { d * (1.0 - nu * 3f64.powi(-r)) } else { d };
    let mut current: f64 = (0..n_p).map(|k| term(1.0, nu[k], true, size[k])).sum();
    objective.push(current);
    for _ in 0..budget {
        let mut alive = vec![true; n_p];
        let mut remaining = size.clone();
        let mut frame = Vec::with_capacity(n);
        for (q, list) in on_qubit.iter().enumerate() {
            let mut best = (f64::INFINITY, Letter::X);
            for l in LETTERS {
                let mut delta = 0.0;
                for &k in list {
                    if !alive[k] {
                        continue;
                    }
                    let old = term(decay[k], nu[k], true, remaining[k]);
                    let new = if set.pauli(k).letter(q) == l {
                        term(decay[k], nu[k], true, remaining[k] - 1)
                    } else {
                        decay[k]
                    };
                    delta += new - old;
                }
                if delta < best.0 {
                    best = (delta, l);
                }
            }
            let l = best.1;
            for &k in list {
                if alive[k] {
                    if set.pauli(k).letter(q) == l {
                        remaining[k] -= 1;
                    } else {
                        alive[k] = false;
                    }
                }
            }
            current += best.0;
            objective.push(current);
            frame.push(l);
        }
        // the frame is complete: covered Paulis register a hit for the next frame
        current = 0.0;
        for k in 0..n_p {
            if alive[k] {
                hits[k] += 1;
                decay[k] = (-rate[k] * hits[k] as f64).exp();
            }
            current += term(decay[k], nu[k], true, size[k]);
        }
        frames.push(frame);
    }
    Ok(Derandomized { frames, objective })
}

/// The frame list as a deterministic plan: each frame measures every Pauli it covers,
/// a Pauli hit by `h_k` frames keeps share `1/h_k` per frame, and frames get equal shots.
pub fn derand_plan(set: &ObservableSet, frames: &[Vec<Letter>]) -> Result<MeasurementPlan> {
    let mut order: Vec<&Vec<Letter>> = Vec::new();
    let mut count: HashMap<&Vec<Letter>, usize> = HashMap::new();
    for f in frames {
        let c = count.entry(f).or_insert(0);
        if *c == 0 {
            order.push(f);
        }
        *c += 1;
    }
    let covers = |f: &[Letter], k: usize| {
        let p = set.pauli(k);
        (0..set.n_qubits()).all(|q| {
            let l = p.letter(q);
            l == Letter::I || l == f[q]
        })
    };
    let mut hits = vec![0usize; set.n_p()];
    let members: Vec<Vec<usize>> = order
        .iter()
        .map(|f| {
            let m: Vec<usize> = (0..set.n_p()).filter(|&k| covers(f, k)).collect();
            for &k in &m {
                hits[k] += count[f];
            }
            m
        })
        .collect();
    if let Some(k) = hits.iter().position(|h| *h == 0) {
        return Err(Error::Uncovered(set.pauli(k).label()));
    }
    let total = frames.len() as f64;
    let groups = order
        .iter()
        .zip(members)
        .filter(|(_, m)| !m.is_empty())
        .map(|(f, paulis)| {
            let c = count[*f] as f64;
            let fractions = paulis.iter().map(|&k| c / hits[k] as f64).collect();
            Group { paulis, fractions, m: c / total }
        })
        .collect();
    Ok(MeasurementPlan { method: "derand".into(), compat: Compat::Qwc, groups, provenance: Provenance::default() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouping::default_weights;
    use crate::pauli::PauliPolynomial;

    fn set_of(n: usize, terms: &[(&str, f64)]) -> ObservableSet {
        ObservableSet::single(&PauliPolynomial::from_labels(n, terms).unwrap())
    }

    #[test]
    fn single_z_always_measured_in_z() {
        let set = set_of(2, &[("Z0", 1.0)]);
        let d = derandomize(&set, &default_weights(&set), DerandOptions { eta: 1.0, budget: Some(5) }).unwrap();
        assert!(d.frames.iter().all(|f| f[0] == Letter::Z));
    }

    #[test]
    fn disjoint_paulis_share_every_frame() {
        let set = set_of(2, &[("X0", 1.0), ("Y1", 1.0)]);
        let d = derandomize(&set, &default_weights(&set), DerandOptions::default()).unwrap();
        assert!(d.frames.iter().all(|f| f[0] == Letter::X && f[1] == Letter::Y));
        let plan = derand_plan(&set, &d.frames).unwrap();
        assert_eq!(plan.n_groups(), 1);
        plan.validate(&set).unwrap();
    }

    #[test]
    fn objective_never_increases() {
        let set =
            set_of(3, &[("Z0", 0.9), ("X0 X1", 0.4), ("Y1 Y2", 0.3), ("Z1 Z2", 0.6), ("X2", 0.2), ("Z0 X1 Y2", 0.1)]);
        let d = derandomize(&set, &default_weights(&set), DerandOptions::default()).unwrap();
        assert!(d.objective.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        let plan = derand_plan(&set, &d.frames).unwrap();
        plan.validate(&set).unwrap();
        assert!((plan.allocations().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_budget_rejected() {
        let set = set_of(1, &[("Z0", 1.0)]);
        assert!(derandomize(&set, &[1.0], DerandOptions { eta: 1.0, budget: Some(0) }).is_err());
    }
}
