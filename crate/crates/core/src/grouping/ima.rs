//! Iterative measurement allocation: whole Paulis move between compatible groups
//! whenever the move lowers `(Σ_α √V_α)²`.

use std::collections::HashMap;

use num_complex::Complex64;

use super::si::{by_weight, default_weights};
use super::variance::{optimal_allocation, proxy_group_costs, CovarianceCache, Ensemble};
use super::{CostMode, Group, MeasurementPlan};
use crate::error::{Error, Result};
use crate::molecular::ObservableSet;

#[derive(Clone, Copy, Debug)]
pub struct ImaOptions {
    pub max_sweeps: usize,
    /// Stop once a sweep improves the cost by less than this fraction.
    pub tol: f64,
}

impl Default for ImaOptions {
    fn default() -> Self {
        Self { max_sweeps: 20, tol: 1e-4 }
    }
}

/// Coefficient of Pauli `k` in observable `n`, if present.
pub(crate) fn coeff(set: &ObservableSet, k: usize, n: u32) -> Option<Complex64> {
    let m = set.members(k);
    m.binary_search_by_key(&n, |e| e.0).ok().map(|i| m[i].1)
}

/// Per-observable variance change from adding (`sign = 1`) or removing (`sign = −1`)
/// Pauli `k` to a group whose other members are `others`.
fn variance_delta(
    set: &ObservableSet,
    cache: &mut CovarianceCache,
    k: usize,
    others: &[usize],
    sign: f64,
) -> Vec<(u32, f64)> {
    let pk = set.pauli(k);
    let ckk = cache.covariance(&pk, &pk);
    let cov: Vec<(usize, f64)> =
        others.iter().filter(|&&l| l != k).map(|&l| (l, cache.covariance(&pk, &set.pauli(l)))).collect();
    set.members(k)
        .iter()
        .map(|&(n, ck)| {
            let mut cross = Complex64::new(0.0, 0.0);
            for &(l, c) in &cov {
                if let Some(cl) = coeff(set, l, n) {
                    cross += cl * c;
                }
            }
            let d = 2.0 * (ck.conj() * cross).re + ck.norm_sqr() * ckk;
            (n, sign * d)
        })
        .collect()
}

fn group_value(vars: &HashMap<u32, f64>, delta: &[(u32, f64)]) -> f64 {
    let mut best = 0.0f64;
    let changed: HashMap<u32, f64> = delta.iter().copied().collect();
    for (n, v) in vars {
        best = best.max(v + changed.get(n).copied().unwrap_or(0.0));
    }
    for (n, d) in delta {
        if !vars.contains_key(n) {
            best = best.max(*d);
        }
    }
    best.max(0.0)
}

fn apply_delta(vars: &mut HashMap<u32, f64>, delta: &[(u32, f64)]) {
    for (n, d) in delta {
        *vars.entry(*n).or_insert(0.0) += d;
    }
}

fn initial_variances(set: &ObservableSet, cache: &mut CovarianceCache, members: &[usize]) -> HashMap<u32, f64> {
    let mut vars = HashMap::new();
    let mut placed: Vec<usize> = Vec::with_capacity(members.len());
    for &k in members {
        let d = variance_delta(set, cache, k, &placed, 1.0);
        apply_delta(&mut vars, &d);
        placed.push(k);
    }
    vars
}

/// Refines a single-membership plan by moving Paulis between groups.
///
/// Returns the refined plan with optimal allocations and the proxy cost after each sweep.
pub fn ima_refine(
    plan: &MeasurementPlan,
    set: &ObservableSet,
    ens: &Ensemble,
    mode: CostMode,
    opts: ImaOptions,
) -> Result<(MeasurementPlan, Vec<f64>)> {
    if plan.groups.iter().any(|g| g.fractions.iter().any(|f| *f != 1.0)) {
        return Err(Error::Invalid("measurement allocation needs single-membership groups".into()));
    }
    let compat = plan.compat;
    let mut cache = CovarianceCache::new(ens.clone());
    let mut groups: Vec<Vec<usize>> = plan.groups.iter().map(|g| g.paulis.clone()).collect();
    let mut owner = vec![usize::MAX; set.n_p()];
    for (a, g) in groups.iter().enumerate() {
        for &k in g {
            owner[k] = a;
        }
    }
    let mut vars: Vec<HashMap<u32, f64>> = groups.iter().map(|g| initial_variances(set, &mut cache, g)).collect();
    let root = |v: &HashMap<u32, f64>| group_value(v, &[]).sqrt();
    let total = |vars: &[HashMap<u32, f64>]| vars.iter().map(root).sum::<f64>().powi(2);

    let order = by_weight(&default_weights(set));
    let mut history = vec![total(&vars)];
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        for &k in &order {
            let a = owner[k];
            if a == usize::MAX {
                continue;
            }
            let pk = set.pauli(k);
            let remove = variance_delta(set, &mut cache, k, &groups[a], -1.0);
            let after_a = group_value(&vars[a], &remove).sqrt();
            let before_a = root(&vars[a]);
            let mut best: Option<(usize, f64, Vec<(u32, f64)>)> = None;
            for b in 0..groups.len() {
                if b == a || groups[b].is_empty() || !groups[b].iter().all(|&l| compat.compatible(&pk, &set.pauli(l))) {
                    continue;
                }
                let add = variance_delta(set, &mut cache, k, &groups[b], 1.0);
                let gain = after_a + group_value(&vars[b], &add).sqrt() - before_a - root(&vars[b]);
                if gain < best.as_ref().map_or(-1e-12 * history[0].sqrt().max(1e-300), |x| x.1) {
                    best = Some((b, gain, add));
                }
            }
            if let Some((b, _, add)) = best {
                groups[a].retain(|&l| l != k);
                apply_delta(&mut vars[a], &remove);
                groups[b].push(k);
                apply_delta(&mut vars[b], &add);
                owner[k] = b;
            }
        }
        let cost = total(&vars);
        let prev = *history.last().expect("nonempty");
        history.push(cost);
        if prev <= 0.0 || (prev - cost) / prev < opts.tol {
            break;
        }
    }

    let mut out = MeasurementPlan {
        method: format!("{}-ima", compat.name()),
        compat,
        groups: groups.into_iter().filter(|g| !g.is_empty()).map(Group::new).collect(),
        provenance: plan.provenance.clone(),
    };
    out.provenance.cost_mode = Some(mode);
    out.provenance.sweeps = sweeps;
    let v = proxy_group_costs(&out, set, ens)?;
    out.set_allocations(&optimal_allocation(&v));
    Ok((out, history))
}
