use super::{Compat, Group, MeasurementPlan, Provenance};
use crate::molecular::ObservableSet;

/// Pauli indices by descending weight; ties keep table order.
pub(crate) fn by_weight(weights: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|a, b| weights[*b].total_cmp(&weights[*a]));
    order
}

/// Greedy first-fit grouping in descending weight.
///
/// `weights[k]` ranks Pauli `k`; [`ObservableSet::total_weight`] gives `Σ_n |c_{n,k}|`.
pub fn sorted_insertion(set: &ObservableSet, weights: &[f64], compat: Compat) -> MeasurementPlan {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for k in by_weight(weights) {
        let p = set.pauli(k);
        let slot = groups.iter_mut().find(|g| g.iter().all(|&j| compat.compatible(&p, &set.pauli(j))));
        match slot {
            Some(g) => g.push(k),
            None => groups.push(vec![k]),
        }
    }
    let n = groups.len().max(1) as f64;
    let groups = groups
        .into_iter()
        .map(|g| {
            let mut g = Group::new(g);
            g.m = 1.0 / n;
            g
        })
        .collect();
    MeasurementPlan { method: format!("{}-si", compat.name()), compat, groups, provenance: Provenance::default() }
}

/// `Σ_n |c_{n,k}|` for every Pauli.
pub fn default_weights(set: &ObservableSet) -> Vec<f64> {
    (0..set.n_p()).map(|k| set.total_weight(k)).collect()
}
