//! Coefficient splitting: each Pauli may sit in several compatible groups, and its
//! coefficient is divided between them to minimize `Σ_α V_α / m_α`.

use super::si::{by_weight, default_weights};
use super::variance::{allocation_cost, optimal_allocation, proxy_group_costs, CovarianceCache, Ensemble};
use super::{Group, MeasurementPlan};
use crate::error::{Error, Result};
use crate::molecular::ObservableSet;

#[derive(Clone, Copy, Debug)]
pub struct IcsOptions {
    pub max_sweeps: usize,
    /// Stop once a sweep improves the cost by less than this fraction.
    pub tol: f64,
}

impl Default for IcsOptions {
    fn default() -> Self {
        Self { max_sweeps: 100, tol: 1e-7 }
    }
}

struct Block {
    members: Vec<usize>,
    /// Coefficient-weighted shares `x_j c_j`.
    shares: Vec<f64>,
    fractions: Vec<f64>,
    cov: Vec<Vec<f64>>,
    /// `Σ_j C_ij x_j c_j`.
    field: Vec<f64>,
}

impl Block {
    fn variance(&self) -> f64 {
        self.shares.iter().zip(&self.field).map(|(s, f)| s * f).sum::<f64>().max(0.0)
    }
}

/// Splits coefficients of a single-observable plan across every compatible group.
///
/// Returns the split plan with optimal allocations and the proxy cost after each sweep.
pub fn ics_split(
    plan: &MeasurementPlan,
    set: &ObservableSet,
    ens: &Ensemble,
    opts: IcsOptions,
) -> Result<(MeasurementPlan, Vec<f64>)> {
    if set.n_op() != 1 {
        return Err(Error::Invalid("coefficient splitting needs a single observable".into()));
    }
    let coef: Vec<f64> = (0..set.n_p())
        .map(|k| {
            let c = set.members(k)[0].1;
            if c.im != 0.0 {
                Err(Error::Invalid(format!("complex coefficient on {}", set.pauli(k))))
            } else {
                Ok(c.re)
            }
        })
        .collect::<Result<_>>()?;
    let compat = plan.compat;
    let mut members: Vec<Vec<usize>> = plan.groups.iter().map(|g| g.paulis.clone()).collect();
    let mut fractions: Vec<Vec<f64>> = plan.groups.iter().map(|g| g.fractions.clone()).collect();
    for k in by_weight(&default_weights(set)) {
        let pk = set.pauli(k);
        for (g, f) in members.iter_mut().zip(fractions.iter_mut()) {
            if !g.contains(&k) && g.iter().all(|&l| compat.compatible(&pk, &set.pauli(l))) {
                g.push(k);
                f.push(0.0);
            }
        }
    }

    let mut cache = CovarianceCache::new(ens.clone());
    let mut blocks: Vec<Block> = members
        .into_iter()
        .zip(fractions)
        .map(|(members, fractions)| {
            let ps: Vec<_> = members.iter().map(|&k| set.pauli(k)).collect();
            let cov: Vec<Vec<f64>> = ps.iter().map(|a| ps.iter().map(|b| cache.covariance(a, b)).collect()).collect();
            let shares: Vec<f64> = members.iter().zip(&fractions).map(|(&k, x)| x * coef[k]).collect();
            let field = cov.iter().map(|row| row.iter().zip(&shares).map(|(c, s)| c * s).sum()).collect();
            Block { members, shares, fractions, cov, field }
        })
        .collect();

    // (block, position) of every Pauli
    let mut sites: Vec<Vec<(usize, usize)>> = vec![Vec::new(); set.n_p()];
    for (a, b) in blocks.iter().enumerate() {
        for (pos, &k) in b.members.iter().enumerate() {
            sites[k].push((a, pos));
        }
    }

    let cost_of = |blocks: &[Block]| {
        let v: Vec<f64> = blocks.iter().map(Block::variance).collect();
        let m = optimal_allocation(&v);
        (allocation_cost(&v, &m), m)
    };
    let (start, mut m) = cost_of(&blocks);
    let mut history = vec![start];
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        for k in by_weight(&default_weights(set)) {
            let here = &sites[k];
            if here.len() < 2 {
                continue;
            }
            let c = coef[k];
            let ckk = blocks[here[0].0].cov[here[0].1][here[0].1];
            let a = c * c * ckk;
            if a <= 1e-14 * c * c {
                continue;
            }
            // b_α = c Σ_{l≠k} C_kl x_l c_l
            let b: Vec<f64> = here.iter().map(|&(g, p)| c * (blocks[g].field[p] - ckk * blocks[g].shares[p])).collect();
            let sum_m: f64 = here.iter().map(|&(g, _)| m[g]).sum();
            let mu = (a + b.iter().sum::<f64>()) / sum_m;
            for (&(g, p), bg) in here.iter().zip(&b) {
                let x = (mu * m[g] - bg) / a;
                let blk = &mut blocks[g];
                let ds = (x - blk.fractions[p]) * c;
                blk.fractions[p] = x;
                blk.shares[p] += ds;
                for (f, row) in blk.field.iter_mut().zip(&blk.cov) {
                    *f += row[p] * ds;
                }
            }
        }
        let (cost, next) = cost_of(&blocks);
        m = next;
        let prev = *history.last().expect("nonempty");
        history.push(cost);
        if prev <= 0.0 || (prev - cost) / prev < opts.tol {
            break;
        }
    }

    let groups = blocks
        .into_iter()
        .filter_map(|b| {
            let (paulis, fractions): (Vec<usize>, Vec<f64>) =
                b.members.into_iter().zip(b.fractions).filter(|(_, x)| *x != 0.0).unzip();
            (!paulis.is_empty()).then_some(Group { paulis, fractions, m: 0.0 })
        })
        .collect();
    let mut out = MeasurementPlan {
        method: format!("{}-ics", compat.name()),
        compat,
        groups,
        provenance: plan.provenance.clone(),
    };
    out.provenance.sweeps = sweeps;
    let v = proxy_group_costs(&out, set, ens)?;
    out.set_allocations(&optimal_allocation(&v));
    Ok((out, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouping::{ima_refine, plan_cost, sorted_insertion, Compat, CostMode, ImaOptions};
    use crate::pauli::PauliPolynomial;
    use crate::state::WaveVector;
    use num_complex::Complex64;

    fn toy() -> (ObservableSet, WaveVector) {
        let h = PauliPolynomial::from_labels(
            3,
            &[("Z0", 0.9), ("Z1", 0.8), ("X0 X1", 0.6), ("Y0 Y1", 0.5), ("Z0 Z1", 0.45), ("X2", 0.3), ("Z2", 0.25)],
        )
        .unwrap();
        let amps = (0..8).map(|i| Complex64::new((i as f64 * 0.9).sin() + 0.2, (i as f64 * 0.4).cos())).collect();
        (ObservableSet::single(&h), WaveVector::new(3, amps).unwrap().normalized())
    }

    #[test]
    fn splitting_never_costs_more() {
        let (set, psi) = toy();
        let ens = Ensemble::pure(&psi);
        for compat in [Compat::Fc, Compat::Qwc] {
            let mut si = sorted_insertion(&set, &default_weights(&set), compat);
            si.set_allocations(&optimal_allocation(&proxy_group_costs(&si, &set, &ens).unwrap()));
            let si_cost = plan_cost(&si, &set, &ens).unwrap();
            let (ics, history) = ics_split(&si, &set, &ens, IcsOptions::default()).unwrap();
            ics.validate(&set).unwrap();
            assert!((history[0] - si_cost).abs() < 1e-10 * si_cost);
            assert!(history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
            let ics_cost = plan_cost(&ics, &set, &ens).unwrap();
            assert!((ics_cost - history.last().unwrap()).abs() < 1e-8 * si_cost);
            let (ima, _) = ima_refine(&si, &set, &ens, CostMode::Ground, ImaOptions::default()).unwrap();
            let (ics_ima, _) = ics_split(&ima, &set, &ens, IcsOptions::default()).unwrap();
            assert!(plan_cost(&ics_ima, &set, &ens).unwrap() <= plan_cost(&ima, &set, &ens).unwrap() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn rejects_many_observables() {
        let a = PauliPolynomial::from_labels(1, &[("Z0", 1.0)]).unwrap();
        let label = crate::molecular::ObservableLabel { i: 0, j: 0, kind: crate::molecular::ObservableKind::Overlap };
        let set = ObservableSet::new(vec![a.to_sum(), a.to_sum()], vec![label, label]).unwrap();
        let psi = WaveVector::basis(1, 0);
        let plan = sorted_insertion(&set, &default_weights(&set), Compat::Fc);
        assert!(ics_split(&plan, &set, &Ensemble::pure(&psi), IcsOptions::default()).is_err());
    }
}
