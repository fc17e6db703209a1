//! Problem setup, per-method planning and the benchmark driver.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    ground_metric, mc_metric, n_crit, qse_metric, FragmentPlan, Metric, Strategy, StrategyJson, DEFAULT_EPSILON,
};
use crate::error::{Error, Result};
use crate::fermion::Mapping;
use crate::fragments::{
    f3_collect, f3_optimize, fragment_ensemble_variance, lr_decompose, F3Options, FermionicFragment, LR_THRESHOLD,
};
use crate::grouping::{
    default_weights, ics_split, ima_refine, optimal_allocation, proxy_group_costs, sorted_insertion, Compat, CostMode,
    Ensemble, IcsOptions, ImaOptions, MeasurementPlan,
};
use crate::molecular::{
    build_cis_operators, build_electronic_hamiltonian, build_molecular_hamiltonian, build_qse_observables,
    MolecularIntegrals, ObservableSet, QseForm,
};
use crate::shadows::{derand_plan, derandomize, Budget, DerandOptions, ShadowScheme};
use crate::state::{cisd_states, lowest_eigenstates, occupations_with_weight, uniform_weights, WaveVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Ground,
    Qse,
    Mc,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Ground => "ground",
            Task::Qse => "qse",
            Task::Mc => "mc",
        }
    }

    fn cost_mode(self) -> CostMode {
        match self {
            Task::Ground => CostMode::Ground,
            Task::Qse => CostMode::Qse,
            Task::Mc => CostMode::Mc,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ground" => Ok(Task::Ground),
            "qse" => Ok(Task::Qse),
            "mc" => Ok(Task::Mc),
            _ => Err(Error::Invalid(format!("unknown task {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    QwcSi,
    FcSi,
    QwcIma,
    FcIma,
    FcIcs,
    QwcCs,
    FcCs,
    Derand,
    MajoranaCs,
    F3,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::QwcSi,
        Method::QwcIma,
        Method::FcSi,
        Method::FcIma,
        Method::FcIcs,
        Method::QwcCs,
        Method::FcCs,
        Method::Derand,
        Method::MajoranaCs,
        Method::F3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::QwcSi => "qwc-si",
            Method::FcSi => "fc-si",
            Method::QwcIma => "qwc-ima",
            Method::FcIma => "fc-ima",
            Method::FcIcs => "fc-ics",
            Method::QwcCs => "qwc-cs",
            Method::FcCs => "fc-cs",
            Method::Derand => "derand",
            Method::MajoranaCs => "majorana-cs",
            Method::F3 => "f3",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, Method::QwcCs | Method::FcCs | Method::MajoranaCs)
    }

    /// Rejects pairs the method cannot serve.
    pub fn check(self, task: Task) -> Result<()> {
        match (self, task) {
            (Method::F3, Task::Qse) => Err(Error::Invalid(
                "f3 is infeasible for qse: the low-rank factorization exists for the Hamiltonian, not for the dressed operators O_I† H O_J".into(),
            )),
            (Method::FcIcs, Task::Qse) => Err(Error::Invalid(
                "fc-ics is infeasible for qse: coefficient splitting optimizes one observable and has no closed form under the max over matrix elements".into(),
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| Error::Invalid(format!("unknown method {s:?}")))
    }
}

/// Which states a plan is evaluated on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateChoice {
    /// Exact eigenstates.
    #[default]
    Fci,
    /// The CISD proxies used for planning.
    Cisd,
}

/// Everything needed to plan and evaluate one task on one molecule.
#[derive(Clone, Debug)]
pub struct Problem {
    pub molecule: String,
    pub task: Task,
    pub mapping: Mapping,
    pub integrals: MolecularIntegrals,
    pub set: ObservableSet,
    /// Exact evaluation states: the ground state, or the lowest `N_s` for MC.
    pub exact: Vec<WaveVector>,
    /// CISD planning states.
    pub proxy: Vec<WaveVector>,
    /// Set when only a leading fraction of the QSE observables is kept.
    pub lower_bound: bool,
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

impl Problem {
    /// `n_states` defaults to ten, capped by the electron sector; `qse_fraction` keeps
    /// only the first part of the QSE observables and marks the metric a lower bound.
    pub fn new(
        molecule: &str,
        integrals: MolecularIntegrals,
        task: Task,
        mapping: Mapping,
        n_states: Option<usize>,
        qse_fraction: Option<f64>,
    ) -> Result<Self> {
        let n = integrals.n_modes();
        let sector = binomial(n, integrals.n_electrons);
        let count = match task {
            Task::Mc => n_states.unwrap_or(10).min(sector),
            _ => 1,
        };
        if count == 0 {
            return Err(Error::Invalid("at least one state is required".into()));
        }
        let electronic = mapping.encode(&build_electronic_hamiltonian(&integrals))?;
        debug_assert_eq!(occupations_with_weight(n, integrals.n_electrons).len(), sector);
        let exact = lowest_eigenstates(&electronic, mapping, integrals.n_electrons, count)?;
        let proxy_count = count.min(crate::state::cisd_occupations(n, integrals.hf_occupation()).len());
        let proxy = cisd_states(&electronic, mapping, integrals.hf_occupation(), proxy_count)?;
        let mut lower_bound = false;
        let set = match task {
            Task::Ground | Task::Mc => ObservableSet::single(&electronic),
            Task::Qse => {
                let h = build_molecular_hamiltonian(&integrals);
                let ops = build_cis_operators(integrals.n_electrons, n)?;
                let full = build_qse_observables(&h, &ops, mapping, QseForm::Complex)?;
                match qse_fraction {
                    Some(f) if f < 1.0 => {
                        if !(f > 0.0) {
                            return Err(Error::Invalid(format!("qse fraction {f} must be positive")));
                        }
                        lower_bound = true;
                        let keep = ((full.n_op() as f64 * f).ceil() as usize).max(1);
                        ObservableSet::new(full.observables()[..keep].to_vec(), full.labels()[..keep].to_vec())?
                    }
                    _ => full,
                }
            }
        };
        Ok(Self { molecule: molecule.to_string(), task, mapping, integrals, set, exact, proxy, lower_bound })
    }

    pub fn states(&self, choice: StateChoice) -> &[WaveVector] {
        match choice {
            StateChoice::Fci => &self.exact,
            StateChoice::Cisd => &self.proxy,
        }
    }

    fn ensemble(&self) -> Ensemble<'_> {
        Ensemble::uniform(&self.proxy)
    }
}

/// Knobs that influence planning.
#[derive(Clone, Copy, Debug)]
#[derive(Default)]
pub struct StrategyOptions {
    pub seed: u64,
    /// Evaluate shadows over this many sampled frames instead of in closed form.
    pub shadow_frames: Option<usize>,
    pub f3: F3Options,
}


fn allocated(mut plan: MeasurementPlan, problem: &Problem) -> Result<MeasurementPlan> {
    let v = proxy_group_costs(&plan, &problem.set, &problem.ensemble())?;
    plan.set_allocations(&optimal_allocation(&v));
    Ok(plan)
}

fn fragment_plan(problem: &Problem, opts: &StrategyOptions) -> Result<FragmentPlan> {
    let lr = lr_decompose(&problem.integrals, LR_THRESHOLD)?;
    let w = uniform_weights(problem.proxy.len());
    let r = f3_optimize(&lr, &problem.proxy, &w, problem.mapping, opts.f3)?;
    let (one, frags) = f3_collect(&lr.fragments, &lr.one_body, &r.coefficients)?;
    let fragments: Vec<FermionicFragment> = std::iter::once(one).chain(frags).collect();
    let v: Vec<f64> = fragments
        .iter()
        .map(|f| fragment_ensemble_variance(f, &problem.proxy, &w, problem.mapping))
        .collect::<Result<_>>()?;
    Ok(FragmentPlan { fragments, allocations: optimal_allocation(&v), mapping: problem.mapping })
}

/// Plans `method` on the problem's CISD proxies.
pub fn build_strategy(problem: &Problem, method: Method, opts: &StrategyOptions) -> Result<Strategy> {
    method.check(problem.task)?;
    let set = &problem.set;
    let weights = default_weights(set);
    let si = |compat| allocated(sorted_insertion(set, &weights, compat), problem);
    let ima = |compat| -> Result<MeasurementPlan> {
        Ok(ima_refine(&si(compat)?, set, &problem.ensemble(), problem.task.cost_mode(), ImaOptions::default())?.0)
    };
    let shadow = |scheme| Strategy::Shadow {
        scheme,
        mapping: problem.mapping,
        budget: opts.shadow_frames.map_or(Budget::Exact, |count| Budget::Frames { count, seed: opts.seed }),
    };
    Ok(match method {
        Method::QwcSi => Strategy::Plan(si(Compat::Qwc)?),
        Method::FcSi => Strategy::Plan(si(Compat::Fc)?),
        Method::QwcIma => Strategy::Plan(ima(Compat::Qwc)?),
        Method::FcIma => Strategy::Plan(ima(Compat::Fc)?),
        Method::FcIcs => {
            Strategy::Plan(ics_split(&ima(Compat::Fc)?, set, &problem.ensemble(), IcsOptions::default())?.0)
        }
        Method::Derand => {
            let d = derandomize(set, &weights, DerandOptions::default())?;
            Strategy::Plan(derand_plan(set, &d.frames)?)
        }
        Method::QwcCs => shadow(ShadowScheme::QwcCs),
        Method::FcCs => shadow(ShadowScheme::FcCs),
        Method::MajoranaCs => shadow(ShadowScheme::MajoranaCs),
        Method::F3 => Strategy::Fragments(fragment_plan(problem, opts)?),
    })
}

/// The task's metric of `strategy` on `states`.
pub fn evaluate(problem: &Problem, strategy: &Strategy, states: &[WaveVector]) -> Result<Metric> {
    let first = states.first().ok_or_else(|| Error::Invalid("no evaluation states".into()))?;
    match problem.task {
        Task::Ground => ground_metric(strategy, &problem.set, first),
        Task::Qse => qse_metric(strategy, &problem.set, first),
        Task::Mc => mc_metric(strategy, &problem.set, states, states.len()),
    }
}

/// A stored plan with what is needed to rebuild its problem.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlanFile {
    pub molecule: String,
    pub integrals: PathBuf,
    pub integrals_sha256: String,
    pub task: Task,
    pub method: Method,
    pub mapping: Mapping,
    pub seed: u64,
    pub n_states: Option<usize>,
    pub qse_fraction: Option<f64>,
    pub n_paulis: usize,
    pub strategy: StrategyJson,
}

fn read_integrals(path: &Path, name: &str) -> Result<(MolecularIntegrals, String)> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Invalid(format!("missing integral file {} for {name}: {e}", path.display())))?;
    Ok((MolecularIntegrals::load(path)?, sha256_hex(&bytes)))
}

fn molecule_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| "molecule".to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn make_plan_file(
    integrals: &Path,
    task: Task,
    method: Method,
    mapping: Mapping,
    opts: &StrategyOptions,
    n_states: Option<usize>,
    qse_fraction: Option<f64>,
) -> Result<PlanFile> {
    let molecule = molecule_name(integrals);
    let (mi, hash) = read_integrals(integrals, &molecule)?;
    let problem = Problem::new(&molecule, mi, task, mapping, n_states, qse_fraction)?;
    let strategy = build_strategy(&problem, method, opts)?;
    Ok(PlanFile {
        molecule,
        integrals: integrals.to_path_buf(),
        integrals_sha256: hash,
        task,
        method,
        mapping,
        seed: opts.seed,
        n_states,
        qse_fraction,
        n_paulis: problem.set.n_p(),
        strategy: strategy.to_json(&problem.set),
    })
}

/// Evaluates a stored plan; `n_states` and `seed` override the stored values.
pub fn evaluate_plan_file(
    plan: &PlanFile,
    base_dir: &Path,
    epsilon: f64,
    states: StateChoice,
    n_states: Option<usize>,
    seed: Option<u64>,
) -> Result<BenchmarkResult> {
    if !(epsilon > 0.0) {
        return Err(Error::Invalid(format!("epsilon {epsilon} must be positive")));
    }
    let path = if plan.integrals.is_absolute() { plan.integrals.clone() } else { base_dir.join(&plan.integrals) };
    let (mi, hash) = read_integrals(&path, &plan.molecule)?;
    if hash != plan.integrals_sha256 {
        return Err(Error::Invalid(format!("{} changed since the plan was made", path.display())));
    }
    let n_states = n_states.or(plan.n_states);
    let problem = Problem::new(&plan.molecule, mi, plan.task, plan.mapping, n_states, plan.qse_fraction)?;
    if problem.set.n_p() != plan.n_paulis {
        return Err(Error::Invalid("plan does not match the rebuilt Pauli table".into()));
    }
    let mut strategy = Strategy::from_json(&plan.strategy, &problem.set, plan.mapping)?;
    let seed = seed.unwrap_or(plan.seed);
    if let Strategy::Shadow { budget: Budget::Frames { seed: s, .. }, .. } = &mut strategy {
        *s = seed;
    }
    let metric = evaluate(&problem, &strategy, problem.states(states))?;
    Ok(BenchmarkResult {
        molecule: problem.molecule.clone(),
        task: plan.task,
        method: plan.method,
        mapping: plan.mapping,
        epsilon,
        metric_millions: metric.millions(epsilon),
        stderr_millions: metric.stderr_millions(epsilon),
        n_groups: strategy.n_groups(),
        n_paulis: problem.set.n_p(),
        seed,
        lower_bound: problem.lower_bound,
        provenance: ResultProvenance {
            seed,
            integrals_sha256: hash,
            n_states: problem.states(states).len(),
            evaluation_states: states,
            tolerances: tolerances(),
            flagged: false,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoleculeEntry {
    pub name: String,
    /// FCIDUMP or JSON integrals; relative paths resolve against the config file.
    pub integrals: PathBuf,
}

fn default_mappings() -> Vec<Mapping> {
    vec![Mapping::Jw]
}

fn default_epsilons() -> Vec<f64> {
    vec![DEFAULT_EPSILON]
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub molecules: Vec<MoleculeEntry>,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub methods: Vec<Method>,
    #[serde(default = "default_mappings")]
    pub mappings: Vec<Mapping>,
    #[serde(default = "default_epsilons")]
    pub epsilon: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub n_states: Option<usize>,
    #[serde(default)]
    pub shadow_frames: Option<usize>,
    #[serde(default)]
    pub qse_fraction: Option<f64>,
    /// Worker threads; all cores when absent.
    #[serde(default)]
    pub parallelism: Option<usize>,
}

impl BenchConfig {
    pub fn from_yaml(text: &str) -> Result<Self> {
        serde_yaml::from_str(text).map_err(|e| Error::Invalid(format!("bench config: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultProvenance {
    pub seed: u64,
    pub integrals_sha256: String,
    pub n_states: usize,
    pub evaluation_states: StateChoice,
    pub tolerances: BTreeMap<String, f64>,
    /// Set when an optimizer fell back or a sampled estimate missed its precision target.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub molecule: String,
    pub task: Task,
    pub method: Method,
    pub mapping: Mapping,
    pub epsilon: f64,
    pub metric_millions: f64,
    pub stderr_millions: f64,
    pub n_groups: Option<usize>,
    pub n_paulis: usize,
    pub seed: u64,
    pub lower_bound: bool,
    pub provenance: ResultProvenance,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    molecule: &'a str,
    task: &'a str,
    method: &'a str,
    mapping: &'a str,
    epsilon: f64,
    metric_millions: f64,
    stderr_millions: f64,
    n_groups: Option<usize>,
    n_paulis: usize,
    seed: u64,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn tolerances() -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("lr_threshold".to_string(), LR_THRESHOLD),
        ("f3_rel_tol".to_string(), F3Options::default().rel_tol),
        ("krylov_tol".to_string(), crate::state::KRYLOV_TOL),
        ("variance_tol".to_string(), crate::state::VARIANCE_TOL),
        ("ima_tol".to_string(), ImaOptions::default().tol),
        ("ics_tol".to_string(), IcsOptions::default().tol),
    ])
}

/// Runs every molecule × task × mapping × method × seed combination; rows come back
/// sorted by that key, with one row per ε.
pub fn run_benchmark(config: &BenchConfig, base_dir: &Path) -> Result<Vec<BenchmarkResult>> {
    if config.methods.is_empty() {
        return Ok(Vec::new());
    }
    for &task in &config.tasks {
        for &method in &config.methods {
            method.check(task)?;
        }
    }
    if let Some(e) = config.epsilon.iter().find(|e| !(**e > 0.0)) {
        return Err(Error::Invalid(format!("epsilon {e} must be positive")));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism.unwrap_or(0))
        .build()
        .map_err(|e| Error::Invalid(e.to_string()))?;
    pool.install(|| {
        let loaded: Vec<(MolecularIntegrals, String)> = config
            .molecules
            .iter()
            .map(|m| {
                let path = if m.integrals.is_absolute() { m.integrals.clone() } else { base_dir.join(&m.integrals) };
                read_integrals(&path, &m.name)
            })
            .collect::<Result<_>>()?;
        let mut keys = Vec::new();
        for (i, _) in config.molecules.iter().enumerate() {
            for &task in &config.tasks {
                for &mapping in &config.mappings {
                    keys.push((i, task, mapping));
                }
            }
        }
        let problems: Vec<Problem> = keys
            .par_iter()
            .map(|&(i, task, mapping)| {
                let name = &config.molecules[i].name;
                Problem::new(name, loaded[i].0.clone(), task, mapping, config.n_states, config.qse_fraction)
            })
            .collect::<Result<_>>()?;
        let mut combos = Vec::new();
        for p in 0..problems.len() {
            for &method in &config.methods {
                for &seed in &config.seeds {
                    combos.push((p, method, seed));
                }
            }
        }
        let rows: Vec<Vec<BenchmarkResult>> = combos
            .par_iter()
            .map(|&(p, method, seed)| {
                let problem = &problems[p];
                let opts = StrategyOptions { seed, shadow_frames: config.shadow_frames, ..Default::default() };
                let strategy = build_strategy(problem, method, &opts)?;
                let metric = evaluate(problem, &strategy, &problem.exact)?;
                let flagged = match &strategy {
                    Strategy::Shadow { budget: Budget::Frames { .. }, .. } => {
                        metric.value > 0.0 && metric.stderr / metric.value > crate::shadows::TARGET_REL_STDERR
                    }
                    _ => false,
                };
                let (_, hash) = &loaded[keys[p].0];
                Ok(config
                    .epsilon
                    .iter()
                    .map(|&eps| BenchmarkResult {
                        molecule: problem.molecule.clone(),
                        task: problem.task,
                        method,
                        mapping: problem.mapping,
                        epsilon: eps,
                        metric_millions: metric.millions(eps),
                        stderr_millions: metric.stderr_millions(eps),
                        n_groups: strategy.n_groups(),
                        n_paulis: problem.set.n_p(),
                        seed,
                        lower_bound: problem.lower_bound,
                        provenance: ResultProvenance {
                            seed,
                            integrals_sha256: hash.clone(),
                            n_states: problem.exact.len(),
                            evaluation_states: StateChoice::Fci,
                            tolerances: tolerances(),
                            flagged,
                        },
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        Ok(rows.into_iter().flatten().collect())
    })
}

/// Iterations after which ensemble VQE outspends QSE, per molecule and ε.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NCritRow {
    pub molecule: String,
    pub epsilon: f64,
    pub mc_method: Method,
    pub qse_method: Method,
    pub mc_millions: f64,
    pub ground_millions: f64,
    pub qse_millions: f64,
    pub n_crit: Option<u64>,
}

/// Pairs the cheapest MC method with its own ground-state cost and the cheapest QSE method.
pub fn n_crit_table(results: &[BenchmarkResult]) -> Vec<NCritRow> {
    let mut keys: Vec<(String, u64)> = results.iter().map(|r| (r.molecule.clone(), r.epsilon.to_bits())).collect();
    keys.sort();
    keys.dedup();
    let best = |mol: &str, eps: u64, task: Task, method: Option<Method>| {
        results
            .iter()
            .filter(|r| r.molecule == mol && r.epsilon.to_bits() == eps && r.task == task)
            .filter(|r| method.is_none_or(|m| r.method == m))
            .min_by(|a, b| a.metric_millions.total_cmp(&b.metric_millions))
    };
    keys.into_iter()
        .filter_map(|(mol, eps)| {
            let mc = best(&mol, eps, Task::Mc, None)?;
            let ground = best(&mol, eps, Task::Ground, Some(mc.method))?;
            let qse = best(&mol, eps, Task::Qse, None)?;
            Some(NCritRow {
                molecule: mol.clone(),
                epsilon: f64::from_bits(eps),
                mc_method: mc.method,
                qse_method: qse.method,
                mc_millions: mc.metric_millions,
                ground_millions: ground.metric_millions,
                qse_millions: qse.metric_millions,
                n_crit: n_crit(mc.metric_millions, ground.metric_millions, qse.metric_millions).ok(),
            })
        })
        .collect()
}

fn csv_error(e: csv::Error) -> Error {
    Error::Invalid(format!("csv: {e}"))
}

/// Writes `results.csv` and `results.json`, plus `ncrit.csv` when all three tasks ran.
pub fn write_reports(results: &[BenchmarkResult], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join("results.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(csv_error)?;
    if results.is_empty() {
        w.write_record([
            "molecule",
            "task",
            "method",
            "mapping",
            "epsilon",
            "metric_millions",
            "stderr_millions",
            "n_groups",
            "n_paulis",
            "seed",
        ])
        .map_err(csv_error)?;
    }
    for r in results {
        w.serialize(CsvRow {
            molecule: &r.molecule,
            task: r.task.name(),
            method: r.method.name(),
            mapping: r.mapping.name(),
            epsilon: r.epsilon,
            metric_millions: r.metric_millions,
            stderr_millions: r.stderr_millions,
            n_groups: r.n_groups,
            n_paulis: r.n_paulis,
            seed: r.seed,
        })
        .map_err(csv_error)?;
    }
    w.flush()?;
    let json_path = dir.join("results.json");
    std::fs::write(&json_path, serde_json::to_string_pretty(results)?)?;
    let mut out = vec![csv_path, json_path];
    let table = n_crit_table(results);
    if !table.is_empty() {
        let path = dir.join("ncrit.csv");
        let mut w = csv::Writer::from_path(&path).map_err(csv_error)?;
        for row in &table {
            w.serialize(row).map_err(csv_error)?;
        }
        w.flush()?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
        for t in [Task::Ground, Task::Qse, Task::Mc] {
            assert_eq!(t.name().parse::<Task>().unwrap(), t);
        }
    }

    #[test]
    fn infeasible_pairs_are_rejected() {
        assert!(Method::F3.check(Task::Qse).is_err());
        assert!(Method::FcIcs.check(Task::Qse).is_err());
        assert!(Method::F3.check(Task::Mc).is_ok());
        assert!(Method::MajoranaCs.check(Task::Qse).is_ok());
    }

    #[test]
    fn empty_method_list_is_empty() {
        let cfg = BenchConfig::from_yaml("molecules: [{name: x, integrals: nowhere.fcidump}]\ntasks: [mc]\n").unwrap();
        assert!(run_benchmark(&cfg, Path::new(".")).unwrap().is_empty());
    }

    #[test]
    fn missing_integrals_are_an_error() {
        let cfg = BenchConfig::from_yaml(
            "molecules: [{name: x, integrals: nowhere.fcidump}]\ntasks: [mc]\nmethods: [fc-si]\n",
        )
        .unwrap();
        let err = run_benchmark(&cfg, Path::new("/nonexistent")).unwrap_err();
        assert!(err.to_string().contains("missing integral file"));
    }

    #[test]
    fn n_crit_rows_pair_tasks() {
        let row = |task, method, v| BenchmarkResult {
            molecule: "m".into(),
            task,
            method,
            mapping: Mapping::Jw,
            epsilon: 1e-3,
            metric_millions: v,
            stderr_millions: 0.0,
            n_groups: None,
            n_paulis: 1,
            seed: 0,
            lower_bound: false,
            provenance: ResultProvenance {
                seed: 0,
                integrals_sha256: String::new(),
                n_states: 1,
                evaluation_states: StateChoice::Fci,
                tolerances: BTreeMap::new(),
                flagged: false,
            },
        };
        let rows = vec![
            row(Task::Mc, Method::F3, 2.0),
            row(Task::Mc, Method::FcSi, 3.0),
            row(Task::Ground, Method::F3, 0.5),
            row(Task::Ground, Method::FcSi, 0.1),
            row(Task::Qse, Method::MajoranaCs, 4.0),
        ];
        let t = n_crit_table(&rows);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].mc_method, Method::F3);
        assert_eq!(t[0].n_crit, Some(3));
    }
}
