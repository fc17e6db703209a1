use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use qmeasure::fermion::Mapping;
use qmeasure::metrics::{
    evaluate_plan_file, make_plan_file, parse_matrix, run_benchmark, solve_qse, write_reports, BenchConfig, Method,
    PlanFile, StateChoice, StrategyOptions, Task, QSE_THRESHOLD,
};

#[derive(Parser)]
#[command(name = "qmeasure", version, about = "Measurement-cost benchmarks for VQE, QSE and multi-state tasks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MappingArg {
    Jw,
    Bk,
}

impl From<MappingArg> for Mapping {
    fn from(m: MappingArg) -> Self {
        match m {
            MappingArg::Jw => Mapping::Jw,
            MappingArg::Bk => Mapping::Bk,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StatesArg {
    Fci,
    Cisd,
}

impl From<StatesArg> for StateChoice {
    fn from(s: StatesArg) -> Self {
        match s {
            StatesArg::Fci => StateChoice::Fci,
            StatesArg::Cisd => StateChoice::Cisd,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build a measurement strategy and store it as JSON.
    Plan {
        #[arg(long)]
        task: Task,
        #[arg(long)]
        method: Method,
        #[arg(long, value_enum, default_value = "jw")]
        mapping: MappingArg,
        /// FCIDUMP file.
        #[arg(long)]
        integrals: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of states for the mc task.
        #[arg(long)]
        ns: Option<usize>,
        /// Keep only this leading fraction of the qse observables.
        #[arg(long)]
        qse_fraction: Option<f64>,
        /// Sample this many shadow frames instead of the closed-form variance.
        #[arg(long)]
        shadow_frames: Option<usize>,
    },
    /// Evaluate a stored plan on exact or proxy states.
    Evaluate {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long, value_enum, default_value = "fci")]
        states: StatesArg,
        #[arg(long)]
        ns: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a YAML benchmark grid and write CSV/JSON reports.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Solve the generalized eigenproblem H c = E S c.
    QseSolve {
        #[arg(long)]
        hmat: PathBuf,
        #[arg(long)]
        smat: PathBuf,
        #[arg(long, default_value_t = QSE_THRESHOLD)]
        threshold: f64,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Plan { task, method, mapping, integrals, out, seed, ns, qse_fraction, shadow_frames } => {
            let integrals = fs::canonicalize(&integrals)
                .with_context(|| format!("missing integral file {}", integrals.display()))?;
            let opts = StrategyOptions { seed, shadow_frames, ..StrategyOptions::default() };
            let plan = make_plan_file(&integrals, task, method, mapping.into(), &opts, ns, qse_fraction)?;
            write_json(&out, &plan)?;
            println!("{} {} {}: {} Paulis -> {}", plan.molecule, task, method, plan.n_paulis, out.display());
        }
        Command::Evaluate { plan, epsilon, states, ns, seed, out } => {
            let file: PlanFile = serde_json::from_str(&read(&plan)?).context("parsing plan")?;
            let base = plan.parent().unwrap_or(Path::new("."));
            let r = evaluate_plan_file(&file, base, epsilon, states.into(), ns, seed)?;
            println!(
                "{} {} {} {}: {:.6} ± {:.6} million",
                r.molecule,
                r.task,
                r.method,
                r.mapping.name(),
                r.metric_millions,
                r.stderr_millions
            );
            if let Some(out) = out {
                write_json(&out, &r)?;
            }
        }
        Command::Bench { config, out_dir } => {
            let cfg = BenchConfig::from_yaml(&read(&config)?)?;
            let base = config.parent().unwrap_or(Path::new("."));
            let results = run_benchmark(&cfg, base)?;
            fs::create_dir_all(&out_dir)?;
            for path in write_reports(&results, &out_dir)? {
                println!("{}", path.display());
            }
        }
        Command::QseSolve { hmat, smat, threshold } => {
            let h = parse_matrix(&read(&hmat)?)?;
            let s = parse_matrix(&read(&smat)?)?;
            for e in solve_qse(&h, &s, threshold)? {
                println!("{e:.12}");
            }
        }
    }
    Ok(())
}
