//! `cvqe`: ingest fixtures, run engines from declarative configs, compare
//! runs, and produce MI matrices and clusterings as data files.

mod config;
mod problem;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use clustervqe::engines::{outcome_state, records_to_csv, run_engine, EngineOutcome, EngineProblem};
use clustervqe::entanglement::{fmt_sig12, mutual_information, MiMatrix};
use clustervqe::partition::{intercluster_mi, partition, Clustering, PartitionMethod, QuboSolver};
use clustervqe::statevec::{exact_ground_state, StateVector, MAX_EXACT_QUBITS};
use serde::{Deserialize, Serialize};

use config::{ClusterSource, RunConfig};
use problem::{json, read, write, BundleInfo, Problem};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl From<clustervqe::Error> for CliError {
    fn from(e: clustervqe::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

const EXIT_BUDGET: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;

#[derive(Parser)]
#[command(name = "cvqe", version, about = "ClusterVQE laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the qubit Hamiltonian, HF reference and pool of an input.
    Ingest {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Electron count (Pauli-sum input only).
        #[arg(long)]
        electrons: Option<usize>,
        #[arg(long)]
        ms2: Option<i32>,
    },
    /// Run an engine; exit 0 if converged, 2 if the iteration budget ran out.
    Run {
        /// TOML config; keys as printed by `defaults`.
        config: Option<PathBuf>,
        /// Override one key, e.g. `--set epsilon=1e-3`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Merge error and term-count columns of runs on the same Hamiltonian.
    Compare {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        /// Output CSV; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// MI matrix of a state and the clustering of every partition method.
    Mi {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        electrons: Option<usize>,
        /// Use the final state of this run directory instead of the exact ground state.
        #[arg(long)]
        run: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        clusters: usize,
        #[arg(long, value_delimiter = ',')]
        capacities: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the default run config.
    Defaults,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    version: String,
    config: RunConfig,
    problem: BundleInfo,
    exact_energy: Option<f64>,
    initial_clustering: Option<Vec<usize>>,
    converged: bool,
    final_energy: f64,
    outcome: EngineOutcome,
}

#[derive(Debug, Serialize)]
struct PartitionReport {
    method: String,
    assignment: Option<Vec<usize>>,
    intercluster_mi: Option<f64>,
    error: Option<String>,
}

fn exact_energy(p: &Problem) -> Result<Option<(f64, StateVector)>, CliError> {
    if p.hamiltonian.n_qubits() > MAX_EXACT_QUBITS {
        log::warn!("{} qubits: skipping exact reference", p.hamiltonian.n_qubits());
        return Ok(None);
    }
    let gs = exact_ground_state(&p.hamiltonian, Some(p.electrons))?;
    Ok(Some((gs.energy, gs.state)))
}

fn read_clustering(path: &Path, capacities: Option<Vec<usize>>) -> Result<Clustering, CliError> {
    let c: Clustering = serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(c.with_capacities(capacities)?)
}

fn cmd_ingest(input: &Path, out: &Path, electrons: Option<usize>, ms2: Option<i32>) -> Result<u8, CliError> {
    let p = Problem::load(input, electrons, ms2)?;
    let info = p.write_bundle(out)?;
    println!(
        "{} qubits, {} terms, {} pool words, reference {:0width$b}",
        info.n_qubits,
        info.term_count,
        info.pool_size,
        info.reference,
        width = info.n_qubits
    );
    Ok(0)
}

fn cmd_run(config: Option<&Path>, overrides: &[String]) -> Result<u8, CliError> {
    let text = config.map(read).transpose()?;
    let cfg = RunConfig::load(text.as_deref(), overrides)?;
    let (mut engine, source) = cfg.validate()?;
    let p = Problem::load(Path::new(&cfg.input), cfg.electrons, cfg.ms2)?;
    let exact = exact_energy(&p)?;
    let initial = match source {
        ClusterSource::Spin => None,
        ClusterSource::File(f) => Some(read_clustering(&f, cfg.capacities.clone())?),
        ClusterSource::ExactMi => {
            let (_, state) = exact
                .as_ref()
                .ok_or_else(|| CliError::Data("MI clustering needs the exact ground state".into()))?;
            let mi = mutual_information(state)?;
            Some(partition(
                &mi,
                cfg.partition_method(),
                cfg.clusters,
                cfg.capacities.as_deref(),
                cfg.qubo_solver(),
            )?)
        }
    };
    engine.cluster_mode = cfg.cluster_mode(initial.clone());
    let ep = EngineProblem {
        hamiltonian: &p.hamiltonian,
        pool: &p.pool,
        reference: p.reference,
    };
    let outcome = run_engine(&engine, &ep)?;
    let out = PathBuf::from(&cfg.output);
    std::fs::create_dir_all(&out).map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    let exact_e = exact.map(|(e, _)| e);
    write(&out.join("iterations.csv"), &records_to_csv(&outcome.records, exact_e))?;
    if let Some(c) = &outcome.clustering {
        write(&out.join("clustering.json"), &json(c))?;
    }
    write(&out.join("exact.json"), &json(&BTreeMap::from([("energy", exact_e)])))?;
    let converged = outcome.converged;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg,
        problem: p.info(),
        exact_energy: exact_e,
        initial_clustering: initial.map(|c| c.assignment().to_vec()),
        converged,
        final_energy: outcome.final_energy,
        outcome,
    };
    write(&out.join("manifest.json"), &json(&manifest))?;
    let err = exact_e.map_or(String::new(), |e| format!(", error {}", fmt_sig12(manifest.final_energy - e)));
    println!(
        "{}: {} after {} iterations, energy {}{err}",
        manifest.outcome.kind,
        if converged { "converged" } else { "budget exhausted" },
        manifest.outcome.records.len(),
        fmt_sig12(manifest.final_energy)
    );
    Ok(if converged { 0 } else { EXIT_BUDGET })
}

fn load_manifest(dir: &Path) -> Result<Manifest, CliError> {
    let path = dir.join("manifest.json");
    serde_json::from_str(&read(&path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn compare_table(runs: &[(PathBuf, Manifest)]) -> Result<String, CliError> {
    if runs.len() < 2 {
        return Err(CliError::Usage("compare needs at least two run directories".into()));
    }
    let (first_dir, first) = &runs[0];
    for (dir, m) in &runs[1..] {
        if m.problem.fingerprint != first.problem.fingerprint {
            return Err(CliError::Data(format!(
                "different Hamiltonians: {} has fingerprint {}, {} has {}",
                first_dir.display(),
                first.problem.fingerprint,
                dir.display(),
                m.problem.fingerprint
            )));
        }
    }
    let exact = first.exact_energy;
    let mut header = String::from("iteration,exact");
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, m) in runs {
        let name = m.outcome.kind.name();
        let k = seen.entry(name).or_insert(0);
        *k += 1;
        let label = if *k == 1 { name.to_string() } else { format!("{name}_{k}") };
        header.push_str(&format!(",{label}_energy,{label}_error,{label}_terms"));
    }
    let rows = runs.iter().map(|(_, m)| m.outcome.records.len()).max().unwrap_or(0);
    let mut out = header + "\n";
    for i in 0..rows {
        out.push_str(&format!("{},{}", i + 1, exact.map(fmt_sig12).unwrap_or_default()));
        for (_, m) in runs {
            match m.outcome.records.get(i) {
                Some(r) => out.push_str(&format!(
                    ",{},{},{}",
                    fmt_sig12(r.energy),
                    exact.map(|e| fmt_sig12(r.energy - e)).unwrap_or_default(),
                    r.term_count
                )),
                None => out.push_str(",,,"),
            }
        }
        out.push('\n');
    }
    Ok(out)
}

fn cmd_compare(runs: &[PathBuf], out: Option<&Path>) -> Result<u8, CliError> {
    let loaded = runs
        .iter()
        .map(|d| Ok((d.clone(), load_manifest(d)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let table = compare_table(&loaded)?;
    match out {
        Some(path) => write(path, &table)?,
        None => print!("{table}"),
    }
    Ok(0)
}

fn partition_reports(mi: &MiMatrix, m: usize, caps: Option<&[usize]>, seed: u64) -> Vec<PartitionReport> {
    let methods = [
        PartitionMethod::Exhaustive,
        PartitionMethod::Refine,
        PartitionMethod::MiSelection { f: 0.5, lambda: 2.0 },
        PartitionMethod::Modularity,
    ];
    methods
        .iter()
        .map(|&method| match partition(mi, method, m, caps, QuboSolver::Annealing { seed }) {
            Ok(c) => PartitionReport {
                method: method.name().to_string(),
                intercluster_mi: intercluster_mi(mi, &c).ok(),
                assignment: Some(c.assignment().to_vec()),
                error: None,
            },
            Err(e) => PartitionReport {
                method: method.name().to_string(),
                assignment: None,
                intercluster_mi: None,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_mi(
    input: &Path,
    out: &Path,
    electrons: Option<usize>,
    run: Option<&Path>,
    clusters: usize,
    capacities: Option<&[usize]>,
    seed: u64,
) -> Result<u8, CliError> {
    let p = Problem::load(input, electrons, None)?;
    let state = match run {
        Some(dir) => {
            let m = load_manifest(dir)?;
            if m.problem.fingerprint != problem::fingerprint(&p.hamiltonian) {
                return Err(CliError::Data(format!("{} was run on a different Hamiltonian", dir.display())));
            }
            let ep = EngineProblem {
                hamiltonian: &p.hamiltonian,
                pool: &p.pool,
                reference: p.reference,
            };
            outcome_state(&ep, &m.outcome)?
        }
        None => exact_energy(&p)?
            .ok_or_else(|| CliError::Data("register too large for the exact ground state".into()))?
            .1,
    };
    let mi = mutual_information(&state)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    write(&out.join("mi.csv"), &mi.to_csv())?;
    let reports = partition_reports(&mi, clusters, capacities, seed);
    for r in &reports {
        match (&r.assignment, r.intercluster_mi, &r.error) {
            (Some(a), Some(v), _) => println!("{:<12} {:?} inter-cluster MI {}", r.method, a, fmt_sig12(v)),
            (_, _, Some(e)) => println!("{:<12} failed: {e}", r.method),
            _ => {}
        }
    }
    write(&out.join("partitions.json"), &json(&reports))?;
    Ok(0)
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Ingest {
            input,
            out,
            electrons,
            ms2,
        } => cmd_ingest(&input, &out, electrons, ms2),
        Command::Run { config, overrides } => cmd_run(config.as_deref(), &overrides),
        Command::Compare { runs, out } => cmd_compare(&runs, out.as_deref()),
        Command::Mi {
            input,
            out,
            electrons,
            run,
            clusters,
            capacities,
            seed,
        } => cmd_mi(&input, &out, electrons, run.as_deref(), clusters, capacities.as_deref(), seed),
        Command::Defaults => {
            print!("{}", RunConfig::default().to_toml());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("cvqe: {e}");
            ExitCode::from(match e {
                CliError::Usage(_) => EXIT_USAGE,
                CliError::Data(_) => EXIT_DATA,
            })
        }
    }
}
