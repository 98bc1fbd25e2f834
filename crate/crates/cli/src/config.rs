//! Flat key-value run configuration (TOML) with `key=value` overrides.

use std::path::PathBuf;
use std::str::FromStr;

use clustervqe::engines::{ClusterMode, EngineConfig, EngineKind, MinimizeOptions};
use clustervqe::partition::{Clustering, PartitionMethod, QuboSolver};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// FCIDUMP file, Pauli-sum text file, or an ingested bundle directory.
    pub input: String,
    /// Electron count; required for Pauli-sum input.
    pub electrons: Option<usize>,
    /// Twice the spin projection; defaults to electrons mod 2.
    pub ms2: Option<i32>,
    pub engine: String,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub prune_tol: f64,
    /// spin_fallback | fixed | on_the_fly
    pub clustering: String,
    /// Explicit clustering (JSON list of cluster ids); used by `fixed`.
    pub cluster_file: Option<String>,
    pub clusters: usize,
    pub capacities: Option<Vec<usize>>,
    /// exhaustive | refine | mi_selection | modularity
    pub partition: String,
    pub qubo_f: f64,
    pub qubo_lambda: f64,
    /// exhaustive | annealing
    pub solver: String,
    pub seed: u64,
    pub gtol: f64,
    pub max_evals: usize,
    pub iqcc_exclude_used: bool,
    pub freeze_dressing: bool,
    pub verify_factorization: bool,
    pub output: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let e = EngineConfig::default();
        Self {
            input: String::new(),
            electrons: None,
            ms2: None,
            engine: e.kind.name().to_string(),
            epsilon: e.epsilon,
            max_iterations: e.max_iterations,
            prune_tol: e.prune_tol,
            clustering: "spin_fallback".to_string(),
            cluster_file: None,
            clusters: 2,
            capacities: None,
            partition: "exhaustive".to_string(),
            qubo_f: 0.5,
            qubo_lambda: 2.0,
            solver: "annealing".to_string(),
            seed: 0,
            gtol: e.optimizer.gtol,
            max_evals: e.optimizer.max_evals,
            iqcc_exclude_used: e.iqcc_exclude_used,
            freeze_dressing: e.freeze_dressing,
            verify_factorization: e.verify_factorization,
            output: "run".to_string(),
        }
    }
}

/// How the clustering is obtained before the engine starts.
#[derive(Clone, Debug, PartialEq)]
pub enum ClusterSource {
    Spin,
    File(PathBuf),
    /// Partition the MI of the exact ground state (`fixed` without a file).
    ExactMi,
}

impl RunConfig {
    /// Reads `text` as TOML, then applies each `key=value` override. Values
    /// are read as TOML literals, falling back to a bare string.
    pub fn load(text: Option<&str>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table: toml::Table = match text {
            Some(t) => t.parse().map_err(|e: toml::de::Error| CliError::Usage(format!("config: {e}")))?,
            None => toml::Table::new(),
        };
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("override {o:?} is not key=value")))?;
            let value = format!("v = {v}")
                .parse::<toml::Table>()
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(v.to_string()));
            table.insert(k.trim().to_string(), value);
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Usage(format!("config: {}", e.message())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Every problem with the config, or the engine settings it describes.
    pub fn validate(&self) -> Result<(EngineConfig, ClusterSource), CliError> {
        let mut problems = Vec::new();
        if self.input.is_empty() {
            problems.push("input is required".to_string());
        }
        let kind = EngineKind::from_str(&self.engine)
            .map_err(|_| problems.push(format!("unknown engine {:?}", self.engine)))
            .ok();
        if !matches!(self.partition.as_str(), "exhaustive" | "refine" | "mi_selection" | "modularity") {
            problems.push(format!("unknown partition method {:?}", self.partition));
        }
        if !matches!(self.solver.as_str(), "exhaustive" | "annealing") {
            problems.push(format!("unknown solver {:?}", self.solver));
        }
        let source = match (self.clustering.as_str(), &self.cluster_file) {
            ("spin_fallback", _) | ("on_the_fly", None) => Some(ClusterSource::Spin),
            ("fixed", None) => Some(ClusterSource::ExactMi),
            ("fixed", Some(f)) | ("on_the_fly", Some(f)) => Some(ClusterSource::File(PathBuf::from(f))),
            (other, _) => {
                problems.push(format!("unknown clustering mode {other:?}"));
                None
            }
        };
        if self.clusters == 0 {
            problems.push("clusters must be at least 1".to_string());
        }
        if let Some(c) = &self.capacities {
            if c.len() != self.clusters {
                problems.push(format!("{} capacities for {} clusters", c.len(), self.clusters));
            }
        }
        if !(0.0..=1.0).contains(&self.qubo_f) {
            problems.push(format!("qubo_f must lie in [0, 1], got {}", self.qubo_f));
        }
        if self.output.is_empty() {
            problems.push("output directory is required".to_string());
        }
        let engine = EngineConfig {
            kind: kind.unwrap_or(EngineKind::ClusterVqe),
            epsilon: self.epsilon,
            max_iterations: self.max_iterations,
            prune_tol: self.prune_tol,
            cluster_mode: ClusterMode::SpinFallback,
            optimizer: MinimizeOptions {
                gtol: self.gtol,
                max_evals: self.max_evals,
                ..MinimizeOptions::default()
            },
            iqcc_exclude_used: self.iqcc_exclude_used,
            freeze_dressing: self.freeze_dressing,
            verify_factorization: self.verify_factorization,
        };
        if let Err(e) = engine.validate() {
            problems.push(e.to_string());
        }
        if !problems.is_empty() {
            return Err(CliError::Usage(problems.join("\n")));
        }
        Ok((engine, source.expect("checked")))
    }

    pub fn partition_method(&self) -> PartitionMethod {
        match self.partition.as_str() {
            "refine" => PartitionMethod::Refine,
            "mi_selection" => PartitionMethod::MiSelection {
                f: self.qubo_f,
                lambda: self.qubo_lambda,
            },
            "modularity" => PartitionMethod::Modularity,
            _ => PartitionMethod::Exhaustive,
        }
    }

    pub fn qubo_solver(&self) -> QuboSolver {
        match self.solver.as_str() {
            "exhaustive" => QuboSolver::Exhaustive,
            _ => QuboSolver::Annealing { seed: self.seed },
        }
    }

    /// The cluster mode once the initial clustering is known.
    pub fn cluster_mode(&self, initial: Option<Clustering>) -> ClusterMode {
        match (self.clustering.as_str(), initial) {
            ("on_the_fly", initial) => ClusterMode::OnTheFly {
                initial,
                method: self.partition_method(),
                clusters: self.clusters,
                capacities: self.capacities.clone(),
                solver: self.qubo_solver(),
            },
            ("fixed", Some(c)) => ClusterMode::Fixed(c),
            _ => ClusterMode::SpinFallback,
        }
    }
}
