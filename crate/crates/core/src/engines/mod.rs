//! Optimization drivers: plain VQE, qubit-ADAPT-VQE, iQCC and ClusterVQE.
//!
//! Rotations are `e^{iθP}`. Dressers conjugate in list order (oldest first),
//! so the newest dresser sits next to the cluster circuits in the state
//! `D_1⋯D_K·(Π_c C_c)|Φ⟩` and the pool gradient `i⟨[H_d, P]⟩` on the product
//! state is the exact derivative of the extended ansatz.

mod adapt;
pub mod cluster;
mod clustervqe;
pub mod dressing;
mod iqcc;
pub mod lbfgs;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entanglement::fmt_sig12;
use crate::error::{Error, Result};
use crate::partition::{Clustering, PartitionMethod, QuboSolver};
use crate::pauli::{i_pow, PauliSum, PauliWord};
use crate::statevec::{sum_times, word_times, StateVector};

pub use cluster::{circuit_energy_gradient, clustered_energy, ClusterLayout, FactorTable, ProductState};
pub use clustervqe::ClusterModel;
pub use dressing::{dress_hamiltonian, DressingPlan};
pub use iqcc::{angle_profile, AngleProfile};
pub use lbfgs::{minimize, MinimizeOptions, Minimum};

/// Consecutive identical selections before a stall warning.
const STALL_REPEATS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Vqe,
    Adapt,
    Iqcc,
    ClusterVqe,
}

impl EngineKind {
    pub fn name(&self) -> &'static str {
        match self {
            EngineKind::Vqe => "vqe",
            EngineKind::Adapt => "adapt",
            EngineKind::Iqcc => "iqcc",
            EngineKind::ClusterVqe => "cluster_vqe",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "vqe" => Ok(EngineKind::Vqe),
            "adapt" | "qubit_adapt" => Ok(EngineKind::Adapt),
            "iqcc" => Ok(EngineKind::Iqcc),
            "cluster_vqe" | "clustervqe" => Ok(EngineKind::ClusterVqe),
            other => Err(Error::invalid(format!("unknown engine {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Intra(usize),
    Cross,
    Monolithic,
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Placement::Intra(c) => write!(f, "intra:{c}"),
            Placement::Cross => f.write_str("cross"),
            Placement::Monolithic => f.write_str("monolithic"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzElement {
    pub generator: PauliWord,
    pub pool_index: usize,
    pub angle: f64,
    pub selected_at: usize,
    pub placement: Placement,
}

/// How ClusterVQE obtains its clustering.
#[derive(Clone, Debug, PartialEq)]
pub enum ClusterMode {
    Fixed(Clustering),
    /// α block | β block.
    SpinFallback,
    /// Re-partition from the MI of the current state every iteration.
    OnTheFly {
        initial: Option<Clustering>,
        method: PartitionMethod,
        clusters: usize,
        capacities: Option<Vec<usize>>,
        solver: QuboSolver,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineConfig {
    pub kind: EngineKind,
    /// Stop once every pool gradient magnitude is below this.
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Pruning applied to dressed Hamiltonians.
    pub prune_tol: f64,
    pub cluster_mode: ClusterMode,
    pub optimizer: MinimizeOptions,
    /// iQCC: skip entanglers already folded in.
    pub iqcc_exclude_used: bool,
    /// ClusterVQE: optimize a dresser's angle only in the iteration it joins.
    pub freeze_dressing: bool,
    /// ClusterVQE: also evaluate each iterate on the full register.
    pub verify_factorization: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            kind: EngineKind::ClusterVqe,
            epsilon: 1e-4,
            max_iterations: 25,
            prune_tol: 1e-10,
            cluster_mode: ClusterMode::SpinFallback,
            optimizer: MinimizeOptions::default(),
            iqcc_exclude_used: false,
            freeze_dressing: false,
            verify_factorization: false,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.epsilon > 0.0) {
            problems.push(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.max_iterations == 0 {
            problems.push("max_iterations must be at least 1".to_string());
        }
        if !(self.prune_tol >= 0.0) {
            problems.push(format!("prune_tol must be non-negative, got {}", self.prune_tol));
        }
        if !(self.optimizer.gtol > 0.0) || self.optimizer.max_evals == 0 {
            problems.push("optimizer needs gtol > 0 and max_evals ≥ 1".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(problems.join("; ")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub pool_index: Option<usize>,
    pub generator: Option<PauliWord>,
    pub placement: Option<Placement>,
    pub energy: f64,
    pub max_gradient: f64,
    pub term_count: usize,
    pub parameters: Vec<f64>,
    pub optimizer_evals: usize,
    pub wall_time_s: f64,
    pub clustering: Option<Vec<usize>>,
    /// Full-register energy of the same iterate, when requested.
    pub full_energy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineOutcome {
    pub kind: EngineKind,
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    pub elements: Vec<AnsatzElement>,
    /// ClusterVQE dresser element indices in conjugation order.
    pub dressers: Vec<usize>,
    pub clustering: Option<Vec<usize>>,
    pub final_energy: f64,
}

/// Hamiltonian, pool and reference determinant for one run.
#[derive(Clone, Copy, Debug)]
pub struct EngineProblem<'a> {
    pub hamiltonian: &'a PauliSum,
    pub pool: &'a [PauliWord],
    pub reference: u64,
}

impl EngineProblem<'_> {
    fn validate(&self) -> Result<()> {
        let n = self.hamiltonian.n_qubits();
        if self.pool.is_empty() {
            return Err(Error::invalid("operator pool is empty"));
        }
        for p in self.pool {
            crate::error::check_dim(n, p.n_qubits())?;
        }
        if self.reference & !crate::pauli::low_mask(n) != 0 {
            return Err(Error::invalid("reference mask has bits beyond the register"));
        }
        let imag = self.hamiltonian.max_imag();
        if imag > 1e-10 {
            return Err(Error::NonHermitian(imag));
        }
        Ok(())
    }
}

pub fn run_engine(config: &EngineConfig, problem: &EngineProblem<'_>) -> Result<EngineOutcome> {
    config.validate()?;
    problem.validate()?;
    match config.kind {
        EngineKind::Vqe => adapt::run_vqe(config, problem),
        EngineKind::Adapt => adapt::run_adapt(config, problem),
        EngineKind::Iqcc => iqcc::run_iqcc(config, problem),
        EngineKind::ClusterVqe => clustervqe::run_cluster_vqe(config, problem),
    }
}

/// `i⟨ψ|[H, P_k]|ψ⟩ = −2 Im⟨Hψ|P_k ψ⟩` for every pool word.
pub fn pool_gradients(h: &PauliSum, state: &StateVector, pool: &[PauliWord]) -> Result<Vec<f64>> {
    crate::error::check_dim(h.n_qubits(), state.n_qubits())?;
    for p in pool {
        crate::error::check_dim(h.n_qubits(), p.n_qubits())?;
    }
    let h_psi = sum_times(state.amplitudes(), h);
    Ok(pool
        .par_iter()
        .map(|p| {
            let p_psi = word_times(state.amplitudes(), p);
            -2.0 * crate::statevec::inner(&h_psi, &p_psi).im
        })
        .collect())
}

/// Pool gradients in a computational basis state: only terms flipping the same
/// qubits as `P_k` and anticommuting with it contribute.
pub fn basis_pool_gradients(h: &PauliSum, occupation: u64, pool: &[PauliWord]) -> Result<Vec<f64>> {
    for p in pool {
        crate::error::check_dim(h.n_qubits(), p.n_qubits())?;
    }
    let terms: Vec<(&PauliWord, &Complex64)> = h.iter().collect();
    Ok(pool
        .par_iter()
        .map(|p| {
            let mut g = 0.0;
            for (a, c) in &terms {
                if a.x_mask() != p.x_mask() || a.commutes_unchecked(p) {
                    continue;
                }
                // [A, P] = 2 i^e W with W diagonal
                let (w, e) = a.mul_exp(p);
                let s = if (occupation & w.z_mask()).count_ones() & 1 == 1 { -1.0 } else { 1.0 };
                g += (**c * Complex64::new(0.0, 2.0) * i_pow(e)).re * s;
            }
            g
        })
        .collect())
}

/// Index of the largest `|g|`; ties go to the smallest index.
pub fn select_entangler(gradients: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (k, g) in gradients.iter().enumerate() {
        if best.map_or(true, |(_, b)| g.abs() > b) {
            best = Some((k, g.abs()));
        }
    }
    best
}

struct StallWatch {
    last: Option<(usize, f64)>,
    repeats: usize,
}

impl StallWatch {
    fn new() -> Self {
        Self {
            last: None,
            repeats: 0,
        }
    }

    fn observe(&mut self, idx: usize, g: f64) {
        match self.last {
            Some((i, prev)) if i == idx && (prev - g).abs() <= 1e-12 * g.abs().max(1.0) => {
                self.repeats += 1;
                if self.repeats >= STALL_REPEATS {
                    log::warn!("pool entry {idx} selected {} times in a row with unchanged gradient {g:e}", self.repeats + 1);
                }
            }
            _ => self.repeats = 0,
        }
        self.last = Some((idx, g));
    }
}

/// Full-register state of a finished run, rebuilt from its elements.
/// iQCC applies its entanglers newest-first; ClusterVQE applies the cluster
/// circuits, then its dressers newest-first.
pub fn outcome_state(problem: &EngineProblem<'_>, outcome: &EngineOutcome) -> Result<StateVector> {
    let mut s = StateVector::basis_state(problem.hamiltonian.n_qubits(), problem.reference)?;
    match outcome.kind {
        EngineKind::Vqe | EngineKind::Adapt => {
            for e in &outcome.elements {
                s.apply_rotation(&e.generator, e.angle)?;
            }
        }
        EngineKind::Iqcc => {
            for e in outcome.elements.iter().rev() {
                s.apply_rotation(&e.generator, e.angle)?;
            }
        }
        EngineKind::ClusterVqe => {
            for e in &outcome.elements {
                if let Placement::Intra(_) = e.placement {
                    s.apply_rotation(&e.generator, e.angle)?;
                }
            }
            for &k in outcome.dressers.iter().rev() {
                let e = outcome
                    .elements
                    .get(k)
                    .ok_or_else(|| Error::invalid(format!("dresser index {k} out of range")))?;
                s.apply_rotation(&e.generator, e.angle)?;
            }
        }
    }
    Ok(s)
}

/// One CSV row per record: iteration, pool index, generator, placement,
/// energy, error against `exact` (empty if absent), max gradient, term count.
/// Twelve significant digits; no timing columns, so reruns are byte-identical.
pub fn records_to_csv(records: &[IterationRecord], exact: Option<f64>) -> String {
    let mut out = String::from("iteration,pool_index,generator,placement,energy,error,max_gradient,term_count\n");
    for r in records {
        let opt = |v: Option<String>| v.unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.iteration,
            opt(r.pool_index.map(|v| v.to_string())),
            opt(r.generator.map(|g| g.to_string())),
            opt(r.placement.map(|p| p.to_string())),
            fmt_sig12(r.energy),
            opt(exact.map(|e| fmt_sig12(r.energy - e))),
            fmt_sig12(r.max_gradient),
            r.term_count,
        ));
    }
    out
}
