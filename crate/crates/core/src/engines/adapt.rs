//! Full-register drivers: fixed Trotterized pool ansatz and qubit-ADAPT-VQE.

use std::time::Instant;

use super::{
    circuit_energy_gradient, minimize, pool_gradients, select_entangler, AnsatzElement, EngineConfig,
    EngineKind, EngineOutcome, EngineProblem, IterationRecord, Placement, StallWatch,
};
use crate::error::Result;
use crate::pauli::PauliWord;
use crate::statevec::StateVector;

fn circuit(elements: &[AnsatzElement], angles: &[f64]) -> Vec<(PauliWord, f64)> {
    elements.iter().zip(angles).map(|(e, a)| (e.generator, *a)).collect()
}

fn prepare(problem: &EngineProblem<'_>, gates: &[(PauliWord, f64)]) -> Result<StateVector> {
    let mut s = StateVector::basis_state(problem.hamiltonian.n_qubits(), problem.reference)?;
    for (p, a) in gates {
        s.apply_rotation(p, *a)?;
    }
    Ok(s)
}

/// Every pool word once, pool order, optimized together from zero.
pub(super) fn run_vqe(config: &EngineConfig, problem: &EngineProblem<'_>) -> Result<EngineOutcome> {
    let start = Instant::now();
    let h = problem.hamiltonian;
    let elements: Vec<AnsatzElement> = problem
        .pool
        .iter()
        .enumerate()
        .map(|(k, p)| AnsatzElement {
            generator: *p,
            pool_index: k,
            angle: 0.0,
            selected_at: 0,
            placement: Placement::Monolithic,
        })
        .collect();
    let x0 = vec![0.0; elements.len()];
    let mut failure = None;
    let m = minimize(
        |x| match circuit_energy_gradient(h, problem.reference, &circuit(&elements, x)) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                (f64::INFINITY, vec![0.0; x.len()])
            }
        },
        &x0,
        &config.optimizer,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let elements: Vec<AnsatzElement> = elements
        .into_iter()
        .zip(&m.x)
        .map(|(e, a)| AnsatzElement { angle: *a, ..e })
        .collect();
    let record = IterationRecord {
        iteration: 1,
        pool_index: None,
        generator: None,
        placement: None,
        energy: m.value,
        max_gradient: m.gradient.iter().fold(0.0, |a, g| a.max(g.abs())),
        term_count: h.len(),
        parameters: m.x.clone(),
        optimizer_evals: m.evals,
        wall_time_s: start.elapsed().as_secs_f64(),
        clustering: None,
        full_energy: None,
    };
    Ok(EngineOutcome {
        kind: EngineKind::Vqe,
        records: vec![record],
        converged: m.converged,
        elements,
        dressers: Vec::new(),
        clustering: None,
        final_energy: m.value,
    })
}

pub(super) fn run_adapt(config: &EngineConfig, problem: &EngineProblem<'_>) -> Result<EngineOutcome> {
    let h = problem.hamiltonian;
    let mut elements: Vec<AnsatzElement> = Vec::new();
    let mut angles: Vec<f64> = Vec::new();
    let mut records = Vec::new();
    let mut converged = false;
    let mut stall = StallWatch::new();
    let mut energy = crate::statevec::basis_expectation(h, problem.reference);
    for it in 1..=config.max_iterations + 1 {
        let start = Instant::now();
        let state = prepare(problem, &circuit(&elements, &angles))?;
        let grads = pool_gradients(h, &state, problem.pool)?;
        let (idx, gmax) = select_entangler(&grads).expect("pool checked nonempty");
        if gmax < config.epsilon {
            converged = true;
            break;
        }
        if it > config.max_iterations {
            break;
        }
        stall.observe(idx, gmax);
        elements.push(AnsatzElement {
            generator: problem.pool[idx],
            pool_index: idx,
            angle: 0.0,
            selected_at: it,
            placement: Placement::Monolithic,
        });
        angles.push(0.0);
        let mut failure = None;
        let m = minimize(
            |x| match circuit_energy_gradient(h, problem.reference, &circuit(&elements, x)) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    (f64::INFINITY, vec![0.0; x.len()])
                }
            },
            &angles,
            &config.optimizer,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        angles = m.x;
        energy = m.value;
        for (e, a) in elements.iter_mut().zip(&angles) {
            e.angle = *a;
        }
        records.push(IterationRecord {
            iteration: it,
            pool_index: Some(idx),
            generator: Some(problem.pool[idx]),
            placement: Some(Placement::Monolithic),
            energy,
            max_gradient: gmax,
            term_count: h.len(),
            parameters: angles.clone(),
            optimizer_evals: m.evals,
            wall_time_s: start.elapsed().as_secs_f64(),
            clustering: None,
            full_energy: None,
        });
    }
    Ok(EngineOutcome {
        kind: EngineKind::Adapt,
        records,
        converged,
        elements,
        dressers: Vec::new(),
        clustering: None,
        final_energy: energy,
    })
}
