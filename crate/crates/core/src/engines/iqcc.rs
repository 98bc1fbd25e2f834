//! Iterative qubit coupled cluster: each optimized entangler is folded into
//! the Hamiltonian and the reference determinant never changes.

use std::time::Instant;

use num_complex::Complex64;

use super::{
    basis_pool_gradients, select_entangler, AnsatzElement, EngineConfig, EngineKind, EngineOutcome,
    EngineProblem, IterationRecord, Placement, StallWatch,
};
use crate::error::Result;
use crate::pauli::{i_pow, PauliSum, PauliWord};
use crate::statevec::basis_expectation;

/// `E(θ) = ⟨Φ|e^{−iθP} H e^{iθP}|Φ⟩ = constant + cos2θ·cos_part + sin2θ·sin_part`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleProfile {
    pub constant: f64,
    pub cos_part: f64,
    pub sin_part: f64,
}

impl AngleProfile {
    pub fn energy(&self, theta: f64) -> f64 {
        let (s, c) = (2.0 * theta).sin_cos();
        self.constant + self.cos_part * c + self.sin_part * s
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        let (s, c) = (2.0 * theta).sin_cos();
        2.0 * (self.sin_part * c - self.cos_part * s)
    }

    /// Global minimizer in `(−π/2, π/2]`.
    pub fn argmin(&self) -> f64 {
        if self.cos_part == 0.0 && self.sin_part == 0.0 {
            return 0.0;
        }
        0.5 * (-self.sin_part).atan2(-self.cos_part)
    }
}

pub fn angle_profile(h: &PauliSum, occupation: u64, p: &PauliWord) -> AngleProfile {
    let sign = |z: u64| if (occupation & z).count_ones() & 1 == 1 { -1.0 } else { 1.0 };
    let mut prof = AngleProfile {
        constant: 0.0,
        cos_part: 0.0,
        sin_part: 0.0,
    };
    for (a, c) in h.iter() {
        let anti = !a.commutes_unchecked(p);
        if a.x_mask() == 0 {
            let v = c.re * sign(a.z_mask());
            if anti {
                prof.cos_part += v;
            } else {
                prof.constant += v;
            }
        }
        if anti && a.x_mask() == p.x_mask() {
            let (w, e) = a.mul_exp(p);
            prof.sin_part += (c * Complex64::new(0.0, 1.0) * i_pow(e)).re * sign(w.z_mask());
        }
    }
    prof
}

pub(super) fn run_iqcc(config: &EngineConfig, problem: &EngineProblem<'_>) -> Result<EngineOutcome> {
    let occ = problem.reference;
    let mut h = problem.hamiltonian.prune(config.prune_tol);
    let mut elements: Vec<AnsatzElement> = Vec::new();
    let mut records = Vec::new();
    let mut used = vec![false; problem.pool.len()];
    let mut converged = false;
    let mut stall = StallWatch::new();
    let mut energy = basis_expectation(&h, occ);
    for it in 1..=config.max_iterations + 1 {
        let start = Instant::now();
        let mut grads = basis_pool_gradients(&h, occ, problem.pool)?;
        if config.iqcc_exclude_used {
            for (g, u) in grads.iter_mut().zip(&used) {
                if *u {
                    *g = 0.0;
                }
            }
        }
        let (idx, gmax) = select_entangler(&grads).expect("pool checked nonempty");
        if gmax < config.epsilon {
            converged = true;
            break;
        }
        if it > config.max_iterations {
            break;
        }
        stall.observe(idx, gmax);
        let p = problem.pool[idx];
        let prof = angle_profile(&h, occ, &p);
        let theta = prof.argmin();
        h = h.conjugate_by_rotation_with_tol(&p, theta, config.prune_tol)?;
        energy = basis_expectation(&h, occ);
        used[idx] = true;
        elements.push(AnsatzElement {
            generator: p,
            pool_index: idx,
            angle: theta,
            selected_at: it,
            placement: Placement::Monolithic,
        });
        records.push(IterationRecord {
            iteration: it,
            pool_index: Some(idx),
            generator: Some(p),
            placement: Some(Placement::Monolithic),
            energy,
            max_gradient: gmax,
            term_count: h.len(),
            parameters: elements.iter().map(|e| e.angle).collect(),
            optimizer_evals: 0,
            wall_time_s: start.elapsed().as_secs_f64(),
            clustering: None,
            full_energy: None,
        });
    }
    Ok(EngineOutcome {
        kind: EngineKind::Iqcc,
        records,
        converged,
        elements,
        dressers: Vec::new(),
        clustering: None,
        final_energy: energy,
    })
}
