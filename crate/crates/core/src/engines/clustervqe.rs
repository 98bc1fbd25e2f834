//! ClusterVQE: per-cluster circuits plus a dressed Hamiltonian carrying the
//! cross-cluster entanglers.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use super::cluster::{ClusterLayout, FactorTable, ProductState};
use super::dressing::{dress_hamiltonian, DressingPlan};
use super::{
    circuit_energy_gradient, minimize, select_entangler, AnsatzElement, ClusterMode, EngineConfig, EngineKind, EngineOutcome,
    EngineProblem, IterationRecord, Placement, StallWatch,
};
use crate::entanglement::mutual_information;
use crate::error::{Error, Result};
use crate::partition::{partition, Clustering};
use crate::pauli::{i_pow, PauliSum, PauliWord};
use crate::statevec::{word_expectation, StateVector};

/// Ansatz state of a ClusterVQE run: every selected element with its
/// placement, the dresser order, and the compiled dressing expansion.
#[derive(Clone, Debug)]
pub struct ClusterModel {
    h: PauliSum,
    reference: u64,
    clustering: Clustering,
    layout: ClusterLayout,
    elements: Vec<AnsatzElement>,
    dressers: Vec<usize>,
    plan: DressingPlan,
    table: FactorTable,
}

impl ClusterModel {
    pub fn new(h: &PauliSum, reference: u64, clustering: Clustering) -> Result<Self> {
        crate::error::check_dim(h.n_qubits(), clustering.n_qubits())?;
        let layout = ClusterLayout::new(&clustering);
        let plan = DressingPlan::build(h, &[])?;
        let table = FactorTable::build(&layout, plan.words());
        Ok(Self {
            h: h.clone(),
            reference,
            clustering,
            layout,
            elements: Vec::new(),
            dressers: Vec::new(),
            plan,
            table,
        })
    }

    pub fn clustering(&self) -> &Clustering {
        &self.clustering
    }

    pub fn elements(&self) -> &[AnsatzElement] {
        &self.elements
    }

    pub fn dressers(&self) -> &[usize] {
        &self.dressers
    }

    pub fn angles(&self) -> Vec<f64> {
        self.elements.iter().map(|e| e.angle).collect()
    }

    pub fn set_angles(&mut self, angles: &[f64]) -> Result<()> {
        crate::error::check_dim(self.elements.len(), angles.len())?;
        for (e, a) in self.elements.iter_mut().zip(angles) {
            e.angle = *a;
        }
        Ok(())
    }

    pub fn plan(&self) -> &DressingPlan {
        &self.plan
    }

    fn rebuild(&mut self) -> Result<()> {
        let gens: Vec<PauliWord> = self.dressers.iter().map(|&k| self.elements[k].generator).collect();
        self.plan = DressingPlan::build(&self.h, &gens)?;
        self.table = FactorTable::build(&self.layout, self.plan.words());
        Ok(())
    }

    /// Placement a new generator would get under the current clustering.
    pub fn placement_of(&self, p: &PauliWord) -> Placement {
        match self.layout.home(p) {
            Some(c) => Placement::Intra(c),
            None => Placement::Cross,
        }
    }

    /// Appends a generator at angle 0: inside its cluster's circuit (applied
    /// last there) or as the newest dresser.
    pub fn push(&mut self, generator: PauliWord, pool_index: usize, selected_at: usize) -> Result<Placement> {
        crate::error::check_dim(self.h.n_qubits(), generator.n_qubits())?;
        let placement = self.placement_of(&generator);
        self.elements.push(AnsatzElement {
            generator,
            pool_index,
            angle: 0.0,
            selected_at,
            placement,
        });
        if placement == Placement::Cross {
            self.dressers.push(self.elements.len() - 1);
            self.rebuild()?;
        }
        Ok(placement)
    }

    /// Element indices of each cluster's circuit, in application order.
    fn circuit_indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.layout.n_clusters()];
        for (k, e) in self.elements.iter().enumerate() {
            if let Placement::Intra(c) = e.placement {
                out[c].push(k);
            }
        }
        out
    }

    fn product_state(&self, angles: &[f64], idx: &[Vec<usize>]) -> Result<(ProductState, Vec<Vec<(PauliWord, f64)>>)> {
        let circuits: Vec<Vec<(PauliWord, f64)>> = idx
            .iter()
            .enumerate()
            .map(|(c, ks)| {
                ks.iter()
                    .map(|&k| (self.layout.local(&self.elements[k].generator, c), angles[k]))
                    .collect()
            })
            .collect();
        Ok((ProductState::prepare(&self.layout, self.reference, &circuits)?, circuits))
    }

    fn dresser_angles(&self, angles: &[f64]) -> Vec<f64> {
        self.dressers.iter().map(|&k| angles[k]).collect()
    }

    /// One cluster and no dressers: every element is a gate on the whole register.
    fn monolithic(&self) -> bool {
        self.layout.n_clusters() == 1 && self.dressers.is_empty()
    }

    fn register_circuit(&self, angles: &[f64]) -> Vec<(PauliWord, f64)> {
        self.elements.iter().zip(angles).map(|(e, a)| (e.generator, *a)).collect()
    }

    fn register_state(&self, angles: &[f64]) -> Result<StateVector> {
        let mut s = StateVector::basis_state(self.h.n_qubits(), self.reference)?;
        for (p, a) in self.register_circuit(angles) {
            s.apply_rotation(&p, a)?;
        }
        Ok(s)
    }

    /// Cluster-factorized energy and its exact gradient over all element angles.
    pub fn energy_and_gradient(&self, angles: &[f64]) -> Result<(f64, Vec<f64>)> {
        crate::error::check_dim(self.elements.len(), angles.len())?;
        if self.monolithic() {
            return circuit_energy_gradient(&self.h, self.reference, &self.register_circuit(angles));
        }
        let idx = self.circuit_indices();
        let (state, circuits) = self.product_state(angles, &idx)?;
        let phi = self.dresser_angles(angles);
        let local = self.table.local_expectations(&state);
        let ev = self.table.word_expectations(&local);
        let (energy, g_phi) = self.plan.energy_and_gradient(&phi, &ev)?;
        let mut grad = vec![0.0; angles.len()];
        for (d, g) in self.dressers.iter().zip(g_phi) {
            grad[*d] = g;
        }
        let coeffs = self.plan.coefficients(&phi)?;
        for (a, ks) in idx.iter().enumerate() {
            if ks.is_empty() {
                continue;
            }
            let g = self.table.cluster_gradient(a, &coeffs, &local, &state, &circuits[a]);
            for (k, v) in ks.iter().zip(g) {
                grad[*k] = v;
            }
        }
        Ok((energy, grad))
    }

    pub fn energy(&self, angles: &[f64]) -> Result<f64> {
        if self.monolithic() {
            return Ok(circuit_energy_gradient(&self.h, self.reference, &self.register_circuit(angles))?.0);
        }
        let idx = self.circuit_indices();
        let (state, _) = self.product_state(angles, &idx)?;
        let coeffs = self.plan.coefficients(&self.dresser_angles(angles))?;
        let ev = self.table.word_expectations(&self.table.local_expectations(&state));
        Ok(coeffs.iter().zip(ev).map(|(a, b)| a * b).sum())
    }

    /// `i⟨χ|[H_d, P]|χ⟩` on the product state `χ`, each commutator word
    /// evaluated as a product of per-cluster expectations.
    pub fn pool_gradients(&self, angles: &[f64], pool: &[PauliWord]) -> Result<Vec<f64>> {
        crate::error::check_dim(self.elements.len(), angles.len())?;
        if self.monolithic() {
            return super::pool_gradients(&self.h, &self.register_state(angles)?, pool);
        }
        let idx = self.circuit_indices();
        let (state, _) = self.product_state(angles, &idx)?;
        let coeffs = self.plan.coefficients(&self.dresser_angles(angles))?;
        let terms: Vec<(&PauliWord, f64)> = self
            .plan
            .words()
            .iter()
            .zip(coeffs)
            .filter(|(_, c)| *c != 0.0)
            .collect();
        let m = self.layout.n_clusters();
        Ok(pool
            .par_iter()
            .map(|p| {
                let mut g = 0.0;
                for (w, c) in &terms {
                    if w.commutes_unchecked(p) {
                        continue;
                    }
                    let (v, e) = w.mul_exp(p);
                    let mut prod = (Complex64::new(0.0, 2.0) * i_pow(e)).re * c;
                    for k in 0..m {
                        if prod == 0.0 {
                            break;
                        }
                        prod *= word_expectation(state.cluster(k), &self.layout.local(&v, k)).re;
                    }
                    g += prod;
                }
                g
            })
            .collect())
    }

    /// `D_1⋯D_K·χ` on the full register.
    pub fn full_state(&self, angles: &[f64]) -> Result<StateVector> {
        let idx = self.circuit_indices();
        let (state, _) = self.product_state(angles, &idx)?;
        let mut full = state.to_full(&self.layout);
        for &k in self.dressers.iter().rev() {
            full.apply_rotation(&self.elements[k].generator, angles[k])?;
        }
        Ok(full)
    }

    /// Dressed Hamiltonian at `angles`, built pass by pass with pruning.
    pub fn dressed_hamiltonian(&self, angles: &[f64], tol: f64) -> Result<PauliSum> {
        let pairs: Vec<(PauliWord, f64)> = self
            .dressers
            .iter()
            .map(|&k| (self.elements[k].generator, angles[k]))
            .collect();
        dress_hamiltonian(&self.h, &pairs, tol)
    }

    /// Switches to `new`, moving circuit elements that no longer fit inside
    /// one cluster into the dresser list. Walking elements in selection order,
    /// an element is moved if it straddles clusters or fails to commute with
    /// one already moved; moved elements join the dressers newest-first so
    /// the state is unchanged.
    pub fn recluster(&mut self, new: Clustering) -> Result<usize> {
        crate::error::check_dim(self.clustering.n_qubits(), new.n_qubits())?;
        let layout = ClusterLayout::new(&new);
        let mut moved: Vec<usize> = Vec::new();
        for k in 0..self.elements.len() {
            if !matches!(self.elements[k].placement, Placement::Intra(_)) {
                continue;
            }
            let g = self.elements[k].generator;
            let home = layout.home(&g);
            let blocked = moved.iter().any(|&j| !self.elements[j].generator.commutes_unchecked(&g));
            match home {
                Some(c) if !blocked => self.elements[k].placement = Placement::Intra(c),
                _ => moved.push(k),
            }
        }
        for &k in moved.iter().rev() {
            self.elements[k].placement = Placement::Cross;
            self.dressers.push(k);
        }
        self.clustering = new;
        self.layout = layout;
        self.rebuild()?;
        Ok(moved.len())
    }
}

fn initial_clustering(config: &EngineConfig, n: usize) -> Result<Clustering> {
    match &config.cluster_mode {
        ClusterMode::Fixed(c) => Ok(c.clone()),
        ClusterMode::SpinFallback => Clustering::spin_blocks(n),
        ClusterMode::OnTheFly { initial, .. } => match initial {
            Some(c) => Ok(c.clone()),
            None => Clustering::spin_blocks(n),
        },
    }
}

pub(super) fn run_cluster_vqe(config: &EngineConfig, problem: &EngineProblem<'_>) -> Result<EngineOutcome> {
    let h = problem.hamiltonian;
    let n = h.n_qubits();
    let clustering = initial_clustering(config, n)?;
    if clustering.n_qubits() != n {
        return Err(Error::Infeasible(format!(
            "clustering covers {} qubits, Hamiltonian has {n}",
            clustering.n_qubits()
        )));
    }
    let mut model = ClusterModel::new(h, problem.reference, clustering)?;
    let mut records = Vec::new();
    let mut converged = false;
    let mut stall = StallWatch::new();
    let mut energy = model.energy(&[])?;
    for it in 1..=config.max_iterations + 1 {
        let start = Instant::now();
        if let ClusterMode::OnTheFly {
            method,
            clusters,
            capacities,
            solver,
            ..
        } = &config.cluster_mode
        {
            if !model.elements().is_empty() {
                let mi = mutual_information(&model.full_state(&model.angles())?)?;
                if !mi.is_zero() {
                    let next = partition(&mi, *method, *clusters, capacities.as_deref(), *solver)?;
                    if !next.same_partition(model.clustering()) {
                        let moved = model.recluster(next)?;
                        log::info!("iteration {it}: re-clustered, {moved} elements moved to the dressing");
                    }
                }
            }
        }
        let angles = model.angles();
        let grads = model.pool_gradients(&angles, problem.pool)?;
        let (idx, gmax) = select_entangler(&grads).expect("pool checked nonempty");
        if gmax < config.epsilon {
            converged = true;
            break;
        }
        if it > config.max_iterations {
            break;
        }
        stall.observe(idx, gmax);
        let placement = model.push(problem.pool[idx], idx, it)?;
        let newest = model.elements().len() - 1;
        let active: Vec<usize> = (0..model.elements().len())
            .filter(|&k| !config.freeze_dressing || !model.dressers().contains(&k) || k == newest)
            .collect();
        let base = model.angles();
        let x0: Vec<f64> = active.iter().map(|&k| base[k]).collect();
        let mut failure = None;
        let m = minimize(
            |x| {
                let mut full = base.clone();
                for (k, v) in active.iter().zip(x) {
                    full[*k] = *v;
                }
                match model.energy_and_gradient(&full) {
                    Ok((e, g)) => (e, active.iter().map(|&k| g[k]).collect()),
                    Err(err) => {
                        failure.get_or_insert(err);
                        (f64::INFINITY, vec![0.0; x.len()])
                    }
                }
            },
            &x0,
            &config.optimizer,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let mut next = base;
        for (k, v) in active.iter().zip(&m.x) {
            next[*k] = *v;
        }
        model.set_angles(&next)?;
        energy = m.value;
        let term_count = model.dressed_hamiltonian(&next, config.prune_tol)?.len();
        let full_energy = if config.verify_factorization {
            Some(model.full_state(&next)?.expectation(h)?)
        } else {
            None
        };
        records.push(IterationRecord {
            iteration: it,
            pool_index: Some(idx),
            generator: Some(problem.pool[idx]),
            placement: Some(placement),
            energy,
            max_gradient: gmax,
            term_count,
            parameters: next,
            optimizer_evals: m.evals,
            wall_time_s: start.elapsed().as_secs_f64(),
            clustering: Some(model.clustering().assignment().to_vec()),
            full_energy,
        });
    }
    Ok(EngineOutcome {
        kind: EngineKind::ClusterVqe,
        records,
        converged,
        elements: model.elements().to_vec(),
        dressers: model.dressers().to_vec(),
        clustering: Some(model.clustering().assignment().to_vec()),
        final_energy: energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::Rng;

    fn random_model(rng: &mut Rng) -> (ClusterModel, Vec<PauliWord>) {
        let n = 6;
        let h = rng.hermitian_sum(n, 40);
        let c = Clustering::from_assignment(vec![0, 0, 1, 1, 0, 1]).unwrap();
        let mut model = ClusterModel::new(&h, 0b010011, c).unwrap();
        let pool: Vec<PauliWord> = (0..12).map(|_| rng.nontrivial_word(n)).collect();
        for (k, p) in ["XYIIZI", "IIXYIZ", "XIXIYI", "YZIIXI", "IXZYII", "IIYIIX"].iter().enumerate() {
            model.push(p.parse().unwrap(), k, k + 1).unwrap();
        }
        let angles: Vec<f64> = (0..model.elements().len()).map(|_| rng.uniform()).collect();
        model.set_angles(&angles).unwrap();
        (model, pool)
    }

    #[test]
    fn placements() {
        let mut rng = Rng::new(1);
        let (model, _) = random_model(&mut rng);
        let p: Vec<Placement> = model.elements().iter().map(|e| e.placement).collect();
        assert_eq!(p[0], Placement::Intra(0));
        assert_eq!(p[1], Placement::Intra(1));
        assert_eq!(p[2], Placement::Cross);
        assert_eq!(model.dressers(), &[2, 4]);
    }

    #[test]
    fn factorized_energy_matches_full_register() {
        let mut rng = Rng::new(2);
        for _ in 0..4 {
            let (model, _) = random_model(&mut rng);
            let a = model.angles();
            let e = model.energy(&a).unwrap();
            let full = model.full_state(&a).unwrap().expectation(&model.h).unwrap();
            assert!((e - full).abs() < 1e-10, "{e} vs {full}");
            let (e2, _) = model.energy_and_gradient(&a).unwrap();
            assert!((e - e2).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = Rng::new(3);
        let (model, pool) = random_model(&mut rng);
        let a = model.angles();
        let (_, g) = model.energy_and_gradient(&a).unwrap();
        for k in 0..a.len() {
            let mut up = a.clone();
            up[k] += 1e-5;
            let mut dn = a.clone();
            dn[k] -= 1e-5;
            let fd = (model.energy(&up).unwrap() - model.energy(&dn).unwrap()) / 2e-5;
            assert!((fd - g[k]).abs() < 1e-6 * fd.abs().max(1e-3), "{k}: {fd} vs {}", g[k]);
        }
        let pg = model.pool_gradients(&a, &pool).unwrap();
        for (p, gp) in pool.iter().zip(pg) {
            let mut ext = model.clone();
            ext.push(*p, 99, 99).unwrap();
            let mut up = a.clone();
            up.push(1e-5);
            let mut dn = a.clone();
            dn.push(-1e-5);
            let fd = (ext.energy(&up).unwrap() - ext.energy(&dn).unwrap()) / 2e-5;
            assert!((fd - gp).abs() < 1e-6 * fd.abs().max(1e-3), "{p}: {fd} vs {gp}");
        }
    }

    #[test]
    fn single_cluster_matches_factorized_path() {
        let mut rng = Rng::new(5);
        let (model, _) = random_model(&mut rng);
        let a = model.angles();
        let mut single = model.clone();
        single.recluster(Clustering::single(6).unwrap()).unwrap();
        assert!(!single.monolithic());
        assert!((single.energy(&a).unwrap() - model.energy(&a).unwrap()).abs() < 1e-10);

        let h = model.h.clone();
        let mut fresh = ClusterModel::new(&h, model.reference, Clustering::single(6).unwrap()).unwrap();
        let mut split = ClusterModel::new(&h, model.reference, model.clustering().clone()).unwrap();
        for e in model.elements().iter().filter(|e| matches!(e.placement, Placement::Intra(_))) {
            fresh.push(e.generator, e.pool_index, e.selected_at).unwrap();
            split.push(e.generator, e.pool_index, e.selected_at).unwrap();
        }
        assert!(fresh.monolithic());
        let b: Vec<f64> = (0..fresh.elements().len()).map(|k| 0.3 + 0.1 * k as f64).collect();
        let (e1, g1) = fresh.energy_and_gradient(&b).unwrap();
        let (e2, g2) = split.energy_and_gradient(&b).unwrap();
        assert!((e1 - e2).abs() < 1e-10);
        for (x, y) in g1.iter().zip(&g2) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn reclustering_preserves_state() {
        let mut rng = Rng::new(4);
        for _ in 0..4 {
            let (mut model, _) = random_model(&mut rng);
            let a = model.angles();
            let before = model.full_state(&a).unwrap();
            let e0 = model.energy(&a).unwrap();
            let new = Clustering::from_assignment(vec![0, 1, 0, 1, 1, 0]).unwrap();
            model.recluster(new).unwrap();
            let after = model.full_state(&a).unwrap();
            let overlap = before.inner(&after).unwrap();
            assert!((overlap.norm() - 1.0).abs() < 1e-12);
            assert!((overlap.re - 1.0).abs() < 1e-12);
            assert!((model.energy(&a).unwrap() - e0).abs() < 1e-10);
            for e in model.elements() {
                if let Placement::Intra(c) = e.placement {
                    assert_eq!(model.layout.home(&e.generator), Some(c));
                }
            }
        }
    }
}
