//! Per-cluster sub-registers and expectation values that factorize over them.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::partition::Clustering;
use crate::pauli::{i_pow, PauliSum, PauliWord};
use crate::statevec::{rotate_in_place, sum_times, word_expectation, word_times, StateVector};

/// Gathers the bits of `mask` at `members` into a dense local mask.
#[inline]
pub(crate) fn gather(mask: u64, members: &[usize]) -> u64 {
    members
        .iter()
        .enumerate()
        .fold(0, |acc, (k, &q)| acc | ((mask >> q) & 1) << k)
}

/// Qubit membership of each cluster; local qubit `k` of a cluster is its
/// `k`-th smallest member.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterLayout {
    n: usize,
    members: Vec<Vec<usize>>,
    masks: Vec<u64>,
}

impl ClusterLayout {
    pub fn new(c: &Clustering) -> Self {
        Self {
            n: c.n_qubits(),
            members: c.clusters(),
            masks: c.masks(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn n_clusters(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self, c: usize) -> &[usize] {
        &self.members[c]
    }

    /// Cluster holding the whole support of `w`, if one does. Identity words
    /// land in cluster 0.
    pub fn home(&self, w: &PauliWord) -> Option<usize> {
        let s = w.support();
        if s == 0 {
            return Some(0);
        }
        self.masks.iter().position(|&m| s & !m == 0)
    }

    pub fn local(&self, w: &PauliWord, c: usize) -> PauliWord {
        let m = &self.members[c];
        PauliWord::from_masks(m.len(), gather(w.x_mask(), m), gather(w.z_mask(), m))
    }

    pub fn local_reference(&self, reference: u64, c: usize) -> u64 {
        gather(reference, &self.members[c])
    }
}

/// One statevector per cluster.
#[derive(Clone, Debug)]
pub struct ProductState {
    pub(crate) amps: Vec<Vec<Complex64>>,
}

impl ProductState {
    /// Applies each cluster's `(local generator, angle)` list, first entry
    /// first, to its reference sub-state.
    pub fn prepare(layout: &ClusterLayout, reference: u64, circuits: &[Vec<(PauliWord, f64)>]) -> Result<Self> {
        crate::error::check_dim(layout.n_clusters(), circuits.len())?;
        let mut amps = Vec::with_capacity(circuits.len());
        for (c, circuit) in circuits.iter().enumerate() {
            let k = layout.members(c).len();
            let mut v = StateVector::basis_state(k, layout.local_reference(reference, c))?.into_amplitudes();
            for (p, theta) in circuit {
                crate::error::check_dim(k, p.n_qubits())?;
                rotate_in_place(&mut v, p, *theta);
            }
            amps.push(v);
        }
        Ok(Self { amps })
    }

    /// Tensor product on the full register.
    pub fn to_full(&self, layout: &ClusterLayout) -> StateVector {
        let n = layout.n_qubits();
        let mut out = vec![Complex64::new(1.0, 0.0); 1 << n];
        for (c, a) in self.amps.iter().enumerate() {
            let m = layout.members(c);
            for (b, o) in out.iter_mut().enumerate() {
                *o *= a[gather(b as u64, m) as usize];
            }
        }
        StateVector::from_amplitudes(out).expect("product of normalized states")
    }

    pub fn cluster(&self, c: usize) -> &[Complex64] {
        &self.amps[c]
    }
}

/// Restricted-word index for a list of full-register words.
#[derive(Clone, Debug)]
pub struct FactorTable {
    local_words: Vec<Vec<PauliWord>>,
    index: Vec<u32>, // word-major, one entry per cluster
    m: usize,
}

impl FactorTable {
    pub fn build(layout: &ClusterLayout, words: &[PauliWord]) -> Self {
        let m = layout.n_clusters();
        let mut local_words = vec![Vec::new(); m];
        let mut lookup: Vec<HashMap<(u64, u64), u32>> = vec![HashMap::new(); m];
        let mut index = Vec::with_capacity(words.len() * m);
        for w in words {
            for c in 0..m {
                let lw = layout.local(w, c);
                let id = *lookup[c].entry((lw.x_mask(), lw.z_mask())).or_insert_with(|| {
                    local_words[c].push(lw);
                    (local_words[c].len() - 1) as u32
                });
                index.push(id);
            }
        }
        Self { local_words, index, m }
    }

    pub fn n_words(&self) -> usize {
        if self.m == 0 {
            0
        } else {
            self.index.len() / self.m
        }
    }

    /// Per-cluster expectations of every distinct restricted word.
    pub fn local_expectations(&self, state: &ProductState) -> Vec<Vec<f64>> {
        self.local_words
            .iter()
            .zip(&state.amps)
            .map(|(ws, a)| ws.iter().map(|w| word_expectation(a, w).re).collect())
            .collect()
    }

    /// `⟨W_j⟩ = Π_c ⟨W_j(c)⟩`.
    pub fn word_expectations(&self, local: &[Vec<f64>]) -> Vec<f64> {
        self.index
            .chunks(self.m)
            .map(|ids| ids.iter().enumerate().map(|(c, &u)| local[c][u as usize]).product())
            .collect()
    }

    /// Gradient of `Σ_j h_j ⟨W_j⟩` with respect to the angles of cluster
    /// `a`'s circuit, through the effective cluster Hamiltonian
    /// `Σ_j h_j Π_{c≠a} ⟨W_j(c)⟩ W_j(a)`.
    pub fn cluster_gradient(
        &self,
        a: usize,
        coeffs: &[f64],
        local: &[Vec<f64>],
        state: &ProductState,
        circuit: &[(PauliWord, f64)],
    ) -> Vec<f64> {
        let mut heff = vec![0.0; self.local_words[a].len()];
        for (ids, h) in self.index.chunks(self.m).zip(coeffs) {
            let rest: f64 = ids
                .iter()
                .enumerate()
                .filter(|&(c, _)| c != a)
                .map(|(c, &u)| local[c][u as usize])
                .product();
            heff[ids[a] as usize] += h * rest;
        }
        let psi = &state.amps[a];
        let mut lambda = vec![Complex64::default(); psi.len()];
        for (w, h) in self.local_words[a].iter().zip(&heff) {
            if *h == 0.0 {
                continue;
            }
            let x = w.x_mask() as usize;
            let z = w.z_mask();
            let base = i_pow((w.x_mask() & z).count_ones()) * *h;
            for (b, amp) in psi.iter().enumerate() {
                lambda[b ^ x] += base * sign(b, z) * amp;
            }
        }
        reverse_gradient(psi.clone(), lambda, circuit)
    }
}

#[inline]
fn sign(b: usize, z: u64) -> f64 {
    if (b as u64 & z).count_ones() & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Reverse-mode sweep for `E = ⟨ψ|H|ψ⟩`, `ψ = U_L⋯U_1|φ⟩`, `U_l = e^{iθ_l P_l}`,
/// given the final `ψ` and `λ = H|ψ⟩`. Each component is
/// `−2 Im⟨λ_l|P_l ψ_l⟩` with both vectors rolled back past the later gates.
pub(crate) fn reverse_gradient(
    mut psi: Vec<Complex64>,
    mut lambda: Vec<Complex64>,
    circuit: &[(PauliWord, f64)],
) -> Vec<f64> {
    let mut grad = vec![0.0; circuit.len()];
    for (l, (p, theta)) in circuit.iter().enumerate().rev() {
        let p_psi = word_times(&psi, p);
        grad[l] = -2.0 * crate::statevec::inner(&lambda, &p_psi).im;
        if l > 0 {
            rotate_in_place(&mut psi, p, -theta);
            rotate_in_place(&mut lambda, p, -theta);
        }
    }
    grad
}

/// Energy and exact angle gradient of `U_L⋯U_1|reference⟩` on the full register.
pub fn circuit_energy_gradient(
    h: &PauliSum,
    reference: u64,
    circuit: &[(PauliWord, f64)],
) -> Result<(f64, Vec<f64>)> {
    let n = h.n_qubits();
    let mut psi = StateVector::basis_state(n, reference)?.into_amplitudes();
    for (p, theta) in circuit {
        crate::error::check_dim(n, p.n_qubits())?;
        rotate_in_place(&mut psi, p, *theta);
    }
    let lambda = sum_times(&psi, h);
    let e = crate::statevec::inner(&psi, &lambda);
    if e.im.abs() > crate::statevec::EXPECTATION_IMAG_TOL * e.re.abs().max(1.0) {
        return Err(Error::NonHermitian(e.im.abs()));
    }
    Ok((e.re, reverse_gradient(psi, lambda, circuit)))
}

/// `E = Σ_k α_k Π_i ⟨φ_i|P_k(c_i)|φ_i⟩` with each cluster state prepared from
/// its reference sub-state by its own circuit of full-register generators.
pub fn clustered_energy(
    h_d: &PauliSum,
    clustering: &Clustering,
    circuits: &[Vec<(PauliWord, f64)>],
    reference: u64,
) -> Result<f64> {
    crate::error::check_dim(clustering.n_qubits(), h_d.n_qubits())?;
    let layout = ClusterLayout::new(clustering);
    let mut local = Vec::with_capacity(circuits.len());
    for (c, circuit) in circuits.iter().enumerate() {
        let mut lc = Vec::with_capacity(circuit.len());
        for (p, theta) in circuit {
            if layout.home(p) != Some(c) && !p.is_identity() {
                return Err(Error::invalid(format!(
                    "generator {p} is not contained in cluster {c}"
                )));
            }
            lc.push((layout.local(p, c), *theta));
        }
        local.push(lc);
    }
    let state = ProductState::prepare(&layout, reference, &local)?;
    let words: Vec<PauliWord> = h_d.words().copied().collect();
    let table = FactorTable::build(&layout, &words);
    let ev = table.word_expectations(&table.local_expectations(&state));
    let imag = h_d.max_imag();
    if imag > crate::statevec::EXPECTATION_IMAG_TOL {
        return Err(Error::NonHermitian(imag));
    }
    Ok(h_d.iter().zip(ev).map(|((_, c), e)| c.re * e).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::Rng;

    fn w(s: &str) -> PauliWord {
        s.parse().unwrap()
    }

    #[test]
    fn zz_across_two_clusters() {
        let h = PauliSum::from_word(w("ZZ"), 1.0);
        let c = Clustering::from_assignment(vec![0, 1]).unwrap();
        let e = clustered_energy(&h, &c, &[vec![], vec![]], 0).unwrap();
        assert_eq!(e, 1.0);
    }

    #[test]
    fn misplaced_generator_rejected() {
        let h = PauliSum::from_word(w("ZZ"), 1.0);
        let c = Clustering::from_assignment(vec![0, 1]).unwrap();
        assert!(clustered_energy(&h, &c, &[vec![(w("XY"), 0.1)], vec![]], 0).is_err());
    }

    #[test]
    fn factorization_matches_full_register() {
        let mut rng = Rng::new(77);
        for _ in 0..5 {
            let n = 6;
            let h = rng.hermitian_sum(n, 40);
            let assign: Vec<usize> = (0..n).map(|q| [0, 1, 0, 2, 1, 2][q]).collect();
            let c = Clustering::from_assignment(assign).unwrap();
            let layout = ClusterLayout::new(&c);
            let mut circuits = vec![Vec::new(); 3];
            let mut full = Vec::new();
            for _ in 0..8 {
                let k = rng.below(3);
                let m = layout.members(k);
                let mut x = 0u64;
                let mut z = 0u64;
                for &q in m {
                    let r = rng.below(4) as u64;
                    x |= (r & 1) << q;
                    z |= (r >> 1) << q;
                }
                if x == 0 && z == 0 {
                    continue;
                }
                let p = PauliWord::new(n, x, z).unwrap();
                let theta = rng.uniform();
                circuits[k].push((p, theta));
                full.push((p, theta));
            }
            let reference = 0b100101;
            let e = clustered_energy(&h, &c, &circuits, reference).unwrap();
            let (e_full, _) = circuit_energy_gradient(&h, reference, &full).unwrap();
            assert!((e - e_full).abs() < 1e-10, "{e} vs {e_full}");

            let single = Clustering::single(n).unwrap();
            let e1 = clustered_energy(&h, &single, &[full.clone()], reference).unwrap();
            assert!((e1 - e_full).abs() < 1e-12);
        }
    }

    #[test]
    fn product_state_to_full() {
        let c = Clustering::from_assignment(vec![1, 0, 1]).unwrap();
        let layout = ClusterLayout::new(&c);
        let s = ProductState::prepare(&layout, 0b101, &[vec![], vec![]]).unwrap();
        let full = s.to_full(&layout);
        assert!((full.amplitudes()[0b101].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reverse_mode_matches_finite_differences() {
        let mut rng = Rng::new(5);
        let n = 4;
        let h = rng.hermitian_sum(n, 20);
        let circuit: Vec<(PauliWord, f64)> =
            (0..6).map(|_| (rng.nontrivial_word(n), rng.uniform())).collect();
        let (_, g) = circuit_energy_gradient(&h, 0b0011, &circuit).unwrap();
        for l in 0..circuit.len() {
            let shifted = |d: f64| {
                let mut c = circuit.clone();
                c[l].1 += d;
                circuit_energy_gradient(&h, 0b0011, &c).unwrap().0
            };
            let fd = (shifted(1e-5) - shifted(-1e-5)) / 2e-5;
            assert!((fd - g[l]).abs() < 1e-7 * fd.abs().max(1.0), "{l}: {fd} vs {}", g[l]);
        }
    }

    #[test]
    fn cluster_gradient_matches_finite_differences() {
        let mut rng = Rng::new(9);
        let n = 5;
        let h = rng.hermitian_sum(n, 30);
        let c = Clustering::from_assignment(vec![0, 0, 1, 1, 1]).unwrap();
        let layout = ClusterLayout::new(&c);
        let words: Vec<PauliWord> = h.words().copied().collect();
        let coeffs: Vec<f64> = h.iter().map(|(_, v)| v.re).collect();
        let table = FactorTable::build(&layout, &words);
        let circuits = vec![
            vec![(w("XY"), 0.3), (w("ZY"), -0.2)],
            vec![(w("XXY"), 0.5), (w("YIZ"), 0.1), (w("IYX"), 0.7)],
        ];
        let energy = |circ: &[Vec<(PauliWord, f64)>]| {
            let s = ProductState::prepare(&layout, 0b01001, circ).unwrap();
            let ev = table.word_expectations(&table.local_expectations(&s));
            coeffs.iter().zip(ev).map(|(a, b)| a * b).sum::<f64>()
        };
        let s = ProductState::prepare(&layout, 0b01001, &circuits).unwrap();
        let local = table.local_expectations(&s);
        for a in 0..2 {
            let g = table.cluster_gradient(a, &coeffs, &local, &s, &circuits[a]);
            for l in 0..circuits[a].len() {
                let mut up = circuits.clone();
                up[a][l].1 += 1e-5;
                let mut dn = circuits.clone();
                dn[a][l].1 -= 1e-5;
                let fd = (energy(&up) - energy(&dn)) / 2e-5;
                assert!((fd - g[l]).abs() < 1e-7 * fd.abs().max(1.0));
            }
        }
    }
}
