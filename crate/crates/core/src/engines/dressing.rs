//! Dressed Hamiltonians `U_K†⋯U_1† H U_1⋯U_K` and their angle dependence.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{i_pow, PauliSum, PauliWord};

/// Conjugates `h` by each `(P, φ)` in list order, so the first dresser acts
/// innermost: `e^{−iφ_K P_K}⋯e^{−iφ_1 P_1} H e^{iφ_1 P_1}⋯e^{iφ_K P_K}`.
/// Prunes at `tol` after every pass.
pub fn dress_hamiltonian(h: &PauliSum, dressers: &[(PauliWord, f64)], tol: f64) -> Result<PauliSum> {
    let mut out = h.prune(tol);
    for (p, phi) in dressers {
        out = out.conjugate_by_rotation_with_tol(p, *phi, tol)?;
    }
    Ok(out)
}

/// Structural drop threshold for plan constants that cancel exactly.
const PLAN_ZERO: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Contribution {
    word: u32,
    coeff: f64,
    cos: u64,
    sin: u64,
}

/// Angle-independent expansion of a dressed Hamiltonian: every term is a
/// constant times `Π cos 2φ_k Π sin 2φ_k` times a Pauli word. Built once per
/// dresser sequence, evaluated at any angles.
#[derive(Clone, Debug)]
pub struct DressingPlan {
    n: usize,
    generators: Vec<PauliWord>,
    words: Vec<PauliWord>,
    contributions: Vec<Contribution>,
}

impl DressingPlan {
    pub fn build(h: &PauliSum, generators: &[PauliWord]) -> Result<Self> {
        if generators.len() > 64 {
            return Err(Error::SizeGuard {
                what: "dressers in one plan",
                size: generators.len(),
                limit: 64,
            });
        }
        let imag = h.max_imag();
        if imag > 1e-10 {
            return Err(Error::NonHermitian(imag));
        }
        let n = h.n_qubits();
        for g in generators {
            crate::error::check_dim(n, g.n_qubits())?;
        }
        let mut terms: Vec<(PauliWord, u64, u64, f64)> = h
            .iter()
            .filter(|(_, c)| c.re != 0.0)
            .map(|(w, c)| (*w, 0, 0, c.re))
            .collect();
        for (k, p) in generators.iter().enumerate() {
            let bit = 1u64 << k;
            let mut next = Vec::with_capacity(terms.len() * 2);
            for &(w, cm, sm, c) in &terms {
                if w.commutes_unchecked(p) {
                    next.push((w, cm, sm, c));
                } else {
                    next.push((w, cm | bit, sm, c));
                    let (v, e) = w.mul_exp(p);
                    // i·(i^e) is real for anticommuting Hermitian words
                    let phase = (Complex64::new(0.0, 1.0) * i_pow(e)).re;
                    next.push((v, cm, sm | bit, c * phase));
                }
            }
            terms = merge(next);
        }
        let mut words = Vec::new();
        let mut contributions = Vec::with_capacity(terms.len());
        for (w, cm, sm, c) in terms {
            if words.last() != Some(&w) {
                words.push(w);
            }
            contributions.push(Contribution {
                word: (words.len() - 1) as u32,
                coeff: c,
                cos: cm,
                sin: sm,
            });
        }
        Ok(Self {
            n,
            generators: generators.to_vec(),
            words,
            contributions,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[PauliWord] {
        &self.generators
    }

    /// Distinct words, ascending.
    pub fn words(&self) -> &[PauliWord] {
        &self.words
    }

    pub fn n_contributions(&self) -> usize {
        self.contributions.len()
    }

    fn trig(&self, angles: &[f64]) -> Vec<(f64, f64)> {
        angles.iter().map(|a| (2.0 * a).sin_cos()).map(|(s, c)| (c, s)).collect()
    }

    /// Coefficient of every distinct word at the given dressing angles.
    pub fn coefficients(&self, angles: &[f64]) -> Result<Vec<f64>> {
        crate::error::check_dim(self.generators.len(), angles.len())?;
        let trig = self.trig(angles);
        let mut out = vec![0.0; self.words.len()];
        for t in &self.contributions {
            out[t.word as usize] += t.coeff * product(&trig, t.cos, t.sin);
        }
        Ok(out)
    }

    /// The dressed Hamiltonian at the given angles, pruned at `tol`.
    pub fn evaluate(&self, angles: &[f64], tol: f64) -> Result<PauliSum> {
        let c = self.coefficients(angles)?;
        let mut s = PauliSum::new(self.n);
        for (w, v) in self.words.iter().zip(c) {
            s.add_term(*w, Complex64::new(v, 0.0));
        }
        s.prune_in_place(tol);
        Ok(s)
    }

    /// `E = Σ_j h_j(φ) e_j` and `∂E/∂φ_k` for word expectations `e_j`.
    pub fn energy_and_gradient(&self, angles: &[f64], expectations: &[f64]) -> Result<(f64, Vec<f64>)> {
        crate::error::check_dim(self.generators.len(), angles.len())?;
        crate::error::check_dim(self.words.len(), expectations.len())?;
        let trig = self.trig(angles);
        let k = angles.len();
        let mut grad = vec![0.0; k];
        let mut energy = 0.0;
        let mut factors: Vec<(usize, f64, f64)> = Vec::with_capacity(k);
        let mut prefix: Vec<f64> = Vec::with_capacity(k + 1);
        for t in &self.contributions {
            let weight = t.coeff * expectations[t.word as usize];
            if weight == 0.0 {
                continue;
            }
            factors.clear();
            let mut bits = t.cos | t.sin;
            while bits != 0 {
                let j = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let (c, s) = trig[j];
                if t.cos >> j & 1 == 1 {
                    factors.push((j, c, -2.0 * s));
                } else {
                    factors.push((j, s, 2.0 * c));
                }
            }
            prefix.clear();
            prefix.push(1.0);
            for f in &factors {
                let last = *prefix.last().expect("nonempty");
                prefix.push(last * f.1);
            }
            energy += weight * prefix[factors.len()];
            let mut suffix = 1.0;
            for (idx, f) in factors.iter().enumerate().rev() {
                grad[f.0] += weight * prefix[idx] * f.2 * suffix;
                suffix *= f.1;
            }
        }
        Ok((energy, grad))
    }
}

#[inline]
fn product(trig: &[(f64, f64)], cos: u64, sin: u64) -> f64 {
    let mut v = 1.0;
    let mut bits = cos | sin;
    while bits != 0 {
        let j = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        v *= if cos >> j & 1 == 1 { trig[j].0 } else { trig[j].1 };
    }
    v
}

/// Sorts by (word, masks) and sums duplicates in generation order.
fn merge(mut v: Vec<(PauliWord, u64, u64, f64)>) -> Vec<(PauliWord, u64, u64, f64)> {
    v.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    let mut out: Vec<(PauliWord, u64, u64, f64)> = Vec::with_capacity(v.len());
    for t in v {
        match out.last_mut() {
            Some(last) if (last.0, last.1, last.2) == (t.0, t.1, t.2) => last.3 += t.3,
            _ => out.push(t),
        }
    }
    out.retain(|t| t.3.abs() > PLAN_ZERO);
    out
}
