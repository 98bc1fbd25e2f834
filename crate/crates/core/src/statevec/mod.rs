//! Dense statevector simulation.
//!
//! Basis index bit `q` is qubit `q` (qubit 0 least significant), matching the
//! mask layout of [`PauliWord`]. A word acts on a basis state as
//! `P|b⟩ = i^{|x∧z|} (−1)^{|b∧z|} |b ⊕ x⟩`.

mod exact;

pub use exact::{exact_ground_state, GroundState, MAX_EXACT_QUBITS};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::pauli::{i_pow, PauliSum, PauliWord};

/// Largest register the simulator will allocate.
pub const MAX_STATE_QUBITS: usize = 26;

/// Imaginary residue tolerated in an expectation value before it is discarded.
pub const EXPECTATION_IMAG_TOL: f64 = 1e-10;

const PAR_CHUNK: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

#[inline]
fn sign(b: usize, z: u64) -> f64 {
    if (b as u64 & z).count_ones() & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

impl StateVector {
    /// Computational basis state whose bit `q` equals bit `q` of `occupation`.
    pub fn basis_state(n: usize, occupation: u64) -> Result<Self> {
        if n == 0 || n > MAX_STATE_QUBITS {
            return Err(Error::SizeGuard {
                what: "register size",
                size: n,
                limit: MAX_STATE_QUBITS,
            });
        }
        if occupation >> n != 0 {
            return Err(Error::invalid(format!(
                "occupation mask {occupation:#b} does not fit in {n} qubits"
            )));
        }
        let mut amps = vec![Complex64::default(); 1 << n];
        amps[occupation as usize] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    /// Wraps amplitudes, renormalizing. Length must be a power of two.
    pub fn from_amplitudes(mut amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::invalid(format!("amplitude count {len} is not 2^n")));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("zero or non-finite state"));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(Self {
            n: len.trailing_zeros() as usize,
            amps,
        })
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `|s⟩ ← e^{iθP}|s⟩ = cos θ|s⟩ + i sin θ P|s⟩`, in place over amplitude pairs.
    pub fn apply_rotation(&mut self, p: &PauliWord, theta: f64) -> Result<()> {
        check_dim(self.n, p.n_qubits())?;
        rotate_in_place(&mut self.amps, p, theta);
        Ok(())
    }

    pub fn rotated(&self, p: &PauliWord, theta: f64) -> Result<StateVector> {
        let mut s = self.clone();
        s.apply_rotation(p, theta)?;
        Ok(s)
    }

    /// `P|s⟩`.
    pub fn apply_word(&self, p: &PauliWord) -> Result<StateVector> {
        check_dim(self.n, p.n_qubits())?;
        Ok(StateVector {
            n: self.n,
            amps: word_times(&self.amps, p),
        })
    }

    /// `⟨s|P|s⟩` (real for any word, returned with its rounding residue).
    pub fn expectation_word(&self, p: &PauliWord) -> Result<Complex64> {
        check_dim(self.n, p.n_qubits())?;
        Ok(word_expectation(&self.amps, p))
    }

    /// `⟨s|H|s⟩` for Hermitian `H`.
    pub fn expectation(&self, h: &PauliSum) -> Result<f64> {
        check_dim(self.n, h.n_qubits())?;
        let imag = h.max_imag();
        if imag > EXPECTATION_IMAG_TOL {
            return Err(Error::NonHermitian(imag));
        }
        let v = sum_expectation(&self.amps, h);
        debug_assert!(v.im.abs() < 1e-8, "expectation imaginary part {}", v.im);
        Ok(v.re)
    }

    /// Raw amplitudes of `H|s⟩` (not normalized).
    pub fn apply_sum(&self, h: &PauliSum) -> Result<Vec<Complex64>> {
        check_dim(self.n, h.n_qubits())?;
        Ok(sum_times(&self.amps, h))
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        check_dim(self.n, other.n)?;
        Ok(inner(&self.amps, &other.amps))
    }
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn rotate_in_place(amps: &mut [Complex64], p: &PauliWord, theta: f64) {
    let (s, c) = theta.sin_cos();
    let x = p.x_mask() as usize;
    let z = p.z_mask();
    let base = i_pow((p.x_mask() & z).count_ones());
    if x == 0 {
        // diagonal: e^{iθ·(±1)}
        let plus = Complex64::new(c, s);
        let minus = Complex64::new(c, -s);
        let pos = base.re > 0.0;
        for (b, a) in amps.iter_mut().enumerate() {
            *a *= if (sign(b, z) > 0.0) == pos { plus } else { minus };
        }
        return;
    }
    let is = Complex64::new(0.0, s) * base;
    let low = x & x.wrapping_neg();
    for b in 0..amps.len() {
        if b & low != 0 {
            continue;
        }
        let b2 = b ^ x;
        let (a1, a2) = (amps[b], amps[b2]);
        // (P a)[b] = phase(b2) a[b2], (P a)[b2] = phase(b) a[b]
        amps[b] = a1 * c + is * sign(b2, z) * a2;
        amps[b2] = a2 * c + is * sign(b, z) * a1;
    }
}

pub(crate) fn word_times(amps: &[Complex64], p: &PauliWord) -> Vec<Complex64> {
    let x = p.x_mask() as usize;
    let z = p.z_mask();
    let base = i_pow((p.x_mask() & z).count_ones());
    let mut out = vec![Complex64::default(); amps.len()];
    for (b, a) in amps.iter().enumerate() {
        out[b ^ x] = base * sign(b, z) * a;
    }
    out
}

pub(crate) fn word_expectation(amps: &[Complex64], p: &PauliWord) -> Complex64 {
    let x = p.x_mask() as usize;
    let z = p.z_mask();
    let base = i_pow((p.x_mask() & z).count_ones());
    let mut acc = Complex64::default();
    for (b, a) in amps.iter().enumerate() {
        acc += amps[b ^ x].conj() * a * sign(b, z);
    }
    acc * base
}

/// `Σ_k α_k ⟨a|P_k|a⟩`, reduced in a fixed order so results are reproducible.
pub(crate) fn sum_expectation(amps: &[Complex64], h: &PauliSum) -> Complex64 {
    let terms: Vec<(&PauliWord, &Complex64)> = h.iter().collect();
    let partial: Vec<Complex64> = terms
        .par_chunks(PAR_CHUNK)
        .map(|chunk| {
            chunk
                .iter()
                .map(|(w, c)| **c * word_expectation(amps, w))
                .sum()
        })
        .collect();
    partial.into_iter().sum()
}

pub(crate) fn sum_times(amps: &[Complex64], h: &PauliSum) -> Vec<Complex64> {
    let terms: Vec<(usize, u64, Complex64)> = h
        .iter()
        .map(|(w, c)| {
            (
                w.x_mask() as usize,
                w.z_mask(),
                c * i_pow((w.x_mask() & w.z_mask()).count_ones()),
            )
        })
        .collect();
    let mut out = vec![Complex64::default(); amps.len()];
    out.par_chunks_mut(1024).enumerate().for_each(|(ci, chunk)| {
        let start = ci * 1024;
        for (off, o) in chunk.iter_mut().enumerate() {
            let b = start + off;
            let mut acc = Complex64::default();
            for &(x, z, c) in &terms {
                let src = b ^ x;
                acc += c * sign(src, z) * amps[src];
            }
            *o = acc;
        }
    });
    out
}

/// Expectation of `H` in a computational basis state: only diagonal (X-free)
/// words contribute.
pub fn basis_expectation(h: &PauliSum, occupation: u64) -> f64 {
    h.iter()
        .filter(|(w, _)| w.x_mask() == 0)
        .map(|(w, c)| c.re * sign(occupation as usize, w.z_mask()))
        .sum()
}

/// Energy gradient contribution `∂E/∂θ` carried by the dressed generator
/// `P_eff` for `E = ⟨ψ|H|ψ⟩` and `∂|ψ⟩/∂θ = i P_eff|ψ⟩`:
/// `2 Im⟨ψ|P_eff H|ψ⟩ = 2 Im⟨φ|H|ψ⟩` with `|φ⟩ = P_eff|ψ⟩`. No ancilla.
pub fn overlap_gradient_term(psi: &StateVector, h: &PauliSum, p_eff: &PauliSum) -> Result<f64> {
    check_dim(psi.n, h.n_qubits())?;
    check_dim(psi.n, p_eff.n_qubits())?;
    let phi = sum_times(&psi.amps, p_eff);
    let h_psi = sum_times(&psi.amps, h);
    Ok(2.0 * inner(&phi, &h_psi).im)
}
