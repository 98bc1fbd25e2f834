//! Dense-matrix oracles for tests. Everything here works on explicit
//! `2^n × 2^n` matrices built entry by entry and never calls into the
//! bit-mask algebra it is used to check.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::pauli::{Letter, PauliSum, PauliWord};

pub type Mat = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `⟨row|σ|col⟩` for a single-qubit Pauli.
fn letter_entry(l: Letter, row: usize, col: usize) -> Complex64 {
    match (l, row, col) {
        (Letter::I, r, k) if r == k => c(1.0, 0.0),
        (Letter::X, r, k) if r != k => c(1.0, 0.0),
        (Letter::Y, 0, 1) => c(0.0, -1.0),
        (Letter::Y, 1, 0) => c(0.0, 1.0),
        (Letter::Z, 0, 0) => c(1.0, 0.0),
        (Letter::Z, 1, 1) => c(-1.0, 0.0),
        _ => c(0.0, 0.0),
    }
}

/// Dense matrix of a word; basis index bit `q` is qubit `q`.
pub fn dense_word(p: &PauliWord) -> Mat {
    let n = p.n_qubits();
    let dim = 1usize << n;
    let letters: Vec<Letter> = (0..n).map(|q| p.letter(q)).collect();
    Mat::from_fn(dim, dim, |r, k| {
        let mut v = c(1.0, 0.0);
        for (q, &l) in letters.iter().enumerate() {
            v *= letter_entry(l, (r >> q) & 1, (k >> q) & 1);
            if v == c(0.0, 0.0) {
                break;
            }
        }
        v
    })
}

pub fn dense_sum(h: &PauliSum) -> Mat {
    let dim = 1usize << h.n_qubits();
    let mut m = Mat::zeros(dim, dim);
    for (w, coeff) in h.iter() {
        m += dense_word(w) * *coeff;
    }
    m
}

pub fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    a * b
}

pub fn mat_close(a: &Mat, b: &Mat, tol: f64) -> bool {
    a.shape() == b.shape() && a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() <= tol)
}

/// Sorted eigenvalues of a Hermitian matrix.
pub fn eigenvalues(m: &Mat) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// `exp(i·θ·M)` for Hermitian `M`, through its eigendecomposition.
pub fn expm_i_hermitian(m: &Mat, theta: f64) -> Mat {
    let eig = m.clone().symmetric_eigen();
    let v = eig.eigenvectors;
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, theta * l)),
    ));
    &v * d * v.adjoint()
}

pub fn apply(m: &Mat, v: &[Complex64]) -> Vec<Complex64> {
    let x = DVector::from_column_slice(v);
    (m * x).iter().copied().collect()
}

/// `⟨v|M|v⟩`.
pub fn quad_form(m: &Mat, v: &[Complex64]) -> Complex64 {
    let mv = apply(m, v);
    v.iter().zip(mv.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Partial trace of `|v⟩⟨v|` keeping `keep` (first listed = most significant
/// factor of the returned matrix).
pub fn reduced_density(v: &[Complex64], n: usize, keep: &[usize]) -> Mat {
    let dk = 1usize << keep.len();
    let mut rho = Mat::zeros(dk, dk);
    let keep_mask: usize = keep.iter().map(|q| 1usize << q).sum();
    let sub_index = |b: usize| -> usize {
        keep.iter()
            .fold(0usize, |acc, &q| (acc << 1) | ((b >> q) & 1))
    };
    for a in 0..(1usize << n) {
        for b in 0..(1usize << n) {
            if a & !keep_mask == b & !keep_mask {
                rho[(sub_index(a), sub_index(b))] += v[a] * v[b].conj();
            }
        }
    }
    rho
}

/// Deterministic pseudo-random stream for oracle inputs (splitmix64).
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [-1, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn word(&mut self, n: usize) -> PauliWord {
        let mask = (1u64 << n) - 1;
        PauliWord::new(n, self.next_u64() & mask, self.next_u64() & mask).unwrap()
    }

    pub fn nontrivial_word(&mut self, n: usize) -> PauliWord {
        loop {
            let w = self.word(n);
            if !w.is_identity() {
                return w;
            }
        }
    }

    /// Random real-coefficient sum with `terms` draws.
    pub fn hermitian_sum(&mut self, n: usize, terms: usize) -> PauliSum {
        let mut h = PauliSum::new(n);
        for _ in 0..terms {
            let w = self.word(n);
            h.add_term(w, Complex64::new(self.uniform(), 0.0));
        }
        h
    }

    pub fn state(&mut self, n: usize) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = (0..1usize << n)
            .map(|_| Complex64::new(self.uniform(), self.uniform()))
            .collect();
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        v
    }
}
