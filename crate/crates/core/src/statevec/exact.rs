//! Exact ground states: dense eigensolve for small blocks, Lanczos with full
//! reorthogonalization and explicit restarts above that.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{sign, StateVector};
use crate::error::{Error, Result};
use crate::pauli::{i_pow, PauliSum};

pub const MAX_EXACT_QUBITS: usize = 16;

const DENSE_LIMIT: usize = 400;
const KRYLOV_MAX: usize = 160;
const MAX_RESTARTS: usize = 40;
const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    pub state: StateVector,
}

/// Sparse Hamiltonian restricted to a list of basis states.
struct BlockOperator {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl BlockOperator {
    fn build(h: &PauliSum, basis: &[usize]) -> Self {
        let full = 1usize << h.n_qubits();
        let mut index = vec![usize::MAX; full];
        for (i, &b) in basis.iter().enumerate() {
            index[b] = i;
        }
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
        let mut row_ptr = Vec::with_capacity(basis.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut row: Vec<(usize, Complex64)> = Vec::new();
        row_ptr.push(0);
        // row r = ⟨basis[r]| H; H|b⟩ lands on b ⊕ x
        for &target in basis {
            row.clear();
            for &(x, z, c) in &terms {
                let src = target ^ x;
                let j = index[src];
                if j != usize::MAX {
                    row.push((j, c * sign(src, z)));
                }
            }
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut v = Complex64::default();
                while k < row.len() && row[k].0 == j {
                    v += row[k].1;
                    k += 1;
                }
                if v != Complex64::default() {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            row_ptr,
            cols,
            vals,
        }
    }

    fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::default();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * v[self.cols[k]];
            }
            *o = acc;
        }
    }

    fn dense(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for r in 0..d {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k])] += self.vals[k];
            }
        }
        // symmetrize rounding noise
        (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= n);
    n
}

/// Lowest eigenpair of a Hermitian block via restarted Lanczos.
fn lanczos(op: &BlockOperator, start: Vec<Complex64>) -> (f64, Vec<Complex64>) {
    let dim = op.dim();
    let kmax = KRYLOV_MAX.min(dim);
    let mut v0 = start;
    normalize(&mut v0);
    let mut w = vec![Complex64::default(); dim];
    let mut best = (f64::INFINITY, v0.clone());
    for _ in 0..MAX_RESTARTS {
        let mut basis: Vec<Vec<Complex64>> = vec![v0.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut ritz = (f64::INFINITY, DVector::<f64>::zeros(1));
        let mut converged = false;
        for j in 0..kmax {
            op.apply(&basis[j], &mut w);
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            // full reorthogonalization, twice
            for _ in 0..2 {
                for q in &basis {
                    let proj = dot(q, &w);
                    w.iter_mut().zip(q).for_each(|(x, y)| *x -= proj * y);
                }
            }
            let b = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            let m = alpha.len();
            let mut t = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alpha[i];
                if i + 1 < m {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = t.symmetric_eigen();
            let (imin, &emin) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .min_by(|x, y| x.1.total_cmp(y.1))
                .expect("nonempty tridiagonal");
            let y = eig.eigenvectors.column(imin).into_owned();
            let residual = b * y[m - 1].abs();
            ritz = (emin, y);
            if residual < RESIDUAL_TOL || b < 1e-14 || m == dim {
                converged = true;
                break;
            }
            beta.push(b);
            let next: Vec<Complex64> = w.iter().map(|x| x / b).collect();
            basis.push(next);
        }
        let (e, y) = ritz;
        let mut vec = vec![Complex64::default(); dim];
        for (coef, q) in y.iter().zip(&basis) {
            vec.iter_mut().zip(q).for_each(|(x, v)| *x += v * *coef);
        }
        normalize(&mut vec);
        if e < best.0 {
            best = (e, vec.clone());
        }
        if converged {
            return best;
        }
        v0 = vec;
    }
    log::warn!("Lanczos did not reach residual {RESIDUAL_TOL:e}; returning best Ritz pair");
    best
}

/// Lowest eigenpair of `h`. With `particles = Some(N)` the search runs in the
/// span of basis states with `N` set bits (exact for number-conserving `h`;
/// otherwise the ground state of the projected operator).
pub fn exact_ground_state(h: &PauliSum, particles: Option<usize>) -> Result<GroundState> {
    let n = h.n_qubits();
    if n > MAX_EXACT_QUBITS {
        return Err(Error::SizeGuard {
            what: "exact diagonalization qubits",
            size: n,
            limit: MAX_EXACT_QUBITS,
        });
    }
    let imag = h.max_imag();
    if imag > super::EXPECTATION_IMAG_TOL {
        return Err(Error::NonHermitian(imag));
    }
    let basis: Vec<usize> = (0..1usize << n)
        .filter(|b| particles.map_or(true, |k| b.count_ones() as usize == k))
        .collect();
    if basis.is_empty() {
        return Err(Error::invalid(format!(
            "no basis states with {} particles on {n} qubits",
            particles.unwrap_or(0)
        )));
    }
    let op = BlockOperator::build(h, &basis);
    let (energy, block_vec) = if basis.len() <= DENSE_LIMIT {
        let eig = op.dense().symmetric_eigen();
        let (imin, &e) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .expect("nonempty block");
        (e, eig.eigenvectors.column(imin).iter().copied().collect::<Vec<_>>())
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c_05e7);
        let start: Vec<Complex64> = (0..basis.len())
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, 0.0))
            .collect();
        lanczos(&op, start)
    };
    let mut amps = vec![Complex64::default(); 1 << n];
    for (&b, a) in basis.iter().zip(block_vec) {
        amps[b] = a;
    }
    Ok(GroundState {
        energy,
        state: StateVector::from_amplitudes(amps)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliWord;
    use crate::testutil::{dense_sum, eigenvalues, Rng};

    fn w(s: &str) -> PauliWord {
        s.parse().unwrap()
    }

    #[test]
    fn single_qubit() {
        let h = PauliSum::from_word(w("Z"), -1.0);
        let gs = exact_ground_state(&h, None).unwrap();
        assert!((gs.energy + 1.0).abs() < 1e-14);
        // -Z is minimized by |0⟩
        let z = PauliSum::from_word(w("Z"), 1.0);
        assert!((gs.state.expectation(&z).unwrap() - 1.0).abs() < 1e-12);
        assert!(gs.state.amplitudes()[0].norm() > 1.0 - 1e-12);
    }

    #[test]
    fn two_qubit_against_dense() {
        let h = PauliSum::from_terms(2, [(w("ZZ"), 1.0), (w("XI"), 0.5)]).unwrap();
        let gs = exact_ground_state(&h, None).unwrap();
        let ev = eigenvalues(&dense_sum(&h));
        assert!((gs.energy - ev[0]).abs() < 1e-12);
        assert!((gs.energy + 1.25f64.sqrt()).abs() < 1e-12);
        assert!((gs.state.expectation(&h).unwrap() - gs.energy).abs() < 1e-12);
    }

    #[test]
    fn lanczos_matches_dense_on_nine_qubits() {
        let mut rng = Rng::new(41);
        let h = rng.hermitian_sum(9, 60);
        let gs = exact_ground_state(&h, None).unwrap();
        let ev = eigenvalues(&dense_sum(&h));
        assert!((gs.energy - ev[0]).abs() < 1e-9 * ev[0].abs().max(1.0));
        assert!((gs.state.expectation(&h).unwrap() - gs.energy).abs() < 1e-8);
    }

    #[test]
    fn sector_restriction() {
        // number operator sum: ground energy in the k-particle sector is k
        let mut h = PauliSum::new(4);
        for q in 0..4 {
            h.add_term(PauliWord::identity(4), Complex64::new(0.5, 0.0));
            h.add_term(PauliWord::single(4, q, crate::Letter::Z).unwrap(), Complex64::new(-0.5, 0.0));
        }
        for k in 0..=4 {
            let gs = exact_ground_state(&h, Some(k)).unwrap();
            assert!((gs.energy - k as f64).abs() < 1e-12);
        }
        assert!(exact_ground_state(&h, Some(5)).is_err());
    }

    #[test]
    fn size_guard() {
        let h = PauliSum::identity(17, 1.0);
        assert!(matches!(exact_ground_state(&h, None), Err(Error::SizeGuard { .. })));
    }
}
