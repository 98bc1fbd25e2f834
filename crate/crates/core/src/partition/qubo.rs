//! QUBO formulations of the bipartition problem and two classical solvers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::entanglement::MiMatrix;
use crate::error::{Error, Result};

pub const MAX_EXHAUSTIVE_QUBO: usize = 22;

const TIE_TOL: f64 = 1e-12;

/// Minimize `xᵀQx` over bit vectors; bit `i` of `x` is variable `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuboProblem {
    n: usize,
    q: Vec<f64>,
}

impl QuboProblem {
    pub fn new(n: usize, q: Vec<f64>) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::invalid(format!("QUBO size {n} outside 1..=64")));
        }
        crate::error::check_dim(n * n, q.len())?;
        Ok(Self { n, q })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.n + j]
    }

    pub fn energy(&self, x: u64) -> f64 {
        let mut e = 0.0;
        for i in 0..self.n {
            if x >> i & 1 == 0 {
                continue;
            }
            for j in 0..self.n {
                if x >> j & 1 == 1 {
                    e += self.get(i, j);
                }
            }
        }
        e
    }

    /// Coupling of `i` to the others, `Q_ij + Q_ji`, row-major.
    fn couplings(&self) -> Vec<f64> {
        let n = self.n;
        let mut c = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    c[i * n + j] = self.get(i, j) + self.get(j, i);
                }
            }
        }
        c
    }
}

/// `Q = −I + λR` with `R_ii = 1 − 2fS`, `R_ij = 1`. Under the full-matrix
/// convention a selection of `K` bits pays `λK(K − 2fS)`, lowest at `K = fS`.
pub fn build_mi_selection_qubo(mi: &MiMatrix, f: f64, lambda: f64, s: usize) -> Result<QuboProblem> {
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::invalid(format!("target fraction {f} outside (0, 1)")));
    }
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!("penalty {lambda} must be positive")));
    }
    let n = mi.n();
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let r = if i == j { 1.0 - 2.0 * f * s as f64 } else { 1.0 };
            q[i * n + j] = -mi.get(i, j) + lambda * r;
        }
    }
    QuboProblem::new(n, q)
}

/// Modularity matrix `B = A − d dᵀ/(2m)` of `A = |I|` (zero diagonal), negated
/// for minimization.
pub fn build_modularity_qubo(mi: &MiMatrix) -> Result<QuboProblem> {
    let b = modularity_matrix(mi)?;
    let n = mi.n();
    QuboProblem::new(n, b.iter().map(|v| -v).collect())
}

pub fn modularity_matrix(mi: &MiMatrix) -> Result<Vec<f64>> {
    let n = mi.n();
    let a = |i: usize, j: usize| if i == j { 0.0 } else { mi.get(i, j).abs() };
    let d: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a(i, j)).sum()).collect();
    let two_m: f64 = d.iter().sum();
    if two_m <= 0.0 {
        return Err(Error::invalid("modularity needs at least one nonzero MI entry"));
    }
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            b[i * n + j] = a(i, j) - d[i] * d[j] / two_m;
        }
    }
    Ok(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "solver", rename_all = "snake_case")]
pub enum QuboSolver {
    Exhaustive,
    Annealing { seed: u64 },
}

pub fn solve_qubo(q: &QuboProblem, solver: QuboSolver) -> Result<u64> {
    match solver {
        QuboSolver::Exhaustive => solve_exhaustive(q),
        QuboSolver::Annealing { seed } => Ok(anneal(q, &AnnealSchedule::for_problem(q), seed)),
    }
}

/// Gray-code enumeration; ties go to the smallest integer pattern.
pub fn solve_exhaustive(q: &QuboProblem) -> Result<u64> {
    let n = q.n();
    if n > MAX_EXHAUSTIVE_QUBO {
        return Err(Error::SizeGuard {
            what: "exhaustive QUBO variables",
            size: n,
            limit: MAX_EXHAUSTIVE_QUBO,
        });
    }
    let c = q.couplings();
    let mut field = vec![0.0; n];
    let mut x = 0u64;
    let mut e = 0.0;
    let (mut best_x, mut best_e) = (0u64, 0.0f64);
    for k in 1u64..(1 << n) {
        let i = k.trailing_zeros() as usize;
        let on = x >> i & 1 == 0;
        let delta = q.get(i, i) + field[i];
        e += if on { delta } else { -delta };
        x ^= 1 << i;
        let sgn = if on { 1.0 } else { -1.0 };
        for j in 0..n {
            field[j] += sgn * c[j * n + i];
        }
        let tol = TIE_TOL * best_e.abs().max(1.0);
        if e < best_e - tol || (e <= best_e + tol && x < best_x) {
            best_e = best_e.min(e);
            best_x = x;
        }
    }
    Ok(best_x)
}

/// Geometric-cooling single-flip Metropolis schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnealSchedule {
    pub initial_temperature: f64,
    pub cooling: f64,
    pub sweeps: usize,
}

impl AnnealSchedule {
    /// `T0 = max|Q_ij|·n`, factor 0.995 per sweep, `200·n` sweeps of `n` proposals.
    pub fn for_problem(q: &QuboProblem) -> Self {
        let n = q.n();
        let qmax = q.q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Self {
            initial_temperature: qmax * n as f64,
            cooling: 0.995,
            sweeps: 200 * n,
        }
    }
}

/// Returns the best vector seen; deterministic per seed.
pub fn anneal(q: &QuboProblem, schedule: &AnnealSchedule, seed: u64) -> u64 {
    let n = q.n();
    let c = q.couplings();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: u64 = rng.gen::<u64>() & crate::pauli::low_mask(n);
    let mut field = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            if x >> j & 1 == 1 {
                field[i] += c[i * n + j];
            }
        }
    }
    let mut e = q.energy(x);
    let (mut best_x, mut best_e) = (x, e);
    let mut t = schedule.initial_temperature;
    for _ in 0..schedule.sweeps {
        for _ in 0..n {
            let i = rng.gen_range(0..n);
            let on = x >> i & 1 == 0;
            let raw = q.get(i, i) + field[i];
            let delta = if on { raw } else { -raw };
            let accept = delta <= 0.0 || (t > 0.0 && rng.gen::<f64>() < (-delta / t).exp());
            if !accept {
                continue;
            }
            x ^= 1 << i;
            e += delta;
            let sgn = if on { 1.0 } else { -1.0 };
            for j in 0..n {
                field[j] += sgn * c[j * n + i];
            }
            if e < best_e - TIE_TOL * best_e.abs().max(1.0) {
                best_e = e;
                best_x = x;
            }
        }
        t *= schedule.cooling;
    }
    best_x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::Rng as TestRng;
    use std::f64::consts::LN_2;

    fn brute(q: &QuboProblem) -> (u64, f64) {
        let mut best = (0u64, f64::INFINITY);
        for x in 0..(1u64 << q.n()) {
            let e = q.energy(x);
            if e < best.1 - 1e-12 {
                best = (x, e);
            }
        }
        best
    }

    fn random_qubo(rng: &mut TestRng, n: usize) -> QuboProblem {
        let mut q = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = rng.uniform();
                q[i * n + j] = v;
                q[j * n + i] = v;
            }
        }
        QuboProblem::new(n, q).unwrap()
    }

    pub(crate) fn bell_pairs() -> MiMatrix {
        MiMatrix::from_rows(vec![
            vec![0.0, LN_2, 0.0, 0.0],
            vec![LN_2, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, LN_2],
            vec![0.0, 0.0, LN_2, 0.0],
        ])
        .unwrap()
    }

    #[test]
    fn diagonal_example() {
        let q = QuboProblem::new(2, vec![1.0, 0.0, 0.0, -1.0]).unwrap();
        assert_eq!(solve_exhaustive(&q).unwrap(), 0b10);
        assert_eq!(solve_qubo(&q, QuboSolver::Annealing { seed: 0 }).unwrap(), 0b10);
    }

    #[test]
    fn exhaustive_matches_direct_enumeration() {
        let mut rng = TestRng::new(3);
        for n in 1..=9 {
            let q = random_qubo(&mut rng, n);
            let (x, e) = brute(&q);
            let got = solve_exhaustive(&q).unwrap();
            assert!((q.energy(got) - e).abs() < 1e-12);
            assert_eq!(got, x);
        }
        let zero = QuboProblem::new(3, vec![0.0; 9]).unwrap();
        assert_eq!(solve_exhaustive(&zero).unwrap(), 0);
        let big = QuboProblem::new(23, vec![0.0; 23 * 23]).unwrap();
        assert!(solve_exhaustive(&big).is_err());
    }

    #[test]
    fn annealing_is_deterministic_and_usually_optimal() {
        let mut rng = TestRng::new(11);
        let mut hits = 0;
        for k in 0..20 {
            let q = random_qubo(&mut rng, 10);
            let a = solve_qubo(&q, QuboSolver::Annealing { seed: k }).unwrap();
            assert_eq!(a, solve_qubo(&q, QuboSolver::Annealing { seed: k }).unwrap());
            let best = q.energy(solve_exhaustive(&q).unwrap());
            if (q.energy(a) - best).abs() < 1e-9 {
                hits += 1;
            }
        }
        assert!(hits >= 19, "{hits}/20");
    }

    #[test]
    fn selection_penalty_landscape() {
        let s = 8;
        let q = build_mi_selection_qubo(&MiMatrix::zeros(s), 0.5, 1.0, s).unwrap();
        let by_k = |k: u32| q.energy((1u64 << k) - 1);
        for k in 0..=8u32 {
            let k_f = k as f64;
            assert!((by_k(k) - k_f * (k_f - 8.0)).abs() < 1e-12);
        }
        assert_eq!(by_k(0), 0.0);
        assert_eq!(by_k(8), 0.0);
        assert!((0..=8).all(|k| by_k(k) >= by_k(4)));
        assert!(build_mi_selection_qubo(&MiMatrix::zeros(2), 1.0, 1.0, 2).is_err());
        assert!(build_mi_selection_qubo(&MiMatrix::zeros(2), 0.5, 0.0, 2).is_err());
    }

    #[test]
    fn selection_picks_a_bell_pair() {
        let q = build_mi_selection_qubo(&bell_pairs(), 0.5, 2.0, 4).unwrap();
        let x = solve_exhaustive(&q).unwrap();
        assert!(x == 0b0011 || x == 0b1100, "{x:04b}");
    }

    #[test]
    fn modularity_properties() {
        let mut rng = TestRng::new(5);
        let n = 6;
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = rng.uniform().abs();
                rows[i][j] = v;
                rows[j][i] = v;
            }
        }
        let mi = MiMatrix::from_rows(rows).unwrap();
        let b = modularity_matrix(&mi).unwrap();
        for i in 0..n {
            let s: f64 = b[i * n..(i + 1) * n].iter().sum();
            assert!(s.abs() < 1e-10);
        }
        let q = build_modularity_qubo(&mi).unwrap();
        assert!(q.energy((1 << n) - 1).abs() < 1e-10);
        assert!(build_modularity_qubo(&MiMatrix::zeros(3)).is_err());
    }

    #[test]
    fn modularity_separates_blocks() {
        let n = 6;
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j && (i < 3) == (j < 3) {
                    rows[i][j] = 0.4;
                }
            }
        }
        let q = build_modularity_qubo(&MiMatrix::from_rows(rows).unwrap()).unwrap();
        let x = solve_exhaustive(&q).unwrap();
        assert!(x == 0b000111 || x == 0b111000, "{x:06b}");

        let q = build_modularity_qubo(&bell_pairs()).unwrap();
        let x = solve_exhaustive(&q).unwrap();
        assert!(x == 0b0011 || x == 0b1100, "{x:04b}");
    }
}
