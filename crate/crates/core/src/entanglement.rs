//! Reduced density matrices, von Neumann entropies and the pairwise
//! mutual-information matrix `I_ij = ½(S_i + S_j − S_ij)(1 − δ_ij)`, in nats.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevec::StateVector;

pub type DensityMatrix = DMatrix<Complex64>;

/// Eigenvalues at or below this contribute nothing to the entropy.
pub const EIGEN_FLOOR: f64 = 1e-14;

const RHO_TOL: f64 = 1e-10;

fn check_qubit(s: &StateVector, q: usize) -> Result<()> {
    if q < s.n_qubits() {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange {
            index: q,
            len: s.n_qubits(),
        })
    }
}

/// Single-qubit reduced density matrix of qubit `i`.
pub fn rdm1(s: &StateVector, i: usize) -> Result<DensityMatrix> {
    check_qubit(s, i)?;
    let amps = s.amplitudes();
    let bit = 1usize << i;
    let mut rho = DensityMatrix::zeros(2, 2);
    for b in 0..amps.len() {
        if b & bit != 0 {
            continue;
        }
        let (a0, a1) = (amps[b], amps[b | bit]);
        rho[(0, 0)] += a0 * a0.conj();
        rho[(0, 1)] += a0 * a1.conj();
        rho[(1, 1)] += a1 * a1.conj();
    }
    rho[(1, 0)] = rho[(0, 1)].conj();
    Ok(rho)
}

/// Two-qubit reduced density matrix of `(i, j)`; `i` is the leading tensor
/// factor, so row index is `2·bit_i + bit_j`.
pub fn rdm2(s: &StateVector, i: usize, j: usize) -> Result<DensityMatrix> {
    check_qubit(s, i)?;
    check_qubit(s, j)?;
    if i == j {
        return Err(Error::invalid("rdm2 needs two distinct qubits"));
    }
    let amps = s.amplitudes();
    let (bi, bj) = (1usize << i, 1usize << j);
    let offsets = [0, bj, bi, bi | bj];
    let mut rho = DensityMatrix::zeros(4, 4);
    for b in 0..amps.len() {
        if b & (bi | bj) != 0 {
            continue;
        }
        let a = offsets.map(|o| amps[b | o]);
        for r in 0..4 {
            for c in r..4 {
                rho[(r, c)] += a[r] * a[c].conj();
            }
        }
    }
    for r in 0..4 {
        for c in 0..r {
            rho[(r, c)] = rho[(c, r)].conj();
        }
    }
    Ok(rho)
}

/// `−Σ λ ln λ` over the spectrum of a density matrix.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    if !rho.is_square() {
        return Err(Error::invalid("density matrix must be square"));
    }
    let herm_err = (rho - rho.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
    if herm_err > RHO_TOL {
        return Err(Error::invalid(format!("density matrix not Hermitian ({herm_err:e})")));
    }
    let trace = rho.trace();
    if (trace - Complex64::new(1.0, 0.0)).norm() > RHO_TOL {
        return Err(Error::invalid(format!("density matrix trace {trace} ≠ 1")));
    }
    let eig = rho.clone().symmetric_eigen();
    let mut s = 0.0;
    for &l in eig.eigenvalues.iter() {
        if l < -RHO_TOL {
            return Err(Error::invalid(format!("negative eigenvalue {l:e}")));
        }
        if l > EIGEN_FLOOR {
            s -= l * l.ln();
        }
    }
    Ok(s)
}

/// Symmetric mutual-information matrix with zero diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiMatrix {
    n: usize,
    values: Vec<f64>,
}

impl MiMatrix {
    /// Builds from row-major values, checking symmetry, zero diagonal and
    /// non-negativity within `1e-10`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::invalid("empty MI matrix"));
        }
        let mut values = Vec::with_capacity(n * n);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: r.len(),
                });
            }
            for (j, &v) in r.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::invalid(format!("MI[{i}][{j}] is not finite")));
                }
                values.push(v);
            }
        }
        let m = Self { n, values };
        for i in 0..n {
            if m.get(i, i).abs() > 1e-10 {
                return Err(Error::invalid(format!("MI diagonal entry {i} is nonzero")));
            }
            for j in 0..n {
                if (m.get(i, j) - m.get(j, i)).abs() > 1e-10 {
                    return Err(Error::invalid(format!("MI not symmetric at ({i},{j})")));
                }
                if m.get(i, j) < -1e-10 {
                    return Err(Error::invalid(format!("MI negative at ({i},{j})")));
                }
            }
        }
        Ok(m)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            values: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// CSV: a header row of qubit indices followed by `n` rows of values.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (0..self.n).map(|i| i.to_string()).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for r in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|c| fmt_sig12(self.get(r, c))).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty MI CSV"))?;
        let n = header.split(',').count();
        let mut rows = Vec::with_capacity(n);
        for (idx, line) in lines {
            let row: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|v| v.trim().parse::<f64>()).collect();
            let row = row.map_err(|e| Error::parse(idx + 1, e.to_string()))?;
            if row.len() != n {
                return Err(Error::parse(idx + 1, format!("expected {n} values")));
            }
            rows.push(row);
        }
        if rows.len() != n {
            return Err(Error::parse(n + 1, format!("expected {n} rows, found {}", rows.len())));
        }
        Self::from_rows(rows)
    }
}

/// Twelve significant digits, scientific notation.
pub fn fmt_sig12(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:.11e}")
    }
}

/// Mutual-information matrix of every qubit pair of `s`.
pub fn mutual_information(s: &StateVector) -> Result<MiMatrix> {
    let n = s.n_qubits();
    let single: Vec<f64> = (0..n)
        .map(|i| rdm1(s, i).and_then(|r| von_neumann_entropy(&r)))
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let pair_s: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| rdm2(s, i, j).and_then(|r| von_neumann_entropy(&r)))
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; n * n];
    for (&(i, j), sij) in pairs.iter().zip(pair_s) {
        let v = (0.5 * (single[i] + single[j] - sij)).max(0.0);
        values[i * n + j] = v;
        values[j * n + i] = v;
    }
    Ok(MiMatrix { n, values })
}

/// `r_ij = (1 − e^{−2 I_ij / d})^{1/2}`, zero diagonal.
pub fn generalized_correlation(mi: &MiMatrix, d: f64) -> Result<Vec<Vec<f64>>> {
    if !(d > 0.0) {
        return Err(Error::invalid(format!("dimensionality must be positive, got {d}")));
    }
    let n = mi.n();
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        (1.0 - (-2.0 * mi.get(i, j) / d).exp()).max(0.0).sqrt()
                    }
                })
                .collect()
        })
        .collect())
}
