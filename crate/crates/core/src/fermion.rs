//! Molecular integrals to qubit operators.
//!
//! Spin orbitals are laid out in blocked order: spatial orbital `p` with spin
//! α is mode `p`, with spin β mode `p + n_spatial`. Jordan–Wigner maps
//! `a†_j → ½(X_j − iY_j) Z_{j−1}⋯Z_0`.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Letter, PauliSum, PauliWord, DEFAULT_PRUNE_TOL};

const SYM_TOL: f64 = 1e-10;

/// Active-space electronic structure problem in chemist notation.
#[derive(Clone, Debug, PartialEq)]
pub struct MolecularProblem {
    n_spatial: usize,
    n_electrons: usize,
    ms2: i32,
    core_energy: f64,
    h1: Vec<f64>,
    h2: Vec<f64>,
}

impl MolecularProblem {
    pub fn new(
        n_spatial: usize,
        n_electrons: usize,
        ms2: i32,
        core_energy: f64,
        h1: Vec<f64>,
        h2: Vec<f64>,
    ) -> Result<Self> {
        let n = n_spatial;
        if n == 0 || 2 * n > crate::pauli::MAX_QUBITS {
            return Err(Error::invalid(format!("unsupported orbital count {n}")));
        }
        if n_electrons == 0 || n_electrons > 2 * n {
            return Err(Error::invalid(format!(
                "{n_electrons} electrons do not fit in {n} spatial orbitals"
            )));
        }
        if h1.len() != n * n || h2.len() != n.pow(4) {
            return Err(Error::invalid("integral array sizes do not match NORB"));
        }
        let p = Self {
            n_spatial,
            n_electrons,
            ms2,
            core_energy,
            h1,
            h2,
        };
        p.occupations()?;
        for i in 0..n {
            for j in 0..n {
                if (p.h1(i, j) - p.h1(j, i)).abs() > SYM_TOL {
                    return Err(Error::invalid(format!("h1 not symmetric at ({i},{j})")));
                }
                for k in 0..n {
                    for l in 0..n {
                        let v = p.h2(i, j, k, l);
                        if (v - p.h2(j, i, k, l)).abs() > SYM_TOL
                            || (v - p.h2(i, j, l, k)).abs() > SYM_TOL
                            || (v - p.h2(k, l, i, j)).abs() > SYM_TOL
                        {
                            return Err(Error::invalid(format!(
                                "h2 lacks permutational symmetry at ({i}{j}|{k}{l})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(p)
    }

    pub fn n_spatial(&self) -> usize {
        self.n_spatial
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.n_spatial
    }

    pub fn n_electrons(&self) -> usize {
        self.n_electrons
    }

    pub fn ms2(&self) -> i32 {
        self.ms2
    }

    pub fn core_energy(&self) -> f64 {
        self.core_energy
    }

    #[inline]
    pub fn h1(&self, p: usize, q: usize) -> f64 {
        self.h1[p * self.n_spatial + q]
    }

    /// `(ij|kl)`.
    #[inline]
    pub fn h2(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n_spatial;
        self.h2[((i * n + j) * n + k) * n + l]
    }

    /// `(n_α, n_β)`.
    fn occupations(&self) -> Result<(usize, usize)> {
        occupations(self.n_spatial, self.n_electrons, self.ms2)
    }

    /// Relabels spatial orbitals: new orbital `k` is old orbital `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n_spatial;
        if perm.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: perm.len(),
            });
        }
        let mut h1 = vec![0.0; n * n];
        let mut h2 = vec![0.0; n.pow(4)];
        for i in 0..n {
            for j in 0..n {
                h1[i * n + j] = self.h1(perm[i], perm[j]);
                for k in 0..n {
                    for l in 0..n {
                        h2[((i * n + j) * n + k) * n + l] =
                            self.h2(perm[i], perm[j], perm[k], perm[l]);
                    }
                }
            }
        }
        Self::new(n, self.n_electrons, self.ms2, self.core_energy, h1, h2)
    }
}

fn occupations(n_spatial: usize, n_electrons: usize, ms2: i32) -> Result<(usize, usize)> {
    let ne = n_electrons as i64;
    let ms2 = ms2 as i64;
    if (ne + ms2) % 2 != 0 || ms2.abs() > ne {
        return Err(Error::invalid(format!(
            "MS2={ms2} inconsistent with {ne} electrons"
        )));
    }
    let na = ((ne + ms2) / 2) as usize;
    let nb = ((ne - ms2) / 2) as usize;
    if na > n_spatial || nb > n_spatial {
        return Err(Error::invalid(format!(
            "{na} α / {nb} β electrons exceed {n_spatial} spatial orbitals"
        )));
    }
    Ok((na, nb))
}

/// Parses an FCIDUMP stream. Orbital symmetry labels are accepted and ignored.
pub fn parse_fcidump(text: &str) -> Result<MolecularProblem> {
    let lines: Vec<&str> = text.lines().collect();
    let first = lines
        .iter()
        .position(|l| !l.trim().is_empty())
        .ok_or_else(|| Error::parse(1, "empty FCIDUMP"))?;
    if !lines[first].trim_start().to_ascii_uppercase().starts_with("&FCI") {
        return Err(Error::parse(first + 1, "header must start with &FCI"));
    }
    let mut header = String::new();
    let mut body_start = None;
    for (idx, line) in lines.iter().enumerate().skip(first) {
        let up = line.to_ascii_uppercase();
        let end = up.find("&END").or_else(|| {
            let t = up.trim();
            (t == "/" || t.ends_with('/')).then(|| up.rfind('/').unwrap())
        });
        match end {
            Some(pos) => {
                header.push_str(&up[..pos]);
                body_start = Some(idx + 1);
                break;
            }
            None => {
                header.push_str(&up);
                header.push(',');
            }
        }
    }
    let body_start = body_start.ok_or_else(|| Error::parse(first + 1, "unterminated header"))?;
    let header = header.trim_start().trim_start_matches("&FCI");

    let mut keys: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for tok in header
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
    {
        if let Some((k, v)) = tok.split_once('=') {
            let k = k.trim().to_string();
            let entry = keys.entry(k.clone()).or_default();
            if !v.trim().is_empty() {
                entry.push(v.trim().to_string());
            }
            current = Some(k);
        } else if let Some(k) = &current {
            keys.get_mut(k).expect("current key present").push(tok.to_string());
        } else {
            return Err(Error::parse(first + 1, format!("stray header token {tok:?}")));
        }
    }
    let get_int = |k: &str| -> Result<Option<i64>> {
        match keys.get(k).and_then(|v| v.first()) {
            None => Ok(None),
            Some(s) => s
                .parse::<i64>()
                .map(Some)
                .map_err(|_| Error::parse(first + 1, format!("{k}={s} is not an integer"))),
        }
    };
    let norb = get_int("NORB")?.ok_or_else(|| Error::parse(first + 1, "missing NORB"))?;
    let nelec = get_int("NELEC")?.ok_or_else(|| Error::parse(first + 1, "missing NELEC"))?;
    let ms2 = get_int("MS2")?.unwrap_or(0);
    if let Some(v) = keys.get("UHF").and_then(|v| v.first()) {
        if v.starts_with(".T") || v == "1" || v == "TRUE" {
            return Err(Error::parse(first + 1, "UHF integrals are not supported"));
        }
    }
    if norb <= 0 || nelec <= 0 {
        return Err(Error::parse(first + 1, "NORB and NELEC must be positive"));
    }
    let n = norb as usize;
    if 2 * n > crate::pauli::MAX_QUBITS {
        return Err(Error::parse(first + 1, format!("NORB={n} too large")));
    }

    let mut h1 = vec![0.0; n * n];
    let mut h2 = vec![0.0; n.pow(4)];
    let mut core = 0.0;
    for (idx, line) in lines.iter().enumerate().skip(body_start) {
        let line_no = idx + 1;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::parse(line_no, "expected `value i j k l`"));
        }
        let value: f64 = fields[0]
            .replace(['D', 'd'], "E")
            .parse()
            .map_err(|_| Error::parse(line_no, format!("non-numeric value {:?}", fields[0])))?;
        let mut idx4 = [0usize; 4];
        for (slot, f) in idx4.iter_mut().zip(&fields[1..]) {
            let v: usize = f
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad index {f:?}")))?;
            if v > n {
                return Err(Error::parse(line_no, format!("index {v} exceeds NORB={n}")));
            }
            *slot = v;
        }
        match idx4 {
            [0, 0, 0, 0] => core += value,
            [i, j, 0, 0] if i > 0 && j > 0 => {
                let (i, j) = (i - 1, j - 1);
                h1[i * n + j] = value;
                h1[j * n + i] = value;
            }
            [i, 0, 0, 0] if i > 0 => {} // orbital energy
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => {
                let (i, j, k, l) = (i - 1, j - 1, k - 1, l - 1);
                for (a, b, c, d) in [
                    (i, j, k, l),
                    (j, i, k, l),
                    (i, j, l, k),
                    (j, i, l, k),
                    (k, l, i, j),
                    (l, k, i, j),
                    (k, l, j, i),
                    (l, k, j, i),
                ] {
                    h2[((a * n + b) * n + c) * n + d] = value;
                }
            }
            _ => return Err(Error::parse(line_no, "unrecognized index pattern")),
        }
    }
    MolecularProblem::new(n, nelec as usize, ms2 as i32, core, h1, h2)
        .map_err(|e| Error::parse(body_start, e.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Ladder {
    pub mode: usize,
    pub dagger: bool,
}

impl Ladder {
    pub fn create(mode: usize) -> Self {
        Self { mode, dagger: true }
    }

    pub fn annihilate(mode: usize) -> Self {
        Self { mode, dagger: false }
    }
}

/// Sum of coefficient × ordered product of ladder operators.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FermionOperator {
    terms: Vec<(Complex64, Vec<Ladder>)>,
}

impl FermionOperator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn term(coeff: impl Into<Complex64>, ops: Vec<Ladder>) -> Self {
        Self {
            terms: vec![(coeff.into(), ops)],
        }
    }

    pub fn push(&mut self, coeff: impl Into<Complex64>, ops: Vec<Ladder>) {
        self.terms.push((coeff.into(), ops));
    }

    pub fn terms(&self) -> &[(Complex64, Vec<Ladder>)] {
        &self.terms
    }

    /// Hermitian conjugate: reverse each product and flip daggers.
    pub fn adjoint(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(c, ops)| {
                    (
                        c.conj(),
                        ops.iter()
                            .rev()
                            .map(|l| Ladder {
                                mode: l.mode,
                                dagger: !l.dagger,
                            })
                            .collect(),
                    )
                })
                .collect(),
        }
    }

    pub fn sub(&self, other: &FermionOperator) -> Self {
        let mut out = self.clone();
        out.terms
            .extend(other.terms.iter().map(|(c, ops)| (-c, ops.clone())));
        out
    }

    /// Jordan–Wigner image on `n_modes` qubits, pruned at the default tolerance.
    pub fn jordan_wigner(&self, n_modes: usize) -> Result<PauliSum> {
        let ladders = JwTable::new(n_modes)?;
        let mut out = PauliSum::new(n_modes);
        for (c, ops) in &self.terms {
            let mut prod = PauliSum::identity(n_modes, 1.0);
            for l in ops {
                if l.mode >= n_modes {
                    return Err(Error::IndexOutOfRange {
                        index: l.mode,
                        len: n_modes,
                    });
                }
                prod = prod.mul(ladders.get(*l))?;
            }
            for (w, v) in prod.iter() {
                out.add_term(*w, v * c);
            }
        }
        out.prune_in_place(DEFAULT_PRUNE_TOL);
        Ok(out)
    }
}

struct JwTable {
    create: Vec<PauliSum>,
    annihilate: Vec<PauliSum>,
}

impl JwTable {
    fn new(n: usize) -> Result<Self> {
        let mut create = Vec::with_capacity(n);
        let mut annihilate = Vec::with_capacity(n);
        for j in 0..n {
            let chain = (1u64 << j) - 1;
            let xw = PauliWord::new(n, 1 << j, chain)?;
            let yw = PauliWord::new(n, 1 << j, chain | (1 << j))?;
            let half = Complex64::new(0.5, 0.0);
            let ihalf = Complex64::new(0.0, 0.5);
            create.push(PauliSum::from_terms(n, [(xw, half), (yw, -ihalf)])?);
            annihilate.push(PauliSum::from_terms(n, [(xw, half), (yw, ihalf)])?);
        }
        Ok(Self { create, annihilate })
    }

    fn get(&self, l: Ladder) -> &PauliSum {
        if l.dagger {
            &self.create[l.mode]
        } else {
            &self.annihilate[l.mode]
        }
    }
}

/// `E_core + Σ h_pq a†_p a_q + ½ Σ ⟨pq|rs⟩ a†_p a†_q a_s a_r` over spin orbitals,
/// with `⟨pq|rs⟩ = (PR|QS) δ_{σp σr} δ_{σq σs}`.
pub fn second_quantized_hamiltonian(p: &MolecularProblem) -> FermionOperator {
    let n = p.n_spatial();
    let modes = 2 * n;
    let spatial = |m: usize| m % n;
    let spin = |m: usize| m / n;
    let mut op = FermionOperator::new();
    op.push(p.core_energy(), vec![]);
    for a in 0..modes {
        for b in 0..modes {
            if spin(a) != spin(b) {
                continue;
            }
            let v = p.h1(spatial(a), spatial(b));
            if v != 0.0 {
                op.push(v, vec![Ladder::create(a), Ladder::annihilate(b)]);
            }
        }
    }
    for a in 0..modes {
        for b in 0..modes {
            if a == b {
                continue;
            }
            for c in 0..modes {
                if spin(c) != spin(b) {
                    continue;
                }
                for d in 0..modes {
                    if c == d || spin(d) != spin(a) {
                        continue;
                    }
                    // ⟨ab|dc⟩ a†_a a†_b a_c a_d  ⇒ (a d | b c)
                    let v = p.h2(spatial(a), spatial(d), spatial(b), spatial(c));
                    if v != 0.0 {
                        op.push(
                            0.5 * v,
                            vec![
                                Ladder::create(a),
                                Ladder::create(b),
                                Ladder::annihilate(c),
                                Ladder::annihilate(d),
                            ],
                        );
                    }
                }
            }
        }
    }
    op
}

/// Qubit Hamiltonian under Jordan–Wigner, real coefficients, pruned at 1e-12.
pub fn build_qubit_hamiltonian(p: &MolecularProblem) -> Result<PauliSum> {
    let h = second_quantized_hamiltonian(p).jordan_wigner(p.n_qubits())?;
    let imag = h.max_imag();
    if imag > 1e-10 {
        return Err(Error::NonHermitian(imag));
    }
    let real: Vec<(PauliWord, f64)> = h.iter().map(|(w, c)| (*w, c.re)).collect();
    let mut out = PauliSum::from_terms(h.n_qubits(), real)?;
    out.prune_in_place(DEFAULT_PRUNE_TOL);
    Ok(out)
}

/// Hartree–Fock occupation mask: lowest `n_α` α modes and lowest `n_β` β modes.
pub fn hf_reference(p: &MolecularProblem) -> Result<u64> {
    hf_mask(p.n_spatial(), p.n_electrons(), p.ms2())
}

pub fn hf_mask(n_spatial: usize, n_electrons: usize, ms2: i32) -> Result<u64> {
    let (na, nb) = occupations(n_spatial, n_electrons, ms2)?;
    let alpha = (1u64 << na) - 1;
    let beta = ((1u64 << nb) - 1) << n_spatial;
    Ok(alpha | beta)
}

/// Spin-preserving excitation from occupied to virtual spin orbitals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Excitation {
    Single { from: usize, to: usize },
    Double { from: [usize; 2], to: [usize; 2] },
}

impl Excitation {
    /// `t − t†` with `t = a†_a a_i` or `a†_a a†_b a_j a_i`.
    pub fn generator(&self) -> FermionOperator {
        let t = match *self {
            Excitation::Single { from, to } => {
                FermionOperator::term(1.0, vec![Ladder::create(to), Ladder::annihilate(from)])
            }
            Excitation::Double {
                from: [i, j],
                to: [a, b],
            } => FermionOperator::term(
                1.0,
                vec![
                    Ladder::create(a),
                    Ladder::create(b),
                    Ladder::annihilate(j),
                    Ladder::annihilate(i),
                ],
            ),
        };
        t.sub(&t.adjoint())
    }
}

impl fmt::Display for Excitation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Excitation::Single { from, to } => write!(f, "{from}->{to}"),
            Excitation::Double { from, to } => {
                write!(f, "{},{}->{},{}", from[0], from[1], to[0], to[1])
            }
        }
    }
}

/// Qubit-UCCSD operator pool: one Pauli word per distinct flip-index set.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorPool {
    generators: Vec<PauliWord>,
    provenance: Vec<Excitation>,
}

impl OperatorPool {
    pub fn from_parts(generators: Vec<PauliWord>, provenance: Vec<Excitation>) -> Result<Self> {
        if generators.len() != provenance.len() {
            return Err(Error::invalid("pool provenance length mismatch"));
        }
        Ok(Self {
            generators,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn generators(&self) -> &[PauliWord] {
        &self.generators
    }

    pub fn provenance(&self) -> &[Excitation] {
        &self.provenance
    }

    /// `<index> <letters> <excitation>` per line.
    pub fn to_text(&self) -> String {
        self.generators
            .iter()
            .zip(&self.provenance)
            .enumerate()
            .map(|(k, (g, e))| format!("{k} {g} {e}\n"))
            .collect()
    }
}

fn spin_of(mode: usize, n_spatial: usize) -> usize {
    mode / n_spatial
}

/// Enumerates singles then doubles over the HF reference (ascending indices),
/// JW-maps `t − t†`, keeps odd-Y words, and retains the lexicographically
/// smallest word per flip-index set at the position where the set first
/// appeared.
pub fn build_uccsd_pool(p: &MolecularProblem) -> Result<OperatorPool> {
    uccsd_pool(p.n_spatial(), p.n_electrons(), p.ms2())
}

pub fn uccsd_pool(n_spatial: usize, n_electrons: usize, ms2: i32) -> Result<OperatorPool> {
    let modes = 2 * n_spatial;
    let hf = hf_mask(n_spatial, n_electrons, ms2)?;
    let occ: Vec<usize> = (0..modes).filter(|m| hf >> m & 1 == 1).collect();
    let vir: Vec<usize> = (0..modes).filter(|m| hf >> m & 1 == 0).collect();
    if vir.is_empty() {
        return Err(Error::invalid("no virtual orbitals: pool is empty"));
    }
    let spin = |m: usize| spin_of(m, n_spatial);
    let mut excitations = Vec::new();
    for &i in &occ {
        for &a in &vir {
            if spin(i) == spin(a) {
                excitations.push(Excitation::Single { from: i, to: a });
            }
        }
    }
    for (x, &i) in occ.iter().enumerate() {
        for &j in &occ[x + 1..] {
            for (y, &a) in vir.iter().enumerate() {
                for &b in &vir[y + 1..] {
                    if spin(i) + spin(j) == spin(a) + spin(b) {
                        excitations.push(Excitation::Double {
                            from: [i, j],
                            to: [a, b],
                        });
                    }
                }
            }
        }
    }
    let mut slots: Vec<(PauliWord, Excitation)> = Vec::new();
    let mut by_flip: BTreeMap<u64, usize> = BTreeMap::new();
    for e in excitations {
        let image = e.generator().jordan_wigner(modes)?;
        for (w, c) in image.iter() {
            if c.norm() < DEFAULT_PRUNE_TOL || w.y_count() % 2 == 0 {
                continue;
            }
            match by_flip.get(&w.flip_mask()) {
                None => {
                    by_flip.insert(w.flip_mask(), slots.len());
                    slots.push((*w, e.clone()));
                }
                Some(&k) => {
                    if *w < slots[k].0 {
                        slots[k].0 = *w;
                    }
                }
            }
        }
    }
    let (generators, provenance) = slots.into_iter().unzip();
    OperatorPool::from_parts(generators, provenance)
}

/// JW total number operator `Σ_q (I − Z_q)/2`.
pub fn number_operator(n_modes: usize) -> PauliSum {
    let mut s = PauliSum::identity(n_modes, 0.5 * n_modes as f64);
    for q in 0..n_modes {
        let z = PauliWord::single(n_modes, q, Letter::Z).expect("q < n");
        s.add_term(z, Complex64::new(-0.5, 0.0));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevec::{basis_expectation, exact_ground_state};

    fn w(s: &str) -> PauliWord {
        s.parse().unwrap()
    }

    fn fixture(name: &str) -> String {
        let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
        std::fs::read_to_string(path).unwrap()
    }

    fn toy(eps: &[f64]) -> MolecularProblem {
        let n = eps.len();
        let mut h1 = vec![0.0; n * n];
        for (i, e) in eps.iter().enumerate() {
            h1[i * n + i] = *e;
        }
        MolecularProblem::new(n, 2, 0, 0.0, h1, vec![0.0; n.pow(4)]).unwrap()
    }

    #[test]
    fn parse_header_and_records() {
        let text = " &FCI NORB=2,NELEC=2,MS2=0,\n  ORBSYM=1,1,\n  ISYM=1,\n &END\n\
                    0.5 1 1 1 1\n0.25 2 1 1 1\n-1.25 1 1 0 0\n0.1 2 1 0 0\n-0.5 2 2 0 0\n0.7 0 0 0 0\n";
        let p = parse_fcidump(text).unwrap();
        assert_eq!((p.n_spatial(), p.n_electrons(), p.ms2()), (2, 2, 0));
        assert_eq!(p.h1(0, 0), -1.25);
        assert_eq!(p.h1(0, 1), 0.1);
        assert_eq!(p.h2(0, 1, 0, 0), 0.25);
        assert_eq!(p.h2(0, 0, 1, 0), 0.25);
        assert_eq!(p.core_energy(), 0.7);

        let slash = "&FCI NORB=1, NELEC=1, MS2=1 /\n-0.3 1 1 0 0\n";
        assert_eq!(parse_fcidump(slash).unwrap().h1(0, 0), -0.3);
        let fortran = "&FCI NORB=1,NELEC=1,MS2=1\n&END\n-1.5D-01 1 1 0 0\n";
        assert_eq!(parse_fcidump(fortran).unwrap().h1(0, 0), -0.15);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad_index = "&FCI NORB=2,NELEC=2,MS2=0\n&END\n0.5 1 1 0 0\n0.5 3 1 0 0\n";
        assert!(matches!(parse_fcidump(bad_index), Err(Error::Parse { line: 4, .. })));
        let bad_value = "&FCI NORB=2,NELEC=2,MS2=0\n&END\nabc 1 1 0 0\n";
        assert!(matches!(parse_fcidump(bad_value), Err(Error::Parse { line: 3, .. })));
        let no_header = "NORB=2\n";
        assert!(matches!(parse_fcidump(no_header), Err(Error::Parse { line: 1, .. })));
        let missing = "&FCI NELEC=2\n&END\n";
        assert!(parse_fcidump(missing).is_err());
        let too_many = "&FCI NORB=1,NELEC=3,MS2=1\n&END\n";
        assert!(parse_fcidump(too_many).is_err());
    }

    #[test]
    fn single_mode_number_operator() {
        let eps = 0.37;
        let p = MolecularProblem::new(1, 1, 1, 0.0, vec![eps], vec![0.0]).unwrap();
        let h = build_qubit_hamiltonian(&p).unwrap();
        // α mode 0 carries ε(I−Z)/2; β mode 1 too
        assert!((h.coefficient(&w("II")).re - eps).abs() < 1e-15);
        assert!((h.coefficient(&w("ZI")).re + eps / 2.0).abs() < 1e-15);
        assert!((h.coefficient(&w("IZ")).re + eps / 2.0).abs() < 1e-15);
        let one = FermionOperator::term(eps, vec![Ladder::create(0), Ladder::annihilate(0)])
            .jordan_wigner(1)
            .unwrap();
        let expect = PauliSum::from_terms(1, [(w("I"), eps / 2.0), (w("Z"), -eps / 2.0)]).unwrap();
        assert!(one.approx_eq(&expect, 1e-15));
    }

    #[test]
    fn anticommutation_relations() {
        let n = 4;
        for p in 0..n {
            for q in 0..n {
                let ap = FermionOperator::term(1.0, vec![Ladder::annihilate(p)]);
                let aq_dag = FermionOperator::term(1.0, vec![Ladder::create(q)]);
                let mut anti = FermionOperator::new();
                anti.push(1.0, vec![Ladder::annihilate(p), Ladder::create(q)]);
                anti.push(1.0, vec![Ladder::create(q), Ladder::annihilate(p)]);
                let s = anti.jordan_wigner(n).unwrap();
                let expect = if p == q {
                    PauliSum::identity(n, 1.0)
                } else {
                    PauliSum::new(n)
                };
                assert!(s.approx_eq(&expect, 1e-14), "{p},{q}: {s}");
                let _ = (ap, aq_dag);
                let mut aa = FermionOperator::new();
                aa.push(1.0, vec![Ladder::annihilate(p), Ladder::annihilate(q)]);
                aa.push(1.0, vec![Ladder::annihilate(q), Ladder::annihilate(p)]);
                assert!(aa.jordan_wigner(n).unwrap().is_empty());
            }
        }
    }

    #[test]
    fn non_interacting_limit() {
        let p = toy(&[-1.0, 0.4]);
        let h = build_qubit_hamiltonian(&p).unwrap();
        let gs = exact_ground_state(&h, Some(2)).unwrap();
        assert!((gs.energy + 2.0).abs() < 1e-12);
        let full = exact_ground_state(&h, None).unwrap();
        assert!((full.energy + 2.0).abs() < 1e-12);
    }

    #[test]
    fn hf_masks() {
        assert_eq!(hf_mask(2, 2, 0).unwrap(), 0b0101);
        assert_eq!(hf_mask(2, 4, 0).unwrap(), 0b1111);
        assert_eq!(hf_mask(5, 2, 0).unwrap(), (1 << 0) | (1 << 5));
        assert!(hf_mask(2, 5, 1).is_err());
        assert!(hf_mask(2, 2, 1).is_err());
    }

    #[test]
    fn two_mode_pool() {
        // one spatial orbital pair... use a 1-electron, 2-mode α-only system via ms2
        let pool = uccsd_pool(2, 1, 1).unwrap();
        assert_eq!(pool.generators()[0], w("XYII"));
        assert_eq!(pool.len(), 1);
    }

    #[test]
    fn h2_pool_structure() {
        let pool = uccsd_pool(2, 2, 0).unwrap();
        assert_eq!(pool.len(), 3);
        let flips: Vec<u32> = pool.generators().iter().map(|g| g.flip_mask().count_ones()).collect();
        assert_eq!(flips, [2, 2, 4]);
        assert_eq!(pool.generators()[0], w("XYII"));
        assert_eq!(pool.generators()[1], w("IIXY"));
        assert_eq!(pool.generators()[2], w("XXXY"));
        let hf = hf_mask(2, 2, 0).unwrap();
        for g in pool.generators() {
            assert_eq!(g.y_count() % 2, 1);
            let s = crate::statevec::StateVector::basis_state(4, hf).unwrap();
            assert!(s.expectation_word(g).unwrap().norm() < 1e-15);
        }
    }

    #[test]
    fn pool_brute_force_flip_sets() {
        // independent enumeration: flip set of every spin-preserving excitation
        for &(n, ne) in &[(2usize, 2usize), (3, 2), (3, 4), (4, 2)] {
            let pool = uccsd_pool(n, ne, 0).unwrap();
            let hf = hf_mask(n, ne, 0).unwrap();
            let modes = 2 * n;
            let mut sets = std::collections::BTreeSet::new();
            for i in 0..modes {
                for a in 0..modes {
                    if hf >> i & 1 == 1 && hf >> a & 1 == 0 && i / n == a / n {
                        sets.insert((1u64 << i) | (1 << a));
                    }
                }
            }
            for i in 0..modes {
                for j in (i + 1)..modes {
                    for a in 0..modes {
                        for b in (a + 1)..modes {
                            let occ = hf >> i & 1 == 1 && hf >> j & 1 == 1;
                            let vir = hf >> a & 1 == 0 && hf >> b & 1 == 0;
                            if occ && vir && i / n + j / n == a / n + b / n {
                                sets.insert((1u64 << i) | (1 << j) | (1 << a) | (1 << b));
                            }
                        }
                    }
                }
            }
            let got: std::collections::BTreeSet<u64> =
                pool.generators().iter().map(|g| g.flip_mask()).collect();
            assert_eq!(got.len(), pool.len(), "flip sets must be distinct");
            assert_eq!(got, sets, "n={n} ne={ne}");
        }
    }

    #[test]
    fn h2_fixture_energies() {
        let p = parse_fcidump(&fixture("h2_0.735.fcidump")).unwrap();
        let h = build_qubit_hamiltonian(&p).unwrap();
        assert_eq!(h.n_qubits(), 4);
        assert_eq!(h.len(), 15);
        assert!(h.is_hermitian(0.0));
        let gs = exact_ground_state(&h, Some(2)).unwrap();
        assert!((gs.energy + 1.1373).abs() < 5e-4);
        assert!((gs.energy - (-1.1373060357534004)).abs() < 1e-8);
        let hf = hf_reference(&p).unwrap();
        assert_eq!(hf, 0b0101);
        assert!((basis_expectation(&h, hf) - (-1.116998996754004)).abs() < 1e-8);
        // number conservation
        let comm = h.mul(&number_operator(4)).unwrap();
        let rev = number_operator(4).mul(&h).unwrap();
        let mut diff = comm.clone();
        diff.add_assign_sum(&rev.scaled(Complex64::new(-1.0, 0.0))).unwrap();
        assert!(diff.norm() < 1e-10);
    }

    #[test]
    fn orbital_relabeling_invariance() {
        let p = parse_fcidump(&fixture("h2_0.735.fcidump")).unwrap();
        let e0 = exact_ground_state(&build_qubit_hamiltonian(&p).unwrap(), Some(2))
            .unwrap()
            .energy;
        let q = p.permuted(&[1, 0]).unwrap();
        let e1 = exact_ground_state(&build_qubit_hamiltonian(&q).unwrap(), Some(2))
            .unwrap()
            .energy;
        assert!((e0 - e1).abs() < 1e-10);
    }

    #[test]
    fn lih_fixture_reference() {
        let p = parse_fcidump(&fixture("lih_1.547.fcidump")).unwrap();
        assert_eq!(p.n_qubits(), 10);
        assert_eq!(hf_reference(&p).unwrap(), (1 << 0) | (1 << 5));
        let h = build_qubit_hamiltonian(&p).unwrap();
        assert!((basis_expectation(&h, hf_reference(&p).unwrap()) - (-7.863119616421489)).abs() < 1e-8);
        let gs = exact_ground_state(&h, Some(2)).unwrap();
        assert!((gs.energy - (-7.882537790830463)).abs() < 1e-8);
    }
}
