//! Loading a problem from an FCIDUMP, a Pauli-sum file, or a bundle directory.

use std::fs;
use std::path::Path;

use clustervqe::fermion::{build_qubit_hamiltonian, build_uccsd_pool, hf_mask, parse_fcidump, uccsd_pool};
use clustervqe::{PauliSum, PauliWord};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const HAMILTONIAN_FILE: &str = "hamiltonian.txt";
pub const POOL_FILE: &str = "pool.txt";
pub const BUNDLE_FILE: &str = "bundle.json";

#[derive(Clone, Debug)]
pub struct Problem {
    pub hamiltonian: PauliSum,
    pub pool: Vec<PauliWord>,
    /// `<index> <word> <excitation>` lines.
    pub pool_text: String,
    pub reference: u64,
    pub electrons: usize,
    pub ms2: i32,
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleInfo {
    pub source: String,
    pub n_qubits: usize,
    pub electrons: usize,
    pub ms2: i32,
    pub reference: u64,
    pub term_count: usize,
    pub pool_size: usize,
    pub fingerprint: String,
}

pub(crate) fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn data(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn looks_like_fcidump(text: &str) -> bool {
    text.trim_start().to_ascii_uppercase().starts_with("&FCI")
}

/// SHA-256 of the canonical term listing.
pub fn fingerprint(h: &PauliSum) -> String {
    let digest = Sha256::digest(h.to_text().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl Problem {
    pub fn load(path: &Path, electrons: Option<usize>, ms2: Option<i32>) -> Result<Self, CliError> {
        if path.is_dir() {
            return Self::load_bundle(path);
        }
        let text = read(path)?;
        let source = path.display().to_string();
        if looks_like_fcidump(&text) {
            let mol = parse_fcidump(&text).map_err(|e| data(path, e))?;
            if electrons.is_some_and(|n| n != mol.n_electrons()) {
                return Err(CliError::Usage(format!(
                    "electrons = {} contradicts NELEC = {} in {source}",
                    electrons.unwrap_or_default(),
                    mol.n_electrons()
                )));
            }
            let hamiltonian = build_qubit_hamiltonian(&mol).map_err(|e| data(path, e))?;
            let pool = build_uccsd_pool(&mol).map_err(|e| data(path, e))?;
            let reference = hf_mask(mol.n_spatial(), mol.n_electrons(), mol.ms2()).map_err(|e| data(path, e))?;
            return Ok(Self {
                hamiltonian,
                pool: pool.generators().to_vec(),
                pool_text: pool.to_text(),
                reference,
                electrons: mol.n_electrons(),
                ms2: mol.ms2(),
                source,
            });
        }
        let hamiltonian = PauliSum::parse_text(&text).map_err(|e| data(path, e))?;
        let ne = electrons.ok_or_else(|| CliError::Usage(format!("{source}: Pauli-sum input needs `electrons`")))?;
        let ms2 = ms2.unwrap_or((ne % 2) as i32);
        let n = hamiltonian.n_qubits();
        if n % 2 != 0 {
            return Err(data(path, format!("{n} qubits is not an even number of spin orbitals")));
        }
        let pool = uccsd_pool(n / 2, ne, ms2).map_err(|e| data(path, e))?;
        let reference = hf_mask(n / 2, ne, ms2).map_err(|e| data(path, e))?;
        Ok(Self {
            hamiltonian,
            pool: pool.generators().to_vec(),
            pool_text: pool.to_text(),
            reference,
            electrons: ne,
            ms2,
            source,
        })
    }

    fn load_bundle(dir: &Path) -> Result<Self, CliError> {
        let info_path = dir.join(BUNDLE_FILE);
        let info: BundleInfo = serde_json::from_str(&read(&info_path)?).map_err(|e| data(&info_path, e))?;
        let h_path = dir.join(HAMILTONIAN_FILE);
        let hamiltonian = PauliSum::parse_text(&read(&h_path)?).map_err(|e| data(&h_path, e))?;
        if fingerprint(&hamiltonian) != info.fingerprint {
            return Err(data(&h_path, "fingerprint does not match bundle.json"));
        }
        let pool_path = dir.join(POOL_FILE);
        let pool_text = read(&pool_path)?;
        let mut pool = Vec::new();
        for (k, line) in pool_text.lines().enumerate() {
            let word = line
                .split_whitespace()
                .nth(1)
                .ok_or_else(|| data(&pool_path, format!("line {}: expected `<index> <word> ...`", k + 1)))?;
            pool.push(PauliWord::from_letters(word).map_err(|e| data(&pool_path, format!("line {}: {e}", k + 1)))?);
        }
        Ok(Self {
            hamiltonian,
            pool,
            pool_text,
            reference: info.reference,
            electrons: info.electrons,
            ms2: info.ms2,
            source: info.source,
        })
    }

    pub fn info(&self) -> BundleInfo {
        BundleInfo {
            source: self.source.clone(),
            n_qubits: self.hamiltonian.n_qubits(),
            electrons: self.electrons,
            ms2: self.ms2,
            reference: self.reference,
            term_count: self.hamiltonian.len(),
            pool_size: self.pool.len(),
            fingerprint: fingerprint(&self.hamiltonian),
        }
    }

    pub fn write_bundle(&self, dir: &Path) -> Result<BundleInfo, CliError> {
        fs::create_dir_all(dir).map_err(|e| data(dir, e))?;
        let info = self.info();
        write(&dir.join(HAMILTONIAN_FILE), &self.hamiltonian.to_text())?;
        write(&dir.join(POOL_FILE), &self.pool_text)?;
        write(&dir.join(BUNDLE_FILE), &json(&info))?;
        Ok(info)
    }
}

pub(crate) fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| data(path, e))
}

pub(crate) fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}
