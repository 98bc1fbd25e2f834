#![allow(dead_code)]

use std::path::PathBuf;

use clustervqe::engines::EngineProblem;
use clustervqe::entanglement::MiMatrix;
use clustervqe::fermion::{build_qubit_hamiltonian, build_uccsd_pool, hf_reference, parse_fcidump};
use clustervqe::statevec::exact_ground_state;
use clustervqe::{PauliSum, PauliWord};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub struct Fixture {
    pub name: &'static str,
    pub h: PauliSum,
    pub pool: Vec<PauliWord>,
    pub reference: u64,
    pub electrons: usize,
    pub exact: f64,
    pub sidecar: serde_json::Value,
}

impl Fixture {
    pub fn load(name: &'static str) -> Self {
        let dir = fixtures_dir();
        let text = std::fs::read_to_string(dir.join(format!("{name}.fcidump"))).unwrap();
        let sidecar: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{name}.json"))).unwrap()).unwrap();
        let mol = parse_fcidump(&text).unwrap();
        let h = build_qubit_hamiltonian(&mol).unwrap();
        let exact = exact_ground_state(&h, Some(mol.n_electrons())).unwrap().energy;
        Self {
            name,
            pool: build_uccsd_pool(&mol).unwrap().generators().to_vec(),
            reference: hf_reference(&mol).unwrap(),
            electrons: mol.n_electrons(),
            h,
            exact,
            sidecar,
        }
    }

    pub fn problem(&self) -> EngineProblem<'_> {
        EngineProblem {
            hamiltonian: &self.h,
            pool: &self.pool,
            reference: self.reference,
        }
    }
}

pub fn mi_fixture(name: &str) -> MiMatrix {
    let path = fixtures_dir().join("mi").join(format!("{name}.csv"));
    MiMatrix::from_csv(&std::fs::read_to_string(path).unwrap()).unwrap()
}
