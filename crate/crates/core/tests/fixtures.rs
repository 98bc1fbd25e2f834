mod common;

use clustervqe::entanglement::mutual_information;
use clustervqe::partition::{
    exhaustive_partition, intercluster_mi, partition, Clustering, PartitionMethod, QuboSolver,
};
use clustervqe::statevec::{basis_expectation, exact_ground_state};
use common::{mi_fixture, Fixture};

#[test]
fn sidecar_energies_match() {
    for name in ["h2_0.735", "lih_1.547", "lih_2.4", "n2_1.09"] {
        let f = Fixture::load(name);
        let hf = f.sidecar["hf_energy"].as_f64().unwrap();
        let fci = f.sidecar["fci_energy"].as_f64().unwrap();
        assert_eq!(f.h.n_qubits() as u64, f.sidecar["n_qubits"].as_u64().unwrap(), "{name}");
        assert!((basis_expectation(&f.h, f.reference) - hf).abs() < 1e-8, "{name} HF");
        assert!((f.exact - fci).abs() < 1e-8, "{name} FCI");
        assert_eq!(f.reference.count_ones() as usize, f.electrons);
    }
}

#[test]
fn committed_mi_matrices_are_current() {
    for name in ["h2_0.735", "lih_1.547", "lih_2.4"] {
        let f = Fixture::load(name);
        let gs = exact_ground_state(&f.h, Some(f.electrons)).unwrap();
        let mi = mutual_information(&gs.state).unwrap();
        let committed = mi_fixture(name);
        for i in 0..mi.n() {
            for j in 0..mi.n() {
                let (a, b) = (mi.get(i, j), committed.get(i, j));
                assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-6), "{name} ({i},{j}): {a} vs {b}");
            }
        }
    }
}

#[test]
fn bell_pairs_agree_across_methods() {
    let mi = mi_fixture("bell_pairs");
    let want = Clustering::from_assignment(vec![0, 0, 1, 1]).unwrap();
    let methods = [
        PartitionMethod::Exhaustive,
        PartitionMethod::Refine,
        PartitionMethod::MiSelection { f: 0.5, lambda: 2.0 },
        PartitionMethod::Modularity,
    ];
    for m in methods {
        for solver in [QuboSolver::Exhaustive, QuboSolver::Annealing { seed: 3 }] {
            let c = partition(&mi, m, 2, Some(&[2, 2]), solver).unwrap();
            assert!(c.same_partition(&want), "{} {:?}", m.name(), c.assignment());
        }
    }
}

#[test]
fn lih_balanced_refine_reaches_exhaustive_optimum() {
    for name in ["lih_1.547", "lih_2.4"] {
        let mi = mi_fixture(name);
        let best = exhaustive_partition(&mi, 2, Some(&[5, 5])).unwrap();
        let v = intercluster_mi(&mi, &best).unwrap();
        let r = partition(&mi, PartitionMethod::Refine, 2, Some(&[5, 5]), QuboSolver::Exhaustive).unwrap();
        assert!(intercluster_mi(&mi, &r).unwrap() <= v * 1.05, "{name}");
        let spin = Clustering::spin_blocks(10).unwrap();
        assert!(v <= intercluster_mi(&mi, &spin).unwrap() + 1e-15);
    }
}
