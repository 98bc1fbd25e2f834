//! Qubit clustering that keeps mutual information inside clusters.

pub mod qubo;

use serde::{Deserialize, Serialize};

use crate::entanglement::MiMatrix;
use crate::error::{Error, Result};
pub use qubo::{
    build_mi_selection_qubo, build_modularity_qubo, solve_qubo, AnnealSchedule, QuboProblem,
    QuboSolver,
};

pub const MAX_EXHAUSTIVE_BIPARTITION: usize = 16;
pub const MAX_EXHAUSTIVE_MULTIWAY: usize = 12;

const OBJ_TOL: f64 = 1e-12;

/// Cluster id per qubit. Serializes as the bare id list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Clustering {
    assignment: Vec<usize>,
    m: usize,
    capacities: Option<Vec<usize>>,
}

impl TryFrom<Vec<usize>> for Clustering {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Clustering::from_assignment(v)
    }
}

impl From<Clustering> for Vec<usize> {
    fn from(c: Clustering) -> Self {
        c.assignment
    }
}

impl Clustering {
    pub fn new(assignment: Vec<usize>, m: usize, capacities: Option<Vec<usize>>) -> Result<Self> {
        if assignment.is_empty() || m == 0 {
            return Err(Error::invalid("clustering needs at least one qubit and one cluster"));
        }
        if let Some(c) = &capacities {
            crate::error::check_dim(m, c.len())?;
        }
        let c = Self {
            assignment,
            m,
            capacities,
        };
        c.check()?;
        Ok(c)
    }

    /// Cluster count taken from the largest id.
    pub fn from_assignment(assignment: Vec<usize>) -> Result<Self> {
        let m = assignment.iter().max().map_or(0, |&x| x + 1);
        Self::new(assignment, m, None)
    }

    /// One cluster per half of the register (α block | β block).
    pub fn spin_blocks(n_qubits: usize) -> Result<Self> {
        if n_qubits < 2 || n_qubits % 2 != 0 {
            return Err(Error::invalid("spin blocks need an even qubit count ≥ 2"));
        }
        let half = n_qubits / 2;
        Self::from_assignment((0..n_qubits).map(|q| usize::from(q >= half)).collect())
    }

    /// Everything in cluster 0.
    pub fn single(n_qubits: usize) -> Result<Self> {
        Self::from_assignment(vec![0; n_qubits])
    }

    fn check(&self) -> Result<()> {
        let sizes = sizes(&self.assignment, self.m)?;
        if let Some(k) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::Infeasible(format!("cluster {k} is empty")));
        }
        if let Some(caps) = &self.capacities {
            for (k, (&s, &c)) in sizes.iter().zip(caps).enumerate() {
                if s > c {
                    return Err(Error::Infeasible(format!(
                        "cluster {k} holds {s} qubits, capacity {c}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.assignment.len()
    }

    pub fn n_clusters(&self) -> usize {
        self.m
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn capacities(&self) -> Option<&[usize]> {
        self.capacities.as_deref()
    }

    #[inline]
    pub fn cluster_of(&self, q: usize) -> usize {
        self.assignment[q]
    }

    /// Ascending member lists, indexed by cluster id.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.m];
        for (q, &c) in self.assignment.iter().enumerate() {
            out[c].push(q);
        }
        out
    }

    /// Qubit bitmask per cluster.
    pub fn masks(&self) -> Vec<u64> {
        let mut out = vec![0u64; self.m];
        for (q, &c) in self.assignment.iter().enumerate() {
            out[c] |= 1 << q;
        }
        out
    }

    /// Relabels clusters by first appearance. Kept as-is when capacities
    /// differ between clusters, since relabeling would move them.
    pub fn canonical(&self) -> Self {
        if let Some(caps) = &self.capacities {
            if caps.iter().any(|&c| c != caps[0]) {
                return self.clone();
            }
        }
        let mut map = vec![usize::MAX; self.m];
        let mut next = 0;
        let assignment = self
            .assignment
            .iter()
            .map(|&c| {
                if map[c] == usize::MAX {
                    map[c] = next;
                    next += 1;
                }
                map[c]
            })
            .collect();
        Self {
            assignment,
            m: self.m,
            capacities: self.capacities.clone(),
        }
    }

    pub fn with_capacities(self, capacities: Option<Vec<usize>>) -> Result<Self> {
        Self::new(self.assignment, self.m, capacities)
    }

    /// Same partition of the qubits, ignoring labels.
    pub fn same_partition(&self, other: &Clustering) -> bool {
        let mut a = self.clusters();
        let mut b = other.clusters();
        a.sort();
        b.sort();
        a == b
    }
}

fn sizes(assignment: &[usize], m: usize) -> Result<Vec<usize>> {
    let mut s = vec![0usize; m];
    for (q, &c) in assignment.iter().enumerate() {
        if c >= m {
            return Err(Error::invalid(format!("qubit {q} has cluster id {c} ≥ {m}")));
        }
        s[c] += 1;
    }
    Ok(s)
}

/// `Σ_{i<j, c(i)≠c(j)} I_ij`.
pub fn intercluster_mi(mi: &MiMatrix, c: &Clustering) -> Result<f64> {
    crate::error::check_dim(mi.n(), c.n_qubits())?;
    Ok(objective(mi, c.assignment()))
}

fn objective(mi: &MiMatrix, a: &[usize]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            if a[i] != a[j] {
                s += mi.get(i, j);
            }
        }
    }
    s
}

/// Global minimizer of the inter-cluster MI by enumeration. Among equal
/// objectives the lexicographically smallest assignment wins.
pub fn exhaustive_partition(mi: &MiMatrix, m: usize, capacities: Option<&[usize]>) -> Result<Clustering> {
    let n = mi.n();
    let limit = if m == 2 {
        MAX_EXHAUSTIVE_BIPARTITION
    } else {
        MAX_EXHAUSTIVE_MULTIWAY
    };
    if n > limit {
        return Err(Error::SizeGuard {
            what: "exhaustive partition qubits",
            size: n,
            limit,
        });
    }
    if m == 0 || m > n {
        return Err(Error::Infeasible(format!("{m} clusters for {n} qubits")));
    }
    if let Some(c) = capacities {
        crate::error::check_dim(m, c.len())?;
    }
    let symmetric = capacities.map_or(true, |c| c.iter().all(|&x| x == c[0]));
    let mut a = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        // with interchangeable labels only first-appearance order is visited
        let canonical_ok = !symmetric || {
            let mut next = 0;
            a.iter().all(|&c| {
                if c > next {
                    false
                } else {
                    if c == next {
                        next += 1;
                    }
                    true
                }
            })
        };
        if canonical_ok {
            if let Ok(s) = sizes(&a, m) {
                let feasible = s.iter().all(|&x| x > 0)
                    && capacities.map_or(true, |c| s.iter().zip(c).all(|(x, c)| x <= c));
                if feasible {
                    let e = objective(mi, &a);
                    if best.as_ref().map_or(true, |(b, _)| e < b - OBJ_TOL * b.abs().max(1.0)) {
                        best = Some((e, a.clone()));
                    }
                }
            }
        }
        // lexicographic increment, last qubit fastest
        let mut k = n;
        loop {
            if k == 0 {
                let (_, a) = best.ok_or_else(|| {
                    Error::Infeasible("no assignment satisfies the capacities".into())
                })?;
                return Clustering::new(a, m, capacities.map(<[usize]>::to_vec));
            }
            k -= 1;
            a[k] += 1;
            if a[k] < m {
                break;
            }
            a[k] = 0;
        }
    }
}

/// Best-improvement local search over single moves then pair swaps until no
/// move lowers the objective. Capacities come from the seed.
pub fn refine_partition(mi: &MiMatrix, seed: &Clustering) -> Result<Clustering> {
    crate::error::check_dim(mi.n(), seed.n_qubits())?;
    let n = seed.n_qubits();
    let m = seed.n_clusters();
    let caps = seed.capacities().map(<[usize]>::to_vec);
    let mut a = seed.assignment().to_vec();
    let mut size = sizes(&a, m)?;
    let cap = |c: usize| caps.as_ref().map_or(usize::MAX, |v| v[c]);
    // link[i][c] = Σ_{j in c, j≠i} I_ij
    let mut link = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                link[i][a[j]] += mi.get(i, j);
            }
        }
    }
    loop {
        let mut best: Option<(f64, Move)> = None;
        let mut consider = |delta: f64, mv: Move| {
            if delta < -OBJ_TOL && best.as_ref().map_or(true, |(d, _)| delta < *d - OBJ_TOL) {
                best = Some((delta, mv));
            }
        };
        for i in 0..n {
            let from = a[i];
            if size[from] == 1 {
                continue;
            }
            for to in 0..m {
                if to != from && size[to] < cap(to) {
                    consider(link[i][from] - link[i][to], Move::Shift(i, to));
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (ci, cj) = (a[i], a[j]);
                if ci == cj {
                    continue;
                }
                let w = mi.get(i, j);
                let delta = (link[i][ci] - link[i][cj] + w) + (link[j][cj] - link[j][ci] + w);
                consider(delta, Move::Swap(i, j));
            }
        }
        let Some((_, mv)) = best else { break };
        let mut shift = |q: usize, to: usize, a: &mut Vec<usize>| {
            let from = a[q];
            for k in 0..n {
                if k != q {
                    link[k][from] -= mi.get(k, q);
                    link[k][to] += mi.get(k, q);
                }
            }
            size[from] -= 1;
            size[to] += 1;
            a[q] = to;
        };
        match mv {
            Move::Shift(q, to) => shift(q, to, &mut a),
            Move::Swap(i, j) => {
                let (ci, cj) = (a[i], a[j]);
                shift(i, cj, &mut a);
                shift(j, ci, &mut a);
            }
        }
    }
    Ok(Clustering::new(a, m, caps)?.canonical())
}

#[derive(Clone, Copy, Debug)]
enum Move {
    Shift(usize, usize),
    Swap(usize, usize),
}

/// Contiguous blocks of near-equal size, clipped to capacities.
pub fn contiguous_seed(n: usize, m: usize, capacities: Option<&[usize]>) -> Result<Clustering> {
    if m == 0 || m > n {
        return Err(Error::Infeasible(format!("{m} clusters for {n} qubits")));
    }
    let mut target: Vec<usize> = (0..m).map(|c| n / m + usize::from(c < n % m)).collect();
    if let Some(caps) = capacities {
        crate::error::check_dim(m, caps.len())?;
        if caps.iter().sum::<usize>() < n || caps.contains(&0) {
            return Err(Error::Infeasible("capacities cannot hold every qubit".into()));
        }
        // move overflow into clusters with room
        for c in 0..m {
            while target[c] > caps[c] {
                target[c] -= 1;
                let k = (0..m).find(|&k| target[k] < caps[k]).expect("total capacity suffices");
                target[k] += 1;
            }
        }
    }
    let assignment = target
        .iter()
        .enumerate()
        .flat_map(|(c, &s)| std::iter::repeat(c).take(s))
        .collect();
    Clustering::new(assignment, m, capacities.map(<[usize]>::to_vec))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum PartitionMethod {
    Exhaustive,
    Refine,
    MiSelection { f: f64, lambda: f64 },
    Modularity,
}

impl PartitionMethod {
    pub fn name(&self) -> &'static str {
        match self {
            PartitionMethod::Exhaustive => "exhaustive",
            PartitionMethod::Refine => "refine",
            PartitionMethod::MiSelection { .. } => "mi_selection",
            PartitionMethod::Modularity => "modularity",
        }
    }
}

/// Clusters the qubits with `method`. QUBO methods split recursively when
/// `m > 2`, always dividing the largest cluster.
pub fn partition(
    mi: &MiMatrix,
    method: PartitionMethod,
    m: usize,
    capacities: Option<&[usize]>,
    solver: QuboSolver,
) -> Result<Clustering> {
    let n = mi.n();
    if m == 0 || m > n {
        return Err(Error::Infeasible(format!("{m} clusters for {n} qubits")));
    }
    let caps = capacities.map(<[usize]>::to_vec);
    match method {
        PartitionMethod::Exhaustive => exhaustive_partition(mi, m, capacities),
        PartitionMethod::Refine => refine_partition(mi, &contiguous_seed(n, m, capacities)?),
        PartitionMethod::MiSelection { .. } | PartitionMethod::Modularity => {
            let mut a = vec![0usize; n];
            for next in 1..m {
                let members = largest_cluster(&a, next);
                if members.len() < 2 {
                    return Err(Error::Infeasible("cannot split a single qubit".into()));
                }
                let sub = sub_matrix(mi, &members)?;
                let x = qubo_bipartition(&sub, method, solver)?;
                for (k, &q) in members.iter().enumerate() {
                    if x >> k & 1 == 1 {
                        a[q] = next;
                    }
                }
            }
            Clustering::new(a, m, caps).map(|c| c.canonical())
        }
    }
}

fn largest_cluster(a: &[usize], m: usize) -> Vec<usize> {
    let s = sizes(a, m).expect("ids below m");
    let big = (0..m).max_by_key(|&c| (s[c], std::cmp::Reverse(c))).expect("m ≥ 1");
    (0..a.len()).filter(|&q| a[q] == big).collect()
}

fn sub_matrix(mi: &MiMatrix, members: &[usize]) -> Result<MiMatrix> {
    MiMatrix::from_rows(
        members
            .iter()
            .map(|&i| members.iter().map(|&j| mi.get(i, j)).collect())
            .collect(),
    )
}

fn qubo_bipartition(mi: &MiMatrix, method: PartitionMethod, solver: QuboSolver) -> Result<u64> {
    let n = mi.n();
    let q = match method {
        PartitionMethod::MiSelection { f, lambda } => build_mi_selection_qubo(mi, f, lambda, n)?,
        PartitionMethod::Modularity => build_modularity_qubo(mi)?,
        _ => unreachable!("QUBO method"),
    };
    let x = solve_qubo(&q, solver)?;
    if x == 0 || x == crate::pauli::low_mask(n) {
        return Err(Error::Infeasible(format!(
            "{} QUBO selected {} of {n} qubits",
            method.name(),
            x.count_ones()
        )));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::Rng;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn bell_pairs() -> MiMatrix {
        MiMatrix::from_rows(vec![
            vec![0.0, LN_2, 0.0, 0.0],
            vec![LN_2, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, LN_2],
            vec![0.0, 0.0, LN_2, 0.0],
        ])
        .unwrap()
    }

    fn random_mi(rng: &mut Rng, n: usize) -> MiMatrix {
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = rng.uniform().abs();
                rows[i][j] = v;
                rows[j][i] = v;
            }
        }
        MiMatrix::from_rows(rows).unwrap()
    }

    fn all_assignments(n: usize, m: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for code in 0..m.pow(n as u32) {
            let mut a = vec![0; n];
            let mut c = code;
            for k in (0..n).rev() {
                a[k] = c % m;
                c /= m;
            }
            out.push(a);
        }
        out
    }

    #[test]
    fn clustering_validation() {
        assert!(Clustering::from_assignment(vec![0, 2, 2]).is_err());
        assert!(Clustering::new(vec![0, 0, 1], 2, Some(vec![1, 2])).is_err());
        let c = Clustering::new(vec![1, 1, 0], 2, None).unwrap();
        assert_eq!(c.canonical().assignment(), &[0, 0, 1]);
        assert_eq!(c.clusters(), vec![vec![2], vec![0, 1]]);
        assert_eq!(Clustering::spin_blocks(4).unwrap().assignment(), &[0, 0, 1, 1]);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, "[1,1,0]");
        let back: Clustering = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<Clustering>("[0,2]").is_err());
    }

    #[test]
    fn intercluster_examples() {
        let ones = MiMatrix::from_rows(
            (0..4)
                .map(|i| (0..4).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
                .collect(),
        )
        .unwrap();
        let split = Clustering::from_assignment(vec![0, 0, 1, 1]).unwrap();
        assert_eq!(intercluster_mi(&ones, &split).unwrap(), 4.0);
        assert_eq!(intercluster_mi(&ones, &Clustering::single(4).unwrap()).unwrap(), 0.0);
        assert_eq!(intercluster_mi(&bell_pairs(), &split).unwrap(), 0.0);
        assert!(intercluster_mi(&ones, &Clustering::single(3).unwrap()).is_err());
    }

    #[test]
    fn exhaustive_examples() {
        let c = exhaustive_partition(&bell_pairs(), 2, Some(&[2, 2])).unwrap();
        assert_eq!(c.assignment(), &[0, 0, 1, 1]);
        let z = exhaustive_partition(&MiMatrix::zeros(4), 2, Some(&[2, 2])).unwrap();
        assert_eq!(z.assignment(), &[0, 0, 1, 1]);
        let z = exhaustive_partition(&MiMatrix::zeros(4), 2, None).unwrap();
        assert_eq!(z.assignment(), &[0, 0, 0, 1]);
        assert!(exhaustive_partition(&MiMatrix::zeros(17), 2, None).is_err());
        assert!(exhaustive_partition(&MiMatrix::zeros(3), 2, Some(&[1, 1])).is_err());
    }

    #[test]
    fn exhaustive_beats_every_assignment() {
        let mut rng = Rng::new(8);
        for (n, m) in [(8, 2), (6, 3)] {
            let mi = random_mi(&mut rng, n);
            let caps = vec![n.div_ceil(m); m];
            let best = exhaustive_partition(&mi, m, Some(&caps)).unwrap();
            let e = intercluster_mi(&mi, &best).unwrap();
            for a in all_assignments(n, m) {
                if let Ok(c) = Clustering::new(a, m, Some(caps.clone())) {
                    assert!(e <= intercluster_mi(&mi, &c).unwrap() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn asymmetric_capacities() {
        let mut rng = Rng::new(21);
        let mi = random_mi(&mut rng, 6);
        let c = exhaustive_partition(&mi, 2, Some(&[2, 4])).unwrap();
        let s = c.clusters();
        assert!(s[0].len() <= 2 && s[1].len() <= 4);
    }

    #[test]
    fn refine_examples() {
        let mi = bell_pairs();
        let opt = exhaustive_partition(&mi, 2, Some(&[2, 2])).unwrap();
        assert_eq!(refine_partition(&mi, &opt).unwrap(), opt);
        let crossed = Clustering::new(vec![0, 1, 0, 1], 2, Some(vec![2, 2])).unwrap();
        let r = refine_partition(&mi, &crossed).unwrap();
        assert!(r.same_partition(&opt));
        assert!(refine_partition(&MiMatrix::zeros(3), &crossed).is_err());
    }

    #[test]
    fn qubo_methods_on_bell_pairs() {
        let mi = bell_pairs();
        let want = Clustering::from_assignment(vec![0, 0, 1, 1]).unwrap();
        for method in [
            PartitionMethod::Exhaustive,
            PartitionMethod::Refine,
            PartitionMethod::MiSelection { f: 0.5, lambda: 2.0 },
            PartitionMethod::Modularity,
        ] {
            for solver in [QuboSolver::Exhaustive, QuboSolver::Annealing { seed: 0 }] {
                let c = partition(&mi, method, 2, Some(&[2, 2]), solver).unwrap();
                assert!(c.same_partition(&want), "{method:?}: {:?}", c.assignment());
            }
        }
    }

    #[test]
    fn recursive_bipartition_three_blocks() {
        let n = 6;
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j && i / 2 == j / 2 {
                    rows[i][j] = 0.5;
                }
            }
        }
        rows[1][2] = 0.01;
        rows[2][1] = 0.01;
        let mi = MiMatrix::from_rows(rows).unwrap();
        let want = Clustering::from_assignment(vec![0, 0, 1, 1, 2, 2]).unwrap();
        for method in [PartitionMethod::Modularity, PartitionMethod::Exhaustive, PartitionMethod::Refine] {
            let c = partition(&mi, method, 3, Some(&[2, 2, 2]), QuboSolver::Exhaustive).unwrap();
            assert!(c.same_partition(&want), "{method:?}: {:?}", c.assignment());
        }
    }

    #[test]
    fn modularity_never_worse_than_worst_bipartition() {
        let mut rng = Rng::new(31);
        for _ in 0..10 {
            let mi = random_mi(&mut rng, 6);
            let Ok(c) = partition(&mi, PartitionMethod::Modularity, 2, None, QuboSolver::Exhaustive)
            else {
                continue;
            };
            let got = intercluster_mi(&mi, &c).unwrap();
            let worst = all_assignments(6, 2)
                .into_iter()
                .filter_map(|a| Clustering::new(a, 2, None).ok())
                .map(|c| intercluster_mi(&mi, &c).unwrap())
                .fold(0.0, f64::max);
            assert!(got <= worst + 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn relabeling_and_scaling_invariance(seed in 0u64..10_000, scale in 0.01f64..100.0) {
            let mut rng = Rng::new(seed);
            let mi = random_mi(&mut rng, 7);
            let a: Vec<usize> = (0..7).map(|_| rng.below(3)).collect();
            if let Ok(c) = Clustering::new(a.clone(), 3, None) {
                let swapped = Clustering::new(a.iter().map(|&x| (x + 1) % 3).collect(), 3, None).unwrap();
                let e = intercluster_mi(&mi, &c).unwrap();
                prop_assert!((e - intercluster_mi(&mi, &swapped).unwrap()).abs() < 1e-12);
                prop_assert_eq!(c.canonical(), swapped.canonical());
            }
            let base = exhaustive_partition(&mi, 2, Some(&[4, 4])).unwrap();
            let scaled = exhaustive_partition(&mi.scaled(scale), 2, Some(&[4, 4])).unwrap();
            prop_assert_eq!(base, scaled);
        }

        #[test]
        fn refine_is_feasible_and_monotone(seed in 0u64..10_000) {
            let mut rng = Rng::new(seed);
            let mi = random_mi(&mut rng, 8);
            let start = contiguous_seed(8, 2, Some(&[5, 5])).unwrap();
            let out = refine_partition(&mi, &start).unwrap();
            prop_assert!(intercluster_mi(&mi, &out).unwrap() <= intercluster_mi(&mi, &start).unwrap() + 1e-12);
            prop_assert!(out.clusters().iter().all(|c| !c.is_empty() && c.len() <= 5));
            let best = exhaustive_partition(&mi, 2, Some(&[5, 5])).unwrap();
            prop_assert!(intercluster_mi(&mi, &best).unwrap() <= intercluster_mi(&mi, &out).unwrap() + 1e-12);
        }
    }
}
