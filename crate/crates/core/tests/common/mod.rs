#![allow(dead_code)]

use std::collections::BTreeSet;

use beliefdiag::generate::{generate, random_evidence, GeneratorConfig, TopologyRequest};
use beliefdiag::model::{BeliefDiagram, NodeId};
use beliefdiag::netio::load_network;
use beliefdiag::oracle::{enumerate_joint, DEFAULT_JOINT_CAP};
use beliefdiag::transform::EvidenceAssertion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> String {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn fixture_path(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

/// Loads a fixture, returning the diagram and its evidence block.
pub fn load_fixture(name: &str) -> (BeliefDiagram, Vec<EvidenceAssertion>) {
    let loaded = load_network(&fixture(name)).unwrap();
    (loaded.diagram, loaded.evidence)
}

pub fn ids(d: &BeliefDiagram, names: &[&str]) -> Vec<NodeId> {
    names.iter().map(|n| d.id_of(n).unwrap()).collect()
}

pub fn arcs(d: &BeliefDiagram, pairs: &[(&str, &str)]) -> BTreeSet<(NodeId, NodeId)> {
    pairs
        .iter()
        .map(|(a, b)| (d.id_of(a).unwrap(), d.id_of(b).unwrap()))
        .collect()
}

/// Binary nodes named "1".."n" with random positive tables over the given
/// arcs (parents listed in arc order).
pub fn binary_diagram(n: usize, arcs: &[(usize, usize)], seed: u64) -> BeliefDiagram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = BeliefDiagram::new();
    for k in 1..=n {
        d.add_node(k.to_string(), ["a", "b"]).unwrap();
    }
    for k in 1..=n {
        let parents: Vec<NodeId> = arcs
            .iter()
            .filter(|&&(_, c)| c == k)
            .map(|&(p, _)| NodeId(p - 1))
            .collect();
        let configs = 1 << parents.len();
        let mut entries = vec![0.0; 2 * configs];
        for c in 0..configs {
            let p: f64 = rng.random_range(0.05..0.95);
            entries[c] = p;
            entries[configs + c] = 1.0 - p;
        }
        d.set_cpt(NodeId(k - 1), &parents, entries).unwrap();
    }
    d
}

pub fn chain3() -> BeliefDiagram {
    binary_diagram(3, &[(1, 2), (2, 3)], 11)
}

pub fn small_tree() -> BeliefDiagram {
    binary_diagram(5, &[(1, 2), (1, 3), (2, 4), (4, 5)], 13)
}

pub fn two_root_polytree() -> BeliefDiagram {
    binary_diagram(6, &[(1, 3), (2, 4), (3, 5), (4, 5), (5, 6)], 17)
}

pub fn ten_node_polytree() -> BeliefDiagram {
    binary_diagram(
        10,
        &[
            (1, 3),
            (2, 3),
            (2, 4),
            (5, 10),
            (3, 6),
            (3, 8),
            (4, 7),
            (10, 7),
            (10, 9),
        ],
        19,
    )
}

/// A seeded instance for the randomized checks: at most 8 nodes with at
/// most 3 outcomes, topology cycling through forest, polytree and DAG, and
/// 1 to 3 assertions.
pub fn random_instance(seed: u64) -> (BeliefDiagram, Vec<EvidenceAssertion>) {
    let topology = match seed % 3 {
        0 => TopologyRequest::Forest,
        1 => TopologyRequest::Polytree,
        _ => TopologyRequest::Dag,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let nodes = rng.random_range(2..=8);
    let mut cfg = GeneratorConfig::new(seed, topology, nodes);
    cfg.max_outcomes = 3;
    cfg.max_parents = if topology == TopologyRequest::Forest {
        1
    } else {
        3
    };
    let d = generate(&cfg).unwrap();
    let count = rng.random_range(1..=3);
    let ev = random_evidence(&d, &mut rng, count);
    (d, ev)
}

pub fn random_forest(seed: u64, nodes: usize) -> BeliefDiagram {
    generate(&GeneratorConfig::new(seed, TopologyRequest::Forest, nodes)).unwrap()
}

/// L∞ distance between the normalized product of `current`'s tables and
/// the posterior joint of `original` given `evidence`, both over the nodes
/// `current` still treats as variables.
pub fn joint_gap(
    original: &BeliefDiagram,
    evidence: &[EvidenceAssertion],
    current: &BeliefDiagram,
) -> f64 {
    let now = enumerate_joint(current, DEFAULT_JOINT_CAP).unwrap();
    let mut now_entries: Vec<f64> = now.entries().to_vec();
    let total: f64 = now.total();
    for v in &mut now_entries {
        *v /= total;
    }
    let reference = enumerate_joint(original, DEFAULT_JOINT_CAP)
        .unwrap()
        .condition(evidence)
        .unwrap()
        .marginalize_onto(now.vars())
        .unwrap();
    now_entries
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

pub fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
