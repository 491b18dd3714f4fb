//! Seeded random diagrams for testing and the `generate` command.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{BeliefDiagram, NodeId, DEFAULT_MAX_OUTCOMES};
use crate::transform::EvidenceAssertion;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TopologyRequest {
    Forest,
    Polytree,
    Dag,
}

impl std::str::FromStr for TopologyRequest {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "forest" => Ok(Self::Forest),
            "polytree" => Ok(Self::Polytree),
            "dag" => Ok(Self::Dag),
            other => Err(format!(
                "unknown topology `{other}` (forest, polytree, dag)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub topology: TopologyRequest,
    pub nodes: usize,
    pub max_outcomes: usize,
    pub max_parents: usize,
}

impl GeneratorConfig {
    pub fn new(seed: u64, topology: TopologyRequest, nodes: usize) -> Self {
        GeneratorConfig {
            seed,
            topology,
            nodes,
            max_outcomes: 3,
            max_parents: if topology == TopologyRequest::Forest {
                1
            } else {
                2
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerateError {
    #[error("a forest cannot have nodes with {0} parents")]
    ForestParents(usize),
    #[error("max outcomes must be between 1 and {max}, got {found}")]
    Outcomes { found: usize, max: usize },
}

fn find(uf: &mut [usize], mut x: usize) -> usize {
    while uf[x] != x {
        uf[x] = uf[uf[x]];
        x = uf[x];
    }
    x
}

/// Builds a random diagram. Every node's parents come earlier in id order,
/// so ids are already an ordered list. Rows are normalized and every entry
/// is at least 0.05 before normalization, so any evidence is possible.
pub fn generate(cfg: &GeneratorConfig) -> Result<BeliefDiagram, GenerateError> {
    if cfg.topology == TopologyRequest::Forest && cfg.max_parents > 1 {
        return Err(GenerateError::ForestParents(cfg.max_parents));
    }
    if cfg.max_outcomes == 0 || cfg.max_outcomes > DEFAULT_MAX_OUTCOMES {
        return Err(GenerateError::Outcomes {
            found: cfg.max_outcomes,
            max: DEFAULT_MAX_OUTCOMES,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut d = BeliefDiagram::new();
    let mut uf: Vec<usize> = (0..cfg.nodes).collect();
    let min_outcomes = cfg.max_outcomes.min(2);
    for i in 0..cfg.nodes {
        let card = rng.random_range(min_outcomes..=cfg.max_outcomes);
        let outcomes: Vec<String> = (0..card).map(|k| format!("s{k}")).collect();
        let id = d
            .add_node(format!("n{i}"), outcomes)
            .expect("generated names are unique");
        let want = if i == 0 {
            0
        } else {
            rng.random_range(0..=cfg.max_parents.min(i))
        };
        let mut parents: Vec<usize> = Vec::new();
        if want > 0 {
            let picks = sample(&mut rng, i, i).into_vec();
            for p in picks {
                if parents.len() == want {
                    break;
                }
                if cfg.topology == TopologyRequest::Polytree {
                    let (rp, ri) = (find(&mut uf, p), find(&mut uf, i));
                    if rp == ri {
                        continue;
                    }
                    uf[rp] = ri;
                }
                parents.push(p);
            }
        }
        let parent_ids: Vec<NodeId> = parents.iter().map(|&p| NodeId(p)).collect();
        let configs: usize = parent_ids
            .iter()
            .map(|&p| d.node(p).map(|n| n.card()).unwrap_or(1))
            .product();
        let mut entries = vec![0.0; card * configs];
        for c in 0..configs {
            let row: Vec<f64> = (0..card).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = row.iter().sum();
            for (x, v) in row.into_iter().enumerate() {
                entries[x * configs + c] = v / total;
            }
        }
        d.set_cpt(id, &parent_ids, entries)
            .expect("generated table matches its axes");
    }
    Ok(d)
}

/// `count` assertions on distinct nodes (fewer if the diagram is smaller),
/// with uniformly chosen outcomes.
pub fn random_evidence(
    d: &BeliefDiagram,
    rng: &mut impl Rng,
    count: usize,
) -> Vec<EvidenceAssertion> {
    let count = count.min(d.len());
    sample(rng, d.len(), count)
        .into_iter()
        .map(|i| {
            let card = d.node(NodeId(i)).map(|n| n.card()).unwrap_or(1);
            EvidenceAssertion::new(NodeId(i), rng.random_range(0..card))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TopologyClass;

    #[test]
    fn deterministic() {
        let cfg = GeneratorConfig::new(1, TopologyRequest::Forest, 5);
        let a = crate::netio::write_network(&generate(&cfg).unwrap());
        let b = crate::netio::write_network(&generate(&cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn requested_classes() {
        for seed in 0..50 {
            let f = generate(&GeneratorConfig::new(seed, TopologyRequest::Forest, 8)).unwrap();
            assert_eq!(f.classify_topology(), TopologyClass::Forest);
            assert!(f.validate().is_empty());
            let mut cfg = GeneratorConfig::new(seed, TopologyRequest::Polytree, 8);
            cfg.max_parents = 3;
            let p = generate(&cfg).unwrap();
            assert!(p.classify_topology().is_singly_connected());
        }
    }

    #[test]
    fn contradictions() {
        let mut cfg = GeneratorConfig::new(0, TopologyRequest::Forest, 4);
        cfg.max_parents = 2;
        assert_eq!(generate(&cfg).unwrap_err(), GenerateError::ForestParents(2));
        cfg.max_parents = 1;
        cfg.max_outcomes = 0;
        assert!(generate(&cfg).is_err());
    }
}
