//! Posterior marginals on diagrams whose evidence has been propagated.
//!
//! On a singly-connected diagram the marginal of a node follows from its
//! conditional table and its parents' marginals: parents of a node in a
//! polytree share no ancestor, so their joint is the product of their
//! marginals.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{Map, Number, Value};

use crate::model::{BeliefDiagram, ModelError, NodeId, NodeStatus, TopologyClass};
use crate::oracle::{self, OracleError, DEFAULT_JOINT_CAP};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MarginalsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("diagram is not singly connected")]
    NotSinglyConnected,
    #[error("evidence at node {0} has not been propagated")]
    EvidenceNotPropagated(NodeId),
    #[error("node {0} is not an unobserved node of the diagram")]
    UnknownTarget(NodeId),
    #[error("joint state space of {size} configurations exceeds the cap of {cap}")]
    StateSpaceTooLarge { size: u128, cap: usize },
    #[error("evidence has probability zero")]
    ImpossibleEvidence,
}

impl From<OracleError> for MarginalsError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::StateSpaceTooLarge { size, cap } => {
                MarginalsError::StateSpaceTooLarge { size, cap }
            }
            OracleError::UnknownNode(n) => MarginalsError::UnknownTarget(n),
            OracleError::ImpossibleEvidence | OracleError::OutcomeOutOfRange { .. } => {
                MarginalsError::ImpossibleEvidence
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Propagation,
    OracleFallback,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Propagation => "propagation",
            Method::OracleFallback => "oracle-fallback",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReportDiagnostics {
    pub reversals: usize,
    pub fill_ins: usize,
    /// Nodes labelled in each sweep, when computed by propagation.
    pub passes: Vec<Vec<NodeId>>,
}

/// Normalized posterior marginals for every node. Evidence nodes carry a
/// unit mass at their observed outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorReport {
    pub marginals: BTreeMap<NodeId, Vec<f64>>,
    pub method: Method,
    pub topology: TopologyClass,
    pub diagnostics: ReportDiagnostics,
}

fn point_mass(card: usize, outcome: usize) -> Vec<f64> {
    let mut v = vec![0.0; card];
    v[outcome] = 1.0;
    v
}

fn normalize(v: &mut [f64]) {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        for x in v.iter_mut() {
            *x /= total;
        }
    }
}

/// Formats a probability with six decimals (ties to even), never printing
/// a negative zero.
pub fn format_probability(p: f64) -> String {
    let s = format!("{:.6}", p);
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

impl PosteriorReport {
    pub fn marginal(&self, id: NodeId) -> Option<&[f64]> {
        self.marginals.get(&id).map(Vec::as_slice)
    }

    /// `node<TAB>outcome<TAB>probability` lines in node order.
    pub fn to_tsv(&self, d: &BeliefDiagram) -> String {
        let mut out = String::new();
        for (&id, probs) in &self.marginals {
            let Ok(node) = d.node(id) else { continue };
            for (label, p) in node.outcomes.iter().zip(probs) {
                out.push_str(&format!(
                    "{}\t{}\t{}\n",
                    node.name,
                    label,
                    format_probability(*p)
                ));
            }
        }
        out
    }

    /// `{node: {outcome: p}}` in node order, full precision.
    pub fn to_json_value(&self, d: &BeliefDiagram) -> Value {
        let mut root = Map::new();
        for (&id, probs) in &self.marginals {
            let Ok(node) = d.node(id) else { continue };
            let mut inner = Map::new();
            for (label, p) in node.outcomes.iter().zip(probs) {
                let num = Number::from_f64(*p).unwrap_or_else(|| Number::from(0));
                inner.insert(label.clone(), Value::Number(num));
            }
            root.insert(node.name.clone(), Value::Object(inner));
        }
        Value::Object(root)
    }

    pub fn to_json(&self, d: &BeliefDiagram) -> String {
        serde_json::to_string_pretty(&self.to_json_value(d)).unwrap_or_default()
    }

    /// Largest absolute difference between two reports' marginals over the
    /// nodes both contain.
    pub fn max_abs_diff(&self, other: &BTreeMap<NodeId, Vec<f64>>) -> f64 {
        let mut worst: f64 = 0.0;
        for (id, a) in &self.marginals {
            match other.get(id) {
                Some(b) if a.len() == b.len() => {
                    for (x, y) in a.iter().zip(b) {
                        worst = worst.max((x - y).abs());
                    }
                }
                _ => return f64::INFINITY,
            }
        }
        worst
    }
}

/// The part of a diagram relevant to a set of target nodes: the targets and
/// their indirect predecessors.
#[derive(Clone, Debug)]
pub struct PrunedView<'a> {
    diagram: &'a BeliefDiagram,
    keep: BTreeSet<NodeId>,
}

impl<'a> PrunedView<'a> {
    pub fn nodes(&self) -> &BTreeSet<NodeId> {
        &self.keep
    }

    pub fn diagram(&self) -> &'a BeliefDiagram {
        self.diagram
    }

    /// Probability propagation restricted to the retained nodes.
    pub fn propagate_probabilities(&self) -> Result<PosteriorReport, MarginalsError> {
        sweep(self.diagram, &self.keep)
    }
}

/// Drops every node that is not a target or an indirect predecessor of one.
pub fn prune_barren<'a>(
    d: &'a BeliefDiagram,
    targets: &BTreeSet<NodeId>,
) -> Result<PrunedView<'a>, MarginalsError> {
    let mut keep = BTreeSet::new();
    for &t in targets {
        match d.node(t) {
            Ok(n) if n.status.is_unobserved() => {}
            _ => return Err(MarginalsError::UnknownTarget(t)),
        }
        keep.insert(t);
        keep.extend(d.ancestors(t));
    }
    Ok(PrunedView { diagram: d, keep })
}

fn check_propagated(d: &BeliefDiagram) -> Result<(), MarginalsError> {
    for n in d.nodes() {
        match n.status {
            NodeStatus::Observed {
                absorbed: false, ..
            } => return Err(MarginalsError::EvidenceNotPropagated(n.id)),
            NodeStatus::Observed { absorbed: true, .. } if !n.parents.is_empty() => {
                return Err(MarginalsError::EvidenceNotPropagated(n.id))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Marginals of every node by repeated sweeps in node order: first the
/// parentless nodes, then in each pass every node whose parents were all
/// labelled in earlier passes.
pub fn propagate_probabilities(d: &BeliefDiagram) -> Result<PosteriorReport, MarginalsError> {
    let all: BTreeSet<NodeId> = d.ids().collect();
    sweep(d, &all)
}

fn sweep(d: &BeliefDiagram, subset: &BTreeSet<NodeId>) -> Result<PosteriorReport, MarginalsError> {
    check_propagated(d)?;
    let topology = d.classify_topology_within(|id| subset.contains(&id));
    if !topology.is_singly_connected() {
        return Err(MarginalsError::NotSinglyConnected);
    }
    let mut marginals: BTreeMap<NodeId, Vec<f64>> = BTreeMap::new();
    let mut passes = Vec::new();
    let mut pending: Vec<NodeId> = Vec::new();
    for &id in subset {
        let node = d.node(id)?;
        if let NodeStatus::Observed { outcome, .. } = node.status {
            marginals.insert(id, point_mass(node.card(), outcome));
        } else {
            pending.push(id);
        }
    }
    while !pending.is_empty() {
        let ready: Vec<NodeId> = pending
            .iter()
            .copied()
            .filter(|&id| d.parents(id).iter().all(|p| marginals.contains_key(p)))
            .collect();
        if ready.is_empty() {
            // A parent outside the subset or a cycle; the subset is not closed.
            return Err(MarginalsError::UnknownTarget(pending[0]));
        }
        for &id in &ready {
            let b = node_marginal(d, id, &marginals)?;
            marginals.insert(id, b);
        }
        pending.retain(|id| !ready.contains(id));
        passes.push(ready);
    }
    Ok(PosteriorReport {
        marginals,
        method: Method::Propagation,
        topology,
        diagnostics: ReportDiagnostics {
            passes,
            ..Default::default()
        },
    })
}

/// B_j(x) = sum over parent configurations c of P(x | c) * prod_p B_p(c_p).
fn node_marginal(
    d: &BeliefDiagram,
    id: NodeId,
    known: &BTreeMap<NodeId, Vec<f64>>,
) -> Result<Vec<f64>, MarginalsError> {
    let node = d.node(id)?;
    let table = &node.table;
    let card = node.card();
    let parent_axes = &table.axes()[1..];
    let mut b = vec![0.0; card];
    let mut config = vec![0usize; parent_axes.len()];
    let mut rest = 0;
    loop {
        let weight: f64 = parent_axes
            .iter()
            .zip(&config)
            .map(|(axis, &c)| known[&axis.node][c])
            .product();
        if weight > 0.0 {
            let conditional = table.conditional_slice(rest);
            for (acc, p) in b.iter_mut().zip(conditional) {
                *acc += p * weight;
            }
        }
        rest += 1;
        if !crate::model::next_config(&mut config, parent_axes) {
            break;
        }
    }
    normalize(&mut b);
    Ok(b)
}

/// Posterior marginals of a propagated diagram: by probability propagation
/// when it is singly connected, otherwise by enumeration if allowed.
pub fn posterior_marginals(
    d: &BeliefDiagram,
    allow_fallback: bool,
) -> Result<PosteriorReport, MarginalsError> {
    posterior_marginals_capped(d, allow_fallback, DEFAULT_JOINT_CAP)
}

pub fn posterior_marginals_capped(
    d: &BeliefDiagram,
    allow_fallback: bool,
    cap: usize,
) -> Result<PosteriorReport, MarginalsError> {
    check_propagated(d)?;
    let topology = d.classify_topology();
    if topology.is_singly_connected() {
        return propagate_probabilities(d);
    }
    if !allow_fallback {
        return Err(MarginalsError::NotSinglyConnected);
    }
    let marginals = oracle::posterior_marginals(d, &[], cap)?;
    Ok(PosteriorReport {
        marginals,
        method: Method::OracleFallback,
        topology,
        diagnostics: ReportDiagnostics::default(),
    })
}
