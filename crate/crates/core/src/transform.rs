//! Evidence absorption, evidence reversal and evidence propagation.
//!
//! Every operation rewrites the diagram in place while keeping the product
//! of all tables proportional to the posterior joint of the unobserved
//! variables. Modified tables are rescaled so their largest entry is 1.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::model::{
    Axis, BeliefDiagram, ModelError, NodeId, NodeStatus, PotentialTable, TableError,
};

/// An observed value for one node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EvidenceAssertion {
    pub node: NodeId,
    pub outcome: usize,
}

impl EvidenceAssertion {
    pub fn new(node: NodeId, outcome: usize) -> Self {
        EvidenceAssertion { node, outcome }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransformError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("node {0} is already observed")]
    AlreadyObserved(NodeId),
    #[error("outcome {outcome} out of range for node {node}")]
    OutcomeOutOfRange { node: NodeId, outcome: usize },
    #[error("node {0} is not an absorbed evidence node")]
    NotAbsorbed(NodeId),
    #[error("no arc from an unobserved node {i} into evidence node {j}")]
    NotAnEvidenceArc { i: NodeId, j: NodeId },
    #[error("another directed path leads from {i} to {j}")]
    PathExists { i: NodeId, j: NodeId },
    #[error("ordering is not an ordered list of the predecessors of {0}")]
    InvalidOrdering(NodeId),
    #[error("evidence has probability zero")]
    ImpossibleEvidence,
}

/// Kind of a scheduler message, as it appears in traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MessageKind {
    /// Likelihood travelling from an evidence node towards its ancestors.
    Likelihood,
    /// Marginal travelling from a node to its children.
    Marginal,
}

impl MessageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MessageKind::Likelihood => "likelihood",
            MessageKind::Marginal => "marginal",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceStep {
    Absorb {
        node: NodeId,
        outcome: usize,
    },
    /// Arc (i, j) removed; the evidence node `j` takes over `inherited` as new
    /// parents (the parents of `i` it did not already have).
    Reverse {
        i: NodeId,
        j: NodeId,
        inherited: Vec<NodeId>,
    },
    /// Fill-in arc into the unobserved node of a reversal.
    ArcAdded(NodeId, NodeId),
    ArcDeleted(NodeId, NodeId),
    Message {
        kind: MessageKind,
        from: NodeId,
        to: NodeId,
    },
}

/// Ordered log of the steps one or more transforms performed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TransformTrace {
    pub steps: Vec<TraceStep>,
    pub reversals: usize,
    pub fill_ins: usize,
}

impl TransformTrace {
    pub fn push(&mut self, step: TraceStep) {
        match step {
            TraceStep::Reverse { .. } => self.reversals += 1,
            TraceStep::ArcAdded(..) => self.fill_ins += 1,
            _ => {}
        }
        self.steps.push(step);
    }

    pub fn extend(&mut self, other: TransformTrace) {
        self.reversals += other.reversals;
        self.fill_ins += other.fill_ins;
        self.steps.extend(other.steps);
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Applies the arc changes of the log to `arcs`.
    pub fn replay_arcs(&self, arcs: &mut BTreeSet<(NodeId, NodeId)>) {
        for step in &self.steps {
            match step {
                TraceStep::Reverse { i, j, inherited } => {
                    arcs.remove(&(*i, *j));
                    for &p in inherited {
                        arcs.insert((p, *j));
                    }
                }
                TraceStep::ArcAdded(a, b) => {
                    arcs.insert((*a, *b));
                }
                TraceStep::ArcDeleted(a, b) => {
                    arcs.remove(&(*a, *b));
                }
                TraceStep::Absorb { .. } | TraceStep::Message { .. } => {}
            }
        }
    }

    /// One line per step, using node names and outcome labels from `d`.
    pub fn render(&self, d: &BeliefDiagram) -> String {
        let mut out = String::new();
        for step in &self.steps {
            out.push_str(&render_step(d, step));
            out.push('\n');
        }
        out
    }
}

pub fn render_step(d: &BeliefDiagram, step: &TraceStep) -> String {
    let name = |id: NodeId| d.name(id).to_string();
    match step {
        TraceStep::Absorb { node, outcome } => {
            let label = d
                .node(*node)
                .ok()
                .and_then(|n| n.outcomes.get(*outcome).cloned())
                .unwrap_or_else(|| outcome.to_string());
            format!("ABSORB node={} outcome={}", name(*node), label)
        }
        TraceStep::Reverse { i, j, inherited } => {
            let mut s = format!("REVERSE i={} j={}", name(*i), name(*j));
            if !inherited.is_empty() {
                let names: Vec<String> = inherited.iter().map(|&p| name(p)).collect();
                let _ = write!(s, " inherits={}", names.join(","));
            }
            s
        }
        TraceStep::ArcAdded(a, b) => format!("ARC+ {}->{}", name(*a), name(*b)),
        TraceStep::ArcDeleted(a, b) => format!("ARC- {}->{}", name(*a), name(*b)),
        TraceStep::Message { kind, from, to } => {
            format!(
                "MSG kind={} from={} to={}",
                kind.as_str(),
                name(*from),
                name(*to)
            )
        }
    }
}

/// Partition of the parents of `i` and evidence node `j` around a reversal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReversalFrame {
    pub i: NodeId,
    pub j: NodeId,
    /// Parents of `i` only.
    pub only_i: Vec<NodeId>,
    /// Parents of `j` only, other than `i`.
    pub only_j: Vec<NodeId>,
    /// Shared parents.
    pub shared: Vec<NodeId>,
}

impl ReversalFrame {
    pub fn new(d: &BeliefDiagram, i: NodeId, j: NodeId) -> Self {
        let pi = d.parents(i);
        let pj = d.parents(j);
        ReversalFrame {
            i,
            j,
            only_i: pi.iter().copied().filter(|p| !pj.contains(p)).collect(),
            only_j: pj
                .iter()
                .copied()
                .filter(|p| *p != i && !pi.contains(p))
                .collect(),
            shared: pi.iter().copied().filter(|p| pj.contains(p)).collect(),
        }
    }

    /// New parent set shared by both nodes.
    pub fn new_parents(&self) -> BTreeSet<NodeId> {
        self.only_i
            .iter()
            .chain(&self.only_j)
            .chain(&self.shared)
            .copied()
            .collect()
    }
}

fn axes_for(d: &BeliefDiagram, ids: &[NodeId]) -> Result<Vec<Axis>, ModelError> {
    ids.iter()
        .map(|&p| Ok(Axis::new(p, d.node(p)?.card())))
        .collect()
}

/// Instantiates `e.node` at `e.outcome`: its table becomes the likelihood of
/// the observation over its parents, and each child's table is sliced at the
/// observed value with the arc to it deleted.
pub fn absorb_evidence(
    d: &mut BeliefDiagram,
    e: EvidenceAssertion,
) -> Result<TransformTrace, TransformError> {
    let j = e.node;
    let node = d.node(j)?;
    if !node.status.is_unobserved() {
        return Err(TransformError::AlreadyObserved(j));
    }
    if e.outcome >= node.card() {
        return Err(TransformError::OutcomeOutOfRange {
            node: j,
            outcome: e.outcome,
        });
    }
    let mut likelihood = node.table.slice(j, e.outcome)?;
    if !likelihood.rescale_max() {
        return Err(TransformError::ImpossibleEvidence);
    }
    let children = d.children(j);
    let mut updates = Vec::with_capacity(children.len());
    for &k in &children {
        let child = d.node(k)?;
        let mut table = child.table.slice(j, e.outcome)?;
        if !table.rescale_max() {
            return Err(TransformError::ImpossibleEvidence);
        }
        let parents: Vec<NodeId> = child.parents.iter().copied().filter(|&p| p != j).collect();
        updates.push((k, parents, table));
    }

    let mut trace = TransformTrace::default();
    trace.push(TraceStep::Absorb {
        node: j,
        outcome: e.outcome,
    });
    let record = d.node_mut(j)?;
    record.table = likelihood;
    record.status = NodeStatus::Observed {
        outcome: e.outcome,
        absorbed: true,
    };
    for (k, parents, table) in updates {
        d.set_node_table(k, parents, table)?;
        trace.push(TraceStep::ArcDeleted(j, k));
    }
    Ok(trace)
}

/// Applies Bayes' theorem to the arc from unobserved `i` into absorbed
/// evidence node `j`, removing the arc. Both nodes end up conditioned on the
/// union of their former parents (minus `i`).
pub fn evidence_reverse(
    d: &mut BeliefDiagram,
    i: NodeId,
    j: NodeId,
) -> Result<TransformTrace, TransformError> {
    let ni = d.node(i)?;
    let nj = d.node(j)?;
    if !nj.status.is_absorbed() {
        return Err(TransformError::NotAbsorbed(j));
    }
    if !ni.status.is_unobserved() || !nj.parents.contains(&i) {
        return Err(TransformError::NotAnEvidenceArc { i, j });
    }
    if d.has_directed_path(i, j, Some((i, j)))? {
        return Err(TransformError::PathExists { i, j });
    }
    let frame = ReversalFrame::new(d, i, j);

    let new_i_parents: Vec<NodeId> = ni.parents.iter().chain(&frame.only_j).copied().collect();
    let new_j_parents: Vec<NodeId> = nj
        .parents
        .iter()
        .copied()
        .filter(|&p| p != i)
        .chain(frame.only_i.iter().copied())
        .collect();

    // Joint of X_i and the observation given the new parents. The old table
    // of i does not depend on the J axes, so it broadcasts along them.
    let mut joint_axes = vec![Axis::new(i, ni.card())];
    joint_axes.extend(axes_for(d, &new_i_parents)?);
    let joint = ni.table.product(&nj.table, joint_axes)?;

    let mut likelihood = joint.sum_out(i)?.reorder(axes_for(d, &new_j_parents)?)?;
    if !likelihood.rescale_max() {
        return Err(TransformError::ImpossibleEvidence);
    }
    // Divide each column of the joint by its total to get X_i's conditional.
    let card = ni.card();
    let inner = joint.len() / card;
    let entries = joint.entries();
    let mut conditional = entries.to_vec();
    for rest in 0..inner {
        let total: f64 = (0..card).map(|x| entries[x * inner + rest]).sum();
        for x in 0..card {
            conditional[x * inner + rest] = if total > 0.0 {
                entries[x * inner + rest] / total
            } else {
                0.0
            };
        }
    }
    let mut posterior = PotentialTable::new(joint.axes().to_vec(), conditional)?;
    posterior.rescale_max();

    let mut trace = TransformTrace::default();
    trace.push(TraceStep::Reverse {
        i,
        j,
        inherited: frame.only_i.clone(),
    });
    for &p in &frame.only_j {
        trace.push(TraceStep::ArcAdded(p, i));
    }
    d.set_node_table(i, new_i_parents, posterior)?;
    d.set_node_table(j, new_j_parents, likelihood)?;
    Ok(trace)
}

/// Disconnects absorbed evidence node `j` by reversing the arc from each of
/// its indirect predecessors, in reverse order along `ordering`.
///
/// Without an explicit ordering the diagram's ordered list, restricted to the
/// predecessors of `j`, is used.
pub fn propagate_evidence(
    d: &mut BeliefDiagram,
    j: NodeId,
    ordering: Option<&[NodeId]>,
) -> Result<TransformTrace, TransformError> {
    propagate_evidence_with(d, j, ordering, &mut |_, _| {})
}

/// [`propagate_evidence`], calling `observer` after every reversal.
pub fn propagate_evidence_with(
    d: &mut BeliefDiagram,
    j: NodeId,
    ordering: Option<&[NodeId]>,
    observer: &mut dyn FnMut(&BeliefDiagram, &TransformTrace),
) -> Result<TransformTrace, TransformError> {
    if !d.node(j)?.status.is_absorbed() {
        return Err(TransformError::NotAbsorbed(j));
    }
    let ancestors = d.ancestors(j);
    let order: Vec<NodeId> = match ordering {
        Some(list) => {
            check_ordering(d, j, &ancestors, list)?;
            list.to_vec()
        }
        None => d
            .ordered_list()?
            .into_iter()
            .filter(|n| ancestors.contains(n))
            .collect(),
    };
    let mut trace = TransformTrace::default();
    for &i in order.iter().rev() {
        if d.has_arc(i, j) {
            let step = evidence_reverse(d, i, j)?;
            observer(d, &step);
            trace.extend(step);
        }
    }
    debug_assert!(d.parents(j).is_empty());
    let record = d.node_mut(j)?;
    if !record.table.is_scalar() {
        return Err(TransformError::NotAbsorbed(j));
    }
    record.table = PotentialTable::scalar(1.0);
    Ok(trace)
}

fn check_ordering(
    d: &BeliefDiagram,
    j: NodeId,
    ancestors: &BTreeSet<NodeId>,
    list: &[NodeId],
) -> Result<(), TransformError> {
    let as_set: BTreeSet<NodeId> = list.iter().copied().collect();
    if as_set.len() != list.len() || &as_set != ancestors {
        return Err(TransformError::InvalidOrdering(j));
    }
    for (k, &n) in list.iter().enumerate() {
        for p in d.parents(n) {
            match list.iter().position(|x| x == p) {
                Some(pos) if pos < k => {}
                _ => return Err(TransformError::InvalidOrdering(j)),
            }
        }
    }
    Ok(())
}

/// Propagates every absorbed evidence node that is still connected, visiting
/// them in reverse ordered-list order.
pub fn propagate_all_evidence(d: &mut BeliefDiagram) -> Result<TransformTrace, TransformError> {
    propagate_all_evidence_with(d, None, &mut |_, _| {})
}

/// [`propagate_all_evidence`] with an optional global ordering (restricted
/// to each evidence node's predecessors) and a per-reversal observer.
pub fn propagate_all_evidence_with(
    d: &mut BeliefDiagram,
    ordering: Option<&[NodeId]>,
    observer: &mut dyn FnMut(&BeliefDiagram, &TransformTrace),
) -> Result<TransformTrace, TransformError> {
    if let Some(pending) = d.nodes().find(|n| {
        matches!(
            n.status,
            NodeStatus::Observed {
                absorbed: false,
                ..
            }
        )
    }) {
        return Err(TransformError::NotAbsorbed(pending.id));
    }
    let evidence: Vec<NodeId> = d
        .ordered_list()?
        .into_iter()
        .rev()
        .filter(|&n| d.node(n).map(|r| r.status.is_absorbed()).unwrap_or(false))
        .collect();
    let mut trace = TransformTrace::default();
    for j in evidence {
        let restricted: Option<Vec<NodeId>> = ordering.map(|list| {
            let anc = d.ancestors(j);
            list.iter().copied().filter(|n| anc.contains(n)).collect()
        });
        trace.extend(propagate_evidence_with(
            d,
            j,
            restricted.as_deref(),
            observer,
        )?);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{self, DEFAULT_JOINT_CAP};

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn normalized(v: &[f64]) -> Vec<f64> {
        let s: f64 = v.iter().sum();
        v.iter().map(|x| x / s).collect()
    }

    fn chain3() -> (BeliefDiagram, [NodeId; 3]) {
        let mut d = BeliefDiagram::new();
        let a = d.add_node("1", ["a", "b"]).unwrap();
        let b = d.add_node("2", ["t", "f"]).unwrap();
        let c = d.add_node("3", ["u", "v", "w"]).unwrap();
        d.set_cpt(a, &[], vec![0.2, 0.8]).unwrap();
        d.set_cpt(b, &[a], vec![0.7, 0.3, 0.3, 0.7]).unwrap();
        d.set_cpt(c, &[b], vec![0.1, 0.5, 0.3, 0.25, 0.6, 0.25])
            .unwrap();
        (d, [a, b, c])
    }

    #[test]
    fn absorb_on_chain() {
        let (mut d, [a, b, c]) = chain3();
        let trace = absorb_evidence(&mut d, EvidenceAssertion::new(b, 0)).unwrap();
        assert_eq!(
            trace.steps,
            vec![
                TraceStep::Absorb {
                    node: b,
                    outcome: 0
                },
                TraceStep::ArcDeleted(b, c)
            ]
        );
        assert_eq!(d.arc_set(), [(a, b)].into_iter().collect());
        // Likelihood over X_1, rescaled to max 1.
        let l = &d.node(b).unwrap().table;
        assert_eq!(l.axes(), &[Axis::new(a, 2)]);
        assert!(close(l.entries(), &[1.0, 0.3 / 0.7], 1e-15));
        // X_3 now holds P(X_3 | X_2 = t), proportionally.
        let t3 = &d.node(c).unwrap().table;
        assert_eq!(t3.axes(), &[Axis::new(c, 3)]);
        assert!(close(
            &normalized(t3.entries()),
            &normalized(&[0.1, 0.3, 0.6]),
            1e-15
        ));
        assert!(d.validate().is_empty());
    }

    #[test]
    fn absorb_errors() {
        let (mut d, [_, b, c]) = chain3();
        assert_eq!(
            absorb_evidence(&mut d, EvidenceAssertion::new(c, 3)),
            Err(TransformError::OutcomeOutOfRange {
                node: c,
                outcome: 3
            })
        );
        absorb_evidence(&mut d, EvidenceAssertion::new(b, 1)).unwrap();
        assert_eq!(
            absorb_evidence(&mut d, EvidenceAssertion::new(b, 1)),
            Err(TransformError::AlreadyObserved(b))
        );
    }

    #[test]
    fn absorb_isolated_node() {
        let mut d = BeliefDiagram::new();
        let x = d.add_node("x", ["a", "b"]).unwrap();
        d.set_cpt(x, &[], vec![0.4, 0.6]).unwrap();
        let trace = absorb_evidence(&mut d, EvidenceAssertion::new(x, 1)).unwrap();
        assert_eq!(trace.steps.len(), 1);
        assert!(d.node(x).unwrap().table.is_scalar());
        assert!(d.arcs().is_empty());
    }

    #[test]
    fn absorb_impossible_outcome() {
        let mut d = BeliefDiagram::new();
        let x = d.add_node("x", ["a", "b"]).unwrap();
        d.set_cpt(x, &[], vec![1.0, 0.0]).unwrap();
        let before = d.clone();
        assert_eq!(
            absorb_evidence(&mut d, EvidenceAssertion::new(x, 1)),
            Err(TransformError::ImpossibleEvidence)
        );
        assert_eq!(d.node(x).unwrap().status, before.node(x).unwrap().status);
    }

    #[test]
    fn reversal_two_node_bayes() {
        // Prior (0.2, 0.8); likelihood of the observation (0.7, 0.3).
        let mut d = BeliefDiagram::new();
        let i = d.add_node("i", ["a", "b"]).unwrap();
        let j = d.add_node("j", ["t", "f"]).unwrap();
        d.set_cpt(i, &[], vec![0.2, 0.8]).unwrap();
        d.set_cpt(j, &[i], vec![0.7, 0.3, 0.3, 0.7]).unwrap();
        absorb_evidence(&mut d, EvidenceAssertion::new(j, 0)).unwrap();
        let trace = evidence_reverse(&mut d, i, j).unwrap();
        assert_eq!(
            trace.steps,
            vec![TraceStep::Reverse {
                i,
                j,
                inherited: vec![]
            }]
        );
        assert!(d.arcs().is_empty());
        let post = normalized(d.node(i).unwrap().table.entries());
        assert!(close(&post, &[7.0 / 19.0, 12.0 / 19.0], 1e-15));
        assert!(d.node(j).unwrap().table.is_scalar());
    }

    #[test]
    fn uninformative_likelihood_keeps_prior() {
        let mut d = BeliefDiagram::new();
        let p = d.add_node("p", ["a", "b"]).unwrap();
        let i = d.add_node("i", ["a", "b", "c"]).unwrap();
        let j = d.add_node("j", ["t", "f"]).unwrap();
        d.set_cpt(p, &[], vec![0.5, 0.5]).unwrap();
        d.set_cpt(i, &[p], vec![0.1, 0.4, 0.3, 0.4, 0.6, 0.2])
            .unwrap();
        d.set_cpt(j, &[i], vec![0.5; 6]).unwrap();
        absorb_evidence(&mut d, EvidenceAssertion::new(j, 0)).unwrap();
        let before = d.node(i).unwrap().table.clone();
        evidence_reverse(&mut d, i, j).unwrap();
        let after = &d.node(i).unwrap().table;
        let ratio = after.entries()[0] / before.entries()[0];
        assert!(close(
            after.entries(),
            &before
                .entries()
                .iter()
                .map(|v| v * ratio)
                .collect::<Vec<_>>(),
            1e-15
        ));
        let lj = d.node(j).unwrap().table.entries();
        assert!(lj.iter().all(|&v| (v - lj[0]).abs() < 1e-15));
        assert!(!d.has_arc(i, j));
        assert!(d.has_arc(p, j));
    }

    #[test]
    fn reversal_preconditions() {
        // 1 -> 2 -> 3 and 1 -> 3, evidence at 3.
        let mut d = BeliefDiagram::new();
        let n: Vec<_> = (1..=3)
            .map(|k| d.add_node(k.to_string(), ["a", "b"]).unwrap())
            .collect();
        d.set_cpt(n[1], &[n[0]], vec![0.3, 0.6, 0.7, 0.4]).unwrap();
        d.set_cpt(
            n[2],
            &[n[1], n[0]],
            vec![0.1, 0.2, 0.3, 0.4, 0.9, 0.8, 0.7, 0.6],
        )
        .unwrap();
        assert_eq!(
            evidence_reverse(&mut d, n[1], n[2]),
            Err(TransformError::NotAbsorbed(n[2]))
        );
        absorb_evidence(&mut d, EvidenceAssertion::new(n[2], 0)).unwrap();
        assert_eq!(
            evidence_reverse(&mut d, n[0], n[2]),
            Err(TransformError::PathExists { i: n[0], j: n[2] })
        );
        let frame = ReversalFrame::new(&d, n[1], n[2]);
        assert_eq!(frame.only_i, vec![]);
        assert_eq!(frame.only_j, vec![]);
        assert_eq!(frame.shared, vec![n[0]]);
        evidence_reverse(&mut d, n[1], n[2]).unwrap();
        assert_eq!(
            evidence_reverse(&mut d, n[1], n[2]),
            Err(TransformError::NotAnEvidenceArc { i: n[1], j: n[2] })
        );
        evidence_reverse(&mut d, n[0], n[2]).unwrap();
        assert!(d.parents(n[2]).is_empty());
    }

    #[test]
    fn reversal_dimension_law() {
        // i has parents {a, k}; j has parents {i, b, k}.
        let mut d = BeliefDiagram::new();
        let a = d.add_node("a", ["0", "1"]).unwrap();
        let k = d.add_node("k", ["0", "1", "2"]).unwrap();
        let b = d.add_node("b", ["0", "1"]).unwrap();
        let i = d.add_node("i", ["0", "1"]).unwrap();
        let j = d.add_node("j", ["0", "1"]).unwrap();
        let vals = |n: usize| {
            (0..n)
                .map(|x| 0.1 + (x % 7) as f64 * 0.13)
                .collect::<Vec<_>>()
        };
        d.set_cpt(i, &[a, k], vals(12)).unwrap();
        d.set_cpt(j, &[i, b, k], vals(24)).unwrap();
        absorb_evidence(&mut d, EvidenceAssertion::new(j, 1)).unwrap();
        let trace = evidence_reverse(&mut d, i, j).unwrap();
        let axes_i: BTreeSet<_> = d
            .node(i)
            .unwrap()
            .table
            .axes()
            .iter()
            .map(|x| x.node)
            .collect();
        let axes_j: BTreeSet<_> = d
            .node(j)
            .unwrap()
            .table
            .axes()
            .iter()
            .map(|x| x.node)
            .collect();
        assert_eq!(axes_i, [i, a, k, b].into_iter().collect());
        assert_eq!(axes_j, [a, k, b].into_iter().collect());
        assert_eq!(trace.fill_ins, 1);
        assert!(trace.steps.contains(&TraceStep::ArcAdded(b, i)));
        assert!(d.validate().is_empty());
    }

    #[test]
    fn propagate_parentless_evidence_is_noop() {
        let mut d = BeliefDiagram::new();
        let x = d.add_node("x", ["a", "b"]).unwrap();
        absorb_evidence(&mut d, EvidenceAssertion::new(x, 0)).unwrap();
        let trace = propagate_evidence(&mut d, x, None).unwrap();
        assert!(trace.is_empty());
        assert_eq!(d.node(x).unwrap().table.entries(), &[1.0]);
    }

    #[test]
    fn propagate_requires_absorbed() {
        let (mut d, [_, b, _]) = chain3();
        assert_eq!(
            propagate_evidence(&mut d, b, None),
            Err(TransformError::NotAbsorbed(b))
        );
    }

    #[test]
    fn propagate_matches_oracle_on_chain() {
        let (mut d, [a, b, c]) = chain3();
        let truth =
            oracle::posterior_marginals(&d, &[EvidenceAssertion::new(b, 0)], DEFAULT_JOINT_CAP)
                .unwrap();
        absorb_evidence(&mut d, EvidenceAssertion::new(b, 0)).unwrap();
        let trace = propagate_all_evidence(&mut d).unwrap();
        assert_eq!(trace.reversals, 1);
        assert!(d.arcs().is_empty());
        let after = oracle::posterior_marginals(&d, &[], DEFAULT_JOINT_CAP).unwrap();
        for id in [a, b, c] {
            assert!(close(&truth[&id], &after[&id], 1e-12));
        }
        // X_3 depends only on the observed X_2.
        let b3 = normalized(d.node(c).unwrap().table.entries());
        assert!(close(&b3, &truth[&c], 1e-12));
    }

    #[test]
    fn invalid_orderings_are_rejected() {
        let (mut d, [a, b, c]) = chain3();
        absorb_evidence(&mut d, EvidenceAssertion::new(c, 0)).unwrap();
        assert_eq!(
            propagate_evidence(&mut d, c, Some(&[b, a])),
            Err(TransformError::InvalidOrdering(c))
        );
        assert_eq!(
            propagate_evidence(&mut d, c, Some(&[b])),
            Err(TransformError::InvalidOrdering(c))
        );
        propagate_evidence(&mut d, c, Some(&[a, b])).unwrap();
    }

    #[test]
    fn trace_replay_reproduces_arcs() {
        let (mut d, [_, b, _]) = chain3();
        let mut arcs = d.arc_set();
        let mut trace = absorb_evidence(&mut d, EvidenceAssertion::new(b, 0)).unwrap();
        trace.extend(propagate_all_evidence(&mut d).unwrap());
        trace.replay_arcs(&mut arcs);
        assert_eq!(arcs, d.arc_set());
        assert_eq!(
            trace.render(&d),
            "ABSORB node=2 outcome=t\nARC- 2->3\nREVERSE i=1 j=2\n"
        );
    }
}
