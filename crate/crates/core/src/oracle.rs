//! Brute-force ground truth: materialize the joint distribution by
//! enumerating every configuration, condition by zeroing, marginalize by
//! summing. Deliberately naive so it shares no code path with the
//! transformation engine beyond reading raw table entries.

use std::collections::BTreeMap;

use crate::model::{BeliefDiagram, NodeId};
use crate::transform::EvidenceAssertion;

/// Default cap on the number of joint configurations (2^22).
pub const DEFAULT_JOINT_CAP: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("joint state space of {size} configurations exceeds the cap of {cap}")]
    StateSpaceTooLarge { size: u128, cap: usize },
    #[error("evidence has probability zero")]
    ImpossibleEvidence,
    #[error("node {0} is not a variable of the joint table")]
    UnknownNode(NodeId),
    #[error("outcome {outcome} out of range for node {node}")]
    OutcomeOutOfRange { node: NodeId, outcome: usize },
}

/// Compensated (Neumaier) summation in the order values are supplied.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Dense joint over `vars`, row-major with the last variable fastest.
#[derive(Clone, Debug)]
pub struct JointTable {
    vars: Vec<NodeId>,
    cards: Vec<usize>,
    entries: Vec<f64>,
    total: f64,
}

fn checked_size(cards: &[usize], cap: usize) -> Result<usize, OracleError> {
    let size: u128 = cards.iter().map(|&c| c as u128).product();
    if size > cap as u128 {
        return Err(OracleError::StateSpaceTooLarge { size, cap });
    }
    Ok(size as usize)
}

fn total_of(entries: &[f64]) -> f64 {
    let mut acc = NeumaierSum::default();
    for &v in entries {
        acc.add(v);
    }
    acc.value()
}

/// A table's raw entries plus (variable slot, stride) for each of its axes.
type Factor<'a> = (&'a [f64], Vec<(usize, usize)>);

/// Product of every node's table at each configuration of the variables.
///
/// Absorbed evidence nodes are not variables; their likelihood tables enter
/// as factors over their parents.
pub fn enumerate_joint(d: &BeliefDiagram, cap: usize) -> Result<JointTable, OracleError> {
    let vars: Vec<NodeId> = d
        .nodes()
        .filter(|n| !n.status.is_absorbed())
        .map(|n| n.id)
        .collect();
    let cards: Vec<usize> = vars
        .iter()
        .map(|&v| d.node(v).map(|n| n.card()).unwrap_or(0))
        .collect();
    let size = checked_size(&cards, cap)?;

    // Slot of each diagram node inside a configuration, if it is a variable.
    let mut slot = vec![usize::MAX; d.len()];
    for (k, v) in vars.iter().enumerate() {
        slot[v.0] = k;
    }
    let factors: Vec<Factor> = d
        .nodes()
        .map(|n| {
            let axes = n.table.axes();
            let mut stride = 1;
            let mut terms = vec![(0, 0); axes.len()];
            for k in (0..axes.len()).rev() {
                terms[k] = (slot[axes[k].node.0], stride);
                stride *= axes[k].card;
            }
            (n.table.entries(), terms)
        })
        .collect();

    let mut entries = Vec::with_capacity(size);
    let mut config = vec![0usize; vars.len()];
    for _ in 0..size {
        let mut value = 1.0;
        for (raw, terms) in &factors {
            let idx: usize = terms.iter().map(|&(s, st)| config[s] * st).sum();
            value *= raw[idx];
        }
        entries.push(value);
        for k in (0..config.len()).rev() {
            config[k] += 1;
            if config[k] < cards[k] {
                break;
            }
            config[k] = 0;
        }
    }
    let total = total_of(&entries);
    Ok(JointTable {
        vars,
        cards,
        entries,
        total,
    })
}

impl JointTable {
    pub fn vars(&self) -> &[NodeId] {
        &self.vars
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Sum of all entries (the normalization constant).
    pub fn total(&self) -> f64 {
        self.total
    }

    fn var_pos(&self, node: NodeId) -> Result<usize, OracleError> {
        self.vars
            .iter()
            .position(|&v| v == node)
            .ok_or(OracleError::UnknownNode(node))
    }

    fn stride(&self, pos: usize) -> usize {
        self.cards[pos + 1..].iter().product()
    }

    /// Zeroes every configuration inconsistent with the evidence.
    pub fn condition(&self, evidence: &[EvidenceAssertion]) -> Result<JointTable, OracleError> {
        let mut entries = self.entries.clone();
        for e in evidence {
            let pos = self.var_pos(e.node)?;
            if e.outcome >= self.cards[pos] {
                return Err(OracleError::OutcomeOutOfRange {
                    node: e.node,
                    outcome: e.outcome,
                });
            }
            let stride = self.stride(pos);
            let card = self.cards[pos];
            for (i, v) in entries.iter_mut().enumerate() {
                if (i / stride) % card != e.outcome {
                    *v = 0.0;
                }
            }
        }
        if entries.iter().all(|&v| v == 0.0) {
            return Err(OracleError::ImpossibleEvidence);
        }
        let total = total_of(&entries);
        Ok(JointTable {
            vars: self.vars.clone(),
            cards: self.cards.clone(),
            entries,
            total,
        })
    }

    /// Normalized marginal of one variable.
    pub fn marginal(&self, node: NodeId) -> Result<Vec<f64>, OracleError> {
        let pos = self.var_pos(node)?;
        let stride = self.stride(pos);
        let card = self.cards[pos];
        let mut acc = vec![NeumaierSum::default(); card];
        for (i, &v) in self.entries.iter().enumerate() {
            acc[(i / stride) % card].add(v);
        }
        if self.total.is_nan() || self.total <= 0.0 {
            return Err(OracleError::ImpossibleEvidence);
        }
        Ok(acc.iter().map(|a| a.value() / self.total).collect())
    }

    /// Normalized joint over `keep` (in the given order), summing out the
    /// other variables.
    pub fn marginalize_onto(&self, keep: &[NodeId]) -> Result<Vec<f64>, OracleError> {
        let positions: Vec<usize> = keep
            .iter()
            .map(|&n| self.var_pos(n))
            .collect::<Result<_, _>>()?;
        let size: usize = positions.iter().map(|&p| self.cards[p]).product();
        let strides: Vec<usize> = positions.iter().map(|&p| self.stride(p)).collect();
        let mut acc = vec![NeumaierSum::default(); size];
        for (i, &v) in self.entries.iter().enumerate() {
            let mut idx = 0;
            for (k, &p) in positions.iter().enumerate() {
                idx = idx * self.cards[p] + (i / strides[k]) % self.cards[p];
            }
            acc[idx].add(v);
        }
        if self.total.is_nan() || self.total <= 0.0 {
            return Err(OracleError::ImpossibleEvidence);
        }
        Ok(acc.iter().map(|a| a.value() / self.total).collect())
    }
}

pub fn condition_joint(
    t: &JointTable,
    evidence: &[EvidenceAssertion],
) -> Result<JointTable, OracleError> {
    t.condition(evidence)
}

pub fn marginal_from_joint(t: &JointTable, node: NodeId) -> Result<Vec<f64>, OracleError> {
    t.marginal(node)
}

/// Posterior marginal of every node of `d` given `evidence`, by enumeration.
/// Nodes already absorbed in `d` report a unit mass at their observed outcome.
pub fn posterior_marginals(
    d: &BeliefDiagram,
    evidence: &[EvidenceAssertion],
    cap: usize,
) -> Result<BTreeMap<NodeId, Vec<f64>>, OracleError> {
    let joint = enumerate_joint(d, cap)?;
    if joint.total().is_nan() || joint.total() <= 0.0 {
        return Err(OracleError::ImpossibleEvidence);
    }
    let joint = joint.condition(evidence)?;
    let mut out = BTreeMap::new();
    for node in d.nodes() {
        let v = match node.status {
            crate::model::NodeStatus::Observed {
                outcome,
                absorbed: true,
            } => {
                let mut v = vec![0.0; node.card()];
                v[outcome] = 1.0;
                v
            }
            _ => joint.marginal(node.id)?,
        };
        out.insert(node.id, v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> (BeliefDiagram, NodeId, NodeId) {
        // 1 -> 2 with P(1) = (0.2, 0.8), P(2=t | a) = 0.7, P(2=t | b) = 0.3.
        let mut d = BeliefDiagram::new();
        let a = d.add_node("1", ["a", "b"]).unwrap();
        let b = d.add_node("2", ["t", "f"]).unwrap();
        d.set_cpt(a, &[], vec![0.2, 0.8]).unwrap();
        d.set_cpt(b, &[a], vec![0.7, 0.3, 0.3, 0.7]).unwrap();
        (d, a, b)
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn independent_uniform_pair() {
        let mut d = BeliefDiagram::new();
        d.add_node("x", ["0", "1"]).unwrap();
        d.add_node("y", ["0", "1"]).unwrap();
        let j = enumerate_joint(&d, DEFAULT_JOINT_CAP).unwrap();
        assert_eq!(j.entries(), &[1.0; 4]);
        assert_eq!(j.marginal(NodeId(0)).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn chain_joint_entries() {
        let (d, _, _) = chain();
        let j = enumerate_joint(&d, DEFAULT_JOINT_CAP).unwrap();
        // (a,t), (a,f), (b,t), (b,f)
        assert!(close(j.entries(), &[0.14, 0.06, 0.24, 0.56], 1e-15));
    }

    #[test]
    fn conditioning_on_child() {
        let (d, a, b) = chain();
        let j = enumerate_joint(&d, DEFAULT_JOINT_CAP).unwrap();
        let ev = [EvidenceAssertion::new(b, 0)];
        let c = condition_joint(&j, &ev).unwrap();
        let m = marginal_from_joint(&c, a).unwrap();
        assert!(close(&m, &[7.0 / 19.0, 12.0 / 19.0], 1e-15));
        // Conditioning twice is idempotent.
        let cc = condition_joint(&c, &ev).unwrap();
        assert_eq!(cc.entries(), c.entries());
        // Unit mass at the observed outcome.
        assert_eq!(marginal_from_joint(&c, b).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn certain_outcome_leaves_table_unchanged() {
        let mut d = BeliefDiagram::new();
        let x = d.add_node("x", ["a", "b"]).unwrap();
        d.set_cpt(x, &[], vec![1.0, 0.0]).unwrap();
        let j = enumerate_joint(&d, DEFAULT_JOINT_CAP).unwrap();
        let c = j.condition(&[EvidenceAssertion::new(x, 0)]).unwrap();
        assert_eq!(c.entries(), j.entries());
        assert_eq!(
            j.condition(&[EvidenceAssertion::new(x, 1)]).unwrap_err(),
            OracleError::ImpossibleEvidence
        );
    }

    #[test]
    fn deterministic_child_has_parent_many_nonzero_entries() {
        let mut d = BeliefDiagram::new();
        let p = d.add_node("p", ["a", "b", "c"]).unwrap();
        let c = d.add_node("c", ["a", "b", "c"]).unwrap();
        let mut identity = vec![0.0; 9];
        for k in 0..3 {
            identity[k * 3 + k] = 1.0;
        }
        d.set_cpt(c, &[p], identity).unwrap();
        let j = enumerate_joint(&d, DEFAULT_JOINT_CAP).unwrap();
        assert_eq!(j.entries().iter().filter(|&&v| v > 0.0).count(), 3);
    }

    #[test]
    fn cap_is_enforced() {
        let mut d = BeliefDiagram::new();
        for i in 0..5 {
            d.add_node(format!("n{i}"), ["a", "b", "c", "d"]).unwrap();
        }
        assert_eq!(
            enumerate_joint(&d, 1000).unwrap_err(),
            OracleError::StateSpaceTooLarge {
                size: 1024,
                cap: 1000
            }
        );
    }

    #[test]
    fn marginalize_onto_pairs() {
        let (d, a, b) = chain();
        let j = enumerate_joint(&d, DEFAULT_JOINT_CAP).unwrap();
        let ba = j.marginalize_onto(&[b, a]).unwrap();
        // (t,a), (t,b), (f,a), (f,b)
        assert!(close(&ba, &[0.14, 0.24, 0.06, 0.56], 1e-15));
    }

    #[test]
    fn neumaier_recovers_cancellation() {
        let mut s = NeumaierSum::default();
        for v in [1.0, 1e100, 1.0, -1e100] {
            s.add(v);
        }
        assert_eq!(s.value(), 2.0);
    }
}
