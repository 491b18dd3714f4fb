//! Control strategies for absorbing evidence, propagating it and computing
//! marginals.
//!
//! Batch processing rewrites the diagram with evidence reversals and then
//! sweeps it. Message passing keeps the (forest) topology fixed and moves
//! likelihoods up and marginals down as messages, under four priority rules:
//!
//! 1. evidence is handled before any message;
//! 2. messages from below (likelihoods) go before messages from above;
//! 3. a pending message from above is replaced by a later one on the same arc;
//! 4. messages from above are handled in graph order of their target.

use std::collections::{BTreeMap, VecDeque};

use crate::marginals::{self, MarginalsError, Method, PosteriorReport, ReportDiagnostics};
use crate::model::{
    Axis, BeliefDiagram, ModelError, NodeId, NodeStatus, PotentialTable, TableError, TopologyClass,
};
use crate::oracle::DEFAULT_JOINT_CAP;
use crate::transform::{
    self, EvidenceAssertion, MessageKind, TraceStep, TransformError, TransformTrace,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SchedulerError {
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Marginals(#[from] MarginalsError),
    #[error("message passing requires a forest")]
    NotAForest,
    #[error("the scheduler queue is empty")]
    EmptyQueue,
}

impl From<ModelError> for SchedulerError {
    fn from(e: ModelError) -> Self {
        SchedulerError::Transform(TransformError::Model(e))
    }
}

impl From<TableError> for SchedulerError {
    fn from(e: TableError) -> Self {
        SchedulerError::Transform(TransformError::Table(e))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Strategy {
    #[default]
    Batch,
    /// Evidence posted one assertion at a time, each fully processed before
    /// the next.
    MessagePassing,
    /// All assertions posted at once to the priority scheduler.
    Priority,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub allow_fallback: bool,
    pub joint_cap: usize,
    /// Global ordered list guiding evidence propagation (batch only).
    pub ordering: Option<Vec<NodeId>>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            allow_fallback: false,
            joint_cap: DEFAULT_JOINT_CAP,
            ordering: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: PosteriorReport,
    pub trace: TransformTrace,
}

/// Absorbs every assertion, propagates all evidence, then computes marginals.
pub fn run_batch(
    d: &mut BeliefDiagram,
    evidence: &[EvidenceAssertion],
    opts: &RunOptions,
) -> Result<RunOutcome, SchedulerError> {
    let mut trace = TransformTrace::default();
    for &e in evidence {
        trace.extend(transform::absorb_evidence(d, e)?);
    }
    trace.extend(transform::propagate_all_evidence_with(
        d,
        opts.ordering.as_deref(),
        &mut |_, _| {},
    )?);
    let mut report = marginals::posterior_marginals_capped(d, opts.allow_fallback, opts.joint_cap)?;
    report.diagnostics.reversals = trace.reversals;
    report.diagnostics.fill_ins = trace.fill_ins;
    Ok(RunOutcome { report, trace })
}

/// Message passing on a forest, posting one assertion at a time.
pub fn run_message_passing(
    d: &mut BeliefDiagram,
    evidence: &[EvidenceAssertion],
) -> Result<RunOutcome, SchedulerError> {
    let mut sched = MessageScheduler::new(d)?;
    for &e in evidence {
        sched.post_evidence(e);
        sched.run(d)?;
    }
    sched.run(d)?;
    sched.finish(d)
}

/// Message passing on a forest with every assertion posted simultaneously.
pub fn run_priority(
    d: &mut BeliefDiagram,
    evidence: &[EvidenceAssertion],
) -> Result<RunOutcome, SchedulerError> {
    let mut sched = MessageScheduler::new(d)?;
    for &e in evidence {
        sched.post_evidence(e);
    }
    sched.run(d)?;
    sched.finish(d)
}

pub fn run(
    strategy: Strategy,
    d: &mut BeliefDiagram,
    evidence: &[EvidenceAssertion],
    opts: &RunOptions,
) -> Result<RunOutcome, SchedulerError> {
    match strategy {
        Strategy::Batch => run_batch(d, evidence, opts),
        Strategy::MessagePassing => run_message_passing(d, evidence),
        Strategy::Priority => run_priority(d, evidence),
    }
}

/// A likelihood travelling up to a parent, or a normalized marginal
/// travelling down to a child.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagationMessage {
    pub kind: MessageKind,
    pub target: NodeId,
    pub origin: NodeId,
    /// Over the target's outcomes for likelihoods, over the origin's outcomes
    /// for marginals.
    pub payload: PotentialTable,
    pub sequence: u64,
}

/// Something popped from the queue.
#[derive(Clone, Debug, PartialEq)]
pub enum QueueItem {
    Evidence(EvidenceAssertion),
    Message(PropagationMessage),
}

/// Pending work, ordered by the four priority rules.
#[derive(Clone, Debug, Default)]
pub struct PriorityQueueState {
    evidence: VecDeque<EvidenceAssertion>,
    upward: VecDeque<PropagationMessage>,
    /// Keyed by (graph position of target, graph position of origin); a
    /// newer message on the same arc overwrites the older one.
    downward: BTreeMap<(usize, usize), PropagationMessage>,
    /// Graph position of each node id.
    position: Vec<usize>,
    sequence: u64,
}

impl PriorityQueueState {
    /// An empty queue using `d`'s ordered list as graph order.
    pub fn new(d: &BeliefDiagram) -> Result<Self, ModelError> {
        let order = d.ordered_list()?;
        let mut position = vec![0; d.len()];
        for (k, id) in order.iter().enumerate() {
            position[id.0] = k;
        }
        Ok(PriorityQueueState {
            position,
            ..Default::default()
        })
    }

    pub fn len(&self) -> usize {
        self.evidence.len() + self.upward.len() + self.downward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push_evidence(&mut self, e: EvidenceAssertion) {
        self.evidence.push_back(e);
    }

    /// Enqueues a message, stamping it with the next sequence number.
    pub fn push_message(
        &mut self,
        kind: MessageKind,
        origin: NodeId,
        target: NodeId,
        payload: PotentialTable,
    ) {
        self.sequence += 1;
        let msg = PropagationMessage {
            kind,
            target,
            origin,
            payload,
            sequence: self.sequence,
        };
        match kind {
            MessageKind::Likelihood => self.upward.push_back(msg),
            MessageKind::Marginal => {
                let key = (self.position[target.0], self.position[origin.0]);
                self.downward.insert(key, msg);
            }
        }
    }

    /// Removes the highest-priority item.
    pub fn pop(&mut self) -> Option<QueueItem> {
        if let Some(e) = self.evidence.pop_front() {
            return Some(QueueItem::Evidence(e));
        }
        if let Some(m) = self.upward.pop_front() {
            return Some(QueueItem::Message(m));
        }
        self.downward
            .pop_first()
            .map(|(_, m)| QueueItem::Message(m))
    }

    /// Drops pending marginals to or from `node`.
    fn discard_marginals_touching(&mut self, node: NodeId) {
        self.downward
            .retain(|_, m| m.target != node && m.origin != node);
    }

    pub fn pending_marginals(&self) -> impl Iterator<Item = &PropagationMessage> {
        self.downward.values()
    }
}

/// What one scheduler step did.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub item: QueueItem,
    pub trace: TransformTrace,
    /// Children cut off from an absorbed node, which become roots.
    pub detached_children: Vec<NodeId>,
}

/// Sequential message-passing engine over a forest.
#[derive(Clone, Debug)]
pub struct MessageScheduler {
    pub queue: PriorityQueueState,
    beliefs: Vec<Option<Vec<f64>>>,
    trace: TransformTrace,
    likelihood_messages: usize,
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter().map(|x| x / total).collect()
    } else {
        v.to_vec()
    }
}

impl MessageScheduler {
    /// Sets up the engine and queues the initial marginals of every root.
    /// Evidence already absorbed in `d` is turned into likelihood messages.
    pub fn new(d: &mut BeliefDiagram) -> Result<Self, SchedulerError> {
        if d.max_in_degree() > 1 {
            return Err(SchedulerError::NotAForest);
        }
        let queue = PriorityQueueState::new(d)?;
        let mut sched = MessageScheduler {
            queue,
            beliefs: vec![None; d.len()],
            trace: TransformTrace::default(),
            likelihood_messages: 0,
        };
        for id in d.ids().collect::<Vec<_>>() {
            let node = d.node(id)?;
            match node.status {
                NodeStatus::Observed {
                    absorbed: false, ..
                } => return Err(TransformError::NotAbsorbed(id).into()),
                NodeStatus::Observed { outcome, .. } => {
                    let mut mass = vec![0.0; node.card()];
                    mass[outcome] = 1.0;
                    sched.beliefs[id.0] = Some(mass);
                    if let Some(&parent) = node.parents.first() {
                        sched.detach_evidence(d, id, parent)?;
                    }
                }
                NodeStatus::Unobserved => {}
            }
        }
        for id in d.ids().collect::<Vec<_>>() {
            let node = d.node(id)?;
            if node.status.is_unobserved() && node.parents.is_empty() {
                sched.refresh_root(d, id)?;
            }
        }
        Ok(sched)
    }

    pub fn post_evidence(&mut self, e: EvidenceAssertion) {
        self.queue.push_evidence(e);
    }

    pub fn belief(&self, id: NodeId) -> Option<&[f64]> {
        self.beliefs.get(id.0).and_then(|b| b.as_deref())
    }

    /// Cuts the arc from `parent` into absorbed node `j` and sends its
    /// likelihood to the parent instead.
    fn detach_evidence(
        &mut self,
        d: &mut BeliefDiagram,
        j: NodeId,
        parent: NodeId,
    ) -> Result<(), SchedulerError> {
        let likelihood = d.node(j)?.table.clone();
        d.set_node_table(j, Vec::new(), PotentialTable::scalar(1.0))?;
        self.trace.push(TraceStep::ArcDeleted(parent, j));
        self.queue
            .push_message(MessageKind::Likelihood, j, parent, likelihood);
        Ok(())
    }

    /// A parentless node's table changed: recompute its marginal and send it
    /// to every child.
    fn refresh_root(&mut self, d: &BeliefDiagram, id: NodeId) -> Result<(), SchedulerError> {
        let node = d.node(id)?;
        let belief = normalized(node.table.entries());
        for child in d.children(id) {
            let payload = PotentialTable::new(vec![Axis::new(id, node.card())], belief.clone())?;
            self.queue
                .push_message(MessageKind::Marginal, id, child, payload);
        }
        self.beliefs[id.0] = Some(belief);
        Ok(())
    }

    fn absorb(
        &mut self,
        d: &mut BeliefDiagram,
        e: EvidenceAssertion,
    ) -> Result<StepRecord, SchedulerError> {
        let j = e.node;
        let children = d.children(j);
        let parent = d.parents(j).first().copied();
        let mut step = transform::absorb_evidence(d, e)?;
        let card = d.node(j)?.card();
        let mut mass = vec![0.0; card];
        mass[e.outcome] = 1.0;
        self.beliefs[j.0] = Some(mass);
        self.queue.discard_marginals_touching(j);
        let before = self.trace.steps.len();
        if let Some(p) = parent {
            self.detach_evidence(d, j, p)?;
        } else {
            d.set_node_table(j, Vec::new(), PotentialTable::scalar(1.0))?;
        }
        for step_line in self.trace.steps.drain(before..) {
            step.push(step_line);
        }
        if !children.is_empty() {
            log::debug!(
                "absorbing {} detaches {} child node(s)",
                d.name(j),
                children.len()
            );
        }
        for &k in &children {
            self.refresh_root(d, k)?;
        }
        Ok(StepRecord {
            item: QueueItem::Evidence(e),
            trace: step,
            detached_children: children,
        })
    }

    /// Folds a likelihood over X_i into node i. A root just multiplies it in;
    /// otherwise i's conditional is updated by Bayes' theorem and the
    /// likelihood of the observation given i's parent moves up.
    ///
    /// If i was observed after the message was sent, the likelihood is a
    /// constant given X_i and is dropped.
    fn apply_likelihood(
        &mut self,
        d: &mut BeliefDiagram,
        msg: &PropagationMessage,
    ) -> Result<bool, SchedulerError> {
        let i = msg.target;
        let node = d.node(i)?;
        if !node.status.is_unobserved() {
            return Ok(false);
        }
        let parents = node.parents.clone();
        let joint = node
            .table
            .product(&msg.payload, node.table.axes().to_vec())?;
        match parents.first() {
            None => {
                let mut table = joint;
                if !table.rescale_max() {
                    return Err(TransformError::ImpossibleEvidence.into());
                }
                d.set_node_table(i, parents, table)?;
                self.refresh_root(d, i)?;
            }
            Some(&p) => {
                let mut up = joint.sum_out(i)?;
                let column_totals = up.entries().to_vec();
                if !up.rescale_max() {
                    return Err(TransformError::ImpossibleEvidence.into());
                }
                let card = d.node(i)?.card();
                let inner = joint.len() / card;
                let mut entries = joint.entries().to_vec();
                for (idx, v) in entries.iter_mut().enumerate() {
                    let total = column_totals[idx % inner];
                    *v = if total > 0.0 { *v / total } else { 0.0 };
                }
                let mut table = PotentialTable::new(joint.axes().to_vec(), entries)?;
                table.rescale_max();
                d.set_node_table(i, parents.clone(), table)?;
                self.queue.push_message(MessageKind::Likelihood, i, p, up);
            }
        }
        Ok(true)
    }

    fn apply_marginal(
        &mut self,
        d: &BeliefDiagram,
        msg: &PropagationMessage,
    ) -> Result<bool, SchedulerError> {
        let k = msg.target;
        if d.parents(k).first() != Some(&msg.origin) {
            return Ok(false);
        }
        let node = d.node(k)?;
        let parent_belief = msg.payload.entries();
        let card = node.card();
        let mut belief = vec![0.0; card];
        for (c, &w) in parent_belief.iter().enumerate() {
            if w > 0.0 {
                for (acc, p) in belief.iter_mut().zip(node.table.conditional_slice(c)) {
                    *acc += p * w;
                }
            }
        }
        let belief = normalized(&belief);
        for child in d.children(k) {
            let payload = PotentialTable::new(vec![Axis::new(k, card)], belief.clone())?;
            self.queue
                .push_message(MessageKind::Marginal, k, child, payload);
        }
        self.beliefs[k.0] = Some(belief);
        Ok(true)
    }

    /// Pops and applies the highest-priority item.
    pub fn step(&mut self, d: &mut BeliefDiagram) -> Result<StepRecord, SchedulerError> {
        let item = self.queue.pop().ok_or(SchedulerError::EmptyQueue)?;
        let record = match item {
            QueueItem::Evidence(e) => self.absorb(d, e)?,
            QueueItem::Message(msg) => {
                let mut trace = TransformTrace::default();
                let applied = match msg.kind {
                    MessageKind::Likelihood => {
                        let applied = self.apply_likelihood(d, &msg)?;
                        self.likelihood_messages += usize::from(applied);
                        applied
                    }
                    MessageKind::Marginal => self.apply_marginal(d, &msg)?,
                };
                if applied {
                    trace.push(TraceStep::Message {
                        kind: msg.kind,
                        from: msg.origin,
                        to: msg.target,
                    });
                }
                StepRecord {
                    item: QueueItem::Message(msg),
                    trace,
                    detached_children: Vec::new(),
                }
            }
        };
        self.trace.extend(record.trace.clone());
        Ok(record)
    }

    /// Steps until the queue is empty.
    pub fn run(&mut self, d: &mut BeliefDiagram) -> Result<(), SchedulerError> {
        while !self.queue.is_empty() {
            self.step(d)?;
        }
        Ok(())
    }

    pub fn trace(&self) -> &TransformTrace {
        &self.trace
    }

    /// Collects the current beliefs into a report. Every node must have one.
    pub fn finish(self, d: &BeliefDiagram) -> Result<RunOutcome, SchedulerError> {
        let mut out = BTreeMap::new();
        for id in d.ids() {
            let belief = self.beliefs[id.0]
                .clone()
                .ok_or(MarginalsError::EvidenceNotPropagated(id))?;
            out.insert(id, belief);
        }
        let mut trace = self.trace;
        // Each likelihood message stands in for one evidence reversal.
        trace.reversals = self.likelihood_messages;
        let report = PosteriorReport {
            marginals: out,
            method: Method::Propagation,
            topology: d.classify_topology(),
            diagnostics: ReportDiagnostics {
                reversals: trace.reversals,
                fill_ins: 0,
                passes: Vec::new(),
            },
        };
        debug_assert_eq!(report.topology, TopologyClass::Forest);
        Ok(RunOutcome { report, trace })
    }
}

/// Pops and applies one queued item.
pub fn scheduler_step(
    sched: &mut MessageScheduler,
    d: &mut BeliefDiagram,
) -> Result<StepRecord, SchedulerError> {
    sched.step(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree() -> (BeliefDiagram, Vec<NodeId>) {
        // r -> a -> b -> leaf, r -> c -> e
        let mut d = BeliefDiagram::new();
        let names = ["r", "a", "b", "leaf", "c", "e"];
        let ids: Vec<_> = names
            .iter()
            .map(|n| d.add_node(*n, ["0", "1"]).unwrap())
            .collect();
        d.set_cpt(ids[0], &[], vec![0.3, 0.7]).unwrap();
        d.set_cpt(ids[1], &[ids[0]], vec![0.9, 0.2, 0.1, 0.8])
            .unwrap();
        d.set_cpt(ids[2], &[ids[1]], vec![0.6, 0.3, 0.4, 0.7])
            .unwrap();
        d.set_cpt(ids[3], &[ids[2]], vec![0.25, 0.5, 0.75, 0.5])
            .unwrap();
        d.set_cpt(ids[4], &[ids[0]], vec![0.55, 0.15, 0.45, 0.85])
            .unwrap();
        d.set_cpt(ids[5], &[ids[4]], vec![0.35, 0.65, 0.65, 0.35])
            .unwrap();
        (d, ids)
    }

    fn unit(id: NodeId) -> PotentialTable {
        PotentialTable::new(vec![Axis::new(id, 2)], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn evidence_beats_messages() {
        let (d, ids) = tree();
        let mut q = PriorityQueueState::new(&d).unwrap();
        q.push_message(MessageKind::Marginal, ids[0], ids[1], unit(ids[0]));
        q.push_evidence(EvidenceAssertion::new(ids[3], 0));
        assert_eq!(
            q.pop(),
            Some(QueueItem::Evidence(EvidenceAssertion::new(ids[3], 0)))
        );
    }

    #[test]
    fn later_marginal_replaces_earlier() {
        let (d, ids) = tree();
        let mut q = PriorityQueueState::new(&d).unwrap();
        let first = PotentialTable::new(vec![Axis::new(ids[0], 2)], vec![0.1, 0.9]).unwrap();
        q.push_message(MessageKind::Marginal, ids[0], ids[1], first);
        q.push_message(MessageKind::Marginal, ids[0], ids[1], unit(ids[0]));
        assert_eq!(q.len(), 1);
        match q.pop() {
            Some(QueueItem::Message(m)) => {
                assert_eq!(m.payload.entries(), &[0.5, 0.5]);
                assert_eq!(m.sequence, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn upward_beats_downward_and_graph_order_holds() {
        let (d, ids) = tree();
        let mut q = PriorityQueueState::new(&d).unwrap();
        q.push_message(MessageKind::Marginal, ids[4], ids[5], unit(ids[4]));
        q.push_message(MessageKind::Marginal, ids[0], ids[1], unit(ids[0]));
        q.push_message(MessageKind::Likelihood, ids[3], ids[2], unit(ids[2]));
        let kinds: Vec<_> = std::iter::from_fn(|| q.pop())
            .map(|item| match item {
                QueueItem::Message(m) => (m.kind, m.target),
                QueueItem::Evidence(_) => unreachable!(),
            })
            .collect();
        assert_eq!(
            kinds,
            vec![
                (MessageKind::Likelihood, ids[2]),
                (MessageKind::Marginal, ids[1]),
                (MessageKind::Marginal, ids[5]),
            ]
        );
    }

    #[test]
    fn empty_queue_step_errors() {
        let (mut d, _) = tree();
        let mut s = MessageScheduler::new(&mut d).unwrap();
        s.run(&mut d).unwrap();
        assert_eq!(
            scheduler_step(&mut s, &mut d),
            Err(SchedulerError::EmptyQueue)
        );
    }

    #[test]
    fn leaf_evidence_message_sequence() {
        // Hand simulation: the evidence is absorbed first, three likelihoods
        // climb b, a, r; the root then re-sends its marginal (replacing the
        // initial ones) and marginals descend in graph order over the four
        // arcs still present.
        let (mut d, ids) = tree();
        let out = run_message_passing(&mut d, &[EvidenceAssertion::new(ids[3], 1)]).unwrap();
        assert_eq!(
            out.trace.render(&d),
            "ABSORB node=leaf outcome=1\n\
             ARC- b->leaf\n\
             MSG kind=likelihood from=leaf to=b\n\
             MSG kind=likelihood from=b to=a\n\
             MSG kind=likelihood from=a to=r\n\
             MSG kind=marginal from=r to=a\n\
             MSG kind=marginal from=a to=b\n\
             MSG kind=marginal from=r to=c\n\
             MSG kind=marginal from=c to=e\n"
        );
        assert_eq!(out.report.diagnostics.reversals, 3);
    }

    #[test]
    fn root_evidence_sends_only_downward() {
        let (mut d, ids) = tree();
        let out = run_message_passing(&mut d, &[EvidenceAssertion::new(ids[0], 0)]).unwrap();
        let lines = out.trace.render(&d);
        assert!(!lines.contains("likelihood"));
        assert!(lines.contains("MSG kind=marginal from=a to=b"));
    }

    #[test]
    fn no_evidence_gives_priors() {
        let (mut d, ids) = tree();
        let mut batch_d = d.clone();
        let batch = run_batch(&mut batch_d, &[], &RunOptions::default()).unwrap();
        let msg = run_message_passing(&mut d, &[]).unwrap();
        assert!(msg.report.max_abs_diff(&batch.report.marginals) < 1e-15);
        let r = msg.report.marginal(ids[0]).unwrap();
        assert!((r[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn message_passing_rejects_non_forest() {
        let mut d = BeliefDiagram::new();
        let a = d.add_node("a", ["0", "1"]).unwrap();
        let b = d.add_node("b", ["0", "1"]).unwrap();
        let c = d.add_node("c", ["0", "1"]).unwrap();
        d.set_cpt(c, &[a, b], vec![0.5; 8]).unwrap();
        assert_eq!(
            run_message_passing(&mut d, &[]).unwrap_err(),
            SchedulerError::NotAForest
        );
    }

    #[test]
    fn strategies_agree_on_tree() {
        let (d, ids) = tree();
        let ev = [
            EvidenceAssertion::new(ids[3], 1),
            EvidenceAssertion::new(ids[4], 0),
        ];
        let mut d1 = d.clone();
        let mut d2 = d.clone();
        let mut d3 = d.clone();
        let batch = run_batch(&mut d1, &ev, &RunOptions::default()).unwrap();
        let msg = run_message_passing(&mut d2, &ev).unwrap();
        let pri = run_priority(&mut d3, &ev).unwrap();
        assert!(msg.report.max_abs_diff(&batch.report.marginals) < 1e-12);
        assert!(pri.report.max_abs_diff(&batch.report.marginals) < 1e-12);
        assert_eq!(
            batch.report.diagnostics.reversals,
            msg.report.diagnostics.reversals
        );
    }

    #[test]
    fn likelihood_to_a_newly_observed_parent_is_dropped() {
        let (d, ids) = tree();
        // The leaf's likelihood is still queued when b is absorbed.
        let ev = [
            EvidenceAssertion::new(ids[3], 0),
            EvidenceAssertion::new(ids[2], 1),
        ];
        let mut d1 = d.clone();
        let mut d2 = d.clone();
        let batch = run_batch(&mut d1, &ev, &RunOptions::default()).unwrap();
        let pri = run_priority(&mut d2, &ev).unwrap();
        assert!(pri.report.max_abs_diff(&batch.report.marginals) < 1e-12);
        let log = pri.trace.render(&d2);
        assert!(!log.contains("MSG kind=likelihood from=leaf to=b"), "{log}");
    }
}
