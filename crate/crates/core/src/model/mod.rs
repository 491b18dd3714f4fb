//! Belief diagrams: nodes, outcome spaces, potential tables and the
//! structural queries every transformation relies on.

mod table;

pub use table::{config_count, next_config, Axis, PotentialTable, Projection, TableError};

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::fmt;

/// Index of a node in its diagram. Ids are assigned in insertion order and
/// double as the deterministic tie-break everywhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Default cap on the number of outcomes per node.
pub const DEFAULT_MAX_OUTCOMES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeStatus {
    Unobserved,
    /// The node's value is known. Once `absorbed`, the table has no own axis
    /// and is a likelihood over the parents.
    Observed {
        outcome: usize,
        absorbed: bool,
    },
}

impl NodeStatus {
    pub fn is_absorbed(&self) -> bool {
        matches!(self, NodeStatus::Observed { absorbed: true, .. })
    }

    pub fn is_unobserved(&self) -> bool {
        matches!(self, NodeStatus::Unobserved)
    }

    pub fn observed_outcome(&self) -> Option<usize> {
        match *self {
            NodeStatus::Observed { outcome, .. } => Some(outcome),
            NodeStatus::Unobserved => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NodeRecord {
    pub id: NodeId,
    pub name: String,
    pub outcomes: Vec<String>,
    pub parents: Vec<NodeId>,
    pub table: PotentialTable,
    pub status: NodeStatus,
}

impl NodeRecord {
    pub fn card(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcome_index(&self, label: &str) -> Option<usize> {
        self.outcomes.iter().position(|o| o == label)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TopologyClass {
    Forest,
    PolytreeNotForest,
    MultiplyConnected,
}

impl TopologyClass {
    pub fn is_singly_connected(self) -> bool {
        !matches!(self, TopologyClass::MultiplyConnected)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TopologyClass::Forest => "forest",
            TopologyClass::PolytreeNotForest => "polytree",
            TopologyClass::MultiplyConnected => "multiply-connected",
        }
    }
}

impl fmt::Display for TopologyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A violated structural invariant, attached to the node that violates it.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub node: NodeId,
    pub kind: DiagnosticKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DiagnosticKind {
    DuplicateName,
    NoOutcomes,
    TooManyOutcomes {
        count: usize,
        cap: usize,
    },
    DuplicateOutcome(String),
    DuplicateParent(NodeId),
    SelfParent,
    UnknownParent(NodeId),
    /// The node lies on a directed cycle.
    Cycle,
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    AxisMismatch,
    InvalidEntry,
    /// Some parent configuration has no positive entry.
    ZeroSlice {
        configuration: usize,
    },
    ObservedOutOfRange,
    EvidenceHasChildren,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node {}: {}", self.node, self.kind)
    }
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagnosticKind::DuplicateName => write!(f, "duplicate node name"),
            DiagnosticKind::NoOutcomes => write!(f, "node has no outcomes"),
            DiagnosticKind::TooManyOutcomes { count, cap } => {
                write!(f, "{count} outcomes exceeds the cap of {cap}")
            }
            DiagnosticKind::DuplicateOutcome(o) => write!(f, "duplicate outcome label `{o}`"),
            DiagnosticKind::DuplicateParent(p) => write!(f, "parent {p} listed twice"),
            DiagnosticKind::SelfParent => write!(f, "node lists itself as a parent"),
            DiagnosticKind::UnknownParent(p) => write!(f, "unknown parent {p}"),
            DiagnosticKind::Cycle => write!(f, "node lies on a directed cycle"),
            DiagnosticKind::DimensionMismatch { expected, found } => {
                write!(f, "table has {found} entries, expected {expected}")
            }
            DiagnosticKind::AxisMismatch => {
                write!(f, "table axes do not match the node and its parents")
            }
            DiagnosticKind::InvalidEntry => write!(f, "table entry is negative or not finite"),
            DiagnosticKind::ZeroSlice { configuration } => {
                write!(
                    f,
                    "parent configuration {configuration} has no positive entry"
                )
            }
            DiagnosticKind::ObservedOutOfRange => write!(f, "observed outcome out of range"),
            DiagnosticKind::EvidenceHasChildren => write!(f, "absorbed evidence node has children"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown node `{0}`")]
    UnknownName(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("diagram contains a directed cycle")]
    CycleDetected,
    #[error(transparent)]
    Table(#[from] TableError),
}

/// A directed acyclic graph of discrete variables, each carrying a potential
/// table conditioned on its parents.
#[derive(Clone, Debug)]
pub struct BeliefDiagram {
    nodes: Vec<NodeRecord>,
    by_name: HashMap<String, NodeId>,
    max_outcomes: usize,
}

impl Default for BeliefDiagram {
    fn default() -> Self {
        Self::new()
    }
}

impl BeliefDiagram {
    pub fn new() -> Self {
        Self::with_max_outcomes(DEFAULT_MAX_OUTCOMES)
    }

    pub fn with_max_outcomes(max_outcomes: usize) -> Self {
        BeliefDiagram {
            nodes: Vec::new(),
            by_name: HashMap::new(),
            max_outcomes,
        }
    }

    pub fn max_outcomes(&self) -> usize {
        self.max_outcomes
    }

    /// Adds a parentless node with a uniform table.
    pub fn add_node<S: Into<String>>(
        &mut self,
        name: impl Into<String>,
        outcomes: impl IntoIterator<Item = S>,
    ) -> Result<NodeId, ModelError> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(ModelError::DuplicateNode(name));
        }
        let id = NodeId(self.nodes.len());
        let outcomes: Vec<String> = outcomes.into_iter().map(Into::into).collect();
        let table = if outcomes.is_empty() {
            PotentialTable::scalar(1.0)
        } else {
            PotentialTable::ones(vec![Axis::new(id, outcomes.len())])?
        };
        self.by_name.insert(name.clone(), id);
        self.nodes.push(NodeRecord {
            id,
            name,
            outcomes,
            parents: Vec::new(),
            table,
            status: NodeStatus::Unobserved,
        });
        Ok(id)
    }

    /// Sets the parents of `id` and a table over (own outcome, parents...)
    /// given as row-major entries.
    pub fn set_cpt(
        &mut self,
        id: NodeId,
        parents: &[NodeId],
        entries: Vec<f64>,
    ) -> Result<(), ModelError> {
        let mut axes = vec![Axis::new(id, self.node(id)?.card())];
        for &p in parents {
            axes.push(Axis::new(p, self.node(p)?.card()));
        }
        let table = PotentialTable::new(axes, entries)?;
        self.set_node_table(id, parents.to_vec(), table)
    }

    /// Replaces a node's parents and table without checking them against
    /// each other. Use [`validate`](Self::validate) afterwards.
    pub fn set_node_table(
        &mut self,
        id: NodeId,
        parents: Vec<NodeId>,
        table: PotentialTable,
    ) -> Result<(), ModelError> {
        let node = self.node_mut(id)?;
        node.parents = parents;
        node.table = table;
        Ok(())
    }

    pub fn set_status(&mut self, id: NodeId, status: NodeStatus) -> Result<(), ModelError> {
        self.node_mut(id)?.status = status;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Result<&NodeRecord, ModelError> {
        self.nodes.get(id.0).ok_or(ModelError::UnknownNode(id))
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> Result<&mut NodeRecord, ModelError> {
        self.nodes.get_mut(id.0).ok_or(ModelError::UnknownNode(id))
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &NodeRecord> {
        self.nodes.iter()
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn id_of(&self, name: &str) -> Result<NodeId, ModelError> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| ModelError::UnknownName(name.to_string()))
    }

    pub fn name(&self, id: NodeId) -> &str {
        self.nodes.get(id.0).map(|n| n.name.as_str()).unwrap_or("?")
    }

    pub fn parents(&self, id: NodeId) -> &[NodeId] {
        self.nodes
            .get(id.0)
            .map(|n| n.parents.as_slice())
            .unwrap_or(&[])
    }

    /// Children of `id` in ascending id order.
    pub fn children(&self, id: NodeId) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.parents.contains(&id))
            .map(|n| n.id)
            .collect()
    }

    /// Every arc (parent, child), ordered by child then parent-list position.
    pub fn arcs(&self) -> Vec<(NodeId, NodeId)> {
        self.nodes
            .iter()
            .flat_map(|n| n.parents.iter().map(move |&p| (p, n.id)))
            .collect()
    }

    pub fn arc_set(&self) -> BTreeSet<(NodeId, NodeId)> {
        self.arcs().into_iter().collect()
    }

    pub fn has_arc(&self, from: NodeId, to: NodeId) -> bool {
        self.parents(to).contains(&from)
    }

    pub fn max_in_degree(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| n.parents.len())
            .max()
            .unwrap_or(0)
    }

    /// Absorbed evidence nodes that still have an incoming arc.
    pub fn connected_evidence(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.status.is_absorbed() && !n.parents.is_empty())
            .map(|n| n.id)
            .collect()
    }

    /// Table axes an unobserved (or not yet absorbed) node must carry.
    fn expected_axes(&self, node: &NodeRecord) -> Vec<Axis> {
        let mut axes = Vec::with_capacity(node.parents.len() + 1);
        if !node.status.is_absorbed() {
            axes.push(Axis::new(node.id, node.card()));
        }
        for &p in &node.parents {
            if let Some(pn) = self.nodes.get(p.0) {
                axes.push(Axis::new(p, pn.card()));
            }
        }
        axes
    }

    /// Checks every structural invariant. An empty result means the diagram
    /// is well formed.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut push = |node: NodeId, kind: DiagnosticKind| out.push(Diagnostic { node, kind });
        let mut seen_names: HashMap<&str, NodeId> = HashMap::new();
        for node in &self.nodes {
            let id = node.id;
            if seen_names.insert(node.name.as_str(), id).is_some() {
                push(id, DiagnosticKind::DuplicateName);
            }
            if node.outcomes.is_empty() {
                push(id, DiagnosticKind::NoOutcomes);
            }
            if node.outcomes.len() > self.max_outcomes {
                push(
                    id,
                    DiagnosticKind::TooManyOutcomes {
                        count: node.outcomes.len(),
                        cap: self.max_outcomes,
                    },
                );
            }
            for (k, o) in node.outcomes.iter().enumerate() {
                if node.outcomes[..k].contains(o) {
                    push(id, DiagnosticKind::DuplicateOutcome(o.clone()));
                }
            }
            let mut parents_ok = true;
            for (k, &p) in node.parents.iter().enumerate() {
                if p == id {
                    push(id, DiagnosticKind::SelfParent);
                    parents_ok = false;
                } else if p.0 >= self.nodes.len() {
                    push(id, DiagnosticKind::UnknownParent(p));
                    parents_ok = false;
                }
                if node.parents[..k].contains(&p) {
                    push(id, DiagnosticKind::DuplicateParent(p));
                    parents_ok = false;
                }
            }
            if let Some(outcome) = node.status.observed_outcome() {
                if outcome >= node.card() {
                    push(id, DiagnosticKind::ObservedOutOfRange);
                }
            }
            if !node.table.is_nonnegative_finite() {
                push(id, DiagnosticKind::InvalidEntry);
            }
            if parents_ok {
                let expected = self.expected_axes(node);
                let expected_len = config_count(&expected);
                if expected_len != node.table.len() {
                    push(
                        id,
                        DiagnosticKind::DimensionMismatch {
                            expected: expected_len,
                            found: node.table.len(),
                        },
                    );
                } else if expected != node.table.axes() {
                    push(id, DiagnosticKind::AxisMismatch);
                } else if !node.status.is_absorbed() && node.table.is_nonnegative_finite() {
                    let card = node.card().max(1);
                    let inner = node.table.len() / card;
                    let entries = node.table.entries();
                    for rest in 0..inner {
                        if (0..card).all(|x| entries[x * inner + rest] <= 0.0) {
                            push(
                                id,
                                DiagnosticKind::ZeroSlice {
                                    configuration: rest,
                                },
                            );
                            break;
                        }
                    }
                }
            }
        }
        for node in &self.nodes {
            if node.status.is_absorbed() && !self.children(node.id).is_empty() {
                out.push(Diagnostic {
                    node: node.id,
                    kind: DiagnosticKind::EvidenceHasChildren,
                });
            }
        }
        for id in self.cyclic_nodes() {
            out.push(Diagnostic {
                node: id,
                kind: DiagnosticKind::Cycle,
            });
        }
        out
    }

    /// Kahn's algorithm with the smallest ready id first. Returns the order
    /// and the ids left over when a cycle blocks progress. Arcs from unknown
    /// parents are ignored.
    fn kahn(&self) -> (Vec<NodeId>, Vec<NodeId>) {
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for node in &self.nodes {
            let mut distinct: Vec<usize> = node
                .parents
                .iter()
                .map(|p| p.0)
                .filter(|&p| p < n)
                .collect();
            distinct.sort_unstable();
            distinct.dedup();
            for p in distinct {
                indegree[node.id.0] += 1;
                children[p].push(node.id.0);
            }
        }
        let mut ready: BinaryHeap<Reverse<usize>> =
            (0..n).filter(|&i| indegree[i] == 0).map(Reverse).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse(i)) = ready.pop() {
            order.push(NodeId(i));
            for &c in &children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(Reverse(c));
                }
            }
        }
        let left = (0..n).filter(|&i| indegree[i] > 0).map(NodeId).collect();
        (order, left)
    }

    /// Nodes that lie on some directed cycle.
    fn cyclic_nodes(&self) -> Vec<NodeId> {
        let (_, blocked) = self.kahn();
        // Blocked nodes are on a cycle or downstream of one; keep the former.
        blocked
            .into_iter()
            .filter(|&id| {
                self.parents(id)
                    .iter()
                    .any(|&p| p.0 < self.nodes.len() && self.reaches(id, p, None))
                    || self.parents(id).contains(&id)
            })
            .collect()
    }

    /// A list in which every node follows all of its indirect predecessors.
    /// Ties go to the smaller node id.
    pub fn ordered_list(&self) -> Result<Vec<NodeId>, ModelError> {
        let (order, left) = self.kahn();
        if left.is_empty() {
            Ok(order)
        } else {
            Err(ModelError::CycleDetected)
        }
    }

    fn reaches(&self, from: NodeId, to: NodeId, excluding: Option<(NodeId, NodeId)>) -> bool {
        let n = self.nodes.len();
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for node in &self.nodes {
            for &p in &node.parents {
                if p.0 < n && Some((p, node.id)) != excluding {
                    children[p.0].push(node.id.0);
                }
            }
        }
        let mut seen = vec![false; n];
        let mut stack = vec![from.0];
        while let Some(i) = stack.pop() {
            for &c in &children[i] {
                if c == to.0 {
                    return true;
                }
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        false
    }

    /// Whether a directed path of at least one arc leads from `from` to `to`,
    /// optionally ignoring one arc.
    pub fn has_directed_path(
        &self,
        from: NodeId,
        to: NodeId,
        excluding_arc: Option<(NodeId, NodeId)>,
    ) -> Result<bool, ModelError> {
        self.node(from)?;
        self.node(to)?;
        Ok(self.reaches(from, to, excluding_arc))
    }

    /// Indirect predecessors (ancestors, parents included) of `id`.
    pub fn ancestors(&self, id: NodeId) -> BTreeSet<NodeId> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<NodeId> = self.parents(id).to_vec();
        while let Some(p) = stack.pop() {
            if out.insert(p) {
                stack.extend_from_slice(self.parents(p));
            }
        }
        out
    }

    /// Classifies the arc structure. Assumes the diagram is acyclic.
    pub fn classify_topology(&self) -> TopologyClass {
        self.classify_topology_within(|_| true)
    }

    /// Classifies the sub-diagram induced by the nodes `keep` accepts.
    pub fn classify_topology_within(&self, keep: impl Fn(NodeId) -> bool) -> TopologyClass {
        let arcs: Vec<(NodeId, NodeId)> = self
            .arcs()
            .into_iter()
            .filter(|&(a, b)| keep(a) && keep(b))
            .collect();
        let mut indegree = vec![0usize; self.nodes.len()];
        for &(_, b) in &arcs {
            indegree[b.0] += 1;
        }
        if indegree.iter().all(|&k| k <= 1) {
            return TopologyClass::Forest;
        }
        // Union-find over the undirected skeleton.
        let mut parent: Vec<usize> = (0..self.nodes.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (a, b) in arcs {
            let ra = find(&mut parent, a.0);
            let rb = find(&mut parent, b.0);
            if ra == rb {
                return TopologyClass::MultiplyConnected;
            }
            parent[ra] = rb;
        }
        TopologyClass::PolytreeNotForest
    }
}
