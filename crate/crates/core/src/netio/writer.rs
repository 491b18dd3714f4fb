use std::fmt::Write as _;

use crate::model::{Axis, BeliefDiagram, NodeId, NodeStatus, PotentialTable};

/// The node's table with axes in declaration order: own outcome (unless
/// absorbed), then parents in parent-list order.
fn canonical_table(d: &BeliefDiagram, id: NodeId) -> (Vec<Axis>, PotentialTable) {
    let node = d.node(id).expect("id from this diagram");
    let parent_axes: Vec<Axis> = node
        .parents
        .iter()
        .map(|&p| Axis::new(p, d.node(p).map(|n| n.card()).unwrap_or(0)))
        .collect();
    let mut axes = Vec::with_capacity(parent_axes.len() + 1);
    if !node.status.is_absorbed() {
        axes.push(Axis::new(id, node.card()));
    }
    axes.extend(parent_axes.iter().copied());
    let table = node
        .table
        .reorder(axes)
        .unwrap_or_else(|_| node.table.clone());
    (parent_axes, table)
}

/// Serializes `d` in the network text format. Floats use the shortest
/// representation that reads back exactly.
pub fn write_network(d: &BeliefDiagram) -> String {
    let mut out = String::new();
    for node in d.nodes() {
        let _ = write!(out, "node {} :", node.name);
        for o in &node.outcomes {
            let _ = write!(out, " {o}");
        }
        if let NodeStatus::Observed {
            outcome,
            absorbed: true,
        } = node.status
        {
            let _ = write!(out, " @observed = {}", node.outcomes[outcome]);
        }
        out.push('\n');
    }
    for node in d.nodes() {
        let (parent_axes, table) = canonical_table(d, node.id);
        let _ = write!(out, "cpt {}", node.name);
        if !node.parents.is_empty() {
            out.push_str(" |");
            for &p in &node.parents {
                let _ = write!(out, " {}", d.name(p));
            }
        }
        out.push_str(" {\n");
        let configs: usize = parent_axes.iter().map(|a| a.card).product();
        let width = table.len() / configs.max(1);
        let mut config = vec![0; parent_axes.len()];
        for c in 0..configs {
            out.push_str("  [");
            for (k, &idx) in config.iter().enumerate() {
                if k > 0 {
                    out.push(' ');
                }
                out.push_str(&d.node(parent_axes[k].node).expect("parent").outcomes[idx]);
            }
            out.push_str("] :");
            for x in 0..width {
                let _ = write!(out, " {:?}", table.entries()[x * configs + c]);
            }
            out.push_str(" ;\n");
            crate::model::next_config(&mut config, &parent_axes);
        }
        out.push_str("}\n");
    }
    let pending: Vec<_> = d
        .nodes()
        .filter_map(|n| match n.status {
            NodeStatus::Observed {
                outcome,
                absorbed: false,
            } => Some((n.name.as_str(), n.outcomes[outcome].as_str())),
            _ => None,
        })
        .collect();
    if !pending.is_empty() {
        out.push_str("evidence {\n");
        for (name, outcome) in pending {
            let _ = writeln!(out, "  {name} = {outcome} ;");
        }
        out.push_str("}\n");
    }
    out
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz rendering. Evidence nodes are shaded.
pub fn export_dot(d: &BeliefDiagram) -> String {
    let mut out = String::from("digraph belief {\n");
    for node in d.nodes() {
        if node.status.is_unobserved() {
            let _ = writeln!(out, "  {};", dot_id(&node.name));
        } else {
            let _ = writeln!(
                out,
                "  {} [style=filled, fillcolor=gray];",
                dot_id(&node.name)
            );
        }
    }
    for (a, b) in d.arcs() {
        let _ = writeln!(out, "  {} -> {};", dot_id(d.name(a)), dot_id(d.name(b)));
    }
    out.push_str("}\n");
    out
}
