//! Graphviz export of the dependency graph.
//!
//! Vertices on the longest loop-carried dependency are filled orange, the
//! backedge included; the critical path is drawn with dashed pink edges and
//! outlined nodes. Node labels are line numbers, edge labels latency cycles.

use std::collections::BTreeSet;
use std::fmt::Write;

use super::{DependencyDag, PathResult, VertexKind};

fn node_id(dag: &DependencyDag, v: usize) -> String {
    let vx = &dag.vertices[v];
    match vx.kind {
        VertexKind::Instruction => format!("l{}", vx.line),
        VertexKind::Load => format!("l{}ld", vx.line),
        VertexKind::Agu => format!("l{}agu", vx.line),
    }
}

/// Render the single-copy DAG as a DOT digraph, highlighting the critical
/// path and the longest cyclic loop-carried dependency (drawn with its
/// backedge closing the cycle).
pub fn export_dot(
    dag: &DependencyDag,
    cp: Option<&PathResult>,
    lcd: Option<&PathResult>,
) -> String {
    let cp_nodes: BTreeSet<(u32, VertexKind)> = cp
        .map(|p| p.steps.iter().map(|s| (s.line, s.kind)).collect())
        .unwrap_or_default();
    let cp_pairs: BTreeSet<((u32, VertexKind), (u32, VertexKind))> = cp
        .map(|p| {
            p.steps
                .windows(2)
                .map(|w| ((w[0].line, w[0].kind), (w[1].line, w[1].kind)))
                .collect()
        })
        .unwrap_or_default();
    let lcd_nodes: BTreeSet<(u32, VertexKind)> = lcd
        .map(|p| p.steps.iter().map(|s| (s.line, s.kind)).collect())
        .unwrap_or_default();

    let mut out = String::from("digraph deps {\n");
    out.push_str("  rankdir=TB;\n  node [shape=circle, fontsize=10];\n");

    for v in 0..dag.vertices.len() {
        let vx = &dag.vertices[v];
        if vx.copy != 1 {
            continue;
        }
        let key = (vx.line, vx.kind);
        let label = match vx.kind {
            VertexKind::Instruction => format!("{}", vx.line),
            VertexKind::Load => format!("{}.ld", vx.line),
            VertexKind::Agu => format!("{}.agu", vx.line),
        };
        let mut attrs = vec![format!("label=\"{label}\"")];
        if lcd_nodes.contains(&key) {
            attrs.push("style=filled".to_string());
            attrs.push("fillcolor=orange".to_string());
        }
        if cp_nodes.contains(&key) {
            attrs.push("color=deeppink".to_string());
            attrs.push("penwidth=2".to_string());
        }
        let _ = writeln!(out, "  {} [{}];", node_id(dag, v), attrs.join(", "));
    }

    for e in &dag.edges {
        let from = &dag.vertices[e.from];
        let to = &dag.vertices[e.to];
        if from.copy != 1 || to.copy != 1 {
            continue;
        }
        let mut attrs = vec![format!("label=\"{}\"", e.weight.render(1))];
        if cp_pairs.contains(&((from.line, from.kind), (to.line, to.kind))) {
            attrs.push("color=deeppink".to_string());
            attrs.push("style=dashed".to_string());
        }
        let _ = writeln!(
            out,
            "  {} -> {} [{}];",
            node_id(dag, e.from),
            node_id(dag, e.to),
            attrs.join(", ")
        );
    }

    // Close the LCD cycle with its backedge.
    if let Some(lcd) = lcd {
        if let (Some(last), Some(first)) = (lcd.steps.last(), lcd.steps.first()) {
            let _ = writeln!(
                out,
                "  l{} -> l{} [label=\"{}\", color=orange, penwidth=2, constraint=false];",
                last.line,
                first.line,
                last.annotation.render(1)
            );
        }
    }

    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::super::tests::{kernel, tx2};
    use super::super::{build_dag, critical_path, find_lcds};
    use super::*;
    use crate::parse::Isa;

    #[test]
    fn empty_dag_renders_empty_digraph() {
        let dag = DependencyDag::from_parts(Vec::new(), Vec::new());
        let dot = export_dot(&dag, None, None);
        assert!(dot.starts_with("digraph deps {"));
        assert!(dot.ends_with("}\n"));
    }

    #[test]
    fn two_instruction_chain_has_labeled_edge() {
        let model = tx2();
        let k = kernel("fadd d1, d0, d9\nfadd d2, d1, d9", Isa::Aarch64);
        let dag = build_dag(&k, &model, 1);
        let dot = export_dot(&dag, None, None);
        assert!(dot.contains("l1 -> l2 [label=\"6.0\"]"), "{dot}");
    }

    #[test]
    fn lcd_nodes_are_orange_with_backedge() {
        let model = tx2();
        let k = kernel("fadd d1, d0, d9\nfadd d0, d1, d9", Isa::Aarch64);
        let dag = build_dag(&k, &model, 1);
        let cp = critical_path(&dag);
        let lcds = find_lcds(&k, &model);
        let dot = export_dot(&dag, Some(&cp), lcds.first());
        assert!(dot.contains("fillcolor=orange"));
        assert!(dot.contains("constraint=false"));
        assert!(dot.contains("deeppink"));
    }
}
