//! Weighted longest paths over the dependency DAG.
//!
//! Both searches are single DP passes in reverse topological order (vertex
//! storage order is topological). Ties between equal-length paths resolve
//! to the lexicographically smallest (line, kind, copy) sequence, so output
//! is deterministic and golden-testable.

use std::collections::BTreeSet;
use std::collections::HashMap;

use super::{DependencyDag, VertexKind};
use crate::cycles::Cy;
use crate::model::MachineModel;
use crate::parse::Kernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    CriticalPath,
    LcdCycle,
}

/// One vertex on a reported path with its latency contribution: the
/// outgoing edge weight, or (for the critical path's last vertex) the
/// vertex's own latency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathStep {
    pub line: u32,
    pub copy: u8,
    pub kind: VertexKind,
    pub annotation: Cy,
}

/// A critical path or a cyclic loop-carried dependency.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub steps: Vec<PathStep>,
    pub total_latency: Cy,
    pub kind: PathKind,
}

impl PathResult {
    pub fn lines(&self) -> Vec<u32> {
        self.steps.iter().map(|s| s.line).collect()
    }

    fn line_set(&self) -> BTreeSet<(u32, VertexKind)> {
        self.steps.iter().map(|s| (s.line, s.kind)).collect()
    }
}

#[derive(Clone, Copy)]
struct Best {
    total: Cy,
    /// Edge index taken next, or `None` to stop here.
    next: Option<usize>,
}

/// The critical path: the maximal-latency path through a single-copy DAG,
/// counting each vertex's outgoing edge weight and the final vertex's own
/// latency. An empty DAG yields an empty path of zero cycles.
pub fn critical_path(dag: &DependencyDag) -> PathResult {
    let n = dag.vertices.len();
    if n == 0 {
        return PathResult {
            steps: Vec::new(),
            total_latency: Cy::ZERO,
            kind: PathKind::CriticalPath,
        };
    }

    let mut best: Vec<Best> = Vec::with_capacity(n);
    for _ in 0..n {
        best.push(Best {
            total: Cy::ZERO,
            next: None,
        });
    }
    for v in (0..n).rev() {
        // Stopping contributes the vertex's own latency.
        let mut b = Best {
            total: dag.vertices[v].terminal_latency,
            next: None,
        };
        for &e in &dag.succ[v] {
            let edge = &dag.edges[e];
            let cand = edge.weight + best[edge.to].total;
            if cand > b.total || (cand == b.total && prefer_edge(dag, e, b.next)) {
                b = Best {
                    total: cand,
                    next: Some(e),
                };
            }
        }
        best[v] = b;
    }

    let mut start = 0usize;
    for v in 1..n {
        let better = best[v].total > best[start].total
            || (best[v].total == best[start].total
                && dag.vertices[v].key() < dag.vertices[start].key());
        if better {
            start = v;
        }
    }

    let mut steps = Vec::new();
    let mut v = start;
    loop {
        match best[v].next {
            Some(e) => {
                let edge = &dag.edges[e];
                steps.push(step(dag, v, edge.weight));
                v = edge.to;
            }
            None => {
                steps.push(step(dag, v, dag.vertices[v].terminal_latency));
                break;
            }
        }
    }
    PathResult {
        total_latency: best[start].total,
        steps,
        kind: PathKind::CriticalPath,
    }
}

/// On equal totals, prefer stopping (a prefix is lexicographically smaller),
/// and among continuations the smaller next-vertex key.
fn prefer_edge(dag: &DependencyDag, cand: usize, current: Option<usize>) -> bool {
    match current {
        None => false,
        Some(cur) => {
            let ck = dag.vertices[dag.edges[cand].to].key();
            let nk = dag.vertices[dag.edges[cur].to].key();
            ck < nk
        }
    }
}

fn step(dag: &DependencyDag, v: usize, annotation: Cy) -> PathStep {
    let vx = &dag.vertices[v];
    PathStep {
        line: vx.line,
        copy: vx.copy,
        kind: vx.kind,
        annotation,
    }
}

/// Loop-carried dependencies of the kernel.
///
/// Builds a two-copy DAG and, for every instruction form, searches the
/// longest path from its copy-1 vertex to its copy-2 duplicate. Each hit is
/// one cyclic dependency, annotated with edge weights including the
/// backedge. Duplicated rotations of the same cycle collapse to the one
/// starting at the smallest line. Result is sorted longest first.
pub fn find_lcds(kernel: &Kernel, model: &MachineModel) -> Vec<PathResult> {
    let dag = super::build_dag(kernel, model, 2);
    find_lcds_in(&dag)
}

pub(crate) fn find_lcds_in(dag: &DependencyDag) -> Vec<PathResult> {
    let n = dag.vertices.len();
    // Pair each copy-1 instruction vertex with its copy-2 duplicate.
    let mut duplicates: HashMap<u32, usize> = HashMap::new();
    for v in 0..n {
        let vx = &dag.vertices[v];
        if vx.copy == 2 && vx.kind == VertexKind::Instruction {
            duplicates.insert(vx.line, v);
        }
    }

    let mut found: Vec<PathResult> = Vec::new();
    let mut seen: Vec<BTreeSet<(u32, VertexKind)>> = Vec::new();

    for source in 0..n {
        let vx = &dag.vertices[source];
        if vx.copy != 1 || vx.kind != VertexKind::Instruction {
            continue;
        }
        let Some(&target) = duplicates.get(&vx.line) else {
            continue;
        };
        let Some(path) = longest_path_to(dag, source, target) else {
            continue;
        };
        let set = path.line_set();
        if seen.contains(&set) {
            continue;
        }
        seen.push(set);
        found.push(path);
    }

    found.sort_by(|a, b| {
        b.total_latency
            .cmp(&a.total_latency)
            .then_with(|| a.lines().cmp(&b.lines()))
    });
    found
}

/// Longest path from `source` to `target`, or `None` when unreachable.
/// The returned steps exclude the target (the duplicate of the source);
/// annotations are the edge weights along the path, backedge included.
fn longest_path_to(dag: &DependencyDag, source: usize, target: usize) -> Option<PathResult> {
    let n = dag.vertices.len();
    let mut best: Vec<Option<Best>> = vec![None; n];
    best[target] = Some(Best {
        total: Cy::ZERO,
        next: None,
    });
    for v in (source..target).rev() {
        let mut b: Option<Best> = None;
        for &e in &dag.succ[v] {
            let edge = &dag.edges[e];
            if edge.to > target {
                continue;
            }
            let Some(tail) = best[edge.to] else {
                continue;
            };
            let cand = edge.weight + tail.total;
            let take = match b {
                None => true,
                Some(cur) => {
                    cand > cur.total
                        || (cand == cur.total && prefer_edge(dag, e, cur.next))
                }
            };
            if take {
                b = Some(Best {
                    total: cand,
                    next: Some(e),
                });
            }
        }
        best[v] = b;
    }

    let head = best[source]?;
    let mut steps = Vec::new();
    let mut v = source;
    while v != target {
        let e = best[v].and_then(|b| b.next).expect("path must reach target");
        let edge = &dag.edges[e];
        steps.push(step(dag, v, edge.weight));
        v = edge.to;
    }
    Some(PathResult {
        steps,
        total_latency: head.total,
        kind: PathKind::LcdCycle,
    })
}

/// Per-line CP/LCD annotations for the report table. Load vertices merge
/// into their instruction's line, so column sums equal the path totals.
#[derive(Debug, Clone, Default)]
pub struct LineMarks {
    pub lcd: HashMap<u32, Cy>,
    pub cp: HashMap<u32, Cy>,
}

pub fn mark_report_paths(cp: &PathResult, lcd: Option<&PathResult>) -> LineMarks {
    let mut marks = LineMarks::default();
    for s in &cp.steps {
        *marks.cp.entry(s.line).or_insert(Cy::ZERO) += s.annotation;
    }
    if let Some(lcd) = lcd {
        for s in &lcd.steps {
            *marks.lcd.entry(s.line).or_insert(Cy::ZERO) += s.annotation;
        }
    }
    marks
}
