//! Register-dependency DAG construction, critical path, and loop-carried
//! dependency detection.
//!
//! Construction rules:
//! 1. every instruction form becomes a vertex;
//! 2. from each destination register, edges run to every later form reading
//!    it, stopping at the first write to that register;
//! 3. edges carry the producing latency of their source;
//! 4. when an address register of a split memory form has a producer, an
//!    intermediate load vertex takes the edge and feeds the compute part
//!    with the load latency.
//!
//! Loop-carried dependencies come from a two-copy DAG: a path from a form
//! in copy 1 to its duplicate in copy 2 is a cycle closed across one
//! iteration boundary. In that doubled graph a store's address writeback
//! originates from an address-generation sub-vertex fed only by address
//! registers, since the stored data never gates the address update. The
//! single-copy graph keeps each store as one vertex, which makes the
//! critical path compose through it — a deliberately conservative upper
//! bound, at the price of sometimes overstating it.

mod dot;
mod paths;

pub use dot::export_dot;
pub use paths::{critical_path, find_lcds, mark_report_paths, LineMarks, PathKind, PathResult, PathStep};

use crate::cycles::Cy;
use crate::model::MachineModel;
use crate::parse::Kernel;
use crate::resolve::{effective_writeback, resolve_form, ResolvedForm};

/// Vertex flavor: the instruction itself, the split-out memory read, or a
/// store's address-generation part (doubled graphs only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VertexKind {
    Load,
    Agu,
    Instruction,
}

#[derive(Debug, Clone)]
pub struct DepVertex {
    pub line: u32,
    /// 1 or 2; the second copy exists only in doubled graphs.
    pub copy: u8,
    pub kind: VertexKind,
    /// Weight of this vertex's main-destination edges.
    pub latency_out: Cy,
    /// Contribution when the vertex terminates the critical path: the
    /// form-level latency (load + compute for split forms).
    pub terminal_latency: Cy,
    /// Weight of address-writeback edges.
    pub writeback_latency: Cy,
}

impl DepVertex {
    /// Deterministic ordering key: line, loads before their instruction,
    /// then copy.
    pub(crate) fn key(&self) -> (u8, u32, VertexKind) {
        (self.copy, self.line, self.kind)
    }
}

/// Why an edge exists; the register name is canonical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeKind {
    Register(String),
    Writeback(String),
    /// Load vertex feeding its own instruction's compute part.
    LoadFeed,
}

#[derive(Debug, Clone)]
pub struct DepEdge {
    pub from: usize,
    pub to: usize,
    pub weight: Cy,
    pub kind: EdgeKind,
}

/// A latency-weighted dependency DAG. Vertices are stored in topological
/// order (every edge goes from a lower to a higher index).
#[derive(Debug, Clone, Default)]
pub struct DependencyDag {
    pub vertices: Vec<DepVertex>,
    pub edges: Vec<DepEdge>,
    succ: Vec<Vec<usize>>,
}

impl DependencyDag {
    pub fn successors(&self, v: usize) -> impl Iterator<Item = &DepEdge> {
        self.succ[v].iter().map(|&e| &self.edges[e])
    }

    pub fn from_parts(vertices: Vec<DepVertex>, edges: Vec<DepEdge>) -> DependencyDag {
        let mut succ = vec![Vec::new(); vertices.len()];
        for (i, e) in edges.iter().enumerate() {
            succ[e.from].push(i);
        }
        let dag = DependencyDag {
            vertices,
            edges,
            succ,
        };
        dag.assert_acyclic();
        dag
    }

    /// Structural acyclicity check: topological storage order means every
    /// edge must point forward.
    pub fn assert_acyclic(&self) {
        for e in &self.edges {
            assert!(
                e.from < e.to,
                "dependency graph has a backward edge {} -> {}",
                e.from,
                e.to
            );
        }
    }

    /// Indices of instruction vertices, in order.
    pub fn instruction_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertices.len()).filter(|&v| self.vertices[v].kind == VertexKind::Instruction)
    }
}

/// Abstract edge produced by the register scan, before load and AGU
/// vertices get their final indices.
struct ScanEdge {
    from_seq: usize,
    from_agu: bool,
    to_seq: usize,
    to_kind: VertexKind,
    weight: Cy,
    kind: EdgeKind,
}

/// Store instructions that update an address register: the writeback output
/// depends only on the address inputs.
fn store_with_writeback(r: &ResolvedForm) -> bool {
    !r.flow.mem_stores.is_empty() && r.flow.destinations.iter().any(|d| d.writeback)
}

/// Build the dependency DAG over `copies` back-to-back copies of the kernel.
pub fn build_dag(kernel: &Kernel, model: &MachineModel, copies: u8) -> DependencyDag {
    let resolved: Vec<ResolvedForm> = kernel
        .instructions()
        .map(|f| resolve_form(f, model, kernel.isa))
        .collect();

    // The scan sequence: all instructions, repeated per copy. Doubled
    // graphs are only built for cycle detection, where the sound store
    // semantics (AGU sub-vertex) applies.
    let lcd_semantics = copies >= 2;
    let n = resolved.len();
    let total = n * copies as usize;
    let seq = |idx: usize| -> &ResolvedForm { &resolved[idx % n] };

    let mut scan_edges: Vec<ScanEdge> = Vec::new();
    let mut needs_load = vec![false; total];
    let mut needs_agu = vec![false; total];

    for i in 0..total {
        let producer = seq(i);
        let split_producer = lcd_semantics && store_with_writeback(producer);
        for dest in &producer.flow.destinations {
            let weight = if dest.writeback {
                effective_writeback(producer)
            } else {
                producer.compute_latency
            };
            let kind = if dest.writeback {
                EdgeKind::Writeback(dest.reg.clone())
            } else {
                EdgeKind::Register(dest.reg.clone())
            };
            let from_agu = split_producer && dest.writeback;
            if from_agu {
                needs_agu[i] = true;
            }
            for j in i + 1..total {
                let consumer = seq(j);
                let reads = consumer.flow.sources.contains(&dest.reg);
                if reads {
                    // Address uses of a split form route through its load
                    // vertex; address uses of a writeback store route to its
                    // AGU part; data uses go to the instruction itself.
                    let via_load = consumer.is_split && consumer.addr_sources.contains(&dest.reg);
                    let via_agu = lcd_semantics
                        && store_with_writeback(consumer)
                        && consumer.addr_sources.contains(&dest.reg);
                    let direct = if consumer.is_split {
                        consumer.compute_sources().contains(&dest.reg)
                    } else if via_agu {
                        false
                    } else {
                        true
                    };
                    if via_load {
                        needs_load[j] = true;
                        scan_edges.push(ScanEdge {
                            from_seq: i,
                            from_agu,
                            to_seq: j,
                            to_kind: VertexKind::Load,
                            weight,
                            kind: kind.clone(),
                        });
                    }
                    if via_agu {
                        needs_agu[j] = true;
                        scan_edges.push(ScanEdge {
                            from_seq: i,
                            from_agu,
                            to_seq: j,
                            to_kind: VertexKind::Agu,
                            weight,
                            kind: kind.clone(),
                        });
                    }
                    if direct {
                        scan_edges.push(ScanEdge {
                            from_seq: i,
                            from_agu,
                            to_seq: j,
                            to_kind: VertexKind::Instruction,
                            weight,
                            kind: kind.clone(),
                        });
                    }
                }
                let writes = consumer
                    .flow
                    .destinations
                    .iter()
                    .any(|d| d.reg == dest.reg);
                if writes {
                    break;
                }
            }
        }
    }

    // Materialize vertices in topological order: per sequence slot, the
    // load/AGU vertices (when needed) immediately precede their instruction.
    let mut load_vid = vec![usize::MAX; total];
    let mut agu_vid = vec![usize::MAX; total];
    let mut instr_vid = vec![usize::MAX; total];
    let mut vertices = Vec::with_capacity(total);
    for j in 0..total {
        let r = seq(j);
        let copy = (j / n) as u8 + 1;
        if needs_load[j] {
            let load_latency = r.load_latency.unwrap_or(model.default_load_latency);
            load_vid[j] = vertices.len();
            vertices.push(DepVertex {
                line: r.line_number,
                copy,
                kind: VertexKind::Load,
                latency_out: load_latency,
                terminal_latency: load_latency,
                writeback_latency: load_latency,
            });
        }
        if needs_agu[j] {
            let wb = effective_writeback(r);
            agu_vid[j] = vertices.len();
            vertices.push(DepVertex {
                line: r.line_number,
                copy,
                kind: VertexKind::Agu,
                latency_out: wb,
                terminal_latency: wb,
                writeback_latency: wb,
            });
        }
        instr_vid[j] = vertices.len();
        vertices.push(DepVertex {
            line: r.line_number,
            copy,
            kind: VertexKind::Instruction,
            latency_out: r.compute_latency,
            terminal_latency: r.latency,
            writeback_latency: effective_writeback(r),
        });
    }

    let mut edges = Vec::with_capacity(scan_edges.len() + total);
    for se in scan_edges {
        let from = if se.from_agu {
            agu_vid[se.from_seq]
        } else {
            instr_vid[se.from_seq]
        };
        let to = match se.to_kind {
            VertexKind::Load => load_vid[se.to_seq],
            VertexKind::Agu => agu_vid[se.to_seq],
            VertexKind::Instruction => instr_vid[se.to_seq],
        };
        edges.push(DepEdge {
            from,
            to,
            weight: se.weight,
            kind: se.kind,
        });
    }
    for j in 0..total {
        if needs_load[j] {
            let load_latency = seq(j).load_latency.unwrap_or(model.default_load_latency);
            edges.push(DepEdge {
                from: load_vid[j],
                to: instr_vid[j],
                weight: load_latency,
                kind: EdgeKind::LoadFeed,
            });
        }
    }

    DependencyDag::from_parts(vertices, edges)
}

impl ResolvedForm {
    /// Register sources feeding the compute part of a split form (i.e. not
    /// used for address generation), or all sources otherwise.
    fn compute_sources(&self) -> std::collections::BTreeSet<String> {
        if !self.is_split {
            return self.flow.sources.clone();
        }
        self.flow
            .sources
            .difference(&self.addr_sources)
            .cloned()
            .collect()
    }
}
