//! Analysis orchestration and the report data model.
//!
//! [`analyze`] runs the full pipeline — parse, kernel extraction, pressure
//! accumulation, critical path, LCD detection — and assembles an
//! [`AnalysisReport`] with one row per kernel line plus the three summary
//! predictions: the throughput lower bound, the loop-carried-dependency
//! expectation, and the critical-path upper bound.

mod structured;
mod table;

pub use structured::{parse_structured, render_structured, StructuredError};
pub use table::render_table;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cycles::Cy;
use crate::graph::{
    build_dag, critical_path, find_lcds, mark_report_paths, DependencyDag, PathResult,
};
use crate::model::MachineModel;
use crate::parse::{detect_isa, find_markers, parse_file, DetectError, Isa, Kernel, MarkerError};
use crate::throughput::{kernel_pressure, throughput_bound};

/// Version stamp of the structured report serialization.
pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Which part of the file to analyze.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// The byte-marked kernel (exactly one region expected).
    Markers,
    /// An explicit 1-based inclusive line range.
    Lines(u32, u32),
}

#[derive(Debug, Clone, Copy)]
pub struct AnalysisConfig {
    pub unroll: u32,
    pub region: Region,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            unroll: 1,
            region: Region::Markers,
        }
    }
}

/// One kernel line in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineReport {
    pub line_number: u32,
    pub source: String,
    /// Aligned with the report's port list.
    pub pressure: Vec<Cy>,
    pub lcd: Option<Cy>,
    pub cp: Option<Cy>,
}

/// One detected cyclic loop-carried dependency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LcdSummary {
    pub total_latency: Cy,
    pub lines: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub format_version: u32,
    pub arch_name: String,
    pub isa: Isa,
    pub ports: Vec<String>,
    pub unroll: u32,
    pub lines: Vec<LineReport>,
    pub port_sums: Vec<Cy>,
    /// Busiest-port cycles per assembly iteration.
    pub tp_per_asm_iter: Cy,
    pub tp_per_src_iter: Cy,
    pub cp_total: Cy,
    pub cp_per_src_iter: Cy,
    /// Zero when no loop-carried dependency exists.
    pub lcd_total: Cy,
    pub lcd_per_src_iter: Cy,
    pub has_lcd: bool,
    /// All detected cyclic dependencies, longest first.
    pub lcds: Vec<LcdSummary>,
    pub warnings: Vec<String>,
}

impl AnalysisReport {
    /// The closing summary: `TP 2.46 | LCD 18.00 | CP 25.00 cy/it`.
    pub fn summary_line(&self) -> String {
        let lcd = if self.has_lcd {
            self.lcd_per_src_iter.render(2)
        } else {
            "none".to_string()
        };
        format!(
            "TP {} | LCD {} | CP {} cy/it",
            self.tp_per_src_iter.render(2),
            lcd,
            self.cp_per_src_iter.render(2)
        )
    }

    /// Bracket-ordering notes: TP <= LCD <= CP is the expected shape when an
    /// LCD exists. Deviations are reported, never silently dropped.
    pub fn anomalies(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.has_lcd {
            return out;
        }
        if self.lcd_per_src_iter > self.cp_per_src_iter {
            out.push(format!(
                "anomaly: LCD {} exceeds CP {}; bracket ordering TP <= LCD <= CP violated",
                self.lcd_per_src_iter.render(2),
                self.cp_per_src_iter.render(2)
            ));
        }
        if self.tp_per_src_iter > self.lcd_per_src_iter {
            out.push(format!(
                "note: LCD {} lies below the TP bound {}; dependencies do not limit this kernel and the throughput bound applies",
                self.lcd_per_src_iter.render(2),
                self.tp_per_src_iter.render(2)
            ));
        }
        out
    }
}

/// Everything one analysis produces; the graph and paths stay available for
/// DOT export.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: AnalysisReport,
    pub dag: DependencyDag,
    pub cp: PathResult,
    pub lcds: Vec<PathResult>,
}

/// Errors that abort an analysis.
#[derive(Debug)]
pub enum AnalysisError {
    Detect(DetectError),
    Markers(MarkerError),
    EmptyRange(u32, u32),
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::Detect(e) => e.fmt(f),
            AnalysisError::Markers(e) => e.fmt(f),
            AnalysisError::EmptyRange(a, b) => {
                write!(f, "line range {a}:{b} contains no instructions")
            }
        }
    }
}

impl std::error::Error for AnalysisError {}

impl From<MarkerError> for AnalysisError {
    fn from(e: MarkerError) -> Self {
        AnalysisError::Markers(e)
    }
}

impl From<DetectError> for AnalysisError {
    fn from(e: DetectError) -> Self {
        AnalysisError::Detect(e)
    }
}

/// Run the full analysis of an assembly listing.
pub fn analyze(
    text: &str,
    isa: Option<Isa>,
    model: &MachineModel,
    config: AnalysisConfig,
) -> Result<Analysis, AnalysisError> {
    let isa = match isa {
        Some(isa) => isa,
        None => detect_isa(text)?,
    };
    let forms = parse_file(text, isa);
    let kernel = match config.region {
        Region::Markers => find_markers(&forms, isa)?,
        Region::Lines(a, b) => {
            let body: Vec<_> = forms
                .iter()
                .filter(|f| f.line_number >= a && f.line_number <= b)
                .cloned()
                .collect();
            if !body.iter().any(|f| f.is_instruction()) {
                return Err(AnalysisError::EmptyRange(a, b));
            }
            Kernel { forms: body, isa }
        }
    };
    Ok(analyze_kernel(&kernel, model, config.unroll))
}

/// Analyze an already-extracted kernel.
pub fn analyze_kernel(kernel: &Kernel, model: &MachineModel, unroll: u32) -> Analysis {
    let unroll = unroll.max(1);
    let pressures = kernel_pressure(kernel, model);
    let dag = build_dag(kernel, model, 1);
    let cp = critical_path(&dag);
    let lcds = find_lcds(kernel, model);
    let marks = mark_report_paths(&cp, lcds.first());

    let lines: Vec<LineReport> = kernel
        .forms
        .iter()
        .zip(&pressures.per_line)
        .map(|(form, (line, pressure))| LineReport {
            line_number: *line,
            source: form.source.trim_end().to_string(),
            pressure: pressure.clone(),
            lcd: marks.lcd.get(line).copied(),
            cp: marks.cp.get(line).copied(),
        })
        .collect();

    let mut warnings = pressures.warnings.clone();
    warnings.extend(model.lint());
    if !kernel.forms.iter().any(|f| f.is_instruction()) {
        warnings.push("kernel contains no instructions".to_string());
    }

    let unroll_cy = Cy::int(unroll as i64);
    let tp_asm = pressures.total.iter().copied().fold(Cy::ZERO, Cy::max);
    let lcd_head = lcds.first().map(|p| p.total_latency).unwrap_or(Cy::ZERO);
    let report = AnalysisReport {
        format_version: REPORT_FORMAT_VERSION,
        arch_name: model.arch_name.clone(),
        isa: kernel.isa,
        ports: model.ports.clone(),
        unroll,
        lines,
        port_sums: pressures.total.clone(),
        tp_per_asm_iter: tp_asm,
        tp_per_src_iter: throughput_bound(&pressures.total, unroll),
        cp_total: cp.total_latency,
        cp_per_src_iter: cp.total_latency / unroll_cy,
        lcd_total: lcd_head,
        lcd_per_src_iter: lcd_head / unroll_cy,
        has_lcd: !lcds.is_empty(),
        lcds: lcds
            .iter()
            .map(|p| LcdSummary {
                total_latency: p.total_latency,
                lines: p.lines(),
            })
            .collect(),
        warnings,
    };
    Analysis {
        report,
        dag,
        cp,
        lcds,
    }
}
