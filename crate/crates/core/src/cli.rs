//! Command-line interface: `analyze`, `bench-gen`, and `db-import`.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::bench::{generate_bench, import_measurements, parse_measurements, BenchMode};
use crate::graph::export_dot;
use crate::model::{load_model, store_model};
use crate::parse::{parse_file, Isa};
use crate::report::{parse_structured, render_structured, render_table, Region};
use crate::{analyze, load_arch, AnalysisConfig};

#[derive(Parser)]
#[command(
    name = "incore",
    version,
    about = "Static throughput, critical-path, and loop-carried-dependency analysis of assembly loop kernels"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze the marked kernel of an assembly file.
    Analyze {
        /// Assembly file (compiler output with byte markers).
        file: PathBuf,
        /// Bundled model name (tx2, clx, zen) or a model file path.
        #[arg(long)]
        arch: String,
        /// Source ISA; detected from the file when omitted.
        #[arg(long)]
        isa: Option<Isa>,
        /// High-level iterations per assembly iteration.
        #[arg(long, default_value_t = 1)]
        unroll: u32,
        /// Write the dependency graph as DOT to this path ("-" for stdout).
        #[arg(long, value_name = "PATH")]
        export_graph: Option<PathBuf>,
        /// Analyze a 1-based line range `a:b` instead of byte markers.
        #[arg(long, value_name = "A:B")]
        lines: Option<String>,
        /// Output format.
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Generate a latency or throughput microbenchmark for one form.
    BenchGen {
        /// An example instance of the form, e.g. "fadd d0, d1, d2".
        instruction: String,
        /// Chain instances (latency) or keep them independent (throughput).
        #[arg(long)]
        mode: BenchMode,
        /// ISA of the example instruction.
        #[arg(long)]
        isa: Isa,
        /// Instances per loop iteration.
        #[arg(long, default_value_t = 8)]
        repeat: u32,
        /// Output path; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Import measured latency/throughput records into a machine model.
    DbImport {
        /// Measurement records, one `mnemonic-signature-metric: value` per line.
        records: PathBuf,
        /// Bundled model name or model file path to update.
        #[arg(long)]
        arch: String,
        /// Apply conflicting values instead of only logging them.
        #[arg(long)]
        force: bool,
        /// Where to write the updated model; defaults to the --arch path.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Validate that a structured report parses (for downstream tooling).
    CheckReport {
        /// A report produced with `analyze --format structured`.
        file: PathBuf,
    },
}

fn parse_line_range(spec: &str) -> Result<Region, String> {
    let (a, b) = spec
        .split_once(':')
        .ok_or_else(|| format!("bad line range `{spec}` (expected a:b)"))?;
    let a: u32 = a.trim().parse().map_err(|_| format!("bad line number `{a}`"))?;
    let b: u32 = b.trim().parse().map_err(|_| format!("bad line number `{b}`"))?;
    if a == 0 || b < a {
        return Err(format!("bad line range `{spec}`"));
    }
    Ok(Region::Lines(a, b))
}

/// Run the CLI; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(msg) => {
            eprintln!("incore: {msg}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Analyze {
            file,
            arch,
            isa,
            unroll,
            export_graph,
            lines,
            format,
        } => {
            let model = load_arch(&arch).map_err(|e| e.to_string())?;
            let text = std::fs::read_to_string(&file)
                .map_err(|e| format!("cannot read `{}`: {e}", file.display()))?;
            let region = match lines {
                Some(spec) => parse_line_range(&spec)?,
                None => Region::Markers,
            };
            let analysis = analyze(&text, isa, &model, AnalysisConfig { unroll, region })
                .map_err(|e| e.to_string())?;
            match format {
                Format::Text => print!("{}", render_table(&analysis.report)),
                Format::Structured => println!("{}", render_structured(&analysis.report)),
            }
            if let Some(path) = export_graph {
                let dot = export_dot(&analysis.dag, Some(&analysis.cp), analysis.lcds.first());
                if path.as_os_str() == "-" {
                    print!("{dot}");
                } else {
                    std::fs::write(&path, dot)
                        .map_err(|e| format!("cannot write `{}`: {e}", path.display()))?;
                }
            }
            Ok(())
        }
        Command::BenchGen {
            instruction,
            mode,
            isa,
            repeat,
            out,
        } => {
            let forms = parse_file(&instruction, isa);
            let template = forms
                .first()
                .filter(|f| f.is_instruction())
                .ok_or_else(|| format!("`{instruction}` is not an instruction"))?;
            if let Some(w) = &template.unrecognized {
                return Err(format!("cannot parse template: {w}"));
            }
            let kernel =
                generate_bench(template, mode, isa, repeat).map_err(|e| e.to_string())?;
            match out {
                Some(path) => std::fs::write(&path, &kernel.body)
                    .map_err(|e| format!("cannot write `{}`: {e}", path.display()))?,
                None => print!("{}", kernel.body),
            }
            eprintln!(
                "generated {} benchmark for {} ({} instances, registers: {})",
                kernel.mode.name(),
                kernel.target,
                kernel.repeat,
                kernel.registers_used.join(", ")
            );
            Ok(())
        }
        Command::DbImport {
            records,
            arch,
            force,
            out,
        } => {
            let model = load_arch(&arch).map_err(|e| e.to_string())?;
            let text = std::fs::read_to_string(&records)
                .map_err(|e| format!("cannot read `{}`: {e}", records.display()))?;
            let source = records.display().to_string();
            let parsed = parse_measurements(&text, &source).map_err(|e| e.to_string())?;
            let (updated, log) =
                import_measurements(&model, &parsed, force).map_err(|e| e.to_string())?;
            for event in &log {
                println!("{event}");
            }
            let out_path = match out {
                Some(p) => p,
                None => {
                    let p = PathBuf::from(&arch);
                    if !p.exists() {
                        return Err(format!(
                            "`{arch}` is a bundled model; pass --out to write the updated copy"
                        ));
                    }
                    p
                }
            };
            store_model(&updated, &out_path).map_err(|e| e.to_string())?;
            // Round-trip sanity: the stored file must load back.
            load_model(&out_path).map_err(|e| e.to_string())?;
            eprintln!("wrote {}", out_path.display());
            Ok(())
        }
        Command::CheckReport { file } => {
            let text = std::fs::read_to_string(&file)
                .map_err(|e| format!("cannot read `{}`: {e}", file.display()))?;
            let report = parse_structured(&text).map_err(|e| e.to_string())?;
            println!(
                "ok: {} kernel, {} lines, {}",
                report.arch_name,
                report.lines.len(),
                report.summary_line()
            );
            Ok(())
        }
    }
}
