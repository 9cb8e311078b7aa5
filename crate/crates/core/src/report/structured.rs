//! Machine-readable report serialization.
//!
//! JSON keyed by the field names of [`AnalysisReport`], with a
//! `format_version` stamp. Cycle values serialize as exact rational strings
//! (`"1/3"`), so parse(render(report)) == report holds without float loss.

use std::fmt;

use super::{AnalysisReport, REPORT_FORMAT_VERSION};

#[derive(Debug)]
pub enum StructuredError {
    Json(serde_json::Error),
    Version(u32),
}

impl fmt::Display for StructuredError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructuredError::Json(e) => write!(f, "structured report: {e}"),
            StructuredError::Version(v) => write!(
                f,
                "structured report has format version {v}, this build reads {REPORT_FORMAT_VERSION}"
            ),
        }
    }
}

impl std::error::Error for StructuredError {}

pub fn render_structured(report: &AnalysisReport) -> String {
    serde_json::to_string_pretty(report).expect("report serialization cannot fail")
}

pub fn parse_structured(text: &str) -> Result<AnalysisReport, StructuredError> {
    let report: AnalysisReport = serde_json::from_str(text).map_err(StructuredError::Json)?;
    if report.format_version != REPORT_FORMAT_VERSION {
        return Err(StructuredError::Version(report.format_version));
    }
    Ok(report)
}
