//! Analysis reports and their text and JSON renderings. The JSON layout is
//! documented in `docs/report-schema.md`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::{Format, Mode, TidKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub program: ProgramInfo,
    pub config: ConfigEcho,
    pub counts: Counts,
    pub flows: Vec<FlowRow>,
    pub mhp: Vec<MhpRow>,
    pub self_mhp: Vec<LabelRow>,
    pub stuck: Vec<StuckRow>,
    pub dead_ends: Vec<DeadEndRow>,
    pub soundness: Vec<SoundnessRow>,
    pub timings: Option<Timings>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramInfo {
    pub path: String,
    /// `sha256:` followed by the hex digest of the source text.
    pub digest: String,
    pub labels: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub mode: Mode,
    pub k: usize,
    pub tid: TidKind,
    pub pool_n: u32,
    pub max_states: usize,
    pub max_depth: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub states: usize,
    pub edges: usize,
    /// Concrete exploration hit a bound.
    pub truncated: bool,
    /// Concrete states with no successor.
    pub finals: Option<usize>,
    /// Passes of the fixed-point iteration.
    pub iterations: Option<u64>,
    /// Saturates at the largest 64-bit value.
    pub iteration_bound: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FlowRow {
    pub site: u32,
    pub span: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MhpRow {
    pub a: u32,
    pub b: u32,
    pub a_span: String,
    pub b_span: String,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LabelRow {
    pub label: u32,
    pub span: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StuckRow {
    pub state: usize,
    pub thread: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeadEndRow {
    pub label: u32,
    pub span: String,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoundnessRow {
    /// `uncounted` or `counted`.
    pub analysis: String,
    pub holds: bool,
    pub abstract_states: usize,
    pub checked: usize,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub parse_ms: f64,
    pub analysis_ms: f64,
}

impl AnalysisReport {
    pub fn sound(&self) -> bool {
        self.soundness.iter().all(|s| s.holds)
    }

    pub fn emit(&self, format: Format) -> String {
        match format {
            Format::Text => self.to_text(),
            Format::Json => self.to_json(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> serde_json::Result<AnalysisReport> {
        serde_json::from_str(text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        let _ = writeln!(out, "program   {} ({})", self.program.path, self.program.digest);
        let mode = serde_json::to_value(c.mode).expect("mode serializes");
        let tid = serde_json::to_value(c.tid).expect("tid serializes");
        let _ = writeln!(
            out,
            "config    mode={} k={} tid={} pool-n={} max-states={} max-depth={}",
            mode.as_str().unwrap_or_default(),
            c.k,
            tid.as_str().unwrap_or_default(),
            c.pool_n,
            c.max_states,
            c.max_depth
        );
        let n = &self.counts;
        let _ = write!(out, "states    {}  edges {}", n.states, n.edges);
        if n.truncated {
            out.push_str("  (truncated)");
        }
        if let Some(f) = n.finals {
            let _ = write!(out, "  finals {f}");
        }
        out.push('\n');
        if let Some(i) = n.iterations {
            let bound = n.iteration_bound.map(|b| b.to_string()).unwrap_or_else(|| "-".into());
            let _ = writeln!(out, "passes    {i} (bound {bound})");
        }
        if let Some(t) = &self.timings {
            let _ = writeln!(out, "time      parse {:.3} ms, analysis {:.3} ms", t.parse_ms, t.analysis_ms);
        }

        section(&mut out, "flows", self.flows.iter().map(|f| vec![format!("(flows {} {})", f.site, f.value), f.span.clone()]));
        section(
            &mut out,
            "may happen in parallel",
            self.mhp.iter().map(|m| vec![m.a.to_string(), m.a_span.clone(), m.b.to_string(), m.b_span.clone()]),
        );
        section(&mut out, "self-parallel", self.self_mhp.iter().map(|l| vec![l.label.to_string(), l.span.clone()]));
        section(&mut out, "stuck", self.stuck.iter().map(|s| vec![s.state.to_string(), s.thread.clone(), s.reason.clone()]));
        section(
            &mut out,
            "dead ends",
            self.dead_ends.iter().map(|d| vec![d.label.to_string(), d.span.clone(), d.count.to_string()]),
        );
        for s in &self.soundness {
            let verdict = if s.holds { "holds" } else { "FAILS" };
            let _ = writeln!(
                out,
                "\nsimulation ({}): {verdict}, {} abstract states, {} edge checks",
                s.analysis, s.abstract_states, s.checked
            );
            for f in &s.failures {
                let _ = writeln!(out, "  {f}");
            }
        }
        out
    }
}

/// A titled table with left-aligned columns; omitted when empty.
fn section(out: &mut String, title: &str, rows: impl Iterator<Item = Vec<String>>) {
    let rows: Vec<Vec<String>> = rows.collect();
    if rows.is_empty() {
        return;
    }
    let _ = writeln!(out, "\n{title} ({})", rows.len());
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols).map(|i| rows.iter().filter_map(|r| r.get(i)).map(|c| c.chars().count()).max().unwrap_or(0)).collect();
    for row in rows {
        out.push(' ');
        for (i, cell) in row.iter().enumerate() {
            if i + 1 == row.len() {
                let _ = write!(out, " {cell}");
            } else {
                let _ = write!(out, " {cell:<w$}", w = widths[i]);
            }
        }
        out.push('\n');
    }
}
