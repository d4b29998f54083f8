use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use pceks_core::concrete::{explore, Exploration};
use pceks_core::domain::{abstract_state, AState, Policy};
use pceks_core::flow::{flows_to, iteration_bound, lfp_collapsed, FlowFact};
use pceks_core::machine::{lfp_with, reach, Diagnostics, Uncounted};
use pceks_core::simulation::{check_simulation, Failure, SimulationReport};
use pceks_core::singleton::{abstract_counted, mhp_in, reach_counted, self_mhp_in, Counted};
use pceks_core::syntax::{parse_program, Label, Program};
use sha2::{Digest, Sha256};

use crate::config::{Mode, RunConfig};
use crate::dot::write_dot;
use crate::report::{
    AnalysisReport, ConfigEcho, Counts, DeadEndRow, FlowRow, LabelRow, MhpRow, ProgramInfo, SoundnessRow, StuckRow,
    Timings,
};
use crate::RunError;

/// Counterexamples listed per failed simulation check.
const MAX_FAILURES: usize = 20;

pub struct Loaded {
    pub path: String,
    pub source: String,
    pub program: Program,
}

pub fn load(path: &Path) -> Result<Loaded, RunError> {
    let source =
        std::fs::read_to_string(path).map_err(|source| RunError::Io { path: path.display().to_string(), source })?;
    load_source(&path.display().to_string(), source)
}

pub fn load_source(path: &str, source: String) -> Result<Loaded, RunError> {
    let program = parse_program(&source).map_err(|error| RunError::Parse { path: path.to_string(), error })?;
    Ok(Loaded { path: path.to_string(), source, program })
}

pub fn run(config: &RunConfig) -> Result<AnalysisReport, RunError> {
    config.validate()?;
    let started = Instant::now();
    let loaded = load(&config.input)?;
    run_loaded(config, &loaded, started)
}

/// Runs `config` on an already parsed program; `config.input` is only
/// echoed.
pub fn run_loaded(config: &RunConfig, loaded: &Loaded, started: Instant) -> Result<AnalysisReport, RunError> {
    config.validate()?;
    let policy = config.policy()?;
    let parsed = Instant::now();
    let e = loaded.program.root.clone();
    let spans = Spans(&loaded.program);

    let mut report = AnalysisReport {
        program: ProgramInfo {
            path: loaded.path.clone(),
            digest: format!("sha256:{}", hex::encode(Sha256::digest(loaded.source.as_bytes()))),
            labels: loaded.program.label_count(),
        },
        config: ConfigEcho {
            mode: config.mode,
            k: config.k,
            tid: config.tid,
            pool_n: config.pool_n,
            max_states: config.max_states,
            max_depth: config.max_depth,
        },
        counts: Counts { states: 0, edges: 0, truncated: false, finals: None, iterations: None, iteration_bound: None },
        flows: Vec::new(),
        mhp: Vec::new(),
        self_mhp: Vec::new(),
        stuck: Vec::new(),
        dead_ends: Vec::new(),
        soundness: Vec::new(),
        timings: None,
    };
    if config.mode != Mode::Explore {
        report.counts.iteration_bound = Some(u64::try_from(iteration_bound(&e, &policy)).unwrap_or(u64::MAX));
    }

    let mut exploration = None;
    match config.mode {
        Mode::Explore => {
            let x = explore(&e, config.max_states, config.max_depth)?;
            report.counts.states = x.states.len();
            report.counts.edges = x.edges.len();
            report.counts.truncated = x.truncated;
            report.counts.finals = Some(x.finals().len());
            for (a, b) in x.co_live() {
                if a == b {
                    report.self_mhp.push(spans.label(a));
                } else {
                    report.mhp.push(spans.pair(a, b));
                }
            }
            report.stuck = x
                .stuck
                .iter()
                .map(|s| StuckRow { state: s.state, thread: s.tid.to_string(), reason: s.reason.to_string() })
                .collect();
            exploration = Some(x);
        }
        Mode::Analyze => {
            let k = lfp_with(&Uncounted::new(&e, policy)?);
            report.counts.states = k.states.len();
            report.counts.edges = k.states.edge_count();
            report.counts.iterations = Some(k.chain.len() as u64 - 1);
            report.flows = spans.flows(flows_to(k.states.iter()));
            report.mhp = mhp_in(&k.states).into_iter().map(|(a, b)| spans.pair(a, b)).collect();
            report.self_mhp = self_mhp_in(&k.states).into_iter().map(|l| spans.label(l)).collect();
            report.dead_ends = spans.dead_ends(&k.states.diagnostics);
        }
        Mode::AnalyzeCounted => {
            let k = lfp_with(&Counted::new(&e, policy)?);
            report.counts.states = k.states.len();
            report.counts.edges = k.states.edge_count();
            report.counts.iterations = Some(k.chain.len() as u64 - 1);
            report.flows = spans.flows(flows_to(k.states.iter().map(|s| &s.base)));
            report.mhp = mhp_in(&k.states).into_iter().map(|(a, b)| spans.pair(a, b)).collect();
            report.self_mhp = self_mhp_in(&k.states).into_iter().map(|l| spans.label(l)).collect();
            report.dead_ends = spans.dead_ends(&k.states.diagnostics);
        }
        Mode::AnalyzeCollapsed => {
            let c = lfp_collapsed(&e, policy)?;
            report.counts.states = 1;
            report.counts.iterations = Some(c.iterations as u64);
            report.flows = spans.flows(flows_to([&c.state]));
            report.dead_ends = spans.dead_ends(&c.diagnostics);
        }
        Mode::SoundnessCheck => {
            let x = explore(&e, config.max_states, config.max_depth)?;
            report.counts.states = x.states.len();
            report.counts.edges = x.edges.len();
            report.counts.truncated = x.truncated;
            report.counts.finals = Some(x.finals().len());
            report.soundness = soundness(&e, &x, policy)?;
            exploration = Some(x);
        }
    }

    if let Some(path) = &config.dot {
        let x = match exploration {
            Some(x) => x,
            None => explore(&e, config.max_states, config.max_depth)?,
        };
        write_dot(path, &x).map_err(|source| RunError::Io { path: path.display().to_string(), source })?;
    }
    if config.timings {
        let done = Instant::now();
        report.timings = Some(Timings {
            parse_ms: (parsed - started).as_secs_f64() * 1e3,
            analysis_ms: (done - parsed).as_secs_f64() * 1e3,
        });
    }
    Ok(report)
}

/// Simulation of the concrete graph by the uncounted and the counted
/// analyses.
pub fn soundness(e: &Arc<pceks_core::syntax::Expr>, x: &Exploration, policy: Policy) -> Result<Vec<SoundnessRow>, RunError> {
    let plain = reach(e, policy)?;
    let r = check_simulation(x, &plain, |s| abstract_state(s, &policy), AState::leq);
    let mut rows = vec![soundness_row("uncounted", &r, x)];
    let counted = reach_counted(e, policy)?;
    let r = check_simulation(x, &counted, |s| abstract_counted(s, &policy), |a, b| a.leq(b));
    rows.push(soundness_row("counted", &r, x));
    Ok(rows)
}

fn soundness_row(analysis: &str, r: &SimulationReport, x: &Exploration) -> SoundnessRow {
    let failures = r
        .failures
        .iter()
        .take(MAX_FAILURES)
        .map(|f| match f {
            Failure::Uncovered { concrete } => format!("uncovered concrete state {concrete}: {}", x.states[*concrete]),
            Failure::Unmatched { from, to, abstract_state } => format!(
                "abstract state {abstract_state} covers concrete {from} but no successor covers {to}: {} => {}",
                x.states[*from], x.states[*to]
            ),
        })
        .collect();
    SoundnessRow {
        analysis: analysis.to_string(),
        holds: r.holds(),
        abstract_states: r.abstract_states,
        checked: r.checked,
        failures,
    }
}

struct Spans<'a>(&'a Program);

impl Spans<'_> {
    fn span(&self, l: Label) -> String {
        self.0.span(l).map(|s| s.to_string()).unwrap_or_else(|| "-".into())
    }

    fn label(&self, l: Label) -> LabelRow {
        LabelRow { label: l.0, span: self.span(l) }
    }

    fn pair(&self, a: Label, b: Label) -> MhpRow {
        MhpRow { a: a.0, b: b.0, a_span: self.span(a), b_span: self.span(b) }
    }

    fn flows(&self, facts: BTreeSet<FlowFact>) -> Vec<FlowRow> {
        facts.into_iter().map(|f| FlowRow { site: f.site.0, span: self.span(f.site), value: f.value.to_string() }).collect()
    }

    fn dead_ends(&self, d: &Diagnostics) -> Vec<DeadEndRow> {
        d.dead_ends.iter().map(|(&l, &count)| DeadEndRow { label: l.0, span: self.span(l), count }).collect()
    }
}
