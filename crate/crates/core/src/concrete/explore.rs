use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::step::{inject, step_concurrent, InjectError, Stuck};
use super::{CState, Tid};
use crate::syntax::{Expr, Label};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// The thread that moved.
    pub tid: Tid,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StuckThread {
    pub state: usize,
    pub tid: Tid,
    pub reason: Stuck,
}

/// Bounded breadth-first state graph. State 0 is the injected state.
#[derive(Clone, Debug)]
pub struct Exploration {
    pub states: Vec<CState>,
    pub edges: Vec<Edge>,
    pub depth: Vec<usize>,
    /// Whether every successor of the state was recorded.
    pub expanded: Vec<bool>,
    pub stuck: Vec<StuckThread>,
    pub truncated: bool,
}

impl Exploration {
    /// Fully expanded states without successors: halted, deadlocked or stuck.
    pub fn finals(&self) -> Vec<usize> {
        let mut has_succ = alloc::vec![false; self.states.len()];
        for e in &self.edges {
            has_succ[e.from] = true;
        }
        (0..self.states.len()).filter(|&i| self.expanded[i] && !has_succ[i]).collect()
    }

    pub fn successors(&self, state: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.from == state)
    }

    /// Label pairs focused by two distinct live threads of one explored
    /// state, smaller label first. An equal pair means two threads at the
    /// same point.
    pub fn co_live(&self) -> BTreeSet<(Label, Label)> {
        let mut out = BTreeSet::new();
        for s in &self.states {
            let labels: Vec<Label> = s.threads.values().map(|c| c.focus.label()).collect();
            for (i, &a) in labels.iter().enumerate() {
                for &b in &labels[i + 1..] {
                    out.insert((a.min(b), a.max(b)));
                }
            }
        }
        out
    }
}

pub fn explore(e: &Arc<Expr>, max_states: usize, max_depth: usize) -> Result<Exploration, InjectError> {
    let init = inject(e)?;
    let mut out = Exploration {
        states: alloc::vec![init.clone()],
        edges: Vec::new(),
        depth: alloc::vec![0],
        expanded: alloc::vec![false],
        stuck: Vec::new(),
        truncated: false,
    };
    let mut index: BTreeMap<CState, usize> = BTreeMap::new();
    index.insert(init, 0);
    let mut queue = VecDeque::from([0usize]);

    while let Some(i) = queue.pop_front() {
        let steps = step_concurrent(&out.states[i]);
        for (tid, reason) in steps.stuck {
            out.stuck.push(StuckThread { state: i, tid, reason });
        }
        if out.depth[i] >= max_depth {
            if !steps.successors.is_empty() {
                out.truncated = true;
            } else {
                out.expanded[i] = true;
            }
            continue;
        }
        let mut complete = true;
        for succ in steps.successors {
            let to = match index.get(&succ.state) {
                Some(&j) => j,
                None if out.states.len() >= max_states => {
                    complete = false;
                    out.truncated = true;
                    continue;
                }
                None => {
                    let j = out.states.len();
                    index.insert(succ.state.clone(), j);
                    out.states.push(succ.state);
                    out.depth.push(out.depth[i] + 1);
                    out.expanded.push(false);
                    queue.push_back(j);
                    j
                }
            };
            out.edges.push(Edge { from: i, to, tid: succ.tid });
        }
        out.expanded[i] = complete;
    }
    Ok(out)
}
