//! Checks that an abstract state graph simulates a bounded concrete
//! exploration: every concrete step from a covered state is matched by an
//! abstract step to a state covering the target.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::concrete::{CState, Exploration};
use crate::machine::StateSet;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Failure {
    /// No reachable abstract state covers this concrete state.
    Uncovered { concrete: usize },
    /// The abstract state covers `from`, but none of its successors covers `to`.
    Unmatched { from: usize, to: usize, abstract_state: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SimulationReport {
    pub concrete_states: usize,
    pub concrete_edges: usize,
    pub abstract_states: usize,
    /// (concrete edge, covering abstract state) pairs examined.
    pub checked: usize,
    pub failures: Vec<Failure>,
}

impl SimulationReport {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks the simulation property of `abs` against `conc` under the
/// abstraction `alpha` and order `leq`.
pub fn check_simulation<S: Ord>(
    conc: &Exploration,
    abs: &StateSet<S>,
    alpha: impl Fn(&CState) -> S,
    leq: impl Fn(&S, &S) -> bool,
) -> SimulationReport {
    let alphas: Vec<S> = conc.states.iter().map(&alpha).collect();
    // covers[i]: abstract states above α of concrete state i.
    let covers: Vec<BTreeSet<usize>> =
        alphas.iter().map(|a| (0..abs.len()).filter(|&j| leq(a, abs.get(j))).collect()).collect();

    let mut report = SimulationReport {
        concrete_states: conc.states.len(),
        concrete_edges: conc.edges.len(),
        abstract_states: abs.len(),
        ..SimulationReport::default()
    };
    for (i, c) in covers.iter().enumerate() {
        if c.is_empty() {
            report.failures.push(Failure::Uncovered { concrete: i });
        }
    }
    for edge in &conc.edges {
        for &a in &covers[edge.from] {
            report.checked += 1;
            if !abs.successors(a).iter().any(|b| covers[edge.to].contains(b)) {
                report.failures.push(Failure::Unmatched { from: edge.from, to: edge.to, abstract_state: a });
            }
        }
    }
    report
}
