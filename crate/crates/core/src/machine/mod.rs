//! The abstract P(CEK*)S machine and the generic fixed-point engine shared
//! by every analysis built on it.

mod step;

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::concrete::InjectError;
use crate::domain::{AState, Policy};
use crate::syntax::Expr;

pub(crate) use step::{accumulate, apply, moves, Outcome};
pub use step::{a_atomic_eval, ainject, astep, astep_seq, Diagnostics, UnboundVar};

/// A transition system over finite abstract states.
pub trait Transfer {
    type State: Clone + Ord;

    fn initial(&self) -> Self::State;

    fn successors(&self, s: &Self::State, diag: &mut Diagnostics) -> BTreeSet<Self::State>;
}

/// A set of explored states, numbered in discovery order, with the
/// successor edges between them.
#[derive(Clone, Debug)]
pub struct StateSet<S> {
    states: Vec<Arc<S>>,
    index: BTreeMap<Arc<S>, usize>,
    succ: Vec<Vec<usize>>,
    pub diagnostics: Diagnostics,
}

impl<S: Ord> StateSet<S> {
    fn new() -> Self {
        StateSet { states: Vec::new(), index: BTreeMap::new(), succ: Vec::new(), diagnostics: Diagnostics::default() }
    }

    /// Index of `s`, inserting it if new. The flag is true for new states.
    fn intern(&mut self, s: S) -> (usize, bool) {
        if let Some(&i) = self.index.get(&s) {
            return (i, false);
        }
        let i = self.states.len();
        let s = Arc::new(s);
        self.states.push(s.clone());
        self.index.insert(s, i);
        self.succ.push(Vec::new());
        (i, true)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn get(&self, i: usize) -> &S {
        &self.states[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &S> {
        self.states.iter().map(|s| &**s)
    }

    pub fn index_of(&self, s: &S) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn contains(&self, s: &S) -> bool {
        self.index.contains_key(s)
    }

    pub fn successors(&self, i: usize) -> &[usize] {
        &self.succ[i]
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    /// Same states, regardless of discovery order and edges.
    pub fn same_states(&self, other: &StateSet<S>) -> bool {
        self.len() == other.len() && self.index.keys().all(|s| other.index.contains_key(s))
    }
}

/// Least set containing the initial state and closed under successors,
/// by a FIFO worklist.
pub fn reach_with<T: Transfer>(t: &T) -> StateSet<T::State> {
    let mut out = StateSet::new();
    let mut queue = VecDeque::from([out.intern(t.initial()).0]);
    while let Some(i) = queue.pop_front() {
        let succs = t.successors(&out.states[i].clone(), &mut out.diagnostics);
        for s in succs {
            let (j, new) = out.intern(s);
            if new {
                queue.push_back(j);
            }
            out.succ[i].push(j);
        }
    }
    out
}

/// `f̂(ξ) = {initial} ∪ {ς′ | ς ∈ ξ, ς ⇝ ς′}`.
pub fn transfer<T: Transfer>(t: &T, xi: &BTreeSet<T::State>) -> BTreeSet<T::State> {
    let mut diag = Diagnostics::default();
    let mut out = BTreeSet::from([t.initial()]);
    for s in xi {
        out.extend(t.successors(s, &mut diag));
    }
    out
}

/// Result of Kleene iteration: the fixed point and the size of each
/// iterate `f̂ⁿ(∅)`, starting with `n = 0`.
#[derive(Clone, Debug)]
pub struct Kleene<S> {
    pub states: StateSet<S>,
    pub chain: Vec<usize>,
}

impl<S> Kleene<S> {
    /// The least `n` with `f̂ⁿ(∅) = f̂ⁿ⁺¹(∅)`.
    pub fn stable_at(&self) -> usize {
        self.chain.len() - 2
    }
}

/// `lfp(f̂)` as the limit of `∅, f̂(∅), f̂²(∅), …`. Successors of a state are
/// computed once and reused by later iterates.
pub fn lfp_with<T: Transfer>(t: &T) -> Kleene<T::State> {
    let mut out = StateSet::new();
    let mut memo: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut xi: BTreeSet<usize> = BTreeSet::new();
    let mut chain = alloc::vec![0];
    loop {
        let mut next = BTreeSet::from([out.intern(t.initial()).0]);
        for &i in &xi {
            if !memo.contains_key(&i) {
                let succs = t.successors(&out.states[i].clone(), &mut out.diagnostics);
                let ids: Vec<usize> = succs.into_iter().map(|s| out.intern(s).0).collect();
                out.succ[i] = ids.clone();
                memo.insert(i, ids);
            }
            next.extend(memo[&i].iter().copied());
        }
        chain.push(next.len());
        if next == xi {
            break;
        }
        xi = next;
    }
    Kleene { states: out, chain }
}

/// The plain (uncounted, weak-update) abstract interpreter.
#[derive(Clone, Debug)]
pub struct Uncounted {
    policy: Policy,
    init: AState,
}

impl Uncounted {
    pub fn new(e: &Arc<Expr>, policy: Policy) -> Result<Uncounted, InjectError> {
        Ok(Uncounted { init: ainject(e, &policy)?, policy })
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }
}

impl Transfer for Uncounted {
    type State = AState;

    fn initial(&self) -> AState {
        self.init.clone()
    }

    fn successors(&self, s: &AState, diag: &mut Diagnostics) -> BTreeSet<AState> {
        astep(&self.policy, s, diag)
    }
}

/// `R̂`: abstract states reachable from the injection of `e`.
pub fn reach(e: &Arc<Expr>, policy: Policy) -> Result<StateSet<AState>, InjectError> {
    Ok(reach_with(&Uncounted::new(e, policy)?))
}

pub fn lfp_transfer(e: &Arc<Expr>, policy: Policy) -> Result<Kleene<AState>, InjectError> {
    Ok(lfp_with(&Uncounted::new(e, policy)?))
}
