//! Cardinality counting of abstract thread ids, strong transitions for
//! threads known to be unique, and may-happen-in-parallel extraction.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use core::fmt;

use crate::concrete::{CState, InjectError};
use crate::domain::{abstract_state, AState, ATid, Policy};
use crate::machine::{ainject, apply, moves, reach, reach_with, Diagnostics, Outcome, StateSet, Transfer};
use crate::syntax::{Expr, Label};

/// How many concrete threads an abstract id may stand for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Count {
    Zero,
    One,
    Many,
}

impl Count {
    pub fn incr(self) -> Count {
        match self {
            Count::Zero => Count::One,
            Count::One | Count::Many => Count::Many,
        }
    }

    pub fn of(n: usize) -> Count {
        match n {
            0 => Count::Zero,
            1 => Count::One,
            _ => Count::Many,
        }
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Count::Zero => "0",
            Count::One => "1",
            Count::Many => "inf",
        })
    }
}

/// `μ̂`, total with default zero. Zero entries are not stored.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TCount(BTreeMap<ATid, Count>);

impl TCount {
    pub fn get(&self, t: &ATid) -> Count {
        self.0.get(t).copied().unwrap_or(Count::Zero)
    }

    pub fn set(&mut self, t: ATid, c: Count) {
        if c == Count::Zero {
            self.0.remove(&t);
        } else {
            self.0.insert(t, c);
        }
    }

    pub fn incr(&mut self, t: ATid) {
        let c = self.get(&t).incr();
        self.set(t, c);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ATid, Count)> {
        self.0.iter().map(|(t, c)| (t, *c))
    }

    pub fn leq(&self, other: &TCount) -> bool {
        self.0.iter().all(|(t, c)| *c <= other.get(t))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct CountedState {
    pub base: AState,
    pub counts: TCount,
}

impl CountedState {
    pub fn leq(&self, other: &CountedState) -> bool {
        self.counts.leq(&other.counts) && self.base.leq(&other.base)
    }
}

impl fmt::Display for CountedState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(counted {} (counts", self.base)?;
        for (t, c) in self.counts.iter() {
            write!(f, " ({t} {c})")?;
        }
        f.write_str("))")
    }
}

/// Abstraction of a concrete state including thread counts.
pub fn abstract_counted(s: &CState, policy: &Policy) -> CountedState {
    let mut live: BTreeMap<ATid, usize> = BTreeMap::new();
    for tid in s.threads.keys() {
        *live.entry(policy.abstract_tid(tid)).or_default() += 1;
    }
    let mut counts = TCount::default();
    for (t, n) in live {
        counts.set(t, Count::of(n));
    }
    CountedState { base: abstract_state(s, policy), counts }
}

/// Counted injection: the root thread is exactly one concrete thread.
pub fn ainject_counted(e: &Arc<Expr>, policy: &Policy) -> Result<CountedState, InjectError> {
    let base = ainject(e, policy)?;
    let mut counts = TCount::default();
    counts.set(policy.root_tid(), Count::One);
    Ok(CountedState { base, counts })
}

/// Successors with strong transitions for threads whose count is one.
pub fn astep_counted(policy: &Policy, s: &CountedState, diag: &mut Diagnostics) -> BTreeSet<CountedState> {
    let mut out = BTreeSet::new();
    for m in moves(policy, &s.base, diag) {
        let strong = s.counts.get(&m.tid) == Count::One;
        let base = apply(&s.base, &m, strong);
        let mut counts = s.counts.clone();
        if strong && matches!(m.outcome, Outcome::Halt(_)) {
            counts.set(m.tid.clone(), Count::Zero);
        }
        if let Some((t, _)) = &m.spawn {
            counts.incr(t.clone());
        }
        out.insert(CountedState { base, counts });
    }
    out
}

#[derive(Clone, Debug)]
pub struct Counted {
    policy: Policy,
    init: CountedState,
}

impl Counted {
    pub fn new(e: &Arc<Expr>, policy: Policy) -> Result<Counted, InjectError> {
        Ok(Counted { init: ainject_counted(e, &policy)?, policy })
    }
}

impl Transfer for Counted {
    type State = CountedState;

    fn initial(&self) -> CountedState {
        self.init.clone()
    }

    fn successors(&self, s: &CountedState, diag: &mut Diagnostics) -> BTreeSet<CountedState> {
        astep_counted(&self.policy, s, diag)
    }
}

pub fn reach_counted(e: &Arc<Expr>, policy: Policy) -> Result<StateSet<CountedState>, InjectError> {
    Ok(reach_with(&Counted::new(e, policy)?))
}

/// States whose thread maps can be read for parallelism facts. Only
/// explored state sets carry them; a collapsed state does not.
pub trait Interleaved {
    fn base(&self) -> &AState;
    fn count(&self, t: &ATid) -> Count;
}

impl Interleaved for AState {
    fn base(&self) -> &AState {
        self
    }

    /// Without counting every thread id may stand for many threads.
    fn count(&self, _: &ATid) -> Count {
        Count::Many
    }
}

impl Interleaved for CountedState {
    fn base(&self) -> &AState {
        &self.base
    }

    fn count(&self, t: &ATid) -> Count {
        self.counts.get(t)
    }
}

/// Unordered pairs of distinct labels focused by two contexts of one
/// reachable state, smaller label first.
pub fn mhp_in<S: Interleaved + Ord>(states: &StateSet<S>) -> BTreeSet<(Label, Label)> {
    let mut out = BTreeSet::new();
    for s in states.iter() {
        let labels: BTreeSet<Label> = s.base().threads.values().flatten().map(|c| c.focus.label()).collect();
        for (i, &a) in labels.iter().enumerate() {
            for &b in labels.iter().skip(i + 1) {
                out.insert((a, b));
            }
        }
    }
    out
}

/// Labels that may run in parallel with themselves: somewhere two contexts
/// sit at the label, or one does in a thread id that is not a singleton.
pub fn self_mhp_in<S: Interleaved + Ord>(states: &StateSet<S>) -> BTreeSet<Label> {
    let mut out = BTreeSet::new();
    for s in states.iter() {
        let mut seen: BTreeMap<Label, usize> = BTreeMap::new();
        for (t, ctxs) in &s.base().threads {
            let unique = s.count(t) == Count::One;
            for c in ctxs {
                let n = seen.entry(c.focus.label()).or_default();
                *n += if unique { 1 } else { 2 };
            }
        }
        out.extend(seen.into_iter().filter(|&(_, n)| n > 1).map(|(l, _)| l));
    }
    out
}

pub fn mhp_pairs(e: &Arc<Expr>, policy: Policy, counted: bool) -> Result<BTreeSet<(Label, Label)>, InjectError> {
    Ok(if counted { mhp_in(&reach_counted(e, policy)?) } else { mhp_in(&reach(e, policy)?) })
}

pub fn self_mhp(e: &Arc<Expr>, policy: Policy) -> Result<BTreeSet<Label>, InjectError> {
    Ok(self_mhp_in(&reach_counted(e, policy)?))
}
