//! The concrete P(CEK*)S machine: a nondeterministic interleaving of CESK
//! threads over one shared store. It is the ground truth the abstract
//! interpreters are checked against.

mod explore;
mod step;

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::control::{Focus, LamRef, Site};
use crate::syntax::{Label, Var};

pub use explore::{explore, Edge, Exploration, StuckThread};
pub use step::{atomic_eval, inject, step_concurrent, step_seq, EvalError, InjectError, SeqStep, Steps, Stuck, Successor};

/// Call-site history of a thread, most recent site first.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Hist(Arc<[Label]>);

impl Hist {
    pub fn empty() -> Self {
        Hist::default()
    }

    pub fn from_sites(sites: &[Label]) -> Self {
        Hist(Arc::from(sites))
    }

    pub fn sites(&self) -> &[Label] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The history extended with `site` as its most recent entry.
    pub fn push(&self, site: Label) -> Hist {
        let mut sites = Vec::with_capacity(self.0.len() + 1);
        sites.push(site);
        sites.extend_from_slice(&self.0);
        Hist(Arc::from(sites))
    }

    /// `record(c, h)`: extends the history when `focus` is a recorded call.
    pub fn record(&self, focus: &Focus) -> Hist {
        match focus.recorded_site() {
            Some(site) => self.push(site),
            None => self.clone(),
        }
    }
}

/// Concrete thread id. Ordered by `seq` first, so maps keyed by `Tid`
/// iterate in allocation order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tid {
    pub seq: u64,
    pub site: Site,
    pub birth: Hist,
}

impl Tid {
    pub fn root() -> Tid {
        Tid { seq: 0, site: Site::Root, birth: Hist::empty() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Addr {
    Var { var: Var, birth: Hist, seq: u64 },
    Kont { site: Site, birth: Hist, seq: u64 },
    /// Cell receiving the return value of a thread.
    Tid(Tid),
}

impl Addr {
    /// The distinguished address of the halt continuation.
    pub fn halt() -> Addr {
        Addr::Kont { site: Site::Root, birth: Hist::empty(), seq: 0 }
    }

    pub fn seq(&self) -> u64 {
        match self {
            Addr::Var { seq, .. } | Addr::Kont { seq, .. } => *seq,
            Addr::Tid(t) => t.seq,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Env(Arc<BTreeMap<Var, Addr>>);

impl Env {
    pub fn new() -> Self {
        Env::default()
    }

    pub fn get(&self, var: &Var) -> Option<&Addr> {
        self.0.get(var)
    }

    pub fn extend(&self, var: Var, addr: Addr) -> Env {
        let mut map = (*self.0).clone();
        map.insert(var, addr);
        Env(Arc::new(map))
    }

    pub fn extend_all(&self, bindings: impl IntoIterator<Item = (Var, Addr)>) -> Env {
        let mut map = (*self.0).clone();
        map.extend(bindings);
        Env(Arc::new(map))
    }

    /// The environment cut down to `vars`; unbound names are skipped.
    pub fn restrict(&self, vars: &[Var]) -> Env {
        let map = vars.iter().filter_map(|v| self.0.get(v).map(|a| (v.clone(), a.clone()))).collect();
        Env(Arc::new(map))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Addr)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kont {
    Frame { var: Var, body: Focus, env: Env, next: Addr },
    Halt,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Clo { lam: LamRef, env: Env },
    Bool(bool),
    Num(i64),
    Kont(Kont),
    Tid(Tid),
    Addr(Addr),
}

impl Value {
    pub fn is_truthy(&self) -> bool {
        !matches!(self, Value::Bool(false))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Context {
    pub focus: Focus,
    pub env: Env,
    pub kont: Addr,
    pub hist: Hist,
}

/// The shared heap. `next_seq` is the next fresh address sequence number;
/// it only grows, so no address is allocated twice in one run.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Store {
    pub cells: BTreeMap<Addr, Value>,
    pub next_seq: u64,
}

impl Store {
    pub fn get(&self, addr: &Addr) -> Option<&Value> {
        self.cells.get(addr)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub(crate) fn fresh_var(&mut self, var: Var, birth: Hist) -> Addr {
        let seq = self.next_seq;
        self.next_seq += 1;
        Addr::Var { var, birth, seq }
    }

    pub(crate) fn fresh_kont(&mut self, site: Label, birth: Hist) -> Addr {
        let seq = self.next_seq;
        self.next_seq += 1;
        Addr::Kont { site: Site::At(site), birth, seq }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CState {
    pub threads: BTreeMap<Tid, Context>,
    pub store: Store,
    /// Sequence number the next spawned thread receives.
    pub next_tid: u64,
}

impl CState {
    /// Every address mentioned by a live context, a stored environment or a
    /// stored continuation link.
    pub fn referenced_addrs(&self) -> Vec<Addr> {
        let mut out = Vec::new();
        for ctx in self.threads.values() {
            out.push(ctx.kont.clone());
            out.extend(ctx.env.iter().map(|(_, a)| a.clone()));
        }
        for value in self.store.cells.values() {
            match value {
                Value::Clo { env, .. } => out.extend(env.iter().map(|(_, a)| a.clone())),
                Value::Kont(Kont::Frame { env, next, .. }) => {
                    out.extend(env.iter().map(|(_, a)| a.clone()));
                    out.push(next.clone());
                }
                Value::Addr(a) => out.push(a.clone()),
                _ => {}
            }
        }
        out
    }

    /// Canonical one-line rendering used by trace dumps.
    pub fn dump(&self) -> alloc::string::String {
        alloc::format!("{self}")
    }
}

impl fmt::Display for Hist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(h")?;
        for site in self.0.iter() {
            write!(f, " {site}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for Tid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(tid {} {} {})", self.seq, self.site, self.birth)
    }
}

impl fmt::Display for Addr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Addr::Var { var, birth, seq } => write!(f, "(var {var} {seq} {birth})"),
            Addr::Kont { site, birth, seq } => write!(f, "(kont {site} {seq} {birth})"),
            Addr::Tid(t) => write!(f, "(ret {t})"),
        }
    }
}

impl fmt::Display for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(env")?;
        for (v, a) in self.0.iter() {
            write!(f, " ({v} {a})")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for Kont {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kont::Frame { var, body, env, next } => write!(f, "(frame {var} {body} {env} {next})"),
            Kont::Halt => f.write_str("halt"),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Clo { lam, env } => write!(f, "(clo l{} {env})", lam.label),
            Value::Bool(true) => f.write_str("#t"),
            Value::Bool(false) => f.write_str("#f"),
            Value::Num(n) => write!(f, "{n}"),
            Value::Kont(k) => write!(f, "{k}"),
            Value::Tid(t) => write!(f, "{t}"),
            Value::Addr(a) => write!(f, "(addr {a})"),
        }
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(ctx {} {} {} {})", self.focus, self.env, self.kont, self.hist)
    }
}

impl fmt::Display for CState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(state (threads")?;
        for (tid, ctx) in &self.threads {
            write!(f, " ({tid} {ctx})")?;
        }
        f.write_str(") (store")?;
        let mut cells: Vec<_> = self.store.cells.iter().collect();
        cells.sort_by(|a, b| a.0.seq().cmp(&b.0.seq()).then_with(|| a.0.cmp(b.0)));
        for (addr, value) in cells {
            write!(f, " ({addr} {value})")?;
        }
        f.write_str("))")
    }
}
