//! Abstract state-space, its lattice structure, and the structural
//! abstraction map from concrete machine states.

mod abstraction;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::control::{Focus, LamRef, Site};
use crate::syntax::{Label, Var};

pub use abstraction::abstract_state;

/// How concrete thread ids are partitioned into abstract ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TidStrategy {
    /// Every thread, the root included, shares one abstract id.
    Global,
    /// Spawn site plus the spawner's truncated history.
    SiteHist,
    /// Spawn site plus one of `n` round-robin slots.
    SitePool(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyError {
    EmptyPool,
}

impl fmt::Display for PolicyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyError::EmptyPool => f.write_str("thread pool size must be at least 1"),
        }
    }
}

impl core::error::Error for PolicyError {}

/// Analysis knobs: history depth `k` (context sensitivity and address
/// polyvariance) and the thread-id partition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Policy {
    k: usize,
    tids: TidStrategy,
}

impl Default for Policy {
    fn default() -> Self {
        Policy { k: 0, tids: TidStrategy::SiteHist }
    }
}

impl Policy {
    pub fn new(k: usize, tids: TidStrategy) -> Result<Policy, PolicyError> {
        if tids == TidStrategy::SitePool(0) {
            return Err(PolicyError::EmptyPool);
        }
        Ok(Policy { k, tids })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn tids(&self) -> TidStrategy {
        self.tids
    }

    pub fn root_tid(&self) -> ATid {
        match self.tids {
            TidStrategy::Global => ATid::Global,
            _ => ATid::Root,
        }
    }

    /// Number of pool slots; 1 for the strategies without slots.
    pub fn slots(&self) -> u32 {
        match self.tids {
            TidStrategy::SitePool(n) => n,
            _ => 1,
        }
    }

    /// Slot cursor of the injected state. The root thread consumes concrete
    /// thread sequence number 0, so the first spawn lands in slot `1 mod n`.
    pub fn initial_cursor(&self) -> u32 {
        1 % self.slots()
    }

    pub fn truncate(&self, sites: &[Label]) -> AHist {
        AHist(Arc::from(&sites[..sites.len().min(self.k)]))
    }

    /// `record` on abstract histories: prepend, then keep the `k` most recent.
    pub fn record(&self, hist: &AHist, focus: &Focus) -> AHist {
        match focus.recorded_site() {
            Some(site) if self.k > 0 => {
                let mut sites = Vec::with_capacity(self.k);
                sites.push(site);
                sites.extend(hist.0.iter().copied().take(self.k - 1));
                AHist(Arc::from(sites))
            }
            Some(_) => AHist::empty(),
            None => hist.clone(),
        }
    }

    /// Abstract thread id for a spawn at `site` by a context with history
    /// `hist`, taking pool slot `slot`.
    pub fn newtid(&self, site: Label, hist: &AHist, slot: u32) -> ATid {
        match self.tids {
            TidStrategy::Global => ATid::Global,
            TidStrategy::SiteHist => ATid::Spawned { site, hist: hist.clone() },
            TidStrategy::SitePool(_) => ATid::Pool { site, slot },
        }
    }
}

/// At most `k` call sites, most recent first.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AHist(Arc<[Label]>);

impl AHist {
    pub fn empty() -> Self {
        AHist::default()
    }

    pub fn sites(&self) -> &[Label] {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ATid {
    Global,
    Root,
    Spawned { site: Label, hist: AHist },
    Pool { site: Label, slot: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AAddr {
    Var(Var, AHist),
    Kont(Site, AHist),
    Tid(ATid),
}

impl AAddr {
    pub fn halt() -> AAddr {
        AAddr::Kont(Site::Root, AHist::empty())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AEnv(Arc<BTreeMap<Var, AAddr>>);

impl AEnv {
    pub fn new() -> Self {
        AEnv::default()
    }

    pub fn get(&self, var: &Var) -> Option<&AAddr> {
        self.0.get(var)
    }

    pub fn extend(&self, var: Var, addr: AAddr) -> AEnv {
        let mut map = (*self.0).clone();
        map.insert(var, addr);
        AEnv(Arc::new(map))
    }

    pub fn extend_all(&self, bindings: impl IntoIterator<Item = (Var, AAddr)>) -> AEnv {
        let mut map = (*self.0).clone();
        map.extend(bindings);
        AEnv(Arc::new(map))
    }

    pub fn restrict(&self, vars: &[Var]) -> AEnv {
        let map = vars.iter().filter_map(|v| self.0.get(v).map(|a| (v.clone(), a.clone()))).collect();
        AEnv(Arc::new(map))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &AAddr)> {
        self.0.iter()
    }

    pub fn from_map(map: BTreeMap<Var, AAddr>) -> AEnv {
        AEnv(Arc::new(map))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AKont {
    Frame { var: Var, body: Focus, env: AEnv, next: AAddr },
    Halt,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AValue {
    Clo(LamRef, AEnv),
    Bool(bool),
    /// The single abstraction of every integer.
    Num,
    Kont(AKont),
    Tid(ATid),
    Addr(AAddr),
}

impl AValue {
    /// Whether some concrete value it stands for is not `#f`.
    pub fn may_be_truthy(&self) -> bool {
        !matches!(self, AValue::Bool(false))
    }
}

pub type AStore = BTreeMap<AAddr, BTreeSet<AValue>>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AContext {
    pub focus: Focus,
    pub env: AEnv,
    pub kont: AAddr,
    pub hist: AHist,
}

/// An abstract machine state. Both maps are total with an empty default;
/// empty entries are never stored, so structural equality is lattice
/// equality.
///
/// `cursor` holds the possible positions of the round-robin pool allocator
/// (always `{0}` for strategies without slots). It is the abstraction of
/// the concrete thread counter modulo the pool size.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AState {
    pub threads: BTreeMap<ATid, BTreeSet<AContext>>,
    pub store: AStore,
    pub cursor: BTreeSet<u32>,
}

fn subset_map<K: Ord, V: Ord>(x: &BTreeMap<K, BTreeSet<V>>, y: &BTreeMap<K, BTreeSet<V>>) -> bool {
    x.iter().all(|(k, xs)| y.get(k).is_some_and(|ys| xs.is_subset(ys)))
}

fn join_map<K: Ord + Clone, V: Ord + Clone>(x: &mut BTreeMap<K, BTreeSet<V>>, y: &BTreeMap<K, BTreeSet<V>>) -> bool {
    let mut changed = false;
    for (k, ys) in y.iter().filter(|(_, ys)| !ys.is_empty()) {
        let xs = x.entry(k.clone()).or_default();
        let before = xs.len();
        xs.extend(ys.iter().cloned());
        changed |= xs.len() != before;
    }
    changed
}

impl AState {
    /// The least element: no threads, empty store, no cursor positions.
    pub fn bottom() -> AState {
        AState::default()
    }

    pub fn contexts(&self, tid: &ATid) -> impl Iterator<Item = &AContext> {
        self.threads.get(tid).into_iter().flatten()
    }

    pub fn cell(&self, addr: &AAddr) -> impl Iterator<Item = &AValue> + Clone {
        self.store.get(addr).into_iter().flatten()
    }

    pub fn add_context(&mut self, tid: ATid, ctx: AContext) -> bool {
        self.threads.entry(tid).or_default().insert(ctx)
    }

    /// Removes one context, dropping the thread entry once it is empty.
    pub fn remove_context(&mut self, tid: &ATid, ctx: &AContext) {
        if let Some(set) = self.threads.get_mut(tid) {
            set.remove(ctx);
            if set.is_empty() {
                self.threads.remove(tid);
            }
        }
    }

    pub fn join_cell(&mut self, addr: AAddr, values: impl IntoIterator<Item = AValue>) -> bool {
        let mut values = values.into_iter().peekable();
        if values.peek().is_none() {
            return false;
        }
        let cell = self.store.entry(addr).or_default();
        let before = cell.len();
        cell.extend(values);
        cell.len() != before
    }

    /// Pointwise set inclusion on threads, store and cursor.
    pub fn leq(&self, other: &AState) -> bool {
        self.cursor.is_subset(&other.cursor)
            && subset_map(&self.threads, &other.threads)
            && subset_map(&self.store, &other.store)
    }

    pub fn join(&self, other: &AState) -> AState {
        let mut out = self.clone();
        out.join_in(other);
        out
    }

    /// In-place join; returns whether `self` grew.
    pub fn join_in(&mut self, other: &AState) -> bool {
        let before = self.cursor.len();
        self.cursor.extend(other.cursor.iter().copied());
        let mut changed = self.cursor.len() != before;
        changed |= join_map(&mut self.threads, &other.threads);
        changed |= join_map(&mut self.store, &other.store);
        changed
    }

    /// Number of (thread, context) and (address, value) pairs plus cursor
    /// positions: the height of this state above bottom.
    pub fn size(&self) -> usize {
        self.threads.values().map(BTreeSet::len).sum::<usize>()
            + self.store.values().map(BTreeSet::len).sum::<usize>()
            + self.cursor.len()
    }
}

impl fmt::Display for AHist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(h")?;
        for site in self.0.iter() {
            write!(f, " {site}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for ATid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ATid::Global => f.write_str("global"),
            ATid::Root => f.write_str("root"),
            ATid::Spawned { site, hist } => write!(f, "(spawned {site} {hist})"),
            ATid::Pool { site, slot } => write!(f, "(pool {site} {slot})"),
        }
    }
}

impl fmt::Display for AAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AAddr::Var(v, h) => write!(f, "(var {v} {h})"),
            AAddr::Kont(site, h) => write!(f, "(kont {site} {h})"),
            AAddr::Tid(t) => write!(f, "(ret {t})"),
        }
    }
}

impl fmt::Display for AEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(env")?;
        for (v, a) in self.0.iter() {
            write!(f, " ({v} {a})")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for AKont {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AKont::Frame { var, body, env, next } => write!(f, "(frame {var} {body} {env} {next})"),
            AKont::Halt => f.write_str("halt"),
        }
    }
}

impl fmt::Display for AValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AValue::Clo(lam, env) => write!(f, "(clo l{} {env})", lam.label),
            AValue::Bool(true) => f.write_str("#t"),
            AValue::Bool(false) => f.write_str("#f"),
            AValue::Num => f.write_str("num"),
            AValue::Kont(k) => write!(f, "{k}"),
            AValue::Tid(t) => write!(f, "(tid {t})"),
            AValue::Addr(a) => write!(f, "(addr {a})"),
        }
    }
}

impl fmt::Display for AContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(ctx {} {} {} {})", self.focus, self.env, self.kont, self.hist)
    }
}

impl fmt::Display for AState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(astate (threads")?;
        for (tid, ctxs) in &self.threads {
            write!(f, " ({tid}")?;
            for c in ctxs {
                write!(f, " {c}")?;
            }
            f.write_str(")")?;
        }
        f.write_str(") (store")?;
        for (addr, vals) in &self.store {
            write!(f, " ({addr}")?;
            for v in vals {
                write!(f, " {v}")?;
            }
            f.write_str(")")?;
        }
        f.write_str(") (cursor")?;
        for c in &self.cursor {
            write!(f, " {c}")?;
        }
        f.write_str("))")
    }
}
