//! Flows-to extraction, the collapsed single-state analysis, and the bound
//! on its number of passes.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::concrete::InjectError;
use crate::control::Focus;
use crate::domain::{AState, AValue, Policy, TidStrategy};
use crate::machine::{a_atomic_eval, accumulate, ainject, moves, Diagnostics};
use crate::syntax::{free_vars_of_atom, AExp, AExpKind, CExp, CExpKind, Expr, ExprKind, Label, Var};

/// `value` may be the result of evaluating the atom labelled `site`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowFact {
    pub site: Label,
    pub value: AValue,
}

impl fmt::Display for FlowFact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(flows {} {})", self.site, self.value)
    }
}

type Occurrences = Vec<(AExp, BTreeSet<Var>)>;

/// Atoms inside `focus` that do not mention a variable bound inside it,
/// with their free variables.
fn occurrences(focus: &Focus) -> Occurrences {
    let mut out = Vec::new();
    let bound = BTreeSet::new();
    match focus {
        Focus::Let(e) => scan_expr(e, &bound, &mut out),
        Focus::Call(c) => scan_call(c, &bound, &mut out),
        Focus::Atom(a) => scan_atom(a, &bound, &mut out),
    }
    out
}

fn scan_expr(e: &Expr, bound: &BTreeSet<Var>, out: &mut Occurrences) {
    match &e.kind {
        ExprKind::Let { var, binding, body } => {
            scan_call(binding, bound, out);
            let mut inner = bound.clone();
            inner.insert(var.clone());
            scan_expr(body, &inner, out);
        }
        ExprKind::Call(c) => scan_call(c, bound, out),
        ExprKind::Atom(a) => scan_atom(a, bound, out),
    }
}

fn scan_call(c: &CExp, bound: &BTreeSet<Var>, out: &mut Occurrences) {
    match &c.kind {
        CExpKind::App { func, args } => {
            scan_atom(func, bound, out);
            args.iter().for_each(|a| scan_atom(a, bound, out));
        }
        CExpKind::CallCC(a) | CExpKind::Join(a) => scan_atom(a, bound, out),
        CExpKind::SetBang { value, .. } => scan_atom(value, bound, out),
        CExpKind::If { cond, then, els } => {
            scan_atom(cond, bound, out);
            scan_call(then, bound, out);
            scan_call(els, bound, out);
        }
        CExpKind::Cas { old, new, .. } => {
            scan_atom(old, bound, out);
            scan_atom(new, bound, out);
        }
        CExpKind::Spawn(body) => scan_expr(body, bound, out),
    }
}

fn scan_atom(a: &AExp, bound: &BTreeSet<Var>, out: &mut Occurrences) {
    let fv = free_vars_of_atom(a);
    if fv.is_disjoint(bound) {
        out.push((a.clone(), fv));
    }
    if let AExpKind::Lam(lam) = &a.kind {
        let mut inner = bound.clone();
        inner.extend(lam.params.iter().cloned());
        scan_expr(&lam.body, &inner, out);
    }
}

/// Flow facts of every context of every state: each atom occurrence in the
/// context's focus that is evaluable in its environment contributes `Ê`.
pub fn flows_to<'a>(states: impl IntoIterator<Item = &'a AState>) -> BTreeSet<FlowFact> {
    let mut cache: BTreeMap<Label, Occurrences> = BTreeMap::new();
    let mut out = BTreeSet::new();
    for s in states {
        for c in s.threads.values().flatten() {
            let occ = cache.entry(c.focus.label()).or_insert_with(|| occurrences(&c.focus));
            for (ae, fv) in occ.iter() {
                if !fv.iter().all(|v| c.env.get(v).is_some()) {
                    continue;
                }
                let Ok(values) = a_atomic_eval(ae, &c.env, &s.store) else { continue };
                out.extend(values.into_iter().map(|value| FlowFact { site: ae.label, value }));
            }
        }
    }
    out
}

/// `α′`: the join of a set of states; bottom for none.
pub fn collapse<'a>(states: impl IntoIterator<Item = &'a AState>) -> AState {
    let mut out = AState::bottom();
    for s in states {
        out.join_in(s);
    }
    out
}

/// `f̂′(ς) = ς ⊔ ⊔{ς′ | ς ⇝ ς′}`.
pub fn collapsed_transfer(policy: &Policy, s: &AState, diag: &mut Diagnostics) -> AState {
    let mut next = s.clone();
    for m in moves(policy, s, diag) {
        accumulate(&mut next, &m);
    }
    next
}

/// Result of the collapsed analysis. It exposes one accumulated state and
/// deliberately no interleaving information.
#[derive(Clone, Debug)]
pub struct Collapsed {
    pub state: AState,
    /// Applications of `f̂′`, including the last one that changed nothing.
    pub iterations: usize,
    pub diagnostics: Diagnostics,
}

pub fn lfp_collapsed(e: &Arc<Expr>, policy: Policy) -> Result<Collapsed, InjectError> {
    let mut state = ainject(e, &policy)?;
    let mut iterations = 0;
    let diagnostics = loop {
        // Earlier passes see a subset of the final dead ends; keep the last.
        let mut pass = Diagnostics::default();
        let next = collapsed_transfer(&policy, &state, &mut pass);
        iterations += 1;
        if next == state {
            break pass;
        }
        state = next;
    };
    Ok(Collapsed { state, iterations, diagnostics })
}

/// Syntactic counts feeding the bound.
#[derive(Default)]
struct Census {
    recorded_sites: u128,
    spawn_sites: u128,
    let_sites: u128,
    vars: BTreeSet<Var>,
    /// Size of the lexical scope at each control point.
    scopes: Vec<u32>,
    /// Scope size at each `let`, for the frames it pushes.
    let_scopes: Vec<u32>,
    /// Free-variable count of each lambda.
    lambda_free: Vec<u32>,
}

impl Census {
    fn expr(&mut self, e: &Expr, scope: &BTreeSet<Var>) {
        match &e.kind {
            ExprKind::Let { var, binding, body } => {
                self.let_sites += 1;
                self.scopes.push(scope.len() as u32);
                self.let_scopes.push(scope.len() as u32);
                self.vars.insert(var.clone());
                self.call(binding, scope);
                let mut inner = scope.clone();
                inner.insert(var.clone());
                self.expr(body, &inner);
            }
            ExprKind::Call(c) => self.call(c, scope),
            ExprKind::Atom(a) => {
                self.scopes.push(scope.len() as u32);
                self.atom(a, scope);
            }
        }
    }

    fn call(&mut self, c: &CExp, scope: &BTreeSet<Var>) {
        self.scopes.push(scope.len() as u32);
        if c.is_recorded() {
            self.recorded_sites += 1;
        }
        match &c.kind {
            CExpKind::App { func, args } => {
                self.atom(func, scope);
                args.iter().for_each(|a| self.atom(a, scope));
            }
            CExpKind::CallCC(a) | CExpKind::Join(a) => self.atom(a, scope),
            CExpKind::SetBang { value, .. } => self.atom(value, scope),
            CExpKind::If { cond, then, els } => {
                self.atom(cond, scope);
                self.call(then, scope);
                self.call(els, scope);
            }
            CExpKind::Cas { old, new, .. } => {
                self.atom(old, scope);
                self.atom(new, scope);
            }
            CExpKind::Spawn(body) => {
                self.spawn_sites += 1;
                self.expr(body, scope);
            }
        }
    }

    fn atom(&mut self, a: &AExp, scope: &BTreeSet<Var>) {
        if let AExpKind::Lam(lam) = &a.kind {
            self.lambda_free.push(lam.free.len() as u32);
            self.vars.extend(lam.params.iter().cloned());
            let mut inner = scope.clone();
            inner.extend(lam.params.iter().cloned());
            self.expr(&lam.body, &inner);
        }
    }
}

fn pow(base: u128, exp: u32) -> u128 {
    base.checked_pow(exp).unwrap_or(u128::MAX)
}

/// Upper bound on the passes of the collapsed analysis: the height of the
/// lattice it climbs, `|ATid|·|AContext| + |AAddr|·|AValue|`, plus the pool
/// cursor positions.
///
/// Component sizes are over-approximated from the program text. With `H`
/// the number of abstract histories (`Σ_{i≤k} C^i` for `C` recorded call
/// sites) and `K = 1 + lets·H` continuation addresses:
///
/// * an environment at a point with `s` variables in scope is one of
///   `(H + 1)^s` partial maps; a closure env is total on the lambda's free
///   variables, so `H^f`;
/// * `|AContext| = Σ_points (H + 1)^s · K · H`;
/// * `|AValue| = closures + frames + halt + 2 booleans + num + |ATid| + |AAddr|`.
pub fn iteration_bound(e: &Expr, policy: &Policy) -> u128 {
    let mut census = Census::default();
    census.expr(e, &BTreeSet::new());

    let c = census.recorded_sites;
    let hists = (0..=policy.k() as u32).fold(0u128, |acc, i| acc.saturating_add(pow(c, i)));
    let tids = match policy.tids() {
        TidStrategy::Global => 1,
        TidStrategy::SiteHist => census.spawn_sites.saturating_mul(hists).saturating_add(1),
        TidStrategy::SitePool(n) => census.spawn_sites.saturating_mul(u128::from(n)).saturating_add(1),
    };
    let konts = census.let_sites.saturating_mul(hists).saturating_add(1);
    let addrs = (census.vars.len() as u128).saturating_mul(hists).saturating_add(konts).saturating_add(tids);

    let env_count = |s: u32| pow(hists.saturating_add(1), s);
    let contexts = census
        .scopes
        .iter()
        .fold(0u128, |acc, &s| acc.saturating_add(env_count(s).saturating_mul(konts).saturating_mul(hists)));
    let closures = census.lambda_free.iter().fold(0u128, |acc, &f| acc.saturating_add(pow(hists, f)));
    let frames = census.let_scopes.iter().fold(0u128, |acc, &s| acc.saturating_add(env_count(s).saturating_mul(konts)));
    let values = closures
        .saturating_add(frames)
        .saturating_add(1 + 2 + 1)
        .saturating_add(tids)
        .saturating_add(addrs);

    tids.saturating_mul(contexts)
        .saturating_add(addrs.saturating_mul(values))
        .saturating_add(u128::from(policy.slots()))
}
