use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::concrete::InjectError;
use crate::control::{Focus, LamRef};
use crate::domain::{AAddr, AContext, AEnv, AHist, AKont, AState, AStore, ATid, AValue, Policy};
use crate::syntax::{free_vars, AExp, AExpKind, CExpKind, Expr, ExprKind, Label, Var};

/// Applications of non-callable values, arity mismatches and unbound
/// variables met while stepping, tallied by the label of the offending
/// context.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Diagnostics {
    pub dead_ends: BTreeMap<Label, u64>,
}

impl Diagnostics {
    pub(crate) fn dead_end(&mut self, site: Label) {
        *self.dead_ends.entry(site).or_default() += 1;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnboundVar(pub Var);

impl fmt::Display for UnboundVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unbound variable {}", self.0)
    }
}

impl core::error::Error for UnboundVar {}

pub fn ainject(e: &Arc<Expr>, policy: &Policy) -> Result<AState, InjectError> {
    let open = free_vars(e);
    if !open.is_empty() {
        return Err(InjectError::OpenProgram(open));
    }
    let mut s = AState::bottom();
    let root = AContext { focus: Focus::of(e), env: AEnv::new(), kont: AAddr::halt(), hist: AHist::empty() };
    s.add_context(policy.root_tid(), root);
    s.join_cell(AAddr::halt(), [AValue::Kont(AKont::Halt)]);
    s.cursor.insert(policy.initial_cursor());
    Ok(s)
}

/// `Ê`: a variable reads its whole cell, which may be empty.
pub fn a_atomic_eval(ae: &AExp, env: &AEnv, store: &AStore) -> Result<BTreeSet<AValue>, UnboundVar> {
    Ok(match &ae.kind {
        AExpKind::Var(v) => {
            let addr = env.get(v).ok_or_else(|| UnboundVar(v.clone()))?;
            store.get(addr).cloned().unwrap_or_default()
        }
        AExpKind::Lam(lam) => {
            let lam_ref = LamRef { label: ae.label, lam: lam.clone() };
            BTreeSet::from([AValue::Clo(lam_ref, env.restrict(&lam.free))])
        }
        AExpKind::Num(_) => BTreeSet::from([AValue::Num]),
        AExpKind::Bool(b) => BTreeSet::from([AValue::Bool(*b)]),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Outcome {
    Continue(AContext),
    /// The thread returned these values to the halt continuation.
    Halt(BTreeSet<AValue>),
}

/// One abstract transition of one context, independent of how it is
/// folded back into a state (weakly, strongly, or into an accumulator).
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Move {
    pub tid: ATid,
    pub from: AContext,
    pub outcome: Outcome,
    pub writes: Vec<(AAddr, BTreeSet<AValue>)>,
    pub spawn: Option<(ATid, AContext)>,
    /// Allocator position after the move, for spawns.
    pub cursor: Option<u32>,
}

struct SeqMove {
    outcome: Outcome,
    writes: Vec<(AAddr, BTreeSet<AValue>)>,
}

/// Passes `values` to every continuation stored at `kont`.
fn deliver(
    values: &BTreeSet<AValue>,
    kont: &AAddr,
    hist: &AHist,
    store: &AStore,
    writes: &[(AAddr, BTreeSet<AValue>)],
    out: &mut Vec<SeqMove>,
) {
    if values.is_empty() {
        return;
    }
    for k in store.get(kont).into_iter().flatten() {
        if let AValue::Kont(k) = k {
            out.push(resume(values, k, hist, writes));
        }
    }
}

fn resume(values: &BTreeSet<AValue>, k: &AKont, hist: &AHist, writes: &[(AAddr, BTreeSet<AValue>)]) -> SeqMove {
    let mut writes = writes.to_vec();
    match k {
        AKont::Frame { var, body, env, next } => {
            let addr = AAddr::Var(var.clone(), hist.clone());
            writes.push((addr.clone(), values.clone()));
            let ctx = AContext { focus: body.clone(), env: env.extend(var.clone(), addr), kont: next.clone(), hist: hist.clone() };
            SeqMove { outcome: Outcome::Continue(ctx), writes }
        }
        AKont::Halt => SeqMove { outcome: Outcome::Halt(values.clone()), writes },
    }
}

fn plain(ctx: AContext) -> SeqMove {
    SeqMove { outcome: Outcome::Continue(ctx), writes: Vec::new() }
}

/// Sequential successors of `c`. Returns `None` for `spawn` and `join`.
/// Dead ends are counted into `diag`.
fn seq_moves(policy: &Policy, c: &AContext, store: &AStore, diag: &mut Diagnostics) -> Option<Vec<SeqMove>> {
    let mut out = Vec::new();
    let site = c.focus.label();
    let eval = |ae: &AExp, diag: &mut Diagnostics| match a_atomic_eval(ae, &c.env, store) {
        Ok(vs) => Some(vs),
        Err(_) => {
            diag.dead_end(site);
            None
        }
    };
    match &c.focus {
        Focus::Let(e) => {
            let ExprKind::Let { var, binding, body } = &e.kind else { unreachable!("let focus") };
            let frame = AKont::Frame { var: var.clone(), body: Focus::of(body), env: c.env.clone(), next: c.kont.clone() };
            let addr = AAddr::Kont(crate::control::Site::At(e.label), c.hist.clone());
            let next = AContext { focus: Focus::Call(binding.clone()), env: c.env.clone(), kont: addr.clone(), hist: c.hist.clone() };
            out.push(SeqMove { outcome: Outcome::Continue(next), writes: alloc::vec![(addr, BTreeSet::from([AValue::Kont(frame)]))] });
        }
        Focus::Atom(ae) => {
            let vs = eval(ae, diag)?;
            deliver(&vs, &c.kont, &c.hist, store, &[], &mut out);
        }
        Focus::Call(call) => {
            let hist = policy.record(&c.hist, &c.focus);
            match &call.kind {
                CExpKind::App { func, args } => {
                    let fs = eval(func, diag)?;
                    let mut arg_values = Vec::with_capacity(args.len());
                    for a in args {
                        arg_values.push(eval(a, diag)?);
                    }
                    let mut dead = false;
                    for f in &fs {
                        match f {
                            AValue::Clo(lam, env) if lam.lam.params.len() == args.len() => {
                                // An argument with no possible value blocks the call.
                                if arg_values.iter().any(BTreeSet::is_empty) {
                                    continue;
                                }
                                let mut writes = Vec::with_capacity(args.len());
                                let mut bindings = Vec::with_capacity(args.len());
                                for (p, vs) in lam.lam.params.iter().zip(&arg_values) {
                                    let addr = AAddr::Var(p.clone(), hist.clone());
                                    writes.push((addr.clone(), vs.clone()));
                                    bindings.push((p.clone(), addr));
                                }
                                let next = AContext {
                                    focus: Focus::of(&lam.lam.body),
                                    env: env.extend_all(bindings),
                                    kont: c.kont.clone(),
                                    hist: hist.clone(),
                                };
                                out.push(SeqMove { outcome: Outcome::Continue(next), writes });
                            }
                            AValue::Addr(a) if args.len() == 1 => {
                                let is_kont = store.get(a).into_iter().flatten().any(|v| matches!(v, AValue::Kont(_)));
                                if is_kont {
                                    deliver(&arg_values[0], a, &hist, store, &[], &mut out);
                                } else {
                                    dead = true;
                                }
                            }
                            AValue::Kont(k) if args.len() == 1 => {
                                if !arg_values[0].is_empty() {
                                    out.push(resume(&arg_values[0], k, &hist, &[]));
                                }
                            }
                            _ => dead = true,
                        }
                    }
                    if dead {
                        diag.dead_end(site);
                    }
                }
                CExpKind::CallCC(ae) => {
                    let fs = eval(ae, diag)?;
                    let mut dead = false;
                    for f in &fs {
                        match f {
                            AValue::Clo(lam, env) if lam.lam.params.len() == 1 => {
                                let param = lam.lam.params[0].clone();
                                let addr = AAddr::Var(param.clone(), hist.clone());
                                let writes = alloc::vec![(addr.clone(), BTreeSet::from([AValue::Addr(c.kont.clone())]))];
                                let next = AContext {
                                    focus: Focus::of(&lam.lam.body),
                                    env: env.extend(param, addr),
                                    kont: c.kont.clone(),
                                    hist: hist.clone(),
                                };
                                out.push(SeqMove { outcome: Outcome::Continue(next), writes });
                            }
                            _ => dead = true,
                        }
                    }
                    if dead {
                        diag.dead_end(site);
                    }
                }
                CExpKind::SetBang { var, value } => {
                    let Some(addr) = c.env.get(var).cloned() else {
                        diag.dead_end(site);
                        return Some(out);
                    };
                    let vs = eval(value, diag)?;
                    if vs.is_empty() {
                        return Some(out);
                    }
                    let writes = [(addr, vs)];
                    deliver(&BTreeSet::from([AValue::Bool(false)]), &c.kont, &hist, store, &writes, &mut out);
                }
                CExpKind::If { cond, then, els } => {
                    let vs = eval(cond, diag)?;
                    if vs.iter().any(AValue::may_be_truthy) {
                        out.push(plain(AContext { focus: Focus::Call(then.clone()), env: c.env.clone(), kont: c.kont.clone(), hist: hist.clone() }));
                    }
                    if vs.contains(&AValue::Bool(false)) {
                        out.push(plain(AContext { focus: Focus::Call(els.clone()), env: c.env.clone(), kont: c.kont.clone(), hist }));
                    }
                }
                CExpKind::Cas { var, old, new } => {
                    let Some(addr) = c.env.get(var).cloned() else {
                        diag.dead_end(site);
                        return Some(out);
                    };
                    let current = store.get(&addr).cloned().unwrap_or_default();
                    let olds = eval(old, diag)?;
                    let news = eval(new, diag)?;
                    let pairs = || current.iter().flat_map(|x| olds.iter().map(move |y| (x, y)));
                    // Concrete values can only be equal when their abstractions are.
                    let may_swap = pairs().any(|(x, y)| x == y);
                    let may_fail = pairs().any(|(x, y)| !(x == y && matches!(x, AValue::Bool(_))));
                    if may_swap && !news.is_empty() {
                        let writes = [(addr.clone(), news)];
                        deliver(&BTreeSet::from([AValue::Bool(true)]), &c.kont, &hist, store, &writes, &mut out);
                    }
                    if may_fail {
                        deliver(&BTreeSet::from([AValue::Bool(false)]), &c.kont, &hist, store, &[], &mut out);
                    }
                }
                CExpKind::Spawn(_) | CExpKind::Join(_) => return None,
            }
        }
    }
    Some(out)
}

/// `⊸`: sequential successors of one context, each with its updated store.
/// `spawn`, `join` and returns to the halt continuation have none here.
pub fn astep_seq(policy: &Policy, c: &AContext, store: &AStore) -> BTreeSet<(AContext, AStore)> {
    let mut diag = Diagnostics::default();
    let mut out = BTreeSet::new();
    for m in seq_moves(policy, c, store, &mut diag).unwrap_or_default() {
        if let Outcome::Continue(ctx) = m.outcome {
            let mut s = store.clone();
            for (a, vs) in m.writes {
                s.entry(a).or_default().extend(vs);
            }
            out.insert((ctx, s));
        }
    }
    out
}

/// Every move of every context of every thread in `s`.
pub(crate) fn moves(policy: &Policy, s: &AState, diag: &mut Diagnostics) -> Vec<Move> {
    let mut out = Vec::new();
    for (tid, ctxs) in &s.threads {
        for ctx in ctxs {
            thread_moves(policy, s, tid, ctx, diag, &mut out);
        }
    }
    out
}

fn thread_moves(policy: &Policy, s: &AState, tid: &ATid, ctx: &AContext, diag: &mut Diagnostics, out: &mut Vec<Move>) {
    let lift = |m: SeqMove, spawn: Option<(ATid, AContext)>, cursor: Option<u32>| Move {
        tid: tid.clone(),
        from: ctx.clone(),
        outcome: m.outcome,
        writes: m.writes,
        spawn,
        cursor,
    };
    if let Focus::Call(call) = &ctx.focus {
        let hist = policy.record(&ctx.hist, &ctx.focus);
        match &call.kind {
            CExpKind::Spawn(body) => {
                for &slot in &s.cursor {
                    let child_tid = policy.newtid(call.label, &ctx.hist, slot);
                    let child = AContext { focus: Focus::of(body), env: ctx.env.clone(), kont: AAddr::halt(), hist: AHist::empty() };
                    let next_cursor = (slot + 1) % policy.slots();
                    let mut delivered = Vec::new();
                    let tid_value = BTreeSet::from([AValue::Tid(child_tid.clone())]);
                    deliver(&tid_value, &ctx.kont, &hist, &s.store, &[], &mut delivered);
                    for m in delivered {
                        out.push(lift(m, Some((child_tid.clone(), child.clone())), Some(next_cursor)));
                    }
                }
                return;
            }
            CExpKind::Join(ae) => {
                let Ok(targets) = a_atomic_eval(ae, &ctx.env, &s.store) else {
                    diag.dead_end(call.label);
                    return;
                };
                let mut dead = false;
                for target in &targets {
                    let AValue::Tid(t) = target else {
                        dead = true;
                        continue;
                    };
                    let Some(result) = s.store.get(&AAddr::Tid(t.clone())) else { continue };
                    let mut delivered = Vec::new();
                    deliver(result, &ctx.kont, &hist, &s.store, &[], &mut delivered);
                    out.extend(delivered.into_iter().map(|m| lift(m, None, None)));
                }
                if dead {
                    diag.dead_end(call.label);
                }
                return;
            }
            _ => {}
        }
    }
    let seq = seq_moves(policy, ctx, &s.store, diag).expect("spawn and join handled above");
    out.extend(seq.into_iter().map(|m| lift(m, None, None)));
}

fn apply_writes(s: &mut AState, m: &Move) {
    for (a, vs) in &m.writes {
        s.join_cell(a.clone(), vs.iter().cloned());
    }
    if let Outcome::Halt(vs) = &m.outcome {
        s.join_cell(AAddr::Tid(m.tid.clone()), vs.iter().cloned());
    }
}

/// Folds `m` into a copy of `s`. A strong move removes the stepped context
/// (and, on halt, the whole thread); a weak one keeps it.
pub(crate) fn apply(s: &AState, m: &Move, strong: bool) -> AState {
    let mut next = s.clone();
    apply_writes(&mut next, m);
    if strong {
        match m.outcome {
            Outcome::Continue(_) => next.remove_context(&m.tid, &m.from),
            Outcome::Halt(_) => {
                next.threads.remove(&m.tid);
            }
        }
    }
    if let Outcome::Continue(c) = &m.outcome {
        next.add_context(m.tid.clone(), c.clone());
    }
    if let Some((t, c)) = &m.spawn {
        next.add_context(t.clone(), c.clone());
    }
    if let Some(c) = m.cursor {
        next.cursor = BTreeSet::from([c]);
    }
    next
}

/// Joins the effect of `m` into `acc`; returns whether `acc` grew.
pub(crate) fn accumulate(acc: &mut AState, m: &Move) -> bool {
    let mut grew = false;
    for (a, vs) in &m.writes {
        grew |= acc.join_cell(a.clone(), vs.iter().cloned());
    }
    match &m.outcome {
        Outcome::Continue(c) => grew |= acc.add_context(m.tid.clone(), c.clone()),
        Outcome::Halt(vs) => grew |= acc.join_cell(AAddr::Tid(m.tid.clone()), vs.iter().cloned()),
    }
    if let Some((t, c)) = &m.spawn {
        grew |= acc.add_context(t.clone(), c.clone());
    }
    if let Some(c) = m.cursor {
        grew |= acc.cursor.insert(c);
    }
    grew
}

/// `⇝`: all abstract successors of `s`, with weak updates throughout.
pub fn astep(policy: &Policy, s: &AState, diag: &mut Diagnostics) -> BTreeSet<AState> {
    moves(policy, s, diag).iter().map(|m| apply(s, m, false)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concrete::inject;
    use crate::domain::{abstract_state, TidStrategy};
    use crate::syntax::parse;

    fn program(src: &str) -> Arc<Expr> {
        Arc::new(parse(src).unwrap())
    }

    fn atom(src: &str) -> AExp {
        match parse(src).unwrap().kind {
            ExprKind::Atom(a) => a,
            _ => panic!("not an atom"),
        }
    }

    #[test]
    fn inject_literal() {
        let s = ainject(&program("42"), &Policy::default()).unwrap();
        assert_eq!(s.threads.len(), 1);
        assert_eq!(s.contexts(&ATid::Root).count(), 1);
        assert_eq!(s.store.len(), 1);
        assert_eq!(s.store[&AAddr::halt()], BTreeSet::from([AValue::Kont(AKont::Halt)]));
    }

    #[test]
    fn inject_commutes_with_abstraction() {
        for src in ["42", "((lambda (x) x) 42)", "(let ((t (spawn 21))) (join t))"] {
            let e = program(src);
            for p in [Policy::default(), Policy::new(1, TidStrategy::Global).unwrap(), Policy::new(0, TidStrategy::SitePool(2)).unwrap()] {
                assert_eq!(ainject(&e, &p).unwrap(), abstract_state(&inject(&e).unwrap(), &p));
            }
        }
    }

    #[test]
    fn inject_rejects_open_programs() {
        assert!(ainject(&program("(f 1)"), &Policy::default()).is_err());
    }

    #[test]
    fn eval_lambda_closes_over_free_vars() {
        let ae = atom("(lambda (y) (f y))");
        let addr = AAddr::Var(Var::new("f"), AHist::empty());
        let env = AEnv::new().extend(Var::new("f"), addr.clone()).extend(Var::new("g"), addr);
        let vs = a_atomic_eval(&ae, &env, &AStore::new()).unwrap();
        assert_eq!(vs.len(), 1);
        let Some(AValue::Clo(lam, cenv)) = vs.first() else { panic!("not a closure") };
        assert_eq!(lam.label, ae.label);
        assert_eq!(cenv.iter().count(), 1);
    }

    #[test]
    fn eval_var_reads_cell() {
        let ae = atom("v");
        let a = AAddr::Var(Var::new("v"), AHist::empty());
        let env = AEnv::new().extend(Var::new("v"), a.clone());
        let mut store = AStore::new();
        assert!(a_atomic_eval(&ae, &env, &store).unwrap().is_empty());
        store.insert(a, BTreeSet::from([AValue::Num, AValue::Bool(false)]));
        assert_eq!(a_atomic_eval(&ae, &env, &store).unwrap(), BTreeSet::from([AValue::Num, AValue::Bool(false)]));
        assert_eq!(a_atomic_eval(&ae, &AEnv::new(), &store), Err(UnboundVar(Var::new("v"))));
        assert_eq!(a_atomic_eval(&atom("1"), &env, &store).unwrap(), BTreeSet::from([AValue::Num]));
    }

    fn if_successors(values: &[AValue]) -> usize {
        let e = program("(let ((r (if c (f) (g)))) r)");
        let ExprKind::Let { binding, .. } = &e.kind else { panic!() };
        let a = AAddr::Var(Var::new("c"), AHist::empty());
        let ctx = AContext {
            focus: Focus::Call(binding.clone()),
            env: AEnv::new().extend(Var::new("c"), a.clone()),
            kont: AAddr::halt(),
            hist: AHist::empty(),
        };
        let store = AStore::from([(a, values.iter().cloned().collect())]);
        astep_seq(&Policy::default(), &ctx, &store).len()
    }

    #[test]
    fn if_branches_on_possible_values() {
        assert_eq!(if_successors(&[AValue::Num]), 1);
        assert_eq!(if_successors(&[AValue::Bool(false)]), 1);
        assert_eq!(if_successors(&[AValue::Num, AValue::Bool(false)]), 2);
        assert_eq!(if_successors(&[]), 0);
    }

    #[test]
    fn cas_on_any_num_may_succeed_or_fail() {
        let e = program("((lambda (x) (let ((r (cas x 1 2))) r)) 0)");
        let p = Policy::default();
        let mut diag = Diagnostics::default();
        let mut s = ainject(&e, &p).unwrap();
        // Step the single thread until it sits on the cas.
        let mut bound = 0;
        let cas_ctx = loop {
            let found = s.threads.values().flatten().find(|c| matches!(&c.focus, Focus::Call(c) if matches!(c.kind, CExpKind::Cas { .. })));
            if let Some(c) = found {
                break c.clone();
            }
            s = astep(&p, &s, &mut diag).into_iter().max_by_key(AState::size).unwrap();
            bound += 1;
            assert!(bound < 10);
        };
        let succs = astep_seq(&p, &cas_ctx, &s.store);
        assert_eq!(succs.len(), 2);
        let r = AAddr::Var(Var::new("r"), AHist::empty());
        let results: BTreeSet<_> = succs.iter().flat_map(|(_, st)| st[&r].iter().cloned()).collect();
        assert_eq!(results, BTreeSet::from([AValue::Bool(true), AValue::Bool(false)]));
    }

    #[test]
    fn lifted_step_keeps_old_context() {
        let e = program("((lambda (x) x) 42)");
        let p = Policy::default();
        let s = ainject(&e, &p).unwrap();
        let succ = astep(&p, &s, &mut Diagnostics::default());
        assert_eq!(succ.len(), 1);
        let next = succ.into_iter().next().unwrap();
        assert!(s.leq(&next));
        assert_eq!(next.contexts(&ATid::Root).count(), 2);
    }

    #[test]
    fn halt_only_grows_store() {
        let e = program("42");
        let p = Policy::default();
        let s = ainject(&e, &p).unwrap();
        let next = astep(&p, &s, &mut Diagnostics::default()).into_iter().next().unwrap();
        assert_eq!(next.threads, s.threads);
        assert_eq!(next.store[&AAddr::Tid(ATid::Root)], BTreeSet::from([AValue::Num]));
    }

    #[test]
    fn non_callable_is_a_dead_end() {
        let e = program("(1 2)");
        let p = Policy::default();
        let mut diag = Diagnostics::default();
        let s = ainject(&e, &p).unwrap();
        assert!(astep(&p, &s, &mut diag).is_empty());
        assert_eq!(diag.dead_ends.get(&Label(1)), Some(&1));
    }
}
