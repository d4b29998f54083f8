use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use super::{Addr, CState, Context, Env, Hist, Kont, Store, Tid, Value};
use crate::control::{Focus, LamRef, Site};
use crate::syntax::{free_vars, AExp, AExpKind, CExpKind, Expr, ExprKind, Label, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InjectError {
    OpenProgram(BTreeSet<Var>),
}

impl fmt::Display for InjectError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InjectError::OpenProgram(vars) => {
                f.write_str("program has free variables:")?;
                for v in vars {
                    write!(f, " {v}")?;
                }
                Ok(())
            }
        }
    }
}

impl core::error::Error for InjectError {}

/// Initial state: the root thread at `e` with the halt continuation.
pub fn inject(e: &alloc::sync::Arc<Expr>) -> Result<CState, InjectError> {
    let open = free_vars(e);
    if !open.is_empty() {
        return Err(InjectError::OpenProgram(open));
    }
    let root = Context { focus: Focus::of(e), env: Env::new(), kont: Addr::halt(), hist: Hist::empty() };
    let mut cells = BTreeMap::new();
    cells.insert(Addr::halt(), Value::Kont(Kont::Halt));
    let mut threads = BTreeMap::new();
    threads.insert(Tid::root(), root);
    Ok(CState { threads, store: Store { cells, next_seq: 1 }, next_tid: 1 })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalError {
    Unbound(Var),
    Dangling(Addr),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Unbound(v) => write!(f, "unbound variable {v}"),
            EvalError::Dangling(a) => write!(f, "dangling address {a}"),
        }
    }
}

pub fn atomic_eval(ae: &AExp, env: &Env, store: &Store) -> Result<Value, EvalError> {
    match &ae.kind {
        AExpKind::Var(v) => {
            let addr = env.get(v).ok_or_else(|| EvalError::Unbound(v.clone()))?;
            store.get(addr).cloned().ok_or_else(|| EvalError::Dangling(addr.clone()))
        }
        AExpKind::Lam(lam) => {
            let lam_ref = LamRef { label: ae.label, lam: lam.clone() };
            Ok(Value::Clo { env: env.restrict(&lam.free), lam: lam_ref })
        }
        AExpKind::Num(n) => Ok(Value::Num(*n)),
        AExpKind::Bool(b) => Ok(Value::Bool(*b)),
    }
}

/// Why a thread cannot take a step. Stuck threads are reported, never
/// treated as crashes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stuck {
    Eval { site: Label, error: alloc::string::String },
    NotCallable { site: Label },
    Arity { site: Label, expected: usize, found: usize },
    NotAContinuation { site: Label },
    NotATid { site: Label },
    BadContinuationAddress,
}

impl fmt::Display for Stuck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stuck::Eval { site, error } => write!(f, "at {site}: {error}"),
            Stuck::NotCallable { site } => write!(f, "at {site}: operator is not callable"),
            Stuck::Arity { site, expected, found } => {
                write!(f, "at {site}: expected {expected} argument(s), found {found}")
            }
            Stuck::NotAContinuation { site } => write!(f, "at {site}: address does not hold a continuation"),
            Stuck::NotATid { site } => write!(f, "at {site}: join on a non-thread value"),
            Stuck::BadContinuationAddress => f.write_str("continuation pointer does not hold a continuation"),
        }
    }
}

/// Result of the sequential transition for one context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeqStep {
    Next(Context, Store),
    /// The value reached the halt continuation; the concurrent layer stores
    /// it at the thread's id and removes the thread.
    Halt(Value, Store),
    /// `spawn` and `join` are concurrent transitions.
    Concurrent,
    Stuck(Stuck),
}

enum Delivered {
    Next(Context),
    Halt(Value),
}

fn eval_at(site: Label, ae: &AExp, env: &Env, store: &Store) -> Result<Value, Stuck> {
    atomic_eval(ae, env, store).map_err(|e| Stuck::Eval { site, error: alloc::format!("{e}") })
}

/// Passes `value` to the continuation stored at `kont`.
fn deliver(value: Value, kont: &Addr, hist: Hist, store: &mut Store) -> Result<Delivered, Stuck> {
    match store.get(kont) {
        Some(Value::Kont(k)) => {
            let k = k.clone();
            Ok(resume(value, &k, hist, store))
        }
        _ => Err(Stuck::BadContinuationAddress),
    }
}

fn resume(value: Value, kont: &Kont, hist: Hist, store: &mut Store) -> Delivered {
    match kont {
        Kont::Frame { var, body, env, next } => {
            let addr = store.fresh_var(var.clone(), hist.clone());
            store.cells.insert(addr.clone(), value);
            Delivered::Next(Context { focus: body.clone(), env: env.extend(var.clone(), addr), kont: next.clone(), hist })
        }
        Kont::Halt => Delivered::Halt(value),
    }
}

fn finish(result: Result<Delivered, Stuck>, store: Store) -> SeqStep {
    match result {
        Ok(Delivered::Next(ctx)) => SeqStep::Next(ctx, store),
        Ok(Delivered::Halt(v)) => SeqStep::Halt(v, store),
        Err(stuck) => SeqStep::Stuck(stuck),
    }
}

pub fn step_seq(c: &Context, store: &Store) -> SeqStep {
    let mut store = store.clone();
    match &c.focus {
        Focus::Let(e) => {
            let ExprKind::Let { var, binding, body } = &e.kind else { unreachable!("let focus") };
            let frame = Kont::Frame { var: var.clone(), body: Focus::of(body), env: c.env.clone(), next: c.kont.clone() };
            let addr = store.fresh_kont(e.label, c.hist.clone());
            store.cells.insert(addr.clone(), Value::Kont(frame));
            let next = Context { focus: Focus::Call(binding.clone()), env: c.env.clone(), kont: addr, hist: c.hist.clone() };
            SeqStep::Next(next, store)
        }
        Focus::Atom(ae) => match eval_at(ae.label, ae, &c.env, &store) {
            Ok(v) => {
                let r = deliver(v, &c.kont, c.hist.clone(), &mut store);
                finish(r, store)
            }
            Err(s) => SeqStep::Stuck(s),
        },
        Focus::Call(call) => {
            let site = call.label;
            let hist = c.hist.record(&c.focus);
            match &call.kind {
                CExpKind::App { func, args } => {
                    let f = match eval_at(site, func, &c.env, &store) {
                        Ok(f) => f,
                        Err(s) => return SeqStep::Stuck(s),
                    };
                    let mut values = Vec::with_capacity(args.len());
                    for a in args {
                        match eval_at(site, a, &c.env, &store) {
                            Ok(v) => values.push(v),
                            Err(s) => return SeqStep::Stuck(s),
                        }
                    }
                    apply(site, f, values, c, hist, store)
                }
                CExpKind::CallCC(ae) => {
                    let f = match eval_at(site, ae, &c.env, &store) {
                        Ok(f) => f,
                        Err(s) => return SeqStep::Stuck(s),
                    };
                    let Value::Clo { lam, env } = f else {
                        return SeqStep::Stuck(Stuck::NotCallable { site });
                    };
                    if lam.lam.params.len() != 1 {
                        return SeqStep::Stuck(Stuck::Arity { site, expected: lam.lam.params.len(), found: 1 });
                    }
                    let param = lam.lam.params[0].clone();
                    let addr = store.fresh_var(param.clone(), hist.clone());
                    store.cells.insert(addr.clone(), Value::Addr(c.kont.clone()));
                    let next = Context {
                        focus: Focus::of(&lam.lam.body),
                        env: env.extend(param, addr),
                        kont: c.kont.clone(),
                        hist,
                    };
                    SeqStep::Next(next, store)
                }
                CExpKind::SetBang { var, value } => {
                    let Some(addr) = c.env.get(var).cloned() else {
                        return SeqStep::Stuck(Stuck::Eval { site, error: alloc::format!("unbound variable {var}") });
                    };
                    let v = match eval_at(site, value, &c.env, &store) {
                        Ok(v) => v,
                        Err(s) => return SeqStep::Stuck(s),
                    };
                    store.cells.insert(addr, v);
                    let r = deliver(Value::Bool(false), &c.kont, hist, &mut store);
                    finish(r, store)
                }
                CExpKind::If { cond, then, els } => {
                    let v = match eval_at(site, cond, &c.env, &store) {
                        Ok(v) => v,
                        Err(s) => return SeqStep::Stuck(s),
                    };
                    let arm = if v.is_truthy() { then } else { els };
                    let next = Context { focus: Focus::Call(arm.clone()), env: c.env.clone(), kont: c.kont.clone(), hist };
                    SeqStep::Next(next, store)
                }
                CExpKind::Cas { var, old, new } => {
                    let Some(addr) = c.env.get(var).cloned() else {
                        return SeqStep::Stuck(Stuck::Eval { site, error: alloc::format!("unbound variable {var}") });
                    };
                    let current = match store.get(&addr) {
                        Some(v) => v.clone(),
                        None => return SeqStep::Stuck(Stuck::Eval { site, error: alloc::format!("dangling address {addr}") }),
                    };
                    let (old_v, new_v) = match (eval_at(site, old, &c.env, &store), eval_at(site, new, &c.env, &store)) {
                        (Ok(o), Ok(n)) => (o, n),
                        (Err(s), _) | (_, Err(s)) => return SeqStep::Stuck(s),
                    };
                    let swapped = current == old_v;
                    if swapped {
                        store.cells.insert(addr, new_v);
                    }
                    let r = deliver(Value::Bool(swapped), &c.kont, hist, &mut store);
                    finish(r, store)
                }
                CExpKind::Spawn(_) | CExpKind::Join(_) => SeqStep::Concurrent,
            }
        }
    }
}

fn apply(site: Label, f: Value, args: Vec<Value>, c: &Context, hist: Hist, mut store: Store) -> SeqStep {
    match f {
        Value::Clo { lam, env } => {
            let params = &lam.lam.params;
            if params.len() != args.len() {
                return SeqStep::Stuck(Stuck::Arity { site, expected: params.len(), found: args.len() });
            }
            let mut bindings = Vec::with_capacity(params.len());
            for (p, v) in params.iter().zip(args) {
                let addr = store.fresh_var(p.clone(), hist.clone());
                store.cells.insert(addr.clone(), v);
                bindings.push((p.clone(), addr));
            }
            let next = Context { focus: Focus::of(&lam.lam.body), env: env.extend_all(bindings), kont: c.kont.clone(), hist };
            SeqStep::Next(next, store)
        }
        Value::Addr(a) => {
            if args.len() != 1 {
                return SeqStep::Stuck(Stuck::Arity { site, expected: 1, found: args.len() });
            }
            if !matches!(store.get(&a), Some(Value::Kont(_))) {
                return SeqStep::Stuck(Stuck::NotAContinuation { site });
            }
            let value = args.into_iter().next().expect("one argument");
            let r = deliver(value, &a, hist, &mut store);
            finish(r, store)
        }
        Value::Kont(k) => {
            if args.len() != 1 {
                return SeqStep::Stuck(Stuck::Arity { site, expected: 1, found: args.len() });
            }
            let value = args.into_iter().next().expect("one argument");
            let r = Ok(resume(value, &k, hist, &mut store));
            finish(r, store)
        }
        Value::Bool(_) | Value::Num(_) | Value::Tid(_) => SeqStep::Stuck(Stuck::NotCallable { site }),
    }
}

/// One interleaving step: thread `tid` moved and produced `state`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Successor {
    pub tid: Tid,
    pub state: CState,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Steps {
    pub successors: Vec<Successor>,
    pub stuck: Vec<(Tid, Stuck)>,
    /// Threads waiting in `join` on a thread that has not halted yet.
    pub blocked: Vec<Tid>,
}

/// All successors of `s`, one per thread that can move, in thread order.
pub fn step_concurrent(s: &CState) -> Steps {
    let mut out = Steps::default();
    for (tid, ctx) in &s.threads {
        match step_thread(s, tid, ctx) {
            ThreadStep::Moved(state) => out.successors.push(Successor { tid: tid.clone(), state }),
            ThreadStep::Blocked => out.blocked.push(tid.clone()),
            ThreadStep::Stuck(reason) => out.stuck.push((tid.clone(), reason)),
        }
    }
    out
}

enum ThreadStep {
    Moved(CState),
    Blocked,
    Stuck(Stuck),
}

fn step_thread(s: &CState, tid: &Tid, ctx: &Context) -> ThreadStep {
    if let Focus::Call(call) = &ctx.focus {
        match &call.kind {
            CExpKind::Spawn(body) => {
                let child_tid = Tid { seq: s.next_tid, site: Site::At(call.label), birth: ctx.hist.clone() };
                let child = Context { focus: Focus::of(body), env: ctx.env.clone(), kont: Addr::halt(), hist: Hist::empty() };
                let mut store = s.store.clone();
                let hist = ctx.hist.record(&ctx.focus);
                let delivered = deliver(Value::Tid(child_tid.clone()), &ctx.kont, hist, &mut store);
                let mut next = CState { threads: s.threads.clone(), store, next_tid: s.next_tid + 1 };
                next.threads.insert(child_tid, child);
                return settle(next, tid, delivered);
            }
            CExpKind::Join(ae) => {
                let target = match eval_at(call.label, ae, &ctx.env, &s.store) {
                    Ok(Value::Tid(t)) => t,
                    Ok(_) => return ThreadStep::Stuck(Stuck::NotATid { site: call.label }),
                    Err(stuck) => return ThreadStep::Stuck(stuck),
                };
                let Some(result) = s.store.get(&Addr::Tid(target)).cloned() else {
                    return ThreadStep::Blocked;
                };
                let mut store = s.store.clone();
                let hist = ctx.hist.record(&ctx.focus);
                let delivered = deliver(result, &ctx.kont, hist, &mut store);
                let next = CState { threads: s.threads.clone(), store, next_tid: s.next_tid };
                return settle(next, tid, delivered);
            }
            _ => {}
        }
    }
    match step_seq(ctx, &s.store) {
        SeqStep::Next(c, store) => {
            let mut threads = s.threads.clone();
            threads.insert(tid.clone(), c);
            ThreadStep::Moved(CState { threads, store, next_tid: s.next_tid })
        }
        SeqStep::Halt(v, store) => {
            let next = CState { threads: s.threads.clone(), store, next_tid: s.next_tid };
            settle(next, tid, Ok(Delivered::Halt(v)))
        }
        SeqStep::Concurrent => unreachable!("spawn and join handled above"),
        SeqStep::Stuck(reason) => ThreadStep::Stuck(reason),
    }
}

fn settle(mut next: CState, tid: &Tid, delivered: Result<Delivered, Stuck>) -> ThreadStep {
    match delivered {
        Ok(Delivered::Next(c)) => {
            next.threads.insert(tid.clone(), c);
            ThreadStep::Moved(next)
        }
        Ok(Delivered::Halt(v)) => {
            next.threads.remove(tid);
            next.store.cells.insert(Addr::Tid(tid.clone()), v);
            ThreadStep::Moved(next)
        }
        Err(reason) => ThreadStep::Stuck(reason),
    }
}
