#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use pceks_core::domain::{AAddr, AContext, AState, ATid, AValue, Policy, TidStrategy};
use pceks_core::flow::lfp_collapsed;
use pceks_core::syntax::{parse, Expr};
use proptest::prelude::*;

pub fn corpus() -> Vec<(String, Arc<Expr>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|f| f.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "pceks"))
        .map(|p| {
            let src = std::fs::read_to_string(&p).unwrap();
            (p.file_stem().unwrap().to_string_lossy().into_owned(), Arc::new(parse(&src).unwrap()))
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

pub fn policies() -> Vec<Policy> {
    let mut out = Vec::new();
    for k in [0, 1] {
        for t in [TidStrategy::Global, TidStrategy::SiteHist, TidStrategy::SitePool(2)] {
            out.push(Policy::new(k, t).unwrap());
        }
    }
    out
}

/// Every thread entry and store entry seen by the collapsed analyses of
/// the corpus: the raw material for random abstract states.
pub struct Universe {
    pub threads: Vec<(ATid, AContext)>,
    pub cells: Vec<(AAddr, AValue)>,
}

pub fn universe() -> Universe {
    let mut threads = BTreeSet::new();
    let mut cells = BTreeSet::new();
    for (_, e) in corpus() {
        for p in [Policy::default(), Policy::new(1, TidStrategy::SitePool(2)).unwrap()] {
            let c = lfp_collapsed(&e, p).unwrap().state;
            for (t, ctxs) in &c.threads {
                threads.extend(ctxs.iter().map(|x| (t.clone(), x.clone())));
            }
            for (a, vs) in &c.store {
                cells.extend(vs.iter().map(|v| (a.clone(), v.clone())));
            }
        }
    }
    Universe { threads: threads.into_iter().collect(), cells: cells.into_iter().collect() }
}

/// Random sub-states of the universe. Small index ranges make overlap
/// between independently drawn states likely.
pub fn astate(u: &Universe) -> impl Strategy<Value = AState> + Clone {
    let nt = u.threads.len().min(40);
    let nc = u.cells.len().min(40);
    let threads = u.threads[..nt].to_vec();
    let cells = u.cells[..nc].to_vec();
    (
        prop::collection::btree_set(0..nt, 0..8),
        prop::collection::btree_set(0..nc, 0..8),
        prop::collection::btree_set(0u32..3, 0..3),
    )
        .prop_map(move |(ts, cs, cursor)| {
            let mut s = AState::bottom();
            for i in ts {
                let (t, c) = threads[i].clone();
                s.add_context(t, c);
            }
            for i in cs {
                let (a, v) = cells[i].clone();
                s.join_cell(a, [v]);
            }
            s.cursor = cursor;
            s
        })
}

const VARS: [&str; 3] = ["a", "b", "c"];

fn var() -> impl Strategy<Value = String> {
    prop::sample::select(&VARS[..]).prop_map(str::to_string)
}

fn atom(depth: u32) -> BoxedStrategy<String> {
    let leaf = prop_oneof![var(), (-3i64..4).prop_map(|n| n.to_string()), any::<bool>().prop_map(|b| if b { "#t".into() } else { "#f".into() })];
    if depth == 0 {
        return leaf.boxed();
    }
    prop_oneof![3 => leaf, 1 => (var(), expr(depth - 1)).prop_map(|(p, body)| format!("(lambda ({p}) {body})"))].boxed()
}

fn call(depth: u32) -> BoxedStrategy<String> {
    let d = depth.saturating_sub(1);
    let mut options = vec![
        (atom(d), atom(d)).prop_map(|(f, x)| format!("({f} {x})")).boxed(),
        atom(d).prop_map(|f| format!("(callcc {f})")).boxed(),
        (var(), atom(d)).prop_map(|(v, x)| format!("(set! {v} {x})")).boxed(),
        (var(), atom(d), atom(d)).prop_map(|(v, o, n)| format!("(cas {v} {o} {n})")).boxed(),
        atom(d).prop_map(|t| format!("(join {t})")).boxed(),
    ];
    if depth > 0 {
        options.push(expr(d).prop_map(|e| format!("(spawn {e})")).boxed());
        options.push((atom(d), call(d), call(d)).prop_map(|(c, t, e)| format!("(if {c} {t} {e})")).boxed());
    }
    prop::strategy::Union::new(options).boxed()
}

fn expr(depth: u32) -> BoxedStrategy<String> {
    if depth == 0 {
        return prop_oneof![atom(0), call(0)].boxed();
    }
    prop_oneof![
        atom(depth),
        call(depth),
        (var(), call(depth - 1), expr(depth - 1)).prop_map(|(v, c, b)| format!("(let (({v} {c})) {b})")),
    ]
    .boxed()
}

/// Closed random programs: an expression over `a`, `b`, `c` applied to
/// initial values.
pub fn program() -> impl Strategy<Value = String> {
    expr(3).prop_map(|e| format!("((lambda (a b c) {e}) 1 #f (lambda (x) x))"))
}
