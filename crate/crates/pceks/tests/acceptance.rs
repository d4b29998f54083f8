//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for
//! each, and exits non-zero if any failed.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use pceks::{corpus, Format, Mode, RunConfig};
use pceks_core::concrete::{atomic_eval, explore, Value};
use pceks_core::control::Focus;
use pceks_core::domain::{abstract_state, AState, AValue, Policy, TidStrategy};
use pceks_core::flow::{collapse, flows_to, iteration_bound, lfp_collapsed};
use pceks_core::machine::{lfp_transfer, lfp_with, reach};
use pceks_core::simulation::check_simulation;
use pceks_core::singleton::{abstract_counted, mhp_in, reach_counted, self_mhp_in, Counted};
use pceks_core::syntax::{subexpressions, CExpKind, Expr, ExprKind, Label, Node};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

type Outcome = Result<String, String>;

fn program(name: &str) -> Arc<Expr> {
    let path = corpus::path(name).unwrap_or_else(|| panic!("unknown program {name}"));
    pceks::load(&path).unwrap_or_else(|e| panic!("{e}")).program.root
}

fn all_programs() -> Vec<(&'static str, Arc<Expr>)> {
    corpus::PROGRAMS.iter().map(|(n, _)| (*n, program(n))).collect()
}

fn policies(tids: &[TidStrategy]) -> Vec<Policy> {
    [0, 1].iter().flat_map(|&k| tids.iter().map(move |&t| Policy::new(k, t).unwrap())).collect()
}

const ALL_TIDS: [TidStrategy; 3] = [TidStrategy::Global, TidStrategy::SiteHist, TidStrategy::SitePool(2)];

fn spawn_body(e: &Expr) -> Arc<Expr> {
    subexpressions(e)
        .into_values()
        .find_map(|n| match n {
            Node::CExp(c) => match &c.kind {
                CExpKind::Spawn(body) => Some(body.clone()),
                _ => None,
            },
            _ => None,
        })
        .expect("program spawns")
}

/// The `let` binding `var`, as (binding label, body).
fn let_named(e: &Expr, var: &str) -> (Label, Arc<Expr>) {
    subexpressions(e)
        .into_values()
        .find_map(|n| match n {
            Node::Expr(Expr { kind: ExprKind::Let { var: v, binding, body }, .. }) if v.as_str() == var => {
                Some((binding.label, body.clone()))
            }
            _ => None,
        })
        .unwrap_or_else(|| panic!("no let binding {var}"))
}

fn labels_of(e: &Expr) -> BTreeSet<Label> {
    subexpressions(e).into_keys().collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn soundness_simulation() -> Outcome {
    let mut checks = 0;
    let mut slowest = Duration::ZERO;
    for (name, e) in all_programs() {
        let started = Instant::now();
        let x = explore(&e, 10000, 10000).map_err(|err| err.to_string())?;
        for p in policies(&ALL_TIDS) {
            let r = reach(&e, p).unwrap();
            let sim = check_simulation(&x, &r, |s| abstract_state(s, &p), AState::leq);
            ensure(sim.holds(), || format!("{name} uncounted {p:?}: {:?}", sim.failures.first()))?;
            let rc = reach_counted(&e, p).unwrap();
            let sim_c = check_simulation(&x, &rc, |s| abstract_counted(s, &p), |a, b| a.leq(b));
            ensure(sim_c.holds(), || format!("{name} counted {p:?}: {:?}", sim_c.failures.first()))?;
            checks += sim.checked + sim_c.checked;
        }
        let took = started.elapsed();
        ensure(took < Duration::from_secs(60), || format!("{name} took {took:?}"))?;
        slowest = slowest.max(took);
    }
    Ok(format!("{checks} edge checks, 0 violations, slowest program {:.2}s", slowest.as_secs_f64()))
}

fn mhp_ground_truth() -> Outcome {
    let e = program("P_PAR");
    let child = Focus::of(&spawn_body(&e)).label();
    let ExprKind::Let { body, .. } = &e.kind else { return Err("P_PAR is not a let".into()) };
    let parent = Focus::of(body).label();
    let pair = (child.min(parent), child.max(parent));
    let x = explore(&e, 10000, 10000).unwrap();
    ensure(x.co_live().contains(&pair), || format!("no interleaving has {pair:?} live"))?;
    for p in policies(&[TidStrategy::Global, TidStrategy::SiteHist]) {
        ensure(mhp_in(&reach(&e, p).unwrap()).contains(&pair), || format!("uncounted {p:?} misses {pair:?}"))?;
        ensure(mhp_in(&reach_counted(&e, p).unwrap()).contains(&pair), || format!("counted {p:?} misses {pair:?}"))?;
    }

    let id = program("P_ID");
    ensure(explore(&id, 10000, 10000).unwrap().co_live().is_empty(), || "P_ID has co-live threads".into())?;
    for p in policies(&ALL_TIDS) {
        let m = mhp_in(&reach_counted(&id, p).unwrap());
        ensure(m.is_empty(), || format!("P_ID counted {p:?}: {m:?}"))?;
    }
    Ok(format!("P_PAR pair ({}, {}) concrete and abstract; P_ID empty", pair.0, pair.1))
}

fn singleton_precision() -> Outcome {
    let e = program("P_BARRIER");
    let before = labels_of(&spawn_body(&e));
    let (_, after_body) = let_named(&e, "r");
    let after = labels_of(&after_body);
    let crossing = |pairs: &BTreeSet<(Label, Label)>| -> Vec<(Label, Label)> {
        pairs
            .iter()
            .copied()
            .filter(|(a, b)| (before.contains(a) && after.contains(b)) || (before.contains(b) && after.contains(a)))
            .collect()
    };
    let x = explore(&e, 10000, 10000).unwrap();
    let concrete = crossing(&x.co_live());
    ensure(concrete.is_empty(), || format!("concrete co-live across the barrier: {concrete:?}"))?;
    let mut weak_pairs = 0;
    for k in [0, 1] {
        let p = Policy::new(k, TidStrategy::SiteHist).unwrap();
        let counted = crossing(&mhp_in(&reach_counted(&e, p).unwrap()));
        ensure(counted.is_empty(), || format!("counted k={k} reports {counted:?}"))?;
        let weak = crossing(&mhp_in(&reach(&e, p).unwrap()));
        ensure(!weak.is_empty(), || format!("uncounted k={k} reports no crossing pair"))?;
        weak_pairs += weak.len();
    }
    Ok(format!("counted 0 crossing pairs, uncounted {weak_pairs}, concrete 0"))
}

fn self_parallelism() -> Outcome {
    let e = program("P_POOL");
    let (post_join, _) = let_named(&e, "after");
    for k in [0, 1] {
        let pool = self_mhp_in(&reach_counted(&e, Policy::new(k, TidStrategy::SitePool(2)).unwrap()).unwrap());
        ensure(!pool.contains(&post_join), || format!("pool k={k}: label {post_join} is self-parallel"))?;
        let global = self_mhp_in(&reach_counted(&e, Policy::new(k, TidStrategy::Global).unwrap()).unwrap());
        ensure(global.contains(&post_join), || format!("global k={k}: label {post_join} not self-parallel"))?;
    }
    Ok(format!("label {post_join}: pool(2) no, global yes"))
}

fn collapsed_soundness() -> Outcome {
    let mut n = 0;
    for (name, e) in all_programs() {
        for p in policies(&ALL_TIDS) {
            let c = lfp_collapsed(&e, p).unwrap();
            let r = reach(&e, p).unwrap();
            ensure(collapse(r.iter()).leq(&c.state), || format!("{name} {p:?}: join of states not below"))?;
            ensure(flows_to(r.iter()).is_subset(&flows_to([&c.state])), || format!("{name} {p:?}: flows not contained"))?;
            let rc = reach_counted(&e, p).unwrap();
            ensure(collapse(rc.iter().map(|s| &s.base)).leq(&c.state), || format!("{name} {p:?}: counted not below"))?;
            n += 1;
        }
    }
    Ok(format!("{n} program/config pairs"))
}

fn iteration_bound_holds() -> Outcome {
    let mut worst = 0.0f64;
    for (name, e) in all_programs() {
        for p in policies(&ALL_TIDS) {
            let c = lfp_collapsed(&e, p).unwrap();
            let bound = iteration_bound(&e, &p);
            ensure(c.iterations as u128 <= bound, || format!("{name} {p:?}: {} > {bound}", c.iterations))?;
            worst = worst.max(c.iterations as f64 / bound as f64);
        }
    }
    Ok(format!("largest iterations/bound ratio {worst:.3}"))
}

fn kleene_equivalence() -> Outcome {
    let mut longest = 0;
    for (name, e) in all_programs() {
        for p in policies(&ALL_TIDS) {
            let k = lfp_transfer(&e, p).unwrap();
            ensure(k.states.same_states(&reach(&e, p).unwrap()), || format!("{name} {p:?}: uncounted differs"))?;
            ensure(k.chain.windows(2).all(|w| w[0] <= w[1]), || format!("{name} {p:?}: chain not increasing"))?;
            let n = k.stable_at();
            ensure(k.chain[n] == k.chain[n + 1], || format!("{name} {p:?}: chain not stable"))?;
            longest = longest.max(n);
            let kc = lfp_with(&Counted::new(&e, p).unwrap());
            ensure(kc.states.same_states(&reach_counted(&e, p).unwrap()), || format!("{name} {p:?}: counted differs"))?;
        }
    }
    Ok(format!("all equal; longest chain stabilizes at n = {longest}"))
}

fn futures_use_case() -> Outcome {
    let e = program("P_FUT");
    let (_, tail) = let_named(&e, "a");
    let ExprKind::Call(call) = &tail.kind else { return Err("tail is not a call".into()) };
    let CExpKind::App { args, .. } = &call.kind else { return Err("tail is not an application".into()) };
    let site = args[0].label;
    let (join_site, _) = let_named(&e, "a");

    let has_tid = |facts: &BTreeSet<pceks_core::flow::FlowFact>, l: Label| {
        facts.iter().any(|f| f.site == l && matches!(f.value, AValue::Tid(_)))
    };
    for p in policies(&ALL_TIDS) {
        let plain = flows_to(reach(&e, p).unwrap().iter());
        let counted = flows_to(reach_counted(&e, p).unwrap().iter().map(|s| &s.base));
        let collapsed = flows_to([&lfp_collapsed(&e, p).unwrap().state]);
        for (what, facts) in [("uncounted", &plain), ("counted", &counted), ("collapsed", &collapsed)] {
            ensure(!has_tid(facts, site), || format!("{what} {p:?}: thread id flows to {site}"))?;
            ensure(facts.iter().any(|f| f.site == site), || format!("{what} {p:?}: nothing flows to {site}"))?;
        }
        // The joined operand does carry a thread id, so the check is not vacuous.
        let join_operand = subexpressions(&e)
            .get(&join_site)
            .and_then(|n| match n {
                Node::CExp(c) => match &c.kind {
                    CExpKind::Join(a) => Some(a.label),
                    _ => None,
                },
                _ => None,
            })
            .ok_or("no join")?;
        ensure(has_tid(&plain, join_operand), || format!("{p:?}: no thread id reaches the join"))?;
    }

    let x = explore(&e, 10000, 10000).unwrap();
    let mut visits = 0;
    for s in &x.states {
        for ctx in s.threads.values().filter(|c| c.focus.label() == call.label) {
            let v = atomic_eval(&args[0], &ctx.env, &s.store).map_err(|err| err.to_string())?;
            ensure(!matches!(v, Value::Tid(_)), || "a thread id reached the site concretely".into())?;
            visits += 1;
        }
    }
    ensure(visits > 0, || "the site is never reached concretely".into())?;
    Ok(format!("site {site}: no thread id in any analysis; {visits} concrete visits agree"))
}

fn lattice_and_determinism() -> Outcome {
    // Random states are drawn from entries seen by real analyses.
    let mut threads = BTreeSet::new();
    let mut cells = BTreeSet::new();
    for (_, e) in all_programs() {
        let c = lfp_collapsed(&e, Policy::new(1, TidStrategy::SitePool(2)).unwrap()).unwrap().state;
        threads.extend(c.threads.iter().flat_map(|(t, cs)| cs.iter().map(move |x| (t.clone(), x.clone()))));
        cells.extend(c.store.iter().flat_map(|(a, vs)| vs.iter().map(move |v| (a.clone(), v.clone()))));
    }
    let threads: Vec<_> = threads.into_iter().take(48).collect();
    let cells: Vec<_> = cells.into_iter().take(48).collect();
    let (nt, nc) = (threads.len(), cells.len());
    let state = (
        prop::collection::btree_set(0..nt, 0..6),
        prop::collection::btree_set(0..nc, 0..6),
        prop::collection::btree_set(0u32..2, 0..2),
    )
        .prop_map(move |(ts, cs, cursor)| {
            let mut s = AState::bottom();
            for i in ts {
                s.add_context(threads[i].0.clone(), threads[i].1.clone());
            }
            for i in cs {
                s.join_cell(cells[i].0.clone(), [cells[i].1.clone()]);
            }
            s.cursor = cursor;
            s
        });
    let cases = 1000;
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    runner
        .run(&(state.clone(), state.clone(), state), |(x, y, z)| {
            prop_assert!(x.leq(&x));
            if x.leq(&y) && y.leq(&x) {
                prop_assert_eq!(&x, &y);
            }
            if x.leq(&y) && y.leq(&z) {
                prop_assert!(x.leq(&z));
            }
            let j = x.join(&y);
            prop_assert!(x.leq(&j) && y.leq(&j));
            prop_assert_eq!(&j, &y.join(&x));
            prop_assert_eq!(&x.join(&x), &x);
            prop_assert_eq!(j.join(&z), x.join(&y.join(&z)));
            prop_assert_eq!(&x.join(&AState::bottom()), &x);
            if x.leq(&z) && y.leq(&z) {
                prop_assert!(j.leq(&z));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;

    let modes = [Mode::Explore, Mode::Analyze, Mode::AnalyzeCounted, Mode::AnalyzeCollapsed, Mode::SoundnessCheck];
    let mut reports = 0;
    for (name, _) in corpus::PROGRAMS {
        let path = corpus::path(name).unwrap();
        for mode in modes {
            let mut config = RunConfig::new(mode, &path);
            config.format = Format::Json;
            let first = pceks::run(&config).map_err(|e| e.to_string())?.emit(Format::Json);
            let second = pceks::run(&config).map_err(|e| e.to_string())?.emit(Format::Json);
            ensure(first == second, || format!("{name} {mode:?}: JSON differs between runs"))?;
            let back = pceks::AnalysisReport::from_json(&first).map_err(|e| e.to_string())?;
            ensure(back.to_json() == first, || format!("{name} {mode:?}: JSON does not round-trip"))?;
            reports += 1;
        }
    }
    Ok(format!("{cases} random cases; {reports} reports byte-identical"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("soundness simulation", soundness_simulation),
        ("MHP ground truth", mhp_ground_truth),
        ("singleton precision", singleton_precision),
        ("self-MHP", self_parallelism),
        ("collapsed-analysis soundness", collapsed_soundness),
        ("iteration bound", iteration_bound_holds),
        ("Kleene equivalence", kleene_equivalence),
        ("futures use case", futures_use_case),
        ("lattice laws and determinism", lattice_and_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} ({secs:.2}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
