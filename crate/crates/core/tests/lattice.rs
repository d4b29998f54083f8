mod common;

use pceks_core::domain::AState;
use pceks_core::singleton::{Count, TCount};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

fn runner() -> TestRunner {
    TestRunner::new(Config { cases: 1000, ..Config::default() })
}

#[test]
fn order_is_a_partial_order() {
    let u = common::universe();
    let s = common::astate(&u);
    runner()
        .run(&(s.clone(), s.clone(), s), |(x, y, z)| {
            prop_assert!(x.leq(&x));
            if x.leq(&y) && y.leq(&x) {
                prop_assert_eq!(&x, &y);
            }
            if x.leq(&y) && y.leq(&z) {
                prop_assert!(x.leq(&z));
            }
            Ok(())
        })
        .unwrap();
}

#[test]
fn join_is_least_upper_bound() {
    let u = common::universe();
    let s = common::astate(&u);
    runner()
        .run(&(s.clone(), s.clone(), s), |(x, y, z)| {
            let j = x.join(&y);
            prop_assert!(x.leq(&j) && y.leq(&j));
            prop_assert_eq!(&j, &y.join(&x));
            prop_assert_eq!(x.join(&x), x.clone());
            prop_assert_eq!(x.join(&y).join(&z), x.join(&y.join(&z)));
            prop_assert_eq!(x.join(&AState::bottom()), x.clone());
            prop_assert!(AState::bottom().leq(&x));
            if x.leq(&z) && y.leq(&z) {
                prop_assert!(j.leq(&z));
            }
            prop_assert_eq!(x.leq(&y), x.join(&y) == y);
            Ok(())
        })
        .unwrap();
}

#[test]
fn join_in_reports_growth() {
    let u = common::universe();
    let s = common::astate(&u);
    runner()
        .run(&(s.clone(), s), |(x, y)| {
            let mut acc = x.clone();
            let grew = acc.join_in(&y);
            prop_assert_eq!(grew, !y.leq(&x));
            prop_assert_eq!(acc, x.join(&y));
            Ok(())
        })
        .unwrap();
}

#[test]
fn count_order_matches_increment() {
    let counts = prop::sample::select(vec![Count::Zero, Count::One, Count::Many]);
    runner()
        .run(&(counts.clone(), counts), |(a, b)| {
            prop_assert!(a <= a.incr());
            if a <= b {
                prop_assert!(a.incr() <= b.incr());
            }
            let mut m = TCount::default();
            let t = pceks_core::domain::ATid::Root;
            m.set(t.clone(), a);
            let mut n = TCount::default();
            n.set(t, b);
            prop_assert_eq!(m.leq(&n), a <= b);
            Ok(())
        })
        .unwrap();
}
