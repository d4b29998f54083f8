mod common;

use pceks_core::syntax::{check_grammar, parse, parse_program};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn printing_round_trips(src in common::program()) {
        let e = parse(&src).unwrap();
        let again = parse(&e.to_string()).unwrap();
        prop_assert_eq!(&e, &again);
        prop_assert!(check_grammar(&e));
    }

    #[test]
    fn parsing_is_deterministic(src in common::program()) {
        let a = parse_program(&src).unwrap();
        let b = parse_program(&src).unwrap();
        prop_assert_eq!(&a.root, &b.root);
        prop_assert_eq!(a.label_count(), b.label_count());
    }

    #[test]
    fn comments_and_layout_are_ignored(src in common::program()) {
        let spaced = format!(";; header\n{}\n; trailer", src.replace(' ', "\n  "));
        prop_assert_eq!(parse(&src).unwrap(), parse(&spaced).unwrap());
    }
}
