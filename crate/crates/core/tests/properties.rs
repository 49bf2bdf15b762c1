//! Property tests over generated methods and arbitrary tokens.

use fixloc_core::corpus::{mutate, synth_seed_methods, MutateError};
use fixloc_core::diff::{enumerate_operation_paths, extract_oracle};
use fixloc_core::lang::{parse, render, split_subtokens};
use proptest::prelude::*;

fn arb_method() -> impl Strategy<Value = String> {
    any::<u64>().prop_map(|seed| synth_seed_methods(1, seed).remove(0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn render_round_trips(src in arb_method()) {
        let ast = parse(&src).unwrap();
        let rendered = render(&ast);
        let reparsed = parse(&rendered).unwrap();
        prop_assert!(ast.structurally_equals(&reparsed));
        prop_assert_eq!(render(&reparsed), rendered);
    }

    #[test]
    fn leaf_positions_increase_with_order(src in arb_method()) {
        let ast = parse(&src).unwrap();
        let mut prev = (0u32, 0u32);
        for i in 0..ast.leaf_count() {
            let pos = ast.leaf_pos(i);
            prop_assert!(pos > prev);
            prev = pos;
        }
    }

    #[test]
    fn path_count_equals_leaf_count(src in arb_method()) {
        let ast = parse(&src).unwrap();
        let paths = ast.ast_paths();
        prop_assert_eq!(paths.len(), ast.leaf_count());
        for p in &paths {
            prop_assert_eq!(p.kinds[0], fixloc_core::NodeKind::MethodDeclaration);
            prop_assert!(p.kinds.last().unwrap().is_leaf());
        }
        let ops = enumerate_operation_paths(&ast);
        prop_assert_eq!(ops.len(), 3 * ast.leaf_count());
    }

    #[test]
    fn mutants_round_trip_through_the_differ(seed in any::<u64>()) {
        let src = synth_seed_methods(1, seed).remove(0);
        match mutate(&src, None, seed ^ 0xabcd) {
            Ok(m) => {
                let buggy = parse(&m.record.buggy_src).unwrap();
                let fixed = parse(&m.record.fixed_src).unwrap();
                let recovered = extract_oracle(&buggy, &fixed).unwrap();
                prop_assert_eq!(recovered, m.record.oracle);
            }
            Err(MutateError::NoEligibleLeaf { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn subtokens_are_lowercase_and_idempotent(token in "[A-Za-z_][A-Za-z0-9_]{0,20}") {
        let parts = split_subtokens(&token);
        prop_assert!(!parts.is_empty());
        for p in &parts {
            prop_assert!(!p.is_empty());
            prop_assert!(!p.contains('_'));
            prop_assert!(!p.chars().any(|c| c.is_ascii_uppercase()));
        }
        // Splitting the joined output changes nothing further.
        let joined = parts.join("_");
        prop_assert_eq!(split_subtokens(&joined), parts);
    }
}
