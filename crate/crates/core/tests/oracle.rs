mod common;

use common::{arb_topology, arb_trace, replay_matches};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simulator_matches_reference(
        (topology, trace) in arb_topology(5, 16).prop_flat_map(|t| {
            let n = t.node_count();
            let s = t.slice_count();
            (Just(t), arb_trace(n, s + 1, 200))
        })
    ) {
        if let Err(e) = replay_matches(&topology, &trace) {
            prop_assert!(false, "{}", e);
        }
    }
}
