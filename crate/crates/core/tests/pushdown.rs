//! Wrapper conformance: native evaluation agrees with the reference
//! evaluator over a full scan, results conform to their schema, call
//! accounting is exact, and denied requests never reach the native layer.

mod common;

use proptest::prelude::*;

use rubicon_core::catalog::WrapperKind;
use rubicon_core::value::Value;
use rubicon_core::wrapper::{AccessRule, AccessRules, Decision, FindRequest, MatchMode};

use common::runtime;
use common::wrappers::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn native_evaluation_matches_reference(seed in any::<u64>()) {
        prop_assert_eq!(soundness_case(seed), Ok(()));
    }

    #[test]
    fn probe_batches_equal_union_of_finds(seed in any::<u64>()) {
        prop_assert_eq!(probe_case(seed), Ok(()));
    }
}

#[test]
fn denied_requests_make_no_native_calls() {
    for seed in 0..200u64 {
        assert_eq!(denied_case(seed), Ok(()), "seed {seed}");
    }
}

#[test]
fn first_matching_rule_wins() {
    let allow_then_deny = AccessRules::from_rules(&[
        AccessRule { principal: "*".into(), table: "*".into(), decision: Decision::Allow },
        AccessRule { principal: "guest".into(), table: "*".into(), decision: Decision::Deny },
    ])
    .unwrap();
    assert_eq!(allow_then_deny.decide("guest", "S.t"), Decision::Allow);
    let unmatched = AccessRules::from_rules(&[AccessRule {
        principal: "bob".into(),
        table: "*".into(),
        decision: Decision::Allow,
    }])
    .unwrap();
    assert_eq!(unmatched.decide("guest", "S.t"), Decision::Deny);
    assert_eq!(AccessRules::allow_all().decide("guest", "S.t"), Decision::Allow);
}

#[test]
fn probe_by_three_keys_two_present() {
    use rubicon_core::catalog::{ColumnDef, TableSchema};
    use rubicon_core::value::SemanticType;
    let t = TableSchema::new("S.t", vec![ColumnDef::new("k", SemanticType::Integer)]);
    let rows = vec![vec![Value::Integer(1)], vec![Value::Integer(2)], vec![Value::Integer(5)]];
    let rt = runtime(WrapperKind::RelationalFixture, vec![(t.clone(), rows)], AccessRules::allow_all());
    let vals = [Value::Integer(1), Value::Integer(2), Value::Integer(3)];
    let out = rt
        .execute_probe_batch(&FindRequest::new(t, "u"), "k", MatchMode::Exact, &vals, false)
        .unwrap();
    assert_eq!((out.len(), out.call_count()), (2, 3));
}
