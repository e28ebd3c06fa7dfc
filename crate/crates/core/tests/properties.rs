//! Property tests for the distribution invariants.

use proptest::prelude::*;
use smslab_core::claim::{Claim, ClaimSet, ClaimVector};
use smslab_core::dist::{Budget, Event};
use smslab_core::sms::per_step_spec;
use smslab_core::{Exact, Prob};

fn claim_strategy() -> impl Strategy<Value = Claim> {
    ("q[a-c]", "[0-1]").prop_map(|(q, a)| Claim::new(q, a))
}

fn claim_set_strategy() -> impl Strategy<Value = ClaimSet> {
    proptest::collection::btree_set(claim_strategy(), 0..4)
        .prop_map(ClaimSet::from_claims)
}

/// Random single-step spec over at most three questions and two answers.
fn spec_strategy() -> impl Strategy<Value = smslab_core::Sms> {
    proptest::collection::vec(
        (proptest::collection::btree_set(claim_strategy(), 1..4), 1u8..8),
        1..6,
    )
    .prop_map(|rows| {
        let mut table: Vec<(ClaimVector, Exact)> = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        let total: i64 = rows.iter().map(|(_, w)| *w as i64).sum();
        for (claims, w) in rows {
            let v = ClaimVector::new(claims.into_iter().collect()).unwrap();
            if seen.insert(v.clone()) {
                table.push((v, Exact::ratio(w as i64, total)));
            }
        }
        // Deduplication can lose mass; renormalize exactly.
        let mass: Exact = table.iter().map(|(_, p)| p.clone()).sum();
        let table = table
            .into_iter()
            .map(|(v, p)| (v, p / mass.clone()))
            .collect();
        per_step_spec(&["qa", "qb", "qc"], &["0", "1"], vec![table], None)
    })
}

proptest! {
    #[test]
    fn claim_sets_round_trip_through_serialization(set in claim_set_strategy()) {
        let json = serde_json::to_string(&set).unwrap();
        let back: ClaimSet = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(set, back);
    }

    #[test]
    fn unordering_is_stable_under_vector_permutation(set in claim_set_strategy()) {
        prop_assume!(!set.is_empty());
        let mut claims: Vec<Claim> = set.iter().cloned().collect();
        claims.reverse();
        let v = ClaimVector::new(claims).unwrap();
        prop_assert_eq!(v.unorder(), set);
    }

    #[test]
    fn dominance_and_superset_monotonicity(
        spec in spec_strategy(),
        s1 in claim_set_strategy(),
        s2 in claim_set_strategy(),
    ) {
        let sup1 = spec.prob_superset(1, &s1).unwrap();
        let exact1 = spec.prob_exact(1, &s1).unwrap();
        prop_assert!(exact1 <= sup1);

        let union = s1.union(&s2);
        let sup_union = spec.prob_superset(1, &union).unwrap();
        prop_assert!(sup_union <= sup1, "larger sets cannot be more probable");
    }

    #[test]
    fn responses_are_exactly_normalized(spec in spec_strategy()) {
        let qa = smslab_core::Question::new("qa");
        match spec.response_dist(1, &[qa], &ClaimSet::empty()) {
            Ok((d, _)) => prop_assert_eq!(d.total(), Exact::ratio(1, 1)),
            Err(_) => {} // qa never asked: conditioning error is legal
        }
    }

    #[test]
    fn event_probabilities_stay_in_range(spec in spec_strategy(), s in claim_set_strategy()) {
        let dist = spec.step_dist(1).unwrap();
        let mut budget = Budget::standard();
        let p = dist.event_prob(&Event::superset(s), &mut budget).unwrap();
        prop_assert!(p >= Exact::ratio(0, 1) && p <= Exact::ratio(1, 1));
    }
}
