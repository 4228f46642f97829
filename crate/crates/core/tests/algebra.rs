use proptest::prelude::*;
use randlab::gen::{self, EnumeratorParams, FunctionalParams, TreeParams};
use randlab::staged::{Enumerator, StagedOpenSet};
use randlab::{BitString, CylinderSet, Dyadic};

const DEPTH: usize = 8;

fn bitstring(max: usize) -> impl Strategy<Value = BitString> {
    prop::collection::vec(any::<bool>(), 0..=max).prop_map(BitString::from_bits)
}

fn strings(max_len: usize, max_count: usize) -> impl Strategy<Value = Vec<BitString>> {
    prop::collection::vec(bitstring(max_len), 0..=max_count)
}

/// Counts depth-8 strings with a prefix in `raw`, read straight off the
/// generating strings without the antichain.
fn brute_measure(raw: &[BitString]) -> Dyadic {
    let hits = BitString::all_of_length(DEPTH)
        .filter(|x| raw.iter().any(|s| s.is_prefix_of(x)))
        .count();
    Dyadic::new(hits as u64, DEPTH as u32)
}

fn brute_members(set: &CylinderSet) -> Vec<BitString> {
    BitString::all_of_length(DEPTH)
        .filter(|x| set.contains_prefix_of(x))
        .collect()
}

proptest! {
    #[test]
    fn antichain_measure_matches_brute_force(raw in strings(DEPTH, 12)) {
        let set = CylinderSet::normalize(raw.clone());
        prop_assert_eq!(set.measure(), brute_measure(&raw));
    }

    #[test]
    fn inclusion_exclusion(a in strings(6, 8), b in strings(6, 8)) {
        let a = CylinderSet::normalize(a);
        let b = CylinderSet::normalize(b);
        let lhs = a.union(&b).measure() + a.intersection(&b).measure();
        let rhs = a.measure() + b.measure();
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(
            a.difference(&b).measure(),
            a.measure() - a.intersection(&b).measure()
        );
    }

    #[test]
    fn normalize_idempotent_and_order_free(raw in strings(7, 10)) {
        let once = CylinderSet::normalize(raw.clone());
        let twice = CylinderSet::normalize(once.iter().cloned());
        prop_assert_eq!(&once, &twice);
        let mut reversed = raw.clone();
        reversed.reverse();
        prop_assert_eq!(&once, &CylinderSet::normalize(reversed));
        let strs: Vec<&BitString> = once.iter().collect();
        for (i, s) in strs.iter().enumerate() {
            for t in &strs[i + 1..] {
                prop_assert!(!s.comparable(t));
            }
        }
    }

    #[test]
    fn boolean_ops_agree_with_pointwise_membership(a in strings(6, 6), b in strings(6, 6)) {
        let a = CylinderSet::normalize(a);
        let b = CylinderSet::normalize(b);
        for x in BitString::all_of_length(DEPTH) {
            let (ia, ib) = (a.contains_prefix_of(&x), b.contains_prefix_of(&x));
            prop_assert_eq!(a.union(&b).contains_prefix_of(&x), ia || ib);
            prop_assert_eq!(a.intersection(&b).contains_prefix_of(&x), ia && ib);
            prop_assert_eq!(a.difference(&b).contains_prefix_of(&x), ia && !ib);
            prop_assert_eq!(a.complement().contains_prefix_of(&x), !ia);
        }
        prop_assert_eq!(a.is_subset_of(&b), brute_members(&a).iter().all(|x| b.contains_prefix_of(x)));
    }

    #[test]
    fn enumerator_measure_is_monotone(seed in any::<u64>()) {
        let e = gen::enumerator(&EnumeratorParams {
            seed, count: 10, min_len: 1, max_len: 6, horizon: 8,
        });
        let open = StagedOpenSet::new(e);
        let mut last = Dyadic::zero();
        for s in 0..=8 {
            let m = open.measure_at(s);
            prop_assert!(m >= last);
            last = m;
        }
    }

    #[test]
    fn tree_measure_is_antitone(seed in any::<u64>()) {
        let t = gen::tree(&TreeParams {
            seed, depth: 10, removals: 8, min_len: 2, floor_log2: 1, horizon: 8,
        });
        let mut last = Dyadic::one();
        for s in 0..=8 {
            let m = t.class_measure(s);
            prop_assert!(m <= last);
            last = m;
        }
        prop_assert!(t.class_measure(8) >= Dyadic::pow2_neg(1));
    }

    #[test]
    fn preimage_measure_is_monotone(seed in any::<u64>(), tau in bitstring(3)) {
        let phi = gen::functional(&FunctionalParams {
            seed, max_oracle_len: 5, axiom_percent: 50, max_emit: 2, horizon: 6,
        });
        let mut last = Dyadic::zero();
        for s in 0..=6 {
            let m = phi.preimage(&tau, s).measure();
            prop_assert!(m >= last);
            last = m;
        }
    }
}

#[test]
fn measure_examples() {
    let set: CylinderSet = "{0, 10}".parse().unwrap();
    assert_eq!(set.measure(), Dyadic::new(3, 2));
    assert_eq!(CylinderSet::normalize(["0", "1"].map(randlab::bits::bs)), CylinderSet::full());
    assert_eq!(CylinderSet::full().measure(), Dyadic::one());
    assert_eq!(CylinderSet::empty().measure(), Dyadic::zero());
}

#[test]
fn enumerator_rejects_decreasing_stages() {
    let bad = Enumerator::new(
        vec![(3, vec![randlab::bits::bs("0")]), (1, vec![randlab::bits::bs("1")])],
        5,
    );
    assert!(bad.is_err());
}

#[test]
fn inconsistent_axioms_fail_at_construction() {
    use randlab::staged::{Axiom, TuringFunctional};
    let axioms = vec![
        Axiom { stage: 0, oracle: randlab::bits::bs("0"), output: randlab::bits::bs("1") },
        Axiom { stage: 2, oracle: randlab::bits::bs("01"), output: randlab::bits::bs("0") },
    ];
    assert!(TuringFunctional::new(axioms, 4).is_err());
}
