use proptest::prelude::*;
use randlab::bits::{bs, self_delimit};
use randlab::coding::{
    claim1, common_extension, extend_into_open, gamma_decode, kg_decode, kg_encode, occurs_by,
    random_scheme, stabilization_stage, w2r_encode, SchemeParams, G,
};
use randlab::gen::{self, TreeParams};
use randlab::staged::{Enumerator, Pi01Tree};
use randlab::{BitString, CylinderSet, Dyadic};

fn tree(seed: u64) -> Pi01Tree {
    gen::tree(&TreeParams {
        seed,
        depth: 40,
        removals: 24,
        min_len: 3,
        floor_log2: 1,
        horizon: 12,
    })
}

fn scheme_params(seed: u64) -> SchemeParams {
    SchemeParams {
        seed,
        families: 3,
        levels: 4,
        tree_depth: 200,
        removal_depth: 6,
        removals: 6,
        horizon: 8,
    }
}

fn payloads(max_count: usize, max_len: usize) -> impl Strategy<Value = Vec<BitString>> {
    prop::collection::vec(
        prop::collection::vec(any::<bool>(), 0..=max_len).prop_map(BitString::from_bits),
        0..=max_count,
    )
}

/// Does some length-`depth` extension of `sigma` avoid both `removed` and `u`?
fn survives_outside(sigma: &BitString, removed: &CylinderSet, u: &CylinderSet, depth: usize) -> bool {
    BitString::all_of_length(depth - sigma.len())
        .map(|tail| sigma.concat(&tail))
        .any(|x| !removed.contains_prefix_of(&x) && !u.contains_prefix_of(&x))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kg_round_trip_and_survival(seed in any::<u64>()) {
        let p = tree(seed);
        let snap = p.final_snapshot();
        prop_assert!(&Dyadic::one() - &snap.removed.measure() >= Dyadic::pow2_neg(1));
        let mut codes = Vec::new();
        for len in 0..=4 {
            for xi in BitString::all_of_length(len) {
                prop_assert!(p.depth() >= 4 * self_delimit(&xi).len());
                let tau = kg_encode(&xi, &BitString::empty(), &p).unwrap();
                prop_assert!(snap.alive(&tau));
                prop_assert_eq!(kg_decode(&tau, &BitString::empty(), &p, p.horizon()).unwrap(), xi.clone());
                codes.push(tau);
            }
        }
        for (i, a) in codes.iter().enumerate() {
            for b in &codes[i + 1..] {
                prop_assert!(!a.comparable(b), "{} and {} are comparable", a, b);
            }
        }
    }

    #[test]
    fn kg_codeword_survives_above_live_sigma(seed in any::<u64>(), sigma in prop::collection::vec(any::<bool>(), 0..=4)) {
        let p = tree(seed);
        let sigma = BitString::from_bits(sigma);
        let snap = p.final_snapshot();
        if snap.alive(&sigma) {
            let tau = kg_encode(&bs("101"), &sigma, &p).unwrap();
            prop_assert!(sigma.is_prefix_of(&tau));
            prop_assert!(snap.alive(&tau));
        } else {
            prop_assert!(kg_encode(&bs("101"), &sigma, &p).is_err());
        }
    }

    #[test]
    fn g_is_monotone_and_matches_brute_force(seed in any::<u64>(), sigma in prop::collection::vec(any::<bool>(), 0..=3)) {
        let scheme = random_scheme(&SchemeParams { tree_depth: 10, ..scheme_params(seed) });
        let sigma = BitString::from_bits(sigma);
        let p = scheme.base();
        let removed = p.final_snapshot().removed;
        for (e, family) in scheme.families().iter().enumerate() {
            let e = e as u64;
            let mut last = G::Finite(0);
            for t in 0..=scheme.horizon() {
                let g = scheme.g_lsc(e, &sigma, p, t);
                prop_assert!(g >= last);
                last = g;
            }
            let depth = family
                .iter()
                .map(|u| u.final_set().max_len())
                .chain([removed.max_len(), sigma.len(), 10])
                .max()
                .unwrap();
            let brute = family
                .iter()
                .position(|u| survives_outside(&sigma, &removed, &u.final_set(), depth))
                .map_or(G::Infinity, G::Finite);
            prop_assert_eq!(scheme.g_final(e, &sigma, p), brute);
        }
    }

    #[test]
    fn gamma_errors_are_confined(seed in any::<u64>(), xs in payloads(3, 4)) {
        let scheme = random_scheme(&scheme_params(seed));
        let enc = w2r_encode(&xs, &scheme).unwrap();
        let n = stabilization_stage(&xs, &scheme).unwrap() as usize;
        let expected = xs.iter().fold(BitString::empty(), |a, x| a.concat(x));
        let t_max = n.max(expected.len()) as u32;
        let out = gamma_decode(&enc.codeword, t_max, &scheme);
        let wrong: Vec<usize> = (0..expected.len())
            .filter(|&i| out.output.get(&i) != Some(&expected.bit(i)))
            .collect();
        prop_assert!(wrong.iter().all(|&i| i < n));
        prop_assert!(wrong.len() <= n);
        prop_assert_eq!(&claim1(&xs, &scheme, None).unwrap().errors, &wrong);
    }

    #[test]
    fn subprocedures_read_prefix_free_codes(seed in any::<u64>(), xs in payloads(2, 3), tail in prop::collection::vec(any::<bool>(), 0..=12)) {
        let scheme = random_scheme(&scheme_params(seed));
        let enc = w2r_encode(&xs, &scheme).unwrap();
        let out = gamma_decode(&enc.codeword, 4, &scheme);
        for sp in &out.subprocedures {
            let read = enc.codeword.prefix(sp.consumed).concat(&BitString::from_bits(tail.clone()));
            let again = gamma_decode(&read, sp.t, &scheme);
            let other = &again.subprocedures[sp.t as usize];
            prop_assert!(other.items.starts_with(&sp.items));
            prop_assert!(other.consumed >= sp.consumed);
        }
    }
}

#[test]
fn kucera_depth_grows_when_the_class_thins() {
    use randlab::coding::kucera_depth;
    let removals = Enumerator::new(vec![(2, vec![bs("00"), bs("01")])], 4).unwrap();
    let p = Pi01Tree::new(8, removals).unwrap();
    assert_eq!(kucera_depth(&BitString::empty(), &p, 0).unwrap(), 1);
    // After stage 2 the class has measure 1/2, so the depth is 2.
    assert_eq!(kucera_depth(&BitString::empty(), &p, 2).unwrap(), 2);
    assert!(kucera_depth(&bs("00"), &p, 2).is_err());
}

#[test]
fn common_extension_lands_in_every_shift() {
    let u = occurs_by(&bs("11"), 3);
    for shift in 0..=3 {
        let zeta = common_extension(&u, shift).unwrap();
        for eta in BitString::all_of_length(shift) {
            assert!(u.covers(&eta.concat(&zeta)));
        }
    }
    let not_dense: CylinderSet = "{0}".parse().unwrap();
    assert!(common_extension(&not_dense, 1).is_err());
}

#[test]
fn extension_steers_gamma_into_open() {
    let scheme = random_scheme(&SchemeParams {
        families: 4,
        tree_depth: 300,
        ..scheme_params(5)
    });
    let u = occurs_by(&bs("101"), 6);
    let first = vec![bs("01")];
    let next = extend_into_open(&first, &u, &scheme).unwrap();
    let all = vec![bs("01"), next];
    let enc = w2r_encode(&all, &scheme).unwrap();
    let n = stabilization_stage(&all, &scheme).unwrap();
    let total: usize = all.iter().map(BitString::len).sum();
    let out = gamma_decode(&enc.codeword, n.max(total as u32), &scheme);
    let defined = (0..).take_while(|i| out.output.contains_key(i)).count();
    assert!(u.contains_prefix_of(&out.prefix(defined).unwrap()));
}
