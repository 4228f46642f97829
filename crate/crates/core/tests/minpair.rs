use proptest::prelude::*;
use randlab::bits::bs;
use randlab::demuth::verify_demuth;
use randlab::gen::{self, FunctionalParams};
use randlab::minpair::{
    classify_case, f_approx, find_family, induced_demuth_test, isolated_path_analysis, Case,
};
use randlab::staged::{Axiom, Enumerator, TuringFunctional};
use randlab::{BitString, Dyadic};

const HORIZON: u32 = 8;

fn functional(seed: u64) -> TuringFunctional {
    gen::functional(&FunctionalParams {
        seed,
        max_oracle_len: 6,
        axiom_percent: 40,
        max_emit: 2,
        horizon: HORIZON,
    })
}

fn bits(max: usize) -> impl Strategy<Value = BitString> {
    prop::collection::vec(any::<bool>(), 0..=max).prop_map(BitString::from_bits)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mind_changes_within_bound(a in any::<u64>(), b in any::<u64>(), nat in 0u64..=4) {
        let (phi, psi) = (functional(a), functional(b));
        let sigma = BitString::from_nat(nat);
        let fa = f_approx(&phi, &psi, &sigma, HORIZON);
        prop_assert!(fa.mind_changes() as u64 <= 1u64 << nat);
        // Each switch really moves to a new index.
        for w in fa.switches.windows(2) {
            prop_assert!(w[0].0 < w[1].0);
            prop_assert_ne!(w[0].1, w[1].1);
        }
    }

    #[test]
    fn some_output_has_a_light_preimage(a in any::<u64>(), b in any::<u64>(), nat in 0u64..=3) {
        let (phi, psi) = (functional(a), functional(b));
        let sigma = BitString::from_nat(nat);
        if let Some(fam) = find_family(&phi, &sigma, HORIZON) {
            prop_assert_eq!(fam.pairs.len(), 1usize << nat);
            let taus: Vec<&BitString> = fam.pairs.iter().map(|p| &p.1).collect();
            for (i, s) in taus.iter().enumerate() {
                for t in &taus[i + 1..] {
                    prop_assert!(!s.comparable(t));
                }
            }
            let pre: Vec<_> = taus.iter().map(|t| psi.preimage(t, HORIZON)).collect();
            for (i, p) in pre.iter().enumerate() {
                for q in &pre[i + 1..] {
                    prop_assert!(p.is_disjoint_from(q));
                }
            }
            let total = pre.iter().fold(Dyadic::zero(), |acc, p| acc + p.measure());
            prop_assert!(total <= Dyadic::one());
            prop_assert!(pre.iter().any(|p| p.measure() <= Dyadic::pow2_neg(nat as u32)));
            for (sigma_i, tau_i) in &fam.pairs {
                prop_assert!(sigma.is_prefix_of(sigma_i));
                prop_assert!(tau_i.is_prefix_of(&phi.apply(sigma_i, fam.stage)));
            }
        }
    }

    #[test]
    fn induced_test_is_valid(a in any::<u64>(), b in any::<u64>()) {
        let t = induced_demuth_test(&functional(a), &functional(b), 5);
        prop_assert!(verify_demuth(&t).pass());
    }

    #[test]
    fn case_two_outputs_disagree(a in any::<u64>(), b in any::<u64>(), g in bits(10), x in bits(8), n in 0usize..=2) {
        prop_assume!(g.len() >= n);
        let (phi, psi) = (functional(a), functional(b));
        let sigma = g.prefix(n);
        let fa = f_approx(&phi, &psi, &sigma, HORIZON);
        // Steer G through f(sigma) so the disagreement check applies.
        let g = fa.value.concat(&g.suffix_from(sigma.len()));
        let case = classify_case(&phi, &psi, &g, &x, n).unwrap();
        match case {
            Case::Case2 { tau, x_in_set, disagreement, .. } => {
                prop_assert_eq!(Some(&tau), fa.tau());
                prop_assert_eq!(x_in_set, psi.preimage(&tau, HORIZON).contains_prefix_of(&x));
                let out_g = phi.apply(&g, HORIZON);
                let out_x = psi.apply(&x, HORIZON);
                if !x_in_set && out_x.len() >= tau.len() {
                    prop_assert!(tau.is_prefix_of(&out_g));
                    let i = disagreement.expect("outputs must differ");
                    prop_assert!(i < tau.len());
                    prop_assert_ne!(out_g.bit(i), out_x.bit(i));
                }
            }
            Case::Case1 { analysis, .. } => {
                prop_assert!(fa.tau().is_none());
                if analysis.hypothesis_holds {
                    prop_assert!(analysis.all_isolated());
                }
            }
        }
    }
}

fn ax(stage: u32, oracle: &str, output: &str) -> Axiom {
    Axiom {
        stage,
        oracle: bs(oracle),
        output: bs(output),
    }
}

#[test]
fn f_follows_the_light_output() {
    // sigma = "0" has Nat 1, so a family needs two incomparable outputs.
    let phi = TuringFunctional::new(vec![ax(1, "00", "0"), ax(2, "01", "1")], 6).unwrap();
    let psi = TuringFunctional::new(vec![ax(4, "", "0")], 6).unwrap();
    let sigma = bs("0");
    assert!(find_family(&phi, &sigma, 1).is_none());
    let fa = f_approx(&phi, &psi, &sigma, 6);
    assert_eq!(fa.discovery(), Some(2));
    // Before stage 4 both preimages are empty and index 0 is chosen; then
    // every oracle computes 0 and the light output is 1.
    assert_eq!(fa.switches, vec![(2, 0), (4, 1)]);
    assert_eq!(fa.value, bs("01"));
    let t = induced_demuth_test(&phi, &psi, 2);
    assert_eq!(t.level(1).version_count(), 2);
    assert!(t.level(1).final_set().is_empty());
}

#[test]
fn antichain_trees_have_isolated_branches() {
    let tree = Enumerator::immediate(["", "0", "1", "10", "100", "1000"].map(bs), 0);
    let r = isolated_path_analysis(&tree, 2).unwrap();
    assert!(r.hypothesis_holds);
    assert_eq!(r.max_antichain, 2);
    assert_eq!(r.branching_nodes, 1);
    assert!(r.all_isolated());
    let r = isolated_path_analysis(&tree, 1).unwrap();
    assert!(!r.hypothesis_holds);
    let broken = Enumerator::immediate(["", "01"].map(bs), 0);
    assert!(isolated_path_analysis(&broken, 1).is_err());
}
