//! The finite kernel of the minimal-pair argument: pair families, the
//! approximation of `f` with its mind changes, the induced Demuth test, and the
//! isolated-path analysis of c.e. trees.

use std::collections::BTreeSet;

use crate::bits::BitString;
use crate::cylinder::CylinderSet;
use crate::demuth::{DemuthTest, VersionedOpenSet};
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::staged::{Enumerator, Stage, TuringFunctional};

/// Largest `Nat(σ)` for which families of `2^N` pairs are searched.
pub const MAX_NAT: u64 = 20;

/// `(σ_i, τ_i)` for `i < 2^N`, found above `base` at `stage`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairFamily {
    pub base: BitString,
    pub n: u64,
    pub stage: Stage,
    pub pairs: Vec<(BitString, BitString)>,
}

/// Maximal axiom outputs above `σ` by `stage`, each with its witness oracle.
fn leaves(phi: &TuringFunctional, sigma: &BitString, stage: Stage) -> Vec<(BitString, BitString)> {
    let relevant: Vec<_> = phi
        .axioms_by(stage)
        .filter(|a| a.oracle.comparable(sigma) && !a.output.is_empty())
        .collect();
    let outputs: BTreeSet<&BitString> = relevant.iter().map(|a| &a.output).collect();
    let mut out = Vec::new();
    for tau in &outputs {
        if outputs.iter().any(|o| tau.is_proper_prefix_of(o)) {
            continue;
        }
        // Axioms are sorted by stage, then oracle.
        let witness = relevant
            .iter()
            .find(|a| a.output == **tau)
            .map(|a| a.oracle.clone())
            .expect("leaf output comes from an axiom");
        let sigma_i = if sigma.is_proper_prefix_of(&witness) {
            witness
        } else {
            sigma.child(false)
        };
        out.push((sigma_i, (*tau).clone()));
    }
    out.sort_by(|a, b| a.1.cmp(&b.1));
    out
}

/// Earliest family of `2^{Nat(σ)}` pairs with pairwise incomparable outputs,
/// searched stage by stage; within a stage the lexicographically first leaves
/// are taken.
pub fn find_family(phi: &TuringFunctional, sigma: &BitString, stage: Stage) -> Option<PairFamily> {
    let n = sigma.nat();
    if n > MAX_NAT {
        return None;
    }
    let want = 1usize << n;
    let stages: BTreeSet<Stage> = phi
        .axioms()
        .iter()
        .map(|a| a.stage)
        .filter(|&s| s <= stage)
        .collect();
    for s in stages {
        let ls = leaves(phi, sigma, s);
        if ls.len() >= want {
            return Some(PairFamily {
                base: sigma.clone(),
                n,
                stage: s,
                pairs: ls.into_iter().take(want).collect(),
            });
        }
    }
    None
}

/// Replay of `f(σ)[t]` for `t ≤ s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FApprox {
    pub sigma: BitString,
    pub n: u64,
    pub family: Option<PairFamily>,
    /// Current index `j` (0-based).
    pub index: Option<usize>,
    pub value: BitString,
    /// Stages where the value changed, with the new index. The discovery
    /// counts as the first change.
    pub switches: Vec<(Stage, usize)>,
}

impl FApprox {
    pub fn discovery(&self) -> Option<Stage> {
        self.family.as_ref().map(|f| f.stage)
    }

    pub fn mind_changes(&self) -> usize {
        self.switches.len()
    }

    pub fn tau(&self) -> Option<&BitString> {
        let f = self.family.as_ref()?;
        Some(&f.pairs[self.index?].1)
    }
}

fn first_light_index(psi: &TuringFunctional, family: &PairFamily, stage: Stage) -> usize {
    let bound = Dyadic::pow2_neg(family.n as u32);
    family
        .pairs
        .iter()
        .position(|(_, tau)| psi.preimage(tau, stage).measure() <= bound)
        .expect("disjoint preimages of 2^N incomparable strings leave one of measure <= 2^-N")
}

pub fn f_approx(phi: &TuringFunctional, psi: &TuringFunctional, sigma: &BitString, stage: Stage) -> FApprox {
    let family = find_family(phi, sigma, stage);
    let mut switches = Vec::new();
    let mut index = None;
    if let Some(fam) = &family {
        let mut stages: BTreeSet<Stage> = psi
            .axioms()
            .iter()
            .map(|a| a.stage)
            .filter(|&s| s > fam.stage && s <= stage)
            .collect();
        stages.insert(fam.stage);
        for s in stages {
            let j = first_light_index(psi, fam, s);
            if index != Some(j) {
                switches.push((s, j));
                index = Some(j);
            }
        }
    }
    let value = match (&family, index) {
        (Some(f), Some(j)) => f.pairs[j].0.clone(),
        _ => sigma.clone(),
    };
    FApprox {
        sigma: sigma.clone(),
        n: sigma.nat(),
        family,
        index,
        value,
        switches,
    }
}

fn joint_horizon(phi: &TuringFunctional, psi: &TuringFunctional) -> Stage {
    phi.horizon().max(psi.horizon())
}

/// Level `Nat(σ)` of the induced test: one version `Ψ^{-1}(τ_j)` per switch
/// of `f(σ)`, or a single empty version when no family appears.
pub fn induced_demuth_level(phi: &TuringFunctional, psi: &TuringFunctional, sigma: &BitString) -> VersionedOpenSet {
    let fa = f_approx(phi, psi, sigma, joint_horizon(phi, psi));
    let Some(fam) = &fa.family else {
        return VersionedOpenSet::new(vec![(
            0,
            crate::staged::StagedOpenSet::empty(psi.horizon()),
        )])
        .expect("single version");
    };
    let versions = fa
        .switches
        .iter()
        .map(|&(s, j)| (s, psi.staged_preimage(&fam.pairs[j].1)))
        .collect();
    VersionedOpenSet::new(versions).expect("switch stages increase")
}

/// Levels `0..levels` of the induced test, level `n` coming from
/// `σ = Nat^{-1}(n)`, with change bound `2^n`.
pub fn induced_demuth_test(phi: &TuringFunctional, psi: &TuringFunctional, levels: u64) -> DemuthTest {
    let sets = (0..levels)
        .map(|n| induced_demuth_level(phi, psi, &BitString::from_nat(n)))
        .collect();
    let bounds = (0..levels).map(|n| 1u64 << n).collect();
    DemuthTest::new(sets, bounds).expect("one bound per level")
}

/// Structure of a finite c.e. tree relative to the antichain hypothesis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsolationReport {
    pub n: u64,
    pub nodes: usize,
    /// Maximum antichain size, which for a finite tree is its leaf count.
    pub max_antichain: usize,
    pub branching_nodes: usize,
    /// Whether the tree has fewer than `2^N` pairwise incomparable nodes.
    pub hypothesis_holds: bool,
    /// For each leaf, the least length from which its path has no branching.
    /// Empty when the hypothesis fails.
    pub onsets: Vec<(BitString, usize)>,
}

impl IsolationReport {
    /// Every branch has an onset within its own length.
    pub fn all_isolated(&self) -> bool {
        self.onsets.iter().all(|(leaf, onset)| *onset <= leaf.len())
    }
}

pub fn isolated_path_analysis(t: &Enumerator, n: u64) -> Result<IsolationReport> {
    let nodes = t.final_set();
    for s in &nodes {
        if let Some(p) = s.parent() {
            if !nodes.contains(&p) {
                return Err(Error::NotATree(s.clone()));
            }
        }
    }
    let children = |s: &BitString| {
        [false, true]
            .into_iter()
            .filter(|&b| nodes.contains(&s.child(b)))
            .count()
    };
    let leaves: Vec<&BitString> = nodes.iter().filter(|s| children(s) == 0).collect();
    let branching_nodes = nodes.iter().filter(|s| children(s) == 2).count();
    let hypothesis_holds = n >= 64 || (leaves.len() as u64) < (1u64 << n);
    let onsets = if hypothesis_holds {
        leaves
            .iter()
            .map(|leaf| {
                let onset = leaf
                    .prefixes()
                    .filter(|p| p.len() < leaf.len() && children(p) == 2)
                    .map(|p| p.len() + 1)
                    .max()
                    .unwrap_or(0);
                ((*leaf).clone(), onset)
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(IsolationReport {
        n,
        nodes: nodes.len(),
        max_antichain: leaves.len(),
        branching_nodes,
        hypothesis_holds,
        onsets,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Case {
    /// `f(σ) = σ`: the c.e. tree of `Φ`-outputs above `σ` and its analysis.
    Case1 {
        tree: Enumerator,
        analysis: IsolationReport,
    },
    /// `f(σ) = σ_j` with the settled `τ_j`.
    Case2 {
        tau: BitString,
        x_in_set: bool,
        /// Length of the compared range, `min(|Φ^G|, |Ψ^X|)`.
        compared: usize,
        /// First position where `Φ^G` and `Ψ^X` differ.
        disagreement: Option<usize>,
    },
}

pub fn classify_case(
    phi: &TuringFunctional,
    psi: &TuringFunctional,
    g_prefix: &BitString,
    x: &BitString,
    n: usize,
) -> Result<Case> {
    let horizon = joint_horizon(phi, psi);
    let sigma = g_prefix.prefix(n.min(g_prefix.len()));
    let fa = f_approx(phi, psi, &sigma, horizon);
    match fa.tau() {
        None => {
            let tree = phi.output_tree_above(&sigma);
            let analysis = isolated_path_analysis(&tree, fa.n)?;
            Ok(Case::Case1 { tree, analysis })
        }
        Some(tau) => {
            let x_in_set = psi.preimage(tau, horizon).contains_prefix_of(x);
            let out_g = phi.apply(g_prefix, horizon);
            let out_x = psi.apply(x, horizon);
            let compared = out_g.len().min(out_x.len());
            let disagreement = if x_in_set {
                None
            } else {
                out_g.first_difference(&out_x).filter(|&i| i < compared)
            };
            Ok(Case::Case2 {
                tau: tau.clone(),
                x_in_set,
                compared,
                disagreement,
            })
        }
    }
}

/// Lengths `m ≥ n` with `f(G↾m) ⪯ G`, i.e. where `G` meets `{f(σ) : |σ| ≥ n}`.
pub fn pb_hits(phi: &TuringFunctional, psi: &TuringFunctional, g_prefix: &BitString, n: usize) -> Vec<usize> {
    let horizon = joint_horizon(phi, psi);
    (n..=g_prefix.len())
        .filter(|&m| {
            f_approx(phi, psi, &g_prefix.prefix(m), horizon)
                .value
                .is_prefix_of(g_prefix)
        })
        .collect()
}

/// `{f(σ) : |σ| ≥ n}` meets every `[ρ]` with `|ρ| ≤ depth`, witnessed by
/// `σ = ρ0…0` of length `max(n, |ρ|)`.
pub fn pb_dense(phi: &TuringFunctional, psi: &TuringFunctional, n: usize, depth: usize) -> bool {
    let horizon = joint_horizon(phi, psi);
    (0..=depth).all(|len| {
        BitString::all_of_length(len).all(|rho| {
            let sigma = rho.concat(&BitString::repeat(false, n.saturating_sub(len)));
            rho.is_prefix_of(&f_approx(phi, psi, &sigma, horizon).value)
        })
    })
}

/// `Ψ^{-1}(τ_j)` at the final stage for the settled family of `σ`, if any.
pub fn settled_preimage(phi: &TuringFunctional, psi: &TuringFunctional, sigma: &BitString) -> Option<CylinderSet> {
    let horizon = joint_horizon(phi, psi);
    let fa = f_approx(phi, psi, sigma, horizon);
    fa.tau().map(|tau| psi.preimage(tau, horizon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bs;
    use crate::demuth::verify_demuth;
    use crate::staged::Axiom;

    fn ax(stage: Stage, oracle: &str, output: &str) -> Axiom {
        Axiom {
            stage,
            oracle: bs(oracle),
            output: bs(output),
        }
    }

    fn functional(axioms: Vec<Axiom>, horizon: Stage) -> TuringFunctional {
        TuringFunctional::new(axioms, horizon).unwrap()
    }

    #[test]
    fn no_axioms_no_family() {
        let phi = TuringFunctional::empty(10);
        assert_eq!(find_family(&phi, &bs("^"), 10), None);
        let fa = f_approx(&phi, &phi, &bs("01"), 10);
        assert_eq!(fa.value, bs("01"));
        assert_eq!(fa.mind_changes(), 0);
    }

    #[test]
    fn single_pair_for_nat_zero() {
        let phi = functional(vec![ax(2, "0", "1")], 10);
        let fam = find_family(&phi, &bs("^"), 10).unwrap();
        assert_eq!(fam.pairs, vec![(bs("0"), bs("1"))]);
        assert_eq!(fam.stage, 2);
    }

    #[test]
    fn family_found_at_stage_five() {
        // Nat(1) = 2, so four incomparable outputs are needed above 1.
        let phi = functional(
            vec![
                ax(1, "10", "00"),
                ax(3, "110", "01"),
                ax(4, "100", "000"),
                ax(5, "101", "001"),
                ax(5, "1101", "011"),
                ax(5, "111", "1"),
            ],
            10,
        );
        assert_eq!(find_family(&phi, &bs("1"), 4), None);
        let fam = find_family(&phi, &bs("1"), 10).unwrap();
        assert_eq!(fam.stage, 5);
        let taus: Vec<_> = fam.pairs.iter().map(|p| p.1.to_string()).collect();
        assert_eq!(taus, ["000", "001", "011", "1"]);
    }

    #[test]
    fn f_switches_when_preimage_grows() {
        // σ = Λ, N = 0: one pair; the bound is 2^0 = 1, so j = 0 forever.
        // σ = 0, N = 1: two pairs, bound 1/2.
        let phi = functional(vec![ax(0, "00", "0"), ax(0, "01", "1")], 12);
        let psi = functional(vec![ax(9, "0", "0"), ax(9, "10", "0")], 12);
        let fa = f_approx(&phi, &psi, &bs("0"), 12);
        assert_eq!(fa.switches, vec![(0, 0), (9, 1)]);
        assert_eq!(fa.value, bs("01"));
        assert!(fa.mind_changes() <= 2);
        let fa8 = f_approx(&phi, &psi, &bs("0"), 8);
        assert_eq!(fa8.value, bs("00"));

        let level = induced_demuth_level(&phi, &psi, &bs("0"));
        assert_eq!(level.version_count(), 2);
        assert_eq!(level.versions()[1].0, 9);
        let t = induced_demuth_test(&phi, &psi, 3);
        assert!(verify_demuth(&t).pass());
    }

    #[test]
    fn empty_preimages_pick_first_index() {
        let phi = functional(vec![ax(0, "00", "0"), ax(0, "01", "1")], 5);
        let fa = f_approx(&phi, &TuringFunctional::empty(5), &bs("0"), 5);
        assert_eq!(fa.index, Some(0));
        let no = induced_demuth_level(&TuringFunctional::empty(5), &phi, &bs("0"));
        assert_eq!(no.version_count(), 1);
        assert!(no.final_set().is_empty());
    }

    fn tree(nodes: &[&str]) -> Enumerator {
        Enumerator::immediate(nodes.iter().map(|s| bs(s)), 0)
    }

    #[test]
    fn isolation_examples() {
        let r = isolated_path_analysis(&tree(&["^", "0", "00", "000"]), 1).unwrap();
        assert!(r.hypothesis_holds);
        assert_eq!(r.onsets, vec![(bs("000"), 0)]);

        let full: Vec<String> = (0..=3)
            .flat_map(BitString::all_of_length)
            .map(|s| s.to_string())
            .collect();
        let full: Vec<&str> = full.iter().map(String::as_str).collect();
        let r = isolated_path_analysis(&tree(&full), 3).unwrap();
        assert_eq!(r.max_antichain, 8);
        assert!(!r.hypothesis_holds);
        assert!(r.onsets.is_empty());

        let r = isolated_path_analysis(&tree(&["^", "0", "1", "00", "11", "000", "111"]), 2).unwrap();
        assert_eq!(r.max_antichain, 2);
        assert!(r.hypothesis_holds && r.all_isolated());
        assert_eq!(r.onsets, vec![(bs("000"), 1), (bs("111"), 1)]);

        assert_eq!(
            isolated_path_analysis(&tree(&["^", "01"]), 1),
            Err(Error::NotATree(bs("01")))
        );
    }

    #[test]
    fn cases() {
        let empty = TuringFunctional::empty(5);
        assert!(matches!(
            classify_case(&empty, &empty, &bs("0101"), &bs("11"), 2).unwrap(),
            Case::Case1 { .. }
        ));
        // σ = Λ: one pair (0, 1). Φ^G = 1 for G ⪰ 0, while Ψ^X = 0 for X ⪰ 1.
        let phi = functional(vec![ax(0, "0", "1")], 5);
        let psi = functional(vec![ax(0, "1", "0")], 5);
        match classify_case(&phi, &psi, &bs("01"), &bs("11"), 0).unwrap() {
            Case::Case2 {
                tau,
                x_in_set,
                disagreement,
                compared,
            } => {
                assert_eq!(tau, bs("1"));
                assert!(!x_in_set);
                assert_eq!(compared, 1);
                assert_eq!(disagreement, Some(0));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pb_density_holds_for_extension_functions() {
        let phi = functional(vec![ax(0, "00", "0"), ax(0, "01", "1"), ax(1, "1", "11")], 4);
        assert!(pb_dense(&phi, &TuringFunctional::empty(4), 2, 3));
        assert!(pb_hits(&phi, &TuringFunctional::empty(4), &bs("0000"), 0).contains(&0));
    }
}
