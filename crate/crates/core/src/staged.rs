//! Deterministic stage-indexed stand-ins for c.e. objects: enumerations of
//! strings, effectively open sets, Turing functionals and Π⁰₁ classes.
//!
//! Every object carries a hard horizon. Conclusions drawn from these objects
//! are relative to that horizon.

use std::collections::{BTreeMap, BTreeSet};

use crate::bits::BitString;
use crate::cylinder::CylinderSet;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};

pub type Stage = u32;

/// A monotone finite enumeration: strings are added at stages up to `horizon`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Enumerator {
    schedule: BTreeMap<Stage, BTreeSet<BitString>>,
    horizon: Stage,
}

impl Enumerator {
    /// Builds from `(stage, strings)` entries; stages must strictly increase and
    /// not exceed the horizon.
    pub fn new(entries: Vec<(Stage, Vec<BitString>)>, horizon: Stage) -> Result<Self> {
        let mut schedule = BTreeMap::new();
        let mut last: Option<Stage> = None;
        for (stage, strings) in entries {
            if let Some(prev) = last {
                if stage <= prev {
                    return Err(Error::Schedule(format!(
                        "stage {stage} does not strictly follow stage {prev}"
                    )));
                }
            }
            if stage > horizon {
                return Err(Error::Schedule(format!(
                    "stage {stage} exceeds horizon {horizon}"
                )));
            }
            last = Some(stage);
            schedule.insert(stage, strings.into_iter().collect());
        }
        Ok(Self { schedule, horizon })
    }

    /// Builds from a stage map; entries beyond the horizon extend the horizon.
    pub fn from_map(schedule: BTreeMap<Stage, BTreeSet<BitString>>, horizon: Stage) -> Self {
        let horizon = schedule.keys().last().map_or(horizon, |&s| s.max(horizon));
        let schedule = schedule.into_iter().filter(|(_, v)| !v.is_empty()).collect();
        Self { schedule, horizon }
    }

    pub fn empty(horizon: Stage) -> Self {
        Self {
            schedule: BTreeMap::new(),
            horizon,
        }
    }

    /// Everything at stage 0.
    pub fn immediate<I: IntoIterator<Item = BitString>>(strings: I, horizon: Stage) -> Self {
        let set: BTreeSet<BitString> = strings.into_iter().collect();
        let mut schedule = BTreeMap::new();
        if !set.is_empty() {
            schedule.insert(0, set);
        }
        Self { schedule, horizon }
    }

    pub fn horizon(&self) -> Stage {
        self.horizon
    }

    pub fn with_horizon(mut self, horizon: Stage) -> Self {
        self.horizon = self.horizon.max(horizon);
        self
    }

    pub fn schedule(&self) -> &BTreeMap<Stage, BTreeSet<BitString>> {
        &self.schedule
    }

    /// Stages at which something is enumerated.
    pub fn stages(&self) -> impl Iterator<Item = Stage> + '_ {
        self.schedule.keys().copied()
    }

    /// `(stage, string)` pairs in stage order.
    pub fn events(&self) -> impl Iterator<Item = (Stage, &BitString)> {
        self.schedule
            .iter()
            .flat_map(|(&s, set)| set.iter().map(move |x| (s, x)))
    }

    pub fn enumerated(&self, stage: Stage) -> BTreeSet<BitString> {
        self.schedule
            .range(..=stage)
            .flat_map(|(_, set)| set.iter().cloned())
            .collect()
    }

    pub fn final_set(&self) -> BTreeSet<BitString> {
        self.enumerated(self.horizon)
    }

    pub fn max_len(&self) -> usize {
        self.events().map(|(_, s)| s.len()).max().unwrap_or(0)
    }

    /// Stage-wise union of two enumerations.
    pub fn merge(&self, other: &Enumerator) -> Enumerator {
        let mut schedule = self.schedule.clone();
        for (&s, set) in &other.schedule {
            schedule.entry(s).or_default().extend(set.iter().cloned());
        }
        Self {
            schedule,
            horizon: self.horizon.max(other.horizon),
        }
    }
}

/// The open set generated by an enumeration; at stage `s` it is the normalized
/// union of everything enumerated so far.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct StagedOpenSet {
    enumerator: Enumerator,
}

impl StagedOpenSet {
    pub fn new(enumerator: Enumerator) -> Self {
        Self { enumerator }
    }

    pub fn empty(horizon: Stage) -> Self {
        Self::new(Enumerator::empty(horizon))
    }

    /// A fixed clopen set present from stage `from` on.
    pub fn constant_from(set: &CylinderSet, from: Stage, horizon: Stage) -> Self {
        let mut schedule = BTreeMap::new();
        if !set.is_empty() {
            schedule.insert(from, set.strings().clone());
        }
        Self::new(Enumerator::from_map(schedule, horizon))
    }

    pub fn enumerator(&self) -> &Enumerator {
        &self.enumerator
    }

    pub fn horizon(&self) -> Stage {
        self.enumerator.horizon()
    }

    pub fn at(&self, stage: Stage) -> CylinderSet {
        CylinderSet::normalize(self.enumerator.enumerated(stage))
    }

    pub fn final_set(&self) -> CylinderSet {
        self.at(self.horizon())
    }

    pub fn measure_at(&self, stage: Stage) -> Dyadic {
        self.at(stage).measure()
    }

    /// Stages at which the set may change.
    pub fn change_stages(&self) -> Vec<Stage> {
        self.enumerator.stages().collect()
    }

    /// `self \ fixed` as an open set: each stage enumerates the canonical pieces
    /// of the stage-`s` set minus the clopen `fixed`.
    pub fn minus_clopen(&self, fixed: &CylinderSet) -> StagedOpenSet {
        let mut schedule = BTreeMap::new();
        for s in self.enumerator.stages() {
            let piece = self.at(s).difference(fixed);
            schedule.insert(s, piece.strings().clone());
        }
        Self::new(Enumerator::from_map(schedule, self.horizon()))
    }

    /// Stage-wise union.
    pub fn union(&self, other: &StagedOpenSet) -> StagedOpenSet {
        Self::new(self.enumerator.merge(&other.enumerator))
    }

    /// The same set, but nothing becomes visible before `from`.
    pub fn delayed_until(&self, from: Stage) -> StagedOpenSet {
        let mut schedule: BTreeMap<Stage, BTreeSet<BitString>> = BTreeMap::new();
        for (s, x) in self.enumerator.events() {
            schedule.entry(s.max(from)).or_default().insert(x.clone());
        }
        Self::new(Enumerator::from_map(schedule, self.horizon().max(from)))
    }
}

/// One enumerated axiom of a Turing functional: every oracle extending
/// `oracle` computes at least `output`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Axiom {
    pub stage: Stage,
    pub oracle: BitString,
    pub output: BitString,
}

/// A consistent, stage-indexed set of axioms.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TuringFunctional {
    axioms: Vec<Axiom>,
    horizon: Stage,
}

impl TuringFunctional {
    /// Rejects inconsistent axiom sets: comparable oracles must carry
    /// comparable outputs.
    pub fn new(mut axioms: Vec<Axiom>, horizon: Stage) -> Result<Self> {
        if let Some(a) = axioms.iter().find(|a| a.stage > horizon) {
            return Err(Error::Schedule(format!(
                "axiom stage {} exceeds horizon {horizon}",
                a.stage
            )));
        }
        axioms.sort();
        axioms.dedup();
        for (i, a) in axioms.iter().enumerate() {
            for b in &axioms[i + 1..] {
                if a.oracle.comparable(&b.oracle) && !a.output.comparable(&b.output) {
                    return Err(Error::InconsistentFunctional(
                        a.oracle.clone(),
                        a.output.clone(),
                        b.oracle.clone(),
                        b.output.clone(),
                    ));
                }
            }
        }
        Ok(Self { axioms, horizon })
    }

    pub fn empty(horizon: Stage) -> Self {
        Self {
            axioms: Vec::new(),
            horizon,
        }
    }

    pub fn axioms(&self) -> &[Axiom] {
        &self.axioms
    }

    pub fn horizon(&self) -> Stage {
        self.horizon
    }

    pub fn axioms_by(&self, stage: Stage) -> impl Iterator<Item = &Axiom> {
        self.axioms.iter().take_while(move |a| a.stage <= stage)
    }

    /// `Φ^σ[s]`: the longest output of an axiom with oracle `⪯ σ` enumerated by
    /// stage `s`; `Λ` if none.
    pub fn apply(&self, sigma: &BitString, stage: Stage) -> BitString {
        self.axioms_by(stage)
            .filter(|a| a.oracle.is_prefix_of(sigma))
            .map(|a| &a.output)
            .max_by_key(|o| o.len())
            .cloned()
            .unwrap_or_default()
    }

    /// `Ψ^{-1}(τ)[s]`: the oracles computing at least `τ` by stage `s`.
    pub fn preimage(&self, tau: &BitString, stage: Stage) -> CylinderSet {
        if tau.is_empty() {
            return CylinderSet::full();
        }
        CylinderSet::normalize(
            self.axioms_by(stage)
                .filter(|a| tau.is_prefix_of(&a.output))
                .map(|a| a.oracle.clone()),
        )
    }

    /// `Ψ^{-1}(τ)` as a staged open set over the functional's horizon.
    pub fn staged_preimage(&self, tau: &BitString) -> StagedOpenSet {
        if tau.is_empty() {
            return StagedOpenSet::constant_from(&CylinderSet::full(), 0, self.horizon);
        }
        let mut schedule: BTreeMap<Stage, BTreeSet<BitString>> = BTreeMap::new();
        for a in self.axioms.iter().filter(|a| tau.is_prefix_of(&a.output)) {
            schedule.entry(a.stage).or_default().insert(a.oracle.clone());
        }
        StagedOpenSet::new(Enumerator::from_map(schedule, self.horizon))
    }

    /// The c.e. tree `{τ : ∃σ' ⪰ σ, Φ^{σ'} ⪰ τ}`, enumerated as the prefix
    /// closure of the relevant axiom outputs.
    pub fn output_tree_above(&self, sigma: &BitString) -> Enumerator {
        let mut schedule: BTreeMap<Stage, BTreeSet<BitString>> = BTreeMap::new();
        schedule.entry(0).or_default().insert(BitString::empty());
        for a in self.axioms.iter().filter(|a| a.oracle.comparable(sigma)) {
            schedule.entry(a.stage).or_default().extend(a.output.prefixes());
        }
        Enumerator::from_map(schedule, self.horizon)
    }
}

/// A Π⁰₁ class presented by stage-indexed removals of cylinders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pi01Tree {
    depth: usize,
    removals: Enumerator,
}

impl Pi01Tree {
    pub fn new(depth: usize, removals: Enumerator) -> Result<Self> {
        if removals.max_len() > depth {
            return Err(Error::Config(format!(
                "removal of length {} exceeds tree depth {depth}",
                removals.max_len()
            )));
        }
        Ok(Self { depth, removals })
    }

    /// Nothing removed.
    pub fn full(depth: usize, horizon: Stage) -> Self {
        Self {
            depth,
            removals: Enumerator::empty(horizon),
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn horizon(&self) -> Stage {
        self.removals.horizon()
    }

    pub fn removals(&self) -> &Enumerator {
        &self.removals
    }

    pub fn at(&self, stage: Stage) -> TreeSnapshot {
        TreeSnapshot {
            removed: CylinderSet::normalize(self.removals.enumerated(stage)),
            depth: self.depth,
        }
    }

    pub fn final_snapshot(&self) -> TreeSnapshot {
        self.at(self.horizon())
    }

    /// Length-`l` extensions of `σ` whose cylinders still meet the class at `s`.
    pub fn survivors(&self, sigma: &BitString, l: usize, stage: Stage) -> BTreeSet<BitString> {
        self.at(stage).survivors(sigma, l)
    }

    pub fn class_measure(&self, stage: Stage) -> Dyadic {
        self.at(stage).measure()
    }

    /// `self ∩ (complement of u)`: the removals of `u` join the schedule.
    pub fn intersect_complement(&self, u: &StagedOpenSet) -> Pi01Tree {
        let removals = self.removals.merge(u.enumerator());
        Pi01Tree {
            depth: self.depth.max(u.enumerator().max_len()),
            removals,
        }
    }
}

/// The class at one stage: the complement of a clopen removed set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeSnapshot {
    pub removed: CylinderSet,
    pub depth: usize,
}

impl TreeSnapshot {
    /// `[τ] ∩ P ≠ ∅`.
    pub fn alive(&self, tau: &BitString) -> bool {
        !self.removed.covers(tau)
    }

    pub fn survivors(&self, sigma: &BitString, l: usize) -> BTreeSet<BitString> {
        let mut level: BTreeSet<BitString> = BTreeSet::new();
        if l < sigma.len() || !self.alive(sigma) {
            return level;
        }
        level.insert(sigma.clone());
        for _ in sigma.len()..l {
            level = level
                .iter()
                .flat_map(|t| [t.child(false), t.child(true)])
                .filter(|t| self.alive(t))
                .collect();
        }
        level
    }

    pub fn measure(&self) -> Dyadic {
        &Dyadic::one() - &self.removed.measure()
    }

    /// `[σ] ∩ P` as a clopen set.
    pub fn restricted_to(&self, sigma: &BitString) -> CylinderSet {
        CylinderSet::cylinder(sigma.clone()).difference(&self.removed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bs;

    fn ax(stage: Stage, oracle: &str, output: &str) -> Axiom {
        Axiom {
            stage,
            oracle: bs(oracle),
            output: bs(output),
        }
    }

    #[test]
    fn enumerator_rejects_non_increasing_stages() {
        let e = Enumerator::new(vec![(2, vec![bs("0")]), (2, vec![bs("1")])], 5);
        assert!(matches!(e, Err(Error::Schedule(_))));
        let e = Enumerator::new(vec![(7, vec![bs("0")])], 5);
        assert!(matches!(e, Err(Error::Schedule(_))));
    }

    #[test]
    fn enumerator_is_monotone() {
        let e = Enumerator::new(vec![(1, vec![bs("00")]), (4, vec![bs("1")])], 6).unwrap();
        assert!(e.enumerated(0).is_empty());
        assert_eq!(e.enumerated(3).len(), 1);
        assert_eq!(e.enumerated(6).len(), 2);
        let u = StagedOpenSet::new(e);
        assert_eq!(u.measure_at(2), Dyadic::new(1, 2));
        assert_eq!(u.measure_at(4), Dyadic::new(3, 2));
    }

    #[test]
    fn apply_functional_examples() {
        let phi = TuringFunctional::new(vec![ax(3, "0", "1")], 10).unwrap();
        assert_eq!(phi.apply(&bs("01"), 5), bs("1"));
        assert_eq!(phi.apply(&bs("01"), 2), bs("^"));
        assert_eq!(TuringFunctional::empty(5).apply(&bs("0"), 5), bs("^"));

        let phi = TuringFunctional::new(vec![ax(2, "0", "1"), ax(4, "01", "10")], 10).unwrap();
        assert_eq!(phi.apply(&bs("011"), 4), bs("10"));
        assert_eq!(phi.apply(&bs("011"), 3), bs("1"));
    }

    #[test]
    fn inconsistent_functional_is_rejected() {
        let r = TuringFunctional::new(vec![ax(0, "0", "1"), ax(1, "01", "00")], 3);
        assert!(matches!(r, Err(Error::InconsistentFunctional(..))));
        // Incomparable oracles may disagree.
        assert!(TuringFunctional::new(vec![ax(0, "0", "1"), ax(1, "1", "00")], 3).is_ok());
    }

    #[test]
    fn preimage_examples() {
        let psi = TuringFunctional::new(vec![ax(0, "00", "1")], 4).unwrap();
        let p = psi.preimage(&bs("1"), 4);
        assert_eq!(p.to_string(), "{00}");
        assert_eq!(p.measure(), Dyadic::new(1, 2));
        assert!(psi.preimage(&bs("^"), 0).is_full());

        let psi = TuringFunctional::new(
            vec![ax(0, "00", "1"), ax(1, "01", "11"), ax(2, "1", "10")],
            4,
        )
        .unwrap();
        assert!(psi.preimage(&bs("1"), 4).is_full());
        assert_eq!(psi.preimage(&bs("1"), 1).to_string(), "{0}");
        assert_eq!(psi.staged_preimage(&bs("1")).at(1), psi.preimage(&bs("1"), 1));
    }

    #[test]
    fn tree_survivor_examples() {
        let full = Pi01Tree::full(4, 0);
        let all: Vec<_> = full.survivors(&bs("^"), 2, 0).into_iter().collect();
        assert_eq!(all, vec![bs("00"), bs("01"), bs("10"), bs("11")]);

        let p = Pi01Tree::new(4, Enumerator::immediate([bs("1")], 0)).unwrap();
        let s: Vec<_> = p.survivors(&bs("^"), 2, 0).into_iter().collect();
        assert_eq!(s, vec![bs("00"), bs("01")]);

        let p = Pi01Tree::new(
            4,
            Enumerator::new(vec![(1, vec![bs("00")]), (3, vec![bs("01")])], 5).unwrap(),
        )
        .unwrap();
        let s: Vec<_> = p.survivors(&bs("0"), 2, 2).into_iter().collect();
        assert_eq!(s, vec![bs("01")]);
        assert!(p.survivors(&bs("0"), 2, 3).is_empty());
    }

    #[test]
    fn class_measure_examples() {
        assert_eq!(Pi01Tree::full(4, 0).class_measure(0), Dyadic::one());
        let p = Pi01Tree::new(4, Enumerator::immediate([bs("0")], 0)).unwrap();
        assert_eq!(p.class_measure(0), Dyadic::new(1, 1));
        let p = Pi01Tree::new(4, Enumerator::immediate([bs("00"), bs("011"), bs("11")], 0))
            .unwrap();
        assert_eq!(p.class_measure(0), Dyadic::new(3, 3));
    }

    #[test]
    fn output_tree_collects_prefix_closure() {
        let phi = TuringFunctional::new(vec![ax(0, "0", "10"), ax(1, "1", "0")], 3).unwrap();
        let t = phi.output_tree_above(&bs("01"));
        let set: Vec<_> = t.final_set().into_iter().collect();
        assert_eq!(set, vec![bs("^"), bs("1"), bs("10")]);
    }
}
