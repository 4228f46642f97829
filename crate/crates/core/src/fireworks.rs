//! The fireworks construction of a 1-generic prefix against a finite family of
//! enumerated adversaries `W_e`.
//!
//! Each requirement `R_e` draws a cap `n(e,k) ∈ [1, N(e,k)]`. Its strategy makes
//! passive guesses ("the current prefix has no extension in `W_e`") until `n`
//! of them have been refuted, then makes one active guess and blocks every
//! other strategy until an extension shows up. A wait that reaches the stage
//! budget is an active failure.
//!
//! Scheduling is round-robin by requirement index: step `s` reads every
//! adversary at stage `s` and serves strategy `s mod E`. A step in which the
//! served strategy does not move the prefix appends one free `0` bit, until the
//! prefix reaches the target length.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::cylinder::CylinderSet;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::gen;
use crate::staged::{Enumerator, Stage, StagedOpenSet};

/// Largest number of cap vectors an exhaustive sweep will enumerate.
pub const SWEEP_GUARD_LOG2: u32 = 24;

/// The cap bound `N(e,k)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapBound {
    /// `2^{e+k+1}`.
    Default,
    /// `2^{⟨e,k⟩+1}` with the Cantor pairing, for the combined test.
    Paired,
    /// The same power of two for every requirement.
    Constant(u64),
    /// One power of two per requirement.
    Explicit(Vec<u64>),
}

/// Cantor pairing `⟨e,k⟩`.
pub fn cantor_pair(e: u64, k: u64) -> u64 {
    (e + k) * (e + k + 1) / 2 + k
}

impl CapBound {
    pub fn bound(&self, e: usize, k: u32) -> u64 {
        match self {
            CapBound::Default => 1u64 << (e as u64 + k as u64 + 1),
            CapBound::Paired => 1u64 << (cantor_pair(e as u64, k as u64) + 1),
            CapBound::Constant(n) => *n,
            CapBound::Explicit(v) => v.get(e).copied().unwrap_or(0),
        }
    }

    /// `log2 N(e,k)`, the oracle block length `l(e,k)`.
    pub fn block_len(&self, e: usize, k: u32) -> u32 {
        self.bound(e, k).trailing_zeros()
    }
}

/// Where the caps come from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapSource {
    /// Uniform draws from a seeded generator.
    Seed(u64),
    /// Consecutive blocks of an oracle string.
    Oracle(BitString),
    /// Caps given directly.
    Caps(Vec<u64>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FireworksConfig {
    pub adversaries: Vec<Enumerator>,
    pub k: u32,
    pub cap_bound: CapBound,
    pub stage_budget: Stage,
    pub target_length: usize,
    pub cap_source: CapSource,
}

impl FireworksConfig {
    pub fn bounds(&self) -> Vec<u64> {
        (0..self.adversaries.len())
            .map(|e| self.cap_bound.bound(e, self.k))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        for (e, n) in self.bounds().into_iter().enumerate() {
            if n < 2 || !n.is_power_of_two() {
                return Err(Error::Config(format!(
                    "N({e},{}) = {n} is not a power of two >= 2",
                    self.k
                )));
            }
        }
        if let CapSource::Caps(caps) = &self.cap_source {
            if caps.len() != self.adversaries.len() {
                return Err(Error::Config(format!(
                    "{} caps given for {} requirements",
                    caps.len(),
                    self.adversaries.len()
                )));
            }
            for (e, (&c, n)) in caps.iter().zip(self.bounds()).enumerate() {
                if c < 1 || c > n {
                    return Err(Error::Config(format!("cap {c} for e={e} outside [1, {n}]")));
                }
            }
        }
        Ok(())
    }

    /// `Σ_e 1/N(e,k)`.
    pub fn failure_bound(&self) -> Dyadic {
        self.bounds()
            .into_iter()
            .map(|n| Dyadic::pow2_neg(n.trailing_zeros()))
            .sum()
    }

    pub fn with_caps(&self, caps: Vec<u64>) -> Self {
        Self {
            cap_source: CapSource::Caps(caps),
            ..self.clone()
        }
    }

    fn draw_caps(&self) -> Result<Vec<u64>> {
        let bounds = self.bounds();
        match &self.cap_source {
            CapSource::Caps(c) => Ok(c.clone()),
            CapSource::Seed(seed) => {
                let mut rng = gen::rng(*seed);
                Ok(bounds.iter().map(|&n| rng.gen_range(1..=n)).collect())
            }
            CapSource::Oracle(x) => oracle_block_caps(x, &self.cap_bound, self.k, bounds.len()),
        }
    }
}

/// Reads `n(e,k,X) = 1 + value of block e`, where block `e` has `log2 N(e,k)` bits.
pub fn oracle_block_caps(
    x: &BitString,
    cap_bound: &CapBound,
    k: u32,
    num_requirements: usize,
) -> Result<Vec<u64>> {
    let needed: usize = (0..num_requirements)
        .map(|e| cap_bound.block_len(e, k) as usize)
        .sum();
    if x.len() < needed {
        return Err(Error::OracleTooShort {
            needed,
            got: x.len(),
        });
    }
    let mut pos = 0;
    let mut caps = Vec::with_capacity(num_requirements);
    for e in 0..num_requirements {
        let l = cap_bound.block_len(e, k) as usize;
        caps.push(1 + x.prefix(pos + l).suffix_from(pos).to_u64());
        pos += l;
    }
    Ok(caps)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    /// (i): a passive guess was never refuted.
    PassiveSuccess,
    /// (ii): the active guess was answered.
    ActiveSuccess,
    /// (iii): the active guess waited until the stage budget.
    ActiveFailure,
    /// The strategy never received attention.
    Unresolved,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [
        Outcome::PassiveSuccess,
        Outcome::ActiveSuccess,
        Outcome::ActiveFailure,
        Outcome::Unresolved,
    ];

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::PassiveSuccess => "passive_success",
            Outcome::ActiveSuccess => "active_success",
            Outcome::ActiveFailure => "active_failure",
            Outcome::Unresolved => "unresolved",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    PassiveGuess {
        stage: Stage,
        e: usize,
        number: u64,
        prefix: BitString,
    },
    GuessRefuted {
        stage: Stage,
        e: usize,
        number: u64,
        witness: BitString,
    },
    ActiveGuess {
        stage: Stage,
        e: usize,
        prefix: BitString,
    },
    ActiveResolved {
        stage: Stage,
        e: usize,
        extension: BitString,
    },
    /// The wait hit the budget. `adversary_exhausted` is true when the
    /// adversary's own horizon had already passed, so the refusal is final for
    /// the scripted adversary rather than a timeout.
    ActiveTimedOut {
        stage: Stage,
        e: usize,
        prefix: BitString,
        adversary_exhausted: bool,
    },
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::PassiveGuess { stage, e, number, prefix } => {
                write!(f, "stage {stage}: R{e} passive guess #{number} on {prefix}")
            }
            Event::GuessRefuted { stage, e, number, witness } => {
                write!(f, "stage {stage}: R{e} guess #{number} refuted by {witness}")
            }
            Event::ActiveGuess { stage, e, prefix } => {
                write!(f, "stage {stage}: R{e} active guess on {prefix}")
            }
            Event::ActiveResolved { stage, e, extension } => {
                write!(f, "stage {stage}: R{e} active guess answered by {extension}")
            }
            Event::ActiveTimedOut { stage, e, prefix, adversary_exhausted } => {
                let why = if *adversary_exhausted { "refused" } else { "timed out" };
                write!(f, "stage {stage}: R{e} active guess on {prefix} {why}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FireworksRun {
    pub x_prefix: BitString,
    pub outcomes: Vec<Outcome>,
    pub caps: Vec<u64>,
    pub trace: Vec<Event>,
    pub halted: bool,
}

impl FireworksRun {
    pub fn failed(&self) -> bool {
        self.outcomes.contains(&Outcome::ActiveFailure)
    }
}

#[derive(Clone, Debug)]
enum Strategy {
    Idle,
    Passive { number: u64, prefix: BitString },
    Done(Outcome),
}

struct Adversary {
    events: Vec<(Stage, BitString)>,
    horizon: Stage,
}

impl Adversary {
    fn new(e: &Enumerator) -> Self {
        Self {
            events: e.events().map(|(s, x)| (s, x.clone())).collect(),
            horizon: e.horizon(),
        }
    }

    /// Shortest (then leftmost) string enumerated by `stage` that extends `sigma`.
    fn extension(&self, sigma: &BitString, stage: Stage) -> Option<&BitString> {
        self.events
            .iter()
            .take_while(|(s, _)| *s <= stage)
            .map(|(_, x)| x)
            .filter(|x| sigma.is_prefix_of(x))
            .min_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)))
    }
}

pub fn run_fireworks(cfg: &FireworksConfig) -> Result<FireworksRun> {
    cfg.validate()?;
    let caps = cfg.draw_caps()?;
    let adversaries: Vec<Adversary> = cfg.adversaries.iter().map(Adversary::new).collect();
    Ok(simulate(cfg, &adversaries, caps))
}

fn simulate(cfg: &FireworksConfig, adversaries: &[Adversary], caps: Vec<u64>) -> FireworksRun {
    let count = adversaries.len();
    let mut x = BitString::empty();
    let mut strategies = vec![Strategy::Idle; count];
    let mut trace = Vec::new();
    let mut waiting: Option<usize> = None;
    let mut halted = false;

    for stage in 0..=cfg.stage_budget {
        if let Some(e) = waiting {
            if let Some(ext) = adversaries[e].extension(&x, stage) {
                x = ext.clone();
                trace.push(Event::ActiveResolved {
                    stage,
                    e,
                    extension: x.clone(),
                });
                strategies[e] = Strategy::Done(Outcome::ActiveSuccess);
                waiting = None;
            } else if stage == cfg.stage_budget {
                trace.push(Event::ActiveTimedOut {
                    stage,
                    e,
                    prefix: x.clone(),
                    adversary_exhausted: adversaries[e].horizon <= stage,
                });
                strategies[e] = Strategy::Done(Outcome::ActiveFailure);
                halted = true;
            }
            continue;
        }
        if count == 0 {
            if x.len() < cfg.target_length {
                x.push(false);
            }
            continue;
        }

        let e = stage as usize % count;
        let before = x.len();
        let moved = match strategies[e].clone() {
            Strategy::Idle => {
                trace.push(Event::PassiveGuess {
                    stage,
                    e,
                    number: 1,
                    prefix: x.clone(),
                });
                strategies[e] = Strategy::Passive {
                    number: 1,
                    prefix: x.clone(),
                };
                false
            }
            Strategy::Passive { number, prefix } => {
                match adversaries[e].extension(&prefix, stage) {
                    None => false,
                    Some(witness) => {
                        trace.push(Event::GuessRefuted {
                            stage,
                            e,
                            number,
                            witness: witness.clone(),
                        });
                        if number < caps[e] {
                            trace.push(Event::PassiveGuess {
                                stage,
                                e,
                                number: number + 1,
                                prefix: x.clone(),
                            });
                            strategies[e] = Strategy::Passive {
                                number: number + 1,
                                prefix: x.clone(),
                            };
                            false
                        } else {
                            trace.push(Event::ActiveGuess {
                                stage,
                                e,
                                prefix: x.clone(),
                            });
                            if let Some(ext) = adversaries[e].extension(&x, stage) {
                                x = ext.clone();
                                trace.push(Event::ActiveResolved {
                                    stage,
                                    e,
                                    extension: x.clone(),
                                });
                                strategies[e] = Strategy::Done(Outcome::ActiveSuccess);
                                x.len() != before
                            } else if stage == cfg.stage_budget {
                                trace.push(Event::ActiveTimedOut {
                                    stage,
                                    e,
                                    prefix: x.clone(),
                                    adversary_exhausted: adversaries[e].horizon <= stage,
                                });
                                strategies[e] = Strategy::Done(Outcome::ActiveFailure);
                                halted = true;
                                true
                            } else {
                                waiting = Some(e);
                                true
                            }
                        }
                    }
                }
            }
            Strategy::Done(_) => false,
        };
        if !moved && !halted && x.len() < cfg.target_length {
            x.push(false);
        }
    }

    let outcomes = strategies
        .into_iter()
        .map(|s| match s {
            Strategy::Idle => Outcome::Unresolved,
            Strategy::Passive { .. } => Outcome::PassiveSuccess,
            Strategy::Done(o) => o,
        })
        .collect();
    FireworksRun {
        x_prefix: x,
        outcomes,
        caps,
        trace,
        halted,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RequirementStatus {
    MetInside,
    MetAvoided,
    Unmet,
}

/// Judges `R_e` for the finite prefix `x` against the final enumeration.
pub fn check_requirement<'a, I>(w_final: I, x: &BitString, universe_depth: usize) -> RequirementStatus
where
    I: IntoIterator<Item = &'a BitString>,
{
    let w: Vec<&BitString> = w_final
        .into_iter()
        .filter(|s| s.len() <= universe_depth)
        .collect();
    if x.prefixes().any(|p| w.iter().any(|s| **s == p)) {
        return RequirementStatus::MetInside;
    }
    if x.prefixes().any(|p| !w.iter().any(|s| p.is_prefix_of(s))) {
        return RequirementStatus::MetAvoided;
    }
    RequirementStatus::Unmet
}

/// Mixed-radix enumeration of every cap vector in `Π_e [1, N(e,k)]`.
fn cap_vectors(bounds: &[u64]) -> impl Iterator<Item = Vec<u64>> + '_ {
    let total: u64 = bounds.iter().product();
    (0..total).map(move |mut idx| {
        let mut caps = vec![0; bounds.len()];
        for (e, &n) in bounds.iter().enumerate().rev() {
            caps[e] = 1 + idx % n;
            idx /= n;
        }
        caps
    })
}

fn guard(cfg: &FireworksConfig) -> Result<u32> {
    cfg.validate()?;
    let log2: u32 = cfg.bounds().iter().map(|n| n.trailing_zeros()).sum();
    if log2 > SWEEP_GUARD_LOG2 {
        return Err(Error::GuardExceeded(format!(
            "2^{log2} cap vectors exceed the limit of 2^{SWEEP_GUARD_LOG2}"
        )));
    }
    Ok(log2)
}

/// Result of an exhaustive cap sweep.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sweep {
    pub total: u64,
    pub failures: u64,
    pub failure_probability: Dyadic,
    /// `histogram[e][outcome]`.
    pub histogram: Vec<[u64; 4]>,
    pub runs: Vec<(Vec<u64>, Vec<Outcome>)>,
}

pub fn sweep(cfg: &FireworksConfig, keep_runs: bool) -> Result<Sweep> {
    let log2 = guard(cfg)?;
    let adversaries: Vec<Adversary> = cfg.adversaries.iter().map(Adversary::new).collect();
    let bounds = cfg.bounds();
    let mut histogram = vec![[0u64; 4]; bounds.len()];
    let mut failures = 0u64;
    let mut total = 0u64;
    let mut runs = Vec::new();
    for caps in cap_vectors(&bounds) {
        let run = simulate(cfg, &adversaries, caps);
        total += 1;
        if run.failed() {
            failures += 1;
        }
        for (e, o) in run.outcomes.iter().enumerate() {
            histogram[e][o.index()] += 1;
        }
        if keep_runs {
            runs.push((run.caps, run.outcomes));
        }
    }
    Ok(Sweep {
        total,
        failures,
        failure_probability: Dyadic::new(failures, log2),
        histogram,
        runs,
    })
}

/// Fraction of cap vectors whose run contains an active failure, exactly.
pub fn exact_failure_probability(cfg: &FireworksConfig) -> Result<Dyadic> {
    Ok(sweep(cfg, false)?.failure_probability)
}

/// A counterexample to the outcome trichotomy for one requirement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrichotomyViolation {
    pub e: usize,
    pub other_caps: Vec<u64>,
    pub outcomes: Vec<Outcome>,
}

impl fmt::Display for TrichotomyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{} with caps {:?}: outcomes by cap ", self.e, self.other_caps)?;
        for (i, o) in self.outcomes.iter().enumerate() {
            write!(f, "{}{}={o}", if i > 0 { "," } else { "" }, i + 1)?;
        }
        Ok(())
    }
}

/// Outcome pattern of requirement `e` across its caps `1..=N`: at most one
/// failing cap `m`; every cap below it active success, every cap above it
/// passive success.
pub fn trichotomy_holds(outcomes: &[Outcome]) -> bool {
    let fails: Vec<usize> = outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| **o == Outcome::ActiveFailure)
        .map(|(i, _)| i)
        .collect();
    match fails.as_slice() {
        [] => true,
        [m] => {
            outcomes[..*m].iter().all(|o| *o == Outcome::ActiveSuccess)
                && outcomes[m + 1..].iter().all(|o| *o == Outcome::PassiveSuccess)
        }
        _ => false,
    }
}

/// Checks the trichotomy for every requirement and every fixing of the other
/// caps. Returns the number of (requirement, fixing) slices checked.
pub fn check_trichotomy(cfg: &FireworksConfig) -> Result<std::result::Result<u64, TrichotomyViolation>> {
    let sweep = sweep(cfg, true)?;
    let bounds = cfg.bounds();
    let mut slices = 0u64;
    for e in 0..bounds.len() {
        let mut by_rest: BTreeMap<Vec<u64>, Vec<Outcome>> = BTreeMap::new();
        for (caps, outcomes) in &sweep.runs {
            let mut rest = caps.clone();
            rest.remove(e);
            let slot = by_rest
                .entry(rest)
                .or_insert_with(|| vec![Outcome::Unresolved; bounds[e] as usize]);
            slot[(caps[e] - 1) as usize] = outcomes[e];
        }
        for (rest, outcomes) in by_rest {
            slices += 1;
            if !trichotomy_holds(&outcomes) {
                return Ok(Err(TrichotomyViolation {
                    e,
                    other_caps: rest,
                    outcomes,
                }));
            }
        }
    }
    Ok(Ok(slices))
}

/// Per-requirement failure sets `F_{e,k} = U_{e,k} \ V_{e,k}` over oracle blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FailureSets {
    /// Oracles whose run makes an active guess for `R_e`, enumerated at the
    /// stage of the guess.
    pub active: StagedOpenSet,
    /// Oracles whose active guess for `R_e` is answered, enumerated at the
    /// stage of the answer.
    pub answered: StagedOpenSet,
}

impl FailureSets {
    pub fn difference(&self) -> CylinderSet {
        self.active.final_set().difference(&self.answered.final_set())
    }
}

/// Runs the construction on every oracle block and collects, for each `e`,
/// the cylinders making `R_e` guess actively and those where it is answered.
pub fn extract_failure_sets(cfg: &FireworksConfig) -> Result<Vec<FailureSets>> {
    let log2 = guard(cfg)?;
    let adversaries: Vec<Adversary> = cfg.adversaries.iter().map(Adversary::new).collect();
    let count = adversaries.len();
    let mut active: Vec<BTreeMap<Stage, std::collections::BTreeSet<BitString>>> =
        vec![BTreeMap::new(); count];
    let mut answered = active.clone();
    for block in BitString::all_of_length(log2 as usize) {
        let caps = oracle_block_caps(&block, &cfg.cap_bound, cfg.k, count)?;
        let run = simulate(cfg, &adversaries, caps);
        for ev in &run.trace {
            match ev {
                Event::ActiveGuess { stage, e, .. } => {
                    active[*e].entry(*stage).or_default().insert(block.clone());
                }
                Event::ActiveResolved { stage, e, .. } => {
                    answered[*e].entry(*stage).or_default().insert(block.clone());
                }
                _ => {}
            }
        }
    }
    Ok(active
        .into_iter()
        .zip(answered)
        .map(|(a, v)| FailureSets {
            active: StagedOpenSet::new(Enumerator::from_map(a, cfg.stage_budget)),
            answered: StagedOpenSet::new(Enumerator::from_map(v, cfg.stage_budget)),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bs;

    fn cfg(adversaries: Vec<Enumerator>, cap_bound: CapBound, caps: Vec<u64>) -> FireworksConfig {
        FireworksConfig {
            adversaries,
            k: 1,
            cap_bound,
            stage_budget: 20,
            target_length: 8,
            cap_source: CapSource::Caps(caps),
        }
    }

    /// Enumerates `1` at stage 3; by then the prefix has grown past Λ, so the
    /// first guess (on Λ) is refuted and nothing ever extends the prefix again.
    fn refute_once() -> Enumerator {
        Enumerator::new(vec![(3, vec![bs("1")])], 3).unwrap()
    }

    #[test]
    fn silent_adversary_gives_passive_success() {
        let run = run_fireworks(&cfg(vec![Enumerator::empty(5)], CapBound::Constant(4), vec![3]))
            .unwrap();
        assert_eq!(run.outcomes, vec![Outcome::PassiveSuccess]);
        assert!(!run.failed());
        assert_eq!(run.x_prefix.len(), 8);
    }

    #[test]
    fn saturated_adversary_gives_active_success() {
        let all: Vec<BitString> = (0..=3).flat_map(BitString::all_of_length).collect();
        let w = Enumerator::immediate(all, 0);
        let run = run_fireworks(&cfg(vec![w], CapBound::Constant(4), vec![1])).unwrap();
        assert_eq!(run.outcomes, vec![Outcome::ActiveSuccess]);
        let refuted = run
            .trace
            .iter()
            .filter(|e| matches!(e, Event::GuessRefuted { .. }))
            .count();
        assert_eq!(refuted, 1);
    }

    #[test]
    fn single_refutation_then_active_failure() {
        let run = run_fireworks(&cfg(vec![refute_once()], CapBound::Constant(4), vec![1])).unwrap();
        assert_eq!(run.outcomes, vec![Outcome::ActiveFailure]);
        assert!(run.halted);
        assert!(matches!(
            run.trace.last(),
            Some(Event::ActiveTimedOut { adversary_exhausted: true, .. })
        ));
        let run = run_fireworks(&cfg(vec![refute_once()], CapBound::Constant(4), vec![2])).unwrap();
        assert_eq!(run.outcomes, vec![Outcome::PassiveSuccess]);
    }

    #[test]
    fn exact_failure_for_single_refutation_is_one_quarter() {
        let c = cfg(vec![refute_once()], CapBound::Constant(4), vec![1]);
        assert_eq!(exact_failure_probability(&c).unwrap(), Dyadic::new(1, 2));
        let c = cfg(vec![Enumerator::empty(3)], CapBound::Constant(4), vec![1]);
        assert_eq!(exact_failure_probability(&c).unwrap(), Dyadic::zero());
    }

    #[test]
    fn requirement_checks() {
        let w = [bs("01")];
        assert_eq!(check_requirement(&w, &bs("0110"), 8), RequirementStatus::MetInside);
        let w = [bs("11")];
        assert_eq!(check_requirement(&w, &bs("00"), 8), RequirementStatus::MetAvoided);
        let w: Vec<BitString> = BitString::all_of_length(3).collect();
        assert_eq!(check_requirement(&w, &bs("01"), 3), RequirementStatus::Unmet);
    }

    #[test]
    fn oracle_blocks() {
        let b = CapBound::Constant(4);
        assert_eq!(oracle_block_caps(&bs("0000"), &b, 0, 1).unwrap(), vec![1]);
        assert_eq!(oracle_block_caps(&bs("1100"), &b, 0, 1).unwrap(), vec![4]);
        assert_eq!(oracle_block_caps(&bs("0110"), &b, 0, 2).unwrap(), vec![2, 3]);
        assert_eq!(
            oracle_block_caps(&bs("011"), &b, 0, 2),
            Err(Error::OracleTooShort { needed: 4, got: 3 })
        );
    }

    #[test]
    fn cap_bound_validation() {
        let c = cfg(vec![Enumerator::empty(1)], CapBound::Constant(3), vec![1]);
        assert!(matches!(run_fireworks(&c), Err(Error::Config(_))));
        let c = cfg(vec![Enumerator::empty(1)], CapBound::Constant(4), vec![5]);
        assert!(matches!(run_fireworks(&c), Err(Error::Config(_))));
    }

    #[test]
    fn sweep_guard_refuses_large_products() {
        let c = FireworksConfig {
            adversaries: vec![Enumerator::empty(1); 5],
            k: 3,
            cap_bound: CapBound::Default,
            stage_budget: 4,
            target_length: 4,
            cap_source: CapSource::Seed(0),
        };
        assert!(matches!(sweep(&c, false), Err(Error::GuardExceeded(_))));
    }

    #[test]
    fn failure_sets_match_failure_probability() {
        let c = cfg(vec![refute_once()], CapBound::Constant(4), vec![1]);
        let sets = extract_failure_sets(&c).unwrap();
        assert_eq!(sets.len(), 1);
        assert_eq!(sets[0].difference().measure(), Dyadic::new(1, 2));
        assert_eq!(sets[0].difference().to_string(), "{00}");

        let c = cfg(vec![Enumerator::empty(2)], CapBound::Constant(4), vec![1]);
        let sets = extract_failure_sets(&c).unwrap();
        assert!(sets[0].active.final_set().is_empty());
        assert!(sets[0].answered.final_set().is_empty());
    }

    #[test]
    fn trichotomy_pattern() {
        use Outcome::*;
        assert!(trichotomy_holds(&[ActiveSuccess, ActiveFailure, PassiveSuccess]));
        assert!(trichotomy_holds(&[PassiveSuccess, PassiveSuccess]));
        assert!(!trichotomy_holds(&[ActiveFailure, ActiveFailure]));
        assert!(!trichotomy_holds(&[PassiveSuccess, ActiveFailure]));
    }
}
