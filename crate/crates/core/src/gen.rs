//! Seeded generators for staged objects used in sweeps and property tests.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::dyadic::Dyadic;
use crate::staged::{Axiom, Enumerator, Pi01Tree, Stage, TuringFunctional};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_string<R: Rng>(rng: &mut R, len: usize) -> BitString {
    BitString::from_bits((0..len).map(|_| rng.gen::<bool>()).collect())
}

/// Density parameters for a generated enumerator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumeratorParams {
    pub seed: u64,
    pub count: usize,
    #[serde(default = "one")]
    pub min_len: usize,
    pub max_len: usize,
    pub horizon: Stage,
}

fn one() -> usize {
    1
}

pub fn enumerator(params: &EnumeratorParams) -> Enumerator {
    let mut rng = rng(params.seed);
    let mut schedule: BTreeMap<Stage, BTreeSet<BitString>> = BTreeMap::new();
    for _ in 0..params.count {
        let len = rng.gen_range(params.min_len..=params.max_len.max(params.min_len));
        let stage = rng.gen_range(0..=params.horizon);
        schedule
            .entry(stage)
            .or_default()
            .insert(random_string(&mut rng, len));
    }
    Enumerator::from_map(schedule, params.horizon)
}

/// Parameters for a generated consistent functional.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionalParams {
    pub seed: u64,
    /// Longest oracle string carrying an axiom.
    pub max_oracle_len: usize,
    /// Chance (in percent) that a given oracle string carries an axiom.
    pub axiom_percent: u32,
    /// Largest number of output bits emitted per oracle bit.
    pub max_emit: usize,
    pub horizon: Stage,
}

/// A random monotone transducer: each oracle node emits a few output bits, and
/// an axiom maps an oracle string to the concatenation along its path. The
/// result is consistent by construction.
pub fn functional(params: &FunctionalParams) -> TuringFunctional {
    let mut rng = rng(params.seed);
    let mut out: HashMap<BitString, BitString> = HashMap::new();
    out.insert(BitString::empty(), BitString::empty());
    let mut axioms = Vec::new();
    for len in 1..=params.max_oracle_len {
        for sigma in BitString::all_of_length(len) {
            let parent = sigma.parent().expect("len >= 1");
            let emit_len = rng.gen_range(0..=params.max_emit);
            let emitted = random_string(&mut rng, emit_len);
            let value = out[&parent].concat(&emitted);
            if rng.gen_range(0..100) < params.axiom_percent && !value.is_empty() {
                axioms.push(Axiom {
                    stage: rng.gen_range(0..=params.horizon),
                    oracle: sigma.clone(),
                    output: value.clone(),
                });
            }
            out.insert(sigma, value);
        }
    }
    TuringFunctional::new(axioms, params.horizon).expect("transducer axioms are consistent")
}

/// Parameters for a generated Π⁰₁ tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub seed: u64,
    pub depth: usize,
    pub removals: usize,
    /// Shortest removed string.
    pub min_len: usize,
    /// Removals never push the final class measure below `2^-floor_log2`.
    #[serde(default = "one")]
    pub floor_log2: usize,
    pub horizon: Stage,
}

pub fn tree(params: &TreeParams) -> Pi01Tree {
    let mut rng = rng(params.seed);
    let floor = Dyadic::pow2_neg(params.floor_log2 as u32);
    let mut schedule: BTreeMap<Stage, BTreeSet<BitString>> = BTreeMap::new();
    let mut all: Vec<BitString> = Vec::new();
    for _ in 0..params.removals {
        let len = rng.gen_range(params.min_len.min(params.depth)..=params.depth);
        let s = random_string(&mut rng, len);
        let stage = rng.gen_range(0..=params.horizon);
        all.push(s.clone());
        let removed = crate::cylinder::CylinderSet::normalize(all.iter().cloned());
        if &Dyadic::one() - &removed.measure() < floor {
            all.pop();
            continue;
        }
        schedule.entry(stage).or_default().insert(s);
    }
    Pi01Tree::new(params.depth, Enumerator::from_map(schedule, params.horizon))
        .expect("generated removals respect depth")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        let p = EnumeratorParams {
            seed: 9,
            count: 12,
            min_len: 1,
            max_len: 5,
            horizon: 10,
        };
        assert_eq!(enumerator(&p), enumerator(&p));
        let f = FunctionalParams {
            seed: 3,
            max_oracle_len: 5,
            axiom_percent: 60,
            max_emit: 2,
            horizon: 12,
        };
        assert_eq!(functional(&f), functional(&f));
    }

    #[test]
    fn generated_tree_keeps_measure_floor() {
        for seed in 0..20 {
            let t = tree(&TreeParams {
                seed,
                depth: 12,
                removals: 40,
                min_len: 2,
                floor_log2: 1,
                horizon: 8,
            });
            assert!(t.class_measure(t.horizon()) >= Dyadic::new(1, 1));
        }
    }
}
