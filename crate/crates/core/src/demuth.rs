//! Demuth tests, finite-union-of-differences tests, and the conversions
//! between them.
//!
//! Levels are truncated to a finite `level_count`. A level of a Demuth test is
//! a [`VersionedOpenSet`]; its version count is the number of listed versions
//! and is bounded by `h(n)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::cylinder::CylinderSet;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::gen;
use crate::staged::{Enumerator, Stage, StagedOpenSet};

/// A sequence of c.e. open sets, each one live from its stage until the next.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct VersionedOpenSet {
    versions: Vec<(Stage, StagedOpenSet)>,
}

impl VersionedOpenSet {
    pub fn new(versions: Vec<(Stage, StagedOpenSet)>) -> Result<Self> {
        for w in versions.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::Schedule(format!(
                    "version stages must increase strictly ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        Ok(Self { versions })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn versions(&self) -> &[(Stage, StagedOpenSet)] {
        &self.versions
    }

    pub fn version_count(&self) -> usize {
        self.versions.len()
    }

    pub fn live_at(&self, stage: Stage) -> Option<&StagedOpenSet> {
        self.versions
            .iter()
            .rev()
            .find(|(s, _)| *s <= stage)
            .map(|(_, v)| v)
    }

    /// Stage-`s` approximation of the live version.
    pub fn set_at(&self, stage: Stage) -> CylinderSet {
        self.live_at(stage)
            .map(|v| v.at(stage))
            .unwrap_or_default()
    }

    /// Final set of the last version.
    pub fn final_set(&self) -> CylinderSet {
        self.versions
            .last()
            .map(|(_, v)| v.final_set())
            .unwrap_or_default()
    }

    pub fn horizon(&self) -> Stage {
        self.versions
            .iter()
            .map(|(s, v)| v.horizon().max(*s))
            .max()
            .unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemuthTest {
    levels: Vec<VersionedOpenSet>,
    change_bound: Vec<u64>,
}

impl DemuthTest {
    pub fn new(levels: Vec<VersionedOpenSet>, change_bound: Vec<u64>) -> Result<Self> {
        if levels.len() != change_bound.len() {
            return Err(Error::Config(format!(
                "{} levels but {} change bounds",
                levels.len(),
                change_bound.len()
            )));
        }
        Ok(Self {
            levels,
            change_bound,
        })
    }

    pub fn empty() -> Self {
        Self {
            levels: Vec::new(),
            change_bound: Vec::new(),
        }
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, n: usize) -> &VersionedOpenSet {
        &self.levels[n]
    }

    pub fn levels(&self) -> &[VersionedOpenSet] {
        &self.levels
    }

    pub fn change_bound(&self, n: usize) -> u64 {
        self.change_bound[n]
    }
}

/// One difference `U \ V` of two staged open sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffPair {
    pub u: StagedOpenSet,
    pub v: StagedOpenSet,
}

impl DiffPair {
    pub fn final_difference(&self) -> CylinderSet {
        self.u.final_set().difference(&self.v.final_set())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffUnionTest {
    levels: Vec<Vec<DiffPair>>,
    pair_bound: Vec<u64>,
}

impl DiffUnionTest {
    pub fn new(levels: Vec<Vec<DiffPair>>, pair_bound: Vec<u64>) -> Result<Self> {
        if levels.len() != pair_bound.len() {
            return Err(Error::Config(format!(
                "{} levels but {} pair bounds",
                levels.len(),
                pair_bound.len()
            )));
        }
        Ok(Self { levels, pair_bound })
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, n: usize) -> &[DiffPair] {
        &self.levels[n]
    }

    pub fn pair_bound(&self, n: usize) -> u64 {
        self.pair_bound[n]
    }

    /// Final `D_n = ∪_k (U_k \ V_k)`.
    pub fn level_set(&self, n: usize) -> CylinderSet {
        self.levels[n]
            .iter()
            .fold(CylinderSet::empty(), |acc, p| acc.union(&p.final_difference()))
    }

    /// Checks the pair count and the measure bound at every level.
    pub fn validate(&self) -> Result<()> {
        for n in 0..self.level_count() {
            if self.levels[n].len() as u64 > self.pair_bound[n] {
                return Err(Error::MeasureBound {
                    level: n,
                    detail: format!(
                        "{} pairs exceed the bound {}",
                        self.levels[n].len(),
                        self.pair_bound[n]
                    ),
                });
            }
            let m = self.level_set(n).measure();
            if m > Dyadic::pow2_neg(n as u32) {
                return Err(Error::MeasureBound {
                    level: n,
                    detail: format!("measure {m} exceeds 2^-{n}"),
                });
            }
        }
        Ok(())
    }
}

/// Final level sets of a test, for membership queries.
pub trait LevelSets {
    fn level_count(&self) -> usize;
    fn final_level(&self, n: usize) -> CylinderSet;
}

impl LevelSets for DemuthTest {
    fn level_count(&self) -> usize {
        self.levels.len()
    }

    fn final_level(&self, n: usize) -> CylinderSet {
        self.levels[n].final_set()
    }
}

impl LevelSets for DiffUnionTest {
    fn level_count(&self) -> usize {
        self.levels.len()
    }

    fn final_level(&self, n: usize) -> CylinderSet {
        self.level_set(n)
    }
}

/// Levels whose final set contains `[x]`.
pub fn solovay_membership_profile<T: LevelSets>(x: &BitString, t: &T) -> BTreeSet<usize> {
    (0..t.level_count())
        .filter(|&n| t.final_level(n).contains_prefix_of(x))
        .collect()
}

/// Pair `k` is version `k`, minus itself from the stage the next version
/// appears. Every difference but the last is empty in the limit.
pub fn demuth_to_diffunion(t: &DemuthTest) -> DiffUnionTest {
    let levels = t
        .levels
        .iter()
        .map(|level| {
            let vs = level.versions();
            vs.iter()
                .enumerate()
                .map(|(k, (_, u))| {
                    let v = match vs.get(k + 1) {
                        Some((next, _)) => u.delayed_until(*next),
                        None => StagedOpenSet::empty(u.horizon()),
                    };
                    DiffPair { u: u.clone(), v }
                })
                .collect()
        })
        .collect();
    DiffUnionTest {
        levels,
        pair_bound: t.change_bound.clone(),
    }
}

/// Output level `n` is built from input level `n+1` with pair bound `h`: a
/// new version `∪_k (U_k \ V_k[s])` is emitted whenever some `μ(V_k[s])`
/// passes a new multiple of `2^{-n-1}/h`. The output change bound is
/// `h²·2^{n+1}`.
pub fn diffunion_to_demuth(t: &DiffUnionTest) -> Result<DemuthTest> {
    t.validate()?;
    let mut levels = Vec::new();
    let mut bounds = Vec::new();
    for n in 0..t.level_count().saturating_sub(1) {
        let pairs = t.level(n + 1);
        let h = t.pair_bound(n + 1);
        bounds.push(h * h * (1u64 << (n + 1)));
        levels.push(convert_level(pairs, h, n)?);
    }
    DemuthTest::new(levels, bounds)
}

fn convert_level(pairs: &[DiffPair], h: u64, n: usize) -> Result<VersionedOpenSet> {
    if pairs.is_empty() {
        return Ok(VersionedOpenSet::empty());
    }
    let denominator = BigUint::from(h) << (n + 1);
    let stages: BTreeSet<Stage> = std::iter::once(0)
        .chain(pairs.iter().flat_map(|p| p.v.change_stages()))
        .collect();
    let union_u = pairs
        .iter()
        .skip(1)
        .fold(pairs[0].u.clone(), |acc, p| acc.union(&p.u));

    let mut counts = vec![BigUint::from(0u32); pairs.len()];
    let mut versions = Vec::new();
    for s in stages {
        let snapshot: Vec<CylinderSet> = pairs.iter().map(|p| p.v.at(s)).collect();
        let mut rose = false;
        for (k, vs) in snapshot.iter().enumerate() {
            let c = vs.measure().multiples_strictly_below(&denominator);
            if c > counts[k] {
                counts[k] = c;
                rose = true;
            }
        }
        if s == 0 && !rose {
            versions.push((0, union_u.clone()));
        } else if rose {
            let version = pairs
                .iter()
                .zip(&snapshot)
                .map(|(p, vs)| p.u.minus_clopen(vs))
                .reduce(|a, b| a.union(&b))
                .expect("non-empty level");
            versions.push((s, version));
        }
    }
    VersionedOpenSet::new(versions)
}

/// One level of a [`verify_demuth`] report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelCheck {
    pub level: usize,
    pub version_count: u64,
    pub version_bound: u64,
    pub measure: Dyadic,
    pub measure_bound: Dyadic,
}

impl LevelCheck {
    pub fn versions_ok(&self) -> bool {
        self.version_count <= self.version_bound
    }

    pub fn measure_ok(&self) -> bool {
        self.measure <= self.measure_bound
    }

    pub fn pass(&self) -> bool {
        self.versions_ok() && self.measure_ok()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct DemuthReport {
    pub levels: Vec<LevelCheck>,
}

impl DemuthReport {
    pub fn pass(&self) -> bool {
        self.levels.iter().all(LevelCheck::pass)
    }

    pub fn failing_levels(&self) -> Vec<usize> {
        self.levels
            .iter()
            .filter(|l| !l.pass())
            .map(|l| l.level)
            .collect()
    }

    /// Columns: `level,version_count,version_bound,measure,measure_bound,pass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,version_count,version_bound,measure,measure_bound,pass\n");
        for l in &self.levels {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                l.level,
                l.version_count,
                l.version_bound,
                l.measure,
                l.measure_bound,
                l.pass()
            ));
        }
        out
    }
}

impl fmt::Display for DemuthReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_csv())
    }
}

pub fn verify_demuth(t: &DemuthTest) -> DemuthReport {
    DemuthReport {
        levels: (0..t.level_count())
            .map(|n| LevelCheck {
                level: n,
                version_count: t.levels[n].version_count() as u64,
                version_bound: t.change_bound[n],
                measure: t.levels[n].final_set().measure(),
                measure_bound: Dyadic::pow2_neg(n as u32),
            })
            .collect(),
    }
}

/// Shape of a seeded random test.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomTestParams {
    pub seed: u64,
    pub levels: usize,
    pub max_h: u64,
    pub depth: usize,
    pub horizon: Stage,
    pub max_strings: usize,
}

fn random_staged<R: Rng>(
    rng: &mut R,
    strings: impl IntoIterator<Item = BitString>,
    from: Stage,
    horizon: Stage,
) -> StagedOpenSet {
    let mut schedule: BTreeMap<Stage, BTreeSet<BitString>> = BTreeMap::new();
    for s in strings {
        schedule
            .entry(rng.gen_range(from..=horizon))
            .or_default()
            .insert(s);
    }
    StagedOpenSet::new(Enumerator::from_map(schedule, horizon))
}

fn random_extensions<R: Rng>(rng: &mut R, prefix: &BitString, depth: usize, count: usize) -> Vec<BitString> {
    (0..count)
        .map(|_| {
            let len = rng.gen_range(prefix.len()..=depth.max(prefix.len()));
            prefix.concat(&gen::random_string(rng, len - prefix.len()))
        })
        .collect()
}

/// Every version of level `n` lives inside one random cylinder of length `n`,
/// so its measure is at most `2^{-n}`.
pub fn random_demuth_test(p: &RandomTestParams) -> DemuthTest {
    let mut rng = gen::rng(p.seed);
    let mut levels = Vec::new();
    let mut bounds = Vec::new();
    for n in 0..p.levels {
        let h = rng.gen_range(1..=p.max_h);
        let count = rng.gen_range(1..=h).min(p.horizon as u64 + 1) as usize;
        let mut stages: BTreeSet<Stage> = BTreeSet::new();
        while stages.len() < count {
            stages.insert(rng.gen_range(0..=p.horizon));
        }
        let versions = stages
            .into_iter()
            .map(|s| {
                let prefix = gen::random_string(&mut rng, n.min(p.depth));
                let k = rng.gen_range(1..=p.max_strings);
                let strings = random_extensions(&mut rng, &prefix, p.depth, k);
                (s, random_staged(&mut rng, strings, 0, p.horizon))
            })
            .collect();
        levels.push(VersionedOpenSet::new(versions).expect("stages are strictly increasing"));
        bounds.push(h);
    }
    DemuthTest::new(levels, bounds).expect("one bound per level")
}

fn ceil_log2(h: u64) -> usize {
    (64 - (h.max(1) - 1).leading_zeros()) as usize
}

/// Each pair has an arbitrary `U` and a `V` that slowly fills `U` outside one
/// cylinder `[π]` with `|π| = n + ⌈log2 h⌉`, so the final level measure is at
/// most `2^{-n}`.
pub fn random_diffunion_test(p: &RandomTestParams) -> DiffUnionTest {
    let mut rng = gen::rng(p.seed);
    let mut levels = Vec::new();
    let mut bounds = Vec::new();
    for n in 0..p.levels {
        let h = rng.gen_range(1..=p.max_h);
        let pi_len = (n + ceil_log2(h)).min(p.depth);
        let count = rng.gen_range(1..=h);
        let mut pairs = Vec::new();
        for _ in 0..count {
            let k = rng.gen_range(1..=p.max_strings);
            let strings = random_extensions(&mut rng, &BitString::empty(), p.depth, k);
            let u = random_staged(&mut rng, strings, 0, p.horizon);
            let pi = gen::random_string(&mut rng, pi_len);
            let v_final = u.final_set().difference(&CylinderSet::cylinder(pi));
            let v = random_staged(&mut rng, v_final.strings().iter().cloned(), 0, p.horizon);
            pairs.push(DiffPair { u, v });
        }
        levels.push(pairs);
        bounds.push(h);
    }
    DiffUnionTest::new(levels, bounds).expect("one bound per level")
}
