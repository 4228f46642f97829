//! Scenario files: named staged objects plus a list of experiments, in TOML.
//!
//! Every object table carries a `name`. Objects are either written out
//! explicitly or produced by a seeded `generate` table. References between
//! objects are by name and are resolved in declaration order.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::bits::BitString;
use crate::coding::{self, SchemeParams, W2RScheme};
use crate::demuth::{self, DemuthTest, DiffPair, DiffUnionTest, RandomTestParams, VersionedOpenSet};
use crate::error::{Error, Result};
use crate::gen::{self, EnumeratorParams, FunctionalParams, TreeParams};
use crate::staged::{Axiom, Enumerator, Pi01Tree, Stage, StagedOpenSet, TuringFunctional};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    description: Option<String>,
    #[serde(default)]
    enumerator: Vec<RawEnumerator>,
    #[serde(default)]
    functional: Vec<RawFunctional>,
    #[serde(default)]
    tree: Vec<RawTree>,
    #[serde(default)]
    family: Vec<RawFamily>,
    #[serde(default)]
    scheme: Vec<RawScheme>,
    #[serde(default)]
    demuth_test: Vec<RawDemuth>,
    #[serde(default)]
    diffunion_test: Vec<RawDiffUnion>,
    #[serde(default)]
    experiment: Vec<Experiment>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    stage: Stage,
    strings: Vec<BitString>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnumerator {
    name: String,
    horizon: Option<Stage>,
    entries: Option<Vec<RawEntry>>,
    /// Shorthand: everything enumerated at stage 0.
    strings: Option<Vec<BitString>>,
    generate: Option<EnumeratorParams>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAxiom {
    stage: Stage,
    oracle: BitString,
    output: BitString,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFunctional {
    name: String,
    horizon: Option<Stage>,
    axioms: Option<Vec<RawAxiom>>,
    generate: Option<FunctionalParams>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTree {
    name: String,
    depth: Option<usize>,
    /// Name of the enumerator of removed strings; none means nothing is removed.
    removals: Option<String>,
    horizon: Option<Stage>,
    generate: Option<TreeParams>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    name: String,
    /// Enumerator names for `U_0, U_1, …`.
    levels: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScheme {
    name: String,
    base: Option<String>,
    families: Option<Vec<String>>,
    star: Option<Vec<u64>>,
    generate: Option<SchemeParams>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVersion {
    stage: Stage,
    set: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDemuthLevel {
    bound: u64,
    #[serde(default)]
    versions: Vec<RawVersion>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDemuth {
    name: String,
    levels: Option<Vec<RawDemuthLevel>>,
    generate: Option<RandomTestParams>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPair {
    u: String,
    v: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDiffLevel {
    bound: u64,
    #[serde(default)]
    pairs: Vec<RawPair>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDiffUnion {
    name: String,
    levels: Option<Vec<RawDiffLevel>>,
    generate: Option<RandomTestParams>,
}

/// One experiment: a kind, its parameters, and a seed.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub name: String,
    pub kind: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: toml::Table,
}

impl Experiment {
    pub fn new(name: &str, kind: &str, seed: u64, params: toml::Table) -> Self {
        Self {
            name: name.to_string(),
            kind: kind.to_string(),
            seed,
            params,
        }
    }

    /// Parameters decoded into the kind's parameter struct.
    pub fn params<T: for<'de> Deserialize<'de>>(&self) -> Result<T> {
        self.params
            .clone()
            .try_into()
            .map_err(|e| Error::Config(format!("experiment '{}': {e}", self.name)))
    }
}

/// A resolved scenario.
#[derive(Clone, Debug, Default)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub enumerators: BTreeMap<String, Enumerator>,
    pub functionals: BTreeMap<String, TuringFunctional>,
    pub trees: BTreeMap<String, Pi01Tree>,
    pub families: BTreeMap<String, Vec<StagedOpenSet>>,
    pub schemes: BTreeMap<String, W2RScheme>,
    pub demuth_tests: BTreeMap<String, DemuthTest>,
    pub diffunion_tests: BTreeMap<String, DiffUnionTest>,
    pub experiments: Vec<Experiment>,
}

fn insert<T>(map: &mut BTreeMap<String, T>, what: &str, name: &str, value: T) -> Result<()> {
    if map.insert(name.to_string(), value).is_some() {
        return Err(Error::Config(format!("duplicate {what} '{name}'")));
    }
    Ok(())
}

fn exactly_one(what: &str, name: &str, present: &[bool]) -> Result<()> {
    if present.iter().filter(|&&p| p).count() != 1 {
        return Err(Error::Config(format!(
            "{what} '{name}' needs exactly one way of being defined"
        )));
    }
    Ok(())
}

fn lookup<'a, T>(map: &'a BTreeMap<String, T>, what: &str, name: &str) -> Result<&'a T> {
    map.get(name)
        .ok_or_else(|| Error::UnknownName(format!("{what} '{name}'")))
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::resolve(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut s = Self::parse(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if s.name.is_empty() {
            s.name = path
                .file_stem()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(s)
    }

    fn resolve(raw: RawScenario) -> Result<Self> {
        let mut s = Scenario {
            name: raw.name.unwrap_or_default(),
            description: raw.description.unwrap_or_default(),
            ..Default::default()
        };
        for e in raw.enumerator {
            exactly_one(
                "enumerator",
                &e.name,
                &[e.entries.is_some(), e.strings.is_some(), e.generate.is_some()],
            )?;
            let value = if let Some(p) = &e.generate {
                gen::enumerator(p)
            } else if let Some(strings) = e.strings {
                Enumerator::immediate(strings, e.horizon.unwrap_or(0))
            } else {
                let entries: Vec<(Stage, Vec<BitString>)> = e
                    .entries
                    .unwrap_or_default()
                    .into_iter()
                    .map(|r| (r.stage, r.strings))
                    .collect();
                let horizon = e
                    .horizon
                    .unwrap_or_else(|| entries.iter().map(|(st, _)| *st).max().unwrap_or(0));
                Enumerator::new(entries, horizon)
                    .map_err(|err| Error::Config(format!("enumerator '{}': {err}", e.name)))?
            };
            insert(&mut s.enumerators, "enumerator", &e.name, value)?;
        }
        for f in raw.functional {
            exactly_one("functional", &f.name, &[f.axioms.is_some(), f.generate.is_some()])?;
            let value = if let Some(p) = &f.generate {
                gen::functional(p)
            } else {
                let axioms: Vec<Axiom> = f
                    .axioms
                    .unwrap_or_default()
                    .into_iter()
                    .map(|a| Axiom {
                        stage: a.stage,
                        oracle: a.oracle,
                        output: a.output,
                    })
                    .collect();
                let horizon = f
                    .horizon
                    .unwrap_or_else(|| axioms.iter().map(|a| a.stage).max().unwrap_or(0));
                TuringFunctional::new(axioms, horizon)
                    .map_err(|err| Error::Config(format!("functional '{}': {err}", f.name)))?
            };
            insert(&mut s.functionals, "functional", &f.name, value)?;
        }
        for t in raw.tree {
            let value = if let Some(p) = &t.generate {
                if t.removals.is_some() {
                    return Err(Error::Config(format!(
                        "tree '{}' cannot both list removals and generate them",
                        t.name
                    )));
                }
                let generated = gen::tree(p);
                match t.depth {
                    Some(d) => Pi01Tree::new(d, generated.removals().clone())?,
                    None => generated,
                }
            } else {
                let depth = t
                    .depth
                    .ok_or_else(|| Error::Config(format!("tree '{}' needs a depth", t.name)))?;
                match &t.removals {
                    Some(r) => {
                        let e = lookup(&s.enumerators, "enumerator", r)?.clone();
                        Pi01Tree::new(depth, e)
                            .map_err(|err| Error::Config(format!("tree '{}': {err}", t.name)))?
                    }
                    None => Pi01Tree::full(depth, t.horizon.unwrap_or(0)),
                }
            };
            insert(&mut s.trees, "tree", &t.name, value)?;
        }
        for f in raw.family {
            let levels = f
                .levels
                .iter()
                .map(|n| lookup(&s.enumerators, "enumerator", n).map(|e| StagedOpenSet::new(e.clone())))
                .collect::<Result<Vec<_>>>()?;
            insert(&mut s.families, "family", &f.name, levels)?;
        }
        for sc in raw.scheme {
            let value = if let Some(p) = &sc.generate {
                coding::random_scheme(p)
            } else {
                let base_name = sc
                    .base
                    .as_deref()
                    .ok_or_else(|| Error::Config(format!("scheme '{}' needs a base tree", sc.name)))?;
                let base = lookup(&s.trees, "tree", base_name)?.clone();
                let families = sc
                    .families
                    .unwrap_or_default()
                    .iter()
                    .map(|n| lookup(&s.families, "family", n).cloned())
                    .collect::<Result<Vec<_>>>()?;
                let star = sc
                    .star
                    .unwrap_or_else(|| (0..families.len() as u64).collect());
                W2RScheme::new(base, families, star)
                    .map_err(|err| Error::Config(format!("scheme '{}': {err}", sc.name)))?
            };
            insert(&mut s.schemes, "scheme", &sc.name, value)?;
        }
        for d in raw.demuth_test {
            exactly_one("demuth_test", &d.name, &[d.levels.is_some(), d.generate.is_some()])?;
            let value = if let Some(p) = &d.generate {
                demuth::random_demuth_test(p)
            } else {
                let mut levels = Vec::new();
                let mut bounds = Vec::new();
                for l in d.levels.unwrap_or_default() {
                    let versions = l
                        .versions
                        .iter()
                        .map(|v| {
                            lookup(&s.enumerators, "enumerator", &v.set)
                                .map(|e| (v.stage, StagedOpenSet::new(e.clone())))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    levels.push(
                        VersionedOpenSet::new(versions)
                            .map_err(|err| Error::Config(format!("demuth_test '{}': {err}", d.name)))?,
                    );
                    bounds.push(l.bound);
                }
                DemuthTest::new(levels, bounds)?
            };
            insert(&mut s.demuth_tests, "demuth_test", &d.name, value)?;
        }
        for d in raw.diffunion_test {
            exactly_one("diffunion_test", &d.name, &[d.levels.is_some(), d.generate.is_some()])?;
            let value = if let Some(p) = &d.generate {
                demuth::random_diffunion_test(p)
            } else {
                let mut levels = Vec::new();
                let mut bounds = Vec::new();
                for l in d.levels.unwrap_or_default() {
                    let pairs = l
                        .pairs
                        .iter()
                        .map(|p| {
                            let u = StagedOpenSet::new(lookup(&s.enumerators, "enumerator", &p.u)?.clone());
                            let v = match &p.v {
                                Some(v) => StagedOpenSet::new(lookup(&s.enumerators, "enumerator", v)?.clone()),
                                None => StagedOpenSet::empty(u.horizon()),
                            };
                            Ok(DiffPair { u, v })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    levels.push(pairs);
                    bounds.push(l.bound);
                }
                DiffUnionTest::new(levels, bounds)?
            };
            insert(&mut s.diffunion_tests, "diffunion_test", &d.name, value)?;
        }
        let mut seen = std::collections::BTreeSet::new();
        for e in &raw.experiment {
            if !seen.insert(e.name.clone()) {
                return Err(Error::Config(format!("duplicate experiment '{}'", e.name)));
            }
        }
        s.experiments = raw.experiment;
        Ok(s)
    }

    pub fn enumerator(&self, name: &str) -> Result<&Enumerator> {
        lookup(&self.enumerators, "enumerator", name)
    }

    pub fn functional(&self, name: &str) -> Result<&TuringFunctional> {
        lookup(&self.functionals, "functional", name)
    }

    pub fn tree(&self, name: &str) -> Result<&Pi01Tree> {
        lookup(&self.trees, "tree", name)
    }

    pub fn scheme(&self, name: &str) -> Result<&W2RScheme> {
        lookup(&self.schemes, "scheme", name)
    }

    pub fn demuth_test(&self, name: &str) -> Result<&DemuthTest> {
        lookup(&self.demuth_tests, "demuth_test", name)
    }

    pub fn diffunion_test(&self, name: &str) -> Result<&DiffUnionTest> {
        lookup(&self.diffunion_tests, "diffunion_test", name)
    }

    /// Rebuilds every tree with a new depth.
    pub fn override_depth(&mut self, depth: usize) -> Result<()> {
        for (name, t) in self.trees.iter_mut() {
            *t = Pi01Tree::new(depth, t.removals().clone())
                .map_err(|err| Error::Config(format!("tree '{name}': {err}")))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_scenario_parses() {
        let s = Scenario::parse("").unwrap();
        assert!(s.experiments.is_empty());
    }

    #[test]
    fn objects_resolve_by_name() {
        let s = Scenario::parse(
            r#"
            name = "demo"
            [[enumerator]]
            name = "w"
            entries = [{ stage = 0, strings = ["01"] }, { stage = 3, strings = ["1"] }]
            [[enumerator]]
            name = "g"
            generate = { seed = 1, count = 4, max_len = 3, horizon = 5 }
            [[tree]]
            name = "t"
            depth = 4
            removals = "w"
            [[functional]]
            name = "phi"
            axioms = [{ stage = 1, oracle = "0", output = "11" }]
            [[experiment]]
            name = "e"
            kind = "fireworks_run"
            params = { adversaries = ["w"] }
            "#,
        )
        .unwrap();
        assert_eq!(s.name, "demo");
        assert_eq!(s.enumerator("w").unwrap().horizon(), 3);
        assert_eq!(s.tree("t").unwrap().final_snapshot().removed.to_string(), "{01,1}");
        assert_eq!(s.functional("phi").unwrap().horizon(), 1);
        assert_eq!(s.experiments[0].seed, 0);
    }

    #[test]
    fn errors_name_the_problem() {
        let e = Scenario::parse("[[tree]]\nname = \"t\"\ndepth = 3\nremovals = \"nope\"\n").unwrap_err();
        assert_eq!(e, Error::UnknownName("enumerator 'nope'".into()));
        let e = Scenario::parse("[[enumerator]]\nname = 1\n").unwrap_err();
        assert!(matches!(&e, Error::Parse(m) if m.contains("line 2")), "{e}");
        let e = Scenario::parse("[[enumerator]]\nname = \"a\"\nstrings = [\"2\"]\n").unwrap_err();
        assert!(matches!(e, Error::Parse(_)));
    }
}
