//! Kučera–Gács coding inside a Π⁰₁ class, the layered W2R encoding, and the
//! erring decoder Γ.
//!
//! A bit is coded by moving from the current codeword `τ` to the leftmost (`0`)
//! or rightmost (`1`) surviving extension of length `h(τ, P)`, the least `h`
//! with `μ([τ] ∩ P) > 2^{-h}`.
//!
//! Payloads go through the self-delimiting codec before bit coding; the
//! `_raw` variants code the given bits directly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{self, BitString};
use crate::cylinder::CylinderSet;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::gen;
use crate::staged::{Enumerator, Pi01Tree, Stage, StagedOpenSet, TreeSnapshot};

/// Decoding failed after reading `consumed` bits of the input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Undecodable {
    pub consumed: usize,
}

impl fmt::Display for Undecodable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "undecodable after {} bits", self.consumed)
    }
}

/// The least `h` with `μ([σ] ∩ P) > 2^{-h}`. At that length no single
/// cylinder holds all of `[σ] ∩ P`, so `σ` has two surviving extensions.
fn coding_length(snap: &TreeSnapshot, sigma: &BitString) -> Result<usize> {
    if !snap.alive(sigma) {
        return Err(Error::NoSurvivors(sigma.clone()));
    }
    let m = &Dyadic::pow2_neg(sigma.len() as u32) - &snap.removed.measure_within(sigma);
    let mut h = sigma.len() + 1;
    while Dyadic::pow2_neg(h as u32) >= m {
        h += 1;
    }
    if h > snap.depth {
        return Err(Error::TreeTooShallow(sigma.clone(), snap.depth));
    }
    Ok(h)
}

/// Leftmost (`bit = false`) or rightmost surviving length-`l` extension of an
/// alive `σ`. Every alive node of a clopen complement has an alive child.
fn extreme(snap: &TreeSnapshot, sigma: &BitString, l: usize, bit: bool) -> BitString {
    let mut t = sigma.clone();
    while t.len() < l {
        let preferred = t.child(bit);
        t = if snap.alive(&preferred) {
            preferred
        } else {
            t.child(!bit)
        };
    }
    t
}

pub fn kucera_depth_at(snap: &TreeSnapshot, sigma: &BitString) -> Result<usize> {
    coding_length(snap, sigma)
}

/// The coding length `h(σ, P)` at stage `s`; an error when it exceeds the
/// tree depth.
pub fn kucera_depth(sigma: &BitString, p: &Pi01Tree, stage: Stage) -> Result<usize> {
    kucera_depth_at(&p.at(stage), sigma)
}

fn encode_bits(bits: &BitString, sigma: &BitString, snap: &TreeSnapshot) -> Result<BitString> {
    let mut tau = sigma.clone();
    for b in bits.iter() {
        let l = coding_length(snap, &tau)?;
        tau = extreme(snap, &tau, l, b);
    }
    Ok(tau)
}

/// Codes `bits` directly, one extreme survivor per bit, over the final class.
pub fn kg_encode_raw(bits: &BitString, sigma: &BitString, p: &Pi01Tree) -> Result<BitString> {
    let snap = p.final_snapshot();
    if !snap.alive(sigma) {
        return Err(Error::NoSurvivors(sigma.clone()));
    }
    encode_bits(bits, sigma, &snap)
}

/// `KG(ξ | σ, P)` with the self-delimiting codec.
pub fn kg_encode(xi: &BitString, sigma: &BitString, p: &Pi01Tree) -> Result<BitString> {
    kg_encode_raw(&bits::self_delimit(xi), sigma, p)
}

/// Replays the coding over one snapshot, reading bits from `x`.
struct KgReader<'a> {
    snap: &'a TreeSnapshot,
    x: &'a BitString,
    cur: BitString,
}

impl<'a> KgReader<'a> {
    fn new(snap: &'a TreeSnapshot, x: &'a BitString, sigma: &BitString) -> std::result::Result<Self, Undecodable> {
        if !sigma.is_prefix_of(x) || !snap.alive(sigma) {
            return Err(Undecodable { consumed: 0 });
        }
        Ok(Self {
            snap,
            x,
            cur: sigma.clone(),
        })
    }

    fn fail(&self) -> Undecodable {
        Undecodable {
            consumed: self.cur.len(),
        }
    }

    fn next_bit(&mut self) -> std::result::Result<bool, Undecodable> {
        let l = coding_length(self.snap, &self.cur).map_err(|_| self.fail())?;
        if self.x.len() < l {
            return Err(self.fail());
        }
        let seg = self.x.prefix(l);
        let b = if seg == extreme(self.snap, &self.cur, l, false) {
            false
        } else if seg == extreme(self.snap, &self.cur, l, true) {
            true
        } else {
            return Err(self.fail());
        };
        self.cur = seg;
        Ok(b)
    }

    fn read_bits(&mut self, count: usize) -> std::result::Result<BitString, Undecodable> {
        let mut out = BitString::empty();
        for _ in 0..count {
            out.push(self.next_bit()?);
        }
        Ok(out)
    }

    fn read_self_delimited(&mut self) -> std::result::Result<BitString, Undecodable> {
        let mut n = 0;
        while self.next_bit()? {
            n += 1;
        }
        self.read_bits(n)
    }

    fn read_pair(&mut self) -> std::result::Result<(u64, BitString), Undecodable> {
        let index = self.read_self_delimited()?;
        if index.len() > 64 {
            return Err(self.fail());
        }
        let payload = self.read_self_delimited()?;
        Ok((index.to_u64(), payload))
    }

    fn finish_exact(&self) -> std::result::Result<(), Undecodable> {
        if self.cur.len() == self.x.len() {
            Ok(())
        } else {
            Err(self.fail())
        }
    }
}

/// Inverse of [`kg_encode_raw`] for `count` bits over the stage-`s` class.
pub fn kg_decode_raw(
    tau: &BitString,
    sigma: &BitString,
    p: &Pi01Tree,
    stage: Stage,
    count: usize,
) -> std::result::Result<BitString, Undecodable> {
    let snap = p.at(stage);
    let mut r = KgReader::new(&snap, tau, sigma)?;
    let bits = r.read_bits(count)?;
    r.finish_exact()?;
    Ok(bits)
}

/// Inverse of [`kg_encode`] over the stage-`s` class; `τ` must be exactly one
/// codeword.
pub fn kg_decode(
    tau: &BitString,
    sigma: &BitString,
    p: &Pi01Tree,
    stage: Stage,
) -> std::result::Result<BitString, Undecodable> {
    let snap = p.at(stage);
    let mut r = KgReader::new(&snap, tau, sigma)?;
    let xi = r.read_self_delimited()?;
    r.finish_exact()?;
    Ok(xi)
}

/// Decodes one codeword from the start of `x` (above `σ`), returning the
/// payload and the codeword itself.
pub fn kg_decode_prefix(
    x: &BitString,
    sigma: &BitString,
    p: &Pi01Tree,
    stage: Stage,
) -> std::result::Result<(BitString, BitString), Undecodable> {
    let snap = p.at(stage);
    let mut r = KgReader::new(&snap, x, sigma)?;
    let xi = r.read_self_delimited()?;
    Ok((xi, r.cur))
}

/// A value of the lower semi-computable `g`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum G {
    Finite(usize),
    Infinity,
}

impl fmt::Display for G {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            G::Finite(k) => write!(f, "{k}"),
            G::Infinity => f.write_str("inf"),
        }
    }
}

/// A base class with nested open families `U^e_0 ⊇ U^e_1 ⊇ …` and the indices
/// `e*_1 < e*_2 < …` used for successive payloads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct W2RScheme {
    base: Pi01Tree,
    families: Vec<Vec<StagedOpenSet>>,
    star: Vec<u64>,
}

impl W2RScheme {
    pub fn new(base: Pi01Tree, families: Vec<Vec<StagedOpenSet>>, star: Vec<u64>) -> Result<Self> {
        for w in star.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Config(format!(
                    "star indices must increase strictly ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        if let Some(&e) = star.iter().find(|&&e| e as usize >= families.len()) {
            return Err(Error::Config(format!(
                "star index {e} names one of only {} families",
                families.len()
            )));
        }
        for (e, fam) in families.iter().enumerate() {
            for (k, w) in fam.windows(2).enumerate() {
                let stages: BTreeSet<Stage> = w[0]
                    .change_stages()
                    .into_iter()
                    .chain(w[1].change_stages())
                    .chain([w[0].horizon().max(w[1].horizon())])
                    .collect();
                for s in stages {
                    if !w[1].at(s).is_subset_of(&w[0].at(s)) {
                        return Err(Error::Config(format!(
                            "family {e}: level {} is not inside level {k} at stage {s}",
                            k + 1
                        )));
                    }
                }
            }
        }
        Ok(Self {
            base,
            families,
            star,
        })
    }

    pub fn base(&self) -> &Pi01Tree {
        &self.base
    }

    pub fn families(&self) -> &[Vec<StagedOpenSet>] {
        &self.families
    }

    pub fn star(&self) -> &[u64] {
        &self.star
    }

    /// Last stage at which anything in the scheme changes.
    pub fn horizon(&self) -> Stage {
        self.families
            .iter()
            .flatten()
            .map(StagedOpenSet::horizon)
            .chain([self.base.horizon()])
            .max()
            .unwrap_or(0)
    }

    /// Stage-`t` approximation of `inf{k : [σ] ∩ C^e_k ∩ P ≠ ∅}`.
    pub fn g_lsc(&self, e: u64, sigma: &BitString, p: &Pi01Tree, t: Stage) -> G {
        let Some(family) = self.families.get(e as usize) else {
            return G::Infinity;
        };
        let removed = p.at(t).removed;
        for (k, u) in family.iter().enumerate() {
            if !removed.union(&u.at(t)).covers(sigma) {
                return G::Finite(k);
            }
        }
        G::Infinity
    }

    pub fn g_final(&self, e: u64, sigma: &BitString, p: &Pi01Tree) -> G {
        self.g_lsc(e, sigma, p, self.horizon())
    }
}

/// `E(ξ_1, …, ξ_k)` with its intermediate objects.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct W2REncoding {
    pub codeword: BitString,
    /// `τ_1, τ_1τ_2, …`: the codeword after each payload.
    pub prefixes: Vec<BitString>,
    /// `P_0, …, P_k`.
    pub classes: Vec<Pi01Tree>,
    /// Final `g(e*_n, τ_n, P_{n-1})` for each `n`.
    pub g: Vec<usize>,
}

pub fn w2r_encode(payloads: &[BitString], scheme: &W2RScheme) -> Result<W2REncoding> {
    if payloads.len() > scheme.star.len() {
        return Err(Error::Config(format!(
            "{} payloads but only {} star indices",
            payloads.len(),
            scheme.star.len()
        )));
    }
    let mut tau = BitString::empty();
    let mut classes = vec![scheme.base.clone()];
    let mut prefixes = Vec::new();
    let mut gs = Vec::new();
    for (n, xi) in payloads.iter().enumerate() {
        let e = scheme.star[n];
        let p = classes.last().expect("P_0 is present");
        tau = kg_encode_raw(&bits::encode_pair(e, xi), &tau, p)?;
        let k = match scheme.g_final(e, &tau, p) {
            G::Finite(k) => k,
            G::Infinity => {
                return Err(Error::InfiniteG {
                    family: e,
                    sigma: tau,
                })
            }
        };
        let next = p.intersect_complement(&scheme.families[e as usize][k]);
        prefixes.push(tau.clone());
        gs.push(k);
        classes.push(next);
    }
    Ok(W2REncoding {
        codeword: tau,
        prefixes,
        classes,
        g: gs,
    })
}

/// Least `N` such that every `g(e*_n, τ_n, P_{n-1})[t]` equals its final value
/// for `t ≥ N`.
pub fn stabilization_stage(payloads: &[BitString], scheme: &W2RScheme) -> Result<Stage> {
    let enc = w2r_encode(payloads, scheme)?;
    let horizon = scheme.horizon();
    let mut n_max = 0;
    for (n, tau) in enc.prefixes.iter().enumerate() {
        let e = scheme.star[n];
        let target = G::Finite(enc.g[n]);
        let p = &enc.classes[n];
        let settled = (0..=horizon)
            .find(|&t| scheme.g_lsc(e, tau, p, t) == target)
            .unwrap_or(horizon);
        n_max = n_max.max(settled);
    }
    Ok(n_max)
}

/// Each class `P_n` excludes the chosen level of family `e*_n` (final stage).
pub fn avoids_families(enc: &W2REncoding, scheme: &W2RScheme) -> bool {
    enc.g.iter().enumerate().all(|(n, &k)| {
        let u = scheme.families[scheme.star[n] as usize][k].final_set();
        let removed = enc.classes[n + 1].final_snapshot().removed;
        u.is_subset_of(&removed) && !removed.covers(&enc.codeword)
    })
}

/// What one `t`-sub-procedure found.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubProcedure {
    pub t: Stage,
    /// Decoded `(a_n, ζ_n)` in order.
    pub items: Vec<(u64, BitString)>,
    /// `g(a_n, τ_n, Q_{n-1})[t]` for each decoded item.
    pub g: Vec<G>,
    /// Length of the prefix of `x` consumed.
    pub consumed: usize,
}

impl SubProcedure {
    pub fn zeta(&self) -> BitString {
        self.items
            .iter()
            .fold(BitString::empty(), |acc, (_, z)| acc.concat(z))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct GammaOutput {
    pub output: BTreeMap<usize, bool>,
    pub subprocedures: Vec<SubProcedure>,
}

impl GammaOutput {
    /// The output on `0..len`, if every position there is defined.
    pub fn prefix(&self, len: usize) -> Option<BitString> {
        (0..len)
            .map(|i| self.output.get(&i).copied())
            .collect::<Option<Vec<bool>>>()
            .map(BitString::from_bits)
    }

    /// Output rendered with `?` at undefined positions up to `len`.
    pub fn render(&self, len: usize) -> String {
        (0..len)
            .map(|i| match self.output.get(&i) {
                Some(true) => '1',
                Some(false) => '0',
                None => '?',
            })
            .collect()
    }
}

fn subprocedure(x: &BitString, t: Stage, scheme: &W2RScheme) -> SubProcedure {
    let mut q = scheme.base.clone();
    let mut cur = BitString::empty();
    let mut items = Vec::new();
    let mut gs = Vec::new();
    loop {
        let snap = q.final_snapshot();
        let Ok(mut r) = KgReader::new(&snap, x, &cur) else { break };
        let Ok((a, zeta)) = r.read_pair() else { break };
        if a as usize >= scheme.families.len() {
            break;
        }
        cur = r.cur;
        items.push((a, zeta));
        let g = scheme.g_lsc(a, &cur, &q, t);
        gs.push(g);
        match g {
            G::Finite(k) => q = q.intersect_complement(&scheme.families[a as usize][k]),
            G::Infinity => break,
        }
    }
    SubProcedure {
        t,
        items,
        g: gs,
        consumed: cur.len(),
    }
}

/// Runs the `t`-sub-procedures for `t = 0..=t_max`; a position is set by the
/// first sub-procedure that reaches it.
pub fn gamma_decode(x: &BitString, t_max: Stage, scheme: &W2RScheme) -> GammaOutput {
    let mut out = GammaOutput::default();
    for t in 0..=t_max {
        let sp = subprocedure(x, t, scheme);
        let zeta = sp.zeta();
        if !sp.items.is_empty() && !zeta.is_empty() {
            let last = (t as usize).min(zeta.len() - 1);
            for i in 0..=last {
                out.output.entry(i).or_insert(zeta.bit(i));
            }
        }
        out.subprocedures.push(sp);
    }
    out
}

/// Per-position comparison of `Γ^{E(ξ)}` against `ξ_1…ξ_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Claim1Report {
    pub stabilization: Stage,
    pub t_max: Stage,
    pub expected: BitString,
    pub decoded: String,
    /// Positions where the output is wrong or undefined.
    pub errors: Vec<usize>,
}

impl Claim1Report {
    pub fn confined(&self) -> bool {
        self.errors.iter().all(|&i| i < self.stabilization as usize)
            && self.errors.len() <= self.stabilization as usize
    }

    /// Columns: `position,expected,decoded,correct`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("position,expected,decoded,correct\n");
        for (i, d) in self.decoded.chars().enumerate() {
            let e = if self.expected.bit(i) { '1' } else { '0' };
            out.push_str(&format!("{i},{e},{d},{}\n", d == e));
        }
        out
    }
}

/// Encodes the payloads, decodes the codeword with Γ and records the errors.
/// `t_max` defaults to `max(N, |ξ|)`.
pub fn claim1(payloads: &[BitString], scheme: &W2RScheme, t_max: Option<Stage>) -> Result<Claim1Report> {
    let enc = w2r_encode(payloads, scheme)?;
    let n = stabilization_stage(payloads, scheme)?;
    let expected = payloads
        .iter()
        .fold(BitString::empty(), |acc, xi| acc.concat(xi));
    let t_max = t_max.unwrap_or(n.max(expected.len() as Stage));
    let out = gamma_decode(&enc.codeword, t_max, scheme);
    let errors = (0..expected.len())
        .filter(|&i| out.output.get(&i) != Some(&expected.bit(i)))
        .collect();
    Ok(Claim1Report {
        stabilization: n,
        t_max,
        expected: expected.clone(),
        decoded: out.render(expected.len()),
        errors,
    })
}

/// Chooses `ξ_{k+1}` so that `Γ` of any extension of `E(ξ_1, …, ξ_{k+1})`
/// lands in `u`: zeros up to `N' = max(N, |ξ_1…ξ_k|)`, then a `ζ` with
/// `[ηζ] ⊆ u` for every `η` of length `N'`.
pub fn extend_into_open(payloads: &[BitString], u: &CylinderSet, scheme: &W2RScheme) -> Result<BitString> {
    let n = stabilization_stage(payloads, scheme)? as usize;
    let so_far: usize = payloads.iter().map(BitString::len).sum();
    let shift = n.max(so_far);
    let zeta = common_extension(u, shift)?;
    Ok(BitString::repeat(false, shift - so_far).concat(&zeta))
}

/// Shortest-first `ζ` with `[ηζ] ⊆ u` for all `η` of length `shift`.
pub fn common_extension(u: &CylinderSet, shift: usize) -> Result<BitString> {
    let mut zeta = BitString::empty();
    for eta in BitString::all_of_length(shift) {
        let q = u.quotient(&eta);
        if q.covers(&zeta) {
            continue;
        }
        let next = q
            .iter()
            .filter(|s| zeta.is_prefix_of(s))
            .min_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)))
            .cloned();
        match next {
            Some(rho) => zeta = rho,
            None => return Err(Error::NotDense(eta)),
        }
    }
    Ok(zeta)
}

/// `{X : p occurs in X starting at some position ≤ d}`.
pub fn occurs_by(p: &BitString, d: usize) -> CylinderSet {
    fn walk(w: BitString, p: &BitString, d: usize, out: &mut Vec<BitString>) {
        for b in [false, true] {
            let next = w.child(b);
            if next.len() >= p.len() && next.suffix_from(next.len() - p.len()) == *p {
                out.push(next);
            } else if next.len() < d + p.len() {
                walk(next, p, d, out);
            }
        }
    }
    if p.is_empty() {
        return CylinderSet::full();
    }
    let mut out = Vec::new();
    walk(BitString::empty(), p, d, &mut out);
    CylinderSet::normalize(out)
}

/// One set per non-empty line: a braced cylinder set, or `occurs P by D`.
/// `#` starts a comment.
pub fn parse_dense_opens(text: &str) -> Result<Vec<CylinderSet>> {
    let mut sets = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |m: &str| Error::Parse(format!("line {}: {m}", lineno + 1));
        if line.starts_with('{') {
            sets.push(line.parse().map_err(|e: Error| bad(&e.to_string()))?);
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["occurs", p, "by", d] => {
                let p: BitString = p.parse().map_err(|e: Error| bad(&e.to_string()))?;
                let d: usize = d.parse().map_err(|_| bad("bad position bound"))?;
                sets.push(occurs_by(&p, d));
            }
            _ => return Err(bad("expected `{...}` or `occurs P by D`")),
        }
    }
    Ok(sets)
}

/// Shape of a seeded random W2R scheme.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub seed: u64,
    pub families: usize,
    /// Levels per family; the last level is always empty, so `g` stays finite.
    pub levels: usize,
    pub tree_depth: usize,
    pub removal_depth: usize,
    pub removals: usize,
    pub horizon: Stage,
}

/// Family `e` has `U_0 ⊇ [Λ]` from a random stage, and `U_k ⊇ [π↾(k+1)]` for a
/// random `π`, each enumerated at a random stage into every lower level too.
pub fn random_scheme(p: &SchemeParams) -> W2RScheme {
    let mut rng = gen::rng(p.seed);
    let base = gen::tree(&gen::TreeParams {
        seed: rng.gen(),
        depth: p.removal_depth,
        removals: p.removals,
        min_len: 3,
        floor_log2: 1,
        horizon: p.horizon,
    });
    let base = Pi01Tree::new(p.tree_depth, base.removals().clone()).expect("removals are shallow");
    let mut families = Vec::new();
    for _ in 0..p.families {
        let mut schedules: Vec<BTreeMap<Stage, BTreeSet<BitString>>> = vec![BTreeMap::new(); p.levels];
        let mut put = |top: usize, s: Stage, x: BitString| {
            for sched in schedules.iter_mut().take(top + 1) {
                sched.entry(s).or_default().insert(x.clone());
            }
        };
        if rng.gen_bool(0.6) {
            put(0, rng.gen_range(0..=p.horizon), BitString::empty());
        }
        let pi = gen::random_string(&mut rng, p.levels + 2);
        for k in 1..p.levels.saturating_sub(1) {
            if rng.gen_bool(0.7) {
                put(k, rng.gen_range(0..=p.horizon), pi.prefix(k + 1));
            }
        }
        families.push(
            schedules
                .into_iter()
                .map(|s| StagedOpenSet::new(Enumerator::from_map(s, p.horizon)))
                .collect(),
        );
    }
    let star = (0..p.families as u64).collect();
    W2RScheme::new(base, families, star).expect("generated families are nested")
}
