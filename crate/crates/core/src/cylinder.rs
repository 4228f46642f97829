//! Clopen subsets of Cantor space as canonical antichains of cylinders.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;

use crate::bits::BitString;
use crate::dyadic::Dyadic;
use crate::error::Error;

/// A finite union of cylinders `[σ]` in canonical form.
///
/// The antichain is the set of maximal cylinders contained in the set: no
/// element is a prefix of another and no two siblings `σ0`, `σ1` are both
/// present. Canonical form is unique, so `==` is set equality.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct CylinderSet {
    strings: BTreeSet<BitString>,
}

impl CylinderSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The whole space, `{Λ}`.
    pub fn full() -> Self {
        Self {
            strings: BTreeSet::from([BitString::empty()]),
        }
    }

    pub fn cylinder(sigma: BitString) -> Self {
        Self {
            strings: BTreeSet::from([sigma]),
        }
    }

    /// Canonical form of the open set generated by `strings`.
    pub fn normalize<I>(strings: I) -> Self
    where
        I: IntoIterator<Item = BitString>,
    {
        let mut sorted: Vec<BitString> = strings.into_iter().collect();
        sorted.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        sorted.dedup();

        let mut set: BTreeSet<BitString> = BTreeSet::new();
        for s in sorted {
            if !has_prefix_in(&set, &s) {
                set.insert(s);
            }
        }

        let mut stack: Vec<BitString> = set.iter().cloned().collect();
        while let Some(s) = stack.pop() {
            if !set.contains(&s) {
                continue;
            }
            let Some(sib) = s.sibling() else { continue };
            if set.contains(&sib) {
                set.remove(&s);
                set.remove(&sib);
                let parent = s.parent().expect("non-empty string has a parent");
                set.insert(parent.clone());
                stack.push(parent);
            }
        }
        Self { strings: set }
    }

    pub fn strings(&self) -> &BTreeSet<BitString> {
        &self.strings
    }

    pub fn iter(&self) -> impl Iterator<Item = &BitString> {
        self.strings.iter()
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.strings.len() == 1 && self.strings.contains(&BitString::empty())
    }

    pub fn max_len(&self) -> usize {
        self.strings.iter().map(BitString::len).max().unwrap_or(0)
    }

    /// Exact Lebesgue measure, `Σ 2^-|σ|`.
    pub fn measure(&self) -> Dyadic {
        let top = self.max_len();
        let mut num = BigInt::from(0);
        for s in &self.strings {
            num += BigInt::from(1) << (top - s.len());
        }
        Dyadic::new(num, top as u32)
    }

    /// `μ(self ∩ [σ])`, summing only the elements that extend `σ`.
    pub fn measure_within(&self, sigma: &BitString) -> Dyadic {
        if self.contains_prefix_of(sigma) {
            return Dyadic::pow2_neg(sigma.len() as u32);
        }
        let inside: Vec<&BitString> = self.extensions_of(sigma).collect();
        let top = inside.iter().map(|s| s.len()).max().unwrap_or(0);
        let mut num = BigInt::from(0);
        for s in inside {
            num += BigInt::from(1) << (top - s.len());
        }
        Dyadic::new(num, top as u32)
    }

    /// `μ(self ∩ [σ]) / μ([σ])`.
    pub fn conditional_measure(&self, sigma: &BitString) -> Dyadic {
        self.measure_within(sigma).mul_pow2(sigma.len() as i64)
    }

    /// True iff some element of the antichain is a prefix of `x`; for a
    /// canonical set this is the same as `[x] ⊆ self`.
    pub fn contains_prefix_of(&self, x: &BitString) -> bool {
        has_prefix_in(&self.strings, x)
    }

    /// `[x] ⊆ self`.
    pub fn covers(&self, x: &BitString) -> bool {
        self.contains_prefix_of(x)
    }

    /// `[x] ∩ self ≠ ∅`.
    pub fn meets(&self, x: &BitString) -> bool {
        self.contains_prefix_of(x) || self.extensions_of(x).next().is_some()
    }

    /// Antichain elements strictly or non-strictly extending `x`.
    fn extensions_of<'a>(&'a self, x: &'a BitString) -> impl Iterator<Item = &'a BitString> + 'a {
        self.strings
            .range(x.clone()..)
            .take_while(move |s| x.is_prefix_of(s))
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::normalize(self.strings.iter().chain(other.strings.iter()).cloned())
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = Vec::new();
        for a in &small.strings {
            if large.contains_prefix_of(a) {
                out.push(a.clone());
            } else {
                out.extend(large.extensions_of(a).cloned());
            }
        }
        Self::normalize(out)
    }

    pub fn difference(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for a in &self.strings {
            subtract_into(a, other, &mut out);
        }
        Self::normalize(out)
    }

    pub fn complement(&self) -> Self {
        Self::full().difference(self)
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.strings.iter().all(|s| other.covers(s))
    }

    pub fn is_disjoint_from(&self, other: &Self) -> bool {
        self.strings.iter().all(|s| !other.meets(s))
    }

    /// `{Z : ηZ ∈ self}` as a canonical set.
    pub fn quotient(&self, eta: &BitString) -> Self {
        if self.contains_prefix_of(eta) {
            return Self::full();
        }
        Self::normalize(self.extensions_of(eta).map(|s| s.suffix_from(eta.len())))
    }

    /// Every string of length `depth` meets the set.
    pub fn is_dense_to(&self, depth: usize) -> bool {
        self.first_undense(&BitString::empty(), depth).is_none()
    }

    /// A string of length `depth` extending `from` whose cylinder misses the set.
    pub fn first_undense(&self, from: &BitString, depth: usize) -> Option<BitString> {
        if self.contains_prefix_of(from) {
            return None;
        }
        if self.extensions_of(from).next().is_none() {
            let mut w = from.clone();
            while w.len() < depth {
                w.push(false);
            }
            return Some(w);
        }
        if from.len() >= depth {
            return None;
        }
        self.first_undense(&from.child(false), depth)
            .or_else(|| self.first_undense(&from.child(true), depth))
    }
}

fn has_prefix_in(set: &BTreeSet<BitString>, x: &BitString) -> bool {
    x.prefixes().any(|p| set.contains(&p))
}

/// Pushes the canonical pieces of `[a] \ b` onto `out`.
fn subtract_into(a: &BitString, b: &CylinderSet, out: &mut Vec<BitString>) {
    if b.contains_prefix_of(a) {
        return;
    }
    if b.extensions_of(a).next().is_none() {
        out.push(a.clone());
        return;
    }
    subtract_into(&a.child(false), b, out);
    subtract_into(&a.child(true), b, out);
}

impl fmt::Display for CylinderSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, s) in self.strings.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for CylinderSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for CylinderSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let inner = s
            .trim()
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(|| Error::Parse(format!("cylinder set {s:?} must be braced")))?;
        if inner.trim().is_empty() {
            return Ok(Self::empty());
        }
        let strings = inner
            .split(',')
            .map(str::parse)
            .collect::<Result<Vec<BitString>, _>>()?;
        Ok(Self::normalize(strings))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bs;

    fn set(items: &[&str]) -> CylinderSet {
        CylinderSet::normalize(items.iter().map(|s| bs(s)))
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(set(&["0", "00"]), set(&["0"]));
        assert_eq!(set(&["0", "1"]), CylinderSet::full());
        let c = set(&["01", "10", "11"]);
        assert_eq!(c.to_string(), "{01,1}");
        assert_eq!(c.measure(), Dyadic::new(3, 2));
    }

    #[test]
    fn deep_sibling_merge_cascades() {
        let c = set(&["000", "001", "01", "1"]);
        assert!(c.is_full());
    }

    #[test]
    fn measure_examples() {
        assert_eq!(CylinderSet::full().measure(), Dyadic::one());
        assert_eq!(CylinderSet::empty().measure(), Dyadic::zero());
        assert_eq!(set(&["00", "01", "1"]).measure(), Dyadic::one());
    }

    #[test]
    fn conditional_measure_examples() {
        assert_eq!(CylinderSet::full().conditional_measure(&bs("0101")), Dyadic::one());
        assert_eq!(CylinderSet::empty().conditional_measure(&bs("0")), Dyadic::zero());
        assert_eq!(set(&["00"]).conditional_measure(&bs("0")), Dyadic::new(1, 1));
    }

    #[test]
    fn boolean_examples() {
        assert!(set(&["0"]).union(&set(&["1"])).is_full());
        assert_eq!(set(&["0"]).intersection(&set(&["00", "11"])), set(&["00"]));
        let d = CylinderSet::full().difference(&set(&["01"]));
        assert_eq!(d.to_string(), "{00,1}");
        assert_eq!(d.measure(), Dyadic::new(3, 2));
    }

    #[test]
    fn contains_prefix_examples() {
        assert!(set(&["01"]).contains_prefix_of(&bs("0110")));
        assert!(!set(&["01"]).contains_prefix_of(&bs("00")));
        assert!(CylinderSet::full().contains_prefix_of(&bs("^")));
    }

    #[test]
    fn text_form() {
        assert_eq!("{}".parse::<CylinderSet>().unwrap(), CylinderSet::empty());
        assert_eq!("{^}".parse::<CylinderSet>().unwrap(), CylinderSet::full());
        assert_eq!("{1,01}".parse::<CylinderSet>().unwrap().to_string(), "{01,1}");
    }

    #[test]
    fn quotient_and_density() {
        let u = set(&["011", "111"]);
        assert_eq!(u.quotient(&bs("0")), set(&["11"]));
        assert_eq!(u.quotient(&bs("1")), set(&["11"]));
        assert!(u.quotient(&bs("0111")).is_full());
        assert!(u.is_dense_to(1));
        assert!(!u.is_dense_to(2));
        assert_eq!(u.first_undense(&BitString::empty(), 2), Some(bs("00")));
    }
}
