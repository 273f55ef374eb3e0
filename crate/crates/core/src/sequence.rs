//! Sequences over a group, stored as multisets.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{AbelianGroup, GroupElement};

/// A finite multiset of group elements. Term order carries no meaning.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GSeq {
    group: AbelianGroup,
    counts: BTreeMap<GroupElement, u64>,
}

/// On-disk layout of a sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceFile {
    pub group: Vec<u64>,
    pub elements: Vec<SequenceEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceEntry {
    pub coords: Vec<u64>,
    pub mult: u64,
}

impl GSeq {
    pub fn empty(group: &AbelianGroup) -> Self {
        GSeq {
            group: group.clone(),
            counts: BTreeMap::new(),
        }
    }

    /// Collects terms, validating each against the group.
    pub fn from_elements<I>(group: &AbelianGroup, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = GroupElement>,
    {
        let mut s = GSeq::empty(group);
        for g in terms {
            s.push(g, 1)?;
        }
        Ok(s)
    }

    /// Convenience constructor from `(coords, mult)` pairs.
    pub fn from_pairs(group: &AbelianGroup, pairs: &[(&[u64], u64)]) -> Result<Self> {
        let mut s = GSeq::empty(group);
        for (coords, mult) in pairs {
            s.push(group.element(coords.to_vec())?, *mult)?;
        }
        Ok(s)
    }

    /// Builds a sequence from element indices of `group`.
    pub fn from_indices<I: IntoIterator<Item = usize>>(group: &AbelianGroup, idx: I) -> Self {
        let mut s = GSeq::empty(group);
        for i in idx {
            *s.counts.entry(group.element_at(i)).or_insert(0) += 1;
        }
        s
    }

    pub fn push(&mut self, g: GroupElement, mult: u64) -> Result<()> {
        self.group.validate(&g)?;
        if mult > 0 {
            *self.counts.entry(g).or_insert(0) += mult;
        }
        Ok(())
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn len(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `v_g(S)`.
    pub fn multiplicity(&self, g: &GroupElement) -> u64 {
        self.counts.get(g).copied().unwrap_or(0)
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    /// `(element, multiplicity)` in canonical lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&GroupElement, u64)> {
        self.counts.iter().map(|(g, &m)| (g, m))
    }

    /// Terms expanded with repetition, canonical order.
    pub fn terms(&self) -> Vec<GroupElement> {
        self.iter()
            .flat_map(|(g, m)| std::iter::repeat_n(g.clone(), m as usize))
            .collect()
    }

    /// `(element index, multiplicity)` in canonical order.
    pub fn index_counts(&self) -> Vec<(usize, u64)> {
        self.iter()
            .map(|(g, m)| (self.group.index_of(g), m))
            .collect()
    }

    /// `σ(S)`; the empty sequence sums to zero.
    pub fn sigma(&self) -> GroupElement {
        let mut acc = vec![0u128; self.group.rank()];
        for (g, m) in self.iter() {
            for ((a, &c), &n) in acc.iter_mut().zip(g.coords()).zip(self.group.factors()) {
                *a = (*a + c as u128 * m as u128) % n as u128;
            }
        }
        self.group
            .element(acc.into_iter().map(|a| a as u64).collect())
            .expect("reduced coordinates")
    }

    pub fn is_zero_sum(&self) -> bool {
        self.sigma().is_zero()
    }

    /// `T | S`.
    pub fn divides(&self, other: &GSeq) -> bool {
        self.group == other.group && self.iter().all(|(g, m)| other.multiplicity(g) >= m)
    }

    fn same_group(&self, other: &GSeq) -> Result<()> {
        if self.group != other.group {
            return Err(Error::GroupMismatch(
                self.group.to_string(),
                other.group.to_string(),
            ));
        }
        Ok(())
    }

    /// `S·T`.
    pub fn concat(&self, other: &GSeq) -> Result<GSeq> {
        self.same_group(other)?;
        let mut out = self.clone();
        for (g, m) in other.iter() {
            *out.counts.entry(g.clone()).or_insert(0) += m;
        }
        Ok(out)
    }

    /// `S·T^{-1}`; requires `T | S`.
    pub fn remove(&self, other: &GSeq) -> Result<GSeq> {
        self.same_group(other)?;
        if !other.divides(self) {
            return Err(Error::NotSubsequence);
        }
        let mut out = self.clone();
        for (g, m) in other.iter() {
            let slot = out.counts.get_mut(g).expect("checked by divides");
            *slot -= m;
            if *slot == 0 {
                out.counts.remove(g);
            }
        }
        Ok(out)
    }

    /// First `n` terms in canonical order.
    pub fn prefix(&self, n: u64) -> GSeq {
        let mut out = GSeq::empty(&self.group);
        let mut left = n;
        for (g, m) in self.iter() {
            if left == 0 {
                break;
            }
            let take = m.min(left);
            out.counts.insert(g.clone(), take);
            left -= take;
        }
        out
    }

    /// Image under a map into another group.
    pub fn map_into<F>(&self, target: &AbelianGroup, f: F) -> Result<GSeq>
    where
        F: Fn(&GroupElement) -> Result<GroupElement>,
    {
        let mut out = GSeq::empty(target);
        for (g, m) in self.iter() {
            out.push(f(g)?, m)?;
        }
        Ok(out)
    }

    pub fn to_file(&self) -> SequenceFile {
        SequenceFile {
            group: self.group.factors().to_vec(),
            elements: self
                .iter()
                .map(|(g, m)| SequenceEntry {
                    coords: g.coords().to_vec(),
                    mult: m,
                })
                .collect(),
        }
    }

    /// Validates a decoded file. When `expected` is given the file's group
    /// must match it.
    pub fn from_file(file: &SequenceFile, expected: Option<&AbelianGroup>) -> Result<GSeq> {
        Self::decode(file, AbelianGroup::new(file.group.clone())?, expected)
    }

    fn decode(file: &SequenceFile, group: AbelianGroup, expected: Option<&AbelianGroup>) -> Result<GSeq> {
        if let Some(exp) = expected {
            if exp != &group {
                return Err(Error::GroupMismatch(exp.to_string(), group.to_string()));
            }
        }
        let mut out = GSeq::empty(&group);
        for entry in &file.elements {
            if entry.mult == 0 {
                return Err(Error::SequenceFormat(format!(
                    "entry {:?} has multiplicity 0",
                    entry.coords
                )));
            }
            let g = group.element(entry.coords.clone())?;
            if out.counts.contains_key(&g) {
                return Err(Error::SequenceFormat(format!("duplicate entry {g}")));
            }
            out.counts.insert(g, entry.mult);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("plain data serializes")
    }

    pub fn from_json(text: &str, expected: Option<&AbelianGroup>) -> Result<GSeq> {
        let file: SequenceFile =
            serde_json::from_str(text).map_err(|e| Error::SequenceFormat(e.to_string()))?;
        GSeq::from_file(&file, expected)
    }
}

impl Serialize for GSeq {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for GSeq {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        // embedded sequences may live over groups with trivial factors (e.g. qG)
        let file = SequenceFile::deserialize(d)?;
        let group = AbelianGroup::with_trivial_factors(file.group.clone()).map_err(serde::de::Error::custom)?;
        GSeq::decode(&file, group, None).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for GSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "∅");
        }
        let mut first = true;
        for (g, m) in self.iter() {
            if !first {
                write!(f, "·")?;
            }
            first = false;
            write!(f, "{g}")?;
            if m > 1 {
                write!(f, "^{m}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_group;

    #[test]
    fn sigma_examples() {
        let c3 = parse_group("3").unwrap();
        let s = GSeq::from_pairs(&c3, &[(&[1], 3)]).unwrap();
        assert!(s.sigma().is_zero());

        let c33 = parse_group("3,3").unwrap();
        assert!(GSeq::empty(&c33).sigma().is_zero());
        let s = GSeq::from_pairs(&c33, &[(&[1, 0], 2), (&[0, 2], 1)]).unwrap();
        assert_eq!(s.sigma().coords(), &[2, 2]);
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn combine_examples() {
        let c3 = parse_group("3").unwrap();
        let a = GSeq::from_pairs(&c3, &[(&[1], 2)]).unwrap();
        let b = GSeq::from_pairs(&c3, &[(&[1], 1), (&[2], 1)]).unwrap();
        let cat = a.concat(&b).unwrap();
        assert_eq!(cat, GSeq::from_pairs(&c3, &[(&[1], 3), (&[2], 1)]).unwrap());

        let rem = cat.remove(&a).unwrap();
        assert_eq!(rem, b);

        let twos = GSeq::from_pairs(&c3, &[(&[2], 1)]).unwrap();
        assert_eq!(a.remove(&twos), Err(Error::NotSubsequence));
    }

    #[test]
    fn group_mismatch_rejected() {
        let c3 = parse_group("3").unwrap();
        let c5 = parse_group("5").unwrap();
        let a = GSeq::from_pairs(&c3, &[(&[1], 1)]).unwrap();
        let b = GSeq::from_pairs(&c5, &[(&[1], 1)]).unwrap();
        assert!(matches!(a.concat(&b), Err(Error::GroupMismatch(..))));
    }

    #[test]
    fn file_format_is_canonical() {
        let c33 = parse_group("3,3").unwrap();
        let s = GSeq::from_pairs(&c33, &[(&[2, 0], 1), (&[1, 0], 2), (&[0, 2], 1)]).unwrap();
        assert_eq!(
            s.to_json(),
            r#"{"group":[3,3],"elements":[{"coords":[0,2],"mult":1},{"coords":[1,0],"mult":2},{"coords":[2,0],"mult":1}]}"#
        );
        assert_eq!(GSeq::from_json(&s.to_json(), Some(&c33)).unwrap(), s);
    }

    #[test]
    fn file_errors() {
        let c33 = parse_group("3,3").unwrap();
        let range = r#"{"group":[3,3],"elements":[{"coords":[3,0],"mult":1}]}"#;
        assert!(matches!(
            GSeq::from_json(range, None),
            Err(Error::CoordinateRange { .. })
        ));
        let zero = r#"{"group":[3,3],"elements":[{"coords":[1,0],"mult":0}]}"#;
        assert!(matches!(
            GSeq::from_json(zero, None),
            Err(Error::SequenceFormat(_))
        ));
        let neg = r#"{"group":[3,3],"elements":[{"coords":[1,0],"mult":-1}]}"#;
        assert!(matches!(
            GSeq::from_json(neg, None),
            Err(Error::SequenceFormat(_))
        ));
        let other = r#"{"group":[3],"elements":[]}"#;
        assert!(matches!(
            GSeq::from_json(other, Some(&c33)),
            Err(Error::GroupMismatch(..))
        ));
        let dup = r#"{"group":[3],"elements":[{"coords":[1],"mult":1},{"coords":[1],"mult":2}]}"#;
        assert!(matches!(
            GSeq::from_json(dup, None),
            Err(Error::SequenceFormat(_))
        ));
    }

    #[test]
    fn prefix_takes_smallest_terms() {
        let c3 = parse_group("3").unwrap();
        let s = GSeq::from_pairs(&c3, &[(&[0], 2), (&[1], 2), (&[2], 2)]).unwrap();
        assert_eq!(
            s.prefix(3),
            GSeq::from_pairs(&c3, &[(&[0], 2), (&[1], 1)]).unwrap()
        );
        assert_eq!(s.prefix(10), s);
    }
}
