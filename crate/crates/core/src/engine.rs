//! Exact decision of zero-sum subsequence lengths.
//!
//! The core structure is a reachability table indexed by `(length, sum)`:
//! row `t` is a bitset over group elements (by index) marking the sums of
//! subsequences of length `t`. Elements of multiplicity `c` are folded in as
//! binary chunks `1, 2, 4, …, rest`, which represents every count in `0..=c`
//! exactly once as a subset of chunks.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::group::AbelianGroup;
use crate::sequence::GSeq;

pub const DEFAULT_MAX_CELLS: u64 = 1_000_000_000;

/// Largest sequence accepted by [`naive_zero_sum_lengths`].
pub const NAIVE_MAX_LEN: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    /// Ceiling on table cell updates per table build.
    pub max_cells: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            max_cells: DEFAULT_MAX_CELLS,
        }
    }
}

/// Order in which candidate lengths are tried by witness search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LengthOrder {
    #[default]
    Ascending,
    Descending,
}

#[derive(Clone, Debug)]
pub struct ReachTable {
    group: AbelianGroup,
    words: usize,
    capacity: usize,
    len: usize,
    bits: Vec<u64>,
}

/// Binary splitting of a multiplicity.
fn chunks(mut count: u64) -> impl Iterator<Item = u64> {
    let mut step = 1u64;
    std::iter::from_fn(move || {
        if count == 0 {
            return None;
        }
        let take = step.min(count);
        count -= take;
        step <<= 1;
        Some(take)
    })
}

/// Cell updates needed to fold `counts` into an empty table.
pub fn estimated_cells(order: u64, counts: &[(usize, u64)]) -> u64 {
    let mut len = 0u64;
    let mut cells = 0u64;
    for &(_, c) in counts {
        for s in chunks(c) {
            cells = cells.saturating_add((len + 1).saturating_mul(order));
            len += s;
        }
    }
    cells
}

fn check_cap(order: u64, counts: &[(usize, u64)], cfg: &EngineConfig) -> Result<()> {
    let needed = estimated_cells(order, counts);
    if needed > cfg.max_cells {
        return Err(Error::ResourceCap {
            needed,
            cap: cfg.max_cells,
        });
    }
    Ok(())
}

impl ReachTable {
    /// Table of the empty sequence with room for lengths up to `capacity`.
    pub fn new(group: &AbelianGroup, capacity: usize) -> Self {
        let words = (group.order() as usize).div_ceil(64);
        let mut bits = vec![0u64; words * (capacity + 1)];
        bits[0] = 1;
        ReachTable {
            group: group.clone(),
            words,
            capacity,
            len: 0,
            bits,
        }
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    /// Length of the sequence folded in so far.
    pub fn max_len(&self) -> usize {
        self.len
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Some subsequence has sum `element_at(idx)` and length `t`.
    pub fn reachable(&self, idx: usize, t: usize) -> bool {
        if t > self.len {
            return false;
        }
        self.bits[t * self.words + idx / 64] >> (idx % 64) & 1 == 1
    }

    /// Zero is reachable at length `t`.
    pub fn zero_at(&self, t: usize) -> bool {
        t <= self.len && self.bits[t * self.words] & 1 == 1
    }

    pub fn zero_sum_lengths(&self) -> BTreeSet<u64> {
        (0..=self.len)
            .filter(|&t| self.zero_at(t))
            .map(|t| t as u64)
            .collect()
    }

    /// Folds in one block of `size` copies whose total is the element whose
    /// translation table is `trans` (`None` for the zero element).
    pub fn add_block(&mut self, trans: Option<&[u32]>, size: usize) {
        assert!(
            self.len + size <= self.capacity,
            "reach table capacity exceeded"
        );
        let w = self.words;
        for t in (0..=self.len).rev() {
            let (lo, hi) = self.bits.split_at_mut((t + size) * w);
            let src = &lo[t * w..(t + 1) * w];
            let dst = &mut hi[..w];
            match trans {
                None => {
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d |= *s;
                    }
                }
                Some(perm) => {
                    for (wi, &word) in src.iter().enumerate() {
                        let mut x = word;
                        while x != 0 {
                            let i = wi * 64 + x.trailing_zeros() as usize;
                            let j = perm[i] as usize;
                            dst[j / 64] |= 1u64 << (j % 64);
                            x &= x - 1;
                        }
                    }
                }
            }
        }
        self.len += size;
    }

    /// Folds in `count` copies of the element with index `idx`.
    pub fn add_element(&mut self, idx: usize, count: u64) {
        for s in chunks(count) {
            let h = self.group.scale_index(idx, s);
            if h == 0 {
                self.add_block(None, s as usize);
            } else {
                let perm = self.group.translation(h);
                self.add_block(Some(&perm), s as usize);
            }
        }
    }

    /// Overwrites `self` with `other`, reusing the allocation.
    pub fn copy_from(&mut self, other: &ReachTable) {
        debug_assert_eq!(self.words, other.words);
        debug_assert!(other.len <= self.capacity);
        let used = (other.len + 1) * self.words;
        self.bits[..used].copy_from_slice(&other.bits[..used]);
        let stale = (self.len + 1) * self.words;
        if stale > used {
            self.bits[used..stale].fill(0);
        }
        self.len = other.len;
    }
}

/// Exact table for `s`.
pub fn build_reach(s: &GSeq, cfg: &EngineConfig) -> Result<ReachTable> {
    let counts = s.index_counts();
    check_cap(s.group().order(), &counts, cfg)?;
    let mut table = ReachTable::new(s.group(), s.len() as usize);
    for (idx, c) in counts {
        table.add_element(idx, c);
    }
    Ok(table)
}

/// All `t` such that some `T | S` is zero-sum with `|T| = t`; contains 0.
pub fn zero_sum_lengths(s: &GSeq, cfg: &EngineConfig) -> Result<BTreeSet<u64>> {
    Ok(build_reach(s, cfg)?.zero_sum_lengths())
}

/// Brute-force oracle over all `2^|S|` index subsets.
pub fn naive_zero_sum_lengths(s: &GSeq) -> Result<BTreeSet<u64>> {
    let g = s.group();
    let terms: Vec<usize> = s.terms().iter().map(|x| g.index_of(x)).collect();
    let m = terms.len();
    if m > NAIVE_MAX_LEN {
        return Err(Error::NaiveTooLong {
            len: m,
            max: NAIVE_MAX_LEN,
        });
    }
    let negs: Vec<usize> = terms.iter().map(|&i| g.neg_index(i)).collect();
    let mut out = BTreeSet::from([0u64]);
    // Gray code walk: one term toggles per step
    let mut sum = 0usize;
    let mut mask = 0u32;
    for step in 1u32..(1u32 << m) {
        let bit = step.trailing_zeros() as usize;
        mask ^= 1 << bit;
        sum = if mask >> bit & 1 == 1 {
            g.add_index(sum, terms[bit])
        } else {
            g.add_index(sum, negs[bit])
        };
        if sum == 0 {
            out.insert(mask.count_ones() as u64);
        }
    }
    Ok(out)
}

/// Suffix tables `T_i` (elements `i..r`) recomputed from sparse checkpoints.
struct SuffixTables<'a> {
    group: &'a AbelianGroup,
    counts: &'a [(usize, u64)],
    capacity: usize,
    block: usize,
    checkpoints: Vec<Option<ReachTable>>,
    cached_block: Option<usize>,
    cached: Vec<ReachTable>,
}

impl<'a> SuffixTables<'a> {
    fn new(group: &'a AbelianGroup, counts: &'a [(usize, u64)], capacity: usize) -> Self {
        let r = counts.len();
        let block = ((r as f64).sqrt().ceil() as usize).max(1);
        let mut checkpoints: Vec<Option<ReachTable>> = vec![None; r + 1];
        let mut cur = ReachTable::new(group, capacity);
        checkpoints[r] = Some(cur.clone());
        for i in (0..r).rev() {
            cur.add_element(counts[i].0, counts[i].1);
            if i % block == 0 {
                checkpoints[i] = Some(cur.clone());
            }
        }
        SuffixTables {
            group,
            counts,
            capacity,
            block,
            checkpoints,
            cached_block: None,
            cached: Vec::new(),
        }
    }

    /// `T_i` for `i` in `0..=r`.
    fn get(&mut self, i: usize) -> &ReachTable {
        if self.checkpoints[i].is_some() {
            return self.checkpoints[i].as_ref().expect("checked");
        }
        let b = i / self.block;
        if self.cached_block != Some(b) {
            let start = b * self.block;
            let end = (start + self.block).min(self.counts.len());
            let mut cur = self.checkpoints[end]
                .clone()
                .unwrap_or_else(|| ReachTable::new(self.group, self.capacity));
            let mut tables = vec![ReachTable::new(self.group, 0); end - start];
            for j in (start + 1..end).rev() {
                cur.add_element(self.counts[j].0, self.counts[j].1);
                tables[j - start] = cur.clone();
            }
            self.cached = tables;
            self.cached_block = Some(b);
        }
        &self.cached[i - b * self.block]
    }
}

/// Zero-sum witness with length in `lengths`, smallest length first.
pub fn find_zero_sum(
    s: &GSeq,
    lengths: &BTreeSet<u64>,
    cfg: &EngineConfig,
) -> Result<Option<GSeq>> {
    find_zero_sum_ordered(s, lengths, LengthOrder::Ascending, cfg)
}

/// Zero-sum witness `T | S` with `|T|` in `lengths`, trying lengths in
/// `order`. Among witnesses of the chosen length the one that is
/// lexicographically least in canonical term order is returned (as many
/// copies of the smallest element as possible, then the next, …). Lengths
/// above `|S|` are never attained and are skipped.
pub fn find_zero_sum_ordered(
    s: &GSeq,
    lengths: &BTreeSet<u64>,
    order: LengthOrder,
    cfg: &EngineConfig,
) -> Result<Option<GSeq>> {
    find_with_sum(s, 0, lengths, order, cfg)
}

/// Witness `T | S` with `σ(T) = element_at(target)` and `|T|` in `lengths`.
pub fn find_with_sum(
    s: &GSeq,
    target: usize,
    lengths: &BTreeSet<u64>,
    order: LengthOrder,
    cfg: &EngineConfig,
) -> Result<Option<GSeq>> {
    let g = s.group();
    let counts = s.index_counts();
    // each suffix build costs at most one full build; recomputation doubles it
    let needed = estimated_cells(g.order(), &counts).saturating_mul(2);
    if needed > cfg.max_cells {
        return Err(Error::ResourceCap {
            needed,
            cap: cfg.max_cells,
        });
    }
    let n = s.len();
    let candidates: Vec<u64> = match order {
        LengthOrder::Ascending => lengths.iter().copied().filter(|&t| t <= n).collect(),
        LengthOrder::Descending => lengths.iter().rev().copied().filter(|&t| t <= n).collect(),
    };
    if candidates.is_empty() {
        return Ok(None);
    }
    let mut tables = SuffixTables::new(g, &counts, n as usize);
    let Some(&t) = candidates
        .iter()
        .find(|&&t| tables.get(0).reachable(target, t as usize))
    else {
        return Ok(None);
    };

    let mut rem_sum = target;
    let mut rem_len = t;
    let mut picked: Vec<(usize, u64)> = Vec::new();
    for (i, &(idx, c)) in counts.iter().enumerate() {
        let mut chosen = None;
        for j in (0..=c.min(rem_len)).rev() {
            let take = g.scale_index(idx, j);
            let rest = g.add_index(rem_sum, g.neg_index(take));
            if tables.get(i + 1).reachable(rest, (rem_len - j) as usize) {
                chosen = Some((j, rest));
                break;
            }
        }
        let (j, rest) = chosen.expect("suffix table guarantees a feasible count");
        if j > 0 {
            picked.push((idx, j));
        }
        rem_sum = rest;
        rem_len -= j;
    }
    debug_assert_eq!((rem_sum, rem_len), (0, 0));

    let mut w = GSeq::empty(g);
    for (idx, j) in picked {
        w.push(g.element_at(idx), j)?;
    }
    debug_assert!(w.divides(s));
    debug_assert_eq!(g.index_of(&w.sigma()), target);
    debug_assert!(lengths.contains(&w.len()));
    Ok(Some(w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_group;

    fn seq(spec: &str, pairs: &[(&[u64], u64)]) -> GSeq {
        GSeq::from_pairs(&parse_group(spec).unwrap(), pairs).unwrap()
    }

    fn set(v: &[u64]) -> BTreeSet<u64> {
        v.iter().copied().collect()
    }

    fn cfg() -> EngineConfig {
        EngineConfig::default()
    }

    #[test]
    fn chunking_covers_counts() {
        for c in 0..40u64 {
            let parts: Vec<u64> = chunks(c).collect();
            assert_eq!(parts.iter().sum::<u64>(), c);
            let mut reach = BTreeSet::from([0u64]);
            for &p in &parts {
                let next: Vec<u64> = reach.iter().map(|&x| x + p).collect();
                reach.extend(next);
            }
            assert_eq!(reach, (0..=c).collect());
        }
    }

    #[test]
    fn build_reach_examples() {
        let s = seq("3", &[(&[1], 3)]);
        assert_eq!(zero_sum_lengths(&s, &cfg()).unwrap(), set(&[0, 3]));
        let s = seq("3", &[(&[1], 2), (&[2], 1)]);
        assert_eq!(zero_sum_lengths(&s, &cfg()).unwrap(), set(&[0, 2]));
        assert_eq!(naive_zero_sum_lengths(&s).unwrap(), set(&[0, 2]));
        let s = seq("3,3", &[(&[0, 0], 1)]);
        assert_eq!(zero_sum_lengths(&s, &cfg()).unwrap(), set(&[0, 1]));
    }

    #[test]
    fn zero_sum_lengths_examples() {
        let s = seq("3,3", &[(&[1, 0], 1), (&[2, 0], 1), (&[0, 1], 1), (&[0, 2], 1)]);
        assert_eq!(zero_sum_lengths(&s, &cfg()).unwrap(), set(&[0, 2, 4]));
        assert_eq!(naive_zero_sum_lengths(&s).unwrap(), set(&[0, 2, 4]));
        let e = GSeq::empty(&parse_group("3,3").unwrap());
        assert_eq!(zero_sum_lengths(&e, &cfg()).unwrap(), set(&[0]));
        let grp = parse_group("4,6").unwrap();
        let x = grp.element(vec![2, 3]).unwrap();
        let ord = grp.element_order(&x);
        let mut s = GSeq::empty(&grp);
        s.push(x, ord).unwrap();
        assert!(zero_sum_lengths(&s, &cfg()).unwrap().contains(&ord));
    }

    #[test]
    fn naive_examples() {
        assert_eq!(
            naive_zero_sum_lengths(&seq("3", &[(&[1], 3)])).unwrap(),
            set(&[0, 3])
        );
        assert_eq!(
            naive_zero_sum_lengths(&seq("2,2", &[(&[1, 1], 2)])).unwrap(),
            set(&[0, 2])
        );
        let long = seq("2", &[(&[1], 21)]);
        assert_eq!(
            naive_zero_sum_lengths(&long),
            Err(Error::NaiveTooLong { len: 21, max: 20 })
        );
    }

    #[test]
    fn find_examples() {
        let s = seq("3", &[(&[1], 2), (&[2], 1)]);
        let w = find_zero_sum(&s, &set(&[2]), &cfg()).unwrap().unwrap();
        assert_eq!(w, seq("3", &[(&[1], 1), (&[2], 1)]));

        let s = seq("3", &[(&[1], 2)]);
        assert_eq!(find_zero_sum(&s, &set(&[3]), &cfg()).unwrap(), None);

        let s = seq("2", &[(&[0], 5)]);
        let w = find_zero_sum(&s, &set(&[4]), &cfg()).unwrap().unwrap();
        assert_eq!(w, seq("2", &[(&[0], 4)]));
    }

    #[test]
    fn find_respects_length_order() {
        let s = seq("3", &[(&[1], 6)]);
        let up = find_zero_sum_ordered(&s, &set(&[3, 6]), LengthOrder::Ascending, &cfg())
            .unwrap()
            .unwrap();
        assert_eq!(up.len(), 3);
        let down = find_zero_sum_ordered(&s, &set(&[3, 6]), LengthOrder::Descending, &cfg())
            .unwrap()
            .unwrap();
        assert_eq!(down.len(), 6);
    }

    #[test]
    fn witness_is_lexicographically_least() {
        // zero-sum pairs in C_5: {0,0}, {1,4}, {2,3}; prefer the most zeros
        let s = seq("5", &[(&[0], 2), (&[1], 1), (&[2], 1), (&[3], 1), (&[4], 1)]);
        let w = find_zero_sum(&s, &set(&[2]), &cfg()).unwrap().unwrap();
        assert_eq!(w, seq("5", &[(&[0], 2)]));
        let w = find_zero_sum(&s, &set(&[3]), &cfg()).unwrap().unwrap();
        assert_eq!(w, seq("5", &[(&[0], 1), (&[1], 1), (&[4], 1)]));
    }

    #[test]
    fn witness_with_many_distinct_elements_uses_checkpoints() {
        let grp = parse_group("7,7").unwrap();
        let s = GSeq::from_indices(&grp, 0..49);
        let lens = zero_sum_lengths(&s, &cfg()).unwrap();
        for t in 0..=49u64 {
            let w = find_zero_sum(&s, &set(&[t]), &cfg()).unwrap();
            assert_eq!(w.is_some(), lens.contains(&t));
            if let Some(w) = w {
                assert!(w.divides(&s) && w.is_zero_sum() && w.len() == t);
            }
        }
    }

    #[test]
    fn resource_cap_is_enforced() {
        let s = seq("3,3", &[(&[1, 0], 4), (&[0, 1], 4)]);
        let tiny = EngineConfig { max_cells: 10 };
        assert!(matches!(
            build_reach(&s, &tiny),
            Err(Error::ResourceCap { .. })
        ));
        assert!(matches!(
            find_zero_sum(&s, &set(&[3]), &tiny),
            Err(Error::ResourceCap { .. })
        ));
    }

    #[test]
    fn copy_from_clears_stale_rows() {
        let grp = parse_group("5").unwrap();
        let mut a = ReachTable::new(&grp, 8);
        a.add_element(1, 5);
        let b = ReachTable::new(&grp, 8);
        a.copy_from(&b);
        assert_eq!(a.zero_sum_lengths(), set(&[0]));
        assert!(!a.reachable(1, 1));
    }
}
