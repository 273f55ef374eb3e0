//! Exact values of `s_K(G)`, `D(G)` and `ℓ(G)` by exhaustive search.
//!
//! Multisets are enumerated depth-first in nondecreasing element-index
//! order, so every multiset is visited once and preorder visits same-length
//! multisets lexicographically. A child is explored only while it still
//! avoids every forbidden length; avoidance is inherited by subsequences, so
//! pruning loses nothing. The longest avoider `S` certifies `s_K = |S| + 1`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundParams, TheoremId};
use crate::engine::{self, EngineConfig, ReachTable};
use crate::error::{Error, Result};
use crate::group::AbelianGroup;
use crate::sequence::GSeq;

/// Largest group the exhaustive search accepts.
pub const SEARCH_MAX_ORDER: u64 = 1024;

/// Admissible zero-sum lengths: absolute, or `Kq = {kq : k ∈ K}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthSpec {
    Absolute(BTreeSet<u64>),
    Scaled { multipliers: BTreeSet<u64>, unit: u64 },
}

impl LengthSpec {
    pub fn absolute<I: IntoIterator<Item = u64>>(lengths: I) -> Result<Self> {
        let s = LengthSpec::Absolute(lengths.into_iter().collect());
        s.validate()?;
        Ok(s)
    }

    pub fn scaled<I: IntoIterator<Item = u64>>(multipliers: I, unit: u64) -> Result<Self> {
        let s = LengthSpec::Scaled {
            multipliers: multipliers.into_iter().collect(),
            unit,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let (set, unit) = match self {
            LengthSpec::Absolute(s) => (s, 1),
            LengthSpec::Scaled { multipliers, unit } => (multipliers, *unit),
        };
        if set.is_empty() {
            return Err(Error::InvalidLengths("empty length set".into()));
        }
        if set.contains(&0) || unit == 0 {
            return Err(Error::InvalidLengths("lengths must be at least 1".into()));
        }
        Ok(())
    }

    pub fn lengths(&self) -> BTreeSet<u64> {
        match self {
            LengthSpec::Absolute(s) => s.clone(),
            LengthSpec::Scaled { multipliers, unit } => multipliers.iter().map(|k| k * unit).collect(),
        }
    }
}

impl fmt::Display for LengthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |s: &BTreeSet<u64>| s.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        match self {
            LengthSpec::Absolute(s) => write!(f, "{{{}}}", join(s)),
            LengthSpec::Scaled { multipliers, unit } => write!(f, "{{{}}}·{unit}", join(multipliers)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "s_K")]
    SK,
    #[serde(rename = "davenport")]
    Davenport,
    #[serde(rename = "ell")]
    Ell,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Exact,
    UpperBound,
    LowerBound,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Provenance {
    Search,
    Theorem(String),
    Construction,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Search => f.write_str("search"),
            Provenance::Theorem(id) => write!(f, "theorem:{id}"),
            Provenance::Construction => f.write_str("construction"),
        }
    }
}

impl Serialize for Provenance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Provenance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "search" => Ok(Provenance::Search),
            "construction" => Ok(Provenance::Construction),
            other => other
                .strip_prefix("theorem:")
                .map(|id| Provenance::Theorem(id.to_string()))
                .ok_or_else(|| serde::de::Error::custom(format!("unknown provenance `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantRecord {
    pub group: AbelianGroup,
    pub quantity: Quantity,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lengths: Option<LengthSpec>,
    pub value: u64,
    pub status: Status,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<GSeq>,
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    /// Avoider length at which the search stops; derived from the best
    /// proven bound when absent.
    pub cap: Option<u64>,
    /// Restrict the first term to `0` when every length is a multiple of
    /// `exp(G)` (translation invariance).
    pub normalize_first: bool,
    /// Depth at which subtrees are handed to the thread pool; 0 is sequential.
    pub split_depth: usize,
    pub engine: EngineConfig,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            cap: None,
            normalize_first: false,
            split_depth: 1,
            engine: EngineConfig::default(),
        }
    }
}

/// Lengths a candidate must avoid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Forbidden {
    Lengths(BTreeSet<u64>),
    /// Any nonempty zero-sum subsequence.
    AllPositive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AvoidOutcome {
    /// Longest avoider; lexicographically least among the longest.
    Found { length: u64, witness: GSeq },
    /// An avoider of length `cap` exists.
    CapExceeded { cap: u64, witness: GSeq },
}

/// Result of a capped search that hit its cap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CapHit {
    pub cap: u64,
    /// Source of the cap when it came from a proven bound; an avoider at
    /// such a cap contradicts that bound.
    pub proven_by: Option<String>,
    pub witness: GSeq,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExactError {
    Cap(Box<CapHit>),
    Other(Error),
}

impl From<Error> for ExactError {
    fn from(e: Error) -> Self {
        ExactError::Other(e)
    }
}

impl fmt::Display for ExactError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactError::Cap(hit) => match &hit.proven_by {
                Some(src) => write!(
                    f,
                    "avoider of length {} found at a cap proven by {src}: {}",
                    hit.cap, hit.witness
                ),
                None => write!(f, "search cap {} reached", hit.cap),
            },
            ExactError::Other(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ExactError {}

struct Searcher<'a> {
    group: &'a AbelianGroup,
    order: usize,
    /// Translation by each element; `None` for zero.
    trans: &'a [Option<Vec<u32>>],
    forbidden: &'a Forbidden,
    cap: usize,
    normalize: bool,
    stop: &'a AtomicBool,
}

#[derive(Default)]
struct SubtreeResult {
    best_len: usize,
    best: Vec<usize>,
    cap_hit: Option<Vec<usize>>,
}

impl Searcher<'_> {
    fn violates(&self, t: &ReachTable) -> bool {
        let len = t.max_len();
        match self.forbidden {
            Forbidden::AllPositive => (1..=len).any(|i| t.zero_at(i)),
            Forbidden::Lengths(set) => set.range(..=len as u64).any(|&i| t.zero_at(i as usize)),
        }
    }

    fn child_range(&self, depth: usize, last: usize) -> std::ops::Range<usize> {
        if depth == 0 && self.normalize {
            0..1
        } else {
            last..self.order
        }
    }

    fn extend(&self, parent: &ReachTable, child: &mut ReachTable, e: usize) {
        child.copy_from(parent);
        child.add_block(self.trans[e].as_deref(), 1);
    }

    /// DFS below `path` (an avoider) whose table is `tables[path.len()]`.
    fn dfs(&self, path: &mut Vec<usize>, tables: &mut [ReachTable], out: &mut SubtreeResult) {
        let depth = path.len();
        if depth > out.best_len {
            out.best_len = depth;
            out.best = path.clone();
        }
        if depth == self.cap {
            out.cap_hit = Some(path.clone());
            self.stop.store(true, Ordering::Relaxed);
            return;
        }
        let last = path.last().copied().unwrap_or(0);
        for e in self.child_range(depth, last) {
            if self.stop.load(Ordering::Relaxed) {
                return;
            }
            let (lo, hi) = tables.split_at_mut(depth + 1);
            self.extend(&lo[depth], &mut hi[0], e);
            if self.violates(&hi[0]) {
                continue;
            }
            path.push(e);
            self.dfs(path, tables, out);
            path.pop();
            if out.cap_hit.is_some() {
                return;
            }
        }
    }

    fn tables(&self) -> Vec<ReachTable> {
        (0..=self.cap).map(|_| ReachTable::new(self.group, self.cap)).collect()
    }

    /// Avoiders of length exactly `split` in lexicographic order, plus the
    /// best avoider shorter than `split`.
    fn prefixes(&self, split: usize) -> (Vec<Vec<usize>>, SubtreeResult) {
        let mut tables = self.tables();
        let mut out = Vec::new();
        let mut shallow = SubtreeResult::default();
        let mut path = Vec::new();
        self.collect(&mut path, &mut tables, split, &mut out, &mut shallow);
        (out, shallow)
    }

    fn collect(
        &self,
        path: &mut Vec<usize>,
        tables: &mut [ReachTable],
        split: usize,
        out: &mut Vec<Vec<usize>>,
        shallow: &mut SubtreeResult,
    ) {
        let depth = path.len();
        if depth == split {
            out.push(path.clone());
            return;
        }
        if depth > shallow.best_len {
            shallow.best_len = depth;
            shallow.best = path.clone();
        }
        if depth == self.cap {
            shallow.cap_hit = Some(path.clone());
            return;
        }
        let last = path.last().copied().unwrap_or(0);
        for e in self.child_range(depth, last) {
            let (lo, hi) = tables.split_at_mut(depth + 1);
            self.extend(&lo[depth], &mut hi[0], e);
            if self.violates(&hi[0]) {
                continue;
            }
            path.push(e);
            self.collect(path, tables, split, out, shallow);
            path.pop();
        }
    }

    fn run_from(&self, prefix: &[usize]) -> SubtreeResult {
        let mut tables = self.tables();
        for (i, &e) in prefix.iter().enumerate() {
            let (lo, hi) = tables.split_at_mut(i + 1);
            self.extend(&lo[i], &mut hi[0], e);
        }
        let mut out = SubtreeResult::default();
        let mut path = prefix.to_vec();
        self.dfs(&mut path, &mut tables, &mut out);
        out
    }
}

/// Longest multiset over `g` with no zero-sum subsequence of a forbidden
/// length, capped at `cap`.
pub fn search_avoider(
    g: &AbelianGroup,
    forbidden: &Forbidden,
    cap: u64,
    opts: &SearchOptions,
) -> Result<AvoidOutcome> {
    if cap == 0 {
        return Err(Error::InvalidParam("cap must be at least 1".into()));
    }
    if g.order() > SEARCH_MAX_ORDER {
        return Err(Error::InvalidParam(format!(
            "exhaustive search supports groups of order ≤ {SEARCH_MAX_ORDER}, got {}",
            g.order()
        )));
    }
    let order = g.order() as usize;
    // each node folds one element into a table of at most `cap` rows
    let per_node = (cap + 1).saturating_mul(g.order());
    if per_node > opts.engine.max_cells {
        return Err(Error::ResourceCap {
            needed: per_node,
            cap: opts.engine.max_cells,
        });
    }
    let trans: Vec<Option<Vec<u32>>> = (0..order)
        .map(|h| (h != 0).then(|| g.translation(h)))
        .collect();
    let normalize = opts.normalize_first
        && match forbidden {
            Forbidden::Lengths(set) => set.iter().all(|&l| l % g.exponent() == 0),
            Forbidden::AllPositive => false,
        };
    let stop = AtomicBool::new(false);
    let searcher = Searcher {
        group: g,
        order,
        trans: &trans,
        forbidden,
        cap: cap as usize,
        normalize,
        stop: &stop,
    };

    let result = if opts.split_depth == 0 {
        searcher.run_from(&[])
    } else {
        let (prefixes, shallow) = searcher.prefixes(opts.split_depth.min(cap as usize));
        if shallow.cap_hit.is_some() {
            shallow
        } else {
            let subtrees: Vec<SubtreeResult> = prefixes
                .par_iter()
                .map(|p| searcher.run_from(p))
                .collect();
            let mut best = shallow;
            for sub in subtrees {
                if sub.cap_hit.is_some() && best.cap_hit.is_none() {
                    best.cap_hit = sub.cap_hit.clone();
                }
                if sub.best_len > best.best_len {
                    best.best_len = sub.best_len;
                    best.best = sub.best;
                }
            }
            best
        }
    };

    if let Some(path) = result.cap_hit {
        return Ok(AvoidOutcome::CapExceeded {
            cap,
            witness: GSeq::from_indices(g, path),
        });
    }
    Ok(AvoidOutcome::Found {
        length: result.best_len as u64,
        witness: GSeq::from_indices(g, result.best),
    })
}

/// Default cap for `s_K`: the best proven upper bound when one applies,
/// otherwise the conjectured value plus 8.
pub fn default_cap(g: &AbelianGroup, lengths: &BTreeSet<u64>) -> (u64, Option<String>) {
    if let Some((v, why)) = bounds::best_upper_for_set(g, lengths) {
        return (v, Some(why));
    }
    let n = g.exponent();
    let multiples: Vec<u64> = lengths.iter().copied().filter(|l| l % n == 0).collect();
    let max_len = lengths.iter().max().copied().unwrap_or(0);
    let fallback = match (g.pgroup_profile(), multiples.first()) {
        (Some(prof), Some(&l)) => l + prof.davenport - 1,
        _ => max_len + g.order(),
    };
    (fallback + 8, None)
}

/// Longest avoider of `lengths`.
pub fn max_avoiding_length(
    g: &AbelianGroup,
    lengths: &LengthSpec,
    cap: u64,
    opts: &SearchOptions,
) -> Result<AvoidOutcome> {
    lengths.validate()?;
    search_avoider(g, &Forbidden::Lengths(lengths.lengths()), cap, opts)
}

/// `s_K(G)` by exhaustive search.
pub fn exact_s(
    g: &AbelianGroup,
    lengths: &LengthSpec,
    opts: &SearchOptions,
) -> std::result::Result<InvariantRecord, ExactError> {
    lengths.validate()?;
    let (cap, proven_by) = match opts.cap {
        Some(c) => (c, None),
        None => default_cap(g, &lengths.lengths()),
    };
    match max_avoiding_length(g, lengths, cap, opts)? {
        AvoidOutcome::Found { length, witness } => Ok(InvariantRecord {
            group: g.clone(),
            quantity: Quantity::SK,
            lengths: Some(lengths.clone()),
            value: length + 1,
            status: Status::Exact,
            provenance: Provenance::Search,
            witness: Some(witness),
        }),
        AvoidOutcome::CapExceeded { cap, witness } => Err(ExactError::Cap(Box::new(CapHit {
            cap,
            proven_by,
            witness,
        }))),
    }
}

/// `D(G)` by exhaustive search over zero-sum-free sequences.
pub fn exact_davenport(
    g: &AbelianGroup,
    opts: &SearchOptions,
) -> std::result::Result<InvariantRecord, ExactError> {
    let (cap, proven_by) = match (opts.cap, g.pgroup_profile()) {
        (Some(c), _) => (c, None),
        (None, Some(prof)) => (prof.davenport, Some("olson".to_string())),
        // prefix sums of any |G| terms repeat or vanish
        (None, None) => (g.order(), Some("prefix_sums".to_string())),
    };
    let opts = SearchOptions {
        normalize_first: false,
        ..opts.clone()
    };
    match search_avoider(g, &Forbidden::AllPositive, cap, &opts)? {
        AvoidOutcome::Found { length, witness } => Ok(InvariantRecord {
            group: g.clone(),
            quantity: Quantity::Davenport,
            lengths: None,
            value: length + 1,
            status: Status::Exact,
            provenance: Provenance::Search,
            witness: Some(witness),
        }),
        AvoidOutcome::CapExceeded { cap, witness } => Err(ExactError::Cap(Box::new(CapHit {
            cap,
            proven_by,
            witness,
        }))),
    }
}

/// Per-`k` values behind a threshold scan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub k: u64,
    pub length: u64,
    pub exact: u64,
    pub conjectured: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdScan {
    pub record: InvariantRecord,
    pub rows: Vec<ThresholdRow>,
    pub records: Vec<InvariantRecord>,
}

/// Scans `s_{kq}` for `k = 1..=k_max` and reports the smallest `ℓ` with
/// `s_{kq} = kq + D − 1` on `[ℓ, k_max]`. The value is exact when a theorem
/// guarantees equality beyond `k_max`, otherwise a lower bound on `ℓ(G)`.
pub fn exact_threshold_ell(
    g: &AbelianGroup,
    k_max: u64,
    opts: &SearchOptions,
) -> std::result::Result<ThresholdScan, ExactError> {
    let prof = *g.require_pgroup()?;
    if k_max == 0 {
        return Err(Error::InvalidParam("k_max must be at least 1".into()).into());
    }
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for k in 1..=k_max {
        let len = k * prof.q;
        let rec = exact_s(g, &LengthSpec::absolute([len])?, opts)?;
        rows.push(ThresholdRow {
            k,
            length: len,
            exact: rec.value,
            conjectured: len + prof.davenport - 1,
        });
        records.push(rec);
    }
    let record = threshold_record(g, &rows);
    Ok(ThresholdScan {
        record,
        rows,
        records,
    })
}

/// Summarises exact rows for `k = 1..=k_max` (in order) into an `ℓ(G)`
/// record.
pub fn threshold_record(g: &AbelianGroup, rows: &[ThresholdRow]) -> InvariantRecord {
    let k_max = rows.len() as u64;
    debug_assert!(rows.iter().enumerate().all(|(i, r)| r.k == i as u64 + 1));
    let mut ell = k_max + 1;
    for row in rows.iter().rev() {
        if row.exact == row.conjectured {
            ell = row.k;
        } else {
            break;
        }
    }
    let beyond = if ell <= k_max { equality_beyond(g, k_max) } else { None };
    let (status, provenance) = match beyond {
        Some(id) => (Status::Exact, Provenance::Theorem(id.to_string())),
        None => (Status::LowerBound, Provenance::Search),
    };
    InvariantRecord {
        group: g.clone(),
        quantity: Quantity::Ell,
        lengths: None,
        value: ell,
        status,
        provenance,
        witness: None,
    }
}

/// A statement forcing `s_{kq} = kq + D − 1` for every `k > k_max`.
fn equality_beyond(g: &AbelianGroup, k_max: u64) -> Option<TheoremId> {
    let prof = g.pgroup_profile()?;
    if (k_max + 1) * prof.q >= g.order() {
        return Some(TheoremId::GaoEquality);
    }
    let lb = bounds::evaluate_bound(TheoremId::Lbound2, g, &BoundParams::default()).ok()?;
    (lb.applicable && k_max + 1 >= prof.p + prof.dim_d).then_some(TheoremId::Lbound2)
}

/// `0^{kq−1} · Π e_j^{n_j − 1}`: a sequence of length `kq + D(G) − 2` with no
/// zero-sum subsequence of length `kq`, certifying `s_{kq}(G) ≥ kq + D(G) − 1`.
pub fn extremal_witness_lower(g: &AbelianGroup, k: u64) -> Result<GSeq> {
    let prof = *g.require_pgroup()?;
    if k == 0 {
        return Err(Error::InvalidParam("k must be at least 1".into()));
    }
    let target = k * prof.q;
    let mut s = GSeq::empty(g);
    s.push(g.zero(), target - 1)?;
    for (j, &n) in g.factors().iter().enumerate() {
        s.push(g.generator(j), n - 1)?;
    }
    debug_assert_eq!(s.len(), target + prof.davenport - 2);
    let lens = engine::zero_sum_lengths(&s, &EngineConfig::default())?;
    assert!(
        !lens.contains(&target),
        "extremal construction has a zero-sum subsequence of length {target}"
    );
    Ok(s)
}

/// Lower-bound record backed by [`extremal_witness_lower`].
pub fn lower_bound_record(g: &AbelianGroup, k: u64) -> Result<InvariantRecord> {
    let w = extremal_witness_lower(g, k)?;
    let q = g.exponent();
    Ok(InvariantRecord {
        group: g.clone(),
        quantity: Quantity::SK,
        lengths: Some(LengthSpec::absolute([k * q])?),
        value: w.len() + 1,
        status: Status::LowerBound,
        provenance: Provenance::Construction,
        witness: Some(w),
    })
}

/// Re-verifies a record's witness through the engine.
pub fn verify_record(rec: &InvariantRecord) -> Result<bool> {
    let Some(w) = &rec.witness else {
        return Ok(true);
    };
    if w.group() != &rec.group {
        return Ok(false);
    }
    let lens = engine::zero_sum_lengths(w, &EngineConfig::default())?;
    Ok(match rec.quantity {
        Quantity::SK => {
            let forbidden = rec.lengths.as_ref().map(LengthSpec::lengths).unwrap_or_default();
            let avoids = lens.is_disjoint(&forbidden);
            match rec.status {
                Status::Exact | Status::LowerBound => avoids && w.len() + 1 == rec.value,
                Status::UpperBound => avoids,
            }
        }
        Quantity::Davenport => lens.len() == 1 && w.len() + 1 == rec.value,
        Quantity::Ell => true,
    })
}
