//! Constructive zero-sum extraction following the proofs of the bounds.
//!
//! Every existence step is realised by an engine search, so each procedure
//! either returns a verified zero-sum subsequence of the promised length or
//! reports which step failed. A failure under satisfied hypotheses is a
//! counterexample candidate and is surfaced, never retried.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::bounds::{mainbound_prime_condition, Hypothesis};
use crate::engine::{self, EngineConfig, LengthOrder};
use crate::error::{Error, Result};
use crate::group::{ceil_div, AbelianGroup, GroupElement, PGroupProfile};
use crate::sequence::GSeq;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Subadditive,
    PqLift,
    #[serde(rename = "two_piece_2d")]
    TwoPiece2d,
    HalfLemma,
    MainTheorem,
    Filtration,
}

/// Strategies for [`extract_proof_guided`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProofStrategy {
    TwoPiece2d { k: u64 },
    HalfLemma { multipliers: BTreeSet<u64> },
    MainTheorem { k: u64 },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multipliers: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub role: String,
    pub sequence: GSeq,
    pub length: u64,
    pub sum: GroupElement,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionPlan {
    pub strategy: Strategy,
    pub params: ExtractionParams,
    pub hypotheses: Vec<Hypothesis>,
    pub input_length: u64,
    /// Admissible lengths of the result.
    pub target_lengths: Vec<u64>,
    pub trace: Vec<TraceEntry>,
    /// Named length sets and scalars chosen along the way.
    pub sets: BTreeMap<String, Vec<u64>>,
    pub values: BTreeMap<String, u64>,
    pub notes: Vec<String>,
    pub result: GSeq,
}

impl ExtractionPlan {
    /// Recomputes `T | S`, `σ(T) = 0` and `|T| ∈ targets` from scratch.
    pub fn verify(&self, input: &GSeq) -> bool {
        self.result.group() == input.group()
            && self.result.divides(input)
            && self.result.sigma().is_zero()
            && self.target_lengths.contains(&self.result.len())
    }
}

struct Builder {
    strategy: Strategy,
    params: ExtractionParams,
    hypotheses: Vec<Hypothesis>,
    trace: Vec<TraceEntry>,
    sets: BTreeMap<String, Vec<u64>>,
    values: BTreeMap<String, u64>,
    notes: Vec<String>,
}

impl Builder {
    fn new(strategy: Strategy, params: ExtractionParams) -> Self {
        Builder {
            strategy,
            params,
            hypotheses: Vec::new(),
            trace: Vec::new(),
            sets: BTreeMap::new(),
            values: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, condition: &str, holds: bool, instantiation: String) -> bool {
        self.hypotheses.push(Hypothesis {
            condition: condition.to_string(),
            holds,
            instantiation,
        });
        holds
    }

    fn require(&self) -> Result<()> {
        let failing: Vec<String> = self
            .hypotheses
            .iter()
            .filter(|h| !h.holds)
            .map(|h| format!("{} ({})", h.condition, h.instantiation))
            .collect();
        if failing.is_empty() {
            Ok(())
        } else {
            Err(Error::Hypothesis(failing.join("; ")))
        }
    }

    fn record(&mut self, role: &str, s: &GSeq) {
        self.trace.push(TraceEntry {
            role: role.to_string(),
            sequence: s.clone(),
            length: s.len(),
            sum: s.sigma(),
        });
    }

    /// Appends a nested plan's trace under `prefix`.
    fn absorb(&mut self, prefix: &str, inner: ExtractionPlan) {
        for mut e in inner.trace {
            e.role = format!("{prefix}/{}", e.role);
            self.trace.push(e);
        }
        for (k, v) in inner.sets {
            self.sets.insert(format!("{prefix}/{k}"), v);
        }
        for (k, v) in inner.values {
            self.values.insert(format!("{prefix}/{k}"), v);
        }
        for n in inner.notes {
            self.notes.push(format!("{prefix}: {n}"));
        }
    }

    fn finish(mut self, input: &GSeq, targets: BTreeSet<u64>, result: GSeq) -> Result<ExtractionPlan> {
        self.record("result", &result);
        let plan = ExtractionPlan {
            strategy: self.strategy,
            params: self.params,
            hypotheses: self.hypotheses,
            input_length: input.len(),
            target_lengths: targets.into_iter().collect(),
            trace: self.trace,
            sets: self.sets,
            values: self.values,
            notes: self.notes,
            result,
        };
        if !plan.verify(input) {
            return Err(Error::PremiseViolation(format!(
                "{:?} produced {} which does not re-verify against the input",
                plan.strategy, plan.result
            )));
        }
        Ok(plan)
    }
}

fn search(s: &GSeq, lengths: &BTreeSet<u64>, order: LengthOrder, cfg: &EngineConfig) -> Result<Option<GSeq>> {
    engine::find_zero_sum_ordered(s, lengths, order, cfg)
}

fn search_or_fail(
    s: &GSeq,
    lengths: &BTreeSet<u64>,
    order: LengthOrder,
    cfg: &EngineConfig,
    what: &str,
) -> Result<GSeq> {
    search(s, lengths, order, cfg)?.ok_or_else(|| {
        Error::PremiseViolation(format!(
            "{what}: no zero-sum subsequence with length in {lengths:?} in {s} (length {})",
            s.len()
        ))
    })
}

fn multiples(q: u64, ks: impl IntoIterator<Item = u64>) -> BTreeSet<u64> {
    ks.into_iter().map(|k| k * q).collect()
}

/// Zero-sum `S_1 S_2` of length `a + b`: first a piece of length `b`, then
/// one of length `a` in the remainder. `premise = (s_a, s_b)` is checked
/// against `|S|` when supplied.
pub fn split_subadditive(
    s: &GSeq,
    a: u64,
    b: u64,
    premise: Option<(u64, u64)>,
    cfg: &EngineConfig,
) -> Result<ExtractionPlan> {
    let mut bld = Builder::new(
        Strategy::Subadditive,
        ExtractionParams {
            a: Some(a),
            b: Some(b),
            ..Default::default()
        },
    );
    bld.check("a ≥ 1 and b ≥ 1", a >= 1 && b >= 1, format!("a = {a}, b = {b}"));
    if let Some((s_a, s_b)) = premise {
        let need = (s_a + b).max(s_b);
        bld.check(
            "|S| ≥ max(s_a + b, s_b)",
            s.len() >= need,
            format!("|S| = {} ≥ max({s_a} + {b}, {s_b}) = {need}", s.len()),
        );
    }
    bld.require()?;
    bld.record("input", s);
    let first = search_or_fail(s, &[b].into(), LengthOrder::Ascending, cfg, "piece of length b")?;
    bld.record("first_piece", &first);
    let rest = s.remove(&first)?;
    bld.record("remainder", &rest);
    let second = search_or_fail(&rest, &[a].into(), LengthOrder::Ascending, cfg, "piece of length a in the remainder")?;
    bld.record("second_piece", &second);
    let result = first.concat(&second)?;
    bld.finish(s, [a + b].into(), result)
}

/// Zero-sum subsequence of length `pq` through the lift `g ↦ (g, 1)` into
/// `G ⊕ C_pq`, where every nonempty zero-sum has length divisible by `pq`.
pub fn extract_pq_lift(s: &GSeq, cfg: &EngineConfig) -> Result<ExtractionPlan> {
    let g = s.group();
    let prof = *g.require_pgroup()?;
    let pq = prof.p * prof.q;
    let need = pq + prof.davenport - 1;
    let mut bld = Builder::new(
        Strategy::PqLift,
        ExtractionParams {
            q: Some(prof.q),
            ..Default::default()
        },
    );
    bld.check("p ≥ d", prof.p >= prof.dim_d, format!("p = {} ≥ d = {}", prof.p, prof.dim_d));
    bld.check(
        "|S| ≥ pq + D(G) − 1",
        s.len() >= need,
        format!("|S| = {} ≥ {pq} + {} − 1 = {need}", s.len(), prof.davenport),
    );
    bld.require()?;
    let head = s.prefix(need);
    bld.record("truncated", &head);

    let lifted_group = g.with_extra_factor(pq)?;
    let lifted = head.map_into(&lifted_group, |x| {
        let mut c = x.coords().to_vec();
        c.push(1);
        lifted_group.element(c)
    })?;
    bld.record("lifted", &lifted);
    debug_assert_eq!(lifted_group.davenport_olson().ok(), Some(need));
    let all: BTreeSet<u64> = (1..=lifted.len()).collect();
    let zero = search_or_fail(&lifted, &all, LengthOrder::Ascending, cfg, "nonempty zero-sum in the lift")?;
    bld.record("lifted_zero_sum", &zero);
    let rank = g.rank();
    let result = zero.map_into(g, |x| g.element(x.coords()[..rank].to_vec()))?;
    if result.len() != pq {
        return Err(Error::PremiseViolation(format!(
            "lifted zero-sum has length {} instead of {pq}",
            result.len()
        )));
    }
    bld.finish(s, [pq].into(), result)
}

/// Input length the cited statement asks for.
pub fn required_length(g: &AbelianGroup, strategy: &ProofStrategy) -> Result<u64> {
    let prof = *g.require_pgroup()?;
    Ok(match strategy {
        ProofStrategy::TwoPiece2d { k } => k * prof.q + 2 * prof.davenport - 2,
        ProofStrategy::HalfLemma { multipliers } => {
            let max_k = *multipliers
                .iter()
                .max()
                .ok_or_else(|| Error::InvalidParam("empty multiplier set".into()))?;
            (2 * max_k + 1).saturating_sub(multipliers.len() as u64) * prof.q + prof.davenport - 1
        }
        ProofStrategy::MainTheorem { k } => main_budget(&prof, *k),
    })
}

/// Input length for [`extract_pq_lift`]: `pq + D(G) − 1`.
pub fn pq_lift_length(g: &AbelianGroup) -> Result<u64> {
    let prof = g.require_pgroup()?;
    Ok(prof.p * prof.q + prof.davenport - 1)
}

pub fn extract_proof_guided(s: &GSeq, strategy: &ProofStrategy, cfg: &EngineConfig) -> Result<ExtractionPlan> {
    match strategy {
        ProofStrategy::TwoPiece2d { k } => two_piece(s, *k, cfg),
        ProofStrategy::HalfLemma { multipliers } => half_lemma(s, multipliers, cfg),
        ProofStrategy::MainTheorem { k } => main_theorem(s, *k, cfg),
    }
}

fn two_piece(s: &GSeq, k: u64, cfg: &EngineConfig) -> Result<ExtractionPlan> {
    let prof = *s.group().require_pgroup()?;
    let PGroupProfile {
        p,
        q,
        davenport: dav,
        dim_d: d,
    } = prof;
    let mut bld = Builder::new(
        Strategy::TwoPiece2d,
        ExtractionParams {
            k: Some(k),
            q: Some(q),
            ..Default::default()
        },
    );
    bld.check(
        "k ∈ [2d − 1, p]",
        k + 1 >= 2 * d && k <= p,
        format!("k = {k}, [2·{d} − 1, {p}]"),
    );
    let need = k * q + 2 * dav - 2;
    bld.check(
        "|S| ≥ kq + 2D(G) − 2",
        s.len() >= need,
        format!("|S| = {} ≥ {need}", s.len()),
    );
    bld.require()?;
    let s0 = s.prefix(need);
    bld.record("input", &s0);
    let target = k * q;

    if d == 1 {
        bld.notes.push("d = 1: the group is cyclic and the length kq is searched directly".into());
        let t = search_or_fail(&s0, &[target].into(), LengthOrder::Ascending, cfg, "cyclic case")?;
        return bld.finish(s, [target].into(), t);
    }

    let second_len = (d - 1) * q + dav - 1;
    let terms = s0.terms();
    let first_len = s0.len() - second_len;
    let part1 = GSeq::from_elements(s0.group(), terms[..first_len as usize].iter().cloned())?;
    let part2 = GSeq::from_elements(s0.group(), terms[first_len as usize..].iter().cloned())?;
    bld.record("first_part", &part1);
    bld.record("second_part", &part2);

    let lens2 = engine::zero_sum_lengths(&part2, cfg)?;
    let found: Vec<u64> = (1..=2 * d - 2).map(|i| i * q).filter(|l| lens2.contains(l)).collect();
    if (found.len() as u64) < d - 1 {
        return Err(Error::PremiseViolation(format!(
            "second part {part2} has only {} zero-sum lengths in [1, 2d − 2]q, expected at least {}",
            found.len(),
            d - 1
        )));
    }
    let mut anchors: Vec<u64> = vec![0];
    anchors.extend(found.iter().take((d - 1) as usize));
    bld.sets.insert("anchor_lengths".into(), anchors.clone());

    let wanted: BTreeSet<u64> = anchors.iter().map(|l| target - l).collect();
    let t1 = search_or_fail(&part1, &wanted, LengthOrder::Ascending, cfg, "first part, lengths kq − anchors")?;
    bld.record("first_piece", &t1);
    let rest = target - t1.len();
    let t2 = if rest == 0 {
        GSeq::empty(s.group())
    } else {
        search_or_fail(&part2, &[rest].into(), LengthOrder::Ascending, cfg, "second part, anchor length")?
    };
    bld.record("second_piece", &t2);
    let result = t1.concat(&t2)?;
    bld.finish(s, [target].into(), result)
}

fn half_lemma(s: &GSeq, ks: &BTreeSet<u64>, cfg: &EngineConfig) -> Result<ExtractionPlan> {
    let prof = *s.group().require_pgroup()?;
    let PGroupProfile {
        p,
        q,
        davenport: dav,
        dim_d: d,
    } = prof;
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::InvalidParam("multipliers must be a nonempty set of positive integers".into()));
    }
    let mut bld = Builder::new(
        Strategy::HalfLemma,
        ExtractionParams {
            multipliers: Some(ks.iter().copied().collect()),
            q: Some(q),
            ..Default::default()
        },
    );
    let max_k = *ks.iter().max().expect("nonempty");
    let size = ks.len() as u64;
    bld.check("2|K| ≥ d", 2 * size >= d, format!("2·{size} ≥ {d}"));
    bld.check(
        "2 max K + |K| ≤ p",
        2 * max_k + size <= p,
        format!("2·{max_k} + {size} = {} ≤ {p}", 2 * max_k + size),
    );
    let need = (2 * max_k + 1 - size) * q + dav - 1;
    bld.check(
        "|S| ≥ (2 max K + 1 − |K|)q + D(G) − 1",
        s.len() >= need,
        format!("|S| = {} ≥ {need}", s.len()),
    );
    bld.require()?;
    let s0 = s.prefix(need);
    bld.record("input", &s0);
    let targets = multiples(q, ks.iter().copied());

    let extended: BTreeSet<u64> = ks.iter().copied().chain((1..=size).map(|i| 2 * max_k + i)).collect();
    bld.sets.insert("extended_multipliers".into(), extended.iter().copied().collect());
    // longest lengths first, so that the complement step is exercised
    let t = search_or_fail(
        &s0,
        &multiples(q, extended.iter().copied()),
        LengthOrder::Descending,
        cfg,
        "extended multiplier set",
    )?;
    bld.record("extended_piece", &t);
    if targets.contains(&t.len()) {
        return bld.finish(s, targets, t);
    }
    let n = t.len() / q;
    bld.values.insert("piece_multiplier".into(), n);
    let mirrored: BTreeSet<u64> = ks.iter().copied().chain(ks.iter().map(|k| n - k)).collect();
    bld.sets.insert("mirrored_multipliers".into(), mirrored.iter().copied().collect());
    let inner = search_or_fail(
        &t,
        &multiples(q, mirrored.iter().copied()),
        LengthOrder::Descending,
        cfg,
        "mirrored multiplier set inside the piece",
    )?;
    bld.record("inner_piece", &inner);
    let result = if targets.contains(&inner.len()) {
        inner
    } else {
        let comp = t.remove(&inner)?;
        bld.notes.push(format!(
            "complement of a length-{} piece inside a length-{} zero-sum",
            inner.len(),
            t.len()
        ));
        comp
    };
    bld.finish(s, targets, result)
}

/// Length budget `(k + 2d − 2)q + 3D(G) − 3`.
fn main_budget(prof: &PGroupProfile, k: u64) -> u64 {
    (k + 2 * prof.dim_d - 2) * prof.q + 3 * prof.davenport - 3
}

fn main_theorem(s: &GSeq, k: u64, cfg: &EngineConfig) -> Result<ExtractionPlan> {
    let prof = *s.group().require_pgroup()?;
    let PGroupProfile {
        p,
        q,
        davenport: dav,
        dim_d: d,
    } = prof;
    let mut bld = Builder::new(
        Strategy::MainTheorem,
        ExtractionParams {
            k: Some(k),
            q: Some(q),
            ..Default::default()
        },
    );
    let (holds, inst) = mainbound_prime_condition(p, q, dav, d);
    bld.check("p ≥ 2d + 3⌈D(G)/(2q)⌉ − 3", holds, inst);
    bld.check("k ≥ d", k >= d, format!("k = {k} ≥ d = {d}"));
    let need = main_budget(&prof, k);
    bld.check(
        "|S| ≥ (k + 2d − 2)q + 3D(G) − 3",
        s.len() >= need,
        format!("|S| = {} ≥ {need}", s.len()),
    );
    bld.require()?;
    let s0 = s.prefix(need);
    bld.record("input", &s0);
    let target = k * q;
    let half_dim = ceil_div(dav, 2 * q);
    bld.values.insert("half_dimension".into(), half_dim);

    if k + 1 >= 2 * d && k <= p {
        bld.notes.push("k ∈ [2d − 1, p]: two-piece argument".into());
        let inner = two_piece(&s0, k, cfg)?;
        let result = inner.result.clone();
        bld.absorb("two_piece", inner);
        return bld.finish(s, [target].into(), result);
    }

    if k > p || k >= 2 * d {
        // k = d + k' with k' ≥ d: a piece of length k'q, then one of length dq
        let rest_k = k - d;
        bld.notes.push(format!("k = {d} + {rest_k}: subadditive step"));
        let first = main_theorem(&s0, rest_k, cfg)?;
        let t1 = first.result.clone();
        bld.absorb("first_step", first);
        let remainder = s0.remove(&t1)?;
        bld.record("remainder", &remainder);
        let second = main_theorem(&remainder, d, cfg)?;
        let t2 = second.result.clone();
        bld.absorb("second_step", second);
        let result = t1.concat(&t2)?;
        return bld.finish(s, [target].into(), result);
    }

    // d ≥ 2 and k ∈ [d, 2d − 2]
    let split_index = k / 2 + half_dim - 1;
    bld.values.insert("split_index".into(), split_index);
    if half_dim == 1 {
        // only the empty anchor is used, so the whole budget goes to the
        // search for length kq
        bld.sets.insert("anchor_lengths".into(), vec![0]);
        bld.notes.push("⌈D/(2q)⌉ = 1: anchor set {0}; the first part is empty".into());
        let t2 = search_or_fail(&s0, &[target].into(), LengthOrder::Ascending, cfg, "length kq")?;
        bld.record("second_part", &s0);
        bld.record("second_piece", &t2);
        return bld.finish(s, [target].into(), t2);
    }

    let first_len = (2 * split_index + 1 - half_dim) * q + dav - 1;
    let second_len = (2 * k + 3 * half_dim - 3 - 2 * split_index) * q + dav - 1;
    if first_len + second_len > s0.len() {
        return Err(Error::PremiseViolation(format!(
            "parts of lengths {first_len} + {second_len} exceed |S| = {}",
            s0.len()
        )));
    }
    let terms = s0.terms();
    let part1 = GSeq::from_elements(s0.group(), terms[..first_len as usize].iter().cloned())?;
    let part2 = GSeq::from_elements(s0.group(), terms[first_len as usize..].iter().cloned())?;
    bld.record("first_part", &part1);
    bld.record("second_part", &part2);

    let lens1 = engine::zero_sum_lengths(&part1, cfg)?;
    let anchors: Vec<u64> = if split_index > 2 * half_dim - 2 {
        let lo = split_index + 2 - 2 * half_dim;
        let found: Vec<u64> = (lo..=split_index).filter(|i| lens1.contains(&(i * q))).collect();
        if (found.len() as u64) < half_dim {
            return Err(Error::PremiseViolation(format!(
                "first part has {} zero-sum multipliers in [{lo}, {split_index}], expected {half_dim}",
                found.len()
            )));
        }
        found[..half_dim as usize].to_vec()
    } else if split_index == 2 * half_dim - 2 {
        let found: Vec<u64> = (1..=split_index).filter(|i| lens1.contains(&(i * q))).collect();
        if (found.len() as u64) < half_dim - 1 {
            return Err(Error::PremiseViolation(format!(
                "first part has {} zero-sum multipliers in [1, {split_index}], expected {}",
                found.len(),
                half_dim - 1
            )));
        }
        std::iter::once(0).chain(found[..(half_dim - 1) as usize].iter().copied()).collect()
    } else {
        return Err(Error::PremiseViolation(format!(
            "split index {split_index} below 2⌈D/(2q)⌉ − 2"
        )));
    };
    bld.sets.insert("anchor_lengths".into(), anchors.iter().map(|l| l * q).collect());

    let wanted = multiples(q, anchors.iter().map(|l| k - l));
    let t2 = search_or_fail(&part2, &wanted, LengthOrder::Ascending, cfg, "second part, lengths kq − anchors")?;
    bld.record("second_piece", &t2);
    let rest = target - t2.len();
    let t1 = if rest == 0 {
        GSeq::empty(s.group())
    } else {
        search_or_fail(&part1, &[rest].into(), LengthOrder::Ascending, cfg, "first part, anchor length")?
    };
    bld.record("first_piece", &t1);
    let result = t1.concat(&t2)?;
    bld.finish(s, [target].into(), result)
}

/// Subsequence of `s` whose image under `f` is the multiset `image`,
/// taking the canonically smallest preimages.
fn pull_back<F>(s: &GSeq, image: &GSeq, f: F) -> Result<GSeq>
where
    F: Fn(&GroupElement) -> Result<GroupElement>,
{
    let mut want: BTreeMap<GroupElement, u64> = image.iter().map(|(g, c)| (g.clone(), c)).collect();
    let mut out = GSeq::empty(s.group());
    for (x, c) in s.iter() {
        let y = f(x)?;
        if let Some(w) = want.get_mut(&y) {
            let take = c.min(*w);
            if take > 0 {
                out.push(x.clone(), take)?;
                *w -= take;
            }
        }
    }
    if want.values().any(|&w| w > 0) {
        return Err(Error::NotSubsequence);
    }
    Ok(out)
}

/// Zero-sum subsequence of length `abqn` (`n = exp(G)/q`): pieces of length
/// `bq` summing into `qG` are peeled off greedily until their sums in `qG`
/// contain a zero-sum of length `an`.
///
/// `s_an`, when known, bounds the number of pieces and feeds the length
/// premise. The premise is reported but not enforced, since the procedure is
/// often successful on shorter inputs.
pub fn extract_filtration(
    s: &GSeq,
    a: u64,
    b: u64,
    q: u64,
    s_an: Option<u64>,
    cfg: &EngineConfig,
) -> Result<ExtractionPlan> {
    let g = s.group();
    let consts = crate::bounds::filtration_constants(g, q)?;
    let split = g.quotient_and_subgroup(q)?;
    let n = consts.n;
    let mut bld = Builder::new(
        Strategy::Filtration,
        ExtractionParams {
            a: Some(a),
            b: Some(b),
            q: Some(q),
            ..Default::default()
        },
    );
    if a == 0 || b == 0 {
        return Err(Error::InvalidParam("a and b must be positive".into()));
    }
    bld.notes.push("constants d and D are read from H = G/qG".into());
    let (holds, inst) = mainbound_prime_condition(consts.p, q, consts.davenport_h, consts.d_h);
    bld.check("p ≥ 2d + 3⌈D(H)/(2q)⌉ − 3", holds, inst);
    if let Some(s_an) = s_an {
        let need = s_an * b * q + (2 * consts.d_h - 2) * q + 3 * consts.davenport_h - 3;
        bld.check(
            "|S| ≥ s_an(qG)·bq + (2d − 2)q + 3D(H) − 3",
            s.len() >= need,
            format!("|S| = {} ≥ {need}", s.len()),
        );
    }
    bld.values.insert("n".into(), n);
    bld.record("input", s);

    let piece_len = b * q;
    let sum_len = a * n;
    let max_pieces = s_an.unwrap_or(u64::MAX);
    let mut rem = s.clone();
    let mut pieces: Vec<GSeq> = Vec::new();
    let mut sums = GSeq::empty(&split.subgroup);
    let mut chosen: Option<GSeq> = None;
    while (pieces.len() as u64) < max_pieces {
        let projected = rem.map_into(&split.quotient, |x| split.project(x))?;
        let Some(image) = search(&projected, &[piece_len].into(), LengthOrder::Ascending, cfg)? else {
            break;
        };
        let piece = pull_back(&rem, &image, |x| split.project(x))?;
        let y = split
            .to_subgroup(&piece.sigma())?
            .ok_or_else(|| Error::PremiseViolation(format!("piece {piece} does not sum into qG")))?;
        bld.record(&format!("piece_{}", pieces.len() + 1), &piece);
        rem = rem.remove(&piece)?;
        sums.push(y, 1)?;
        pieces.push(piece);
        if let Some(z) = search(&sums, &[sum_len].into(), LengthOrder::Ascending, cfg)? {
            chosen = Some(z);
            break;
        }
    }
    bld.values.insert("pieces".into(), pieces.len() as u64);
    let Some(selection) = chosen else {
        let premise = bld.hypotheses.iter().all(|h| h.holds);
        return Err(Error::PremiseViolation(format!(
            "{} pieces of length {piece_len} have no zero-sum of length {sum_len} among their sums in qG (premise {})",
            pieces.len(),
            if premise { "held" } else { "unmet" }
        )));
    };
    bld.record("sums_zero_sum", &selection);

    // pick pieces whose sums realise the selected multiset, lowest index first
    let mut want: BTreeMap<GroupElement, u64> = selection.iter().map(|(g, c)| (g.clone(), c)).collect();
    let mut result = GSeq::empty(g);
    for piece in &pieces {
        let y = split.to_subgroup(&piece.sigma())?.expect("checked above");
        if let Some(w) = want.get_mut(&y) {
            if *w > 0 {
                *w -= 1;
                result = result.concat(piece)?;
            }
        }
    }
    bld.finish(s, [a * b * q * n].into(), result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_group;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn g(s: &str) -> AbelianGroup {
        parse_group(s).unwrap()
    }

    fn cfg() -> EngineConfig {
        EngineConfig::default()
    }

    fn pow(grp: &AbelianGroup, coords: &[u64], n: u64) -> GSeq {
        GSeq::from_pairs(grp, &[(coords, n)]).unwrap()
    }

    fn random_seq(grp: &AbelianGroup, len: u64, rng: &mut ChaCha8Rng) -> GSeq {
        let n = grp.order() as usize;
        GSeq::from_indices(grp, (0..len).map(|_| rng.gen_range(0..n)))
    }

    #[test]
    fn subadditive_examples() {
        let c3 = g("3");
        let plan = split_subadditive(&pow(&c3, &[1], 8), 3, 3, None, &cfg()).unwrap();
        assert_eq!(plan.result, pow(&c3, &[1], 6));
        let c2 = g("2");
        let plan = split_subadditive(&pow(&c2, &[0], 5), 2, 2, None, &cfg()).unwrap();
        assert_eq!(plan.result, pow(&c2, &[0], 4));
        assert!(matches!(
            split_subadditive(&pow(&c3, &[1], 5), 3, 3, None, &cfg()),
            Err(Error::PremiseViolation(_))
        ));
        // s_3(C_3) = 5 so the premise needs |S| ≥ 8
        assert!(matches!(
            split_subadditive(&pow(&c3, &[1], 7), 3, 3, Some((5, 5)), &cfg()),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn pq_lift_examples() {
        let c3 = g("3");
        let plan = extract_pq_lift(&pow(&c3, &[1], 11), &cfg()).unwrap();
        assert_eq!(plan.result, pow(&c3, &[1], 9));
        let c2 = g("2");
        let plan = extract_pq_lift(&pow(&c2, &[0], 5), &cfg()).unwrap();
        assert_eq!(plan.result, pow(&c2, &[0], 4));
        assert!(extract_pq_lift(&pow(&c3, &[1], 10), &cfg()).is_err());

        let c33 = g("3,3");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let s = random_seq(&c33, 13, &mut rng);
            let plan = extract_pq_lift(&s, &cfg()).unwrap();
            assert_eq!(plan.result.len(), 9);
            assert!(plan.verify(&s));
        }
    }

    #[test]
    fn two_piece_random() {
        let c33 = g("3,3");
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let s = random_seq(&c33, 17, &mut rng);
            let plan = extract_proof_guided(&s, &ProofStrategy::TwoPiece2d { k: 3 }, &cfg()).unwrap();
            assert_eq!(plan.result.len(), 9);
            assert!(plan.verify(&s));
            let parts: u64 = plan
                .trace
                .iter()
                .filter(|e| e.role.ends_with("_part"))
                .map(|e| e.length)
                .sum();
            assert_eq!(parts, 17);
            assert_eq!(plan.sets["anchor_lengths"].len(), 2);
        }
        assert!(matches!(
            extract_proof_guided(&random_seq(&c33, 17, &mut rng), &ProofStrategy::TwoPiece2d { k: 2 }, &cfg()),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn half_lemma_random() {
        let c33 = g("3,3");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut complemented = 0;
        for _ in 0..100 {
            let s = random_seq(&c33, 10, &mut rng);
            let plan = extract_proof_guided(&s, &ProofStrategy::HalfLemma { multipliers: [1].into() }, &cfg()).unwrap();
            assert_eq!(plan.result.len(), 3);
            assert!(plan.verify(&s));
            assert_eq!(plan.sets["extended_multipliers"], vec![1, 3]);
            complemented += plan.notes.iter().filter(|n| n.starts_with("complement")).count();
        }
        assert!(complemented > 0);
    }

    #[test]
    fn main_theorem_small_cases() {
        let c55 = g("5,5");
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for k in [2u64, 3, 5, 6, 7] {
            let len = main_budget(c55.pgroup_profile().unwrap(), k);
            for _ in 0..3 {
                let s = random_seq(&c55, len, &mut rng);
                let plan = extract_proof_guided(&s, &ProofStrategy::MainTheorem { k }, &cfg()).unwrap();
                assert_eq!(plan.result.len(), 5 * k);
                assert!(plan.verify(&s));
            }
        }
        let c7 = g("7");
        let s = random_seq(&c7, main_budget(c7.pgroup_profile().unwrap(), 9), &mut rng);
        let plan = extract_proof_guided(&s, &ProofStrategy::MainTheorem { k: 9 }, &cfg()).unwrap();
        assert_eq!(plan.result.len(), 63);
        let c33 = g("3,3");
        assert!(matches!(
            extract_proof_guided(&random_seq(&c33, 40, &mut rng), &ProofStrategy::MainTheorem { k: 2 }, &cfg()),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn main_theorem_rank_three_anchors() {
        // C_11^3: D = 31, d = 3, ⌈D/(2q)⌉ = 2
        let grp = g("11,11,11");
        let prof = *grp.pgroup_profile().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in [3u64, 4] {
            let s = random_seq(&grp, main_budget(&prof, k), &mut rng);
            let plan = extract_proof_guided(&s, &ProofStrategy::MainTheorem { k }, &cfg()).unwrap();
            assert_eq!(plan.result.len(), 11 * k);
            assert!(plan.verify(&s));
            assert_eq!(plan.sets["anchor_lengths"].len(), 2);
            assert_eq!(plan.values["split_index"], k / 2 + 1);
        }
    }

    #[test]
    fn filtration_examples() {
        let c4 = g("4");
        let plan = extract_filtration(&pow(&c4, &[1], 7), 1, 1, 2, None, &cfg()).unwrap();
        assert_eq!(plan.result, pow(&c4, &[1], 4));

        let c9 = g("9");
        let plan = extract_filtration(&pow(&c9, &[1], 13), 1, 1, 3, Some(5), &cfg()).unwrap();
        assert_eq!(plan.result, pow(&c9, &[1], 9));
        assert_eq!(plan.values["pieces"], 3);
        assert!(!plan.hypotheses.iter().all(|h| h.holds));

        let c22 = g("2,2");
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = random_seq(&c22, 6, &mut rng);
        let plan = extract_filtration(&s, 1, 1, 2, None, &cfg()).unwrap();
        assert_eq!(plan.result.len(), 2);
        assert!(plan.verify(&s));
    }

    #[test]
    fn plan_serializes() {
        let c3 = g("3");
        let plan = split_subadditive(&pow(&c3, &[1], 8), 3, 3, None, &cfg()).unwrap();
        let v = serde_json::to_value(&plan).unwrap();
        assert_eq!(v["strategy"], "subadditive");
        assert_eq!(v["trace"].as_array().unwrap().last().unwrap()["role"], "result");
        let back: ExtractionPlan = serde_json::from_value(v).unwrap();
        assert_eq!(back, plan);
    }
}
