//! Closed-form bounds on `s_{kq}(G)` with explicit hypothesis reports.
//!
//! Every evaluator lists each hypothesis of its statement with the numbers
//! plugged in, whether or not it holds. A value is attached only when all
//! hypotheses hold. Conjectured values use their own [`BoundKind`] and never
//! enter [`best_upper`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{InvariantRecord, Quantity, Status};
use crate::group::{ceil_div, factorize, AbelianGroup};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremId {
    Sets,
    Half,
    #[serde(rename = "2d")]
    TwoD,
    Mainbound,
    Lbound2,
    Pcase,
    GaoLower,
    GaoEquality,
    Subadditive,
    Inductivegeneral,
    Generalbound,
    NineKn,
    ThreeKn,
    Conjecture,
}

impl TheoremId {
    pub const ALL: [TheoremId; 14] = [
        TheoremId::Sets,
        TheoremId::Half,
        TheoremId::TwoD,
        TheoremId::Mainbound,
        TheoremId::Lbound2,
        TheoremId::Pcase,
        TheoremId::GaoLower,
        TheoremId::GaoEquality,
        TheoremId::Subadditive,
        TheoremId::Inductivegeneral,
        TheoremId::Generalbound,
        TheoremId::NineKn,
        TheoremId::ThreeKn,
        TheoremId::Conjecture,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::Sets => "sets",
            TheoremId::Half => "half",
            TheoremId::TwoD => "2d",
            TheoremId::Mainbound => "mainbound",
            TheoremId::Lbound2 => "lbound2",
            TheoremId::Pcase => "pcase",
            TheoremId::GaoLower => "gao_lower",
            TheoremId::GaoEquality => "gao_equality",
            TheoremId::Subadditive => "subadditive",
            TheoremId::Inductivegeneral => "inductivegeneral",
            TheoremId::Generalbound => "generalbound",
            TheoremId::NineKn => "nine_kn",
            TheoremId::ThreeKn => "three_kn",
            TheoremId::Conjecture => "conjecture",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TheoremId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidParam(format!("unknown theorem id `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Upper,
    Lower,
    Equality,
    Conjectured,
}

/// What a bound value refers to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundTarget {
    /// `s_L(G)` for a single length.
    Length(u64),
    /// `s_{Kq}(G)` for a set of lengths.
    LengthSet(Vec<u64>),
    /// The threshold `ℓ(G)`.
    Threshold,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub condition: String,
    pub holds: bool,
    pub instantiation: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundResult {
    pub theorem: TheoremId,
    pub applicable: bool,
    pub hypotheses: Vec<Hypothesis>,
    pub value: Option<u64>,
    pub kind: BoundKind,
    pub target: Option<BoundTarget>,
    /// For `gao_lower`: whether `kn < D(G)` makes the inequality strict.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strict: Option<bool>,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default)]
    pub trace: Vec<String>,
}

/// Free variables of the statements. Unused fields are ignored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BoundParams {
    /// Length multiplier `k` (target length `kq`, `kpq` for `pcase`).
    pub k: Option<u64>,
    /// Multiplier set `K` for `sets` and `half`.
    pub multipliers: Option<BTreeSet<u64>>,
    /// Lengths `a`, `b` for `subadditive`; multipliers for `inductivegeneral`.
    pub a: Option<u64>,
    pub b: Option<u64>,
    /// `s_a(G)` and `s_b(G)` for `subadditive`.
    pub s_a: Option<u64>,
    pub s_b: Option<u64>,
    /// Prime power `q` for `inductivegeneral`.
    pub q: Option<u64>,
    /// `s_{an}(qG)` for `inductivegeneral`.
    pub s_an_subgroup: Option<u64>,
    /// Factorization `k = a_1 ⋯ a_r` for `generalbound`, `nine_kn`, `three_kn`.
    pub factors: Option<Vec<u64>>,
    /// `D(G)` for groups where Olson's formula is unavailable.
    pub davenport: Option<u64>,
}

impl BoundParams {
    pub fn with_k(k: u64) -> Self {
        BoundParams {
            k: Some(k),
            ..Default::default()
        }
    }

    pub fn with_multipliers<I: IntoIterator<Item = u64>>(k: I) -> Self {
        BoundParams {
            multipliers: Some(k.into_iter().collect()),
            ..Default::default()
        }
    }
}

struct Report {
    theorem: TheoremId,
    kind: BoundKind,
    hypotheses: Vec<Hypothesis>,
    notes: Vec<String>,
}

impl Report {
    fn new(theorem: TheoremId, kind: BoundKind) -> Self {
        Report {
            theorem,
            kind,
            hypotheses: Vec::new(),
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

    fn all_hold(&self) -> bool {
        self.hypotheses.iter().all(|h| h.holds)
    }

    fn finish(self, target: BoundTarget, value: impl FnOnce() -> u64) -> BoundResult {
        let applicable = self.all_hold();
        BoundResult {
            theorem: self.theorem,
            applicable,
            value: applicable.then(value),
            kind: self.kind,
            target: Some(target),
            strict: None,
            hypotheses: self.hypotheses,
            notes: self.notes,
            trace: Vec::new(),
        }
    }
}

fn need<T: Clone>(v: &Option<T>, name: &'static str) -> Result<T> {
    v.clone().ok_or(Error::MissingParam(name))
}

fn need_multipliers(params: &BoundParams) -> Result<BTreeSet<u64>> {
    let k = need(&params.multipliers, "multipliers")?;
    if k.is_empty() {
        return Err(Error::InvalidParam("multiplier set K is empty".into()));
    }
    Ok(k)
}

/// `p ≥ 2d + 3⌈D/(2q)⌉ − 3`, as `(holds, instantiation)`.
pub fn mainbound_prime_condition(p: u64, q: u64, dav: u64, d: u64) -> (bool, String) {
    let m = ceil_div(dav, 2 * q);
    let rhs = (2 * d + 3 * m) as i64 - 3;
    (
        p as i64 >= rhs,
        format!("p = {p} ≥ 2·{d} + 3·⌈{dav}/{}⌉ − 3 = {rhs}", 2 * q),
    )
}

/// `p ≥ 2d − 2 + ⌈(2D − 2)/q⌉`.
pub fn lbound2_prime_condition(p: u64, q: u64, dav: u64, d: u64) -> (bool, String) {
    let rhs = 2 * d + ceil_div(2 * dav - 2, q) - 2;
    (
        p >= rhs,
        format!("p = {p} ≥ 2·{d} − 2 + ⌈{}/{q}⌉ = {rhs}", 2 * dav - 2),
    )
}

/// Evaluates one statement for `g` with the given free variables.
pub fn evaluate_bound(theorem: TheoremId, g: &AbelianGroup, params: &BoundParams) -> Result<BoundResult> {
    match theorem {
        TheoremId::Sets => eval_sets(g, params),
        TheoremId::Half => eval_half(g, params),
        TheoremId::TwoD => eval_2d(g, params),
        TheoremId::Mainbound => eval_mainbound(g, params),
        TheoremId::Lbound2 => eval_lbound2(g, params),
        TheoremId::Pcase => eval_pcase(g, params),
        TheoremId::GaoLower => eval_gao(g, params, false),
        TheoremId::GaoEquality => eval_gao(g, params, true),
        TheoremId::Subadditive => eval_subadditive(params),
        TheoremId::Inductivegeneral => eval_inductive(g, params),
        TheoremId::Generalbound => eval_generalbound(g, params),
        TheoremId::NineKn => eval_power_corollary(g, params, TheoremId::NineKn),
        TheoremId::ThreeKn => eval_power_corollary(g, params, TheoremId::ThreeKn),
        TheoremId::Conjecture => eval_conjecture(g, params),
    }
}

fn eval_sets(g: &AbelianGroup, params: &BoundParams) -> Result<BoundResult> {
    let prof = *g.require_pgroup()?;
    let (p, q, dav, d) = (prof.p, prof.q, prof.davenport, prof.dim_d);
    let k = need_multipliers(params)?;
    let (min_k, max_k, size) = (*k.first().unwrap(), *k.last().unwrap(), k.len() as u64);
    let mut r = Report::new(TheoremId::Sets, BoundKind::Upper);
    r.check("|K| ≥ d", size >= d, format!("|K| = {size} ≥ d = {d}"));
    r.check("K ⊆ [1,p]", min_k >= 1 && max_k <= p, format!("K ⊆ [{min_k},{max_k}], p = {p}"));
    let target = BoundTarget::LengthSet(k.iter().map(|&x| x * q).collect());
    Ok(r.finish(target, || (max_k + 1 - size) * q + dav - 1))
}

fn eval_half(g: &AbelianGroup, params: &BoundParams) -> Result<BoundResult> {
    let prof = *g.require_pgroup()?;
    let (p, q, dav, d) = (prof.p, prof.q, prof.davenport, prof.dim_d);
    let k = need_multipliers(params)?;
    let (min_k, max_k, size) = (*k.first().unwrap(), *k.last().unwrap(), k.len() as u64);
    let mut r = Report::new(TheoremId::Half, BoundKind::Upper);
    r.check("K ⊆ ℕ (min K ≥ 1)", min_k >= 1, format!("min K = {min_k}"));
    r.check("|K| ≥ d/2", 2 * size >= d, format!("|K| = {size} ≥ {d}/2"));
    r.check(
        "2·max K + |K| ≤ p",
        2 * max_k + size <= p,
        format!("2·{max_k} + {size} = {} ≤ p = {p}", 2 * max_k + size),
    );
    let target = BoundTarget::LengthSet(k.iter().map(|&x| x * q).collect());
    Ok(r.finish(target, || (2 * max_k + 1 - size) * q + dav - 1))
}

fn eval_2d(g: &AbelianGroup, params: &BoundParams) -> Result<BoundResult> {
    let prof = *g.require_pgroup()?;
    let (p, q, dav, d) = (prof.p, prof.q, prof.davenport, prof.dim_d);
    let k = need(&params.k, "k")?;
    let mut r = Report::new(TheoremId::TwoD, BoundKind::Upper);
    r.check("k ≥ 2d − 1", k + 1 >= 2 * d, format!("k = {k} ≥ 2·{d} − 1 = {}", 2 * d - 1));
    r.check("k ≤ p", k <= p, format!("k = {k} ≤ p = {p}"));
    Ok(r.finish(BoundTarget::Length(k * q), || k * q + 2 * dav - 2))
}

fn eval_mainbound(g: &AbelianGroup, params: &BoundParams) -> Result<BoundResult> {
    let prof = *g.require_pgroup()?;
    let (p, q, dav, d) = (prof.p, prof.q, prof.davenport, prof.dim_d);
    let k = need(&params.k, "k")?;
    let mut r = Report::new(TheoremId::Mainbound, BoundKind::Upper);
    r.check("k ≥ d", k >= d, format!("k = {k} ≥ d = {d}"));
    let (holds, inst) = mainbound_prime_condition(p, q, dav, d);
    r.check("p ≥ 2d + 3⌈D(G)/(2q)⌉ − 3", holds, inst);
    Ok(r.finish(BoundTarget::Length(k * q), || (k + 2 * d - 2) * q + 3 * dav - 3))
}

fn eval_lbound2(g: &AbelianGroup, params: &BoundParams) -> Result<BoundResult> {
    let prof = *g.require_pgroup()?;
    let (p, q, dav, d) = (prof.p, prof.q, prof.davenport, prof.dim_d);
    let (holds, inst) = lbound2_prime_condition(p, q, dav, d);
    match params.k {
        Some(k) => {
            let mut r = Report::new(TheoremId::Lbound2, BoundKind::Equality);
            r.check("p ≥ 2d − 2 + ⌈(2D(G) − 2)/q⌉", holds, inst);
            r.check("k ≥ p + d", k >= p + d, format!("k = {k} ≥ {p} + {d} = {}", p + d));
            Ok(r.finish(BoundTarget::Length(k * q), || k * q + dav - 1))
        }
        None => {
            let mut r = Report::new(TheoremId::Lbound2, BoundKind::Upper);
            r.check("p ≥ 2d − 2 + ⌈(2D(G) − 2)/q⌉", holds, inst);
            Ok(r.finish(BoundTarget::Threshold, || p + d))
        }
    }
}

fn eval_pcase(g: &AbelianGroup, params: &BoundParams) -> Result<BoundResult> {
    let prof = *g.require_pgroup()?;
    let (p, q, dav, d) = (prof.p, prof.q, prof.davenport, prof.dim_d);
    let k = need(&params.k, "k")?;
    let mut r = Report::new(TheoremId::Pcase, BoundKind::Equality);
    r.check("p ≥ d", p >= d, format!("p = {p} ≥ d = {d}"));
    r.check("k ≥ 1", k >= 1, format!("k = {k}"));
    Ok(r.finish(BoundTarget::Length(k * p * q), || k * p * q + dav - 1))
}

fn davenport_of(g: &AbelianGroup, params: &BoundParams) -> Result<u64> {
    match g.pgroup_profile() {
        Some(prof) => Ok(prof.davenport),
        None => need(&params.davenport, "davenport"),
    }
}

fn eval_gao(g: &AbelianGroup, params: &BoundParams, equality: bool) -> Result<BoundResult> {
    let dav = davenport_of(g, params)?;
    let n = g.exponent();
    let k = need(&params.k, "k")?;
    let kn = k * n;
    let value = kn + dav - 1;
    if equality {
        let mut r = Report::new(TheoremId::GaoEquality, BoundKind::Equality);
        r.check("k ≥ 1", k >= 1, format!("k = {k}"));
        r.check("kn ≥ |G|", kn >= g.order(), format!("kn = {kn} ≥ |G| = {}", g.order()));
        return Ok(r.finish(BoundTarget::Length(kn), || value));
    }
    let mut r = Report::new(TheoremId::GaoLower, BoundKind::Lower);
    r.check("k ≥ 1", k >= 1, format!("k = {k}"));
    let strict = kn < dav;
    if strict {
        r.notes.push(format!("kn = {kn} < D(G) = {dav}: the inequality is strict, s ≥ {}", value + 1));
    }
    let mut out = r.finish(BoundTarget::Length(kn), || value);
    out.strict = Some(strict);
    Ok(out)
}

fn eval_subadditive(params: &BoundParams) -> Result<BoundResult> {
    let a = need(&params.a, "a")?;
    let b = need(&params.b, "b")?;
    let s_a = need(&params.s_a, "s_a")?;
    let s_b = need(&params.s_b, "s_b")?;
    let mut r = Report::new(TheoremId::Subadditive, BoundKind::Upper);
    r.check("a ≥ 1", a >= 1, format!("a = {a}"));
    r.check("b ≥ 1", b >= 1, format!("b = {b}"));
    Ok(r.finish(BoundTarget::Length(a + b), || (s_a + b).max(s_b)))
}

/// Constants of `H = G/qG` used by the filtration lemma.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiltrationConstants {
    pub p: u64,
    pub q: u64,
    /// `n = exp(G)/q`.
    pub n: u64,
    pub davenport_h: u64,
    pub d_h: u64,
    pub quotient: AbelianGroup,
    pub subgroup: AbelianGroup,
}

pub fn filtration_constants(g: &AbelianGroup, q: u64) -> Result<FiltrationConstants> {
    let fac = factorize(q);
    if fac.len() != 1 {
        return Err(Error::InvalidParam(format!("q = {q} is not a prime power")));
    }
    let split = g.quotient_and_subgroup(q)?;
    let prof = *split.quotient.require_pgroup()?;
    Ok(FiltrationConstants {
        p: fac[0].0,
        q,
        n: g.exponent() / q,
        davenport_h: prof.davenport,
        d_h: prof.dim_d,
        quotient: split.quotient,
        subgroup: split.subgroup,
    })
}

fn eval_inductive(g: &AbelianGroup, params: &BoundParams) -> Result<BoundResult> {
    let q = need(&params.q, "q")?;
    let a = need(&params.a, "a")?;
    let b = need(&params.b, "b")?;
    let mut r = Report::new(TheoremId::Inductivegeneral, BoundKind::Upper);
    r.notes.push(
        "d and D in the prime condition and error term are read from H = G/qG".to_string(),
    );
    let pp = factorize(q);
    let prime_power = pp.len() == 1;
    r.check("q is a prime power", prime_power, format!("q = {q}"));
    let divides = q >= 1 && g.exponent() % q == 0;
    r.check("q | exp(G)", divides, format!("exp(G) = {}", g.exponent()));
    r.check("a ≥ 1", a >= 1, format!("a = {a}"));
    r.check("b ≥ 1", b >= 1, format!("b = {b}"));
    if !(prime_power && divides) {
        return Ok(r.finish(BoundTarget::Length(0), || 0));
    }
    let c = filtration_constants(g, q)?;
    let target = BoundTarget::Length(a * b * q * c.n);
    let s_an = match params.s_an_subgroup {
        Some(s) => s,
        None if c.subgroup.is_trivial() => a * c.n,
        None => return Err(Error::MissingParam("s_an_subgroup")),
    };
    let (holds, inst) = mainbound_prime_condition(c.p, q, c.davenport_h, c.d_h);
    r.check("p ≥ 2d + 3⌈D(H)/(2q)⌉ − 3", holds, inst);
    r.check(
        "b ≥ d (needed to apply the main bound on H with k = b)",
        b >= c.d_h,
        format!("b = {b} ≥ d = {}", c.d_h),
    );
    let basic_ok = r.all_hold();
    let (s_holds, s_inst) = lbound2_prime_condition(c.p, q, c.davenport_h, c.d_h);
    r.check("[strong branch] p ≥ 2d − 2 + ⌈(2D(H) − 2)/q⌉", s_holds, s_inst);
    r.check(
        "[strong branch] b ≥ p + d",
        b >= c.p + c.d_h,
        format!("b = {b} ≥ {} + {} = {}", c.p, c.d_h, c.p + c.d_h),
    );
    let strong_ok = s_holds && b >= c.p + c.d_h;
    let base = s_an * b * q;
    let value = if strong_ok {
        r.notes.push("strong branch applies".into());
        base + c.davenport_h - 1
    } else {
        base + (2 * c.d_h - 2) * q + 3 * c.davenport_h - 3
    };
    let mut out = r.finish(target, || value);
    // the strong branch lines are optional: applicability follows the basic branch
    out.applicable = basic_ok;
    out.value = basic_ok.then_some(value);
    Ok(out)
}

/// Per-prime data for the primary decomposition.
struct PrimaryData {
    p: u64,
    q: u64,
    dav: u64,
    d: u64,
}

fn primary_data(g: &AbelianGroup) -> Vec<PrimaryData> {
    g.primary_components()
        .into_iter()
        .map(|(p, comp)| {
            let prof = comp.pgroup_profile().expect("primary component is a p-group");
            PrimaryData {
                p,
                q: prof.q,
                dav: prof.davenport,
                d: prof.dim_d,
            }
        })
        .collect()
}

fn eval_generalbound(g: &AbelianGroup, params: &BoundParams) -> Result<BoundResult> {
    let parts = primary_data(g);
    let a = need(&params.factors, "factors")?;
    if a.len() != parts.len() {
        return Err(Error::InvalidParam(format!(
            "expected {} factors a_i (one per prime), got {}",
            parts.len(),
            a.len()
        )));
    }
    let mut r = Report::new(TheoremId::Generalbound, BoundKind::Upper);
    r.notes.push("the weight of the (i+1)-th error term is read as Π_{j≤i} a_j q_j".into());
    for (pd, &ai) in parts.iter().zip(&a) {
        let (holds, inst) = mainbound_prime_condition(pd.p, pd.q, pd.dav, pd.d);
        r.check(&format!("p_{} ≥ 2d + 3⌈D/(2q)⌉ − 3", pd.p), holds, inst);
        r.check(&format!("a_{} ≥ d", pd.p), ai >= pd.d, format!("a = {ai} ≥ d = {}", pd.d));
    }
    let basic_ok = r.all_hold();
    let mut strong_ok = true;
    for (pd, &ai) in parts.iter().zip(&a) {
        let (holds, inst) = lbound2_prime_condition(pd.p, pd.q, pd.dav, pd.d);
        strong_ok &= r.check(&format!("[strong branch] p_{} ≥ 2d − 2 + ⌈(2D − 2)/q⌉", pd.p), holds, inst);
        strong_ok &= r.check(
            &format!("[strong branch] a_{} ≥ p + d", pd.p),
            ai >= pd.p + pd.d,
            format!("a = {ai} ≥ {}", pd.p + pd.d),
        );
    }
    let k: u64 = a.iter().product();
    let n = g.exponent();
    let mut weight = 1u64;
    let mut err_basic = 0u64;
    let mut err_strong = 0u64;
    for (pd, &ai) in parts.iter().zip(&a) {
        err_basic += weight * ((2 * pd.d - 2) * pd.q + 3 * pd.dav - 3);
        err_strong += weight * (pd.dav - 1);
        weight *= ai * pd.q;
    }
    let value = if strong_ok {
        r.notes.push("strong branch applies".into());
        k * n + err_strong
    } else {
        k * n + err_basic
    };
    let mut out = r.finish(BoundTarget::Length(k * n), || value);
    out.applicable = basic_ok;
    out.value = basic_ok.then_some(value);
    Ok(out)
}

/// `(n, d)` when `G ≅ C_n^d`.
pub fn as_homocyclic(g: &AbelianGroup) -> Option<(u64, u64)> {
    let inv = g.invariant_factors();
    let n = *inv.last()?;
    inv.iter().all(|&m| m == n).then_some((n, inv.len() as u64))
}

fn eval_power_corollary(g: &AbelianGroup, params: &BoundParams, which: TheoremId) -> Result<BoundResult> {
    let a = need(&params.factors, "factors")?;
    let mut r = Report::new(which, BoundKind::Upper);
    let Some((n, d)) = as_homocyclic(g) else {
        r.check("G ≅ C_n^d", false, format!("invariant factors {:?}", g.invariant_factors()));
        return Ok(r.finish(BoundTarget::Length(0), || 0));
    };
    r.check("G ≅ C_n^d", true, format!("n = {n}, d = {d}"));
    let primes: Vec<u64> = factorize(n)
        .into_iter()
        .flat_map(|(p, e)| std::iter::repeat_n(p, e as usize))
        .collect();
    if a.len() != primes.len() {
        return Err(Error::InvalidParam(format!(
            "expected {} factors a_i (one per prime factor of n with multiplicity), got {}",
            primes.len(),
            a.len()
        )));
    }
    for (&p, &ai) in primes.iter().zip(&a) {
        match which {
            TheoremId::NineKn => {
                r.check(
                    "p_i ≥ 7d/2 − 3",
                    2 * p + 6 >= 7 * d,
                    format!("p = {p} ≥ 7·{d}/2 − 3 = {}", 7.0 * d as f64 / 2.0 - 3.0),
                );
                r.check("a_i ≥ d", ai >= d, format!("a = {ai} ≥ {d}"));
            }
            _ => {
                r.check("p_i ≥ 4d − 2", p + 2 >= 4 * d, format!("p = {p} ≥ 4·{d} − 2 = {}", 4 * d as i64 - 2));
                r.check("a_i ≥ p_i + d", ai >= p + d, format!("a = {ai} ≥ {p} + {d} = {}", p + d));
            }
        }
    }
    let k: u64 = a.iter().product();
    let factor = if which == TheoremId::NineKn { 9 } else { 3 };
    Ok(r.finish(BoundTarget::Length(k * n), || factor * k * n))
}

fn eval_conjecture(g: &AbelianGroup, params: &BoundParams) -> Result<BoundResult> {
    let prof = *g.require_pgroup()?;
    let k = need(&params.k, "k")?;
    let mut r = Report::new(TheoremId::Conjecture, BoundKind::Conjectured);
    r.check("k ≥ 1", k >= 1, format!("k = {k}"));
    r.notes.push("conjectured value; never used as a proven bound".into());
    Ok(r.finish(BoundTarget::Length(k * prof.q), || k * prof.q + prof.davenport - 1))
}

/// All `s_{kq}` statements for one `k`, in report order.
pub fn bounds_table(g: &AbelianGroup, k: u64) -> Vec<BoundResult> {
    let mut out = Vec::new();
    let single = BoundParams::with_k(k);
    if g.pgroup_profile().is_some() {
        for id in [
            TheoremId::Sets,
            TheoremId::Half,
        ] {
            if let Ok(r) = evaluate_bound(id, g, &BoundParams::with_multipliers([k])) {
                out.push(r);
            }
        }
        for id in [
            TheoremId::TwoD,
            TheoremId::Mainbound,
            TheoremId::Lbound2,
            TheoremId::GaoLower,
            TheoremId::GaoEquality,
            TheoremId::Conjecture,
        ] {
            if let Ok(r) = evaluate_bound(id, g, &single) {
                out.push(r);
            }
        }
        let p = g.pgroup_profile().unwrap().p;
        if k % p == 0 {
            if let Ok(r) = evaluate_bound(TheoremId::Pcase, g, &BoundParams::with_k(k / p)) {
                out.push(r);
            }
        }
    } else {
        let r = g.primary_components().len();
        if let Some(best) = ordered_factorizations(k, r)
            .into_iter()
            .filter_map(|f| {
                evaluate_bound(
                    TheoremId::Generalbound,
                    g,
                    &BoundParams {
                        factors: Some(f),
                        ..Default::default()
                    },
                )
                .ok()
            })
            .min_by_key(|b| b.value.unwrap_or(u64::MAX))
        {
            out.push(best);
        }
    }
    if let Some((n, _)) = as_homocyclic(g) {
        let omega: usize = factorize(n).iter().map(|&(_, e)| e as usize).sum();
        for id in [TheoremId::NineKn, TheoremId::ThreeKn] {
            if let Some(best) = ordered_factorizations(k, omega)
                .into_iter()
                .filter_map(|f| {
                    evaluate_bound(
                        id,
                        g,
                        &BoundParams {
                            factors: Some(f),
                            ..Default::default()
                        },
                    )
                    .ok()
                })
                .min_by_key(|b| (!b.applicable, b.value.unwrap_or(u64::MAX)))
            {
                out.push(best);
            }
        }
    }
    out
}

/// All ordered factorizations of `k` into `r` positive factors.
pub fn ordered_factorizations(k: u64, r: usize) -> Vec<Vec<u64>> {
    fn rec(k: u64, r: usize, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if r == 1 {
            cur.push(k);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for f in 1..=k {
            if k % f == 0 {
                cur.push(f);
                rec(k / f, r - 1, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    if r == 0 {
        if k == 1 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(k, r, &mut Vec::new(), &mut out);
    out
}

#[derive(Clone, Debug)]
enum Derivation {
    Seed(TheoremId, String),
    Split(u64, u64),
}

/// Applicable proven upper bounds on `s_{jn}(G)` for one `j`, in report
/// order. Known records (exact or upper) for the single length `jn` are
/// included.
fn seeds_for(g: &AbelianGroup, j: u64, known: &[InvariantRecord]) -> Vec<(u64, TheoremId, String)> {
    let n = g.exponent();
    let mut out = Vec::new();
    let mut push = |res: Result<BoundResult>, label: String| {
        if let Ok(b) = res {
            if let (true, Some(v)) = (b.applicable, b.value) {
                if b.kind != BoundKind::Conjectured && b.kind != BoundKind::Lower {
                    out.push((v, b.theorem, label));
                }
            }
        }
    };
    if let Some(prof) = g.pgroup_profile() {
        push(evaluate_bound(TheoremId::Sets, g, &BoundParams::with_multipliers([j])), format!("sets K={{{j}}}"));
        push(evaluate_bound(TheoremId::Half, g, &BoundParams::with_multipliers([j])), format!("half K={{{j}}}"));
        push(evaluate_bound(TheoremId::TwoD, g, &BoundParams::with_k(j)), format!("2d k={j}"));
        push(evaluate_bound(TheoremId::Mainbound, g, &BoundParams::with_k(j)), format!("mainbound k={j}"));
        push(evaluate_bound(TheoremId::Lbound2, g, &BoundParams::with_k(j)), format!("lbound2 k={j}"));
        if j % prof.p == 0 {
            push(
                evaluate_bound(TheoremId::Pcase, g, &BoundParams::with_k(j / prof.p)),
                format!("pcase k={}", j / prof.p),
            );
        }
        push(evaluate_bound(TheoremId::GaoEquality, g, &BoundParams::with_k(j)), format!("gao_equality k={j}"));
    } else {
        let dav = known.iter().find_map(|r| {
            (r.quantity == Quantity::Davenport && r.status == Status::Exact && &r.group == g).then_some(r.value)
        });
        if let Some(dav) = dav {
            let params = BoundParams {
                k: Some(j),
                davenport: Some(dav),
                ..Default::default()
            };
            push(evaluate_bound(TheoremId::GaoEquality, g, &params), format!("gao_equality k={j}"));
        }
        let r = g.primary_components().len();
        for f in ordered_factorizations(j, r) {
            let label = format!("generalbound a={f:?}");
            push(
                evaluate_bound(
                    TheoremId::Generalbound,
                    g,
                    &BoundParams {
                        factors: Some(f),
                        ..Default::default()
                    },
                ),
                label,
            );
        }
    }
    if let Some((m, _)) = as_homocyclic(g) {
        let omega: usize = factorize(m).iter().map(|&(_, e)| e as usize).sum();
        if omega > 0 {
            for f in ordered_factorizations(j, omega) {
                for id in [TheoremId::NineKn, TheoremId::ThreeKn] {
                    push(
                        evaluate_bound(
                            id,
                            g,
                            &BoundParams {
                                factors: Some(f.clone()),
                                ..Default::default()
                            },
                        ),
                        format!("{id} a={f:?}"),
                    );
                }
            }
        }
    }
    for rec in known {
        if &rec.group != g || rec.quantity != Quantity::SK {
            continue;
        }
        if !matches!(rec.status, Status::Exact | Status::UpperBound) {
            continue;
        }
        if let Some(ls) = &rec.lengths {
            if ls.lengths().into_iter().eq([j * n]) {
                out.push((rec.value, TheoremId::Subadditive, format!("known record s_{}={}", j * n, rec.value)));
            }
        }
    }
    out
}

/// Least upper bound on `s_{target}(G)` derivable from the applicable
/// statements and `known` records, closed under subadditivity.
pub fn best_upper(g: &AbelianGroup, target_len: u64, known: &[InvariantRecord]) -> BoundResult {
    let n = g.exponent();
    let mut r = Report::new(TheoremId::Subadditive, BoundKind::Upper);
    let ok = r.check(
        "exp(G) | target length",
        target_len >= n && target_len % n == 0,
        format!("exp(G) = {n}, target = {target_len}"),
    );
    if !ok {
        return r.finish(BoundTarget::Length(target_len), || 0);
    }
    let jmax = target_len / n;
    let mut best: Vec<Option<(u64, Derivation)>> = vec![None; jmax as usize + 1];
    for j in 1..=jmax {
        let mut cur: Option<(u64, Derivation)> = None;
        for (v, id, label) in seeds_for(g, j, known) {
            if cur.as_ref().is_none_or(|(b, _)| v < *b) {
                cur = Some((v, Derivation::Seed(id, label)));
            }
        }
        for a in 1..j {
            let b = j - a;
            if let (Some((sa, _)), Some((sb, _))) = (&best[a as usize], &best[b as usize]) {
                let v = (sa + b * n).max(*sb);
                if cur.as_ref().is_none_or(|(c, _)| v < *c) {
                    cur = Some((v, Derivation::Split(a, b)));
                }
            }
        }
        best[j as usize] = cur;
    }
    let Some((value, top)) = best[jmax as usize].clone() else {
        let mut out = r.finish(BoundTarget::Length(target_len), || 0);
        out.applicable = false;
        out.value = None;
        out.notes.push("no applicable bound".into());
        return out;
    };
    let mut trace = Vec::new();
    let mut stack = vec![jmax];
    while let Some(j) = stack.pop() {
        let (v, how) = best[j as usize].clone().expect("derived entries are populated");
        match how {
            Derivation::Seed(_, label) => trace.push(format!("s_{} ≤ {v} by {label}", j * n)),
            Derivation::Split(a, b) => {
                trace.push(format!(
                    "s_{} ≤ max(s_{} + {}, s_{}) = {v} by subadditive",
                    j * n,
                    a * n,
                    b * n,
                    b * n
                ));
                stack.push(a);
                if b != a {
                    stack.push(b);
                }
            }
        }
    }
    let theorem = match top {
        Derivation::Seed(id, _) => id,
        Derivation::Split(..) => TheoremId::Subadditive,
    };
    BoundResult {
        theorem,
        applicable: true,
        hypotheses: r.hypotheses,
        value: Some(value),
        kind: BoundKind::Upper,
        target: Some(BoundTarget::Length(target_len)),
        strict: None,
        notes: Vec::new(),
        trace,
    }
}

/// Least proven upper bound on `s_K(G)` for an arbitrary length set: the
/// minimum over single lengths of [`best_upper`] and, for p-groups with
/// `q | K`, the set statements.
pub fn best_upper_for_set(g: &AbelianGroup, lengths: &BTreeSet<u64>) -> Option<(u64, String)> {
    let n = g.exponent();
    let mut best: Option<(u64, String)> = None;
    let mut consider = |v: u64, why: String| {
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, why));
        }
    };
    for &l in lengths {
        if l % n == 0 && l > 0 {
            let b = best_upper(g, l, &[]);
            if let Some(v) = b.value {
                consider(v, format!("{} (length {l})", b.theorem));
            }
        }
    }
    if let Some(prof) = g.pgroup_profile() {
        if lengths.iter().all(|&l| l % prof.q == 0 && l > 0) {
            let k: BTreeSet<u64> = lengths.iter().map(|&l| l / prof.q).collect();
            for id in [TheoremId::Sets, TheoremId::Half] {
                if let Ok(b) = evaluate_bound(id, g, &BoundParams::with_multipliers(k.iter().copied())) {
                    if let Some(v) = b.value {
                        consider(v, id.to_string());
                    }
                }
            }
        }
    }
    best
}
