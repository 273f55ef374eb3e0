//! Polynomial certificate for the set-length bound on p-groups.
//!
//! For `S = g_1 ⋯ g_m` and a multiplier set `K`, the integer-valued product
//!
//! ```text
//! P(x) = C(Σx_i − 1, q − 1) · Π_j C(Σ a_ij x_i − 1, q_j − 1) · Π_{ℓ ∈ [1, max K] \ K} (C(Σx_i, q) − ℓ)
//! ```
//!
//! is evaluated mod p on every point of `{0,1}^m` through Lucas' theorem.
//! Its multilinear coefficients follow from the subset Möbius transform. At
//! the critical length the top coefficient must vanish (the degree of `P` is
//! `m − 1`) while `P(0) ≢ 0`, which pins down the nonzero points.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{self, EngineConfig};
use crate::error::{Error, Result};
use crate::group::{is_prime, AbelianGroup, GroupElement};
use crate::sequence::GSeq;

/// Largest cube dimension evaluated point by point.
pub const MAX_CUBE_DIM: usize = 24;

/// Hits listed in a [`VanishingReport`]; every hit is still checked.
pub const DEFAULT_HIT_LIST: usize = 256;

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

/// `C(a, n) mod p` for `0 ≤ a, n < p`.
fn digit_binom(a: u64, n: u64, p: u64) -> u64 {
    if n > a {
        return 0;
    }
    let (mut num, mut den) = (1u64, 1u64);
    for i in 0..n {
        num = num * ((a - i) % p) % p;
        den = den * ((i + 1) % p) % p;
    }
    num * pow_mod(den, p - 2, p) % p
}

/// `C(a, n) mod p` by base-p digits, with `C(−1, n) = (−1)^n`.
pub fn lucas_binom(a: i64, n: u64, p: u64) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if a < -1 {
        return Err(Error::InvalidParam(format!("binomial top argument {a} below −1")));
    }
    if a == -1 {
        return Ok(if n % 2 == 0 { 1 } else { p - 1 } % p);
    }
    let (mut a, mut n) = (a as u64, n);
    let mut r = 1u64;
    while n > 0 {
        let (ad, nd) = (a % p, n % p);
        if nd > ad {
            return Ok(0);
        }
        r = r * digit_binom(ad, nd, p) % p;
        a /= p;
        n /= p;
    }
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceMode {
    /// Length and multiplier hypotheses of the set-length bound are enforced.
    Theorem,
    /// Any length and any positive multipliers.
    Exploratory,
}

/// `(max K + 1 − |K|)·q + D(G) − 1`.
pub fn theorem_length(g: &AbelianGroup, multipliers: &BTreeSet<u64>) -> Result<u64> {
    let prof = g.require_pgroup()?;
    let max_k = *multipliers
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidParam("empty multiplier set".into()))?;
    Ok((max_k + 1 - multipliers.len() as u64) * prof.q + prof.davenport - 1)
}

/// A sequence with an indexed expansion `g_1, …, g_m` and a multiplier set.
#[derive(Clone, Debug)]
pub struct WitnessInstance {
    group: AbelianGroup,
    sequence: GSeq,
    multipliers: BTreeSet<u64>,
    mode: InstanceMode,
    terms: Vec<GroupElement>,
    p: u64,
    q: u64,
}

impl WitnessInstance {
    pub fn new<I: IntoIterator<Item = u64>>(sequence: GSeq, multipliers: I, mode: InstanceMode) -> Result<Self> {
        let group = sequence.group().clone();
        let prof = *group.require_pgroup()?;
        let multipliers: BTreeSet<u64> = multipliers.into_iter().collect();
        if multipliers.is_empty() || multipliers.contains(&0) {
            return Err(Error::InvalidParam("multipliers must be a nonempty set of positive integers".into()));
        }
        if mode == InstanceMode::Theorem {
            let max_k = *multipliers.iter().max().expect("nonempty");
            if max_k > prof.p {
                return Err(Error::Hypothesis(format!("max K = {max_k} exceeds p = {}", prof.p)));
            }
            if (multipliers.len() as u64) < prof.dim_d {
                return Err(Error::Hypothesis(format!(
                    "|K| = {} is below d = {}",
                    multipliers.len(),
                    prof.dim_d
                )));
            }
            let need = theorem_length(&group, &multipliers)?;
            if sequence.len() != need {
                return Err(Error::Hypothesis(format!(
                    "sequence length {} differs from the critical length {need}",
                    sequence.len()
                )));
            }
        }
        let terms = sequence.terms();
        Ok(WitnessInstance {
            group,
            sequence,
            multipliers,
            mode,
            terms,
            p: prof.p,
            q: prof.q,
        })
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn sequence(&self) -> &GSeq {
        &self.sequence
    }

    pub fn multipliers(&self) -> &BTreeSet<u64> {
        &self.multipliers
    }

    pub fn mode(&self) -> InstanceMode {
        self.mode
    }

    pub fn m(&self) -> usize {
        self.terms.len()
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn exponent(&self) -> u64 {
        self.q
    }

    /// Term `i` of the expansion (0-based).
    pub fn term(&self, i: usize) -> &GroupElement {
        &self.terms[i]
    }

    /// Representative in `[0, q_j − 1]` of coordinate `j` of term `i`.
    pub fn representative(&self, i: usize, j: usize) -> u64 {
        self.terms[i].coords()[j]
    }

    /// `[1, max K] \ K`.
    pub fn excluded_multipliers(&self) -> Vec<u64> {
        let max_k = *self.multipliers.iter().max().expect("nonempty");
        (1..=max_k).filter(|l| !self.multipliers.contains(l)).collect()
    }

    /// Subsequence selected by `mask` (bit `i` selects term `i`).
    pub fn decode(&self, mask: u64) -> GSeq {
        let picked = (0..self.m()).filter(|i| mask >> i & 1 == 1).map(|i| self.terms[i].clone());
        GSeq::from_elements(&self.group, picked).expect("terms belong to the group")
    }

    fn tables(&self) -> Result<Tables> {
        let m = self.m() as i64;
        let p = self.p;
        let lens = (0..=m)
            .map(|t| lucas_binom(t - 1, self.q - 1, p).map(|v| v as u32))
            .collect::<Result<Vec<_>>>()?;
        let mut comps = Vec::new();
        for &qj in self.group.factors() {
            let top = m * (qj as i64 - 1);
            comps.push(
                (0..=top)
                    .map(|s| lucas_binom(s - 1, qj - 1, p).map(|v| v as u32))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        let excluded = self.excluded_multipliers();
        let mut kfac = Vec::with_capacity(m as usize + 1);
        for t in 0..=m {
            let c = lucas_binom(t, self.q, p)?;
            let v = excluded.iter().fold(1u64, |acc, &l| acc * ((c + p - l % p) % p) % p);
            kfac.push(v as u32);
        }
        let reps = (0..self.m())
            .map(|i| self.terms[i].coords().to_vec())
            .collect();
        Ok(Tables {
            p,
            lens,
            comps,
            kfac,
            reps,
        })
    }

    fn require_cube(&self) -> Result<()> {
        if self.m() > MAX_CUBE_DIM {
            return Err(Error::CubeTooLarge {
                m: self.m(),
                max: MAX_CUBE_DIM,
            });
        }
        Ok(())
    }
}

struct Tables {
    p: u64,
    lens: Vec<u32>,
    comps: Vec<Vec<u32>>,
    kfac: Vec<u32>,
    reps: Vec<Vec<u64>>,
}

impl Tables {
    fn factors(&self, len: usize, sums: &[u64]) -> (u32, u32, u32) {
        let l = self.lens[len];
        let s = self
            .comps
            .iter()
            .zip(sums)
            .fold(1u64, |acc, (tab, &s)| acc * tab[s as usize] as u64 % self.p) as u32;
        (l, s, self.kfac[len])
    }

    fn value(&self, len: usize, sums: &[u64]) -> u32 {
        let (l, s, k) = self.factors(len, sums);
        (l as u64 * s as u64 % self.p * k as u64 % self.p) as u32
    }

    /// Calls `f(mask, len, sums)` on every point whose high bits equal `block`,
    /// walking the low `low` bits in Gray-code order.
    fn walk_block<F: FnMut(u64, usize, &[u64])>(&self, block: u64, low: usize, mut f: F) {
        let m = self.reps.len();
        let e = self.comps.len();
        let mut sums = vec![0u64; e];
        let mut len = 0usize;
        for i in low..m {
            if block >> (i - low) & 1 == 1 {
                len += 1;
                for (s, r) in sums.iter_mut().zip(&self.reps[i]) {
                    *s += r;
                }
            }
        }
        let base = block << low;
        let mut gray = 0u64;
        f(base, len, &sums);
        for step in 1u64..(1u64 << low) {
            let bit = step.trailing_zeros() as usize;
            gray ^= 1 << bit;
            if gray >> bit & 1 == 1 {
                len += 1;
                for (s, r) in sums.iter_mut().zip(&self.reps[bit]) {
                    *s += r;
                }
            } else {
                len -= 1;
                for (s, r) in sums.iter_mut().zip(&self.reps[bit]) {
                    *s -= r;
                }
            }
            f(base | gray, len, &sums);
        }
    }

    fn split(&self) -> (usize, u64) {
        let m = self.reps.len();
        let low = m.min(14);
        (low, 1u64 << (m - low))
    }
}

/// `P(x)` mod p together with its three factors `(P_L, P_S, P_K)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointValue {
    pub value: u32,
    pub length_factor: u32,
    pub sum_factor: u32,
    pub multiplier_factor: u32,
}

/// Evaluates `P` at the point `x ∈ {0,1}^m` given as a bit mask.
pub fn eval_p(w: &WitnessInstance, mask: u64) -> Result<PointValue> {
    if w.m() < 64 && mask >> w.m() != 0 {
        return Err(Error::InvalidParam(format!("point {mask:#b} has bits beyond m = {}", w.m())));
    }
    let t = w.tables()?;
    let mut sums = vec![0u64; w.group.rank()];
    let mut len = 0;
    for i in 0..w.m() {
        if mask >> i & 1 == 1 {
            len += 1;
            for (s, r) in sums.iter_mut().zip(&t.reps[i]) {
                *s += r;
            }
        }
    }
    let (l, s, k) = t.factors(len, &sums);
    Ok(PointValue {
        value: t.value(len, &sums),
        length_factor: l,
        sum_factor: s,
        multiplier_factor: k,
    })
}

/// `P` on the whole cube, indexed by mask.
pub fn cube_values(w: &WitnessInstance) -> Result<Vec<u32>> {
    w.require_cube()?;
    let t = w.tables()?;
    let (low, blocks) = t.split();
    let chunks: Vec<Vec<u32>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut out = vec![0u32; 1 << low];
            let base = b << low;
            t.walk_block(b, low, |mask, len, sums| out[(mask - base) as usize] = t.value(len, sums));
            out
        })
        .collect();
    Ok(chunks.concat())
}

/// Coefficient of `Π_{i ∈ [1,m]} x_i` in the multilinear form of `P`, mod p:
/// `Σ_J (−1)^{m − |J|} P(χ_J)`.
pub fn full_coefficient(w: &WitnessInstance) -> Result<u32> {
    w.require_cube()?;
    let t = w.tables()?;
    let (low, blocks) = t.split();
    let p = t.p;
    let m = w.m() as u32;
    let total: u64 = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = 0u64;
            t.walk_block(b, low, |mask, len, sums| {
                let v = t.value(len, sums) as u64;
                if (m - mask.count_ones()) % 2 == 0 {
                    acc = (acc + v) % p;
                } else {
                    acc = (acc + p - v) % p;
                }
            });
            acc
        })
        .reduce(|| 0, |a, b| (a + b) % p);
    Ok(total as u32)
}

/// Coefficient of `Π_{i ∈ I} x_i` for a single subset `I`, by summing over
/// its submasks.
pub fn coefficient_of(w: &WitnessInstance, subset: u64) -> Result<u32> {
    let t = w.tables()?;
    let p = t.p;
    let size = subset.count_ones();
    let mut acc = 0u64;
    let mut sub = subset;
    loop {
        let mut sums = vec![0u64; w.group.rank()];
        let mut len = 0;
        for i in 0..w.m() {
            if sub >> i & 1 == 1 {
                len += 1;
                for (s, r) in sums.iter_mut().zip(&t.reps[i]) {
                    *s += r;
                }
            }
        }
        let v = t.value(len, &sums) as u64;
        acc = if (size - sub.count_ones()) % 2 == 0 {
            (acc + v) % p
        } else {
            (acc + p - v) % p
        };
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & subset;
    }
    Ok(acc as u32)
}

/// All multilinear coefficients of a function on `{0,1}^m`, mod p.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultilinearCoeffs {
    p: u64,
    m: usize,
    coeffs: Vec<u32>,
}

impl MultilinearCoeffs {
    /// Möbius transform of a value table indexed by mask.
    pub fn from_values(values: &[u32], p: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        let m = values.len().trailing_zeros() as usize;
        if values.len() != 1 << m {
            return Err(Error::InvalidParam(format!("table size {} is not a power of two", values.len())));
        }
        let p32 = p as u32;
        let mut c: Vec<u32> = values.iter().map(|v| v % p32).collect();
        for i in 0..m {
            let bit = 1usize << i;
            for mask in 0..c.len() {
                if mask & bit != 0 {
                    c[mask] = (c[mask] + p32 - c[mask ^ bit]) % p32;
                }
            }
        }
        Ok(MultilinearCoeffs { p, m, coeffs: c })
    }

    /// Zeta transform back to point values.
    pub fn to_values(&self) -> Vec<u32> {
        let p32 = self.p as u32;
        let mut v = self.coeffs.clone();
        for i in 0..self.m {
            let bit = 1usize << i;
            for mask in 0..v.len() {
                if mask & bit != 0 {
                    v[mask] = (v[mask] + v[mask ^ bit]) % p32;
                }
            }
        }
        v
    }

    pub fn coefficient(&self, subset: u64) -> u32 {
        self.coeffs[subset as usize]
    }

    pub fn top(&self) -> u32 {
        self.coeffs[self.coeffs.len() - 1]
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Largest `|I|` with a nonzero coefficient; `None` for the zero function.
    pub fn degree(&self) -> Option<u32> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, _)| (i as u64).count_ones())
            .max()
    }
}

pub fn multilinear_coeffs(w: &WitnessInstance) -> Result<MultilinearCoeffs> {
    MultilinearCoeffs::from_values(&cube_values(w)?, w.p)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VanishingHit {
    /// 0-based positions in the canonical expansion.
    pub indices: Vec<usize>,
    pub subsequence: GSeq,
    pub length: u64,
    pub value: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VanishingReport {
    pub group: AbelianGroup,
    pub p: u64,
    pub q: u64,
    pub multipliers: Vec<u64>,
    pub mode: InstanceMode,
    pub m: usize,
    pub critical_length: u64,
    pub origin: PointValue,
    pub full_coefficient: u32,
    /// Nonzero points other than the origin.
    pub hit_count: u64,
    pub hits: Vec<VanishingHit>,
    pub hits_truncated: bool,
    /// Every hit is a zero-sum subsequence according to the engine.
    pub engine_confirmed: bool,
    /// The nonzero points are exactly the zero-sum `T` with `q | |T|` and
    /// `|T|/q mod p ∉ [1, max K] \ K`.
    pub matches_prediction: bool,
    pub prediction_mismatches: u64,
    /// Every hit has length in `Kq`.
    pub lengths_in_kq: bool,
    pub notes: Vec<String>,
}

pub fn vanishing_report(w: &WitnessInstance) -> Result<VanishingReport> {
    vanishing_report_with_limit(w, DEFAULT_HIT_LIST)
}

/// Enumerates the cube, cross-checks each nonzero point with the engine and
/// with the closed-form prediction, and lists up to `list_limit` hits.
pub fn vanishing_report_with_limit(w: &WitnessInstance, list_limit: usize) -> Result<VanishingReport> {
    w.require_cube()?;
    let t = w.tables()?;
    let (low, blocks) = t.split();
    let factors = w.group.factors().to_vec();
    let excluded: BTreeSet<u64> = w.excluded_multipliers().into_iter().collect();
    let (p, q) = (w.p, w.q);

    struct BlockOut {
        hits: Vec<(u64, u32)>,
        mismatches: u64,
    }
    let outs: Vec<BlockOut> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut out = BlockOut {
                hits: Vec::new(),
                mismatches: 0,
            };
            t.walk_block(b, low, |mask, len, sums| {
                let v = t.value(len, sums);
                let len = len as u64;
                let predicted = len % q == 0
                    && sums.iter().zip(&factors).all(|(s, n)| s % n == 0)
                    && !excluded.contains(&((len / q) % p));
                if predicted != (v != 0) {
                    out.mismatches += 1;
                }
                if v != 0 && mask != 0 {
                    out.hits.push((mask, v));
                }
            });
            out
        })
        .collect();
    let mismatches: u64 = outs.iter().map(|o| o.mismatches).sum();
    let mut all_hits: Vec<(u64, u32)> = outs.into_iter().flat_map(|o| o.hits).collect();
    all_hits.sort_unstable();

    let cfg = EngineConfig::default();
    let checks: Vec<(bool, bool)> = all_hits
        .par_iter()
        .map(|&(mask, _)| {
            let sub = w.decode(mask);
            let len = sub.len();
            let zero = engine::zero_sum_lengths(&sub, &cfg)
                .map(|ls| ls.contains(&len))
                .unwrap_or(false);
            let in_kq = len % q == 0 && w.multipliers.contains(&(len / q));
            (zero, in_kq)
        })
        .collect();
    let engine_confirmed = checks.iter().all(|c| c.0);
    let lengths_in_kq = checks.iter().all(|c| c.1);

    let hits = all_hits
        .iter()
        .take(list_limit)
        .map(|&(mask, value)| {
            let subsequence = w.decode(mask);
            VanishingHit {
                indices: (0..w.m()).filter(|i| mask >> i & 1 == 1).collect(),
                length: subsequence.len(),
                subsequence,
                value,
            }
        })
        .collect();

    let critical_length = theorem_length(&w.group, &w.multipliers)?;
    let mut notes = vec![format!(
        "the multiplier factor tests |T|/{q} mod {p} through C(|T|, {q}); \
         the vanishing condition is read at multiples of exp(G), not of p"
    )];
    if w.mode == InstanceMode::Exploratory && w.m() as u64 != critical_length {
        notes.push(format!(
            "exploratory length {} differs from the critical length {critical_length}; no claim is made",
            w.m()
        ));
    }
    Ok(VanishingReport {
        group: w.group.clone(),
        p,
        q,
        multipliers: w.multipliers.iter().copied().collect(),
        mode: w.mode,
        m: w.m(),
        critical_length,
        origin: eval_p(w, 0)?,
        full_coefficient: full_coefficient(w)?,
        hit_count: all_hits.len() as u64,
        hits_truncated: all_hits.len() > list_limit,
        hits,
        engine_confirmed,
        matches_prediction: mismatches == 0,
        prediction_mismatches: mismatches,
        lengths_in_kq,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::extremal_witness_lower;
    use crate::group::parse_group;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn g(s: &str) -> AbelianGroup {
        parse_group(s).unwrap()
    }

    fn random_seq(grp: &AbelianGroup, len: u64, rng: &mut ChaCha8Rng) -> GSeq {
        let n = grp.order() as usize;
        GSeq::from_indices(grp, (0..len).map(|_| rng.gen_range(0..n)))
    }

    /// Pascal's triangle mod p, independent of digit expansion.
    fn pascal(rows: usize, p: u64) -> Vec<Vec<u64>> {
        let mut t = vec![vec![1u64]];
        for a in 1..=rows {
            let prev = &t[a - 1];
            let mut row = vec![1u64; a + 1];
            for n in 1..a {
                row[n] = (prev[n - 1] + prev[n]) % p;
            }
            t.push(row);
        }
        t
    }

    #[test]
    fn lucas_examples() {
        assert_eq!(lucas_binom(5, 2, 3).unwrap(), 1);
        assert_eq!(lucas_binom(6, 3, 3).unwrap(), 2);
        assert_eq!(lucas_binom(-1, 2, 3).unwrap(), 1);
        assert_eq!(lucas_binom(-1, 3, 3).unwrap(), 2);
        assert_eq!(lucas_binom(-1, 5, 2).unwrap(), 1);
        assert_eq!(lucas_binom(2, 5, 7).unwrap(), 0);
        assert_eq!(lucas_binom(4, 2, 4), Err(Error::NotPrime(4)));
        assert!(lucas_binom(-2, 1, 3).is_err());
    }

    #[test]
    fn lucas_matches_pascal() {
        for p in [2, 3, 5, 7] {
            let t = pascal(300, p);
            for a in 0..=300usize {
                for n in 0..=a {
                    assert_eq!(lucas_binom(a as i64, n as u64, p).unwrap(), t[a][n], "C({a},{n}) mod {p}");
                }
            }
        }
    }

    #[test]
    fn congruence_displays() {
        for p in [2u64, 3, 5] {
            for qj in [p, p * p, p * p * p] {
                for y in 0..=200i64 {
                    let expect = u64::from(y as u64 % qj == 0);
                    assert_eq!(lucas_binom(y - 1, qj - 1, p).unwrap(), expect, "p={p} q={qj} y={y}");
                }
                for l in 0..p {
                    assert_eq!(lucas_binom((l * qj) as i64, qj, p).unwrap(), l);
                }
            }
        }
    }

    #[test]
    fn origin_factors_are_signs() {
        let grp = g("3,9");
        let s = GSeq::from_indices(&grp, [1, 5, 7]);
        let w = WitnessInstance::new(s, [1, 3], InstanceMode::Exploratory).unwrap();
        let v = eval_p(&w, 0).unwrap();
        // (−1)^{q−1}, (−1)^{Σ(q_j − 1)}, (−2)
        assert_eq!(v.length_factor, 1);
        assert_eq!(v.sum_factor, 1);
        assert_eq!(v.multiplier_factor, 1);
        assert_eq!(v.value, 1);

        let w = WitnessInstance::new(GSeq::from_indices(&g("2,4"), [1]), [2, 3], InstanceMode::Exploratory).unwrap();
        let v = eval_p(&w, 0).unwrap();
        assert!(v.length_factor != 0 && v.sum_factor != 0 && v.multiplier_factor != 0);
    }

    #[test]
    fn factors_vanish_as_expected() {
        let grp = g("3,3");
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let s = random_seq(&grp, 7, &mut rng);
            let w = WitnessInstance::new(s, [1, 2], InstanceMode::Theorem).unwrap();
            for mask in 1u64..(1 << 7) {
                let v = eval_p(&w, mask).unwrap();
                let t = w.decode(mask);
                if t.len() % 3 != 0 {
                    assert_eq!(v.length_factor, 0);
                }
                if t.len() == 3 && !t.is_zero_sum() {
                    assert_eq!(v.sum_factor, 0);
                }
            }
        }
    }

    #[test]
    fn transform_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for m in 0..=12usize {
            for p in [2u64, 3, 5, 7] {
                let vals: Vec<u32> = (0..1usize << m).map(|_| rng.gen_range(0..p as u32)).collect();
                let c = MultilinearCoeffs::from_values(&vals, p).unwrap();
                assert_eq!(c.to_values(), vals);
            }
        }
    }

    #[test]
    fn single_coefficients_agree_with_transform() {
        let grp = g("3,3");
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = WitnessInstance::new(random_seq(&grp, 10, &mut rng), [1, 3], InstanceMode::Theorem).unwrap();
        let all = multilinear_coeffs(&w).unwrap();
        for _ in 0..50 {
            let sub = rng.gen_range(0..1u64 << 10);
            assert_eq!(coefficient_of(&w, sub).unwrap(), all.coefficient(sub));
        }
        assert_eq!(all.top(), full_coefficient(&w).unwrap());
        assert!(all.degree().unwrap() < 10);
    }

    #[test]
    fn critical_lengths() {
        let set = |v: &[u64]| v.iter().copied().collect::<BTreeSet<u64>>();
        assert_eq!(theorem_length(&g("3"), &set(&[1])).unwrap(), 5);
        assert_eq!(theorem_length(&g("3,3"), &set(&[1, 2])).unwrap(), 7);
        assert_eq!(theorem_length(&g("3,3"), &set(&[1, 3])).unwrap(), 10);
        assert_eq!(theorem_length(&g("2,2,2"), &set(&[1, 2])).unwrap(), 5);
        assert_eq!(theorem_length(&g("5"), &set(&[3])).unwrap(), 19);
    }

    #[test]
    fn theorem_mode_checks_hypotheses() {
        let grp = g("3,3");
        let s = GSeq::from_indices(&grp, [0; 7]);
        assert!(WitnessInstance::new(s.clone(), [1], InstanceMode::Theorem).is_err());
        assert!(WitnessInstance::new(s.clone(), [1, 4], InstanceMode::Theorem).is_err());
        assert!(WitnessInstance::new(s.clone(), [1, 3], InstanceMode::Theorem).is_err());
        assert!(WitnessInstance::new(s.clone(), [1, 2], InstanceMode::Theorem).is_ok());
        assert!(WitnessInstance::new(s, [1, 3], InstanceMode::Exploratory).is_ok());
        let c6 = GSeq::from_indices(&g("6"), [1]);
        assert!(matches!(
            WitnessInstance::new(c6, [1], InstanceMode::Exploratory),
            Err(Error::NotPGroup(_))
        ));
    }

    #[test]
    fn full_coefficient_vanishes_at_critical_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let cases: &[(&str, &[u64])] = &[
            ("3", &[1]),
            ("3", &[2, 3]),
            ("3,3", &[1, 2]),
            ("3,3", &[2, 3]),
            ("3,3", &[1, 2, 3]),
            ("3,3", &[1, 3]),
            ("2,2,2", &[1, 2]),
            ("5", &[1, 2]),
            ("5", &[2]),
        ];
        for (spec, k) in cases {
            let grp = g(spec);
            let m = theorem_length(&grp, &k.iter().copied().collect()).unwrap();
            for _ in 0..5 {
                let w = WitnessInstance::new(random_seq(&grp, m, &mut rng), k.iter().copied(), InstanceMode::Theorem)
                    .unwrap();
                assert_eq!(full_coefficient(&w).unwrap(), 0, "{spec} K={k:?}");
                assert_ne!(eval_p(&w, 0).unwrap().value, 0);
            }
        }
    }

    #[test]
    fn report_on_random_instances() {
        let grp = g("3,3");
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..10 {
            let w = WitnessInstance::new(random_seq(&grp, 7, &mut rng), [1, 2], InstanceMode::Theorem).unwrap();
            let r = vanishing_report(&w).unwrap();
            assert!(r.hit_count > 0);
            assert!(r.engine_confirmed && r.matches_prediction && r.lengths_in_kq);
            assert!(r.hits.iter().all(|h| h.length == 3 || h.length == 6));
            assert_eq!(r.full_coefficient, 0);
        }
    }

    #[test]
    fn report_on_padded_extremal_witness() {
        let grp = g("3,3");
        let w0 = extremal_witness_lower(&grp, 1).unwrap();
        let mut s = w0.clone();
        s.push(grp.element(vec![1, 1]).unwrap(), 1).unwrap();
        let w = WitnessInstance::new(s, [1, 2], InstanceMode::Theorem).unwrap();
        let r = vanishing_report(&w).unwrap();
        assert!(r.hit_count > 0);
        assert!(r.engine_confirmed && r.lengths_in_kq);
    }

    #[test]
    fn full_interval_has_no_multiplier_factor() {
        let grp = g("3,3");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = WitnessInstance::new(random_seq(&grp, 9, &mut rng), [1, 2, 3], InstanceMode::Exploratory).unwrap();
        let r = vanishing_report_with_limit(&w, usize::MAX).unwrap();
        assert!(r.engine_confirmed && r.matches_prediction);
        let mut expect = 0;
        for mask in 1u64..(1 << 9) {
            let t = w.decode(mask);
            if t.len() % 3 == 0 && t.is_zero_sum() {
                expect += 1;
            }
        }
        assert_eq!(r.hit_count, expect);
    }

    #[test]
    fn cube_limit() {
        let grp = g("5");
        let w = WitnessInstance::new(GSeq::from_indices(&grp, [1; 25]), [1], InstanceMode::Exploratory).unwrap();
        assert!(matches!(full_coefficient(&w), Err(Error::CubeTooLarge { m: 25, .. })));
    }
}
