//! Finite abelian groups given as a direct sum of cyclic factors.
//!
//! A group keeps the factor order supplied by the user; coordinates of
//! [`GroupElement`] refer to that order. Elements are also addressed by a
//! mixed-radix index (first coordinate most significant), so index order
//! coincides with lexicographic order on coordinates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constants attached to a p-group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PGroupProfile {
    pub p: u64,
    /// Exponent, a power of `p`.
    pub q: u64,
    /// Davenport constant from Olson's formula `1 + Σ (n_i - 1)`.
    pub davenport: u64,
    /// `ceil(davenport / q)`.
    pub dim_d: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AbelianGroup {
    factors: Vec<u64>,
    order: u64,
    exponent: u64,
    profile: Option<PGroupProfile>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement {
    coords: Vec<u64>,
}

/// Largest group order the crate will index.
pub const MAX_ORDER: u64 = 1 << 26;

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Prime factorization as ascending `(prime, exponent)` pairs.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// `ceil(a / b)` for `b > 0`.
pub fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

impl AbelianGroup {
    /// Builds `C_{n_1} ⊕ … ⊕ C_{n_e}`; every factor must be at least 2.
    pub fn new(factors: Vec<u64>) -> Result<Self> {
        if let Some(&bad) = factors.iter().find(|&&n| n < 2) {
            return Err(Error::FactorTooSmall(bad));
        }
        Self::build(factors)
    }

    /// Like [`AbelianGroup::new`] but admits trivial factors `C_1`, which arise
    /// for subgroups `qG` and quotients `G/qG`.
    pub fn with_trivial_factors(factors: Vec<u64>) -> Result<Self> {
        if factors.contains(&0) {
            return Err(Error::FactorTooSmall(0));
        }
        Self::build(factors)
    }

    fn build(factors: Vec<u64>) -> Result<Self> {
        let mut order: u64 = 1;
        for &n in &factors {
            order = order.checked_mul(n).ok_or(Error::GroupTooLarge)?;
        }
        if order > MAX_ORDER {
            return Err(Error::GroupTooLarge);
        }
        let exponent = factors.iter().fold(1, |acc, &n| lcm(acc, n));
        let profile = pgroup_profile(&factors, exponent);
        Ok(AbelianGroup {
            factors,
            order,
            exponent,
            profile,
        })
    }

    pub fn cyclic(n: u64) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn factors(&self) -> &[u64] {
        &self.factors
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn is_trivial(&self) -> bool {
        self.order == 1
    }

    pub fn pgroup_profile(&self) -> Option<&PGroupProfile> {
        self.profile.as_ref()
    }

    pub fn require_pgroup(&self) -> Result<&PGroupProfile> {
        self.profile
            .as_ref()
            .ok_or_else(|| Error::NotPGroup(self.to_string()))
    }

    /// Davenport constant via Olson's formula. Only licensed for p-groups.
    pub fn davenport_olson(&self) -> Result<u64> {
        Ok(self.require_pgroup()?.davenport)
    }

    /// `d = ceil(D(G) / q)`. Undefined outside p-groups.
    pub fn dim_d(&self) -> Result<u64> {
        Ok(self.require_pgroup()?.dim_d)
    }

    /// Invariant factors `m_1 | m_2 | … | m_r` (trivial factors dropped).
    pub fn invariant_factors(&self) -> Vec<u64> {
        let mut by_prime: std::collections::BTreeMap<u64, Vec<u64>> = Default::default();
        for &n in &self.factors {
            for (p, e) in factorize(n) {
                by_prime.entry(p).or_default().push(p.pow(e));
            }
        }
        let width = by_prime.values().map(Vec::len).max().unwrap_or(0);
        let mut out = vec![1u64; width];
        for powers in by_prime.values_mut() {
            powers.sort_unstable();
            // align the largest powers with the last invariant factor
            let offset = width - powers.len();
            for (i, &pp) in powers.iter().enumerate() {
                out[offset + i] *= pp;
            }
        }
        out
    }

    /// Primary components `G_p` as `(p, group)`, primes ascending.
    pub fn primary_components(&self) -> Vec<(u64, AbelianGroup)> {
        let mut by_prime: std::collections::BTreeMap<u64, Vec<u64>> = Default::default();
        for &n in &self.factors {
            for (p, e) in factorize(n) {
                by_prime.entry(p).or_default().push(p.pow(e));
            }
        }
        by_prime
            .into_iter()
            .map(|(p, f)| (p, AbelianGroup::new(f).expect("prime powers are at least 2")))
            .collect()
    }

    pub fn zero(&self) -> GroupElement {
        GroupElement {
            coords: vec![0; self.factors.len()],
        }
    }

    /// Builds an element, reducing each coordinate modulo its factor.
    pub fn element_reduced(&self, coords: &[i64]) -> Result<GroupElement> {
        self.check_len(coords.len())?;
        Ok(GroupElement {
            coords: coords
                .iter()
                .zip(&self.factors)
                .map(|(&c, &n)| c.rem_euclid(n as i64) as u64)
                .collect(),
        })
    }

    /// Builds an element from already-reduced coordinates.
    pub fn element(&self, coords: Vec<u64>) -> Result<GroupElement> {
        self.check_len(coords.len())?;
        for (&c, &n) in coords.iter().zip(&self.factors) {
            if c >= n {
                return Err(Error::CoordinateRange {
                    value: c,
                    factor: n,
                });
            }
        }
        Ok(GroupElement { coords })
    }

    /// The `j`-th standard generator.
    pub fn generator(&self, j: usize) -> GroupElement {
        let mut coords = vec![0; self.factors.len()];
        coords[j] = 1 % self.factors[j];
        GroupElement { coords }
    }

    fn check_len(&self, found: usize) -> Result<()> {
        if found != self.factors.len() {
            return Err(Error::CoordinateCount {
                expected: self.factors.len(),
                found,
            });
        }
        Ok(())
    }

    pub fn validate(&self, g: &GroupElement) -> Result<()> {
        self.check_len(g.coords.len())?;
        for (&c, &n) in g.coords.iter().zip(&self.factors) {
            if c >= n {
                return Err(Error::CoordinateRange {
                    value: c,
                    factor: n,
                });
            }
        }
        Ok(())
    }

    pub fn add(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.check_len(g.coords.len())?;
        self.check_len(h.coords.len())?;
        Ok(GroupElement {
            coords: g
                .coords
                .iter()
                .zip(&h.coords)
                .zip(&self.factors)
                .map(|((&a, &b), &n)| (a + b) % n)
                .collect(),
        })
    }

    pub fn neg(&self, g: &GroupElement) -> Result<GroupElement> {
        self.check_len(g.coords.len())?;
        Ok(GroupElement {
            coords: g
                .coords
                .iter()
                .zip(&self.factors)
                .map(|(&a, &n)| (n - a % n) % n)
                .collect(),
        })
    }

    pub fn sub(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.add(g, &self.neg(h)?)
    }

    pub fn scale(&self, g: &GroupElement, c: i64) -> Result<GroupElement> {
        self.check_len(g.coords.len())?;
        Ok(GroupElement {
            coords: g
                .coords
                .iter()
                .zip(&self.factors)
                .map(|(&a, &n)| {
                    let n = n as i128;
                    ((a as i128 * c as i128).rem_euclid(n)) as u64
                })
                .collect(),
        })
    }

    /// Order of `g`: lcm over coordinates of `n_j / gcd(n_j, c_j)`.
    pub fn element_order(&self, g: &GroupElement) -> u64 {
        g.coords
            .iter()
            .zip(&self.factors)
            .fold(1, |acc, (&c, &n)| lcm(acc, n / gcd(n, c)))
    }

    /// Mixed-radix index, first coordinate most significant.
    pub fn index_of(&self, g: &GroupElement) -> usize {
        let mut idx = 0u64;
        for (&c, &n) in g.coords.iter().zip(&self.factors) {
            idx = idx * n + c;
        }
        idx as usize
    }

    pub fn element_at(&self, mut idx: usize) -> GroupElement {
        let mut coords = vec![0; self.factors.len()];
        for (slot, &n) in coords.iter_mut().zip(&self.factors).rev() {
            *slot = idx as u64 % n;
            idx /= n as usize;
        }
        GroupElement { coords }
    }

    /// All elements in index (= lexicographic) order.
    pub fn elements(&self) -> impl Iterator<Item = GroupElement> + '_ {
        (0..self.order as usize).map(move |i| self.element_at(i))
    }

    /// Index of `element_at(i) + element_at(j)`.
    pub fn add_index(&self, i: usize, j: usize) -> usize {
        let mut a = i as u64;
        let mut b = j as u64;
        let mut out = 0u64;
        let mut place = 1u64;
        for &n in self.factors.iter().rev() {
            let s = (a % n + b % n) % n;
            out += s * place;
            place *= n;
            a /= n;
            b /= n;
        }
        out as usize
    }

    /// Index of `c · element_at(i)`.
    pub fn scale_index(&self, i: usize, c: u64) -> usize {
        let mut a = i as u64;
        let mut out = 0u64;
        let mut place = 1u64;
        for &n in self.factors.iter().rev() {
            let s = ((a % n) as u128 * c as u128 % n as u128) as u64;
            out += s * place;
            place *= n;
            a /= n;
        }
        out as usize
    }

    /// Index of `-element_at(i)`.
    pub fn neg_index(&self, i: usize) -> usize {
        let mut a = i as u64;
        let mut out = 0u64;
        let mut place = 1u64;
        for &n in self.factors.iter().rev() {
            let s = (n - a % n) % n;
            out += s * place;
            place *= n;
            a /= n;
        }
        out as usize
    }

    /// Translation table `i ↦ index(element_at(i) + element_at(h))`.
    pub fn translation(&self, h: usize) -> Vec<u32> {
        let order = self.order as usize;
        let mut out = vec![0u32; order];
        // walk the mixed radix odometer instead of dividing per entry
        let shift = self.element_at(h).coords;
        let mut cur = vec![0u64; self.factors.len()];
        for slot in out.iter_mut() {
            let mut idx = 0u64;
            for ((&c, &s), &n) in cur.iter().zip(&shift).zip(&self.factors) {
                idx = idx * n + (c + s) % n;
            }
            *slot = idx as u32;
            for (c, &n) in cur.iter_mut().zip(&self.factors).rev() {
                *c += 1;
                if *c < n {
                    break;
                }
                *c = 0;
            }
        }
        out
    }

    /// Splits along `q`: the quotient `G/qG` and the subgroup `qG`.
    pub fn quotient_and_subgroup(&self, q: u64) -> Result<QuotientSplit> {
        if q == 0 || self.exponent % q != 0 {
            return Err(Error::NotDivisor {
                q,
                exponent: self.exponent,
            });
        }
        let gs: Vec<u64> = self.factors.iter().map(|&n| gcd(n, q)).collect();
        let quotient = AbelianGroup::with_trivial_factors(gs.clone())?;
        let subgroup = AbelianGroup::with_trivial_factors(
            self.factors.iter().zip(&gs).map(|(&n, &g)| n / g).collect(),
        )?;
        Ok(QuotientSplit {
            group: self.clone(),
            q,
            quotient,
            subgroup,
        })
    }

    /// Direct sum with one more cyclic factor appended.
    pub fn with_extra_factor(&self, n: u64) -> Result<AbelianGroup> {
        let mut f = self.factors.clone();
        f.push(n);
        AbelianGroup::with_trivial_factors(f)
    }

    /// Factor list in the textual spec format, e.g. `3,3`.
    pub fn spec_string(&self) -> String {
        self.factors
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn pgroup_profile(factors: &[u64], exponent: u64) -> Option<PGroupProfile> {
    let nontrivial: Vec<u64> = factors.iter().copied().filter(|&n| n > 1).collect();
    if nontrivial.is_empty() {
        return None;
    }
    let fac = factorize(exponent);
    if fac.len() != 1 {
        return None;
    }
    let p = fac[0].0;
    let davenport = 1 + nontrivial.iter().map(|&n| n - 1).sum::<u64>();
    Some(PGroupProfile {
        p,
        q: exponent,
        davenport,
        dim_d: ceil_div(davenport, exponent),
    })
}

/// Parses the `INT ("," INT)*` group grammar.
pub fn parse_group(spec: &str) -> Result<AbelianGroup> {
    let trimmed = spec.trim();
    if trimmed.is_empty() {
        return Err(Error::MalformedGroup(spec.to_string()));
    }
    let factors = trimmed
        .split(',')
        .map(|tok| {
            let tok = tok.trim();
            if tok.is_empty() || !tok.bytes().all(|b| b.is_ascii_digit()) {
                return Err(Error::MalformedGroup(spec.to_string()));
            }
            tok.parse::<u64>()
                .map_err(|_| Error::MalformedGroup(spec.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    AbelianGroup::new(factors)
}

impl FromStr for AbelianGroup {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_group(s)
    }
}

impl fmt::Display for AbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec_string())
    }
}

impl Serialize for AbelianGroup {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.factors.serialize(s)
    }
}

impl<'de> Deserialize<'de> for AbelianGroup {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let factors = Vec::<u64>::deserialize(d)?;
        AbelianGroup::with_trivial_factors(factors).map_err(serde::de::Error::custom)
    }
}

impl GroupElement {
    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// `G/qG` and `qG` together with the maps between them and `G`.
#[derive(Clone, Debug)]
pub struct QuotientSplit {
    pub group: AbelianGroup,
    pub q: u64,
    /// `H = G/qG`, factors `gcd(n_j, q)`.
    pub quotient: AbelianGroup,
    /// `qG`, factors `n_j / gcd(n_j, q)`.
    pub subgroup: AbelianGroup,
}

impl QuotientSplit {
    /// Residues modulo `gcd(n_j, q)`.
    pub fn project(&self, g: &GroupElement) -> Result<GroupElement> {
        self.group.validate(g)?;
        Ok(GroupElement {
            coords: g
                .coords
                .iter()
                .zip(self.quotient.factors())
                .map(|(&c, &m)| c % m)
                .collect(),
        })
    }

    /// `y ↦ q·y` in each original factor.
    pub fn embed(&self, y: &GroupElement) -> Result<GroupElement> {
        self.subgroup.validate(y)?;
        Ok(GroupElement {
            coords: y
                .coords
                .iter()
                .zip(self.group.factors())
                .map(|(&c, &n)| ((c as u128 * self.q as u128) % n as u128) as u64)
                .collect(),
        })
    }

    /// Inverse of [`QuotientSplit::embed`]; `None` when `g ∉ qG`.
    pub fn to_subgroup(&self, g: &GroupElement) -> Result<Option<GroupElement>> {
        self.group.validate(g)?;
        let mut coords = Vec::with_capacity(g.coords.len());
        for ((&c, &n), &m) in g
            .coords
            .iter()
            .zip(self.group.factors())
            .zip(self.subgroup.factors())
        {
            let gj = n / m;
            if c % gj != 0 {
                return Ok(None);
            }
            if m == 1 {
                coords.push(0);
                continue;
            }
            let unit = (self.q / gj) % m;
            let inv = mod_inverse(unit, m).expect("q/g is a unit modulo n/g");
            coords.push(((c / gj) as u128 * inv as u128 % m as u128) as u64);
        }
        Ok(Some(GroupElement { coords }))
    }
}

fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let qt = old_r / r;
        (old_r, r) = (r, old_r - qt * r);
        (old_s, s) = (s, old_s - qt * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}
