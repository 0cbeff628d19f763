//! Exact positive scalars of the form ∏ pᵢ^{eᵢ} with primes pᵢ and rational
//! exponents eᵢ, and matrices carrying such a scalar.
//!
//! Applying an automorphism multiplies a matrix by μ(det A)(det A)^{-1/n},
//! which is irrational whenever det A is not a perfect n-th power. Storing
//! the scalar as a prime-exponent map keeps every comparison exact: two
//! scalars are equal iff their canonical factor maps are identical.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::RatMatrix;
use crate::rat::Rat;

/// Largest prime admitted into a factor base. Factoring is by trial division,
/// which is ample for the small determinants this crate produces; anything
/// needing a larger prime is rejected explicitly rather than silently slow.
pub const FACTOR_BASE_CAP: u64 = 1_000_000;

/// Canonical representation of a positive real ∏ pᵢ^{eᵢ}.
///
/// Invariant: every stored exponent is nonzero and every key is prime.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct RadicalScalar {
    factors: BTreeMap<BigInt, Rat>,
}

impl RadicalScalar {
    pub fn one() -> Self {
        RadicalScalar {
            factors: BTreeMap::new(),
        }
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> impl Iterator<Item = (&BigInt, &Rat)> {
        self.factors.iter()
    }

    pub fn exponent_of(&self, prime: &BigInt) -> Option<&Rat> {
        self.factors.get(prime)
    }

    /// Exact factorization of a positive rational into the factor map.
    pub fn from_rat(value: &Rat) -> Result<Self> {
        if !value.is_positive() {
            return Err(Error::NonPositive(format!(
                "cannot factor nonpositive value {value}"
            )));
        }
        let mut factors = BTreeMap::new();
        for (prime, e) in factor_positive(value.numer())? {
            accumulate(&mut factors, prime, Rat::int(e as i64));
        }
        for (prime, e) in factor_positive(value.denom())? {
            accumulate(&mut factors, prime, Rat::int(-(e as i64)));
        }
        Ok(RadicalScalar { factors })
    }

    pub fn mul(&self, other: &RadicalScalar) -> RadicalScalar {
        let mut factors = self.factors.clone();
        for (p, e) in &other.factors {
            accumulate(&mut factors, p.clone(), e.clone());
        }
        RadicalScalar { factors }
    }

    /// Raise to a rational power; exponent 0 collapses to 1.
    pub fn pow(&self, exponent: &Rat) -> RadicalScalar {
        if exponent.is_zero() {
            return RadicalScalar::one();
        }
        let factors = self
            .factors
            .iter()
            .map(|(p, e)| (p.clone(), e * exponent))
            .collect();
        RadicalScalar { factors }
    }

    pub fn recip(&self) -> RadicalScalar {
        self.pow(&Rat::int(-1))
    }

    /// Exact rational value when all exponents are integral.
    pub fn to_rat(&self) -> Option<Rat> {
        let mut value = Rat::one();
        for (p, e) in &self.factors {
            if !e.is_integer() {
                return None;
            }
            let exp = e.numer().to_i64()?;
            let base = Rat::from_bigint(p.clone());
            value = value * base.pow(exp).ok()?;
        }
        Some(value)
    }
}

/// x^{1/k} in canonical radical form; exactly rational when every prime
/// exponent of x is divisible by k.
pub fn rational_root(value: &Rat, k: u32) -> Result<RadicalScalar> {
    if k == 0 {
        return Err(Error::InvalidParameter("root order must be >= 1".into()));
    }
    Ok(RadicalScalar::from_rat(value)?.pow(&Rat::ratio(1, k as i64)))
}

fn accumulate(map: &mut BTreeMap<BigInt, Rat>, prime: BigInt, exp: Rat) {
    let entry = map.entry(prime.clone()).or_insert_with(Rat::zero);
    *entry = &*entry + &exp;
    if entry.is_zero() {
        map.remove(&prime);
    }
}

fn factor_positive(n: &BigInt) -> Result<Vec<(BigInt, u64)>> {
    debug_assert!(n.is_positive());
    if let Some(small) = n.to_u64() {
        return Ok(factor_u64(small)?
            .into_iter()
            .map(|(p, e)| (BigInt::from(p), e))
            .collect());
    }
    factor_bigint(n)
}

fn factor_u64(mut n: u64) -> Result<Vec<(u64, u64)>> {
    let original = n;
    let mut out = Vec::new();
    let mut push = |p: u64, e: u64| {
        if e > 0 {
            out.push((p, e));
        }
    };
    let mut e = 0;
    while n % 2 == 0 {
        n /= 2;
        e += 1;
    }
    push(2, e);
    let mut p = 3u64;
    while p < FACTOR_BASE_CAP && p * p <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        push(p, e);
        p += 2;
    }
    if n > 1 {
        if n < FACTOR_BASE_CAP {
            push(n, 1);
        } else {
            return Err(Error::FactorBaseTooLarge {
                value: original.to_string(),
                cap: FACTOR_BASE_CAP,
            });
        }
    }
    Ok(out)
}

fn factor_bigint(n: &BigInt) -> Result<Vec<(BigInt, u64)>> {
    let original = n.clone();
    let mut n = n.clone();
    let mut out: Vec<(BigInt, u64)> = Vec::new();
    let mut p = 2u64;
    while p < FACTOR_BASE_CAP {
        let bp = BigInt::from(p);
        if (&bp * &bp) > n {
            break;
        }
        let mut e = 0u64;
        while (&n % &bp).is_zero() {
            n /= &bp;
            e += 1;
        }
        if e > 0 {
            out.push((bp, e));
            if let Some(small) = n.to_u64() {
                for (q, f) in factor_u64(small)? {
                    out.push((BigInt::from(q), f));
                }
                return Ok(merge_factors(out));
            }
        }
        p = if p == 2 { 3 } else { p + 2 };
    }
    if n.is_one() {
        return Ok(merge_factors(out));
    }
    if let Some(small) = n.to_u64() {
        if small < FACTOR_BASE_CAP {
            out.push((n, 1));
            return Ok(merge_factors(out));
        }
    }
    Err(Error::FactorBaseTooLarge {
        value: original.to_string(),
        cap: FACTOR_BASE_CAP,
    })
}

fn merge_factors(mut factors: Vec<(BigInt, u64)>) -> Vec<(BigInt, u64)> {
    factors.sort_by(|a, b| a.0.cmp(&b.0));
    let mut merged: Vec<(BigInt, u64)> = Vec::with_capacity(factors.len());
    for (p, e) in factors {
        match merged.last_mut() {
            Some((q, f)) if *q == p => *f += e,
            _ => merged.push((p, e)),
        }
    }
    merged
}

impl fmt::Display for RadicalScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|(p, e)| format!("{p}^({e})"))
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

impl fmt::Debug for RadicalScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Serialize, Deserialize)]
struct FactorEntry {
    prime: String,
    exponent: Rat,
}

impl Serialize for RadicalScalar {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            factors: &'a [FactorEntry],
        }
        let entries: Vec<FactorEntry> = self
            .factors
            .iter()
            .map(|(p, e)| FactorEntry {
                prime: p.to_string(),
                exponent: e.clone(),
            })
            .collect();
        Wire { factors: &entries }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RadicalScalar {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            factors: Vec<FactorEntry>,
        }
        let wire = Wire::deserialize(deserializer)?;
        let mut factors = BTreeMap::new();
        for entry in wire.factors {
            let prime: BigInt = entry
                .prime
                .parse()
                .map_err(|_| serde::de::Error::custom("invalid prime"))?;
            if entry.exponent.is_zero() {
                continue;
            }
            accumulate(&mut factors, prime, entry.exponent);
        }
        Ok(RadicalScalar { factors })
    }
}

/// A positive scalar times a rational matrix, in canonical form: the first
/// nonzero body entry in row-major order equals 1 and all scaling lives in
/// `scale`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct ScaledMatrix {
    scale: RadicalScalar,
    body: RatMatrix,
}

impl ScaledMatrix {
    /// Canonicalizes scale·body. The leading body entry must be positive so
    /// that it can be absorbed into the (positive) radical scale.
    pub fn from_parts(scale: RadicalScalar, body: RatMatrix) -> Result<Self> {
        let (r, c) = body.first_nonzero().ok_or_else(|| {
            Error::InvalidParameter("zero matrix has no canonical scaled form".into())
        })?;
        let lead = body.get(r, c).clone();
        if lead.is_negative() {
            return Err(Error::NonPositive(format!(
                "leading body entry {lead} cannot be absorbed into a positive scale"
            )));
        }
        if lead.is_one() {
            return Ok(ScaledMatrix { scale, body });
        }
        let normalized = body.scale(&lead.recip()?);
        let scale = scale.mul(&RadicalScalar::from_rat(&lead)?);
        Ok(ScaledMatrix {
            scale,
            body: normalized,
        })
    }

    pub fn from_rat_matrix(matrix: &RatMatrix) -> Result<Self> {
        Self::from_parts(RadicalScalar::one(), matrix.clone())
    }

    pub fn scale(&self) -> &RadicalScalar {
        &self.scale
    }

    pub fn body(&self) -> &RatMatrix {
        &self.body
    }

    pub fn mul(&self, other: &ScaledMatrix) -> Result<ScaledMatrix> {
        ScaledMatrix::from_parts(self.scale.mul(&other.scale), self.body.mul(&other.body)?)
    }

    pub fn inverse(&self) -> Result<ScaledMatrix> {
        ScaledMatrix::from_parts(self.scale.recip(), self.body.inverse()?)
    }

    /// Determinant of the represented value, as a radical scalar. Defined
    /// only when the body determinant is positive.
    pub fn det_radical(&self) -> Result<RadicalScalar> {
        let n = self.body.require_square()?;
        let body_det = self.body.det()?;
        Ok(self
            .scale
            .pow(&Rat::int(n as i64))
            .mul(&RadicalScalar::from_rat(&body_det)?))
    }

    /// Exact rational value when the scale is rational.
    pub fn to_rat_matrix(&self) -> Option<RatMatrix> {
        let s = self.scale.to_rat()?;
        Some(self.body.scale(&s))
    }
}

impl<'de> Deserialize<'de> for ScaledMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            scale: RadicalScalar,
            body: RatMatrix,
        }
        let wire = Wire::deserialize(deserializer)?;
        ScaledMatrix::from_parts(wire.scale, wire.body).map_err(serde::de::Error::custom)
    }
}
