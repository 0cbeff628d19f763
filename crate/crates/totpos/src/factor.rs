//! Bidiagonal factorization of invertible totally nonnegative matrices.
//!
//! Every ITN matrix is an ordered product of elementary bidiagonal factors
//! and one positive diagonal:
//!
//! ```text
//! A = [ (I + w_{1,n-1}E_{n,n-1}) … (I + w_{1,1}E_{2,1}) ]      lower, j = 1
//!     [ (I + w_{2,n-1}E_{n,n-1}) … (I + w_{2,2}E_{3,2}) ]      lower, j = 2
//!     …
//!     · D ·
//!     …
//!     [ (I + w'_{2,3}E_{2,3}) … (I + w'_{2,n}E_{n-1,n}) ]      upper, j = 2
//!     [ (I + w'_{1,2}E_{1,2}) … (I + w'_{1,n}E_{n-1,n}) ]      upper, j = 1
//! ```
//!
//! i.e. lower groups with ascending j and descending inner site, then D, then
//! upper groups with descending j and ascending inner site. This is the one
//! ordering in the family that makes the parameter map a bijection onto the
//! totally positive matrices when all parameters are strictly positive, and
//! it is frozen here as the canonical form: `factorize` inverts `synthesize`
//! bit-exactly.
//!
//! Extraction is Neville elimination — only adjacent rows (then, on the
//! transpose, adjacent columns) are combined. A nonnegative multiplier at
//! every step and positive final pivots certify the input as ITN; any
//! violation aborts with the offending position.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classify;
use crate::error::{Error, Result};
use crate::matrix::RatMatrix;
use crate::rat::Rat;

/// Parameters (w, w', d) of the canonical bidiagonal factorization.
///
/// Both parameter maps are keyed by (j, k) with 1 ≤ j ≤ k ≤ n-1: `w[(j,k)]`
/// weights the lower factor I + w·E_{k+1,k} and `w_prime[(j,k)]` weights the
/// upper factor I + w'·E_{k,k+1}.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BidiagonalFactorization {
    n: usize,
    w: BTreeMap<(usize, usize), Rat>,
    w_prime: BTreeMap<(usize, usize), Rat>,
    d: Vec<Rat>,
}

impl BidiagonalFactorization {
    pub fn new(
        n: usize,
        w: BTreeMap<(usize, usize), Rat>,
        w_prime: BTreeMap<(usize, usize), Rat>,
        d: Vec<Rat>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if d.len() != n {
            return Err(Error::InvalidParameter(format!(
                "diagonal needs {n} entries, got {}",
                d.len()
            )));
        }
        if let Some(bad) = d.iter().find(|v| !v.is_positive()) {
            return Err(Error::InvalidParameter(format!(
                "diagonal entries must be positive, got {bad}"
            )));
        }
        for (name, map) in [("w", &w), ("w_prime", &w_prime)] {
            let expected = n * (n - 1) / 2;
            if map.len() != expected {
                return Err(Error::InvalidParameter(format!(
                    "{name} needs exactly {expected} entries for n={n}, got {}",
                    map.len()
                )));
            }
            for (&(j, k), value) in map.iter() {
                if !(1 <= j && j <= k && k <= n - 1) {
                    return Err(Error::InvalidParameter(format!(
                        "{name} key ({j},{k}) outside 1 <= j <= k <= {}",
                        n - 1
                    )));
                }
                if value.is_negative() {
                    return Err(Error::InvalidParameter(format!(
                        "{name}[({j},{k})] must be nonnegative, got {value}"
                    )));
                }
            }
        }
        Ok(BidiagonalFactorization { n, w, w_prime, d })
    }

    /// All parameters zero, unit diagonal: factors the identity.
    pub fn trivial(n: usize) -> Self {
        let zeros: BTreeMap<(usize, usize), Rat> = sites(n)
            .into_iter()
            .map(|site| (site, Rat::zero()))
            .collect();
        BidiagonalFactorization {
            n,
            w: zeros.clone(),
            w_prime: zeros,
            d: vec![Rat::one(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn w(&self, j: usize, k: usize) -> &Rat {
        &self.w[&(j, k)]
    }

    pub fn w_prime(&self, j: usize, k: usize) -> &Rat {
        &self.w_prime[&(j, k)]
    }

    pub fn d(&self) -> &[Rat] {
        &self.d
    }

    pub fn set_w(&mut self, j: usize, k: usize, value: Rat) {
        self.w.insert((j, k), value);
    }

    pub fn set_w_prime(&mut self, j: usize, k: usize, value: Rat) {
        self.w_prime.insert((j, k), value);
    }

    pub fn set_d(&mut self, i: usize, value: Rat) {
        self.d[i - 1] = value;
    }

    pub fn all_strictly_positive(&self) -> bool {
        self.w.values().all(Rat::is_positive)
            && self.w_prime.values().all(Rat::is_positive)
            && self.d.iter().all(Rat::is_positive)
    }

    /// Product of the lower factors alone (unit lower triangular).
    pub fn lower_matrix(&self) -> RatMatrix {
        let mut m = RatMatrix::identity(self.n);
        apply_lower_factors(&mut m, self, false);
        m
    }

    pub fn diagonal_matrix(&self) -> RatMatrix {
        RatMatrix::from_diagonal(&self.d)
    }

    /// Product of the upper factors alone (unit upper triangular).
    pub fn upper_matrix(&self) -> RatMatrix {
        let mut m = RatMatrix::identity(self.n);
        apply_upper_factors(&mut m, self, false);
        m
    }
}

fn sites(n: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for j in 1..n {
        for k in j..n {
            v.push((j, k));
        }
    }
    v
}

/// col[target] += w * col[source], 0-based.
fn col_axpy(m: &mut RatMatrix, target: usize, source: usize, w: &Rat) {
    if w.is_zero() {
        return;
    }
    for r in 0..m.rows() {
        let add = m.get(r, source) * w;
        if add.is_zero() {
            continue;
        }
        let updated = m.get(r, target) + add;
        m.set(r, target, updated);
    }
}

fn apply_lower_factors(m: &mut RatMatrix, f: &BidiagonalFactorization, misordered: bool) {
    let n = f.n;
    for j in 1..n {
        let ks: Vec<usize> = if misordered {
            (j..n).collect()
        } else {
            (j..n).rev().collect()
        };
        for k in ks {
            // right-multiply by I + w·E_{k+1,k}: col k += w·col k+1 (1-based)
            col_axpy(m, k - 1, k, f.w(j, k));
        }
    }
}

fn apply_diagonal(m: &mut RatMatrix, f: &BidiagonalFactorization) {
    for (i, di) in f.d.iter().enumerate() {
        for r in 0..m.rows() {
            let scaled = m.get(r, i) * di;
            m.set(r, i, scaled);
        }
    }
}

fn apply_upper_factors(m: &mut RatMatrix, f: &BidiagonalFactorization, misordered: bool) {
    let n = f.n;
    let js: Vec<usize> = (1..n).rev().collect();
    for j in js {
        let ks: Vec<usize> = if misordered {
            (j..n).rev().collect()
        } else {
            (j..n).collect()
        };
        for k in ks {
            // right-multiply by I + w'·E_{k,k+1}: col k+1 += w'·col k (1-based)
            col_axpy(m, k, k - 1, f.w_prime(j, k));
        }
    }
}

/// Multiplies out the factorization in its canonical order.
pub fn synthesize(f: &BidiagonalFactorization) -> RatMatrix {
    let mut m = RatMatrix::identity(f.n);
    apply_lower_factors(&mut m, f, false);
    apply_diagonal(&mut m, f);
    apply_upper_factors(&mut m, f, false);
    m
}

/// Same parameters multiplied with both inner site orders reversed. This is
/// a deliberately defective product used by the self-test battery to prove
/// the suite notices an ordering regression; it cannot reach all of TP.
pub(crate) fn synthesize_misordered(f: &BidiagonalFactorization) -> RatMatrix {
    let mut m = RatMatrix::identity(f.n);
    apply_lower_factors(&mut m, f, true);
    apply_diagonal(&mut m, f);
    apply_upper_factors(&mut m, f, true);
    m
}

/// Neville elimination of the lower parameters: within column j (left to
/// right), entries are cleared bottom-up by subtracting a multiple of the
/// row directly above. Multipliers land at key (j, k) when clearing the
/// 1-based entry (k+1, j).
fn neville_lower_pass(
    work: &mut [Vec<Rat>],
    n: usize,
    out: &mut BTreeMap<(usize, usize), Rat>,
) -> Result<()> {
    for j in 1..n {
        for k in (j..n).rev() {
            let below = work[k][j - 1].clone();
            if below.is_zero() {
                out.insert((j, k), Rat::zero());
                continue;
            }
            let above = work[k - 1][j - 1].clone();
            if above.is_zero() {
                return Err(Error::NotItn {
                    reason: format!(
                        "entry ({},{}) sits below a zero and cannot be eliminated",
                        k + 1,
                        j
                    ),
                });
            }
            let m = &below / &above;
            if m.is_negative() {
                return Err(Error::NotItn {
                    reason: format!("negative elimination multiplier {m} at entry ({},{})", k + 1, j),
                });
            }
            for c in j - 1..n {
                let sub = &m * &work[k - 1][c];
                work[k][c] = &work[k][c] - &sub;
            }
            out.insert((j, k), m);
        }
    }
    Ok(())
}

fn matrix_to_rows(matrix: &RatMatrix) -> Vec<Vec<Rat>> {
    (0..matrix.rows())
        .map(|i| (0..matrix.cols()).map(|j| matrix.get(i, j).clone()).collect())
        .collect()
}

fn transpose_rows(rows: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    let n = rows.len();
    (0..n)
        .map(|i| (0..n).map(|j| rows[j][i].clone()).collect())
        .collect()
}

/// Extracts the canonical factorization of an invertible totally nonnegative
/// matrix, so that `synthesize(factorize(A)) == A` exactly. Rejects any
/// matrix outside ITN with the elimination step that failed.
pub fn factorize(matrix: &RatMatrix) -> Result<BidiagonalFactorization> {
    let n = matrix.require_square()?;
    let mut work = matrix_to_rows(matrix);
    let mut w = BTreeMap::new();
    neville_lower_pass(&mut work, n, &mut w)?;

    let mut upper = transpose_rows(&work);
    let mut w_prime = BTreeMap::new();
    neville_lower_pass(&mut upper, n, &mut w_prime)?;

    let mut d = Vec::with_capacity(n);
    for (i, row) in upper.iter().enumerate() {
        let pivot = &row[i];
        if !pivot.is_positive() {
            return Err(Error::NotItn {
                reason: format!("nonpositive pivot {pivot} at diagonal position {}", i + 1),
            });
        }
        d.push(pivot.clone());
    }

    if n == 1 {
        return BidiagonalFactorization::new(1, BTreeMap::new(), BTreeMap::new(), d);
    }
    BidiagonalFactorization::new(n, w, w_prime, d)
}

/// Gaussian LDU decomposition inside the ITN monoid: L and U are unit
/// triangular ITN, D is positive diagonal, and A = L·D·U exactly.
pub fn ldu(matrix: &RatMatrix) -> Result<(RatMatrix, RatMatrix, RatMatrix)> {
    let f = factorize(matrix)?;
    Ok((f.lower_matrix(), f.diagonal_matrix(), f.upper_matrix()))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BidiagonalKind {
    Lower,
    Upper,
}

/// One multiplicative generator: an elementary bidiagonal factor or a
/// positive diagonal matrix.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WordItem {
    /// I + weight·E_{k+1,k}
    Lower { k: usize, weight: Rat },
    /// I + weight·E_{k,k+1}
    Upper { k: usize, weight: Rat },
    Diagonal { d: Vec<Rat> },
}

impl WordItem {
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            WordItem::Lower { k, weight } | WordItem::Upper { k, weight } => {
                if *k == 0 || *k >= n {
                    return Err(Error::InvalidParameter(format!(
                        "bidiagonal site k={k} outside 1..={}",
                        n - 1
                    )));
                }
                if weight.is_negative() {
                    return Err(Error::InvalidParameter(format!(
                        "bidiagonal weight must be nonnegative, got {weight}"
                    )));
                }
            }
            WordItem::Diagonal { d } => {
                if d.len() != n {
                    return Err(Error::InvalidParameter(format!(
                        "diagonal word item needs {n} entries, got {}",
                        d.len()
                    )));
                }
                if let Some(bad) = d.iter().find(|v| !v.is_positive()) {
                    return Err(Error::InvalidParameter(format!(
                        "diagonal word entries must be positive, got {bad}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_matrix(&self, n: usize) -> Result<RatMatrix> {
        self.validate(n)?;
        Ok(match self {
            WordItem::Lower { k, weight } => {
                let mut m = RatMatrix::identity(n);
                m.set(*k, *k - 1, weight.clone());
                m
            }
            WordItem::Upper { k, weight } => {
                let mut m = RatMatrix::identity(n);
                m.set(*k - 1, *k, weight.clone());
                m
            }
            WordItem::Diagonal { d } => RatMatrix::from_diagonal(d),
        })
    }

    pub fn describe(&self) -> String {
        match self {
            WordItem::Lower { k, weight } => format!("lower(k={k}, w={weight})"),
            WordItem::Upper { k, weight } => format!("upper(k={k}, w={weight})"),
            WordItem::Diagonal { d } => {
                let parts: Vec<String> = d.iter().map(Rat::to_string).collect();
                format!("diag({})", parts.join(","))
            }
        }
    }
}

/// An ordered word in the multiplicative generators.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct GeneratorWord {
    pub n: usize,
    pub items: Vec<WordItem>,
}

/// Ordered product of the word's factors; empty words give the identity.
pub fn word_to_matrix(word: &GeneratorWord) -> Result<RatMatrix> {
    if word.n == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    let mut m = RatMatrix::identity(word.n);
    for item in &word.items {
        m = m.mul(&item.to_matrix(word.n)?)?;
    }
    Ok(m)
}

/// Recognizes I + w·E at a bidiagonal site, returning (kind, k, weight).
pub fn as_elementary(matrix: &RatMatrix) -> Option<(BidiagonalKind, usize, Rat)> {
    if !matrix.is_square() {
        return None;
    }
    let n = matrix.rows();
    let mut site: Option<(BidiagonalKind, usize, Rat)> = None;
    for i in 0..n {
        for j in 0..n {
            let e = matrix.get(i, j);
            if i == j {
                if !e.is_one() {
                    return None;
                }
            } else if !e.is_zero() {
                if site.is_some() {
                    return None;
                }
                if i == j + 1 {
                    site = Some((BidiagonalKind::Lower, j + 1, e.clone()));
                } else if j == i + 1 {
                    site = Some((BidiagonalKind::Upper, i + 1, e.clone()));
                } else {
                    return None;
                }
            }
        }
    }
    site
}

fn random_positive<R: Rng>(rng: &mut R) -> Rat {
    let numer = rng.gen_range(1..=8);
    let denom = rng.gen_range(1..=8);
    Rat::ratio(numer, denom)
}

fn random_weight<R: Rng>(rng: &mut R, strict_tp: bool) -> Rat {
    if !strict_tp && rng.gen_ratio(1, 4) {
        return Rat::zero();
    }
    random_positive(rng)
}

/// Seeded random factorization parameters: small nonnegative rationals, zeros
/// planted with probability 1/4 unless `strict_tp` forces the open stratum.
pub fn random_factorization<R: Rng>(
    rng: &mut R,
    n: usize,
    strict_tp: bool,
) -> BidiagonalFactorization {
    let w = sites(n)
        .into_iter()
        .map(|s| (s, random_weight(rng, strict_tp)))
        .collect();
    let w_prime = sites(n)
        .into_iter()
        .map(|s| (s, random_weight(rng, strict_tp)))
        .collect();
    let d = (0..n).map(|_| random_positive(rng)).collect();
    BidiagonalFactorization::new(n, w, w_prime, d).expect("random parameters are valid")
}

/// Random ITN matrix built through the parameter map, certified before it is
/// returned (totally positive when `strict_tp`). Same seed, same matrix.
pub fn random_itn(n: usize, seed: u64, strict_tp: bool) -> RatMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_itn_with_rng(&mut rng, n, strict_tp)
}

pub fn random_itn_with_rng<R: Rng>(rng: &mut R, n: usize, strict_tp: bool) -> RatMatrix {
    let f = random_factorization(rng, n, strict_tp);
    let m = synthesize(&f);
    if strict_tp {
        assert!(
            classify::is_tp_fekete(&m).expect("square by construction"),
            "synthesized strictly positive parameters must give a TP matrix"
        );
    } else {
        assert!(
            classify::is_itn_fast(&m).expect("square by construction"),
            "synthesized parameters must give an ITN matrix"
        );
    }
    m
}

#[derive(Serialize, Deserialize)]
struct ParamEntry {
    j: usize,
    k: usize,
    value: Rat,
}

#[derive(Serialize, Deserialize)]
struct FactorizationWire {
    n: usize,
    w: Vec<ParamEntry>,
    w_prime: Vec<ParamEntry>,
    d: Vec<Rat>,
}

impl Serialize for BidiagonalFactorization {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let to_entries = |map: &BTreeMap<(usize, usize), Rat>| {
            map.iter()
                .map(|(&(j, k), value)| ParamEntry {
                    j,
                    k,
                    value: value.clone(),
                })
                .collect::<Vec<_>>()
        };
        FactorizationWire {
            n: self.n,
            w: to_entries(&self.w),
            w_prime: to_entries(&self.w_prime),
            d: self.d.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BidiagonalFactorization {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let wire = FactorizationWire::deserialize(deserializer)?;
        let to_map = |entries: Vec<ParamEntry>| -> std::result::Result<_, D::Error> {
            let mut map = BTreeMap::new();
            for e in entries {
                if map.insert((e.j, e.k), e.value).is_some() {
                    return Err(serde::de::Error::custom(format!(
                        "duplicate parameter key ({},{})",
                        e.j, e.k
                    )));
                }
            }
            Ok(map)
        };
        BidiagonalFactorization::new(wire.n, to_map(wire.w)?, to_map(wire.w_prime)?, wire.d)
            .map_err(serde::de::Error::custom)
    }
}
