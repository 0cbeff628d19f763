//! Dense matrices over exact rationals.
//!
//! Matrices are immutable values: every operation returns a fresh matrix.
//! Determinants use fraction-free Bareiss elimination on a row-scaled integer
//! copy, so no intermediate rounding or rational blowup occurs. Minor indices
//! are 1-based throughout, matching the usual [n] = {1,…,n} convention.

use std::fmt;

use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rat::Rat;

#[derive(Clone, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rat>,
}

impl RatMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Rat>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch {
                context: "matrix dimensions must be positive".into(),
            });
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "{}x{} matrix needs {} entries, got {}",
                    rows,
                    cols,
                    rows * cols,
                    entries.len()
                ),
            });
        }
        Ok(RatMatrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::DimensionMismatch {
                context: "matrix needs at least one row".into(),
            });
        }
        let nrows = rows.len();
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                context: "rows have unequal lengths".into(),
            });
        }
        let entries = rows.into_iter().flatten().collect();
        Self::new(nrows, cols, entries)
    }

    pub fn from_int_rows(rows: &[Vec<i64>]) -> Self {
        let converted = rows
            .iter()
            .map(|r| r.iter().map(|&v| Rat::int(v)).collect())
            .collect();
        Self::from_rows(converted).expect("integer rows form a rectangular matrix")
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![Rat::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = Rat::one();
        }
        RatMatrix {
            rows: n,
            cols: n,
            entries,
        }
    }

    pub fn from_diagonal(diag: &[Rat]) -> Self {
        let n = diag.len();
        let mut entries = vec![Rat::zero(); n * n];
        for (i, d) in diag.iter().enumerate() {
            entries[i * n + i] = d.clone();
        }
        RatMatrix {
            rows: n,
            cols: n,
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Entry at 0-based position (r, c).
    pub fn get(&self, r: usize, c: usize) -> &Rat {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: Rat) {
        self.entries[r * self.cols + c] = value;
    }

    pub fn entries(&self) -> &[Rat] {
        &self.entries
    }

    pub fn require_square(&self) -> Result<usize> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(self.rows)
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                entries.push(self.get(r, c).clone());
            }
        }
        RatMatrix {
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    pub fn mul(&self, other: &RatMatrix) -> Result<RatMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "cannot multiply {}x{} by {}x{}",
                    self.rows, self.cols, other.rows, other.cols
                ),
            });
        }
        let mut entries = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Rat::zero();
                for k in 0..self.cols {
                    if !self.get(i, k).is_zero() && !other.get(k, j).is_zero() {
                        acc = acc + self.get(i, k) * other.get(k, j);
                    }
                }
                entries.push(acc);
            }
        }
        Ok(RatMatrix {
            rows: self.rows,
            cols: other.cols,
            entries,
        })
    }

    pub fn scale(&self, factor: &Rat) -> RatMatrix {
        let entries = self.entries.iter().map(|e| e * factor).collect();
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    /// Maximum absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &RatMatrix) -> Result<Rat> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                context: "matrices of different shapes have no entrywise distance".into(),
            });
        }
        let mut best = Rat::zero();
        for (a, b) in self.entries.iter().zip(other.entries.iter()) {
            let d = (a - b).abs();
            if d > best {
                best = d;
            }
        }
        Ok(best)
    }

    pub fn is_diagonal(&self) -> bool {
        self.is_square()
            && self
                .entries
                .iter()
                .enumerate()
                .all(|(idx, e)| idx / self.cols == idx % self.cols || e.is_zero())
    }

    pub fn is_positive_diagonal(&self) -> bool {
        self.is_diagonal() && (0..self.rows).all(|i| self.get(i, i).is_positive())
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    if i == j {
                        self.get(i, j).is_one()
                    } else {
                        self.get(i, j).is_zero()
                    }
                })
            })
    }

    pub fn diagonal(&self) -> Vec<Rat> {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i).clone())
            .collect()
    }

    /// First nonzero entry in row-major order, as (row, col) 0-based.
    pub fn first_nonzero(&self) -> Option<(usize, usize)> {
        self.entries
            .iter()
            .position(|e| !e.is_zero())
            .map(|idx| (idx / self.cols, idx % self.cols))
    }

    /// Submatrix selected by 0-based row and column index slices.
    pub fn submatrix(&self, row_idx: &[usize], col_idx: &[usize]) -> RatMatrix {
        let mut entries = Vec::with_capacity(row_idx.len() * col_idx.len());
        for &r in row_idx {
            for &c in col_idx {
                entries.push(self.get(r, c).clone());
            }
        }
        RatMatrix {
            rows: row_idx.len(),
            cols: col_idx.len(),
            entries,
        }
    }

    pub fn direct_sum(blocks: &[RatMatrix]) -> Result<RatMatrix> {
        let n: usize = blocks.iter().map(|b| b.rows).sum();
        for b in blocks {
            b.require_square()?;
        }
        let mut out = RatMatrix {
            rows: n,
            cols: n,
            entries: vec![Rat::zero(); n * n],
        };
        let mut offset = 0;
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out.set(offset + i, offset + j, b.get(i, j).clone());
                }
            }
            offset += b.rows;
        }
        Ok(out)
    }

    /// Exact determinant by fraction-free Bareiss elimination.
    ///
    /// Each row is first scaled by the lcm of its denominators so elimination
    /// runs over integers; every interior division is exact.
    pub fn det(&self) -> Result<Rat> {
        let n = self.require_square()?;
        let mut m: Vec<Vec<BigInt>> = Vec::with_capacity(n);
        let mut denom_scale = BigInt::one();
        for i in 0..n {
            let mut row_lcm = BigInt::one();
            for j in 0..n {
                row_lcm = row_lcm.lcm(self.get(i, j).denom());
            }
            let row = (0..n)
                .map(|j| {
                    let e = self.get(i, j);
                    e.numer() * (&row_lcm / e.denom())
                })
                .collect();
            denom_scale *= row_lcm;
            m.push(row);
        }

        let mut sign = 1i32;
        let mut prev = BigInt::one();
        for k in 0..n {
            if m[k][k].is_zero() {
                let swap = (k + 1..n).find(|&r| !m[r][k].is_zero());
                match swap {
                    Some(r) => {
                        m.swap(k, r);
                        sign = -sign;
                    }
                    None => return Ok(Rat::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                    m[i][j] = num / &prev;
                }
                m[i][k] = BigInt::zero();
            }
            prev = m[k][k].clone();
        }

        let mut value = m[n - 1][n - 1].clone();
        if sign < 0 {
            value = -value;
        }
        Rat::new(value, denom_scale)
    }

    /// Exact inverse by Gauss–Jordan elimination over the rationals.
    pub fn inverse(&self) -> Result<RatMatrix> {
        let n = self.require_square()?;
        let mut work: Vec<Vec<Rat>> = (0..n)
            .map(|i| {
                let mut row: Vec<Rat> = (0..n).map(|j| self.get(i, j).clone()).collect();
                row.extend((0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }));
                row
            })
            .collect();

        for k in 0..n {
            let pivot_row = (k..n)
                .find(|&r| !work[r][k].is_zero())
                .ok_or(Error::SingularMatrix)?;
            work.swap(k, pivot_row);
            let pivot = work[k][k].clone();
            for e in work[k].iter_mut() {
                *e = &*e / &pivot;
            }
            for r in 0..n {
                if r == k || work[r][k].is_zero() {
                    continue;
                }
                let factor = work[r][k].clone();
                for c in 0..2 * n {
                    let sub = &factor * &work[k][c];
                    work[r][c] = &work[r][c] - &sub;
                }
            }
        }

        let entries = work
            .into_iter()
            .flat_map(|row| row.into_iter().skip(n))
            .collect();
        RatMatrix::new(n, n, entries)
    }
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RatMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl Serialize for RatMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("RatMatrix", 3)?;
        s.serialize_field("rows", &self.rows)?;
        s.serialize_field("cols", &self.cols)?;
        s.serialize_field("entries", &self.entries)?;
        s.end()
    }
}

#[derive(Deserialize)]
struct RatMatrixRaw {
    rows: usize,
    cols: usize,
    entries: Vec<Rat>,
}

impl<'de> Deserialize<'de> for RatMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let raw = RatMatrixRaw::deserialize(deserializer)?;
        RatMatrix::new(raw.rows, raw.cols, raw.entries).map_err(serde::de::Error::custom)
    }
}

/// Row/column selection for a minor, 1-based and strictly increasing.
#[derive(Clone, PartialEq, Eq, Serialize)]
pub struct MinorIndex {
    alpha: Vec<usize>,
    beta: Vec<usize>,
}

impl MinorIndex {
    pub fn new(alpha: Vec<usize>, beta: Vec<usize>) -> Result<Self> {
        if alpha.is_empty() || alpha.len() != beta.len() {
            return Err(Error::InvalidMinorIndex(format!(
                "row and column sets must be nonempty and of equal size, got {} and {}",
                alpha.len(),
                beta.len()
            )));
        }
        for set in [&alpha, &beta] {
            if set[0] == 0 {
                return Err(Error::InvalidMinorIndex("indices are 1-based".into()));
            }
            if set.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidMinorIndex(
                    "indices must be strictly increasing".into(),
                ));
            }
        }
        Ok(MinorIndex { alpha, beta })
    }

    pub fn principal(alpha: Vec<usize>) -> Result<Self> {
        Self::new(alpha.clone(), alpha)
    }

    pub fn alpha(&self) -> &[usize] {
        &self.alpha
    }

    pub fn beta(&self) -> &[usize] {
        &self.beta
    }

    pub fn order(&self) -> usize {
        self.alpha.len()
    }

    fn check_bounds(&self, matrix: &RatMatrix) -> Result<()> {
        if self.alpha.last().copied().unwrap_or(0) > matrix.rows()
            || self.beta.last().copied().unwrap_or(0) > matrix.cols()
        {
            return Err(Error::InvalidMinorIndex(format!(
                "index set {self:?} exceeds the {}x{} matrix",
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(())
    }
}

impl fmt::Debug for MinorIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?}|{:?}]", self.alpha, self.beta)
    }
}

#[derive(Deserialize)]
struct MinorIndexRaw {
    alpha: Vec<usize>,
    beta: Vec<usize>,
}

impl<'de> Deserialize<'de> for MinorIndex {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let raw = MinorIndexRaw::deserialize(deserializer)?;
        MinorIndex::new(raw.alpha, raw.beta).map_err(serde::de::Error::custom)
    }
}

/// det A[alpha|beta], computed exactly.
pub fn minor(matrix: &RatMatrix, index: &MinorIndex) -> Result<Rat> {
    index.check_bounds(matrix)?;
    let rows: Vec<usize> = index.alpha().iter().map(|&i| i - 1).collect();
    let cols: Vec<usize> = index.beta().iter().map(|&j| j - 1).collect();
    matrix.submatrix(&rows, &cols).det()
}

/// Outcome of evaluating both sides of the Cauchy–Binet identity.
#[derive(Clone, Debug, Serialize)]
pub struct CauchyBinetCheck {
    pub equal: bool,
    pub product_det: Rat,
    pub minor_sum: Rat,
}

/// Evaluates det(AB) and the sum over size-m column subsets of
/// det A[[m]|γ]·det B[γ|[m]] independently, and compares them.
pub fn cauchy_binet_check(a: &RatMatrix, b: &RatMatrix) -> Result<CauchyBinetCheck> {
    let m = a.rows();
    let n = a.cols();
    if b.rows() != n || b.cols() != m {
        return Err(Error::DimensionMismatch {
            context: format!(
                "expected shapes (m x n, n x m), got {}x{} and {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            ),
        });
    }
    if m > n {
        return Err(Error::DimensionMismatch {
            context: format!("require m <= n, got m={m}, n={n}"),
        });
    }

    let product_det = a.mul(b)?.det()?;

    let all_m: Vec<usize> = (0..m).collect();
    let mut minor_sum = Rat::zero();
    for gamma in (0..n).combinations(m) {
        let left = a.submatrix(&all_m, &gamma).det()?;
        if left.is_zero() {
            continue;
        }
        let right = b.submatrix(&gamma, &all_m).det()?;
        minor_sum = minor_sum + left * right;
    }

    Ok(CauchyBinetCheck {
        equal: product_det == minor_sum,
        product_det,
        minor_sum,
    })
}


#[cfg(test)]
mod tests {
    use super::test_support::det_cofactor;
    use super::*;
    use proptest::prelude::*;

    fn vandermonde3() -> RatMatrix {
        RatMatrix::from_int_rows(&[vec![1, 1, 1], vec![1, 2, 4], vec![1, 3, 9]])
    }

    #[test]
    fn identity_minor_is_one() {
        let idx = MinorIndex::new(vec![1, 2], vec![1, 2]).unwrap();
        assert_eq!(minor(&RatMatrix::identity(3), &idx).unwrap(), Rat::one());
    }

    #[test]
    fn two_by_two_minor() {
        let a = RatMatrix::from_int_rows(&[vec![2, 1], vec![1, 1]]);
        let idx = MinorIndex::new(vec![1, 2], vec![1, 2]).unwrap();
        assert_eq!(minor(&a, &idx).unwrap(), Rat::one());
    }

    #[test]
    fn vandermonde_determinant_matches_cofactor_oracle() {
        let v = vandermonde3();
        let idx = MinorIndex::new(vec![1, 2, 3], vec![1, 2, 3]).unwrap();
        assert_eq!(det_cofactor(&v), Rat::int(2));
        assert_eq!(minor(&v, &idx).unwrap(), Rat::int(2));
    }

    #[test]
    fn minor_rejects_bad_indices() {
        let a = RatMatrix::identity(2);
        assert!(MinorIndex::new(vec![1, 2], vec![1]).is_err());
        assert!(MinorIndex::new(vec![2, 1], vec![1, 2]).is_err());
        assert!(MinorIndex::new(vec![0], vec![1]).is_err());
        let idx = MinorIndex::new(vec![1, 3], vec![1, 2]).unwrap();
        assert!(minor(&a, &idx).is_err());
    }

    #[test]
    fn cauchy_binet_identity_pair() {
        let i2 = RatMatrix::identity(2);
        let check = cauchy_binet_check(&i2, &i2).unwrap();
        assert!(check.equal);
        assert_eq!(check.product_det, Rat::one());
        assert_eq!(check.minor_sum, Rat::one());
    }

    #[test]
    fn cauchy_binet_rectangular() {
        // Frozen from enumerating all 2-subsets of {1,2,3} by hand: both sides 3.
        let a = RatMatrix::from_int_rows(&[vec![1, 1, 0], vec![0, 1, 1]]);
        let b = a.transpose();
        let check = cauchy_binet_check(&a, &b).unwrap();
        assert!(check.equal);
        assert_eq!(check.minor_sum, Rat::int(3));
    }

    #[test]
    fn cauchy_binet_square_with_identity() {
        let a = RatMatrix::from_int_rows(&[vec![1, 2], vec![3, 4]]);
        let check = cauchy_binet_check(&a, &RatMatrix::identity(2)).unwrap();
        assert!(check.equal);
        assert_eq!(check.product_det, Rat::int(-2));
    }

    #[test]
    fn cauchy_binet_shape_errors() {
        let a = RatMatrix::from_int_rows(&[vec![1, 1, 0], vec![0, 1, 1]]);
        assert!(cauchy_binet_check(&a, &a).is_err());
        let tall = a.transpose();
        let wide = RatMatrix::identity(3).submatrix(&[0, 1], &[0, 1, 2]);
        assert!(cauchy_binet_check(&tall, &wide).is_err());
    }

    #[test]
    fn inverse_round_trip() {
        let a = RatMatrix::from_int_rows(&[vec![2, 1], vec![1, 1]]);
        let inv = a.inverse().unwrap();
        assert_eq!(
            inv,
            RatMatrix::from_rows(vec![
                vec![Rat::int(1), Rat::int(-1)],
                vec![Rat::int(-1), Rat::int(2)],
            ])
            .unwrap()
        );
        assert!(a.mul(&inv).unwrap().is_identity());
        assert!(RatMatrix::from_int_rows(&[vec![1, 1], vec![1, 1]])
            .inverse()
            .is_err());
    }

    #[test]
    fn serde_matrix_accepts_mixed_entries() {
        let json = r#"{"rows":2,"cols":2,"entries":[2,"1/2","-3",1]}"#;
        let m: RatMatrix = serde_json::from_str(json).unwrap();
        assert_eq!(m.get(0, 1), &Rat::ratio(1, 2));
        let back = serde_json::to_string(&m).unwrap();
        let reparsed: RatMatrix = serde_json::from_str(&back).unwrap();
        assert_eq!(reparsed, m);
    }

    #[test]
    fn serde_matrix_rejects_bad_count() {
        let json = r#"{"rows":2,"cols":2,"entries":["1","2","3"]}"#;
        assert!(serde_json::from_str::<RatMatrix>(json).is_err());
    }

    fn small_rat() -> impl Strategy<Value = Rat> {
        (-6i64..=6, 1i64..=4).prop_map(|(p, q)| Rat::ratio(p, q))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn bareiss_matches_cofactor_oracle(
            n in 1usize..=4,
            seed in proptest::collection::vec(small_rat(), 16),
        ) {
            let entries: Vec<Rat> = seed.into_iter().take(n * n).collect();
            prop_assume!(entries.len() == n * n);
            let m = RatMatrix::new(n, n, entries).unwrap();
            prop_assert_eq!(m.det().unwrap(), det_cofactor(&m));
        }

        #[test]
        fn transpose_preserves_det(
            n in 1usize..=4,
            seed in proptest::collection::vec(small_rat(), 16),
        ) {
            let entries: Vec<Rat> = seed.into_iter().take(n * n).collect();
            prop_assume!(entries.len() == n * n);
            let m = RatMatrix::new(n, n, entries).unwrap();
            prop_assert_eq!(m.det().unwrap(), m.transpose().det().unwrap());
        }
    }
}
