//! Centralizers and distinguished submonoids of the invertible totally
//! nonnegative matrices.
//!
//! The centralizer of a positive diagonal matrix D inside the ITN monoid is a
//! direct sum of smaller ITN monoids, one block per maximal run of equal
//! consecutive diagonal entries. Equal values in *non-adjacent* runs do not
//! merge blocks: total nonnegativity forces those off-diagonal blocks to
//! vanish. `block_membership` decides membership purely from that block
//! picture and must agree with the direct commutation test `in_centralizer`
//! on every input.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classify::is_itn_fast;
use crate::error::{Error, Result};
use crate::matrix::RatMatrix;
use crate::rat::Rat;

/// Ordered composition (n_1, …, n_k) of n describing a block structure.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct CentralizerShape {
    composition: Vec<usize>,
}

impl CentralizerShape {
    pub fn new(composition: Vec<usize>) -> Result<Self> {
        if composition.is_empty() || composition.iter().any(|&b| b == 0) {
            return Err(Error::InvalidParameter(
                "composition parts must be positive".into(),
            ));
        }
        Ok(CentralizerShape { composition })
    }

    pub fn composition(&self) -> &[usize] {
        &self.composition
    }

    pub fn total(&self) -> usize {
        self.composition.iter().sum()
    }

    /// Half-open 0-based index ranges of the blocks.
    pub fn block_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut ranges = Vec::with_capacity(self.composition.len());
        let mut start = 0;
        for &len in &self.composition {
            ranges.push(start..start + len);
            start += len;
        }
        ranges
    }
}

impl<'de> Deserialize<'de> for CentralizerShape {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            composition: Vec<usize>,
        }
        let wire = Wire::deserialize(deserializer)?;
        CentralizerShape::new(wire.composition).map_err(serde::de::Error::custom)
    }
}

fn require_positive_diagonal(d: &RatMatrix) -> Result<Vec<Rat>> {
    d.require_square()?;
    if !d.is_diagonal() {
        return Err(Error::NotPositiveDiagonal("matrix is not diagonal".into()));
    }
    let diag = d.diagonal();
    if let Some(bad) = diag.iter().find(|v| !v.is_positive()) {
        return Err(Error::NotPositiveDiagonal(format!(
            "diagonal entry {bad} is not positive"
        )));
    }
    Ok(diag)
}

/// Groups maximal runs of equal consecutive diagonal entries into the
/// composition describing C(D) as a direct sum of ITN blocks.
pub fn centralizer_shape(d: &RatMatrix) -> Result<CentralizerShape> {
    let diag = require_positive_diagonal(d)?;
    let mut composition = Vec::new();
    let mut run = 1;
    for i in 1..diag.len() {
        if diag[i] == diag[i - 1] {
            run += 1;
        } else {
            composition.push(run);
            run = 1;
        }
    }
    composition.push(run);
    CentralizerShape::new(composition)
}

/// Direct membership test for the centralizer of A within the ITN monoid:
/// X must be ITN and commute with A exactly.
pub fn in_centralizer(a: &RatMatrix, x: &RatMatrix) -> Result<bool> {
    let n = a.require_square()?;
    if x.rows() != n || x.cols() != n {
        return Err(Error::DimensionMismatch {
            context: format!(
                "centralizer test needs matching sizes, got {n} and {}",
                x.rows()
            ),
        });
    }
    if !is_itn_fast(x)? {
        return Ok(false);
    }
    Ok(a.mul(x)? == x.mul(a)?)
}

/// Predicts `in_centralizer(D, X)` for positive diagonal D from the block
/// pattern alone: X must vanish off the diagonal blocks of the shape of D and
/// every diagonal block must itself be ITN.
pub fn block_membership(d: &RatMatrix, x: &RatMatrix) -> Result<bool> {
    let diag = require_positive_diagonal(d)?;
    let n = diag.len();
    if x.rows() != n || x.cols() != n {
        return Err(Error::DimensionMismatch {
            context: format!(
                "block membership needs matching sizes, got {n} and {}",
                x.rows()
            ),
        });
    }
    let shape = centralizer_shape(d)?;
    let ranges = shape.block_ranges();

    for (bi, ri) in ranges.iter().enumerate() {
        for (bj, rj) in ranges.iter().enumerate() {
            if bi == bj {
                continue;
            }
            for r in ri.clone() {
                for c in rj.clone() {
                    if !x.get(r, c).is_zero() {
                        return Ok(false);
                    }
                }
            }
        }
    }

    for range in ranges {
        let idx: Vec<usize> = range.collect();
        let block = x.submatrix(&idx, &idx);
        if !is_itn_fast(&block)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A positive diagonal matrix whose only equal adjacent pair sits at
/// positions (k, k+1); its centralizer isolates one embedded 2x2 ITN block.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AdjacentPairDiagonal {
    n: usize,
    k: usize,
    matrix: RatMatrix,
}

impl AdjacentPairDiagonal {
    /// The concrete representative with (j,j) entry j except that position
    /// k+1 repeats k.
    pub fn standard(n: usize, k: usize) -> Result<Self> {
        if n < 2 || k == 0 || k >= n {
            return Err(Error::InvalidParameter(format!(
                "need n >= 2 and 1 <= k <= n-1, got n={n}, k={k}"
            )));
        }
        let entries: Vec<Rat> = (1..=n)
            .map(|j| {
                if j == k + 1 {
                    Rat::int(k as i64)
                } else {
                    Rat::int(j as i64)
                }
            })
            .collect();
        Ok(AdjacentPairDiagonal {
            n,
            k,
            matrix: RatMatrix::from_diagonal(&entries),
        })
    }

    /// Accepts any positive diagonal with exactly one equal adjacent pair.
    pub fn from_matrix(matrix: &RatMatrix) -> Result<Self> {
        let diag = require_positive_diagonal(matrix)?;
        let n = diag.len();
        let mut pair = None;
        for i in 1..n {
            if diag[i] == diag[i - 1] {
                if pair.is_some() {
                    return Err(Error::InvalidParameter(
                        "more than one equal adjacent diagonal pair".into(),
                    ));
                }
                pair = Some(i);
            }
        }
        let k = pair.ok_or_else(|| {
            Error::InvalidParameter("no equal adjacent diagonal pair".into())
        })?;
        Ok(AdjacentPairDiagonal {
            n,
            k,
            matrix: matrix.clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn matrix(&self) -> &RatMatrix {
        &self.matrix
    }
}

/// aI_{k-1} ⊕ X ⊕ bI_{n-k-1} with X a non-diagonal 2x2 ITN block: the
/// generic element of the semigroup pinned by an adjacent-pair diagonal.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ScalarPaddedBlock {
    n: usize,
    k: usize,
    a: Rat,
    b: Rat,
    block: RatMatrix,
}

impl ScalarPaddedBlock {
    pub fn new(n: usize, k: usize, a: Rat, b: Rat, block: RatMatrix) -> Result<Self> {
        if n < 2 || k == 0 || k >= n {
            return Err(Error::InvalidParameter(format!(
                "need n >= 2 and 1 <= k <= n-1, got n={n}, k={k}"
            )));
        }
        if !a.is_positive() || !b.is_positive() {
            return Err(Error::InvalidParameter(
                "padding scalars must be positive".into(),
            ));
        }
        if block.rows() != 2 || block.cols() != 2 {
            return Err(Error::InvalidParameter("block must be 2x2".into()));
        }
        if block.is_diagonal() {
            return Err(Error::InvalidParameter("block must not be diagonal".into()));
        }
        if !is_itn_fast(&block)? {
            return Err(Error::NotItn {
                reason: "embedded block must be ITN".into(),
            });
        }
        Ok(ScalarPaddedBlock { n, k, a, b, block })
    }

    pub fn to_matrix(&self) -> RatMatrix {
        let mut blocks = Vec::new();
        if self.k > 1 {
            blocks.push(RatMatrix::from_diagonal(&vec![self.a.clone(); self.k - 1]));
        }
        blocks.push(self.block.clone());
        if self.n > self.k + 1 {
            blocks.push(RatMatrix::from_diagonal(&vec![
                self.b.clone();
                self.n - self.k - 1
            ]));
        }
        RatMatrix::direct_sum(&blocks).expect("blocks are square")
    }

    /// Seeded random element; always non-diagonal ITN in the 2x2 block.
    pub fn random<R: Rng>(rng: &mut R, n: usize, k: usize) -> Result<Self> {
        let a = Rat::ratio(rng.gen_range(1..=6), rng.gen_range(1..=4));
        let b = Rat::ratio(rng.gen_range(1..=6), rng.gen_range(1..=4));
        let lower = rng.gen_bool(0.5);
        let x = Rat::ratio(rng.gen_range(1..=6), rng.gen_range(1..=4));
        let p = Rat::ratio(rng.gen_range(1..=6), rng.gen_range(1..=4));
        let q = Rat::ratio(rng.gen_range(1..=6), rng.gen_range(1..=4));
        // p·q on the diagonal with one positive off-diagonal entry keeps the
        // block ITN (entries nonnegative, determinant = pq > 0).
        let block = if lower {
            RatMatrix::from_rows(vec![vec![p, Rat::zero()], vec![x, q]]).unwrap()
        } else {
            RatMatrix::from_rows(vec![vec![p, x], vec![Rat::zero(), q]]).unwrap()
        };
        ScalarPaddedBlock::new(n, k, a, b, block)
    }
}

/// Predicted commutation of the embedded-block semigroups at positions i and
/// j: every pair commutes iff the blocks are non-adjacent (|i-j| > 1).
pub fn padded_blocks_commute(n: usize, i: usize, j: usize) -> Result<bool> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!(
            "commutation pattern needs n >= 4, got {n}"
        )));
    }
    if i == 0 || i >= n || j == 0 || j >= n {
        return Err(Error::InvalidParameter(format!(
            "block positions must lie in 1..={}, got i={i}, j={j}",
            n - 1
        )));
    }
    Ok(i.abs_diff(j) > 1)
}

/// Position (1-based) and value of a strictly negative entry of A^{-1}.
#[derive(Clone, Debug, Serialize)]
pub struct InverseNegativeEntry {
    pub row: usize,
    pub col: usize,
    pub value: Rat,
}

/// Every non-diagonal ITN matrix has an inverse with a negative entry — this
/// is what confines subgroups of the ITN monoid to the positive diagonals.
/// Returns the first such entry in row-major order.
pub fn maximal_subgroup_witness(a: &RatMatrix) -> Result<InverseNegativeEntry> {
    let n = a.require_square()?;
    if a.is_diagonal() {
        return Err(Error::DiagonalInput);
    }
    if !is_itn_fast(a)? {
        return Err(Error::NotItn {
            reason: "witness search requires an ITN input".into(),
        });
    }
    let inv = a.inverse()?;
    for r in 0..n {
        for c in 0..n {
            if inv.get(r, c).is_negative() {
                return Ok(InverseNegativeEntry {
                    row: r + 1,
                    col: c + 1,
                    value: inv.get(r, c).clone(),
                });
            }
        }
    }
    unreachable!("a non-diagonal ITN inverse always has a negative entry")
}

/// Whether a non-diagonal 2x2 ITN matrix is of the one-sided elementary form
/// aI + bE_{12} or aI + bE_{21} (a, b > 0) — exactly the matrices whose
/// centralizer absorbs every diagonal conjugate DAD^{-1}.
pub fn two_by_two_conjugation_test(a: &RatMatrix) -> Result<bool> {
    if a.rows() != 2 || a.cols() != 2 {
        return Err(Error::InvalidParameter("test is specific to 2x2".into()));
    }
    if a.is_diagonal() {
        return Err(Error::InvalidParameter(
            "test requires a non-diagonal matrix".into(),
        ));
    }
    if !is_itn_fast(a)? {
        return Err(Error::NotItn {
            reason: "test requires an ITN input".into(),
        });
    }
    let equal_diag = a.get(0, 0) == a.get(1, 1);
    let one_sided = a.get(0, 1).is_zero() || a.get(1, 0).is_zero();
    Ok(equal_diag && one_sided)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::random_itn;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(entries: &[i64]) -> RatMatrix {
        let d: Vec<Rat> = entries.iter().map(|&v| Rat::int(v)).collect();
        RatMatrix::from_diagonal(&d)
    }

    #[test]
    fn shape_groups_adjacent_runs() {
        assert_eq!(
            centralizer_shape(&diag(&[2, 2, 3])).unwrap().composition(),
            &[2, 1]
        );
        assert_eq!(
            centralizer_shape(&diag(&[1, 2, 3])).unwrap().composition(),
            &[1, 1, 1]
        );
        assert_eq!(
            centralizer_shape(&diag(&[5, 5, 5, 5])).unwrap().composition(),
            &[4]
        );
        // Equal but non-adjacent values stay in separate blocks.
        assert_eq!(
            centralizer_shape(&diag(&[2, 3, 2])).unwrap().composition(),
            &[1, 1, 1]
        );
    }

    #[test]
    fn shape_rejects_bad_input() {
        assert!(centralizer_shape(&diag(&[1, -2])).is_err());
        assert!(
            centralizer_shape(&RatMatrix::from_int_rows(&[vec![1, 1], vec![0, 1]])).is_err()
        );
    }

    #[test]
    fn identity_always_centralizes() {
        let a = random_itn(4, 7, false);
        assert!(in_centralizer(&a, &RatMatrix::identity(4)).unwrap());
    }

    #[test]
    fn one_sided_elementary_centralizer() {
        // aI + bE12 commutes with xI + yE12.
        let a = RatMatrix::from_rows(vec![
            vec![Rat::int(3), Rat::int(2)],
            vec![Rat::zero(), Rat::int(3)],
        ])
        .unwrap();
        let x = RatMatrix::from_rows(vec![
            vec![Rat::int(5), Rat::ratio(1, 2)],
            vec![Rat::zero(), Rat::int(5)],
        ])
        .unwrap();
        assert!(in_centralizer(&a, &x).unwrap());
    }

    #[test]
    fn non_commuting_pair_detected() {
        let d = diag(&[1, 2]);
        let x = RatMatrix::from_int_rows(&[vec![1, 1], vec![0, 1]]);
        assert!(!in_centralizer(&d, &x).unwrap());
    }

    #[test]
    fn block_membership_examples() {
        let d = diag(&[2, 2, 3]);
        let inside =
            RatMatrix::from_int_rows(&[vec![1, 1, 0], vec![1, 2, 0], vec![0, 0, 3]]);
        assert!(block_membership(&d, &inside).unwrap());
        assert!(in_centralizer(&d, &inside).unwrap());

        let forbidden =
            RatMatrix::from_int_rows(&[vec![1, 1, 1], vec![1, 2, 0], vec![0, 0, 3]]);
        assert!(!block_membership(&d, &forbidden).unwrap());
        assert!(!in_centralizer(&d, &forbidden).unwrap());

        // Scalar diagonal: membership reduces to the ITN certificate.
        let scalar = RatMatrix::identity(3);
        let itn = random_itn(3, 21, false);
        assert!(block_membership(&scalar, &itn).unwrap());
        assert!(in_centralizer(&scalar, &itn).unwrap());
    }

    #[test]
    fn block_membership_matches_direct_test_on_random_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 3..=5 {
            for trial in 0..60 {
                let diag_entries: Vec<Rat> =
                    (0..n).map(|_| Rat::int(rng.gen_range(1..=3))).collect();
                let d = RatMatrix::from_diagonal(&diag_entries);
                let x = match trial % 3 {
                    0 => random_itn(n, rng.gen(), false),
                    1 => {
                        // Block-structured matrix adapted to the shape of d.
                        let shape = centralizer_shape(&d).unwrap();
                        let blocks: Vec<RatMatrix> = shape
                            .composition()
                            .iter()
                            .map(|&b| random_itn(b, rng.gen(), false))
                            .collect();
                        RatMatrix::direct_sum(&blocks).unwrap()
                    }
                    _ => {
                        // Near-block adversary: flip one entry of a block matrix.
                        let shape = centralizer_shape(&d).unwrap();
                        let blocks: Vec<RatMatrix> = shape
                            .composition()
                            .iter()
                            .map(|&b| random_itn(b, rng.gen(), false))
                            .collect();
                        let mut m = RatMatrix::direct_sum(&blocks).unwrap();
                        let r = rng.gen_range(0..n);
                        let c = rng.gen_range(0..n);
                        m.set(r, c, Rat::int(rng.gen_range(0..=2)));
                        m
                    }
                };
                assert_eq!(
                    block_membership(&d, &x).unwrap(),
                    in_centralizer(&d, &x).unwrap(),
                    "disagreement for d={d:?}, x={x:?}"
                );
            }
        }
    }

    #[test]
    fn adjacent_pair_diagonal_construction() {
        let d = AdjacentPairDiagonal::standard(4, 2).unwrap();
        assert_eq!(
            d.matrix().diagonal(),
            vec![Rat::int(1), Rat::int(2), Rat::int(2), Rat::int(4)]
        );
        assert_eq!(
            centralizer_shape(d.matrix()).unwrap().composition(),
            &[1, 2, 1]
        );

        let general = diag(&[3, 7, 7, 9]);
        let parsed = AdjacentPairDiagonal::from_matrix(&general).unwrap();
        assert_eq!(parsed.k(), 2);

        assert!(AdjacentPairDiagonal::from_matrix(&diag(&[1, 2, 3])).is_err());
        assert!(AdjacentPairDiagonal::from_matrix(&diag(&[2, 2, 2])).is_err());
    }

    #[test]
    fn commutation_pattern_predicate() {
        assert!(padded_blocks_commute(4, 1, 3).unwrap());
        assert!(!padded_blocks_commute(4, 1, 2).unwrap());
        assert!(!padded_blocks_commute(5, 2, 2).unwrap());
        assert!(padded_blocks_commute(3, 1, 2).is_err());
        assert!(padded_blocks_commute(4, 0, 2).is_err());
    }

    #[test]
    fn distant_blocks_commute_and_adjacent_blocks_find_witnesses() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for n in 4..=6 {
            for i in 1..n {
                for j in 1..n {
                    let expected = padded_blocks_commute(n, i, j).unwrap();
                    if expected {
                        for _ in 0..20 {
                            let x = ScalarPaddedBlock::random(&mut rng, n, i).unwrap();
                            let y = ScalarPaddedBlock::random(&mut rng, n, j).unwrap();
                            let (mx, my) = (x.to_matrix(), y.to_matrix());
                            assert_eq!(mx.mul(&my).unwrap(), my.mul(&mx).unwrap());
                        }
                    } else if i.abs_diff(j) == 1 {
                        let mut found = false;
                        for _ in 0..50 {
                            let x = ScalarPaddedBlock::random(&mut rng, n, i).unwrap();
                            let y = ScalarPaddedBlock::random(&mut rng, n, j).unwrap();
                            let (mx, my) = (x.to_matrix(), y.to_matrix());
                            if mx.mul(&my).unwrap() != my.mul(&mx).unwrap() {
                                found = true;
                                break;
                            }
                        }
                        assert!(found, "no witness for n={n}, i={i}, j={j}");
                    }
                }
            }
        }
    }

    #[test]
    fn witness_examples() {
        let w = maximal_subgroup_witness(&RatMatrix::from_int_rows(&[
            vec![1, 1],
            vec![0, 1],
        ]))
        .unwrap();
        assert_eq!((w.row, w.col), (1, 2));
        assert_eq!(w.value, Rat::int(-1));

        let w = maximal_subgroup_witness(&RatMatrix::from_int_rows(&[
            vec![2, 1],
            vec![1, 1],
        ]))
        .unwrap();
        assert_eq!((w.row, w.col), (1, 2));
        assert_eq!(w.value, Rat::int(-1));

        assert!(matches!(
            maximal_subgroup_witness(&diag(&[2, 3])),
            Err(Error::DiagonalInput)
        ));
        assert!(maximal_subgroup_witness(&RatMatrix::from_int_rows(&[
            vec![1, 1],
            vec![1, 1]
        ]))
        .is_err());
    }

    #[test]
    fn witness_exists_for_random_non_diagonal_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for n in 2..=6 {
            let mut count = 0;
            while count < 40 {
                let a = random_itn(n, rng.gen(), false);
                if a.is_diagonal() {
                    continue;
                }
                count += 1;
                let w = maximal_subgroup_witness(&a).unwrap();
                assert!(w.value.is_negative());
            }
        }
    }

    #[test]
    fn conjugation_form_test() {
        let upper = RatMatrix::from_rows(vec![
            vec![Rat::int(3), Rat::int(2)],
            vec![Rat::zero(), Rat::int(3)],
        ])
        .unwrap();
        assert!(two_by_two_conjugation_test(&upper).unwrap());

        let lower = RatMatrix::from_rows(vec![
            vec![Rat::int(5), Rat::zero()],
            vec![Rat::one(), Rat::int(5)],
        ])
        .unwrap();
        assert!(two_by_two_conjugation_test(&lower).unwrap());

        let generic = RatMatrix::from_int_rows(&[vec![2, 1], vec![1, 1]]);
        assert!(!two_by_two_conjugation_test(&generic).unwrap());

        assert!(two_by_two_conjugation_test(&diag(&[1, 2])).is_err());
    }

    #[test]
    fn conjugation_test_matches_sampling() {
        // Cross-validate the form predicate against direct conjugation checks.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut seen_true = 0;
        let mut seen_false = 0;
        for _ in 0..200 {
            let a = random_itn(2, rng.gen(), false);
            if a.is_diagonal() {
                continue;
            }
            let predicted = two_by_two_conjugation_test(&a).unwrap();
            let mut all_in = true;
            for _ in 0..50 {
                let d = RatMatrix::from_diagonal(&[
                    Rat::ratio(rng.gen_range(1..=9), rng.gen_range(1..=4)),
                    Rat::ratio(rng.gen_range(1..=9), rng.gen_range(1..=4)),
                ]);
                let conj = d.mul(&a).unwrap().mul(&d.inverse().unwrap()).unwrap();
                if !in_centralizer(&a, &conj).unwrap() {
                    all_in = false;
                    break;
                }
            }
            assert_eq!(predicted, all_in, "mismatch for {a:?}");
            if predicted {
                seen_true += 1;
            } else {
                seen_false += 1;
            }
        }
        assert!(seen_true > 0 && seen_false > 0);
    }
}
