//! Membership tests for the totally positive and invertible totally
//! nonnegative matrix classes, with exact witnesses.
//!
//! `classify_full` is the ground-truth oracle: it enumerates every minor.
//! `is_tp_fekete` (contiguous minors only) and `is_itn_fast` (Neville
//! elimination) are the polynomial-time routes; the test batteries check them
//! against the oracle on every kind of sample.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor;
use crate::matrix::{minor, MinorIndex, RatMatrix};
use crate::rat::Rat;

/// Hard cap on full minor enumeration: sizes beyond this make the
/// ΣₖC(n,k)² minor count impractical.
pub const MINOR_ENUMERATION_CAP: usize = 12;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum ClassLabel {
    #[serde(rename = "TP")]
    Tp,
    #[serde(rename = "ITN_not_TP")]
    ItnNotTp,
    #[serde(rename = "TN_singular")]
    TnSingular,
    #[serde(rename = "NOT_TN")]
    NotTn,
}

impl ClassLabel {
    pub fn is_tn(self) -> bool {
        self != ClassLabel::NotTn
    }

    pub fn is_itn(self) -> bool {
        matches!(self, ClassLabel::Tp | ClassLabel::ItnNotTp)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Tp => "TP",
            ClassLabel::ItnNotTp => "ITN_not_TP",
            ClassLabel::TnSingular => "TN_singular",
            ClassLabel::NotTn => "NOT_TN",
        }
    }
}

/// A minor pinned to a classification outcome: the first negative minor for
/// NOT_TN, the first zero minor otherwise.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Witness {
    #[serde(flatten)]
    pub index: MinorIndex,
    pub value: Rat,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certificate {
    pub label: ClassLabel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

/// Classifies a square matrix by enumerating all of its minors, in order of
/// minor size and then lexicographically. Deterministic witnesses: the first
/// negative minor proves NOT_TN; otherwise the first zero minor is reported
/// for the non-TP classes.
pub fn classify_full(matrix: &RatMatrix) -> Result<Certificate> {
    let n = matrix.require_square()?;
    if n > MINOR_ENUMERATION_CAP {
        return Err(Error::DimensionCap {
            n,
            cap: MINOR_ENUMERATION_CAP,
        });
    }

    let mut first_zero: Option<Witness> = None;
    let mut det_value = Rat::zero();
    for k in 1..=n {
        for alpha in (1..=n).combinations(k) {
            for beta in (1..=n).combinations(k) {
                let index = MinorIndex::new(alpha.clone(), beta)?;
                let value = minor(matrix, &index)?;
                if value.is_negative() {
                    return Ok(Certificate {
                        label: ClassLabel::NotTn,
                        witness: Some(Witness { index, value }),
                    });
                }
                if k == n {
                    det_value = value.clone();
                }
                if value.is_zero() && first_zero.is_none() {
                    first_zero = Some(Witness { index, value });
                }
            }
        }
    }

    Ok(match first_zero {
        None => Certificate {
            label: ClassLabel::Tp,
            witness: None,
        },
        Some(witness) => Certificate {
            label: if det_value.is_positive() {
                ClassLabel::ItnNotTp
            } else {
                ClassLabel::TnSingular
            },
            witness: Some(witness),
        },
    })
}

/// Fekete's criterion: a square matrix is totally positive iff all its
/// contiguous (solid) minors are positive. Tests only minors whose row and
/// column index sets are consecutive runs.
pub fn is_tp_fekete(matrix: &RatMatrix) -> Result<bool> {
    let n = matrix.require_square()?;
    for k in 1..=n {
        for i in 0..=(n - k) {
            for j in 0..=(n - k) {
                let rows: Vec<usize> = (i..i + k).collect();
                let cols: Vec<usize> = (j..j + k).collect();
                if !matrix.submatrix(&rows, &cols).det()?.is_positive() {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Fast invertible-TN test: Neville elimination must complete with
/// nonnegative multipliers and positive final pivots.
pub fn is_itn_fast(matrix: &RatMatrix) -> Result<bool> {
    matrix.require_square()?;
    match factor::factorize(matrix) {
        Ok(_) => Ok(true),
        Err(Error::NotItn { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PrincipalMinorCheck {
    pub all_positive: bool,
    pub failure: Option<Witness>,
}

/// Checks det A[α|α] > 0 for every nonempty α, reporting the first failure
/// in (size, lexicographic) order.
pub fn principal_minors_positive(matrix: &RatMatrix) -> Result<PrincipalMinorCheck> {
    let n = matrix.require_square()?;
    if n > MINOR_ENUMERATION_CAP {
        return Err(Error::DimensionCap {
            n,
            cap: MINOR_ENUMERATION_CAP,
        });
    }
    for k in 1..=n {
        for alpha in (1..=n).combinations(k) {
            let index = MinorIndex::principal(alpha)?;
            let value = minor(matrix, &index)?;
            if !value.is_positive() {
                return Ok(PrincipalMinorCheck {
                    all_positive: false,
                    failure: Some(Witness { index, value }),
                });
            }
        }
    }
    Ok(PrincipalMinorCheck {
        all_positive: true,
        failure: None,
    })
}

/// The Gaussian-kernel matrix Q(q) with entries q^{(i-j)^2}, a totally
/// positive approximation of the identity for 0 < q < 1. The result is
/// certified by full minor enumeration before it is returned.
pub fn tp_approx_identity(n: usize, q: &Rat) -> Result<RatMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    if !q.is_positive() || q >= &Rat::one() {
        return Err(Error::InvalidParameter(format!(
            "base must satisfy 0 < q < 1, got {q}"
        )));
    }
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let diff = i as i64 - j as i64;
            row.push(q.pow(diff * diff)?);
        }
        rows.push(row);
    }
    let matrix = RatMatrix::from_rows(rows)?;
    let cert = classify_full(&matrix)?;
    if cert.label != ClassLabel::Tp {
        return Err(Error::NotTp {
            reason: format!(
                "Gaussian kernel matrix failed certification with label {}",
                cert.label.as_str()
            ),
        });
    }
    Ok(matrix)
}

const PERTURB_MAX_HALVINGS: u32 = 64;

/// Totally positive perturbation of an invertible TN matrix: B = Q(q)·A·Q(q)
/// with q halved from 1/2 until the entrywise distance to A drops below
/// `eps`. The result is certified totally positive before it is returned.
pub fn whitney_perturb(matrix: &RatMatrix, eps: &Rat) -> Result<RatMatrix> {
    let n = matrix.require_square()?;
    if !eps.is_positive() {
        return Err(Error::InvalidParameter(format!(
            "perturbation radius must be positive, got {eps}"
        )));
    }
    if !is_itn_fast(matrix)? {
        return Err(Error::NotItn {
            reason: "perturbation input must be invertible totally nonnegative".into(),
        });
    }

    let mut q = Rat::ratio(1, 2);
    for _ in 0..PERTURB_MAX_HALVINGS {
        let kernel = tp_approx_identity(n, &q)?;
        let candidate = kernel.mul(matrix)?.mul(&kernel)?;
        if &candidate.max_abs_diff(matrix)? < eps {
            if !is_tp_fekete(&candidate)? {
                return Err(Error::NotTp {
                    reason: "perturbed matrix failed total-positivity certification".into(),
                });
            }
            return Ok(candidate);
        }
        q = q * Rat::ratio(1, 2);
    }
    Err(Error::PerturbationStalled {
        iterations: PERTURB_MAX_HALVINGS,
    })
}
