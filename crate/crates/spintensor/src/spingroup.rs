//! The matrix groups behind frame transitions: unimodular complex 2x2
//! matrices, proper orthochronous Lorentz matrices, and the explicit
//! two-to-one covering homomorphism between them.
//!
//! Matrices carry [`ScalarExpr`] entries throughout so constant matrices and
//! coordinate-dependent transition matrices share one code path.

use std::fmt;

use thiserror::Error;

use crate::algebra::{GaussianRational, ScalarExpr};

#[derive(Debug, Error)]
pub enum SpinGroupError {
    #[error("matrix is not unimodular: det = {det}")]
    NotUnimodular { det: String },
    #[error("matrix determinant is not a nonzero constant: det = {det}")]
    NonConstantDeterminant { det: String },
    #[error("matrix does not preserve the Minkowski metric")]
    NotLorentz,
    #[error("matrix is not orthochronous: entry(0,0) = {entry}")]
    NotOrthochronous { entry: String },
}

/// Dense square matrix of exact scalar expressions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat<const N: usize> {
    pub e: [[ScalarExpr; N]; N],
}

impl<const N: usize> Mat<N> {
    pub fn from_fn(mut f: impl FnMut(usize, usize) -> ScalarExpr) -> Self {
        Mat {
            e: std::array::from_fn(|i| std::array::from_fn(|j| f(i, j))),
        }
    }

    pub fn identity() -> Self {
        Mat::from_fn(|i, j| {
            if i == j {
                ScalarExpr::one()
            } else {
                ScalarExpr::zero()
            }
        })
    }

    pub fn zero() -> Self {
        Mat::from_fn(|_, _| ScalarExpr::zero())
    }

    /// Entry with row = upper index, column = lower index.
    pub fn at(&self, upper: usize, lower: usize) -> &ScalarExpr {
        &self.e[upper][lower]
    }

    pub fn mul(&self, rhs: &Mat<N>) -> Mat<N> {
        Mat::from_fn(|i, j| {
            let mut acc = ScalarExpr::zero();
            for k in 0..N {
                acc.add_assign(&(&self.e[i][k] * &rhs.e[k][j]));
            }
            acc
        })
    }

    pub fn transpose(&self) -> Mat<N> {
        Mat::from_fn(|i, j| self.e[j][i].clone())
    }

    /// Entrywise component conjugation.
    pub fn bar(&self) -> Mat<N> {
        Mat::from_fn(|i, j| self.e[i][j].bar())
    }

    pub fn neg(&self) -> Mat<N> {
        Mat::from_fn(|i, j| -&self.e[i][j])
    }

    pub fn sub(&self, rhs: &Mat<N>) -> Mat<N> {
        Mat::from_fn(|i, j| &self.e[i][j] - &rhs.e[i][j])
    }

    pub fn scale(&self, c: &GaussianRational) -> Mat<N> {
        Mat::from_fn(|i, j| self.e[i][j].scale(c))
    }

    pub fn is_identity(&self) -> bool {
        *self == Mat::identity()
    }

    pub fn is_zero(&self) -> bool {
        self.e.iter().all(|row| row.iter().all(ScalarExpr::is_zero))
    }

    /// Pointwise commutator `self * rhs - rhs * self`.
    pub fn commutator(&self, rhs: &Mat<N>) -> Mat<N> {
        self.mul(rhs).sub(&rhs.mul(self))
    }
}

impl Mat<2> {
    pub fn det(&self) -> ScalarExpr {
        &(&self.e[0][0] * &self.e[1][1]) - &(&self.e[0][1] * &self.e[1][0])
    }

    /// Adjugate; equals the inverse exactly when `det == 1`.
    pub fn adjugate(&self) -> Mat<2> {
        Mat {
            e: [
                [self.e[1][1].clone(), -&self.e[0][1]],
                [-&self.e[1][0], self.e[0][0].clone()],
            ],
        }
    }
}

impl Mat<4> {
    pub fn det(&self) -> ScalarExpr {
        let mut acc = ScalarExpr::zero();
        for j in 0..4 {
            let minor = self.minor(0, j);
            let term = &self.e[0][j] * &minor;
            if j % 2 == 0 {
                acc.add_assign(&term);
            } else {
                acc.sub_assign(&term);
            }
        }
        acc
    }

    fn minor(&self, row: usize, col: usize) -> ScalarExpr {
        let rows: Vec<usize> = (0..4).filter(|&r| r != row).collect();
        let cols: Vec<usize> = (0..4).filter(|&c| c != col).collect();
        let a = |i: usize, j: usize| -> &ScalarExpr { &self.e[rows[i]][cols[j]] };
        let det2 = |r0: usize, r1: usize, c0: usize, c1: usize| {
            &(a(r0, c0) * a(r1, c1)) - &(a(r0, c1) * a(r1, c0))
        };
        let mut acc = a(0, 0) * &det2(1, 2, 1, 2);
        acc.sub_assign(&(a(0, 1) * &det2(1, 2, 0, 2)));
        acc.add_assign(&(a(0, 2) * &det2(1, 2, 0, 1)));
        acc
    }

    /// Adjugate; equals the inverse exactly when `det == 1`.
    pub fn adjugate(&self) -> Mat<4> {
        Mat::from_fn(|i, j| {
            let m = self.minor(j, i);
            if (i + j) % 2 == 0 {
                m
            } else {
                -&m
            }
        })
    }

    /// Exact inverse for matrices whose determinant is a nonzero constant.
    pub fn inverse_constant_det(&self) -> Result<Mat<4>, SpinGroupError> {
        let det = self.det();
        let c = det
            .as_constant()
            .ok_or_else(|| SpinGroupError::NonConstantDeterminant {
                det: det.to_string(),
            })?;
        let inv = c
            .recip()
            .ok_or_else(|| SpinGroupError::NonConstantDeterminant {
                det: det.to_string(),
            })?;
        Ok(self.adjugate().scale(&inv))
    }
}

/// The Minkowski metric `diag(1,-1,-1,-1)`.
pub fn minkowski() -> Mat<4> {
    Mat::from_fn(|i, j| {
        if i != j {
            ScalarExpr::zero()
        } else if i == 0 {
            ScalarExpr::one()
        } else {
            ScalarExpr::from_int(-1)
        }
    })
}

/// A unimodular complex 2x2 matrix; the frame transition group of the spinor
/// bundle. Spinor indices are 1-based in all public accessors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SL2Matrix(Mat<2>);

impl SL2Matrix {
    pub fn new(m: Mat<2>) -> Result<Self, SpinGroupError> {
        let det = m.det();
        if det != ScalarExpr::one() {
            return Err(SpinGroupError::NotUnimodular {
                det: det.to_string(),
            });
        }
        Ok(SL2Matrix(m))
    }

    pub fn identity() -> Self {
        SL2Matrix(Mat::identity())
    }

    /// Entry with the paper-range indices `upper, lower` in `1..=2`.
    pub fn entry(&self, upper: u8, lower: u8) -> &ScalarExpr {
        &self.0.e[(upper - 1) as usize][(lower - 1) as usize]
    }

    pub fn mat(&self) -> &Mat<2> {
        &self.0
    }

    pub fn mul(&self, rhs: &SL2Matrix) -> SL2Matrix {
        SL2Matrix(self.0.mul(&rhs.0))
    }

    /// Exact inverse via the adjugate (unimodularity makes it polynomial).
    pub fn inverse(&self) -> SL2Matrix {
        SL2Matrix(self.0.adjugate())
    }

    pub fn neg(&self) -> SL2Matrix {
        SL2Matrix(self.0.neg())
    }
}

impl fmt::Display for SL2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..2 {
            for j in 0..2 {
                writeln!(f, "S {} {} = {}", i + 1, j + 1, self.0.e[i][j])?;
            }
        }
        Ok(())
    }
}

/// A proper orthochronous Lorentz matrix with exact entries. Vector indices
/// run `0..=3`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lorentz4Matrix(Mat<4>);

impl Lorentz4Matrix {
    /// Validates the metric-preservation and unit-determinant conditions
    /// exactly. Orthochronicity is checked on constant matrices only; for
    /// coordinate-dependent entries it holds pointwise but is not a
    /// polynomial identity.
    pub fn new(m: Mat<4>) -> Result<Self, SpinGroupError> {
        let eta = minkowski();
        if m.transpose().mul(&eta).mul(&m) != eta {
            return Err(SpinGroupError::NotLorentz);
        }
        if m.det() != ScalarExpr::one() {
            return Err(SpinGroupError::NotUnimodular {
                det: m.det().to_string(),
            });
        }
        if let Some(c) = m.e[0][0].as_constant() {
            if !c.is_real_ge_one() {
                return Err(SpinGroupError::NotOrthochronous {
                    entry: c.to_string(),
                });
            }
        }
        Ok(Lorentz4Matrix(m))
    }

    pub fn entry(&self, upper: u8, lower: u8) -> &ScalarExpr {
        &self.0.e[upper as usize][lower as usize]
    }

    pub fn mat(&self) -> &Mat<4> {
        &self.0
    }

    pub fn mul(&self, rhs: &Lorentz4Matrix) -> Lorentz4Matrix {
        Lorentz4Matrix(self.0.mul(&rhs.0))
    }

    /// Exact inverse: unit determinant makes the adjugate the inverse.
    pub fn inverse(&self) -> Lorentz4Matrix {
        Lorentz4Matrix(self.0.adjugate())
    }
}

/// The covering homomorphism from unimodular 2x2 matrices onto the proper
/// orthochronous Lorentz group, transcribed component by component. Divisions
/// by `2` and `2i` are exact Gaussian-rational scalings.
///
/// The `entry(1,1)` component is written with the cross terms
/// `conj(s21)s12 + conj(s12)s21`; the metric-preservation property test pins
/// this form (the absolute-square variant fails it).
pub fn varphi(s: &SL2Matrix) -> Lorentz4Matrix {
    let c = |i: u8, j: u8| s.entry(i, j).clone();
    let b = |i: u8, j: u8| s.entry(i, j).bar();
    let half = GaussianRational::from_ratio(1, 2);
    // 1/(2i) = -i/2.
    let half_over_i = GaussianRational::from_parts(0, 1, -1, 2);

    let p = |t1: ScalarExpr, t2: ScalarExpr, t3: ScalarExpr, t4: ScalarExpr| {
        let mut acc = t1;
        acc.add_assign(&t2);
        acc.add_assign(&t3);
        acc.add_assign(&t4);
        acc
    };

    let s00 = p(
        &b(1, 1) * &c(1, 1),
        &b(1, 2) * &c(1, 2),
        &b(2, 1) * &c(2, 1),
        &b(2, 2) * &c(2, 2),
    )
    .scale(&half);
    let s01 = p(
        &b(1, 1) * &c(1, 2),
        &b(1, 2) * &c(1, 1),
        &b(2, 1) * &c(2, 2),
        &b(2, 2) * &c(2, 1),
    )
    .scale(&half);
    let s02 = p(
        &b(1, 2) * &c(1, 1),
        -&(&b(1, 1) * &c(1, 2)),
        &b(2, 2) * &c(2, 1),
        -&(&b(2, 1) * &c(2, 2)),
    )
    .scale(&half_over_i);
    let s03 = p(
        &b(1, 1) * &c(1, 1),
        -&(&b(1, 2) * &c(1, 2)),
        &b(2, 1) * &c(2, 1),
        -&(&b(2, 2) * &c(2, 2)),
    )
    .scale(&half);

    let s10 = p(
        &b(2, 1) * &c(1, 1),
        &b(1, 1) * &c(2, 1),
        &b(2, 2) * &c(1, 2),
        &b(1, 2) * &c(2, 2),
    )
    .scale(&half);
    let s11 = p(
        &b(2, 1) * &c(1, 2),
        &b(1, 2) * &c(2, 1),
        &b(2, 2) * &c(1, 1),
        &b(1, 1) * &c(2, 2),
    )
    .scale(&half);
    let s12 = p(
        &b(1, 2) * &c(2, 1),
        -&(&b(2, 1) * &c(1, 2)),
        &b(2, 2) * &c(1, 1),
        -&(&b(1, 1) * &c(2, 2)),
    )
    .scale(&half_over_i);
    let s13 = p(
        &b(2, 1) * &c(1, 1),
        &b(1, 1) * &c(2, 1),
        -&(&b(2, 2) * &c(1, 2)),
        -&(&b(1, 2) * &c(2, 2)),
    )
    .scale(&half);

    let s20 = p(
        &b(1, 1) * &c(2, 1),
        -&(&b(2, 1) * &c(1, 1)),
        &b(1, 2) * &c(2, 2),
        -&(&b(2, 2) * &c(1, 2)),
    )
    .scale(&half_over_i);
    let s21 = p(
        &b(1, 2) * &c(2, 1),
        -&(&b(2, 1) * &c(1, 2)),
        &b(1, 1) * &c(2, 2),
        -&(&b(2, 2) * &c(1, 1)),
    )
    .scale(&half_over_i);
    let s22 = p(
        &b(2, 2) * &c(1, 1),
        &b(1, 1) * &c(2, 2),
        -&(&b(2, 1) * &c(1, 2)),
        -&(&b(1, 2) * &c(2, 1)),
    )
    .scale(&half);
    let s23 = p(
        &b(1, 1) * &c(2, 1),
        -&(&b(2, 1) * &c(1, 1)),
        &b(2, 2) * &c(1, 2),
        -&(&b(1, 2) * &c(2, 2)),
    )
    .scale(&half_over_i);

    let s30 = p(
        &b(1, 1) * &c(1, 1),
        &b(1, 2) * &c(1, 2),
        -&(&b(2, 1) * &c(2, 1)),
        -&(&b(2, 2) * &c(2, 2)),
    )
    .scale(&half);
    let s31 = p(
        &b(1, 1) * &c(1, 2),
        &b(1, 2) * &c(1, 1),
        -&(&b(2, 1) * &c(2, 2)),
        -&(&b(2, 2) * &c(2, 1)),
    )
    .scale(&half);
    let s32 = p(
        &b(1, 2) * &c(1, 1),
        -&(&b(1, 1) * &c(1, 2)),
        &b(2, 1) * &c(2, 2),
        -&(&b(2, 2) * &c(2, 1)),
    )
    .scale(&half_over_i);
    let s33 = p(
        &b(1, 1) * &c(1, 1),
        &b(2, 2) * &c(2, 2),
        -&(&b(2, 1) * &c(2, 1)),
        -&(&b(1, 2) * &c(1, 2)),
    )
    .scale(&half);

    let rows = [
        [s00, s01, s02, s03],
        [s10, s11, s12, s13],
        [s20, s21, s22, s23],
        [s30, s31, s32, s33],
    ];
    Lorentz4Matrix(Mat { e: rows })
}

/// Checks the homomorphism property on a concrete pair by exact comparison.
pub fn check_homomorphism(a: &SL2Matrix, b: &SL2Matrix) -> bool {
    *varphi(&a.mul(b)).mat() == varphi(a).mat().mul(varphi(b).mat())
}

/// The image of `s` together with the verified fact that `s` and `-s` map to
/// the same Lorentz matrix.
pub fn two_to_one_witness(s: &SL2Matrix) -> (Lorentz4Matrix, bool) {
    let image = varphi(s);
    let same = varphi(&s.neg()) == image;
    (image, same)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn const_mat2(rows: [[(i64, i64); 2]; 2]) -> Mat<2> {
        Mat::from_fn(|i, j| {
            let (p, q) = rows[i][j];
            ScalarExpr::constant(GaussianRational::from_ratio(p, q))
        })
    }

    fn boost() -> SL2Matrix {
        SL2Matrix::new(const_mat2([[(2, 1), (0, 1)], [(0, 1), (1, 2)]])).unwrap()
    }

    #[test]
    fn kernel_elements_map_to_identity() {
        let id = SL2Matrix::identity();
        assert!(varphi(&id).mat().is_identity());
        assert!(varphi(&id.neg()).mat().is_identity());
    }

    #[test]
    fn diagonal_boost_components() {
        // varphi(diag(2, 1/2)) is the boost with entries 17/8 and 15/8 on the
        // (0,3) block and the identity on the (1,2) block.
        let s = varphi(&boost());
        let r = |p: i64, q: i64| ScalarExpr::constant(GaussianRational::from_ratio(p, q));
        assert_eq!(s.entry(0, 0), &r(17, 8));
        assert_eq!(s.entry(3, 3), &r(17, 8));
        assert_eq!(s.entry(0, 3), &r(15, 8));
        assert_eq!(s.entry(3, 0), &r(15, 8));
        assert_eq!(s.entry(1, 1), &r(1, 1));
        assert_eq!(s.entry(2, 2), &r(1, 1));
        for i in 0..4u8 {
            for j in 0..4u8 {
                let expected_nonzero =
                    (i == j) || (i == 0 && j == 3) || (i == 3 && j == 0);
                assert_eq!(!s.entry(i, j).is_zero(), expected_nonzero, "({i},{j})");
            }
        }
        // Hyperbolic cross-check: (17/8)^2 - (15/8)^2 = 1.
        let diff = &s.entry(0, 0).pow(2) - &s.entry(0, 3).pow(2);
        assert_eq!(diff, ScalarExpr::one());
    }

    #[test]
    fn null_rotation_row_one_is_lorentz() {
        // The upper-triangular unimodular matrix [[1,1],[0,1]] is the case
        // where the cross-term form of entry(1,1) matters: the value is 1,
        // and the metric-preservation identity holds exactly.
        let s = SL2Matrix::new(const_mat2([[(1, 1), (1, 1)], [(0, 1), (1, 1)]])).unwrap();
        let l = varphi(&s);
        assert_eq!(l.entry(1, 1), &ScalarExpr::one());
        let eta = minkowski();
        assert_eq!(l.mat().transpose().mul(&eta).mul(l.mat()), eta);
    }

    #[test]
    fn two_to_one_on_boost() {
        let (image, same) = two_to_one_witness(&boost());
        assert!(same);
        assert_eq!(
            image.entry(0, 0),
            &ScalarExpr::constant(GaussianRational::from_ratio(17, 8))
        );
    }

    #[test]
    fn homomorphism_on_identity_pairs() {
        let id = SL2Matrix::identity();
        let b = boost();
        assert!(check_homomorphism(&id, &b));
        assert!(check_homomorphism(&b, &b.inverse()));
        assert!(varphi(&b.mul(&b.inverse())).mat().is_identity());
    }

    #[test]
    fn non_unimodular_rejected_with_determinant() {
        let err = SL2Matrix::new(const_mat2([[(2, 1), (0, 1)], [(0, 1), (1, 1)]])).unwrap_err();
        match err {
            SpinGroupError::NotUnimodular { det } => assert_eq!(det, "(2/1,0/1)"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn adjugate_inverts_unit_determinant_4x4() {
        let l = varphi(&boost());
        assert!(l.mat().mul(l.inverse().mat()).is_identity());
        assert_eq!(l.mat().det(), ScalarExpr::one());
    }
}
