//! Dense operators on truncated multi-mode Fock spaces.
//!
//! Basis states are laid out mode-0-major: for dims `(d0, d1)` the state
//! `|n0, n1>` sits at index `n0 * d1 + n1`, so an operator acting on mode 0
//! alone is `A ⊗ I`. In the feedback circuit mode 0 is the controlled cavity
//! `a` and mode 1 the controller cavity `c`.

use std::ops::{Add, Mul, Neg, Sub};

use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};

/// Absolute tolerance used for Hermiticity and trace checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Index of the controlled cavity `a`.
pub const MODE_A: usize = 0;
/// Index of the controller cavity `c`.
pub const MODE_C: usize = 1;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModeSpace {
    dims: Vec<usize>,
    total_dim: usize,
}

impl ModeSpace {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidSpace("at least one mode is required".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidSpace(format!("every truncation must be >= 2, got {d}")));
        }
        let total_dim = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidSpace("total dimension overflows".into()))?;
        Ok(Self { dims: dims.to_vec(), total_dim })
    }

    /// Two-mode space `(a, c)` used by the feedback circuit.
    pub fn two_mode(dim_a: usize, dim_c: usize) -> Result<Self> {
        Self::new(&[dim_a, dim_c])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_modes(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// Occupation numbers of basis state `index`.
    pub fn occupations(&self, index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.dims.len()];
        let mut rest = index;
        for (slot, &d) in occ.iter_mut().zip(&self.dims).rev() {
            *slot = rest % d;
            rest /= d;
        }
        occ
    }

    /// Basis index of the state with the given occupations.
    pub fn index_of(&self, occupations: &[usize]) -> Result<usize> {
        if occupations.len() != self.dims.len() {
            return Err(Error::DimensionMismatch { expected: self.dims.len(), actual: occupations.len() });
        }
        let mut index = 0;
        for (&n, &d) in occupations.iter().zip(&self.dims) {
            if n >= d {
                return Err(Error::DimensionMismatch { expected: d, actual: n + 1 });
            }
            index = index * d + n;
        }
        Ok(index)
    }

    /// Same space with mode `mode` truncated at `dim` instead.
    pub fn with_dim(&self, mode: usize, dim: usize) -> Result<Self> {
        self.check_mode(mode)?;
        let mut dims = self.dims.clone();
        dims[mode] = dim;
        Self::new(&dims)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.dims.len() {
            return Err(Error::ModeOutOfRange { mode, modes: self.dims.len() });
        }
        Ok(())
    }

    fn ensure_same(&self, other: &ModeSpace) -> Result<()> {
        if self != other {
            return Err(Error::SpaceMismatch { left: self.dims.clone(), right: other.dims.clone() });
        }
        Ok(())
    }
}

/// A complex matrix tagged with the [`ModeSpace`] it acts on.
///
/// Arithmetic through the operator traits panics when the spaces differ;
/// the `checked_*` methods return [`Error::SpaceMismatch`] instead.
#[derive(Clone, Debug)]
pub struct FockOperator {
    space: ModeSpace,
    matrix: Mat<c64>,
}

impl FockOperator {
    pub fn from_matrix(space: ModeSpace, matrix: Mat<c64>) -> Result<Self> {
        let n = space.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: matrix.nrows().max(matrix.ncols()) });
        }
        Ok(Self { space, matrix })
    }

    pub fn zeros(space: &ModeSpace) -> Self {
        let n = space.total_dim();
        Self { space: space.clone(), matrix: Mat::zeros(n, n) }
    }

    pub fn identity(space: &ModeSpace) -> Self {
        let n = space.total_dim();
        Self { space: space.clone(), matrix: Mat::identity(n, n) }
    }

    /// Truncated annihilation operator on `mode`, identity elsewhere.
    pub fn annihilator(space: &ModeSpace, mode: usize) -> Result<Self> {
        space.check_mode(mode)?;
        Self::embed(space, mode, &ladder(space.dims()[mode]))
    }

    pub fn creator(space: &ModeSpace, mode: usize) -> Result<Self> {
        Ok(Self::annihilator(space, mode)?.adjoint())
    }

    pub fn number(space: &ModeSpace, mode: usize) -> Result<Self> {
        let a = Self::annihilator(space, mode)?;
        Ok(&a.adjoint() * &a)
    }

    /// Places a single-mode matrix on `mode` of `space`.
    pub fn embed(space: &ModeSpace, mode: usize, local: &Mat<c64>) -> Result<Self> {
        space.check_mode(mode)?;
        let d = space.dims()[mode];
        if local.nrows() != d || local.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: local.nrows().max(local.ncols()) });
        }
        let before: usize = space.dims()[..mode].iter().product();
        let after: usize = space.dims()[mode + 1..].iter().product();
        let n = space.total_dim();
        let mut matrix = Mat::<c64>::zeros(n, n);
        for outer in 0..before {
            for i in 0..d {
                for j in 0..d {
                    let v = local[(i, j)];
                    if v == c64::new(0.0, 0.0) {
                        continue;
                    }
                    for inner in 0..after {
                        let row = (outer * d + i) * after + inner;
                        let col = (outer * d + j) * after + inner;
                        matrix[(row, col)] = v;
                    }
                }
            }
        }
        Ok(Self { space: space.clone(), matrix })
    }

    /// Projector `|n><n|` onto a basis state given by occupations.
    pub fn projector(space: &ModeSpace, occupations: &[usize]) -> Result<Self> {
        let k = space.index_of(occupations)?;
        let mut op = Self::zeros(space);
        op.matrix[(k, k)] = c64::new(1.0, 0.0);
        Ok(op)
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.matrix.as_ref()
    }

    pub fn into_matrix(self) -> Mat<c64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn get(&self, row: usize, col: usize) -> c64 {
        self.matrix[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space.clone(), matrix: self.matrix.adjoint().to_owned() }
    }

    pub fn scale(&self, factor: c64) -> Self {
        let n = self.dim();
        Self {
            space: self.space.clone(),
            matrix: Mat::from_fn(n, n, |i, j| self.matrix[(i, j)] * factor),
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.space.ensure_same(&other.space)?;
        Ok(Self { space: self.space.clone(), matrix: &self.matrix + &other.matrix })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.space.ensure_same(&other.space)?;
        Ok(Self { space: self.space.clone(), matrix: &self.matrix - &other.matrix })
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.space.ensure_same(&other.space)?;
        Ok(Self { space: self.space.clone(), matrix: &self.matrix * &other.matrix })
    }

    /// `[self, other] = self·other − other·self`
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.checked_mul(other)?.checked_sub(&other.checked_mul(self)?)
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    /// Largest entrywise deviation `|X_ij − conj(X_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.matrix.norm_l2()
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.space.ensure_same(&other.space)?;
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                worst = worst.max((self.matrix[(i, j)] - other.matrix[(i, j)]).norm());
            }
        }
        Ok(worst)
    }
}

/// Single-mode truncated annihilation matrix with `√n` on the superdiagonal.
pub fn ladder(dim: usize) -> Mat<c64> {
    Mat::from_fn(dim, dim, |i, j| if j == i + 1 { c64::new((j as f64).sqrt(), 0.0) } else { c64::new(0.0, 0.0) })
}

/// `Tr(rho · obs)`; `rho` must be trace-normalized to [`DEFAULT_TOLERANCE`].
pub fn expectation(rho: &FockOperator, obs: &FockOperator) -> Result<c64> {
    expectation_with_tolerance(rho, obs, DEFAULT_TOLERANCE)
}

pub fn expectation_with_tolerance(rho: &FockOperator, obs: &FockOperator, tol: f64) -> Result<c64> {
    rho.space.ensure_same(&obs.space)?;
    let tr = rho.trace();
    if (tr - c64::new(1.0, 0.0)).norm() > tol {
        return Err(Error::NotNormalized(tr.re));
    }
    let n = rho.dim();
    let mut acc = c64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += rho.matrix[(i, j)] * obs.matrix[(j, i)];
        }
    }
    Ok(acc)
}

fn binary(lhs: &FockOperator, rhs: &FockOperator, op: impl Fn(&Mat<c64>, &Mat<c64>) -> Mat<c64>) -> FockOperator {
    if lhs.space != rhs.space {
        panic!(
            "operator space mismatch: {:?} vs {:?}",
            lhs.space.dims(),
            rhs.space.dims()
        );
    }
    FockOperator { space: lhs.space.clone(), matrix: op(&lhs.matrix, &rhs.matrix) }
}

impl Add for &FockOperator {
    type Output = FockOperator;
    fn add(self, rhs: Self) -> FockOperator {
        binary(self, rhs, |a, b| a + b)
    }
}

impl Sub for &FockOperator {
    type Output = FockOperator;
    fn sub(self, rhs: Self) -> FockOperator {
        binary(self, rhs, |a, b| a - b)
    }
}

impl Mul for &FockOperator {
    type Output = FockOperator;
    fn mul(self, rhs: Self) -> FockOperator {
        binary(self, rhs, |a, b| a * b)
    }
}

impl Mul<c64> for &FockOperator {
    type Output = FockOperator;
    fn mul(self, rhs: c64) -> FockOperator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &FockOperator {
    type Output = FockOperator;
    fn mul(self, rhs: f64) -> FockOperator {
        self.scale(c64::new(rhs, 0.0))
    }
}

impl Neg for &FockOperator {
    type Output = FockOperator;
    fn neg(self) -> FockOperator {
        self.scale(c64::new(-1.0, 0.0))
    }
}

impl Add for FockOperator {
    type Output = FockOperator;
    fn add(self, rhs: Self) -> FockOperator {
        &self + &rhs
    }
}

impl Sub for FockOperator {
    type Output = FockOperator;
    fn sub(self, rhs: Self) -> FockOperator {
        &self - &rhs
    }
}

impl Mul for FockOperator {
    type Output = FockOperator;
    fn mul(self, rhs: Self) -> FockOperator {
        &self * &rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> c64 {
        c64::new(x, 0.0)
    }

    #[test]
    fn single_mode_annihilator_dim3() {
        let s = ModeSpace::new(&[3]).unwrap();
        let a = FockOperator::annihilator(&s, 0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = match (i, j) {
                    (0, 1) => 1.0,
                    (1, 2) => 2f64.sqrt(),
                    _ => 0.0,
                };
                assert_eq!(a.get(i, j), re(expected), "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn annihilator_on_second_mode_is_identity_kron_ladder() {
        let s = ModeSpace::two_mode(2, 2).unwrap();
        let a1 = FockOperator::annihilator(&s, 1).unwrap();
        // I2 ⊗ a2: ones at (0,1) and (2,3)
        for i in 0..4 {
            for j in 0..4 {
                let expected = if (i, j) == (0, 1) || (i, j) == (2, 3) { 1.0 } else { 0.0 };
                assert_eq!(a1.get(i, j), re(expected));
            }
        }
    }

    #[test]
    fn number_operator_is_diagonal() {
        let s = ModeSpace::new(&[3]).unwrap();
        let n = FockOperator::number(&s, 0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { i as f64 } else { 0.0 };
                assert!((n.get(i, j) - re(expected)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn mode_out_of_range() {
        let s = ModeSpace::two_mode(2, 3).unwrap();
        assert_eq!(
            FockOperator::annihilator(&s, 2).unwrap_err(),
            Error::ModeOutOfRange { mode: 2, modes: 2 }
        );
    }

    #[test]
    fn rejects_small_truncation() {
        assert!(ModeSpace::new(&[1, 3]).is_err());
        assert!(ModeSpace::new(&[]).is_err());
    }

    #[test]
    fn embed_identity_is_global_identity() {
        let s = ModeSpace::two_mode(2, 3).unwrap();
        let e = FockOperator::embed(&s, 0, &Mat::identity(2, 2)).unwrap();
        assert_eq!(e.max_abs_diff(&FockOperator::identity(&s)).unwrap(), 0.0);
        assert_eq!(e.dim(), 6);
    }

    #[test]
    fn embed_mode0_is_mode0_major_kron() {
        let s = ModeSpace::two_mode(2, 2).unwrap();
        let sigma = Mat::from_fn(2, 2, |i, j| c64::new((i * 2 + j) as f64 + 1.0, i as f64 - j as f64));
        let e = FockOperator::embed(&s, 0, &sigma).unwrap();
        // σ ⊗ I2
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i % 2 == j % 2 { sigma[(i / 2, j / 2)] } else { re(0.0) };
                assert_eq!(e.get(i, j), expected);
            }
        }
    }

    #[test]
    fn embed_ladder_matches_annihilator() {
        let s = ModeSpace::two_mode(3, 3).unwrap();
        let e = FockOperator::embed(&s, 1, &ladder(3)).unwrap();
        let a = FockOperator::annihilator(&s, 1).unwrap();
        assert_eq!(e.max_abs_diff(&a).unwrap(), 0.0);
    }

    #[test]
    fn embed_dimension_mismatch() {
        let s = ModeSpace::two_mode(2, 3).unwrap();
        assert!(matches!(
            FockOperator::embed(&s, 1, &Mat::identity(2, 2)),
            Err(Error::DimensionMismatch { expected: 3, actual: 2 })
        ));
    }

    #[test]
    fn expectation_anchors() {
        let s = ModeSpace::new(&[4]).unwrap();
        let n = FockOperator::number(&s, 0).unwrap();
        let vac = FockOperator::projector(&s, &[0]).unwrap();
        assert!(expectation(&vac, &n).unwrap().norm() < 1e-15);
        let two = FockOperator::projector(&s, &[2]).unwrap();
        assert!((expectation(&two, &n).unwrap() - re(2.0)).norm() < 1e-14);

        let s3 = ModeSpace::new(&[3]).unwrap();
        let mixed = FockOperator::identity(&s3).scale(re(1.0 / 3.0));
        let n3 = FockOperator::number(&s3, 0).unwrap();
        assert!((expectation(&mixed, &n3).unwrap() - re(1.0)).norm() < 1e-14);
    }

    #[test]
    fn expectation_requires_unit_trace_and_same_space() {
        let s = ModeSpace::new(&[3]).unwrap();
        let id = FockOperator::identity(&s);
        assert!(matches!(expectation(&id, &id), Err(Error::NotNormalized(_))));
        let other = ModeSpace::new(&[4]).unwrap();
        let rho = FockOperator::projector(&s, &[0]).unwrap();
        assert!(matches!(
            expectation(&rho, &FockOperator::identity(&other)),
            Err(Error::SpaceMismatch { .. })
        ));
    }

    #[test]
    fn truncated_commutator_exact() {
        for n in 2..7 {
            let s = ModeSpace::new(&[n]).unwrap();
            let a = FockOperator::annihilator(&s, 0).unwrap();
            let comm = a.commutator(&a.adjoint()).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let expected = match (i == j, i + 1 == n) {
                        (true, false) => 1.0,
                        (true, true) => -((n - 1) as f64),
                        _ => 0.0,
                    };
                    assert!((comm.get(i, j) - re(expected)).norm() < 1e-13, "n={n} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn checked_ops_reject_mismatched_spaces() {
        let a = FockOperator::identity(&ModeSpace::new(&[2]).unwrap());
        let b = FockOperator::identity(&ModeSpace::new(&[3]).unwrap());
        assert!(matches!(a.checked_mul(&b), Err(Error::SpaceMismatch { .. })));
        assert!(matches!(a.checked_add(&b), Err(Error::SpaceMismatch { .. })));
    }

    #[test]
    #[should_panic(expected = "operator space mismatch")]
    fn operator_traits_panic_on_mismatch() {
        let a = FockOperator::identity(&ModeSpace::new(&[2]).unwrap());
        let b = FockOperator::identity(&ModeSpace::new(&[2, 2]).unwrap());
        let _ = &a * &b;
    }

    #[test]
    fn occupations_roundtrip() {
        let s = ModeSpace::new(&[2, 3, 4]).unwrap();
        for k in 0..s.total_dim() {
            assert_eq!(s.index_of(&s.occupations(k)).unwrap(), k);
        }
        assert_eq!(s.occupations(5), vec![0, 1, 1]);
    }
}
