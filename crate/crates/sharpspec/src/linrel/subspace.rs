//! Subspaces of R^n represented by orthonormal bases.
//!
//! Every rank decision goes through Householder QR with column pivoting and
//! every orthogonal complement through the symmetric eigendecomposition of a
//! projector. The iterative general-matrix SVD is deliberately avoided: it
//! mispairs singular vectors on the structured (projector-like, zero-padded)
//! matrices this calculus produces, which silently corrupts intersections.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A linear subspace of R^n, stored as an `n x k` matrix with orthonormal
/// columns. `k = 0` encodes the zero subspace.
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient: usize,
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Zero subspace of R^n.
    pub fn zero(ambient: usize) -> Self {
        Self { ambient, basis: DMatrix::zeros(ambient, 0) }
    }

    /// All of R^n.
    pub fn full(ambient: usize) -> Self {
        Self { ambient, basis: DMatrix::identity(ambient, ambient) }
    }

    /// Span of the columns of `mat`, orthonormalised with relative rank
    /// threshold `tol`.
    pub fn from_matrix_columns(mat: &DMatrix<f64>, tol: f64) -> Self {
        Self { ambient: mat.nrows(), basis: orthonormal_image(mat, tol) }
    }

    /// Span of the columns of `mat` when `mat` is a block of an orthonormal
    /// basis (graph projections and the like): the rank threshold is floored
    /// at `tol` absolute, so a block that is rounding noise throughout spans
    /// nothing instead of everything.
    pub fn from_block_columns(mat: &DMatrix<f64>, tol: f64) -> Self {
        Self { ambient: mat.nrows(), basis: orthonormal_image_floored(mat, tol, 1.0) }
    }

    /// Span of the given vectors.
    pub fn from_vectors(ambient: usize, vectors: &[DVector<f64>], tol: f64) -> Result<Self> {
        for v in vectors {
            if v.len() != ambient {
                return Err(Error::DimensionMismatch(format!(
                    "vector of length {} in ambient dimension {}",
                    v.len(),
                    ambient
                )));
            }
        }
        if vectors.is_empty() {
            return Ok(Self::zero(ambient));
        }
        let mat = DMatrix::from_columns(vectors);
        Ok(Self::from_matrix_columns(&mat, tol))
    }

    /// Wraps a matrix whose columns are already orthonormal.
    pub fn from_orthonormal(basis: DMatrix<f64>) -> Self {
        let ambient = basis.nrows();
        debug_assert!({
            let g = basis.transpose() * &basis;
            let k = basis.ncols();
            (g - DMatrix::<f64>::identity(k, k)).norm() < 1e-8 * (k as f64 + 1.0)
        });
        Self { ambient, basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    /// Dimension of the subspace.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthonormal basis, one column per dimension.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        if self.dim() == 0 {
            return DVector::zeros(self.ambient);
        }
        &self.basis * (self.basis.transpose() * v)
    }

    /// `true` if `v` lies in the subspace up to `tol` relative to `|v|`.
    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> bool {
        let n = v.norm();
        if n == 0.0 {
            return true;
        }
        (v - self.project(v)).norm() <= tol * n
    }

    /// Orthogonal complement within the ambient space.
    pub fn complement(&self) -> Self {
        let n = self.ambient;
        if self.dim() == 0 {
            return Self::full(n);
        }
        if self.dim() == n {
            return Self::zero(n);
        }
        let p = DMatrix::<f64>::identity(n, n) - &self.basis * self.basis.transpose();
        let basis = projector_image(&p);
        assert_eq!(basis.ncols(), n - self.dim(), "complement rank detection failed");
        Self { ambient: n, basis }
    }

    /// Sum of two subspaces.
    pub fn sum(&self, other: &Self, tol: f64) -> Result<Self> {
        self.check_ambient(other)?;
        if self.dim() == 0 {
            return Ok(other.clone());
        }
        if other.dim() == 0 {
            return Ok(self.clone());
        }
        let mut cols: Vec<DVector<f64>> = Vec::new();
        for c in self.basis.column_iter().chain(other.basis.column_iter()) {
            cols.push(c.into_owned());
        }
        Ok(Self::from_matrix_columns(&DMatrix::from_columns(&cols), tol))
    }

    /// Intersection of two subspaces: the kernel of `[U, -V]` maps onto it
    /// through its U-coefficients.
    pub fn intersect(&self, other: &Self, tol: f64) -> Result<Self> {
        self.check_ambient(other)?;
        if self.dim() == 0 || other.dim() == 0 {
            return Ok(Self::zero(self.ambient));
        }
        let k1 = self.dim();
        let k2 = other.dim();
        let mut stacked = DMatrix::<f64>::zeros(self.ambient, k1 + k2);
        stacked.view_mut((0, 0), (self.ambient, k1)).copy_from(&self.basis);
        stacked
            .view_mut((0, k1), (self.ambient, k2))
            .copy_from(&(-&other.basis));
        let null = nullspace(&stacked, tol);
        if null.ncols() == 0 {
            return Ok(Self::zero(self.ambient));
        }
        let a_part = null.rows(0, k1).into_owned();
        let vecs = &self.basis * a_part;
        Ok(Self::from_matrix_columns(&vecs, tol))
    }

    /// `sigma_max((I - P_other) Q_self)`: sine of the largest angle from
    /// `self` into `other`. Zero iff `self` is contained in `other`.
    pub fn defect_from(&self, other: &Self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        let residual = &self.basis - other.project_matrix_onto(&self.basis);
        spectral_norm(&residual)
    }

    /// Symmetric gap between subspaces: `max` of the two one-sided defects.
    /// Equals the sine of the largest principal angle when dimensions agree,
    /// and 1 when one space has a direction orthogonal to the whole other.
    pub fn distance(&self, other: &Self) -> f64 {
        self.defect_from(other).max(other.defect_from(self))
    }

    /// `true` if `self` is contained in `other` up to `tol`.
    pub fn is_contained_in(&self, other: &Self, tol: f64) -> bool {
        self.defect_from(other) <= tol
    }

    fn project_matrix_onto(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        if self.dim() == 0 {
            return DMatrix::zeros(m.nrows(), m.ncols());
        }
        &self.basis * (self.basis.transpose() * m)
    }

    fn check_ambient(&self, other: &Self) -> Result<()> {
        if self.ambient != other.ambient {
            return Err(Error::DimensionMismatch(format!(
                "subspace ambients {} vs {}",
                self.ambient, other.ambient
            )));
        }
        Ok(())
    }
}

/// Magnitudes along the main diagonal of a (possibly rectangular) matrix.
fn diag_abs(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)].abs()).collect()
}

/// Orthonormal basis of the column space of `mat`, with rank read off the
/// pivoted-QR diagonal at relative threshold `tol`.
fn orthonormal_image(mat: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    orthonormal_image_floored(mat, tol, 0.0)
}

/// Like `orthonormal_image`, but the rank threshold is `tol * max(d0, floor)`
/// where `d0` is the largest R diagonal. A positive floor keeps a matrix that
/// is rounding noise throughout from being read as full rank: with the purely
/// relative rule the noise becomes its own reference scale.
fn orthonormal_image_floored(mat: &DMatrix<f64>, tol: f64, floor: f64) -> DMatrix<f64> {
    let m = mat.nrows();
    if m == 0 || mat.ncols() == 0 {
        return DMatrix::zeros(m, 0);
    }
    let qr = mat.clone().col_piv_qr();
    let diag = diag_abs(&qr.r());
    let d0 = diag.iter().copied().fold(0.0_f64, f64::max);
    if d0 == 0.0 {
        return DMatrix::zeros(m, 0);
    }
    // Column pivoting keeps the diagonal non-increasing in magnitude, so the
    // first r columns of Q carry the numerical column space.
    let r = diag.iter().filter(|d| **d > tol * d0.max(floor)).count();
    let q = qr.q();
    q.columns(0, r).into_owned()
}

/// Orthonormal eigenvectors of a (near-)orthogonal projector matrix for the
/// eigenvalue 1. Exact 0/1 spectrum makes the split unconditionally stable.
fn projector_image(p: &DMatrix<f64>) -> DMatrix<f64> {
    let se = p.clone().symmetric_eigen();
    let mut cols = Vec::new();
    for (i, &lam) in se.eigenvalues.iter().enumerate() {
        if lam > 0.5 {
            cols.push(se.eigenvectors.column(i).into_owned());
        }
    }
    if cols.is_empty() {
        return DMatrix::zeros(p.nrows(), 0);
    }
    DMatrix::from_columns(&cols)
}

/// Orthonormal basis of the kernel of `a`, with relative threshold `tol`.
pub fn nullspace(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    nullspace_floored(a, tol, 0.0)
}

/// Kernel of `a` for matrices whose natural scale is one, such as products
/// of orthonormal blocks: the rank threshold is floored at `tol` absolute,
/// so an `a` that is rounding noise throughout is the zero map rather than a
/// full-rank map on noise. Above scale one the relative rule takes over.
pub fn nullspace_unit(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    nullspace_floored(a, tol, 1.0)
}

fn nullspace_floored(a: &DMatrix<f64>, tol: f64, floor: f64) -> DMatrix<f64> {
    let n = a.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // ker(a) is the orthogonal complement of the row space.
    let rows = orthonormal_image_floored(&a.transpose(), tol, floor);
    let r = rows.ncols();
    if r == 0 {
        return DMatrix::identity(n, n);
    }
    if r == n {
        return DMatrix::zeros(n, 0);
    }
    let p = DMatrix::<f64>::identity(n, n) - &rows * rows.transpose();
    let basis = projector_image(&p);
    assert_eq!(basis.ncols(), n - r, "kernel rank detection failed");
    basis
}

/// Rank of `a` with the given relative threshold.
pub fn rank(a: &DMatrix<f64>, tol: f64) -> usize {
    orthonormal_image(a, tol).ncols()
}

/// Largest singular value of `a` (0 for empty matrices), computed through
/// the symmetric eigendecomposition of the smaller Gram matrix.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    let gram = if a.nrows() <= a.ncols() {
        a * a.transpose()
    } else {
        a.transpose() * a
    };
    let lam = gram
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(0.0_f64, f64::max);
    lam.max(0.0).sqrt()
}

/// All singular values of `a` in descending order, through the smaller Gram
/// matrix. Resolution below `sqrt(machine epsilon)` relative is lost to the
/// squaring; rank decisions here only ever face order-one angles.
pub fn singular_values_desc(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let gram = if a.nrows() <= a.ncols() {
        a * a.transpose()
    } else {
        a.transpose() * a
    };
    let mut out: Vec<f64> = gram
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .collect();
    out.sort_by(|x, y| y.partial_cmp(x).unwrap());
    out
}

/// Minimum-norm least-squares solution of `a x = rhs` (one column of `x`
/// per column of `rhs`), by complete orthogonal decomposition: pivoted QR of
/// `a`, then plain QR of the leading rows of R transposed.
pub fn min_norm_solve(a: &DMatrix<f64>, rhs: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    if a.nrows() != rhs.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "solve: {} rows vs rhs {}",
            a.nrows(),
            rhs.nrows()
        )));
    }
    let n = a.ncols();
    let p = rhs.ncols();
    if n == 0 {
        return Ok(DMatrix::zeros(0, p));
    }
    if a.nrows() == 0 {
        return Ok(DMatrix::zeros(n, p));
    }
    let qr1 = a.clone().col_piv_qr();
    let diag = diag_abs(&qr1.r());
    let d0 = diag.iter().copied().fold(0.0_f64, f64::max);
    if d0 == 0.0 {
        return Ok(DMatrix::zeros(n, p));
    }
    let r = diag.iter().filter(|d| **d > tol * d0).count();
    let q1 = qr1.q().columns(0, r).into_owned();
    let r1 = qr1.r().rows(0, r).into_owned();
    let d = q1.transpose() * rhs;
    // r1 = R2^T Q2^T with Q2 orthonormal: minimum-norm y solving r1 y = d is
    // Q2 (R2^{-T} d).
    let qr2 = r1.transpose().qr();
    let q2 = qr2.q();
    let r2 = qr2.r();
    let z = r2
        .tr_solve_upper_triangular(&d)
        .ok_or_else(|| Error::SolverFailure("rank-trimmed triangular solve".into()))?;
    let y = q2 * z;
    // Undo the column permutation of the pivoted QR.
    let mut x = y;
    qr1.p().inv_permute_rows(&mut x);
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DEFAULT_TOL;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    #[test]
    fn orthonormalise_drops_dependent_columns() {
        let s = Subspace::from_vectors(
            3,
            &[v(&[1.0, 0.0, 0.0]), v(&[2.0, 0.0, 0.0]), v(&[0.0, 3.0, 0.0])],
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(s.dim(), 2);
        let g = s.basis().transpose() * s.basis();
        assert!((g - DMatrix::<f64>::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn complement_and_sum_partition_ambient() {
        let s = Subspace::from_vectors(4, &[v(&[1.0, 1.0, 0.0, 0.0]), v(&[0.0, 0.0, 1.0, -1.0])], DEFAULT_TOL)
            .unwrap();
        let c = s.complement();
        assert_eq!(c.dim(), 2);
        let all = s.sum(&c, DEFAULT_TOL).unwrap();
        assert_eq!(all.dim(), 4);
        // c is orthogonal to s
        let cross = s.basis().transpose() * c.basis();
        assert!(cross.norm() < 1e-12);
    }

    #[test]
    fn intersection_of_planes_is_line() {
        // span{e1,e2} and span{e2,e3} meet in span{e2}
        let a = Subspace::from_vectors(3, &[v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])], DEFAULT_TOL).unwrap();
        let b = Subspace::from_vectors(3, &[v(&[0.0, 1.0, 0.0]), v(&[0.0, 0.0, 1.0])], DEFAULT_TOL).unwrap();
        let i = a.intersect(&b, DEFAULT_TOL).unwrap();
        assert_eq!(i.dim(), 1);
        assert!(i.contains(&v(&[0.0, 5.0, 0.0]), 1e-10));
    }

    #[test]
    fn distance_detects_equality_and_difference() {
        let a = Subspace::from_vectors(3, &[v(&[1.0, 0.0, 0.0])], DEFAULT_TOL).unwrap();
        let a2 = Subspace::from_vectors(3, &[v(&[-2.5, 0.0, 0.0])], DEFAULT_TOL).unwrap();
        let b = Subspace::from_vectors(3, &[v(&[0.0, 1.0, 0.0])], DEFAULT_TOL).unwrap();
        assert!(a.distance(&a2) < 1e-14);
        assert!((a.distance(&b) - 1.0).abs() < 1e-14);
        // 45 degree line vs e1: sin = 1/sqrt(2)
        let c = Subspace::from_vectors(3, &[v(&[1.0, 1.0, 0.0])], DEFAULT_TOL).unwrap();
        assert!((a.distance(&c) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn nullspace_of_wide_matrix() {
        // 1 x 3 matrix [1 1 1]: kernel has dimension 2
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let n = nullspace(&a, DEFAULT_TOL);
        assert_eq!(n.ncols(), 2);
        assert!((a * &n).norm() < 1e-12);
    }

    #[test]
    fn nullspace_of_projector_padded_block() {
        // The exact shape that derailed the iterative SVD: two orthonormal
        // plane bases side by side with a one-dimensional kernel.
        let a = DMatrix::from_row_slice(
            3,
            4,
            &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0, -1.0],
        );
        let n = nullspace(&a, DEFAULT_TOL);
        assert_eq!(n.ncols(), 1);
        assert!((a * &n).norm() < 1e-12);
    }

    #[test]
    fn min_norm_solve_picks_shortest_solution() {
        // a = [[0,2,0]]: solutions of a x = 4 form a plane; the shortest is
        // (0,2,0). Pivoting permutes columns, so this also exercises the
        // permutation bookkeeping.
        let a = DMatrix::from_row_slice(1, 3, &[0.0, 2.0, 0.0]);
        let rhs = DMatrix::from_row_slice(1, 1, &[4.0]);
        let x = min_norm_solve(&a, &rhs, 1e-12).unwrap();
        assert!((x - DMatrix::from_row_slice(3, 1, &[0.0, 2.0, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn min_norm_solve_matches_normal_equations_on_full_rank() {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 0.5, -1.0, 3.0, 0.0, -2.0, 1.0]);
        let rhs = DMatrix::from_row_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]);
        let x = min_norm_solve(&a, &rhs, 1e-12).unwrap();
        let gram = a.transpose() * &a;
        let expect = gram.try_inverse().unwrap() * (a.transpose() * &rhs);
        assert!((x - expect).norm() < 1e-10);
    }

    #[test]
    fn singular_values_are_sorted_and_match() {
        let a = DMatrix::from_row_slice(2, 3, &[3.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let s = singular_values_desc(&a);
        assert_eq!(s.len(), 2);
        assert!((s[0] - 3.0).abs() < 1e-12);
        assert!((s[1] - 1.0).abs() < 1e-12);
        assert!((spectral_norm(&a) - 3.0).abs() < 1e-12);
    }
}
