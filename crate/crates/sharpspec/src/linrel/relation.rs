//! Linear relations as graph subspaces of H0 + H1.
//!
//! A relation from R^{n0} to R^{n1} is any subspace of R^{n0+n1}; operators
//! are the relations whose multivalued part is zero. Working at the graph
//! level keeps every construction total: adjoints of non-densely defined
//! operators simply come out multivalued instead of being undefined.

use nalgebra::{DMatrix, DVector};

use super::subspace::{nullspace_unit, Subspace};
use crate::error::{Error, Result};

/// Linear relation between R^{dim_h0} and R^{dim_h1}, stored by an
/// orthonormal basis of its graph. Graph vectors stack the input block on
/// top of the output block.
#[derive(Debug, Clone)]
pub struct LinearRelation {
    dim_h0: usize,
    dim_h1: usize,
    graph: Subspace,
    /// Fast application path for relations built from a full-domain matrix.
    matrix: Option<DMatrix<f64>>,
}

impl LinearRelation {
    /// Relation with the given graph subspace of R^{dim_h0 + dim_h1}.
    pub fn from_graph(dim_h0: usize, dim_h1: usize, graph: Subspace) -> Result<Self> {
        if graph.ambient_dim() != dim_h0 + dim_h1 {
            return Err(Error::DimensionMismatch(format!(
                "graph ambient {} does not match {} + {}",
                graph.ambient_dim(),
                dim_h0,
                dim_h1
            )));
        }
        Ok(Self { dim_h0, dim_h1, graph, matrix: None })
    }

    /// Graph of the everywhere-defined operator `x -> m x`.
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let (n1, n0) = (m.nrows(), m.ncols());
        let mut stacked = DMatrix::<f64>::zeros(n0 + n1, n0);
        stacked.view_mut((0, 0), (n0, n0)).copy_from(&DMatrix::identity(n0, n0));
        stacked.view_mut((n0, 0), (n1, n0)).copy_from(m);
        // [I; M] always has full column rank; QR is enough.
        let q = stacked.qr().q();
        Self {
            dim_h0: n0,
            dim_h1: n1,
            graph: Subspace::from_orthonormal(q),
            matrix: Some(m.clone()),
        }
    }

    /// Graph of `m` restricted to the domain subspace `dom`.
    pub fn from_matrix_on_domain(m: &DMatrix<f64>, dom: &Subspace) -> Result<Self> {
        let (n1, n0) = (m.nrows(), m.ncols());
        if dom.ambient_dim() != n0 {
            return Err(Error::DimensionMismatch(format!(
                "domain ambient {} vs matrix columns {}",
                dom.ambient_dim(),
                n0
            )));
        }
        let q = dom.basis();
        let mq = m * q;
        let mut stacked = DMatrix::<f64>::zeros(n0 + n1, dom.dim());
        stacked.view_mut((0, 0), (n0, dom.dim())).copy_from(q);
        stacked.view_mut((n0, 0), (n1, dom.dim())).copy_from(&mq);
        let graph = Subspace::from_matrix_columns(&stacked, 1e-13);
        debug_assert_eq!(graph.dim(), dom.dim());
        Ok(Self { dim_h0: n0, dim_h1: n1, graph, matrix: None })
    }

    /// The zero relation (graph `{0}`).
    pub fn empty(dim_h0: usize, dim_h1: usize) -> Self {
        Self { dim_h0, dim_h1, graph: Subspace::zero(dim_h0 + dim_h1), matrix: None }
    }

    pub fn dim_h0(&self) -> usize {
        self.dim_h0
    }

    pub fn dim_h1(&self) -> usize {
        self.dim_h1
    }

    pub fn graph(&self) -> &Subspace {
        &self.graph
    }

    /// Input block (n0 x k) of the graph basis.
    fn g0(&self) -> DMatrix<f64> {
        self.graph.basis().rows(0, self.dim_h0).into_owned()
    }

    /// Output block (n1 x k) of the graph basis.
    fn g1(&self) -> DMatrix<f64> {
        self.graph.basis().rows(self.dim_h0, self.dim_h1).into_owned()
    }

    /// Kernel `{x : (x, 0) in graph}`.
    pub fn kernel(&self, tol: f64) -> Subspace {
        let n = nullspace_unit(&self.g1(), tol);
        if n.ncols() == 0 {
            return Subspace::zero(self.dim_h0);
        }
        Subspace::from_block_columns(&(self.g0() * n), tol)
    }

    /// Multivalued part `{v : (0, v) in graph}`.
    pub fn multivalued_part(&self, tol: f64) -> Subspace {
        let n = nullspace_unit(&self.g0(), tol);
        if n.ncols() == 0 {
            return Subspace::zero(self.dim_h1);
        }
        Subspace::from_block_columns(&(self.g1() * n), tol)
    }

    /// Domain: projection of the graph to the input block.
    pub fn domain(&self, tol: f64) -> Subspace {
        Subspace::from_block_columns(&self.g0(), tol)
    }

    /// Range: projection of the graph to the output block. Finite dimension
    /// makes this closed, so it doubles as the closure of the range.
    pub fn range(&self, tol: f64) -> Subspace {
        Subspace::from_block_columns(&self.g1(), tol)
    }

    /// `true` when the relation is an operator (zero multivalued part).
    pub fn is_functional(&self, tol: f64) -> bool {
        self.multivalued_part(tol).dim() == 0
    }

    /// Adjoint relation in H1 + H0: all `(y, z)` with `<v, y> = <u, z>` for
    /// every `(u, v)` in the graph. Computed as the orthogonal complement of
    /// the rotated graph `(u, v) -> (-v, u)`.
    pub fn adjoint(&self) -> Self {
        let k = self.graph.dim();
        let mut rotated = DMatrix::<f64>::zeros(self.dim_h1 + self.dim_h0, k);
        rotated
            .view_mut((0, 0), (self.dim_h1, k))
            .copy_from(&(-self.g1()));
        rotated
            .view_mut((self.dim_h1, 0), (self.dim_h0, k))
            .copy_from(&self.g0());
        let span = Subspace::from_orthonormal(rotated);
        Self {
            dim_h0: self.dim_h1,
            dim_h1: self.dim_h0,
            graph: span.complement(),
            matrix: None,
        }
    }

    /// Adjoint taken inside the sub-Hilbert spaces `w` (of H1) and `v` (of
    /// H0): the full adjoint graph intersected with `w + v`. This is the
    /// right notion for operators acting between proper subspaces, such as
    /// reduced operators.
    pub fn adjoint_within(&self, w: &Subspace, v: &Subspace, tol: f64) -> Result<Self> {
        let adj = self.adjoint();
        let mut env = DMatrix::<f64>::zeros(self.dim_h1 + self.dim_h0, w.dim() + v.dim());
        env.view_mut((0, 0), (self.dim_h1, w.dim())).copy_from(w.basis());
        env.view_mut((self.dim_h1, w.dim()), (self.dim_h0, v.dim()))
            .copy_from(v.basis());
        let envelope = Subspace::from_orthonormal(env);
        let graph = adj.graph.intersect(&envelope, tol)?;
        Self::from_graph(self.dim_h1, self.dim_h0, graph)
    }

    /// `{(u, -v)}`.
    pub fn negate(&self) -> Self {
        let k = self.graph.dim();
        let mut cols = DMatrix::<f64>::zeros(self.dim_h0 + self.dim_h1, k);
        cols.view_mut((0, 0), (self.dim_h0, k)).copy_from(&self.g0());
        cols.view_mut((self.dim_h0, 0), (self.dim_h1, k))
            .copy_from(&(-self.g1()));
        Self {
            dim_h0: self.dim_h0,
            dim_h1: self.dim_h1,
            graph: Subspace::from_orthonormal(cols),
            matrix: self.matrix.as_ref().map(|m| -m),
        }
    }

    /// Inverse relation `{(v, u)}`.
    pub fn inverse(&self) -> Self {
        let k = self.graph.dim();
        let mut cols = DMatrix::<f64>::zeros(self.dim_h1 + self.dim_h0, k);
        cols.view_mut((0, 0), (self.dim_h1, k)).copy_from(&self.g1());
        cols.view_mut((self.dim_h1, 0), (self.dim_h0, k))
            .copy_from(&self.g0());
        Self {
            dim_h0: self.dim_h1,
            dim_h1: self.dim_h0,
            graph: Subspace::from_orthonormal(cols),
            matrix: None,
        }
    }

    /// Restriction to the graph vectors whose input lies in `dom`.
    pub fn restrict_domain(&self, dom: &Subspace, tol: f64) -> Result<Self> {
        if dom.ambient_dim() != self.dim_h0 {
            return Err(Error::DimensionMismatch("restrict_domain ambient".into()));
        }
        let comp = dom.complement();
        self.restrict_by(comp.basis(), true, tol)
    }

    /// Restriction to the graph vectors whose output lies in `ran`.
    pub fn restrict_range(&self, ran: &Subspace, tol: f64) -> Result<Self> {
        if ran.ambient_dim() != self.dim_h1 {
            return Err(Error::DimensionMismatch("restrict_range ambient".into()));
        }
        let comp = ran.complement();
        self.restrict_by(comp.basis(), false, tol)
    }

    /// Keeps the graph directions annihilated by `constraints^T` applied to
    /// the input block (`on_input`) or output block.
    fn restrict_by(&self, constraints: &DMatrix<f64>, on_input: bool, tol: f64) -> Result<Self> {
        if constraints.ncols() == 0 {
            return Ok(self.clone());
        }
        let block = if on_input { self.g0() } else { self.g1() };
        let cmat = constraints.transpose() * block;
        let n = nullspace_unit(&cmat, tol);
        let new_graph = self.graph.basis() * n;
        Ok(Self {
            dim_h0: self.dim_h0,
            dim_h1: self.dim_h1,
            graph: Subspace::from_orthonormal(new_graph),
            matrix: None,
        })
    }

    /// Reduced relation: the restriction to inputs orthogonal to the kernel.
    /// Its domain is `dom(A) ∩ ker(A)^perp` and its range spans `ran(A)`,
    /// so it acts injectively between `ker(A)^perp` and the range closure.
    pub fn reduced(&self, tol: f64) -> Result<Self> {
        let ker = self.kernel(tol);
        self.restrict_domain(&ker.complement(), tol)
    }

    /// Operator part: outputs projected onto the complement of the
    /// multivalued part. For selfadjoint relations this is the canonical
    /// single-valued representative.
    pub fn operator_part(&self, tol: f64) -> Self {
        let mul = self.multivalued_part(tol);
        if mul.dim() == 0 {
            return self.clone();
        }
        let k = self.graph.dim();
        let g1 = self.g1();
        let proj = &g1 - mul.basis() * (mul.basis().transpose() * &g1);
        let mut cols = DMatrix::<f64>::zeros(self.dim_h0 + self.dim_h1, k);
        cols.view_mut((0, 0), (self.dim_h0, k)).copy_from(&self.g0());
        cols.view_mut((self.dim_h0, 0), (self.dim_h1, k)).copy_from(&proj);
        Self {
            dim_h0: self.dim_h0,
            dim_h1: self.dim_h1,
            graph: Subspace::from_block_columns(&cols, tol),
            matrix: None,
        }
    }

    /// Relation composition `other ∘ self` (apply `self` first).
    pub fn compose(&self, other: &Self, tol: f64) -> Result<Self> {
        if self.dim_h1 != other.dim_h0 {
            return Err(Error::DimensionMismatch(format!(
                "compose: middle dims {} vs {}",
                self.dim_h1, other.dim_h0
            )));
        }
        let ka = self.graph.dim();
        let kb = other.graph.dim();
        // Match outputs of self with inputs of other: null([A1, -B0]).
        let mut link = DMatrix::<f64>::zeros(self.dim_h1, ka + kb);
        link.view_mut((0, 0), (self.dim_h1, ka)).copy_from(&self.g1());
        link.view_mut((0, ka), (self.dim_h1, kb)).copy_from(&(-other.g0()));
        let n = nullspace_unit(&link, tol);
        if n.ncols() == 0 {
            return Ok(Self::empty(self.dim_h0, other.dim_h1));
        }
        let ca = n.rows(0, ka).into_owned();
        let cb = n.rows(ka, kb).into_owned();
        let top = self.g0() * ca;
        let bot = other.g1() * cb;
        let mut cols = DMatrix::<f64>::zeros(self.dim_h0 + other.dim_h1, n.ncols());
        cols.view_mut((0, 0), (self.dim_h0, n.ncols())).copy_from(&top);
        cols.view_mut((self.dim_h0, 0), (other.dim_h1, n.ncols()))
            .copy_from(&bot);
        Ok(Self {
            dim_h0: self.dim_h0,
            dim_h1: other.dim_h1,
            graph: Subspace::from_block_columns(&cols, tol),
            matrix: None,
        })
    }

    /// Applies a functional relation to `x`. Errors if the relation is
    /// multivalued or `x` lies outside the domain (relative defect > `tol`).
    pub fn apply(&self, x: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
        if x.len() != self.dim_h0 {
            return Err(Error::DimensionMismatch("apply input length".into()));
        }
        if let Some(m) = &self.matrix {
            return Ok(m * x);
        }
        let out = self.apply_batch(&DMatrix::from_columns(&[x.clone()]), tol)?;
        Ok(out.column(0).into_owned())
    }

    /// Applies the relation to every column of `xs` at once, reusing one
    /// factorisation of the input block.
    pub fn apply_batch(&self, xs: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
        if xs.nrows() != self.dim_h0 {
            return Err(Error::DimensionMismatch("apply input length".into()));
        }
        if let Some(m) = &self.matrix {
            return Ok(m * xs);
        }
        if !self.is_functional(tol.max(1e-12)) {
            return Err(Error::NotFunctional("apply on a multivalued relation".into()));
        }
        let g0 = self.g0();
        let g1 = self.g1();
        // Least-squares coefficients c with G0 c ~ x, then value G1 c.
        let coeffs = super::subspace::min_norm_solve(&g0, xs, 1e-12)?;
        let recon = &g0 * &coeffs;
        for j in 0..xs.ncols() {
            let x = xs.column(j);
            let nx = x.norm();
            let defect = (x - recon.column(j)).norm();
            if defect > tol * nx.max(1.0) {
                return Err(Error::OutsideDomain { residual: defect, tol });
            }
        }
        Ok(&g1 * coeffs)
    }

    /// Dense matrix of an everywhere-defined functional relation.
    pub fn as_matrix(&self, tol: f64) -> Result<DMatrix<f64>> {
        if let Some(m) = &self.matrix {
            return Ok(m.clone());
        }
        if self.domain(tol).dim() != self.dim_h0 {
            return Err(Error::OutsideDomain { residual: 1.0, tol });
        }
        self.apply_batch(&DMatrix::identity(self.dim_h0, self.dim_h0), tol)
    }

    /// Graph distance to another relation (gap metric between subspaces).
    pub fn graph_distance(&self, other: &Self) -> f64 {
        self.graph.distance(&other.graph)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DEFAULT_TOL;

    fn three_node_difference() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 3, &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0])
    }

    #[test]
    fn adjoint_of_matrix_graph_is_transpose_graph() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.0, -1.0, 0.5, 3.0]);
        let r = LinearRelation::from_matrix(&m);
        let adj = r.adjoint();
        let rt = LinearRelation::from_matrix(&m.transpose());
        assert!(adj.graph_distance(&rt) < 1e-12);
        assert!(adj.is_functional(DEFAULT_TOL));
    }

    #[test]
    fn parts_of_difference_operator() {
        let r = LinearRelation::from_matrix(&three_node_difference());
        let ker = r.kernel(DEFAULT_TOL);
        assert_eq!(ker.dim(), 1);
        assert!(ker.contains(&DVector::from_row_slice(&[1.0, 1.0, 1.0]), 1e-12));
        assert_eq!(r.range(DEFAULT_TOL).dim(), 2);
        assert_eq!(r.domain(DEFAULT_TOL).dim(), 3);
        assert_eq!(r.multivalued_part(DEFAULT_TOL).dim(), 0);
    }

    #[test]
    fn adjoint_of_restricted_operator_is_multivalued() {
        // dom(A0) = span{e2} is not dense, so the adjoint picks up a
        // multivalued part of dimension 2.
        let dom = Subspace::from_vectors(
            3,
            &[DVector::from_row_slice(&[0.0, 1.0, 0.0])],
            DEFAULT_TOL,
        )
        .unwrap();
        let a0 = LinearRelation::from_matrix_on_domain(&three_node_difference(), &dom).unwrap();
        let adj = a0.adjoint();
        assert_eq!(adj.multivalued_part(DEFAULT_TOL).dim(), 2);
        assert_eq!(adj.domain(DEFAULT_TOL).dim(), 2);
    }

    #[test]
    fn reduced_relation_is_injective_with_same_range() {
        let m = three_node_difference();
        let r = LinearRelation::from_matrix(&m);
        let red = r.reduced(DEFAULT_TOL).unwrap();
        assert_eq!(red.kernel(DEFAULT_TOL).dim(), 0);
        assert_eq!(red.domain(DEFAULT_TOL).dim(), 2);
        assert!(red.range(DEFAULT_TOL).distance(&r.range(DEFAULT_TOL)) < 1e-12);
    }

    #[test]
    fn compose_difference_with_negated_transpose() {
        let m = three_node_difference();
        let grad = LinearRelation::from_matrix(&m);
        let div = LinearRelation::from_matrix(&(-m.transpose()));
        let lap = grad.compose(&div, DEFAULT_TOL).unwrap();
        let expect = LinearRelation::from_matrix(&(-(m.transpose() * &m)));
        assert!(lap.graph_distance(&expect) < 1e-12);
    }

    #[test]
    fn apply_checks_domain_membership() {
        let dom = Subspace::from_vectors(
            3,
            &[DVector::from_row_slice(&[0.0, 1.0, 0.0])],
            DEFAULT_TOL,
        )
        .unwrap();
        let a0 = LinearRelation::from_matrix_on_domain(&three_node_difference(), &dom).unwrap();
        let ok = a0.apply(&DVector::from_row_slice(&[0.0, 2.0, 0.0]), 1e-10);
        assert!(ok.is_ok());
        let bad = a0.apply(&DVector::from_row_slice(&[1.0, 0.0, 0.0]), 1e-10);
        assert!(matches!(bad, Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn inverse_swaps_kernel_and_multivalued_part() {
        let m = three_node_difference();
        let r = LinearRelation::from_matrix(&m);
        let inv = r.inverse();
        assert_eq!(inv.multivalued_part(DEFAULT_TOL).dim(), 1);
        assert_eq!(inv.kernel(DEFAULT_TOL).dim(), 0);
        assert_eq!(inv.domain(DEFAULT_TOL).dim(), 2);
    }
}
