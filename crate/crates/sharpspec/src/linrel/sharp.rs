//! The sharp extension of a restricted operator pair.
//!
//! A pair consists of a full operator A and a restriction A0 of it (the
//! minimal operator). With B := -adjoint(A0), which is multivalued whenever
//! dom(A0) fails to be dense, the sharp extension A# keeps exactly those
//! graph directions of A whose output is orthogonal to ker(B), equivalently
//! lies in the closed range of A0. In finite dimension this reproduces the
//! abstract nonlocal boundary condition exactly.

use super::relation::LinearRelation;
use super::subspace::Subspace;
use crate::error::{Error, Result};

/// A full operator together with a restriction of it. Both are functional;
/// graph inclusion is validated at construction.
#[derive(Debug, Clone)]
pub struct OperatorPair {
    a0: LinearRelation,
    a: LinearRelation,
}

impl OperatorPair {
    pub fn new(a0: LinearRelation, a: LinearRelation, tol: f64) -> Result<Self> {
        if a0.dim_h0() != a.dim_h0() || a0.dim_h1() != a.dim_h1() {
            return Err(Error::DimensionMismatch(format!(
                "pair ambient ({}, {}) vs ({}, {})",
                a0.dim_h0(),
                a0.dim_h1(),
                a.dim_h0(),
                a.dim_h1()
            )));
        }
        for (rel, name) in [(&a0, "A0"), (&a, "A")] {
            if !rel.is_functional(tol) {
                return Err(Error::NotFunctional(name.into()));
            }
        }
        let defect = a0.graph().defect_from(a.graph());
        if defect > tol.max(1e-12) * 100.0 {
            return Err(Error::InclusionViolated(defect));
        }
        Ok(Self { a0, a })
    }

    pub fn a0(&self) -> &LinearRelation {
        &self.a0
    }

    pub fn a(&self) -> &LinearRelation {
        &self.a
    }

    pub fn dim_h0(&self) -> usize {
        self.a.dim_h0()
    }

    pub fn dim_h1(&self) -> usize {
        self.a.dim_h1()
    }
}

/// Output of the sharp construction: the constraint data and the extension.
#[derive(Debug, Clone)]
pub struct SharpPair {
    pub pair: OperatorPair,
    /// B = -adjoint(A0); multivalued whenever dom(A0) is not all of H0.
    pub b_rel: LinearRelation,
    /// ker(B) = (ran A0)^perp, the constraint space of the extension.
    pub ker_b: Subspace,
    /// The sharp extension A#.
    pub a_sharp: LinearRelation,
}

/// Restricts a (possibly multivalued) relation to the graph vectors whose
/// output lies in `ran`. This is the relation-level sharp constraint.
pub fn sharp_of(a: &LinearRelation, ran: &Subspace, tol: f64) -> Result<LinearRelation> {
    a.restrict_range(ran, tol)
}

/// Builds the sharp extension of a pair, verifying the kernel identity
/// ker(B) = (ran A0)^perp along the way.
pub fn sharp(pair: OperatorPair, tol: f64) -> Result<SharpPair> {
    let ran_a0 = pair.a0().range(tol);
    let b_rel = pair.a0().adjoint().negate();
    let ker_b = b_rel.kernel(tol);
    // Two independent computations of the same space; disagreement means a
    // broken adjoint, not bad input.
    let defect = ker_b.distance(&ran_a0.complement());
    if defect > tol.max(1e-12) * 100.0 {
        return Err(Error::Precondition(format!(
            "ker(B) vs (ran A0)^perp defect {defect:.3e}"
        )));
    }
    let a_sharp = sharp_of(pair.a(), &ran_a0, tol)?;
    Ok(SharpPair { pair, b_rel, ker_b, a_sharp })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DEFAULT_TOL;
    use nalgebra::{DMatrix, DVector};

    /// The worked 3-node example: two difference cells, the restriction
    /// keeps only the middle node.
    fn three_node_pair() -> OperatorPair {
        let m = DMatrix::from_row_slice(2, 3, &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0]);
        let dom = Subspace::from_vectors(
            3,
            &[DVector::from_row_slice(&[0.0, 1.0, 0.0])],
            DEFAULT_TOL,
        )
        .unwrap();
        let a0 = LinearRelation::from_matrix_on_domain(&m, &dom).unwrap();
        let a = LinearRelation::from_matrix(&m);
        OperatorPair::new(a0, a, DEFAULT_TOL).unwrap()
    }

    #[test]
    fn three_node_sharp_matches_hand_computation() {
        let sp = sharp(three_node_pair(), DEFAULT_TOL).unwrap();
        // ker(B) = span{(1,1)}
        assert_eq!(sp.ker_b.dim(), 1);
        assert!(sp.ker_b.contains(&DVector::from_row_slice(&[1.0, 1.0]), 1e-12));
        // dom(A#) = {x : x1 = x3}
        let dom = sp.a_sharp.domain(DEFAULT_TOL);
        assert_eq!(dom.dim(), 2);
        assert!(dom.contains(&DVector::from_row_slice(&[1.0, 0.0, 1.0]), 1e-12));
        assert!(dom.contains(&DVector::from_row_slice(&[0.0, 1.0, 0.0]), 1e-12));
        assert!(!dom.contains(&DVector::from_row_slice(&[1.0, 0.0, 0.0]), 1e-8));
    }

    #[test]
    fn sharp_domain_equals_kernel_plus_minimal_domain() {
        let sp = sharp(three_node_pair(), DEFAULT_TOL).unwrap();
        let ker = sp.pair.a().kernel(DEFAULT_TOL);
        let dom0 = sp.pair.a0().domain(DEFAULT_TOL);
        let sum = ker.sum(&dom0, DEFAULT_TOL).unwrap();
        assert!(sp.a_sharp.domain(DEFAULT_TOL).distance(&sum) < 1e-12);
    }

    #[test]
    fn empty_restriction_gives_kernel_domain() {
        let m = DMatrix::from_row_slice(2, 3, &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0]);
        let a0 = LinearRelation::empty(3, 2);
        let a = LinearRelation::from_matrix(&m);
        let pair = OperatorPair::new(a0, a, DEFAULT_TOL).unwrap();
        let sp = sharp(pair, DEFAULT_TOL).unwrap();
        // ran(A0) = 0 so A# x must satisfy A x = 0.
        let ker = sp.pair.a().kernel(DEFAULT_TOL);
        assert!(sp.a_sharp.domain(DEFAULT_TOL).distance(&ker) < 1e-12);
    }

    #[test]
    fn full_restriction_returns_full_operator() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let a0 = LinearRelation::from_matrix(&m);
        let a = LinearRelation::from_matrix(&m);
        let pair = OperatorPair::new(a0, a, DEFAULT_TOL).unwrap();
        let sp = sharp(pair, DEFAULT_TOL).unwrap();
        assert!(sp.a_sharp.graph_distance(sp.pair.a()) < 1e-12);
    }

    #[test]
    fn inclusion_violation_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let other = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let a0 = LinearRelation::from_matrix(&other);
        let a = LinearRelation::from_matrix(&m);
        assert!(matches!(
            OperatorPair::new(a0, a, DEFAULT_TOL),
            Err(Error::InclusionViolated(_))
        ));
    }
}
