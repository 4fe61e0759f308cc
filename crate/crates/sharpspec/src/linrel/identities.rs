//! Structure checks for reductions, sharp extensions and the Krein case.
//!
//! Each routine re-derives a known identity two independent ways and reports
//! the defect between the results. Rows carry stable ids:
//!
//! * `P2.1-inv`, `P2.1-gap`: the reduced operator is invertible and its
//!   smallest singular value equals the smallest nonzero singular value of
//!   the original operator.
//! * `P2.2`: adjoint and reduction commute, with the adjoint of the reduced
//!   operator taken inside ran(A) x ker(A)^perp.
//! * `P2.4`: spectra away from zero agree between an operator and its
//!   reduction (selfadjoint inputs only).
//! * `T3.9-fd`: dom(A#) = ker(A) + dom(A0).
//! * `P3.5-pairing`: <A# x, y> = -<x, B0 y> for y in dom(B0), where B0 is
//!   the operator part of -adjoint(A).
//! * `T3.8-core`: A# is the closure of A restricted to ker(A) + dom(A0)
//!   (exact equality here; only emitted for functional A).
//! * `KvN-*`: the positivity-preserving selfadjoint extension of a strictly
//!   positive symmetric operator, built through the same range constraint.

use nalgebra::DMatrix;

use super::relation::LinearRelation;
use super::sharp::{sharp_of, SharpPair};
use super::subspace::{singular_values_desc, spectral_norm, Subspace};
use crate::eig::spectra_match;
use crate::error::{Error, Result};
use crate::report::{CheckRow, RunReport};

/// Smallest singular value of the compression of `rel` between orthonormal
/// bases of `v` (inputs) and `w` (outputs). Zero-dimensional compressions
/// report 0.
fn compressed_min_singular(
    rel: &LinearRelation,
    v: &Subspace,
    w: &Subspace,
    tol: f64,
) -> Result<f64> {
    if v.dim() == 0 || w.dim() == 0 {
        return Ok(0.0);
    }
    let values = rel.apply_batch(v.basis(), tol)?;
    let c = w.basis().transpose() * values;
    let svals = singular_values_desc(&c);
    Ok(svals.last().copied().unwrap_or(0.0))
}

/// Checks that reduction (restricting a functional operator to the
/// orthogonal complement of its kernel) behaves as an exact analogue of the
/// quotient construction: the reduced operator is invertible onto the range,
/// its conditioning equals the spectral gap of the original, and it commutes
/// with taking adjoints. Requires an everywhere-defined operator.
pub fn verify_reduction_identities(a: &LinearRelation, tol: f64) -> Result<RunReport> {
    if !a.is_functional(tol) {
        return Err(Error::NotFunctional("reduction identities".into()));
    }
    if a.domain(tol).dim() != a.dim_h0() {
        return Err(Error::Precondition(
            "reduction identities need an everywhere-defined operator".into(),
        ));
    }
    let mut rep = RunReport::new("reduction", 0);

    let m = a.as_matrix(tol)?;
    let scale = spectral_norm(&m).max(1.0);
    let ker = a.kernel(tol);
    let v = ker.complement();
    let w = a.range(tol);

    // Invertibility of the reduced operator: full rank between ker^perp and
    // the range. The compression is square by rank-nullity.
    let gap_red = compressed_min_singular(a, &v, &w, tol)?;
    let invertible = v.dim() == 0 || gap_red > 1e-10 * scale;
    rep.push(CheckRow::boolean(
        "P2.1-inv",
        "reduced operator is invertible onto the range",
        invertible,
    ));

    // The smallest nonzero singular value of A, recomputed from the full
    // matrix, must match the conditioning bound of the reduction. The Gram
    // route floors exact zeros near sqrt(eps) * scale, so the zero cutoff
    // sits above that floor.
    let mut svals = singular_values_desc(&m);
    svals.retain(|s| *s > 1e-7 * scale);
    let gap_full = svals.iter().copied().fold(0.0f64, |acc, s| {
        if acc == 0.0 {
            s
        } else {
            acc.min(s)
        }
    });
    let gap_residual = (gap_red - gap_full).abs() / scale;
    rep.push(CheckRow::measured(
        "P2.1-gap",
        "conditioning of the reduction equals the spectral gap",
        gap_residual,
        100.0 * tol,
    ));

    // Adjoint of the reduction, computed inside ran(A) x ker(A)^perp, vs
    // reduction of the adjoint. Two constructions of one relation.
    let a_red = a.reduced(tol)?;
    let lhs = a_red.adjoint_within(&w, &v, tol)?;
    let rhs = a.adjoint().reduced(tol)?;
    rep.push(CheckRow::measured(
        "P2.2",
        "adjoint of reduction equals reduction of adjoint",
        lhs.graph_distance(&rhs),
        100.0 * tol,
    ));

    // For selfadjoint inputs the nonzero spectrum survives reduction.
    let is_symmetric = a.dim_h0() == a.dim_h1()
        && spectral_norm(&(&m - m.transpose())) <= 1e-10 * scale;
    if is_symmetric {
        let sym = (&m + m.transpose()) * 0.5;
        let full: Vec<f64> = sym.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        let vb = v.basis();
        let red_mat = vb.transpose() * &sym * vb;
        let mut reduced_spec: Vec<f64> = if v.dim() == 0 {
            Vec::new()
        } else {
            red_mat.symmetric_eigen().eigenvalues.iter().copied().collect()
        };
        let mut full_spec = full;
        // Compare as sets with zero adjoined to both sides.
        full_spec.push(0.0);
        reduced_spec.push(0.0);
        let ok = spectra_match(&full_spec, &reduced_spec, (100.0 * tol * scale).max(1e-9));
        rep.push(CheckRow::boolean(
            "P2.4",
            "nonzero spectrum is preserved by reduction",
            ok,
        ));
    }

    Ok(rep)
}

/// Checks the defining identities of a sharp extension against independent
/// recomputations: the domain decomposition, the duality pairing with the
/// operator part of -adjoint(A), and (for functional A) agreement with the
/// restriction of A to ker(A) + dom(A0).
pub fn verify_sharp_identities(sp: &SharpPair, tol: f64) -> Result<RunReport> {
    let mut rep = RunReport::new("sharp", 0);
    let a = sp.pair.a();
    let a0 = sp.pair.a0();
    let budget = 100.0 * tol;

    let dom_sharp = sp.a_sharp.domain(tol);
    let ker_plus_min = a.kernel(tol).sum(&a0.domain(tol), tol)?;
    rep.push(CheckRow::measured(
        "T3.9-fd",
        "dom(A#) = ker(A) + dom(A0)",
        dom_sharp.distance(&ker_plus_min),
        budget,
    ));

    // Duality: <A# x, y> + <x, B0 y> = 0 for x in dom(A#), y in dom(B0),
    // with B0 the operator part of -adjoint(A). The multivalued parts drop
    // out because mul(A#) is orthogonal to dom(A0) and hence to dom(B0).
    let b0 = a.adjoint().negate().operator_part(tol);
    let sharp_op = sp.a_sharp.operator_part(tol);
    let x = sharp_op.domain(tol);
    let y = b0.domain(tol);
    let pairing = if x.dim() == 0 || y.dim() == 0 {
        0.0
    } else {
        let ax = sharp_op.apply_batch(x.basis(), tol)?;
        let by = b0.apply_batch(y.basis(), tol)?;
        let lhs = ax.transpose() * y.basis();
        let rhs = x.basis().transpose() * &by;
        let scale = spectral_norm(&ax).max(spectral_norm(&by)).max(1.0);
        spectral_norm(&(lhs + rhs)) / scale
    };
    rep.push(CheckRow::measured(
        "P3.5-pairing",
        "duality pairing against the operator part of -adjoint(A)",
        pairing,
        budget,
    ));

    if a.is_functional(tol) {
        let core = a.restrict_domain(&ker_plus_min, tol)?;
        rep.push(CheckRow::measured(
            "T3.8-core",
            "A# equals A restricted to ker(A) + dom(A0)",
            core.graph_distance(&sp.a_sharp),
            budget,
        ));
    }

    Ok(rep)
}

/// Builds the positivity-preserving selfadjoint extension of a strictly
/// positive symmetric operator `a0` (given on a possibly proper domain) by
/// constraining adjoint(a0) to the range of a0, and verifies extension,
/// selfadjointness, positivity and the kernel count.
///
/// Returns the extension as a relation together with the report; the
/// extension is functional whenever mul(adjoint(a0)) meets ran(a0) only
/// at zero, which holds automatically here.
pub fn krein_sharp(a0: &LinearRelation, tol: f64) -> Result<(LinearRelation, RunReport)> {
    if a0.dim_h0() != a0.dim_h1() {
        return Err(Error::DimensionMismatch(
            "positivity-preserving extension needs an endomorphism".into(),
        ));
    }
    if !a0.is_functional(tol) {
        return Err(Error::NotFunctional("minimal operator".into()));
    }
    let dom0 = a0.domain(tol);
    if dom0.dim() > 0 {
        let values = a0.apply_batch(dom0.basis(), tol)?;
        let c = dom0.basis().transpose() * &values;
        let scale = spectral_norm(&c).max(1.0);
        if spectral_norm(&(&c - c.transpose())) > 1e-8 * scale {
            return Err(Error::Precondition(
                "minimal operator is not symmetric on its domain".into(),
            ));
        }
        let sym = (&c + c.transpose()) * 0.5;
        let lam_min = sym
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if lam_min <= 1e-10 * scale {
            return Err(Error::Precondition(format!(
                "minimal operator is not strictly positive (lambda_min = {lam_min:.3e})"
            )));
        }
    }

    let a_rel = a0.adjoint();
    let ran0 = a0.range(tol);
    let ext = sharp_of(&a_rel, &ran0, tol)?;
    let budget = 100.0 * tol;
    let mut rep = RunReport::new("krein", 0);

    rep.push(CheckRow::measured(
        "KvN-ext",
        "extension contains the minimal operator",
        a0.graph().defect_from(ext.graph()),
        budget,
    ));
    rep.push(CheckRow::measured(
        "KvN-sym",
        "extension is selfadjoint as a relation",
        ext.graph_distance(&ext.adjoint()),
        budget,
    ));

    // Positivity of the compression onto the domain.
    let op = ext.operator_part(tol);
    let dom = op.domain(tol);
    let lam_min = if dom.dim() == 0 {
        0.0
    } else {
        let values = op.apply_batch(dom.basis(), tol)?;
        let c = dom.basis().transpose() * values;
        let sym = (&c + c.transpose()) * 0.5;
        sym.symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    };
    rep.push(CheckRow::measured(
        "KvN-pos",
        "extension is positive semidefinite",
        (-lam_min).max(0.0),
        budget.max(1e-9),
    ));

    rep.push(CheckRow::measured(
        "KvN-ker",
        "kernel of the extension equals ker(adjoint(A0))",
        ext.kernel(tol).distance(&a_rel.kernel(tol)),
        budget,
    ));

    Ok((ext, rep))
}

/// The second difference matrix with zero-extension stencil, restricted to
/// interior nodes: the standard strictly positive symmetric operator whose
/// adjoint constraint produces a two-dimensional affine kernel.
pub fn interior_second_difference(n: usize, h: f64) -> Result<LinearRelation> {
    if n < 3 {
        return Err(Error::InvalidDomain(format!(
            "need at least 3 nodes, got {n}"
        )));
    }
    let s = 1.0 / (h * h);
    let mut t = DMatrix::zeros(n, n);
    for i in 0..n {
        t[(i, i)] = 2.0 * s;
        if i + 1 < n {
            t[(i, i + 1)] = -s;
            t[(i + 1, i)] = -s;
        }
    }
    let mut interior = DMatrix::zeros(n, n - 2);
    for j in 0..n - 2 {
        interior[(j + 1, j)] = 1.0;
    }
    let dom = Subspace::from_orthonormal(interior);
    LinearRelation::from_matrix_on_domain(&t, &dom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linrel::sharp::{sharp, OperatorPair};
    use crate::DEFAULT_TOL;
    use nalgebra::DVector;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn reduction_identities_on_random_rectangular_operator() {
        let m = random_matrix(6, 4, 7);
        let a = LinearRelation::from_matrix(&m);
        let rep = verify_reduction_identities(&a, DEFAULT_TOL).unwrap();
        assert!(rep.all_pass(), "{}", rep.to_text());
        // No symmetric row for a rectangular input.
        assert!(rep.rows.iter().all(|r| r.id != "P2.4"));
    }

    #[test]
    fn reduction_identities_on_singular_symmetric_operator() {
        // Second difference with free ends: kernel is the constants.
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0],
        );
        let a = LinearRelation::from_matrix(&m);
        let rep = verify_reduction_identities(&a, DEFAULT_TOL).unwrap();
        assert!(rep.all_pass(), "{}", rep.to_text());
        assert!(rep.rows.iter().any(|r| r.id == "P2.4"));
    }

    #[test]
    fn reduction_rejects_partial_domain() {
        let m = random_matrix(3, 3, 1);
        let dom = Subspace::from_vectors(
            3,
            &[DVector::from_row_slice(&[1.0, 0.0, 0.0])],
            DEFAULT_TOL,
        )
        .unwrap();
        let a = LinearRelation::from_matrix_on_domain(&m, &dom).unwrap();
        assert!(verify_reduction_identities(&a, DEFAULT_TOL).is_err());
    }

    #[test]
    fn sharp_identities_on_three_node_difference() {
        let m = DMatrix::from_row_slice(2, 3, &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0]);
        let dom = Subspace::from_vectors(
            3,
            &[DVector::from_row_slice(&[0.0, 1.0, 0.0])],
            DEFAULT_TOL,
        )
        .unwrap();
        let a0 = LinearRelation::from_matrix_on_domain(&m, &dom).unwrap();
        let a = LinearRelation::from_matrix(&m);
        let sp = sharp(OperatorPair::new(a0, a, DEFAULT_TOL).unwrap(), DEFAULT_TOL).unwrap();
        let rep = verify_sharp_identities(&sp, DEFAULT_TOL).unwrap();
        assert!(rep.all_pass(), "{}", rep.to_text());
        assert!(rep.rows.iter().any(|r| r.id == "T3.8-core"));
    }

    #[test]
    fn sharp_identities_on_random_restricted_operator() {
        let m = random_matrix(5, 5, 11);
        let dom = Subspace::from_matrix_columns(&random_matrix(5, 2, 12), DEFAULT_TOL);
        let a0 = LinearRelation::from_matrix_on_domain(&m, &dom).unwrap();
        let a = LinearRelation::from_matrix(&m);
        let sp = sharp(OperatorPair::new(a0, a, DEFAULT_TOL).unwrap(), DEFAULT_TOL).unwrap();
        let rep = verify_sharp_identities(&sp, DEFAULT_TOL).unwrap();
        assert!(rep.all_pass(), "{}", rep.to_text());
    }

    #[test]
    fn krein_extension_of_interior_second_difference() {
        let a0 = interior_second_difference(6, 1.0).unwrap();
        let (ext, rep) = krein_sharp(&a0, DEFAULT_TOL).unwrap();
        assert!(rep.all_pass(), "{}", rep.to_text());
        // The affine sequences form the kernel: dimension two.
        assert_eq!(ext.kernel(DEFAULT_TOL).dim(), 2);
        let affine = DVector::from_fn(6, |i, _| 1.0 + 3.0 * i as f64);
        assert!(ext.kernel(DEFAULT_TOL).contains(&affine, 1e-8));
        // Functional even though adjoint(A0) is multivalued.
        assert!(ext.is_functional(DEFAULT_TOL));
    }

    #[test]
    fn krein_extension_of_full_domain_operator_is_identity_map() {
        // Already selfadjoint and positive: the construction returns it.
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
        let a0 = LinearRelation::from_matrix(&m);
        let (ext, rep) = krein_sharp(&a0, DEFAULT_TOL).unwrap();
        assert!(rep.all_pass(), "{}", rep.to_text());
        assert!(ext.graph_distance(&a0) < 1e-10);
    }

    #[test]
    fn krein_rejects_indefinite_operator() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let a0 = LinearRelation::from_matrix(&m);
        assert!(krein_sharp(&a0, DEFAULT_TOL).is_err());
    }
}
