//! Verified point spectra of dense relations via compression.

use nalgebra::{DMatrix, DVector};

use super::relation::LinearRelation;
use super::subspace::Subspace;
use crate::eig::{EigResult, SolverMeta, Unverified};
use crate::error::{Error, Result};

/// Relative cluster width applied to `max |lambda|` when the caller does not
/// override it.
pub const DEFAULT_CLUSTER_REL: f64 = 1e-6;

/// Eigenvalues of the compression of a functional relation onto a subspace
/// of its domain. Each returned pair is verified against the action of the
/// full relation: `|A v - lambda v| <= tol * scale`. Candidates that fail
/// verification (or form complex pairs of a nonsymmetric compression) are
/// reported in `unverified`, never silently dropped or merged.
pub fn point_spectrum(
    a: &LinearRelation,
    dom_restriction: &Subspace,
    tol: f64,
    label: &str,
) -> Result<EigResult> {
    if a.dim_h0() != a.dim_h1() {
        return Err(Error::DimensionMismatch(format!(
            "point spectrum needs an endomorphism, got {} -> {}",
            a.dim_h0(),
            a.dim_h1()
        )));
    }
    if dom_restriction.ambient_dim() != a.dim_h0() {
        return Err(Error::DimensionMismatch("restriction ambient".into()));
    }
    let dom = a.domain(tol);
    let defect = dom_restriction.defect_from(&dom);
    if defect > tol * 100.0 {
        return Err(Error::OutsideDomain { residual: defect, tol });
    }
    let q = dom_restriction.basis().clone();
    let k = q.ncols();
    if k == 0 {
        return Ok(EigResult {
            operator: label.to_string(),
            eigenvalues: vec![],
            residuals: vec![],
            cluster_ids: vec![],
            defects: None,
            vectors_re: None,
            vectors_im: None,
            unverified: vec![],
            meta: SolverMeta { tol, ..SolverMeta::default() },
        });
    }
    let aq = a.apply_batch(&q, tol.max(1e-9))?;
    let c = q.transpose() * &aq;
    let scale = c.norm().max(1.0);

    let mut pairs: Vec<(f64, DVector<f64>)> = Vec::new();
    let mut unverified: Vec<Unverified> = Vec::new();

    let asym = (&c - c.transpose()).norm();
    if asym <= 1e-10 * scale {
        let sym = (&c + c.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        for i in 0..k {
            pairs.push((eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned()));
        }
    } else {
        // Nonsymmetric compression: real eigenvalues get vectors from the
        // nullspace of (C - lambda I); complex pairs are reported as
        // unverified candidates.
        let eigs = c.clone().complex_eigenvalues();
        for ev in eigs.iter() {
            if ev.im.abs() > 1e-8 * scale {
                unverified.push(Unverified {
                    value_re: ev.re,
                    value_im: ev.im,
                    residual: f64::NAN,
                    reason: "complex eigenvalue of nonsymmetric compression".into(),
                });
                continue;
            }
            let shifted = &c - DMatrix::<f64>::identity(k, k) * ev.re;
            // Near-null direction of (C - lambda I) from its Gram matrix;
            // accuracy is recovered by the residual check below.
            let gram = shifted.transpose() * &shifted;
            let eig = gram.symmetric_eigen();
            let idx = eig
                .eigenvalues
                .iter()
                .enumerate()
                .min_by(|x, y| x.1.partial_cmp(y.1).unwrap())
                .map(|(i, _)| i)
                .unwrap();
            pairs.push((ev.re, eig.eigenvectors.column(idx).into_owned()));
        }
    }

    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());

    let mut eigenvalues = Vec::new();
    let mut residuals = Vec::new();
    let mut vec_cols: Vec<DVector<f64>> = Vec::new();
    for (lam, cvec) in pairs {
        let v = &q * &cvec;
        let av = &aq * &cvec;
        let res = (&av - &v * lam).norm() / v.norm().max(1e-300) / scale;
        if res <= tol * 100.0 {
            eigenvalues.push(lam);
            residuals.push(res);
            vec_cols.push(v);
        } else {
            unverified.push(Unverified {
                value_re: lam,
                value_im: 0.0,
                residual: res,
                reason: "residual above tolerance".into(),
            });
        }
    }

    let mut result = EigResult {
        operator: label.to_string(),
        eigenvalues,
        residuals,
        cluster_ids: vec![],
        defects: None,
        vectors_re: if vec_cols.is_empty() {
            None
        } else {
            Some(DMatrix::from_columns(&vec_cols))
        },
        vectors_im: None,
        unverified,
        meta: SolverMeta { tol, ..SolverMeta::default() },
    };
    let width = DEFAULT_CLUSTER_REL * result.max_abs();
    result.assign_clusters(width.max(1e-14));
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DEFAULT_TOL;

    #[test]
    fn diagonal_restriction_keeps_visible_eigenvalues() {
        // diag(0, 2) restricted to span{e2} sees only 2.
        let m = DMatrix::from_partial_diagonal(2, 2, &[0.0, 2.0]);
        let a = LinearRelation::from_matrix(&m);
        let sub = Subspace::from_vectors(
            2,
            &[DVector::from_row_slice(&[0.0, 1.0])],
            DEFAULT_TOL,
        )
        .unwrap();
        let r = point_spectrum(&a, &sub, DEFAULT_TOL, "diag").unwrap();
        assert_eq!(r.eigenvalues.len(), 1);
        assert!((r.eigenvalues[0] - 2.0).abs() < 1e-12);
        assert!(r.residuals[0] < 1e-12);
    }

    #[test]
    fn symmetric_full_compression_recovers_spectrum() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
        let a = LinearRelation::from_matrix(&m);
        let r = point_spectrum(&a, &Subspace::full(3), DEFAULT_TOL, "tri").unwrap();
        let sq2 = std::f64::consts::SQRT_2;
        let expect = [2.0 - sq2, 2.0, 2.0 + sq2];
        assert_eq!(r.eigenvalues.len(), 3);
        for (got, want) in r.eigenvalues.iter().zip(expect.iter()) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn restriction_outside_domain_is_rejected() {
        let m = DMatrix::from_row_slice(2, 3, &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0]);
        let dom = Subspace::from_vectors(
            3,
            &[DVector::from_row_slice(&[0.0, 1.0, 0.0])],
            DEFAULT_TOL,
        )
        .unwrap();
        let a0 = LinearRelation::from_matrix_on_domain(&m, &dom).unwrap();
        // a0 maps R^3 -> R^2: not an endomorphism
        assert!(point_spectrum(&a0, &Subspace::full(3), DEFAULT_TOL, "x").is_err());
    }

    #[test]
    fn rotation_reports_complex_pair_as_unverified() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let a = LinearRelation::from_matrix(&m);
        let r = point_spectrum(&a, &Subspace::full(2), DEFAULT_TOL, "rot").unwrap();
        assert!(r.eigenvalues.is_empty());
        assert_eq!(r.unverified.len(), 2);
    }
}
