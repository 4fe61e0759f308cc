//! Common result type for every eigenvalue routine in the crate.

use nalgebra::DMatrix;

/// Solver bookkeeping attached to an [`EigResult`].
#[derive(Debug, Clone)]
pub struct SolverMeta {
    pub iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    pub tol: f64,
    pub cluster_tol: f64,
}

impl Default for SolverMeta {
    fn default() -> Self {
        Self {
            iterations: 0,
            restarts: 0,
            seed: crate::DEFAULT_SEED,
            tol: crate::DEFAULT_TOL,
            cluster_tol: 0.0,
        }
    }
}

/// Candidate that failed residual verification (or is genuinely complex);
/// kept separate so verified output never silently absorbs it.
#[derive(Debug, Clone)]
pub struct Unverified {
    pub value_re: f64,
    pub value_im: f64,
    pub residual: f64,
    pub reason: String,
}

/// Verified eigenvalues with residuals, cluster structure and (optionally)
/// eigenvectors. Vectors may be complex; the imaginary part matrix is absent
/// for purely real routes.
#[derive(Debug, Clone)]
pub struct EigResult {
    /// Short operator label, used in reports ("laplace-sharp-1d", ...).
    pub operator: String,
    pub eigenvalues: Vec<f64>,
    /// Relative residual of each reported pair, in the metric documented by
    /// the producing routine.
    pub residuals: Vec<f64>,
    /// Id of the tolerance-cluster each eigenvalue belongs to.
    pub cluster_ids: Vec<usize>,
    /// Per-pair defect of a first-order operator equation when that is a
    /// different quantity from the enforced residual (reported, not gated).
    /// Routines that have no such secondary equation leave this `None`.
    pub defects: Option<Vec<f64>>,
    pub vectors_re: Option<DMatrix<f64>>,
    pub vectors_im: Option<DMatrix<f64>>,
    pub unverified: Vec<Unverified>,
    pub meta: SolverMeta,
}

impl EigResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Largest magnitude among the reported eigenvalues (0 when empty).
    pub fn max_abs(&self) -> f64 {
        self.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    /// Recomputes cluster ids by grouping eigenvalues whose gaps are at most
    /// `cluster_tol` (absolute). Assumes `eigenvalues` sorted ascending.
    pub fn assign_clusters(&mut self, cluster_tol: f64) {
        self.meta.cluster_tol = cluster_tol;
        self.cluster_ids = cluster_by_gap(&self.eigenvalues, cluster_tol);
    }

    /// Multiplicity of the cluster containing index `i`.
    pub fn cluster_size(&self, i: usize) -> usize {
        let id = self.cluster_ids[i];
        self.cluster_ids.iter().filter(|&&c| c == id).count()
    }
}

/// Groups a sorted slice into clusters separated by gaps larger than `tol`.
pub fn cluster_by_gap(sorted: &[f64], tol: f64) -> Vec<usize> {
    let mut ids = Vec::with_capacity(sorted.len());
    let mut current = 0usize;
    for (i, &x) in sorted.iter().enumerate() {
        if i > 0 && (x - sorted[i - 1]).abs() > tol {
            current += 1;
        }
        ids.push(current);
    }
    ids
}

/// Compares two eigenvalue multisets after clustering: every cluster must
/// match in value (within `tol`) and, away from zero, in multiplicity.
/// Clusters at zero (|value| <= `tol`) only need to agree on presence.
pub fn spectra_match(a: &[f64], b: &[f64], tol: f64) -> bool {
    let ca = collapse(a, tol);
    let cb = collapse(b, tol);
    let nonzero = |s: &[(f64, usize)]| {
        s.iter().filter(|(v, _)| v.abs() > tol).cloned().collect::<Vec<_>>()
    };
    let za = ca.iter().any(|(v, _)| v.abs() <= tol);
    let zb = cb.iter().any(|(v, _)| v.abs() <= tol);
    if za != zb {
        return false;
    }
    let na = nonzero(&ca);
    let nb = nonzero(&cb);
    if na.len() != nb.len() {
        return false;
    }
    na.iter()
        .zip(nb.iter())
        .all(|((va, ma), (vb, mb))| (va - vb).abs() <= tol * va.abs().max(1.0) && ma == mb)
}

fn collapse(values: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let ids = cluster_by_gap(&sorted, tol);
    let mut out: Vec<(f64, usize)> = Vec::new();
    for (i, &id) in ids.iter().enumerate() {
        if out.len() == id {
            out.push((sorted[i], 1));
        } else {
            let e = &mut out[id];
            e.0 = (e.0 * e.1 as f64 + sorted[i]) / (e.1 as f64 + 1.0);
            e.1 += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clustering_groups_close_values() {
        let ids = cluster_by_gap(&[0.0, 1e-9, 1.0, 1.0 + 1e-9, 2.0], 1e-6);
        assert_eq!(ids, vec![0, 0, 1, 1, 2]);
    }

    #[test]
    fn spectra_match_ignores_zero_multiplicity() {
        assert!(spectra_match(&[0.0, 0.0, 2.0], &[0.0, 2.0], 1e-8));
        assert!(!spectra_match(&[0.0, 2.0, 2.0], &[0.0, 2.0], 1e-8));
        assert!(!spectra_match(&[0.0, 2.0], &[2.0], 1e-8));
    }
}
