//! Named spectral drivers, each returning a verified [`EigResult`].
//!
//! Small 1d/2d problems go through the exact relation calculus; the 3d
//! selfadjoint curl goes through the covering-torus resolvent and restarted
//! Lanczos, with every reported eigenvalue re-checked against the curl
//! compression itself.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lanczos::{hermitian_extremal_eigs, LanczosOptions, RitzPair};
use super::resolvent::CurlResolvent;
use super::torus::TorusGrid;
use crate::complex::mimetic;
use crate::complex::{CubicalComplex, VoxelDomain};
use crate::eig::{EigResult, SolverMeta, Unverified};
use crate::error::{Error, Result};
use crate::linrel::spectrum::DEFAULT_CLUSTER_REL;
use crate::linrel::subspace::{singular_values_desc, spectral_norm};
use crate::linrel::{point_spectrum, sharp, LinearRelation, Subspace};
use crate::DEFAULT_SEED;

/// Dense relation-calculus ceilings: vertices for the 1d line and the 2d
/// grid, domain edges for the dense curl cross-check.
const MAX_NODES_1D: usize = 1025;
const MAX_VERTICES_2D: usize = 625;
const MAX_EDGES_DENSE_CURL: usize = 2500;

/// Knobs for the iterative selfadjoint-curl eigensolver.
#[derive(Debug, Clone)]
pub struct CurlParams {
    /// How many eigenvalues to target, counted from smallest magnitude.
    pub count: usize,
    /// Acceptance tolerance for eigen residuals (see `curl_sharp_eigs`).
    pub tol: f64,
    /// Relative tolerance of the inner conjugate-gradient solves.
    pub cg_tol: f64,
    /// Seed for start vectors and probes.
    pub seed: u64,
    /// Covering torus cells per axis; `None` doubles the bounding box.
    pub torus_n: Option<[usize; 3]>,
}

impl CurlParams {
    pub fn new(count: usize) -> Self {
        Self { count, tol: 1e-8, cg_tol: 1e-10, seed: DEFAULT_SEED, torus_n: None }
    }
}

/// Eigenvalues of the sharp Laplacian of a 1d or 2d voxel domain through
/// the exact relation calculus, in lumped-L2 vertex coordinates. The sign
/// convention is the analyst's: the spectrum is nonpositive.
pub fn laplace_sharp_eigs(domain: &VoxelDomain, tol: f64) -> Result<EigResult> {
    Ok(laplace_sharp_with_coords(domain, tol)?.0)
}

/// Like [`laplace_sharp_eigs`] but also returns the vertex measure used for
/// the coordinate change, so eigenvectors can be mapped back to plain nodal
/// values (divide componentwise by `sqrt(w)`).
pub fn laplace_sharp_with_coords(domain: &VoxelDomain, tol: f64) -> Result<(EigResult, Vec<f64>)> {
    if domain.dim != 1 && domain.dim != 2 {
        return Err(Error::Precondition(format!(
            "dense sharp Laplacian covers 1d and 2d domains, got {}d",
            domain.dim
        )));
    }
    let complex = CubicalComplex::build(domain);
    let vertices = complex.cell_count(0);
    let limit = if domain.dim == 1 { MAX_NODES_1D } else { MAX_VERTICES_2D };
    if vertices > limit {
        return Err(Error::ResourceLimit(format!(
            "{} vertices exceeds the dense limit {limit} for {}d",
            vertices, domain.dim
        )));
    }
    let rel = complex.relative();
    let pair = mimetic::pair_weighted(&complex, &rel, 0, tol)?;
    let sp = sharp(pair, tol)?;
    let grad = &sp.a_sharp;
    let lap = grad.compose(&grad.adjoint().negate(), tol)?.operator_part(tol);
    let dom = lap.domain(tol);
    let mut eig = point_spectrum(&lap, &dom, tol, "laplace-sharp")?;
    eig.meta.seed = DEFAULT_SEED;
    Ok((eig, mimetic::weights(&complex, 0)))
}

/// Compression of the 1d sharp derivative onto its domain, in lumped-L2
/// coordinates on an `n_nodes`-point unit interval.
fn grad_sharp_compression(n_nodes: usize, tol: f64) -> Result<DMatrix<f64>> {
    if n_nodes < 3 {
        return Err(Error::Precondition("need at least 3 nodes".into()));
    }
    if n_nodes > MAX_NODES_1D {
        return Err(Error::ResourceLimit(format!("{n_nodes} nodes exceeds {MAX_NODES_1D}")));
    }
    let cells = n_nodes - 1;
    let h = 1.0 / cells as f64;
    let domain = VoxelDomain::from_predicate(1, [cells, 1, 1], h, [0.0; 3], |_| true);
    let complex = CubicalComplex::build(&domain);
    let rel = complex.relative();
    let pair = mimetic::pair_weighted(&complex, &rel, 0, tol)?;
    let sp = sharp(pair, tol)?;
    let dom = sp.a_sharp.domain(tol);
    sp.a_sharp.apply_batch(dom.basis(), tol)
}

/// Spectrum of the selfadjoint block pairing `[[0, M*], [M, 0]]` of the 1d
/// sharp derivative compression `M`. Nonzero eigenvalues come in `+-sigma`
/// pairs, `sigma` a singular value of `M`.
pub fn d_sharp_1d(n_nodes: usize, tol: f64) -> Result<EigResult> {
    let m = grad_sharp_compression(n_nodes, tol)?;
    let (rows, cols) = (m.nrows(), m.ncols());
    let dim = rows + cols;
    let mut block = DMatrix::<f64>::zeros(dim, dim);
    block.view_mut((0, cols), (cols, rows)).copy_from(&m.transpose());
    block.view_mut((cols, 0), (rows, cols)).copy_from(&m);
    let rel = LinearRelation::from_matrix(&block);
    let mut eig = point_spectrum(&rel, &Subspace::full(dim), tol, "d-sharp-1d")?;
    // Block coordinates are internal; the values are the interface.
    eig.vectors_re = None;
    Ok(eig)
}

/// Smallest nonzero singular value of the 1d sharp derivative: the discrete
/// sharp Poincare constant of the unit interval.
pub fn grad_sharp_min_singular(n_nodes: usize, tol: f64) -> Result<f64> {
    let m = grad_sharp_compression(n_nodes, tol)?;
    let sv = singular_values_desc(&m);
    let top = sv.first().copied().unwrap_or(0.0);
    // Gram-route zeros surface at about sqrt(eps) * top; the physical
    // smallest singular value stays near 2 pi, far above this line.
    let cutoff = top * 1e-5;
    sv.iter()
        .rev()
        .find(|&&s| s > cutoff)
        .copied()
        .ok_or_else(|| Error::Precondition("derivative compression is zero".into()))
}

/// Least-squares fit `N(lambda) ~ constant * volume * lambda^exponent` to the
/// counting function of the positive eigenvalues of `e`; returns
/// `(exponent, constant)`. Needs at least 30 positive values.
pub fn weyl_fit(e: &EigResult, volume: f64) -> Result<(f64, f64)> {
    if volume <= 0.0 {
        return Err(Error::Precondition("volume must be positive".into()));
    }
    let floor = e.max_abs() * 1e-8;
    let mut pos: Vec<f64> = e.eigenvalues.iter().copied().filter(|&x| x > floor).collect();
    pos.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if pos.len() < 30 {
        return Err(Error::Precondition(format!(
            "Weyl fit needs at least 30 positive eigenvalues, got {}",
            pos.len()
        )));
    }
    let n = pos.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (j, lam) in pos.iter().enumerate() {
        let x = lam.ln();
        let y = ((j + 1) as f64).ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 * n * sxx.max(1.0) {
        return Err(Error::Precondition("degenerate eigenvalue range for the fit".into()));
    }
    let exponent = (n * sxy - sx * sy) / denom;
    let intercept = (sy - exponent * sx) / n;
    Ok((exponent, intercept.exp() / volume))
}

/// Exact eigenvalues of the Hermitian torus curl: each Fourier mode
/// contributes `{0, +|kappa|, -|kappa|}` (three zeros at the zero mode).
/// Sorted ascending.
pub fn torus_symbol_spectrum(grid: &TorusGrid) -> Vec<f64> {
    let mut out = Vec::with_capacity(3 * grid.vertex_count());
    for k2 in 0..grid.n[2] {
        for k1 in 0..grid.n[1] {
            for k0 in 0..grid.n[0] {
                let kap = [
                    grid.kappa_theta(k0, 0).0,
                    grid.kappa_theta(k1, 1).0,
                    grid.kappa_theta(k2, 2).0,
                ];
                let norm = (kap[0] * kap[0] + kap[1] * kap[1] + kap[2] * kap[2]).sqrt();
                out.push(0.0);
                out.push(norm);
                out.push(-norm);
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// First Beltrami eigenvalue of the unit ball: the root of `tan x = x` in
/// `(pi, 3 pi / 2)`, by bisection.
pub fn ball_beltrami_oracle() -> f64 {
    let f = |x: f64| x.tan() - x;
    let mut lo = PI + 0.1;
    let mut hi = 1.5 * PI - 1e-9;
    debug_assert!(f(lo) < 0.0 && f(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Smallest-magnitude eigenvalues of the selfadjoint curl on a 3d voxel
/// domain, through Lanczos on the compressed torus resolvent.
///
/// Enforced bound: every reported pair satisfies `|R v - mu v| <= tol |R|`
/// with `R` the compressed resolvent, `mu = 1/lambda` and `|v| = 1`; the
/// solver recomputes that residual explicitly per pair and `residuals`
/// stores it (relative to the spectral-norm estimate of `R`). Pairs that
/// miss the bound, and resolvent eigenvalues too close to zero to invert,
/// land in `unverified`.
///
/// `defects` reports, per pair, the first-order equation defect
/// `|P K v - lambda v|` with `K` the Hermitian curl compression and `P` the
/// kernel-complement projector. On the full torus the compression is the
/// operator itself and the defect is solver-small; on a proper subdomain it
/// carries an O(h^p) boundary layer (extension by zero intertwines with the
/// curl stencil exactly, not with the half-shift Hermitian form), so it
/// measures discretization quality, not solver quality, and is reported
/// without gating.
pub fn curl_sharp_eigs(
    domain: &VoxelDomain,
    params: &CurlParams,
) -> Result<(EigResult, CurlResolvent)> {
    let mut op = CurlResolvent::new(domain.clone(), params.torus_n, params.cg_tol, params.seed)?;
    let eig = curl_sharp_eigs_with(&mut op, params)?;
    Ok((eig, op))
}

/// [`curl_sharp_eigs`] on an already-built resolvent (reuses FFT plans and
/// the projector chain; `cg_tol` and the torus are fixed at construction).
pub fn curl_sharp_eigs_with(op: &mut CurlResolvent, params: &CurlParams) -> Result<EigResult> {
    let dim = op.edge_dim();

    // Projected random start; the one-sided apply keeps the Krylov space in
    // ran(P) up to cg_tol.
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut start: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    op.project(&mut start)?;

    // Both signs of every targeted magnitude: ask for extra extremal pairs.
    let mut opts = LanczosOptions::new(2 * params.count);
    opts.tol = params.tol;
    opts.seed = params.seed;
    let outcome = {
        let op = &mut *op;
        hermitian_extremal_eigs(
            dim,
            |u, out| op.apply_resolvent_projected(u, out),
            &opts,
            Some(start),
        )?
    };

    let mu_cutoff = 1e-10 * outcome.norm_estimate.max(1e-300);
    let mut kept: Vec<(f64, RitzPair)> = Vec::new();
    let mut unverified: Vec<Unverified> = Vec::new();
    for pair in outcome.pairs {
        if pair.value.abs() <= mu_cutoff {
            unverified.push(Unverified {
                value_re: pair.value,
                value_im: 0.0,
                residual: pair.residual,
                reason: "resolvent eigenvalue too close to zero to invert".into(),
            });
            continue;
        }
        // The solver computed the true residual |R v - mu v| / |R|; that is
        // the enforced bound, re-checked here so the gate is local.
        if pair.residual > params.tol {
            unverified.push(Unverified {
                value_re: 1.0 / pair.value,
                value_im: 0.0,
                residual: pair.residual,
                reason: "resolvent residual above tolerance".into(),
            });
            continue;
        }
        kept.push((1.0 / pair.value, pair));
    }

    if !outcome.converged {
        unverified.push(Unverified {
            value_re: f64::NAN,
            value_im: f64::NAN,
            residual: f64::NAN,
            reason: format!(
                "lanczos stopped after {} restarts with {} verified of {} requested values",
                outcome.restarts,
                kept.len(),
                2 * params.count
            ),
        });
    }

    kept.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut eigenvalues = Vec::with_capacity(kept.len());
    let mut residuals = Vec::with_capacity(kept.len());
    let mut defects = Vec::with_capacity(kept.len());
    let mut kv = vec![Complex64::ZERO; dim];
    let mut re = DMatrix::<f64>::zeros(dim, kept.len());
    let mut im = DMatrix::<f64>::zeros(dim, kept.len());
    for (j, (lambda, pair)) in kept.iter().enumerate() {
        eigenvalues.push(*lambda);
        residuals.push(pair.residual);
        op.apply_curl_compression(&pair.vector, &mut kv);
        op.project(&mut kv)?;
        let defect: f64 = kv
            .iter()
            .zip(&pair.vector)
            .map(|(a, b)| (a - b * lambda).norm_sqr())
            .sum::<f64>()
            .sqrt();
        defects.push(defect);
        for (i, x) in pair.vector.iter().enumerate() {
            re[(i, j)] = x.re;
            im[(i, j)] = x.im;
        }
    }

    let cluster_tol = DEFAULT_CLUSTER_REL
        * eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-14);
    let mut eig = EigResult {
        operator: "curl-sharp".into(),
        eigenvalues,
        residuals,
        cluster_ids: vec![],
        defects: Some(defects),
        vectors_re: if kept.is_empty() { None } else { Some(re) },
        vectors_im: if kept.is_empty() { None } else { Some(im) },
        unverified,
        meta: SolverMeta {
            iterations: outcome.applies,
            restarts: outcome.restarts,
            seed: params.seed,
            tol: params.tol,
            cluster_tol,
        },
    };
    eig.assign_clusters(cluster_tol);
    Ok(eig)
}

/// Dense cross-check of [`curl_sharp_eigs`]: materialize the compressed
/// resolvent column by column, realify it, invert it in the exact relation
/// calculus (the kernel becomes the multivalued part, which the operator
/// part discards) and read off the verified point spectrum of the operator
/// part on its domain. The dense route shares the spectral pseudoinverse
/// and the projector chain with the iterative one, so agreement checks the
/// whole eigensolver chain against plain dense linear algebra.
///
/// Resolvent eigenvalues below `1e-6 |R|` are dropped before inversion:
/// past that floor the reciprocal amplifies solver noise instead of
/// resolving spectrum. Realification doubles every multiplicity exactly;
/// adjacent pairs are fused before returning and a value without a partner
/// lands in `unverified`. Only feasible for small domains.
pub fn curl_sharp_dense_oracle(op: &mut CurlResolvent, tol: f64) -> Result<EigResult> {
    let m = op.edge_dim();
    if m > MAX_EDGES_DENSE_CURL {
        return Err(Error::ResourceLimit(format!(
            "{m} edges exceeds the dense curl limit {MAX_EDGES_DENSE_CURL}"
        )));
    }
    let (a, b) = op.dense_resolvent_matrix()?;
    // Exact Hermitian part; the raw columns are symmetric only to cg_tol and
    // the realified block structure below needs A = A^T, B = -B^T exactly.
    let a = (&a + a.transpose()) * 0.5;
    let b = (&b - b.transpose()) * 0.5;
    let two = 2 * m;
    let mut sr = DMatrix::<f64>::zeros(two, two);
    sr.view_mut((0, 0), (m, m)).copy_from(&a);
    sr.view_mut((0, m), (m, m)).copy_from(&(-&b));
    sr.view_mut((m, 0), (m, m)).copy_from(&b);
    sr.view_mut((m, m), (m, m)).copy_from(&a);

    let norm_r = spectral_norm(&sr);
    let mu_floor = 1e-6 * norm_r.max(1e-300);

    let endo = LinearRelation::from_matrix(&sr).inverse().operator_part(mu_floor);
    let dom = endo.domain(mu_floor);
    let eig = point_spectrum(&endo, &dom, tol, "curl-sharp-dense")?;

    // Fuse the exact realification doubling pairwise and drop the inverted
    // noise end.
    let lambda_cap = 1.0 / mu_floor;
    let mut eigenvalues = Vec::new();
    let mut residuals = Vec::new();
    let mut unverified = eig.unverified.clone();
    let mut i = 0;
    while i < eig.eigenvalues.len() {
        let v = eig.eigenvalues[i];
        if v.abs() >= lambda_cap {
            i += 1;
            continue;
        }
        let pair_tol = 1e-4 * v.abs().max(1e-12);
        if i + 1 < eig.eigenvalues.len() && (eig.eigenvalues[i + 1] - v).abs() <= pair_tol {
            eigenvalues.push(0.5 * (v + eig.eigenvalues[i + 1]));
            residuals.push(eig.residuals[i].max(eig.residuals[i + 1]));
            i += 2;
        } else {
            unverified.push(Unverified {
                value_re: v,
                value_im: 0.0,
                residual: eig.residuals[i],
                reason: "realified eigenvalue without a partner".into(),
            });
            i += 1;
        }
    }
    let cluster_tol = DEFAULT_CLUSTER_REL
        * eigenvalues.iter().fold(0.0f64, |mx, x| mx.max(x.abs())).max(1e-14);
    let mut out = EigResult {
        operator: "curl-sharp-dense".into(),
        eigenvalues,
        residuals,
        cluster_ids: vec![],
        defects: None,
        vectors_re: None,
        vectors_im: None,
        unverified,
        meta: SolverMeta { tol, cluster_tol, ..SolverMeta::default() },
    };
    out.assign_clusters(cluster_tol);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sharp_spectra::torus::{zero_field, SpectralCurl, SymbolKind};
    use crate::DEFAULT_TOL;
    use approx::assert_relative_eq;

    #[test]
    fn ball_beltrami_oracle_is_the_tan_fixed_point() {
        let x = ball_beltrami_oracle();
        assert_relative_eq!(x, 4.493409457909064, epsilon = 1e-12);
        assert!((x.tan() - x).abs() < 1e-7);
    }

    #[test]
    fn symbol_spectrum_of_the_minimal_torus() {
        let grid = TorusGrid::new([2, 2, 2], 0.5);
        let s = torus_symbol_spectrum(&grid);
        assert_eq!(s.len(), 24);
        let zeros = s.iter().filter(|&&x| x == 0.0).count();
        // one zero per nonzero mode, three at the zero mode
        assert_eq!(zeros, 10);
        for (lo, hi) in s.iter().zip(s.iter().rev()) {
            assert_relative_eq!(*lo, -*hi, epsilon = 1e-14);
        }
    }

    #[test]
    fn full_torus_resolvent_matches_symbol_reciprocals() {
        // On the full torus the domain projector is trivial and the
        // resolvent is exactly the per-mode pseudoinverse, so Lanczos must
        // reproduce 1/|kappa| pairs to solver accuracy.
        let grid = TorusGrid::new([4, 4, 4], 0.5);
        let mut curl = SpectralCurl::new(grid.clone());
        let n = grid.vertex_count();
        let dim = 3 * n;
        let mut field = zero_field(&grid);
        let mut opts = LanczosOptions::new(6);
        opts.tol = 1e-10;
        let outcome = hermitian_extremal_eigs(
            dim,
            |u, out| {
                for c in 0..3 {
                    field[c].copy_from_slice(&u[c * n..(c + 1) * n]);
                }
                curl.apply(&mut field, SymbolKind::CurlPinv);
                for c in 0..3 {
                    out[c * n..(c + 1) * n].copy_from_slice(&field[c]);
                }
                Ok(())
            },
            &opts,
            None,
        )
        .unwrap();
        assert!(outcome.converged);
        let symbol: Vec<f64> = torus_symbol_spectrum(&grid)
            .into_iter()
            .filter(|&x| x != 0.0)
            .map(|x| 1.0 / x)
            .collect();
        let kappa_min = 4.0 * (PI / 4.0).sin();
        for pair in &outcome.pairs {
            let closest = symbol
                .iter()
                .map(|s| (s - pair.value).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(closest < 1e-9, "value {} off the symbol set by {closest}", pair.value);
            assert!(pair.value.abs() <= 1.0 / kappa_min + 1e-9);
            // On the torus the first-order equation holds to solver accuracy:
            // S v = lambda v for the resolvent eigenvector.
            let lambda = 1.0 / pair.value;
            for c in 0..3 {
                field[c].copy_from_slice(&pair.vector[c * n..(c + 1) * n]);
            }
            curl.apply(&mut field, SymbolKind::Curl);
            let defect: f64 = (0..3)
                .map(|c| {
                    field[c]
                        .iter()
                        .zip(&pair.vector[c * n..(c + 1) * n])
                        .map(|(a, b)| (a - b * lambda).norm_sqr())
                        .sum::<f64>()
                })
                .sum::<f64>()
                .sqrt();
            assert!(defect <= 1e-8, "torus curl defect {defect}");
        }
        assert_relative_eq!(outcome.pairs[0].value.abs(), 1.0 / kappa_min, epsilon = 1e-9);
    }

    #[test]
    fn weyl_fit_recovers_cubic_growth() {
        let mut e = EigResult {
            operator: "synthetic".into(),
            eigenvalues: (1..=40).map(|j| (j as f64).powf(1.0 / 3.0)).collect(),
            residuals: vec![0.0; 40],
            cluster_ids: vec![],
            defects: None,
            vectors_re: None,
            vectors_im: None,
            unverified: vec![],
            meta: SolverMeta::default(),
        };
        e.assign_clusters(1e-12);
        let (p, c) = weyl_fit(&e, 1.0).unwrap();
        assert!((p - 3.0).abs() < 0.05, "exponent {p}");
        assert!((c - 1.0).abs() < 0.05, "constant {c}");
    }

    #[test]
    fn weyl_fit_rejects_short_spectra() {
        let e = EigResult {
            operator: "short".into(),
            eigenvalues: (1..=10).map(|j| j as f64).collect(),
            residuals: vec![0.0; 10],
            cluster_ids: vec![0; 10],
            defects: None,
            vectors_re: None,
            vectors_im: None,
            unverified: vec![],
            meta: SolverMeta::default(),
        };
        assert!(matches!(weyl_fit(&e, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn d_sharp_line_pairs_plus_minus() {
        let n = 9;
        let eig = d_sharp_1d(n, DEFAULT_TOL).unwrap();
        let h = 1.0 / (n - 1) as f64;
        // positive part must be (2/h) sin(pi k / (n-1))
        let pos: Vec<f64> = eig.eigenvalues.iter().copied().filter(|&x| x > 1e-8).collect();
        for lam in &pos {
            let mirrored = eig.eigenvalues.iter().any(|x| (x + lam).abs() < 1e-9);
            assert!(mirrored, "no mirror for {lam}");
        }
        let smallest = pos.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_relative_eq!(smallest, (2.0 / h) * (PI / 8.0).sin(), epsilon = 1e-9);
    }

    #[test]
    fn poincare_constant_tends_to_two_pi() {
        let n = 64;
        let s = grad_sharp_min_singular(n, DEFAULT_TOL).unwrap();
        let exact = 2.0 * (n - 1) as f64 * (PI / (n - 1) as f64).sin();
        assert_relative_eq!(s, exact, epsilon = 1e-7);
        assert!((s - 2.0 * PI).abs() < 0.02);
    }

    #[test]
    fn laplace_driver_guards_dimensions_and_size() {
        let d3 = VoxelDomain::from_predicate(3, [2, 2, 2], 0.5, [0.0; 3], |_| true);
        assert!(matches!(laplace_sharp_eigs(&d3, DEFAULT_TOL), Err(Error::Precondition(_))));
        let big = VoxelDomain::from_predicate(2, [40, 40, 1], 0.025, [0.0; 3], |_| true);
        assert!(matches!(laplace_sharp_eigs(&big, DEFAULT_TOL), Err(Error::ResourceLimit(_))));
    }

    fn small_cube(cells: usize) -> VoxelDomain {
        VoxelDomain::from_predicate(3, [cells, cells, cells], 1.0 / cells as f64, [0.0; 3], |_| true)
    }

    #[test]
    fn iterative_and_dense_curl_agree_on_a_tiny_cube() {
        let domain = small_cube(2);
        let mut params = CurlParams::new(4);
        params.cg_tol = 1e-12;
        let (eig, mut op) = curl_sharp_eigs(&domain, &params).unwrap();
        assert!(eig.eigenvalues.len() >= 8, "verified {} values", eig.eigenvalues.len());
        for r in &eig.residuals {
            assert!(*r <= params.tol, "resolvent residual {r}");
        }
        // Off the torus the first-order defect is a discretization-scale
        // quantity, reported but never solver-small.
        let defects = eig.defects.as_ref().unwrap();
        assert_eq!(defects.len(), eig.eigenvalues.len());
        assert!(defects.iter().all(|d| d.is_finite()));

        let dense = curl_sharp_dense_oracle(&mut op, DEFAULT_TOL).unwrap();
        let mut dense_abs: Vec<f64> = dense
            .eigenvalues
            .iter()
            .map(|x| x.abs())
            .filter(|&x| x > 1e-8)
            .collect();
        dense_abs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        dense_abs.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (*a + *b));
        let mut iter_abs: Vec<f64> = eig.eigenvalues.iter().map(|x| x.abs()).collect();
        iter_abs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        iter_abs.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (*a + *b));
        for (i, lam) in iter_abs.iter().take(4).enumerate() {
            assert_relative_eq!(*lam, dense_abs[i], max_relative = 1e-6);
        }
    }
}
