//! Heat and wave evolution by exact eigenexpansion of the sharp Laplacian.
//!
//! The eigenbasis lives in the weighted ("hat") coordinates in which the
//! mimetic inner product is the plain dot product; conversions to and from
//! plain nodal values happen at this module's boundary, so callers only
//! ever see nodal data. Kernel modes are kept separate from the decaying
//! ones: for the heat flow they carry the conserved mass, for the wave flow
//! the linear drift.
//!
//! Truncated initial data is not silently dropped: every result reports the
//! norm of the component of the data outside the expansion basis.

use nalgebra::{DMatrix, DVector};

use crate::eig::EigResult;
use crate::error::{Error, Result};

/// Orthonormal eigenbasis of div#grad#, split into decaying modes and the
/// kernel block. Eigenvalues are `-sigma_j^2 <= 0`.
pub struct EigenBasis {
    /// Decay rates `sigma_j^2 > 0`, one per column of `modes`.
    sigma2: Vec<f64>,
    /// Hat-coordinate orthonormal eigenvectors, nonkernel part.
    modes: DMatrix<f64>,
    /// Hat-coordinate orthonormal kernel block.
    kernel: DMatrix<f64>,
    /// Nodal-to-hat conversion: `u_hat = sqrt_w .* u`.
    sqrt_w: DVector<f64>,
}

impl EigenBasis {
    /// Splits a `laplace_sharp_eigs` result into kernel and decaying modes
    /// and pairs it with the vertex weights of the same complex. Rejects
    /// eigenvalues that are positive beyond `tol` (the operator is
    /// nonpositive) and bases whose orthonormality defect exceeds `tol`.
    pub fn from_laplace(eig: &EigResult, weights: &[f64], tol: f64) -> Result<Self> {
        let vectors = eig.vectors_re.as_ref().ok_or_else(|| {
            Error::Precondition("eigenvectors are required to build an evolution basis".into())
        })?;
        if weights.len() != vectors.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} rows",
                weights.len(),
                vectors.nrows()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Precondition("vertex weights must be positive".into()));
        }
        let scale = eig.max_abs().max(1.0);
        let ktol = tol * scale;
        let mut mode_cols = Vec::new();
        let mut kernel_cols = Vec::new();
        let mut sigma2 = Vec::new();
        for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda > ktol {
                return Err(Error::Precondition(format!(
                    "positive eigenvalue {lambda} in a nonpositive operator"
                )));
            }
            let col = vectors.column(j).into_owned();
            if lambda.abs() <= ktol {
                kernel_cols.push(col);
            } else {
                sigma2.push(-lambda);
                mode_cols.push(col);
            }
        }
        let n = vectors.nrows();
        let modes = if mode_cols.is_empty() {
            DMatrix::zeros(n, 0)
        } else {
            DMatrix::from_columns(&mode_cols)
        };
        let kernel = if kernel_cols.is_empty() {
            DMatrix::zeros(n, 0)
        } else {
            DMatrix::from_columns(&kernel_cols)
        };

        let k = modes.ncols() + kernel.ncols();
        let mut full = DMatrix::zeros(n, k);
        full.view_mut((0, 0), (n, modes.ncols())).copy_from(&modes);
        full.view_mut((0, modes.ncols()), (n, kernel.ncols())).copy_from(&kernel);
        let gram = full.transpose() * &full;
        let defect = (&gram - DMatrix::identity(k, k)).abs().max();
        if defect > tol {
            return Err(Error::Precondition(format!(
                "eigenbasis orthonormality defect {defect:.3e} exceeds {tol:.3e}"
            )));
        }

        Ok(Self {
            sigma2,
            modes,
            kernel,
            sqrt_w: DVector::from_iterator(n, weights.iter().map(|w| w.sqrt())),
        })
    }

    /// Number of nodal degrees of freedom.
    pub fn dim(&self) -> usize {
        self.sqrt_w.len()
    }

    pub fn mode_count(&self) -> usize {
        self.sigma2.len()
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel.ncols()
    }

    /// Eigenvalues `-sigma_j^2` of the decaying modes, in basis order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.sigma2.iter().map(|s| -s).collect()
    }

    /// Nodal values of decaying mode `j` (unit weighted norm).
    pub fn mode_nodal(&self, j: usize) -> DVector<f64> {
        let mut v = self.modes.column(j).into_owned();
        v.component_div_assign(&self.sqrt_w);
        v
    }

    fn to_hat(&self, u: &DVector<f64>) -> DVector<f64> {
        u.component_mul(&self.sqrt_w)
    }

    fn check_input(&self, u: &DVector<f64>, name: &str) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{name} has {} entries, basis has {}",
                u.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Time grid, nodal snapshots (one column per time) and the energy series
/// of one evolution run.
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub snapshots: DMatrix<f64>,
    /// Heat: squared weighted norm of the state. Wave: kinetic plus
    /// gradient energy.
    pub energies: Vec<f64>,
    /// Weighted norm of the initial-data component outside the expansion
    /// basis (and of the source, for forced runs).
    pub truncation: f64,
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Precondition("empty time grid".into()));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Precondition("times must be finite and nonnegative".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("time grid must be strictly increasing".into()));
    }
    Ok(())
}

struct Expansion {
    a: DVector<f64>,
    k: DVector<f64>,
    trunc: f64,
}

fn expand(basis: &EigenBasis, u_hat: &DVector<f64>) -> Expansion {
    let a = basis.modes.transpose() * u_hat;
    let k = basis.kernel.transpose() * u_hat;
    let rest = u_hat - &basis.modes * &a - &basis.kernel * &k;
    Expansion { a, k, trunc: rest.norm() }
}

fn assemble(basis: &EigenBasis, c: &DVector<f64>, k: &DVector<f64>) -> DVector<f64> {
    let mut u = &basis.modes * c + &basis.kernel * k;
    u.component_div_assign(&basis.sqrt_w);
    u
}

/// Heat flow `du/dt = div#grad# u`, evaluated exactly at the given times:
/// `u(t) = sum_j e^{-sigma_j^2 t} a_j phi_j + kernel part`.
pub fn evolve_heat(
    basis: &EigenBasis,
    u0: &DVector<f64>,
    times: &[f64],
) -> Result<EvolutionResult> {
    evolve_heat_forced(basis, u0, None, times)
}

/// Heat flow with a time-constant source `f`: the nonkernel part relaxes
/// exactly toward the steady state `p_j = f_j / sigma_j^2`, the kernel part
/// drifts linearly with the kernel component of `f`.
pub fn evolve_heat_forced(
    basis: &EigenBasis,
    u0: &DVector<f64>,
    f: Option<&DVector<f64>>,
    times: &[f64],
) -> Result<EvolutionResult> {
    basis.check_input(u0, "u0")?;
    check_times(times)?;
    let init = expand(basis, &basis.to_hat(u0));
    let (fa, fk, ftrunc) = match f {
        Some(f) => {
            basis.check_input(f, "f")?;
            let e = expand(basis, &basis.to_hat(f));
            (e.a, e.k, e.trunc)
        }
        None => (DVector::zeros(basis.mode_count()), DVector::zeros(basis.kernel_dim()), 0.0),
    };
    let p = DVector::from_iterator(
        basis.mode_count(),
        fa.iter().zip(&basis.sigma2).map(|(f, s2)| f / s2),
    );

    let n = basis.dim();
    let mut snapshots = DMatrix::zeros(n, times.len());
    let mut energies = Vec::with_capacity(times.len());
    for (ti, &t) in times.iter().enumerate() {
        let c = DVector::from_iterator(
            basis.mode_count(),
            basis
                .sigma2
                .iter()
                .zip(init.a.iter().zip(&p))
                .map(|(s2, (a, p))| p + (-s2 * t).exp() * (a - p)),
        );
        let k = &init.k + t * &fk;
        energies.push(c.norm_squared() + k.norm_squared());
        snapshots.set_column(ti, &assemble(basis, &c, &k));
    }
    Ok(EvolutionResult {
        times: times.to_vec(),
        snapshots,
        energies,
        truncation: init.trunc.hypot(ftrunc),
    })
}

/// Wave flow `d^2u/dt^2 = div#grad# u`, evaluated exactly:
/// `u(t) = sum_j [cos(sigma_j t) a_j + sin(sigma_j t)/sigma_j b_j] phi_j`
/// plus the kernel drift `a + t b`. The reported energy
/// `E(t) = |du/dt|^2 + |grad# u|^2` is conserved.
pub fn evolve_wave(
    basis: &EigenBasis,
    u0: &DVector<f64>,
    v0: &DVector<f64>,
    times: &[f64],
) -> Result<EvolutionResult> {
    evolve_wave_forced(basis, u0, v0, None, times)
}

/// Wave flow with a time-constant source: nonkernel modes oscillate around
/// the shifted equilibrium `p_j = f_j / sigma_j^2`, the kernel part gains a
/// quadratic drift `t^2/2 f_k`.
pub fn evolve_wave_forced(
    basis: &EigenBasis,
    u0: &DVector<f64>,
    v0: &DVector<f64>,
    f: Option<&DVector<f64>>,
    times: &[f64],
) -> Result<EvolutionResult> {
    basis.check_input(u0, "u0")?;
    basis.check_input(v0, "v0")?;
    check_times(times)?;
    let iu = expand(basis, &basis.to_hat(u0));
    let iv = expand(basis, &basis.to_hat(v0));
    let (fa, fk, ftrunc) = match f {
        Some(f) => {
            basis.check_input(f, "f")?;
            let e = expand(basis, &basis.to_hat(f));
            (e.a, e.k, e.trunc)
        }
        None => (DVector::zeros(basis.mode_count()), DVector::zeros(basis.kernel_dim()), 0.0),
    };
    let p = DVector::from_iterator(
        basis.mode_count(),
        fa.iter().zip(&basis.sigma2).map(|(f, s2)| f / s2),
    );

    let n = basis.dim();
    let mut snapshots = DMatrix::zeros(n, times.len());
    let mut energies = Vec::with_capacity(times.len());
    for (ti, &t) in times.iter().enumerate() {
        let mut c = DVector::zeros(basis.mode_count());
        let mut dc = DVector::zeros(basis.mode_count());
        for j in 0..basis.mode_count() {
            let s = basis.sigma2[j].sqrt();
            let (a, b) = (iu.a[j] - p[j], iv.a[j]);
            let (sin, cos) = (s * t).sin_cos();
            c[j] = p[j] + cos * a + sin / s * b;
            dc[j] = -s * sin * a + cos * b;
        }
        let k = &iu.k + t * &iv.k + (0.5 * t * t) * &fk;
        let dk = &iv.k + t * &fk;
        let grad_sq: f64 = (0..basis.mode_count()).map(|j| basis.sigma2[j] * c[j] * c[j]).sum();
        energies.push(dc.norm_squared() + dk.norm_squared() + grad_sq);
        snapshots.set_column(ti, &assemble(basis, &c, &k));
    }
    Ok(EvolutionResult {
        times: times.to_vec(),
        snapshots,
        energies,
        truncation: iu.trunc.hypot(iv.trunc).hypot(ftrunc),
    })
}

/// Matrix exponential by scaling and squaring with a Taylor core; the
/// series runs on a matrix scaled to norm at most 1/2, where 24 terms are
/// already below machine precision.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), a.ncols());
    let n = a.nrows();
    let norm = a.abs().row_sum().max();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let t = a / (2f64.powi(s as i32));
    let mut sum = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=24 {
        term = (&term * &t) / (k as f64);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}
