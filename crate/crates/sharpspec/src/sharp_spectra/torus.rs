//! The periodic covering grid and its curl endomorphism in Fourier form.
//!
//! Edge fields live on a staggered periodic lattice, one complex grid per
//! direction, x fastest. Per Fourier mode k the forward difference along
//! direction j multiplies by delta_j = (e^{2 pi i k_j / n_j} - 1)/h, which
//! factors as i kappa_j e^{i theta_j} with kappa_j = (2/h) sin(pi k_j/n_j)
//! and theta_j = pi k_j/n_j. Conjugating the real cross-product matrix
//! i [kappa x] by the half-shift phases D = diag(e^{i theta_j}) yields the
//! Hermitian curl endomorphism
//!
//! ```text
//! S(k) = D (i [kappa x]) D*,
//! ```
//!
//! whose square is exactly the stencil curl-curl and whose eigenvalues per
//! mode are {0, +|kappa|, -|kappa|}. The pseudoinverse is S/|kappa|^2.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Periodic grid with `n[j]` cells per direction and spacing `h`.
#[derive(Debug, Clone)]
pub struct TorusGrid {
    pub n: [usize; 3],
    pub h: f64,
}

impl TorusGrid {
    pub fn new(n: [usize; 3], h: f64) -> Self {
        assert!(n.iter().all(|&m| m >= 2), "torus needs at least 2 cells per axis");
        assert!(h > 0.0);
        Self { n, h }
    }

    pub fn vertex_count(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    /// Linear index of vertex (i, j, k), x fastest.
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n[0] * (j + self.n[1] * k)
    }

    /// Index with periodic wrap of possibly out-of-range coordinates.
    pub fn index_wrapped(&self, i: i64, j: i64, k: i64) -> usize {
        let w = |x: i64, n: usize| (x.rem_euclid(n as i64)) as usize;
        self.index(w(i, self.n[0]), w(j, self.n[1]), w(k, self.n[2]))
    }

    /// Per-mode difference magnitude and phase: the forward difference
    /// symbol is `delta = i kappa e^{i theta}` with both values real.
    pub fn kappa_theta(&self, k: usize, axis: usize) -> (f64, f64) {
        let theta = std::f64::consts::PI * k as f64 / self.n[axis] as f64;
        ((2.0 / self.h) * theta.sin(), theta)
    }
}

/// One complex scalar grid per edge direction.
pub type EdgeField = [Vec<Complex64>; 3];

pub fn zero_field(grid: &TorusGrid) -> EdgeField {
    let n = grid.vertex_count();
    [vec![Complex64::ZERO; n], vec![Complex64::ZERO; n], vec![Complex64::ZERO; n]]
}

/// Which per-mode matrix to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    /// Hermitian curl endomorphism S(k).
    Curl,
    /// Moore-Penrose pseudoinverse S(k)/|kappa|^2 (zero block at k = 0).
    CurlPinv,
    /// Primal curl delta x (edge cochains to face cochains); not Hermitian.
    RawCurl,
    /// Orthogonal projector onto ker(S(k))^perp; zero block at k = 0.
    KernelComplement,
}

/// FFT plans and scratch for applying per-mode symbols on a fixed grid.
pub struct SpectralCurl {
    pub grid: TorusGrid,
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
    line: Vec<Complex64>,
}

impl SpectralCurl {
    pub fn new(grid: TorusGrid) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = [
            planner.plan_fft_forward(grid.n[0]),
            planner.plan_fft_forward(grid.n[1]),
            planner.plan_fft_forward(grid.n[2]),
        ];
        let inv = [
            planner.plan_fft_inverse(grid.n[0]),
            planner.plan_fft_inverse(grid.n[1]),
            planner.plan_fft_inverse(grid.n[2]),
        ];
        let line = vec![Complex64::ZERO; grid.n.iter().copied().max().unwrap()];
        Self { grid, fwd, inv, line }
    }

    fn fft_axis(&mut self, data: &mut [Complex64], axis: usize, forward: bool) {
        let [n0, n1, n2] = self.grid.n;
        let plan = if forward { &self.fwd[axis] } else { &self.inv[axis] };
        match axis {
            0 => plan.process(data),
            1 => {
                let line = &mut self.line[..n1];
                for k in 0..n2 {
                    for i in 0..n0 {
                        let base = i + n0 * n1 * k;
                        for j in 0..n1 {
                            line[j] = data[base + n0 * j];
                        }
                        plan.process(line);
                        for j in 0..n1 {
                            data[base + n0 * j] = line[j];
                        }
                    }
                }
            }
            _ => {
                let line = &mut self.line[..n2];
                let stride = n0 * n1;
                for j in 0..n1 {
                    for i in 0..n0 {
                        let base = i + n0 * j;
                        for k in 0..n2 {
                            line[k] = data[base + stride * k];
                        }
                        plan.process(line);
                        for k in 0..n2 {
                            data[base + stride * k] = line[k];
                        }
                    }
                }
            }
        }
    }

    fn fft3(&mut self, data: &mut [Complex64], forward: bool) {
        self.fft_axis(data, 0, forward);
        self.fft_axis(data, 1, forward);
        self.fft_axis(data, 2, forward);
    }

    /// Applies the per-mode symbol in place.
    pub fn apply(&mut self, field: &mut EdgeField, kind: SymbolKind) {
        for c in field.iter_mut() {
            assert_eq!(c.len(), self.grid.vertex_count());
        }
        {
            let [a, b, c] = field;
            self.fft3(a, true);
            self.fft3(b, true);
            self.fft3(c, true);
        }
        let [n0, n1, n2] = self.grid.n;
        for k2 in 0..n2 {
            let (kap2, th2) = self.grid.kappa_theta(k2, 2);
            for k1 in 0..n1 {
                let (kap1, th1) = self.grid.kappa_theta(k1, 1);
                for k0 in 0..n0 {
                    let (kap0, th0) = self.grid.kappa_theta(k0, 0);
                    let idx = self.grid.index(k0, k1, k2);
                    let v = [field[0][idx], field[1][idx], field[2][idx]];
                    let out = apply_mode(
                        kind,
                        [kap0, kap1, kap2],
                        [th0, th1, th2],
                        self.grid.h,
                        [k0, k1, k2],
                        self.grid.n,
                        v,
                    );
                    field[0][idx] = out[0];
                    field[1][idx] = out[1];
                    field[2][idx] = out[2];
                }
            }
        }
        let scale = 1.0 / self.grid.vertex_count() as f64;
        {
            let [a, b, c] = field;
            self.fft3(a, false);
            self.fft3(b, false);
            self.fft3(c, false);
            for comp in [a, b, c] {
                for x in comp.iter_mut() {
                    *x *= scale;
                }
            }
        }
    }

    /// Real-space primal curl stencil (forward differences, periodic), the
    /// integer-incidence path used to cross-check the Fourier symbol.
    pub fn curl_stencil(&self, u: &EdgeField) -> EdgeField {
        let g = &self.grid;
        let mut out = zero_field(g);
        let inv_h = 1.0 / g.h;
        for k in 0..g.n[2] as i64 {
            for j in 0..g.n[1] as i64 {
                for i in 0..g.n[0] as i64 {
                    let at = g.index_wrapped(i, j, k);
                    let shift = |axis: usize, x: usize| {
                        let (di, dj, dk) = match axis {
                            0 => (1, 0, 0),
                            1 => (0, 1, 0),
                            _ => (0, 0, 1),
                        };
                        u[x][g.index_wrapped(i + di, j + dj, k + dk)]
                    };
                    // (curl u)_m = (d_j u_l - d_l u_j)/h for cyclic (j, l, m).
                    for m in 0..3 {
                        let a = (m + 1) % 3;
                        let b = (m + 2) % 3;
                        out[m][at] =
                            ((shift(a, b) - u[b][at]) - (shift(b, a) - u[a][at])) * inv_h;
                    }
                }
            }
        }
        out
    }

    /// Adjoint of the primal curl stencil: the backward-difference curl,
    /// so that curl_stencil_adjoint(curl_stencil(u)) is the stencil
    /// curl-curl operator.
    pub fn curl_stencil_adjoint(&self, f: &EdgeField) -> EdgeField {
        let g = &self.grid;
        let mut out = zero_field(g);
        let inv_h = 1.0 / g.h;
        for k in 0..g.n[2] as i64 {
            for j in 0..g.n[1] as i64 {
                for i in 0..g.n[0] as i64 {
                    let at = g.index_wrapped(i, j, k);
                    let back = |axis: usize, comp: usize| {
                        let (di, dj, dk) = match axis {
                            0 => (-1, 0, 0),
                            1 => (0, -1, 0),
                            _ => (0, 0, -1),
                        };
                        f[comp][at] - f[comp][g.index_wrapped(i + di, j + dj, k + dk)]
                    };
                    // (C^T f)_c = (d-_{c+1} f_{c+2} - d-_{c+2} f_{c+1})/h
                    for c in 0..3 {
                        let a = (c + 1) % 3;
                        let b = (c + 2) % 3;
                        out[c][at] = (back(a, b) - back(b, a)) * inv_h;
                    }
                }
            }
        }
        out
    }
}

/// Per-mode application of the chosen symbol to a 3-vector.
fn apply_mode(
    kind: SymbolKind,
    kappa: [f64; 3],
    theta: [f64; 3],
    h: f64,
    k: [usize; 3],
    n: [usize; 3],
    v: [Complex64; 3],
) -> [Complex64; 3] {
    let zero_mode = k[0] == 0 && k[1] == 0 && k[2] == 0;
    let kap2 = kappa[0] * kappa[0] + kappa[1] * kappa[1] + kappa[2] * kappa[2];
    match kind {
        SymbolKind::RawCurl => {
            // delta_j = (e^{2 pi i k_j/n_j} - 1)/h
            let delta = std::array::from_fn::<Complex64, 3, _>(|j| {
                let ang = 2.0 * std::f64::consts::PI * k[j] as f64 / n[j] as f64;
                (Complex64::new(ang.cos(), ang.sin()) - 1.0) / h
            });
            cross(delta, v)
        }
        SymbolKind::Curl | SymbolKind::CurlPinv => {
            if zero_mode {
                return [Complex64::ZERO; 3];
            }
            let d = std::array::from_fn::<Complex64, 3, _>(|j| {
                Complex64::new(theta[j].cos(), theta[j].sin())
            });
            // w = D* v, then i (kappa x w), then D.
            let w = std::array::from_fn(|j| d[j].conj() * v[j]);
            let kc = [
                Complex64::new(kappa[0], 0.0),
                Complex64::new(kappa[1], 0.0),
                Complex64::new(kappa[2], 0.0),
            ];
            let cw = cross(kc, w);
            let mut out = std::array::from_fn(|j| d[j] * Complex64::i() * cw[j]);
            if kind == SymbolKind::CurlPinv {
                for x in out.iter_mut() {
                    *x /= kap2;
                }
            }
            out
        }
        SymbolKind::KernelComplement => {
            if zero_mode {
                return [Complex64::ZERO; 3];
            }
            // ker S(k) = span{D kappa}; remove that direction.
            let d = std::array::from_fn::<Complex64, 3, _>(|j| {
                Complex64::new(theta[j].cos(), theta[j].sin())
            });
            let g = std::array::from_fn::<Complex64, 3, _>(|j| d[j] * kappa[j]);
            let coeff = (g[0].conj() * v[0] + g[1].conj() * v[1] + g[2].conj() * v[2]) / kap2;
            std::array::from_fn(|j| v[j] - coeff * g[j])
        }
    }
}

fn cross(a: [Complex64; 3], b: [Complex64; 3]) -> [Complex64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn inner(u: &EdgeField, v: &EdgeField) -> Complex64 {
    let mut acc = Complex64::ZERO;
    for c in 0..3 {
        for (a, b) in u[c].iter().zip(&v[c]) {
            acc += a.conj() * b;
        }
    }
    acc
}

pub fn norm(u: &EdgeField) -> f64 {
    inner(u, u).re.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: &TorusGrid, seed: u64) -> EdgeField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.vertex_count();
        std::array::from_fn(|_| {
            (0..n)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect()
        })
    }

    #[test]
    fn constant_field_is_in_the_kernel() {
        let grid = TorusGrid::new([4, 4, 4], 0.5);
        let mut op = SpectralCurl::new(grid);
        let mut f = zero_field(&op.grid);
        for c in 0..3 {
            f[c].fill(Complex64::new(1.0 + c as f64, 0.0));
        }
        op.apply(&mut f, SymbolKind::Curl);
        assert!(norm(&f) < 1e-12);
    }

    #[test]
    fn curl_endomorphism_is_hermitian() {
        let grid = TorusGrid::new([4, 6, 4], 0.7);
        let mut op = SpectralCurl::new(grid);
        let u = random_field(&op.grid, 1);
        let v = random_field(&op.grid, 2);
        let mut su = u.clone();
        op.apply(&mut su, SymbolKind::Curl);
        let mut sv = v.clone();
        op.apply(&mut sv, SymbolKind::Curl);
        let lhs = inner(&su, &v);
        let rhs = inner(&u, &sv);
        let scale = norm(&u) * norm(&v);
        assert!((lhs - rhs).norm() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn fourier_symbol_matches_real_space_stencil() {
        let grid = TorusGrid::new([4, 4, 6], 0.3);
        let mut op = SpectralCurl::new(grid);
        let u = random_field(&op.grid, 3);
        let mut by_symbol = u.clone();
        op.apply(&mut by_symbol, SymbolKind::RawCurl);
        let by_stencil = op.curl_stencil(&u);
        let mut diff = 0.0f64;
        for c in 0..3 {
            for (a, b) in by_symbol[c].iter().zip(&by_stencil[c]) {
                diff = diff.max((a - b).norm());
            }
        }
        assert!(diff <= 1e-12 * (1.0 + norm(&u)), "symbol vs stencil diff {diff}");
    }

    #[test]
    fn stencil_adjoint_is_the_true_adjoint() {
        let grid = TorusGrid::new([4, 6, 4], 0.5);
        let op = SpectralCurl::new(grid);
        let u = random_field(&op.grid, 7);
        let f = random_field(&op.grid, 8);
        let cu = op.curl_stencil(&u);
        let ctf = op.curl_stencil_adjoint(&f);
        let lhs = inner(&cu, &f);
        let rhs = inner(&u, &ctf);
        assert!((lhs - rhs).norm() <= 1e-12 * (norm(&u) * norm(&f)).max(1.0));
    }

    #[test]
    fn hermitian_curl_squares_to_stencil_curl_curl() {
        let grid = TorusGrid::new([4, 4, 4], 0.5);
        let mut op = SpectralCurl::new(grid);
        let u = random_field(&op.grid, 4);
        let mut ss = u.clone();
        op.apply(&mut ss, SymbolKind::Curl);
        op.apply(&mut ss, SymbolKind::Curl);
        let chc = op.curl_stencil_adjoint(&op.curl_stencil(&u));
        let mut diff = 0.0f64;
        for c in 0..3 {
            for (a, b) in ss[c].iter().zip(&chc[c]) {
                diff = diff.max((a - b).norm());
            }
        }
        assert!(diff <= 1e-10 * (1.0 + norm(&u)), "S^2 vs C^H C diff {diff}");
    }

    #[test]
    fn single_mode_field_sees_plus_minus_kappa() {
        // Mode k = (1, 0, 0) on n = 16, h = 1: |kappa| = 2 sin(pi/16).
        let grid = TorusGrid::new([16, 4, 4], 1.0);
        let mut op = SpectralCurl::new(grid);
        let kappa = 2.0 * (std::f64::consts::PI / 16.0).sin();
        // Build the plane-wave field with polarization chosen as an
        // eigenvector of the 3x3 mode matrix: for kappa along x, the
        // vectors (0, 1, -+i)/sqrt(2) (after phase conjugation) have
        // eigenvalues +-kappa under i [kappa x].
        let n = op.grid.vertex_count();
        let mut f = zero_field(&op.grid);
        for k in 0..4 {
            for j in 0..4 {
                for i in 0..16 {
                    let phase = 2.0 * std::f64::consts::PI * i as f64 / 16.0;
                    let wave = Complex64::new(phase.cos(), phase.sin());
                    let at = op.grid.index(i, j, k);
                    // Polarization in colocated coordinates: (0, 1, i); moving
                    // to staggered coordinates multiplies component j by
                    // conj(d_j), but d_1 = d_2 = 1 for k = (1,0,0).
                    f[1][at] = wave;
                    f[2][at] = wave * Complex64::i();
                }
            }
        }
        let mut sf = f.clone();
        op.apply(&mut sf, SymbolKind::Curl);
        // sf should equal kappa * f (or -kappa with the opposite handedness).
        let mut diff_plus = 0.0f64;
        let mut diff_minus = 0.0f64;
        for c in 0..3 {
            for (a, b) in sf[c].iter().zip(&f[c]) {
                diff_plus = diff_plus.max((a - b * kappa).norm());
                diff_minus = diff_minus.max((a + b * kappa).norm());
            }
        }
        assert!(
            diff_plus <= 1e-12 * n as f64 || diff_minus <= 1e-12 * n as f64,
            "plane wave is not an eigenfield: +{diff_plus} -{diff_minus}"
        );
    }

    #[test]
    fn pseudoinverse_inverts_on_the_kernel_complement() {
        let grid = TorusGrid::new([6, 4, 4], 0.5);
        let mut op = SpectralCurl::new(grid);
        let u = random_field(&op.grid, 5);
        // S S+ f = projection of f onto ker(S)^perp, built independently.
        let mut ssp = u.clone();
        op.apply(&mut ssp, SymbolKind::CurlPinv);
        op.apply(&mut ssp, SymbolKind::Curl);
        let mut proj = u.clone();
        op.apply(&mut proj, SymbolKind::KernelComplement);
        let mut diff = 0.0f64;
        for c in 0..3 {
            for (a, b) in ssp[c].iter().zip(&proj[c]) {
                diff = diff.max((a - b).norm());
            }
        }
        assert!(diff <= 1e-11 * (1.0 + norm(&u)), "S S+ vs projector diff {diff}");
    }
}
