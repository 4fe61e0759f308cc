//! Mimetic difference operators on cubical complexes.
//!
//! The integer derivatives become difference quotients `d_k / h`, and the
//! lumped cell measures become diagonal weight matrices. Conjugating by
//! `W^{1/2}` moves every weighted inner product to the Euclidean one, so the
//! subspace-level adjoints from the relation calculus are the discrete L2
//! adjoints. The voxel-interior cells span the minimal domain; the full
//! cochain space spans the maximal one.

use nalgebra::DMatrix;

use super::cubical::{CubicalComplex, RelativeComplex};
use crate::error::Result;
use crate::linrel::{LinearRelation, OperatorPair, Subspace};

/// Number of top cells incident to each k-cell.
pub fn incidence_counts(complex: &CubicalComplex, k: usize) -> Vec<u32> {
    let dim = complex.dim;
    let mut counts = vec![0u32; complex.cell_count(k)];
    if k == dim {
        counts.fill(1);
        return counts;
    }
    // Walk the derivative chain top-down: a k-cell is incident to a top cell
    // iff it is a face of a face of ... of it. Counting multiplicity-free
    // needs direct enumeration, so enumerate faces of each top cell.
    let mut scratch = Vec::new();
    for &top in &complex.cells[dim] {
        scratch.clear();
        super::cubical::faces_into(top, k, &mut scratch);
        for f in &scratch {
            let idx = complex.cells[k]
                .binary_search(f)
                .expect("face of a top cell is in the complex");
            counts[idx] += 1;
        }
    }
    counts
}

/// Lumped measure of each k-cell: the cell's own `h^k` volume times the
/// fraction of its `2^(d-k)` potential top neighbors that are present.
pub fn weights(complex: &CubicalComplex, k: usize) -> Vec<f64> {
    let d = complex.dim as i32;
    let share = complex.h.powi(d) / f64::from(1u32 << (complex.dim - k));
    incidence_counts(complex, k)
        .into_iter()
        .map(|c| f64::from(c) * share)
        .collect()
}

/// Dense difference quotient `d_k / h` between plain cochain spaces.
pub fn derivative_dense(complex: &CubicalComplex, k: usize) -> DMatrix<f64> {
    complex.derivative[k].to_dense() / complex.h
}

/// Coordinate subspace spanned by the interior (non-boundary) k-cells.
pub fn interior_subspace(complex: &CubicalComplex, rel: &RelativeComplex, k: usize) -> Subspace {
    let n = complex.cell_count(k);
    let kept = &rel.keep[k];
    let mut basis = DMatrix::zeros(n, kept.len());
    for (j, &full) in kept.iter().enumerate() {
        basis[(full as usize, j)] = 1.0;
    }
    Subspace::from_orthonormal(basis)
}

/// Operator pair for `d_k / h` in plain cochain coordinates: the minimal
/// member acts on interior k-cochains, the maximal member everywhere.
pub fn pair_plain(complex: &CubicalComplex, rel: &RelativeComplex, k: usize, tol: f64) -> Result<OperatorPair> {
    let d = derivative_dense(complex, k);
    let a = LinearRelation::from_matrix(&d);
    let a0 = a.restrict_domain(&interior_subspace(complex, rel, k), tol)?;
    OperatorPair::new(a0, a, tol)
}

/// Operator pair for the measure-weighted difference
/// `W_{k+1}^{1/2} (d_k/h) W_k^{-1/2}`, whose Euclidean adjoint is the
/// lumped-L2 adjoint of the plain difference.
pub fn pair_weighted(
    complex: &CubicalComplex,
    rel: &RelativeComplex,
    k: usize,
    tol: f64,
) -> Result<OperatorPair> {
    let mut d = derivative_dense(complex, k);
    let w_in = weights(complex, k);
    let w_out = weights(complex, k + 1);
    for j in 0..d.ncols() {
        let scale = 1.0 / w_in[j].sqrt();
        for i in 0..d.nrows() {
            d[(i, j)] *= scale * w_out[i].sqrt();
        }
    }
    let a = LinearRelation::from_matrix(&d);
    let a0 = a.restrict_domain(&interior_subspace(complex, rel, k), tol)?;
    OperatorPair::new(a0, a, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::domain::VoxelDomain;
    use crate::linrel::{point_spectrum, sharp};
    use crate::DEFAULT_TOL;
    use approx::assert_relative_eq;

    fn line(n_cells: usize) -> (CubicalComplex, RelativeComplex) {
        let dom = VoxelDomain::from_predicate(1, [n_cells, 1, 1], 1.0, [0.0; 3], |_| true);
        let complex = CubicalComplex::build(&dom);
        let rel = complex.relative();
        (complex, rel)
    }

    #[test]
    fn three_node_weights_halve_the_ends() {
        let (complex, _) = line(2);
        assert_eq!(weights(&complex, 0), vec![0.5, 1.0, 0.5]);
        assert_eq!(weights(&complex, 1), vec![1.0, 1.0]);
    }

    #[test]
    fn plain_three_node_derivative_matches_difference_stencil() {
        let (complex, _) = line(2);
        let d = derivative_dense(&complex, 0);
        let expect = DMatrix::from_row_slice(2, 3, &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0]);
        assert_eq!(d, expect);
    }

    #[test]
    fn weighted_three_node_sharp_laplacian_has_circulant_spectrum() {
        let (complex, rel) = line(2);
        let pair = pair_weighted(&complex, &rel, 0, DEFAULT_TOL).unwrap();
        let sp = sharp(pair, DEFAULT_TOL).unwrap();
        let a_sharp = sp.a_sharp.operator_part(DEFAULT_TOL);
        let lap = a_sharp
            .compose(&a_sharp.adjoint().negate(), DEFAULT_TOL)
            .unwrap()
            .operator_part(DEFAULT_TOL);
        let dom = lap.domain(DEFAULT_TOL);
        assert_eq!(dom.dim(), 2);
        let eig = point_spectrum(&lap, &dom, DEFAULT_TOL, "lap-sharp-3").unwrap();
        let mut values = eig.eigenvalues.clone();
        values.sort_by(f64::total_cmp);
        // Periodic second difference on 2 effective nodes: -(4/h^2) sin^2(pi k / 2).
        assert_relative_eq!(values[0], -4.0, epsilon = 1e-9);
        assert_relative_eq!(values[1], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn longer_line_sharp_laplacian_matches_circulant_formula() {
        let (complex, rel) = line(5);
        let pair = pair_weighted(&complex, &rel, 0, DEFAULT_TOL).unwrap();
        let sp = sharp(pair, DEFAULT_TOL).unwrap();
        let a_sharp = sp.a_sharp.operator_part(DEFAULT_TOL);
        let lap = a_sharp
            .compose(&a_sharp.adjoint().negate(), DEFAULT_TOL)
            .unwrap()
            .operator_part(DEFAULT_TOL);
        let dom = lap.domain(DEFAULT_TOL);
        let eig = point_spectrum(&lap, &dom, DEFAULT_TOL, "lap-sharp-6").unwrap();
        let mut values = eig.eigenvalues.clone();
        values.sort_by(f64::total_cmp);
        let n = 5.0;
        let mut expect: Vec<f64> = (0..5)
            .map(|k| -4.0 * (std::f64::consts::PI * k as f64 / n).sin().powi(2))
            .collect();
        expect.sort_by(f64::total_cmp);
        assert_eq!(values.len(), expect.len());
        for (v, e) in values.iter().zip(&expect) {
            assert_relative_eq!(v, e, epsilon = 1e-8, max_relative = 1e-8);
        }
    }

    #[test]
    fn weighted_pair_adjoint_is_weighted_divergence() {
        // <D u, v>_W1 = <u, D* v>_W0 must transfer to Euclidean coordinates.
        let (complex, rel) = line(3);
        let pair = pair_weighted(&complex, &rel, 0, DEFAULT_TOL).unwrap();
        let adj = pair.a().adjoint();
        // Maximal operator everywhere defined; adjoint of its hat matrix is
        // the transpose.
        let m = pair.a().as_matrix(DEFAULT_TOL).unwrap();
        let madj = adj.as_matrix(DEFAULT_TOL).unwrap();
        assert_relative_eq!((madj - m.transpose()).norm(), 0.0, epsilon = 1e-10);
    }
}
