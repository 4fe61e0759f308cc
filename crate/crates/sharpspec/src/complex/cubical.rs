//! Cubical cell complexes over voxel domains, with exact integer incidence.
//!
//! Cells are axis-aligned lattice cubes of every degree: a k-cell is an
//! anchor point plus a set of k extended directions. The derivative matrices
//! carry only entries in {-1, 0, +1} and compose to zero exactly in integer
//! arithmetic; all floating-point structure (spacing, weights) is layered on
//! top elsewhere.
//!
//! Cell ordering is lexicographic by anchor, then by direction mask, so
//! every export is deterministic.

use std::collections::HashMap;

use nalgebra::DMatrix;

use super::domain::VoxelDomain;
use crate::error::{Error, Result};

/// A lattice cell: the product of intervals `[anchor_j, anchor_j + 1]` over
/// the directions set in `dirs`, and the point `anchor_j` elsewhere. The
/// number of set bits is the cell degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cell {
    pub anchor: [i64; 3],
    pub dirs: u8,
}

impl Cell {
    pub fn degree(&self) -> usize {
        self.dirs.count_ones() as usize
    }
}

/// Sparse signed incidence matrix in compressed-row form. Entries are
/// exactly +1 or -1.
#[derive(Debug, Clone)]
pub struct IncidenceMatrix {
    pub rows: usize,
    pub cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    sign: Vec<i8>,
}

impl IncidenceMatrix {
    fn from_rows(cols: usize, rows: &[Vec<(u32, i8)>]) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut sign = Vec::new();
        row_ptr.push(0);
        for r in rows {
            for &(c, s) in r {
                col_idx.push(c);
                sign.push(s);
            }
            row_ptr.push(col_idx.len());
        }
        Self { rows: rows.len(), cols, row_ptr, col_idx, sign }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_entries(&self, r: usize) -> impl Iterator<Item = (usize, i8)> + '_ {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        self.col_idx[lo..hi]
            .iter()
            .zip(&self.sign[lo..hi])
            .map(|(&c, &s)| (c as usize, s))
    }

    /// `out = M x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        for r in 0..self.rows {
            let mut acc = 0.0;
            for (c, s) in self.row_entries(r) {
                acc += f64::from(s) * x[c];
            }
            out[r] = acc;
        }
    }

    /// `out = M^T x`.
    pub fn apply_transpose(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.rows);
        assert_eq!(out.len(), self.cols);
        out.fill(0.0);
        for r in 0..self.rows {
            for (c, s) in self.row_entries(r) {
                out[c] += f64::from(s) * x[r];
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (c, s) in self.row_entries(r) {
                m[(r, c)] = f64::from(s);
            }
        }
        m
    }

    /// Integer composition `self * other`, for exactness checks.
    pub fn compose_integer(&self, other: &IncidenceMatrix) -> Vec<i64> {
        assert_eq!(self.cols, other.rows);
        let mut out = vec![0i64; self.rows * other.cols];
        for r in 0..self.rows {
            for (mid, s1) in self.row_entries(r) {
                for (c, s2) in other.row_entries(mid) {
                    out[r * other.cols + c] += i64::from(s1) * i64::from(s2);
                }
            }
        }
        out
    }
}

/// The cubical complex of a voxel domain: all faces of all filled voxels,
/// one sorted cell list per degree, and the degree-raising derivatives.
#[derive(Debug, Clone)]
pub struct CubicalComplex {
    pub dim: usize,
    pub h: f64,
    /// `cells[k]` lists the k-cells in lexicographic order.
    pub cells: Vec<Vec<Cell>>,
    /// `derivative[k]` maps k-cochains to (k+1)-cochains.
    pub derivative: Vec<IncidenceMatrix>,
}

/// All faces of `cell` with exactly `m` extended directions, appended to
/// `out` (not deduplicated, not sorted).
pub fn faces_into(cell: Cell, m: usize, out: &mut Vec<Cell>) {
    let dirs = cell.dirs;
    let mut sub = dirs;
    loop {
        if sub.count_ones() as usize == m {
            let dropped = dirs & !sub;
            let mut side = dropped;
            loop {
                let mut anchor = cell.anchor;
                for d in 0..3 {
                    if side & (1 << d) != 0 {
                        anchor[d] += 1;
                    }
                }
                out.push(Cell { anchor, dirs: sub });
                if side == 0 {
                    break;
                }
                side = (side - 1) & dropped;
            }
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & dirs;
    }
}

fn lookup(cells: &[Cell], cell: &Cell) -> usize {
    cells.binary_search(cell).expect("face of a complex cell is in the complex")
}

impl CubicalComplex {
    /// Builds the closure of all filled voxels.
    pub fn build(domain: &VoxelDomain) -> Self {
        let dim = domain.dim;
        let full: u8 = (1 << dim) - 1;
        let mut cells: Vec<Vec<Cell>> = vec![Vec::new(); dim + 1];
        for v in domain.filled_voxels() {
            cells[dim].push(Cell {
                anchor: [v[0] as i64, v[1] as i64, v[2] as i64],
                dirs: full,
            });
        }
        let mut scratch = Vec::new();
        for k in 0..dim {
            let mut list = Vec::new();
            for &top in &cells[dim] {
                scratch.clear();
                faces_into(top, k, &mut scratch);
                list.extend_from_slice(&scratch);
            }
            list.sort_unstable();
            list.dedup();
            cells[k] = list;
        }
        // Top cells arrive in x-fastest voxel order; resort into the shared
        // cell order.
        cells[dim].sort_unstable();

        let mut derivative = Vec::new();
        for k in 0..dim {
            let mut rows: Vec<Vec<(u32, i8)>> = Vec::with_capacity(cells[k + 1].len());
            for &cell in &cells[k + 1] {
                let mut entries = Vec::new();
                // d(u)(cell) = sum over extended directions, alternating by
                // position: the product rule for interval boundaries.
                let mut pos = 0i32;
                for d in 0..3u8 {
                    if cell.dirs & (1 << d) == 0 {
                        continue;
                    }
                    let sign = if pos % 2 == 0 { 1i8 } else { -1i8 };
                    let sub = cell.dirs & !(1 << d);
                    let lo = Cell { anchor: cell.anchor, dirs: sub };
                    let mut hi_anchor = cell.anchor;
                    hi_anchor[d as usize] += 1;
                    let hi = Cell { anchor: hi_anchor, dirs: sub };
                    entries.push((lookup(&cells[k], &hi) as u32, sign));
                    entries.push((lookup(&cells[k], &lo) as u32, -sign));
                    pos += 1;
                }
                entries.sort_unstable_by_key(|e| e.0);
                rows.push(entries);
            }
            derivative.push(IncidenceMatrix::from_rows(cells[k].len(), &rows));
        }

        Self { dim, h: domain.h, cells, derivative }
    }

    pub fn cell_count(&self, k: usize) -> usize {
        self.cells.get(k).map_or(0, Vec::len)
    }

    pub fn total_cells(&self) -> usize {
        self.cells.iter().map(Vec::len).sum()
    }

    /// Euler characteristic from cell counts.
    pub fn euler_characteristic(&self) -> i64 {
        let mut chi = 0i64;
        for (k, list) in self.cells.iter().enumerate() {
            let n = list.len() as i64;
            chi += if k % 2 == 0 { n } else { -n };
        }
        chi
    }

    /// Per-degree flags marking the boundary subcomplex: the (dim-1)-cells
    /// with exactly one incident top cell, together with all their faces.
    pub fn boundary_mask(&self) -> Vec<Vec<bool>> {
        let mut mask: Vec<Vec<bool>> = self.cells.iter().map(|c| vec![false; c.len()]).collect();
        if self.dim == 0 {
            return mask;
        }
        let top_d = &self.derivative[self.dim - 1];
        let mut incident = vec![0u32; top_d.cols];
        for r in 0..top_d.rows {
            for (c, _) in top_d.row_entries(r) {
                incident[c] += 1;
            }
        }
        let mut scratch = Vec::new();
        for (i, &count) in incident.iter().enumerate() {
            if count != 1 {
                continue;
            }
            mask[self.dim - 1][i] = true;
            let cell = self.cells[self.dim - 1][i];
            for m in 0..self.dim - 1 {
                scratch.clear();
                faces_into(cell, m, &mut scratch);
                for f in &scratch {
                    mask[m][lookup(&self.cells[m], f)] = true;
                }
            }
        }
        mask
    }

    /// The relative (boundary-removed) complex, with index maps back into
    /// this one.
    pub fn relative(&self) -> RelativeComplex {
        let mask = self.boundary_mask();
        let mut keep: Vec<Vec<u32>> = Vec::with_capacity(self.cells.len());
        let mut new_index: Vec<Vec<Option<u32>>> = Vec::with_capacity(self.cells.len());
        for k in 0..self.cells.len() {
            let mut kept = Vec::new();
            let mut idx = vec![None; self.cells[k].len()];
            for i in 0..self.cells[k].len() {
                if !mask[k][i] {
                    idx[i] = Some(kept.len() as u32);
                    kept.push(i as u32);
                }
            }
            keep.push(kept);
            new_index.push(idx);
        }
        let mut derivative = Vec::new();
        for k in 0..self.derivative.len() {
            let d = &self.derivative[k];
            let mut rows: Vec<Vec<(u32, i8)>> = Vec::with_capacity(keep[k + 1].len());
            for &full_row in &keep[k + 1] {
                let mut entries = Vec::new();
                for (c, s) in d.row_entries(full_row as usize) {
                    if let Some(nc) = new_index[k][c] {
                        entries.push((nc, s));
                    }
                }
                rows.push(entries);
            }
            derivative.push(IncidenceMatrix::from_rows(keep[k].len(), &rows));
        }
        RelativeComplex {
            full_sizes: self.cells.iter().map(Vec::len).collect(),
            keep,
            derivative,
        }
    }

    /// Betti numbers by dense rank-nullity over the derivatives. Exact and
    /// simple, but cubic in the cell count; refuses oversized complexes.
    pub fn betti_dense(&self, tol: f64) -> Result<Vec<usize>> {
        const LIMIT: usize = 4000;
        if self.total_cells() > LIMIT {
            return Err(Error::ResourceLimit(format!(
                "dense Betti on {} cells (limit {LIMIT}); use the combinatorial path",
                self.total_cells()
            )));
        }
        let mut ranks = vec![0usize; self.dim + 1];
        for k in 0..self.dim {
            ranks[k] = crate::linrel::rank(&self.derivative[k].to_dense(), tol);
        }
        let mut betti = vec![0usize; self.dim + 1];
        for k in 0..=self.dim {
            let n = self.cell_count(k);
            let rank_out = if k < self.dim { ranks[k] } else { 0 };
            let rank_in = if k > 0 { ranks[k - 1] } else { 0 };
            betti[k] = n - rank_out - rank_in;
        }
        // Report the first three numbers; top-degree entries beyond them are
        // zero for any proper voxel subdomain.
        betti.resize(3, 0);
        betti.truncate(3);
        Ok(betti)
    }
}

/// Betti numbers from combinatorics alone: components by shared-vertex
/// union-find, cavities by flooding the complement, the middle number from
/// the Euler characteristic. Linear in the voxel count.
pub fn betti_combinatorial(domain: &VoxelDomain, complex: &CubicalComplex) -> Vec<usize> {
    let voxels = domain.filled_voxels();
    let b0 = component_count(&voxels, domain.dim);
    let b2 = if domain.dim == 3 { cavity_count(domain) } else { 0 };
    let chi = complex.euler_characteristic();
    // chi = b0 - b1 + b2 for these complexes.
    let b1 = (b0 as i64 + b2 as i64 - chi).max(0) as usize;
    vec![b0, b1, b2]
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect() }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let up = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = up;
            x = up;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[ra as usize] = rb;
        }
    }
}

/// Components of the voxel set, where voxels touching in any vertex count
/// as connected (that is how their closures meet in the complex).
fn component_count(voxels: &[[usize; 3]], dim: usize) -> usize {
    let mut uf = UnionFind::new(voxels.len());
    let mut seen: HashMap<(i64, i64, i64), u32> = HashMap::new();
    for (vi, v) in voxels.iter().enumerate() {
        let base = [v[0] as i64, v[1] as i64, v[2] as i64];
        for corner in 0..(1u8 << dim) {
            let key = (
                base[0] + i64::from(corner & 1),
                base[1] + i64::from((corner >> 1) & 1),
                base[2] + i64::from((corner >> 2) & 1),
            );
            match seen.entry(key) {
                std::collections::hash_map::Entry::Occupied(e) => {
                    uf.union(*e.get(), vi as u32);
                }
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(vi as u32);
                }
            }
        }
    }
    let mut roots: Vec<u32> = (0..voxels.len() as u32).map(|i| uf.find(i)).collect();
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}

/// Number of bounded components of the complement, flooded with face
/// connectivity inside a one-voxel margin around the grid.
fn cavity_count(domain: &VoxelDomain) -> usize {
    let nx = domain.shape[0] + 2;
    let ny = domain.shape[1] + 2;
    let nz = domain.shape[2] + 2;
    let idx = |i: usize, j: usize, k: usize| i + nx * (j + ny * k);
    let empty = |i: usize, j: usize, k: usize| {
        !domain.is_filled(i as i64 - 1, j as i64 - 1, k as i64 - 1)
    };
    let mut visited = vec![false; nx * ny * nz];
    let mut stack = Vec::new();
    let mut components = 0usize;
    let flood = |start: (usize, usize, usize),
                     visited: &mut Vec<bool>,
                     stack: &mut Vec<(usize, usize, usize)>| {
        stack.push(start);
        visited[idx(start.0, start.1, start.2)] = true;
        while let Some((i, j, k)) = stack.pop() {
            let neighbors = [
                (i.wrapping_sub(1), j, k),
                (i + 1, j, k),
                (i, j.wrapping_sub(1), k),
                (i, j + 1, k),
                (i, j, k.wrapping_sub(1)),
                (i, j, k + 1),
            ];
            for (a, b, c) in neighbors {
                if a < nx && b < ny && c < nz && !visited[idx(a, b, c)] && empty(a, b, c) {
                    visited[idx(a, b, c)] = true;
                    stack.push((a, b, c));
                }
            }
        }
    };
    // The margin cell (0,0,0) is always empty: flood the outside first.
    flood((0, 0, 0), &mut visited, &mut stack);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                if empty(i, j, k) && !visited[idx(i, j, k)] {
                    components += 1;
                    flood((i, j, k), &mut visited, &mut stack);
                }
            }
        }
    }
    components
}

/// The quotient complex with the boundary subcomplex removed: cochains
/// supported away from the boundary, with the induced derivatives.
#[derive(Debug, Clone)]
pub struct RelativeComplex {
    /// Sizes of the full complex per degree.
    pub full_sizes: Vec<usize>,
    /// `keep[k][i]` is the full-complex index of relative cell `i`.
    pub keep: Vec<Vec<u32>>,
    /// Induced derivatives between relative cochain spaces.
    pub derivative: Vec<IncidenceMatrix>,
}

impl RelativeComplex {
    pub fn size(&self, k: usize) -> usize {
        self.keep.get(k).map_or(0, Vec::len)
    }

    /// Relative cochain -> full cochain, zero on the boundary subcomplex.
    pub fn extend_by_zero(&self, k: usize, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.size(k));
        let mut out = vec![0.0; self.full_sizes[k]];
        for (i, &full) in self.keep[k].iter().enumerate() {
            out[full as usize] = u[i];
        }
        out
    }

    /// Full cochain -> relative cochain (drop boundary values).
    pub fn restrict(&self, k: usize, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.full_sizes[k]);
        self.keep[k].iter().map(|&full| u[full as usize]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::domain::DomainSpec;

    fn line(n: usize) -> VoxelDomain {
        VoxelDomain::from_predicate(1, [n, 1, 1], 1.0, [0.0; 3], |_| true)
    }

    fn square_with_hole() -> VoxelDomain {
        VoxelDomain::from_predicate(2, [3, 3, 1], 1.0, [0.0; 3], |c| {
            !(c[0] > 1.0 && c[0] < 2.0 && c[1] > 1.0 && c[1] < 2.0)
        })
    }

    #[test]
    fn one_dimensional_line_counts_and_derivative() {
        let complex = CubicalComplex::build(&line(2));
        assert_eq!(complex.cell_count(0), 3);
        assert_eq!(complex.cell_count(1), 2);
        let d = complex.derivative[0].to_dense();
        let expect = DMatrix::from_row_slice(2, 3, &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0]);
        assert_eq!(d, expect);
    }

    #[test]
    fn derivatives_compose_to_zero_exactly() {
        for domain in [
            square_with_hole(),
            VoxelDomain::from_predicate(3, [2, 2, 2], 0.5, [0.0; 3], |c| {
                c[0] < 0.5 || c[2] < 0.5
            }),
        ] {
            let complex = CubicalComplex::build(&domain);
            for k in 0..complex.dim.saturating_sub(1) {
                let dd = complex.derivative[k + 1].compose_integer(&complex.derivative[k]);
                assert!(dd.iter().all(|&x| x == 0), "d d != 0 at degree {k}");
            }
        }
    }

    #[test]
    fn boundary_mask_of_line_marks_end_vertices() {
        let complex = CubicalComplex::build(&line(3));
        let mask = complex.boundary_mask();
        assert_eq!(mask[0], vec![true, false, false, true]);
        assert!(mask[1].iter().all(|&b| !b));
        let rel = complex.relative();
        assert_eq!(rel.size(0), 2);
        assert_eq!(rel.size(1), 3);
    }

    #[test]
    fn relative_extension_intertwines_derivatives() {
        let complex = CubicalComplex::build(&square_with_hole());
        let rel = complex.relative();
        for k in 0..complex.dim {
            let n = rel.size(k);
            let u: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin() + 1.0).collect();
            // d_full (extend u) vs extend (d_rel u)
            let ext = rel.extend_by_zero(k, &u);
            let mut lhs = vec![0.0; complex.cell_count(k + 1)];
            complex.derivative[k].apply(&ext, &mut lhs);
            let mut du = vec![0.0; rel.size(k + 1)];
            rel.derivative[k].apply(&u, &mut du);
            let rhs = rel.extend_by_zero(k + 1, &du);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn betti_of_annulus_sees_the_hole() {
        let domain = square_with_hole();
        let complex = CubicalComplex::build(&domain);
        let dense = complex.betti_dense(1e-10).unwrap();
        let fast = betti_combinatorial(&domain, &complex);
        assert_eq!(dense, vec![1, 1, 0]);
        assert_eq!(fast, vec![1, 1, 0]);
    }

    #[test]
    fn betti_of_hollow_cube_sees_the_cavity() {
        let domain = VoxelDomain::from_predicate(3, [3, 3, 3], 1.0, [0.0; 3], |c| {
            !(1.0 < c[0] && c[0] < 2.0 && 1.0 < c[1] && c[1] < 2.0 && 1.0 < c[2] && c[2] < 2.0)
        });
        let complex = CubicalComplex::build(&domain);
        let dense = complex.betti_dense(1e-10).unwrap();
        let fast = betti_combinatorial(&domain, &complex);
        assert_eq!(dense, vec![1, 0, 1]);
        assert_eq!(fast, vec![1, 0, 1]);
    }

    #[test]
    fn corner_contact_counts_as_connected() {
        // Two voxels sharing only the center vertex.
        let dom = VoxelDomain::from_predicate(2, [2, 2, 1], 1.0, [0.0; 3], |c| {
            (c[0] < 1.0 && c[1] < 1.0) || (c[0] > 1.0 && c[1] > 1.0)
        });
        let complex = CubicalComplex::build(&dom);
        let b = betti_combinatorial(&dom, &complex);
        assert_eq!(b[0], 1);
        assert_eq!(complex.betti_dense(1e-10).unwrap()[0], 1);
    }

    #[test]
    fn betti_of_solid_torus_from_spec() {
        let spec: DomainSpec = serde_json::from_str(
            r#"{"shape": "solid-torus", "h": 0.25, "radius": [1.0, 0.4]}"#,
        )
        .unwrap();
        let domain = spec.voxelize().unwrap();
        let complex = CubicalComplex::build(&domain);
        let b = betti_combinatorial(&domain, &complex);
        assert_eq!(b, vec![1, 1, 0]);
    }
}
