//! Deterministic CSV and VTK serialisation for spectra, convergence
//! studies and evolutions.
//!
//! CSV float formatting goes through [`crate::report::format_float_full`]
//! (shortest round-trip representation), so identical inputs give byte
//! identical files. VTK output is legacy ASCII `STRUCTURED_POINTS`: scalar
//! eigenfunctions live on the vertex grid, curl eigenfields are averaged to
//! voxel centers.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::complex::cubical::CubicalComplex;
use crate::complex::domain::VoxelDomain;
use crate::eig::EigResult;
use crate::error::{Error, Result};
use crate::pde_evolution::EvolutionResult;
use crate::report::format_float_full;

/// Spectrum table with the fixed header `index,eigenvalue,residual,cluster_id`.
pub fn spectrum_csv(eig: &EigResult) -> String {
    let mut out = String::from("index,eigenvalue,residual,cluster_id\n");
    for i in 0..eig.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            i,
            format_float_full(eig.eigenvalues[i]),
            format_float_full(eig.residuals[i]),
            eig.cluster_ids.get(i).copied().unwrap_or(0),
        );
    }
    out
}

/// One grid level of one tracked eigenvalue in a refinement study.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub track: usize,
    pub h: f64,
    pub eigenvalue: f64,
    /// Richardson extrapolant from the last three levels; absent on the
    /// first two rows of a track.
    pub richardson: Option<f64>,
    /// Observed order from the same three levels.
    pub order: Option<f64>,
}

/// Convergence table: `track,h,eigenvalue,richardson,order`, rows grouped
/// by track with h in the order the study ran.
pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("track,h,eigenvalue,richardson,order\n");
    for r in rows {
        let richardson = r.richardson.map(format_float_full).unwrap_or_default();
        let order = r.order.map(format_float_full).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.track,
            format_float_full(r.h),
            format_float_full(r.eigenvalue),
            richardson,
            order,
        );
    }
    out
}

/// Observed order and Richardson extrapolant from three consecutive levels
/// `(h0, v0), (h1, v1), (h2, v2)` with `h0 > h1 > h2`. Solves
/// `(v0 - v1)/(v1 - v2) = (h0^p - h1^p)/(h1^p - h2^p)` for `p` by
/// bisection; returns `None` when the differences do not shrink with h
/// (no visible convergence order at these levels).
pub fn order_from_triple(h: [f64; 3], v: [f64; 3]) -> Option<(f64, f64)> {
    if !(h[0] > h[1] && h[1] > h[2] && h[2] > 0.0) {
        return None;
    }
    let d0 = v[0] - v[1];
    let d1 = v[1] - v[2];
    if d1 == 0.0 || d0 == 0.0 || (d0 / d1) <= 1.0 {
        return None;
    }
    let target = d0 / d1;
    let ratio = |p: f64| (h[0].powf(p) - h[1].powf(p)) / (h[1].powf(p) - h[2].powf(p));
    // ratio(p) is increasing in p for h0 > h1 > h2; bracket then bisect.
    let (mut lo, mut hi) = (1e-3, 16.0);
    if ratio(lo) > target || ratio(hi) < target {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    let richardson = v[2] + (v[2] - v[1]) / ((h[1] / h[2]).powf(p) - 1.0);
    Some((p, richardson))
}

/// Snapshot table `t,dof_index,value`, one row per (time, dof).
pub fn snapshots_csv(result: &EvolutionResult) -> String {
    let mut out = String::from("t,dof_index,value\n");
    for (j, t) in result.times.iter().enumerate() {
        for i in 0..result.snapshots.nrows() {
            let _ = writeln!(
                out,
                "{},{},{}",
                format_float_full(*t),
                i,
                format_float_full(result.snapshots[(i, j)]),
            );
        }
    }
    out
}

/// Energy table `t,energy`.
pub fn energy_csv(result: &EvolutionResult) -> String {
    let mut out = String::from("t,energy\n");
    for (t, e) in result.times.iter().zip(&result.energies) {
        let _ = writeln!(out, "{},{}", format_float_full(*t), format_float_full(*e));
    }
    out
}

fn vtk_header(title: &str, dims: [usize; 3], origin: [f64; 3], h: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0");
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "ASCII");
    let _ = writeln!(out, "DATASET STRUCTURED_POINTS");
    let _ = writeln!(out, "DIMENSIONS {} {} {}", dims[0], dims[1], dims[2]);
    let _ = writeln!(
        out,
        "ORIGIN {} {} {}",
        format_float_full(origin[0]),
        format_float_full(origin[1]),
        format_float_full(origin[2]),
    );
    let _ = writeln!(
        out,
        "SPACING {} {} {}",
        format_float_full(h),
        format_float_full(h),
        format_float_full(h),
    );
    out
}

/// Scalar field given on the vertices of `complex`, written on the full
/// vertex grid of the bounding box. Vertices outside the domain carry 0.
pub fn vtk_vertex_scalars(
    domain: &VoxelDomain,
    complex: &CubicalComplex,
    title: &str,
    name: &str,
    values: &[f64],
) -> Result<String> {
    let verts = &complex.cells[0];
    if values.len() != verts.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} values for {} vertices",
            values.len(),
            verts.len()
        )));
    }
    let dims = [domain.shape[0] + 1, domain.shape[1] + 1, domain.shape[2] + 1];
    let mut grid = vec![0.0f64; dims[0] * dims[1] * dims[2]];
    for (cell, v) in verts.iter().zip(values) {
        let [i, j, k] = cell.anchor;
        let idx = (k as usize * dims[1] + j as usize) * dims[0] + i as usize;
        grid[idx] = *v;
    }
    let mut out = vtk_header(title, dims, domain.origin, domain.h);
    let _ = writeln!(out, "POINT_DATA {}", grid.len());
    let _ = writeln!(out, "SCALARS {name} double 1");
    let _ = writeln!(out, "LOOKUP_TABLE default");
    for v in &grid {
        let _ = writeln!(out, "{}", format_float_full(*v));
    }
    Ok(out)
}

/// Edge cochain written as a vector field at voxel centers: the component
/// along each axis is the mean of the four parallel edges of the voxel.
/// Missing voxels (outside the domain) carry the zero vector.
pub fn vtk_edge_vectors(
    domain: &VoxelDomain,
    complex: &CubicalComplex,
    title: &str,
    name: &str,
    values: &[f64],
) -> Result<String> {
    let edges = &complex.cells[1];
    if values.len() != edges.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} values for {} edges",
            values.len(),
            edges.len()
        )));
    }
    let mut lookup: HashMap<(u8, [i64; 3]), usize> = HashMap::with_capacity(edges.len());
    for (idx, cell) in edges.iter().enumerate() {
        let axis = cell.dirs.trailing_zeros() as u8;
        lookup.insert((axis, cell.anchor), idx);
    }
    let dims = domain.shape;
    let mut field = vec![[0.0f64; 3]; dims[0] * dims[1] * dims[2]];
    for vox in domain.filled_voxels() {
        let [i, j, k] = vox;
        let base = [i as i64, j as i64, k as i64];
        let idx = (k * dims[1] + j) * dims[0] + i;
        for axis in 0..3usize {
            let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
            let mut sum = 0.0;
            for (da, db) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                let mut anchor = base;
                anchor[a] += da;
                anchor[b] += db;
                if let Some(&e) = lookup.get(&(axis as u8, anchor)) {
                    sum += values[e];
                }
            }
            field[idx][axis] = 0.25 * sum;
        }
    }
    let center = [
        domain.origin[0] + 0.5 * domain.h,
        domain.origin[1] + 0.5 * domain.h,
        domain.origin[2] + 0.5 * domain.h,
    ];
    let mut out = vtk_header(title, dims, center, domain.h);
    let _ = writeln!(out, "POINT_DATA {}", field.len());
    let _ = writeln!(out, "VECTORS {name} double");
    for v in &field {
        let _ = writeln!(
            out,
            "{} {} {}",
            format_float_full(v[0]),
            format_float_full(v[1]),
            format_float_full(v[2]),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_fit_recovers_a_planted_second_order_error() {
        let p = 2.0;
        let exact = 3.0;
        let h: [f64; 3] = [0.2, 0.1, 0.05];
        let v = [exact + h[0].powf(p), exact + h[1].powf(p), exact + h[2].powf(p)];
        let (order, rich) = order_from_triple(h, v).unwrap();
        assert!((order - 2.0).abs() < 1e-6, "order {order}");
        assert!((rich - exact).abs() < 1e-10, "richardson {rich}");
    }

    #[test]
    fn order_fit_handles_uneven_refinement() {
        let p = 1.7;
        let exact = -4.0;
        let h: [f64; 3] = [1.0 / 12.0, 1.0 / 16.0, 1.0 / 24.0];
        let v = [exact + 3.0 * h[0].powf(p), exact + 3.0 * h[1].powf(p), exact + 3.0 * h[2].powf(p)];
        let (order, rich) = order_from_triple(h, v).unwrap();
        assert!((order - p).abs() < 1e-5, "order {order}");
        assert!((rich - exact).abs() < 1e-9, "richardson {rich}");
    }

    #[test]
    fn order_fit_rejects_non_converging_data() {
        assert!(order_from_triple([0.2, 0.1, 0.05], [1.0, 1.1, 1.3]).is_none());
        assert!(order_from_triple([0.1, 0.2, 0.05], [1.0, 1.1, 1.2]).is_none());
    }
}
