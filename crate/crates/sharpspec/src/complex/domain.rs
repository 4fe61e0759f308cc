//! Voxel domains and the JSON specification they are built from.
//!
//! A domain is a finite set of filled unit-h cubes on an axis-aligned grid.
//! Shapes are voxelised by a cell-center predicate, so refining `h` produces
//! the usual staircase approximations of the smooth body.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Requested shape of a voxel domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeKind {
    /// Filled box; `extent` gives the side lengths (1 to 3 entries, fixing
    /// the dimension).
    Box,
    /// Solid ball of radius `radius` in 3D.
    Ball,
    /// Spherical shell; `radius` must be the pair `[inner, outer]`.
    Shell,
    /// Solid torus; `radius` must be `[major, minor]`.
    SolidTorus,
    /// Explicit voxel list read from `voxels_path`.
    Voxels,
    /// Seeded random connected blob inside the box given by `extent`.
    RandomBlob,
}

/// Radius field: a single value or an `[inner, outer]` / `[major, minor]`
/// pair depending on the shape.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Radius {
    Scalar(f64),
    Pair([f64; 2]),
}

/// JSON domain description. Unknown fields are rejected so a typo in a
/// config fails loudly instead of silently meaning something else.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub shape: ShapeKind,
    pub h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<Radius>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voxels_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl DomainSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Builds the voxel set. Paths inside the spec are resolved relative to
    /// the current directory.
    pub fn voxelize(&self) -> Result<VoxelDomain> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::InvalidDomain(format!("grid spacing h = {}", self.h)));
        }
        match self.shape {
            ShapeKind::Box => {
                let extent = self.extent_checked()?;
                let dim = extent.len();
                let mut shape = [1usize; 3];
                for (d, &e) in extent.iter().enumerate() {
                    shape[d] = cells_along(e, self.h)?;
                }
                Ok(VoxelDomain::from_predicate(dim, shape, self.h, [0.0; 3], |_| true))
            }
            ShapeKind::Ball => {
                let r = self.scalar_radius()?;
                let (shape, origin) = centered_grid(r, self.h);
                Ok(VoxelDomain::from_predicate(3, shape, self.h, origin, |c| {
                    c[0] * c[0] + c[1] * c[1] + c[2] * c[2] < r * r
                }))
            }
            ShapeKind::Shell => {
                let [inner, outer] = self.pair_radius()?;
                if !(0.0 < inner && inner < outer) {
                    return Err(Error::InvalidDomain(format!(
                        "shell radii [{inner}, {outer}]"
                    )));
                }
                let (shape, origin) = centered_grid(outer, self.h);
                Ok(VoxelDomain::from_predicate(3, shape, self.h, origin, |c| {
                    let r2 = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
                    inner * inner < r2 && r2 < outer * outer
                }))
            }
            ShapeKind::SolidTorus => {
                let [major, minor] = self.pair_radius()?;
                if !(0.0 < minor && minor < major) {
                    return Err(Error::InvalidDomain(format!(
                        "torus radii [{major}, {minor}]"
                    )));
                }
                let rxy = major + minor;
                let nxy = 2 * half_cells(rxy, self.h);
                let nz = 2 * half_cells(minor, self.h);
                let shape = [nxy, nxy, nz];
                let origin = [
                    -(nxy as f64) * self.h / 2.0,
                    -(nxy as f64) * self.h / 2.0,
                    -(nz as f64) * self.h / 2.0,
                ];
                Ok(VoxelDomain::from_predicate(3, shape, self.h, origin, |c| {
                    let ring = (c[0] * c[0] + c[1] * c[1]).sqrt() - major;
                    ring * ring + c[2] * c[2] < minor * minor
                }))
            }
            ShapeKind::Voxels => {
                let path = self.voxels_path.as_deref().ok_or_else(|| {
                    Error::InvalidDomain("shape \"voxels\" needs voxels_path".into())
                })?;
                VoxelDomain::from_voxel_file(Path::new(path), self.h)
            }
            ShapeKind::RandomBlob => {
                let extent = self.extent_checked()?;
                let dim = extent.len();
                let mut shape = [1usize; 3];
                for (d, &e) in extent.iter().enumerate() {
                    shape[d] = cells_along(e, self.h)?;
                }
                let seed = self.seed.unwrap_or(crate::DEFAULT_SEED);
                Ok(VoxelDomain::random_blob(dim, shape, self.h, seed))
            }
        }
    }

    fn extent_checked(&self) -> Result<Vec<f64>> {
        let extent = self
            .extent
            .clone()
            .ok_or_else(|| Error::InvalidDomain("shape needs an extent".into()))?;
        if extent.is_empty() || extent.len() > 3 {
            return Err(Error::InvalidDomain(format!(
                "extent needs 1 to 3 entries, got {}",
                extent.len()
            )));
        }
        for &e in &extent {
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::InvalidDomain(format!("extent entry {e}")));
            }
        }
        Ok(extent)
    }

    fn scalar_radius(&self) -> Result<f64> {
        match self.radius {
            Some(Radius::Scalar(r)) if r.is_finite() && r > 0.0 => Ok(r),
            _ => Err(Error::InvalidDomain(
                "shape needs a positive scalar radius".into(),
            )),
        }
    }

    fn pair_radius(&self) -> Result<[f64; 2]> {
        match self.radius {
            Some(Radius::Pair(p)) if p.iter().all(|r| r.is_finite()) => Ok(p),
            _ => Err(Error::InvalidDomain(
                "shape needs a two-entry radius".into(),
            )),
        }
    }
}

fn cells_along(extent: f64, h: f64) -> Result<usize> {
    let n = (extent / h).round() as i64;
    if n < 1 {
        return Err(Error::InvalidDomain(format!(
            "extent {extent} shorter than one cell at h = {h}"
        )));
    }
    Ok(n as usize)
}

fn half_cells(r: f64, h: f64) -> usize {
    ((r / h).ceil() as usize).max(1)
}

/// Grid covering [-r, r]^3 with the origin at the physical center.
fn centered_grid(r: f64, h: f64) -> ([usize; 3], [f64; 3]) {
    let half = half_cells(r, h);
    let n = 2 * half;
    let o = -(n as f64) * h / 2.0;
    ([n, n, n], [o, o, o])
}

/// A finite set of filled cells on an axis-aligned grid.
#[derive(Debug, Clone)]
pub struct VoxelDomain {
    /// Spatial dimension (1, 2 or 3); trailing grid sizes are 1.
    pub dim: usize,
    /// Grid size in voxels along each axis.
    pub shape: [usize; 3],
    /// Edge length of one voxel.
    pub h: f64,
    /// Physical coordinates of lattice point (0, 0, 0).
    pub origin: [f64; 3],
    filled: Vec<bool>,
}

impl VoxelDomain {
    pub fn from_predicate(
        dim: usize,
        shape: [usize; 3],
        h: f64,
        origin: [f64; 3],
        pred: impl Fn([f64; 3]) -> bool,
    ) -> Self {
        assert!((1..=3).contains(&dim));
        let mut dom = Self {
            dim,
            shape,
            h,
            origin,
            filled: vec![false; shape[0] * shape[1] * shape[2]],
        };
        for k in 0..shape[2] {
            for j in 0..shape[1] {
                for i in 0..shape[0] {
                    let c = [
                        origin[0] + (i as f64 + 0.5) * h,
                        origin[1] + (j as f64 + 0.5) * h,
                        origin[2] + (k as f64 + 0.5) * h,
                    ];
                    if pred(c) {
                        let idx = dom.index(i, j, k);
                        dom.filled[idx] = true;
                    }
                }
            }
        }
        dom
    }

    /// Reads a voxel list: first data line `nx ny nz`, then one `i j k`
    /// triple per filled voxel. `#` starts a comment.
    pub fn from_voxel_file(path: &Path, h: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines().filter_map(|l| {
            let l = l.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                None
            } else {
                Some(l)
            }
        });
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidData("empty voxel file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidData(format!("voxel header: {e}")))?;
        if dims.len() != 3 || dims.iter().any(|&n| n == 0) {
            return Err(Error::InvalidData(format!("voxel header {header:?}")));
        }
        let shape = [dims[0], dims[1], dims[2]];
        let dim = if shape[2] > 1 {
            3
        } else if shape[1] > 1 {
            2
        } else {
            1
        };
        let mut dom = Self {
            dim,
            shape,
            h,
            origin: [0.0; 3],
            filled: vec![false; shape[0] * shape[1] * shape[2]],
        };
        for line in lines {
            let idx: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidData(format!("voxel line {line:?}: {e}")))?;
            if idx.len() != 3 {
                return Err(Error::InvalidData(format!("voxel line {line:?}")));
            }
            if idx[0] >= shape[0] || idx[1] >= shape[1] || idx[2] >= shape[2] {
                return Err(Error::InvalidData(format!(
                    "voxel {idx:?} outside {shape:?}"
                )));
            }
            let flat = dom.index(idx[0], idx[1], idx[2]);
            dom.filled[flat] = true;
        }
        if dom.voxel_count() == 0 {
            return Err(Error::InvalidDomain("voxel file lists no voxels".into()));
        }
        Ok(dom)
    }

    /// Seeded connected blob: a random walk from the grid center marks cells
    /// until roughly 40 percent of the box is filled.
    pub fn random_blob(dim: usize, shape: [usize; 3], h: f64, seed: u64) -> Self {
        let total = shape[0] * shape[1] * shape[2];
        let target = (total * 2 / 5).max(1);
        let mut dom = Self {
            dim,
            shape,
            h,
            origin: [0.0; 3],
            filled: vec![false; total],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pos = [
            (shape[0] / 2) as i64,
            (shape[1] / 2) as i64,
            (shape[2] / 2) as i64,
        ];
        let mut count = 0usize;
        let mut steps = 0usize;
        while count < target && steps < 200 * total {
            steps += 1;
            let flat = dom.index(pos[0] as usize, pos[1] as usize, pos[2] as usize);
            if !dom.filled[flat] {
                dom.filled[flat] = true;
                count += 1;
            }
            let axis = rng.random_range(0..dim);
            let dir = if rng.random_bool(0.5) { 1 } else { -1 };
            let next = pos[axis] + dir;
            if next >= 0 && (next as usize) < shape[axis] {
                pos[axis] = next;
            }
        }
        dom
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.shape[0] * (j + self.shape[1] * k)
    }

    /// Filled test with signed indices; everything outside the grid is empty.
    #[inline]
    pub fn is_filled(&self, i: i64, j: i64, k: i64) -> bool {
        if i < 0 || j < 0 || k < 0 {
            return false;
        }
        let (i, j, k) = (i as usize, j as usize, k as usize);
        if i >= self.shape[0] || j >= self.shape[1] || k >= self.shape[2] {
            return false;
        }
        self.filled[self.index(i, j, k)]
    }

    pub fn voxel_count(&self) -> usize {
        self.filled.iter().filter(|&&f| f).count()
    }

    /// All filled voxels in x-fastest lexicographic order.
    pub fn filled_voxels(&self) -> Vec<[usize; 3]> {
        let mut out = Vec::with_capacity(self.voxel_count());
        for k in 0..self.shape[2] {
            for j in 0..self.shape[1] {
                for i in 0..self.shape[0] {
                    if self.filled[self.index(i, j, k)] {
                        out.push([i, j, k]);
                    }
                }
            }
        }
        out
    }

    /// Physical coordinates of the center of a voxel.
    pub fn center(&self, v: [usize; 3]) -> [f64; 3] {
        [
            self.origin[0] + (v[0] as f64 + 0.5) * self.h,
            self.origin[1] + (v[1] as f64 + 0.5) * self.h,
            self.origin[2] + (v[2] as f64 + 0.5) * self.h,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_spec_round_trips_and_counts() {
        let spec: DomainSpec =
            serde_json::from_str(r#"{"shape": "box", "h": 0.25, "extent": [1.0, 0.5]}"#).unwrap();
        let dom = spec.voxelize().unwrap();
        assert_eq!(dom.dim, 2);
        assert_eq!(dom.shape, [4, 2, 1]);
        assert_eq!(dom.voxel_count(), 8);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = DomainSpec::from_json(r#"{"shape": "box", "h": 1.0, "extnet": [1]}"#);
        assert!(err.is_err());
    }

    #[test]
    fn ball_is_centered_and_symmetric() {
        let spec: DomainSpec =
            serde_json::from_str(r#"{"shape": "ball", "h": 0.25, "radius": 1.0}"#).unwrap();
        let dom = spec.voxelize().unwrap();
        assert_eq!(dom.dim, 3);
        // Mirror symmetry through the center in every axis.
        let n = dom.shape[0];
        for v in dom.filled_voxels() {
            assert!(dom.is_filled(
                (n - 1 - v[0]) as i64,
                (n - 1 - v[1]) as i64,
                (n - 1 - v[2]) as i64
            ));
        }
        // Roughly 4/3 pi voxels per unit volume.
        let vol = dom.voxel_count() as f64 * 0.25_f64.powi(3);
        assert!((vol - 4.0 * std::f64::consts::PI / 3.0).abs() < 0.6);
    }

    #[test]
    fn shell_needs_radius_pair() {
        let bad: DomainSpec =
            serde_json::from_str(r#"{"shape": "shell", "h": 0.5, "radius": 1.0}"#).unwrap();
        assert!(bad.voxelize().is_err());
        let good: DomainSpec =
            serde_json::from_str(r#"{"shape": "shell", "h": 0.25, "radius": [0.5, 1.0]}"#)
                .unwrap();
        let dom = good.voxelize().unwrap();
        // Center voxel block is hollow.
        let c = (dom.shape[0] / 2) as i64;
        assert!(!dom.is_filled(c, c, c));
        assert!(dom.voxel_count() > 0);
    }

    #[test]
    fn voxel_file_parses_with_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dom.vox");
        std::fs::write(&path, "# demo\n3 1 1\n0 0 0\n2 0 0 # gap at 1\n").unwrap();
        let dom = VoxelDomain::from_voxel_file(&path, 1.0).unwrap();
        assert_eq!(dom.dim, 1);
        assert_eq!(dom.voxel_count(), 2);
        assert!(dom.is_filled(0, 0, 0));
        assert!(!dom.is_filled(1, 0, 0));
    }

    #[test]
    fn random_blob_is_deterministic_per_seed() {
        let a = VoxelDomain::random_blob(2, [8, 8, 1], 1.0, 7);
        let b = VoxelDomain::random_blob(2, [8, 8, 1], 1.0, 7);
        let c = VoxelDomain::random_blob(2, [8, 8, 1], 1.0, 8);
        assert_eq!(a.filled_voxels(), b.filled_voxels());
        assert!(a.voxel_count() >= (8 * 8) * 2 / 5);
        assert!(a.filled_voxels() != c.filled_voxels() || a.voxel_count() == 64);
    }
}
