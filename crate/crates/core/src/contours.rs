//! Solid ground-truth masks from per-slice closed contours.
//!
//! Pixel `(i, j)` is sampled at its center `(i, j)`. A center is inside
//! when a ray from it toward −x crosses an odd number of edges, taken over
//! all polygons of the slice together. An edge spans the half-open
//! interval `[y_min, y_max)` in y, and a crossing exactly at the center's
//! x counts, so shared vertices and edges resolve the same way everywhere.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::volume::{Dims, LabelGrid, Spacing};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContourError {
    #[error("polygon with {0} vertices (need at least 3)")]
    DegeneratePolygon(usize),
    #[error("contour slice {index} outside volume depth {nz}")]
    IndexOutOfRange { index: usize, nz: usize },
    #[error("non-finite vertex coordinate")]
    NonFiniteVertex,
}

/// Closed polygon in continuous pixel coordinates; the last vertex
/// connects back to the first.
pub type Polygon = Vec<[f64; 2]>;

/// Expert contours keyed by axial slice index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContourStack {
    pub slices: BTreeMap<usize, Vec<Polygon>>,
}

#[derive(Serialize, Deserialize)]
struct SliceJson {
    index: usize,
    polygons: Vec<Polygon>,
}

#[derive(Serialize, Deserialize)]
struct StackJson {
    slices: Vec<SliceJson>,
}

impl Serialize for ContourStack {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        StackJson {
            slices: self
                .slices
                .iter()
                .map(|(&index, polygons)| SliceJson {
                    index,
                    polygons: polygons.clone(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ContourStack {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = StackJson::deserialize(d)?;
        let mut slices: BTreeMap<usize, Vec<Polygon>> = BTreeMap::new();
        for s in raw.slices {
            slices.entry(s.index).or_default().extend(s.polygons);
        }
        Ok(ContourStack { slices })
    }
}

/// x-coordinate where the edge meets the horizontal line `y`, if the edge
/// spans `y` under the half-open rule.
#[inline]
pub fn edge_crossing(a: [f64; 2], b: [f64; 2], y: f64) -> Option<f64> {
    let (lo, hi) = if a[1] <= b[1] { (a, b) } else { (b, a) };
    if lo[1] <= y && y < hi[1] {
        Some(lo[0] + (y - lo[1]) * (hi[0] - lo[0]) / (hi[1] - lo[1]))
    } else {
        None
    }
}

fn validate(polygons: &[Polygon]) -> Result<(), ContourError> {
    for p in polygons {
        if p.len() < 3 {
            return Err(ContourError::DegeneratePolygon(p.len()));
        }
        if p.iter().flatten().any(|c| !c.is_finite()) {
            return Err(ContourError::NonFiniteVertex);
        }
    }
    Ok(())
}

/// Even-odd fill of `polygons` on an `nx × ny` grid; row-major, x fastest.
pub fn rasterize_slice(polygons: &[Polygon], nx: usize, ny: usize) -> Result<Vec<u8>, ContourError> {
    validate(polygons)?;
    let mut out = vec![0u8; nx * ny];
    let mut xs: Vec<f64> = Vec::new();
    for j in 0..ny {
        let y = j as f64;
        xs.clear();
        for poly in polygons {
            for k in 0..poly.len() {
                let a = poly[k];
                let b = poly[(k + 1) % poly.len()];
                if let Some(x) = edge_crossing(a, b, y) {
                    xs.push(x);
                }
            }
        }
        xs.sort_by(f64::total_cmp);
        // Pixel i is inside iff #{x ∈ xs : x <= i} is odd, i.e. it falls in
        // some [xs[2k], xs[2k+1]).
        let row = &mut out[j * nx..(j + 1) * nx];
        for span in xs.chunks_exact(2) {
            let start = span[0].ceil().max(0.0);
            let end = span[1].ceil().min(nx as f64);
            if start >= end {
                continue;
            }
            for px in &mut row[start as usize..end as usize] {
                *px = 1;
            }
        }
    }
    Ok(out)
}

/// Rasterizes each contoured axial slice independently; other slices stay
/// empty.
pub fn stack_to_mask(
    stack: &ContourStack,
    dims: Dims,
    spacing: Spacing,
) -> Result<LabelGrid, ContourError> {
    let (nx, ny, nz) = (dims.nx(), dims.ny(), dims.nz());
    if let Some((&index, _)) = stack.slices.iter().find(|(&k, _)| k >= nz) {
        return Err(ContourError::IndexOutOfRange { index, nz });
    }
    let mut mask = LabelGrid::zeros(dims, spacing).map_err(|_| ContourError::IndexOutOfRange { index: 0, nz })?;
    let plane = nx * ny;
    for (&k, polygons) in &stack.slices {
        let filled = rasterize_slice(polygons, nx, ny)?;
        mask.labels_mut()[k * plane..(k + 1) * plane].copy_from_slice(&filled);
    }
    Ok(mask)
}
