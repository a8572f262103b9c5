//! Overlap and distance measures between binary masks.
//!
//! Hausdorff distances are measured in index space (voxel units, spacing
//! ignored) between voxel centers. Physical volume uses the spacing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::volume::{Dims, LabelGrid, Spacing};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("mask dimensions differ: {0:?} vs {1:?}")]
    DimsMismatch([usize; 3], [usize; 3]),
    #[error("both masks are empty")]
    BothEmpty,
    #[error("mask has no foreground voxels")]
    EmptyMask,
}

/// One comparison between two masks `a` and `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseMetrics {
    /// Dice score as a fraction in [0, 1].
    pub dsc: f64,
    /// Symmetric Hausdorff distance in voxels.
    pub hd: f64,
    pub volume_a_mm3: f64,
    pub volume_b_mm3: f64,
    pub voxels_a: u64,
    pub voxels_b: u64,
    pub elapsed_seconds: f64,
}

fn check_dims(a: &LabelGrid, b: &LabelGrid) -> Result<(), MetricError> {
    if a.dims() != b.dims() {
        return Err(MetricError::DimsMismatch(a.dims().0, b.dims().0));
    }
    Ok(())
}

/// `2|A∩B| / (|A| + |B|)` over non-zero voxels.
pub fn dice(a: &LabelGrid, b: &LabelGrid) -> Result<f64, MetricError> {
    check_dims(a, b)?;
    let (mut na, mut nb, mut both) = (0u64, 0u64, 0u64);
    for (&x, &y) in a.labels().iter().zip(b.labels()) {
        let (x, y) = (x != 0, y != 0);
        na += u64::from(x);
        nb += u64::from(y);
        both += u64::from(x && y);
    }
    if na + nb == 0 {
        return Err(MetricError::BothEmpty);
    }
    Ok(2.0 * both as f64 / (na + nb) as f64)
}

/// Squared Euclidean distance from every voxel center to the nearest
/// foreground center. Values are exact integers.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    dims: Dims,
    squared: Vec<u64>,
}

impl DistanceField {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn squared(&self) -> &[u64] {
        &self.squared
    }

    pub fn distance(&self, x: usize, y: usize, z: usize) -> f64 {
        (self.squared[self.dims.index(x, y, z)] as f64).sqrt()
    }

    pub fn distances(&self) -> Vec<f64> {
        self.squared.iter().map(|&d| (d as f64).sqrt()).collect()
    }
}

const INF: u64 = u64::MAX;

/// Lower envelope of parabolas `f[q] + (i − q)²` along one line, written
/// back into `f`. Sites with `f[q] == INF` are skipped.
fn envelope_1d(f: &mut [u64], sites: &mut Vec<usize>, bounds: &mut Vec<f64>, scratch: &mut Vec<u64>) {
    let n = f.len();
    sites.clear();
    bounds.clear();
    for q in 0..n {
        if f[q] == INF {
            continue;
        }
        let fq = f[q] as f64 + (q * q) as f64;
        loop {
            match sites.last() {
                None => {
                    sites.push(q);
                    bounds.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&v) => {
                    let fv = f[v] as f64 + (v * v) as f64;
                    let s = (fq - fv) / (2.0 * (q as f64 - v as f64));
                    if s <= *bounds.last().unwrap() {
                        sites.pop();
                        bounds.pop();
                    } else {
                        sites.push(q);
                        bounds.push(s);
                        break;
                    }
                }
            }
        }
    }
    if sites.is_empty() {
        return;
    }
    scratch.clear();
    let mut k = 0;
    for i in 0..n {
        while k + 1 < sites.len() && bounds[k + 1] < i as f64 {
            k += 1;
        }
        let v = sites[k];
        let d = i.abs_diff(v) as u64;
        scratch.push(f[v] + d * d);
    }
    f.copy_from_slice(scratch);
}

/// Exact Euclidean distance transform by three separable passes of the
/// lower-envelope-of-parabolas method (x, then y, then z).
pub fn euclidean_distance_transform(mask: &LabelGrid) -> Result<DistanceField, MetricError> {
    let dims = mask.dims();
    if mask.foreground_count() == 0 {
        return Err(MetricError::EmptyMask);
    }
    let (nx, ny, nz) = (dims.nx(), dims.ny(), dims.nz());
    let mut sq: Vec<u64> = mask
        .labels()
        .iter()
        .map(|&l| if l != 0 { 0 } else { INF })
        .collect();

    let mut sites = Vec::new();
    let mut bounds = Vec::new();
    let mut scratch = Vec::new();

    for row in sq.chunks_exact_mut(nx) {
        envelope_1d(row, &mut sites, &mut bounds, &mut scratch);
    }

    let mut line = Vec::with_capacity(ny.max(nz));
    for z in 0..nz {
        for x in 0..nx {
            line.clear();
            line.extend((0..ny).map(|y| sq[dims.index(x, y, z)]));
            envelope_1d(&mut line, &mut sites, &mut bounds, &mut scratch);
            for (y, &d) in line.iter().enumerate() {
                sq[dims.index(x, y, z)] = d;
            }
        }
    }

    for y in 0..ny {
        for x in 0..nx {
            line.clear();
            line.extend((0..nz).map(|z| sq[dims.index(x, y, z)]));
            envelope_1d(&mut line, &mut sites, &mut bounds, &mut scratch);
            for (z, &d) in line.iter().enumerate() {
                sq[dims.index(x, y, z)] = d;
            }
        }
    }

    Ok(DistanceField { dims, squared: sq })
}

/// Directed squared Hausdorff `max_{a∈A} min_{b∈B} |a − b|²`.
pub fn directed_hausdorff_squared(a: &LabelGrid, b: &LabelGrid) -> Result<u64, MetricError> {
    check_dims(a, b)?;
    if a.foreground_count() == 0 {
        return Err(MetricError::EmptyMask);
    }
    let field = euclidean_distance_transform(b)?;
    Ok(a.labels()
        .iter()
        .zip(field.squared())
        .filter(|(&l, _)| l != 0)
        .map(|(_, &d)| d)
        .max()
        .unwrap_or(0))
}

/// Symmetric squared Hausdorff distance; exact integer.
pub fn hausdorff_squared(a: &LabelGrid, b: &LabelGrid) -> Result<u64, MetricError> {
    check_dims(a, b)?;
    if a.foreground_count() == 0 || b.foreground_count() == 0 {
        return Err(MetricError::EmptyMask);
    }
    Ok(directed_hausdorff_squared(a, b)?.max(directed_hausdorff_squared(b, a)?))
}

/// Symmetric Hausdorff distance in voxel units.
pub fn hausdorff(a: &LabelGrid, b: &LabelGrid) -> Result<f64, MetricError> {
    Ok((hausdorff_squared(a, b)? as f64).sqrt())
}

/// Foreground voxel count × voxel volume, in mm³.
pub fn physical_volume(mask: &LabelGrid, spacing: Spacing) -> f64 {
    mask.foreground_count() as f64 * spacing.voxel_volume()
}

/// All four assessment measures for one mask pair.
pub fn compare(a: &LabelGrid, b: &LabelGrid, elapsed_seconds: f64) -> Result<CaseMetrics, MetricError> {
    let dsc = dice(a, b)?;
    let hd = hausdorff(a, b)?;
    Ok(CaseMetrics {
        dsc,
        hd,
        volume_a_mm3: physical_volume(a, a.spacing()),
        volume_b_mm3: physical_volume(b, b.spacing()),
        voxels_a: a.foreground_count() as u64,
        voxels_b: b.foreground_count() as u64,
        elapsed_seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(dims: Dims, on: &[[usize; 3]]) -> LabelGrid {
        let mut m = LabelGrid::zeros(dims, Spacing::UNIT).unwrap();
        for &[x, y, z] in on {
            m.set(x, y, z, 1);
        }
        m
    }

    #[test]
    fn dice_known_values() {
        let d = Dims::new(4, 2, 1);
        let a = mask(d, &[[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0]]);
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
        let b = mask(d, &[[0, 1, 0], [1, 1, 0], [2, 1, 0], [3, 1, 0]]);
        assert_eq!(dice(&a, &b).unwrap(), 0.0);
        let c = mask(d, &[[0, 0, 0], [1, 0, 0], [2, 1, 0], [3, 1, 0]]);
        assert_eq!(dice(&a, &c).unwrap(), 0.5);
    }

    #[test]
    fn dice_errors() {
        let e = LabelGrid::zeros(Dims::new(2, 2, 2), Spacing::UNIT).unwrap();
        assert_eq!(dice(&e, &e), Err(MetricError::BothEmpty));
        let other = LabelGrid::zeros(Dims::new(2, 2, 3), Spacing::UNIT).unwrap();
        assert!(matches!(dice(&e, &other), Err(MetricError::DimsMismatch(..))));
    }

    #[test]
    fn edt_single_voxel() {
        let m = mask(Dims::new(4, 4, 2), &[[0, 0, 0]]);
        let f = euclidean_distance_transform(&m).unwrap();
        assert_eq!(f.distance(0, 0, 0), 0.0);
        assert_eq!(f.squared()[Dims::new(4, 4, 2).index(1, 3, 0)], 10);
        assert!((f.distance(1, 3, 0) - 10f64.sqrt()).abs() < 1e-12);
        assert_eq!(f.squared()[Dims::new(4, 4, 2).index(3, 3, 1)], 19);
    }

    #[test]
    fn edt_empty_mask() {
        let e = LabelGrid::zeros(Dims::new(2, 2, 2), Spacing::UNIT).unwrap();
        assert_eq!(euclidean_distance_transform(&e), Err(MetricError::EmptyMask));
    }

    #[test]
    fn hausdorff_known_values() {
        let d = Dims::new(6, 4, 1);
        let a = mask(d, &[[0, 0, 0], [5, 0, 0]]);
        let b = mask(d, &[[0, 0, 0]]);
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        assert_eq!(directed_hausdorff_squared(&a, &b).unwrap(), 25);
        assert_eq!(directed_hausdorff_squared(&b, &a).unwrap(), 0);
        assert_eq!(hausdorff(&a, &b).unwrap(), 5.0);

        let p = mask(d, &[[0, 0, 0]]);
        let q = mask(d, &[[1, 3, 0]]);
        assert!((hausdorff(&p, &q).unwrap() - 3.1623).abs() < 1e-4);
    }

    #[test]
    fn hausdorff_needs_both_masks() {
        let d = Dims::new(2, 2, 2);
        let a = mask(d, &[[0, 0, 0]]);
        let e = LabelGrid::zeros(d, Spacing::UNIT).unwrap();
        assert_eq!(hausdorff(&a, &e), Err(MetricError::EmptyMask));
    }

    #[test]
    fn volume_uses_spacing() {
        let m = LabelGrid::new(Dims::new(10, 10, 10), Spacing([0.25, 0.25, 1.0]), vec![1; 1000]).unwrap();
        assert_eq!(physical_volume(&m, m.spacing()), 62.5);
        let e = LabelGrid::zeros(Dims::new(2, 2, 2), Spacing::UNIT).unwrap();
        assert_eq!(physical_volume(&e, e.spacing()), 0.0);
    }

    #[test]
    fn compare_identical() {
        let m = mask(Dims::new(3, 3, 3), &[[1, 1, 1], [2, 2, 2]]);
        let c = compare(&m, &m, 0.5).unwrap();
        assert_eq!((c.dsc, c.hd, c.voxels_a, c.voxels_b), (1.0, 0.0, 2, 2));
    }
}
