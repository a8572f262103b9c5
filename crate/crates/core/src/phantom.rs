//! Synthetic CT phantoms with known ground truth.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::growcut::{SeedLabel, Stroke, StrokeSet};
use crate::volume::{Dims, LabelGrid, Plane, Spacing, VolumeGrid};

/// Two-intensity phantom together with its exact foreground mask.
#[derive(Debug, Clone)]
pub struct Phantom {
    pub volume: VolumeGrid,
    pub truth: LabelGrid,
}

fn two_region(
    dims: Dims,
    spacing: Spacing,
    inside_hu: i16,
    outside_hu: i16,
    inside: impl Fn(usize, usize, usize) -> bool,
) -> Phantom {
    let truth = LabelGrid::from_fn(dims, spacing, &inside).expect("valid phantom dims");
    let samples = truth
        .labels()
        .iter()
        .map(|&l| if l == 1 { inside_hu } else { outside_hu })
        .collect();
    let volume = VolumeGrid::new(dims, spacing, samples).expect("valid phantom dims");
    Phantom { volume, truth }
}

/// Voxel centers with `|p − center|² ≤ radius²`.
pub fn sphere(
    dims: Dims,
    center: [f64; 3],
    radius: f64,
    inside_hu: i16,
    outside_hu: i16,
) -> Phantom {
    let r2 = radius * radius;
    two_region(dims, Spacing::UNIT, inside_hu, outside_hu, |x, y, z| {
        let d = [x as f64 - center[0], y as f64 - center[1], z as f64 - center[2]];
        d[0] * d[0] + d[1] * d[1] + d[2] * d[2] <= r2
    })
}

/// Axis-aligned box `[lo, hi)` per axis.
pub fn block(dims: Dims, lo: [usize; 3], hi: [usize; 3], inside_hu: i16, outside_hu: i16) -> Phantom {
    two_region(dims, Spacing::UNIT, inside_hu, outside_hu, |x, y, z| {
        (lo[0]..hi[0]).contains(&x) && (lo[1]..hi[1]).contains(&y) && (lo[2]..hi[2]).contains(&z)
    })
}

/// Foreground is the first `count` voxels in storage order. Useful for
/// building masks with an exact voxel count.
pub fn prefix(dims: Dims, spacing: Spacing, count: usize, inside_hu: i16, outside_hu: i16) -> Phantom {
    two_region(dims, spacing, inside_hu, outside_hu, |x, y, z| dims.index(x, y, z) < count)
}

/// Mandible-like horseshoe: a tube of radius `tube` around a half circle
/// of radius `arch` in each axial slice between `z_range`.
pub fn horseshoe(dims: Dims, spacing: Spacing, arch: f64, tube: f64, z_range: (usize, usize)) -> Phantom {
    let cx = dims.nx() as f64 / 2.0;
    let cy = dims.ny() as f64 * 0.3;
    two_region(dims, spacing, 900, 40, |x, y, z| {
        if z < z_range.0 || z >= z_range.1 {
            return false;
        }
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        if dy < 0.0 {
            // Beyond the arch ends: round caps.
            let ends = [(-arch, 0.0), (arch, 0.0)];
            return ends
                .iter()
                .any(|(ex, ey)| (dx - ex).powi(2) + (dy - ey).powi(2) <= tube * tube);
        }
        let r = (dx * dx + dy * dy).sqrt();
        (r - arch).abs() <= tube
    })
}

/// Adds zero-mean Gaussian noise, saturating at the i16 range.
pub fn add_gaussian_noise(volume: &VolumeGrid, sigma: f64, seed: u64) -> VolumeGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    let samples = volume
        .samples()
        .iter()
        .map(|&v| {
            let noisy = f64::from(v) + normal.sample(&mut rng);
            noisy.round().clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16
        })
        .collect();
    VolumeGrid::new(volume.dims(), volume.spacing(), samples).expect("same dims")
}

fn disk_pixels(cu: f64, cv: f64, r_lo: f64, r_hi: f64, width: usize, height: usize) -> Vec<[i64; 2]> {
    let mut out = Vec::new();
    for v in 0..height {
        for u in 0..width {
            let d2 = (u as f64 - cu).powi(2) + (v as f64 - cv).powi(2);
            if d2 >= r_lo * r_lo && d2 <= r_hi * r_hi {
                out.push([u as i64, v as i64]);
            }
        }
    }
    out
}

/// Operator-style seeding of a sphere: a foreground disk inside it and a
/// background ring around it on the central axial, sagittal and coronal
/// slices.
pub fn sphere_strokes(dims: Dims, center: [f64; 3], radius: f64) -> StrokeSet {
    let mut strokes = Vec::new();
    for plane in Plane::ALL {
        let (width, height) = plane.slice_size(dims);
        let (index, cu, cv) = match plane {
            Plane::Axial => (center[2], center[0], center[1]),
            Plane::Sagittal => (center[0], center[1], center[2]),
            Plane::Coronal => (center[1], center[0], center[2]),
        };
        let index = index.round() as usize;
        strokes.push(Stroke {
            plane,
            index,
            label: SeedLabel::Foreground,
            pixels: disk_pixels(cu, cv, 0.0, (radius - 3.0).max(0.0), width, height),
        });
        strokes.push(Stroke {
            plane,
            index,
            label: SeedLabel::Background,
            pixels: disk_pixels(cu, cv, radius + 3.0, radius + 4.0, width, height),
        });
    }
    StrokeSet { strokes }
}
