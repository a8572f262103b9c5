//! In-memory voxel grids and 2D slice views.
//!
//! All grids store samples x-fastest, then y, then z, so voxel `(x, y, z)`
//! lives at linear index `x + nx * (y + ny * z)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid dimensions must be positive, got {0:?}")]
    ZeroDimension([usize; 3]),
    #[error("voxel spacing must be finite and positive, got {0:?}")]
    NonPositiveSpacing([f64; 3]),
    #[error("expected {expected} samples for the given dimensions, got {actual}")]
    SampleCountMismatch { expected: usize, actual: usize },
    #[error("slice index {index} out of range for {plane} plane (extent {extent})")]
    IndexOutOfRange {
        plane: Plane,
        index: usize,
        extent: usize,
    },
    #[error("window must be positive, got {0}")]
    NonPositiveWindow(f64),
}

/// Voxel counts along x, y and z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dims(pub [usize; 3]);

impl Dims {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Dims([nx, ny, nz])
    }

    pub fn nx(&self) -> usize {
        self.0[0]
    }

    pub fn ny(&self) -> usize {
        self.0[1]
    }

    pub fn nz(&self) -> usize {
        self.0[2]
    }

    pub fn len(&self) -> usize {
        self.0[0] * self.0[1] * self.0[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.0[0] * (y + self.0[1] * z)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let nx = self.0[0];
        let ny = self.0[1];
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    pub fn contains(&self, x: usize, y: usize, z: usize) -> bool {
        x < self.0[0] && y < self.0[1] && z < self.0[2]
    }

    fn validate(&self) -> Result<(), GridError> {
        if self.0.iter().any(|&n| n == 0) {
            return Err(GridError::ZeroDimension(self.0));
        }
        Ok(())
    }
}

/// Physical voxel size in millimeters along x, y and z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Spacing(pub [f64; 3]);

impl Spacing {
    pub const UNIT: Spacing = Spacing([1.0, 1.0, 1.0]);

    /// Volume of a single voxel in mm³.
    pub fn voxel_volume(&self) -> f64 {
        self.0[0] * self.0[1] * self.0[2]
    }

    fn validate(&self) -> Result<(), GridError> {
        if self.0.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(GridError::NonPositiveSpacing(self.0));
        }
        Ok(())
    }
}

/// CT intensities in Hounsfield units.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeGrid {
    dims: Dims,
    spacing: Spacing,
    samples: Vec<i16>,
}

impl VolumeGrid {
    pub fn new(dims: Dims, spacing: Spacing, samples: Vec<i16>) -> Result<Self, GridError> {
        dims.validate()?;
        spacing.validate()?;
        if samples.len() != dims.len() {
            return Err(GridError::SampleCountMismatch {
                expected: dims.len(),
                actual: samples.len(),
            });
        }
        Ok(VolumeGrid {
            dims,
            spacing,
            samples,
        })
    }

    /// Builds a grid by evaluating `f(x, y, z)` at every voxel.
    pub fn from_fn(
        dims: Dims,
        spacing: Spacing,
        mut f: impl FnMut(usize, usize, usize) -> i16,
    ) -> Result<Self, GridError> {
        let mut samples = Vec::with_capacity(dims.len());
        for z in 0..dims.nz() {
            for y in 0..dims.ny() {
                for x in 0..dims.nx() {
                    samples.push(f(x, y, z));
                }
            }
        }
        Self::new(dims, spacing, samples)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn samples(&self) -> &[i16] {
        &self.samples
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> i16 {
        self.samples[self.dims.index(x, y, z)]
    }

    /// Minimum and maximum intensity.
    pub fn range(&self) -> (i16, i16) {
        self.samples
            .iter()
            .fold((i16::MAX, i16::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn slice(&self, plane: Plane, index: usize) -> Result<SliceImage<i16>, GridError> {
        extract_slice(self.dims, &self.samples, plane, index)
    }
}

/// Integer labels; binary masks use `{0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelGrid {
    dims: Dims,
    spacing: Spacing,
    labels: Vec<u8>,
}

impl LabelGrid {
    pub fn new(dims: Dims, spacing: Spacing, labels: Vec<u8>) -> Result<Self, GridError> {
        dims.validate()?;
        spacing.validate()?;
        if labels.len() != dims.len() {
            return Err(GridError::SampleCountMismatch {
                expected: dims.len(),
                actual: labels.len(),
            });
        }
        Ok(LabelGrid {
            dims,
            spacing,
            labels,
        })
    }

    pub fn zeros(dims: Dims, spacing: Spacing) -> Result<Self, GridError> {
        Self::new(dims, spacing, vec![0; dims.len()])
    }

    pub fn from_fn(
        dims: Dims,
        spacing: Spacing,
        mut f: impl FnMut(usize, usize, usize) -> bool,
    ) -> Result<Self, GridError> {
        let mut labels = Vec::with_capacity(dims.len());
        for z in 0..dims.nz() {
            for y in 0..dims.ny() {
                for x in 0..dims.nx() {
                    labels.push(u8::from(f(x, y, z)));
                }
            }
        }
        Self::new(dims, spacing, labels)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [u8] {
        &mut self.labels
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> u8 {
        self.labels[self.dims.index(x, y, z)]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, value: u8) {
        let i = self.dims.index(x, y, z);
        self.labels[i] = value;
    }

    /// Number of non-zero voxels.
    pub fn foreground_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l != 0).count()
    }

    pub fn is_binary(&self) -> bool {
        self.labels.iter().all(|&l| l <= 1)
    }

    pub fn slice(&self, plane: Plane, index: usize) -> Result<SliceImage<u8>, GridError> {
        extract_slice(self.dims, &self.labels, plane, index)
    }
}

/// Orthogonal viewing plane, named by its normal axis: axial ⟂ z,
/// sagittal ⟂ x, coronal ⟂ y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    Axial,
    Sagittal,
    Coronal,
}

impl Plane {
    pub const ALL: [Plane; 3] = [Plane::Axial, Plane::Sagittal, Plane::Coronal];

    /// Number of slices along the plane normal.
    pub fn extent(self, dims: Dims) -> usize {
        match self {
            Plane::Axial => dims.nz(),
            Plane::Sagittal => dims.nx(),
            Plane::Coronal => dims.ny(),
        }
    }

    /// In-plane (width, height).
    pub fn slice_size(self, dims: Dims) -> (usize, usize) {
        match self {
            Plane::Axial => (dims.nx(), dims.ny()),
            Plane::Sagittal => (dims.ny(), dims.nz()),
            Plane::Coronal => (dims.nx(), dims.nz()),
        }
    }

    /// Maps in-plane pixel `(u, v)` on slice `index` to a voxel coordinate.
    pub fn voxel(self, index: usize, u: usize, v: usize) -> [usize; 3] {
        match self {
            Plane::Axial => [u, v, index],
            Plane::Sagittal => [index, u, v],
            Plane::Coronal => [u, index, v],
        }
    }
}

impl std::fmt::Display for Plane {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Plane::Axial => "axial",
            Plane::Sagittal => "sagittal",
            Plane::Coronal => "coronal",
        })
    }
}

impl std::str::FromStr for Plane {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "axial" => Ok(Plane::Axial),
            "sagittal" => Ok(Plane::Sagittal),
            "coronal" => Ok(Plane::Coronal),
            other => Err(format!("unknown plane '{other}'")),
        }
    }
}

/// A 2D cut through a grid. Sample `(u, v)` is at `u + width * v`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceImage<T> {
    pub plane: Plane,
    pub index: usize,
    pub width: usize,
    pub height: usize,
    pub samples: Vec<T>,
}

impl<T: Copy> SliceImage<T> {
    pub fn get(&self, u: usize, v: usize) -> T {
        self.samples[u + self.width * v]
    }
}

pub fn extract_slice<T: Copy>(
    dims: Dims,
    data: &[T],
    plane: Plane,
    index: usize,
) -> Result<SliceImage<T>, GridError> {
    let extent = plane.extent(dims);
    if index >= extent {
        return Err(GridError::IndexOutOfRange {
            plane,
            index,
            extent,
        });
    }
    let (width, height) = plane.slice_size(dims);
    let samples = if plane == Plane::Axial {
        let start = dims.index(0, 0, index);
        data[start..start + width * height].to_vec()
    } else {
        let mut out = Vec::with_capacity(width * height);
        for v in 0..height {
            for u in 0..width {
                let [x, y, z] = plane.voxel(index, u, v);
                out.push(data[dims.index(x, y, z)]);
            }
        }
        out
    };
    Ok(SliceImage {
        plane,
        index,
        width,
        height,
        samples,
    })
}

/// Linear display mapping of HU values to 8-bit gray, rounding half up.
pub fn window_level(
    slice: &SliceImage<i16>,
    window: f64,
    level: f64,
) -> Result<SliceImage<u8>, GridError> {
    if !(window > 0.0) {
        return Err(GridError::NonPositiveWindow(window));
    }
    let low = level - window / 2.0;
    let samples = slice
        .samples
        .iter()
        .map(|&v| map_gray(f64::from(v), low, window))
        .collect();
    Ok(SliceImage {
        plane: slice.plane,
        index: slice.index,
        width: slice.width,
        height: slice.height,
        samples,
    })
}

#[inline]
fn map_gray(value: f64, low: f64, window: f64) -> u8 {
    let t = ((value - low) / window).clamp(0.0, 1.0);
    (255.0 * t + 0.5).floor() as u8
}
