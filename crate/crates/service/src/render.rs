//! PNG encoding of slice images and mask overlays.

use segbench_core::growcut::{SeedLabel, SeedSet};
use segbench_core::volume::{window_level, Dims, LabelGrid, Plane, SliceImage, VolumeGrid};

use crate::error::ApiError;

pub const MASK_RGBA: [u8; 4] = [0, 255, 0, 128];
pub const FOREGROUND_SEED_RGBA: [u8; 4] = [0, 255, 0, 255];
pub const BACKGROUND_SEED_RGBA: [u8; 4] = [255, 255, 0, 255];

fn encode(width: usize, height: usize, color: png::ColorType, data: &[u8]) -> Result<Vec<u8>, ApiError> {
    let mut out = Vec::new();
    let mut encoder = png::Encoder::new(&mut out, width as u32, height as u32);
    encoder.set_color(color);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(|e| ApiError::internal(e.to_string()))?;
    writer
        .write_image_data(data)
        .and_then(|_| writer.finish())
        .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(out)
}

pub fn slice_png(volume: &VolumeGrid, plane: Plane, index: usize, window: f64, level: f64) -> Result<Vec<u8>, ApiError> {
    let slice = volume.slice(plane, index).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let gray = window_level(&slice, window, level).map_err(|e| ApiError::bad_request(e.to_string()))?;
    encode(gray.width, gray.height, png::ColorType::Grayscale, &gray.samples)
}

/// Mask in translucent green with seeds drawn opaque on top; everything
/// else transparent.
pub fn overlay_rgba(dims: Dims, mask: Option<&LabelGrid>, seeds: &SeedSet, plane: Plane, index: usize) -> Result<SliceImage<[u8; 4]>, ApiError> {
    let (width, height) = plane.slice_size(dims);
    if index >= plane.extent(dims) {
        return Err(ApiError::bad_request(format!(
            "{plane} slice {index} outside extent {}",
            plane.extent(dims)
        )));
    }
    let mut samples = vec![[0u8; 4]; width * height];
    if let Some(mask) = mask {
        let m = mask.slice(plane, index).map_err(|e| ApiError::bad_request(e.to_string()))?;
        for (px, &l) in samples.iter_mut().zip(&m.samples) {
            if l != 0 {
                *px = MASK_RGBA;
            }
        }
    }
    for (v, u) in (0..height).flat_map(|v| (0..width).map(move |u| (v, u))) {
        if let Some(label) = seeds.get(plane.voxel(index, u, v)) {
            samples[v * width + u] = match label {
                SeedLabel::Foreground => FOREGROUND_SEED_RGBA,
                SeedLabel::Background => BACKGROUND_SEED_RGBA,
            };
        }
    }
    Ok(SliceImage {
        plane,
        index,
        width,
        height,
        samples,
    })
}

pub fn overlay_png(image: &SliceImage<[u8; 4]>) -> Result<Vec<u8>, ApiError> {
    encode(image.width, image.height, png::ColorType::Rgba, image.samples.as_flattened())
}
