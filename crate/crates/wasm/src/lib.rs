//! Browser demo: paint foreground/background strokes on a synthetic CT
//! phantom, run GrowCut, and fill polygons with the contour rasterizer.

use segbench_core::contours::{rasterize_slice, Polygon};
use segbench_core::growcut::{self, GrowCutParams, SeedLabel, SeedSet, FOREGROUND};
use segbench_core::metrics;
use segbench_core::phantom::{self, Phantom};
use segbench_core::volume::{window_level, Dims, LabelGrid, Plane, Spacing};
use serde_json::json;
use wasm_bindgen::prelude::*;

const MASK: [u8; 3] = [0, 255, 0];
const FOREGROUND_SEED: [u8; 3] = [0, 255, 0];
const BACKGROUND_SEED: [u8; 3] = [255, 255, 0];

fn plane(name: &str) -> Result<Plane, String> {
    name.parse().map_err(|_| format!("unknown plane '{name}'"))
}

/// Pixels of a brush of integer radius `r` centred on `(u, v)`:
/// offsets with `dx² + dy² ≤ (r − 0.5)²`.
pub fn brush_disk(u: i64, v: i64, radius: u32) -> Vec<[i64; 2]> {
    let r = i64::from(radius.max(1));
    let limit = (r as f64 - 0.5).powi(2);
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if ((dx * dx + dy * dy) as f64) <= limit {
                out.push([u + dx, v + dy]);
            }
        }
    }
    out
}

#[wasm_bindgen]
pub struct Workbench {
    phantom: Phantom,
    seeds: SeedSet,
    mask: Option<LabelGrid>,
}

impl Workbench {
    pub fn create(kind: &str, size: usize, noise_sigma: f64, seed: u64) -> Result<Workbench, String> {
        if !(16..=256).contains(&size) {
            return Err(format!("size {size} outside 16..=256"));
        }
        let s = size as f64;
        let mut phantom = match kind {
            "horseshoe" => {
                let dims = Dims::new(size, size, size / 2);
                phantom::horseshoe(dims, Spacing([0.5, 0.5, 1.0]), 0.3 * s, 0.07 * s, (size / 8, 3 * size / 8))
            }
            "sphere" => phantom::sphere(Dims::new(size, size, size), [s / 2.0; 3], 0.3 * s, 300, -400),
            other => return Err(format!("unknown phantom '{other}'")),
        };
        if noise_sigma > 0.0 {
            phantom.volume = phantom::add_gaussian_noise(&phantom.volume, noise_sigma, seed);
        }
        let seeds = SeedSet::new(phantom.volume.dims());
        Ok(Workbench {
            phantom,
            seeds,
            mask: None,
        })
    }

    pub fn dims_of(&self) -> Dims {
        self.phantom.volume.dims()
    }

    pub fn seeds(&self) -> &SeedSet {
        &self.seeds
    }

    pub fn truth(&self) -> &LabelGrid {
        &self.phantom.truth
    }

    pub fn mask(&self) -> Option<&LabelGrid> {
        self.mask.as_ref()
    }

    /// Grayscale slice with the result and seeds blended in, as RGBA.
    pub fn render(&self, plane_name: &str, index: usize, window: f64, level: f64) -> Result<Vec<u8>, String> {
        let p = plane(plane_name)?;
        let slice = self.phantom.volume.slice(p, index).map_err(|e| e.to_string())?;
        let gray = window_level(&slice, window, level).map_err(|e| e.to_string())?;
        let mask = match &self.mask {
            Some(m) => Some(m.slice(p, index).map_err(|e| e.to_string())?),
            None => None,
        };
        let mut out = Vec::with_capacity(gray.samples.len() * 4);
        for (k, &g) in gray.samples.iter().enumerate() {
            let (u, v) = (k % gray.width, k / gray.width);
            let mut rgb = [g; 3];
            if mask.as_ref().is_some_and(|m| m.samples[k] != 0) {
                for c in 0..3 {
                    rgb[c] = ((u16::from(rgb[c]) + u16::from(MASK[c])) / 2) as u8;
                }
            }
            match self.seeds.get(p.voxel(index, u, v)) {
                Some(SeedLabel::Foreground) => rgb = FOREGROUND_SEED,
                Some(SeedLabel::Background) => rgb = BACKGROUND_SEED,
                None => {}
            }
            out.extend_from_slice(&[rgb[0], rgb[1], rgb[2], 255]);
        }
        Ok(out)
    }

    /// Seeds the brush disk; pixels outside the slice or already seeded
    /// with the other label are skipped. Returns the number of new seeds.
    pub fn brush(&mut self, plane_name: &str, index: usize, u: i64, v: i64, radius: u32, foreground: bool) -> Result<usize, String> {
        let p = plane(plane_name)?;
        let dims = self.dims_of();
        if index >= p.extent(dims) {
            return Err(format!("slice {index} outside extent {}", p.extent(dims)));
        }
        let (w, h) = p.slice_size(dims);
        let label = if foreground {
            SeedLabel::Foreground
        } else {
            SeedLabel::Background
        };
        let mut added = 0;
        for [x, y] in brush_disk(u, v, radius) {
            if x < 0 || y < 0 || x as usize >= w || y as usize >= h {
                continue;
            }
            let voxel = p.voxel(index, x as usize, y as usize);
            if self.seeds.get(voxel).is_none() && self.seeds.insert(voxel, label).is_ok() {
                added += 1;
            }
        }
        Ok(added)
    }

    pub fn reset(&mut self) {
        self.seeds = SeedSet::new(self.dims_of());
        self.mask = None;
    }

    /// Runs GrowCut and scores the result against the phantom's truth.
    pub fn run(&mut self) -> Result<serde_json::Value, String> {
        let volume = &self.phantom.volume;
        let (state, summary) = growcut::grow(volume, &self.seeds, &GrowCutParams::default()).map_err(|e| e.to_string())?;
        let mask = state.foreground_mask(volume);
        let voxels = state.labels().iter().filter(|&&l| l == FOREGROUND).count();
        let dsc = metrics::dice(&mask, &self.phantom.truth).map_err(|e| e.to_string())?;
        let hd = if voxels > 0 {
            Some(metrics::hausdorff(&mask, &self.phantom.truth).map_err(|e| e.to_string())?)
        } else {
            None
        };
        self.mask = Some(mask);
        Ok(json!({
            "iterations": summary.iterations,
            "converged": summary.converged,
            "voxels": voxels,
            "dice": dsc,
            "hausdorff": hd,
        }))
    }
}

#[wasm_bindgen]
impl Workbench {
    /// `kind` is `"horseshoe"` or `"sphere"`.
    #[wasm_bindgen(constructor)]
    pub fn new(kind: &str, size: usize, noise_sigma: f64, seed: u32) -> Result<Workbench, JsError> {
        Self::create(kind, size, noise_sigma, u64::from(seed)).map_err(|e| JsError::new(&e))
    }

    pub fn dims(&self) -> Vec<u32> {
        self.dims_of().0.iter().map(|&d| d as u32).collect()
    }

    /// `[width, height, extent]` of a plane.
    pub fn plane_shape(&self, plane_name: &str) -> Result<Vec<u32>, JsError> {
        let p = plane(plane_name).map_err(|e| JsError::new(&e))?;
        let (w, h) = p.slice_size(self.dims_of());
        Ok(vec![w as u32, h as u32, p.extent(self.dims_of()) as u32])
    }

    pub fn slice_rgba(&self, plane_name: &str, index: usize, window: f64, level: f64) -> Result<Vec<u8>, JsError> {
        self.render(plane_name, index, window, level).map_err(|e| JsError::new(&e))
    }

    pub fn paint(&mut self, plane_name: &str, index: usize, u: i32, v: i32, radius: u32, foreground: bool) -> Result<usize, JsError> {
        self.brush(plane_name, index, i64::from(u), i64::from(v), radius, foreground)
            .map_err(|e| JsError::new(&e))
    }

    pub fn clear(&mut self) {
        self.reset();
    }

    pub fn seed_count(&self) -> usize {
        self.seeds.len()
    }

    /// JSON: `{iterations, converged, voxels, dice, hausdorff}`.
    pub fn segment(&mut self) -> Result<String, JsError> {
        self.run().map(|v| v.to_string()).map_err(|e| JsError::new(&e))
    }
}

/// Even-odd fill of one polygon given as flat `[x0, y0, x1, y1, ...]`
/// pixel coordinates; returns `width × height` bytes of 0/1.
pub fn fill_polygon(coords: &[f64], width: usize, height: usize) -> Result<Vec<u8>, String> {
    if coords.len() % 2 != 0 {
        return Err("odd number of coordinates".into());
    }
    let poly: Polygon = coords.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
    rasterize_slice(&[poly], width, height).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn rasterize_polygon(coords: &[f64], width: usize, height: usize) -> Result<Vec<u8>, JsError> {
    fill_polygon(coords, width, height).map_err(|e| JsError::new(&e))
}
