//! GrowCut cellular automaton over a 26-connected voxel grid.
//!
//! Every cell carries a label and a strength θ ∈ [0, 1]. In each
//! generation a labeled neighbor `q` attacks cell `p` with force
//! `g(|C_p − C_q|) · θ_q`, where `g(d) = 1 − d / d_max` and `d_max` is the
//! intensity range of the volume (`g ≡ 1` on constant volumes). The
//! strongest attack wins if it strictly exceeds θ_p; equal attacks resolve
//! to the smallest `(dz, dy, dx)` offset. Updates are synchronous: every
//! cell of a generation reads the previous generation only.
//!
//! [`step`] is the reference full sweep. [`Automaton`] runs the same rule
//! but only re-evaluates cells adjacent to last generation's changes.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::volume::{Dims, LabelGrid, Plane, VolumeGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrowCutError {
    #[error("voxel {0:?} is seeded as both foreground and background")]
    ConflictingSeed([usize; 3]),
    #[error("seed {coords:?} lies outside the volume {dims:?}")]
    OutOfRange { coords: [i64; 3], dims: [usize; 3] },
    #[error("at least one foreground seed is required")]
    EmptyForeground,
    #[error("seed set built for {seeds:?} does not match volume {volume:?}")]
    DimsMismatch { seeds: [usize; 3], volume: [usize; 3] },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedLabel {
    Foreground,
    Background,
}

impl SeedLabel {
    pub fn cell(self) -> u8 {
        match self {
            SeedLabel::Foreground => FOREGROUND,
            SeedLabel::Background => BACKGROUND,
        }
    }
}

pub const UNLABELED: u8 = 0;
pub const FOREGROUND: u8 = 1;
pub const BACKGROUND: u8 = 2;

/// A brush stroke on one slice, in in-plane pixel coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    pub plane: Plane,
    pub index: usize,
    pub label: SeedLabel,
    pub pixels: Vec<[i64; 2]>,
}

/// Wire form of a batch of strokes: `{"strokes": [...]}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StrokeSet {
    pub strokes: Vec<Stroke>,
}

/// Labeled seed voxels. A voxel never carries two labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSet {
    dims: Dims,
    entries: BTreeMap<[usize; 3], SeedLabel>,
}

impl SeedSet {
    pub fn new(dims: Dims) -> Self {
        SeedSet {
            dims,
            entries: BTreeMap::new(),
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn insert(&mut self, coords: [usize; 3], label: SeedLabel) -> Result<(), GrowCutError> {
        let [x, y, z] = coords;
        if !self.dims.contains(x, y, z) {
            return Err(GrowCutError::OutOfRange {
                coords: [x as i64, y as i64, z as i64],
                dims: self.dims.0,
            });
        }
        match self.entries.get(&coords) {
            Some(&existing) if existing != label => Err(GrowCutError::ConflictingSeed(coords)),
            Some(_) => Ok(()),
            None => {
                self.entries.insert(coords, label);
                Ok(())
            }
        }
    }

    /// Adds every seed of `other`; on conflict `self` is left unchanged.
    pub fn merge(&mut self, other: &SeedSet) -> Result<(), GrowCutError> {
        let mut merged = self.clone();
        for (&c, &l) in &other.entries {
            merged.insert(c, l)?;
        }
        *self = merged;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, label: SeedLabel) -> usize {
        self.entries.values().filter(|&&l| l == label).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([usize; 3], SeedLabel)> + '_ {
        self.entries.iter().map(|(&c, &l)| (c, l))
    }

    pub fn get(&self, coords: [usize; 3]) -> Option<SeedLabel> {
        self.entries.get(&coords).copied()
    }
}

/// Maps in-plane stroke pixels onto voxels of their slice.
pub fn strokes_to_seeds(strokes: &[Stroke], dims: Dims) -> Result<SeedSet, GrowCutError> {
    let mut seeds = SeedSet::new(dims);
    for stroke in strokes {
        let (width, height) = stroke.plane.slice_size(dims);
        let extent = stroke.plane.extent(dims);
        for &[u, v] in &stroke.pixels {
            let in_range = stroke.index < extent
                && u >= 0
                && v >= 0
                && (u as usize) < width
                && (v as usize) < height;
            if !in_range {
                let coords = match stroke.plane {
                    Plane::Axial => [u, v, stroke.index as i64],
                    Plane::Sagittal => [stroke.index as i64, u, v],
                    Plane::Coronal => [u, stroke.index as i64, v],
                };
                return Err(GrowCutError::OutOfRange {
                    coords,
                    dims: dims.0,
                });
            }
            let voxel = stroke.plane.voxel(stroke.index, u as usize, v as usize);
            seeds.insert(voxel, stroke.label)?;
        }
    }
    Ok(seeds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GrowCutParams {
    /// Generation cap; `None` means `nx + ny + nz`.
    pub max_iterations: Option<usize>,
}

impl GrowCutParams {
    pub fn with_max_iterations(max_iterations: usize) -> Self {
        GrowCutParams {
            max_iterations: Some(max_iterations.max(1)),
        }
    }

    pub fn resolved_max_iterations(&self, dims: Dims) -> usize {
        self.max_iterations
            .unwrap_or(dims.nx() + dims.ny() + dims.nz())
            .max(1)
    }
}

/// Per-voxel automaton state.
#[derive(Debug, Clone, PartialEq)]
pub struct AutomatonState {
    dims: Dims,
    labels: Vec<u8>,
    strength: Vec<f64>,
    iteration: usize,
}

impl AutomatonState {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn strength(&self) -> &[f64] {
        &self.strength
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Binary mask of foreground cells.
    pub fn foreground_mask(&self, volume: &VolumeGrid) -> LabelGrid {
        let labels = self
            .labels
            .iter()
            .map(|&l| u8::from(l == FOREGROUND))
            .collect();
        LabelGrid::new(self.dims, volume.spacing(), labels).expect("state matches volume dims")
    }
}

pub fn init_state(volume: &VolumeGrid, seeds: &SeedSet) -> Result<AutomatonState, GrowCutError> {
    let dims = volume.dims();
    if seeds.dims() != dims {
        return Err(GrowCutError::DimsMismatch {
            seeds: seeds.dims().0,
            volume: dims.0,
        });
    }
    if seeds.count(SeedLabel::Foreground) == 0 {
        return Err(GrowCutError::EmptyForeground);
    }
    let mut labels = vec![UNLABELED; dims.len()];
    let mut strength = vec![0.0; dims.len()];
    for ([x, y, z], label) in seeds.iter() {
        let i = dims.index(x, y, z);
        labels[i] = label.cell();
        strength[i] = 1.0;
    }
    Ok(AutomatonState {
        dims,
        labels,
        strength,
        iteration: 0,
    })
}

/// Intensity similarity `g(d) = 1 − d / d_max`, tabulated over every
/// difference that occurs in the volume.
#[derive(Debug, Clone)]
struct Similarity {
    table: Vec<f64>,
}

impl Similarity {
    fn for_volume(volume: &VolumeGrid) -> Self {
        let (lo, hi) = volume.range();
        let d_max = i32::from(hi) - i32::from(lo);
        let table = if d_max == 0 {
            vec![1.0]
        } else {
            (0..=d_max).map(|d| 1.0 - f64::from(d) / f64::from(d_max)).collect()
        };
        Similarity { table }
    }

    #[inline]
    fn g(&self, a: i16, b: i16) -> f64 {
        self.table[(i32::from(a) - i32::from(b)).unsigned_abs() as usize]
    }
}

/// Strongest attack on cell `p`, if it beats the cell's own strength.
#[inline]
fn best_attack(
    dims: Dims,
    intensities: &[i16],
    labels: &[u8],
    strength: &[f64],
    sim: &Similarity,
    p: usize,
) -> Option<(u8, f64)> {
    let [x, y, z] = dims.coords(p);
    let (nx, ny, nz) = (dims.nx(), dims.ny(), dims.nz());
    let cp = intensities[p];
    let mut best = strength[p];
    let mut winner = None;
    let interior = x > 0 && y > 0 && z > 0 && x + 1 < nx && y + 1 < ny && z + 1 < nz;
    if interior {
        let (sy, sz) = (nx, nx * ny);
        for dz in [p - sz, p, p + sz] {
            for dy in [dz - sy, dz, dz + sy] {
                // Unlabeled cells have θ = 0 and the cell's own attack is
                // θ_p, so neither can win; no need to skip them.
                for q in [dy - 1, dy, dy + 1] {
                    let attack = sim.g(cp, intensities[q]) * strength[q];
                    if attack > best {
                        best = attack;
                        winner = Some(labels[q]);
                    }
                }
            }
        }
        return winner.map(|l| (l, best));
    }
    // Lexicographic (dz, dy, dx) order; only a strictly stronger attack
    // replaces the current winner, so ties go to the earliest offset.
    for dz in -1i64..=1 {
        let zz = z as i64 + dz;
        if zz < 0 || zz >= nz as i64 {
            continue;
        }
        for dy in -1i64..=1 {
            let yy = y as i64 + dy;
            if yy < 0 || yy >= ny as i64 {
                continue;
            }
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 && dz == 0 {
                    continue;
                }
                let xx = x as i64 + dx;
                if xx < 0 || xx >= nx as i64 {
                    continue;
                }
                let q = dims.index(xx as usize, yy as usize, zz as usize);
                let lq = labels[q];
                if lq == UNLABELED {
                    continue;
                }
                let attack = sim.g(cp, intensities[q]) * strength[q];
                if attack > best {
                    best = attack;
                    winner = Some(lq);
                }
            }
        }
    }
    winner.map(|l| (l, best))
}

/// One synchronous generation over every voxel. Returns the number of
/// cells whose label or strength changed.
pub fn step(state: &mut AutomatonState, volume: &VolumeGrid) -> usize {
    let sim = Similarity::for_volume(volume);
    let dims = state.dims;
    let updates: Vec<(usize, u8, f64)> = (0..dims.len())
        .filter_map(|p| {
            best_attack(
                dims,
                volume.samples(),
                &state.labels,
                &state.strength,
                &sim,
                p,
            )
            .map(|(l, s)| (p, l, s))
        })
        .collect();
    for &(p, l, s) in &updates {
        state.labels[p] = l;
        state.strength[p] = s;
    }
    state.iteration += 1;
    updates.len()
}

/// Result of running the automaton to a fixed point (or the cap).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSummary {
    /// Generations evaluated, including the final no-change generation.
    pub iterations: usize,
    pub converged: bool,
}

/// Active-front GrowCut runner.
pub struct Automaton<'v> {
    volume: &'v VolumeGrid,
    sim: Similarity,
    state: AutomatonState,
    changed: Vec<usize>,
    stamp: Vec<u32>,
    candidates: Vec<usize>,
    updates: Vec<(usize, u8, f64)>,
}

impl<'v> Automaton<'v> {
    pub fn new(volume: &'v VolumeGrid, seeds: &SeedSet) -> Result<Self, GrowCutError> {
        let state = init_state(volume, seeds)?;
        let dims = volume.dims();
        let changed = seeds
            .iter()
            .map(|([x, y, z], _)| dims.index(x, y, z))
            .collect();
        Ok(Automaton {
            volume,
            sim: Similarity::for_volume(volume),
            state,
            changed,
            stamp: vec![0; dims.len()],
            candidates: Vec::new(),
            updates: Vec::new(),
        })
    }

    pub fn state(&self) -> &AutomatonState {
        &self.state
    }

    pub fn into_state(self) -> AutomatonState {
        self.state
    }

    /// One generation, evaluating only neighbors of last generation's
    /// changes. A cell none of whose neighbors changed sees the same
    /// attacks as before, which it has already either adopted or resisted.
    pub fn step(&mut self) -> usize {
        let dims = self.state.dims;
        let generation = self.state.iteration as u32 + 1;
        let (nx, ny, nz) = (dims.nx() as i64, dims.ny() as i64, dims.nz() as i64);

        self.candidates.clear();
        for &c in &self.changed {
            let [x, y, z] = dims.coords(c);
            for dz in -1i64..=1 {
                let zz = z as i64 + dz;
                if zz < 0 || zz >= nz {
                    continue;
                }
                for dy in -1i64..=1 {
                    let yy = y as i64 + dy;
                    if yy < 0 || yy >= ny {
                        continue;
                    }
                    for dx in -1i64..=1 {
                        let xx = x as i64 + dx;
                        if xx < 0 || xx >= nx || (dx == 0 && dy == 0 && dz == 0) {
                            continue;
                        }
                        let q = dims.index(xx as usize, yy as usize, zz as usize);
                        if self.stamp[q] != generation {
                            self.stamp[q] = generation;
                            self.candidates.push(q);
                        }
                    }
                }
            }
        }

        self.updates.clear();
        let samples = self.volume.samples();
        for &p in &self.candidates {
            if let Some((l, s)) = best_attack(
                dims,
                samples,
                &self.state.labels,
                &self.state.strength,
                &self.sim,
                p,
            ) {
                self.updates.push((p, l, s));
            }
        }

        self.changed.clear();
        for &(p, l, s) in &self.updates {
            self.state.labels[p] = l;
            self.state.strength[p] = s;
            self.changed.push(p);
        }
        self.state.iteration += 1;
        self.updates.len()
    }

    /// Steps until a generation changes nothing or `max_iterations`
    /// generations have run.
    pub fn run(&mut self, max_iterations: usize) -> RunSummary {
        let mut iterations = 0;
        while iterations < max_iterations {
            iterations += 1;
            if self.step() == 0 {
                return RunSummary {
                    iterations,
                    converged: true,
                };
            }
        }
        RunSummary {
            iterations,
            converged: false,
        }
    }
}

/// Output of [`segment`].
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub mask: LabelGrid,
    pub iterations: usize,
    pub converged: bool,
    pub elapsed_seconds: f64,
}

/// Runs GrowCut without timing; usable where no monotonic clock exists.
pub fn grow(
    volume: &VolumeGrid,
    seeds: &SeedSet,
    params: &GrowCutParams,
) -> Result<(AutomatonState, RunSummary), GrowCutError> {
    let mut automaton = Automaton::new(volume, seeds)?;
    let summary = automaton.run(params.resolved_max_iterations(volume.dims()));
    Ok((automaton.into_state(), summary))
}

/// Seeds, runs to convergence and returns the binary foreground mask.
/// Hitting the iteration cap is not an error: the mask is returned with
/// `converged == false`.
pub fn segment(
    volume: &VolumeGrid,
    seeds: &SeedSet,
    params: &GrowCutParams,
) -> Result<Segmentation, GrowCutError> {
    let started = Instant::now();
    let (state, summary) = grow(volume, seeds, params)?;
    let mask = state.foreground_mask(volume);
    Ok(Segmentation {
        mask,
        iterations: summary.iterations,
        converged: summary.converged,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    })
}
