//! Voxel grids: labeled volumes, binary masks and the measurements taken on them.
//!
//! All grids store voxels in x-fastest linear order: the voxel at `(x, y, z)`
//! lives at `x + nx * (y + ny * z)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical voxel size in millimeters along x, y and z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spacing([f64; 3]);

impl Spacing {
    pub fn new(sx: f64, sy: f64, sz: f64) -> Result<Self> {
        Self::from_array([sx, sy, sz])
    }

    pub fn from_array(s: [f64; 3]) -> Result<Self> {
        if s.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(Spacing(s))
        } else {
            Err(Error::InvalidSpacing(s))
        }
    }

    pub fn isotropic(mm: f64) -> Result<Self> {
        Self::new(mm, mm, mm)
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    pub fn axis(&self, axis: usize) -> f64 {
        self.0[axis]
    }

    pub fn is_isotropic(&self) -> bool {
        self.0[0] == self.0[1] && self.0[1] == self.0[2]
    }

    /// Voxel volume in mm³.
    pub fn voxel_volume_mm3(&self) -> f64 {
        self.0[0] * self.0[1] * self.0[2]
    }
}

/// Grid extent shared by every voxel container.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims(pub [usize; 3]);

impl Dims {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        let d = [nx, ny, nz];
        if d.contains(&0) {
            return Err(Error::InvalidDims(d));
        }
        d[0].checked_mul(d[1])
            .and_then(|v| v.checked_mul(d[2]))
            .ok_or(Error::InvalidDims(d))?;
        Ok(Dims(d))
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
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let nx = self.0[0];
        let ny = self.0[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }
}

/// Ground-truth annotation volume: one 16-bit label id per voxel, 0 is background.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVolume {
    dims: Dims,
    spacing: Spacing,
    voxels: Vec<u16>,
}

impl LabelVolume {
    pub fn new(dims: Dims, spacing: Spacing, voxels: Vec<u16>) -> Result<Self> {
        if voxels.len() != dims.len() {
            return Err(Error::VoxelCountMismatch {
                expected: dims.len(),
                got: voxels.len(),
            });
        }
        Ok(LabelVolume {
            dims,
            spacing,
            voxels,
        })
    }

    pub fn zeros(dims: Dims, spacing: Spacing) -> Self {
        LabelVolume {
            dims,
            spacing,
            voxels: vec![0; dims.len()],
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn voxels(&self) -> &[u16] {
        &self.voxels
    }

    pub fn voxels_mut(&mut self) -> &mut [u16] {
        &mut self.voxels
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> u16 {
        self.voxels[self.dims.index(x, y, z)]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, label: u16) {
        let i = self.dims.index(x, y, z);
        self.voxels[i] = label;
    }

    /// Sorted set of nonzero label ids present in the volume.
    pub fn labels(&self) -> Vec<u16> {
        let mut seen = vec![false; u16::MAX as usize + 1];
        for &v in &self.voxels {
            seen[v as usize] = true;
        }
        (1..=u16::MAX).filter(|&l| seen[l as usize]).collect()
    }

    pub fn max_label(&self) -> u16 {
        self.voxels.iter().copied().max().unwrap_or(0)
    }
}

/// A single structure's foreground indicator on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    dims: Dims,
    spacing: Spacing,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(dims: Dims, spacing: Spacing, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != dims.len() {
            return Err(Error::VoxelCountMismatch {
                expected: dims.len(),
                got: bits.len(),
            });
        }
        Ok(BinaryMask {
            dims,
            spacing,
            bits,
        })
    }

    pub fn empty(dims: Dims, spacing: Spacing) -> Self {
        BinaryMask {
            dims,
            spacing,
            bits: vec![false; dims.len()],
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.bits[self.dims.index(x, y, z)]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, value: bool) {
        let i = self.dims.index(x, y, z);
        self.bits[i] = value;
    }

    pub fn foreground_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask {
            dims: self.dims,
            spacing: self.spacing,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn same_grid(&self, other: &BinaryMask) -> bool {
        self.dims == other.dims && self.spacing == other.spacing
    }

    /// True when every foreground voxel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Inclusive voxel bounding box `(min, max)` of the foreground, if any.
    pub fn bounding_box(&self) -> Option<([usize; 3], [usize; 3])> {
        let mut lo = [usize::MAX; 3];
        let mut hi = [0usize; 3];
        let mut any = false;
        for (i, _) in self.bits.iter().enumerate().filter(|(_, &b)| b) {
            let c = self.dims.coords(i);
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
            any = true;
        }
        any.then_some((lo, hi))
    }

    /// True when some foreground voxel lies on a face of the grid.
    pub fn touches_boundary(&self) -> bool {
        match self.bounding_box() {
            Some((lo, hi)) => (0..3).any(|a| lo[a] == 0 || hi[a] + 1 == self.dims.0[a]),
            None => false,
        }
    }

    /// Sub-grid `[lo, lo + size)` copied into a new mask.
    pub fn crop(&self, lo: [usize; 3], size: [usize; 3]) -> Result<BinaryMask> {
        let dims = Dims::new(size[0], size[1], size[2])?;
        if (0..3).any(|a| lo[a] + size[a] > self.dims.0[a]) {
            return Err(Error::GridMismatch(format!(
                "crop [{lo:?} + {size:?}] exceeds grid {:?}",
                self.dims.0
            )));
        }
        let mut bits = Vec::with_capacity(dims.len());
        for z in 0..size[2] {
            for y in 0..size[1] {
                let start = self.dims.index(lo[0], lo[1] + y, lo[2] + z);
                bits.extend_from_slice(&self.bits[start..start + size[0]]);
            }
        }
        Ok(BinaryMask {
            dims,
            spacing: self.spacing,
            bits,
        })
    }
}

/// Structure volume in cm³.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct VolumeCm3(pub f64);

/// Dimensionless fraction in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Fraction(f64);

impl Fraction {
    pub fn new(value: f64) -> Option<Self> {
        (0.0..=1.0).contains(&value).then_some(Fraction(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Binary mask of the voxels carrying `label`. An absent label yields an empty mask.
pub fn extract_binary_mask(volume: &LabelVolume, label: u16) -> BinaryMask {
    debug_assert!(label > 0, "label 0 is background");
    BinaryMask {
        dims: volume.dims,
        spacing: volume.spacing,
        bits: volume.voxels.iter().map(|&v| v == label).collect(),
    }
}

/// Nearest-neighbour regridding of a label volume onto `target` spacing.
///
/// Output extent per axis is `max(1, round(n * s / t))`. Output voxel `i'` maps
/// to the continuous input index `(i' + 0.5) * t / s - 0.5`, rounded half up and
/// clamped to the input grid. Label ids are copied, never blended.
pub fn resample_nearest(volume: &LabelVolume, target: Spacing) -> LabelVolume {
    let src = volume.dims.0;
    let s = volume.spacing.as_array();
    let t = target.as_array();
    let mut out = [0usize; 3];
    let mut lookup: [Vec<usize>; 3] = Default::default();
    for a in 0..3 {
        out[a] = ((src[a] as f64 * s[a] / t[a]).round() as usize).max(1);
        let ratio = t[a] / s[a];
        lookup[a] = (0..out[a])
            .map(|i| {
                let c = (i as f64 + 0.5) * ratio - 0.5;
                let nearest = (c + 0.5).floor();
                nearest.clamp(0.0, (src[a] - 1) as f64) as usize
            })
            .collect();
    }
    let dims = Dims(out);
    let mut voxels = Vec::with_capacity(dims.len());
    for &zi in &lookup[2] {
        for &yi in &lookup[1] {
            let row = volume.dims.index(0, yi, zi);
            voxels.extend(lookup[0].iter().map(|&xi| volume.voxels[row + xi]));
        }
    }
    LabelVolume {
        dims,
        spacing: target,
        voxels,
    }
}

pub fn mask_volume_cm3(mask: &BinaryMask) -> VolumeCm3 {
    VolumeCm3(mask.foreground_count() as f64 * mask.spacing.voxel_volume_mm3() / 1000.0)
}

/// Foreground voxels over total voxels.
pub fn positive_fraction(mask: &BinaryMask) -> Fraction {
    Fraction(mask.foreground_count() as f64 / mask.dims.len() as f64)
}

/// Surrounds the mask with `margin_voxels` layers of background on every face.
pub fn pad_background(mask: &BinaryMask, margin_voxels: usize) -> BinaryMask {
    if margin_voxels == 0 {
        return mask.clone();
    }
    let [nx, ny, nz] = mask.dims.0;
    let p = margin_voxels;
    let dims = Dims([nx + 2 * p, ny + 2 * p, nz + 2 * p]);
    let mut bits = vec![false; dims.len()];
    for z in 0..nz {
        for y in 0..ny {
            let src = mask.dims.index(0, y, z);
            let dst = dims.index(p, y + p, z + p);
            bits[dst..dst + nx].copy_from_slice(&mask.bits[src..src + nx]);
        }
    }
    BinaryMask {
        dims,
        spacing: mask.spacing,
        bits,
    }
}

/// Crops the foreground bounding box and pads it with `margin_voxels` of background.
///
/// Returns `None` for an empty mask.
pub fn crop_to_foreground(mask: &BinaryMask, margin_voxels: usize) -> Option<BinaryMask> {
    let (lo, hi) = mask.bounding_box()?;
    let size = [hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1];
    let cropped = mask.crop(lo, size).expect("bounding box lies inside the grid");
    Some(pad_background(&cropped, margin_voxels))
}
