//! Binary dilation and erosion by an exact Euclidean ball.
//!
//! The structuring element is the set of voxel-center offsets whose physical
//! length is at most the margin (inclusive). Both operations threshold a squared
//! distance transform, so their cost does not depend on the margin. At 1 mm
//! isotropic spacing every squared distance is an integer and the threshold
//! test is exact.

mod edt;

use crate::error::{Error, Result};
use crate::volume::{BinaryMask, Dims, Spacing};

/// Radius of a uniform boundary error, in millimeters.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ErrorMargin(f64);

impl ErrorMargin {
    pub fn new(mm: f64) -> Result<Self> {
        if mm.is_finite() && mm > 0.0 {
            Ok(ErrorMargin(mm))
        } else {
            Err(Error::InvalidMargin(mm))
        }
    }

    pub fn mm(self) -> f64 {
        self.0
    }

    /// Voxels of background needed on each side so growth is never clipped.
    pub fn headroom_voxels(self, spacing: Spacing) -> [usize; 3] {
        let s = spacing.as_array();
        [0, 1, 2].map(|a| (self.0 / s[a]).ceil() as usize)
    }
}

/// Squared distance (mm²) from every voxel center to the nearest seed center.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    dims: Dims,
    spacing: Spacing,
    d2: Vec<f64>,
}

impl DistanceField {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.d2
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.d2[self.dims.index(x, y, z)]
    }
}

/// Exact squared Euclidean distance transform, linear in the voxel count.
pub fn squared_edt(seeds: &BinaryMask) -> Result<DistanceField> {
    if seeds.is_empty() {
        return Err(Error::EmptySeeds);
    }
    Ok(unchecked_edt(seeds))
}

fn unchecked_edt(seeds: &BinaryMask) -> DistanceField {
    let mut d2: Vec<f64> = seeds
        .bits()
        .iter()
        .map(|&b| if b { 0.0 } else { f64::INFINITY })
        .collect();
    edt::transform(&mut d2, seeds.dims().0, seeds.spacing().as_array());
    DistanceField {
        dims: seeds.dims(),
        spacing: seeds.spacing(),
        d2,
    }
}

/// Dilates `mask` by the Euclidean ball of radius `margin`.
///
/// The foreground must keep at least `ceil(margin / spacing)` background voxels
/// to every face of the grid, otherwise growth would be silently clipped.
pub fn dilate(mask: &BinaryMask, margin: ErrorMargin) -> Result<BinaryMask> {
    let (lo, hi) = mask.bounding_box().ok_or(Error::EmptyMask)?;
    let needed = margin.headroom_voxels(mask.spacing());
    let n = mask.dims().0;
    if (0..3).any(|a| lo[a] < needed[a] || hi[a] + needed[a] >= n[a]) {
        return Err(Error::InsufficientHeadroom {
            margin_mm: margin.mm(),
            needed,
        });
    }
    Ok(dilate_clipped(mask, margin))
}

/// Dilation restricted to the grid: growth past a face is discarded.
///
/// Exposed for morphological identities on unpadded domains (e.g. the
/// erosion/dilation duality); the simulation path always uses [`dilate`].
pub fn dilate_clipped(mask: &BinaryMask, margin: ErrorMargin) -> BinaryMask {
    if mask.is_empty() {
        return mask.clone();
    }
    let field = unchecked_edt(mask);
    let r2 = margin.mm() * margin.mm();
    let bits = field.d2.iter().map(|&d| d <= r2).collect();
    BinaryMask::new(mask.dims(), mask.spacing(), bits).expect("same grid")
}

/// Erodes `mask`: keeps foreground voxels farther than `margin` from every
/// background voxel center. The result may be empty.
pub fn erode(mask: &BinaryMask, margin: ErrorMargin) -> Result<BinaryMask> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let background = mask.complement();
    if background.is_empty() {
        return Ok(mask.clone());
    }
    let field = unchecked_edt(&background);
    let r2 = margin.mm() * margin.mm();
    let bits = mask
        .bits()
        .iter()
        .zip(&field.d2)
        .map(|(&fg, &d)| fg && d > r2)
        .collect();
    Ok(BinaryMask::new(mask.dims(), mask.spacing(), bits).expect("same grid"))
}

/// Integer offsets inside the ball of radius `radius_voxels`, in lexicographic
/// `(dx, dy, dz)` order.
pub fn ball_offsets(radius_voxels: f64) -> Vec<[i64; 3]> {
    assert!(radius_voxels > 0.0, "ball radius must be positive");
    let r = radius_voxels.floor() as i64;
    let r2 = radius_voxels * radius_voxels;
    let mut out = Vec::new();
    for dx in -r..=r {
        for dy in -r..=r {
            for dz in -r..=r {
                if ((dx * dx + dy * dy + dz * dz) as f64) <= r2 {
                    out.push([dx, dy, dz]);
                }
            }
        }
    }
    out
}
