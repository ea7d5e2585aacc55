//! Nearest-neighbour regridding keeps ellipsoid volumes close to the original.

use dscbias_core::phantom::{rasterize_ellipsoid, solve_semiaxes};
use dscbias_core::volume::{extract_binary_mask, mask_volume_cm3, resample_nearest};
use dscbias_core::{Dims, LabelVolume, Spacing};

fn ellipsoid_volume(volume_cm3: f64, ratios: [f64; 3], spacing: [f64; 3]) -> LabelVolume {
    let semi = solve_semiaxes(volume_cm3, ratios);
    let dims: [usize; 3] = std::array::from_fn(|a| ((2.0 * semi[a] + 12.0) / spacing[a]).ceil() as usize);
    let center: [f64; 3] = std::array::from_fn(|a| dims[a] as f64 * spacing[a] / 2.0);
    let dims = Dims::new(dims[0], dims[1], dims[2]).unwrap();
    let spacing = Spacing::new(spacing[0], spacing[1], spacing[2]).unwrap();
    let mask = rasterize_ellipsoid(center, semi, dims, spacing).unwrap();
    let voxels = mask.bits().iter().map(|&b| u16::from(b)).collect();
    LabelVolume::new(dims, spacing, voxels).unwrap()
}

#[test]
fn resampled_volume_within_fifteen_percent() {
    let cases = [
        (50.0, [1.0, 1.0, 1.0], [0.8, 0.8, 2.5]),
        (80.0, [1.6, 0.8, 1.0], [0.7, 0.7, 3.0]),
        (200.0, [1.0, 0.5, 0.4], [1.5, 1.5, 1.5]),
        (600.0, [1.0, 0.8, 1.0], [0.9, 0.9, 5.0]),
    ];
    let target = Spacing::isotropic(1.0).unwrap();
    for (cm3, ratios, spacing) in cases {
        let native = ellipsoid_volume(cm3, ratios, spacing);
        let before = mask_volume_cm3(&extract_binary_mask(&native, 1)).0;
        let after = mask_volume_cm3(&extract_binary_mask(&resample_nearest(&native, target), 1)).0;
        let change = (after - before).abs() / before;
        assert!(change <= 0.15, "{cm3} cm3 at {spacing:?}: {before:.2} -> {after:.2}");
    }
}

#[test]
fn identity_resampling_is_exact() {
    let native = ellipsoid_volume(60.0, [1.0, 0.7, 1.3], [1.0, 1.0, 1.0]);
    assert_eq!(resample_nearest(&native, native.spacing()), native);
}
