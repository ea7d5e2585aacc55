//! Fixtures shared by the benchmarks.

use dscbias_core::{BinaryMask, Dims, Spacing};

/// Cube of side `n` at 1 mm holding a centered ball of `radius` voxels.
pub fn centered_ball(n: usize, radius: f64) -> BinaryMask {
    let dims = Dims::new(n, n, n).expect("non-zero side");
    let mut mask = BinaryMask::empty(dims, Spacing::isotropic(1.0).expect("positive spacing"));
    let c = (n as f64 - 1.0) / 2.0;
    let r2 = radius * radius;
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let d2 = (x as f64 - c).powi(2) + (y as f64 - c).powi(2) + (z as f64 - c).powi(2);
                if d2 <= r2 {
                    mask.set(x, y, z, true);
                }
            }
        }
    }
    mask
}
