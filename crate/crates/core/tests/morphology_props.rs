//! Set-algebra properties of the margin operators on random masks.

use proptest::prelude::*;

use dscbias_core::morphology::{dilate_clipped, erode, ErrorMargin};
use dscbias_core::{dilate, BinaryMask, Dims, Spacing};

fn mask_strategy() -> impl Strategy<Value = BinaryMask> {
    (1usize..10, 1usize..10, 1usize..10, prop::sample::select(vec![0.5, 1.0, 1.5]), prop::sample::select(vec![0.5, 1.0, 2.0]))
        .prop_flat_map(|(nx, ny, nz, sxy, sz)| {
            prop::collection::vec(any::<bool>(), nx * ny * nz).prop_map(move |bits| {
                BinaryMask::new(Dims::new(nx, ny, nz).unwrap(), Spacing::new(sxy, sxy, sz).unwrap(), bits).unwrap()
            })
        })
}

fn margin() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![0.5, 1.0, 1.25, 2.0, 3.0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn erosion_is_dual_to_dilation(a in mask_strategy(), m in margin()) {
        prop_assume!(!a.is_empty());
        let m = ErrorMargin::new(m).unwrap();
        prop_assert_eq!(erode(&a, m).unwrap(), dilate_clipped(&a.complement(), m).complement());
    }

    #[test]
    fn operators_bracket_the_mask(a in mask_strategy(), m in margin()) {
        prop_assume!(!a.is_empty());
        let m = ErrorMargin::new(m).unwrap();
        prop_assert!(erode(&a, m).unwrap().is_subset_of(&a));
        prop_assert!(a.is_subset_of(&dilate_clipped(&a, m)));
    }

    #[test]
    fn larger_margins_move_further(a in mask_strategy(), m1 in margin(), m2 in margin()) {
        prop_assume!(!a.is_empty());
        let (lo, hi) = (ErrorMargin::new(m1.min(m2)).unwrap(), ErrorMargin::new(m1.max(m2)).unwrap());
        prop_assert!(dilate_clipped(&a, lo).is_subset_of(&dilate_clipped(&a, hi)));
        prop_assert!(erode(&a, hi).unwrap().is_subset_of(&erode(&a, lo).unwrap()));
    }

    #[test]
    fn dilation_without_headroom_is_refused(a in mask_strategy(), m in margin()) {
        let m = ErrorMargin::new(m).unwrap();
        if a.touches_boundary() {
            prop_assert!(dilate(&a, m).is_err());
        }
    }
}

#[test]
fn empty_mask_is_rejected() {
    let empty = BinaryMask::empty(Dims::new(4, 4, 4).unwrap(), Spacing::isotropic(1.0).unwrap());
    let m = ErrorMargin::new(1.0).unwrap();
    assert!(erode(&empty, m).is_err());
    assert!(dilate(&empty, m).is_err());
    assert!(dilate_clipped(&empty, m).is_empty());
}
