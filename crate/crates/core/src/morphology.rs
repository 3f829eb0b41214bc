//! Disk structuring element and binary dilation.

use crate::masks::BinaryMask;

/// Default dilation radius used before compactness scoring.
pub const DEFAULT_DILATE_RADIUS: u32 = 6;

/// Set of `(drow, dcol)` offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuringElement {
    offsets: Vec<(isize, isize)>,
}

impl StructuringElement {
    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

/// Euclidean disk: all offsets with `dr² + dc² ≤ radius²`.
pub fn disk(radius: u32) -> StructuringElement {
    let r = radius as isize;
    let r2 = r * r;
    let mut offsets = Vec::new();
    for dr in -r..=r {
        for dc in -r..=r {
            if dr * dr + dc * dc <= r2 {
                offsets.push((dr, dc));
            }
        }
    }
    StructuringElement { offsets }
}

/// Binary dilation, clipped to the canvas.
///
/// Output pixel `(r, c)` is set iff some offset `(dr, dc)` has
/// `(r - dr, c - dc)` set in the input.
pub fn dilate(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let (w, h) = (mask.width() as isize, mask.height() as isize);
    let mut out = BinaryMask::empty(mask.width(), mask.height());
    for (r, c) in mask.members() {
        let (r, c) = (r as isize, c as isize);
        for &(dr, dc) in se.offsets() {
            let (rr, cc) = (r + dr, c + dc);
            if rr >= 0 && cc >= 0 && rr < h && cc < w {
                out.set(rr as usize, cc as usize, true);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Per-output-pixel oracle, independent of the scatter loop above.
    fn dilate_brute(m: &BinaryMask, se: &StructuringElement) -> BinaryMask {
        BinaryMask::from_fn(m.width(), m.height(), |r, c| {
            se.offsets()
                .iter()
                .any(|&(dr, dc)| m.get_signed(r as isize - dr, c as isize - dc))
        })
    }

    #[test]
    fn disk_sizes() {
        assert_eq!(disk(0).offsets(), &[(0, 0)]);
        let d1 = disk(1);
        assert_eq!(d1.len(), 5);
        for o in [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)] {
            assert!(d1.offsets().contains(&o));
        }
        assert_eq!(disk(2).len(), 13);
        // radius 6: lattice points in a disk of radius 6
        assert_eq!(disk(6).len(), 113);
    }

    #[test]
    fn disk_is_point_symmetric() {
        for r in 0..8 {
            let d = disk(r);
            assert!(d.offsets().contains(&(0, 0)));
            for &(dr, dc) in d.offsets() {
                assert!(d.offsets().contains(&(-dr, -dc)));
            }
        }
    }

    #[test]
    fn dilate_empty() {
        let m = BinaryMask::empty(5, 5);
        assert!(dilate(&m, &disk(3)).is_empty());
    }

    #[test]
    fn dilate_single_pixel_plus() {
        let mut m = BinaryMask::empty(5, 5);
        m.set(2, 2, true);
        let out = dilate(&m, &disk(1));
        assert_eq!(out.area(), 5);
        for (r, c) in [(2, 2), (1, 2), (3, 2), (2, 1), (2, 3)] {
            assert!(out.get(r, c));
        }
    }

    #[test]
    fn dilate_clips_at_corner() {
        let mut m = BinaryMask::empty(4, 4);
        m.set(0, 0, true);
        assert_eq!(dilate(&m, &disk(1)).area(), 3);
    }

    fn mask_strategy(w: usize, h: usize) -> impl Strategy<Value = BinaryMask> {
        proptest::collection::vec(prop::bool::weighted(0.15), w * h)
            .prop_map(move |bits| BinaryMask::from_bits(w, h, bits).unwrap())
    }

    proptest! {
        #[test]
        fn disk_zero_is_identity(m in mask_strategy(9, 7)) {
            prop_assert_eq!(dilate(&m, &disk(0)), m);
        }

        #[test]
        fn matches_brute_force(m in mask_strategy(16, 16), r in 0u32..5) {
            let se = disk(r);
            prop_assert_eq!(dilate(&m, &se), dilate_brute(&m, &se));
        }

        #[test]
        fn extensive_and_monotone(a in mask_strategy(12, 10), extra in mask_strategy(12, 10), r in 0u32..4) {
            let se = disk(r);
            let b = a.union(&extra).unwrap();
            let da = dilate(&a, &se);
            prop_assert!(a.is_subset_of(&da).unwrap());
            prop_assert!(da.is_subset_of(&dilate(&b, &se)).unwrap());
        }
    }
}
