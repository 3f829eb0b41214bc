//! Raster geometry on the frame canvas.
//!
//! Every mask has the dimensions of the frame it came from, so masks of
//! different regions line up pixel for pixel. Coordinates are `(row, col)`,
//! zero-based, stored row-major.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(row, col)` pixel coordinate.
pub type Pixel = (usize, usize);

/// An 8-bit grayscale frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl FrameImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "frame {width}x{height} needs {} intensities, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.width + col]
    }
}

/// Pixel coordinates of one extremal region, canonicalized (sorted
/// row-major, duplicates removed).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionCoords {
    points: Vec<Pixel>,
}

impl RegionCoords {
    pub fn new(mut points: Vec<Pixel>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("region has no pixels".into()));
        }
        points.sort_unstable();
        points.dedup();
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Pixel] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn check_bounds(&self, width: usize, height: usize) -> Result<()> {
        match self
            .points
            .iter()
            .find(|&&(r, c)| r >= height || c >= width)
        {
            Some(&(row, col)) => Err(Error::OutOfBounds {
                row,
                col,
                width,
                height,
            }),
            None => Ok(()),
        }
    }
}

/// Full-canvas membership mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                bits.push(f(r, c));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "mask {width}x{height} needs {} bits, got {}",
                width * height,
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    /// Bounds-tolerant lookup; anything off the canvas is a non-member.
    #[inline]
    pub fn get_signed(&self, row: isize, col: isize) -> bool {
        row >= 0
            && col >= 0
            && (row as usize) < self.height
            && (col as usize) < self.width
            && self.get(row as usize, col as usize)
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Member pixels in row-major order.
    pub fn members(&self) -> impl Iterator<Item = Pixel> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i / w, i % w))
    }

    pub fn to_coords(&self) -> Vec<Pixel> {
        self.members().collect()
    }

    fn check_same_dims(&self, other: &BinaryMask) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    fn zip_with(&self, other: &BinaryMask, op: impl Fn(bool, bool) -> bool) -> Result<BinaryMask> {
        self.check_same_dims(other)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Ok(BinaryMask {
            width: self.width,
            height: self.height,
            bits,
        })
    }

    pub fn intersect(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn union(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|&b| !b).collect(),
        }
    }

    /// `|self ∩ other|` without materializing the intersection.
    pub fn intersection_area(&self, other: &BinaryMask) -> Result<usize> {
        self.check_same_dims(other)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a && b)
            .count())
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> Result<bool> {
        self.check_same_dims(other)?;
        Ok(self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b))
    }

    /// 0/1 indicator image over the whole canvas.
    pub fn to_indicator(&self) -> Vec<f64> {
        self.bits
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect()
    }
}

/// A region together with the frame intensities of its member pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayMask {
    mask: BinaryMask,
    // one entry per member, row-major member order
    intensities: Vec<u8>,
}

impl GrayMask {
    pub fn mask(&self) -> &BinaryMask {
        &self.mask
    }

    pub fn intensities(&self) -> &[u8] {
        &self.intensities
    }

    pub fn area(&self) -> usize {
        self.intensities.len()
    }

    /// Member pixels paired with their intensity.
    pub fn iter(&self) -> impl Iterator<Item = (Pixel, u8)> + '_ {
        self.mask.members().zip(self.intensities.iter().copied())
    }

    /// Full-canvas intensity image; non-members read as 0.
    pub fn to_canvas(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.mask.width * self.mask.height];
        for ((r, c), v) in self.iter() {
            out[r * self.mask.width + c] = f64::from(v);
        }
        out
    }
}

pub fn rasterize(coords: &RegionCoords, width: usize, height: usize) -> Result<BinaryMask> {
    coords.check_bounds(width, height)?;
    let mut mask = BinaryMask::empty(width, height);
    for &(r, c) in coords.points() {
        mask.set(r, c, true);
    }
    Ok(mask)
}

pub fn extract_gray(coords: &RegionCoords, frame: &FrameImage) -> Result<GrayMask> {
    let mask = rasterize(coords, frame.width(), frame.height())?;
    Ok(gray_from_mask(mask, frame))
}

/// Attach frame intensities to an already-rasterized mask.
pub fn gray_from_mask(mask: BinaryMask, frame: &FrameImage) -> GrayMask {
    debug_assert_eq!((mask.width, mask.height), (frame.width(), frame.height()));
    let intensities = mask.members().map(|(r, c)| frame.get(r, c)).collect();
    GrayMask { mask, intensities }
}

pub fn intersect(a: &BinaryMask, b: &BinaryMask) -> Result<BinaryMask> {
    a.intersect(b)
}

pub fn union(a: &BinaryMask, b: &BinaryMask) -> Result<BinaryMask> {
    a.union(b)
}

pub fn area(a: &BinaryMask) -> usize {
    a.area()
}

pub fn mean_intensity(g: &GrayMask) -> Result<f64> {
    if g.intensities.is_empty() {
        return Err(Error::EmptyMask("mean intensity of an empty region"));
    }
    let sum: u64 = g.intensities.iter().map(|&v| u64::from(v)).sum();
    Ok(sum as f64 / g.intensities.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn coords(p: &[Pixel]) -> RegionCoords {
        RegionCoords::new(p.to_vec()).unwrap()
    }

    #[test]
    fn rasterize_single_pixel() {
        let m = rasterize(&coords(&[(0, 0)]), 2, 2).unwrap();
        assert_eq!(m.area(), 1);
        assert!(m.get(0, 0));
    }

    #[test]
    fn rasterize_collapses_duplicates() {
        let m = rasterize(&coords(&[(0, 0), (0, 0), (1, 1)]), 2, 2).unwrap();
        assert_eq!(m.area(), 2);
    }

    #[test]
    fn rasterize_out_of_bounds_names_point() {
        let err = rasterize(&coords(&[(5, 5)]), 4, 4).unwrap_err();
        assert!(err.to_string().contains("row 5"));
        match err {
            Error::OutOfBounds { row, col, .. } => assert_eq!((row, col), (5, 5)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_region_rejected() {
        assert!(RegionCoords::new(vec![]).is_err());
    }

    #[test]
    fn extract_gray_lookups() {
        let mut data = vec![0u8; 9];
        data[4] = 37;
        let frame = FrameImage::new(3, 3, data).unwrap();
        let g = extract_gray(&coords(&[(1, 1)]), &frame).unwrap();
        assert_eq!(g.area(), 1);
        assert_eq!(g.intensities(), &[37]);

        let frame = FrameImage::new(2, 1, vec![10, 20]).unwrap();
        let g = extract_gray(&coords(&[(0, 0), (0, 1)]), &frame).unwrap();
        assert_eq!(g.intensities(), &[10, 20]);
        assert_eq!(mean_intensity(&g).unwrap(), 15.0);
    }

    #[test]
    fn extract_gray_full_frame_is_identity() {
        let data: Vec<u8> = (0..12).map(|v| v * 7).collect();
        let frame = FrameImage::new(4, 3, data.clone()).unwrap();
        let all: Vec<Pixel> = (0..3).flat_map(|r| (0..4).map(move |c| (r, c))).collect();
        let g = extract_gray(&coords(&all), &frame).unwrap();
        assert_eq!(g.intensities(), data.as_slice());
        let canvas: Vec<f64> = data.iter().map(|&v| f64::from(v)).collect();
        assert_eq!(g.to_canvas(), canvas);
    }

    #[test]
    fn intersect_union_examples() {
        let a = rasterize(&coords(&[(0, 0), (0, 1)]), 2, 2).unwrap();
        let b = rasterize(&coords(&[(0, 1), (1, 1)]), 2, 2).unwrap();
        assert_eq!(intersect(&a, &b).unwrap().area(), 1);
        assert_eq!(union(&a, &b).unwrap().area(), 3);
        assert_eq!(intersect(&a, &a).unwrap(), a);
        assert_eq!(union(&a, &a).unwrap(), a);

        let c = rasterize(&coords(&[(0, 0), (0, 1), (0, 2)]), 4, 4).unwrap();
        let d = rasterize(&coords(&[(2, 0), (2, 1), (3, 0), (3, 1)]), 4, 4).unwrap();
        assert_eq!(intersect(&c, &d).unwrap().area(), 0);
        assert_eq!(union(&c, &d).unwrap().area(), 7);
    }

    #[test]
    fn dimension_mismatch() {
        let a = BinaryMask::empty(2, 2);
        let b = BinaryMask::empty(3, 2);
        assert!(matches!(
            intersect(&a, &b),
            Err(Error::DimensionMismatch(..))
        ));
        assert!(union(&a, &b).is_err());
    }

    #[test]
    fn mean_intensity_examples() {
        let frame = FrameImage::new(3, 1, vec![0, 0, 30]).unwrap();
        let g = extract_gray(&coords(&[(0, 0), (0, 1), (0, 2)]), &frame).unwrap();
        assert_eq!(mean_intensity(&g).unwrap(), 10.0);

        let frame = FrameImage::new(3, 3, vec![42; 9]).unwrap();
        let g = extract_gray(&coords(&[(0, 0), (2, 1), (1, 2)]), &frame).unwrap();
        assert_eq!(mean_intensity(&g).unwrap(), 42.0);
    }

    #[test]
    fn mean_of_empty_is_error() {
        let frame = FrameImage::new(2, 2, vec![1; 4]).unwrap();
        let g = gray_from_mask(BinaryMask::empty(2, 2), &frame);
        assert!(mean_intensity(&g).is_err());
    }

    #[test]
    fn frame_validation() {
        assert!(FrameImage::new(0, 3, vec![]).is_err());
        assert!(FrameImage::new(2, 2, vec![0; 3]).is_err());
    }

    fn mask_strategy(w: usize, h: usize) -> impl Strategy<Value = BinaryMask> {
        proptest::collection::vec(any::<bool>(), w * h)
            .prop_map(move |bits| BinaryMask::from_bits(w, h, bits).unwrap())
    }

    proptest! {
        #[test]
        fn rasterize_ignores_order_and_multiplicity(
            pts in proptest::collection::vec((0usize..6, 0usize..5), 1..30),
            seed in any::<u64>(),
        ) {
            let base = rasterize(&RegionCoords::new(pts.clone()).unwrap(), 5, 6).unwrap();
            let mut shuffled = pts.clone();
            shuffled.extend_from_slice(&pts[..pts.len() / 2]);
            let n = shuffled.len();
            shuffled.rotate_left((seed as usize) % n);
            shuffled.reverse();
            let other = rasterize(&RegionCoords::new(shuffled).unwrap(), 5, 6).unwrap();
            prop_assert_eq!(base, other);
        }

        #[test]
        fn inclusion_exclusion(a in mask_strategy(7, 5), b in mask_strategy(7, 5)) {
            let i = a.intersect(&b).unwrap().area();
            let u = a.union(&b).unwrap().area();
            prop_assert_eq!(i + u, a.area() + b.area());
            prop_assert!(i <= a.area().min(b.area()));
            let brute_i = (0..5).flat_map(|r| (0..7).map(move |c| (r, c)))
                .filter(|&(r, c)| a.get(r, c) && b.get(r, c)).count();
            prop_assert_eq!(i, brute_i);
        }

        #[test]
        fn extract_gray_mask_matches_rasterize(
            pts in proptest::collection::vec((0usize..4, 0usize..6), 1..20),
            data in proptest::collection::vec(any::<u8>(), 24),
        ) {
            let frame = FrameImage::new(6, 4, data).unwrap();
            let c = RegionCoords::new(pts).unwrap();
            let g = extract_gray(&c, &frame).unwrap();
            prop_assert_eq!(g.mask(), &rasterize(&c, 6, 4).unwrap());
            let mean = mean_intensity(&g).unwrap();
            let lo = *g.intensities().iter().min().unwrap() as f64;
            let hi = *g.intensities().iter().max().unwrap() as f64;
            prop_assert!(lo <= mean && mean <= hi);
        }
    }
}
