//! Correlation scoring against the approximate lumen (first pass) and
//! region/ellipse compactness (second pass).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masks::{mean_intensity, BinaryMask, GrayMask};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationScore {
    pub erel_index: usize,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactnessScore {
    pub erel_index: usize,
    /// `|region ∩ ellipse| / |ellipse|`
    pub m1: f64,
    /// `|region ∩ ellipse| / |region|`
    pub m2: f64,
    pub total: f64,
}

/// Pixels of `last` strictly darker than its mean intensity.
pub fn approximate_lumen(last: &GrayMask) -> Result<BinaryMask> {
    let mean = mean_intensity(last)?;
    let m = last.mask();
    let mut out = BinaryMask::empty(m.width(), m.height());
    for ((r, c), v) in last.iter() {
        if f64::from(v) < mean {
            out.set(r, c, true);
        }
    }
    if out.is_empty() {
        return Err(Error::LumenExtraction);
    }
    Ok(out)
}

/// Pearson correlation of two equally sized images over every pixel.
pub fn corr2(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "correlation of images with {} and {} pixels",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::InvalidInput("correlation of empty images".into()));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 {
        return Err(Error::ConstantImage("first"));
    }
    if sbb == 0.0 {
        return Err(Error::ConstantImage("second"));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Correlation of two masks as 0/1 indicator images.
///
/// Closed form of [`corr2`] for binary images: only the two areas and the
/// overlap matter.
pub fn corr2_masks(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    let n = (a.width() * a.height()) as f64;
    let inter = a.intersection_area(b)? as f64;
    let (na, nb) = (a.area() as f64, b.area() as f64);
    let saa = na - na * na / n;
    let sbb = nb - nb * nb / n;
    if saa <= 0.0 {
        return Err(Error::ConstantImage("first"));
    }
    if sbb <= 0.0 {
        return Err(Error::ConstantImage("second"));
    }
    let sab = inter - na * nb / n;
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Indices whose correlation reaches the mean correlation, in input order.
pub fn pass1_filter(scores: &[CorrelationScore]) -> Vec<usize> {
    if scores.is_empty() {
        return Vec::new();
    }
    let mean = scores.iter().map(|s| s.r).sum::<f64>() / scores.len() as f64;
    let max = scores.iter().map(|s| s.r).fold(f64::NEG_INFINITY, f64::max);
    // The mean of a list never exceeds its maximum, but summation rounding
    // can push it a hair above; the maximum must always qualify.
    let threshold = mean.min(max);
    scores
        .iter()
        .filter(|s| s.r >= threshold)
        .map(|s| s.erel_index)
        .collect()
}

pub fn compactness(
    erel_index: usize,
    region_dilated: &BinaryMask,
    ellipse_mask: &BinaryMask,
) -> Result<CompactnessScore> {
    let inter = region_dilated.intersection_area(ellipse_mask)? as f64;
    let ellipse_area = ellipse_mask.area();
    let region_area = region_dilated.area();
    if ellipse_area == 0 {
        return Err(Error::DegenerateScore("ellipse raster is empty"));
    }
    if region_area == 0 {
        return Err(Error::DegenerateScore("region is empty"));
    }
    let m1 = inter / ellipse_area as f64;
    let m2 = inter / region_area as f64;
    Ok(CompactnessScore {
        erel_index,
        m1,
        m2,
        total: m1 + m2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masks::{extract_gray, rasterize, FrameImage, Pixel, RegionCoords};
    use proptest::prelude::*;

    // Term-by-term evaluation of the correlation coefficient, kept separate
    // from the single-pass accumulation in corr2.
    fn corr_oracle(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma: f64 = a.iter().sum::<f64>() / n;
        let mb: f64 = b.iter().sum::<f64>() / n;
        let num: f64 = (0..a.len()).map(|i| (a[i] - ma) * (b[i] - mb)).sum();
        let va: f64 = (0..a.len()).map(|i| (a[i] - ma).powi(2)).sum();
        let vb: f64 = (0..a.len()).map(|i| (b[i] - mb).powi(2)).sum();
        num / (va * vb).sqrt()
    }

    fn mask(w: usize, h: usize, px: &[Pixel]) -> BinaryMask {
        rasterize(&RegionCoords::new(px.to_vec()).unwrap(), w, h).unwrap()
    }

    fn row_frame(values: &[u8]) -> (FrameImage, RegionCoords) {
        let frame = FrameImage::new(values.len(), 1, values.to_vec()).unwrap();
        let coords = RegionCoords::new((0..values.len()).map(|c| (0, c)).collect()).unwrap();
        (frame, coords)
    }

    #[test]
    fn approximate_lumen_examples() {
        let (f, c) = row_frame(&[10, 10, 200, 200]);
        let lumen = approximate_lumen(&extract_gray(&c, &f).unwrap()).unwrap();
        assert_eq!(lumen.to_coords(), vec![(0, 0), (0, 1)]);

        let (f, c) = row_frame(&[0, 255]);
        let lumen = approximate_lumen(&extract_gray(&c, &f).unwrap()).unwrap();
        assert_eq!(lumen.to_coords(), vec![(0, 0)]);

        let (f, c) = row_frame(&[77; 6]);
        assert!(matches!(
            approximate_lumen(&extract_gray(&c, &f).unwrap()),
            Err(Error::LumenExtraction)
        ));
    }

    #[test]
    fn corr2_examples() {
        let a = mask(3, 3, &[(0, 0), (1, 2)]);
        assert!((corr2_masks(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((corr2_masks(&a, &a.complement()).unwrap() + 1.0).abs() < 1e-12);

        let a = mask(3, 3, &[(0, 0)]);
        let b = mask(3, 3, &[(0, 0), (0, 1)]);
        let expected = corr_oracle(&a.to_indicator(), &b.to_indicator());
        // 7/9 over sqrt(8/9 · 14/9)
        assert!((expected - 7.0 / 112f64.sqrt()).abs() < 1e-12);
        assert!((corr2_masks(&a, &b).unwrap() - expected).abs() < 1e-12);
        assert!((corr2(&a.to_indicator(), &b.to_indicator()).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn corr2_constant_is_error() {
        let full = BinaryMask::from_fn(3, 3, |_, _| true);
        let a = mask(3, 3, &[(1, 1)]);
        assert!(matches!(
            corr2_masks(&full, &a),
            Err(Error::ConstantImage(_))
        ));
        assert!(matches!(
            corr2_masks(&a, &BinaryMask::empty(3, 3)),
            Err(Error::ConstantImage(_))
        ));
        assert!(corr2(&[1.0, 1.0], &[0.0, 1.0]).is_err());
        assert!(corr2(&[1.0, 2.0], &[0.0, 1.0, 2.0]).is_err());
    }

    fn scores(rs: &[f64]) -> Vec<CorrelationScore> {
        rs.iter()
            .enumerate()
            .map(|(i, &r)| CorrelationScore { erel_index: i, r })
            .collect()
    }

    #[test]
    fn pass1_examples() {
        assert_eq!(pass1_filter(&scores(&[0.4, 0.4, 0.4])), vec![0, 1, 2]);
        assert_eq!(pass1_filter(&scores(&[0.1, 0.9])), vec![1]);
        assert_eq!(pass1_filter(&scores(&[0.2, 0.5, 0.8])), vec![1, 2]);
        assert_eq!(pass1_filter(&scores(&[0.1; 10])).len(), 10);
    }

    #[test]
    fn compactness_examples() {
        let region = mask(6, 6, &[(1, 1), (1, 2), (2, 1), (2, 2)]);
        let s = compactness(3, &region, &region).unwrap();
        assert_eq!((s.m1, s.m2, s.total, s.erel_index), (1.0, 1.0, 2.0, 3));

        let big = BinaryMask::from_fn(10, 10, |_, _| true);
        let half = BinaryMask::from_fn(10, 10, |r, _| r < 5);
        let s = compactness(0, &big, &half).unwrap();
        assert_eq!((s.m1, s.m2), (1.0, 0.5));

        // region: 2x4 block (area 8); ellipse stand-in: 2x3 block shifted by
        // one column (area 6); overlap 2x2 = 4
        let region = BinaryMask::from_fn(8, 4, |r, c| r < 2 && c < 4);
        let ell = BinaryMask::from_fn(8, 4, |r, c| r < 2 && (2..5).contains(&c));
        assert_eq!((region.area(), ell.area()), (8, 6));
        assert_eq!(region.intersection_area(&ell).unwrap(), 4);
        let s = compactness(0, &region, &ell).unwrap();
        assert!((s.m1 - 4.0 / 6.0).abs() < 1e-12);
        assert!((s.m2 - 0.5).abs() < 1e-12);
        assert!((s.total - 7.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn compactness_degenerate() {
        let region = mask(4, 4, &[(0, 0)]);
        assert!(compactness(0, &region, &BinaryMask::empty(4, 4)).is_err());
        assert!(compactness(0, &BinaryMask::empty(4, 4), &region).is_err());
    }

    fn mask_strategy(w: usize, h: usize) -> impl Strategy<Value = BinaryMask> {
        proptest::collection::vec(any::<bool>(), w * h)
            .prop_map(move |bits| BinaryMask::from_bits(w, h, bits).unwrap())
            .prop_filter("non-constant", |m| {
                !m.is_empty() && m.area() < m.width() * m.height()
            })
    }

    proptest! {
        #[test]
        fn corr2_matches_oracle_and_is_symmetric(a in mask_strategy(6, 5), b in mask_strategy(6, 5)) {
            let r = corr2_masks(&a, &b).unwrap();
            let (ia, ib) = (a.to_indicator(), b.to_indicator());
            prop_assert!((r - corr_oracle(&ia, &ib)).abs() < 1e-9);
            prop_assert!((r - corr2_masks(&b, &a).unwrap()).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&r));
        }

        #[test]
        fn corr2_affine_invariant(
            a in proptest::collection::vec(0.0f64..255.0, 20),
            b in proptest::collection::vec(0.0f64..255.0, 20),
            slope in 0.01f64..50.0,
            offset in -100.0f64..100.0,
        ) {
            let r = corr2(&a, &b).unwrap();
            let scaled: Vec<f64> = a.iter().map(|v| slope * v + offset).collect();
            prop_assert!((corr2(&scaled, &b).unwrap() - r).abs() < 1e-9);
            prop_assert!((corr2(&b, &scaled).unwrap() - r).abs() < 1e-9);
        }

        #[test]
        fn pass1_keeps_argmax(rs in proptest::collection::vec(-1.0f64..1.0, 1..40)) {
            let s = scores(&rs);
            let kept = pass1_filter(&s);
            let argmax = (0..rs.len()).fold(0, |best, i| if rs[i] > rs[best] { i } else { best });
            prop_assert!(kept.contains(&argmax));
            prop_assert!(kept.windows(2).all(|w| w[0] < w[1]));
        }

        #[test]
        fn compactness_bounds(a in mask_strategy(6, 6), b in mask_strategy(6, 6)) {
            let s = compactness(0, &a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&s.m1) && (0.0..=1.0).contains(&s.m2));
            prop_assert_eq!(s.total, s.m1 + s.m2);
            prop_assert_eq!(s.m1 == 1.0 && s.m2 == 1.0, a == b);
        }
    }
}
