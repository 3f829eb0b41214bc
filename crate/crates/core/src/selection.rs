//! The two-pass EREL selector.
//!
//! Pass one correlates every region with the approximate lumen taken from
//! the last (largest) region and keeps those at or above the mean
//! correlation. Pass two dilates each survivor, fits an ellipse to it and
//! ranks survivors by `M1 + M2`; the pick is the best of the first
//! `k_maxima` local maxima of that curve, or its global maximum when the
//! curve has no interior peak.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ellipsefit::{
    ellipse_contour, fit_region, rasterize_ellipse, Ellipse, FitMethod, Point,
};
use crate::error::{Error, Result};
use crate::masks::{extract_gray, gray_from_mask, FrameImage, GrayMask, RegionCoords};
use crate::metrics::hausdorff;
use crate::morphology::{dilate, disk, DEFAULT_DILATE_RADIUS};
use crate::scoring::{
    approximate_lumen, compactness, corr2, corr2_masks, pass1_filter, CompactnessScore,
    CorrelationScore,
};

/// Dataset stratum a frame belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Category {
    #[default]
    General,
    NoArtifact,
    Bifurcation,
    SideVessels,
    Shadow,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::General,
        Category::NoArtifact,
        Category::Bifurcation,
        Category::SideVessels,
        Category::Shadow,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::General => "general",
            Category::NoArtifact => "no_artifact",
            Category::Bifurcation => "bifurcation",
            Category::SideVessels => "side_vessels",
            Category::Shadow => "shadow",
        }
    }

    /// Lenient parse: anything unrecognised is `General`.
    pub fn parse_lenient(s: &str) -> Self {
        s.parse().unwrap_or_default()
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == norm)
            .ok_or_else(|| Error::InvalidInput(format!("unknown category {s:?}")))
    }
}

impl Serialize for Category {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Category {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(Category::parse_lenient(&s))
    }
}

/// One frame with its ordered candidate regions.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSample {
    pub frame_id: String,
    pub frame: FrameImage,
    /// Detector order: increasing region size.
    pub erels: Vec<RegionCoords>,
    /// Expert lumen contour as `[x, y]` points.
    pub ground_truth: Option<Vec<Point>>,
    pub category: Category,
}

impl FrameSample {
    pub fn new(
        frame_id: impl Into<String>,
        frame: FrameImage,
        erels: Vec<RegionCoords>,
        ground_truth: Option<Vec<Point>>,
        category: Category,
    ) -> Result<Self> {
        let frame_id = frame_id.into();
        if erels.is_empty() {
            return Err(Error::InvalidInput(format!(
                "frame {frame_id} has no regions"
            )));
        }
        for e in &erels {
            e.check_bounds(frame.width(), frame.height())?;
        }
        if let Some(gt) = &ground_truth {
            if gt.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "frame {frame_id} has an empty ground-truth contour"
                )));
            }
        }
        Ok(Self {
            frame_id,
            frame,
            erels,
            ground_truth,
            category,
        })
    }

    pub fn width(&self) -> usize {
        self.frame.width()
    }

    pub fn height(&self) -> usize {
        self.frame.height()
    }
}

/// Operands of the pass-one correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrMode {
    /// 0/1 indicator images of region and approximate lumen.
    #[default]
    Binary,
    /// Frame intensities inside each mask, zero outside.
    Gray,
}

impl FromStr for CorrMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(CorrMode::Binary),
            "gray" | "grey" => Ok(CorrMode::Gray),
            _ => Err(Error::InvalidInput(format!(
                "unknown correlation mode {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub dilate_radius: u32,
    pub k_maxima: usize,
    pub corr_mode: CorrMode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            dilate_radius: DEFAULT_DILATE_RADIUS,
            k_maxima: 2,
            corr_mode: CorrMode::Binary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub chosen_index: usize,
    /// Ellipse fitted to the chosen (undilated) region; this is the
    /// segmentation output.
    pub chosen_ellipse: Ellipse,
    pub chosen_fit: FitMethod,
    pub correlation_trace: Vec<CorrelationScore>,
    /// One entry per pass-one survivor, in region order.
    pub compactness_trace: Vec<CompactnessScore>,
    pub pass1_survivors: Vec<usize>,
    /// Pass one was skipped and every region went to pass two.
    pub fallback_used: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback_reason: Option<String>,
    /// No interior local maximum existed; the global maximum was taken.
    pub global_max_used: bool,
}

/// Strict interior local maxima. Endpoints never qualify.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    values
        .windows(3)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0] && w[1] > w[2])
        .map(|(i, _)| i + 1)
        .collect()
}

/// Position picked from a compactness curve, and whether the global
/// maximum fallback was needed.
///
/// Among the first `k_maxima` local maxima the highest value wins, earliest
/// on ties. Without local maxima the earliest global maximum is taken.
pub fn choose_position(totals: &[f64], k_maxima: usize) -> Option<(usize, bool)> {
    if totals.is_empty() {
        return None;
    }
    let maxima = local_maxima(totals);
    let (candidates, global) = if maxima.is_empty() {
        ((0..totals.len()).collect::<Vec<_>>(), true)
    } else {
        (maxima.into_iter().take(k_maxima.max(1)).collect(), false)
    };
    let best = candidates
        .into_iter()
        .reduce(|best, i| if totals[i] > totals[best] { i } else { best })?;
    Some((best, global))
}

fn correlation_pass(
    masks: &[GrayMask],
    frame: &FrameImage,
    mode: CorrMode,
) -> Result<Vec<CorrelationScore>> {
    let last = masks.last().expect("non-empty region list");
    let lumen = approximate_lumen(last)?;
    match mode {
        CorrMode::Binary => masks
            .iter()
            .enumerate()
            .map(|(i, g)| {
                Ok(CorrelationScore {
                    erel_index: i,
                    r: corr2_masks(g.mask(), &lumen)?,
                })
            })
            .collect(),
        CorrMode::Gray => {
            let lumen_img = gray_from_mask(lumen, frame).to_canvas();
            masks
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    Ok(CorrelationScore {
                        erel_index: i,
                        r: corr2(&g.to_canvas(), &lumen_img)?,
                    })
                })
                .collect()
        }
    }
}

fn compactness_of(index: usize, g: &GrayMask, radius: u32) -> CompactnessScore {
    let dilated = dilate(g.mask(), &disk(radius));
    let (w, h) = (dilated.width(), dilated.height());
    fit_region(&dilated)
        .and_then(|(e, _)| compactness(index, &dilated, &rasterize_ellipse(&e, w, h)))
        // An ellipse raster that misses the canvas shares nothing with the
        // region.
        .unwrap_or(CompactnessScore {
            erel_index: index,
            m1: 0.0,
            m2: 0.0,
            total: 0.0,
        })
}

/// Runs both passes on one frame.
///
/// Only malformed input is an error; numerically degenerate frames fall
/// back to compactness ranking over all regions.
pub fn select(sample: &FrameSample, cfg: &PipelineConfig) -> Result<SelectionResult> {
    if sample.erels.is_empty() {
        return Err(Error::InvalidInput(format!(
            "frame {} has no regions",
            sample.frame_id
        )));
    }
    let masks = sample
        .erels
        .iter()
        .map(|c| extract_gray(c, &sample.frame))
        .collect::<Result<Vec<_>>>()?;

    let all: Vec<usize> = (0..masks.len()).collect();
    let (correlation_trace, survivors, fallback_reason) =
        match correlation_pass(&masks, &sample.frame, cfg.corr_mode) {
            Ok(trace) if trace.iter().any(|s| s.r > 0.0) => {
                let kept = pass1_filter(&trace);
                (trace, kept, None)
            }
            Ok(trace) => (
                trace,
                all,
                Some("all correlations are non-positive".to_string()),
            ),
            Err(e) => (Vec::new(), all, Some(e.to_string())),
        };

    let compactness_trace: Vec<CompactnessScore> = survivors
        .par_iter()
        .map(|&i| compactness_of(i, &masks[i], cfg.dilate_radius))
        .collect();
    let totals: Vec<f64> = compactness_trace.iter().map(|s| s.total).collect();
    let (pos, global_max_used) =
        choose_position(&totals, cfg.k_maxima).expect("at least one survivor");
    let chosen_index = survivors[pos];
    let (chosen_ellipse, chosen_fit) = fit_region(masks[chosen_index].mask())?;

    Ok(SelectionResult {
        chosen_index,
        chosen_ellipse,
        chosen_fit,
        correlation_trace,
        compactness_trace,
        pass1_survivors: survivors,
        fallback_used: fallback_reason.is_some(),
        fallback_reason,
        global_max_used,
    })
}

/// Per-region distance to the expert contour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldStandard {
    pub index: usize,
    /// Hausdorff distance (pixels) of the gold region's ellipse.
    pub hd: f64,
    pub ellipse: Ellipse,
    /// Hausdorff distance (pixels) of every region's ellipse, in order.
    pub hds: Vec<f64>,
}

/// Ellipse of every region, fitted to the undilated masks.
pub fn region_ellipses(sample: &FrameSample) -> Result<Vec<Ellipse>> {
    sample
        .erels
        .iter()
        .map(|c| {
            let g = extract_gray(c, &sample.frame)?;
            Ok(fit_region(g.mask())?.0)
        })
        .collect()
}

/// The region whose fitted ellipse is closest, in Hausdorff distance, to
/// the expert contour. Ties go to the lower index.
pub fn gold_standard(sample: &FrameSample, contour_samples: usize) -> Result<GoldStandard> {
    let gt = sample
        .ground_truth
        .as_ref()
        .ok_or_else(|| Error::MissingGroundTruth(sample.frame_id.clone()))?;
    let ellipses = region_ellipses(sample)?;
    let hds = ellipses
        .iter()
        .map(|e| hausdorff(&ellipse_contour(e, contour_samples), gt, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let index = (0..hds.len())
        .reduce(|best, i| if hds[i] < hds[best] { i } else { best })
        .expect("non-empty region list");
    Ok(GoldStandard {
        index,
        hd: hds[index],
        ellipse: ellipses[index],
        hds,
    })
}

pub fn gold_standard_index(sample: &FrameSample, contour_samples: usize) -> Result<usize> {
    Ok(gold_standard(sample, contour_samples)?.index)
}
