//! Hausdorff distance, Jaccard measure and per-category aggregation.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ellipsefit::{ellipse_contour, rasterize_ellipse, Point};
use crate::error::{Error, Result};
use crate::masks::BinaryMask;
use crate::scoring::{CompactnessScore, CorrelationScore};
use crate::selection::{gold_standard, Category, FrameSample, SelectionResult};

/// Symmetric Hausdorff distance between two point sets, multiplied by
/// `spacing` (physical size of one pixel).
pub fn hausdorff(a: &[Point], b: &[Point], spacing: f64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput(
            "Hausdorff distance of an empty contour".into(),
        ));
    }
    if !spacing.is_finite() || spacing <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "pixel spacing must be positive, got {spacing}"
        )));
    }
    let d = directed_sq(a, b).max(directed_sq(b, a)).sqrt();
    Ok(spacing * d)
}

// max over p in `from` of the squared distance to the nearest q in `to`
fn directed_sq(from: &[Point], to: &[Point]) -> f64 {
    from.iter()
        .map(|p| {
            to.iter()
                .map(|q| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Intersection over union.
pub fn jaccard(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    let inter = a.intersection_area(b)?;
    let uni = a.area() + b.area() - inter;
    if uni == 0 {
        return Err(Error::EmptyMask("Jaccard measure of two empty masks"));
    }
    Ok(inter as f64 / uni as f64)
}

/// Even-odd fill of a closed polygon, sampled at pixel centers.
pub fn fill_polygon(contour: &[Point], width: usize, height: usize) -> BinaryMask {
    let mut mask = BinaryMask::empty(width, height);
    let n = contour.len();
    if n < 3 {
        return mask;
    }
    let mut xs = Vec::new();
    for r in 0..height {
        let y = r as f64;
        xs.clear();
        for i in 0..n {
            let p = contour[i];
            let q = contour[(i + 1) % n];
            if (p[1] > y) != (q[1] > y) {
                xs.push(p[0] + (y - p[1]) * (q[0] - p[0]) / (q[1] - p[1]));
            }
        }
        if xs.is_empty() {
            continue;
        }
        xs.sort_by(f64::total_cmp);
        for c in 0..width {
            let x = c as f64;
            let right = xs.len() - xs.partition_point(|&v| v <= x);
            if right % 2 == 1 {
                mask.set(r, c, true);
            }
        }
    }
    mask
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEvaluation {
    pub frame_id: String,
    pub category: Category,
    pub chosen_index: usize,
    pub gold_index: usize,
    pub hd: f64,
    pub jm: f64,
    pub gold_hd: f64,
    pub gold_jm: f64,
    pub fallback_used: bool,
    /// Correlation curve, one entry per region scored in pass one.
    pub correlation: Vec<CorrelationScore>,
    /// Compactness curve, one entry per pass-one survivor.
    pub compactness: Vec<CompactnessScore>,
}

/// Scores a selection against the frame's expert contour. Hausdorff
/// distances are scaled by `spacing`; `contour_samples` points are taken on
/// each fitted ellipse.
pub fn evaluate_frame(
    sample: &FrameSample,
    result: &SelectionResult,
    spacing: f64,
    contour_samples: usize,
) -> Result<FrameEvaluation> {
    let gt = sample
        .ground_truth
        .as_ref()
        .ok_or_else(|| Error::MissingGroundTruth(sample.frame_id.clone()))?;
    let (w, h) = (sample.width(), sample.height());
    let gt_mask = fill_polygon(gt, w, h);

    let hd = hausdorff(
        &ellipse_contour(&result.chosen_ellipse, contour_samples),
        gt,
        spacing,
    )?;
    let jm = jaccard(&rasterize_ellipse(&result.chosen_ellipse, w, h), &gt_mask)?;

    let gold = gold_standard(sample, contour_samples)?;
    let gold_jm = jaccard(&rasterize_ellipse(&gold.ellipse, w, h), &gt_mask)?;

    Ok(FrameEvaluation {
        frame_id: sample.frame_id.clone(),
        category: sample.category,
        chosen_index: result.chosen_index,
        gold_index: gold.index,
        hd,
        jm,
        gold_hd: gold.hd * spacing,
        gold_jm,
        fallback_used: result.fallback_used,
        correlation: result.correlation_trace.clone(),
        compactness: result.compactness_trace.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdKind {
    /// Divide by N.
    #[default]
    Population,
    /// Divide by N − 1 (0 for a single value).
    Sample,
}

impl FromStr for StdKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "population" => Ok(StdKind::Population),
            "sample" => Ok(StdKind::Sample),
            _ => Err(Error::InvalidInput(format!("unknown std kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    Gold,
    Proposed,
}

impl Selector {
    pub fn as_str(self) -> &'static str {
        match self {
            Selector::Gold => "gold",
            Selector::Proposed => "proposed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    /// `general` is the row over every frame.
    pub category: Category,
    pub selector: Selector,
    pub n: usize,
    pub hd_mean: f64,
    pub hd_std: f64,
    pub jm_mean: f64,
    pub jm_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub std: StdKind,
    pub total: usize,
    /// Frames per category label; sums to `total`.
    pub category_counts: BTreeMap<Category, usize>,
    pub rows: Vec<AggregateRow>,
}

impl AggregateReport {
    pub fn row(&self, category: Category, selector: Selector) -> Option<&AggregateRow> {
        self.rows
            .iter()
            .find(|r| r.category == category && r.selector == selector)
    }
}

/// Mean and standard deviation. Values are summed in sorted order so the
/// result does not depend on input order.
pub fn mean_std(values: &[f64], kind: StdKind) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let mut dev: Vec<f64> = v.iter().map(|x| (x - mean).powi(2)).collect();
    dev.sort_by(f64::total_cmp);
    let ss: f64 = dev.iter().sum();
    let denom = match kind {
        StdKind::Population => n,
        StdKind::Sample => n - 1.0,
    };
    let std = if denom > 0.0 {
        (ss / denom).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

fn summarize(
    category: Category,
    selector: Selector,
    evals: &[&FrameEvaluation],
    kind: StdKind,
) -> AggregateRow {
    let (hd, jm): (Vec<f64>, Vec<f64>) = evals
        .iter()
        .map(|e| match selector {
            Selector::Gold => (e.gold_hd, e.gold_jm),
            Selector::Proposed => (e.hd, e.jm),
        })
        .unzip();
    let (hd_mean, hd_std) = mean_std(&hd, kind);
    let (jm_mean, jm_std) = mean_std(&jm, kind);
    AggregateRow {
        category,
        selector,
        n: evals.len(),
        hd_mean,
        hd_std,
        jm_mean,
        jm_std,
    }
}

/// Mean/std of HD and JM for the gold and proposed selections, over all
/// frames (`general`) and per artifact category present.
pub fn aggregate(evals: &[FrameEvaluation], kind: StdKind) -> Result<AggregateReport> {
    if evals.is_empty() {
        return Err(Error::InvalidInput("nothing to aggregate".into()));
    }
    let mut category_counts = BTreeMap::new();
    for e in evals {
        *category_counts.entry(e.category).or_insert(0) += 1;
    }
    let mut rows = Vec::new();
    for category in Category::ALL {
        let members: Vec<&FrameEvaluation> = if category == Category::General {
            evals.iter().collect()
        } else {
            evals.iter().filter(|e| e.category == category).collect()
        };
        if members.is_empty() {
            continue;
        }
        for selector in [Selector::Gold, Selector::Proposed] {
            rows.push(summarize(category, selector, &members, kind));
        }
    }
    Ok(AggregateReport {
        std: kind,
        total: evals.len(),
        category_counts,
        rows,
    })
}
