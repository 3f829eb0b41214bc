//! Synthetic IVUS-like frames with a known lumen.
//!
//! Regions are threshold sets `{φ ≤ t}` of one scalar field, so the series
//! is nested by construction. The field is exactly 1 on the lumen ellipse
//! and is warped by random low-order angular harmonics away from it, so
//! regions below the lumen threshold are irregular blobs inside the lumen
//! and regions above it are lobed shapes leaking into the vessel wall.
//!
//! Intensity model (before noise): lumen 30, vessel wall 120, background
//! 80, additive uniform noise ±10. A bifurcation adds a dark side branch
//! joined to the lumen; a shadow darkens an angular sector of the wall.
//! Both also lower the field there so the larger regions leak into them.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ellipsefit::{ellipse_contour, Ellipse, DEFAULT_CONTOUR_SAMPLES};
use crate::error::{Error, Result};
use crate::masks::{FrameImage, Pixel, RegionCoords};
use crate::selection::{Category, FrameSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Artifact {
    #[default]
    None,
    BifurcationNotch,
    ShadowSector,
}

impl Artifact {
    pub const ALL: [Artifact; 3] = [
        Artifact::None,
        Artifact::BifurcationNotch,
        Artifact::ShadowSector,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Artifact::None => "none",
            Artifact::BifurcationNotch => "bifurcation_notch",
            Artifact::ShadowSector => "shadow_sector",
        }
    }

    pub fn category(self) -> Category {
        match self {
            Artifact::None => Category::NoArtifact,
            Artifact::BifurcationNotch => Category::Bifurcation,
            Artifact::ShadowSector => Category::Shadow,
        }
    }
}

impl std::str::FromStr for Artifact {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Artifact::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown artifact {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityLevels {
    pub lumen: u8,
    pub wall: u8,
    pub background: u8,
    /// Shadowed wall.
    pub shadow: u8,
    /// Half-width of the uniform noise.
    pub noise: u8,
}

impl Default for IntensityLevels {
    fn default() -> Self {
        Self {
            lumen: 30,
            wall: 120,
            background: 80,
            shadow: 40,
            noise: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    /// Designed lumen; drawn from the seed when absent.
    pub lumen: Option<Ellipse>,
    /// Number of regions besides the lumen (about half inside it).
    pub distractors: usize,
    pub artifact: Artifact,
    pub intensities: IntensityLevels,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(seed: u64, artifact: Artifact) -> Self {
        Self {
            width: 160,
            height: 160,
            lumen: None,
            distractors: 6,
            artifact,
            intensities: IntensityLevels::default(),
            seed,
        }
    }
}

/// A generated frame plus what the generator knows about it.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFrame {
    pub sample: FrameSample,
    /// Index of the region that equals the designed lumen.
    pub lumen_index: usize,
    pub lumen: Ellipse,
}

// Outer wall boundary, in lumen-normalized radius.
const MEDIA_SCALE: f64 = 1.9;
// Amplitude of the angular warp (gain stays within 1 ± WARP).
const WARP: f64 = 0.5;

/// Random smooth angular profile with values in [-1, 1].
struct Harmonics {
    terms: Vec<(f64, f64, f64)>,
    norm: f64,
}

impl Harmonics {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let terms: Vec<(f64, f64, f64)> = (1..=5)
            .map(|k| {
                (
                    k as f64,
                    rng.random_range(0.3..1.0),
                    rng.random_range(0.0..TAU),
                )
            })
            .collect();
        let mut h = Self { terms, norm: 1.0 };
        h.norm = (0..720)
            .map(|i| h.raw(i as f64 * TAU / 720.0).abs())
            .fold(0.0, f64::max)
            .max(1e-9);
        h
    }

    fn raw(&self, theta: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(k, amp, phase)| amp * (k * theta + phase).cos())
            .sum()
    }

    fn gain(&self, theta: f64) -> f64 {
        1.0 + WARP * (self.raw(theta) / self.norm).clamp(-1.0, 1.0)
    }
}

struct Layout {
    lumen: Ellipse,
    inner: Harmonics,
    outer: Harmonics,
    branch: Option<([f64; 2], f64)>,
    shadow: Option<(f64, f64)>,
    branch_level: f64,
}

impl Layout {
    /// Lumen-normalized radius and angle of a point.
    fn polar(&self, x: f64, y: f64) -> (f64, f64) {
        let e = &self.lumen;
        let (s, c) = e.angle.sin_cos();
        let (dx, dy) = (x - e.cx, y - e.cy);
        let u = (dx * c + dy * s) / e.semi_major;
        let v = (-dx * s + dy * c) / e.semi_minor;
        (u.hypot(v), v.atan2(u))
    }

    fn in_branch(&self, x: f64, y: f64) -> bool {
        self.branch
            .is_some_and(|(c, r)| (x - c[0]).powi(2) + (y - c[1]).powi(2) <= r * r)
    }

    fn in_shadow(&self, theta: f64) -> bool {
        self.shadow
            .is_some_and(|(start, width)| (theta - start).rem_euclid(TAU) <= width)
    }

    fn field(&self, x: f64, y: f64) -> f64 {
        let (rho, theta) = self.polar(x, y);
        let mut phi = if rho <= 1.0 {
            1.0 - (1.0 - rho) * self.inner.gain(theta)
        } else if rho <= MEDIA_SCALE {
            let g = self.outer.gain(theta);
            let g = if self.in_shadow(theta) { g * 0.35 } else { g };
            1.0 + (rho - 1.0) * g
        } else {
            f64::INFINITY
        };
        if rho > 1.0 && self.in_branch(x, y) {
            phi = phi.min(self.branch_level);
        }
        phi
    }

    fn intensity(&self, x: f64, y: f64, lv: &IntensityLevels) -> u8 {
        let (rho, theta) = self.polar(x, y);
        if rho <= 1.0 || self.in_branch(x, y) {
            lv.lumen
        } else if rho <= MEDIA_SCALE {
            if self.in_shadow(theta) {
                lv.shadow
            } else {
                lv.wall
            }
        } else {
            lv.background
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

pub fn generate_synthetic(spec: &SynthSpec) -> Result<SyntheticFrame> {
    let (w, h) = (spec.width, spec.height);
    if w < 16 || h < 16 {
        return Err(Error::InvalidInput(format!(
            "synthetic canvas {w}x{h} is too small"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let lumen = match spec.lumen {
        Some(e) => e,
        None => {
            let scale = (w.min(h) as f64) / 160.0;
            let a = rng.random_range(22.0..30.0) * scale;
            let b = a * rng.random_range(0.7..1.0);
            let cx = w as f64 / 2.0 + rng.random_range(-5.0..5.0) * scale;
            let cy = h as f64 / 2.0 + rng.random_range(-5.0..5.0) * scale;
            Ellipse::new(cx, cy, a, b, rng.random_range(0.0..PI))?
        }
    };
    let (hx, hy) = lumen.half_extents();
    let (mx, my) = (hx * MEDIA_SCALE, hy * MEDIA_SCALE);
    if lumen.cx - mx < 0.0
        || lumen.cy - my < 0.0
        || lumen.cx + mx > (w - 1) as f64
        || lumen.cy + my > (h - 1) as f64
    {
        return Err(Error::InvalidInput(
            "lumen and vessel wall must fit inside the canvas".into(),
        ));
    }

    let n_inner = spec.distractors / 2;
    let n_outer = spec.distractors - n_inner;
    let inner_levels = linspace(0.55, 0.85, n_inner);
    let outer_levels = linspace(1.2, 1.6, n_outer);

    let inner = Harmonics::random(&mut rng);
    let outer = Harmonics::random(&mut rng);
    let direction = rng.random_range(0.0..TAU);
    let branch = (spec.artifact == Artifact::BifurcationNotch).then(|| {
        // side branch centred in the wall, overlapping the lumen edge
        let (s, c) = lumen.angle.sin_cos();
        let (u, v) = (
            1.35 * lumen.semi_major * direction.cos(),
            1.35 * lumen.semi_minor * direction.sin(),
        );
        let center = [lumen.cx + u * c - v * s, lumen.cy + u * s + v * c];
        (center, 0.45 * lumen.semi_minor)
    });
    let shadow =
        (spec.artifact == Artifact::ShadowSector).then(|| (direction, rng.random_range(0.6..1.0)));
    let layout = Layout {
        lumen,
        inner,
        outer,
        branch,
        shadow,
        branch_level: outer_levels.first().copied().unwrap_or(1.2),
    };

    let mut field = Vec::with_capacity(w * h);
    let mut data = Vec::with_capacity(w * h);
    let noise = i16::from(spec.intensities.noise);
    for r in 0..h {
        for c in 0..w {
            let (x, y) = (c as f64, r as f64);
            field.push(layout.field(x, y));
            let base = i16::from(layout.intensity(x, y, &spec.intensities));
            let n = if noise > 0 {
                rng.random_range(-noise..=noise)
            } else {
                0
            };
            data.push((base + n).clamp(0, 255) as u8);
        }
    }
    let frame = FrameImage::new(w, h, data)?;

    let nearest_center = (
        lumen.cy.round().clamp(0.0, (h - 1) as f64) as usize,
        lumen.cx.round().clamp(0.0, (w - 1) as f64) as usize,
    );
    let levels: Vec<f64> = inner_levels
        .iter()
        .copied()
        .chain(std::iter::once(1.0))
        .chain(outer_levels.iter().copied())
        .collect();
    let mut erels = Vec::with_capacity(levels.len());
    for &t in &levels {
        let mut pts: Vec<Pixel> = field
            .iter()
            .enumerate()
            .filter(|(_, &phi)| phi <= t)
            .map(|(i, _)| (i / w, i % w))
            .collect();
        if pts.is_empty() {
            pts.push(nearest_center);
        }
        erels.push(RegionCoords::new(pts)?);
    }
    // the forced centre pixel must stay inside every later region
    for i in 1..erels.len() {
        if !erels[i].points().contains(&nearest_center)
            && erels[i - 1].points().contains(&nearest_center)
        {
            let mut pts = erels[i].points().to_vec();
            pts.push(nearest_center);
            erels[i] = RegionCoords::new(pts)?;
        }
    }

    let ground_truth = ellipse_contour(&lumen, DEFAULT_CONTOUR_SAMPLES);
    let sample = FrameSample::new(
        format!("synth_{}_{:06}", spec.artifact.as_str(), spec.seed),
        frame,
        erels,
        Some(ground_truth),
        spec.artifact.category(),
    )?;
    Ok(SyntheticFrame {
        sample,
        lumen_index: n_inner,
        lumen,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ellipsefit::rasterize_ellipse;
    use crate::masks::rasterize;

    #[test]
    fn series_is_nested_and_contains_lumen() {
        for artifact in Artifact::ALL {
            for seed in 0..5 {
                let spec = SynthSpec::new(seed, artifact);
                let s = generate_synthetic(&spec).unwrap();
                let (w, h) = (s.sample.width(), s.sample.height());
                assert_eq!(s.sample.erels.len(), 7);
                let masks: Vec<_> = s
                    .sample
                    .erels
                    .iter()
                    .map(|c| rasterize(c, w, h).unwrap())
                    .collect();
                for pair in masks.windows(2) {
                    assert!(pair[0].is_subset_of(&pair[1]).unwrap());
                }
                assert_eq!(masks[s.lumen_index], rasterize_ellipse(&s.lumen, w, h));
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = SynthSpec::new(42, Artifact::ShadowSector);
        assert_eq!(
            generate_synthetic(&spec).unwrap(),
            generate_synthetic(&spec).unwrap()
        );
        let other = generate_synthetic(&SynthSpec::new(43, Artifact::ShadowSector)).unwrap();
        assert_ne!(
            generate_synthetic(&spec).unwrap().sample.frame,
            other.sample.frame
        );
    }

    #[test]
    fn rejects_lumen_outside_canvas() {
        let mut spec = SynthSpec::new(1, Artifact::None);
        spec.lumen = Some(Ellipse::circle(10.0, 10.0, 20.0).unwrap());
        assert!(generate_synthetic(&spec).is_err());
    }

    #[test]
    fn distractor_count_controls_series_length() {
        let mut spec = SynthSpec::new(3, Artifact::None);
        spec.distractors = 4;
        let s = generate_synthetic(&spec).unwrap();
        assert_eq!(s.sample.erels.len(), 5);
        assert_eq!(s.lumen_index, 2);
        spec.distractors = 0;
        assert_eq!(generate_synthetic(&spec).unwrap().sample.erels.len(), 1);
    }
}
