//! Region boundaries, ellipse fitting and ellipse rasterization.
//!
//! Points are `[x, y]` with `x` the column and `y` the row of a pixel
//! center. Ellipse angles are measured from `+x` towards `+y`.
//!
//! Fitting uses the direct least-squares conic fit with the ellipse-specific
//! constraint `4AC - B² = 1`, solved through the reduced 3x3 eigenproblem
//! (Halir & Flusser's numerically stable formulation) on centered and
//! scaled coordinates.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masks::{BinaryMask, Pixel};

/// `[x, y]` in pixel units.
pub type Point = [f64; 2];

/// Default number of contour samples used for Hausdorff distances.
pub const DEFAULT_CONTOUR_SAMPLES: usize = 360;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub semi_major: f64,
    pub semi_minor: f64,
    /// Orientation of the major axis, in `[0, π)`.
    pub angle: f64,
}

impl Ellipse {
    /// Builds an ellipse in canonical form: axes swapped so that
    /// `semi_major >= semi_minor`, angle reduced to `[0, π)`.
    pub fn new(cx: f64, cy: f64, a: f64, b: f64, angle: f64) -> Result<Self> {
        let finite = [cx, cy, a, b, angle].iter().all(|v| v.is_finite());
        if !finite || a <= 0.0 || b <= 0.0 {
            return Err(Error::Fit(format!(
                "invalid ellipse parameters (center {cx}, {cy}; axes {a}, {b}; angle {angle})"
            )));
        }
        let (a, b, angle) = if a >= b {
            (a, b, angle)
        } else {
            (b, a, angle + FRAC_PI_2)
        };
        Ok(Self {
            cx,
            cy,
            semi_major: a,
            semi_minor: b,
            angle: normalize_angle(angle),
        })
    }

    pub fn circle(cx: f64, cy: f64, r: f64) -> Result<Self> {
        Self::new(cx, cy, r, r, 0.0)
    }

    pub fn area(&self) -> f64 {
        PI * self.semi_major * self.semi_minor
    }

    /// `(x'/a)² + (y'/b)²` in the ellipse frame; `<= 1` inside.
    pub fn implicit(&self, x: f64, y: f64) -> f64 {
        let (s, c) = self.angle.sin_cos();
        let dx = x - self.cx;
        let dy = y - self.cy;
        let u = (dx * c + dy * s) / self.semi_major;
        let v = (-dx * s + dy * c) / self.semi_minor;
        u * u + v * v
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.implicit(x, y) <= 1.0
    }

    /// Half extents of the axis-aligned bounding box.
    pub fn half_extents(&self) -> (f64, f64) {
        let (s, c) = self.angle.sin_cos();
        let (a, b) = (self.semi_major, self.semi_minor);
        (
            (a * a * c * c + b * b * s * s).sqrt(),
            (a * a * s * s + b * b * c * c).sqrt(),
        )
    }

    /// General conic coefficients `[A, B, C, D, E, F]` of
    /// `A x² + B xy + C y² + D x + E y + F = 0`, scaled so that the
    /// interior is negative.
    pub fn to_conic(&self) -> [f64; 6] {
        let (s, c) = self.angle.sin_cos();
        let a2 = self.semi_major * self.semi_major;
        let b2 = self.semi_minor * self.semi_minor;
        let qa = c * c / a2 + s * s / b2;
        let qb = 2.0 * c * s * (1.0 / a2 - 1.0 / b2);
        let qc = s * s / a2 + c * c / b2;
        let qd = -2.0 * qa * self.cx - qb * self.cy;
        let qe = -qb * self.cx - 2.0 * qc * self.cy;
        let qf = qa * self.cx * self.cx + qb * self.cx * self.cy + qc * self.cy * self.cy - 1.0;
        [qa, qb, qc, qd, qe, qf]
    }
}

fn normalize_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(PI);
    if a >= PI {
        0.0
    } else {
        a
    }
}

/// How a region's ellipse was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    Direct,
    Moments,
}

/// Member pixels with at least one 4-neighbour outside the region. The
/// canvas edge counts as outside.
pub fn boundary_pixels(mask: &BinaryMask) -> Result<Vec<Pixel>> {
    if mask.is_empty() {
        return Err(Error::EmptyMask("boundary of an empty region"));
    }
    let out = mask
        .members()
        .filter(|&(r, c)| {
            let (r, c) = (r as isize, c as isize);
            !(mask.get_signed(r - 1, c)
                && mask.get_signed(r + 1, c)
                && mask.get_signed(r, c - 1)
                && mask.get_signed(r, c + 1))
        })
        .collect();
    Ok(out)
}

/// Pixel centers as `[x, y]` points.
pub fn pixels_to_points(pixels: &[Pixel]) -> Vec<Point> {
    pixels.iter().map(|&(r, c)| [c as f64, r as f64]).collect()
}

/// Direct least-squares ellipse fit.
pub fn fit_ellipse(points: &[Point]) -> Result<Ellipse> {
    let n = points.len();
    if n < 5 {
        return Err(Error::Fit(format!("need at least 5 points, got {n}")));
    }
    let inv_n = 1.0 / n as f64;
    let mx = points.iter().map(|p| p[0]).sum::<f64>() * inv_n;
    let my = points.iter().map(|p| p[1]).sum::<f64>() * inv_n;
    let mean_dist = points
        .iter()
        .map(|p| ((p[0] - mx).powi(2) + (p[1] - my).powi(2)).sqrt())
        .sum::<f64>()
        * inv_n;
    if mean_dist.is_nan() || mean_dist <= 1e-12 {
        return Err(Error::Fit("points are coincident".into()));
    }
    let scale = std::f64::consts::SQRT_2 / mean_dist;

    // Scatter blocks: quadratic terms [x², xy, y²] and linear terms [x, y, 1].
    let mut s1 = Matrix3::<f64>::zeros();
    let mut s2 = Matrix3::<f64>::zeros();
    let mut s3 = Matrix3::<f64>::zeros();
    for p in points {
        let x = (p[0] - mx) * scale;
        let y = (p[1] - my) * scale;
        let q = Vector3::new(x * x, x * y, y * y);
        let l = Vector3::new(x, y, 1.0);
        s1 += q * q.transpose();
        s2 += q * l.transpose();
        s3 += l * l.transpose();
    }

    let sv = s3.singular_values();
    if sv.min() <= 1e-10 * sv.max() {
        return Err(Error::Fit("points are collinear".into()));
    }
    let s3_inv = s3
        .try_inverse()
        .ok_or_else(|| Error::Fit("singular linear scatter".into()))?;
    let t = -s3_inv * s2.transpose();
    let m = s1 + s2 * t;
    // Premultiply by the inverse of the constraint matrix
    // [[0, 0, 2], [0, -1, 0], [2, 0, 0]].
    let reduced = Matrix3::from_rows(&[m.row(2) * 0.5, -m.row(1), m.row(0) * 0.5]);

    let eigenvalues = reduced.complex_eigenvalues();
    let magnitude = eigenvalues
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .max(1e-300);
    let mut best: Option<(f64, Vector3<f64>)> = None;
    for z in eigenvalues.iter() {
        if z.im.abs() > 1e-9 * magnitude {
            continue;
        }
        let v = null_vector(&(reduced - Matrix3::identity() * z.re));
        let constraint = 4.0 * v[0] * v[2] - v[1] * v[1];
        if constraint <= 0.0 {
            continue;
        }
        let v = v / constraint.sqrt();
        let residual = (v.transpose() * m * v)[0];
        if best.as_ref().is_none_or(|(r, _)| residual < *r) {
            best = Some((residual, v));
        }
    }
    let (_, a1) = best.ok_or_else(|| Error::Fit("no elliptical solution".into()))?;
    let a2 = t * a1;
    let conic = [a1[0], a1[1], a1[2], a2[0], a2[1], a2[2]];
    let e = conic_to_ellipse(&conic)?;
    Ellipse::new(
        e.cx / scale + mx,
        e.cy / scale + my,
        e.semi_major / scale,
        e.semi_minor / scale,
        e.angle,
    )
}

fn null_vector(a: &Matrix3<f64>) -> Vector3<f64> {
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let (idx, _) =
        svd.singular_values
            .iter()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc },
            );
    v_t.row(idx).transpose()
}

/// Geometric parameters of the conic `A x² + B xy + C y² + D x + E y + F = 0`.
pub fn conic_to_ellipse(conic: &[f64; 6]) -> Result<Ellipse> {
    let [mut a, mut b, mut c, mut d, mut e, mut f] = *conic;
    if a + c < 0.0 {
        for v in [&mut a, &mut b, &mut c, &mut d, &mut e, &mut f] {
            *v = -*v;
        }
    }
    let det = 4.0 * a * c - b * b;
    if det.is_nan() || det <= 0.0 {
        return Err(Error::Fit("conic is not an ellipse".into()));
    }
    let cx = (b * e - 2.0 * c * d) / det;
    let cy = (b * d - 2.0 * a * e) / det;
    let f0 = a * cx * cx + b * cx * cy + c * cy * cy + d * cx + e * cy + f;
    let q = Matrix2::new(a, b * 0.5, b * 0.5, c);
    let eig = q.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if lo.is_nan() || lo <= 0.0 || f0.is_nan() || f0 >= 0.0 {
        return Err(Error::Fit("conic is imaginary or degenerate".into()));
    }
    let semi_major = (-f0 / lo).sqrt();
    let semi_minor = (-f0 / hi).sqrt();
    // 0.5·atan2(B, A − C) points along the eigenvector of the larger
    // eigenvalue, i.e. the minor axis.
    let angle = 0.5 * b.atan2(a - c) + FRAC_PI_2;
    Ellipse::new(cx, cy, semi_major, semi_minor, angle)
}

/// Ellipse with the centroid and second central moments of the region.
/// Semi-axes are floored at half a pixel so thin regions stay rasterizable.
pub fn moment_ellipse(mask: &BinaryMask) -> Result<Ellipse> {
    let n = mask.area();
    if n == 0 {
        return Err(Error::EmptyMask("moments of an empty region"));
    }
    let nf = n as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for (r, c) in mask.members() {
        sx += c as f64;
        sy += r as f64;
    }
    let (mx, my) = (sx / nf, sy / nf);
    let (mut cxx, mut cxy, mut cyy) = (0.0, 0.0, 0.0);
    for (r, c) in mask.members() {
        let dx = c as f64 - mx;
        let dy = r as f64 - my;
        cxx += dx * dx;
        cxy += dx * dy;
        cyy += dy * dy;
    }
    let (cxx, cxy, cyy) = (cxx / nf, cxy / nf, cyy / nf);
    let half = 0.5 * (cxx + cyy);
    let root = (0.25 * (cxx - cyy).powi(2) + cxy * cxy).sqrt();
    // Uniformly filled ellipse: variance along an axis is (semi-axis)² / 4.
    let a = (2.0 * (half + root).max(0.0).sqrt()).max(0.5);
    let b = (2.0 * (half - root).max(0.0).sqrt()).max(0.5);
    let angle = 0.5 * (2.0 * cxy).atan2(cxx - cyy);
    Ellipse::new(mx, my, a, b, angle)
}

/// Ellipse for a region: direct fit to its boundary pixels, or the moment
/// ellipse when the boundary is too small or degenerate.
pub fn fit_region(mask: &BinaryMask) -> Result<(Ellipse, FitMethod)> {
    let boundary = boundary_pixels(mask)?;
    match fit_ellipse(&pixels_to_points(&boundary)) {
        Ok(e) => Ok((e, FitMethod::Direct)),
        Err(_) => Ok((moment_ellipse(mask)?, FitMethod::Moments)),
    }
}

/// Pixels whose centers fall inside the ellipse, clipped to the canvas.
pub fn rasterize_ellipse(e: &Ellipse, width: usize, height: usize) -> BinaryMask {
    let mut mask = BinaryMask::empty(width, height);
    let (hx, hy) = e.half_extents();
    let c0 = (e.cx - hx).floor().max(0.0);
    let c1 = (e.cx + hx).ceil().min(width as f64 - 1.0);
    let r0 = (e.cy - hy).floor().max(0.0);
    let r1 = (e.cy + hy).ceil().min(height as f64 - 1.0);
    if c0 > c1 || r0 > r1 {
        return mask;
    }
    for r in r0 as usize..=r1 as usize {
        for c in c0 as usize..=c1 as usize {
            if e.contains(c as f64, r as f64) {
                mask.set(r, c, true);
            }
        }
    }
    mask
}

/// `n` contour points at uniform parameter steps, starting on the major axis.
pub fn ellipse_contour(e: &Ellipse, n: usize) -> Vec<Point> {
    let (s, c) = e.angle.sin_cos();
    (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            let u = e.semi_major * t.cos();
            let v = e.semi_minor * t.sin();
            [e.cx + u * c - v * s, e.cy + u * s + v * c]
        })
        .collect()
}
