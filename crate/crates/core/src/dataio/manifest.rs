//! Manifest-driven dataset loading and writing.
//!
//! A manifest is one JSON document:
//!
//! ```json
//! {
//!   "frames": [
//!     {
//!       "frame_id": "frame_0001",
//!       "image": "frames/frame_0001.png",
//!       "erels": ["erels/frame_0001_00.txt", "erels/frame_0001_01.txt"],
//!       "ground_truth": "gt/frame_0001.csv",
//!       "category": "bifurcation"
//!     }
//!   ]
//! }
//! ```
//!
//! Paths are relative to the manifest's directory. Images are 8-bit
//! grayscale PGM (P5) or PNG. EREL files hold one `row col` pair per line,
//! listed in detector order (smallest region first). Ground-truth files are
//! `x,y` contour points in pixel coordinates, optionally headed by `x,y`.
//! Unknown categories load as `general`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder};
use serde::{Deserialize, Serialize};

use crate::dataio::synth::SyntheticFrame;
use crate::ellipsefit::Point;
use crate::error::{Error, Result};
use crate::masks::{FrameImage, Pixel, RegionCoords};
use crate::selection::{Category, FrameSample};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub frames: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub frame_id: String,
    pub image: PathBuf,
    pub erels: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<PathBuf>,
    #[serde(default)]
    pub category: Category,
    /// Index of the designed lumen, written for synthetic data only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lumen_index: Option<usize>,
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        msg: e.to_string(),
    })
}

fn base_dir(manifest_path: &Path) -> &Path {
    manifest_path.parent().unwrap_or_else(|| Path::new("."))
}

/// Loads every frame listed in the manifest, in manifest order.
pub fn load_dataset(manifest_path: &Path) -> Result<Vec<FrameSample>> {
    let manifest = read_manifest(manifest_path)?;
    let root = base_dir(manifest_path);
    manifest
        .frames
        .iter()
        .map(|entry| load_entry(root, entry))
        .collect()
}

pub fn load_entry(root: &Path, entry: &ManifestEntry) -> Result<FrameSample> {
    let frame = read_image(&root.join(&entry.image))?;
    let erels = entry
        .erels
        .iter()
        .map(|p| read_erel_file(&root.join(p), frame.width(), frame.height()))
        .collect::<Result<Vec<_>>>()?;
    let ground_truth = entry
        .ground_truth
        .as_ref()
        .map(|p| read_contour_file(&root.join(p)))
        .transpose()?;
    FrameSample::new(
        entry.frame_id.clone(),
        frame,
        erels,
        ground_truth,
        entry.category,
    )
}

pub fn read_image(path: &Path) -> Result<FrameImage> {
    let img = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Format {
            path: path.to_path_buf(),
            msg: other.to_string(),
        },
    })?;
    let gray = img.to_luma8();
    let (w, h) = gray.dimensions();
    FrameImage::new(w as usize, h as usize, gray.into_raw())
}

/// Writes the frame as binary PGM (P5).
pub fn write_pgm(path: &Path, frame: &FrameImage) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    PnmEncoder::new(&mut w)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(
            frame.data(),
            frame.width() as u32,
            frame.height() as u32,
            ExtendedColorType::L8,
        )
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Format {
                path: path.to_path_buf(),
                msg: other.to_string(),
            },
        })?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn is_skippable(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

/// Parses `row col` lines; coordinates are bounds-checked against the frame.
pub fn parse_erel(text: &str, path: &Path, width: usize, height: usize) -> Result<RegionCoords> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut points: Vec<Pixel> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if is_skippable(line) {
            continue;
        }
        let lineno = i + 1;
        let mut fields = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty());
        let (Some(r), Some(c), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err(
                lineno,
                format!("expected `row col`, got {:?}", line.trim()),
            ));
        };
        let row: usize = r
            .parse()
            .map_err(|_| parse_err(lineno, format!("invalid row {r:?}")))?;
        let col: usize = c
            .parse()
            .map_err(|_| parse_err(lineno, format!("invalid column {c:?}")))?;
        if row >= height || col >= width {
            return Err(parse_err(
                lineno,
                format!("pixel (row {row}, col {col}) lies outside the {width}x{height} frame"),
            ));
        }
        points.push((row, col));
    }
    if points.is_empty() {
        return Err(parse_err(0, "region file lists no pixels".into()));
    }
    RegionCoords::new(points)
}

pub fn read_erel_file(path: &Path, width: usize, height: usize) -> Result<RegionCoords> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_erel(&text, path, width, height)
}

pub fn format_erel(coords: &RegionCoords) -> String {
    let mut out = String::with_capacity(coords.len() * 8);
    for &(r, c) in coords.points() {
        out.push_str(&format!("{r} {c}\n"));
    }
    out
}

pub fn parse_contour(text: &str, path: &Path) -> Result<Vec<Point>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut points = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(i + 1, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if i == 0
            && rec.len() == 2
            && rec[0].eq_ignore_ascii_case("x")
            && rec[1].eq_ignore_ascii_case("y")
        {
            continue;
        }
        if rec.len() != 2 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("expected `x,y`, got {} fields", rec.len()),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("invalid coordinate {s:?}"),
                })
        };
        points.push([parse(&rec[0])?, parse(&rec[1])?]);
    }
    if points.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: "contour file lists no points".into(),
        });
    }
    Ok(points)
}

pub fn read_contour_file(path: &Path) -> Result<Vec<Point>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_contour(&text, path)
}

pub fn format_contour(points: &[Point]) -> String {
    let mut out = String::from("x,y\n");
    for p in points {
        out.push_str(&format!("{},{}\n", p[0], p[1]));
    }
    out
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes frames, region files, contours and `manifest.json` under `dir`;
/// returns the manifest path.
pub fn write_synthetic_dataset(dir: &Path, frames: &[SyntheticFrame]) -> Result<PathBuf> {
    for sub in ["frames", "erels", "gt"] {
        fs::create_dir_all(dir.join(sub)).map_err(|e| Error::io(dir.join(sub), e))?;
    }
    let mut manifest = Manifest::default();
    for f in frames {
        let s = &f.sample;
        let image = PathBuf::from("frames").join(format!("{}.pgm", s.frame_id));
        write_pgm(&dir.join(&image), &s.frame)?;
        let mut erels = Vec::with_capacity(s.erels.len());
        for (i, coords) in s.erels.iter().enumerate() {
            let p = PathBuf::from("erels").join(format!("{}_{:02}.txt", s.frame_id, i));
            write_file(&dir.join(&p), format_erel(coords))?;
            erels.push(p);
        }
        let ground_truth = match &s.ground_truth {
            Some(gt) => {
                let p = PathBuf::from("gt").join(format!("{}.csv", s.frame_id));
                write_file(&dir.join(&p), format_contour(gt))?;
                Some(p)
            }
            None => None,
        };
        manifest.frames.push(ManifestEntry {
            frame_id: s.frame_id.clone(),
            image,
            erels,
            ground_truth,
            category: s.category,
            lumen_index: Some(f.lumen_index),
        });
    }
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&path, json + "\n")?;
    Ok(path)
}
