//! Selection results, evaluation reports and plot data on disk.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{evaluate_frame, AggregateReport, FrameEvaluation};
use crate::selection::{
    select, Category, FrameSample, GoldStandard, PipelineConfig, SelectionResult,
};

/// Output of `select` over a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub config: PipelineConfig,
    pub frames: Vec<FrameResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameResult {
    pub frame_id: String,
    pub category: Category,
    pub n_erels: usize,
    #[serde(flatten)]
    pub result: SelectionResult,
}

impl ResultsFile {
    /// Runs the selector on every frame (in parallel, output in input order).
    pub fn compute(samples: &[FrameSample], config: PipelineConfig) -> Result<Self> {
        let frames = samples
            .par_iter()
            .map(|s| {
                Ok(FrameResult {
                    frame_id: s.frame_id.clone(),
                    category: s.category,
                    n_erels: s.erels.len(),
                    result: select(s, &config)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { config, frames })
    }

    /// Evaluates every stored selection against its frame, matched by id.
    pub fn evaluate(
        &self,
        samples: &[FrameSample],
        spacing: f64,
        contour_samples: usize,
    ) -> Result<Vec<FrameEvaluation>> {
        let by_id: std::collections::HashMap<&str, &FrameSample> =
            samples.iter().map(|s| (s.frame_id.as_str(), s)).collect();
        self.frames
            .par_iter()
            .map(|f| {
                let sample = by_id.get(f.frame_id.as_str()).ok_or_else(|| {
                    Error::InvalidInput(format!("frame {:?} is not in the manifest", f.frame_id))
                })?;
                if f.n_erels != sample.erels.len() {
                    return Err(Error::InvalidInput(format!(
                        "frame {:?}: results cover {} regions, manifest lists {}",
                        f.frame_id,
                        f.n_erels,
                        sample.erels.len()
                    )));
                }
                evaluate_frame(sample, &f.result, spacing, contour_samples)
            })
            .collect()
    }
}

/// Full evaluation report as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub report: AggregateReport,
    pub frames: Vec<FrameEvaluation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    /// `.json` means JSON; anything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => ReportFormat::Json,
            _ => ReportFormat::Csv,
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::io(path, e.into()))?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        msg: e.to_string(),
    })
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format {
            path: path.to_path_buf(),
            msg: format!("{other:?}"),
        },
    }
}

pub fn write_results(path: &Path, results: &ResultsFile) -> Result<()> {
    write_json(path, results)
}

pub fn read_results(path: &Path) -> Result<ResultsFile> {
    read_json(path)
}

#[derive(Serialize)]
struct CsvRow<'a> {
    category: &'a str,
    selector: &'a str,
    n: usize,
    hd_mean: f64,
    hd_std: f64,
    jm_mean: f64,
    jm_std: f64,
}

/// CSV: one row per category and selector. JSON: the aggregate plus every
/// per-frame evaluation, including its correlation and compactness curves.
pub fn write_report(
    report: &AggregateReport,
    evals: &[FrameEvaluation],
    path: &Path,
    format: ReportFormat,
) -> Result<()> {
    match format {
        ReportFormat::Json => write_json(
            path,
            &ReportFile {
                report: report.clone(),
                frames: evals.to_vec(),
            },
        ),
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(create(path)?);
            for row in &report.rows {
                w.serialize(CsvRow {
                    category: row.category.as_str(),
                    selector: row.selector.as_str(),
                    n: row.n,
                    hd_mean: row.hd_mean,
                    hd_std: row.hd_std,
                    jm_mean: row.jm_mean,
                    jm_std: row.jm_std,
                })
                .map_err(|e| csv_err(path, e))?;
            }
            w.flush().map_err(|e| Error::io(path, e))
        }
    }
}

pub fn read_report_json(path: &Path) -> Result<ReportFile> {
    read_json(path)
}

#[derive(Serialize)]
struct GoldRow<'a> {
    frame_id: &'a str,
    category: &'a str,
    n_erels: usize,
    gold_index: usize,
    gold_hd: f64,
}

/// `frame_id,category,n_erels,gold_index,gold_hd`, HD scaled by `spacing`.
pub fn write_gold_csv(
    path: &Path,
    rows: &[(String, Category, usize, GoldStandard)],
    spacing: f64,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for (id, cat, n, gold) in rows {
        w.serialize(GoldRow {
            frame_id: id,
            category: cat.as_str(),
            n_erels: *n,
            gold_index: gold.index,
            gold_hd: gold.hd * spacing,
        })
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct PlotRow {
    erel_index: usize,
    r: Option<f64>,
    survivor: bool,
    m1: Option<f64>,
    m2: Option<f64>,
    compactness: Option<f64>,
    chosen: bool,
}

/// One CSV per frame with its correlation and compactness curves; returns
/// the files written.
pub fn write_plot_data(dir: &Path, results: &ResultsFile) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(results.frames.len());
    for f in &results.frames {
        let path = dir.join(format!("{}.csv", sanitize(&f.frame_id)));
        let mut w = csv::Writer::from_writer(create(&path)?);
        let res = &f.result;
        for i in 0..f.n_erels {
            let r = res
                .correlation_trace
                .iter()
                .find(|s| s.erel_index == i)
                .map(|s| s.r);
            let c = res.compactness_trace.iter().find(|s| s.erel_index == i);
            w.serialize(PlotRow {
                erel_index: i,
                r,
                survivor: res.pass1_survivors.contains(&i),
                m1: c.map(|c| c.m1),
                m2: c.map(|c| c.m2),
                compactness: c.map(|c| c.total),
                chosen: res.chosen_index == i,
            })
            .map_err(|e| csv_err(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}
