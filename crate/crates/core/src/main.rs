use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use erel_select::dataio::{
    generate_synthetic, load_dataset, read_results, write_gold_csv, write_plot_data, write_report,
    write_results, write_synthetic_dataset, Artifact, ReportFormat, ResultsFile, SynthSpec,
};
use erel_select::ellipsefit::DEFAULT_CONTOUR_SAMPLES;
use erel_select::metrics::{aggregate, StdKind};
use erel_select::morphology::DEFAULT_DILATE_RADIUS;
use erel_select::selection::gold_standard;
use erel_select::{CorrMode, Error, PipelineConfig, Result};

#[derive(Parser)]
#[command(
    name = "erel-select",
    version,
    about = "Two-pass EREL selection for IVUS lumen segmentation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select the lumen region of every frame in a manifest.
    Select {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DILATE_RADIUS)]
        dilate_radius: u32,
        #[arg(long, default_value_t = 2)]
        k_maxima: usize,
        #[arg(long, default_value = "binary")]
        corr_mode: CorrMode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score selections against ground truth and aggregate per category.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        results: PathBuf,
        /// Physical size of one pixel; distances are multiplied by it.
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
        #[arg(long, default_value = "population")]
        std: StdKind,
        #[arg(long, default_value_t = DEFAULT_CONTOUR_SAMPLES)]
        contour_samples: usize,
        /// CSV, or JSON when the extension is `.json`.
        #[arg(long)]
        out: PathBuf,
        /// Also write the full JSON report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Write a synthetic dataset (manifest, frames, regions, contours).
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        frames: u64,
        #[arg(long, default_value = "none")]
        artifact: Artifact,
        #[arg(long)]
        out: PathBuf,
    },
    /// Gold-standard region index and Hausdorff distance per frame.
    Gold {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
        #[arg(long, default_value_t = DEFAULT_CONTOUR_SAMPLES)]
        contour_samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-frame correlation and compactness curves as CSV.
    Plotdata {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn check_spacing(spacing: f64) -> Result<()> {
    if spacing.is_finite() && spacing > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "spacing must be positive, got {spacing}"
        )))
    }
}

fn check_contour_samples(n: usize) -> Result<()> {
    if n >= 8 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "contour samples must be at least 8, got {n}"
        )))
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Select {
            manifest,
            dilate_radius,
            k_maxima,
            corr_mode,
            out,
        } => {
            if k_maxima == 0 {
                return Err(Error::InvalidInput("k-maxima must be at least 1".into()));
            }
            let samples = load_dataset(&manifest)?;
            let config = PipelineConfig {
                dilate_radius,
                k_maxima,
                corr_mode,
            };
            let results = ResultsFile::compute(&samples, config)?;
            write_results(&out, &results)?;
            let fallbacks = results
                .frames
                .iter()
                .filter(|f| f.result.fallback_used)
                .count();
            println!(
                "selected {} frames ({} fallbacks) -> {}",
                results.frames.len(),
                fallbacks,
                out.display()
            );
        }
        Command::Evaluate {
            manifest,
            results,
            spacing,
            std,
            contour_samples,
            out,
            json,
        } => {
            check_spacing(spacing)?;
            check_contour_samples(contour_samples)?;
            let samples = load_dataset(&manifest)?;
            let results = read_results(&results)?;
            let evals = results.evaluate(&samples, spacing, contour_samples)?;
            let report = aggregate(&evals, std)?;
            write_report(&report, &evals, &out, ReportFormat::from_path(&out))?;
            if let Some(path) = json {
                write_report(&report, &evals, &path, ReportFormat::Json)?;
            }
            for row in &report.rows {
                println!(
                    "{:<12} {:<9} n={:<4} HD {:.4} ± {:.4}  JM {:.4} ± {:.4}",
                    row.category.as_str(),
                    row.selector.as_str(),
                    row.n,
                    row.hd_mean,
                    row.hd_std,
                    row.jm_mean,
                    row.jm_std
                );
            }
        }
        Command::Synth {
            seed,
            frames,
            artifact,
            out,
        } => {
            let end = seed
                .checked_add(frames)
                .ok_or_else(|| Error::InvalidInput("seed range overflows".into()))?;
            let generated = (seed..end)
                .into_par_iter()
                .map(|s| generate_synthetic(&SynthSpec::new(s, artifact)))
                .collect::<Result<Vec<_>>>()?;
            let manifest = write_synthetic_dataset(&out, &generated)?;
            println!("wrote {} frames -> {}", generated.len(), manifest.display());
        }
        Command::Gold {
            manifest,
            spacing,
            contour_samples,
            out,
        } => {
            check_spacing(spacing)?;
            check_contour_samples(contour_samples)?;
            let samples = load_dataset(&manifest)?;
            let rows = samples
                .par_iter()
                .map(|s| {
                    let g = gold_standard(s, contour_samples)?;
                    Ok((s.frame_id.clone(), s.category, s.erels.len(), g))
                })
                .collect::<Result<Vec<_>>>()?;
            write_gold_csv(&out, &rows, spacing)?;
            println!(
                "gold standard for {} frames -> {}",
                rows.len(),
                out.display()
            );
        }
        Command::Plotdata { results, out } => {
            let results = read_results(&results)?;
            let written = write_plot_data(&out, &results)?;
            println!("wrote {} curve files -> {}", written.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}
