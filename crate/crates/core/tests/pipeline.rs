use erel_select::dataio::{
    generate_synthetic, load_dataset, read_results, write_results, write_synthetic_dataset,
    Artifact, ResultsFile, SynthSpec,
};
use erel_select::ellipsefit::DEFAULT_CONTOUR_SAMPLES;
use erel_select::masks::rasterize;
use erel_select::metrics::{aggregate, Selector, StdKind};
use erel_select::selection::gold_standard_index;
use erel_select::{Category, CorrMode, PipelineConfig};

#[test]
fn gold_standard_is_designed_lumen_without_artifacts() {
    for seed in 0..20 {
        let f = generate_synthetic(&SynthSpec::new(seed, Artifact::None)).unwrap();
        assert_eq!(
            gold_standard_index(&f.sample, DEFAULT_CONTOUR_SAMPLES).unwrap(),
            f.lumen_index,
            "seed {seed}"
        );
    }
}

#[test]
fn distinct_seeds_give_distinct_frames() {
    let a = generate_synthetic(&SynthSpec::new(1, Artifact::ShadowSector)).unwrap();
    let b = generate_synthetic(&SynthSpec::new(2, Artifact::ShadowSector)).unwrap();
    assert_ne!(a.sample.frame, b.sample.frame);
    assert_eq!(
        a,
        generate_synthetic(&SynthSpec::new(1, Artifact::ShadowSector)).unwrap()
    );
}

#[test]
fn dataset_round_trip_preserves_masks_and_selection() {
    let dir = tempfile::tempdir().unwrap();
    let frames: Vec<_> = (0..3)
        .map(|s| generate_synthetic(&SynthSpec::new(s, Artifact::BifurcationNotch)).unwrap())
        .collect();
    let manifest = write_synthetic_dataset(dir.path(), &frames).unwrap();
    let loaded = load_dataset(&manifest).unwrap();
    for (orig, back) in frames.iter().zip(&loaded) {
        let (w, h) = (back.width(), back.height());
        for (a, b) in orig.sample.erels.iter().zip(&back.erels) {
            assert_eq!(rasterize(a, w, h).unwrap(), rasterize(b, w, h).unwrap());
        }
    }

    let cfg = PipelineConfig {
        corr_mode: CorrMode::Gray,
        ..Default::default()
    };
    let direct: Vec<_> = frames.iter().map(|f| f.sample.clone()).collect();
    let r1 = ResultsFile::compute(&direct, cfg).unwrap();
    let r2 = ResultsFile::compute(&loaded, cfg).unwrap();
    assert_eq!(r1, r2);

    let path = dir.path().join("results.json");
    write_results(&path, &r1).unwrap();
    // Floats must survive the text round trip bit for bit.
    assert_eq!(read_results(&path).unwrap(), r1);
}

#[test]
fn aggregate_counts_cover_dataset() {
    let mut samples = Vec::new();
    for (i, artifact) in [
        Artifact::None,
        Artifact::BifurcationNotch,
        Artifact::ShadowSector,
    ]
    .into_iter()
    .enumerate()
    {
        for seed in 0..3 {
            samples.push(
                generate_synthetic(&SynthSpec::new(10 * i as u64 + seed, artifact))
                    .unwrap()
                    .sample,
            );
        }
    }
    let results = ResultsFile::compute(&samples, PipelineConfig::default()).unwrap();
    let evals = results
        .evaluate(&samples, 0.1, DEFAULT_CONTOUR_SAMPLES)
        .unwrap();
    let report = aggregate(&evals, StdKind::Population).unwrap();
    assert_eq!(report.total, 9);
    let general = report.row(Category::General, Selector::Proposed).unwrap();
    assert_eq!(general.n, 9);
    let per_category: usize = [
        Category::NoArtifact,
        Category::Bifurcation,
        Category::Shadow,
    ]
    .iter()
    .map(|&c| report.row(c, Selector::Proposed).unwrap().n)
    .sum();
    assert_eq!(per_category, 9);
    for e in &evals {
        assert!(e.hd >= 0.0 && (0.0..=1.0).contains(&e.jm));
        assert!(e.gold_hd <= e.hd + 1e-12);
    }
}
