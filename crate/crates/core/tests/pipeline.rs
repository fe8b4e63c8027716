use fuchsian::config::RunConfig;
use fuchsian::dimension::{build_report, reference_drift, table1_entry, DriftInput, Verdict, TABLE1};
use fuchsian::entropy::{closed_form_bound, entropy_table, ClosedForm, KeyConfig};
use fuchsian::groups::{preset, Word};
use fuchsian::persist::{load_results, Appender, ResultRecord};
use fuchsian::render::{measure_svg, orbit_svg, tessellation_svg, word_orbit, RenderOptions};
use fuchsian::walk::{estimate_drift_mc, sample_harmonic_measure, WalkConfig};

#[test]
fn dimension_bound_falls_along_the_equilateral_family() {
    let h = ClosedForm::FreeProductZ2cubed.value();
    let mut last = f64::INFINITY;
    for k in 4..=10 {
        let e = table1_entry(k, k, k).unwrap();
        let gens = preset(&e.group_id()).unwrap().gens;
        let report = build_report(
            &e.group_id(),
            &gens,
            closed_form_bound(ClosedForm::FreeProductZ2cubed),
            DriftInput::ExternalRigorous {
                lower: e.lower,
                provenance: e.citation(),
            },
        )
        .unwrap();
        assert!(report.is_consistent());
        assert!((report.dim_upper - h / e.lower).abs() < 1e-15);
        assert!(report.dim_upper < last);
        assert_eq!(report.verdict == Verdict::Singular, k >= 8, "k = {k}");
        last = report.dim_upper;
    }
}

#[test]
fn enumerated_entropy_gives_a_weaker_bound() {
    let gens = preset("triangle:8,8,8").unwrap().gens;
    let table = entropy_table(&gens, 8, &KeyConfig::default()).unwrap();
    let best = table.bounds().into_iter().last().unwrap();
    assert!(best.value > ClosedForm::FreeProductZ2cubed.value());
    let reference = reference_drift("triangle:8,8,8").unwrap();
    let report = build_report(
        "triangle:8,8,8",
        &gens,
        best,
        DriftInput::ExternalRigorous {
            lower: reference.lower,
            provenance: reference.citation,
        },
    )
    .unwrap();
    assert_eq!(report.verdict, Verdict::Inconclusive);
}

#[test]
fn statistical_reports_round_trip_through_the_store() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.jsonl");
    let config: RunConfig = format!("group = bolza\nsteps = 100\ntrials = 200\nresults_path = {}\n", path.display())
        .parse()
        .unwrap();
    let gens = preset(&config.group).unwrap().gens;
    let drift = estimate_drift_mc(&gens, &WalkConfig::new(config.steps, config.trials, config.seed)).unwrap();
    let report = build_report(
        "bolza",
        &gens,
        closed_form_bound(ClosedForm::FreeGroupRank4),
        DriftInput::Statistical(drift),
    )
    .unwrap();
    assert!(report.confidence_note.starts_with("statistical"));

    let appender = Appender::open(&path).unwrap();
    appender.append(&ResultRecord::new(&config, "drift", drift).unwrap()).unwrap();
    appender.append(&ResultRecord::new(&config, "dimension", &report).unwrap()).unwrap();
    let back = load_results(&path).unwrap();
    assert_eq!(back.len(), 2);
    assert_eq!(back[0].config, config);
    let drift_back: fuchsian::walk::DriftEstimate = serde_json::from_value(back[0].payload.clone()).unwrap();
    assert_eq!(drift_back, drift);
    let report_back: fuchsian::dimension::DimensionReport = serde_json::from_value(back[1].payload.clone()).unwrap();
    assert_eq!(report_back, report);
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    let mut config = RunConfig::default();
    config.group = "triangle:3,7,2".into();
    config.spectral_m = 1024;
    config.svg_path = Some("tiles.svg".into());
    std::fs::write(&path, config.to_config_string()).unwrap();
    assert_eq!(RunConfig::load(&path).unwrap(), config);
    assert!(RunConfig::load(&dir.path().join("missing.conf")).is_err());
}

fn well_formed(svg: &str) -> roxmltree::Document<'_> {
    let doc = roxmltree::Document::parse(svg).expect("SVG parses as XML");
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    doc
}

#[test]
fn figures_are_well_formed_and_deterministic() {
    let options = RenderOptions::default();
    let g = preset("triangle:4,4,4").unwrap();
    let a = tessellation_svg(&g, 3, &options).unwrap();
    let b = tessellation_svg(&g, 3, &options).unwrap();
    assert_eq!(a.svg, b.svg);
    well_formed(&a.svg);

    let word: Word = "g1 g2 g1 g3".parse().unwrap();
    let points = word_orbit(&g.gens, &word).unwrap();
    assert_eq!(points.len(), 5);
    let orbit = orbit_svg(&points, &options).unwrap();
    let doc = well_formed(&orbit);
    let markers = doc.descendants().filter(|n| matches!(n.attribute("class"), Some("base" | "step"))).count();
    assert_eq!(markers, 5);
    assert!(word_orbit(&g.gens, &"g4".parse().unwrap()).is_err());

    let sample = sample_harmonic_measure(&preset("bolza").unwrap().gens, 40, 2000, 1).unwrap();
    let rose = measure_svg(&sample, 64, &options);
    assert_eq!(rose, measure_svg(&sample, 64, &options));
    let doc = well_formed(&rose);
    let bars = doc.descendants().filter(|n| n.attribute("class") == Some("bin")).count();
    assert_eq!(bars, sample.histogram(64).iter().filter(|&&h| h > 0.0).count());
    for n in doc.descendants().filter(|n| n.has_tag_name("polygon")) {
        for pair in n.attribute("points").unwrap().split_whitespace() {
            let (x, y) = pair.split_once(',').unwrap();
            let (x, y): (f64, f64) = (x.parse().unwrap(), y.parse().unwrap());
            assert!((0.0..=800.0).contains(&x) && (0.0..=800.0).contains(&y));
        }
    }
}

#[test]
fn table_is_complete() {
    assert_eq!(TABLE1.len(), 23);
    for e in &TABLE1 {
        assert!(e.lower < e.upper && e.upper - e.lower < 0.02);
        assert!(preset(&e.group_id()).is_ok());
    }
}
