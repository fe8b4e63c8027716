//! Command-line front end for the `fuchsian` library.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use fuchsian::config::{Method, RunConfig};
use fuchsian::dimension::{build_report, reference_drift, DriftInput};
use fuchsian::entropy::{closed_form_bound, entropy_table, ClosedForm, EntropyBound, EntropySource, KeyConfig};
use fuchsian::groups::{preset, verify_relators, GroupPreset, Word};
use fuchsian::harness::{kkk_monotone, render_table, table1_harness, HarnessConfig, RowStatus};
use fuchsian::persist::{Appender, ResultRecord};
use fuchsian::render::{measure_svg, orbit_svg, tessellation_svg, word_orbit, RenderOptions};
use fuchsian::spectral::{spectral_drift, OperatorGrid};
use fuchsian::walk::{
    estimate_drift_mc, exact_mean_displacement, sample_harmonic_measure, WalkConfig,
    DEFAULT_ENUMERATION_BUDGET,
};

#[derive(Parser)]
#[command(name = "fuchsian", version, about = "Random walks on Fuchsian groups")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print results (and errors) as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Write the primary output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Append a JSON-lines record of the run to this file.
    #[arg(long, global = true)]
    results: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect a group preset.
    Group {
        #[command(subcommand)]
        action: GroupAction,
    },
    /// Estimate the drift.
    Drift {
        #[arg(value_enum)]
        method: DriftMethodArg,
        id: String,
        #[command(flatten)]
        params: DriftParams,
    },
    /// Entropies H(ν^{*n})/n by exact enumeration.
    Entropy {
        id: String,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Dimension bound h/ℓ and singularity verdict.
    Dimension {
        id: String,
        /// free_group_rank4 | free_product_Z2cubed | enumeration[:n] | external:<value>[:<provenance>]
        #[arg(long)]
        entropy: String,
        /// table1 | mc | spectral | external:<value>[:<provenance>]
        #[arg(long)]
        drift: String,
        #[command(flatten)]
        params: DriftParams,
    },
    /// Monte Carlo comparison with the published triangle-group drift table.
    Table1 {
        /// Trials per row (default from FUCHSIAN_BUDGET, else 10000).
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Draw an SVG picture.
    Render {
        #[arg(value_enum)]
        kind: RenderKind,
        id: String,
        #[arg(long)]
        radius: Option<usize>,
        /// Word for the orbit picture, e.g. "g1 g2 g1 g3".
        #[arg(long)]
        word: Option<String>,
        /// Draw a random orbit of this many steps instead of a fixed word.
        #[arg(long)]
        random_steps: Option<usize>,
    },
}

#[derive(Subcommand)]
enum GroupAction {
    Show { id: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum DriftMethodArg {
    Mc,
    Exact,
    Spectral,
}

#[derive(Clone, Copy, ValueEnum)]
enum RenderKind {
    Tessellation,
    Orbit,
    Measure,
}

#[derive(Args)]
struct DriftParams {
    /// Walk length.
    #[arg(long)]
    n: Option<usize>,
    /// Number of independent walks.
    #[arg(long)]
    trials: Option<usize>,
    /// Spectral grid size.
    #[arg(long)]
    m: Option<usize>,
    /// Spectral differentiation step.
    #[arg(long)]
    h: Option<f64>,
}

enum Failure {
    Usage(String),
    Compute(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Compute(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Compute(m) => m,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn compute(e: impl std::fmt::Display) -> Failure {
    Failure::Compute(e.to_string())
}

/// What a command produced: text for humans, JSON for `--json` and records.
struct Output {
    kind: &'static str,
    text: String,
    value: Value,
    /// Set when the primary output is a document (SVG, CSV) rather than a report.
    document: bool,
}

fn load_preset(id: &str) -> Result<GroupPreset, Failure> {
    preset(id).map_err(usage)
}

fn apply_params(config: &mut RunConfig, p: &DriftParams) {
    if let Some(n) = p.n {
        config.steps = n;
    }
    if let Some(t) = p.trials {
        config.trials = t;
    }
    if let Some(m) = p.m {
        config.spectral_m = m;
    }
    if let Some(h) = p.h {
        config.spectral_h = h;
    }
}

fn key_config(config: &RunConfig) -> KeyConfig {
    KeyConfig {
        grid: config.key_grid,
        audit_tolerance: config.audit_tolerance,
        ..KeyConfig::default()
    }
}

fn group_show(id: &str) -> Result<Output, Failure> {
    let p = load_preset(id)?;
    let report = verify_relators(&p.gens, 1e-9);
    let mut text = format!("group {}\n", p.id);
    for g in &p.gens.generators {
        text.push_str(&format!(
            "  {:<4} {}  displacement {:.12}{}\n",
            g.label,
            g.map,
            g.map.displacement(),
            if g.is_involution { "  involution" } else { "" }
        ));
    }
    for c in &report.checks {
        text.push_str(&format!(
            "  relator {:<40} deviation {:.3e}  {}\n",
            c.word,
            c.deviation,
            if c.pass { "PASS" } else { "FAIL" }
        ));
    }
    text.push_str(&format!(
        "relator check {} at {:e}\n",
        if report.pass() { "PASS" } else { "FAIL" },
        report.tolerance
    ));
    for w in &p.warnings {
        text.push_str(&format!("warning: {w}\n"));
    }
    Ok(Output {
        kind: "group",
        text,
        value: json!({
            "id": p.id,
            "generators": p.gens.generators,
            "relators": report,
            "pass": report.pass(),
            "polygon_angles": p.polygon.angles,
            "warnings": p.warnings,
        }),
        document: false,
    })
}

fn drift(method: DriftMethodArg, config: &RunConfig) -> Result<Output, Failure> {
    let p = load_preset(&config.group)?;
    let (est, extra) = match method {
        DriftMethodArg::Mc => {
            let walk = WalkConfig::new(config.steps, config.trials, config.seed);
            (estimate_drift_mc(&p.gens, &walk).map_err(compute)?, None)
        }
        DriftMethodArg::Exact => (
            exact_mean_displacement(&p.gens, config.steps, DEFAULT_ENUMERATION_BUDGET).map_err(compute)?,
            None,
        ),
        DriftMethodArg::Spectral => {
            let grid = OperatorGrid::new(config.spectral_m).map_err(usage)?;
            let (est, curve) = spectral_drift(&p.gens, &grid, config.spectral_h).map_err(compute)?;
            if let Some(path) = &config.csv_path {
                std::fs::write(path, curve.to_csv()).map_err(compute)?;
            }
            (est, Some(curve))
        }
    };
    let mut text = format!(
        "{} drift ({}): {}\nstderr {}\nn {} trials {}\n",
        config.group,
        est.method.as_str(),
        est.mean,
        est.stderr,
        est.n,
        est.trials
    );
    if let Some(r) = reference_drift(&config.group) {
        text.push_str(&format!("reference interval [{}, {}] ({})\n", r.lower, r.upper, r.citation));
    }
    Ok(Output {
        kind: "drift",
        text,
        value: json!({ "group": config.group, "estimate": est, "pressure_curve": extra }),
        document: false,
    })
}

fn entropy(config: &RunConfig) -> Result<Output, Failure> {
    let p = load_preset(&config.group)?;
    let table = entropy_table(&p.gens, config.entropy_n_max, &key_config(config)).map_err(compute)?;
    let csv = table.to_csv();
    if let Some(path) = &config.csv_path {
        std::fs::write(path, &csv).map_err(compute)?;
    }
    Ok(Output {
        kind: "entropy",
        text: csv,
        value: json!({ "group": config.group, "table": table }),
        document: true,
    })
}

fn parse_external(spec: &str) -> Result<(f64, String), Failure> {
    let rest = spec.strip_prefix("external:").ok_or_else(|| usage(format!("bad source `{spec}`")))?;
    let (value, provenance) = rest.split_once(':').unwrap_or((rest, "user supplied"));
    let value: f64 = value
        .parse()
        .map_err(|_| usage(format!("bad value in `{spec}`")))?;
    Ok((value, provenance.to_string()))
}

fn entropy_source(spec: &str, p: &GroupPreset, config: &RunConfig) -> Result<EntropyBound, Failure> {
    match spec {
        "free_group" | "free_group_rank4" => Ok(closed_form_bound(ClosedForm::FreeGroupRank4)),
        "free_product" | "free_product_Z2cubed" => Ok(closed_form_bound(ClosedForm::FreeProductZ2cubed)),
        s if s == "enumeration" || s.starts_with("enumeration:") => {
            let n = match s.strip_prefix("enumeration:") {
                Some(n) => n.parse().map_err(|_| usage(format!("bad n in `{s}`")))?,
                None => config.entropy_n_max,
            };
            let table = entropy_table(&p.gens, n, &key_config(config)).map_err(compute)?;
            let best = table
                .bounds()
                .into_iter()
                .min_by(|a, b| a.value.total_cmp(&b.value))
                .ok_or_else(|| usage("enumeration needs n >= 1"))?;
            Ok(best)
        }
        s if s.starts_with("external:") => {
            let (value, provenance) = parse_external(s)?;
            Ok(EntropyBound {
                value,
                n: 0,
                source: EntropySource::External { provenance },
            })
        }
        s => Err(usage(format!("unknown entropy source `{s}`"))),
    }
}

fn drift_source(spec: &str, p: &GroupPreset, config: &RunConfig) -> Result<DriftInput, Failure> {
    match spec {
        "table1" | "reference" => {
            let r = reference_drift(&config.group)
                .ok_or_else(|| usage(format!("no reference drift for `{}`", config.group)))?;
            Ok(DriftInput::ExternalRigorous {
                lower: r.lower,
                provenance: r.citation,
            })
        }
        "mc" => {
            let walk = WalkConfig::new(config.steps, config.trials, config.seed);
            Ok(DriftInput::Statistical(estimate_drift_mc(&p.gens, &walk).map_err(compute)?))
        }
        "spectral" => {
            let grid = OperatorGrid::new(config.spectral_m).map_err(usage)?;
            let (est, _) = spectral_drift(&p.gens, &grid, config.spectral_h).map_err(compute)?;
            Ok(DriftInput::Statistical(est))
        }
        s if s.starts_with("external:") => {
            let (lower, provenance) = parse_external(s)?;
            Ok(DriftInput::ExternalRigorous { lower, provenance })
        }
        s => Err(usage(format!("unknown drift source `{s}`"))),
    }
}

fn dimension(entropy_spec: &str, drift_spec: &str, config: &RunConfig) -> Result<Output, Failure> {
    let p = load_preset(&config.group)?;
    let h = entropy_source(entropy_spec, &p, config)?;
    let d = drift_source(drift_spec, &p, config)?;
    let report = build_report(&config.group, &p.gens, h, d).map_err(usage)?;
    Ok(Output {
        kind: "dimension",
        text: report.render_text(),
        value: json!({ "report": report, "verdict_label": report.verdict_label() }),
        document: false,
    })
}

fn table1(budget: Option<usize>, steps: Option<usize>, config: &RunConfig) -> Result<Output, Failure> {
    let mut h = HarnessConfig::from_env();
    h.seed = config.seed;
    if let Some(b) = budget {
        h.trials = b;
    }
    if let Some(s) = steps {
        h.steps = s;
    }
    if h.trials == 0 || h.steps == 0 {
        return Err(usage("budget and steps must be positive"));
    }
    let rows = table1_harness(&h, |r| {
        eprintln!("({},{},{}) {:.9} ± {:.2e} {}", r.k, r.l, r.m, r.mc_mean, r.mc_stderr, r.status)
    })
    .map_err(compute)?;
    let consistent = rows.iter().filter(|r| r.status == RowStatus::Consistent).count();
    let monotone = kkk_monotone(&rows);
    let mut text = render_table(&rows);
    text.push_str(&format!(
        "{consistent}/{} rows CONSISTENT; (k,k,k) means increasing: {monotone}\n",
        rows.len()
    ));
    Ok(Output {
        kind: "table1",
        text,
        value: json!({ "config": h, "rows": rows, "consistent": consistent, "kkk_monotone": monotone }),
        document: false,
    })
}

fn render(kind: RenderKind, word: Option<&str>, random_steps: Option<usize>, config: &RunConfig) -> Result<Output, Failure> {
    let p = load_preset(&config.group)?;
    let options = RenderOptions {
        canvas: config.canvas_size,
        stroke_width: config.stroke_width,
        ..RenderOptions::default()
    };
    let (svg, value) = match kind {
        RenderKind::Tessellation => {
            let t = tessellation_svg(&p, config.render_radius, &options).map_err(compute)?;
            let count = t.tile_count;
            (t.svg, json!({ "kind": "tessellation", "radius": config.render_radius, "tiles": count }))
        }
        RenderKind::Orbit => {
            let points = match random_steps {
                Some(n) => {
                    let walker = fuchsian::walk::Walker::new(&p.gens).map_err(compute)?;
                    let mut rng = fuchsian::walk::trial_rng(config.seed, 0);
                    let (_, path) = walker.trajectory(n, &mut rng);
                    path.iter()
                        .map(|g| g.apply(fuchsian::DiskPoint::ORIGIN))
                        .collect()
                }
                None => {
                    let w: Word = word.unwrap_or(&config.orbit_word).parse().map_err(usage)?;
                    word_orbit(&p.gens, &w).map_err(usage)?
                }
            };
            let pts: Vec<[f64; 2]> = points.iter().map(|z| [z.re(), z.im()]).collect();
            (orbit_svg(&points, &options).map_err(compute)?, json!({ "kind": "orbit", "points": pts }))
        }
        RenderKind::Measure => {
            let sample = sample_harmonic_measure(&p.gens, config.measure_steps, config.measure_samples, config.seed)
                .map_err(compute)?;
            if let Some(w) = &sample.warning {
                eprintln!("warning: {w}");
            }
            let value = json!({
                "kind": "measure",
                "n": sample.n,
                "converged_fraction": sample.converged_fraction,
                "warning": sample.warning,
            });
            (measure_svg(&sample, 256, &options), value)
        }
    };
    if let Some(path) = &config.svg_path {
        std::fs::write(path, &svg).map_err(compute)?;
    }
    Ok(Output {
        kind: "render",
        text: svg,
        value,
        document: true,
    })
}

fn build_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(usage)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(path) = &cli.results {
        config.results_path = Some(path.display().to_string());
    }
    match &cli.command {
        Command::Group { action: GroupAction::Show { id } } => config.group = id.clone(),
        Command::Drift { method, id, params } => {
            config.group = id.clone();
            config.method = match method {
                DriftMethodArg::Mc => Method::Mc,
                DriftMethodArg::Exact => Method::Exact,
                DriftMethodArg::Spectral => Method::Spectral,
            };
            apply_params(&mut config, params);
        }
        Command::Entropy { id, n_max } => {
            config.group = id.clone();
            if let Some(n) = n_max {
                config.entropy_n_max = *n;
            }
        }
        Command::Dimension { id, params, .. } => {
            config.group = id.clone();
            apply_params(&mut config, params);
        }
        Command::Table1 { .. } => {}
        Command::Render { id, radius, .. } => {
            config.group = id.clone();
            if let Some(r) = radius {
                config.render_radius = *r;
            }
        }
    }
    config.validate().map_err(usage)?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let config = build_config(cli)?;
    let results = config
        .results_path
        .as_ref()
        .map(|p| Appender::open(Path::new(p)))
        .transpose()
        .map_err(usage)?;
    let started = Instant::now();
    let out = match &cli.command {
        Command::Group { action: GroupAction::Show { id } } => group_show(id)?,
        Command::Drift { method, .. } => drift(*method, &config)?,
        Command::Entropy { .. } => entropy(&config)?,
        Command::Dimension { entropy, drift, .. } => dimension(entropy, drift, &config)?,
        Command::Table1 { budget, steps } => table1(*budget, *steps, &config)?,
        Command::Render {
            kind,
            word,
            random_steps,
            ..
        } => render(*kind, word.as_deref(), *random_steps, &config)?,
    };
    if let Some(appender) = &results {
        let mut record = ResultRecord::new(&config, out.kind, &out.value).map_err(compute)?;
        if config.record_wallclock {
            record.wallclock_s = Some(started.elapsed().as_secs_f64());
        }
        appender.append(&record).map_err(compute)?;
    }
    let body = if cli.json && !out.document {
        let mut s = serde_json::to_string_pretty(&out.value).map_err(compute)?;
        s.push('\n');
        s
    } else {
        out.text
    };
    match &cli.out {
        Some(path) => std::fs::write(path, body).map_err(compute)?,
        None => print!("{body}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if cli.json {
                let kind = if f.code() == 2 { "usage" } else { "computation" };
                println!("{}", json!({ "error": f.message(), "kind": kind, "exit_code": f.code() }));
            } else {
                eprintln!("error: {}", f.message());
            }
            ExitCode::from(f.code())
        }
    }
}
