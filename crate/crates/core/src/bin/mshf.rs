use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mshf::evaluation::{fitting_error, generate_scene, SceneSpec};
use mshf::io::{
    apply_config_text, decision_csv, decision_graph_svg, labels_text, modes_json, parse_adelaide, parse_decision_csv,
    parse_labels, read_text, write_atomic, PointFile,
};
use mshf::pipeline::{fit, RunConfig};
use mshf::ModelKind;

/// Multi-structure model fitting by mode seeking on hypergraphs.
#[derive(Parser)]
#[command(name = "mshf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a labelled synthetic scene as a point file.
    Generate {
        /// Scene template, e.g. 3-lines-3d, 5-circles, star5, unbalanced-3-lines:8.0, homography, two-view.
        template: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Fit a point file; writes labels.txt, modes.json and decision_graph.csv.
    Fit(FitArgs),
    /// Print the fitting error (percent) of estimated labels against the truth.
    Eval {
        labels: PathBuf,
        /// Labels file or labelled point file.
        truth: PathBuf,
    },
    /// Render a decision-graph CSV as SVG.
    PlotDecisionGraph {
        csv: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct FitArgs {
    input: PathBuf,
    /// `key = value` configuration file, applied before any flag.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input is an AdelaideRMF correspondence file (fundamental kind unless overridden).
    #[arg(long)]
    adelaide: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    hypothesis_count: Option<String>,
    #[arg(long)]
    k_fraction: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    /// mshf1 or mshf2.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    xi: Option<String>,
    /// Positive length or `auto`.
    #[arg(long)]
    proximity_sigma: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// dice, jaccard, overlap or sum-ratio.
    #[arg(long)]
    neighbor_overlap: Option<String>,
    /// unrestricted or neighbor-max.
    #[arg(long)]
    peak_rule: Option<String>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

struct Failure {
    code: u8,
    message: String,
}

fn usage(e: impl Display) -> Failure {
    Failure { code: 2, message: e.to_string() }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate { template, seed, output } => generate(&template, seed, &output),
        Command::Fit(args) => run_fit(&args),
        Command::Eval { labels, truth } => eval(&labels, &truth),
        Command::PlotDecisionGraph { csv, output } => plot(&csv, &output),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn generate(template: &str, seed: u64, output: &Path) -> Result<(), Failure> {
    let spec: SceneSpec = template.parse().map_err(usage)?;
    let scene = generate_scene(spec, seed).map_err(usage)?;
    let data = scene.data.with_labels(scene.true_labels).map_err(usage)?;
    let pf = PointFile::new(scene.kind, data);
    let text = pf.to_text(&[format!("template = {spec}"), format!("seed = {seed}")]);
    write_atomic(output, text.as_bytes()).map_err(|e| Failure { code: 1, message: e.to_string() })
}

fn run_fit(args: &FitArgs) -> Result<(), Failure> {
    let text = read_text(&args.input).map_err(usage)?;
    let (kind, data) = if args.adelaide {
        (ModelKind::Fundamental, parse_adelaide(&text).map_err(usage)?)
    } else {
        let pf = PointFile::parse(&text).map_err(usage)?;
        (pf.kind, pf.data)
    };

    let mut cfg = RunConfig::new(kind);
    if let Some(path) = &args.config {
        let text = read_text(path).map_err(usage)?;
        apply_config_text(&mut cfg, &text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    let flags = [
        ("kind", &args.kind),
        ("hypothesis_count", &args.hypothesis_count),
        ("k_fraction", &args.k_fraction),
        ("epsilon", &args.epsilon),
        ("variant", &args.variant),
        ("xi", &args.xi),
        ("proximity_sigma", &args.proximity_sigma),
        ("rng_seed", &args.seed),
        ("neighbor_overlap", &args.neighbor_overlap),
        ("peak_rule", &args.peak_rule),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v).map_err(usage)?;
        }
    }
    for kv in &args.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k, v).map_err(usage)?;
    }

    let result = fit(&data, &cfg).map_err(|e| Failure { code: 3, message: format!("pipeline error: {e}") })?;

    let write = |name: &str, body: &str| {
        write_atomic(&args.out_dir.join(name), body.as_bytes()).map_err(|e| Failure { code: 1, message: e.to_string() })
    };
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Failure { code: 1, message: format!("{}: {e}", args.out_dir.display()) })?;
    write("labels.txt", &labels_text(&result.labels, &result.config))?;
    write("modes.json", &modes_json(&result).map_err(|e| Failure { code: 1, message: e.to_string() })?)?;
    write("decision_graph.csv", &decision_csv(&result))?;
    println!("{} model instances, {} of {} vertices retained", result.modes.len(), result.reduced.len(), result.hypergraph.len());
    Ok(())
}

fn eval(labels: &Path, truth: &Path) -> Result<(), Failure> {
    let est = parse_labels(&read_text(labels).map_err(usage)?).map_err(|e| usage(format!("{}: {e}", labels.display())))?;
    let gt = parse_labels(&read_text(truth).map_err(usage)?).map_err(|e| usage(format!("{}: {e}", truth.display())))?;
    let err = fitting_error(&est, &gt).map_err(usage)?;
    println!("{err:.2}");
    Ok(())
}

fn plot(csv: &Path, output: &Path) -> Result<(), Failure> {
    let rows = parse_decision_csv(&read_text(csv).map_err(usage)?).map_err(|e| usage(format!("{}: {e}", csv.display())))?;
    write_atomic(output, decision_graph_svg(&rows).as_bytes()).map_err(|e| Failure { code: 1, message: e.to_string() })
}
