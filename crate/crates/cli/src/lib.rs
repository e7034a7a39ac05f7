//! The `svageval` command line: evaluate, validate, stats and synth.
//!
//! Exit codes: 0 on success, 1 on I/O, parse or usage errors, 2 when the
//! inputs load but are inconsistent.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use svageval::ingest::{
    compute_stats, load_ground_truth, load_split, validate_split, write_ground_truth,
    write_predictions, BundleStats, IngestError,
};
use svageval::report::{canonical_rank, write_report};
use svageval::synth::{generate_split, ScenarioSpec};
use svageval::{evaluate_all, Diagnostic, PipelineError, Tau};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "svageval",
    version,
    about = "Spatio-temporal video action grounding evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score predictions against ground truth and write a JSON report
    Evaluate(EvaluateArgs),
    /// Check ground truth (and optionally predictions) for inconsistencies
    Validate(ValidateArgs),
    /// Print annotation density per dataset
    Stats(StatsArgs),
    /// Write a synthetic split in the ingest formats
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "ovis,mot17,mot20")]
    datasets: Vec<String>,
    /// NMS IoU threshold in [0, 1], or `off`
    #[arg(long, default_value = "0.7", value_parser = parse_nms)]
    nms: Nms,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads, or `auto`
    #[arg(long, default_value = "auto", value_parser = parse_jobs)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Defaults to every dataset directory under --gt
    #[arg(long, value_delimiter = ',')]
    datasets: Option<Vec<String>>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long)]
    gt: PathBuf,
    /// Defaults to every dataset directory under --gt
    #[arg(long, value_delimiter = ',')]
    datasets: Option<Vec<String>>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    seed: u64,
    /// Receives `gt/` and `pred/` trees
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "ovis,mot17,mot20")]
    datasets: Vec<String>,
    #[arg(long, default_value_t = 2)]
    videos: u32,
    #[arg(long, default_value_t = 30)]
    frames: u32,
    #[arg(long, default_value_t = 3)]
    gt_tracks: u32,
    #[arg(long, default_value_t = 4)]
    queries: u32,
    #[arg(long, default_value_t = 0.0)]
    box_jitter: f64,
    #[arg(long, default_value_t = 0.0)]
    id_switch_prob: f64,
    #[arg(long, default_value_t = 0.0)]
    drop_prob: f64,
    #[arg(long, default_value_t = 0)]
    segment_noise: u32,
    #[arg(long, default_value_t = 0)]
    distractor_tracks: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Nms {
    Off,
    Threshold(f64),
}

fn parse_nms(s: &str) -> Result<Nms, String> {
    if s.eq_ignore_ascii_case("off") {
        return Ok(Nms::Off);
    }
    let t: f64 = s
        .parse()
        .map_err(|_| format!("expected a number or `off`, got {s:?}"))?;
    if !(0.0..=1.0).contains(&t) {
        return Err(format!("threshold must be in [0, 1], got {t}"));
    }
    Ok(Nms::Threshold(t))
}

fn parse_jobs(s: &str) -> Result<usize, String> {
    if s == "auto" {
        return Ok(0);
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("expected a positive integer or `auto`, got {s:?}")),
    }
}

/// Runs the command line with `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_IO } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Evaluate(a) => evaluate(&a, out, err),
        Command::Validate(a) => validate(&a, out, err),
        Command::Stats(a) => stats(&a, out),
        Command::Synth(a) => synth(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure { code, message }) => {
            let _ = writeln!(err, "error: {message}");
            code
        }
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        Failure {
            code: EXIT_IO,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: EXIT_IO,
            message: e.to_string(),
        }
    }
}

fn print_diagnostics(w: &mut dyn Write, diags: &[Diagnostic]) -> std::io::Result<()> {
    for d in diags {
        writeln!(w, "{d}")?;
    }
    Ok(())
}

fn evaluate(a: &EvaluateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| Failure {
            code: EXIT_IO,
            message: format!("cannot start worker pool: {e}"),
        })?;
    let nms = match a.nms {
        Nms::Off => None,
        Nms::Threshold(t) => Some(t),
    };
    log::info!(
        "evaluating {:?} with {} worker(s), nms {:?}",
        a.datasets,
        pool.current_num_threads(),
        nms
    );

    let outcome = pool.install(|| -> Result<_, Failure> {
        let mut splits = Vec::new();
        let mut load_diags = Vec::new();
        for ds in &a.datasets {
            let (split, d) = load_split(&a.gt, Some(&a.pred), ds)?;
            splits.push(split);
            load_diags.extend(d);
        }
        Ok((load_diags, evaluate_all(&splits, nms, &Tau::defaults())))
    })?;
    let (load_diags, evaluated) = outcome;
    print_diagnostics(err, &load_diags)?;
    let (report, diags) = match evaluated {
        Ok(r) => r,
        Err(PipelineError::Invalid { errors, .. }) => {
            print_diagnostics(err, &errors)?;
            return Ok(EXIT_INVALID);
        }
        Err(e) => {
            return Err(Failure {
                code: EXIT_INVALID,
                message: e.to_string(),
            })
        }
    };
    print_diagnostics(err, &diags)?;
    write_report(&report, &a.out).map_err(|e| Failure {
        code: EXIT_IO,
        message: e.to_string(),
    })?;
    for d in &report.datasets {
        writeln!(
            out,
            "{}: HOTA {} mIoU {}",
            d.dataset,
            svageval::numfmt::percent3(svageval::numfmt::sig6(d.spatial.hota)),
            svageval::numfmt::percent3(svageval::numfmt::sig6(d.temporal.miou)),
        )?;
    }
    writeln!(out, "m-HIoU: {}", report.m_hiou_display())?;
    Ok(EXIT_OK)
}

/// Dataset directories under `gt`, in canonical order.
fn discover_datasets(gt: &Path) -> Result<Vec<String>, Failure> {
    let entries = std::fs::read_dir(gt).map_err(|e| Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", gt.display()),
    })?;
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry?;
        if entry.file_type()?.is_dir() {
            names.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    if names.is_empty() {
        return Err(Failure {
            code: EXIT_IO,
            message: format!("{}: no dataset directories", gt.display()),
        });
    }
    names.sort_by_key(|n| canonical_rank(n));
    Ok(names)
}

fn validate(a: &ValidateArgs, out: &mut dyn Write, _err: &mut dyn Write) -> Result<i32, Failure> {
    let datasets = match &a.datasets {
        Some(d) => d.clone(),
        None => discover_datasets(&a.gt)?,
    };
    let mut diags = Vec::new();
    for ds in &datasets {
        let (split, load) = load_split(&a.gt, a.pred.as_deref(), ds)?;
        diags.extend(load);
        diags.extend(validate_split(&split));
    }
    print_diagnostics(out, &diags)?;
    Ok(if diags.is_empty() {
        EXIT_OK
    } else {
        EXIT_INVALID
    })
}

fn stats(a: &StatsArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let datasets = match &a.datasets {
        Some(d) => d.clone(),
        None => discover_datasets(&a.gt)?,
    };
    let mut rows: Vec<(String, BundleStats)> = Vec::new();
    for ds in &datasets {
        let bundle = load_ground_truth(&a.gt, ds)?;
        rows.push((ds.clone(), compute_stats(&bundle)?));
    }
    let parts: Vec<BundleStats> = rows.iter().map(|(_, s)| *s).collect();
    let overall = BundleStats::combine(&parts)?;
    let width = rows
        .iter()
        .map(|(n, _)| n.len())
        .max()
        .unwrap_or(0)
        .max("overall".len());
    writeln!(
        out,
        "{:<width$}  {:>7}  {:>8}  {:>7}  {:>13}  {:>12}",
        "dataset", "videos", "queries", "tracks", "queries/video", "tracks/video"
    )?;
    for (name, s) in rows
        .iter()
        .map(|(n, s)| (n.as_str(), s))
        .chain([("overall", &overall)])
    {
        writeln!(
            out,
            "{:<width$}  {:>7}  {:>8}  {:>7}  {:>13}  {:>12}",
            name,
            s.videos,
            s.queries,
            s.tracks,
            s.queries_per_video_display(),
            s.tracks_per_video_display()
        )?;
    }
    Ok(EXIT_OK)
}

fn synth(a: &SynthArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let spec = ScenarioSpec {
        seed: a.seed,
        frames: a.frames,
        gt_tracks: a.gt_tracks,
        queries: a.queries,
        box_jitter: a.box_jitter,
        id_switch_prob: a.id_switch_prob,
        drop_prob: a.drop_prob,
        segment_noise: a.segment_noise,
        distractor_tracks: a.distractor_tracks,
    };
    let names: Vec<&str> = a.datasets.iter().map(String::as_str).collect();
    let generated = generate_split(&spec, &names, a.videos).map_err(|e| Failure {
        code: EXIT_IO,
        message: e.to_string(),
    })?;
    let gt_root = a.out.join("gt");
    let pred_root = a.out.join("pred");
    for (name, bundle, preds) in &generated {
        write_ground_truth(&gt_root, name, bundle)?;
        write_predictions(&pred_root, name, preds)?;
    }
    writeln!(
        out,
        "wrote {} dataset(s) x {} video(s) to {} and {}",
        generated.len(),
        a.videos,
        gt_root.display(),
        pred_root.display()
    )?;
    Ok(EXIT_OK)
}
