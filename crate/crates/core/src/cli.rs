//! Command-line front end: `synth`, `fit`, `detect`, `eval`, `sweep`.
//!
//! Exit codes: 0 on success, 1 on usage/configuration errors, 2 on runtime
//! errors.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::baselines::{scalar_detect_stream, scalar_series, ScalarStatistic};
use crate::detect::{
    detect_stream, trace_to_csv, DetectConfig, DetectOutcome, DetectReport, Method, ResetPolicy,
    SamplingRule,
};
use crate::error::{Error, Result};
use crate::evalkit::{precision_recall, pr_to_csv, run_sweep, DetectionList, EventList, SweepConfig};
use crate::fit::{fit_ghrg, FitConfig};
use crate::ghrg::BetaParams;
use crate::graph::{parse_edge_list_with_policy, serialize_edge_list, window_at, GapPolicy};
use crate::synth::{generate_sequence, ChangeKind, ChangeSpec};

#[derive(Parser)]
#[command(
    name = "netcpd",
    version,
    about = "Online change-point detection for evolving networks"
)]
struct Cli {
    /// Cap on parallel worker threads (bootstrap replicates, sweep runs).
    /// Does not affect results.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic sequence with a planted change point.
    Synth(SynthArgs),
    /// Fit the network model to one window and write the tree document.
    Fit(FitArgs),
    /// Scan a sequence for change points.
    Detect(DetectArgs),
    /// Score a detection report against known events.
    Eval(EvalArgs),
    /// Error-rate sweep over change kinds and magnitudes.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// merge | split | form | fragment
    #[arg(long)]
    kind: String,
    /// Free structural index before the change (pinned by kind if omitted).
    #[arg(long)]
    mu_before: Option<f64>,
    /// Free structural index after the change.
    #[arg(long)]
    mu_after: Option<f64>,
    #[arg(long, default_value_t = 30)]
    n: usize,
    #[arg(long, default_value_t = 0.2)]
    density: f64,
    /// Group sizes as `a,b`.
    #[arg(long, default_value = "15,15")]
    groups: String,
    #[arg(long, default_value_t = 12)]
    length: usize,
    /// First snapshot drawn from the after-state.
    #[arg(long = "t-change", default_value_t = 8)]
    t_change: i64,
    /// Fixed within-A probability for form/fragment (defaults to density).
    #[arg(long)]
    p_fix: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (seq.tsv, ground_truth.json, events.csv).
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct ModelFlags {
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long = "burn-in", default_value_t = 200)]
    burn_in: usize,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 5)]
    interval: usize,
    #[arg(long, default_value_t = 4)]
    chains: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ModelFlags {
    fn fit_config(&self) -> FitConfig {
        FitConfig {
            burn_in_sweeps: self.burn_in,
            n_samples: self.samples,
            sample_interval_sweeps: self.interval,
            n_chains: self.chains,
            seed: self.seed,
        }
    }

    fn prior(&self) -> Result<BetaParams> {
        BetaParams::new(self.alpha, self.beta)
    }
}

#[derive(Args)]
struct FitArgs {
    /// Input edge list (t<TAB>u<TAB>v).
    #[arg(short = 'i', long)]
    input: PathBuf,
    /// Window end time (defaults to the last snapshot).
    #[arg(long)]
    tau: Option<i64>,
    #[arg(long, default_value_t = 4)]
    window: usize,
    #[arg(long = "gap-policy", default_value = "empty")]
    gap_policy: String,
    #[command(flatten)]
    model: ModelFlags,
    /// Output model document (JSON).
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(short = 'i', long)]
    input: PathBuf,
    #[arg(long, default_value_t = 4)]
    window: usize,
    #[arg(long = "fp-rate", default_value_t = 0.05)]
    fp_rate: f64,
    #[arg(long, default_value_t = 1000)]
    bootstrap: usize,
    /// ghrg | degree | geodesic | clustering
    #[arg(long, default_value = "ghrg")]
    method: String,
    /// restart | slide
    #[arg(long, default_value = "restart")]
    reset: String,
    #[arg(long = "gap-policy", default_value = "empty")]
    gap_policy: String,
    /// Draw fresh Beta probabilities per bootstrap replicate instead of the
    /// posterior-mean plug-in.
    #[arg(long = "posterior-draw")]
    posterior_draw: bool,
    /// Print per-window timing to stderr.
    #[arg(long)]
    progress: bool,
    /// Also write the per-window trace CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    model: ModelFlags,
    /// Output detection report (JSON).
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Detection report from `detect`.
    #[arg(long)]
    detections: PathBuf,
    /// Known events CSV (`t,label`).
    #[arg(long)]
    events: PathBuf,
    #[arg(long = "max-delay", default_value_t = 4)]
    max_delay: i64,
    /// Output precision/recall CSV.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated change kinds.
    #[arg(long, default_value = "merge,split,form,fragment")]
    kinds: String,
    /// Comma-separated change magnitudes.
    #[arg(long = "delta-mus", default_value = "0.1,0.2,0.3,0.45")]
    delta_mus: String,
    #[arg(long, default_value_t = 20)]
    runs: usize,
    #[arg(long, default_value_t = 30)]
    n: usize,
    #[arg(long, default_value_t = 0.2)]
    density: f64,
    #[arg(long, default_value = "15,15")]
    groups: String,
    #[arg(long, default_value_t = 12)]
    length: usize,
    #[arg(long = "t-change", default_value_t = 8)]
    t_change: i64,
    #[arg(long, default_value_t = 4)]
    window: usize,
    #[arg(long = "fp-rate", default_value_t = 0.05)]
    fp_rate: f64,
    #[arg(long, default_value_t = 1000)]
    bootstrap: usize,
    #[command(flatten)]
    model: ModelFlags,
    /// Output sweep CSV.
    #[arg(short, long)]
    out: PathBuf,
}

/// A failure carrying its exit code: 1 for configuration problems, 2 for
/// runtime problems.
struct Failure {
    code: i32,
    error: Error,
}

fn usage(error: Error) -> Failure {
    Failure { code: 1, error }
}

fn runtime(error: Error) -> Failure {
    Failure { code: 2, error }
}

type CliResult = std::result::Result<(), Failure>;

fn parse_groups(text: &str, n: usize) -> Result<(usize, usize)> {
    let (a, b) = text
        .split_once(',')
        .ok_or_else(|| Error::InvalidInput(format!("groups must be `a,b`, got {text:?}")))?;
    let a: usize = a
        .trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad group size {a:?}")))?;
    let b: usize = b
        .trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad group size {b:?}")))?;
    if a + b != n {
        return Err(Error::InvalidInput(format!(
            "group sizes {a}+{b} do not sum to n={n}"
        )));
    }
    Ok((a, b))
}

fn read_to_string(path: &PathBuf) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| {
        runtime(Error::InvalidInput(format!(
            "cannot read {}: {e}",
            path.display()
        )))
    })
}

fn write_file(path: &PathBuf, contents: &str) -> CliResult {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| runtime(e.into()))?;
        }
    }
    fs::write(path, contents).map_err(|e| runtime(e.into()))
}

fn cmd_synth(args: &SynthArgs) -> CliResult {
    let kind = ChangeKind::from_str(&args.kind).map_err(usage)?;
    let group_sizes = parse_groups(&args.groups, args.n).map_err(usage)?;
    let (default_free, pinned_before, pinned_after) = match kind {
        ChangeKind::Merge => (0.05, None, Some(0.5)),
        ChangeKind::Split => (0.05, Some(0.5), None),
        ChangeKind::Fragment => (0.5, None, Some(1.0)),
        ChangeKind::Form => (0.5, Some(1.0), None),
    };
    let mu_before = args.mu_before.or(pinned_before).unwrap_or(default_free);
    let mu_after = args.mu_after.or(pinned_after).unwrap_or(default_free);
    let spec = ChangeSpec {
        kind,
        mu_before,
        mu_after,
        t_c: args.t_change,
        length: args.length,
        n: args.n,
        density: args.density,
        group_sizes,
        p_fix: args.p_fix,
        seed: args.seed,
    };
    spec.validate().map_err(usage)?;
    spec.block_probs(false).map_err(usage)?;
    spec.block_probs(true).map_err(usage)?;

    let (seq, t_c) = generate_sequence(&spec).map_err(|e| runtime(e))?;
    write_file(&args.out.join("seq.tsv"), &serialize_edge_list(&seq))?;
    let truth = serde_json::json!({
        "kind": kind.as_str(),
        "mu_before": spec.mu_before,
        "mu_after": spec.mu_after,
        "t_c": t_c,
    });
    let mut truth_text = serde_json::to_string_pretty(&truth).map_err(|e| runtime(e.into()))?;
    truth_text.push('\n');
    write_file(&args.out.join("ground_truth.json"), &truth_text)?;
    write_file(
        &args.out.join("events.csv"),
        &format!("t,label\n{},{}\n", t_c, kind.as_str()),
    )?;
    println!(
        "wrote {} snapshots (n={}) to {}",
        seq.len(),
        seq.vertex_count(),
        args.out.display()
    );
    Ok(())
}

fn load_sequence(path: &PathBuf, gap_policy: &str) -> std::result::Result<crate::graph::NetworkSequence, Failure> {
    let policy = GapPolicy::from_str(gap_policy).map_err(usage)?;
    let text = read_to_string(path)?;
    parse_edge_list_with_policy(&text, policy).map_err(runtime)
}

fn cmd_fit(args: &FitArgs) -> CliResult {
    let prior = args.model.prior().map_err(usage)?;
    let cfg = args.model.fit_config();
    cfg.validate().map_err(usage)?;
    let seq = load_sequence(&args.input, &args.gap_policy)?;
    let tau = args.tau.unwrap_or_else(|| seq.end_time());
    let window = window_at(&seq, tau, args.window).map_err(usage)?;
    let model = fit_ghrg(&window, &prior, &cfg).map_err(runtime)?;
    let json = model.to_json(Some(seq.labels())).map_err(runtime)?;
    write_file(&args.out, &(json + "\n"))?;
    println!(
        "fitted window ending at tau={tau}: {} internal nodes",
        model.tree.internal_ids().count()
    );
    Ok(())
}

fn detect_config(args: &DetectArgs) -> Result<DetectConfig> {
    let cfg = DetectConfig {
        w: args.window,
        fp_rate: args.fp_rate,
        n_bootstrap: args.bootstrap,
        fit: args.model.fit_config(),
        prior: args.model.prior()?,
        reset_policy: ResetPolicy::from_str(&args.reset)?,
        sampling: if args.posterior_draw {
            SamplingRule::PosteriorDraw
        } else {
            SamplingRule::PosteriorMean
        },
        progress: args.progress,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_detect(args: &DetectArgs) -> CliResult {
    let method = Method::from_str(&args.method).map_err(usage)?;
    let cfg = detect_config(args).map_err(usage)?;
    let seq = load_sequence(&args.input, &args.gap_policy)?;
    let outcome: DetectOutcome = match method {
        Method::Ghrg => detect_stream(&seq, &cfg).map_err(runtime)?,
        _ => {
            let stat = ScalarStatistic::try_from(method).map_err(usage)?;
            scalar_detect_stream(&scalar_series(&seq, stat), &cfg).map_err(runtime)?
        }
    };
    for d in &outcome.detections {
        println!(
            "t_d={} t_hat={:.1} g={} p={}",
            d.t_d, d.t_hat_c, d.g_tau, d.p_value
        );
    }
    let report = DetectReport {
        method,
        w: cfg.w,
        fp_rate: cfg.fp_rate,
        n_bootstrap: cfg.n_bootstrap,
        seed: cfg.fit.seed,
        detections: outcome.detections.clone(),
    };
    write_file(&args.out, &report.to_json().map_err(runtime)?)?;
    if let Some(trace_path) = &args.trace {
        write_file(trace_path, &trace_to_csv(&outcome.trace))?;
    }
    println!(
        "{} detection(s) over {} window(s)",
        outcome.detections.len(),
        outcome.trace.len()
    );
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> CliResult {
    if args.max_delay < 0 {
        return Err(usage(Error::InvalidInput("max delay must be >= 0".into())));
    }
    let report_text = read_to_string(&args.detections)?;
    let report = DetectReport::from_json(&report_text).map_err(runtime)?;
    let events_text = read_to_string(&args.events)?;
    let events = EventList::parse_csv(&events_text).map_err(runtime)?;
    let detections = DetectionList::from_detections(&report.detections);
    let points: Vec<_> = (0..=args.max_delay)
        .map(|s| precision_recall(&detections, &events, s))
        .collect();
    write_file(&args.out, &pr_to_csv(&points, report.method))?;
    for p in &points {
        println!("s={} precision={:.4} recall={:.4}", p.s, p.precision, p.recall);
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> CliResult {
    let kinds: Vec<ChangeKind> = args
        .kinds
        .split(',')
        .map(|k| ChangeKind::from_str(k.trim()))
        .collect::<Result<_>>()
        .map_err(usage)?;
    let delta_mus: Vec<f64> = args
        .delta_mus
        .split(',')
        .map(|d| {
            d.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("bad delta_mu {d:?}")))
        })
        .collect::<Result<_>>()
        .map_err(usage)?;
    let group_sizes = parse_groups(&args.groups, args.n).map_err(usage)?;
    let detect = DetectConfig {
        w: args.window,
        fp_rate: args.fp_rate,
        n_bootstrap: args.bootstrap,
        fit: args.model.fit_config(),
        prior: args.model.prior().map_err(usage)?,
        ..DetectConfig::default()
    };
    detect.validate().map_err(usage)?;
    let cfg = SweepConfig {
        kinds,
        delta_mus,
        runs_per_cell: args.runs,
        n: args.n,
        density: args.density,
        group_sizes,
        length: args.length,
        t_c: args.t_change,
        detect,
        seed: args.model.seed,
    };
    let rows = run_sweep(&cfg).map_err(runtime)?;
    write_file(&args.out, &crate::evalkit::sweep_to_csv(&rows))?;
    println!("wrote {} sweep rows to {}", rows.len(), args.out.display());
    Ok(())
}

/// Parse arguments and execute; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };

    let execute = || -> CliResult {
        match &cli.command {
            Command::Synth(args) => cmd_synth(args),
            Command::Fit(args) => cmd_fit(args),
            Command::Detect(args) => cmd_detect(args),
            Command::Eval(args) => cmd_eval(args),
            Command::Sweep(args) => cmd_sweep(args),
        }
    };

    let result = match cli.workers {
        Some(k) if k > 0 => {
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
                Ok(pool) => pool,
                Err(e) => {
                    eprintln!("error: cannot build worker pool: {e}");
                    return 2;
                }
            };
            pool.install(execute)
        }
        Some(_) => {
            eprintln!("error: --workers must be positive");
            return 1;
        }
        None => execute(),
    };

    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.error);
            f.code
        }
    }
}
