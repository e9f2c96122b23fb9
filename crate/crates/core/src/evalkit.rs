//! Scoring detections against ground truth, and batch experiment sweeps
//! over change kinds and magnitudes.

use rayon::prelude::*;

use crate::baselines::{scalar_detect_stream, scalar_series, ScalarStatistic};
use crate::detect::{detect_stream, DetectConfig, Detection, Method, TraceEntry};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, domain};
use crate::synth::{generate_sequence, ChangeKind, ChangeSpec};

/// Known external events (ground truth).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventList {
    times: Vec<i64>,
    labels: Vec<String>,
}

impl EventList {
    pub fn new(mut entries: Vec<(i64, String)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let (times, labels) = entries.into_iter().unzip();
        Self { times, labels }
    }

    pub fn times(&self) -> &[i64] {
        &self.times
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Parse the `t,label` CSV; `#` comments and a `t,label` header line
    /// are skipped.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (t_field, label) = line.split_once(',').unwrap_or((line, ""));
            if i == 0 && t_field.trim() == "t" {
                continue;
            }
            let t: i64 = t_field.trim().parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("non-integer event time {t_field:?}"),
            })?;
            entries.push((t, label.to_string()));
        }
        if entries.is_empty() {
            return Err(Error::InvalidInput("no events found".into()));
        }
        Ok(Self::new(entries))
    }
}

/// Estimated change times (half-integers allowed).
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionList {
    times: Vec<f64>,
}

impl DetectionList {
    pub fn new(mut times: Vec<f64>) -> Self {
        times.sort_by(f64::total_cmp);
        Self { times }
    }

    pub fn from_detections(detections: &[Detection]) -> Self {
        Self::new(detections.iter().map(|d| d.t_hat_c).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Precision/recall at one delay tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub s: i64,
    pub precision: f64,
    pub recall: f64,
    /// Precision was undefined (no detections) and reported as 0.
    pub no_detections: bool,
    /// Recall was undefined (no events) and reported as 0.
    pub no_events: bool,
}

/// Proportion of detections within delay `s` of an event, and of events
/// within `s` of a detection. Half-integer estimates match integer events
/// via `|diff| <= s + 0.5`.
pub fn precision_recall(det: &DetectionList, ev: &EventList, s: i64) -> PrPoint {
    assert!(s >= 0, "delay must be non-negative");
    let tol = s as f64 + 0.5;
    let matched = |x: f64, pool: &[f64]| pool.iter().any(|&y| (x - y).abs() <= tol);
    let ev_times: Vec<f64> = ev.times.iter().map(|&t| t as f64).collect();
    let precision = if det.is_empty() {
        0.0
    } else {
        det.times.iter().filter(|&&t| matched(t, &ev_times)).count() as f64
            / det.times.len() as f64
    };
    let recall = if ev.is_empty() {
        0.0
    } else {
        ev_times
            .iter()
            .filter(|&&t| matched(t, &det.times))
            .count() as f64
            / ev_times.len() as f64
    };
    PrPoint {
        s,
        precision,
        recall,
        no_detections: det.is_empty(),
        no_events: ev.is_empty(),
    }
}

/// `s,precision,recall,method` CSV over a range of delays.
pub fn pr_to_csv(points: &[PrPoint], method: Method) -> String {
    let mut out = String::from("s,precision,recall,method\n");
    for p in points {
        out.push_str(&format!("{},{},{},{}\n", p.s, p.precision, p.recall, method));
    }
    out
}

/// One detector run on one labeled sequence.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub detections: Vec<Detection>,
    pub true_tc: i64,
    pub trace: Vec<TraceEntry>,
}

impl RunRecord {
    /// Did the stream ever move its window start past the change? The
    /// change sits at the half-integer gap `true_tc - 0.5`, so a window
    /// starting at `true_tc` already lies entirely in the after-state.
    fn window_passed_change(&self) -> bool {
        self.trace
            .iter()
            .any(|e| e.window_start >= self.true_tc)
    }

    fn has_detection_at_or_after_change(&self) -> bool {
        self.detections.iter().any(|d| d.t_d >= self.true_tc)
    }

    pub fn first_detection(&self) -> Option<&Detection> {
        self.detections.first()
    }

    /// First detection at or after the change, for localization summaries.
    pub fn first_true_detection(&self) -> Option<&Detection> {
        self.detections.iter().find(|d| d.t_d >= self.true_tc)
    }
}

/// False positives are runs with any detection before the change; false
/// negatives are runs whose window start passed the change with no
/// detection at or after it.
pub fn error_rates(runs: &[RunRecord]) -> Result<(f64, f64)> {
    if runs.is_empty() {
        return Err(Error::InvalidInput("no runs to score".into()));
    }
    let total = runs.len() as f64;
    let fp = runs
        .iter()
        .filter(|r| r.detections.iter().any(|d| d.t_d < r.true_tc))
        .count() as f64
        / total;
    let fn_ = runs
        .iter()
        .filter(|r| r.window_passed_change() && !r.has_detection_at_or_after_change())
        .count() as f64
        / total;
    Ok((fp, fn_))
}

fn median(values: &mut Vec<f64>) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        (values[m - 1] + values[m]) / 2.0
    }
}

/// Sweep configuration: the grid plus the shared scenario geometry.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub kinds: Vec<ChangeKind>,
    pub delta_mus: Vec<f64>,
    pub runs_per_cell: usize,
    pub n: usize,
    pub density: f64,
    pub group_sizes: (usize, usize),
    pub length: usize,
    pub t_c: i64,
    pub detect: DetectConfig,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            kinds: vec![
                ChangeKind::Merge,
                ChangeKind::Split,
                ChangeKind::Form,
                ChangeKind::Fragment,
            ],
            delta_mus: vec![0.1, 0.2, 0.3, 0.45],
            runs_per_cell: 20,
            n: 30,
            density: 0.2,
            group_sizes: (15, 15),
            length: 12,
            t_c: 8,
            detect: DetectConfig::default(),
            seed: 0,
        }
    }
}

/// Scenario for one grid cell: the free endpoint moves `delta_mu` away from
/// the kind's pinned state (0.5 for merge/split, 1 for form/fragment).
pub fn cell_spec(cfg: &SweepConfig, kind: ChangeKind, delta_mu: f64, seed: u64) -> Result<ChangeSpec> {
    let mu_free = match kind {
        ChangeKind::Merge | ChangeKind::Split => {
            if !(0.0..0.5).contains(&delta_mu) {
                return Err(Error::InvalidInput(format!(
                    "merge/split delta_mu {delta_mu} outside [0, 0.5)"
                )));
            }
            0.5 - delta_mu
        }
        ChangeKind::Form | ChangeKind::Fragment => {
            if !(0.0..1.0).contains(&delta_mu) {
                return Err(Error::InvalidInput(format!(
                    "form/fragment delta_mu {delta_mu} outside [0, 1)"
                )));
            }
            1.0 - delta_mu
        }
    };
    let mut spec = ChangeSpec::with_defaults(kind, mu_free, seed);
    spec.n = cfg.n;
    spec.density = cfg.density;
    spec.group_sizes = cfg.group_sizes;
    spec.length = cfg.length;
    spec.t_c = cfg.t_c;
    spec.validate()?;
    Ok(spec)
}

/// One row of the sweep table.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub kind: ChangeKind,
    pub delta_mu: f64,
    pub method: Method,
    pub fp_rate: f64,
    pub fn_rate: f64,
    pub median_tc_err: f64,
    pub median_td_delay: f64,
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("kind,delta_mu,method,fp_rate,fn_rate,median_tc_err,median_td_delay\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.kind.as_str(),
            r.delta_mu,
            r.method,
            r.fp_rate,
            r.fn_rate,
            r.median_tc_err,
            r.median_td_delay
        ));
    }
    out
}

const METHODS: [Method; 4] = [
    Method::Ghrg,
    Method::Degree,
    Method::Geodesic,
    Method::Clustering,
];

/// Run every method on every run of one grid cell. Runs execute in
/// parallel; all randomness is derived from the cell coordinates.
pub fn run_cell(
    cfg: &SweepConfig,
    kind_idx: usize,
    dmu_idx: usize,
) -> Result<Vec<(Method, Vec<RunRecord>)>> {
    let kind = cfg.kinds[kind_idx];
    let delta_mu = cfg.delta_mus[dmu_idx];
    let per_run: Vec<Vec<RunRecord>> = (0..cfg.runs_per_cell)
        .into_par_iter()
        .map(|run| -> Result<Vec<RunRecord>> {
            let run_seed = derive_seed(
                cfg.seed,
                &[domain::SWEEP, kind_idx as u64, dmu_idx as u64, run as u64],
            );
            let spec = cell_spec(cfg, kind, delta_mu, run_seed)?;
            let (seq, t_c) = generate_sequence(&spec)?;
            METHODS
                .iter()
                .enumerate()
                .map(|(m_idx, &method)| {
                    let mut detect_cfg = cfg.detect.clone();
                    detect_cfg.fit.seed = derive_seed(run_seed, &[m_idx as u64]);
                    let outcome = match method {
                        Method::Ghrg => detect_stream(&seq, &detect_cfg)?,
                        _ => {
                            let stat = ScalarStatistic::try_from(method)?;
                            scalar_detect_stream(&scalar_series(&seq, stat), &detect_cfg)?
                        }
                    };
                    Ok(RunRecord {
                        detections: outcome.detections,
                        true_tc: t_c,
                        trace: outcome.trace,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    Ok(METHODS
        .iter()
        .enumerate()
        .map(|(m_idx, &method)| {
            let records: Vec<RunRecord> =
                per_run.iter().map(|runs| runs[m_idx].clone()).collect();
            (method, records)
        })
        .collect())
}

fn summarize(kind: ChangeKind, delta_mu: f64, method: Method, runs: &[RunRecord]) -> Result<SweepRow> {
    let (fp_rate, fn_rate) = error_rates(runs)?;
    let mut tc_errs: Vec<f64> = runs
        .iter()
        .filter_map(|r| r.first_detection())
        .map(|d| d.t_hat_c - runs[0].true_tc as f64)
        .collect();
    let mut td_delays: Vec<f64> = runs
        .iter()
        .filter_map(|r| r.first_detection())
        .map(|d| (d.t_d - runs[0].true_tc) as f64)
        .collect();
    Ok(SweepRow {
        kind,
        delta_mu,
        method,
        fp_rate,
        fn_rate,
        median_tc_err: median(&mut tc_errs),
        median_td_delay: median(&mut td_delays),
    })
}

/// The full grid: per (kind, delta_mu) cell, error rates and localization
/// summaries for the network detector and all three scalar baselines.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.detect.validate()?;
    let mut rows = Vec::new();
    for (kind_idx, &kind) in cfg.kinds.iter().enumerate() {
        for (dmu_idx, &delta_mu) in cfg.delta_mus.iter().enumerate() {
            for (method, runs) in run_cell(cfg, kind_idx, dmu_idx)? {
                rows.push(summarize(kind, delta_mu, method, &runs)?);
            }
        }
    }
    Ok(rows)
}
