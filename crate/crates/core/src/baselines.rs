//! Scalar comparison detectors: reduce each snapshot to a single statistic
//! and run the shared windowed pipeline with a conjugate Gaussian model
//! (Normal-Inverse-Gamma prior, Student-t posterior predictive).

use rand::RngCore;
use rand_distr::Distribution;
use statrs::function::gamma::ln_gamma;

use crate::detect::{run_stream, DetectConfig, DetectOutcome, Method, StreamOptions, WindowModel};
use crate::error::{Error, Result};
use crate::graph::{GraphSnapshot, NetworkSequence};

/// Which scalar reduction to apply per snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarStatistic {
    MeanDegree,
    MeanGeodesic,
    MeanClustering,
}

impl ScalarStatistic {
    pub fn method(&self) -> Method {
        match self {
            ScalarStatistic::MeanDegree => Method::Degree,
            ScalarStatistic::MeanGeodesic => Method::Geodesic,
            ScalarStatistic::MeanClustering => Method::Clustering,
        }
    }

    pub fn compute(&self, g: &GraphSnapshot) -> f64 {
        match self {
            ScalarStatistic::MeanDegree => mean_degree(g),
            ScalarStatistic::MeanGeodesic => mean_geodesic(g),
            ScalarStatistic::MeanClustering => mean_clustering(g),
        }
    }
}

impl TryFrom<Method> for ScalarStatistic {
    type Error = Error;
    fn try_from(m: Method) -> Result<Self> {
        match m {
            Method::Degree => Ok(ScalarStatistic::MeanDegree),
            Method::Geodesic => Ok(ScalarStatistic::MeanGeodesic),
            Method::Clustering => Ok(ScalarStatistic::MeanClustering),
            Method::Ghrg => Err(Error::InvalidInput(
                "ghrg is not a scalar statistic".into(),
            )),
        }
    }
}

/// 2|E| / n.
pub fn mean_degree(g: &GraphSnapshot) -> f64 {
    2.0 * g.edge_count() as f64 / g.vertex_count() as f64
}

/// Mean shortest-path length over connected vertex pairs; 0.0 when no pair
/// is connected.
pub fn mean_geodesic(g: &GraphSnapshot) -> f64 {
    let n = g.vertex_count();
    let adj = g.adjacency();
    let mut total = 0u64;
    let mut pairs = 0u64;
    let mut dist = vec![u32::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    for src in 0..n {
        dist.fill(u32::MAX);
        dist[src] = 0;
        queue.clear();
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v as usize] == u32::MAX {
                    dist[v as usize] = dist[u] + 1;
                    queue.push_back(v as usize);
                }
            }
        }
        for v in src + 1..n {
            if dist[v] != u32::MAX {
                total += dist[v] as u64;
                pairs += 1;
            }
        }
    }
    if pairs == 0 {
        0.0
    } else {
        total as f64 / pairs as f64
    }
}

/// Average local clustering coefficient; vertices of degree < 2 contribute
/// 0.
pub fn mean_clustering(g: &GraphSnapshot) -> f64 {
    let n = g.vertex_count();
    let adj = g.adjacency();
    let mut total = 0.0;
    for v in 0..n {
        let neighbors = &adj[v];
        let d = neighbors.len();
        if d < 2 {
            continue;
        }
        let mut links = 0u64;
        for i in 0..d {
            for j in i + 1..d {
                if g.has_edge(neighbors[i], neighbors[j]) {
                    links += 1;
                }
            }
        }
        total += links as f64 / (d * (d - 1) / 2) as f64;
    }
    total / n as f64
}

/// One value per snapshot of a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSeries {
    pub statistic: ScalarStatistic,
    pub start_time: i64,
    pub values: Vec<f64>,
}

pub fn scalar_series(seq: &NetworkSequence, statistic: ScalarStatistic) -> ScalarSeries {
    ScalarSeries {
        statistic,
        start_time: seq.start_time(),
        values: seq.snapshots().iter().map(|g| statistic.compute(g)).collect(),
    }
}

/// CSV export (`t,value`).
pub fn scalar_series_to_csv(series: &ScalarSeries) -> String {
    let mut out = String::from("t,value\n");
    for (i, v) in series.values.iter().enumerate() {
        out.push_str(&format!("{},{}\n", series.start_time + i as i64, v));
    }
    out
}

/// Normal-Inverse-Gamma hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPosterior {
    pub mu0: f64,
    pub kappa0: f64,
    pub a0: f64,
    pub b0: f64,
}

impl GaussianPosterior {
    pub fn new(mu0: f64, kappa0: f64, a0: f64, b0: f64) -> Result<Self> {
        if !(kappa0 > 0.0 && a0 > 0.0 && b0 > 0.0) {
            return Err(Error::InvalidInput(format!(
                "kappa0, a0, b0 must be positive, got ({kappa0}, {a0}, {b0})"
            )));
        }
        Ok(Self { mu0, kappa0, a0, b0 })
    }

    /// Standard conjugate update on a batch of observations.
    pub fn update(&self, xs: &[f64]) -> Self {
        if xs.is_empty() {
            return *self;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
        let kappa_n = self.kappa0 + n;
        Self {
            mu0: (self.kappa0 * self.mu0 + n * mean) / kappa_n,
            kappa0: kappa_n,
            a0: self.a0 + n / 2.0,
            b0: self.b0
                + 0.5 * ss
                + self.kappa0 * n * (mean - self.mu0).powi(2) / (2.0 * kappa_n),
        }
    }

    /// Posterior predictive: a Student-t.
    pub fn predictive(&self) -> StudentT {
        StudentT {
            df: 2.0 * self.a0,
            loc: self.mu0,
            scale: (self.b0 * (self.kappa0 + 1.0) / (self.a0 * self.kappa0)).sqrt(),
        }
    }
}

/// Location-scale Student-t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudentT {
    pub df: f64,
    pub loc: f64,
    pub scale: f64,
}

impl StudentT {
    pub fn log_density(&self, x: f64) -> f64 {
        let nu = self.df;
        let z = (x - self.loc) / self.scale;
        ln_gamma((nu + 1.0) / 2.0)
            - ln_gamma(nu / 2.0)
            - 0.5 * (nu * std::f64::consts::PI).ln()
            - self.scale.ln()
            - (nu + 1.0) / 2.0 * (1.0 + z * z / nu).ln()
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let std = rand_distr::StudentT::new(self.df).expect("positive degrees of freedom");
        self.loc + self.scale * std.sample(rng)
    }
}

/// Posterior-marginal log likelihood of a batch: hyperparameters updated on
/// `xs`, then the resulting posterior predictive evaluated at each point.
/// This mirrors the network model's posterior Bayes factor terms.
pub fn gaussian_log_marginal(xs: &[f64], prior: &GaussianPosterior) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::InvalidInput("empty observation batch".into()));
    }
    let predictive = prior.update(xs).predictive();
    Ok(xs.iter().map(|&x| predictive.log_density(x)).sum())
}

/// The Gaussian model family for the shared pipeline. The prior is
/// re-derived per window: mean from the window, unit kappa0 and a0, scale
/// from the window variance (floored).
pub struct GaussianDetector {
    pub kappa0: f64,
    pub a0: f64,
    pub var_floor: f64,
}

impl Default for GaussianDetector {
    fn default() -> Self {
        Self {
            kappa0: 1.0,
            a0: 1.0,
            var_floor: 1e-8,
        }
    }
}

/// Window-level fit: the data-derived prior and the posterior updated on
/// the whole window.
pub struct GaussianFit {
    pub prior: GaussianPosterior,
    pub posterior: GaussianPosterior,
}

impl WindowModel for GaussianDetector {
    type Item = f64;
    type Fitted = GaussianFit;

    fn fit(&self, window: &[f64], _seed: u64) -> Result<GaussianFit> {
        let n = window.len() as f64;
        let mean = window.iter().sum::<f64>() / n;
        let var = window.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let prior = GaussianPosterior::new(mean, self.kappa0, self.a0, var.max(self.var_floor))?;
        Ok(GaussianFit {
            prior,
            posterior: prior.update(window),
        })
    }

    fn lambdas(&self, fitted: &GaussianFit, window: &[f64]) -> Result<Vec<f64>> {
        let w = window.len();
        let all = gaussian_log_marginal(window, &fitted.prior)?;
        (1..w)
            .map(|k| {
                let seg0 = gaussian_log_marginal(&window[..k], &fitted.prior)?;
                let seg1 = gaussian_log_marginal(&window[k..], &fitted.prior)?;
                Ok(seg0 + seg1 - all)
            })
            .collect()
    }

    fn sample_window(&self, fitted: &GaussianFit, w: usize, rng: &mut dyn RngCore) -> Vec<f64> {
        let predictive = fitted.posterior.predictive();
        (0..w).map(|_| predictive.sample(rng)).collect()
    }
}

/// Run a scalar baseline over a statistic series with the same decision
/// machinery as the network detector.
pub fn scalar_detect_stream(series: &ScalarSeries, cfg: &DetectConfig) -> Result<DetectOutcome> {
    cfg.validate()?;
    let family = GaussianDetector::default();
    run_stream(
        &family,
        series.statistic.method(),
        series.start_time,
        &series.values,
        &StreamOptions::from(cfg),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::FitConfig;
    use crate::rng::derive_rng;
    use rand::Rng;

    fn graph(n: usize, edges: &[(u32, u32)]) -> GraphSnapshot {
        GraphSnapshot::new(0, n, edges.iter().copied()).unwrap()
    }

    #[test]
    fn statistic_examples() {
        let triangle = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(mean_degree(&triangle), 2.0);
        assert_eq!(mean_geodesic(&triangle), 1.0);
        assert_eq!(mean_clustering(&triangle), 1.0);

        let path = graph(3, &[(0, 1), (1, 2)]);
        assert!((mean_degree(&path) - 4.0 / 3.0).abs() < 1e-12);
        assert!((mean_geodesic(&path) - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(mean_clustering(&path), 0.0);

        let empty = graph(4, &[]);
        assert_eq!(mean_degree(&empty), 0.0);
        assert_eq!(mean_geodesic(&empty), 0.0);
        assert_eq!(mean_clustering(&empty), 0.0);

        let two_edges = graph(4, &[(0, 1), (2, 3)]);
        assert_eq!(mean_geodesic(&two_edges), 1.0);

        let clique4 = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(mean_clustering(&clique4), 1.0);
    }

    #[test]
    fn statistics_invariant_under_relabeling() {
        use rand::seq::SliceRandom;
        for seed in 0..20u64 {
            let mut rng = derive_rng(seed, &[60]);
            let n = rng.random_range(4..10);
            let mut edges = Vec::new();
            for u in 0..n as u32 {
                for v in u + 1..n as u32 {
                    if rng.random_bool(0.4) {
                        edges.push((u, v));
                    }
                }
            }
            let g = graph(n, &edges);
            let mut perm: Vec<u32> = (0..n as u32).collect();
            perm.shuffle(&mut rng);
            let relabeled: Vec<(u32, u32)> = edges
                .iter()
                .map(|&(u, v)| (perm[u as usize], perm[v as usize]))
                .collect();
            let h = graph(n, &relabeled);
            for stat in [
                ScalarStatistic::MeanDegree,
                ScalarStatistic::MeanGeodesic,
                ScalarStatistic::MeanClustering,
            ] {
                assert!((stat.compute(&g) - stat.compute(&h)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_marginal_basics() {
        let prior = GaussianPosterior::new(0.0, 1.0, 1.0, 1.0).unwrap();
        assert!(gaussian_log_marginal(&[], &prior).is_err());

        // Tight prior, single observation at the prior mean: density sits at
        // the predictive mode.
        let tight = GaussianPosterior::new(2.0, 1e6, 1e6, 1e6).unwrap();
        let at_mode = gaussian_log_marginal(&[2.0], &tight).unwrap();
        let off_mode = gaussian_log_marginal(&[2.5], &tight).unwrap();
        assert!(at_mode > off_mode);
        // Predictive approaches N(2, ~1): check against the normal density.
        let normal_peak = -0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((at_mode - normal_peak).abs() < 1e-2);
    }

    #[test]
    fn gaussian_marginal_translation_equivariance() {
        let xs = [0.3, -1.2, 0.8, 2.0];
        let prior = GaussianPosterior::new(0.4, 1.5, 2.0, 1.2).unwrap();
        let base = gaussian_log_marginal(&xs, &prior).unwrap();
        let shift = 17.5;
        let moved: Vec<f64> = xs.iter().map(|x| x + shift).collect();
        let moved_prior = GaussianPosterior::new(0.4 + shift, 1.5, 2.0, 1.2).unwrap();
        let shifted = gaussian_log_marginal(&moved, &moved_prior).unwrap();
        assert!((base - shifted).abs() < 1e-9);
    }

    /// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
    fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            for _ in 0..100 {
                // Evaluate P_m and its derivative by recurrence.
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=m {
                    let jf = j as f64;
                    let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=m {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    }

    fn integrate_panels(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let (nodes, weights) = gauss_legendre(40);
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let mid = lo + h / 2.0;
            for (x, w) in nodes.iter().zip(&weights) {
                total += w * f(mid + x * h / 2.0) * h / 2.0;
            }
        }
        total
    }

    /// 2-D quadrature oracle for the Normal-Inverse-Gamma posterior
    /// predictive: integrate the Gaussian likelihood against the posterior
    /// over (mu, sigma^2) via the substitutions sigma^2 = b / u^2 and
    /// mu = m + z sigma / sqrt(kappa). Both transformed integrands are
    /// analytic, so composite Gauss-Legendre converges fast.
    fn predictive_by_quadrature(x: f64, post: &GaussianPosterior) -> f64 {
        let (m, k, a, b) = (post.mu0, post.kappa0, post.a0, post.b0);
        let gamma_a = ln_gamma(a).exp();
        let u_max = (a + 40.0 + 10.0 * a.sqrt()).sqrt();
        let outer = |u: f64| -> f64 {
            if u <= 0.0 {
                return 0.0;
            }
            let v = u * u;
            let sigma2 = b / v;
            let sigma = sigma2.sqrt();
            let weight = 2.0 * u.powf(2.0 * a - 1.0) * (-v).exp() / gamma_a;
            let inner = |z: f64| -> f64 {
                let mu = m + z * sigma / k.sqrt();
                let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
                let lik = (-0.5 * (x - mu).powi(2) / sigma2).exp()
                    / (2.0 * std::f64::consts::PI * sigma2).sqrt();
                phi * lik
            };
            weight * integrate_panels(&inner, -9.0, 9.0, 6)
        };
        integrate_panels(&outer, 1e-9, u_max, 8)
    }

    #[test]
    fn gaussian_marginal_matches_quadrature() {
        let mut rng = derive_rng(8, &[61]);
        for _ in 0..12 {
            let n = rng.random_range(2..5);
            let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let prior = GaussianPosterior::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(0.5..3.0),
                rng.random_range(1.0..3.0),
                rng.random_range(0.5..3.0),
            )
            .unwrap();
            let exact = gaussian_log_marginal(&xs, &prior).unwrap();
            let post = prior.update(&xs);
            let numeric: f64 = xs
                .iter()
                .map(|&x| predictive_by_quadrature(x, &post).ln())
                .sum();
            assert!(
                (exact - numeric).abs() < 1e-5,
                "exact {exact} vs numeric {numeric}"
            );
        }
    }

    fn scalar_cfg(w: usize, seed: u64) -> DetectConfig {
        DetectConfig {
            w,
            n_bootstrap: 200,
            fit: FitConfig {
                seed,
                ..FitConfig::default()
            },
            ..DetectConfig::default()
        }
    }

    /// Calibration: on i.i.d. data the per-window alarm rate sits near the
    /// target false-positive rate.
    #[test]
    fn iid_series_alarm_rate_is_calibrated() {
        let mut windows = 0usize;
        let mut alarms = 0usize;
        for run in 0..60u64 {
            let mut rng = derive_rng(run, &[62]);
            let values: Vec<f64> = (0..16)
                .map(|_| rand_distr::StandardNormal.sample(&mut rng))
                .collect();
            let series = ScalarSeries {
                statistic: ScalarStatistic::MeanDegree,
                start_time: 0,
                values,
            };
            let mut cfg = scalar_cfg(8, run);
            cfg.reset_policy = crate::detect::ResetPolicy::Slide;
            let out = scalar_detect_stream(&series, &cfg).unwrap();
            windows += out.trace.len();
            alarms += out
                .trace
                .iter()
                .filter(|e| e.p_value < cfg.fp_rate && e.g_tau > 0.0)
                .count();
        }
        let rate = alarms as f64 / windows as f64;
        assert!(
            (0.01..=0.10).contains(&rate),
            "per-window alarm rate {rate} not near 0.05"
        );
    }

    /// A five-noise-sd step is found and localized to the gap. The window
    /// must hold a few observations per segment for the Gaussian model to
    /// resolve the step; w = 8 satisfies that.
    #[test]
    fn five_sigma_step_is_detected_at_the_gap() {
        let runs = 100;
        let t_c = 8i64;
        let mut detected_at_gap = 0;
        for run in 0..runs {
            let mut rng = derive_rng(run, &[63]);
            let values: Vec<f64> = (0..16)
                .map(|t| {
                    let noise: f64 = rand_distr::StandardNormal.sample(&mut rng);
                    if (t as i64) < t_c {
                        noise
                    } else {
                        5.0 + noise
                    }
                })
                .collect();
            let series = ScalarSeries {
                statistic: ScalarStatistic::MeanDegree,
                start_time: 0,
                values,
            };
            let out = scalar_detect_stream(&series, &scalar_cfg(8, run)).unwrap();
            if out
                .detections
                .iter()
                .any(|d| (d.t_hat_c - t_c as f64).abs() <= 0.5)
            {
                detected_at_gap += 1;
            }
        }
        assert!(
            detected_at_gap >= 90,
            "step located in only {detected_at_gap}/{runs} runs"
        );
    }

    #[test]
    fn constant_series_stays_quiet() {
        for run in 0..10u64 {
            let series = ScalarSeries {
                statistic: ScalarStatistic::MeanClustering,
                start_time: 0,
                values: vec![0.37; 12],
            };
            let out = scalar_detect_stream(&series, &scalar_cfg(4, run)).unwrap();
            assert!(out.detections.is_empty(), "run {run} fired on a constant");
        }
    }

    #[test]
    fn scalar_series_csv() {
        let series = ScalarSeries {
            statistic: ScalarStatistic::MeanDegree,
            start_time: 3,
            values: vec![1.5, 2.0],
        };
        assert_eq!(scalar_series_to_csv(&series), "t,value\n3,1.5\n4,2\n");
    }
}
