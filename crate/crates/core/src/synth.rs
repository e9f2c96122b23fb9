//! Synthetic two-block sequences with a planted change point.
//!
//! The structural index `mu = p_out / (p_in + p_out)` switches between
//! merged/split and formed/fragmented states while the expected overall
//! edge density stays constant. Four change kinds cover the taxonomy:
//! merge (`mu != 0.5 -> 0.5`), split (`0.5 -> mu != 0.5`), fragment
//! (`mu < 1 -> 1`), and form (`1 -> mu < 1`).

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{GraphSnapshot, NetworkSequence};
use crate::rng::{derive_rng, domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChangeKind {
    Merge,
    Split,
    Form,
    Fragment,
}

impl ChangeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChangeKind::Merge => "merge",
            ChangeKind::Split => "split",
            ChangeKind::Form => "form",
            ChangeKind::Fragment => "fragment",
        }
    }
}

impl std::str::FromStr for ChangeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "merge" => Ok(ChangeKind::Merge),
            "split" => Ok(ChangeKind::Split),
            "form" => Ok(ChangeKind::Form),
            "fragment" => Ok(ChangeKind::Fragment),
            other => Err(Error::InvalidInput(format!("unknown change kind: {other}"))),
        }
    }
}

/// Block connection probabilities: within group A, within group B, and
/// across the groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockProbs {
    pub p_in_a: f64,
    pub p_in_b: f64,
    pub p_out: f64,
}

impl BlockProbs {
    fn check(self, context: &str) -> Result<Self> {
        for (name, p) in [
            ("p_in_a", self.p_in_a),
            ("p_in_b", self.p_in_b),
            ("p_out", self.p_out),
        ] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::Infeasible(format!(
                    "{context}: {name} = {p} outside [0, 1]"
                )));
            }
        }
        Ok(self)
    }

    /// Probability for the pair `(u, v)` given the size of group A.
    pub fn for_pair(&self, u: usize, v: usize, n_a: usize) -> f64 {
        match (u < n_a, v < n_a) {
            (true, true) => self.p_in_a,
            (false, false) => self.p_in_b,
            _ => self.p_out,
        }
    }
}

fn pair_counts(group_sizes: (usize, usize)) -> (f64, f64, f64) {
    let (na, nb) = group_sizes;
    let w_a = (na * na.saturating_sub(1) / 2) as f64;
    let w_b = (nb * nb.saturating_sub(1) / 2) as f64;
    let between = (na * nb) as f64;
    (w_a, w_b, between)
}

/// Merge/split parameterization: both groups share `p_in = (1 - mu) s`,
/// `p_out = mu s`, with `s` solving the global density constraint.
pub fn solve_merge_split(
    mu: f64,
    density: f64,
    group_sizes: (usize, usize),
) -> Result<BlockProbs> {
    if !(0.0 < mu && mu < 1.0) {
        return Err(Error::InvalidInput(format!(
            "merge/split mu must lie in (0, 1), got {mu}"
        )));
    }
    if !(0.0 < density && density < 1.0) {
        return Err(Error::InvalidInput(format!(
            "density must lie in (0, 1), got {density}"
        )));
    }
    let (w_a, w_b, between) = pair_counts(group_sizes);
    let within = w_a + w_b;
    let total = within + between;
    let s = density * total / (within * (1.0 - mu) + between * mu);
    BlockProbs {
        p_in_a: (1.0 - mu) * s,
        p_in_b: (1.0 - mu) * s,
        p_out: mu * s,
    }
    .check("merge/split")
}

/// Form/fragment parameterization: group A keeps a fixed internal
/// probability `p_fix`; group B follows `p_in_b = (1 - mu) s`,
/// `p_out = mu s` with `s` solving the density constraint. `mu = 1` gives
/// group B no internal edges.
pub fn solve_form_fragment(
    mu: f64,
    density: f64,
    group_sizes: (usize, usize),
    p_fix: f64,
) -> Result<BlockProbs> {
    if !(0.0 < mu && mu <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "form/fragment mu must lie in (0, 1], got {mu}"
        )));
    }
    if !(0.0 < density && density < 1.0) {
        return Err(Error::InvalidInput(format!(
            "density must lie in (0, 1), got {density}"
        )));
    }
    if !(0.0..=1.0).contains(&p_fix) {
        return Err(Error::InvalidInput(format!(
            "p_fix must lie in [0, 1], got {p_fix}"
        )));
    }
    let (w_a, w_b, between) = pair_counts(group_sizes);
    let total = w_a + w_b + between;
    let s = (density * total - w_a * p_fix) / (w_b * (1.0 - mu) + between * mu);
    BlockProbs {
        p_in_a: p_fix,
        p_in_b: (1.0 - mu) * s,
        p_out: mu * s,
    }
    .check("form/fragment")
}

/// A synthetic scenario: block structure switches at `t_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeSpec {
    pub kind: ChangeKind,
    pub mu_before: f64,
    pub mu_after: f64,
    /// First snapshot drawn from the after-state.
    pub t_c: i64,
    pub length: usize,
    pub n: usize,
    pub density: f64,
    pub group_sizes: (usize, usize),
    /// Fixed within-A probability for form/fragment; defaults to the
    /// density, which makes the `mu = 0.5` state uniform.
    pub p_fix: Option<f64>,
    pub seed: u64,
}

impl ChangeSpec {
    /// Scenario with the default experimental geometry: 30 vertices in two
    /// equal groups, density 0.2, 12 snapshots, change at t = 8.
    pub fn with_defaults(kind: ChangeKind, mu_free: f64, seed: u64) -> Self {
        let (mu_before, mu_after) = match kind {
            ChangeKind::Merge => (mu_free, 0.5),
            ChangeKind::Split => (0.5, mu_free),
            ChangeKind::Fragment => (mu_free, 1.0),
            ChangeKind::Form => (1.0, mu_free),
        };
        Self {
            kind,
            mu_before,
            mu_after,
            t_c: 8,
            length: 12,
            n: 30,
            density: 0.2,
            group_sizes: (15, 15),
            p_fix: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_c <= 0 || self.t_c >= self.length as i64 {
            return Err(Error::InvalidInput(format!(
                "t_c = {} must lie strictly inside 0..{}",
                self.t_c, self.length
            )));
        }
        if self.group_sizes.0 + self.group_sizes.1 != self.n {
            return Err(Error::InvalidInput(format!(
                "group sizes {:?} do not sum to n = {}",
                self.group_sizes, self.n
            )));
        }
        let endpoint_ok = match self.kind {
            ChangeKind::Merge => self.mu_after == 0.5,
            ChangeKind::Split => self.mu_before == 0.5,
            ChangeKind::Fragment => self.mu_after == 1.0,
            ChangeKind::Form => self.mu_before == 1.0,
        };
        if !endpoint_ok {
            return Err(Error::InvalidInput(format!(
                "{} endpoints must pin the fixed state (before {}, after {})",
                self.kind.as_str(),
                self.mu_before,
                self.mu_after
            )));
        }
        Ok(())
    }

    fn effective_p_fix(&self) -> f64 {
        self.p_fix.unwrap_or(self.density)
    }

    /// Block probabilities for the before- or after-state.
    pub fn block_probs(&self, after: bool) -> Result<BlockProbs> {
        let mu = if after { self.mu_after } else { self.mu_before };
        match self.kind {
            ChangeKind::Merge | ChangeKind::Split => {
                solve_merge_split(mu, self.density, self.group_sizes)
            }
            ChangeKind::Form | ChangeKind::Fragment => {
                solve_form_fragment(mu, self.density, self.group_sizes, self.effective_p_fix())
            }
        }
    }
}

/// Generate the labeled sequence: snapshots `t < t_c` from the before-state
/// block model, `t >= t_c` from the after-state, edges independent within
/// and across snapshots. Deterministic per seed.
pub fn generate_sequence(spec: &ChangeSpec) -> Result<(NetworkSequence, i64)> {
    spec.validate()?;
    let before = spec.block_probs(false)?;
    let after = spec.block_probs(true)?;
    let n_a = spec.group_sizes.0;
    let mut snapshots = Vec::with_capacity(spec.length);
    for t in 0..spec.length as i64 {
        let probs = if t < spec.t_c { &before } else { &after };
        let mut rng = derive_rng(spec.seed, &[domain::SYNTH, t as u64]);
        let mut edges = Vec::new();
        for u in 0..spec.n {
            for v in u + 1..spec.n {
                if rng.random_bool(probs.for_pair(u, v, n_a)) {
                    edges.push((u as u32, v as u32));
                }
            }
        }
        snapshots.push(GraphSnapshot::new(t, spec.n, edges)?);
    }
    let labels = (0..spec.n).map(|v| v.to_string()).collect();
    Ok((NetworkSequence::new(snapshots, labels)?, spec.t_c))
}
