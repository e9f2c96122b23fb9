//! Window fitting: MCMC over binary dendrograms, majority consensus, and
//! posterior hyperparameter assignment.
//!
//! The sampler targets the window's aggregated marginal likelihood (one
//! shared connection probability per node across the window, Beta prior
//! integrated out) using nearest-neighbor-interchange proposals. Sampled
//! binary trees are reduced to a single, generally non-binary, tree by
//! keeping exactly the clades that occur in a strict majority of samples.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ghrg::{node_log_marginal, BetaParams, Dendrogram, GhrgModel, NodeId};
use crate::graph::GraphWindow;
use crate::leafset::LeafSet;
use crate::rng::{derive_rng, domain};

const NONE: usize = usize::MAX;

/// MCMC schedule. One sweep is `n` elementary steps. `n_samples` is the
/// total across the independent chains; chains burn in under a geometric
/// temperature ramp (from [`BURN_IN_START_TEMPERATURE`] down to 1) so the
/// sampling phase starts at the posterior mode regardless of the random
/// initial topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FitConfig {
    pub burn_in_sweeps: usize,
    pub n_samples: usize,
    pub sample_interval_sweeps: usize,
    pub n_chains: usize,
    pub seed: u64,
}

/// Burn-in starts this hot; sampling always runs at temperature 1.
pub const BURN_IN_START_TEMPERATURE: f64 = 4.0;

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            burn_in_sweeps: 200,
            n_samples: 100,
            sample_interval_sweeps: 5,
            n_chains: 4,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in_sweeps == 0
            || self.n_samples == 0
            || self.sample_interval_sweeps == 0
            || self.n_chains == 0
        {
            return Err(Error::InvalidInput(
                "fit schedule fields must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A full binary dendrogram on a fixed arena: leaves `0..n`, internal nodes
/// `n..2n-1`, any internal node may be the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryDendrogram {
    n: usize,
    root: usize,
    parent: Vec<usize>,
    children: Vec<[usize; 2]>,
    sets: Vec<LeafSet>,
    sizes: Vec<u64>,
}

impl BinaryDendrogram {
    /// Build from explicit internal-node child pairs (`node id -> [left,
    /// right]`). Leaves are `0..n`, internal ids `n..2n-1`, `root` one of
    /// them.
    pub fn from_structure(
        n: usize,
        children: &[(usize, [usize; 2])],
        root: usize,
    ) -> Result<Self> {
        if n < 2 || children.len() != n - 1 {
            return Err(Error::InvalidInput(format!(
                "binary tree on {n} leaves needs {} internal nodes",
                n.saturating_sub(1)
            )));
        }
        let total = 2 * n - 1;
        let mut child_arr = vec![[NONE, NONE]; total];
        let mut parent = vec![NONE; total];
        for &(id, kids) in children {
            if id < n || id >= total {
                return Err(Error::InvalidInput(format!("internal id {id} out of range")));
            }
            for c in kids {
                if c >= total {
                    return Err(Error::InvalidInput(format!("child id {c} out of range")));
                }
                if parent[c] != NONE {
                    return Err(Error::InvalidInput(format!("node {c} has two parents")));
                }
                parent[c] = id;
            }
            child_arr[id] = kids;
        }
        if root < n || root >= total || parent[root] != NONE {
            return Err(Error::InvalidInput("bad root".into()));
        }
        let mut tree = Self {
            n,
            root,
            parent,
            children: child_arr,
            sets: vec![LeafSet::empty(n); total],
            sizes: vec![0; total],
        };
        tree.recompute_sets();
        if !tree.sets[root].is_full() {
            return Err(Error::InvalidInput("tree does not cover all leaves".into()));
        }
        Ok(tree)
    }

    pub fn n_leaves(&self) -> usize {
        self.n
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn is_leaf(&self, id: usize) -> bool {
        id < self.n
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        if self.parent[id] == NONE {
            None
        } else {
            Some(self.parent[id])
        }
    }

    pub fn children(&self, id: usize) -> [usize; 2] {
        debug_assert!(!self.is_leaf(id));
        self.children[id]
    }

    pub fn internal_ids(&self) -> std::ops::Range<usize> {
        self.n..2 * self.n - 1
    }

    pub fn leaf_set(&self, id: usize) -> &LeafSet {
        &self.sets[id]
    }

    /// Canonical clade list: the leaf set of every internal node, sorted.
    pub fn clades(&self) -> Vec<LeafSet> {
        let mut c: Vec<LeafSet> = self.internal_ids().map(|i| self.sets[i].clone()).collect();
        c.sort();
        c
    }

    fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0usize; 2 * self.n - 1];
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            if !self.is_leaf(id) {
                for c in self.children[id] {
                    depth[c] = depth[id] + 1;
                    stack.push(c);
                }
            }
        }
        depth
    }

    fn lca(&self, depths: &[usize], u: usize, v: usize) -> usize {
        let (mut a, mut b) = (u, v);
        while depths[a] > depths[b] {
            a = self.parent[a];
        }
        while depths[b] > depths[a] {
            b = self.parent[b];
        }
        while a != b {
            a = self.parent[a];
            b = self.parent[b];
        }
        a
    }

    fn recompute_sets(&mut self) {
        // Postorder over the fixed arena.
        let mut order = Vec::with_capacity(2 * self.n - 1);
        let mut stack = vec![(self.root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded || self.is_leaf(id) {
                order.push(id);
            } else {
                stack.push((id, true));
                stack.push((self.children[id][0], false));
                stack.push((self.children[id][1], false));
            }
        }
        for id in order {
            if self.is_leaf(id) {
                self.sets[id] = LeafSet::singleton(self.n, id);
                self.sizes[id] = 1;
            } else {
                let [a, b] = self.children[id];
                self.sets[id] = self.sets[a].union(&self.sets[b]);
                self.sizes[id] = self.sizes[a] + self.sizes[b];
            }
        }
    }

    /// Convert to the general dendrogram representation (ids preserved).
    pub fn to_dendrogram(&self) -> Dendrogram {
        let children: Vec<Vec<NodeId>> = self
            .internal_ids()
            .map(|id| self.children[id].to_vec())
            .collect();
        Dendrogram::from_children(self.n, children).expect("binary arena is a valid dendrogram")
    }
}

/// Build the tree determined by an insertion-choice vector: leaf `k` is
/// attached at position `choices[k - 2]` among the `2k - 1` available
/// (every edge of the current tree, plus a new root). Enumerating all
/// choice vectors enumerates all `(2n - 3)!!` topologies exactly once.
fn build_from_choices(n: usize, choices: &[usize]) -> BinaryDendrogram {
    debug_assert!(n >= 2 && choices.len() == n - 2);
    let total = 2 * n - 1;
    let mut parent = vec![NONE; total];
    let mut children = vec![[NONE, NONE]; total];
    let mut root = n;
    children[n] = [0, 1];
    parent[0] = n;
    parent[1] = n;
    for k in 2..n {
        let m = n + k - 1;
        let choice = choices[k - 2];
        debug_assert!(choice < 2 * k - 1);
        if choice == 2 * k - 2 {
            children[m] = [root, k];
            parent[root] = m;
            parent[k] = m;
            root = m;
        } else {
            // Non-root nodes in fixed order: leaves 0..k, then internals.
            let mut idx = 0;
            let mut x = NONE;
            for cand in (0..k).chain(n..n + k - 1) {
                if cand == root {
                    continue;
                }
                if idx == choice {
                    x = cand;
                    break;
                }
                idx += 1;
            }
            debug_assert_ne!(x, NONE);
            let p = parent[x];
            let slot = if children[p][0] == x { 0 } else { 1 };
            children[p][slot] = m;
            children[m] = [x, k];
            parent[m] = p;
            parent[x] = m;
            parent[k] = m;
        }
    }
    let mut tree = BinaryDendrogram {
        n,
        root,
        parent,
        children,
        sets: vec![LeafSet::empty(n); total],
        sizes: vec![0; total],
    };
    tree.recompute_sets();
    tree
}

/// Uniformly random leaf-labeled binary topology via sequential random
/// insertion.
pub fn random_binary_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<BinaryDendrogram> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "binary dendrogram needs at least 2 leaves, got {n}"
        )));
    }
    let choices: Vec<usize> = (2..n).map(|k| rng.random_range(0..2 * k - 1)).collect();
    Ok(build_from_choices(n, &choices))
}

/// Every leaf-labeled binary topology on `n` leaves. Exhaustive; intended
/// for small-n validation.
pub fn all_binary_topologies(n: usize) -> Vec<BinaryDendrogram> {
    assert!(n >= 2);
    let mut vectors: Vec<Vec<usize>> = vec![vec![]];
    for k in 2..n {
        let mut next = Vec::new();
        for v in &vectors {
            for c in 0..2 * k - 1 {
                let mut v2 = v.clone();
                v2.push(c);
                next.push(v2);
            }
        }
        vectors = next;
    }
    vectors
        .iter()
        .map(|v| build_from_choices(n, v))
        .collect()
}

/// A random dendrogram: a uniform binary topology with each non-root
/// internal node contracted into its parent with probability
/// `contract_prob`. Useful for randomized validation.
pub fn random_dendrogram<R: Rng + ?Sized>(n: usize, contract_prob: f64, rng: &mut R) -> Dendrogram {
    if n == 1 {
        return Dendrogram::star(1);
    }
    let bt = random_binary_tree(n, rng).expect("n >= 2");
    let mut contracted = vec![false; 2 * n - 1];
    for id in bt.internal_ids() {
        if id != bt.root() {
            contracted[id] = rng.random_bool(contract_prob);
        }
    }
    // Survivors keep their relative order; build child lists by expanding
    // contracted descendants.
    let survivors: Vec<usize> = bt
        .internal_ids()
        .filter(|&id| !contracted[id])
        .collect();
    let index_of: HashMap<usize, usize> =
        survivors.iter().enumerate().map(|(i, &id)| (id, i)).collect();

    fn expand(
        bt: &BinaryDendrogram,
        contracted: &[bool],
        id: usize,
        out: &mut Vec<usize>,
    ) {
        if bt.is_leaf(id) || !contracted[id] {
            out.push(id);
        } else {
            let [a, b] = bt.children(id);
            expand(bt, contracted, a, out);
            expand(bt, contracted, b, out);
        }
    }

    let children_lists: Vec<Vec<NodeId>> = survivors
        .iter()
        .map(|&id| {
            let mut kids = Vec::new();
            let [a, b] = bt.children(id);
            expand(&bt, &contracted, a, &mut kids);
            expand(&bt, &contracted, b, &mut kids);
            kids.iter()
                .map(|&k| {
                    if k < n {
                        k
                    } else {
                        n + index_of[&k]
                    }
                })
                .collect()
        })
        .collect();
    Dendrogram::from_children(n, children_lists).expect("contraction preserves validity")
}

/// The clade set of one sampled tree, canonically ordered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartitionSample {
    pub clades: Vec<LeafSet>,
}

/// Aggregated marginal window score of a binary tree, computed from
/// scratch: per node, the Beta-Binomial marginal of the window-summed edge
/// counts over `w * N_r` possible pairs.
pub fn window_score(tree: &BinaryDendrogram, window: &GraphWindow, prior: &BetaParams) -> f64 {
    let w = window.len() as u64;
    let depths = tree.depths();
    let mut sum_e = vec![0u64; 2 * tree.n_leaves() - 1];
    for snap in window.snapshots() {
        for &(u, v) in snap.edges() {
            sum_e[tree.lca(&depths, u as usize, v as usize)] += 1;
        }
    }
    tree.internal_ids()
        .map(|id| {
            let [a, b] = tree.children(id);
            let pairs = w * tree.sizes[a] * tree.sizes[b];
            node_log_marginal(sum_e[id], pairs, prior)
        })
        .sum()
}

/// Metropolis chain over binary dendrograms for one window.
pub struct McmcChain {
    tree: BinaryDendrogram,
    prior: BetaParams,
    w: u64,
    adj: Vec<Vec<(usize, u64)>>,
    sum_e: Vec<u64>,
    contrib: Vec<f64>,
    score: f64,
    accepted: u64,
    proposed: u64,
}

impl McmcChain {
    pub fn new(window: &GraphWindow, prior: BetaParams, tree: BinaryDendrogram) -> Result<Self> {
        let n = window.vertex_count();
        if tree.n_leaves() != n {
            return Err(Error::InvalidInput(format!(
                "tree has {} leaves but window has {} vertices",
                tree.n_leaves(),
                n
            )));
        }
        // Aggregate the window into a multiplicity-weighted adjacency.
        let mut mult: HashMap<(u32, u32), u64> = HashMap::new();
        for snap in window.snapshots() {
            for &e in snap.edges() {
                *mult.entry(e).or_insert(0) += 1;
            }
        }
        let mut adj: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n];
        for (&(u, v), &m) in &mult {
            adj[u as usize].push((v as usize, m));
            adj[v as usize].push((u as usize, m));
        }
        for list in &mut adj {
            list.sort_unstable();
        }

        let depths = tree.depths();
        let mut sum_e = vec![0u64; 2 * n - 1];
        for (&(u, v), &m) in &mult {
            sum_e[tree.lca(&depths, u as usize, v as usize)] += m;
        }
        let w = window.len() as u64;
        let mut contrib = vec![0.0; 2 * n - 1];
        let mut score = 0.0;
        for id in tree.internal_ids() {
            let [a, b] = tree.children(id);
            let pairs = w * tree.sizes[a] * tree.sizes[b];
            contrib[id] = node_log_marginal(sum_e[id], pairs, &prior);
            score += contrib[id];
        }
        Ok(Self {
            tree,
            prior,
            w,
            adj,
            sum_e,
            contrib,
            score,
            accepted: 0,
            proposed: 0,
        })
    }

    pub fn tree(&self) -> &BinaryDendrogram {
        &self.tree
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn acceptance_counts(&self) -> (u64, u64) {
        (self.accepted, self.proposed)
    }

    pub fn sample(&self) -> BipartitionSample {
        BipartitionSample {
            clades: self.tree.clades(),
        }
    }

    /// Window-summed edge count between two disjoint subtree leaf sets.
    fn cross_edges(&self, a: usize, b: usize) -> u64 {
        let (small, large) = if self.tree.sizes[a] <= self.tree.sizes[b] {
            (a, b)
        } else {
            (b, a)
        };
        let mut total = 0;
        for u in self.tree.sets[small].iter() {
            for &(v, m) in &self.adj[u] {
                if self.tree.sets[large].contains(v) {
                    total += m;
                }
            }
        }
        total
    }

    /// One nearest-neighbor-interchange proposal with Metropolis
    /// acceptance. Returns whether the proposal was accepted. A tree on
    /// fewer than 3 leaves has no moves.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        self.step_at_temperature(rng, 1.0)
    }

    /// Metropolis step with the score delta divided by `temperature`.
    /// Temperatures above 1 flatten the landscape; burn-in anneals toward 1
    /// so the sampling phase targets the true posterior.
    pub fn step_at_temperature<R: Rng + ?Sized>(&mut self, rng: &mut R, temperature: f64) -> bool {
        let n = self.tree.n;
        if n < 3 {
            return false;
        }
        self.proposed += 1;
        let pivot = loop {
            let cand = rng.random_range(n..2 * n - 1);
            if cand != self.tree.root {
                break cand;
            }
        };
        let p = self.tree.parent[pivot];
        let [a, b] = self.tree.children[pivot];
        let s = {
            let [x, y] = self.tree.children[p];
            if x == pivot {
                y
            } else {
                x
            }
        };

        let e_ab = self.sum_e[pivot];
        let e_ps = self.sum_e[p];
        let e_as = self.cross_edges(a, s);
        let e_bs = e_ps - e_as;
        let (sa, sb, ss) = (
            self.tree.sizes[a],
            self.tree.sizes[b],
            self.tree.sizes[s],
        );

        // true: pivot keeps `a`, swaps `b` out for the sibling.
        let keep_a = rng.random_bool(0.5);
        let (new_r_e, new_r_pairs, new_p_e, new_p_pairs, stay, out) = if keep_a {
            (e_as, sa * ss, e_ab + e_bs, (sa + ss) * sb, a, b)
        } else {
            (e_bs, sb * ss, e_ab + e_as, (sb + ss) * sa, b, a)
        };

        let new_r_contrib = node_log_marginal(new_r_e, self.w * new_r_pairs, &self.prior);
        let new_p_contrib = node_log_marginal(new_p_e, self.w * new_p_pairs, &self.prior);
        let delta = new_r_contrib + new_p_contrib - self.contrib[pivot] - self.contrib[p];

        let accept = delta >= 0.0 || rng.random::<f64>() < (delta / temperature).exp();
        if !accept {
            return false;
        }
        self.accepted += 1;

        // pivot = {stay, s}; parent swaps s out for `out`.
        self.tree.children[pivot] = [stay, s];
        let slot = if self.tree.children[p][0] == s { 0 } else { 1 };
        self.tree.children[p][slot] = out;
        // The pivot slot in p stays as is.
        let pivot_slot = if self.tree.children[p][0] == pivot { 0 } else { 1 };
        debug_assert_ne!(slot, pivot_slot);
        self.tree.parent[s] = pivot;
        self.tree.parent[out] = p;
        self.tree.sets[pivot] = self.tree.sets[stay].union(&self.tree.sets[s]);
        self.tree.sizes[pivot] = self.tree.sizes[stay] + self.tree.sizes[s];
        self.sum_e[pivot] = new_r_e;
        self.sum_e[p] = new_p_e;
        self.contrib[pivot] = new_r_contrib;
        self.contrib[p] = new_p_contrib;
        self.score += delta;
        true
    }

    /// One sweep = `n` steps.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for _ in 0..self.tree.n {
            self.step(rng);
        }
    }
}

/// One Metropolis step as a standalone operation: convenience wrapper that
/// builds the chain context, advances it once, and returns the new state.
pub fn mcmc_step<R: Rng + ?Sized>(
    state: &BinaryDendrogram,
    window: &GraphWindow,
    prior: &BetaParams,
    rng: &mut R,
) -> Result<BinaryDendrogram> {
    let mut chain = McmcChain::new(window, *prior, state.clone())?;
    chain.step(rng);
    Ok(chain.tree.clone())
}

/// Sample the posterior distribution of bipartitions: per chain, an
/// annealed burn-in followed by `n_samples / n_chains` clade sets spaced
/// `sample_interval_sweeps` sweeps apart. Chains run independently (and in
/// parallel) on streams derived from `(seed, chain index)`; the merged
/// sample list is ordered by chain index, so results are reproducible for
/// any worker count.
pub fn sample_posterior(
    window: &GraphWindow,
    prior: &BetaParams,
    cfg: &FitConfig,
) -> Result<Vec<BipartitionSample>> {
    cfg.validate()?;
    let n = window.vertex_count();
    if n < 2 {
        return Err(Error::InvalidInput(
            "posterior sampling needs at least 2 vertices".into(),
        ));
    }
    let per_chain = cfg.n_samples.div_ceil(cfg.n_chains);
    let chains: Vec<Vec<BipartitionSample>> = (0..cfg.n_chains)
        .into_par_iter()
        .map(|c| -> Result<Vec<BipartitionSample>> {
            let mut rng = derive_rng(cfg.seed, &[domain::FIT, c as u64]);
            let init = random_binary_tree(n, &mut rng)?;
            let mut chain = McmcChain::new(window, *prior, init)?;
            for sweep in 0..cfg.burn_in_sweeps {
                let t = BURN_IN_START_TEMPERATURE
                    .powf(1.0 - sweep as f64 / cfg.burn_in_sweeps as f64);
                for _ in 0..n {
                    chain.step_at_temperature(&mut rng, t);
                }
            }
            let mut samples = Vec::with_capacity(per_chain);
            for i in 0..per_chain {
                if i > 0 {
                    for _ in 0..cfg.sample_interval_sweeps {
                        chain.sweep(&mut rng);
                    }
                }
                samples.push(chain.sample());
            }
            Ok(samples)
        })
        .collect::<Result<_>>()?;
    Ok(chains
        .into_iter()
        .flatten()
        .take(cfg.n_samples)
        .collect())
}

/// Majority-rule consensus: the tree containing exactly the non-trivial
/// clades appearing in more than half of the samples, plus the root.
pub fn consensus_tree(samples: &[BipartitionSample]) -> Result<Dendrogram> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidInput("no samples for consensus".into()))?;
    let n = first
        .clades
        .first()
        .map(|c| c.n())
        .ok_or_else(|| Error::InvalidInput("samples carry no clades".into()))?;
    let m = samples.len();

    let mut counts: HashMap<LeafSet, usize> = HashMap::new();
    for sample in samples {
        for clade in &sample.clades {
            if clade.n() != n {
                return Err(Error::InvalidInput(
                    "samples span different leaf sets".into(),
                ));
            }
            let size = clade.count();
            if size > 1 && size < n {
                *counts.entry(clade.clone()).or_insert(0) += 1;
            }
        }
    }
    let mut majority: Vec<LeafSet> = counts
        .into_iter()
        .filter(|(_, c)| 2 * c > m)
        .map(|(clade, _)| clade)
        .collect();
    // Largest first; ties broken by canonical set order for determinism.
    majority.sort_by(|a, b| b.count().cmp(&a.count()).then(a.cmp(b)));

    // Strict-majority clades are pairwise compatible; anything else is a bug.
    for i in 0..majority.len() {
        for j in i + 1..majority.len() {
            if !majority[i].compatible_with(&majority[j]) {
                return Err(Error::Internal(
                    "incompatible strict-majority clades".into(),
                ));
            }
        }
    }

    build_consensus(n, &majority)
}

fn build_consensus(n: usize, majority: &[LeafSet]) -> Result<Dendrogram> {
    // Internal 0 is the root; majority clades follow in sorted order.
    let k = majority.len();
    // parent_of[i]: index into the internal list for clade i.
    let parent_of: Vec<usize> = (0..k)
        .map(|i| {
            let mut best: Option<usize> = None;
            for j in 0..k {
                if j != i
                    && majority[i].is_subset_of(&majority[j])
                    && majority[j].count() > majority[i].count()
                {
                    best = match best {
                        Some(cur) if majority[cur].count() <= majority[j].count() => Some(cur),
                        _ => Some(j),
                    };
                }
            }
            best.map(|j| j + 1).unwrap_or(0)
        })
        .collect();

    let mut children: Vec<Vec<NodeId>> = vec![Vec::new(); k + 1];
    // Leaves attach to the smallest clade containing them, else the root.
    for v in 0..n {
        let mut best: Option<usize> = None;
        for (i, clade) in majority.iter().enumerate() {
            if clade.contains(v) {
                best = match best {
                    Some(cur) if majority[cur].count() <= clade.count() => Some(cur),
                    _ => Some(i),
                };
            }
        }
        let host = best.map(|i| i + 1).unwrap_or(0);
        children[host].push(v);
    }
    for (i, &p) in parent_of.iter().enumerate() {
        children[p].push(n + 1 + i);
    }
    if n == 1 {
        return Ok(Dendrogram::star(1));
    }
    Dendrogram::from_children(n, children)
}

/// Fit a model to a window: sample bipartitions, reduce to the majority
/// consensus tree, and attach posterior hyperparameters computed from the
/// window's counts on that tree.
pub fn fit_ghrg(window: &GraphWindow, prior: &BetaParams, cfg: &FitConfig) -> Result<GhrgModel> {
    let n = window.vertex_count();
    if n == 1 {
        let tree = Dendrogram::star(1);
        return GhrgModel::new(tree, vec![*prior], vec![0], window.len());
    }
    let samples = sample_posterior(window, prior, cfg)?;
    let tree = consensus_tree(&samples)?;
    let counts: Vec<_> = window
        .snapshots()
        .iter()
        .map(|g| tree.count_pairs(g))
        .collect::<Result<_>>()?;
    let params = crate::ghrg::posterior_update(prior, &counts)?;
    let mut window_edges = vec![0u64; tree.node_count()];
    for c in &counts {
        for (acc, e) in window_edges.iter_mut().zip(&c.edges) {
            *acc += e;
        }
    }
    GhrgModel::new(tree, params, window_edges, window.len())
}
