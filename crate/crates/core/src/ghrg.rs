//! The hierarchical random graph distribution over networks.
//!
//! A dendrogram partitions the vertices into nested groups; each internal
//! node `r` carries a connection probability governing every vertex pair
//! whose lowest common ancestor is `r`. With a Beta prior on each
//! probability the per-graph marginal likelihood is a product of
//! Beta-Binomial terms, and observing graphs updates the hyperparameters by
//! simple counting. The tree with only a root reproduces the Erdős–Rényi
//! model; a full binary tree recovers the classic hierarchical random graph.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::graph::GraphSnapshot;
use crate::leafset::LeafSet;

pub type NodeId = usize;

/// Beta hyperparameters: pseudo-counts of present and absent edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(beta > 0.0) {
            return Err(Error::InvalidInput(format!(
                "Beta hyperparameters must be positive, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// The uniform prior, alpha = beta = 1.
    pub fn uniform() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
        }
    }

    /// Posterior mean alpha / (alpha + beta).
    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }
}

/// Posterior mean of a Beta distribution.
pub fn posterior_mean(params: &BetaParams) -> f64 {
    params.mean()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Leaf { vertex: usize },
    Internal { children: Vec<NodeId> },
}

/// A rooted tree whose leaves are the vertices `0..n`; internal nodes have
/// at least two children. Leaves occupy node ids `0..n` (leaf id ==
/// vertex id); internal nodes follow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dendrogram {
    nodes: Vec<Node>,
    parent: Vec<Option<NodeId>>,
    root: NodeId,
    n_leaves: usize,
}

impl Dendrogram {
    /// The flat tree: one root over all `n` vertices. For `n == 1` the tree
    /// is the single leaf (no internal nodes).
    pub fn star(n: usize) -> Self {
        assert!(n >= 1, "star tree needs at least one vertex");
        if n == 1 {
            return Self {
                nodes: vec![Node::Leaf { vertex: 0 }],
                parent: vec![None],
                root: 0,
                n_leaves: 1,
            };
        }
        let mut nodes: Vec<Node> = (0..n).map(|v| Node::Leaf { vertex: v }).collect();
        nodes.push(Node::Internal {
            children: (0..n).collect(),
        });
        let mut parent = vec![Some(n); n];
        parent.push(None);
        Self {
            nodes,
            parent,
            root: n,
            n_leaves: n,
        }
    }

    /// Build from internal-node child lists; internal node `i` gets node id
    /// `n_leaves + i`. Child ids may reference leaves (`< n_leaves`) or other
    /// internal nodes.
    pub fn from_children(n_leaves: usize, internal_children: Vec<Vec<NodeId>>) -> Result<Self> {
        if n_leaves == 0 {
            return Err(Error::InvalidInput("dendrogram needs leaves".into()));
        }
        let n_nodes = n_leaves + internal_children.len();
        let mut nodes: Vec<Node> = (0..n_leaves).map(|v| Node::Leaf { vertex: v }).collect();
        for children in &internal_children {
            if children.len() < 2 {
                return Err(Error::InvalidInput(
                    "internal node with fewer than 2 children".into(),
                ));
            }
            nodes.push(Node::Internal {
                children: children.clone(),
            });
        }
        let mut parent: Vec<Option<NodeId>> = vec![None; n_nodes];
        for (i, children) in internal_children.iter().enumerate() {
            let id = n_leaves + i;
            for &c in children {
                if c >= n_nodes {
                    return Err(Error::InvalidInput(format!("child id {c} out of range")));
                }
                if parent[c].is_some() {
                    return Err(Error::InvalidInput(format!("node {c} has two parents")));
                }
                parent[c] = Some(id);
            }
        }
        let roots: Vec<NodeId> = (0..n_nodes).filter(|&i| parent[i].is_none()).collect();
        if n_leaves == 1 && internal_children.is_empty() {
            return Ok(Self {
                nodes,
                parent,
                root: 0,
                n_leaves,
            });
        }
        if roots.len() != 1 {
            return Err(Error::InvalidInput(format!(
                "expected exactly one root, found {}",
                roots.len()
            )));
        }
        let tree = Self {
            nodes,
            parent,
            root: roots[0],
            n_leaves,
        };
        // Reject cycles / unreachable nodes.
        let mut seen = 0usize;
        let mut stack = vec![tree.root];
        let mut visited = vec![false; n_nodes];
        while let Some(id) = stack.pop() {
            if visited[id] {
                return Err(Error::InvalidInput("cycle in dendrogram".into()));
            }
            visited[id] = true;
            seen += 1;
            if let Node::Internal { children } = &tree.nodes[id] {
                stack.extend_from_slice(children);
            }
        }
        if seen != n_nodes {
            return Err(Error::InvalidInput("disconnected dendrogram".into()));
        }
        Ok(tree)
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        matches!(self.nodes[id], Node::Leaf { .. })
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        match &self.nodes[id] {
            Node::Leaf { .. } => &[],
            Node::Internal { children } => children,
        }
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.parent[id]
    }

    /// Internal node ids in ascending order.
    pub fn internal_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(move |&i| !self.is_leaf(i))
    }

    /// Number of leaves below each node.
    pub fn subtree_leaf_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.nodes.len()];
        for id in self.postorder() {
            counts[id] = match &self.nodes[id] {
                Node::Leaf { .. } => 1,
                Node::Internal { children } => children.iter().map(|&c| counts[c]).sum(),
            };
        }
        counts
    }

    /// Leaf set below each node.
    pub fn leaf_sets(&self) -> Vec<LeafSet> {
        let mut sets = vec![LeafSet::empty(self.n_leaves); self.nodes.len()];
        for id in self.postorder() {
            match &self.nodes[id] {
                Node::Leaf { vertex } => sets[id].insert(*vertex),
                Node::Internal { children } => {
                    let mut acc = LeafSet::empty(self.n_leaves);
                    for &c in children {
                        acc = acc.union(&sets[c]);
                    }
                    sets[id] = acc;
                }
            }
        }
        sets
    }

    /// Node ids in postorder (children before parents).
    pub fn postorder(&self) -> Vec<NodeId> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded || self.is_leaf(id) {
                order.push(id);
            } else {
                stack.push((id, true));
                for &c in self.children(id) {
                    stack.push((c, false));
                }
            }
        }
        order
    }

    fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0usize; self.nodes.len()];
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            for &c in self.children(id) {
                depth[c] = depth[id] + 1;
                stack.push(c);
            }
        }
        depth
    }

    /// Lowest common ancestor of two leaves (vertex ids double as leaf node
    /// ids).
    pub fn lca(&self, depths: &[usize], u: usize, v: usize) -> NodeId {
        let (mut a, mut b) = (u, v);
        while depths[a] > depths[b] {
            a = self.parent[a].expect("non-root node has a parent");
        }
        while depths[b] > depths[a] {
            b = self.parent[b].expect("non-root node has a parent");
        }
        while a != b {
            a = self.parent[a].expect("non-root node has a parent");
            b = self.parent[b].expect("non-root node has a parent");
        }
        a
    }

    /// Possible-pair counts per node: `N_r = sum_{i<j} |c_i||c_j|` over the
    /// children of `r`, zero at leaves.
    pub fn possible_pairs(&self) -> Vec<u64> {
        let sizes = self.subtree_leaf_counts();
        (0..self.nodes.len())
            .map(|id| match &self.nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Internal { children } => {
                    let total: u64 = children.iter().map(|&c| sizes[c] as u64).sum();
                    let sq: u64 = children.iter().map(|&c| (sizes[c] as u64).pow(2)).sum();
                    (total * total - sq) / 2
                }
            })
            .collect()
    }

    /// Count, per node, the edges whose endpoints have that node as lowest
    /// common ancestor, together with the possible-pair counts.
    pub fn count_pairs(&self, graph: &GraphSnapshot) -> Result<PairCounts> {
        if graph.vertex_count() != self.n_leaves {
            return Err(Error::InvalidInput(format!(
                "tree has {} leaves but graph has {} vertices",
                self.n_leaves,
                graph.vertex_count()
            )));
        }
        let depths = self.depths();
        let mut edges = vec![0u64; self.nodes.len()];
        for &(u, v) in graph.edges() {
            edges[self.lca(&depths, u as usize, v as usize)] += 1;
        }
        Ok(PairCounts {
            edges,
            pairs: self.possible_pairs(),
        })
    }

    /// Smallest leaf id below each node; used for canonical child ordering.
    pub fn min_leaf(&self) -> Vec<usize> {
        let mut min = vec![usize::MAX; self.nodes.len()];
        for id in self.postorder() {
            min[id] = match &self.nodes[id] {
                Node::Leaf { vertex } => *vertex,
                Node::Internal { children } => {
                    children.iter().map(|&c| min[c]).min().unwrap()
                }
            };
        }
        min
    }
}

/// Edge and possible-pair counts aligned with a dendrogram's node ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCounts {
    pub edges: Vec<u64>,
    pub pairs: Vec<u64>,
}

impl PairCounts {
    pub fn total_edges(&self) -> u64 {
        self.edges.iter().sum()
    }

    pub fn total_pairs(&self) -> u64 {
        self.pairs.iter().sum()
    }
}

/// One Beta-Binomial marginal term: the log probability of observing
/// `edges` present out of `pairs` possible under a Beta(alpha, beta) prior.
/// Nodes with no possible pairs contribute exactly zero.
pub fn node_log_marginal(edges: u64, pairs: u64, prior: &BetaParams) -> f64 {
    if pairs == 0 {
        return 0.0;
    }
    debug_assert!(edges <= pairs);
    let (a, b) = (prior.alpha, prior.beta);
    let e = edges as f64;
    let n = pairs as f64;
    ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + ln_gamma(e + a) + ln_gamma(n - e + b)
        - ln_gamma(n + a + b)
}

/// Log likelihood of a graph under fixed connection probabilities
/// (`probs[r]` for internal node `r`).
pub fn log_likelihood(tree: &Dendrogram, probs: &[f64], graph: &GraphSnapshot) -> Result<f64> {
    if probs.len() != tree.node_count() {
        return Err(Error::InvalidInput(format!(
            "probability table has {} entries for {} nodes",
            probs.len(),
            tree.node_count()
        )));
    }
    let counts = tree.count_pairs(graph)?;
    let mut total = 0.0;
    for id in tree.internal_ids() {
        let (e, n) = (counts.edges[id], counts.pairs[id]);
        if n == 0 {
            continue;
        }
        let p = probs[id];
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!(
                "probability {p} at node {id} outside [0, 1]"
            )));
        }
        if e > 0 {
            if p == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            total += e as f64 * p.ln();
        }
        if e < n {
            if p == 1.0 {
                return Ok(f64::NEG_INFINITY);
            }
            total += (n - e) as f64 * (1.0 - p).ln();
        }
    }
    Ok(total)
}

/// Log marginal likelihood: the Beta prior integrated out independently at
/// every internal node.
pub fn log_marginal(tree: &Dendrogram, counts: &PairCounts, prior: &BetaParams) -> Result<f64> {
    if counts.edges.len() != tree.node_count() || counts.pairs.len() != tree.node_count() {
        return Err(Error::InvalidInput("counts do not match tree".into()));
    }
    let mut total = 0.0;
    for id in tree.internal_ids() {
        if counts.edges[id] > counts.pairs[id] {
            return Err(Error::InvalidInput(format!(
                "node {id} has more edges than possible pairs"
            )));
        }
        total += node_log_marginal(counts.edges[id], counts.pairs[id], prior);
    }
    Ok(total)
}

/// Log marginal of one graph's counts under per-node (posterior)
/// hyperparameters rather than a shared prior.
pub fn log_marginal_under(counts: &PairCounts, params: &[BetaParams]) -> f64 {
    let mut total = 0.0;
    for id in 0..counts.edges.len() {
        total += node_log_marginal(counts.edges[id], counts.pairs[id], &params[id]);
    }
    total
}

/// Hyperparameter update over a window of per-snapshot counts: per node,
/// `alpha' = alpha + sum_t E_r` and `beta' = beta + sum_t (N_r - E_r)`.
pub fn posterior_update(prior: &BetaParams, window_counts: &[PairCounts]) -> Result<Vec<BetaParams>> {
    let first = window_counts
        .first()
        .ok_or_else(|| Error::InvalidInput("empty window".into()))?;
    for c in window_counts {
        if c.pairs != first.pairs {
            return Err(Error::InvalidInput(
                "window counts computed on different trees".into(),
            ));
        }
    }
    let n_nodes = first.pairs.len();
    let mut out = Vec::with_capacity(n_nodes);
    for id in 0..n_nodes {
        let mut alpha = prior.alpha;
        let mut beta = prior.beta;
        for c in window_counts {
            alpha += c.edges[id] as f64;
            beta += (c.pairs[id] - c.edges[id]) as f64;
        }
        out.push(BetaParams { alpha, beta });
    }
    Ok(out)
}

/// A dendrogram with posterior hyperparameters at every internal node: a
/// distribution over graphs.
#[derive(Debug, Clone)]
pub struct GhrgModel {
    pub tree: Dendrogram,
    /// Per-node hyperparameters; entries at leaf ids are unused.
    pub params: Vec<BetaParams>,
    /// Per-node edge counts summed over the fitted window.
    pub window_edges: Vec<u64>,
    /// Number of snapshots the hyperparameters were updated on.
    pub window_len: usize,
}

impl GhrgModel {
    pub fn new(
        tree: Dendrogram,
        params: Vec<BetaParams>,
        window_edges: Vec<u64>,
        window_len: usize,
    ) -> Result<Self> {
        if params.len() != tree.node_count() || window_edges.len() != tree.node_count() {
            return Err(Error::InvalidInput(
                "per-node tables do not match tree size".into(),
            ));
        }
        Ok(Self {
            tree,
            params,
            window_edges,
            window_len,
        })
    }

    /// Plug-in edge probabilities: the posterior mean at every node.
    pub fn mean_probs(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.mean()).collect()
    }

    /// One Beta draw per internal node, for posterior-draw bootstrap
    /// replicates.
    pub fn draw_probs<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        use rand_distr::Distribution;
        self.tree
            .internal_ids()
            .fold(vec![0.0; self.params.len()], |mut acc, id| {
                let p = &self.params[id];
                let dist = rand_distr::Beta::new(p.alpha, p.beta)
                    .expect("positive hyperparameters");
                acc[id] = dist.sample(rng);
                acc
            })
    }

    /// Sample a graph using the plug-in posterior-mean probabilities.
    pub fn sample_graph<R: Rng + ?Sized>(&self, time: i64, rng: &mut R) -> GraphSnapshot {
        self.sample_graph_with_probs(&self.mean_probs(), time, rng)
    }

    /// Sample a graph with explicit per-node probabilities: each vertex pair
    /// joins independently with the probability at its lowest common
    /// ancestor.
    pub fn sample_graph_with_probs<R: Rng + ?Sized>(
        &self,
        probs: &[f64],
        time: i64,
        rng: &mut R,
    ) -> GraphSnapshot {
        let sets = self.tree.leaf_sets();
        let mut edges = Vec::new();
        for id in self.tree.internal_ids() {
            let p = probs[id];
            if p <= 0.0 {
                continue;
            }
            let children = self.tree.children(id);
            for i in 0..children.len() {
                for j in i + 1..children.len() {
                    for u in sets[children[i]].iter() {
                        for v in sets[children[j]].iter() {
                            if p >= 1.0 || rng.random_bool(p) {
                                edges.push((u.min(v) as u32, u.max(v) as u32));
                            }
                        }
                    }
                }
            }
        }
        GraphSnapshot::new(time, self.tree.n_leaves(), edges)
            .expect("sampled pairs are valid edges")
    }
}

// ---------------------------------------------------------------------------
// Serialization: canonical tree document
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DocNode {
    Leaf {
        leaf: usize,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        label: Option<String>,
    },
    Internal {
        children: Vec<DocNode>,
        edges: u64,
        pairs: u64,
        alpha: f64,
        beta: f64,
    },
}

/// Serialized model: per internal node its child list, window edge count,
/// possible pairs and hyperparameters; leaves carry vertex ids and labels.
/// Children are ordered by smallest contained leaf id, so serialization is
/// canonical and round-trip stable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeDoc {
    pub n: usize,
    pub window_len: usize,
    pub root: DocNode,
}

impl GhrgModel {
    pub fn to_doc(&self, labels: Option<&[String]>) -> TreeDoc {
        let min_leaf = self.tree.min_leaf();
        TreeDoc {
            n: self.tree.n_leaves(),
            window_len: self.window_len,
            root: self.doc_node(self.tree.root(), &min_leaf, labels),
        }
    }

    fn doc_node(&self, id: NodeId, min_leaf: &[usize], labels: Option<&[String]>) -> DocNode {
        if self.tree.is_leaf(id) {
            return DocNode::Leaf {
                leaf: id,
                label: labels.map(|l| l[id].clone()),
            };
        }
        let mut child_ids: Vec<NodeId> = self.tree.children(id).to_vec();
        child_ids.sort_by_key(|&c| min_leaf[c]);
        DocNode::Internal {
            children: child_ids
                .iter()
                .map(|&c| self.doc_node(c, min_leaf, labels))
                .collect(),
            edges: self.window_edges[id],
            pairs: self.tree.possible_pairs()[id],
            alpha: self.params[id].alpha,
            beta: self.params[id].beta,
        }
    }

    pub fn to_json(&self, labels: Option<&[String]>) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc(labels))?)
    }

    pub fn from_doc(doc: &TreeDoc) -> Result<(Self, Vec<Option<String>>)> {
        let n = doc.n;
        let mut internal_children: Vec<Vec<NodeId>> = Vec::new();
        let mut internal_meta: Vec<(u64, u64, f64, f64)> = Vec::new();
        let mut labels: Vec<Option<String>> = vec![None; n];
        let mut seen = vec![false; n];

        fn walk(
            node: &DocNode,
            n: usize,
            children_out: &mut Vec<Vec<NodeId>>,
            meta_out: &mut Vec<(u64, u64, f64, f64)>,
            labels: &mut [Option<String>],
            seen: &mut [bool],
        ) -> Result<NodeId> {
            match node {
                DocNode::Leaf { leaf, label } => {
                    if *leaf >= n {
                        return Err(Error::InvalidInput(format!("leaf id {leaf} out of range")));
                    }
                    if seen[*leaf] {
                        return Err(Error::InvalidInput(format!("duplicate leaf {leaf}")));
                    }
                    seen[*leaf] = true;
                    labels[*leaf] = label.clone();
                    Ok(*leaf)
                }
                DocNode::Internal {
                    children,
                    edges,
                    pairs,
                    alpha,
                    beta,
                } => {
                    let ids: Vec<NodeId> = children
                        .iter()
                        .map(|c| walk(c, n, children_out, meta_out, labels, seen))
                        .collect::<Result<_>>()?;
                    children_out.push(ids);
                    meta_out.push((*edges, *pairs, *alpha, *beta));
                    Ok(n + children_out.len() - 1)
                }
            }
        }

        let root = walk(
            &doc.root,
            n,
            &mut internal_children,
            &mut internal_meta,
            &mut labels,
            &mut seen,
        )?;
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidInput("document does not cover all leaves".into()));
        }
        let tree = Dendrogram::from_children(n, internal_children)?;
        if tree.root() != root && !(n == 1 && tree.root() == 0) {
            return Err(Error::Internal("root mismatch while parsing tree".into()));
        }
        let n_nodes = tree.node_count();
        let mut params = vec![BetaParams::uniform(); n_nodes];
        let mut window_edges = vec![0u64; n_nodes];
        let pairs = tree.possible_pairs();
        for (i, &(e, np, a, b)) in internal_meta.iter().enumerate() {
            let id = n + i;
            if pairs[id] != np {
                return Err(Error::InvalidInput(format!(
                    "stored pair count {np} at node {id} disagrees with structure ({})",
                    pairs[id]
                )));
            }
            params[id] = BetaParams::new(a, b)?;
            window_edges[id] = e;
        }
        let model = GhrgModel::new(tree, params, window_edges, doc.window_len)?;
        Ok((model, labels))
    }

    pub fn from_json(text: &str) -> Result<(Self, Vec<Option<String>>)> {
        let doc: TreeDoc = serde_json::from_str(text)?;
        Self::from_doc(&doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphSnapshot;
    use proptest::prelude::*;
    use rand::Rng;

    fn star_counts(n: usize, edges: &[(u32, u32)]) -> (Dendrogram, PairCounts) {
        let tree = Dendrogram::star(n);
        let g = GraphSnapshot::new(0, n, edges.iter().copied()).unwrap();
        let counts = tree.count_pairs(&g).unwrap();
        (tree, counts)
    }

    #[test]
    fn pair_counts_two_children() {
        // root with children of leaf sizes {2, 3} -> N_root = 6
        let tree = Dendrogram::from_children(5, vec![vec![0, 1], vec![2, 3, 4], vec![5, 6]])
            .unwrap();
        let pairs = tree.possible_pairs();
        assert_eq!(pairs[tree.root()], 6);
        assert_eq!(pairs.iter().sum::<u64>(), 10); // C(5,2)
    }

    #[test]
    fn pair_counts_three_children() {
        // sizes {1, 1, 2} -> 1 + 2 + 2 = 5
        let tree = Dendrogram::from_children(4, vec![vec![2, 3], vec![0, 1, 4]]).unwrap();
        assert_eq!(tree.possible_pairs()[tree.root()], 5);
    }

    #[test]
    fn star_counts_example() {
        let (tree, counts) = star_counts(3, &[(0, 1)]);
        assert_eq!(counts.edges[tree.root()], 1);
        assert_eq!(counts.pairs[tree.root()], 3);
    }

    #[test]
    fn count_pairs_rejects_mismatched_graph() {
        let tree = Dendrogram::star(3);
        let g = GraphSnapshot::empty(0, 4);
        assert!(tree.count_pairs(&g).is_err());
    }

    #[test]
    fn likelihood_examples() {
        let (tree, _) = star_counts(2, &[(0, 1)]);
        let g = GraphSnapshot::new(0, 2, [(0, 1)]).unwrap();
        let ll = log_likelihood(&tree, &[0.0, 0.0, 0.5], &g).unwrap();
        assert!((ll - 0.5f64.ln()).abs() < 1e-12);

        let g0 = GraphSnapshot::empty(0, 2);
        let ll0 = log_likelihood(&tree, &[0.0, 0.0, 0.5], &g0).unwrap();
        assert!((ll0 - 0.5f64.ln()).abs() < 1e-12);

        let tree3 = Dendrogram::star(3);
        let g3 = GraphSnapshot::new(0, 3, [(0, 1)]).unwrap();
        let ll3 = log_likelihood(&tree3, &[0.0; 3], &g3);
        assert!(ll3.is_err()); // wrong table length is an error

        let ll3 = log_likelihood(&tree3, &[0.0, 0.0, 0.0, 0.2], &g3).unwrap();
        assert!((ll3 - (0.2f64 * 0.8 * 0.8).ln()).abs() < 1e-12);
    }

    #[test]
    fn likelihood_degenerate_probabilities() {
        let tree = Dendrogram::star(3);
        let g = GraphSnapshot::new(0, 3, [(0, 1)]).unwrap();
        assert_eq!(
            log_likelihood(&tree, &[0.0, 0.0, 0.0, 0.0], &g).unwrap(),
            f64::NEG_INFINITY
        );
        assert_eq!(
            log_likelihood(&tree, &[0.0, 0.0, 0.0, 1.0], &g).unwrap(),
            f64::NEG_INFINITY
        );
        // p = 0 with zero observed edges is fine.
        let g0 = GraphSnapshot::empty(0, 3);
        assert_eq!(log_likelihood(&tree, &[0.0, 0.0, 0.0, 0.0], &g0).unwrap(), 0.0);
    }

    #[test]
    fn marginal_closed_forms() {
        let prior = BetaParams::uniform();
        let (tree, counts) = star_counts(2, &[(0, 1)]);
        let lm = log_marginal(&tree, &counts, &prior).unwrap();
        assert!((lm - 0.5f64.ln()).abs() < 1e-12);

        let (tree3, counts3) = star_counts(3, &[(0, 1)]);
        let lm3 = log_marginal(&tree3, &counts3, &prior).unwrap();
        assert!((lm3 - (1.0f64 / 12.0).ln()).abs() < 1e-12);
    }

    /// Numeric oracle: per-node ratio of unnormalized Beta integrals.
    /// `p = sin^2(theta)` removes the endpoint singularities, so composite
    /// Simpson converges at full order. Independent of the log-gamma route
    /// used by the implementation.
    fn quadrature_log_marginal(tree: &Dendrogram, counts: &PairCounts, prior: &BetaParams) -> f64 {
        fn beta_integral(alpha: f64, beta: f64) -> f64 {
            let panels = 1 << 12;
            let h = std::f64::consts::FRAC_PI_2 / panels as f64;
            let f = |theta: f64| {
                2.0 * theta.sin().powf(2.0 * alpha - 1.0) * theta.cos().powf(2.0 * beta - 1.0)
            };
            let mut acc = f(0.0) + f(std::f64::consts::FRAC_PI_2);
            for i in 1..panels {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
            }
            acc * h / 3.0
        }
        let mut total = 0.0;
        for id in tree.internal_ids() {
            let (e, n) = (counts.edges[id] as f64, counts.pairs[id] as f64);
            if counts.pairs[id] == 0 {
                continue;
            }
            let (a, b) = (prior.alpha, prior.beta);
            let numer = beta_integral(e + a, n - e + b);
            let denom = beta_integral(a, b);
            total += (numer / denom).ln();
        }
        total
    }

    #[test]
    fn marginal_matches_quadrature_on_random_inputs() {
        let mut rng = crate::rng::derive_rng(3, &[21]);
        for trial in 0..20 {
            let n = rng.random_range(2..=8);
            let tree = crate::fit::random_dendrogram(n, 0.3, &mut rng);
            let p_edge = rng.random_range(0.1..0.9);
            let mut edges = Vec::new();
            for u in 0..n as u32 {
                for v in u + 1..n as u32 {
                    if rng.random_bool(p_edge) {
                        edges.push((u, v));
                    }
                }
            }
            let g = GraphSnapshot::new(0, n, edges).unwrap();
            let counts = tree.count_pairs(&g).unwrap();
            let prior = BetaParams::new(
                rng.random_range(1.0..4.0),
                rng.random_range(1.0..4.0),
            )
            .unwrap();
            let exact = log_marginal(&tree, &counts, &prior).unwrap();
            let numeric = quadrature_log_marginal(&tree, &counts, &prior);
            assert!(
                (exact - numeric).abs() < 1e-6,
                "trial {trial}: exact {exact} vs numeric {numeric}"
            );
        }
    }

    #[test]
    fn posterior_update_example() {
        let prior = BetaParams::uniform();
        let tree = Dendrogram::star(4); // N_root = 6
        let counts: Vec<PairCounts> = [2u64, 0, 1]
            .iter()
            .map(|&e| {
                let mut c = PairCounts {
                    edges: vec![0; tree.node_count()],
                    pairs: tree.possible_pairs(),
                };
                c.edges[tree.root()] = e;
                c
            })
            .collect();
        let post = posterior_update(&prior, &counts).unwrap();
        assert_eq!(post[tree.root()].alpha, 4.0);
        assert_eq!(post[tree.root()].beta, 16.0);
        // Conservation: alpha + beta = alpha0 + beta0 + w * N_r.
        assert_eq!(post[tree.root()].alpha + post[tree.root()].beta, 2.0 + 3.0 * 6.0);
    }

    #[test]
    fn posterior_update_rejects_mismatched_trees() {
        let prior = BetaParams::uniform();
        let a = PairCounts {
            edges: vec![0, 0, 0, 0, 1],
            pairs: Dendrogram::star(4).possible_pairs(),
        };
        let b = PairCounts {
            edges: vec![0, 0, 0, 1],
            pairs: Dendrogram::star(3).possible_pairs(),
        };
        assert!(posterior_update(&prior, &[a, b]).is_err());
        assert!(posterior_update(&prior, &[]).is_err());
    }

    #[test]
    fn posterior_mean_examples() {
        assert_eq!(posterior_mean(&BetaParams::uniform()), 0.5);
        assert_eq!(posterior_mean(&BetaParams::new(4.0, 16.0).unwrap()), 0.2);
        let big = BetaParams::new(1.0 + 2_000.0, 1.0 + 8_000.0).unwrap();
        assert!((big.mean() - 0.2).abs() < 1e-3);
    }

    #[test]
    fn monotone_data_effect() {
        // Adding one observed edge at node r bumps alpha there by exactly 1.
        let tree = Dendrogram::from_children(4, vec![vec![0, 1], vec![2, 3], vec![4, 5]]).unwrap();
        let prior = BetaParams::uniform();
        let g0 = GraphSnapshot::new(0, 4, [(0, 1)]).unwrap();
        let g1 = GraphSnapshot::new(0, 4, [(0, 1), (2, 3)]).unwrap();
        let c0 = tree.count_pairs(&g0).unwrap();
        let c1 = tree.count_pairs(&g1).unwrap();
        let p0 = posterior_update(&prior, &[c0]).unwrap();
        let p1 = posterior_update(&prior, &[c1]).unwrap();
        let node_23 = 5; // internal over {2, 3}
        assert_eq!(p1[node_23].alpha, p0[node_23].alpha + 1.0);
        for id in tree.internal_ids() {
            if id != node_23 {
                assert_eq!(p1[id].alpha, p0[id].alpha);
            }
            assert_eq!(
                p1[id].alpha + p1[id].beta,
                p0[id].alpha + p0[id].beta
            );
        }
    }

    #[test]
    fn star_reproduces_erdos_renyi() {
        let n = 7usize;
        let tree = Dendrogram::star(n);
        let mut rng = crate::rng::derive_rng(5, &[22]);
        let mut edges = Vec::new();
        for u in 0..n as u32 {
            for v in u + 1..n as u32 {
                if rng.random_bool(0.4) {
                    edges.push((u, v));
                }
            }
        }
        let g = GraphSnapshot::new(0, n, edges).unwrap();
        let m = (n * (n - 1) / 2) as f64;
        let e = g.edge_count() as f64;
        let p = 0.37;
        let mut probs = vec![0.0; tree.node_count()];
        probs[tree.root()] = p;
        let ll = log_likelihood(&tree, &probs, &g).unwrap();
        let er = e * p.ln() + (m - e) * (1.0 - p).ln();
        assert!((ll - er).abs() < 1e-10);
    }

    #[test]
    fn sampling_extremes_and_mean() {
        let n = 30usize;
        let tree = Dendrogram::star(n);
        let mut params = vec![BetaParams::uniform(); tree.node_count()];
        params[tree.root()] = BetaParams::new(1e9, 1.0).unwrap();
        let model =
            GhrgModel::new(tree.clone(), params.clone(), vec![0; tree.node_count()], 1).unwrap();
        let mut rng = crate::rng::derive_rng(1, &[23]);
        let full = model.sample_graph_with_probs(
            &{
                let mut p = vec![0.0; tree.node_count()];
                p[tree.root()] = 1.0;
                p
            },
            0,
            &mut rng,
        );
        assert_eq!(full.edge_count(), n * (n - 1) / 2);
        let empty = model.sample_graph_with_probs(&vec![0.0; tree.node_count()], 0, &mut rng);
        assert_eq!(empty.edge_count(), 0);

        // Posterior mean 0.2 over 435 pairs: Binomial(435, 0.2).
        params[tree.root()] = BetaParams::new(2.0, 8.0).unwrap();
        let model = GhrgModel::new(tree, params, vec![0; 31], 1).unwrap();
        let reps = 10_000usize;
        let mut total = 0u64;
        for i in 0..reps {
            let mut r = crate::rng::derive_rng(7, &[24, i as u64]);
            total += model.sample_graph(0, &mut r).edge_count() as u64;
        }
        let mean = total as f64 / reps as f64;
        let expect = 435.0 * 0.2;
        let sigma = (435.0f64 * 0.2 * 0.8).sqrt() / (reps as f64).sqrt();
        assert!(
            (mean - expect).abs() < 3.0 * sigma,
            "mean {mean} vs {expect} (3 sigma = {})",
            3.0 * sigma
        );
    }

    #[test]
    fn doc_round_trip_is_canonical() {
        let tree = Dendrogram::from_children(5, vec![vec![3, 4], vec![2, 5], vec![1, 0, 6]])
            .unwrap();
        let g = GraphSnapshot::new(0, 5, [(0, 1), (3, 4), (0, 4)]).unwrap();
        let counts = tree.count_pairs(&g).unwrap();
        let params = posterior_update(&BetaParams::uniform(), &[counts.clone()]).unwrap();
        let model = GhrgModel::new(tree, params, counts.edges.clone(), 1).unwrap();
        let labels: Vec<String> = (0..5).map(|i| format!("v{i}")).collect();
        let json = model.to_json(Some(&labels)).unwrap();
        let (back, got_labels) = GhrgModel::from_json(&json).unwrap();
        let json2 = back.to_json(Some(&labels)).unwrap();
        assert_eq!(json, json2);
        assert_eq!(got_labels[3].as_deref(), Some("v3"));
        assert_eq!(back.window_len, 1);
        assert_eq!(
            back.tree.possible_pairs().iter().sum::<u64>(),
            10
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn pair_conservation(seed in 0u64..500) {
            let mut rng = crate::rng::derive_rng(seed, &[25]);
            let n = rng.random_range(2..=12);
            let tree = crate::fit::random_dendrogram(n, 0.4, &mut rng);
            let mut edges = Vec::new();
            for u in 0..n as u32 {
                for v in u + 1..n as u32 {
                    if rng.random_bool(0.3) {
                        edges.push((u, v));
                    }
                }
            }
            let g = GraphSnapshot::new(0, n, edges).unwrap();
            let counts = tree.count_pairs(&g).unwrap();
            prop_assert_eq!(counts.total_pairs(), (n * (n - 1) / 2) as u64);
            prop_assert_eq!(counts.total_edges(), g.edge_count() as u64);
        }

        #[test]
        fn marginal_invariant_under_child_permutation_and_relabeling(seed in 0u64..200) {
            let mut rng = crate::rng::derive_rng(seed, &[26]);
            let n = rng.random_range(3..=9);
            let tree = crate::fit::random_dendrogram(n, 0.4, &mut rng);
            let mut edges = Vec::new();
            for u in 0..n as u32 {
                for v in u + 1..n as u32 {
                    if rng.random_bool(0.4) {
                        edges.push((u, v));
                    }
                }
            }
            let g = GraphSnapshot::new(0, n, edges.clone()).unwrap();
            let prior = BetaParams::uniform();
            let base = log_marginal(&tree, &tree.count_pairs(&g).unwrap(), &prior).unwrap();

            // Shuffle every child list.
            let shuffled_children: Vec<Vec<NodeId>> = tree
                .internal_ids()
                .map(|id| {
                    let mut c = tree.children(id).to_vec();
                    use rand::seq::SliceRandom;
                    c.shuffle(&mut rng);
                    c
                })
                .collect();
            let shuffled = Dendrogram::from_children(n, shuffled_children).unwrap();
            let lm = log_marginal(&shuffled, &shuffled.count_pairs(&g).unwrap(), &prior).unwrap();
            prop_assert!((lm - base).abs() < 1e-9);

            // Relabel vertices with a random permutation, consistently.
            use rand::seq::SliceRandom;
            let mut perm: Vec<u32> = (0..n as u32).collect();
            perm.shuffle(&mut rng);
            let relabeled_children: Vec<Vec<NodeId>> = tree
                .internal_ids()
                .map(|id| {
                    tree.children(id)
                        .iter()
                        .map(|&c| if c < n { perm[c] as usize } else { c })
                        .collect()
                })
                .collect();
            let relabeled_tree = Dendrogram::from_children(n, relabeled_children).unwrap();
            let relabeled_edges: Vec<(u32, u32)> =
                edges.iter().map(|&(u, v)| (perm[u as usize], perm[v as usize])).collect();
            let rg = GraphSnapshot::new(0, n, relabeled_edges).unwrap();
            let lm2 =
                log_marginal(&relabeled_tree, &relabeled_tree.count_pairs(&rg).unwrap(), &prior)
                    .unwrap();
            prop_assert!((lm2 - base).abs() < 1e-9);
        }
    }
}
