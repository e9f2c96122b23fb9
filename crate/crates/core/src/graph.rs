//! Graph snapshots, snapshot sequences, and sliding windows.
//!
//! Graphs are undirected and simple: directed inputs are symmetrized and
//! self-loops dropped. A sequence shares one global vertex set (the union
//! over all snapshots); a vertex absent from a snapshot is present with
//! degree zero.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};

/// One undirected simple graph at an integer time step.
///
/// Edges are stored canonically: each pair ordered `(u, v)` with `u < v`,
/// the list sorted and duplicate-free, every endpoint `< n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSnapshot {
    time: i64,
    n: usize,
    edges: Vec<(u32, u32)>,
}

impl GraphSnapshot {
    /// Build a snapshot, canonicalizing pair order and rejecting self-loops,
    /// duplicates, and out-of-range endpoints.
    pub fn new(time: i64, n: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut canon: Vec<(u32, u32)> = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidInput(format!("self-loop at vertex {a}")));
            }
            if a as usize >= n || b as usize >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({a}, {b}) out of range for n={n}"
                )));
            }
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        let before = canon.len();
        canon.dedup();
        if canon.len() != before {
            return Err(Error::InvalidInput("duplicate edge".into()));
        }
        Ok(Self {
            time,
            n,
            edges: canon,
        })
    }

    pub fn empty(time: i64, n: usize) -> Self {
        Self {
            time,
            n,
            edges: Vec::new(),
        }
    }

    pub fn time(&self) -> i64 {
        self.time
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).is_ok()
    }

    /// Neighbor lists, ascending within each list.
    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// The same graph stamped with a different time.
    pub fn with_time(&self, time: i64) -> Self {
        Self {
            time,
            n: self.n,
            edges: self.edges.clone(),
        }
    }
}

/// How to treat time steps with no observed interactions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GapPolicy {
    /// Missing steps become empty snapshots (the detector assumes
    /// consecutive snapshots).
    #[default]
    Empty,
    /// Missing steps are dropped and the observed steps renumbered
    /// consecutively from the first observed time.
    Skip,
}

impl std::str::FromStr for GapPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "empty" => Ok(GapPolicy::Empty),
            "skip" => Ok(GapPolicy::Skip),
            other => Err(Error::InvalidInput(format!("unknown gap policy: {other}"))),
        }
    }
}

/// An ordered sequence of snapshots over a common vertex set.
///
/// Times are consecutive integers; `labels[id]` is the original external
/// label of vertex `id`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSequence {
    snapshots: Vec<GraphSnapshot>,
    labels: Vec<String>,
}

impl NetworkSequence {
    pub fn new(snapshots: Vec<GraphSnapshot>, labels: Vec<String>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::InvalidInput("empty snapshot sequence".into()));
        }
        let n = labels.len();
        for snap in &snapshots {
            if snap.vertex_count() != n {
                return Err(Error::InvalidInput(format!(
                    "snapshot at t={} has n={}, expected {}",
                    snap.time(),
                    snap.vertex_count(),
                    n
                )));
            }
        }
        for pair in snapshots.windows(2) {
            if pair[1].time() != pair[0].time() + 1 {
                return Err(Error::InvalidInput(format!(
                    "times not consecutive: {} then {}",
                    pair[0].time(),
                    pair[1].time()
                )));
            }
        }
        Ok(Self { snapshots, labels })
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn snapshots(&self) -> &[GraphSnapshot] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn start_time(&self) -> i64 {
        self.snapshots[0].time()
    }

    pub fn end_time(&self) -> i64 {
        self.snapshots[self.snapshots.len() - 1].time()
    }

    pub fn at(&self, time: i64) -> Option<&GraphSnapshot> {
        let idx = time.checked_sub(self.start_time())?;
        if idx < 0 {
            return None;
        }
        self.snapshots.get(idx as usize)
    }
}

/// A window of `w` consecutive snapshots ending at time `tau`.
#[derive(Debug, Clone)]
pub struct GraphWindow {
    tau: i64,
    snapshots: Vec<GraphSnapshot>,
}

impl GraphWindow {
    pub fn new(snapshots: Vec<GraphSnapshot>) -> Result<Self> {
        if snapshots.len() < 2 {
            return Err(Error::InvalidInput("window length must be >= 2".into()));
        }
        let n = snapshots[0].vertex_count();
        for pair in snapshots.windows(2) {
            if pair[1].time() != pair[0].time() + 1 {
                return Err(Error::InvalidInput("window times not consecutive".into()));
            }
        }
        if snapshots.iter().any(|s| s.vertex_count() != n) {
            return Err(Error::InvalidInput("window snapshots differ in n".into()));
        }
        let tau = snapshots[snapshots.len() - 1].time();
        Ok(Self { tau, snapshots })
    }

    pub fn tau(&self) -> i64 {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn start_time(&self) -> i64 {
        self.tau - self.snapshots.len() as i64 + 1
    }

    pub fn vertex_count(&self) -> usize {
        self.snapshots[0].vertex_count()
    }

    pub fn snapshots(&self) -> &[GraphSnapshot] {
        &self.snapshots
    }
}

/// The `w` snapshots of `seq` ending at `tau`.
pub fn window_at(seq: &NetworkSequence, tau: i64, w: usize) -> Result<GraphWindow> {
    if w < 2 {
        return Err(Error::InvalidInput(format!("window length {w} < 2")));
    }
    let first = tau - w as i64 + 1;
    if first < seq.start_time() || tau > seq.end_time() {
        return Err(Error::InvalidInput(format!(
            "window [{first}, {tau}] outside sequence [{}, {}]",
            seq.start_time(),
            seq.end_time()
        )));
    }
    let offset = (first - seq.start_time()) as usize;
    GraphWindow::new(seq.snapshots()[offset..offset + w].to_vec())
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parse a tab-separated edge list: lines `t<TAB>u<TAB>v`, `#` comments.
///
/// Vertex ids are assigned in first-appearance order over the whole stream;
/// per-time edge sets are deduplicated and self-loop lines contribute only
/// their label. Missing interior time steps follow the default gap policy
/// (empty snapshots).
pub fn parse_edge_list(text: &str) -> Result<NetworkSequence> {
    parse_edge_list_with_policy(text, GapPolicy::Empty)
}

pub fn parse_edge_list_with_policy(text: &str, policy: GapPolicy) -> Result<NetworkSequence> {
    let mut labels: Vec<String> = Vec::new();
    let mut ids: HashMap<String, u32> = HashMap::new();
    let mut bins: BTreeMap<i64, BTreeSet<(u32, u32)>> = BTreeMap::new();
    let mut intern = |name: &str, labels: &mut Vec<String>| -> u32 {
        if let Some(&id) = ids.get(name) {
            return id;
        }
        let id = labels.len() as u32;
        labels.push(name.to_string());
        ids.insert(name.to_string(), id);
        id
    };

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_error(
                lineno,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let t: i64 = fields[0]
            .parse()
            .map_err(|_| parse_error(lineno, format!("non-integer time {:?}", fields[0])))?;
        let u = intern(fields[1], &mut labels);
        let v = intern(fields[2], &mut labels);
        let bin = bins.entry(t).or_default();
        if u != v {
            bin.insert((u.min(v), u.max(v)));
        }
    }
    if bins.is_empty() {
        return Err(Error::InvalidInput("empty edge list".into()));
    }

    let n = labels.len();
    let t_min = *bins.keys().next().unwrap();
    let t_max = *bins.keys().next_back().unwrap();
    let snapshots = match policy {
        GapPolicy::Empty => (t_min..=t_max)
            .map(|t| {
                let edges = bins.get(&t).cloned().unwrap_or_default();
                GraphSnapshot::new(t, n, edges)
            })
            .collect::<Result<Vec<_>>>()?,
        GapPolicy::Skip => bins
            .iter()
            .enumerate()
            .map(|(k, (_, edges))| GraphSnapshot::new(t_min + k as i64, n, edges.iter().copied()))
            .collect::<Result<Vec<_>>>()?,
    };
    NetworkSequence::new(snapshots, labels)
}

/// Render a sequence in the edge-list format accepted by [`parse_edge_list`].
///
/// Only edges are emitted, so isolated vertices and leading/trailing empty
/// snapshots are not representable; interior gaps round-trip via the empty
/// gap policy.
pub fn serialize_edge_list(seq: &NetworkSequence) -> String {
    let mut out = String::new();
    for snap in seq.snapshots() {
        for &(u, v) in snap.edges() {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                snap.time(),
                seq.labels()[u as usize],
                seq.labels()[v as usize]
            ));
        }
    }
    out
}

/// Bin timestamped interaction events into a snapshot sequence.
///
/// Snapshot `k` holds edge `{u, v}` iff some event with
/// `floor((timestamp - t0) / bin_width) == k` links `u` and `v`, where `t0`
/// is the earliest timestamp. Empty bins produce empty snapshots.
pub fn aggregate_events<S: AsRef<str>>(
    events: &[(f64, S, S)],
    bin_width: f64,
) -> Result<NetworkSequence> {
    if events.is_empty() {
        return Err(Error::InvalidInput("no events to aggregate".into()));
    }
    if !(bin_width > 0.0) {
        return Err(Error::InvalidInput(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    let t0 = events
        .iter()
        .map(|e| e.0)
        .fold(f64::INFINITY, f64::min);
    let mut labels: Vec<String> = Vec::new();
    let mut ids: HashMap<String, u32> = HashMap::new();
    let mut intern = |name: &str, labels: &mut Vec<String>| -> u32 {
        if let Some(&id) = ids.get(name) {
            return id;
        }
        let id = labels.len() as u32;
        labels.push(name.to_string());
        ids.insert(name.to_string(), id);
        id
    };
    let mut bins: BTreeMap<i64, BTreeSet<(u32, u32)>> = BTreeMap::new();
    for (ts, u, v) in events {
        let k = ((ts - t0) / bin_width).floor() as i64;
        let u = intern(u.as_ref(), &mut labels);
        let v = intern(v.as_ref(), &mut labels);
        let bin = bins.entry(k).or_default();
        if u != v {
            bin.insert((u.min(v), u.max(v)));
        }
    }
    let n = labels.len();
    let k_max = *bins.keys().next_back().unwrap();
    let snapshots = (0..=k_max)
        .map(|k| {
            let edges = bins.get(&k).cloned().unwrap_or_default();
            GraphSnapshot::new(k, n, edges)
        })
        .collect::<Result<Vec<_>>>()?;
    NetworkSequence::new(snapshots, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq_from(text: &str) -> NetworkSequence {
        parse_edge_list(text).unwrap()
    }

    #[test]
    fn parse_dedups_symmetric_pair() {
        let seq = seq_from("0\ta\tb\n0\tb\ta\n1\ta\tc\n");
        assert_eq!(seq.vertex_count(), 3);
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.snapshots()[0].edge_count(), 1);
        assert_eq!(seq.snapshots()[1].edge_count(), 1);
    }

    #[test]
    fn parse_drops_self_loop_but_keeps_label() {
        let seq = seq_from("0\ta\ta\n");
        assert_eq!(seq.vertex_count(), 1);
        assert_eq!(seq.len(), 1);
        assert_eq!(seq.snapshots()[0].edge_count(), 0);
    }

    #[test]
    fn parse_rejects_non_integer_time_with_line_number() {
        let err = parse_edge_list("x\ta\tb\n0\ta\tb\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn parse_rejects_wrong_field_count() {
        let err = parse_edge_list("0\ta\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn parse_rejects_empty_stream() {
        assert!(parse_edge_list("").is_err());
        assert!(parse_edge_list("# only a comment\n").is_err());
    }

    #[test]
    fn gap_policies() {
        let text = "0\ta\tb\n2\ta\tb\n";
        let filled = parse_edge_list_with_policy(text, GapPolicy::Empty).unwrap();
        assert_eq!(filled.len(), 3);
        assert_eq!(filled.snapshots()[1].edge_count(), 0);
        let skipped = parse_edge_list_with_policy(text, GapPolicy::Skip).unwrap();
        assert_eq!(skipped.len(), 2);
        assert_eq!(skipped.snapshots()[1].time(), 1);
        assert_eq!(skipped.snapshots()[1].edge_count(), 1);
    }

    #[test]
    fn aggregate_week_boundaries() {
        const WEEK: f64 = 604_800.0;
        let one = aggregate_events(&[(0.0, "a", "b"), (604_799.0, "a", "c")], WEEK).unwrap();
        assert_eq!(one.len(), 1);
        let two = aggregate_events(&[(0.0, "a", "b"), (604_800.0, "a", "c")], WEEK).unwrap();
        assert_eq!(two.len(), 2);
    }

    #[test]
    fn aggregate_dedups_within_bin() {
        let seq = aggregate_events(&[(0.0, "a", "b"), (10.0, "a", "b")], 100.0).unwrap();
        assert_eq!(seq.len(), 1);
        assert_eq!(seq.snapshots()[0].edge_count(), 1);
    }

    #[test]
    fn aggregate_rejects_empty_and_bad_width() {
        let empty: [(f64, &str, &str); 0] = [];
        assert!(aggregate_events(&empty, 10.0).is_err());
        assert!(aggregate_events(&[(0.0, "a", "b")], 0.0).is_err());
    }

    #[test]
    fn window_examples() {
        let mut text = String::new();
        for t in 0..10 {
            text.push_str(&format!("{t}\ta\tb\n"));
        }
        let seq = seq_from(&text);
        let win = window_at(&seq, 3, 4).unwrap();
        assert_eq!(win.start_time(), 0);
        assert_eq!(win.tau(), 3);
        assert_eq!(win.len(), 4);
        assert!(window_at(&seq, 2, 4).is_err());
        let small = window_at(&seq, 1, 2).unwrap();
        assert_eq!(small.start_time(), 0);
        assert!(window_at(&seq, 3, 1).is_err());
    }

    #[test]
    fn snapshot_validation() {
        assert!(GraphSnapshot::new(0, 3, [(0, 0)]).is_err());
        assert!(GraphSnapshot::new(0, 3, [(0, 3)]).is_err());
        assert!(GraphSnapshot::new(0, 3, [(0, 1), (1, 0)]).is_err());
        let g = GraphSnapshot::new(0, 3, [(2, 0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 2)]);
        assert!(g.has_edge(2, 0));
    }

    fn arb_sequence() -> impl Strategy<Value = Vec<Vec<(u32, u32)>>> {
        // 2..5 snapshots over 4 vertices, arbitrary edges.
        prop::collection::vec(
            prop::collection::vec((0u32..4, 0u32..4), 0..6),
            2..5,
        )
    }

    proptest! {
        #[test]
        fn serialize_parse_is_a_fixed_point(raw in arb_sequence()) {
            let labels: Vec<String> = (0..4).map(|i| format!("v{i}")).collect();
            let snaps: Vec<GraphSnapshot> = raw
                .iter()
                .enumerate()
                .map(|(t, edges)| {
                    let set: BTreeSet<(u32, u32)> = edges
                        .iter()
                        .filter(|(a, b)| a != b)
                        .map(|&(a, b)| (a.min(b), a.max(b)))
                        .collect();
                    GraphSnapshot::new(t as i64, 4, set).unwrap()
                })
                .collect();
            prop_assume!(snaps.iter().any(|s| s.edge_count() > 0));
            let seq = NetworkSequence::new(snaps, labels).unwrap();
            // Ids may permute across a round trip (first-appearance order
            // follows the serialized edge order), so compare the sequences
            // as labeled objects.
            let labeled = |seq: &NetworkSequence| -> Vec<BTreeSet<(String, String)>> {
                seq.snapshots()
                    .iter()
                    .map(|s| {
                        s.edges()
                            .iter()
                            .map(|&(u, v)| {
                                let lu = seq.labels()[u as usize].clone();
                                let lv = seq.labels()[v as usize].clone();
                                (lu.clone().min(lv.clone()), lu.max(lv))
                            })
                            .collect()
                    })
                    .collect()
            };
            let parsed = parse_edge_list(&serialize_edge_list(&seq)).unwrap();
            let reparsed = parse_edge_list(&serialize_edge_list(&parsed)).unwrap();
            prop_assert_eq!(labeled(&parsed), labeled(&reparsed));
            // Content survives modulo unrepresentable boundary empties.
            let mut original = labeled(&seq);
            while original.first().is_some_and(|s| s.is_empty()) {
                original.remove(0);
            }
            while original.last().is_some_and(|s| s.is_empty()) {
                original.pop();
            }
            prop_assert_eq!(original, labeled(&parsed));
        }

        #[test]
        fn full_round_trip_when_all_vertices_used(perm in Just(()) , seed in 0u64..50) {
            let _ = perm;
            // Build a sequence where snapshot 0 touches every vertex.
            let mut rng = crate::rng::derive_rng(seed, &[9]);
            use rand::Rng;
            let n = 5usize;
            let mut snaps = Vec::new();
            let base: Vec<(u32, u32)> = (1..n as u32).map(|v| (0, v)).collect();
            snaps.push(GraphSnapshot::new(0, n, base).unwrap());
            for t in 1..4 {
                let mut set = BTreeSet::new();
                for _ in 0..rng.random_range(0..6) {
                    let a = rng.random_range(0..n as u32);
                    let b = rng.random_range(0..n as u32);
                    if a != b {
                        set.insert((a.min(b), a.max(b)));
                    }
                }
                if t == 3 {
                    // Trailing empty snapshots are not representable.
                    set.insert((0, 1));
                }
                snaps.push(GraphSnapshot::new(t, n, set).unwrap());
            }
            let labels: Vec<String> = (0..n).map(|i| format!("u{i}")).collect();
            let seq = NetworkSequence::new(snaps, labels).unwrap();
            let back = parse_edge_list(&serialize_edge_list(&seq)).unwrap();
            prop_assert_eq!(seq, back);
        }

        #[test]
        fn aggregate_invariant_under_event_order(seed in 0u64..50) {
            use rand::seq::SliceRandom;
            let names = ["a", "b", "c", "d"];
            let mut rng = crate::rng::derive_rng(seed, &[10]);
            use rand::Rng;
            let mut events: Vec<(f64, String, String)> = (0..12)
                .map(|_| {
                    let t = rng.random_range(0.0..30.0);
                    let u = names[rng.random_range(0..4)].to_string();
                    let v = names[rng.random_range(0..4)].to_string();
                    (t, u, v)
                })
                .collect();
            let a = aggregate_events(&events, 10.0).unwrap();
            events.shuffle(&mut rng);
            let b = aggregate_events(&events, 10.0).unwrap();
            // Edge multisets must agree as label pairs, per bin.
            let key = |seq: &NetworkSequence| -> Vec<BTreeSet<(String, String)>> {
                seq.snapshots()
                    .iter()
                    .map(|s| {
                        s.edges()
                            .iter()
                            .map(|&(u, v)| {
                                let lu = seq.labels()[u as usize].clone();
                                let lv = seq.labels()[v as usize].clone();
                                (lu.clone().min(lv.clone()), lu.max(lv))
                            })
                            .collect()
                    })
                    .collect()
            };
            prop_assert_eq!(key(&a), key(&b));
        }
    }
}
