//! Contention graphs, transmit-state vectors, and independent-set machinery.
//!
//! Links are vertices; an edge joins two links whose transmitters can sense
//! each other. A system state assigns a transmit bit to every link, and a
//! state is feasible exactly when its transmitters form an independent set
//! of the graph. Everything downstream (the product-form chain, the
//! simulator, the airtime-share estimate) consumes the machinery here.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Default cap on the number of states enumerated before giving up.
pub const DEFAULT_STATE_CAP: usize = 1 << 24;

/// A transmit-bit assignment over the links of a graph.
///
/// Bit `i` of `mask` is link `i`; the display form writes link 0 first,
/// so a four-link state with links 0 and 2 transmitting prints `1010`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SystemState {
    mask: u64,
    len: u8,
}

impl SystemState {
    pub fn empty(len: usize) -> Self {
        assert!((1..=64).contains(&len), "state length out of range");
        Self {
            mask: 0,
            len: len as u8,
        }
    }

    pub fn from_mask(mask: u64, len: usize) -> Self {
        let mut s = Self::empty(len);
        debug_assert!(
            len == 64 || mask < (1u64 << len),
            "mask exceeds state length"
        );
        s.mask = mask;
        s
    }

    /// Parses a bit string such as `1010` (link 0 is the leftmost character).
    pub fn from_bit_string(text: &str) -> Result<Self> {
        let len = text.len();
        if len == 0 || len > 64 {
            return Err(Error::InvalidInput(format!("bad state string `{text}`")));
        }
        let mut mask = 0u64;
        for (i, ch) in text.chars().enumerate() {
            match ch {
                '1' => mask |= 1 << i,
                '0' => {}
                _ => return Err(Error::InvalidInput(format!("bad state string `{text}`"))),
            }
        }
        Ok(Self::from_mask(mask, len))
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn get(&self, link: usize) -> bool {
        self.mask & (1 << link) != 0
    }

    pub fn with(&self, link: usize) -> Self {
        Self {
            mask: self.mask | (1 << link),
            len: self.len,
        }
    }

    pub fn without(&self, link: usize) -> Self {
        Self {
            mask: self.mask & !(1 << link),
            len: self.len,
        }
    }

    /// Number of transmitting links.
    pub fn count(&self) -> u32 {
        self.mask.count_ones()
    }

    pub fn hamming(&self, other: &Self) -> u32 {
        (self.mask ^ other.mask).count_ones()
    }

    /// Sort key giving the canonical enumeration order: fewer transmitters
    /// first, then ascending mask value (link 0 in the low bit).
    pub fn canonical_key(&self) -> (u32, u64) {
        (self.count(), self.mask)
    }

    /// Links set in `self`, ascending.
    pub fn links(&self) -> impl Iterator<Item = usize> + '_ {
        let len = self.len();
        (0..len).filter(move |&i| self.get(i))
    }
}

impl fmt::Display for SystemState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// One edge of the state-transition diagram: `right` has exactly one more
/// transmitter than `left`, namely `link`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateTransition {
    pub left: SystemState,
    pub right: SystemState,
    pub link: usize,
}

/// An undirected carrier-sensing graph over labelled links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentionGraph {
    labels: Vec<String>,
    neighbors: Vec<u64>,
}

impl ContentionGraph {
    /// Builds a graph from labels and index edges. Edges are deduplicated;
    /// self-edges and out-of-range indices are rejected.
    pub fn new<S: Into<String>>(labels: Vec<S>, edges: &[(usize, usize)]) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::EmptyLinkList);
        }
        if labels.len() > 64 {
            return Err(Error::TooManyLinks(labels.len()));
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if !seen.insert(label.clone()) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        let mut neighbors = vec![0u64; labels.len()];
        for &(a, b) in edges {
            if a >= labels.len() {
                return Err(Error::UnknownLabel(format!("#{a}")));
            }
            if b >= labels.len() {
                return Err(Error::UnknownLabel(format!("#{b}")));
            }
            if a == b {
                return Err(Error::SelfEdge(labels[a].clone()));
            }
            neighbors[a] |= 1 << b;
            neighbors[b] |= 1 << a;
        }
        Ok(Self { labels, neighbors })
    }

    /// Builds a graph from labels and label edges, as in the graph document.
    pub fn from_labeled_edges<S: Into<String>>(
        labels: Vec<S>,
        edges: &[(String, String)],
    ) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let index: BTreeMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let mut index_edges = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            let ia = *index
                .get(a.as_str())
                .ok_or_else(|| Error::UnknownLabel(a.clone()))?;
            let ib = *index
                .get(b.as_str())
                .ok_or_else(|| Error::UnknownLabel(b.clone()))?;
            index_edges.push((ia, ib));
        }
        Self::new(labels, &index_edges)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, link: usize) -> &str {
        &self.labels[link]
    }

    /// Neighbor mask of `link` (bit `j` set when `link` and `j` sense each other).
    pub fn neighbors(&self, link: usize) -> u64 {
        self.neighbors[link]
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.neighbors[a] & (1 << b) != 0
    }

    /// Undirected edges, each once, `(low, high)` indices ascending.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.len() {
            for b in (a + 1)..self.len() {
                if self.adjacent(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// A state is feasible when its transmitters form an independent set.
    pub fn is_feasible(&self, state: SystemState) -> bool {
        debug_assert_eq!(state.len(), self.len());
        state.links().all(|i| self.neighbors[i] & state.mask() == 0)
    }

    /// All feasible states in canonical order, under the default cap.
    pub fn feasible_states(&self) -> Result<Vec<SystemState>> {
        self.feasible_states_capped(DEFAULT_STATE_CAP)
    }

    /// All feasible states in canonical order. Errors with [`Error::TooLarge`]
    /// once more than `cap` states have been enumerated.
    pub fn feasible_states_capped(&self, cap: usize) -> Result<Vec<SystemState>> {
        let mut out = Vec::new();
        self.extend_independent(0, 0, cap, &mut out)?;
        let len = self.len();
        let mut states: Vec<SystemState> = out
            .into_iter()
            .map(|m| SystemState::from_mask(m, len))
            .collect();
        states.sort_by_key(SystemState::canonical_key);
        Ok(states)
    }

    fn extend_independent(
        &self,
        mask: u64,
        start: usize,
        cap: usize,
        out: &mut Vec<u64>,
    ) -> Result<()> {
        if out.len() >= cap {
            return Err(Error::TooLarge { cap });
        }
        out.push(mask);
        for i in start..self.len() {
            if mask & (1 << i) == 0 && mask & self.neighbors[i] == 0 {
                self.extend_independent(mask | (1 << i), i + 1, cap, out)?;
            }
        }
        Ok(())
    }

    /// Maximal independent sets (pivoting Bron–Kerbosch on the complement
    /// graph), in canonical order.
    pub fn maximal_independent_sets(&self) -> Result<Vec<SystemState>> {
        self.maximal_independent_sets_capped(DEFAULT_STATE_CAP)
    }

    pub fn maximal_independent_sets_capped(&self, cap: usize) -> Result<Vec<SystemState>> {
        let len = self.len();
        let full: u64 = if len == 64 { u64::MAX } else { (1 << len) - 1 };
        // Complement adjacency: vertices that may share an independent set.
        let comp: Vec<u64> = (0..len)
            .map(|i| full & !self.neighbors[i] & !(1u64 << i))
            .collect();
        let mut out = Vec::new();
        bron_kerbosch(0, full, 0, &comp, cap, &mut out)?;
        let mut states: Vec<SystemState> = out
            .into_iter()
            .map(|m| SystemState::from_mask(m, len))
            .collect();
        states.sort_by_key(SystemState::canonical_key);
        Ok(states)
    }

    /// Maximal independent sets of largest cardinality, in canonical order.
    pub fn maximum_independent_sets(&self) -> Result<Vec<SystemState>> {
        let maximal = self.maximal_independent_sets()?;
        let best = maximal.iter().map(SystemState::count).max().unwrap_or(0);
        Ok(maximal.into_iter().filter(|s| s.count() == best).collect())
    }

    /// True iff the two feasible states differ in exactly one link.
    pub fn connected_states(&self, a: SystemState, b: SystemState) -> Result<bool> {
        for s in [a, b] {
            if !self.is_feasible(s) {
                return Err(Error::Infeasible {
                    state: s.to_string(),
                });
            }
        }
        Ok(a.hamming(&b) == 1)
    }

    /// Every connected pair of feasible states, left = fewer transmitters,
    /// with the toggled link. Ordered by the left state's canonical key.
    pub fn transition_graph(&self) -> Result<Vec<StateTransition>> {
        self.transition_graph_capped(DEFAULT_STATE_CAP)
    }

    pub fn transition_graph_capped(&self, cap: usize) -> Result<Vec<StateTransition>> {
        let states = self.feasible_states_capped(cap)?;
        let mut out = Vec::new();
        for &left in &states {
            for i in 0..self.len() {
                if !left.get(i) && left.mask() & self.neighbors[i] == 0 {
                    out.push(StateTransition {
                        left,
                        right: left.with(i),
                        link: i,
                    });
                }
            }
        }
        Ok(out)
    }
}

fn bron_kerbosch(
    r: u64,
    p: u64,
    x: u64,
    comp: &[u64],
    cap: usize,
    out: &mut Vec<u64>,
) -> Result<()> {
    if p == 0 && x == 0 {
        if out.len() >= cap {
            return Err(Error::TooLarge { cap });
        }
        out.push(r);
        return Ok(());
    }
    // Pivot on the candidate covering the most of P.
    let mut pivot = usize::MAX;
    let mut best = -1i64;
    let mut px = p | x;
    while px != 0 {
        let u = px.trailing_zeros() as usize;
        px &= px - 1;
        let cover = (p & comp[u]).count_ones() as i64;
        if cover > best {
            best = cover;
            pivot = u;
        }
    }
    let mut candidates = p & !comp[pivot];
    let mut p = p;
    let mut x = x;
    while candidates != 0 {
        let v = candidates.trailing_zeros() as usize;
        let vb = 1u64 << v;
        candidates &= !vb;
        bron_kerbosch(r | vb, p & comp[v], x & comp[v], comp, cap, out)?;
        p &= !vb;
        x |= vb;
    }
    Ok(())
}

/// Per-link countdown overhead carried by a graph document.
#[derive(Debug, Clone, PartialEq)]
pub enum DocumentOverhead {
    Uniform(f64),
    PerLink(BTreeMap<String, f64>),
}

/// The result of parsing a graph document.
#[derive(Debug, Clone)]
pub struct ParsedDocument {
    pub graph: ContentionGraph,
    pub overhead: Option<DocumentOverhead>,
}

#[derive(Deserialize)]
struct RawDocument {
    links: Vec<String>,
    #[serde(default)]
    edges: Vec<[String; 2]>,
    #[serde(default)]
    c: Option<RawOverhead>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawOverhead {
    Uniform(f64),
    PerLink(BTreeMap<String, f64>),
}

/// Parses a UTF-8 graph document.
///
/// The document is a JSON object with `links` (array of label strings),
/// `edges` (array of two-element label arrays) and an optional `c` field
/// that is either a number or a per-label map of countdown overheads.
pub fn parse_graph(text: &str) -> Result<ParsedDocument> {
    let raw: RawDocument =
        serde_json::from_str(text).map_err(|e| Error::MalformedDocument(e.to_string()))?;
    let edges: Vec<(String, String)> = raw.edges.into_iter().map(|[a, b]| (a, b)).collect();
    let graph = ContentionGraph::from_labeled_edges(raw.links, &edges)?;
    let overhead = raw.c.map(|c| match c {
        RawOverhead::Uniform(v) => DocumentOverhead::Uniform(v),
        RawOverhead::PerLink(m) => DocumentOverhead::PerLink(m),
    });
    Ok(ParsedDocument { graph, overhead })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig_graph() -> ContentionGraph {
        ContentionGraph::new(vec!["1", "2", "3", "4"], &[(0, 1), (1, 2), (1, 3), (2, 3)]).unwrap()
    }

    fn states(masks: &[u64], len: usize) -> Vec<SystemState> {
        masks
            .iter()
            .map(|&m| SystemState::from_mask(m, len))
            .collect()
    }

    #[test]
    fn display_writes_link_zero_first() {
        let s = SystemState::from_mask(0b0101, 4);
        assert_eq!(s.to_string(), "1010");
        assert_eq!(SystemState::from_bit_string("1010").unwrap(), s);
    }

    #[test]
    fn parse_document_round_trip() {
        let doc = r#"{"links": ["1","2","3","4"],
                      "edges": [["1","2"],["2","3"],["2","4"],["3","4"]]}"#;
        let parsed = parse_graph(doc).unwrap();
        assert_eq!(parsed.graph, fig_graph());
        assert!(parsed.overhead.is_none());
    }

    #[test]
    fn parse_document_overhead_forms() {
        let doc = r#"{"links": ["a","b"], "edges": [["a","b"]], "c": 0.186}"#;
        let parsed = parse_graph(doc).unwrap();
        assert_eq!(parsed.overhead, Some(DocumentOverhead::Uniform(0.186)));

        let doc = r#"{"links": ["a","b"], "edges": [], "c": {"a": 1.0, "b": 0.5}}"#;
        let parsed = parse_graph(doc).unwrap();
        match parsed.overhead {
            Some(DocumentOverhead::PerLink(m)) => {
                assert_eq!(m["a"], 1.0);
                assert_eq!(m["b"], 0.5);
            }
            other => panic!("unexpected overhead {other:?}"),
        }
    }

    #[test]
    fn parse_document_single_link() {
        let parsed = parse_graph(r#"{"links": ["only"], "edges": []}"#).unwrap();
        assert_eq!(parsed.graph.len(), 1);
        assert!(parsed.graph.edges().is_empty());
    }

    #[test]
    fn parse_document_errors() {
        let err = parse_graph(r#"{"links": ["1","1"], "edges": []}"#).unwrap_err();
        assert!(matches!(err, Error::DuplicateLabel(_)));

        let err = parse_graph(r#"{"links": ["1"], "edges": [["1","2"]]}"#).unwrap_err();
        assert!(matches!(err, Error::UnknownLabel(_)));

        let err = parse_graph(r#"{"links": ["1"], "edges": [["1","1"]]}"#).unwrap_err();
        assert!(matches!(err, Error::SelfEdge(_)));

        let err = parse_graph(r#"{"links": [], "edges": []}"#).unwrap_err();
        assert!(matches!(err, Error::EmptyLinkList));

        let err = parse_graph("not json").unwrap_err();
        assert!(matches!(err, Error::MalformedDocument(_)));
    }

    #[test]
    fn feasible_states_fig_graph() {
        let g = fig_graph();
        let got = g.feasible_states().unwrap();
        let want = states(&[0b0000, 0b0001, 0b0010, 0b0100, 0b1000, 0b0101, 0b1001], 4);
        assert_eq!(got, want);
    }

    #[test]
    fn feasible_states_single_vertex_and_k3() {
        let g = ContentionGraph::new(vec!["x"], &[]).unwrap();
        assert_eq!(g.feasible_states().unwrap(), states(&[0, 1], 1));

        let k3 = ContentionGraph::new(vec!["a", "b", "c"], &[(0, 1), (0, 2), (1, 2)]).unwrap();
        assert_eq!(
            k3.feasible_states().unwrap(),
            states(&[0b000, 0b001, 0b010, 0b100], 3)
        );
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        // Edgeless graph over 20 links: 2^20 independent sets.
        let labels: Vec<String> = (0..20).map(|i| i.to_string()).collect();
        let g = ContentionGraph::new(labels, &[]).unwrap();
        let err = g.feasible_states_capped(1000).unwrap_err();
        assert!(matches!(err, Error::TooLarge { cap: 1000 }));
    }

    #[test]
    fn maximal_and_maximum_sets_fig_graph() {
        let g = fig_graph();
        let maximal = g.maximal_independent_sets().unwrap();
        assert_eq!(maximal, states(&[0b0010, 0b0101, 0b1001], 4));
        let maximum = g.maximum_independent_sets().unwrap();
        assert_eq!(maximum, states(&[0b0101, 0b1001], 4));
    }

    #[test]
    fn maximal_sets_k3() {
        let k3 = ContentionGraph::new(vec!["a", "b", "c"], &[(0, 1), (0, 2), (1, 2)]).unwrap();
        let maximal = k3.maximal_independent_sets().unwrap();
        assert_eq!(maximal, states(&[0b001, 0b010, 0b100], 3));
        assert_eq!(maximal, k3.maximum_independent_sets().unwrap());
    }

    #[test]
    fn connectivity_matches_hamming_rule() {
        let g = fig_graph();
        let s1000 = SystemState::from_bit_string("1000").unwrap();
        let s1010 = SystemState::from_bit_string("1010").unwrap();
        let s1001 = SystemState::from_bit_string("1001").unwrap();
        assert!(g.connected_states(s1000, s1010).unwrap());
        assert!(!g.connected_states(s1010, s1001).unwrap());
        assert!(!g.connected_states(s1000, s1000).unwrap());

        let infeasible = SystemState::from_bit_string("1100").unwrap();
        assert!(matches!(
            g.connected_states(s1000, infeasible),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn transition_graph_fig_graph() {
        let g = fig_graph();
        let transitions = g.transition_graph().unwrap();
        assert_eq!(transitions.len(), 8);
        for t in &transitions {
            assert_eq!(t.left.count() + 1, t.right.count());
            assert_eq!(t.right.mask() ^ t.left.mask(), 1 << t.link);
            assert!(g.is_feasible(t.left) && g.is_feasible(t.right));
        }
    }

    #[test]
    fn transition_graph_trivials() {
        let single = ContentionGraph::new(vec!["x"], &[]).unwrap();
        let t = single.transition_graph().unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].link, 0);

        let k3 = ContentionGraph::new(vec!["a", "b", "c"], &[(0, 1), (0, 2), (1, 2)]).unwrap();
        let t = k3.transition_graph().unwrap();
        assert_eq!(t.len(), 3);
        assert!(t.iter().all(|tr| tr.left.is_empty()));
    }
}
