//! Host graphs with stable edge identities, pattern trees, embeddings and
//! the edge-exact decomposition verifier.
//!
//! Every algorithm in this crate works on subsets of edge ids of one host
//! [`MultiGraph`]. Edge ids are assigned once and never reused; removing an
//! edge marks its slot dead so that stage-by-stage bookkeeping survives for
//! diagnostics.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;

/// Ordered edge-id set. Deterministic iteration order is relied on all over
/// the pipeline, so this is a BTreeSet rather than a hash set.
pub type EdgeSet = BTreeSet<EdgeId>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct EdgeSlot {
    u: VertexId,
    v: VertexId,
    alive: bool,
}

/// Undirected multigraph over vertices `0..vertex_count` with stable edge ids.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultiGraph {
    vertex_count: usize,
    edges: Vec<EdgeSlot>,
    #[serde(skip)]
    incidence: Vec<Vec<EdgeId>>,
}

impl MultiGraph {
    pub fn new(vertex_count: usize) -> Self {
        MultiGraph {
            vertex_count,
            edges: Vec::new(),
            incidence: vec![Vec::new(); vertex_count],
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Number of alive edges.
    pub fn edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.alive).count()
    }

    /// Total number of edge ids ever assigned, dead ones included.
    pub fn edge_slots(&self) -> usize {
        self.edges.len()
    }

    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> EdgeId {
        assert!(u < self.vertex_count && v < self.vertex_count, "vertex out of range");
        assert_ne!(u, v, "loops are not supported");
        let id = self.edges.len();
        self.edges.push(EdgeSlot { u, v, alive: true });
        self.incidence[u].push(id);
        self.incidence[v].push(id);
        id
    }

    pub fn is_alive(&self, id: EdgeId) -> bool {
        self.edges.get(id).is_some_and(|e| e.alive)
    }

    /// Endpoints of an edge, alive or dead.
    pub fn endpoints(&self, id: EdgeId) -> (VertexId, VertexId) {
        let e = &self.edges[id];
        (e.u, e.v)
    }

    pub fn other_endpoint(&self, id: EdgeId, v: VertexId) -> VertexId {
        let (a, b) = self.endpoints(id);
        if v == a {
            b
        } else {
            debug_assert_eq!(v, b);
            a
        }
    }

    /// Marks an edge dead. The id is never reused.
    pub fn remove_edge(&mut self, id: EdgeId) {
        assert!(self.edges[id].alive, "edge {id} already dead");
        self.edges[id].alive = false;
        let (u, v) = self.endpoints(id);
        self.incidence[u].retain(|&e| e != id);
        self.incidence[v].retain(|&e| e != id);
    }

    pub fn restore_edge(&mut self, id: EdgeId) {
        assert!(!self.edges[id].alive, "edge {id} is alive");
        self.edges[id].alive = true;
        let (u, v) = self.endpoints(id);
        self.incidence[u].push(id);
        self.incidence[u].sort_unstable();
        self.incidence[v].push(id);
        self.incidence[v].sort_unstable();
    }

    /// Alive edges incident to `v`, in increasing id order.
    pub fn edges_at(&self, v: VertexId) -> &[EdgeId] {
        &self.incidence[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.incidence[v].len()
    }

    /// Degree of `v` counting only edges from `set`.
    pub fn degree_in(&self, v: VertexId, set: &EdgeSet) -> usize {
        self.incidence[v].iter().filter(|e| set.contains(e)).count()
    }

    pub fn alive_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.iter().enumerate().filter(|(_, e)| e.alive).map(|(i, _)| i)
    }

    pub fn alive_edge_set(&self) -> EdgeSet {
        self.alive_edges().collect()
    }

    /// Rebuilds the incidence index from the edge slots. Used after
    /// deserialization and by the self-check tests.
    pub fn rebuild_incidence(&mut self) {
        self.incidence = vec![Vec::new(); self.vertex_count];
        for (id, e) in self.edges.iter().enumerate() {
            if e.alive {
                self.incidence[e.u].push(id);
                self.incidence[e.v].push(id);
            }
        }
    }

    /// Writes the graph in the edge-list exchange format (alive edges only).
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let alive: Vec<EdgeId> = self.alive_edges().collect();
        let _ = writeln!(out, "{} {}", self.vertex_count, alive.len());
        for id in alive {
            let (u, v) = self.endpoints(id);
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

/// Parses the edge-list exchange format: first line `n m`, then `m` lines
/// `u v`. Edge ids are assigned in file order starting at 0.
pub fn parse_graph(text: &str) -> Result<MultiGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (line_no, header) = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 0, message: "empty document".into() })?;
    let parse_usize = |line: usize, tok: &str| -> Result<usize> {
        tok.parse::<usize>().map_err(|_| Error::Parse {
            line,
            message: format!("expected nonnegative integer, got {tok:?}"),
        })
    };
    let mut it = header.split_whitespace();
    let (n_tok, m_tok) = match (it.next(), it.next(), it.next()) {
        (Some(n), Some(m), None) => (n, m),
        _ => {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected header \"n m\", got {header:?}"),
            })
        }
    };
    let n = parse_usize(line_no, n_tok)?;
    let m = parse_usize(line_no, m_tok)?;

    let mut g = MultiGraph::new(n);
    for _ in 0..m {
        let (line_no, line) = lines.next().ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("expected {m} edge lines, document ended early"),
        })?;
        let mut it = line.split_whitespace();
        let (u_tok, v_tok) = match (it.next(), it.next(), it.next()) {
            (Some(u), Some(v), None) => (u, v),
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected edge line \"u v\", got {line:?}"),
                })
            }
        };
        let u = parse_usize(line_no, u_tok)?;
        let v = parse_usize(line_no, v_tok)?;
        if u >= n || v >= n {
            return Err(Error::Parse {
                line: line_no,
                message: format!("vertex index out of range: {u} {v} (n = {n})"),
            });
        }
        if u == v {
            return Err(Error::Parse { line: line_no, message: format!("loop at vertex {u}") });
        }
        g.add_edge(u, v);
    }
    if let Some((line_no, line)) = lines.next() {
        return Err(Error::Parse {
            line: line_no,
            message: format!("trailing content after {m} edges: {line:?}"),
        });
    }
    Ok(g)
}

/// A small labelled tree used as the decomposition pattern.
///
/// For the pattern `Y` (degree sequence 1,1,1,2,3) the degree-3 vertex and
/// the degree-2 vertex carry designated labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternTree {
    pub name: String,
    pub vertex_count: usize,
    pub edges: Vec<(usize, usize)>,
    pub three_vertex: Option<usize>,
    pub two_vertex: Option<usize>,
}

impl PatternTree {
    pub fn new(name: impl Into<String>, vertex_count: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let t = PatternTree {
            name: name.into(),
            vertex_count,
            edges,
            three_vertex: None,
            two_vertex: None,
        };
        t.check_tree()?;
        Ok(t)
    }

    fn check_tree(&self) -> Result<()> {
        if self.edges.len() + 1 != self.vertex_count {
            return Err(Error::InvalidArgument(format!(
                "pattern {}: {} edges on {} vertices is not a tree",
                self.name,
                self.edges.len(),
                self.vertex_count
            )));
        }
        // connected + |E| = |V|-1 implies acyclic
        let mut seen = vec![false; self.vertex_count];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(a, b) in &self.edges {
                let w = if a == v { b } else if b == v { a } else { continue };
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument(format!("pattern {} is not connected", self.name)));
        }
        Ok(())
    }

    /// The tree with degree sequence (1,1,1,2,3).
    ///
    /// Vertex 0 is the 3-vertex, vertex 1 the 2-vertex; 2 and 3 are the
    /// leaves at the 3-vertex and 4 is the leaf behind the 2-vertex.
    pub fn y() -> Self {
        PatternTree {
            name: "y".into(),
            vertex_count: 5,
            edges: vec![(0, 1), (0, 2), (0, 3), (1, 4)],
            three_vertex: Some(0),
            two_vertex: Some(1),
        }
    }

    /// Path with `t` edges, vertices 0..=t in path order.
    pub fn path(t: usize) -> Self {
        PatternTree {
            name: format!("path{t}"),
            vertex_count: t + 1,
            edges: (0..t).map(|i| (i, i + 1)).collect(),
            three_vertex: None,
            two_vertex: None,
        }
    }

    /// Star with `t` edges, centre 0.
    pub fn star(t: usize) -> Self {
        PatternTree {
            name: format!("star{t}"),
            vertex_count: t + 1,
            edges: (0..t).map(|i| (0, i + 1)).collect(),
            three_vertex: None,
            two_vertex: None,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| if a == v { Some(b) } else if b == v { Some(a) } else { None })
            .collect()
    }

    /// BFS levels from `root`; `level[v]` is the distance from the root.
    pub fn bfs_levels(&self, root: usize) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.vertex_count];
        level[root] = 0;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for w in self.neighbors(v) {
                if level[w] == usize::MAX {
                    level[w] = level[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        level
    }

    pub fn height(&self, root: usize) -> usize {
        *self.bfs_levels(root).iter().max().unwrap_or(&0)
    }

    pub fn is_y(&self) -> bool {
        let mut degs: Vec<usize> = (0..self.vertex_count).map(|v| self.degree(v)).collect();
        degs.sort_unstable();
        degs == [1, 1, 1, 2, 3]
    }
}

/// An explicit embedding of a pattern tree into the host graph.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TreeCopy {
    pub pattern: Arc<PatternTree>,
    /// pattern vertex index -> host vertex
    pub vertex_map: Vec<VertexId>,
    /// pattern edge index -> host edge id
    pub edge_map: Vec<EdgeId>,
}

impl TreeCopy {
    pub fn new(pattern: Arc<PatternTree>, vertex_map: Vec<VertexId>, edge_map: Vec<EdgeId>) -> Self {
        TreeCopy { pattern, vertex_map, edge_map }
    }

    /// Y-copy from named host vertices and edges.
    ///
    /// `center` is the 3-vertex host, `mid` the 2-vertex host; `e_center_mid`,
    /// `e_leaf_a`, `e_leaf_b` are the three edges at the centre and
    /// `e_mid_pendant` the pendant edge at the 2-vertex.
    #[allow(clippy::too_many_arguments)]
    pub fn y_copy(
        pattern: &Arc<PatternTree>,
        center: VertexId,
        mid: VertexId,
        leaf_a: VertexId,
        leaf_b: VertexId,
        pendant: VertexId,
        e_center_mid: EdgeId,
        e_leaf_a: EdgeId,
        e_leaf_b: EdgeId,
        e_mid_pendant: EdgeId,
    ) -> Self {
        debug_assert!(pattern.is_y());
        TreeCopy {
            pattern: Arc::clone(pattern),
            vertex_map: vec![center, mid, leaf_a, leaf_b, pendant],
            edge_map: vec![e_center_mid, e_leaf_a, e_leaf_b, e_mid_pendant],
        }
    }

    pub fn edge_ids(&self) -> &[EdgeId] {
        &self.edge_map
    }

    /// Checks the embedding invariants against the host graph. The edges are
    /// required to exist but may be dead (copies are verified after removal).
    pub fn check(&self, g: &MultiGraph) -> std::result::Result<(), String> {
        let p = &self.pattern;
        if self.vertex_map.len() != p.vertex_count {
            return Err(format!("vertex_map has {} entries, pattern has {} vertices", self.vertex_map.len(), p.vertex_count));
        }
        if self.edge_map.len() != p.edge_count() {
            return Err(format!("edge_map has {} entries, pattern has {} edges", self.edge_map.len(), p.edge_count()));
        }
        let mut vs: Vec<VertexId> = self.vertex_map.clone();
        vs.sort_unstable();
        vs.dedup();
        if vs.len() != self.vertex_map.len() {
            return Err(format!("vertex_map not injective: {:?}", self.vertex_map));
        }
        let mut es: Vec<EdgeId> = self.edge_map.clone();
        es.sort_unstable();
        es.dedup();
        if es.len() != self.edge_map.len() {
            return Err(format!("edge_map not injective: {:?}", self.edge_map));
        }
        for (i, &(x, y)) in p.edges.iter().enumerate() {
            let id = self.edge_map[i];
            if id >= g.edge_slots() {
                return Err(format!("edge id {id} does not exist in host"));
            }
            let (hu, hv) = g.endpoints(id);
            let (mu, mv) = (self.vertex_map[x], self.vertex_map[y]);
            if (hu, hv) != (mu, mv) && (hu, hv) != (mv, mu) {
                return Err(format!(
                    "pattern edge {i} maps to host edge {id} with endpoints ({hu},{hv}), expected ({mu},{mv})"
                ));
            }
        }
        Ok(())
    }
}

/// A set of tree copies whose edge ids partition a stated edge subset.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Decomposition {
    pub copies: Vec<TreeCopy>,
    pub covered_edges: EdgeSet,
}

impl Decomposition {
    pub fn empty() -> Self {
        Decomposition { copies: Vec::new(), covered_edges: EdgeSet::new() }
    }

    pub fn from_copies(copies: Vec<TreeCopy>) -> Self {
        let covered_edges = copies.iter().flat_map(|c| c.edge_map.iter().copied()).collect();
        Decomposition { copies, covered_edges }
    }
}

/// Verdict of [`verify_decomposition`]: either clean or the first failure.
pub fn verify_decomposition(
    g: &MultiGraph,
    target: &EdgeSet,
    pattern: &PatternTree,
    d: &Decomposition,
) -> std::result::Result<(), String> {
    let mut seen = EdgeSet::new();
    for (i, copy) in d.copies.iter().enumerate() {
        if copy.pattern.as_ref() != pattern {
            return Err(format!("copy {i} embeds pattern {:?}, expected {:?}", copy.pattern.name, pattern.name));
        }
        copy.check(g).map_err(|e| format!("copy {i}: {e}"))?;
        for &id in &copy.edge_map {
            if !seen.insert(id) {
                return Err(format!("edge {id} covered twice (second time by copy {i})"));
            }
            if !target.contains(&id) {
                return Err(format!("copy {i} uses edge {id} outside the target set"));
            }
        }
    }
    if seen != d.covered_edges {
        return Err("covered_edges does not match the union of the copies".into());
    }
    if &seen != target {
        let missing = target.difference(&seen).next();
        return Err(format!("target edge {:?} not covered by any copy", missing.unwrap()));
    }
    Ok(())
}

/// Two-colouring of the vertices with the induced crossing edge set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Bipartition {
    pub side_of: Vec<Side>,
    pub crossing_edges: EdgeSet,
}

impl Bipartition {
    pub fn new(g: &MultiGraph, side_of: Vec<Side>) -> Self {
        let crossing_edges = g
            .alive_edges()
            .filter(|&e| {
                let (u, v) = g.endpoints(e);
                side_of[u] != side_of[v]
            })
            .collect();
        Bipartition { side_of, crossing_edges }
    }

    pub fn is_crossing(&self, g: &MultiGraph, e: EdgeId) -> bool {
        let (u, v) = g.endpoints(e);
        self.side_of[u] != self.side_of[v]
    }

    pub fn vertices_on(&self, side: Side) -> Vec<VertexId> {
        self.side_of
            .iter()
            .enumerate()
            .filter(|&(_, &s)| s == side)
            .map(|(v, _)| v)
            .collect()
    }
}

/// Serializes a decomposition as a line-oriented text document. The output is
/// byte-deterministic and round-trips through [`parse_decomposition`].
pub fn serialize_decomposition(d: &Decomposition) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "decomposition {}", d.copies.len());
    if let Some(first) = d.copies.first() {
        let p = &first.pattern;
        let _ = write!(out, "pattern {} {} {}", p.name, p.vertex_count, p.edge_count());
        for &(a, b) in &p.edges {
            let _ = write!(out, " {a}-{b}");
        }
        if let Some(t) = p.three_vertex {
            let _ = write!(out, " three {t}");
        }
        if let Some(t) = p.two_vertex {
            let _ = write!(out, " two {t}");
        }
        let _ = writeln!(out);
    }
    for c in &d.copies {
        let _ = write!(out, "copy v");
        for &v in &c.vertex_map {
            let _ = write!(out, " {v}");
        }
        let _ = write!(out, " e");
        for &e in &c.edge_map {
            let _ = write!(out, " {e}");
        }
        let _ = writeln!(out);
    }
    out
}

/// Inverse of [`serialize_decomposition`].
pub fn parse_decomposition(text: &str) -> Result<Decomposition> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let err = |line: usize, message: String| Error::Parse { line, message };

    let (hline, header) = lines
        .next()
        .ok_or_else(|| err(0, "empty document".into()))?;
    let count: usize = header
        .strip_prefix("decomposition ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| err(hline, format!("bad header {header:?}")))?;
    if count == 0 {
        return Ok(Decomposition::empty());
    }

    let (pline, pat_line) = lines.next().ok_or_else(|| err(0, "missing pattern line".into()))?;
    let toks: Vec<&str> = pat_line.split_whitespace().collect();
    if toks.len() < 3 || toks[0] != "pattern" {
        return Err(err(pline, format!("bad pattern line {pat_line:?}")));
    }
    let name = toks[1].to_string();
    let nv: usize = toks[2].parse().map_err(|_| err(pline, "bad vertex count".into()))?;
    let ne: usize = toks[3].parse().map_err(|_| err(pline, "bad edge count".into()))?;
    let mut edges = Vec::with_capacity(ne);
    for tok in toks.iter().skip(4).take(ne) {
        let (a, b) = tok
            .split_once('-')
            .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
            .ok_or_else(|| err(pline, format!("bad pattern edge {tok:?}")))?;
        edges.push((a, b));
    }
    let mut pattern = PatternTree::new(name, nv, edges)?;
    let mut rest = toks.iter().skip(4 + ne);
    while let Some(&key) = rest.next() {
        let val: usize = rest
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err(pline, format!("bad designation {key:?}")))?;
        match key {
            "three" => pattern.three_vertex = Some(val),
            "two" => pattern.two_vertex = Some(val),
            _ => return Err(err(pline, format!("unknown pattern attribute {key:?}"))),
        }
    }
    let pattern = Arc::new(pattern);

    let mut copies = Vec::with_capacity(count);
    for _ in 0..count {
        let (cline, line) = lines.next().ok_or_else(|| err(0, "document ended before all copies".into()))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.first() != Some(&"copy") || toks.get(1) != Some(&"v") {
            return Err(err(cline, format!("bad copy line {line:?}")));
        }
        let vm: Vec<usize> = toks[2..2 + nv]
            .iter()
            .map(|t| t.parse().map_err(|_| err(cline, format!("bad vertex {t:?}"))))
            .collect::<Result<_>>()?;
        if toks.get(2 + nv) != Some(&"e") {
            return Err(err(cline, format!("bad copy line {line:?}")));
        }
        let em: Vec<usize> = toks[3 + nv..3 + nv + ne]
            .iter()
            .map(|t| t.parse().map_err(|_| err(cline, format!("bad edge {t:?}"))))
            .collect::<Result<_>>()?;
        copies.push(TreeCopy::new(Arc::clone(&pattern), vm, em));
    }
    Ok(Decomposition::from_copies(copies))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c4() -> MultiGraph {
        parse_graph("4 4\n0 1\n1 2\n2 3\n3 0").unwrap()
    }

    pub(crate) fn wheel4_text() -> &'static str {
        "5 8\n0 1\n1 2\n2 3\n3 0\n4 0\n4 1\n4 2\n4 3"
    }

    #[test]
    fn parse_smallest_graph() {
        let g = parse_graph("2 1\n0 1").unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.endpoints(0), (0, 1));
    }

    #[test]
    fn parse_c4_and_wheel() {
        let g = c4();
        assert_eq!(g.edge_count(), 4);
        assert!(g.alive_edges().all(|e| g.is_alive(e)));

        let w = parse_graph(wheel4_text()).unwrap();
        assert_eq!(w.vertex_count(), 5);
        assert_eq!(w.edge_count(), 8);
        assert_eq!(w.degree(4), 4);
        assert_eq!(w.degree(0), 3);
    }

    #[test]
    fn parse_errors() {
        assert!(parse_graph("").is_err());
        assert!(parse_graph("2 1\n0 2").is_err()); // out of range
        assert!(parse_graph("2 1\n0 0").is_err()); // loop
        assert!(parse_graph("2 2\n0 1").is_err()); // short
        assert!(parse_graph("2 x\n0 1").is_err());
        assert!(parse_graph("3 1\n0 1\n1 2").is_err()); // trailing
    }

    #[test]
    fn parallel_edges_are_allowed() {
        let g = parse_graph("2 2\n0 1\n0 1").unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.degree(0), 2);
    }

    #[test]
    fn degree_sum_is_twice_edge_count() {
        let g = parse_graph(wheel4_text()).unwrap();
        let sum: usize = (0..g.vertex_count()).map(|v| g.degree(v)).sum();
        assert_eq!(sum, 2 * g.edge_count());
    }

    #[test]
    fn remove_restore_keeps_incidence_consistent() {
        let mut g = parse_graph(wheel4_text()).unwrap();
        g.remove_edge(3);
        assert_eq!(g.degree(3), 2);
        assert!(!g.is_alive(3));
        g.restore_edge(3);
        let mut h = g.clone();
        h.rebuild_incidence();
        for v in 0..g.vertex_count() {
            assert_eq!(g.edges_at(v), h.edges_at(v));
        }
    }

    #[test]
    fn identity_y_copy_verifies() {
        // host is Y itself
        let g = parse_graph("5 4\n0 1\n0 2\n0 3\n1 4").unwrap();
        let pat = Arc::new(PatternTree::y());
        let copy = TreeCopy::y_copy(&pat, 0, 1, 2, 3, 4, 0, 1, 2, 3);
        let d = Decomposition::from_copies(vec![copy]);
        let target = g.alive_edge_set();
        assert!(verify_decomposition(&g, &target, &pat, &d).is_ok());
    }

    #[test]
    fn c8_bogus_claim_rejected() {
        // C8 has no degree-3 vertex, so any claimed pair of Y-copies must fail.
        let g = parse_graph("8 8\n0 1\n1 2\n2 3\n3 4\n4 5\n5 6\n6 7\n7 0").unwrap();
        let pat = Arc::new(PatternTree::y());
        let bogus = Decomposition::from_copies(vec![
            TreeCopy::y_copy(&pat, 1, 2, 0, 3, 4, 1, 0, 2, 3),
            TreeCopy::y_copy(&pat, 5, 6, 4, 7, 0, 5, 4, 6, 7),
        ]);
        let target = g.alive_edge_set();
        assert!(verify_decomposition(&g, &target, &pat, &bogus).is_err());
    }

    #[test]
    fn verifier_matches_multiset_recount() {
        let g = parse_graph("5 4\n0 1\n0 2\n0 3\n1 4").unwrap();
        let pat = Arc::new(PatternTree::y());
        let copy = TreeCopy::y_copy(&pat, 0, 1, 2, 3, 4, 0, 1, 2, 3);
        let d = Decomposition::from_copies(vec![copy]);
        let target = g.alive_edge_set();
        // independent recount: multiset of edge ids across copies == target
        let mut ids: Vec<EdgeId> = d.copies.iter().flat_map(|c| c.edge_map.iter().copied()).collect();
        ids.sort_unstable();
        let distinct = ids.windows(2).all(|w| w[0] != w[1]);
        let as_set: EdgeSet = ids.into_iter().collect();
        let recount_ok = distinct && as_set == target;
        assert_eq!(recount_ok, verify_decomposition(&g, &target, &pat, &d).is_ok());
    }

    #[test]
    fn serialize_parse_is_fixed_point() {
        let g = parse_graph("5 4\n0 1\n0 2\n0 3\n1 4").unwrap();
        let pat = Arc::new(PatternTree::y());
        let copy = TreeCopy::y_copy(&pat, 0, 1, 2, 3, 4, 0, 1, 2, 3);
        let d = Decomposition::from_copies(vec![copy]);
        let s1 = serialize_decomposition(&d);
        let d2 = parse_decomposition(&s1).unwrap();
        let s2 = serialize_decomposition(&d2);
        assert_eq!(s1, s2);
        let target = g.alive_edge_set();
        assert!(verify_decomposition(&g, &target, &pat, &d2).is_ok());
    }

    #[test]
    fn empty_decomposition_round_trips() {
        let d = Decomposition::empty();
        let s = serialize_decomposition(&d);
        let d2 = parse_decomposition(&s).unwrap();
        assert!(d2.copies.is_empty());
        assert_eq!(s, serialize_decomposition(&d2));
    }

    #[test]
    fn pattern_y_shape() {
        let y = PatternTree::y();
        assert!(y.is_y());
        assert_eq!(y.degree(0), 3);
        assert_eq!(y.degree(1), 2);
        assert_eq!(y.height(0), 2);
        assert!(PatternTree::path(4).height(0) == 4);
        assert!(!PatternTree::path(4).is_y());
    }
}
