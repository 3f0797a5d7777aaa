//! Edge-connectivity measurement, max-cut bipartization, spanning-tree
//! packing, degree-bounded spanning trees, nested union chains and the
//! Euler structures used by the divisibility phases.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Bipartition, EdgeId, EdgeSet, MultiGraph, Side, VertexId};

/// An ordered family of pairwise edge-disjoint spanning trees of one host.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TreePack {
    pub trees: Vec<EdgeSet>,
}

impl TreePack {
    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn union(&self) -> EdgeSet {
        self.trees.iter().flatten().copied().collect()
    }

    /// Re-verifies the pack from scratch: disjointness, tree shape, spanning.
    /// Deliberately shares no state with the packer.
    pub fn check(&self, g: &MultiGraph) -> std::result::Result<(), String> {
        let n = g.vertex_count();
        let mut seen = EdgeSet::new();
        for (i, tree) in self.trees.iter().enumerate() {
            if tree.len() != n - 1 {
                return Err(format!("tree {i} has {} edges, expected {}", tree.len(), n - 1));
            }
            let mut dsu = Dsu::new(n);
            for &e in tree {
                if !seen.insert(e) {
                    return Err(format!("edge {e} appears in two trees"));
                }
                let (u, v) = g.endpoints(e);
                if !dsu.union(u, v) {
                    return Err(format!("tree {i} has a cycle through edge {e}"));
                }
            }
            let root = dsu.find(0);
            if (0..n).any(|v| dsu.find(v) != root) {
                return Err(format!("tree {i} does not span all vertices"));
            }
        }
        Ok(())
    }
}

/// Nested layers M_1 ⊆ … ⊆ M_{ℓ+1}, each a disjoint union of spanning trees,
/// with per-vertex degree ratio at least `m` between consecutive layers.
#[derive(Clone, Debug)]
pub struct UnionChain {
    pub layers: Vec<EdgeSet>,
    /// The disjoint spanning trees whose union forms each layer.
    pub layer_trees: Vec<Vec<EdgeSet>>,
    pub k: usize,
    pub m: usize,
    pub ell: usize,
}

impl UnionChain {
    pub fn check(&self, g: &MultiGraph) -> std::result::Result<(), String> {
        let n = g.vertex_count();
        for (i, trees) in self.layer_trees.iter().enumerate() {
            let expected = self.k * self.m.pow(2 * i as u32);
            if trees.len() != expected {
                return Err(format!("layer {i} is a union of {} trees, expected {expected}", trees.len()));
            }
            let pack = TreePack { trees: trees.clone() };
            pack.check(g)?;
            let union = pack.union();
            if union != self.layers[i] {
                return Err(format!("layer {i} does not equal the union of its trees"));
            }
        }
        for i in 0..self.layers.len().saturating_sub(1) {
            if !self.layers[i].is_subset(&self.layers[i + 1]) {
                return Err(format!("layer {i} is not contained in layer {}", i + 1));
            }
            for v in 0..n {
                let lo = g.degree_in(v, &self.layers[i]);
                let hi = g.degree_in(v, &self.layers[i + 1]);
                if self.m * lo > hi {
                    return Err(format!(
                        "degree ratio fails at vertex {v} between layers {i} and {}: {} * {lo} > {hi}",
                        i + 1,
                        self.m
                    ));
                }
            }
        }
        Ok(())
    }
}

/// A spanning even-degree connected subgraph together with a closed trail
/// traversing each of its edges exactly once.
#[derive(Clone, Debug)]
pub struct EulerStructure {
    pub subgraph: EdgeSet,
    pub trail: Vec<EdgeId>,
    pub start: VertexId,
}

impl EulerStructure {
    pub fn check(&self, g: &MultiGraph) -> std::result::Result<(), String> {
        let n = g.vertex_count();
        for v in 0..n {
            if g.degree_in(v, &self.subgraph) % 2 != 0 {
                return Err(format!("vertex {v} has odd degree in the Euler subgraph"));
            }
        }
        if self.trail.len() != self.subgraph.len() {
            return Err(format!("trail has {} edges, subgraph has {}", self.trail.len(), self.subgraph.len()));
        }
        let mut used = EdgeSet::new();
        let mut at = self.start;
        for &e in &self.trail {
            if !self.subgraph.contains(&e) || !used.insert(e) {
                return Err(format!("trail edge {e} missing from subgraph or repeated"));
            }
            let (u, v) = g.endpoints(e);
            at = if at == u {
                v
            } else if at == v {
                u
            } else {
                return Err(format!("trail breaks at edge {e}: not incident to vertex {at}"));
            };
        }
        if at != self.start {
            return Err("trail is not closed".into());
        }
        // connected and spanning
        let mut dsu = Dsu::new(n);
        for &e in &self.subgraph {
            let (u, v) = g.endpoints(e);
            dsu.union(u, v);
        }
        let root = dsu.find(self.start);
        if (0..n).any(|v| dsu.find(v) != root) {
            return Err("Euler subgraph does not span all vertices".into());
        }
        Ok(())
    }

    /// Vertex sequence visited by the trail, starting (and ending) at `start`.
    pub fn vertex_walk(&self, g: &MultiGraph) -> Vec<VertexId> {
        let mut walk = vec![self.start];
        let mut at = self.start;
        for &e in &self.trail {
            at = g.other_endpoint(e, at);
            walk.push(at);
        }
        walk
    }
}

struct Dsu {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Global minimum cut of the subgraph spanned by `edges` over all
/// `vertex_count` vertices (Stoer–Wagner, unit weights with multiplicity).
/// Returns the cut value and one side of an optimal cut.
pub fn min_cut_in(g: &MultiGraph, edges: &EdgeSet) -> (usize, Vec<VertexId>) {
    let n = g.vertex_count();
    assert!(n >= 2);
    let mut w = vec![vec![0usize; n]; n];
    for &e in edges {
        let (u, v) = g.endpoints(e);
        w[u][v] += 1;
        w[v][u] += 1;
    }
    let mut groups: Vec<Vec<VertexId>> = (0..n).map(|v| vec![v]).collect();
    let mut active: Vec<usize> = (0..n).collect();
    let mut best = usize::MAX;
    let mut best_side: Vec<VertexId> = Vec::new();

    while active.len() > 1 {
        // maximum adjacency order
        let mut key = vec![0usize; n];
        let mut in_order = vec![false; n];
        let mut prev = usize::MAX;
        let mut last = usize::MAX;
        for _ in 0..active.len() {
            let mut pick = usize::MAX;
            for &v in &active {
                if !in_order[v] && (pick == usize::MAX || key[v] > key[pick]) {
                    pick = v;
                }
            }
            in_order[pick] = true;
            prev = last;
            last = pick;
            for &v in &active {
                if !in_order[v] {
                    key[v] += w[pick][v];
                }
            }
        }
        let cut_of_phase = key[last];
        if cut_of_phase < best {
            best = cut_of_phase;
            best_side = groups[last].clone();
        }
        // merge last into prev
        let moved = std::mem::take(&mut groups[last]);
        groups[prev].extend(moved);
        for &v in &active {
            if v != prev && v != last {
                w[prev][v] += w[last][v];
                w[v][prev] = w[prev][v];
            }
        }
        active.retain(|&v| v != last);
    }
    (best, best_side)
}

/// Exact edge connectivity: the minimum number of edges leaving a proper
/// nonempty vertex subset.
pub fn edge_connectivity(g: &MultiGraph) -> Result<usize> {
    edge_connectivity_in(g, &g.alive_edge_set())
}

pub fn edge_connectivity_in(g: &MultiGraph, edges: &EdgeSet) -> Result<usize> {
    if g.vertex_count() < 2 {
        return Err(Error::InvalidArgument(
            "edge connectivity needs at least 2 vertices".into(),
        ));
    }
    Ok(min_cut_in(g, edges).0)
}

/// Bipartition whose crossing graph is `k`-edge-connected, obtained by greedy
/// vertex flips to a local max-cut optimum plus the cut-repair move: when a
/// vertex set S certifies crossing connectivity below k, every vertex of S
/// switches sides, which strictly increases the crossing count.
pub fn max_cut_bipartition(g: &MultiGraph, k: usize) -> Result<Bipartition> {
    assert!(k >= 1);
    let required = 2 * k - 1;
    let lambda = edge_connectivity(g)?;
    if lambda < required {
        return Err(Error::InsufficientConnectivity { required, actual: lambda });
    }
    let n = g.vertex_count();
    // BFS-parity start: exact on bipartite inputs, a sound cut elsewhere
    let mut side: Vec<Side> = vec![Side::A; n];
    {
        let mut seen = vec![false; n];
        for root in 0..n {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let mut queue = VecDeque::from([root]);
            while let Some(x) = queue.pop_front() {
                for &e in g.edges_at(x) {
                    let y = g.other_endpoint(e, x);
                    if !seen[y] {
                        seen[y] = true;
                        side[y] = side[x].flip();
                        queue.push_back(y);
                    }
                }
            }
        }
    }

    let crossing_count = |g: &MultiGraph, side: &[Side]| -> usize {
        g.alive_edges()
            .filter(|&e| {
                let (u, v) = g.endpoints(e);
                side[u] != side[v]
            })
            .count()
    };

    let local_optimize = |side: &mut Vec<Side>| {
        loop {
            let mut improved = false;
            for v in 0..n {
                let deg = g.degree(v);
                let cross: usize = g
                    .edges_at(v)
                    .iter()
                    .filter(|&&e| side[g.other_endpoint(e, v)] != side[v])
                    .count();
                // flipping v turns deg - cross crossing and loses cross
                if deg > 2 * cross {
                    side[v] = side[v].flip();
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
    };

    local_optimize(&mut side);
    let mut prev_crossing = crossing_count(g, &side);
    let max_rounds = g.edge_count() + 2;
    for _ in 0..max_rounds {
        let crossing: EdgeSet = g
            .alive_edges()
            .filter(|&e| {
                let (u, v) = g.endpoints(e);
                side[u] != side[v]
            })
            .collect();
        let (value, cut_side) = min_cut_in(g, &crossing);
        if value >= k {
            return Ok(Bipartition::new(g, side));
        }
        for &v in &cut_side {
            side[v] = side[v].flip();
        }
        local_optimize(&mut side);
        let now = crossing_count(g, &side);
        if now <= prev_crossing {
            return Err(Error::invariant(format!(
                "max-cut repair did not increase the crossing count ({prev_crossing} -> {now})"
            )));
        }
        prev_crossing = now;
    }
    Err(Error::invariant("max-cut repair loop failed to certify k-edge-connectivity"))
}

// ---------------------------------------------------------------------------
// Spanning tree packing (matroid union with augmenting label search)
// ---------------------------------------------------------------------------

struct Packer<'a> {
    g: &'a MultiGraph,
    edges: Vec<EdgeId>,
    /// forest owning each local edge, if any
    owner: Vec<Option<usize>>,
    /// forest adjacency: per forest, per vertex, (neighbor, local edge)
    adj: Vec<Vec<Vec<(VertexId, usize)>>>,
    dsu: Vec<Dsu>,
    forest_size: Vec<usize>,
    /// spanned-set union-find: edges within one clump are not augmentable
    clump: Dsu,
}

impl<'a> Packer<'a> {
    fn new(g: &'a MultiGraph, edge_set: &EdgeSet) -> Self {
        let edges: Vec<EdgeId> = edge_set.iter().copied().collect();
        Packer {
            g,
            owner: vec![None; edges.len()],
            edges,
            adj: Vec::new(),
            dsu: Vec::new(),
            forest_size: Vec::new(),
            clump: Dsu::new(g.vertex_count()),
        }
    }

    fn add_forest(&mut self) {
        self.adj.push(vec![Vec::new(); self.g.vertex_count()]);
        self.dsu.push(Dsu::new(self.g.vertex_count()));
        self.forest_size.push(0);
        // spans change when a forest is added, so clump knowledge is stale
        self.clump = Dsu::new(self.g.vertex_count());
    }

    fn endpoints_local(&self, le: usize) -> (VertexId, VertexId) {
        self.g.endpoints(self.edges[le])
    }

    fn insert(&mut self, le: usize, forest: usize) {
        let (u, v) = self.endpoints_local(le);
        self.adj[forest][u].push((v, le));
        self.adj[forest][v].push((u, le));
        self.owner[le] = Some(forest);
        self.forest_size[forest] += 1;
    }

    fn erase(&mut self, le: usize, forest: usize) {
        let (u, v) = self.endpoints_local(le);
        self.adj[forest][u].retain(|&(_, e)| e != le);
        self.adj[forest][v].retain(|&(_, e)| e != le);
        self.owner[le] = None;
        self.forest_size[forest] -= 1;
    }

    fn rebuild_dsu(&mut self, forest: usize) {
        let n = self.g.vertex_count();
        let mut dsu = Dsu::new(n);
        for v in 0..n {
            for &(w, _) in &self.adj[forest][v] {
                dsu.union(v, w);
            }
        }
        self.dsu[forest] = dsu;
    }

    /// Path between u and v in `forest` as local edge ids; empty if equal.
    fn forest_path(&self, forest: usize, u: VertexId, v: VertexId) -> Vec<usize> {
        let n = self.g.vertex_count();
        let mut prev: Vec<Option<(VertexId, usize)>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[u] = true;
        let mut queue = VecDeque::from([u]);
        while let Some(x) = queue.pop_front() {
            if x == v {
                break;
            }
            for &(y, le) in &self.adj[forest][x] {
                if !seen[y] {
                    seen[y] = true;
                    prev[y] = Some((x, le));
                    queue.push_back(y);
                }
            }
        }
        let mut path = Vec::new();
        let mut at = v;
        while at != u {
            let (p, le) = prev[at].expect("endpoints in different forest components");
            path.push(le);
            at = p;
        }
        path
    }

    /// Attempts to add edge `le` to the forest family via an augmenting
    /// exchange chain. Returns true on success.
    fn augment(&mut self, le: usize) -> bool {
        let k = self.adj.len();
        let (u0, v0) = self.endpoints_local(le);
        if self.clump.find(u0) == self.clump.find(v0) {
            return false;
        }
        let mut label: Vec<Option<(usize, usize)>> = Vec::new(); // (pred local edge, owning forest)
        let mut labeled: Vec<bool> = vec![false; self.edges.len()];
        let mut order: Vec<usize> = Vec::new();
        let mut label_of: std::collections::HashMap<usize, (usize, usize)> = std::collections::HashMap::new();
        let _ = &mut label; // labels tracked in label_of keyed by local edge
        labeled[le] = true;
        order.push(le);
        let mut queue = VecDeque::from([le]);

        while let Some(f) = queue.pop_front() {
            let (fu, fv) = self.endpoints_local(f);
            for forest in 0..k {
                if self.owner[f] == Some(forest) {
                    continue;
                }
                if self.dsu[forest].find(fu) != self.dsu[forest].find(fv) {
                    // augmenting chain found
                    let mut touched = vec![forest];
                    let mut cur = f;
                    let mut target = forest;
                    loop {
                        if let Some(own) = self.owner[cur] {
                            self.erase(cur, own);
                        }
                        self.insert(cur, target);
                        match label_of.get(&cur).copied() {
                            None => break, // reached the new edge
                            Some((pred, owning)) => {
                                debug_assert_eq!(self.owner[pred].is_some() || pred == le, true);
                                touched.push(owning);
                                target = owning;
                                cur = pred;
                                if cur == le && !label_of.contains_key(&le) {
                                    if let Some(own) = self.owner[cur] {
                                        self.erase(cur, own);
                                    }
                                    self.insert(cur, target);
                                    break;
                                }
                            }
                        }
                    }
                    touched.sort_unstable();
                    touched.dedup();
                    for t in touched {
                        self.rebuild_dsu(t);
                    }
                    return true;
                }
                for ce in self.forest_path(forest, fu, fv) {
                    if !labeled[ce] {
                        labeled[ce] = true;
                        label_of.insert(ce, (f, forest));
                        order.push(ce);
                        queue.push_back(ce);
                    }
                }
            }
        }
        // failure: the labeled edges witness a saturated vertex set
        for &e in &order {
            let (a, b) = self.endpoints_local(e);
            self.clump.union(a, b);
        }
        false
    }

    fn total(&self) -> usize {
        self.forest_size.iter().sum()
    }

    fn complete_trees(&self) -> usize {
        let want = self.g.vertex_count() - 1;
        self.forest_size.iter().filter(|&&s| s == want).count()
    }

    fn trees(&self) -> Vec<EdgeSet> {
        let mut out = vec![EdgeSet::new(); self.adj.len()];
        for (le, owner) in self.owner.iter().enumerate() {
            if let Some(f) = *owner {
                out[f].insert(self.edges[le]);
            }
        }
        out
    }

    /// Grows the family by one more forest and re-attempts every unowned edge.
    fn grow(&mut self) -> bool {
        self.add_forest();
        let want = self.adj.len() * (self.g.vertex_count() - 1);
        for le in 0..self.edges.len() {
            if self.total() == want {
                break;
            }
            if self.owner[le].is_none() {
                self.augment(le);
            }
        }
        self.total() == want
    }
}

/// Packs exactly `k` pairwise edge-disjoint spanning trees, or fails when no
/// such packing exists. The algorithm is exact (matroid union augmentation),
/// independent of the 2k-edge-connectivity sufficient condition.
pub fn pack_spanning_trees(g: &MultiGraph, k: usize) -> Result<TreePack> {
    pack_spanning_trees_in(g, &g.alive_edge_set(), k)
}

pub fn pack_spanning_trees_in(g: &MultiGraph, edges: &EdgeSet, k: usize) -> Result<TreePack> {
    assert!(k >= 1);
    if g.vertex_count() < 2 {
        return Err(Error::InvalidArgument("packing needs at least 2 vertices".into()));
    }
    let mut packer = Packer::new(g, edges);
    for _ in 0..k {
        if !packer.grow() {
            return Err(Error::PackingFailed { requested: k, achieved: packer.complete_trees() });
        }
    }
    let pack = TreePack { trees: packer.trees() };
    debug_assert!(pack.check(g).is_ok());
    Ok(pack)
}

/// The largest packing of edge-disjoint spanning trees within `edges`,
/// capped at `max_k` trees.
pub fn max_tree_packing_in(g: &MultiGraph, edges: &EdgeSet, max_k: usize) -> TreePack {
    if g.vertex_count() < 2 || edges.len() < g.vertex_count() - 1 {
        return TreePack { trees: Vec::new() };
    }
    let mut packer = Packer::new(g, edges);
    let mut best: Vec<EdgeSet> = Vec::new();
    let cap = max_k.min(edges.len() / (g.vertex_count() - 1));
    for _ in 0..cap {
        if !packer.grow() {
            break;
        }
        best = packer.trees();
    }
    TreePack { trees: best }
}

// ---------------------------------------------------------------------------
// Degree-bounded spanning trees (swap local search)
// ---------------------------------------------------------------------------

/// Spanning tree of the subgraph `edges` with per-vertex degree at most
/// `ceil(deg(v)/m) + 2`. The bound is met by edge-exchange local search;
/// running out of the exchange budget is a loud failure, never a wrong tree.
pub fn bounded_degree_spanning_tree(g: &MultiGraph, edges: &EdgeSet, m: usize) -> Result<EdgeSet> {
    assert!(m >= 1);
    let bounds: Vec<usize> = (0..g.vertex_count())
        .map(|v| g.degree_in(v, edges).div_ceil(m) + 2)
        .collect();
    bounded_tree_with_bounds(g, edges, &bounds)
}

/// Same search with explicit per-vertex degree bounds. Used by the pipeline
/// in relaxed mode, where the bounds come from the stage requirement rather
/// than from the tree-count arithmetic.
pub fn bounded_tree_with_bounds(g: &MultiGraph, edges: &EdgeSet, bounds: &[usize]) -> Result<EdgeSet> {
    let n = g.vertex_count();
    let edge_list: Vec<EdgeId> = edges.iter().copied().collect();

    // initial spanning tree by BFS over `edges`
    let mut adj: Vec<Vec<(VertexId, EdgeId)>> = vec![Vec::new(); n];
    for &e in &edge_list {
        let (u, v) = g.endpoints(e);
        adj[u].push((v, e));
        adj[v].push((u, e));
    }
    let mut in_tree: Vec<bool> = vec![false; g.edge_slots()];
    let mut tree_adj: Vec<Vec<(VertexId, EdgeId)>> = vec![Vec::new(); n];
    {
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(x) = queue.pop_front() {
            for &(y, e) in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    in_tree[e] = true;
                    tree_adj[x].push((y, e));
                    tree_adj[y].push((x, e));
                    queue.push_back(y);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument("edge set does not span a connected graph".into()));
        }
    }

    let mut deg: Vec<i64> = (0..n).map(|v| tree_adj[v].len() as i64).collect();
    let margin = |deg: &[i64], v: usize| deg[v] - bounds[v] as i64;
    let mut count: std::collections::BTreeMap<i64, i64> = std::collections::BTreeMap::new();
    for v in 0..n {
        *count.entry(margin(&deg, v)).or_default() += 1;
    }
    let worst = |count: &std::collections::BTreeMap<i64, i64>| {
        count.iter().rev().find(|&(_, &c)| c > 0).map(|(&m, _)| m).unwrap_or(i64::MIN)
    };

    // parent pointers for fundamental cycles, rebuilt after each swap
    let rebuild_parents = |tree_adj: &[Vec<(VertexId, EdgeId)>]| {
        let mut parent: Vec<Option<(VertexId, EdgeId)>> = vec![None; n];
        let mut depth = vec![0usize; n];
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(x) = queue.pop_front() {
            for &(y, e) in &tree_adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    parent[y] = Some((x, e));
                    depth[y] = depth[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        (parent, depth)
    };
    let (mut parent, mut depth) = rebuild_parents(&tree_adj);

    let budget = 50 * edge_list.len().max(1);
    let mut applied = 0usize;
    'outer: while worst(&count) > 0 {
        if applied >= budget {
            return Err(Error::BoundedTreeSearchExhausted { budget });
        }
        for &e in &edge_list {
            if in_tree[e] {
                continue;
            }
            let (u, v) = g.endpoints(e);
            // fundamental cycle edges of e
            let mut cycle = Vec::new();
            let (mut a, mut b) = (u, v);
            while depth[a] > depth[b] {
                let (p, pe) = parent[a].unwrap();
                cycle.push((a, p, pe));
                a = p;
            }
            while depth[b] > depth[a] {
                let (p, pe) = parent[b].unwrap();
                cycle.push((b, p, pe));
                b = p;
            }
            while a != b {
                let (pa, pea) = parent[a].unwrap();
                cycle.push((a, pa, pea));
                a = pa;
                let (pb, peb) = parent[b].unwrap();
                cycle.push((b, pb, peb));
                b = pb;
            }
            for &(x, y, f) in &cycle {
                // candidate: add e, drop f
                let mut delta: std::collections::BTreeMap<usize, i64> = std::collections::BTreeMap::new();
                *delta.entry(u).or_default() += 1;
                *delta.entry(v).or_default() += 1;
                *delta.entry(x).or_default() -= 1;
                *delta.entry(y).or_default() -= 1;
                let mut shift: std::collections::BTreeMap<i64, i64> = std::collections::BTreeMap::new();
                for (&w, &d) in &delta {
                    if d != 0 {
                        *shift.entry(margin(&deg, w)).or_default() -= 1;
                        *shift.entry(margin(&deg, w) + d).or_default() += 1;
                    }
                }
                let decides = shift.iter().rev().find(|&(_, &c)| c != 0);
                let improves = matches!(decides, Some((_, &c)) if c < 0);
                if !improves {
                    continue;
                }
                // apply the swap
                for (&w, &d) in &delta {
                    if d != 0 {
                        *count.entry(margin(&deg, w)).or_default() -= 1;
                        deg[w] += d;
                        *count.entry(margin(&deg, w)).or_default() += 1;
                    }
                }
                in_tree[f] = false;
                in_tree[e] = true;
                tree_adj[x].retain(|&(_, te)| te != f);
                tree_adj[y].retain(|&(_, te)| te != f);
                tree_adj[u].push((v, e));
                tree_adj[v].push((u, e));
                let rebuilt = rebuild_parents(&tree_adj);
                parent = rebuilt.0;
                depth = rebuilt.1;
                applied += 1;
                continue 'outer;
            }
        }
        // no improving swap although a bound is still violated
        return Err(Error::BoundedTreeSearchExhausted { budget: applied });
    }

    Ok(edge_list.into_iter().filter(|&e| in_tree[e]).collect())
}

// ---------------------------------------------------------------------------
// Nested union chains
// ---------------------------------------------------------------------------

/// Builds the nested chain M_1 ⊆ … ⊆ M_{ℓ+1} from `k·m^{2ℓ}` trees of the
/// pack: trees are grouped by m², one degree-bounded tree is extracted per
/// group, and the construction recurses on the extracted trees.
pub fn nested_union_chain(g: &MultiGraph, pack: &TreePack, k: usize, m: usize, ell: usize) -> Result<UnionChain> {
    if k == 0 {
        return Err(Error::InvalidArgument("chain parameter k must be positive".into()));
    }
    if m <= 3 {
        return Err(Error::InvalidArgument("chain parameter m must exceed 3".into()));
    }
    let needed = k * m.pow(2 * ell as u32);
    if pack.len() < needed {
        return Err(Error::InsufficientTrees { needed, available: pack.len() });
    }

    fn build(g: &MultiGraph, trees: &[EdgeSet], k: usize, m: usize, ell: usize) -> Result<Vec<Vec<EdgeSet>>> {
        if ell == 0 {
            return Ok(vec![trees[..k].to_vec()]);
        }
        let group_count = k * m.pow(2 * (ell as u32 - 1));
        let mut extracted = Vec::with_capacity(group_count);
        for gi in 0..group_count {
            let group = &trees[gi * m * m..(gi + 1) * m * m];
            let union: EdgeSet = group.iter().flatten().copied().collect();
            let tree = bounded_degree_spanning_tree(g, &union, m * m)?;
            extracted.push(tree);
        }
        let mut layers = build(g, &extracted, k, m, ell - 1)?;
        layers.push(trees[..group_count * m * m].to_vec());
        Ok(layers)
    }

    let layer_trees = build(g, &pack.trees[..needed], k, m, ell)?;
    let layers: Vec<EdgeSet> = layer_trees
        .iter()
        .map(|trees| trees.iter().flatten().copied().collect())
        .collect();
    let chain = UnionChain { layers, layer_trees, k, m, ell };
    if let Err(e) = chain.check(g) {
        return Err(Error::invariant(format!("union chain self-check failed: {e}")));
    }
    Ok(chain)
}

// ---------------------------------------------------------------------------
// Spanning Eulerian subgraphs
// ---------------------------------------------------------------------------

/// Closed trail through every edge of the even-degree connected subgraph,
/// starting at `start`, lowest edge id first (Hierholzer).
pub fn hierholzer_trail(g: &MultiGraph, subgraph: &EdgeSet, start: VertexId) -> Vec<EdgeId> {
    let n = g.vertex_count();
    let mut eadj: Vec<Vec<(VertexId, EdgeId)>> = vec![Vec::new(); n];
    for &e in subgraph {
        let (u, v) = g.endpoints(e);
        eadj[u].push((v, e));
        eadj[v].push((u, e));
    }
    for l in eadj.iter_mut() {
        l.sort_unstable_by_key(|&(_, e)| e);
    }
    let mut next = vec![0usize; n];
    let mut used = vec![false; g.edge_slots()];
    let mut stack: Vec<(VertexId, Option<EdgeId>)> = vec![(start, None)];
    let mut trail_rev: Vec<EdgeId> = Vec::with_capacity(subgraph.len());
    while let Some(&(v, via)) = stack.last() {
        let mut advanced = false;
        while next[v] < eadj[v].len() {
            let (w, e) = eadj[v][next[v]];
            next[v] += 1;
            if !used[e] {
                used[e] = true;
                stack.push((w, Some(e)));
                advanced = true;
                break;
            }
        }
        if !advanced {
            stack.pop();
            if let Some(e) = via {
                trail_rev.push(e);
            }
        }
    }
    trail_rev.reverse();
    trail_rev
}

/// Even spanning connected subgraph of `t_a ∪ t_b` containing all of `t_a`:
/// the odd vertices of `t_a` are paired up by the unique join inside the
/// tree `t_b`, and the closed trail is stitched Hierholzer-style.
pub fn euler_spanning_subgraph(g: &MultiGraph, t_a: &EdgeSet, t_b: &EdgeSet) -> Result<EulerStructure> {
    let n = g.vertex_count();
    if !t_a.is_disjoint(t_b) {
        return Err(Error::InvalidArgument("spanning trees are not edge-disjoint".into()));
    }
    for (name, t) in [("first", t_a), ("second", t_b)] {
        let pack = TreePack { trees: vec![t.clone()] };
        if let Err(e) = pack.check(g) {
            return Err(Error::InvalidArgument(format!("{name} input is not a spanning tree: {e}")));
        }
    }

    // odd-degree vertices of t_a
    let odd: Vec<bool> = (0..n).map(|v| g.degree_in(v, t_a) % 2 == 1).collect();

    // unique join inside t_b whose odd vertices are exactly `odd`:
    // root t_b, include an edge iff its subtree holds an odd count
    let mut badj: Vec<Vec<(VertexId, EdgeId)>> = vec![Vec::new(); n];
    for &e in t_b {
        let (u, v) = g.endpoints(e);
        badj[u].push((v, e));
        badj[v].push((u, e));
    }
    let mut order = Vec::with_capacity(n);
    let mut parent: Vec<Option<(VertexId, EdgeId)>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(x) = queue.pop_front() {
        order.push(x);
        for &(y, e) in &badj[x] {
            if !seen[y] {
                seen[y] = true;
                parent[y] = Some((x, e));
                queue.push_back(y);
            }
        }
    }
    let mut odd_below: Vec<usize> = odd.iter().map(|&o| o as usize).collect();
    let mut join = EdgeSet::new();
    for &x in order.iter().rev() {
        if let Some((p, e)) = parent[x] {
            if odd_below[x] % 2 == 1 {
                join.insert(e);
            }
            odd_below[p] += odd_below[x];
        }
    }

    let mut subgraph = t_a.clone();
    subgraph.extend(join.iter().copied());

    let start = (0..n).find(|&v| g.degree_in(v, &subgraph) > 0).unwrap_or(0);
    let trail = hierholzer_trail(g, &subgraph, start);

    let structure = EulerStructure { subgraph, trail, start };
    if let Err(e) = structure.check(g) {
        return Err(Error::invariant(format!("Euler structure self-check failed: {e}")));
    }
    Ok(structure)
}
