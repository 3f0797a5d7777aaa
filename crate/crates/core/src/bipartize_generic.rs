//! Generic tree bipartization: delete copies of an arbitrary pattern tree T
//! with t > 3 edges until every surviving edge crosses a bipartition.
//!
//! The scheme follows four steps per side: strip complete copies greedily,
//! fold the leftover into partial copies (subtrees of T grown level by
//! level), partition the partial copies into at most t² classes so that no
//! vertex is unsaturated twice within a class, and complete each class from
//! a nested union chain, drawing level-j extensions from the j-th layer
//! difference. The literature constant governing how many spanning trees
//! this needs (8t^{2t+3} + 4k_T − 1 edge-connectivity) is far beyond
//! desk scale, so the caller supplies a tree budget instead; any successful
//! run is fully verified, and an underfed run fails loudly.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::connectivity::{max_cut_bipartition, nested_union_chain, pack_spanning_trees_in, TreePack, UnionChain};
use crate::error::{Error, Result};
use crate::graph::{Bipartition, EdgeId, EdgeSet, MultiGraph, PatternTree, Side, TreeCopy, VertexId};

/// A subtree of the pattern embedded in the host, grown from the pattern
/// root. Keys of `vertex_map` are pattern vertices; keys of `edge_map` are
/// pattern edge indices.
#[derive(Clone, Debug)]
pub struct PartialCopy {
    pub pattern: Arc<PatternTree>,
    pub root: usize,
    pub vertex_map: BTreeMap<usize, VertexId>,
    pub edge_map: BTreeMap<usize, EdgeId>,
}

impl PartialCopy {
    pub fn edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edge_map.values().copied()
    }

    pub fn host_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertex_map.values().copied()
    }

    pub fn is_complete(&self) -> bool {
        self.edge_map.len() == self.pattern.edge_count()
    }

    /// Host vertices whose pattern vertex still has unmapped pattern edges,
    /// with that pattern vertex.
    pub fn unsaturated(&self) -> Vec<(usize, VertexId)> {
        self.vertex_map
            .iter()
            .filter(|&(&p, _)| {
                (0..self.pattern.edge_count()).any(|i| {
                    let (a, b) = self.pattern.edges[i];
                    (a == p || b == p) && !self.edge_map.contains_key(&i)
                })
            })
            .map(|(&p, &v)| (p, v))
            .collect()
    }

    /// The mapped part is a subtree containing the root, consistently and
    /// injectively embedded.
    pub fn check(&self, g: &MultiGraph) -> std::result::Result<(), String> {
        if !self.vertex_map.contains_key(&self.root) {
            return Err("root is not mapped".into());
        }
        let mut hosts: Vec<VertexId> = self.vertex_map.values().copied().collect();
        hosts.sort_unstable();
        if hosts.windows(2).any(|w| w[0] == w[1]) {
            return Err("vertex map is not injective".into());
        }
        if self.vertex_map.len() != self.edge_map.len() + 1 {
            return Err("mapped part is not a tree".into());
        }
        let levels = self.pattern.bfs_levels(self.root);
        for (&i, &e) in &self.edge_map {
            let (pa, pb) = self.pattern.edges[i];
            let (ha, hb) = match (self.vertex_map.get(&pa), self.vertex_map.get(&pb)) {
                (Some(&x), Some(&y)) => (x, y),
                _ => return Err(format!("pattern edge {i} has an unmapped endpoint")),
            };
            let ep = g.endpoints(e);
            if ep != (ha, hb) && ep != (hb, ha) {
                return Err(format!("host edge {e} does not match pattern edge {i}"));
            }
            // connectivity to the root: the shallower endpoint's own parent
            // edge must be mapped, unless it is the root
            let parent = if levels[pa] < levels[pb] { pa } else { pb };
            if parent != self.root {
                let pe = (0..self.pattern.edge_count())
                    .find(|&j| {
                        let (x, y) = self.pattern.edges[j];
                        (x == parent && levels[y] < levels[parent])
                            || (y == parent && levels[x] < levels[parent])
                    })
                    .unwrap();
                if !self.edge_map.contains_key(&pe) {
                    return Err(format!("pattern edge {i} is disconnected from the root"));
                }
            }
        }
        Ok(())
    }

    fn into_tree_copy(self, g: &MultiGraph) -> Result<TreeCopy> {
        if !self.is_complete() {
            return Err(Error::invariant("completing an incomplete partial copy"));
        }
        let vertex_map: Vec<VertexId> =
            (0..self.pattern.vertex_count).map(|p| self.vertex_map[&p]).collect();
        let edge_map: Vec<EdgeId> =
            (0..self.pattern.edge_count()).map(|i| self.edge_map[&i]).collect();
        let copy = TreeCopy::new(self.pattern, vertex_map, edge_map);
        copy.check(g).map_err(Error::invariant)?;
        Ok(copy)
    }
}

/// Root that minimises the pattern height, lowest index first; extensions
/// then need as few chain layers as possible.
pub fn fold_root(pattern: &PatternTree) -> usize {
    (0..pattern.vertex_count).min_by_key(|&r| (pattern.height(r), r)).unwrap()
}

/// First embedding of the pattern using `anchor` and otherwise only `allowed`
/// edges, or None. Depth-first with early exit, every pattern edge and
/// orientation tried as the anchor image.
fn find_embedding(
    g: &MultiGraph,
    pattern: &Arc<PatternTree>,
    allowed: &EdgeSet,
    anchor: EdgeId,
) -> Option<TreeCopy> {
    let t = pattern.edge_count();
    let (hu, hv) = g.endpoints(anchor);
    for start in 0..t {
        // order pattern edges so each touches an already-mapped vertex
        let mut order = vec![start];
        let mut touched = vec![false; pattern.vertex_count];
        let (sa, sb) = pattern.edges[start];
        touched[sa] = true;
        touched[sb] = true;
        while order.len() < t {
            for i in 0..t {
                if order.contains(&i) {
                    continue;
                }
                let (a, b) = pattern.edges[i];
                if touched[a] || touched[b] {
                    order.push(i);
                    touched[a] = true;
                    touched[b] = true;
                }
            }
        }
        for flip in [false, true] {
            let (pa, pb) = pattern.edges[start];
            let (ia, ib) = if flip { (hv, hu) } else { (hu, hv) };
            if ia == ib {
                continue;
            }
            let mut vmap = vec![None; pattern.vertex_count];
            vmap[pa] = Some(ia);
            vmap[pb] = Some(ib);
            let mut emap = vec![None; t];
            emap[start] = Some(anchor);
            if dfs(g, pattern, allowed, &order, 1, &mut vmap, &mut emap) {
                let copy = TreeCopy::new(
                    pattern.clone(),
                    vmap.into_iter().map(Option::unwrap).collect(),
                    emap.into_iter().map(Option::unwrap).collect(),
                );
                debug_assert!(copy.check(g).is_ok());
                return Some(copy);
            }
        }
    }
    None
}

fn dfs(
    g: &MultiGraph,
    pattern: &Arc<PatternTree>,
    allowed: &EdgeSet,
    order: &[usize],
    depth: usize,
    vmap: &mut Vec<Option<VertexId>>,
    emap: &mut Vec<Option<EdgeId>>,
) -> bool {
    if depth == order.len() {
        return true;
    }
    let i = order[depth];
    let (pa, pb) = pattern.edges[i];
    // exactly one endpoint is mapped, by the order construction
    let (mapped, free) = if vmap[pa].is_some() { (pa, pb) } else { (pb, pa) };
    let hv = vmap[mapped].unwrap();
    for &e in g.edges_at(hv) {
        if !allowed.contains(&e) || emap.contains(&Some(e)) {
            continue;
        }
        let w = g.other_endpoint(e, hv);
        if vmap.contains(&Some(w)) {
            continue;
        }
        vmap[free] = Some(w);
        emap[i] = Some(e);
        if dfs(g, pattern, allowed, order, depth + 1, vmap, emap) {
            return true;
        }
        vmap[free] = None;
        emap[i] = None;
    }
    false
}

/// Greedily removes complete pattern copies from `inside` until none remain;
/// returns the copies and the leftover edges.
pub fn strip_copies(
    g: &MultiGraph,
    pattern: &Arc<PatternTree>,
    inside: &EdgeSet,
) -> (Vec<TreeCopy>, EdgeSet) {
    let mut remaining = inside.clone();
    let mut copies = Vec::new();
    let mut stable_from: Option<EdgeId> = None;
    loop {
        let anchor = remaining
            .iter()
            .copied()
            .find(|&e| stable_from.map_or(true, |s| e >= s));
        let Some(anchor) = anchor else {
            break;
        };
        match find_embedding(g, pattern, &remaining, anchor) {
            Some(copy) => {
                for &e in &copy.edge_map {
                    remaining.remove(&e);
                }
                copies.push(copy);
                // removal can re-enable lower anchors
                stable_from = None;
            }
            None => stable_from = Some(anchor + 1),
        }
    }
    (copies, remaining)
}

/// Partitions `inside` into partial copies by folding the pattern level by
/// level from the lowest non-isolated vertex, skipping edges that would
/// close a cycle. Each partition class is a subtree of the pattern.
pub fn fold_tree_cover(
    g: &MultiGraph,
    inside: &EdgeSet,
    pattern: &Arc<PatternTree>,
) -> Vec<PartialCopy> {
    let root = fold_root(pattern);
    let levels = pattern.bfs_levels(root);
    let mut remaining = inside.clone();
    let mut out = Vec::new();
    loop {
        let Some(v1) = (0..g.vertex_count()).find(|&v| g.degree_in(v, &remaining) > 0) else {
            break;
        };
        let mut pc = PartialCopy {
            pattern: pattern.clone(),
            root,
            vertex_map: BTreeMap::from([(root, v1)]),
            edge_map: BTreeMap::new(),
        };
        let mut frontier = vec![root];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &p in &frontier {
                let hv = pc.vertex_map[&p];
                for i in 0..pattern.edge_count() {
                    let (a, b) = pattern.edges[i];
                    let child = if a == p && levels[b] == levels[p] + 1 {
                        b
                    } else if b == p && levels[a] == levels[p] + 1 {
                        a
                    } else {
                        continue;
                    };
                    let pick = g.edges_at(hv).iter().copied().find(|e| {
                        remaining.contains(e)
                            && !pc
                                .vertex_map
                                .values()
                                .any(|&x| x == g.other_endpoint(*e, hv))
                    });
                    if let Some(e) = pick {
                        remaining.remove(&e);
                        pc.vertex_map.insert(child, g.other_endpoint(e, hv));
                        pc.edge_map.insert(i, e);
                        next.push(child);
                    }
                }
            }
            frontier = next;
        }
        debug_assert!(pc.check(g).is_ok());
        debug_assert!(!pc.edge_map.is_empty());
        out.push(pc);
    }
    // the counting bound behind the class partition: with no complete copy
    // in `inside`, a vertex is unsaturated in at most t-1 partial copies
    let t = pattern.edge_count();
    let mut multiplicity: BTreeMap<VertexId, usize> = BTreeMap::new();
    for pc in &out {
        for (_, v) in pc.unsaturated() {
            *multiplicity.entry(v).or_insert(0) += 1;
        }
    }
    assert!(
        multiplicity.values().all(|&c| c <= t - 1),
        "fold produced a vertex unsaturated in more than t-1 copies"
    );
    out
}

/// First-fit partition of the partial copies into at most t² classes such
/// that within a class every vertex is unsaturated in at most one copy.
pub fn partition_unsaturated(copies: Vec<PartialCopy>, t: usize) -> Result<Vec<Vec<PartialCopy>>> {
    let mut classes: Vec<Vec<PartialCopy>> = Vec::new();
    let mut class_unsat: Vec<EdgeSet> = Vec::new(); // host vertex sets
    'copy: for pc in copies {
        let unsat: Vec<VertexId> = pc.unsaturated().into_iter().map(|(_, v)| v).collect();
        for (ci, used) in class_unsat.iter_mut().enumerate() {
            if unsat.iter().all(|v| !used.contains(v)) {
                used.extend(unsat.iter().copied());
                classes[ci].push(pc);
                continue 'copy;
            }
        }
        if classes.len() == t * t {
            return Err(Error::invariant(format!(
                "partial copies need more than t² = {} unsaturation classes",
                t * t
            )));
        }
        class_unsat.push(unsat.iter().copied().collect());
        classes.push(vec![pc]);
    }
    Ok(classes)
}

/// Completes every partial copy in a class to a full pattern copy, drawing
/// level-j extensions from the j-th layer difference of the chain; per
/// unsaturated vertex and copy, t−1 chain edges are reserved up front so
/// that demands never compete.
pub fn complete_partial_copies(
    g: &MultiGraph,
    class: Vec<PartialCopy>,
    chain: &UnionChain,
) -> Result<Vec<TreeCopy>> {
    if class.is_empty() {
        return Ok(Vec::new());
    }
    let pattern = class[0].pattern.clone();
    let t = pattern.edge_count();
    let root = class[0].root;
    let levels = pattern.bfs_levels(root);
    let mut copies = class;
    let mut consumed: EdgeSet = copies.iter().flat_map(|c| c.edges().collect::<Vec<_>>()).collect();
    let mut pending: Vec<Vec<(usize, VertexId)>> =
        copies.iter().map(|c| c.unsaturated()).collect();

    for step in 1.. {
        if pending.iter().all(|l| l.is_empty()) {
            break;
        }
        if step > chain.layers.len() {
            let (_, v) = pending.iter().flatten().next().unwrap();
            return Err(Error::ExtensionStarved { vertex: *v, needed: t - 1, available: 0 });
        }
        let mut pool: EdgeSet = chain.layers[step - 1]
            .iter()
            .copied()
            .filter(|e| (step < 2 || !chain.layers[step - 2].contains(e)) && !consumed.contains(e))
            .collect();
        // reservations: t-1 pool edges per (copy, unsaturated vertex),
        // preferring one edge per endpoint outside the copy so that the
        // later picks always find an acyclic extension when one exists
        let mut reservations: Vec<Vec<Vec<EdgeId>>> = Vec::with_capacity(copies.len());
        for (ci, list) in pending.iter().enumerate() {
            let mut per_copy = Vec::with_capacity(list.len());
            for &(_, hv) in list {
                let mut fresh: BTreeMap<VertexId, EdgeId> = BTreeMap::new();
                let mut rest: Vec<EdgeId> = Vec::new();
                for &e in g.edges_at(hv) {
                    if !pool.contains(&e) {
                        continue;
                    }
                    let w = g.other_endpoint(e, hv);
                    if copies[ci].vertex_map.values().any(|&x| x == w) || fresh.contains_key(&w) {
                        rest.push(e);
                    } else {
                        fresh.insert(w, e);
                    }
                }
                let take: Vec<EdgeId> =
                    fresh.into_values().chain(rest).take(t - 1).collect();
                if take.len() < t - 1 {
                    return Err(Error::ExtensionStarved {
                        vertex: hv,
                        needed: t - 1,
                        available: take.len(),
                    });
                }
                for e in &take {
                    pool.remove(e);
                }
                per_copy.push(take);
            }
            reservations.push(per_copy);
        }
        // extensions
        let mut next_pending: Vec<Vec<(usize, VertexId)>> = vec![Vec::new(); copies.len()];
        for ci in 0..copies.len() {
            for (di, &(p, hv)) in pending[ci].clone().iter().enumerate() {
                let mut res = reservations[ci][di].clone();
                for i in 0..t {
                    let (a, b) = pattern.edges[i];
                    let child = if a == p && levels[b] == levels[p] + 1 {
                        b
                    } else if b == p && levels[a] == levels[p] + 1 {
                        a
                    } else {
                        continue;
                    };
                    if copies[ci].edge_map.contains_key(&i) {
                        continue;
                    }
                    let pos = res.iter().position(|&e| {
                        let w = g.other_endpoint(e, hv);
                        !copies[ci].vertex_map.values().any(|&x| x == w)
                    });
                    let e = match pos {
                        Some(pos) => res.remove(pos),
                        None => {
                            // extensions made earlier in this step absorbed
                            // every reserved endpoint into the copy; fall
                            // back to the unreserved remainder of the pool
                            let found = g.edges_at(hv).iter().copied().find(|&e| {
                                pool.contains(&e)
                                    && !copies[ci]
                                        .vertex_map
                                        .values()
                                        .any(|&x| x == g.other_endpoint(e, hv))
                            });
                            let Some(e) = found else {
                                return Err(Error::ExtensionStarved {
                                    vertex: hv,
                                    needed: 1,
                                    available: 0,
                                });
                            };
                            pool.remove(&e);
                            e
                        }
                    };
                    let w = g.other_endpoint(e, hv);
                    consumed.insert(e);
                    copies[ci].vertex_map.insert(child, w);
                    copies[ci].edge_map.insert(i, e);
                    if pattern.neighbors(child).iter().any(|&c| levels[c] == levels[child] + 1) {
                        next_pending[ci].push((child, w));
                    }
                }
            }
        }
        pending = next_pending;
    }
    copies.into_iter().map(|c| c.into_tree_copy(g)).collect()
}

/// Outcome of a generic bipartization run.
#[derive(Clone, Debug)]
pub struct GenericBipartized {
    pub bipartition: Bipartition,
    pub surviving_pack: TreePack,
    pub removed: Vec<TreeCopy>,
}

/// Deletes pattern copies until both sides of a max-cut bipartition are
/// empty. `tree_budget` crossing spanning trees are packed; each class of
/// partial copies consumes a fresh nested union chain from that pool, and
/// the unallocated trees are returned intact.
pub fn bipartize_generic(
    g: &MultiGraph,
    pattern: &Arc<PatternTree>,
    tree_budget: usize,
) -> Result<GenericBipartized> {
    let t = pattern.edge_count();
    if t <= 3 {
        return Err(Error::InvalidArgument(format!(
            "generic bipartization needs a pattern with more than 3 edges, got {t}"
        )));
    }
    if tree_budget == 0 {
        return Err(Error::InvalidArgument("tree budget must be positive".into()));
    }
    let bip = max_cut_bipartition(g, 2 * tree_budget)?;
    let pack = pack_spanning_trees_in(g, &bip.crossing_edges, tree_budget).map_err(|e| {
        Error::BudgetExceeded(format!("cannot pack {tree_budget} crossing trees: {e}"))
    })?;

    let root = fold_root(pattern);
    let ell = pattern.height(root).saturating_sub(1).max(1);
    let chain_size = t * t.pow(2 * ell as u32);

    let mut next_tree = 0usize;
    let mut removed: Vec<TreeCopy> = Vec::new();
    let mut dead = EdgeSet::new();
    for side in [Side::A, Side::B] {
        let inside: EdgeSet = g
            .alive_edges()
            .filter(|&e| {
                let (u, v) = g.endpoints(e);
                bip.side_of[u] == side && bip.side_of[v] == side && !dead.contains(&e)
            })
            .collect();
        let (stripped, leftover) = strip_copies(g, pattern, &inside);
        for c in stripped {
            dead.extend(c.edge_map.iter().copied());
            removed.push(c);
        }
        if leftover.is_empty() {
            continue;
        }
        let partials = fold_tree_cover(g, &leftover, pattern);
        let classes = partition_unsaturated(partials, t)?;
        for class in classes {
            if next_tree + chain_size > pack.len() {
                return Err(Error::BudgetExceeded(format!(
                    "a completion class needs a {chain_size}-tree chain but only {} of \
                     {tree_budget} budget trees remain",
                    pack.len() - next_tree
                )));
            }
            let sub = TreePack {
                trees: pack.trees[next_tree..next_tree + chain_size].to_vec(),
            };
            next_tree += chain_size;
            let chain = nested_union_chain(g, &sub, t, t, ell)?;
            let completed = complete_partial_copies(g, class, &chain)?;
            for c in completed {
                dead.extend(c.edge_map.iter().copied());
                removed.push(c);
            }
        }
    }

    // every deleted edge is accounted for by exactly one verified copy
    let d = crate::graph::Decomposition::from_copies(removed);
    crate::graph::verify_decomposition(g, &dead, pattern, &d)
        .map_err(|e| Error::invariant(format!("removed copies fail verification: {e}")))?;
    let removed = d.copies;
    for e in g.alive_edges() {
        if dead.contains(&e) {
            continue;
        }
        let (u, v) = g.endpoints(e);
        if bip.side_of[u] == bip.side_of[v] {
            return Err(Error::invariant(format!("edge {e} survives inside one side")));
        }
    }
    let surviving_pack = TreePack { trees: pack.trees[next_tree..].to_vec() };
    for tree in &surviving_pack.trees {
        if tree.iter().any(|e| dead.contains(e)) {
            return Err(Error::invariant("a surviving pack tree lost an edge"));
        }
    }
    Ok(GenericBipartized { bipartition: bip, surviving_pack, removed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_bipartite_regular, random_k_connected};

    fn y() -> Arc<PatternTree> {
        Arc::new(PatternTree::y())
    }

    #[test]
    fn fold_single_edge() {
        let mut g = MultiGraph::new(2);
        g.add_edge(0, 1);
        let out = fold_tree_cover(&g, &g.alive_edge_set(), &y());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].edge_map.len(), 1);
        let unsat: Vec<VertexId> = out[0].unsaturated().into_iter().map(|(_, v)| v).collect();
        assert!(unsat.contains(&0));
    }

    #[test]
    fn fold_three_star() {
        // Y's root (the centre, height 2) folds a 3-star in one copy
        let mut g = MultiGraph::new(4);
        for v in 1..4 {
            g.add_edge(0, v);
        }
        let out = fold_tree_cover(&g, &g.alive_edge_set(), &y());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].edge_map.len(), 3);
        // the centre mapped all three of its pattern edges; only the mapped
        // 2-vertex (awaiting its pendant) is unsaturated
        let unsat = out[0].unsaturated();
        assert_eq!(unsat.len(), 1);
    }

    #[test]
    fn fold_partitions_y_free_graph() {
        // C5 has no Y-copy; the fold must partition all 5 edges
        let mut g = MultiGraph::new(5);
        for i in 0..5 {
            g.add_edge(i, (i + 1) % 5);
        }
        let inside = g.alive_edge_set();
        let out = fold_tree_cover(&g, &inside, &y());
        let mut covered = EdgeSet::new();
        for pc in &out {
            pc.check(&g).unwrap();
            for e in pc.edges() {
                assert!(covered.insert(e));
            }
        }
        assert_eq!(covered, inside);
    }

    #[test]
    fn partition_disjoint_copies_share_a_class() {
        let mut g = MultiGraph::new(4);
        g.add_edge(0, 1);
        g.add_edge(2, 3);
        let out = fold_tree_cover(&g, &g.alive_edge_set(), &y());
        let classes = partition_unsaturated(out, 4).unwrap();
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].len(), 2);
    }

    #[test]
    fn partition_splits_shared_unsaturation() {
        // a triangle folds into two Y-fragments both unsaturated at the
        // vertex whose last edge was skipped for cycle avoidance; the
        // fragments must land in distinct classes
        let mut g = MultiGraph::new(3);
        g.add_edge(0, 1);
        g.add_edge(0, 2);
        g.add_edge(1, 2);
        let out = fold_tree_cover(&g, &g.alive_edge_set(), &y());
        assert_eq!(out.len(), 2);
        let shared: Vec<VertexId> = out[0]
            .unsaturated()
            .iter()
            .map(|&(_, v)| v)
            .filter(|v| out[1].unsaturated().iter().any(|&(_, w)| w == *v))
            .collect();
        assert!(!shared.is_empty());
        let classes = partition_unsaturated(out, 4).unwrap();
        assert_eq!(classes.len(), 2);
        for class in &classes {
            let mut seen = EdgeSet::new();
            for pc in class {
                for (_, v) in pc.unsaturated() {
                    assert!(seen.insert(v), "vertex {v} unsaturated twice in a class");
                }
            }
        }
    }

    /// Multigraph host and hand-built chain for completion tests: K6 with
    /// 48 parallel edges per pair, and 128 edge-disjoint spanning stars with
    /// rotating centres (k = 8, m = 4, ℓ = 1). The rotation makes every
    /// layer edge-diverse at every vertex, which packer output on a
    /// multigraph is not.
    fn chain_host() -> (MultiGraph, UnionChain) {
        let mut g = MultiGraph::new(6);
        let mut spare: BTreeMap<(usize, usize), Vec<EdgeId>> = BTreeMap::new();
        for u in 0..6 {
            for v in u + 1..6 {
                for _ in 0..48 {
                    spare.entry((u, v)).or_default().push(g.add_edge(u, v));
                }
            }
        }
        let star = |spare: &mut BTreeMap<(usize, usize), Vec<EdgeId>>, c: usize| -> EdgeSet {
            (0..6)
                .filter(|&v| v != c)
                .map(|v| spare.get_mut(&(c.min(v), c.max(v))).unwrap().pop().unwrap())
                .collect()
        };
        let stars: Vec<EdgeSet> = (0..128).map(|t| star(&mut spare, t % 6)).collect();
        let layer_trees = vec![stars[..8].to_vec(), stars.clone()];
        let layers: Vec<EdgeSet> = layer_trees
            .iter()
            .map(|trees| trees.iter().flatten().copied().collect())
            .collect();
        let chain = UnionChain { layers, layer_trees, k: 8, m: 4, ell: 1 };
        chain.check(&g).unwrap();
        (g, chain)
    }

    #[test]
    fn complete_one_missing_leaf() {
        let (g, chain) = chain_host();
        // Y embedded except the pendant at the 2-vertex
        let pattern = y();
        let pc = PartialCopy {
            pattern: pattern.clone(),
            root: fold_root(&pattern),
            vertex_map: BTreeMap::from([(0, 0), (1, 1), (2, 2), (3, 3)]),
            edge_map: BTreeMap::from([
                (0, first_edge(&g, 0, 1)),
                (1, first_edge(&g, 0, 2)),
                (2, first_edge(&g, 0, 3)),
            ]),
        };
        let out = complete_partial_copies(&g, vec![pc], &chain).unwrap();
        assert_eq!(out.len(), 1);
        out[0].check(&g).unwrap();
        assert!(chain.layers[0].contains(&out[0].edge_map[3]));
    }

    #[test]
    fn complete_class_stays_edge_disjoint() {
        let (g, chain) = chain_host();
        let pattern = y();
        let root = fold_root(&pattern);
        // two single-edge partial copies rooted at different vertices
        let mk = |a: VertexId, b: VertexId, skip: &EdgeSet| PartialCopy {
            pattern: pattern.clone(),
            root,
            vertex_map: BTreeMap::from([(0, a), (1, b)]),
            edge_map: BTreeMap::from([(
                0,
                g.edges_at(a)
                    .iter()
                    .copied()
                    .find(|&e| g.other_endpoint(e, a) == b && !skip.contains(&e))
                    .unwrap(),
            )]),
        };
        let first = mk(0, 1, &EdgeSet::new());
        let used: EdgeSet = first.edges().collect();
        let second = mk(2, 3, &used);
        let out = complete_partial_copies(&g, vec![first, second], &chain).unwrap();
        assert_eq!(out.len(), 2);
        let mut all = EdgeSet::new();
        for c in &out {
            c.check(&g).unwrap();
            for &e in &c.edge_map {
                assert!(all.insert(e), "copies share edge {e}");
            }
        }
    }

    #[test]
    fn shallow_chain_starves() {
        // ell = 1 gives two layers; a bare single-edge Y-copy needs
        // extensions at depth 2 after adding the centre's leaves — force
        // the starvation by exhausting the layers with a pattern of
        // height 3 from its best root
        let pattern = Arc::new(PatternTree::path(6));
        let (g, chain) = chain_host();
        let root = fold_root(&pattern); // centre of the path, height 3
        let pc = PartialCopy {
            pattern: pattern.clone(),
            root,
            vertex_map: BTreeMap::from([(root, 0), (root + 1, 1)]),
            edge_map: BTreeMap::from([(root, first_edge(&g, 0, 1))]),
        };
        let err = complete_partial_copies(&g, vec![pc], &chain).unwrap_err();
        assert!(matches!(err, Error::ExtensionStarved { .. }), "got {err:?}");
    }

    fn first_edge(g: &MultiGraph, a: VertexId, b: VertexId) -> EdgeId {
        g.edges_at(a).iter().copied().find(|&e| g.other_endpoint(e, a) == b).unwrap()
    }

    #[test]
    fn rejects_small_patterns() {
        let g = random_k_connected(10, 4, 0).unwrap();
        let p3 = Arc::new(PatternTree::path(3));
        assert!(matches!(
            bipartize_generic(&g, &p3, 4),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            bipartize_generic(&g, &y(), 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn bipartite_host_succeeds_without_removals() {
        let g = random_bipartite_regular(8, 8, 4).unwrap();
        let out = bipartize_generic(&g, &y(), 2).unwrap();
        assert!(out.removed.is_empty());
        assert_eq!(out.surviving_pack.len(), 2);
        for e in g.alive_edges() {
            let (u, v) = g.endpoints(e);
            assert_ne!(out.bipartition.side_of[u], out.bipartition.side_of[v]);
        }
    }

    #[test]
    fn fuzz_path4_verified_success_or_clean_budget_error() {
        let pattern = Arc::new(PatternTree::path(4));
        for seed in 0..6 {
            let g = random_k_connected(18, 15, seed).unwrap();
            match bipartize_generic(&g, &pattern, 4) {
                Ok(out) => {
                    // verified inside bipartize_generic; spot-check coverage
                    let removed: EdgeSet =
                        out.removed.iter().flat_map(|c| c.edge_map.clone()).collect();
                    assert_eq!(removed.len(), 4 * out.removed.len());
                }
                Err(Error::BudgetExceeded(_))
                | Err(Error::ExtensionStarved { .. })
                | Err(Error::InsufficientTrees { .. }) => {}
                Err(e) => panic!("unexpected error: {e:?}"),
            }
        }
    }
}
