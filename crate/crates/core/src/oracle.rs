//! Exhaustive decomposition search. This is the ground truth the fast
//! pipeline is measured against; it is honest (complete within budget) and
//! therefore only usable on small graphs.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::graph::{
    verify_decomposition, Decomposition, EdgeId, EdgeSet, MultiGraph, PatternTree, TreeCopy,
    VertexId,
};

/// Result of the exhaustive search.
#[derive(Clone, Debug)]
pub enum OracleOutcome {
    Found(Decomposition),
    NotDecomposable,
    /// The node budget ran out before the search space was exhausted.
    BudgetExceeded,
}

impl OracleOutcome {
    pub fn is_found(&self) -> bool {
        matches!(self, OracleOutcome::Found(_))
    }
}

/// All embeddings of `pattern` that use the host edge `e` and avoid
/// `covered`, deduplicated by edge set (pattern automorphisms collapse),
/// in lexicographic edge-set order.
fn embeddings_containing(
    g: &MultiGraph,
    pattern: &Arc<PatternTree>,
    e: EdgeId,
    covered: &EdgeSet,
) -> Vec<TreeCopy> {
    let t = pattern.edge_count();
    let (hu, hv) = g.endpoints(e);
    let mut found: BTreeMap<Vec<EdgeId>, TreeCopy> = BTreeMap::new();

    for start in 0..t {
        // order the remaining pattern edges so each one touches an already
        // mapped pattern vertex (BFS over the tree from the start edge)
        let mut order = vec![start];
        let mut placed = vec![false; t];
        placed[start] = true;
        let mut touched = vec![false; pattern.vertex_count];
        let (sa, sb) = pattern.edges[start];
        touched[sa] = true;
        touched[sb] = true;
        while order.len() < t {
            for (pe, &(a, b)) in pattern.edges.iter().enumerate() {
                if !placed[pe] && (touched[a] || touched[b]) {
                    placed[pe] = true;
                    touched[a] = true;
                    touched[b] = true;
                    order.push(pe);
                }
            }
        }

        for flip in [false, true] {
            let (pa, pb) = pattern.edges[start];
            let (pa, pb) = if flip { (pb, pa) } else { (pa, pb) };
            let mut vmap: Vec<Option<VertexId>> = vec![None; pattern.vertex_count];
            let mut vused = vec![false; g.vertex_count()];
            vmap[pa] = Some(hu);
            vmap[pb] = Some(hv);
            vused[hu] = true;
            vused[hv] = true;
            let mut emap: Vec<Option<EdgeId>> = vec![None; t];
            emap[start] = Some(e);
            let mut eused: EdgeSet = [e].into_iter().collect();
            extend(
                g, pattern, covered, &order, 1, &mut vmap, &mut vused, &mut emap, &mut eused,
                &mut found,
            );
        }
    }
    found.into_values().collect()
}

#[allow(clippy::too_many_arguments)]
fn extend(
    g: &MultiGraph,
    pattern: &Arc<PatternTree>,
    covered: &EdgeSet,
    order: &[usize],
    depth: usize,
    vmap: &mut Vec<Option<VertexId>>,
    vused: &mut Vec<bool>,
    emap: &mut Vec<Option<EdgeId>>,
    eused: &mut EdgeSet,
    found: &mut BTreeMap<Vec<EdgeId>, TreeCopy>,
) {
    if depth == order.len() {
        let vertex_map: Vec<VertexId> = vmap.iter().map(|m| m.unwrap()).collect();
        let edge_map: Vec<EdgeId> = emap.iter().map(|m| m.unwrap()).collect();
        let mut key: Vec<EdgeId> = edge_map.clone();
        key.sort_unstable();
        let copy = TreeCopy::new(Arc::clone(pattern), vertex_map, edge_map);
        debug_assert!(copy.check(g).is_ok());
        // keep the lexicographically least witness per edge set
        found
            .entry(key)
            .and_modify(|old| {
                if copy.vertex_map < old.vertex_map {
                    *old = copy.clone();
                }
            })
            .or_insert(copy);
        return;
    }
    let pe = order[depth];
    let (a, b) = pattern.edges[pe];
    // in a tree added in connected order, exactly one endpoint is mapped
    let (mapped_pv, new_pv) = if vmap[a].is_some() { (a, b) } else { (b, a) };
    debug_assert!(vmap[new_pv].is_none());
    let x = vmap[mapped_pv].unwrap();
    for &f in g.edges_at(x) {
        if covered.contains(&f) || eused.contains(&f) {
            continue;
        }
        let y = g.other_endpoint(f, x);
        if vused[y] {
            continue;
        }
        vmap[new_pv] = Some(y);
        vused[y] = true;
        emap[pe] = Some(f);
        eused.insert(f);
        extend(g, pattern, covered, order, depth + 1, vmap, vused, emap, eused, found);
        vmap[new_pv] = None;
        vused[y] = false;
        emap[pe] = None;
        eused.remove(&f);
    }
}

/// Exhaustive backtracking search for a decomposition of all alive edges of
/// `g` into copies of `pattern`. Branches on the lowest-id uncovered edge;
/// `budget` caps the number of search nodes visited.
pub fn brute_force_decomposition(
    g: &MultiGraph,
    pattern: &PatternTree,
    budget: usize,
) -> OracleOutcome {
    let all = g.alive_edge_set();
    if pattern.edge_count() == 0 || all.len() % pattern.edge_count() != 0 {
        return OracleOutcome::NotDecomposable;
    }
    let pattern = Arc::new(pattern.clone());
    let mut covered = EdgeSet::new();
    let mut stackless_budget = budget;
    let mut copies = Vec::new();

    fn search(
        g: &MultiGraph,
        pattern: &Arc<PatternTree>,
        all: &EdgeSet,
        covered: &mut EdgeSet,
        copies: &mut Vec<TreeCopy>,
        budget: &mut usize,
    ) -> Option<bool> {
        if *budget == 0 {
            return None; // budget exhausted
        }
        *budget -= 1;
        let e = match all.iter().find(|e| !covered.contains(e)) {
            None => return Some(true),
            Some(&e) => e,
        };
        for copy in embeddings_containing(g, pattern, e, covered) {
            for &f in &copy.edge_map {
                covered.insert(f);
            }
            copies.push(copy);
            match search(g, pattern, all, covered, copies, budget) {
                Some(true) => return Some(true),
                Some(false) => {}
                None => return None,
            }
            let copy = copies.pop().unwrap();
            for &f in &copy.edge_map {
                covered.remove(&f);
            }
        }
        Some(false)
    }

    match search(g, &pattern, &all, &mut covered, &mut copies, &mut stackless_budget) {
        Some(true) => {
            let d = Decomposition::from_copies(copies);
            debug_assert!(verify_decomposition(g, &all, &pattern, &d).is_ok());
            OracleOutcome::Found(d)
        }
        Some(false) => OracleOutcome::NotDecomposable,
        None => OracleOutcome::BudgetExceeded,
    }
}

/// Independently coded yes/no enumerator for Y-decomposability, used only to
/// cross-check the oracle. It never builds embeddings: it picks 4-edge
/// subsets through the lowest uncovered edge and tests the Y shape directly
/// (5 distinct vertices, connected, degree multiset 3,2,1,1,1).
pub fn independent_y_decomposable(g: &MultiGraph) -> bool {
    let edges: Vec<EdgeId> = g.alive_edges().collect();
    if edges.len() % 4 != 0 {
        return false;
    }
    fn quad_is_y(g: &MultiGraph, quad: &[EdgeId; 4]) -> bool {
        let mut deg: BTreeMap<VertexId, usize> = BTreeMap::new();
        for &e in quad {
            let (u, v) = g.endpoints(e);
            *deg.entry(u).or_default() += 1;
            *deg.entry(v).or_default() += 1;
        }
        if deg.len() != 5 {
            return false;
        }
        let mut ds: Vec<usize> = deg.values().copied().collect();
        ds.sort_unstable();
        if ds != [1, 1, 1, 2, 3] {
            return false;
        }
        // connectivity over the 5 touched vertices
        let verts: Vec<VertexId> = deg.keys().copied().collect();
        let mut comp: Vec<usize> = (0..5).collect();
        let idx = |v: VertexId| verts.binary_search(&v).unwrap();
        for &e in quad {
            let (u, v) = g.endpoints(e);
            let (cu, cv) = (comp[idx(u)], comp[idx(v)]);
            if cu != cv {
                for c in comp.iter_mut() {
                    if *c == cv {
                        *c = cu;
                    }
                }
            }
        }
        comp.iter().all(|&c| c == comp[0])
    }
    fn go(g: &MultiGraph, remaining: &mut Vec<EdgeId>) -> bool {
        if remaining.is_empty() {
            return true;
        }
        let e = remaining[0];
        let rest: Vec<EdgeId> = remaining[1..].to_vec();
        let n = rest.len();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let quad = [e, rest[i], rest[j], rest[k]];
                    if !quad_is_y(g, &quad) {
                        continue;
                    }
                    let mut next: Vec<EdgeId> = rest
                        .iter()
                        .copied()
                        .filter(|f| !quad.contains(f))
                        .collect();
                    if go(g, &mut next) {
                        return true;
                    }
                }
            }
        }
        false
    }
    let mut remaining = edges;
    go(g, &mut remaining)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::gallery;
    use crate::graph::parse_graph;

    #[test]
    fn y_decomposes_as_itself() {
        let y = gallery("y").unwrap().graph;
        let out = brute_force_decomposition(&y, &PatternTree::y(), 10_000);
        match out {
            OracleOutcome::Found(d) => assert_eq!(d.copies.len(), 1),
            other => panic!("expected Found, got {other:?}"),
        }
    }

    #[test]
    fn c8_is_not_y_decomposable() {
        let c8 = parse_graph("8 8\n0 1\n1 2\n2 3\n3 4\n4 5\n5 6\n6 7\n7 0").unwrap();
        assert!(matches!(
            brute_force_decomposition(&c8, &PatternTree::y(), 100_000),
            OracleOutcome::NotDecomposable
        ));
    }

    #[test]
    fn wheel4_is_not_y_decomposable() {
        let w = gallery("wheel4").unwrap().graph;
        assert!(matches!(
            brute_force_decomposition(&w, &PatternTree::y(), 1_000_000),
            OracleOutcome::NotDecomposable
        ));
    }

    #[test]
    fn indivisible_size_is_rejected_immediately() {
        let k4 = gallery("k4").unwrap().graph;
        assert!(matches!(
            brute_force_decomposition(&k4, &PatternTree::y(), 1),
            OracleOutcome::NotDecomposable
        ));
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let g = crate::random::random_regular(10, 4, 1).unwrap();
        assert!(matches!(
            brute_force_decomposition(&g, &PatternTree::y(), 2),
            OracleOutcome::BudgetExceeded
        ));
    }

    #[test]
    fn double_y_decomposes() {
        // two vertex-disjoint Y copies in one graph
        let g = parse_graph("10 8\n0 1\n0 2\n0 3\n1 4\n5 6\n5 7\n5 8\n6 9").unwrap();
        let out = brute_force_decomposition(&g, &PatternTree::y(), 100_000);
        match out {
            OracleOutcome::Found(d) => assert_eq!(d.copies.len(), 2),
            other => panic!("expected Found, got {other:?}"),
        }
    }

    #[test]
    fn oracle_agrees_with_independent_enumerator_on_small_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..60 {
            let n = rng.gen_range(5..=6);
            let m = 4 * rng.gen_range(1..=2usize);
            let mut g = MultiGraph::new(n);
            let mut pairs = std::collections::BTreeSet::new();
            while pairs.len() < m {
                let u = rng.gen_range(0..n);
                let v = rng.gen_range(0..n);
                if u != v {
                    pairs.insert((u.min(v), u.max(v)));
                }
            }
            for (u, v) in pairs {
                g.add_edge(u, v);
            }
            let oracle = brute_force_decomposition(&g, &PatternTree::y(), 1_000_000);
            let indep = independent_y_decomposable(&g);
            match oracle {
                OracleOutcome::Found(_) => assert!(indep),
                OracleOutcome::NotDecomposable => assert!(!indep),
                OracleOutcome::BudgetExceeded => panic!("budget too small for 8-edge graph"),
            }
        }
    }

    #[test]
    fn path_pattern_oracle() {
        // C6 decomposes into two paths of length 3
        let c6 = parse_graph("6 6\n0 1\n1 2\n2 3\n3 4\n4 5\n5 0").unwrap();
        let out = brute_force_decomposition(&c6, &PatternTree::path(3), 100_000);
        assert!(out.is_found());
    }
}
