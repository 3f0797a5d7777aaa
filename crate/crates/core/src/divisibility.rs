//! Phases 1 and 2 of the main decomposition: walking Euler trails and
//! removing Y-copies until every A-side degree is divisible by 4.
//!
//! Both phases draw an Eulerian spanning subgraph from two degree-bounded
//! spanning trees, walk it in steps of two edges (A to B to A), and remove
//! Y-copies consisting of such a 2-path plus two auxiliary edges taken from
//! the tree unions outside the Euler subgraph.

use std::sync::Arc;

use crate::connectivity::{bounded_tree_with_bounds, euler_spanning_subgraph, EulerStructure};
use crate::error::{Error, Result};
use crate::graph::{Bipartition, EdgeId, EdgeSet, MultiGraph, PatternTree, Side, TreeCopy, VertexId};

/// What a repair phase did: the removed copies plus audit tables.
#[derive(Clone, Debug)]
pub struct PhaseReport {
    pub removed: Vec<TreeCopy>,
    /// The Euler subgraph the walk ran on.
    pub euler_edges_used: EdgeSet,
    /// Degrees in the working edge set when the phase started / finished.
    pub degrees_before: Vec<usize>,
    pub degrees_after: Vec<usize>,
}

impl PhaseReport {
    pub fn removed_edges(&self) -> EdgeSet {
        self.removed.iter().flat_map(|c| c.edge_map.iter().copied()).collect()
    }
}

fn degrees_in(g: &MultiGraph, set: &EdgeSet) -> Vec<usize> {
    (0..g.vertex_count()).map(|v| g.degree_in(v, set)).collect()
}

fn check_phase_inputs(
    g: &MultiGraph,
    current: &EdgeSet,
    bip: &Bipartition,
    ma: &EdgeSet,
    mb: &EdgeSet,
) -> Result<()> {
    if !ma.is_subset(current) || !mb.is_subset(current) {
        return Err(Error::InvalidArgument("tree union is not inside the working edge set".into()));
    }
    if !ma.is_disjoint(mb) {
        return Err(Error::InvalidArgument("the two tree unions overlap".into()));
    }
    for &e in current {
        let (u, v) = g.endpoints(e);
        if bip.side_of[u] == bip.side_of[v] {
            return Err(Error::InvalidArgument("working edge set is not bipartite".into()));
        }
    }
    Ok(())
}

/// Euler structure over bounded spanning trees of the two unions; the bound
/// at each vertex is `bound(deg_in_union)`.
fn euler_over_unions(
    g: &MultiGraph,
    ma: &EdgeSet,
    mb: &EdgeSet,
    bound: impl Fn(usize) -> usize,
) -> Result<EulerStructure> {
    let ta = {
        let bounds: Vec<usize> =
            (0..g.vertex_count()).map(|v| bound(g.degree_in(v, ma)).max(1)).collect();
        bounded_tree_with_bounds(g, ma, &bounds)?
    };
    let tb = {
        let bounds: Vec<usize> =
            (0..g.vertex_count()).map(|v| bound(g.degree_in(v, mb)).max(1)).collect();
        bounded_tree_with_bounds(g, mb, &bounds)?
    };
    euler_spanning_subgraph(g, &ta, &tb)
}

/// The closed trail rotated to start at `v` (an A-vertex on the trail).
fn rotate_trail(g: &MultiGraph, es: &EulerStructure, v: VertexId) -> Vec<EdgeId> {
    let walk = es.vertex_walk(g);
    let pos = walk.iter().position(|&w| w == v).expect("vertex on the spanning trail");
    let mut trail = es.trail[pos..].to_vec();
    trail.extend_from_slice(&es.trail[..pos]);
    trail
}

/// Lowest-id auxiliary edge at `v` inside `pool`, not yet removed, whose
/// other endpoint avoids `forbidden`.
fn draw_aux(
    g: &MultiGraph,
    pool: &EdgeSet,
    gone: &EdgeSet,
    v: VertexId,
    forbidden: &[VertexId],
) -> Result<(EdgeId, VertexId)> {
    for &e in g.edges_at(v) {
        if !pool.contains(&e) || gone.contains(&e) {
            continue;
        }
        let w = g.other_endpoint(e, v);
        if forbidden.contains(&w) {
            continue;
        }
        return Ok((e, w));
    }
    Err(Error::invariant(format!("no auxiliary edge available at vertex {v}")))
}

/// Phase 1: make every A-degree even.
///
/// `ma`/`mb` are disjoint unions of spanning trees inside `current` (seven
/// each at the paper constants). Bounded trees with per-vertex degree at
/// most half the union degree give an Euler subgraph E1; the walk opens a
/// segment at each bad (odd-degree) A-vertex and closes it at the next,
/// turning every intermediate 2-path of E1 into a Y-copy with two auxiliary
/// edges at its arrival vertex.
pub fn fix_parity(
    g: &MultiGraph,
    current: &EdgeSet,
    bip: &Bipartition,
    ma: &EdgeSet,
    mb: &EdgeSet,
) -> Result<PhaseReport> {
    check_phase_inputs(g, current, bip, ma, mb)?;
    let degrees_before = degrees_in(g, current);
    let is_a = |v: VertexId| bip.side_of[v] == Side::A;

    let bad: Vec<VertexId> = (0..g.vertex_count())
        .filter(|&v| is_a(v) && degrees_before[v] % 2 == 1)
        .collect();
    if bad.is_empty() {
        return Ok(PhaseReport {
            removed: Vec::new(),
            euler_edges_used: EdgeSet::new(),
            degrees_after: degrees_before.clone(),
            degrees_before,
        });
    }
    if bad.len() % 2 == 1 {
        return Err(Error::invariant("odd number of odd-degree A-vertices"));
    }

    let es = euler_over_unions(g, ma, mb, |d| d / 2)?;
    let e1 = es.subgraph.clone();
    let pool: EdgeSet = ma.union(mb).copied().filter(|e| !e1.contains(e)).collect();
    let trail = rotate_trail(g, &es, bad[0]);

    let pattern = Arc::new(PatternTree::y());
    let mut gone = EdgeSet::new();
    let mut skipped = EdgeSet::new();
    let mut removed = Vec::new();
    // parity accounting flips only at segment endpoints; interior arrivals
    // are parity-neutral (they lose four edges by the time the walk departs)
    let mut odd: Vec<bool> = (0..g.vertex_count())
        .map(|v| is_a(v) && degrees_before[v] % 2 == 1)
        .collect();

    let mut at = bad[0];
    let mut in_segment = true;
    odd[at] = false; // an edge at the segment opener is earmarked
    debug_assert_eq!(trail.len() % 2, 0);
    let mut i = 0;
    while i < trail.len() {
        let (e_out, e_in) = (trail[i], trail[i + 1]);
        let b = g.other_endpoint(e_out, at);
        let arrival = g.other_endpoint(e_in, b);
        debug_assert!(is_a(arrival) && !is_a(b));
        if in_segment {
            if arrival == at {
                // a digon of parallel edges: stepping over it is
                // parity-neutral (a removal here would take four edges at
                // `at` anyway), so the pair simply stays in `current`
                skipped.insert(e_out);
                skipped.insert(e_in);
                i += 2;
                continue;
            }
            let (x1e, x1) = draw_aux(g, &pool, &gone, arrival, &[at, b, arrival])?;
            gone.insert(x1e);
            let (x2e, x2) = draw_aux(g, &pool, &gone, arrival, &[at, b, arrival, x1])?;
            let copy = TreeCopy::y_copy(
                &pattern, arrival, b, x1, x2, at, e_in, x1e, x2e, e_out,
            );
            copy.check(g).map_err(Error::invariant)?;
            for &id in &copy.edge_map {
                gone.insert(id);
            }
            removed.push(copy);
            if odd[arrival] {
                odd[arrival] = false;
                in_segment = false;
            }
        } else if odd[arrival] {
            odd[arrival] = false;
            in_segment = true;
        }
        at = arrival;
        i += 2;
    }
    if in_segment {
        return Err(Error::invariant("parity walk finished with an open segment"));
    }

    let after_set: EdgeSet = current.difference(&gone).copied().collect();
    let degrees_after = degrees_in(g, &after_set);
    for v in 0..g.vertex_count() {
        if is_a(v) && degrees_after[v] % 2 != 0 {
            return Err(Error::invariant(format!("vertex {v} still has odd degree after phase 1")));
        }
    }
    let euler_edges_used: EdgeSet = e1.difference(&skipped).copied().collect();
    Ok(PhaseReport { removed, euler_edges_used, degrees_before, degrees_after })
}

/// Phase 2: make every A-degree divisible by 4, assuming all are even.
///
/// The Euler subgraph E2 is consumed entirely, two edges at a time. Each
/// step is a brick: a Y-copy at x (auxiliary edges at the next A-vertex) or
/// a reversed Y-copy at x (auxiliary edges at x). The choice is forced by
/// the mod-4 deficit at x; the start vertex settles its account only when
/// the trail closes, which global divisibility by 4 makes automatic.
pub fn fix_mod4(
    g: &MultiGraph,
    current: &EdgeSet,
    bip: &Bipartition,
    ma: &EdgeSet,
    mb: &EdgeSet,
) -> Result<PhaseReport> {
    check_phase_inputs(g, current, bip, ma, mb)?;
    let degrees_before = degrees_in(g, current);
    let is_a = |v: VertexId| bip.side_of[v] == Side::A;
    for v in 0..g.vertex_count() {
        if is_a(v) && degrees_before[v] % 2 == 1 {
            return Err(Error::InvalidArgument(format!(
                "phase 2 needs even A-degrees; vertex {v} has degree {}",
                degrees_before[v]
            )));
        }
    }

    let es = euler_over_unions(g, ma, mb, |d| (d / 2).saturating_sub(1))?;
    let e2 = es.subgraph.clone();
    let pool: EdgeSet = ma.union(mb).copied().filter(|e| !e2.contains(e)).collect();

    // need(v): how many removals mod 4 bring v to a multiple of 4
    let need: Vec<usize> = (0..g.vertex_count())
        .map(|v| if is_a(v) { degrees_before[v] % 4 } else { 0 })
        .collect();
    let b1 = (0..g.vertex_count())
        .filter(|&v| is_a(v) && g.degree_in(v, &e2) > 0)
        .find(|&v| need[v] == 2)
        .or_else(|| (0..g.vertex_count()).find(|&v| is_a(v) && g.degree_in(v, &e2) > 0))
        .ok_or_else(|| Error::invariant("no A-vertex on the Euler subgraph"))?;
    let trail = rotate_trail(g, &es, b1);

    let pattern = Arc::new(PatternTree::y());
    let mut gone = EdgeSet::new();
    let mut removed = Vec::new();
    // removals at each vertex; b1's opening edge is kept out of its counter
    // so that its first departure pairs with the final arrival, as on a
    // cyclic trail
    let mut cnt = vec![0usize; g.vertex_count()];
    let mut skipped = EdgeSet::new();

    let mut at = b1;
    let mut first = true;
    debug_assert_eq!(trail.len() % 2, 0);
    for i in (0..trail.len()).step_by(2) {
        let (e_out, e_in) = (trail[i], trail[i + 1]);
        let b = g.other_endpoint(e_out, at);
        let next = g.other_endpoint(e_in, b);
        debug_assert!(is_a(next) && !is_a(b));
        if next == at {
            // a digon of parallel edges: a full visit removes four edges at
            // the vertex, which is neutral mod 4, so stepping over the pair
            // keeps every deficit computation intact
            skipped.insert(e_out);
            skipped.insert(e_in);
            continue;
        }
        let reversed = if first {
            false // the first brick is a plain Y-copy at b1
        } else {
            match (need[at] + 4 - cnt[at] % 4) % 4 {
                1 => false,
                3 => true,
                d => {
                    return Err(Error::invariant(format!(
                        "mod-4 deficit at vertex {at} is {d}, expected 1 or 3"
                    )))
                }
            }
        };
        let copy = if reversed {
            // two auxiliary edges at the current vertex
            let (x1e, x1) = draw_aux(g, &pool, &gone, at, &[at, b, next])?;
            gone.insert(x1e);
            let (x2e, x2) = draw_aux(g, &pool, &gone, at, &[at, b, next, x1])?;
            cnt[at] += 3;
            cnt[next] += 1;
            TreeCopy::y_copy(&pattern, at, b, x1, x2, next, e_out, x1e, x2e, e_in)
        } else {
            // two auxiliary edges at the next vertex
            let (x1e, x1) = draw_aux(g, &pool, &gone, next, &[at, b, next])?;
            gone.insert(x1e);
            let (x2e, x2) = draw_aux(g, &pool, &gone, next, &[at, b, next, x1])?;
            cnt[at] += 1;
            cnt[next] += 3;
            TreeCopy::y_copy(&pattern, next, b, x1, x2, at, e_in, x1e, x2e, e_out)
        };
        copy.check(g).map_err(Error::invariant)?;
        for &id in &copy.edge_map {
            gone.insert(id);
        }
        removed.push(copy);
        if first {
            cnt[b1] -= 1; // the opening edge settles at closure
            first = false;
        }
        at = next;
    }

    let after_set: EdgeSet = current.difference(&gone).copied().collect();
    let degrees_after = degrees_in(g, &after_set);
    for v in 0..g.vertex_count() {
        if is_a(v) && degrees_after[v] % 4 != 0 {
            return Err(Error::invariant(format!(
                "vertex {v} has degree {} (not divisible by 4) after phase 2",
                degrees_after[v]
            )));
        }
    }
    // E2 is consumed entirely, digon step-overs aside
    debug_assert!(e2.iter().all(|e| gone.contains(e) || skipped.contains(e)));
    let euler_edges_used: EdgeSet = e2.difference(&skipped).copied().collect();
    Ok(PhaseReport { removed, euler_edges_used, degrees_before, degrees_after })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connectivity::pack_spanning_trees_in;
    use crate::graph::Bipartition;
    use crate::random::random_bipartite_regular;

    fn union(trees: &[EdgeSet]) -> EdgeSet {
        trees.iter().flatten().copied().collect()
    }

    fn bip_of(g: &MultiGraph, s: usize) -> Bipartition {
        let side_of = (0..g.vertex_count())
            .map(|v| if v < s { Side::A } else { Side::B })
            .collect();
        Bipartition::new(g, side_of)
    }

    /// d-regular bipartite host plus `extra` fresh crossing edges at chosen
    /// left vertices, with a 14-tree pack for the parity phase.
    fn host_with_extras(s: usize, d: usize, extra_at: &[usize], seed: u64) -> MultiGraph {
        let mut g = random_bipartite_regular(s, d, seed).unwrap();
        for &a in extra_at {
            let present: Vec<VertexId> =
                g.edges_at(a).iter().map(|&e| g.other_endpoint(e, a)).collect();
            let b = (s..2 * s).find(|w| !present.contains(w)).unwrap();
            g.add_edge(a, b);
        }
        g
    }

    #[test]
    fn parity_no_bad_vertices_is_a_no_op() {
        let g = random_bipartite_regular(30, 28, 2).unwrap();
        let current = g.alive_edge_set();
        let bip = bip_of(&g, 30);
        let pack = pack_spanning_trees_in(&g, &current, 14).unwrap();
        let rep = fix_parity(&g, &current, &bip, &union(&pack.trees[0..7]), &union(&pack.trees[7..14])).unwrap();
        assert!(rep.removed.is_empty());
    }

    #[test]
    fn parity_two_bad_vertices() {
        let g = host_with_extras(30, 28, &[0, 5], 7);
        let current = g.alive_edge_set();
        let bip = bip_of(&g, 30);
        let pack = pack_spanning_trees_in(&g, &current, 14).unwrap();
        let rep = fix_parity(&g, &current, &bip, &union(&pack.trees[0..7]), &union(&pack.trees[7..14])).unwrap();
        assert!(!rep.removed.is_empty());
        // removed edge counts: odd at the two bad vertices, even elsewhere
        let mut at = vec![0usize; g.vertex_count()];
        for c in &rep.removed {
            c.check(&g).unwrap();
            for &e in &c.edge_map {
                let (u, v) = g.endpoints(e);
                at[u] += 1;
                at[v] += 1;
            }
        }
        for v in 0..30 {
            let expect_odd = v == 0 || v == 5;
            assert_eq!(at[v] % 2 == 1, expect_odd, "vertex {v}");
            assert_eq!(rep.degrees_after[v] % 2, 0);
        }
        // copies are edge-disjoint and inside the working set
        let all = rep.removed_edges();
        assert_eq!(all.len(), rep.removed.len() * 4);
        assert!(all.is_subset(&current));
    }

    #[test]
    fn parity_all_bad() {
        // odd-regular host: every A-vertex is bad
        let g = random_bipartite_regular(30, 29, 3).unwrap();
        let current = g.alive_edge_set();
        let bip = bip_of(&g, 30);
        let pack = pack_spanning_trees_in(&g, &current, 14).unwrap();
        let rep = fix_parity(&g, &current, &bip, &union(&pack.trees[0..7]), &union(&pack.trees[7..14])).unwrap();
        for v in 0..30 {
            assert_eq!(rep.degrees_after[v] % 2, 0, "vertex {v}");
        }
    }

    #[test]
    fn mod4_all_good_still_consumes_e2_in_multiples_of_four() {
        // 36-regular: every A-degree is divisible by 4 already
        let g = random_bipartite_regular(40, 36, 11).unwrap();
        let current = g.alive_edge_set();
        let bip = bip_of(&g, 40);
        let pack = pack_spanning_trees_in(&g, &current, 18).unwrap();
        let rep = fix_mod4(&g, &current, &bip, &union(&pack.trees[0..9]), &union(&pack.trees[9..18])).unwrap();
        assert!(!rep.removed.is_empty());
        let mut at = vec![0usize; g.vertex_count()];
        for c in &rep.removed {
            for &e in &c.edge_map {
                let (u, v) = g.endpoints(e);
                at[u] += 1;
                at[v] += 1;
            }
        }
        for v in 0..40 {
            assert_eq!(at[v] % 4, 0, "vertex {v}");
            assert_eq!(rep.degrees_after[v] % 4, 0);
        }
        // E2 fully consumed
        assert!(rep.euler_edges_used.is_subset(&rep.removed_edges()));
    }

    #[test]
    fn mod4_all_bad() {
        // 38 ≡ 2 (mod 4): every A-vertex is bad; |E| = 38*20 ≡ 0 (mod 4)
        let g = random_bipartite_regular(40, 38, 13).unwrap();
        let current = g.alive_edge_set();
        let bip = bip_of(&g, 40);
        let pack = pack_spanning_trees_in(&g, &current, 18).unwrap();
        let rep = fix_mod4(&g, &current, &bip, &union(&pack.trees[0..9]), &union(&pack.trees[9..18])).unwrap();
        let mut at = vec![0usize; g.vertex_count()];
        for c in &rep.removed {
            for &e in &c.edge_map {
                let (u, v) = g.endpoints(e);
                at[u] += 1;
                at[v] += 1;
            }
        }
        for v in 0..40 {
            assert_eq!(at[v] % 4, 2, "vertex {v}");
            assert_eq!(rep.degrees_after[v] % 4, 0);
        }
    }

    #[test]
    fn mod4_two_bad_vertices_lose_two_or_six() {
        let g = host_with_extras(40, 36, &[1, 1, 4, 4], 17);
        assert_eq!(g.edge_count() % 4, 0);
        let current = g.alive_edge_set();
        let bip = bip_of(&g, 40);
        let pack = pack_spanning_trees_in(&g, &current, 18).unwrap();
        let rep = fix_mod4(&g, &current, &bip, &union(&pack.trees[0..9]), &union(&pack.trees[9..18])).unwrap();
        let mut at = vec![0usize; g.vertex_count()];
        for c in &rep.removed {
            for &e in &c.edge_map {
                let (u, v) = g.endpoints(e);
                at[u] += 1;
                at[v] += 1;
            }
        }
        for v in 0..40 {
            if v == 1 || v == 4 {
                assert_eq!(at[v] % 4, 2, "bad vertex {v}");
            } else {
                assert_eq!(at[v] % 4, 0, "good vertex {v}");
            }
            assert_eq!(rep.degrees_after[v] % 4, 0);
        }
    }

    #[test]
    fn mod4_rejects_odd_degrees() {
        let g = host_with_extras(40, 36, &[2], 19);
        let current = g.alive_edge_set();
        let bip = bip_of(&g, 40);
        let pack = pack_spanning_trees_in(&g, &current, 18).unwrap();
        assert!(matches!(
            fix_mod4(&g, &current, &bip, &union(&pack.trees[0..9]), &union(&pack.trees[9..18])),
            Err(Error::InvalidArgument(_))
        ));
    }
}
