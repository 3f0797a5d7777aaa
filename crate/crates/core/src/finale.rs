//! Final phase: put aside a quarter of the edges at each A-vertex, decompose
//! the remaining core into balanced 3-edge paths, and glue one reserved edge
//! onto each path middle to form the last Y-copies.
//!
//! The balanced path decomposition works through an even subgraph F with
//! deg_F(a) = 2·deg(a)/3 at every A-vertex: an Eulerian orientation of F
//! splits its edges into CONNECTOR (A to B) and END_AT_A (B to A) roles,
//! the other core edges end at B, and greedy pairing of roles at both sides
//! always yields vertex-distinct paths in a simple bipartite graph.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use rand::{seq::SliceRandom, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::connectivity::{bounded_tree_with_bounds, hierholzer_trail, min_cut_in};
use crate::error::{Error, Result};
use crate::graph::{Bipartition, EdgeId, EdgeSet, MultiGraph, PatternTree, Side, TreeCopy, VertexId};

/// One 3-edge path b1–a1–b2–a2 with its edges by position.
#[derive(Clone, Copy, Debug)]
pub struct BalancedPath {
    pub b1: VertexId,
    pub a1: VertexId,
    pub b2: VertexId,
    pub a2: VertexId,
    /// end edge b1–a1 (ends at B)
    pub e_end_b: EdgeId,
    /// connector a1–b2
    pub e_mid: EdgeId,
    /// end edge b2–a2 (ends at A)
    pub e_end_a: EdgeId,
}

#[derive(Clone, Debug, Default)]
pub struct BalancedPathSet {
    pub paths: Vec<BalancedPath>,
}

impl BalancedPathSet {
    /// Exact partition of `core`, genuine paths, per-A-vertex balance.
    pub fn check(
        &self,
        g: &MultiGraph,
        core: &EdgeSet,
        bip: &Bipartition,
    ) -> std::result::Result<(), String> {
        let mut seen = EdgeSet::new();
        let mut ends = vec![0usize; g.vertex_count()];
        let mut mids = vec![0usize; g.vertex_count()];
        for (i, p) in self.paths.iter().enumerate() {
            let vs = [p.b1, p.a1, p.b2, p.a2];
            let mut sorted = vs;
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(format!("path {i} repeats a vertex: {vs:?}"));
            }
            if bip.side_of[p.a1] != Side::A
                || bip.side_of[p.a2] != Side::A
                || bip.side_of[p.b1] != Side::B
                || bip.side_of[p.b2] != Side::B
            {
                return Err(format!("path {i} has vertices on wrong sides"));
            }
            for (e, (x, y)) in [
                (p.e_end_b, (p.b1, p.a1)),
                (p.e_mid, (p.a1, p.b2)),
                (p.e_end_a, (p.b2, p.a2)),
            ] {
                if !core.contains(&e) || !seen.insert(e) {
                    return Err(format!("path {i}: edge {e} outside core or reused"));
                }
                let ep = g.endpoints(e);
                if ep != (x, y) && ep != (y, x) {
                    return Err(format!("path {i}: edge {e} does not join {x} and {y}"));
                }
            }
            mids[p.a1] += 1;
            ends[p.a2] += 1;
        }
        if seen != *core {
            return Err("paths do not cover the core exactly".into());
        }
        for v in 0..g.vertex_count() {
            if bip.side_of[v] == Side::A {
                let d = g.degree_in(v, core);
                if ends[v] * 3 != d || mids[v] * 3 != d {
                    return Err(format!(
                        "vertex {v}: degree {d}, {} ends, {} middles",
                        ends[v], mids[v]
                    ));
                }
            }
        }
        Ok(())
    }
}

/// The put-aside edges, keyed by their A-endpoint, plus the remaining core.
#[derive(Clone, Debug)]
pub struct Reservation {
    pub reserved: BTreeMap<VertexId, EdgeSet>,
    pub core: EdgeSet,
}

/// Reserves deg(v)/4 edges at each A-vertex, keeping the two bounded trees
/// (and hence 2-edge-connectivity) inside the core. `ma`/`mb` are disjoint
/// unions of spanning trees within `current`; the bounded trees drawn from
/// them satisfy deg_t5(v) + deg_t6(v) ≤ 3·deg(v)/4.
pub fn reserve_quarter(
    g: &MultiGraph,
    current: &EdgeSet,
    bip: &Bipartition,
    ma: &EdgeSet,
    mb: &EdgeSet,
) -> Result<Reservation> {
    for v in 0..g.vertex_count() {
        if bip.side_of[v] == Side::A && g.degree_in(v, current) % 4 != 0 {
            return Err(Error::InvalidArgument(format!(
                "A-vertex {v} has degree {} (not divisible by 4)",
                g.degree_in(v, current)
            )));
        }
    }
    let tree_of = |m: &EdgeSet| -> Result<EdgeSet> {
        let bounds: Vec<usize> = (0..g.vertex_count())
            .map(|v| (3 * g.degree_in(v, m) / 4).max(1))
            .collect();
        bounded_tree_with_bounds(g, m, &bounds)
    };
    let t5 = tree_of(ma)?;
    let t6 = tree_of(mb)?;
    let mut protected = t5;
    protected.extend(t6.iter().copied());

    let mut reserved: BTreeMap<VertexId, EdgeSet> = BTreeMap::new();
    let mut core = current.clone();
    for v in 0..g.vertex_count() {
        if bip.side_of[v] != Side::A {
            continue;
        }
        let quota = g.degree_in(v, current) / 4;
        let mut take = EdgeSet::new();
        for &e in g.edges_at(v) {
            if take.len() == quota {
                break;
            }
            if current.contains(&e) && !protected.contains(&e) {
                take.insert(e);
            }
        }
        if take.len() < quota {
            return Err(Error::invariant(format!(
                "vertex {v}: only {} free edges for a quota of {quota}",
                take.len()
            )));
        }
        for &e in &take {
            core.remove(&e);
        }
        reserved.insert(v, take);
    }
    Ok(Reservation { reserved, core })
}

fn check_p4_preconditions(g: &MultiGraph, core: &EdgeSet, bip: &Bipartition) -> Result<()> {
    for &e in core {
        let (u, v) = g.endpoints(e);
        if bip.side_of[u] == bip.side_of[v] {
            return Err(Error::InvalidArgument("core is not bipartite".into()));
        }
    }
    for v in 0..g.vertex_count() {
        if bip.side_of[v] == Side::A {
            let d = g.degree_in(v, core);
            if d % 3 != 0 {
                return Err(Error::DivisibilityViolation { edges: d, divisor: 3 });
            }
        }
    }
    // 2-edge-connectivity over the vertices the core touches
    let touched: Vec<VertexId> =
        (0..g.vertex_count()).filter(|&v| g.degree_in(v, core) > 0).collect();
    if touched.len() >= 2 {
        let mut index = vec![usize::MAX; g.vertex_count()];
        for (i, &v) in touched.iter().enumerate() {
            index[v] = i;
        }
        let mut sub = MultiGraph::new(touched.len());
        let mut ids = Vec::new();
        for &e in core {
            let (u, v) = g.endpoints(e);
            sub.add_edge(index[u], index[v]);
            ids.push(e);
        }
        let (lambda, _) = min_cut_in(&sub, &sub.alive_edge_set());
        if lambda < 2 {
            return Err(Error::InvalidArgument(format!(
                "core is only {lambda}-edge-connected"
            )));
        }
    }
    Ok(())
}

/// The even subgraph F with deg_F(a) = 2·deg(a)/3 at every A-vertex and all
/// B-degrees even.
///
/// Starting from a subgraph with the exact A-degrees, odd B-vertices are
/// repaired in pairs: a walk between two odd vertices whose F-membership
/// alternates at every interior A-vertex may be flipped wholesale — the
/// alternation keeps every A-degree exact, interior B-visits change parity
/// twice, and only the two endpoints flip. B-visits are deliberately
/// unconstrained (both neighbouring walk edges may be additions); a plain
/// add/remove-alternating search misses repairs that this one finds.
fn parity_subgraph(
    g: &MultiGraph,
    core: &EdgeSet,
    bip: &Bipartition,
    salt: u64,
) -> Result<EdgeSet> {
    let is_a = |v: VertexId| bip.side_of[v] == Side::A;
    let initial = |attempt: u64| -> EdgeSet {
        let mut f = EdgeSet::new();
        for v in 0..g.vertex_count() {
            if !is_a(v) {
                continue;
            }
            let quota = 2 * g.degree_in(v, core) / 3;
            // round-robin across far endpoints: bunching parallel edges in F
            // risks digon components that no path assembly can use
            let mut groups: BTreeMap<VertexId, Vec<EdgeId>> = BTreeMap::new();
            for &e in g.edges_at(v) {
                if core.contains(&e) {
                    groups.entry(g.other_endpoint(e, v)).or_default().push(e);
                }
            }
            let mut columns: Vec<Vec<EdgeId>> = groups.into_values().collect();
            let mut rng = ChaCha8Rng::seed_from_u64(
                (salt.wrapping_mul(0x9e3779b97f4a7c15)) ^ attempt ^ ((v as u64) << 20),
            );
            if attempt > 0 || salt > 0 {
                columns.shuffle(&mut rng);
            }
            let mut local = Vec::new();
            if attempt < 8 {
                // round-robin across far endpoints: level 0, then level 1…
                let mut level = 0;
                while local.len() < quota {
                    let mut any = false;
                    for col in &columns {
                        if let Some(&e) = col.get(level) {
                            local.push(e);
                            any = true;
                        }
                    }
                    if !any {
                        break;
                    }
                    level += 1;
                }
            } else {
                // later attempts trade endpoint diversity for genuine
                // variety; the feasibility post-check cleans up digons
                local = columns.into_iter().flatten().collect();
                local.shuffle(&mut rng);
            }
            f.extend(local.into_iter().take(quota));
        }
        f
    };

    'attempt: for attempt in 0..16u64 {
        let mut f = initial(attempt);
        let mut swaps = 0usize;
        loop {
            let odds: Vec<VertexId> = (0..g.vertex_count())
                .filter(|&v| !is_a(v) && g.degree_in(v, &f) % 2 == 1)
                .collect();
            let Some(&source) = odds.first() else {
                // every B-degree is even; now no far endpoint may own more
                // than half of the F-edges at a B-vertex, or path assembly
                // cannot pair connectors with ends there (Hall). A violating
                // parallel edge is swapped for a fresh edge at the same
                // A-vertex, reopening two odd vertices for the walk repair.
                let mut swapped = false;
                'scan: for b in 0..g.vertex_count() {
                    if is_a(b) {
                        continue;
                    }
                    let mut groups: BTreeMap<VertexId, Vec<EdgeId>> = BTreeMap::new();
                    let mut n = 0usize;
                    for &e in g.edges_at(b) {
                        if f.contains(&e) {
                            groups.entry(g.other_endpoint(e, b)).or_default().push(e);
                            n += 1;
                        }
                    }
                    for (&a, group) in &groups {
                        if 2 * group.len() <= n {
                            continue;
                        }
                        let &e = group.last().unwrap();
                        let mut best: Option<(usize, EdgeId)> = None;
                        for &cand in g.edges_at(a) {
                            if !core.contains(&cand) || f.contains(&cand) {
                                continue;
                            }
                            let bp = g.other_endpoint(cand, a);
                            if bp == b {
                                continue;
                            }
                            let cnt = g
                                .edges_at(bp)
                                .iter()
                                .filter(|&&x| f.contains(&x) && g.other_endpoint(x, bp) == a)
                                .count();
                            if best.map_or(true, |(c, id)| (cnt, cand) < (c, id)) {
                                best = Some((cnt, cand));
                            }
                        }
                        let Some((_, cand)) = best else { continue 'attempt };
                        f.remove(&e);
                        f.insert(cand);
                        swapped = true;
                        break 'scan;
                    }
                }
                if swapped {
                    swaps += 1;
                    if swaps > 64 {
                        continue 'attempt;
                    }
                    continue;
                }
                return Ok(f);
            };
            // BFS over states (vertex, membership of the arriving edge);
            // each edge enters the search at most once, keeping any
            // reconstructed walk edge-simple
            let mut used = EdgeSet::new();
            let mut pred: BTreeMap<EdgeId, Option<EdgeId>> = BTreeMap::new();
            let mut visited = vec![[false; 2]; g.vertex_count()];
            let mut queue: VecDeque<(VertexId, bool, EdgeId)> = VecDeque::new();
            let mut found = None;
            for &e in g.edges_at(source) {
                if core.contains(&e) && used.insert(e) {
                    let m = f.contains(&e);
                    pred.insert(e, None);
                    queue.push_back((g.other_endpoint(e, source), m, e));
                }
            }
            'bfs: while let Some((v, m, via)) = queue.pop_front() {
                if visited[v][m as usize] {
                    continue;
                }
                visited[v][m as usize] = true;
                for &e in g.edges_at(v) {
                    if !core.contains(&e) || !used.insert(e) {
                        continue;
                    }
                    let em = f.contains(&e);
                    if is_a(v) && em == m {
                        used.remove(&e);
                        continue;
                    }
                    pred.insert(e, Some(via));
                    let w = g.other_endpoint(e, v);
                    if !is_a(w) && w != source && g.degree_in(w, &f) % 2 == 1 {
                        found = Some(e);
                        break 'bfs;
                    }
                    queue.push_back((w, em, e));
                }
            }
            let Some(mut at) = found else {
                continue 'attempt;
            };
            loop {
                let prev = pred[&at];
                if f.contains(&at) {
                    f.remove(&at);
                } else {
                    f.insert(at);
                }
                match prev {
                    Some(p) => at = p,
                    None => break,
                }
            }
        }
    }
    Err(Error::ParityRepairFailed(
        "no alternating repair walk between odd vertices in any attempt".into(),
    ))
}

/// Eulerian orientation of the even subgraph `f`: per component a closed
/// trail fixes the direction of every edge.
fn orient_even_subgraph(g: &MultiGraph, f: &EdgeSet) -> BTreeMap<EdgeId, (VertexId, VertexId)> {
    let mut orientation = BTreeMap::new();
    let mut remaining = f.clone();
    while let Some(&seed) = remaining.iter().next() {
        // component of `seed` within f
        let mut comp = EdgeSet::new();
        let mut verts = vec![g.endpoints(seed).0];
        let mut seen = vec![false; g.vertex_count()];
        seen[verts[0]] = true;
        while let Some(v) = verts.pop() {
            for &e in g.edges_at(v) {
                if remaining.contains(&e) {
                    comp.insert(e);
                    let w = g.other_endpoint(e, v);
                    if !seen[w] {
                        seen[w] = true;
                        verts.push(w);
                    }
                }
            }
        }
        let start = (0..g.vertex_count())
            .find(|&v| seen[v] && g.degree_in(v, &comp) > 0)
            .unwrap();
        let trail = hierholzer_trail(g, &comp, start);
        let mut at = start;
        for e in trail {
            let w = g.other_endpoint(e, at);
            orientation.insert(e, (at, w));
            at = w;
        }
        for e in comp {
            remaining.remove(&e);
        }
    }
    orientation
}


/// Zips two equal-length edge lists at the shared vertex `v` so that the two
/// edges of a pair never reach the same far endpoint (which would close a
/// digon of parallel edges instead of a path). Both lists are sorted by far
/// endpoint and the right one rotated against the left; some rotation is
/// collision-free whenever no far endpoint saturates the lists, which holds
/// as soon as the parallel-edge multiplicity stays below the list length.
fn pair_without_digons(
    g: &MultiGraph,
    v: VertexId,
    left: &[EdgeId],
    right: &[EdgeId],
) -> Result<Vec<(EdgeId, EdgeId)>> {
    let far = |e: EdgeId| g.other_endpoint(e, v);
    let n = left.len();
    let mut ls = left.to_vec();
    let mut rs = right.to_vec();
    ls.sort_by_key(|&e| (far(e), e));
    rs.sort_by_key(|&e| (far(e), e));
    for r in 0..n.max(1) {
        if (0..n).all(|i| far(ls[i]) != far(rs[(i + r) % n])) {
            return Ok((0..n).map(|i| (ls[i], rs[(i + r) % n])).collect());
        }
    }
    // rotations are a heuristic; fall back to an exact augmenting-path
    // matching, which fails only when the pairing is genuinely infeasible
    fn augment(
        i: usize,
        admissible: &dyn Fn(usize, usize) -> bool,
        owner: &mut Vec<Option<usize>>,
        seen: &mut Vec<bool>,
    ) -> bool {
        for j in 0..owner.len() {
            if seen[j] || !admissible(i, j) {
                continue;
            }
            seen[j] = true;
            let free = match owner[j] {
                None => true,
                Some(k) => augment(k, admissible, owner, seen),
            };
            if free {
                owner[j] = Some(i);
                return true;
            }
        }
        false
    }
    let admissible = |i: usize, j: usize| far(ls[i]) != far(rs[j]);
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let mut seen = vec![false; n];
        if !augment(i, &admissible, &mut owner, &mut seen) {
            return Err(Error::invariant(format!(
                "vertex {v}: every pairing closes a digon of parallel edges"
            )));
        }
    }
    let mut pairs = vec![(0, 0); n];
    for (j, o) in owner.iter().enumerate() {
        let i = o.expect("perfect matching covers the list");
        pairs[i] = (ls[i], rs[j]);
    }
    Ok(pairs)
}

fn assemble_paths(
    g: &MultiGraph,
    core: &EdgeSet,
    bip: &Bipartition,
    orientation: &BTreeMap<EdgeId, (VertexId, VertexId)>,
    shuffle_seed: Option<u64>,
) -> Result<BalancedPathSet> {
    let is_a = |v: VertexId| bip.side_of[v] == Side::A;
    // role lists per vertex
    let mut end_b_at: BTreeMap<VertexId, Vec<EdgeId>> = BTreeMap::new(); // at a1
    let mut connector_at_a: BTreeMap<VertexId, Vec<EdgeId>> = BTreeMap::new();
    let mut connector_at_b: BTreeMap<VertexId, Vec<EdgeId>> = BTreeMap::new();
    let mut end_a_at: BTreeMap<VertexId, Vec<EdgeId>> = BTreeMap::new(); // at b2
    for &e in core {
        let (u, v) = g.endpoints(e);
        let (a, b) = if is_a(u) { (u, v) } else { (v, u) };
        match orientation.get(&e) {
            None => end_b_at.entry(a).or_default().push(e),
            Some(&(from, _)) if from == a => {
                connector_at_a.entry(a).or_default().push(e);
                connector_at_b.entry(b).or_default().push(e);
            }
            Some(_) => end_a_at.entry(b).or_default().push(e),
        }
    }
    if let Some(seed) = shuffle_seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in end_b_at
            .values_mut()
            .chain(connector_at_a.values_mut())
            .chain(connector_at_b.values_mut())
            .chain(end_a_at.values_mut())
        {
            l.shuffle(&mut rng);
        }
    }

    // pair END_AT_B with CONNECTOR at each A-vertex
    let mut partner_end_b: BTreeMap<EdgeId, EdgeId> = BTreeMap::new();
    for (a, ends) in &end_b_at {
        let conns = connector_at_a.get(a).cloned().unwrap_or_default();
        if conns.len() != ends.len() {
            return Err(Error::invariant(format!(
                "vertex {a}: {} path starts but {} connectors",
                ends.len(),
                conns.len()
            )));
        }
        for (eb, c) in pair_without_digons(g, *a, ends, &conns)? {
            partner_end_b.insert(c, eb);
        }
    }
    // pair CONNECTOR with END_AT_A at each B-vertex
    let mut partner_end_a: BTreeMap<EdgeId, EdgeId> = BTreeMap::new();
    for (b, conns) in &connector_at_b {
        let ends = end_a_at.get(b).cloned().unwrap_or_default();
        if ends.len() != conns.len() {
            return Err(Error::invariant(format!(
                "vertex {b}: {} connectors but {} path ends",
                conns.len(),
                ends.len()
            )));
        }
        for (c, ea) in pair_without_digons(g, *b, conns, &ends)? {
            partner_end_a.insert(c, ea);
        }
    }

    let mut paths = Vec::new();
    for (&c, &(a1, b2)) in orientation {
        if !core.contains(&c) {
            continue;
        }
        if !is_a(a1) {
            continue; // END_AT_A edges are partners, not path seeds
        }
        let eb = *partner_end_b
            .get(&c)
            .ok_or_else(|| Error::invariant("connector without a start partner"))?;
        let ea = *partner_end_a
            .get(&c)
            .ok_or_else(|| Error::invariant("connector without an end partner"))?;
        let b1 = g.other_endpoint(eb, a1);
        let a2 = g.other_endpoint(ea, b2);
        if b1 == b2 || a1 == a2 {
            return Err(Error::invariant("degenerate path escaped digon repair"));
        }
        paths.push(BalancedPath { b1, a1, b2, a2, e_end_b: eb, e_mid: c, e_end_a: ea });
    }
    Ok(BalancedPathSet { paths })
}

/// Decomposes the core into 3-edge paths so that every A-vertex of degree 3d
/// is an endvertex of d paths and the middle of d paths.
pub fn balanced_p4_decomposition(
    g: &MultiGraph,
    core: &EdgeSet,
    bip: &Bipartition,
) -> Result<BalancedPathSet> {
    if core.is_empty() {
        return Ok(BalancedPathSet::default());
    }
    check_p4_preconditions(g, core, bip)?;
    // a fresh F fixes assembly failures (digon components of parallel
    // edges), so the whole construction retries under different salts
    let mut last = None;
    for salt in 0..8u64 {
        let f = parity_subgraph(g, core, bip, salt)?;
        let orientation = orient_even_subgraph(g, &f);
        match assemble_paths(g, core, bip, &orientation, None) {
            Ok(out) => {
                out.check(g, core, bip).map_err(Error::invariant)?;
                return Ok(out);
            }
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::invariant("path assembly failed")))
}

/// Exhaustive search over path packings, for cross-checks on cores with at
/// most 24 edges. Returns None when no balanced decomposition exists.
pub fn balanced_p4_exhaustive(
    g: &MultiGraph,
    core: &EdgeSet,
    bip: &Bipartition,
) -> Option<BalancedPathSet> {
    assert!(core.len() <= 24, "exhaustive fallback is limited to 24 edges");
    if core.len() % 3 != 0 {
        return None;
    }
    let is_a = |v: VertexId| bip.side_of[v] == Side::A;
    let mut ends = vec![0i64; g.vertex_count()];
    let mut mids = vec![0i64; g.vertex_count()];
    for v in 0..g.vertex_count() {
        if is_a(v) {
            let d = g.degree_in(v, core);
            if d % 3 != 0 {
                return None;
            }
            ends[v] = (d / 3) as i64;
            mids[v] = (d / 3) as i64;
        }
    }

    fn go(
        g: &MultiGraph,
        bip: &Bipartition,
        remaining: &mut EdgeSet,
        ends: &mut Vec<i64>,
        mids: &mut Vec<i64>,
        acc: &mut Vec<BalancedPath>,
    ) -> bool {
        let Some(&e) = remaining.iter().next() else {
            return true;
        };
        let (x, y) = g.endpoints(e);
        let (a, b) = if bip.side_of[x] == Side::A { (x, y) } else { (y, x) };
        // e can serve as e_end_b (b=b1,a=a1), e_mid (a=a1,b=b2) or e_end_a
        // (b=b2,a=a2); enumerate completions for each role
        let edges_at = |v: VertexId, rem: &EdgeSet| -> Vec<EdgeId> {
            g.edges_at(v).iter().copied().filter(|i| rem.contains(i)).collect()
        };
        let mut candidates: Vec<BalancedPath> = Vec::new();
        // role END_AT_B: b1=b, a1=a; choose mid a-b2, then end b2-a2
        for m in edges_at(a, remaining) {
            if m == e {
                continue;
            }
            let b2 = g.other_endpoint(m, a);
            if b2 == b {
                continue;
            }
            for ea in edges_at(b2, remaining) {
                if ea == m {
                    continue;
                }
                let a2 = g.other_endpoint(ea, b2);
                if a2 == a {
                    continue;
                }
                candidates.push(BalancedPath { b1: b, a1: a, b2, a2, e_end_b: e, e_mid: m, e_end_a: ea });
            }
        }
        // role CONNECTOR: a1=a, b2=b; choose start b1-a, end b-a2
        for eb in edges_at(a, remaining) {
            if eb == e {
                continue;
            }
            let b1 = g.other_endpoint(eb, a);
            if b1 == b {
                continue;
            }
            for ea in edges_at(b, remaining) {
                if ea == e {
                    continue;
                }
                let a2 = g.other_endpoint(ea, b);
                if a2 == a {
                    continue;
                }
                candidates.push(BalancedPath { b1, a1: a, b2: b, a2, e_end_b: eb, e_mid: e, e_end_a: ea });
            }
        }
        // role END_AT_A: b2=b, a2=a; choose mid a1-b, then start b1-a1
        for m in edges_at(b, remaining) {
            if m == e {
                continue;
            }
            let a1 = g.other_endpoint(m, b);
            if a1 == a {
                continue;
            }
            for eb in edges_at(a1, remaining) {
                if eb == m {
                    continue;
                }
                let b1 = g.other_endpoint(eb, a1);
                if b1 == b {
                    continue;
                }
                candidates.push(BalancedPath { b1, a1, b2: b, a2: a, e_end_b: eb, e_mid: m, e_end_a: e });
            }
        }
        for p in candidates {
            if mids[p.a1] == 0 || ends[p.a2] == 0 {
                continue;
            }
            for id in [p.e_end_b, p.e_mid, p.e_end_a] {
                remaining.remove(&id);
            }
            mids[p.a1] -= 1;
            ends[p.a2] -= 1;
            acc.push(p);
            if go(g, bip, remaining, ends, mids, acc) {
                return true;
            }
            acc.pop();
            mids[p.a1] += 1;
            ends[p.a2] += 1;
            for id in [p.e_end_b, p.e_mid, p.e_end_a] {
                remaining.insert(id);
            }
        }
        false
    }

    let mut remaining = core.clone();
    let mut acc = Vec::new();
    if go(g, bip, &mut remaining, &mut ends, &mut mids, &mut acc) {
        let out = BalancedPathSet { paths: acc };
        debug_assert!(out.check(g, core, bip).is_ok());
        Some(out)
    } else {
        None
    }
}

/// Glues one reserved edge onto the A-middle of each path, producing the
/// final Y-copies.
pub fn glue(
    g: &MultiGraph,
    paths: &BalancedPathSet,
    reserved: &BTreeMap<VertexId, EdgeSet>,
) -> Result<Vec<TreeCopy>> {
    // per middle vertex: match its paths to its reserved edges so that no
    // reserved edge lands on a vertex the path already uses (possible with
    // parallel edges); small augmenting-path matching, exact on each pool
    let mut by_mid: BTreeMap<VertexId, Vec<usize>> = BTreeMap::new();
    for (i, p) in paths.paths.iter().enumerate() {
        by_mid.entry(p.a1).or_default().push(i);
    }
    let mut assigned: BTreeMap<usize, EdgeId> = BTreeMap::new();
    for (&a, members) in &by_mid {
        let pool: Vec<EdgeId> = reserved.get(&a).map(|s| s.iter().copied().collect()).unwrap_or_default();
        if pool.len() != members.len() {
            return Err(Error::invariant(format!(
                "{} reserved edges for middle vertex {a} but {} paths",
                pool.len(),
                members.len()
            )));
        }
        let admissible = |i: usize, e: EdgeId| {
            let p = &paths.paths[members[i]];
            let leaf = g.other_endpoint(e, a);
            leaf != p.b1 && leaf != p.b2
        };
        let mut owner: Vec<Option<usize>> = vec![None; pool.len()];
        fn augment(
            i: usize,
            pool: &[EdgeId],
            admissible: &dyn Fn(usize, EdgeId) -> bool,
            owner: &mut Vec<Option<usize>>,
            seen: &mut Vec<bool>,
        ) -> bool {
            for j in 0..pool.len() {
                if seen[j] || !admissible(i, pool[j]) {
                    continue;
                }
                seen[j] = true;
                let free = match owner[j] {
                    None => true,
                    Some(k) => augment(k, pool, admissible, owner, seen),
                };
                if free {
                    owner[j] = Some(i);
                    return true;
                }
            }
            false
        }
        for i in 0..members.len() {
            let mut seen = vec![false; pool.len()];
            if !augment(i, &pool, &admissible, &mut owner, &mut seen) {
                return Err(Error::invariant(format!(
                    "no collision-free reserved edge for a path at vertex {a}"
                )));
            }
        }
        for (j, o) in owner.iter().enumerate() {
            let i = o.expect("exact matching covers the pool");
            assigned.insert(members[i], pool[j]);
        }
    }

    let pattern = Arc::new(PatternTree::y());
    let mut copies = Vec::new();
    for (i, p) in paths.paths.iter().enumerate() {
        let r = *assigned
            .get(&i)
            .ok_or_else(|| Error::invariant(format!("no reserved edge left for middle vertex {}", p.a1)))?;
        let leaf = g.other_endpoint(r, p.a1);
        let copy = TreeCopy::y_copy(
            &pattern, p.a1, p.b2, p.b1, leaf, p.a2, p.e_mid, p.e_end_b, r, p.e_end_a,
        );
        copy.check(g).map_err(Error::invariant)?;
        copies.push(copy);
    }
    let used: usize = by_mid.values().map(|m| m.len()).sum();
    let total: usize = reserved.values().map(|s| s.len()).sum();
    if used != total {
        return Err(Error::invariant("reserved edges left over after gluing"));
    }
    Ok(copies)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connectivity::pack_spanning_trees_in;
    use crate::random::random_bipartite_regular;

    fn bip_of(g: &MultiGraph, s: usize) -> Bipartition {
        let side_of = (0..g.vertex_count())
            .map(|v| if v < s { Side::A } else { Side::B })
            .collect();
        Bipartition::new(g, side_of)
    }

    fn k33() -> (MultiGraph, Bipartition) {
        let mut g = MultiGraph::new(6);
        for a in 0..3 {
            for b in 3..6 {
                g.add_edge(a, b);
            }
        }
        let bip = bip_of(&g, 3);
        (g, bip)
    }

    #[test]
    fn empty_core_gives_empty_path_set() {
        let (g, bip) = k33();
        let out = balanced_p4_decomposition(&g, &EdgeSet::new(), &bip).unwrap();
        assert!(out.paths.is_empty());
    }

    #[test]
    fn k33_balances() {
        let (g, bip) = k33();
        let core = g.alive_edge_set();
        let out = balanced_p4_decomposition(&g, &core, &bip).unwrap();
        assert_eq!(out.paths.len(), 3);
        out.check(&g, &core, &bip).unwrap();
        // the exhaustive fallback agrees that a decomposition exists
        assert!(balanced_p4_exhaustive(&g, &core, &bip).is_some());
    }

    #[test]
    fn c6_rejected_for_divisibility() {
        let mut g = MultiGraph::new(6);
        // 6-cycle alternating sides {0,1,2} and {3,4,5}
        for (u, v) in [(0, 3), (3, 1), (1, 4), (4, 2), (2, 5), (5, 0)] {
            g.add_edge(u, v);
        }
        let bip = bip_of(&g, 3);
        assert!(matches!(
            balanced_p4_decomposition(&g, &g.alive_edge_set(), &bip),
            Err(Error::DivisibilityViolation { edges: 2, divisor: 3 })
        ));
    }

    #[test]
    fn random_bipartite_cores_balance() {
        for (s, d, seed) in [(8, 3, 1u64), (10, 6, 2), (12, 9, 3)] {
            let g = random_bipartite_regular(s, d, seed).unwrap();
            let bip = bip_of(&g, s);
            let core = g.alive_edge_set();
            let out = balanced_p4_decomposition(&g, &core, &bip).unwrap();
            out.check(&g, &core, &bip).unwrap();
        }
    }

    #[test]
    fn shuffled_role_pairings_still_give_paths() {
        let g = random_bipartite_regular(9, 6, 8).unwrap();
        let bip = bip_of(&g, 9);
        let core = g.alive_edge_set();
        let f = parity_subgraph(&g, &core, &bip, 0).unwrap();
        let orientation = orient_even_subgraph(&g, &f);
        for seed in 0..5 {
            let out = assemble_paths(&g, &core, &bip, &orientation, Some(seed)).unwrap();
            out.check(&g, &core, &bip).unwrap();
        }
    }

    #[test]
    fn reserve_quarter_counts() {
        // 40-regular bipartite host; trees from a 10-pack
        let g = random_bipartite_regular(42, 40, 21).unwrap();
        let current = g.alive_edge_set();
        let bip = bip_of(&g, 42);
        let pack = pack_spanning_trees_in(&g, &current, 10).unwrap();
        let ma: EdgeSet = pack.trees[0..5].iter().flatten().copied().collect();
        let mb: EdgeSet = pack.trees[5..10].iter().flatten().copied().collect();
        let res = reserve_quarter(&g, &current, &bip, &ma, &mb).unwrap();
        for v in 0..42 {
            assert_eq!(res.reserved[&v].len(), 10);
            assert_eq!(g.degree_in(v, &res.core), 30);
        }
        assert_eq!(res.core.len() + 42 * 10, current.len());
    }

    #[test]
    fn reserve_then_balance_then_glue_round_trip() {
        let g = random_bipartite_regular(42, 40, 23).unwrap();
        let current = g.alive_edge_set();
        let bip = bip_of(&g, 42);
        let pack = pack_spanning_trees_in(&g, &current, 10).unwrap();
        let ma: EdgeSet = pack.trees[0..5].iter().flatten().copied().collect();
        let mb: EdgeSet = pack.trees[5..10].iter().flatten().copied().collect();
        let res = reserve_quarter(&g, &current, &bip, &ma, &mb).unwrap();
        let paths = balanced_p4_decomposition(&g, &res.core, &bip).unwrap();
        let copies = glue(&g, &paths, &res.reserved).unwrap();
        assert_eq!(copies.len(), current.len() / 4);
        let mut covered = EdgeSet::new();
        for c in &copies {
            for &e in &c.edge_map {
                assert!(covered.insert(e));
            }
        }
        assert_eq!(covered, current);
    }

    #[test]
    fn glue_count_mismatch_is_detected() {
        let (g, bip) = k33();
        let core = g.alive_edge_set();
        let paths = balanced_p4_decomposition(&g, &core, &bip).unwrap();
        let reserved = BTreeMap::new();
        assert!(glue(&g, &paths, &reserved).is_err());
        let _ = bip;
    }
}
