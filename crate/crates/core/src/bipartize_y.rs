//! Removing Y-copies from inside both colour classes of a max-cut
//! bipartition until only crossing edges survive, while a pack of spanning
//! trees of the crossing graph remains untouched.
//!
//! Structure: strip whole Y-copies greedily; what survives inside one side
//! is Y-free and falls apart into paths, cycles, stars and subgraphs of K4.
//! Those pieces are cut into fragments of ≤ 3 edges, each of which becomes
//! a Y after adding one to three crossing edges drawn from three sacrificial
//! spanning trees of the crossing graph.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::connectivity::{max_cut_bipartition, pack_spanning_trees_in, TreePack};
use crate::error::{Error, Result};
use crate::graph::{
    Bipartition, EdgeId, EdgeSet, MultiGraph, PatternTree, Side, TreeCopy, VertexId,
};

/// Shape of a fragment produced by cutting a Y-free component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PieceKind {
    /// 3 edges in a path; one middle vertex designated as the 3-vertex.
    ThreePath,
    /// 2 edges in a path; one endvertex designated as the 3-vertex.
    TwoPath,
    /// 1 edge; one end designated 3-vertex, the other 2-vertex.
    SingleEdge,
    /// 3 edges at a common centre; one leaf designated as the 2-vertex.
    ThreeStar,
}

/// A fragment of the Y-free leftover, ready for extension by crossing edges.
#[derive(Clone, Debug)]
pub struct LeftoverPiece {
    pub kind: PieceKind,
    /// Path order for paths; centre first for stars; the edge for SingleEdge.
    pub vertices: Vec<VertexId>,
    /// Aligned with `vertices`: consecutive path edges, or star edges.
    pub edge_ids: Vec<EdgeId>,
    pub three_vertex: Option<VertexId>,
    pub two_vertex: Option<VertexId>,
}

impl LeftoverPiece {
    fn check_shape(&self, g: &MultiGraph) {
        let ok = match self.kind {
            PieceKind::ThreePath => self.vertices.len() == 4 && self.edge_ids.len() == 3,
            PieceKind::TwoPath => self.vertices.len() == 3 && self.edge_ids.len() == 2,
            PieceKind::SingleEdge => self.vertices.len() == 2 && self.edge_ids.len() == 1,
            PieceKind::ThreeStar => self.vertices.len() == 4 && self.edge_ids.len() == 3,
        };
        debug_assert!(ok, "piece shape mismatch: {self:?}");
        match self.kind {
            PieceKind::ThreeStar => {
                for (i, &e) in self.edge_ids.iter().enumerate() {
                    let (u, v) = g.endpoints(e);
                    let (c, l) = (self.vertices[0], self.vertices[i + 1]);
                    debug_assert!((u, v) == (c, l) || (u, v) == (l, c));
                }
            }
            _ => {
                for (i, &e) in self.edge_ids.iter().enumerate() {
                    let (u, v) = g.endpoints(e);
                    let (a, b) = (self.vertices[i], self.vertices[i + 1]);
                    debug_assert!((u, v) == (a, b) || (u, v) == (b, a));
                }
            }
        }
    }
}

/// Greedy maximal removal of Y-copies from the subgraph spanned by
/// `inside`. Scans edges in id order, trying the lower endpoint as the
/// 3-vertex first; restarts after every removal.
pub fn strip_y_copies_inside(
    g: &MultiGraph,
    pattern: &Arc<PatternTree>,
    inside: &EdgeSet,
) -> (Vec<TreeCopy>, EdgeSet) {
    let mut remaining = inside.clone();
    let mut removed = Vec::new();
    'restart: loop {
        let at = |v: VertexId, rem: &EdgeSet| -> Vec<EdgeId> {
            g.edges_at(v).iter().copied().filter(|e| rem.contains(e)).collect()
        };
        for &e in remaining.clone().iter() {
            let (lo, hi) = g.endpoints(e);
            for center in [lo.min(hi), lo.max(hi)] {
                let center_edges = at(center, &remaining);
                if center_edges.len() < 3 {
                    continue;
                }
                // candidate 2-vertex: any neighbour of the centre with a
                // further edge to a fifth vertex
                for &em in &center_edges {
                    let mid = g.other_endpoint(em, center);
                    let mut leaves = Vec::new();
                    for &el in &center_edges {
                        if el == em {
                            continue;
                        }
                        let l = g.other_endpoint(el, center);
                        if l != mid && leaves.iter().all(|&(_, lv)| lv != l) {
                            leaves.push((el, l));
                            if leaves.len() == 2 {
                                break;
                            }
                        }
                    }
                    if leaves.len() < 2 {
                        continue;
                    }
                    let [(ela, la), (elb, lb)] = [leaves[0], leaves[1]];
                    for &ep in at(mid, &remaining).iter() {
                        if ep == em {
                            continue;
                        }
                        let p = g.other_endpoint(ep, mid);
                        if p == center || p == la || p == lb {
                            continue;
                        }
                        let copy =
                            TreeCopy::y_copy(pattern, center, mid, la, lb, p, em, ela, elb, ep);
                        debug_assert!(copy.check(g).is_ok());
                        for id in [em, ela, elb, ep] {
                            remaining.remove(&id);
                        }
                        removed.push(copy);
                        continue 'restart;
                    }
                }
            }
        }
        break;
    }
    (removed, remaining)
}

/// True when the subgraph spanned by `edges` contains no Y. Exhaustive scan,
/// coded independently of the stripper.
pub fn contains_y(g: &MultiGraph, edges: &EdgeSet) -> bool {
    let mut nbrs: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    for &e in edges {
        let (u, v) = g.endpoints(e);
        nbrs.entry(u).or_default().push(v);
        nbrs.entry(v).or_default().push(u);
    }
    for (&a, na) in &nbrs {
        if na.len() < 3 {
            continue;
        }
        for &b in na {
            let nb = &nbrs[&b];
            for &w in nb {
                if w == a {
                    continue;
                }
                let others: Vec<VertexId> = na
                    .iter()
                    .copied()
                    .filter(|&x| x != b && x != w)
                    .collect();
                let mut distinct = others.clone();
                distinct.sort_unstable();
                distinct.dedup();
                if distinct.len() >= 2 {
                    return true;
                }
            }
        }
    }
    false
}

fn cut_open_path(vs: &[VertexId], es: &[EdgeId]) -> Vec<LeftoverPiece> {
    // walk from the front; 3-paths designate their first middle vertex;
    // a 2-edge remainder designates its last endvertex; a 1-edge remainder
    // designates its lower endpoint as 3-vertex and the other as 2-vertex
    let mut pieces = Vec::new();
    let mut i = 0;
    while es.len() - i >= 3 {
        pieces.push(LeftoverPiece {
            kind: PieceKind::ThreePath,
            vertices: vs[i..i + 4].to_vec(),
            edge_ids: es[i..i + 3].to_vec(),
            three_vertex: Some(vs[i + 1]),
            two_vertex: None,
        });
        i += 3;
    }
    match es.len() - i {
        0 => {}
        1 => {
            let (a, b) = (vs[i], vs[i + 1]);
            let (tv, wv) = (a.min(b), a.max(b));
            pieces.push(LeftoverPiece {
                kind: PieceKind::SingleEdge,
                vertices: vec![tv, wv],
                edge_ids: vec![es[i]],
                three_vertex: Some(tv),
                two_vertex: Some(wv),
            });
        }
        2 => {
            pieces.push(LeftoverPiece {
                kind: PieceKind::TwoPath,
                vertices: vs[i..i + 3].to_vec(),
                edge_ids: es[i..i + 2].to_vec(),
                three_vertex: Some(vs[i + 2]),
                two_vertex: None,
            });
        }
        _ => unreachable!(),
    }
    pieces
}

fn triangle_pieces(vs: [VertexId; 3], e_ab: EdgeId, e_ac: EdgeId, e_bc: EdgeId) -> Vec<LeftoverPiece> {
    // vertices sorted a < b < c; the single edge bc designates both of its
    // ends, and the 2-path b–a–c re-designates c: the one permitted sharing
    let [a, b, c] = vs;
    vec![
        LeftoverPiece {
            kind: PieceKind::SingleEdge,
            vertices: vec![b, c],
            edge_ids: vec![e_bc],
            three_vertex: Some(b),
            two_vertex: Some(c),
        },
        LeftoverPiece {
            kind: PieceKind::TwoPath,
            vertices: vec![b, a, c],
            edge_ids: vec![e_ab, e_ac],
            three_vertex: Some(c),
            two_vertex: None,
        },
    ]
}

/// Cuts a Y-free edge set into extension-ready pieces. Components that are
/// not paths, cycles, stars or K4-subgraphs are a hard error: the proof
/// asserts they cannot occur, so seeing one means a bug upstream.
pub fn classify_leftover(g: &MultiGraph, leftover: &EdgeSet) -> Result<Vec<LeftoverPiece>> {
    // components
    let mut nbrs: BTreeMap<VertexId, Vec<(VertexId, EdgeId)>> = BTreeMap::new();
    for &e in leftover {
        let (u, v) = g.endpoints(e);
        if u == v {
            return Err(Error::invariant("loop edge in leftover"));
        }
        nbrs.entry(u).or_default().push((v, e));
        nbrs.entry(v).or_default().push((u, e));
    }
    for l in nbrs.values_mut() {
        l.sort_unstable_by_key(|&(_, e)| e);
    }
    let mut comp_of: BTreeMap<VertexId, usize> = BTreeMap::new();
    let mut comps: Vec<Vec<VertexId>> = Vec::new();
    for &v in nbrs.keys() {
        if comp_of.contains_key(&v) {
            continue;
        }
        let id = comps.len();
        let mut stack = vec![v];
        let mut members = Vec::new();
        comp_of.insert(v, id);
        while let Some(x) = stack.pop() {
            members.push(x);
            for &(y, _) in &nbrs[&x] {
                if !comp_of.contains_key(&y) {
                    comp_of.insert(y, id);
                    stack.push(y);
                }
            }
        }
        members.sort_unstable();
        comps.push(members);
    }

    let mut pieces = Vec::new();
    for members in comps {
        let deg = |v: VertexId| nbrs[&v].len();
        let edge_count: usize = members.iter().map(|&v| deg(v)).sum::<usize>() / 2;
        // simplicity within the component: the cutting table needs it
        {
            let mut pairs: Vec<(VertexId, VertexId)> = Vec::new();
            for &v in &members {
                for &(w, _) in &nbrs[&v] {
                    if v < w {
                        pairs.push((v, w));
                    }
                }
            }
            pairs.sort_unstable();
            let before = pairs.len();
            pairs.dedup();
            if pairs.len() != before {
                return Err(Error::invariant("parallel edges in a Y-free leftover component"));
            }
        }

        let maxdeg = members.iter().map(|&v| deg(v)).max().unwrap();
        if maxdeg <= 2 {
            let ends: Vec<VertexId> = members.iter().copied().filter(|&v| deg(v) == 1).collect();
            if ends.len() == 2 {
                // open path: walk from the lowest-index endpoint
                let start = ends[0].min(ends[1]);
                let (vs, es) = walk_path(&nbrs, start, None);
                debug_assert_eq!(es.len(), edge_count);
                pieces.extend(cut_open_path(&vs, &es));
            } else if ends.is_empty() {
                if members.len() == 3 {
                    let [a, b, c] = [members[0], members[1], members[2]];
                    let eid = |x: VertexId, y: VertexId| {
                        nbrs[&x].iter().find(|&&(w, _)| w == y).unwrap().1
                    };
                    pieces.extend(triangle_pieces([a, b, c], eid(a, b), eid(a, c), eid(b, c)));
                } else {
                    // cycle of length >= 4: open it at the lowest vertex
                    // towards its lower-indexed neighbour
                    let start = members[0];
                    let first = nbrs[&start].iter().map(|&(w, _)| w).min().unwrap();
                    let (vs, es) = walk_path(&nbrs, start, Some(first));
                    debug_assert_eq!(es.len(), edge_count);
                    debug_assert_eq!(vs[0], *vs.last().unwrap());
                    pieces.extend(cut_cycle(&vs, &es));
                }
            } else {
                return Err(Error::invariant("degree-≤2 component that is neither path nor cycle"));
            }
            continue;
        }

        // star: one centre carrying every edge, all other vertices leaves
        let centers: Vec<VertexId> =
            members.iter().copied().filter(|&v| deg(v) == edge_count).collect();
        if edge_count >= 3 && centers.len() == 1 && members.len() == edge_count + 1 {
            let s = centers[0];
            let leaves: Vec<(VertexId, EdgeId)> =
                nbrs[&s].iter().copied().collect();
            let mut i = 0;
            while leaves.len() - i >= 3 {
                let trio = &leaves[i..i + 3];
                let mut lvs: Vec<VertexId> = trio.iter().map(|&(w, _)| w).collect();
                lvs.sort_unstable();
                pieces.push(LeftoverPiece {
                    kind: PieceKind::ThreeStar,
                    vertices: vec![s, trio[0].0, trio[1].0, trio[2].0],
                    edge_ids: trio.iter().map(|&(_, e)| e).collect(),
                    three_vertex: None,
                    two_vertex: Some(lvs[0]),
                });
                i += 3;
            }
            match leaves.len() - i {
                0 => {}
                1 => {
                    let (l, e) = leaves[i];
                    let (tv, wv) = (s.min(l), s.max(l));
                    pieces.push(LeftoverPiece {
                        kind: PieceKind::SingleEdge,
                        vertices: vec![tv, wv],
                        edge_ids: vec![e],
                        three_vertex: Some(tv),
                        two_vertex: Some(wv),
                    });
                }
                2 => {
                    let (l1, e1) = leaves[i];
                    let (l2, e2) = leaves[i + 1];
                    pieces.push(LeftoverPiece {
                        kind: PieceKind::TwoPath,
                        vertices: vec![l1, s, l2],
                        edge_ids: vec![e1, e2],
                        three_vertex: Some(l2),
                        two_vertex: None,
                    });
                }
                _ => unreachable!(),
            }
            continue;
        }

        // remaining Y-free shapes live on at most 4 vertices: paw, diamond, K4
        if members.len() == 4 {
            let eid = |x: VertexId, y: VertexId| {
                nbrs[&x].iter().find(|&&(w, _)| w == y).map(|&(_, e)| e)
            };
            let mut degs: Vec<(usize, VertexId)> =
                members.iter().map(|&v| (deg(v), v)).collect();
            degs.sort_unstable();
            let shape: Vec<usize> = degs.iter().map(|&(d, _)| d).collect();
            match (edge_count, shape.as_slice()) {
                (4, [1, 2, 2, 3]) => {
                    // paw: pendant w at x; triangle x, y, z with y < z
                    let w = degs[0].1;
                    let x = degs[3].1;
                    let (y, z) = (degs[1].1.min(degs[2].1), degs[1].1.max(degs[2].1));
                    pieces.push(LeftoverPiece {
                        kind: PieceKind::ThreePath,
                        vertices: vec![w, x, y, z],
                        edge_ids: vec![
                            eid(w, x).unwrap(),
                            eid(x, y).unwrap(),
                            eid(y, z).unwrap(),
                        ],
                        three_vertex: Some(y),
                        two_vertex: None,
                    });
                    let (tv, wv) = (x.min(z), x.max(z));
                    pieces.push(LeftoverPiece {
                        kind: PieceKind::SingleEdge,
                        vertices: vec![tv, wv],
                        edge_ids: vec![eid(x, z).unwrap()],
                        three_vertex: Some(tv),
                        two_vertex: Some(wv),
                    });
                }
                (5, [2, 2, 3, 3]) => {
                    // diamond: 3-path s-p-r-q designating r, 2-path p-q-s
                    // designating s
                    let (r, s) = (degs[0].1.min(degs[1].1), degs[0].1.max(degs[1].1));
                    let (p, q) = (degs[2].1.min(degs[3].1), degs[2].1.max(degs[3].1));
                    pieces.push(LeftoverPiece {
                        kind: PieceKind::ThreePath,
                        vertices: vec![s, p, r, q],
                        edge_ids: vec![
                            eid(s, p).unwrap(),
                            eid(p, r).unwrap(),
                            eid(r, q).unwrap(),
                        ],
                        three_vertex: Some(r),
                        two_vertex: None,
                    });
                    pieces.push(LeftoverPiece {
                        kind: PieceKind::TwoPath,
                        vertices: vec![p, q, s],
                        edge_ids: vec![eid(p, q).unwrap(), eid(q, s).unwrap()],
                        three_vertex: Some(s),
                        two_vertex: None,
                    });
                }
                (6, [3, 3, 3, 3]) => {
                    // K4 on a < b < c < d: 3-paths a-b-c-d (designating b)
                    // and b-d-a-c (designating d)
                    let [a, b, c, d] = [members[0], members[1], members[2], members[3]];
                    pieces.push(LeftoverPiece {
                        kind: PieceKind::ThreePath,
                        vertices: vec![a, b, c, d],
                        edge_ids: vec![
                            eid(a, b).unwrap(),
                            eid(b, c).unwrap(),
                            eid(c, d).unwrap(),
                        ],
                        three_vertex: Some(b),
                        two_vertex: None,
                    });
                    pieces.push(LeftoverPiece {
                        kind: PieceKind::ThreePath,
                        vertices: vec![b, d, a, c],
                        edge_ids: vec![
                            eid(b, d).unwrap(),
                            eid(d, a).unwrap(),
                            eid(a, c).unwrap(),
                        ],
                        three_vertex: Some(d),
                        two_vertex: None,
                    });
                }
                _ => {
                    return Err(Error::invariant(format!(
                        "unclassifiable Y-free component: degrees {shape:?}, {edge_count} edges"
                    )))
                }
            }
            continue;
        }

        return Err(Error::invariant(format!(
            "unclassifiable Y-free component on {} vertices with {edge_count} edges",
            members.len()
        )));
    }

    // designation discipline: once per vertex, except the triangle's share
    {
        let mut counts: BTreeMap<VertexId, usize> = BTreeMap::new();
        for p in &pieces {
            p.check_shape(g);
            for v in [p.three_vertex, p.two_vertex].into_iter().flatten() {
                *counts.entry(v).or_default() += 1;
            }
        }
        // a vertex may appear twice only as a triangle's c (2-vertex of the
        // single edge and 3-vertex of the 2-path)
        for (&v, &c) in &counts {
            if c > 2 {
                return Err(Error::invariant(format!("vertex {v} designated {c} times")));
            }
            if c == 2 {
                let roles: Vec<&LeftoverPiece> = pieces
                    .iter()
                    .filter(|p| p.three_vertex == Some(v) || p.two_vertex == Some(v))
                    .collect();
                let shared_ok = roles.len() == 2
                    && roles.iter().any(|p| p.kind == PieceKind::SingleEdge && p.two_vertex == Some(v))
                    && roles.iter().any(|p| p.kind == PieceKind::TwoPath && p.three_vertex == Some(v));
                if !shared_ok {
                    return Err(Error::invariant(format!("vertex {v} designated twice outside the triangle rule")));
                }
            }
        }
    }
    Ok(pieces)
}

/// Walks a path or cycle component from `start`. For cycles, `first` fixes
/// the initial direction and the walk closes back at `start`.
fn walk_path(
    nbrs: &BTreeMap<VertexId, Vec<(VertexId, EdgeId)>>,
    start: VertexId,
    first: Option<VertexId>,
) -> (Vec<VertexId>, Vec<EdgeId>) {
    let mut vs = vec![start];
    let mut es = Vec::new();
    let mut prev_edge: Option<EdgeId> = None;
    let mut at = start;
    loop {
        let next = nbrs[&at]
            .iter()
            .copied()
            .filter(|&(w, e)| {
                Some(e) != prev_edge
                    && match (es.is_empty(), first) {
                        (true, Some(f)) => w == f,
                        _ => true,
                    }
            })
            .min_by_key(|&(_, e)| e);
        match next {
            None => break,
            Some((w, e)) => {
                vs.push(w);
                es.push(e);
                prev_edge = Some(e);
                at = w;
                if first.is_some() && w == start {
                    break; // cycle closed
                }
            }
        }
    }
    (vs, es)
}

fn cut_cycle(vs: &[VertexId], es: &[EdgeId]) -> Vec<LeftoverPiece> {
    // vs closes back on vs[0]; reuse the open-path cutter on the closed walk
    cut_open_path(vs, es)
}

/// Completes every piece into a Y-copy using crossing edges of the three
/// sacrificial trees: preference order t1, t2, t3, lowest id first, skipping
/// already consumed edges and endpoint collisions. `consumed` collects the
/// crossing edges spent.
pub fn extend_fragments(
    g: &MultiGraph,
    pattern: &Arc<PatternTree>,
    pieces: &[LeftoverPiece],
    trees: &[EdgeSet],
    consumed: &mut EdgeSet,
) -> Result<Vec<TreeCopy>> {
    assert!(trees.len() >= 3);
    let draw = |v: VertexId, forbidden: &[VertexId], consumed: &mut EdgeSet| -> Result<(EdgeId, VertexId)> {
        for tree in trees {
            for &e in g.edges_at(v) {
                if !tree.contains(&e) || consumed.contains(&e) {
                    continue;
                }
                let w = g.other_endpoint(e, v);
                if forbidden.contains(&w) {
                    continue;
                }
                consumed.insert(e);
                return Ok((e, w));
            }
        }
        Err(Error::invariant(format!(
            "no available crossing-tree edge at designated vertex {v}"
        )))
    };

    let mut copies = Vec::new();
    for piece in pieces {
        let copy = match piece.kind {
            PieceKind::ThreePath => {
                let (mut vs, mut es) = (piece.vertices.clone(), piece.edge_ids.clone());
                let dv = piece.three_vertex.unwrap();
                if vs[2] == dv {
                    vs.reverse();
                    es.reverse();
                }
                debug_assert_eq!(vs[1], dv);
                let (el, leaf) = draw(dv, &vs, consumed)?;
                TreeCopy::y_copy(pattern, vs[1], vs[2], vs[0], leaf, vs[3], es[1], es[0], el, es[2])
            }
            PieceKind::TwoPath => {
                let (mut vs, mut es) = (piece.vertices.clone(), piece.edge_ids.clone());
                let dv = piece.three_vertex.unwrap();
                if vs[0] == dv {
                    vs.reverse();
                    es.reverse();
                }
                debug_assert_eq!(vs[2], dv);
                let (e1, x1) = draw(dv, &vs, consumed)?;
                let mut forb = vs.clone();
                forb.push(x1);
                let (e2, x2) = draw(dv, &forb, consumed)?;
                TreeCopy::y_copy(pattern, vs[2], vs[1], x1, x2, vs[0], es[1], e1, e2, es[0])
            }
            PieceKind::SingleEdge => {
                let tv = piece.three_vertex.unwrap();
                let wv = piece.two_vertex.unwrap();
                let (e1, x1) = draw(tv, &piece.vertices, consumed)?;
                let mut forb = piece.vertices.clone();
                forb.push(x1);
                let (e2, x2) = draw(tv, &forb, consumed)?;
                forb.push(x2);
                let (e3, x3) = draw(wv, &forb, consumed)?;
                TreeCopy::y_copy(pattern, tv, wv, x1, x2, x3, piece.edge_ids[0], e1, e2, e3)
            }
            PieceKind::ThreeStar => {
                let s = piece.vertices[0];
                let lv = piece.two_vertex.unwrap();
                let pos = piece.vertices[1..].iter().position(|&w| w == lv).unwrap();
                let em = piece.edge_ids[pos];
                let others: Vec<(VertexId, EdgeId)> = (0..3)
                    .filter(|&i| i != pos)
                    .map(|i| (piece.vertices[i + 1], piece.edge_ids[i]))
                    .collect();
                let (ep, p) = draw(lv, &piece.vertices, consumed)?;
                TreeCopy::y_copy(pattern, s, lv, others[0].0, others[1].0, p, em, others[0].1, others[1].1, ep)
            }
        };
        copy.check(g).map_err(Error::invariant)?;
        copies.push(copy);
    }
    Ok(copies)
}

/// Outcome of [`bipartize`].
#[derive(Clone, Debug)]
pub struct Bipartized {
    pub bipartition: Bipartition,
    /// Crossing edges that survive after all removals.
    pub surviving: EdgeSet,
    /// The k spanning trees of the crossing graph left untouched.
    pub remaining_pack: TreePack,
    pub removed: Vec<TreeCopy>,
}

/// Removes Y-copies so that a bipartite graph with `k` edge-disjoint
/// spanning trees remains. Requires (4k+23)-edge-connectivity; internally a
/// max-cut bipartition of strength 2k+12 and a pack of k+6 crossing trees,
/// of which three per side are sacrificed to extension edges.
pub fn bipartize(g: &MultiGraph, k: usize) -> Result<Bipartized> {
    assert!(k >= 1);
    let required = 4 * k + 23;
    let lambda = crate::connectivity::edge_connectivity(g)?;
    if lambda < required {
        return Err(Error::InsufficientConnectivity { required, actual: lambda });
    }
    let bipartition = max_cut_bipartition(g, 2 * k + 12)?;
    let pack = pack_spanning_trees_in(g, &bipartition.crossing_edges, k + 6)?;
    bipartize_with(g, bipartition, pack, k)
}

/// The removal phase alone, reusing a prepared bipartition and crossing
/// pack with at least k+6 trees. Split out for relaxed pipeline mode.
pub fn bipartize_with(
    g: &MultiGraph,
    bipartition: Bipartition,
    pack: TreePack,
    k: usize,
) -> Result<Bipartized> {
    if pack.len() < k + 6 {
        return Err(Error::InsufficientTrees { needed: k + 6, available: pack.len() });
    }
    let pattern = Arc::new(PatternTree::y());
    let mut surviving = bipartition.crossing_edges.clone();
    let mut removed = Vec::new();
    for (side, trees) in [(Side::A, &pack.trees[0..3]), (Side::B, &pack.trees[3..6])] {
        let inside: EdgeSet = g
            .alive_edges()
            .filter(|&e| {
                let (u, v) = g.endpoints(e);
                bipartition.side_of[u] == side && bipartition.side_of[v] == side
            })
            .collect();
        let (stripped, leftover) = strip_y_copies_inside(g, &pattern, &inside);
        debug_assert!(!contains_y(g, &leftover));
        removed.extend(stripped);
        let pieces = classify_leftover(g, &leftover)?;
        let mut consumed = EdgeSet::new();
        let extended = extend_fragments(g, &pattern, &pieces, trees, &mut consumed)?;
        removed.extend(extended);
        for e in consumed {
            surviving.remove(&e);
        }
    }
    let remaining_pack = TreePack { trees: pack.trees[6..6 + k].to_vec() };
    // conservation: removed copies + surviving crossing edges partition E
    let mut covered: EdgeSet = removed.iter().flat_map(|c| c.edge_map.iter().copied()).collect();
    let total = covered.len() + surviving.len();
    covered.extend(surviving.iter().copied());
    if total != covered.len() || covered != g.alive_edge_set() {
        return Err(Error::invariant("bipartize does not partition the edge set"));
    }
    for tree in &remaining_pack.trees {
        if !tree.is_subset(&surviving) {
            return Err(Error::invariant("remaining pack touches a removed edge"));
        }
    }
    Ok(Bipartized { bipartition, surviving, remaining_pack, removed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connectivity::edge_connectivity_in;
    use crate::graph::parse_graph;
    use rand::{Rng, SeedableRng};

    fn y_pattern() -> Arc<PatternTree> {
        Arc::new(PatternTree::y())
    }

    #[test]
    fn strip_removes_an_isolated_y() {
        let g = parse_graph("5 4\n0 1\n0 2\n0 3\n1 4").unwrap();
        let (removed, leftover) = strip_y_copies_inside(&g, &y_pattern(), &g.alive_edge_set());
        assert_eq!(removed.len(), 1);
        assert!(leftover.is_empty());
    }

    #[test]
    fn strip_leaves_cycles_alone() {
        let c5 = parse_graph("5 5\n0 1\n1 2\n2 3\n3 4\n4 0").unwrap();
        let (removed, leftover) = strip_y_copies_inside(&c5, &y_pattern(), &c5.alive_edge_set());
        assert!(removed.is_empty());
        assert_eq!(leftover.len(), 5);
    }

    #[test]
    fn strip_output_is_y_free_on_random_graphs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..30 {
            let mut g = MultiGraph::new(10);
            let mut pairs = std::collections::BTreeSet::new();
            while pairs.len() < 20 {
                let u = rng.gen_range(0..10);
                let v = rng.gen_range(0..10);
                if u != v {
                    pairs.insert((u.min(v), u.max(v)));
                }
            }
            for (u, v) in pairs {
                g.add_edge(u, v);
            }
            let (removed, leftover) = strip_y_copies_inside(&g, &y_pattern(), &g.alive_edge_set());
            assert!(!contains_y(&g, &leftover));
            let mut covered: EdgeSet = removed.iter().flat_map(|c| c.edge_map.iter().copied()).collect();
            assert_eq!(covered.len(), removed.len() * 4);
            covered.extend(leftover.iter().copied());
            assert_eq!(covered, g.alive_edge_set());
        }
    }

    #[test]
    fn classify_seven_edge_path() {
        let g = parse_graph("8 7\n0 1\n1 2\n2 3\n3 4\n4 5\n5 6\n6 7").unwrap();
        let pieces = classify_leftover(&g, &g.alive_edge_set()).unwrap();
        let kinds: Vec<PieceKind> = pieces.iter().map(|p| p.kind).collect();
        assert_eq!(kinds, vec![PieceKind::ThreePath, PieceKind::ThreePath, PieceKind::SingleEdge]);
        assert_eq!(pieces[0].three_vertex, Some(1));
        assert_eq!(pieces[1].three_vertex, Some(4));
    }

    #[test]
    fn classify_five_edge_star() {
        let g = parse_graph("6 5\n0 1\n0 2\n0 3\n0 4\n0 5").unwrap();
        let pieces = classify_leftover(&g, &g.alive_edge_set()).unwrap();
        let kinds: Vec<PieceKind> = pieces.iter().map(|p| p.kind).collect();
        assert_eq!(kinds, vec![PieceKind::ThreeStar, PieceKind::TwoPath]);
        assert_eq!(pieces[0].two_vertex, Some(1));
    }

    #[test]
    fn classify_triangle_shares_a_designation() {
        let g = parse_graph("3 3\n0 1\n0 2\n1 2").unwrap();
        let pieces = classify_leftover(&g, &g.alive_edge_set()).unwrap();
        assert_eq!(pieces.len(), 2);
        assert_eq!(pieces[0].kind, PieceKind::SingleEdge);
        assert_eq!(pieces[1].kind, PieceKind::TwoPath);
        // vertex 2 carries both the 2-vertex and the 2-path's 3-vertex role
        assert_eq!(pieces[0].two_vertex, Some(2));
        assert_eq!(pieces[1].three_vertex, Some(2));
    }

    #[test]
    fn classify_k4_paw_diamond() {
        let k4 = parse_graph("4 6\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3").unwrap();
        let pieces = classify_leftover(&k4, &k4.alive_edge_set()).unwrap();
        assert_eq!(pieces.len(), 2);
        assert!(pieces.iter().all(|p| p.kind == PieceKind::ThreePath));

        let paw = parse_graph("4 4\n0 1\n1 2\n1 3\n2 3").unwrap();
        let pieces = classify_leftover(&paw, &paw.alive_edge_set()).unwrap();
        let kinds: Vec<PieceKind> = pieces.iter().map(|p| p.kind).collect();
        assert_eq!(kinds, vec![PieceKind::ThreePath, PieceKind::SingleEdge]);

        let diamond = parse_graph("4 5\n0 1\n0 2\n0 3\n1 2\n1 3").unwrap();
        let pieces = classify_leftover(&diamond, &diamond.alive_edge_set()).unwrap();
        let kinds: Vec<PieceKind> = pieces.iter().map(|p| p.kind).collect();
        assert_eq!(kinds, vec![PieceKind::ThreePath, PieceKind::TwoPath]);
    }

    #[test]
    fn classify_cycles() {
        let c4 = parse_graph("4 4\n0 1\n1 2\n2 3\n3 0").unwrap();
        let pieces = classify_leftover(&c4, &c4.alive_edge_set()).unwrap();
        let kinds: Vec<PieceKind> = pieces.iter().map(|p| p.kind).collect();
        assert_eq!(kinds, vec![PieceKind::ThreePath, PieceKind::SingleEdge]);

        let c6 = parse_graph("6 6\n0 1\n1 2\n2 3\n3 4\n4 5\n5 0").unwrap();
        let pieces = classify_leftover(&c6, &c6.alive_edge_set()).unwrap();
        assert_eq!(pieces.len(), 2);
        assert!(pieces.iter().all(|p| p.kind == PieceKind::ThreePath));
    }

    #[test]
    fn bipartize_rejects_thin_input() {
        let c4 = parse_graph("4 4\n0 1\n1 2\n2 3\n3 0").unwrap();
        assert!(matches!(bipartize(&c4, 1), Err(Error::InsufficientConnectivity { required: 27, .. })));
    }

    #[test]
    fn bipartize_random_dense_instance() {
        // 28-regular graph on 32 vertices: 27-edge-connected suffices for k=1
        let g = crate::random::random_k_connected(32, 27, 5).unwrap();
        let out = bipartize(&g, 1).unwrap();
        // removed copies verify and, with survivors, partition E
        for c in &out.removed {
            c.check(&g).unwrap();
        }
        // survivors all cross
        for &e in &out.surviving {
            let (u, v) = g.endpoints(e);
            assert_ne!(out.bipartition.side_of[u], out.bipartition.side_of[v]);
        }
        out.remaining_pack.check(&g).unwrap();
        assert_eq!(out.remaining_pack.len(), 1);
        assert!(edge_connectivity_in(&g, &out.bipartition.crossing_edges).unwrap() >= 14);
    }

    #[test]
    fn bipartize_already_bipartite_removes_nothing() {
        let g = crate::random::random_bipartite_regular(30, 28, 9).unwrap();
        assert!(crate::connectivity::edge_connectivity(&g).unwrap() >= 27);
        let out = bipartize(&g, 1).unwrap();
        assert!(out.removed.is_empty());
        assert_eq!(out.surviving, g.alive_edge_set());
    }
}
