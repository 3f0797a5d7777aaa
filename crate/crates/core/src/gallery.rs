//! Named reference graphs: small decomposable cases and the two
//! counterexample constructions from the discussion of sharpness.

use crate::error::{Error, Result};
use crate::graph::MultiGraph;

/// A named graph together with its documented properties.
#[derive(Clone, Debug)]
pub struct GalleryEntry {
    pub name: &'static str,
    pub graph: MultiGraph,
    /// Edge connectivity as documented; re-verified by tests.
    pub edge_connectivity: usize,
    /// Human-readable provenance / decomposability notes.
    pub notes: &'static str,
}

pub const GALLERY_NAMES: [&str; 5] = ["wheel4", "k6chain", "y", "k4", "petersen"];

/// Looks up a gallery graph by name.
pub fn gallery(name: &str) -> Result<GalleryEntry> {
    match name {
        "wheel4" => {
            let mut g = MultiGraph::new(5);
            for i in 0..4 {
                g.add_edge(i, (i + 1) % 4);
            }
            for i in 0..4 {
                g.add_edge(4, i);
            }
            Ok(GalleryEntry {
                name: "wheel4",
                graph: g,
                edge_connectivity: 3,
                notes: "3-edge-connected, 8 edges, yet no Y-decomposition: high \
                        edge connectivity alone cannot replace the constant 191.",
            })
        }
        "k6chain" => {
            // Four copies of K6 in a closed chain; copy i owns vertices
            // 6i..6i+5 and sends the triple {6i+3, 6i+4, 6i+5} to
            // {6j, 6j+1, 6j+2} of the next copy j = i+1 mod 4. The closed
            // chain is the unique linking that makes the result 6-regular.
            // Claimed (unverified here: beyond oracle reach) to admit no
            // decomposition into 4-stars despite being 6-edge-connected
            // with |E| = 72 divisible by 4.
            let mut g = MultiGraph::new(24);
            for copy in 0..4 {
                let base = 6 * copy;
                for a in 0..6 {
                    for b in a + 1..6 {
                        g.add_edge(base + a, base + b);
                    }
                }
            }
            for copy in 0..4 {
                let base = 6 * copy;
                let next = 6 * ((copy + 1) % 4);
                for t in 0..3 {
                    g.add_edge(base + 3 + t, next + t);
                }
            }
            Ok(GalleryEntry {
                name: "k6chain",
                graph: g,
                edge_connectivity: 6,
                notes: "closed chain of four K6 copies, 6-regular; reported to \
                        have no 4-star decomposition (not machine-verified: 72 \
                        edges exceed the honest oracle's reach).",
            })
        }
        "y" => {
            let mut g = MultiGraph::new(5);
            g.add_edge(0, 1);
            g.add_edge(0, 2);
            g.add_edge(0, 3);
            g.add_edge(1, 4);
            Ok(GalleryEntry {
                name: "y",
                graph: g,
                edge_connectivity: 1,
                notes: "the pattern tree itself: degree sequence 1,1,1,2,3.",
            })
        }
        "k4" => {
            let mut g = MultiGraph::new(4);
            for a in 0..4 {
                for b in a + 1..4 {
                    g.add_edge(a, b);
                }
            }
            Ok(GalleryEntry {
                name: "k4",
                graph: g,
                edge_connectivity: 3,
                notes: "complete graph on 4 vertices; 6 edges, so no Y-decomposition \
                        candidate (6 is not divisible by 4).",
            })
        }
        "petersen" => {
            let mut g = MultiGraph::new(10);
            for i in 0..5 {
                g.add_edge(i, (i + 1) % 5); // outer cycle
                g.add_edge(5 + i, 5 + (i + 2) % 5); // inner pentagram
                g.add_edge(i, 5 + i); // spokes
            }
            Ok(GalleryEntry {
                name: "petersen",
                graph: g,
                edge_connectivity: 3,
                notes: "Petersen graph; 15 edges, 3-regular.",
            })
        }
        other => Err(Error::UnknownGallery(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connectivity::edge_connectivity;
    use crate::graph::PatternTree;

    #[test]
    fn documented_connectivity_holds() {
        for name in GALLERY_NAMES {
            let entry = gallery(name).unwrap();
            assert_eq!(
                edge_connectivity(&entry.graph).unwrap(),
                entry.edge_connectivity,
                "{name}"
            );
        }
    }

    #[test]
    fn wheel4_shape() {
        let entry = gallery("wheel4").unwrap();
        assert_eq!(entry.graph.vertex_count(), 5);
        assert_eq!(entry.graph.edge_count(), 8);
    }

    #[test]
    fn k6chain_is_six_regular() {
        let entry = gallery("k6chain").unwrap();
        let g = &entry.graph;
        assert_eq!(g.vertex_count(), 24);
        assert_eq!(g.edge_count(), 72);
        for v in 0..24 {
            assert_eq!(g.degree(v), 6, "vertex {v}");
        }
        // simple
        let mut seen = std::collections::BTreeSet::new();
        for e in g.alive_edges() {
            assert!(seen.insert(g.endpoints(e)));
        }
    }

    #[test]
    fn y_entry_matches_the_pattern() {
        let entry = gallery("y").unwrap();
        let y = PatternTree::y();
        assert_eq!(entry.graph.vertex_count(), y.vertex_count);
        assert_eq!(entry.graph.edge_count(), y.edge_count());
        let mut degs: Vec<usize> = (0..5).map(|v| entry.graph.degree(v)).collect();
        degs.sort_unstable();
        assert_eq!(degs, vec![1, 1, 1, 2, 3]);
    }

    #[test]
    fn unknown_name_is_rejected() {
        assert!(matches!(gallery("moebius"), Err(Error::UnknownGallery(_))));
    }
}
