//! Constructive Y-decompositions of highly edge-connected graphs.
//!
//! The centrepiece is [`pipeline::decompose_y`], which decomposes the edge
//! set of a sufficiently edge-connected graph of size divisible by 4 into
//! copies of the tree Y (degree sequence 1,1,1,2,3). The supporting
//! machinery is exposed as modules:
//!
//! * [`graph`] — multigraph with stable edge ids, pattern trees, embeddings,
//!   serialization and the decomposition verifier,
//! * [`connectivity`] — exact edge connectivity, max-cut bipartization,
//!   edge-disjoint spanning-tree packing, degree-bounded spanning trees,
//!   nested union chains and spanning Eulerian subgraphs,
//! * [`bipartize_y`] — removing Y-copies until a bipartite graph with a
//!   spanning-tree pack remains,
//! * [`bipartize_generic`] — the same scheme for an arbitrary pattern tree,
//!   under a caller-supplied tree budget,
//! * [`divisibility`] — Euler-trail walks making all A-side degrees
//!   divisible by 4,
//! * [`finale`] — reserve-and-glue: balanced 3-path decomposition plus one
//!   reserved edge per path middle,
//! * [`oracle`] / [`gallery`] / [`random`] — ground-truth instruments,
//! * [`pipeline`] — the end-to-end driver used by the CLI.

pub mod bipartize_generic;
pub mod bipartize_y;
pub mod connectivity;
pub mod divisibility;
pub mod error;
pub mod finale;
pub mod gallery;
pub mod graph;
pub mod oracle;
pub mod pipeline;
pub mod random;

pub use error::{Error, Result};
pub use graph::{
    parse_decomposition, parse_graph, serialize_decomposition, verify_decomposition, Bipartition,
    Decomposition, EdgeId, EdgeSet, MultiGraph, PatternTree, Side, TreeCopy, VertexId,
};
