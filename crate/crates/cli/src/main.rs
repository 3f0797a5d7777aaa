//! Command-line driver: pipeline orchestration, graph I/O and reports.
//!
//! Exit codes: 0 success, 2 precondition failure (bad input, violated
//! divisibility/connectivity gates), 3 stage failure, 4 internal-invariant
//! violation.

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ydecomp::connectivity::{edge_connectivity, max_tree_packing_in};
use ydecomp::gallery::{gallery, GALLERY_NAMES};
use ydecomp::oracle::{brute_force_decomposition, OracleOutcome};
use ydecomp::pipeline::{decompose_y, PipelineConfig, REQUIRED_CONNECTIVITY};
use ydecomp::random::{random_bipartite_regular, random_k_connected, random_regular};
use ydecomp::{
    parse_decomposition, parse_graph, serialize_decomposition, verify_decomposition, Error,
    MultiGraph, PatternTree,
};

#[derive(Parser)]
#[command(name = "ydecomp", version, about = "Y-decompositions of highly edge-connected graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Edgelist,
    Json,
}

#[derive(Args)]
struct InputArg {
    /// Input graph file in edge-list format (`n m` header, then `u v`
    /// lines); `-` or absent reads standard input.
    input: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Report edge connectivity and the maximum spanning-tree packing size.
    Analyze {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, value_enum, default_value = "edgelist")]
        format: Format,
    },
    /// Run the full pipeline and print the verified Y-decomposition.
    DecomposeY {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Strict-mode edge-connectivity gate.
        #[arg(long, default_value_t = REQUIRED_CONNECTIVITY)]
        connectivity: usize,
        /// Drop the connectivity gate and re-pack as many trees as the
        /// instance affords before each stage.
        #[arg(long)]
        relaxed: bool,
        /// Print per-stage (and per-copy) accounting to standard error.
        #[arg(long)]
        trace: bool,
        #[arg(long, value_enum, default_value = "edgelist")]
        format: Format,
    },
    /// Check a decomposition document against a graph.
    Verify {
        #[command(flatten)]
        input: InputArg,
        /// Decomposition document produced by `decompose-y` or `oracle`.
        #[arg(long)]
        decomposition: PathBuf,
    },
    /// Exhaustive search for a pattern decomposition (small graphs only).
    Oracle {
        #[command(flatten)]
        input: InputArg,
        /// Pattern tree: `y`, `path-N` (N edges) or `star-N` (N edges).
        #[arg(long, default_value = "y")]
        pattern: String,
        /// Search-node budget; the oracle reports honestly when it runs out.
        #[arg(long, default_value_t = 50_000_000)]
        budget: usize,
    },
    /// Emit a seeded random graph in edge-list format.
    Generate {
        #[command(subcommand)]
        family: Family,
    },
    /// Print a named reference graph, or list all names.
    Gallery {
        /// Entry name; absent lists the gallery.
        name: Option<String>,
        #[arg(long, value_enum, default_value = "edgelist")]
        format: Format,
    },
}

#[derive(Subcommand)]
enum Family {
    /// d-regular graph on n vertices.
    Regular {
        n: usize,
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Graph with verified edge connectivity at least k.
    KConnected {
        n: usize,
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// d-regular bipartite graph with s vertices per side.
    BipartiteRegular {
        s: usize,
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn read_graph(input: &InputArg) -> Result<MultiGraph, Error> {
    let text = match &input.input {
        Some(p) if p.as_os_str() != "-" => std::fs::read_to_string(p)
            .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", p.display())))?,
        _ => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| Error::InvalidArgument(format!("cannot read stdin: {e}")))?;
            buf
        }
    };
    parse_graph(&text)
}

fn parse_pattern(spec: &str) -> Result<PatternTree, Error> {
    if spec == "y" {
        return Ok(PatternTree::y());
    }
    let bad = || Error::InvalidArgument(format!("unknown pattern {spec:?} (try y, path-N, star-N)"));
    if let Some(t) = spec.strip_prefix("path-") {
        let t: usize = t.parse().map_err(|_| bad())?;
        if t == 0 {
            return Err(bad());
        }
        return Ok(PatternTree::path(t));
    }
    if let Some(t) = spec.strip_prefix("star-") {
        let t: usize = t.parse().map_err(|_| bad())?;
        if t == 0 {
            return Err(bad());
        }
        return Ok(PatternTree::star(t));
    }
    Err(bad())
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Analyze { input, format } => {
            let g = read_graph(&input)?;
            let lambda = edge_connectivity(&g)?;
            let all = g.alive_edge_set();
            let pack = max_tree_packing_in(&g, &all, lambda.max(1));
            match format {
                Format::Edgelist => {
                    println!("vertices {}", g.vertex_count());
                    println!("edges {}", g.edge_count());
                    println!("edge-connectivity {lambda}");
                    println!("max-tree-packing {}", pack.len());
                    println!("mod4 {}", g.edge_count() % 4);
                }
                Format::Json => {
                    println!(
                        "{}",
                        json!({
                            "vertices": g.vertex_count(),
                            "edges": g.edge_count(),
                            "edge_connectivity": lambda,
                            "max_tree_packing": pack.len(),
                            "mod4": g.edge_count() % 4,
                        })
                    );
                }
            }
            Ok(())
        }
        Command::DecomposeY { input, seed, connectivity, relaxed, trace, format } => {
            let g = read_graph(&input)?;
            let cfg = PipelineConfig { seed, connectivity, relaxed, trace };
            let out = decompose_y(&g, &cfg)?;
            for line in &out.trace {
                eprintln!("{line}");
            }
            match format {
                Format::Edgelist => print!("{}", serialize_decomposition(&out.decomposition)),
                Format::Json => {
                    let stages: Vec<_> = out
                        .stages
                        .iter()
                        .map(|s| {
                            json!({
                                "stage": s.stage,
                                "copies_removed": s.copies_removed,
                                "edges_removed": s.edges_removed,
                                "remaining": s.after.len(),
                            })
                        })
                        .collect();
                    let copies: Vec<_> = out
                        .decomposition
                        .copies
                        .iter()
                        .map(|c| json!({ "vertices": c.vertex_map, "edges": c.edge_map }))
                        .collect();
                    println!(
                        "{}",
                        json!({ "copies": copies, "stages": stages, "pattern": "y" })
                    );
                }
            }
            Ok(())
        }
        Command::Verify { input, decomposition } => {
            let g = read_graph(&input)?;
            let text = std::fs::read_to_string(&decomposition).map_err(|e| {
                Error::InvalidArgument(format!("cannot read {}: {e}", decomposition.display()))
            })?;
            let d = parse_decomposition(&text)?;
            let pattern = d
                .copies
                .first()
                .map(|c| (*c.pattern).clone())
                .unwrap_or_else(PatternTree::y);
            verify_decomposition(&g, &g.alive_edge_set(), &pattern, &d)
                .map_err(Error::InvalidArgument)?;
            println!("ok {} copies", d.copies.len());
            Ok(())
        }
        Command::Oracle { input, pattern, budget } => {
            let g = read_graph(&input)?;
            let p = parse_pattern(&pattern)?;
            match brute_force_decomposition(&g, &p, budget) {
                OracleOutcome::Found(d) => {
                    print!("{}", serialize_decomposition(&d));
                    Ok(())
                }
                OracleOutcome::NotDecomposable => {
                    println!("not-decomposable");
                    Ok(())
                }
                OracleOutcome::BudgetExceeded => Err(Error::BudgetExceeded(format!(
                    "oracle budget of {budget} search nodes exhausted"
                ))),
            }
        }
        Command::Generate { family } => {
            let g = match family {
                Family::Regular { n, d, seed } => random_regular(n, d, seed)?,
                Family::KConnected { n, k, seed } => random_k_connected(n, k, seed)?,
                Family::BipartiteRegular { s, d, seed } => random_bipartite_regular(s, d, seed)?,
            };
            print!("{}", g.to_edge_list());
            Ok(())
        }
        Command::Gallery { name, format } => match name {
            None => {
                for n in GALLERY_NAMES {
                    let e = gallery(n)?;
                    println!(
                        "{n}: {} vertices, {} edges, edge-connectivity {}",
                        e.graph.vertex_count(),
                        e.graph.edge_count(),
                        e.edge_connectivity
                    );
                }
                Ok(())
            }
            Some(n) => {
                let e = gallery(&n)?;
                match format {
                    Format::Edgelist => {
                        println!("# {}: {}", e.name, e.notes);
                        print!("{}", e.graph.to_edge_list());
                    }
                    Format::Json => {
                        let edges: Vec<_> = e
                            .graph
                            .alive_edges()
                            .map(|id| {
                                let (u, v) = e.graph.endpoints(id);
                                json!([u, v])
                            })
                            .collect();
                        println!(
                            "{}",
                            json!({
                                "name": e.name,
                                "vertices": e.graph.vertex_count(),
                                "edges": edges,
                                "edge_connectivity": e.edge_connectivity,
                                "notes": e.notes,
                            })
                        );
                    }
                }
                Ok(())
            }
        },
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut cause = std::error::Error::source(&e);
            while let Some(c) = cause {
                eprintln!("  caused by: {c}");
                cause = c.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
