#![allow(dead_code)]

use std::collections::VecDeque;
use std::path::PathBuf;

use proptest::prelude::*;
use tsq_core::interferometer::{handshake_paths, NodeId, NodeKind, PathGraph};

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

/// Random layered graph: node 0 is the source, edges only run from lower to
/// higher indices so the result is acyclic. Port limits may drop edges.
pub fn random_graph() -> impl Strategy<Value = PathGraph> {
    (3usize..=12)
        .prop_flat_map(|n| {
            let kinds = proptest::collection::vec(0u8..4, n - 1);
            let edges = proptest::collection::vec(any::<bool>(), n * (n - 1) / 2);
            (Just(n), kinds, edges)
        })
        .prop_map(|(n, kinds, edges)| {
            let mut g = PathGraph::new(1.0).expect("valid wavenumber");
            g.add_node(NodeKind::Source, "S", [0.0, 0.0]).unwrap();
            for (i, k) in kinds.iter().enumerate() {
                let kind = match k {
                    0 => NodeKind::BeamSplitter,
                    1 => NodeKind::Mirror,
                    2 => NodeKind::Detector,
                    _ => NodeKind::Blocker,
                };
                g.add_node(kind, format!("N{}", i + 1), [i as f64 + 1.0, (i % 3) as f64])
                    .unwrap();
            }
            let mut flags = edges.into_iter();
            for i in 0..n {
                for j in (i + 1)..n {
                    if flags.next().unwrap_or(false) {
                        let _ = g.connect(NodeId(i), NodeId(j));
                    }
                }
            }
            g
        })
}

/// Breadth-first enumeration of every source-to-detector walk; a walk is
/// open exactly when it avoids every blocker.
pub fn brute_force_paths(g: &PathGraph) -> Vec<(Vec<usize>, bool)> {
    let source = g.source().expect("one source").0;
    let mut out = Vec::new();
    let mut queue = VecDeque::from([vec![source]]);
    while let Some(path) = queue.pop_front() {
        let last = *path.last().unwrap();
        if g.nodes()[last].kind == NodeKind::Detector {
            let open = path.iter().all(|&n| g.nodes()[n].kind != NodeKind::Blocker);
            out.push((path, open));
            continue;
        }
        for e in g.edges().iter().filter(|e| e.from.0 == last) {
            let mut next = path.clone();
            next.push(e.to.0);
            queue.push_back(next);
        }
    }
    out.sort();
    out
}

pub fn library_paths(g: &PathGraph) -> Vec<(Vec<usize>, bool)> {
    let mut out: Vec<_> = handshake_paths(g)
        .expect("enumeration succeeds")
        .into_iter()
        .map(|p| (p.nodes.iter().map(|n| n.0).collect(), p.open))
        .collect();
    out.sort();
    out
}
