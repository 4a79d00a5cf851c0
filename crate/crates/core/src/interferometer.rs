//! Discrete-mode interferometer networks: beam-splitter algebra, blockers,
//! detector probabilities, source/detector handshake paths, and rendering of
//! the transition density along one open path.
//!
//! Conventions: a beam splitter maps `(in0, in1)` to
//! `((in0 + i·in1)/√2, (i·in0 + in1)/√2)`, a mirror multiplies by `i`, and an
//! edge of length `L` with extra phase `φ` multiplies by `e^{i(kL + φ)}`.

use std::collections::{BTreeSet, VecDeque};
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField, Grid};
use crate::states::{Direction, SpacetimePoint, StateSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Source,
    BeamSplitter,
    Mirror,
    Detector,
    /// Absorbs whatever reaches it. It may keep one outgoing edge that
    /// records the geometry behind it, but no amplitude travels along it.
    Blocker,
}

impl NodeKind {
    fn max_inputs(self) -> usize {
        match self {
            NodeKind::Source => 0,
            NodeKind::BeamSplitter => 2,
            NodeKind::Mirror => 1,
            NodeKind::Detector | NodeKind::Blocker => usize::MAX,
        }
    }

    fn max_outputs(self) -> usize {
        match self {
            NodeKind::BeamSplitter => 2,
            NodeKind::Source | NodeKind::Mirror | NodeKind::Blocker => 1,
            NodeKind::Detector => 0,
        }
    }

    pub fn is_sink(self) -> bool {
        matches!(self, NodeKind::Detector | NodeKind::Blocker)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    pub label: String,
    pub position: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: NodeId,
    pub from_port: usize,
    pub to: NodeId,
    pub to_port: usize,
    pub length: f64,
    pub extra_phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    k: f64,
}

impl PathGraph {
    pub fn new(k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Parameter(format!("wave number must be positive (got {k})")));
        }
        Ok(Self {
            nodes: Vec::new(),
            edges: Vec::new(),
            k,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn find(&self, label: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.label == label).map(NodeId)
    }

    pub fn add_node(&mut self, kind: NodeKind, label: impl Into<String>, position: [f64; 2]) -> Result<NodeId> {
        let label = label.into();
        if self.find(&label).is_some() {
            return Err(Error::Topology(format!("duplicate node label '{label}'")));
        }
        if !position.iter().all(|v| v.is_finite()) {
            return Err(Error::Parameter(format!("node '{label}' has a non-finite position")));
        }
        self.nodes.push(Node { kind, label, position });
        Ok(NodeId(self.nodes.len() - 1))
    }

    fn used_ports(&self, id: NodeId, outgoing: bool) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|e| if outgoing { e.from == id } else { e.to == id })
            .map(|e| if outgoing { e.from_port } else { e.to_port })
            .collect()
    }

    fn free_port(&self, id: NodeId, outgoing: bool) -> Option<usize> {
        let kind = self.node(id).kind;
        let limit = if outgoing {
            kind.max_outputs()
        } else {
            kind.max_inputs()
        };
        let used = self.used_ports(id, outgoing);
        (0..limit).find(|p| !used.contains(p))
    }

    /// Connects the first free output of `from` to the first free input of
    /// `to`, with the straight-line distance as the edge length.
    pub fn connect(&mut self, from: NodeId, to: NodeId) -> Result<()> {
        self.connect_with_phase(from, to, 0.0)
    }

    pub fn connect_with_phase(&mut self, from: NodeId, to: NodeId, extra_phase: f64) -> Result<()> {
        let out = self
            .free_port(from, true)
            .ok_or_else(|| Error::Topology(format!("'{}' has no free output port", self.node(from).label)))?;
        let inp = self
            .free_port(to, false)
            .ok_or_else(|| Error::Topology(format!("'{}' has no free input port", self.node(to).label)))?;
        self.connect_ports(from, out, to, inp, extra_phase)
    }

    /// Connects explicit ports; the length is the distance between the nodes.
    pub fn connect_ports(
        &mut self,
        from: NodeId,
        from_port: usize,
        to: NodeId,
        to_port: usize,
        extra_phase: f64,
    ) -> Result<()> {
        let (a, b) = (self.node(from).position, self.node(to).position);
        let length = (b[0] - a[0]).hypot(b[1] - a[1]);
        self.connect_full(Edge {
            from,
            from_port,
            to,
            to_port,
            length,
            extra_phase,
        })
    }

    pub fn connect_full(&mut self, edge: Edge) -> Result<()> {
        for id in [edge.from, edge.to] {
            if id.0 >= self.nodes.len() {
                return Err(Error::Topology(format!("unknown node id {}", id.0)));
            }
        }
        let (src, dst) = (self.node(edge.from), self.node(edge.to));
        if edge.from_port >= src.kind.max_outputs() {
            return Err(Error::Topology(format!(
                "'{}' has no output port {}",
                src.label, edge.from_port
            )));
        }
        if edge.to_port >= dst.kind.max_inputs() {
            return Err(Error::Topology(format!(
                "'{}' has no input port {}",
                dst.label, edge.to_port
            )));
        }
        if self.used_ports(edge.from, true).contains(&edge.from_port) {
            return Err(Error::Topology(format!(
                "output {} of '{}' is already connected",
                edge.from_port, src.label
            )));
        }
        let fan_in = matches!(dst.kind, NodeKind::Detector | NodeKind::Blocker);
        if !fan_in && self.used_ports(edge.to, false).contains(&edge.to_port) {
            return Err(Error::Topology(format!(
                "input {} of '{}' is already connected",
                edge.to_port, dst.label
            )));
        }
        if !(edge.length >= 0.0 && edge.length.is_finite() && edge.extra_phase.is_finite()) {
            return Err(Error::Parameter(
                "edge length and phase must be finite, length >= 0".into(),
            ));
        }
        self.edges.push(edge);
        Ok(())
    }

    pub fn source(&self) -> Result<NodeId> {
        let sources: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| self.nodes[i].kind == NodeKind::Source)
            .collect();
        match sources.as_slice() {
            [one] => Ok(NodeId(*one)),
            _ => Err(Error::Topology(format!(
                "expected exactly one source, found {}",
                sources.len()
            ))),
        }
    }

    fn successors(&self, id: NodeId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.from == id)
    }

    /// Kahn ordering; errors on a cycle.
    pub fn topological_order(&self) -> Result<Vec<NodeId>> {
        let mut indegree = vec![0usize; self.nodes.len()];
        for e in &self.edges {
            indegree[e.to.0] += 1;
        }
        let mut ready: VecDeque<usize> = (0..self.nodes.len()).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(i) = ready.pop_front() {
            order.push(NodeId(i));
            for e in self.successors(NodeId(i)) {
                indegree[e.to.0] -= 1;
                if indegree[e.to.0] == 0 {
                    ready.push_back(e.to.0);
                }
            }
        }
        if order.len() != self.nodes.len() {
            return Err(Error::Topology("the graph contains a cycle".into()));
        }
        Ok(order)
    }

    /// Checks the structural rules the mode calculation relies on.
    pub fn validate(&self) -> Result<()> {
        let source = self.source()?;
        self.topological_order()?;
        if self.successors(source).count() != 1 {
            return Err(Error::Topology("the source must have exactly one outgoing edge".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let id = NodeId(i);
            let (ins, outs) = (self.used_ports(id, false).len(), self.used_ports(id, true).len());
            match node.kind {
                NodeKind::BeamSplitter if outs != 2 => {
                    return Err(Error::Topology(format!(
                        "beam splitter '{}' needs both outputs connected (has {outs})",
                        node.label
                    )));
                }
                NodeKind::Mirror if ins != 1 || outs != 1 => {
                    return Err(Error::Topology(format!(
                        "mirror '{}' needs one input and one output (has {ins}/{outs})",
                        node.label
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinkAmplitude {
    pub node: NodeId,
    pub label: String,
    pub kind: NodeKind,
    pub amplitude: Complex64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeResult {
    /// Every detector and blocker, in node order.
    pub sinks: Vec<SinkAmplitude>,
    pub total_probability: f64,
}

impl ModeResult {
    pub fn probability(&self, label: &str) -> Option<f64> {
        self.sinks.iter().find(|s| s.label == label).map(|s| s.probability)
    }
}

/// Injects unit amplitude at the source and pushes it through the network.
/// Unconnected beam-splitter inputs carry vacuum.
pub fn propagate_modes(graph: &PathGraph) -> Result<ModeResult> {
    graph.validate()?;
    let zero = Complex64::new(0.0, 0.0);
    let mut inputs = vec![[zero; 2]; graph.nodes.len()];
    let mut collected = vec![zero; graph.nodes.len()];
    let i = Complex64::i();
    for id in graph.topological_order()? {
        let node = graph.node(id);
        let outputs: [Complex64; 2] = match node.kind {
            NodeKind::Source => [Complex64::new(1.0, 0.0), zero],
            NodeKind::Mirror => [i * inputs[id.0][0], zero],
            NodeKind::BeamSplitter => {
                let [a, b] = inputs[id.0];
                [(a + i * b) * FRAC_1_SQRT_2, (i * a + b) * FRAC_1_SQRT_2]
            }
            NodeKind::Detector | NodeKind::Blocker => {
                collected[id.0] = inputs[id.0][0];
                continue;
            }
        };
        for e in graph.successors(id) {
            let carried = outputs[e.from_port] * Complex64::from_polar(1.0, graph.k * e.length + e.extra_phase);
            let target = graph.node(e.to).kind;
            let port = if target.is_sink() { 0 } else { e.to_port };
            inputs[e.to.0][port] += carried;
        }
    }
    let sinks: Vec<SinkAmplitude> = graph
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.kind.is_sink())
        .map(|(k, n)| SinkAmplitude {
            node: NodeId(k),
            label: n.label.clone(),
            kind: n.kind,
            amplitude: collected[k],
            probability: collected[k].norm_sqr(),
        })
        .collect();
    let total_probability = sinks.iter().map(|s| s.probability).sum();
    Ok(ModeResult {
        sinks,
        total_probability,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandshakePath {
    /// Source first, detector last.
    pub nodes: Vec<NodeId>,
    pub open: bool,
}

impl HandshakePath {
    pub fn detector(&self) -> NodeId {
        *self.nodes.last().expect("paths are never empty")
    }

    pub fn labels<'g>(&self, graph: &'g PathGraph) -> Vec<&'g str> {
        self.nodes.iter().map(|&n| graph.node(n).label.as_str()).collect()
    }
}

/// Nodes reachable from `start` along (or against) edges. Blockers are
/// reached but never passed through.
fn reach(graph: &PathGraph, start: NodeId, forward: bool) -> BTreeSet<NodeId> {
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(n) = stack.pop() {
        if n != start && graph.node(n).kind == NodeKind::Blocker {
            continue;
        }
        for e in &graph.edges {
            let (a, b) = if forward { (e.from, e.to) } else { (e.to, e.from) };
            if a == n && seen.insert(b) {
                stack.push(b);
            }
        }
    }
    seen
}

/// Every simple path from the source to a detector. A path is open when the
/// source's retarded wave (spreading forward, stopped by blockers) and the
/// detector's advanced wave (spreading backward, stopped by blockers) both
/// cover all of it.
pub fn handshake_paths(graph: &PathGraph) -> Result<Vec<HandshakePath>> {
    let source = graph.source()?;
    let retarded = reach(graph, source, true);
    let mut out = Vec::new();
    let mut path = vec![source];
    collect_paths(graph, &mut path, &mut out);
    for p in &mut out {
        let advanced = reach(graph, p.detector(), false);
        let blocked = p.nodes.iter().any(|&n| graph.node(n).kind == NodeKind::Blocker);
        p.open = !blocked && p.nodes.iter().all(|n| retarded.contains(n) && advanced.contains(n));
    }
    Ok(out)
}

fn collect_paths(graph: &PathGraph, path: &mut Vec<NodeId>, out: &mut Vec<HandshakePath>) {
    let here = *path.last().expect("non-empty");
    if graph.node(here).kind == NodeKind::Detector {
        out.push(HandshakePath {
            nodes: path.clone(),
            open: false,
        });
        return;
    }
    let next: Vec<NodeId> = graph.successors(here).map(|e| e.to).collect();
    for n in next {
        if !path.contains(&n) {
            path.push(n);
            collect_paths(graph, path, out);
            path.pop();
        }
    }
}

/// Geometry of the standard two-arm interferometer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MziLayout {
    /// Length of each arm segment.
    pub arm: f64,
    pub k: f64,
    /// Put blocker `D3` halfway along the first leg of the upper arm.
    pub block_upper: bool,
    pub block_lower: bool,
    pub upper_phase: f64,
    pub lower_phase: f64,
}

impl MziLayout {
    pub fn new(arm: f64, k: f64) -> Self {
        Self {
            arm,
            k,
            block_upper: false,
            block_lower: false,
            upper_phase: 0.0,
            lower_phase: 0.0,
        }
    }
}

/// Builds `S → B1`, lower arm `B1 → M1 → B2`, upper arm `B1 → M2 → B2`, and
/// detectors `D1`, `D2` behind `B2`. With both arms open every particle
/// reaches `D1`. Optional blockers are `D3` (upper) and `D4` (lower).
pub fn mach_zehnder(layout: &MziLayout) -> Result<PathGraph> {
    let a = layout.arm;
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Parameter(format!("arm length must be positive (got {a})")));
    }
    let mut g = PathGraph::new(layout.k)?;
    let s = g.add_node(NodeKind::Source, "S", [0.0, 0.0])?;
    let b1 = g.add_node(NodeKind::BeamSplitter, "B1", [a, 0.0])?;
    let m1 = g.add_node(NodeKind::Mirror, "M1", [2.0 * a, 0.0])?;
    let m2 = g.add_node(NodeKind::Mirror, "M2", [a, a])?;
    let b2 = g.add_node(NodeKind::BeamSplitter, "B2", [2.0 * a, a])?;
    let d1 = g.add_node(NodeKind::Detector, "D1", [2.0 * a, 2.0 * a])?;
    let d2 = g.add_node(NodeKind::Detector, "D2", [3.0 * a, a])?;
    g.connect_ports(s, 0, b1, 0, 0.0)?;
    let leg = |g: &mut PathGraph,
               from: NodeId,
               port: usize,
               to: NodeId,
               blocker: Option<(&str, [f64; 2])>,
               phase: f64|
     -> Result<()> {
        match blocker {
            Some((label, pos)) => {
                let d = g.add_node(NodeKind::Blocker, label, pos)?;
                g.connect_ports(from, port, d, 0, phase)?;
                g.connect_ports(d, 0, to, 0, 0.0)
            }
            None => g.connect_ports(from, port, to, 0, phase),
        }
    };
    leg(
        &mut g,
        b1,
        0,
        m1,
        layout.block_lower.then_some(("D4", [1.5 * a, 0.0])),
        layout.lower_phase,
    )?;
    leg(
        &mut g,
        b1,
        1,
        m2,
        layout.block_upper.then_some(("D3", [a, 0.5 * a])),
        layout.upper_phase,
    )?;
    g.connect_ports(m1, 0, b2, 0, 0.0)?;
    g.connect_ports(m2, 0, b2, 1, 0.0)?;
    g.connect_ports(b2, 0, d2, 0, 0.0)?;
    g.connect_ports(b2, 1, d1, 0, 0.0)?;
    Ok(g)
}

/// Position along a path polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<[f64; 2]>,
    /// Arc length at each vertex.
    offsets: Vec<f64>,
}

impl Polyline {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Path("a path needs at least two nodes".into()));
        }
        let mut offsets = vec![0.0];
        for w in points.windows(2) {
            let len = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
            if len == 0.0 {
                return Err(Error::Path("consecutive path nodes coincide".into()));
            }
            offsets.push(offsets.last().unwrap() + len);
        }
        Ok(Self { points, offsets })
    }

    pub fn length(&self) -> f64 {
        *self.offsets.last().unwrap()
    }

    /// Lab-frame point at arc length `s` (clamped to the path).
    pub fn point_at(&self, s: f64) -> [f64; 2] {
        let s = s.clamp(0.0, self.length());
        let j = (0..self.points.len() - 1)
            .rev()
            .find(|&j| self.offsets[j] <= s)
            .unwrap_or(0);
        let (p, q) = (self.points[j], self.points[j + 1]);
        let u = (s - self.offsets[j]) / (self.offsets[j + 1] - self.offsets[j]);
        [p[0] + u * (q[0] - p[0]), p[1] + u * (q[1] - p[1])]
    }

    /// Unfolded coordinates `(ξ, η)` of a lab point: arc length along and
    /// signed offset across the nearest segment (ties go to the earlier one).
    /// `ξ` is not clamped, so packets extend past either end of the path.
    pub fn unfold(&self, r: [f64; 2]) -> (f64, f64) {
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for j in 0..self.points.len() - 1 {
            let (p, q) = (self.points[j], self.points[j + 1]);
            let len = self.offsets[j + 1] - self.offsets[j];
            let d = [(q[0] - p[0]) / len, (q[1] - p[1]) / len];
            let rel = [r[0] - p[0], r[1] - p[1]];
            let along = rel[0] * d[0] + rel[1] * d[1];
            let across = -rel[0] * d[1] + rel[1] * d[0];
            let clamped = along.clamp(0.0, len);
            let dist = (rel[0] - clamped * d[0]).hypot(rel[1] - clamped * d[1]);
            if dist < best.0 {
                best = (dist, self.offsets[j] + along, across);
            }
        }
        (best.1, best.2)
    }
}

/// Transition density `φ*ψ` of a traveling packet pair along one open path,
/// rendered on a lab-frame grid. The retarded packet leaves the source at
/// `t_start`; the advanced packet is anchored at the detector at
/// `t_start + length/k`.
pub fn path_density_snapshots(
    graph: &PathGraph,
    path: &HandshakePath,
    k: f64,
    s: f64,
    grid: &Grid,
    t_start: f64,
    times: &[f64],
) -> Result<Vec<(f64, ComplexField)>> {
    if !path.open {
        return Err(Error::Path(format!(
            "path {} is blocked",
            path.labels(graph).join(" -> ")
        )));
    }
    if grid.dims() != 2 {
        return Err(Error::Shape("path densities need a 2D grid".into()));
    }
    let line = Polyline::new(path.nodes.iter().map(|&n| graph.node(n).position).collect())?;
    let t_end = t_start + line.length() / k;
    let psi = StateSpec::traveling_gaussian(SpacetimePoint::new(0.0, 0.0, t_start), [k, 0.0], s, Direction::Retarded)?;
    let phi = StateSpec::traveling_gaussian(
        SpacetimePoint::new(line.length(), 0.0, t_end),
        [k, 0.0],
        s,
        Direction::Advanced,
    )?;
    let unfolded: Vec<(f64, f64)> = (0..grid.len())
        .map(|n| {
            let (x, y) = grid.node(n);
            line.unfold([x, y])
        })
        .collect();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if !(t_start..=t_end).contains(&t) {
            return Err(Error::Parameter(format!("time {t} lies outside [{t_start}, {t_end}]")));
        }
        let values = unfolded
            .iter()
            .map(|&(xi, eta)| {
                let p = SpacetimePoint::new(xi, eta, t);
                Ok(phi.eval(p)? * psi.eval(p)?)
            })
            .collect::<Result<Vec<_>>>()?;
        out.push((t, ComplexField::new(*grid, values)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn labels(g: &PathGraph, paths: &[HandshakePath], open: bool) -> Vec<String> {
        let mut v: Vec<String> = paths
            .iter()
            .filter(|p| p.open == open)
            .map(|p| p.labels(g).join("-"))
            .collect();
        v.sort();
        v
    }

    #[test]
    fn calibrated_mzi_sends_everything_to_d1() {
        let r = propagate_modes(&mach_zehnder(&MziLayout::new(400.0, 0.4)).unwrap()).unwrap();
        assert!((r.probability("D1").unwrap() - 1.0).abs() < 1e-12);
        assert!(r.probability("D2").unwrap() < 1e-12);
        assert!((r.total_probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn blocked_upper_arm_gives_quarter_quarter_half() {
        let layout = MziLayout {
            block_upper: true,
            ..MziLayout::new(400.0, 0.4)
        };
        let r = propagate_modes(&mach_zehnder(&layout).unwrap()).unwrap();
        assert!((r.probability("D1").unwrap() - 0.25).abs() < 1e-12);
        assert!((r.probability("D2").unwrap() - 0.25).abs() < 1e-12);
        assert!((r.probability("D3").unwrap() - 0.5).abs() < 1e-12);
        assert!((r.total_probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn relative_phase_pi_swaps_outputs_and_common_phase_does_not() {
        let swapped = MziLayout {
            upper_phase: PI,
            ..MziLayout::new(400.0, 0.4)
        };
        let r = propagate_modes(&mach_zehnder(&swapped).unwrap()).unwrap();
        assert!((r.probability("D2").unwrap() - 1.0).abs() < 1e-12);
        let common = MziLayout {
            upper_phase: 0.7,
            lower_phase: 0.7,
            ..MziLayout::new(400.0, 0.4)
        };
        let r = propagate_modes(&mach_zehnder(&common).unwrap()).unwrap();
        assert!((r.probability("D1").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_splitter_is_fifty_fifty() {
        let mut g = PathGraph::new(1.0).unwrap();
        let s = g.add_node(NodeKind::Source, "S", [0.0, 0.0]).unwrap();
        let b = g.add_node(NodeKind::BeamSplitter, "B", [1.0, 0.0]).unwrap();
        let d1 = g.add_node(NodeKind::Detector, "D1", [2.0, 0.0]).unwrap();
        let d2 = g.add_node(NodeKind::Detector, "D2", [1.0, 1.0]).unwrap();
        g.connect(s, b).unwrap();
        g.connect(b, d1).unwrap();
        g.connect(b, d2).unwrap();
        let r = propagate_modes(&g).unwrap();
        assert!((r.probability("D1").unwrap() - 0.5).abs() < 1e-12);
        assert!((r.probability("D2").unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn malformed_graphs_are_topology_errors() {
        let mut g = PathGraph::new(1.0).unwrap();
        let s = g.add_node(NodeKind::Source, "S", [0.0, 0.0]).unwrap();
        let b = g.add_node(NodeKind::BeamSplitter, "B", [1.0, 0.0]).unwrap();
        let d = g.add_node(NodeKind::Detector, "D", [2.0, 0.0]).unwrap();
        g.connect(s, b).unwrap();
        g.connect(b, d).unwrap();
        assert!(matches!(propagate_modes(&g), Err(Error::Topology(_))));
        assert!(matches!(g.connect(d, b), Err(Error::Topology(_))));
        assert!(matches!(
            g.add_node(NodeKind::Mirror, "B", [0.0, 0.0]),
            Err(Error::Topology(_))
        ));

        let mut cyc = PathGraph::new(1.0).unwrap();
        let s = cyc.add_node(NodeKind::Source, "S", [0.0, 0.0]).unwrap();
        let m1 = cyc.add_node(NodeKind::BeamSplitter, "B1", [1.0, 0.0]).unwrap();
        let m2 = cyc.add_node(NodeKind::Mirror, "M2", [1.0, 1.0]).unwrap();
        let d = cyc.add_node(NodeKind::Detector, "D", [2.0, 0.0]).unwrap();
        cyc.connect(s, m1).unwrap();
        cyc.connect(m1, m2).unwrap();
        cyc.connect(m2, m1).unwrap();
        cyc.connect(m1, d).unwrap();
        assert!(matches!(propagate_modes(&cyc), Err(Error::Topology(_))));
    }

    #[test]
    fn handshake_open_sets() {
        let open = mach_zehnder(&MziLayout::new(400.0, 0.4)).unwrap();
        let paths = handshake_paths(&open).unwrap();
        assert_eq!(paths.len(), 4);
        assert!(paths.iter().all(|p| p.open));

        let blocked = mach_zehnder(&MziLayout {
            block_upper: true,
            ..MziLayout::new(400.0, 0.4)
        })
        .unwrap();
        let paths = handshake_paths(&blocked).unwrap();
        assert_eq!(labels(&blocked, &paths, true), vec!["S-B1-M1-B2-D1", "S-B1-M1-B2-D2"]);
        assert_eq!(
            labels(&blocked, &paths, false),
            vec!["S-B1-D3-M2-B2-D1", "S-B1-D3-M2-B2-D2"]
        );

        let both = MziLayout {
            block_upper: true,
            block_lower: true,
            ..MziLayout::new(400.0, 0.4)
        };
        let g = mach_zehnder(&both).unwrap();
        assert!(handshake_paths(&g).unwrap().iter().all(|p| !p.open));
    }

    #[test]
    fn polyline_unfolding() {
        let line = Polyline::new(vec![[0.0, 0.0], [10.0, 0.0], [10.0, 10.0]]).unwrap();
        assert_eq!(line.length(), 20.0);
        assert_eq!(line.point_at(15.0), [10.0, 5.0]);
        assert_eq!(line.unfold([5.0, 1.0]), (5.0, 1.0));
        let (xi, eta) = line.unfold([9.0, 6.0]);
        assert!((xi - 16.0).abs() < 1e-12 && (eta - 1.0).abs() < 1e-12);
        assert_eq!(line.unfold([-3.0, 0.0]), (-3.0, 0.0));
    }

    #[test]
    fn blocked_path_cannot_be_rendered() {
        let g = mach_zehnder(&MziLayout {
            block_upper: true,
            ..MziLayout::new(400.0, 0.4)
        })
        .unwrap();
        let closed = handshake_paths(&g).unwrap().into_iter().find(|p| !p.open).unwrap();
        let grid = Grid::square(10.0, 8).unwrap();
        assert!(matches!(
            path_density_snapshots(&g, &closed, 0.4, 70.0, &grid, 0.0, &[0.0]),
            Err(Error::Path(_))
        ));
    }
}
