//! Polyhedral metric complexes: triangles with side lengths glued along
//! shared edges, all of one curvature κ.
//!
//! A complex stores no coordinates. Faces know their three edges, edges know
//! their two vertices and a length, and every metric quantity (corner angles,
//! link graphs, audits) is derived from the κ-law of cosines. The link of a
//! vertex is a metric graph: one node per incident edge-end, one arc per
//! incident face corner, arc length = corner angle.
//!
//! Audits follow the polyhedral gluing criteria: every seam vertex must have
//! nonpositive paired turn sums (condition A), and every vertex link must have
//! no essential loop shorter than 2π (condition B).

use crate::model::{self, model_diameter, ModelError, ModelPoint};
use std::collections::HashMap;
use std::fmt::Write as _;
use thiserror::Error;

/// Default tolerance for audit comparisons (corner sums accumulate trig noise).
pub const DEFAULT_AUDIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(pub usize);
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub usize);
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaceId(pub usize);

#[derive(Debug, Error)]
pub enum ComplexError {
    #[error("curvature must be finite")]
    BadCurvature,
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("edge `{0}` has non-positive length {1}")]
    BadLength(String, f64),
    #[error("edge `{0}` joins a vertex to itself; loop edges are not supported")]
    LoopEdge(String),
    #[error("face `{0}` repeats an edge; degenerate faces are not supported")]
    RepeatedEdge(String),
    #[error("face `{0}`: edges do not close into a triangle")]
    NotATriangle(String),
    #[error("face `{0}` violates the triangle inequality with sides ({1}, {2}, {3})")]
    TriangleInequality(String, f64, f64, f64),
    #[error("face `{0}` has perimeter {1} ≥ 2D_κ = {2}")]
    PerimeterBound(String, f64, f64),
    #[error("complex is not connected")]
    Disconnected,
    #[error("edge `{0}` belongs to no face; one-dimensional pieces are not representable")]
    UnusedEdge(String),
    #[error("complex has no faces")]
    Empty,
    #[error("seam `{0}` is not an edge-connected path")]
    SeamNotConnected(String),
    #[error("edge path: consecutive edges do not share a vertex")]
    PathNotConnected,
    #[error("gluing: paths have different vertex counts ({0} vs {1})")]
    GlueLengthMismatch(usize, usize),
    #[error("gluing: no unique edge between `{0}` and `{1}`")]
    GlueNoEdge(String, String),
    #[error("gluing: edge lengths differ by {0:e} (beyond 1e-9)")]
    GlueEdgeMismatch(f64),
    #[error("gluing: curvatures differ")]
    GlueCurvature,
    #[error("gluing: paired vertices are not distinct")]
    GlueNotInjective,
    #[error("line {0}: {1}")]
    Parse(usize, String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub ends: [VertexId; 2],
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct Face {
    /// `edges[i]` joins `vertices[i]` to `vertices[(i+1) % 3]`.
    pub edges: [EdgeId; 3],
    pub vertices: [VertexId; 3],
    /// Corner angles; `angles[i]` at `vertices[i]`.
    pub angles: [f64; 3],
}

impl Face {
    /// Local corner index of `v`, if it is a vertex of this face.
    pub fn corner_of(&self, v: VertexId) -> Option<usize> {
        self.vertices.iter().position(|&w| w == v)
    }

    /// Side lengths ordered so that `sides[i]` is opposite `vertices[i]`.
    pub fn opposite_sides(&self, edges: &[Edge]) -> [f64; 3] {
        [
            edges[self.edges[1].0].length,
            edges[self.edges[2].0].length,
            edges[self.edges[0].0].length,
        ]
    }
}

/// Named edge path, used for seams (distinguished gluing curves) that the
/// condition-(A) audit walks.
#[derive(Debug, Clone)]
pub struct Seam {
    pub name: String,
    pub edges: Vec<EdgeId>,
}

#[derive(Debug, Clone)]
pub struct MetricComplex {
    kappa: f64,
    vertex_names: Vec<String>,
    edge_names: Vec<String>,
    face_names: Vec<String>,
    edges: Vec<Edge>,
    faces: Vec<Face>,
    /// Per edge: incident (face, corner-of-face-opposite... ) — stored as the
    /// face and the index i with face.edges[i] == edge.
    adjacency: Vec<Vec<(FaceId, usize)>>,
    /// Per vertex: incident edges, sorted.
    vertex_edges: Vec<Vec<EdgeId>>,
    seams: Vec<Seam>,
    base_points: Vec<(String, VertexId)>,
}

/// Incremental constructor for [`MetricComplex`]; the only path into a
/// validated complex.
#[derive(Debug, Default)]
pub struct ComplexBuilder {
    kappa: f64,
    vertex_names: Vec<String>,
    edge_names: Vec<String>,
    face_names: Vec<String>,
    edges: Vec<(VertexId, VertexId, f64)>,
    faces: Vec<[EdgeId; 3]>,
    seams: Vec<Seam>,
    base_points: Vec<(String, VertexId)>,
}

impl ComplexBuilder {
    pub fn new(kappa: f64) -> Self {
        ComplexBuilder {
            kappa,
            ..Default::default()
        }
    }

    pub fn vertex(&mut self, name: impl Into<String>) -> VertexId {
        self.vertex_names.push(name.into());
        VertexId(self.vertex_names.len() - 1)
    }

    pub fn edge(&mut self, a: VertexId, b: VertexId, length: f64) -> EdgeId {
        self.edge_named(format!("e{}", self.edges.len()), a, b, length)
    }

    pub fn edge_named(
        &mut self,
        name: impl Into<String>,
        a: VertexId,
        b: VertexId,
        length: f64,
    ) -> EdgeId {
        self.edge_names.push(name.into());
        self.edges.push((a, b, length));
        EdgeId(self.edges.len() - 1)
    }

    pub fn face(&mut self, e0: EdgeId, e1: EdgeId, e2: EdgeId) -> FaceId {
        self.face_named(format!("f{}", self.faces.len()), e0, e1, e2)
    }

    pub fn face_named(&mut self, name: impl Into<String>, e0: EdgeId, e1: EdgeId, e2: EdgeId) -> FaceId {
        self.face_names.push(name.into());
        self.faces.push([e0, e1, e2]);
        FaceId(self.faces.len() - 1)
    }

    pub fn seam(&mut self, name: impl Into<String>, edges: Vec<EdgeId>) {
        self.seams.push(Seam {
            name: name.into(),
            edges,
        });
    }

    pub fn base_point(&mut self, name: impl Into<String>, v: VertexId) {
        self.base_points.push((name.into(), v));
    }

    pub fn build(self) -> Result<MetricComplex, ComplexError> {
        if !self.kappa.is_finite() {
            return Err(ComplexError::BadCurvature);
        }
        if self.faces.is_empty() {
            return Err(ComplexError::Empty);
        }
        for names in [&self.vertex_names, &self.edge_names, &self.face_names] {
            let mut seen = HashMap::new();
            for n in names {
                if seen.insert(n.as_str(), ()).is_some() {
                    return Err(ComplexError::DuplicateName(n.clone()));
                }
            }
        }

        let mut edges = Vec::with_capacity(self.edges.len());
        for (i, &(a, b, len)) in self.edges.iter().enumerate() {
            if !(len > 0.0) || !len.is_finite() {
                return Err(ComplexError::BadLength(self.edge_names[i].clone(), len));
            }
            if a == b {
                return Err(ComplexError::LoopEdge(self.edge_names[i].clone()));
            }
            edges.push(Edge {
                ends: [a, b],
                length: len,
            });
        }

        let bound = 2.0 * model_diameter(self.kappa);
        let mut faces = Vec::with_capacity(self.faces.len());
        let mut adjacency = vec![Vec::new(); edges.len()];
        for (i, &[e0, e1, e2]) in self.faces.iter().enumerate() {
            let name = || self.face_names[i].clone();
            if e0 == e1 || e1 == e2 || e0 == e2 {
                return Err(ComplexError::RepeatedEdge(name()));
            }
            // vertices[0] is shared by e2 and e0, and e0 must run to a vertex
            // shared with e1, which closes back through e2.
            let find_shared = |x: EdgeId, y: EdgeId| -> Option<VertexId> {
                let (xe, ye) = (&edges[x.0], &edges[y.0]);
                xe.ends.iter().copied().find(|v| ye.ends.contains(v))
            };
            let v0 = find_shared(e2, e0).ok_or_else(|| ComplexError::NotATriangle(name()))?;
            let v1 = edges[e0.0]
                .ends
                .iter()
                .copied()
                .find(|&v| v != v0)
                .ok_or_else(|| ComplexError::NotATriangle(name()))?;
            let v2 = edges[e2.0]
                .ends
                .iter()
                .copied()
                .find(|&v| v != v0)
                .ok_or_else(|| ComplexError::NotATriangle(name()))?;
            if !(edges[e1.0].ends.contains(&v1) && edges[e1.0].ends.contains(&v2)) || v1 == v2 {
                return Err(ComplexError::NotATriangle(name()));
            }
            let (l0, l1, l2) = (
                edges[e0.0].length,
                edges[e1.0].length,
                edges[e2.0].length,
            );
            let perimeter = l0 + l1 + l2;
            if perimeter >= bound {
                return Err(ComplexError::PerimeterBound(name(), perimeter, bound));
            }
            let max = l0.max(l1).max(l2);
            if 2.0 * max >= perimeter {
                return Err(ComplexError::TriangleInequality(name(), l0, l1, l2));
            }
            // angle at v0 between e0 (len l0) and e2 (len l2), opposite e1
            let angles = [
                model::comparison_angle(self.kappa, l1, l0, l2)?,
                model::comparison_angle(self.kappa, l2, l1, l0)?,
                model::comparison_angle(self.kappa, l0, l2, l1)?,
            ];
            for (slot, e) in [e0, e1, e2].into_iter().enumerate() {
                adjacency[e.0].push((FaceId(i), slot));
            }
            faces.push(Face {
                edges: [e0, e1, e2],
                vertices: [v0, v1, v2],
                angles,
            });
        }

        for (i, adj) in adjacency.iter().enumerate() {
            if adj.is_empty() {
                return Err(ComplexError::UnusedEdge(self.edge_names[i].clone()));
            }
        }

        let mut vertex_edges = vec![Vec::new(); self.vertex_names.len()];
        for (i, e) in edges.iter().enumerate() {
            for v in e.ends {
                vertex_edges[v.0].push(EdgeId(i));
            }
        }
        for list in &mut vertex_edges {
            list.sort();
        }

        // connectivity over vertices through edges
        if !self.vertex_names.is_empty() {
            let mut seen = vec![false; self.vertex_names.len()];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(v) = stack.pop() {
                for &e in &vertex_edges[v] {
                    for w in edges[e.0].ends {
                        if !seen[w.0] {
                            seen[w.0] = true;
                            stack.push(w.0);
                        }
                    }
                }
            }
            if seen.iter().any(|s| !s) {
                return Err(ComplexError::Disconnected);
            }
        }

        for seam in &self.seams {
            if !edge_path_connected(&edges, &seam.edges) {
                return Err(ComplexError::SeamNotConnected(seam.name.clone()));
            }
        }

        Ok(MetricComplex {
            kappa: self.kappa,
            vertex_names: self.vertex_names,
            edge_names: self.edge_names,
            face_names: self.face_names,
            edges,
            faces,
            adjacency,
            vertex_edges,
            seams: self.seams,
            base_points: self.base_points,
        })
    }
}

/// True when consecutive edges share a vertex (walking the path greedily).
fn edge_path_connected(edges: &[Edge], path: &[EdgeId]) -> bool {
    path.windows(2).all(|w| {
        let (a, b) = (&edges[w[0].0], &edges[w[1].0]);
        a.ends.iter().any(|v| b.ends.contains(v))
    })
}

/// A finding produced by an audit.
#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub location: String,
    pub kind: FindingKind,
    pub measured: f64,
    pub threshold: f64,
    pub witness: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FindingKind {
    Violation,
    Info,
}

/// Outcome of an audit: passed iff no findings of kind `Violation`.
#[derive(Debug, Clone, Default)]
pub struct AuditReport {
    pub findings: Vec<Finding>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        !self
            .findings
            .iter()
            .any(|f| f.kind == FindingKind::Violation)
    }

    pub fn violations(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.kind == FindingKind::Violation)
    }

    fn push(&mut self, location: String, kind: FindingKind, measured: f64, threshold: f64, witness: String) {
        self.findings.push(Finding {
            location,
            kind,
            measured,
            threshold,
            witness,
        });
    }

    pub fn merged(mut self, other: AuditReport) -> AuditReport {
        self.findings.extend(other.findings);
        self
    }
}

/// The link graph of a vertex: one node per incident edge-end, one arc per
/// incident face corner, weighted by the corner angle.
#[derive(Debug, Clone)]
pub struct LinkGraph {
    pub vertex: VertexId,
    /// Edge behind each node. Loop edges are rejected at build time, so each
    /// incident edge contributes exactly one end here.
    pub node_edges: Vec<EdgeId>,
    /// (node index, node index, angle, face behind the corner)
    pub arcs: Vec<(usize, usize, f64, FaceId)>,
}

impl LinkGraph {
    pub fn node_count(&self) -> usize {
        self.node_edges.len()
    }

    pub fn degree(&self, node: usize) -> usize {
        self.arcs
            .iter()
            .filter(|&&(a, b, _, _)| a == node || b == node)
            .count()
    }

    pub fn total_length(&self) -> f64 {
        self.arcs.iter().map(|&(_, _, w, _)| w).sum()
    }

    pub fn has_endpoint(&self) -> bool {
        (0..self.node_count()).any(|n| self.degree(n) < 2)
    }

    /// If the link is a single circle (connected, every node of degree 2),
    /// its total length.
    pub fn circle_length(&self) -> Option<f64> {
        if self.node_edges.is_empty() {
            return None;
        }
        if (0..self.node_count()).any(|n| self.degree(n) != 2) {
            return None;
        }
        if !self.is_connected() {
            return None;
        }
        Some(self.total_length())
    }

    fn is_connected(&self) -> bool {
        if self.node_edges.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(n) = stack.pop() {
            for &(a, b, _, _) in &self.arcs {
                for (x, y) in [(a, b), (b, a)] {
                    if x == n && !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Dijkstra from `source` to all nodes, optionally skipping one arc.
    fn shortest_paths(&self, source: usize, skip_arc: Option<usize>) -> Vec<f64> {
        let n = self.node_count();
        let mut dist = vec![f64::INFINITY; n];
        dist[source] = 0.0;
        let mut done = vec![false; n];
        // links are tiny; the quadratic scan beats a heap here
        for _ in 0..n {
            let mut u = None;
            let mut best = f64::INFINITY;
            for i in 0..n {
                if !done[i] && dist[i] < best {
                    best = dist[i];
                    u = Some(i);
                }
            }
            let Some(u) = u else { break };
            done[u] = true;
            for (k, &(a, b, w, _)) in self.arcs.iter().enumerate() {
                if skip_arc == Some(k) {
                    continue;
                }
                let other = if a == u {
                    b
                } else if b == u {
                    a
                } else {
                    continue;
                };
                if dist[u] + w < dist[other] {
                    dist[other] = dist[u] + w;
                }
            }
        }
        dist
    }

    /// Length of the shortest essential (non-contractible) loop: for each arc,
    /// the arc plus the shortest path between its endpoints avoiding it.
    /// `None` when the link is a forest.
    pub fn systole(&self) -> Option<f64> {
        let mut best = f64::INFINITY;
        for (k, &(a, b, w, _)) in self.arcs.iter().enumerate() {
            let d = self.shortest_paths(a, Some(k));
            if d[b].is_finite() {
                best = best.min(w + d[b]);
            }
        }
        best.is_finite().then_some(best)
    }

    /// Shortest link distance between the ends of two incident edges.
    pub fn distance_between_edges(&self, e1: EdgeId, e2: EdgeId) -> Option<f64> {
        let a = self.node_edges.iter().position(|&e| e == e1)?;
        let b = self.node_edges.iter().position(|&e| e == e2)?;
        let d = self.shortest_paths(a, None);
        d[b].is_finite().then(|| d[b])
    }
}

impl MetricComplex {
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0]
    }

    pub fn face(&self, f: FaceId) -> &Face {
        &self.faces[f.0]
    }

    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, &Edge)> {
        self.edges.iter().enumerate().map(|(i, e)| (EdgeId(i), e))
    }

    pub fn faces(&self) -> impl Iterator<Item = (FaceId, &Face)> {
        self.faces.iter().enumerate().map(|(i, f)| (FaceId(i), f))
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vertex_names.len()).map(VertexId)
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertex_names[v.0]
    }

    pub fn edge_name(&self, e: EdgeId) -> &str {
        &self.edge_names[e.0]
    }

    pub fn face_name(&self, f: FaceId) -> &str {
        &self.face_names[f.0]
    }

    pub fn vertex_by_name(&self, name: &str) -> Option<VertexId> {
        self.vertex_names.iter().position(|n| n == name).map(VertexId)
    }

    pub fn edge_by_name(&self, name: &str) -> Option<EdgeId> {
        self.edge_names.iter().position(|n| n == name).map(EdgeId)
    }

    /// Faces incident to an edge, each with the slot i such that
    /// `face.edges[i]` is this edge.
    pub fn faces_at_edge(&self, e: EdgeId) -> &[(FaceId, usize)] {
        &self.adjacency[e.0]
    }

    pub fn edges_at_vertex(&self, v: VertexId) -> &[EdgeId] {
        &self.vertex_edges[v.0]
    }

    pub fn seams(&self) -> &[Seam] {
        &self.seams
    }

    pub fn base_points(&self) -> &[(String, VertexId)] {
        &self.base_points
    }

    pub fn base_point(&self, name: &str) -> Option<VertexId> {
        self.base_points
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, v)| v)
    }

    /// Embed a face in the model plane (vertex 0 at the chart base, vertex 1
    /// along the x-axis, vertex 2 in the upper half).
    pub fn place_face(&self, f: FaceId) -> Result<[ModelPoint; 3], ModelError> {
        let face = &self.faces[f.0];
        let [a, b, c] = face.opposite_sides(&self.edges);
        // comparison_triangle sides (a, b, c) with angles opposite; place()
        // puts x at base, y at distance c, z at distance b: that is exactly
        // (v0, v1, v2) for sides a = |v1 v2|, b = |v0 v2|, c = |v0 v1|.
        let tri = model::comparison_triangle(self.kappa, a, b, c)?;
        tri.place()
    }

    /// The link graph of a vertex.
    pub fn link_at(&self, v: VertexId) -> LinkGraph {
        let node_edges: Vec<EdgeId> = self.vertex_edges[v.0].clone();
        let index_of = |e: EdgeId| node_edges.iter().position(|&x| x == e).unwrap();
        let mut arcs = Vec::new();
        for (fi, face) in self.faces.iter().enumerate() {
            if let Some(corner) = face.corner_of(v) {
                // the two face edges meeting at this corner
                let e_in = face.edges[(corner + 2) % 3];
                let e_out = face.edges[corner];
                arcs.push((
                    index_of(e_in),
                    index_of(e_out),
                    face.angles[corner],
                    FaceId(fi),
                ));
            }
        }
        LinkGraph {
            vertex: v,
            node_edges,
            arcs,
        }
    }

    /// Flags boundary structure: edges with fewer than two incident faces and
    /// link nodes of degree < 2 (links "with endpoints").
    pub fn check_completeness(&self) -> AuditReport {
        let mut report = AuditReport::default();
        for (i, adj) in self.adjacency.iter().enumerate() {
            if adj.len() < 2 {
                report.push(
                    format!("edge {}", self.edge_names[i]),
                    FindingKind::Violation,
                    adj.len() as f64,
                    2.0,
                    "edge has fewer than 2 incident faces".into(),
                );
            }
        }
        for v in 0..self.vertex_names.len() {
            let link = self.link_at(VertexId(v));
            for n in 0..link.node_count() {
                if link.degree(n) < 2 {
                    report.push(
                        format!("vertex {}", self.vertex_names[v]),
                        FindingKind::Violation,
                        link.degree(n) as f64,
                        2.0,
                        format!(
                            "link node of edge {} has degree < 2",
                            self.edge_names[link.node_edges[n].0]
                        ),
                    );
                }
            }
        }
        report
    }

    /// Condition (B): every vertex link must have essential loops of length
    /// ≥ 2π. Vertices whose links are forests pass vacuously.
    pub fn check_condition_b(&self, tol: f64) -> AuditReport {
        let mut report = AuditReport::default();
        let two_pi = 2.0 * std::f64::consts::PI;
        for v in 0..self.vertex_names.len() {
            let link = self.link_at(VertexId(v));
            if let Some(sys) = link.systole() {
                if sys < two_pi - tol {
                    report.push(
                        format!("vertex {}", self.vertex_names[v]),
                        FindingKind::Violation,
                        sys,
                        two_pi,
                        format!("link systole {sys:.12e} < 2π"),
                    );
                }
            }
        }
        report
    }

    /// The sides of an edge pair at their shared vertex: total corner angle of
    /// each face group spanning from one edge-end to the other in the link.
    ///
    /// Each returned value is L(Σ_c(F)) for one side F; the turn of the side
    /// is π minus it.
    pub fn sides_at(&self, c: VertexId, e_prev: EdgeId, e_next: EdgeId) -> Result<Vec<f64>, ComplexError> {
        let link = self.link_at(c);
        let a = link
            .node_edges
            .iter()
            .position(|&e| e == e_prev)
            .ok_or(ComplexError::PathNotConnected)?;
        let b = link
            .node_edges
            .iter()
            .position(|&e| e == e_next)
            .ok_or(ComplexError::PathNotConnected)?;
        if a == b {
            return Err(ComplexError::PathNotConnected);
        }
        // union-find over the remaining nodes; arcs joining a to b directly
        // form one-arc sides of their own
        let n = link.node_count();
        let mut comp: Vec<usize> = (0..n).collect();
        fn find(comp: &mut Vec<usize>, i: usize) -> usize {
            if comp[i] != i {
                let r = find(comp, comp[i]);
                comp[i] = r;
            }
            comp[i]
        }
        for &(x, y, _, _) in &link.arcs {
            if x == a || x == b || y == a || y == b {
                continue;
            }
            let (rx, ry) = (find(&mut comp, x), find(&mut comp, y));
            if rx != ry {
                comp[rx] = ry;
            }
        }
        let mut sides: HashMap<usize, f64> = HashMap::new();
        let mut direct = Vec::new();
        for &(x, y, w, _) in &link.arcs {
            let x_is_end = x == a || x == b;
            let y_is_end = y == a || y == b;
            match (x_is_end, y_is_end) {
                (true, true) => direct.push(w),
                (true, false) => *sides.entry(find(&mut comp, y)).or_insert(0.0) += w,
                (false, true) => *sides.entry(find(&mut comp, x)).or_insert(0.0) += w,
                (false, false) => {
                    *sides.entry(find(&mut comp, x)).or_insert(0.0) += w;
                }
            }
        }
        let mut out: Vec<f64> = sides.into_values().chain(direct).collect();
        out.sort_by(|p, q| p.partial_cmp(q).unwrap());
        Ok(out)
    }

    /// Condition (A) along seams: at every interior vertex of each path, for
    /// every pair of sides F_i ≠ F_j, the paired turn sum
    /// (π − L(Σ_c(F_i))) + (π − L(Σ_c(F_j))) must be ≤ tol.
    ///
    /// With no explicit paths, the declared seams are audited.
    pub fn check_condition_a(
        &self,
        edge_paths: Option<&[Seam]>,
        tol: f64,
    ) -> Result<AuditReport, ComplexError> {
        let mut report = AuditReport::default();
        let paths: Vec<&Seam> = match edge_paths {
            Some(p) => p.iter().collect(),
            None => self.seams.iter().collect(),
        };
        for seam in paths {
            if !edge_path_connected(&self.edges, &seam.edges) {
                return Err(ComplexError::SeamNotConnected(seam.name.clone()));
            }
            for w in seam.edges.windows(2) {
                let (e_prev, e_next) = (w[0], w[1]);
                let shared = self.edges[e_prev.0]
                    .ends
                    .iter()
                    .copied()
                    .find(|v| self.edges[e_next.0].ends.contains(v))
                    .ok_or(ComplexError::PathNotConnected)?;
                let sides = self.sides_at(shared, e_prev, e_next)?;
                for i in 0..sides.len() {
                    for j in (i + 1)..sides.len() {
                        let sum =
                            (std::f64::consts::PI - sides[i]) + (std::f64::consts::PI - sides[j]);
                        if sum > tol {
                            report.push(
                                format!(
                                    "seam {} vertex {}",
                                    seam.name,
                                    self.vertex_names[shared.0]
                                ),
                                FindingKind::Violation,
                                sum,
                                tol,
                                format!(
                                    "turn sum {sum:.12e} > 0 for sides with angles ({:.12}, {:.12})",
                                    sides[i], sides[j]
                                ),
                            );
                        }
                    }
                }
            }
        }
        Ok(report)
    }

    /// Conditions (A) and (B) in one report.
    pub fn audit_conditions(&self, tol: f64) -> Result<AuditReport, ComplexError> {
        Ok(self.check_condition_b(tol).merged(self.check_condition_a(None, tol)?))
    }

    /// Serialize to the complex text format. Re-parsing the output and
    /// serializing again is byte-identical (numbers use shortest round-trip
    /// decimal form).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("catk complex v1\n");
        let _ = writeln!(out, "kappa {}", fmt_f64(self.kappa));
        for name in &self.vertex_names {
            let _ = writeln!(out, "vertex {name}");
        }
        for (i, e) in self.edges.iter().enumerate() {
            let _ = writeln!(
                out,
                "edge {} {} {} {}",
                self.edge_names[i],
                self.vertex_names[e.ends[0].0],
                self.vertex_names[e.ends[1].0],
                fmt_f64(e.length)
            );
        }
        for (i, f) in self.faces.iter().enumerate() {
            let _ = writeln!(
                out,
                "face {} {} {} {}",
                self.face_names[i],
                self.edge_names[f.edges[0].0],
                self.edge_names[f.edges[1].0],
                self.edge_names[f.edges[2].0]
            );
        }
        for s in &self.seams {
            let mut line = format!("seam {}", s.name);
            for e in &s.edges {
                line.push(' ');
                line.push_str(&self.edge_names[e.0]);
            }
            out.push_str(&line);
            out.push('\n');
        }
        for (name, v) in &self.base_points {
            let _ = writeln!(out, "basepoint {} {}", name, self.vertex_names[v.0]);
        }
        out
    }

    /// Parse the complex text format produced by [`MetricComplex::to_text`].
    pub fn from_text(text: &str) -> Result<MetricComplex, ComplexError> {
        let mut kappa: Option<f64> = None;
        let mut builder: Option<ComplexBuilder> = None;
        let mut vertex_ids: HashMap<String, VertexId> = HashMap::new();
        let mut edge_ids: HashMap<String, EdgeId> = HashMap::new();
        let mut header_seen = false;
        let mut pending_seams: Vec<(usize, String, Vec<String>)> = Vec::new();
        let mut pending_bases: Vec<(usize, String, String)> = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            };
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.is_empty() {
                continue;
            }
            if !header_seen {
                if tokens != ["catk", "complex", "v1"] {
                    return Err(ComplexError::Parse(
                        lineno,
                        "expected header `catk complex v1`".into(),
                    ));
                }
                header_seen = true;
                continue;
            }
            let err = |msg: &str| ComplexError::Parse(lineno, msg.into());
            match tokens[0] {
                "kappa" => {
                    if tokens.len() != 2 {
                        return Err(err("kappa takes one value"));
                    }
                    let k: f64 = tokens[1].parse().map_err(|_| err("bad number"))?;
                    kappa = Some(k);
                    builder = Some(ComplexBuilder::new(k));
                }
                "vertex" => {
                    let b = builder.as_mut().ok_or_else(|| err("kappa must come first"))?;
                    if tokens.len() != 2 {
                        return Err(err("vertex takes one name"));
                    }
                    let id = b.vertex(tokens[1]);
                    if vertex_ids.insert(tokens[1].to_string(), id).is_some() {
                        return Err(ComplexError::DuplicateName(tokens[1].into()));
                    }
                }
                "edge" => {
                    let b = builder.as_mut().ok_or_else(|| err("kappa must come first"))?;
                    if tokens.len() != 5 {
                        return Err(err("edge takes: name end end length"));
                    }
                    let a = *vertex_ids
                        .get(tokens[2])
                        .ok_or_else(|| ComplexError::UnknownName(tokens[2].into()))?;
                    let c = *vertex_ids
                        .get(tokens[3])
                        .ok_or_else(|| ComplexError::UnknownName(tokens[3].into()))?;
                    let len: f64 = tokens[4].parse().map_err(|_| err("bad number"))?;
                    let id = b.edge_named(tokens[1], a, c, len);
                    if edge_ids.insert(tokens[1].to_string(), id).is_some() {
                        return Err(ComplexError::DuplicateName(tokens[1].into()));
                    }
                }
                "face" => {
                    let b = builder.as_mut().ok_or_else(|| err("kappa must come first"))?;
                    if tokens.len() != 5 {
                        return Err(err("face takes: name edge edge edge"));
                    }
                    let get = |n: &str| {
                        edge_ids
                            .get(n)
                            .copied()
                            .ok_or_else(|| ComplexError::UnknownName(n.into()))
                    };
                    b.face_named(tokens[1], get(tokens[2])?, get(tokens[3])?, get(tokens[4])?);
                }
                "seam" => {
                    if tokens.len() < 3 {
                        return Err(err("seam takes: name edge..."));
                    }
                    pending_seams.push((
                        lineno,
                        tokens[1].to_string(),
                        tokens[2..].iter().map(|t| t.to_string()).collect(),
                    ));
                }
                "basepoint" => {
                    if tokens.len() != 3 {
                        return Err(err("basepoint takes: name vertex"));
                    }
                    pending_bases.push((lineno, tokens[1].to_string(), tokens[2].to_string()));
                }
                other => return Err(err(&format!("unknown record `{other}`"))),
            }
        }
        let mut b = builder.ok_or(ComplexError::Parse(0, "missing kappa".into()))?;
        let _ = kappa;
        for (_, name, edge_names) in pending_seams {
            let mut ids = Vec::new();
            for en in edge_names {
                ids.push(
                    *edge_ids
                        .get(&en)
                        .ok_or(ComplexError::UnknownName(en.clone()))?,
                );
            }
            b.seam(name, ids);
        }
        for (_, name, vn) in pending_bases {
            let v = *vertex_ids
                .get(&vn)
                .ok_or(ComplexError::UnknownName(vn.clone()))?;
            b.base_point(name, v);
        }
        b.build()
    }
}

/// Shortest decimal form that parses back to the identical f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Description of one glued seam for [`glue_complexes`]: corresponding vertex
/// paths in the two complexes, identified in order.
#[derive(Debug, Clone)]
pub struct GluePairing {
    pub name: String,
    pub path_a: Vec<VertexId>,
    pub path_b: Vec<VertexId>,
}

/// Glue two complexes along isometric boundary paths. Paired path vertices are
/// identified in order; the connecting edges must exist uniquely on both sides
/// and agree in length within 1e-9. Each pairing becomes a named seam of the
/// result.
pub fn glue_complexes(
    a: &MetricComplex,
    b: &MetricComplex,
    pairings: &[GluePairing],
) -> Result<MetricComplex, ComplexError> {
    if a.kappa != b.kappa {
        return Err(ComplexError::GlueCurvature);
    }
    let unique_edge = |cx: &MetricComplex, u: VertexId, v: VertexId| -> Result<EdgeId, ComplexError> {
        let mut found = None;
        for &e in cx.edges_at_vertex(u) {
            if cx.edges[e.0].ends.contains(&v) {
                if found.is_some() {
                    return Err(ComplexError::GlueNoEdge(
                        cx.vertex_names[u.0].clone(),
                        cx.vertex_names[v.0].clone(),
                    ));
                }
                found = Some(e);
            }
        }
        found.ok_or_else(|| {
            ComplexError::GlueNoEdge(
                cx.vertex_names[u.0].clone(),
                cx.vertex_names[v.0].clone(),
            )
        })
    };

    // vertex identification map for b, and edge identification map
    let mut vmap_b: HashMap<VertexId, VertexId> = HashMap::new(); // b-vertex -> a-vertex
    let mut emap_b: HashMap<EdgeId, EdgeId> = HashMap::new();
    for pairing in pairings {
        if pairing.path_a.len() != pairing.path_b.len() {
            return Err(ComplexError::GlueLengthMismatch(
                pairing.path_a.len(),
                pairing.path_b.len(),
            ));
        }
        for (&va, &vb) in pairing.path_a.iter().zip(&pairing.path_b) {
            if let Some(&prev) = vmap_b.get(&vb) {
                if prev != va {
                    return Err(ComplexError::GlueNotInjective);
                }
            }
            vmap_b.insert(vb, va);
        }
        for (wa, wb) in pairing.path_a.windows(2).zip(pairing.path_b.windows(2)) {
            let ea = unique_edge(a, wa[0], wa[1])?;
            let eb = unique_edge(b, wb[0], wb[1])?;
            let diff = (a.edges[ea.0].length - b.edges[eb.0].length).abs();
            if diff > 1e-9 {
                return Err(ComplexError::GlueEdgeMismatch(diff));
            }
            emap_b.insert(eb, ea);
        }
    }

    let mut out = ComplexBuilder::new(a.kappa);
    let mut taken: HashMap<String, ()> = HashMap::new();
    let fresh = |taken: &mut HashMap<String, ()>, base: &str| -> String {
        let mut name = base.to_string();
        while taken.contains_key(&name) {
            name.push('\'');
        }
        taken.insert(name.clone(), ());
        name
    };

    for (i, name) in a.vertex_names.iter().enumerate() {
        let n = fresh(&mut taken, name);
        let id = out.vertex(n);
        debug_assert_eq!(id.0, i);
    }
    let mut b_vertex_new: Vec<Option<VertexId>> = vec![None; b.vertex_names.len()];
    for (i, name) in b.vertex_names.iter().enumerate() {
        if let Some(&va) = vmap_b.get(&VertexId(i)) {
            b_vertex_new[i] = Some(va);
        } else {
            let n = fresh(&mut taken, name);
            b_vertex_new[i] = Some(out.vertex(n));
        }
    }
    let mut taken_e: HashMap<String, ()> = HashMap::new();
    for (i, e) in a.edges.iter().enumerate() {
        let n = fresh(&mut taken_e, &a.edge_names[i]);
        let id = out.edge_named(n, e.ends[0], e.ends[1], e.length);
        debug_assert_eq!(id.0, i);
    }
    let mut b_edge_new: Vec<Option<EdgeId>> = vec![None; b.edges.len()];
    for (i, e) in b.edges.iter().enumerate() {
        if let Some(&ea) = emap_b.get(&EdgeId(i)) {
            b_edge_new[i] = Some(ea);
        } else {
            let n = fresh(&mut taken_e, &b.edge_names[i]);
            let ends = [
                b_vertex_new[e.ends[0].0].unwrap(),
                b_vertex_new[e.ends[1].0].unwrap(),
            ];
            b_edge_new[i] = Some(out.edge_named(n, ends[0], ends[1], e.length));
        }
    }
    let mut taken_f: HashMap<String, ()> = HashMap::new();
    for (i, f) in a.faces.iter().enumerate() {
        let n = fresh(&mut taken_f, &a.face_names[i]);
        out.face_named(n, f.edges[0], f.edges[1], f.edges[2]);
    }
    for (i, f) in b.faces.iter().enumerate() {
        let n = fresh(&mut taken_f, &b.face_names[i]);
        out.face_named(
            n,
            b_edge_new[f.edges[0].0].unwrap(),
            b_edge_new[f.edges[1].0].unwrap(),
            b_edge_new[f.edges[2].0].unwrap(),
        );
    }
    // carry over both seam sets, then register the glue seams
    for s in &a.seams {
        out.seam(s.name.clone(), s.edges.clone());
    }
    for s in &b.seams {
        out.seam(
            format!("{}'", s.name),
            s.edges.iter().map(|&e| b_edge_new[e.0].unwrap()).collect(),
        );
    }
    for pairing in pairings {
        let mut edges = Vec::new();
        for w in pairing.path_a.windows(2) {
            edges.push(unique_edge(a, w[0], w[1])?);
        }
        out.seam(pairing.name.clone(), edges);
    }
    for (name, v) in &a.base_points {
        out.base_point(name.clone(), *v);
    }
    for (name, v) in &b.base_points {
        out.base_point(format!("{name}'"), b_vertex_new[v.0].unwrap());
    }
    out.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    /// Unit square split along the diagonal into two right triangles.
    fn split_square() -> MetricComplex {
        let mut b = ComplexBuilder::new(0.0);
        let v: Vec<VertexId> = ["a", "b", "c", "d"].iter().map(|n| b.vertex(*n)).collect();
        let ab = b.edge(v[0], v[1], 1.0);
        let bc = b.edge(v[1], v[2], 1.0);
        let cd = b.edge(v[2], v[3], 1.0);
        let da = b.edge(v[3], v[0], 1.0);
        let diag = b.edge(v[0], v[2], 2.0_f64.sqrt());
        b.face(ab, bc, diag);
        b.face(cd, da, diag);
        b.build().unwrap()
    }

    fn book(pages: usize) -> MetricComplex {
        let mut b = ComplexBuilder::new(0.0);
        let s0 = b.vertex("s0");
        let s1 = b.vertex("s1");
        let spine = b.edge_named("spine", s0, s1, 1.0);
        for p in 0..pages {
            let tip = b.vertex(format!("tip{p}"));
            let e0 = b.edge(s0, tip, 1.0);
            let e1 = b.edge(s1, tip, 1.0);
            b.face(spine, e1, e0);
        }
        b.build().unwrap()
    }

    #[test]
    fn square_counts() {
        let cx = split_square();
        assert_eq!(cx.vertex_count(), 4);
        assert_eq!(cx.edge_count(), 5);
        assert_eq!(cx.face_count(), 2);
    }

    #[test]
    fn degenerate_face_rejected() {
        let mut b = ComplexBuilder::new(0.0);
        let v0 = b.vertex("a");
        let v1 = b.vertex("b");
        let v2 = b.vertex("c");
        let e0 = b.edge(v0, v1, 1.0);
        let e1 = b.edge(v1, v2, 1.0);
        let e2 = b.edge(v2, v0, 3.0);
        b.face(e0, e1, e2);
        assert!(matches!(
            b.build(),
            Err(ComplexError::TriangleInequality(_, _, _, _))
        ));
    }

    #[test]
    fn spherical_perimeter_bound_rejected() {
        let mut b = ComplexBuilder::new(1.0);
        let v0 = b.vertex("a");
        let v1 = b.vertex("b");
        let v2 = b.vertex("c");
        let s = (2.0 * PI + 0.1) / 3.0;
        let e0 = b.edge(v0, v1, s);
        let e1 = b.edge(v1, v2, s);
        let e2 = b.edge(v2, v0, s);
        b.face(e0, e1, e2);
        assert!(matches!(b.build(), Err(ComplexError::PerimeterBound(_, _, _))));
    }

    #[test]
    fn disconnected_rejected() {
        let mut b = ComplexBuilder::new(0.0);
        for part in 0..2 {
            let v0 = b.vertex(format!("a{part}"));
            let v1 = b.vertex(format!("b{part}"));
            let v2 = b.vertex(format!("c{part}"));
            let e0 = b.edge(v0, v1, 1.0);
            let e1 = b.edge(v1, v2, 1.0);
            let e2 = b.edge(v2, v0, 1.0);
            b.face(e0, e1, e2);
        }
        assert!(matches!(b.build(), Err(ComplexError::Disconnected)));
    }

    #[test]
    fn interior_vertex_of_flat_patch_has_circle_link() {
        // four right triangles around the center of a square: link is a circle
        // of total length 2π
        let mut b = ComplexBuilder::new(0.0);
        let center = b.vertex("o");
        let corners: Vec<VertexId> = (0..4).map(|i| b.vertex(format!("c{i}"))).collect();
        let spokes: Vec<EdgeId> = corners
            .iter()
            .map(|&c| b.edge(center, c, 1.0))
            .collect();
        let rims: Vec<EdgeId> = (0..4)
            .map(|i| b.edge(corners[i], corners[(i + 1) % 4], 2.0_f64.sqrt()))
            .collect();
        for i in 0..4 {
            b.face(spokes[i], rims[i], spokes[(i + 1) % 4]);
        }
        let cx = b.build().unwrap();
        let link = cx.link_at(VertexId(0));
        let total = link.circle_length().expect("link should be a circle");
        assert_abs_diff_eq!(total, 2.0 * PI, epsilon = 1e-12);
        let report = cx.check_condition_b(DEFAULT_AUDIT_TOL);
        assert!(report.passed(), "flat interior vertex passes: {report:?}");
        assert_abs_diff_eq!(link.systole().unwrap(), 2.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn single_face_vertex_link_is_one_arc() {
        let mut b = ComplexBuilder::new(0.0);
        let v0 = b.vertex("a");
        let v1 = b.vertex("b");
        let v2 = b.vertex("c");
        let e0 = b.edge(v0, v1, 1.0);
        let e1 = b.edge(v1, v2, 1.0);
        let e2 = b.edge(v2, v0, 1.0);
        b.face(e0, e1, e2);
        let cx = b.build().unwrap();
        let link = cx.link_at(VertexId(0));
        assert_eq!(link.arcs.len(), 1);
        assert!(link.has_endpoint());
        assert!(link.circle_length().is_none());
        let completeness = cx.check_completeness();
        let flagged_edges = completeness
            .violations()
            .filter(|f| f.location.starts_with("edge"))
            .count();
        assert_eq!(flagged_edges, 3);
    }

    #[test]
    fn book_of_three_spine_passes_completeness() {
        let cx = book(3);
        let spine = cx.edge_by_name("spine").unwrap();
        assert_eq!(cx.faces_at_edge(spine).len(), 3);
        let completeness = cx.check_completeness();
        // pages have free boundary edges, but the spine itself is fine
        assert!(completeness
            .violations()
            .all(|f| f.location != "edge spine"));
    }

    #[test]
    fn condition_a_two_sided_seam() {
        // two squares sharing a middle edge path a--b--c: straight seam in a
        // flat plane, both side angles π at the interior vertex
        let mut bld = ComplexBuilder::new(0.0);
        let a = bld.vertex("a");
        let m = bld.vertex("m");
        let c = bld.vertex("c");
        let up = bld.vertex("up");
        let dn = bld.vertex("dn");
        // a=(0,0), m=(1,0), c=(2,0), up=(1,1), dn=(1,-1)
        let am = bld.edge(a, m, 1.0);
        let mc = bld.edge(m, c, 1.0);
        let a_up = bld.edge(a, up, 2.0_f64.sqrt());
        let m_up = bld.edge(m, up, 1.0);
        let c_up = bld.edge(c, up, 2.0_f64.sqrt());
        let a_dn = bld.edge(a, dn, 2.0_f64.sqrt());
        let m_dn = bld.edge(m, dn, 1.0);
        let c_dn = bld.edge(c, dn, 2.0_f64.sqrt());
        bld.face(am, m_up, a_up);
        bld.face(mc, c_up, m_up);
        bld.face(am, m_dn, a_dn);
        bld.face(mc, c_dn, m_dn);
        bld.seam("mid", vec![am, mc]);
        let cx = bld.build().unwrap();
        let sides = cx.sides_at(m, am, mc).unwrap();
        assert_eq!(sides.len(), 2);
        for s in &sides {
            assert_abs_diff_eq!(*s, PI, epsilon = 1e-12);
        }
        let report = cx.check_condition_a(None, DEFAULT_AUDIT_TOL).unwrap();
        assert!(report.passed());
    }

    #[test]
    fn condition_a_arithmetic() {
        // bend the seam so one side reads π − 0.2 and the other π + 0.1:
        // paired turn sum +0.1 must be flagged; with π + 0.3 it passes.
        fn bent(upper_excess: f64) -> MetricComplex {
            let mut bld = ComplexBuilder::new(0.0);
            let a = bld.vertex("a");
            let m = bld.vertex("m");
            let c = bld.vertex("c");
            let up = bld.vertex("up");
            let dn = bld.vertex("dn");
            let am = bld.edge(a, m, 1.0);
            let mc = bld.edge(m, c, 1.0);
            // upper side: single triangle fan with prescribed total angle at m
            let half_up = (PI + upper_excess) / 2.0;
            let len_up = 0.7;
            let a_up = bld.edge(a, up, chord(1.0, len_up, half_up));
            let m_up = bld.edge(m, up, len_up);
            let c_up = bld.edge(c, up, chord(1.0, len_up, half_up));
            // lower side: total angle π − 0.2 at m
            let half_dn = (PI - 0.2) / 2.0;
            let len_dn = 0.7;
            let a_dn = bld.edge(a, dn, chord(1.0, len_dn, half_dn));
            let m_dn = bld.edge(m, dn, len_dn);
            let c_dn = bld.edge(c, dn, chord(1.0, len_dn, half_dn));
            bld.face(am, m_up, a_up);
            bld.face(mc, c_up, m_up);
            bld.face(am, m_dn, a_dn);
            bld.face(mc, c_dn, m_dn);
            bld.seam("mid", vec![am, mc]);
            bld.build().unwrap()
        }
        fn chord(r1: f64, r2: f64, angle: f64) -> f64 {
            model::side_from_angle(0.0, r1, r2, angle).unwrap()
        }
        let bad = bent(0.1); // sides π − 0.2 and π + 0.1: sum of turns = +0.1
        let report = bad.check_condition_a(None, DEFAULT_AUDIT_TOL).unwrap();
        assert!(!report.passed());
        let worst = report
            .violations()
            .map(|f| f.measured)
            .fold(f64::MIN, f64::max);
        assert_abs_diff_eq!(worst, 0.1, epsilon = 1e-9);

        let good = bent(0.3); // sides π − 0.2 and π + 0.3: sum −0.1 ≤ 0
        assert!(good.check_condition_a(None, DEFAULT_AUDIT_TOL).unwrap().passed());
    }

    #[test]
    fn glue_two_squares_into_rectangle() {
        let s1 = split_square();
        let s2 = split_square();
        let glued = glue_complexes(
            &s1,
            &s2,
            &[GluePairing {
                name: "weld".into(),
                path_a: vec![s1.vertex_by_name("b").unwrap(), s1.vertex_by_name("c").unwrap()],
                path_b: vec![s2.vertex_by_name("a").unwrap(), s2.vertex_by_name("d").unwrap()],
            }],
        )
        .unwrap();
        assert_eq!(glued.vertex_count(), 6);
        assert_eq!(glued.edge_count(), 9);
        assert_eq!(glued.face_count(), 4);
        let weld = glued
            .seams()
            .iter()
            .find(|s| s.name == "weld")
            .expect("glue seam registered");
        assert_eq!(weld.edges.len(), 1);
        assert_eq!(glued.faces_at_edge(weld.edges[0]).len(), 2);
    }

    #[test]
    fn glue_length_mismatch_rejected() {
        let s1 = split_square();
        let mut b = ComplexBuilder::new(0.0);
        let v0 = b.vertex("a");
        let v1 = b.vertex("b");
        let v2 = b.vertex("c");
        let e0 = b.edge(v0, v1, 1.1);
        let e1 = b.edge(v1, v2, 1.0);
        let e2 = b.edge(v2, v0, 1.0);
        b.face(e0, e1, e2);
        let other = b.build().unwrap();
        let res = glue_complexes(
            &s1,
            &other,
            &[GluePairing {
                name: "weld".into(),
                path_a: vec![s1.vertex_by_name("a").unwrap(), s1.vertex_by_name("b").unwrap()],
                path_b: vec![VertexId(0), VertexId(1)],
            }],
        );
        assert!(matches!(res, Err(ComplexError::GlueEdgeMismatch(_))));
    }

    #[test]
    fn text_round_trip_is_byte_identical() {
        let mut cx = split_square();
        cx.seams.push(Seam {
            name: "diag".into(),
            edges: vec![EdgeId(4)],
        });
        cx.base_points.push(("origin".into(), VertexId(0)));
        let text = cx.to_text();
        let parsed = MetricComplex::from_text(&text).unwrap();
        assert_eq!(parsed.to_text(), text);
        assert_eq!(parsed.vertex_count(), cx.vertex_count());
        assert_eq!(parsed.seams().len(), 1);
    }

    #[test]
    fn parse_rejects_unknown_names() {
        let text = "catk complex v1\nkappa 0\nvertex a\nedge e a zzz 1\n";
        assert!(matches!(
            MetricComplex::from_text(text),
            Err(ComplexError::UnknownName(_))
        ));
    }

    #[test]
    fn link_angles_match_per_face_recomputation() {
        let cx = split_square();
        for v in cx.vertex_ids() {
            let link = cx.link_at(v);
            for &(_, _, angle, f) in &link.arcs {
                let face = cx.face(f);
                let corner = face.corner_of(v).unwrap();
                let [a, b, c] = face.opposite_sides(&cx.edges);
                let sides = [a, b, c];
                let opp = sides[corner];
                let adj1 = sides[(corner + 1) % 3];
                let adj2 = sides[(corner + 2) % 3];
                let expect = model::comparison_angle(cx.kappa(), opp, adj1, adj2).unwrap();
                assert_abs_diff_eq!(angle, expect, epsilon = 1e-10);
            }
        }
    }
}
