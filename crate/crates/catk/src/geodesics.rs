//! Intrinsic shortest paths on metric complexes and the ambient-space
//! abstraction used by the ruled-surface engine.
//!
//! A query point on a complex is a face id plus barycentric coordinates.
//! Shortest paths run in two phases: a Steiner-refined graph gives an upper
//! bound and a topology (which faces the path crosses), then the face strip is
//! developed into the model plane and the crossing parameters are taken from
//! the straightened chord (with an exact per-crossing fallback when the chord
//! leaves the strip). Paths through vertices survive straightening only when
//! both link sides measure at least π; otherwise the path slides off through
//! the shorter side.

use crate::complex::{EdgeId, FaceId, MetricComplex, VertexId};
use crate::model::{self, ModelPoint};
use nalgebra::Vector3;
use rayon::prelude::*;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, RwLock};
use thiserror::Error;

/// Barycentric sum / nonnegativity slack for surface points.
pub const BARY_TOL: f64 = 1e-12;
/// Barycentric coordinates below this are treated as exactly on the boundary.
const SNAP_TOL: f64 = 1e-9;
/// A crossing parameter this close to an edge end is converted to a vertex
/// passage during straightening.
const VERTEX_SNAP: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum GeodesicError {
    #[error("barycentric coordinates invalid: {0:?}")]
    BadBarycentric([f64; 3]),
    #[error("face id out of range")]
    BadFace,
    #[error("query points lie on different complexes or charts")]
    Mismatch,
    #[error("straightening did not stabilize within the sweep budget")]
    Budget,
    #[error("metric sphere of radius {0} exceeds the supported star region")]
    RadiusTooLarge(f64),
    #[error("metric sphere touches the complex boundary")]
    BoundaryTouched,
    #[error("base point kind not supported for this operation")]
    UnsupportedBase,
    #[error("cycle enumeration exceeded its budget")]
    CycleBudget,
    #[error(transparent)]
    Model(#[from] model::ModelError),
}

/// A point on a complex: a face plus barycentric coordinates.
///
/// The convention ties barycentric coordinates to geodesics of the κ-plane:
/// p = γ(v0, γ(v1, v2, b2/(b1+b2)), 1−b0) where γ(x, y, t) is the constant
/// speed geodesic from x to y. For κ = 0 this is the affine barycentric map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub face: FaceId,
    pub bary: [f64; 3],
}

impl SurfacePoint {
    pub fn new(face: FaceId, bary: [f64; 3]) -> Result<Self, GeodesicError> {
        let sum: f64 = bary.iter().sum();
        if bary.iter().any(|&b| !(b >= -BARY_TOL) || !b.is_finite()) || (sum - 1.0).abs() > BARY_TOL
        {
            return Err(GeodesicError::BadBarycentric(bary));
        }
        let mut b = bary.map(|x| x.max(0.0));
        let s: f64 = b.iter().sum();
        for x in &mut b {
            *x /= s;
        }
        Ok(SurfacePoint { face, bary: b })
    }

    /// The corner point of a face.
    pub fn at_corner(face: FaceId, corner: usize) -> Self {
        let mut bary = [0.0; 3];
        bary[corner] = 1.0;
        SurfacePoint { face, bary }
    }

    pub fn centroid(face: FaceId) -> Self {
        SurfacePoint {
            face,
            bary: [1.0 / 3.0; 3],
        }
    }
}

/// Face-free description of where a surface point sits, used for equality
/// tests across faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CanonicalPoint {
    Vertex(VertexId),
    /// Edge interior; parameter measured from `edge.ends[0]` in [0,1].
    Edge(EdgeId, f64),
    FaceInterior(FaceId, [f64; 3]),
}

/// Classify a surface point as a vertex, edge-interior, or face-interior
/// point, snapping barycentric coordinates below 1e-9.
pub fn canonicalize(cx: &MetricComplex, p: &SurfacePoint) -> CanonicalPoint {
    let face = cx.face(p.face);
    let zero: Vec<usize> = (0..3).filter(|&i| p.bary[i] <= SNAP_TOL).collect();
    match zero.len() {
        2 => {
            let corner = (0..3).find(|i| !zero.contains(i)).unwrap();
            CanonicalPoint::Vertex(face.vertices[corner])
        }
        1 => {
            // the point lies on the face edge opposite... the zero coordinate
            // belongs to the corner NOT on that edge; edges[i] joins corners i
            // and i+1, so zero at corner z means the edge is edges[(z+1)%3].
            let z = zero[0];
            let slot = (z + 1) % 3;
            let e = face.edges[slot];
            // parameter along the face's edge direction: from vertices[slot]
            // to vertices[slot+1]
            let w = p.bary[(slot + 1) % 3] / (p.bary[slot] + p.bary[(slot + 1) % 3]);
            let from = face.vertices[slot];
            let u = if cx.edge(e).ends[0] == from { w } else { 1.0 - w };
            CanonicalPoint::Edge(e, u)
        }
        _ => CanonicalPoint::FaceInterior(p.face, p.bary),
    }
}

/// Whether two surface points name the same point of the complex, comparing
/// canonical forms; `tol` is a length tolerance.
pub fn points_coincide(cx: &MetricComplex, a: &SurfacePoint, b: &SurfacePoint, tol: f64) -> bool {
    use CanonicalPoint::*;
    match (canonicalize(cx, a), canonicalize(cx, b)) {
        (Vertex(u), Vertex(v)) => u == v,
        (Edge(e1, u1), Edge(e2, u2)) => e1 == e2 && (u1 - u2).abs() * cx.edge(e1).length <= tol,
        (FaceInterior(f1, _), FaceInterior(f2, _)) if f1 == f2 => {
            let chart = FaceChart::new(cx, f1);
            model::distance(&chart.bary_to_chart(a.bary), &chart.bary_to_chart(b.bary))
                .map(|d| d <= tol)
                .unwrap_or(false)
        }
        // a vertex can also meet an edge end when parameters snap differently
        (Vertex(v), Edge(e, u)) | (Edge(e, u), Vertex(v)) => {
            let len = cx.edge(e).length;
            (cx.edge(e).ends[0] == v && u * len <= tol)
                || (cx.edge(e).ends[1] == v && (1.0 - u) * len <= tol)
        }
        _ => false,
    }
}

/// A face developed into the κ-plane, with chart positions for its corners.
#[derive(Debug, Clone)]
pub struct FaceChart {
    pub kappa: f64,
    pub pts: [ModelPoint; 3],
    pub vids: [VertexId; 3],
}

impl FaceChart {
    pub fn new(cx: &MetricComplex, f: FaceId) -> Self {
        let pts = cx
            .place_face(f)
            .expect("faces are validated at build time");
        FaceChart {
            kappa: cx.kappa(),
            pts,
            vids: cx.face(f).vertices,
        }
    }

    pub fn vertex(&self, v: VertexId) -> ModelPoint {
        let i = self
            .vids
            .iter()
            .position(|&w| w == v)
            .expect("vertex belongs to this face");
        self.pts[i]
    }

    pub fn bary_to_chart(&self, b: [f64; 3]) -> ModelPoint {
        let s = b[1] + b[2];
        if s <= 0.0 {
            return self.pts[0];
        }
        let q = model::geodesic_point(&self.pts[1], &self.pts[2], b[2] / s)
            .expect("face charts stay within one model plane");
        model::geodesic_point(&self.pts[0], &q, s).expect("face charts stay within one model plane")
    }

    /// Invert `bary_to_chart` for a chart point inside (or on) the triangle.
    pub fn chart_to_bary(&self, p: &ModelPoint) -> [f64; 3] {
        let [a, b, c] = &self.pts;
        let bary = if self.kappa == 0.0 {
            // affine solve in the plane
            let ([ax, ay, _], [bx, by, _], [cx, cy, _]) = (a.coords(), b.coords(), c.coords());
            let [px, py, _] = p.coords();
            let (ux, uy) = (bx - ax, by - ay);
            let (vx, vy) = (cx - ax, cy - ay);
            let det = ux * vy - uy * vx;
            let b1 = ((px - ax) * vy - (py - ay) * vx) / det;
            let b2 = (ux * (py - ay) - uy * (px - ax)) / det;
            [1.0 - b1 - b2, b1, b2]
        } else {
            let d_ap = model::distance(a, p).expect("same chart");
            let scale = 1.0 / self.kappa.abs().sqrt();
            if d_ap < 1e-13 * (1.0 + scale) {
                [1.0, 0.0, 0.0]
            } else {
                // geodesics are central plane sections in both curved charts;
                // intersect plane(a, p) with plane(b, c)
                let n1 = Vector3::from(a.coords()).cross(&Vector3::from(p.coords()));
                let n2 = Vector3::from(b.coords()).cross(&Vector3::from(c.coords()));
                let d = n1.cross(&n2);
                let q = if self.kappa > 0.0 {
                    let cand1 = ModelPoint::from_ray(self.kappa, d.into()).expect("nonzero ray");
                    let cand2 = ModelPoint::from_ray(self.kappa, (-d).into()).expect("nonzero ray");
                    // pick the intersection lying on the arc b..c
                    let on_arc = |q: &ModelPoint| {
                        let bc = model::distance(b, c).unwrap();
                        let s = model::distance(b, q).unwrap() + model::distance(q, c).unwrap();
                        (s - bc).abs()
                    };
                    if on_arc(&cand1) <= on_arc(&cand2) {
                        cand1
                    } else {
                        cand2
                    }
                } else {
                    ModelPoint::from_ray(self.kappa, d.into())
                        .expect("interior chart rays stay timelike")
                };
                let w = model::distance(b, &q).expect("same chart")
                    / model::distance(b, c).expect("same chart");
                let s_frac = d_ap / model::distance(a, &q).expect("same chart");
                [1.0 - s_frac, s_frac * (1.0 - w), s_frac * w]
            }
        };
        let mut out = bary.map(|x| x.max(0.0));
        let sum: f64 = out.iter().sum();
        for x in &mut out {
            *x /= sum;
        }
        out
    }

    /// Chart position of an edge point; `u` measured from `edge.ends[0]`.
    pub fn edge_point(&self, cx: &MetricComplex, e: EdgeId, u: f64) -> ModelPoint {
        let ends = cx.edge(e).ends;
        let p0 = self.vertex(ends[0]);
        let p1 = self.vertex(ends[1]);
        model::geodesic_point(&p0, &p1, u).expect("edge inside one face chart")
    }
}

/// Express an edge point as a surface point in the first incident face.
pub fn edge_surface_point(cx: &MetricComplex, e: EdgeId, u: f64) -> SurfacePoint {
    let (f, slot) = cx.faces_at_edge(e)[0];
    let face = cx.face(f);
    let w = if face.vertices[slot] == cx.edge(e).ends[0] {
        u
    } else {
        1.0 - u
    };
    let mut bary = [0.0; 3];
    bary[slot] = 1.0 - w;
    bary[(slot + 1) % 3] = w;
    SurfacePoint { face: f, bary }
}

/// Express a complex vertex as a surface point in some incident face.
pub fn vertex_surface_point(cx: &MetricComplex, v: VertexId) -> SurfacePoint {
    let e = cx.edges_at_vertex(v)[0];
    let (f, _) = cx.faces_at_edge(e)[0];
    let corner = cx.face(f).corner_of(v).expect("incident face contains v");
    SurfacePoint::at_corner(f, corner)
}

/// A polyline path on a complex: successive points plus the face carrying
/// each segment.
#[derive(Debug, Clone)]
pub struct PathOnComplex {
    pub points: Vec<SurfacePoint>,
    /// Face developed for segment i (between points i and i+1).
    pub faces: Vec<FaceId>,
    pub seg_lengths: Vec<f64>,
    pub length: f64,
}

impl PathOnComplex {
    /// The point at arc length `s` from the start.
    pub fn point_at(&self, cx: &MetricComplex, s: f64) -> SurfacePoint {
        if self.points.len() == 1 || s <= 0.0 {
            return self.points[0];
        }
        let mut acc = 0.0;
        for (i, &seg) in self.seg_lengths.iter().enumerate() {
            if s <= acc + seg || i + 1 == self.seg_lengths.len() {
                let t = if seg > 0.0 {
                    ((s - acc) / seg).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let chart = FaceChart::new(cx, self.faces[i]);
                let a = chart_position(cx, &chart, &self.points[i]);
                let b = chart_position(cx, &chart, &self.points[i + 1]);
                let p = model::geodesic_point(&a, &b, t).expect("segment within one chart");
                let bary = chart.chart_to_bary(&p);
                return SurfacePoint {
                    face: self.faces[i],
                    bary,
                };
            }
            acc += seg;
        }
        *self.points.last().unwrap()
    }
}

/// Chart position of a surface point developed into the chart of `chart`'s
/// face; the point must lie in that face's closure.
fn chart_position(cx: &MetricComplex, chart: &FaceChart, p: &SurfacePoint) -> ModelPoint {
    match canonicalize(cx, p) {
        CanonicalPoint::Vertex(v) => chart.vertex(v),
        CanonicalPoint::Edge(e, u) => chart.edge_point(cx, e, u),
        CanonicalPoint::FaceInterior(f, bary) => {
            debug_assert_eq!(cx.face(f).vertices, chart.vids, "point outside chart face");
            chart.bary_to_chart(bary)
        }
    }
}

/// Tuning knobs for the shortest-path solver.
#[derive(Debug, Clone)]
pub struct PathOptions {
    /// Steiner points per edge in the first graph phase.
    pub steiner: usize,
    /// Times the Steiner density may double when the upper bound has not
    /// stabilized.
    pub doublings: usize,
    /// Maximum relaxation sweeps on one run of crossings.
    pub max_sweeps: usize,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions {
            steiner: 8,
            doublings: 3,
            max_sweeps: 2000,
        }
    }
}

// ---------------------------------------------------------------------------
// Steiner graph phase
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum NodeKind {
    Vertex(VertexId),
    EdgePt(EdgeId, f64),
    /// A face-interior query point; all its arcs stay within one face.
    FacePt,
}

struct SteinerGraph {
    nodes: Vec<NodeKind>,
    adj: Vec<Vec<(u32, f64, FaceId)>>,
    query_nodes: Vec<usize>,
}

fn build_steiner_graph(cx: &MetricComplex, k: usize, queries: &[SurfacePoint]) -> SteinerGraph {
    let mut nodes: Vec<NodeKind> = (0..cx.vertex_count())
        .map(|v| NodeKind::Vertex(VertexId(v)))
        .collect();
    // per edge: sorted list of (param, node index) including both ends
    let mut on_edge: Vec<Vec<(f64, usize)>> = Vec::with_capacity(cx.edge_count());
    for (e, edge) in cx.edges() {
        let mut list = vec![(0.0, edge.ends[0].0), (1.0, edge.ends[1].0)];
        for j in 1..=k {
            let u = j as f64 / (k + 1) as f64;
            nodes.push(NodeKind::EdgePt(e, u));
            list.push((u, nodes.len() - 1));
        }
        list.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        on_edge.push(list);
    }
    let mut per_face_query: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut query_nodes = Vec::with_capacity(queries.len());
    for q in queries.iter() {
        let node = match canonicalize(cx, q) {
            CanonicalPoint::Vertex(v) => v.0,
            CanonicalPoint::Edge(e, u) => {
                nodes.push(NodeKind::EdgePt(e, u));
                let id = nodes.len() - 1;
                on_edge[e.0].push((u, id));
                on_edge[e.0].sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                id
            }
            CanonicalPoint::FaceInterior(f, _) => {
                nodes.push(NodeKind::FacePt);
                per_face_query.entry(f.0).or_default().push(nodes.len() - 1);
                nodes.len() - 1
            }
        };
        query_nodes.push(node);
    }

    let mut adj: Vec<Vec<(u32, f64, FaceId)>> = vec![Vec::new(); nodes.len()];
    let queries_by_node: HashMap<usize, usize> = query_nodes
        .iter()
        .enumerate()
        .map(|(qi, &n)| (n, qi))
        .collect();
    for (f, face) in cx.faces() {
        let chart = FaceChart::new(cx, f);
        let mut members: Vec<(usize, ModelPoint)> = Vec::new();
        for corner in 0..3 {
            members.push((face.vertices[corner].0, chart.pts[corner]));
        }
        for &e in &face.edges {
            for &(u, n) in &on_edge[e.0] {
                if matches!(nodes[n], NodeKind::EdgePt(_, _)) {
                    members.push((n, chart.edge_point(cx, e, u)));
                }
            }
        }
        if let Some(qs) = per_face_query.get(&f.0) {
            for &n in qs {
                let qi = queries_by_node[&n];
                members.push((n, chart.bary_to_chart(queries[qi].bary)));
            }
        }
        for i in 0..members.len() {
            for j in (i + 1)..members.len() {
                let d = model::distance(&members[i].1, &members[j].1)
                    .expect("face chart is one model plane");
                adj[members[i].0].push((members[j].0 as u32, d, f));
                adj[members[j].0].push((members[i].0 as u32, d, f));
            }
        }
    }
    SteinerGraph {
        nodes,
        adj,
        query_nodes,
    }
}

#[derive(PartialEq)]
struct HeapItem(f64, u32);
impl Eq for HeapItem {}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // reversed for a min-heap; ties broken by node id for determinism
        other
            .0
            .partial_cmp(&self.0)
            .unwrap()
            .then_with(|| other.1.cmp(&self.1))
    }
}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra with predecessor tracking; returns (node path, face per hop).
fn graph_shortest(
    g: &SteinerGraph,
    source: usize,
    target: usize,
) -> Option<(Vec<usize>, Vec<FaceId>, f64)> {
    let n = g.nodes.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred: Vec<Option<(usize, FaceId)>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapItem(0.0, source as u32));
    while let Some(HeapItem(d, u)) = heap.pop() {
        let u = u as usize;
        if d > dist[u] {
            continue;
        }
        if u == target {
            break;
        }
        for &(v, w, f) in &g.adj[u] {
            let v = v as usize;
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = Some((u, f));
                heap.push(HeapItem(nd, v as u32));
            }
        }
    }
    if !dist[target].is_finite() {
        return None;
    }
    let mut path = vec![target];
    let mut faces = Vec::new();
    let mut cur = target;
    while let Some((p, f)) = pred[cur] {
        faces.push(f);
        path.push(p);
        cur = p;
    }
    path.reverse();
    faces.reverse();
    Some((path, faces, dist[target]))
}

// ---------------------------------------------------------------------------
// Strip straightening phase
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Waypoint {
    Fixed(SurfacePoint),
    Cross { edge: EdgeId, u: f64 },
    AtVertex(VertexId),
}

#[derive(Debug, Clone)]
struct Strip {
    way: Vec<Waypoint>,
    faces: Vec<FaceId>,
}

impl Strip {
    fn chart_pos(&self, cx: &MetricComplex, chart: &FaceChart, i: usize) -> ModelPoint {
        match &self.way[i] {
            Waypoint::Fixed(p) => chart_position(cx, chart, p),
            Waypoint::Cross { edge, u } => chart.edge_point(cx, *edge, *u),
            Waypoint::AtVertex(v) => chart.vertex(*v),
        }
    }

    fn seg_length(&self, cx: &MetricComplex, charts: &[FaceChart], i: usize) -> f64 {
        let chart = &charts[i];
        let a = self.chart_pos(cx, chart, i);
        let b = self.chart_pos(cx, chart, i + 1);
        model::distance(&a, &b).expect("segment in one chart")
    }

    fn length(&self, cx: &MetricComplex, charts: &[FaceChart]) -> f64 {
        (0..self.faces.len())
            .map(|i| self.seg_length(cx, charts, i))
            .sum()
    }

    fn charts(&self, cx: &MetricComplex) -> Vec<FaceChart> {
        self.faces.iter().map(|&f| FaceChart::new(cx, f)).collect()
    }
}

/// Minimize f over [lo, hi] by golden-section; also checks the bracket ends.
pub(crate) fn golden_min(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, iters: usize) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let xm = 0.5 * (a + b);
    let fm = f(xm);
    let mut best = (xm, fm);
    for (x, v) in [(lo, f(lo)), (hi, f(hi))] {
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// Drop crossings that separate the same face from itself and collapse
/// consecutive crossings of one edge (a detour into a face and straight back).
fn normalize_strip(strip: &mut Strip) {
    loop {
        let mut changed = false;
        let mut i = 1;
        while i + 1 < strip.way.len() {
            let spurious = matches!(strip.way[i], Waypoint::Cross { .. })
                && strip.faces[i - 1] == strip.faces[i];
            if spurious {
                strip.way.remove(i);
                strip.faces.remove(i);
                changed = true;
            } else {
                i += 1;
            }
        }
        let mut j = 1;
        while j + 2 < strip.way.len() {
            let repeat = matches!(
                (&strip.way[j], &strip.way[j + 1]),
                (Waypoint::Cross { edge: a, .. }, Waypoint::Cross { edge: b, .. }) if a == b
            );
            if repeat {
                strip.way.remove(j + 1);
                strip.faces.remove(j);
                changed = true;
            } else {
                j += 1;
            }
        }
        if !changed {
            break;
        }
    }
}

/// One run of crossings developed into a common chart: the anchors before and
/// after the run, plus the developed endpoint pair of every crossed edge.
struct DevRun {
    start: ModelPoint,
    end: ModelPoint,
    portals: Vec<(ModelPoint, ModelPoint)>,
}

/// Develop the faces spanned by crossings `i0..=i1` into the chart of the
/// first face, gluing each successive face across the crossed edge.
fn develop_run(
    strip: &Strip,
    cx: &MetricComplex,
    charts: &[FaceChart],
    i0: usize,
    i1: usize,
) -> Result<DevRun, GeodesicError> {
    let m = i1 - i0 + 1;
    let mut dev: Vec<Option<model::Isometry>> = vec![None];
    let mut portals = Vec::with_capacity(m);
    for k in 0..m {
        let Waypoint::Cross { edge, .. } = strip.way[i0 + k] else {
            unreachable!("run contains only crossings");
        };
        let chart_prev = &charts[i0 - 1 + k];
        let chart_next = &charts[i0 + k];
        let ends = cx.edge(edge).ends;
        let place = |iso: &Option<model::Isometry>, p: &ModelPoint| -> Result<ModelPoint, GeodesicError> {
            Ok(match iso {
                Some(t) => t.apply(p)?,
                None => p.clone(),
            })
        };
        let prev_iso = &dev[k];
        let dst0 = place(prev_iso, &chart_prev.vertex(ends[0]))?;
        let dst1 = place(prev_iso, &chart_prev.vertex(ends[1]))?;
        let third = |f: FaceId| {
            cx.face(f)
                .vertices
                .iter()
                .copied()
                .find(|v| *v != ends[0] && *v != ends[1])
                .expect("a face has a vertex off each of its edges")
        };
        let w_dst = place(prev_iso, &chart_prev.vertex(third(strip.faces[i0 - 1 + k])))?;
        let src0 = chart_next.vertex(ends[0]);
        let src1 = chart_next.vertex(ends[1]);
        let w_src = chart_next.vertex(third(strip.faces[i0 + k]));
        let iso = model::develop_across((&src0, &src1), (&dst0, &dst1), &w_src, &w_dst)?;
        dev.push(Some(iso));
        portals.push((dst0, dst1));
    }
    let start = strip.chart_pos(cx, &charts[i0 - 1], i0 - 1);
    let end_chart = strip.chart_pos(cx, &charts[i1], i1 + 1);
    let end = match &dev[m] {
        Some(t) => t.apply(&end_chart)?,
        None => end_chart,
    };
    Ok(DevRun {
        start,
        end,
        portals,
    })
}

/// Intersection of the chords (s, e) and (a, b), as fractional parameters
/// along each, plus how far the hit sits off each arc (zero when the chords
/// genuinely cross; the planar case solves exactly and reports zero).
struct CrossHit {
    t: f64,
    u: f64,
    off_chord: f64,
    off_portal: f64,
}

fn geodesic_cross(
    kappa: f64,
    s: &ModelPoint,
    e: &ModelPoint,
    a: &ModelPoint,
    b: &ModelPoint,
) -> Option<CrossHit> {
    if kappa == 0.0 {
        let [sx, sy, _] = s.coords();
        let [ex, ey, _] = e.coords();
        let [ax, ay, _] = a.coords();
        let [bx, by, _] = b.coords();
        let (dx, dy) = (ex - sx, ey - sy);
        let (px, py) = (bx - ax, by - ay);
        let det = dx * (-py) - (-px) * dy;
        let scale = (dx.abs() + dy.abs()) * (px.abs() + py.abs());
        if det.abs() <= scale * 1e-14 {
            return None;
        }
        let (rx, ry) = (ax - sx, ay - sy);
        let t = (rx * (-py) - (-px) * ry) / det;
        let u = (dx * ry - dy * rx) / det;
        Some(CrossHit {
            t,
            u,
            off_chord: 0.0,
            off_portal: 0.0,
        })
    } else {
        let vs = Vector3::from(s.coords());
        let ve = Vector3::from(e.coords());
        let va = Vector3::from(a.coords());
        let vb = Vector3::from(b.coords());
        let n1 = vs.cross(&ve);
        let n2 = va.cross(&vb);
        let dir = n1.cross(&n2);
        if dir.norm() <= 1e-14 * n1.norm().max(1e-300) * n2.norm().max(1e-300) {
            return None;
        }
        let d_se = model::distance(s, e).ok()?;
        let d_ab = model::distance(a, b).ok()?;
        let mut best: Option<CrossHit> = None;
        let mut consider = |cand: ModelPoint| {
            let (Ok(dsx), Ok(dxe), Ok(dax), Ok(dxb)) = (
                model::distance(s, &cand),
                model::distance(&cand, e),
                model::distance(a, &cand),
                model::distance(&cand, b),
            ) else {
                return;
            };
            let hit = CrossHit {
                t: if d_se > 0.0 { dsx / d_se } else { 0.0 },
                u: if d_ab > 0.0 { dax / d_ab } else { 0.0 },
                off_chord: dsx + dxe - d_se,
                off_portal: dax + dxb - d_ab,
            };
            let better = match &best {
                Some(cur) => hit.off_chord + hit.off_portal < cur.off_chord + cur.off_portal,
                None => true,
            };
            if better {
                best = Some(hit);
            }
        };
        if let Ok(c) = ModelPoint::from_ray(kappa, dir.into()) {
            consider(c);
        }
        if kappa > 0.0 {
            if let Ok(c) = ModelPoint::from_ray(kappa, (-dir).into()) {
                consider(c);
            }
        }
        best
    }
}

/// Crossing parameters read off the developed chord, when it threads every
/// portal in order within the portal segments.
fn chord_params(kappa: f64, run: &DevRun) -> Option<Vec<f64>> {
    let d_se = model::distance(&run.start, &run.end).ok()?;
    if d_se <= 1e-15 {
        return None;
    }
    if kappa > 0.0 && d_se >= model::model_diameter(kappa) - model::ANTIPODAL_TOL {
        return None;
    }
    let mut t_prev = -1e-9;
    let mut us = Vec::with_capacity(run.portals.len());
    for (a, b) in &run.portals {
        let hit = geodesic_cross(kappa, &run.start, &run.end, a, b)?;
        let d_ab = model::distance(a, b).ok()?;
        if hit.off_portal > 1e-9 * (1.0 + d_ab) || hit.off_chord > 1e-9 * (1.0 + d_se) {
            return None;
        }
        if !(-1e-9..=1.0 + 1e-9).contains(&hit.u) || !(-1e-9..=1.0 + 1e-9).contains(&hit.t) {
            return None;
        }
        if hit.t < t_prev - 1e-9 {
            return None;
        }
        t_prev = hit.t;
        us.push(hit.u.clamp(0.0, 1.0));
    }
    Some(us)
}

/// Exact single-crossing update: the best position on portal `(a, b)` between
/// the fixed neighbors, via reflection of one neighbor across the portal.
fn exact_update(
    kappa: f64,
    p_prev: &ModelPoint,
    p_next: &ModelPoint,
    a: &ModelPoint,
    b: &ModelPoint,
    u_cur: f64,
) -> f64 {
    let objective = |u: f64| -> f64 {
        let x = model::geodesic_point(a, b, u).expect("portal point");
        model::distance(p_prev, &x).unwrap_or(f64::INFINITY)
            + model::distance(&x, p_next).unwrap_or(f64::INFINITY)
    };
    let mut cands = vec![0.0, 1.0, u_cur];
    let mut reflected = false;
    if let Ok(r) = model::Isometry::reflection(a, b) {
        if let Ok(q) = r.apply(p_next) {
            if let Some(hit) = geodesic_cross(kappa, p_prev, &q, a, b) {
                let d_ab = model::distance(a, b).unwrap_or(0.0);
                if kappa == 0.0 || hit.off_portal <= 1e-9 * (1.0 + d_ab) {
                    cands.push(hit.u.clamp(0.0, 1.0));
                    reflected = true;
                }
            }
        }
    }
    if !reflected {
        cands.push(golden_min(objective, 0.0, 1.0, 48).0);
    }
    let mut best = (u_cur, objective(u_cur));
    for &u in &cands {
        let v = objective(u);
        if v < best.1 {
            best = (u, v);
        }
    }
    best.0
}

/// Cyclic exact coordinate descent over one run's crossing parameters.
/// Breaks early when a parameter reaches an edge end (vertex snapping will
/// restructure the strip) and errs only on genuine non-convergence.
fn descend_run(
    kappa: f64,
    run: &DevRun,
    us: &mut [f64],
    tol: f64,
    max_sweeps: usize,
) -> Result<(), GeodesicError> {
    let m = us.len();
    let point = |k: usize, u: f64| -> ModelPoint {
        model::geodesic_point(&run.portals[k].0, &run.portals[k].1, u).expect("portal point")
    };
    let total = |us: &[f64]| -> f64 {
        let mut prev = run.start.clone();
        let mut acc = 0.0;
        for k in 0..m {
            let x = point(k, us[k]);
            acc += model::distance(&prev, &x).unwrap_or(f64::INFINITY);
            prev = x;
        }
        acc + model::distance(&prev, &run.end).unwrap_or(f64::INFINITY)
    };
    let mut len = total(us);
    let stop = tol.max(5e-16 * (1.0 + len));
    for sweeps in 0..max_sweeps {
        let forward = sweeps % 2 == 0;
        let order: Vec<usize> = if forward {
            (0..m).collect()
        } else {
            (0..m).rev().collect()
        };
        for k in order {
            let p_prev = if k == 0 {
                run.start.clone()
            } else {
                point(k - 1, us[k - 1])
            };
            let p_next = if k == m - 1 {
                run.end.clone()
            } else {
                point(k + 1, us[k + 1])
            };
            us[k] = exact_update(kappa, &p_prev, &p_next, &run.portals[k].0, &run.portals[k].1, us[k]);
        }
        let new_len = total(us);
        let improved = len - new_len;
        len = new_len;
        if improved < stop {
            return Ok(());
        }
        if us
            .iter()
            .any(|&u| u < VERTEX_SNAP || u > 1.0 - VERTEX_SNAP)
        {
            return Ok(());
        }
    }
    Err(GeodesicError::Budget)
}

/// Relax every maximal run of crossings between anchors; returns the strip
/// length afterwards.
fn relax(
    strip: &mut Strip,
    cx: &MetricComplex,
    charts: &[FaceChart],
    tol: f64,
    opts: &PathOptions,
) -> Result<f64, GeodesicError> {
    let kappa = cx.kappa();
    let n = strip.way.len();
    let mut i = 1;
    while i + 1 <= n - 1 {
        if !matches!(strip.way[i], Waypoint::Cross { .. }) {
            i += 1;
            continue;
        }
        let i0 = i;
        let mut i1 = i;
        while i1 + 1 < n - 1 && matches!(strip.way[i1 + 1], Waypoint::Cross { .. }) {
            i1 += 1;
        }
        let run = develop_run(strip, cx, charts, i0, i1)?;
        let us_new = match chord_params(kappa, &run) {
            Some(us) => us,
            None => {
                let mut us: Vec<f64> = (i0..=i1)
                    .map(|j| match strip.way[j] {
                        Waypoint::Cross { u, .. } => u,
                        _ => unreachable!(),
                    })
                    .collect();
                let m = us.len() as f64;
                descend_run(kappa, &run, &mut us, tol / (m * m + 1.0), opts.max_sweeps)?;
                us
            }
        };
        for (j, u_new) in (i0..=i1).zip(us_new) {
            if let Waypoint::Cross { u, .. } = &mut strip.way[j] {
                *u = u_new;
            }
        }
        i = i1 + 1;
    }
    Ok(strip.length(cx, charts))
}

/// Convert near-end crossings to vertex passages and merge duplicates;
/// returns true when the strip changed structurally.
fn snap_vertices(strip: &mut Strip, cx: &MetricComplex) -> bool {
    let mut changed = false;
    for i in 0..strip.way.len() {
        if let Waypoint::Cross { edge, u } = strip.way[i] {
            if u < VERTEX_SNAP {
                strip.way[i] = Waypoint::AtVertex(cx.edge(edge).ends[0]);
                changed = true;
            } else if u > 1.0 - VERTEX_SNAP {
                strip.way[i] = Waypoint::AtVertex(cx.edge(edge).ends[1]);
                changed = true;
            }
        }
    }
    // merge consecutive identical vertex passages (drop the duplicate and the
    // face between them)
    let mut i = 1;
    while i < strip.way.len() {
        let dup = matches!(
            (&strip.way[i - 1], &strip.way[i]),
            (Waypoint::AtVertex(a), Waypoint::AtVertex(b)) if a == b
        );
        if dup {
            strip.way.remove(i);
            strip.faces.remove(i - 1);
            changed = true;
        } else {
            i += 1;
        }
    }
    changed
}

/// Link detour description: edges crossed, the faces carrying each hop, the
/// link offset of each crossed edge from the incoming direction, and the full
/// link distance of the detour.
struct SlideRoute {
    edges: Vec<EdgeId>,
    faces: Vec<FaceId>,
    offsets: Vec<f64>,
    total: f64,
}

/// If the path corner at vertex `v` (entered from `p_in` across `face_in`,
/// leaving toward `p_out` across `face_out`) subtends a link distance < π,
/// return the shortcut route through the shorter side.
fn slide_route(
    cx: &MetricComplex,
    v: VertexId,
    face_in: FaceId,
    p_in: &ModelPoint,
    face_out: FaceId,
    p_out: &ModelPoint,
    chart_in: &FaceChart,
    chart_out: &FaceChart,
) -> Option<SlideRoute> {
    let link = cx.link_at(v);
    // offset of the direction toward p within the face's corner arc, measured
    // from the arc's first node (the edge entering the corner)
    let arc_offset = |f: FaceId, chart: &FaceChart, p: &ModelPoint| -> Option<(usize, f64)> {
        let arc_idx = link.arcs.iter().position(|&(_, _, _, af)| af == f)?;
        let (n_from, _, _, _) = link.arcs[arc_idx];
        let e_from = link.node_edges[n_from];
        let other = cx.edge(e_from).ends.iter().copied().find(|&w| w != v)?;
        let apex = chart.vertex(v);
        let toward_edge = chart.vertex(other);
        if model::distance(&apex, p).ok()? < 1e-12 {
            return None;
        }
        let off = model::angle_at(&apex, &toward_edge, p).ok()?;
        Some((arc_idx, off))
    };
    let (arc_in, off_in) = arc_offset(face_in, chart_in, p_in)?;
    let (arc_out, off_out) = arc_offset(face_out, chart_out, p_out)?;

    // nodes: original link nodes, then IN, then OUT
    let n = link.node_edges.len();
    let (in_node, out_node) = (n, n + 1);
    // pieces: (from, to, weight, face, via_original_arc_end_nodes)
    let mut pieces: Vec<(usize, usize, f64, FaceId)> = Vec::new();
    for (k, &(a, b, w, f)) in link.arcs.iter().enumerate() {
        let mut cuts: Vec<(f64, usize)> = vec![(0.0, a), (w, b)];
        if k == arc_in {
            cuts.push((off_in, in_node));
        }
        if k == arc_out {
            cuts.push((off_out, out_node));
        }
        cuts.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        for pair in cuts.windows(2) {
            pieces.push((pair[0].1, pair[1].1, pair[1].0 - pair[0].0, f));
        }
    }
    // Dijkstra from IN to OUT over the pieces
    let total = n + 2;
    let mut dist = vec![f64::INFINITY; total];
    let mut pred: Vec<Option<(usize, usize)>> = vec![None; total];
    dist[in_node] = 0.0;
    let mut done = vec![false; total];
    loop {
        let mut u = None;
        let mut best = f64::INFINITY;
        for i in 0..total {
            if !done[i] && dist[i] < best {
                best = dist[i];
                u = Some(i);
            }
        }
        let Some(u) = u else { break };
        done[u] = true;
        for (pi, &(a, b, w, _)) in pieces.iter().enumerate() {
            let other = if a == u {
                b
            } else if b == u {
                a
            } else {
                continue;
            };
            if dist[u] + w < dist[other] {
                dist[other] = dist[u] + w;
                pred[other] = Some((u, pi));
            }
        }
    }
    if !(dist[out_node] < std::f64::consts::PI - 1e-9) {
        return None; // both sides ≥ π: vertex passage is geodesic
    }
    // walk predecessors to recover the node sequence and hop faces
    let mut rev_nodes = vec![out_node];
    let mut rev_faces = Vec::new();
    let mut cur = out_node;
    while let Some((p, pi)) = pred[cur] {
        rev_faces.push(pieces[pi].3);
        rev_nodes.push(p);
        cur = p;
    }
    rev_nodes.reverse();
    rev_faces.reverse();
    let edges: Vec<EdgeId> = rev_nodes[1..rev_nodes.len() - 1]
        .iter()
        .map(|&nd| link.node_edges[nd])
        .collect();
    let offsets: Vec<f64> = rev_nodes[1..rev_nodes.len() - 1]
        .iter()
        .map(|&nd| dist[nd])
        .collect();
    Some(SlideRoute {
        edges,
        faces: rev_faces,
        offsets,
        total: dist[out_node],
    })
}

/// Replace sub-π vertex passages by crossings through the shorter link side;
/// returns true when the strip changed.
fn slide_pass(strip: &mut Strip, cx: &MetricComplex) -> bool {
    let mut i = 1;
    let mut changed = false;
    while i + 1 <= strip.way.len() - 1 {
        let Waypoint::AtVertex(v) = strip.way[i] else {
            i += 1;
            continue;
        };
        let face_in = strip.faces[i - 1];
        let face_out = strip.faces[i];
        let chart_in = FaceChart::new(cx, face_in);
        let chart_out = FaceChart::new(cx, face_out);
        let p_in = strip.chart_pos(cx, &chart_in, i - 1);
        let p_out = strip.chart_pos(cx, &chart_out, i + 1);
        let Some(route) = slide_route(cx, v, face_in, &p_in, face_out, &p_out, &chart_in, &chart_out)
        else {
            i += 1;
            continue;
        };
        // Seed the crossings where the straight segment between the in and
        // out points crosses each route edge in the unfolded wedge (flat law
        // of sines; for curved planes it is a starting guess the exact
        // updates refine). Degenerate data falls back to a small offset.
        let r_in = model::distance(&chart_in.vertex(v), &p_in).unwrap_or(f64::NAN);
        let r_out = model::distance(&chart_out.vertex(v), &p_out).unwrap_or(f64::NAN);
        let mut new_way = Vec::new();
        for (&e, &theta) in route.edges.iter().zip(&route.offsets) {
            let len = cx.edge(e).length;
            let denom = r_out * (route.total - theta).sin() + r_in * theta.sin();
            let rho = r_in * r_out * route.total.sin() / denom;
            let mut u_from_v = rho / len;
            if !u_from_v.is_finite() {
                u_from_v = (0.05_f64).min(0.2 / len.max(1e-9));
            }
            u_from_v = u_from_v.clamp(1e-6, 1.0 - 1e-6);
            let u = if cx.edge(e).ends[0] == v {
                u_from_v
            } else {
                1.0 - u_from_v
            };
            new_way.push(Waypoint::Cross { edge: e, u });
        }
        strip.way.splice(i..=i, new_way);
        strip.faces.splice(i - 1..=i, route.faces);
        changed = true;
        i += route.edges.len().max(1);
    }
    changed
}

/// Straighten a strip to convergence: relax the crossing runs exactly, then
/// let vertex snapping and link slides restructure the strip; rounds repeat
/// until the structure is stable.
fn straighten(
    strip: &mut Strip,
    cx: &MetricComplex,
    tol: f64,
    opts: &PathOptions,
) -> Result<f64, GeodesicError> {
    normalize_strip(strip);
    let mut best = f64::INFINITY;
    let mut stalls = 0;
    for _round in 0..64 {
        let charts = strip.charts(cx);
        let len = relax(strip, cx, &charts, tol, opts)?;
        if len < best - tol.max(1e-12 * (1.0 + len)) {
            best = len;
            stalls = 0;
        } else {
            // restructuring cycles without shortening the strip; accept the
            // relaxed state rather than bouncing between corner pivots
            stalls += 1;
            if stalls >= 4 {
                return Ok(len);
            }
        }
        let snapped = snap_vertices(strip, cx);
        let slid = slide_pass(strip, cx);
        if !snapped && !slid {
            return Ok(len);
        }
        normalize_strip(strip);
    }
    Err(GeodesicError::Budget)
}

fn strip_to_path(strip: &Strip, cx: &MetricComplex) -> PathOnComplex {
    let charts = strip.charts(cx);
    let points: Vec<SurfacePoint> = strip
        .way
        .iter()
        .map(|w| match w {
            Waypoint::Fixed(p) => *p,
            Waypoint::Cross { edge, u } => edge_surface_point(cx, *edge, *u),
            Waypoint::AtVertex(v) => vertex_surface_point(cx, *v),
        })
        .collect();
    let seg_lengths: Vec<f64> = (0..strip.faces.len())
        .map(|i| strip.seg_length(cx, &charts, i))
        .collect();
    let length = seg_lengths.iter().sum();
    PathOnComplex {
        points,
        faces: strip.faces.clone(),
        seg_lengths,
        length,
    }
}

/// Build the waypoint strip for one graph path. Intermediate face-interior
/// nodes are dropped: both their hops run inside the same face, so the
/// neighboring waypoints connect directly.
fn path_to_strip(
    g: &SteinerGraph,
    node_path: &[usize],
    hop_faces: &[FaceId],
    x: &SurfacePoint,
    y: &SurfacePoint,
) -> Strip {
    let mut way = vec![Waypoint::Fixed(*x)];
    let mut faces: Vec<FaceId> = Vec::with_capacity(hop_faces.len());
    for pos in 1..node_path.len() {
        if pos == node_path.len() - 1 {
            way.push(Waypoint::Fixed(*y));
            faces.push(hop_faces[pos - 1]);
            break;
        }
        match g.nodes[node_path[pos]] {
            NodeKind::Vertex(v) => {
                way.push(Waypoint::AtVertex(v));
                faces.push(hop_faces[pos - 1]);
            }
            NodeKind::EdgePt(e, u) => {
                way.push(Waypoint::Cross { edge: e, u });
                faces.push(hop_faces[pos - 1]);
            }
            NodeKind::FacePt => {}
        }
    }
    Strip { way, faces }
}

/// Intrinsic shortest path between two surface points.
///
/// Phase 1 finds an upper bound and a crossing topology on a Steiner-refined
/// graph; phase 2 relaxes the crossing parameters over the developed strip
/// until the per-sweep improvement drops below `tol`. The Steiner density is
/// doubled until the straightened length stabilizes within `tol`.
pub fn shortest_path(
    cx: &MetricComplex,
    x: &SurfacePoint,
    y: &SurfacePoint,
    tol: f64,
) -> Result<PathOnComplex, GeodesicError> {
    shortest_path_with(cx, x, y, tol, &PathOptions::default())
}

pub fn shortest_path_with(
    cx: &MetricComplex,
    x: &SurfacePoint,
    y: &SurfacePoint,
    tol: f64,
    opts: &PathOptions,
) -> Result<PathOnComplex, GeodesicError> {
    if x.face.0 >= cx.face_count() || y.face.0 >= cx.face_count() {
        return Err(GeodesicError::BadFace);
    }
    if points_coincide(cx, x, y, 0.0) {
        return Ok(PathOnComplex {
            points: vec![*x],
            faces: Vec::new(),
            seg_lengths: Vec::new(),
            length: 0.0,
        });
    }
    let mut k = opts.steiner.max(1);
    let mut best: Option<PathOnComplex> = None;
    let mut prev_len = f64::INFINITY;
    for level in 0..=opts.doublings {
        let g = build_steiner_graph(cx, k, &[*x, *y]);
        let (nodes, hop_faces, _ub) = graph_shortest(&g, g.query_nodes[0], g.query_nodes[1])
            .expect("complexes are connected");
        let mut strip = path_to_strip(&g, &nodes, &hop_faces, x, y);
        straighten(&mut strip, cx, tol, opts)?;
        let path = strip_to_path(&strip, cx);
        let len = path.length;
        let better = best.as_ref().map_or(true, |b| len < b.length);
        if better {
            best = Some(path);
        }
        if (prev_len - len).abs() < tol {
            break;
        }
        prev_len = len;
        if level < opts.doublings {
            k *= 2;
        }
    }
    Ok(best.expect("at least one level ran"))
}

/// Pairwise intrinsic distances for a net of surface points. The matrix is
/// exactly symmetric with a zero diagonal.
pub fn distance_matrix(
    cx: &MetricComplex,
    net: &[SurfacePoint],
    tol: f64,
) -> Result<Vec<Vec<f64>>, GeodesicError> {
    let n = net.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let results: Result<Vec<f64>, GeodesicError> = pairs
        .par_iter()
        .map(|&(i, j)| shortest_path(cx, &net[i], &net[j], tol).map(|p| p.length))
        .collect();
    let results = results?;
    let mut m = vec![vec![0.0; n]; n];
    for (&(i, j), &d) in pairs.iter().zip(&results) {
        m[i][j] = d;
        m[j][i] = d;
    }
    Ok(m)
}

// ---------------------------------------------------------------------------
// Ambient spaces
// ---------------------------------------------------------------------------

/// A geodesic ambient space: distances and constant-speed geodesic
/// interpolation. Implementations panic on violated preconditions (points off
/// the chart, antipodal pairs); construction-time validation in the callers
/// keeps queries inside the supported regime.
pub trait Ambient: Sync {
    type Point: Clone + PartialEq + std::fmt::Debug + Send + Sync;
    /// Curvature bound κ used for comparison constructions.
    fn kappa(&self) -> f64;
    fn distance(&self, p: &Self::Point, q: &Self::Point) -> f64;
    fn geodesic_point(&self, p: &Self::Point, q: &Self::Point, t: f64) -> Self::Point;
    fn coincide(&self, p: &Self::Point, q: &Self::Point, tol: f64) -> bool {
        self.distance(p, q) <= tol
    }
}

/// The κ-plane as an ambient space.
#[derive(Debug, Clone, Copy)]
pub struct ModelPlane {
    pub kappa: f64,
}

impl Ambient for ModelPlane {
    type Point = ModelPoint;
    fn kappa(&self) -> f64 {
        self.kappa
    }
    fn distance(&self, p: &ModelPoint, q: &ModelPoint) -> f64 {
        model::distance(p, q).expect("points on one model plane")
    }
    fn geodesic_point(&self, p: &ModelPoint, q: &ModelPoint, t: f64) -> ModelPoint {
        model::geodesic_point(p, q, t).expect("non-antipodal model pair")
    }
}

/// Euclidean 3-space as an ambient space (κ = 0 upper bound).
#[derive(Debug, Clone, Copy, Default)]
pub struct Euclid3;

impl Ambient for Euclid3 {
    type Point = nalgebra::Vector3<f64>;
    fn kappa(&self) -> f64 {
        0.0
    }
    fn distance(&self, p: &Self::Point, q: &Self::Point) -> f64 {
        (p - q).norm()
    }
    fn geodesic_point(&self, p: &Self::Point, q: &Self::Point, t: f64) -> Self::Point {
        p + (q - p) * t
    }
}

/// Hashable key for a canonical surface point (bit-exact).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum PointKey {
    V(usize),
    E(usize, u64),
    F(usize, [u64; 3]),
}

fn point_key(cx: &MetricComplex, p: &SurfacePoint) -> PointKey {
    match canonicalize(cx, p) {
        CanonicalPoint::Vertex(v) => PointKey::V(v.0),
        CanonicalPoint::Edge(e, u) => PointKey::E(e.0, u.to_bits()),
        CanonicalPoint::FaceInterior(f, b) => PointKey::F(f.0, b.map(f64::to_bits)),
    }
}

/// A complex with its intrinsic metric as an ambient space. Geodesic handles
/// for repeated endpoints (ruling families) are cached.
pub struct ComplexAmbient<'a> {
    cx: &'a MetricComplex,
    tol: f64,
    opts: PathOptions,
    cache: RwLock<HashMap<(PointKey, PointKey), Arc<PathOnComplex>>>,
}

impl<'a> ComplexAmbient<'a> {
    pub fn new(cx: &'a MetricComplex) -> Self {
        ComplexAmbient {
            cx,
            tol: 1e-9,
            opts: PathOptions::default(),
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn with_options(cx: &'a MetricComplex, tol: f64, opts: PathOptions) -> Self {
        ComplexAmbient {
            cx,
            tol,
            opts,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn complex(&self) -> &MetricComplex {
        self.cx
    }

    /// Geodesic handle; cached, keyed by the canonical endpoints. Ruling
    /// families re-query the same endpoint pairs, so caching pays there.
    fn path(&self, p: &SurfacePoint, q: &SurfacePoint) -> Arc<PathOnComplex> {
        let key = (point_key(self.cx, p), point_key(self.cx, q));
        if let Some(hit) = self.cache.read().unwrap().get(&key) {
            return hit.clone();
        }
        let path = Arc::new(
            shortest_path_with(self.cx, p, q, self.tol, &self.opts)
                .expect("complex shortest path within budget"),
        );
        self.cache.write().unwrap().insert(key, path.clone());
        path
    }
}

impl<'a> Ambient for ComplexAmbient<'a> {
    type Point = SurfacePoint;
    fn kappa(&self) -> f64 {
        self.cx.kappa()
    }
    fn distance(&self, p: &SurfacePoint, q: &SurfacePoint) -> f64 {
        // moving query points would bloat the cache; only reuse it on hits
        let key = (point_key(self.cx, p), point_key(self.cx, q));
        if let Some(hit) = self.cache.read().unwrap().get(&key) {
            return hit.length;
        }
        shortest_path_with(self.cx, p, q, self.tol, &self.opts)
            .expect("complex shortest path within budget")
            .length
    }
    fn geodesic_point(&self, p: &SurfacePoint, q: &SurfacePoint, t: f64) -> SurfacePoint {
        let path = self.path(p, q);
        path.point_at(self.cx, t * path.length)
    }
    fn coincide(&self, p: &SurfacePoint, q: &SurfacePoint, tol: f64) -> bool {
        points_coincide(self.cx, p, q, tol)
    }
}

// ---------------------------------------------------------------------------
// Metric spheres
// ---------------------------------------------------------------------------

/// One closed loop of the level set {d(p, ·) = r}.
#[derive(Debug, Clone)]
pub struct SphereLoop {
    pub length: f64,
    /// Edge-crossing points in cyclic order (empty when the loop stays inside
    /// one face).
    pub crossings: Vec<SurfacePoint>,
}

/// Circumference coefficient: the length of the radius-r circle in the
/// κ-plane is 2π·sin_κ(r).
fn sin_kappa(kappa: f64, r: f64) -> f64 {
    if kappa > 0.0 {
        let sk = kappa.sqrt();
        (sk * r).sin() / sk
    } else if kappa < 0.0 {
        let sk = (-kappa).sqrt();
        (sk * r).sinh() / sk
    } else {
        r
    }
}

/// Distance from a chart point to the geodesic segment [a, b], by
/// golden-section over the segment parameter.
fn dist_to_segment(p: &ModelPoint, a: &ModelPoint, b: &ModelPoint) -> f64 {
    let f = |t: f64| {
        let q = model::geodesic_point(a, b, t).unwrap();
        model::distance(p, &q).unwrap()
    };
    golden_min(f, 0.0, 1.0, 60).1
}

/// Trace the metric sphere S(p, r) of a complex.
///
/// Exact within the supported star region: the base point must be a complex
/// vertex whose incident faces each contain the full radius-r disk sector, or
/// a face-interior point whose disk stays inside the face. The traced level
/// set is a metric graph; the returned loops are its simple cycles with
/// intrinsic lengths.
pub fn metric_sphere(
    cx: &MetricComplex,
    p: &SurfacePoint,
    r: f64,
    _tol: f64,
) -> Result<Vec<SphereLoop>, GeodesicError> {
    if !(r > 0.0) {
        return Err(GeodesicError::RadiusTooLarge(r));
    }
    match canonicalize(cx, p) {
        CanonicalPoint::FaceInterior(f, bary) => {
            let chart = FaceChart::new(cx, f);
            let center = chart.bary_to_chart(bary);
            let clearance = (0..3)
                .map(|i| dist_to_segment(&center, &chart.pts[i], &chart.pts[(i + 1) % 3]))
                .fold(f64::INFINITY, f64::min);
            if r >= clearance {
                return Err(GeodesicError::RadiusTooLarge(r));
            }
            Ok(vec![SphereLoop {
                length: 2.0 * std::f64::consts::PI * sin_kappa(cx.kappa(), r),
                crossings: Vec::new(),
            }])
        }
        CanonicalPoint::Vertex(v) => {
            let link = cx.link_at(v);
            if link.has_endpoint() {
                return Err(GeodesicError::BoundaryTouched);
            }
            // the full r-sector must fit inside every incident face
            let incident: std::collections::BTreeSet<FaceId> = cx
                .edges_at_vertex(v)
                .iter()
                .flat_map(|&e| cx.faces_at_edge(e).iter().map(|&(f, _)| f))
                .collect();
            for &fi in &incident {
                let face = cx.face(fi);
                let corner = match face.corner_of(v) {
                    Some(c) => c,
                    None => continue,
                };
                let chart = FaceChart::new(cx, fi);
                let apex = chart.pts[corner];
                let opp_a = chart.pts[(corner + 1) % 3];
                let opp_b = chart.pts[(corner + 2) % 3];
                let height = dist_to_segment(&apex, &opp_a, &opp_b);
                let adj = model::distance(&apex, &opp_a)
                    .unwrap()
                    .min(model::distance(&apex, &opp_b).unwrap());
                if r >= height || r >= adj {
                    return Err(GeodesicError::RadiusTooLarge(r));
                }
            }
            // the level set is the link graph scaled by sin_κ(r)
            let scale = sin_kappa(cx.kappa(), r);
            let arcs: Vec<(usize, usize, f64)> = link
                .arcs
                .iter()
                .map(|&(a, b, w, _)| (a, b, w * scale))
                .collect();
            let cycles = simple_cycles(link.node_edges.len(), &arcs, 20_000)?;
            let mut loops: Vec<SphereLoop> = cycles
                .into_iter()
                .map(|cyc| {
                    let length: f64 = cyc.iter().map(|&(_, _, w)| w).sum();
                    let crossings = cyc
                        .iter()
                        .map(|&(node, _, _)| {
                            let e = link.node_edges[node];
                            let len = cx.edge(e).length;
                            let u = if cx.edge(e).ends[0] == v {
                                r / len
                            } else {
                                1.0 - r / len
                            };
                            edge_surface_point(cx, e, u)
                        })
                        .collect();
                    SphereLoop { length, crossings }
                })
                .collect();
            loops.sort_by(|a, b| a.length.partial_cmp(&b.length).unwrap());
            Ok(loops)
        }
        CanonicalPoint::Edge(_, _) => Err(GeodesicError::UnsupportedBase),
    }
}

/// Enumerate the simple cycles of a small undirected multigraph. Each cycle is
/// a list of (node, arc index, arc weight) hops in order. Cycles are node
/// simple; parallel arcs yield two-hop cycles.
fn simple_cycles(
    n: usize,
    arcs: &[(usize, usize, f64)],
    budget: usize,
) -> Result<Vec<Vec<(usize, usize, f64)>>, GeodesicError> {
    let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n]; // (arc, other)
    for (k, &(a, b, _)) in arcs.iter().enumerate() {
        incident[a].push((k, b));
        incident[b].push((k, a));
    }
    let mut out = Vec::new();
    let mut steps = 0usize;
    // anchor each cycle at its minimal node; dedup direction by requiring the
    // first arc id to be smaller than the last arc id
    for s in 0..n {
        // depth-first over paths with nodes > s (s itself only at the ends)
        fn dfs(
            cur: usize,
            s: usize,
            hops: &mut Vec<(usize, usize)>,
            visited: &mut Vec<bool>,
            incident: &[Vec<(usize, usize)>],
            arcs: &[(usize, usize, f64)],
            out: &mut Vec<Vec<(usize, usize, f64)>>,
            steps: &mut usize,
            budget: usize,
        ) -> Result<(), GeodesicError> {
            *steps += 1;
            if *steps > budget {
                return Err(GeodesicError::CycleBudget);
            }
            for &(arc, other) in &incident[cur] {
                if let Some(&(last_arc, _)) = hops.last() {
                    if arc == last_arc {
                        continue;
                    }
                }
                if other == s {
                    if hops.len() >= 1 {
                        let first_arc = hops[0].0;
                        if first_arc < arc {
                            let mut cyc: Vec<(usize, usize, f64)> = Vec::new();
                            let mut node = s;
                            for &(a, entered) in hops.iter() {
                                cyc.push((node, a, arcs[a].2));
                                node = entered;
                            }
                            cyc.push((node, arc, arcs[arc].2));
                            out.push(cyc);
                        }
                    }
                    continue;
                }
                if other < s || visited[other] {
                    continue;
                }
                visited[other] = true;
                hops.push((arc, other));
                dfs(other, s, hops, visited, incident, arcs, out, steps, budget)?;
                hops.pop();
                visited[other] = false;
            }
            Ok(())
        }
        let mut visited = vec![false; n];
        let mut hops = Vec::new();
        dfs(
            s,
            s,
            &mut hops,
            &mut visited,
            &incident,
            arcs,
            &mut out,
            &mut steps,
            budget,
        )?;
    }
    Ok(out)
}
