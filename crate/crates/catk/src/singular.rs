//! The singular set of a metric complex as a metric graph: edges glued to a
//! face count other than two are chained into maximal arcs, junction points
//! become vertices with branching orders, and every face strip along an arc
//! carries a turn measure.
//!
//! A point joining exactly two singular edges is absorbed into the arc unless
//! the two edge directions coincide in its link, where the arcs kiss at angle
//! zero and the meeting point stays an order-two vertex. Turn atoms sit at
//! interior polyline vertices: π minus the strip's corner-angle sum there,
//! positive where the strip bends convexly around the arc.

use crate::complex::{
    fmt_f64, AuditReport, EdgeId, FaceId, Finding, FindingKind, MetricComplex, VertexId,
};
use crate::geodesics::{shortest_path, vertex_surface_point, GeodesicError};
use rayon::prelude::*;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::f64::consts::PI;
use thiserror::Error;

/// Two singular arcs at a degree-two meeting point stay separated by a vertex
/// when the link distance between their directions is below this.
pub const DIRECTION_TOL: f64 = 1e-6;
/// Tolerance for the intrinsic distances that decide ball membership in
/// [`order_bound_audit`].
const BALL_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SingularError {
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error("polyline is not a connected path of complex edges")]
    BrokenPolyline,
    #[error("incoherent side sequence: {0}")]
    IncoherentSides(&'static str),
    #[error("vertex id out of range")]
    BadVertex,
}

/// Edges and vertices of a complex flagged as topologically singular.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SingularSet {
    /// Edges whose incident-face count differs from two, ascending.
    pub edges: Vec<EdgeId>,
    /// Vertices whose link is not a single circle, ascending.
    pub vertices: Vec<VertexId>,
}

impl SingularSet {
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty() && self.vertices.is_empty()
    }
}

/// Signed turn atoms of one face strip along an arc polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnMeasure {
    /// One `(vertex, π − side angle sum)` entry per interior polyline vertex.
    pub atoms: Vec<(VertexId, f64)>,
    /// Sum of the absolute atom values.
    pub total_variation: f64,
}

/// One face strip glued along an arc, with its turn measure.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcSide {
    /// The strip's face at each polyline edge.
    pub faces: Vec<FaceId>,
    pub turn: TurnMeasure,
}

/// A maximal singular arc between two graph vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularArc {
    /// Complex vertices of the two arc ends; equal for closed loops.
    pub ends: [VertexId; 2],
    /// The complex edges traversed, in order from `ends[0]`.
    pub polyline: Vec<EdgeId>,
    /// Sum of the polyline edge lengths.
    pub length: f64,
    /// One entry per coherent face strip along the arc; empty when the
    /// glued sheets do not propagate one-to-one along the polyline.
    pub sides: Vec<ArcSide>,
}

/// A vertex of the singular graph with its branching order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularVertex {
    pub vertex: VertexId,
    /// Number of arc ends at this vertex (loops count twice).
    pub order: usize,
}

/// The singular set of a complex as a metric graph.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SingularGraph {
    /// Graph vertices, ascending by complex vertex id.
    pub vertices: Vec<SingularVertex>,
    /// Maximal arcs, sorted by end ids and first polyline edge.
    pub edges: Vec<SingularArc>,
}

impl SingularGraph {
    /// Branching order of a complex vertex, if it is a graph vertex.
    pub fn order_of(&self, v: VertexId) -> Option<usize> {
        self.vertices
            .iter()
            .find(|g| g.vertex == v)
            .map(|g| g.order)
    }

    /// Deterministic text rendering: vertices with orders, arcs with lengths,
    /// polylines, and per-side turn atoms.
    pub fn to_text(&self, cx: &MetricComplex) -> String {
        let mut out = String::from("catk singular graph v1\n");
        out.push_str(&format!("vertices {}\n", self.vertices.len()));
        for v in &self.vertices {
            out.push_str(&format!("v {} order {}\n", cx.vertex_name(v.vertex), v.order));
        }
        out.push_str(&format!("edges {}\n", self.edges.len()));
        for arc in &self.edges {
            let path: String = arc
                .polyline
                .iter()
                .map(|&e| format!(" {}", cx.edge_name(e)))
                .collect();
            out.push_str(&format!(
                "e {} {} length {} path{}\n",
                cx.vertex_name(arc.ends[0]),
                cx.vertex_name(arc.ends[1]),
                fmt_f64(arc.length),
                path,
            ));
            for side in &arc.sides {
                let faces: String = side
                    .faces
                    .iter()
                    .map(|&f| format!(" {}", cx.face_name(f)))
                    .collect();
                let atoms: String = side
                    .turn
                    .atoms
                    .iter()
                    .map(|&(v, t)| format!(" {}:{}", cx.vertex_name(v), fmt_f64(t)))
                    .collect();
                out.push_str(&format!(
                    "side{} tv {}{}{}\n",
                    faces,
                    fmt_f64(side.turn.total_variation),
                    if atoms.is_empty() { "" } else { " atoms" },
                    atoms,
                ));
            }
        }
        out
    }
}

/// Flags every edge whose incident-face count differs from two and every
/// vertex whose link is not a single circle.
pub fn extract_singular_set(cx: &MetricComplex) -> SingularSet {
    let edges = cx
        .edges()
        .map(|(e, _)| e)
        .filter(|&e| cx.faces_at_edge(e).len() != 2)
        .collect();
    let vertices = cx
        .vertex_ids()
        .filter(|&v| cx.link_at(v).circle_length().is_none())
        .collect();
    SingularSet { edges, vertices }
}

/// The vertex sequence visited by a connected edge polyline. With no explicit
/// start the walk leaves the first edge's end that the second edge does not
/// share (its stored head when both ends are shared or the path is a single
/// edge).
fn path_vertices(
    cx: &MetricComplex,
    polyline: &[EdgeId],
    start: Option<VertexId>,
) -> Result<Vec<VertexId>, SingularError> {
    if polyline.is_empty() || polyline.iter().any(|e| e.0 >= cx.edge_count()) {
        return Err(SingularError::BrokenPolyline);
    }
    let first = cx.edge(polyline[0]).ends;
    let v0 = match start {
        Some(v) if first.contains(&v) => v,
        Some(_) => return Err(SingularError::BrokenPolyline),
        None if polyline.len() == 1 => first[0],
        None => {
            let second = cx.edge(polyline[1]).ends;
            match (second.contains(&first[0]), second.contains(&first[1])) {
                (false, true) => first[0],
                (true, false) => first[1],
                (true, true) => first[0],
                (false, false) => return Err(SingularError::BrokenPolyline),
            }
        }
    };
    let mut verts = vec![v0];
    let mut cur = v0;
    for &e in polyline {
        let [a, b] = cx.edge(e).ends;
        cur = if a == cur {
            b
        } else if b == cur {
            a
        } else {
            return Err(SingularError::BrokenPolyline);
        };
        verts.push(cur);
    }
    Ok(verts)
}

/// Face strips around `c` between the link nodes of `e_prev` and `e_next`:
/// per strip the corner-angle sum and the faces leaving along `e_next`, plus
/// strip lookup by entering and leaving face.
struct VertexSides {
    angle: Vec<f64>,
    next_faces: Vec<Vec<FaceId>>,
    side_of_prev: HashMap<FaceId, usize>,
    side_of_next: HashMap<FaceId, usize>,
}

fn vertex_sides(
    cx: &MetricComplex,
    c: VertexId,
    e_prev: EdgeId,
    e_next: EdgeId,
) -> Result<VertexSides, SingularError> {
    let link = cx.link_at(c);
    let pos = |e: EdgeId| link.node_edges.iter().position(|&x| x == e);
    let (Some(a), Some(b)) = (pos(e_prev), pos(e_next)) else {
        return Err(SingularError::BrokenPolyline);
    };
    if a == b {
        return Err(SingularError::BrokenPolyline);
    }
    // components of the link minus the two polyline nodes; arcs joining the
    // two nodes directly are one-face strips of their own
    let mut root: Vec<usize> = (0..link.node_count()).collect();
    fn find(root: &mut [usize], i: usize) -> usize {
        if root[i] != i {
            let r = find(root, root[i]);
            root[i] = r;
        }
        root[i]
    }
    for &(x, y, _, _) in &link.arcs {
        if x == a || x == b || y == a || y == b {
            continue;
        }
        let (rx, ry) = (find(&mut root, x), find(&mut root, y));
        if rx != ry {
            root[rx] = ry;
        }
    }
    let mut sides = VertexSides {
        angle: Vec::new(),
        next_faces: Vec::new(),
        side_of_prev: HashMap::new(),
        side_of_next: HashMap::new(),
    };
    let mut by_root: HashMap<usize, usize> = HashMap::new();
    for &(x, y, w, f) in &link.arcs {
        let at_a = x == a || y == a;
        let at_b = x == b || y == b;
        let sid = if at_a && at_b {
            sides.angle.push(0.0);
            sides.next_faces.push(Vec::new());
            sides.angle.len() - 1
        } else {
            let anchor = if x == a || x == b { y } else { x };
            let r = find(&mut root, anchor);
            match by_root.get(&r) {
                Some(&s) => s,
                None => {
                    sides.angle.push(0.0);
                    sides.next_faces.push(Vec::new());
                    let s = sides.angle.len() - 1;
                    by_root.insert(r, s);
                    s
                }
            }
        };
        sides.angle[sid] += w;
        if at_a {
            sides.side_of_prev.insert(f, sid);
        }
        if at_b {
            sides.side_of_next.insert(f, sid);
            sides.next_faces[sid].push(f);
        }
    }
    Ok(sides)
}

fn turn_measure_from(
    cx: &MetricComplex,
    polyline: &[EdgeId],
    side: &[FaceId],
    start: Option<VertexId>,
) -> Result<TurnMeasure, SingularError> {
    if side.len() != polyline.len() {
        return Err(SingularError::IncoherentSides(
            "side length differs from the polyline",
        ));
    }
    let verts = path_vertices(cx, polyline, start)?;
    for (&e, &f) in polyline.iter().zip(side) {
        if !cx.faces_at_edge(e).iter().any(|&(g, _)| g == f) {
            return Err(SingularError::IncoherentSides(
                "side face is not glued along its polyline edge",
            ));
        }
    }
    let mut atoms = Vec::with_capacity(polyline.len().saturating_sub(1));
    for j in 0..polyline.len() - 1 {
        let c = verts[j + 1];
        let sides = vertex_sides(cx, c, polyline[j], polyline[j + 1])?;
        match (
            sides.side_of_prev.get(&side[j]),
            sides.side_of_next.get(&side[j + 1]),
        ) {
            (Some(&sp), Some(&sn)) if sp == sn => atoms.push((c, PI - sides.angle[sp])),
            (Some(_), Some(_)) => {
                return Err(SingularError::IncoherentSides(
                    "consecutive side faces lie on different sides",
                ))
            }
            _ => {
                return Err(SingularError::IncoherentSides(
                    "side face misses its polyline vertex",
                ))
            }
        }
    }
    let total_variation = atoms.iter().map(|&(_, t)| t.abs()).sum();
    Ok(TurnMeasure {
        atoms,
        total_variation,
    })
}

/// Turn atoms of one face strip along a polyline: π minus the strip's
/// corner-angle sum at each interior vertex. `side[j]` must be a face glued
/// along `polyline[j]`, and consecutive side faces must lie in the same link
/// component at their shared vertex.
pub fn turn_measure(
    cx: &MetricComplex,
    polyline: &[EdgeId],
    side: &[FaceId],
) -> Result<TurnMeasure, SingularError> {
    turn_measure_from(cx, polyline, side, None)
}

fn enumerate_sides_from(
    cx: &MetricComplex,
    polyline: &[EdgeId],
    start: Option<VertexId>,
) -> Result<Vec<Vec<FaceId>>, SingularError> {
    let verts = path_vertices(cx, polyline, start)?;
    let mut seqs: Vec<Vec<FaceId>> = cx
        .faces_at_edge(polyline[0])
        .iter()
        .map(|&(f, _)| vec![f])
        .collect();
    for j in 0..polyline.len() - 1 {
        let sides = vertex_sides(cx, verts[j + 1], polyline[j], polyline[j + 1])?;
        let mut claimed = vec![false; sides.angle.len()];
        for seq in &mut seqs {
            let sid = *sides.side_of_prev.get(seq.last().unwrap()).ok_or(
                SingularError::IncoherentSides("sheet does not reach its polyline vertex"),
            )?;
            if claimed[sid] {
                return Err(SingularError::IncoherentSides(
                    "two sheets merge at a polyline vertex",
                ));
            }
            claimed[sid] = true;
            match sides.next_faces[sid].as_slice() {
                [f] => seq.push(*f),
                [] => {
                    return Err(SingularError::IncoherentSides(
                        "a sheet dead-ends at a polyline vertex",
                    ))
                }
                _ => {
                    return Err(SingularError::IncoherentSides(
                        "a sheet branches at a polyline vertex",
                    ))
                }
            }
        }
        if seqs.len() != cx.faces_at_edge(polyline[j + 1]).len() {
            return Err(SingularError::IncoherentSides(
                "sheet count changes along the polyline",
            ));
        }
    }
    Ok(seqs)
}

/// All face strips along a polyline, one per face of its first edge, each
/// propagated through the link components at the interior vertices.
pub fn enumerate_sides(
    cx: &MetricComplex,
    polyline: &[EdgeId],
) -> Result<Vec<Vec<FaceId>>, SingularError> {
    enumerate_sides_from(cx, polyline, None)
}

fn opposite(cx: &MetricComplex, e: EdgeId, v: VertexId) -> VertexId {
    let [a, b] = cx.edge(e).ends;
    if a == v {
        b
    } else {
        a
    }
}

/// True when `v` must stay a vertex of the graph: any branching count other
/// than two, or two arcs whose directions coincide in the link.
fn is_junction(cx: &MetricComplex, v: VertexId, incident: &[EdgeId]) -> bool {
    match incident {
        [e1, e2] => cx
            .link_at(v)
            .distance_between_edges(*e1, *e2)
            .map_or(false, |d| d < DIRECTION_TOL),
        _ => true,
    }
}

fn walk_arc(
    cx: &MetricComplex,
    incident: &BTreeMap<VertexId, Vec<EdgeId>>,
    junctions: &HashSet<VertexId>,
    visited: &mut [bool],
    seed_v: VertexId,
    seed_e: EdgeId,
) -> (VertexId, Vec<EdgeId>, VertexId) {
    let mut polyline = vec![seed_e];
    visited[seed_e.0] = true;
    let mut prev = seed_e;
    let mut cur = opposite(cx, seed_e, seed_v);
    while !junctions.contains(&cur) {
        let es = &incident[&cur];
        let next = if es[0] == prev { es[1] } else { es[0] };
        if visited[next.0] {
            break;
        }
        visited[next.0] = true;
        polyline.push(next);
        prev = next;
        cur = opposite(cx, next, cur);
    }
    (seed_v, polyline, cur)
}

/// Smallest vertex id on the junction-free cycle through `e0`.
fn cycle_anchor(
    cx: &MetricComplex,
    incident: &BTreeMap<VertexId, Vec<EdgeId>>,
    e0: EdgeId,
) -> VertexId {
    let start = cx.edge(e0).ends[0];
    let mut best = start;
    let mut prev = e0;
    let mut cur = opposite(cx, e0, start);
    while cur != start {
        if cur.0 < best.0 {
            best = cur;
        }
        let es = &incident[&cur];
        let next = if es[0] == prev { es[1] } else { es[0] };
        prev = next;
        cur = opposite(cx, next, cur);
    }
    best
}

fn arc_sides(cx: &MetricComplex, polyline: &[EdgeId], start: VertexId) -> Vec<ArcSide> {
    let Ok(seqs) = enumerate_sides_from(cx, polyline, Some(start)) else {
        return Vec::new();
    };
    seqs.into_iter()
        .map(|faces| {
            let turn = turn_measure_from(cx, polyline, &faces, Some(start))
                .expect("enumerated sides stay coherent");
            ArcSide { faces, turn }
        })
        .collect()
}

/// Chains the singular edges into maximal arcs and returns the metric graph
/// with vertex orders and per-side turn measures. Junction-free cycles are
/// anchored at their smallest vertex, which gets order two.
pub fn build_singular_graph(cx: &MetricComplex) -> SingularGraph {
    let set = extract_singular_set(cx);
    let mut incident: BTreeMap<VertexId, Vec<EdgeId>> = BTreeMap::new();
    for &e in &set.edges {
        for &v in &cx.edge(e).ends {
            incident.entry(v).or_default().push(e);
        }
    }
    let junction_list: Vec<VertexId> = incident
        .iter()
        .filter(|&(&v, edges)| is_junction(cx, v, edges))
        .map(|(&v, _)| v)
        .collect();
    let junctions: HashSet<VertexId> = junction_list.iter().copied().collect();
    let mut visited = vec![false; cx.edge_count()];
    let mut raw: Vec<(VertexId, Vec<EdgeId>, VertexId)> = Vec::new();
    for &j in &junction_list {
        for &e in &incident[&j] {
            if !visited[e.0] {
                raw.push(walk_arc(cx, &incident, &junctions, &mut visited, j, e));
            }
        }
    }
    for &e0 in &set.edges {
        if visited[e0.0] {
            continue;
        }
        let anchor = cycle_anchor(cx, &incident, e0);
        let first = incident[&anchor]
            .iter()
            .copied()
            .min_by_key(|e| e.0)
            .expect("cycle vertices keep their two edges");
        raw.push(walk_arc(cx, &incident, &junctions, &mut visited, anchor, first));
    }
    let mut edges: Vec<SingularArc> = raw
        .into_iter()
        .map(|(start, polyline, end)| {
            let sides = arc_sides(cx, &polyline, start);
            let length = polyline.iter().map(|&e| cx.edge(e).length).sum();
            SingularArc {
                ends: [start, end],
                polyline,
                length,
                sides,
            }
        })
        .collect();
    edges.sort_by_key(|a| (a.ends[0].0, a.ends[1].0, a.polyline[0].0));
    let mut orders: BTreeMap<VertexId, usize> = BTreeMap::new();
    for arc in &edges {
        for &v in &arc.ends {
            *orders.entry(v).or_insert(0) += 1;
        }
    }
    for &v in &set.vertices {
        if !incident.contains_key(&v) {
            orders.entry(v).or_insert(0);
        }
    }
    let vertices = orders
        .into_iter()
        .map(|(vertex, order)| SingularVertex { vertex, order })
        .collect();
    SingularGraph { vertices, edges }
}

/// Checks every graph vertex within intrinsic distance `r` of `p` against the
/// branching bound max(Σ max(N − 2, 0), max 2(N − 2)) over the degrees N of
/// the link nodes at `p`. One finding per vertex in the ball; orders above
/// the bound are violations.
pub fn order_bound_audit(
    cx: &MetricComplex,
    p: VertexId,
    r: f64,
) -> Result<AuditReport, SingularError> {
    if p.0 >= cx.vertex_count() {
        return Err(SingularError::BadVertex);
    }
    let graph = build_singular_graph(cx);
    let link = cx.link_at(p);
    let mut sum = 0usize;
    let mut single = 0usize;
    for n in 0..link.node_count() {
        let excess = link.degree(n).saturating_sub(2);
        sum += excess;
        single = single.max(2 * excess);
    }
    let bound = sum.max(single);
    let origin = vertex_surface_point(cx, p);
    let checks: Result<Vec<Option<Finding>>, SingularError> = graph
        .vertices
        .par_iter()
        .map(|gv| {
            let d = if gv.vertex == p {
                0.0
            } else {
                shortest_path(cx, &origin, &vertex_surface_point(cx, gv.vertex), BALL_TOL)?.length
            };
            if d > r {
                return Ok(None);
            }
            let exceeds = gv.order > bound;
            Ok(Some(Finding {
                location: format!("vertex {}", cx.vertex_name(gv.vertex)),
                kind: if exceeds {
                    FindingKind::Violation
                } else {
                    FindingKind::Info
                },
                measured: gv.order as f64,
                threshold: bound as f64,
                witness: format!(
                    "order {} {} branching bound {} at distance {}",
                    gv.order,
                    if exceeds { "exceeds" } else { "within" },
                    bound,
                    fmt_f64(d),
                ),
            }))
        })
        .collect();
    Ok(AuditReport {
        findings: checks?.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{ComplexBuilder, DEFAULT_AUDIT_TOL};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::SQRT_2;

    /// 3×3 triangulated flat torus; every link is a circle of length 2π.
    fn flat_torus() -> MetricComplex {
        let n = 3;
        let mut b = ComplexBuilder::new(0.0);
        let vs: Vec<VertexId> = (0..n * n).map(|i| b.vertex(format!("v{i}"))).collect();
        let at = |i: usize, j: usize| vs[(i % n) * n + (j % n)];
        let mut hor = vec![vec![EdgeId(0); n]; n];
        let mut ver = vec![vec![EdgeId(0); n]; n];
        let mut diag = vec![vec![EdgeId(0); n]; n];
        for i in 0..n {
            for j in 0..n {
                hor[i][j] = b.edge(at(i, j), at(i, j + 1), 1.0);
                ver[i][j] = b.edge(at(i, j), at(i + 1, j), 1.0);
                diag[i][j] = b.edge(at(i, j), at(i + 1, j + 1), SQRT_2);
            }
        }
        for i in 0..n {
            for j in 0..n {
                b.face(hor[i][j], ver[i][(j + 1) % n], diag[i][j]);
                b.face(diag[i][j], hor[(i + 1) % n][j], ver[i][j]);
            }
        }
        b.build().unwrap()
    }

    /// Book of doubled triangular pages on a single spine edge; the complex is
    /// complete and only the spine and its ends are singular.
    fn pillow_book(pages: usize) -> MetricComplex {
        let mut b = ComplexBuilder::new(0.0);
        let s0 = b.vertex("s0");
        let s1 = b.vertex("s1");
        let spine = b.edge_named("spine", s0, s1, 1.0);
        for p in 0..pages {
            let tip = b.vertex(format!("tip{p}"));
            let e0 = b.edge(s0, tip, 1.0);
            let e1 = b.edge(s1, tip, 1.0);
            b.face(spine, e1, e0);
            b.face(spine, e1, e0);
        }
        b.build().unwrap()
    }

    /// Book on a two-edge spine whose doubled pages span both edges, so the
    /// midpoint is absorbed into the arc. Returns the spine edges too.
    fn long_pillow_book(pages: usize) -> (MetricComplex, EdgeId, EdgeId) {
        let mut b = ComplexBuilder::new(0.0);
        let s0 = b.vertex("s0");
        let mid = b.vertex("mid");
        let s1 = b.vertex("s1");
        let sp0 = b.edge_named("sp0", s0, mid, 1.0);
        let sp1 = b.edge_named("sp1", mid, s1, 1.0);
        for p in 0..pages {
            let tip = b.vertex(format!("tip{p}"));
            let left = b.edge(s0, tip, SQRT_2);
            let right = b.edge(s1, tip, SQRT_2);
            for _copy in 0..2 {
                let fold = b.edge(mid, tip, 1.0);
                b.face(sp0, fold, left);
                b.face(sp1, right, fold);
            }
        }
        (b.build().unwrap(), sp0, sp1)
    }

    /// Open book of single-sheet pages over a two-edge spine, bent at the
    /// midpoint so the second page triangle meets the spine at `theta2`.
    fn open_book(theta2: f64) -> (MetricComplex, EdgeId, EdgeId) {
        let mut b = ComplexBuilder::new(0.0);
        let s0 = b.vertex("s0");
        let mid = b.vertex("mid");
        let s1 = b.vertex("s1");
        let sp0 = b.edge_named("sp0", s0, mid, 1.0);
        let sp1 = b.edge_named("sp1", mid, s1, 1.0);
        let right_len = (2.0 - 2.0 * theta2.cos()).sqrt();
        for p in 0..3 {
            let tip = b.vertex(format!("tip{p}"));
            let left = b.edge(s0, tip, SQRT_2);
            let right = b.edge(s1, tip, right_len);
            let fold = b.edge(mid, tip, 1.0);
            b.face(sp0, fold, left);
            b.face(sp1, right, fold);
        }
        b.seam("spine", vec![sp0, sp1]);
        (b.build().unwrap(), sp0, sp1)
    }

    /// Star of `arms` pillow books sharing the central vertex `c`.
    fn star_of_books(arms: usize, pages: usize, reversed: bool) -> MetricComplex {
        let mut b = ComplexBuilder::new(0.0);
        let c = b.vertex("c");
        let order: Vec<usize> = if reversed {
            (0..arms).rev().collect()
        } else {
            (0..arms).collect()
        };
        for a in order {
            let u = b.vertex(format!("u{a}"));
            let spine = b.edge_named(format!("spine{a}"), c, u, 1.0);
            for p in 0..pages {
                let tip = b.vertex(format!("t{a}x{p}"));
                let e0 = b.edge(c, tip, 1.0);
                let e1 = b.edge(u, tip, 1.0);
                b.face(spine, e1, e0);
                b.face(spine, e1, e0);
            }
        }
        b.build().unwrap()
    }

    /// Two flat unit cones over a theta graph with arcs (π, π, π), glued rim
    /// to rim; the rays over the two degree-3 link nodes form the crease.
    fn doubled_theta_cone(m: usize) -> MetricComplex {
        let mut b = ComplexBuilder::new(0.0);
        let top = b.vertex("top");
        let bot = b.vertex("bot");
        let p = b.vertex("p");
        let q = b.vertex("q");
        let chord = 2.0 * (PI / (2.0 * m as f64)).sin();
        let top_p = b.edge_named("top-p", top, p, 1.0);
        let top_q = b.edge_named("top-q", top, q, 1.0);
        let bot_p = b.edge_named("bot-p", bot, p, 1.0);
        let bot_q = b.edge_named("bot-q", bot, q, 1.0);
        for arc in 0..3 {
            let mut rim = vec![p];
            for s in 1..m {
                rim.push(b.vertex(format!("r{arc}x{s}")));
            }
            rim.push(q);
            let mut top_spokes = vec![top_p];
            let mut bot_spokes = vec![bot_p];
            for s in 1..m {
                top_spokes.push(b.edge(top, rim[s], 1.0));
                bot_spokes.push(b.edge(bot, rim[s], 1.0));
            }
            top_spokes.push(top_q);
            bot_spokes.push(bot_q);
            for s in 0..m {
                let rim_edge = b.edge(rim[s], rim[s + 1], chord);
                b.face(top_spokes[s], rim_edge, top_spokes[s + 1]);
                b.face(bot_spokes[s], rim_edge, bot_spokes[s + 1]);
            }
        }
        b.build().unwrap()
    }

    /// Flat unit disk triangulated as a closed fan; the rim is a regular n-gon.
    fn ngon_fan(n: usize) -> (MetricComplex, Vec<EdgeId>, Vec<FaceId>) {
        let mut b = ComplexBuilder::new(0.0);
        let o = b.vertex("o");
        let rim: Vec<VertexId> = (0..n).map(|i| b.vertex(format!("c{i}"))).collect();
        let spokes: Vec<EdgeId> = rim.iter().map(|&v| b.edge(o, v, 1.0)).collect();
        let chord = 2.0 * (PI / n as f64).sin();
        let mut rims = Vec::new();
        let mut faces = Vec::new();
        for i in 0..n {
            let e = b.edge(rim[i], rim[(i + 1) % n], chord);
            rims.push(e);
            faces.push(b.face(spokes[i], e, spokes[(i + 1) % n]));
        }
        (b.build().unwrap(), rims, faces)
    }

    /// Flat fan over a circular arc of the given radius and central angle,
    /// split into `n` sectors. Returns the rim polyline and the fan faces.
    fn arc_fan(radius: f64, total_angle: f64, n: usize) -> (MetricComplex, Vec<EdgeId>, Vec<FaceId>) {
        let mut b = ComplexBuilder::new(0.0);
        let o = b.vertex("o");
        let rim: Vec<VertexId> = (0..=n).map(|i| b.vertex(format!("c{i}"))).collect();
        let spokes: Vec<EdgeId> = rim.iter().map(|&v| b.edge(o, v, radius)).collect();
        let chord = 2.0 * radius * (total_angle / (2.0 * n as f64)).sin();
        let mut rims = Vec::new();
        let mut faces = Vec::new();
        for i in 0..n {
            let e = b.edge(rim[i], rim[i + 1], chord);
            rims.push(e);
            faces.push(b.face(spokes[i], e, spokes[i + 1]));
        }
        (b.build().unwrap(), rims, faces)
    }

    /// Two seams leaving `p` whose directions are `gap` apart in the link,
    /// joined by a doubled sliver face; each seam carries one pillow page.
    fn kissing_arcs(gap: f64) -> MetricComplex {
        let mut b = ComplexBuilder::new(0.0);
        let p = b.vertex("p");
        let x1 = b.vertex("x1");
        let x2 = b.vertex("x2");
        let e1 = b.edge_named("seam1", p, x1, 1.0);
        let e2 = b.edge_named("seam2", p, x2, 1.0);
        for (i, (arm, far)) in [(e1, x1), (e2, x2)].into_iter().enumerate() {
            let tip = b.vertex(format!("tip{i}"));
            let c0 = b.edge(p, tip, 1.0);
            let c1 = b.edge(far, tip, 1.0);
            b.face(arm, c1, c0);
            b.face(arm, c1, c0);
        }
        let cross = b.edge(x1, x2, gap);
        b.face(e1, cross, e2);
        b.face(e1, cross, e2);
        b.build().unwrap()
    }

    #[test]
    fn flat_torus_has_no_singular_points() {
        let cx = flat_torus();
        let set = extract_singular_set(&cx);
        assert!(set.is_empty(), "torus should be regular: {set:?}");
        let graph = build_singular_graph(&cx);
        assert!(graph.vertices.is_empty());
        assert!(graph.edges.is_empty());
    }

    #[test]
    fn pillow_book_spine_is_the_whole_singular_set() {
        let cx = pillow_book(3);
        let spine = cx.edge_by_name("spine").unwrap();
        let set = extract_singular_set(&cx);
        assert_eq!(set.edges, vec![spine]);
        assert_eq!(set.vertices, vec![VertexId(0), VertexId(1)]);
        let graph = build_singular_graph(&cx);
        assert_eq!(graph.edges.len(), 1);
        let arc = &graph.edges[0];
        assert_eq!(arc.ends, [VertexId(0), VertexId(1)]);
        assert_eq!(arc.polyline, vec![spine]);
        assert_abs_diff_eq!(arc.length, 1.0, epsilon = 0.0);
        assert_eq!(arc.sides.len(), 6);
        assert!(arc.sides.iter().all(|s| s.turn.atoms.is_empty()));
        assert_eq!(graph.order_of(VertexId(0)), Some(1));
        assert_eq!(graph.order_of(VertexId(1)), Some(1));
    }

    #[test]
    fn subdivided_spine_chains_into_one_arc() {
        let (cx, sp0, sp1) = long_pillow_book(3);
        let mid = cx.vertex_by_name("mid").unwrap();
        let graph = build_singular_graph(&cx);
        assert_eq!(graph.edges.len(), 1);
        let arc = &graph.edges[0];
        assert_eq!(arc.polyline, vec![sp0, sp1]);
        assert_eq!(arc.ends, [VertexId(0), VertexId(2)]);
        assert_abs_diff_eq!(arc.length, 2.0, epsilon = 0.0);
        assert!(graph.order_of(mid).is_none(), "midpoint must be absorbed");
        assert_eq!(arc.sides.len(), 6);
        for side in &arc.sides {
            assert_eq!(side.turn.atoms.len(), 1);
            let (v, atom) = side.turn.atoms[0];
            assert_eq!(v, mid);
            assert_abs_diff_eq!(atom, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(side.turn.total_variation, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn crossing_books_meet_in_an_order_four_vertex() {
        let cx = star_of_books(4, 3, false);
        let c = cx.vertex_by_name("c").unwrap();
        let graph = build_singular_graph(&cx);
        assert_eq!(graph.order_of(c), Some(4));
        assert_eq!(graph.edges.len(), 4);
        for arc in &graph.edges {
            assert_eq!(arc.polyline.len(), 1);
            assert_eq!(arc.ends[0], c);
            assert_eq!(arc.sides.len(), 6);
        }
        for a in 0..4 {
            let u = cx.vertex_by_name(&format!("u{a}")).unwrap();
            assert_eq!(graph.order_of(u), Some(1));
        }
    }

    #[test]
    fn doubled_theta_cone_rays_form_the_crease() {
        let cx = doubled_theta_cone(4);
        let set = extract_singular_set(&cx);
        let rays: Vec<EdgeId> = ["top-p", "top-q", "bot-p", "bot-q"]
            .iter()
            .map(|n| cx.edge_by_name(n).unwrap())
            .collect();
        let mut expected = rays.clone();
        expected.sort();
        assert_eq!(set.edges, expected);
        assert_eq!(
            set.vertices,
            vec![VertexId(0), VertexId(1), VertexId(2), VertexId(3)]
        );
    }

    #[test]
    fn doubled_theta_cone_chains_into_a_loop() {
        let m = 4;
        let cx = doubled_theta_cone(m);
        let graph = build_singular_graph(&cx);
        let top = cx.vertex_by_name("top").unwrap();
        assert_eq!(graph.vertices.len(), 1);
        assert_eq!(graph.order_of(top), Some(2));
        assert_eq!(graph.edges.len(), 1);
        let arc = &graph.edges[0];
        assert_eq!(arc.ends, [top, top]);
        assert_eq!(arc.polyline.len(), 4);
        assert_abs_diff_eq!(arc.length, 4.0, epsilon = 0.0);
        assert_eq!(arc.sides.len(), 3);
        let sector = PI / m as f64;
        let bot = cx.vertex_by_name("bot").unwrap();
        for side in &arc.sides {
            assert_eq!(side.turn.atoms.len(), 3);
            for &(v, atom) in &side.turn.atoms {
                if v == bot {
                    // the crease runs straight through the second apex
                    assert_abs_diff_eq!(atom, 0.0, epsilon = 1e-12);
                } else {
                    // crossing the rim turns by one sector angle
                    assert_abs_diff_eq!(atom, sector, epsilon = 1e-12);
                }
            }
            assert_abs_diff_eq!(side.turn.total_variation, 2.0 * sector, epsilon = 1e-12);
        }
    }

    #[test]
    fn straight_spine_passes_audit_with_zero_turns() {
        let (cx, sp0, sp1) = open_book(PI / 2.0);
        let report = cx.audit_conditions(DEFAULT_AUDIT_TOL).unwrap();
        assert!(report.passed(), "straight book should pass: {report:?}");
        let sides = enumerate_sides(&cx, &[sp0, sp1]).unwrap();
        assert_eq!(sides.len(), 3);
        let mut atoms = Vec::new();
        for faces in &sides {
            let turn = turn_measure(&cx, &[sp0, sp1], faces).unwrap();
            assert_eq!(turn.atoms.len(), 1);
            atoms.push(turn.atoms[0].1);
        }
        for (i, &a) in atoms.iter().enumerate() {
            assert_abs_diff_eq!(a, 0.0, epsilon = 1e-12);
            for &b in &atoms[i + 1..] {
                assert!(a + b <= 1e-9, "paired turn sum must stay nonpositive");
            }
        }
    }

    #[test]
    fn bent_spine_fails_audit_and_turns_show_it() {
        let (cx, sp0, sp1) = open_book(PI / 3.0);
        let report = cx.audit_conditions(DEFAULT_AUDIT_TOL).unwrap();
        assert!(!report.passed(), "bent book must fail the audit");
        let sides = enumerate_sides(&cx, &[sp0, sp1]).unwrap();
        let turns: Vec<TurnMeasure> = sides
            .iter()
            .map(|faces| turn_measure(&cx, &[sp0, sp1], faces).unwrap())
            .collect();
        for turn in &turns {
            assert_abs_diff_eq!(turn.atoms[0].1, PI / 6.0, epsilon = 1e-12);
            assert_abs_diff_eq!(turn.total_variation, PI / 6.0, epsilon = 1e-12);
        }
        let pair = turns[0].atoms[0].1 + turns[1].atoms[0].1;
        assert!(pair > 1e-9, "positive paired turn matches the audit failure");
    }

    #[test]
    fn regular_polygon_turns_sum_to_a_full_circle() {
        let n = 8;
        let (cx, rims, faces) = ngon_fan(n);
        // close the rim into a loop by repeating the first edge and face
        let mut polyline = rims.clone();
        polyline.push(rims[0]);
        let mut side = faces.clone();
        side.push(faces[0]);
        let turn = turn_measure(&cx, &polyline, &side).unwrap();
        assert_eq!(turn.atoms.len(), n);
        for &(_, atom) in &turn.atoms {
            assert_abs_diff_eq!(atom, 2.0 * PI / n as f64, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(turn.total_variation, 2.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn fan_polyline_turn_matches_arc_curvature() {
        // radius 2 arc of length 1: curvature 0.5, total turn 0.5
        let (radius, angle, n) = (2.0, 0.5, 16);
        let (cx, rims, faces) = arc_fan(radius, angle, n);
        let turn = turn_measure(&cx, &rims, &faces).unwrap();
        let step = angle / n as f64;
        assert_eq!(turn.atoms.len(), n - 1);
        for &(_, atom) in &turn.atoms {
            assert_abs_diff_eq!(atom, step, epsilon = 1e-12);
        }
        let target = angle;
        assert_abs_diff_eq!(
            turn.total_variation,
            target * (n as f64 - 1.0) / n as f64,
            epsilon = 1e-12
        );
        assert!((turn.total_variation - target).abs() <= target / n as f64 + 1e-9);
    }

    #[test]
    fn kissing_arcs_keep_their_meeting_vertex() {
        let cx = kissing_arcs(1e-8);
        let p = cx.vertex_by_name("p").unwrap();
        let graph = build_singular_graph(&cx);
        assert_eq!(graph.order_of(p), Some(2), "angle-zero meeting stays a vertex");
        assert_eq!(graph.edges.len(), 2);
        assert!(graph.edges.iter().all(|a| a.polyline.len() == 1));
        assert!(graph.edges.iter().all(|a| a.sides.len() == 4));

        // a wide meeting is absorbed; its flap sheets leave no coherent sides
        let wide = kissing_arcs(0.5);
        let graph = build_singular_graph(&wide);
        assert!(graph.order_of(wide.vertex_by_name("p").unwrap()).is_none());
        assert_eq!(graph.edges.len(), 1);
        assert_eq!(graph.edges[0].polyline.len(), 2);
        assert!(graph.edges[0].sides.is_empty());
        let seams = [
            wide.edge_by_name("seam1").unwrap(),
            wide.edge_by_name("seam2").unwrap(),
        ];
        assert!(matches!(
            enumerate_sides(&wide, &seams),
            Err(SingularError::IncoherentSides(_))
        ));
    }

    #[test]
    fn isolated_pinch_vertex_has_order_zero() {
        let mut b = ComplexBuilder::new(0.0);
        let a = b.vertex("a");
        for part in 0..2 {
            let u = b.vertex(format!("u{part}"));
            let w = b.vertex(format!("w{part}"));
            let e0 = b.edge(a, u, 1.0);
            let e1 = b.edge(u, w, 1.0);
            let e2 = b.edge(w, a, 1.0);
            b.face(e0, e1, e2);
            b.face(e0, e1, e2);
        }
        let cx = b.build().unwrap();
        let set = extract_singular_set(&cx);
        assert!(set.edges.is_empty());
        assert_eq!(set.vertices, vec![a]);
        let graph = build_singular_graph(&cx);
        assert_eq!(graph.vertices.len(), 1);
        assert_eq!(graph.order_of(a), Some(0));
        assert!(graph.edges.is_empty());
    }

    #[test]
    fn order_bound_holds_on_the_doubled_cone() {
        let cx = doubled_theta_cone(4);
        let top = cx.vertex_by_name("top").unwrap();
        let report = order_bound_audit(&cx, top, 10.0).unwrap();
        assert!(report.passed(), "cone orders stay within the bound: {report:?}");
        assert_eq!(report.findings.len(), 1);
        assert_abs_diff_eq!(report.findings[0].measured, 2.0, epsilon = 0.0);
        assert_abs_diff_eq!(report.findings[0].threshold, 2.0, epsilon = 0.0);
    }

    #[test]
    fn order_bound_flags_an_overbranched_star() {
        let cx = star_of_books(10, 3, false);
        let u0 = cx.vertex_by_name("u0").unwrap();
        let report = order_bound_audit(&cx, u0, 3.0).unwrap();
        assert!(!report.passed());
        let violations: Vec<&Finding> = report.violations().collect();
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].location, "vertex c");
        assert_abs_diff_eq!(violations[0].measured, 10.0, epsilon = 0.0);
        assert_abs_diff_eq!(violations[0].threshold, 8.0, epsilon = 0.0);
    }

    #[test]
    fn rebuilding_is_identical_and_enumeration_independent() {
        let cx = star_of_books(4, 3, false);
        let g1 = build_singular_graph(&cx);
        let g2 = build_singular_graph(&cx);
        assert_eq!(g1, g2);
        assert_eq!(g1.to_text(&cx), g2.to_text(&cx));

        // same star declared with the arms in reverse order
        let rev = star_of_books(4, 3, true);
        let g3 = build_singular_graph(&rev);
        let sig = |cx: &MetricComplex, g: &SingularGraph| {
            let mut vs: Vec<(String, usize)> = g
                .vertices
                .iter()
                .map(|v| (cx.vertex_name(v.vertex).to_string(), v.order))
                .collect();
            vs.sort();
            let mut es: Vec<(String, String, String, usize)> = g
                .edges
                .iter()
                .map(|a| {
                    let mut ends = [
                        cx.vertex_name(a.ends[0]).to_string(),
                        cx.vertex_name(a.ends[1]).to_string(),
                    ];
                    ends.sort();
                    let [lo, hi] = ends;
                    (lo, hi, fmt_f64(a.length), a.sides.len())
                })
                .collect();
            es.sort();
            (vs, es)
        };
        assert_eq!(sig(&cx, &g1), sig(&rev, &g3));
    }

    #[test]
    fn incoherent_sides_are_rejected() {
        let (cx, sp0, sp1) = long_pillow_book(3);
        let at0: Vec<FaceId> = cx.faces_at_edge(sp0).iter().map(|&(f, _)| f).collect();
        let at1: Vec<FaceId> = cx.faces_at_edge(sp1).iter().map(|&(f, _)| f).collect();
        // faces from different pillow copies do not share a link component
        assert!(matches!(
            turn_measure(&cx, &[sp0, sp1], &[at0[0], at1[1]]),
            Err(SingularError::IncoherentSides(_))
        ));
        assert!(matches!(
            turn_measure(&cx, &[sp0, sp1], &[at0[0]]),
            Err(SingularError::IncoherentSides(_))
        ));
        assert!(matches!(
            turn_measure(&cx, &[sp0, sp1], &[at1[0], at1[0]]),
            Err(SingularError::IncoherentSides(_))
        ));
        let stray = cx.faces_at_edge(sp1)[0].0;
        let tip_edge = cx
            .edges()
            .find(|(_, e)| {
                e.ends.contains(&cx.vertex_by_name("s1").unwrap())
                    && e.ends.contains(&cx.vertex_by_name("tip0").unwrap())
            })
            .map(|(id, _)| id)
            .unwrap();
        assert!(matches!(
            turn_measure(&cx, &[sp0, tip_edge], &[at0[0], stray]),
            Err(SingularError::BrokenPolyline)
        ));
    }

    #[test]
    fn graph_text_lists_vertices_arcs_and_turns() {
        let cx = pillow_book(3);
        let graph = build_singular_graph(&cx);
        let text = graph.to_text(&cx);
        assert!(text.starts_with("catk singular graph v1\n"));
        assert!(text.contains("v s0 order 1\n"));
        assert!(text.contains("v s1 order 1\n"));
        assert!(text.contains("e s0 s1 length 1 path spine\n"));
        assert_eq!(text.lines().filter(|l| l.starts_with("side ")).count(), 6);
    }
}
