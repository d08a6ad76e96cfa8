//! Deterministic builders for the example gallery: flat cones over metric
//! link graphs, a developed double-flap cone with marked directrices, strips
//! of convex polyline bumps carrying concave half-plane sheets, and the
//! middle-interval removal ladder that squeezes a bump strip toward a Cantor
//! set.
//!
//! Everything here is pure construction. The same arguments always produce
//! the same complex, vertex by vertex, so serialized output can be compared
//! byte for byte across runs.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use thiserror::Error;

use crate::complex::{ComplexBuilder, ComplexError, EdgeId, FaceId, MetricComplex, VertexId};
use crate::geodesics::SurfacePoint;

/// Segments used for each bump polyline.
const BUMP_SEGS: usize = 8;
/// Fan wedges in the quarter-turn cap closing a sheet at a strip end.
const CAP_SEGS: usize = 4;
/// Width of the collar realizing each half-plane sheet.
const COLLAR_DEPTH: f64 = 0.5;
/// Residual direction at bump tips; two tangent polylines meet at twice this
/// angle, which stays below the singular-graph merge tolerance so strip ends
/// survive as graph vertices.
const TIP_ANGLE: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("invalid link graph: {0}")]
    InvalidLink(&'static str),
    #[error("invalid parameter: {0}")]
    BadParameter(&'static str),
    #[error("bump schedule spends {total} of total turn; the budget must stay below 2*pi")]
    BudgetExceeded { total: f64 },
    #[error(transparent)]
    Complex(#[from] ComplexError),
}

/// A finite metric graph given as weighted arcs between numbered nodes, used
/// as the prescribed apex link when building cones.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    pub nodes: usize,
    pub arcs: Vec<(usize, usize, f64)>,
}

impl GraphSpec {
    /// A circle of the given circumference, split into three arcs so that no
    /// arc closes on a single node.
    pub fn circle(circumference: f64) -> Self {
        let third = circumference / 3.0;
        GraphSpec {
            nodes: 3,
            arcs: vec![
                (0, 1, third),
                (1, 2, third),
                (2, 0, circumference - 2.0 * third),
            ],
        }
    }

    /// Two nodes joined by three parallel arcs.
    pub fn theta(l0: f64, l1: f64, l2: f64) -> Self {
        GraphSpec {
            nodes: 2,
            arcs: vec![(0, 1, l0), (0, 1, l1), (0, 1, l2)],
        }
    }

    /// A single arc with two endpoints.
    pub fn interval(len: f64) -> Self {
        GraphSpec {
            nodes: 2,
            arcs: vec![(0, 1, len)],
        }
    }

    /// Sum of all arc lengths.
    pub fn total_length(&self) -> f64 {
        self.arcs.iter().map(|a| a.2).sum()
    }

    fn validate(&self) -> Result<(), GeneratorError> {
        if self.nodes == 0 || self.arcs.is_empty() {
            return Err(GeneratorError::InvalidLink(
                "the graph needs at least one node and one arc",
            ));
        }
        let mut used = vec![false; self.nodes];
        for &(i, j, len) in &self.arcs {
            if i >= self.nodes || j >= self.nodes {
                return Err(GeneratorError::InvalidLink("arc endpoint out of range"));
            }
            if i == j {
                return Err(GeneratorError::InvalidLink(
                    "loop arcs are not supported; insert an intermediate node",
                ));
            }
            if !(len > 0.0) || !len.is_finite() {
                return Err(GeneratorError::InvalidLink(
                    "arc lengths must be positive and finite",
                ));
            }
            used[i] = true;
            used[j] = true;
        }
        if used.iter().any(|u| !u) {
            return Err(GeneratorError::InvalidLink("every node must meet an arc"));
        }
        Ok(())
    }
}

/// Flat open cone of radius `r` over a metric graph: one sector fan per arc,
/// `mesh` sectors each, all meeting at the apex.
///
/// The apex link reproduces the input graph arc by arc (lengths match to
/// inverse-trig roundoff), rim vertices keep open links, and node rays are
/// named `ray-n{i}` so callers can find them.
pub fn gen_cone(link: &GraphSpec, r: f64, mesh: usize) -> Result<MetricComplex, GeneratorError> {
    link.validate()?;
    if !(r > 0.0) || !r.is_finite() {
        return Err(GeneratorError::BadParameter("cone radius must be positive"));
    }
    if mesh < 3 {
        return Err(GeneratorError::BadParameter(
            "mesh needs at least 3 sectors per arc",
        ));
    }
    for &(_, _, len) in &link.arcs {
        if len / mesh as f64 >= PI {
            return Err(GeneratorError::BadParameter(
                "sector angle reaches pi; raise the mesh",
            ));
        }
    }
    let mut b = ComplexBuilder::new(0.0);
    let apex = b.vertex("apex");
    let node_rim: Vec<VertexId> = (0..link.nodes)
        .map(|i| b.vertex(format!("n{i}")))
        .collect();
    let node_spoke: Vec<EdgeId> = (0..link.nodes)
        .map(|i| b.edge_named(format!("ray-n{i}"), apex, node_rim[i], r))
        .collect();
    for (a, &(i, j, len)) in link.arcs.iter().enumerate() {
        let phi = len / mesh as f64;
        let chord = 2.0 * r * (0.5 * phi).sin();
        let mut prev_rim = node_rim[i];
        let mut prev_spoke = node_spoke[i];
        for s in 1..=mesh {
            let (rim, spoke) = if s == mesh {
                (node_rim[j], node_spoke[j])
            } else {
                let v = b.vertex(format!("a{a}s{s}"));
                (v, b.edge(apex, v, r))
            };
            let c = b.edge(prev_rim, rim, chord);
            b.face(prev_spoke, c, spoke);
            prev_rim = rim;
            prev_spoke = spoke;
        }
    }
    b.base_point("apex", apex);
    Ok(b.build()?)
}

/// Marked data returned with the double-flap developed cone: the planar base
/// point, the apex, the matched crossing points on the two interior rays, and
/// equal-length sample chains along the two marked directrices.
#[derive(Debug, Clone)]
pub struct NondiskMarks {
    pub base: VertexId,
    pub apex: VertexId,
    pub sigma_plus_unit: VertexId,
    pub q1: SurfacePoint,
    pub q2: SurfacePoint,
    /// Common distance from the base point to `q1` and to `q2`.
    pub dist_pq: f64,
    /// Common arc length of the two sampled directrices.
    pub length: f64,
    pub alpha1: Vec<SurfacePoint>,
    pub alpha2: Vec<SurfacePoint>,
}

/// Sample count (intervals) along each marked directrix.
const DIRECTRIX_SAMPLES: usize = 64;
/// Ring ladder for the developed cone, in units of `scale`.
const NONDISK_RINGS: [f64; 10] = [0.35, 0.7, 1.0, 1.5, 2.5, 4.0, 6.5, 10.0, 14.0, 20.0];
/// Ring index of the marked base point (radius 10 * scale).
const BASE_RING: usize = 7;
/// Ring index of the unit point on the `sigp` ray.
const UNIT_RING: usize = 2;

struct ConeGrid {
    rings: Vec<f64>,
    node_s: [f64; 5],
    arc_len: [f64; 5],
    mesh: usize,
    total: f64,
    apex: VertexId,
    rim: Vec<Vec<VertexId>>,
    sector: Vec<FaceId>,
    cells: Vec<Vec<(FaceId, FaceId)>>,
}

impl ConeGrid {
    fn ndir(&self) -> usize {
        5 * self.mesh
    }

    fn dir_of(&self, s: f64) -> (usize, f64, f64) {
        let mut s = s % self.total;
        if s < 0.0 {
            s += self.total;
        }
        let mut k = 0;
        for i in (0..5).rev() {
            if s >= self.node_s[i] - 1e-15 {
                k = i;
                break;
            }
        }
        let w = self.arc_len[k] / self.mesh as f64;
        let step = (((s - self.node_s[k]) / w) as usize).min(self.mesh - 1);
        let off = (s - self.node_s[k] - step as f64 * w).clamp(0.0, w);
        (k * self.mesh + step, off, w)
    }

    fn locate(&self, cx: &MetricComplex, s: f64, rho: f64) -> SurfacePoint {
        let (d, off, w) = self.dir_of(s);
        let dn = (d + 1) % self.ndir();
        let p = (rho * off.cos(), rho * off.sin());
        if rho <= self.rings[0] {
            let a = (self.rings[0], 0.0);
            let bb = (self.rings[0] * w.cos(), self.rings[0] * w.sin());
            let wts = bary2(p, (0.0, 0.0), a, bb);
            return place_on_face(
                cx,
                self.sector[d],
                [self.apex, self.rim[d][0], self.rim[dn][0]],
                wts,
            );
        }
        let mut j = self.rings.len() - 2;
        for g in 0..self.rings.len() - 1 {
            if rho <= self.rings[g + 1] {
                j = g;
                break;
            }
        }
        let a = (self.rings[j], 0.0);
        let bb = (self.rings[j] * w.cos(), self.rings[j] * w.sin());
        let c = (self.rings[j + 1] * w.cos(), self.rings[j + 1] * w.sin());
        let dd = (self.rings[j + 1], 0.0);
        let w1 = bary2(p, a, bb, c);
        if w1.iter().all(|&x| x >= -1e-9) {
            place_on_face(
                cx,
                self.cells[d][j].0,
                [self.rim[d][j], self.rim[dn][j], self.rim[dn][j + 1]],
                w1,
            )
        } else {
            let w2 = bary2(p, a, c, dd);
            place_on_face(
                cx,
                self.cells[d][j].1,
                [self.rim[d][j], self.rim[dn][j + 1], self.rim[d][j + 1]],
                w2,
            )
        }
    }
}

fn bary2(p: (f64, f64), a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> [f64; 3] {
    let det = (b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1);
    let wb = ((p.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (p.1 - a.1)) / det;
    let wc = ((b.0 - a.0) * (p.1 - a.1) - (p.0 - a.0) * (b.1 - a.1)) / det;
    [1.0 - wb - wc, wb, wc]
}

fn place_on_face(
    cx: &MetricComplex,
    f: FaceId,
    corners: [VertexId; 3],
    weights: [f64; 3],
) -> SurfacePoint {
    let vs = cx.face(f).vertices;
    let mut bary = [0.0; 3];
    for k in 0..3 {
        let slot = vs
            .iter()
            .position(|v| *v == corners[k])
            .expect("cell corners lie on the recorded face");
        bary[slot] = weights[k].max(0.0);
    }
    let sum: f64 = bary.iter().sum();
    for x in &mut bary {
        *x /= sum;
    }
    SurfacePoint::new(f, bary).expect("clamped barycentric coordinates are valid")
}

/// Flat cone over a circle-plus-chord link, triangulated on a fixed ring
/// ladder, with a marked planar base point and two analytically developed
/// directrices of common length leaving it.
///
/// The circle carries nodes `sigp`, `xi`, `sigm`, `dp`, `ell` in order, with
/// arcs of lengths `b`, `b`, `pi/2 - a`, `pi/2`, `pi - a`; the extra flap of
/// angular width `theta` is glued along the full `xi` and `ell` rays, which
/// become the only interior singular edges. Requires `0 < a < b < a + pi/4`
/// and `pi - (b - a) <= theta < pi`, which keeps the apex systole at least
/// `2*pi`.
pub fn gen_nondisk(
    a: f64,
    b: f64,
    theta: f64,
    scale: f64,
    mesh: usize,
) -> Result<(MetricComplex, NondiskMarks), GeneratorError> {
    if !(a > 0.0 && a < FRAC_PI_2) {
        return Err(GeneratorError::BadParameter(
            "the opening half-angle a must lie in (0, pi/2)",
        ));
    }
    if !(b > a && b < a + FRAC_PI_4) {
        return Err(GeneratorError::BadParameter(
            "the ray offset b must lie in (a, a + pi/4)",
        ));
    }
    if !(theta >= PI - (b - a) && theta < PI) {
        return Err(GeneratorError::BadParameter(
            "the flap width theta must lie in [pi - (b - a), pi)",
        ));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(GeneratorError::BadParameter("scale must be positive"));
    }
    if mesh < 3 {
        return Err(GeneratorError::BadParameter(
            "mesh needs at least 3 sectors per arc",
        ));
    }

    let node_s = [
        0.0,
        b,
        2.0 * b,
        2.0 * b + FRAC_PI_2 - a,
        2.0 * b + PI - a,
    ];
    let arc_len = [b, b, FRAC_PI_2 - a, FRAC_PI_2, PI - a];
    let total = 2.0 * b + TAU - 2.0 * a;
    let rings: Vec<f64> = NONDISK_RINGS.iter().map(|x| x * scale).collect();
    let nr = rings.len();
    let ndir = 5 * mesh;
    let node_names = ["sigp", "xi", "sigm", "dp", "ell"];

    let mut bld = ComplexBuilder::new(0.0);
    let apex = bld.vertex("apex");
    let mut rim: Vec<Vec<VertexId>> = Vec::with_capacity(ndir);
    let mut rad: Vec<Vec<EdgeId>> = Vec::with_capacity(ndir);
    for d in 0..ndir {
        let col = if d % mesh == 0 {
            node_names[d / mesh].to_string()
        } else {
            format!("c{d}")
        };
        let mut col_v = Vec::with_capacity(nr);
        let mut col_e = Vec::with_capacity(nr);
        for (j, &rj) in rings.iter().enumerate() {
            let v = bld.vertex(format!("{col}-r{j}"));
            let inner = if j == 0 { apex } else { col_v[j - 1] };
            let len = if j == 0 { rj } else { rj - rings[j - 1] };
            let e = if d % mesh == 0 {
                bld.edge_named(format!("{col}-g{j}"), inner, v, len)
            } else {
                bld.edge(inner, v, len)
            };
            col_v.push(v);
            col_e.push(e);
        }
        rim.push(col_v);
        rad.push(col_e);
    }

    let mut sector = Vec::with_capacity(ndir);
    let mut cells: Vec<Vec<(FaceId, FaceId)>> = Vec::with_capacity(ndir);
    for d in 0..ndir {
        let dn = (d + 1) % ndir;
        let w = arc_len[d / mesh] / mesh as f64;
        let chord0 = bld.edge(rim[d][0], rim[dn][0], 2.0 * rings[0] * (0.5 * w).sin());
        sector.push(bld.face(rad[d][0], chord0, rad[dn][0]));
        let mut col_cells = Vec::with_capacity(nr - 1);
        let mut inner_chord = chord0;
        for j in 0..nr - 1 {
            let outer_chord = bld.edge(
                rim[d][j + 1],
                rim[dn][j + 1],
                2.0 * rings[j + 1] * (0.5 * w).sin(),
            );
            let diag_len = (rings[j] * rings[j] + rings[j + 1] * rings[j + 1]
                - 2.0 * rings[j] * rings[j + 1] * w.cos())
            .sqrt();
            let diag = bld.edge(rim[d][j], rim[dn][j + 1], diag_len);
            let t1 = bld.face(inner_chord, rad[dn][j + 1], diag);
            let t2 = bld.face(diag, outer_chord, rad[d][j + 1]);
            col_cells.push((t1, t2));
            inner_chord = outer_chord;
        }
        cells.push(col_cells);
    }

    // Flap fan of width theta, sharing the xi and ell radial columns.
    let xi_dir = mesh;
    let ell_dir = 4 * mesh;
    let wf = theta / mesh as f64;
    let mut frim: Vec<Vec<VertexId>> = vec![rim[xi_dir].clone()];
    let mut frad: Vec<Vec<EdgeId>> = vec![rad[xi_dir].clone()];
    for f in 1..mesh {
        let mut col_v = Vec::with_capacity(nr);
        let mut col_e = Vec::with_capacity(nr);
        for (j, &rj) in rings.iter().enumerate() {
            let v = bld.vertex(format!("fl{f}-r{j}"));
            let inner = if j == 0 { apex } else { col_v[j - 1] };
            let len = if j == 0 { rj } else { rj - rings[j - 1] };
            col_e.push(bld.edge(inner, v, len));
            col_v.push(v);
        }
        frim.push(col_v);
        frad.push(col_e);
    }
    frim.push(rim[ell_dir].clone());
    frad.push(rad[ell_dir].clone());
    for f in 0..mesh {
        let chord0 = bld.edge(frim[f][0], frim[f + 1][0], 2.0 * rings[0] * (0.5 * wf).sin());
        bld.face(frad[f][0], chord0, frad[f + 1][0]);
        let mut inner_chord = chord0;
        for j in 0..nr - 1 {
            let outer_chord = bld.edge(
                frim[f][j + 1],
                frim[f + 1][j + 1],
                2.0 * rings[j + 1] * (0.5 * wf).sin(),
            );
            let diag_len = (rings[j] * rings[j] + rings[j + 1] * rings[j + 1]
                - 2.0 * rings[j] * rings[j + 1] * wf.cos())
            .sqrt();
            let diag = bld.edge(frim[f][j], frim[f + 1][j + 1], diag_len);
            bld.face(inner_chord, frad[f + 1][j + 1], diag);
            bld.face(diag, outer_chord, frad[f][j + 1]);
            inner_chord = outer_chord;
        }
    }

    let base = rim[3 * mesh][BASE_RING];
    bld.base_point("p", base);
    bld.base_point("apex", apex);
    bld.seam("ray-xi", rad[xi_dir].clone());
    bld.seam("ray-ell", rad[ell_dir].clone());
    let sigma_plus_unit = rim[0][UNIT_RING];

    let grid = ConeGrid {
        rings,
        node_s,
        arc_len,
        mesh,
        total,
        apex,
        rim,
        sector,
        cells,
    };
    let cx = bld.build()?;

    // Developed picture toward the wedge: the base direction sits at angle 0
    // and angles grow toward sigm, xi, sigp.
    let s_p = node_s[3];
    let rp = grid.rings[BASE_RING];
    let r1 = grid.rings[UNIT_RING];
    let theta1 = FRAC_PI_2 - a + 2.0 * b;
    let target = (r1 * theta1.cos(), r1 * theta1.sin());
    let d1 = ((target.0 - rp).powi(2) + target.1 * target.1).sqrt();
    let dir1 = ((target.0 - rp) / d1, target.1 / d1);
    let length = 2.0 * d1;

    let beta_xi = FRAC_PI_2 - a + b;
    let nx = (-beta_xi.sin(), beta_xi.cos());
    let t_star = -(rp * nx.0) / (dir1.0 * nx.0 + dir1.1 * nx.1);
    let q1_pt = (rp + t_star * dir1.0, t_star * dir1.1);
    let rho_q1 = (q1_pt.0 * q1_pt.0 + q1_pt.1 * q1_pt.1).sqrt();
    let q1 = grid.locate(&cx, node_s[1], rho_q1);

    let x2 = (t_star * t_star - rp * rp).sqrt();
    let q2 = grid.locate(&cx, node_s[4], x2);
    let dir2 = (-rp / t_star, x2 / t_star);

    let mut alpha1 = Vec::with_capacity(DIRECTRIX_SAMPLES + 1);
    let mut alpha2 = Vec::with_capacity(DIRECTRIX_SAMPLES + 1);
    for i in 0..=DIRECTRIX_SAMPLES {
        let t = length * i as f64 / DIRECTRIX_SAMPLES as f64;
        let p1 = (rp + t * dir1.0, t * dir1.1);
        let rho = (p1.0 * p1.0 + p1.1 * p1.1).sqrt();
        let beta = p1.1.atan2(p1.0);
        let mut s = s_p - beta;
        if s < 0.0 {
            s += total;
        }
        alpha1.push(grid.locate(&cx, s, rho));

        let p2 = (rp + t * dir2.0, t * dir2.1);
        let rho = (p2.0 * p2.0 + p2.1 * p2.1).sqrt();
        let beta = p2.1.atan2(p2.0);
        let mut s = s_p + beta;
        if s >= total {
            s -= total;
        }
        alpha2.push(grid.locate(&cx, s, rho));
    }

    let marks = NondiskMarks {
        base,
        apex,
        sigma_plus_unit,
        q1,
        q2,
        dist_pq: t_star,
        length,
        alpha1,
        alpha2,
    };
    Ok((cx, marks))
}

/// Per-bump lengths and curvature bounds for the bump-strip family.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpSchedule {
    pub lengths: Vec<f64>,
    pub curvatures: Vec<f64>,
}

impl BumpSchedule {
    /// Lengths halving from `base / 2` with a constant curvature bound.
    pub fn geometric(levels: usize, base: f64, kappa: f64) -> Self {
        let lengths = (1..=levels)
            .map(|n| base * 0.5f64.powi(n as i32))
            .collect();
        BumpSchedule {
            lengths,
            curvatures: vec![kappa; levels],
        }
    }

    /// Number of scheduled bumps.
    pub fn levels(&self) -> usize {
        self.lengths.len().min(self.curvatures.len())
    }

    /// Turn budget spent by the first `k` bumps.
    pub fn partial_budget(&self, k: usize) -> f64 {
        (0..k).map(|i| self.lengths[i] * self.curvatures[i]).sum()
    }

    /// Total turn budget of the whole schedule.
    pub fn budget(&self) -> f64 {
        self.partial_budget(self.levels())
    }

    fn validate(&self, needed: usize) -> Result<(), GeneratorError> {
        if self.levels() < needed {
            return Err(GeneratorError::BadParameter(
                "the schedule is shorter than the requested level",
            ));
        }
        for i in 0..needed {
            if !(self.lengths[i] > 0.0) || !self.lengths[i].is_finite() {
                return Err(GeneratorError::BadParameter(
                    "bump lengths must be positive and finite",
                ));
            }
            if !(self.curvatures[i] > 0.0) || !self.curvatures[i].is_finite() {
                return Err(GeneratorError::BadParameter(
                    "curvature bounds must be positive and finite",
                ));
            }
        }
        let total = self.partial_budget(needed);
        if total >= TAU {
            return Err(GeneratorError::BudgetExceeded { total });
        }
        Ok(())
    }
}

/// Which side of the strip a sheet is glued to at a given bump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SheetSide {
    Upper,
    Lower,
}

/// Side assignment for the four half-plane sheets, periodic in the bump index
/// modulo 4. `table[sheet][n % 4]` is the side of sheet `sheet` at bump `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GluingPattern {
    pub table: [[SheetSide; 4]; 4],
}

impl GluingPattern {
    /// Sheets 0 and 1 above, 2 and 3 below, at every bump.
    pub fn standard() -> Self {
        use SheetSide::{Lower as L, Upper as U};
        GluingPattern {
            table: [[U; 4], [U; 4], [L; 4], [L; 4]],
        }
    }

    /// Sheets 0 and 2 above, 1 and 3 below, at every bump. Same face counts
    /// as [`GluingPattern::standard`], different sheet assignment.
    pub fn crossed() -> Self {
        use SheetSide::{Lower as L, Upper as U};
        GluingPattern {
            table: [[U; 4], [L; 4], [U; 4], [L; 4]],
        }
    }

    /// The mod-4 alternation: sheet 0 always above; sheet 1 below exactly
    /// when n = 2 mod 4; sheet 2 above exactly when n = 0, 1 mod 4; sheet 3
    /// above exactly when n = 3 mod 4.
    pub fn alternating() -> Self {
        use SheetSide::{Lower as L, Upper as U};
        GluingPattern {
            table: [[U, U, U, U], [U, U, L, U], [U, U, L, L], [L, L, L, U]],
        }
    }

    pub fn side(&self, sheet: usize, n: usize) -> SheetSide {
        self.table[sheet][n % 4]
    }
}

enum Piece {
    Flat { len: f64 },
    Bump { len: f64, kappa: f64, level: usize },
}

struct BumpProfile {
    seg: f64,
    dirs: Vec<f64>,
    /// Sheet turn atom at each interior polyline vertex.
    turn_unit: f64,
}

/// Tangent-tipped tent profile: directions taper from `TIP_ANGLE` up to
/// `kappa*len/4` and back down, so the largest interior turn stays below the
/// sheet atom `kappa*len/BUMP_SEGS` and the total turn stays below
/// `kappa*len`.
fn bump_profile(len: f64, kappa: f64) -> BumpProfile {
    let m = BUMP_SEGS;
    let d = kappa * len / 4.0;
    let mut dirs = vec![0.0; m];
    dirs[0] = TIP_ANGLE;
    dirs[m - 1] = -TIP_ANGLE;
    for (j, dir) in dirs.iter_mut().enumerate().take(m - 1).skip(1) {
        *dir = d * (1.0 - 2.0 * (j - 1) as f64 / (m - 3) as f64);
    }
    BumpProfile {
        seg: len / m as f64,
        dirs,
        turn_unit: kappa * len / m as f64,
    }
}

fn profile_points(prof: &BumpProfile) -> Vec<(f64, f64)> {
    let mut pts = vec![(0.0, 0.0)];
    let (mut x, mut y) = (0.0, 0.0);
    for &phi in &prof.dirs {
        x += prof.seg * phi.cos();
        y += prof.seg * phi.sin();
        pts.push((x, y));
    }
    pts
}

/// Horizontal extent of a bump polyline.
fn bump_chord(len: f64, kappa: f64) -> f64 {
    let prof = bump_profile(len, kappa);
    prof.seg * prof.dirs.iter().map(|d| d.cos()).sum::<f64>()
}

/// Polyline length whose bump chord matches `gap`, found by bisection.
fn solve_bump_len(gap: f64, kappa: f64) -> f64 {
    let mut lo = gap;
    let mut hi = gap * 1.5;
    let mut guard = 0;
    while bump_chord(hi, kappa) < gap && guard < 60 {
        hi *= 1.5;
        guard += 1;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bump_chord(mid, kappa) < gap {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

const SIDE_UP: u8 = 0;
const SIDE_LOW: u8 = 1;
const SIDE_FLAT: u8 = 2;
const SIDE_NONE: u8 = 3;
const CORNER_WEDGE_LEFT: u8 = 16;
const CORNER_WEDGE_RIGHT: u8 = 17;

#[derive(Clone, Copy)]
struct ChainEdge {
    edge: EdgeId,
    left: VertexId,
    right: VertexId,
    len: f64,
    kind: u8,
}

struct BumpData {
    upper: Vec<ChainEdge>,
    lower: Vec<ChainEdge>,
    turn_unit: f64,
}

enum PieceData {
    Flat(ChainEdge),
    Bump(BumpData),
}

fn rim_corner(
    b: &mut ComplexBuilder,
    tmap: &mut HashMap<(VertexId, u8), VertexId>,
    v: VertexId,
    code: u8,
) -> VertexId {
    *tmap
        .entry((v, code))
        .or_insert_with(|| b.vertex(format!("t{}-{}", v.0, code)))
}

struct CapMaps {
    wend: HashMap<u8, VertexId>,
    w: HashMap<(u8, usize, usize), VertexId>,
    whisker: HashMap<(u8, usize), EdgeId>,
}

/// Quarter-turn fan closing one sheet at a strip end. Fan rim vertices are
/// shared within a sheet pair and the final whisker edge is shared too, so
/// the two fans of a pair close the link at the end vertex to length 2*pi.
fn build_cap(
    b: &mut ComplexBuilder,
    maps: &mut CapMaps,
    end_code: u8,
    end_v: VertexId,
    pair: usize,
    first_radius: EdgeId,
    first_t: VertexId,
) {
    let step = FRAC_PI_2 / CAP_SEGS as f64;
    let chord = 2.0 * COLLAR_DEPTH * (0.5 * step).sin();
    let mut rad_prev = first_radius;
    let mut v_prev = first_t;
    for k in 1..=CAP_SEGS {
        let (wk, radius) = if k == CAP_SEGS {
            let w = *maps.wend.entry(end_code).or_insert_with(|| {
                b.vertex(if end_code == 0 { "w-p" } else { "w-far" })
            });
            let wh = *maps
                .whisker
                .entry((end_code, pair))
                .or_insert_with(|| b.edge(end_v, w, COLLAR_DEPTH));
            (w, wh)
        } else {
            let w = *maps
                .w
                .entry((end_code, pair, k))
                .or_insert_with(|| b.vertex(format!("w{end_code}-{pair}-{k}")));
            (w, b.edge(end_v, w, COLLAR_DEPTH))
        };
        let ch = b.edge(v_prev, wk, chord);
        b.face(rad_prev, ch, radius);
        rad_prev = radius;
        v_prev = wk;
    }
}

/// Collar of one sheet along its gluing path: a rectangle per chain edge,
/// a wedge per interior turn atom, and straight pass-through (shared side
/// edges) where the atom vanishes.
fn build_collar(
    b: &mut ComplexBuilder,
    tmap: &mut HashMap<(VertexId, u8), VertexId>,
    path: &[ChainEdge],
    atoms: &[f64],
) -> (EdgeId, VertexId, EdgeId, VertexId) {
    let depth = COLLAR_DEPTH;
    let mut first: Option<(EdgeId, VertexId)> = None;
    let mut prev: Option<(EdgeId, VertexId)> = None;
    for (j, ce) in path.iter().enumerate() {
        let (ts, side_s) = match prev {
            None => {
                let code = 4 * SIDE_NONE + ce.kind;
                let t = rim_corner(b, tmap, ce.left, code);
                let e = b.edge(ce.left, t, depth);
                first = Some((e, t));
                (t, e)
            }
            Some((pe, pt)) => {
                if atoms[j - 1] > 0.0 {
                    let t = rim_corner(b, tmap, ce.left, CORNER_WEDGE_RIGHT);
                    let e = b.edge(ce.left, t, depth);
                    let chord = b.edge(pt, t, 2.0 * depth * (0.5 * atoms[j - 1]).sin());
                    b.face(pe, chord, e);
                    (t, e)
                } else {
                    (pt, pe)
                }
            }
        };
        let code_r = if j + 1 == path.len() {
            4 * ce.kind + SIDE_NONE
        } else if atoms[j] > 0.0 {
            CORNER_WEDGE_LEFT
        } else {
            4 * ce.kind + path[j + 1].kind
        };
        let te = rim_corner(b, tmap, ce.right, code_r);
        let side_e = b.edge(ce.right, te, depth);
        let diag = b.edge(ce.left, te, ce.len.hypot(depth));
        let rim = b.edge(ts, te, ce.len);
        b.face(ce.edge, side_e, diag);
        b.face(diag, rim, side_s);
        prev = Some((side_e, te));
    }
    let (fe, ft) = first.expect("paths are nonempty");
    let (le, lt) = prev.expect("paths are nonempty");
    (fe, ft, le, lt)
}

/// Strip core shared by the bump-strip and removal-ladder generators: a
/// doubled polyline spine (flat edges and bump lenses) with four half-plane
/// sheet collars glued along side-selected paths, closed by end caps.
fn build_strip(
    pieces: &[Piece],
    side_of: &dyn Fn(usize, usize) -> SheetSide,
) -> Result<MetricComplex, GeneratorError> {
    let mut b = ComplexBuilder::new(0.0);
    let mut junctions = Vec::with_capacity(pieces.len() + 1);
    junctions.push(b.vertex("p"));
    for i in 1..pieces.len() {
        junctions.push(b.vertex(format!("j{i}")));
    }
    junctions.push(b.vertex("far"));

    let mut data = Vec::with_capacity(pieces.len());
    for (i, piece) in pieces.iter().enumerate() {
        let (jl, jr) = (junctions[i], junctions[i + 1]);
        match *piece {
            Piece::Flat { len } => {
                let e = b.edge_named(format!("seam{i}"), jl, jr, len);
                data.push(PieceData::Flat(ChainEdge {
                    edge: e,
                    left: jl,
                    right: jr,
                    len,
                    kind: SIDE_FLAT,
                }));
            }
            Piece::Bump { len, kappa, .. } => {
                let prof = bump_profile(len, kappa);
                let pts = profile_points(&prof);
                let m = BUMP_SEGS;
                let mut uppers = vec![jl];
                let mut lowers = vec![jl];
                for j in 1..m {
                    uppers.push(b.vertex(format!("b{i}u{j}")));
                    lowers.push(b.vertex(format!("b{i}d{j}")));
                }
                uppers.push(jr);
                lowers.push(jr);
                let mut upper = Vec::with_capacity(m);
                let mut lower = Vec::with_capacity(m);
                for j in 0..m {
                    let eu = b.edge_named(format!("b{i}-u{j}"), uppers[j], uppers[j + 1], prof.seg);
                    upper.push(ChainEdge {
                        edge: eu,
                        left: uppers[j],
                        right: uppers[j + 1],
                        len: prof.seg,
                        kind: SIDE_UP,
                    });
                    let ed = b.edge_named(format!("b{i}-d{j}"), lowers[j], lowers[j + 1], prof.seg);
                    lower.push(ChainEdge {
                        edge: ed,
                        left: lowers[j],
                        right: lowers[j + 1],
                        len: prof.seg,
                        kind: SIDE_LOW,
                    });
                }
                let mut rungs = Vec::with_capacity(m - 1);
                for j in 1..m {
                    rungs.push(b.edge(uppers[j], lowers[j], 2.0 * pts[j].1));
                }
                let mut diags = Vec::with_capacity(m - 2);
                for j in 1..m - 1 {
                    let du = pts[j + 1];
                    let dl = (pts[j].0, -pts[j].1);
                    diags.push(b.edge(
                        uppers[j + 1],
                        lowers[j],
                        ((du.0 - dl.0).powi(2) + (du.1 - dl.1).powi(2)).sqrt(),
                    ));
                }
                b.face(upper[0].edge, rungs[0], lower[0].edge);
                for j in 1..m - 1 {
                    b.face(upper[j].edge, diags[j - 1], rungs[j - 1]);
                    b.face(diags[j - 1], rungs[j], lower[j].edge);
                }
                b.face(upper[m - 1].edge, lower[m - 1].edge, rungs[m - 2]);
                data.push(PieceData::Bump(BumpData {
                    upper,
                    lower,
                    turn_unit: prof.turn_unit,
                }));
            }
        }
    }

    let mut tmap: HashMap<(VertexId, u8), VertexId> = HashMap::new();
    let mut caps = CapMaps {
        wend: HashMap::new(),
        w: HashMap::new(),
        whisker: HashMap::new(),
    };
    for sheet in 0..4 {
        let mut path: Vec<ChainEdge> = Vec::new();
        let mut atoms: Vec<f64> = Vec::new();
        for (i, pd) in data.iter().enumerate() {
            match pd {
                PieceData::Flat(ce) => {
                    if !path.is_empty() {
                        atoms.push(0.0);
                    }
                    path.push(*ce);
                }
                PieceData::Bump(bd) => {
                    let level = match pieces[i] {
                        Piece::Bump { level, .. } => level,
                        Piece::Flat { .. } => unreachable!("piece kinds stay aligned"),
                    };
                    let run = match side_of(sheet, level) {
                        SheetSide::Upper => &bd.upper,
                        SheetSide::Lower => &bd.lower,
                    };
                    for (k, ce) in run.iter().enumerate() {
                        if !path.is_empty() {
                            atoms.push(if k == 0 { 0.0 } else { bd.turn_unit });
                        }
                        path.push(*ce);
                    }
                }
            }
        }
        let (fe, ft, le, lt) = build_collar(&mut b, &mut tmap, &path, &atoms);
        let pair = sheet / 2;
        build_cap(&mut b, &mut caps, 0, path[0].left, pair, fe, ft);
        build_cap(
            &mut b,
            &mut caps,
            1,
            path.last().expect("paths are nonempty").right,
            pair,
            le,
            lt,
        );
    }

    let mut upper_seam = Vec::new();
    let mut lower_seam = Vec::new();
    for pd in &data {
        match pd {
            PieceData::Flat(ce) => {
                upper_seam.push(ce.edge);
                lower_seam.push(ce.edge);
            }
            PieceData::Bump(bd) => {
                upper_seam.extend(bd.upper.iter().map(|c| c.edge));
                lower_seam.extend(bd.lower.iter().map(|c| c.edge));
            }
        }
    }
    b.seam("upper", upper_seam);
    b.seam("lower", lower_seam);
    b.base_point("p", junctions[0]);
    b.base_point("far", *junctions.last().expect("there is always an end"));
    Ok(b.build()?)
}

/// Strip of convex polyline bumps, one per schedule entry, with lengths
/// shrinking toward the base point and four concave half-plane sheets glued
/// two above, two below.
///
/// The doubled bump polylines form the two singular chains leaving the base
/// point `p`; interior bump ends meet at degree-4 pinches. Both gluing
/// audits pass: sheet atoms dominate the bump turns pointwise and every
/// closed link has length at least 2*pi.
pub fn gen_kleiner(level: usize, schedule: &BumpSchedule) -> Result<MetricComplex, GeneratorError> {
    gen_kleiner_variant(level, schedule, &GluingPattern::standard())
}

/// Same strip as [`gen_kleiner`] with an explicit side assignment for the
/// four sheets, enabling unbalanced gluings that move single sheets across
/// the strip at selected bumps.
pub fn gen_kleiner_variant(
    level: usize,
    schedule: &BumpSchedule,
    pattern: &GluingPattern,
) -> Result<MetricComplex, GeneratorError> {
    if level == 0 {
        return Err(GeneratorError::BadParameter("level must be at least 1"));
    }
    schedule.validate(level)?;
    let pieces: Vec<Piece> = (1..=level)
        .rev()
        .map(|n| Piece::Bump {
            len: schedule.lengths[n - 1],
            kappa: schedule.curvatures[n - 1],
            level: n,
        })
        .collect();
    build_strip(&pieces, &|sheet, n| pattern.side(sheet, n))
}

/// Flat seam length remaining at the given removal level (the unit interval
/// minus the removed middle intervals).
pub fn cantor_flat_total(epsilon: f64, level: usize) -> f64 {
    let delta = 1.0 - epsilon;
    let mut total = 1.0;
    for j in 1..=level {
        total -= delta / 2.0f64.powi(j as i32);
    }
    total
}

/// Length of each of the `2^level` flat seam edges at the given level.
pub fn cantor_flat_length(epsilon: f64, level: usize) -> f64 {
    cantor_flat_total(epsilon, level) / 2.0f64.powi(level as i32)
}

/// Middle-interval removal ladder: the unit seam keeps `2^level` flat
/// stretches (exact lengths, one edge each) and carries a bump over every
/// removed interval, with four half-plane sheets glued along the whole seam,
/// two per side.
///
/// Removal step `k` takes the open middle interval of length
/// `delta / 2^(2k+1)` out of each of the `2^k` remaining intervals, with
/// `delta = 1 - epsilon`; `kappa[k]` bounds the bump curvature used over
/// those gaps. Flat edges are atom-free, so the singular graph's junction
/// vertices sit at the removal endpoints.
pub fn gen_cantor(
    epsilon: f64,
    level: usize,
    kappa: &[f64],
) -> Result<MetricComplex, GeneratorError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(GeneratorError::BadParameter(
            "epsilon must lie strictly between 0 and 1",
        ));
    }
    if level > 10 {
        return Err(GeneratorError::BadParameter(
            "removal levels beyond 10 are not supported",
        ));
    }
    if kappa.len() < level {
        return Err(GeneratorError::BadParameter(
            "one curvature bound is needed per removal level",
        ));
    }
    for &k in &kappa[..level] {
        if !(k > 0.0) || !k.is_finite() {
            return Err(GeneratorError::BadParameter(
                "curvature bounds must be positive and finite",
            ));
        }
    }
    let delta = 1.0 - epsilon;
    let flat_len = cantor_flat_length(epsilon, level);
    let mut bump_lens = Vec::with_capacity(level);
    let mut total_turn = 0.0;
    for k in 0..level {
        let gap = delta / 2.0f64.powi(2 * k as i32 + 1);
        let len = solve_bump_len(gap, kappa[k]);
        total_turn += 2.0f64.powi(k as i32) * kappa[k] * len;
        bump_lens.push(len);
    }
    if total_turn >= TAU {
        return Err(GeneratorError::BudgetExceeded { total: total_turn });
    }

    fn layout(d: usize, level: usize, flat_len: f64, bumps: &[(f64, f64)], out: &mut Vec<Piece>) {
        if d == level {
            out.push(Piece::Flat { len: flat_len });
        } else {
            layout(d + 1, level, flat_len, bumps, out);
            out.push(Piece::Bump {
                len: bumps[d].0,
                kappa: bumps[d].1,
                level: d + 1,
            });
            layout(d + 1, level, flat_len, bumps, out);
        }
    }
    let bumps: Vec<(f64, f64)> = bump_lens
        .iter()
        .zip(kappa)
        .map(|(&l, &k)| (l, k))
        .collect();
    let mut pieces = Vec::new();
    layout(0, level, flat_len, &bumps, &mut pieces);
    build_strip(&pieces, &|sheet, _| {
        if sheet < 2 {
            SheetSide::Upper
        } else {
            SheetSide::Lower
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::DEFAULT_AUDIT_TOL;
    use crate::geodesics::{shortest_path, vertex_surface_point};
    use crate::singular::{build_singular_graph, extract_singular_set, DIRECTION_TOL};

    #[test]
    fn flat_disk_cone_has_a_round_apex_link() {
        let cx = gen_cone(&GraphSpec::circle(TAU), 1.0, 8).unwrap();
        let apex = cx.vertex_by_name("apex").unwrap();
        let link = cx.link_at(apex);
        let total = link.circle_length().expect("disk apex link is a circle");
        assert!((total - TAU).abs() <= 1e-9);
        assert!(cx.audit_conditions(DEFAULT_AUDIT_TOL).unwrap().passed());
        let sing = extract_singular_set(&cx);
        assert!(!sing.vertices.contains(&apex));
    }

    #[test]
    fn condition_b_splits_the_short_and_long_cones() {
        let short = gen_cone(&GraphSpec::circle(TAU - 0.1), 1.0, 8).unwrap();
        let report = short.check_condition_b(DEFAULT_AUDIT_TOL);
        assert!(!report.passed());
        let worst = report.violations().next().unwrap();
        assert!((worst.measured - (TAU - 0.1)).abs() <= 1e-9);

        let long = gen_cone(&GraphSpec::circle(TAU + 0.1), 1.0, 8).unwrap();
        assert!(long.check_condition_b(DEFAULT_AUDIT_TOL).passed());
        let three_pi = gen_cone(&GraphSpec::circle(3.0 * PI), 1.0, 8).unwrap();
        assert!(three_pi.check_condition_b(DEFAULT_AUDIT_TOL).passed());
    }

    #[test]
    fn theta_cone_carries_exactly_two_interior_rays() {
        let cx = gen_cone(&GraphSpec::theta(PI, PI, PI), 1.0, 6).unwrap();
        let apex = cx.vertex_by_name("apex").unwrap();
        let link = cx.link_at(apex);
        assert!(link.circle_length().is_none());
        assert!((link.systole().unwrap() - TAU).abs() <= 1e-9);
        assert!((link.total_length() - 3.0 * PI).abs() <= 1e-9);
        assert!(cx.check_condition_b(DEFAULT_AUDIT_TOL).passed());

        let ray0 = cx.edge_by_name("ray-n0").unwrap();
        let ray1 = cx.edge_by_name("ray-n1").unwrap();
        let sing = extract_singular_set(&cx);
        assert!(sing.edges.contains(&ray0) && sing.edges.contains(&ray1));
        assert!(sing.vertices.contains(&apex));
        for &e in &sing.edges {
            let n = cx.faces_at_edge(e).len();
            if n != 1 {
                assert_eq!(n, 3);
                assert!(e == ray0 || e == ray1, "interior singular edges are the two rays");
            }
        }
        // The two rays leave the apex in opposite link directions, so they
        // chain into one diameter arc through it.
        let graph = build_singular_graph(&cx);
        let through: Vec<_> = graph
            .edges
            .iter()
            .filter(|arc| arc.polyline.contains(&ray0))
            .collect();
        assert_eq!(through.len(), 1);
        assert!(through[0].polyline.contains(&ray1));
        assert_eq!(through[0].polyline.len(), 2);
        assert!((through[0].length - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn cone_rejects_bad_links_and_meshes() {
        assert!(matches!(
            gen_cone(&GraphSpec::circle(TAU), 1.0, 2),
            Err(GeneratorError::BadParameter(_))
        ));
        assert!(matches!(
            gen_cone(&GraphSpec::circle(TAU), 0.0, 6),
            Err(GeneratorError::BadParameter(_))
        ));
        assert!(matches!(
            gen_cone(&GraphSpec::interval(10.0), 1.0, 3),
            Err(GeneratorError::BadParameter(_))
        ));
        let loop_arc = GraphSpec {
            nodes: 1,
            arcs: vec![(0, 0, 1.0)],
        };
        assert!(matches!(
            gen_cone(&loop_arc, 1.0, 6),
            Err(GeneratorError::InvalidLink(_))
        ));
        let stranded = GraphSpec {
            nodes: 3,
            arcs: vec![(0, 1, 1.0)],
        };
        assert!(matches!(
            gen_cone(&stranded, 1.0, 6),
            Err(GeneratorError::InvalidLink(_))
        ));
        let bad_len = GraphSpec {
            nodes: 2,
            arcs: vec![(0, 1, -1.0)],
        };
        assert!(matches!(
            gen_cone(&bad_len, 1.0, 6),
            Err(GeneratorError::InvalidLink(_))
        ));
    }

    #[test]
    fn developed_cone_is_audited_and_marks_agree_with_the_solver() {
        let (cx, marks) = gen_nondisk(0.3, 0.5, PI - 0.1, 1.0, 6).unwrap();
        assert!(cx.audit_conditions(DEFAULT_AUDIT_TOL).unwrap().passed());

        let sing = extract_singular_set(&cx);
        for &e in &sing.edges {
            let n = cx.faces_at_edge(e).len();
            if n != 1 {
                assert_eq!(n, 3);
                let name = cx.edge_name(e);
                assert!(
                    name.starts_with("xi-g") || name.starts_with("ell-g"),
                    "interior singular edges lie on the two glued rays, got {name}"
                );
            }
        }

        assert_eq!(marks.alpha1.len(), DIRECTRIX_SAMPLES + 1);
        assert_eq!(marks.alpha2.len(), DIRECTRIX_SAMPLES + 1);
        assert!(marks.dist_pq > 10.0 && marks.length > 2.0 * 10.0);

        let p = vertex_surface_point(&cx, marks.base);
        let s1 = vertex_surface_point(&cx, marks.sigma_plus_unit);
        let path = shortest_path(&cx, &p, &s1, 1e-4).unwrap();
        let d1 = marks.length / 2.0;
        assert!(
            (path.length - d1).abs() <= 0.02 * d1,
            "polyhedral distance {} vs developed {}",
            path.length,
            d1
        );
    }

    #[test]
    fn developed_cone_rejects_out_of_range_parameters() {
        assert!(gen_nondisk(0.5, 0.3, PI - 0.1, 1.0, 6).is_err());
        assert!(gen_nondisk(0.3, 0.3 + FRAC_PI_4, PI - 0.1, 1.0, 6).is_err());
        assert!(gen_nondisk(0.3, 0.5, PI - 0.3, 1.0, 6).is_err());
        assert!(gen_nondisk(0.3, 0.5, PI, 1.0, 6).is_err());
        assert!(gen_nondisk(0.3, 0.5, PI - 0.1, 0.0, 6).is_err());
        assert!(gen_nondisk(0.3, 0.5, PI - 0.1, 1.0, 2).is_err());
    }

    #[test]
    fn bump_strip_passes_both_audits() {
        let sched = BumpSchedule::geometric(2, 2.0, 1.0);
        let cx = gen_kleiner(2, &sched).unwrap();
        let report = cx.audit_conditions(DEFAULT_AUDIT_TOL).unwrap();
        assert!(report.passed(), "violations: {:?}", report.violations().collect::<Vec<_>>());
    }

    #[test]
    fn bump_strip_hangs_two_chains_from_the_base() {
        let sched = BumpSchedule::geometric(1, 2.0, 1.0);
        let cx = gen_kleiner(1, &sched).unwrap();
        let p = cx.vertex_by_name("p").unwrap();
        let far = cx.vertex_by_name("far").unwrap();
        let graph = build_singular_graph(&cx);
        assert_eq!(graph.order_of(p), Some(2));
        assert_eq!(graph.order_of(far), Some(2));
        let chains: Vec<_> = graph
            .edges
            .iter()
            .filter(|arc| arc.ends.contains(&p))
            .collect();
        assert_eq!(chains.len(), 2);
        for arc in &chains {
            assert!(arc.ends.contains(&far));
            assert_eq!(arc.length, 1.0, "eight equal segments of 1/8 sum exactly");
            assert_eq!(arc.sides.len(), 3);
            for side in &arc.sides {
                assert!(side.turn.total_variation <= sched.partial_budget(1));
            }
        }
        assert!(2.0 * TIP_ANGLE < DIRECTION_TOL);
    }

    #[test]
    fn deeper_strips_split_chains_at_the_pinches() {
        let sched = BumpSchedule::geometric(3, 2.0, 1.0);
        let cx = gen_kleiner(3, &sched).unwrap();
        let p = cx.vertex_by_name("p").unwrap();
        let far = cx.vertex_by_name("far").unwrap();
        let j1 = cx.vertex_by_name("j1").unwrap();
        let j2 = cx.vertex_by_name("j2").unwrap();
        let graph = build_singular_graph(&cx);
        assert_eq!(graph.order_of(p), Some(2));
        assert_eq!(graph.order_of(far), Some(2));
        assert_eq!(graph.order_of(j1), Some(4));
        assert_eq!(graph.order_of(j2), Some(4));

        let junctions = [p, j1, j2, far];
        let mut chain_lens: Vec<f64> = graph
            .edges
            .iter()
            .filter(|arc| arc.ends.iter().all(|v| junctions.contains(v)))
            .map(|arc| arc.length)
            .collect();
        chain_lens.sort_by(f64::total_cmp);
        assert_eq!(chain_lens, vec![0.25, 0.25, 0.5, 0.5, 1.0, 1.0]);

        let budget = sched.partial_budget(3);
        assert!(budget < TAU);
        for arc in &graph.edges {
            for side in &arc.sides {
                assert!(
                    side.turn.total_variation <= budget + 1e-9,
                    "arc at {:?} has tv {}",
                    arc.ends,
                    side.turn.total_variation
                );
            }
        }
    }

    #[test]
    fn schedule_budget_is_enforced() {
        let sched = BumpSchedule::geometric(1, 13.0, 1.0);
        assert!(matches!(
            gen_kleiner(1, &sched),
            Err(GeneratorError::BudgetExceeded { .. })
        ));
        let sched = BumpSchedule::geometric(1, 2.0, 1.0);
        assert!(matches!(
            gen_kleiner(2, &sched),
            Err(GeneratorError::BadParameter(_))
        ));
        assert!(matches!(
            gen_kleiner(0, &sched),
            Err(GeneratorError::BadParameter(_))
        ));
    }

    #[test]
    fn alternating_pattern_moves_single_sheets_across() {
        let pat = GluingPattern::alternating();
        use SheetSide::{Lower, Upper};
        assert_eq!(pat.side(0, 1), Upper);
        assert_eq!(pat.side(0, 2), Upper);
        assert_eq!(pat.side(1, 2), Lower);
        assert_eq!(pat.side(1, 6), Lower);
        assert_eq!(pat.side(1, 1), Upper);
        assert_eq!(pat.side(2, 4), Upper);
        assert_eq!(pat.side(2, 5), Upper);
        assert_eq!(pat.side(2, 2), Lower);
        assert_eq!(pat.side(2, 3), Lower);
        assert_eq!(pat.side(3, 3), Upper);
        assert_eq!(pat.side(3, 1), Lower);

        let sched = BumpSchedule::geometric(2, 2.0, 1.0);
        let cx = gen_kleiner_variant(2, &sched, &pat).unwrap();
        assert!(cx.audit_conditions(DEFAULT_AUDIT_TOL).unwrap().passed());
        // Piece 0 is bump level 2 (one sheet above), piece 1 is bump level 1
        // (one sheet below); face counts flip across the strip.
        let count = |name: &str| cx.faces_at_edge(cx.edge_by_name(name).unwrap()).len();
        assert_eq!(count("b0-u0"), 2);
        assert_eq!(count("b0-d0"), 4);
        assert_eq!(count("b1-u0"), 4);
        assert_eq!(count("b1-d0"), 2);
    }

    #[test]
    fn crossed_pattern_keeps_the_chain_graph() {
        let sched = BumpSchedule::geometric(1, 2.0, 1.0);
        let standard = gen_kleiner(1, &sched).unwrap();
        let crossed = gen_kleiner_variant(1, &sched, &GluingPattern::crossed()).unwrap();
        assert!(crossed.audit_conditions(DEFAULT_AUDIT_TOL).unwrap().passed());
        assert_ne!(standard.to_text(), crossed.to_text());

        let signature = |cx: &MetricComplex| {
            let graph = build_singular_graph(cx);
            let mut orders: Vec<usize> =
                graph.vertices.iter().map(|v| v.order).collect();
            orders.sort_unstable();
            let mut arcs: Vec<(u64, usize)> = graph
                .edges
                .iter()
                .map(|a| (a.length.to_bits(), a.sides.len()))
                .collect();
            arcs.sort_unstable();
            (orders, arcs)
        };
        assert_eq!(signature(&standard), signature(&crossed));

        let same = gen_kleiner_variant(1, &sched, &GluingPattern::standard()).unwrap();
        assert_eq!(standard.to_text(), same.to_text());
    }

    #[test]
    fn cantor_flat_seams_are_exact_and_meet_at_junctions() {
        let cx = gen_cantor(0.5, 2, &[1.0, 1.0]).unwrap();
        assert!(cx.audit_conditions(DEFAULT_AUDIT_TOL).unwrap().passed());

        let per = cantor_flat_length(0.5, 2);
        let mut flats = 0;
        for i in 0..7 {
            if let Some(e) = cx.edge_by_name(&format!("seam{i}")) {
                assert_eq!(cx.edge(e).length, per);
                assert_eq!(cx.faces_at_edge(e).len(), 4);
                flats += 1;
            }
        }
        assert_eq!(flats, 4);
        assert_eq!(per * 4.0, cantor_flat_total(0.5, 2));

        let graph = build_singular_graph(&cx);
        let p = cx.vertex_by_name("p").unwrap();
        let far = cx.vertex_by_name("far").unwrap();
        assert_eq!(graph.order_of(p), Some(1));
        assert_eq!(graph.order_of(far), Some(1));
        for i in 1..=6 {
            let j = cx.vertex_by_name(&format!("j{i}")).unwrap();
            assert_eq!(graph.order_of(j), Some(3), "removal endpoints split the seam");
        }
    }

    #[test]
    fn cantor_ladder_keeps_exact_flat_lengths() {
        for level in 0..=4 {
            let kappas = vec![1.0; level];
            let cx = gen_cantor(0.5, level, &kappas).unwrap();
            let per = cantor_flat_length(0.5, level);
            let total = cantor_flat_total(0.5, level);
            let npieces = (1usize << (level + 1)) - 1;
            let mut flats = 0;
            for i in 0..npieces {
                if let Some(e) = cx.edge_by_name(&format!("seam{i}")) {
                    assert_eq!(cx.edge(e).length, per);
                    flats += 1;
                }
            }
            assert_eq!(flats, 1 << level);
            assert_eq!(per * (1u64 << level) as f64, total);
        }
    }

    #[test]
    fn cantor_rejects_bad_parameters() {
        assert!(gen_cantor(0.0, 1, &[1.0]).is_err());
        assert!(gen_cantor(1.0, 1, &[1.0]).is_err());
        assert!(gen_cantor(-0.5, 1, &[1.0]).is_err());
        assert!(gen_cantor(0.5, 2, &[1.0]).is_err());
        assert!(gen_cantor(0.5, 1, &[-1.0]).is_err());
    }

    #[test]
    fn generators_are_deterministic() {
        let sched = BumpSchedule::geometric(2, 2.0, 1.0);
        let a = gen_kleiner(2, &sched).unwrap();
        let b = gen_kleiner(2, &sched).unwrap();
        assert_eq!(a.to_text(), b.to_text());

        let a = gen_cantor(0.5, 1, &[1.0]).unwrap();
        let b = gen_cantor(0.5, 1, &[1.0]).unwrap();
        assert_eq!(a.to_text(), b.to_text());

        let (ca, ma) = gen_nondisk(0.3, 0.5, PI - 0.1, 1.0, 4).unwrap();
        let (cb, mb) = gen_nondisk(0.3, 0.5, PI - 0.1, 1.0, 4).unwrap();
        assert_eq!(ca.to_text(), cb.to_text());
        assert_eq!(format!("{ma:?}"), format!("{mb:?}"));

        let a = gen_cone(&GraphSpec::theta(PI, PI, PI), 1.0, 5).unwrap();
        let b = gen_cone(&GraphSpec::theta(PI, PI, PI), 1.0, 5).unwrap();
        assert_eq!(a.to_text(), b.to_text());
    }
}
