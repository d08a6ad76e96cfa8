//! Comparison constructions over the pullback metric of a ruled surface:
//! chain triples through a shared middle ruling, their two-route development
//! into the model plane, the stretched triangle spanned by the chain lengths,
//! corner-angle monotonicity reports, and a sampled triangle-comparison test
//! that works in any space exposing distances and side points.
//!
//! The development glues one model triangle per ladder cell: the route through
//! the middle corner and the direct route visit the same rulings, and every
//! consecutive pair of route points spans a cell with two triangles. Interior
//! break angles of the developed polygon are audited for concavity, and the
//! stretched triangle bounds its corner angles and rung separations from
//! above.

use crate::geodesics::Ambient;
use crate::model::{self, Isometry, ModelError, ModelPoint};
use crate::ruled::{
    chain_cumulative, min_chain, sub_decomposition, Chain, Decomposition, RuledError,
    RuledSurface,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::sync::{Arc, RwLock};
use thiserror::Error;

/// Distances at or below this count as a collapsed edge during development.
const PINCH_TOL: f64 = 1e-12;
/// Sampled triangle sides at or below this are treated as degenerate.
const DEGENERATE_SIDE_TOL: f64 = 1e-12;
/// Default tolerance for the concavity audit of a developed polygon.
pub const DEFAULT_CONCAVITY_TOL: f64 = 1e-6;
/// Default tolerance for the stretched-triangle comparisons.
pub const DEFAULT_STRETCH_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ComparisonError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ruled(#[from] RuledError),
    #[error("triple perimeter {perimeter} reaches the comparison bound {bound}")]
    PerimeterBound { perimeter: f64, bound: f64 },
    #[error("degenerate chain triple: {0}")]
    DegenerateTriple(&'static str),
    #[error("stretched-triangle comparison violated by margin {margin}")]
    StretchViolation { margin: f64 },
    #[error("invalid break-point pick: {0}")]
    BadPick(&'static str),
}

/// Three minimizing chains between surface points x, y, z sharing one grid:
/// x→y and y→z over the two halves of the decomposition, x→z over their
/// union. Corners are relabeled by ascending ruling parameter, ties keeping
/// the argument order, so `corners[1]` always sits on the split ruling.
#[derive(Debug, Clone)]
pub struct ChainTriple<P> {
    pub kappa: f64,
    /// The corners (s, t) after relabeling, in grid order x, y, z.
    pub corners: [(f64, f64); 3],
    /// Index of the middle corner's ruling within the shared grid.
    pub split: usize,
    /// The union decomposition both routes are formed over.
    pub grid: Decomposition,
    pub xy: Chain,
    pub yz: Chain,
    pub xz: Chain,
    /// Route through the middle corner, one ambient point per grid line
    /// (the middle corner appears once).
    pub via: Vec<P>,
    /// Direct route, one ambient point per grid line.
    pub direct: Vec<P>,
}

impl<P> ChainTriple<P> {
    /// Chain lengths in side order xy, yz, xz.
    pub fn lengths(&self) -> [f64; 3] {
        [self.xy.length, self.yz.length, self.xz.length]
    }

    pub fn perimeter(&self) -> f64 {
        self.xy.length + self.yz.length + self.xz.length
    }
}

/// Solve the three minimizing chains of a corner triple over `delta`.
///
/// The decomposition is restricted to [x.0, y.0] and [y.0, z.0] (endpoints
/// inserted exactly), and the direct chain runs over the union of the two
/// restrictions, so all three chains break on the same rulings.
pub fn build_chain_triple<A: Ambient>(
    spec: &RuledSurface<A>,
    delta: &Decomposition,
    u: (f64, f64),
    v: (f64, f64),
    w: (f64, f64),
    tol: f64,
) -> Result<ChainTriple<A::Point>, ComparisonError> {
    for c in [u, v, w] {
        if !(c.0.is_finite() && c.1.is_finite()) {
            return Err(ComparisonError::DegenerateTriple(
                "corner parameters must be finite",
            ));
        }
    }
    let mut corners = [u, v, w];
    corners.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let [x, y, z] = corners;
    let dxy = sub_decomposition(delta, x.0, y.0)?;
    let dyz = sub_decomposition(delta, y.0, z.0)?;
    let split = dxy.s_values().len() - 1;
    let mut lines: Vec<f64> = dxy.s_values().to_vec();
    lines.extend_from_slice(&dyz.s_values()[1..]);
    let grid = if lines.len() == 1 {
        Decomposition::singleton(lines[0])?
    } else {
        Decomposition::new(lines)?
    };
    let xy = min_chain(spec, &dxy, x, y, tol)?;
    let yz = min_chain(spec, &dyz, y, z, tol)?;
    let xz = min_chain(spec, &grid, x, z, tol)?;

    let kappa = spec.ambient().kappa();
    let perimeter = xy.length + yz.length + xz.length;
    let bound = 2.0 * model::model_diameter(kappa);
    if !(perimeter < bound) {
        return Err(ComparisonError::PerimeterBound { perimeter, bound });
    }

    let mut via = Vec::with_capacity(xy.s_values.len() + yz.s_values.len());
    for (&s, &t) in xy.s_values.iter().zip(&xy.t_values) {
        via.push(spec.ruling_point(s, t)?);
    }
    for (&s, &t) in yz.s_values.iter().zip(&yz.t_values).skip(1) {
        via.push(spec.ruling_point(s, t)?);
    }
    let direct = xz
        .s_values
        .iter()
        .zip(&xz.t_values)
        .map(|(&s, &t)| spec.ruling_point(s, t))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(ChainTriple {
        kappa,
        corners,
        split,
        grid,
        xy,
        yz,
        xz,
        via,
        direct,
    })
}

/// Comparison angle with the opposite side clamped into the admissible
/// interval, so near-degenerate data lands exactly on 0 or π.
fn tri_angle(kappa: f64, opposite: f64, arm1: f64, arm2: f64) -> Result<f64, ComparisonError> {
    let lo = (arm1 - arm2).abs();
    let hi = arm1 + arm2;
    Ok(model::comparison_angle(kappa, opposite.clamp(lo, hi), arm1, arm2)?)
}

/// [`tri_angle`] as an optional value: `None` when an arm vanishes or the
/// triangle is inadmissible, for use in angle audits.
fn corner_angle(kappa: f64, opposite: f64, arm1: f64, arm2: f64) -> Option<f64> {
    if arm1 <= PINCH_TOL || arm2 <= PINCH_TOL {
        return None;
    }
    tri_angle(kappa, opposite, arm1, arm2).ok()
}

/// Place the point at model distances `p` from `a` and `q` from `b`, on the
/// opposite side of the oriented edge a→b from `witness`.
fn place_across(
    kappa: f64,
    a: &ModelPoint,
    b: &ModelPoint,
    p: f64,
    q: f64,
    witness: &ModelPoint,
) -> Result<ModelPoint, ComparisonError> {
    if p <= PINCH_TOL {
        return Ok(*a);
    }
    if q <= PINCH_TOL {
        return Ok(*b);
    }
    let d_ab = model::distance(a, b)?;
    let base = ModelPoint::base(kappa)?;
    if d_ab <= PINCH_TOL {
        // the shared edge has collapsed: continue straight through the pinch,
        // away from the witness
        let d_wa = model::distance(witness, a)?;
        if d_wa <= PINCH_TOL {
            return Err(ComparisonError::DegenerateTriple(
                "development pinched with no direction left",
            ));
        }
        let probe = ModelPoint::polar(kappa, d_wa, 0.0)?;
        let iso = Isometry::edge_align((&base, &probe), (a, witness))?;
        return Ok(iso.apply(&ModelPoint::polar(kappa, p, std::f64::consts::PI)?)?);
    }
    let alpha = tri_angle(kappa, q, d_ab, p)?;
    let along = ModelPoint::polar(kappa, d_ab, 0.0)?;
    let iso = Isometry::edge_align((&base, &along), (a, b))?;
    let plus = iso.apply(&ModelPoint::polar(kappa, p, alpha)?)?;
    if alpha <= 1e-15 || std::f64::consts::PI - alpha <= 1e-15 {
        return Ok(plus);
    }
    let side_w = model::side_sign(a, b, witness)?;
    if side_w == 0.0 {
        return Ok(plus);
    }
    let side_p = model::side_sign(a, b, &plus)?;
    if side_p * side_w < 0.0 {
        Ok(plus)
    } else {
        Ok(iso.apply(&ModelPoint::polar(kappa, p, -alpha)?)?)
    }
}

/// A chain triple developed into the model plane: both routes laid out cell
/// by cell, with inner break angles, cumulative arc lengths, and the audits
/// that feed the stretched-triangle comparison.
#[derive(Debug, Clone)]
pub struct DevelopedPolygon {
    pub kappa: f64,
    pub split: usize,
    /// Developed positions of the route through the middle corner.
    pub via_dev: Vec<ModelPoint>,
    /// Developed positions of the direct route (last point equals the last
    /// via point).
    pub direct_dev: Vec<ModelPoint>,
    /// Inner angle at each via point; `None` where an incident edge vanishes.
    pub via_inner: Vec<Option<f64>>,
    /// Inner angle at each direct point; `None` at the shared ends.
    pub direct_inner: Vec<Option<f64>>,
    /// Side lengths xy, yz, xz as measured along the routes.
    pub sides: [f64; 3],
    pub via_cumulative: Vec<f64>,
    pub direct_cumulative: Vec<f64>,
    /// Ambient separation between the i-th points of the two routes.
    pub rungs: Vec<f64>,
    /// Worst disagreement between a developed edge and its ambient length.
    pub max_edge_residual: f64,
    /// Worst shortfall of an audited interior break angle below π.
    pub concavity_defect: f64,
    /// Interior break points whose angle was undefined and skipped.
    pub audit_skipped: usize,
}

impl DevelopedPolygon {
    /// Developed corner angles at x, y, z (`None` where degenerate).
    pub fn corner_angles(&self) -> [Option<f64>; 3] {
        [
            self.via_inner[0],
            self.via_inner[self.split],
            *self.via_inner.last().unwrap(),
        ]
    }

    pub fn concavity_ok(&self, tol: f64) -> bool {
        self.concavity_defect <= tol
    }
}

fn add_angle(slot: &mut Option<f64>, contribution: Option<f64>) {
    *slot = match (slot.take(), contribution) {
        (Some(acc), Some(c)) => Some(acc + c),
        _ => None,
    };
}

/// Develop a chain triple into the model plane of its curvature.
///
/// Cells between consecutive grid lines are split into two model triangles
/// glued edge to edge; placement is deterministic, each new vertex landing on
/// the far side of the shared edge. Requires a proper triple: three distinct
/// rulings with the split strictly interior.
pub fn develop_polygon<A: Ambient>(
    ambient: &A,
    triple: &ChainTriple<A::Point>,
) -> Result<DevelopedPolygon, ComparisonError> {
    if triple.via.len() != triple.direct.len() {
        return Err(ComparisonError::DegenerateTriple(
            "corners share a ruling",
        ));
    }
    let n = triple.direct.len() - 1;
    let m = triple.split;
    if n < 2 || m == 0 || m >= n {
        return Err(ComparisonError::DegenerateTriple(
            "no interior split ruling",
        ));
    }
    let kappa = triple.kappa;

    // ambient edge lengths of the ladder
    let mut via_seg = vec![0.0; n + 1];
    let mut dir_seg = vec![0.0; n + 1];
    let mut rungs = vec![0.0; n + 1];
    let mut diag = vec![0.0; n];
    for i in 1..=n {
        via_seg[i] = ambient.distance(&triple.via[i - 1], &triple.via[i]);
        dir_seg[i] = ambient.distance(&triple.direct[i - 1], &triple.direct[i]);
    }
    for i in 0..=n {
        rungs[i] = ambient.distance(&triple.via[i], &triple.direct[i]);
    }
    for i in 1..n - 1 {
        diag[i] = ambient.distance(&triple.via[i + 1], &triple.direct[i]);
    }

    // lay the first cell down, then walk the ladder
    let base = ModelPoint::base(kappa)?;
    let dev_d1 = ModelPoint::polar(kappa, dir_seg[1], 0.0)?;
    let dev_v1 = if via_seg[1] <= PINCH_TOL {
        base
    } else if dir_seg[1] <= PINCH_TOL {
        ModelPoint::polar(kappa, via_seg[1], 0.0)?
    } else {
        let alpha = tri_angle(kappa, rungs[1], via_seg[1], dir_seg[1])?;
        ModelPoint::polar(kappa, via_seg[1], alpha)?
    };
    let mut via_dev = vec![base, dev_v1];
    let mut dir_dev = vec![base, dev_d1];
    for i in 1..n {
        let q = if i < n - 1 { diag[i] } else { dir_seg[n] };
        let next_via = place_across(
            kappa,
            &via_dev[i],
            &dir_dev[i],
            via_seg[i + 1],
            q,
            &dir_dev[i - 1],
        )?;
        via_dev.push(next_via);
        if i < n - 1 {
            let next_dir = place_across(
                kappa,
                &via_dev[i + 1],
                &dir_dev[i],
                rungs[i + 1],
                dir_seg[i + 1],
                &via_dev[i],
            )?;
            dir_dev.push(next_dir);
        } else {
            dir_dev.push(via_dev[n]);
        }
    }

    // inner angles, accumulated per incident triangle from ambient lengths
    let mut via_inner: Vec<Option<f64>> = vec![Some(0.0); n + 1];
    let mut dir_inner: Vec<Option<f64>> = vec![Some(0.0); n + 1];
    add_angle(
        &mut via_inner[0],
        corner_angle(kappa, rungs[1], via_seg[1], dir_seg[1]),
    );
    add_angle(
        &mut via_inner[1],
        corner_angle(kappa, dir_seg[1], via_seg[1], rungs[1]),
    );
    add_angle(
        &mut dir_inner[1],
        corner_angle(kappa, via_seg[1], dir_seg[1], rungs[1]),
    );
    for i in 1..n - 1 {
        add_angle(
            &mut via_inner[i],
            corner_angle(kappa, diag[i], via_seg[i + 1], rungs[i]),
        );
        add_angle(
            &mut via_inner[i + 1],
            corner_angle(kappa, rungs[i], via_seg[i + 1], diag[i]),
        );
        add_angle(
            &mut dir_inner[i],
            corner_angle(kappa, via_seg[i + 1], rungs[i], diag[i]),
        );
        add_angle(
            &mut via_inner[i + 1],
            corner_angle(kappa, dir_seg[i + 1], diag[i], rungs[i + 1]),
        );
        add_angle(
            &mut dir_inner[i],
            corner_angle(kappa, rungs[i + 1], diag[i], dir_seg[i + 1]),
        );
        add_angle(
            &mut dir_inner[i + 1],
            corner_angle(kappa, diag[i], rungs[i + 1], dir_seg[i + 1]),
        );
    }
    add_angle(
        &mut via_inner[n - 1],
        corner_angle(kappa, dir_seg[n], via_seg[n], rungs[n - 1]),
    );
    add_angle(
        &mut via_inner[n],
        corner_angle(kappa, rungs[n - 1], via_seg[n], dir_seg[n]),
    );
    add_angle(
        &mut dir_inner[n - 1],
        corner_angle(kappa, via_seg[n], rungs[n - 1], dir_seg[n]),
    );
    dir_inner[0] = None;
    dir_inner[n] = None;

    let mut concavity_defect = 0.0f64;
    let mut audit_skipped = 0usize;
    for i in 1..n {
        if i != m {
            match via_inner[i] {
                Some(a) => concavity_defect = concavity_defect.max(std::f64::consts::PI - a),
                None => audit_skipped += 1,
            }
        }
        match dir_inner[i] {
            Some(a) => concavity_defect = concavity_defect.max(std::f64::consts::PI - a),
            None => audit_skipped += 1,
        }
    }
    concavity_defect = concavity_defect.max(0.0);

    // re-measure every developed edge against its ambient length
    let mut max_edge_residual = 0.0f64;
    for i in 1..=n {
        let dv = model::distance(&via_dev[i - 1], &via_dev[i])?;
        let dd = model::distance(&dir_dev[i - 1], &dir_dev[i])?;
        max_edge_residual = max_edge_residual.max((dv - via_seg[i]).abs());
        max_edge_residual = max_edge_residual.max((dd - dir_seg[i]).abs());
    }
    for i in 0..=n {
        let dr = model::distance(&via_dev[i], &dir_dev[i])?;
        max_edge_residual = max_edge_residual.max((dr - rungs[i]).abs());
    }
    for i in 1..n - 1 {
        let dg = model::distance(&via_dev[i + 1], &dir_dev[i])?;
        max_edge_residual = max_edge_residual.max((dg - diag[i]).abs());
    }

    let mut via_cumulative = vec![0.0; n + 1];
    let mut direct_cumulative = vec![0.0; n + 1];
    for i in 1..=n {
        via_cumulative[i] = via_cumulative[i - 1] + via_seg[i];
        direct_cumulative[i] = direct_cumulative[i - 1] + dir_seg[i];
    }
    let sides = [
        via_cumulative[m],
        via_cumulative[n] - via_cumulative[m],
        direct_cumulative[n],
    ];

    Ok(DevelopedPolygon {
        kappa,
        split: m,
        via_dev,
        direct_dev: dir_dev,
        via_inner,
        direct_inner: dir_inner,
        sides,
        via_cumulative,
        direct_cumulative,
        rungs,
        max_edge_residual,
        concavity_defect,
        audit_skipped,
    })
}

/// The model triangle spanned by the three route lengths, with every route
/// point marked on its side at the matching arc length.
#[derive(Debug, Clone)]
pub struct StretchedTriangle {
    pub kappa: f64,
    /// Side lengths xy, yz, xz.
    pub sides: [f64; 3],
    /// Corners x̄, ȳ, z̄ in the model plane.
    pub corners: [ModelPoint; 3],
    /// Corner angles at x̄, ȳ, z̄; `None` where an adjacent side vanishes.
    pub angles: [Option<f64>; 3],
    /// Via route points marked on the sides x̄ȳ then ȳz̄.
    pub via_marks: Vec<ModelPoint>,
    /// Direct route points marked on the side x̄z̄.
    pub direct_marks: Vec<ModelPoint>,
    /// Developed corner angle minus stretched corner angle, per corner.
    pub corner_margins: [Option<f64>; 3],
    /// Ambient rung length minus stretched mark separation, per grid line.
    pub rung_margins: Vec<Option<f64>>,
    /// Largest defined margin; positive values are violations.
    pub max_margin: f64,
}

/// Stretch a developed polygon onto the model triangle of its side lengths
/// and compare: corner angles must not exceed the stretched ones, and rung
/// separations must not exceed the marked separations, each within `tol`.
pub fn stretch(polygon: &DevelopedPolygon, tol: f64) -> Result<StretchedTriangle, ComparisonError> {
    let n = polygon.via_dev.len() - 1;
    let m = polygon.split;
    let kappa = polygon.kappa;
    let [cxy, cyz, cxz] = polygon.sides;
    let perimeter = cxy + cyz + cxz;
    let bound = 2.0 * model::model_diameter(kappa);
    if !(perimeter < bound) {
        return Err(ComparisonError::PerimeterBound { perimeter, bound });
    }
    let slack = 1e-9 * (1.0 + perimeter);
    if cxz > cxy + cyz + slack || cxy > cyz + cxz + slack || cyz > cxy + cxz + slack {
        return Err(ComparisonError::DegenerateTriple(
            "route lengths violate the triangle inequality",
        ));
    }

    let xbar = ModelPoint::base(kappa)?;
    let zbar = ModelPoint::polar(kappa, cxz, 0.0)?;
    let ybar = if cxy <= PINCH_TOL {
        xbar
    } else if cyz <= PINCH_TOL {
        zbar
    } else if cxz <= PINCH_TOL {
        ModelPoint::polar(kappa, cxy, 0.0)?
    } else {
        ModelPoint::polar(kappa, cxy, tri_angle(kappa, cyz, cxy, cxz)?)?
    };
    let angles = [
        corner_angle(kappa, cyz, cxy, cxz),
        corner_angle(kappa, cxz, cxy, cyz),
        corner_angle(kappa, cxy, cyz, cxz),
    ];

    let mut via_marks = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let arc = polygon.via_cumulative[i];
        let mark = if i <= m {
            let f = if cxy > PINCH_TOL { (arc / cxy).clamp(0.0, 1.0) } else { 0.0 };
            model::geodesic_point(&xbar, &ybar, f)?
        } else {
            let f = if cyz > PINCH_TOL {
                ((arc - cxy) / cyz).clamp(0.0, 1.0)
            } else {
                1.0
            };
            model::geodesic_point(&ybar, &zbar, f)?
        };
        via_marks.push(mark);
    }
    let mut direct_marks = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let f = if cxz > PINCH_TOL {
            (polygon.direct_cumulative[i] / cxz).clamp(0.0, 1.0)
        } else {
            0.0
        };
        direct_marks.push(model::geodesic_point(&xbar, &zbar, f)?);
    }

    let developed = polygon.corner_angles();
    let mut corner_margins = [None; 3];
    for c in 0..3 {
        if let (Some(dev), Some(str_)) = (developed[c], angles[c]) {
            corner_margins[c] = Some(dev - str_);
        }
    }
    let mut rung_margins = vec![None; n + 1];
    for i in 1..n {
        let sep = model::distance(&via_marks[i], &direct_marks[i])?;
        rung_margins[i] = Some(polygon.rungs[i] - sep);
    }
    let mut max_margin = f64::NEG_INFINITY;
    for v in corner_margins.iter().flatten() {
        max_margin = max_margin.max(*v);
    }
    for v in rung_margins.iter().flatten() {
        max_margin = max_margin.max(*v);
    }
    if !max_margin.is_finite() {
        max_margin = 0.0;
    }

    let st = StretchedTriangle {
        kappa,
        sides: polygon.sides,
        corners: [xbar, ybar, zbar],
        angles,
        via_marks,
        direct_marks,
        corner_margins,
        rung_margins,
        max_margin,
    };
    if st.max_margin > tol {
        return Err(ComparisonError::StretchViolation {
            margin: st.max_margin,
        });
    }
    Ok(st)
}

/// Interior break-point picks for a monotonicity check: waypoint indices into
/// the xy, yz, and xz chains of a triple.
#[derive(Debug, Clone, Copy)]
pub struct TriplePicks {
    pub xy: usize,
    pub yz: usize,
    pub zx: usize,
}

/// Corner-angle comparison between a corner triple and the sub-triple spanned
/// by one break point per side.
#[derive(Debug, Clone)]
pub struct MonotonicityReport {
    pub kappa: f64,
    /// Side lengths xy, yz, xz of the full triple.
    pub full_lengths: [f64; 3],
    /// Arm lengths of the sub-triple at the corners x, y, z.
    pub sub_arms: [[f64; 2]; 3],
    /// Opposite chain lengths of the sub-triple at the corners x, y, z.
    pub sub_opposite: [f64; 3],
    /// Comparison angles of the full triple at x, y, z.
    pub full_angles: [Option<f64>; 3],
    /// Comparison angles of the sub-triple at x, y, z.
    pub sub_angles: [Option<f64>; 3],
    /// Sub-triple angle minus full angle; positive values are violations.
    pub margins: [Option<f64>; 3],
    pub max_margin: f64,
}

impl MonotonicityReport {
    pub fn ok(&self, tol: f64) -> bool {
        self.max_margin <= tol
    }
}

fn monotonicity_core(
    kappa: f64,
    full_lengths: [f64; 3],
    sub_arms: [[f64; 2]; 3],
    sub_opposite: [f64; 3],
) -> MonotonicityReport {
    let [lxy, lyz, lxz] = full_lengths;
    let full_angles = [
        corner_angle(kappa, lyz, lxy, lxz),
        corner_angle(kappa, lxz, lxy, lyz),
        corner_angle(kappa, lxy, lyz, lxz),
    ];
    let mut sub_angles = [None; 3];
    for c in 0..3 {
        sub_angles[c] = corner_angle(kappa, sub_opposite[c], sub_arms[c][0], sub_arms[c][1]);
    }
    let mut margins = [None; 3];
    let mut max_margin = f64::NEG_INFINITY;
    for c in 0..3 {
        if let (Some(sub), Some(full)) = (sub_angles[c], full_angles[c]) {
            let margin = sub - full;
            margins[c] = Some(margin);
            max_margin = max_margin.max(margin);
        }
    }
    if !max_margin.is_finite() {
        max_margin = 0.0;
    }
    MonotonicityReport {
        kappa,
        full_lengths,
        sub_arms,
        sub_opposite,
        full_angles,
        sub_angles,
        margins,
        max_margin,
    }
}

/// Pure comparison-angle monotonicity check on explicit lengths; useful for
/// auditing externally produced data.
pub fn monotonicity_from_lengths(
    kappa: f64,
    full_lengths: [f64; 3],
    sub_arms: [[f64; 2]; 3],
    sub_opposite: [f64; 3],
) -> MonotonicityReport {
    monotonicity_core(kappa, full_lengths, sub_arms, sub_opposite)
}

/// Build a corner triple, pick one interior break point per chain, and check
/// that the comparison angles of the sub-triple do not exceed those of the
/// full triple at any corner.
pub fn angle_monotonicity_test<A: Ambient>(
    spec: &RuledSurface<A>,
    delta: &Decomposition,
    u: (f64, f64),
    v: (f64, f64),
    w: (f64, f64),
    picks: TriplePicks,
    tol: f64,
) -> Result<MonotonicityReport, ComparisonError> {
    let triple = build_chain_triple(spec, delta, u, v, w, tol)?;
    let interior = |len: usize, idx: usize| idx >= 1 && idx + 1 < len;
    if !interior(triple.xy.s_values.len(), picks.xy) {
        return Err(ComparisonError::BadPick("xy pick outside the chain interior"));
    }
    if !interior(triple.yz.s_values.len(), picks.yz) {
        return Err(ComparisonError::BadPick("yz pick outside the chain interior"));
    }
    if !interior(triple.xz.s_values.len(), picks.zx) {
        return Err(ComparisonError::BadPick("zx pick outside the chain interior"));
    }
    let cum_xy = chain_cumulative(spec, &triple.xy)?;
    let cum_yz = chain_cumulative(spec, &triple.yz)?;
    let cum_xz = chain_cumulative(spec, &triple.xz)?;
    let full_lengths = [
        *cum_xy.last().unwrap(),
        *cum_yz.last().unwrap(),
        *cum_xz.last().unwrap(),
    ];
    let pick_point = |chain: &Chain, idx: usize| (chain.s_values[idx], chain.t_values[idx]);
    let yj = pick_point(&triple.xy, picks.xy);
    let yk = pick_point(&triple.yz, picks.yz);
    let zl = pick_point(&triple.xz, picks.zx);
    let between = |a: (f64, f64), b: (f64, f64)| -> Result<f64, ComparisonError> {
        let (lo, hi) = if a.0 <= b.0 { (a, b) } else { (b, a) };
        let sub = sub_decomposition(&triple.grid, lo.0, hi.0)?;
        Ok(min_chain(spec, &sub, lo, hi, tol)?.length)
    };
    let sub_arms = [
        [cum_xy[picks.xy], cum_xz[picks.zx]],
        [full_lengths[0] - cum_xy[picks.xy], cum_yz[picks.yz]],
        [
            full_lengths[1] - cum_yz[picks.yz],
            full_lengths[2] - cum_xz[picks.zx],
        ],
    ];
    let sub_opposite = [between(yj, zl)?, between(yj, yk)?, between(yk, zl)?];
    Ok(monotonicity_core(
        triple.kappa,
        full_lengths,
        sub_arms,
        sub_opposite,
    ))
}

/// A space the sampled triangle-comparison test can run in: distances plus a
/// way to realize a point part way along a side, reporting the arc length
/// actually achieved.
pub trait TriangleSpace {
    type Point: Clone + std::fmt::Debug;
    fn kappa(&self) -> f64;
    fn distance(&self, p: &Self::Point, q: &Self::Point) -> Result<f64, ComparisonError>;
    /// A point near fraction `frac` of the way from `p` to `q`, together with
    /// its exact arc length from `p`.
    fn side_point(
        &self,
        p: &Self::Point,
        q: &Self::Point,
        frac: f64,
    ) -> Result<(Self::Point, f64), ComparisonError>;
}

/// Any [`Ambient`] as a [`TriangleSpace`]; side points sit exactly at the
/// requested fraction.
pub struct AmbientSpace<'a, A: Ambient>(pub &'a A);

impl<'a, A: Ambient> TriangleSpace for AmbientSpace<'a, A> {
    type Point = A::Point;

    fn kappa(&self) -> f64 {
        self.0.kappa()
    }

    fn distance(&self, p: &Self::Point, q: &Self::Point) -> Result<f64, ComparisonError> {
        Ok(self.0.distance(p, q))
    }

    fn side_point(
        &self,
        p: &Self::Point,
        q: &Self::Point,
        frac: f64,
    ) -> Result<(Self::Point, f64), ComparisonError> {
        let f = frac.clamp(0.0, 1.0);
        let d = self.0.distance(p, q);
        Ok((self.0.geodesic_point(p, q, f), f * d))
    }
}

fn params_ordered(p: (f64, f64), q: (f64, f64)) -> bool {
    p.0 < q.0 || (p.0 == q.0 && p.1 <= q.1)
}

/// The pullback metric of a ruled surface as a [`TriangleSpace`]: distances
/// are minimizing-chain lengths over the restricted decomposition, and side
/// points snap to the nearest chain waypoint with the honest arc length.
pub struct PullbackSpace<'a, A: Ambient> {
    spec: &'a RuledSurface<A>,
    delta: &'a Decomposition,
    tol: f64,
    cache: RwLock<HashMap<[u64; 4], Arc<(Chain, Vec<f64>)>>>,
}

impl<'a, A: Ambient> PullbackSpace<'a, A> {
    pub fn new(spec: &'a RuledSurface<A>, delta: &'a Decomposition, tol: f64) -> Self {
        PullbackSpace {
            spec,
            delta,
            tol,
            cache: RwLock::new(HashMap::new()),
        }
    }

    fn solved(
        &self,
        p: (f64, f64),
        q: (f64, f64),
    ) -> Result<Arc<(Chain, Vec<f64>)>, ComparisonError> {
        let (lo, hi) = if params_ordered(p, q) { (p, q) } else { (q, p) };
        let key = [lo.0.to_bits(), lo.1.to_bits(), hi.0.to_bits(), hi.1.to_bits()];
        if let Some(hit) = self.cache.read().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let sub = sub_decomposition(self.delta, lo.0, hi.0)?;
        let chain = min_chain(self.spec, &sub, lo, hi, self.tol)?;
        let cumulative = chain_cumulative(self.spec, &chain)?;
        let entry = Arc::new((chain, cumulative));
        self.cache
            .write()
            .unwrap()
            .insert(key, entry.clone());
        Ok(entry)
    }
}

impl<'a, A: Ambient> TriangleSpace for PullbackSpace<'a, A> {
    type Point = (f64, f64);

    fn kappa(&self) -> f64 {
        self.spec.ambient().kappa()
    }

    fn distance(&self, p: &Self::Point, q: &Self::Point) -> Result<f64, ComparisonError> {
        Ok(*self.solved(*p, *q)?.1.last().unwrap())
    }

    fn side_point(
        &self,
        p: &Self::Point,
        q: &Self::Point,
        frac: f64,
    ) -> Result<(Self::Point, f64), ComparisonError> {
        let entry = self.solved(*p, *q)?;
        let (chain, cumulative) = &*entry;
        let total = *cumulative.last().unwrap();
        let p_first = params_ordered(*p, *q);
        let target = frac.clamp(0.0, 1.0) * total;
        let from_lo = if p_first { target } else { total - target };
        let mut best = 0usize;
        let mut err = f64::INFINITY;
        for (i, &c) in cumulative.iter().enumerate() {
            let e = (c - from_lo).abs();
            if e < err {
                err = e;
                best = i;
            }
        }
        let arc_from_p = if p_first {
            cumulative[best]
        } else {
            total - cumulative[best]
        };
        Ok(((chain.s_values[best], chain.t_values[best]), arc_from_p))
    }
}

/// Settings for [`cat_test`].
#[derive(Debug, Clone)]
pub struct CatOptions {
    pub pairs_per_triangle: usize,
    pub seed: u64,
    pub tol: f64,
    /// Stop scanning as soon as a witness is recorded.
    pub stop_at_first_witness: bool,
}

impl Default for CatOptions {
    fn default() -> Self {
        CatOptions {
            pairs_per_triangle: 6,
            seed: 0,
            tol: 1e-9,
            stop_at_first_witness: false,
        }
    }
}

/// A recorded comparison violation. Equal side indices mark a failed triangle
/// inequality on the sampled corners themselves.
#[derive(Debug, Clone)]
pub struct CatWitness<P> {
    pub triangle: [P; 3],
    /// Indices of the sides carrying the two sampled points (0 = 01, 1 = 12,
    /// 2 = 02).
    pub sides: (usize, usize),
    /// Arc lengths of the two points from their sides' first corners.
    pub arcs: (f64, f64),
    pub actual: f64,
    pub comparison: f64,
    /// actual − comparison.
    pub excess: f64,
}

/// Outcome of a sampled comparison run.
#[derive(Debug, Clone)]
pub struct ComparisonReport<P> {
    pub kappa: f64,
    pub triangles: usize,
    pub skipped: usize,
    pub pairs: usize,
    /// Largest actual − comparison over all sampled pairs.
    pub worst_margin: f64,
    pub witness: Option<CatWitness<P>>,
    pub tol: f64,
}

impl<P> ComparisonReport<P> {
    pub fn ok(&self) -> bool {
        self.witness.is_none()
    }
}

const PAIR_SIDES: [(usize, usize); 3] = [(0, 1), (1, 2), (0, 2)];

/// Sample triangles from `sample` and compare sampled side-point pairs against
/// the model triangle with the same side lengths.
///
/// Triangles whose perimeter reaches twice the model diameter, or with a
/// degenerate side, are skipped and counted. A failed triangle inequality is
/// itself recorded as a witness. The RNG is seeded from the options, so runs
/// are reproducible.
pub fn cat_test<S: TriangleSpace>(
    space: &S,
    mut sample: impl FnMut(&mut ChaCha8Rng) -> Result<[S::Point; 3], ComparisonError>,
    n_samples: usize,
    opts: &CatOptions,
) -> Result<ComparisonReport<S::Point>, ComparisonError> {
    let kappa = space.kappa();
    let bound = 2.0 * model::model_diameter(kappa);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = ComparisonReport {
        kappa,
        triangles: 0,
        skipped: 0,
        pairs: 0,
        worst_margin: f64::NEG_INFINITY,
        witness: None,
        tol: opts.tol,
    };
    'outer: for _ in 0..n_samples {
        let tri = sample(&mut rng)?;
        let ds = [
            space.distance(&tri[0], &tri[1])?,
            space.distance(&tri[1], &tri[2])?,
            space.distance(&tri[0], &tri[2])?,
        ];
        let perimeter: f64 = ds.iter().sum();
        if !ds
            .iter()
            .all(|v| v.is_finite() && *v > DEGENERATE_SIDE_TOL)
            || !(perimeter < bound)
        {
            report.skipped += 1;
            continue;
        }
        report.triangles += 1;
        let (k_max, &d_max) = ds
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let ineq_excess = 2.0 * d_max - perimeter;
        if ineq_excess > opts.tol {
            report.worst_margin = report.worst_margin.max(ineq_excess);
            let better = report
                .witness
                .as_ref()
                .map_or(true, |w| ineq_excess > w.excess);
            if better {
                report.witness = Some(CatWitness {
                    triangle: tri.clone(),
                    sides: (k_max, k_max),
                    arcs: (0.0, 0.0),
                    actual: d_max,
                    comparison: perimeter - d_max,
                    excess: ineq_excess,
                });
            }
            if opts.stop_at_first_witness {
                break 'outer;
            }
            continue;
        }
        let corners = model::comparison_triangle(kappa, ds[1], ds[2], ds[0])?.place()?;
        for _ in 0..opts.pairs_per_triangle {
            let s1 = rng.gen_range(0..3usize);
            let s2 = rng.gen_range(0..3usize);
            let f1: f64 = rng.gen_range(0.0..1.0);
            let f2: f64 = rng.gen_range(0.0..1.0);
            let (a1, b1) = PAIR_SIDES[s1];
            let (a2, b2) = PAIR_SIDES[s2];
            let (p1, arc1) = space.side_point(&tri[a1], &tri[b1], f1)?;
            let (p2, arc2) = space.side_point(&tri[a2], &tri[b2], f2)?;
            let c1 = model::geodesic_point(&corners[a1], &corners[b1], (arc1 / ds[s1]).clamp(0.0, 1.0))?;
            let c2 = model::geodesic_point(&corners[a2], &corners[b2], (arc2 / ds[s2]).clamp(0.0, 1.0))?;
            let actual = space.distance(&p1, &p2)?;
            let comparison = model::distance(&c1, &c2)?;
            let margin = actual - comparison;
            report.pairs += 1;
            report.worst_margin = report.worst_margin.max(margin);
            if margin > opts.tol {
                let better = report.witness.as_ref().map_or(true, |w| margin > w.excess);
                if better {
                    report.witness = Some(CatWitness {
                        triangle: tri.clone(),
                        sides: (s1, s2),
                        arcs: (arc1, arc2),
                        actual,
                        comparison,
                        excess: margin,
                    });
                }
                if opts.stop_at_first_witness {
                    break 'outer;
                }
            }
        }
    }
    if !report.worst_margin.is_finite() {
        report.worst_margin = 0.0;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesics::{Euclid3, ModelPlane};
    use crate::ruled::chain_length;
    use approx::assert_abs_diff_eq;
    use nalgebra::Vector3;
    use std::f64::consts::PI;

    fn flat_strip(ell: f64, width: f64) -> RuledSurface<Euclid3> {
        let stations = vec![0.0, ell];
        let lower = vec![Vector3::new(0.0, 0.0, 0.0), Vector3::new(ell, 0.0, 0.0)];
        let upper = vec![
            Vector3::new(0.0, width, 0.0),
            Vector3::new(ell, width, 0.0),
        ];
        RuledSurface::from_samples(Euclid3, stations, lower, upper).unwrap()
    }

    fn cylinder(h: f64, steps: usize) -> RuledSurface<Euclid3> {
        let ell = PI;
        let stations: Vec<f64> = (0..=steps).map(|k| ell * k as f64 / steps as f64).collect();
        let lower: Vec<_> = stations
            .iter()
            .map(|&s| Vector3::new(s.cos(), s.sin(), 0.0))
            .collect();
        let upper: Vec<_> = stations
            .iter()
            .map(|&s| Vector3::new(s.cos(), s.sin(), h))
            .collect();
        RuledSurface::from_samples(Euclid3, stations, lower, upper).unwrap()
    }

    fn euclid_len(a: (f64, f64), b: (f64, f64)) -> f64 {
        ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
    }

    #[test]
    fn chain_triple_on_the_flat_strip_measures_euclidean_lengths() {
        let strip = flat_strip(3.0, 1.0);
        let delta = Decomposition::uniform(0.0, 3.0, 10).unwrap();
        let (u, v, w) = ((0.3, 0.2), (1.5, 0.9), (2.7, 0.1));
        let triple = build_chain_triple(&strip, &delta, u, v, w, 1e-12).unwrap();
        let lens = triple.lengths();
        assert_abs_diff_eq!(lens[0], euclid_len(u, v), epsilon = 1e-9);
        assert_abs_diff_eq!(lens[1], euclid_len(v, w), epsilon = 1e-9);
        assert_abs_diff_eq!(lens[2], euclid_len(u, w), epsilon = 1e-9);
        assert_eq!(triple.via.len(), triple.direct.len());
        assert_eq!(triple.grid.s_values().len(), triple.direct.len());
        assert_abs_diff_eq!(
            triple.grid.s_values()[triple.split],
            v.0,
            epsilon = 0.0
        );
    }

    #[test]
    fn chain_triple_relabels_corners_by_ruling() {
        let strip = flat_strip(3.0, 1.0);
        let delta = Decomposition::uniform(0.0, 3.0, 10).unwrap();
        let (u, v, w) = ((0.3, 0.2), (1.5, 0.9), (2.7, 0.1));
        let forward = build_chain_triple(&strip, &delta, u, v, w, 1e-12).unwrap();
        let shuffled = build_chain_triple(&strip, &delta, w, u, v, 1e-12).unwrap();
        assert_eq!(forward.corners, shuffled.corners);
        for (a, b) in forward.lengths().iter().zip(shuffled.lengths()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn chain_triple_on_a_single_ruling_degenerates_collinearly() {
        let strip = flat_strip(3.0, 1.0);
        let delta = Decomposition::uniform(0.0, 3.0, 10).unwrap();
        let triple =
            build_chain_triple(&strip, &delta, (1.0, 0.1), (1.0, 0.5), (1.0, 0.9), 1e-12)
                .unwrap();
        let lens = triple.lengths();
        assert_abs_diff_eq!(lens[0], 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(lens[1], 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(lens[2], 0.8, epsilon = 1e-12);
        let err = develop_polygon(strip.ambient(), &triple).unwrap_err();
        assert!(matches!(err, ComparisonError::DegenerateTriple(_)));
    }

    #[test]
    fn development_of_a_flat_triple_is_isometric() {
        let strip = flat_strip(3.0, 1.0);
        let delta = Decomposition::uniform(0.0, 3.0, 10).unwrap();
        let (u, v, w) = ((0.3, 0.2), (1.5, 0.9), (2.7, 0.1));
        let triple = build_chain_triple(&strip, &delta, u, v, w, 1e-12).unwrap();
        let polygon = develop_polygon(strip.ambient(), &triple).unwrap();

        assert!(polygon.max_edge_residual < 1e-9);
        assert!(polygon.concavity_ok(1e-6));
        assert_abs_diff_eq!(polygon.sides[0], triple.xy.length, epsilon = 1e-12);
        assert_abs_diff_eq!(polygon.sides[1], triple.yz.length, epsilon = 1e-12);
        assert_abs_diff_eq!(polygon.sides[2], triple.xz.length, epsilon = 1e-12);

        // straight chains develop with break angles of exactly π
        let n = polygon.via_dev.len() - 1;
        for i in 1..n {
            if i != polygon.split {
                assert_abs_diff_eq!(polygon.via_inner[i].unwrap(), PI, epsilon = 1e-6);
            }
            assert_abs_diff_eq!(polygon.direct_inner[i].unwrap(), PI, epsilon = 1e-6);
        }

        let (a, b, c) = (euclid_len(u, v), euclid_len(v, w), euclid_len(u, w));
        let expected = [
            model::comparison_angle(0.0, b, a, c).unwrap(),
            model::comparison_angle(0.0, c, a, b).unwrap(),
            model::comparison_angle(0.0, a, b, c).unwrap(),
        ];
        let got = polygon.corner_angles();
        for (have, want) in got.iter().zip(expected) {
            assert_abs_diff_eq!(have.unwrap(), want, epsilon = 1e-6);
        }
    }

    #[test]
    fn perturbed_chains_break_concavity() {
        let strip = flat_strip(3.0, 1.0);
        let delta = Decomposition::uniform(0.0, 3.0, 10).unwrap();
        let (u, v, w) = ((0.3, 0.2), (1.5, 0.9), (2.7, 0.1));
        let triple = build_chain_triple(&strip, &delta, u, v, w, 1e-12).unwrap();
        let minimized = develop_polygon(strip.ambient(), &triple).unwrap();
        assert!(minimized.concavity_ok(1e-6));

        let mut bent = triple.clone();
        let j = bent.split / 2;
        assert!(j >= 1);
        bent.xy.t_values[j] = (bent.xy.t_values[j] - 0.45).max(0.0);
        bent.xy.length = chain_length(&strip, &bent.xy).unwrap();
        bent.via[j] = strip
            .ruling_point(bent.xy.s_values[j], bent.xy.t_values[j])
            .unwrap();
        let kinked = develop_polygon(strip.ambient(), &bent).unwrap();
        assert!(kinked.concavity_defect > 1e-2);
        assert!(!kinked.concavity_ok(1e-6));
    }

    #[test]
    fn stretched_triangle_bounds_the_flat_development() {
        let strip = flat_strip(3.0, 1.0);
        let delta = Decomposition::uniform(0.0, 3.0, 10).unwrap();
        let (u, v, w) = ((0.3, 0.2), (1.5, 0.9), (2.7, 0.1));
        let triple = build_chain_triple(&strip, &delta, u, v, w, 1e-12).unwrap();
        let polygon = develop_polygon(strip.ambient(), &triple).unwrap();
        let st = stretch(&polygon, 1e-6).unwrap();

        assert!(st.max_margin <= 1e-6);
        for (dev, bar) in polygon.corner_angles().iter().zip(st.angles) {
            assert_abs_diff_eq!(dev.unwrap(), bar.unwrap(), epsilon = 1e-6);
        }
        // the middle-corner mark is the stretched corner itself
        let m = polygon.split;
        assert_abs_diff_eq!(
            model::distance(&st.via_marks[m], &st.corners[1]).unwrap(),
            0.0,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            model::distance(&st.corners[0], &st.corners[1]).unwrap(),
            polygon.sides[0],
            epsilon = 1e-9
        );
    }

    #[test]
    fn collinear_corners_stretch_to_a_degenerate_triangle() {
        let strip = flat_strip(3.0, 1.0);
        let delta = Decomposition::uniform(0.0, 3.0, 10).unwrap();
        let triple = build_chain_triple(
            &strip,
            &delta,
            (0.5, 0.25),
            (1.5, 0.5),
            (2.5, 0.75),
            1e-12,
        )
        .unwrap();
        let polygon = develop_polygon(strip.ambient(), &triple).unwrap();
        let st = stretch(&polygon, 1e-6).unwrap();
        assert_abs_diff_eq!(st.angles[0].unwrap(), 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(st.angles[1].unwrap(), PI, epsilon = 1e-6);
        assert_abs_diff_eq!(st.angles[2].unwrap(), 0.0, epsilon = 1e-6);
    }

    #[test]
    fn development_on_the_cylinder_stays_concave() {
        let spec = cylinder(1.0, 128);
        let delta = Decomposition::uniform(0.0, PI, 48).unwrap();
        let (u, v, w) = ((0.2, 0.1), (1.3, 0.8), (2.6, 0.3));
        let triple = build_chain_triple(&spec, &delta, u, v, w, 1e-12).unwrap();
        let polygon = develop_polygon(spec.ambient(), &triple).unwrap();
        assert!(polygon.concavity_ok(1e-5), "defect {}", polygon.concavity_defect);
        let st = stretch(&polygon, 1e-5).unwrap();

        // the cylinder unrolls isometrically, so the stretched angles track
        // the planar oracle to within the chord discretization
        let (a, b, c) = (euclid_len(u, v), euclid_len(v, w), euclid_len(u, w));
        assert_abs_diff_eq!(
            st.angles[0].unwrap(),
            model::comparison_angle(0.0, b, a, c).unwrap(),
            epsilon = 5e-3
        );
        assert_abs_diff_eq!(
            st.angles[1].unwrap(),
            model::comparison_angle(0.0, c, a, b).unwrap(),
            epsilon = 5e-3
        );
    }

    #[test]
    fn flat_sub_triples_keep_corner_angles() {
        let strip = flat_strip(3.0, 1.0);
        let delta = Decomposition::uniform(0.0, 3.0, 10).unwrap();
        let picks = TriplePicks { xy: 2, yz: 2, zx: 4 };
        let report = angle_monotonicity_test(
            &strip,
            &delta,
            (0.3, 0.2),
            (1.5, 0.9),
            (2.7, 0.1),
            picks,
            1e-12,
        )
        .unwrap();
        assert!(report.ok(1e-9), "margins {:?}", report.margins);
        // near-equality: straight chains realize the picked points on the
        // sides themselves, up to the solver's waypoint precision
        for margin in report.margins.iter().flatten() {
            assert!(margin.abs() <= 1e-7, "margins {:?}", report.margins);
        }
    }

    #[test]
    fn impossible_sub_lengths_are_flagged() {
        let report = monotonicity_from_lengths(
            0.0,
            [1.0, 1.0, 1.0],
            [[0.5, 0.5], [0.5, 0.5], [0.5, 0.5]],
            [0.9, 0.9, 0.9],
        );
        assert!(!report.ok(1e-5));
        for margin in report.margins.iter().flatten() {
            assert!(*margin > 1.0);
        }
    }

    #[test]
    fn euclidean_samples_pass_the_comparison_test() {
        let space = AmbientSpace(&Euclid3);
        let opts = CatOptions {
            seed: 5,
            tol: 1e-9,
            ..CatOptions::default()
        };
        let report = cat_test(
            &space,
            |rng| {
                let mut p = || {
                    Vector3::new(
                        rng.gen_range(0.0..1.0),
                        rng.gen_range(0.0..1.0),
                        rng.gen_range(0.0..1.0),
                    )
                };
                Ok([p(), p(), p()])
            },
            40,
            &opts,
        )
        .unwrap();
        assert!(report.ok(), "witness {:?}", report.witness);
        assert!(report.worst_margin <= 1e-9);
        assert_eq!(report.triangles, 40);
    }

    #[test]
    fn spherical_samples_meet_the_bound_exactly() {
        let plane = ModelPlane { kappa: 1.0 };
        let space = AmbientSpace(&plane);
        let opts = CatOptions {
            seed: 11,
            tol: 1e-9,
            ..CatOptions::default()
        };
        let report = cat_test(
            &space,
            |rng| {
                let mut p = || {
                    ModelPoint::polar(
                        1.0,
                        rng.gen_range(0.1..0.7),
                        rng.gen_range(0.0..2.0 * PI),
                    )
                    .map_err(ComparisonError::from)
                };
                Ok([p()?, p()?, p()?])
            },
            25,
            &opts,
        )
        .unwrap();
        assert!(report.ok(), "witness {:?}", report.witness);
        assert!(report.worst_margin <= 1e-9);
    }

    /// The plane with the max norm: distances never exceed the Euclidean
    /// ones, but comparison fails for corner-versus-midpoint pairs.
    struct MaxPlane;

    impl TriangleSpace for MaxPlane {
        type Point = (f64, f64);

        fn kappa(&self) -> f64 {
            0.0
        }

        fn distance(&self, p: &Self::Point, q: &Self::Point) -> Result<f64, ComparisonError> {
            Ok((p.0 - q.0).abs().max((p.1 - q.1).abs()))
        }

        fn side_point(
            &self,
            p: &Self::Point,
            q: &Self::Point,
            frac: f64,
        ) -> Result<(Self::Point, f64), ComparisonError> {
            let f = frac.clamp(0.0, 1.0);
            let point = (p.0 + f * (q.0 - p.0), p.1 + f * (q.1 - p.1));
            Ok((point, f * self.distance(p, q)?))
        }
    }

    #[test]
    fn max_metric_triangles_get_caught() {
        let space = MaxPlane;
        let opts = CatOptions {
            seed: 2,
            tol: 1e-6,
            ..CatOptions::default()
        };
        let report = cat_test(
            &space,
            |_| Ok([(0.0, 0.0), (1.0, 1.0), (1.0, -0.5)]),
            100,
            &opts,
        )
        .unwrap();
        let witness = report.witness.expect("max norm must fail comparison");
        assert!(witness.excess > 0.01);
        assert!(report.worst_margin > 0.01);
    }

    #[test]
    fn pullback_strip_passes_and_reports_waypoint_arcs() {
        let strip = flat_strip(3.0, 1.0);
        let delta = Decomposition::uniform(0.0, 3.0, 12).unwrap();
        let space = PullbackSpace::new(&strip, &delta, 1e-10);

        let p = (0.5, 0.2);
        let q = (2.5, 0.9);
        let (mid, arc) = space.side_point(&p, &q, 0.5).unwrap();
        let d_total = space.distance(&p, &q).unwrap();
        assert_abs_diff_eq!(d_total, euclid_len(p, q), epsilon = 1e-9);
        let d_back = space.distance(&p, &mid).unwrap();
        assert_abs_diff_eq!(d_back, arc, epsilon = 1e-6);
        assert!(delta.s_values().iter().any(|&s| (s - mid.0).abs() < 1e-12));

        let opts = CatOptions {
            seed: 9,
            tol: 1e-6,
            pairs_per_triangle: 5,
            ..CatOptions::default()
        };
        let report = cat_test(
            &space,
            |rng| {
                let mut p = || (rng.gen_range(0.1..2.9), rng.gen_range(0.0..1.0));
                Ok([p(), p(), p()])
            },
            12,
            &opts,
        )
        .unwrap();
        assert!(report.ok(), "witness {:?}", report.witness);
        assert!(report.worst_margin <= 1e-6);
    }

    #[test]
    fn pullback_cylinder_passes_within_mesh_error() {
        let spec = cylinder(1.0, 96);
        let delta = Decomposition::uniform(0.0, PI, 48).unwrap();
        let space = PullbackSpace::new(&spec, &delta, 1e-9);
        let opts = CatOptions {
            seed: 3,
            tol: 2e-3,
            pairs_per_triangle: 3,
            ..CatOptions::default()
        };
        let report = cat_test(
            &space,
            |rng| {
                let mut p = || (rng.gen_range(0.1..3.0), rng.gen_range(0.0..1.0));
                Ok([p(), p(), p()])
            },
            10,
            &opts,
        )
        .unwrap();
        assert!(report.ok(), "witness {:?}", report.witness);
    }
}
