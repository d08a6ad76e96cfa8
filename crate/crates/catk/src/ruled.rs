//! Ruled surfaces over an ambient space and their discretized pullback
//! metric: Δ-minimizing chains, refinement schedules, degenerate-ruling and
//! ruling-coincidence detection, and interior-vs-pullback diagnostics.
//!
//! A surface is described by two directrices sampled on a common station
//! grid, interpolated piecewise-geodesically; the ruling through station
//! parameter s is the ambient geodesic between the two directrix points.
//! Distances on the surface are approximated from below by chains: one point
//! per decomposition line, endpoints fixed, interior ruling parameters
//! relaxed by cyclic golden-section descent.

use crate::geodesics::{golden_min, Ambient};
use crate::model;
use thiserror::Error;

/// Rulings shorter than this count as constant (quotient points).
pub const DEGENERATE_RULING_TOL: f64 = 1e-12;
/// Chain distances below this mark coincident rulings.
pub const COINCIDENCE_TOL: f64 = 1e-10;
/// Ceiling on relaxation sweeps in one `min_chain` call.
const MAX_SWEEPS: usize = 5000;
/// Golden-section iterations per coordinate (bracket ~ 1e-13).
const GOLDEN_ITERS: usize = 60;

#[derive(Debug, Error)]
pub enum RuledError {
    #[error("directrix sample table invalid: {0}")]
    BadSamples(&'static str),
    #[error("ruling at s = {s} has length {len}, at or beyond the model diameter")]
    RulingTooLong { s: f64, len: f64 },
    #[error("parameter out of range: {0}")]
    BadParameter(f64),
    #[error("decomposition invalid: {0}")]
    BadDecomposition(&'static str),
    #[error("decomposition does not span the query interval")]
    SpanMismatch,
    #[error("chain relaxation did not converge within the sweep budget")]
    Budget,
    #[error("pullback level {level} decreased beyond tolerance under refinement")]
    NonMonotone { level: usize },
}

/// A ruled surface σ: [0, ℓ] × [0, 1] → ambient, with both directrices
/// sampled at common stations and interpolated piecewise-geodesically.
pub struct RuledSurface<A: Ambient> {
    ambient: A,
    stations: Vec<f64>,
    lower: Vec<A::Point>,
    upper: Vec<A::Point>,
}

impl<A: Ambient> RuledSurface<A> {
    pub fn from_samples(
        ambient: A,
        stations: Vec<f64>,
        lower: Vec<A::Point>,
        upper: Vec<A::Point>,
    ) -> Result<Self, RuledError> {
        if stations.len() < 2 {
            return Err(RuledError::BadSamples("need at least two stations"));
        }
        if stations.len() != lower.len() || stations.len() != upper.len() {
            return Err(RuledError::BadSamples("sample counts differ from stations"));
        }
        if stations[0] != 0.0 {
            return Err(RuledError::BadSamples("stations must start at 0"));
        }
        if !stations.windows(2).all(|w| w[0] < w[1]) {
            return Err(RuledError::BadSamples("stations must increase strictly"));
        }
        let bound = model::model_diameter(ambient.kappa());
        for (i, &s) in stations.iter().enumerate() {
            let len = ambient.distance(&lower[i], &upper[i]);
            if !len.is_finite() {
                return Err(RuledError::BadSamples("non-finite ruling length"));
            }
            if len >= bound {
                return Err(RuledError::RulingTooLong { s, len });
            }
        }
        // both transversal polylines must be rectifiable on the samples
        for samples in [&lower, &upper] {
            let mut total = 0.0;
            for w in 0..stations.len() - 1 {
                let d = ambient.distance(&samples[w], &samples[w + 1]);
                if !d.is_finite() || d >= bound {
                    return Err(RuledError::BadSamples(
                        "directrix segment not geodesically interpolable",
                    ));
                }
                total += d;
            }
            if !total.is_finite() {
                return Err(RuledError::BadSamples("directrix not rectifiable"));
            }
        }
        Ok(RuledSurface {
            ambient,
            stations,
            lower,
            upper,
        })
    }

    pub fn ambient(&self) -> &A {
        &self.ambient
    }

    /// Parameter length ℓ of the s-axis.
    pub fn ell(&self) -> f64 {
        *self.stations.last().unwrap()
    }

    pub fn stations(&self) -> &[f64] {
        &self.stations
    }

    fn interp(&self, samples: &[A::Point], s: f64) -> Result<A::Point, RuledError> {
        let ell = self.ell();
        if !(-1e-12..=ell + 1e-12).contains(&s) {
            return Err(RuledError::BadParameter(s));
        }
        let s = s.clamp(0.0, ell);
        let k = match self
            .stations
            .binary_search_by(|probe| probe.partial_cmp(&s).unwrap())
        {
            Ok(exact) => return Ok(samples[exact].clone()),
            Err(after) => after - 1,
        };
        let (s0, s1) = (self.stations[k], self.stations[k + 1]);
        let t = (s - s0) / (s1 - s0);
        Ok(self.ambient.geodesic_point(&samples[k], &samples[k + 1], t))
    }

    pub fn directrix0(&self, s: f64) -> Result<A::Point, RuledError> {
        self.interp(&self.lower, s)
    }

    pub fn directrix1(&self, s: f64) -> Result<A::Point, RuledError> {
        self.interp(&self.upper, s)
    }

    /// The point λ_s(t) on the ruling geodesic through parameter s.
    pub fn ruling_point(&self, s: f64, t: f64) -> Result<A::Point, RuledError> {
        if !(-1e-12..=1.0 + 1e-12).contains(&t) {
            return Err(RuledError::BadParameter(t));
        }
        let a = self.directrix0(s)?;
        let b = self.directrix1(s)?;
        let len = self.ambient.distance(&a, &b);
        if len >= model::model_diameter(self.ambient.kappa()) {
            return Err(RuledError::RulingTooLong { s, len });
        }
        if len < DEGENERATE_RULING_TOL {
            return Ok(a);
        }
        Ok(self.ambient.geodesic_point(&a, &b, t.clamp(0.0, 1.0)))
    }

    /// Length of the ruling geodesic at s.
    pub fn ruling_length(&self, s: f64) -> Result<f64, RuledError> {
        let a = self.directrix0(s)?;
        let b = self.directrix1(s)?;
        Ok(self.ambient.distance(&a, &b))
    }

    /// Ruling endpoints and lengths evaluated on every decomposition line.
    fn lines(&self, delta: &Decomposition) -> Result<Lines<A::Point>, RuledError> {
        let mut a = Vec::with_capacity(delta.s.len());
        let mut b = Vec::with_capacity(delta.s.len());
        let mut len = Vec::with_capacity(delta.s.len());
        for &s in &delta.s {
            let p = self.directrix0(s)?;
            let q = self.directrix1(s)?;
            let d = self.ambient.distance(&p, &q);
            if d >= model::model_diameter(self.ambient.kappa()) {
                return Err(RuledError::RulingTooLong { s, len: d });
            }
            a.push(p);
            b.push(q);
            len.push(d);
        }
        Ok(Lines {
            s: delta.s.clone(),
            a,
            b,
            len,
        })
    }
}

struct Lines<P> {
    s: Vec<f64>,
    a: Vec<P>,
    b: Vec<P>,
    len: Vec<f64>,
}

impl<P: Clone> Lines<P> {
    fn point<A: Ambient<Point = P>>(&self, ambient: &A, i: usize, t: f64) -> P {
        if self.len[i] < DEGENERATE_RULING_TOL {
            return self.a[i].clone();
        }
        ambient.geodesic_point(&self.a[i], &self.b[i], t.clamp(0.0, 1.0))
    }
}

/// A finite set of s-axis lines over which chains are formed.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    s: Vec<f64>,
}

impl Decomposition {
    pub fn new(s_values: Vec<f64>) -> Result<Self, RuledError> {
        if s_values.is_empty() {
            return Err(RuledError::BadDecomposition("no lines"));
        }
        if !s_values.iter().all(|s| s.is_finite()) {
            return Err(RuledError::BadDecomposition("non-finite line"));
        }
        if !s_values.windows(2).all(|w| w[0] < w[1]) {
            return Err(RuledError::BadDecomposition("lines must increase strictly"));
        }
        Ok(Decomposition { s: s_values })
    }

    /// Evenly spaced lines over [lo, hi] with the given segment count.
    pub fn uniform(lo: f64, hi: f64, segments: usize) -> Result<Self, RuledError> {
        if !(lo < hi) || segments == 0 {
            return Err(RuledError::BadDecomposition("empty span"));
        }
        let mut s = Vec::with_capacity(segments + 1);
        for k in 0..=segments {
            let f = k as f64 / segments as f64;
            s.push(if k == segments { hi } else { lo + f * (hi - lo) });
        }
        Decomposition::new(s)
    }

    /// A single line (both chain endpoints on one ruling).
    pub fn singleton(s: f64) -> Result<Self, RuledError> {
        Decomposition::new(vec![s])
    }

    /// The exact-midpoint refinement (keeps every existing line bit-for-bit).
    pub fn refined(&self) -> Decomposition {
        if self.s.len() < 2 {
            return self.clone();
        }
        let mut s = Vec::with_capacity(self.s.len() * 2 - 1);
        for w in self.s.windows(2) {
            s.push(w[0]);
            s.push(0.5 * (w[0] + w[1]));
        }
        s.push(*self.s.last().unwrap());
        Decomposition { s }
    }

    pub fn s_values(&self) -> &[f64] {
        &self.s
    }

    /// Largest gap between consecutive lines (0 for a singleton).
    pub fn mesh(&self) -> f64 {
        self.s
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    pub fn span(&self) -> (f64, f64) {
        (self.s[0], *self.s.last().unwrap())
    }

    /// Whether every line of `coarser` appears here (same span).
    pub fn refines(&self, coarser: &Decomposition) -> bool {
        if self.span().0 != coarser.span().0 || self.span().1 != coarser.span().1 {
            return false;
        }
        coarser.s.iter().all(|&s| {
            self.s
                .binary_search_by(|probe| probe.partial_cmp(&s).unwrap())
                .is_ok()
        })
    }
}

/// A chain: one point per decomposition line (x_i = λ_{s_i}(t_i)), endpoints
/// fixed by the query. A single-line decomposition carries both endpoints on
/// that one ruling.
#[derive(Debug, Clone)]
pub struct Chain {
    pub s_values: Vec<f64>,
    pub t_values: Vec<f64>,
    pub length: f64,
}

/// Recompute a chain's length from ambient distances.
pub fn chain_length<A: Ambient>(
    spec: &RuledSurface<A>,
    chain: &Chain,
) -> Result<f64, RuledError> {
    let pts = chain_points(spec, chain)?;
    Ok(polyline_length(spec.ambient(), &pts))
}

/// Cumulative arc length along the chain (starts at 0).
pub fn chain_cumulative<A: Ambient>(
    spec: &RuledSurface<A>,
    chain: &Chain,
) -> Result<Vec<f64>, RuledError> {
    let pts = chain_points(spec, chain)?;
    let mut acc = vec![0.0];
    for w in pts.windows(2) {
        let d = spec.ambient.distance(&w[0], &w[1]);
        acc.push(acc.last().unwrap() + d);
    }
    Ok(acc)
}

fn chain_points<A: Ambient>(
    spec: &RuledSurface<A>,
    chain: &Chain,
) -> Result<Vec<A::Point>, RuledError> {
    chain
        .s_values
        .iter()
        .zip(&chain.t_values)
        .map(|(&s, &t)| spec.ruling_point(s, t))
        .collect()
}

fn polyline_length<A: Ambient>(ambient: &A, pts: &[A::Point]) -> f64 {
    pts.windows(2)
        .map(|w| ambient.distance(&w[0], &w[1]))
        .sum()
}

/// The Δ-minimizing chain between u = (s, t) and u' = (s', t').
///
/// Cyclic coordinate descent over the interior ruling parameters, each 1-D
/// subproblem solved by golden-section on [0, 1], until the per-sweep length
/// improvement drops below `tol` and the one-sided first-variation condition
/// holds in every coordinate.
pub fn min_chain<A: Ambient>(
    spec: &RuledSurface<A>,
    delta: &Decomposition,
    u: (f64, f64),
    v: (f64, f64),
    tol: f64,
) -> Result<Chain, RuledError> {
    min_chain_seeded(spec, delta, u, v, tol, None)
}

/// `min_chain` with a warm-start t-vector (one value per decomposition line;
/// endpoints are overwritten by the query parameters).
pub fn min_chain_seeded<A: Ambient>(
    spec: &RuledSurface<A>,
    delta: &Decomposition,
    u: (f64, f64),
    v: (f64, f64),
    tol: f64,
    seed: Option<&[f64]>,
) -> Result<Chain, RuledError> {
    for t in [u.1, v.1] {
        if !(-1e-12..=1.0 + 1e-12).contains(&t) {
            return Err(RuledError::BadParameter(t));
        }
    }
    let (p, q) = if u.0 <= v.0 { (u, v) } else { (v, u) };
    let (lo, hi) = delta.span();
    if (lo - p.0).abs() > 1e-9 || (hi - q.0).abs() > 1e-9 {
        return Err(RuledError::SpanMismatch);
    }

    if delta.s.len() == 1 {
        let len = spec.ruling_length(delta.s[0])?;
        return Ok(Chain {
            s_values: vec![delta.s[0]; 2],
            t_values: vec![p.1, q.1],
            length: (p.1 - q.1).abs() * len,
        });
    }

    let ambient = spec.ambient();
    let lines = spec.lines(delta)?;
    let n = lines.s.len();
    let mut ts: Vec<f64> = match seed {
        Some(init) if init.len() == n => init.iter().map(|t| t.clamp(0.0, 1.0)).collect(),
        _ => (0..n)
            .map(|i| {
                let f = (lines.s[i] - lo) / (hi - lo);
                p.1 + f * (q.1 - p.1)
            })
            .collect(),
    };
    ts[0] = p.1.clamp(0.0, 1.0);
    ts[n - 1] = q.1.clamp(0.0, 1.0);
    let mut xs: Vec<A::Point> = (0..n).map(|i| lines.point(ambient, i, ts[i])).collect();

    let mut len = polyline_length(ambient, &xs);
    let mut sweeps = 0usize;
    loop {
        // descend until one sweep stops paying
        loop {
            let forward = sweeps % 2 == 0;
            let order: Vec<usize> = if forward {
                (1..n - 1).collect()
            } else {
                (1..n - 1).rev().collect()
            };
            for i in order {
                let objective = |t: f64| {
                    let x = lines.point(ambient, i, t);
                    ambient.distance(&xs[i - 1], &x) + ambient.distance(&x, &xs[i + 1])
                };
                let (t_best, _) = golden_min(objective, 0.0, 1.0, GOLDEN_ITERS);
                ts[i] = t_best;
                xs[i] = lines.point(ambient, i, t_best);
            }
            sweeps += 1;
            let new_len = polyline_length(ambient, &xs);
            let improved = len - new_len;
            len = new_len;
            if improved < tol.max(1e-15 * (1.0 + len)) {
                break;
            }
            if sweeps >= MAX_SWEEPS {
                return Err(RuledError::Budget);
            }
        }
        if first_variation_ok(ambient, &lines, &ts, &xs, tol, len) {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            return Err(RuledError::Budget);
        }
    }

    Ok(Chain {
        s_values: lines.s,
        t_values: ts,
        length: len,
    })
}

/// One-sided length derivatives in every interior coordinate must be
/// ≥ −10·tol (minus a rounding floor for the finite difference itself).
fn first_variation_ok<A: Ambient>(
    ambient: &A,
    lines: &Lines<A::Point>,
    ts: &[f64],
    xs: &[A::Point],
    tol: f64,
    len: f64,
) -> bool {
    let n = ts.len();
    let step = 1e-6;
    let floor = 10.0 * tol + 1e-9 * (1.0 + len);
    for i in 1..n - 1 {
        let f0 = ambient.distance(&xs[i - 1], &xs[i]) + ambient.distance(&xs[i], &xs[i + 1]);
        for dir in [1.0, -1.0] {
            let t2 = ts[i] + dir * step;
            if !(0.0..=1.0).contains(&t2) {
                continue;
            }
            let x2 = lines.point(ambient, i, t2);
            let f2 = ambient.distance(&xs[i - 1], &x2) + ambient.distance(&x2, &xs[i + 1]);
            if (f2 - f0) / step < -floor {
                return false;
            }
        }
    }
    true
}

/// Per-level pullback estimates over a nested schedule of decompositions.
#[derive(Debug, Clone)]
pub struct PullbackReport {
    pub estimate: f64,
    pub levels: Vec<f64>,
    pub converged: bool,
    /// Minimizing chain on the finest level.
    pub chain: Chain,
}

/// Pullback distance e_σ(u, u') approximated over a refinement schedule.
/// Level values must be nondecreasing within 1e-9; `converged` reports
/// whether the last two levels agree within `tol`.
pub fn pullback_distance<A: Ambient>(
    spec: &RuledSurface<A>,
    u: (f64, f64),
    v: (f64, f64),
    schedule: &[Decomposition],
    tol: f64,
) -> Result<PullbackReport, RuledError> {
    if schedule.is_empty() {
        return Err(RuledError::BadDecomposition("empty schedule"));
    }
    for k in 1..schedule.len() {
        if !schedule[k].refines(&schedule[k - 1]) {
            return Err(RuledError::BadDecomposition("schedule is not nested"));
        }
    }
    let mut levels = Vec::with_capacity(schedule.len());
    let mut chain: Option<Chain> = None;
    for (k, delta) in schedule.iter().enumerate() {
        let seed = chain
            .as_ref()
            .map(|c| interp_seed(&c.s_values, &c.t_values, delta.s_values()));
        let next = min_chain_seeded(spec, delta, u, v, tol, seed.as_deref())?;
        if let Some(&prev) = levels.last() {
            if next.length < prev - 1e-9 {
                return Err(RuledError::NonMonotone { level: k });
            }
        }
        levels.push(next.length);
        chain = Some(next);
    }
    let converged = levels.len() >= 2 && {
        let last = levels[levels.len() - 1];
        let prev = levels[levels.len() - 2];
        (last - prev).abs() < tol
    };
    Ok(PullbackReport {
        estimate: *levels.last().unwrap(),
        levels,
        converged,
        chain: chain.unwrap(),
    })
}

/// Linear-in-s interpolation of a coarse t-vector onto new lines.
fn interp_seed(old_s: &[f64], old_t: &[f64], new_s: &[f64]) -> Vec<f64> {
    new_s
        .iter()
        .map(|&s| {
            match old_s.binary_search_by(|probe| probe.partial_cmp(&s).unwrap()) {
                Ok(i) => old_t[i],
                Err(0) => old_t[0],
                Err(i) if i >= old_s.len() => *old_t.last().unwrap(),
                Err(i) => {
                    let f = (s - old_s[i - 1]) / (old_s[i] - old_s[i - 1]);
                    old_t[i - 1] + f * (old_t[i] - old_t[i - 1])
                }
            }
        })
        .collect()
}

/// Straightness audit of a minimized chain: at every interior point and each
/// ruling side t ∈ {0, 1}, the two comparison angles around the chain must
/// sum to at least π. Angles are estimated at a shrinking scale ladder.
#[derive(Debug, Clone)]
pub struct ChainAngleReport {
    /// max over interior points of max(π − angle sum, 0)
    pub max_violation: f64,
    /// interior indices skipped because consecutive chain points coincide
    pub skipped: Vec<usize>,
}

pub fn check_chain_angles<A: Ambient>(
    spec: &RuledSurface<A>,
    chain: &Chain,
) -> Result<ChainAngleReport, RuledError> {
    let ambient = spec.ambient();
    let kappa = ambient.kappa();
    let n = chain.s_values.len();
    let pts = chain_points(spec, chain)?;
    let mut max_violation: f64 = 0.0;
    let mut skipped = Vec::new();
    for i in 1..n.saturating_sub(1) {
        let d_prev = ambient.distance(&pts[i - 1], &pts[i]);
        let d_next = ambient.distance(&pts[i], &pts[i + 1]);
        if d_prev < 1e-12 || d_next < 1e-12 {
            skipped.push(i);
            continue;
        }
        let s_i = chain.s_values[i];
        let t_i = chain.t_values[i];
        let len_i = spec.ruling_length(s_i)?;
        if len_i < DEGENERATE_RULING_TOL {
            skipped.push(i);
            continue;
        }
        for side in [0.0_f64, 1.0_f64] {
            let gap = (side - t_i).abs() * len_i;
            if gap < 1e-12 {
                // the chain point sits on this ruling end; only the other
                // side constrains it
                continue;
            }
            let mut sum_at_finest = 0.0;
            for scale in [1e-2_f64, 1e-3, 1e-4] {
                let h_prev = scale.min(0.5 * d_prev);
                let h_next = scale.min(0.5 * d_next);
                let h_rule = scale.min(0.5 * gap);
                let p_prev = ambient.geodesic_point(&pts[i], &pts[i - 1], h_prev / d_prev);
                let p_next = ambient.geodesic_point(&pts[i], &pts[i + 1], h_next / d_next);
                let dir = if side > t_i { 1.0 } else { -1.0 };
                let r = spec.ruling_point(s_i, t_i + dir * h_rule / len_i)?;
                let ang = |a: &A::Point, b: &A::Point| -> f64 {
                    model::comparison_angle(
                        kappa,
                        ambient.distance(a, b),
                        ambient.distance(&pts[i], a),
                        ambient.distance(&pts[i], b),
                    )
                    .unwrap_or(0.0)
                };
                sum_at_finest = ang(&p_prev, &r) + ang(&r, &p_next);
            }
            max_violation = max_violation.max(std::f64::consts::PI - sum_at_finest).max(0.0);
        }
    }
    Ok(ChainAngleReport {
        max_violation,
        skipped,
    })
}

/// s-intervals (at the sampling resolution) where the ruling degenerates to a
/// point.
pub fn detect_degenerate_rulings<A: Ambient>(
    spec: &RuledSurface<A>,
    resolution: usize,
) -> Result<Vec<(f64, f64)>, RuledError> {
    let resolution = resolution.max(1);
    let ell = spec.ell();
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<(f64, f64)> = None;
    for k in 0..=resolution {
        let s = ell * (k as f64) / (resolution as f64);
        let degenerate = spec.ruling_length(s)? < DEGENERATE_RULING_TOL;
        match (degenerate, open) {
            (true, None) => open = Some((s, s)),
            (true, Some((lo, _))) => open = Some((lo, s)),
            (false, Some(iv)) => {
                intervals.push(iv);
                open = None;
            }
            (false, None) => {}
        }
    }
    if let Some(iv) = open {
        intervals.push(iv);
    }
    Ok(intervals)
}

/// Pairs of decomposition lines whose rulings coincide pointwise in the
/// ambient (the discrete shadow of the quotient identification).
pub fn detect_ruling_coincidence<A: Ambient>(
    spec: &RuledSurface<A>,
    delta: &Decomposition,
) -> Result<Vec<(f64, f64)>, RuledError> {
    let ambient = spec.ambient();
    let lines = spec.lines(delta)?;
    let n = lines.s.len();
    let t_samples: Vec<f64> = (0..=8).map(|k| k as f64 / 8.0).collect();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let matched = t_samples.iter().all(|&t| {
                let p = lines.point(ambient, i, t);
                let q = lines.point(ambient, j, t);
                ambient.coincide(&p, &q, COINCIDENCE_TOL)
            });
            if matched {
                pairs.push((lines.s[i], lines.s[j]));
            }
        }
    }
    Ok(pairs)
}

/// One sampled pair in an interior-vs-pullback comparison.
#[derive(Debug, Clone)]
pub struct InteriorRow {
    pub u: (f64, f64),
    pub v: (f64, f64),
    /// Interior (on-surface) distance estimate.
    pub interior: f64,
    /// Discretized pullback e_σ^Δ between the same parameters.
    pub pullback: f64,
}

#[derive(Debug, Clone)]
pub struct InteriorReport {
    pub rows: Vec<InteriorRow>,
    pub max_discrepancy: f64,
    /// Set when the pullback exceeds the interior estimate beyond tolerance
    /// at some pair: the parameter-space metric is not realized by the image
    /// surface (the quotient identifies points).
    pub induced_metric_fails: bool,
}

/// Compare interior (image-surface) distances against the pullback metric on
/// sampled parameter pairs.
///
/// The interior oracle is a Dijkstra search over a grid graph on the surface
/// (rulings × a t-grid, with chord edges between neighboring rulings and
/// zero-length identifications where rulings coincide), followed by chain
/// straightening of each monotone stretch of the graph path.
pub fn interior_vs_pullback<A: Ambient>(
    spec: &RuledSurface<A>,
    pairs: &[((f64, f64), (f64, f64))],
    delta: &Decomposition,
    tol: f64,
) -> Result<InteriorReport, RuledError> {
    let mut rows = Vec::with_capacity(pairs.len());
    let mut max_discrepancy: f64 = 0.0;
    let mut fails = false;
    let coincident = detect_ruling_coincidence(spec, delta)?;
    for &(u, v) in pairs {
        let interior = interior_distance(spec, delta, &coincident, u, v, tol)?;
        let (lo, hi) = (u.0.min(v.0), u.0.max(v.0));
        let sub = sub_decomposition(delta, lo, hi)?;
        let pullback = min_chain(spec, &sub, u, v, tol)?.length;
        let gap = pullback - interior;
        if gap > tol {
            fails = true;
        }
        max_discrepancy = max_discrepancy.max(gap.abs());
        rows.push(InteriorRow {
            u,
            v,
            interior,
            pullback,
        });
    }
    Ok(InteriorReport {
        rows,
        max_discrepancy,
        induced_metric_fails: fails,
    })
}

/// Decomposition lines restricted to [lo, hi], with the endpoints inserted.
pub(crate) fn sub_decomposition(
    delta: &Decomposition,
    lo: f64,
    hi: f64,
) -> Result<Decomposition, RuledError> {
    if hi - lo < 1e-12 {
        return Decomposition::singleton(lo);
    }
    let mut vals = vec![lo];
    for &s in delta.s_values() {
        if s > lo + 1e-12 && s < hi - 1e-12 {
            vals.push(s);
        }
    }
    vals.push(hi);
    Decomposition::new(vals)
}

/// Grid-graph interior distance with post-hoc chain straightening.
fn interior_distance<A: Ambient>(
    spec: &RuledSurface<A>,
    delta: &Decomposition,
    coincident: &[(f64, f64)],
    u: (f64, f64),
    v: (f64, f64),
    tol: f64,
) -> Result<f64, RuledError> {
    let ambient = spec.ambient();
    let lines = spec.lines(delta)?;
    let n = lines.s.len();
    if n == 1 {
        return Ok((u.1 - v.1).abs() * lines.len[0]);
    }
    let m = ((1.0 / delta.mesh().max(1e-6)).ceil() as usize).clamp(8, 128);
    let node = |i: usize, j: usize| i * (m + 1) + j;
    let total = n * (m + 1) + 2;
    let (src, dst) = (total - 2, total - 1);

    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); total];
    let add = |adj: &mut Vec<Vec<(usize, f64)>>, a: usize, b: usize, w: f64| {
        adj[a].push((b, w));
        adj[b].push((a, w));
    };
    for i in 0..n {
        for j in 0..m {
            add(&mut adj, node(i, j), node(i, j + 1), lines.len[i] / m as f64);
        }
    }
    let grid_pt = |i: usize, j: usize| lines.point(ambient, i, j as f64 / m as f64);
    for i in 0..n - 1 {
        for j in 0..=m {
            let a = grid_pt(i, j);
            let k_lo = j.saturating_sub(2);
            let k_hi = (j + 2).min(m);
            for k in k_lo..=k_hi {
                let b = grid_pt(i + 1, k);
                add(&mut adj, node(i, j), node(i + 1, k), ambient.distance(&a, &b));
            }
        }
    }
    // identify coincident rulings pointwise
    for &(si, sj) in coincident {
        let i = lines.s.iter().position(|&s| s == si).unwrap();
        let j = lines.s.iter().position(|&s| s == sj).unwrap();
        for k in 0..=m {
            add(&mut adj, node(i, k), node(j, k), 0.0);
        }
    }
    // attach query endpoints to the grid around their parameter positions
    let attach = |adj: &mut Vec<Vec<(usize, f64)>>,
                      q: (f64, f64),
                      qn: usize|
     -> Result<A::Point, RuledError> {
        let p = spec.ruling_point(q.0, q.1)?;
        let hits: Vec<usize> = match lines
            .s
            .binary_search_by(|probe| probe.partial_cmp(&q.0).unwrap())
        {
            Ok(i) => vec![i],
            Err(i) => {
                let mut v = Vec::new();
                if i > 0 {
                    v.push(i - 1);
                }
                if i < n {
                    v.push(i);
                }
                v
            }
        };
        for i in hits {
            let j_near = (q.1 * m as f64).round() as isize;
            for dj in -2..=2isize {
                let j = j_near + dj;
                if (0..=m as isize).contains(&j) {
                    let g = grid_pt(i, j as usize);
                    add(adj, qn, node(i, j as usize), ambient.distance(&p, &g));
                }
            }
        }
        Ok(p)
    };
    let p_u = attach(&mut adj, u, src)?;
    let p_v = attach(&mut adj, v, dst)?;
    if ambient.coincide(&p_u, &p_v, 1e-12) {
        return Ok(0.0);
    }

    // Dijkstra with predecessor tracking
    let mut dist = vec![f64::INFINITY; total];
    let mut pred = vec![usize::MAX; total];
    let mut heap = std::collections::BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(QItem { d: 0.0, node: src });
    while let Some(QItem { d, node: a }) = heap.pop() {
        if d > dist[a] {
            continue;
        }
        if a == dst {
            break;
        }
        for &(b, w) in &adj[a] {
            let nd = d + w;
            if nd < dist[b] {
                dist[b] = nd;
                pred[b] = a;
                heap.push(QItem { d: nd, node: b });
            }
        }
    }
    if !dist[dst].is_finite() {
        return Ok(f64::INFINITY);
    }

    let mut best = dist[dst];
    if (u.0 - v.0).abs() < 1e-15 {
        best = best.min((u.1 - v.1).abs() * spec.ruling_length(u.0)?);
    }

    // straighten each monotone stretch of the graph path with a chain solve
    let mut path = vec![dst];
    let mut cur = dst;
    while pred[cur] != usize::MAX {
        cur = pred[cur];
        path.push(cur);
    }
    path.reverse();
    let coords: Vec<(f64, f64)> = path
        .iter()
        .map(|&nd| {
            if nd == src {
                u
            } else if nd == dst {
                v
            } else {
                (lines.s[nd / (m + 1)], (nd % (m + 1)) as f64 / m as f64)
            }
        })
        .collect();
    // split the path where the sweep direction reverses or where it hops
    // through a zero-weight identification edge
    let mut segments: Vec<(usize, usize)> = Vec::new();
    let mut start = 0usize;
    let mut prev_sign = 0i8;
    for k in 1..coords.len() {
        let ds = coords[k].0 - coords[k - 1].0;
        let w = dist[path[k]] - dist[path[k - 1]];
        let jump = ds != 0.0 && w.abs() < 1e-15;
        let sign = if ds > 0.0 {
            1
        } else if ds < 0.0 {
            -1
        } else {
            0
        };
        if jump {
            if k - 1 > start {
                segments.push((start, k - 1));
            }
            start = k;
            prev_sign = 0;
        } else if sign != 0 && prev_sign != 0 && sign != prev_sign {
            segments.push((start, k - 1));
            start = k - 1;
            prev_sign = sign;
        } else if sign != 0 {
            prev_sign = sign;
        }
    }
    if coords.len() - 1 > start {
        segments.push((start, coords.len() - 1));
    }
    let mut est = 0.0;
    for &(a, b) in &segments {
        let (pa, pb) = (coords[a], coords[b]);
        if (pa.0 - pb.0).abs() < 1e-15 {
            est += (pa.1 - pb.1).abs() * spec.ruling_length(pa.0)?;
        } else {
            let sub = sub_decomposition(delta, pa.0.min(pb.0), pa.0.max(pb.0))?;
            est += min_chain(spec, &sub, pa, pb, tol)?.length;
        }
    }
    Ok(best.min(est))
}

#[derive(PartialEq)]
struct QItem {
    d: f64,
    node: usize,
}

impl Eq for QItem {}

impl Ord for QItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .d
            .total_cmp(&self.d)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for QItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
