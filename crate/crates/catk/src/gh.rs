//! Gromov-Hausdorff diagnostics between finite metric nets.
//!
//! A [`FiniteNet`] is a labeled point set with an exact symmetric distance
//! matrix. [`gh_upper`] bounds the Gromov-Hausdorff distance from above by
//! half the distortion of an explicit correspondence (exhaustive search for
//! nets of at most [`EXACT_LIMIT`] points, seeded local search otherwise);
//! [`gh_lower`] bounds it from below through diameter and distance-spectrum
//! gaps. [`ladder_report`] samples nets from a sequence of complexes by
//! farthest-point traversal and tabulates consecutive upper bounds, which is
//! how approximation ladders are checked for convergence.

use std::fmt::Write as _;

use thiserror::Error;

use crate::complex::{fmt_f64, MetricComplex, VertexId};
use crate::geodesics::{
    distance_matrix, shortest_path_with, vertex_surface_point, GeodesicError, PathOptions,
};

/// Permitted triangle-inequality defect in a [`FiniteNet`] matrix.
pub const TRIANGLE_SLACK: f64 = 1e-9;

/// Largest net size for which [`gh_upper`] runs the exhaustive search.
pub const EXACT_LIMIT: usize = 6;

/// Default search budget used by [`ladder_report`].
pub const DEFAULT_BUDGET: usize = 20_000;

#[derive(Debug, Error)]
pub enum GhError {
    #[error("net must contain at least one point")]
    Empty,
    #[error("distance matrix is not square")]
    NotSquare,
    #[error("label count does not match the matrix size")]
    LabelMismatch,
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("distance ({0}, {1}) is not a finite nonnegative number")]
    BadDistance(usize, usize),
    #[error("matrix is not exactly symmetric at ({0}, {1})")]
    Asymmetric(usize, usize),
    #[error("diagonal entry {0} is not zero")]
    NonzeroDiagonal(usize),
    #[error("triangle inequality fails through point {1}: d({0}, {2}) too large")]
    TriangleDefect(usize, usize, usize),
    #[error("net text: {0}")]
    Parse(String),
    #[error("complex has no base point or vertex named `{0}`")]
    MissingBase(String),
    #[error("net size {0} exceeds the {1} available sample candidates")]
    NetTooLarge(usize, usize),
    #[error("ladder needs one base point name per complex")]
    LadderShape,
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
}

/// Finite metric net: labeled points with a symmetric distance matrix.
///
/// Construction checks that the matrix is square, exactly symmetric, zero on
/// the diagonal, nonnegative, and satisfies the triangle inequality within
/// [`TRIANGLE_SLACK`].
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteNet {
    labels: Vec<String>,
    dist: Vec<Vec<f64>>,
}

impl FiniteNet {
    pub fn new(labels: Vec<String>, dist: Vec<Vec<f64>>) -> Result<Self, GhError> {
        let n = dist.len();
        if n == 0 {
            return Err(GhError::Empty);
        }
        if dist.iter().any(|row| row.len() != n) {
            return Err(GhError::NotSquare);
        }
        if labels.len() != n {
            return Err(GhError::LabelMismatch);
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(GhError::DuplicateLabel(l.clone()));
            }
        }
        for i in 0..n {
            if dist[i][i] != 0.0 {
                return Err(GhError::NonzeroDiagonal(i));
            }
            for j in 0..n {
                let d = dist[i][j];
                if !d.is_finite() || d < 0.0 {
                    return Err(GhError::BadDistance(i, j));
                }
                if dist[j][i] != d {
                    return Err(GhError::Asymmetric(i, j));
                }
            }
        }
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    if dist[i][j] > dist[i][k] + dist[k][j] + TRIANGLE_SLACK {
                        return Err(GhError::TriangleDefect(i, k, j));
                    }
                }
            }
        }
        Ok(FiniteNet { labels, dist })
    }

    /// Net with generated labels `x0`, `x1`, ... for the given matrix.
    pub fn from_matrix(dist: Vec<Vec<f64>>) -> Result<Self, GhError> {
        let labels = (0..dist.len()).map(|i| format!("x{i}")).collect();
        FiniteNet::new(labels, dist)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for row in &self.dist {
            for &x in row {
                d = d.max(x);
            }
        }
        d
    }

    /// Largest distance from the point to any other point.
    pub fn eccentricity(&self, i: usize) -> f64 {
        self.dist[i].iter().fold(0.0f64, |m, &x| m.max(x))
    }

    /// Line format: a header, one `point` line per label, one `dist` line per
    /// unordered pair.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("catk net v1\n");
        for l in &self.labels {
            let _ = writeln!(out, "point {l}");
        }
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                let _ = writeln!(
                    out,
                    "dist {} {} {}",
                    self.labels[i],
                    self.labels[j],
                    fmt_f64(self.dist[i][j])
                );
            }
        }
        out
    }

    /// Parse the format produced by [`FiniteNet::to_text`].
    pub fn from_text(text: &str) -> Result<Self, GhError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == "catk net v1" => {}
            _ => return Err(GhError::Parse("missing `catk net v1` header".into())),
        }
        let mut labels: Vec<String> = Vec::new();
        let mut pairs: Vec<(usize, String, String, f64)> = Vec::new();
        for (ln, raw) in lines {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut toks = line.split_whitespace();
            match toks.next() {
                Some("point") => {
                    let name = toks
                        .next()
                        .ok_or_else(|| GhError::Parse(format!("line {}: point needs a label", ln + 1)))?;
                    labels.push(name.to_string());
                }
                Some("dist") => {
                    let a = toks.next();
                    let b = toks.next();
                    let v = toks.next();
                    let (Some(a), Some(b), Some(v)) = (a, b, v) else {
                        return Err(GhError::Parse(format!(
                            "line {}: dist needs two labels and a value",
                            ln + 1
                        )));
                    };
                    let value: f64 = v.parse().map_err(|_| {
                        GhError::Parse(format!("line {}: bad number `{v}`", ln + 1))
                    })?;
                    pairs.push((ln + 1, a.to_string(), b.to_string(), value));
                }
                Some(other) => {
                    return Err(GhError::Parse(format!(
                        "line {}: unknown record `{other}`",
                        ln + 1
                    )));
                }
                None => {}
            }
        }
        let n = labels.len();
        let index = |name: &str, ln: usize| {
            labels
                .iter()
                .position(|l| l == name)
                .ok_or_else(|| GhError::Parse(format!("line {ln}: unknown point `{name}`")))
        };
        let mut dist = vec![vec![0.0; n]; n];
        let mut filled = vec![vec![false; n]; n];
        for (ln, a, b, v) in pairs {
            let i = index(&a, ln)?;
            let j = index(&b, ln)?;
            if i == j {
                return Err(GhError::Parse(format!("line {ln}: dist from `{a}` to itself")));
            }
            if filled[i][j] {
                return Err(GhError::Parse(format!("line {ln}: pair `{a}` `{b}` repeated")));
            }
            filled[i][j] = true;
            filled[j][i] = true;
            dist[i][j] = v;
            dist[j][i] = v;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if !filled[i][j] {
                    return Err(GhError::Parse(format!(
                        "missing dist for pair `{}` `{}`",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        FiniteNet::new(labels, dist)
    }
}

// ---------------------------------------------------------------------------
// Correspondence search
// ---------------------------------------------------------------------------

/// A correspondence stored as a pair of maps: `fa[i]` is the partner of point
/// `i` of the first net, `gb[j]` the partner of point `j` of the second. The
/// relation is the union of both graphs, so projections are always full.
#[derive(Debug, Clone)]
struct MapPair {
    fa: Vec<usize>,
    gb: Vec<usize>,
}

fn pair_list(mp: &MapPair) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = mp.fa.iter().enumerate().map(|(i, &j)| (i, j)).collect();
    pairs.extend(mp.gb.iter().enumerate().map(|(j, &i)| (i, j)));
    pairs
}

/// Largest distance defect `|d_a(p, p') - d_b(q, q')|` over pairs of related
/// points.
fn distortion(a: &FiniteNet, b: &FiniteNet, mp: &MapPair) -> f64 {
    let pairs = pair_list(mp);
    let mut worst = 0.0f64;
    for (s, &(i, j)) in pairs.iter().enumerate() {
        for &(i2, j2) in &pairs[s + 1..] {
            let gap = (a.dist[i][i2] - b.dist[j][j2]).abs();
            worst = worst.max(gap);
        }
    }
    worst
}

/// Coarse per-point signature used for seeding: eccentricity plus a fixed
/// number of quantiles of the sorted distance row.
fn profile(net: &FiniteNet, i: usize) -> Vec<f64> {
    let mut row = net.dist[i].clone();
    row.sort_by(|x, y| x.partial_cmp(y).expect("distances are finite"));
    let samples = 8usize;
    let n = row.len();
    let mut sig = Vec::with_capacity(samples);
    for k in 0..samples {
        let t = if samples == 1 { 0 } else { k * (n - 1) / (samples - 1) };
        sig.push(row[t]);
    }
    sig
}

fn profile_gap(pa: &[f64], pb: &[f64]) -> f64 {
    pa.iter()
        .zip(pb)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Greedy injective-first matching of distance profiles, from both sides.
fn seed_profiles(a: &FiniteNet, b: &FiniteNet) -> MapPair {
    let pa: Vec<Vec<f64>> = (0..a.len()).map(|i| profile(a, i)).collect();
    let pb: Vec<Vec<f64>> = (0..b.len()).map(|j| profile(b, j)).collect();
    let mut costs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, ra) in pa.iter().enumerate() {
        for (j, rb) in pb.iter().enumerate() {
            costs.push((profile_gap(ra, rb), i, j));
        }
    }
    costs.sort_by(|x, y| x.partial_cmp(y).expect("finite costs"));
    let mut fa = vec![usize::MAX; a.len()];
    let mut gb = vec![usize::MAX; b.len()];
    for &(_, i, j) in &costs {
        if fa[i] == usize::MAX && gb[j] == usize::MAX {
            fa[i] = j;
            gb[j] = i;
        }
    }
    for (i, slot) in fa.iter_mut().enumerate() {
        if *slot == usize::MAX {
            let j = (0..b.len())
                .min_by(|&x, &y| {
                    profile_gap(&pa[i], &pb[x])
                        .partial_cmp(&profile_gap(&pa[i], &pb[y]))
                        .expect("finite costs")
                })
                .expect("nets are nonempty");
            *slot = j;
        }
    }
    for (j, slot) in gb.iter_mut().enumerate() {
        if *slot == usize::MAX {
            let i = (0..a.len())
                .min_by(|&x, &y| {
                    profile_gap(&pb[j], &pa[x])
                        .partial_cmp(&profile_gap(&pb[j], &pa[y]))
                        .expect("finite costs")
                })
                .expect("nets are nonempty");
            *slot = i;
        }
    }
    MapPair { fa, gb }
}

/// Greedy assignment in eccentricity order, each choice minimizing the
/// partial distortion against the pairs fixed so far.
fn seed_incremental(a: &FiniteNet, b: &FiniteNet) -> MapPair {
    let mut order_a: Vec<usize> = (0..a.len()).collect();
    order_a.sort_by(|&x, &y| {
        a.eccentricity(y)
            .partial_cmp(&a.eccentricity(x))
            .expect("finite distances")
    });
    let mut fixed: Vec<(usize, usize)> = Vec::new();
    let mut fa = vec![0usize; a.len()];
    for &i in &order_a {
        let mut best = (f64::INFINITY, 0usize);
        for j in 0..b.len() {
            let worst = fixed
                .iter()
                .fold(0.0f64, |m, &(i2, j2)| m.max((a.dist[i][i2] - b.dist[j][j2]).abs()));
            if worst < best.0 {
                best = (worst, j);
            }
        }
        fa[i] = best.1;
        fixed.push((i, best.1));
    }
    let mut order_b: Vec<usize> = (0..b.len()).collect();
    order_b.sort_by(|&x, &y| {
        b.eccentricity(y)
            .partial_cmp(&b.eccentricity(x))
            .expect("finite distances")
    });
    let mut gb = vec![0usize; b.len()];
    for &j in &order_b {
        let mut best = (f64::INFINITY, 0usize);
        for i in 0..a.len() {
            let worst = fixed
                .iter()
                .fold(0.0f64, |m, &(i2, j2)| m.max((a.dist[i][i2] - b.dist[j][j2]).abs()));
            if worst < best.0 {
                best = (worst, i);
            }
        }
        gb[j] = best.1;
        fixed.push((best.1, j));
    }
    MapPair { fa, gb }
}

/// First-improvement reassignment passes over both maps until a full pass
/// finds nothing better or the evaluation budget runs out.
fn descend(
    a: &FiniteNet,
    b: &FiniteNet,
    mp: &mut MapPair,
    cur: &mut f64,
    budget: usize,
    evals: &mut usize,
) {
    loop {
        let mut improved = false;
        for i in 0..mp.fa.len() {
            let old = mp.fa[i];
            for j in 0..b.len() {
                if j == old || *evals >= budget {
                    continue;
                }
                mp.fa[i] = j;
                let d = distortion(a, b, mp);
                *evals += 1;
                if d < *cur {
                    *cur = d;
                    improved = true;
                    break;
                }
                mp.fa[i] = old;
            }
        }
        for j in 0..mp.gb.len() {
            let old = mp.gb[j];
            for i in 0..a.len() {
                if i == old || *evals >= budget {
                    continue;
                }
                mp.gb[j] = i;
                let d = distortion(a, b, mp);
                *evals += 1;
                if d < *cur {
                    *cur = d;
                    improved = true;
                    break;
                }
                mp.gb[j] = old;
            }
        }
        if !improved || *evals >= budget {
            return;
        }
    }
}

fn heuristic_distortion(a: &FiniteNet, b: &FiniteNet, budget: usize) -> f64 {
    let budget = budget.max(2);
    let mut evals = 0usize;
    let mut best = f64::INFINITY;
    for mut mp in [seed_profiles(a, b), seed_incremental(a, b)] {
        let mut cur = distortion(a, b, &mp);
        evals += 1;
        descend(a, b, &mut mp, &mut cur, budget, &mut evals);
        best = best.min(cur);
        if evals >= budget {
            break;
        }
    }
    best
}

/// Depth-first search over all map pairs with incremental distortion
/// pruning. `best` enters holding an achievable distortion, so the result is
/// the exact minimum over correspondences even when `node_cap` stops the
/// search early (the value is then still achievable, just possibly not
/// minimal).
fn exact_distortion(a: &FiniteNet, b: &FiniteNet, start: f64, node_cap: usize) -> f64 {
    let m = a.len();
    let n = b.len();
    let mut best = start;
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(m + n);
    let mut nodes = 0usize;
    fn dfs(
        a: &FiniteNet,
        b: &FiniteNet,
        pairs: &mut Vec<(usize, usize)>,
        depth: usize,
        cur: f64,
        best: &mut f64,
        nodes: &mut usize,
        node_cap: usize,
    ) {
        let m = a.len();
        let n = b.len();
        if depth == m + n {
            if cur < *best {
                *best = cur;
            }
            return;
        }
        let choices = if depth < m { n } else { m };
        for c in 0..choices {
            if *nodes >= node_cap {
                return;
            }
            *nodes += 1;
            let (pi, pj) = if depth < m { (depth, c) } else { (c, depth - m) };
            let mut next = cur;
            for &(i2, j2) in pairs.iter() {
                next = next.max((a.dist[pi][i2] - b.dist[pj][j2]).abs());
                if next >= *best {
                    break;
                }
            }
            if next >= *best {
                continue;
            }
            pairs.push((pi, pj));
            dfs(a, b, pairs, depth + 1, next, best, nodes, node_cap);
            pairs.pop();
        }
    }
    dfs(a, b, &mut pairs, 0, 0.0, &mut best, &mut nodes, node_cap);
    best
}

/// Upper bound on the Gromov-Hausdorff distance: half the distortion of the
/// best correspondence found.
///
/// Nets of at most [`EXACT_LIMIT`] points each are searched exhaustively
/// (branch and bound over correspondences), so the value is exact; larger
/// nets use greedy seeding plus local reassignment within `budget`
/// evaluations. Either way the returned value is realized by an explicit
/// correspondence and therefore a valid bound.
pub fn gh_upper(a: &FiniteNet, b: &FiniteNet, budget: usize) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "nets must be nonempty");
    let heur = heuristic_distortion(a, b, budget.max(DEFAULT_BUDGET.min(2_000)));
    if a.len() <= EXACT_LIMIT && b.len() <= EXACT_LIMIT {
        exact_distortion(a, b, heur, 200_000_000) / 2.0
    } else {
        heur / 2.0
    }
}

/// Lower bound on the Gromov-Hausdorff distance: the larger of half the
/// diameter gap and half the Hausdorff gap between the two sets of realized
/// distance values.
pub fn gh_lower(a: &FiniteNet, b: &FiniteNet) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "nets must be nonempty");
    let diam_gap = (a.diameter() - b.diameter()).abs();
    let spec_a = spectrum(a);
    let spec_b = spectrum(b);
    let spec_gap = hausdorff_gap(&spec_a, &spec_b);
    (diam_gap / 2.0).max(spec_gap / 2.0)
}

/// All realized distance values in increasing order, including zero.
fn spectrum(net: &FiniteNet) -> Vec<f64> {
    let mut values = vec![0.0f64];
    for i in 0..net.len() {
        for j in (i + 1)..net.len() {
            values.push(net.dist[i][j]);
        }
    }
    values.sort_by(|x, y| x.partial_cmp(y).expect("distances are finite"));
    values
}

/// Hausdorff distance between two nonempty sorted value sets on the line.
fn hausdorff_gap(xs: &[f64], ys: &[f64]) -> f64 {
    let one_sided = |from: &[f64], to: &[f64]| {
        from.iter()
            .map(|&v| {
                let k = to.partition_point(|&w| w < v);
                let right = to.get(k).map_or(f64::INFINITY, |&w| w - v);
                let left = if k > 0 { v - to[k - 1] } else { f64::INFINITY };
                right.min(left)
            })
            .fold(0.0f64, f64::max)
    };
    one_sided(xs, ys).max(one_sided(ys, xs))
}

// ---------------------------------------------------------------------------
// Net sampling and ladder reports
// ---------------------------------------------------------------------------

/// One consecutive comparison in a ladder report.
#[derive(Debug, Clone)]
pub struct LadderStep {
    pub upper: f64,
    pub lower: f64,
}

/// Consecutive Gromov-Hausdorff bounds along a sequence of complexes.
#[derive(Debug, Clone)]
pub struct LadderReport {
    pub nets: Vec<FiniteNet>,
    pub steps: Vec<LadderStep>,
    /// True when the upper bounds strictly decrease along the table.
    pub decreasing: bool,
}

/// Vertices eligible for net sampling: the seam skeleton plus the base
/// points when the complex has seams, every vertex otherwise.
///
/// Seam vertices are the stable family across approximation levels (the
/// ladder generators keep refining the same seams), so restricting the
/// traversal there keeps consecutive nets structurally comparable.
fn sample_candidates(cx: &MetricComplex) -> Vec<VertexId> {
    let mut keep = vec![false; cx.vertex_count()];
    let mut any = false;
    for seam in cx.seams() {
        for &e in &seam.edges {
            for &v in &cx.edge(e).ends {
                keep[v.0] = true;
                any = true;
            }
        }
    }
    if !any {
        return (0..cx.vertex_count()).map(VertexId).collect();
    }
    for (_, v) in cx.base_points() {
        keep[v.0] = true;
    }
    (0..cx.vertex_count())
        .filter(|&i| keep[i])
        .map(VertexId)
        .collect()
}

/// Net sampled from a complex by farthest-point traversal.
///
/// The traversal starts at the named base point (or vertex) and repeatedly
/// adds the candidate vertex farthest from the chosen set, with selection
/// distances from a light solver pass. The returned matrix holds
/// full-accuracy solver distances, tightened by their metric closure so
/// small solver excesses cannot break the triangle inequality.
pub fn sample_net(
    cx: &MetricComplex,
    base: &str,
    size: usize,
    tol: f64,
) -> Result<FiniteNet, GhError> {
    let v0 = cx
        .base_point(base)
        .or_else(|| cx.vertex_by_name(base))
        .ok_or_else(|| GhError::MissingBase(base.to_string()))?;
    if size == 0 {
        return Err(GhError::Empty);
    }
    let mut cands = sample_candidates(cx);
    if !cands.contains(&v0) {
        cands.push(v0);
    }
    if size > cands.len() {
        return Err(GhError::NetTooLarge(size, cands.len()));
    }
    let light = PathOptions {
        steiner: 4,
        doublings: 0,
        ..PathOptions::default()
    };
    let sel_tol = tol.max(1e-5);
    let mut chosen = vec![v0];
    let mut nearest = vec![f64::INFINITY; cands.len()];
    while chosen.len() < size {
        let latest = vertex_surface_point(cx, *chosen.last().expect("nonempty"));
        for (c, &cv) in cands.iter().enumerate() {
            if chosen.contains(&cv) {
                nearest[c] = 0.0;
                continue;
            }
            let q = vertex_surface_point(cx, cv);
            let d = shortest_path_with(cx, &latest, &q, sel_tol, &light)?.length;
            if d < nearest[c] {
                nearest[c] = d;
            }
        }
        let next = (0..cands.len())
            .filter(|&c| !chosen.contains(&cands[c]))
            .max_by(|&x, &y| nearest[x].partial_cmp(&nearest[y]).expect("finite"))
            .expect("size is at most the candidate count");
        chosen.push(cands[next]);
    }
    let points: Vec<_> = chosen.iter().map(|&v| vertex_surface_point(cx, v)).collect();
    let mut dist = distance_matrix(cx, &points, tol)?;
    metric_closure(&mut dist);
    let labels = chosen
        .iter()
        .map(|&v| cx.vertex_name(v).to_string())
        .collect();
    Ok(FiniteNet::new(labels, dist)?)
}

/// Replace each entry by the shortest relay path through other points, kept
/// exactly symmetric.
fn metric_closure(dist: &mut [Vec<f64>]) {
    let n = dist.len();
    for k in 0..n {
        for i in 0..n {
            for j in (i + 1)..n {
                let via = dist[i][k] + dist[k][j];
                if via < dist[i][j] {
                    dist[i][j] = via;
                    dist[j][i] = via;
                }
            }
        }
    }
}

/// Consecutive [`gh_upper`] values (with matching lower bounds) for nets
/// sampled from each complex in the sequence.
///
/// `bases` names one base point per complex; nets have `size` points and the
/// solver runs at tolerance `tol`. The `decreasing` flag records whether the
/// upper bounds strictly decrease, the trend expected of a converging
/// approximation ladder.
pub fn ladder_report(
    complexes: &[MetricComplex],
    bases: &[&str],
    size: usize,
    tol: f64,
) -> Result<LadderReport, GhError> {
    if complexes.is_empty() {
        return Err(GhError::Empty);
    }
    if bases.len() != complexes.len() {
        return Err(GhError::LadderShape);
    }
    let mut nets = Vec::with_capacity(complexes.len());
    for (cx, base) in complexes.iter().zip(bases) {
        nets.push(sample_net(cx, base, size, tol)?);
    }
    let mut steps = Vec::new();
    for w in nets.windows(2) {
        steps.push(LadderStep {
            upper: gh_upper(&w[0], &w[1], DEFAULT_BUDGET),
            lower: gh_lower(&w[0], &w[1]),
        });
    }
    let decreasing = steps.windows(2).all(|s| s[1].upper < s[0].upper);
    Ok(LadderReport {
        nets,
        steps,
        decreasing,
    })
}
