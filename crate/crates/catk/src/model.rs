//! Exact geometry of the model plane of constant curvature κ.
//!
//! Points live in an embedding chart: the sphere of radius 1/√κ in 3-space
//! for κ > 0, the z = 0 plane for κ = 0, and the upper sheet of the
//! hyperboloid x² + y² − z² = −1/(−κ) for κ < 0 (Minkowski form). Charts
//! avoid branch cuts: geodesic interpolation is a slerp in all three signs,
//! and angles come from half-angle forms that stay accurate near 0 and π.
//!
//! Every value carries its κ. Mixing curvatures is an error, not a silent
//! coercion.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Residual tolerance for the chart equation (sphere/hyperboloid/plane).
pub const EMBED_TOL: f64 = 1e-12;
/// Two points closer than this to antipodal (κ > 0) have no unique geodesic.
pub const ANTIPODAL_TOL: f64 = 1e-9;
/// Relative slack forgiving floating-point noise in triangle-inequality and
/// perimeter checks before they become hard errors.
const DEGENERACY_SLACK: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("curvature must be finite, got {0}")]
    BadCurvature(f64),
    #[error("point does not satisfy the κ={kappa} chart equation (residual {residual:e})")]
    OffChart { kappa: f64, residual: f64 },
    #[error("operands have different curvatures ({0} vs {1})")]
    MixedCurvature(f64, f64),
    #[error("triangle inequality violated by sides ({0}, {1}, {2})")]
    TriangleInequality(f64, f64, f64),
    #[error("perimeter {perimeter} reaches the bound 2D_κ = {bound} for κ = {kappa}")]
    PerimeterBound {
        kappa: f64,
        perimeter: f64,
        bound: f64,
    },
    #[error("side of length {0} exceeds the model diameter {1}")]
    SideTooLong(f64, f64),
    #[error("points are antipodal: no unique geodesic")]
    Antipodal,
    #[error("coincident points leave the construction undefined")]
    Coincident,
    #[error("interpolation parameter {0} outside [0, 1]")]
    BadParameter(f64),
    #[error("side lengths must be finite and nonnegative, got ({0}, {1}, {2})")]
    BadSides(f64, f64, f64),
}

/// Curvature of a model plane together with its diameter bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curvature(f64);

impl Curvature {
    pub fn new(kappa: f64) -> Result<Self, ModelError> {
        if !kappa.is_finite() {
            return Err(ModelError::BadCurvature(kappa));
        }
        Ok(Curvature(kappa))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// D_κ: diameter of the model plane. π/√κ for κ > 0, +∞ otherwise.
    pub fn diameter(self) -> f64 {
        if self.0 > 0.0 {
            std::f64::consts::PI / self.0.sqrt()
        } else {
            f64::INFINITY
        }
    }
}

/// D_κ as a free function on a raw κ.
pub fn model_diameter(kappa: f64) -> f64 {
    if kappa > 0.0 {
        std::f64::consts::PI / kappa.sqrt()
    } else {
        f64::INFINITY
    }
}

/// A point of the model plane of curvature κ, stored in its embedding chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelPoint {
    kappa: f64,
    coords: Vector3<f64>,
}

fn minkowski(u: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
    u.x * v.x + u.y * v.y - u.z * v.z
}

/// Chart residual, normalized to be dimensionless in all three signs.
fn chart_residual(kappa: f64, c: &Vector3<f64>) -> f64 {
    if kappa > 0.0 {
        (kappa * c.dot(c) - 1.0).abs()
    } else if kappa < 0.0 {
        if c.z <= 0.0 {
            return f64::INFINITY; // lower sheet is not part of the chart
        }
        ((-kappa) * -minkowski(c, c) - 1.0).abs()
    } else {
        c.z.abs()
    }
}

/// Rescale onto the chart surface. Assumes the input is already close; used to
/// keep slerp outputs within [`EMBED_TOL`].
fn reproject(kappa: f64, c: Vector3<f64>) -> Vector3<f64> {
    if kappa > 0.0 {
        let r = 1.0 / kappa.sqrt();
        c * (r / c.norm())
    } else if kappa < 0.0 {
        let r2 = -1.0 / kappa;
        let q = -minkowski(&c, &c);
        if q > 0.0 {
            c * (r2 / q).sqrt()
        } else {
            c
        }
    } else {
        Vector3::new(c.x, c.y, 0.0)
    }
}

impl ModelPoint {
    /// Validates the chart equation to within [`EMBED_TOL`].
    pub fn new(kappa: f64, coords: [f64; 3]) -> Result<Self, ModelError> {
        if !kappa.is_finite() {
            return Err(ModelError::BadCurvature(kappa));
        }
        let c = Vector3::from(coords);
        let residual = chart_residual(kappa, &c);
        if !(residual <= EMBED_TOL) {
            return Err(ModelError::OffChart { kappa, residual });
        }
        Ok(ModelPoint { kappa, coords: c })
    }

    /// Planar point (κ = 0 chart).
    pub fn planar(x: f64, y: f64) -> Self {
        ModelPoint {
            kappa: 0.0,
            coords: Vector3::new(x, y, 0.0),
        }
    }

    /// Base point of the chart: north pole (κ > 0), origin (κ = 0), or the
    /// hyperboloid apex (κ < 0).
    pub fn base(kappa: f64) -> Result<Self, ModelError> {
        if !kappa.is_finite() {
            return Err(ModelError::BadCurvature(kappa));
        }
        let c = if kappa == 0.0 {
            Vector3::zeros()
        } else {
            Vector3::new(0.0, 0.0, 1.0 / kappa.abs().sqrt())
        };
        Ok(ModelPoint { kappa, coords: c })
    }

    /// Point reached from the chart base by going distance `r` in chart
    /// direction `phi` (angle against the x-axis).
    pub fn polar(kappa: f64, r: f64, phi: f64) -> Result<Self, ModelError> {
        if !kappa.is_finite() {
            return Err(ModelError::BadCurvature(kappa));
        }
        if kappa > 0.0 && r > model_diameter(kappa) {
            return Err(ModelError::SideTooLong(r, model_diameter(kappa)));
        }
        let (cp, sp) = (phi.cos(), phi.sin());
        let c = if kappa == 0.0 {
            Vector3::new(r * cp, r * sp, 0.0)
        } else if kappa > 0.0 {
            let rad = 1.0 / kappa.sqrt();
            let a = r / rad;
            Vector3::new(rad * a.sin() * cp, rad * a.sin() * sp, rad * a.cos())
        } else {
            let rad = 1.0 / (-kappa).sqrt();
            let a = r / rad;
            Vector3::new(rad * a.sinh() * cp, rad * a.sinh() * sp, rad * a.cosh())
        };
        Ok(ModelPoint { kappa, coords: c })
    }

    /// Central projection of a nonzero ray onto a curved chart (κ ≠ 0):
    /// scales `dir` onto the sphere, or onto the upper hyperboloid sheet
    /// (flipping sign if needed). Used to intersect geodesic planes.
    pub fn from_ray(kappa: f64, dir: [f64; 3]) -> Result<Self, ModelError> {
        if !kappa.is_finite() || kappa == 0.0 {
            return Err(ModelError::BadCurvature(kappa));
        }
        let d = Vector3::from(dir);
        if kappa > 0.0 {
            let n = d.norm();
            if n == 0.0 {
                return Err(ModelError::BadParameter(0.0));
            }
            Ok(ModelPoint {
                kappa,
                coords: d * (1.0 / (kappa.sqrt() * n)),
            })
        } else {
            let m = minkowski(&d, &d);
            if !(m < 0.0) {
                return Err(ModelError::BadParameter(m));
            }
            let s = 1.0 / ((-kappa).sqrt() * (-m).sqrt());
            let c = if d.z > 0.0 { d * s } else { d * (-s) };
            Ok(ModelPoint { kappa, coords: c })
        }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn coords(&self) -> [f64; 3] {
        self.coords.into()
    }

    fn same_plane(&self, other: &ModelPoint) -> Result<(), ModelError> {
        if self.kappa == other.kappa {
            Ok(())
        } else {
            Err(ModelError::MixedCurvature(self.kappa, other.kappa))
        }
    }
}

/// Distance between two points of the same model plane.
///
/// Uniformly stable: the spherical branch uses atan2 of cross and dot, the
/// hyperbolic branch the Minkowski chord, so nearby points lose no digits.
pub fn distance(p: &ModelPoint, q: &ModelPoint) -> Result<f64, ModelError> {
    p.same_plane(q)?;
    let kappa = p.kappa;
    if kappa == 0.0 {
        return Ok((p.coords - q.coords).norm());
    }
    if kappa > 0.0 {
        let rad = 1.0 / kappa.sqrt();
        let theta = p.coords.cross(&q.coords).norm().atan2(p.coords.dot(&q.coords));
        Ok(rad * theta)
    } else {
        let rad = 1.0 / (-kappa).sqrt();
        let d = p.coords - q.coords;
        let chord2 = minkowski(&d, &d).max(0.0);
        Ok(rad * 2.0 * (chord2.sqrt() / (2.0 * rad)).asinh())
    }
}

/// Point at parameter `t ∈ [0, 1]` on the minimal geodesic from `p` to `q`.
///
/// Errors on an antipodal pair when κ > 0 (the geodesic is not unique).
pub fn geodesic_point(p: &ModelPoint, q: &ModelPoint, t: f64) -> Result<ModelPoint, ModelError> {
    p.same_plane(q)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(ModelError::BadParameter(t));
    }
    let kappa = p.kappa;
    if kappa == 0.0 {
        return Ok(ModelPoint {
            kappa,
            coords: p.coords + (q.coords - p.coords) * t,
        });
    }
    let d = distance(p, q)?;
    let scale = kappa.abs().sqrt();
    let theta = d * scale;
    if kappa > 0.0 && std::f64::consts::PI - theta < ANTIPODAL_TOL {
        return Err(ModelError::Antipodal);
    }
    // Below this scale the linear blend is within ~θ²/8 of the geodesic and
    // the reprojection restores the chart exactly enough.
    if theta < 1e-8 {
        let lerp = p.coords + (q.coords - p.coords) * t;
        return Ok(ModelPoint {
            kappa,
            coords: reproject(kappa, lerp),
        });
    }
    let coords = if kappa > 0.0 {
        let s = theta.sin();
        (p.coords * ((1.0 - t) * theta).sin() + q.coords * (t * theta).sin()) / s
    } else {
        let s = theta.sinh();
        (p.coords * ((1.0 - t) * theta).sinh() + q.coords * (t * theta).sinh()) / s
    };
    Ok(ModelPoint {
        kappa,
        coords: reproject(kappa, coords),
    })
}

fn check_sides(kappa: f64, a: f64, b: f64, c: f64) -> Result<(), ModelError> {
    if !(a.is_finite() && b.is_finite() && c.is_finite()) || a < 0.0 || b < 0.0 || c < 0.0 {
        return Err(ModelError::BadSides(a, b, c));
    }
    let perimeter = a + b + c;
    let bound = 2.0 * model_diameter(kappa);
    if perimeter >= bound {
        return Err(ModelError::PerimeterBound {
            kappa,
            perimeter,
            bound,
        });
    }
    let slack = DEGENERACY_SLACK * perimeter;
    let max = a.max(b).max(c);
    if 2.0 * max > perimeter + slack {
        return Err(ModelError::TriangleInequality(a, b, c));
    }
    Ok(())
}

/// Angle opposite the side of length `a` in the κ-triangle with sides
/// (a, b, c); equivalently the comparison angle at the vertex between the
/// sides of lengths `b` and `c`.
///
/// Exactly π when `a == b + c` and exactly 0 when `a == |b − c|` (as written,
/// not up to rounding). Positive arm lengths are required.
pub fn comparison_angle(kappa: f64, a: f64, b: f64, c: f64) -> Result<f64, ModelError> {
    check_sides(kappa, a, b, c)?;
    if b == 0.0 || c == 0.0 {
        return Err(ModelError::Coincident);
    }
    if a == b + c {
        return Ok(std::f64::consts::PI);
    }
    if a == (b - c).abs() {
        return Ok(0.0);
    }
    let scale = kappa.abs().sqrt();
    // Differences computed straight from the inputs; the clamp forgives the
    // rounding the slack in check_sides let through.
    let m = |x: f64| (x / 2.0).max(0.0);
    if kappa == 0.0 {
        let num = m(a - b + c) * m(a + b - c);
        let den = m(a + b + c) * m(-a + b + c);
        Ok(2.0 * num.sqrt().atan2(den.sqrt()))
    } else if kappa > 0.0 {
        let (ha, hb, hc) = (a * scale, b * scale, c * scale);
        let num = m(ha - hb + hc).sin() * m(ha + hb - hc).sin();
        let den = m(ha + hb + hc).sin() * m(-ha + hb + hc).sin();
        Ok(2.0 * num.max(0.0).sqrt().atan2(den.max(0.0).sqrt()))
    } else {
        let (ha, hb, hc) = (a * scale, b * scale, c * scale);
        let num = m(ha - hb + hc).sinh() * m(ha + hb - hc).sinh();
        let den = m(ha + hb + hc).sinh() * m(-ha + hb + hc).sinh();
        Ok(2.0 * num.max(0.0).sqrt().atan2(den.max(0.0).sqrt()))
    }
}

/// Side opposite the angle `alpha` enclosed by sides of lengths `b` and `c`
/// (the dual κ-law of cosines).
pub fn side_from_angle(kappa: f64, b: f64, c: f64, alpha: f64) -> Result<f64, ModelError> {
    if !(b.is_finite() && c.is_finite()) || b < 0.0 || c < 0.0 {
        return Err(ModelError::BadSides(b, c, f64::NAN));
    }
    if !(0.0..=std::f64::consts::PI).contains(&alpha) {
        return Err(ModelError::BadParameter(alpha));
    }
    let dm = model_diameter(kappa);
    if b > dm || c > dm {
        return Err(ModelError::SideTooLong(b.max(c), dm));
    }
    let (sh, ch) = ((alpha / 2.0).sin(), (alpha / 2.0).cos());
    if kappa == 0.0 {
        return Ok(f64::hypot(b - c, 2.0 * (b * c).sqrt() * sh));
    }
    let scale = kappa.abs().sqrt();
    let (hb, hc) = (b * scale, c * scale);
    if kappa > 0.0 {
        let num = ((hb - hc) / 2.0).sin().powi(2) + hb.sin() * hc.sin() * sh * sh;
        let den = ((hb + hc) / 2.0).cos().powi(2) + hb.sin() * hc.sin() * ch * ch;
        Ok(2.0 * num.max(0.0).sqrt().atan2(den.max(0.0).sqrt()) / scale)
    } else {
        let num = ((hb - hc) / 2.0).sinh().powi(2) + hb.sinh() * hc.sinh() * sh * sh;
        Ok(2.0 * num.max(0.0).sqrt().asinh() / scale)
    }
}

/// A triangle in the model plane of curvature κ, recorded by side lengths and
/// the angles the κ-law of cosines assigns to them. `angles[i]` sits opposite
/// `sides[i]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelTriangle {
    pub kappa: f64,
    pub sides: [f64; 3],
    pub angles: [f64; 3],
}

/// Comparison triangle with the given side lengths.
///
/// Requires the triangle inequality and perimeter < 2D_κ. A side of length
/// zero is rejected (the angles at the coincident vertices are undefined);
/// collinear degenerate triangles (one side equal to the sum of the others)
/// are fine and get angles {π, 0, 0}.
pub fn comparison_triangle(kappa: f64, a: f64, b: f64, c: f64) -> Result<ModelTriangle, ModelError> {
    let angles = [
        comparison_angle(kappa, a, b, c)?,
        comparison_angle(kappa, b, c, a)?,
        comparison_angle(kappa, c, a, b)?,
    ];
    Ok(ModelTriangle {
        kappa,
        sides: [a, b, c],
        angles,
    })
}

impl ModelTriangle {
    /// Worst absolute defect of the dual law over the three sides: how far
    /// re-deriving each side from the other two and the enclosed angle lands
    /// from the recorded value.
    pub fn law_of_cosines_residual(&self) -> f64 {
        let [a, b, c] = self.sides;
        let [alpha, beta, gamma] = self.angles;
        let mut worst: f64 = 0.0;
        for (side, other1, other2, angle) in
            [(a, b, c, alpha), (b, c, a, beta), (c, a, b, gamma)]
        {
            if let Ok(back) = side_from_angle(self.kappa, other1, other2, angle) {
                worst = worst.max((back - side).abs());
            } else {
                worst = f64::INFINITY;
            }
        }
        worst
    }

    /// Embed the triangle in its model plane: vertex `x` at the chart base,
    /// `y` at distance `sides[2]` along the x-axis, `z` placed by the angle at
    /// `x`. Pairwise distances of the result reproduce the side lengths.
    pub fn place(&self) -> Result<[ModelPoint; 3], ModelError> {
        let [_, b, c] = self.sides;
        let alpha = self.angles[0];
        let x = ModelPoint::base(self.kappa)?;
        let y = ModelPoint::polar(self.kappa, c, 0.0)?;
        let z = ModelPoint::polar(self.kappa, b, alpha)?;
        Ok([x, y, z])
    }
}

/// Angle at `apex` between the geodesics toward `p` and toward `q`, measured
/// through unit tangents in the chart. Agrees with the comparison angle of the
/// triangle (p, apex, q) because the model plane is its own comparison space.
pub fn angle_at(apex: &ModelPoint, p: &ModelPoint, q: &ModelPoint) -> Result<f64, ModelError> {
    apex.same_plane(p)?;
    apex.same_plane(q)?;
    let kappa = apex.kappa;
    let tangent = |target: &ModelPoint| -> Result<Vector3<f64>, ModelError> {
        let v = if kappa == 0.0 {
            target.coords - apex.coords
        } else if kappa > 0.0 {
            let n = apex.coords.normalize();
            target.coords - n * target.coords.dot(&n)
        } else {
            let r2 = -1.0 / kappa;
            apex.coords * (minkowski(&target.coords, &apex.coords) / r2) + target.coords
        };
        let norm2 = if kappa < 0.0 {
            minkowski(&v, &v).max(0.0)
        } else {
            v.dot(&v)
        };
        if norm2.sqrt() <= 1e-15 {
            // target coincides with (or, on the sphere, is antipodal to) apex
            let d = distance(apex, target)?;
            if kappa > 0.0 && d > 0.5 * model_diameter(kappa) {
                return Err(ModelError::Antipodal);
            }
            return Err(ModelError::Coincident);
        }
        Ok(v / norm2.sqrt())
    };
    let u = tangent(p)?;
    let v = tangent(q)?;
    let (diff, sum) = (u - v, u + v);
    let (nd, ns) = if kappa < 0.0 {
        (
            minkowski(&diff, &diff).max(0.0).sqrt(),
            minkowski(&sum, &sum).max(0.0).sqrt(),
        )
    } else {
        (diff.norm(), sum.norm())
    };
    Ok(2.0 * (nd / 2.0).atan2(ns / 2.0))
}

/// Sign of the position of `x` relative to the oriented geodesic from `a`
/// through `b`: positive on the left, negative on the right, zero when the
/// three points are collinear.
pub fn side_sign(a: &ModelPoint, b: &ModelPoint, x: &ModelPoint) -> Result<f64, ModelError> {
    a.same_plane(b)?;
    a.same_plane(x)?;
    if a.kappa == 0.0 {
        let u = b.coords - a.coords;
        let v = x.coords - a.coords;
        Ok(u.x * v.y - u.y * v.x)
    } else {
        Ok(a.coords.cross(&b.coords).dot(&x.coords))
    }
}

/// A distance-preserving self-map of a κ-plane, kept in chart form so that
/// triangles can be developed across shared edges without leaving the chart.
#[derive(Clone, Debug)]
pub struct Isometry {
    kappa: f64,
    kind: IsoKind,
}

#[derive(Clone, Debug)]
enum IsoKind {
    /// p ↦ A·p + t on the z = 0 chart.
    Planar { a: [f64; 4], t: [f64; 2] },
    /// Linear map of the embedding preserving the chart quadric.
    Linear(Matrix3<f64>),
}

fn bilinear(kappa: f64) -> Matrix3<f64> {
    if kappa < 0.0 {
        Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0))
    } else {
        Matrix3::identity()
    }
}

/// Frame adapted to an ordered point pair: third column through `a`, first
/// column tangent toward `b`. Satisfies Fᵀ B F = B for the chart's bilinear
/// form, so `F_dst · B · F_srcᵀ · B` is the isometry taking one pair's frame
/// to the other's.
fn frame(kappa: f64, a: &ModelPoint, b: &ModelPoint) -> Result<Matrix3<f64>, ModelError> {
    if kappa > 0.0 {
        let e3 = a.coords.normalize();
        let mut e1 = b.coords - e3 * b.coords.dot(&e3);
        let n = e1.norm();
        if n <= b.coords.norm() * 1e-14 {
            return Err(if b.coords.dot(&e3) > 0.0 {
                ModelError::Coincident
            } else {
                ModelError::Antipodal
            });
        }
        e1 /= n;
        let e2 = e3.cross(&e1);
        Ok(Matrix3::from_columns(&[e1, e2, e3]))
    } else {
        let t = a.coords * (-kappa).sqrt();
        let mut s1 = b.coords + t * minkowski(&b.coords, &t);
        let q = minkowski(&s1, &s1);
        if !(q > 0.0) {
            return Err(ModelError::Coincident);
        }
        s1 /= q.sqrt();
        let c = t.cross(&s1);
        let mut s2 = Vector3::new(c.x, c.y, -c.z);
        let q2 = minkowski(&s2, &s2);
        if !(q2 > 0.0) {
            return Err(ModelError::Coincident);
        }
        s2 /= q2.sqrt();
        Ok(Matrix3::from_columns(&[s1, s2, t]))
    }
}

impl Isometry {
    /// The orientation-preserving isometry taking the ray `src.0 → src.1`
    /// onto the ray `dst.0 → dst.1`. Maps `src.0` to `dst.0` exactly; `src.1`
    /// lands on `dst.1` when the two pairs are equidistant.
    pub fn edge_align(
        src: (&ModelPoint, &ModelPoint),
        dst: (&ModelPoint, &ModelPoint),
    ) -> Result<Self, ModelError> {
        src.0.same_plane(src.1)?;
        src.0.same_plane(dst.0)?;
        src.0.same_plane(dst.1)?;
        let kappa = src.0.kappa;
        if kappa == 0.0 {
            let u = src.1.coords - src.0.coords;
            let v = dst.1.coords - dst.0.coords;
            let (nu, nv) = (u.norm(), v.norm());
            if nu == 0.0 || nv == 0.0 {
                return Err(ModelError::Coincident);
            }
            let c = (v.x * u.x + v.y * u.y) / (nu * nv);
            let s = (v.y * u.x - v.x * u.y) / (nu * nv);
            let p = src.0.coords;
            let t = [
                dst.0.coords.x - (c * p.x - s * p.y),
                dst.0.coords.y - (s * p.x + c * p.y),
            ];
            Ok(Isometry {
                kappa,
                kind: IsoKind::Planar { a: [c, -s, s, c], t },
            })
        } else {
            let fs = frame(kappa, src.0, src.1)?;
            let fd = frame(kappa, dst.0, dst.1)?;
            let b = bilinear(kappa);
            Ok(Isometry {
                kappa,
                kind: IsoKind::Linear(fd * b * fs.transpose() * b),
            })
        }
    }

    /// Reflection of the κ-plane across the geodesic through `a` and `b`.
    pub fn reflection(a: &ModelPoint, b: &ModelPoint) -> Result<Self, ModelError> {
        a.same_plane(b)?;
        let kappa = a.kappa;
        if kappa == 0.0 {
            let d = b.coords - a.coords;
            let n = Vector3::new(-d.y, d.x, 0.0);
            let nn = n.dot(&n);
            if nn == 0.0 {
                return Err(ModelError::Coincident);
            }
            let (nx, ny) = (n.x, n.y);
            let q = 2.0 * (a.coords.x * nx + a.coords.y * ny) / nn;
            Ok(Isometry {
                kappa,
                kind: IsoKind::Planar {
                    a: [
                        1.0 - 2.0 * nx * nx / nn,
                        -2.0 * nx * ny / nn,
                        -2.0 * nx * ny / nn,
                        1.0 - 2.0 * ny * ny / nn,
                    ],
                    t: [q * nx, q * ny],
                },
            })
        } else {
            let n = a.coords.cross(&b.coords);
            let scale = a.coords.norm() * b.coords.norm();
            if n.norm() <= scale * EMBED_TOL {
                return Err(if a.coords.dot(&b.coords) > 0.0 {
                    ModelError::Coincident
                } else {
                    ModelError::Antipodal
                });
            }
            let m = if kappa > 0.0 {
                Matrix3::identity() - (n * n.transpose()) * (2.0 / n.dot(&n))
            } else {
                let jn = Vector3::new(n.x, n.y, -n.z);
                let q = n.x * n.x + n.y * n.y - n.z * n.z;
                if !(q > 0.0) {
                    return Err(ModelError::BadParameter(q));
                }
                Matrix3::identity() - (jn * n.transpose()) * (2.0 / q)
            };
            Ok(Isometry {
                kappa,
                kind: IsoKind::Linear(m),
            })
        }
    }

    /// Image of `p`, snapped back onto the chart to absorb matrix rounding.
    pub fn apply(&self, p: &ModelPoint) -> Result<ModelPoint, ModelError> {
        if p.kappa != self.kappa {
            return Err(ModelError::MixedCurvature(self.kappa, p.kappa));
        }
        match &self.kind {
            IsoKind::Planar { a, t } => Ok(ModelPoint::planar(
                a[0] * p.coords.x + a[1] * p.coords.y + t[0],
                a[2] * p.coords.x + a[3] * p.coords.y + t[1],
            )),
            IsoKind::Linear(m) => Ok(ModelPoint {
                kappa: self.kappa,
                coords: reproject(self.kappa, m * p.coords),
            }),
        }
    }

    /// The composite `self ∘ inner` (apply `inner` first).
    pub fn compose(&self, inner: &Isometry) -> Result<Isometry, ModelError> {
        if self.kappa != inner.kappa {
            return Err(ModelError::MixedCurvature(self.kappa, inner.kappa));
        }
        let kind = match (&self.kind, &inner.kind) {
            (IsoKind::Planar { a, t }, IsoKind::Planar { a: b, t: u }) => IsoKind::Planar {
                a: [
                    a[0] * b[0] + a[1] * b[2],
                    a[0] * b[1] + a[1] * b[3],
                    a[2] * b[0] + a[3] * b[2],
                    a[2] * b[1] + a[3] * b[3],
                ],
                t: [
                    a[0] * u[0] + a[1] * u[1] + t[0],
                    a[2] * u[0] + a[3] * u[1] + t[1],
                ],
            },
            (IsoKind::Linear(m), IsoKind::Linear(n)) => IsoKind::Linear(m * n),
            _ => {
                return Err(ModelError::MixedCurvature(self.kappa, inner.kappa));
            }
        };
        Ok(Isometry {
            kappa: self.kappa,
            kind,
        })
    }
}

/// Isometry developing a triangle across a shared edge: takes the chart pair
/// (`src.0`, `src.1`) onto (`dst.0`, `dst.1`) while sending `src_witness` to
/// the opposite side of that edge from `dst_witness`.
pub fn develop_across(
    src: (&ModelPoint, &ModelPoint),
    dst: (&ModelPoint, &ModelPoint),
    src_witness: &ModelPoint,
    dst_witness: &ModelPoint,
) -> Result<Isometry, ModelError> {
    let t = Isometry::edge_align(src, dst)?;
    let w = t.apply(src_witness)?;
    let s_new = side_sign(dst.0, dst.1, &w)?;
    let s_old = side_sign(dst.0, dst.1, dst_witness)?;
    if s_new * s_old > 0.0 {
        Isometry::reflection(dst.0, dst.1)?.compose(&t)
    } else {
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn pt(kappa: f64, c: [f64; 3]) -> ModelPoint {
        ModelPoint::new(kappa, c).unwrap()
    }

    #[test]
    fn planar_distance_is_euclidean() {
        let d = distance(&ModelPoint::planar(0.0, 0.0), &ModelPoint::planar(3.0, 4.0)).unwrap();
        assert_abs_diff_eq!(d, 5.0, epsilon = 1e-15);
    }

    #[test]
    fn quarter_great_circle() {
        let north = pt(1.0, [0.0, 0.0, 1.0]);
        let equator = pt(1.0, [1.0, 0.0, 0.0]);
        assert_abs_diff_eq!(distance(&north, &equator).unwrap(), FRAC_PI_2, epsilon = 1e-15);
    }

    #[test]
    fn hyperbolic_distance_matches_arccosh_series() {
        let p = pt(-1.0, [0.0, 0.0, 1.0]);
        let q = pt(-1.0, [2.0_f64.sinh(), 0.0, 2.0_f64.cosh()]);
        // Minkowski product of the two is −cosh(2); independent oracle via the
        // log form of arccosh.
        let w = 2.0_f64.cosh();
        let oracle = (w + (w * w - 1.0).sqrt()).ln();
        let d = distance(&p, &q).unwrap();
        assert_abs_diff_eq!(d, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d, oracle, epsilon = 1e-12);
    }

    #[test]
    fn mixed_curvature_rejected() {
        let p = ModelPoint::planar(0.0, 0.0);
        let q = pt(1.0, [0.0, 0.0, 1.0]);
        assert!(matches!(
            distance(&p, &q),
            Err(ModelError::MixedCurvature(_, _))
        ));
    }

    #[test]
    fn geodesic_endpoints_and_midpoint() {
        let p = ModelPoint::planar(0.0, 0.0);
        let q = ModelPoint::planar(2.0, 0.0);
        assert_eq!(geodesic_point(&p, &q, 0.0).unwrap(), p);
        assert_eq!(geodesic_point(&p, &q, 1.0).unwrap(), q);
        let mid = geodesic_point(&p, &q, 0.5).unwrap();
        assert_abs_diff_eq!(mid.coords()[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mid.coords()[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn sphere_midpoint_of_orthogonal_vectors() {
        let p = pt(1.0, [1.0, 0.0, 0.0]);
        let q = pt(1.0, [0.0, 1.0, 0.0]);
        let mid = geodesic_point(&p, &q, 0.5).unwrap();
        let s = 0.5_f64.sqrt();
        assert_abs_diff_eq!(mid.coords()[0], s, epsilon = 1e-14);
        assert_abs_diff_eq!(mid.coords()[1], s, epsilon = 1e-14);
    }

    #[test]
    fn geodesic_point_splits_distance_proportionally() {
        for kappa in [-1.0, -0.3, 0.0, 0.7, 1.0] {
            let p = ModelPoint::polar(kappa, 0.9, 0.3).unwrap();
            let q = ModelPoint::polar(kappa, 1.4, 2.1).unwrap();
            let d = distance(&p, &q).unwrap();
            for t in [0.0, 0.25, 0.5, 0.8, 1.0] {
                let m = geodesic_point(&p, &q, t).unwrap();
                assert_abs_diff_eq!(distance(&p, &m).unwrap(), t * d, epsilon = 1e-10);
                assert_abs_diff_eq!(distance(&m, &q).unwrap(), (1.0 - t) * d, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn antipodal_pair_rejected() {
        let p = pt(1.0, [0.0, 0.0, 1.0]);
        let q = pt(1.0, [0.0, 0.0, -1.0]);
        assert!(matches!(
            geodesic_point(&p, &q, 0.5),
            Err(ModelError::Antipodal)
        ));
    }

    #[test]
    fn equilateral_angles() {
        let t = comparison_triangle(0.0, 1.0, 1.0, 1.0).unwrap();
        for ang in t.angles {
            assert_abs_diff_eq!(ang, PI / 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn octant_triangle_is_right_angled() {
        let t = comparison_triangle(1.0, FRAC_PI_2, FRAC_PI_2, FRAC_PI_2).unwrap();
        for ang in t.angles {
            assert_abs_diff_eq!(ang, FRAC_PI_2, epsilon = 1e-13);
        }
    }

    #[test]
    fn hyperbolic_equilateral_angle() {
        let t = comparison_triangle(-1.0, 1.0, 1.0, 1.0).unwrap();
        let ch = 1.0_f64.cosh();
        let expected = ((ch * (ch - 1.0)) / 1.0_f64.sinh().powi(2)).acos();
        for ang in t.angles {
            assert_abs_diff_eq!(ang, expected, epsilon = 1e-13);
        }
    }

    #[test]
    fn right_angle_from_pythagorean_sides() {
        let a = comparison_angle(0.0, 5.0, 3.0, 4.0).unwrap();
        assert_abs_diff_eq!(a, FRAC_PI_2, epsilon = 1e-14);
    }

    #[test]
    fn degenerate_sum_is_exactly_pi() {
        assert_eq!(comparison_angle(0.0, 0.7 + 0.4, 0.7, 0.4).unwrap(), PI);
        assert_eq!(comparison_angle(1.0, 0.75, 0.5, 0.25).unwrap(), PI);
        assert_eq!(comparison_angle(-1.0, 0.25, 0.75, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn spherical_angle_beats_euclidean() {
        let e = comparison_angle(0.0, 0.5, 0.5, 0.5).unwrap();
        let s = comparison_angle(1.0, 0.5, 0.5, 0.5).unwrap();
        assert!(s > e, "spherical {s} should exceed euclidean {e}");
    }

    #[test]
    fn triangle_inequality_and_perimeter_errors() {
        assert!(matches!(
            comparison_triangle(0.0, 3.0, 1.0, 1.0),
            Err(ModelError::TriangleInequality(_, _, _))
        ));
        assert!(matches!(
            comparison_triangle(1.0, 2.2, 2.2, 2.0 * PI + 0.1 - 4.4),
            Err(ModelError::PerimeterBound { .. })
        ));
    }

    #[test]
    fn zero_side_rejected() {
        assert!(matches!(
            comparison_triangle(0.0, 0.0, 1.0, 1.0),
            Err(ModelError::Coincident)
        ));
    }

    #[test]
    fn placement_reproduces_sides() {
        for kappa in [-1.0, 0.0, 1.0] {
            let t = comparison_triangle(kappa, 0.9, 1.1, 0.6).unwrap();
            let [x, y, z] = t.place().unwrap();
            assert_abs_diff_eq!(distance(&y, &z).unwrap(), t.sides[0], epsilon = 1e-10);
            assert_abs_diff_eq!(distance(&x, &z).unwrap(), t.sides[1], epsilon = 1e-10);
            assert_abs_diff_eq!(distance(&x, &y).unwrap(), t.sides[2], epsilon = 1e-10);
        }
    }

    #[test]
    fn angle_at_matches_comparison_angle() {
        for kappa in [-1.0, 0.0, 1.0] {
            let apex = ModelPoint::polar(kappa, 0.4, 1.0).unwrap();
            let p = ModelPoint::polar(kappa, 1.2, 2.2).unwrap();
            let q = ModelPoint::polar(kappa, 0.8, -0.7).unwrap();
            let direct = angle_at(&apex, &p, &q).unwrap();
            let via_sides = comparison_angle(
                kappa,
                distance(&p, &q).unwrap(),
                distance(&apex, &p).unwrap(),
                distance(&apex, &q).unwrap(),
            )
            .unwrap();
            assert_abs_diff_eq!(direct, via_sides, epsilon = 1e-10);
        }
    }

    #[test]
    fn angle_at_right_and_straight() {
        let o = ModelPoint::planar(0.0, 0.0);
        let px = ModelPoint::planar(1.0, 0.0);
        let py = ModelPoint::planar(0.0, 1.0);
        assert_abs_diff_eq!(angle_at(&o, &px, &py).unwrap(), FRAC_PI_2, epsilon = 1e-14);
        let m = ModelPoint::planar(-2.0, 0.0);
        assert_abs_diff_eq!(angle_at(&o, &px, &m).unwrap(), PI, epsilon = 1e-12);

        let a = pt(1.0, [1.0, 0.0, 0.0]);
        let b = pt(1.0, [0.0, 1.0, 0.0]);
        let n = pt(1.0, [0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(angle_at(&n, &a, &b).unwrap(), FRAC_PI_2, epsilon = 1e-13);
    }

    #[test]
    fn law_residual_small_on_constructed_triangles() {
        for kappa in [-1.0, 0.0, 1.0] {
            let t = comparison_triangle(kappa, 0.8, 1.0, 1.3).unwrap();
            assert!(t.law_of_cosines_residual() < 1e-10);
        }
    }

    #[test]
    fn edge_align_moves_pairs_and_preserves_distance() {
        for kappa in [-1.0, 0.0, 1.0] {
            let a = ModelPoint::polar(kappa, 0.7, 0.3).unwrap();
            let b = ModelPoint::polar(kappa, 1.1, 1.9).unwrap();
            let d = distance(&a, &b).unwrap();
            let a2 = ModelPoint::polar(kappa, 0.4, -2.0).unwrap();
            let b2 = {
                // any point at the same distance from a2
                let probe = ModelPoint::polar(kappa, 1.3, 0.5).unwrap();
                geodesic_point(&a2, &probe, d / distance(&a2, &probe).unwrap()).unwrap()
            };
            let iso = Isometry::edge_align((&a, &b), (&a2, &b2)).unwrap();
            let (ia, ib) = (iso.apply(&a).unwrap(), iso.apply(&b).unwrap());
            assert!(distance(&ia, &a2).unwrap() < 1e-10);
            assert!(distance(&ib, &b2).unwrap() < 1e-10);

            let x = ModelPoint::polar(kappa, 0.9, 2.6).unwrap();
            let y = ModelPoint::polar(kappa, 0.2, 1.1).unwrap();
            let moved = distance(&iso.apply(&x).unwrap(), &iso.apply(&y).unwrap()).unwrap();
            assert_abs_diff_eq!(moved, distance(&x, &y).unwrap(), epsilon = 1e-11);
        }
    }

    #[test]
    fn reflection_fixes_axis_and_flips_side() {
        for kappa in [-1.0, 0.0, 1.0] {
            let a = ModelPoint::polar(kappa, 0.5, 0.0).unwrap();
            let b = ModelPoint::polar(kappa, 1.2, 0.0).unwrap();
            let r = Isometry::reflection(&a, &b).unwrap();
            let mid = geodesic_point(&a, &b, 0.3).unwrap();
            assert!(distance(&r.apply(&mid).unwrap(), &mid).unwrap() < 1e-12);

            let x = ModelPoint::polar(kappa, 0.8, 0.9).unwrap();
            let rx = r.apply(&x).unwrap();
            let s0 = side_sign(&a, &b, &x).unwrap();
            let s1 = side_sign(&a, &b, &rx).unwrap();
            assert!(s0 * s1 < 0.0);
            assert_abs_diff_eq!(
                distance(&a, &rx).unwrap(),
                distance(&a, &x).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn develop_across_places_witness_opposite() {
        for kappa in [-1.0, 0.0, 1.0] {
            let a = ModelPoint::polar(kappa, 0.6, 0.1).unwrap();
            let b = ModelPoint::polar(kappa, 0.9, 1.4).unwrap();
            let w_dst = ModelPoint::polar(kappa, 1.0, 2.5).unwrap();
            // a source copy of the same edge living elsewhere in the chart
            let a1 = ModelPoint::polar(kappa, 0.3, -1.0).unwrap();
            let d = distance(&a, &b).unwrap();
            let probe = ModelPoint::polar(kappa, 1.7, -0.4).unwrap();
            let b1 = geodesic_point(&a1, &probe, d / distance(&a1, &probe).unwrap()).unwrap();
            let w_src = ModelPoint::polar(kappa, 0.8, -2.4).unwrap();
            let iso = develop_across((&a1, &b1), (&a, &b), &w_src, &w_dst).unwrap();
            let w = iso.apply(&w_src).unwrap();
            let s = side_sign(&a, &b, &w).unwrap();
            let s_dst = side_sign(&a, &b, &w_dst).unwrap();
            assert!(s * s_dst < 0.0);
            // gluing preserves distances to the shared edge's endpoints
            assert_abs_diff_eq!(
                distance(&w, &a).unwrap(),
                distance(&w_src, &a1).unwrap(),
                epsilon = 1e-11
            );
        }
    }
}
