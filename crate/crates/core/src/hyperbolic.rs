//! Points, geodesics and isometries of the Poincaré disk.
//!
//! An [`Isometry`] is stored as the pair `(a, b)` of the matrix
//! `[[a, b], [conj(b), conj(a)]]` together with an orientation flag. When the
//! flag is set the map first conjugates its argument, so reflections and
//! glide reflections compose in closed form. Long products are kept finite by
//! factoring their magnitude into `log_scale`.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Above this modulus of `a` a product is rescaled instead of being
/// determinant-normalised; `|a| - |b|` still carries ~10 significant digits here.
const RESCALE_THRESHOLD: f64 = 1e3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point {0} lies outside the open unit disk")]
    OutsideDisk(Complex64),
    #[error("geodesic through {p} and {q} is ill-posed (points coincide to working precision)")]
    IllPosedGeodesic { p: Complex64, q: Complex64 },
}

/// A point of the open unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskPoint(Complex64);

impl DiskPoint {
    pub const ORIGIN: DiskPoint = DiskPoint(Complex64 { re: 0.0, im: 0.0 });

    pub fn new(re: f64, im: f64) -> Result<Self, GeometryError> {
        Self::from_complex(Complex64::new(re, im))
    }

    pub fn from_complex(z: Complex64) -> Result<Self, GeometryError> {
        if z.norm_sqr() < 1.0 && z.re.is_finite() && z.im.is_finite() {
            Ok(DiskPoint(z))
        } else {
            Err(GeometryError::OutsideDisk(z))
        }
    }

    /// Point at hyperbolic distance `dist` from the origin in direction `angle`.
    pub fn polar(dist: f64, angle: f64) -> Self {
        DiskPoint(Complex64::from_polar((dist / 2.0).tanh(), angle))
    }

    pub fn z(self) -> Complex64 {
        self.0
    }

    pub fn re(self) -> f64 {
        self.0.re
    }

    pub fn im(self) -> f64 {
        self.0.im
    }
}

/// A point `e^{iθ}` of the boundary circle, with `θ` in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    theta: f64,
}

impl BoundaryPoint {
    pub fn new(theta: f64) -> Self {
        BoundaryPoint {
            theta: normalize_angle(theta),
        }
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self::new(z.arg())
    }

    pub fn theta(self) -> f64 {
        self.theta
    }

    pub fn z(self) -> Complex64 {
        Complex64::from_polar(1.0, self.theta)
    }
}

/// Reduce an angle into `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Hyperbolic distance for the metric `4|dz|²/(1-|z|²)²`.
pub fn hyp_distance(z: DiskPoint, w: DiskPoint) -> Result<f64, GeometryError> {
    let (z, w) = (z.0, w.0);
    for p in [z, w] {
        if p.norm_sqr() >= 1.0 {
            return Err(GeometryError::OutsideDisk(p));
        }
    }
    let one_minus = |p: Complex64| {
        let r = p.norm();
        (1.0 - r) * (1.0 + r)
    };
    let s = (z - w).norm() / (one_minus(z) * one_minus(w)).sqrt();
    Ok(2.0 * s.asinh())
}

/// An isometry of the disk, holomorphic or anti-holomorphic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    pub a: Complex64,
    pub b: Complex64,
    pub antiholomorphic: bool,
    /// The represented matrix is `e^{log_scale}·[[a, b], [b̄, ā]]`.
    pub log_scale: f64,
}

impl Default for Isometry {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Isometry {
    pub const IDENTITY: Isometry = Isometry {
        a: Complex64 { re: 1.0, im: 0.0 },
        b: Complex64 { re: 0.0, im: 0.0 },
        antiholomorphic: false,
        log_scale: 0.0,
    };

    /// Builds a map from raw coefficients and normalises it.
    pub fn new(a: Complex64, b: Complex64, antiholomorphic: bool) -> Self {
        let mut g = Isometry {
            a,
            b,
            antiholomorphic,
            log_scale: 0.0,
        };
        g.renormalize();
        g
    }

    pub fn rotation(angle: f64) -> Self {
        Isometry {
            a: Complex64::from_polar(1.0, angle / 2.0),
            ..Self::IDENTITY
        }
    }

    /// Reflection in the diameter at `angle`: `z ↦ e^{2i·angle} z̄`.
    pub fn diameter_reflection(angle: f64) -> Self {
        Isometry {
            a: Complex64::from_polar(1.0, angle),
            b: Complex64::new(0.0, 0.0),
            antiholomorphic: true,
            log_scale: 0.0,
        }
    }

    /// Hyperbolic translation by `length` along the diameter at `angle`,
    /// pushing the origin towards `e^{i·angle}`.
    pub fn translation(length: f64, angle: f64) -> Self {
        Isometry {
            a: Complex64::new((length / 2.0).cosh(), 0.0),
            b: Complex64::from_polar((length / 2.0).sinh(), angle),
            antiholomorphic: false,
            log_scale: 0.0,
        }
    }

    /// The holomorphic map sending `p` to the origin, fixing the diameter through `p`.
    pub fn moving_to_origin(p: DiskPoint) -> Self {
        // z ↦ (z - p)/(1 - p̄ z), scaled to unit determinant
        let s = 1.0 / (1.0 - p.0.norm_sqr()).sqrt();
        Isometry {
            a: Complex64::new(s, 0.0),
            b: -p.0 * s,
            antiholomorphic: false,
            log_scale: 0.0,
        }
    }

    /// `|a|² - |b|²` of the stored (scaled) coefficients.
    pub fn stored_determinant(&self) -> f64 {
        let (na, nb) = (self.a.norm(), self.b.norm());
        (na - nb) * (na + nb)
    }

    /// Restores unit determinant, or factors the magnitude into `log_scale`
    /// when the coefficients are too large for the determinant to be computed
    /// without cancellation.
    pub fn renormalize(&mut self) {
        let na = self.a.norm();
        let true_log_a = na.ln() + self.log_scale;
        if true_log_a < RESCALE_THRESHOLD.ln() {
            if self.log_scale != 0.0 {
                let f = self.log_scale.exp();
                self.a *= f;
                self.b *= f;
                self.log_scale = 0.0;
            }
            let det = self.stored_determinant();
            let f = 1.0 / det.sqrt();
            self.a *= f;
            self.b *= f;
        } else {
            self.a /= na;
            self.b /= na;
            self.log_scale += na.ln();
        }
    }

    pub fn renormalized(mut self) -> Self {
        self.renormalize();
        self
    }

    #[inline]
    fn prepare(&self, z: Complex64) -> Complex64 {
        if self.antiholomorphic {
            z.conj()
        } else {
            z
        }
    }

    /// Image of a disk point.
    pub fn apply(&self, z: DiskPoint) -> DiskPoint {
        let w = self.apply_complex(z.0);
        // the image of an interior point under a disk isometry is interior;
        // rounding can only push |w| to 1 for points already at 1 - ε
        DiskPoint(if w.norm_sqr() < 1.0 {
            w
        } else {
            w / (w.norm() * (1.0 + f64::EPSILON))
        })
    }

    /// Raw Möbius action on an arbitrary complex number.
    pub fn apply_complex(&self, z: Complex64) -> Complex64 {
        let z = self.prepare(z);
        let num = self.a * z + self.b;
        let den = self.b.conj() * z + self.a.conj();
        assert!(
            den.norm() > 1e-300,
            "numerical breakdown applying isometry to {z}"
        );
        num / den
    }

    pub fn apply_boundary(&self, xi: BoundaryPoint) -> BoundaryPoint {
        BoundaryPoint::from_complex(self.apply_complex(xi.z()))
    }

    /// `g ∘ h`.
    pub fn compose(&self, h: &Isometry) -> Isometry {
        self.compose_raw(h).renormalized()
    }

    /// `g ∘ h` without renormalisation; used in hot loops that renormalise
    /// on their own schedule.
    #[inline]
    pub fn compose_raw(&self, h: &Isometry) -> Isometry {
        let (ha, hb) = if self.antiholomorphic {
            (h.a.conj(), h.b.conj())
        } else {
            (h.a, h.b)
        };
        Isometry {
            a: self.a * ha + self.b * hb.conj(),
            b: self.a * hb + self.b * ha.conj(),
            antiholomorphic: self.antiholomorphic ^ h.antiholomorphic,
            log_scale: self.log_scale + h.log_scale,
        }
    }

    pub fn inverse(&self) -> Isometry {
        // holomorphic: (ā, -b); anti-holomorphic: conjugate of that matrix
        let (a, b) = if self.antiholomorphic {
            (self.a, -self.b.conj())
        } else {
            (self.a.conj(), -self.b)
        };
        Isometry {
            a,
            b,
            antiholomorphic: self.antiholomorphic,
            log_scale: -self.log_scale,
        }
    }

    /// `log |g'(ξ)|` on the boundary circle.
    pub fn log_boundary_derivative(&self, xi: BoundaryPoint) -> f64 {
        let z = self.prepare(xi.z());
        let den = self.b.conj() * z + self.a.conj();
        -2.0 * self.log_scale - den.norm_sqr().ln()
            + if self.log_scale == 0.0 {
                self.stored_determinant().ln()
            } else {
                0.0
            }
    }

    /// `|g'(ξ)|` on the boundary circle.
    pub fn boundary_derivative(&self, xi: BoundaryPoint) -> f64 {
        self.log_boundary_derivative(xi).exp()
    }

    /// Hyperbolic distance `d(g·0, 0)`.
    ///
    /// Uses `2·log(|a| + |b|)`, the log of the operator norm of the
    /// unit-determinant matrix, so no cancellation occurs for large
    /// displacements and the scaled representation never has to be undone.
    pub fn displacement(&self) -> f64 {
        let (na, nb) = (self.a.norm(), self.b.norm());
        if self.log_scale == 0.0 && na < RESCALE_THRESHOLD {
            // exact-determinant branch, accurate for tiny displacements too
            let s = 1.0 / self.stored_determinant().sqrt();
            let (na, nb) = (na * s, nb * s);
            2.0 * (nb + nb * nb / (na + 1.0)).ln_1p()
        } else {
            2.0 * ((na + nb).ln() + self.log_scale)
        }
    }

    /// Image of the origin as an unscaled complex number.
    pub fn origin_image(&self) -> Complex64 {
        self.b / self.a.conj()
    }

    /// Largest entry-wise distance of the normalised matrix from `±I`, or
    /// infinity for an orientation-reversing map.
    pub fn distance_from_identity(&self) -> f64 {
        if self.antiholomorphic {
            return f64::INFINITY;
        }
        let g = self.renormalized();
        if g.log_scale != 0.0 {
            return f64::INFINITY;
        }
        let one = Complex64::new(1.0, 0.0);
        let plus = (g.a - one).norm().max(g.b.norm());
        let minus = (g.a + one).norm().max(g.b.norm());
        plus.min(minus)
    }

    /// Entry-wise distance from `h`, up to the projective sign.
    pub fn distance_to(&self, h: &Isometry) -> f64 {
        if self.antiholomorphic != h.antiholomorphic {
            return f64::INFINITY;
        }
        let (g, h) = (self.renormalized(), h.renormalized());
        let scale = (g.log_scale - h.log_scale).exp();
        let plus = (g.a * scale - h.a).norm().max((g.b * scale - h.b).norm());
        let minus = (g.a * scale + h.a).norm().max((g.b * scale + h.b).norm());
        plus.min(minus)
    }

    /// Conjugate `t ∘ self ∘ t⁻¹`.
    pub fn conjugate_by(&self, t: &Isometry) -> Isometry {
        t.compose(self).compose(&t.inverse())
    }
}

impl fmt::Display for Isometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "a = {:.10}{:+.10}i, b = {:.10}{:+.10}i{}",
            self.a.re,
            self.a.im,
            self.b.re,
            self.b.im,
            if self.antiholomorphic { " (reversing)" } else { "" }
        )?;
        if self.log_scale != 0.0 {
            write!(f, ", scale e^{:.6}", self.log_scale)?;
        }
        Ok(())
    }
}

/// A complete geodesic of the disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GeodesicArc {
    /// Diameter through the origin; `angle` in `[0, π)`.
    Diameter { angle: f64 },
    /// Circle orthogonal to the unit circle.
    Circular { center: Complex64, radius: f64 },
}

impl GeodesicArc {
    /// Whether `p` lies on the geodesic, within `tol` (Euclidean).
    pub fn contains(&self, p: Complex64, tol: f64) -> bool {
        self.euclidean_offset(p) <= tol
    }

    /// Euclidean distance from `p` to the supporting line or circle.
    pub fn euclidean_offset(&self, p: Complex64) -> f64 {
        match *self {
            GeodesicArc::Diameter { angle } => {
                let dir = Complex64::from_polar(1.0, angle);
                (p * dir.conj()).im.abs()
            }
            GeodesicArc::Circular { center, radius } => ((p - center).norm() - radius).abs(),
        }
    }

    /// Unit tangent at `p` (assumed on the geodesic), oriented towards `towards`.
    pub fn tangent_at(&self, p: Complex64, towards: Complex64) -> Complex64 {
        let t = match *self {
            GeodesicArc::Diameter { angle } => Complex64::from_polar(1.0, angle),
            GeodesicArc::Circular { center, .. } => {
                let r = p - center;
                Complex64::new(-r.im, r.re) / r.norm()
            }
        };
        if (t.conj() * (towards - p)).re < 0.0 {
            -t
        } else {
            t
        }
    }

    /// Ideal endpoints on the unit circle.
    pub fn endpoints(&self) -> (BoundaryPoint, BoundaryPoint) {
        match *self {
            GeodesicArc::Diameter { angle } => {
                (BoundaryPoint::new(angle), BoundaryPoint::new(angle + PI))
            }
            GeodesicArc::Circular { center, radius } => {
                // the endpoints subtend ±atan(r) as seen from the origin
                let spread = radius.atan();
                let base = center.arg();
                (
                    BoundaryPoint::new(base - spread),
                    BoundaryPoint::new(base + spread),
                )
            }
        }
    }
}

/// The geodesic through two distinct interior points.
pub fn geodesic_through(p: DiskPoint, q: DiskPoint) -> Result<GeodesicArc, GeometryError> {
    match geodesic_center(p, q)? {
        None => {
            let dir = if p.0.norm() >= q.0.norm() { p.0 } else { q.0 };
            let angle = dir.arg().rem_euclid(PI);
            Ok(GeodesicArc::Diameter {
                angle: if angle >= PI { 0.0 } else { angle },
            })
        }
        Some(center) => Ok(GeodesicArc::Circular {
            center,
            radius: (center.norm_sqr() - 1.0).sqrt(),
        }),
    }
}

/// Euclidean centre of the geodesic circle through `p` and `q`, or `None`
/// when the geodesic is a diameter.
fn geodesic_center(p: DiskPoint, q: DiskPoint) -> Result<Option<Complex64>, GeometryError> {
    let (p, q) = (p.0, q.0);
    let scale = p.norm().max(q.norm()).max(1e-300);
    if (p - q).norm() <= 1e-12 * scale.max(1.0) {
        return Err(GeometryError::IllPosedGeodesic { p, q });
    }
    let cross = (p.conj() * q).im;
    if p.norm() < 1e-14 || q.norm() < 1e-14 || cross.abs() < 1e-12 * p.norm() * q.norm() {
        return Ok(None);
    }
    // 2 Re(p̄ c) = |p|² + 1 and the same for q, solved by Cramer's rule
    let (rp, rq) = ((p.norm_sqr() + 1.0) / 2.0, (q.norm_sqr() + 1.0) / 2.0);
    let x = (rp * q.im - rq * p.im) / cross;
    let y = (p.re * rq - q.re * rp) / cross;
    Ok(Some(Complex64::new(x, y)))
}

/// Reflection in the geodesic through `p` and `q`.
pub fn reflection_in_geodesic(p: DiskPoint, q: DiskPoint) -> Result<Isometry, GeometryError> {
    match geodesic_through(p, q)? {
        GeodesicArc::Diameter { angle } => Ok(Isometry::diameter_reflection(angle)),
        GeodesicArc::Circular { center, radius } => Ok(reflection_in_arc(center, radius)),
    }
}

/// Reflection in the geodesic circle with the given centre and radius:
/// `z ↦ c + r²/conj(z - c)`.
pub fn reflection_in_arc(center: Complex64, radius: f64) -> Isometry {
    let i = Complex64::new(0.0, 1.0);
    Isometry::new(i * center / radius, -i / radius, true)
}

/// Reflection in an arbitrary geodesic.
pub fn reflection_in(arc: &GeodesicArc) -> Isometry {
    match *arc {
        GeodesicArc::Diameter { angle } => Isometry::diameter_reflection(angle),
        GeodesicArc::Circular { center, radius } => reflection_in_arc(center, radius),
    }
}

/// Riemannian logarithm at the origin: the tangent vector (hyperbolic length,
/// Euclidean direction) pointing at `z`.
pub fn log_at_origin(z: DiskPoint) -> Complex64 {
    let r = z.0.norm();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    z.0 * (2.0 * r.atanh() / r)
}

/// Inverse of [`log_at_origin`].
pub fn exp_at_origin(v: Complex64) -> DiskPoint {
    let len = v.norm();
    if len == 0.0 {
        return DiskPoint::ORIGIN;
    }
    DiskPoint(v * ((len / 2.0).tanh() / len))
}

/// Hyperbolic centre of mass (Karcher mean) of a point set, iterated to `tol`.
pub fn karcher_mean(points: &[DiskPoint], tol: f64) -> DiskPoint {
    let mut center = DiskPoint::ORIGIN;
    for _ in 0..500 {
        let to_origin = Isometry::moving_to_origin(center);
        let mean = points
            .iter()
            .map(|&p| log_at_origin(to_origin.apply(p)))
            .sum::<Complex64>()
            / points.len() as f64;
        center = to_origin.inverse().apply(exp_at_origin(mean));
        if mean.norm() < tol {
            break;
        }
    }
    center
}
