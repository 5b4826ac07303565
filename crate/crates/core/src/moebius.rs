//! Mobius transformations of upper half-space with complex coefficients.
//!
//! A map is stored as a 2x2 complex matrix `((a, b), (c, d))` acting on
//! quaternion points as `T(p) = (a p + b) (c p + d)^{-1}`, with the inverse
//! multiplied on the right. The point at infinity is an explicit value.
//! Composition is the matrix product, so determinants multiply.

use crate::error::{Error, Result};
use crate::quaternion::{HPoint, Quaternion};
use crate::tolerance::Tolerance;
use num_complex::Complex64;

/// A point of the closure of `U^3` extended by infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedPoint {
    Finite(HPoint),
    Infinity,
}

impl ExtendedPoint {
    pub fn finite(x: f64, y: f64, r: f64) -> Self {
        ExtendedPoint::Finite(HPoint::new(x, y, r))
    }

    pub fn as_finite(&self) -> Option<HPoint> {
        match self {
            ExtendedPoint::Finite(p) => Some(*p),
            ExtendedPoint::Infinity => None,
        }
    }
}

/// Trace classification on the det-1 normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformClass {
    Identity,
    Parabolic,
    Elliptic,
    Hyperbolic,
    Loxodromic,
}

impl std::fmt::Display for TransformClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TransformClass::Identity => "identity",
            TransformClass::Parabolic => "parabolic",
            TransformClass::Elliptic => "elliptic",
            TransformClass::Hyperbolic => "hyperbolic",
            TransformClass::Loxodromic => "loxodromic",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoebiusMap {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl MoebiusMap {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        MoebiusMap { a, b, c, d }
    }

    /// Builds a map from real entry pairs `[[a_re, a_im], [b..], [c..], [d..]]`.
    pub fn from_entries(e: [[f64; 2]; 4]) -> Self {
        MoebiusMap::new(
            Complex64::new(e[0][0], e[0][1]),
            Complex64::new(e[1][0], e[1][1]),
            Complex64::new(e[2][0], e[2][1]),
            Complex64::new(e[3][0], e[3][1]),
        )
    }

    pub fn identity() -> Self {
        MoebiusMap::new(1.0.into(), 0.0.into(), 0.0.into(), 1.0.into())
    }

    /// `p -> p + beta`.
    pub fn translation(beta: Complex64) -> Self {
        MoebiusMap::new(1.0.into(), beta, 0.0.into(), 1.0.into())
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    fn frobenius(&self) -> f64 {
        (self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()).sqrt()
    }

    fn c_is_zero(&self) -> bool {
        self.c.norm() <= 1e-14 * (1.0 + self.frobenius())
    }

    /// The denominator value `c p + d` as a quaternion.
    pub fn jvalue(&self, p: HPoint) -> Quaternion {
        Quaternion::from_complex(self.c) * p.to_quaternion() + Quaternion::from_complex(self.d)
    }

    /// Applies the map; `c p + d = 0` maps to infinity, and infinity maps to
    /// `a/c` (or stays at infinity when `c = 0`). The `k` component of the
    /// quaternion result, which vanishes up to rounding, is dropped.
    ///
    /// The arithmetic runs on the det-1 normalization: multiplying the matrix
    /// by a complex scalar `s` conjugates the raw quaternion image by `s`,
    /// which rotates the `(j, k)`-plane, so only the normalized entries give
    /// the half-space-preserving extension. The projective action on the
    /// boundary is unchanged by this.
    pub fn apply(&self, p: ExtendedPoint) -> ExtendedPoint {
        match p {
            ExtendedPoint::Infinity => {
                if self.c_is_zero() {
                    ExtendedPoint::Infinity
                } else {
                    let z = self.a / self.c;
                    ExtendedPoint::finite(z.re, z.im, 0.0)
                }
            }
            ExtendedPoint::Finite(p) => {
                let n = match self.normalize() {
                    Ok(n) => n,
                    Err(_) => {
                        // rank-one matrix: constant map to a/c (or infinity)
                        return self.apply(ExtendedPoint::Infinity);
                    }
                };
                let q = p.to_quaternion();
                let den = n.jvalue(p);
                let scale = n.frobenius() * (1.0 + q.norm());
                if den.norm() <= 1e-14 * scale {
                    return ExtendedPoint::Infinity;
                }
                let num = Quaternion::from_complex(n.a) * q + Quaternion::from_complex(n.b);
                let img = num * den.inv().expect("denominator checked above");
                ExtendedPoint::finite(img.w, img.x, img.y)
            }
        }
    }

    /// Applies the map to an interior point, treating an image at infinity as
    /// an error. Convenience for flows and series.
    pub fn apply_interior(&self, p: HPoint) -> Result<HPoint> {
        match self.apply(ExtendedPoint::Finite(p)) {
            ExtendedPoint::Finite(q) => Ok(q),
            ExtendedPoint::Infinity => Err(Error::MapsToInfinity),
        }
    }

    /// Size of the `k` component of the un-projected image; a diagnostic for
    /// the closure of the action under quaternion arithmetic.
    pub fn apply_k_defect(&self, p: HPoint) -> f64 {
        let n = match self.normalize() {
            Ok(n) => n,
            Err(_) => return 0.0,
        };
        let q = p.to_quaternion();
        let den = n.jvalue(p);
        let num = Quaternion::from_complex(n.a) * q + Quaternion::from_complex(n.b);
        match den.inv() {
            Ok(i) => (num * i).z.abs(),
            Err(_) => 0.0,
        }
    }

    /// Matrix product; `compose(T1, T2)` applies `T2` first.
    pub fn compose(&self, other: &MoebiusMap) -> MoebiusMap {
        MoebiusMap::new(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )
    }

    /// The adjugate `((d, -b), (-c, a))`: the inverse up to the scalar `det`.
    pub fn inverse(&self) -> MoebiusMap {
        MoebiusMap::new(self.d, -self.b, -self.c, self.a)
    }

    /// The true matrix inverse (adjugate over determinant), so that
    /// `T.matrix_inverse().compose(&T)` is the identity matrix itself.
    pub fn matrix_inverse(&self) -> Result<MoebiusMap> {
        let det = self.det();
        if det.norm() <= 1e-300 {
            return Err(Error::SingularMatrix { det_norm: det.norm() });
        }
        let adj = self.inverse();
        Ok(MoebiusMap::new(adj.a / det, adj.b / det, adj.c / det, adj.d / det))
    }

    /// Rescales to determinant one (defined up to an overall sign).
    pub fn normalize(&self) -> Result<MoebiusMap> {
        let det = self.det();
        if det.norm() <= 1e-300 {
            return Err(Error::SingularMatrix { det_norm: det.norm() });
        }
        let s = det.sqrt();
        Ok(MoebiusMap::new(self.a / s, self.b / s, self.c / s, self.d / s))
    }

    /// Trace classification on the det-1 normalization.
    pub fn classify(&self, tol: Tolerance) -> Result<TransformClass> {
        let n = self.normalize()?;
        let id_dist = |sign: f64| {
            ((n.a - sign).norm_sqr()
                + n.b.norm_sqr()
                + n.c.norm_sqr()
                + (n.d - sign).norm_sqr())
            .sqrt()
        };
        if id_dist(1.0) <= tol.abs + tol.rel || id_dist(-1.0) <= tol.abs + tol.rel {
            return Ok(TransformClass::Identity);
        }
        let tr = n.trace();
        if tr.im.abs() > tol.abs + tol.rel * (1.0 + tr.re.abs()) {
            return Ok(TransformClass::Loxodromic);
        }
        let t = tr.re.abs();
        if (t - 2.0).abs() <= tol.abs + tol.rel * 2.0 {
            Ok(TransformClass::Parabolic)
        } else if t > 2.0 {
            Ok(TransformClass::Hyperbolic)
        } else {
            Ok(TransformClass::Elliptic)
        }
    }

    /// The covariance multiplier `(ad - bc) (c p + d)^{-2}`, the factor by
    /// which an automorphic field transforms under this map.
    pub fn derivative_factor(&self, p: HPoint) -> Result<Quaternion> {
        let den = self.jvalue(p);
        let scale = self.frobenius() * (1.0 + p.to_quaternion().norm());
        if den.norm() <= 1e-14 * scale {
            return Err(Error::MapsToInfinity);
        }
        Ok(Quaternion::from_complex(self.det()) * den.pow_int(-2)?)
    }

    /// The differential of the half-space action at `p` applied to a tangent
    /// vector: `dT_p(v) = (a - T(p) c) v (c p + d)^{-1}` on the det-1
    /// normalization, exact by the quaternion product rule. Tangent vectors
    /// at interior points map to tangent vectors (zero `k` part).
    pub fn differential(&self, p: HPoint, v: Quaternion) -> Result<Quaternion> {
        let n = self.normalize()?;
        let den = n.jvalue(p);
        let scale = n.frobenius() * (1.0 + p.to_quaternion().norm());
        if den.norm() <= 1e-14 * scale {
            return Err(Error::MapsToInfinity);
        }
        let img = n.apply_interior(p)?.to_quaternion();
        let lhs = Quaternion::from_complex(n.a) - img * Quaternion::from_complex(n.c);
        Ok(lhs * v * den.inv()?)
    }
}

impl std::fmt::Display for MoebiusMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(({}, {}), ({}, {}))", self.a, self.b, self.c, self.d)
    }
}
