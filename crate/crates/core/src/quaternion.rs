//! Hamilton quaternions and points of hyperbolic upper half-space.
//!
//! Upper half-space `U^3` is embedded in the quaternions as
//! `p = x + y i + r j` with `r > 0` and zero `k` part. The Mobius action of
//! complex 2x2 matrices (see [`crate::moebius`]) is computed directly in this
//! arithmetic, which keeps the `k` component at zero up to rounding.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// A quaternion `w + x i + y j + z k` over `f64`, with `i j = k`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    pub const fn real(w: f64) -> Self {
        Quaternion::new(w, 0.0, 0.0, 0.0)
    }

    /// Embeds a complex number as `re + im i`.
    pub fn from_complex(c: Complex64) -> Self {
        Quaternion::new(c.re, c.im, 0.0, 0.0)
    }

    /// The complex part `w + x i` (drops `y`, `z`).
    pub fn complex_part(&self) -> Complex64 {
        Complex64::new(self.w, self.x)
    }

    pub fn conj(&self) -> Self {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm_sq(&self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Multiplicative inverse `conj / norm_sq`.
    pub fn inv(&self) -> Result<Self> {
        let n2 = self.norm_sq();
        if n2 < f64::MIN_POSITIVE / f64::EPSILON {
            return Err(Error::ZeroInverse { norm: n2.sqrt() });
        }
        let c = self.conj();
        Ok(Quaternion::new(c.w / n2, c.x / n2, c.y / n2, c.z / n2))
    }

    /// Integer power; negative exponents invert the positive power.
    pub fn pow_int(&self, k: i32) -> Result<Self> {
        if k < 0 {
            return self.pow_int(-k)?.inv();
        }
        let mut acc = Quaternion::ONE;
        let mut base = *self;
        let mut e = k as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        Ok(acc)
    }

    pub fn scale(&self, s: f64) -> Self {
        Quaternion::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    pub fn is_finite(&self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl std::ops::Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl std::ops::Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl std::ops::Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl std::ops::Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Quaternion) -> Quaternion {
        Quaternion::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }
}

impl std::fmt::Display for Quaternion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} + {}i + {}j + {}k", self.w, self.x, self.y, self.z)
    }
}

/// A point of upper half-space: `x + y i + r j`, `r > 0` in the interior,
/// `r = 0` on the boundary plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HPoint {
    pub x: f64,
    pub y: f64,
    pub r: f64,
}

impl HPoint {
    pub const fn new(x: f64, y: f64, r: f64) -> Self {
        HPoint { x, y, r }
    }

    pub fn from_complex(z: Complex64, r: f64) -> Self {
        HPoint::new(z.re, z.im, r)
    }

    pub fn horizontal(&self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    /// The quaternion `x + y i + r j`.
    pub fn to_quaternion(&self) -> Quaternion {
        Quaternion::new(self.x, self.y, self.r, 0.0)
    }

    /// Reads a point back from a quaternion, requiring the `k` component to
    /// vanish at the scale of the point.
    pub fn from_quaternion(q: Quaternion, tol: crate::Tolerance) -> Result<Self> {
        if !tol.is_zero(q.z, q.norm()) {
            return Err(Error::NotInUpperHalfSpace { k: q.z });
        }
        Ok(HPoint::new(q.w, q.x, q.y))
    }

    pub fn is_interior(&self) -> bool {
        self.r > 0.0
    }

    /// Euclidean coordinates `(x, y, r)`.
    pub fn coords(&self) -> [f64; 3] {
        [self.x, self.y, self.r]
    }

    pub fn from_coords(c: [f64; 3]) -> Self {
        HPoint::new(c[0], c[1], c[2])
    }
}

impl std::fmt::Display for HPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Tolerance;
    use proptest::prelude::*;

    fn close(a: Quaternion, b: Quaternion, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn basis_products() {
        assert_eq!(Quaternion::I * Quaternion::J, Quaternion::K);
        assert_eq!(Quaternion::J * Quaternion::K, Quaternion::I);
        assert_eq!(Quaternion::K * Quaternion::I, Quaternion::J);
        assert_eq!(Quaternion::J * Quaternion::I, -Quaternion::K);
        assert_eq!(Quaternion::I * Quaternion::I, -Quaternion::ONE);
    }

    #[test]
    fn hand_expanded_product() {
        // (1 + i)(1 + j) = 1 + i + j + k
        let a = Quaternion::ONE + Quaternion::I;
        let b = Quaternion::ONE + Quaternion::J;
        assert_eq!(a * b, Quaternion::new(1.0, 1.0, 1.0, 1.0));
        // and in the other order the k flips: (1 + j)(1 + i) = 1 + i + j - k
        assert_eq!(b * a, Quaternion::new(1.0, 1.0, 1.0, -1.0));
    }

    #[test]
    fn negative_power_is_inverse_of_power() {
        // (1 + j)^2 = 2j, so (1 + j)^(-2) = (2j)^(-1) = -j/2
        let q = Quaternion::ONE + Quaternion::J;
        let sq = q.pow_int(2).unwrap();
        assert_eq!(sq, Quaternion::new(0.0, 0.0, 2.0, 0.0));
        let inv_sq = q.pow_int(-2).unwrap();
        assert!(close(inv_sq, Quaternion::new(0.0, 0.0, -0.5, 0.0), 1e-15));
    }

    #[test]
    fn zero_inverse_is_an_error() {
        assert!(matches!(
            Quaternion::ZERO.inv(),
            Err(crate::Error::ZeroInverse { .. })
        ));
    }

    #[test]
    fn complex_embedding_commutes_with_products() {
        let a = Complex64::new(0.3, -1.2);
        let b = Complex64::new(-2.0, 0.7);
        let qa = Quaternion::from_complex(a);
        let qb = Quaternion::from_complex(b);
        assert!(close(qa * qb, Quaternion::from_complex(a * b), 1e-15));
    }

    #[test]
    fn complex_commutation_rule_with_j() {
        // z j = j conj(z) for complex z
        let z = Complex64::new(1.5, -0.4);
        let qz = Quaternion::from_complex(z);
        let lhs = qz * Quaternion::J;
        let rhs = Quaternion::J * Quaternion::from_complex(z.conj());
        assert!(close(lhs, rhs, 1e-15));
    }

    #[test]
    fn hpoint_round_trip_and_k_rejection() {
        let p = HPoint::new(0.3, -0.7, 2.0);
        let q = p.to_quaternion();
        assert_eq!(q, Quaternion::new(0.3, -0.7, 2.0, 0.0));
        let back = HPoint::from_quaternion(q, Tolerance::default()).unwrap();
        assert_eq!(back, p);

        let bad = Quaternion::new(0.0, 0.0, 1.0, 0.5);
        assert!(HPoint::from_quaternion(bad, Tolerance::default()).is_err());
    }

    fn arb_quat() -> impl Strategy<Value = Quaternion> {
        let c = -3.0..3.0f64;
        (c.clone(), c.clone(), c.clone(), c).prop_map(|(w, x, y, z)| Quaternion::new(w, x, y, z))
    }

    proptest! {
        #[test]
        fn norm_is_multiplicative(a in arb_quat(), b in arb_quat()) {
            let lhs = (a * b).norm();
            let rhs = a.norm() * b.norm();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
        }

        #[test]
        fn product_is_associative(a in arb_quat(), b in arb_quat(), c in arb_quat()) {
            let lhs = (a * b) * c;
            let rhs = a * (b * c);
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
        }

        #[test]
        fn inverse_cancels(a in arb_quat()) {
            prop_assume!(a.norm() > 1e-3);
            let inv = a.inv().unwrap();
            prop_assert!(((a * inv) - Quaternion::ONE).norm() <= 1e-12);
            prop_assert!(((inv * a) - Quaternion::ONE).norm() <= 1e-12);
        }

        #[test]
        fn pow_int_matches_repeated_product(a in arb_quat(), k in 0i32..6) {
            let mut expect = Quaternion::ONE;
            for _ in 0..k {
                expect = expect * a;
            }
            let got = a.pow_int(k).unwrap();
            prop_assert!((got - expect).norm() <= 1e-9 * (1.0 + expect.norm()));
        }
    }
}
