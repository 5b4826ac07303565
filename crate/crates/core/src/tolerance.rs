//! Absolute/relative tolerance pairs used by comparisons throughout the crate.

/// A pair of absolute and relative tolerances.
///
/// Two values `a`, `b` are considered equal when
/// `|a - b| <= abs + rel * max(|a|, |b|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-12, rel: 1e-9 }
    }
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel }
    }

    /// Scalar comparison under this tolerance.
    pub fn eq(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.abs + self.rel * a.abs().max(b.abs())
    }

    /// Is `x` zero at scale `scale`?
    pub fn is_zero(&self, x: f64, scale: f64) -> bool {
        x.abs() <= self.abs + self.rel * scale.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_pair() {
        let tol = Tolerance::default();
        assert_eq!(tol.abs, 1e-12);
        assert_eq!(tol.rel, 1e-9);
    }

    #[test]
    fn relative_part_scales() {
        let tol = Tolerance::default();
        assert!(tol.eq(1e6, 1e6 + 1e-4));
        assert!(!tol.eq(1.0, 1.0 + 1e-6));
        assert!(tol.eq(0.0, 1e-13));
    }
}
