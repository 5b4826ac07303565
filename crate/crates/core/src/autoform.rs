//! Theta series over a word ball and the automorphic vector field built from
//! them.
//!
//! For a word ball with entries `T_i = ((a_i, b_i), (c_i, d_i))`, weight
//! `m >= 2` and a rational map `H`, the plain series sums
//! `(c_i p + d_i)^{-2m} H(T_i(p))` and the modified series sums
//! `(c_i p + d_i)^{-(2m-2)} (a_i d_i - b_i c_i)^{-1} H(T_i(p))`, each term
//! computed left to right in that order. The field is the right quotient
//! `F(p) = theta1(p) * theta2(p)^{-1}` of a modified series by a plain one.
//! Under precomposition with a group element the modified terms pick up the
//! left multiplier `(c_j p + d_j)^{2m-2} (a_j d_j - b_j c_j)` and the plain
//! terms `(c_j p + d_j)^{2m}`, which is what makes `F` transform with the
//! single derivative factor; `term_covariance_check` verifies that per-term
//! algebra directly and `covariance_residual` measures how well the
//! truncated field inherits it.
//!
//! Sums run sequentially in the canonical ball order, so evaluation is
//! bit-reproducible.


use crate::error::{Error, Result};
use crate::group::{GroupPresentation, GroupWord, WordBall};
use crate::moebius::MoebiusMap;
use crate::quaternion::{HPoint, Quaternion};

/// A polynomial with quaternion coefficients multiplying powers from the
/// left: `c_0 + c_1 p + c_2 p^2 + ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuaternionPoly {
    coeffs: Vec<Quaternion>,
}

impl QuaternionPoly {
    pub fn new(coeffs: Vec<Quaternion>) -> QuaternionPoly {
        QuaternionPoly { coeffs }
    }

    pub fn constant(c: Quaternion) -> QuaternionPoly {
        QuaternionPoly { coeffs: vec![c] }
    }

    pub fn one() -> QuaternionPoly {
        QuaternionPoly::constant(Quaternion::ONE)
    }

    pub fn coeffs(&self) -> &[Quaternion] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm() == 0.0)
    }

    /// Horner evaluation, keeping every coefficient on the left.
    pub fn eval(&self, p: Quaternion) -> Quaternion {
        let mut acc = Quaternion::ZERO;
        for c in self.coeffs.iter().rev() {
            acc = acc * p + *c;
        }
        acc
    }
}

/// A quotient of two quaternion polynomials, evaluated as
/// `num(p) * den(p)^{-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMap {
    num: QuaternionPoly,
    den: QuaternionPoly,
}

impl RationalMap {
    pub fn new(num: QuaternionPoly, den: QuaternionPoly) -> Result<RationalMap> {
        if den.is_zero() {
            return Err(Error::Invalid("rational map denominator is identically zero".into()));
        }
        Ok(RationalMap { num, den })
    }

    pub fn polynomial(num: QuaternionPoly) -> RationalMap {
        RationalMap { num, den: QuaternionPoly::one() }
    }

    pub fn constant(c: Quaternion) -> RationalMap {
        RationalMap::polynomial(QuaternionPoly::constant(c))
    }

    /// `H(p) = p`.
    pub fn identity_map() -> RationalMap {
        RationalMap::polynomial(QuaternionPoly::new(vec![Quaternion::ZERO, Quaternion::ONE]))
    }

    pub fn numerator(&self) -> &QuaternionPoly {
        &self.num
    }

    pub fn denominator(&self) -> &QuaternionPoly {
        &self.den
    }

    pub fn eval(&self, p: Quaternion) -> Result<Quaternion> {
        let d = self.den.eval(p);
        Ok(self.num.eval(p) * d.inv()?)
    }
}

/// One theta series: a weight, an `H`, a ball to sum over, and whether the
/// series is the modified one (lower denominator power, determinant factor).
#[derive(Clone, Debug)]
pub struct ThetaConfig<'a> {
    m: u32,
    h: RationalMap,
    ball: &'a WordBall,
    modified: bool,
}

impl<'a> ThetaConfig<'a> {
    pub fn new(m: u32, h: RationalMap, ball: &'a WordBall, modified: bool) -> Result<Self> {
        if m < 2 {
            return Err(Error::WeightTooSmall { m });
        }
        Ok(ThetaConfig { m, h, ball, modified })
    }

    pub fn weight(&self) -> u32 {
        self.m
    }

    pub fn h(&self) -> &RationalMap {
        &self.h
    }

    pub fn ball(&self) -> &'a WordBall {
        self.ball
    }

    pub fn is_modified(&self) -> bool {
        self.modified
    }
}

/// The pair of series defining the field `F = theta1 * theta2^{-1}`:
/// `theta1` modified with `H_1`, `theta2` plain with `H_2`, sharing the same
/// weight and ball.
#[derive(Clone, Debug)]
pub struct AutomorphicField<'a> {
    theta1: ThetaConfig<'a>,
    theta2: ThetaConfig<'a>,
}

impl<'a> AutomorphicField<'a> {
    pub fn new(
        m: u32,
        h1: RationalMap,
        h2: RationalMap,
        ball: &'a WordBall,
    ) -> Result<AutomorphicField<'a>> {
        Ok(AutomorphicField {
            theta1: ThetaConfig::new(m, h1, ball, true)?,
            theta2: ThetaConfig::new(m, h2, ball, false)?,
        })
    }

    pub fn theta1(&self) -> &ThetaConfig<'a> {
        &self.theta1
    }

    pub fn theta2(&self) -> &ThetaConfig<'a> {
        &self.theta2
    }

    pub fn weight(&self) -> u32 {
        self.theta1.m
    }

    pub fn ball(&self) -> &'a WordBall {
        self.theta1.ball
    }
}

/// One series term for the matrix `t` at `p`, computed left to right as
/// written: denominator power, then the determinant factor (modified only),
/// then `H` at the image point. The word is only for error reporting.
fn theta_term(
    t: &MoebiusMap,
    word: &GroupWord,
    m: u32,
    modified: bool,
    h: &RationalMap,
    p: HPoint,
) -> Result<Quaternion> {
    let exponent = if modified { 2 * m as i32 - 2 } else { 2 * m as i32 };
    let den = t.jvalue(p);
    let pole = |denom_norm: f64| Error::Pole { word: word.to_string(), denom_norm };
    let mut term = den.pow_int(-exponent).map_err(|_| pole(den.norm()))?;
    if modified {
        let det = Quaternion::from_complex(t.det());
        term = term * det.inv().map_err(|_| pole(det.norm()))?;
    }
    let img = t.apply_interior(p).map_err(|_| pole(0.0))?;
    let h_val = h.eval(img.to_quaternion()).map_err(|e| match e {
        Error::ZeroInverse { norm } => pole(norm),
        other => other,
    })?;
    term = term * h_val;
    if term.norm() > 1e300 || !term.is_finite() {
        return Err(Error::Overflow { word: word.to_string(), norm: term.norm() });
    }
    Ok(term)
}

/// Sums the series over the ball in canonical order.
pub fn eval_theta(cfg: &ThetaConfig, p: HPoint) -> Result<Quaternion> {
    let mut sum = Quaternion::ZERO;
    for entry in cfg.ball.entries() {
        sum = sum + theta_term(&entry.matrix, &entry.word, cfg.m, cfg.modified, &cfg.h, p)?;
    }
    Ok(sum)
}

/// `F(p) = theta1(p) * theta2(p)^{-1}` (right division).
pub fn eval_field(f: &AutomorphicField, p: HPoint) -> Result<Quaternion> {
    let t1 = eval_theta(&f.theta1, p)?;
    let t2 = eval_theta(&f.theta2, p)?;
    let scale = 1e-12 * (1.0 + t1.norm());
    if t2.norm() <= scale {
        return Err(Error::EquilibriumPole { norm: t2.norm() });
    }
    Ok(t1 * t2.inv()?)
}

/// Verifies the exact per-term transformation behind the field's covariance:
/// for the word `w` and generator `j`, the `w` term evaluated at `T_j(p)`
/// must equal the left multiplier (`(c_j p + d_j)^{2m-2} det_j` for the
/// modified series, `(c_j p + d_j)^{2m}` for the plain one) times the
/// `w compose T_j` term at `p`. Returns the larger of the two relative
/// residuals. The identity is independent of the ball truncation.
pub fn term_covariance_check(
    g: &GroupPresentation,
    f: &AutomorphicField,
    w: &GroupWord,
    j: usize,
    p: HPoint,
) -> Result<f64> {
    let m = f.weight();
    let t_w = w.matrix(g);
    let t_j = g.generator(j);
    let t_wj = t_w.compose(t_j);
    let p_j = t_j.apply_interior(p)?;
    let jv = t_j.jvalue(p);
    let det_j = Quaternion::from_complex(t_j.det());

    let mut worst: f64 = 0.0;
    for (cfg, h) in [(&f.theta1, f.theta1.h()), (&f.theta2, f.theta2.h())] {
        let lhs = theta_term(&t_w, w, m, cfg.modified, h, p_j)?;
        let term = theta_term(&t_wj, w, m, cfg.modified, h, p)?;
        let exponent = if cfg.modified { 2 * m as i32 - 2 } else { 2 * m as i32 };
        let mut multiplier = jv.pow_int(exponent)?;
        if cfg.modified {
            multiplier = multiplier * det_j;
        }
        let rhs = multiplier * term;
        worst = worst.max((lhs - rhs).norm() / (1.0 + rhs.norm()));
    }
    Ok(worst)
}

/// Relative mismatch of the truncated field against its covariance law:
/// `|F(T p) - derivative_factor(T, p) F(p)| / (1 + |F(p)|)`. Zero only in
/// the limit of a full group sum; for a finite ball this is a truncation
/// diagnostic.
pub fn covariance_residual(f: &AutomorphicField, t: &MoebiusMap, p: HPoint) -> Result<f64> {
    let fp = eval_field(f, p)?;
    let tp = t.apply_interior(p)?;
    let ftp = eval_field(f, tp)?;
    let factor = t.derivative_factor(p)?;
    Ok((ftp - factor * fp).norm() / (1.0 + fp.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{enumerate_ball, Letter};
    use crate::presets;
    use num_complex::Complex64;

    const SQRT3: f64 = 1.732_050_807_568_877_2;

    fn q(w: f64, x: f64, y: f64, z: f64) -> Quaternion {
        Quaternion::new(w, x, y, z)
    }

    /// `H(p) = p + 1/2 + (sqrt(3)/2) i + 5 j`, the worked affine choice.
    fn affine_h1() -> RationalMap {
        RationalMap::polynomial(QuaternionPoly::new(vec![
            q(0.5, SQRT3 / 2.0, 5.0, 0.0),
            Quaternion::ONE,
        ]))
    }

    fn halving_group() -> GroupPresentation {
        GroupPresentation::new(
            vec![MoebiusMap::from_entries([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [2.0, 0.0]])],
            vec!["t2".into(), "t2'".into()],
        )
        .unwrap()
    }

    fn shift_group() -> GroupPresentation {
        GroupPresentation::new(
            vec![MoebiusMap::translation(Complex64::new(2.0, 0.0))],
            vec!["t5".into(), "t5'".into()],
        )
        .unwrap()
    }

    #[test]
    fn poly_eval_keeps_coefficients_left() {
        // c p with c = i, p = j gives i j = k, not j i
        let poly = QuaternionPoly::new(vec![Quaternion::ZERO, Quaternion::I]);
        assert_eq!(poly.eval(Quaternion::J), Quaternion::K);

        let p = q(0.3, -1.2, 0.7, 0.1);
        let c0 = q(1.0, 2.0, -1.0, 0.5);
        let c2 = q(0.0, 1.0, 1.0, -2.0);
        let poly = QuaternionPoly::new(vec![c0, Quaternion::ZERO, c2]);
        let direct = c0 + c2 * p * p;
        assert!((poly.eval(p) - direct).norm() < 1e-14);
    }

    #[test]
    fn rational_map_divides_on_the_right() {
        let num = QuaternionPoly::constant(Quaternion::I);
        let den = QuaternionPoly::new(vec![Quaternion::ZERO, Quaternion::ONE]);
        let h = RationalMap::new(num, den).unwrap();
        // i * j^{-1} = i * (-j) = -(i j) = -k ... i(-j) = -k
        assert!((h.eval(Quaternion::J).unwrap() - (-Quaternion::K)).norm() < 1e-15);
        assert!(h.eval(Quaternion::ZERO).is_err());
        assert!(RationalMap::new(
            QuaternionPoly::one(),
            QuaternionPoly::new(vec![Quaternion::ZERO, Quaternion::ZERO])
        )
        .is_err());
    }

    #[test]
    fn weight_below_two_is_rejected() {
        let ball = enumerate_ball(&shift_group(), 0);
        let e = ThetaConfig::new(1, RationalMap::constant(Quaternion::ONE), &ball, false);
        assert!(matches!(e, Err(Error::WeightTooSmall { m: 1 })));
        assert!(ThetaConfig::new(2, RationalMap::constant(Quaternion::ONE), &ball, false).is_ok());
    }

    #[test]
    fn identity_ball_reduces_to_h() {
        let ball = enumerate_ball(&shift_group(), 0);
        let h = affine_h1();
        let p = HPoint::new(0.4, -0.2, 1.3);
        for modified in [false, true] {
            let cfg = ThetaConfig::new(2, h.clone(), &ball, modified).unwrap();
            let got = eval_theta(&cfg, p).unwrap();
            let want = h.eval(p.to_quaternion()).unwrap();
            assert!((got - want).norm() < 1e-15, "modified={modified}");
        }
    }

    #[test]
    fn three_term_denominator_powers_sum_exactly() {
        // ball {I, T2, T2^-1} with H == 1 and m = 2: the terms are d^{-4}
        // for d = 1, 2, 1/2, so the sum is 1 + 1/16 + 16 = 17.0625
        let g = halving_group();
        let ball = enumerate_ball(&g, 1);
        assert_eq!(ball.len(), 3);
        let cfg =
            ThetaConfig::new(2, RationalMap::constant(Quaternion::ONE), &ball, false).unwrap();
        let got = eval_theta(&cfg, HPoint::new(0.3, 0.7, 0.9)).unwrap();
        assert_eq!(got, Quaternion::real(17.0625));
    }

    #[test]
    fn modified_identity_term_at_j() {
        let ball = enumerate_ball(&shift_group(), 0);
        let cfg = ThetaConfig::new(2, affine_h1(), &ball, true).unwrap();
        let got = eval_theta(&cfg, HPoint::new(0.0, 0.0, 1.0)).unwrap();
        assert!((got - q(0.5, SQRT3 / 2.0, 6.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn field_with_identity_ball_is_h1_over_h2() {
        let ball = enumerate_ball(&shift_group(), 0);
        let f = AutomorphicField::new(
            2,
            affine_h1(),
            RationalMap::constant(Quaternion::ONE),
            &ball,
        )
        .unwrap();
        let p = HPoint::new(0.2, 0.8, 0.6);
        let got = eval_field(&f, p).unwrap();
        let want = affine_h1().eval(p.to_quaternion()).unwrap();
        assert!((got - want).norm() < 1e-15);
    }

    #[test]
    fn vanishing_theta2_is_an_equilibrium_pole() {
        let ball = enumerate_ball(&shift_group(), 0);
        // H2(p) = p - j vanishes at p = j
        let h2 = RationalMap::polynomial(QuaternionPoly::new(vec![
            -Quaternion::J,
            Quaternion::ONE,
        ]));
        let f = AutomorphicField::new(2, affine_h1(), h2, &ball).unwrap();
        let e = eval_field(&f, HPoint::new(0.0, 0.0, 1.0));
        assert!(matches!(e, Err(Error::EquilibriumPole { .. })));
    }

    #[test]
    fn h_pole_at_a_translate_names_the_word() {
        // H has a pole at 2 + j = T5(j); the radius-1 ball hits it at p = j
        let g = shift_group();
        let ball = enumerate_ball(&g, 1);
        let den = QuaternionPoly::new(vec![-q(2.0, 0.0, 1.0, 0.0), Quaternion::ONE]);
        let h = RationalMap::new(QuaternionPoly::one(), den).unwrap();
        let cfg = ThetaConfig::new(2, h, &ball, false).unwrap();
        match eval_theta(&cfg, HPoint::new(0.0, 0.0, 1.0)) {
            Err(Error::Pole { word, .. }) => assert_eq!(word, "g0"),
            other => panic!("expected a pole, got {other:?}"),
        }
    }

    #[test]
    fn term_overflow_is_reported() {
        // huge constant H overflows the identity term
        let ball = enumerate_ball(&shift_group(), 0);
        let h = RationalMap::constant(Quaternion::real(1e301));
        let cfg = ThetaConfig::new(2, h, &ball, false).unwrap();
        match eval_theta(&cfg, HPoint::new(0.0, 0.0, 1.0)) {
            Err(Error::Overflow { word, .. }) => assert_eq!(word, "e"),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn trivial_generator_covariance_is_exactly_zero() {
        let g = GroupPresentation::new(
            vec![MoebiusMap::identity()],
            vec!["id".into(), "id'".into()],
        )
        .unwrap();
        let ball = enumerate_ball(&g, 1);
        let f = AutomorphicField::new(
            2,
            affine_h1(),
            RationalMap::constant(Quaternion::ONE),
            &ball,
        )
        .unwrap();
        let res = term_covariance_check(
            &g,
            &f,
            &GroupWord::identity(),
            0,
            HPoint::new(0.3, -0.5, 0.8),
        )
        .unwrap();
        assert_eq!(res, 0.0);
    }

    #[test]
    fn per_term_covariance_for_worked_group() {
        let g = presets::lattice_scaling_group();
        let ball = enumerate_ball(&g, 2);
        let w = GroupWord::from_letters(vec![Letter::new(4, 1).unwrap()]).unwrap();
        let points = [
            HPoint::new(0.3, 0.2, 1.0),
            HPoint::new(-1.1, 0.7, 0.4),
            HPoint::new(2.0, 1.5, 2.2),
        ];
        for m in [2, 3] {
            let f = AutomorphicField::new(
                m,
                affine_h1(),
                RationalMap::constant(Quaternion::ONE),
                &ball,
            )
            .unwrap();
            for p in points {
                let res = term_covariance_check(&g, &f, &w, 1, p).unwrap();
                assert!(res < 1e-10, "m={m} p={p} res={res:e}");
            }
        }
    }

    #[test]
    fn per_term_covariance_across_small_ball() {
        let g = presets::lattice_scaling_group();
        let ball = enumerate_ball(&g, 2);
        let f = AutomorphicField::new(
            2,
            affine_h1(),
            RationalMap::constant(Quaternion::ONE),
            &ball,
        )
        .unwrap();
        let p = HPoint::new(0.7, 0.3, 1.1);
        for entry in ball.entries() {
            for j in 0..g.generator_count() {
                let res = term_covariance_check(&g, &f, &entry.word, j, p).unwrap();
                assert!(res < 1e-10, "word {} generator {j}: {res:e}", entry.word);
            }
        }
    }

    #[test]
    fn field_evaluation_is_bit_reproducible() {
        let g = presets::lattice_scaling_group();
        let ball = enumerate_ball(&g, 3);
        let f = AutomorphicField::new(
            2,
            affine_h1(),
            RationalMap::constant(Quaternion::ONE),
            &ball,
        )
        .unwrap();
        let p = HPoint::new(0.9, 0.4, 1.7);
        let a = eval_field(&f, p).unwrap();
        let b = eval_field(&f, p).unwrap();
        assert_eq!(a, b);
        let ball2 = enumerate_ball(&g, 3);
        let f2 = AutomorphicField::new(
            2,
            affine_h1(),
            RationalMap::constant(Quaternion::ONE),
            &ball2,
        )
        .unwrap();
        assert_eq!(eval_field(&f2, p).unwrap(), a);
    }

    #[test]
    fn covariance_residual_identity_is_zero() {
        let g = presets::lattice_scaling_group();
        let ball = enumerate_ball(&g, 2);
        let f = AutomorphicField::new(
            2,
            affine_h1(),
            RationalMap::constant(Quaternion::ONE),
            &ball,
        )
        .unwrap();
        let res =
            covariance_residual(&f, &MoebiusMap::identity(), HPoint::new(0.4, 0.1, 0.9)).unwrap();
        assert_eq!(res, 0.0);
    }

    #[test]
    fn covariance_residual_decreases_with_radius() {
        // the truncated field for this all-affine group is p + kappa_N with
        // |kappa_N| ~ 2^{-N}, so the halving generator's residual shrinks
        // with the ball radius
        let g = presets::lattice_scaling_group();
        let t2 = g.generator(1).clone();
        let points = [HPoint::new(0.3, 0.2, 1.0), HPoint::new(1.2, 0.9, 0.7)];
        let mut prev = vec![f64::INFINITY; points.len()];
        for radius in [2, 4, 6] {
            let ball = enumerate_ball(&g, radius);
            let f = AutomorphicField::new(
                2,
                affine_h1(),
                RationalMap::constant(Quaternion::ONE),
                &ball,
            )
            .unwrap();
            for (i, p) in points.iter().enumerate() {
                let res = covariance_residual(&f, &t2, *p).unwrap();
                assert!(
                    res < 0.6 * prev[i],
                    "radius {radius} point {i}: {res:e} vs {:e}",
                    prev[i]
                );
                prev[i] = res;
            }
        }
    }

    #[test]
    fn single_generator_tail_shrinks_geometrically() {
        // with the affine H the halving-group residual decays like 2^{-N}
        let g = halving_group();
        let t2 = g.generator(0).clone();
        let p = HPoint::new(0.3, 0.2, 1.0);
        let mut values = Vec::new();
        for radius in [4, 6, 8] {
            let ball = enumerate_ball(&g, radius);
            let f = AutomorphicField::new(
                2,
                affine_h1(),
                RationalMap::constant(Quaternion::ONE),
                &ball,
            )
            .unwrap();
            values.push(covariance_residual(&f, &t2, p).unwrap());
        }
        assert!(values[1] < 0.45 * values[0]);
        assert!(values[2] < 0.45 * values[1]);
    }

    #[test]
    fn field_value_regression_anchor() {
        // frozen from the first run of this configuration; guards against
        // accidental changes to term order, normalization, or summation
        let g = presets::lattice_scaling_group();
        let ball = enumerate_ball(&g, 4);
        assert_eq!(ball.len(), 2433);
        let f = AutomorphicField::new(
            2,
            affine_h1(),
            RationalMap::constant(Quaternion::ONE),
            &ball,
        )
        .unwrap();
        let v = eval_field(&f, HPoint::new(1.0, 0.0, 1.0)).unwrap();
        let want = q(
            1.02290249705831293,
            0.0584030251302066969,
            1.33719002280413224,
            0.0,
        );
        assert!((v - want).norm() < 1e-13, "drifted to {v}");
    }

    #[test]
    fn single_generator_identity_h_residual_is_tiny() {
        // H1(p) = p makes the halving-group field exactly covariant, so the
        // radius-12 residual sits at rounding level
        let g = halving_group();
        let t2 = g.generator(0).clone();
        let ball = enumerate_ball(&g, 12);
        let f = AutomorphicField::new(
            2,
            RationalMap::identity_map(),
            RationalMap::constant(Quaternion::ONE),
            &ball,
        )
        .unwrap();
        for p in [HPoint::new(0.3, 0.2, 1.0), HPoint::new(-0.8, 0.5, 0.35)] {
            let res = covariance_residual(&f, &t2, p).unwrap();
            assert!(res < 1e-6, "residual {res:e}");
        }
    }
}
