//! Reeb-foliated solid tori and the systems glued from them.
//!
//! The building blocks, in order of assembly:
//!
//! * a four-equilibrium gradient system on the torus (source, sink, two
//!   saddles) with Poincare indices summing to zero ([`torus_field`]),
//! * the rolled-up plane leaf of the Reeb foliation of `D^2 x S^1`,
//!   parametrized by a fixed radial profile ([`LeafChart`], [`leaf_embed`]),
//! * the induced plane system: annular copies of the torus dynamics on each
//!   cylinder band of the cut leaf plus a source at the origin
//!   ([`leaf_system`]),
//! * the genus-2 system formed by removing a sink disk from one torus
//!   system and a source disk from its time reversal and joining them by a
//!   through-flow neck ([`connected_sum_field`]),
//! * the Heegaard collar twist: the boundary field of the second handle
//!   body is carried by the interpolated gluing map `(1 - t) I + t psi`
//!   toward the boundary ([`heegaard_glue`]).
//!
//! All samplers and index computations run on fixed deterministic grids so
//! repeated runs are bit-identical.

use crate::error::{Error, Result};
use std::f64::consts::PI;
use std::sync::Arc;

const TAU: f64 = 2.0 * PI;

/// A vector field on the `(u, v)` plane, optionally marked (and verified)
/// as doubly `2 pi`-periodic so it descends to the torus.
#[derive(Clone)]
pub struct PlanarField {
    eval: Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>,
    doubly_periodic: bool,
}

impl PlanarField {
    /// Wraps an evaluator. A field claimed doubly periodic is checked on a
    /// fixed sample set (tolerance 1e-12) and rejected if it is not.
    pub fn new<F>(eval: F, doubly_periodic: bool) -> Result<PlanarField>
    where
        F: Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
    {
        let field = PlanarField { eval: Arc::new(eval), doubly_periodic };
        if doubly_periodic {
            let probes =
                [(0.3, 1.7), (2.0, 5.1), (4.4, 0.9), (5.9, 3.3), (1.1, 1.1), (0.0, 0.0)];
            for (u, v) in probes {
                let base = field.eval(u, v);
                for shifted in [field.eval(u + TAU, v), field.eval(u, v + TAU)] {
                    let d = (base.0 - shifted.0).abs().max((base.1 - shifted.1).abs());
                    if d > 1e-12 {
                        return Err(Error::Invalid(format!(
                            "field is not doubly periodic (mismatch {d:e} at ({u}, {v}))"
                        )));
                    }
                }
            }
        }
        Ok(field)
    }

    pub fn eval(&self, u: f64, v: f64) -> (f64, f64) {
        (self.eval)(u, v)
    }

    pub fn is_doubly_periodic(&self) -> bool {
        self.doubly_periodic
    }
}

impl std::fmt::Debug for PlanarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PlanarField")
            .field("doubly_periodic", &self.doubly_periodic)
            .finish_non_exhaustive()
    }
}

/// The gradient system of `f(u, v) = cos u + cos v`: a sink at `(0, 0)`,
/// a source at `(pi, pi)` and saddles at `(0, pi)` and `(pi, 0)`.
pub fn torus_field() -> PlanarField {
    PlanarField::new(|u: f64, v: f64| (-u.sin(), -v.sin()), true)
        .expect("sin is 2 pi periodic")
}

fn wrap_angle(a: f64) -> f64 {
    let mut x = (a + PI).rem_euclid(TAU) - PI;
    if x <= -PI {
        x += TAU;
    }
    x
}

/// Distance on the torus `(R / 2 pi Z)^2`.
pub fn torus_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let du = wrap_angle(a.0 - b.0);
    let dv = wrap_angle(a.1 - b.1);
    (du * du + dv * dv).sqrt()
}

/// Winding number of the field around a circle: the Poincare index of the
/// enclosed equilibrium. Accumulates angle differences over 1440 samples
/// and insists the total closes to an integer.
pub fn equilibrium_index(field: &PlanarField, e: (f64, f64), radius: f64) -> Result<i64> {
    if !(radius > 0.0) {
        return Err(Error::Invalid(format!("probe radius must be positive, got {radius}")));
    }
    const N: usize = 1440;
    let mut angles = [0.0f64; N];
    let mut min_norm = f64::INFINITY;
    let mut max_norm = 0.0f64;
    for (i, slot) in angles.iter_mut().enumerate() {
        let phi = TAU * i as f64 / N as f64;
        let (x, y) = field.eval(e.0 + radius * phi.cos(), e.1 + radius * phi.sin());
        let n = (x * x + y * y).sqrt();
        min_norm = min_norm.min(n);
        max_norm = max_norm.max(n);
        *slot = y.atan2(x);
    }
    if min_norm <= 1e-12 * (1.0 + max_norm) {
        return Err(Error::IndexUndefined { min_norm });
    }
    let mut total = 0.0;
    let mut worst_step = 0.0f64;
    for i in 0..N {
        let step = wrap_angle(angles[(i + 1) % N] - angles[i]);
        worst_step = worst_step.max(step.abs());
        total += step;
    }
    let winding = total / TAU;
    let nearest = winding.round();
    // a quarter turn between consecutive samples means the rotation is not
    // resolved and the shorter-arc unwrapping cannot be trusted
    if worst_step > PI / 2.0 || (winding - nearest).abs() > 1e-6 {
        return Err(Error::WindingNotInteger { winding });
    }
    Ok(nearest as i64)
}

/// Linearized type of an isolated equilibrium.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EquilibriumKind {
    Source,
    Sink,
    Saddle,
    Degenerate,
}

impl std::fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EquilibriumKind::Source => "source",
            EquilibriumKind::Sink => "sink",
            EquilibriumKind::Saddle => "saddle",
            EquilibriumKind::Degenerate => "degenerate",
        })
    }
}

fn jacobian(field: &PlanarField, p: (f64, f64)) -> [[f64; 2]; 2] {
    let h = 1e-6;
    let fu1 = field.eval(p.0 + h, p.1);
    let fu0 = field.eval(p.0 - h, p.1);
    let fv1 = field.eval(p.0, p.1 + h);
    let fv0 = field.eval(p.0, p.1 - h);
    [
        [(fu1.0 - fu0.0) / (2.0 * h), (fv1.0 - fv0.0) / (2.0 * h)],
        [(fu1.1 - fu0.1) / (2.0 * h), (fv1.1 - fv0.1) / (2.0 * h)],
    ]
}

/// Classifies an equilibrium by the trace and determinant of the
/// finite-difference Jacobian.
pub fn classify_equilibrium(field: &PlanarField, e: (f64, f64)) -> EquilibriumKind {
    let j = jacobian(field, e);
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let tr = j[0][0] + j[1][1];
    let tol = 1e-7;
    if det < -tol {
        EquilibriumKind::Saddle
    } else if det > tol && tr < -tol {
        EquilibriumKind::Sink
    } else if det > tol && tr > tol {
        EquilibriumKind::Source
    } else {
        EquilibriumKind::Degenerate
    }
}

/// Finds the equilibria of a doubly periodic field on `[0, 2 pi)^2` by
/// Newton refinement from a deterministic grid of starting points.
pub fn find_equilibria(field: &PlanarField) -> Vec<(f64, f64)> {
    let grid = 12;
    let mut found: Vec<(f64, f64)> = Vec::new();
    for i in 0..grid {
        for j in 0..grid {
            let start =
                (TAU * (i as f64 + 0.5) / grid as f64, TAU * (j as f64 + 0.5) / grid as f64);
            let Some(p) = newton_refine(field, start) else { continue };
            let p = (p.0.rem_euclid(TAU), p.1.rem_euclid(TAU));
            if found.iter().all(|&q| torus_distance(p, q) > 1e-5) {
                found.push(p);
            }
        }
    }
    found.sort_by(|a, b| (a.1, a.0).partial_cmp(&(b.1, b.0)).expect("finite coordinates"));
    found
}

fn newton_refine(field: &PlanarField, start: (f64, f64)) -> Option<(f64, f64)> {
    let mut p = start;
    for _ in 0..40 {
        let (x, y) = field.eval(p.0, p.1);
        if (x * x + y * y).sqrt() < 1e-12 {
            return Some(p);
        }
        let j = jacobian(field, p);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-12 {
            return None;
        }
        let mut du = (j[1][1] * x - j[0][1] * y) / det;
        let mut dv = (-j[1][0] * x + j[0][0] * y) / det;
        let n = (du * du + dv * dv).sqrt();
        if n > 0.7 {
            du *= 0.7 / n;
            dv *= 0.7 / n;
        }
        p = (p.0 - du, p.1 - dv);
    }
    None
}

/// One equilibrium row of an index audit.
#[derive(Clone, Debug)]
pub struct IndexEntry {
    pub point: (f64, f64),
    pub kind: EquilibriumKind,
    pub index: i64,
}

/// Equilibria of a torus field with their indices; the total must vanish
/// for a field that descends to the torus.
#[derive(Clone, Debug)]
pub struct IndexReport {
    pub entries: Vec<IndexEntry>,
}

impl IndexReport {
    pub fn total(&self) -> i64 {
        self.entries.iter().map(|e| e.index).sum()
    }
}

impl std::fmt::Display for IndexReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for e in &self.entries {
            writeln!(
                f,
                "({:+.6}, {:+.6})  {:<10}  index {:+}",
                e.point.0,
                e.point.1,
                e.kind.to_string(),
                e.index
            )?;
        }
        write!(f, "index total: {:+}", self.total())
    }
}

/// Finds, classifies, and indexes every equilibrium of a doubly periodic
/// field.
pub fn index_report(field: &PlanarField, radius: f64) -> Result<IndexReport> {
    let mut entries = Vec::new();
    for e in find_equilibria(field) {
        entries.push(IndexEntry {
            point: e,
            kind: classify_equilibrium(field, e),
            index: equilibrium_index(field, e, radius)?,
        });
    }
    Ok(IndexReport { entries })
}

/// The rolled-up plane leaf of the Reeb foliation, fixed by the radial
/// height profile `tan(pi r^2 / 2)`: zero at the center of the meridian
/// disk, strictly increasing, divergent at the boundary torus.
#[derive(Clone, Copy, Debug, Default)]
pub struct LeafChart {}

impl LeafChart {
    pub fn standard() -> LeafChart {
        LeafChart {}
    }

    /// Height of the leaf over disk radius `r` in `[0, 1)`.
    pub fn profile(&self, r: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::Invalid(format!("profile radius must be in [0, 1), got {r}")));
        }
        Ok((PI * r * r / 2.0).tan())
    }

    /// Disk radius at which the leaf reaches height `h >= 0`; the inverse
    /// of the profile.
    pub fn radius_at_height(&self, h: f64) -> Result<f64> {
        if !(h >= 0.0) {
            return Err(Error::Invalid(format!("height must be nonnegative, got {h}")));
        }
        Ok((2.0 * h.atan() / PI).sqrt())
    }

    /// Height period of the roll: cutting the leaf by a meridian disk
    /// produces one cylinder band per period.
    pub fn band_width(&self) -> f64 {
        TAU
    }

    /// Radius of the k-th cut circle, where the leaf height is `2 pi k`.
    pub fn cylinder_radius(&self, k: u32) -> f64 {
        self.radius_at_height(TAU * f64::from(k)).expect("height is nonnegative")
    }
}

/// A point of the solid torus `D^2 x S^1`: open-disk coordinates and a
/// height angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolidTorusPoint {
    pub disk: (f64, f64),
    pub height: f64,
}

/// Embeds the plane as a Reeb leaf: plane radius becomes leaf height, the
/// profile dictates how far out in the meridian disk the turn sits. The
/// meridian disk at height zero cuts the image into a disk plus one
/// cylinder per band.
pub fn leaf_embed(chart: &LeafChart, u: f64, v: f64) -> SolidTorusPoint {
    let s = u.hypot(v);
    let r = chart.radius_at_height(s).expect("plane radius is nonnegative");
    if s == 0.0 {
        return SolidTorusPoint { disk: (0.0, 0.0), height: 0.0 };
    }
    let (cu, cv) = (u / s, v / s);
    SolidTorusPoint { disk: (r * cu, r * cv), height: s.rem_euclid(TAU) }
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

/// The plane system induced on the cut leaf: each cylinder band carries a
/// copy of the base torus dynamics (angle to angle, band offset to the
/// second coordinate), and the tangential part is faded out over the
/// innermost tenth of a band so the origin becomes a smooth source. The
/// chart places the band sources on the cut circles at angle `pi`: folded
/// up, they sit radially below one marked boundary point.
pub fn leaf_system(base: &PlanarField, chart: &LeafChart) -> Result<PlanarField> {
    if !base.is_doubly_periodic() {
        return Err(Error::Invalid(
            "leaf bands repeat the base dynamics; the base field must be doubly periodic"
                .to_string(),
        ));
    }
    let width = chart.band_width();
    let delta = 0.1 * width;
    let base = base.clone();
    PlanarField::new(
        move |x: f64, y: f64| {
            let s = x.hypot(y);
            if s == 0.0 {
                return (0.0, 0.0);
            }
            let theta = y.atan2(x);
            let (du, dv) = base.eval(theta, s - 0.5 * width);
            let w = smoothstep(s / delta);
            let radial = w * dv + (1.0 - w) * s;
            let tangential = w * s * du;
            let (cu, cv) = (x / s, y / s);
            (radial * cu - tangential * cv, radial * cv + tangential * cu)
        },
        false,
    )
}

pub const DEFAULT_BANDS: usize = 5;

/// The equilibria of the leaf system over the first `bands` cylinder
/// bands (plus the origin source, listed first). Band `k` owns its two
/// interior equilibria and the pair on its outer cut circle.
pub fn leaf_equilibria(chart: &LeafChart, bands: usize) -> Vec<(EquilibriumKind, (f64, f64))> {
    let w = chart.band_width();
    let mut out = vec![(EquilibriumKind::Source, (0.0, 0.0))];
    for k in 0..bands {
        let mid = (k as f64 + 0.5) * w;
        let outer = (k as f64 + 1.0) * w;
        out.push((EquilibriumKind::Sink, (mid, 0.0)));
        out.push((EquilibriumKind::Saddle, (-mid, 0.0)));
        out.push((EquilibriumKind::Saddle, (outer, 0.0)));
        out.push((EquilibriumKind::Source, (-outer, 0.0)));
    }
    out
}

/// Chart tag of the genus-2 connected-sum atlas.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SumChart {
    Torus1,
    Neck,
    Torus2,
}

/// The one-dimensional singular set of the plumbed system: the radial
/// segment below the marked point, joining the origins of the plumbed
/// leaves. Its neighborhood dynamics are not prescribed; it is recorded
/// as an invariant set.
#[derive(Clone, Debug)]
pub struct SingularLine {
    pub boundary_angle: f64,
    pub meridian_height: f64,
    pub description: String,
}

impl SingularLine {
    /// Point at parameter `t` in `[0, 1]`, from the marked boundary point
    /// (`t = 0`) to the core circle (`t = 1`).
    pub fn sample(&self, t: f64) -> SolidTorusPoint {
        let r = 1.0 - t.clamp(0.0, 1.0);
        SolidTorusPoint {
            disk: (r * self.boundary_angle.cos(), r * self.boundary_angle.sin()),
            height: self.meridian_height,
        }
    }
}

/// The genus-2 boundary system: two torus charts with a disk removed and
/// a through-flow neck joining the rims.
#[derive(Clone, Debug)]
pub struct ConnectedSumSystem {
    side1: PlanarField,
    side2: PlanarField,
    center: (f64, f64),
    rho: f64,
    clearance: f64,
    neck_in: f64,
    neck_out: f64,
    line: SingularLine,
    remaining: Vec<(SumChart, (f64, f64))>,
}

impl ConnectedSumSystem {
    /// Evaluates the glued field on one chart. Torus charts reject points
    /// inside the removed disk; the neck chart takes `(a, alpha)` with
    /// `a` in `[-1, 1]` running from the first rim to the second.
    pub fn eval(&self, chart: SumChart, p: (f64, f64)) -> Result<(f64, f64)> {
        match chart {
            SumChart::Torus1 | SumChart::Torus2 => {
                if torus_distance(p, self.center) < self.rho {
                    return Err(Error::Invalid(format!(
                        "point ({}, {}) lies in the removed disk",
                        p.0, p.1
                    )));
                }
                let side = if chart == SumChart::Torus1 { &self.side1 } else { &self.side2 };
                Ok(side.eval(p.0, p.1))
            }
            SumChart::Neck => {
                let (a, _alpha) = p;
                if !(-1.0..=1.0).contains(&a) {
                    return Err(Error::Invalid(format!(
                        "neck coordinate {a} outside [-1, 1]"
                    )));
                }
                let c = (1.0 - smoothstep((a + 1.0) / 2.0)) * self.neck_in
                    + smoothstep((a + 1.0) / 2.0) * self.neck_out;
                Ok((c, 0.0))
            }
        }
    }

    /// The equilibria that survive the disk removal, with their charts.
    pub fn remaining_equilibria(&self) -> &[(SumChart, (f64, f64))] {
        &self.remaining
    }

    /// Sum of Poincare indices over the remaining equilibria; `-2` for the
    /// genus-2 surface.
    pub fn index_sum(&self) -> Result<i64> {
        let mut total = 0;
        for &(chart, e) in &self.remaining {
            let side = if chart == SumChart::Torus1 { &self.side1 } else { &self.side2 };
            let mut dmin = torus_distance(e, self.center) - self.rho;
            for &(other_chart, other) in &self.remaining {
                if other_chart == chart && other != e {
                    dmin = dmin.min(torus_distance(e, other));
                }
            }
            let radius = (0.5 * dmin).min(0.2);
            if radius <= 0.0 {
                return Err(Error::Invalid(format!(
                    "no probe clearance around equilibrium ({}, {})",
                    e.0, e.1
                )));
            }
            total += equilibrium_index(side, e, radius)?;
        }
        Ok(total)
    }

    pub fn singular_line(&self) -> &SingularLine {
        &self.line
    }

    pub fn removed_center(&self) -> (f64, f64) {
        self.center
    }

    pub fn disk_radius(&self) -> f64 {
        self.rho
    }

    pub fn clearance(&self) -> f64 {
        self.clearance
    }
}

/// Forms the genus-2 boundary system of the plumbing construction: removes
/// a disk of radius `rho` around the sink of `sys1` and the coincident
/// source of `sys2` (its time reversal) and joins the rims by a neck on
/// which the flow passes from the first side to the second.
pub fn connected_sum_field(
    sys1: &PlanarField,
    sys2: &PlanarField,
    rho: f64,
) -> Result<ConnectedSumSystem> {
    for (name, f) in [("sys1", sys1), ("sys2", sys2)] {
        if !f.is_doubly_periodic() {
            return Err(Error::Invalid(format!("{name} must be doubly periodic")));
        }
    }
    for (u, v) in [(0.4, 1.9), (2.7, 5.0), (5.5, 0.2), (3.1, 3.1)] {
        let a = sys1.eval(u, v);
        let b = sys2.eval(u, v);
        let d = (a.0 + b.0).abs().max((a.1 + b.1).abs());
        if d > 1e-9 {
            return Err(Error::Invalid(format!(
                "sys2 must be the time reversal of sys1 (mismatch {d:e} at ({u}, {v}))"
            )));
        }
    }

    let equilibria = find_equilibria(sys1);
    let sinks: Vec<(f64, f64)> = equilibria
        .iter()
        .copied()
        .filter(|&e| classify_equilibrium(sys1, e) == EquilibriumKind::Sink)
        .collect();
    let &[center] = &sinks[..] else {
        return Err(Error::Invalid(format!(
            "expected exactly one sink to remove, found {}",
            sinks.len()
        )));
    };
    let clearance = equilibria
        .iter()
        .filter(|&&e| e != center)
        .map(|&e| torus_distance(e, center))
        .fold(f64::INFINITY, f64::min);
    if !(rho > 0.0 && rho < clearance) {
        return Err(Error::Invalid(format!(
            "disk radius {rho} exceeds the clearance {clearance} to the nearest equilibrium"
        )));
    }

    // through-flow speeds at the rims: mean inward radial component of the
    // first side, mean outward of the second
    let samples = 64;
    let mut inward = 0.0;
    let mut outward = 0.0;
    for i in 0..samples {
        let alpha = TAU * i as f64 / samples as f64;
        let n = (alpha.cos(), alpha.sin());
        let at = (center.0 + rho * n.0, center.1 + rho * n.1);
        let f1 = sys1.eval(at.0, at.1);
        let f2 = sys2.eval(at.0, at.1);
        inward -= (f1.0 * n.0 + f1.1 * n.1) / samples as f64;
        outward += (f2.0 * n.0 + f2.1 * n.1) / samples as f64;
    }
    if inward <= 1e-12 || outward <= 1e-12 {
        return Err(Error::Invalid(format!(
            "no through-flow at the rims (inward {inward:e}, outward {outward:e})"
        )));
    }

    let mut remaining = Vec::new();
    for &e in &equilibria {
        if e != center {
            remaining.push((SumChart::Torus1, e));
        }
    }
    for e in find_equilibria(sys2) {
        if torus_distance(e, center) > 1e-6 {
            remaining.push((SumChart::Torus2, e));
        }
    }

    Ok(ConnectedSumSystem {
        side1: sys1.clone(),
        side2: sys2.clone(),
        center,
        rho,
        clearance,
        neck_in: inward,
        neck_out: outward,
        line: SingularLine {
            boundary_angle: PI,
            meridian_height: 0.0,
            description: "radial segment below the marked point, joining the origins \
                          of the plumbed leaves"
                .to_string(),
        },
        remaining,
    })
}

/// A Heegaard gluing datum: the boundary torus map as an integer
/// unimodular matrix on the angle coordinates, for handle bodies of genus
/// one or two.
#[derive(Clone, Copy, Debug)]
pub struct HeegaardGluing {
    pub genus: u8,
    pub psi: [[i64; 2]; 2],
}

impl HeegaardGluing {
    pub fn new(genus: u8, psi: [[i64; 2]; 2]) -> Result<HeegaardGluing> {
        if genus == 0 || genus > 2 {
            return Err(Error::UnsupportedGenus { genus });
        }
        let det = psi[0][0] * psi[1][1] - psi[0][1] * psi[1][0];
        if det.abs() != 1 {
            return Err(Error::NotUnimodular { det });
        }
        Ok(HeegaardGluing { genus, psi })
    }
}

/// The twisted field on the collar `V2(t)`: the boundary field of the
/// second handle body carried by the inverse of the interpolated gluing
/// map `(1 - t) I + t psi`, acting linearly on angles with the Jacobian
/// applied to vectors. At `t = 0` the field is untouched; at `t = 1` it
/// matches the first side's boundary dynamics under the identification.
#[derive(Clone, Debug)]
pub struct CollarField {
    x2: PlanarField,
    psi: [[i64; 2]; 2],
    identity: bool,
}

impl CollarField {
    /// Evaluates at collar depth `t` in `[0, 1]` (`0` inner, `1` boundary).
    /// The interpolated matrix can degenerate strictly inside the collar
    /// (for the meridian-longitude swap it does at `t = 1/2`); that is
    /// reported, not patched.
    pub fn eval(&self, t: f64, u: f64, v: f64) -> Result<(f64, f64)> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Invalid(format!("collar parameter {t} outside [0, 1]")));
        }
        if self.identity || t == 0.0 {
            return Ok(self.x2.eval(u, v));
        }
        let d = |i: usize, j: usize| (self.psi[i][j] - i64::from(i == j)) as f64;
        let a = [
            [1.0 + t * d(0, 0), t * d(0, 1)],
            [t * d(1, 0), 1.0 + t * d(1, 1)],
        ];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if det.abs() < 1e-9 {
            return Err(Error::SingularInterpolation { t, det });
        }
        let pu = (a[0][0] * u + a[0][1] * v).rem_euclid(TAU);
        let pv = (a[1][0] * u + a[1][1] * v).rem_euclid(TAU);
        let (x, y) = self.x2.eval(pu, pv);
        Ok(((a[1][1] * x - a[0][1] * y) / det, (-a[1][0] * x + a[0][0] * y) / det))
    }
}

/// A glued Heegaard system: the collar field and the residual between its
/// boundary restriction and the first side's boundary field.
#[derive(Clone, Debug)]
pub struct GluedSystem {
    pub collar: CollarField,
    pub boundary_residual: f64,
}

/// Twists the second handle body's boundary field by the gluing map and
/// measures how well the result matches the first side on a sample grid.
pub fn heegaard_glue(
    x1: &PlanarField,
    x2: &PlanarField,
    gluing: &HeegaardGluing,
) -> Result<GluedSystem> {
    if !x2.is_doubly_periodic() {
        return Err(Error::Invalid(
            "the twisted field is sampled through angle reduction; x2 must be doubly periodic"
                .to_string(),
        ));
    }
    let collar = CollarField {
        x2: x2.clone(),
        psi: gluing.psi,
        identity: gluing.psi == [[1, 0], [0, 1]],
    };
    let n = 24;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let u = TAU * i as f64 / n as f64;
            let v = TAU * j as f64 / n as f64;
            let twisted = collar.eval(1.0, u, v)?;
            let want = x1.eval(u, v);
            worst = worst.max((twisted.0 - want.0).abs().max((twisted.1 - want.1).abs()));
        }
    }
    Ok(GluedSystem { collar, boundary_residual: worst })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_field_values() {
        let f = torus_field();
        assert_eq!(f.eval(0.0, 0.0), (-0.0, -0.0));
        let (x, y) = f.eval(PI / 2.0, 0.0);
        assert_eq!(x, -1.0);
        assert_eq!(y, -0.0);
        assert!(f.is_doubly_periodic());
    }

    #[test]
    fn false_periodicity_claims_are_rejected() {
        assert!(PlanarField::new(|u, _| (u, 0.0), true).is_err());
        assert!(PlanarField::new(|u, _| (u, 0.0), false).is_ok());
    }

    #[test]
    fn equilibria_found_by_grid_refinement() {
        let f = torus_field();
        let eq = find_equilibria(&f);
        assert_eq!(eq.len(), 4);
        let want = [(0.0, 0.0), (PI, 0.0), (0.0, PI), (PI, PI)];
        for w in want {
            assert!(
                eq.iter().any(|&e| torus_distance(e, w) < 1e-9),
                "missing equilibrium near {w:?}"
            );
        }
    }

    #[test]
    fn equilibrium_classification() {
        let f = torus_field();
        assert_eq!(classify_equilibrium(&f, (0.0, 0.0)), EquilibriumKind::Sink);
        assert_eq!(classify_equilibrium(&f, (PI, PI)), EquilibriumKind::Source);
        assert_eq!(classify_equilibrium(&f, (0.0, PI)), EquilibriumKind::Saddle);
        assert_eq!(classify_equilibrium(&f, (PI, 0.0)), EquilibriumKind::Saddle);
    }

    #[test]
    fn indices_are_radius_invariant_and_sum_to_zero() {
        let f = torus_field();
        let points = [(0.0, 0.0), (PI, PI), (0.0, PI), (PI, 0.0)];
        let want = [1, 1, -1, -1];
        for radius in [0.05, 0.1, 0.2] {
            let mut sum = 0;
            for (e, w) in points.iter().zip(want) {
                let idx = equilibrium_index(&f, *e, radius).unwrap();
                assert_eq!(idx, w, "at {e:?} radius {radius}");
                sum += idx;
            }
            assert_eq!(sum, 0);
        }
    }

    #[test]
    fn perturbed_periodic_field_still_sums_to_zero() {
        let f = PlanarField::new(
            |u: f64, v: f64| (-u.sin() + 0.2 * v.sin(), -v.sin() + 0.1 * u.cos() * v.sin()),
            true,
        )
        .unwrap();
        let report = index_report(&f, 0.08).unwrap();
        assert!(!report.entries.is_empty());
        assert_eq!(report.total(), 0, "report:\n{report}");
    }

    #[test]
    fn zero_on_circle_is_an_error() {
        let zero = PlanarField::new(|_, _| (0.0, 0.0), true).unwrap();
        assert!(matches!(
            equilibrium_index(&zero, (0.0, 0.0), 0.1),
            Err(Error::IndexUndefined { .. })
        ));
    }

    #[test]
    fn non_closing_winding_is_an_error() {
        // direction 0.6 * polar angle: a closed loop of directions never
        // returns to its start, so the accumulated winding is fractional
        let f = PlanarField::new(
            |u: f64, v: f64| {
                let phi = v.atan2(u);
                ((0.6 * phi).cos(), (0.6 * phi).sin())
            },
            false,
        )
        .unwrap();
        assert!(matches!(
            equilibrium_index(&f, (0.0, 0.0), 1.0),
            Err(Error::WindingNotInteger { .. })
        ));
    }

    #[test]
    fn profile_shape() {
        let chart = LeafChart::standard();
        assert_eq!(chart.profile(0.0).unwrap(), 0.0);
        let mut prev = -1.0;
        for i in 0..100 {
            let h = chart.profile(i as f64 / 100.0).unwrap();
            assert!(h > prev);
            prev = h;
        }
        assert!(chart.profile(0.999).unwrap() > 100.0);
        assert!(chart.profile(1.0).is_err());
        for h in [0.0, 0.7, 12.0, 500.0] {
            let r = chart.radius_at_height(h).unwrap();
            assert!((chart.profile(r).unwrap() - h).abs() < 1e-9 * (1.0 + h));
        }
    }

    #[test]
    fn cut_circles_climb_toward_the_boundary() {
        let chart = LeafChart::standard();
        assert_eq!(chart.cylinder_radius(0), 0.0);
        let mut prev = 0.0;
        for k in 1..6 {
            let r = chart.cylinder_radius(k);
            assert!(r > prev && r < 1.0);
            assert!((chart.profile(r).unwrap() - TAU * f64::from(k)).abs() < 1e-9 * TAU);
            prev = r;
        }
    }

    #[test]
    fn leaf_embedding_geometry() {
        let chart = LeafChart::standard();
        let origin = leaf_embed(&chart, 0.0, 0.0);
        assert_eq!(origin.disk, (0.0, 0.0));
        assert_eq!(origin.height, 0.0);

        // far plane points approach the boundary torus
        let far = leaf_embed(&chart, 800.0, 600.0);
        let r = far.disk.0.hypot(far.disk.1);
        assert!(r > 0.999 && r < 1.0);

        // the k-th cut circle lands in the height-zero meridian disk, at
        // increasing radii below the marked boundary point
        let mut prev = 0.0;
        for k in 1..5 {
            let s = TAU * f64::from(k);
            for theta in [0.0, 1.0, PI, 4.4] {
                let p = leaf_embed(&chart, s * theta.cos(), s * theta.sin());
                let height_defect = wrap_angle(p.height);
                assert!(height_defect.abs() < 1e-9, "height {h}", h = p.height);
                let rad = p.disk.0.hypot(p.disk.1);
                assert!((rad - chart.cylinder_radius(k)).abs() < 1e-12);
            }
            assert!(chart.cylinder_radius(k) > prev);
            prev = chart.cylinder_radius(k);
        }
    }

    #[test]
    fn leaf_system_needs_a_periodic_base() {
        let aperiodic = PlanarField::new(|u, _| (u, 0.0), false).unwrap();
        assert!(leaf_system(&aperiodic, &LeafChart::standard()).is_err());
    }

    #[test]
    fn leaf_system_origin_is_a_source() {
        let sys = leaf_system(&torus_field(), &LeafChart::standard()).unwrap();
        assert_eq!(sys.eval(0.0, 0.0), (0.0, 0.0));
        assert_eq!(equilibrium_index(&sys, (0.0, 0.0), 0.3).unwrap(), 1);
        assert_eq!(classify_equilibrium(&sys, (0.0, 0.0)), EquilibriumKind::Source);
    }

    #[test]
    fn band_equilibria_have_the_expected_indices() {
        let chart = LeafChart::standard();
        let sys = leaf_system(&torus_field(), &chart).unwrap();
        let listed = leaf_equilibria(&chart, DEFAULT_BANDS);
        assert_eq!(listed.len(), 1 + 4 * DEFAULT_BANDS);
        for band in 0..DEFAULT_BANDS {
            let from = 1 + 4 * band;
            let four = &listed[from..from + 4];
            let mut indices = Vec::new();
            for (kind, p) in four {
                let idx = equilibrium_index(&sys, *p, 0.4).unwrap();
                let expected = match kind {
                    EquilibriumKind::Saddle => -1,
                    _ => 1,
                };
                assert_eq!(idx, expected, "band {band} at {p:?}");
                indices.push(idx);
            }
            indices.sort_unstable();
            assert_eq!(indices, [-1, -1, 1, 1]);
        }
    }

    #[test]
    fn leaf_system_is_smooth_across_band_boundaries() {
        let chart = LeafChart::standard();
        let sys = leaf_system(&torus_field(), &chart).unwrap();
        for k in 1..4 {
            let s = chart.band_width() * k as f64;
            for theta in [0.3f64, 2.0, 4.0] {
                let at = |r: f64| sys.eval(r * theta.cos(), r * theta.sin());
                // value continuity across the seam
                let h = 1e-7;
                let inner = at(s - h);
                let outer = at(s + h);
                assert!((inner.0 - outer.0).abs() < 1e-6, "value jump at band {k}");
                assert!((inner.1 - outer.1).abs() < 1e-6);
                // one-sided radial derivatives agree
                let h = 1e-5;
                let di = ((at(s - h).0 - at(s - 2.0 * h).0) / h, (at(s - h).1 - at(s - 2.0 * h).1) / h);
                let do_ = ((at(s + 2.0 * h).0 - at(s + h).0) / h, (at(s + 2.0 * h).1 - at(s + h).1) / h);
                assert!((di.0 - do_.0).abs() < 1e-3, "radial derivative jump at band {k}");
                assert!((di.1 - do_.1).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn bands_reproduce_the_torus_dynamics_through_the_chart() {
        let chart = LeafChart::standard();
        let base = torus_field();
        let sys = leaf_system(&base, &chart).unwrap();
        let w = chart.band_width();
        for k in 0..3 {
            for (theta, offset) in [(0.4f64, 0.9), (2.8, 3.9), (5.1, 5.5), (1.0, 0.2)] {
                let s = k as f64 * w + offset;
                if s < 0.1 * w {
                    continue;
                }
                let (x, y) = (s * theta.cos(), s * theta.sin());
                let (fx, fy) = sys.eval(x, y);
                // project back to chart rates: radial = dv, angular * s = du
                let (cu, cv) = (x / s, y / s);
                let radial = fx * cu + fy * cv;
                let tangential = -fx * cv + fy * cu;
                let (du, dv) = base.eval(theta, s - 0.5 * w);
                assert!((radial - dv).abs() < 1e-6, "radial at band {k} offset {offset}");
                assert!((tangential - s * du).abs() < 1e-6, "angular at band {k}");
            }
        }
    }

    fn reversed(f: &PlanarField) -> PlanarField {
        let f = f.clone();
        PlanarField::new(move |u, v| {
            let (x, y) = f.eval(u, v);
            (-x, -y)
        }, true)
        .unwrap()
    }

    #[test]
    fn connected_sum_indices_sum_to_minus_two() {
        let sys1 = torus_field();
        let sys2 = reversed(&sys1);
        let glued = connected_sum_field(&sys1, &sys2, 0.5).unwrap();
        assert_eq!(glued.remaining_equilibria().len(), 6);
        assert_eq!(glued.index_sum().unwrap(), -2);
    }

    #[test]
    fn connected_sum_validates_its_inputs() {
        let sys1 = torus_field();
        let not_reversed = torus_field();
        assert!(connected_sum_field(&sys1, &not_reversed, 0.5).is_err());
        let sys2 = reversed(&sys1);
        // clearance to the nearest saddle is pi
        assert!(connected_sum_field(&sys1, &sys2, PI).is_err());
        assert!(connected_sum_field(&sys1, &sys2, 0.0).is_err());
        assert!(connected_sum_field(&sys1, &sys2, 3.0).is_ok());
    }

    #[test]
    fn neck_flows_from_side_one_to_side_two() {
        let sys1 = torus_field();
        let sys2 = reversed(&sys1);
        let glued = connected_sum_field(&sys1, &sys2, 0.5).unwrap();
        for a in [-1.0, -0.9, 0.0, 0.9, 1.0] {
            let (through, swirl) = glued.eval(SumChart::Neck, (a, 1.3)).unwrap();
            assert!(through > 0.0, "through-flow at a = {a}");
            assert_eq!(swirl, 0.0);
        }
        assert!(glued.eval(SumChart::Neck, (1.5, 0.0)).is_err());
        // the first side points into the removed disk at its rim
        let rim = (glued.disk_radius(), 0.0);
        let (fx, _) = glued.eval(SumChart::Torus1, rim).unwrap();
        assert!(fx < 0.0);
        // and inside the disk evaluation is refused
        assert!(glued.eval(SumChart::Torus1, (0.1, 0.0)).is_err());
    }

    #[test]
    fn singular_line_is_recorded() {
        let sys1 = torus_field();
        let sys2 = reversed(&sys1);
        let glued = connected_sum_field(&sys1, &sys2, 0.5).unwrap();
        let line = glued.singular_line();
        assert!(!line.description.is_empty());
        let boundary = line.sample(0.0);
        assert!((boundary.disk.0.hypot(boundary.disk.1) - 1.0).abs() < 1e-12);
        let core = line.sample(1.0);
        assert_eq!(core.disk, (0.0, 0.0));
        assert_eq!(boundary.height, core.height);
    }

    #[test]
    fn gluing_data_is_validated() {
        assert!(matches!(
            HeegaardGluing::new(3, [[1, 0], [0, 1]]),
            Err(Error::UnsupportedGenus { genus: 3 })
        ));
        assert!(matches!(
            HeegaardGluing::new(1, [[2, 0], [0, 1]]),
            Err(Error::NotUnimodular { det: 2 })
        ));
        assert!(HeegaardGluing::new(1, [[0, 1], [1, 0]]).is_ok());
        assert!(HeegaardGluing::new(2, [[1, 1], [0, 1]]).is_ok());
    }

    #[test]
    fn identity_gluing_is_bitwise_inert() {
        let x2 = torus_field();
        let gluing = HeegaardGluing::new(1, [[1, 0], [0, 1]]).unwrap();
        let glued = heegaard_glue(&x2, &x2, &gluing).unwrap();
        assert_eq!(glued.boundary_residual, 0.0);
        for t in [0.0, 0.3, 0.5, 1.0] {
            for (u, v) in [(0.0, 0.0), (1.2, 4.0), (5.9, 2.2)] {
                let a = glued.collar.eval(t, u, v).unwrap();
                let b = x2.eval(u, v);
                assert_eq!(a.0.to_bits(), b.0.to_bits());
                assert_eq!(a.1.to_bits(), b.1.to_bits());
            }
        }
    }

    #[test]
    fn meridian_longitude_swap_on_a_constant_field() {
        let x2 = PlanarField::new(|_, _| (1.0, 0.0), true).unwrap();
        let x1 = PlanarField::new(|_, _| (0.0, 1.0), true).unwrap();
        let gluing = HeegaardGluing::new(1, [[0, 1], [1, 0]]).unwrap();
        let glued = heegaard_glue(&x1, &x2, &gluing).unwrap();
        assert!(glued.boundary_residual < 1e-15);
        let b = glued.collar.eval(1.0, 2.0, 3.0).unwrap();
        assert!((b.0 - 0.0).abs() < 1e-15 && (b.1 - 1.0).abs() < 1e-15);
        // t = 0 leaves the field untouched, bit for bit
        let inner = glued.collar.eval(0.0, 2.0, 3.0).unwrap();
        assert_eq!(inner.0.to_bits(), 1.0f64.to_bits());
        // the interpolation degenerates halfway along this collar
        assert!(matches!(
            glued.collar.eval(0.5, 2.0, 3.0),
            Err(Error::SingularInterpolation { .. })
        ));
        assert!(glued.collar.eval(1.2, 0.0, 0.0).is_err());
    }

    #[test]
    fn pullback_boundary_field_matches_to_tolerance() {
        let x2 = torus_field();
        let psi = [[2, 1], [1, 1]];
        let gluing = HeegaardGluing::new(1, psi).unwrap();
        // x1 = the pullback of x2 under psi, written out independently
        let x1 = PlanarField::new(
            move |u: f64, v: f64| {
                let pu = 2.0 * u + v;
                let pv = u + v;
                let (x, y) = (-pu.sin(), -pv.sin());
                // apply psi^{-1} = ((1, -1), (-1, 2)) to the vector
                (x - y, -x + 2.0 * y)
            },
            true,
        )
        .unwrap();
        let glued = heegaard_glue(&x1, &x2, &gluing).unwrap();
        assert!(glued.boundary_residual < 1e-9, "residual {:e}", glued.boundary_residual);
    }
}
