//! Fundamental domains built from convex cells, with labeled sides, side
//! pairings, and a sampling validator for the pairing conditions.
//!
//! A domain is a union of convex cells, each cut out by half-space and
//! hemisphere constraints. Every face that matters is declared as a labeled
//! side pointing at one constraint of one cell. Paired sides store the map
//! `tau` carrying the partner side onto this side; the partner stores the
//! inverse, so integration across a side applies the partner's map. Unpaired
//! sides are absorbing boundary.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::group::{GroupWord, Letter};
use crate::moebius::MoebiusMap;
use crate::quaternion::{HPoint, Quaternion};

/// Which geometry the coordinates live in. Upper half-space uses `(x, y, r)`
/// with `r > 0`; Euclidean space is unrestricted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    UpperHalfSpace,
    Euclidean,
}

/// One convex constraint. The signed value is negative inside, zero on the
/// face.
#[derive(Clone, Copy, Debug)]
pub enum Constraint {
    /// `dot(normal, x) <= offset`, with a unit normal.
    HalfSpace { normal: [f64; 3], offset: f64 },
    /// Distance to `(center, 0)` at least (`inside: false`) or at most
    /// (`inside: true`) `radius`. Centers sit on the `r = 0` plane, so these
    /// are hemispheres in the upper half-space.
    Hemisphere { center: [f64; 2], radius: f64, inside: bool },
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl Constraint {
    pub fn half_space(normal: [f64; 3], offset: f64) -> Constraint {
        let n = dot(normal, normal).sqrt();
        Constraint::HalfSpace {
            normal: [normal[0] / n, normal[1] / n, normal[2] / n],
            offset: offset / n,
        }
    }

    /// Signed violation of the constraint at `x`: negative inside, zero on
    /// the face, positive outside, in length units.
    pub fn value(&self, x: [f64; 3]) -> f64 {
        match *self {
            Constraint::HalfSpace { normal, offset } => dot(normal, x) - offset,
            Constraint::Hemisphere { center, radius, inside } => {
                let d = [x[0] - center[0], x[1] - center[1], x[2]];
                let dist = dot(d, d).sqrt();
                if inside {
                    dist - radius
                } else {
                    radius - dist
                }
            }
        }
    }

    /// Gradient of `value` at `x` (the outward unit direction, away from
    /// the cell).
    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        match *self {
            Constraint::HalfSpace { normal, .. } => normal,
            Constraint::Hemisphere { center, inside, .. } => {
                let d = [x[0] - center[0], x[1] - center[1], x[2]];
                let n = dot(d, d).sqrt().max(1e-300);
                let s = if inside { 1.0 } else { -1.0 };
                [s * d[0] / n, s * d[1] / n, s * d[2] / n]
            }
        }
    }

    /// Projects `x` onto the face surface (the zero set).
    fn project(&self, x: [f64; 3]) -> Option<[f64; 3]> {
        match *self {
            Constraint::HalfSpace { normal, offset } => {
                let v = dot(normal, x) - offset;
                Some([x[0] - v * normal[0], x[1] - v * normal[1], x[2] - v * normal[2]])
            }
            Constraint::Hemisphere { center, radius, .. } => {
                let d = [x[0] - center[0], x[1] - center[1], x[2]];
                let dist = dot(d, d).sqrt();
                if dist < 1e-9 {
                    return None;
                }
                let s = radius / dist;
                Some([center[0] + s * d[0], center[1] + s * d[1], s * d[2]])
            }
        }
    }
}

/// One convex cell: the intersection of its constraints. The sample box
/// bounds the region used for rejection sampling of faces and interior
/// points; it must contain the cell (or the portion of an unbounded cell
/// worth sampling).
#[derive(Clone, Debug)]
pub struct Cell {
    pub constraints: Vec<Constraint>,
    pub sample_box: [[f64; 2]; 3],
}

impl Cell {
    pub fn new(constraints: Vec<Constraint>, sample_box: [[f64; 2]; 3]) -> Cell {
        Cell { constraints, sample_box }
    }
}

/// An isometry used as a side pairing: a Möbius map of the upper half-space
/// or a Euclidean affine map.
#[derive(Clone, Debug)]
pub enum PairingMap {
    Moebius(MoebiusMap),
    Euclidean { linear: [[f64; 3]; 3], translation: [f64; 3] },
}

impl PairingMap {
    pub fn euclidean_translation(t: [f64; 3]) -> PairingMap {
        PairingMap::Euclidean {
            linear: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: t,
        }
    }

    pub fn identity(space: Space) -> PairingMap {
        match space {
            Space::UpperHalfSpace => PairingMap::Moebius(MoebiusMap::identity()),
            Space::Euclidean => PairingMap::euclidean_translation([0.0; 3]),
        }
    }

    pub fn apply(&self, x: [f64; 3]) -> Result<[f64; 3]> {
        match self {
            PairingMap::Moebius(m) => {
                let img = m.apply_interior(HPoint::from_coords(x))?;
                Ok(img.coords())
            }
            PairingMap::Euclidean { linear, translation } => Ok([
                dot(linear[0], x) + translation[0],
                dot(linear[1], x) + translation[1],
                dot(linear[2], x) + translation[2],
            ]),
        }
    }

    /// The differential at `x` applied to a tangent vector.
    pub fn differential(&self, x: [f64; 3], v: [f64; 3]) -> Result<[f64; 3]> {
        match self {
            PairingMap::Moebius(m) => {
                let dv = m.differential(
                    HPoint::from_coords(x),
                    Quaternion::new(v[0], v[1], v[2], 0.0),
                )?;
                Ok([dv.w, dv.x, dv.y])
            }
            PairingMap::Euclidean { linear, .. } => {
                Ok([dot(linear[0], v), dot(linear[1], v), dot(linear[2], v)])
            }
        }
    }

    /// Composition residual of `self` after `other` against the identity;
    /// used to check the inverse-pairing condition. Möbius maps compare
    /// projectively.
    fn inverse_residual(&self, other: &PairingMap) -> Option<f64> {
        match (self, other) {
            (PairingMap::Moebius(m1), PairingMap::Moebius(m2)) => {
                let p = m1.compose(m2);
                let n = p.normalize().ok()?;
                let dist = |s: f64| -> f64 {
                    ((n.a - s).norm_sqr()
                        + n.b.norm_sqr()
                        + n.c.norm_sqr()
                        + (n.d - s).norm_sqr())
                    .sqrt()
                };
                Some(dist(1.0).min(dist(-1.0)))
            }
            (
                PairingMap::Euclidean { linear: l1, translation: t1 },
                PairingMap::Euclidean { linear: l2, translation: t2 },
            ) => {
                let mut r: f64 = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        let mut s = 0.0;
                        for k in 0..3 {
                            s += l1[i][k] * l2[k][j];
                        }
                        let id = if i == j { 1.0 } else { 0.0 };
                        r = r.max((s - id).abs());
                    }
                    r = r.max((dot(l1[i], *t2) + t1[i]).abs());
                }
                Some(r)
            }
            _ => None,
        }
    }
}

/// A labeled face of one cell, optionally paired to a partner side.
#[derive(Clone, Debug)]
pub struct Side {
    pub label: String,
    pub cell: usize,
    pub constraint: usize,
    pub pairing: Option<SidePairing>,
}

/// The pairing data stored on a side: the partner's label and the map
/// carrying the partner side onto this one.
#[derive(Clone, Debug)]
pub struct SidePairing {
    pub partner: String,
    pub map: PairingMap,
}

/// Outcome of `validate_side_pairing`: violations are failures; unpaired
/// sides are reported, not failed.
#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub boundary_sides: Vec<String>,
    pub sides_checked: usize,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{} side(s) checked, {} violation(s), {} unpaired boundary side(s)",
            self.sides_checked,
            self.violations.len(),
            self.boundary_sides.len()
        )?;
        for v in &self.violations {
            writeln!(f, "  violation: {v}")?;
        }
        for b in &self.boundary_sides {
            writeln!(f, "  boundary: {b}")?;
        }
        Ok(())
    }
}

/// Tolerance for closure membership and face checks.
pub const FACE_TOL: f64 = 1e-7;

/// A fundamental domain: cells, labeled sides, and the pairing table.
/// Paired sides also get word letters (one generator index per side pair,
/// positive exponent on the side declared first), so trajectories can track
/// which translate of the domain they are in.
#[derive(Clone, Debug)]
pub struct FundamentalDomain {
    space: Space,
    cells: Vec<Cell>,
    sides: Vec<Side>,
    letters: Vec<Option<Letter>>,
    letter_labels: Vec<String>,
}

impl FundamentalDomain {
    pub fn new(space: Space, cells: Vec<Cell>, sides: Vec<Side>) -> Result<FundamentalDomain> {
        if cells.is_empty() {
            return Err(Error::Invalid("domain needs at least one cell".into()));
        }
        for (i, s) in sides.iter().enumerate() {
            if sides[..i].iter().any(|t| t.label == s.label) {
                return Err(Error::Invalid(format!("duplicate side label {:?}", s.label)));
            }
            if s.cell >= cells.len() {
                return Err(Error::Invalid(format!("side {:?} names cell {}", s.label, s.cell)));
            }
            if s.constraint >= cells[s.cell].constraints.len() {
                return Err(Error::Invalid(format!(
                    "side {:?} names constraint {} of cell {}",
                    s.label, s.constraint, s.cell
                )));
            }
            if let Some(p) = &s.pairing {
                if !sides.iter().any(|t| t.label == p.partner) {
                    return Err(Error::Invalid(format!(
                        "side {:?} pairs with unknown side {:?}",
                        s.label, p.partner
                    )));
                }
            }
        }

        let mut letters = vec![None; sides.len()];
        let mut letter_labels = Vec::new();
        for i in 0..sides.len() {
            if letters[i].is_some() {
                continue;
            }
            let Some(p) = &sides[i].pairing else { continue };
            let j = sides.iter().position(|t| t.label == p.partner).unwrap();
            let mutual = sides[j]
                .pairing
                .as_ref()
                .is_some_and(|q| q.partner == sides[i].label);
            if !mutual {
                continue;
            }
            let index = letter_labels.len();
            letter_labels.push(sides[i].label.clone());
            letters[i] = Some(Letter { index, exponent: 1 });
            if j != i {
                letters[j] = Some(Letter { index, exponent: -1 });
            }
        }

        Ok(FundamentalDomain { space, cells, sides, letters, letter_labels })
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn sides(&self) -> &[Side] {
        &self.sides
    }

    pub fn side_index(&self, label: &str) -> Option<usize> {
        self.sides.iter().position(|s| s.label == label)
    }

    pub fn partner_index(&self, side: usize) -> Option<usize> {
        let p = self.sides[side].pairing.as_ref()?;
        self.side_index(&p.partner)
    }

    /// The word letter recorded when a trajectory exits through this side.
    pub fn side_letter(&self, side: usize) -> Option<Letter> {
        self.letters[side]
    }

    /// Renders a domain word using side labels: the letter for a pair reads
    /// as the label of the side it was assigned on, primed for the inverse.
    pub fn word_label(&self, w: &GroupWord) -> String {
        if w.is_empty() {
            return "e".to_string();
        }
        w.letters()
            .iter()
            .map(|l| {
                let base = &self.letter_labels[l.index];
                if l.exponent > 0 {
                    base.clone()
                } else {
                    format!("{base}'")
                }
            })
            .collect::<Vec<_>>()
            .join(".")
    }

    pub fn constraint_value(&self, cell: usize, constraint: usize, x: [f64; 3]) -> f64 {
        self.cells[cell].constraints[constraint].value(x)
    }

    /// Value of the constraint backing one side (negative inside the cell).
    pub fn side_value(&self, side: usize, x: [f64; 3]) -> f64 {
        let s = &self.sides[side];
        self.constraint_value(s.cell, s.constraint, x)
    }

    /// Projects `x` onto the surface carrying one side. Returns `None` only
    /// for degenerate spots (a hemisphere's center).
    pub fn project_onto_side(&self, side: usize, x: [f64; 3]) -> Option<[f64; 3]> {
        let s = &self.sides[side];
        self.cells[s.cell].constraints[s.constraint].project(x)
    }

    /// Outward direction through one side at `x`.
    pub fn side_gradient(&self, side: usize, x: [f64; 3]) -> [f64; 3] {
        let s = &self.sides[side];
        self.cells[s.cell].constraints[s.constraint].gradient(x)
    }

    pub fn cell_contains(&self, cell: usize, x: [f64; 3], tol: f64) -> bool {
        let height_ok = match self.space {
            Space::UpperHalfSpace => x[2] >= -tol,
            Space::Euclidean => true,
        };
        height_ok && self.cells[cell].constraints.iter().all(|c| c.value(x) <= tol)
    }

    pub fn cell_of(&self, x: [f64; 3], tol: f64) -> Option<usize> {
        (0..self.cells.len()).find(|&i| self.cell_contains(i, x, tol))
    }

    /// Closure membership with the default face tolerance.
    pub fn contains_closure(&self, x: [f64; 3]) -> bool {
        self.cell_of(x, FACE_TOL).is_some()
    }

    /// Indices of the sides belonging to one cell.
    pub fn cell_sides(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        self.sides
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.cell == cell)
            .map(|(i, _)| i)
    }

    /// Rejection-samples points on a side: uniform draws from the cell's
    /// sample box projected onto the face, kept when the rest of the cell
    /// agrees. Returns fewer than `count` points only if the face is
    /// (nearly) degenerate inside the box.
    pub fn sample_side(&self, side: usize, count: usize, rng: &mut impl Rng) -> Vec<[f64; 3]> {
        let s = &self.sides[side];
        let cell = &self.cells[s.cell];
        let face = &cell.constraints[s.constraint];
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0usize;
        let budget = 2000 * count.max(1);
        while out.len() < count && attempts < budget {
            attempts += 1;
            let x = sample_box_point(&cell.sample_box, rng);
            let Some(p) = face.project(x) else { continue };
            let inside = cell
                .constraints
                .iter()
                .enumerate()
                .all(|(k, c)| k == s.constraint || c.value(p) <= 1e-12);
            let height_ok = self.space == Space::Euclidean || p[2] >= 0.0;
            if inside && height_ok && in_box(&cell.sample_box, p) {
                out.push(p);
            }
        }
        out
    }

    /// Rejection-samples strictly interior points of one cell.
    pub fn sample_cell_interior(
        &self,
        cell: usize,
        count: usize,
        rng: &mut impl Rng,
    ) -> Vec<[f64; 3]> {
        let c = &self.cells[cell];
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0usize;
        let budget = 2000 * count.max(1);
        while out.len() < count && attempts < budget {
            attempts += 1;
            let x = sample_box_point(&c.sample_box, rng);
            let height_ok = self.space == Space::Euclidean || x[2] > 1e-6;
            if height_ok && c.constraints.iter().all(|con| con.value(x) <= -1e-6) {
                out.push(x);
            }
        }
        out
    }

    /// Checks the pairing table on sampled face points: each paired side's
    /// map must carry the partner side onto it, the partner must store the
    /// inverse map, and the pairing must be an involution of side labels.
    /// Unpaired sides are reported as boundary, not as violations.
    pub fn validate_side_pairing(&self, samples_per_side: usize, seed: u64) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in &self.sides {
            report.sides_checked += 1;
            let Some(p) = &s.pairing else {
                report.boundary_sides.push(s.label.clone());
                continue;
            };
            let Some(j) = self.side_index(&p.partner) else {
                report
                    .violations
                    .push(format!("side {:?}: partner {:?} does not exist", s.label, p.partner));
                continue;
            };
            let partner = &self.sides[j];
            let Some(q) = &partner.pairing else {
                report.violations.push(format!(
                    "side {:?}: partner {:?} is unpaired",
                    s.label, partner.label
                ));
                continue;
            };
            if q.partner != s.label {
                report.violations.push(format!(
                    "side {:?}: partner {:?} points at {:?} instead",
                    s.label, partner.label, q.partner
                ));
                continue;
            }
            match p.map.inverse_residual(&q.map) {
                None => report.violations.push(format!(
                    "side {:?}: pairing map kinds differ from partner {:?}",
                    s.label, partner.label
                )),
                Some(r) if r > 1e-9 => report.violations.push(format!(
                    "side {:?}: partner {:?} does not store the inverse map (residual {r:.3e})",
                    s.label, partner.label
                )),
                Some(_) => {}
            }

            let samples = self.sample_side(j, samples_per_side, &mut rng);
            if samples.is_empty() {
                report
                    .violations
                    .push(format!("side {:?}: could not sample partner face", partner.label));
                continue;
            }
            let mut misses = 0usize;
            let mut worst: f64 = 0.0;
            for x in &samples {
                match p.map.apply(*x) {
                    Err(_) => {
                        misses += 1;
                        worst = f64::INFINITY;
                    }
                    Ok(y) => {
                        let on_face = self.constraint_value(s.cell, s.constraint, y).abs();
                        let in_cell = self.cell_contains(s.cell, y, FACE_TOL);
                        if on_face > FACE_TOL || !in_cell {
                            misses += 1;
                            worst = worst.max(on_face);
                        }
                    }
                }
            }
            if misses > 0 {
                report.violations.push(format!(
                    "side {:?}: {misses}/{} sampled partner points missed the face \
                     (worst deviation {worst:.3e})",
                    s.label,
                    samples.len()
                ));
            }
        }
        report
    }
}

fn sample_box_point(b: &[[f64; 2]; 3], rng: &mut impl Rng) -> [f64; 3] {
    [
        rng.gen_range(b[0][0]..=b[0][1]),
        rng.gen_range(b[1][0]..=b[1][1]),
        rng.gen_range(b[2][0]..=b[2][1]),
    ]
}

fn in_box(b: &[[f64; 2]; 3], x: [f64; 3]) -> bool {
    (0..3).all(|i| x[i] >= b[i][0] - 1e-9 && x[i] <= b[i][1] + 1e-9)
}

/// How one axis of a rectangular box is identified.
pub enum AxisPairing {
    /// Opposite faces glued by the translation along the axis.
    Translation,
    /// Faces left unpaired (absorbing boundary).
    Open,
    /// Explicit maps: the first carries the low face onto the high face and
    /// is stored on the high side; the second is its inverse.
    Custom(PairingMap, PairingMap),
}

/// Axis-aligned box domain with sides labeled `<axis>-` and `<axis>+` for
/// axis names `x`, `y`, `z`.
pub fn box_domain(
    min: [f64; 3],
    max: [f64; 3],
    axes: [AxisPairing; 3],
) -> Result<FundamentalDomain> {
    let mut constraints = Vec::new();
    let mut sides = Vec::new();
    let names = ["x", "y", "z"];
    for (axis, pairing) in axes.iter().enumerate() {
        let mut lo_normal = [0.0; 3];
        lo_normal[axis] = -1.0;
        let mut hi_normal = [0.0; 3];
        hi_normal[axis] = 1.0;
        let lo_idx = constraints.len();
        constraints.push(Constraint::half_space(lo_normal, -min[axis]));
        constraints.push(Constraint::half_space(hi_normal, max[axis]));
        let lo_label = format!("{}-", names[axis]);
        let hi_label = format!("{}+", names[axis]);
        let span = max[axis] - min[axis];
        let (lo_pair, hi_pair) = match pairing {
            AxisPairing::Open => (None, None),
            AxisPairing::Translation => {
                let mut shift = [0.0; 3];
                shift[axis] = span;
                let mut back = [0.0; 3];
                back[axis] = -span;
                (
                    Some(SidePairing {
                        partner: hi_label.clone(),
                        map: PairingMap::euclidean_translation(back),
                    }),
                    Some(SidePairing {
                        partner: lo_label.clone(),
                        map: PairingMap::euclidean_translation(shift),
                    }),
                )
            }
            AxisPairing::Custom(lo_to_hi, hi_to_lo) => (
                Some(SidePairing { partner: hi_label.clone(), map: hi_to_lo.clone() }),
                Some(SidePairing { partner: lo_label.clone(), map: lo_to_hi.clone() }),
            ),
        };
        sides.push(Side { label: lo_label, cell: 0, constraint: lo_idx, pairing: lo_pair });
        sides.push(Side { label: hi_label, cell: 0, constraint: lo_idx + 1, pairing: hi_pair });
    }
    let sample_box = [[min[0], max[0]], [min[1], max[1]], [min[2], max[2]]];
    FundamentalDomain::new(Space::Euclidean, vec![Cell::new(constraints, sample_box)], sides)
}
