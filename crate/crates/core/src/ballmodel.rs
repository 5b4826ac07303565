//! Gluing two ideal tetrahedra in the conformal ball model.
//!
//! The complex consists of two regular ideal tetrahedra inscribed in the
//! unit sphere, with each face of the second glued onto the matching face
//! of the first by an isometry of the ball. Faces are indexed by the
//! opposite vertex: face `i` is the triangle spanned by the other three
//! vertices, listed in ascending vertex order. The first tetrahedron's
//! faces are labeled A..D, the second's A'..D'.
//!
//! Properness of the gluing is checked combinatorially by walking edge
//! cycles and metrically by summing dihedral angles around each cycle:
//! a cycle of total angle 2 pi closes up smoothly in the quotient.
//!
//! Isometries of the ball are represented through the half-space model:
//! the inversion `eta(p) = 2 (p + e3) / |p + e3|^2 - e3` exchanges the unit
//! ball and the upper half-space (it is an involution), so a ball isometry
//! is `eta . M . eta` for a Moebius map `M` of the half-space. A face
//! pairing determines its isometry uniquely through the three ideal vertex
//! correspondences, pinned down on the boundary sphere by cross ratios.

use crate::error::{Error, Result};
use crate::moebius::{ExtendedPoint, MoebiusMap};
use crate::quaternion::{HPoint, Quaternion};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Face `i` is opposite vertex `i`; vertices listed in ascending order.
pub const FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

/// The six edges as ascending vertex pairs.
pub const EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

fn edge_index(e: [usize; 2]) -> usize {
    EDGES.iter().position(|&d| d == e).expect("ascending vertex pair")
}

/// The two faces containing an edge: the complement of its endpoints.
fn edge_faces(e: [usize; 2]) -> [usize; 2] {
    let mut out = [0; 2];
    let mut k = 0;
    for f in 0..4 {
        if f != e[0] && f != e[1] {
            out[k] = f;
            k += 1;
        }
    }
    out
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Face label in the report convention: A..D on the first tetrahedron,
/// A'..D' on the second.
pub fn face_label(tet: usize, face: usize) -> String {
    let base = ["A", "B", "C", "D"][face];
    if tet == 0 {
        base.to_string()
    } else {
        format!("{base}'")
    }
}

/// An ideal tetrahedron in the ball: four vertices on the unit sphere with
/// all pairwise angles equal.
#[derive(Clone, Debug)]
pub struct IdealTetrahedron {
    vertices: [[f64; 3]; 4],
}

impl IdealTetrahedron {
    /// Validates unit length, distinctness, and regularity (all pairwise
    /// dot products equal).
    pub fn regular(vertices: [[f64; 3]; 4]) -> Result<IdealTetrahedron> {
        for (i, v) in vertices.iter().enumerate() {
            if (norm(*v) - 1.0).abs() > 1e-12 {
                return Err(Error::Invalid(format!(
                    "vertex {i} is not on the unit sphere (|v| = {})",
                    norm(*v)
                )));
            }
        }
        let mut dots = Vec::new();
        for i in 0..4 {
            for j in (i + 1)..4 {
                if norm(sub(vertices[i], vertices[j])) < 1e-9 {
                    return Err(Error::Invalid(format!("vertices {i} and {j} coincide")));
                }
                dots.push(dot(vertices[i], vertices[j]));
            }
        }
        let spread = dots.iter().fold(f64::NEG_INFINITY, |m, d| m.max(*d))
            - dots.iter().fold(f64::INFINITY, |m, d| m.min(*d));
        if spread > 1e-9 {
            return Err(Error::Invalid(format!(
                "tetrahedron is not regular (vertex angle spread {spread:e})"
            )));
        }
        Ok(IdealTetrahedron { vertices })
    }

    pub fn vertices(&self) -> &[[f64; 3]; 4] {
        &self.vertices
    }

    /// Center and radius of the sphere orthogonal to the unit sphere through
    /// the three vertices of a face: the face's geodesic plane. Orthogonality
    /// forces `<v, c> = 1` for each vertex `v`, a linear system for `c`.
    pub fn face_sphere(&self, face: usize) -> Result<([f64; 3], f64)> {
        let [a, b, c] = FACES[face].map(|i| self.vertices[i]);
        let cr = [
            [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]],
            [b[1] * c[2] - b[2] * c[1], b[2] * c[0] - b[0] * c[2], b[0] * c[1] - b[1] * c[0]],
            [c[1] * a[2] - c[2] * a[1], c[2] * a[0] - c[0] * a[2], c[0] * a[1] - c[1] * a[0]],
        ];
        let det = dot(cr[0], c);
        if det.abs() < 1e-12 {
            return Err(Error::Invalid(format!(
                "face {face} vertices lie on a great circle; its plane is not a cap"
            )));
        }
        // Cramer: c = (cr[1] + cr[2] + cr[0]) / det with rows matching the
        // constant vector (1, 1, 1)
        let center = [
            (cr[1][0] + cr[2][0] + cr[0][0]) / det,
            (cr[1][1] + cr[2][1] + cr[0][1]) / det,
            (cr[1][2] + cr[2][2] + cr[0][2]) / det,
        ];
        let r2 = dot(center, center) - 1.0;
        if r2 <= 0.0 {
            return Err(Error::Invalid(format!("face {face} sphere is not orthogonal-real")));
        }
        Ok((center, r2.sqrt()))
    }

    /// Interior dihedral angle along an edge, from the angle between the two
    /// face spheres meeting there.
    pub fn dihedral_angle(&self, edge: [usize; 2]) -> Result<f64> {
        let [f, g] = edge_faces(edge);
        let (c1, r1) = self.face_sphere(f)?;
        let (c2, r2) = self.face_sphere(g)?;
        let d2 = dot(sub(c1, c2), sub(c1, c2));
        let cos = (d2 - r1 * r1 - r2 * r2) / (2.0 * r1 * r2);
        Ok(cos.clamp(-1.0, 1.0).acos())
    }
}

/// How the faces of the second tetrahedron glue onto the first.
///
/// `table[f] = (g, corr)` glues face `f` of the second tetrahedron onto face
/// `g` of the first; position `k` in the source face's ascending vertex list
/// matches position `corr[k]` in the target's.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FacePairing {
    pub table: [(usize, [usize; 3]); 4],
}

fn validate_table(table: &[(usize, [usize; 3]); 4]) -> Result<()> {
    let mut hit = [0usize; 4];
    for (f, (g, corr)) in table.iter().enumerate() {
        if *g > 3 {
            return Err(Error::InvalidPairing { reason: format!("face index {g} out of range") });
        }
        hit[*g] += 1;
        let mut seen = [false; 3];
        for &p in corr {
            if p > 2 || seen[p] {
                return Err(Error::InvalidPairing {
                    reason: format!("correspondence {corr:?} on face {f} is not a permutation"),
                });
            }
            seen[p] = true;
        }
    }
    if let Some(g) = hit.iter().position(|&n| n != 1) {
        return Err(Error::InvalidPairing {
            reason: format!("face {g} of the first tetrahedron is glued {} times", hit[g]),
        });
    }
    Ok(())
}

impl FacePairing {
    pub fn new(table: [(usize, [usize; 3]); 4]) -> Result<FacePairing> {
        validate_table(&table)?;
        Ok(FacePairing { table })
    }

    /// The gluing that assembles the two tetrahedra into the figure-eight
    /// knot complement: A'..D' onto A..D, with the vertex correspondences
    /// chosen so the twelve edges fall into two cycles of six. Chosen as the
    /// lexicographically least such table, so it is reproducible from the
    /// cycle condition alone.
    pub fn figure_eight() -> FacePairing {
        FacePairing {
            table: [
                (0, [0, 1, 2]),
                (1, [1, 0, 2]),
                (2, [1, 0, 2]),
                (3, [1, 2, 0]),
            ],
        }
    }
}

/// Ideal tetrahedra of the figure-eight complex: the standard inscribed
/// tetrahedron and a second labeled copy, with the canonical face pairing.
pub fn build_complex() -> (IdealTetrahedron, IdealTetrahedron, FacePairing) {
    let s = 1.0 / 3f64.sqrt();
    let vertices = [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
    let t1 = IdealTetrahedron::regular(vertices).expect("regular by construction");
    let t2 = t1.clone();
    (t1, t2, FacePairing::figure_eight())
}

/// One cycle of edge identifications: the `(tetrahedron, edge)` instances
/// visited walking around a single edge of the quotient, in fan order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeClass {
    pub members: Vec<(usize, [usize; 2])>,
}

/// A corner: standing on `edge` of tetrahedron `tet`, about to cross `face`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Corner {
    tet: usize,
    edge: usize,
    face: usize,
}

/// Maps an edge of a face through a vertex correspondence.
fn map_edge(src_face: usize, dst_face: usize, corr: [usize; 3], e: [usize; 2]) -> [usize; 2] {
    let src = FACES[src_face];
    let dst = FACES[dst_face];
    let pos = |v: usize| src.iter().position(|&u| u == v).expect("edge endpoint on face");
    let mut out = [dst[corr[pos(e[0])]], dst[corr[pos(e[1])]]];
    out.sort_unstable();
    out
}

fn invert_corr(corr: [usize; 3]) -> [usize; 3] {
    let mut inv = [0; 3];
    for (k, &p) in corr.iter().enumerate() {
        inv[p] = k;
    }
    inv
}

/// Follows every edge identification to closure and groups the twelve edge
/// instances into cycles. Errors if the table does not glue each face
/// exactly once or a cycle fails to close.
pub fn edge_cycles(pairing: &FacePairing) -> Result<Vec<EdgeClass>> {
    validate_table(&pairing.table)?;
    // table is a bijection, so the reverse lookup is total
    let mut reverse = [(0usize, [0usize; 3]); 4];
    for (f, (g, corr)) in pairing.table.iter().enumerate() {
        reverse[*g] = (f, invert_corr(*corr));
    }
    let glue = |c: Corner| -> Corner {
        let (dst_face, corr) = if c.tet == 1 {
            pairing.table[c.face]
        } else {
            reverse[c.face]
        };
        let e = map_edge(c.face, dst_face, corr, EDGES[c.edge]);
        Corner { tet: 1 - c.tet, edge: edge_index(e), face: dst_face }
    };
    let pivot = |c: Corner| -> Corner {
        let [f, g] = edge_faces(EDGES[c.edge]);
        Corner { face: if c.face == f { g } else { f }, ..c }
    };

    let mut visited = [[[false; 2]; 6]; 2];
    let slot = |c: Corner| -> usize {
        let [f, _] = edge_faces(EDGES[c.edge]);
        usize::from(c.face != f)
    };

    let mut classes = Vec::new();
    for tet in 0..2 {
        for edge in 0..6 {
            for s in 0..2 {
                if visited[tet][edge][s] {
                    continue;
                }
                let start = Corner { tet, edge, face: edge_faces(EDGES[edge])[s] };
                let mut members = Vec::new();
                let mut cur = start;
                loop {
                    members.push((cur.tet, EDGES[cur.edge]));
                    // both corners of this instance are consumed by the
                    // visit: one as the exit, the pivot image on arrival
                    visited[cur.tet][cur.edge][slot(cur)] = true;
                    visited[cur.tet][cur.edge][1 - slot(cur)] = true;
                    cur = pivot(glue(cur));
                    if cur == start {
                        break;
                    }
                    if members.len() > 24 {
                        return Err(Error::InvalidPairing {
                            reason: "edge cycle does not close".to_string(),
                        });
                    }
                }
                classes.push(EdgeClass { members });
            }
        }
    }
    Ok(classes)
}

/// Angle audit of one edge cycle.
#[derive(Clone, Debug)]
pub struct ClassReport {
    pub length: usize,
    pub angle_sum: f64,
    pub proper: bool,
}

/// Properness report: every cycle must close up with total angle 2 pi.
#[derive(Clone, Debug)]
pub struct DihedralReport {
    pub classes: Vec<ClassReport>,
}

impl DihedralReport {
    pub fn all_proper(&self) -> bool {
        self.classes.iter().all(|c| c.proper)
    }
}

impl std::fmt::Display for DihedralReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, c) in self.classes.iter().enumerate() {
            writeln!(
                f,
                "edge class {}: {} edges, angle sum {:.9} ({})",
                i,
                c.length,
                c.angle_sum,
                if c.proper { "proper" } else { "NOT 2 pi" }
            )?;
        }
        write!(f, "properness: {}", if self.all_proper() { "pass" } else { "fail" })
    }
}

/// Sums the geometric dihedral angles around each cycle and compares with
/// 2 pi (tolerance 1e-6).
pub fn dihedral_check(
    t1: &IdealTetrahedron,
    t2: &IdealTetrahedron,
    cycles: &[EdgeClass],
) -> Result<DihedralReport> {
    let mut classes = Vec::with_capacity(cycles.len());
    for cycle in cycles {
        let mut sum = 0.0;
        for &(tet, edge) in &cycle.members {
            let t = if tet == 0 { t1 } else { t2 };
            sum += t.dihedral_angle(edge)?;
        }
        classes.push(ClassReport {
            length: cycle.members.len(),
            angle_sum: sum,
            proper: (sum - 2.0 * PI).abs() < 1e-6,
        });
    }
    Ok(DihedralReport { classes })
}

/// A point of the boundary plane of the half-space model, allowing infinity.
#[derive(Clone, Copy, Debug)]
enum PlanePoint {
    Finite(Complex64),
    Infinity,
}

/// The inversion exchanging the unit ball and the upper half-space,
/// an involution singular only at `(0, 0, -1)`.
fn conjugation(p: [f64; 3]) -> Result<[f64; 3]> {
    let q = [p[0], p[1], p[2] + 1.0];
    let n2 = dot(q, q);
    if n2 < 1e-300 {
        return Err(Error::MapsToInfinity);
    }
    Ok([2.0 * q[0] / n2, 2.0 * q[1] / n2, 2.0 * q[2] / n2 - 1.0])
}

/// Differential of the inversion: conformal with factor `2 / |p + e3|^2`.
fn conjugation_differential(p: [f64; 3], v: [f64; 3]) -> Result<[f64; 3]> {
    let q = [p[0], p[1], p[2] + 1.0];
    let n2 = dot(q, q);
    if n2 < 1e-300 {
        return Err(Error::MapsToInfinity);
    }
    let s = 2.0 * dot(q, v) / n2;
    Ok([
        (2.0 / n2) * (v[0] - s * q[0]),
        (2.0 / n2) * (v[1] - s * q[1]),
        (2.0 / n2) * (v[2] - s * q[2]),
    ])
}

/// Boundary sphere to boundary plane under the conjugation.
fn sphere_to_plane(u: [f64; 3]) -> Result<PlanePoint> {
    if (norm(u) - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid(format!("point ({}, {}, {}) is not on the sphere", u[0], u[1], u[2])));
    }
    if norm(sub(u, [0.0, 0.0, -1.0])) < 1e-12 {
        return Ok(PlanePoint::Infinity);
    }
    let w = conjugation(u)?;
    Ok(PlanePoint::Finite(Complex64::new(w[0], w[1])))
}

fn plane_to_sphere(p: ExtendedPoint) -> Result<[f64; 3]> {
    match p {
        ExtendedPoint::Infinity => Ok([0.0, 0.0, -1.0]),
        ExtendedPoint::Finite(h) => conjugation([h.x, h.y, 0.0]),
    }
}

/// The Moebius map of the plane sending an ordered triple to `0, 1, inf`.
fn standard_triple(z: [PlanePoint; 3]) -> Result<MoebiusMap> {
    let infinities = z.iter().filter(|p| matches!(p, PlanePoint::Infinity)).count();
    if infinities > 1 {
        return Err(Error::Invalid("boundary triple contains a repeated point".to_string()));
    }
    let finite: Vec<Complex64> = z
        .iter()
        .filter_map(|p| match p {
            PlanePoint::Finite(c) => Some(*c),
            PlanePoint::Infinity => None,
        })
        .collect();
    for i in 0..finite.len() {
        for j in (i + 1)..finite.len() {
            if (finite[i] - finite[j]).norm() < 1e-12 * (1.0 + finite[i].norm()) {
                return Err(Error::Invalid("boundary triple contains a repeated point".to_string()));
            }
        }
    }
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    Ok(match z {
        [PlanePoint::Infinity, PlanePoint::Finite(z2), PlanePoint::Finite(z3)] => {
            MoebiusMap::new(zero, z2 - z3, one, -z3)
        }
        [PlanePoint::Finite(z1), PlanePoint::Infinity, PlanePoint::Finite(z3)] => {
            MoebiusMap::new(one, -z1, one, -z3)
        }
        [PlanePoint::Finite(z1), PlanePoint::Finite(z2), PlanePoint::Infinity] => {
            MoebiusMap::new(one, -z1, zero, z2 - z1)
        }
        [PlanePoint::Finite(z1), PlanePoint::Finite(z2), PlanePoint::Finite(z3)] => {
            let u = z2 - z3;
            let v = z2 - z1;
            MoebiusMap::new(u, -z1 * u, v, -z3 * v)
        }
        _ => unreachable!("at most one infinity"),
    })
}

/// An orientation-preserving isometry of the unit ball, stored as its
/// half-space conjugate.
#[derive(Clone, Debug)]
pub struct BallIsometry {
    half: MoebiusMap,
}

impl BallIsometry {
    /// The unique orientation-preserving isometry taking three boundary
    /// points to three boundary points, in order.
    pub fn from_boundary_triple(src: [[f64; 3]; 3], dst: [[f64; 3]; 3]) -> Result<BallIsometry> {
        let zs = [sphere_to_plane(src[0])?, sphere_to_plane(src[1])?, sphere_to_plane(src[2])?];
        let ws = [sphere_to_plane(dst[0])?, sphere_to_plane(dst[1])?, sphere_to_plane(dst[2])?];
        let s = standard_triple(zs)?;
        let t = standard_triple(ws)?;
        Ok(BallIsometry { half: t.matrix_inverse()?.compose(&s) })
    }

    pub fn half_space_map(&self) -> &MoebiusMap {
        &self.half
    }

    pub fn inverse(&self) -> BallIsometry {
        BallIsometry { half: self.half.inverse() }
    }

    /// Image of an interior point of the ball.
    pub fn apply(&self, x: [f64; 3]) -> Result<[f64; 3]> {
        let p = conjugation(x)?;
        let h = self.half.apply_interior(HPoint::new(p[0], p[1], p[2]))?;
        conjugation(h.coords())
    }

    /// Image of a boundary sphere point.
    pub fn apply_boundary(&self, u: [f64; 3]) -> Result<[f64; 3]> {
        let z = match sphere_to_plane(u)? {
            PlanePoint::Infinity => ExtendedPoint::Infinity,
            PlanePoint::Finite(c) => ExtendedPoint::finite(c.re, c.im, 0.0),
        };
        plane_to_sphere(self.half.apply(z))
    }

    /// Differential at an interior point applied to a tangent vector, by the
    /// chain rule through the half-space model.
    pub fn differential(&self, x: [f64; 3], v: [f64; 3]) -> Result<[f64; 3]> {
        let p = conjugation(x)?;
        let dv = conjugation_differential(x, v)?;
        let hp = HPoint::new(p[0], p[1], p[2]);
        let dw = self.half.differential(hp, Quaternion::new(dv[0], dv[1], dv[2], 0.0))?;
        let h = self.half.apply_interior(hp)?;
        conjugation_differential(h.coords(), [dw.w, dw.x, dw.y])
    }
}

/// The isometry realizing one entry of the pairing: the face `face` of the
/// second tetrahedron onto its partner face of the first.
pub fn face_isometry(
    t1: &IdealTetrahedron,
    t2: &IdealTetrahedron,
    pairing: &FacePairing,
    face: usize,
) -> Result<BallIsometry> {
    if face > 3 {
        return Err(Error::InvalidPairing { reason: format!("face index {face} out of range") });
    }
    let (g, corr) = pairing.table[face];
    let src = [0, 1, 2].map(|k| t2.vertices[FACES[face][k]]);
    let dst = [0, 1, 2].map(|k| t1.vertices[FACES[g][corr[k]]]);
    BallIsometry::from_boundary_triple(src, dst)
}

/// Field mismatch across one glued face pair.
#[derive(Clone, Debug)]
pub struct FaceMatch {
    pub source: String,
    pub target: String,
    pub residual: f64,
}

/// Field-matching report over all four glued face pairs.
#[derive(Clone, Debug)]
pub struct MatchReport {
    pub faces: Vec<FaceMatch>,
    pub max_residual: f64,
}

impl std::fmt::Display for MatchReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for m in &self.faces {
            writeln!(f, "{} -> {}: residual {:.3e}", m.source, m.target, m.residual)?;
        }
        write!(f, "max residual: {:.3e}", self.max_residual)
    }
}

/// A random point on the face's geodesic plane: a barycentric point of the
/// flat vertex triangle pushed onto the orthogonal sphere.
fn sample_face_point(
    t: &IdealTetrahedron,
    face: usize,
    rng: &mut impl Rng,
) -> Result<[f64; 3]> {
    let (c, rho) = t.face_sphere(face)?;
    let vs = FACES[face].map(|i| t.vertices[i]);
    let mut w = [0.0; 3];
    let mut total = 0.0;
    for wk in &mut w {
        *wk = rng.gen_range(0.15..1.0);
        total += *wk;
    }
    let mut q = [0.0; 3];
    for k in 0..3 {
        for d in 0..3 {
            q[d] += w[k] / total * vs[k][d];
        }
    }
    let d = sub(q, c);
    let n = norm(d);
    Ok([c[0] + rho * d[0] / n, c[1] + rho * d[1] / n, c[2] + rho * d[2] / n])
}

/// Checks whether two fields descend to the glued manifold: samples each
/// face of the second tetrahedron, pushes points and vectors through the
/// pairing isometry, and compares with the first field on the image face.
/// The residual is relative to the local field size; it is reported, not
/// judged.
pub fn match_fields<F1, F2>(
    f1: F1,
    f2: F2,
    t1: &IdealTetrahedron,
    t2: &IdealTetrahedron,
    pairing: &FacePairing,
    samples_per_face: usize,
    seed: u64,
) -> Result<MatchReport>
where
    F1: Fn([f64; 3]) -> [f64; 3],
    F2: Fn([f64; 3]) -> [f64; 3],
{
    validate_table(&pairing.table)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut faces = Vec::with_capacity(4);
    let mut overall: f64 = 0.0;
    for face in 0..4 {
        let iso = face_isometry(t1, t2, pairing, face)?;
        let mut worst: f64 = 0.0;
        for _ in 0..samples_per_face {
            let x = sample_face_point(t2, face, &mut rng)?;
            let y = iso.apply(x)?;
            let pushed = iso.differential(x, f2(x))?;
            let there = f1(y);
            let diff = norm(sub(pushed, there));
            worst = worst.max(diff / (1.0 + norm(there)));
        }
        faces.push(FaceMatch {
            source: face_label(1, face),
            target: face_label(0, pairing.table[face].0),
            residual: worst,
        });
        overall = overall.max(worst);
    }
    Ok(MatchReport { faces, max_residual: overall })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complex() -> (IdealTetrahedron, IdealTetrahedron, FacePairing) {
        build_complex()
    }

    #[test]
    fn vertices_are_regular() {
        let (t1, t2, _) = complex();
        for t in [&t1, &t2] {
            for i in 0..4 {
                assert!((norm(t.vertices()[i]) - 1.0).abs() < 1e-15);
                for j in (i + 1)..4 {
                    let d = dot(t.vertices()[i], t.vertices()[j]);
                    assert!((d + 1.0 / 3.0).abs() < 1e-15, "dot {d}");
                }
            }
        }
    }

    #[test]
    fn irregular_tetrahedra_are_rejected() {
        let s = 1.0 / 3f64.sqrt();
        let squashed = [[s, s, s], [s, -s, -s], [-s, s, -s], [0.0, 0.0, -1.0]];
        assert!(IdealTetrahedron::regular(squashed).is_err());
        let off = [[0.5, 0.5, 0.5], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
        assert!(IdealTetrahedron::regular(off).is_err());
    }

    #[test]
    fn pairing_covers_all_faces_once() {
        let (_, _, pairing) = complex();
        let mut hit = [false; 4];
        for (g, _) in pairing.table {
            assert!(!hit[g]);
            hit[g] = true;
        }
        assert!(hit.iter().all(|&h| h));
        assert!(FacePairing::new(pairing.table).is_ok());
    }

    #[test]
    fn non_permutation_correspondence_is_rejected() {
        let mut table = FacePairing::figure_eight().table;
        table[1].1 = [0, 0, 2];
        assert!(matches!(FacePairing::new(table), Err(Error::InvalidPairing { .. })));
    }

    #[test]
    fn two_cycles_of_six_partition_the_edges() {
        let (_, _, pairing) = complex();
        let classes = edge_cycles(&pairing).unwrap();
        assert_eq!(classes.len(), 2);
        let mut seen = std::collections::HashSet::new();
        for class in &classes {
            assert_eq!(class.members.len(), 6);
            for &m in &class.members {
                assert!(seen.insert(m), "edge {m:?} repeated");
            }
        }
        assert_eq!(seen.len(), 12);
    }

    #[test]
    fn double_gluing_a_face_is_an_invalid_pairing() {
        let mut table = FacePairing::figure_eight().table;
        table[1].0 = table[0].0;
        let raw = FacePairing { table };
        assert!(matches!(edge_cycles(&raw), Err(Error::InvalidPairing { .. })));
    }

    #[test]
    fn scrambled_correspondence_breaks_the_cycle_lengths() {
        let (t1, t2, good) = complex();
        let mut table = good.table;
        // swap two entries of one correspondence
        table[2].1.swap(0, 1);
        let scrambled = FacePairing { table };
        let classes = edge_cycles(&scrambled).unwrap();
        let lengths: Vec<usize> = classes.iter().map(|c| c.members.len()).collect();
        assert_ne!(lengths, vec![6, 6], "scramble left the cycles intact");
        let report = dihedral_check(&t1, &t2, &classes).unwrap();
        assert!(!report.all_proper());
    }

    #[test]
    fn dihedral_angle_is_pi_over_three() {
        let (t1, _, _) = complex();
        for e in EDGES {
            let a = t1.dihedral_angle(e).unwrap();
            assert!((a - PI / 3.0).abs() < 1e-9, "edge {e:?}: angle {a}");
        }
    }

    #[test]
    fn canonical_cycles_sum_to_two_pi() {
        let (t1, t2, pairing) = complex();
        let classes = edge_cycles(&pairing).unwrap();
        let report = dihedral_check(&t1, &t2, &classes).unwrap();
        assert!(report.all_proper());
        for c in &report.classes {
            assert_eq!(c.length, 6);
            assert!((c.angle_sum - 2.0 * PI).abs() < 1e-9);
        }
    }

    #[test]
    fn short_cycle_is_flagged() {
        let (t1, t2, _) = complex();
        let class = EdgeClass { members: vec![(0, [0, 1]); 5] };
        let report = dihedral_check(&t1, &t2, &[class]).unwrap();
        assert_eq!(report.classes[0].length, 5);
        assert!((report.classes[0].angle_sum - 5.0 * PI / 3.0).abs() < 1e-9);
        assert!(!report.all_proper());
        assert!(format!("{report}").contains("fail"));
    }

    #[test]
    fn pairing_isometries_carry_labeled_vertices() {
        let (t1, t2, pairing) = complex();
        for face in 0..4 {
            let iso = face_isometry(&t1, &t2, &pairing, face).unwrap();
            let (g, corr) = pairing.table[face];
            for k in 0..3 {
                let src = t2.vertices()[FACES[face][k]];
                let dst = t1.vertices()[FACES[g][corr[k]]];
                let img = iso.apply_boundary(src).unwrap();
                assert!(norm(sub(img, dst)) < 1e-9, "face {face} vertex {k}: {img:?} vs {dst:?}");
            }
        }
    }

    #[test]
    fn isometry_round_trips_through_its_inverse() {
        let (t1, t2, pairing) = complex();
        let iso = face_isometry(&t1, &t2, &pairing, 0).unwrap();
        let inv = iso.inverse();
        for x in [[0.2, 0.1, -0.3], [0.0, 0.0, 0.0], [-0.4, 0.35, 0.1]] {
            let y = iso.apply(x).unwrap();
            assert!(norm(y) < 1.0, "image left the ball");
            let back = inv.apply(y).unwrap();
            assert!(norm(sub(back, x)) < 1e-12, "{back:?} vs {x:?}");
        }
    }

    #[test]
    fn differential_matches_finite_differences() {
        let (t1, t2, pairing) = complex();
        let iso = face_isometry(&t1, &t2, &pairing, 2).unwrap();
        let x = [0.15, -0.2, 0.1];
        let h = 1e-6;
        for v in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.3, -0.4, 0.55]] {
            let dv = iso.differential(x, v).unwrap();
            let xp = [x[0] + h * v[0], x[1] + h * v[1], x[2] + h * v[2]];
            let xm = [x[0] - h * v[0], x[1] - h * v[1], x[2] - h * v[2]];
            let yp = iso.apply(xp).unwrap();
            let ym = iso.apply(xm).unwrap();
            let fd = [(yp[0] - ym[0]) / (2.0 * h), (yp[1] - ym[1]) / (2.0 * h), (yp[2] - ym[2]) / (2.0 * h)];
            assert!(norm(sub(dv, fd)) < 1e-8, "analytic {dv:?} vs numeric {fd:?}");
        }
    }

    #[test]
    fn conjugation_is_an_involution() {
        for p in [[0.3, -0.2, 0.5], [0.0, 0.0, 0.0], [0.9, 0.0, 0.0]] {
            let q = conjugation(p).unwrap();
            let back = conjugation(q).unwrap();
            assert!(norm(sub(back, p)) < 1e-14);
        }
        // interior of the ball lands in the upper half-space
        assert!(conjugation([0.3, -0.2, 0.5]).unwrap()[2] > 0.0);
        // the sphere lands on the boundary plane
        let s = conjugation([0.0, 1.0, 0.0]).unwrap();
        assert!(s[2].abs() < 1e-15);
    }

    #[test]
    fn zero_fields_match_exactly() {
        let (t1, t2, pairing) = complex();
        let zero = |_: [f64; 3]| [0.0, 0.0, 0.0];
        let report = match_fields(zero, zero, &t1, &t2, &pairing, 8, 7).unwrap();
        assert_eq!(report.max_residual, 0.0);
    }

    #[test]
    fn pullback_field_matches_to_tolerance() {
        let (t1, t2, pairing) = complex();
        let f1 = |x: [f64; 3]| [0.3 - x[1], x[0] * x[2] + 0.1, x[1] - 0.2 * x[0]];
        // spheres carrying the four faces of the second tetrahedron
        let geometry: Vec<([f64; 3], f64, BallIsometry)> = (0..4)
            .map(|face| {
                let (c, rho) = t2.face_sphere(face).unwrap();
                (c, rho, face_isometry(&t1, &t2, &pairing, face).unwrap())
            })
            .collect();
        let f2 = |x: [f64; 3]| {
            let (_, _, iso) = geometry
                .iter()
                .find(|(c, rho, _)| (norm(sub(x, *c)) - rho).abs() < 1e-9)
                .expect("sample point on a face sphere");
            let y = iso.apply(x).unwrap();
            iso.inverse().differential(y, f1(y)).unwrap()
        };
        let report = match_fields(f1, f2, &t1, &t2, &pairing, 12, 3).unwrap();
        assert!(report.max_residual < 1e-9, "residual {:e}", report.max_residual);
    }

    #[test]
    fn unrelated_fields_report_large_residuals() {
        let (t1, t2, pairing) = complex();
        let f1 = |x: [f64; 3]| [x[1] + 0.4, -x[0], 0.2 * x[2] + 0.1];
        let f2 = |x: [f64; 3]| [-x[2], 0.7, x[0] - x[1]];
        let report = match_fields(f1, f2, &t1, &t2, &pairing, 10, 11).unwrap();
        assert!(report.max_residual > 0.05, "residual {:e}", report.max_residual);
        assert!(report.max_residual.is_finite());
        assert_eq!(report.faces.len(), 4);
    }

    #[test]
    fn match_report_is_deterministic() {
        let (t1, t2, pairing) = complex();
        let f1 = |x: [f64; 3]| [x[1], x[2], x[0]];
        let f2 = |x: [f64; 3]| [x[2], x[0], x[1]];
        let a = match_fields(f1, f2, &t1, &t2, &pairing, 6, 42).unwrap();
        let b = match_fields(f1, f2, &t1, &t2, &pairing, 6, 42).unwrap();
        assert_eq!(a.max_residual.to_bits(), b.max_residual.to_bits());
    }
}
