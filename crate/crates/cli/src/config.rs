//! The run configuration schema and its conversions to library objects.
//!
//! One canonical structured-text layout: complex numbers are `[re, im]`
//! pairs, quaternions are `[w, x, y, z]` arrays, Mobius maps are four
//! complex pairs `[a, b, c, d]`. Every section is optional; named
//! scenarios fill sections with presets and explicit sections override
//! them wholesale. A file written by `--dump-config` reloads to the same
//! run, byte for byte in its outputs.

use serde::{Deserialize, Serialize};
use triflow::autoform::{QuaternionPoly, RationalMap};
use triflow::domain::{
    Cell, Constraint, FundamentalDomain, PairingMap, Side, SidePairing, Space,
};
use triflow::group::{GroupPresentation, Letter};
use triflow::moebius::MoebiusMap;
use triflow::Quaternion;

use crate::CliError;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covariance: Option<CovarianceConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrate: Option<IntegrateConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pendulum: Option<PendulumConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ball: Option<BallConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reeb: Option<ReebConfig>,
}

impl RunConfig {
    /// Section-wise overlay: sections present in `over` replace those in
    /// `base`; absent sections fall through.
    pub fn overlaid(base: RunConfig, over: RunConfig) -> RunConfig {
        RunConfig {
            scenario: over.scenario.or(base.scenario),
            seed: over.seed.or(base.seed),
            group: over.group.or(base.group),
            field: over.field.or(base.field),
            domain: over.domain.or(base.domain),
            covariance: over.covariance.or(base.covariance),
            integrate: over.integrate.or(base.integrate),
            pendulum: over.pendulum.or(base.pendulum),
            ball: over.ball.or(base.ball),
            reeb: over.reeb.or(base.reeb),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

/// Group generators as stored matrices, four complex pairs each, with two
/// labels per generator (the plain name and its primed inverse).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroupConfig {
    pub generators: Vec<[[f64; 2]; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl Default for GroupConfig {
    fn default() -> Self {
        GroupConfig { generators: Vec::new(), labels: None }
    }
}

/// The automorphic field: series weight, word-ball radius, and the two
/// H polynomials as quaternion coefficient arrays (constant term first).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    pub m: u32,
    pub ball_radius: usize,
    pub h1: Vec<[f64; 4]>,
    pub h2: Vec<[f64; 4]>,
    /// Probe points for `field-eval`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 3]>>,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            m: 2,
            ball_radius: 2,
            h1: vec![[0.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0]],
            h2: vec![[1.0, 0.0, 0.0, 0.0]],
            points: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub space: String,
    pub cells: Vec<CellConfig>,
    pub sides: Vec<SideConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub constraints: Vec<ConstraintConfig>,
    pub sample_box: [[f64; 2]; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConstraintConfig {
    /// `dot(normal, x) <= offset`; the normal is stored as given.
    HalfSpace { normal: [f64; 3], offset: f64 },
    Hemisphere { center: [f64; 2], radius: f64, inside: bool },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideConfig {
    pub label: String,
    pub cell: usize,
    pub constraint: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partner: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<MapConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapConfig {
    Moebius { matrix: [[f64; 2]; 4] },
    Euclidean { linear: [[f64; 3]; 3], translation: [f64; 3] },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CovarianceConfig {
    pub radii: Vec<usize>,
    pub points: usize,
    pub generator: String,
}

impl Default for CovarianceConfig {
    fn default() -> Self {
        CovarianceConfig { radii: vec![2, 4, 6], points: 10, generator: "t2".to_string() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrateConfig {
    pub t_end: f64,
    pub start: [f64; 4],
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: u64,
    pub face_tol: f64,
    pub equilibrium_tol: f64,
    pub projection: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svg: Option<String>,
}

impl Default for IntegrateConfig {
    fn default() -> Self {
        IntegrateConfig {
            t_end: 2.0,
            start: [0.3, 0.2, 1.0, 0.0],
            rtol: 1e-9,
            atol: 1e-9,
            max_steps: 1_000_000,
            face_tol: 1e-10,
            equilibrium_tol: 1e-12,
            projection: "xy".to_string(),
            out: None,
            svg: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PendulumConfig {
    pub k: f64,
    pub g_over_l: f64,
    pub t_end: f64,
    /// Absorbing truncation of the momentum coordinate.
    pub x2_max: f64,
    pub start: [f64; 4],
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: u64,
    pub projection: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svg: Option<String>,
}

impl Default for PendulumConfig {
    fn default() -> Self {
        PendulumConfig {
            k: 0.0,
            g_over_l: 9.8,
            t_end: 100.0,
            x2_max: 10.0,
            start: [0.0, 6.5, 0.0, 0.0],
            rtol: 1e-9,
            atol: 1e-9,
            max_steps: 2_000_000,
            projection: "x1x2".to_string(),
            out: None,
            svg: None,
        }
    }
}

/// The two-tetrahedron complex: the face pairing table as
/// `[target_face, [corr0, corr1, corr2]]` rows, one per source face.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BallConfig {
    pub pairing: Vec<(usize, [usize; 3])>,
}

impl Default for BallConfig {
    fn default() -> Self {
        let table = triflow::ballmodel::FacePairing::figure_eight().table;
        BallConfig { pairing: table.iter().map(|&(f, c)| (f, c)).collect() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReebConfig {
    /// Which system `reeb indices` reports on: "torus" or "genus2".
    pub system: String,
    /// Winding probe circle radius.
    pub probe_radius: f64,
    /// Removed-disk radius of the connected sum.
    pub rho: f64,
    pub genus: u8,
    /// Boundary gluing matrix on the angle coordinates.
    pub psi: [[i64; 2]; 2],
    /// Collar depths sampled by `reeb glue`.
    pub collar_times: Vec<f64>,
    /// Grid resolution of the exported field tables.
    pub grid: usize,
}

impl Default for ReebConfig {
    fn default() -> Self {
        ReebConfig {
            system: "torus".to_string(),
            probe_radius: 0.1,
            rho: 0.5,
            genus: 1,
            psi: [[0, 1], [1, 0]],
            collar_times: vec![0.0, 0.25, 0.75, 1.0],
            grid: 4,
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn build_group(gc: &GroupConfig) -> Result<GroupPresentation, CliError> {
    if gc.generators.is_empty() {
        return Err(config_err("the group section lists no generators"));
    }
    let gens: Vec<MoebiusMap> =
        gc.generators.iter().map(|e| MoebiusMap::from_entries(*e)).collect();
    let built = match &gc.labels {
        Some(labels) => GroupPresentation::new(gens, labels.clone()),
        None => GroupPresentation::with_default_labels(gens),
    };
    built.map_err(|e| config_err(format!("invalid group: {e}")))
}

pub fn group_to_config(g: &GroupPresentation) -> GroupConfig {
    let mut generators = Vec::new();
    let mut labels = Vec::new();
    for i in 0..g.generator_count() {
        let m = g.generator(i);
        generators.push([
            [m.a.re, m.a.im],
            [m.b.re, m.b.im],
            [m.c.re, m.c.im],
            [m.d.re, m.d.im],
        ]);
        for exp in [1, -1] {
            let l = Letter::new(i, exp).expect("unit exponent");
            labels.push(g.label(l).to_string());
        }
    }
    GroupConfig { generators, labels: Some(labels) }
}

pub fn build_polynomial(coeffs: &[[f64; 4]], name: &str) -> Result<RationalMap, CliError> {
    if coeffs.is_empty() {
        return Err(config_err(format!("{name} needs at least one coefficient")));
    }
    let qs: Vec<Quaternion> =
        coeffs.iter().map(|c| Quaternion::new(c[0], c[1], c[2], c[3])).collect();
    Ok(RationalMap::polynomial(QuaternionPoly::new(qs)))
}

pub fn build_domain(dc: &DomainConfig) -> Result<FundamentalDomain, CliError> {
    let space = match dc.space.as_str() {
        "upper-half-space" => Space::UpperHalfSpace,
        "euclidean" => Space::Euclidean,
        other => {
            return Err(config_err(format!(
                "unknown space {other:?} (expected \"upper-half-space\" or \"euclidean\")"
            )))
        }
    };
    let cells = dc
        .cells
        .iter()
        .map(|c| {
            let constraints = c
                .constraints
                .iter()
                .map(|k| match *k {
                    ConstraintConfig::HalfSpace { normal, offset } => {
                        Constraint::HalfSpace { normal, offset }
                    }
                    ConstraintConfig::Hemisphere { center, radius, inside } => {
                        Constraint::Hemisphere { center, radius, inside }
                    }
                })
                .collect();
            Cell::new(constraints, c.sample_box)
        })
        .collect();
    let sides = dc
        .sides
        .iter()
        .map(|s| {
            let pairing = match (&s.partner, &s.map) {
                (Some(partner), Some(map)) => Some(SidePairing {
                    partner: partner.clone(),
                    map: match *map {
                        MapConfig::Moebius { matrix } => {
                            PairingMap::Moebius(MoebiusMap::from_entries(matrix))
                        }
                        MapConfig::Euclidean { linear, translation } => {
                            PairingMap::Euclidean { linear, translation }
                        }
                    },
                }),
                (None, None) => None,
                _ => {
                    return Err(config_err(format!(
                        "side {:?} must set partner and map together",
                        s.label
                    )))
                }
            };
            Ok(Side { label: s.label.clone(), cell: s.cell, constraint: s.constraint, pairing })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    FundamentalDomain::new(space, cells, sides)
        .map_err(|e| config_err(format!("invalid domain: {e}")))
}

pub fn domain_to_config(d: &FundamentalDomain) -> DomainConfig {
    let space = match d.space() {
        Space::UpperHalfSpace => "upper-half-space",
        Space::Euclidean => "euclidean",
    }
    .to_string();
    let cells = d
        .cells()
        .iter()
        .map(|c| CellConfig {
            constraints: c
                .constraints
                .iter()
                .map(|k| match *k {
                    Constraint::HalfSpace { normal, offset } => {
                        ConstraintConfig::HalfSpace { normal, offset }
                    }
                    Constraint::Hemisphere { center, radius, inside } => {
                        ConstraintConfig::Hemisphere { center, radius, inside }
                    }
                })
                .collect(),
            sample_box: c.sample_box,
        })
        .collect();
    let sides = d
        .sides()
        .iter()
        .map(|s| {
            let (partner, map) = match &s.pairing {
                None => (None, None),
                Some(p) => (
                    Some(p.partner.clone()),
                    Some(match &p.map {
                        PairingMap::Moebius(m) => MapConfig::Moebius {
                            matrix: [
                                [m.a.re, m.a.im],
                                [m.b.re, m.b.im],
                                [m.c.re, m.c.im],
                                [m.d.re, m.d.im],
                            ],
                        },
                        PairingMap::Euclidean { linear, translation } => {
                            MapConfig::Euclidean { linear: *linear, translation: *translation }
                        }
                    }),
                ),
            };
            SideConfig {
                label: s.label.clone(),
                cell: s.cell,
                constraint: s.constraint,
                partner,
                map,
            }
        })
        .collect();
    DomainConfig { space, cells, sides }
}
