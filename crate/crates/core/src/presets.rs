//! Built-in worked systems.
//!
//! The lattice-scaling system lives on the upper half-space: its group is
//! generated by the horizontal translations of a triangular lattice (side 2,
//! spanned by `2` and `omega = 1 + sqrt(3) i`) together with maps combining
//! that lattice with the halving map `p -> p/2`. A fundamental domain for
//! the translations, cut to one lattice rhombus and floored by the
//! hemispheres its two ideal triangles subtend, ships with matching side
//! pairings: the two wall pairs are glued by the translations `2` and
//! `omega`, the rhombus diagonal is an interior wall shared by the two
//! cells, and the floors are absorbing boundary (no group element pairs a
//! hemisphere floor to another: translations move centers off the rhombus
//! and scalings change the radius).

use num_complex::Complex64;

use crate::domain::{Cell, Constraint, FundamentalDomain, PairingMap, Side, SidePairing, Space};
use crate::group::GroupPresentation;
use crate::moebius::MoebiusMap;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// The horizontal lattice vector `omega = 1 + sqrt(3) i`.
pub fn omega() -> Complex64 {
    Complex64::new(1.0, SQRT3)
}

fn z(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// The five generators of the lattice-scaling group, as stored matrices:
/// `t1 = ((1,-2),(0,2))`, `t2 = ((1,0),(0,2))`, `t3 = ((1,-1-sqrt(3)i),(0,2))`,
/// `t4 = ((1,3+sqrt(3)i),(0,2))`, `t5 = ((1,2),(0,1))`.
pub fn lattice_scaling_generators() -> Vec<MoebiusMap> {
    vec![
        MoebiusMap::new(z(1.0, 0.0), z(-2.0, 0.0), z(0.0, 0.0), z(2.0, 0.0)),
        MoebiusMap::new(z(1.0, 0.0), z(0.0, 0.0), z(0.0, 0.0), z(2.0, 0.0)),
        MoebiusMap::new(z(1.0, 0.0), z(-1.0, -SQRT3), z(0.0, 0.0), z(2.0, 0.0)),
        MoebiusMap::new(z(1.0, 0.0), z(3.0, SQRT3), z(0.0, 0.0), z(2.0, 0.0)),
        MoebiusMap::new(z(1.0, 0.0), z(2.0, 0.0), z(0.0, 0.0), z(1.0, 0.0)),
    ]
}

pub fn lattice_scaling_group() -> GroupPresentation {
    let labels = (1..=5).flat_map(|i| [format!("t{i}"), format!("t{i}'")]).collect();
    GroupPresentation::new(lattice_scaling_generators(), labels)
        .expect("preset generators are invertible and labels unique")
}

/// The rhombus fundamental domain: two ideal cells over the equilateral
/// triangles `(0, 2, omega)` and `(2, omega, 2 + omega)`, glued to itself by
/// the translations `2` (left/right walls) and `omega` (bottom/top walls),
/// with the diagonal wall shared between the cells and the two hemisphere
/// floors left as absorbing boundary.
pub fn lattice_scaling_domain() -> FundamentalDomain {
    let r_floor = 2.0 / SQRT3;
    let cell_a = Cell::new(
        vec![
            Constraint::half_space([0.0, -1.0, 0.0], 0.0),
            Constraint::half_space([-SQRT3, 1.0, 0.0], 0.0),
            Constraint::half_space([SQRT3, 1.0, 0.0], 2.0 * SQRT3),
            Constraint::Hemisphere { center: [1.0, SQRT3 / 3.0], radius: r_floor, inside: false },
        ],
        [[0.0, 2.0], [0.0, SQRT3], [0.2, 2.5]],
    );
    let cell_b = Cell::new(
        vec![
            Constraint::half_space([0.0, 1.0, 0.0], SQRT3),
            Constraint::half_space([SQRT3, -1.0, 0.0], 2.0 * SQRT3),
            Constraint::half_space([-SQRT3, -1.0, 0.0], -2.0 * SQRT3),
            Constraint::Hemisphere {
                center: [2.0, 2.0 * SQRT3 / 3.0],
                radius: r_floor,
                inside: false,
            },
        ],
        [[1.0, 3.0], [0.0, SQRT3], [0.2, 2.5]],
    );

    let moebius = |m: MoebiusMap| PairingMap::Moebius(m);
    let sides = vec![
        Side {
            label: "w-bottom".into(),
            cell: 0,
            constraint: 0,
            pairing: Some(SidePairing {
                partner: "w-top".into(),
                map: moebius(MoebiusMap::translation(-omega())),
            }),
        },
        Side {
            label: "w-left".into(),
            cell: 0,
            constraint: 1,
            pairing: Some(SidePairing {
                partner: "w-right".into(),
                map: moebius(MoebiusMap::translation(z(-2.0, 0.0))),
            }),
        },
        Side {
            label: "w-diag-a".into(),
            cell: 0,
            constraint: 2,
            pairing: Some(SidePairing {
                partner: "w-diag-b".into(),
                map: moebius(MoebiusMap::identity()),
            }),
        },
        Side { label: "floor-a".into(), cell: 0, constraint: 3, pairing: None },
        Side {
            label: "w-top".into(),
            cell: 1,
            constraint: 0,
            pairing: Some(SidePairing {
                partner: "w-bottom".into(),
                map: moebius(MoebiusMap::translation(omega())),
            }),
        },
        Side {
            label: "w-right".into(),
            cell: 1,
            constraint: 1,
            pairing: Some(SidePairing {
                partner: "w-left".into(),
                map: moebius(MoebiusMap::translation(z(2.0, 0.0))),
            }),
        },
        Side {
            label: "w-diag-b".into(),
            cell: 1,
            constraint: 2,
            pairing: Some(SidePairing {
                partner: "w-diag-a".into(),
                map: moebius(MoebiusMap::identity()),
            }),
        },
        Side { label: "floor-b".into(), cell: 1, constraint: 3, pairing: None },
    ];

    FundamentalDomain::new(Space::UpperHalfSpace, vec![cell_a, cell_b], sides)
        .expect("preset domain is well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moebius::TransformClass;
    use crate::Tolerance;

    fn mclose(a: &MoebiusMap, b: &MoebiusMap, tol: f64) -> bool {
        (a.a - b.a).norm() + (a.b - b.b).norm() + (a.c - b.c).norm() + (a.d - b.d).norm() <= tol
    }

    #[test]
    fn generator_classes() {
        let g = lattice_scaling_group();
        let tol = Tolerance::default();
        // scalings by 2 are hyperbolic, the lattice translation is parabolic
        assert_eq!(g.generator(1).classify(tol).unwrap(), TransformClass::Hyperbolic);
        assert_eq!(g.generator(4).classify(tol).unwrap(), TransformClass::Parabolic);
    }

    #[test]
    fn domain_validates_with_floor_boundaries() {
        let d = lattice_scaling_domain();
        let report = d.validate_side_pairing(100, 11);
        assert!(report.is_valid(), "{report}");
        assert_eq!(
            report.boundary_sides,
            vec!["floor-a".to_string(), "floor-b".to_string()]
        );
    }

    #[test]
    fn wall_pairings_are_group_elements() {
        let g = lattice_scaling_group();
        // the omega translation glueing bottom to top equals t5 t3^-1 t1
        let t5 = g.generator(4);
        let t3_inv = g.generator(2).matrix_inverse().unwrap();
        let t1 = g.generator(0);
        let prod = t5.compose(&t3_inv).compose(t1);
        assert!(mclose(&prod, &MoebiusMap::translation(omega()), 1e-12));
        // and the left-right glueing is t5 itself
        let d = lattice_scaling_domain();
        let right = d.side_index("w-right").unwrap();
        let crate::domain::PairingMap::Moebius(m) =
            &d.sides()[right].pairing.as_ref().unwrap().map
        else {
            panic!("wall pairings are Möbius maps")
        };
        assert!(mclose(m, t5, 1e-15));
    }

    #[test]
    fn domain_membership_matches_geometry() {
        let d = lattice_scaling_domain();
        // above the floor, inside the rhombus
        assert!(d.contains_closure([0.3, 0.2, 1.0]));
        assert!(d.contains_closure([2.0, 1.0, 1.2]));
        // below the floor hemisphere
        assert!(!d.contains_closure([1.0, 0.577, 0.5]));
        // outside the rhombus walls
        assert!(!d.contains_closure([2.3, 0.2, 1.0]));
        assert!(!d.contains_closure([-0.2, 0.2, 1.0]));
    }
}
