//! Numerical constructions of explicit dynamical systems on 3-manifolds.
//!
//! The library builds vector fields and flows on three families of spaces:
//!
//! * quotients of hyperbolic upper half-space `U^3` by groups of Mobius
//!   transformations, where vector fields are produced as quotients of
//!   weighted group sums (theta series) over a word ball ([`autoform`]),
//! * Euclidean boxes with side pairings (3-torus, solid Klein bottle),
//!   integrated with transparent wrap-around continuation ([`flow`]),
//! * glued manifolds: the two-tetrahedron ideal triangulation in the
//!   conformal ball model ([`ballmodel`]) and Reeb-foliated solid tori
//!   joined over Heegaard splittings ([`reeb`]).
//!
//! Points of `U^3` are represented as quaternions `x + y i + r j` with zero
//! `k` part ([`quaternion`]); the Mobius action, its derivative multiplier
//! and trace classification live in [`moebius`]; word enumeration, the word
//! ball and fundamental domains with side pairings in [`group`].
//!
//! All summations and enumerations follow a canonical order so that repeated
//! runs produce bit-identical results.

pub mod autoform;
pub mod ballmodel;
pub mod domain;
pub mod error;
pub mod flow;
pub mod group;
pub mod moebius;
pub mod presets;
pub mod quaternion;
pub mod reeb;
pub mod tolerance;

pub use error::Error;
pub use quaternion::{HPoint, Quaternion};
pub use tolerance::Tolerance;
