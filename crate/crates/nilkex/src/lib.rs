//! Multiparty key exchange over nilpotent groups, together with the
//! cryptanalysis that breaks it on unitriangular platforms.
//!
//! The crate has three layers:
//!
//! * group arithmetic — finitely generated nilpotent groups given by a
//!   nilpotent presentation ([`presentation`], [`collect`]) or as
//!   unitriangular matrix groups `UT(n, R)` over `Z`, `Z_m` or a prime
//!   field ([`matrix`]), unified behind [`group::Group`];
//! * the protocols — commutator multilinear maps ([`multilinear`]) and
//!   the two multiparty exchanges built on them ([`protocol`]);
//! * the attacks — power-search-problem solvers, the band reduction for
//!   `UT(n, R)`, p-group digit recovery, and end-to-end transcript
//!   breaks ([`attack`]).
//!
//! [`platform`] maps the textual platform specs used by the CLI and the
//! transcript format onto concrete groups.

pub mod attack;
pub mod collect;
pub mod group;
pub mod matrix;
pub mod multilinear;
pub mod platform;
pub mod presentation;
pub mod protocol;
pub mod ring;

pub use group::{Element, Group};
pub use matrix::{UTGroup, UTMatrix};
pub use presentation::{ExponentVector, NilpotentPresentation, Word};
pub use ring::RingDescriptor;
