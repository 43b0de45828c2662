//! Platform specs: the textual names that select a concrete group for the
//! CLI and for transcript files.
//!
//! Recognized forms:
//!
//! * `heisenberg`, `cyclic5`, `heisenberg-f3` — shipped presentation
//!   fixtures (searched in the fixture directory when one is given,
//!   falling back to the embedded copies);
//! * a path ending in `.npres` — presentation file on disk;
//! * `ut<n>z` — UT(n, Z); `ut<n>zmod:<m>` — UT(n, Z_m); `ut<n>fp:<p>` —
//!   UT(n, F_p);
//! * `heisenberg-fp:<p>` — the Heisenberg group over F_p as UT(3, F_p);
//! * `safeprime:<p>` — the order-q subgroup of Z_p^* for p = 2q + 1;
//! * `cyclic:<m>` — the cyclic group of order m as a presentation.

use num_bigint::{BigInt, BigUint};
use num_traits::One;
use std::path::Path;
use thiserror::Error;

use crate::attack;
use crate::group::{superdiagonal_bases, superdiagonal_ones, CyclicModGroup, Element, Group};
use crate::matrix::UTGroup;
use crate::presentation::{NilpotentPresentation, ParseError};
use crate::protocol::{ProtocolId, ProtocolParams, TranscriptFile};
use crate::ring::RingDescriptor;

pub const HEISENBERG_NPRES: &str = include_str!("../fixtures/heisenberg.npres");
pub const CYCLIC5_NPRES: &str = include_str!("../fixtures/cyclic5.npres");
pub const HEISENBERG_F3_NPRES: &str = include_str!("../fixtures/heisenberg-f3.npres");

#[derive(Debug, Error)]
pub enum PlatformError {
    #[error("unknown platform spec `{0}`")]
    UnknownSpec(String),
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("presentation error in `{origin}`: {source}")]
    Presentation { origin: String, source: ParseError },
    #[error("bad platform parameter in `{spec}`: {msg}")]
    BadParameter { spec: String, msg: String },
    #[error("{0}")]
    Invalid(String),
}

fn parse_uint(spec: &str, s: &str) -> Result<BigUint, PlatformError> {
    s.parse::<BigUint>()
        .map_err(|_| PlatformError::BadParameter {
            spec: spec.to_string(),
            msg: format!("`{s}` is not a positive integer"),
        })
}

fn shipped_presentation(name: &str) -> Option<&'static str> {
    match name {
        "heisenberg" => Some(HEISENBERG_NPRES),
        "cyclic5" => Some(CYCLIC5_NPRES),
        "heisenberg-f3" => Some(HEISENBERG_F3_NPRES),
        _ => None,
    }
}

fn parse_presentation(text: &str, origin: &str) -> Result<Group, PlatformError> {
    NilpotentPresentation::parse(text)
        .map(Group::presentation)
        .map_err(|source| PlatformError::Presentation {
            origin: origin.to_string(),
            source,
        })
}

/// Resolve a platform spec to a group. Named fixtures prefer
/// `<fixtures>/<name>.npres` when a fixture directory is supplied.
pub fn resolve_group(spec: &str, fixtures: Option<&Path>) -> Result<Group, PlatformError> {
    if let Some(embedded) = shipped_presentation(spec) {
        if let Some(dir) = fixtures {
            let path = dir.join(format!("{spec}.npres"));
            if path.exists() {
                let text = std::fs::read_to_string(&path).map_err(|source| PlatformError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                return parse_presentation(&text, &path.display().to_string());
            }
        }
        return parse_presentation(embedded, spec);
    }
    if spec.ends_with(".npres") || spec.contains('/') {
        let path = Path::new(spec);
        let text = std::fs::read_to_string(path).map_err(|source| PlatformError::Io {
            path: spec.to_string(),
            source,
        })?;
        return parse_presentation(&text, spec);
    }

    if let Some(rest) = spec.strip_prefix("heisenberg-fp:") {
        let p = parse_uint(spec, rest)?;
        let ring =
            RingDescriptor::prime_field(p).map_err(|e| PlatformError::Invalid(e.to_string()))?;
        let ut = UTGroup::new(3, ring).map_err(|e| PlatformError::Invalid(e.to_string()))?;
        return Ok(Group::unitriangular(ut));
    }
    if let Some(rest) = spec.strip_prefix("safeprime:") {
        let p = parse_uint(spec, rest)?;
        if !attack::is_safe_prime(&p) {
            return Err(PlatformError::Invalid(format!("{p} is not a safe prime")));
        }
        let q = (&p - BigUint::one()) / 2u32;
        let g = CyclicModGroup::with_subgroup_order(p, q)
            .map_err(|e| PlatformError::Invalid(e.to_string()))?;
        return Ok(Group::cyclic_mod(g));
    }
    if let Some(rest) = spec.strip_prefix("cyclic:") {
        // plain order, or p^k matching the filtration fixture naming
        let m = match rest.split_once('^') {
            Some((p, k)) => {
                let p = parse_uint(spec, p)?;
                let k: u32 = k.parse().map_err(|_| PlatformError::BadParameter {
                    spec: spec.to_string(),
                    msg: format!("`{k}` is not an exponent"),
                })?;
                p.pow(k)
            }
            None => parse_uint(spec, rest)?,
        };
        if m.is_one() {
            return Err(PlatformError::BadParameter {
                spec: spec.to_string(),
                msg: "order must be at least 2".to_string(),
            });
        }
        return Ok(Group::presentation(NilpotentPresentation::cyclic(m)));
    }
    if let Some(rest) = spec.strip_prefix("ut") {
        let (dim_part, ring) = if let Some((dim, m)) = rest.split_once("zmod:") {
            (
                dim,
                RingDescriptor::integers_mod(parse_uint(spec, m)?)
                    .map_err(|e| PlatformError::Invalid(e.to_string()))?,
            )
        } else if let Some((dim, p)) = rest.split_once("fp:") {
            (
                dim,
                RingDescriptor::prime_field(parse_uint(spec, p)?)
                    .map_err(|e| PlatformError::Invalid(e.to_string()))?,
            )
        } else if let Some(dim) = rest.strip_suffix('z') {
            (dim, RingDescriptor::Integers)
        } else {
            return Err(PlatformError::UnknownSpec(spec.to_string()));
        };
        let n: usize = dim_part.parse().map_err(|_| PlatformError::BadParameter {
            spec: spec.to_string(),
            msg: format!("`{dim_part}` is not a dimension"),
        })?;
        let ut = UTGroup::new(n, ring).map_err(|e| PlatformError::Invalid(e.to_string()))?;
        return Ok(Group::unitriangular(ut));
    }
    Err(PlatformError::UnknownSpec(spec.to_string()))
}

/// Smallest verified class bound for a presentation, up to n_gens.
fn presentation_class(pres: &NilpotentPresentation) -> Option<usize> {
    (1..=pres.n_gens()).find(|&c| pres.verify_class_at_most(c))
}

/// Standard protocol parameters for a platform. Validation may still
/// reject them (abelian platforms have no usable witness), which is the
/// intended failure mode.
pub fn default_params(group: Group, protocol: ProtocolId) -> Result<ProtocolParams, PlatformError> {
    match protocol {
        ProtocolId::I => {
            let bases = match &group {
                Group::Presentation(p) => {
                    let c = presentation_class(p).ok_or_else(|| {
                        PlatformError::Invalid(
                            "could not bound the nilpotency class of the presentation".to_string(),
                        )
                    })?;
                    let width = c.max(2).min(p.n_gens());
                    (0..width)
                        .map(|i| Element::Vector(p.generator_element(i)))
                        .collect()
                }
                Group::Unitriangular(u) => superdiagonal_bases(u),
                Group::CyclicMod(c) => {
                    let g = Element::Residue(BigUint::from(2u32) % c.modulus());
                    vec![g.clone(), g]
                }
            };
            Ok(ProtocolParams::I { group, bases })
        }
        ProtocolId::II => {
            let (anchor, base, arity) = match &group {
                Group::Presentation(p) => {
                    let c = presentation_class(p).ok_or_else(|| {
                        PlatformError::Invalid(
                            "could not bound the nilpotency class of the presentation".to_string(),
                        )
                    })?;
                    if p.n_gens() < 2 {
                        return Err(PlatformError::Invalid(
                            "protocol II needs at least two generators".to_string(),
                        ));
                    }
                    let anchor = Element::Vector(p.generator_element(0));
                    let base = Element::Vector(p.generator_element(1));
                    (anchor, base, c.saturating_sub(1).max(1))
                }
                Group::Unitriangular(u) => {
                    if u.dimension() < 3 {
                        return Err(PlatformError::Invalid(
                            "protocol II on UT(n, R) needs n >= 3".to_string(),
                        ));
                    }
                    let anchor = Element::Matrix(u.elementary(0, 1, BigInt::one()));
                    (anchor, superdiagonal_ones(u), u.dimension() - 2)
                }
                Group::CyclicMod(c) => {
                    let g = Element::Residue(BigUint::from(2u32) % c.modulus());
                    (g.clone(), g, 1)
                }
            };
            Ok(ProtocolParams::II {
                group,
                anchor,
                base,
                arity,
            })
        }
    }
}

/// Group for a transcript file: an inlined presentation wins, otherwise
/// the platform spec is resolved.
pub fn group_for_transcript(
    file: &TranscriptFile,
    fixtures: Option<&Path>,
) -> Result<Group, PlatformError> {
    if let Some(text) = &file.presentation {
        return parse_presentation(text, "inline presentation");
    }
    resolve_group(&file.platform, fixtures)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::run_exchange;

    #[test]
    fn shipped_fixtures_resolve_and_validate() {
        for spec in ["heisenberg", "cyclic5", "heisenberg-f3"] {
            let g = resolve_group(spec, None).unwrap();
            let Group::Presentation(p) = &g else {
                panic!("{spec} should be a presentation")
            };
            assert!(p.check_consistency().passed(), "{spec}");
        }
    }

    #[test]
    fn matrix_specs_resolve() {
        for (spec, n, token) in [
            ("ut3z", 3, "Z"),
            ("ut4z", 4, "Z"),
            ("ut3zmod:6", 3, "Zmod 6"),
            ("ut3fp:5", 3, "Fp 5"),
            ("heisenberg-fp:3", 3, "Fp 3"),
        ] {
            let g = resolve_group(spec, None).unwrap();
            let Group::Unitriangular(u) = &g else {
                panic!("{spec} should be a matrix platform")
            };
            assert_eq!(u.dimension(), n);
            assert_eq!(u.ring().token(), token);
        }
        assert!(resolve_group("ut1z", None).is_err());
        assert!(resolve_group("ut3zmod:1", None).is_err());
        assert!(resolve_group("ut3fp:6", None).is_err());
        assert!(resolve_group("nonsense", None).is_err());
    }

    #[test]
    fn safe_prime_spec() {
        let g = resolve_group("safeprime:23", None).unwrap();
        let Group::CyclicMod(c) = &g else {
            panic!("expected cyclic platform")
        };
        assert_eq!(c.subgroup_order(), Some(&BigUint::from(11u32)));
        assert!(resolve_group("safeprime:13", None).is_err());
    }

    #[test]
    fn cyclic_spec() {
        for spec in ["cyclic:9", "cyclic:3^2"] {
            let g = resolve_group(spec, None).unwrap();
            let Group::Presentation(p) = &g else { panic!() };
            assert_eq!(p.group_order(), Some(BigUint::from(9u32)));
        }
        assert!(resolve_group("cyclic:1", None).is_err());
        assert!(resolve_group("cyclic:3^x", None).is_err());
    }

    #[test]
    fn fixture_directory_override() {
        let dir = tempfile::tempdir().unwrap();
        // a different "heisenberg": cyclic of order 7
        std::fs::write(dir.path().join("heisenberg.npres"), "ngens 1\norders 7\n").unwrap();
        let g = resolve_group("heisenberg", Some(dir.path())).unwrap();
        let Group::Presentation(p) = &g else { panic!() };
        assert_eq!(p.n_gens(), 1);
        // without the override the embedded copy is used
        let g = resolve_group("heisenberg", None).unwrap();
        let Group::Presentation(p) = &g else { panic!() };
        assert_eq!(p.n_gens(), 3);
    }

    #[test]
    fn default_params_run_on_shipped_platforms() {
        for spec in ["heisenberg", "ut3z", "ut4z", "heisenberg-fp:3"] {
            let group = resolve_group(spec, None).unwrap();
            let params = default_params(group.clone(), ProtocolId::I).unwrap();
            let keys: Vec<BigInt> = (0..params.parties())
                .map(|i| BigInt::from(2 * i as i64 + 3))
                .collect();
            let out = run_exchange(&params, &keys).unwrap_or_else(|e| panic!("{spec} I: {e}"));
            assert!(!out.role_keys.is_empty());

            let params = default_params(group, ProtocolId::II).unwrap();
            let keys: Vec<BigInt> = (0..params.parties())
                .map(|i| BigInt::from(2 * i as i64 + 3))
                .collect();
            run_exchange(&params, &keys).unwrap_or_else(|e| panic!("{spec} II: {e}"));
        }
    }

    #[test]
    fn abelian_platform_rejects_protocols() {
        let group = resolve_group("safeprime:23", None).unwrap();
        let params = default_params(group, ProtocolId::I).unwrap();
        assert!(params.validate().is_err());
    }
}
