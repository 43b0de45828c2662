//! One handle over the three element platforms: presentation-based groups,
//! unitriangular matrix groups, and multiplicative subgroups mod p.
//!
//! Protocols and attacks are written against [`Group`] and [`Element`] so
//! the same run logic works on every platform. Elements are immutable and
//! all operations are pure.

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

use crate::matrix::{MatrixError, UTGroup, UTMatrix};
use crate::presentation::{ExponentVector, NilpotentPresentation};
use crate::ring;

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("element does not belong to this group")]
    PlatformMismatch,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("left-normed commutator needs at least 2 arguments, got {0}")]
    TooFewArguments(usize),
    #[error("Engel commutator repeat count must be at least 1")]
    ZeroEngelCount,
    #[error("modulus {0} is not prime")]
    NotPrime(BigUint),
    #[error("cannot decode element: {0}")]
    Decode(String),
}

/// The multiplicative group of integers mod a prime, optionally restricted
/// to a subgroup of known order (the safe-prime setting uses order q with
/// p = 2q + 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicModGroup {
    modulus: BigUint,
    subgroup_order: Option<BigUint>,
}

impl CyclicModGroup {
    pub fn new(modulus: BigUint) -> Result<Self, GroupError> {
        if !ring::is_probable_prime(&modulus) {
            return Err(GroupError::NotPrime(modulus));
        }
        Ok(CyclicModGroup {
            modulus,
            subgroup_order: None,
        })
    }

    pub fn with_subgroup_order(modulus: BigUint, order: BigUint) -> Result<Self, GroupError> {
        let mut g = CyclicModGroup::new(modulus)?;
        g.subgroup_order = Some(order);
        Ok(g)
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn subgroup_order(&self) -> Option<&BigUint> {
        self.subgroup_order.as_ref()
    }
}

/// A group element on one of the supported platforms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Element {
    /// Normal-form exponent vector over a presentation.
    Vector(ExponentVector),
    /// Unitriangular matrix.
    Matrix(UTMatrix),
    /// Residue mod p.
    Residue(BigUint),
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Vector(v) => write!(f, "{v}"),
            Element::Matrix(m) => write!(f, "{}", m.emit().trim_end().replace('\n', "; ")),
            Element::Residue(r) => write!(f, "{r}"),
        }
    }
}

/// Handle for a concrete platform group.
#[derive(Debug, Clone)]
pub enum Group {
    Presentation(Arc<NilpotentPresentation>),
    Unitriangular(UTGroup),
    CyclicMod(CyclicModGroup),
}

impl Group {
    pub fn presentation(p: NilpotentPresentation) -> Self {
        Group::Presentation(Arc::new(p))
    }

    pub fn unitriangular(g: UTGroup) -> Self {
        Group::Unitriangular(g)
    }

    pub fn cyclic_mod(g: CyclicModGroup) -> Self {
        Group::CyclicMod(g)
    }

    pub fn description(&self) -> String {
        match self {
            Group::Presentation(p) => format!("presentation with {} generators", p.n_gens()),
            Group::Unitriangular(g) => format!("UT({}, {})", g.dimension(), g.ring().token()),
            Group::CyclicMod(g) => match &g.subgroup_order {
                Some(q) => format!("subgroup of order {} of Z/{}Z*", q, g.modulus),
                None => format!("multiplicative group mod {}", g.modulus),
            },
        }
    }

    pub fn identity(&self) -> Element {
        match self {
            Group::Presentation(p) => Element::Vector(p.identity()),
            Group::Unitriangular(g) => Element::Matrix(g.identity()),
            Group::CyclicMod(_) => Element::Residue(BigUint::one()),
        }
    }

    pub fn contains(&self, e: &Element) -> bool {
        match (self, e) {
            (Group::Presentation(p), Element::Vector(v)) => p.is_normal_form(v),
            (Group::Unitriangular(g), Element::Matrix(m)) => m.group() == g,
            (Group::CyclicMod(g), Element::Residue(r)) => !r.is_zero() && r < &g.modulus,
            _ => false,
        }
    }

    pub fn is_identity(&self, e: &Element) -> bool {
        match e {
            Element::Vector(v) => v.is_identity(),
            Element::Matrix(m) => m.is_identity(),
            Element::Residue(r) => r.is_one(),
        }
    }

    pub fn multiply(&self, a: &Element, b: &Element) -> Result<Element, GroupError> {
        match (self, a, b) {
            (Group::Presentation(p), Element::Vector(a), Element::Vector(b)) => {
                Ok(Element::Vector(p.multiply(a, b)))
            }
            (Group::Unitriangular(_), Element::Matrix(a), Element::Matrix(b)) => {
                Ok(Element::Matrix(a.mul(b)?))
            }
            (Group::CyclicMod(g), Element::Residue(a), Element::Residue(b)) => {
                Ok(Element::Residue(a * b % &g.modulus))
            }
            _ => Err(GroupError::PlatformMismatch),
        }
    }

    pub fn inverse(&self, a: &Element) -> Result<Element, GroupError> {
        match (self, a) {
            (Group::Presentation(p), Element::Vector(a)) => Ok(Element::Vector(p.inverse(a))),
            (Group::Unitriangular(_), Element::Matrix(a)) => Ok(Element::Matrix(a.inverse())),
            (Group::CyclicMod(g), Element::Residue(a)) => {
                // Fermat inverse; the modulus is prime by construction
                let exp = &g.modulus - BigUint::from(2u32);
                Ok(Element::Residue(a.modpow(&exp, &g.modulus)))
            }
            _ => Err(GroupError::PlatformMismatch),
        }
    }

    pub fn power(&self, a: &Element, k: &BigInt) -> Result<Element, GroupError> {
        match (self, a) {
            (Group::Presentation(p), Element::Vector(a)) => Ok(Element::Vector(p.power(a, k))),
            (Group::Unitriangular(_), Element::Matrix(a)) => Ok(Element::Matrix(a.pow(k))),
            (Group::CyclicMod(g), Element::Residue(a)) => {
                let base = if k.is_negative() {
                    match self.inverse(&Element::Residue(a.clone()))? {
                        Element::Residue(r) => r,
                        _ => unreachable!(),
                    }
                } else {
                    a.clone()
                };
                Ok(Element::Residue(base.modpow(k.magnitude(), &g.modulus)))
            }
            _ => Err(GroupError::PlatformMismatch),
        }
    }

    /// [a, b] = a^-1 b^-1 a b.
    pub fn commutator(&self, a: &Element, b: &Element) -> Result<Element, GroupError> {
        match (self, a, b) {
            (Group::Presentation(p), Element::Vector(a), Element::Vector(b)) => {
                Ok(Element::Vector(p.commutator(a, b)))
            }
            _ => {
                let left = self.multiply(&self.inverse(a)?, &self.inverse(b)?)?;
                self.multiply(&left, &self.multiply(a, b)?)
            }
        }
    }

    /// Left-normed commutator [g1, ..., gk] = [[g1, ..., g_{k-1}], gk].
    pub fn left_normed_commutator(&self, items: &[Element]) -> Result<Element, GroupError> {
        if items.len() < 2 {
            return Err(GroupError::TooFewArguments(items.len()));
        }
        let mut acc = self.commutator(&items[0], &items[1])?;
        for g in &items[2..] {
            acc = self.commutator(&acc, g)?;
        }
        Ok(acc)
    }

    /// [x, g, ..., g] with m copies of g.
    pub fn engel_commutator(
        &self,
        x: &Element,
        g: &Element,
        m: usize,
    ) -> Result<Element, GroupError> {
        if m < 1 {
            return Err(GroupError::ZeroEngelCount);
        }
        let mut acc = self.commutator(x, g)?;
        for _ in 1..m {
            acc = self.commutator(&acc, g)?;
        }
        Ok(acc)
    }

    /// Whether the nilpotency class is known or verified to be at most c.
    pub fn verify_class_at_most(&self, c: usize) -> bool {
        match self {
            Group::Presentation(p) => p.verify_class_at_most(c),
            Group::Unitriangular(g) => g.class() <= c,
            Group::CyclicMod(_) => true,
        }
    }

    pub fn random_element(
        &self,
        rng: &mut impl rand::Rng,
        bound: &BigUint,
    ) -> Result<Element, GroupError> {
        match self {
            Group::Presentation(p) => Ok(Element::Vector(p.random_vector(rng, bound))),
            Group::Unitriangular(g) => Ok(Element::Matrix(g.random_with(rng, bound)?)),
            Group::CyclicMod(g) => {
                let r = rng.gen_biguint_range(&BigUint::one(), &g.modulus);
                Ok(Element::Residue(r))
            }
        }
    }

    /// Whether every non-identity element has infinite order.
    pub fn torsion_free(&self) -> bool {
        match self {
            Group::Presentation(p) => p.torsion_free(),
            Group::Unitriangular(g) => g.ring().modulus().is_none(),
            Group::CyclicMod(_) => false,
        }
    }

    /// Order of an element by bounded brute force; `None` when the order is
    /// infinite or exceeds the limit. Torsion-free platforms skip the scan.
    pub fn element_order_bounded(&self, e: &Element, limit: u64) -> Option<BigUint> {
        if self.is_identity(e) {
            return Some(BigUint::one());
        }
        if self.torsion_free() {
            return None;
        }
        let mut acc = e.clone();
        for k in 2..=limit {
            acc = self.multiply(&acc, e).ok()?;
            if self.is_identity(&acc) {
                return Some(BigUint::from(k));
            }
        }
        None
    }

    /// Element encoding used in transcript files: exponent vectors for
    /// presentation platforms, the matrix text format for UT platforms,
    /// decimal residues mod p.
    pub fn encode_element(&self, e: &Element) -> Result<String, GroupError> {
        if !self.contains(e) {
            return Err(GroupError::PlatformMismatch);
        }
        Ok(match e {
            Element::Vector(v) => v
                .exponents()
                .iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(" "),
            Element::Matrix(m) => m.emit(),
            Element::Residue(r) => r.to_string(),
        })
    }

    pub fn decode_element(&self, text: &str) -> Result<Element, GroupError> {
        let e = match self {
            Group::Presentation(p) => {
                let exps: Result<Vec<BigInt>, _> = text
                    .split_whitespace()
                    .map(|w| {
                        w.parse::<BigInt>()
                            .map_err(|_| GroupError::Decode(format!("bad exponent `{w}`")))
                    })
                    .collect();
                let v = ExponentVector::new(exps?);
                if v.len() != p.n_gens() {
                    return Err(GroupError::Decode(format!(
                        "expected {} exponents, got {}",
                        p.n_gens(),
                        v.len()
                    )));
                }
                Element::Vector(v)
            }
            Group::Unitriangular(_) => Element::Matrix(
                UTMatrix::parse(text).map_err(|e| GroupError::Decode(e.to_string()))?,
            ),
            Group::CyclicMod(_) => Element::Residue(
                text.trim()
                    .parse::<BigUint>()
                    .map_err(|_| GroupError::Decode(format!("bad residue `{text}`")))?,
            ),
        };
        if !self.contains(&e) {
            return Err(GroupError::Decode(
                "element does not belong to the platform group".into(),
            ));
        }
        Ok(e)
    }
}

/// Standard UT platform bases: g_i = I + e_{i,i+1}. Their left-normed
/// commutator chain is I + e_{1,n}, which witnesses class exactly n-1.
pub fn superdiagonal_bases(group: &UTGroup) -> Vec<Element> {
    (0..group.dimension() - 1)
        .map(|i| Element::Matrix(group.elementary(i, i + 1, BigInt::one())))
        .collect()
}

/// The all-superdiagonal-ones element I + e12 + e23 + ... used as the
/// Engel witness on UT platforms.
pub fn superdiagonal_ones(group: &UTGroup) -> Element {
    let mut m = group.identity();
    for i in 0..group.dimension() - 1 {
        m = m
            .mul(&group.elementary(i, i + 1, BigInt::one()))
            .expect("same group");
    }
    Element::Matrix(m)
}
