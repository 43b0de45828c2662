//! The commutator multilinear maps.
//!
//! On a nilpotent group of class n the left-normed commutator gives a map
//! e(g1, ..., gn) = [g1, ..., gn] satisfying e(g1^a1, ..., gn^an) =
//! e(g1, ..., gn)^(a1...an). With an anchor x in a class-(n+1) group that
//! is not n-Engel, e'(g1, ..., gn) = [x, g1, ..., gn] does the same.
//! Descriptors carry a non-degeneracy witness that is checked eagerly at
//! construction.

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use crate::group::{Element, Group, GroupError};

#[derive(Debug, Error)]
pub enum MultilinearError {
    #[error("map of arity {arity} expects {expected} arguments, got {got}")]
    ArityMismatch {
        arity: usize,
        expected: usize,
        got: usize,
    },
    #[error("plain commutator maps need arity at least 2, got {0}")]
    ArityTooSmall(usize),
    #[error("anchored maps need arity at least 1")]
    ZeroArity,
    #[error("witness evaluates to the identity; the map would be degenerate")]
    DegenerateWitness,
    #[error("group class could not be bounded by {0}, the map power law would fail")]
    ClassBoundFailed(usize),
    #[error("multilinearity check requires nonzero exponents")]
    ZeroExponent,
    #[error(transparent)]
    Group(#[from] GroupError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    /// e(g1, ..., gn) = [g1, ..., gn]
    Plain,
    /// e'(g1, ..., gn) = [x, g1, ..., gn]
    Engel,
}

/// A commutator multilinear map with its non-degeneracy witness.
#[derive(Debug, Clone)]
pub struct MapDescriptor {
    kind: MapKind,
    group: Group,
    arity: usize,
    anchor: Option<Element>,
    witness: Vec<Element>,
}

impl MapDescriptor {
    /// Plain map on a group of class at most `arity`; the witness tuple
    /// must have a nontrivial left-normed commutator.
    pub fn plain(
        group: Group,
        arity: usize,
        witness: Vec<Element>,
    ) -> Result<Self, MultilinearError> {
        if arity < 2 {
            return Err(MultilinearError::ArityTooSmall(arity));
        }
        if witness.len() != arity {
            return Err(MultilinearError::ArityMismatch {
                arity,
                expected: arity,
                got: witness.len(),
            });
        }
        if !group.verify_class_at_most(arity) {
            return Err(MultilinearError::ClassBoundFailed(arity));
        }
        if !plain_witness_nondegenerate(&group, &witness)? {
            return Err(MultilinearError::DegenerateWitness);
        }
        Ok(MapDescriptor {
            kind: MapKind::Plain,
            group,
            arity,
            anchor: None,
            witness,
        })
    }

    /// Anchored map on a group of class at most `arity` + 1; the witness g
    /// must satisfy [x, g, ..., g] != 1 (arity copies), i.e. the group is
    /// not arity-Engel.
    pub fn engel(
        group: Group,
        arity: usize,
        anchor: Element,
        witness: Element,
    ) -> Result<Self, MultilinearError> {
        if arity < 1 {
            return Err(MultilinearError::ZeroArity);
        }
        if !group.verify_class_at_most(arity + 1) {
            return Err(MultilinearError::ClassBoundFailed(arity + 1));
        }
        if !engel_witness_nondegenerate(&group, &anchor, &witness, arity)? {
            return Err(MultilinearError::DegenerateWitness);
        }
        Ok(MapDescriptor {
            kind: MapKind::Engel,
            group,
            arity,
            anchor: Some(anchor),
            witness: vec![witness],
        })
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn anchor(&self) -> Option<&Element> {
        self.anchor.as_ref()
    }

    pub fn eval(&self, gs: &[Element]) -> Result<Element, MultilinearError> {
        if gs.len() != self.arity {
            return Err(MultilinearError::ArityMismatch {
                arity: self.arity,
                expected: self.arity,
                got: gs.len(),
            });
        }
        let value = match self.kind {
            MapKind::Plain => self.group.left_normed_commutator(gs)?,
            MapKind::Engel => {
                let mut items = Vec::with_capacity(gs.len() + 1);
                items.push(self.anchor.clone().expect("engel maps carry an anchor"));
                items.extend_from_slice(gs);
                self.group.left_normed_commutator(&items)?
            }
        };
        Ok(value)
    }

    /// Evaluate the defining power law on one tuple: does
    /// eval(g1^a1, ..., gn^an) equal eval(g1, ..., gn)^(a1...an)?
    pub fn check_multilinearity(
        &self,
        gs: &[Element],
        exps: &[BigInt],
    ) -> Result<bool, MultilinearError> {
        if gs.len() != self.arity || exps.len() != self.arity {
            return Err(MultilinearError::ArityMismatch {
                arity: self.arity,
                expected: self.arity,
                got: gs.len().max(exps.len()),
            });
        }
        if exps.iter().any(|a| a.is_zero()) {
            return Err(MultilinearError::ZeroExponent);
        }
        let powered: Result<Vec<Element>, GroupError> = gs
            .iter()
            .zip(exps)
            .map(|(g, a)| self.group.power(g, a))
            .collect();
        let lhs = self.eval(&powered?)?;
        let product: BigInt = exps.iter().product();
        let rhs = self.group.power(&self.eval(gs)?, &product)?;
        Ok(lhs == rhs)
    }

    /// Re-evaluate the stored witness; true by construction.
    pub fn check_nondegenerate(&self) -> Result<bool, MultilinearError> {
        match self.kind {
            MapKind::Plain => plain_witness_nondegenerate(&self.group, &self.witness),
            MapKind::Engel => engel_witness_nondegenerate(
                &self.group,
                self.anchor.as_ref().expect("engel maps carry an anchor"),
                &self.witness[0],
                self.arity,
            ),
        }
    }
}

/// Would [g1, ..., gn] be a usable non-degeneracy witness?
pub fn plain_witness_nondegenerate(
    group: &Group,
    witness: &[Element],
) -> Result<bool, MultilinearError> {
    let value = group.left_normed_commutator(witness)?;
    Ok(!group.is_identity(&value))
}

/// Would [x, g, ..., g] (m copies) be a usable non-degeneracy witness?
pub fn engel_witness_nondegenerate(
    group: &Group,
    anchor: &Element,
    witness: &Element,
    m: usize,
) -> Result<bool, MultilinearError> {
    let value = group.engel_commutator(anchor, witness, m)?;
    Ok(!group.is_identity(&value))
}
