//! Upper unitriangular matrix groups UT(n, R).
//!
//! Entries above the diagonal are stored densely (row major); the diagonal
//! is implicitly 1 and everything below is 0. `UT(n, R)` is nilpotent of
//! class n-1, which makes it both a protocol platform and the oracle used
//! to cross-check the presentation engine.

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_traits::{One, Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::presentation::{ExponentVector, NilpotentPresentation};
use crate::ring::RingDescriptor;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatrixError {
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("operands belong to different groups: UT({0}, {1}) vs UT({2}, {3})")]
    GroupMismatch(usize, String, usize, String),
    #[error("expected {expected} strict upper entries, got {got}")]
    WrongEntryCount { expected: usize, got: usize },
    #[error("random sampling bound must be at least 1")]
    ZeroBound,
    #[error("matrix text line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("exponent vector is not over the shipped Heisenberg presentation")]
    WrongPresentation,
}

/// Descriptor of a unitriangular group: dimension and coefficient ring.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UTGroup {
    n: usize,
    ring: RingDescriptor,
}

impl UTGroup {
    pub fn new(n: usize, ring: RingDescriptor) -> Result<Self, MatrixError> {
        if n < 2 {
            return Err(MatrixError::DimensionTooSmall(n));
        }
        Ok(UTGroup { n, ring })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn ring(&self) -> &RingDescriptor {
        &self.ring
    }

    /// Nilpotency class of UT(n, R): exactly n - 1.
    pub fn class(&self) -> usize {
        self.n - 1
    }

    pub fn strict_entry_count(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    pub fn identity(&self) -> UTMatrix {
        UTMatrix {
            group: self.clone(),
            entries: vec![BigInt::zero(); self.strict_entry_count()],
        }
    }

    /// I + v·e_{ij} for 0-based indices i < j.
    pub fn elementary(&self, i: usize, j: usize, v: BigInt) -> UTMatrix {
        assert!(i < j && j < self.n, "elementary position out of range");
        let mut m = self.identity();
        let idx = m.index(i, j);
        m.entries[idx] = self.ring.reduce(v);
        m
    }

    pub fn from_entries(&self, entries: Vec<BigInt>) -> Result<UTMatrix, MatrixError> {
        if entries.len() != self.strict_entry_count() {
            return Err(MatrixError::WrongEntryCount {
                expected: self.strict_entry_count(),
                got: entries.len(),
            });
        }
        Ok(UTMatrix {
            group: self.clone(),
            entries: entries.into_iter().map(|e| self.ring.reduce(e)).collect(),
        })
    }

    /// Deterministic random element. Integer entries are uniform in
    /// [-bound, bound]; modular entries are uniform residues and ignore
    /// the bound.
    pub fn random(&self, seed: u64, bound: &BigUint) -> Result<UTMatrix, MatrixError> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        self.random_with(&mut rng, bound)
    }

    pub fn random_with(
        &self,
        rng: &mut impl rand::Rng,
        bound: &BigUint,
    ) -> Result<UTMatrix, MatrixError> {
        if bound.is_zero() && self.ring.modulus().is_none() {
            return Err(MatrixError::ZeroBound);
        }
        let entries = (0..self.strict_entry_count())
            .map(|_| match self.ring.modulus() {
                Some(m) => BigInt::from(rng.gen_biguint_below(m)),
                None => {
                    let b = BigInt::from(bound.clone());
                    rng.gen_bigint_range(&-b.clone(), &(b + 1))
                }
            })
            .collect();
        self.from_entries(entries)
    }
}

/// A unitriangular matrix; always kept reduced in its ring.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UTMatrix {
    group: UTGroup,
    entries: Vec<BigInt>,
}

impl UTMatrix {
    pub fn group(&self) -> &UTGroup {
        &self.group
    }

    pub fn dimension(&self) -> usize {
        self.group.n
    }

    fn index(&self, i: usize, j: usize) -> usize {
        strict_index(self.group.n, i, j)
    }

    /// Entry at (i, j), 0-based, including the implicit diagonal and zeros.
    pub fn entry(&self, i: usize, j: usize) -> BigInt {
        if i == j {
            BigInt::one()
        } else if i > j {
            BigInt::zero()
        } else {
            self.entries[self.index(i, j)].clone()
        }
    }

    pub fn strict_entries(&self) -> &[BigInt] {
        &self.entries
    }

    pub fn is_identity(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    /// Entries (i, i+k) for band index k in [1, n-1].
    pub fn band(&self, k: usize) -> Vec<BigInt> {
        (0..self.group.n - k)
            .map(|i| self.entries[self.index(i, i + k)].clone())
            .collect()
    }

    fn check_same_group(&self, other: &UTMatrix) -> Result<(), MatrixError> {
        if self.group != other.group {
            return Err(MatrixError::GroupMismatch(
                self.group.n,
                self.group.ring.token(),
                other.group.n,
                other.group.ring.token(),
            ));
        }
        Ok(())
    }

    pub fn mul(&self, other: &UTMatrix) -> Result<UTMatrix, MatrixError> {
        self.check_same_group(other)?;
        let n = self.group.n;
        let ring = &self.group.ring;
        let mut out = self.group.identity();
        for i in 0..n {
            for j in (i + 1)..n {
                let mut acc = &self.entries[self.index(i, j)] + &other.entries[self.index(i, j)];
                for k in (i + 1)..j {
                    acc += &self.entries[self.index(i, k)] * &other.entries[self.index(k, j)];
                }
                let idx = out.index(i, j);
                out.entries[idx] = ring.reduce(acc);
            }
        }
        Ok(out)
    }

    /// Inverse via the geometric series of the nilpotent part:
    /// (I + N)^-1 = I - N + N^2 - ... with N^n = 0.
    pub fn inverse(&self) -> UTMatrix {
        let n = self.group.n;
        let ring = &self.group.ring;
        let mut acc = vec![BigInt::zero(); self.entries.len()];
        let mut term: Vec<BigInt> = self.entries.clone();
        let mut sign_neg = true;
        for _ in 1..n {
            for (a, t) in acc.iter_mut().zip(&term) {
                if sign_neg {
                    *a -= t;
                } else {
                    *a += t;
                }
            }
            term = strict_mul(n, &term, &self.entries);
            sign_neg = !sign_neg;
        }
        UTMatrix {
            group: self.group.clone(),
            entries: acc.into_iter().map(|e| ring.reduce(e)).collect(),
        }
    }

    /// Binary powering; negative exponents go through the inverse.
    pub fn pow(&self, k: &BigInt) -> UTMatrix {
        if k.is_negative() {
            return self.inverse().pow(&-k);
        }
        let mag = k.magnitude();
        let mut result = self.group.identity();
        let bits = mag.bits();
        for b in (0..bits).rev() {
            result = result.mul(&result).expect("same group");
            if mag.bit(b) {
                result = result.mul(self).expect("same group");
            }
        }
        result
    }

    /// Matrix text format: `ut <n> <ring>` header, then the strict upper
    /// entries row by row.
    pub fn emit(&self) -> String {
        let n = self.group.n;
        let mut out = format!("ut {} {}\n", n, self.group.ring.token());
        for i in 0..n - 1 {
            let row: Vec<String> = ((i + 1)..n)
                .map(|j| self.entries[self.index(i, j)].to_string())
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<UTMatrix, MatrixError> {
        let mut lines = text.lines().enumerate();
        let (lno, header) = lines
            .next()
            .ok_or(MatrixError::Parse {
                line: 1,
                msg: "empty input".into(),
            })
            .map(|(i, l)| (i + 1, l))?;
        let words: Vec<&str> = header.split_whitespace().collect();
        if words.len() < 3 || words[0] != "ut" {
            return Err(MatrixError::Parse {
                line: lno,
                msg: "expected header `ut <n> <ring>`".into(),
            });
        }
        let n: usize = words[1].parse().map_err(|_| MatrixError::Parse {
            line: lno,
            msg: format!("bad dimension `{}`", words[1]),
        })?;
        let ring = RingDescriptor::parse_token(&words[2..]).map_err(|e| MatrixError::Parse {
            line: lno,
            msg: e.to_string(),
        })?;
        let group = UTGroup::new(n, ring)?;
        let mut entries = Vec::with_capacity(group.strict_entry_count());
        for i in 0..n - 1 {
            let (lno, line) = lines
                .next()
                .ok_or(MatrixError::Parse {
                    line: i + 2,
                    msg: format!("missing row {}", i + 1),
                })
                .map(|(k, l)| (k + 1, l))?;
            let row: Result<Vec<BigInt>, _> = line
                .split_whitespace()
                .map(|w| {
                    w.parse::<BigInt>().map_err(|_| MatrixError::Parse {
                        line: lno,
                        msg: format!("bad entry `{w}`"),
                    })
                })
                .collect();
            let row = row?;
            if row.len() != n - 1 - i {
                return Err(MatrixError::Parse {
                    line: lno,
                    msg: format!("expected {} entries, got {}", n - 1 - i, row.len()),
                });
            }
            entries.extend(row);
        }
        group.from_entries(entries)
    }
}

fn strict_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Product of two strictly upper triangular matrices (both given as strict
/// entry arrays); used by the inverse series.
fn strict_mul(n: usize, a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len()];
    for i in 0..n {
        for j in (i + 1)..n {
            let mut acc = BigInt::zero();
            for k in (i + 1)..j {
                acc += &a[strict_index(n, i, k)] * &b[strict_index(n, k, j)];
            }
            out[strict_index(n, i, j)] = acc;
        }
    }
    out
}

/// Image of a Heisenberg exponent vector under x1 -> I+e12, x2 -> I+e23,
/// x3 -> I+e13 in UT(3, Z). Bridges presentation elements to the matrix
/// oracle used throughout the test suites.
pub fn heisenberg_hom(
    vec: &ExponentVector,
    pres: &NilpotentPresentation,
) -> Result<UTMatrix, MatrixError> {
    if pres != &NilpotentPresentation::heisenberg() || vec.len() != 3 {
        return Err(MatrixError::WrongPresentation);
    }
    let group = UTGroup::new(3, RingDescriptor::Integers).expect("n = 3");
    let x1 = group.elementary(0, 1, BigInt::one());
    let x2 = group.elementary(1, 2, BigInt::one());
    let x3 = group.elementary(0, 2, BigInt::one());
    let img = x1
        .pow(vec.exponent(0))
        .mul(&x2.pow(vec.exponent(1)))
        .and_then(|m| m.mul(&x3.pow(vec.exponent(2))))
        .expect("same group");
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn z_group(n: usize) -> UTGroup {
        UTGroup::new(n, RingDescriptor::Integers).unwrap()
    }

    fn zmod_group(n: usize, m: u64) -> UTGroup {
        UTGroup::new(n, RingDescriptor::integers_mod(BigUint::from(m)).unwrap()).unwrap()
    }

    fn bi(x: i64) -> BigInt {
        BigInt::from(x)
    }

    #[test]
    fn multiply_elementaries() {
        let g = z_group(3);
        let a = g.elementary(0, 1, bi(1));
        let b = g.elementary(1, 2, bi(1));
        // (I+e12)(I+e23) = I+e12+e23+e13
        let p = a.mul(&b).unwrap();
        assert_eq!(p.entry(0, 1), bi(1));
        assert_eq!(p.entry(1, 2), bi(1));
        assert_eq!(p.entry(0, 2), bi(1));
        // identity is neutral
        assert_eq!(a.mul(&g.identity()).unwrap(), a);
        assert_eq!(g.identity().mul(&a).unwrap(), a);
    }

    #[test]
    fn modular_reduction_in_product() {
        let g = zmod_group(3, 6);
        let a = g.elementary(0, 1, bi(4));
        // (I+4e12)^2 = I+8e12 = I+2e12 over Z_6
        let sq = a.mul(&a).unwrap();
        assert_eq!(sq.entry(0, 1), bi(2));
    }

    #[test]
    fn inverse_by_geometric_series() {
        let g = z_group(3);
        assert_eq!(g.identity().inverse(), g.identity());
        let a = g.elementary(0, 1, bi(1));
        assert_eq!(a.inverse().entry(0, 1), bi(-1));
        // (I+e12+e23)^-1 = I-e12-e23+e13
        let m = g.from_entries(vec![bi(1), bi(0), bi(1)]).unwrap();
        let inv = m.inverse();
        assert_eq!(inv.entry(0, 1), bi(-1));
        assert_eq!(inv.entry(1, 2), bi(-1));
        assert_eq!(inv.entry(0, 2), bi(1));
        assert!(m.mul(&inv).unwrap().is_identity());
        assert!(inv.mul(&m).unwrap().is_identity());
    }

    #[test]
    fn powers() {
        let g = z_group(3);
        let a = g.from_entries(vec![bi(2), bi(5), bi(0)]).unwrap(); // I+2e12+5e13
        assert!(a.pow(&bi(0)).is_identity());
        assert_eq!(a.pow(&bi(1)), a);
        let p7 = a.pow(&bi(7));
        assert_eq!(p7.entry(0, 1), bi(14));
        assert_eq!(p7.entry(0, 2), bi(35));
        // superdiagonal-only element powers linearly
        let e = g.elementary(0, 1, bi(1));
        assert_eq!(e.pow(&bi(12345)).entry(0, 1), bi(12345));
        // negative exponent law
        let m = g.from_entries(vec![bi(3), bi(-1), bi(2)]).unwrap();
        assert_eq!(m.pow(&bi(-5)), m.pow(&bi(5)).inverse());
        assert!(m.pow(&bi(5)).mul(&m.pow(&bi(-5))).unwrap().is_identity());
    }

    #[test]
    fn power_additivity_random() {
        let g = z_group(4);
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let bound = BigUint::from(50u32);
        for _ in 0..20 {
            let m = g.random_with(&mut rng, &bound).unwrap();
            let j = bi(rng.gen_range(-40i64..40));
            let k = bi(rng.gen_range(-40i64..40));
            let lhs = m.pow(&(&j + &k));
            let rhs = m.pow(&j).mul(&m.pow(&k)).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn group_mismatch_is_reported() {
        let a = z_group(3).identity();
        let b = z_group(4).identity();
        assert!(matches!(a.mul(&b), Err(MatrixError::GroupMismatch(..))));
        let c = zmod_group(3, 6).identity();
        assert!(a.mul(&c).is_err());
    }

    #[test]
    fn random_is_deterministic_and_in_range() {
        let g = z_group(3);
        let bound = BigUint::from(10u32);
        assert_eq!(g.random(42, &bound).unwrap(), g.random(42, &bound).unwrap());
        assert!(g.random(0, &BigUint::zero()).is_err());

        let f5 =
            UTGroup::new(3, RingDescriptor::prime_field(BigUint::from(5u32)).unwrap()).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let m = f5.random_with(&mut rng, &BigUint::one()).unwrap();
            for e in m.strict_entries() {
                assert!(!e.is_negative() && e < &bi(5));
            }
        }
    }

    #[test]
    fn text_format_round_trip() {
        let g = zmod_group(4, 12);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..10 {
            let m = g.random_with(&mut rng, &BigUint::one()).unwrap();
            let text = m.emit();
            assert_eq!(UTMatrix::parse(&text).unwrap(), m);
        }
        let z = z_group(3).from_entries(vec![bi(-3), bi(7), bi(0)]).unwrap();
        assert_eq!(UTMatrix::parse(&z.emit()).unwrap(), z);
        assert!(UTMatrix::parse("ut 3 Z\n1 2\n").is_err()); // missing row
        assert!(UTMatrix::parse("ut 1 Z\n").is_err());
        assert!(UTMatrix::parse("nope").is_err());
    }

    #[test]
    fn minimal_band_powers_linearly() {
        // with k the minimal nonzero band of g - I, band k of g^a is
        // a * band k of g
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        for n in [3usize, 4, 5] {
            for ring in [
                RingDescriptor::Integers,
                RingDescriptor::integers_mod(BigUint::from(6u32)).unwrap(),
                RingDescriptor::prime_field(BigUint::from(7u32)).unwrap(),
            ] {
                let g = UTGroup::new(n, ring.clone()).unwrap();
                for _ in 0..10 {
                    let m = g.random_with(&mut rng, &BigUint::from(9u32)).unwrap();
                    if m.is_identity() {
                        continue;
                    }
                    let k = (1..n)
                        .find(|&k| m.band(k).iter().any(|e| !e.is_zero()))
                        .unwrap();
                    let a = bi(rng.gen_range(-100i64..100));
                    let p = m.pow(&a);
                    for (pe, me) in p.band(k).iter().zip(m.band(k)) {
                        assert_eq!(*pe, ring.reduce(&a * me));
                    }
                }
            }
        }
    }

    #[test]
    fn heisenberg_hom_basics() {
        let pres = NilpotentPresentation::heisenberg();
        let id = ExponentVector::zero(3);
        assert!(heisenberg_hom(&id, &pres).unwrap().is_identity());
        let x3 = ExponentVector::new(vec![bi(0), bi(0), bi(1)]);
        let img = heisenberg_hom(&x3, &pres).unwrap();
        assert_eq!(img.entry(0, 2), bi(1));
        assert_eq!(img.entry(0, 1), bi(0));
        // wrong presentation rejected
        let cyclic = NilpotentPresentation::cyclic(BigUint::from(5u32));
        assert!(heisenberg_hom(&ExponentVector::zero(1), &cyclic).is_err());
    }
}
