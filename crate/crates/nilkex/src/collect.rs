//! The collection algorithm: rewriting words over a nilpotent presentation
//! into the unique normal form x1^e1 ... xn^en.
//!
//! Collection works from the left, one generator level at a time, treating
//! a generator power x_i^e as a single stack symbol. All occurrences of the
//! current level's generator are moved to the front in one pass; the
//! sub-words they jump over are rewritten by the conjugation automorphism
//! g -> x_i^-t g x_i^t, whose generator images are obtained by binary
//! powering (so huge exponents cost log(e) automorphism compositions, not
//! e single steps). Power relations then renormalize the front exponent
//! into [0, s_i). Every recursive call moves strictly deeper into the
//! generator sequence, so collection terminates on any well-formed
//! presentation.
//!
//! Conjugation by a negative power of x_j uses the stored x_j x_i x_j^-1
//! relations; words are never inverted symbolically.

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::fmt;

use crate::presentation::{ExponentVector, NilpotentPresentation, RelativeOrder, Word};

type Syllable = (usize, BigInt);

impl NilpotentPresentation {
    pub fn identity(&self) -> ExponentVector {
        ExponentVector::zero(self.n_gens())
    }

    /// Normal form of x_{i+1} (0-based i). This is the unit vector except
    /// when the relative order is 1 and the generator collapses into the
    /// tail of its power relation.
    pub fn generator_element(&self, i: usize) -> ExponentVector {
        assert!(i < self.n_gens(), "generator index out of range");
        self.collect(&Word::new(vec![(i, BigInt::one())]))
    }

    /// True when the vector satisfies the normal-form range conditions.
    pub fn is_normal_form(&self, v: &ExponentVector) -> bool {
        v.len() == self.n_gens()
            && v.exponents()
                .iter()
                .zip(self.orders())
                .all(|(e, o)| match o {
                    RelativeOrder::Infinite => true,
                    RelativeOrder::Finite(s) => !e.is_negative() && e.magnitude() < s,
                })
    }

    /// Collect an arbitrary word into its normal form.
    ///
    /// Panics if the word uses a generator index outside the presentation.
    pub fn collect(&self, word: &Word) -> ExponentVector {
        for (g, _) in word.syllables() {
            assert!(*g < self.n_gens(), "generator index {g} out of range");
        }
        let mut out = vec![BigInt::zero(); self.n_gens()];
        self.collect_level(0, word.syllables().to_vec(), &mut out);
        ExponentVector::new(out)
    }

    pub fn multiply(&self, a: &ExponentVector, b: &ExponentVector) -> ExponentVector {
        let out = self.mul_nf(0, a.exponents(), b.exponents());
        ExponentVector::new(out)
    }

    pub fn inverse(&self, a: &ExponentVector) -> ExponentVector {
        ExponentVector::new(self.inv_nf(0, a.exponents()))
    }

    pub fn power(&self, a: &ExponentVector, k: &BigInt) -> ExponentVector {
        ExponentVector::new(self.pow_nf(0, a.exponents(), k))
    }

    /// [a, b] = a^-1 b^-1 a b, evaluated as a single collection.
    pub fn commutator(&self, a: &ExponentVector, b: &ExponentVector) -> ExponentVector {
        let mut sylls = inverse_syllables(a.exponents(), 0);
        sylls.extend(inverse_syllables(b.exponents(), 0));
        sylls.extend(direct_syllables(a.exponents(), 0));
        sylls.extend(direct_syllables(b.exponents(), 0));
        let mut out = vec![BigInt::zero(); self.n_gens()];
        self.collect_level(0, sylls, &mut out);
        ExponentVector::new(out)
    }

    /// Uniform random normal form: per position, uniform in [0, s_i) when
    /// finite, uniform in [-bound, bound] when infinite.
    pub fn random_vector(&self, rng: &mut impl rand::Rng, bound: &BigUint) -> ExponentVector {
        let exps = self
            .orders()
            .iter()
            .map(|o| match o {
                RelativeOrder::Finite(s) => BigInt::from(rng.gen_biguint_below(s)),
                RelativeOrder::Infinite => {
                    let b = BigInt::from(bound.clone());
                    rng.gen_bigint_range(&-b.clone(), &(b + 1))
                }
            })
            .collect();
        ExponentVector::new(exps)
    }

    // ---- internal engine ---------------------------------------------

    /// Collect syllables that only involve generators >= level, writing the
    /// exponents into out[level..].
    fn collect_level(&self, level: usize, sylls: Vec<Syllable>, out: &mut [BigInt]) {
        let n = self.n_gens();
        if level >= n {
            debug_assert!(sylls.is_empty());
            return;
        }
        if sylls.is_empty() {
            return;
        }

        // Split into blocks of higher-generator syllables separated by
        // occurrences of x_level.
        let mut blocks: Vec<Vec<Syllable>> = vec![Vec::new()];
        let mut level_exps: Vec<BigInt> = Vec::new();
        for (g, e) in sylls {
            debug_assert!(g >= level);
            if g == level {
                level_exps.push(e);
                blocks.push(Vec::new());
            } else {
                blocks.last_mut().expect("nonempty").push((g, e));
            }
        }

        let total: BigInt = level_exps.iter().sum();

        // Move every x_level power to the front: a block jumped over by a
        // combined power x_level^t is conjugated by it.
        let mut tail: Vec<BigInt> = vec![BigInt::zero(); n];
        let mut suffix = total.clone();
        for (k, block) in blocks.iter().enumerate() {
            if !block.is_empty() {
                let conj = self.conjugate_block(level, &suffix, block);
                tail = self.mul_nf(level + 1, &tail, &conj);
            }
            if k < level_exps.len() {
                suffix -= &level_exps[k];
            }
        }

        // Renormalize the front exponent with the power relation.
        let front = match self.order(level) {
            RelativeOrder::Infinite => total,
            RelativeOrder::Finite(s) => {
                let (q, r) = total.div_mod_floor(&BigInt::from(s.clone()));
                if !q.is_zero() {
                    let rhs = self.pow_relation_element(level);
                    let rhs_pow = self.pow_nf(level + 1, &rhs, &q);
                    tail = self.mul_nf(level + 1, &rhs_pow, &tail);
                }
                r
            }
        };
        out[level] = front;
        for i in (level + 1)..n {
            out[i] = std::mem::take(&mut tail[i]);
        }
    }

    /// Normal form of x_level^{s_level} as a full-length vector. The stored
    /// tail is already normal by the construction invariants.
    fn pow_relation_element(&self, level: usize) -> Vec<BigInt> {
        let mut v = vec![BigInt::zero(); self.n_gens()];
        for (g, e) in self.pow_tail(level) {
            v[*g] = e.clone();
        }
        v
    }

    /// Product of two collected vectors supported on generators >= level.
    fn mul_nf(&self, level: usize, a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
        let mut sylls = direct_syllables(a, level);
        sylls.extend(direct_syllables(b, level));
        let mut out = vec![BigInt::zero(); self.n_gens()];
        self.collect_level(level, sylls, &mut out);
        out
    }

    fn inv_nf(&self, level: usize, a: &[BigInt]) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); self.n_gens()];
        self.collect_level(level, inverse_syllables(a, level), &mut out);
        out
    }

    /// True when all generators from `level` on pairwise commute, so the
    /// tail subgroup is presented abelian.
    fn abelian_from(&self, level: usize) -> bool {
        (level..self.n_gens()).all(|j| self.trivial_conjugator(j))
    }

    /// Binary powering of a collected vector supported on >= level. In an
    /// abelian tail the exponents just scale, which one collection pass
    /// renormalizes.
    fn pow_nf(&self, level: usize, a: &[BigInt], k: &BigInt) -> Vec<BigInt> {
        if self.abelian_from(level) {
            let sylls: Vec<Syllable> = a
                .iter()
                .enumerate()
                .skip(level)
                .filter(|(_, e)| !e.is_zero())
                .map(|(i, e)| (i, e * k))
                .collect();
            let mut out = vec![BigInt::zero(); self.n_gens()];
            self.collect_level(level, sylls, &mut out);
            return out;
        }
        if k.is_negative() {
            let inv = self.inv_nf(level, a);
            return self.pow_nf(level, &inv, &-k);
        }
        let mut result = vec![BigInt::zero(); self.n_gens()];
        let mag = k.magnitude();
        for b in (0..mag.bits()).rev() {
            result = self.mul_nf(level, &result, &result);
            if mag.bit(b) {
                result = self.mul_nf(level, &result, a);
            }
        }
        result
    }

    /// Apply the automorphism g -> x_level^-t g x_level^t to a block of
    /// syllables over generators > level, returning the collected image.
    fn conjugate_block(&self, level: usize, t: &BigInt, block: &[Syllable]) -> Vec<BigInt> {
        if t.is_zero() || self.trivial_conjugator(level) {
            let mut out = vec![BigInt::zero(); self.n_gens()];
            self.collect_level(level + 1, block.to_vec(), &mut out);
            return out;
        }
        let images = self.conjugator_power(level, t);
        let mut acc = vec![BigInt::zero(); self.n_gens()];
        for (g, e) in block {
            let img_pow = self.pow_nf(level + 1, &images[g - level - 1], e);
            acc = self.mul_nf(level + 1, &acc, &img_pow);
        }
        acc
    }

    /// Generator images of conjugation by x_level^t, for generators
    /// level+1..n, computed by square-and-multiply over automorphism
    /// composition.
    fn conjugator_power(&self, level: usize, t: &BigInt) -> Vec<Vec<BigInt>> {
        let n = self.n_gens();
        let tail_of = |k: usize| {
            if t.is_negative() {
                self.conj_inv_tail(k, level)
            } else {
                self.conj_tail(k, level)
            }
        };

        // Fast path: when every tail is itself fixed by the conjugation,
        // x_level^-t x_k x_level^t = x_k * tail^|t| directly.
        let tails_fixed =
            ((level + 1)..n).all(|k| tail_of(k).iter().all(|(m, _)| tail_of(*m).is_empty()));
        if tails_fixed {
            let mag = BigInt::from(t.magnitude().clone());
            return ((level + 1)..n)
                .map(|k| {
                    let mut tail_vec = vec![BigInt::zero(); n];
                    for (m, e) in tail_of(k) {
                        tail_vec[*m] = e.clone();
                    }
                    let tail_pow = self.pow_nf(level + 1, &tail_vec, &mag);
                    let mut sylls = vec![(k, BigInt::one())];
                    sylls.extend(direct_syllables(&tail_pow, level + 1));
                    let mut out = vec![BigInt::zero(); n];
                    self.collect_level(level + 1, sylls, &mut out);
                    out
                })
                .collect();
        }

        let base: Vec<Vec<BigInt>> = ((level + 1)..n)
            .map(|k| {
                let mut sylls = vec![(k, BigInt::one())];
                sylls.extend(tail_of(k).iter().cloned());
                let mut out = vec![BigInt::zero(); n];
                self.collect_level(level + 1, sylls, &mut out);
                out
            })
            .collect();

        let mut result: Vec<Vec<BigInt>> = ((level + 1)..n)
            .map(|k| {
                let mut v = vec![BigInt::zero(); n];
                v[k] = BigInt::one();
                v
            })
            .collect();
        let mut square = base;
        let mag = t.magnitude().clone();
        for b in 0..mag.bits() {
            if mag.bit(b) {
                result = self.compose_aut(level, &square, &result);
            }
            if b + 1 < mag.bits() {
                square = self.compose_aut(level, &square, &square);
            }
        }
        result
    }

    /// Composition a . b of two automorphisms given by generator images.
    fn compose_aut(&self, level: usize, a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
        b.iter().map(|img| self.apply_aut(level, a, img)).collect()
    }

    fn apply_aut(&self, level: usize, a: &[Vec<BigInt>], v: &[BigInt]) -> Vec<BigInt> {
        let mut acc = vec![BigInt::zero(); self.n_gens()];
        for (g, e) in direct_syllables(v, level + 1) {
            let img_pow = self.pow_nf(level + 1, &a[g - level - 1], &e);
            acc = self.mul_nf(level + 1, &acc, &img_pow);
        }
        acc
    }

    // ---- consistency and class checks --------------------------------

    /// Evaluate the overlap identities of the presentation via collection.
    /// A presentation passing all of them is treated as consistent.
    pub fn check_consistency(&self) -> ConsistencyReport {
        let n = self.n_gens();
        let gens: Vec<ExponentVector> = (0..n).map(|i| self.generator_element(i)).collect();
        let pow_el: Vec<Option<ExponentVector>> = (0..n)
            .map(|i| {
                self.order(i)
                    .finite()
                    .map(|_| ExponentVector::new(self.pow_relation_element(i)))
            })
            .collect();
        let mut checked = 0usize;
        let mut failures = Vec::new();

        for k in 0..n {
            for j in 0..k {
                for i in 0..j {
                    checked += 1;
                    let lhs = self.multiply(&gens[k], &self.multiply(&gens[j], &gens[i]));
                    let rhs = self.multiply(&self.multiply(&gens[k], &gens[j]), &gens[i]);
                    if lhs != rhs {
                        failures.push(ConsistencyFailure::Associativity { k, j, i });
                    }
                }
            }
        }
        for j in 0..n {
            for i in 0..j {
                if let (Some(sj), Some(pj)) = (self.order(j).finite(), &pow_el[j]) {
                    checked += 1;
                    let lhs = self.multiply(pj, &gens[i]);
                    let s_minus_1 = BigInt::from(sj.clone()) - 1;
                    let rhs = self.multiply(
                        &self.power(&gens[j], &s_minus_1),
                        &self.multiply(&gens[j], &gens[i]),
                    );
                    if lhs != rhs {
                        failures.push(ConsistencyFailure::PowerOverlapLeft { j, i });
                    }
                }
                if let (Some(si), Some(pi)) = (self.order(i).finite(), &pow_el[i]) {
                    checked += 1;
                    let lhs = self.multiply(&gens[j], pi);
                    let s_minus_1 = BigInt::from(si.clone()) - 1;
                    let rhs = self.multiply(
                        &self.multiply(&gens[j], &gens[i]),
                        &self.power(&gens[i], &s_minus_1),
                    );
                    if lhs != rhs {
                        failures.push(ConsistencyFailure::PowerOverlapRight { j, i });
                    }
                }
            }
        }
        for i in 0..n {
            if let Some(pi) = &pow_el[i] {
                checked += 1;
                if self.multiply(&gens[i], pi) != self.multiply(pi, &gens[i]) {
                    failures.push(ConsistencyFailure::PowerSelf { i });
                }
            }
        }
        for (i, gen_i) in gens.iter().enumerate() {
            for j in 0..i {
                // x_j (x_j^-1 x_i x_j) x_j^-1 = x_i, reading the middle from
                // the conj table
                checked += 2;
                let mut sylls = vec![(j, BigInt::one()), (i, BigInt::one())];
                sylls.extend(self.conj_tail(i, j).iter().cloned());
                sylls.push((j, BigInt::from(-1)));
                let mut out = vec![BigInt::zero(); n];
                self.collect_level(0, sylls, &mut out);
                if &ExponentVector::new(out) != gen_i {
                    failures.push(ConsistencyFailure::ConjInverse { j, i });
                }
                // and the mirrored direction through the conjinv table
                let mut sylls = vec![(j, BigInt::from(-1)), (i, BigInt::one())];
                sylls.extend(self.conj_inv_tail(i, j).iter().cloned());
                sylls.push((j, BigInt::one()));
                let mut out = vec![BigInt::zero(); n];
                self.collect_level(0, sylls, &mut out);
                if &ExponentVector::new(out) != gen_i {
                    failures.push(ConsistencyFailure::ConjInverseRev { j, i });
                }
            }
        }
        ConsistencyReport { checked, failures }
    }

    /// True iff every left-normed commutator of weight c+1 in the
    /// generators collects to the identity. Since the generator commutators
    /// generate the lower central terms, this bounds the class by c.
    pub fn verify_class_at_most(&self, c: usize) -> bool {
        assert!(c >= 1, "class bound must be positive");
        let n = self.n_gens();
        let gens: Vec<ExponentVector> = (0..n).map(|i| self.generator_element(i)).collect();
        // depth-first over tuples, sharing commutator prefixes
        let mut stack: Vec<(ExponentVector, usize)> = gens.iter().map(|g| (g.clone(), 1)).collect();
        while let Some((elem, weight)) = stack.pop() {
            if weight == c + 1 {
                if !elem.is_identity() {
                    return false;
                }
                continue;
            }
            for g in &gens {
                // a trivial prefix stays trivial under further commutation
                if weight >= 2 && elem.is_identity() {
                    break;
                }
                stack.push((self.commutator(&elem, g), weight + 1));
            }
        }
        true
    }
}

fn direct_syllables(v: &[BigInt], level: usize) -> Vec<Syllable> {
    v.iter()
        .enumerate()
        .skip(level)
        .filter(|(_, e)| !e.is_zero())
        .map(|(i, e)| (i, e.clone()))
        .collect()
}

fn inverse_syllables(v: &[BigInt], level: usize) -> Vec<Syllable> {
    v.iter()
        .enumerate()
        .skip(level)
        .rev()
        .filter(|(_, e)| !e.is_zero())
        .map(|(i, e)| (i, -e))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConsistencyFailure {
    Associativity { k: usize, j: usize, i: usize },
    PowerOverlapLeft { j: usize, i: usize },
    PowerOverlapRight { j: usize, i: usize },
    PowerSelf { i: usize },
    ConjInverse { j: usize, i: usize },
    ConjInverseRev { j: usize, i: usize },
}

impl fmt::Display for ConsistencyFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConsistencyFailure::Associativity { k, j, i } => write!(
                f,
                "x{}(x{}x{}) != (x{}x{})x{}",
                k + 1,
                j + 1,
                i + 1,
                k + 1,
                j + 1,
                i + 1
            ),
            ConsistencyFailure::PowerOverlapLeft { j, i } => write!(
                f,
                "(x{j}^s{j})x{i} != x{j}^(s{j}-1)(x{j}x{i})",
                j = j + 1,
                i = i + 1
            ),
            ConsistencyFailure::PowerOverlapRight { j, i } => write!(
                f,
                "x{j}(x{i}^s{i}) != (x{j}x{i})x{i}^(s{i}-1)",
                j = j + 1,
                i = i + 1
            ),
            ConsistencyFailure::PowerSelf { i } => {
                write!(f, "x{i}(x{i}^s{i}) != (x{i}^s{i})x{i}", i = i + 1)
            }
            ConsistencyFailure::ConjInverse { j, i } => write!(
                f,
                "x{j}(x{j}^-1 x{i} x{j})x{j}^-1 != x{i}",
                j = j + 1,
                i = i + 1
            ),
            ConsistencyFailure::ConjInverseRev { j, i } => write!(
                f,
                "x{j}^-1(x{j} x{i} x{j}^-1)x{j} != x{i}",
                j = j + 1,
                i = i + 1
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyReport {
    /// Number of overlap identities evaluated.
    pub checked: usize,
    pub failures: Vec<ConsistencyFailure>,
}

impl ConsistencyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for ConsistencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.failures.is_empty() {
            write!(f, "consistent ({} identities)", self.checked)
        } else {
            writeln!(f, "{} failed identities:", self.failures.len())?;
            for fail in &self.failures {
                writeln!(f, "  {fail}")?;
            }
            Ok(())
        }
    }
}
