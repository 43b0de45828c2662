//! Power-search-problem solvers and end-to-end eavesdropper attacks.
//!
//! The PSP asks: given g, h in a group, find an integer a with g^a = h;
//! it is the DLP in the cyclic group generated by g. Solvers:
//!
//! * [`psp_bruteforce`] — outward scan, the oracle of record at desk scale;
//! * [`psp_bsgs`] — baby-step/giant-step, about 2 sqrt(order) group
//!   multiplications, the classical baseline that makes the safe-prime
//!   subgroup setting expensive;
//! * [`psp_ut_reduce`] — the band reduction: in UT(n, R) the minimal
//!   nonzero band of g - I powers linearly, so the PSP collapses to
//!   additive-group equations in R (exact division over Z, linear
//!   congruences over Z_m intersected across entries, with any residual
//!   class disambiguated against full matrix equality);
//! * [`psp_pgroup_digits`] — digit-by-digit recovery of a in base p along
//!   a filtration G = G_0 > G_1 > ... > G_n = 1 with elementary abelian
//!   quotients, against pluggable per-level projections. The cost of each
//!   quotient DLP is the whole point: on a safe-prime subgroup the
//!   filtration collapses to G > 1 and step one is a full DLP.
//!
//! [`break_exchange`] replays role 1: it solves the PSP on role 1's
//! published element and then derives the shared key exactly as role 1
//! would, from public data only.
//!
//! Work accounting: `group_ops` counts the solver's group multiplications,
//! `ring_ops` counts additive-R equations examined by the band reduction,
//! and verification/recomputation multiplications are tracked separately
//! in `verify_ops` so solver cost comparisons stay clean.
//!
//! Note: solving the PSP in every p-group does not by itself settle it for
//! a general finite nilpotent group, since that reduction needs the
//! factorization of the group order, which may be unknown; nothing here
//! models factoring.

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::collections::HashMap;
use std::fmt;
use std::time::{Duration, Instant};
use thiserror::Error;

use crate::group::{Element, Group, GroupError};
use crate::matrix::UTMatrix;
use crate::presentation::NilpotentPresentation;
use crate::protocol::{derive_key_for_exponent, ProtocolError, ProtocolParams, Transcript};
use crate::ring::{self, intersect_classes, solve_linear_congruence, ResidueClass, RingDescriptor};

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("operation budget of {0} group multiplications exhausted")]
    BudgetExhausted(u64),
    #[error("no exponent found within bound {0}")]
    NotFound(u64),
    #[error("target is not in the cyclic group generated by the base")]
    NoSolution,
    #[error("target is not a power of the base: {0}")]
    NotAPower(String),
    #[error("solver does not support this platform: {0}")]
    UnsupportedPlatform(String),
    #[error("quotient oracle failed at level {level}: {reason}")]
    OracleFailure { level: usize, reason: String },
    #[error("digit recovery produced an exponent the group rejects; filtration inconsistent")]
    InconsistentFiltration,
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("{0} is not a safe prime")]
    NotSafePrime(BigUint),
}

/// Counts group multiplications, with an optional hard budget.
#[derive(Debug, Clone)]
pub struct OpCounter {
    used: u64,
    budget: Option<u64>,
}

impl OpCounter {
    pub fn new(budget: Option<u64>) -> Self {
        OpCounter { used: 0, budget }
    }

    pub fn unlimited() -> Self {
        OpCounter::new(None)
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    fn charge(&mut self, n: u64) -> Result<(), AttackError> {
        self.used += n;
        match self.budget {
            Some(b) if self.used > b => Err(AttackError::BudgetExhausted(b)),
            _ => Ok(()),
        }
    }

    fn mul(&mut self, g: &Group, a: &Element, b: &Element) -> Result<Element, AttackError> {
        self.charge(1)?;
        Ok(g.multiply(a, b)?)
    }

    /// Binary powering through the counter (2 log2 |k| multiplications).
    fn pow(&mut self, g: &Group, a: &Element, k: &BigInt) -> Result<Element, AttackError> {
        if k.is_negative() {
            let inv = g.inverse(a)?;
            return self.pow(g, &inv, &-k);
        }
        let mag = k.magnitude();
        let mut result = g.identity();
        for b in (0..mag.bits()).rev() {
            result = self.mul(g, &result, &result)?;
            if mag.bit(b) {
                result = self.mul(g, &result, a)?;
            }
        }
        Ok(result)
    }
}

/// A PSP instance: find a with base^a = target.
#[derive(Debug, Clone)]
pub struct PspInstance {
    pub group: Group,
    pub base: Element,
    pub target: Element,
}

/// Outward scan 0, 1, -1, 2, -2, ...; returns the first match, so the
/// smallest valid |a| with positive sign preferred.
pub fn psp_bruteforce(
    inst: &PspInstance,
    bound: u64,
    ctr: &mut OpCounter,
) -> Result<BigInt, AttackError> {
    let g = &inst.group;
    if g.is_identity(&inst.target) {
        return Ok(BigInt::zero());
    }
    let base_inv = g.inverse(&inst.base)?;
    let mut pos = g.identity();
    let mut neg = g.identity();
    for k in 1..=bound {
        pos = ctr.mul(g, &pos, &inst.base)?;
        if pos == inst.target {
            return Ok(BigInt::from(k));
        }
        neg = ctr.mul(g, &neg, &base_inv)?;
        if neg == inst.target {
            return Ok(-BigInt::from(k));
        }
    }
    Err(AttackError::NotFound(bound))
}

/// Baby-step/giant-step with ceil(sqrt(order)) stored baby steps; at most
/// 2 ceil(sqrt(order)) + O(1) group multiplications. Requires ord(base) to
/// divide `order`; fails with `NoSolution` when the target is outside the
/// cyclic subgroup.
pub fn psp_bsgs(
    inst: &PspInstance,
    order: &BigUint,
    ctr: &mut OpCounter,
) -> Result<BigInt, AttackError> {
    let g = &inst.group;
    let mut m = order.sqrt();
    if &(&m * &m) < order {
        m += 1u32;
    }

    let mut table: HashMap<Element, u64> = HashMap::new();
    let mut e = g.identity();
    let mut j = 0u64;
    table.insert(e.clone(), 0);
    while BigUint::from(j + 1) < m {
        e = ctr.mul(g, &e, &inst.base)?;
        j += 1;
        table.entry(e.clone()).or_insert(j);
    }
    // one more step gives base^m; its inverse is the giant stride
    let gm = ctr.mul(g, &e, &inst.base)?;
    let stride = g.inverse(&gm)?;

    let mut gamma = inst.target.clone();
    let mut i = BigUint::zero();
    while i < m {
        if let Some(&j) = table.get(&gamma) {
            let a = (&i * &m + j) % order;
            return Ok(BigInt::from(a));
        }
        gamma = ctr.mul(g, &gamma, &stride)?;
        i += 1u32;
    }
    Err(AttackError::NoSolution)
}

/// Work accounting for the band reduction.
#[derive(Debug, Clone, Default)]
pub struct ReduceStats {
    /// Additive-R equations examined (band entries processed).
    pub ring_ops: u64,
    /// Solver group multiplications (powers taken during modular descent).
    pub group_ops: u64,
    /// Group multiplications spent verifying the final answer.
    pub verify_ops: u64,
    /// Recursion depth in bands.
    pub bands_descended: u64,
}

/// Solve the PSP in UT(n, R) by band reduction and return the verified
/// exponent: the least non-negative representative of the solution class
/// for modular rings, the exact quotient over Z.
pub fn psp_ut_reduce(g: &UTMatrix, h: &UTMatrix) -> Result<(BigInt, ReduceStats), AttackError> {
    if g.group() != h.group() {
        return Err(AttackError::Group(GroupError::PlatformMismatch));
    }
    let mut stats = ReduceStats::default();
    let class = reduce_class(g, h, &mut stats)?;
    let mut a = class.rep.clone();

    // canonicalize modulo ord(g) when a bounded scan finds the order
    if g.group().ring().modulus().is_some() && !g.is_identity() {
        if let Some(ord) = matrix_order_bounded(g, 1_000_000, &mut stats.verify_ops) {
            a = a.mod_floor(&BigInt::from(ord));
        }
    }

    let n_bits = a.magnitude().bits().max(1);
    stats.verify_ops += 2 * n_bits;
    if g.pow(&a) != *h {
        return Err(AttackError::NotAPower(
            "verification g^a = h failed".to_string(),
        ));
    }
    Ok((a, stats))
}

fn matrix_order_bounded(g: &UTMatrix, limit: u64, ops: &mut u64) -> Option<BigUint> {
    let mut acc = g.clone();
    for k in 2..=limit {
        acc = acc.mul(g).ok()?;
        *ops += 1;
        if acc.is_identity() {
            return Some(BigUint::from(k));
        }
    }
    None
}

/// The recursive core: returns the full residue class of exponents
/// matching the minimal nonzero band, descending to higher bands while
/// the class stays ambiguous.
fn reduce_class(
    g: &UTMatrix,
    h: &UTMatrix,
    stats: &mut ReduceStats,
) -> Result<ResidueClass, AttackError> {
    let n = g.dimension();
    let ring = g.group().ring().clone();

    if g.is_identity() {
        return if h.is_identity() {
            Ok(ResidueClass::new(BigInt::zero(), BigUint::one()))
        } else {
            Err(AttackError::NotAPower(
                "base is the identity but target is not".to_string(),
            ))
        };
    }
    stats.bands_descended += 1;

    let k = (1..n)
        .find(|&k| g.band(k).iter().any(|e| !e.is_zero()))
        .expect("non-identity matrix has a nonzero band");
    // below band k the target must vanish like the base does
    for l in 1..k {
        if h.band(l).iter().any(|e| !e.is_zero()) {
            return Err(AttackError::NotAPower(format!(
                "target has a nonzero band {l} below the base's minimal band {k}"
            )));
        }
    }

    let gb = g.band(k);
    let hb = h.band(k);
    match ring.modulus() {
        None => {
            // over Z: a single exact quotient, cross-checked on every entry
            let mut found: Option<BigInt> = None;
            for (b, c) in gb.iter().zip(&hb) {
                stats.ring_ops += 1;
                if b.is_zero() {
                    if !c.is_zero() {
                        return Err(AttackError::NotAPower(
                            "zero base entry against nonzero target entry".to_string(),
                        ));
                    }
                    continue;
                }
                let (q, r) = c.div_rem(b);
                if !r.is_zero() {
                    return Err(AttackError::NotAPower(format!(
                        "entry {c} is not an integer multiple of {b}"
                    )));
                }
                match &found {
                    None => found = Some(q),
                    Some(prev) if *prev != q => {
                        return Err(AttackError::NotAPower(
                            "band entries disagree on the quotient".to_string(),
                        ))
                    }
                    _ => {}
                }
            }
            Ok(ResidueClass::single(
                found.expect("minimal band has a nonzero entry"),
            ))
        }
        Some(m) => {
            let m = m.clone();
            let mut class = ResidueClass::new(BigInt::zero(), BigUint::one());
            for (b, c) in gb.iter().zip(&hb) {
                stats.ring_ops += 1;
                if b.is_zero() {
                    if !c.is_zero() {
                        return Err(AttackError::NotAPower(
                            "zero base entry against nonzero target entry".to_string(),
                        ));
                    }
                    continue;
                }
                let sol = solve_linear_congruence(b, c, &m).ok_or_else(|| {
                    AttackError::NotAPower(format!("congruence {b} a = {c} (mod {m}) unsolvable"))
                })?;
                class = intersect_classes(&class, &sol).ok_or_else(|| {
                    AttackError::NotAPower("band congruences are incompatible".to_string())
                })?;
            }
            // residual ambiguity: a = rep + modulus * t; descend one band
            let step = BigInt::from(class.modulus.clone());
            let step_bits = step.magnitude().bits().max(1);
            stats.group_ops += 2 * step_bits;
            let g_step = g.pow(&step);
            if g_step.is_identity() {
                return Ok(class);
            }
            let rep_bits = class.rep.magnitude().bits().max(1);
            stats.group_ops += 2 * rep_bits + 1;
            let h_rest = h
                .mul(&g.pow(&-&class.rep))
                .expect("same group by construction");
            let inner = reduce_class(&g_step, &h_rest, stats)?;
            let rep = &class.rep + &step * &inner.rep;
            if inner.modulus.is_zero() {
                Ok(ResidueClass::single(rep))
            } else {
                Ok(ResidueClass::new(rep, &class.modulus * &inner.modulus))
            }
        }
    }
}

// ---- p-group digit recovery ------------------------------------------

/// A filtration G = G_0 > G_1 > ... > G_n = 1 with elementary abelian
/// quotients of exponent p, exposing per-level membership and a canonical
/// projection onto F_p coordinates of the quotient. The projections are
/// the pluggable quotient-DLP oracles: recovery cost lives here.
pub trait Filtration {
    fn group(&self) -> &Group;
    fn prime(&self) -> &BigUint;
    /// Number of proper steps; G_depth is the trivial subgroup.
    fn depth(&self) -> usize;
    /// Membership test for G_level, 0 <= level <= depth.
    fn contains(&self, level: usize, e: &Element) -> bool;
    /// F_p coordinates of e G_{level+1} inside G_level / G_{level+1};
    /// requires contains(level, e).
    fn project(&self, level: usize, e: &Element) -> Result<Vec<BigUint>, AttackError>;
}

/// Built-in filtration of the cyclic group of order p^k given by its
/// one-generator presentation: G_i is generated by x^(p^i).
pub struct CyclicPkFiltration {
    group: Group,
    p: BigUint,
    k: usize,
}

impl CyclicPkFiltration {
    pub fn new(p: BigUint, k: usize) -> Self {
        let order = p.pow(k as u32);
        CyclicPkFiltration {
            group: Group::presentation(NilpotentPresentation::cyclic(order)),
            p,
            k,
        }
    }

    fn exponent(e: &Element) -> Result<BigUint, AttackError> {
        match e {
            Element::Vector(v) if v.len() == 1 => v.exponent(0).to_biguint().ok_or_else(|| {
                AttackError::UnsupportedPlatform("negative normal form exponent".to_string())
            }),
            _ => Err(AttackError::UnsupportedPlatform(
                "expected a one-generator presentation element".to_string(),
            )),
        }
    }
}

impl Filtration for CyclicPkFiltration {
    fn group(&self) -> &Group {
        &self.group
    }

    fn prime(&self) -> &BigUint {
        &self.p
    }

    fn depth(&self) -> usize {
        self.k
    }

    fn contains(&self, level: usize, e: &Element) -> bool {
        match Self::exponent(e) {
            Ok(exp) => (exp % self.p.pow(level as u32)).is_zero(),
            Err(_) => false,
        }
    }

    fn project(&self, level: usize, e: &Element) -> Result<Vec<BigUint>, AttackError> {
        let exp = Self::exponent(e)?;
        Ok(vec![exp / self.p.pow(level as u32) % &self.p])
    }
}

/// Built-in filtration of the Heisenberg group over F_p realized as
/// UT(3, F_p): G_1 is the center (the (1,3) entries), G_2 trivial. For
/// odd p this is exactly the series G_{i+1} = G_i^p G_i'.
pub struct HeisenbergFpFiltration {
    group: Group,
    p: BigUint,
}

impl HeisenbergFpFiltration {
    pub fn new(p: BigUint) -> Result<Self, AttackError> {
        let ring = RingDescriptor::prime_field(p.clone())
            .map_err(|e| AttackError::UnsupportedPlatform(e.to_string()))?;
        let ut = crate::matrix::UTGroup::new(3, ring).expect("dimension 3");
        Ok(HeisenbergFpFiltration {
            group: Group::unitriangular(ut),
            p,
        })
    }

    fn matrix(e: &Element) -> Result<&UTMatrix, AttackError> {
        match e {
            Element::Matrix(m) if m.dimension() == 3 => Ok(m),
            _ => Err(AttackError::UnsupportedPlatform(
                "expected a UT(3, F_p) element".to_string(),
            )),
        }
    }
}

impl Filtration for HeisenbergFpFiltration {
    fn group(&self) -> &Group {
        &self.group
    }

    fn prime(&self) -> &BigUint {
        &self.p
    }

    fn depth(&self) -> usize {
        2
    }

    fn contains(&self, level: usize, e: &Element) -> bool {
        let Ok(m) = Self::matrix(e) else {
            return false;
        };
        match level {
            0 => true,
            1 => m.entry(0, 1).is_zero() && m.entry(1, 2).is_zero(),
            _ => m.is_identity(),
        }
    }

    fn project(&self, level: usize, e: &Element) -> Result<Vec<BigUint>, AttackError> {
        let m = Self::matrix(e)?;
        let coord = |x: BigInt| x.to_biguint().expect("prime field entries are canonical");
        match level {
            0 => Ok(vec![coord(m.entry(0, 1)), coord(m.entry(1, 2))]),
            1 => Ok(vec![coord(m.entry(0, 2))]),
            _ => Err(AttackError::OracleFailure {
                level,
                reason: "no quotient below the trivial subgroup".to_string(),
            }),
        }
    }
}

/// Solve d * u = v in F_p^dim; `None` means the quotient equations are
/// unsatisfiable, `Ok(None)` inside means u = 0 (digit undetermined here).
fn quotient_digit(
    u: &[BigUint],
    v: &[BigUint],
    p: &BigUint,
    level: usize,
) -> Result<Option<BigUint>, AttackError> {
    let pivot = u.iter().position(|x| !x.is_zero());
    let Some(j) = pivot else {
        return if v.iter().all(|x| x.is_zero()) {
            Ok(None)
        } else {
            Err(AttackError::OracleFailure {
                level,
                reason: "base image is trivial in the quotient but the target is not".to_string(),
            })
        };
    };
    let p_int = BigInt::from(p.clone());
    let inv = ring::mod_inverse(&BigInt::from(u[j].clone()), &p_int).ok_or_else(|| {
        AttackError::OracleFailure {
            level,
            reason: "pivot is not invertible; modulus not prime?".to_string(),
        }
    })?;
    let d = (BigInt::from(v[j].clone()) * inv).mod_floor(&p_int);
    let d = d.to_biguint().expect("mod_floor of positive modulus");
    // remaining coordinates must agree
    for (uu, vv) in u.iter().zip(v) {
        if (&d * uu) % p != vv % p {
            return Err(AttackError::OracleFailure {
                level,
                reason: "quotient coordinates disagree on the digit".to_string(),
            });
        }
    }
    Ok(Some(d))
}

/// Recover a with base^a = target digit by digit: a = a_0 + a_1 p + ...,
/// reading digit i from the first filtration level where base^(p^i) has a
/// nontrivial quotient image, then dividing the target out and descending.
/// The returned exponent is verified against the group before returning.
pub fn psp_pgroup_digits(
    inst: &PspInstance,
    filt: &dyn Filtration,
    ctr: &mut OpCounter,
) -> Result<BigInt, AttackError> {
    let g = &inst.group;
    let p = filt.prime().clone();
    let depth = filt.depth();
    let p_int = BigInt::from(p.clone());

    let mut a = BigUint::zero();
    let mut p_power = BigUint::one();
    let mut base_i = inst.base.clone();
    let mut t = inst.target.clone();

    for _digit_index in 0..depth {
        if g.is_identity(&base_i) {
            break;
        }
        // first usable level: base_i in G_k \ G_{k+1}
        let k = (0..depth)
            .find(|&k| !filt.contains(k + 1, &base_i))
            .unwrap_or(depth - 1);
        if !filt.contains(k, &t) {
            return Err(AttackError::NotAPower(format!(
                "target left filtration level {k} before the base did"
            )));
        }
        let u = filt.project(k, &base_i)?;
        let v = filt.project(k, &t)?;
        let digit = quotient_digit(&u, &v, &p, k)?.unwrap_or_else(BigUint::zero);

        if !digit.is_zero() {
            a += &digit * &p_power;
            let peel = ctr.pow(g, &base_i, &-BigInt::from(digit))?;
            t = ctr.mul(g, &t, &peel)?;
        }
        p_power *= &p;
        base_i = ctr.pow(g, &base_i, &p_int)?;
    }

    if !g.is_identity(&t) {
        return Err(AttackError::NoSolution);
    }
    let a = BigInt::from(a);
    // internal soundness check: a is only returned when base^a = target
    if ctr.pow(g, &inst.base, &a)? != inst.target {
        return Err(AttackError::InconsistentFiltration);
    }
    Ok(a)
}

// ---- safe prime machinery and reports ---------------------------------

pub fn is_safe_prime(p: &BigUint) -> bool {
    if !ring::is_probable_prime(p) {
        return false;
    }
    let one = BigUint::one();
    if p <= &BigUint::from(4u32) {
        return false;
    }
    ring::is_probable_prime(&((p - &one) / 2u32))
}

/// Smallest generator of the full multiplicative group mod a safe prime:
/// w with w^2 != 1 and w^q != 1.
pub fn safe_prime_generator(p: &BigUint) -> Result<BigUint, AttackError> {
    if !is_safe_prime(p) {
        return Err(AttackError::NotSafePrime(p.clone()));
    }
    let q = (p - BigUint::one()) / 2u32;
    let mut w = BigUint::from(2u32);
    while &w < p {
        let sq = w.modpow(&BigUint::from(2u32), p);
        let qp = w.modpow(&q, p);
        if !sq.is_one() && !qp.is_one() {
            return Ok(w);
        }
        w += 1u32;
    }
    unreachable!("a safe prime modulus always has a generator")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    BruteForce,
    Bsgs,
    UtReduce,
    PGroupDigits,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SolverKind::BruteForce => "bruteforce",
            SolverKind::Bsgs => "bsgs",
            SolverKind::UtReduce => "ut-reduce",
            SolverKind::PGroupDigits => "pgroup-digits",
        };
        write!(f, "{name}")
    }
}

impl std::str::FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bruteforce" => Ok(SolverKind::BruteForce),
            "bsgs" => Ok(SolverKind::Bsgs),
            "ut-reduce" => Ok(SolverKind::UtReduce),
            "pgroup-digits" => Ok(SolverKind::PGroupDigits),
            other => Err(format!(
                "unknown solver `{other}` (expected bruteforce, bsgs, ut-reduce, pgroup-digits)"
            )),
        }
    }
}

/// What an attack run did: recovered values, work counters, wall time.
/// A report is only marked successful after the recovered exponent has
/// been verified against the published element it explains.
#[derive(Debug, Clone)]
pub struct AttackReport {
    pub solver: SolverKind,
    pub success: bool,
    pub recovered_exponent: Option<BigInt>,
    pub recovered_key: Option<Element>,
    /// Solver group multiplications.
    pub group_ops: u64,
    /// Additive-R equations examined by the band reduction.
    pub ring_ops: u64,
    /// Group multiplications spent on verification and key recomputation.
    pub verify_ops: u64,
    pub elapsed: Duration,
    pub detail: String,
}

/// Demonstrate the safe-prime wall: in the order-q subgroup of Z_p^* the
/// filtration collapses to G > 1, so digit recovery is a full DLP; BSGS
/// needs about 2 sqrt(q) multiplications.
pub fn safe_prime_demo(p: &BigUint, seed: u64) -> Result<AttackReport, AttackError> {
    let start = Instant::now();
    if !is_safe_prime(p) {
        return Err(AttackError::NotSafePrime(p.clone()));
    }
    let q = (p - BigUint::one()) / 2u32;
    let w = safe_prime_generator(p)?;
    let base = w.modpow(&BigUint::from(2u32), p);

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let a = rng.gen_biguint_below(&q);
    let target = base.modpow(&a, p);

    let group = Group::cyclic_mod(crate::group::CyclicModGroup::with_subgroup_order(
        p.clone(),
        q.clone(),
    )?);
    let inst = PspInstance {
        group,
        base: Element::Residue(base.clone()),
        target: Element::Residue(target.clone()),
    };
    let mut ctr = OpCounter::unlimited();
    let found = psp_bsgs(&inst, &q, &mut ctr)?;

    let mut verify_ops = 0u64;
    let ok = base.modpow(found.magnitude(), p) == target;
    verify_ops += 2 * found.magnitude().bits().max(1);
    if !ok {
        return Err(AttackError::NoSolution);
    }
    Ok(AttackReport {
        solver: SolverKind::Bsgs,
        success: true,
        recovered_exponent: Some(found),
        recovered_key: None,
        group_ops: ctr.used(),
        ring_ops: 0,
        verify_ops,
        elapsed: start.elapsed(),
        detail: format!("safe prime p={p}, subgroup order q={q}, generator w={w}, base w^2={base}"),
    })
}

/// Passive eavesdropper: recover role 1's exponent from its published
/// element with the selected solver, then compute the shared key exactly
/// as role 1 would from the public transcript.
pub fn break_exchange(
    params: &ProtocolParams,
    transcript: &Transcript,
    solver: SolverKind,
    budget: Option<u64>,
) -> Result<AttackReport, AttackError> {
    let start = Instant::now();
    let group = params.group();

    let (base, target_label) = match params {
        ProtocolParams::I { bases, .. } => (bases[0].clone(), "g1"),
        ProtocolParams::II { base, .. } => (base.clone(), "g"),
    };
    let target = transcript
        .find(1, target_label)
        .ok_or(ProtocolError::IncompleteTranscript {
            role: 1,
            label: target_label.to_string(),
        })?
        .clone();
    let inst = PspInstance {
        group: group.clone(),
        base: base.clone(),
        target: target.clone(),
    };

    let mut ctr = OpCounter::new(budget);
    let mut ring_ops = 0u64;
    let mut verify_ops = 0u64;

    let solved: Result<BigInt, AttackError> = match solver {
        SolverKind::BruteForce => {
            let bound = budget.unwrap_or(1_000_000);
            psp_bruteforce(&inst, bound, &mut ctr)
        }
        SolverKind::Bsgs => {
            let order = bsgs_order_bound(group)?;
            psp_bsgs(&inst, &order, &mut ctr)
        }
        SolverKind::UtReduce => match (&base, &target) {
            (Element::Matrix(gm), Element::Matrix(hm)) => {
                psp_ut_reduce(gm, hm).map(|(a, stats)| {
                    ring_ops = stats.ring_ops;
                    ctr.used += stats.group_ops;
                    verify_ops += stats.verify_ops;
                    a
                })
            }
            _ => Err(AttackError::UnsupportedPlatform(
                "ut-reduce needs a unitriangular platform".to_string(),
            )),
        },
        SolverKind::PGroupDigits => {
            let filt = builtin_filtration(group)?;
            psp_pgroup_digits(&inst, filt.as_ref(), &mut ctr)
        }
    };

    let a1 = match solved {
        Ok(a) => a,
        Err(e @ (AttackError::BudgetExhausted(_) | AttackError::NotFound(_))) => {
            return Ok(AttackReport {
                solver,
                success: false,
                recovered_exponent: None,
                recovered_key: None,
                group_ops: ctr.used(),
                ring_ops,
                verify_ops,
                elapsed: start.elapsed(),
                detail: format!("attack failed: {e}"),
            });
        }
        Err(e) => return Err(e),
    };

    // verify the exponent against the published element before reporting
    verify_ops += 2 * a1.magnitude().bits().max(1);
    if group.power(&base, &a1)? != target {
        return Err(AttackError::NotAPower(
            "solver returned an exponent the transcript rejects".to_string(),
        ));
    }

    let key = derive_key_for_exponent(params, 1, &a1, transcript)?;
    verify_ops += 4 * params.parties() as u64; // commutator chain recomputation

    Ok(AttackReport {
        solver,
        success: true,
        recovered_exponent: Some(a1),
        recovered_key: Some(key),
        group_ops: ctr.used(),
        ring_ops,
        verify_ops,
        elapsed: start.elapsed(),
        detail: format!("recovered role 1 exponent on {}", group.description()),
    })
}

/// A multiple of every element order, for platforms where one is known.
fn bsgs_order_bound(group: &Group) -> Result<BigUint, AttackError> {
    match group {
        Group::CyclicMod(c) => Ok(c
            .subgroup_order()
            .cloned()
            .unwrap_or_else(|| c.modulus() - BigUint::one())),
        Group::Presentation(p) => p.group_order().ok_or_else(|| {
            AttackError::UnsupportedPlatform(
                "bsgs needs a finite platform with a known order bound".to_string(),
            )
        }),
        Group::Unitriangular(u) => match u.ring().modulus() {
            Some(m) => Ok(m.pow((u.dimension() * (u.dimension() - 1) / 2) as u32)),
            None => Err(AttackError::UnsupportedPlatform(
                "bsgs cannot run over the integers (infinite order)".to_string(),
            )),
        },
    }
}

/// The built-in filtrations, selected by platform shape: cyclic p^k
/// presentations and the Heisenberg group over F_p as UT(3, F_p).
pub fn builtin_filtration(group: &Group) -> Result<Box<dyn Filtration>, AttackError> {
    match group {
        Group::Presentation(pres) if pres.n_gens() == 1 => {
            let order = pres.group_order().ok_or_else(|| {
                AttackError::UnsupportedPlatform("infinite cyclic platform".to_string())
            })?;
            let (p, k) = prime_power(&order).ok_or_else(|| {
                AttackError::UnsupportedPlatform(format!("{order} is not a prime power"))
            })?;
            Ok(Box::new(CyclicPkFiltration::new(p, k)))
        }
        Group::Unitriangular(u) if u.dimension() == 3 => match u.ring() {
            RingDescriptor::PrimeField(p) => Ok(Box::new(HeisenbergFpFiltration::new(p.clone())?)),
            _ => Err(AttackError::UnsupportedPlatform(
                "digit recovery needs UT(3, F_p)".to_string(),
            )),
        },
        _ => Err(AttackError::UnsupportedPlatform(
            "no built-in filtration for this platform".to_string(),
        )),
    }
}

/// n = p^k by trial division; intended for fixture-sized orders.
fn prime_power(n: &BigUint) -> Option<(BigUint, usize)> {
    if n <= &BigUint::one() {
        return None;
    }
    let mut p = BigUint::from(2u32);
    let limit = n.sqrt() + BigUint::one();
    while p <= limit {
        if (n % &p).is_zero() {
            let mut rest = n.clone();
            let mut k = 0usize;
            while (&rest % &p).is_zero() {
                rest /= &p;
                k += 1;
            }
            return rest.is_one().then_some((p, k));
        }
        p += 1u32;
    }
    Some((n.clone(), 1))
}

// ---- benchmark ladders -------------------------------------------------

/// One rung of the BSGS cost ladder.
#[derive(Debug, Clone)]
pub struct BsgsRung {
    pub q_bits: u32,
    pub p: BigUint,
    pub q: BigUint,
    pub instances: u32,
    pub avg_ops: f64,
}

/// Find a safe prime p = 2q + 1 with q prime of the requested bit size,
/// deterministically from the seed.
pub fn find_safe_prime(q_bits: u32, seed: u64) -> BigUint {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ u64::from(q_bits));
    loop {
        let mut q = rng.gen_biguint(q_bits as u64);
        q.set_bit(q_bits as u64 - 1, true);
        q.set_bit(0, true);
        if !ring::is_probable_prime(&q) {
            continue;
        }
        let p = &q * 2u32 + 1u32;
        if ring::is_probable_prime(&p) {
            return p;
        }
    }
}

/// BSGS cost over a ladder of safe primes with q from 2^lo to 2^hi.
pub fn bsgs_ladder(
    lo_bits: u32,
    hi_bits: u32,
    instances: u32,
    seed: u64,
) -> Result<Vec<BsgsRung>, AttackError> {
    let mut rungs = Vec::new();
    for bits in lo_bits..=hi_bits {
        let p = find_safe_prime(bits, seed);
        let q = (&p - BigUint::one()) / 2u32;
        let w = safe_prime_generator(&p)?;
        let base = w.modpow(&BigUint::from(2u32), &p);
        let group = Group::cyclic_mod(crate::group::CyclicModGroup::with_subgroup_order(
            p.clone(),
            q.clone(),
        )?);

        let mut rng = ChaCha20Rng::seed_from_u64(seed.wrapping_add(u64::from(bits)));
        let mut total: u64 = 0;
        for _ in 0..instances {
            let a = rng.gen_biguint_below(&q);
            let target = base.modpow(&a, &p);
            let inst = PspInstance {
                group: group.clone(),
                base: Element::Residue(base.clone()),
                target: Element::Residue(target),
            };
            let mut ctr = OpCounter::unlimited();
            let found = psp_bsgs(&inst, &q, &mut ctr)?;
            debug_assert_eq!(found.magnitude(), &a);
            total += ctr.used();
        }
        rungs.push(BsgsRung {
            q_bits: bits,
            p,
            q,
            instances,
            avg_ops: total as f64 / f64::from(instances),
        });
    }
    Ok(rungs)
}

/// One rung of the band-reduction cost sweep.
#[derive(Debug, Clone)]
pub struct UtReduceRung {
    pub exponent_bits: u32,
    pub dimension: usize,
    pub instances: u32,
    /// Average additive-R equations examined per solve.
    pub avg_ring_ops: f64,
    /// Average solver group multiplications per solve (0 over Z).
    pub avg_group_ops: f64,
}

/// Band-reduction cost at fixed dimension across exponent magnitudes:
/// the solver's work stays flat while the exponent bound sweeps.
pub fn ut_reduce_ladder(
    dimension: usize,
    exponent_bits: &[u32],
    instances: u32,
    seed: u64,
) -> Result<Vec<UtReduceRung>, AttackError> {
    let group = crate::matrix::UTGroup::new(dimension, RingDescriptor::Integers)
        .map_err(GroupError::from)?;
    let mut rungs = Vec::new();
    for &bits in exponent_bits {
        let mut rng = ChaCha20Rng::seed_from_u64(seed.wrapping_add(u64::from(bits)));
        let mut ring_total = 0u64;
        let mut group_total = 0u64;
        for _ in 0..instances {
            let g = loop {
                let g = group
                    .random_with(&mut rng, &BigUint::from(50u32))
                    .map_err(GroupError::from)?;
                if !g.is_identity() {
                    break g;
                }
            };
            let mut a = BigInt::from(rng.gen_biguint(u64::from(bits)));
            if a.is_zero() {
                a = BigInt::one();
            }
            if rng.gen_bool(0.5) {
                a = -a;
            }
            let h = g.pow(&a);
            let (found, stats) = psp_ut_reduce(&g, &h)?;
            debug_assert_eq!(found, a);
            ring_total += stats.ring_ops;
            group_total += stats.group_ops;
        }
        rungs.push(UtReduceRung {
            exponent_bits: bits,
            dimension,
            instances,
            avg_ring_ops: ring_total as f64 / f64::from(instances),
            avg_group_ops: group_total as f64 / f64::from(instances),
        });
    }
    Ok(rungs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{superdiagonal_bases, superdiagonal_ones, CyclicModGroup};
    use crate::matrix::UTGroup;
    use crate::presentation::ExponentVector;
    use crate::protocol::run_exchange;
    use num_traits::ToPrimitive;
    use rand::Rng;

    fn bi(x: i64) -> BigInt {
        BigInt::from(x)
    }

    fn bu(x: u64) -> BigUint {
        BigUint::from(x)
    }

    fn ut_group(n: usize, ring: RingDescriptor) -> UTGroup {
        UTGroup::new(n, ring).unwrap()
    }

    #[test]
    fn bruteforce_examples() {
        let pres = NilpotentPresentation::heisenberg();
        let group = Group::presentation(pres);
        let x3 = Element::Vector(ExponentVector::new(vec![bi(0), bi(0), bi(1)]));
        let x3_5 = Element::Vector(ExponentVector::new(vec![bi(0), bi(0), bi(5)]));
        let inst = PspInstance {
            group: group.clone(),
            base: x3.clone(),
            target: x3_5,
        };
        let mut ctr = OpCounter::unlimited();
        assert_eq!(psp_bruteforce(&inst, 10, &mut ctr).unwrap(), bi(5));
        // g = h != 1 scans to 1
        let same = PspInstance {
            group: group.clone(),
            base: x3.clone(),
            target: x3.clone(),
        };
        assert_eq!(
            psp_bruteforce(&same, 10, &mut OpCounter::unlimited()).unwrap(),
            bi(1)
        );
        // identity target is 0
        let idt = PspInstance {
            group: group.clone(),
            base: x3.clone(),
            target: group.identity(),
        };
        assert_eq!(
            psp_bruteforce(&idt, 10, &mut OpCounter::unlimited()).unwrap(),
            bi(0)
        );
        // out of range
        let far = Element::Vector(ExponentVector::new(vec![bi(0), bi(0), bi(100)]));
        let inst = PspInstance {
            group,
            base: x3,
            target: far,
        };
        assert!(matches!(
            psp_bruteforce(&inst, 10, &mut OpCounter::unlimited()),
            Err(AttackError::NotFound(10))
        ));
    }

    #[test]
    fn bsgs_mod_23() {
        // 2 has order 11 mod 23; 2^7 = 128 = 13
        let group = Group::cyclic_mod(CyclicModGroup::new(bu(23)).unwrap());
        let inst = PspInstance {
            group,
            base: Element::Residue(bu(2)),
            target: Element::Residue(bu(13)),
        };
        let mut ctr = OpCounter::unlimited();
        assert_eq!(psp_bsgs(&inst, &bu(11), &mut ctr).unwrap(), bi(7));
        assert!(ctr.used() <= 2 * 4 + 4); // 2 ceil(sqrt(11)) + 4

        let one = PspInstance {
            target: Element::Residue(bu(1)),
            ..inst.clone()
        };
        assert_eq!(
            psp_bsgs(&one, &bu(11), &mut OpCounter::unlimited()).unwrap(),
            bi(0)
        );
        let two = PspInstance {
            target: Element::Residue(bu(2)),
            ..inst.clone()
        };
        assert_eq!(
            psp_bsgs(&two, &bu(11), &mut OpCounter::unlimited()).unwrap(),
            bi(1)
        );
        // 5 is not in <2> (it is a non-residue)
        let out = PspInstance {
            target: Element::Residue(bu(5)),
            ..inst
        };
        assert!(matches!(
            psp_bsgs(&out, &bu(11), &mut OpCounter::unlimited()),
            Err(AttackError::NoSolution)
        ));
    }

    #[test]
    fn bsgs_agrees_with_bruteforce_and_respects_op_bound() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for order in [24u64, 100, 991, 5040, 10000] {
            // cyclic presentation of that order
            let group = Group::presentation(NilpotentPresentation::cyclic(bu(order)));
            let gen = Element::Vector(ExponentVector::new(vec![bi(1)]));
            for _ in 0..5 {
                let a = rng.gen_range(0..order);
                let target = group.power(&gen, &bi(a as i64)).unwrap();
                let inst = PspInstance {
                    group: group.clone(),
                    base: gen.clone(),
                    target,
                };
                let mut ctr = OpCounter::unlimited();
                let found = psp_bsgs(&inst, &bu(order), &mut ctr).unwrap();
                assert_eq!(found, bi(a as i64));
                let m = (order as f64).sqrt().ceil() as u64;
                assert!(ctr.used() <= 2 * m + 4, "ops {} order {order}", ctr.used());
                let brute = psp_bruteforce(&inst, order, &mut OpCounter::unlimited()).unwrap();
                let diff = (found - brute) % bi(order as i64);
                assert!(diff.is_zero());
            }
        }
    }

    #[test]
    fn budget_exhaustion_aborts() {
        let group = Group::cyclic_mod(CyclicModGroup::new(bu(1000003)).unwrap());
        let inst = PspInstance {
            group: group.clone(),
            base: Element::Residue(bu(2)),
            target: Element::Residue(bu(999999)),
        };
        let mut ctr = OpCounter::new(Some(50));
        assert!(matches!(
            psp_bsgs(&inst, &bu(1000002), &mut ctr),
            Err(AttackError::BudgetExhausted(50))
        ));
        let mut ctr = OpCounter::new(Some(50));
        assert!(matches!(
            psp_bruteforce(&inst, 1000, &mut ctr),
            Err(AttackError::BudgetExhausted(50))
        ));
    }

    #[test]
    fn ut_reduce_integer_example() {
        // g = I+2e12+5e13, h = g^7 = I+14e12+35e13
        let g7 = ut_group(3, RingDescriptor::Integers);
        let g = g7.from_entries(vec![bi(2), bi(5), bi(0)]).unwrap();
        let h = g.pow(&bi(7));
        assert_eq!(h.entry(0, 1), bi(14));
        assert_eq!(h.entry(0, 2), bi(35));
        let (a, stats) = psp_ut_reduce(&g, &h).unwrap();
        assert_eq!(a, bi(7));
        assert!(stats.ring_ops >= 1);
        // g = h gives exponent 1
        let (a, _) = psp_ut_reduce(&g, &g).unwrap();
        assert_eq!(a, bi(1));
        // negative exponents come out exact
        let (a, _) = psp_ut_reduce(&g, &g.pow(&bi(-9))).unwrap();
        assert_eq!(a, bi(-9));
        // non-powers are rejected
        let bogus = g7.from_entries(vec![bi(3), bi(5), bi(0)]).unwrap();
        assert!(matches!(
            psp_ut_reduce(&g, &bogus),
            Err(AttackError::NotAPower(_))
        ));
    }

    #[test]
    fn ut_reduce_zmod6_example() {
        // g = I+2e12+3e23 over Z_6, h = g^5: 2a=4 (mod 6) and 3a=3 (mod 6)
        // intersect to a = 5 (mod 6)
        let grp = ut_group(3, RingDescriptor::integers_mod(bu(6)).unwrap());
        let g = grp.from_entries(vec![bi(2), bi(0), bi(3)]).unwrap();
        let h = g.pow(&bi(5));
        assert_eq!(h.band(1), vec![bi(4), bi(3)]);
        let (a, _) = psp_ut_reduce(&g, &h).unwrap();
        assert_eq!(a, bi(5));
    }

    #[test]
    fn ut_reduce_descends_bands_on_ambiguity() {
        // base with even band-1 entry mod 8: the congruence leaves a
        // residual class that band 2 disambiguates
        let grp = ut_group(3, RingDescriptor::integers_mod(bu(8)).unwrap());
        let g = grp.from_entries(vec![bi(2), bi(1), bi(2)]).unwrap();
        for a in 0..16i64 {
            let h = g.pow(&bi(a));
            let (found, _) = psp_ut_reduce(&g, &h).unwrap();
            assert_eq!(g.pow(&found), h, "a = {a}");
        }
    }

    #[test]
    fn ut_reduce_agrees_with_bruteforce_random() {
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        for ring in [
            RingDescriptor::Integers,
            RingDescriptor::integers_mod(bu(6)).unwrap(),
            RingDescriptor::integers_mod(bu(12)).unwrap(),
            RingDescriptor::prime_field(bu(7)).unwrap(),
        ] {
            let grp = ut_group(3, ring.clone());
            let platform = Group::unitriangular(grp.clone());
            for _ in 0..15 {
                let g = loop {
                    let g = grp.random_with(&mut rng, &bu(9)).unwrap();
                    if !g.is_identity() {
                        break g;
                    }
                };
                let a = bi(rng.gen_range(-1000i64..1000));
                let h = g.pow(&a);
                let (found, _) = psp_ut_reduce(&g, &h).unwrap();
                assert_eq!(g.pow(&found), h);
                let inst = PspInstance {
                    group: platform.clone(),
                    base: Element::Matrix(g.clone()),
                    target: Element::Matrix(h.clone()),
                };
                let brute = psp_bruteforce(&inst, 1000, &mut OpCounter::unlimited()).unwrap();
                match ring.modulus() {
                    None => assert_eq!(found, brute),
                    Some(_) => {
                        // equal modulo ord(g)
                        assert_eq!(g.pow(&brute), g.pow(&found));
                    }
                }
            }
        }
    }

    #[test]
    fn digit_recovery_cyclic_nine() {
        // order 9, p = 3: h = g^5 has digits (2, 1)
        let filt = CyclicPkFiltration::new(bu(3), 2);
        let group = filt.group().clone();
        let gen = Element::Vector(ExponentVector::new(vec![bi(1)]));
        let target = group.power(&gen, &bi(5)).unwrap();
        let inst = PspInstance {
            group: group.clone(),
            base: gen.clone(),
            target,
        };
        let mut ctr = OpCounter::unlimited();
        assert_eq!(psp_pgroup_digits(&inst, &filt, &mut ctr).unwrap(), bi(5));
        // identity target
        let idt = PspInstance {
            group: group.clone(),
            base: gen,
            target: group.identity(),
        };
        assert_eq!(
            psp_pgroup_digits(&idt, &filt, &mut OpCounter::unlimited()).unwrap(),
            bi(0)
        );
    }

    #[test]
    fn digit_recovery_deep_base() {
        // base already inside G_1: the usable level shifts down
        let filt = CyclicPkFiltration::new(bu(3), 3); // order 27
        let group = filt.group().clone();
        let gen = Element::Vector(ExponentVector::new(vec![bi(3)])); // x^3, order 9
        for a in 0..9i64 {
            let target = group.power(&gen, &bi(a)).unwrap();
            let inst = PspInstance {
                group: group.clone(),
                base: gen.clone(),
                target,
            };
            let found = psp_pgroup_digits(&inst, &filt, &mut OpCounter::unlimited()).unwrap();
            assert_eq!(
                group.power(&gen, &found).unwrap(),
                group.power(&gen, &bi(a)).unwrap()
            );
        }
    }

    #[test]
    fn digit_recovery_heisenberg_f3() {
        let filt = HeisenbergFpFiltration::new(bu(3)).unwrap();
        let group = filt.group().clone();
        let Group::Unitriangular(ug) = &group else {
            unreachable!()
        };
        // non-central and central bases, all powers
        let bases = [
            ug.from_entries(vec![bi(1), bi(0), bi(1)]).unwrap(),
            ug.from_entries(vec![bi(2), bi(1), bi(1)]).unwrap(),
            ug.from_entries(vec![bi(0), bi(2), bi(0)]).unwrap(),
            ug.from_entries(vec![bi(0), bi(0), bi(1)]).unwrap(), // central
        ];
        for base in bases {
            let b = Element::Matrix(base.clone());
            for a in 0..9i64 {
                let target = group.power(&b, &bi(a)).unwrap();
                let inst = PspInstance {
                    group: group.clone(),
                    base: b.clone(),
                    target: target.clone(),
                };
                let found = psp_pgroup_digits(&inst, &filt, &mut OpCounter::unlimited()).unwrap();
                assert_eq!(group.power(&b, &found).unwrap(), target);
                let brute = psp_bruteforce(&inst, 30, &mut OpCounter::unlimited()).unwrap();
                assert_eq!(
                    group.power(&b, &brute).unwrap(),
                    group.power(&b, &found).unwrap()
                );
            }
        }
    }

    #[test]
    fn digit_recovery_reports_oracle_disagreement() {
        // base I+e12 and target I+e23 map to independent quotient
        // coordinates: no digit satisfies both
        let filt = HeisenbergFpFiltration::new(bu(3)).unwrap();
        let group = filt.group().clone();
        let Group::Unitriangular(ug) = &group else {
            unreachable!()
        };
        let inst = PspInstance {
            group: group.clone(),
            base: Element::Matrix(ug.from_entries(vec![bi(1), bi(0), bi(0)]).unwrap()),
            target: Element::Matrix(ug.from_entries(vec![bi(0), bi(0), bi(1)]).unwrap()),
        };
        assert!(matches!(
            psp_pgroup_digits(&inst, &filt, &mut OpCounter::unlimited()),
            Err(AttackError::OracleFailure { level: 0, .. })
        ));
    }

    #[test]
    fn digit_recovery_rejects_outsiders() {
        let filt = HeisenbergFpFiltration::new(bu(3)).unwrap();
        let group = filt.group().clone();
        let Group::Unitriangular(ug) = &group else {
            unreachable!()
        };
        // target outside <base>: central base, non-central target
        let base = Element::Matrix(ug.from_entries(vec![bi(0), bi(0), bi(1)]).unwrap());
        let target = Element::Matrix(ug.from_entries(vec![bi(1), bi(0), bi(0)]).unwrap());
        let inst = PspInstance {
            group,
            base,
            target,
        };
        assert!(psp_pgroup_digits(&inst, &filt, &mut OpCounter::unlimited()).is_err());
    }

    #[test]
    fn safe_prime_demo_p23() {
        let report = safe_prime_demo(&bu(23), 99).unwrap();
        assert!(report.success);
        assert!(report.detail.contains("w=5"));
        assert!(report.detail.contains("base w^2=2"));
        // op count about 2 sqrt(11) + O(1)
        assert!(report.group_ops <= 2 * 4 + 4, "ops {}", report.group_ops);
        assert!(!is_safe_prime(&bu(13)));
        assert!(is_safe_prime(&bu(7)));
        assert!(safe_prime_demo(&bu(13), 0).is_err());
        let r7 = safe_prime_demo(&bu(7), 1).unwrap();
        assert!(r7.group_ops <= 2 * 2 + 4);
        // q = 5: a seed whose sampled instance exponent is 0
        for seed in 0..64 {
            let r11 = safe_prime_demo(&bu(11), seed).unwrap();
            assert!(r11.success);
            if r11.recovered_exponent == Some(BigInt::zero()) {
                return;
            }
        }
        panic!("no seed produced the zero-exponent instance");
    }

    #[test]
    fn break_protocol_one_on_ut3z() {
        let ug = ut_group(3, RingDescriptor::Integers);
        let params = ProtocolParams::I {
            bases: superdiagonal_bases(&ug),
            group: Group::unitriangular(ug),
        };
        let out = run_exchange(&params, &[bi(2), bi(3), bi(5)]).unwrap();
        let report = break_exchange(&params, &out.transcript, SolverKind::UtReduce, None).unwrap();
        assert!(report.success);
        assert_eq!(report.recovered_exponent, Some(bi(2)));
        assert_eq!(report.recovered_key, Some(out.shared_key));
    }

    #[test]
    fn break_protocol_two_on_ut4z() {
        let ug = ut_group(4, RingDescriptor::Integers);
        let params = ProtocolParams::II {
            anchor: Element::Matrix(ug.elementary(0, 1, bi(1))),
            base: superdiagonal_ones(&ug),
            group: Group::unitriangular(ug.clone()),
            arity: 2,
        };
        let out = run_exchange(&params, &[bi(2), bi(3), bi(5)]).unwrap();
        let report = break_exchange(&params, &out.transcript, SolverKind::UtReduce, None).unwrap();
        assert!(report.success);
        assert_eq!(
            report.recovered_key,
            Some(Element::Matrix(ug.elementary(0, 3, bi(30))))
        );
        // bruteforce gets there too on small keys
        let report =
            break_exchange(&params, &out.transcript, SolverKind::BruteForce, Some(100)).unwrap();
        assert!(report.success);
        assert_eq!(report.recovered_key, Some(out.shared_key));
    }

    #[test]
    fn break_with_bsgs_and_digit_solvers() {
        // bsgs with the group-order bound on a finite matrix platform
        let ug = ut_group(3, RingDescriptor::integers_mod(bu(6)).unwrap());
        let params = ProtocolParams::I {
            bases: superdiagonal_bases(&ug),
            group: Group::unitriangular(ug),
        };
        let out = run_exchange(&params, &[bi(5), bi(3), bi(7)]).unwrap();
        let report = break_exchange(&params, &out.transcript, SolverKind::Bsgs, None).unwrap();
        assert!(report.success);
        assert_eq!(report.recovered_key, Some(out.shared_key));

        // digit recovery via the built-in Heisenberg-over-F_p filtration
        let ug = ut_group(3, RingDescriptor::prime_field(bu(3)).unwrap());
        let params = ProtocolParams::I {
            bases: superdiagonal_bases(&ug),
            group: Group::unitriangular(ug),
        };
        let out = run_exchange(&params, &[bi(2), bi(4), bi(7)]).unwrap();
        let report =
            break_exchange(&params, &out.transcript, SolverKind::PGroupDigits, None).unwrap();
        assert!(report.success);
        assert_eq!(report.recovered_key, Some(out.shared_key));

        // solvers refuse platforms they cannot handle
        let ug = ut_group(3, RingDescriptor::Integers);
        let params = ProtocolParams::I {
            bases: superdiagonal_bases(&ug),
            group: Group::unitriangular(ug),
        };
        let out = run_exchange(&params, &[bi(2), bi(3), bi(5)]).unwrap();
        assert!(matches!(
            break_exchange(&params, &out.transcript, SolverKind::Bsgs, None),
            Err(AttackError::UnsupportedPlatform(_))
        ));
        assert!(matches!(
            break_exchange(&params, &out.transcript, SolverKind::PGroupDigits, None),
            Err(AttackError::UnsupportedPlatform(_))
        ));
    }

    #[test]
    fn break_handles_order_multiple_keys() {
        // role 1's key is a multiple of ord(g1) on a modular platform: the
        // canonical recovered exponent is 0 and the honest key is trivial
        let ug = ut_group(3, RingDescriptor::integers_mod(bu(6)).unwrap());
        let params = ProtocolParams::I {
            bases: superdiagonal_bases(&ug),
            group: Group::unitriangular(ug),
        };
        let out = run_exchange(&params, &[bi(6), bi(5), bi(7)]).unwrap();
        let report = break_exchange(&params, &out.transcript, SolverKind::UtReduce, None).unwrap();
        assert!(report.success);
        assert_eq!(report.recovered_exponent, Some(bi(0)));
        assert_eq!(report.recovered_key, Some(out.shared_key.clone()));
        assert!(params.group().is_identity(&out.shared_key));
    }

    #[test]
    fn break_fails_cleanly_on_budget() {
        let ug = ut_group(3, RingDescriptor::Integers);
        let params = ProtocolParams::I {
            bases: superdiagonal_bases(&ug),
            group: Group::unitriangular(ug),
        };
        let out = run_exchange(&params, &[bi(100003), bi(3), bi(5)]).unwrap();
        let report =
            break_exchange(&params, &out.transcript, SolverKind::BruteForce, Some(1000)).unwrap();
        assert!(!report.success);
        assert!(report.recovered_key.is_none());
        assert!(report.detail.contains("failed"));
    }

    #[test]
    fn bsgs_ladder_scales_like_sqrt_q() {
        let rungs = bsgs_ladder(10, 14, 8, 4242).unwrap();
        assert_eq!(rungs.len(), 5);
        for pair in rungs.windows(2) {
            let measured = pair[1].avg_ops / pair[0].avg_ops;
            let q1 = pair[0].q.to_f64().unwrap();
            let q2 = pair[1].q.to_f64().unwrap();
            let expected = (q2 / q1).sqrt();
            let rel = (measured / expected - 1.0).abs();
            assert!(
                rel <= 0.25,
                "bits {} -> {}: measured {measured:.3} expected {expected:.3}",
                pair[0].q_bits,
                pair[1].q_bits
            );
        }
    }

    #[test]
    fn ut_reduce_ladder_is_flat_in_the_exponent() {
        let rungs = ut_reduce_ladder(4, &[16, 64, 128, 256], 10, 7).unwrap();
        let costs: Vec<f64> = rungs
            .iter()
            .map(|r| r.avg_ring_ops + r.avg_group_ops)
            .collect();
        let max = costs.iter().cloned().fold(f64::MIN, f64::max);
        let min = costs.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max / min <= 1.1, "costs {costs:?}");
    }

    #[test]
    fn prime_power_decomposition() {
        assert_eq!(prime_power(&bu(27)), Some((bu(3), 3)));
        assert_eq!(prime_power(&bu(625)), Some((bu(5), 4)));
        assert_eq!(prime_power(&bu(7)), Some((bu(7), 1)));
        assert_eq!(prime_power(&bu(12)), None);
        assert_eq!(prime_power(&bu(1)), None);
    }
}
