//! Coefficient rings for unitriangular matrix groups: the integers,
//! integers modulo m, and prime fields.
//!
//! Ring elements are plain `BigInt`s; the descriptor owns the modulus and
//! the reduction convention (canonical residues in `[0, m)`), so equality
//! of reduced entries is bitwise.

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RingError {
    #[error("modulus must be at least 2, got {0}")]
    ModulusTooSmall(BigUint),
    #[error("{0} is not prime")]
    NotPrime(BigUint),
    #[error("unknown ring token `{0}`")]
    BadToken(String),
}

/// The coefficient domain of a `UT(n, R)` group.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RingDescriptor {
    /// The ring of integers.
    Integers,
    /// Integers modulo m, m >= 2, canonical residues in `[0, m)`.
    IntegersMod(BigUint),
    /// The prime field Z_p; the modulus has passed a Miller-Rabin test
    /// with error probability below 2^-128.
    PrimeField(BigUint),
}

impl RingDescriptor {
    pub fn integers() -> Self {
        RingDescriptor::Integers
    }

    pub fn integers_mod(m: BigUint) -> Result<Self, RingError> {
        if m < BigUint::from(2u32) {
            return Err(RingError::ModulusTooSmall(m));
        }
        Ok(RingDescriptor::IntegersMod(m))
    }

    pub fn prime_field(p: BigUint) -> Result<Self, RingError> {
        if p < BigUint::from(2u32) {
            return Err(RingError::ModulusTooSmall(p));
        }
        if !is_probable_prime(&p) {
            return Err(RingError::NotPrime(p));
        }
        Ok(RingDescriptor::PrimeField(p))
    }

    pub fn modulus(&self) -> Option<&BigUint> {
        match self {
            RingDescriptor::Integers => None,
            RingDescriptor::IntegersMod(m) | RingDescriptor::PrimeField(m) => Some(m),
        }
    }

    /// Reduce into the canonical residue range; a no-op over the integers.
    pub fn reduce(&self, x: BigInt) -> BigInt {
        match self.modulus() {
            None => x,
            Some(m) => x.mod_floor(&BigInt::from(m.clone())),
        }
    }

    pub fn add(&self, a: &BigInt, b: &BigInt) -> BigInt {
        self.reduce(a + b)
    }

    pub fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        self.reduce(a * b)
    }

    pub fn neg(&self, a: &BigInt) -> BigInt {
        self.reduce(-a)
    }

    /// Textual form used in the matrix file header: `Z`, `Zmod <m>`, `Fp <p>`.
    pub fn token(&self) -> String {
        match self {
            RingDescriptor::Integers => "Z".to_string(),
            RingDescriptor::IntegersMod(m) => format!("Zmod {m}"),
            RingDescriptor::PrimeField(p) => format!("Fp {p}"),
        }
    }

    pub fn parse_token(words: &[&str]) -> Result<Self, RingError> {
        match words {
            ["Z"] => Ok(RingDescriptor::Integers),
            ["Zmod", m] => {
                let m = m
                    .parse::<BigUint>()
                    .map_err(|_| RingError::BadToken(words.join(" ")))?;
                RingDescriptor::integers_mod(m)
            }
            ["Fp", p] => {
                let p = p
                    .parse::<BigUint>()
                    .map_err(|_| RingError::BadToken(words.join(" ")))?;
                RingDescriptor::prime_field(p)
            }
            _ => Err(RingError::BadToken(words.join(" "))),
        }
    }
}

/// Miller-Rabin with 64 pseudo-random bases; composite escape probability
/// is below 4^-64 = 2^-128. Bases are drawn from a generator seeded by the
/// candidate itself so the verdict is reproducible.
pub fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for p in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let p = BigUint::from(p);
        if n == &p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;

    let mut seed = [0u8; 32];
    for (slot, byte) in seed.iter_mut().zip(n.to_bytes_le()) {
        *slot = byte;
    }
    let mut rng = ChaCha20Rng::from_seed(seed);

    'witness: for _ in 0..64 {
        let a = loop {
            let a = rng.gen_biguint_range(&two, &n_minus_1);
            if !a.is_zero() {
                break a;
            }
        };
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 0..s.saturating_sub(1) {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A residue class `x ≡ r (mod modulus)`; `modulus == 0` encodes a single
/// integer solution (the class of r in Z).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueClass {
    pub rep: BigInt,
    pub modulus: BigUint,
}

impl ResidueClass {
    pub fn single(rep: BigInt) -> Self {
        ResidueClass {
            rep,
            modulus: BigUint::zero(),
        }
    }

    pub fn new(rep: BigInt, modulus: BigUint) -> Self {
        let rep = if modulus.is_zero() {
            rep
        } else {
            rep.mod_floor(&BigInt::from(modulus.clone()))
        };
        ResidueClass { rep, modulus }
    }

    pub fn contains(&self, x: &BigInt) -> bool {
        if self.modulus.is_zero() {
            return x == &self.rep;
        }
        ((x - &self.rep) % BigInt::from(self.modulus.clone())).is_zero()
    }
}

/// Solve `b·x ≡ c (mod m)` in the additive group of Z_m. Returns the full
/// solution class, or `None` when `gcd(b, m)` does not divide c.
pub fn solve_linear_congruence(b: &BigInt, c: &BigInt, m: &BigUint) -> Option<ResidueClass> {
    let m_int = BigInt::from(m.clone());
    let b = b.mod_floor(&m_int);
    let c = c.mod_floor(&m_int);
    if b.is_zero() {
        return if c.is_zero() {
            Some(ResidueClass::new(BigInt::zero(), BigUint::one()))
        } else {
            None
        };
    }
    let g = b.gcd(&m_int);
    if !(&c % &g).is_zero() {
        return None;
    }
    let m_red = &m_int / &g;
    let b_red = &b / &g;
    let c_red = &c / &g;
    let inv = mod_inverse(&b_red, &m_red)?;
    let rep = (c_red * inv).mod_floor(&m_red);
    Some(ResidueClass::new(
        rep,
        m_red.to_biguint().expect("modulus quotient is positive"),
    ))
}

/// Inverse of a modulo m, when gcd(a, m) = 1.
pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let a = a.mod_floor(m);
    let e = a.extended_gcd(m);
    if !e.gcd.is_one() {
        return None;
    }
    Some(e.x.mod_floor(m))
}

/// Intersect two residue classes. A zero modulus pins a single integer.
pub fn intersect_classes(a: &ResidueClass, b: &ResidueClass) -> Option<ResidueClass> {
    if a.modulus.is_zero() {
        return b.contains(&a.rep).then(|| a.clone());
    }
    if b.modulus.is_zero() {
        return a.contains(&b.rep).then(|| b.clone());
    }
    let m1 = BigInt::from(a.modulus.clone());
    let m2 = BigInt::from(b.modulus.clone());
    let g = m1.gcd(&m2);
    let diff = &b.rep - &a.rep;
    if !(&diff % &g).is_zero() {
        return None;
    }
    let lcm = &m1 / &g * &m2;
    let m2_red = &m2 / &g;
    let t = ((&diff / &g) * mod_inverse(&(&m1 / &g), &m2_red)?).mod_floor(&m2_red);
    let rep = (&a.rep + &m1 * t).mod_floor(&lcm);
    Some(ResidueClass::new(
        rep,
        lcm.to_biguint().expect("lcm of positive moduli"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(x: i64) -> BigInt {
        BigInt::from(x)
    }

    fn u(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn primality_basics() {
        assert!(is_probable_prime(&u(2)));
        assert!(is_probable_prime(&u(23)));
        assert!(is_probable_prime(&u(1000003)));
        assert!(!is_probable_prime(&u(1)));
        assert!(!is_probable_prime(&u(1000001))); // 101 * 9901
                                                  // safe prime q for p = 2q + 1
        assert!(is_probable_prime(&u(11)));
        assert!(!is_probable_prime(&(u(1) << 64))); // power of two
    }

    #[test]
    fn prime_field_rejects_composites() {
        assert!(RingDescriptor::prime_field(u(91)).is_err()); // 7 * 13
        assert!(RingDescriptor::prime_field(u(97)).is_ok());
        assert!(RingDescriptor::integers_mod(u(1)).is_err());
    }

    #[test]
    fn reduction_is_canonical() {
        let r = RingDescriptor::integers_mod(u(6)).unwrap();
        assert_eq!(r.reduce(b(8)), b(2));
        assert_eq!(r.reduce(b(-1)), b(5));
        assert_eq!(RingDescriptor::Integers.reduce(b(-7)), b(-7));
    }

    #[test]
    fn ring_token_round_trip() {
        for r in [
            RingDescriptor::Integers,
            RingDescriptor::integers_mod(u(12)).unwrap(),
            RingDescriptor::prime_field(u(5)).unwrap(),
        ] {
            let tok = r.token();
            let words: Vec<&str> = tok.split_whitespace().collect();
            assert_eq!(RingDescriptor::parse_token(&words).unwrap(), r);
        }
    }

    #[test]
    fn linear_congruence_solutions() {
        // 2a ≡ 4 (mod 6): a ≡ 2 (mod 3)
        let c = solve_linear_congruence(&b(2), &b(4), &u(6)).unwrap();
        assert_eq!(c, ResidueClass::new(b(2), u(3)));
        // 3a ≡ 3 (mod 6): a ≡ 1 (mod 2)
        let c = solve_linear_congruence(&b(3), &b(3), &u(6)).unwrap();
        assert_eq!(c, ResidueClass::new(b(1), u(2)));
        // unsolvable: 2a ≡ 3 (mod 6)
        assert!(solve_linear_congruence(&b(2), &b(3), &u(6)).is_none());
        // zero coefficient
        assert!(solve_linear_congruence(&b(0), &b(3), &u(6)).is_none());
        assert!(solve_linear_congruence(&b(6), &b(0), &u(6)).is_some());
    }

    #[test]
    fn class_intersection_ut3_zmod6_instance() {
        // From the UT(3, Z_6) instance: a ≡ 2 (mod 3) ∩ a ≡ 1 (mod 2) = {5 mod 6}
        let a = ResidueClass::new(b(2), u(3));
        let c = ResidueClass::new(b(1), u(2));
        let i = intersect_classes(&a, &c).unwrap();
        assert_eq!(i, ResidueClass::new(b(5), u(6)));
        // incompatible classes
        let d = ResidueClass::new(b(0), u(2));
        assert!(intersect_classes(&a, &d).is_some());
        assert!(intersect_classes(&ResidueClass::new(b(1), u(4)), &d).is_none());
        // singletons
        let s = ResidueClass::single(b(5));
        assert_eq!(intersect_classes(&s, &i).unwrap(), s);
        assert!(intersect_classes(&ResidueClass::single(b(4)), &i).is_none());
    }

    #[test]
    fn exhaustive_congruence_check_small_moduli() {
        for m in 2u64..=12 {
            for bb in 0..m as i64 {
                for cc in 0..m as i64 {
                    let sol = solve_linear_congruence(&b(bb), &b(cc), &u(m));
                    let solutions: Vec<i64> = (0..m as i64)
                        .filter(|a| (a * bb - cc).rem_euclid(m as i64) == 0)
                        .collect();
                    match sol {
                        None => assert!(solutions.is_empty(), "b={bb} c={cc} m={m}"),
                        Some(class) => {
                            for a in 0..m as i64 {
                                assert_eq!(
                                    class.contains(&b(a)),
                                    solutions.contains(&a),
                                    "b={bb} c={cc} m={m} a={a}"
                                );
                            }
                        }
                    }
                }
            }
        }
    }
}
