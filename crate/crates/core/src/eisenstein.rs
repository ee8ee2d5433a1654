//! Arithmetic in ℤ[ω], ω² + ω + 1 = 0.

use crate::arith::{self, mod_floor};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EisensteinInt {
    pub a: i128,
    pub b: i128,
}

pub const ONE: EisensteinInt = EisensteinInt { a: 1, b: 0 };
pub const OMEGA: EisensteinInt = EisensteinInt { a: 0, b: 1 };
/// ζ₆ = 1 + ω = −ω².
pub const ZETA6: EisensteinInt = EisensteinInt { a: 1, b: 1 };
/// √−3 = 1 + 2ω.
pub const SQRT_M3: EisensteinInt = EisensteinInt { a: 1, b: 2 };
/// The ramified prime 1 − ω.
pub const LAMBDA: EisensteinInt = EisensteinInt { a: 1, b: -1 };

impl EisensteinInt {
    pub const fn new(a: i128, b: i128) -> Self {
        EisensteinInt { a, b }
    }
    pub const fn int(a: i128) -> Self {
        EisensteinInt { a, b: 0 }
    }
    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }
    pub fn norm(&self) -> i128 {
        self.a * self.a - self.a * self.b + self.b * self.b
    }
    pub fn conj(&self) -> Self {
        EisensteinInt::new(self.a - self.b, -self.b)
    }
    pub fn pow(&self, mut e: u64) -> Self {
        let mut r = ONE;
        let mut b = *self;
        while e > 0 {
            if e & 1 == 1 {
                r = r * b;
            }
            b = b * b;
            e >>= 1;
        }
        r
    }
    /// Exact quotient, if `other` divides `self`.
    pub fn div_exact(&self, other: &Self) -> Option<Self> {
        let n = other.norm();
        if n == 0 {
            return None;
        }
        let t = *self * other.conj();
        if t.a % n != 0 || t.b % n != 0 {
            return None;
        }
        Some(EisensteinInt::new(t.a / n, t.b / n))
    }
    pub fn divides(&self, other: &Self) -> bool {
        other.div_exact(self).is_some()
    }
    /// Euclidean division with rounding to the nearest lattice point.
    pub fn div_round(&self, other: &Self) -> Self {
        let n = other.norm();
        let t = *self * other.conj();
        let rd = |x: i128| {
            let q = x.div_euclid(n);
            if 2 * (x - q * n) >= n {
                q + 1
            } else {
                q
            }
        };
        let a0 = rd(t.a);
        let b0 = rd(t.b);
        let mut best = EisensteinInt::new(a0, b0);
        let mut bn = (*self - best * *other).norm();
        for da in -1..=1 {
            for db in -1..=1 {
                let c = EisensteinInt::new(a0 + da, b0 + db);
                let r = (*self - c * *other).norm();
                if r < bn {
                    bn = r;
                    best = c;
                }
            }
        }
        best
    }
    pub fn gcd(x: Self, y: Self) -> Self {
        let (mut x, mut y) = (x, y);
        while !y.is_zero() {
            let q = x.div_round(&y);
            let r = x - q * y;
            x = y;
            y = r;
        }
        x
    }
    pub fn is_unit(&self) -> bool {
        self.norm() == 1
    }
    /// Coordinates reduced modulo a rational integer `m`.
    pub fn reduce(&self, m: i128) -> Self {
        EisensteinInt::new(mod_floor(self.a, m), mod_floor(self.b, m))
    }
    pub fn mul_mod(&self, o: &Self, m: i128) -> Self {
        (*self * *o).reduce(m)
    }
    pub fn pow_mod(&self, mut e: u128, m: i128) -> Self {
        let mut r = ONE.reduce(m);
        let mut b = self.reduce(m);
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul_mod(&b, m);
            }
            b = b.mul_mod(&b, m);
            e >>= 1;
        }
        r
    }
}

impl Add for EisensteinInt {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        EisensteinInt::new(self.a + o.a, self.b + o.b)
    }
}
impl Sub for EisensteinInt {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        EisensteinInt::new(self.a - o.a, self.b - o.b)
    }
}
impl Neg for EisensteinInt {
    type Output = Self;
    fn neg(self) -> Self {
        EisensteinInt::new(-self.a, -self.b)
    }
}
impl Mul for EisensteinInt {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        // (a + bω)(c + dω) = ac − bd + (ad + bc − bd)ω
        let bd = self.b * o.b;
        EisensteinInt::new(self.a * o.a - bd, self.a * o.b + self.b * o.a - bd)
    }
}

impl fmt::Display for EisensteinInt {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match (self.a, self.b) {
            (a, 0) => write!(f, "{a}"),
            (0, b) => write!(f, "{b}ω"),
            (a, b) if b < 0 => write!(f, "{a}-{}ω", -b),
            (a, b) => write!(f, "{a}+{b}ω"),
        }
    }
}

pub fn norm(z: EisensteinInt) -> i128 {
    z.norm()
}

/// The six units ±1, ±ω, ±ω², indexed so that `units()[k] = ζ₆^k`.
pub fn units() -> [EisensteinInt; 6] {
    let mut u = [ONE; 6];
    for k in 1..6 {
        u[k] = u[k - 1] * ZETA6;
    }
    u
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Splitting {
    Split,
    Inert,
    Ramified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EisensteinPrime {
    pub value: EisensteinInt,
    pub residue_norm: i128,
    pub splitting: Splitting,
}

impl EisensteinPrime {
    pub fn rational_prime(&self) -> u64 {
        match self.splitting {
            Splitting::Inert => arith::isqrt(self.residue_norm as u128) as u64,
            _ => self.residue_norm as u64,
        }
    }
    pub fn divides(&self, z: &EisensteinInt) -> bool {
        self.value.divides(z)
    }
    /// For a split prime, the image r ∈ 𝔽_q of ω in ℤ[ω]/π.
    pub fn omega_residue(&self) -> Option<i128> {
        if self.splitting != Splitting::Split {
            return None;
        }
        let q = self.residue_norm;
        let (a, b) = (self.value.a, self.value.b);
        // a + bω ≡ 0 ⇒ ω ≡ −a/b
        let ib = arith::inv_mod(b, q)?;
        Some(mod_floor(-a * ib, q))
    }
}

/// A prime element above the rational prime `q`.
pub fn prime_above(q: u64) -> EisensteinPrime {
    let qi = q as i128;
    if q == 3 {
        return EisensteinPrime { value: LAMBDA, residue_norm: 3, splitting: Splitting::Ramified };
    }
    if q % 3 == 2 {
        return EisensteinPrime { value: EisensteinInt::int(qi), residue_norm: qi * qi, splitting: Splitting::Inert };
    }
    // r² + r + 1 ≡ 0 mod q, then gcd(q, ω − r)
    let s = arith::sqrt_mod_prime(mod_floor(-3, qi) as u128, q as u128).expect("q ≡ 1 mod 3") as i128;
    let r = mod_floor((s - 1) * arith::inv_mod(2, qi).unwrap(), qi);
    let g = EisensteinInt::gcd(EisensteinInt::int(qi), EisensteinInt::new(-r, 1));
    debug_assert_eq!(g.norm(), qi);
    EisensteinPrime { value: g, residue_norm: qi, splitting: Splitting::Split }
}

/// Factorisation z = unit · Π πᵢ^eᵢ.
pub fn factor(z: EisensteinInt) -> (EisensteinInt, Vec<(EisensteinPrime, u32)>) {
    assert!(!z.is_zero(), "factor(0)");
    let mut rest = z;
    let mut out = Vec::new();
    for (q, _) in arith::factor(z.norm()) {
        let p = prime_above(q);
        let mut cands = vec![p];
        if p.splitting == Splitting::Split {
            cands.push(EisensteinPrime { value: p.value.conj(), ..p });
        }
        for c in cands {
            let mut e = 0;
            while let Some(t) = rest.div_exact(&c.value) {
                rest = t;
                e += 1;
            }
            if e > 0 {
                out.push((c, e));
            }
        }
    }
    debug_assert!(rest.is_unit());
    (rest, out)
}

fn is_e_primary_value(x: &EisensteinInt) -> bool {
    let (a, b) = (x.a, x.b);
    if b % 3 != 0 {
        return false;
    }
    if b % 2 == 0 {
        mod_floor(a + b, 4) == 1
    } else if a % 2 == 0 {
        mod_floor(b, 4) == 1
    } else {
        mod_floor(a, 4) == 3
    }
}

pub fn is_e_primary(x: &EisensteinInt) -> bool {
    is_e_primary_value(x)
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EisensteinError {
    #[error("prime divides 6")]
    DividesSix,
    #[error("{0} associates satisfy the E-primary condition")]
    NotUnique(usize),
}

pub fn e_primary_normalize(p: &EisensteinPrime) -> Result<EisensteinInt, EisensteinError> {
    if p.residue_norm % 2 == 0 || p.residue_norm % 3 == 0 {
        return Err(EisensteinError::DividesSix);
    }
    let hits: Vec<EisensteinInt> = units().iter().map(|u| *u * p.value).filter(is_e_primary_value).collect();
    if hits.len() != 1 {
        return Err(EisensteinError::NotUnique(hits.len()));
    }
    Ok(hits[0])
}

/// E-primary prime elements of norm ≤ `bound`, one per prime ideal.
pub fn e_primary_primes(bound: i128) -> Vec<EisensteinPrime> {
    let mut out = Vec::new();
    for q in arith::primes_up_to(bound as usize) {
        if q <= 3 {
            continue;
        }
        let p = prime_above(q);
        if p.residue_norm > bound {
            continue;
        }
        let mut vs = vec![p];
        if p.splitting == Splitting::Split {
            vs.push(EisensteinPrime { value: p.value.conj(), ..p });
        }
        for v in vs {
            let value = e_primary_normalize(&v).expect("prime not dividing 6");
            out.push(EisensteinPrime { value, ..v });
        }
    }
    out
}

/// Exponent e with x^{(N−1)/6} ≡ ζ₆^e mod p, `None` when p | x.
pub type SexticValue = Option<u8>;

fn power_residue(x: &EisensteinInt, p: &EisensteinPrime, n: i128) -> Option<u8> {
    assert!((p.residue_norm - 1) % n == 0, "residue field lacks μ_n");
    if p.divides(x) {
        return None;
    }
    let q = p.rational_prime() as i128;
    let y = x.pow_mod(((p.residue_norm - 1) / n) as u128, q);
    let us = units();
    for k in 0..n as usize {
        let z = us[k * (6 / n as usize)];
        let d = (y - z).reduce(q);
        let hit = match p.splitting {
            Splitting::Inert => d.is_zero(),
            _ => (d * p.value.conj()).reduce(q).is_zero(),
        };
        if hit {
            return Some(k as u8);
        }
    }
    panic!("power residue outside μ_n");
}

pub fn sextic_residue(x: &EisensteinInt, p: &EisensteinPrime) -> SexticValue {
    power_residue(x, p, 6)
}

/// Cubic residue exponent e with x^{(N−1)/3} ≡ ω^e mod p.
pub fn cubic_residue(x: &EisensteinInt, p: &EisensteinPrime) -> Option<u8> {
    // ω = ζ₆², so the μ₃ index k of power_residue(·, 3) is already the ω-exponent.
    power_residue(x, p, 3)
}

/// (x/y)₆ for y coprime to 6x, multiplicative in the prime factors of y.
pub fn sextic_symbol(x: &EisensteinInt, y: &EisensteinInt) -> SexticValue {
    let (_, fs) = factor(*y);
    let mut e = 0u32;
    for (p, m) in fs {
        e += sextic_residue(x, &p)? as u32 * m;
    }
    Some((e % 6) as u8)
}

pub fn check_sextic_reciprocity(x: &EisensteinInt, y: &EisensteinInt) -> bool {
    assert!(is_e_primary(x) && is_e_primary(y), "arguments must be E-primary");
    assert!(EisensteinInt::gcd(*x, *y).is_unit(), "arguments must be coprime");
    let nx = x.norm();
    let ny = y.norm();
    let sign = if ((nx - 1) / 2) * ((ny - 1) / 2) % 2 == 0 { 0 } else { 3 };
    match (sextic_symbol(x, y), sextic_symbol(y, x)) {
        (Some(l), Some(r)) => (l as u32 % 6) == ((r as u32 + sign) % 6),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn norms() {
        assert_eq!(norm(EisensteinInt::new(2, 3)), 7);
        assert_eq!(norm(ONE), 1);
        assert_eq!(norm(LAMBDA), 3);
        for u in units() {
            assert!(u.is_unit());
        }
        assert_eq!(SQRT_M3 * SQRT_M3, EisensteinInt::int(-3));
        assert_eq!(OMEGA * OMEGA * OMEGA, ONE);
    }

    #[test]
    fn factor_small_cases() {
        let (_, f7) = factor(EisensteinInt::int(7));
        assert_eq!(f7.len(), 2);
        assert!(f7.iter().all(|(p, e)| p.residue_norm == 7 && *e == 1));
        let (u2, f2) = factor(EisensteinInt::int(2));
        assert_eq!(u2, ONE);
        assert_eq!(f2, vec![(prime_above(2), 1)]);
        let (_, f3) = factor(EisensteinInt::int(3));
        assert_eq!(f3.len(), 1);
        assert_eq!(f3[0].1, 2);
        assert_eq!(f3[0].0.splitting, Splitting::Ramified);
    }

    #[test]
    fn factor_roundtrip_box() {
        for a in -200i128..=200 {
            for b in (-200i128..=200).step_by(7) {
                let z = EisensteinInt::new(a, b);
                if z.is_zero() {
                    continue;
                }
                let (u, fs) = factor(z);
                let mut m = u;
                for (p, e) in &fs {
                    m = m * p.value.pow(*e as u64);
                }
                assert_eq!(m, z);
                for i in 0..fs.len() {
                    for j in 0..i {
                        assert!(fs[i].0.value.div_exact(&fs[j].0.value).map_or(true, |q| !q.is_unit()));
                    }
                }
            }
        }
    }

    #[test]
    fn splitting_law() {
        for q in arith::primes_up_to(10_000) {
            let p = prime_above(q);
            let expect = match q % 3 {
                0 => Splitting::Ramified,
                1 => Splitting::Split,
                _ => Splitting::Inert,
            };
            assert_eq!(p.splitting, expect);
            assert!(p.value.divides(&EisensteinInt::int(p.residue_norm)));
        }
    }

    #[test]
    fn e_primary_unique_and_idempotent() {
        for p in e_primary_primes(2000) {
            assert!(is_e_primary(&p.value));
            assert_eq!(e_primary_normalize(&p).unwrap(), p.value);
        }
        let p13 = EisensteinPrime {
            value: EisensteinInt::int(4) - EisensteinInt::int(3) * ZETA6,
            residue_norm: 13,
            splitting: Splitting::Split,
        };
        assert_eq!(p13.value.norm(), 13);
        let e = e_primary_normalize(&p13).unwrap();
        assert!((e.div_exact(&p13.value).unwrap()).is_unit());
        assert_eq!(e_primary_normalize(&prime_above(3)), Err(EisensteinError::DividesSix));
    }

    #[test]
    fn sextic_basic() {
        let ps = e_primary_primes(600);
        for p in ps.iter().take(50) {
            assert_eq!(sextic_residue(&ONE, p), Some(0));
            let x = EisensteinInt::new(5, 2);
            if !p.divides(&x) {
                assert_eq!(sextic_residue(&x.pow(6), p), Some(0));
            }
            // (−1/π)₆ = (−1)^{(N−1)/2}
            let e = sextic_residue(&EisensteinInt::int(-1), p).unwrap();
            let expect = if ((p.residue_norm - 1) / 2) % 2 == 0 { 0 } else { 3 };
            assert_eq!(e, expect);
            assert_eq!(sextic_residue(&p.value, p), None);
        }
    }

    #[test]
    fn sextic_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ps = e_primary_primes(2000);
        for p in ps.iter().take(50) {
            for _ in 0..20 {
                let x = EisensteinInt::new(rng.gen_range(-57..57), rng.gen_range(-57..57));
                let y = EisensteinInt::new(rng.gen_range(-57..57), rng.gen_range(-57..57));
                if x.is_zero() || y.is_zero() || x.norm() > 10_000 || y.norm() > 10_000 {
                    continue;
                }
                if let (Some(a), Some(b)) = (sextic_residue(&x, p), sextic_residue(&y, p)) {
                    assert_eq!(sextic_residue(&(x * y), p), Some((a + b) % 6));
                }
            }
        }
    }

    #[test]
    fn reciprocity_small() {
        let ps = e_primary_primes(200);
        for x in &ps {
            for y in &ps {
                if x.value == y.value {
                    continue;
                }
                assert!(check_sextic_reciprocity(&x.value, &y.value), "{} {}", x.value, y.value);
                // cubic part: (x/y)₃ = (y/x)₃ with no sign
                let c1 = cubic_residue(&x.value, y).unwrap();
                let c2 = cubic_residue(&y.value, x).unwrap();
                assert_eq!(c1, c2);
                let s = sextic_residue(&x.value, y).unwrap();
                assert_eq!((2 * s) % 6 / 2, c1);
            }
        }
    }
}
