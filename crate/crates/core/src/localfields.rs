//! Local fields: valuations, power classes, Hilbert symbols, Hensel lifting.

use crate::arith::{self, legendre, mod_floor, pow_mod};
use crate::eisenstein::{self as eis, EisensteinInt, EisensteinPrime, Splitting, LAMBDA};
use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

pub type Q = Ratio<i128>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Place {
    Finite(u64),
    Infinite,
}

/// v_p of a nonzero rational.
pub fn vq(x: &Q, p: u64) -> i64 {
    arith::val(*x.numer(), p) as i64 - arith::val(*x.denom(), p) as i64
}

/// Unit part x·p^{−v} as a residue modulo p^k.
pub fn unit_mod(x: &Q, p: u64, k: u32) -> u128 {
    let m = (p as i128).pow(k);
    let mut n = *x.numer();
    let mut d = *x.denom();
    while n % p as i128 == 0 {
        n /= p as i128;
    }
    while d % p as i128 == 0 {
        d /= p as i128;
    }
    let di = arith::inv_mod(d, m).expect("unit");
    (mod_floor(n, m) * di % m) as u128
}

/// Is `x` an n-th power in ℚ_v for n ∈ {2, 3, 6}?
pub fn is_nth_power_qp(x: &Q, n: u32, place: Place) -> bool {
    assert!(!x.is_zero());
    assert!(matches!(n, 2 | 3 | 6));
    if n == 6 {
        return is_nth_power_qp(x, 2, place) && is_nth_power_qp(x, 3, place);
    }
    let p = match place {
        Place::Infinite => return n == 3 || x.is_positive(),
        Place::Finite(p) => p,
    };
    if vq(x, p).rem_euclid(n as i64) != 0 {
        return false;
    }
    if n == 2 {
        if p == 2 {
            unit_mod(x, 2, 3) == 1
        } else {
            pow_mod(unit_mod(x, p, 1), (p as u128 - 1) / 2, p as u128) == 1
        }
    } else if p == 3 {
        let u = unit_mod(x, 3, 2);
        u == 1 || u == 8
    } else if p % 3 == 2 {
        true
    } else {
        pow_mod(unit_mod(x, p, 1), (p as u128 - 1) / 3, p as u128) == 1
    }
}

/// Quadratic Hilbert symbol (a,b)_v as k ∈ {0,1}, meaning k/2 ∈ ℚ/ℤ.
pub fn hilbert2(a: &Q, b: &Q, place: Place) -> u8 {
    assert!(!a.is_zero() && !b.is_zero());
    let p = match place {
        Place::Infinite => return (a.is_negative() && b.is_negative()) as u8,
        Place::Finite(p) => p,
    };
    let (al, be) = (vq(a, p), vq(b, p));
    if p == 2 {
        let u = unit_mod(a, 2, 3);
        let v = unit_mod(b, 2, 3);
        let eps = |x: u128| ((x - 1) / 2) % 2;
        let om = |x: u128| ((x * x - 1) / 8) % 2;
        let e = eps(u) * eps(v) + (al.rem_euclid(2) as u128) * om(v) + (be.rem_euclid(2) as u128) * om(u);
        return (e % 2) as u8;
    }
    let u = unit_mod(a, p, 1) as i128;
    let v = unit_mod(b, p, 1) as i128;
    let mut s = 0u8;
    if (al * be).rem_euclid(2) == 1 && (p - 1) / 2 % 2 == 1 {
        s ^= 1;
    }
    if be.rem_euclid(2) == 1 && legendre(u, p) == -1 {
        s ^= 1;
    }
    if al.rem_euclid(2) == 1 && legendre(v, p) == -1 {
        s ^= 1;
    }
    s
}

/// An element of ℚ(ω) as numerator / positive integer denominator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KElt {
    pub num: EisensteinInt,
    pub den: i128,
}

impl KElt {
    pub fn new(num: EisensteinInt, den: i128) -> Self {
        assert!(den != 0 && !num.is_zero());
        let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
        let g = arith::gcd(arith::gcd(num.a, num.b), den);
        KElt { num: EisensteinInt::new(num.a / g, num.b / g), den: den / g }
    }
    pub fn from_q(x: &Q) -> Self {
        KElt::new(EisensteinInt::int(*x.numer()), *x.denom())
    }
    pub fn int(n: i128) -> Self {
        KElt::new(EisensteinInt::int(n), 1)
    }
    pub fn mul(&self, o: &Self) -> Self {
        KElt::new(self.num * o.num, self.den * o.den)
    }
}

/// Split an Eisenstein integer as π^v · rest.
fn strip(z: &EisensteinInt, pi: &EisensteinInt) -> (i64, EisensteinInt) {
    let mut z = *z;
    let mut v = 0;
    while let Some(t) = z.div_exact(pi) {
        z = t;
        v += 1;
    }
    (v, z)
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SymbolError {
    #[error("prime above 3 is wild for the cubic symbol")]
    WildPrime,
}

/// v_P and the ω-exponent of the cubic character of the unit part.
fn val_char(z: &KElt, p: &EisensteinPrime) -> (i64, u32) {
    let (vn, n) = strip(&z.num, &p.value);
    let (vd, d) = strip(&EisensteinInt::int(z.den), &p.value);
    let cn = eis::cubic_residue(&n, p).expect("unit") as u32;
    let cd = eis::cubic_residue(&d, p).expect("unit") as u32;
    (vn - vd, (cn + 3 - cd) % 3)
}

/// Cubic Hilbert symbol (a,b)_{ω,P} as k ∈ {0,1,2}, meaning k/3, for P ∤ 3.
///
/// Tame symbol (−1)^{v(a)v(b)} a^{v(b)}/b^{v(a)} mod P, read through
/// t ↦ t^{(N−1)/3} = ω^k.
pub fn hilbert3(a: &KElt, b: &KElt, p: &EisensteinPrime) -> Result<u8, SymbolError> {
    if p.splitting == Splitting::Ramified {
        return Err(SymbolError::WildPrime);
    }
    let (va, ca) = val_char(a, p);
    let (vb, cb) = val_char(b, p);
    // −1 is a cube, so the sign drops out.
    let k = vb * ca as i64 - va * cb as i64;
    Ok(k.rem_euclid(3) as u8)
}

/// Coordinates of z ∈ ℚ₃(ω)^× / cubes in the basis (λ, ω, 1+λ², 1+λ³).
pub fn wild_class(z: &KElt) -> [u8; 4] {
    let (vn, n) = strip(&z.num, &LAMBDA);
    let (vd, d) = strip(&EisensteinInt::int(z.den), &LAMBDA);
    let cn = unit_class_mod9(&n);
    let cd = unit_class_mod9(&d);
    let v = (vn - vd).rem_euclid(3) as u8;
    [v, (cn[0] + 3 - cd[0]) % 3, (cn[1] + 3 - cd[1]) % 3, (cn[2] + 3 - cd[2]) % 3]
}

struct WildTables {
    /// index a + 9b of a unit mod 9 (normalised to ≡ 1 mod λ) -> coordinates
    log: Vec<Option<[u8; 3]>>,
    /// pairing matrix on the four basis classes
    pairing: [[u8; 4]; 4],
}

fn wild_basis() -> [EisensteinInt; 4] {
    let l2 = LAMBDA * LAMBDA;
    [LAMBDA, eis::OMEGA, eis::ONE + l2, eis::ONE + l2 * LAMBDA]
}

fn wild_tables() -> &'static WildTables {
    static T: OnceLock<WildTables> = OnceLock::new();
    T.get_or_init(|| {
        let b = wild_basis();
        let mut log = vec![None; 81];
        for i in 0..3u8 {
            for j in 0..3u8 {
                for k in 0..3u8 {
                    let e = (b[1].pow(i as u64) * b[2].pow(j as u64) * b[3].pow(k as u64)).reduce(9);
                    let idx = (e.a + 9 * e.b) as usize;
                    assert!(log[idx].is_none(), "wild basis dependent");
                    log[idx] = Some([i, j, k]);
                }
            }
        }
        let mut pairing = [[0u8; 4]; 4];
        for x in 0..4 {
            for y in 0..4 {
                pairing[x][y] = wild_by_product_formula(&KElt::new(b[x], 1), &KElt::new(b[y], 1));
            }
        }
        WildTables { log, pairing }
    })
}

fn unit_class_mod9(u: &EisensteinInt) -> [u8; 3] {
    // units ≡ ±1 mod λ; −1 is a cube so normalise the sign
    let r = mod_floor(u.a + u.b, 3);
    assert!(r != 0, "not a unit at λ");
    let u = if r == 1 { *u } else { -*u };
    let e = u.reduce(9);
    wild_tables().log[(e.a + 9 * e.b) as usize].expect("unit class")
}

/// (a,b) at λ = 1 − ω from the product formula over ℚ(ω): minus the sum of
/// the tame symbols at every other finite prime (the complex place adds 0).
pub fn wild_by_product_formula(a: &KElt, b: &KElt) -> u8 {
    let mut primes: Vec<u64> = Vec::new();
    for n in [a.num.norm(), a.den, b.num.norm(), b.den] {
        for q in arith::prime_divisors(n) {
            if q != 3 && !primes.contains(&q) {
                primes.push(q);
            }
        }
    }
    let mut s = 0u32;
    for q in primes {
        let p = eis::prime_above(q);
        let mut ps = vec![p];
        if p.splitting == Splitting::Split {
            ps.push(EisensteinPrime { value: p.value.conj(), ..p });
        }
        for pp in ps {
            s += hilbert3(a, b, &pp).unwrap() as u32;
        }
    }
    ((3 - s % 3) % 3) as u8
}

/// Cubic Hilbert symbol at the prime above 3 via the precomputed pairing.
pub fn hilbert3_at_3(a: &KElt, b: &KElt) -> u8 {
    wild_pair(&wild_class(a), &wild_class(b))
}

pub fn wild_pair(x: &[u8; 4], y: &[u8; 4]) -> u8 {
    let m = &wild_tables().pairing;
    let mut s = 0u32;
    for i in 0..4 {
        for j in 0..4 {
            s += x[i] as u32 * y[j] as u32 * m[i][j] as u32;
        }
    }
    (s % 3) as u8
}

/// Integer polynomial in several variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Poly {
    pub terms: Vec<(i128, Vec<u32>)>,
}

impl Poly {
    pub fn nvars(&self) -> usize {
        self.terms.first().map_or(0, |t| t.1.len())
    }
    pub fn eval_mod(&self, x: &[i128], m: i128) -> i128 {
        let mut s = 0i128;
        for (c, e) in &self.terms {
            let mut t = mod_floor(*c, m);
            for (xi, ei) in x.iter().zip(e) {
                t = t * pow_mod(mod_floor(*xi, m) as u128, *ei as u128, m as u128) as i128 % m;
            }
            s = (s + t) % m;
        }
        s
    }
    pub fn derivative(&self, var: usize) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter(|(_, e)| e[var] > 0)
            .map(|(c, e)| {
                let mut e2 = e.clone();
                e2[var] -= 1;
                (c * e[var] as i128, e2)
            })
            .collect();
        Poly { terms }
    }
    /// Affine curve w² = c₆x⁶ + … + c₀ in variables (w, x).
    pub fn hyperelliptic(coeffs_low_to_high: &[i128]) -> Poly {
        let mut terms = vec![(1, vec![2, 0])];
        for (i, c) in coeffs_low_to_high.iter().enumerate() {
            if *c != 0 {
                terms.push((-c, vec![0, i as u32]));
            }
        }
        Poly { terms }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HenselCertificate {
    pub p: u64,
    pub precision: u32,
    pub point: Vec<i128>,
    /// variable whose partial derivative is a p-adic unit times p^jac_valuation
    pub lift_variable: usize,
    pub jac_valuation: u32,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum HenselError {
    #[error("seed does not satisfy the equation mod p")]
    NotAZero,
    #[error("seed is singular mod p")]
    SingularSeed,
}

/// Lift a zero of `f` mod p to a zero mod p^k along a variable whose
/// partial derivative is a unit at the seed.
pub fn hensel_lift(f: &Poly, seed: &[i128], p: u64, k: u32) -> Result<HenselCertificate, HenselError> {
    let pi = p as i128;
    if f.eval_mod(seed, pi) != 0 {
        return Err(HenselError::NotAZero);
    }
    let var = (0..seed.len())
        .find(|&v| f.derivative(v).eval_mod(seed, pi) != 0)
        .ok_or(HenselError::SingularSeed)?;
    let df = f.derivative(var);
    let mut x: Vec<i128> = seed.iter().map(|s| mod_floor(*s, pi)).collect();
    let mut m = pi;
    for _ in 1..k {
        m *= pi;
        let fx = f.eval_mod(&x, m);
        let d = df.eval_mod(&x, m);
        let inv = arith::inv_mod(d, m).expect("unit derivative");
        x[var] = mod_floor(x[var] - fx * inv, m);
    }
    Ok(HenselCertificate { p, precision: k, point: x, lift_variable: var, jac_valuation: 0 })
}

/// Number of affine 𝔽_p points of a plane curve f(w, x) = 0.
pub fn count_points_curve_fp(f: &Poly, p: u64) -> u64 {
    assert_eq!(f.nvars(), 2);
    let pi = p as i128;
    let mut n = 0;
    for w in 0..pi {
        for x in 0..pi {
            if f.eval_mod(&[w, x], pi) == 0 {
                n += 1;
            }
        }
    }
    n
}

/// Smallest primes past which a smooth curve of genus g has a point:
/// p + 1 > 2g√p.
pub fn hasse_weil_threshold(genus: u32) -> u64 {
    match genus {
        2 => 17,
        3 => 37,
        4 => 67,
        _ => {
            let mut p = 2u64;
            loop {
                if arith::is_prime(p) && (p + 1) as f64 > 2.0 * genus as f64 * (p as f64).sqrt() {
                    return p;
                }
                p += 1;
            }
        }
    }
}

pub fn q(n: i128) -> Q {
    Q::from_integer(n)
}

pub fn qr(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

pub fn is_rational_nth_power(x: &Q, n: u32) -> bool {
    if x.is_zero() {
        return true;
    }
    arith::exact_root(*x.numer(), n).is_some() && arith::exact_root(*x.denom(), n).is_some()
}
