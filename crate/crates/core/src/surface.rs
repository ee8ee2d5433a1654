//! The surfaces w² = A₁x₁⁶ + A₂x₂⁶ + A₃x₃⁶ in ℙ(3,1,1,1).

use crate::arith::{self, exact_root};
use crate::localfields::{Place, Q};
use crate::localsearch::{self, SearchLimits};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Surface {
    pub a1: i128,
    pub a2: i128,
    pub a3: i128,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SurfaceError {
    #[error("coefficients must be nonzero")]
    ZeroCoefficient,
}

impl Surface {
    pub fn new(a1: i128, a2: i128, a3: i128) -> Result<Self, SurfaceError> {
        if a1 == 0 || a2 == 0 || a3 == 0 {
            return Err(SurfaceError::ZeroCoefficient);
        }
        Ok(Surface { a1, a2, a3 })
    }
    pub fn coeffs(&self) -> [i128; 3] {
        [self.a1, self.a2, self.a3]
    }
    /// A_i for i ∈ {1,2,3}.
    pub fn a(&self, i: usize) -> i128 {
        self.coeffs()[i - 1]
    }
    pub fn bad_primes(&self) -> Vec<u64> {
        arith::prime_divisors(6 * self.a1 * self.a2 * self.a3)
    }
    pub fn eval_rhs(&self, x: [i128; 3]) -> i128 {
        self.a1 * x[0].pow(6) + self.a2 * x[1].pow(6) + self.a3 * x[2].pow(6)
    }
    pub fn permuted(&self, perm: [usize; 3]) -> Surface {
        let c = self.coeffs();
        Surface { a1: c[perm[0]], a2: c[perm[1]], a3: c[perm[2]] }
    }
}

impl fmt::Display for Surface {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a1, self.a2, self.a3)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlgebraKind {
    A,
    B,
    C,
}

/// 𝒜ᵢ, ℬᵢ or 𝒞ᵢ with its rational witness:
/// t = √(−3Aᵢ) for 𝒜, c = ∛(A_k/A_j) for ℬ, r = ⁶√(27A_k/A_j) > 0 for 𝒞.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AlgebraDescriptor {
    pub kind: AlgebraKind,
    pub index: u8,
    pub witness: Q,
    pub order: u8,
}

impl AlgebraDescriptor {
    pub fn name(&self) -> String {
        format!("{:?}{}", self.kind, self.index)
    }
    /// (i, j, k) zero-based, j = i+1, k = i+2 mod 3.
    pub fn ijk(&self) -> (usize, usize, usize) {
        let i = self.index as usize - 1;
        (i, (i + 1) % 3, (i + 2) % 3)
    }
    /// c = ∛(A_k/A_j), which ℬ and 𝒞 both use.
    pub fn cube_ratio(&self, x: &Surface) -> Option<Q> {
        let (_, j, k) = self.ijk();
        let c = x.coeffs();
        rational_root(&Q::new(c[k], c[j]), 3)
    }
}

impl fmt::Display for AlgebraDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

pub fn rational_root(x: &Q, n: u32) -> Option<Q> {
    let a = exact_root(*x.numer(), n)?;
    let b = exact_root(*x.denom(), n)?;
    Some(Q::new(a, b))
}

pub fn is_rational_power(x: &Q, n: u32) -> bool {
    rational_root(x, n).is_some()
}

pub fn descriptor(x: &Surface, kind: AlgebraKind, index: u8) -> Option<AlgebraDescriptor> {
    let c = x.coeffs();
    let i = index as usize - 1;
    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
    match kind {
        AlgebraKind::A => {
            let t = exact_root(-3 * c[i], 2)?;
            Some(AlgebraDescriptor { kind, index, witness: Q::from_integer(t), order: 3 })
        }
        AlgebraKind::B => {
            let w = rational_root(&Q::new(c[k], c[j]), 3)?;
            Some(AlgebraDescriptor { kind, index, witness: w, order: 2 })
        }
        AlgebraKind::C => {
            let w = rational_root(&Q::new(27 * c[k], c[j]), 6)?;
            Some(AlgebraDescriptor { kind, index, witness: w, order: 2 })
        }
    }
}

/// Every 𝒜ᵢ, ℬᵢ, 𝒞ᵢ whose existence condition holds.
pub fn catalog_algebras(x: &Surface) -> Vec<AlgebraDescriptor> {
    let mut out = Vec::new();
    for kind in [AlgebraKind::A, AlgebraKind::B, AlgebraKind::C] {
        for i in 1..=3 {
            if let Some(d) = descriptor(x, kind, i) {
                out.push(d);
            }
        }
    }
    out
}

pub fn algebra_by_name(x: &Surface, name: &str) -> Option<AlgebraDescriptor> {
    let mut ch = name.chars();
    let kind = match ch.next()? {
        'A' | 'a' => AlgebraKind::A,
        'B' | 'b' => AlgebraKind::B,
        'C' | 'c' => AlgebraKind::C,
        _ => return None,
    };
    let i: u8 = ch.as_str().parse().ok()?;
    if !(1..=3).contains(&i) {
        return None;
    }
    descriptor(x, kind, i)
}

/// Weighted point (w : x₁ : x₂ : x₃).
pub type Point = [i128; 4];

pub fn has_obvious_rational_point(x: &Surface) -> Option<Point> {
    let c = x.coeffs();
    for i in 0..3 {
        if let Some(r) = exact_root(c[i], 2) {
            let mut p = [r, 0, 0, 0];
            p[i + 1] = 1;
            return Some(p);
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            if i == j {
                continue;
            }
            // A_i x_i⁶ + A_j x_j⁶ = 0 with (x_j/x_i)⁶ = −A_i/A_j
            if let Some(r) = rational_root(&Q::new(-c[i], c[j]), 6) {
                let mut p = [0, 0, 0, 0];
                p[i + 1] = *r.denom();
                p[j + 1] = *r.numer();
                return Some(p);
            }
        }
    }
    None
}

pub fn is_rational_point(x: &Surface, p: &Point) -> bool {
    p[1..].iter().any(|&v| v != 0) && p[0] * p[0] == x.eval_rhs([p[1], p[2], p[3]])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Witness {
    /// w² ≡ A·x⁶ mod p^precision on the model `p_model(X, p)`; the partial
    /// derivative in `lift_variable` (0 = w, 1..3 = xᵢ) has valuation
    /// `jac_valuation` < precision/2.
    PAdic { p: u64, precision: u32, point: Point, lift_variable: usize, jac_valuation: u32 },
    /// A real point with A·x⁶ > 0 (w = √(A·x⁶)).
    Real { x: [i128; 3], rhs: i128 },
    Rational { point: Point },
}

impl Witness {
    pub fn verify(&self, s: &Surface) -> bool {
        match self {
            Witness::Rational { point } => is_rational_point(s, point),
            Witness::Real { x, rhs } => *rhs > 0 && s.eval_rhs(*x) == *rhs,
            Witness::PAdic { p, precision, point, lift_variable, jac_valuation } => {
                let s = &p_model(s, *p).0;
                let m = (*p as i128).pow(*precision);
                let pm = *p as u128;
                let md = m as u128;
                let r = |v: i128| arith::mod_floor(v, m) as u128;
                let mut rhs = 0u128;
                for i in 0..3 {
                    let t = arith::mul_mod(r(s.coeffs()[i]), arith::pow_mod(r(point[i + 1]), 6, md), md);
                    rhs = (rhs + t) % md;
                }
                let lhs = arith::mul_mod(r(point[0]), r(point[0]), md);
                if lhs != rhs {
                    return false;
                }
                if point[1..].iter().all(|v| v % *p as i128 == 0) {
                    return false;
                }
                let d = if *lift_variable == 0 {
                    arith::mod_floor(2 * point[0], m)
                } else {
                    let i = *lift_variable - 1;
                    arith::mul_mod(r(6 * s.coeffs()[i]), arith::pow_mod(r(point[i + 1]), 5, md), md) as i128
                };
                let _ = pm;
                let v = if d == 0 { *precision } else { arith::val(d, *p) };
                v == *jac_valuation && 2 * v < *precision
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exhaustion {
    pub p: u64,
    /// depth at which every residue class was shown to carry no point
    pub depth: u32,
    pub nodes: u64,
    /// the design bound v_p(4A₁A₂A₃) + 4 (+8 for p ∈ {2,3})
    pub design_bound: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocalStatus {
    Soluble(Witness),
    Insoluble(Exhaustion),
    Unknown(String),
}

impl LocalStatus {
    pub fn is_soluble(&self) -> bool {
        matches!(self, LocalStatus::Soluble(_))
    }
    pub fn is_insoluble(&self) -> bool {
        matches!(self, LocalStatus::Insoluble(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceStatus {
    pub place: Place,
    pub status: LocalStatus,
}

/// The isomorphic surface with v_p(Aᵢ) ≤ 5 and min v_p(Aᵢ) ≤ 1, obtained by
/// Aᵢ ↦ Aᵢ/p^{6kᵢ} (xᵢ ↦ p^{kᵢ}xᵢ) and A ↦ A/p^{2g} (w ↦ w/p^g).
/// Returns it with (k₁, k₂, k₃, g).
pub fn p_model(x: &Surface, p: u64) -> (Surface, [u32; 4]) {
    let mut c = x.coeffs();
    let mut e = [0u32; 4];
    let pi = p as i128;
    for i in 0..3 {
        e[i] = arith::val(c[i], p) / 6;
        c[i] /= pi.pow(6 * e[i]);
    }
    let g = c.iter().map(|&a| arith::val(a, p)).min().unwrap() / 2;
    for a in c.iter_mut() {
        *a /= pi.pow(2 * g);
    }
    e[3] = g;
    (Surface { a1: c[0], a2: c[1], a3: c[2] }, e)
}

/// The same algebra on `p_model(x, p)`, with the matching choice of root.
pub fn transport(x: &Surface, d: &AlgebraDescriptor, p: u64) -> AlgebraDescriptor {
    let (y, _) = p_model(x, p);
    let mut e = descriptor(&y, d.kind, d.index).expect("models share their algebras");
    if (e.witness < Q::from_integer(0)) != (d.witness < Q::from_integer(0)) {
        e.witness = -e.witness;
    }
    e
}

pub fn design_bound(x: &Surface, p: u64) -> u32 {
    let v = arith::val(4 * x.a1 * x.a2 * x.a3, p);
    v + if p == 2 || p == 3 { 8 } else { 4 }
}

pub fn is_locally_soluble(x: &Surface, place: Place) -> LocalStatus {
    match place {
        Place::Infinite => {
            let c = x.coeffs();
            match (0..3).find(|&i| c[i] > 0) {
                Some(i) => {
                    let mut v = [0; 3];
                    v[i] = 1;
                    LocalStatus::Soluble(Witness::Real { x: v, rhs: c[i] })
                }
                None => LocalStatus::Insoluble(Exhaustion { p: 0, depth: 0, nodes: 0, design_bound: 0 }),
            }
        }
        Place::Finite(p) => localsearch::solubility(x, p, &SearchLimits::default()),
    }
}

/// Primes below which good reduction alone does not guarantee a smooth
/// 𝔽_p-point (genus-4 Hasse–Weil bound).
pub const GOOD_PRIME_THRESHOLD: u64 = 67;

/// Places to check: ∞, every p | 6A₁A₂A₃ and every prime below the threshold.
pub fn relevant_places(x: &Surface) -> Vec<Place> {
    let mut ps = x.bad_primes();
    for p in arith::primes_up_to(GOOD_PRIME_THRESHOLD as usize) {
        if !ps.contains(&p) {
            ps.push(p);
        }
    }
    ps.sort_unstable();
    let mut out = vec![Place::Infinite];
    out.extend(ps.into_iter().map(Place::Finite));
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolubilityReport {
    pub a1: i128,
    pub a2: i128,
    pub a3: i128,
    pub soluble: Option<bool>,
    pub places: Vec<PlaceStatus>,
}

pub fn is_everywhere_locally_soluble(x: &Surface) -> SolubilityReport {
    let mut places = Vec::new();
    let mut soluble = Some(true);
    for pl in relevant_places(x) {
        let st = is_locally_soluble(x, pl);
        match &st {
            LocalStatus::Insoluble(_) => soluble = Some(false),
            LocalStatus::Unknown(_) if soluble == Some(true) => soluble = None,
            _ => {}
        }
        let stop = st.is_insoluble();
        places.push(PlaceStatus { place: pl, status: st });
        if stop {
            break;
        }
    }
    SolubilityReport { a1: x.a1, a2: x.a2, a3: x.a3, soluble, places }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(a: i128, b: i128, c: i128) -> Surface {
        Surface::new(a, b, c).unwrap()
    }

    #[test]
    fn catalog_examples() {
        let names = |x: &Surface| catalog_algebras(x).iter().map(|d| d.name()).collect::<Vec<_>>();
        assert!(names(&s(-3, 97, 21728)).contains(&"A1".to_string()));
        assert!(names(&s(28, 2, 686)).contains(&"B1".to_string()));
        assert!(names(&s(5, 11, 13)).is_empty());
        let b1 = descriptor(&s(28, 2, 686), AlgebraKind::B, 1).unwrap();
        assert_eq!(b1.witness, Q::from_integer(7));
        assert!(Surface::new(0, 1, 1).is_err());
    }

    #[test]
    fn catalog_scaling_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let c: Vec<i128> = (0..3).map(|_| rng.gen_range(1..30) * if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
            let x = s(c[0], c[1], c[2]);
            for lam in [2i128, 3] {
                let l6 = lam.pow(6);
                for i in 0..3 {
                    let mut d = c.clone();
                    d[i] *= l6;
                    let y = s(d[0], d[1], d[2]);
                    let kinds = |z: &Surface| catalog_algebras(z).iter().map(|a| (a.kind, a.index)).collect::<Vec<_>>();
                    assert_eq!(kinds(&x), kinds(&y));
                }
            }
        }
    }

    #[test]
    fn obvious_points() {
        assert_eq!(has_obvious_rational_point(&s(4, 5, 7)), Some([2, 1, 0, 0]));
        assert_eq!(has_obvious_rational_point(&s(5, 7, -7)), Some([0, 0, 1, 1]));
        assert_eq!(has_obvious_rational_point(&s(5, 7, 11)), None);
        let x = s(-64, 7, 1);
        let p = has_obvious_rational_point(&x).unwrap();
        assert!(is_rational_point(&x, &p));
    }

    #[test]
    fn solubility_examples() {
        assert!(is_locally_soluble(&s(-1, -1, -1), Place::Infinite).is_insoluble());
        assert_eq!(is_everywhere_locally_soluble(&s(-1, -1, -1)).soluble, Some(false));
        assert_eq!(is_everywhere_locally_soluble(&s(1, 1, 1)).soluble, Some(true));
        let r = is_everywhere_locally_soluble(&s(-3, 97, 21728));
        assert_eq!(r.soluble, Some(true));
        let x = s(-3, 97, 21728);
        for ps in &r.places {
            if let LocalStatus::Soluble(w) = &ps.status {
                assert!(w.verify(&x), "{:?}", ps);
            }
        }
        assert!(is_locally_soluble(&s(28, 2, 686), Place::Finite(7)).is_soluble());
    }

    #[test]
    fn obvious_point_implies_els() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut n = 0;
        while n < 25 {
            let c: Vec<i128> = (0..3).map(|_| rng.gen_range(1..40) * if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
            let x = s(c[0], c[1], c[2]);
            if has_obvious_rational_point(&x).is_some() {
                assert_eq!(is_everywhere_locally_soluble(&x).soluble, Some(true), "{x}");
                n += 1;
            }
        }
    }

    #[test]
    fn insoluble_somewhere() {
        // w² = 3x₁⁶ + 3x₂⁶ + 3x₃⁶ forces 3 | w, then 9 | 3Σxᵢ⁶; Σxᵢ⁶ ≡ #units mod 9
        // gives 3 | x for all i unless a unit count ≡ 0 mod 3 occurs.
        let x = s(3, 3, 3);
        let st = is_locally_soluble(&x, Place::Finite(3));
        assert!(matches!(st, LocalStatus::Soluble(_) | LocalStatus::Insoluble(_)));
        let y = s(-1, -1, 7);
        let st = is_locally_soluble(&y, Place::Finite(7));
        // −1 is not a square mod 7, and 7 ∤ w would need −x₁⁶ − x₂⁶ ≡ square
        assert!(!matches!(st, LocalStatus::Unknown(_)));
    }
}
