//! Br X / Br₀ X: Galois index, algebraic generators from the subgroup table,
//! and transcendental ℓ-parts from sixth-power tests.

use crate::arith;
use crate::surface::{self, AlgebraKind, Surface};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Sign and prime exponents of a nonzero rational.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Fact {
    pub neg: bool,
    pub exps: BTreeMap<u64, i32>,
}

impl Fact {
    pub fn of(n: i128) -> Fact {
        assert!(n != 0);
        let exps = arith::factor(n.abs()).into_iter().map(|(p, e)| (p, e as i32)).collect();
        Fact { neg: n < 0, exps }
    }
    pub fn mul(&self, o: &Fact) -> Fact {
        let mut exps = self.exps.clone();
        for (p, e) in &o.exps {
            *exps.entry(*p).or_insert(0) += e;
        }
        exps.retain(|_, e| *e != 0);
        Fact { neg: self.neg ^ o.neg, exps }
    }
    pub fn inv(&self) -> Fact {
        Fact { neg: self.neg, exps: self.exps.iter().map(|(p, e)| (*p, -e)).collect() }
    }
    pub fn pow(&self, k: i32) -> Fact {
        let mut exps: BTreeMap<u64, i32> = self.exps.iter().map(|(p, e)| (*p, e * k)).collect();
        exps.retain(|_, e| *e != 0);
        Fact { neg: self.neg && k % 2 != 0, exps }
    }
    /// Membership in ℚ^{×n}.
    pub fn is_power(&self, n: i32) -> bool {
        (!self.neg || n % 2 == 1) && self.exps.values().all(|e| e.rem_euclid(n) == 0)
    }
    /// Membership in ℚ^{×6} ∪ (−27)ℚ^{×6}, the rationals that are sixth powers in ℚ(ω).
    pub fn is_sixth_power_k(&self) -> bool {
        self.is_power(6) || self.mul(&Fact::of(-27).inv()).is_power(6)
    }
    /// t ∈ {±1, ±3} with t·self a square, if any.
    pub fn square_twist(&self) -> Option<i8> {
        [1i8, -1, 3, -3].into_iter().find(|&t| self.mul(&Fact::of(t as i128)).is_power(2))
    }
    /// s ∈ {1, 2, 4} with s·self a cube, if any.
    pub fn cube_twist(&self) -> Option<u8> {
        [1u8, 2, 4].into_iter().find(|&s| self.mul(&Fact::of(s as i128)).is_power(3))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CubeKind {
    /// s·Aᵢ/Aⱼ, indices 1-based with i < j
    Ratio(u8, u8),
    Product,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionProfile {
    /// (t, support): t·Π_{i∈support} Aᵢ is a square
    pub square_conditions: Vec<(i8, Vec<u8>)>,
    /// (s, kind): s·(ratio or product) is a cube
    pub cube_conditions: Vec<(u8, CubeKind)>,
}

fn coeff_facts(x: &Surface) -> [Fact; 3] {
    let c = x.coeffs();
    [Fact::of(c[0]), Fact::of(c[1]), Fact::of(c[2])]
}

fn product(f: &[Fact; 3], support: &[usize]) -> Fact {
    support.iter().fold(Fact::default(), |acc, &i| acc.mul(&f[i]))
}

const SUPPORTS: [&[usize]; 7] = [&[0], &[1], &[2], &[0, 1], &[0, 2], &[1, 2], &[0, 1, 2]];

pub fn condition_profile(x: &Surface) -> ConditionProfile {
    let f = coeff_facts(x);
    let mut sq = vec![];
    for s in SUPPORTS {
        if let Some(t) = product(&f, s).square_twist() {
            sq.push((t, s.iter().map(|&i| i as u8 + 1).collect()));
        }
    }
    let mut cu = vec![];
    for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
        if let Some(s) = f[i].mul(&f[j].inv()).cube_twist() {
            cu.push((s, CubeKind::Ratio(i as u8 + 1, j as u8 + 1)));
        }
    }
    if let Some(s) = product(&f, &[0, 1, 2]).cube_twist() {
        cu.push((s, CubeKind::Product));
    }
    ConditionProfile { square_conditions: sq, cube_conditions: cu }
}

/// Index of G_A in the generic group of order 864: 2^x·3^y with x, y the
/// numbers of independent square and cube conditions.
pub fn galois_index(x: &Surface) -> u32 {
    let (x2, y3) = condition_ranks(&condition_profile(x));
    2u32.pow(x2) * 3u32.pow(y3)
}

fn condition_ranks(p: &ConditionProfile) -> (u32, u32) {
    // the holding supports form an 𝔽₂-subspace of 𝔽₂³ minus 0
    let n2 = p.square_conditions.len() as u32 + 1;
    let n3 = p.cube_conditions.len() as u32;
    let x = n2.trailing_zeros();
    // lines in 𝔽₃²: 0, 1, or all 4
    let y = match n3 {
        0 => 0,
        1 => 1,
        _ => 2,
    };
    (x, y)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlgebraicPart {
    Generators(Vec<String>),
    /// index outside {1,2,3,4,6,8,12}
    LargeIndex,
    /// a row for which only a negligible count bound is known
    LargeIndexNegligible,
}

impl AlgebraicPart {
    pub fn generators(&self) -> &[String] {
        match self {
            AlgebraicPart::Generators(g) => g,
            _ => &[],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Certainty {
    Exact,
    UpperBound,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EllPart {
    /// "0", "Z/2", "Z/3", "Z/4", "Z/5", "Z/7" or "Z/9"
    pub group: String,
    pub certainty: Certainty,
}

impl EllPart {
    fn new(order: u32, certainty: Certainty) -> EllPart {
        let group = if order == 1 { "0".to_string() } else { format!("Z/{order}") };
        EllPart { group, certainty }
    }
    pub fn is_trivial(&self) -> bool {
        self.group == "0"
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Flag {
    HasRationalPoint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BrClassification {
    pub surface: Surface,
    pub galois_index: u32,
    /// table row label such as "6a"
    pub row: String,
    pub algebraic: AlgebraicPart,
    /// ℓ ∈ {2, 3, 5, 7}
    pub transcendental: BTreeMap<u32, EllPart>,
    pub flags: Vec<Flag>,
    pub nonconstant_brauer: bool,
}

/// A square coefficient or −Aᵢ/Aⱼ ∈ ℚ^{×6} gives an evident rational point.
pub fn has_rational_point_flag(x: &Surface) -> bool {
    let f = coeff_facts(x);
    if f.iter().any(|a| a.is_power(2)) {
        return true;
    }
    (0..3).any(|i| (0..3).any(|j| i != j && f[i].mul(&f[j].inv()).mul(&Fact::of(-1)).is_power(6)))
}

fn name(kind: AlgebraKind, i: usize) -> String {
    let k = match kind {
        AlgebraKind::A => 'A',
        AlgebraKind::B => 'B',
        AlgebraKind::C => 'C',
    };
    format!("{k}{}", i + 1)
}

/// Square conditions as (t, support) with zero-based support, and cube
/// lines as (s, Some((a, b)) for s·A_a/A_b, None for the product).
struct Conds {
    sq: Vec<(i8, Vec<usize>)>,
    cu: Vec<(u8, Option<(usize, usize)>)>,
}

fn conds(x: &Surface) -> Conds {
    let p = condition_profile(x);
    Conds {
        sq: p.square_conditions.iter().map(|(t, s)| (*t, s.iter().map(|&i| i as usize - 1).collect())).collect(),
        cu: p
            .cube_conditions
            .iter()
            .map(|(s, k)| match k {
                CubeKind::Ratio(a, b) => (*s, Some((*a as usize - 1, *b as usize - 1))),
                CubeKind::Product => (*s, None),
            })
            .collect(),
    }
}

fn third(a: usize, b: usize) -> usize {
    3 - a - b
}

/// Table lookup. Returns (row label, part).
fn table(c: &Conds) -> (String, AlgebraicPart) {
    use AlgebraKind::*;
    let gens = |v: Vec<(AlgebraKind, usize)>| {
        let mut g: Vec<String> = v.into_iter().map(|(k, i)| name(k, i)).collect();
        g.sort();
        AlgebraicPart::Generators(g)
    };
    let x = (c.sq.len() as u32 + 1).trailing_zeros();
    let y = match c.cu.len() {
        0 => 0,
        1 => 1,
        _ => 2,
    };
    let singles: Vec<(i8, usize)> = c.sq.iter().filter(|(_, s)| s.len() == 1).map(|(t, s)| (*t, s[0])).collect();
    let pairs: Vec<(i8, Vec<usize>)> = c.sq.iter().filter(|(_, s)| s.len() == 2).cloned().collect();
    let neg = || ("negligible".to_string(), AlgebraicPart::LargeIndexNegligible);
    match (x, y) {
        (0, 0) => ("1".into(), gens(vec![])),
        (1, 0) => {
            let (t, s) = &c.sq[0];
            match s.len() {
                1 if *t == -3 => ("2a".into(), gens(vec![(A, s[0])])),
                1 => ("2a".into(), gens(vec![])),
                2 => ("2b".into(), gens(vec![])),
                _ => ("2c".into(), gens(vec![])),
            }
        }
        (0, 1) => match c.cu[0] {
            (1, Some((a, b))) => ("3a".into(), gens(vec![(B, third(a, b))])),
            (_, Some(_)) => ("3a".into(), gens(vec![])),
            (_, None) => ("3b".into(), AlgebraicPart::LargeIndexNegligible),
        },
        (2, 0) => match singles.len() {
            2 => {
                let g = singles.iter().filter(|(t, _)| *t == -3).map(|&(_, i)| (A, i)).collect();
                ("4a".into(), gens(g))
            }
            1 => {
                let (t, i) = singles[0];
                ("4b".into(), gens(if t == -3 { vec![(A, i)] } else { vec![] }))
            }
            _ => ("4c".into(), gens(vec![])),
        },
        (1, 1) => {
            let (t, sup) = &c.sq[0];
            let t = *t;
            let (s, line) = c.cu[0];
            let Some((a, b)) = line else { return neg() };
            let k = third(a, b);
            let s1 = s == 1;
            match sup.len() {
                1 if sup[0] == a || sup[0] == b => {
                    let i = sup[0];
                    let g = match (t == -3, s1) {
                        (true, true) => vec![(A, i), (B, k)],
                        (true, false) => vec![(A, i)],
                        (false, true) => vec![(B, k)],
                        (false, false) => vec![],
                    };
                    ("6a".into(), gens(g))
                }
                1 => {
                    let i = sup[0];
                    let g = match (t, s1) {
                        (t, true) if t != -3 => vec![(B, i)],
                        (-3, false) => vec![(A, i)],
                        _ => vec![],
                    };
                    ("6b".into(), gens(g))
                }
                2 if (sup[0], sup[1]) == (a.min(b), a.max(b)) => {
                    let g = match (t, s1) {
                        (3, true) => vec![(B, k), (C, k)],
                        (1 | -3, true) => vec![(B, k)],
                        _ => vec![],
                    };
                    ("6c".into(), gens(g))
                }
                2 => ("6d".into(), AlgebraicPart::LargeIndexNegligible),
                _ => {
                    let g = if s1 && (t == 1 || t == -3) { vec![(B, k)] } else { vec![] };
                    ("6e".into(), gens(g))
                }
            }
        }
        (3, 0) => {
            let g = singles.iter().filter(|(t, _)| *t == -3).map(|&(_, i)| (A, i)).collect();
            ("8".into(), gens(g))
        }
        (0, 2) => ("9".into(), AlgebraicPart::LargeIndexNegligible),
        (2, 1) => {
            let (s, line) = c.cu[0];
            let Some((a, b)) = line else { return neg() };
            let k = third(a, b);
            let s1 = s == 1;
            match singles.len() {
                2 => {
                    let idx: Vec<usize> = singles.iter().map(|&(_, i)| i).collect();
                    if !(idx.contains(&a) && idx.contains(&b)) {
                        return ("12b".into(), AlgebraicPart::LargeIndexNegligible);
                    }
                    // label so that t = −3 whenever either is
                    let (mut ti, mut i) = singles[0];
                    let (mut tj, mut j) = singles[1];
                    if tj == -3 && ti != -3 {
                        std::mem::swap(&mut ti, &mut tj);
                        std::mem::swap(&mut i, &mut j);
                    }
                    let g = match (ti, tj, s1) {
                        (-3, -3, true) => vec![(A, i), (A, j), (B, k)],
                        (-3, -3, false) => vec![(A, i), (A, j)],
                        (-3, 3, false) | (-3, -1, false) => vec![(A, i)],
                        (-3, -1, true) => vec![(A, i), (B, k), (C, k)],
                        (t, t2, true) if t != -3 && t2 != -3 => vec![(B, k)],
                        _ => vec![],
                    };
                    ("12a".into(), gens(g))
                }
                1 => {
                    let (t, i) = singles[0];
                    if i == a || i == b {
                        return ("12c".into(), AlgebraicPart::LargeIndexNegligible);
                    }
                    let tp = pairs.iter().find(|(_, s)| !s.contains(&i)).map(|(t, _)| *t).expect("plane of type 4b");
                    let g = match (t, tp, s1) {
                        (-1, 3, true) => vec![(B, i), (C, i)],
                        (-3, _, false) => vec![(A, i)],
                        _ => vec![],
                    };
                    ("12d".into(), gens(g))
                }
                _ => neg(),
            }
        }
        _ => ("large".into(), AlgebraicPart::LargeIndex),
    }
}

pub fn algebraic_br(x: &Surface) -> AlgebraicPart {
    table(&conds(x)).1
}

pub fn transcendental_br_q(x: &Surface) -> BTreeMap<u32, EllPart> {
    use Certainty::*;
    let f = coeff_facts(x);
    let prod = product(&f, &[0, 1, 2]);
    let m27 = Fact::of(-27);
    let in_6 = |q: &Fact| q.is_power(6) || q.mul(&m27.inv()).is_power(6);
    let mut out = BTreeMap::new();

    let q2 = prod.mul(&Fact::of(16).inv());
    let l2 = if in_6(&q2) {
        EllPart::new(4, UpperBound)
    } else if q2.is_power(3) {
        EllPart::new(2, UpperBound)
    } else {
        EllPart::new(1, Exact)
    };
    out.insert(2, l2);

    let q3 = prod.mul(&Fact::of(-1));
    // −P ∈ (−3)ℚ^{×2} outside (−27)ℚ^{×6} lies in k^{×2} ∖ k^{×6}, which
    // kills the transcendental 3-part
    let l3 = if q3.mul(&m27.inv()).is_power(6) {
        EllPart::new(9, UpperBound)
    } else if q3.is_power(6) {
        EllPart::new(3, UpperBound)
    } else {
        EllPart::new(1, Exact)
    };
    out.insert(3, l3);

    let q5 = prod.mul(&Fact::of(-5));
    out.insert(5, if in_6(&q5) { EllPart::new(5, Exact) } else { EllPart::new(1, Exact) });
    let q7 = prod.mul(&Fact::of(7).inv());
    out.insert(7, if in_6(&q7) { EllPart::new(7, Exact) } else { EllPart::new(1, Exact) });
    out
}

pub fn classify(x: &Surface) -> BrClassification {
    let c = conds(x);
    let (row, algebraic) = table(&c);
    let transcendental = transcendental_br_q(x);
    let mut flags = vec![];
    if has_rational_point_flag(x) {
        flags.push(Flag::HasRationalPoint);
    }
    // an upper bound alone does not certify a nonzero class
    let nonconstant_brauer =
        !algebraic.generators().is_empty() || transcendental.values().any(|e| !e.is_trivial() && e.certainty == Certainty::Exact);
    BrClassification { surface: *x, galois_index: galois_index(x), row, algebraic, transcendental, flags, nonconstant_brauer }
}

/// Descriptors for the listed generators.
pub fn generator_descriptors(x: &Surface, part: &AlgebraicPart) -> Vec<surface::AlgebraDescriptor> {
    part.generators().iter().filter_map(|n| surface::algebra_by_name(x, n)).collect()
}

impl BrClassification {
    pub fn csv_header() -> &'static str {
        "a1,a2,a3,index,generators,t2,t3,t5,t7,flags"
    }
    pub fn csv_row(&self) -> String {
        let gens = match &self.algebraic {
            AlgebraicPart::Generators(g) => g.join(";"),
            AlgebraicPart::LargeIndex => "LargeIndex".into(),
            AlgebraicPart::LargeIndexNegligible => "LargeIndexNegligible".into(),
        };
        let t = |l: u32| {
            let e = &self.transcendental[&l];
            match e.certainty {
                Certainty::Exact => e.group.clone(),
                Certainty::UpperBound => format!("<={}", e.group),
            }
        };
        let flags: Vec<String> = self.flags.iter().map(|f| format!("{f:?}")).collect();
        let s = &self.surface;
        format!("{},{},{},{},{},{},{},{},{},{}", s.a1, s.a2, s.a3, self.galois_index, gens, t(2), t(3), t(5), t(7), flags.join(";"))
    }
}

impl fmt::Display for BrClassification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.csv_row())
    }
}
