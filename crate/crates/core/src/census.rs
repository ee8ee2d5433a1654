//! Box censuses over |Aᵢ| ≤ T and the analytic-side empirical checks.

use crate::arith;
use crate::brauergroup::{classify, generator_descriptors, AlgebraicPart, BrClassification, Certainty};
use crate::obstruction::{decide_obstruction, Options, Verdict};
use crate::surface::{AlgebraKind, AlgebraDescriptor, Surface};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::ops::Add;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Exhaustive,
    Sampled { size: usize, seed: u64 },
}

/// How much of the pipeline to run per triple.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Depth {
    /// classification only
    Brauer,
    /// classification, local solubility and the obstruction decision
    Obstruction,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub total: u64,
    /// some −3Aᵢ is a square
    pub dominant: u64,
    pub nonconstant_br: u64,
    /// index outside the table or a negligible row
    pub unclassified: u64,
    pub locally_soluble: u64,
    pub obstructed_total: u64,
    pub n1: u64,
    pub n2: u64,
    pub n3: u64,
    /// obstructed and in both case (2) and case (3)
    pub overlap_23: u64,
    pub odd_only: u64,
    pub unknown: u64,
}

impl Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts {
            total: self.total + o.total,
            dominant: self.dominant + o.dominant,
            nonconstant_br: self.nonconstant_br + o.nonconstant_br,
            unclassified: self.unclassified + o.unclassified,
            locally_soluble: self.locally_soluble + o.locally_soluble,
            obstructed_total: self.obstructed_total + o.obstructed_total,
            n1: self.n1 + o.n1,
            n2: self.n2 + o.n2,
            n3: self.n3 + o.n3,
            overlap_23: self.overlap_23 + o.overlap_23,
            odd_only: self.odd_only + o.odd_only,
            unknown: self.unknown + o.unknown,
        }
    }
}

impl Counts {
    fn scaled(self, m: u64) -> Counts {
        Counts {
            total: self.total * m,
            dominant: self.dominant * m,
            nonconstant_br: self.nonconstant_br * m,
            unclassified: self.unclassified * m,
            locally_soluble: self.locally_soluble * m,
            obstructed_total: self.obstructed_total * m,
            n1: self.n1 * m,
            n2: self.n2 * m,
            n3: self.n3 * m,
            overlap_23: self.overlap_23 * m,
            odd_only: self.odd_only * m,
            unknown: self.unknown * m,
        }
    }
    fn fields(&self) -> [(&'static str, u64); 12] {
        [
            ("total", self.total),
            ("dominant", self.dominant),
            ("nonconstant_br", self.nonconstant_br),
            ("unclassified", self.unclassified),
            ("locally_soluble", self.locally_soluble),
            ("obstructed_total", self.obstructed_total),
            ("n1", self.n1),
            ("n2", self.n2),
            ("n3", self.n3),
            ("overlap_23", self.overlap_23),
            ("odd_only", self.odd_only),
            ("unknown", self.unknown),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusRecord {
    #[serde(rename = "T")]
    pub t: i128,
    pub mode: Mode,
    pub depth: Depth,
    /// exact counts, or sample counts in sampled mode
    pub counts: Counts,
    /// number of triples in the box
    pub population: u64,
    /// sampled mode: 95% Wilson intervals for the population counts
    pub intervals: BTreeMap<String, (f64, f64)>,
    /// nonconstant_br / T^{5/2}, scaled to the population in sampled mode
    pub nonconstant_ratio: f64,
}

/// Case membership (bit 0: case (1), bit 1: case (2), bit 2: case (3)).
pub fn cases(x: &Surface) -> u8 {
    let a = x.coeffs();
    let c2 = a.iter().any(|&v| arith::is_square_i128(-3 * v));
    let c3 = (0..3).any(|j| (0..3).any(|k| j != k && is_rational_cube(a[j], a[k])));
    match (c2, c3) {
        (false, false) => 1,
        _ => (c2 as u8) << 1 | (c3 as u8) << 2,
    }
}

/// a/b ∈ ℚ^{×3}.
fn is_rational_cube(a: i128, b: i128) -> bool {
    let g = arith::gcd(a, b);
    arith::exact_root(a / g, 3).is_some() && arith::exact_root(b / g, 3).is_some()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleOutcome {
    pub a: [i128; 3],
    pub cases: u8,
    pub index: u32,
    pub generators: Vec<String>,
    pub nonconstant: bool,
    pub unclassified: bool,
    /// None when not computed or undecided
    pub els: Option<bool>,
    pub verdict: Option<String>,
    pub odd_only: bool,
}

fn split_by_parity(gens: &[AlgebraDescriptor]) -> (Vec<AlgebraDescriptor>, Vec<AlgebraDescriptor>) {
    gens.iter().cloned().partition(|d| d.kind == AlgebraKind::A)
}

/// Obstructed by the odd-order generators while the 2-primary part, known
/// to be generated by the listed even-order algebras, does not obstruct.
fn odd_only(x: &Surface, c: &BrClassification, gens: &[AlgebraDescriptor], opts: &Options) -> bool {
    let t2 = &c.transcendental[&2];
    if !(t2.is_trivial() && t2.certainty == Certainty::Exact) {
        return false;
    }
    let (odd, even) = split_by_parity(gens);
    if odd.is_empty() || !decide_obstruction(x, &odd, opts).verdict.is_obstructed() {
        return false;
    }
    even.is_empty() || matches!(decide_obstruction(x, &even, opts).verdict, Verdict::NotObstructed { .. })
}

pub fn evaluate(x: &Surface, depth: Depth, opts: &Options) -> TripleOutcome {
    let c = classify(x);
    let unclassified = !matches!(c.algebraic, AlgebraicPart::Generators(_));
    let mut out = TripleOutcome {
        a: x.coeffs(),
        cases: cases(x),
        index: c.galois_index,
        generators: c.algebraic.generators().to_vec(),
        nonconstant: c.nonconstant_brauer,
        unclassified,
        els: None,
        verdict: None,
        odd_only: false,
    };
    if depth == Depth::Brauer {
        return out;
    }
    let gens = generator_descriptors(x, &c.algebraic);
    let rep = decide_obstruction(x, &gens, opts);
    out.els = match &rep.verdict {
        Verdict::LocallyInsoluble { .. } => Some(false),
        Verdict::Unknown { reason } if reason.starts_with("local solubility") => None,
        _ => Some(true),
    };
    if rep.verdict.is_obstructed() {
        out.odd_only = odd_only(x, &c, &gens, opts);
    }
    out.verdict = Some(rep.verdict.label().to_string());
    out
}

fn tally(o: &TripleOutcome) -> Counts {
    let mut c = Counts { total: 1, ..Default::default() };
    c.dominant = o.a.iter().any(|&v| arith::is_square_i128(-3 * v)) as u64;
    c.nonconstant_br = o.nonconstant as u64;
    c.unclassified = o.unclassified as u64;
    c.locally_soluble = (o.els == Some(true)) as u64;
    let obstructed = o.verdict.as_deref() == Some("Obstructed");
    c.unknown = (o.verdict.as_deref() == Some("Unknown")) as u64;
    if obstructed {
        c.obstructed_total = 1;
        c.n1 = (o.cases & 1 != 0) as u64;
        c.n2 = (o.cases & 2 != 0) as u64;
        c.n3 = (o.cases & 4 != 0) as u64;
        c.overlap_23 = (o.cases & 6 == 6) as u64;
        c.odd_only = o.odd_only as u64;
    }
    c
}

fn box_values(t: i128) -> Vec<i128> {
    (-t..=t).filter(|&v| v != 0).collect()
}

/// Distinct orderings of a sorted triple.
fn multiplicity(a: i128, b: i128, c: i128) -> u64 {
    match (a == b, b == c) {
        (true, true) => 1,
        (false, false) => 6,
        _ => 3,
    }
}

/// Each unordered triple is evaluated once and weighted by its number of
/// orderings; classification and verdicts are permutation invariant.
pub fn census(t: i128, mode: Mode, depth: Depth, opts: &Options) -> CensusRecord {
    let vals = box_values(t);
    let population = (vals.len() as u64).pow(3);
    let counts = match mode {
        Mode::Exhaustive => (0..vals.len())
            .into_par_iter()
            .map(|i| {
                let mut acc = Counts::default();
                for j in i..vals.len() {
                    for k in j..vals.len() {
                        let (a, b, c) = (vals[i], vals[j], vals[k]);
                        let x = Surface::new(a, b, c).unwrap();
                        acc = acc + tally(&evaluate(&x, depth, opts)).scaled(multiplicity(a, b, c));
                    }
                }
                acc
            })
            .reduce(Counts::default, |a, b| a + b),
        Mode::Sampled { size, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let draws: Vec<[i128; 3]> = (0..size).map(|_| [0; 3].map(|_| vals[rng.gen_range(0..vals.len())])).collect();
            draws
                .par_iter()
                .map(|a| tally(&evaluate(&Surface::new(a[0], a[1], a[2]).unwrap(), depth, opts)))
                .reduce(Counts::default, |a, b| a + b)
        }
    };
    let mut intervals = BTreeMap::new();
    let scale = match mode {
        Mode::Exhaustive => 1.0,
        Mode::Sampled { size, .. } => {
            for (name, k) in counts.fields() {
                let (lo, hi) = wilson(k, size as u64);
                intervals.insert(name.to_string(), (lo * population as f64, hi * population as f64));
            }
            population as f64 / size as f64
        }
    };
    let nonconstant_ratio = counts.nonconstant_br as f64 * scale / (t as f64).powf(2.5);
    CensusRecord { t, mode, depth, counts, population, intervals, nonconstant_ratio }
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson(k: u64, n: u64) -> (f64, f64) {
    let z = 1.959963984540054;
    let n = n as f64;
    let p = k as f64 / n;
    let den = 1.0 + z * z / n;
    let mid = (p + z * z / (2.0 * n)) / den;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / den;
    ((mid - half).max(0.0), (mid + half).min(1.0))
}

/// One CSV row per triple of the box, ordered.
pub fn audit_rows(t: i128, depth: Depth, opts: &Options) -> Vec<TripleOutcome> {
    let vals = box_values(t);
    let mut triples = Vec::with_capacity(vals.len().pow(3));
    for &a in &vals {
        for &b in &vals {
            for &c in &vals {
                triples.push([a, b, c]);
            }
        }
    }
    triples.par_iter().map(|a| evaluate(&Surface::new(a[0], a[1], a[2]).unwrap(), depth, opts)).collect()
}

pub const AUDIT_HEADER: &str = "a1,a2,a3,cases,index,generators,nonconstant,els,verdict,odd_only";

pub fn audit_csv_row(o: &TripleOutcome) -> String {
    let els = match o.els {
        Some(true) => "1",
        Some(false) => "0",
        None => "",
    };
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        o.a[0],
        o.a[1],
        o.a[2],
        o.cases,
        o.index,
        if o.unclassified { "unclassified".to_string() } else { o.generators.join(";") },
        o.nonconstant as u8,
        els,
        o.verdict.as_deref().unwrap_or(""),
        o.odd_only as u8
    )
}

/// #{triples in the box with some −3Aᵢ a square}, by a plain scan.
pub fn dominant_count_direct(t: i128) -> u64 {
    let vals = box_values(t);
    let good: Vec<bool> = vals.iter().map(|&v| arith::is_square_i128(-3 * v)).collect();
    let mut n = 0;
    for &a in &good {
        for &b in &good {
            for &c in &good {
                n += (a || b || c) as u64;
            }
        }
    }
    n
}

/// The same count read off the classification: a square condition with
/// twist −3 on a single coefficient.
pub fn dominant_count_classified(t: i128) -> u64 {
    let vals = box_values(t);
    let mut n = 0;
    for &a in &vals {
        for &b in &vals {
            for &c in &vals {
                let p = crate::brauergroup::condition_profile(&Surface::new(a, b, c).unwrap());
                n += p.square_conditions.iter().any(|(tw, s)| *tw == -3 && s.len() == 1) as u64;
            }
        }
    }
    n
}

// ---------------------------------------------------------- analytic checks

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub r: i128,
    pub bound: u64,
    /// primes p ≤ bound with p ∤ 3r
    pub primes: u64,
    pub hits: u64,
    pub density: f64,
    pub expected: f64,
    /// share of p ≡ 2 mod 3 among the counted primes, and whether all of them hit
    pub share_2mod3: f64,
    pub all_2mod3_hit: bool,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CensusError {
    #[error("{0} is a rational cube")]
    Cube(i128),
}

/// Density of primes p ≤ X, p ∤ 3r, with r ∈ ℚ_p^{×3}.
pub fn frobenian_density(r: i128, bound: u64) -> Result<DensityEstimate, CensusError> {
    if r == 0 || arith::exact_root(r, 3).is_some() {
        return Err(CensusError::Cube(r));
    }
    let mut primes = 0;
    let mut hits = 0;
    let mut two = 0;
    let mut two_hit = 0;
    for p in arith::primes_up_to(bound as usize) {
        if p == 3 || r % p as i128 == 0 {
            continue;
        }
        primes += 1;
        let cube = if p % 3 == 2 {
            true
        } else {
            let u = r.rem_euclid(p as i128) as u128;
            arith::pow_mod(u, ((p - 1) / 3) as u128, p as u128) == 1
        };
        hits += cube as u64;
        if p % 3 == 2 {
            two += 1;
            two_hit += cube as u64;
        }
    }
    Ok(DensityEstimate {
        r,
        bound,
        primes,
        hits,
        density: hits as f64 / primes as f64,
        expected: 2.0 / 3.0,
        share_2mod3: two as f64 / primes as f64,
        all_2mod3_hit: two == two_hit,
    })
}

fn radicals(n: usize) -> Vec<u64> {
    let mut rad = vec![1u64; n + 1];
    let mut sieve = vec![true; n + 1];
    for p in 2..=n {
        if sieve[p] {
            for m in (p..=n).step_by(p) {
                sieve[m] = false;
                rad[m] *= p as u64;
            }
        }
    }
    rad
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialSums {
    /// (N, partial sum up to N) at N = 2^k and at the bound
    pub checkpoints: Vec<(u64, f64)>,
    /// increments between consecutive checkpoints
    pub increments: Vec<f64>,
}

impl PartialSums {
    fn from_terms(bound: usize, mut term: impl FnMut(usize) -> f64) -> PartialSums {
        let mut s = 0.0;
        let mut cps = vec![];
        let mut next = 1;
        for n in 1..=bound {
            s += term(n);
            if n == next || n == bound {
                cps.push((n as u64, s));
                next *= 2;
            }
        }
        let increments = cps.windows(2).map(|w| w[1].1 - w[0].1).collect();
        PartialSums { checkpoints: cps, increments }
    }
    /// Dyadic increments eventually decrease (ignoring the short last block).
    pub fn increments_shrink(&self) -> bool {
        let inc = &self.increments;
        let k = inc.len().saturating_sub(1);
        k >= 4 && inc[k / 2..k].windows(2).all(|w| w[1] < w[0])
    }
}

/// Σ_{n≤N} 1/(rad(n) n^ε).
pub fn radical_sum_check(eps: f64, bound: usize) -> PartialSums {
    let rad = radicals(bound);
    PartialSums::from_terms(bound, |n| 1.0 / (rad[n] as f64 * (n as f64).powf(eps)))
}

/// Σ over n₁, n₂ ≤ N with rad(n₁) = rad(n₂) of n₁^{−a₁} n₂^{−a₂}, as a
/// function of N (pairs enter once both members are ≤ N).
pub fn radical_pair_sum_check(a1: f64, a2: f64, bound: usize) -> PartialSums {
    let rad = radicals(bound);
    // running per-radical sums
    let mut s1: BTreeMap<u64, f64> = BTreeMap::new();
    let mut s2: BTreeMap<u64, f64> = BTreeMap::new();
    PartialSums::from_terms(bound, |n| {
        let r = rad[n];
        let x1 = (n as f64).powf(-a1);
        let x2 = (n as f64).powf(-a2);
        let e1 = s1.entry(r).or_insert(0.0);
        let e2 = s2.entry(r).or_insert(0.0);
        // new pairs: (n, m≤n) and (m<n, n)
        let add = x1 * (*e2 + x2) + x2 * *e1;
        *e1 += x1;
        *e2 += x2;
        add
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MertensCheck {
    pub bound: u64,
    pub sum: f64,
    pub loglog: f64,
    /// Σ_{p≤bound} 1/p − log log bound
    pub constant_estimate: f64,
}

pub fn mertens_loglog_check(bound: u64) -> MertensCheck {
    let sum: f64 = arith::primes_up_to(bound as usize).iter().map(|&p| 1.0 / p as f64).sum();
    let loglog = (bound as f64).ln().ln();
    MertensCheck { bound, sum, loglog, constant_estimate: sum - loglog }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominant_two_ways() {
        assert_eq!(dominant_count_direct(1), 0);
        for t in [3, 8, 13] {
            assert_eq!(dominant_count_direct(t), dominant_count_classified(t));
        }
        let r = census(13, Mode::Exhaustive, Depth::Brauer, &Options::default());
        assert_eq!(r.counts.dominant, dominant_count_direct(13));
        assert_eq!(r.counts.total, 26u64.pow(3));
    }

    #[test]
    fn symmetric_scan_matches_full_scan() {
        let opts = Options::default();
        let r = census(5, Mode::Exhaustive, Depth::Obstruction, &opts);
        let full = audit_rows(5, Depth::Obstruction, &opts).iter().map(tally).fold(Counts::default(), |a, b| a + b);
        assert_eq!(r.counts, full);
        assert!(r.counts.obstructed_total <= r.counts.locally_soluble && r.counts.locally_soluble <= r.counts.total);
    }

    #[test]
    fn case_membership() {
        assert_eq!(cases(&Surface::new(5, 11, 13).unwrap()), 1);
        assert_eq!(cases(&Surface::new(-3, 97, 21728).unwrap()), 2);
        assert_eq!(cases(&Surface::new(28, 2, 686).unwrap()), 4);
        assert_eq!(cases(&Surface::new(-3, 5, 40).unwrap()), 6);
    }

    #[test]
    fn known_triples() {
        let opts = Options::default();
        let o = evaluate(&Surface::new(-3, 97, 21728).unwrap(), Depth::Obstruction, &opts);
        assert_eq!(o.verdict.as_deref(), Some("Obstructed"));
        assert!(o.cases & 2 != 0 && o.odd_only);
        let o = evaluate(&Surface::new(28, 2, 686).unwrap(), Depth::Obstruction, &opts);
        assert_eq!(o.verdict.as_deref(), Some("Obstructed"));
        assert!(o.cases & 4 != 0 && !o.odd_only);
        let o = evaluate(&Surface::new(1, 7, -5).unwrap(), Depth::Obstruction, &opts);
        assert_eq!(o.verdict.as_deref(), Some("NotObstructed"));
    }

    #[test]
    fn sampled_agrees_with_exhaustive() {
        let opts = Options::default();
        let ex = census(12, Mode::Exhaustive, Depth::Brauer, &opts);
        let sa = census(12, Mode::Sampled { size: 4000, seed: 3 }, Depth::Brauer, &opts);
        let (lo, hi) = sa.intervals["nonconstant_br"];
        let v = ex.counts.nonconstant_br as f64;
        assert!(lo <= v && v <= hi, "{lo} {v} {hi}");
    }

    #[test]
    fn wilson_interval() {
        let (lo, hi) = wilson(50, 100);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
        assert_eq!(wilson(0, 10).0, 0.0);
    }

    #[test]
    fn cube_density() {
        assert_eq!(frobenian_density(8, 100), Err(CensusError::Cube(8)));
        let d = frobenian_density(2, 20000).unwrap();
        assert!((d.density - 2.0 / 3.0).abs() < 0.03);
        let d = frobenian_density(17, 20000).unwrap();
        assert!(d.all_2mod3_hit && (d.share_2mod3 - 0.5).abs() < 0.02);
    }

    #[test]
    fn radical_sums() {
        let s = radical_sum_check(0.5, 1 << 16);
        assert!(s.increments.iter().all(|&x| x > 0.0));
        assert!(s.increments_shrink());
        let s = radical_pair_sum_check(2.0 / 3.0, 2.0 / 3.0, 1 << 14);
        assert!(s.increments_shrink());
    }

    #[test]
    fn mertens() {
        let m = mertens_loglog_check(2);
        assert_eq!(m.sum, 0.5);
        let a = mertens_loglog_check(1000);
        let b = mertens_loglog_check(100000);
        assert!(b.sum > a.sum);
        assert!((b.constant_estimate - 0.2615).abs() < 0.01);
    }
}
