//! Adaptive search over residue classes of X(ℚ_p).
//!
//! Each chart fixes one coordinate xᵢ = 1 (with earlier coordinates in pℤ_p)
//! and refines the two free coordinates p-adically. A node is resolved once
//! every quantity the caller asks for is constant on it: the square class of
//! A·x⁶, and the symbol classes feeding each invariant.

use crate::arith::{self, mod_floor, pow_mod};
use crate::eisenstein::{self as eis, EisensteinInt};
use crate::localfields::{self, wild_class, wild_pair, KElt, Q};
use crate::surface::{self, AlgebraDescriptor, AlgebraKind, Exhaustion, LocalStatus, Surface, Witness};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Clone, Debug)]
pub struct SearchLimits {
    /// maximal refinement depth
    pub precision_cap: u32,
    /// maximal number of nodes kept on one level
    pub max_frontier: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { precision_cap: 40, max_frontier: 400_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImageStatus {
    /// every residue class was resolved
    Exhausted,
    /// the image is the whole group
    Full,
    /// unresolved classes remain but the image agreed at depths k and 2k
    Stable,
    PrecisionExhausted,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ImageResult {
    /// tuples of invariants, entry n in ℤ/order_n (value n/order)
    pub image: BTreeSet<Vec<u8>>,
    pub soluble: Option<bool>,
    pub status: ImageStatus,
    pub depth: u32,
    pub nodes: u64,
}

fn vmod(z: i128, p: i128, w: u32) -> u32 {
    if z == 0 {
        return w;
    }
    let mut z = z;
    let mut v = 0;
    while z % p == 0 {
        z /= p;
        v += 1;
    }
    v.min(w)
}

#[inline]
fn mulm(a: i128, b: i128, m: i128) -> i128 {
    a * b % m
}

fn powm(a: i128, e: u32, m: i128) -> i128 {
    let mut r = 1 % m;
    for _ in 0..e {
        r = mulm(r, a, m);
    }
    r
}

/// Fixed rational a with its data for (a, ·) at the prime above p.
#[derive(Clone)]
enum CubicSide {
    Split { va: i64, chi_a: i64 },
    Inert { va: i64 },
    Wild { class_a: [u8; 4] },
}

#[derive(Clone)]
struct QuadPoly {
    terms: Vec<(i128, [u32; 3])>,
}

impl QuadPoly {
    fn eval(&self, x: &[i128; 3], m: i128) -> i128 {
        let mut s = 0;
        for (c, e) in &self.terms {
            let mut t = mod_floor(*c, m);
            for k in 0..3 {
                t = mulm(t, powm(x[k], e[k], m), m);
            }
            s = (s + t) % m;
        }
        s
    }
    /// valuation bound for the change over a node
    fn drift(&self, p: u64, n: &Node, cap: u32) -> u32 {
        let mut best = cap;
        for (c, e) in &self.terms {
            for k in 0..3 {
                if k != n.chart && e[k] > 0 {
                    best = best.min(n.prec[k] + arith::val(*c, p));
                }
            }
        }
        best
    }
}

#[derive(Clone)]
enum Eval {
    A {
        i: usize,
        beta: i64,
        t: i128,
        vt: u32,
        side: CubicSide,
        /// β(−2(a,3) − (a,A_k)) and β((a,A_k) + 2(a,3))
        off_n: i64,
        off_d: i64,
        /// value on classes where w is negligible against s·xᵢ³
        near_zero: u8,
    },
    /// locally constant zero
    Zero { order: u8 },
    Quad {
        /// (Aᵢ valuation, unit residue mod 8 or mod p)
        ai: (u32, i128),
        /// alternatives: constant + Σ (Aᵢ, poly)
        options: Vec<(u8, Vec<QuadPoly>)>,
    },
}

struct Ctx {
    p: u64,
    pi: i128,
    w: u32,
    m: i128,
    a: [i128; 3],
    va: [u32; 3],
    delta: u32,
    /// ω ↦ r in ℤ/p^W for split p, with √−3 = 1 + 2r
    r: i128,
    evals: Vec<Eval>,
}

fn working_precision(p: u64) -> u32 {
    let mut w = 0;
    let mut q: i128 = 1;
    while q * p as i128 <= (1i128 << 62) {
        q *= p as i128;
        w += 1;
    }
    w
}

fn omega_root(p: u64, w: u32) -> i128 {
    let pr = eis::prime_above(p);
    let r0 = pr.omega_residue().expect("split prime");
    let m = (p as i128).pow(w);
    // Newton on r² + r + 1
    let mut r = mod_floor(r0, p as i128);
    let mut pk = p as i128;
    for _ in 1..w {
        pk *= p as i128;
        let f = mod_floor(r * r % pk + r + 1, pk);
        let d = arith::inv_mod(2 * r + 1, pk).unwrap();
        r = mod_floor(r - f * d % pk, pk);
    }
    mod_floor(r, m)
}

/// Exponent k with u^{(p−1)/3} ≡ r^k mod p.
fn chi_split(u: i128, p: u64, r: i128) -> i64 {
    let pi = p as i128;
    let y = pow_mod(mod_floor(u, pi) as u128, (p as u128 - 1) / 3, p as u128) as i128;
    let r = mod_floor(r, pi);
    if y == 1 {
        0
    } else if y == r {
        1
    } else {
        debug_assert_eq!(y, r * r % pi);
        2
    }
}

/// Exponent k with z^{(p²−1)/3} = ω^k in 𝔽_p(ω).
fn chi_inert(z: EisensteinInt, p: u64) -> i64 {
    let q = p as i128;
    let y = z.pow_mod(((q * q - 1) / 3) as u128, q);
    if y == EisensteinInt::new(1, 0) {
        0
    } else if y == EisensteinInt::new(0, 1) {
        1
    } else {
        debug_assert_eq!(y, EisensteinInt::new(q - 1, q - 1));
        2
    }
}

fn unit_residue(z: i128, v: u32, p: u64, m: i128) -> i128 {
    let mut z = mod_floor(z, m);
    for _ in 0..v {
        z /= p as i128;
    }
    if p == 2 {
        z % 8
    } else {
        z % p as i128
    }
}

/// (a, b)_p from valuations and unit residues (mod 8 at 2, mod p otherwise).
fn h2(p: u64, (va, ua): (u32, i128), (vb, ub): (u32, i128)) -> u8 {
    if p == 2 {
        let eps = |x: i128| ((x - 1) / 2) % 2;
        let om = |x: i128| ((x * x - 1) / 8) % 2;
        let e = eps(ua) * eps(ub) + (va % 2) as i128 * om(ub) + (vb % 2) as i128 * om(ua);
        return (e % 2) as u8;
    }
    let mut s = 0u8;
    if va % 2 == 1 && vb % 2 == 1 && (p - 1) / 2 % 2 == 1 {
        s ^= 1;
    }
    if vb % 2 == 1 && arith::legendre(ua, p) == -1 {
        s ^= 1;
    }
    if va % 2 == 1 && arith::legendre(ub, p) == -1 {
        s ^= 1;
    }
    s
}

fn q_pair(q: &Q, p: u64) -> (u32, i128) {
    let v = localfields::vq(q, p);
    assert!(v >= 0);
    let k = if p == 2 { 3 } else { 1 };
    (v as u32, localfields::unit_mod(q, p, k) as i128)
}

/// Cubic symbol (a, b) at the prime above p for rational b.
fn cubic_rational(side: &CubicSide, b: &Q, p: u64, r: i128) -> i64 {
    match side {
        CubicSide::Split { va, chi_a } => {
            let vb = localfields::vq(b, p);
            let ub = localfields::unit_mod(b, p, 1) as i128;
            vb * chi_a - va * chi_split(ub, p, r)
        }
        // rational units are cubes in 𝔽_{p²}
        CubicSide::Inert { .. } => 0,
        CubicSide::Wild { class_a } => wild_pair(class_a, &wild_class(&KElt::from_q(b))) as i64,
    }
}

impl Ctx {
    fn new(x: &Surface, p: u64, algs: &[AlgebraDescriptor]) -> Ctx {
        let w = working_precision(p);
        let m = (p as i128).pow(w);
        let a = x.coeffs();
        let va: Vec<u32> = a.iter().map(|&c| arith::val(c, p)).collect();
        let r = if p % 3 == 1 { omega_root(p, w) } else { 0 };
        let mut ctx = Ctx {
            p,
            pi: p as i128,
            w,
            m,
            a: [mod_floor(a[0], m), mod_floor(a[1], m), mod_floor(a[2], m)],
            va: [va[0], va[1], va[2]],
            delta: if p == 2 { 3 } else { 1 },
            r,
            evals: vec![],
        };
        ctx.evals = algs.iter().map(|d| ctx.build_eval(x, d)).collect();
        ctx
    }

    fn build_eval(&self, x: &Surface, d: &AlgebraDescriptor) -> Eval {
        let p = self.p;
        let (i, j, k) = d.ijk();
        let c = x.coeffs();
        match d.kind {
            AlgebraKind::A => {
                let aq = Q::new(c[j], c[k]);
                // a cube in ℚ_p kills the symbol; it is also the only case in
                // which X(ℚ_p) meets w = xᵢ = 0
                if localfields::is_nth_power_qp(&aq, 3, localfields::Place::Finite(p)) {
                    return Eval::Zero { order: 3 };
                }
                let side = if p == 3 {
                    CubicSide::Wild { class_a: wild_class(&KElt::from_q(&aq)) }
                } else if p % 3 == 1 {
                    let ua = localfields::unit_mod(&aq, p, 1) as i128;
                    CubicSide::Split { va: localfields::vq(&aq, p), chi_a: chi_split(ua, p, self.r) }
                } else {
                    CubicSide::Inert { va: localfields::vq(&aq, p) }
                };
                let beta = if p % 3 == 1 { 2 } else { 1 };
                let three = cubic_rational(&side, &Q::from_integer(3), p, self.r);
                let ak = cubic_rational(&side, &Q::from_integer(c[k]), p, self.r);
                let t = *d.witness.numer();
                let s = EisensteinInt::new(t, 0) * eis::SQRT_M3;
                let sym_s = self.cubic_general(&side, s);
                Eval::A {
                    i,
                    beta,
                    t,
                    vt: arith::val(t, p),
                    off_n: beta * (-2 * three - ak),
                    off_d: beta * (ak + 2 * three),
                    near_zero: (beta * (2 * sym_s - 2 * three - ak)).rem_euclid(3) as u8,
                    side,
                }
            }
            AlgebraKind::B | AlgebraKind::C => {
                // likewise X(ℚ_p) meets x_j = x_k = 0 only when Aᵢ is a square
                if localfields::is_nth_power_qp(&Q::from_integer(c[i]), 2, localfields::Place::Finite(p)) {
                    return Eval::Zero { order: 2 };
                }
                let ai = q_pair(&Q::from_integer(c[i]), p);
                let aij = h2(p, ai, q_pair(&Q::from_integer(c[j]), p));
                let cq = d.cube_ratio(x).expect("ℬ/𝒞 need a cube ratio");
                let (cn, cd) = (*cq.numer(), *cq.denom());
                let mut e = [[0u32; 3]; 5];
                let mono = |pj: u32, pk: u32| {
                    let mut v = [0u32; 3];
                    v[j] = pj;
                    v[k] = pk;
                    v
                };
                let _ = &mut e;
                // x_j² + c x_k², scaled by cd²
                let hb = QuadPoly { terms: vec![(cd * cd, mono(2, 0)), (cn * cd, mono(0, 2))] };
                // x_j⁴ − c x_j²x_k² + c²x_k⁴, scaled by cd⁴
                let hbb = QuadPoly {
                    terms: vec![
                        (cd.pow(4), mono(4, 0)),
                        (-cn * cd.pow(3), mono(2, 2)),
                        (cn * cn * cd * cd, mono(0, 4)),
                    ],
                };
                if d.kind == AlgebraKind::B {
                    Eval::Quad { ai, options: vec![(0, vec![hb]), (aij, vec![hbb])] }
                } else {
                    let rq = d.witness;
                    let l = {
                        let (rd, cdd) = (*rq.denom(), cd);
                        rd / arith::gcd(rd, cdd) * cdd
                    };
                    let rl = *(rq * Q::from_integer(l * l)).numer();
                    let cl = *(cq * Q::from_integer(l * l)).numer();
                    let hc = |sgn: i128| QuadPoly {
                        terms: vec![(l * l, mono(2, 0)), (sgn * rl, mono(1, 1)), (cl, mono(0, 2))],
                    };
                    Eval::Quad {
                        ai,
                        options: vec![
                            (0, vec![hc(1)]),
                            (0, vec![hbb.clone(), hc(-1)]),
                            (aij, vec![hb, hc(-1)]),
                        ],
                    }
                }
            }
        }
    }

    /// (a, z) for z ∈ ℤ[ω] given exactly (small), at the prime above p.
    fn cubic_general(&self, side: &CubicSide, z: EisensteinInt) -> i64 {
        let m = self.m;
        match side {
            CubicSide::Wild { class_a } => wild_pair(class_a, &wild_class(&KElt::new(z, 1))) as i64,
            _ => {
                let (x, y) = (mod_floor(z.a, m), mod_floor(z.b, m));
                self.cubic_mod(side, x, y).expect("nonzero")
            }
        }
    }

    /// (a, X + Yω) for tame p with X, Y mod p^W; None if zero to working precision.
    fn cubic_mod(&self, side: &CubicSide, x: i128, y: i128) -> Option<i64> {
        let (p, pi, m, w) = (self.p, self.pi, self.m, self.w);
        match side {
            CubicSide::Split { va, chi_a } => {
                let z = mod_floor(x + mulm(y, self.r, m), m);
                let v = vmod(z, pi, w);
                if v >= w {
                    return None;
                }
                let u = unit_residue(z, v, p, m);
                Some(v as i64 * chi_a - va * chi_split(u, p, self.r))
            }
            CubicSide::Inert { va } => {
                let v = vmod(x, pi, w).min(vmod(y, pi, w));
                if v >= w {
                    return None;
                }
                let pv = pi.pow(v);
                let u = EisensteinInt::new(mod_floor(x, m) / pv % pi, mod_floor(y, m) / pv % pi);
                Some(-va * chi_inert(u, p))
            }
            CubicSide::Wild { .. } => unreachable!(),
        }
    }

    fn roots(&self) -> Vec<Node> {
        let mut out = Vec::new();
        for chart in 0..3 {
            let free: Vec<usize> = (0..3).filter(|&f| f != chart).collect();
            for u in 0..self.p as i128 {
                for v in 0..self.p as i128 {
                    let mut x = [0i128; 3];
                    x[chart] = 1;
                    x[free[0]] = u;
                    x[free[1]] = v;
                    if (0..chart).any(|f| x[f] != 0) {
                        continue;
                    }
                    let mut prec = [1; 3];
                    prec[chart] = self.w;
                    out.push(Node { chart, prec, x });
                }
            }
        }
        out
    }

    /// Lower bound for v(xᶠ) on the node.
    fn floor_val(&self, n: &Node, f: usize) -> u32 {
        vmod(n.x[f], self.pi, self.w).min(n.prec[f])
    }

    /// Bound for the change of A_f x_f⁶ over the node.
    fn coord_drift(&self, n: &Node, f: usize) -> u32 {
        n.prec[f] + self.va[f] + 5 * self.floor_val(n, f)
    }

    fn node_drift(&self, n: &Node) -> u32 {
        (0..3).filter(|&f| f != n.chart).map(|f| self.coord_drift(n, f)).min().unwrap().min(self.w)
    }

    /// Smallest precision among the free coordinates.
    fn depth(&self, n: &Node) -> u32 {
        (0..3).filter(|&f| f != n.chart).map(|f| n.prec[f]).min().unwrap()
    }

    /// Refines the free coordinate that limits the drift.
    fn children(&self, n: &Node) -> Vec<Node> {
        let f = (0..3)
            .filter(|&f| f != n.chart)
            .min_by_key(|&f| (self.coord_drift(n, f), n.prec[f]))
            .unwrap();
        let pm = self.pi.pow(n.prec[f]);
        (0..self.pi)
            .map(|u| {
                let mut c = n.clone();
                c.x[f] += u * pm;
                c.prec[f] += 1;
                c
            })
            .collect()
    }

    fn rhs(&self, x: &[i128; 3]) -> i128 {
        let m = self.m;
        let mut s = 0;
        for i in 0..3 {
            s = (s + mulm(self.a[i], powm(x[i], 6, m), m)) % m;
        }
        s
    }

    /// Valuation of xᵢ if constant on the node.
    fn coord_val(&self, n: &Node, i: usize) -> Option<u32> {
        if i == n.chart {
            return Some(0);
        }
        let v = vmod(n.x[i], self.pi, self.w);
        (v < n.prec[i]).then_some(v)
    }

    fn process(&self, n: &Node) -> Outcome {
        let (p, w) = (self.p, self.w);
        let f0 = self.rhs(&n.x);
        let e = vmod(f0, self.pi, w);
        let drift = self.node_drift(n);
        if e + self.delta <= drift {
            if e % 2 == 1 {
                return Outcome::Dead;
            }
            let pe = self.pi.pow(e);
            let u = (f0 / pe) as u128;
            let k = w - e;
            let root = if p == 2 {
                if u % 8 != 1 {
                    return Outcome::Dead;
                }
                arith::sqrt_unit_mod_pk(u, 2, k)
            } else {
                if arith::legendre(u as i128, p) != 1 {
                    return Outcome::Dead;
                }
                arith::sqrt_unit_mod_pk(u, p, k)
            };
            let r = root.expect("square unit") as i128;
            let w0 = mod_floor(self.pi.pow(e / 2) * r, self.m);
            let ew = drift - e / 2 - (p == 2) as u32;
            let vals: Vec<Option<u8>> = self.evals.iter().map(|ev| self.eval_at(ev, n, Some((w0, ew)), e, drift)).collect();
            let jac = e / 2 + (p == 2) as u32;
            let mut pt = [w0, 0, 0, 0];
            pt[1..].copy_from_slice(&n.x);
            let wit = Witness::PAdic { p, precision: w, point: pt, lift_variable: 0, jac_valuation: jac };
            return Outcome::Soluble { vals, witness: Some(wit) };
        }
        // Hensel surjectivity along one free coordinate
        let mut best: Option<(u32, usize, u32)> = None;
        for f in 0..3 {
            if f == n.chart {
                continue;
            }
            let Some(t) = self.coord_val(n, f) else { continue };
            if n.prec[f] <= t + (p == 2) as u32 {
                continue;
            }
            let g = arith::val(6 * self.a_exact(f), p) + 5 * t;
            if best.map_or(true, |b| n.prec[f] + g < b.0) {
                best = Some((n.prec[f] + g, f, g));
            }
        }
        if let Some((l, f, g)) = best {
            if e >= l && l < w {
                let vals: Vec<Option<u8>> = self.evals.iter().map(|ev| self.eval_at(ev, n, None, e, drift)).collect();
                let witness = (2 * g < e).then(|| {
                    let mut pt = [0, 0, 0, 0];
                    pt[1..].copy_from_slice(&n.x);
                    Witness::PAdic { p, precision: e, point: pt, lift_variable: f + 1, jac_valuation: g }
                });
                return Outcome::Soluble { vals, witness };
            }
        }
        Outcome::Open
    }

    fn a_exact(&self, f: usize) -> i128 {
        // A_f is stored reduced; its valuation is what matters and is preserved
        // below the working precision.
        let v = self.a[f];
        if v == 0 {
            self.m
        } else {
            v
        }
    }

    /// Value for +w on the node, or None if not constant there. `wdat` is the
    /// centre value of w and the valuation of its drift; None for classes
    /// meeting w = 0, where only v(w) ≥ ⌈min(e, drift)/2⌉ is known.
    fn eval_at(&self, ev: &Eval, n: &Node, wdat: Option<(i128, u32)>, e: u32, drift: u32) -> Option<u8> {
        let (p, m, w) = (self.p, self.m, self.w);
        match ev {
            Eval::A { i, beta, t, vt, side, off_n, off_d, near_zero } => {
                let Some((w0, ew)) = wdat else {
                    let vx = self.coord_val(n, *i)?;
                    let vw = (e.min(drift) + 1) / 2;
                    let ok = if p == 3 {
                        2 + 2 * vw >= 2 * vt + 1 + 6 * vx + 4
                    } else {
                        vw >= vt + 3 * vx + 1
                    };
                    return ok.then_some(*near_zero);
                };
                let xi3 = powm(n.x[*i], 3, m);
                let dx = if *i == n.chart {
                    w
                } else {
                    // (c + δ)³ − c³ with v(δ) ≥ prec and v(c) ≥ mx
                    let (pr, mx) = (n.prec[*i], self.floor_val(n, *i));
                    if p == 3 {
                        (1 + 2 * mx + pr).min(3 * pr)
                    } else {
                        pr + 2 * mx
                    }
                };
                let v3 = (p == 3) as u32;
                let en = (v3 + ew).min(vt + dx).min(w);
                let tx = mulm(mod_floor(*t, m), xi3, m);
                let w3 = mulm(3, w0, m);
                // N' = 3w + t√−3 x³ = (3w + t x³) + 2t x³ ω, D' = 3w − t√−3 x³
                let cands = [(1i128, off_n, 2i64), (-1i128, off_d, -2i64)];
                let mut best: Option<(u32, i64)> = None;
                for (sg, off, coef) in cands {
                    let xx = mod_floor(w3 + sg * tx, m);
                    let yy = mod_floor(sg * 2 * tx, m);
                    let got = if let CubicSide::Wild { class_a } = side {
                        let half = m / 2;
                        let c = |z: i128| if z > half { z - m } else { z };
                        let z = EisensteinInt::new(c(xx), c(yy));
                        if z.is_zero() {
                            continue;
                        }
                        let mut vl = 0;
                        let mut zz = z;
                        while let Some(q) = zz.div_exact(&eis::LAMBDA) {
                            zz = q;
                            vl += 1;
                        }
                        if vl + 4 > 2 * en {
                            continue;
                        }
                        Some((vl, wild_pair(class_a, &wild_class(&KElt::new(z, 1))) as i64))
                    } else {
                        let v = match side {
                            CubicSide::Split { .. } => vmod(mod_floor(xx + mulm(yy, self.r, m), m), self.pi, w),
                            _ => vmod(xx, self.pi, w).min(vmod(yy, self.pi, w)),
                        };
                        if v + 1 > en {
                            continue;
                        }
                        self.cubic_mod(side, xx, yy).map(|s| (v, s))
                    };
                    if let Some((v, s)) = got {
                        let val = off + beta * coef * s;
                        if best.map_or(true, |b| v < b.0) {
                            best = Some((v, val));
                        }
                    }
                }
                best.map(|(_, val)| val.rem_euclid(3) as u8)
            }
            Eval::Zero { .. } => Some(0),
            Eval::Quad { ai, options } => {
                'opt: for (c0, polys) in options {
                    let mut s = *c0;
                    for q in polys {
                        let z = q.eval(&n.x, m);
                        let v = vmod(z, self.pi, w);
                        let dq = q.drift(p, n, w);
                        if v + self.delta > dq {
                            continue 'opt;
                        }
                        s ^= h2(p, *ai, (v, unit_residue(z, v, p, m)));
                    }
                    return Some(s);
                }
                None
            }
        }
    }

    /// Round budget, frontier budget, or a coordinate reaching working precision.
    fn must_stop(&self, next: &[Node], round: u32, cap: u32, lim: &SearchLimits) -> bool {
        let top = self.w.saturating_sub(self.va.iter().max().unwrap() + 2);
        round >= 3 * cap
            || next.len() * self.p as usize > lim.max_frontier
            || next.iter().any(|n| (0..3).any(|f| f != n.chart && n.prec[f] >= top))
    }

    fn orders(&self) -> Vec<u8> {
        self.evals
            .iter()
            .map(|e| match e {
                Eval::A { .. } => 3,
                Eval::Zero { order } => *order,
                Eval::Quad { .. } => 2,
            })
            .collect()
    }

    /// Tuples for both branches ±w.
    fn tuples(&self, vals: &[u8]) -> [Vec<u8>; 2] {
        let neg: Vec<u8> = vals
            .iter()
            .zip(&self.evals)
            .map(|(&v, e)| if matches!(e, Eval::A { .. }) { (3 - v) % 3 } else { v })
            .collect();
        [vals.to_vec(), neg]
    }
}

#[derive(Clone, Debug)]
struct Node {
    chart: usize,
    /// xᶠ is known modulo p^prec[f]
    prec: [u32; 3],
    x: [i128; 3],
}

enum Outcome {
    Dead,
    Open,
    Soluble { vals: Vec<Option<u8>>, witness: Option<Witness> },
}

fn group_size(orders: &[u8]) -> usize {
    orders.iter().map(|&o| o as usize).product()
}

/// Every tuple agreeing with `partial` where it is known.
fn completions(partial: &[Option<u8>], orders: &[u8]) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    for (v, &o) in partial.iter().zip(orders) {
        let opts: Vec<u8> = match v {
            Some(x) => vec![*x],
            None => (0..o).collect(),
        };
        out = out
            .into_iter()
            .flat_map(|t| {
                opts.iter().map(move |&x| {
                    let mut t = t.clone();
                    t.push(x);
                    t
                })
            })
            .collect();
    }
    out
}

fn min_depth(x: &Surface, p: u64) -> u32 {
    arith::val(x.a1 * x.a2 * x.a3, p) + if p <= 3 { 4 } else { 2 }
}

/// Joint image of the invariants of `algs` on X(ℚ_p), with solubility.
pub fn local_image(x: &Surface, p: u64, algs: &[AlgebraDescriptor], lim: &SearchLimits) -> ImageResult {
    let algs: Vec<AlgebraDescriptor> = algs.iter().map(|d| surface::transport(x, d, p)).collect();
    let x = &surface::p_model(x, p).0;
    let ctx = Ctx::new(x, p, &algs);
    let orders = ctx.orders();
    let full = group_size(&orders);
    let k0 = min_depth(x, p);
    let cap = lim
        .precision_cap
        .min(2 * surface::design_bound(x, p))
        .min(ctx.w.saturating_sub(ctx.va.iter().max().unwrap() + 2))
        .max(2);
    let mut image: BTreeSet<Vec<u8>> = BTreeSet::new();
    let mut history: Vec<usize> = vec![0];
    let mut soluble = false;
    let mut frontier = ctx.roots();
    let mut nodes = 0u64;
    let mut round = 1u32;
    loop {
        let mut next = Vec::new();
        for n in &frontier {
            nodes += 1;
            match ctx.process(n) {
                Outcome::Dead => {}
                Outcome::Open => {
                    if soluble && image.len() == full {
                        continue;
                    }
                    next.push(n.clone());
                }
                Outcome::Soluble { vals, .. } => {
                    soluble = true;
                    if vals.iter().all(|v| v.is_some()) {
                        let vs: Vec<u8> = vals.iter().map(|v| v.unwrap()).collect();
                        for t in ctx.tuples(&vs) {
                            image.insert(t);
                        }
                    } else {
                        let done = completions(&vals, &orders).iter().all(|t| {
                            let vs: Vec<u8> = t.clone();
                            ctx.tuples(&vs).iter().all(|u| image.contains(u))
                        });
                        if !done {
                            next.push(n.clone());
                        }
                    }
                }
            }
        }
        history.push(image.len());
        let depth = next.iter().map(|n| ctx.depth(n)).min().unwrap_or(cap);
        if soluble && image.len() == full {
            return ImageResult { image, soluble: Some(true), status: ImageStatus::Full, depth, nodes };
        }
        if next.is_empty() {
            return ImageResult { image, soluble: Some(soluble), status: ImageStatus::Exhausted, depth, nodes };
        }
        if ctx.must_stop(&next, round, cap, lim) {
            let half = (round as usize / 2).max(1);
            let stable = depth >= 2 * k0.min(cap / 2).max(1) && history[half] == image.len();
            let status = if stable { ImageStatus::Stable } else { ImageStatus::PrecisionExhausted };
            let sol = if soluble { Some(true) } else { None };
            return ImageResult { image, soluble: sol, status, depth, nodes };
        }
        frontier = next.iter().flat_map(|n| ctx.children(n)).collect();
        round += 1;
    }
}

/// Local solubility at a finite prime with a certificate.
pub fn solubility(x: &Surface, p: u64, lim: &SearchLimits) -> LocalStatus {
    let orig = *x;
    let x = &surface::p_model(x, p).0;
    let ctx = Ctx::new(x, p, &[]);
    let cap = lim.precision_cap.min(ctx.w.saturating_sub(ctx.va.iter().max().unwrap() + 2));
    let mut frontier = ctx.roots();
    let mut nodes = 0u64;
    let mut round = 1;
    let mut soluble_seen = false;
    loop {
        let mut next = Vec::new();
        for n in &frontier {
            nodes += 1;
            match ctx.process(n) {
                Outcome::Dead => {}
                Outcome::Open => next.push(n.clone()),
                Outcome::Soluble { witness: Some(w), .. } => return LocalStatus::Soluble(w),
                Outcome::Soluble { witness: None, .. } => {
                    soluble_seen = true;
                    next.push(n.clone());
                }
            }
        }
        if next.is_empty() {
            let depth = frontier.iter().map(|n| ctx.depth(n)).max().unwrap_or(1);
            return LocalStatus::Insoluble(Exhaustion { p, depth, nodes, design_bound: surface::design_bound(&orig, p) });
        }
        if ctx.must_stop(&next, round, cap, lim) {
            let why = if soluble_seen {
                "points exist but no certificate within precision"
            } else {
                "precision exhausted"
            };
            return LocalStatus::Unknown(why.to_string());
        }
        frontier = next.iter().flat_map(|n| ctx.children(n)).collect();
        round += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{catalog_algebras, descriptor};

    fn s(a: i128, b: i128, c: i128) -> Surface {
        Surface::new(a, b, c).unwrap()
    }

    #[test]
    fn omega_root_lifts() {
        for p in [7u64, 13, 31, 97] {
            let w = working_precision(p);
            let m = (p as i128).pow(w);
            let r = omega_root(p, w);
            assert_eq!(mod_floor(r * r % m + r + 1, m), 0);
        }
    }

    #[test]
    fn h2_matches_generic() {
        for p in [2u64, 3, 5, 7] {
            for a in [-12i128, -5, -3, -2, -1, 2, 3, 5, 6, 7, 10, 14, 28] {
                for b in [-7i128, -6, -1, 2, 3, 5, 11, 12, 20] {
                    let (aq, bq) = (Q::from_integer(a), Q::from_integer(b));
                    let want = localfields::hilbert2(&aq, &bq, localfields::Place::Finite(p));
                    assert_eq!(h2(p, q_pair(&aq, p), q_pair(&bq, p)), want, "p={p} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn solubility_certificates_verify() {
        for (c, p) in [((1, 1, 1), 2u64), ((-3, 97, 21728), 3), ((-3, 97, 21728), 97), ((28, 2, 686), 7), ((5, 7, -7), 5)] {
            let x = s(c.0, c.1, c.2);
            match solubility(&x, p, &SearchLimits::default()) {
                LocalStatus::Soluble(w) => assert!(w.verify(&x), "{x} p={p} {w:?}"),
                other => panic!("{x} p={p}: {other:?}"),
            }
        }
    }

    #[test]
    fn image_without_algebras() {
        let r = local_image(&s(1, 2, 3), 5, &[], &SearchLimits::default());
        assert_eq!(r.soluble, Some(true));
        assert!(r.image.contains(&vec![]));
        let _ = catalog_algebras(&s(1, 2, 3));
        let _ = descriptor(&s(-3, 1, 1), AlgebraKind::A, 1);
    }
}
