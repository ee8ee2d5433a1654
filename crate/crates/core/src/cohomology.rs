//! Middle cohomology of weighted diagonal hypersurfaces
//! x₀^{d₀} + A₁x₁^{d₁} + ⋯ + A_{n+1}x_{n+1}^{d_{n+1}} = 0 at desk scale:
//! the primitive lattice ℤ[G]/I with its cup product, Hodge grading,
//! Jacobi-sum Frobenius eigenvalues and the transcendental lattice.
//!
//! Coefficients here follow the hypersurface above. The K3 surface
//! w² = A₁x₁⁶ + A₂x₂⁶ + A₃x₃⁶ has coefficients (−A₁, −A₂, −A₃).

use crate::arith;
use crate::brauergroup::Fact;
use crate::eisenstein::{self, EisensteinInt, EisensteinPrime, Splitting, ZETA6};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CohomologyError {
    #[error("need at least two degrees")]
    TooFew,
    #[error("weights q₁,…,q_{{n+1}} are not pairwise coprime")]
    NotCoprime,
    #[error("last weight must be 1")]
    LastWeight,
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
    #[error("q = {q} is not 1 mod {d}")]
    NoCharacter { q: u64, d: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedShape {
    pub degrees: Vec<u32>,
}

impl WeightedShape {
    pub fn new(degrees: Vec<u32>) -> Result<Self, CohomologyError> {
        if degrees.len() < 2 {
            return Err(CohomologyError::TooFew);
        }
        let s = WeightedShape { degrees };
        let q = s.weights();
        if *q.last().unwrap() != 1 {
            return Err(CohomologyError::LastWeight);
        }
        for i in 1..q.len() {
            for j in i + 1..q.len() {
                if arith::gcd(q[i] as i128, q[j] as i128) != 1 {
                    return Err(CohomologyError::NotCoprime);
                }
            }
        }
        Ok(s)
    }
    /// (2,6,6,6): the degree-2 K3 surface in ℙ(3,1,1,1).
    pub fn sextic() -> Self {
        WeightedShape::new(vec![2, 6, 6, 6]).unwrap()
    }
    pub fn fermat_quartic() -> Self {
        WeightedShape::new(vec![4, 4, 4, 4]).unwrap()
    }
    pub fn n(&self) -> usize {
        self.degrees.len() - 2
    }
    pub fn n_prime(&self) -> usize {
        self.n() / 2
    }
    pub fn d(&self) -> u32 {
        self.degrees.iter().fold(1i128, |l, &x| l / arith::gcd(l, x as i128) * x as i128) as u32
    }
    pub fn weights(&self) -> Vec<u32> {
        let d = self.d();
        self.degrees.iter().map(|x| d / x).collect()
    }
    pub fn q_star(&self) -> u32 {
        self.weights().iter().product()
    }
    pub fn d_q(&self) -> u32 {
        self.d() / self.q_star()
    }
}

pub type CharTuple = Vec<u32>;

/// The set S: tuples with aᵢ ≠ 0, qᵢ | aᵢ and Σaᵢ ≡ 0 mod d.
pub fn enumerate_s(shape: &WeightedShape) -> Vec<CharTuple> {
    let d = shape.d();
    let q = shape.weights();
    let mut out = vec![];
    let mut cur = vec![];
    fn rec(i: usize, q: &[u32], d: u32, cur: &mut Vec<u32>, out: &mut Vec<CharTuple>) {
        if i == q.len() {
            if cur.iter().sum::<u32>() % d == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for a in (q[i]..d).step_by(q[i] as usize) {
            cur.push(a);
            rec(i + 1, q, d, cur, out);
            cur.pop();
        }
    }
    rec(0, &q, d, &mut cur, &mut out);
    out
}

/// q(χ) = Σaᵢ/d − 1 − n′ with representatives 0 < aᵢ < d.
pub fn hodge_grade(chi: &[u32], shape: &WeightedShape) -> i32 {
    let s: u32 = chi.iter().sum();
    (s / shape.d()) as i32 - 1 - shape.n_prime() as i32
}

pub fn inverse_char(chi: &[u32], d: u32) -> CharTuple {
    chi.iter().map(|a| (d - a) % d).collect()
}

// ---------------------------------------------------------------- group ring

/// G = Πμ_{dᵢ}/⟨u₀⋯u_{n+1}⟩. Since d_{n+1} = d, each class has a unique
/// representative with last exponent 0, so G ≅ Π_{i≤n} ℤ/dᵢ.
#[derive(Clone, Debug)]
pub struct Group {
    radix: Vec<u32>,
    pub order: usize,
}

impl Group {
    pub fn new(shape: &WeightedShape) -> Self {
        let radix = shape.degrees[..shape.degrees.len() - 1].to_vec();
        let order = radix.iter().map(|&r| r as usize).product();
        Group { radix, order }
    }
    pub fn index(&self, e: &[i64]) -> usize {
        let mut idx = 0;
        for (x, r) in e.iter().zip(&self.radix) {
            idx = idx * *r as usize + x.rem_euclid(*r as i64) as usize;
        }
        idx
    }
    pub fn exps(&self, mut idx: usize) -> Vec<i64> {
        let mut e = vec![0; self.radix.len()];
        for k in (0..self.radix.len()).rev() {
            let r = self.radix[k] as usize;
            e[k] = (idx % r) as i64;
            idx /= r;
        }
        e
    }
    /// Exponent vector of the generator uᵢ.
    pub fn gen(&self, i: usize) -> Vec<i64> {
        let m = self.radix.len();
        if i < m {
            let mut e = vec![0; m];
            e[i] = 1;
            e
        } else {
            vec![-1; m]
        }
    }
    pub fn mul(&self, g: usize, h: usize) -> usize {
        let (a, b) = (self.exps(g), self.exps(h));
        self.index(&a.iter().zip(&b).map(|(x, y)| x + y).collect::<Vec<_>>())
    }
    pub fn inv(&self, g: usize) -> usize {
        self.index(&self.exps(g).iter().map(|x| -x).collect::<Vec<_>>())
    }
    /// χ(g) as an exponent of ζ_d.
    pub fn char_exp(&self, chi: &[u32], g: usize, d: u32) -> u32 {
        let e = self.exps(g);
        let s: i64 = e.iter().zip(chi).map(|(x, a)| x * *a as i64).sum();
        s.rem_euclid(d as i64) as u32
    }
}

/// Left multiplication x ↦ g·x on ℤ[G].
fn translate(grp: &Group, g: usize, x: &[i128]) -> Vec<i128> {
    let mut y = vec![0; x.len()];
    for (h, &c) in x.iter().enumerate() {
        if c != 0 {
            y[grp.mul(g, h)] += c;
        }
    }
    y
}

fn ring_mul(grp: &Group, x: &[i128], y: &[i128]) -> Vec<i128> {
    let mut z = vec![0; x.len()];
    for (g, &a) in x.iter().enumerate() {
        if a == 0 {
            continue;
        }
        for (h, &b) in y.iter().enumerate() {
            if b != 0 {
                z[grp.mul(g, h)] += a * b;
            }
        }
    }
    z
}

// ------------------------------------------------------- integer linear algebra

/// Row-style Hermite reduction with transform: returns (h, t, rank) with
/// t unimodular, t·v = h, the first `rank` rows of h in echelon form and
/// the remaining rows zero.
pub fn hermite(v: &[Vec<i128>]) -> (Vec<Vec<i128>>, Vec<Vec<i128>>, usize) {
    let m = v.len();
    let ncol = v.first().map_or(0, |r| r.len());
    let mut h = v.to_vec();
    let mut t: Vec<Vec<i128>> = (0..m).map(|i| (0..m).map(|j| (i == j) as i128).collect()).collect();
    let mut rank = 0;
    for col in 0..ncol {
        if rank == m {
            break;
        }
        loop {
            let piv = (rank..m).filter(|&r| h[r][col] != 0).min_by_key(|&r| h[r][col].abs());
            let Some(piv) = piv else { break };
            h.swap(rank, piv);
            t.swap(rank, piv);
            let mut done = true;
            for r in rank + 1..m {
                if h[r][col] != 0 {
                    let k = h[r][col].div_euclid(h[rank][col]);
                    axpy(&mut h, r, rank, k);
                    axpy(&mut t, r, rank, k);
                    if h[r][col] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                if h[rank][col] < 0 {
                    h[rank].iter_mut().for_each(|x| *x = -*x);
                    t[rank].iter_mut().for_each(|x| *x = -*x);
                }
                for r in 0..rank {
                    let k = h[r][col].div_euclid(h[rank][col]);
                    if k != 0 {
                        axpy(&mut h, r, rank, k);
                        axpy(&mut t, r, rank, k);
                    }
                }
                rank += 1;
                break;
            }
        }
    }
    (h, t, rank)
}

fn axpy(a: &mut [Vec<i128>], dst: usize, src: usize, k: i128) {
    let s = a[src].clone();
    for (x, y) in a[dst].iter_mut().zip(s) {
        *x = x.checked_sub(k.checked_mul(y).expect("overflow")).expect("overflow");
    }
}

/// ℤ-basis of {y : Σ y_j v_j = 0}.
pub fn integer_relations(v: &[Vec<i128>]) -> Vec<Vec<i128>> {
    let (_, t, rank) = hermite(v);
    t[rank..].to_vec()
}

/// Invariant factors of an integer matrix (zeros dropped are kept as 0).
pub fn smith_invariants(m: &[Vec<i128>]) -> Vec<i128> {
    let mut a = m.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut out = vec![];
    for k in 0..rows.min(cols) {
        loop {
            let pos = (k..rows).flat_map(|i| (k..cols).map(move |j| (i, j))).filter(|&(i, j)| a[i][j] != 0).min_by_key(|&(i, j)| a[i][j].abs());
            let Some((pi, pj)) = pos else {
                out.extend(std::iter::repeat(0).take(rows.min(cols) - k));
                return out;
            };
            a.swap(k, pi);
            for r in a.iter_mut() {
                r.swap(k, pj);
            }
            let p = a[k][k];
            let mut clean = true;
            for i in k + 1..rows {
                let q = a[i][k].div_euclid(p);
                for j in k..cols {
                    a[i][j] -= q * a[k][j];
                }
                clean &= a[i][k] == 0;
            }
            for j in k + 1..cols {
                let q = a[k][j].div_euclid(p);
                for i in k..rows {
                    a[i][j] -= q * a[i][k];
                }
                clean &= a[k][j] == 0;
            }
            if !clean {
                continue;
            }
            // p must divide the rest
            if let Some((i, _)) = (k + 1..rows).flat_map(|i| (k + 1..cols).map(move |j| (i, j))).find(|&(i, j)| a[i][j] % p != 0) {
                for j in k..cols {
                    a[k][j] += a[i][j];
                }
                continue;
            }
            out.push(p.abs());
            break;
        }
    }
    out
}

pub fn determinant(m: &[Vec<i128>]) -> i128 {
    // Bareiss
    let n = m.len();
    let mut a = m.to_vec();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

// ---------------------------------------------------------- primitive lattice

#[derive(Clone, Debug)]
pub struct PrimitiveLattice {
    pub shape: WeightedShape,
    pub group: Group,
    pub rank: usize,
    /// preimages in ℤ[G] of the basis
    pub basis: Vec<Vec<i128>>,
    pub gram: Vec<Vec<i128>>,
    /// kernel functionals defining ℤ[G] → P ⊂ ℤ^rank
    functionals: Vec<Vec<i128>>,
    echelon: Vec<Vec<i128>>,
    /// (−1)^{n(n+1)/2}(1−u₀)⋯(1−u_{n+1})
    cup_kernel: Vec<i128>,
}

impl PrimitiveLattice {
    /// Coordinates of the image of x ∈ ℤ[G] in the basis.
    pub fn coords(&self, x: &[i128]) -> Vec<i128> {
        let mut y: Vec<i128> = self.functionals.iter().map(|k| k.iter().zip(x).map(|(a, b)| a * b).sum()).collect();
        let mut c = vec![0; self.rank];
        for (j, row) in self.echelon.iter().enumerate() {
            let col = row.iter().position(|&v| v != 0).unwrap();
            assert_eq!(y[col] % row[col], 0, "not in the lattice");
            c[j] = y[col] / row[col];
            for (a, b) in y.iter_mut().zip(row) {
                *a -= c[j] * b;
            }
        }
        assert!(y.iter().all(|&v| v == 0));
        c
    }
    /// The cup product on ℤ[G]: coefficient of 1 in ε·Π(1−uᵢ)·x·y^{−1}.
    pub fn pairing(&self, x: &[i128], y: &[i128]) -> i128 {
        let g = &self.group;
        let mut s = 0;
        for (a, &xa) in x.iter().enumerate() {
            if xa == 0 {
                continue;
            }
            for (b, &yb) in y.iter().enumerate() {
                if yb != 0 {
                    s += xa * yb * self.cup_kernel[g.mul(b, g.inv(a))];
                }
            }
        }
        s
    }
    /// Matrix (columns = images of basis vectors) of multiplication by z ∈ ℤ[G].
    pub fn action(&self, z: &[i128]) -> Vec<Vec<i128>> {
        let cols: Vec<Vec<i128>> = self.basis.iter().map(|x| self.coords(&ring_mul(&self.group, z, x))).collect();
        (0..self.rank).map(|i| cols.iter().map(|c| c[i]).collect()).collect()
    }
    pub fn generator(&self, i: usize) -> Vec<i128> {
        let mut z = vec![0; self.group.order];
        z[self.group.index(&self.group.gen(i))] = 1;
        z
    }
}

/// ℤ[G]/I with I the saturation of ⟨1 + uᵢ + ⋯ + uᵢ^{dᵢ−1}⟩, computed as
/// the image of ℤ[G] under a ℤ-basis of the functionals killing the ideal.
pub fn build_primitive_lattice(shape: &WeightedShape) -> PrimitiveLattice {
    let grp = Group::new(shape);
    let n = grp.order;
    let mut gens: Vec<Vec<i128>> = vec![];
    for (i, &di) in shape.degrees.iter().enumerate() {
        let u = grp.gen(i);
        let mut phi = vec![0i128; n];
        for j in 0..di as i64 {
            phi[grp.index(&u.iter().map(|x| x * j).collect::<Vec<_>>())] += 1;
        }
        for g in 0..n {
            let v = translate(&grp, g, &phi);
            if !gens.contains(&v) {
                gens.push(v);
            }
        }
    }
    // functionals y with y·j = 0: relations among the columns
    let cols: Vec<Vec<i128>> = (0..n).map(|g| gens.iter().map(|j| j[g]).collect()).collect();
    let functionals = integer_relations(&cols);
    let rank = functionals.len();
    let images: Vec<Vec<i128>> = (0..n).map(|g| functionals.iter().map(|k| k[g]).collect()).collect();
    let (h, t, r) = hermite(&images);
    assert_eq!(r, rank);
    let echelon = h[..rank].to_vec();
    let basis = t[..rank].to_vec();

    let eps = if (shape.n() * (shape.n() + 1) / 2) % 2 == 0 { 1 } else { -1 };
    let mut cup = vec![0i128; n];
    cup[0] = eps;
    for i in 0..shape.degrees.len() {
        let mut f = vec![0i128; n];
        f[0] = 1;
        f[grp.index(&grp.gen(i))] -= 1;
        cup = ring_mul(&grp, &cup, &f);
    }
    let mut lat = PrimitiveLattice { shape: shape.clone(), group: grp, rank, basis, gram: vec![], functionals, echelon, cup_kernel: cup };
    lat.gram = (0..rank).map(|i| (0..rank).map(|j| lat.pairing(&lat.basis[i], &lat.basis[j])).collect()).collect();
    lat
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscendentalLattice {
    /// reduced Gram matrix
    pub gram: Vec<Vec<i128>>,
    /// invariant factors of T*/T, units dropped
    pub discriminant: Vec<i128>,
}

/// Characters whose orbit under (ℤ/d)^× meets Hodge grade 1.
pub fn transcendental_characters(shape: &WeightedShape) -> Vec<CharTuple> {
    let d = shape.d();
    let s = enumerate_s(shape);
    let units: Vec<u32> = (1..d).filter(|t| arith::gcd(*t as i128, d as i128) == 1).collect();
    s.iter()
        .filter(|chi| units.iter().any(|t| hodge_grade(&chi.iter().map(|a| a * t % d).collect::<Vec<_>>(), shape) == 1))
        .cloned()
        .collect()
}

/// T = P ∩ ⊕_{χ∈S_T} V_χ, cut out by |G|·e_O for the other Galois orbits O.
pub fn transcendental_lattice(lat: &PrimitiveLattice) -> TranscendentalLattice {
    let shape = &lat.shape;
    let d = shape.d();
    let grp = &lat.group;
    let st = transcendental_characters(shape);
    let units: Vec<u32> = (1..d).filter(|t| arith::gcd(*t as i128, d as i128) == 1).collect();
    let mut orbits: Vec<Vec<CharTuple>> = vec![];
    for chi in enumerate_s(shape) {
        if st.contains(&chi) || orbits.iter().any(|o| o.contains(&chi)) {
            continue;
        }
        let mut o: Vec<CharTuple> = units.iter().map(|t| chi.iter().map(|a| a * t % d).collect()).collect();
        o.sort();
        o.dedup();
        orbits.push(o);
    }
    let mut rows: Vec<Vec<i128>> = vec![];
    for o in &orbits {
        // |G|·e_O = Σ_g (Σ_{χ∈O} χ(g⁻¹)) g, an integral element
        let z: Vec<i128> = (0..grp.order)
            .map(|g| {
                let s: f64 = o
                    .iter()
                    .map(|chi| {
                        let e = grp.char_exp(chi, grp.inv(g), d);
                        (2.0 * std::f64::consts::PI * e as f64 / d as f64).cos()
                    })
                    .sum();
                let r = s.round();
                assert!((s - r).abs() < 1e-6);
                r as i128
            })
            .collect();
        rows.extend(lat.action(&z));
    }
    let cols: Vec<Vec<i128>> = (0..lat.rank).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let t = integer_relations(&cols);
    let g: Vec<Vec<i128>> = t
        .iter()
        .map(|a| t.iter().map(|b| (0..lat.rank).map(|i| (0..lat.rank).map(|j| a[i] * lat.gram[i][j] * b[j]).sum::<i128>()).sum()).collect())
        .collect();
    let gram = if g.len() == 2 { reduce_binary(&g) } else { g };
    let discriminant = smith_invariants(&gram).into_iter().filter(|&x| x != 1).collect();
    TranscendentalLattice { gram, discriminant }
}

/// Lagrange reduction of a definite binary form, b ≥ 0.
fn reduce_binary(g: &[Vec<i128>]) -> Vec<Vec<i128>> {
    let (mut a, mut b, mut c) = (g[0][0], g[0][1], g[1][1]);
    let sgn = a.signum();
    a *= sgn;
    b *= sgn;
    c *= sgn;
    loop {
        if a > c {
            std::mem::swap(&mut a, &mut c);
        }
        let k = (2 * b + a).div_euclid(2 * a);
        if k == 0 {
            break;
        }
        c = c - 2 * k * b + k * k * a;
        b -= k * a;
    }
    let b = b.abs();
    vec![vec![sgn * a, sgn * b], vec![sgn * b, sgn * c]]
}

pub fn transcendental_lattice_sextic() -> TranscendentalLattice {
    transcendental_lattice(&build_primitive_lattice(&WeightedShape::sextic()))
}

// ---------------------------------------------------------- cyclotomic integers

/// Element of ℤ[x]/(x^d − 1), read in ℤ[ζ_d].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cyc {
    pub c: Vec<i128>,
}

impl Cyc {
    pub fn zero(d: u32) -> Self {
        Cyc { c: vec![0; d as usize] }
    }
    pub fn int(d: u32, n: i128) -> Self {
        let mut z = Cyc::zero(d);
        z.c[0] = n;
        z
    }
    pub fn root(d: u32, k: i64) -> Self {
        let mut z = Cyc::zero(d);
        z.c[k.rem_euclid(d as i64) as usize] = 1;
        z
    }
    fn d(&self) -> usize {
        self.c.len()
    }
    pub fn add(&self, o: &Cyc) -> Cyc {
        Cyc { c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }
    pub fn sub(&self, o: &Cyc) -> Cyc {
        Cyc { c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect() }
    }
    pub fn scale(&self, k: i128) -> Cyc {
        Cyc { c: self.c.iter().map(|a| a * k).collect() }
    }
    pub fn mul(&self, o: &Cyc) -> Cyc {
        let d = self.d();
        let mut z = vec![0; d];
        for (i, a) in self.c.iter().enumerate() {
            if *a != 0 {
                for (j, b) in o.c.iter().enumerate() {
                    z[(i + j) % d] += a * b;
                }
            }
        }
        Cyc { c: z }
    }
    /// Multiplication by ζ^k.
    pub fn shift(&self, k: i64) -> Cyc {
        let d = self.d() as i64;
        let mut z = vec![0; self.d()];
        for (i, a) in self.c.iter().enumerate() {
            z[(i as i64 + k).rem_euclid(d) as usize] = *a;
        }
        Cyc { c: z }
    }
    pub fn conj(&self) -> Cyc {
        let d = self.d();
        Cyc { c: (0..d).map(|i| self.c[(d - i) % d]).collect() }
    }
    /// Remainder modulo Φ_d: the canonical form.
    pub fn reduced(&self) -> Vec<i128> {
        let phi = cyclotomic_poly(self.d() as u32);
        let deg = phi.len() - 1;
        let mut r = self.c.clone();
        for i in (deg..r.len()).rev() {
            let q = r[i];
            if q != 0 {
                for (k, p) in phi.iter().enumerate() {
                    r[i - deg + k] -= q * p;
                }
            }
        }
        r.truncate(deg.max(1));
        r
    }
    pub fn equals(&self, o: &Cyc) -> bool {
        self.sub(o).reduced().iter().all(|&x| x == 0)
    }
    pub fn as_integer(&self) -> Option<i128> {
        let r = self.reduced();
        r[1..].iter().all(|&x| x == 0).then_some(r[0])
    }
    /// Image in ℤ[ω] for d = 6, with ζ₆ = 1 + ω.
    pub fn to_eisenstein(&self) -> EisensteinInt {
        assert_eq!(self.d(), 6);
        let mut z = EisensteinInt::int(0);
        for (k, a) in self.c.iter().enumerate() {
            z = z + ZETA6.pow(k as u64) * EisensteinInt::int(*a);
        }
        z
    }
}

/// Φ_d with constant term first.
pub fn cyclotomic_poly(d: u32) -> Vec<i128> {
    let mut num = vec![0i128; d as usize + 1];
    num[0] = -1;
    num[d as usize] = 1;
    for m in 1..d {
        if d % m == 0 {
            num = poly_div_exact(&num, &cyclotomic_poly(m));
        }
    }
    num
}

fn poly_div_exact(a: &[i128], b: &[i128]) -> Vec<i128> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let mut q = vec![0; a.len() - db];
    for i in (0..q.len()).rev() {
        q[i] = r[i + db] / b[db];
        for (k, bk) in b.iter().enumerate() {
            r[i + k] -= q[i] * bk;
        }
    }
    assert!(r.iter().all(|&x| x == 0));
    q
}

// ---------------------------------------------------------- finite fields

/// 𝔽_q, q = p^f, elements encoded as base-p digit vectors (polynomials in a
/// primitive root of a primitive polynomial).
#[derive(Clone, Debug)]
pub struct Fq {
    pub p: u64,
    pub f: u32,
    pub q: u64,
    exp: Vec<u32>,
    log: Vec<u32>,
    trace: Vec<u32>,
}

impl Fq {
    pub fn new(q: u64) -> Result<Fq, CohomologyError> {
        let fac = arith::factor(q as i128);
        if fac.len() != 1 {
            return Err(CohomologyError::NotPrimePower(q));
        }
        let (p, f) = fac[0];
        for cand in 0..q {
            // monic x^f + Σ cₖ x^k with coefficient digits of cand
            let low: Vec<u64> = (0..f).map(|k| cand / p.pow(k) % p).collect();
            if f > 1 && low[0] == 0 {
                continue;
            }
            if let Some(exp) = Self::cycle(p, f, q, &low) {
                let mut log = vec![0u32; q as usize];
                for (k, &e) in exp.iter().enumerate() {
                    log[e as usize] = k as u32;
                }
                let mut fq = Fq { p, f, q, exp, log, trace: vec![] };
                fq.trace = (0..q as u32).map(|x| fq.trace_of(x)).collect();
                return Ok(fq);
            }
        }
        unreachable!("a primitive polynomial exists")
    }

    /// Powers of the class of x if it generates 𝔽_q^×.
    fn cycle(p: u64, f: u32, q: u64, low: &[u64]) -> Option<Vec<u32>> {
        let enc = |v: &[u64]| v.iter().rev().fold(0u64, |acc, d| acc * p + d) as u32;
        let mut cur = vec![0u64; f as usize];
        cur[0] = 1;
        if f == 1 {
            // multiplication by a candidate primitive root
            let g = (p - low[0]) % p;
            if g == 0 {
                return None;
            }
            let mut out = Vec::with_capacity(q as usize - 1);
            let mut x = 1u64;
            for k in 0..q - 1 {
                if k > 0 && x == 1 {
                    return None;
                }
                out.push(x as u32);
                x = x * g % p;
            }
            return (x == 1).then_some(out);
        }
        let mut out = Vec::with_capacity(q as usize - 1);
        for k in 0..q - 1 {
            let e = enc(&cur);
            if k > 0 && e == 1 {
                return None;
            }
            out.push(e);
            // multiply by x modulo x^f + Σ low_k x^k
            let top = cur[f as usize - 1];
            for i in (1..f as usize).rev() {
                cur[i] = (cur[i - 1] + p * p - top * low[i] % p) % p;
            }
            cur[0] = (p * p - top * low[0] % p) % p;
        }
        (enc(&cur) == 1).then_some(out)
    }

    pub fn add(&self, a: u32, b: u32) -> u32 {
        if self.f == 1 {
            return ((a as u64 + b as u64) % self.p) as u32;
        }
        let (mut a, mut b) = (a as u64, b as u64);
        let mut r = 0;
        let mut m = 1;
        for _ in 0..self.f {
            r += ((a % self.p + b % self.p) % self.p) * m;
            a /= self.p;
            b /= self.p;
            m *= self.p;
        }
        r as u32
    }
    pub fn neg(&self, a: u32) -> u32 {
        if self.f == 1 {
            return ((self.p - a as u64) % self.p) as u32;
        }
        let mut a = a as u64;
        let mut r = 0;
        let mut m = 1;
        for _ in 0..self.f {
            r += ((self.p - a % self.p) % self.p) * m;
            a /= self.p;
            m *= self.p;
        }
        r as u32
    }
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[((self.log[a as usize] as u64 + self.log[b as usize] as u64) % (self.q - 1)) as usize]
    }
    pub fn from_int(&self, n: i128) -> u32 {
        n.rem_euclid(self.p as i128) as u32
    }
    /// Discrete log with respect to the fixed generator; x ≠ 0.
    pub fn log(&self, x: u32) -> u64 {
        assert!(x != 0);
        self.log[x as usize] as u64
    }
    pub fn pow_gen(&self, k: u64) -> u32 {
        self.exp[(k % (self.q - 1)) as usize]
    }
    fn trace_of(&self, x: u32) -> u32 {
        if x == 0 {
            return 0;
        }
        let mut s = 0;
        let mut e = self.log(x);
        for _ in 0..self.f {
            s = self.add(s, self.pow_gen(e));
            e = e * self.p % (self.q - 1);
        }
        s
    }
    pub fn trace(&self, x: u32) -> u32 {
        self.trace[x as usize]
    }
    pub fn elements(&self) -> impl Iterator<Item = u32> {
        0..self.q as u32
    }
}

/// A character ψ: 𝔽_q^× → μ_d, ψ(g^k) = ζ_d^{mult·k} for the field generator g.
#[derive(Clone, Copy, Debug)]
pub struct Character {
    pub d: u32,
    pub mult: u32,
}

impl Character {
    pub fn standard(field: &Fq, d: u32) -> Result<Self, CohomologyError> {
        if (field.q - 1) % d as u64 != 0 {
            return Err(CohomologyError::NoCharacter { q: field.q, d });
        }
        Ok(Character { d, mult: 1 })
    }
    pub fn exp(&self, field: &Fq, x: u32) -> u32 {
        ((field.log(x) * self.mult as u64) % self.d as u64) as u32
    }
}

/// Element of ℤ[ζ_d, ζ_p] as a d × p coefficient grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cyc2 {
    pub d: usize,
    pub p: usize,
    pub c: Vec<i128>,
}

impl Cyc2 {
    pub fn mul(&self, o: &Cyc2) -> Cyc2 {
        let (d, p) = (self.d, self.p);
        let mut z = vec![0; d * p];
        for (i, a) in self.c.iter().enumerate() {
            if *a == 0 {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                if *b != 0 {
                    z[((i / p + j / p) % d) * p + (i % p + j % p) % p] += a * b;
                }
            }
        }
        Cyc2 { d, p, c: z }
    }
    /// Canonical form: ζ_p-coefficient p−1 cleared via Φ_p, then each
    /// ζ_p-slice reduced modulo Φ_d. Valid since gcd(d, p) = 1.
    pub fn canonical(&self) -> Vec<Vec<i128>> {
        let (d, p) = (self.d, self.p);
        let mut out = vec![];
        for j in 0..p - 1 {
            let slice: Vec<i128> = (0..d).map(|i| self.c[i * p + j] - self.c[i * p + p - 1]).collect();
            out.push(Cyc { c: slice }.reduced());
        }
        out
    }
    pub fn equals_int_times_root(&self, n: i128, k: u32) -> bool {
        let mut e = Cyc2 { d: self.d, p: self.p, c: vec![0; self.d * self.p] };
        e.c[(k as usize % self.d) * self.p] = n;
        self.canonical() == e.canonical()
    }
}

/// g(r) = Σ_{x≠0} ψ(x)^r ζ_p^{Tr x}.
pub fn gauss_sum(r: u32, field: &Fq, psi: Character) -> Cyc2 {
    let (d, p) = (psi.d as usize, field.p as usize);
    let mut c = vec![0; d * p];
    for x in field.elements().skip(1) {
        let e = (psi.exp(field, x) as usize * r as usize) % d;
        c[e * p + field.trace(x) as usize] += 1;
    }
    Cyc2 { d, p, c }
}

/// J(χ) = Σ_{x₁+⋯+x_{n+1}=1} Π ψ(xᵢ)^{aᵢ}, a₀ omitted.
pub fn jacobi_sum(chi: &[u32], field: &Fq, psi: Character) -> Cyc {
    let d = psi.d;
    let q = field.q as usize;
    // w[s] = Σ_{x₁+⋯+x_k = s} Π ψ(xᵢ)^{aᵢ}
    let mut w: Vec<Cyc> = vec![Cyc::zero(d); q];
    for x in field.elements().skip(1) {
        w[x as usize] = Cyc::root(d, (psi.exp(field, x) * chi[1] % d) as i64);
    }
    for &a in &chi[2..] {
        let mut nw = vec![Cyc::zero(d); q];
        for s in 0..q as u32 {
            if w[s as usize].c.iter().all(|&v| v == 0) {
                continue;
            }
            for y in field.elements().skip(1) {
                let k = (psi.exp(field, y) * a % d) as i64;
                let t = field.add(s, y) as usize;
                nw[t] = nw[t].add(&w[s as usize].shift(k));
            }
        }
        w = nw;
    }
    w[1].clone()
}

/// q^{n′}·λ(χ) where λ(χ) = (−1)^n ψ^{a₀}(−1) q^{−n′} J(χ) / Π ψ(Aᵢ)^{aᵢ}
/// is the Frobenius eigenvalue on V_χ.
pub fn frobenius_eigenvalue(chi: &[u32], shape: &WeightedShape, field: &Fq, psi: Character, coeffs: &[i128]) -> Cyc {
    let m1 = psi.exp(field, field.neg(1));
    let mut k = (m1 * chi[0]) as i64;
    for (a, c) in chi[1..].iter().zip(coeffs) {
        let x = field.from_int(*c);
        assert!(x != 0, "coefficient vanishes mod p");
        k -= (psi.exp(field, x) * a) as i64;
    }
    let j = jacobi_sum(chi, field, psi).shift(k);
    if shape.n() % 2 == 1 {
        j.scale(-1)
    } else {
        j
    }
}

/// #F(𝔽_q) by enumeration, as orbits of nonzero solutions under 𝔽_q^×.
pub fn brute_count(shape: &WeightedShape, coeffs: &[i128], field: &Fq) -> u64 {
    let q = field.q as usize;
    let dist = |deg: u32, c: i128| -> Vec<u64> {
        let mut v = vec![0u64; q];
        let cx = field.from_int(c);
        for x in field.elements() {
            let y = if x == 0 { 0 } else { field.mul(cx, field.pow_gen(field.log(x) * deg as u64)) };
            v[y as usize] += 1;
        }
        v
    };
    let mut acc = dist(shape.degrees[0], 1);
    for (deg, c) in shape.degrees[1..].iter().zip(coeffs) {
        let b = dist(*deg, *c);
        let mut nacc = vec![0u64; q];
        for (s, &x) in acc.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (t, &y) in b.iter().enumerate() {
                if y != 0 {
                    nacc[field.add(s as u32, t as u32) as usize] += x * y;
                }
            }
        }
        acc = nacc;
    }
    (acc[0] - 1) / (field.q - 1)
}

/// 1 + q + ⋯ + qⁿ + (−1)ⁿ Σ_{χ∈S} q^{n′}λ(χ), if rational.
pub fn formula_count(shape: &WeightedShape, coeffs: &[i128], field: &Fq, psi: Character) -> Option<i128> {
    let q = field.q as i128;
    let mut total = Cyc::int(psi.d, (0..=shape.n() as u32).map(|k| q.pow(k)).sum());
    let sign = if shape.n() % 2 == 0 { 1 } else { -1 };
    for chi in enumerate_s(shape) {
        total = total.add(&frobenius_eigenvalue(&chi, shape, field, psi, coeffs).scale(sign));
    }
    total.as_integer()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointCount {
    pub q: u64,
    pub brute: u64,
    pub formula: Option<i128>,
}

impl PointCount {
    pub fn agrees(&self) -> bool {
        self.formula == Some(self.brute as i128)
    }
}

pub fn point_count_check(shape: &WeightedShape, coeffs: &[i128], q: u64) -> Result<PointCount, CohomologyError> {
    let field = Fq::new(q)?;
    let psi = Character::standard(&field, shape.d())?;
    Ok(PointCount { q, brute: brute_count(shape, coeffs, &field), formula: formula_count(shape, coeffs, &field, psi) })
}

/// Prime powers q ≤ bound with q ≡ 1 mod d.
pub fn admissible_q(d: u32, bound: u64) -> Vec<u64> {
    (2..=bound).filter(|&q| q % d as u64 == 1 && arith::factor(q as i128).len() == 1).collect()
}

// ---------------------------------------------------------- the sextic case

/// Which of the six listed eigenvalues applies to χ (asymmetric notation).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EigenClass {
    One,
    ZetaCubed,
    Zeta,
    ZetaBar,
    PiOverPiBar,
    PiBarOverPi,
}

pub fn eigen_class(chi: &[u32]) -> EigenClass {
    let mut a = chi[1..].to_vec();
    a.sort();
    match a.as_slice() {
        [3, 3, 3] | [1, 3, 5] => EigenClass::One,
        [2, 3, 4] => EigenClass::ZetaCubed,
        [2, 2, 5] => EigenClass::Zeta,
        [1, 4, 4] => EigenClass::ZetaBar,
        [1, 1, 1] => EigenClass::PiOverPiBar,
        [5, 5, 5] => EigenClass::PiBarOverPi,
        _ => panic!("not a sextic character: {chi:?}"),
    }
}

/// The character ψ on 𝒪/π ≅ 𝔽_p with ψ(x) ≡ x^{(p−1)/6} mod π.
pub fn residue_character(pi: &EisensteinPrime, field: &Fq) -> Character {
    let p = field.p as i128;
    let r = pi.omega_residue().expect("split prime");
    let z = (1 + r) % p;
    let target = arith::pow_mod(field.pow_gen(1) as u128, ((p - 1) / 6) as u128, p as u128) as i128;
    let mult = (1..6u32).find(|&j| arith::pow_mod(z as u128, j as u128, p as u128) as i128 == target).expect("ζ₆ generates μ₆");
    Character { d: 6, mult }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JacobiTableRow {
    pub pi: EisensteinInt,
    pub norm: i128,
    pub mismatches: Vec<CharTuple>,
}

/// Compares q·λ(χ) for the untwisted sextic with the listed values.
pub fn jacobi_table_check(pi: &EisensteinPrime) -> JacobiTableRow {
    assert_eq!(pi.splitting, Splitting::Split);
    let shape = WeightedShape::sextic();
    let p = pi.residue_norm;
    let field = Fq::new(p as u64).unwrap();
    let psi = residue_character(pi, &field);
    let four = eisenstein::sextic_residue(&EisensteinInt::int(-4), pi).expect("π ∤ 2");
    let zeta = ZETA6.pow(four as u64);
    let pv = EisensteinInt::int(p);
    let mut mismatches = vec![];
    for chi in enumerate_s(&shape) {
        let m = frobenius_eigenvalue(&chi, &shape, &field, psi, &[1, 1, 1]).to_eisenstein();
        let want = match eigen_class(&chi) {
            EigenClass::One => pv,
            EigenClass::ZetaCubed => pv * zeta.pow(3),
            EigenClass::Zeta => pv * zeta,
            EigenClass::ZetaBar => pv * zeta.conj(),
            EigenClass::PiOverPiBar => pi.value * pi.value,
            EigenClass::PiBarOverPi => pi.value.conj() * pi.value.conj(),
        };
        if m != want {
            mismatches.push(chi);
        }
    }
    JacobiTableRow { pi: pi.value, norm: p, mismatches }
}

/// Split E-primary primes of norm ≤ bound, one per prime ideal.
pub fn split_e_primary(bound: i128) -> Vec<EisensteinPrime> {
    eisenstein::e_primary_primes(bound).into_iter().filter(|p| p.splitting == Splitting::Split).collect()
}

/// (pairs checked, failures) for sextic reciprocity over E-primary primes.
pub fn sextic_reciprocity_check(bound: i128) -> (usize, usize) {
    let ps = eisenstein::e_primary_primes(bound);
    let mut n = 0;
    let mut bad = 0;
    for x in &ps {
        for y in &ps {
            if x.value == y.value || !EisensteinInt::gcd(x.value, y.value).is_unit() {
                continue;
            }
            n += 1;
            if !eisenstein::check_sextic_reciprocity(&x.value, &y.value) {
                bad += 1;
            }
        }
    }
    (n, bad)
}

/// Br(X̄)[ℓ^∞]^Γ over k = ℚ(ω) for w² = A₁x₁⁶ + A₂x₂⁶ + A₃x₃⁶.
pub fn galois_invariants_k(ell: u32, a: [i128; 3]) -> &'static str {
    let p = Fact::of(a[0]).mul(&Fact::of(a[1])).mul(&Fact::of(a[2]));
    // ℚ ∩ k^{×6} = ℚ^{×6} ∪ (−27)ℚ^{×6}, ℚ ∩ k^{×3} = ℚ^{×3}, ℚ ∩ k^{×2} = ℚ^{×2} ∪ (−3)ℚ^{×2}
    let k2 = |f: &Fact| f.is_power(2) || f.mul(&Fact::of(-3)).is_power(2);
    match ell {
        2 => {
            let f = p.mul(&Fact::of(16).inv());
            if f.is_sixth_power_k() {
                "O/4"
            } else if f.is_power(3) {
                "O/2"
            } else {
                "0"
            }
        }
        3 => {
            let f = p.mul(&Fact::of(-1));
            if f.is_sixth_power_k() {
                "O/3sqrt(-3)"
            } else if k2(&f) {
                "Z/3"
            } else {
                "0"
            }
        }
        5 => {
            if p.mul(&Fact::of(-5)).is_sixth_power_k() {
                "O/5"
            } else {
                "0"
            }
        }
        7 => {
            if p.mul(&Fact::of(7).inv()).is_sixth_power_k() {
                "O/7"
            } else {
                "0"
            }
        }
        _ => "0",
    }
}
