//! Integer helpers shared by the other modules.

pub fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn mod_floor(a: i128, m: i128) -> i128 {
    let r = a % m;
    if r < 0 {
        r + m
    } else {
        r
    }
}

/// `a*b mod m`; `m` must be below 2^63 so the product fits.
#[inline]
pub fn mul_mod(a: u128, b: u128, m: u128) -> u128 {
    debug_assert!(m < (1u128 << 63));
    (a % m) * (b % m) % m
}

pub fn pow_mod(mut b: u128, mut e: u128, m: u128) -> u128 {
    if m == 1 {
        return 0;
    }
    let mut r = 1u128;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Inverse of `a` modulo `m` for `gcd(a, m) = 1`.
pub fn inv_mod(a: i128, m: i128) -> Option<i128> {
    let (mut r0, mut r1) = (mod_floor(a, m), m);
    let (mut s0, mut s1) = (1i128, 0i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if r0 != 1 {
        return None;
    }
    Some(mod_floor(s0, m))
}

fn mr_mul(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn mr_pow(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mr_mul(r, b, m);
        }
        b = mr_mul(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'outer: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = mr_pow(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mr_mul(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

fn pollard_rho(n: u64) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mr_mul(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd(x.abs_diff(y) as i128, n as i128) as u64;
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

fn factor_into(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let d = pollard_rho(n);
    factor_into(d, out);
    factor_into(n / d, out);
}

/// Prime factorisation of `|n|`, sorted by prime.
pub fn factor(n: i128) -> Vec<(u64, u32)> {
    let mut n = n.unsigned_abs();
    assert!(n != 0, "factor(0)");
    let mut res: Vec<(u64, u32)> = Vec::new();
    for p in [2u128, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if e > 0 {
            res.push((p as u64, e));
        }
    }
    let mut p = 53u128;
    while n > u64::MAX as u128 {
        if p * p > n {
            break;
        }
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if e > 0 {
            res.push((p as u64, e));
        }
        p += 2;
    }
    assert!(n <= u64::MAX as u128, "factor: cofactor too large");
    let mut ps = Vec::new();
    factor_into(n as u64, &mut ps);
    ps.sort_unstable();
    for q in ps {
        match res.iter_mut().find(|(r, _)| *r == q) {
            Some(e) => e.1 += 1,
            None => res.push((q, 1)),
        }
    }
    res.sort_unstable();
    res
}

pub fn prime_divisors(n: i128) -> Vec<u64> {
    factor(n).into_iter().map(|(p, _)| p).collect()
}

/// p-adic valuation of a nonzero integer.
pub fn val(n: i128, p: u64) -> u32 {
    assert!(n != 0);
    let p = p as i128;
    let mut n = n;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

pub fn primes_up_to(n: usize) -> Vec<u64> {
    if n < 2 {
        return vec![];
    }
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i as u64)
        .collect()
}

/// Legendre symbol for odd prime `p`: 1, -1 or 0.
pub fn legendre(a: i128, p: u64) -> i32 {
    let a = mod_floor(a, p as i128) as u128;
    if a == 0 {
        return 0;
    }
    if pow_mod(a, (p as u128 - 1) / 2, p as u128) == 1 {
        1
    } else {
        -1
    }
}

/// Square root modulo an odd prime (Tonelli-Shanks).
pub fn sqrt_mod_prime(a: u128, p: u128) -> Option<u128> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if p == 2 {
        return Some(a);
    }
    if pow_mod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    let (mut q, mut s) = (p - 1, 0u32);
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let mut z = 2u128;
    while pow_mod(z, (p - 1) / 2, p) != p - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = mul_mod(tt, tt, p);
            i += 1;
        }
        let b = pow_mod(c, 1u128 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    Some(r)
}

/// Square root of a unit `u` modulo `p^k`; for p = 2 requires `u ≡ 1 mod 8`
/// (or k small enough to need less).
pub fn sqrt_unit_mod_pk(u: u128, p: u64, k: u32) -> Option<u128> {
    let p128 = p as u128;
    let m = p128.pow(k);
    let u = u % m;
    if p == 2 {
        let need = k.min(3);
        if u % (1 << need) != 1 % (1u128 << need) {
            return None;
        }
        // r^2 ≡ u mod 2^j, lifted one bit at a time.
        let mut r = 1u128;
        for j in 4..=k {
            let mj = 1u128 << j;
            if mul_mod(r, r, mj) != u % mj {
                r += 1u128 << (j - 2);
            }
        }
        return Some(r % m);
    }
    let mut r = sqrt_mod_prime(u % p128, p128)?;
    let mut pk = p128;
    for _ in 1..k {
        pk *= p128;
        // r <- r - (r^2 - u) / (2r)
        let f = (mul_mod(r, r, pk) + pk - u % pk) % pk;
        let inv2r = inv_mod((2 * r) as i128, pk as i128)? as u128;
        r = (r + pk - mul_mod(f, inv2r, pk)) % pk;
    }
    Some(r)
}

pub fn is_square_i128(n: i128) -> bool {
    if n < 0 {
        return false;
    }
    let r = isqrt(n as u128);
    r * r == n as u128
}

pub fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

/// Integer k-th root of `n` if exact (sign allowed for odd k).
pub fn exact_root(n: i128, k: u32) -> Option<i128> {
    if n < 0 {
        if k % 2 == 0 {
            return None;
        }
        return exact_root(-n, k).map(|r| -r);
    }
    if n < 2 {
        return Some(n);
    }
    let mut x = (n as f64).powf(1.0 / k as f64).round() as i128;
    for c in [x - 1, x, x + 1] {
        if c >= 0 && c.checked_pow(k) == Some(n) {
            x = c;
            return Some(x);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_roundtrip() {
        for n in 1..3000i128 {
            let f = factor(n);
            let m: i128 = f.iter().map(|&(p, e)| (p as i128).pow(e)).product();
            assert_eq!(m, n);
            assert!(f.iter().all(|&(p, _)| is_prime(p)));
        }
        let big = 1_000_000_007i128 * 998_244_353;
        assert_eq!(factor(big), vec![(998_244_353, 1), (1_000_000_007, 1)]);
    }

    #[test]
    fn sqrt_lifts() {
        for p in [2u64, 3, 5, 7, 13] {
            for k in 1..8 {
                let m = (p as u128).pow(k);
                for u in 1..m.min(300) {
                    if u % p as u128 == 0 {
                        continue;
                    }
                    if let Some(r) = sqrt_unit_mod_pk(u, p, k) {
                        assert_eq!(r * r % m, u, "p={p} k={k} u={u}");
                    }
                }
            }
        }
    }

    #[test]
    fn roots() {
        assert_eq!(exact_root(-27, 3), Some(-3));
        assert_eq!(exact_root(64, 6), Some(2));
        assert_eq!(exact_root(63, 6), None);
        assert_eq!(inv_mod(3, 7), Some(5));
    }
}
