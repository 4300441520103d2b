//! Digit expansions, binomial coefficients modulo p, and the sign lemma for
//! digit-constrained binomial sums.
//!
//! Two independent routes are provided for the binomial-sum lemma: literal
//! enumeration of exponent tuples, and extraction of a coefficient from a
//! product of binomial powers in F_p[x]/(x^(q-1) - 1). The test suites insist
//! the two agree everywhere.

use crate::{Error, Result};
use num_bigint::BigUint;

/// Base-b digit expansion, least significant first. The zero value has an
/// empty digit list; otherwise there is no trailing zero digit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitVector {
    pub base: u64,
    pub digits: Vec<u64>,
}

impl DigitVector {
    pub fn new(n: u64, base: u64) -> DigitVector {
        assert!(base >= 2);
        let mut digits = Vec::new();
        let mut v = n;
        while v > 0 {
            digits.push(v % base);
            v /= base;
        }
        DigitVector { base, digits }
    }

    pub fn value(&self) -> u64 {
        let mut acc = 0u64;
        for &d in self.digits.iter().rev() {
            acc = acc * self.base + d;
        }
        acc
    }

    /// Digit at position j (zero beyond the stored length).
    pub fn digit(&self, j: usize) -> u64 {
        self.digits.get(j).copied().unwrap_or(0)
    }
}

/// Exact binomial coefficient via the Pascal recurrence.
pub fn binom_exact(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let mut row: Vec<BigUint> = vec![BigUint::from(1u32)];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(BigUint::from(1u32));
        for i in 1..row.len() {
            next.push(&row[i - 1] + &row[i]);
        }
        next.push(BigUint::from(1u32));
        row = next;
    }
    row[k as usize].clone()
}

/// C(n, k) mod p by the Pascal recurrence carried out mod p (exact).
pub fn binom_mod(n: u64, k: u64, p: u32) -> u32 {
    if k > n {
        return 0;
    }
    let n = n as usize;
    let k = k as usize;
    let mut row = vec![0u32; n + 1];
    row[0] = 1;
    for i in 1..=n {
        for j in (1..=i.min(k)).rev() {
            row[j] = (row[j] + row[j - 1]) % p;
        }
    }
    row[k]
}

/// C(n, i) mod p computed digit-wise: the product of the digit binomials of n
/// and i in base p.
pub fn lucas_binom(n: u64, i: u64, p: u32) -> u32 {
    let nd = DigitVector::new(n, p as u64);
    let id = DigitVector::new(i, p as u64);
    let len = nd.digits.len().max(id.digits.len());
    let mut acc = 1u64;
    for j in 0..len {
        let c = binom_mod(nd.digit(j), id.digit(j), p) as u64;
        acc = acc * c % p as u64;
        if acc == 0 {
            return 0;
        }
    }
    acc as u32
}

/// Whether p divides C(n, i), by the digit criterion: some base-p digit of n
/// is smaller than the corresponding digit of i.
pub fn digit_divisibility(n: u64, i: u64, p: u32) -> bool {
    let nd = DigitVector::new(n, p as u64);
    let id = DigitVector::new(i, p as u64);
    let len = nd.digits.len().max(id.digits.len());
    (0..len).any(|j| nd.digit(j) < id.digit(j))
}

fn check_profile(r_digits: &[u64], p: u32, f: usize) -> Result<u64> {
    if f == 0 || r_digits.len() != f {
        return Err(Error::InvalidParams(format!(
            "expected {f} digit entries, got {}",
            r_digits.len()
        )));
    }
    let q = (p as u64)
        .checked_pow(f as u32)
        .ok_or_else(|| Error::InvalidParams("q overflows".into()))?;
    let mut r = 0u64;
    for (j, &rj) in r_digits.iter().enumerate() {
        r = r
            .checked_add(
                rj.checked_mul((p as u64).pow(j as u32))
                    .ok_or_else(|| Error::InvalidParams("r overflows".into()))?,
            )
            .ok_or_else(|| Error::InvalidParams("r overflows".into()))?;
    }
    if r == 0 || !r.is_multiple_of(q - 1) {
        return Err(Error::Precondition(format!(
            "r = {r} must be positive and divisible by q - 1 = {}",
            q - 1
        )));
    }
    Ok(q)
}

/// Sum over tuples (k_0, ..., k_{f-1}) with 0 <= k_j <= r_j and
/// k = sum k_j p^j congruent to i mod q-1, of the product of C(r_j, k_j),
/// reduced mod p. Computed by literal tuple enumeration.
pub fn binom_sum(r_digits: &[u64], i: u64, p: u32, f: usize) -> Result<u32> {
    let q = check_profile(r_digits, p, f)?;
    assert!(i < q - 1, "i must lie in [0, q-1)");
    // per-slot binomial rows mod p
    let rows: Vec<Vec<u64>> = r_digits
        .iter()
        .map(|&rj| (0..=rj).map(|k| binom_mod(rj, k, p) as u64).collect())
        .collect();
    let m = q - 1;
    let mut k = vec![0u64; f];
    let mut acc = 0u64;
    loop {
        let kval: u64 = k
            .iter()
            .enumerate()
            .map(|(j, &kj)| kj * (p as u64).pow(j as u32))
            .sum();
        if kval % m == i % m {
            let mut prod = 1u64;
            for j in 0..f {
                prod = prod * rows[j][k[j] as usize] % p as u64;
            }
            acc = (acc + prod) % p as u64;
        }
        // odometer
        let mut j = 0;
        loop {
            if j == f {
                return Ok(acc as u32);
            }
            k[j] += 1;
            if k[j] <= r_digits[j] {
                break;
            }
            k[j] = 0;
            j += 1;
        }
    }
}

/// Independent second route: the coefficient of x^i in the product of
/// (1 + x^(p^j))^(r_j) inside F_p[x]/(x^(q-1) - 1).
pub fn binom_sum_ring_oracle(r_digits: &[u64], i: u64, p: u32, f: usize) -> Result<u32> {
    let q = check_profile(r_digits, p, f)?;
    let m = (q - 1) as usize;
    let mut poly = vec![0u64; m];
    poly[0] = 1;
    for (j, &rj) in r_digits.iter().enumerate() {
        let e = ((p as u64).pow(j as u32) % m as u64) as usize;
        for _ in 0..rj {
            // multiply by (1 + x^e) with exponents folded mod (q - 1)
            let mut next = vec![0u64; m];
            for (d, &c) in poly.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                next[d] = (next[d] + c) % p as u64;
                let d2 = (d + e) % m;
                next[d2] = (next[d2] + c) % p as u64;
            }
            poly = next;
        }
    }
    Ok(poly[(i as usize) % m] as u32)
}

/// The closed form the two sums must equal: 2 mod p at i = 0, (-1)^i mod p
/// for i in (0, q-1).
pub fn binom_sum_closed_form(i: u64, p: u32) -> u32 {
    if i == 0 {
        2 % p
    } else if i.is_multiple_of(2) {
        1
    } else {
        (p - 1) % p
    }
}
