//! Arithmetic in F_q = F_{p^f}.
//!
//! Elements are stored as a packed index `c_0 + c_1 p + ... + c_{f-1} p^{f-1}`
//! of their coefficients in the polynomial basis of F_p[x]/(modulus). All
//! operations go through a [`Gf`] handle which owns the modulus and, for small
//! q, lookup tables. The supported envelope is q <= 2^16.

use crate::{Error, Result};

/// Largest q for which full q-by-q add/mul tables are precomputed.
const TABLE_LIMIT: u64 = 1024;

/// Field construction data: characteristic, degree, and a monic irreducible
/// modulus of degree f over F_p.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldParams {
    pub p: u32,
    pub f: usize,
    /// Coefficients `modulus[i]` of x^i, length f+1, leading coefficient 1.
    pub modulus: Vec<u32>,
}

fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= p as u64 {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Remainder of polynomial division over F_p (dense coefficient vectors).
fn poly_rem(mut a: Vec<u32>, b: &[u32], p: u32) -> Vec<u32> {
    let db = b.len() - 1;
    let lead_inv = mod_inv(b[db], p);
    while a.len() > db {
        let da = a.len() - 1;
        let c = (a[da] as u64 * lead_inv as u64 % p as u64) as u32;
        if c != 0 {
            for i in 0..=db {
                let sub = c as u64 * b[i] as u64 % p as u64;
                let cur = a[da - db + i] as u64;
                a[da - db + i] = ((cur + p as u64 - sub) % p as u64) as u32;
            }
        }
        a.pop();
    }
    a
}

fn mod_inv(a: u32, p: u32) -> u32 {
    // p is prime and a != 0 mod p
    mod_pow(a % p, (p - 2) as u64, p)
}

fn mod_pow(a: u32, mut e: u64, p: u32) -> u32 {
    let mut r = 1u64;
    let mut b = a as u64 % p as u64;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p as u64;
        }
        b = b * b % p as u64;
        e >>= 1;
    }
    r as u32
}

impl FieldParams {
    pub fn new(p: u32, f: usize, modulus: Vec<u32>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidParams(format!("p = {p} is not prime")));
        }
        if f == 0 {
            return Err(Error::InvalidParams("f must be positive".into()));
        }
        let q = (p as u64).checked_pow(f as u32);
        match q {
            Some(q) if q <= 1 << 16 => {}
            _ => {
                return Err(Error::InvalidParams(format!(
                    "q = {p}^{f} exceeds the supported envelope (q <= 2^16)"
                )))
            }
        }
        if modulus.len() != f + 1 || modulus[f] != 1 {
            return Err(Error::InvalidParams(
                "modulus must be monic of degree f".into(),
            ));
        }
        if modulus.iter().any(|&c| c >= p) {
            return Err(Error::InvalidParams(
                "modulus coefficients must lie in [0, p)".into(),
            ));
        }
        if !Self::irreducible(&modulus, p) {
            return Err(Error::InvalidParams("modulus is reducible over F_p".into()));
        }
        Ok(FieldParams { p, f, modulus })
    }

    /// The lexicographically-least monic irreducible polynomial of degree f,
    /// ordering candidates by their packed low-coefficient value.
    pub fn lex_least(p: u32, f: usize) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidParams(format!("p = {p} is not prime")));
        }
        if f == 0 {
            return Err(Error::InvalidParams("f must be positive".into()));
        }
        let q = (p as u64)
            .checked_pow(f as u32)
            .filter(|&q| q <= 1 << 16)
            .ok_or_else(|| {
                Error::InvalidParams(format!(
                    "q = {p}^{f} exceeds the supported envelope (q <= 2^16)"
                ))
            })?;
        for packed in 0..q {
            let mut m = Vec::with_capacity(f + 1);
            let mut v = packed;
            for _ in 0..f {
                m.push((v % p as u64) as u32);
                v /= p as u64;
            }
            m.push(1);
            if Self::irreducible(&m, p) {
                return Ok(FieldParams { p, f, modulus: m });
            }
        }
        unreachable!("an irreducible polynomial of every degree exists")
    }

    /// Trial division by every monic polynomial of degree `1..=f/2`.
    fn irreducible(modulus: &[u32], p: u32) -> bool {
        let f = modulus.len() - 1;
        if f == 1 {
            return true;
        }
        for d in 1..=f / 2 {
            let count = (p as u64).pow(d as u32);
            for packed in 0..count {
                let mut g = Vec::with_capacity(d + 1);
                let mut v = packed;
                for _ in 0..d {
                    g.push((v % p as u64) as u32);
                    v /= p as u64;
                }
                g.push(1);
                let r = poly_rem(modulus.to_vec(), &g, p);
                if r.iter().all(|&c| c == 0) {
                    return false;
                }
            }
        }
        true
    }
}

/// An element of F_q, stored as the packed index of its coefficient vector.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Fq(pub u32);

impl Fq {
    pub const ZERO: Fq = Fq(0);
    pub const ONE: Fq = Fq(1);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// Handle for F_q arithmetic. Elements are plain `Fq` indices; every operation
/// is a method here. Immutable after construction, safe to share across
/// threads.
pub struct Gf {
    params: FieldParams,
    q: u32,
    /// x^d mod modulus as digit vectors, for d = f .. 2f-2.
    xpow: Vec<Vec<u32>>,
    add_table: Option<Vec<u32>>,
    mul_table: Option<Vec<u32>>,
    neg_table: Vec<u32>,
    inv_table: Vec<u32>,
    /// frob[j][a] = a^(p^j) for 0 <= j < f.
    frob: Vec<Vec<u32>>,
}

impl Gf {
    pub fn new(params: FieldParams) -> Result<Gf> {
        let p = params.p as u64;
        let f = params.f;
        let q = p.pow(f as u32);
        let mut xpow = Vec::new();
        // x^f = -(modulus - x^f), then multiply up by x with reduction.
        let mut cur: Vec<u32> = (0..f)
            .map(|i| (params.p - params.modulus[i]) % params.p)
            .collect();
        for _ in f..=(2 * f).saturating_sub(2) {
            xpow.push(cur.clone());
            // multiply by x: shift and reduce the spilled top coefficient
            let top = cur[f - 1];
            for i in (1..f).rev() {
                cur[i] = cur[i - 1];
            }
            cur[0] = 0;
            if top != 0 {
                let x_f = &xpow[0];
                for i in 0..f {
                    cur[i] = ((cur[i] as u64 + top as u64 * x_f[i] as u64) % p) as u32;
                }
            }
        }
        let mut gf = Gf {
            params,
            q: q as u32,
            xpow,
            add_table: None,
            mul_table: None,
            neg_table: Vec::new(),
            inv_table: Vec::new(),
            frob: Vec::new(),
        };
        gf.neg_table = (0..gf.q).map(|a| gf.neg_raw(a)).collect();
        if q <= TABLE_LIMIT {
            let mut add = vec![0u32; (q * q) as usize];
            let mut mul = vec![0u32; (q * q) as usize];
            for a in 0..gf.q {
                for b in 0..gf.q {
                    add[(a as u64 * q + b as u64) as usize] = gf.add_raw(a, b);
                    mul[(a as u64 * q + b as u64) as usize] = gf.mul_raw(a, b);
                }
            }
            gf.add_table = Some(add);
            gf.mul_table = Some(mul);
        }
        let mut inv = vec![0u32; gf.q as usize];
        for a in 1..gf.q {
            inv[a as usize] = gf.pow(Fq(a), q - 2).0;
        }
        gf.inv_table = inv;
        let mut frob = Vec::with_capacity(f);
        for j in 0..f {
            let e = p.pow(j as u32);
            frob.push((0..gf.q).map(|a| gf.pow(Fq(a), e).0).collect());
        }
        gf.frob = frob;
        Ok(gf)
    }

    /// Field with the lexicographically-least modulus for (p, f).
    pub fn lex_least(p: u32, f: usize) -> Result<Gf> {
        Gf::new(FieldParams::lex_least(p, f)?)
    }

    pub fn params(&self) -> &FieldParams {
        &self.params
    }
    pub fn p(&self) -> u32 {
        self.params.p
    }
    pub fn f(&self) -> usize {
        self.params.f
    }
    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn from_digits(&self, digits: &[u32]) -> Fq {
        assert!(digits.len() <= self.params.f, "too many digits");
        let mut v = 0u64;
        for (i, &d) in digits.iter().enumerate() {
            assert!(d < self.params.p, "digit out of range");
            v += d as u64 * (self.params.p as u64).pow(i as u32);
        }
        Fq(v as u32)
    }

    pub fn digits(&self, a: Fq) -> Vec<u32> {
        let mut v = a.0;
        let mut out = Vec::with_capacity(self.params.f);
        for _ in 0..self.params.f {
            out.push(v % self.params.p);
            v /= self.params.p;
        }
        out
    }

    /// Image of the integer n in the prime subfield.
    pub fn from_u64(&self, n: u64) -> Fq {
        Fq((n % self.params.p as u64) as u32)
    }

    pub fn from_i64(&self, n: i64) -> Fq {
        let p = self.params.p as i64;
        Fq(n.rem_euclid(p) as u32)
    }

    fn add_raw(&self, a: u32, b: u32) -> u32 {
        let p = self.params.p;
        let mut out = 0u64;
        let mut scale = 1u64;
        let (mut va, mut vb) = (a, b);
        for _ in 0..self.params.f {
            let d = (va % p + vb % p) % p;
            out += d as u64 * scale;
            scale *= p as u64;
            va /= p;
            vb /= p;
        }
        out as u32
    }

    fn neg_raw(&self, a: u32) -> u32 {
        let p = self.params.p;
        let mut out = 0u64;
        let mut scale = 1u64;
        let mut va = a;
        for _ in 0..self.params.f {
            let d = (p - va % p) % p;
            out += d as u64 * scale;
            scale *= p as u64;
            va /= p;
        }
        out as u32
    }

    fn mul_raw(&self, a: u32, b: u32) -> u32 {
        let p = self.params.p as u64;
        let f = self.params.f;
        let da: Vec<u64> = {
            let mut v = a as u64;
            (0..f)
                .map(|_| {
                    let d = v % p;
                    v /= p;
                    d
                })
                .collect()
        };
        let db: Vec<u64> = {
            let mut v = b as u64;
            (0..f)
                .map(|_| {
                    let d = v % p;
                    v /= p;
                    d
                })
                .collect()
        };
        let mut prod = vec![0u64; 2 * f - 1];
        for i in 0..f {
            if da[i] == 0 {
                continue;
            }
            for j in 0..f {
                prod[i + j] = (prod[i + j] + da[i] * db[j]) % p;
            }
        }
        // fold degrees >= f back using x^d mod modulus
        let mut red = vec![0u64; f];
        red[..f].copy_from_slice(&prod[..f]);
        for (tab, &c) in self.xpow.iter().zip(&prod[f..]) {
            if c == 0 {
                continue;
            }
            for i in 0..f {
                red[i] = (red[i] + c * tab[i] as u64) % p;
            }
        }
        let mut out = 0u64;
        let mut scale = 1u64;
        for item in red.iter().take(f) {
            out += item * scale;
            scale *= p;
        }
        out as u32
    }

    #[inline]
    pub fn add(&self, a: Fq, b: Fq) -> Fq {
        match &self.add_table {
            Some(t) => Fq(t[(a.0 as u64 * self.q as u64 + b.0 as u64) as usize]),
            None => Fq(self.add_raw(a.0, b.0)),
        }
    }

    #[inline]
    pub fn neg(&self, a: Fq) -> Fq {
        Fq(self.neg_table[a.0 as usize])
    }

    #[inline]
    pub fn sub(&self, a: Fq, b: Fq) -> Fq {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Fq, b: Fq) -> Fq {
        match &self.mul_table {
            Some(t) => Fq(t[(a.0 as u64 * self.q as u64 + b.0 as u64) as usize]),
            None => Fq(self.mul_raw(a.0, b.0)),
        }
    }

    pub fn inv(&self, a: Fq) -> Result<Fq> {
        if a.is_zero() {
            return Err(Error::ZeroInversion);
        }
        Ok(Fq(self.inv_table[a.0 as usize]))
    }

    pub fn pow(&self, a: Fq, mut e: u64) -> Fq {
        let mut r = Fq::ONE;
        let mut b = a;
        while e > 0 {
            if e & 1 == 1 {
                r = Fq(self.mul_raw(r.0, b.0));
            }
            b = Fq(self.mul_raw(b.0, b.0));
            e >>= 1;
        }
        r
    }

    /// a^(p^j), j taken mod f.
    pub fn frobenius(&self, a: Fq, j: i64) -> Fq {
        let f = self.params.f as i64;
        let j = j.rem_euclid(f) as usize;
        Fq(self.frob[j][a.0 as usize])
    }

    /// Sum of mu^l over all mu in F_q, by literal summation. Equals -1 when
    /// (q-1) | l and l >= 1, zero otherwise (including l = 0, where the sum
    /// is q copies of 1).
    pub fn power_sum(&self, l: u64) -> Fq {
        let mut acc = Fq::ZERO;
        for a in self.elements() {
            acc = self.add(acc, self.pow(a, l));
        }
        if l >= 1 {
            let expected = if l.is_multiple_of(self.q as u64 - 1) {
                self.neg(Fq::ONE)
            } else {
                Fq::ZERO
            };
            debug_assert_eq!(acc, expected, "power sum disagrees with closed form");
        }
        acc
    }

    pub fn elements(&self) -> impl Iterator<Item = Fq> {
        (0..self.q).map(Fq)
    }

    pub fn units(&self) -> impl Iterator<Item = Fq> {
        (1..self.q).map(Fq)
    }
}

/// 2x2 matrix over F_q, row-major [a, b, c, d].
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug)]
pub struct Mat2(pub [Fq; 4]);

impl Mat2 {
    pub fn identity() -> Mat2 {
        Mat2([Fq::ONE, Fq::ZERO, Fq::ZERO, Fq::ONE])
    }

    pub fn w() -> Mat2 {
        Mat2([Fq::ZERO, Fq::ONE, Fq::ONE, Fq::ZERO])
    }

    pub fn mul(&self, gf: &Gf, o: &Mat2) -> Mat2 {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = o.0;
        Mat2([
            gf.add(gf.mul(a, e), gf.mul(b, g)),
            gf.add(gf.mul(a, f), gf.mul(b, h)),
            gf.add(gf.mul(c, e), gf.mul(d, g)),
            gf.add(gf.mul(c, f), gf.mul(d, h)),
        ])
    }

    pub fn det(&self, gf: &Gf) -> Fq {
        let [a, b, c, d] = self.0;
        gf.sub(gf.mul(a, d), gf.mul(b, c))
    }

    pub fn inv(&self, gf: &Gf) -> Result<Mat2> {
        let det = self.det(gf);
        let di = gf.inv(det).map_err(|_| Error::SingularMatrix)?;
        let [a, b, c, d] = self.0;
        Ok(Mat2([
            gf.mul(d, di),
            gf.mul(gf.neg(b), di),
            gf.mul(gf.neg(c), di),
            gf.mul(a, di),
        ]))
    }
}

/// Every invertible 2x2 matrix over F_q, in lexicographic entry order.
pub fn gl2_elements(gf: &Gf) -> Vec<Mat2> {
    let mut out = Vec::new();
    for a in gf.elements() {
        for b in gf.elements() {
            for c in gf.elements() {
                for d in gf.elements() {
                    let m = Mat2([a, b, c, d]);
                    if !m.det(gf).is_zero() {
                        out.push(m);
                    }
                }
            }
        }
    }
    out
}
