//! Exact scalars and 2x2 matrices over the local field F, in two modes.
//!
//! Equal characteristic: F = F_q((w)) with w the uniformizer; scalars are
//! Laurent polynomials in w over F_q. The digit lifts are the constants,
//! which are exactly the multiplicative (Teichmuller) lifts here.
//!
//! Mixed characteristic: F = Q_p (f = 1 only); scalars are rational numbers
//! whose denominator is a power of p, and digit lifts are the integers
//! 0..p-1. Every group element this toolkit manipulates is a product of w,
//! alpha, beta, digit unipotents and central powers of the uniformizer, whose
//! determinants are units times uniformizer powers, so this ring is closed
//! under all the matrix inverses that occur; arithmetic is checked and
//! overflow-free within the supported envelope.
//!
//! There is no precision anywhere: all operations are exact.

use crate::gf::{Fq, Gf, Mat2};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldMode {
    EqualChar,
    MixedChar,
}

/// The ambient local field: a mode plus the residue field.
pub struct LocalField {
    pub mode: FieldMode,
    pub gf: Gf,
}

impl LocalField {
    pub fn new(mode: FieldMode, gf: Gf) -> Result<LocalField> {
        if mode == FieldMode::MixedChar && gf.f() != 1 {
            return Err(Error::Unsupported(
                "mixed characteristic supports f = 1 only".into(),
            ));
        }
        Ok(LocalField { mode, gf })
    }

    pub fn equal_char(p: u32, f: usize) -> Result<LocalField> {
        LocalField::new(FieldMode::EqualChar, Gf::lex_least(p, f)?)
    }

    pub fn qp(p: u32) -> Result<LocalField> {
        LocalField::new(FieldMode::MixedChar, Gf::lex_least(p, 1)?)
    }

    pub fn q(&self) -> u32 {
        self.gf.q()
    }

    /// The digit lift of a residue element.
    pub fn lift(&self, mu: Fq) -> LocalScalar {
        match self.mode {
            FieldMode::EqualChar => LocalScalar::laurent(0, vec![mu]),
            FieldMode::MixedChar => LocalScalar::Mx(PadicRat::from_int(mu.0 as i128)),
        }
    }

    /// All digit lifts, in residue index order.
    pub fn digit_set(&self) -> Vec<(Fq, LocalScalar)> {
        self.gf.elements().map(|mu| (mu, self.lift(mu))).collect()
    }

    pub fn zero(&self) -> LocalScalar {
        match self.mode {
            FieldMode::EqualChar => LocalScalar::Eq(Laurent::zero()),
            FieldMode::MixedChar => LocalScalar::Mx(PadicRat::from_int(0)),
        }
    }

    pub fn one(&self) -> LocalScalar {
        self.lift(Fq::ONE)
    }

    pub fn uniformizer(&self) -> LocalScalar {
        match self.mode {
            FieldMode::EqualChar => LocalScalar::laurent(1, vec![Fq::ONE]),
            FieldMode::MixedChar => LocalScalar::Mx(PadicRat::from_int(self.gf.p() as i128)),
        }
    }

    pub fn pi_pow(&self, k: i64) -> LocalScalar {
        match self.mode {
            FieldMode::EqualChar => LocalScalar::laurent(k, vec![Fq::ONE]),
            FieldMode::MixedChar => {
                if k >= 0 {
                    let n = (self.gf.p() as i128)
                        .checked_pow(k as u32)
                        .expect("uniformizer power overflow");
                    LocalScalar::Mx(PadicRat::from_int(n))
                } else {
                    LocalScalar::Mx(PadicRat::new(1, (-k) as u32, self.gf.p()))
                }
            }
        }
    }

    pub fn add(&self, a: &LocalScalar, b: &LocalScalar) -> LocalScalar {
        match (a, b) {
            (LocalScalar::Eq(x), LocalScalar::Eq(y)) => LocalScalar::Eq(x.add(&self.gf, y)),
            (LocalScalar::Mx(x), LocalScalar::Mx(y)) => LocalScalar::Mx(x.add(y, self.gf.p())),
            _ => panic!("mixed scalar modes"),
        }
    }

    pub fn neg(&self, a: &LocalScalar) -> LocalScalar {
        match a {
            LocalScalar::Eq(x) => LocalScalar::Eq(x.neg(&self.gf)),
            LocalScalar::Mx(x) => LocalScalar::Mx(x.neg()),
        }
    }

    pub fn sub(&self, a: &LocalScalar, b: &LocalScalar) -> LocalScalar {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &LocalScalar, b: &LocalScalar) -> LocalScalar {
        match (a, b) {
            (LocalScalar::Eq(x), LocalScalar::Eq(y)) => LocalScalar::Eq(x.mul(&self.gf, y)),
            (LocalScalar::Mx(x), LocalScalar::Mx(y)) => LocalScalar::Mx(x.mul(y, self.gf.p())),
            _ => panic!("mixed scalar modes"),
        }
    }

    /// Exact division by a monomial unit-times-uniformizer-power. Errors if
    /// the divisor is not of that shape.
    pub fn div_exact(&self, a: &LocalScalar, b: &LocalScalar) -> Result<LocalScalar> {
        match (a, b) {
            (LocalScalar::Eq(x), LocalScalar::Eq(y)) => {
                let (val, coeff) = y.monomial().ok_or_else(|| {
                    Error::Precondition("division by a non-monomial scalar".into())
                })?;
                let ci = self.gf.inv(coeff)?;
                let scaled = x.shift(-val).scale(&self.gf, ci);
                Ok(LocalScalar::Eq(scaled))
            }
            (LocalScalar::Mx(x), LocalScalar::Mx(y)) => {
                if y.num == 0 {
                    return Err(Error::ZeroInversion);
                }
                // divisor must be +-p^j / p^vpow
                let p = self.gf.p() as i128;
                let sign = if y.num < 0 { -1 } else { 1 };
                let mut m = y.num * sign;
                let mut j = 0u32;
                while m % p == 0 {
                    m /= p;
                    j += 1;
                }
                if m != 1 {
                    return Err(Error::Precondition(
                        "division by a non-monomial scalar".into(),
                    ));
                }
                // 1/(sign * p^(j - vpow)) = sign * p^(vpow - j)
                let inv = if y.vpow >= j {
                    PadicRat::raw(
                        sign * p.checked_pow(y.vpow - j).expect("overflow"),
                        0,
                        self.gf.p(),
                    )
                } else {
                    PadicRat::raw(sign, j - y.vpow, self.gf.p())
                };
                Ok(LocalScalar::Mx(x.mul(&inv, self.gf.p())))
            }
            _ => panic!("mixed scalar modes"),
        }
    }

    /// Valuation; None for zero.
    pub fn val(&self, a: &LocalScalar) -> Option<i64> {
        match a {
            LocalScalar::Eq(x) => x.val(),
            LocalScalar::Mx(x) => x.val(self.gf.p()),
        }
    }

    /// Image in the residue field; requires valuation >= 0.
    pub fn residue(&self, a: &LocalScalar) -> Result<Fq> {
        match a {
            LocalScalar::Eq(x) => {
                if let Some(v) = x.val() {
                    if v < 0 {
                        return Err(Error::NegativeValuation);
                    }
                }
                Ok(x.coeff(0))
            }
            LocalScalar::Mx(x) => {
                if x.vpow > 0 && x.num != 0 {
                    return Err(Error::NegativeValuation);
                }
                Ok(self.gf.from_i64((x.num % self.gf.p() as i128) as i64))
            }
        }
    }

    /// First n uniformizer digits of a/b, as residue field elements, where
    /// val(b) = 0 and val(a) >= 0. Exact: works with truncations only.
    pub fn unit_ratio_digits(&self, a: &LocalScalar, b: &LocalScalar, n: usize) -> Vec<Fq> {
        assert_eq!(self.val(b), Some(0), "divisor must be a unit");
        if n == 0 {
            return Vec::new();
        }
        match (a, b) {
            (LocalScalar::Eq(x), LocalScalar::Eq(y)) => {
                // series division c = x / y, coefficient by coefficient
                let gf = &self.gf;
                let b0i = gf.inv(y.coeff(0)).expect("unit");
                let mut c = Vec::with_capacity(n);
                for k in 0..n as i64 {
                    let mut acc = x.coeff(k);
                    for (j, cj) in c.iter().enumerate() {
                        acc = gf.sub(acc, gf.mul(*cj, y.coeff(k - j as i64)));
                    }
                    c.push(gf.mul(acc, b0i));
                }
                c
            }
            (LocalScalar::Mx(x), LocalScalar::Mx(y)) => {
                assert_eq!(x.vpow, 0, "numerator must be integral");
                assert_eq!(y.vpow, 0, "divisor must be integral");
                let p = self.gf.p() as i128;
                let pn = p.checked_pow(n as u32).expect("digit window overflow");
                let binv = mod_inverse(y.num.rem_euclid(pn), pn);
                let mut t = (x.num.rem_euclid(pn) * binv).rem_euclid(pn);
                let mut out = Vec::with_capacity(n);
                for _ in 0..n {
                    out.push(self.gf.from_i64((t % p) as i64));
                    t /= p;
                }
                out
            }
            _ => panic!("mixed scalar modes"),
        }
    }
}

/// Extended-Euclid inverse of a modulo m (gcd(a, m) = 1).
fn mod_inverse(a: i128, m: i128) -> i128 {
    let (mut r0, mut r1) = (m, a.rem_euclid(m));
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    assert_eq!(r0, 1, "not invertible");
    t0.rem_euclid(m)
}

/// A Laurent polynomial in the uniformizer with F_q coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Laurent {
    /// exponent of the first stored coefficient
    min: i64,
    /// coefficients for exponents min, min+1, ...; first and last nonzero
    coeffs: Vec<Fq>,
}

impl Laurent {
    pub fn zero() -> Laurent {
        Laurent {
            min: 0,
            coeffs: Vec::new(),
        }
    }

    fn normalized(min: i64, mut coeffs: Vec<Fq>) -> Laurent {
        let lead = coeffs.iter().position(|c| !c.is_zero());
        match lead {
            None => Laurent::zero(),
            Some(l) => {
                let trail = coeffs.iter().rposition(|c| !c.is_zero()).unwrap();
                coeffs.truncate(trail + 1);
                coeffs.drain(..l);
                Laurent {
                    min: min + l as i64,
                    coeffs,
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn val(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.min)
        }
    }

    pub fn coeff(&self, e: i64) -> Fq {
        if e < self.min {
            return Fq::ZERO;
        }
        self.coeffs
            .get((e - self.min) as usize)
            .copied()
            .unwrap_or(Fq::ZERO)
    }

    /// Some((val, lead)) when the polynomial is a single monomial.
    pub fn monomial(&self) -> Option<(i64, Fq)> {
        if self.coeffs.len() == 1 {
            Some((self.min, self.coeffs[0]))
        } else {
            None
        }
    }

    pub fn shift(&self, k: i64) -> Laurent {
        if self.is_zero() {
            return Laurent::zero();
        }
        Laurent {
            min: self.min + k,
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn scale(&self, gf: &Gf, c: Fq) -> Laurent {
        if c.is_zero() {
            return Laurent::zero();
        }
        Laurent {
            min: self.min,
            coeffs: self.coeffs.iter().map(|&x| gf.mul(c, x)).collect(),
        }
    }

    pub fn add(&self, gf: &Gf, o: &Laurent) -> Laurent {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let min = self.min.min(o.min);
        let max = (self.min + self.coeffs.len() as i64).max(o.min + o.coeffs.len() as i64);
        let mut coeffs = Vec::with_capacity((max - min) as usize);
        for e in min..max {
            coeffs.push(gf.add(self.coeff(e), o.coeff(e)));
        }
        Laurent::normalized(min, coeffs)
    }

    pub fn neg(&self, gf: &Gf) -> Laurent {
        Laurent {
            min: self.min,
            coeffs: self.coeffs.iter().map(|&x| gf.neg(x)).collect(),
        }
    }

    pub fn mul(&self, gf: &Gf, o: &Laurent) -> Laurent {
        if self.is_zero() || o.is_zero() {
            return Laurent::zero();
        }
        let mut coeffs = vec![Fq::ZERO; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in o.coeffs.iter().enumerate() {
                coeffs[i + j] = gf.add(coeffs[i + j], gf.mul(a, b));
            }
        }
        Laurent::normalized(self.min + o.min, coeffs)
    }
}

/// num / p^vpow, normalized so that p does not divide num unless vpow = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PadicRat {
    pub num: i128,
    pub vpow: u32,
}

impl PadicRat {
    pub fn from_int(n: i128) -> PadicRat {
        PadicRat { num: n, vpow: 0 }
    }

    fn raw(num: i128, vpow: u32, p: u32) -> PadicRat {
        PadicRat { num, vpow }.normalize(p)
    }

    pub fn new(num: i128, vpow: u32, p: u32) -> PadicRat {
        PadicRat::raw(num, vpow, p)
    }

    fn normalize(mut self, p: u32) -> PadicRat {
        if self.num == 0 {
            self.vpow = 0;
            return self;
        }
        let p = p as i128;
        while self.vpow > 0 && self.num % p == 0 {
            self.num /= p;
            self.vpow -= 1;
        }
        self
    }

    pub fn val(&self, p: u32) -> Option<i64> {
        if self.num == 0 {
            return None;
        }
        if self.vpow > 0 {
            // normalized: p does not divide num
            return Some(-(self.vpow as i64));
        }
        let p = p as i128;
        let mut v = 0i64;
        let mut n = self.num;
        while n % p == 0 {
            n /= p;
            v += 1;
        }
        Some(v)
    }

    pub fn add(&self, o: &PadicRat, p: u32) -> PadicRat {
        let pp = p as i128;
        let m = self.vpow.max(o.vpow);
        let a = self
            .num
            .checked_mul(pp.checked_pow(m - self.vpow).expect("overflow"))
            .expect("overflow");
        let b = o
            .num
            .checked_mul(pp.checked_pow(m - o.vpow).expect("overflow"))
            .expect("overflow");
        PadicRat::raw(a.checked_add(b).expect("overflow"), m, p)
    }

    pub fn neg(&self) -> PadicRat {
        PadicRat {
            num: -self.num,
            vpow: self.vpow,
        }
    }

    pub fn mul(&self, o: &PadicRat, p: u32) -> PadicRat {
        PadicRat::raw(
            self.num.checked_mul(o.num).expect("overflow"),
            self.vpow + o.vpow,
            p,
        )
    }
}

/// A scalar of the local field, in either mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LocalScalar {
    Eq(Laurent),
    Mx(PadicRat),
}

impl LocalScalar {
    pub fn laurent(min: i64, coeffs: Vec<Fq>) -> LocalScalar {
        LocalScalar::Eq(Laurent::normalized(min, coeffs))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            LocalScalar::Eq(x) => x.is_zero(),
            LocalScalar::Mx(x) => x.num == 0,
        }
    }
}

/// 2x2 invertible matrix over the local field, row-major [a, b, c, d].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalMat(pub [LocalScalar; 4]);

impl LocalMat {
    pub fn identity(lf: &LocalField) -> LocalMat {
        LocalMat([lf.one(), lf.zero(), lf.zero(), lf.one()])
    }

    /// w = antidiagonal ones.
    pub fn w(lf: &LocalField) -> LocalMat {
        LocalMat([lf.zero(), lf.one(), lf.one(), lf.zero()])
    }

    /// alpha = diag(1, uniformizer).
    pub fn alpha(lf: &LocalField) -> LocalMat {
        LocalMat([lf.one(), lf.zero(), lf.zero(), lf.uniformizer()])
    }

    /// beta = alpha * w.
    pub fn beta(lf: &LocalField) -> LocalMat {
        LocalMat([lf.zero(), lf.one(), lf.uniformizer(), lf.zero()])
    }

    /// Central uniformizer power.
    pub fn central_pi(lf: &LocalField, k: i64) -> LocalMat {
        LocalMat([lf.pi_pow(k), lf.zero(), lf.zero(), lf.pi_pow(k)])
    }

    /// Lower digit unipotent (1, 0; [mu], 1).
    pub fn unip_lower(lf: &LocalField, mu: Fq) -> LocalMat {
        LocalMat([lf.one(), lf.zero(), lf.lift(mu), lf.one()])
    }

    /// Upper digit unipotent (1, [mu]; 0, 1).
    pub fn unip_upper(lf: &LocalField, mu: Fq) -> LocalMat {
        LocalMat([lf.one(), lf.lift(mu), lf.zero(), lf.one()])
    }

    pub fn mul(&self, lf: &LocalField, o: &LocalMat) -> LocalMat {
        let [a, b, c, d] = &self.0;
        let [e, f, g, h] = &o.0;
        LocalMat([
            lf.add(&lf.mul(a, e), &lf.mul(b, g)),
            lf.add(&lf.mul(a, f), &lf.mul(b, h)),
            lf.add(&lf.mul(c, e), &lf.mul(d, g)),
            lf.add(&lf.mul(c, f), &lf.mul(d, h)),
        ])
    }

    pub fn det(&self, lf: &LocalField) -> LocalScalar {
        let [a, b, c, d] = &self.0;
        lf.sub(&lf.mul(a, d), &lf.mul(b, c))
    }

    pub fn inv(&self, lf: &LocalField) -> Result<LocalMat> {
        let det = self.det(lf);
        if det.is_zero() {
            return Err(Error::SingularMatrix);
        }
        let [a, b, c, d] = &self.0;
        Ok(LocalMat([
            lf.div_exact(d, &det)?,
            lf.div_exact(&lf.neg(b), &det)?,
            lf.div_exact(&lf.neg(c), &det)?,
            lf.div_exact(a, &det)?,
        ]))
    }

    /// Multiply all entries by uniformizer^k (k may be negative).
    pub fn scale_pi(&self, lf: &LocalField, k: i64) -> LocalMat {
        let s = lf.pi_pow(k);
        LocalMat([
            lf.mul(&self.0[0], &s),
            lf.mul(&self.0[1], &s),
            lf.mul(&self.0[2], &s),
            lf.mul(&self.0[3], &s),
        ])
    }

    /// Minimal valuation over the entries (the matrix is invertible, so this
    /// is finite).
    pub fn min_val(&self, lf: &LocalField) -> i64 {
        self.0
            .iter()
            .filter_map(|e| lf.val(e))
            .min()
            .expect("nonzero matrix")
    }

    /// Residue matrix; requires all entries integral.
    pub fn residue(&self, lf: &LocalField) -> Result<Mat2> {
        Ok(Mat2([
            lf.residue(&self.0[0])?,
            lf.residue(&self.0[1])?,
            lf.residue(&self.0[2])?,
            lf.residue(&self.0[3])?,
        ]))
    }

    /// Membership of g in KZ: after stripping the central uniformizer power
    /// that makes the entries integral with a unit among them, the
    /// determinant must be a unit.
    pub fn in_kz(&self, lf: &LocalField) -> bool {
        let s = self.min_val(lf);
        let h = self.scale_pi(lf, -s);
        lf.val(&h.det(lf)) == Some(0)
    }

    /// Membership in IZ: in KZ with lower-left entry zero mod the
    /// uniformizer after the same normalization.
    pub fn in_iz(&self, lf: &LocalField) -> bool {
        let s = self.min_val(lf);
        let h = self.scale_pi(lf, -s);
        lf.val(&h.det(lf)) == Some(0) && lf.val(&h.0[2]).is_none_or(|v| v >= 1)
    }
}
