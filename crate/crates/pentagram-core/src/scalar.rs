//! Exact field arithmetic: arbitrary-precision rationals and univariate
//! rational functions in a deformation parameter `t`.
//!
//! The rational-function field realizes limits `t -> 0` exactly: a family of
//! geometric data parametrized by `t` is computed symbolically and then
//! evaluated at zero, with poles detected by the valuation.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

/// Exact rational number in canonical form (reduced, positive denominator).
pub type Rational = num_rational::BigRational;

/// Errors arising from scalar arithmetic and parsing.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScalarError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("valuation of zero is undefined")]
    ZeroValuation,
    #[error("pole at 0")]
    PoleAtZero,
    #[error("parse error: {0}")]
    Parse(String),
}

/// Convenience constructor for small rationals.
pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"p/q"` or `"p"` into a canonical rational.
pub fn parse_rational(s: &str) -> Result<Rational, ScalarError> {
    Rational::from_str(s.trim()).map_err(|e| ScalarError::Parse(format!("{s:?}: {e}")))
}

/// Formats a rational as `"p/q"`, or `"p"` when the denominator is 1.
pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

/// Dense univariate polynomial over the integers, in the variable `t`.
///
/// Trailing zero coefficients are trimmed, so the zero polynomial is the
/// empty coefficient vector and `degree` is the vector length minus one.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Poly {
    coeffs: Vec<BigInt>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: vec![] }
    }

    pub fn one() -> Self {
        Poly::constant(BigInt::one())
    }

    /// The monomial `t`.
    pub fn t() -> Self {
        Poly::from_coeffs(vec![BigInt::zero(), BigInt::one()])
    }

    pub fn constant(c: BigInt) -> Self {
        Poly::from_coeffs(vec![c])
    }

    /// Builds a polynomial from coefficients `c0, c1, ...` (lowest degree first).
    pub fn from_coeffs(coeffs: Vec<BigInt>) -> Self {
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Poly::from_coeffs(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    fn trim(&mut self) {
        while self.coeffs.last().map_or(false, |c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Order of vanishing at `t = 0`, or `None` for the zero polynomial.
    pub fn ord(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn coeff(&self, k: usize) -> BigInt {
        self.coeffs.get(k).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn leading(&self) -> Option<&BigInt> {
        self.coeffs.last()
    }

    /// Positive gcd of all coefficients (zero for the zero polynomial).
    pub fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in &self.coeffs {
            g = g.gcd(c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    /// Divides out the content; the zero polynomial maps to itself.
    pub fn primitive_part(&self) -> Poly {
        let c = self.content();
        if c.is_zero() || c.is_one() {
            return self.clone();
        }
        Poly {
            coeffs: self.coeffs.iter().map(|x| x / &c).collect(),
        }
    }

    /// Negates if the leading coefficient is negative.
    pub fn sign_normalized(&self) -> Poly {
        match self.leading() {
            Some(l) if l.is_negative() => -self.clone(),
            _ => self.clone(),
        }
    }

    pub fn mul_int(&self, c: &BigInt) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    /// Multiplies by `t^k`.
    pub fn shift(&self, k: usize) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![BigInt::zero(); k];
        coeffs.extend_from_slice(&self.coeffs);
        Poly { coeffs }
    }

    pub fn eval_rational(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + Rational::from_integer(c.clone());
        }
        acc
    }

    /// Value at `t = 0`.
    pub fn eval_zero(&self) -> BigInt {
        self.coeff(0)
    }

    /// Pseudo-remainder of `self` by `d` (defined up to an integer factor).
    fn pseudo_rem(&self, d: &Poly) -> Poly {
        let dd = d.degree().expect("pseudo_rem by zero");
        let ld = d.leading().unwrap().clone();
        let mut r = self.clone();
        while let Some(dr) = r.degree() {
            if dr < dd {
                break;
            }
            let lr = r.leading().unwrap().clone();
            r = r.mul_int(&ld) - d.shift(dr - dd).mul_int(&lr);
        }
        r
    }

    /// Exact division; `None` if `d` does not divide `self` over the integers.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        let dd = d.degree().unwrap();
        let ld = d.leading().unwrap();
        let mut r = self.clone();
        let dr = r.degree().unwrap();
        if dr < dd {
            return None;
        }
        let mut q = vec![BigInt::zero(); dr - dd + 1];
        while let Some(deg) = r.degree() {
            if deg < dd {
                return None;
            }
            let lr = r.leading().unwrap();
            let (quot, rem) = lr.div_rem(ld);
            if !rem.is_zero() {
                return None;
            }
            q[deg - dd] = quot.clone();
            r = r - d.shift(deg - dd).mul_int(&quot);
        }
        Some(Poly::from_coeffs(q))
    }

    /// Polynomial gcd over the integers (content included), with positive
    /// leading coefficient.  Computed by the small-prime modular method with
    /// CRT lifting, falling back to a primitive pseudo-remainder sequence in
    /// the unlikely event that every sampled prime is unlucky.
    pub fn gcd(a: &Poly, b: &Poly) -> Poly {
        if a.is_zero() {
            return b.sign_normalized();
        }
        if b.is_zero() {
            return a.sign_normalized();
        }
        let c = a.content().gcd(&b.content());
        let p = a.primitive_part();
        let q = b.primitive_part();
        let g = if p.degree() == Some(0) || q.degree() == Some(0) {
            Poly::one()
        } else {
            modular_gcd(&p, &q).unwrap_or_else(|| prs_gcd(&p, &q))
        };
        g.sign_normalized().mul_int(&c)
    }

    /// Parses `"c0 + c1*t + c2*t^2"` style text (also accepts `-` separators,
    /// bare `t`, and omitted coefficients).
    pub fn parse(s: &str) -> Result<Poly, ScalarError> {
        let err = |m: &str| ScalarError::Parse(format!("{s:?}: {m}"));
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(err("empty polynomial"));
        }
        // Split into signed terms at top-level + and -.
        let mut terms: Vec<(bool, String)> = vec![];
        let mut cur = String::new();
        let mut neg = false;
        let mut chars = compact.chars().peekable();
        // Leading sign.
        if let Some(&c) = chars.peek() {
            if c == '+' || c == '-' {
                neg = c == '-';
                chars.next();
            }
        }
        let mut prev: Option<char> = None;
        for c in chars {
            if (c == '+' || c == '-') && prev != Some('^') {
                terms.push((neg, std::mem::take(&mut cur)));
                neg = c == '-';
            } else {
                cur.push(c);
            }
            prev = Some(c);
        }
        terms.push((neg, cur));
        let mut coeffs: Vec<BigInt> = vec![];
        for (negated, term) in terms {
            if term.is_empty() {
                return Err(err("empty term"));
            }
            let (coeff_str, var_str) = match term.find('t') {
                Some(pos) => (&term[..pos], &term[pos..]),
                None => (&term[..], ""),
            };
            let coeff_str = coeff_str.strip_suffix('*').unwrap_or(coeff_str);
            let mut coeff = if coeff_str.is_empty() {
                if var_str.is_empty() {
                    return Err(err("term with neither coefficient nor variable"));
                }
                BigInt::one()
            } else {
                BigInt::from_str(coeff_str).map_err(|e| err(&e.to_string()))?
            };
            let exp: usize = if var_str.is_empty() {
                0
            } else if var_str == "t" {
                1
            } else if let Some(e) = var_str.strip_prefix("t^") {
                e.parse().map_err(|_| err("bad exponent"))?
            } else {
                return Err(err("bad variable part"));
            };
            if negated {
                coeff = -coeff;
            }
            if coeffs.len() <= exp {
                coeffs.resize(exp + 1, BigInt::zero());
            }
            coeffs[exp] += coeff;
        }
        Ok(Poly::from_coeffs(coeffs))
    }
}

// ---------------------------------------------------------------------------
// Modular polynomial gcd.
//
// A primitive pseudo-remainder sequence suffers severe coefficient growth on
// the inputs this library produces (moderate degree, coefficients of a few
// thousand bits).  The classical small-prime method avoids it: compute the
// monic gcd modulo several word-size primes, lift the coefficients by the
// Chinese remainder theorem, and accept the candidate once it stabilizes and
// exactly divides both inputs.
// ---------------------------------------------------------------------------

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn sub_mod(a: u64, b: u64, p: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + (p - b)
    }
}

fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

/// Deterministic Miller-Rabin primality test for `u64`.
fn is_prime_u64(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &q in &BASES {
        if n % q == 0 {
            return n == q;
        }
    }
    if n < 2 {
        return false;
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Odd candidates walked downward from `2^62` until a prime is found.
struct PrimeIter {
    next: u64,
}

impl PrimeIter {
    fn new() -> PrimeIter {
        PrimeIter {
            next: (1u64 << 62) - 1,
        }
    }
}

impl Iterator for PrimeIter {
    type Item = u64;
    fn next(&mut self) -> Option<u64> {
        loop {
            let cand = self.next;
            self.next -= 2;
            if is_prime_u64(cand) {
                return Some(cand);
            }
        }
    }
}

/// Coefficients of `a` reduced modulo `p` (little-endian, trimmed).
fn reduce_mod_p(a: &Poly, p: u64) -> Vec<u64> {
    let bigp = BigInt::from(p);
    let mut out: Vec<u64> = a
        .coeffs
        .iter()
        .map(|c| {
            let r = c.mod_floor(&bigp);
            u64::try_from(&r).expect("residue fits in u64")
        })
        .collect();
    while out.last() == Some(&0) {
        out.pop();
    }
    out
}

/// Replaces `a` with `a mod b` over `Z/p` (synthetic division).
fn rem_mod_p(a: &mut Vec<u64>, b: &[u64], p: u64) {
    let db = b.len() - 1;
    let inv_lead = inv_mod(b[db], p);
    while a.len() > db {
        let da = a.len() - 1;
        let factor = mul_mod(a[da], inv_lead, p);
        if factor != 0 {
            let shift = da - db;
            for (i, &bc) in b.iter().enumerate().take(db) {
                a[shift + i] = sub_mod(a[shift + i], mul_mod(factor, bc, p), p);
            }
        }
        a.pop();
        while a.last() == Some(&0) {
            a.pop();
        }
    }
}

/// Monic gcd of two nonzero polynomials over `Z/p`.
fn gcd_mod_p(mut a: Vec<u64>, mut b: Vec<u64>, p: u64) -> Vec<u64> {
    while !b.is_empty() {
        rem_mod_p(&mut a, &b, p);
        std::mem::swap(&mut a, &mut b);
    }
    let inv = inv_mod(*a.last().expect("gcd of nonzero inputs is nonzero"), p);
    for c in &mut a {
        *c = mul_mod(*c, inv, p);
    }
    a
}

/// Modular gcd of two primitive polynomials of positive degree; `None` when
/// the prime budget runs out without a verified answer.
fn modular_gcd(a: &Poly, b: &Poly) -> Option<Poly> {
    // Leading coefficient imposed on every modular image so that the lifted
    // coefficients agree across primes.
    let lc = a.leading().unwrap().gcd(b.leading().unwrap());
    let mut modulus = BigInt::zero();
    let mut lifted: Vec<BigInt> = vec![];
    let mut stable = false;
    for p in PrimeIter::new().take(512) {
        let bigp = BigInt::from(p);
        if (a.leading().unwrap() % &bigp).is_zero() || (b.leading().unwrap() % &bigp).is_zero() {
            continue;
        }
        let gp = gcd_mod_p(reduce_mod_p(a, p), reduce_mod_p(b, p), p);
        if gp.len() == 1 {
            // Coprime modulo one good prime means coprime over the integers.
            return Some(Poly::one());
        }
        let lc_p = u64::try_from(&lc.mod_floor(&bigp)).expect("residue fits in u64");
        let scaled: Vec<u64> = gp.iter().map(|&c| mul_mod(c, lc_p, p)).collect();
        if modulus.is_zero() || gp.len() - 1 < lifted.len() - 1 {
            // First usable prime, or a smaller degree exposing earlier
            // primes as unlucky: restart the lift.
            modulus = bigp;
            let half: BigInt = &modulus / 2;
            lifted = scaled
                .iter()
                .map(|&c| {
                    let c = BigInt::from(c);
                    if c > half {
                        c - &modulus
                    } else {
                        c
                    }
                })
                .collect();
            stable = false;
            continue;
        }
        if gp.len() - 1 > lifted.len() - 1 {
            continue; // Unlucky prime.
        }
        // Combine coefficientwise into the symmetric range mod `modulus * p`.
        let m_mod_p = u64::try_from(&modulus.mod_floor(&bigp)).expect("residue fits in u64");
        let m_inv = inv_mod(m_mod_p, p);
        let new_modulus = &modulus * &bigp;
        let half: BigInt = &new_modulus / 2;
        let mut changed = false;
        for (cur, &r) in lifted.iter_mut().zip(scaled.iter()) {
            let cur_mod_p = u64::try_from(&cur.mod_floor(&bigp)).expect("residue fits in u64");
            let delta = mul_mod(sub_mod(r, cur_mod_p, p), m_inv, p);
            let mut next = &*cur + &modulus * BigInt::from(delta);
            if next > half {
                next -= &new_modulus;
            }
            if next != *cur {
                *cur = next;
                changed = true;
            }
        }
        modulus = new_modulus;
        if changed {
            stable = false;
            continue;
        }
        if stable {
            continue; // Already verified unchanged once; keep accumulating.
        }
        let candidate = Poly::from_coeffs(lifted.clone()).primitive_part();
        if a.div_exact(&candidate).is_some() && b.div_exact(&candidate).is_some() {
            return Some(candidate);
        }
        stable = true;
    }
    None
}

/// Primitive pseudo-remainder gcd of two primitive polynomials.
fn prs_gcd(a: &Poly, b: &Poly) -> Poly {
    let mut p = a.clone();
    let mut q = b.clone();
    while !q.is_zero() {
        let r = p.pseudo_rem(&q).primitive_part();
        p = q;
        q = r;
    }
    p
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            match (k, mag.is_one()) {
                (0, _) => write!(f, "{mag}")?,
                (1, true) => write!(f, "t")?,
                (1, false) => write!(f, "{mag}*t")?,
                (_, true) => write!(f, "t^{k}")?,
                (_, false) => write!(f, "{mag}*t^{k}")?,
            }
        }
        Ok(())
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(self, rhs: Poly) -> Poly {
        let (mut long, short) = if self.coeffs.len() >= rhs.coeffs.len() {
            (self, rhs)
        } else {
            (rhs, self)
        };
        for (i, c) in short.coeffs.into_iter().enumerate() {
            long.coeffs[i] += c;
        }
        long.trim();
        long
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, rhs: Poly) -> Poly {
        self + (-rhs)
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(mut self) -> Poly {
        for c in &mut self.coeffs {
            *c = -std::mem::take(c);
        }
        self
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        &self * &rhs
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Poly::from_coeffs(coeffs)
    }
}

/// Rational function in `t` in canonical form: numerator and denominator are
/// coprime integer polynomials (common content removed) and the denominator
/// has positive leading coefficient.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RatFunc {
    num: Poly,
    den: Poly,
}

impl RatFunc {
    /// Canonicalizing constructor; rejects a zero denominator.
    pub fn new(num: Poly, den: Poly) -> Result<RatFunc, ScalarError> {
        if den.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(RatFunc::reduced(num, den))
    }

    /// Internal constructor: canonicalizes, assuming `den != 0`.
    fn reduced(num: Poly, den: Poly) -> RatFunc {
        if num.is_zero() {
            return RatFunc {
                num: Poly::zero(),
                den: Poly::one(),
            };
        }
        // Exact division first: the common case in geometric pipelines.
        if let Some(q) = num.div_exact(&den) {
            let (num, den) = (q, Poly::one());
            return RatFunc { num, den };
        }
        let g = Poly::gcd(&num, &den);
        let mut num = num.div_exact(&g).expect("gcd divides numerator");
        let mut den = den.div_exact(&g).expect("gcd divides denominator");
        if den.leading().map_or(false, |l| l.is_negative()) {
            num = -num;
            den = -den;
        }
        RatFunc { num, den }
    }

    pub fn from_poly(p: Poly) -> RatFunc {
        RatFunc {
            num: p,
            den: Poly::one(),
        }
    }

    /// The deformation parameter `t`.
    pub fn t() -> RatFunc {
        RatFunc::from_poly(Poly::t())
    }

    pub fn from_int(v: i64) -> RatFunc {
        RatFunc::from_poly(Poly::from_i64(&[v]))
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    /// Multiplicative inverse; errors on zero.
    pub fn inv(&self) -> Result<RatFunc, ScalarError> {
        if self.num.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        let mut num = self.den.clone();
        let mut den = self.num.clone();
        if den.leading().map_or(false, |l| l.is_negative()) {
            num = -num;
            den = -den;
        }
        Ok(RatFunc { num, den })
    }

    /// Order of vanishing at `t = 0`; errors on the zero function.
    pub fn valuation(&self) -> Result<i64, ScalarError> {
        let on = self.num.ord().ok_or(ScalarError::ZeroValuation)?;
        let od = self.den.ord().expect("nonzero denominator");
        Ok(on as i64 - od as i64)
    }

    /// Value at `t = 0`; errors with a pole when the valuation is negative.
    pub fn limit_at_zero(&self) -> Result<Rational, ScalarError> {
        if self.num.is_zero() {
            return Ok(Rational::zero());
        }
        let on = self.num.ord().unwrap();
        let od = self.den.ord().unwrap();
        if on < od {
            return Err(ScalarError::PoleAtZero);
        }
        if on > od {
            return Ok(Rational::zero());
        }
        Ok(Rational::new(self.num.coeff(on), self.den.coeff(od)))
    }

    /// Value at a rational point; errors where the denominator vanishes.
    pub fn eval(&self, x: &Rational) -> Result<Rational, ScalarError> {
        let d = self.den.eval_rational(x);
        if d.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(self.num.eval_rational(x) / d)
    }

    /// Parses `"(poly)/(poly)"` or a bare polynomial (or `"p/q"` without
    /// parentheses).
    pub fn parse(s: &str) -> Result<RatFunc, ScalarError> {
        let s = s.trim();
        let err = |m: &str| ScalarError::Parse(format!("{s:?}: {m}"));
        if let Some(rest) = s.strip_prefix('(') {
            let close = rest.find(')').ok_or_else(|| err("missing ')'"))?;
            let num = Poly::parse(&rest[..close])?;
            let rest = rest[close + 1..].trim_start();
            let rest = rest
                .strip_prefix('/')
                .ok_or_else(|| err("expected '/' between parts"))?
                .trim_start();
            let rest = rest.strip_prefix('(').ok_or_else(|| err("expected '('"))?;
            let close = rest.find(')').ok_or_else(|| err("missing ')'"))?;
            if !rest[close + 1..].trim().is_empty() {
                return Err(err("trailing text"));
            }
            let den = Poly::parse(&rest[..close])?;
            RatFunc::new(num, den)
        } else if let Some(slash) = s.find('/') {
            let num = Poly::parse(&s[..slash])?;
            let den = Poly::parse(&s[slash + 1..])?;
            RatFunc::new(num, den)
        } else {
            Ok(RatFunc::from_poly(Poly::parse(s)?))
        }
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})/({})", self.num, self.den)
    }
}

impl Add for RatFunc {
    type Output = RatFunc;
    fn add(self, rhs: RatFunc) -> RatFunc {
        if self.num.is_zero() {
            return rhs;
        }
        if rhs.num.is_zero() {
            return self;
        }
        let g1 = Poly::gcd(&self.den, &rhs.den);
        let db = rhs.den.div_exact(&g1).unwrap();
        let da = self.den.div_exact(&g1).unwrap();
        let t = &self.num * &db + &rhs.num * &da;
        if t.is_zero() {
            return RatFunc::zero();
        }
        let g2 = Poly::gcd(&t, &g1);
        let num = t.div_exact(&g2).unwrap();
        let den = &da * &rhs.den.div_exact(&g2).unwrap();
        RatFunc { num, den }
    }
}

impl Sub for RatFunc {
    type Output = RatFunc;
    fn sub(self, rhs: RatFunc) -> RatFunc {
        self + (-rhs)
    }
}

impl Neg for RatFunc {
    type Output = RatFunc;
    fn neg(mut self) -> RatFunc {
        self.num = -self.num;
        self
    }
}

impl Mul for RatFunc {
    type Output = RatFunc;
    fn mul(self, rhs: RatFunc) -> RatFunc {
        if self.num.is_zero() || rhs.num.is_zero() {
            return RatFunc::zero();
        }
        let g1 = Poly::gcd(&self.num, &rhs.den);
        let g2 = Poly::gcd(&rhs.num, &self.den);
        let num = &self.num.div_exact(&g1).unwrap() * &rhs.num.div_exact(&g2).unwrap();
        let den = &self.den.div_exact(&g2).unwrap() * &rhs.den.div_exact(&g1).unwrap();
        RatFunc { num, den }
    }
}

impl Div for RatFunc {
    type Output = RatFunc;
    fn div(self, rhs: RatFunc) -> RatFunc {
        let inv = rhs
            .inv()
            .expect("division by zero in rational-function arithmetic");
        self * inv
    }
}

impl Zero for RatFunc {
    fn zero() -> Self {
        RatFunc {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

impl One for RatFunc {
    fn one() -> Self {
        RatFunc::from_poly(Poly::one())
    }
}

/// The scalar interface shared by [`Rational`] and [`RatFunc`]: an exact
/// field with by-value arithmetic and an embedding of the rationals.
pub trait Field:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_rational(r: &Rational) -> Self;

    fn from_int(v: i64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(v)))
    }

    /// Division with an explicit error instead of a panic on zero.
    fn checked_div(self, rhs: &Self) -> Result<Self, ScalarError> {
        if rhs.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(self / rhs.clone())
    }

    fn checked_inv(&self) -> Result<Self, ScalarError> {
        Self::one().checked_div(self)
    }
}

impl Field for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
}

impl Field for RatFunc {
    fn from_rational(r: &Rational) -> Self {
        RatFunc {
            num: Poly::constant(r.numer().clone()),
            den: Poly::constant(r.denom().clone()),
        }
    }
}
