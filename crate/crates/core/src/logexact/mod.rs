//! Exact real numbers of the form `sum_p q_p log p`.
//!
//! Logarithms of distinct primes are linearly independent over the
//! rationals, so a [`LogLinear`] stored as a sparse prime → rational map is
//! canonical: two values are equal exactly when their maps are equal. Every
//! entropy of a rational distribution lives in this field.
//!
//! Values are unit-free. "Bits" and "nats" only appear when a value is
//! rendered as a decimal.

mod interval;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use interval::FixedInterval;

const START_PRECISION: u32 = 64;
const MAX_PRECISION: u32 = 1 << 16;

/// Exact sign of a [`LogLinear`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn is_nonnegative(self) -> bool {
        self != Sign::Negative
    }
}

/// Prime factorization by trial division, as `(prime, exponent)` pairs in
/// increasing prime order.
pub fn factorize(mut m: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if m < 2 {
        return out;
    }
    for p in [2u64, 3] {
        let mut e = 0;
        while m.is_multiple_of(p) {
            m /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
    }
    let mut p = 5u64;
    let mut step = 2;
    while p.saturating_mul(p) <= m {
        let mut e = 0;
        while m.is_multiple_of(p) {
            m /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += step;
        step = 6 - step;
    }
    if m > 1 {
        out.push((m, 1));
    }
    out
}

pub fn is_prime(m: u64) -> bool {
    matches!(factorize(m).as_slice(), [(_, 1)])
}

/// An exact real `sum_p q_p log p` with rational `q_p` over finitely many primes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LogLinear {
    terms: BTreeMap<u64, BigRational>,
}

impl LogLinear {
    pub fn zero() -> Self {
        LogLinear::default()
    }

    /// `log m` for a positive integer `m`.
    pub fn from_log_int(m: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::NonPositiveArgument(m.to_string()));
        }
        let terms = factorize(m).into_iter().map(|(p, e)| (p, BigRational::from_integer(BigInt::from(e)))).collect();
        Ok(LogLinear { terms })
    }

    /// `log(a / b)` for positive integers `a`, `b`.
    pub fn from_log_rational(a: u64, b: u64) -> Result<Self> {
        if a == 0 || b == 0 {
            return Err(Error::NonPositiveArgument(format!("{a}/{b}")));
        }
        Ok(LogLinear::from_log_int(a)? - LogLinear::from_log_int(b)?)
    }

    /// `log r` for a positive rational `r`.
    pub fn from_log_ratio(r: &BigRational) -> Result<Self> {
        if !r.is_positive() {
            return Err(Error::NonPositiveArgument(r.to_string()));
        }
        let num = r.numer().to_u64().ok_or_else(|| Error::Overflow(r.to_string()))?;
        let den = r.denom().to_u64().ok_or_else(|| Error::Overflow(r.to_string()))?;
        LogLinear::from_log_rational(num, den)
    }

    /// Builds a value from raw `(prime, coefficient)` terms. Non-primes are rejected.
    pub fn from_terms<I>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, BigRational)>,
    {
        let mut out = LogLinear::zero();
        for (p, q) in terms {
            if !is_prime(p) {
                return Err(Error::InvalidLogLinear(format!("{p} is not prime")));
            }
            out.add_term(p, q);
        }
        Ok(out)
    }

    fn add_term(&mut self, p: u64, q: BigRational) {
        if q.is_zero() {
            return;
        }
        let slot = self.terms.entry(p).or_insert_with(BigRational::zero);
        *slot += q;
        if slot.is_zero() {
            self.terms.remove(&p);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, &BigRational)> {
        self.terms.iter().map(|(p, q)| (*p, q))
    }

    pub fn coefficient(&self, p: u64) -> BigRational {
        self.terms.get(&p).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn scale(&self, q: &BigRational) -> LogLinear {
        if q.is_zero() {
            return LogLinear::zero();
        }
        LogLinear { terms: self.terms.iter().map(|(p, c)| (*p, c * q)).collect() }
    }

    pub fn scale_int(&self, k: i64) -> LogLinear {
        self.scale(&BigRational::from_integer(BigInt::from(k)))
    }

    /// Exact sign, decided by interval refinement (the zero test is structural).
    pub fn sign(&self) -> Sign {
        if self.is_zero() {
            return Sign::Zero;
        }
        // A single term needs no numerics: log p > 0 for every prime.
        if self.terms.len() == 1 {
            let q = self.terms.values().next().unwrap();
            return if q.is_positive() { Sign::Positive } else { Sign::Negative };
        }
        let mut prec = START_PRECISION;
        loop {
            let iv = self.enclose_nats(prec);
            if iv.is_positive() {
                return Sign::Positive;
            }
            if iv.is_negative() {
                return Sign::Negative;
            }
            // a nonzero value always separates from 0 eventually
            prec = prec.saturating_mul(2);
        }
    }

    pub fn cmp_value(&self, other: &LogLinear) -> std::cmp::Ordering {
        match (self - other).sign() {
            Sign::Negative => std::cmp::Ordering::Less,
            Sign::Zero => std::cmp::Ordering::Equal,
            Sign::Positive => std::cmp::Ordering::Greater,
        }
    }

    /// `Some(m)` iff this value is `log m` for a natural `m`.
    ///
    /// Returns `None` as well when `m` does not fit in a `u64`.
    pub fn as_log_natural(&self) -> Option<u64> {
        let mut m: u64 = 1;
        for (p, q) in &self.terms {
            if !q.is_integer() || q.is_negative() {
                return None;
            }
            let e = q.to_integer().to_u32()?;
            m = m.checked_mul(p.checked_pow(e)?)?;
        }
        Some(m)
    }

    fn has_integer_coefficients(&self) -> bool {
        self.terms.values().all(|q| q.is_integer())
    }

    /// The exact rational `prod p^{q_p}` when every coefficient is an integer.
    fn exact_power(&self) -> Option<BigRational> {
        if !self.has_integer_coefficients() {
            return None;
        }
        let mut num = BigUint::one();
        let mut den = BigUint::one();
        for (p, q) in &self.terms {
            let e = q.to_integer();
            let pow = BigUint::from(*p).pow(e.abs().to_u32().expect("exponent fits u32"));
            if e.is_positive() {
                num *= pow;
            } else {
                den *= pow;
            }
        }
        Some(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// `ceil(2^v)` where the value is read in bits, i.e. `ceil(prod p^{q_p})`.
    pub fn pow2_ceil(&self) -> Result<u64> {
        if self.sign() == Sign::Negative {
            return Err(Error::NegativeValue(self.to_string()));
        }
        if let Some(r) = self.exact_power() {
            return r.ceil().to_integer().to_u64().ok_or_else(|| Error::Overflow(self.to_string()));
        }
        // Non-integer coefficients make prod p^{q_p} irrational, so the
        // ceiling is the least c with log c > v and never lands on a boundary.
        let guess = self.to_f64_nats().exp().ceil();
        if !guess.is_finite() || guess >= 9.0e15 {
            return Err(Error::Overflow(self.to_string()));
        }
        let mut c = (guess as u64).max(1);
        while (&LogLinear::from_log_int(c)? - self).sign() == Sign::Negative {
            c += 1;
        }
        while c > 1 && (&LogLinear::from_log_int(c - 1)? - self).sign() == Sign::Positive {
            c -= 1;
        }
        Ok(c)
    }

    /// Double-precision value in nats.
    pub fn to_f64_nats(&self) -> f64 {
        self.terms.iter().map(|(p, q)| rational_to_f64(q) * (*p as f64).ln()).sum()
    }

    /// Double-precision value in bits.
    pub fn to_f64_bits(&self) -> f64 {
        self.terms.iter().map(|(p, q)| rational_to_f64(q) * (*p as f64).log2()).sum()
    }

    fn enclose_nats(&self, prec: u32) -> FixedInterval {
        let l2 = interval::ln2(prec);
        let mut acc = FixedInterval::zero(prec);
        for (p, q) in &self.terms {
            let lp = interval::ln_int(*p, &l2);
            acc = acc.add(&lp.scale(q.numer(), q.denom()));
        }
        acc
    }

    fn enclose_bits(&self, prec: u32) -> FixedInterval {
        let l2 = interval::ln2(prec);
        let mut acc = FixedInterval::zero(prec);
        for (p, q) in &self.terms {
            let lp = if *p == 2 {
                FixedInterval { lo: BigInt::one() << prec, hi: BigInt::one() << prec, prec }
            } else {
                interval::ln_int(*p, &l2).div_positive(&l2).expect("positive logs")
            };
            acc = acc.add(&lp.scale(q.numer(), q.denom()));
        }
        acc
    }

    /// Correctly rounded decimal of the value in bits.
    pub fn approx_bits(&self, digits: u32) -> Result<String> {
        let non_two = self.terms.keys().any(|p| *p != 2);
        if !non_two {
            return Ok(format_rounded(&self.coefficient(2), digits));
        }
        round_enclosure(|prec| self.enclose_bits(prec), digits, "bits approximation")
    }

    /// Correctly rounded decimal of the value in nats.
    pub fn approx_nats(&self, digits: u32) -> Result<String> {
        if self.is_zero() {
            return Ok(format_rounded(&BigRational::zero(), digits));
        }
        round_enclosure(|prec| self.enclose_nats(prec), digits, "nats approximation")
    }

    /// Correctly rounded decimal of `prod p^{q_p}` (the exponential of the value).
    pub fn approx_exp(&self, digits: u32) -> Result<String> {
        if let Some(r) = self.exact_power() {
            return Ok(format_rounded(&r, digits));
        }
        // round(X 10^d) = c iff log((2c-1)/2) < v + d log 10 < log((2c+1)/2);
        // X is irrational so neither boundary is attained.
        let scaled = self + &LogLinear::from_log_int(10)?.scale_int(digits as i64);
        let guess = scaled.to_f64_nats().exp().round();
        if !guess.is_finite() || guess >= 4.0e15 {
            return Err(Error::Overflow(self.to_string()));
        }
        let mut c = guess as u64;
        let upper = |c: u64| LogLinear::from_log_rational(2 * c + 1, 2);
        while (&scaled - &upper(c)?).sign() == Sign::Positive {
            c += 1;
        }
        while c > 0 && (&scaled - &upper(c - 1)?).sign() == Sign::Negative {
            c -= 1;
        }
        let pow10 = BigInt::from(10u32).pow(digits);
        Ok(format_scaled(&BigInt::from(c), digits, &pow10))
    }
}

fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| q.numer().to_f64().unwrap_or(f64::NAN) / q.denom().to_f64().unwrap_or(f64::NAN))
}

/// Round an irrational quantity, given by enclosures at increasing
/// precision, to `digits` fractional decimal digits.
fn round_enclosure<F>(enclose: F, digits: u32, what: &str) -> Result<String>
where
    F: Fn(u32) -> FixedInterval,
{
    let pow10 = BigInt::from(10u32).pow(digits);
    let mut prec = START_PRECISION;
    while prec <= MAX_PRECISION {
        let iv = enclose(prec);
        // floor(x 10^d + 1/2) at both ends of the enclosure
        let half = BigInt::one() << (prec - 1);
        let one = BigInt::one() << prec;
        let lo = (&iv.lo * &pow10 + &half).div_floor(&one);
        let hi = (&iv.hi * &pow10 + &half).div_floor(&one);
        if lo == hi {
            return Ok(format_scaled(&lo, digits, &pow10));
        }
        prec *= 2;
    }
    Err(Error::PrecisionExhausted { bits: MAX_PRECISION, what: what.to_string() })
}

/// Round an exact rational half away from zero.
fn format_rounded(r: &BigRational, digits: u32) -> String {
    let pow10 = BigInt::from(10u32).pow(digits);
    let scaled = r * BigRational::from_integer(pow10.clone());
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let k = if scaled.is_negative() {
        -((-scaled) + half).floor().to_integer()
    } else {
        (scaled + half).floor().to_integer()
    };
    format_scaled(&k, digits, &pow10)
}

fn format_scaled(k: &BigInt, digits: u32, pow10: &BigInt) -> String {
    let neg = k.is_negative();
    let (int, frac) = k.abs().div_mod_floor(pow10);
    let sign = if neg { "-" } else { "" };
    if digits == 0 {
        return format!("{sign}{int}");
    }
    format!("{sign}{int}.{:0>width$}", frac.to_string(), width = digits as usize)
}

impl fmt::Display for LogLinear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (p, q)) in self.terms.iter().enumerate() {
            let (neg, mag) = if q.is_negative() { (true, -q) } else { (false, q.clone()) };
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if mag.is_one() {
                write!(f, "log{p}")?;
            } else {
                write!(f, "{mag}·log{p}")?;
            }
        }
        Ok(())
    }
}

impl Neg for LogLinear {
    type Output = LogLinear;
    fn neg(self) -> LogLinear {
        LogLinear { terms: self.terms.into_iter().map(|(p, q)| (p, -q)).collect() }
    }
}

impl Neg for &LogLinear {
    type Output = LogLinear;
    fn neg(self) -> LogLinear {
        -self.clone()
    }
}

impl AddAssign<&LogLinear> for LogLinear {
    fn add_assign(&mut self, rhs: &LogLinear) {
        for (p, q) in &rhs.terms {
            self.add_term(*p, q.clone());
        }
    }
}

impl SubAssign<&LogLinear> for LogLinear {
    fn sub_assign(&mut self, rhs: &LogLinear) {
        for (p, q) in &rhs.terms {
            self.add_term(*p, -q.clone());
        }
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $assign:ident) => {
        impl $tr<&LogLinear> for &LogLinear {
            type Output = LogLinear;
            fn $method(self, rhs: &LogLinear) -> LogLinear {
                let mut out = self.clone();
                out.$assign(rhs);
                out
            }
        }
        impl $tr<LogLinear> for LogLinear {
            type Output = LogLinear;
            fn $method(mut self, rhs: LogLinear) -> LogLinear {
                self.$assign(&rhs);
                self
            }
        }
        impl $tr<&LogLinear> for LogLinear {
            type Output = LogLinear;
            fn $method(mut self, rhs: &LogLinear) -> LogLinear {
                self.$assign(rhs);
                self
            }
        }
    };
}

binop!(Add, add, add_assign);
binop!(Sub, sub, sub_assign);

impl std::iter::Sum for LogLinear {
    fn sum<I: Iterator<Item = LogLinear>>(iter: I) -> LogLinear {
        iter.fold(LogLinear::zero(), |acc, x| acc + x)
    }
}

impl<'a> std::iter::Sum<&'a LogLinear> for LogLinear {
    fn sum<I: Iterator<Item = &'a LogLinear>>(iter: I) -> LogLinear {
        iter.fold(LogLinear::zero(), |acc, x| acc + x)
    }
}

// JSON: {"log_terms": {"2": "3/1", "3": "-1/2"}, "bits_approx": "4.2170"}

fn rational_string(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub(crate) fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::InvalidLogLinear(format!("bad rational {s:?}"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(num, den))
}

struct Terms<'a>(&'a LogLinear);

impl Serialize for Terms<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.terms.len()))?;
        for (p, q) in &self.0.terms {
            map.serialize_entry(&p.to_string(), &rational_string(q))?;
        }
        map.end()
    }
}

impl Serialize for LogLinear {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(2))?;
        map.serialize_entry("log_terms", &Terms(self))?;
        let bits = self.approx_bits(4).map_err(serde::ser::Error::custom)?;
        map.serialize_entry("bits_approx", &bits)?;
        map.end()
    }
}

impl<'de> Deserialize<'de> for LogLinear {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct LogVisitor;

        impl<'de> Visitor<'de> for LogVisitor {
            type Value = LogLinear;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object with a \"log_terms\" map")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<LogLinear, A::Error> {
                let mut terms: Option<BTreeMap<String, String>> = None;
                while let Some(key) = map.next_key::<String>()? {
                    match key.as_str() {
                        "log_terms" => terms = Some(map.next_value()?),
                        // advisory only; the exact terms are authoritative
                        _ => {
                            map.next_value::<de::IgnoredAny>()?;
                        }
                    }
                }
                let terms = terms.ok_or_else(|| de::Error::missing_field("log_terms"))?;
                let mut parsed = Vec::with_capacity(terms.len());
                for (p, q) in terms {
                    let p: u64 = p.trim().parse().map_err(|_| de::Error::custom(format!("bad prime key {p:?}")))?;
                    let q = parse_rational(&q).map_err(de::Error::custom)?;
                    parsed.push((p, q));
                }
                LogLinear::from_terms(parsed).map_err(de::Error::custom)
            }
        }

        deserializer.deserialize_map(LogVisitor)
    }
}
