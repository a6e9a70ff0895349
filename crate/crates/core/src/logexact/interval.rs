//! Fixed-point interval enclosures of natural logarithms.
//!
//! A [`FixedInterval`] at precision `prec` holds integers `lo <= hi` and
//! encloses the real interval `[lo / 2^prec, hi / 2^prec]`. Every operation
//! rounds outward, so the enclosure is rigorous at any precision.

use num_bigint::{BigInt, Sign as BigSign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct FixedInterval {
    pub lo: BigInt,
    pub hi: BigInt,
    pub prec: u32,
}

impl FixedInterval {
    pub fn zero(prec: u32) -> Self {
        FixedInterval { lo: BigInt::zero(), hi: BigInt::zero(), prec }
    }

    pub fn add(&self, other: &FixedInterval) -> FixedInterval {
        debug_assert_eq!(self.prec, other.prec);
        FixedInterval { lo: &self.lo + &other.lo, hi: &self.hi + &other.hi, prec: self.prec }
    }

    /// Multiply by the exact rational `num / den` (`den > 0`).
    pub fn scale(&self, num: &BigInt, den: &BigInt) -> FixedInterval {
        debug_assert!(den.is_positive());
        let a = &self.lo * num;
        let b = &self.hi * num;
        let (lo, hi) = if num.sign() == BigSign::Minus { (b, a) } else { (a, b) };
        FixedInterval { lo: lo.div_floor(den), hi: ceil_div(&hi, den), prec: self.prec }
    }

    /// Quotient of two intervals that are both strictly positive.
    pub fn div_positive(&self, other: &FixedInterval) -> Option<FixedInterval> {
        if !self.lo.is_positive() || !other.lo.is_positive() {
            return None;
        }
        let lo = (&self.lo << self.prec).div_floor(&other.hi);
        let hi = ceil_div(&(&self.hi << self.prec), &other.lo);
        Some(FixedInterval { lo, hi, prec: self.prec })
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.hi.is_negative()
    }
}

pub(crate) fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    let (q, r) = a.div_mod_floor(b);
    if r.is_zero() {
        q
    } else {
        q + 1
    }
}

/// Enclosure of ln 2 from `ln 2 = sum_{k>=1} 1 / (k 2^k)`.
pub(crate) fn ln2(prec: u32) -> FixedInterval {
    let terms = prec + 2;
    let one = BigInt::one() << prec;
    let mut lo = BigInt::zero();
    for k in 1..=terms {
        // floor(2^prec / (k 2^k)); each floor loses less than one ulp
        lo += (&one >> k) / BigInt::from(k);
    }
    // k terms truncated by < 1 ulp each, plus a tail below 2^-(prec+2)
    let hi = &lo + BigInt::from(terms) + 1;
    FixedInterval { lo, hi, prec }
}

/// Enclosure of `2 atanh(num / den)` for `0 <= num / den <= 1/3`.
fn two_atanh(num: &BigInt, den: &BigInt, prec: u32) -> FixedInterval {
    if num.is_zero() {
        return FixedInterval::zero(prec);
    }
    let num_sq = num * num;
    let den_sq = den * den;
    let mut npow = num.clone();
    let mut dpow = den.clone();
    let mut lo = BigInt::zero();
    let mut count: u64 = 0;
    let mut odd: u64 = 1;
    loop {
        let term = (&npow << prec) / (&dpow * BigInt::from(odd));
        if term.is_zero() {
            break;
        }
        lo += term;
        count += 1;
        npow *= &num_sq;
        dpow *= &den_sq;
        odd += 2;
    }
    // once a term drops below one ulp the remaining tail is below 9/8 ulp
    let hi = &lo + BigInt::from(count) + 2;
    FixedInterval { lo: lo << 1, hi: hi << 1, prec }
}

/// Enclosure of ln p for an integer p >= 2.
pub(crate) fn ln_int(p: u64, ln2: &FixedInterval) -> FixedInterval {
    let prec = ln2.prec;
    if p == 1 {
        return FixedInterval::zero(prec);
    }
    let k = 63 - p.leading_zeros();
    let pow = 1u64 << k;
    let base = ln2.scale(&BigInt::from(k), &BigInt::one());
    if pow == p {
        return base;
    }
    // p / 2^k lies in (1, 2): ln(p / 2^k) = 2 atanh((p - 2^k) / (p + 2^k))
    let num = BigInt::from(p - pow);
    let den = BigInt::from(p) + BigInt::from(pow);
    base.add(&two_atanh(&num, &den, prec))
}
