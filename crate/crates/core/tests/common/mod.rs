#![allow(dead_code)]

use std::collections::BTreeSet;

use entrocone::polycone::RayId;
use entrocone::{EntropyVector, LogLinear};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

pub fn log(m: u64) -> LogLinear {
    LogLinear::from_log_int(m).unwrap()
}

pub fn logq(a: u64, b: u64) -> LogLinear {
    LogLinear::from_log_rational(a, b).unwrap()
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `log ζ` with `ζ = 2^{11/6} 3^{11/4}`.
pub fn log_zeta() -> LogLinear {
    LogLinear::from_terms([(2, rational(11, 6)), (3, rational(11, 4))]).unwrap()
}

pub fn f() -> EntropyVector {
    EntropyVector::from_log_naturals(3, &[4, 4, 4, 16, 16, 16, 48]).unwrap()
}

pub fn g() -> EntropyVector {
    let mut c = EntropyVector::from_log_naturals(3, &[9, 9, 6, 1, 54, 54, 216]).unwrap().into_coords();
    c[3] = log_zeta();
    EntropyVector::new(3, c).unwrap()
}

pub fn open_vector() -> EntropyVector {
    EntropyVector::from_log_naturals(3, &[9, 9, 6, 54, 54, 54, 216]).unwrap()
}

/// Nonnegative values `sum_p c_p log p` over p in {2, 3, 5}, zero with
/// probability about one in four.
pub fn nonneg_log() -> impl Strategy<Value = LogLinear> {
    prop_oneof![
        1 => Just(LogLinear::zero()),
        3 => prop::collection::vec((0i64..=6, 1i64..=4), 3).prop_map(|cs| {
            LogLinear::from_terms([2u64, 3, 5].into_iter().zip(cs).map(|(p, (n, d))| (p, rational(n, d)))).unwrap()
        }),
    ]
}

/// Strictly positive values of the same shape.
pub fn pos_log() -> impl Strategy<Value = LogLinear> {
    nonneg_log().prop_map(|v| if v.is_zero() { log(2) } else { v })
}

pub fn combine(terms: &[(RayId, LogLinear)]) -> EntropyVector {
    let vectors: Vec<[i64; 7]> = terms.iter().map(|(r, _)| r.vector()).collect();
    let parts: Vec<(&LogLinear, &[i64])> = terms.iter().zip(&vectors).map(|((_, c), v)| (c, &v[..])).collect();
    EntropyVector::from_combination(3, &parts).unwrap()
}

/// Random nonnegative combination of the given rays.
pub fn combination_of(rays: Vec<RayId>) -> impl Strategy<Value = Vec<(RayId, LogLinear)>> {
    let k = rays.len();
    prop::collection::vec(nonneg_log(), k).prop_map(move |cs| rays.iter().copied().zip(cs).collect())
}

pub fn ray_set(names: &[&str]) -> BTreeSet<RayId> {
    names.iter().map(|n| n.parse().unwrap()).collect()
}
