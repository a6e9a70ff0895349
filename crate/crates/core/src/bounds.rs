//! Entropic characterizations on small faces of Γ3, the inner bounds Θ^in and
//! Ω^in, and the support-size condition every quasi-uniform vector meets.
//!
//! Θ^in collects vectors `λ1 e1 + λ2 e2 + λ3 e3 + λ123' e123'` with
//! `λ123' = log m`. Ω^in collects `... + λ12 e12 + λ123' e123'` where either
//! `λ12 + λ123' >= log ceil(2^λ123')` or `λ123' = log m`. Both are sums of
//! entropic vectors from subfaces, hence entropic.

use std::collections::BTreeMap;

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::distributions::{EntropyVector, JointPMF, Point};
use crate::error::{Error, Result};
use crate::logexact::{LogLinear, Sign};
use crate::polycone::{cone_membership, omega, theta, ConicCertificate, RayId};
use crate::subset::{canonical_order, Subset};

fn require_nonnegative(x: &LogLinear) -> Result<()> {
    if x.sign() == Sign::Negative {
        return Err(Error::NegativeValue(x.to_string()));
    }
    Ok(())
}

/// `λ e123'` is entropic iff `λ = log m` for a natural `m`.
pub fn ray123p_entropic(lambda: &LogLinear) -> Result<bool> {
    require_nonnegative(lambda)?;
    Ok(lambda.as_log_natural().is_some())
}

/// Membership of `λ12 e12 + λ123' e123'` in the entropic region.
pub fn face_12_123p_entropic(lambda12: &LogLinear, lambda123p: &LogLinear) -> Result<bool> {
    require_nonnegative(lambda12)?;
    require_nonnegative(lambda123p)?;
    let bound = LogLinear::from_log_int(lambda123p.pow2_ceil()?)?;
    Ok((lambda12 + lambda123p - bound).sign().is_nonnegative())
}

/// Membership of `λ1 e1 + λ123' e123'` in the entropic region; the
/// condition on `λ123'` is the same as on the bare ray.
pub fn face_1_123p_entropic(lambda123p: &LogLinear) -> Result<bool> {
    ray123p_entropic(lambda123p)
}

/// One named condition with both sides exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub name: &'static str,
    pub holds: bool,
    pub lhs: LogLinear,
    pub rhs: LogLinear,
    pub relation: &'static str,
}

impl Serialize for Condition {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(5))?;
        map.serialize_entry("name", self.name)?;
        map.serialize_entry("holds", &self.holds)?;
        map.serialize_entry("relation", self.relation)?;
        map.serialize_entry("lhs", &self.lhs)?;
        map.serialize_entry("rhs", &self.rhs)?;
        map.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundVerdict {
    pub member: bool,
    pub conditions: Vec<Condition>,
    /// `None` when the vector is outside the face.
    pub decomposition: Option<ConicCertificate>,
}

impl BoundVerdict {
    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    fn outside() -> BoundVerdict {
        BoundVerdict { member: false, conditions: Vec::new(), decomposition: None }
    }
}

impl Serialize for BoundVerdict {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(4))?;
        map.serialize_entry("member", &self.member)?;
        map.serialize_entry("in_face", &self.decomposition.is_some())?;
        map.serialize_entry("conditions", &self.conditions)?;
        map.serialize_entry("decomposition", &self.decomposition)?;
        map.end()
    }
}

/// `λ123' = log m`: compares `λ123'` against `log ceil(2^λ123')`, which it
/// equals exactly when `2^λ123'` is a natural number.
fn natural_condition(name: &'static str, lambda123p: &LogLinear) -> Result<Condition> {
    let rhs = LogLinear::from_log_int(lambda123p.pow2_ceil()?)?;
    Ok(Condition { name, holds: *lambda123p == rhs, lhs: lambda123p.clone(), rhs, relation: "==" })
}

pub fn theta_in(h: &EntropyVector) -> Result<BoundVerdict> {
    let Some(cert) = cone_membership(h, &theta().generators)? else {
        return Ok(BoundVerdict::outside());
    };
    let eq30 = natural_condition("eq30", &cert.coefficient(RayId::R123p))?;
    Ok(BoundVerdict { member: eq30.holds, conditions: vec![eq30], decomposition: Some(cert) })
}

pub fn omega_in(h: &EntropyVector) -> Result<BoundVerdict> {
    let Some(cert) = cone_membership(h, &omega().generators)? else {
        return Ok(BoundVerdict::outside());
    };
    let l12 = cert.coefficient(RayId::R12);
    let l123p = cert.coefficient(RayId::R123p);
    let rhs = LogLinear::from_log_int(l123p.pow2_ceil()?)?;
    let lhs = &l12 + &l123p;
    let eq39 = Condition { name: "eq39", holds: (&lhs - &rhs).sign().is_nonnegative(), lhs, rhs, relation: ">=" };
    let eq40 = natural_condition("eq40", &l123p)?;
    Ok(BoundVerdict { member: eq39.holds || eq40.holds, conditions: vec![eq39, eq40], decomposition: Some(cert) })
}

/// `m_α` with `h_α = log m_α` for every α, or `None` if some coordinate is
/// not the log of a natural number.
pub fn qu_necessary(h: &EntropyVector) -> Option<BTreeMap<Subset, u64>> {
    canonical_order(h.n()).into_iter().zip(h.coords()).map(|(s, x)| x.as_log_natural().map(|m| (s, m))).collect()
}

/// A quasi-uniform PMF whose entropy vector is `log m` times the ray.
///
/// `e_S` (S a nonempty subset): the variables in `S` all equal one uniform
/// symbol and the others are constant. `e123'`: `X1`, `X2` independent
/// uniform and `X3 = X1 + X2 mod m`.
pub fn realize_ray(ray: RayId, m: u64) -> Result<JointPMF> {
    if m == 0 {
        return Err(Error::NonPositiveArgument("m = 0".into()));
    }
    let m32 = u32::try_from(m).map_err(|_| Error::Overflow(format!("alphabet size {m}")))?;
    let mk = m as usize;
    if ray == RayId::R123p {
        let support = (0..m32).flat_map(|a| (0..m32).map(move |b| vec![a, b, (a + b) % m32]));
        return JointPMF::uniform(vec![mk; 3], support);
    }
    let s = match ray {
        RayId::R1 => "1",
        RayId::R2 => "2",
        RayId::R3 => "3",
        RayId::R12 => "12",
        RayId::R13 => "13",
        RayId::R23 => "23",
        _ => "123",
    };
    let s: Subset = s.parse()?;
    let sizes: Vec<usize> = (1..=3).map(|i| if s.contains(i) { mk } else { 1 }).collect();
    let support = (0..m32).map(|x| -> Point { (1..=3).map(|i| if s.contains(i) { x } else { 0 }).collect() });
    JointPMF::uniform(sizes, support)
}

/// Independent product of ray realizations: entropy vector
/// `sum_j log m_j e_j`.
pub fn realize_combination(terms: &[(RayId, u64)]) -> Result<JointPMF> {
    let mut acc = JointPMF::uniform(vec![1, 1, 1], [vec![0, 0, 0]])?;
    for &(ray, m) in terms {
        acc = acc.independent_product(&realize_ray(ray, m)?)?;
    }
    Ok(acc)
}
