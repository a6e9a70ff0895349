//! The polymatroid cone Γn and the face geometry of Γ3.
//!
//! Γn is cut out by the elemental inequalities. Γ3 is also the conic hull of
//! eight extreme rays; its faces are named here by generator sets, and
//! membership certificates are exact conic combinations with [`LogLinear`]
//! coefficients.
//!
//! Conic feasibility uses Carathéodory: if `h` lies in `cone(G)` it is a
//! nonnegative combination of some linearly independent subset of `G`, and
//! any such subset extends to a maximal independent one whose (unique)
//! solution is still nonnegative. So enumerating maximal independent subsets
//! and solving each square system exactly is complete. With at most eight
//! generators that is at most C(8, 4) systems.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::ser::{SerializeMap, SerializeSeq, Serializer};
use serde::Serialize;

use crate::distributions::EntropyVector;
use crate::error::{Error, Result};
use crate::logexact::{LogLinear, Sign};
use crate::subset::{canonical_order, coord_index, permutations, Subset};

/// Largest `n` for which elemental inequalities are generated.
pub const MAX_GAMMA_N: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InequalityKind {
    /// `h_[n] >= h_{[n] \ var}`
    Monotonicity { var: usize },
    /// `h_{iβ} + h_{jβ} >= h_β + h_{ijβ}`
    Submodularity { i: usize, j: usize, beta: Subset },
}

/// An elemental inequality `sum_α c_α h_α >= 0` over canonical coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ElementalInequality {
    pub n: usize,
    pub kind: InequalityKind,
    pub coeffs: Vec<i64>,
}

impl ElementalInequality {
    pub fn evaluate(&self, h: &EntropyVector) -> LogLinear {
        self.coeffs.iter().zip(h.coords()).filter(|(c, _)| **c != 0).map(|(c, x)| x.scale_int(*c)).sum()
    }

    fn evaluate_int(&self, v: &[i64]) -> i64 {
        self.coeffs.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// Human-readable form, e.g. `h13 + h23 >= h3 + h123`.
    pub fn describe(&self) -> String {
        let term = |s: Subset| if s.is_empty() { "0".to_string() } else { format!("h{s}") };
        match self.kind {
            InequalityKind::Monotonicity { var } => {
                let full = Subset::full(self.n);
                format!("{} >= {}", term(full), term(full.difference(Subset::singleton(var))))
            }
            InequalityKind::Submodularity { i, j, beta } => {
                let si = Subset::singleton(i).union(beta);
                let sj = Subset::singleton(j).union(beta);
                let sij = si.union(sj);
                if beta.is_empty() {
                    format!("{} + {} >= {}", term(si), term(sj), term(sij))
                } else {
                    format!("{} + {} >= {} + {}", term(si), term(sj), term(beta), term(sij))
                }
            }
        }
    }
}

impl Serialize for ElementalInequality {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(2))?;
        map.serialize_entry("inequality", &self.describe())?;
        map.serialize_entry("coeffs", &self.coeffs)?;
        map.end()
    }
}

/// The elemental inequalities of Γn: `n` monotonicity instances followed by
/// `C(n,2) 2^(n-2)` submodularity instances.
pub fn elemental_inequalities(n: usize) -> Result<Vec<ElementalInequality>> {
    if n == 0 || n > MAX_GAMMA_N {
        return Err(Error::UnsupportedArity(n));
    }
    let dim = (1usize << n) - 1;
    let full = Subset::full(n);
    let add = |coeffs: &mut Vec<i64>, s: Subset, k: i64| {
        if let Some(idx) = coord_index(n, s) {
            coeffs[idx] += k;
        }
    };
    let mut out = Vec::new();
    for var in 1..=n {
        let mut coeffs = vec![0; dim];
        add(&mut coeffs, full, 1);
        add(&mut coeffs, full.difference(Subset::singleton(var)), -1);
        out.push(ElementalInequality { n, kind: InequalityKind::Monotonicity { var }, coeffs });
    }
    for i in 1..=n {
        for j in (i + 1)..=n {
            let pair = Subset::singleton(i).union(Subset::singleton(j));
            let rest = full.difference(pair);
            let mut betas = vec![Subset::EMPTY];
            betas.extend(canonical_order(n).into_iter().filter(|b| b.is_subset_of(rest)));
            for beta in betas {
                let mut coeffs = vec![0; dim];
                add(&mut coeffs, Subset::singleton(i).union(beta), 1);
                add(&mut coeffs, Subset::singleton(j).union(beta), 1);
                add(&mut coeffs, beta, -1);
                add(&mut coeffs, pair.union(beta), -1);
                out.push(ElementalInequality { n, kind: InequalityKind::Submodularity { i, j, beta }, coeffs });
            }
        }
    }
    Ok(out)
}

fn cached_inequalities(n: usize) -> &'static [ElementalInequality] {
    static CACHE: OnceLock<Vec<Vec<ElementalInequality>>> = OnceLock::new();
    let all = CACHE.get_or_init(|| (1..=MAX_GAMMA_N).map(|k| elemental_inequalities(k).unwrap()).collect());
    &all[n - 1]
}

/// A violated elemental inequality and its (negative) value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub index: usize,
    pub inequality: ElementalInequality,
    pub value: LogLinear,
}

impl Serialize for Violation {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(3))?;
        map.serialize_entry("index", &self.index)?;
        map.serialize_entry("inequality", &self.inequality.describe())?;
        map.serialize_entry("value", &self.value)?;
        map.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GammaVerdict {
    pub member: bool,
    pub violations: Vec<Violation>,
}

/// Membership in Γn, listing every violated elemental inequality.
pub fn in_gamma_n(h: &EntropyVector) -> Result<GammaVerdict> {
    if h.n() > MAX_GAMMA_N {
        return Err(Error::UnsupportedArity(h.n()));
    }
    let violations: Vec<Violation> = cached_inequalities(h.n())
        .iter()
        .enumerate()
        .filter_map(|(index, ineq)| {
            let value = ineq.evaluate(h);
            (value.sign() == Sign::Negative).then(|| Violation { index, inequality: ineq.clone(), value })
        })
        .collect();
    Ok(GammaVerdict { member: violations.is_empty(), violations })
}

/// Indices of the elemental inequalities of Γ3 that hold with equality at `h`.
pub fn tight_set(h: &EntropyVector) -> BTreeSet<usize> {
    cached_inequalities(h.n())
        .iter()
        .enumerate()
        .filter(|(_, ineq)| ineq.evaluate(h).is_zero())
        .map(|(i, _)| i)
        .collect()
}

fn tight_set_int(v: &[i64; 7]) -> BTreeSet<usize> {
    cached_inequalities(3).iter().enumerate().filter(|(_, ineq)| ineq.evaluate_int(v) == 0).map(|(i, _)| i).collect()
}

/// The eight extreme rays of Γ3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RayId {
    R1,
    R2,
    R3,
    R12,
    R13,
    R23,
    R123,
    R123p,
}

impl RayId {
    pub const ALL: [RayId; 8] =
        [RayId::R1, RayId::R2, RayId::R3, RayId::R12, RayId::R13, RayId::R23, RayId::R123, RayId::R123p];

    /// Integer generator vector in canonical coordinate order.
    pub fn vector(self) -> [i64; 7] {
        match self {
            RayId::R1 => [1, 0, 0, 1, 1, 0, 1],
            RayId::R2 => [0, 1, 0, 1, 0, 1, 1],
            RayId::R3 => [0, 0, 1, 0, 1, 1, 1],
            RayId::R12 => [1, 1, 0, 1, 1, 1, 1],
            RayId::R13 => [1, 0, 1, 1, 1, 1, 1],
            RayId::R23 => [0, 1, 1, 1, 1, 1, 1],
            RayId::R123 => [1, 1, 1, 1, 1, 1, 1],
            RayId::R123p => [1, 1, 1, 2, 2, 2, 2],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RayId::R1 => "1",
            RayId::R2 => "2",
            RayId::R3 => "3",
            RayId::R12 => "12",
            RayId::R13 => "13",
            RayId::R23 => "23",
            RayId::R123 => "123",
            RayId::R123p => "123p",
        }
    }

    /// Image under relabeling variable `i` as `perm[i - 1]`.
    pub fn permute(self, perm: &[usize]) -> RayId {
        let subset_ray = |s: Subset| match s.mask() {
            0b001 => RayId::R1,
            0b010 => RayId::R2,
            0b100 => RayId::R3,
            0b011 => RayId::R12,
            0b101 => RayId::R13,
            0b110 => RayId::R23,
            _ => RayId::R123,
        };
        let s = match self {
            RayId::R123p => return RayId::R123p,
            RayId::R123 => return RayId::R123,
            RayId::R1 => Subset::from_mask(0b001),
            RayId::R2 => Subset::from_mask(0b010),
            RayId::R3 => Subset::from_mask(0b100),
            RayId::R12 => Subset::from_mask(0b011),
            RayId::R13 => Subset::from_mask(0b101),
            RayId::R23 => Subset::from_mask(0b110),
        };
        subset_ray(s.permute(perm))
    }

    /// `c` times this ray.
    pub fn scaled(self, c: &LogLinear) -> EntropyVector {
        EntropyVector::from_combination(3, &[(c, &self.vector())]).expect("seven coordinates")
    }

    /// The ray scaled by `log 2`, i.e. the integer vector read in bits.
    pub fn entropy_vector(self) -> EntropyVector {
        self.scaled(&LogLinear::from_log_int(2).expect("2 is positive"))
    }
}

impl fmt::Display for RayId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RayId {
    type Err = Error;

    fn from_str(s: &str) -> Result<RayId> {
        let t = s.trim().trim_start_matches('e');
        let t = t.strip_suffix('\'').map(|r| format!("{r}p")).unwrap_or_else(|| t.to_string());
        RayId::ALL.into_iter().find(|r| r.name() == t).ok_or_else(|| Error::UnknownFace(s.to_string()))
    }
}

impl Serialize for RayId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

/// An exact certificate `h = sum_j λ_j e_j` with every `λ_j >= 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConicCertificate {
    pub coefficients: BTreeMap<RayId, LogLinear>,
}

impl ConicCertificate {
    pub fn coefficient(&self, ray: RayId) -> LogLinear {
        self.coefficients.get(&ray).cloned().unwrap_or_default()
    }

    pub fn recompose(&self) -> EntropyVector {
        let vectors: Vec<[i64; 7]> = self.coefficients.keys().map(|r| r.vector()).collect();
        let terms: Vec<(&LogLinear, &[i64])> =
            self.coefficients.values().zip(&vectors).map(|(l, v)| (l, v.as_slice())).collect();
        EntropyVector::from_combination(3, &terms).expect("seven coordinates")
    }

    /// Rays with a nonzero coefficient.
    pub fn support(&self) -> BTreeSet<RayId> {
        self.coefficients.iter().filter(|(_, l)| !l.is_zero()).map(|(r, _)| *r).collect()
    }
}

impl Serialize for ConicCertificate {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.coefficients.len()))?;
        for (r, l) in &self.coefficients {
            map.serialize_entry(r.name(), l)?;
        }
        map.end()
    }
}

fn rat(k: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(k))
}

/// Rank of a set of integer 7-vectors over the rationals.
pub fn rank(vectors: &[[i64; 7]]) -> usize {
    let mut rows: Vec<Vec<BigRational>> = vectors.iter().map(|v| v.iter().map(|&x| rat(x)).collect()).collect();
    let mut r = 0;
    for col in 0..7 {
        let Some(pivot) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(r, pivot);
        for i in 0..rows.len() {
            if i != r && !rows[i][col].is_zero() {
                let factor = &rows[i][col] / &rows[r][col];
                for c in col..7 {
                    let delta = &factor * &rows[r][c];
                    rows[i][c] -= delta;
                }
            }
        }
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    r
}

/// Solves `sum_k x_k cols[k] = rhs` exactly for linearly independent columns.
/// Returns `None` if the system is inconsistent.
fn solve_exact(cols: &[[i64; 7]], rhs: &[LogLinear]) -> Option<Vec<LogLinear>> {
    let k = cols.len();
    // augmented rows: 7 equations in k unknowns
    let mut a: Vec<Vec<BigRational>> = (0..7).map(|row| cols.iter().map(|c| rat(c[row])).collect()).collect();
    let mut b: Vec<LogLinear> = rhs.to_vec();
    let mut pivot_row = 0;
    let mut pivots = Vec::with_capacity(k);
    for col in 0..k {
        let p = (pivot_row..7).find(|&i| !a[i][col].is_zero())?;
        a.swap(pivot_row, p);
        b.swap(pivot_row, p);
        let inv = BigRational::one() / &a[pivot_row][col];
        for c in 0..k {
            a[pivot_row][c] = &a[pivot_row][c] * &inv;
        }
        b[pivot_row] = b[pivot_row].scale(&inv);
        for i in 0..7 {
            if i != pivot_row && !a[i][col].is_zero() {
                let factor = a[i][col].clone();
                for c in 0..k {
                    let delta = &factor * &a[pivot_row][c];
                    a[i][c] -= delta;
                }
                let delta = b[pivot_row].scale(&factor);
                b[i] -= &delta;
            }
        }
        pivots.push(pivot_row);
        pivot_row += 1;
    }
    if b[pivot_row..].iter().any(|x| !x.is_zero()) {
        return None;
    }
    Some(pivots.into_iter().map(|r| b[r].clone()).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn require_three(h: &EntropyVector) -> Result<()> {
    if h.n() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: h.n() });
    }
    Ok(())
}

fn certificates(h: &EntropyVector, generators: &BTreeSet<RayId>, exhaustive: bool) -> Vec<ConicCertificate> {
    let gens: Vec<RayId> = generators.iter().copied().collect();
    let vectors: Vec<[i64; 7]> = gens.iter().map(|g| g.vector()).collect();
    let r = rank(&vectors);
    let mut out: Vec<ConicCertificate> = Vec::new();
    if r == 0 {
        if h.coords().iter().all(LogLinear::is_zero) {
            let coefficients = gens.iter().map(|g| (*g, LogLinear::zero())).collect();
            out.push(ConicCertificate { coefficients });
        }
        return out;
    }
    for combo in combinations(gens.len(), r) {
        let cols: Vec<[i64; 7]> = combo.iter().map(|&i| vectors[i]).collect();
        if rank(&cols) < r {
            continue;
        }
        let Some(lambda) = solve_exact(&cols, h.coords()) else {
            continue;
        };
        if lambda.iter().any(|l| l.sign() == Sign::Negative) {
            continue;
        }
        let mut coefficients: BTreeMap<RayId, LogLinear> = gens.iter().map(|g| (*g, LogLinear::zero())).collect();
        for (&i, l) in combo.iter().zip(lambda) {
            coefficients.insert(gens[i], l);
        }
        let cert = ConicCertificate { coefficients };
        if !exhaustive {
            return vec![cert];
        }
        if !out.contains(&cert) {
            out.push(cert);
        }
    }
    out
}

/// An exact nonnegative certificate for `h ∈ cone(generators)`, if one
/// exists. Among several, the first in lexicographic order of the basis
/// (over sorted ray ids) is returned.
pub fn cone_membership(h: &EntropyVector, generators: &BTreeSet<RayId>) -> Result<Option<ConicCertificate>> {
    require_three(h)?;
    Ok(certificates(h, generators, false).into_iter().next())
}

/// Every distinct basic certificate (one per maximal independent subset that
/// yields a nonnegative solution).
pub fn cone_membership_all(h: &EntropyVector, generators: &BTreeSet<RayId>) -> Result<Vec<ConicCertificate>> {
    require_three(h)?;
    Ok(certificates(h, generators, true))
}

/// Elemental inequalities that vanish on every generator but not at `h`:
/// each is a linear equation `h` would need to satisfy to lie in the cone.
pub fn face_obstructions(
    h: &EntropyVector,
    generators: &BTreeSet<RayId>,
) -> Result<Vec<(ElementalInequality, LogLinear)>> {
    require_three(h)?;
    let tight = generator_tight_set(generators);
    Ok(cached_inequalities(3)
        .iter()
        .enumerate()
        .filter(|(i, _)| tight.contains(i))
        .filter_map(|(_, ineq)| {
            let v = ineq.evaluate(h);
            (!v.is_zero()).then(|| (ineq.clone(), v))
        })
        .collect())
}

fn generator_tight_set(generators: &BTreeSet<RayId>) -> BTreeSet<usize> {
    let mut tight: BTreeSet<usize> = (0..cached_inequalities(3).len()).collect();
    for g in generators {
        let t = tight_set_int(&g.vector());
        tight = tight.intersection(&t).copied().collect();
    }
    tight
}

/// Rays of Γ3 lying in the smallest face that contains all of `generators`.
pub fn face_closure(generators: &BTreeSet<RayId>) -> BTreeSet<RayId> {
    let tight = generator_tight_set(generators);
    RayId::ALL.into_iter().filter(|r| tight_set_int(&r.vector()).is_superset(&tight)).collect()
}

/// Whether `generators` is exactly the ray set of a face of Γ3.
pub fn is_face(generators: &BTreeSet<RayId>) -> bool {
    face_closure(generators) == *generators
}

/// A face of Γ3 given by its generating rays.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaceSpec {
    pub generators: BTreeSet<RayId>,
    pub dim: usize,
    /// One of the listed representatives (as opposed to a relabeled copy).
    pub canonical: bool,
    /// Whether the face appears in the catalogue, directly or up to relabeling.
    pub catalogued: bool,
    /// Distinct images under relabeling of the three variables, sorted.
    pub orbit: Vec<BTreeSet<RayId>>,
}

impl FaceSpec {
    pub fn from_generators(generators: BTreeSet<RayId>) -> FaceSpec {
        let vectors: Vec<[i64; 7]> = generators.iter().map(|g| g.vector()).collect();
        let dim = rank(&vectors);
        let orbit = orbit_of(&generators);
        let catalogued = all_faces().iter().any(|f| f.generators == generators);
        let canonical = face_catalogue().iter().any(|f| f.generators == generators);
        FaceSpec { generators, dim, canonical, catalogued, orbit }
    }

    pub fn label(&self) -> String {
        let names: Vec<&str> = self.generators.iter().map(|g| g.name()).collect();
        format!("cone({})", names.join(","))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.generators.iter().map(|g| g.name()).collect()
    }

    /// Catalogued faces whose generator set is a proper subset of this one.
    pub fn subfaces(&self) -> Vec<&'static FaceSpec> {
        all_faces()
            .iter()
            .filter(|f| f.generators.len() < self.generators.len() && f.generators.is_subset(&self.generators))
            .collect()
    }
}

impl Serialize for FaceSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.generators.len()))?;
        for g in &self.generators {
            seq.serialize_element(g.name())?;
        }
        seq.end()
    }
}

fn orbit_of(generators: &BTreeSet<RayId>) -> Vec<BTreeSet<RayId>> {
    let mut orbit: Vec<BTreeSet<RayId>> =
        permutations(3).iter().map(|perm| generators.iter().map(|g| g.permute(perm)).collect()).collect();
    orbit.sort();
    orbit.dedup();
    orbit
}

fn rays(names: &[&str]) -> BTreeSet<RayId> {
    names.iter().map(|n| n.parse().expect("known ray")).collect()
}

/// The 19 listed proper faces of Γ3 that contain non-entropic vectors, one
/// representative per relabeling class, from 1-D to 6-D.
const CANONICAL_FACES: [&[&str]; 19] = [
    &["123p"],
    &["1", "123p"],
    &["12", "123p"],
    &["1", "2", "123p"],
    &["12", "13", "123p"],
    &["1", "12", "123p"],
    &["1", "23", "123p"],
    &["1", "2", "3", "123p"],
    &["1", "2", "12", "123p"],
    &["1", "2", "13", "123p"],
    &["1", "12", "13", "123p"],
    &["1", "12", "23", "123p"],
    &["12", "13", "23", "123", "123p"],
    &["1", "2", "3", "12", "123p"],
    &["1", "2", "12", "13", "123p"],
    &["1", "2", "13", "23", "123p"],
    &["1", "12", "13", "23", "123", "123p"],
    &["1", "2", "3", "12", "13", "123p"],
    &["1", "2", "12", "13", "23", "123", "123p"],
];

/// The canonical catalogue (19 entries), built once.
pub fn face_catalogue() -> &'static [FaceSpec] {
    static CATALOGUE: OnceLock<Vec<FaceSpec>> = OnceLock::new();
    CATALOGUE.get_or_init(|| {
        CANONICAL_FACES
            .iter()
            .map(|names| {
                let generators = rays(names);
                let dim = rank(&generators.iter().map(|g| g.vector()).collect::<Vec<_>>());
                let orbit = orbit_of(&generators);
                FaceSpec { generators, dim, canonical: true, catalogued: true, orbit }
            })
            .collect()
    })
}

/// Every member of every catalogued orbit, representatives first.
pub fn all_faces() -> &'static [FaceSpec] {
    static ALL: OnceLock<Vec<FaceSpec>> = OnceLock::new();
    ALL.get_or_init(|| {
        let mut out: Vec<FaceSpec> = face_catalogue().to_vec();
        for face in face_catalogue() {
            for image in &face.orbit {
                if *image != face.generators {
                    out.push(FaceSpec {
                        generators: image.clone(),
                        dim: face.dim,
                        canonical: false,
                        catalogued: true,
                        orbit: face.orbit.clone(),
                    });
                }
            }
        }
        out
    })
}

/// `cone(e1, e2, e3, e123')`.
pub fn theta() -> FaceSpec {
    FaceSpec::from_generators(rays(&["1", "2", "3", "123p"]))
}

/// `cone(e1, e2, e3, e12, e123')`.
pub fn omega() -> FaceSpec {
    FaceSpec::from_generators(rays(&["1", "2", "3", "12", "123p"]))
}

/// Parses `theta`, `omega`, or a comma-separated generator list such as
/// `1,2,3,123p`. Any generator set is accepted; callers needing a true face
/// check [`is_face`].
pub fn parse_generators(spec: &str) -> Result<FaceSpec> {
    match spec.trim().to_ascii_lowercase().as_str() {
        "theta" => return Ok(theta()),
        "omega" => return Ok(omega()),
        _ => {}
    }
    let generators =
        spec.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect::<Result<BTreeSet<RayId>>>()?;
    if generators.is_empty() {
        return Err(Error::UnknownFace(spec.to_string()));
    }
    Ok(FaceSpec::from_generators(generators))
}

/// Where a vector sits relative to a face.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FacePosition {
    /// In the relative interior of the face.
    StrictlyInside(ConicCertificate),
    /// In the face, but inside the smallest proper subface shown.
    InSubface { face: FaceSpec, certificate: ConicCertificate },
    /// Not in the face; lists the face equations `h` violates.
    Outside { obstructions: Vec<(ElementalInequality, LogLinear)>, gamma: GammaVerdict },
}

impl FacePosition {
    pub fn is_strict(&self) -> bool {
        matches!(self, FacePosition::StrictlyInside(_))
    }

    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            FacePosition::StrictlyInside(c) => json!({"position": "StrictlyInside", "certificate": c}),
            FacePosition::InSubface { face, certificate } => json!({
                "position": "InSubface",
                "subface": face,
                "subface_catalogued": face.catalogued,
                "certificate": certificate,
            }),
            FacePosition::Outside { obstructions, gamma } => {
                let obs: Vec<serde_json::Value> = obstructions
                    .iter()
                    .map(|(ineq, v)| json!({"required": format!("equality in {}", ineq.describe()), "value": v}))
                    .collect();
                json!({"position": "Outside", "obstructions": obs, "gamma": gamma})
            }
        }
    }
}

/// Classifies `h` against a face of Γ3.
///
/// A face is `{x ∈ Γ3 : a_i·x = 0, i ∈ T}` for the set `T` of elemental
/// inequalities tight on all its generators, and its relative interior is
/// where no further inequality is tight. So `h` (already in the face) is
/// strictly inside iff its own tight set equals `T`; otherwise the smallest
/// face containing `h` is spanned by the rays whose tight sets contain
/// `h`'s.
pub fn strict_in_face(h: &EntropyVector, face: &FaceSpec) -> Result<FacePosition> {
    require_three(h)?;
    if !is_face(&face.generators) {
        return Err(Error::UnknownFace(format!("{} is not a face of Γ3", face.label())));
    }
    let Some(certificate) = cone_membership(h, &face.generators)? else {
        return Ok(FacePosition::Outside {
            obstructions: face_obstructions(h, &face.generators)?,
            gamma: in_gamma_n(h)?,
        });
    };
    let face_tight = generator_tight_set(&face.generators);
    let h_tight = tight_set(h);
    if h_tight == face_tight {
        return Ok(FacePosition::StrictlyInside(certificate));
    }
    let smallest: BTreeSet<RayId> =
        RayId::ALL.into_iter().filter(|r| tight_set_int(&r.vector()).is_superset(&h_tight)).collect();
    let sub = FaceSpec::from_generators(smallest);
    let certificate = cone_membership(h, &sub.generators)?.expect("h lies in its smallest face");
    Ok(FacePosition::InSubface { face: sub, certificate })
}
