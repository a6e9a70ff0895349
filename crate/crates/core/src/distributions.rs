//! Rational joint distributions, exact entropy vectors and the
//! quasi-uniformity check.
//!
//! A [`JointPMF`] stores only its support, with every mass written as
//! `count / denom` over one common denominator. The denominator is reduced
//! once at construction, so entropies are computed directly from the integer
//! counts: `H = log N - (1/N) sum_i a_i log a_i`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::logexact::{factorize, parse_rational, LogLinear};
use crate::subset::{arity_for_len, canonical_order, coord_index, Subset, MAX_VARS};

/// A point of the product alphabet, one symbol index per variable.
pub type Point = Vec<u32>;

/// A joint distribution with strictly positive rational masses summing to one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointPMF {
    sizes: Vec<usize>,
    counts: BTreeMap<Point, u64>,
    denom: u64,
    names: Vec<Option<Vec<String>>>,
}

impl JointPMF {
    /// Builds a distribution from explicit masses.
    pub fn new<I>(sizes: Vec<usize>, masses: I) -> Result<JointPMF>
    where
        I: IntoIterator<Item = (Point, BigRational)>,
    {
        check_sizes(&sizes)?;
        let mut entries: BTreeMap<Point, BigRational> = BTreeMap::new();
        for (point, mass) in masses {
            check_point(&sizes, &point)?;
            if !mass.is_positive() {
                return Err(Error::InvalidPmf(format!("mass {mass} at {point:?} is not positive")));
            }
            if entries.insert(point.clone(), mass).is_some() {
                return Err(Error::InvalidPmf(format!("duplicate support point {point:?}")));
            }
        }
        let mut denom = BigInt::one();
        for m in entries.values() {
            denom = denom.lcm(m.denom());
        }
        let big_denom = denom.clone();
        let denom = denom.to_u64().ok_or_else(|| Error::Overflow(format!("common denominator {denom}")))?;
        let mut counts = BTreeMap::new();
        let mut total: u64 = 0;
        for (point, m) in entries {
            let c =
                (m.numer() * (&big_denom / m.denom())).to_u64().ok_or_else(|| Error::Overflow(format!("mass {m}")))?;
            total = total.checked_add(c).ok_or_else(|| Error::Overflow("mass sum".into()))?;
            counts.insert(point, c);
        }
        if total != denom {
            return Err(Error::MassSum(format!("{}", BigRational::new(total.into(), denom.into()))));
        }
        let n = sizes.len();
        Ok(JointPMF { sizes, counts, denom, names: vec![None; n] })
    }

    /// Builds a distribution from integer weights over a common denominator.
    pub fn from_counts(sizes: Vec<usize>, counts: BTreeMap<Point, u64>, denom: u64) -> Result<JointPMF> {
        check_sizes(&sizes)?;
        let mut total: u64 = 0;
        for (point, &c) in &counts {
            check_point(&sizes, point)?;
            if c == 0 {
                return Err(Error::InvalidPmf(format!("zero mass at {point:?}")));
            }
            total = total.checked_add(c).ok_or_else(|| Error::Overflow("mass sum".into()))?;
        }
        if total != denom {
            return Err(Error::MassSum(format!("{total}/{denom}")));
        }
        let n = sizes.len();
        let mut pmf = JointPMF { sizes, counts, denom, names: vec![None; n] };
        pmf.reduce();
        Ok(pmf)
    }

    /// The uniform distribution on the given support.
    pub fn uniform<I>(sizes: Vec<usize>, support: I) -> Result<JointPMF>
    where
        I: IntoIterator<Item = Point>,
    {
        let mut counts = BTreeMap::new();
        for p in support {
            if counts.insert(p.clone(), 1).is_some() {
                return Err(Error::InvalidPmf(format!("duplicate support point {p:?}")));
            }
        }
        let denom = counts.len() as u64;
        JointPMF::from_counts(sizes, counts, denom)
    }

    fn reduce(&mut self) {
        let g = self.counts.values().fold(self.denom, |g, &c| g.gcd(&c));
        if g > 1 {
            self.denom /= g;
            for c in self.counts.values_mut() {
                *c /= g;
            }
        }
    }

    /// Attaches display names for the symbols of variable `var` (1-based).
    pub fn with_names(mut self, var: usize, names: Vec<String>) -> Result<JointPMF> {
        if var == 0 || var > self.n() {
            return Err(Error::InvalidPmf(format!("no variable {var}")));
        }
        if names.len() != self.sizes[var - 1] {
            return Err(Error::InvalidPmf(format!(
                "{} names for variable {var} with alphabet size {}",
                names.len(),
                self.sizes[var - 1]
            )));
        }
        self.names[var - 1] = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.sizes.len()
    }

    pub fn alphabet_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn names(&self, var: usize) -> Option<&[String]> {
        self.names.get(var.wrapping_sub(1))?.as_deref()
    }

    /// Common denominator of all masses.
    pub fn denominator(&self) -> u64 {
        self.denom
    }

    pub fn support_len(&self) -> usize {
        self.counts.len()
    }

    /// Support points with their integer weights over [`Self::denominator`].
    pub fn weights(&self) -> impl Iterator<Item = (&Point, u64)> {
        self.counts.iter().map(|(p, c)| (p, *c))
    }

    pub fn support(&self) -> impl Iterator<Item = &Point> {
        self.counts.keys()
    }

    pub fn mass(&self, point: &[u32]) -> BigRational {
        match self.counts.get(point) {
            Some(&c) => BigRational::new(c.into(), self.denom.into()),
            None => BigRational::zero(),
        }
    }

    fn check_subset(&self, alpha: Subset) -> Result<()> {
        if alpha.is_empty() {
            return Err(Error::EmptySubset);
        }
        if !alpha.within(self.n()) {
            return Err(Error::SubsetOutOfRange { mask: alpha.mask(), n: self.n() });
        }
        Ok(())
    }

    /// Integer weights of the α-marginal over the joint denominator.
    fn marginal_counts(&self, alpha: Subset) -> HashMap<Point, u64> {
        let pos = alpha.positions();
        let mut out: HashMap<Point, u64> = HashMap::new();
        for (p, &c) in &self.counts {
            let key: Point = pos.iter().map(|&i| p[i]).collect();
            *out.entry(key).or_insert(0) += c;
        }
        out
    }

    /// The distribution of `X_α`, with variables kept in increasing order.
    pub fn marginalize(&self, alpha: Subset) -> Result<JointPMF> {
        self.check_subset(alpha)?;
        let pos = alpha.positions();
        let sizes = pos.iter().map(|&i| self.sizes[i]).collect();
        let counts = self.marginal_counts(alpha).into_iter().collect();
        let mut pmf = JointPMF::from_counts(sizes, counts, self.denom)?;
        pmf.names = pos.iter().map(|&i| self.names[i].clone()).collect();
        Ok(pmf)
    }

    /// Shannon entropy of the joint distribution.
    pub fn entropy(&self) -> LogLinear {
        entropy_of_counts(self.counts.values().copied(), self.denom)
    }

    /// Entropy of the α-marginal.
    pub fn marginal_entropy(&self, alpha: Subset) -> Result<LogLinear> {
        self.check_subset(alpha)?;
        Ok(entropy_of_counts(self.marginal_counts(alpha).into_values(), self.denom))
    }

    /// Entropies of every nonempty marginal in canonical coordinate order.
    pub fn entropy_vector(&self) -> EntropyVector {
        let n = self.n();
        let coords = canonical_order(n)
            .into_iter()
            .map(|alpha| entropy_of_counts(self.marginal_counts(alpha).into_values(), self.denom))
            .collect();
        EntropyVector { n, coords }
    }

    /// Checks that every nonempty marginal is constant on its support.
    pub fn is_quasi_uniform(&self) -> QuVerdict {
        let mut sizes = BTreeMap::new();
        for alpha in canonical_order(self.n()) {
            let marginal = self.marginal_counts(alpha);
            let mut points: Vec<(&Point, &u64)> = marginal.iter().collect();
            points.sort();
            let min = points.iter().min_by_key(|(_, c)| **c).expect("nonempty support");
            let max = points.iter().max_by_key(|(_, c)| **c).expect("nonempty support");
            if min.1 != max.1 {
                let mass = |c: u64| BigRational::new(c.into(), self.denom.into());
                return QuVerdict {
                    is_qu: false,
                    support_sizes: BTreeMap::new(),
                    witness: Some(QuWitness {
                        subset: alpha,
                        low_point: min.0.clone(),
                        low_mass: mass(*min.1),
                        high_point: max.0.clone(),
                        high_mass: mass(*max.1),
                    }),
                };
            }
            sizes.insert(alpha, marginal.len() as u64);
        }
        QuVerdict { is_qu: true, support_sizes: sizes, witness: None }
    }

    /// Distribution of `(X_i, Y_i)_i` for independent `X ~ self` and `Y ~ other`.
    /// Symbol `(x, y)` of variable `i` is encoded as `x * |Y_i| + y`; the
    /// entropy vector of the result is the sum of both entropy vectors.
    pub fn independent_product(&self, other: &JointPMF) -> Result<JointPMF> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: other.n() });
        }
        let sizes: Vec<usize> = self.sizes.iter().zip(&other.sizes).map(|(a, b)| a * b).collect();
        let denom = self.denom.checked_mul(other.denom).ok_or_else(|| Error::Overflow("product denominator".into()))?;
        let mut counts = BTreeMap::new();
        for (p, &c) in &self.counts {
            for (q, &d) in &other.counts {
                let point = p.iter().zip(q).zip(&other.sizes).map(|((&x, &y), &s)| x * s as u32 + y).collect();
                counts.insert(point, c * d);
            }
        }
        JointPMF::from_counts(sizes, counts, denom)
    }

    /// Relabels variables: variable `i` of `self` becomes variable `perm[i - 1]`.
    pub fn permute(&self, perm: &[usize]) -> Result<JointPMF> {
        let n = self.n();
        check_permutation(perm, n)?;
        let mut sizes = vec![0; n];
        let mut names = vec![None; n];
        for i in 0..n {
            sizes[perm[i] - 1] = self.sizes[i];
            names[perm[i] - 1] = self.names[i].clone();
        }
        let counts = self
            .counts
            .iter()
            .map(|(p, &c)| {
                let mut q = vec![0; n];
                for i in 0..n {
                    q[perm[i] - 1] = p[i];
                }
                (q, c)
            })
            .collect();
        let mut pmf = JointPMF::from_counts(sizes, counts, self.denom)?;
        pmf.names = names;
        Ok(pmf)
    }

    /// Parses the text format:
    ///
    /// ```text
    /// # comment
    /// pmf n=3 sizes=4,4,4
    /// names 1=a,b,c,d
    /// a a a : 1/48
    /// ```
    pub fn parse(text: &str) -> Result<JointPMF> {
        parse_pmf(text)
    }

    /// Renders the text format accepted by [`JointPMF::parse`].
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let sizes: Vec<String> = self.sizes.iter().map(|s| s.to_string()).collect();
        writeln!(out, "pmf n={} sizes={}", self.n(), sizes.join(",")).unwrap();
        for (i, names) in self.names.iter().enumerate() {
            if let Some(names) = names {
                writeln!(out, "names {}={}", i + 1, names.join(",")).unwrap();
            }
        }
        for (p, &c) in &self.counts {
            let symbols: Vec<String> = p
                .iter()
                .enumerate()
                .map(|(i, &x)| match &self.names[i] {
                    Some(names) => names[x as usize].clone(),
                    None => x.to_string(),
                })
                .collect();
            let g = c.gcd(&self.denom);
            writeln!(out, "{} : {}/{}", symbols.join(" "), c / g, self.denom / g).unwrap();
        }
        out
    }
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() || sizes.len() > MAX_VARS {
        return Err(Error::UnsupportedArity(sizes.len()));
    }
    if let Some(i) = sizes.iter().position(|&s| s == 0 || s > u32::MAX as usize) {
        return Err(Error::InvalidPmf(format!("alphabet size of variable {} must be positive", i + 1)));
    }
    Ok(())
}

fn check_point(sizes: &[usize], point: &[u32]) -> Result<()> {
    if point.len() != sizes.len() {
        return Err(Error::DimensionMismatch { expected: sizes.len(), got: point.len() });
    }
    for (i, (&x, &s)) in point.iter().zip(sizes).enumerate() {
        if x as usize >= s {
            return Err(Error::SymbolOutOfRange { line: 0, var: i + 1, symbol: x.to_string(), size: s });
        }
    }
    Ok(())
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: perm.len() });
    }
    for &p in perm {
        if p == 0 || p > n || seen[p - 1] {
            return Err(Error::InvalidPmf(format!("{perm:?} is not a permutation of 1..={n}")));
        }
        seen[p - 1] = true;
    }
    Ok(())
}

/// `log N - (1/N) sum c log c` for integer weights `c` summing to `N`.
pub(crate) fn entropy_of_counts<I: IntoIterator<Item = u64>>(counts: I, denom: u64) -> LogLinear {
    let mut cache: HashMap<u64, Vec<(u64, u32)>> = HashMap::new();
    let mut acc: BTreeMap<u64, BigInt> = BTreeMap::new();
    for c in counts {
        if c <= 1 {
            continue;
        }
        let factors = cache.entry(c).or_insert_with(|| factorize(c));
        for &(p, e) in factors.iter() {
            *acc.entry(p).or_insert_with(BigInt::zero) += BigInt::from(c) * BigInt::from(e);
        }
    }
    let n = BigInt::from(denom);
    let weighted = LogLinear::from_terms(acc.into_iter().map(|(p, k)| (p, BigRational::new(k, n.clone()))))
        .expect("factorize yields primes");
    LogLinear::from_log_int(denom).expect("denominator is positive") - weighted
}

/// Entropy coordinates `h_α` over all nonempty `α ⊆ [n]`, in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EntropyVector {
    n: usize,
    coords: Vec<LogLinear>,
}

impl EntropyVector {
    pub fn new(n: usize, coords: Vec<LogLinear>) -> Result<EntropyVector> {
        if n == 0 || n > MAX_VARS {
            return Err(Error::UnsupportedArity(n));
        }
        let expected = (1usize << n) - 1;
        if coords.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: coords.len() });
        }
        Ok(EntropyVector { n, coords })
    }

    pub fn zero(n: usize) -> EntropyVector {
        EntropyVector { n, coords: vec![LogLinear::zero(); (1 << n) - 1] }
    }

    /// `[log m_α]` for integer coordinates given in canonical order.
    pub fn from_log_naturals(n: usize, ms: &[u64]) -> Result<EntropyVector> {
        let coords = ms.iter().map(|&m| LogLinear::from_log_int(m)).collect::<Result<_>>()?;
        EntropyVector::new(n, coords)
    }

    /// `sum_k weight_k * v_k` for integer coordinate vectors `v_k`.
    pub fn from_combination(n: usize, terms: &[(&LogLinear, &[i64])]) -> Result<EntropyVector> {
        let mut out = EntropyVector::zero(n);
        for (weight, vector) in terms {
            if vector.len() != out.coords.len() {
                return Err(Error::DimensionMismatch { expected: out.coords.len(), got: vector.len() });
            }
            for (c, &k) in out.coords.iter_mut().zip(vector.iter()) {
                *c += &weight.scale_int(k);
            }
        }
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coords(&self) -> &[LogLinear] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<LogLinear> {
        self.coords
    }

    /// `h_α`; the empty set maps to zero.
    pub fn get(&self, alpha: Subset) -> LogLinear {
        if alpha.is_empty() {
            return LogLinear::zero();
        }
        let idx = coord_index(self.n, alpha).expect("subset within [n]");
        self.coords[idx].clone()
    }

    pub fn add(&self, other: &EntropyVector) -> Result<EntropyVector> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect();
        Ok(EntropyVector { n: self.n, coords })
    }

    /// The vector seen after relabeling variable `i` as `perm[i - 1]`:
    /// the result satisfies `h'_{perm(α)} = h_α`.
    pub fn permute(&self, perm: &[usize]) -> Result<EntropyVector> {
        check_permutation(perm, self.n)?;
        let order = canonical_order(self.n);
        let mut coords = vec![LogLinear::zero(); self.coords.len()];
        for (alpha, h) in order.iter().zip(&self.coords) {
            let idx = coord_index(self.n, alpha.permute(perm)).expect("permuted subset");
            coords[idx] = h.clone();
        }
        Ok(EntropyVector { n: self.n, coords })
    }

    /// Coordinate labels in canonical order, e.g. `"12"`.
    pub fn order_labels(&self) -> Vec<String> {
        canonical_order(self.n).iter().map(|s| s.to_string()).collect()
    }

    /// Parses the JSON vector format: either a bare array of coordinates or an
    /// object `{"order": [...], "coords": [...]}`. Each coordinate is a
    /// log-linear object (`{"log_terms": {...}}`), the shorthand string
    /// `"log a"` / `"log a/b"`, or `"0"`. Decimal numbers are rejected.
    pub fn from_json(text: &str) -> Result<EntropyVector> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::InvalidVector(e.to_string()))?;
        EntropyVector::from_json_value(&value)
    }

    pub fn from_json_value(value: &serde_json::Value) -> Result<EntropyVector> {
        use serde_json::Value;
        let (coords, order) = match value {
            Value::Array(items) => (items, None),
            Value::Object(map) => {
                let coords = map
                    .get("coords")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::InvalidVector("missing \"coords\" array".into()))?;
                (coords, map.get("order"))
            }
            _ => return Err(Error::InvalidVector("expected an array or object".into())),
        };
        let n = arity_for_len(coords.len())
            .ok_or_else(|| Error::InvalidVector(format!("{} coordinates is not 2^n - 1", coords.len())))?;
        if let Some(order) = order {
            let labels: Vec<String> = order
                .as_array()
                .ok_or_else(|| Error::InvalidVector("\"order\" must be an array".into()))?
                .iter()
                .map(|v| v.as_str().map(str::to_string))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::InvalidVector("\"order\" entries must be strings".into()))?;
            let expected: Vec<String> = canonical_order(n).iter().map(|s| s.to_string()).collect();
            if labels != expected {
                return Err(Error::InvalidVector(format!(
                    "coordinate order {labels:?} differs from canonical {expected:?}"
                )));
            }
        }
        let coords = coords
            .iter()
            .enumerate()
            .map(|(i, v)| parse_coordinate(v).map_err(|e| Error::InvalidVector(format!("coordinate {i}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        EntropyVector::new(n, coords)
    }
}

fn parse_coordinate(value: &serde_json::Value) -> Result<LogLinear> {
    use serde_json::Value;
    match value {
        Value::String(s) => parse_log_shorthand(s),
        Value::Object(_) => serde_json::from_value(value.clone()).map_err(|e| Error::InvalidLogLinear(e.to_string())),
        Value::Number(_) => Err(Error::InvalidLogLinear(
            "numeric coordinates are not accepted; give exact log terms or \"log a/b\"".into(),
        )),
        _ => Err(Error::InvalidLogLinear(format!("unsupported coordinate {value}"))),
    }
}

/// `"0"`, `"log 48"`, `"log 4/3"` or `"log(4/3)"`.
pub fn parse_log_shorthand(s: &str) -> Result<LogLinear> {
    let t = s.trim();
    if t == "0" {
        return Ok(LogLinear::zero());
    }
    let rest = t
        .strip_prefix("log")
        .ok_or_else(|| Error::InvalidLogLinear(format!("expected \"log a/b\", got {s:?}")))?
        .trim();
    let rest = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')).unwrap_or(rest);
    if rest.contains('.') || rest.contains('e') {
        return Err(Error::InvalidLogLinear(format!("decimal argument in {s:?}")));
    }
    let r = parse_rational(rest)?;
    LogLinear::from_log_ratio(&r)
}

impl Serialize for EntropyVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("EntropyVector", 2)?;
        st.serialize_field("order", &self.order_labels())?;
        st.serialize_field("coords", &self.coords)?;
        st.end()
    }
}

/// Two support points of one marginal with different masses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuWitness {
    pub subset: Subset,
    pub low_point: Point,
    pub low_mass: BigRational,
    pub high_point: Point,
    pub high_mass: BigRational,
}

/// Outcome of [`JointPMF::is_quasi_uniform`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuVerdict {
    pub is_qu: bool,
    /// `m_α` for every nonempty α, populated only when `is_qu`.
    pub support_sizes: BTreeMap<Subset, u64>,
    pub witness: Option<QuWitness>,
}

impl QuVerdict {
    pub fn to_json(&self) -> serde_json::Value {
        let sizes: serde_json::Map<String, serde_json::Value> =
            self.support_sizes.iter().map(|(s, m)| (s.to_string(), serde_json::Value::from(*m))).collect();
        let witness = self.witness.as_ref().map(|w| {
            serde_json::json!({
                "subset": w.subset.to_string(),
                "low_point": w.low_point,
                "low_mass": w.low_mass.to_string(),
                "high_point": w.high_point,
                "high_mass": w.high_mass.to_string(),
            })
        });
        serde_json::json!({
            "is_qu": self.is_qu,
            "support_sizes": sizes,
            "witness": witness,
        })
    }
}

fn parse_pmf(text: &str) -> Result<JointPMF> {
    let mut header: Option<(usize, Vec<usize>)> = None;
    let mut names: Vec<Option<Vec<String>>> = Vec::new();
    let mut masses: BTreeMap<Point, BigRational> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((n, sizes)) = header.as_ref() else {
            header = Some(parse_header(line, line_no)?);
            names = vec![None; header.as_ref().unwrap().0];
            continue;
        };
        if let Some(rest) = line.strip_prefix("names ") {
            let (var, list) = rest.split_once('=').ok_or_else(|| Error::MalformedLine {
                line: line_no,
                msg: "expected `names <i>=<a>,<b>,...`".into(),
            })?;
            let var: usize = var
                .trim()
                .parse()
                .map_err(|_| Error::MalformedLine { line: line_no, msg: format!("bad variable index {var:?}") })?;
            if var == 0 || var > *n {
                return Err(Error::MalformedLine { line: line_no, msg: format!("no variable {var}") });
            }
            let list: Vec<String> = list.split(',').map(|s| s.trim().to_string()).collect();
            if list.len() != sizes[var - 1] || list.iter().any(String::is_empty) {
                return Err(Error::MalformedLine {
                    line: line_no,
                    msg: format!("variable {var} needs {} nonempty names", sizes[var - 1]),
                });
            }
            let mut sorted = list.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != list.len() {
                return Err(Error::MalformedLine { line: line_no, msg: "repeated symbol name".into() });
            }
            names[var - 1] = Some(list);
            continue;
        }
        let (lhs, rhs) = line
            .split_once(':')
            .ok_or_else(|| Error::MalformedLine { line: line_no, msg: "expected `x1 ... xn : num/den`".into() })?;
        let tokens: Vec<&str> = lhs.split_whitespace().collect();
        if tokens.len() != *n {
            return Err(Error::MalformedLine {
                line: line_no,
                msg: format!("expected {n} symbols, found {}", tokens.len()),
            });
        }
        let mut point = Vec::with_capacity(*n);
        for (i, tok) in tokens.iter().enumerate() {
            let named = names[i].as_ref().and_then(|ns| ns.iter().position(|s| s == tok));
            let x = match named {
                Some(x) => x,
                None => tok.parse::<usize>().map_err(|_| Error::SymbolOutOfRange {
                    line: line_no,
                    var: i + 1,
                    symbol: tok.to_string(),
                    size: sizes[i],
                })?,
            };
            if x >= sizes[i] {
                return Err(Error::SymbolOutOfRange {
                    line: line_no,
                    var: i + 1,
                    symbol: tok.to_string(),
                    size: sizes[i],
                });
            }
            point.push(x as u32);
        }
        let value = rhs.trim();
        if value.contains('.') || value.contains('e') || value.contains('E') {
            return Err(Error::InvalidMass {
                line: line_no,
                value: value.into(),
                msg: "decimal probabilities are not accepted; write num/den".into(),
            });
        }
        let mass = parse_rational(value).map_err(|_| Error::InvalidMass {
            line: line_no,
            value: value.into(),
            msg: "expected num/den".into(),
        })?;
        if !mass.is_positive() {
            return Err(Error::InvalidMass { line: line_no, value: value.into(), msg: "must be positive".into() });
        }
        if masses.contains_key(&point) {
            return Err(Error::DuplicateTuple { line: line_no, point: tokens.join(" ") });
        }
        masses.insert(point, mass);
    }

    let (_, sizes) = header.ok_or_else(|| Error::MalformedHeader { line: 0, msg: "missing `pmf` header".into() })?;
    if masses.is_empty() {
        return Err(Error::InvalidPmf("no support points".into()));
    }
    let total: BigRational = masses.values().cloned().sum();
    if !total.is_one() {
        return Err(Error::MassSum(total.to_string()));
    }
    let mut pmf = JointPMF::new(sizes, masses)?;
    pmf.names = names;
    Ok(pmf)
}

fn parse_header(line: &str, line_no: usize) -> Result<(usize, Vec<usize>)> {
    let bad = |msg: &str| Error::MalformedHeader { line: line_no, msg: msg.to_string() };
    let mut parts = line.split_whitespace();
    if parts.next() != Some("pmf") {
        return Err(bad("expected `pmf n=<n> sizes=<s1>,...`"));
    }
    let mut n = None;
    let mut sizes = None;
    for part in parts {
        match part.split_once('=') {
            Some(("n", v)) => n = Some(v.parse::<usize>().map_err(|_| bad("bad n"))?),
            Some(("sizes", v)) => {
                sizes = Some(
                    v.split(',')
                        .map(|s| s.trim().parse::<usize>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad("bad sizes"))?,
                )
            }
            _ => return Err(bad(&format!("unexpected field {part:?}"))),
        }
    }
    let n = n.ok_or_else(|| bad("missing n"))?;
    let sizes = sizes.ok_or_else(|| bad("missing sizes"))?;
    if n == 0 || n > MAX_VARS {
        return Err(bad("n out of range"));
    }
    if sizes.len() != n {
        return Err(bad(&format!("n={n} but {} sizes", sizes.len())));
    }
    if sizes.contains(&0) {
        return Err(bad("alphabet sizes must be positive"));
    }
    Ok((n, sizes))
}
