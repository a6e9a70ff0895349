//! Synthesis of quasi-uniform distributions with prescribed support sizes.
//!
//! A support specification fixes `m_α` for every nonempty α. A realization
//! is a set of `N = m_[n]` cells of the grid `[m_1] × ... × [m_n]` such that,
//! for every α, the projection onto α hits exactly `m_α` points, each exactly
//! `N / m_α` times. The uniform distribution on such a set is quasi-uniform
//! with exactly these support sizes.
//!
//! The search assigns cells 0/1 in row-major order (last variable fastest).
//! For each α and each α-point ("fiber") it keeps the number of chosen cells
//! `c` and undecided cells `u`, and prunes as soon as a fiber overflows its
//! quota, a started fiber can no longer reach it, too many fibers are
//! started, or too few can still be. Symbol relabeling of each variable is
//! broken by requiring the slices along every axis to be lexicographically
//! non-increasing.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::distributions::{EntropyVector, JointPMF, Point};
use crate::error::{Error, Result};
use crate::polycone::in_gamma_n;
use crate::subset::{canonical_order, Subset};

/// Largest arity accepted by the search.
pub const MAX_SEARCH_N: usize = 4;
/// Largest grid the search will allocate.
pub const MAX_SEARCH_CELLS: u64 = 1 << 16;
/// Default grid cap for [`brute_force_oracle`].
pub const ORACLE_DEFAULT_CAP: u64 = 24;

/// Target support sizes `m_α` for every nonempty α ⊆ [n].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SupportSpec {
    n: usize,
    m: BTreeMap<Subset, u64>,
}

impl SupportSpec {
    /// Requires a positive entry for every nonempty subset and nothing else.
    pub fn new(n: usize, m: BTreeMap<Subset, u64>) -> Result<SupportSpec> {
        if n == 0 || n > crate::polycone::MAX_GAMMA_N {
            return Err(Error::UnsupportedArity(n));
        }
        for s in canonical_order(n) {
            match m.get(&s) {
                None => return Err(Error::InvalidSpec(format!("missing m_{s}"))),
                Some(0) => return Err(Error::InvalidSpec(format!("m_{s} must be positive"))),
                Some(_) => {}
            }
        }
        if let Some(extra) = m.keys().find(|s| s.is_empty() || !s.within(n)) {
            return Err(Error::SubsetOutOfRange { mask: extra.mask(), n });
        }
        Ok(SupportSpec { n, m })
    }

    /// From sizes listed in canonical subset order.
    pub fn from_sizes(n: usize, sizes: &[u64]) -> Result<SupportSpec> {
        let order = canonical_order(n);
        if sizes.len() != order.len() {
            return Err(Error::DimensionMismatch { expected: order.len(), got: sizes.len() });
        }
        SupportSpec::new(n, order.into_iter().zip(sizes.iter().copied()).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, s: Subset) -> u64 {
        self.m[&s]
    }

    /// Sizes in canonical subset order.
    pub fn sizes(&self) -> Vec<u64> {
        canonical_order(self.n).iter().map(|s| self.m[s]).collect()
    }

    pub fn alphabet_sizes(&self) -> Vec<u64> {
        (1..=self.n).map(|i| self.m[&Subset::singleton(i)]).collect()
    }

    pub fn support_size(&self) -> u64 {
        self.m[&Subset::full(self.n)]
    }

    /// Number of grid cells, or `None` on overflow.
    pub fn grid_cells(&self) -> Option<u64> {
        self.alphabet_sizes().into_iter().try_fold(1u64, |acc, s| acc.checked_mul(s))
    }

    pub fn entropy_vector(&self) -> EntropyVector {
        EntropyVector::from_log_naturals(self.n, &self.sizes()).expect("positive sizes")
    }

    /// Relabels variable `i` as `perm[i - 1]`.
    pub fn permute(&self, perm: &[usize]) -> Result<SupportSpec> {
        crate::distributions::check_permutation(perm, self.n)?;
        SupportSpec::new(self.n, self.m.iter().map(|(s, &m)| (s.permute(perm), m)).collect())
    }

    /// Independence hints implied by the sizes alone: `m_α m_β = m_{α∪β}`.
    pub fn hints(&self) -> Vec<Hint> {
        hints_from(self.n, |s| Some(self.m[&s]), |a, b, ab| a.checked_mul(*b) == Some(*ab), |a, ab| a == ab)
    }

    pub fn to_json(&self) -> Value {
        let m: serde_json::Map<String, Value> =
            canonical_order(self.n).iter().map(|s| (s.to_string(), Value::from(self.m[s]))).collect();
        json!({"n": self.n, "m": m})
    }

    /// Parses `{"n": 3, "m": {"1": 4, "12": 16, ...}}`.
    pub fn from_json(text: &str) -> Result<SupportSpec> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        let n = v
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::InvalidSpec("missing integer field \"n\"".into()))? as usize;
        let obj = v
            .get("m")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::InvalidSpec("missing object field \"m\"".into()))?;
        let mut m = BTreeMap::new();
        for (k, val) in obj {
            let s: Subset = k.parse()?;
            let size = val.as_u64().ok_or_else(|| Error::InvalidSpec(format!("m_{k} must be a positive integer")))?;
            if m.insert(s, size).is_some() {
                return Err(Error::InvalidSpec(format!("m_{k} given twice")));
            }
        }
        SupportSpec::new(n, m)
    }
}

impl fmt::Display for SupportSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.sizes().iter().map(|m| m.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A broken necessary condition on a [`SupportSpec`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpecViolation {
    NotMonotone { sub: Subset, sup: Subset },
    NotDivisible { sub: Subset, sup: Subset },
    NotPolymatroid(String),
}

impl fmt::Display for SpecViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecViolation::NotMonotone { sub, sup } => write!(f, "m_{sub} > m_{sup}"),
            SpecViolation::NotDivisible { sub, sup } => write!(f, "m_{sub} does not divide m_{sup}"),
            SpecViolation::NotPolymatroid(ineq) => write!(f, "log m violates {ineq}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feasibility {
    pub ok: bool,
    pub violations: Vec<SpecViolation>,
}

impl Feasibility {
    pub fn to_json(&self) -> Value {
        let v: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        json!({"ok": self.ok, "violations": v})
    }
}

/// Monotonicity and divisibility along every inclusion, and membership of
/// `[log m_α]` in Γn.
pub fn check_feasibility_necessary(spec: &SupportSpec) -> Feasibility {
    let order = canonical_order(spec.n);
    let mut violations = Vec::new();
    for &sub in &order {
        for &sup in &order {
            if sub == sup || !sub.is_subset_of(sup) {
                continue;
            }
            let (a, b) = (spec.m[&sub], spec.m[&sup]);
            if a > b {
                violations.push(SpecViolation::NotMonotone { sub, sup });
            }
            if b % a != 0 {
                violations.push(SpecViolation::NotDivisible { sub, sup });
            }
        }
    }
    if let Ok(verdict) = in_gamma_n(&spec.entropy_vector()) {
        for v in verdict.violations {
            violations.push(SpecViolation::NotPolymatroid(v.inequality.describe()));
        }
    }
    Feasibility { ok: violations.is_empty(), violations }
}

/// The support sizes a quasi-uniform realization of `h` would need, if `h`
/// passes the log-natural test and the necessary conditions.
pub fn spec_from_vector(h: &EntropyVector) -> Option<SupportSpec> {
    let m = crate::bounds::qu_necessary(h)?;
    let spec = SupportSpec::new(h.n(), m).ok()?;
    check_feasibility_necessary(&spec).ok.then_some(spec)
}

/// Exact structural identities of an entropy vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Hint {
    /// `h_α + h_β = h_{α∪β}` for disjoint α, β: `X_α` and `X_β` independent.
    Independent(Subset, Subset),
    /// `h_α = h_{α∪β}` for disjoint α, β: `X_β` is a function of `X_α`.
    FunctionOf { dependent: Subset, of: Subset },
}

impl fmt::Display for Hint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hint::Independent(a, b) => write!(f, "{{{a}}}⊥{{{b}}}"),
            Hint::FunctionOf { dependent, of } => write!(f, "{{{dependent}}}=f({{{of}}})"),
        }
    }
}

fn hints_from<T, G, I, D>(n: usize, get: G, independent: I, dependent: D) -> Vec<Hint>
where
    G: Fn(Subset) -> Option<T>,
    I: Fn(&T, &T, &T) -> bool,
    D: Fn(&T, &T) -> bool,
{
    let order = canonical_order(n);
    let mut out = Vec::new();
    for (i, &a) in order.iter().enumerate() {
        for &b in &order[i + 1..] {
            if !a.is_disjoint(b) {
                continue;
            }
            let (Some(ha), Some(hb), Some(hab)) = (get(a), get(b), get(a.union(b))) else {
                continue;
            };
            if independent(&ha, &hb, &hab) {
                out.push(Hint::Independent(a, b));
            }
        }
    }
    for &a in &order {
        for &b in &order {
            if !a.is_disjoint(b) {
                continue;
            }
            if let (Some(ha), Some(hab)) = (get(a), get(a.union(b))) {
                if dependent(&ha, &hab) {
                    out.push(Hint::FunctionOf { dependent: b, of: a });
                }
            }
        }
    }
    out
}

/// Independence and functional-dependence identities holding exactly in `h`.
pub fn structural_hints(h: &EntropyVector) -> Vec<Hint> {
    hints_from(h.n(), |s| Some(h.get(s)), |a, b, ab| &(a + b) == ab, |a, ab| a == ab)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchStatus {
    Found(JointPMF),
    ExhaustedInfeasible,
    BudgetExceeded,
}

impl SearchStatus {
    pub fn name(&self) -> &'static str {
        match self {
            SearchStatus::Found(_) => "Found",
            SearchStatus::ExhaustedInfeasible => "ExhaustedInfeasible",
            SearchStatus::BudgetExceeded => "BudgetExceeded",
        }
    }

    pub fn witness(&self) -> Option<&JointPMF> {
        match self {
            SearchStatus::Found(p) => Some(p),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub status: SearchStatus,
    pub nodes_explored: u64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchConfig {
    pub max_nodes: u64,
    pub max_time: Duration,
    /// Explore top-level subtrees on the rayon pool. Off by default; the
    /// sequential mode returns the same witness on every run.
    pub parallel: bool,
    /// Prune with the independence identities implied by the sizes.
    pub use_hints: bool,
    /// Require lexicographically non-increasing slices along every axis.
    pub symmetry_breaking: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_nodes: 10_000_000,
            max_time: Duration::from_secs(60),
            parallel: false,
            use_hints: true,
            symmetry_breaking: true,
        }
    }
}

/// Pairs of fibers tied by an independence hint: α-fiber `a` and β-fiber
/// `b` may both be started only if the (α∪β)-fiber `join[a][b]` can be too.
#[derive(Debug)]
struct HintTable {
    a: usize,
    b: usize,
    g: usize,
    split: Vec<(u32, u32)>,
    join: Vec<Vec<u32>>,
}

#[derive(Debug)]
struct Layout {
    sizes: Vec<usize>,
    cells: usize,
    coords: Vec<Point>,
    k_count: usize,
    quota: Vec<u32>,
    target: Vec<u32>,
    nfib: Vec<usize>,
    /// `fiber[cell * k_count + k]`
    fiber: Vec<u32>,
    /// `fiber_cells[k][f]`
    fiber_cells: Vec<Vec<Vec<u32>>>,
    /// `slice_cells[axis][s]`: cells with coordinate `s` on `axis`, row-major.
    slice_cells: Vec<Vec<Vec<u32>>>,
    /// Adjacent slice pairs `(axis, s)` (comparing `s` with `s + 1`) that
    /// contain the cell.
    pairs_of_cell: Vec<Vec<(usize, usize)>>,
    hints: Vec<HintTable>,
    hints_by_subset: Vec<Vec<usize>>,
}

fn fiber_index(point: &[u32], s: Subset, sizes: &[usize]) -> u32 {
    let mut idx = 0u32;
    for v in s.positions() {
        idx = idx * sizes[v] as u32 + point[v];
    }
    idx
}

fn fiber_count(s: Subset, sizes: &[usize]) -> usize {
    s.positions().iter().map(|&v| sizes[v]).product()
}

fn grid_points(sizes: &[usize]) -> Vec<Point> {
    let cells: usize = sizes.iter().product();
    (0..cells)
        .map(|mut idx| {
            let mut p = vec![0u32; sizes.len()];
            for v in (0..sizes.len()).rev() {
                p[v] = (idx % sizes[v]) as u32;
                idx /= sizes[v];
            }
            p
        })
        .collect()
}

impl Layout {
    fn new(spec: &SupportSpec, config: &SearchConfig) -> Layout {
        let n = spec.n;
        let sizes: Vec<usize> = spec.alphabet_sizes().iter().map(|&s| s as usize).collect();
        let coords = grid_points(&sizes);
        let cells = coords.len();
        let subsets = canonical_order(n);
        let total = spec.support_size();
        let quota: Vec<u32> = subsets.iter().map(|s| (total / spec.m[s]) as u32).collect();
        let target: Vec<u32> = subsets.iter().map(|s| spec.m[s] as u32).collect();
        let nfib: Vec<usize> = subsets.iter().map(|&s| fiber_count(s, &sizes)).collect();
        let k_count = subsets.len();

        let mut fiber = Vec::with_capacity(cells * k_count);
        let mut fiber_cells: Vec<Vec<Vec<u32>>> = nfib.iter().map(|&f| vec![Vec::new(); f]).collect();
        let mut slice_cells: Vec<Vec<Vec<u32>>> = sizes.iter().map(|&s| vec![Vec::new(); s]).collect();
        for (cell, p) in coords.iter().enumerate() {
            for (k, &s) in subsets.iter().enumerate() {
                let f = fiber_index(p, s, &sizes);
                fiber.push(f);
                fiber_cells[k][f as usize].push(cell as u32);
            }
            for axis in 0..n {
                slice_cells[axis][p[axis] as usize].push(cell as u32);
            }
        }
        let pairs_of_cell = coords
            .iter()
            .map(|p| {
                let mut pairs = Vec::new();
                if config.symmetry_breaking {
                    for axis in 0..n {
                        let s = p[axis] as usize;
                        if s > 0 {
                            pairs.push((axis, s - 1));
                        }
                        if s + 1 < sizes[axis] {
                            pairs.push((axis, s));
                        }
                    }
                }
                pairs
            })
            .collect();

        let mut hints = Vec::new();
        let mut hints_by_subset = vec![Vec::new(); k_count];
        if config.use_hints {
            let pos = |s: Subset| subsets.iter().position(|&t| t == s).expect("nonempty subset");
            for hint in spec.hints() {
                let Hint::Independent(sa, sb) = hint else { continue };
                let sg = sa.union(sb);
                let (a, b, g) = (pos(sa), pos(sb), pos(sg));
                let mut split = vec![(0, 0); nfib[g]];
                let mut join = vec![vec![0u32; nfib[b]]; nfib[a]];
                for p in &coords {
                    let (fa, fb, fg) =
                        (fiber_index(p, sa, &sizes), fiber_index(p, sb, &sizes), fiber_index(p, sg, &sizes));
                    split[fg as usize] = (fa, fb);
                    join[fa as usize][fb as usize] = fg;
                }
                let id = hints.len();
                hints.push(HintTable { a, b, g, split, join });
                for k in [a, b, g] {
                    hints_by_subset[k].push(id);
                }
            }
        }
        Layout {
            sizes,
            cells,
            coords,
            k_count,
            quota,
            target,
            nfib,
            fiber,
            fiber_cells,
            slice_cells,
            pairs_of_cell,
            hints,
            hints_by_subset,
        }
    }
}

const UNDECIDED: u8 = 2;

#[derive(Debug, Clone)]
struct State {
    value: Vec<u8>,
    c: Vec<Vec<u32>>,
    u: Vec<Vec<u32>>,
    active: Vec<u32>,
    dead: Vec<u32>,
    /// Per slice pair: positions before `lex_pos` are equal in both slices.
    lex_pos: Vec<Vec<u32>>,
    /// Per slice pair: the lower slice is already strictly greater.
    lex_done: Vec<Vec<bool>>,
    cell_trail: Vec<u32>,
    lex_trail: Vec<(usize, usize, u32, bool)>,
    fiber_queue: Vec<(usize, u32)>,
    alpha_queue: Vec<usize>,
    pair_queue: Vec<(usize, usize)>,
}

enum Flow {
    Found,
    Exhausted,
    Stopped,
}

struct Budget<'a> {
    nodes: &'a AtomicU64,
    stop: &'a AtomicBool,
    local: u64,
    max_nodes: u64,
    /// `None` when the time limit is too large to represent.
    deadline: Option<Instant>,
}

impl Budget<'_> {
    /// Counts one node; false once any limit is hit.
    fn tick(&mut self) -> bool {
        self.local += 1;
        if self.local == 1024 {
            let total = self.nodes.fetch_add(self.local, Ordering::Relaxed) + self.local;
            self.local = 0;
            if total >= self.max_nodes || self.deadline.is_some_and(|d| Instant::now() >= d) {
                self.stop.store(true, Ordering::Relaxed);
            }
        }
        !self.stop.load(Ordering::Relaxed)
    }

    fn flush(&mut self) {
        self.nodes.fetch_add(self.local, Ordering::Relaxed);
        self.local = 0;
    }
}

impl State {
    fn new(layout: &Layout) -> State {
        let k_count = layout.k_count;
        let u: Vec<Vec<u32>> =
            (0..k_count).map(|k| vec![(layout.cells / layout.nfib[k]) as u32; layout.nfib[k]]).collect();
        let dead = (0..k_count).map(|k| u[k].iter().filter(|&&x| x < layout.quota[k]).count() as u32).collect();
        State {
            value: vec![UNDECIDED; layout.cells],
            c: layout.nfib.iter().map(|&f| vec![0; f]).collect(),
            u,
            active: vec![0; k_count],
            dead,
            lex_pos: layout.sizes.iter().map(|&s| vec![0; s.saturating_sub(1)]).collect(),
            lex_done: layout.sizes.iter().map(|&s| vec![false; s.saturating_sub(1)]).collect(),
            cell_trail: Vec::new(),
            lex_trail: Vec::new(),
            fiber_queue: Vec::new(),
            alpha_queue: Vec::new(),
            pair_queue: Vec::new(),
        }
    }

    /// Checks the empty assignment and applies the forced moves it implies.
    fn start(&mut self, layout: &Layout) -> bool {
        if (0..layout.k_count).any(|k| layout.nfib[k] as u32 - self.dead[k] < layout.target[k]) {
            return false;
        }
        self.alpha_queue.extend(0..layout.k_count);
        self.propagate(layout)
    }

    fn mark(&self) -> (usize, usize) {
        (self.cell_trail.len(), self.lex_trail.len())
    }

    /// Records `cell = v` and updates the fiber counters. Returns false on
    /// an immediate contradiction; the caller then undoes to its mark.
    fn set(&mut self, layout: &Layout, cell: usize, v: u8) -> bool {
        let current = self.value[cell];
        if current != UNDECIDED {
            return current == v;
        }
        self.value[cell] = v;
        self.cell_trail.push(cell as u32);
        let mut ok = true;
        let mut started: [(usize, u32); 16] = [(0, 0); 16];
        let mut n_started = 0;
        let mut died: [(usize, u32); 16] = [(0, 0); 16];
        let mut n_died = 0;
        for k in 0..layout.k_count {
            let f = layout.fiber[cell * layout.k_count + k];
            let fi = f as usize;
            let q = layout.quota[k];
            let target = layout.target[k];
            self.u[k][fi] -= 1;
            let u = self.u[k][fi];
            if v == 1 {
                self.c[k][fi] += 1;
                if self.c[k][fi] == 1 {
                    self.active[k] += 1;
                    if u + 1 < q {
                        // counted dead, now started: contradiction below
                        self.dead[k] -= 1;
                    } else {
                        started[n_started] = (k, f);
                        n_started += 1;
                    }
                    if self.active[k] == target {
                        self.alpha_queue.push(k);
                    }
                }
            } else if self.c[k][fi] == 0 && u + 1 == q {
                self.dead[k] += 1;
                died[n_died] = (k, f);
                n_died += 1;
                if layout.nfib[k] as u32 - self.dead[k] == target {
                    self.alpha_queue.push(k);
                }
            }
            let c = self.c[k][fi];
            if c > q || (c > 0 && c + u < q) {
                ok = false;
            }
            if self.active[k] > target || layout.nfib[k] as u32 - self.dead[k] < target {
                ok = false;
            }
            self.fiber_queue.push((k, f));
        }
        if ok && !layout.hints.is_empty() {
            ok = self.hints_hold(layout, &started[..n_started], &died[..n_died]);
        }
        self.pair_queue.extend_from_slice(&layout.pairs_of_cell[cell]);
        ok
    }

    fn hints_hold(&self, layout: &Layout, started: &[(usize, u32)], died: &[(usize, u32)]) -> bool {
        let live = |k: usize, f: usize| self.c[k][f] > 0;
        let dead = |k: usize, f: usize| self.c[k][f] == 0 && self.u[k][f] < layout.quota[k];
        for &(k, f) in started {
            let f = f as usize;
            for &id in &layout.hints_by_subset[k] {
                let h = &layout.hints[id];
                if k == h.a && (0..layout.nfib[h.b]).any(|b| live(h.b, b) && dead(h.g, h.join[f][b] as usize)) {
                    return false;
                }
                if k == h.b && (0..layout.nfib[h.a]).any(|a| live(h.a, a) && dead(h.g, h.join[a][f] as usize)) {
                    return false;
                }
            }
        }
        for &(k, f) in died {
            for &id in &layout.hints_by_subset[k] {
                let h = &layout.hints[id];
                if k == h.g {
                    let (a, b) = h.split[f as usize];
                    if live(h.a, a as usize) && live(h.b, b as usize) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Forces every undecided cell of a fiber to `v`.
    fn fill(&mut self, layout: &Layout, k: usize, f: usize, v: u8) -> bool {
        for &cell in &layout.fiber_cells[k][f] {
            if self.value[cell as usize] == UNDECIDED && !self.set(layout, cell as usize, v) {
                return false;
            }
        }
        true
    }

    fn check_fiber(&mut self, layout: &Layout, k: usize, f: usize) -> bool {
        let (c, u, q) = (self.c[k][f], self.u[k][f], layout.quota[k]);
        if c > q || (c > 0 && c + u < q) {
            return false;
        }
        if u == 0 {
            return true;
        }
        if c == q {
            return self.fill(layout, k, f, 0);
        }
        if c > 0 && c + u == q {
            return self.fill(layout, k, f, 1);
        }
        if c == 0 {
            if u < q || self.active[k] == layout.target[k] {
                return self.fill(layout, k, f, 0);
            }
            // every fiber that can still start must start
            if u == q && layout.nfib[k] as u32 - self.dead[k] == layout.target[k] {
                return self.fill(layout, k, f, 1);
            }
        }
        true
    }

    /// Keeps slice `s` lexicographically at least slice `s + 1` along `axis`.
    fn check_pair(&mut self, layout: &Layout, axis: usize, s: usize) -> bool {
        if self.lex_done[axis][s] {
            return true;
        }
        let old_pos = self.lex_pos[axis][s];
        let mut pos = old_pos as usize;
        let mut done = false;
        let mut ok = true;
        let hi = &layout.slice_cells[axis][s];
        let lo = &layout.slice_cells[axis][s + 1];
        while pos < hi.len() {
            let (ca, cb) = (hi[pos] as usize, lo[pos] as usize);
            let (a, b) = (self.value[ca], self.value[cb]);
            match (a, b) {
                (UNDECIDED, UNDECIDED) | (1, UNDECIDED) | (UNDECIDED, 0) => break,
                (0, UNDECIDED) => {
                    if !self.set(layout, cb, 0) {
                        ok = false;
                        break;
                    }
                }
                (UNDECIDED, 1) => {
                    if !self.set(layout, ca, 1) {
                        ok = false;
                        break;
                    }
                }
                _ if a > b => {
                    done = true;
                    break;
                }
                _ if a < b => {
                    ok = false;
                    break;
                }
                _ => {}
            }
            pos += 1;
        }
        if pos as u32 != old_pos || done {
            self.lex_trail.push((axis, s, old_pos, false));
            self.lex_pos[axis][s] = pos as u32;
            self.lex_done[axis][s] = done;
        }
        ok
    }

    fn propagate(&mut self, layout: &Layout) -> bool {
        let ok = loop {
            if let Some((k, f)) = self.fiber_queue.pop() {
                if !self.check_fiber(layout, k, f as usize) {
                    break false;
                }
            } else if let Some((axis, s)) = self.pair_queue.pop() {
                if !self.check_pair(layout, axis, s) {
                    break false;
                }
            } else if let Some(k) = self.alpha_queue.pop() {
                for f in 0..layout.nfib[k] {
                    if self.c[k][f] == 0 && self.u[k][f] > 0 {
                        self.fiber_queue.push((k, f as u32));
                    }
                }
            } else {
                break true;
            }
        };
        if !ok {
            self.fiber_queue.clear();
            self.pair_queue.clear();
            self.alpha_queue.clear();
        }
        ok
    }

    fn undo(&mut self, layout: &Layout, mark: (usize, usize)) {
        while self.cell_trail.len() > mark.0 {
            let cell = self.cell_trail.pop().expect("nonempty trail") as usize;
            let v = self.value[cell];
            self.value[cell] = UNDECIDED;
            for k in 0..layout.k_count {
                let f = layout.fiber[cell * layout.k_count + k] as usize;
                let q = layout.quota[k];
                let u_before = self.u[k][f];
                self.u[k][f] += 1;
                if v == 1 {
                    self.c[k][f] -= 1;
                    if self.c[k][f] == 0 {
                        self.active[k] -= 1;
                        if u_before + 1 < q {
                            self.dead[k] += 1;
                        }
                    }
                } else if self.c[k][f] == 0 && u_before + 1 == q {
                    self.dead[k] -= 1;
                }
            }
        }
        while self.lex_trail.len() > mark.1 {
            let (axis, s, pos, done) = self.lex_trail.pop().expect("nonempty trail");
            self.lex_pos[axis][s] = pos;
            self.lex_done[axis][s] = done;
        }
    }

    fn try_value(&mut self, layout: &Layout, cell: usize, v: u8) -> bool {
        self.set(layout, cell, v) && self.propagate(layout)
    }

    /// The first undecided cell (row-major) of the started fiber with the
    /// fewest spare cells, or `from` (the first undecided cell overall).
    fn choose(&self, layout: &Layout, from: usize) -> Option<usize> {
        let mut best: Option<(u32, usize, usize)> = None;
        for k in 0..layout.k_count - 1 {
            let q = layout.quota[k];
            for f in 0..layout.nfib[k] {
                let (c, u) = (self.c[k][f], self.u[k][f]);
                if c == 0 || u == 0 {
                    continue;
                }
                let slack = u - (q - c);
                if best.is_none_or(|(b, _, _)| slack < b) {
                    best = Some((slack, k, f));
                }
            }
        }
        match best {
            Some((_, k, f)) => {
                layout.fiber_cells[k][f].iter().map(|&c| c as usize).find(|&c| self.value[c] == UNDECIDED)
            }
            None => Some(from),
        }
    }

    fn first_undecided(&self, layout: &Layout, from: usize) -> Option<usize> {
        (from..layout.cells).find(|&c| self.value[c] == UNDECIDED)
    }

    fn dfs(&mut self, layout: &Layout, budget: &mut Budget, from: usize) -> Flow {
        let Some(from) = self.first_undecided(layout, from) else {
            return Flow::Found;
        };
        let cell = self.choose(layout, from).expect("an undecided cell exists");
        for v in [1u8, 0] {
            if !budget.tick() {
                return Flow::Stopped;
            }
            let mark = self.mark();
            if self.try_value(layout, cell, v) {
                match self.dfs(layout, budget, from) {
                    Flow::Exhausted => {}
                    other => return other,
                }
            }
            self.undo(layout, mark);
        }
        Flow::Exhausted
    }

    /// Consistent states after `depth` branching decisions, in the order the
    /// sequential search would reach them.
    fn frontier(&mut self, layout: &Layout, from: usize, depth: usize, out: &mut Vec<(State, usize)>) {
        let next = self.first_undecided(layout, from);
        let Some(from) = next.filter(|_| depth > 0) else {
            out.push((self.clone(), from));
            return;
        };
        let cell = self.choose(layout, from).expect("an undecided cell exists");
        for v in [1u8, 0] {
            let mark = self.mark();
            if self.try_value(layout, cell, v) {
                self.frontier(layout, from, depth - 1, out);
            }
            self.undo(layout, mark);
        }
    }

    fn witness(&self, layout: &Layout) -> Result<JointPMF> {
        let support = (0..layout.cells).filter(|&c| self.value[c] == 1).map(|c| layout.coords[c].clone());
        JointPMF::uniform(layout.sizes.clone(), support)
    }
}

fn check_searchable(spec: &SupportSpec) -> Result<u64> {
    if spec.n > MAX_SEARCH_N {
        return Err(Error::UnsupportedArity(spec.n));
    }
    let feasibility = check_feasibility_necessary(spec);
    if !feasibility.ok {
        let reasons: Vec<String> = feasibility.violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::InvalidSpec(reasons.join("; ")));
    }
    let cells = spec.grid_cells().unwrap_or(u64::MAX);
    if cells > MAX_SEARCH_CELLS {
        return Err(Error::GridTooLarge { cells, cap: MAX_SEARCH_CELLS });
    }
    Ok(cells)
}

/// Searches for a quasi-uniform realization of `spec`.
///
/// Errors if the spec fails [`check_feasibility_necessary`], has more than
/// [`MAX_SEARCH_N`] variables, or a grid over [`MAX_SEARCH_CELLS`].
pub fn search(spec: &SupportSpec, config: &SearchConfig) -> Result<SearchOutcome> {
    check_searchable(spec)?;
    let start = Instant::now();
    let layout = Layout::new(spec, config);
    let nodes = AtomicU64::new(0);
    let stop = AtomicBool::new(false);
    let deadline = start.checked_add(config.max_time);
    let make_budget = || Budget { nodes: &nodes, stop: &stop, local: 0, max_nodes: config.max_nodes, deadline };

    let mut root = State::new(&layout);
    if !root.start(&layout) {
        return Ok(SearchOutcome {
            status: SearchStatus::ExhaustedInfeasible,
            nodes_explored: 0,
            elapsed: start.elapsed(),
        });
    }

    let status = if config.parallel {
        let mut frontier = Vec::new();
        root.frontier(&layout, 0, 6, &mut frontier);
        let found = AtomicBool::new(false);
        let results: Vec<(usize, Flow, State)> = frontier
            .into_par_iter()
            .enumerate()
            .map(|(i, (mut st, from))| {
                if found.load(Ordering::Relaxed) {
                    return (i, Flow::Stopped, st);
                }
                let mut budget = make_budget();
                let flow = st.dfs(&layout, &mut budget, from);
                budget.flush();
                if matches!(flow, Flow::Found) {
                    found.store(true, Ordering::Relaxed);
                    stop.store(true, Ordering::Relaxed);
                }
                (i, flow, st)
            })
            .collect();
        if let Some((_, _, st)) = results.iter().find(|(_, f, _)| matches!(f, Flow::Found)) {
            SearchStatus::Found(st.witness(&layout)?)
        } else if results.iter().any(|(_, f, _)| matches!(f, Flow::Stopped)) {
            SearchStatus::BudgetExceeded
        } else {
            SearchStatus::ExhaustedInfeasible
        }
    } else {
        let mut budget = make_budget();
        let flow = root.dfs(&layout, &mut budget, 0);
        budget.flush();
        match flow {
            Flow::Found => SearchStatus::Found(root.witness(&layout)?),
            Flow::Exhausted => SearchStatus::ExhaustedInfeasible,
            Flow::Stopped => SearchStatus::BudgetExceeded,
        }
    };
    Ok(SearchOutcome { status, nodes_explored: nodes.load(Ordering::Relaxed), elapsed: start.elapsed() })
}

/// Whether the uniform distribution on `points` has exactly the sizes in
/// `spec`, checked by counting projections directly.
fn realizes(spec: &SupportSpec, points: &[&Point]) -> bool {
    let total = points.len() as u64;
    if total != spec.support_size() {
        return false;
    }
    for s in canonical_order(spec.n) {
        let m = spec.m[&s];
        if !total.is_multiple_of(m) {
            return false;
        }
        let mut counts: HashMap<Vec<u32>, u64> = HashMap::new();
        for p in points {
            let key: Vec<u32> = s.positions().iter().map(|&v| p[v]).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
        if counts.len() as u64 != m || counts.values().any(|&c| c != total / m) {
            return false;
        }
    }
    true
}

/// Tries every support of size `m_[n]` on the grid, in lexicographic order
/// of row-major cell indices. No pruning and no symmetry breaking.
pub fn brute_force_oracle(spec: &SupportSpec, cap: u64) -> Result<SearchOutcome> {
    let start = Instant::now();
    let cells = spec.grid_cells().unwrap_or(u64::MAX);
    if cells > cap {
        return Err(Error::GridTooLarge { cells, cap });
    }
    let sizes: Vec<usize> = spec.alphabet_sizes().iter().map(|&s| s as usize).collect();
    let grid = grid_points(&sizes);
    let k = spec.support_size() as usize;
    let mut nodes = 0u64;
    let status = 'outer: {
        if k > grid.len() {
            break 'outer SearchStatus::ExhaustedInfeasible;
        }
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            nodes += 1;
            let pts: Vec<&Point> = idx.iter().map(|&i| &grid[i]).collect();
            if realizes(spec, &pts) {
                let pmf = JointPMF::uniform(sizes.clone(), pts.into_iter().cloned())?;
                break 'outer SearchStatus::Found(pmf);
            }
            let Some(i) = (0..k).rev().find(|&i| idx[i] != i + grid.len() - k) else {
                break 'outer SearchStatus::ExhaustedInfeasible;
            };
            idx[i] += 1;
            for j in (i + 1)..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    };
    Ok(SearchOutcome { status, nodes_explored: nodes, elapsed: start.elapsed() })
}

/// Whether `pmf` is quasi-uniform with support sizes exactly `spec`.
pub fn verify_witness(spec: &SupportSpec, pmf: &JointPMF) -> bool {
    let verdict = pmf.is_quasi_uniform();
    verdict.is_qu
        && pmf.n() == spec.n
        && canonical_order(spec.n).iter().all(|s| verdict.support_sizes.get(s) == Some(&spec.m[s]))
        && pmf.entropy_vector() == spec.entropy_vector()
}
