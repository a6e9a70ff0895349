//! Nonempty subsets of `[n]` as bitmasks, and the canonical coordinate order.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest number of variables a subset mask can address.
pub const MAX_VARS: usize = 16;

/// A subset of `{1, ..., n}`; bit `i - 1` marks variable `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subset(u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn from_mask(mask: u32) -> Subset {
        Subset(mask)
    }

    /// From 1-based variable labels.
    pub fn from_vars(vars: &[usize]) -> Result<Subset> {
        let mut mask = 0u32;
        for &v in vars {
            if v == 0 || v > MAX_VARS {
                return Err(Error::SubsetOutOfRange { mask: 0, n: MAX_VARS });
            }
            mask |= 1 << (v - 1);
        }
        Ok(Subset(mask))
    }

    pub fn full(n: usize) -> Subset {
        Subset(((1u64 << n) - 1) as u32)
    }

    pub fn singleton(var: usize) -> Subset {
        Subset(1 << (var - 1))
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, var: usize) -> bool {
        var >= 1 && self.0 & (1 << (var - 1)) != 0
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: Subset) -> Subset {
        Subset(self.0 | other.0)
    }

    pub fn intersection(self, other: Subset) -> Subset {
        Subset(self.0 & other.0)
    }

    pub fn difference(self, other: Subset) -> Subset {
        Subset(self.0 & !other.0)
    }

    pub fn is_disjoint(self, other: Subset) -> bool {
        self.0 & other.0 == 0
    }

    /// 1-based variable labels in increasing order.
    pub fn vars(self) -> Vec<usize> {
        (0..32).filter(|i| self.0 & (1 << i) != 0).map(|i| i + 1).collect()
    }

    /// 0-based variable positions in increasing order.
    pub fn positions(self) -> Vec<usize> {
        (0..32).filter(|i| self.0 & (1 << i) != 0).collect()
    }

    pub fn within(self, n: usize) -> bool {
        n <= 32 && (n == 32 || self.0 >> n == 0)
    }

    /// Image under the relabeling `i -> perm[i - 1]` (1-based labels).
    pub fn permute(self, perm: &[usize]) -> Subset {
        let mut out = 0u32;
        for v in self.vars() {
            out |= 1 << (perm[v - 1] - 1);
        }
        Subset(out)
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars = self.vars();
        if vars.iter().all(|&v| v < 10) {
            for v in vars {
                write!(f, "{v}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = vars.iter().map(|v| v.to_string()).collect();
            write!(f, "{{{}}}", parts.join(","))
        }
    }
}

impl FromStr for Subset {
    type Err = Error;

    /// Accepts digit strings such as `"13"` or braced lists such as `"{1,10}"`.
    fn from_str(s: &str) -> Result<Subset> {
        let s = s.trim();
        let bad = || Error::InvalidVector(format!("bad subset label {s:?}"));
        let vars: Vec<usize> = if let Some(inner) = s.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
            inner.split(',').map(|t| t.trim().parse::<usize>().map_err(|_| bad())).collect::<Result<_>>()?
        } else {
            s.chars().map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(bad)).collect::<Result<_>>()?
        };
        if vars.is_empty() {
            return Err(Error::EmptySubset);
        }
        Subset::from_vars(&vars)
    }
}

/// Nonempty subsets of `[n]` sorted by cardinality, then lexicographically
/// by their increasing element lists. For `n = 3`:
/// `1, 2, 3, 12, 13, 23, 123`.
pub fn canonical_order(n: usize) -> Vec<Subset> {
    let mut all: Vec<Subset> = (1..(1u32 << n)).map(Subset).collect();
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.vars().cmp(&b.vars())));
    all
}

/// Position of `s` in [`canonical_order`].
pub fn coord_index(n: usize, s: Subset) -> Option<usize> {
    if s.is_empty() || !s.within(n) {
        return None;
    }
    canonical_order(n).iter().position(|&t| t == s)
}

/// Number of variables `n` with `2^n - 1 = len`.
pub fn arity_for_len(len: usize) -> Option<usize> {
    let n = (len + 1).trailing_zeros() as usize;
    (len > 0 && (1usize << n) == len + 1).then_some(n)
}

/// All permutations of `1..=n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i + 1);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_for_three() {
        let names: Vec<String> = canonical_order(3).iter().map(|s| s.to_string()).collect();
        assert_eq!(names, ["1", "2", "3", "12", "13", "23", "123"]);
    }

    #[test]
    fn order_for_four_is_by_size_then_lex() {
        let names: Vec<String> = canonical_order(4).iter().map(|s| s.to_string()).collect();
        assert_eq!(&names[4..10], ["12", "13", "14", "23", "24", "34"]);
        assert_eq!(names.len(), 15);
        assert_eq!(names[14], "1234");
    }

    #[test]
    fn parse_and_display() {
        let s: Subset = "13".parse().unwrap();
        assert_eq!(s.vars(), vec![1, 3]);
        assert_eq!(s.to_string(), "13");
        assert!("".parse::<Subset>().is_err());
        assert!("1x".parse::<Subset>().is_err());
        let big: Subset = "{1,10}".parse().unwrap();
        assert_eq!(big.to_string(), "{1,10}");
    }

    #[test]
    fn arity() {
        assert_eq!(arity_for_len(7), Some(3));
        assert_eq!(arity_for_len(1), Some(1));
        assert_eq!(arity_for_len(6), None);
        assert_eq!(arity_for_len(0), None);
    }

    #[test]
    fn permute_relabels() {
        let s = Subset::from_vars(&[1, 2]).unwrap();
        assert_eq!(s.permute(&[2, 3, 1]).vars(), vec![2, 3]);
        assert_eq!(permutations(3).len(), 6);
    }
}
