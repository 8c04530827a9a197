//! Combinatorial action sets: subsets of `{0,1}^d` with exactly `m` ones.

use crate::error::{Error, Result};

/// Default cap on the number of actions produced by [`make_all_msubsets`].
pub const DEFAULT_SUBSET_CAP: usize = 10_000;

/// A nonempty list of distinct actions, each with exactly `m` active
/// coordinates.
///
/// Actions are kept in canonical order: by their sorted support, compared
/// lexicographically. The indicator `10` (support `{0}`) therefore precedes
/// `01` (support `{1}`), and action index order doubles as the tie-breaking
/// order for optimal actions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSet {
    d: usize,
    m: usize,
    supports: Vec<Vec<usize>>,
    membership: Vec<Vec<bool>>,
}

impl ActionSet {
    /// Build from indicator vectors of length `d`.
    pub fn new(d: usize, indicators: &[Vec<bool>]) -> Result<Self> {
        let mut supports = Vec::with_capacity(indicators.len());
        for (k, ind) in indicators.iter().enumerate() {
            if ind.len() != d {
                return Err(Error::config(format!(
                    "action {k} has length {} but d = {d}",
                    ind.len()
                )));
            }
            supports.push(ind.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect());
        }
        Self::from_supports(d, supports)
    }

    /// Build from supports (lists of active coordinates).
    pub fn from_supports(d: usize, mut supports: Vec<Vec<usize>>) -> Result<Self> {
        if supports.is_empty() {
            return Err(Error::config("empty action set"));
        }
        for s in supports.iter_mut() {
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::config("action support lists a coordinate twice"));
            }
            if let Some(&last) = s.last() {
                if last >= d {
                    return Err(Error::config(format!("coordinate {last} out of range for d = {d}")));
                }
            }
        }
        let m = supports[0].len();
        if m == 0 {
            return Err(Error::config("actions must have at least one active coordinate"));
        }
        if supports.iter().any(|s| s.len() != m) {
            return Err(Error::config("all actions must have the same cardinality m"));
        }
        supports.sort();
        if supports.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("duplicate action"));
        }
        let membership = supports
            .iter()
            .map(|s| {
                let mut row = vec![false; d];
                for &i in s {
                    row[i] = true;
                }
                row
            })
            .collect();
        Ok(ActionSet { d, m, supports, membership })
    }

    /// The `d` singleton actions (bandit / expert setting).
    pub fn singletons(d: usize) -> Result<Self> {
        Self::from_supports(d, (0..d).map(|i| vec![i]).collect())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.supports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supports.is_empty()
    }

    pub fn support(&self, a: usize) -> &[usize] {
        &self.supports[a]
    }

    pub fn supports(&self) -> &[Vec<usize>] {
        &self.supports
    }

    pub fn contains(&self, a: usize, i: usize) -> bool {
        self.membership[a][i]
    }

    pub fn indicator(&self, a: usize) -> Vec<bool> {
        self.membership[a].clone()
    }

    /// Index of the action with the given indicator vector, if present.
    pub fn index_of(&self, indicator: &[bool]) -> Option<usize> {
        self.membership.iter().position(|row| row.as_slice() == indicator)
    }

    /// Binary string such as `"1100"`.
    pub fn label(&self, a: usize) -> String {
        self.membership[a].iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// `d/m` disjoint intervals of `m` consecutive coordinates.
pub fn make_interval_actions(d: usize, m: usize) -> Result<ActionSet> {
    if m == 0 || d == 0 || !d.is_multiple_of(m) {
        return Err(Error::config(format!("interval actions need m | d (d = {d}, m = {m})")));
    }
    ActionSet::from_supports(d, (0..d / m).map(|k| (k * m..(k + 1) * m).collect()).collect())
}

/// All `C(d, m)` subsets of size `m`, in lexicographic order of supports.
pub fn make_all_msubsets(d: usize, m: usize, cap: usize) -> Result<ActionSet> {
    if m == 0 || m > d {
        return Err(Error::config(format!("need 1 <= m <= d (d = {d}, m = {m})")));
    }
    let count = binomial(d, m);
    if count > cap as f64 {
        return Err(Error::size(format!("C({d},{m}) = {count} exceeds the cap of {cap} actions")));
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut comb: Vec<usize> = (0..m).collect();
    loop {
        out.push(comb.clone());
        // advance to the next combination
        let mut k = m;
        while k > 0 && comb[k - 1] == d - m + k - 1 {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        comb[k - 1] += 1;
        for j in k..m {
            comb[j] = comb[j - 1] + 1;
        }
    }
    ActionSet::from_supports(d, out)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64).round()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(a: &ActionSet) -> Vec<String> {
        (0..a.len()).map(|k| a.label(k)).collect()
    }

    #[test]
    fn interval_actions() {
        assert_eq!(labels(&make_interval_actions(4, 2).unwrap()), ["1100", "0011"]);
        assert_eq!(labels(&make_interval_actions(3, 1).unwrap()), ["100", "010", "001"]);
        assert_eq!(labels(&make_interval_actions(6, 3).unwrap()), ["111000", "000111"]);
        assert!(matches!(make_interval_actions(5, 2), Err(Error::Config(_))));
    }

    #[test]
    fn all_subsets() {
        assert_eq!(make_all_msubsets(3, 1, DEFAULT_SUBSET_CAP).unwrap().len(), 3);
        let six = make_all_msubsets(4, 2, DEFAULT_SUBSET_CAP).unwrap();
        assert_eq!(labels(&six), ["1100", "1010", "1001", "0110", "0101", "0011"]);
        assert_eq!(labels(&make_all_msubsets(2, 2, DEFAULT_SUBSET_CAP).unwrap()), ["11"]);
        assert!(matches!(make_all_msubsets(30, 15, DEFAULT_SUBSET_CAP), Err(Error::Size(_))));
    }

    #[test]
    fn rejects_bad_sets() {
        assert!(ActionSet::from_supports(3, vec![]).is_err());
        assert!(ActionSet::from_supports(3, vec![vec![0, 1], vec![2]]).is_err());
        assert!(ActionSet::from_supports(3, vec![vec![0], vec![0]]).is_err());
        assert!(ActionSet::from_supports(3, vec![vec![3]]).is_err());
    }

    #[test]
    fn canonical_order_and_lookup() {
        let a = ActionSet::new(3, &[vec![false, false, true], vec![true, false, false]]).unwrap();
        assert_eq!(labels(&a), ["100", "001"]);
        assert_eq!(a.index_of(&[false, false, true]), Some(1));
        assert!(a.contains(0, 0) && !a.contains(0, 2));
    }
}
