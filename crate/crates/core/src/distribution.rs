//! Exact pattern-count distributions over all maps of a given size.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::enumerate::{fold_maps, Limits};
use crate::error::Result;
use crate::map::{MapClass, RootedMap};
use crate::pattern::{find_occurrences, intersect_unchecked, Pattern};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub n: usize,
    /// `histogram[l]` is the number of maps with exactly `l` occurrences.
    pub histogram: Vec<u64>,
}

fn merge_hist(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    if a.len() < b.len() {
        a.resize(b.len(), 0);
    }
    for (i, x) in b.into_iter().enumerate() {
        a[i] += x;
    }
    a
}

fn bump(mut h: Vec<u64>, i: usize) -> Vec<u64> {
    if h.len() <= i {
        h.resize(i + 1, 0);
    }
    h[i] += 1;
    h
}

pub fn falling(l: usize, k: usize) -> BigUint {
    if l < k {
        return BigUint::zero();
    }
    (0..k).fold(BigUint::from(1u32), |acc, i| acc * (l - i))
}

impl DistributionTable {
    pub fn total(&self) -> u64 {
        self.histogram.iter().sum()
    }

    /// `sum_l (l)_k m_{n,l}`.
    pub fn factorial_moment_numerator(&self, k: usize) -> BigUint {
        self.histogram.iter().enumerate().map(|(l, &m)| falling(l, k) * m).sum()
    }

    pub fn factorial_moment(&self, k: usize) -> f64 {
        ratio(&self.factorial_moment_numerator(k), self.total())
    }

    pub fn mean(&self) -> f64 {
        self.factorial_moment(1)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.factorial_moment(2) + m - m * m
    }
}

pub(crate) fn ratio(num: &BigUint, den: u64) -> f64 {
    num.to_f64().unwrap_or(f64::INFINITY) / den as f64
}

pub fn exact_distribution(n: usize, cls: MapClass, p: &Pattern, limits: &Limits) -> Result<DistributionTable> {
    let histogram = fold_maps(
        n,
        cls,
        limits,
        Vec::new,
        |h, m| bump(h, find_occurrences(m, p).len()),
        merge_hist,
    )?;
    Ok(DistributionTable { n, histogram })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledConfigCounts {
    pub n: usize,
    pub k: usize,
    /// Maps with `k` labeled distinct occurrences: `sum (X)_k`.
    pub m_circ: BigUint,
    /// The same, restricted to configurations in which every labeled
    /// occurrence intersects at most one other.
    pub m_circ_cross: BigUint,
}

/// Number of `k`-subsets of occurrences in which each member meets at most
/// one other member.
fn pairwise_subsets(adj: &[Vec<bool>], k: usize) -> u64 {
    fn rec(adj: &[Vec<bool>], k: usize, start: usize, chosen: &mut Vec<usize>, deg: &mut Vec<u32>) -> u64 {
        if chosen.len() == k {
            return 1;
        }
        let mut total = 0;
        for i in start..adj.len() {
            let hits: Vec<usize> = chosen.iter().copied().filter(|&j| adj[i][j]).collect();
            if hits.len() > 1 || hits.iter().any(|&j| deg[j] >= 1) {
                continue;
            }
            for &j in &hits {
                deg[j] += 1;
            }
            deg[i] = hits.len() as u32;
            chosen.push(i);
            total += rec(adj, k, i + 1, chosen, deg);
            chosen.pop();
            deg[i] = 0;
            for &j in &hits {
                deg[j] -= 1;
            }
        }
        total
    }
    rec(adj, k, 0, &mut Vec::new(), &mut vec![0; adj.len()])
}

fn per_map_counts(m: &RootedMap, p: &Pattern, k: usize) -> (BigUint, u64) {
    let occ = find_occurrences(m, p);
    let x = occ.len();
    if x < k {
        return (BigUint::zero(), 0);
    }
    let adj: Vec<Vec<bool>> = (0..x)
        .map(|i| (0..x).map(|j| i != j && intersect_unchecked(m, &occ[i], &occ[j])).collect())
        .collect();
    (falling(x, k), pairwise_subsets(&adj, k))
}

pub fn labeled_config_counts(n: usize, k: usize, cls: MapClass, p: &Pattern, limits: &Limits) -> Result<LabeledConfigCounts> {
    let (m_circ, subsets) = fold_maps(
        n,
        cls,
        limits,
        || (BigUint::zero(), BigUint::zero()),
        |(a, b), m| {
            let (x, y) = per_map_counts(m, p, k);
            (a + x, b + y)
        },
        |(a, b), (c, d)| (a + c, b + d),
    )?;
    let kfact: BigUint = (1..=k).fold(BigUint::from(1u32), |acc, i| acc * i);
    Ok(LabeledConfigCounts { n, k, m_circ, m_circ_cross: subsets * kfact })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub n: usize,
    /// `histogram[d]` is the number of maps with maximal degree `d`.
    pub histogram: Vec<u64>,
}

impl DegreeStats {
    pub fn total(&self) -> u64 {
        self.histogram.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        let s: u64 = self.histogram.iter().enumerate().map(|(d, &c)| d as u64 * c).sum();
        s as f64 / self.total() as f64
    }

    /// Fraction of maps with maximal degree at least `d`.
    pub fn tail(&self, d: usize) -> f64 {
        let s: u64 = self.histogram.iter().skip(d).sum();
        s as f64 / self.total() as f64
    }
}

pub fn degree_stats(n: usize, cls: MapClass, limits: &Limits) -> Result<DegreeStats> {
    let histogram = fold_maps(n, cls, limits, Vec::new, |h, m| bump(h, m.max_degree()), merge_hist)?;
    Ok(DegreeStats { n, histogram })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_stats_n1() {
        let d = degree_stats(1, MapClass::All, &Limits::default()).unwrap();
        assert_eq!(d.histogram, vec![0, 1, 1]);
        assert!((d.mean() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn fly_at_two_edges() {
        let t = exact_distribution(2, MapClass::All, &Pattern::fly(), &Limits::default()).unwrap();
        assert_eq!(t.histogram, vec![9]);
        let t = exact_distribution(4, MapClass::All, &Pattern::fly(), &Limits::default()).unwrap();
        assert_eq!(t.total(), 378);
    }

    #[test]
    fn pairwise_subset_counting() {
        // path a-b-c: {a,b},{b,c},{a,c} are fine, {a,b,c} is not
        let adj = vec![vec![false, true, false], vec![true, false, true], vec![false, true, false]];
        assert_eq!(pairwise_subsets(&adj, 2), 3);
        assert_eq!(pairwise_subsets(&adj, 3), 0);
        assert_eq!(pairwise_subsets(&adj, 0), 1);
    }
}
