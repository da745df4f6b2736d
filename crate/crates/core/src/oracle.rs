//! Exhaustive reference answers for small inputs.
//!
//! Nothing here prunes. Enumeration size is checked up front and an
//! oversized request fails instead of returning a partial answer.

use rayon::prelude::*;

use crate::ann::PointSpace;
use crate::error::{Error, Result};
use crate::gadgets::Graph;
use crate::metric::{le_tol, ratio_extremes, targets_within, FiniteMetric, Matching};

/// Largest number of candidates any oracle will enumerate.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

/// `n!/(n−k)!`, saturating.
pub fn injection_count(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (n - k + 1..=n).fold(1u128, |acc, v| acc.saturating_mul(v as u128))
}

/// `C(m, k)`, saturating.
pub fn subset_count(m: usize, k: usize) -> u128 {
    if k > m {
        return 0;
    }
    let k = k.min(m - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((m - i) as u128) / (i as u128 + 1))
}

fn guard(count: u128) -> Result<()> {
    if count > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

/// Calls `visit` on every injection `{0..k} → {0..n}` whose first target
/// is `first`, in lexicographic order. Stops early when `visit` says so.
fn injections_from(n: usize, k: usize, first: usize, mut visit: impl FnMut(&[usize]) -> bool) {
    let mut current = vec![first];
    let mut used = vec![false; n];
    used[first] = true;
    fn go(
        n: usize,
        k: usize,
        current: &mut Vec<usize>,
        used: &mut [bool],
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if current.len() == k {
            return visit(current);
        }
        for t in 0..n {
            if used[t] {
                continue;
            }
            used[t] = true;
            current.push(t);
            let more = go(n, k, current, used, visit);
            current.pop();
            used[t] = false;
            if !more {
                return false;
            }
        }
        true
    }
    go(n, k, &mut current, &mut used, &mut visit);
}

fn check_sizes(x: &FiniteMetric, y: &FiniteMetric) -> Result<()> {
    if x.is_empty() {
        return Err(Error::EmptySubset);
    }
    if x.len() > y.len() {
        return Err(Error::PatternTooLarge { k: x.len(), n: y.len() });
    }
    guard(injection_count(y.len(), x.len()))
}

/// Every ρ-matching of `X` into `Y` in lexicographic order, or only the
/// first `limit` of them.
pub fn brute_rho_matchings(
    x: &FiniteMetric,
    y: &FiniteMetric,
    rho: f64,
    limit: Option<usize>,
) -> Result<Vec<Matching>> {
    check_sizes(x, y)?;
    let k = x.len();
    let cap = limit.unwrap_or(usize::MAX);
    let per_first: Vec<Vec<Matching>> = (0..y.len())
        .into_par_iter()
        .map(|first| {
            let mut found = Vec::new();
            injections_from(y.len(), k, first, |t| {
                if targets_within(t, x, y, rho) {
                    found.push(Matching::from_vec_unchecked(t.to_vec()));
                }
                found.len() < cap
            });
            found
        })
        .collect();
    let mut all: Vec<Matching> = per_first.into_iter().flatten().collect();
    all.truncate(cap);
    Ok(all)
}

/// Whether any ρ-matching exists.
pub fn rho_matching_exists(x: &FiniteMetric, y: &FiniteMetric, rho: f64) -> Result<bool> {
    Ok(!brute_rho_matchings(x, y, rho, Some(1))?.is_empty())
}

/// The minimum distortion over all injections, with the lexicographically
/// first injection attaining it.
pub fn brute_min_distortion(x: &FiniteMetric, y: &FiniteMetric) -> Result<(f64, Matching)> {
    if x.len() < 2 {
        return Err(Error::TooFewPoints(x.len()));
    }
    check_sizes(x, y)?;
    let k = x.len();
    let best = (0..y.len())
        .into_par_iter()
        .map(|first| {
            let mut best: Option<(f64, Vec<usize>)> = None;
            injections_from(y.len(), k, first, |t| {
                let (e, inv) = ratio_extremes(t, x, y);
                let value = e * inv;
                if best.as_ref().is_none_or(|(b, _)| value < *b) {
                    best = Some((value, t.to_vec()));
                }
                true
            });
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .expect("at least one injection");
    Ok((best.0, Matching::from_vec_unchecked(best.1)))
}

/// The lexicographically first `k`-clique of `g`.
pub fn brute_k_clique(g: &Graph, k: usize) -> Result<Option<Vec<usize>>> {
    guard(subset_count(g.m(), k))?;
    if k > g.m() {
        return Ok(None);
    }
    if k == 0 {
        return Ok(Some(Vec::new()));
    }
    let mut pick: Vec<usize> = (0..k).collect();
    loop {
        let clique = (0..k).all(|a| (a + 1..k).all(|b| g.has_edge(pick[a], pick[b])));
        if clique {
            return Ok(Some(pick));
        }
        // Next k-subset in lexicographic order.
        let Some(i) = (0..k).rev().find(|&i| pick[i] < g.m() - k + i) else {
            return Ok(None);
        };
        pick[i] += 1;
        for j in i + 1..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

/// Exact nearest active point by linear scan, smallest index on ties.
pub fn brute_nn<S: PointSpace + ?Sized>(space: &S, active: &[usize], q: &S::Query) -> Result<(usize, f64)> {
    active
        .iter()
        .map(|&p| (p, space.query_distance(q, p)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .ok_or(Error::EmptyIndex)
}

/// Active points within `r` of `q` (shared boundary tolerance), ascending.
pub fn brute_range<S: PointSpace + ?Sized>(space: &S, active: &[usize], q: &S::Query, r: f64) -> Vec<usize> {
    let mut out: Vec<usize> = active
        .iter()
        .copied()
        .filter(|&p| le_tol(space.query_distance(q, p), r))
        .collect();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ann::Indexed;

    fn line(xs: &[f64]) -> FiniteMetric {
        FiniteMetric::from_points(xs.iter().map(|&v| vec![v]).collect()).unwrap()
    }

    #[test]
    fn counts() {
        assert_eq!(injection_count(5, 2), 20);
        assert_eq!(injection_count(3, 4), 0);
        assert_eq!(subset_count(24, 3), 2024);
        assert_eq!(subset_count(5, 0), 1);
    }

    #[test]
    fn self_isometries_of_a_line() {
        let x = line(&[0.0, 1.0, 3.0]);
        let all = brute_rho_matchings(&x, &x, 1.0, None).unwrap();
        let t: Vec<_> = all.iter().map(|m| m.targets().to_vec()).collect();
        // The three gaps 1, 2, 3 differ, so only the identity keeps them.
        assert_eq!(t, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn too_small_pattern_has_no_matchings() {
        let x = line(&[0.0, 0.1]);
        let y = line(&[0.0, 1.0, 2.0]);
        assert!(brute_rho_matchings(&x, &y, 2.0, None).unwrap().is_empty());
    }

    #[test]
    fn min_distortion_examples() {
        let x = line(&[0.0, 1.0]);
        let y = line(&[0.0, 2.0]);
        assert_eq!(brute_min_distortion(&x, &y).unwrap().0, 1.0);
        let x = line(&[0.0, 1.0, 3.0]);
        assert_eq!(brute_min_distortion(&x, &x).unwrap().0, 1.0);
        // {0,1,3} → {0,1,4}: ratios 1, 4/3, 3/2 for the order-preserving map.
        let y = line(&[0.0, 1.0, 4.0]);
        let (value, m) = brute_min_distortion(&x, &y).unwrap();
        assert_eq!(m.targets(), &[0, 1, 2]);
        assert!((value - 1.5).abs() < 1e-12);
    }

    #[test]
    fn guard_fails_loudly() {
        let y = FiniteMetric::from_points((0..40).map(|i| vec![i as f64]).collect()).unwrap();
        let x = FiniteMetric::from_points((0..6).map(|i| vec![i as f64]).collect()).unwrap();
        assert!(matches!(
            brute_rho_matchings(&x, &y, 1.0, None),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn cliques() {
        let complete = Graph::complete(5);
        assert_eq!(brute_k_clique(&complete, 3).unwrap(), Some(vec![0, 1, 2]));
        let empty = Graph::new(5, []).unwrap();
        assert_eq!(brute_k_clique(&empty, 2).unwrap(), None);
        assert_eq!(brute_k_clique(&empty, 1).unwrap(), Some(vec![0]));
    }

    #[test]
    fn scans() {
        let y = line(&[0.0, 1.0, 2.0, 10.0]);
        let space = Indexed(&y);
        assert_eq!(brute_nn(&space, &[3], &0).unwrap(), (3, 10.0));
        assert_eq!(brute_range(&space, &[0, 1, 2, 3], &1, 1.0), vec![0, 1, 2]);
        assert_eq!(brute_range(&space, &[0, 1, 2, 3], &1, 1e-9), vec![1]);
        assert!(brute_nn(&space, &[], &0).is_err());
    }
}
