//! Approximate minimum distortion.
//!
//! Both optimizers reduce to one primitive, [`decide_expansions`]: rescaling
//! `Y` by `√(e'/e)` turns "expansion ≤ e and inverse expansion ≤ e'" into a
//! ρ-matching question with `ρ = √(e·e')`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matcher::solve_distortion;
use crate::metric::{distortion, FiniteMetric, Matching, TAU};
use crate::wspd::candidate_lengths;

/// An approximate minimum distortion and the matching that attains it.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimum {
    /// Exact distortion of `matching`.
    pub delta: f64,
    pub matching: Matching,
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("ε must lie in (0, 1], got {eps}")));
    }
    Ok(())
}

fn check_pattern(x: &FiniteMetric, y: &FiniteMetric) -> Result<()> {
    if x.len() < 2 {
        return Err(Error::TooFewPoints(x.len()));
    }
    if x.len() > y.len() {
        return Err(Error::PatternTooLarge { k: x.len(), n: y.len() });
    }
    Ok(())
}

/// Looks for a matching with expansion at most `e` and inverse expansion at
/// most `e'`. A `Some` answer has expansion ≤ `(1+ε)e` and inverse expansion
/// ≤ `(1+ε)e'`; `None` means no matching meets `(e, e')` exactly.
pub fn decide_expansions(x: &FiniteMetric, y: &FiniteMetric, e: f64, e_inv: f64, eps: f64) -> Result<Option<Matching>> {
    check_eps(eps)?;
    if !(e > 0.0 && e.is_finite() && e_inv > 0.0 && e_inv.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "expansions must be positive, got ({e}, {e_inv})"
        )));
    }
    let product = e * e_inv;
    if product < 1.0 - TAU {
        return Err(Error::InvalidParameter(format!(
            "e·e' = {product} is below 1; no matching between metrics can meet it"
        )));
    }
    let scaled = y.rescale((e_inv / e).sqrt())?;
    let rho = product.sqrt().max(1.0);
    Ok(solve_distortion(x, &scaled, rho, eps, false)?.first().cloned())
}

fn pair_ratios(x: &FiniteMetric, y: &FiniteMetric) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() * x.len() * y.len() * y.len() / 4);
    for a in 0..x.len() {
        for b in a + 1..x.len() {
            let dx = x.d(a, b);
            for u in 0..y.len() {
                for v in u + 1..y.len() {
                    out.push(y.d(u, v) / dx);
                }
            }
        }
    }
    out.sort_unstable_by(f64::total_cmp);
    out.dedup();
    out
}

/// `(1+ε)`-approximate minimum distortion by sweeping every candidate pair
/// of expansion bounds in order of their product.
///
/// Any optimal matching has its expansion equal to some ratio
/// `d_Y(y, y')/d_X(x, x')` and its inverse expansion equal to the reciprocal
/// of another, so the sweep reaches a positive decision no later than the
/// optimum.
pub fn min_distortion_naive(x: &FiniteMetric, y: &FiniteMetric, eps: f64) -> Result<Optimum> {
    check_eps(eps)?;
    check_pattern(x, y)?;
    let stretch = pair_ratios(x, y);
    let shrink: Vec<f64> = stretch.iter().rev().map(|s| 1.0 / s).collect();
    let mut candidates: Vec<(f64, f64)> = stretch
        .iter()
        .flat_map(|&e| shrink.iter().map(move |&e_inv| (e, e_inv)))
        .filter(|&(e, e_inv)| e * e_inv >= 1.0 - TAU)
        .collect();
    candidates.sort_by(|a, b| (a.0 * a.1).total_cmp(&(b.0 * b.1)).then(a.0.total_cmp(&b.0)));
    let inner = eps / 3.0;
    for (e, e_inv) in candidates {
        if let Some(m) = decide_expansions(x, y, e, e_inv, inner)? {
            let delta = distortion(&m, x, y)?;
            return Ok(Optimum { delta, matching: m });
        }
    }
    Err(Error::InvalidParameter(
        "no expansion pair certified a matching; the inputs are likely not metrics".into(),
    ))
}

/// Positive (`Some`) when `dist(X, Y) ≤ Δ`; negative (`None`) when
/// `dist(X, Y) ≥ (1+ε)Δ`. Either answer is possible in between.
pub fn decide_distortion(x: &FiniteMetric, y: &FiniteMetric, delta: f64, eps: f64) -> Result<Option<Matching>> {
    check_eps(eps)?;
    check_pattern(x, y)?;
    if !(delta >= 1.0 - TAU && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Δ must be a finite value ≥ 1, got {delta}"
        )));
    }
    let delta = delta.max(1.0);
    let slack = eps / 6.0;
    let lengths = candidate_lengths(y, slack)?;
    let pattern_pairs: Vec<f64> = (0..x.len())
        .flat_map(|a| (a + 1..x.len()).map(move |b| (a, b)))
        .map(|(a, b)| x.d(a, b))
        .collect();
    let calls: Vec<(f64, f64)> = lengths
        .iter()
        .flat_map(|&l| {
            pattern_pairs
                .iter()
                .map(move |&dx| ((1.0 + slack) * l / dx, (1.0 + slack) * delta * dx / l))
        })
        .filter(|&(e, e_inv)| e * e_inv >= 1.0)
        .collect();
    calls
        .par_iter()
        .map(|&(e, e_inv)| decide_expansions(x, y, e, e_inv, slack))
        .find_map_first(|r| match r {
            Ok(None) => None,
            other => Some(other),
        })
        .transpose()
        .map(Option::flatten)
}

/// `(1+ε)`-approximate minimum distortion: doubling search for a positive
/// Δ, then bisection down to relative width `ε/4`.
///
/// The returned value is the exact distortion of a certifying matching, so
/// it never undercuts the true minimum.
pub fn min_distortion(x: &FiniteMetric, y: &FiniteMetric, eps: f64) -> Result<Optimum> {
    check_eps(eps)?;
    check_pattern(x, y)?;
    let inner = eps / 2.0;
    let mut best: Option<Optimum> = None;
    let mut keep = |m: Matching| -> Result<()> {
        let delta = distortion(&m, x, y)?;
        if best.as_ref().is_none_or(|b| delta < b.delta) {
            best = Some(Optimum { delta, matching: m });
        }
        Ok(())
    };

    let mut hi = 1.0f64;
    loop {
        if let Some(m) = decide_distortion(x, y, hi, inner)? {
            keep(m)?;
            break;
        }
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::InvalidParameter("distortion search overflowed".into()));
        }
    }
    if hi > 1.0 {
        let mut lo = hi / 2.0;
        while hi > lo * (1.0 + eps / 4.0) {
            let mid = (lo * hi).sqrt();
            match decide_distortion(x, y, mid, inner)? {
                Some(m) => {
                    keep(m)?;
                    hi = mid;
                }
                None => lo = mid,
            }
        }
    }
    Ok(best.expect("the doubling search ends on a positive decision"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> FiniteMetric {
        FiniteMetric::from_points(xs.iter().map(|&v| vec![v]).collect()).unwrap()
    }

    #[test]
    fn identity_decisions() {
        let x = line(&[0.0, 1.0, 3.0]);
        assert!(decide_expansions(&x, &x, 1.0, 1.0, 0.5).unwrap().is_some());
        assert!(decide_distortion(&x, &x, 1.0, 0.5).unwrap().is_some());
        assert_eq!(min_distortion(&x, &x, 0.5).unwrap().delta, 1.0);
        assert_eq!(min_distortion_naive(&x, &x, 0.5).unwrap().delta, 1.0);
    }

    #[test]
    fn forced_expansion_is_refused() {
        let x = line(&[0.0, 1.0]);
        let y = line(&[0.0, 4.0]);
        assert!(decide_expansions(&x, &y, 2.0, 1.0, 0.1).unwrap().is_none());
        assert!(decide_expansions(&x, &y, 4.0, 0.25, 0.1).unwrap().is_some());
    }

    #[test]
    fn scale_is_free_for_a_pair() {
        let x = line(&[0.0, 1.0]);
        let y = line(&[0.0, 2.0]);
        assert_eq!(min_distortion_naive(&x, &y, 0.5).unwrap().delta, 1.0);
        assert_eq!(min_distortion(&x, &y, 0.5).unwrap().delta, 1.0);
    }

    #[test]
    fn parameter_checks() {
        let x = line(&[0.0, 1.0]);
        assert!(decide_expansions(&x, &x, 0.5, 0.5, 0.5).is_err());
        assert!(decide_expansions(&x, &x, 1.0, 1.0, 2.0).is_err());
        assert!(decide_distortion(&x, &x, 0.5, 0.5).is_err());
        assert!(min_distortion(&line(&[0.0]), &x, 0.5).is_err());
    }
}
