//! Low-distortion matchings of a small pattern into a doubling metric space.
//!
//! Given a `k`-point pattern `X` and an `n`-point space `Y`, a ρ-matching is
//! an injection that preserves every pairwise distance within a factor ρ in
//! both directions. [`solve_distortion`] finds a `(1+ε)ρ`-matching whenever a
//! ρ-matching exists, and [`min_distortion`] approximates the smallest
//! achievable distortion to within `1+ε`.
//!
//! ```
//! use dmatch::{solve_distortion, verify_matching, FiniteMetric, Solution};
//!
//! let x = FiniteMetric::from_points(vec![vec![0.0], vec![1.0], vec![3.0]])?;
//! let y = FiniteMetric::from_points(vec![vec![10.0], vec![0.0], vec![1.0], vec![4.0]])?;
//! let Solution::One(sigma) = solve_distortion(&x, &y, 1.5, 0.5, false)? else {
//!     panic!("a 1.5-matching exists");
//! };
//! assert!(verify_matching(&sigma, &x, &y, 1.5 * 1.5));
//! # Ok::<(), dmatch::Error>(())
//! ```

pub mod ann;
pub mod distopt;
pub mod error;
pub mod gadgets;
pub mod io;
pub mod matcher;
pub mod metric;
pub mod nets;
pub mod oracle;
pub mod wspd;

pub use ann::AnnIndex;
pub use distopt::{min_distortion, min_distortion_naive, Optimum};
pub use error::{Error, Result};
pub use gadgets::{CliqueInstance, Graph};
pub use matcher::{solve_distortion, Solution};
pub use metric::{
    achieved_rho, distortion, expansion, inverse_expansion, matching_distance, verify_matching, FiniteMetric, Matching,
    Scale,
};

// The guide's code blocks run as doc-tests so the book cannot drift.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/nets.md")]
    mod nets {}
    #[doc = include_str!("../../../book/src/matching.md")]
    mod matching {}
    #[doc = include_str!("../../../book/src/distortion.md")]
    mod distortion {}
    #[doc = include_str!("../../../book/src/gadgets.md")]
    mod gadgets {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
