//! Exact analysis of LRU caches under the independent reference model (IRM)
//! and of partial coupon collection.
//!
//! Every quantity is computed by more than one route so the routes can referee
//! each other:
//!
//! * [`lru`]: King's subset sum, the integral-derived hit-rate sum and its
//!   complement form, plus the unrewritten t-uple brute force.
//! * [`ccp`]: layer sums of the subset table, the alternating symmetric-function
//!   form (exact rationals), a conditional-probability permutation sum and the
//!   uniform harmonic closed form.
//! * [`subsets`]: the `I_J` table shared by both, built by a layered subset
//!   dynamic program, with a permutation oracle.
//! * [`quadrature`]: direct numerical evaluation of the integral form of `I_J`.
//! * [`montecarlo`]: seeded simulation of an LRU cache and of the collector.
//!
//! All numeric kernels are generic over [`Scalar`], so the same code runs in
//! `f64` and in exact [`num_rational::BigRational`] arithmetic.

pub mod ccp;
mod error;
pub mod lru;
pub mod montecarlo;
pub mod popularity;
pub mod quadrature;
pub mod range;
mod scalar;
pub mod subsets;

pub use error::{Error, Result};
pub use num_rational::BigRational;
pub use popularity::{DistSpec, Popularity};
pub use range::CapacityRange;
pub use scalar::{NeumaierSum, Scalar};
pub use subsets::{ITable, SubsetIndex};
