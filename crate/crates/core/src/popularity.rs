//! Popularity laws: validated probability vectors over `m` items.
//!
//! Weights are normalized on construction, zero-weight items are dropped, and
//! the probabilities are kept in descending order together with the index each
//! one had in the caller's input.

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::scalar::{NeumaierSum, Scalar};
use crate::{Error, Result};

/// Largest item count accepted by the constructors.
pub const MAX_ITEMS: usize = 1 << 24;

/// Probabilities at or above `1 - DOMINANT_GAP` are rejected when `m >= 2`.
pub const DOMINANT_GAP: f64 = 1e-9;

/// Smallest accepted probability. Every `I_J` is bounded by `m / min p`, so
/// this keeps the subset table finite for any `m <= MAX_ITEMS`.
pub const MIN_PROBABILITY: f64 = 1e-290;

#[derive(Debug, Clone, PartialEq)]
pub struct Popularity {
    probs: Vec<f64>,
    weights: Vec<f64>,
    original_index: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParametricKind {
    Uniform,
    Zipf,
    Geometric,
}

impl Popularity {
    /// Normalizes nonnegative weights into a popularity law.
    pub fn make_explicit(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty weight vector".into()));
        }
        if weights.len() > MAX_ITEMS {
            return Err(Error::InvalidDistribution(format!(
                "{} items exceeds the limit of {MAX_ITEMS}",
                weights.len()
            )));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::InvalidDistribution(format!(
                "weight {i} is {w}; weights must be finite and nonnegative"
            )));
        }

        let mut kept: Vec<(usize, f64)> = weights
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, w)| w > 0.0)
            .collect();
        if kept.is_empty() {
            return Err(Error::InvalidDistribution("all weights are zero".into()));
        }
        // stable: ties keep their input order
        kept.sort_by(|a, b| b.1.total_cmp(&a.1));

        let total = kept.iter().map(|&(_, w)| w).collect::<NeumaierSum>().value();
        if !total.is_finite() {
            return Err(Error::InvalidDistribution("weight sum overflows".into()));
        }

        let mut probs = Vec::with_capacity(kept.len());
        let mut kept_weights = Vec::with_capacity(kept.len());
        let mut original_index = Vec::with_capacity(kept.len());
        for (i, w) in kept {
            let p = w / total;
            if p < MIN_PROBABILITY {
                return Err(Error::InvalidDistribution(format!(
                    "weight {i} normalizes to probability {p:e}, below {MIN_PROBABILITY:e}"
                )));
            }
            probs.push(p);
            kept_weights.push(w);
            original_index.push(i);
        }

        if probs.len() >= 2 && probs[0] >= 1.0 - DOMINANT_GAP {
            return Err(Error::InvalidDistribution(format!(
                "item probability {} is within {DOMINANT_GAP:e} of 1",
                probs[0]
            )));
        }

        Ok(Popularity {
            probs,
            weights: kept_weights,
            original_index,
        })
    }

    /// Uniform, Zipf (`p_i ∝ i^-alpha`) or geometric (`p_i ∝ ratio^(i-1)`) law
    /// over `m` items. `param` is ignored for the uniform law.
    pub fn make_parametric(kind: ParametricKind, m: usize, param: f64) -> Result<Self> {
        if m == 0 || m > MAX_ITEMS {
            return Err(Error::InvalidParameter(format!(
                "item count must be in 1..={MAX_ITEMS}, got {m}"
            )));
        }
        let weights: Vec<f64> = match kind {
            ParametricKind::Uniform => vec![1.0; m],
            ParametricKind::Zipf => {
                if !(param.is_finite() && param >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "zipf exponent must be finite and >= 0, got {param}"
                    )));
                }
                if param == 0.0 {
                    vec![1.0; m]
                } else {
                    (1..=m).map(|i| (i as f64).powf(-param)).collect()
                }
            }
            ParametricKind::Geometric => {
                if !(param > 0.0 && param < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "geometric ratio must be in (0, 1), got {param}"
                    )));
                }
                (0..m).map(|i| param.powi(i as i32)).collect()
            }
        };
        Self::make_explicit(&weights)
    }

    pub fn uniform(m: usize) -> Result<Self> {
        Self::make_parametric(ParametricKind::Uniform, m, 0.0)
    }

    /// Number of items with positive probability.
    pub fn m(&self) -> usize {
        self.probs.len()
    }

    /// Probabilities in descending order.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Position of each stored probability in the caller's input.
    pub fn original_index(&self) -> &[usize] {
        &self.original_index
    }

    /// `Σ p_i²`, the hit rate of a one-slot cache.
    pub fn sum_squares(&self) -> f64 {
        self.probs.iter().map(|p| p * p).collect::<NeumaierSum>().value()
    }

    pub fn is_uniform(&self) -> bool {
        self.probs.iter().all(|&p| p == self.probs[0])
    }

    /// The law as exact rationals: each retained weight is embedded exactly
    /// and divided by their exact total, so the result sums to exactly one.
    pub fn exact_probs(&self) -> Vec<BigRational> {
        let ws: Vec<BigRational> = self.weights.iter().map(|&w| BigRational::from_f64(w)).collect();
        let total = ws.iter().fold(BigRational::zero(), |a, b| a + b);
        ws.into_iter().map(|w| w / &total).collect()
    }

    /// Probabilities lifted into the scalar type `T`: exact types get
    /// [`Self::exact_probs`] semantics, rounding types the stored values.
    pub fn probs_as<T: Scalar>(&self) -> Vec<T> {
        if T::EXACT {
            let ws: Vec<T> = self.weights.iter().map(|&w| T::from_f64(w)).collect();
            let total = T::sum_all(ws.iter().cloned());
            ws.into_iter().map(|w| w / total.clone()).collect()
        } else {
            self.probs.iter().map(|&p| T::from_f64(p)).collect()
        }
    }
}

/// Distribution description accepted on the command line.
///
/// ```json
/// {"type": "explicit", "weights": [5, 3, 2]}
/// {"type": "zipf", "m": 16, "alpha": 1.0}
/// {"type": "uniform", "m": 8}
/// {"type": "geometric", "m": 8, "ratio": 0.5}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistSpec {
    Explicit { weights: Vec<f64> },
    Zipf { m: usize, alpha: f64 },
    Uniform { m: usize },
    Geometric { m: usize, ratio: f64 },
}

impl DistSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn build(&self) -> Result<Popularity> {
        match *self {
            DistSpec::Explicit { ref weights } => Popularity::make_explicit(weights),
            DistSpec::Zipf { m, alpha } => Popularity::make_parametric(ParametricKind::Zipf, m, alpha),
            DistSpec::Uniform { m } => Popularity::make_parametric(ParametricKind::Uniform, m, 0.0),
            DistSpec::Geometric { m, ratio } => {
                Popularity::make_parametric(ParametricKind::Geometric, m, ratio)
            }
        }
    }
}

impl std::str::FromStr for DistSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DistSpec::from_json(s)
    }
}
