//! Expected waiting time of a partial coupon collection.
//!
//! `E{C_j}` is the expected number of i.i.d. draws from the popularity law
//! until `j` distinct items have been seen. Four routes:
//!
//! ```text
//! layers:     E{C_j} = Σ_{0≤|J|<j} I_J,      ΔE{j} = Σ_{|J|=j} I_J
//! symmetric:  E{C_j} = Σ_{k=m-j+1}^{m} (-1)^(j+k-m-1) C(k-1, m-j) Σ_{|J|=k} 1/P_J
//! ordered:    E{C_j} = Σ_{s=1}^{j} E[X_s],  E[X_s] = Σ over ordered (s-1)-tuples
//!                        p_i1 ... p_i(s-1) / ((1 - p_i1) ... (1 - p_i1 - ... - p_i(s-1)))
//! uniform:    E{C_j} = m (H_m - H_(m-j))
//! ```
//!
//! The symmetric form cancels heavily and is evaluated in exact rationals by
//! default. The ordered form is enumerated directly and never touches the
//! subset table.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::popularity::Popularity;
use crate::scalar::{NeumaierSum, Scalar};
use crate::subsets::{check_tuple_budget, mass_in, Binomials, ITable};
use crate::{Error, Result};

/// Item count above which the symmetric form is refused.
pub const SYMMETRIC_MAX_ITEMS: usize = 20;

/// Largest `k - 1` the ordered-tuple form enumerates.
pub const FERRANTE_CAP: usize = 8;

/// `Σ_{0≤|J|<j} I_J`, for `0 <= j <= m`.
pub fn expected_partial_time<T: Scalar>(table: &ITable<T>, j: usize) -> Result<T> {
    check_size(j, 0, table.m())?;
    if j == 0 {
        return Ok(T::zero());
    }
    table.require_depth(j - 1)?;
    let layers = (0..j)
        .map(|k| table.layer_sum(k))
        .collect::<Result<Vec<T>>>()?;
    Ok(T::sum_all(layers))
}

/// `ΔE{j} = E{C_(j+1)} - E{C_j} = Σ_{|J|=j} I_J`, for `0 <= j <= m - 1`.
pub fn delta_e<T: Scalar>(table: &ITable<T>, j: usize) -> Result<T> {
    check_size(j, 0, table.m().saturating_sub(1))?;
    table.require_depth(j)?;
    table.layer_sum(j)
}

fn check_size(j: usize, lo: usize, hi: usize) -> Result<()> {
    if j < lo || j > hi {
        return Err(Error::InvalidParameter(format!(
            "collection size {j} must be in {lo}..={hi}"
        )));
    }
    Ok(())
}

/// Exact per-size sums `Σ_{|J|=k} 1/P_J` for `k = 1..=m`, from which the
/// symmetric form is evaluated for any `j`.
#[derive(Debug, Clone)]
pub struct SymmetricSums {
    m: usize,
    /// index `k`; entry 0 unused
    inverse_mass: Vec<BigRational>,
}

impl SymmetricSums {
    pub fn new(pop: &Popularity) -> Result<Self> {
        let m = pop.m();
        if m > SYMMETRIC_MAX_ITEMS {
            return Err(Error::InvalidParameter(format!(
                "symmetric form needs exact enumeration of 2^m subsets; m = {m} exceeds {SYMMETRIC_MAX_ITEMS}"
            )));
        }
        let probs = pop.exact_probs();
        // P_J = s_J / D over a common denominator D, so 1/P_J = D / s_J.
        let common = probs
            .iter()
            .fold(BigInt::one(), |acc, p| num_integer::Integer::lcm(&acc, p.denom()));
        let scaled: Vec<BigInt> = probs
            .iter()
            .map(|p| p.numer() * (&common / p.denom()))
            .collect();

        let mut subset_sum = vec![BigInt::zero(); 1 << m];
        let mut per_size: Vec<Vec<BigRational>> = vec![Vec::new(); m + 1];
        for mask in 1usize..1 << m {
            let low = mask.trailing_zeros() as usize;
            subset_sum[mask] = &subset_sum[mask & (mask - 1)] + &scaled[low];
            per_size[mask.count_ones() as usize]
                .push(BigRational::new(common.clone(), subset_sum[mask].clone()));
        }
        let inverse_mass = per_size.into_iter().map(BigRational::sum_all).collect();
        Ok(SymmetricSums { m, inverse_mass })
    }

    /// `Σ_{|J|=k} 1/P_J`.
    pub fn inverse_mass(&self, k: usize) -> &BigRational {
        &self.inverse_mass[k]
    }

    pub fn expected_time(&self, j: usize) -> Result<BigRational> {
        let m = self.m;
        check_size(j, 1, m)?;
        let binomials = Binomials::new();
        let mut total = BigRational::zero();
        for k in m - j + 1..=m {
            let coefficient = BigRational::from_integer(BigInt::from(binomials.choose(k - 1, m - j)));
            let term = coefficient * &self.inverse_mass[k];
            if (j + k - m - 1).is_multiple_of(2) {
                total += term;
            } else {
                total -= term;
            }
        }
        Ok(total)
    }
}

/// The symmetric-function form in exact rationals.
pub fn symmetric_function_form_exact(pop: &Popularity, j: usize) -> Result<BigRational> {
    check_size(j, 1, pop.m())?;
    SymmetricSums::new(pop)?.expected_time(j)
}

/// The symmetric-function form, evaluated exactly and rounded once.
pub fn symmetric_function_form(pop: &Popularity, j: usize) -> Result<f64> {
    Ok(Scalar::to_f64(&symmetric_function_form_exact(pop, j)?))
}

/// Floating-point evaluation of the symmetric form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CancellingSum {
    pub value: f64,
    /// `log10(Σ|terms| / |value|)`: decimal digits lost to cancellation.
    pub digits_lost: f64,
}

/// The symmetric-function form in compensated `f64`. Logs a warning when more
/// than six digits cancel.
pub fn symmetric_function_form_float(pop: &Popularity, j: usize) -> Result<CancellingSum> {
    let m = pop.m();
    check_size(j, 1, m)?;
    if m > SYMMETRIC_MAX_ITEMS {
        return Err(Error::InvalidParameter(format!(
            "symmetric form limited to {SYMMETRIC_MAX_ITEMS} items, got {m}"
        )));
    }
    let probs = pop.probs();
    let mut inverse_mass = vec![NeumaierSum::new(); m + 1];
    for mask in 1u64..1 << m {
        inverse_mass[mask.count_ones() as usize].add(1.0 / mass_in(probs, mask));
    }
    let binomials = Binomials::new();
    let mut total = NeumaierSum::new();
    let mut magnitude = 0.0;
    for (k, sum) in inverse_mass.iter().enumerate().skip(m - j + 1) {
        let term = binomials.choose(k - 1, m - j) as f64 * sum.value();
        magnitude += term.abs();
        total.add(if (j + k - m - 1).is_multiple_of(2) { term } else { -term });
    }
    let value = total.value();
    let digits_lost = (magnitude / value.abs()).log10();
    if digits_lost > 6.0 {
        log::warn!("symmetric form at m={m}, j={j} lost {digits_lost:.1} digits to cancellation");
    }
    Ok(CancellingSum { value, digits_lost })
}

/// `E[X_s]` for `s = 1..=k` by direct enumeration of ordered tuples
/// (`E[X_1] = 1`).
pub fn ferrante_increments<T: Scalar>(pop: &Popularity, k: usize) -> Result<Vec<T>> {
    let m = pop.m();
    check_size(k, 1, m)?;
    if k - 1 > FERRANTE_CAP {
        return Err(Error::PermutationCap {
            size: k - 1,
            cap: FERRANTE_CAP,
        });
    }
    check_tuple_budget(m, k - 1)?;
    let probs: Vec<T> = pop.probs_as();
    Ok(extension_sums(&probs, k - 1, 0, T::zero()))
}

/// `E[X_m(k)] = Σ_{s=1..k} E[X_s]`.
pub fn ferrante_form<T: Scalar>(pop: &Popularity, k: usize) -> Result<T> {
    Ok(T::sum_all(ferrante_increments::<T>(pop, k)?))
}

/// Entry `d` sums, over all orderings of `d` further unused items after a
/// prefix of mass `prefix_mass`, the products of `p / (1 - running mass)`.
fn extension_sums<T: Scalar>(probs: &[T], depth: usize, used: u64, prefix_mass: T) -> Vec<T> {
    let mut out = vec![T::one()];
    if depth == 0 {
        return out;
    }
    let children: Vec<(T, Vec<T>)> = probs
        .iter()
        .enumerate()
        .filter(|&(i, _)| used >> i & 1 == 0)
        .map(|(i, p)| {
            let mass = prefix_mass.clone() + p.clone();
            let factor = p.clone() / (T::one() - mass.clone());
            (factor, extension_sums(probs, depth - 1, used | 1 << i, mass))
        })
        .collect();
    for d in 1..=depth {
        out.push(T::sum_all(
            children
                .iter()
                .filter(|(_, sums)| sums.len() >= d)
                .map(|(factor, sums)| factor.clone() * sums[d - 1].clone()),
        ));
    }
    out
}

/// `m (H_m - H_(m-j))`.
pub fn uniform_expected_time(m: usize, j: usize) -> Result<f64> {
    check_size(j, 0, m)?;
    // exact below this, compensated above
    const EXACT_LIMIT: usize = 2048;
    if m <= EXACT_LIMIT {
        let tail = (m - j + 1..=m)
            .map(|i| BigRational::new(BigInt::from(m), BigInt::from(i)))
            .fold(BigRational::zero(), |a, b| a + b);
        Ok(Scalar::to_f64(&tail))
    } else {
        Ok((m - j + 1..=m)
            .rev()
            .map(|i| m as f64 / i as f64)
            .collect::<NeumaierSum>()
            .value())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcpEntry {
    pub j: usize,
    pub e_layers: f64,
    pub e_symmetric: Option<f64>,
    pub e_ferrante: Option<f64>,
    /// Absent at `j = m`, where no further item remains.
    pub delta_e: Option<f64>,
}

/// Expected partial-collection times per collection size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcpCurve {
    pub m: usize,
    pub entries: Vec<CcpEntry>,
}

impl CcpCurve {
    /// Layer sums for every `j` in `lo..=hi`, plus the symmetric form when
    /// `m` is small enough for exact evaluation and the ordered form where
    /// its enumeration caps allow.
    pub fn compute<T: Scalar>(table: &ITable<T>, lo: usize, hi: usize) -> Result<Self> {
        let pop = table.popularity();
        let m = table.m();
        check_size(hi, lo, m)?;
        let symmetric = if m <= crate::subsets::EXACT_MAX_ITEMS {
            Some(SymmetricSums::new(pop)?)
        } else {
            None
        };
        let ferrante_depth = (1..=hi)
            .take_while(|&k| k - 1 <= FERRANTE_CAP && check_tuple_budget(m, k - 1).is_ok())
            .last();
        let increments: Vec<f64> = match ferrante_depth {
            Some(k) => ferrante_increments::<f64>(pop, k)?,
            None => Vec::new(),
        };

        let mut entries = Vec::with_capacity(hi - lo + 1);
        for j in lo..=hi {
            let e_symmetric = match (&symmetric, j) {
                (_, 0) => Some(0.0),
                (Some(sums), j) => Some(Scalar::to_f64(&sums.expected_time(j)?)),
                (None, _) => None,
            };
            let e_ferrante = (j <= increments.len()).then(|| f64::sum_all(increments[..j].iter().copied()));
            let delta = if j < m {
                Some(delta_e(table, j)?.to_f64())
            } else {
                None
            };
            entries.push(CcpEntry {
                j,
                e_layers: expected_partial_time(table, j)?.to_f64(),
                e_symmetric,
                e_ferrante,
                delta_e: delta,
            });
        }
        Ok(CcpCurve { m, entries })
    }

    /// Largest relative disagreement between the layer sum and any other
    /// column present.
    pub fn max_relative_spread(&self) -> f64 {
        self.entries
            .iter()
            .flat_map(|e| {
                [e.e_symmetric, e.e_ferrante]
                    .into_iter()
                    .flatten()
                    .map(move |v| (v - e.e_layers).abs() / e.e_layers.abs().max(f64::MIN_POSITIVE))
            })
            .fold(0.0, f64::max)
    }

    /// CSV with columns `j,e_layers,e_symmetric,e_ferrante,delta_e`; absent
    /// values are empty fields.
    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        let mut out = String::from("j,e_layers,e_symmetric,e_ferrante,delta_e\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{:?},{},{},{}",
                e.j,
                e.e_layers,
                cell(e.e_symmetric),
                cell(e.e_ferrante),
                cell(e.delta_e)
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("finite values serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Relative size of `|a - b|` against `|b|`, for comparing exact values.
pub fn exact_relative_gap(a: &BigRational, b: &BigRational) -> f64 {
    if b.is_zero() {
        return Scalar::to_f64(&a.abs());
    }
    Scalar::to_f64(&((a - b) / b).abs())
}
