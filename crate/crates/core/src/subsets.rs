//! Subsets of the item set and the `I_J` table.
//!
//! Items are addressed by their position in the descending-order
//! [`Popularity`]: bit `i` of a mask stands for the `i`-th most popular item.
//!
//! For a subset `J` with mass `q_J = Σ_{i∈J} p_i < 1`,
//!
//! ```text
//! I_J = Σ over orderings (i1..ij) of J of
//!         p_i1 ... p_ij / ((1 - p_i1)(1 - p_i1 - p_i2) ... (1 - q_J))
//! ```
//!
//! and `I_∅ = 1`. Grouping orderings by their last element gives
//! `(1 - q_J) I_J = Σ_{i∈J} p_i I_{J\{i}}`, which the table build uses layer
//! by layer.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;

use crate::popularity::Popularity;
use crate::scalar::{NeumaierSum, Scalar};
use crate::{Error, Result};

/// Masks are `u64`, and `1 << m` must fit.
pub const MAX_SUBSET_ITEMS: usize = 63;

/// Default bound on the number of stored `I_J` values.
pub const DEFAULT_ENTRY_CAP: u128 = 1 << 27;

/// Exact-rational tables are only built for small item counts.
pub const EXACT_MAX_ITEMS: usize = 12;

/// Orderings of at most this many items are enumerated by the oracle.
pub const PERMUTATION_ORACLE_CAP: usize = 9;

/// Upper bound on ordered tuples any brute-force enumeration will visit.
pub const TUPLE_BUDGET: u128 = 200_000_000;

/// Number of ordered `r`-tuples of distinct items out of `m`, saturating.
pub fn ordered_tuple_count(m: usize, r: usize) -> u128 {
    if r > m {
        return 0;
    }
    (m - r + 1..=m).fold(1u128, |acc, f| acc.saturating_mul(f as u128))
}

/// Fails when enumerating ordered `r`-tuples out of `m` would exceed
/// [`TUPLE_BUDGET`].
pub(crate) fn check_tuple_budget(m: usize, r: usize) -> Result<()> {
    let count = ordered_tuple_count(m, r);
    if count > TUPLE_BUDGET {
        return Err(Error::TupleBudget {
            count,
            budget: TUPLE_BUDGET,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetIndex {
    mask: u64,
}

impl SubsetIndex {
    pub const EMPTY: SubsetIndex = SubsetIndex { mask: 0 };

    pub fn new(mask: u64, m: usize) -> Result<Self> {
        if m > MAX_SUBSET_ITEMS || mask >> m != 0 {
            return Err(Error::MaskOutOfRange { mask, m });
        }
        Ok(SubsetIndex { mask })
    }

    pub fn from_items(items: &[usize], m: usize) -> Result<Self> {
        let mut mask = 0u64;
        for &i in items {
            if i >= 64 {
                return Err(Error::MaskOutOfRange { mask: u64::MAX, m });
            }
            mask |= 1 << i;
        }
        Self::new(mask, m)
    }

    pub fn full(m: usize) -> Result<Self> {
        if m > MAX_SUBSET_ITEMS {
            return Err(Error::MaskOutOfRange { mask: u64::MAX, m });
        }
        Ok(SubsetIndex { mask: (1u64 << m) - 1 })
    }

    pub fn mask(self) -> u64 {
        self.mask
    }

    pub fn size(self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn contains(self, item: usize) -> bool {
        item < 64 && self.mask >> item & 1 == 1
    }

    pub fn without(self, item: usize) -> SubsetIndex {
        SubsetIndex {
            mask: self.mask & !(1 << item),
        }
    }

    pub fn with(self, item: usize) -> SubsetIndex {
        SubsetIndex {
            mask: self.mask | 1 << item,
        }
    }

    /// Members in increasing order.
    pub fn items(self) -> impl Iterator<Item = usize> {
        let mut rest = self.mask;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(i)
        })
    }
}

/// `Σ_{i∈J} p_i` (the `q_J` / `P_J` of the formulas).
pub fn subset_prob_mass(pop: &Popularity, s: SubsetIndex) -> Result<f64> {
    check_mask(s, pop.m())?;
    Ok(mass_in(pop.probs(), s.mask))
}

fn check_mask(s: SubsetIndex, m: usize) -> Result<()> {
    if m < 64 && s.mask >> m != 0 {
        return Err(Error::MaskOutOfRange { mask: s.mask, m });
    }
    Ok(())
}

pub(crate) fn mass_in<T: Scalar>(probs: &[T], mask: u64) -> T {
    T::sum_all(SubsetIndex { mask }.items().map(|i| probs[i].clone()))
}

/// `Σ_{i∉J} p_i`, summed directly instead of as `1 - q_J`.
pub(crate) fn mass_out<T: Scalar>(probs: &[T], mask: u64) -> T {
    T::sum_all(
        probs
            .iter()
            .enumerate()
            .filter(|&(i, _)| mask >> i & 1 == 0)
            .map(|(_, p)| p.clone()),
    )
}

/// `Σ_{i∉J} p_i²`.
pub(crate) fn square_mass_out<T: Scalar>(probs: &[T], mask: u64) -> T {
    T::sum_all(
        probs
            .iter()
            .enumerate()
            .filter(|&(i, _)| mask >> i & 1 == 0)
            .map(|(_, p)| p.clone() * p.clone()),
    )
}

/// Size-`k` subsets of `m` items in increasing mask order.
#[derive(Debug, Clone)]
pub struct SubsetsOfSize {
    next: Option<u64>,
    limit: u64,
}

impl Iterator for SubsetsOfSize {
    type Item = SubsetIndex;

    fn next(&mut self) -> Option<SubsetIndex> {
        let current = self.next?;
        self.next = if current == 0 {
            None
        } else {
            // Gosper's hack
            let low = current & current.wrapping_neg();
            let ripple = current + low;
            let following = (((ripple ^ current) >> 2) / low) | ripple;
            (following < self.limit).then_some(following)
        };
        Some(SubsetIndex { mask: current })
    }
}

pub fn subsets_of_size(m: usize, k: usize) -> Result<SubsetsOfSize> {
    if m > MAX_SUBSET_ITEMS {
        return Err(Error::InvalidParameter(format!(
            "at most {MAX_SUBSET_ITEMS} items can be enumerated, got {m}"
        )));
    }
    if k > m {
        return Err(Error::InvalidParameter(format!(
            "subset size {k} exceeds item count {m}"
        )));
    }
    let first = if k == 0 { 0 } else { (1u64 << k) - 1 };
    Ok(SubsetsOfSize {
        next: Some(first),
        limit: 1u64 << m,
    })
}

/// Pascal's triangle up to 64 choose 64.
#[derive(Debug, Clone)]
pub(crate) struct Binomials {
    table: Vec<[u64; 65]>,
}

impl Binomials {
    pub(crate) fn new() -> Self {
        let mut table = vec![[0u64; 65]; 65];
        for n in 0..=64 {
            table[n][0] = 1;
            for k in 1..=n {
                table[n][k] = table[n - 1][k - 1].saturating_add(table[n - 1][k]);
            }
        }
        Binomials { table }
    }

    pub(crate) fn choose(&self, n: usize, k: usize) -> u64 {
        if k > n {
            0
        } else {
            self.table[n][k]
        }
    }

    /// Position of `mask` among subsets of the same size in increasing mask
    /// order (combinatorial number system).
    pub(crate) fn rank(&self, mask: u64) -> usize {
        SubsetIndex { mask }
            .items()
            .enumerate()
            .map(|(t, pos)| self.choose(pos, t + 1))
            .sum::<u64>() as usize
    }
}

/// `I_J` for every subset up to a size bound.
#[derive(Debug, Clone)]
pub struct ITable<T: Scalar = f64> {
    pop: Popularity,
    probs: Vec<T>,
    max_size: usize,
    layers: Vec<Vec<T>>,
    binomials: Binomials,
}

impl<T: Scalar> ITable<T> {
    /// Builds layers `0..=j_max` under the default entry cap.
    pub fn build(pop: &Popularity, j_max: usize) -> Result<Self> {
        Self::build_with_cap(pop, j_max, DEFAULT_ENTRY_CAP)
    }

    pub fn build_with_cap(pop: &Popularity, j_max: usize, entry_cap: u128) -> Result<Self> {
        let m = pop.m();
        if j_max >= m {
            return Err(Error::InvalidParameter(format!(
                "table depth {j_max} must be below m = {m}; the full set has 1 - q_J = 0"
            )));
        }
        if m > MAX_SUBSET_ITEMS {
            return Err(Error::InvalidParameter(format!(
                "at most {MAX_SUBSET_ITEMS} items can be tabulated, got {m}"
            )));
        }
        if T::EXACT && m > EXACT_MAX_ITEMS {
            return Err(Error::InvalidParameter(format!(
                "exact tables are limited to {EXACT_MAX_ITEMS} items, got {m}"
            )));
        }
        let binomials = Binomials::new();
        let entries: u128 = (0..=j_max).map(|k| binomials.choose(m, k) as u128).sum();
        if entries > entry_cap {
            return Err(Error::TooManyEntries {
                entries,
                cap: entry_cap,
            });
        }

        let probs: Vec<T> = pop.probs_as();
        let mut layers: Vec<Vec<T>> = Vec::with_capacity(j_max + 1);
        layers.push(vec![T::one()]);
        for k in 1..=j_max {
            let masks: Vec<u64> = subsets_of_size(m, k)?.map(SubsetIndex::mask).collect();
            let prev = &layers[k - 1];
            let layer: Vec<T> = masks
                .par_iter()
                .map(|&mask| next_layer_value(&probs, prev, &binomials, mask))
                .collect();
            layers.push(layer);
        }

        Ok(ITable {
            pop: pop.clone(),
            probs,
            max_size: j_max,
            layers,
            binomials,
        })
    }

    pub fn popularity(&self) -> &Popularity {
        &self.pop
    }

    pub fn m(&self) -> usize {
        self.pop.m()
    }

    /// Probabilities in this table's arithmetic.
    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    /// Values of layer `k` in increasing mask order.
    pub fn layer(&self, k: usize) -> Result<&[T]> {
        self.layers
            .get(k)
            .map(Vec::as_slice)
            .ok_or(Error::TableTooShallow {
                have: self.max_size,
                need: k,
            })
    }

    /// Subsets of layer `k` paired with their values.
    pub fn layer_entries(&self, k: usize) -> Result<impl Iterator<Item = (SubsetIndex, &T)>> {
        let values = self.layer(k)?;
        Ok(subsets_of_size(self.m(), k)?.zip(values.iter()))
    }

    pub fn get(&self, s: SubsetIndex) -> Option<&T> {
        if check_mask(s, self.m()).is_err() {
            return None;
        }
        self.layers
            .get(s.size())
            .map(|layer| &layer[self.binomials.rank(s.mask)])
    }

    pub fn require_depth(&self, need: usize) -> Result<()> {
        if self.max_size < need {
            return Err(Error::TableTooShallow {
                have: self.max_size,
                need,
            });
        }
        Ok(())
    }

    /// Sum of layer `k`.
    pub fn layer_sum(&self, k: usize) -> Result<T> {
        Ok(T::sum_all(self.layer(k)?.iter().cloned()))
    }

    /// Largest relative residual of `(1 - q_J) I_J = Σ_{i∈J} p_i I_{J\{i}}`
    /// over all stored non-empty subsets, re-evaluated from the stored values.
    /// Exact tables report zero.
    pub fn recurrence_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 1..=self.max_size {
            for (s, value) in self.layer_entries(k).expect("stored layer") {
                let lhs = mass_out(&self.probs, s.mask) * value.clone();
                let rhs = T::sum_all(s.items().map(|i| {
                    self.probs[i].clone() * self.get(s.without(i)).expect("stored").clone()
                }));
                let diff = (lhs - rhs.clone()).to_f64().abs();
                let scale = rhs.to_f64().abs().max(f64::MIN_POSITIVE);
                worst = worst.max(diff / scale);
            }
        }
        worst
    }
}

impl ITable<f64> {
    /// Writes layer `k` as CSV with columns `mask,size,q_J,I_J`. Masks index
    /// items in descending-probability order.
    pub fn write_layer_csv<W: Write>(&self, k: usize, mut out: W) -> std::io::Result<()> {
        let entries = self
            .layer_entries(k)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e))?;
        writeln!(out, "mask,size,q_J,I_J")?;
        for (s, value) in entries {
            writeln!(
                out,
                "{},{},{:?},{:?}",
                s.mask,
                s.size(),
                mass_in(&self.probs, s.mask),
                value
            )?;
        }
        Ok(())
    }
}

fn next_layer_value<T: Scalar>(probs: &[T], prev: &[T], binomials: &Binomials, mask: u64) -> T {
    let positions: Vec<usize> = SubsetIndex { mask }.items().collect();
    let k = positions.len();
    // rank(J \ {pos_s}) = Σ_{t<s} C(pos_t, t+1) + Σ_{t>s} C(pos_t, t)
    let mut suffix = vec![0u64; k + 1];
    for t in (0..k).rev() {
        suffix[t] = suffix[t + 1] + binomials.choose(positions[t], t);
    }
    let mut prefix = 0u64;
    let mut terms = Vec::with_capacity(k);
    for (s, &pos) in positions.iter().enumerate() {
        let rank = (prefix + suffix[s + 1]) as usize;
        terms.push(probs[pos].clone() * prev[rank].clone());
        prefix += binomials.choose(pos, s + 1);
    }
    T::sum_all(terms) / mass_out(probs, mask)
}

/// `I_J` by explicit enumeration of all `|J|!` orderings.
pub fn i_permutation_oracle<T: Scalar>(pop: &Popularity, s: SubsetIndex) -> Result<T> {
    check_mask(s, pop.m())?;
    let size = s.size();
    if size > PERMUTATION_ORACLE_CAP {
        return Err(Error::PermutationCap {
            size,
            cap: PERMUTATION_ORACLE_CAP,
        });
    }
    if size == pop.m() {
        return Err(Error::FullMass);
    }
    let probs: Vec<T> = pop.probs_as();
    let items: Vec<usize> = s.items().collect();
    Ok(ordering_sum(&probs, &items, 0, T::zero()))
}

/// Sum over orderings of the unused `items` following a prefix of mass
/// `prefix_mass`.
fn ordering_sum<T: Scalar>(probs: &[T], items: &[usize], used: u64, prefix_mass: T) -> T {
    if used.count_ones() as usize == items.len() {
        return T::one();
    }
    T::sum_all(
        items
            .iter()
            .enumerate()
            .filter(|&(slot, _)| used >> slot & 1 == 0)
            .map(|(slot, &i)| {
                let mass = prefix_mass.clone() + probs[i].clone();
                let factor = probs[i].clone() / (T::one() - mass.clone());
                factor * ordering_sum(probs, items, used | 1 << slot, mass)
            }),
    )
}

/// Value table for the incidence-swap identity
/// `Σ_{|J|=j} Σ_{i∉J} F(i, J) = Σ_{|J|=j+1} Σ_{i∈J} F(i, J\{i})`.
#[derive(Debug, Clone, Default)]
pub struct IncidenceTable {
    values: HashMap<(usize, SubsetIndex), f64>,
}

impl IncidenceTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fills every `(i, J)` with `|J| = j`, `i ∉ J` from `f`.
    pub fn from_fn(m: usize, j: usize, mut f: impl FnMut(usize, SubsetIndex) -> f64) -> Result<Self> {
        let mut table = Self::new();
        for s in subsets_of_size(m, j)? {
            for i in (0..m).filter(|&i| !s.contains(i)) {
                table.insert(i, s, f(i, s));
            }
        }
        Ok(table)
    }

    pub fn insert(&mut self, item: usize, s: SubsetIndex, value: f64) {
        self.values.insert((item, s), value);
    }

    pub fn get(&self, item: usize, s: SubsetIndex) -> Result<f64> {
        self.values
            .get(&(item, s))
            .copied()
            .ok_or(Error::MissingEntry { item, mask: s.mask })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Evaluates both sides of the incidence-swap identity for `F` given as a
/// table. Returns `(lhs, rhs)`.
pub fn incidence_swap_check(m: usize, j: usize, f: &IncidenceTable) -> Result<(f64, f64)> {
    if j == 0 || j >= m {
        return Err(Error::InvalidParameter(format!(
            "subset size {j} must be in 1..{m}"
        )));
    }
    let mut lhs = NeumaierSum::new();
    for s in subsets_of_size(m, j)? {
        for i in (0..m).filter(|&i| !s.contains(i)) {
            lhs.add(f.get(i, s)?);
        }
    }
    let mut rhs = NeumaierSum::new();
    for s in subsets_of_size(m, j + 1)? {
        for i in s.items() {
            rhs.add(f.get(i, s.without(i))?);
        }
    }
    Ok((lhs.value(), rhs.value()))
}
