//! Exact LRU miss rates under the independent reference model.
//!
//! Three routes to `MR[j]` for a fully associative LRU cache of capacity `j`:
//!
//! ```text
//! King:        MR[j] = Σ_{|J|=j}       (Σ_{i∉J} p_i)² I_J
//! hit-rate:    MR[j] = 1 - Σ_{0≤|K|<j} I_K Σ_{i∉K} p_i²
//! complement:  MR[j] =     Σ_{j≤|J|<m} I_J Σ_{i∉J} p_i²
//! ```
//!
//! plus King's unrewritten sum over ordered `j`-tuples as a brute-force check.
//! The first two agree for every `j` by theorem, which
//! [`verify_identity`] exercises numerically.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::popularity::Popularity;
use crate::scalar::Scalar;
use crate::subsets::{check_tuple_budget, mass_out, square_mass_out, ITable};
use crate::{Error, Result};

/// Largest capacity the t-uple brute force enumerates.
pub const BRUTEFORCE_CAP: usize = 8;

fn check_capacity(j: usize, lo: usize, hi: usize) -> Result<()> {
    if j < lo || j > hi {
        return Err(Error::InvalidParameter(format!(
            "capacity {j} must be in {lo}..={hi}"
        )));
    }
    Ok(())
}

/// `Σ_{|J|=j} (1 - q_J)² I_J`, for `1 <= j <= m - 1`.
pub fn king_miss_rate<T: Scalar>(table: &ITable<T>, j: usize) -> Result<T> {
    let m = table.m();
    check_capacity(j, 1, m.saturating_sub(1))?;
    table.require_depth(j)?;
    let probs = table.probs();
    let terms = table.layer_entries(j)?.map(|(s, value)| {
        let out = mass_out(probs, s.mask());
        out.clone() * out * value.clone()
    });
    Ok(T::sum_all(terms).clamp_unit())
}

/// King's original sum over all ordered `j`-tuples of distinct items:
///
/// ```text
/// p_i1 ... p_ij (1 - p_i1 - ... - p_ij) / ((1 - p_i1) ... (1 - p_i1 - ... - p_i(j-1)))
/// ```
pub fn king_miss_rate_bruteforce<T: Scalar>(pop: &Popularity, j: usize) -> Result<T> {
    check_capacity(j, 1, pop.m().saturating_sub(1))?;
    if j > BRUTEFORCE_CAP {
        return Err(Error::PermutationCap {
            size: j,
            cap: BRUTEFORCE_CAP,
        });
    }
    check_tuple_budget(pop.m(), j)?;
    let probs: Vec<T> = pop.probs_as();
    Ok(tuple_sum(&probs, j, 0, T::zero()).clamp_unit())
}

/// Sum over the orderings that extend a prefix of total mass `prefix_mass`
/// by `remaining` unused items. Each level factors out its own term.
fn tuple_sum<T: Scalar>(probs: &[T], remaining: usize, used: u64, prefix_mass: T) -> T {
    T::sum_all(
        probs
            .iter()
            .enumerate()
            .filter(|&(i, _)| used >> i & 1 == 0)
            .map(|(i, p)| {
                let mass = prefix_mass.clone() + p.clone();
                if remaining == 1 {
                    p.clone() * (T::one() - mass)
                } else {
                    let factor = p.clone() / (T::one() - mass.clone());
                    factor * tuple_sum(probs, remaining - 1, used | 1 << i, mass)
                }
            }),
    )
}

/// `1 - Σ_{0≤|K|<j} I_K Σ_{i∉K} p_i²`, for `1 <= j <= m`.
pub fn flajolet_miss_rate<T: Scalar>(table: &ITable<T>, j: usize) -> Result<T> {
    check_capacity(j, 1, table.m())?;
    table.require_depth(j - 1)?;
    let hits = T::sum_all((0..j).map(|k| weighted_layer(table, k)));
    Ok((T::one() - hits).clamp_unit())
}

/// `Σ_{j≤|J|<m} I_J Σ_{i∉J} p_i²`, for `1 <= j <= m - 1`. Always needs the
/// table built to depth `m - 1`.
pub fn miss_rate_complement_form<T: Scalar>(table: &ITable<T>, j: usize) -> Result<T> {
    let m = table.m();
    check_capacity(j, 1, m.saturating_sub(1))?;
    table.require_depth(m - 1)?;
    Ok(T::sum_all((j..m).map(|k| weighted_layer(table, k))).clamp_unit())
}

/// `Σ_{|K|=k} I_K Σ_{i∉K} p_i²`.
fn weighted_layer<T: Scalar>(table: &ITable<T>, k: usize) -> T {
    let probs = table.probs();
    T::sum_all(
        table
            .layer_entries(k)
            .expect("depth checked by caller")
            .map(|(s, value)| value.clone() * square_mass_out(probs, s.mask())),
    )
}

/// `1 - j/m`.
pub fn uniform_miss_rate(m: usize, j: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter("item count must be positive".into()));
    }
    check_capacity(j, 0, m)?;
    Ok((m - j) as f64 / m as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissRateEntry {
    pub capacity: usize,
    pub mr_king: f64,
    pub mr_flajolet: f64,
    pub max_discrepancy: f64,
}

/// Miss rates per capacity from both formulas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissRateCurve {
    pub m: usize,
    pub entries: Vec<MissRateEntry>,
}

impl MissRateCurve {
    /// Evaluates both formulas for every capacity in `lo..=hi` from one
    /// table. Capacity 0 is 1 by convention; King's value at `j = m` is 0 by
    /// convention, the hit-rate form is still evaluated there.
    pub fn compute<T: Scalar>(table: &ITable<T>, lo: usize, hi: usize) -> Result<Self> {
        let m = table.m();
        check_capacity(hi, lo, m)?;
        let mut entries = Vec::with_capacity(hi - lo + 1);
        for j in lo..=hi {
            let (king, flajolet) = match j {
                0 => (1.0, 1.0),
                j if j == m => (0.0, flajolet_miss_rate(table, j)?.to_f64()),
                j => {
                    let king = king_miss_rate(table, j)?;
                    let flajolet = flajolet_miss_rate(table, j)?;
                    (king.to_f64(), flajolet.to_f64())
                }
            };
            entries.push(MissRateEntry {
                capacity: j,
                mr_king: king,
                mr_flajolet: flajolet,
                max_discrepancy: (king - flajolet).abs(),
            });
        }
        Ok(MissRateCurve { m, entries })
    }

    pub fn max_discrepancy(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.max_discrepancy)
            .fold(0.0, f64::max)
    }

    /// Whether both columns are non-increasing in capacity. Expected under
    /// IRM but not asserted by the formulas themselves.
    pub fn is_non_increasing(&self) -> bool {
        self.entries.windows(2).all(|w| {
            w[1].mr_king <= w[0].mr_king + 1e-15 && w[1].mr_flajolet <= w[0].mr_flajolet + 1e-15
        })
    }

    /// CSV with columns `j,mr_king,mr_flajolet,discrepancy`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,mr_king,mr_flajolet,discrepancy\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{:?},{:?},{:?}",
                e.capacity, e.mr_king, e.mr_flajolet, e.max_discrepancy
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

/// Both sides of the King / hit-rate identity for `j = 1..=j_max` from one
/// shared table; errors if any discrepancy exceeds `tol`.
pub fn verify_identity(pop: &Popularity, j_max: usize, tol: f64) -> Result<MissRateCurve> {
    check_capacity(j_max, 1, pop.m().saturating_sub(1))?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let table = ITable::<f64>::build(pop, j_max)?;
    let curve = MissRateCurve::compute(&table, 1, j_max)?;
    if let Some(bad) = curve.entries.iter().find(|e| e.max_discrepancy > tol) {
        return Err(Error::IdentityViolated {
            j: bad.capacity,
            discrepancy: bad.max_discrepancy,
            tol,
        });
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::BigRational;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    fn pop532() -> Popularity {
        Popularity::make_explicit(&[5.0, 3.0, 2.0]).unwrap()
    }

    // I_12·0.2² + I_13·0.3² + I_23·0.5², each I_J by its two orderings
    fn mr2_532() -> f64 {
        let i12 = 0.15 / (0.5 * 0.2) + 0.15 / (0.7 * 0.2);
        let i13 = 0.10 / (0.5 * 0.3) + 0.10 / (0.8 * 0.3);
        let i23 = 0.06 / (0.7 * 0.5) + 0.06 / (0.8 * 0.5);
        i12 * 0.04 + i13 * 0.09 + i23 * 0.25
    }

    #[test]
    fn hand_oracle_value() {
        assert!((mr2_532() - 0.2807142857142857).abs() < 1e-15);
    }

    #[test]
    fn king_examples() {
        let u = ITable::<f64>::build(&Popularity::uniform(4).unwrap(), 3).unwrap();
        assert!(rel(king_miss_rate(&u, 2).unwrap(), 0.5) < 1e-14);

        let t = ITable::<f64>::build(&pop532(), 2).unwrap();
        assert!(rel(king_miss_rate(&t, 1).unwrap(), 0.62) < 1e-14);
        assert!(rel(king_miss_rate(&t, 2).unwrap(), mr2_532()) < 1e-14);

        assert!(king_miss_rate(&t, 0).is_err());
        assert!(king_miss_rate(&t, 3).is_err());
        let shallow = ITable::<f64>::build(&pop532(), 1).unwrap();
        assert!(matches!(king_miss_rate(&shallow, 2), Err(Error::TableTooShallow { .. })));
    }

    #[test]
    fn bruteforce_examples() {
        let p = Popularity::make_explicit(&[0.7, 0.3]).unwrap();
        assert!(rel(king_miss_rate_bruteforce::<f64>(&p, 1).unwrap(), 0.42) < 1e-14);
        let u5 = Popularity::uniform(5).unwrap();
        assert!(rel(king_miss_rate_bruteforce::<f64>(&u5, 3).unwrap(), 0.4) < 1e-14);
        assert!(rel(king_miss_rate_bruteforce::<f64>(&pop532(), 2).unwrap(), mr2_532()) < 1e-14);
        let u10 = Popularity::uniform(10).unwrap();
        assert!(matches!(
            king_miss_rate_bruteforce::<f64>(&u10, 9),
            Err(Error::PermutationCap { .. })
        ));
    }

    #[test]
    fn flajolet_examples() {
        let p = pop532();
        let t = ITable::<f64>::build(&p, 2).unwrap();
        assert_eq!(flajolet_miss_rate(&t, 1).unwrap(), 1.0 - p.sum_squares());
        assert!(rel(flajolet_miss_rate(&t, 2).unwrap(), mr2_532()) < 1e-14);
        assert!(flajolet_miss_rate(&t, 3).unwrap() <= 1e-10);

        let u = ITable::<f64>::build(&Popularity::uniform(4).unwrap(), 3).unwrap();
        assert!(rel(flajolet_miss_rate(&u, 3).unwrap(), 0.25) < 1e-14);

        let shallow = ITable::<f64>::build(&p, 0).unwrap();
        assert!(flajolet_miss_rate(&shallow, 1).is_ok());
        assert!(matches!(flajolet_miss_rate(&shallow, 2), Err(Error::TableTooShallow { .. })));
    }

    #[test]
    fn complement_examples() {
        let t = ITable::<f64>::build(&pop532(), 2).unwrap();
        assert!(rel(miss_rate_complement_form(&t, 2).unwrap(), mr2_532()) < 1e-14);
        let u = ITable::<f64>::build(&Popularity::uniform(4).unwrap(), 3).unwrap();
        assert!(rel(miss_rate_complement_form(&u, 2).unwrap(), 0.5) < 1e-14);
        let shallow = ITable::<f64>::build(&pop532(), 1).unwrap();
        assert!(matches!(
            miss_rate_complement_form(&shallow, 1),
            Err(Error::TableTooShallow { .. })
        ));
    }

    #[test]
    fn complement_top_layer_only() {
        // j = m-1: one layer, each term I_J times the excluded item's p²
        let p = Popularity::make_explicit(&[4.0, 3.0, 2.0, 1.0]).unwrap();
        let t = ITable::<f64>::build(&p, 3).unwrap();
        let direct: f64 = t
            .layer_entries(3)
            .unwrap()
            .map(|(s, v)| {
                let excluded = (0..4).find(|&i| !s.contains(i)).unwrap();
                v * p.probs()[excluded].powi(2)
            })
            .sum();
        assert!(rel(miss_rate_complement_form(&t, 3).unwrap(), direct) < 1e-14);
    }

    #[test]
    fn uniform_closed_form() {
        assert_eq!(uniform_miss_rate(4, 2).unwrap(), 0.5);
        assert_eq!(uniform_miss_rate(7, 0).unwrap(), 1.0);
        assert_eq!(uniform_miss_rate(7, 7).unwrap(), 0.0);
        assert!(uniform_miss_rate(7, 8).is_err());
    }

    #[test]
    fn verify_examples() {
        let p = pop532();
        let curve = verify_identity(&p, 1, 1e-12).unwrap();
        assert_eq!(curve.entries[0].mr_flajolet, 1.0 - p.sum_squares());
        assert!(rel(curve.entries[0].mr_king, 1.0 - p.sum_squares()) < 1e-14);

        let u6 = Popularity::uniform(6).unwrap();
        let curve = verify_identity(&u6, 5, 1e-12).unwrap();
        for e in &curve.entries {
            let want = 1.0 - e.capacity as f64 / 6.0;
            assert!(rel(e.mr_king, want) < 1e-12 && rel(e.mr_flajolet, want) < 1e-12);
        }
        assert!(curve.is_non_increasing());

        assert!(verify_identity(&u6, 6, 1e-10).is_err());
        assert!(verify_identity(&u6, 3, 0.0).is_err());
    }

    #[test]
    fn curve_conventions_and_serialization() {
        let t = ITable::<f64>::build(&pop532(), 2).unwrap();
        let curve = MissRateCurve::compute(&t, 0, 3).unwrap();
        assert_eq!(curve.entries[0].mr_king, 1.0);
        assert_eq!(curve.entries[3].mr_king, 0.0);
        assert!(curve.entries[3].mr_flajolet <= 1e-10);
        assert!(curve.is_non_increasing());

        let csv = curve.to_csv();
        assert!(csv.starts_with("j,mr_king,mr_flajolet,discrepancy\n0,1.0,1.0,0.0\n"));
        assert_eq!(csv.lines().count(), 5);

        let back = MissRateCurve::from_json(&curve.to_json()).unwrap();
        assert_eq!(back, curve);
    }

    #[test]
    fn exact_king_equals_exact_flajolet() {
        let p = Popularity::make_explicit(&[9.0, 1.0, 4.0, 7.0, 2.0, 2.0]).unwrap();
        let t = ITable::<BigRational>::build(&p, 5).unwrap();
        for j in 1..6 {
            let king = king_miss_rate(&t, j).unwrap();
            assert_eq!(king, flajolet_miss_rate(&t, j).unwrap());
            assert_eq!(king, miss_rate_complement_form(&t, j).unwrap());
            assert_eq!(king, king_miss_rate_bruteforce::<BigRational>(&p, j).unwrap());
        }
        assert_eq!(flajolet_miss_rate(&t, 6).unwrap(), BigRational::from_usize(0));
    }

    #[test]
    fn label_invariance() {
        let w = [0.31, 0.07, 0.2, 0.11, 0.05, 0.26];
        let mut shuffled = w;
        shuffled.reverse();
        shuffled.swap(0, 3);
        let a = ITable::<f64>::build(&Popularity::make_explicit(&w).unwrap(), 5).unwrap();
        let b = ITable::<f64>::build(&Popularity::make_explicit(&shuffled).unwrap(), 5).unwrap();
        for j in 1..6 {
            assert_eq!(king_miss_rate(&a, j).unwrap(), king_miss_rate(&b, j).unwrap());
            assert_eq!(flajolet_miss_rate(&a, j).unwrap(), flajolet_miss_rate(&b, j).unwrap());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn three_way_agreement(w in prop::collection::vec(0.02f64..1.0, 2..=12)) {
            let p = Popularity::make_explicit(&w).unwrap();
            let m = p.m();
            let t = ITable::<f64>::build(&p, m - 1).unwrap();
            for j in 1..m {
                let king = king_miss_rate(&t, j).unwrap();
                let fl = flajolet_miss_rate(&t, j).unwrap();
                let co = miss_rate_complement_form(&t, j).unwrap();
                prop_assert!(rel(king, fl) <= 1e-10, "j={} {} {}", j, king, fl);
                prop_assert!(rel(co, fl) <= 1e-10, "j={} {} {}", j, co, fl);
                if j <= 4 {
                    let bf = king_miss_rate_bruteforce::<f64>(&p, j).unwrap();
                    prop_assert!(rel(bf, king) <= 1e-10);
                }
            }
            prop_assert!(flajolet_miss_rate(&t, m).unwrap() <= 1e-10);
            prop_assert!(MissRateCurve::compute(&t, 0, m).unwrap().is_non_increasing());
        }
    }
}
