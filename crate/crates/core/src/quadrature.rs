//! Numerical oracle for `I_J` through its integral representation
//!
//! ```text
//! I_J = ∫_0^1 Π_{i∈J} (x^(-p_i) - 1) dx
//! ```
//!
//! The integrand blows up like `x^(-q_J)` at the origin. Substituting
//! `x = v^c` with `c = 1/(1 - q_J)` turns it into
//!
//! ```text
//! c v^(c-1) Π (v^(-c p_i) - 1) = c Π_{i∈J} (1 - v^(c p_i))
//! ```
//!
//! which is bounded by `c` on `[0, 1]`; only its derivative is singular at 0,
//! which adaptive bisection absorbs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::popularity::Popularity;
use crate::scalar::NeumaierSum;
use crate::subsets::{mass_out, SubsetIndex};
use crate::{Error, Result};

/// Integrand evaluations allowed per integral.
pub const EVALUATION_BUDGET: usize = 10_000_000;

pub const MIN_TOL: f64 = 1e-12;
pub const MAX_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    /// Absolute.
    pub error_estimate: f64,
    pub evaluations: usize,
}

// Kronrod 15-point abscissae and weights; odd entries double as the 7-point
// Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mid = f(center);
    let mut kronrod = WGK[7] * mid;
    let mut gauss = WG[3] * mid;
    for k in 0..7 {
        let dx = half * XGK[k];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Globally adaptive 7/15-point Gauss–Kronrod on `[a, b]`: the panel with the
/// largest error estimate is bisected until the summed estimate is at most
/// `tol` (absolute) or `budget` evaluations are spent.
pub fn adaptive_gauss_kronrod<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    budget: usize,
) -> Result<QuadratureResult> {
    let mut heap = BinaryHeap::new();
    let first = kronrod_panel(&f, a, b);
    let mut evaluations = 15;
    let mut total_error = first.error;
    heap.push(first);

    while total_error > tol && evaluations + 30 <= budget {
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // cannot split further
            heap.push(worst);
            break;
        }
        let left = kronrod_panel(&f, worst.a, mid);
        let right = kronrod_panel(&f, mid, worst.b);
        evaluations += 30;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // the running total drifts; resum occasionally
        if heap.len() % 512 == 0 {
            total_error = heap.iter().map(|p| p.error).collect::<NeumaierSum>().value();
        }
    }

    let panels = heap.into_vec();
    let value = panels.iter().map(|p| p.value).collect::<NeumaierSum>().value();
    let error_estimate = panels.iter().map(|p| p.error).collect::<NeumaierSum>().value();
    if error_estimate > tol {
        return Err(Error::QuadratureBudget {
            tol,
            evaluations,
            estimate: error_estimate,
        });
    }
    Ok(QuadratureResult {
        value,
        error_estimate,
        evaluations,
    })
}

/// The untransformed integrand `Π_{i∈J} (x^(-p_i) - 1)`. Accumulates in log
/// space once a factor exceeds `1e10`.
pub fn raw_integrand(probs: &[f64], x: f64) -> f64 {
    let ln_x = x.ln();
    let factors: Vec<f64> = probs.iter().map(|&p| (-p * ln_x).exp_m1()).collect();
    if factors.iter().all(|&f| f <= 1e10) {
        factors.iter().product()
    } else {
        factors.iter().map(|f| f.ln()).sum::<f64>().exp()
    }
}

/// `c Π (1 - v^(c p_i))`, the integrand after `x = v^c`.
fn transformed_integrand(probs: &[f64], c: f64, v: f64) -> f64 {
    if v <= 0.0 {
        return c;
    }
    let ln_v = v.ln();
    c * probs.iter().map(|&p| -(c * p * ln_v).exp_m1()).product::<f64>()
}

/// `I_J` by adaptive quadrature of its integral form, to absolute tolerance
/// `tol ∈ [1e-12, 1e-3]`.
pub fn i_integral(pop: &Popularity, s: SubsetIndex, tol: f64) -> Result<QuadratureResult> {
    let m = pop.m();
    let size = s.size();
    if s.mask() >> m.min(63) != 0 {
        return Err(Error::MaskOutOfRange { mask: s.mask(), m });
    }
    if size == 0 || size >= m {
        if size == m {
            return Err(Error::FullMass);
        }
        return Err(Error::InvalidParameter(format!(
            "integral form needs 1 <= |J| <= m - 1, got |J| = {size}"
        )));
    }
    if !(MIN_TOL..=MAX_TOL).contains(&tol) {
        return Err(Error::InvalidParameter(format!(
            "tolerance {tol:e} outside [{MIN_TOL:e}, {MAX_TOL:e}]"
        )));
    }
    let probs: Vec<f64> = s.items().map(|i| pop.probs()[i]).collect();
    let rest = mass_out(pop.probs(), s.mask());
    if rest <= 0.0 {
        return Err(Error::FullMass);
    }
    let c = 1.0 / rest;
    adaptive_gauss_kronrod(
        |v| transformed_integrand(&probs, c, v),
        0.0,
        1.0,
        tol,
        EVALUATION_BUDGET,
    )
}
