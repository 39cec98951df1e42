//! Description lengths and MDL-driven choice of the number of atoms.
//!
//! A binary string of length `n` and weight `r` costs `⌈log₂ n⌉` bits for the
//! weight plus `⌈log₂ C(n, r)⌉` bits for its index among all strings of that
//! weight. A model is charged for every row of `E`, every column of `D` and
//! every row of `A`, each with its own code.

use std::time::Instant;

use log::info;
use num_bigint::BigUint;
use statrs::function::gamma::ln_gamma;

use crate::bitmat::{BinMatrix, PackedBits};
use crate::error::{BmfError, Result};
use crate::kprox::proximus_rank1;
use crate::learner::{initial_dictionary, learn, learn_from, LearnParams, Model};

/// `⌈log₂ x⌉` for `x ≥ 1`.
fn ceil_log2(x: u128) -> u64 {
    debug_assert!(x >= 1);
    if x <= 1 {
        0
    } else {
        u64::from(128 - (x - 1).leading_zeros())
    }
}

fn ceil_log2_big(x: &BigUint) -> u64 {
    let bits = x.bits();
    if bits == 0 {
        return 0;
    }
    let power_of_two = x.trailing_zeros() == Some(bits - 1);
    if power_of_two {
        bits - 1
    } else {
        bits
    }
}

fn binomial_u128(n: u64, r: u64) -> u128 {
    let r = r.min(n - r);
    (1..=u128::from(r)).fold(1u128, |c, i| c * (u128::from(n - r) + i) / i)
}

fn binomial_big(n: u64, r: u64) -> BigUint {
    let r = r.min(n - r);
    (1..=r).fold(BigUint::from(1u32), |c, i| c * (n - r + i) / i)
}

/// Half-width of the band around an integer within which the log-gamma
/// estimate is not trusted and the exact binomial decides the ceiling.
const CEIL_GUARD: f64 = 1e-6;

/// `⌈log₂ C(n, r)⌉`.
pub fn log2_binomial_ceil(n: u64, r: u64) -> Result<u64> {
    if r > n {
        return Err(BmfError::InvalidParameter(format!("weight {r} exceeds length {n}")));
    }
    if r == 0 || r == n {
        return Ok(0);
    }
    if n <= 64 {
        return Ok(ceil_log2(binomial_u128(n, r)));
    }
    let estimate =
        (ln_gamma(n as f64 + 1.0) - ln_gamma(r as f64 + 1.0) - ln_gamma((n - r) as f64 + 1.0)) / std::f64::consts::LN_2;
    if (estimate - estimate.round()).abs() < CEIL_GUARD {
        return Ok(ceil_log2_big(&binomial_big(n, r)));
    }
    Ok(estimate.ceil() as u64)
}

/// Enumerative codelength of a length-`n`, weight-`r` string:
/// `⌈log₂ n⌉ + ⌈log₂ C(n, r)⌉`.
pub fn enum_codelength(n: u64, r: u64) -> Result<u64> {
    if n == 0 {
        return Err(BmfError::InvalidParameter("codelength of an empty string".into()));
    }
    Ok(ceil_log2(u128::from(n)) + log2_binomial_ceil(n, r)?)
}

/// Bits needed for the components of a model.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CodelengthReport {
    /// Σ over atoms.
    pub dict_bits: u64,
    /// Σ over coefficient rows.
    pub coeff_bits: u64,
    /// Σ over residual rows.
    pub residual_bits: u64,
    pub total: u64,
    /// `total / n`.
    pub bits_per_sample: f64,
}

fn sum_codelengths(len: usize, weights: impl Iterator<Item = usize>) -> u64 {
    if len == 0 {
        return 0;
    }
    weights
        .map(|w| enum_codelength(len as u64, w as u64).expect("weight never exceeds its vector length"))
        .sum()
}

/// Codelength of `(D, A, E)`: each column of `D` (length `m`), each row of
/// `A` and each row of `E` (length `n`) gets its own enumerative code.
pub fn model_codelength(dict: &BinMatrix, coeffs: &BinMatrix, residual: &BinMatrix) -> CodelengthReport {
    let n = residual.ncols();
    let dict_bits = sum_codelengths(dict.nrows(), dict.columns().iter().map(PackedBits::weight));
    let coeff_bits = sum_codelengths(coeffs.ncols(), coeffs.row_view().iter().map(PackedBits::weight));
    let residual_bits = sum_codelengths(n, residual.row_view().iter().map(PackedBits::weight));
    let total = dict_bits + coeff_bits + residual_bits;
    CodelengthReport {
        dict_bits,
        coeff_bits,
        residual_bits,
        total,
        bits_per_sample: if n == 0 { 0.0 } else { total as f64 / n as f64 },
    }
}

/// Codelength of the data with no atoms at all.
pub fn baseline_codelength(data: &BinMatrix) -> CodelengthReport {
    model_codelength(
        &BinMatrix::zeros(data.nrows(), 0),
        &BinMatrix::zeros(0, data.ncols()),
        data,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectParams {
    /// Number of atoms of the first model.
    pub p0: usize,
    pub learn: LearnParams,
}

impl Default for SelectParams {
    fn default() -> Self {
        Self {
            p0: 1,
            learn: LearnParams::default(),
        }
    }
}

/// One evaluated model order.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub p: usize,
    pub report: CodelengthReport,
    /// `h(E)` of the model.
    pub residual_weight: usize,
    pub outer_iters: usize,
    pub converged: bool,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct Selection {
    pub model: Model,
    pub report: CodelengthReport,
    /// Codelength of the empty model.
    pub baseline: CodelengthReport,
    /// Every order tried, including the rejected last one.
    pub trajectory: Vec<TrajectoryRow>,
}

/// Starting point for a new atom: the heaviest residual column (lowest index
/// on ties) and the columns that share more than half of its bits.
pub fn rank_one_seed(residual: &BinMatrix) -> (PackedBits, PackedBits) {
    let heaviest = (0..residual.ncols())
        .map(|j| (residual.col(j).weight(), j))
        .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    let u0 = match heaviest {
        Some((w, j)) if w > 0 => residual.col(j).clone(),
        _ => return (PackedBits::zeros(residual.nrows()), PackedBits::zeros(residual.ncols())),
    };
    let hu = u0.weight();
    let v0 = PackedBits::from_bools(residual.columns().iter().map(|c| 2 * c.int_dot(&u0) > hu));
    (u0, v0)
}

/// Appends atom `u` with coefficient row `v` and patches `E ← E ⊕ uvᵀ`.
pub fn append_rank_one(model: &Model, u: PackedBits, v: &PackedBits) -> Result<Model> {
    let mut grown = model.clone();
    for j in v.iter_ones() {
        grown.residual.col_mut(j).xor_assign(&u);
    }
    grown.dict.push_col(u)?;
    grown.coeffs.push_row(v)?;
    grown.residual_weight = grown.residual.weight();
    Ok(grown)
}

/// Grows the model one atom at a time until the total codelength stops
/// decreasing, and returns the last model that improved it.
///
/// The first model has `p0` atoms drawn by `params.learn.init`. Each new atom
/// is a rank-one fit of the current residual, and the enlarged model is
/// re-learned from there.
pub fn forward_select(data: &BinMatrix, params: &SelectParams) -> Result<Selection> {
    if params.p0 == 0 {
        return Err(BmfError::InvalidParameter("p0 must be at least 1".into()));
    }
    let baseline = baseline_codelength(data);
    let mut trajectory = Vec::new();

    let start = Instant::now();
    let dict0 = initial_dictionary(data, params.p0, &params.learn)?;
    let mut current = learn(data, &dict0, &params.learn)?;
    let mut current_report = codelength_of(&current);
    trajectory.push(row(&current, current_report, start.elapsed().as_secs_f64()));
    info!("p = {}: {} bits", current.atoms(), current_report.total);

    loop {
        let start = Instant::now();
        let (u0, v0) = rank_one_seed(&current.residual);
        let fit = proximus_rank1(&current.residual, u0, v0);
        let grown = append_rank_one(&current, fit.u, &fit.v)?;
        let next = learn_from(data, grown.dict, grown.coeffs, &params.learn)?;
        let next_report = codelength_of(&next);
        trajectory.push(row(&next, next_report, start.elapsed().as_secs_f64()));
        info!("p = {}: {} bits", next.atoms(), next_report.total);
        if next_report.total >= current_report.total {
            break;
        }
        current = next;
        current_report = next_report;
    }
    Ok(Selection {
        model: current,
        report: current_report,
        baseline,
        trajectory,
    })
}

fn codelength_of(model: &Model) -> CodelengthReport {
    model_codelength(&model.dict, &model.coeffs, &model.residual)
}

fn row(model: &Model, report: CodelengthReport, seconds: f64) -> TrajectoryRow {
    TrajectoryRow {
        p: model.atoms(),
        report,
        residual_weight: model.residual_weight,
        outer_iters: model.outer_iters,
        converged: model.converged,
        seconds,
    }
}
