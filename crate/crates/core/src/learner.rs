//! Alternate minimization: BMP coefficient sweeps interleaved with a MOB or
//! K-PROX dictionary sweep, until neither factor changes.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use log::{debug, warn};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitmat::{BinMatrix, PackedBits};
use crate::encoder::{encode_all, EncodeParams};
use crate::error::{BmfError, Result};
use crate::kprox::kprox_update;
use crate::mob::mob_update;

/// Dictionary update rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Method {
    /// Per-atom majority vote.
    #[default]
    Mob,
    /// Per-atom rank-one refit with Proximus.
    Kprox,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Mob => "mob",
            Method::Kprox => "kprox",
        })
    }
}

impl FromStr for Method {
    type Err = BmfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mob" => Ok(Method::Mob),
            "kprox" | "k-prox" => Ok(Method::Kprox),
            other => Err(BmfError::InvalidParameter(format!("unknown method {other:?}"))),
        }
    }
}

/// How the initial dictionary is drawn.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    /// Every bit independently set with probability `theta`.
    Bernoulli { theta: f64 },
    /// Distinct data columns picked uniformly at random.
    Samples,
}

impl Default for Init {
    fn default() -> Self {
        Init::Bernoulli { theta: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnParams {
    pub method: Method,
    pub encode: EncodeParams,
    pub max_outer_iter: usize,
    pub seed: u64,
    pub init: Init,
    /// Re-seed atoms that lost every user with a residual column.
    pub replace_dead_atoms: bool,
}

impl Default for LearnParams {
    fn default() -> Self {
        Self {
            method: Method::Mob,
            encode: EncodeParams::default(),
            max_outer_iter: 100,
            seed: 0,
            init: Init::default(),
            replace_dead_atoms: false,
        }
    }
}

impl LearnParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iter == 0 {
            return Err(BmfError::InvalidParameter("max_outer_iter must be at least 1".into()));
        }
        if let Init::Bernoulli { theta } = self.init {
            check_theta(theta)?;
        }
        Ok(())
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(BmfError::InvalidParameter(format!(
            "theta must lie in (0, 1), got {theta}"
        )))
    }
}

/// One outer iteration of [`learn`].
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// `h(E)` after the coefficient sweep.
    pub residual_after_encode: usize,
    /// `h(E)` after the dictionary sweep.
    pub residual_weight: usize,
    pub changed_bits_dict: usize,
    pub changed_bits_coeffs: usize,
    pub seconds: f64,
}

/// A factorization `X = D⊗A ⊕ E`.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    /// `m × p` atoms.
    pub dict: BinMatrix,
    /// `p × n` coefficients, one column per sample.
    pub coeffs: BinMatrix,
    /// `m × n` residual.
    pub residual: BinMatrix,
    pub residual_weight: usize,
    pub outer_iters: usize,
    /// `true` when the last iteration left both factors unchanged.
    pub converged: bool,
    pub history: Vec<IterationRecord>,
}

impl Model {
    /// A model with no atoms: `E = X`.
    pub fn empty(data: &BinMatrix) -> Self {
        Self {
            dict: BinMatrix::zeros(data.nrows(), 0),
            coeffs: BinMatrix::zeros(0, data.ncols()),
            residual: data.clone(),
            residual_weight: data.weight(),
            outer_iters: 0,
            converged: true,
            history: Vec::new(),
        }
    }

    pub fn atoms(&self) -> usize {
        self.dict.ncols()
    }

    /// Checks `E = X ⊕ D⊗A` and the cached residual weight.
    pub fn verify(&self, data: &BinMatrix) -> Result<()> {
        let rebuilt = data.xor(&self.dict.mod2_mul(&self.coeffs)?)?;
        if rebuilt != self.residual {
            return Err(BmfError::InconsistentModel("residual differs from X ⊕ D⊗A".into()));
        }
        if self.residual_weight != self.residual.weight() {
            return Err(BmfError::InconsistentModel(format!(
                "stored residual weight {} but h(E) = {}",
                self.residual_weight,
                self.residual.weight()
            )));
        }
        Ok(())
    }
}

/// `m × p` matrix of independent Bernoulli(`theta`) bits.
pub fn init_bernoulli(m: usize, p: usize, theta: f64, seed: u64) -> Result<BinMatrix> {
    check_theta(theta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = (0..p)
        .map(|_| PackedBits::from_bools((0..m).map(|_| rng.random_bool(theta))))
        .collect();
    BinMatrix::from_columns(m, cols)
}

/// `p` distinct columns of `data`, drawn uniformly without replacement.
pub fn init_samples(data: &BinMatrix, p: usize, seed: u64) -> Result<BinMatrix> {
    if p > data.ncols() {
        return Err(BmfError::InvalidParameter(format!(
            "cannot draw {p} distinct columns from {} samples",
            data.ncols()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = index::sample(&mut rng, data.ncols(), p).into_vec();
    Ok(data.select_columns(&picks))
}

/// Draws a `p`-atom starting dictionary according to `params.init`.
pub fn initial_dictionary(data: &BinMatrix, p: usize, params: &LearnParams) -> Result<BinMatrix> {
    match params.init {
        Init::Bernoulli { theta } => init_bernoulli(data.nrows(), p, theta, params.seed),
        Init::Samples => init_samples(data, p, params.seed),
    }
}

/// Learns a model from dictionary `dict0`, starting with all-zero coefficients.
pub fn learn(data: &BinMatrix, dict0: &BinMatrix, params: &LearnParams) -> Result<Model> {
    let coeffs0 = BinMatrix::zeros(dict0.ncols(), data.ncols());
    learn_from(data, dict0.clone(), coeffs0, params)
}

/// Learns a model warm-started at `(dict, coeffs)`.
///
/// Each outer iteration re-encodes every sample (warm-started from the
/// current coefficients) and then sweeps the dictionary. The loop ends when
/// an iteration leaves both `D` and `A` bit-identical, or after
/// `max_outer_iter` iterations.
pub fn learn_from(data: &BinMatrix, mut dict: BinMatrix, mut coeffs: BinMatrix, params: &LearnParams) -> Result<Model> {
    params.validate()?;
    if dict.nrows() != data.nrows() {
        return Err(BmfError::mismatch(
            "dictionary rows vs sample length",
            data.nrows(),
            dict.nrows(),
        ));
    }
    if coeffs.nrows() != dict.ncols() || coeffs.ncols() != data.ncols() {
        return Err(BmfError::mismatch(
            "coefficient shape",
            dict.ncols() * data.ncols(),
            coeffs.nrows() * coeffs.ncols(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x5eed_dead_a70b);
    let mut history = Vec::new();
    let mut residual = data.xor(&dict.mod2_mul(&coeffs)?)?;
    let mut converged = false;

    for iter in 1..=params.max_outer_iter {
        let start = Instant::now();
        let dict_before = dict.clone();
        let coeffs_before = coeffs.clone();

        let encoded = encode_all(data, &dict, &coeffs, &params.encode)?;
        coeffs = encoded.coeffs;
        residual = encoded.residual;
        let residual_after_encode = residual.weight();

        match params.method {
            Method::Mob => {
                mob_update(&mut dict, &coeffs, &mut residual)?;
            }
            Method::Kprox => {
                kprox_update(&mut dict, &mut coeffs, &mut residual)?;
            }
        }
        if params.replace_dead_atoms {
            replace_dead_atoms(&mut dict, &coeffs, &residual, &mut rng);
        }

        let record = IterationRecord {
            iter,
            residual_after_encode,
            residual_weight: residual.weight(),
            changed_bits_dict: changed_bits(&dict_before, &dict),
            changed_bits_coeffs: changed_bits(&coeffs_before, &coeffs),
            seconds: start.elapsed().as_secs_f64(),
        };
        debug!(
            "iter {iter}: h(E) {} -> {}, changed D {} A {}",
            record.residual_after_encode, record.residual_weight, record.changed_bits_dict, record.changed_bits_coeffs
        );
        let done = record.changed_bits_dict == 0 && record.changed_bits_coeffs == 0;
        history.push(record);
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        warn!(
            "learning stopped at the iteration cap ({}) before convergence",
            params.max_outer_iter
        );
    }
    Ok(Model {
        residual_weight: residual.weight(),
        outer_iters: history.len(),
        dict,
        coeffs,
        residual,
        converged,
        history,
    })
}

fn changed_bits(before: &BinMatrix, after: &BinMatrix) -> usize {
    before
        .columns()
        .iter()
        .zip(after.columns())
        .map(|(a, b)| a.xor_weight(b))
        .sum()
}

fn replace_dead_atoms(dict: &mut BinMatrix, coeffs: &BinMatrix, residual: &BinMatrix, rng: &mut ChaCha8Rng) {
    let candidates: Vec<usize> = (0..residual.ncols()).filter(|&j| !residual.col(j).is_zero()).collect();
    if candidates.is_empty() {
        return;
    }
    let dead: Vec<usize> = (0..dict.ncols()).filter(|&k| coeffs.row(k).is_zero()).collect();
    for k in dead {
        let pick = candidates[rng.random_range(0..candidates.len())];
        *dict.col_mut(k) = residual.col(pick).clone();
    }
}
