//! Binary Matching Pursuit (BMP): greedy toggling of coefficients until the
//! residual stops shrinking.
//!
//! For one sample `x` and dictionary `D`, BMP keeps the coefficients `a`, the
//! residual `r = x ⊕ D⊗a` and the correlations `g = Dᵀr` (standard integer
//! product). Each iteration picks the atom with the largest association
//! accuracy `|g_k| / h(D_k)`, tries `r ⊕ D_k`, and commits the toggle of
//! `a_k` only if the residual weight strictly drops.

use rayon::prelude::*;

use crate::bitmat::{BinMatrix, Gram, PackedBits};
use crate::error::{BmfError, Result};

/// Stopping thresholds for [`bmp_encode`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncodeParams {
    /// Cap on committed toggles per sample. `None` means one per atom.
    pub h_max: Option<usize>,
    /// Stop as soon as the residual weight falls below this value.
    pub w_max: usize,
}

impl Default for EncodeParams {
    fn default() -> Self {
        Self { h_max: None, w_max: 1 }
    }
}

impl EncodeParams {
    pub fn h_max_for(&self, atoms: usize) -> usize {
        self.h_max.unwrap_or(atoms)
    }
}

/// How the correlation vector is refreshed after a committed toggle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CorrelationUpdate {
    /// `g_l += |D_l ∧ D_k| − 2·|D_l ∧ D_k ∧ r|`, evaluated against the residual
    /// before the toggle. Keeps `g = Dᵀr` exactly.
    #[default]
    Exact,
    /// `g ∓= G_k` with the modulo-2 Gram matrix `G = Dᵀ⊗D`. Cheaper, but only
    /// agrees with `Dᵀr` when atom overlaps are disjoint from the residual or
    /// of unit size; kept for comparison.
    Mod2Gram,
}

/// A dictionary together with the quantities every BMP run needs.
#[derive(Clone, Debug)]
pub struct Codebook<'a> {
    dict: &'a BinMatrix,
    mod2_gram: Gram,
    overlaps: Gram,
    atom_weights: Vec<usize>,
}

impl<'a> Codebook<'a> {
    pub fn new(dict: &'a BinMatrix) -> Self {
        let overlaps = dict.int_gram();
        let atom_weights = (0..dict.ncols()).map(|k| overlaps.get(k, k) as usize).collect();
        Self {
            dict,
            mod2_gram: dict.mod2_gram(),
            overlaps,
            atom_weights,
        }
    }

    pub fn dict(&self) -> &BinMatrix {
        self.dict
    }

    pub fn mod2_gram(&self) -> &Gram {
        &self.mod2_gram
    }

    pub fn atom_weights(&self) -> &[usize] {
        &self.atom_weights
    }

    pub fn atoms(&self) -> usize {
        self.dict.ncols()
    }

    pub fn sample_len(&self) -> usize {
        self.dict.nrows()
    }
}

/// Why a BMP run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// `h(r) < w_max`.
    ResidualSmall,
    /// `h_max` toggles were committed.
    IterationCap,
    /// Best candidate has zero correlation, or no atom has nonzero weight.
    NoCorrelation,
    /// Toggling the best candidate would not reduce `h(r)`.
    NoImprovement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    /// Coefficient `atom` was flipped; `now_set` is its new value.
    Toggled {
        atom: usize,
        now_set: bool,
    },
    Stopped(StopReason),
}

/// The evolving state of one BMP run.
#[derive(Clone, Debug)]
pub struct BmpState {
    coeffs: PackedBits,
    residual: PackedBits,
    residual_weight: usize,
    correlations: Vec<i64>,
    toggles: usize,
}

impl BmpState {
    /// Starts from `a0`: `r = x ⊕ D⊗a0`, `g = Dᵀr`.
    ///
    /// # Panics
    ///
    /// Panics if `x` or `a0` do not conform to the codebook.
    pub fn new(x: &PackedBits, book: &Codebook<'_>, a0: PackedBits) -> Self {
        assert_eq!(x.len(), book.sample_len(), "sample length mismatch");
        assert_eq!(a0.len(), book.atoms(), "coefficient length mismatch");
        let mut residual = book.dict.mod2_matvec(&a0);
        residual.xor_assign(x);
        let correlations = book
            .dict
            .columns()
            .iter()
            .map(|d| d.int_dot(&residual) as i64)
            .collect();
        Self {
            residual_weight: residual.weight(),
            coeffs: a0,
            residual,
            correlations,
            toggles: 0,
        }
    }

    pub fn coeffs(&self) -> &PackedBits {
        &self.coeffs
    }

    pub fn residual(&self) -> &PackedBits {
        &self.residual
    }

    pub fn residual_weight(&self) -> usize {
        self.residual_weight
    }

    pub fn correlations(&self) -> &[i64] {
        &self.correlations
    }

    pub fn toggles(&self) -> usize {
        self.toggles
    }

    pub fn into_coeffs(self) -> PackedBits {
        self.coeffs
    }

    /// Atom with the largest `|g_k| / h(D_k)`, ties to the lowest index;
    /// zero-weight atoms are skipped.
    fn select(&self, book: &Codebook<'_>) -> Option<usize> {
        let mut best: Option<(usize, u64, u64)> = None;
        for (k, (&g, &w)) in self.correlations.iter().zip(&book.atom_weights).enumerate() {
            if w == 0 {
                continue;
            }
            let (num, den) = (g.unsigned_abs(), w as u64);
            let better = match best {
                None => true,
                Some((_, bn, bd)) => u128::from(num) * u128::from(bd) > u128::from(bn) * u128::from(den),
            };
            if better {
                best = Some((k, num, den));
            }
        }
        best.map(|(k, _, _)| k)
    }

    /// Runs one loop iteration.
    pub fn step(&mut self, book: &Codebook<'_>, params: &EncodeParams, update: CorrelationUpdate) -> Step {
        if self.residual_weight < params.w_max {
            return Step::Stopped(StopReason::ResidualSmall);
        }
        if self.toggles >= params.h_max_for(book.atoms()) {
            return Step::Stopped(StopReason::IterationCap);
        }
        let Some(k) = self.select(book) else {
            return Step::Stopped(StopReason::NoCorrelation);
        };
        if self.correlations[k] == 0 {
            return Step::Stopped(StopReason::NoCorrelation);
        }
        let atom = book.dict.col(k);
        let candidate_weight = self.residual.xor_weight(atom);
        if candidate_weight >= self.residual_weight {
            return Step::Stopped(StopReason::NoImprovement);
        }

        let was_set = self.coeffs.get(k);
        match update {
            CorrelationUpdate::Exact => {
                let shared = atom.and(&self.residual);
                let overlaps = book.overlaps.column(k);
                for (l, g) in self.correlations.iter_mut().enumerate() {
                    if overlaps[l] != 0 {
                        *g += i64::from(overlaps[l]) - 2 * book.dict.col(l).int_dot(&shared) as i64;
                    }
                }
            }
            CorrelationUpdate::Mod2Gram => {
                let column = book.mod2_gram.column(k);
                let sign = if was_set { -1 } else { 1 };
                for (g, &c) in self.correlations.iter_mut().zip(column) {
                    *g += sign * i64::from(c);
                }
            }
        }
        self.residual.xor_assign(atom);
        self.residual_weight = candidate_weight;
        self.coeffs.toggle(k);
        self.toggles += 1;
        Step::Toggled {
            atom: k,
            now_set: !was_set,
        }
    }

    /// Steps until a stop condition fires.
    pub fn run(&mut self, book: &Codebook<'_>, params: &EncodeParams, update: CorrelationUpdate) -> StopReason {
        loop {
            if let Step::Stopped(reason) = self.step(book, params, update) {
                return reason;
            }
        }
    }
}

/// Encodes one sample, warm-starting from `a0`.
///
/// # Panics
///
/// Panics if `x` or `a0` do not conform to the codebook.
pub fn bmp_encode(x: &PackedBits, book: &Codebook<'_>, a0: PackedBits, params: &EncodeParams) -> PackedBits {
    let mut state = BmpState::new(x, book, a0);
    state.run(book, params, CorrelationUpdate::Exact);
    state.into_coeffs()
}

/// Coefficients and residual for a batch of samples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Encoding {
    /// `p × n` coefficients.
    pub coeffs: BinMatrix,
    /// `m × n` residual `X ⊕ D⊗A`.
    pub residual: BinMatrix,
}

/// Runs BMP on every column of `data`, warm-starting column `j` from
/// column `j` of `init`. Columns are processed in parallel on the current
/// rayon pool; the result does not depend on the schedule.
pub fn encode_all(data: &BinMatrix, dict: &BinMatrix, init: &BinMatrix, params: &EncodeParams) -> Result<Encoding> {
    if dict.nrows() != data.nrows() {
        return Err(BmfError::mismatch(
            "dictionary rows vs sample length",
            data.nrows(),
            dict.nrows(),
        ));
    }
    if init.nrows() != dict.ncols() {
        return Err(BmfError::mismatch(
            "initial coefficient rows vs atoms",
            dict.ncols(),
            init.nrows(),
        ));
    }
    if init.ncols() != data.ncols() {
        return Err(BmfError::mismatch(
            "initial coefficient columns vs samples",
            data.ncols(),
            init.ncols(),
        ));
    }
    let book = Codebook::new(dict);
    let (coeffs, residual): (Vec<_>, Vec<_>) = data
        .columns()
        .par_iter()
        .zip(init.columns().par_iter())
        .map(|(x, a0)| {
            let mut state = BmpState::new(x, &book, a0.clone());
            state.run(&book, params, CorrelationUpdate::Exact);
            (state.coeffs, state.residual)
        })
        .unzip();
    Ok(Encoding {
        coeffs: BinMatrix::from_columns(dict.ncols(), coeffs)?,
        residual: BinMatrix::from_columns(data.nrows(), residual)?,
    })
}
