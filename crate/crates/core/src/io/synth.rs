use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitmat::{BinMatrix, PackedBits};
use crate::error::{BmfError, Result};

/// Synthetic data with a known factorization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Planted {
    /// `X = D*⊗A* ⊕ N`.
    pub data: BinMatrix,
    pub dict: BinMatrix,
    pub coeffs: BinMatrix,
}

/// Draws `m × p` Bernoulli(1/2) atoms, gives every sample exactly
/// `coeff_weight` atoms chosen uniformly, and flips each bit of the product
/// independently with probability `noise_rate`.
pub fn synth_planted(m: usize, n: usize, p: usize, coeff_weight: usize, noise_rate: f64, seed: u64) -> Result<Planted> {
    if coeff_weight > p {
        return Err(BmfError::InvalidParameter(format!(
            "coefficient weight {coeff_weight} exceeds atom count {p}"
        )));
    }
    if !(0.0..1.0).contains(&noise_rate) {
        return Err(BmfError::InvalidParameter(format!(
            "noise rate must lie in [0, 1), got {noise_rate}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atoms = (0..p)
        .map(|_| PackedBits::from_bools((0..m).map(|_| rng.random_bool(0.5))))
        .collect();
    let dict = BinMatrix::from_columns(m, atoms)?;
    let coeff_cols = (0..n)
        .map(|_| PackedBits::from_indices(p, index::sample(&mut rng, p, coeff_weight)))
        .collect();
    let coeffs = BinMatrix::from_columns(p, coeff_cols)?;
    let mut data = dict.mod2_mul(&coeffs)?;
    if noise_rate > 0.0 {
        for col in data.columns_mut() {
            for i in 0..m {
                if rng.random_bool(noise_rate) {
                    col.toggle(i);
                }
            }
        }
    }
    Ok(Planted { data, dict, coeffs })
}
