//! Method of Binary Directions: each atom becomes the bitwise majority of
//! the residual columns that use it, with the atom's own contribution put
//! back first.

use crate::bitmat::{BinMatrix, PackedBits};
use crate::error::{BmfError, Result};

/// Outcome of refitting one atom.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AtomChange {
    /// Number of samples using the atom.
    pub users: usize,
    /// Bits of the atom that flipped.
    pub atom_bits_changed: usize,
    /// Bits of the coefficient row that flipped (always 0 for MOB).
    pub coeff_bits_changed: usize,
    pub residual_before: usize,
    pub residual_after: usize,
}

/// Majority vote `d_i = 1(2·count_i > users)`; ties resolve to 0.
pub(crate) fn majority(len: usize, columns: impl Iterator<Item = PackedBits>) -> PackedBits {
    let mut counts = vec![0usize; len];
    let mut users = 0usize;
    for col in columns {
        users += 1;
        for i in col.iter_ones() {
            counts[i] += 1;
        }
    }
    PackedBits::from_bools(counts.into_iter().map(|c| 2 * c > users))
}

/// Refits atom `r` given residual `e = X ⊕ D⊗A`, patching `e` in place.
///
/// With `J` the samples using the atom and `Ẽ_j = E_j ⊕ D_r`, the new atom
/// minimizes `Σ_{j∈J} h(Ẽ_j ⊕ d)` over all binary `d`. An unused atom is
/// left alone.
pub fn mob_update_atom(
    dict: &mut BinMatrix,
    coeffs: &BinMatrix,
    residual: &mut BinMatrix,
    r: usize,
) -> Result<AtomChange> {
    if r >= dict.ncols() {
        return Err(BmfError::IndexOutOfRange {
            context: "dictionary atoms",
            index: r,
            size: dict.ncols(),
        });
    }
    let users: Vec<usize> = coeffs.row(r).iter_ones().collect();
    let before: usize = users.iter().map(|&j| residual.col(j).weight()).sum();
    if users.is_empty() {
        return Ok(AtomChange::default());
    }
    let old = dict.col(r).clone();
    let new = majority(dict.nrows(), users.iter().map(|&j| residual.col(j).xor(&old)));
    let delta = old.xor(&new);
    let mut after = 0;
    for &j in &users {
        let col = residual.col_mut(j);
        col.xor_assign(&delta);
        after += col.weight();
    }
    *dict.col_mut(r) = new;
    Ok(AtomChange {
        users: users.len(),
        atom_bits_changed: delta.weight(),
        coeff_bits_changed: 0,
        residual_before: before,
        residual_after: after,
    })
}

/// One sweep of [`mob_update_atom`] over atoms `0..p` in order.
pub fn mob_update(dict: &mut BinMatrix, coeffs: &BinMatrix, residual: &mut BinMatrix) -> Result<Vec<AtomChange>> {
    check_shapes(dict, coeffs, residual)?;
    (0..dict.ncols())
        .map(|r| mob_update_atom(dict, coeffs, residual, r))
        .collect()
}

pub(crate) fn check_shapes(dict: &BinMatrix, coeffs: &BinMatrix, residual: &BinMatrix) -> Result<()> {
    if coeffs.nrows() != dict.ncols() {
        return Err(BmfError::mismatch(
            "coefficient rows vs atoms",
            dict.ncols(),
            coeffs.nrows(),
        ));
    }
    if residual.nrows() != dict.nrows() {
        return Err(BmfError::mismatch(
            "residual rows vs atom length",
            dict.nrows(),
            residual.nrows(),
        ));
    }
    if residual.ncols() != coeffs.ncols() {
        return Err(BmfError::mismatch(
            "residual columns vs samples",
            coeffs.ncols(),
            residual.ncols(),
        ));
    }
    Ok(())
}
