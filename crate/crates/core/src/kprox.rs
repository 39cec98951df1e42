//! K-PROX: refit each atom and its coefficient row as a rank-one binary
//! approximation of the residual restricted to the atom's users, using the
//! Proximus alternating majority iteration.

use log::warn;

use crate::bitmat::{BinMatrix, PackedBits};
use crate::error::{BmfError, Result};
use crate::mob::{check_shapes, AtomChange};

/// Alternating majority updates for `min h(X ⊕ uvᵀ)`.
///
/// Each round sets `u_i = 1(X_i·v > h(v)/2)` for every row and then
/// `v_j = 1(X_jᵀ·u > h(u)/2)` for every column, ties going to 0. Each half
/// round is the exact minimizer given the other factor, so the cost never
/// increases; the iteration stops when the outer product `uvᵀ` repeats.
#[derive(Clone, Debug)]
pub struct Proximus<'a> {
    matrix: &'a BinMatrix,
    u: PackedBits,
    v: PackedBits,
    rounds: usize,
}

impl<'a> Proximus<'a> {
    /// # Panics
    ///
    /// Panics if `u0.len() != nrows` or `v0.len() != ncols`.
    pub fn new(matrix: &'a BinMatrix, u0: PackedBits, v0: PackedBits) -> Self {
        assert_eq!(u0.len(), matrix.nrows(), "left factor length mismatch");
        assert_eq!(v0.len(), matrix.ncols(), "right factor length mismatch");
        Self {
            matrix,
            u: u0,
            v: v0,
            rounds: 0,
        }
    }

    pub fn u(&self) -> &PackedBits {
        &self.u
    }

    pub fn v(&self) -> &PackedBits {
        &self.v
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// `h(X ⊕ uvᵀ)` for the current factors.
    pub fn cost(&self) -> usize {
        rank_one_cost(self.matrix, &self.u, &self.v)
    }

    /// One round; returns `true` if the outer product changed.
    pub fn step(&mut self) -> bool {
        let hv = self.v.weight();
        let u = PackedBits::from_bools(self.matrix.row_view().iter().map(|row| 2 * row.int_dot(&self.v) > hv));
        let hu = u.weight();
        let v = PackedBits::from_bools(self.matrix.columns().iter().map(|col| 2 * col.int_dot(&u) > hu));
        let changed = !same_outer_product((&self.u, &self.v), (&u, &v));
        self.u = u;
        self.v = v;
        self.rounds += 1;
        changed
    }

    /// Iterates to a fixed point, giving up after `nrows + ncols + 1` rounds.
    pub fn run(mut self) -> RankOne {
        let cap = self.matrix.nrows() + self.matrix.ncols() + 1;
        let mut converged = false;
        while self.rounds < cap {
            if !self.step() {
                converged = true;
                break;
            }
        }
        if !converged {
            warn!("proximus stopped at the round cap ({cap}) without reaching a fixed point");
        }
        RankOne {
            u: self.u,
            v: self.v,
            rounds: self.rounds,
            converged,
        }
    }
}

/// A rank-one factor pair and how it was reached.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankOne {
    pub u: PackedBits,
    pub v: PackedBits,
    pub rounds: usize,
    pub converged: bool,
}

/// Runs [`Proximus`] from `(u0, v0)` to its fixed point.
pub fn proximus_rank1(matrix: &BinMatrix, u0: PackedBits, v0: PackedBits) -> RankOne {
    Proximus::new(matrix, u0, v0).run()
}

/// `h(X ⊕ uvᵀ)`.
pub fn rank_one_cost(matrix: &BinMatrix, u: &PackedBits, v: &PackedBits) -> usize {
    matrix
        .columns()
        .iter()
        .enumerate()
        .map(|(j, col)| if v.get(j) { col.xor_weight(u) } else { col.weight() })
        .sum()
}

/// `uvᵀ = u'v'ᵀ`, where every pair with a zero factor is the zero product.
fn same_outer_product(a: (&PackedBits, &PackedBits), b: (&PackedBits, &PackedBits)) -> bool {
    let a_zero = a.0.is_zero() || a.1.is_zero();
    let b_zero = b.0.is_zero() || b.1.is_zero();
    match (a_zero, b_zero) {
        (true, true) => true,
        (false, false) => a.0 == b.0 && a.1 == b.1,
        _ => false,
    }
}

/// Refits atom `r` and row `r` of the coefficients.
///
/// On the users `J` of the atom, the restored residual `R_J = E_J ⊕ D_r 1ᵀ`
/// is approximated by Proximus started at `(D_r, 1)`. The result replaces
/// the incumbent only when it is no worse; users can be dropped but never
/// added. A factor pair with an empty side is stored as an all-zero atom
/// with no users.
pub fn kprox_update_atom(
    dict: &mut BinMatrix,
    coeffs: &mut BinMatrix,
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
    if users.is_empty() {
        return Ok(AtomChange::default());
    }
    let atom = dict.col(r).clone();
    let restored = BinMatrix::from_columns(
        dict.nrows(),
        users.iter().map(|&j| residual.col(j).xor(&atom)).collect(),
    )?;
    let before: usize = users.iter().map(|&j| residual.col(j).weight()).sum();

    let fit = proximus_rank1(&restored, atom.clone(), PackedBits::ones(users.len()));
    let (mut u, mut v) = (fit.u, fit.v);
    if u.is_zero() || v.is_zero() {
        u = PackedBits::zeros(u.len());
        v = PackedBits::zeros(v.len());
    }
    let after = rank_one_cost(&restored, &u, &v);
    if after > before {
        return Ok(AtomChange {
            users: users.len(),
            residual_before: before,
            residual_after: before,
            ..AtomChange::default()
        });
    }

    let mut coeff_bits_changed = 0;
    for (slot, &j) in users.iter().enumerate() {
        let keep = v.get(slot);
        let mut col = restored.col(slot).clone();
        if keep {
            col.xor_assign(&u);
        } else {
            coeffs.set(r, j, false);
            coeff_bits_changed += 1;
        }
        *residual.col_mut(j) = col;
    }
    let atom_bits_changed = atom.xor_weight(&u);
    *dict.col_mut(r) = u;
    Ok(AtomChange {
        users: users.len(),
        atom_bits_changed,
        coeff_bits_changed,
        residual_before: before,
        residual_after: after,
    })
}

/// One sweep of [`kprox_update_atom`] over atoms `0..p` in order.
pub fn kprox_update(dict: &mut BinMatrix, coeffs: &mut BinMatrix, residual: &mut BinMatrix) -> Result<Vec<AtomChange>> {
    check_shapes(dict, coeffs, residual)?;
    (0..dict.ncols())
        .map(|r| kprox_update_atom(dict, coeffs, residual, r))
        .collect()
}
