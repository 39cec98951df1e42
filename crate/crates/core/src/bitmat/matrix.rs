use std::fmt;
use std::sync::OnceLock;

use super::bits::PackedBits;
use crate::error::{BmfError, Result};

/// A dense binary matrix stored column-packed.
///
/// Columns are the source of truth (one [`PackedBits`] of length `rows` per
/// column). A row-packed copy is built on first use by [`BinMatrix::row`] and
/// dropped by every mutating method.
#[derive(Clone, Default)]
pub struct BinMatrix {
    rows: usize,
    cols: Vec<PackedBits>,
    row_view: OnceLock<Vec<PackedBits>>,
}

impl BinMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_columns_unchecked(rows, vec![PackedBits::zeros(rows); cols])
    }

    /// Square matrix with ones on the diagonal.
    pub fn identity(size: usize) -> Self {
        let cols = (0..size).map(|k| PackedBits::from_indices(size, [k])).collect();
        Self::from_columns_unchecked(size, cols)
    }

    pub fn from_columns(rows: usize, cols: Vec<PackedBits>) -> Result<Self> {
        if let Some(bad) = cols.iter().find(|c| c.len() != rows) {
            return Err(BmfError::mismatch("matrix column length", rows, bad.len()));
        }
        Ok(Self::from_columns_unchecked(rows, cols))
    }

    pub fn from_rows(cols: usize, rows: Vec<PackedBits>) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(BmfError::mismatch("matrix row length", cols, bad.len()));
        }
        let nrows = rows.len();
        let columns = transpose_vectors(&rows, cols);
        let m = Self::from_columns_unchecked(nrows, columns);
        let _ = m.row_view.set(rows);
        Ok(m)
    }

    /// Builds a matrix from `rows` strings of `'0'`/`'1'`, one per row.
    pub fn from_row_strings<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let parsed = rows
            .iter()
            .map(|r| r.as_ref().parse::<PackedBits>())
            .collect::<Result<Vec<_>>>()?;
        let width = parsed.first().map_or(0, PackedBits::len);
        Self::from_rows(width, parsed)
    }

    fn from_columns_unchecked(rows: usize, cols: Vec<PackedBits>) -> Self {
        Self {
            rows,
            cols,
            row_view: OnceLock::new(),
        }
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    #[inline]
    pub fn col(&self, j: usize) -> &PackedBits {
        &self.cols[j]
    }

    pub fn columns(&self) -> &[PackedBits] {
        &self.cols
    }

    pub fn into_columns(self) -> Vec<PackedBits> {
        self.cols
    }

    /// Mutable access to column `j`; invalidates the row view.
    pub fn col_mut(&mut self, j: usize) -> &mut PackedBits {
        self.row_view.take();
        &mut self.cols[j]
    }

    pub fn columns_mut(&mut self) -> &mut [PackedBits] {
        self.row_view.take();
        &mut self.cols
    }

    /// Row `i` as a packed vector of length `ncols`.
    pub fn row(&self, i: usize) -> &PackedBits {
        &self.row_view()[i]
    }

    pub fn row_view(&self) -> &[PackedBits] {
        self.row_view.get_or_init(|| transpose_vectors(&self.cols, self.rows))
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cols[j].get(i)
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.col_mut(j).set(i, value);
    }

    /// Appends a column; its length must equal `nrows`.
    pub fn push_col(&mut self, col: PackedBits) -> Result<()> {
        if col.len() != self.rows {
            return Err(BmfError::mismatch("appended column length", self.rows, col.len()));
        }
        self.row_view.take();
        self.cols.push(col);
        Ok(())
    }

    /// Appends a row; its length must equal `ncols`.
    pub fn push_row(&mut self, row: &PackedBits) -> Result<()> {
        if row.len() != self.ncols() {
            return Err(BmfError::mismatch("appended row length", self.ncols(), row.len()));
        }
        self.row_view.take();
        for (j, col) in self.cols.iter_mut().enumerate() {
            col.push(row.get(j));
        }
        self.rows += 1;
        Ok(())
    }

    /// Total number of set bits.
    pub fn weight(&self) -> usize {
        self.cols.iter().map(PackedBits::weight).sum()
    }

    pub fn col_weights(&self) -> Vec<usize> {
        self.cols.iter().map(PackedBits::weight).collect()
    }

    pub fn row_weights(&self) -> Vec<usize> {
        self.row_view().iter().map(PackedBits::weight).collect()
    }

    pub fn transpose(&self) -> BinMatrix {
        let rows = self.row_view().to_vec();
        let t = Self::from_columns_unchecked(self.ncols(), rows);
        let _ = t.row_view.set(self.cols.clone());
        t
    }

    /// `self ⊗ a`: XOR of the columns selected by the set bits of `a`.
    ///
    /// # Panics
    ///
    /// Panics if `a.len() != ncols`.
    pub fn mod2_matvec(&self, a: &PackedBits) -> PackedBits {
        assert_eq!(a.len(), self.ncols(), "coefficient length mismatch");
        let mut out = PackedBits::zeros(self.rows);
        for k in a.iter_ones() {
            out.xor_assign(&self.cols[k]);
        }
        out
    }

    /// `self ∘ a`: OR of the columns selected by the set bits of `a`.
    pub fn bool_matvec(&self, a: &PackedBits) -> PackedBits {
        assert_eq!(a.len(), self.ncols(), "coefficient length mismatch");
        let rows = self.row_view();
        PackedBits::from_bools(rows.iter().map(|r| r.bool_dot(a)))
    }

    /// Modulo-2 product `self ⊗ rhs`.
    pub fn mod2_mul(&self, rhs: &BinMatrix) -> Result<BinMatrix> {
        if rhs.nrows() != self.ncols() {
            return Err(BmfError::mismatch(
                "mod-2 product inner dimension",
                self.ncols(),
                rhs.nrows(),
            ));
        }
        let cols = rhs.cols.iter().map(|a| self.mod2_matvec(a)).collect();
        Ok(Self::from_columns_unchecked(self.rows, cols))
    }

    /// Boolean product `self ∘ rhs`.
    pub fn bool_mul(&self, rhs: &BinMatrix) -> Result<BinMatrix> {
        if rhs.nrows() != self.ncols() {
            return Err(BmfError::mismatch(
                "Boolean product inner dimension",
                self.ncols(),
                rhs.nrows(),
            ));
        }
        let cols = rhs.cols.iter().map(|a| self.bool_matvec(a)).collect();
        Ok(Self::from_columns_unchecked(self.rows, cols))
    }

    /// Element-wise XOR.
    pub fn xor(&self, rhs: &BinMatrix) -> Result<BinMatrix> {
        self.check_same_shape(rhs)?;
        let cols = self.cols.iter().zip(&rhs.cols).map(|(a, b)| a.xor(b)).collect();
        Ok(Self::from_columns_unchecked(self.rows, cols))
    }

    /// Modulo-2 Gram matrix `selfᵀ ⊗ self`.
    pub fn mod2_gram(&self) -> Gram {
        self.gram_with(|a, b| u32::from(a.mod2_dot(b)))
    }

    /// Integer Gram matrix: pairwise column overlaps.
    pub fn int_gram(&self) -> Gram {
        self.gram_with(|a, b| a.int_dot(b) as u32)
    }

    fn gram_with(&self, f: impl Fn(&PackedBits, &PackedBits) -> u32) -> Gram {
        let p = self.ncols();
        let mut data = vec![0u32; p * p];
        for k in 0..p {
            for l in k..p {
                let v = f(&self.cols[k], &self.cols[l]);
                data[k * p + l] = v;
                data[l * p + k] = v;
            }
        }
        Gram { size: p, data }
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> BinMatrix {
        let cols = indices.iter().map(|&j| self.cols[j].clone()).collect();
        Self::from_columns_unchecked(self.rows, cols)
    }

    pub fn check_same_shape(&self, other: &BinMatrix) -> Result<()> {
        if self.rows != other.rows {
            return Err(BmfError::mismatch("matrix rows", self.rows, other.rows));
        }
        if self.ncols() != other.ncols() {
            return Err(BmfError::mismatch("matrix columns", self.ncols(), other.ncols()));
        }
        Ok(())
    }
}

/// Transposes `vectors` (each of length `len`) into `len` vectors of length `vectors.len()`.
fn transpose_vectors(vectors: &[PackedBits], len: usize) -> Vec<PackedBits> {
    let mut out = vec![PackedBits::zeros(vectors.len()); len];
    for (j, v) in vectors.iter().enumerate() {
        for i in v.iter_ones() {
            out[i].set(j, true);
        }
    }
    out
}

impl PartialEq for BinMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }
}

impl Eq for BinMatrix {}

impl fmt::Debug for BinMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinMatrix {}x{} [", self.rows, self.ncols())?;
        for r in self.row_view() {
            writeln!(f, "  {r}")?;
        }
        write!(f, "]")
    }
}

/// Symmetric `p × p` matrix of non-negative integers, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gram {
    size: usize,
    data: Vec<u32>,
}

impl Gram {
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> u32 {
        self.data[k * self.size + l]
    }

    /// Column `k`, which equals row `k` by symmetry.
    #[inline]
    pub fn column(&self, k: usize) -> &[u32] {
        &self.data[k * self.size..(k + 1) * self.size]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&str]) -> BinMatrix {
        BinMatrix::from_row_strings(rows).unwrap()
    }

    #[test]
    fn row_view_matches_columns() {
        let a = m(&["1010", "0111", "1100"]);
        assert_eq!(a.nrows(), 3);
        assert_eq!(a.ncols(), 4);
        assert_eq!(a.col(1).to_string(), "011");
        assert_eq!(a.row(1).to_string(), "0111");
        assert_eq!(a.row_weights(), vec![2, 3, 2]);
        assert_eq!(a.col_weights(), vec![2, 2, 2, 1]);
    }

    #[test]
    fn mutation_invalidates_row_view() {
        let mut a = BinMatrix::zeros(2, 3);
        assert!(a.row(0).is_zero());
        a.set(0, 2, true);
        assert_eq!(a.row(0).to_string(), "001");
        a.col_mut(0).set(1, true);
        assert_eq!(a.row(1).to_string(), "100");
    }

    #[test]
    fn gram_identity_and_zero_column() {
        assert_eq!(BinMatrix::identity(5).mod2_gram(), BinMatrix::identity(5).int_gram());
        let g = BinMatrix::identity(5).mod2_gram();
        for k in 0..5 {
            for l in 0..5 {
                assert_eq!(g.get(k, l), u32::from(k == l));
            }
        }
        let d = m(&["100", "110", "101"]);
        let g = d.mod2_gram();
        assert_eq!(g.column(0), &[1, 1, 1]);
        let mut z = d.clone();
        *z.col_mut(2) = PackedBits::zeros(3);
        let g = z.mod2_gram();
        assert_eq!(g.column(2), &[0, 0, 0]);
        assert_eq!((0..3).map(|k| g.get(k, 2)).collect::<Vec<_>>(), vec![0, 0, 0]);
    }

    #[test]
    fn matvec_examples() {
        let d = m(&["1100", "0110", "0011"]);
        assert!(d.mod2_matvec(&PackedBits::zeros(4)).is_zero());
        assert_eq!(&d.mod2_matvec(&PackedBits::from_indices(4, [2])), d.col(2));
        assert_eq!(d.mod2_matvec(&"0110".parse().unwrap()).to_string(), "101");
        assert_eq!(d.bool_matvec(&"0110".parse().unwrap()).to_string(), "111");
    }

    #[test]
    fn transpose_examples() {
        let i = BinMatrix::identity(7);
        assert_eq!(i.transpose(), i);
        let row = BinMatrix::from_rows(9, vec![PackedBits::ones(9)]).unwrap();
        let col = row.transpose();
        assert_eq!(col.nrows(), 9);
        assert_eq!(col.ncols(), 1);
        assert_eq!(col.col(0), &PackedBits::ones(9));
    }

    #[test]
    fn push_row_extends_every_column() {
        let mut a = m(&["10", "01"]);
        a.push_row(&"11".parse().unwrap()).unwrap();
        assert_eq!(a, m(&["10", "01", "11"]));
        assert!(a.push_row(&PackedBits::zeros(3)).is_err());
        let mut empty = BinMatrix::zeros(0, 3);
        empty.push_row(&"101".parse().unwrap()).unwrap();
        assert_eq!(empty, m(&["101"]));
    }

    #[test]
    fn product_shape_errors() {
        let a = BinMatrix::zeros(3, 4);
        assert!(a.mod2_mul(&BinMatrix::zeros(3, 2)).is_err());
        assert!(a.xor(&BinMatrix::zeros(3, 5)).is_err());
        assert!(BinMatrix::from_columns(3, vec![PackedBits::zeros(2)]).is_err());
    }
}
