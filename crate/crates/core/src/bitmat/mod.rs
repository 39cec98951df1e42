//! Bit-packed binary vectors and matrices with Boolean, modulo-2 and
//! integer products.

mod bits;
mod matrix;

pub use bits::{Ones, PackedBits, WORD_BITS};
pub use matrix::{BinMatrix, Gram};
