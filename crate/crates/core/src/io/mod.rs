//! Bitmap and graymap files, block extraction, synthetic data and model
//! directories.

mod blocks;
mod gray;
mod pbm;
mod store;
mod synth;

pub use blocks::{blocks_to_image, image_to_blocks, render_mosaic};
pub use gray::{binarize, load_pgm, parse_pgm, GrayImage};
pub use pbm::{encode_pbm, encode_pbm_ascii, load_pbm, parse_pbm, save_pbm};
pub use store::{load_model, save_model, ModelInfo, COEFFS_FILE, DICT_FILE, MANIFEST_FILE, RESIDUAL_FILE};
pub use synth::{synth_planted, Planted};
