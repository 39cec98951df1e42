//! Binary matrix factorization over GF(2).
//!
//! A binary data matrix `X` (`m × n`, one sample per column) is decomposed as
//! `X = D⊗A ⊕ E`: a dictionary `D` of `p` binary atoms, sparse binary
//! coefficients `A` combined with the modulo-2 product, and a residual `E`
//! holding the bits the model does not explain.
//!
//! * [`encoder`] computes coefficients with Binary Matching Pursuit.
//! * [`mob`] and [`kprox`] update the dictionary.
//! * [`learner`] alternates the two until nothing changes.
//! * [`mdl`] chooses `p` by minimum description length.
//! * [`io`] reads and writes bitmaps and model directories.
//!
//! ```
//! use bmf::io::synth_planted;
//! use bmf::learner::{learn, LearnParams};
//!
//! let planted = synth_planted(32, 200, 4, 1, 0.0, 7).unwrap();
//! let model = learn(&planted.data, &planted.dict, &LearnParams::default()).unwrap();
//! assert_eq!(model.residual_weight, 0);
//! assert!(model.converged);
//! ```

pub mod bitmat;
pub mod encoder;
mod error;
pub mod io;
pub mod kprox;
pub mod learner;
pub mod mdl;
pub mod mob;

pub use bitmat::{BinMatrix, Gram, PackedBits};
pub use encoder::{bmp_encode, encode_all, Codebook, EncodeParams, Encoding};
pub use error::{BmfError, Result};
pub use kprox::{kprox_update, kprox_update_atom, proximus_rank1, RankOne};
pub use learner::{init_bernoulli, init_samples, learn, learn_from, Init, LearnParams, Method, Model};
pub use mdl::{enum_codelength, forward_select, model_codelength, CodelengthReport, SelectParams, Selection};
pub use mob::{mob_update, mob_update_atom};
