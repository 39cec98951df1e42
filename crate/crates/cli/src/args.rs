use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use bmf::learner::{Init, LearnParams, Method};
use bmf::EncodeParams;

#[derive(Debug, Parser)]
#[command(name = "bmf", version, about = "Binary matrix factorization X = D⊗A ⊕ E")]
pub struct Cli {
    /// Worker threads for the coefficient sweep (default: all cores).
    #[arg(long, global = true, env = "BMF_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn a model with a fixed number of atoms.
    Learn(LearnArgs),
    /// Choose the number of atoms by minimum description length.
    Select(SelectArgs),
    /// Encode samples with an existing dictionary.
    Encode(EncodeArgs),
    /// Render matrix columns as a tiled bitmap.
    Mosaic(MosaicArgs),
    /// Generate planted synthetic data.
    Synth(SynthArgs),
    /// Cut one image into non-overlapping blocks, one sample per block.
    Blocks(BlocksArgs),
    /// Stack a directory of small images into one sample per image.
    Stack(StackArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Mob,
    Kprox,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Mob => Method::Mob,
            MethodArg::Kprox => Method::Kprox,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Bernoulli,
    Samples,
}

/// Flags shared by `learn` and `select`.
#[derive(Debug, Args)]
pub struct TrainingArgs {
    /// Data matrix as a PBM bitmap; each column is one sample.
    #[arg(long)]
    pub input: PathBuf,
    /// Output model directory.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "mob")]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value = "bernoulli")]
    pub init: InitArg,
    /// Bit density of Bernoulli-initialized atoms.
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Toggle cap per sample (default: number of atoms).
    #[arg(long)]
    pub h_max: Option<usize>,
    /// Stop encoding a sample once its residual weight drops below this.
    #[arg(long, default_value_t = 1)]
    pub w_max: usize,
    /// Outer iteration cap.
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
}

impl TrainingArgs {
    pub fn learn_params(&self) -> anyhow::Result<LearnParams> {
        let init = match self.init {
            InitArg::Bernoulli => Init::Bernoulli { theta: self.theta },
            InitArg::Samples => Init::Samples,
        };
        let params = LearnParams {
            method: self.method.into(),
            encode: EncodeParams {
                h_max: self.h_max,
                w_max: self.w_max,
            },
            max_outer_iter: self.max_iter,
            seed: self.seed,
            init,
            replace_dead_atoms: false,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[command(flatten)]
    pub training: TrainingArgs,
    /// Number of atoms.
    #[arg(long = "atoms", value_name = "P")]
    pub atoms: usize,
    /// Start from this dictionary instead of drawing one.
    #[arg(long, value_name = "PBM")]
    pub init_dict: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub training: TrainingArgs,
    /// Number of atoms of the first model.
    #[arg(long, default_value_t = 1)]
    pub p0: usize,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Model directory whose dictionary is used.
    #[arg(long)]
    pub model: PathBuf,
    /// Samples to encode (PBM).
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory for coeffs.pbm and residual.pbm.
    #[arg(long)]
    pub output: PathBuf,
    /// Warm-start from the model's stored coefficients.
    #[arg(long)]
    pub warm: bool,
    #[arg(long)]
    pub h_max: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub w_max: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Component {
    Atoms,
    Residual,
}

#[derive(Debug, Args)]
pub struct MosaicArgs {
    /// Model directory to render from.
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    pub model: Option<PathBuf>,
    /// Matrix whose columns are rendered.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Which model matrix to render.
    #[arg(long, value_enum, default_value = "atoms")]
    pub component: Component,
    /// Tile size as HxW; H·W must equal the column length.
    #[arg(long)]
    pub tile: TileSize,
    /// Tiles per mosaic row (default: ⌈√count⌉).
    #[arg(long)]
    pub grid_cols: Option<usize>,
    /// Output PBM image.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Sample length m.
    #[arg(long)]
    pub rows: usize,
    /// Number of samples n.
    #[arg(long)]
    pub samples: usize,
    /// Number of planted atoms.
    #[arg(long = "atoms", value_name = "P")]
    pub atoms: usize,
    /// Atoms per sample.
    #[arg(long)]
    pub coeff_weight: usize,
    /// Bit-flip probability.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for data.pbm, dict.pbm and coeffs.pbm.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct BlocksArgs {
    /// PBM or PGM image.
    #[arg(long)]
    pub input: PathBuf,
    /// Block size as HxW.
    #[arg(long)]
    pub tile: TileSize,
    /// Gray level at or above which a PGM pixel becomes 1 (default: half of maxval, rounded up).
    #[arg(long)]
    pub threshold: Option<u16>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FitArg {
    Crop,
    Resize,
}

#[derive(Debug, Args)]
pub struct StackArgs {
    /// Directory of PBM/PGM images, read in file-name order.
    #[arg(long)]
    pub input: PathBuf,
    /// Size every image is brought to, as HxW.
    #[arg(long)]
    pub tile: TileSize,
    /// Center-crop or nearest-neighbour resize to the tile size.
    #[arg(long, value_enum, default_value = "crop")]
    pub fit: FitArg,
    #[arg(long)]
    pub threshold: Option<u16>,
    #[arg(long)]
    pub output: PathBuf,
}

/// `HxW`, e.g. `16x16`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TileSize {
    pub height: usize,
    pub width: usize,
}

impl FromStr for TileSize {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let (h, w) = s
            .split_once(['x', 'X'])
            .with_context(|| format!("tile size {s:?} is not of the form HxW"))?;
        let height: usize = h.trim().parse().with_context(|| format!("bad tile height {h:?}"))?;
        let width: usize = w.trim().parse().with_context(|| format!("bad tile width {w:?}"))?;
        if height == 0 || width == 0 {
            bail!("tile dimensions must be positive");
        }
        Ok(Self { height, width })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tile_parsing() {
        assert_eq!("16x8".parse::<TileSize>().unwrap(), TileSize { height: 16, width: 8 });
        assert!("16".parse::<TileSize>().is_err());
        assert!("0x4".parse::<TileSize>().is_err());
        assert!("ax4".parse::<TileSize>().is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
