use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::Serialize;

use bmf::io::{
    binarize, image_to_blocks, load_model, load_pbm, parse_pbm, parse_pgm, render_mosaic, save_model, save_pbm,
    synth_planted, GrayImage, ModelInfo, COEFFS_FILE, RESIDUAL_FILE,
};
use bmf::learner::{self, initial_dictionary};
use bmf::mdl::forward_select;
use bmf::{encode_all, model_codelength, BinMatrix, EncodeParams, SelectParams};

use crate::args::{
    BlocksArgs, Component, EncodeArgs, FitArg, LearnArgs, MosaicArgs, SelectArgs, StackArgs, SynthArgs, TileSize,
};

pub const ITERATIONS_CSV: &str = "iterations.csv";
pub const TRAJECTORY_CSV: &str = "trajectory.csv";

#[derive(Serialize)]
struct IterationRow {
    iter: usize,
    #[serde(rename = "h_E")]
    residual_weight: usize,
    #[serde(rename = "changed_bits_D")]
    changed_dict: usize,
    #[serde(rename = "changed_bits_A")]
    changed_coeffs: usize,
    seconds: String,
}

#[derive(Serialize)]
struct TrajectoryRow {
    p: usize,
    #[serde(rename = "L_D")]
    dict_bits: u64,
    #[serde(rename = "L_A")]
    coeff_bits: u64,
    #[serde(rename = "L_E")]
    residual_bits: u64,
    total: u64,
    bits_per_sample: String,
    wall_time_seconds: String,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut out = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for row in rows {
        out.serialize(row)?;
    }
    out.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn load_matrix(path: &Path) -> Result<BinMatrix> {
    load_pbm(path).with_context(|| format!("reading {}", path.display()))
}

pub fn learn(a: &LearnArgs) -> Result<()> {
    ensure!(a.atoms >= 1, "p must be ≥ 1");
    let t = &a.training;
    let params = t.learn_params()?;
    let data = load_matrix(&t.input)?;
    let dict0 = match &a.init_dict {
        Some(path) => {
            let dict = load_matrix(path)?;
            ensure!(
                dict.ncols() == a.atoms,
                "initial dictionary has {} atoms, --atoms is {}",
                dict.ncols(),
                a.atoms
            );
            dict
        }
        None => initial_dictionary(&data, a.atoms, &params)?,
    };
    let model = learner::learn(&data, &dict0, &params)?;
    if !model.converged {
        log::warn!(
            "stopped at the iteration cap ({}) before converging",
            params.max_outer_iter
        );
    }
    let info = ModelInfo {
        method: params.method,
        seed: params.seed,
    };
    let report = save_model(&model, &info, &t.output)?;
    write_csv(
        &t.output.join(ITERATIONS_CSV),
        model.history.iter().map(|r| IterationRow {
            iter: r.iter,
            residual_weight: r.residual_weight,
            changed_dict: r.changed_bits_dict,
            changed_coeffs: r.changed_bits_coeffs,
            seconds: format!("{:.3}", r.seconds),
        }),
    )?;
    println!(
        "p = {}, h(E) = {}, iterations = {}, converged = {}, bits per sample = {:.6}",
        model.atoms(),
        model.residual_weight,
        model.outer_iters,
        model.converged,
        report.bits_per_sample
    );
    Ok(())
}

pub fn select(a: &SelectArgs) -> Result<()> {
    ensure!(a.p0 >= 1, "p0 must be ≥ 1");
    let t = &a.training;
    let params = SelectParams {
        p0: a.p0,
        learn: t.learn_params()?,
    };
    let data = load_matrix(&t.input)?;
    let selection = forward_select(&data, &params)?;
    let info = ModelInfo {
        method: params.learn.method,
        seed: params.learn.seed,
    };
    save_model(&selection.model, &info, &t.output)?;
    write_csv(
        &t.output.join(TRAJECTORY_CSV),
        selection.trajectory.iter().map(|r| TrajectoryRow {
            p: r.p,
            dict_bits: r.report.dict_bits,
            coeff_bits: r.report.coeff_bits,
            residual_bits: r.report.residual_bits,
            total: r.report.total,
            bits_per_sample: format!("{:.6}", r.report.bits_per_sample),
            wall_time_seconds: format!("{:.3}", r.seconds),
        }),
    )?;
    println!(
        "selected p = {}, bits per sample = {:.6} (baseline {:.6})",
        selection.model.atoms(),
        selection.report.bits_per_sample,
        selection.baseline.bits_per_sample
    );
    Ok(())
}

pub fn encode(a: &EncodeArgs) -> Result<()> {
    let (model, _) = load_model(&a.model, None).with_context(|| format!("loading model {}", a.model.display()))?;
    let data = load_matrix(&a.input)?;
    ensure!(
        model.dict.nrows() == data.nrows(),
        "model atoms have {} rows but input samples have {}",
        model.dict.nrows(),
        data.nrows()
    );
    let init = if a.warm {
        ensure!(
            model.coeffs.ncols() == data.ncols(),
            "--warm needs the model's {} samples, input has {}",
            model.coeffs.ncols(),
            data.ncols()
        );
        model.coeffs.clone()
    } else {
        BinMatrix::zeros(model.atoms(), data.ncols())
    };
    let params = EncodeParams {
        h_max: a.h_max,
        w_max: a.w_max,
    };
    let encoded = encode_all(&data, &model.dict, &init, &params)?;
    let report = model_codelength(&model.dict, &encoded.coeffs, &encoded.residual);
    create_dir(&a.output)?;
    save_pbm(&encoded.coeffs, a.output.join(COEFFS_FILE))?;
    save_pbm(&encoded.residual, a.output.join(RESIDUAL_FILE))?;
    println!(
        "h(E) = {}, bits per sample = {:.6}",
        encoded.residual.weight(),
        report.bits_per_sample
    );
    Ok(())
}

pub fn mosaic(a: &MosaicArgs) -> Result<()> {
    let columns = match (&a.model, &a.input) {
        (Some(dir), _) => {
            let (model, _) = load_model(dir, None).with_context(|| format!("loading model {}", dir.display()))?;
            match a.component {
                Component::Atoms => model.dict,
                Component::Residual => model.residual,
            }
        }
        (None, Some(path)) => load_matrix(path)?,
        (None, None) => bail!("either --model or --input is required"),
    };
    let TileSize { height, width } = a.tile;
    ensure!(
        height * width == columns.nrows(),
        "tile {height}x{width} has {} pixels but columns have {} entries",
        height * width,
        columns.nrows()
    );
    let grid_cols = match a.grid_cols {
        Some(g) => g,
        None => ceil_sqrt(columns.ncols()).max(1),
    };
    let image = render_mosaic(&columns, height, width, grid_cols)?;
    save_pbm(&image, &a.output)?;
    Ok(())
}

fn ceil_sqrt(n: usize) -> usize {
    let r = n.isqrt();
    if r * r < n {
        r + 1
    } else {
        r
    }
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    ensure!(a.atoms >= 1, "p must be ≥ 1");
    let planted = synth_planted(a.rows, a.samples, a.atoms, a.coeff_weight, a.noise, a.seed)?;
    create_dir(&a.output)?;
    save_pbm(&planted.data, a.output.join("data.pbm"))?;
    save_pbm(&planted.dict, a.output.join("dict.pbm"))?;
    save_pbm(&planted.coeffs, a.output.join("coeffs.pbm"))?;
    println!("wrote {}x{} data with {} planted atoms", a.rows, a.samples, a.atoms);
    Ok(())
}

pub fn blocks(a: &BlocksArgs) -> Result<()> {
    let image = load_image(&a.input)?;
    let bits = binarize(&image, threshold(&image, a.threshold));
    let samples = image_to_blocks(&bits, a.tile.height, a.tile.width)?;
    save_pbm(&samples, &a.output)?;
    println!("{} blocks of {} pixels", samples.ncols(), samples.nrows());
    Ok(())
}

pub fn stack(a: &StackArgs) -> Result<()> {
    let mut paths: Vec<PathBuf> = fs::read_dir(&a.input)
        .with_context(|| format!("listing {}", a.input.display()))?
        .map(|entry| entry.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| {
        let ext = p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        matches!(ext.as_deref(), Some("pbm" | "pgm"))
    });
    paths.sort();
    ensure!(!paths.is_empty(), "no .pbm or .pgm files in {}", a.input.display());

    let TileSize { height, width } = a.tile;
    let mut samples = BinMatrix::zeros(height * width, 0);
    for path in &paths {
        let image = load_image(path)?;
        let fitted = match a.fit {
            FitArg::Crop => image.center_crop(height, width),
            FitArg::Resize => image.resize_nearest(height, width),
        }
        .with_context(|| format!("fitting {}", path.display()))?;
        let bits = binarize(&fitted, threshold(&fitted, a.threshold));
        let column = image_to_blocks(&bits, height, width)?;
        samples.push_col(column.col(0).clone())?;
    }
    save_pbm(&samples, &a.output)?;
    println!("{} samples of {} pixels", samples.ncols(), samples.nrows());
    Ok(())
}

/// Reads a PBM (as a 0/1 graymap) or a PGM.
fn load_image(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let image = match bytes.get(..2) {
        Some(b"P1" | b"P4") => {
            let bits = parse_pbm(&bytes)?;
            let pixels = (0..bits.nrows())
                .flat_map(|i| (0..bits.ncols()).map(move |j| (i, j)))
                .map(|(i, j)| u16::from(bits.get(i, j)))
                .collect();
            GrayImage::new(bits.nrows(), bits.ncols(), 1, pixels)?
        }
        _ => parse_pgm(&bytes)?,
    };
    Ok(image)
}

fn threshold(image: &GrayImage, flag: Option<u16>) -> u16 {
    flag.unwrap_or(image.maxval.div_ceil(2))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}
