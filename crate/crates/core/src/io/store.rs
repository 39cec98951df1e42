//! Model directories: `dict.pbm`, `coeffs.pbm`, `residual.pbm` and a
//! `manifest.txt` of `key = value` lines.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::pbm::{load_pbm, save_pbm, write_file};
use crate::bitmat::BinMatrix;
use crate::error::{BmfError, Result};
use crate::learner::{Method, Model};
use crate::mdl::{model_codelength, CodelengthReport};

pub const DICT_FILE: &str = "dict.pbm";
pub const COEFFS_FILE: &str = "coeffs.pbm";
pub const RESIDUAL_FILE: &str = "residual.pbm";
pub const MANIFEST_FILE: &str = "manifest.txt";
const FORMAT_VERSION: u32 = 1;

/// Provenance stored next to the factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelInfo {
    pub method: Method,
    pub seed: u64,
}

/// Writes the model and its manifest into `dir`, creating it if needed.
pub fn save_model(model: &Model, info: &ModelInfo, dir: impl AsRef<Path>) -> Result<CodelengthReport> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| BmfError::io(dir, e))?;
    save_pbm(&model.dict, dir.join(DICT_FILE))?;
    save_pbm(&model.coeffs, dir.join(COEFFS_FILE))?;
    save_pbm(&model.residual, dir.join(RESIDUAL_FILE))?;
    let report = model_codelength(&model.dict, &model.coeffs, &model.residual);
    let manifest = format!(
        "# bmf model manifest\n\
         format = {FORMAT_VERSION}\n\
         m = {}\nn = {}\np = {}\n\
         method = {}\nseed = {}\n\
         residual_weight = {}\nouter_iters = {}\nconverged = {}\n\
         dict_bits = {}\ncoeff_bits = {}\nresidual_bits = {}\ntotal_bits = {}\n\
         bits_per_sample = {:.6}\n",
        model.dict.nrows(),
        model.residual.ncols(),
        model.atoms(),
        info.method,
        info.seed,
        model.residual.weight(),
        model.outer_iters,
        model.converged,
        report.dict_bits,
        report.coeff_bits,
        report.residual_bits,
        report.total,
        report.bits_per_sample,
    );
    write_file(&dir.join(MANIFEST_FILE), manifest.as_bytes())?;
    Ok(report)
}

struct Manifest(BTreeMap<String, String>);

impl Manifest {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| BmfError::Malformed {
                format: "manifest",
                reason: format!("line {}: expected `key = value`", lineno + 1),
            })?;
            map.insert(key.trim().to_owned(), value.trim().to_owned());
        }
        Ok(Self(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.0.get(key).ok_or_else(|| BmfError::Malformed {
            format: "manifest",
            reason: format!("missing key {key:?}"),
        })?;
        raw.parse().map_err(|_| BmfError::Malformed {
            format: "manifest",
            reason: format!("bad value {raw:?} for {key:?}"),
        })
    }
}

fn expect_eq(what: &str, manifest: u64, actual: u64) -> Result<()> {
    if manifest == actual {
        Ok(())
    } else {
        Err(BmfError::InconsistentModel(format!(
            "manifest {what} = {manifest}, files give {actual}"
        )))
    }
}

/// Reads a model directory and cross-checks it against its manifest. When
/// `data` is supplied, also verifies `E = X ⊕ D⊗A`.
pub fn load_model(dir: impl AsRef<Path>, data: Option<&BinMatrix>) -> Result<(Model, ModelInfo)> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|e| BmfError::io(&manifest_path, e))?;
    let manifest = Manifest::parse(&text)?;
    let version: u32 = manifest.get("format")?;
    if version != FORMAT_VERSION {
        return Err(BmfError::Malformed {
            format: "manifest",
            reason: format!("unsupported format version {version}"),
        });
    }
    let dict = load_pbm(dir.join(DICT_FILE))?;
    let coeffs = load_pbm(dir.join(COEFFS_FILE))?;
    let residual = load_pbm(dir.join(RESIDUAL_FILE))?;

    let (m, n, p): (usize, usize, usize) = (manifest.get("m")?, manifest.get("n")?, manifest.get("p")?);
    expect_eq("m", m as u64, dict.nrows() as u64)?;
    expect_eq("m", m as u64, residual.nrows() as u64)?;
    expect_eq("n", n as u64, residual.ncols() as u64)?;
    expect_eq("n", n as u64, coeffs.ncols() as u64)?;
    expect_eq("p", p as u64, dict.ncols() as u64)?;
    expect_eq("p", p as u64, coeffs.nrows() as u64)?;

    let residual_weight: usize = manifest.get("residual_weight")?;
    expect_eq("residual_weight", residual_weight as u64, residual.weight() as u64)?;
    let report = model_codelength(&dict, &coeffs, &residual);
    expect_eq("dict_bits", manifest.get("dict_bits")?, report.dict_bits)?;
    expect_eq("coeff_bits", manifest.get("coeff_bits")?, report.coeff_bits)?;
    expect_eq("residual_bits", manifest.get("residual_bits")?, report.residual_bits)?;
    expect_eq("total_bits", manifest.get("total_bits")?, report.total)?;

    let info = ModelInfo {
        method: manifest.get("method")?,
        seed: manifest.get("seed")?,
    };
    let model = Model {
        dict,
        coeffs,
        residual,
        residual_weight,
        outer_iters: manifest.get("outer_iters")?,
        converged: manifest.get("converged")?,
        history: Vec::new(),
    };
    if let Some(data) = data {
        model.verify(data)?;
    }
    Ok((model, info))
}
