mod common;

use std::fs;
use std::path::Path;

use bmf::io::{load_model, load_pbm, save_model, save_pbm, ModelInfo};
use bmf::{BinMatrix, Method, Model};

use common::{read_csv, run_err, run_ok, s};

fn synth(dir: &Path, rows: usize, samples: usize, atoms: usize, cw: usize, noise: f64, seed: u64) {
    run_ok(&[
        "synth",
        "--rows",
        &rows.to_string(),
        "--samples",
        &samples.to_string(),
        "--atoms",
        &atoms.to_string(),
        "--coeff-weight",
        &cw.to_string(),
        "--noise",
        &noise.to_string(),
        "--seed",
        &seed.to_string(),
        "--output",
        s(dir),
    ]);
}

fn column(rows: &[Vec<String>], name: &str) -> Vec<String> {
    let idx = rows[0]
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    rows[1..].iter().map(|r| r[idx].clone()).collect()
}

#[test]
fn synth_writes_consistent_factors() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("s");
    synth(&dir, 24, 50, 5, 2, 0.0, 11);
    let x = load_pbm(dir.join("data.pbm")).unwrap();
    let d = load_pbm(dir.join("dict.pbm")).unwrap();
    let a = load_pbm(dir.join("coeffs.pbm")).unwrap();
    assert_eq!((x.nrows(), x.ncols(), d.ncols()), (24, 50, 5));
    assert_eq!(x, d.mod2_mul(&a).unwrap());
    assert!(a.columns().iter().all(|c| c.weight() == 2));
}

#[test]
fn synth_rejects_bad_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bad");
    let o = run_err(&[
        "synth",
        "--rows",
        "8",
        "--samples",
        "4",
        "--atoms",
        "2",
        "--coeff-weight",
        "3",
        "--output",
        s(&out),
    ]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("coefficient weight"));
    run_err(&[
        "synth",
        "--rows",
        "8",
        "--samples",
        "4",
        "--atoms",
        "2",
        "--coeff-weight",
        "1",
        "--noise",
        "1.5",
        "--output",
        s(&out),
    ]);
    assert!(!out.exists());
}

#[test]
fn learn_with_planted_start_reaches_zero_residual() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("s");
    synth(&data, 64, 1024, 8, 1, 0.0, 2);
    let model = tmp.path().join("m");
    let dict = data.join("dict.pbm");
    run_ok(&[
        "learn",
        "--input",
        s(&data.join("data.pbm")),
        "--atoms",
        "8",
        "--init-dict",
        s(&dict),
        "--output",
        s(&model),
    ]);
    let rows = read_csv(&model.join("iterations.csv"));
    assert_eq!(rows[0], ["iter", "h_E", "changed_bits_D", "changed_bits_A", "seconds"]);
    assert_eq!(column(&rows, "h_E").last().unwrap(), "0");
    let last = rows.last().unwrap();
    assert_eq!((&last[2][..], &last[3][..]), ("0", "0"));
    let seconds = column(&rows, "seconds");
    assert!(seconds
        .iter()
        .all(|v| v.split('.').nth(1).is_some_and(|d| d.len() == 3)));
    let (m, _) = load_model(&model, Some(&load_pbm(data.join("data.pbm")).unwrap())).unwrap();
    assert!(m.converged);
    assert_eq!(m.residual_weight, 0);
}

#[test]
fn learn_rejects_zero_atoms_without_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("s");
    synth(&data, 8, 10, 2, 1, 0.0, 1);
    let out = tmp.path().join("m");
    let o = run_err(&[
        "learn",
        "--input",
        s(&data.join("data.pbm")),
        "--atoms",
        "0",
        "--output",
        s(&out),
    ]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("p must be ≥ 1"));
    assert!(o.stdout.is_empty());
    assert!(!out.exists());
}

#[test]
fn learn_reports_missing_and_malformed_input() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("m");
    run_err(&[
        "learn",
        "--input",
        s(&tmp.path().join("nope.pbm")),
        "--atoms",
        "2",
        "--output",
        s(&out),
    ]);
    let junk = tmp.path().join("junk.pbm");
    fs::write(&junk, b"P7 what").unwrap();
    let o = run_err(&["learn", "--input", s(&junk), "--atoms", "2", "--output", s(&out)]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("PBM"));
    run_err(&[
        "learn",
        "--input",
        s(&junk),
        "--atoms",
        "2",
        "--theta",
        "1.0",
        "--output",
        s(&out),
    ]);
}

#[test]
fn learn_runs_are_repeatable() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("s");
    synth(&data, 32, 200, 4, 2, 0.02, 3);
    let input = data.join("data.pbm");
    let outs: Vec<_> = (0..2).map(|k| tmp.path().join(format!("m{k}"))).collect();
    for out in &outs {
        run_ok(&[
            "learn",
            "--input",
            s(&input),
            "--atoms",
            "4",
            "--method",
            "kprox",
            "--seed",
            "9",
            "--output",
            s(out),
        ]);
    }
    for file in ["dict.pbm", "coeffs.pbm", "residual.pbm", "manifest.txt"] {
        assert_eq!(
            fs::read(outs[0].join(file)).unwrap(),
            fs::read(outs[1].join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn select_on_empty_data_keeps_the_first_model() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("zero.pbm");
    save_pbm(&BinMatrix::zeros(16, 40), &input).unwrap();
    let out = tmp.path().join("sel");
    let o = run_ok(&["select", "--input", s(&input), "--p0", "2", "--output", s(&out)]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("selected p = 2"));
    let rows = read_csv(&out.join("trajectory.csv"));
    assert_eq!(
        rows[0],
        [
            "p",
            "L_D",
            "L_A",
            "L_E",
            "total",
            "bits_per_sample",
            "wall_time_seconds"
        ]
    );
    assert_eq!(column(&rows, "p"), ["2", "3"]);
}

#[test]
fn select_trajectory_decreases_on_planted_data() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("s");
    synth(&data, 64, 2048, 8, 2, 0.02, 5);
    let out = tmp.path().join("sel");
    run_ok(&["select", "--input", s(&data.join("data.pbm")), "--output", s(&out)]);
    let rows = read_csv(&out.join("trajectory.csv"));
    let totals: Vec<u64> = column(&rows, "total").iter().map(|v| v.parse().unwrap()).collect();
    assert!(totals.len() >= 5, "{totals:?}");
    assert!(totals[..5].windows(2).all(|w| w[1] < w[0]), "{totals:?}");
    for r in &rows[1..] {
        let v: Vec<u64> = r[1..5].iter().map(|x| x.parse().unwrap()).collect();
        assert_eq!(v[0] + v[1] + v[2], v[3]);
    }
}

#[test]
fn encode_with_stored_coefficients_is_a_fixed_point() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("s");
    synth(&data, 32, 150, 4, 2, 0.03, 8);
    let input = data.join("data.pbm");
    let model = tmp.path().join("m");
    run_ok(&["learn", "--input", s(&input), "--atoms", "4", "--output", s(&model)]);
    let enc = tmp.path().join("e");
    let o = run_ok(&[
        "encode",
        "--model",
        s(&model),
        "--input",
        s(&input),
        "--warm",
        "--output",
        s(&enc),
    ]);
    assert_eq!(
        load_pbm(enc.join("coeffs.pbm")).unwrap(),
        load_pbm(model.join("coeffs.pbm")).unwrap()
    );
    let stdout = String::from_utf8_lossy(&o.stdout).to_string();
    let manifest = fs::read_to_string(model.join("manifest.txt")).unwrap();
    let bps = manifest
        .lines()
        .find_map(|l| l.strip_prefix("bits_per_sample = "))
        .unwrap();
    assert!(stdout.contains(&format!("bits per sample = {bps}")), "{stdout}");
}

#[test]
fn encode_zero_samples_and_shape_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("s");
    synth(&data, 16, 40, 3, 1, 0.0, 4);
    let model = tmp.path().join("m");
    run_ok(&[
        "learn",
        "--input",
        s(&data.join("data.pbm")),
        "--atoms",
        "3",
        "--output",
        s(&model),
    ]);

    let zeros = tmp.path().join("zeros.pbm");
    save_pbm(&BinMatrix::zeros(16, 5), &zeros).unwrap();
    let enc = tmp.path().join("e");
    let o = run_ok(&[
        "encode",
        "--model",
        s(&model),
        "--input",
        s(&zeros),
        "--output",
        s(&enc),
    ]);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("h(E) = 0"));
    assert_eq!(load_pbm(enc.join("coeffs.pbm")).unwrap(), BinMatrix::zeros(3, 5));

    let wrong = tmp.path().join("wrong.pbm");
    save_pbm(&BinMatrix::zeros(15, 5), &wrong).unwrap();
    let bad = tmp.path().join("bad");
    let o = run_err(&[
        "encode",
        "--model",
        s(&model),
        "--input",
        s(&wrong),
        "--output",
        s(&bad),
    ]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("rows"));
    assert!(!bad.exists());
}

fn model_with_dict(dir: &Path, dict: BinMatrix, samples: usize) {
    let x = BinMatrix::zeros(dict.nrows(), samples);
    let model = Model {
        coeffs: BinMatrix::zeros(dict.ncols(), samples),
        residual: x,
        residual_weight: 0,
        outer_iters: 0,
        converged: true,
        history: Vec::new(),
        dict,
    };
    let info = ModelInfo {
        method: Method::Mob,
        seed: 0,
    };
    save_model(&model, &info, dir).unwrap();
}

#[test]
fn mosaic_single_atom_and_identity() {
    let tmp = tempfile::tempdir().unwrap();
    let one = tmp.path().join("one");
    let atom = BinMatrix::from_columns(12, vec![bmf::PackedBits::ones(12)]).unwrap();
    model_with_dict(&one, atom, 3);
    let img = tmp.path().join("one.pbm");
    run_ok(&["mosaic", "--model", s(&one), "--tile", "3x4", "--output", s(&img)]);
    let m = load_pbm(&img).unwrap();
    assert_eq!((m.nrows(), m.ncols(), m.weight()), (5, 6, 12));

    let ident = tmp.path().join("ident");
    model_with_dict(&ident, BinMatrix::identity(16), 2);
    let img = tmp.path().join("ident.pbm");
    run_ok(&["mosaic", "--model", s(&ident), "--tile", "4x4", "--output", s(&img)]);
    let m = load_pbm(&img).unwrap();
    assert_eq!((m.nrows(), m.ncols(), m.weight()), (21, 21, 16));
    for t in 0..16 {
        let (top, left) = (1 + (t / 4) * 5, 1 + (t % 4) * 5);
        assert!(m.get(top + t % 4, left + t / 4), "tile {t}");
    }
    let o = run_err(&["mosaic", "--model", s(&ident), "--tile", "3x5", "--output", s(&img)]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("tile"));
}

#[test]
fn mosaic_survives_model_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("s");
    synth(&data, 36, 60, 5, 1, 0.05, 6);
    let model = tmp.path().join("m");
    run_ok(&[
        "learn",
        "--input",
        s(&data.join("data.pbm")),
        "--atoms",
        "5",
        "--output",
        s(&model),
    ]);
    let first = tmp.path().join("a.pbm");
    run_ok(&[
        "mosaic",
        "--model",
        s(&model),
        "--tile",
        "6x6",
        "--grid-cols",
        "2",
        "--output",
        s(&first),
    ]);

    let (loaded, info) = load_model(&model, None).unwrap();
    let copy = tmp.path().join("copy");
    save_model(&loaded, &info, &copy).unwrap();
    let second = tmp.path().join("b.pbm");
    run_ok(&[
        "mosaic",
        "--model",
        s(&copy),
        "--tile",
        "6x6",
        "--grid-cols",
        "2",
        "--output",
        s(&second),
    ]);
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
    let img = load_pbm(&first).unwrap();
    assert_eq!((img.nrows(), img.ncols()), (3 * 7 + 1, 2 * 7 + 1));

    let resid = tmp.path().join("r.pbm");
    run_ok(&[
        "mosaic",
        "--model",
        s(&model),
        "--component",
        "residual",
        "--tile",
        "6x6",
        "--output",
        s(&resid),
    ]);
    let img = load_pbm(&resid).unwrap();
    assert_eq!(img.weight(), load_model(&model, None).unwrap().0.residual_weight);
}

#[test]
fn blocks_and_stack_from_graymaps() {
    let tmp = tempfile::tempdir().unwrap();
    let pgm = tmp.path().join("img.pgm");
    let mut bytes = b"P2\n4 4\n255\n".to_vec();
    bytes.extend(b"255 0 0 0\n0 255 0 0\n0 0 200 0\n0 0 0 127\n");
    fs::write(&pgm, bytes).unwrap();
    let out = tmp.path().join("blocks.pbm");
    run_ok(&["blocks", "--input", s(&pgm), "--tile", "2x2", "--output", s(&out)]);
    let b = load_pbm(&out).unwrap();
    assert_eq!((b.nrows(), b.ncols()), (4, 4));
    assert_eq!(b.col(0).to_string(), "1001");
    assert_eq!(b.col(3).to_string(), "1000");
    run_ok(&[
        "blocks",
        "--input",
        s(&pgm),
        "--tile",
        "2x2",
        "--threshold",
        "100",
        "--output",
        s(&out),
    ]);
    assert_eq!(load_pbm(&out).unwrap().col(3).to_string(), "1001");

    let dir = tmp.path().join("imgs");
    fs::create_dir(&dir).unwrap();
    fs::copy(&pgm, dir.join("a.pgm")).unwrap();
    save_pbm(
        &BinMatrix::from_row_strings(&["0000", "0110", "0110", "0000"]).unwrap(),
        dir.join("b.pbm"),
    )
    .unwrap();
    fs::write(dir.join("notes.txt"), "ignored").unwrap();
    let out = tmp.path().join("stack.pbm");
    run_ok(&["stack", "--input", s(&dir), "--tile", "2x2", "--output", s(&out)]);
    let st = load_pbm(&out).unwrap();
    assert_eq!((st.nrows(), st.ncols()), (4, 2));
    assert_eq!(st.col(0).to_string(), "1001");
    assert_eq!(st.col(1).to_string(), "1111");
}

#[test]
fn threads_flag_and_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("s");
    synth(&data, 16, 80, 3, 1, 0.0, 2);
    let out = tmp.path().join("m");
    run_err(&[
        "learn",
        "--input",
        s(&data.join("data.pbm")),
        "--atoms",
        "3",
        "--threads",
        "0",
        "--output",
        s(&out),
    ]);
    let o = common::bmf()
        .env("BMF_THREADS", "2")
        .args([
            "learn",
            "--input",
            s(&data.join("data.pbm")),
            "--atoms",
            "3",
            "--output",
            s(&out),
        ])
        .output()
        .unwrap();
    assert!(o.status.success());
    let o = common::bmf()
        .env("BMF_THREADS", "many")
        .args([
            "learn",
            "--input",
            s(&data.join("data.pbm")),
            "--atoms",
            "3",
            "--output",
            s(&out),
        ])
        .output()
        .unwrap();
    assert!(!o.status.success());
}
