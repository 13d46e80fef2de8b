use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mitdsm"));
    c.env("RUST_LOG", "warn").env_remove("MITDSM_CACHE_DIR");
    c
}

fn scene(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes").join(name)
}

fn run(c: &mut Command) -> Output {
    c.output().expect("binary runs")
}

fn ok(c: &mut Command) -> Output {
    let out = run(c);
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn forward(dir: &Path, receivers: usize, extra: &[&str]) {
    ok(bin()
        .arg("forward")
        .arg("--scene")
        .arg(scene("example1.scene"))
        .arg("--out")
        .arg(dir)
        .args(["--grid-size", &receivers.to_string()])
        .args(extra));
}

fn data_rows(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn csv(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|t| t.parse().unwrap()).collect())
        .collect()
}

#[test]
fn example_one_writes_twenty_full_coil_files() {
    let dir = tempfile::tempdir().unwrap();
    ok(bin().arg("forward").arg("--scene").arg(scene("example1.scene")).arg("--out").arg(dir.path()));
    for k in 0..20 {
        assert_eq!(data_rows(&dir.path().join(format!("coil_{k:02}.dat"))).len(), 9812);
    }
    assert!(!dir.path().join("coil_20.dat").exists());
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    let sha = manifest.lines().find_map(|l| l.strip_prefix("scene_sha256=")).unwrap();
    assert_eq!(sha.len(), 64);
    assert!(manifest.contains("epsilon=0\n") && manifest.contains("seed=0\n") && manifest.contains("coils=20\n"));
}

#[test]
fn noisy_forward_is_reproducible_across_runs_and_threads() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    forward(a.path(), 400, &["--epsilon", "0.2", "--seed", "7", "--threads", "1"]);
    forward(b.path(), 400, &["--epsilon", "0.2", "--seed", "7", "--threads", "3"]);
    for k in 0..20 {
        let name = format!("coil_{k:02}.dat");
        assert_eq!(std::fs::read(a.path().join(&name)).unwrap(), std::fs::read(b.path().join(&name)).unwrap());
    }
    assert_eq!(
        std::fs::read(a.path().join("manifest.txt")).unwrap(),
        std::fs::read(b.path().join("manifest.txt")).unwrap()
    );
    let c = tempfile::tempdir().unwrap();
    forward(c.path(), 400, &["--epsilon", "0.2", "--seed", "8"]);
    assert_ne!(std::fs::read(a.path().join("coil_00.dat")).unwrap(), std::fs::read(c.path().join("coil_00.dat")).unwrap());
}

#[test]
fn missing_key_is_an_input_error_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scene("example1.scene")).unwrap();
    let broken: String = text.lines().filter(|l| !l.starts_with("omega ")).map(|l| format!("{l}\n")).collect();
    let path = dir.path().join("broken.scene");
    std::fs::write(&path, broken).unwrap();
    let out = run(bin().arg("forward").arg("--scene").arg(&path).arg("--out").arg(dir.path().join("m")));
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`omega`"));
}

#[test]
fn usage_errors_exit_with_three_and_help_with_zero() {
    assert_eq!(run(bin().arg("forward")).status.code(), Some(3));
    assert_eq!(run(bin().args(["reconstruct", "--bogus"])).status.code(), Some(3));
    assert_eq!(run(bin().args(["psf", "--y", "1,2", "--out", "x.csv"])).status.code(), Some(3));
    assert_eq!(run(bin().arg("--help")).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin()
        .args(["forward", "--epsilon", "-1", "--out"])
        .arg(dir.path())
        .arg("--scene")
        .arg(scene("example1.scene")));
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn coarse_reconstruction_writes_index_and_sections() {
    let meas = tempfile::tempdir().unwrap();
    forward(meas.path(), 600, &[]);
    let out = tempfile::tempdir().unwrap();
    let log = ok(bin()
        .env("RUST_LOG", "info")
        .arg("reconstruct")
        .arg("--scene")
        .arg(scene("example1.scene"))
        .arg("--meas")
        .arg(meas.path())
        .arg("--out")
        .arg(out.path())
        .args(["--pitch", "0.2", "--section", "z=0", "--section", "x=0.4", "--vtk"]));
    let stderr = String::from_utf8_lossy(&log.stderr);
    assert!(stderr.contains("index field on"), "{stderr}");

    let index = std::fs::read_to_string(out.path().join("index.dat")).unwrap();
    assert!(index.contains("# pitch=0.2") && index.contains("# gamma=4") && index.contains("# power=4"));
    let rows = data_rows(&out.path().join("index.dat"));
    assert_eq!(rows[0].split_whitespace().count(), 3 + 20 + 2);
    let max = rows
        .iter()
        .map(|r| r.split_whitespace().last().unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!((max - 1.0).abs() < 1e-12);

    let z0 = csv(&out.path().join("section_z0.csv"));
    assert_eq!((z0.len(), z0[0].len()), (11, 11));
    assert!(z0[0][0].is_nan() && !z0[5][5].is_nan());
    let meta = std::fs::read_to_string(out.path().join("section_z0.csv.meta")).unwrap();
    assert!(meta.contains("pitch=0.2") && meta.contains("column_axis=x") && meta.contains("row_axis=y"));
    assert!(out.path().join("section_x0.4.csv").exists());
    assert!(out.path().join("index.vtk").exists());
}

#[test]
fn reconstruct_rejects_inconsistent_inputs() {
    let meas = tempfile::tempdir().unwrap();
    forward(meas.path(), 200, &[]);
    let out = tempfile::tempdir().unwrap();
    let base = |c: &mut Command, scene_path: &Path, meas_dir: &Path| {
        c.arg("reconstruct")
            .arg("--scene")
            .arg(scene_path)
            .arg("--meas")
            .arg(meas_dir)
            .arg("--out")
            .arg(out.path())
            .args(["--pitch", "0.25"]);
    };

    let text = std::fs::read_to_string(scene("example1.scene")).unwrap().replace("R = 1.5", "R = 1.6");
    let other = out.path().join("r16.scene");
    std::fs::write(&other, text).unwrap();
    let mut c = bin();
    base(&mut c, &other, meas.path());
    let o = run(&mut c);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));

    let empty = tempfile::tempdir().unwrap();
    let mut c = bin();
    base(&mut c, &scene("example1.scene"), empty.path());
    assert_eq!(run(&mut c).status.code(), Some(3));

    std::fs::remove_file(meas.path().join("coil_19.dat")).unwrap();
    let mut c = bin();
    base(&mut c, &scene("example1.scene"), meas.path());
    assert_eq!(run(&mut c).status.code(), Some(3));

    let mut c = bin();
    base(&mut c, &scene("example1.scene"), meas.path());
    c.args(["--gamma", "3"]);
    assert_eq!(run(&mut c).status.code(), Some(3));
}

#[test]
fn cached_kernels_reproduce_the_streaming_result() {
    let meas = tempfile::tempdir().unwrap();
    forward(meas.path(), 300, &[]);
    let cache = tempfile::tempdir().unwrap();
    let outputs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (i, out) in outputs.iter().enumerate() {
        let mut c = bin();
        c.arg("reconstruct")
            .arg("--scene")
            .arg(scene("example1.scene"))
            .arg("--meas")
            .arg(meas.path())
            .arg("--out")
            .arg(out.path())
            .args(["--pitch", "0.25", "--gamma", "2"]);
        if i > 0 {
            c.env("MITDSM_CACHE_DIR", cache.path());
        }
        ok(&mut c);
    }
    let banks = std::fs::read_dir(cache.path()).unwrap().count();
    assert_eq!(banks, 1);
    let read = |d: &Path| -> Vec<f64> {
        data_rows(&d.join("index.dat"))
            .iter()
            .flat_map(|r| r.split_whitespace().skip(3).map(|t| t.parse::<f64>().unwrap()).collect::<Vec<_>>())
            .collect()
    };
    let stream = read(outputs[0].path());
    let first = read(outputs[1].path());
    let second = read(outputs[2].path());
    assert_eq!(first, second);
    for (a, b) in stream.iter().zip(&first) {
        assert!((a - b).abs() <= 1e-8 * a.abs().max(1e-300), "{a} vs {b}");
    }
}

fn psf_raster(dir: &Path, gamma: u32) -> Vec<Vec<f64>> {
    let path = dir.join(format!("psf_g{gamma}.csv"));
    ok(bin()
        .args(["psf", "--y", "0.3,0.3,0", "--alpha", "1,0,0", "--pitch", "0.05", "--band", "24"])
        .args(["--gamma", &gamma.to_string(), "--section", "z=0", "--out"])
        .arg(&path));
    csv(&path)
}

#[test]
fn psf_rasters_peak_at_the_source_and_sharpen_with_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let g0 = psf_raster(dir.path(), 0);
    let g4 = psf_raster(dir.path(), 4);
    // Column 26, row 26 is (0.3, 0.3) on the 41x41 raster starting at -1.
    let argmax = |r: &[Vec<f64>]| {
        let mut best = (0, 0, f64::MIN);
        for (i, row) in r.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if *v > best.2 {
                    best = (i, j, *v);
                }
            }
        }
        best
    };
    let (i0, j0, m0) = argmax(&g0);
    let (i4, j4, m4) = argmax(&g4);
    assert_eq!((i0, j0), (26, 26));
    assert_eq!((i4, j4), (26, 26));
    let above = |r: &[Vec<f64>], m: f64| r.iter().flatten().filter(|v| **v >= 0.5 * m).count();
    assert!(above(&g4, m4) < above(&g0, m0));

    // Mean |K| over rings 0.5 <= |z| < 1 of width 0.1 decreases toward the rim.
    let shells = |r: &[Vec<f64>]| {
        let mut sums = [0.0; 5];
        let mut counts = [0usize; 5];
        for (i, row) in r.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let (x, y) = (-1.0 + 0.05 * j as f64, -1.0 + 0.05 * i as f64);
                let rho = (x * x + y * y).sqrt();
                if v.is_nan() || rho < 0.5 {
                    continue;
                }
                let s = (((rho - 0.5) / 0.1) as usize).min(4);
                sums[s] += v;
                counts[s] += 1;
            }
        }
        (0..5).map(|s| sums[s] / counts[s] as f64).collect::<Vec<_>>()
    };
    for r in [&g0, &g4] {
        let m = shells(r);
        assert!(m.windows(2).all(|w| w[1] < w[0]), "{m:?}");
    }
}

#[test]
fn psf_rejects_source_outside_the_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin().args(["psf", "--y", "0,0,1.6", "--out"]).arg(dir.path().join("p.csv")));
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn validate_passes_on_a_clean_build() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.tsv");
    ok(bin().arg("validate").arg("--out").arg(&report));
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("check\tstatus\tgating\tmeasured\ttolerance\tdetail"));
    assert!(text.lines().any(|l| l.starts_with("curve\t")));
    assert!(text.contains("seminorm_band_g2_series\tpass"));
}
