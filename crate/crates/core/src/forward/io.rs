use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use super::{MeasurementSet, NoiseInfo};
use crate::error::{Error, Result};
use crate::geometry::{CVec3, SphereGrid, Vec3};
use crate::io_util::write_atomic;

const FORMAT: &str = "mitdsm-v1";

/// One parsed coil file.
#[derive(Debug, Clone)]
pub struct CoilFile {
    pub radius: f64,
    pub coil: usize,
    pub noise: NoiseInfo,
    pub points: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub samples: Vec<CVec3>,
}

fn coil_file_name(k: usize) -> String {
    format!("coil_{k:02}.dat")
}

/// Text of one coil file; 17 significant digits so values round-trip exactly.
pub fn write_measurement_file(grid: &SphereGrid, coil: usize, samples: &[CVec3], noise: NoiseInfo) -> String {
    let mut s = String::with_capacity(grid.len() * 250);
    let _ = writeln!(s, "# format={FORMAT}");
    let _ = writeln!(s, "# R={:.16e}", grid.radius());
    let _ = writeln!(s, "# M={}", grid.len());
    let _ = writeln!(s, "# coil={coil}");
    let _ = writeln!(s, "# epsilon={}", noise.epsilon);
    let _ = writeln!(s, "# seed={}", noise.seed);
    for ((p, w), h) in grid.points().iter().zip(grid.weights()).zip(samples) {
        let _ = writeln!(
            s,
            "{:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
            p.x, p.y, p.z, w, h.x.re, h.x.im, h.y.re, h.y.im, h.z.re, h.z.im
        );
    }
    s
}

/// Writes `coil_00.dat`, `coil_01.dat`, … into `dir` (created if missing).
pub fn export_measurements(ms: &MeasurementSet, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let noise = ms.noise().unwrap_or(NoiseInfo { epsilon: 0.0, seed: 0 });
    let mut paths = Vec::with_capacity(ms.n_coils());
    for k in 0..ms.n_coils() {
        let path = dir.join(coil_file_name(k));
        let text = write_measurement_file(ms.grid(), k, ms.coil(k), noise);
        write_atomic(&path, text.as_bytes())?;
        paths.push(path);
    }
    Ok(paths)
}

fn header_value<'a>(path: &Path, line_no: usize, line: Option<&'a str>, key: &str) -> Result<&'a str> {
    let err = |msg: String| Error::MeasurementParse {
        path: path.to_path_buf(),
        line: line_no,
        msg,
    };
    let line = line.ok_or_else(|| err(format!("file ends before header `# {key}=`")))?;
    line.strip_prefix("# ")
        .and_then(|r| r.strip_prefix(key))
        .and_then(|r| r.strip_prefix('='))
        .map(str::trim)
        .ok_or_else(|| err(format!("expected header `# {key}=…`, got `{line}`")))
}

fn parse_header<T: std::str::FromStr>(path: &Path, line_no: usize, v: &str, key: &str) -> Result<T> {
    v.parse().map_err(|_| Error::MeasurementParse {
        path: path.to_path_buf(),
        line: line_no,
        msg: format!("bad value `{v}` for `{key}`"),
    })
}

/// Parses one coil file.
pub fn read_measurement_file(path: &Path) -> Result<CoilFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let format = header_value(path, 1, lines.next(), "format")?;
    if format != FORMAT {
        return Err(Error::MeasurementParse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("unsupported format `{format}`"),
        });
    }
    let radius: f64 = parse_header(path, 2, header_value(path, 2, lines.next(), "R")?, "R")?;
    let m: usize = parse_header(path, 3, header_value(path, 3, lines.next(), "M")?, "M")?;
    let coil: usize = parse_header(path, 4, header_value(path, 4, lines.next(), "coil")?, "coil")?;
    let epsilon: f64 = parse_header(path, 5, header_value(path, 5, lines.next(), "epsilon")?, "epsilon")?;
    let seed: u64 = parse_header(path, 6, header_value(path, 6, lines.next(), "seed")?, "seed")?;
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::MeasurementParse {
            path: path.to_path_buf(),
            line: 2,
            msg: format!("radius must be positive, got {radius}"),
        });
    }

    let mut points = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    let mut samples = Vec::with_capacity(m);
    for row in 0..m {
        let line_no = row + 7;
        let err = |msg: String| Error::MeasurementParse {
            path: path.to_path_buf(),
            line: line_no,
            msg,
        };
        let line = lines
            .next()
            .ok_or_else(|| err(format!("file truncated: expected {m} data rows, found {row}")))?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| err(format!("bad number `{t}`"))))
            .collect::<Result<_>>()?;
        if vals.len() != 10 {
            return Err(err(format!("expected 10 columns, found {}", vals.len())));
        }
        if !vals.iter().all(|v| v.is_finite()) {
            return Err(err("non-finite value".into()));
        }
        points.push(Vec3::new(vals[0], vals[1], vals[2]));
        weights.push(vals[3]);
        samples.push(CVec3::new(
            Complex64::new(vals[4], vals[5]),
            Complex64::new(vals[6], vals[7]),
            Complex64::new(vals[8], vals[9]),
        ));
    }
    if let Some((i, extra)) = lines.enumerate().find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::MeasurementParse {
            path: path.to_path_buf(),
            line: m + 7 + i,
            msg: format!("unexpected trailing content `{extra}`"),
        });
    }
    Ok(CoilFile {
        radius,
        coil,
        noise: NoiseInfo { epsilon, seed },
        points,
        weights,
        samples,
    })
}

/// Reads `coil_00.dat`, `coil_01.dat`, … from `dir` until the first missing
/// index. When `expected_radius` is given the files must agree with it.
pub fn import_measurements(dir: &Path, expected_radius: Option<f64>) -> Result<MeasurementSet> {
    let mut files = Vec::new();
    loop {
        let path = dir.join(coil_file_name(files.len()));
        if !path.exists() {
            break;
        }
        files.push((read_measurement_file(&path)?, path));
    }
    let (first, first_path) = files
        .first()
        .ok_or_else(|| Error::invalid(format!("no coil files (coil_00.dat …) in {}", dir.display())))?;
    if let Some(r) = expected_radius {
        if ((first.radius - r) / r).abs() > 1e-12 {
            return Err(Error::GridMismatch(format!(
                "{} was recorded on R = {}, scene has R = {r}",
                first_path.display(),
                first.radius
            )));
        }
    }
    let grid = SphereGrid::from_samples(first.radius, first.points.clone(), first.weights.clone())?;
    let mut coils = Vec::with_capacity(files.len());
    for (k, (f, path)) in files.iter().enumerate() {
        if f.coil != k {
            return Err(Error::invalid(format!("{} declares coil {} but is file #{k}", path.display(), f.coil)));
        }
        if f.radius != first.radius || f.points != first.points || f.weights != first.weights {
            return Err(Error::GridMismatch(format!("{} uses a different receiver grid", path.display())));
        }
        coils.push(f.samples.clone());
    }
    let noise = (first.noise.epsilon > 0.0).then_some(first.noise);
    Ok(MeasurementSet::new(grid, coils)?.with_noise(noise))
}
