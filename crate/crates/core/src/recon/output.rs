use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::IndexField;
use crate::error::{Error, Result};
use crate::geometry::{SamplingLattice, Section, Vec3};
use crate::io_util::write_atomic;

/// Writes `zx zy zz I_1 … I_N Ĩ Ĩ^p` rows under a commented header.
pub fn write_index_file(path: &Path, field: &IndexField) -> Result<()> {
    let n = field.n_coils();
    let mut s = String::with_capacity(field.lattice.len() * (n + 5) * 20);
    let (lo, hi) = field.lattice.bounds();
    let _ = writeln!(s, "# pitch={}", field.lattice.spacing());
    let _ = writeln!(s, "# bounds=({}, {}, {})..({}, {}, {})", lo.x, lo.y, lo.z, hi.x, hi.y, hi.z);
    let _ = writeln!(s, "# gamma={}", field.gamma);
    let _ = writeln!(s, "# power={}", field.power);
    let _ = writeln!(s, "# coils={n}");
    let _ = writeln!(s, "# points={}", field.lattice.len());
    let cols: Vec<String> = (1..=n).map(|k| format!("I{k}")).collect();
    let _ = writeln!(s, "# zx zy zz {} Itilde Itilde_p", cols.join(" "));
    for (i, p) in field.lattice.points().iter().enumerate() {
        let _ = write!(s, "{:.6} {:.6} {:.6}", p.x, p.y, p.z);
        for c in &field.per_coil {
            let _ = write!(s, " {:.12e}", c[i]);
        }
        let _ = writeln!(s, " {:.12e} {:.12e}", field.fused[i], field.fused_power[i]);
    }
    write_atomic(path, s.as_bytes())
}

/// One row of an index file.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexRow {
    pub z: Vec3,
    pub per_coil: Vec<f64>,
    pub fused: f64,
    pub fused_power: f64,
}

/// Data rows of an index file.
pub fn read_index_file(path: &Path) -> Result<Vec<IndexRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut width = None;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::MeasurementParse {
            path: path.to_path_buf(),
            line: n + 1,
            msg,
        };
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(format!("bad number `{t}`"))))
            .collect::<Result<_>>()?;
        if v.len() < 6 || *width.get_or_insert(v.len()) != v.len() {
            return Err(err(format!("unexpected column count {}", v.len())));
        }
        let k = v.len();
        out.push(IndexRow {
            z: Vec3::new(v[0], v[1], v[2]),
            per_coil: v[3..k - 2].to_vec(),
            fused: v[k - 2],
            fused_power: v[k - 1],
        });
    }
    Ok(out)
}

/// Raster geometry written next to a section CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterMeta {
    pub section: Section,
    pub pitch: f64,
    /// In-plane coordinates of the first cell.
    pub origin: (f64, f64),
    pub columns: usize,
    pub rows: usize,
}

/// Writes Ĩ^p on `section` as a CSV raster plus a `.meta` sidecar. The
/// field may live on a 3-D lattice; values keep their full-lattice
/// normalization. Returns the sidecar path and the raster geometry.
pub fn write_section_raster(path: &Path, field: &IndexField, section: Section) -> Result<(PathBuf, RasterMeta)> {
    let extra = [("value", "index_pow".to_string()), ("gamma", field.gamma.to_string()), ("power", field.power.to_string())];
    write_raster(path, &field.lattice, &field.fused_power, section, &extra)
}

/// Rows run along the second in-plane axis, columns along the first; cells
/// of the bounding square without a lattice point are written as `nan`.
pub fn write_raster(
    path: &Path,
    lattice: &SamplingLattice,
    values: &[f64],
    section: Section,
    extra: &[(&str, String)],
) -> Result<(PathBuf, RasterMeta)> {
    if values.len() != lattice.len() {
        return Err(Error::GridMismatch(format!("{} values for {} lattice points", values.len(), lattice.len())));
    }
    let pitch = lattice.spacing();
    if !(pitch > 0.0) {
        return Err(Error::invalid("rasters need a regular lattice"));
    }
    let (a, b) = section.in_plane();
    let on_plane: Vec<usize> = (0..lattice.len())
        .filter(|&i| (lattice.points()[i][section.axis] - section.offset).abs() <= 1e-9 * pitch.max(1.0))
        .collect();
    if on_plane.is_empty() {
        return Err(Error::invalid(format!(
            "section {section} contains no lattice points (offsets must be multiples of the pitch {pitch})"
        )));
    }
    let idx = lattice.indices();
    let (mut lo_a, mut hi_a, mut lo_b, mut hi_b) = (i32::MAX, i32::MIN, i32::MAX, i32::MIN);
    for &i in &on_plane {
        let k = idx[i];
        lo_a = lo_a.min(k[a]);
        hi_a = hi_a.max(k[a]);
        lo_b = lo_b.min(k[b]);
        hi_b = hi_b.max(k[b]);
    }
    let columns = (hi_a - lo_a + 1) as usize;
    let rows = (hi_b - lo_b + 1) as usize;
    let mut cells = vec![f64::NAN; columns * rows];
    for &i in &on_plane {
        let k = idx[i];
        cells[(k[b] - lo_b) as usize * columns + (k[a] - lo_a) as usize] = values[i];
    }
    let mut s = String::with_capacity(cells.len() * 24);
    for r in 0..rows {
        let line: Vec<String> = cells[r * columns..(r + 1) * columns]
            .iter()
            .map(|v| if v.is_nan() { "nan".to_string() } else { format!("{v:.10e}") })
            .collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    write_atomic(path, s.as_bytes())?;

    let meta = RasterMeta {
        section,
        pitch,
        origin: (lo_a as f64 * pitch, lo_b as f64 * pitch),
        columns,
        rows,
    };
    let axis = |i: usize| ["x", "y", "z"][i];
    let mut text = format!(
        "section={}\npitch={}\ncolumns={}\nrows={}\ncolumn_axis={}\nrow_axis={}\norigin=({}, {})\n",
        section,
        pitch,
        columns,
        rows,
        axis(a),
        axis(b),
        meta.origin.0,
        meta.origin.1,
    );
    for (k, v) in extra {
        let _ = writeln!(text, "{k}={v}");
    }
    let mut meta_path = path.as_os_str().to_owned();
    meta_path.push(".meta");
    let meta_path = PathBuf::from(meta_path);
    write_atomic(&meta_path, text.as_bytes())?;
    Ok((meta_path, meta))
}

/// Ĩ^p on the lattice's bounding box in the legacy VTK structured-points
/// text format; points outside the lattice carry `nan`.
pub fn write_vtk(path: &Path, field: &IndexField) -> Result<()> {
    let lattice = &field.lattice;
    let pitch = lattice.spacing();
    if !(pitch > 0.0) || lattice.is_empty() {
        return Err(Error::invalid("structured output needs a regular lattice"));
    }
    let idx = lattice.indices();
    let mut lo = [i32::MAX; 3];
    let mut hi = [i32::MIN; 3];
    for k in idx {
        for d in 0..3 {
            lo[d] = lo[d].min(k[d]);
            hi[d] = hi[d].max(k[d]);
        }
    }
    let dims: Vec<usize> = (0..3).map(|d| (hi[d] - lo[d] + 1) as usize).collect();
    let mut cells = vec![f64::NAN; dims[0] * dims[1] * dims[2]];
    for (k, v) in idx.iter().zip(&field.fused_power) {
        let (i, j, l) = ((k[0] - lo[0]) as usize, (k[1] - lo[1]) as usize, (k[2] - lo[2]) as usize);
        cells[(l * dims[1] + j) * dims[0] + i] = *v;
    }
    let mut s = String::with_capacity(cells.len() * 20 + 256);
    s.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(s, "index field gamma={} power={}", field.gamma, field.power);
    s.push_str("ASCII\nDATASET STRUCTURED_POINTS\n");
    let _ = writeln!(s, "DIMENSIONS {} {} {}", dims[0], dims[1], dims[2]);
    let _ = writeln!(s, "ORIGIN {} {} {}", lo[0] as f64 * pitch, lo[1] as f64 * pitch, lo[2] as f64 * pitch);
    let _ = writeln!(s, "SPACING {pitch} {pitch} {pitch}");
    let _ = writeln!(s, "POINT_DATA {}", cells.len());
    s.push_str("SCALARS index_pow double 1\nLOOKUP_TABLE default\n");
    for v in &cells {
        if v.is_nan() {
            s.push_str("nan\n");
        } else {
            let _ = writeln!(s, "{v:.8e}");
        }
    }
    write_atomic(path, s.as_bytes())
}
