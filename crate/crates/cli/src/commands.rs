use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use log::{info, warn};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use mitdsm_core::forward::{background_on_grid, export_measurements, import_measurements, ForwardOptions};
use mitdsm_core::io_util::write_atomic;
use mitdsm_core::products::PsfProfile;
use mitdsm_core::recon::{
    perturbation_field, reconstruct_perturbation, reconstruct_with_bank, write_index_file, write_raster, write_section_raster,
    write_vtk,
};
use mitdsm_core::validate::{run_validation, ValidateOptions};
use mitdsm_core::{
    apply_noise, DsmParams, IndexField, KernelBank, KernelMethod, LatticeSpec, SamplingLattice, SceneConfig, Simulation,
    SphereGrid, UnitComplexVec, Vec3,
};

use crate::{ForwardArgs, PsfArgs, ReconstructArgs, ValidateArgs};

/// Environment variable naming the kernel-bank cache directory.
pub const CACHE_ENV: &str = "MITDSM_CACHE_DIR";

/// Banks above this size are never cached; the streaming engine is used.
const MAX_CACHED_BANK_BYTES: usize = 512 << 20;

/// A user input problem detected by the CLI itself (exit status 3).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct InputError(pub String);

fn input(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

fn read_scene(path: &Path) -> Result<(SceneConfig, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| input(format!("cannot read scene {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| input(format!("{} is not UTF-8", path.display())))?;
    let scene = SceneConfig::parse(&text).with_context(|| format!("scene {}", path.display()))?;
    Ok((scene, bytes))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| input(format!("cannot create {}: {e}", dir.display())))
}

pub fn forward(a: &ForwardArgs) -> Result<u8> {
    if !(a.epsilon >= 0.0) || !a.epsilon.is_finite() {
        return Err(input(format!("--epsilon must be a non-negative number, got {}", a.epsilon)));
    }
    let (scene, bytes) = read_scene(&a.scene)?;
    let receivers = a.grid_size.unwrap_or(scene.receivers);
    create_dir(&a.out)?;

    let t = Instant::now();
    let grid = SphereGrid::fibonacci(scene.radius, receivers)?;
    let sim = Simulation::run(&scene, &grid, &ForwardOptions::default())?;
    let clean = sim.measurements(&grid)?;
    info!("forward model: {} coils x {} receivers in {:.2?}", clean.n_coils(), grid.len(), t.elapsed());

    let ms = apply_noise(&clean, a.epsilon, a.seed)?;
    let t = Instant::now();
    let files = export_measurements(&ms, &a.out)?;
    let mut manifest = String::new();
    let _ = writeln!(manifest, "scene={}", a.scene.display());
    let _ = writeln!(manifest, "scene_sha256={}", hex(&Sha256::digest(&bytes)));
    let _ = writeln!(manifest, "epsilon={}", a.epsilon);
    let _ = writeln!(manifest, "seed={}", a.seed);
    let _ = writeln!(manifest, "R={}", scene.radius);
    let _ = writeln!(manifest, "receivers={}", grid.len());
    let _ = writeln!(manifest, "coils={}", files.len());
    for f in &files {
        let _ = writeln!(manifest, "file={}", f.file_name().unwrap_or_default().to_string_lossy());
    }
    write_atomic(&a.out.join("manifest.txt"), manifest.as_bytes())?;
    info!("wrote {} coil files to {} in {:.2?}", files.len(), a.out.display(), t.elapsed());
    Ok(0)
}

fn bank_bytes(grid: &SphereGrid, lattice: &SamplingLattice) -> usize {
    lattice.len() * grid.len() * 2 * std::mem::size_of::<Vec3>()
}

fn section_file(s: &mitdsm_core::Section) -> String {
    let axis = ["x", "y", "z"][s.axis];
    format!("section_{axis}{}.csv", s.offset)
}

pub fn reconstruct(a: &ReconstructArgs) -> Result<u8> {
    if a.section_only && a.section.len() != 1 {
        return Err(input("--section-only needs exactly one --section"));
    }
    let (scene, _) = read_scene(&a.scene)?;
    let lattice_spec = LatticeSpec {
        pitch: a.pitch,
        section: a.section_only.then(|| a.section[0]),
    };
    let params = DsmParams {
        gamma: a.gamma,
        power: a.power,
        lattice: lattice_spec,
        ..DsmParams::default()
    };
    params.validate()?;
    create_dir(&a.out)?;

    let t = Instant::now();
    let ms = import_measurements(&a.meas, Some(scene.radius))?;
    if ms.n_coils() != scene.coils().len() {
        return Err(input(format!(
            "{} coil files in {} but the scene has {} coils",
            ms.n_coils(),
            a.meas.display(),
            scene.coils().len()
        )));
    }
    info!("read {} coils x {} receivers in {:.2?}", ms.n_coils(), ms.grid().len(), t.elapsed());

    let t = Instant::now();
    let background = background_on_grid(&scene, ms.grid(), params.coil_quadrature);
    let hs = perturbation_field(&ms, &background)?;
    info!("background field and perturbation in {:.2?}", t.elapsed());

    let lattice = params.lattice.build(scene.omega_domain_radius)?;
    let t = Instant::now();
    let field = match std::env::var_os(CACHE_ENV) {
        Some(dir) if bank_bytes(ms.grid(), &lattice) <= MAX_CACHED_BANK_BYTES => {
            let dir = PathBuf::from(dir);
            let bank = KernelBank::load_or_build(&dir, ms.grid(), &lattice, params.gamma, params.method)?;
            info!("kernel bank for {} points ready in {:.2?}", lattice.len(), t.elapsed());
            reconstruct_with_bank(&hs, ms.grid(), &lattice, &bank, params.power)?
        }
        Some(_) => {
            warn!("kernel bank for {} points too large to cache; evaluating kernels on the fly", lattice.len());
            reconstruct_perturbation(&hs, ms.grid(), &lattice, &params)?
        }
        None => reconstruct_perturbation(&hs, ms.grid(), &lattice, &params)?,
    };
    info!("index field on {} points in {:.2?}", lattice.len(), t.elapsed());
    if field.degenerate > 0 {
        warn!("{} (coil, point) pairs had a vanishing cross moment; β fell back to e1", field.degenerate);
    }
    report_peaks(&field);

    let t = Instant::now();
    write_index_file(&a.out.join("index.dat"), &field)?;
    for s in &a.section {
        let path = a.out.join(section_file(s));
        write_section_raster(&path, &field, *s)?;
    }
    if a.vtk {
        write_vtk(&a.out.join("index.vtk"), &field)?;
    }
    info!("outputs written to {} in {:.2?}", a.out.display(), t.elapsed());
    Ok(0)
}

fn report_peaks(field: &IndexField) {
    let min_sep = 4.0 * field.lattice.spacing().max(0.05);
    for (z, v) in field.peaks(min_sep).into_iter().take(6) {
        info!("peak ({:.3}, {:.3}, {:.3}) value {:.4}", z.x, z.y, z.z, v);
    }
}

pub fn validate(a: &ValidateArgs) -> Result<u8> {
    let t = Instant::now();
    let report = run_validation(&ValidateOptions::default());
    let tsv = report.to_tsv();
    match &a.out {
        Some(path) => write_atomic(path, tsv.as_bytes())?,
        None => print!("{tsv}"),
    }
    let gating: Vec<_> = report.checks.iter().filter(|c| c.gating).collect();
    let failed: Vec<_> = report.failures().collect();
    for c in &failed {
        eprintln!("FAIL {} measured={:e} tolerance={:e} {}", c.name, c.measured, c.tolerance, c.detail);
    }
    info!(
        "{} checks ({} gating), {} gating failures, {:.2?}",
        report.checks.len(),
        gating.len(),
        failed.len(),
        t.elapsed()
    );
    Ok(if report.passed() { 0 } else { 2 })
}

pub fn psf(a: &PsfArgs) -> Result<u8> {
    let y = Vec3::from(a.y);
    if !(y.norm() < a.sphere_radius) {
        return Err(input(format!("source |y| = {} must lie inside the sphere of radius {}", y.norm(), a.sphere_radius)));
    }
    if !(a.domain_radius > 0.0 && a.domain_radius < a.sphere_radius) {
        return Err(input("need 0 < --domain-radius < --sphere-radius"));
    }
    let alpha = UnitComplexVec::from_real(&Vec3::from(a.alpha))?;
    let t = Instant::now();
    let grid = SphereGrid::gauss_product(a.sphere_radius, a.band)?;
    let lattice = SamplingLattice::section(a.domain_radius, a.pitch, a.section)?;
    let values = lattice
        .points()
        .par_iter()
        .map(|z| Ok(PsfProfile::new(&grid, &y, &alpha, z, a.gamma, KernelMethod::Euler)?.eval(&alpha)?.norm()))
        .collect::<mitdsm_core::Result<Vec<f64>>>()?;
    info!("psf on {} points ({} receivers) in {:.2?}", lattice.len(), grid.len(), t.elapsed());

    let extra = [
        ("value", "abs_psf".to_string()),
        ("gamma", a.gamma.to_string()),
        ("y", format!("({}, {}, {})", a.y[0], a.y[1], a.y[2])),
        ("alpha", format!("({}, {}, {})", a.alpha[0], a.alpha[1], a.alpha[2])),
        ("receivers", grid.len().to_string()),
    ];
    if let Some(dir) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_raster(&a.out, &lattice, &values, a.section, &extra)?;
    let (imax, vmax) = values.iter().enumerate().fold((0, f64::MIN), |m, (i, v)| if *v > m.1 { (i, *v) } else { m });
    let p = lattice.points()[imax];
    info!("max |K| = {vmax:.6e} at ({:.3}, {:.3}, {:.3})", p.x, p.y, p.z);
    Ok(0)
}
