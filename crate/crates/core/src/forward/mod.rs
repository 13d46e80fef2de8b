//! Synthetic measurements: coil background fields by volume potentials, the
//! Born-approximate scattered field, and the multiplicative noise model.

mod io;
mod noise;

pub use io::{export_measurements, import_measurements, read_measurement_file, write_measurement_file};
pub use noise::apply_noise;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{conductor_quadrature, CVec3, Coil, CoilQuadrature, CurrentNode, SceneConfig, SphereGrid, Vec3, VolumeNode};

/// Default conductor quadrature pitch.
pub const CONDUCTOR_PITCH: f64 = 0.025;

/// Quadrature resolutions of the forward model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardOptions {
    pub coil_quadrature: CoilQuadrature,
    pub conductor_pitch: f64,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        ForwardOptions {
            coil_quadrature: CoilQuadrature::default(),
            conductor_pitch: CONDUCTOR_PITCH,
        }
    }
}

impl ForwardOptions {
    /// Both quadratures refined by `factor` in every direction.
    pub fn refined(self, factor: usize) -> Self {
        ForwardOptions {
            coil_quadrature: self.coil_quadrature.refined(factor),
            conductor_pitch: self.conductor_pitch / factor as f64,
        }
    }
}

/// J₀(y) of one coil.
pub fn coil_current(coil: &Coil, y: &Vec3) -> Vec3 {
    coil.current(y)
}

/// E₀ and H₀ of one coil at a list of points.
#[derive(Debug, Clone)]
pub struct BackgroundField {
    pub e0: Vec<CVec3>,
    pub h0: Vec<CVec3>,
    /// Set where the evaluation point lies inside the coil volume, where the
    /// midpoint rule is unreliable.
    pub inside_coil: Vec<bool>,
    pub quadrature: CoilQuadrature,
}

/// E₀(x) = iωμ Σ w G(x,y) J₀(y) and H₀(x) = Σ w ∇ₓG(x,y) × J₀(y) over the
/// coil quadrature.
pub fn background_field(coil: &Coil, points: &[Vec3], omega: f64, mu: f64, quad: CoilQuadrature) -> BackgroundField {
    let nodes = coil.quadrature(quad);
    let (e0, h0): (Vec<_>, Vec<_>) = points.par_iter().map(|x| coil_potentials(&nodes, x, omega, mu)).unzip();
    let inside_coil = points.iter().map(|x| coil.contains(x)).collect();
    BackgroundField {
        e0,
        h0,
        inside_coil,
        quadrature: quad,
    }
}

fn coil_potentials(nodes: &[CurrentNode], x: &Vec3, omega: f64, mu: f64) -> (CVec3, CVec3) {
    let mut a = Vec3::zeros();
    let mut h = Vec3::zeros();
    for n in nodes {
        let d = x - n.position;
        let r2 = d.norm_squared();
        if r2 == 0.0 {
            continue;
        }
        let inv_r = 1.0 / r2.sqrt();
        let wj = n.current * n.weight;
        a += wj * inv_r;
        // ∇ₓG × J = −(x−y)×J/(4π r³)
        h -= d.cross(&wj) * (inv_r * inv_r * inv_r);
    }
    let scale = 1.0 / (4.0 * PI);
    let e = a.map(|c| Complex64::new(0.0, omega * mu * c * scale));
    (e, h.map(|c| Complex64::new(c * scale, 0.0)))
}

/// H^s(x) = Σ_cells w ∇ₓG(x, y) × (σ E₀(y)) with E₀ evaluated at the
/// conductor nodes (Born approximation).
pub fn born_scattered_field(scene: &SceneConfig, coil: &Coil, grid: &SphereGrid, opts: &ForwardOptions) -> Result<Vec<CVec3>> {
    let cells = scene_cells(scene, opts.conductor_pitch)?;
    check_separation(scene, grid)?;
    let sources = cell_sources(coil, &cells, scene.omega, scene.mu, opts.coil_quadrature);
    Ok(scattered_from_sources(&cells, &sources, grid.points()))
}

fn check_separation(scene: &SceneConfig, grid: &SphereGrid) -> Result<()> {
    for (i, c) in scene.conductors().iter().enumerate() {
        if c.max_norm() >= grid.radius() {
            return Err(Error::invalid(format!(
                "conductor {i} touches or crosses the measurement sphere of radius {}",
                grid.radius()
            )));
        }
    }
    Ok(())
}

pub(crate) fn scene_cells(scene: &SceneConfig, pitch: f64) -> Result<Vec<VolumeNode>> {
    let mut cells = Vec::new();
    for c in scene.conductors() {
        cells.extend(conductor_quadrature(c, pitch)?);
    }
    Ok(cells)
}

/// σ E₀ at every conductor cell.
fn cell_sources(coil: &Coil, cells: &[VolumeNode], omega: f64, mu: f64, quad: CoilQuadrature) -> Vec<CVec3> {
    let points: Vec<Vec3> = cells.iter().map(|c| c.position).collect();
    let bg = background_field(coil, &points, omega, mu, quad);
    bg.e0.iter().zip(cells).map(|(e, c)| e * Complex64::new(c.sigma, 0.0)).collect()
}

fn scattered_from_sources(cells: &[VolumeNode], sources: &[CVec3], points: &[Vec3]) -> Vec<CVec3> {
    let weighted: Vec<(Vec3, CVec3)> = cells
        .iter()
        .zip(sources)
        .map(|(c, s)| (c.position, s * Complex64::new(c.weight, 0.0)))
        .collect();
    points
        .par_iter()
        .map(|x| {
            let mut re = Vec3::zeros();
            let mut im = Vec3::zeros();
            for (y, s) in &weighted {
                let d = x - y;
                let r2 = d.norm_squared();
                let g = -d / (4.0 * PI * r2 * r2.sqrt());
                re += g.cross(&s.map(|c| c.re));
                im += g.cross(&s.map(|c| c.im));
            }
            CVec3::new(
                Complex64::new(re.x, im.x),
                Complex64::new(re.y, im.y),
                Complex64::new(re.z, im.z),
            )
        })
        .collect()
}

/// Noise applied to a measurement set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseInfo {
    pub epsilon: f64,
    pub seed: u64,
}

/// Per-coil complex magnetic field samples on a receiver grid.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    grid: SphereGrid,
    coils: Vec<Vec<CVec3>>,
    noise: Option<NoiseInfo>,
}

impl MeasurementSet {
    pub fn new(grid: SphereGrid, coils: Vec<Vec<CVec3>>) -> Result<Self> {
        for (k, c) in coils.iter().enumerate() {
            if c.len() != grid.len() {
                return Err(Error::GridMismatch(format!(
                    "coil {k} has {} samples for {} receivers",
                    c.len(),
                    grid.len()
                )));
            }
            if !c.iter().all(|v| v.iter().all(|z| z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::invalid(format!("coil {k} has non-finite samples")));
            }
        }
        Ok(MeasurementSet {
            grid,
            coils,
            noise: None,
        })
    }

    pub(crate) fn with_noise(mut self, noise: Option<NoiseInfo>) -> Self {
        self.noise = noise;
        self
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn coils(&self) -> &[Vec<CVec3>] {
        &self.coils
    }

    pub fn coil(&self, k: usize) -> &[CVec3] {
        &self.coils[k]
    }

    pub fn n_coils(&self) -> usize {
        self.coils.len()
    }

    pub fn noise(&self) -> Option<NoiseInfo> {
        self.noise
    }

    /// Multiplies every sample by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        let coils = self.coils.iter().map(|f| f.iter().map(|v| v * c).collect()).collect();
        MeasurementSet {
            grid: self.grid.clone(),
            coils,
            noise: self.noise,
        }
    }

    /// Keeps only the listed coils, in the given order.
    pub fn select(&self, which: &[usize]) -> Self {
        MeasurementSet {
            grid: self.grid.clone(),
            coils: which.iter().map(|&k| self.coils[k].clone()).collect(),
            noise: self.noise,
        }
    }
}

/// Background and scattered fields of every coil of a scene on a grid.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub background: Vec<BackgroundField>,
    pub scattered: Vec<Vec<CVec3>>,
}

impl Simulation {
    pub fn run(scene: &SceneConfig, grid: &SphereGrid, opts: &ForwardOptions) -> Result<Self> {
        check_separation(scene, grid)?;
        let cells = scene_cells(scene, opts.conductor_pitch)?;
        let mut background = Vec::with_capacity(scene.coils().len());
        let mut scattered = Vec::with_capacity(scene.coils().len());
        for coil in scene.coils() {
            background.push(background_field(coil, grid.points(), scene.omega, scene.mu, opts.coil_quadrature));
            let sources = cell_sources(coil, &cells, scene.omega, scene.mu, opts.coil_quadrature);
            scattered.push(scattered_from_sources(&cells, &sources, grid.points()));
        }
        Ok(Simulation { background, scattered })
    }

    /// Total field H₀ + H^s, the noise-free measurement.
    pub fn measurements(&self, grid: &SphereGrid) -> Result<MeasurementSet> {
        let coils = self
            .background
            .iter()
            .zip(&self.scattered)
            .map(|(bg, hs)| bg.h0.iter().zip(hs).map(|(a, b)| a + b).collect())
            .collect();
        MeasurementSet::new(grid.clone(), coils)
    }

    pub fn background_h(&self) -> Vec<Vec<CVec3>> {
        self.background.iter().map(|b| b.h0.clone()).collect()
    }
}

/// H₀ of every scene coil on the grid.
pub fn background_on_grid(scene: &SceneConfig, grid: &SphereGrid, quad: CoilQuadrature) -> Vec<Vec<CVec3>> {
    scene
        .coils()
        .iter()
        .map(|c| background_field(c, grid.points(), scene.omega, scene.mu, quad).h0)
        .collect()
}
