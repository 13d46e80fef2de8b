//! Direct sampling reconstruction: perturbation field, optimal polarization,
//! indicator, per-coil normalization, RMS fusion and power post-processing.

mod engine;
mod output;

pub use engine::{indicator_fields, IndicatorFields};
pub use output::{read_index_file, write_index_file, write_raster, write_section_raster, write_vtk, IndexRow, RasterMeta};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forward::{background_on_grid, MeasurementSet};
use crate::geometry::{CVec3, CoilQuadrature, SamplingLattice, SceneConfig, Section, SphereGrid, Vec3};
use crate::kernels::{GammaKernel, KernelBank, KernelMethod, KernelPair, UnitComplexVec};
use crate::products::{duality_product, seminorm};

/// Sampling lattice description relative to the scene's sampling ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    pub pitch: f64,
    pub section: Option<Section>,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        LatticeSpec {
            pitch: 0.05,
            section: None,
        }
    }
}

impl LatticeSpec {
    pub fn build(&self, radius: f64) -> Result<SamplingLattice> {
        match self.section {
            Some(s) => SamplingLattice::section(radius, self.pitch, s),
            None => SamplingLattice::ball(radius, self.pitch),
        }
    }
}

/// Reconstruction settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsmParams {
    /// Filter order γ (even).
    pub gamma: u32,
    /// Exponent p of the displayed Ĩ^p.
    pub power: u32,
    pub method: KernelMethod,
    pub lattice: LatticeSpec,
    /// Coil quadrature used to recompute H₀ for the perturbation field.
    pub coil_quadrature: CoilQuadrature,
}

impl Default for DsmParams {
    fn default() -> Self {
        DsmParams {
            gamma: 4,
            power: 4,
            method: KernelMethod::Euler,
            lattice: LatticeSpec::default(),
            coil_quadrature: CoilQuadrature::default(),
        }
    }
}

impl DsmParams {
    pub fn validate(&self) -> Result<()> {
        if self.gamma % 2 != 0 {
            return Err(Error::invalid(format!("gamma must be even, got {}", self.gamma)));
        }
        if self.power == 0 {
            return Err(Error::invalid("post-processing power must be at least 1"));
        }
        if !(self.lattice.pitch > 0.0) {
            return Err(Error::invalid("lattice pitch must be positive"));
        }
        Ok(())
    }
}

/// Normalized index values over a lattice.
#[derive(Debug, Clone)]
pub struct IndexField {
    pub lattice: SamplingLattice,
    pub gamma: u32,
    pub power: u32,
    /// J_k(z, β_z) before normalization, one vector per coil.
    pub raw: Vec<Vec<f64>>,
    /// I_k = J_k / max J_k.
    pub per_coil: Vec<Vec<f64>>,
    /// Ĩ = RMS_k(I_k) / max RMS.
    pub fused: Vec<f64>,
    /// Ĩ^p.
    pub fused_power: Vec<f64>,
    /// Number of (coil, z) pairs where β_z fell back to the default.
    pub degenerate: usize,
}

impl IndexField {
    /// Normalizes raw indicator values per coil, fuses them and applies the power.
    pub fn from_raw(lattice: SamplingLattice, raw: Vec<Vec<f64>>, gamma: u32, power: u32, degenerate: usize) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::DegenerateMeasurement("no coils".into()));
        }
        let mut per_coil = Vec::with_capacity(raw.len());
        for (k, j) in raw.iter().enumerate() {
            if j.len() != lattice.len() {
                return Err(Error::GridMismatch(format!("coil {k}: {} values for {} lattice points", j.len(), lattice.len())));
            }
            let max = j.iter().copied().fold(0.0, f64::max);
            if !(max > 0.0) || !max.is_finite() {
                return Err(Error::DegenerateMeasurement(format!(
                    "indicator of coil {k} vanishes on the whole lattice"
                )));
            }
            per_coil.push(j.iter().map(|v| v / max).collect::<Vec<f64>>());
        }
        let n = per_coil.len() as f64;
        let rms: Vec<f64> = (0..lattice.len())
            .map(|i| (per_coil.iter().map(|c| c[i] * c[i]).sum::<f64>() / n).sqrt())
            .collect();
        let max = rms.iter().copied().fold(0.0, f64::max);
        let fused: Vec<f64> = rms.iter().map(|v| v / max).collect();
        let fused_power = fused.iter().map(|v| v.powi(power as i32)).collect();
        Ok(IndexField {
            lattice,
            gamma,
            power,
            raw,
            per_coil,
            fused,
            fused_power,
            degenerate,
        })
    }

    pub fn n_coils(&self) -> usize {
        self.per_coil.len()
    }

    /// Lattice index of the largest Ĩ^p (first one on ties).
    pub fn argmax(&self) -> usize {
        argmax(&self.fused_power)
    }

    /// Local maxima of Ĩ^p over the 26-neighborhood, strongest first, with
    /// weaker maxima closer than `min_separation` to a kept one discarded.
    pub fn peaks(&self, min_separation: f64) -> Vec<(Vec3, f64)> {
        local_maxima(&self.lattice, &self.fused_power, min_separation)
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Greedy well-separated local maxima of `values` on a lattice.
pub fn local_maxima(lattice: &SamplingLattice, values: &[f64], min_separation: f64) -> Vec<(Vec3, f64)> {
    let map = lattice.index_map();
    let mut candidates: Vec<usize> = (0..lattice.len())
        .filter(|&i| lattice.neighbors(i, &map).iter().all(|&j| values[j] <= values[i]))
        .collect();
    candidates.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut kept: Vec<(Vec3, f64)> = Vec::new();
    for i in candidates {
        let p = lattice.points()[i];
        if kept.iter().all(|(q, _)| (p - q).norm() >= min_separation) {
            kept.push((p, values[i]));
        }
    }
    kept
}

/// H^s = M − H₀ per coil.
pub fn perturbation_field(ms: &MeasurementSet, background: &[Vec<CVec3>]) -> Result<Vec<Vec<CVec3>>> {
    if background.len() != ms.n_coils() {
        return Err(Error::GridMismatch(format!(
            "{} measured coils but {} background fields",
            ms.n_coils(),
            background.len()
        )));
    }
    ms.coils()
        .iter()
        .zip(background)
        .enumerate()
        .map(|(k, (m, h0))| {
            if m.len() != h0.len() {
                return Err(Error::GridMismatch(format!("coil {k}: background sampled on a different grid")));
            }
            Ok(m.iter().zip(h0).map(|(a, b)| a - b).collect())
        })
        .collect()
}

/// β_z and whether it came from the degenerate fallback.
#[derive(Debug, Clone, Copy)]
pub struct BetaChoice {
    pub beta: UnitComplexVec,
    pub degenerate: bool,
}

/// β_z = normalize(Σ_q w_q H^s(x_q) × K(x_q)); falls back to (1, 0, 0) when
/// the integral vanishes.
pub fn optimal_beta(hs: &[CVec3], kernel: &GammaKernel, grid: &SphereGrid) -> Result<BetaChoice> {
    let v = crate::products::cross_moment(hs, kernel, grid)?;
    Ok(beta_from_moment(&v))
}

pub(crate) fn beta_from_moment(v: &CVec3) -> BetaChoice {
    let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if n < 1e-300 || !n.is_finite() {
        return BetaChoice {
            beta: UnitComplexVec::e1(),
            degenerate: true,
        };
    }
    BetaChoice {
        beta: UnitComplexVec::new(*v).expect("non-zero moment"),
        degenerate: false,
    }
}

/// J(z, β) = |⟨H^s, K_γ×β⟩| / |K_{γ/2}×β|.
pub fn indicator(hs: &[CVec3], beta: &UnitComplexVec, pair: &KernelPair, grid: &SphereGrid) -> Result<f64> {
    let num = duality_product(hs, &pair.full, beta, grid)?;
    Ok(num.norm() / seminorm(&pair.half, beta, grid)?)
}

/// Reference reconstruction that evaluates every (coil, z) through
/// [`optimal_beta`] and [`indicator`] with a prebuilt bank.
pub fn reconstruct_with_bank(
    hs: &[Vec<CVec3>],
    grid: &SphereGrid,
    lattice: &SamplingLattice,
    bank: &KernelBank,
    power: u32,
) -> Result<IndexField> {
    bank.check(grid, lattice)?;
    let mut degenerate = 0;
    let mut raw = Vec::with_capacity(hs.len());
    for field in hs {
        let mut j = Vec::with_capacity(lattice.len());
        for pair in bank.entries() {
            let choice = optimal_beta(field, &pair.full, grid)?;
            degenerate += choice.degenerate as usize;
            j.push(indicator(field, &choice.beta, pair, grid)?);
        }
        raw.push(j);
    }
    IndexField::from_raw(lattice.clone(), raw, bank.gamma(), power, degenerate)
}

/// Index field from perturbation data on an explicit lattice.
pub fn reconstruct_perturbation(
    hs: &[Vec<CVec3>],
    grid: &SphereGrid,
    lattice: &SamplingLattice,
    params: &DsmParams,
) -> Result<IndexField> {
    let mut out = reconstruct_batch(&[hs], grid, lattice, params)?;
    Ok(out.pop().expect("one dataset"))
}

/// Index fields for several perturbation datasets sharing one grid and
/// lattice. Kernel evaluation is shared by all datasets.
pub fn reconstruct_batch(
    datasets: &[&[Vec<CVec3>]],
    grid: &SphereGrid,
    lattice: &SamplingLattice,
    params: &DsmParams,
) -> Result<Vec<IndexField>> {
    params.validate()?;
    let fields = indicator_fields(datasets, grid, lattice, params.gamma, params.method)?;
    fields
        .raw
        .into_iter()
        .zip(fields.degenerate)
        .map(|(raw, deg)| IndexField::from_raw(lattice.clone(), raw, params.gamma, params.power, deg))
        .collect()
}

/// Full pipeline from measurements and scene: H₀ is recomputed on the
/// measurement grid, subtracted, and the lattice is taken from the scene's
/// sampling ball.
pub fn reconstruct(ms: &MeasurementSet, scene: &SceneConfig, params: &DsmParams) -> Result<IndexField> {
    params.validate()?;
    if ((ms.grid().radius() - scene.radius) / scene.radius).abs() > 1e-12 {
        return Err(Error::GridMismatch(format!(
            "measurements on R = {}, scene has R = {}",
            ms.grid().radius(),
            scene.radius
        )));
    }
    if ms.n_coils() != scene.coils().len() {
        return Err(Error::GridMismatch(format!(
            "{} measured coils but the scene has {}",
            ms.n_coils(),
            scene.coils().len()
        )));
    }
    let background = background_on_grid(scene, ms.grid(), params.coil_quadrature);
    let hs = perturbation_field(ms, &background)?;
    let lattice = params.lattice.build(scene.omega_domain_radius)?;
    reconstruct_perturbation(&hs, ms.grid(), &lattice, params)
}

/// Multiplies every sample of every coil by `c`.
pub fn scale_fields(hs: &[Vec<CVec3>], c: Complex64) -> Vec<Vec<CVec3>> {
    hs.iter().map(|f| f.iter().map(|v| v * c).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_coils_fuse_to_the_single_index() {
        let lattice = SamplingLattice::ball(1.0, 0.5).unwrap();
        let j: Vec<f64> = (0..lattice.len()).map(|i| 1.0 + (i as f64 * 0.37).sin()).collect();
        let one = IndexField::from_raw(lattice.clone(), vec![j.clone()], 4, 4, 0).unwrap();
        let many = IndexField::from_raw(lattice, vec![j.clone(), j.clone(), j], 4, 4, 0).unwrap();
        for (a, b) in one.per_coil[0].iter().zip(&many.fused) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(many.fused.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(many.fused.iter().copied().fold(0.0, f64::max), 1.0);
    }

    #[test]
    fn all_zero_indicator_is_degenerate() {
        let lattice = SamplingLattice::ball(1.0, 0.5).unwrap();
        let err = IndexField::from_raw(lattice.clone(), vec![vec![0.0; lattice.len()]], 4, 4, 0).unwrap_err();
        assert!(matches!(err, Error::DegenerateMeasurement(_)));
    }

    #[test]
    fn zero_moment_falls_back() {
        let c = beta_from_moment(&CVec3::zeros());
        assert!(c.degenerate);
        assert_eq!(c.beta, UnitComplexVec::e1());
    }

    #[test]
    fn peaks_are_separated() {
        let lattice = SamplingLattice::section(1.0, 0.1, Section::z(0.0)).unwrap();
        let bumps = [Vec3::new(0.4, 0.4, 0.0), Vec3::new(0.5, 0.4, 0.0), Vec3::new(-0.4, -0.4, 0.0)];
        let values: Vec<f64> = lattice
            .points()
            .iter()
            .map(|p| {
                (-(p - bumps[0]).norm_squared() / 0.01).exp()
                    + 0.9 * (-(p - bumps[1]).norm_squared() / 0.01).exp()
                    + 0.5 * (-(p - bumps[2]).norm_squared() / 0.01).exp()
            })
            .collect();
        let peaks = local_maxima(&lattice, &values, 0.3);
        assert_eq!(peaks.len(), 2);
        assert!((peaks[1].0 - bumps[2]).norm() < 1e-9);
    }

    #[test]
    fn engine_matches_reference_path() {
        let grid = SphereGrid::fibonacci(1.5, 400).unwrap();
        let lattice = SamplingLattice::from_points(vec![
            Vec3::new(0.1, -0.2, 0.3),
            Vec3::new(-0.7, 0.1, 0.2),
            Vec3::zeros(),
            Vec3::new(0.0, 0.9, -0.3),
        ])
        .unwrap();
        let hs: Vec<Vec<CVec3>> = (0..3)
            .map(|k| {
                grid.points()
                    .iter()
                    .map(|x| {
                        let t = k as f64 + 1.0;
                        CVec3::new(
                            Complex64::new((t * x.y).sin(), x.z),
                            Complex64::new(x.x * x.z, (t * x.x).cos()),
                            Complex64::new(1.0 / t, x.y * x.y),
                        )
                    })
                    .collect()
            })
            .collect();
        for gamma in [0, 2, 4] {
            let bank = KernelBank::build(&grid, &lattice, gamma, KernelMethod::Euler).unwrap();
            let reference = reconstruct_with_bank(&hs, &grid, &lattice, &bank, 2).unwrap();
            for method in [KernelMethod::Euler, KernelMethod::Series(crate::kernels::LMaxPolicy::Auto)] {
                let params = DsmParams {
                    gamma,
                    power: 2,
                    method,
                    ..DsmParams::default()
                };
                let fast = reconstruct_perturbation(&hs, &grid, &lattice, &params).unwrap();
                for (a, b) in reference.raw.iter().flatten().zip(fast.raw.iter().flatten()) {
                    assert!((a - b).abs() < 1e-9 * a.abs(), "gamma {gamma}: {a} vs {b}");
                }
            }
        }
    }
}
