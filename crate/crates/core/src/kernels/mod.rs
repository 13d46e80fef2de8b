//! Green's function, its gradient, and the filtered kernels
//! (−Δ_Γ)^p ∇ₓG(·, z) sampled on the measurement sphere.
//!
//! Two independent evaluation routes exist. The series route expands ∇ₓG in
//! exterior harmonics and scales each degree by its Laplace–Beltrami
//! eigenvalue. The Euler route uses that on exterior harmonics the operator
//! −Δ_Γ acts as R⁻²·D(D+1) with D = x·∇, which turns the filter into a short
//! radial Taylor expansion with a closed form at any |z| < R.

mod bank;
mod euler;
mod green;
mod legendre;
mod series;

pub use bank::{KernelBank, KernelPair};
pub use euler::{euler_kernel, EulerJet};
pub use green::{grad_green, green};
pub use legendre::{legendre_table, legendre_with_derivatives};
pub use series::{
    gamma_kernel, gamma_kernel_with, laplace_beltrami_eigenvalue, required_l_max, LMaxPolicy, L_MAX_CAP,
};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{CVec3, SphereGrid, Vec3};

/// How a [`GammaKernel`] was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMethod {
    /// Truncated exterior-harmonic Legendre series.
    Series(LMaxPolicy),
    /// Closed-form Euler-operator expansion (exact up to rounding).
    Euler,
}

impl Default for KernelMethod {
    fn default() -> Self {
        KernelMethod::Euler
    }
}

/// (−Δ_Γ)^power ∇ₓG(x, z) at every point of a grid.
#[derive(Debug, Clone)]
pub struct GammaKernel {
    pub(crate) z: Vec3,
    pub(crate) power: u32,
    pub(crate) radius: f64,
    /// Series truncation degree; `None` for the closed-form route.
    pub(crate) l_max: Option<usize>,
    pub(crate) values: Vec<Vec3>,
    pub(crate) grid_fingerprint: u64,
}

impl GammaKernel {
    pub fn build(grid: &SphereGrid, z: &Vec3, power: u32, method: KernelMethod) -> Result<Self> {
        match method {
            KernelMethod::Series(policy) => gamma_kernel(grid, z, power, policy),
            KernelMethod::Euler => euler_kernel(grid, z, power),
        }
    }

    pub fn z(&self) -> &Vec3 {
        &self.z
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn l_max(&self) -> Option<usize> {
        self.l_max
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn grid_fingerprint(&self) -> u64 {
        self.grid_fingerprint
    }

    /// Fails unless the kernel was sampled on `grid`'s points.
    pub fn check_grid(&self, grid: &SphereGrid) -> Result<()> {
        if self.grid_fingerprint != grid.fingerprint() || self.values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "kernel sampled on a different grid ({} values, grid has {} points)",
                self.values.len(),
                grid.len()
            )));
        }
        Ok(())
    }

    /// Largest relative pointwise difference to `other`, scaled by the
    /// largest magnitude of `other`.
    pub fn max_rel_diff(&self, other: &GammaKernel) -> f64 {
        let scale = other.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / scale
    }
}

/// Element of S = {α ∈ ℂ³ : |α| = 1}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitComplexVec(CVec3);

impl UnitComplexVec {
    /// Normalizes `v`; fails for the zero vector or non-finite input.
    pub fn new(v: CVec3) -> Result<Self> {
        let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::invalid("cannot normalize a zero or non-finite complex vector"));
        }
        Ok(UnitComplexVec(v.map(|c| c / n)))
    }

    pub fn from_real(v: &Vec3) -> Result<Self> {
        Self::new(crate::geometry::complexify(v))
    }

    pub fn e1() -> Self {
        UnitComplexVec(crate::geometry::complexify(&Vec3::x()))
    }

    pub fn as_vec(&self) -> &CVec3 {
        &self.0
    }

    /// α·conj(β).
    pub fn dot_conj(&self, other: &UnitComplexVec) -> Complex64 {
        conj_dot(&self.0, &other.0)
    }

    /// Multiplies by a unit-modulus phase.
    pub fn with_phase(&self, phase: f64) -> Self {
        UnitComplexVec(self.0 * Complex64::from_polar(1.0, phase))
    }
}

/// a·conj(b) = Σ aᵢ·conj(bᵢ).
pub fn conj_dot(a: &CVec3, b: &CVec3) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum()
}

/// Real vector × complex vector.
pub fn cross_rc(k: &Vec3, b: &CVec3) -> CVec3 {
    CVec3::new(
        b[2] * k[1] - b[1] * k[2],
        b[0] * k[2] - b[2] * k[0],
        b[1] * k[0] - b[0] * k[1],
    )
}

/// Complex vector × real vector.
pub fn cross_cr(a: &CVec3, k: &Vec3) -> CVec3 {
    -cross_rc(k, a)
}

pub(crate) fn check_inside(z: &Vec3, radius: f64) -> Result<()> {
    if !(z.norm() < radius) || !z.iter().all(|c| c.is_finite()) {
        return Err(Error::invalid(format!(
            "sampling point |z| = {} must lie strictly inside the sphere of radius {radius}",
            z.norm()
        )));
    }
    Ok(())
}
