//! Discrete duality product, seminorm and point spread functions on Γ.

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{CVec3, SphereGrid, Vec3};
use crate::kernels::{conj_dot, cross_cr, cross_rc, grad_green, GammaKernel, KernelMethod, UnitComplexVec};

fn check_even(gamma: u32) -> Result<()> {
    if gamma % 2 != 0 {
        return Err(Error::invalid(format!("gamma must be an even integer, got {gamma}")));
    }
    Ok(())
}

fn check_field(a: &[CVec3], grid: &SphereGrid) -> Result<()> {
    if a.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "field has {} samples, grid has {} points",
            a.len(),
            grid.len()
        )));
    }
    Ok(())
}

/// ∇ₓG(·, y) × α sampled on the grid.
pub fn polarized_gradient(grid: &SphereGrid, y: &Vec3, alpha: &UnitComplexVec) -> Result<Vec<CVec3>> {
    grid.points()
        .iter()
        .map(|x| Ok(cross_rc(&grad_green(x, y)?, alpha.as_vec())))
        .collect()
}

/// V = Σ_q w_q a(x_q) × k(x_q); then ⟨a, k×β⟩ = conj(β)·V.
pub fn cross_moment(a: &[CVec3], kernel: &GammaKernel, grid: &SphereGrid) -> Result<CVec3> {
    check_field(a, grid)?;
    kernel.check_grid(grid)?;
    let mut v = CVec3::zeros();
    for ((ai, ki), w) in a.iter().zip(kernel.values()).zip(grid.weights()) {
        v += cross_cr(ai, ki) * Complex64::new(*w, 0.0);
    }
    Ok(v)
}

/// ⟨a, b⟩_γ with b = kernel×β: Σ_q w_q a(x_q)·conj(kernel(x_q) × β).
pub fn duality_product(
    a: &[CVec3],
    kernel: &GammaKernel,
    beta: &UnitComplexVec,
    grid: &SphereGrid,
) -> Result<Complex64> {
    check_field(a, grid)?;
    kernel.check_grid(grid)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for ((ai, ki), w) in a.iter().zip(kernel.values()).zip(grid.weights()) {
        acc += conj_dot(ai, &cross_rc(ki, beta.as_vec())) * *w;
    }
    Ok(acc)
}

/// M = Σ_q w_q k(x_q) k(x_q)ᵀ, so that |k×β|²_γ = tr M − βᵀ M β̄.
pub fn seminorm_matrix(kernel: &GammaKernel, grid: &SphereGrid) -> Result<Matrix3<f64>> {
    kernel.check_grid(grid)?;
    let mut m = Matrix3::zeros();
    for (k, w) in kernel.values().iter().zip(grid.weights()) {
        m += k * k.transpose() * *w;
    }
    Ok(m)
}

/// |k×β| from the second-moment matrix; errors when the value vanishes.
pub fn seminorm_from_matrix(m: &Matrix3<f64>, beta: &UnitComplexVec, z: &Vec3) -> Result<f64> {
    let b = beta.as_vec();
    let mut quad = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            quad += m[(i, j)] * (b[i] * b[j].conj()).re;
        }
    }
    let s2 = m.trace() - quad;
    if !(s2 > 0.0) {
        return Err(Error::ZeroSeminorm { z: [z.x, z.y, z.z] });
    }
    Ok(s2.sqrt())
}

/// |kernel_half × β| = (Σ_q w_q |kernel_half(x_q) × β|²)^{1/2}.
pub fn seminorm(kernel_half: &GammaKernel, beta: &UnitComplexVec, grid: &SphereGrid) -> Result<f64> {
    kernel_half.check_grid(grid)?;
    let mut s2 = 0.0;
    for (k, w) in kernel_half.values().iter().zip(grid.weights()) {
        s2 += w * cross_rc(k, beta.as_vec()).iter().map(|c| c.norm_sqr()).sum::<f64>();
    }
    if !(s2 > 0.0) {
        let z = kernel_half.z();
        return Err(Error::ZeroSeminorm { z: [z.x, z.y, z.z] });
    }
    Ok(s2.sqrt())
}

/// K_(y,α)(z, β) = ⟨∇G(·,y)×α, ∇G(·,z)×β⟩_γ / |∇G(·,z)×β|_γ.
pub fn psf(
    y: &Vec3,
    alpha: &UnitComplexVec,
    z: &Vec3,
    beta: &UnitComplexVec,
    gamma: u32,
    grid: &SphereGrid,
    method: KernelMethod,
) -> Result<Complex64> {
    PsfProfile::new(grid, y, alpha, z, gamma, method)?.eval(beta)
}

/// The β-independent parts of K_(y,α)(z, ·): the cross moment V and the
/// seminorm matrix M. Evaluating many β then costs O(1) each.
#[derive(Debug, Clone)]
pub struct PsfProfile {
    z: Vec3,
    v: CVec3,
    m: Matrix3<f64>,
}

impl PsfProfile {
    pub fn new(
        grid: &SphereGrid,
        y: &Vec3,
        alpha: &UnitComplexVec,
        z: &Vec3,
        gamma: u32,
        method: KernelMethod,
    ) -> Result<Self> {
        check_even(gamma)?;
        if !(y.norm() < grid.radius()) {
            return Err(Error::invalid(format!("source point |y| = {} lies outside B_R", y.norm())));
        }
        // The filter is moved onto the smooth source side: for z close to Γ
        // the filtered probe kernel is huge and sharply peaked, and summing it
        // against a smooth field cancels away every significant digit.
        let source = GammaKernel::build(grid, y, gamma, method)?;
        let a: Vec<CVec3> = source.values().iter().map(|k| cross_rc(k, alpha.as_vec())).collect();
        let probe = GammaKernel::build(grid, z, 0, method)?;
        let half = GammaKernel::build(grid, z, gamma / 2, method)?;
        Ok(PsfProfile {
            z: *z,
            v: cross_moment(&a, &probe, grid)?,
            m: seminorm_matrix(&half, grid)?,
        })
    }

    /// Profile for an arbitrary field `a` in place of ∇G(·,y)×α, with the
    /// filter applied to the probe kernel as in the data pipeline.
    pub fn from_field(grid: &SphereGrid, a: &[CVec3], z: &Vec3, gamma: u32, method: KernelMethod) -> Result<Self> {
        check_even(gamma)?;
        let full = GammaKernel::build(grid, z, gamma, method)?;
        let half = GammaKernel::build(grid, z, gamma / 2, method)?;
        Ok(PsfProfile {
            z: *z,
            v: cross_moment(a, &full, grid)?,
            m: seminorm_matrix(&half, grid)?,
        })
    }

    pub fn numerator(&self, beta: &UnitComplexVec) -> Complex64 {
        conj_dot(&self.v, beta.as_vec())
    }

    pub fn seminorm(&self, beta: &UnitComplexVec) -> Result<f64> {
        seminorm_from_matrix(&self.m, beta, &self.z)
    }

    pub fn eval(&self, beta: &UnitComplexVec) -> Result<Complex64> {
        Ok(self.numerator(beta) / self.seminorm(beta)?)
    }

    pub fn cross_moment(&self) -> &CVec3 {
        &self.v
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::euler_kernel;

    fn beta() -> UnitComplexVec {
        UnitComplexVec::new(CVec3::new(
            Complex64::new(0.3, 0.2),
            Complex64::new(-0.5, 0.1),
            Complex64::new(0.4, -0.6),
        ))
        .unwrap()
    }

    #[test]
    fn moment_form_matches_direct_sum() {
        let grid = SphereGrid::fibonacci(1.5, 500).unwrap();
        let z = Vec3::new(0.2, 0.4, -0.3);
        let alpha = UnitComplexVec::from_real(&Vec3::new(1.0, 2.0, 0.5)).unwrap();
        let a = polarized_gradient(&grid, &Vec3::new(-0.1, 0.3, 0.2), &alpha).unwrap();
        let k = euler_kernel(&grid, &z, 2).unwrap();
        let b = beta();
        let direct = duality_product(&a, &k, &b, &grid).unwrap();
        let v = cross_moment(&a, &k, &grid).unwrap();
        let via = conj_dot(&v, b.as_vec());
        assert!((direct - via).norm() < 1e-13 * direct.norm());
        let m = seminorm_matrix(&k, &grid).unwrap();
        let s = seminorm(&k, &b, &grid).unwrap();
        assert!((seminorm_from_matrix(&m, &b, &z).unwrap() - s).abs() < 1e-12 * s);
    }

    #[test]
    fn self_product_is_real_square() {
        let grid = SphereGrid::fibonacci(1.5, 500).unwrap();
        let z = Vec3::new(0.5, 0.0, 0.1);
        let k = euler_kernel(&grid, &z, 0).unwrap();
        let b = UnitComplexVec::from_real(&Vec3::new(0.0, 1.0, 1.0)).unwrap();
        let a: Vec<CVec3> = k.values().iter().map(|v| cross_rc(v, b.as_vec())).collect();
        let p = duality_product(&a, &k, &b, &grid).unwrap();
        let s = seminorm(&k, &b, &grid).unwrap();
        assert!(p.im.abs() < 1e-14 * p.re);
        assert!((p.re - s * s).abs() < 1e-12 * p.re);
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let g1 = SphereGrid::fibonacci(1.5, 200).unwrap();
        let g2 = SphereGrid::fibonacci(1.5, 201).unwrap();
        let k = euler_kernel(&g1, &Vec3::zeros(), 0).unwrap();
        let a = vec![CVec3::zeros(); g2.len()];
        assert!(matches!(duality_product(&a, &k, &beta(), &g2), Err(Error::GridMismatch(_))));
        assert!(matches!(seminorm(&k, &beta(), &g2), Err(Error::GridMismatch(_))));
        let y = Vec3::zeros();
        assert!(psf(&y, &beta(), &y, &beta(), 3, &g1, KernelMethod::Euler).is_err());
        assert!(psf(&Vec3::new(2.0, 0.0, 0.0), &beta(), &y, &beta(), 0, &g1, KernelMethod::Euler).is_err());
    }

    #[test]
    fn zero_weights_give_zero_seminorm_error() {
        let g = SphereGrid::fibonacci(1.5, 200).unwrap().with_scaled_weights(0.0);
        let k = euler_kernel(&g, &Vec3::zeros(), 0).unwrap();
        assert!(matches!(seminorm(&k, &beta(), &g), Err(Error::ZeroSeminorm { .. })));
    }
}
