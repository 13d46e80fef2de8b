use nalgebra::Matrix3;
use num_complex::Complex64;
use rayon::prelude::*;

use super::beta_from_moment;
use crate::error::{Error, Result};
use crate::geometry::{CVec3, SamplingLattice, SphereGrid, Vec3};
use crate::kernels::{cross_cr, EulerJet, GammaKernel, KernelMethod};
use crate::products::{seminorm_from_matrix, seminorm_matrix};

const BLOCK: usize = 64;

/// Raw indicator values J_k(z, β_z) for every dataset, coil and lattice point.
#[derive(Debug, Clone)]
pub struct IndicatorFields {
    /// raw[d][k][i] for dataset d, coil k, lattice point i.
    pub raw: Vec<Vec<Vec<f64>>>,
    /// Degenerate β fallbacks per dataset.
    pub degenerate: Vec<usize>,
}

/// Evaluates J at every lattice point for all datasets at once.
///
/// With the Euler route the kernel is C(x, z)·x − D(x, z)·z, so
/// Σ_q w H^s × K = Σ_q C_q (w H^s × x)_q − (Σ_q D_q w H^s_q) × z and both
/// sums become matrix products over blocks of lattice points. The series
/// route builds every kernel explicitly.
pub fn indicator_fields(
    datasets: &[&[Vec<CVec3>]],
    grid: &SphereGrid,
    lattice: &SamplingLattice,
    gamma: u32,
    method: KernelMethod,
) -> Result<IndicatorFields> {
    if gamma % 2 != 0 {
        return Err(Error::invalid(format!("gamma must be even, got {gamma}")));
    }
    let n_coils = datasets.first().map(|d| d.len()).unwrap_or(0);
    if n_coils == 0 {
        return Err(Error::DegenerateMeasurement("no coil data".into()));
    }
    for (d, ds) in datasets.iter().enumerate() {
        if ds.len() != n_coils {
            return Err(Error::GridMismatch(format!("dataset {d} has {} coils, expected {n_coils}", ds.len())));
        }
        for (k, f) in ds.iter().enumerate() {
            if f.len() != grid.len() {
                return Err(Error::GridMismatch(format!(
                    "dataset {d}, coil {k}: {} samples for {} receivers",
                    f.len(),
                    grid.len()
                )));
            }
        }
    }
    let radius = grid.radius();
    for z in lattice.points() {
        if z.norm() >= radius {
            return Err(Error::invalid(format!("sampling point {z:?} is not inside the measurement sphere")));
        }
    }
    let cols: Vec<&[CVec3]> = datasets.iter().flat_map(|d| d.iter().map(|f| f.as_slice())).collect();

    let per_point: Vec<Vec<(f64, bool)>> = match method {
        KernelMethod::Euler => euler_blocks(&cols, grid, lattice, gamma)?,
        KernelMethod::Series(_) => lattice
            .points()
            .par_iter()
            .map(|z| explicit_point(&cols, grid, z, gamma, method))
            .collect::<Result<_>>()?,
    };

    let n_data = datasets.len();
    let mut raw = vec![vec![Vec::with_capacity(lattice.len()); n_coils]; n_data];
    let mut degenerate = vec![0; n_data];
    for values in &per_point {
        for (c, &(j, deg)) in values.iter().enumerate() {
            let (d, k) = (c / n_coils, c % n_coils);
            raw[d][k].push(j);
            degenerate[d] += deg as usize;
        }
    }
    Ok(IndicatorFields { raw, degenerate })
}

fn j_from(v: &CVec3, m: &Matrix3<f64>, z: &Vec3) -> Result<(f64, bool)> {
    let choice = beta_from_moment(v);
    let s = seminorm_from_matrix(m, &choice.beta, z)?;
    let num = crate::kernels::conj_dot(v, choice.beta.as_vec()).norm();
    Ok((num / s, choice.degenerate))
}

fn explicit_point(cols: &[&[CVec3]], grid: &SphereGrid, z: &Vec3, gamma: u32, method: KernelMethod) -> Result<Vec<(f64, bool)>> {
    let full = GammaKernel::build(grid, z, gamma, method)?;
    let half = GammaKernel::build(grid, z, gamma / 2, method)?;
    let m = seminorm_matrix(&half, grid)?;
    cols.iter()
        .map(|a| {
            let mut v = CVec3::zeros();
            for ((ai, ki), w) in a.iter().zip(full.values()).zip(grid.weights()) {
                v += cross_cr(ai, ki) * Complex64::new(*w, 0.0);
            }
            j_from(&v, &m, z)
        })
        .collect()
}

fn euler_blocks(cols: &[&[CVec3]], grid: &SphereGrid, lattice: &SamplingLattice, gamma: u32) -> Result<Vec<Vec<(f64, bool)>>> {
    let m = grid.len();
    let nc = cols.len() * 6;
    // P = w H^s × x and Q = w H^s, one row per receiver, (re, im) per component.
    let mut p = vec![0.0; m * nc];
    let mut q = vec![0.0; m * nc];
    for (c, a) in cols.iter().enumerate() {
        for (i, ((h, x), w)) in a.iter().zip(grid.points()).zip(grid.weights()).enumerate() {
            let wh = h * Complex64::new(*w, 0.0);
            let px = cross_cr(&wh, x);
            for comp in 0..3 {
                let base = i * nc + c * 6 + comp * 2;
                p[base] = px[comp].re;
                p[base + 1] = px[comp].im;
                q[base] = wh[comp].re;
                q[base + 1] = wh[comp].im;
            }
        }
    }
    let full = EulerJet::new(gamma);
    let half = EulerJet::new(gamma / 2);
    let radius = grid.radius();

    let blocks: Vec<Vec<Vec<(f64, bool)>>> = lattice
        .points()
        .par_chunks(BLOCK)
        .map(|zs| {
            let nb = zs.len();
            let mut s1 = vec![0.0; nb * m];
            let mut s2 = vec![0.0; nb * m];
            let mut mats = Vec::with_capacity(nb);
            for (b, z) in zs.iter().enumerate() {
                let mut sxx = Matrix3::zeros();
                let mut sx = Vec3::zeros();
                let mut s0 = 0.0;
                for (i, (x, w)) in grid.points().iter().zip(grid.weights()).enumerate() {
                    let (a, bb) = full.coefficients(x, z, radius);
                    s1[b * m + i] = a + bb;
                    s2[b * m + i] = a;
                    let (ah, bh) = half.coefficients(x, z, radius);
                    let (c, d) = (ah + bh, ah);
                    sxx += x * x.transpose() * (w * c * c);
                    sx += x * (w * c * d);
                    s0 += w * d * d;
                }
                // Σ w (Cx − Dz)(Cx − Dz)ᵀ
                let mz = sxx - (sx * z.transpose() + z * sx.transpose()) + z * z.transpose() * s0;
                mats.push(mz);
            }
            let mut vp = vec![0.0; nb * nc];
            let mut vq = vec![0.0; nb * nc];
            gemm(nb, m, nc, &s1, &p, &mut vp);
            gemm(nb, m, nc, &s2, &q, &mut vq);
            zs.iter()
                .enumerate()
                .map(|(b, z)| {
                    (0..cols.len())
                        .map(|c| {
                            let at = |buf: &[f64], comp: usize| {
                                let o = b * nc + c * 6 + comp * 2;
                                Complex64::new(buf[o], buf[o + 1])
                            };
                            let vpc = CVec3::new(at(&vp, 0), at(&vp, 1), at(&vp, 2));
                            let vqc = CVec3::new(at(&vq, 0), at(&vq, 1), at(&vq, 2));
                            let v = vpc - cross_cr(&vqc, z);
                            j_from(&v, &mats[b], z)
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

/// c (m×n) = a (m×k) · b (k×n), all row-major.
fn gemm(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    // SAFETY: slice lengths checked above and strides describe dense row-major storage.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}
