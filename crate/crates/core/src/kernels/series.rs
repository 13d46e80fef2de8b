use std::f64::consts::PI;

use super::legendre::legendre_with_derivatives;
use super::{check_inside, GammaKernel};
use crate::error::{Error, Result};
use crate::geometry::{SphereGrid, Vec3};

/// Largest truncation degree the automatic policy will use.
pub const L_MAX_CAP: usize = 400;

/// Relative tail tolerance of the series truncation.
const TAIL_TOL: f64 = 1e-12;

/// How the series truncation degree is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LMaxPolicy {
    /// Smallest degree meeting the tail tolerance, at most [`L_MAX_CAP`].
    Auto,
    /// Exactly this degree; rejected if it misses the tail tolerance.
    Fixed(usize),
}

/// Eigenvalue (l+1)(l+2)/R² of −Δ_Γ carried by the degree-l series term,
/// whose Cartesian components are exterior harmonics of degree l+1.
pub fn laplace_beltrami_eigenvalue(l: usize, radius: f64) -> f64 {
    ((l + 1) * (l + 2)) as f64 / (radius * radius)
}

/// Smallest L such that the series tail after degree L is below 1e-12 of the
/// RMS norm of the partial sum, for |z|/R = `ratio` and filter power `power`.
///
/// Term l is bounded on Γ by λ_l^p·t^l·(l+1)(l+2)/(4πR²) and has squared L²
/// norm λ_l^{2p}(l+1)t^{2l}/(4πR²); the tail is summed as a geometric series
/// with the largest remaining term ratio. Works in logarithms so large
/// powers and ratios near 1 neither overflow nor underflow.
pub fn required_l_max(ratio: f64, power: u32) -> Option<usize> {
    if ratio == 0.0 {
        return Some(0);
    }
    if !(0.0..1.0).contains(&ratio) {
        return None;
    }
    let p = power as f64;
    let ln_t = ratio.ln();
    let ln_lambda = |l: usize| (((l + 1) * (l + 2)) as f64).ln();
    let mut ln_n2 = f64::NEG_INFINITY;
    for l in 0..10_000_000usize {
        let s = 2.0 * p * ln_lambda(l) + ((l + 1) as f64).ln() + 2.0 * l as f64 * ln_t;
        ln_n2 = log_add(ln_n2, s);
        let next = l + 1;
        let ln_a = p * ln_lambda(next) + next as f64 * ln_t + (((next + 1) * (next + 2)) as f64).ln();
        let rho = ratio * (((l + 4) as f64) / ((l + 2) as f64)).powf(p + 1.0);
        if rho < 1.0 && ln_a - (1.0 - rho).ln() <= TAIL_TOL.ln() + 0.5 * ln_n2 {
            return Some(l);
        }
    }
    None
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Resolves a policy into a concrete degree for |z|/R = `ratio`.
pub(crate) fn resolve_l_max(policy: LMaxPolicy, ratio: f64, power: u32) -> Result<usize> {
    let required = required_l_max(ratio, power).unwrap_or(usize::MAX);
    match policy {
        LMaxPolicy::Auto if required <= L_MAX_CAP => Ok(required),
        LMaxPolicy::Auto => Err(Error::InsufficientLMax {
            given: L_MAX_CAP,
            required,
            ratio,
        }),
        LMaxPolicy::Fixed(n) if n >= required => Ok(n),
        LMaxPolicy::Fixed(n) => Err(Error::InsufficientLMax {
            given: n,
            required,
            ratio,
        }),
    }
}

/// (−Δ_Γ)^power ∇ₓG(·, z) on `grid` by the truncated exterior-harmonic series.
pub fn gamma_kernel(grid: &SphereGrid, z: &Vec3, power: u32, policy: LMaxPolicy) -> Result<GammaKernel> {
    gamma_kernel_with(grid, z, power, policy, laplace_beltrami_eigenvalue)
}

/// Series kernel with a caller-supplied eigenvalue per degree. Only useful to
/// demonstrate that oracles detect a wrong spectrum.
pub fn gamma_kernel_with(
    grid: &SphereGrid,
    z: &Vec3,
    power: u32,
    policy: LMaxPolicy,
    eigenvalue: impl Fn(usize, f64) -> f64,
) -> Result<GammaKernel> {
    let radius = grid.radius();
    check_inside(z, radius)?;
    let rz = z.norm();
    let l_max = resolve_l_max(policy, rz / radius, power)?;
    let zhat = if rz > 0.0 { z / rz } else { Vec3::z() };
    let scale: Vec<f64> = (0..=l_max)
        .map(|l| eigenvalue(l, radius).powi(power as i32) / (4.0 * PI))
        .collect();

    let mut p = Vec::with_capacity(l_max + 1);
    let mut dp = Vec::with_capacity(l_max + 1);
    let values = grid
        .points()
        .iter()
        .map(|x| {
            let r = x.norm();
            let xhat = x / r;
            let u = xhat.dot(&zhat).clamp(-1.0, 1.0);
            legendre_with_derivatives(u, l_max, &mut p, &mut dp);
            let tangential = zhat - xhat * u;
            // |z|^l r^{-(l+2)}
            let mut radial = 1.0 / (r * r);
            let step = rz / r;
            let mut acc = Vec3::zeros();
            for l in 0..=l_max {
                let c = scale[l] * radial;
                acc += (xhat * (-((l + 1) as f64) * p[l]) + tangential * dp[l]) * c;
                radial *= step;
            }
            acc
        })
        .collect();

    Ok(GammaKernel {
        z: *z,
        power,
        radius,
        l_max: Some(l_max),
        values,
        grid_fingerprint: grid.fingerprint(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::grad_green;

    #[test]
    fn power_zero_is_the_gradient() {
        let grid = SphereGrid::fibonacci(1.5, 400).unwrap();
        let z = Vec3::new(0.3, -0.5, 0.6);
        let k = gamma_kernel(&grid, &z, 0, LMaxPolicy::Auto).unwrap();
        for (x, v) in grid.points().iter().zip(k.values()) {
            let g = grad_green(x, &z).unwrap();
            assert!((v - g).norm() <= 1e-12 * g.norm(), "{v} vs {g}");
        }
    }

    #[test]
    fn origin_keeps_only_degree_zero() {
        let grid = SphereGrid::fibonacci(2.0, 200).unwrap();
        let k = gamma_kernel(&grid, &Vec3::zeros(), 1, LMaxPolicy::Auto).unwrap();
        assert_eq!(k.l_max(), Some(0));
        for (x, v) in grid.points().iter().zip(k.values()) {
            let expect = -x * (2.0 / 4.0) / (4.0 * PI * 8.0);
            assert!((v - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn truncation_degree_grows_with_ratio_and_power() {
        let a = required_l_max(0.2, 0).unwrap();
        let b = required_l_max(0.6, 0).unwrap();
        let c = required_l_max(0.6, 4).unwrap();
        assert!(a < b && b < c, "{a} {b} {c}");
        assert!(required_l_max(2.0 / 3.0, 4).unwrap() <= L_MAX_CAP);
        assert!(required_l_max(0.99, 0).unwrap() > L_MAX_CAP);
    }

    #[test]
    fn insufficient_degree_reports_requirement() {
        let grid = SphereGrid::fibonacci(1.5, 200).unwrap();
        let z = Vec3::new(1.0, 0.0, 0.0);
        let err = gamma_kernel(&grid, &z, 2, LMaxPolicy::Fixed(10)).unwrap_err();
        match err {
            Error::InsufficientLMax { given, required, .. } => {
                assert_eq!(given, 10);
                assert_eq!(required, required_l_max(1.0 / 1.5, 2).unwrap());
            }
            other => panic!("unexpected {other}"),
        }
        assert!(gamma_kernel(&grid, &Vec3::new(1.5, 0.0, 0.0), 0, LMaxPolicy::Auto).is_err());
        assert!(gamma_kernel(&grid, &Vec3::new(1.48, 0.0, 0.0), 0, LMaxPolicy::Auto).is_err());
    }
}
