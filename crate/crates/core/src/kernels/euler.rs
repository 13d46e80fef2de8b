use std::f64::consts::PI;

use super::{check_inside, GammaKernel};
use crate::error::Result;
use crate::geometry::{SphereGrid, Vec3};

/// Closed-form evaluator of (−Δ_Γ)^p ∇ₓG(x, z) on |x| = R.
///
/// With D = x·∇ and φ(ε) = ∇G((1+ε)x, z) = Σ c_j ε^j, the filtered kernel is
/// R^{−2p}·Σ_j b_j c_j where b_j = j!·Σ_k a_k S(k, j), a_k the coefficients
/// of [D(D+1)]^p = D^p (D+1)^p and S the Stirling numbers of the second kind.
/// The Taylor coefficients of |(1+ε)x − z|^{−3} follow a three-term
/// recurrence, so the result is a combination A·(x − z) + B·x.
#[derive(Debug, Clone)]
pub struct EulerJet {
    power: u32,
    b: Vec<f64>,
}

impl EulerJet {
    pub fn new(power: u32) -> Self {
        let p = power as usize;
        let order = 2 * p;
        // Stirling numbers of the second kind up to `order`.
        let mut s2 = vec![vec![0.0f64; order + 1]; order + 1];
        s2[0][0] = 1.0;
        for k in 1..=order {
            for j in 1..=k {
                s2[k][j] = j as f64 * s2[k - 1][j] + s2[k - 1][j - 1];
            }
        }
        let binom = |n: usize, m: usize| -> f64 { (0..m).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64) };
        let mut b = vec![0.0; order + 1];
        let mut fact = 1.0;
        for (j, bj) in b.iter_mut().enumerate() {
            if j > 0 {
                fact *= j as f64;
            }
            let sum: f64 = (0..=p).map(|m| binom(p, m) * s2[p + m][j]).sum();
            *bj = fact * sum;
        }
        EulerJet { power, b }
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    /// Coefficients (A, B) with kernel = A·(x − z) + B·x, for sphere radius R.
    #[inline]
    pub fn coefficients(&self, x: &Vec3, z: &Vec3, radius: f64) -> (f64, f64) {
        let d = x - z;
        let a = d.norm_squared();
        let bq = 2.0 * x.dot(&d);
        let c = x.norm_squared();
        let alpha = -1.5;
        let inv_a = 1.0 / a;
        let mut f_prev = 0.0;
        let mut f = inv_a * inv_a.sqrt();
        let mut sa = self.b[0] * f;
        let mut sb = 0.0;
        for n in 0..self.b.len() - 1 {
            let nf = n as f64;
            let next = ((alpha - nf) * bq * f + (2.0 * alpha - nf + 1.0) * c * f_prev) * inv_a / (nf + 1.0);
            sb += self.b[n + 1] * f;
            sa += self.b[n + 1] * next;
            f_prev = f;
            f = next;
        }
        let scale = -radius.powi(-2 * self.power as i32) / (4.0 * PI);
        (scale * sa, scale * sb)
    }

    #[inline]
    pub fn eval(&self, x: &Vec3, z: &Vec3, radius: f64) -> Vec3 {
        let (a, b) = self.coefficients(x, z, radius);
        (x - z) * a + x * b
    }
}

/// (−Δ_Γ)^power ∇ₓG(·, z) on `grid` in closed form.
pub fn euler_kernel(grid: &SphereGrid, z: &Vec3, power: u32) -> Result<GammaKernel> {
    let radius = grid.radius();
    check_inside(z, radius)?;
    let jet = EulerJet::new(power);
    let values = grid.points().iter().map(|x| jet.eval(x, z, radius)).collect();
    Ok(GammaKernel {
        z: *z,
        power,
        radius,
        l_max: None,
        values,
        grid_fingerprint: grid.fingerprint(),
    })
}
