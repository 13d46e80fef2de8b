//! Closed-form reference values for kernels centred on the z axis direction.
//!
//! With z along e₁ and g = ∇ₓG(·, z), the second moments ∫_Γ g_i g_j are
//! diagonal; for the unfiltered kernel and for one application of −Δ_Γ the
//! diagonal entries and their traces are elementary functions of R and |z|.

use std::f64::consts::PI;

/// ∫_Γ |∇ₓG(·, z)|² = R²/(4π(R² − |z|²)²).
pub fn d0(radius: f64, rz: f64) -> f64 {
    let r2 = radius * radius;
    r2 / (4.0 * PI * (r2 - rz * rz).powi(2))
}

/// ∫_Γ |(−Δ_Γ)∇ₓG(·, z)|² = (R⁶ + 12R⁴|z|² + 15R²|z|⁴ + 2|z|⁶)/(π(R² − |z|²)⁶).
pub fn d2(radius: f64, rz: f64) -> f64 {
    let (r2, z2) = (radius * radius, rz * rz);
    (r2 * r2 * r2 + 12.0 * r2 * r2 * z2 + 15.0 * r2 * z2 * z2 + 2.0 * z2 * z2 * z2) / (PI * (r2 - z2).powi(6))
}

/// Domination term for filter order γ ∈ {0, 2}.
pub fn domination(gamma: u32, radius: f64, rz: f64) -> Option<f64> {
    match gamma {
        0 => Some(d0(radius, rz)),
        2 => Some(d2(radius, rz)),
        _ => None,
    }
}

/// [∫g₁², ∫g₂², ∫g₃²] for the unfiltered gradient, z on the e₁ axis.
pub fn gradient_moments(radius: f64, rz: f64) -> [f64; 3] {
    let (r, z) = (radius, rz);
    let q = r * r - z * z;
    let ln = (2.0 * z / (r - z)).ln_1p();
    let d1 = ln - 4.0 * r * z / q + 2.0 * r * z * (r * r + z * z) / (q * q);
    let d23 = -0.5 * ln + r * z * (r * r + z * z) / (q * q);
    let c = r / (32.0 * PI * z.powi(3));
    [c * d1, c * d23, c * d23]
}

/// [∫((−Δ_Γ)g₁)², ∫((−Δ_Γ)g₂)², ∫((−Δ_Γ)g₃)²], z on the e₁ axis.
pub fn filtered_moments(radius: f64, rz: f64) -> [f64; 3] {
    let (r, z) = (radius, rz);
    let (r2, z2) = (r * r, z * z);
    let q6 = (r2 - z2).powi(6);
    let ln = (2.0 * z / (r - z)).ln_1p();
    let p1 = r2.powi(5) - 91.0 * r2.powi(4) * z2 - 1318.0 * r2.powi(3) * z2 * z2 - 2086.0 * r2 * r2 * z2.powi(3)
        - 347.0 * r2 * z2.powi(4)
        + z2.powi(5);
    let d1 = ln - 2.0 * r * z * p1 / q6;
    let p2 = r2.powi(4) + 164.0 * r2.powi(3) * z2 + 1590.0 * r2 * r2 * z2 * z2 + 164.0 * r2 * z2.powi(3) + z2.powi(4);
    let d23 = -0.5 * ln + r * z * (r2 + z2) * p2 / q6;
    let c = 1.0 / (512.0 * PI * z.powi(3) * r.powi(3));
    [c * d1, c * d23, c * d23]
}

/// Numerator ⟨∇G(·,0)×α, ∇G(·,z)×β⟩_γ divided by α·conj(β); independent of z.
pub fn numerator_constant(gamma: u32, radius: f64) -> Option<f64> {
    match gamma {
        0 => Some(1.0 / (6.0 * PI * radius * radius)),
        2 => Some(2.0 / (3.0 * PI * radius.powi(6))),
        _ => None,
    }
}

/// ∫_Γ |x − z|⁻² dx = (2πR/|z|)·ln((R+|z|)/(R−|z|)).
pub fn inverse_square_integral(radius: f64, rz: f64) -> f64 {
    if rz == 0.0 {
        return 4.0 * PI;
    }
    2.0 * PI * radius / rz * (2.0 * rz / (radius - rz)).ln_1p()
}

/// Normalized D₀^{−1/2} and D₂^{−1/2} on `n` equispaced radii in [0, R),
/// each divided by its value at z = 0.
pub fn growth_curves(radius: f64, n: usize) -> Vec<(f64, f64, f64)> {
    (0..n)
        .map(|i| {
            let rz = radius * i as f64 / n as f64;
            let a = (d0(radius, 0.0) / d0(radius, rz)).sqrt();
            let b = (d2(radius, 0.0) / d2(radius, rz)).sqrt();
            (rz, a, b)
        })
        .collect()
}
