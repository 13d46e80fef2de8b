use std::f64::consts::PI;

use nalgebra::{Rotation3, Unit};
use proptest::prelude::*;

use mitdsm_core::kernels::{gamma_kernel, grad_green, green, LMaxPolicy};
use mitdsm_core::{GammaKernel, KernelMethod, SphereGrid, Vec3};

const R: f64 = 1.5;

fn point_grid(points: Vec<Vec3>) -> SphereGrid {
    let n = points.len();
    SphereGrid::from_samples(R, points, vec![1.0; n]).unwrap()
}

fn series() -> KernelMethod {
    KernelMethod::Series(LMaxPolicy::Auto)
}

fn vec_in_ball(max: f64) -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("inside unit ball", |(a, b, c)| a * a + b * b + c * c <= 1.0)
        .prop_map(move |(a, b, c)| Vec3::new(a, b, c) * max)
}

fn unit_vec() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("usable direction", |(a, b, c)| {
            let n = a * a + b * b + c * c;
            n > 0.01 && n <= 1.0
        })
        .prop_map(|(a, b, c)| Vec3::new(a, b, c).normalize())
}

#[test]
fn green_function_at_hand_computed_points() {
    let o = Vec3::zeros();
    assert!((green(&o, &Vec3::new(0.0, 0.0, 2.0)).unwrap() - 1.0 / (8.0 * PI)).abs() < 1e-17);
    // |(1,2,2)| = 3
    let x = Vec3::new(1.0, 2.0, 2.0);
    assert!((green(&x, &o).unwrap() - 1.0 / (12.0 * PI)).abs() < 1e-17);
    let g = grad_green(&x, &o).unwrap();
    let want = -x / (4.0 * PI * 27.0);
    assert!((g - want).norm() < 1e-17);
    assert!(green(&x, &x).is_err());
    assert!(grad_green(&x, &x).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_matches_central_differences(x in vec_in_ball(2.0), y in vec_in_ball(2.0)) {
        prop_assume!((x - y).norm() > 0.3);
        let h = 1e-5;
        let g = grad_green(&x, &y).unwrap();
        for d in 0..3 {
            let mut e = Vec3::zeros();
            e[d] = h;
            let fd = (green(&(x + e), &y).unwrap() - green(&(x - e), &y).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[d]).abs() <= 1e-6 * g.norm());
        }
    }

    #[test]
    fn power_zero_kernel_is_the_gradient(z in vec_in_ball(0.9 * R), x in unit_vec()) {
        let grid = point_grid(vec![x * R]);
        let g = grad_green(&(x * R), &z).unwrap();
        for method in [KernelMethod::Euler, series()] {
            let k = GammaKernel::build(&grid, &z, 0, method).unwrap();
            let err = (k.values()[0] - g).norm() / g.norm();
            let tol = if method == KernelMethod::Euler { 1e-13 } else { 1e-10 };
            prop_assert!(err <= tol, "{:?}: {}", method, err);
        }
    }

    #[test]
    fn routes_agree_for_higher_powers(z in vec_in_ball(0.7 * R), power in 1u32..=4) {
        let grid = SphereGrid::gauss_product(R, 12).unwrap();
        let a = GammaKernel::build(&grid, &z, power, KernelMethod::Euler).unwrap();
        let b = GammaKernel::build(&grid, &z, power, series()).unwrap();
        let e = a.max_rel_diff(&b);
        prop_assert!(e <= 1e-9, "{}", e);
    }

    #[test]
    fn kernels_are_rotation_equivariant(
        z in vec_in_ball(0.8 * R),
        x in unit_vec(),
        axis in unit_vec(),
        angle in 0.0..(2.0 * PI),
        power in 0u32..=3,
    ) {
        let q = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle);
        let a = GammaKernel::build(&point_grid(vec![x * R]), &z, power, KernelMethod::Euler).unwrap();
        let b = GammaKernel::build(&point_grid(vec![q * (x * R)]), &(q * z), power, KernelMethod::Euler).unwrap();
        let want = q * a.values()[0];
        prop_assert!((b.values()[0] - want).norm() <= 1e-11 * want.norm());
    }
}

/// (−Δ_Γ)f at x(θ₀, φ₀) in a frame (e₁, e₂, e₃) by fourth-order differences
/// of the spherical-coordinate formula
/// Δ_Γ f = R⁻²(f_θθ + cot θ f_θ + f_φφ / sin²θ).
fn minus_lb_spherical(f: impl Fn(&Vec3) -> Vec3, frame: &Rotation3<f64>, theta: f64, phi: f64, h: f64) -> Vec3 {
    let at = |t: f64, p: f64| f(&(frame * Vec3::new(t.sin() * p.cos(), t.sin() * p.sin(), t.cos()) * R));
    let d2 = |fm2: Vec3, fm1: Vec3, f0: Vec3, fp1: Vec3, fp2: Vec3| (-fp2 + fp1 * 16.0 - f0 * 30.0 + fm1 * 16.0 - fm2) / (12.0 * h * h);
    let d1 = |fm2: Vec3, fm1: Vec3, fp1: Vec3, fp2: Vec3| (-fp2 + fp1 * 8.0 - fm1 * 8.0 + fm2) / (12.0 * h);
    let f0 = at(theta, phi);
    let t: Vec<Vec3> = [-2.0, -1.0, 1.0, 2.0].iter().map(|k| at(theta + k * h, phi)).collect();
    let p: Vec<Vec3> = [-2.0, -1.0, 1.0, 2.0].iter().map(|k| at(theta, phi + k * h)).collect();
    let f_tt = d2(t[0], t[1], f0, t[2], t[3]);
    let f_t = d1(t[0], t[1], t[2], t[3]);
    let f_pp = d2(p[0], p[1], f0, p[2], p[3]);
    -(f_tt + f_t / theta.tan() + f_pp / theta.sin().powi(2)) / (R * R)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn power_one_matches_spherical_finite_differences(
        z in vec_in_ball(0.8 * R),
        axis in unit_vec(),
        angle in 0.0..(2.0 * PI),
        theta in 0.5..2.6f64,
        phi in 0.0..(2.0 * PI),
    ) {
        let frame = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle);
        let x = frame * Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()) * R;
        let fd = minus_lb_spherical(|p| grad_green(p, &z).unwrap(), &frame, theta, phi, 3e-3);
        let grid = point_grid(vec![x]);
        let floor = 1e-3 * grad_green(&x, &z).unwrap().norm() / (R * R);
        for method in [KernelMethod::Euler, series()] {
            let k = GammaKernel::build(&grid, &z, 1, method).unwrap().values()[0];
            let err = (k - fd).norm() / k.norm().max(floor);
            prop_assert!(err <= 1e-5, "{:?}: {}", method, err);
        }
    }

    #[test]
    fn doubling_the_truncation_degree_changes_nothing(z in vec_in_ball(0.75 * R)) {
        // Relative to the largest kernel value on Γ, which is what the
        // truncation rule controls.
        let grid = SphereGrid::gauss_product(R, 24).unwrap();
        let base = gamma_kernel(&grid, &z, 4, LMaxPolicy::Auto).unwrap();
        let l = base.l_max().unwrap();
        let doubled = gamma_kernel(&grid, &z, 4, LMaxPolicy::Fixed(2 * l)).unwrap();
        let scale = doubled.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        let diff = base.values().iter().zip(doubled.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(diff <= 1e-10 * scale, "{}", diff / scale);
    }
}

fn relative_mean(grid: &SphereGrid, z: &Vec3, power: u32) -> f64 {
    let k = GammaKernel::build(grid, z, power, KernelMethod::Euler).unwrap();
    let mut mean = Vec3::zeros();
    let mut abs = 0.0;
    for (v, w) in k.values().iter().zip(grid.weights()) {
        mean += v * *w;
        abs += v.norm() * w;
    }
    mean.norm() / abs
}

#[test]
fn kernels_integrate_to_zero_over_the_sphere() {
    let coarse = SphereGrid::gauss_product(R, 64).unwrap();
    let fine = SphereGrid::gauss_product(R, 128).unwrap();
    let dir = Vec3::new(0.2, -0.5, 0.6).normalize();
    for power in 0..=2 {
        for t in [0.0, 0.3, 0.6] {
            let e = relative_mean(&coarse, &(dir * t * R), power);
            assert!(e <= 1e-10, "t={t} power={power}: {e}");
        }
        // Close to Γ the kernels sharpen and the residual is quadrature
        // error, which must shrink under refinement.
        let z = dir * 0.9 * R;
        let (ec, ef) = (relative_mean(&coarse, &z, power), relative_mean(&fine, &z, power));
        assert!(ef <= 1e-2 * ec && ef <= 1e-6, "power={power}: {ec} -> {ef}");
    }
}

#[test]
fn filter_is_self_adjoint_on_a_gauss_grid() {
    // ∫ g_i (−Δ_Γ) g_j = ∫ ((−Δ_Γ) g_i) g_j for kernels of two different points.
    let grid = SphereGrid::gauss_product(R, 48).unwrap();
    let (z1, z2) = (Vec3::new(0.3, 0.1, -0.2), Vec3::new(-0.4, 0.5, 0.1));
    let g1 = GammaKernel::build(&grid, &z1, 0, KernelMethod::Euler).unwrap();
    let f2 = GammaKernel::build(&grid, &z2, 1, KernelMethod::Euler).unwrap();
    let f1 = GammaKernel::build(&grid, &z1, 1, KernelMethod::Euler).unwrap();
    let g2 = GammaKernel::build(&grid, &z2, 0, KernelMethod::Euler).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let mut a = 0.0;
            let mut b = 0.0;
            let mut s = 0.0;
            for q in 0..grid.len() {
                let w = grid.weights()[q];
                a += w * g1.values()[q][i] * f2.values()[q][j];
                b += w * f1.values()[q][i] * g2.values()[q][j];
                s += w * (g1.values()[q][i] * f2.values()[q][j]).abs();
            }
            assert!((a - b).abs() <= 1e-10 * s, "({i},{j}): {a} vs {b}");
        }
    }
}
