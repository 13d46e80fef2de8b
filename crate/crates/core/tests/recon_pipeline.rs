use std::collections::{HashSet, VecDeque};

use num_complex::Complex64;

use mitdsm_core::geometry::{AxisBox, ConductorRegion};
use mitdsm_core::kernels::{cross_rc, grad_green};
use mitdsm_core::recon::{indicator_fields, reconstruct_perturbation, scale_fields};
use mitdsm_core::{
    CVec3, DsmParams, ForwardOptions, IndexField, KernelMethod, SamplingLattice, SceneConfig, Section, Simulation, SphereGrid,
    UnitComplexVec, Vec3,
};

const R: f64 = 1.5;

fn cube(c: [f64; 3], edge: f64) -> ConductorRegion {
    ConductorRegion::single(AxisBox::cube(Vec3::from(c), edge).unwrap(), 1.0).unwrap()
}

fn example_one() -> SceneConfig {
    SceneConfig::reference(vec![cube([0.40, 0.41, 0.0], 0.2), cube([-0.40, -0.40, 0.0], 0.2)]).unwrap()
}

fn born(scene: &SceneConfig, grid: &SphereGrid) -> Vec<Vec<CVec3>> {
    Simulation::run(scene, grid, &ForwardOptions::default()).unwrap().scattered
}

fn params(gamma: u32, power: u32) -> DsmParams {
    DsmParams {
        gamma,
        power,
        ..DsmParams::default()
    }
}

fn argmax_point(f: &IndexField) -> Vec3 {
    f.lattice.points()[f.argmax()]
}

#[test]
fn dipole_data_peaks_at_the_source() {
    // At |z| = 1 the γ = 4 kernel carries degrees up to about 100; a Gauss
    // grid integrates its product with the smooth data exactly.
    let grid = SphereGrid::gauss_product(R, 64).unwrap();
    let lattice = SamplingLattice::ball(1.0, 0.1).unwrap();
    let y = Vec3::new(0.3, -0.2, 0.4);
    let alpha = UnitComplexVec::new(CVec3::new(
        Complex64::new(0.6, 0.2),
        Complex64::new(0.0, -0.5),
        Complex64::new(0.4, 0.1),
    ))
    .unwrap();
    let hs = vec![grid
        .points()
        .iter()
        .map(|x| cross_rc(&grad_green(x, &y).unwrap(), alpha.as_vec()))
        .collect::<Vec<_>>()];
    for gamma in [0, 2, 4] {
        let f = reconstruct_perturbation(&hs, &grid, &lattice, &params(gamma, 1)).unwrap();
        assert!((argmax_point(&f) - y).norm() < 1e-9, "γ={gamma}: {:?}", argmax_point(&f));
        assert_eq!(f.fused.iter().copied().fold(0.0, f64::max), 1.0);
        assert!(f.fused.iter().chain(f.per_coil.iter().flatten()).all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn single_coil_locates_a_small_cube() {
    let c0 = Vec3::new(-0.3, 0.25, 0.35);
    let scene = SceneConfig::reference(vec![cube([c0.x, c0.y, c0.z], 0.1)]).unwrap();
    let grid = SphereGrid::fibonacci(R, 4000).unwrap();
    let hs = born(&scene, &grid);
    let lattice = SamplingLattice::ball(1.0, 0.1).unwrap();
    for k in [0, 7, 13] {
        let f = reconstruct_perturbation(&hs[k..k + 1], &grid, &lattice, &params(4, 4)).unwrap();
        let d = (argmax_point(&f) - c0).norm();
        assert!(d <= 0.1 + 0.15, "coil {k}: peak {:?} is {d} from the cube", argmax_point(&f));
    }
}

#[test]
fn index_is_invariant_under_complex_scaling_and_duplication() {
    let grid = SphereGrid::fibonacci(R, 1500).unwrap();
    let hs = born(&example_one(), &grid);
    let lattice = SamplingLattice::ball(1.0, 0.1).unwrap();
    let p = params(4, 4);
    let base = reconstruct_perturbation(&hs, &grid, &lattice, &p).unwrap();
    for c in [Complex64::new(3.7, 0.0), Complex64::new(-0.2, 5e-3), Complex64::new(0.0, 1e6)] {
        let f = reconstruct_perturbation(&scale_fields(&hs, c), &grid, &lattice, &p).unwrap();
        assert_eq!(f.argmax(), base.argmax());
        for (a, b) in f.fused_power.iter().zip(&base.fused_power) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
    let one = reconstruct_perturbation(&hs[..1], &grid, &lattice, &p).unwrap();
    let copies = vec![hs[0].clone(); 4];
    let many = reconstruct_perturbation(&copies, &grid, &lattice, &p).unwrap();
    for (a, b) in many.fused.iter().zip(&one.per_coil[0]) {
        assert!((a - b).abs() <= 1e-15);
    }
}

/// Cells of the connected region around the argmax where the value is at
/// least half the maximum.
fn half_max_region(f: &IndexField) -> usize {
    let map = f.lattice.index_map();
    let start = f.argmax();
    let half = 0.5 * f.fused[start];
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        for j in f.lattice.neighbors(i, &map) {
            if f.fused[j] >= half && seen.insert(j) {
                queue.push_back(j);
            }
        }
    }
    seen.len()
}

#[test]
fn gamma_zero_is_blurrier_than_gamma_four() {
    let grid = SphereGrid::fibonacci(R, 4000).unwrap();
    let hs = born(&example_one(), &grid);
    let lattice = SamplingLattice::section(1.0, 0.05, Section::z(0.0)).unwrap();
    let g0 = reconstruct_perturbation(&hs, &grid, &lattice, &params(0, 1)).unwrap();
    let g4 = reconstruct_perturbation(&hs, &grid, &lattice, &params(4, 1)).unwrap();
    let (a0, a4) = (half_max_region(&g0), half_max_region(&g4));
    assert!(a4 < a0, "half-max cells: γ=0 {a0}, γ=4 {a4}");
}

#[test]
fn indicator_decays_toward_the_measurement_sphere() {
    // Shells at |z|/R = 0.6, 0.75, 0.9, more than 0.3 from the conductors.
    // Inside |z| ≈ 2R/3 the shell maxima are not monotone, and beyond 0.9R
    // the γ = 4 kernel outgrows any affordable quadrature.
    let scene = example_one();
    let grid = SphereGrid::gauss_product(R, 180).unwrap();
    let mut hs = born(&scene, &grid);
    hs.truncate(4);
    let dirs = SphereGrid::fibonacci(1.0, 400).unwrap();
    let mut shells = Vec::new();
    for t in [0.6, 0.75, 0.9] {
        let pts: Vec<Vec3> = dirs
            .points()
            .iter()
            .map(|d| d * t * R)
            .filter(|p| scene.conductor_distance(p) > 0.3)
            .collect();
        shells.push(pts);
    }
    let sizes: Vec<usize> = shells.iter().map(Vec::len).collect();
    let lattice = SamplingLattice::from_points(shells.concat()).unwrap();
    let refs: Vec<&[Vec<CVec3>]> = vec![&hs];
    let raw = indicator_fields(&refs, &grid, &lattice, 4, KernelMethod::Euler).unwrap().raw.remove(0);
    for (k, j) in raw.iter().enumerate() {
        let mut rest = j.as_slice();
        let mut maxima = Vec::new();
        for n in &sizes {
            let (head, tail) = rest.split_at(*n);
            maxima.push(head.iter().copied().fold(0.0, f64::max));
            rest = tail;
        }
        assert!(maxima.windows(2).all(|w| w[1] < w[0]), "coil {k}: shell maxima {maxima:?}");
    }
}

#[test]
fn reconstruction_is_bitwise_independent_of_thread_count() {
    let grid = SphereGrid::fibonacci(R, 800).unwrap();
    let hs = born(&example_one(), &grid);
    let lattice = SamplingLattice::ball(1.0, 0.1).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| reconstruct_perturbation(&hs, &grid, &lattice, &params(4, 4)).unwrap())
    };
    let a = run(1);
    let b = run(5);
    assert_eq!(a.per_coil, b.per_coil);
    assert_eq!(a.fused_power, b.fused_power);
}

#[test]
fn reconstruct_checks_scene_consistency() {
    let scene = example_one();
    let grid = SphereGrid::fibonacci(R, 300).unwrap();
    let sim = Simulation::run(&scene, &grid, &ForwardOptions::default()).unwrap();
    let ms = sim.measurements(&grid).unwrap();
    let p = DsmParams {
        lattice: mitdsm_core::LatticeSpec { pitch: 0.25, section: None },
        ..DsmParams::default()
    };
    assert!(mitdsm_core::reconstruct(&ms, &scene, &p).is_ok());
    assert!(mitdsm_core::reconstruct(&ms.select(&[0, 1, 2]), &scene, &p).is_err());
    let other = SphereGrid::fibonacci(1.6, 300).unwrap();
    let ms2 = mitdsm_core::MeasurementSet::new(other, ms.coils().to_vec()).unwrap();
    assert!(mitdsm_core::reconstruct(&ms2, &scene, &p).is_err());
    let odd = DsmParams { gamma: 3, ..p };
    assert!(mitdsm_core::reconstruct(&ms, &scene, &odd).is_err());
    let no_signal = mitdsm_core::MeasurementSet::new(grid.clone(), sim.background_h()).unwrap();
    assert!(matches!(
        mitdsm_core::reconstruct(&no_signal, &scene, &p),
        Err(mitdsm_core::Error::DegenerateMeasurement(_))
    ));
}
