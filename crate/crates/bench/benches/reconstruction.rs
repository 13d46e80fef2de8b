use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use mitdsm_core::geometry::{AxisBox, ConductorRegion};
use mitdsm_core::recon::reconstruct_perturbation;
use mitdsm_core::{DsmParams, ForwardOptions, SamplingLattice, SceneConfig, Section, Simulation, SphereGrid, Vec3};

fn cube(c: Vec3) -> ConductorRegion {
    ConductorRegion::single(AxisBox::cube(c, 0.2).unwrap(), 1.0).unwrap()
}

fn reconstruction(c: &mut Criterion) {
    let scene = SceneConfig::reference(vec![cube(Vec3::new(0.4, 0.4, 0.0)), cube(Vec3::new(-0.4, -0.4, 0.0))]).unwrap();
    let grid = SphereGrid::fibonacci(scene.radius, 2000).unwrap();
    let mut g = c.benchmark_group("pipeline");
    g.sample_size(10);
    g.bench_function("born_forward_20_coils", |b| {
        b.iter(|| Simulation::run(black_box(&scene), &grid, &ForwardOptions::default()).unwrap())
    });
    let hs = Simulation::run(&scene, &grid, &ForwardOptions::default()).unwrap().scattered;
    let lattice = SamplingLattice::section(1.0, 0.05, Section::z(0.0)).unwrap();
    g.bench_function("dsm_section_20_coils", |b| {
        b.iter(|| reconstruct_perturbation(black_box(&hs), &grid, &lattice, &DsmParams::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, reconstruction);
criterion_main!(benches);
