//! Geometric ground truth: measurement sphere discretizations, drive coils,
//! conductor regions, the sampling lattice and the scene that ties them together.

mod coil;
mod conductor;
mod lattice;
mod quadrature;
mod scene;
mod sphere;

pub use coil::{dodecahedron_vertices, place_dodecahedron_coils, Coil, CoilQuadrature, CurrentNode, Frame};
pub use conductor::{conductor_quadrature, AxisBox, ConductorRegion, VolumeNode};
pub use lattice::{SamplingLattice, Section};
pub use quadrature::gauss_legendre;
pub use scene::{CoilSetSpec, SceneConfig};
pub use sphere::{GridScheme, SphereGrid};

use nalgebra::Vector3;
use num_complex::Complex64;

pub type Vec3 = Vector3<f64>;
pub type CVec3 = Vector3<Complex64>;

pub(crate) fn fingerprint_f64<'a>(values: impl IntoIterator<Item = &'a f64>) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    for v in values {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Embeds a real vector into complex 3-space.
pub fn complexify(v: &Vec3) -> CVec3 {
    v.map(|c| Complex64::new(c, 0.0))
}
