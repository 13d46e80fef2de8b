pub mod closed_form;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod io_util;
pub mod kernels;
pub mod products;
pub mod validate;
pub mod recon;

pub use error::{Error, Result};
pub use forward::{apply_noise, ForwardOptions, MeasurementSet, Simulation};
pub use geometry::{CVec3, SamplingLattice, SceneConfig, Section, SphereGrid, Vec3};
pub use kernels::{GammaKernel, KernelBank, KernelMethod, UnitComplexVec};
pub use recon::{reconstruct, DsmParams, IndexField, LatticeSpec};
