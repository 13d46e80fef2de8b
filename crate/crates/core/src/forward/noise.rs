use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{MeasurementSet, NoiseInfo};
use crate::error::{Error, Result};
use crate::geometry::CVec3;

/// Multiplies every Cartesian component of every sample by (1 + ε δ) with
/// δ = N(0,1) + i N(0,1), drawn independently per coil, receiver and component.
///
/// Coil k uses ChaCha stream k of the master seed and draws in receiver order
/// (x, y, z components, real part first), so the result is bitwise
/// reproducible and independent of the thread count.
pub fn apply_noise(ms: &MeasurementSet, epsilon: f64, seed: u64) -> Result<MeasurementSet> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid(format!("noise level must be non-negative, got {epsilon}")));
    }
    if epsilon == 0.0 {
        return Ok(ms.clone());
    }
    let coils: Vec<Vec<CVec3>> = ms
        .coils()
        .par_iter()
        .enumerate()
        .map(|(k, field)| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            field
                .iter()
                .map(|v| {
                    v.map(|c| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        c * (Complex64::new(1.0, 0.0) + Complex64::new(re, im) * epsilon)
                    })
                })
                .collect()
        })
        .collect();
    Ok(MeasurementSet::new(ms.grid().clone(), coils)?.with_noise(Some(NoiseInfo { epsilon, seed })))
}
