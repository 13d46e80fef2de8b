use std::f64::consts::PI;

use nalgebra::Rotation3;

use super::{fingerprint_f64, gauss_legendre, Frame, Vec3};
use crate::error::{Error, Result};

/// How the points of a [`SphereGrid`] were laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridScheme {
    /// Golden-angle spiral with equal weights. Default receiver layout.
    Fibonacci,
    /// Gauss–Legendre in cos θ times uniform φ.
    GaussProduct,
    /// Product grid whose θ panels are refined geometrically toward a focus axis.
    Graded,
    /// Read from a measurement file.
    Imported,
}

/// Quadrature rule on the measurement sphere Γ = ∂B_R.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    radius: f64,
    points: Vec<Vec3>,
    weights: Vec<f64>,
    scheme: GridScheme,
    fingerprint: u64,
}

impl SphereGrid {
    /// `m` quasi-uniform points with equal weights 4πR²/m.
    pub fn fibonacci(radius: f64, m: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid(format!("sphere radius must be positive, got {radius}")));
        }
        if m < 100 {
            return Err(Error::invalid(format!("Fibonacci grid needs at least 100 points, got {m}")));
        }
        let golden_angle = PI * (3.0 - 5f64.sqrt());
        let points = (0..m)
            .map(|i| {
                let zc = 1.0 - (2.0 * i as f64 + 1.0) / m as f64;
                let rho = (1.0 - zc * zc).sqrt();
                let theta = golden_angle * i as f64;
                Vec3::new(rho * theta.cos(), rho * theta.sin(), zc) * radius
            })
            .collect();
        let w = 4.0 * PI * radius * radius / m as f64;
        Ok(Self::assemble(radius, points, vec![w; m], GridScheme::Fibonacci))
    }

    /// Gauss–Legendre product grid with `band_limit` nodes in cos θ and
    /// 2·`band_limit` uniform nodes in φ; exact for spherical polynomials of
    /// degree ≤ 2·band_limit − 1.
    pub fn gauss_product(radius: f64, band_limit: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid(format!("sphere radius must be positive, got {radius}")));
        }
        if band_limit < 4 {
            return Err(Error::invalid(format!("band limit must be at least 4, got {band_limit}")));
        }
        let (u, wu) = gauss_legendre(band_limit);
        let n_phi = 2 * band_limit;
        let dphi = 2.0 * PI / n_phi as f64;
        let mut points = Vec::with_capacity(band_limit * n_phi);
        let mut weights = Vec::with_capacity(band_limit * n_phi);
        for (ct, wt) in u.iter().zip(&wu) {
            let st = (1.0 - ct * ct).sqrt();
            for j in 0..n_phi {
                let phi = j as f64 * dphi;
                points.push(Vec3::new(st * phi.cos(), st * phi.sin(), *ct) * radius);
                weights.push(wt * dphi * radius * radius);
            }
        }
        Ok(Self::assemble(radius, points, weights, GridScheme::GaussProduct))
    }

    /// Product grid around `axis` whose polar panels shrink geometrically
    /// toward the axis, starting from width `focus_width` (radians). Resolves
    /// fields concentrated near the point R·axis.
    pub fn graded(
        radius: f64,
        axis: &Vec3,
        focus_width: f64,
        nodes_per_panel: usize,
        n_phi: usize,
    ) -> Result<Self> {
        if !(radius > 0.0) || !(focus_width > 0.0) || nodes_per_panel == 0 || n_phi < 4 {
            return Err(Error::invalid("graded grid needs positive radius and focus width, panels and ≥ 4 azimuths"));
        }
        let norm = axis.norm();
        if !(norm > 0.0) {
            return Err(Error::invalid("graded grid axis must be non-zero"));
        }
        let frame = Frame::from_axis(&(axis / norm));
        let mut breaks = vec![0.0];
        let mut w = focus_width.min(0.1);
        while breaks.last().copied().unwrap_or(0.0) + w < PI / 2.0 {
            let last = *breaks.last().unwrap();
            breaks.push(last + w);
            w = (2.0 * w).min(0.15);
        }
        let start = *breaks.last().unwrap();
        let n_tail = ((PI - start) / 0.15).ceil() as usize;
        for k in 1..=n_tail {
            breaks.push(start + (PI - start) * k as f64 / n_tail as f64);
        }
        let (gx, gw) = gauss_legendre(nodes_per_panel);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for panel in breaks.windows(2) {
            let (a, b) = (panel[0], panel[1]);
            let half = 0.5 * (b - a);
            for (x, wx) in gx.iter().zip(&gw) {
                let theta = a + half * (x + 1.0);
                let (st, ct) = theta.sin_cos();
                for j in 0..n_phi {
                    let phi = (j as f64 + 0.5) * dphi;
                    let local = Vec3::new(ct, st * phi.cos(), st * phi.sin());
                    points.push(frame.to_global(&local) * radius);
                    weights.push(wx * half * st * dphi * radius * radius);
                }
            }
        }
        Ok(Self::assemble(radius, points, weights, GridScheme::Graded))
    }

    /// Wraps externally supplied samples, checking they lie on the sphere.
    pub fn from_samples(radius: f64, points: Vec<Vec3>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::GridMismatch(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if !(radius > 0.0) {
            return Err(Error::invalid(format!("sphere radius must be positive, got {radius}")));
        }
        for (i, p) in points.iter().enumerate() {
            if ((p.norm() - radius) / radius).abs() > 1e-9 {
                return Err(Error::GridMismatch(format!(
                    "point {i} has |p| = {} but R = {radius}",
                    p.norm()
                )));
            }
        }
        Ok(Self::assemble(radius, points, weights, GridScheme::Imported))
    }

    fn assemble(radius: f64, points: Vec<Vec3>, weights: Vec<f64>, scheme: GridScheme) -> Self {
        let fingerprint = fingerprint_f64(points.iter().flat_map(|p| p.iter()));
        Self {
            radius,
            points,
            weights,
            scheme,
            fingerprint,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }

    /// Identity of the point set. Weights are deliberately excluded so a
    /// reweighted copy stays compatible with kernels built on the original.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Stable content hash over radius, points and weights (cache keys).
    pub fn content_hash(&self) -> [u8; 32] {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(self.radius.to_le_bytes());
        for p in &self.points {
            for c in p.iter() {
                h.update(c.to_le_bytes());
            }
        }
        for w in &self.weights {
            h.update(w.to_le_bytes());
        }
        h.finalize().into()
    }

    /// Σ_q w_q f(x_q).
    pub fn integrate(&self, mut f: impl FnMut(&Vec3) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }

    /// Same points, weights multiplied by `c`.
    pub fn with_scaled_weights(&self, c: f64) -> Self {
        let mut g = self.clone();
        g.weights.iter_mut().for_each(|w| *w *= c);
        g
    }

    pub fn rotated(&self, rot: &Rotation3<f64>) -> Self {
        let points = self.points.iter().map(|p| rot * p).collect();
        Self::assemble(self.radius, points, self.weights.clone(), self.scheme)
    }

    /// Checks Σw = 4πR² (1e-10 rel.) and |p| = R (1e-12 rel.).
    pub fn validate(&self) -> Result<()> {
        let area = 4.0 * PI * self.radius * self.radius;
        let total: f64 = self.weights.iter().sum();
        if ((total - area) / area).abs() > 1e-10 {
            return Err(Error::invalid(format!("weights sum to {total}, expected {area}")));
        }
        for (i, p) in self.points.iter().enumerate() {
            if ((p.norm() - self.radius) / self.radius).abs() > 1e-12 {
                return Err(Error::invalid(format!("point {i} is off the sphere: |p| = {}", p.norm())));
            }
        }
        Ok(())
    }
}
