use std::f64::consts::PI;

use super::Vec3;
use crate::error::{Error, Result};

/// Right-handed orthonormal triple (x′, y′, z′).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub x: Vec3,
    pub y: Vec3,
    pub z: Vec3,
}

impl Frame {
    /// Completes a unit vector `x′` to a frame: `y′ = normalize(e_a × x′)`
    /// with `e_a` the basis vector least aligned with `x′` (lowest index on
    /// ties) and `z′ = x′ × y′`.
    pub fn from_axis(axis: &Vec3) -> Self {
        let x = axis.normalize();
        let mut a = 0;
        for i in 1..3 {
            if x[i].abs() < x[a].abs() {
                a = i;
            }
        }
        let e = Vec3::ith(a, 1.0);
        let y = e.cross(&x).normalize();
        let z = x.cross(&y);
        Frame { x, y, z }
    }

    pub fn to_local(&self, v: &Vec3) -> Vec3 {
        Vec3::new(v.dot(&self.x), v.dot(&self.y), v.dot(&self.z))
    }

    pub fn to_global(&self, v: &Vec3) -> Vec3 {
        self.x * v.x + self.y * v.y + self.z * v.z
    }
}

/// Annular cylinder carrying the drive current. The axis of the annulus is
/// the local `x′` direction, pointing radially away from the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Coil {
    center: Vec3,
    r1: f64,
    r2: f64,
    h: f64,
    frame: Frame,
}

/// Cell counts of the tensor midpoint rule over (radius, angle, height).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoilQuadrature {
    pub radial: usize,
    pub angular: usize,
    pub axial: usize,
}

impl Default for CoilQuadrature {
    fn default() -> Self {
        CoilQuadrature {
            radial: 8,
            angular: 64,
            axial: 4,
        }
    }
}

impl CoilQuadrature {
    pub fn refined(self, factor: usize) -> Self {
        CoilQuadrature {
            radial: self.radial * factor,
            angular: self.angular * factor,
            axial: self.axial * factor,
        }
    }
}

/// One coil quadrature cell: midpoint, volume weight and current density there.
#[derive(Debug, Clone, Copy)]
pub struct CurrentNode {
    pub position: Vec3,
    pub weight: f64,
    pub current: Vec3,
}

impl Coil {
    pub fn new(center: Vec3, r1: f64, r2: f64, h: f64) -> Result<Self> {
        if !(0.0 < r1 && r1 < r2) {
            return Err(Error::invalid(format!("coil radii must satisfy 0 < r1 < r2, got r1={r1}, r2={r2}")));
        }
        if !(h > 0.0) {
            return Err(Error::invalid(format!("coil height must be positive, got {h}")));
        }
        if !(center.norm() > 0.0) || !center.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("coil center must be finite and away from the origin"));
        }
        Ok(Coil {
            center,
            r1,
            r2,
            h,
            frame: Frame::from_axis(&center),
        })
    }

    pub fn center(&self) -> &Vec3 {
        &self.center
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn height(&self) -> f64 {
        self.h
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    /// Local coordinates of a global point relative to the coil center.
    pub fn local(&self, y: &Vec3) -> Vec3 {
        self.frame.to_local(&(y - self.center))
    }

    /// True when `y` lies in the closed annular cylinder.
    pub fn contains(&self, y: &Vec3) -> bool {
        let l = self.local(y);
        let rho = l.y.hypot(l.z);
        self.r1 <= rho && rho <= self.r2 && l.x.abs() <= 0.5 * self.h
    }

    /// Current density J₀(y): `(0, −z′, y′)` in the local frame inside the
    /// annulus, zero elsewhere.
    pub fn current(&self, y: &Vec3) -> Vec3 {
        if !self.contains(y) {
            return Vec3::zeros();
        }
        let l = self.local(y);
        self.frame.to_global(&Vec3::new(0.0, -l.z, l.y))
    }

    pub fn volume(&self) -> f64 {
        PI * (self.r2 * self.r2 - self.r1 * self.r1) * self.h
    }

    /// Midpoint cells in (ρ, θ, x′) with weight ρΔρΔθΔh.
    pub fn quadrature(&self, q: CoilQuadrature) -> Vec<CurrentNode> {
        let dr = (self.r2 - self.r1) / q.radial as f64;
        let dt = 2.0 * PI / q.angular as f64;
        let dh = self.h / q.axial as f64;
        let mut nodes = Vec::with_capacity(q.radial * q.angular * q.axial);
        for i in 0..q.radial {
            let rho = self.r1 + (i as f64 + 0.5) * dr;
            for j in 0..q.angular {
                let (s, c) = ((j as f64 + 0.5) * dt).sin_cos();
                let dir = self.frame.to_global(&Vec3::new(0.0, -s, c));
                for k in 0..q.axial {
                    let xp = -0.5 * self.h + (k as f64 + 0.5) * dh;
                    let local = Vec3::new(xp, rho * c, rho * s);
                    nodes.push(CurrentNode {
                        position: self.center + self.frame.to_global(&local),
                        weight: rho * dr * dt * dh,
                        current: dir * rho,
                    });
                }
            }
        }
        nodes
    }
}

/// The 20 vertices of a regular dodecahedron on the unit sphere.
pub fn dodecahedron_vertices() -> Vec<Vec3> {
    let phi = 0.5 * (1.0 + 5f64.sqrt());
    let inv = 1.0 / phi;
    let mut v = Vec::with_capacity(20);
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            for sz in [-1.0, 1.0] {
                v.push(Vec3::new(sx, sy, sz));
            }
        }
    }
    for a in [-1.0, 1.0] {
        for b in [-1.0, 1.0] {
            v.push(Vec3::new(0.0, a * inv, b * phi));
            v.push(Vec3::new(a * inv, b * phi, 0.0));
            v.push(Vec3::new(b * phi, 0.0, a * inv));
        }
    }
    v.into_iter().map(|p| p.normalize()).collect()
}

/// Twenty coils centered on the dodecahedron vertices at `orbit_radius`.
pub fn place_dodecahedron_coils(orbit_radius: f64, r1: f64, r2: f64, h: f64) -> Result<Vec<Coil>> {
    if !(orbit_radius > 0.0) {
        return Err(Error::invalid(format!("orbit radius must be positive, got {orbit_radius}")));
    }
    dodecahedron_vertices()
        .into_iter()
        .map(|v| Coil::new(v * orbit_radius, r1, r2, h))
        .collect()
}
