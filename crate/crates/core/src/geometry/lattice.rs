use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use super::{fingerprint_f64, Vec3};
use crate::error::{Error, Result};

/// Axis-normal plane used for cross-section lattices and rasters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    /// 0 for `x = c`, 1 for `y = c`, 2 for `z = c`.
    pub axis: usize,
    pub offset: f64,
}

impl Section {
    pub fn z(offset: f64) -> Self {
        Section { axis: 2, offset }
    }

    /// The two in-plane axes in increasing order.
    pub fn in_plane(&self) -> (usize, usize) {
        match self.axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        }
    }
}

impl FromStr for Section {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, value) = s
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("section must look like `z=0`, got `{s}`")))?;
        let axis = match name.trim() {
            "x" => 0,
            "y" => 1,
            "z" => 2,
            other => return Err(Error::invalid(format!("unknown section axis `{other}`"))),
        };
        let offset: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad section offset `{value}`")))?;
        if !offset.is_finite() {
            return Err(Error::invalid("section offset must be finite"));
        }
        Ok(Section { axis, offset })
    }
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", ["x", "y", "z"][self.axis], self.offset)
    }
}

/// Probe points z of the sampling domain, laid out on a Cartesian grid of
/// pitch `spacing` and clipped to a ball.
#[derive(Debug, Clone)]
pub struct SamplingLattice {
    points: Vec<Vec3>,
    indices: Vec<[i32; 3]>,
    spacing: f64,
    radius: f64,
    section: Option<Section>,
}

impl SamplingLattice {
    /// All grid points `pitch·(i, j, k)` with |z| ≤ radius.
    pub fn ball(radius: f64, pitch: f64) -> Result<Self> {
        Self::check(radius, pitch)?;
        let n = (radius / pitch + 1e-9).floor() as i32;
        let mut points = Vec::new();
        let mut indices = Vec::new();
        for i in -n..=n {
            for j in -n..=n {
                for k in -n..=n {
                    let p = Vec3::new(i as f64, j as f64, k as f64) * pitch;
                    if p.norm() <= radius * (1.0 + 1e-12) {
                        points.push(p);
                        indices.push([i, j, k]);
                    }
                }
            }
        }
        Ok(SamplingLattice {
            points,
            indices,
            spacing: pitch,
            radius,
            section: None,
        })
    }

    /// Planar lattice of pitch `pitch` on `section`, clipped to the ball.
    /// The out-of-plane index is always 0.
    pub fn section(radius: f64, pitch: f64, section: Section) -> Result<Self> {
        Self::check(radius, pitch)?;
        if section.offset.abs() > radius {
            return Err(Error::invalid(format!(
                "section {section} misses the sampling ball of radius {radius}"
            )));
        }
        let (a, b) = section.in_plane();
        let n = (radius / pitch + 1e-9).floor() as i32;
        let mut points = Vec::new();
        let mut indices = Vec::new();
        for i in -n..=n {
            for j in -n..=n {
                let mut p = Vec3::zeros();
                p[section.axis] = section.offset;
                p[a] = i as f64 * pitch;
                p[b] = j as f64 * pitch;
                if p.norm() <= radius * (1.0 + 1e-12) {
                    let mut idx = [0; 3];
                    idx[a] = i;
                    idx[b] = j;
                    points.push(p);
                    indices.push(idx);
                }
            }
        }
        Ok(SamplingLattice {
            points,
            indices,
            spacing: pitch,
            radius,
            section: Some(section),
        })
    }

    /// Arbitrary probe points (spacing 0, no neighbor structure).
    pub fn from_points(points: Vec<Vec3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("lattice needs at least one point"));
        }
        let radius = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
        let indices = (0..points.len() as i32).map(|i| [i, i32::MIN, i32::MIN]).collect();
        Ok(SamplingLattice {
            points,
            indices,
            spacing: 0.0,
            radius,
            section: None,
        })
    }

    fn check(radius: f64, pitch: f64) -> Result<()> {
        if !(radius > 0.0) || !(pitch > 0.0) {
            return Err(Error::invalid(format!(
                "lattice radius and pitch must be positive, got {radius} and {pitch}"
            )));
        }
        if radius / pitch > 2000.0 {
            return Err(Error::invalid("lattice pitch too fine"));
        }
        Ok(())
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    /// Integer grid coordinates of each point.
    pub fn indices(&self) -> &[[i32; 3]] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Radius of the clipping ball.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn section_plane(&self) -> Option<Section> {
        self.section
    }

    /// Axis-aligned bounds of the points.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in &self.points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    pub fn fingerprint(&self) -> u64 {
        fingerprint_f64(self.points.iter().flat_map(|p| p.iter()))
    }

    pub fn content_hash(&self) -> [u8; 32] {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for p in &self.points {
            for c in p.iter() {
                h.update(c.to_le_bytes());
            }
        }
        h.finalize().into()
    }

    /// Map from grid coordinates to point index.
    pub fn index_map(&self) -> HashMap<[i32; 3], usize> {
        self.indices.iter().enumerate().map(|(i, k)| (*k, i)).collect()
    }

    /// Indices of the lattice neighbors of point `i` (up to 26).
    pub fn neighbors(&self, i: usize, map: &HashMap<[i32; 3], usize>) -> Vec<usize> {
        let [a, b, c] = self.indices[i];
        if b == i32::MIN {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(26);
        for da in -1..=1 {
            for db in -1..=1 {
                for dc in -1..=1 {
                    if (da, db, dc) == (0, 0, 0) {
                        continue;
                    }
                    if let Some(&j) = map.get(&[a + da, b + db, c + dc]) {
                        out.push(j);
                    }
                }
            }
        }
        out
    }
}
