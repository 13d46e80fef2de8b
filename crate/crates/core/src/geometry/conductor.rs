use super::Vec3;
use crate::error::{Error, Result};

/// Axis-aligned box given by center and edge lengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBox {
    pub center: Vec3,
    pub edges: Vec3,
}

impl AxisBox {
    pub fn new(center: Vec3, edges: Vec3) -> Result<Self> {
        if !edges.iter().all(|e| *e > 0.0 && e.is_finite()) {
            return Err(Error::invalid(format!(
                "box edges must be strictly positive, got ({}, {}, {})",
                edges.x, edges.y, edges.z
            )));
        }
        if !center.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("box center must be finite"));
        }
        Ok(AxisBox { center, edges })
    }

    pub fn cube(center: Vec3, edge: f64) -> Result<Self> {
        Self::new(center, Vec3::repeat(edge))
    }

    pub fn lower(&self) -> Vec3 {
        self.center - self.edges * 0.5
    }

    pub fn upper(&self) -> Vec3 {
        self.center + self.edges * 0.5
    }

    pub fn volume(&self) -> f64 {
        self.edges.product()
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let (lo, hi) = (self.lower(), self.upper());
        let mut out = [Vec3::zeros(); 8];
        for (i, c) in out.iter_mut().enumerate() {
            *c = Vec3::new(
                if i & 1 == 0 { lo.x } else { hi.x },
                if i & 2 == 0 { lo.y } else { hi.y },
                if i & 4 == 0 { lo.z } else { hi.z },
            );
        }
        out
    }

    /// Largest |x| over the box; boxes are convex so a corner attains it.
    pub fn max_norm(&self) -> f64 {
        self.corners().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        let (lo, hi) = (self.lower(), self.upper());
        (0..3).all(|i| lo[i] <= p[i] && p[i] <= hi[i])
    }

    /// Euclidean distance from `p` to the box (0 inside).
    pub fn distance(&self, p: &Vec3) -> f64 {
        let (lo, hi) = (self.lower(), self.upper());
        let d = Vec3::from_fn(|i, _| (lo[i] - p[i]).max(0.0).max(p[i] - hi[i]));
        d.norm()
    }

    fn interiors_overlap(&self, other: &AxisBox) -> bool {
        let (a0, a1, b0, b1) = (self.lower(), self.upper(), other.lower(), other.upper());
        (0..3).all(|i| a0[i] < b1[i] && b0[i] < a1[i])
    }
}

/// Conductive inclusion: a union of interior-disjoint boxes with one constant
/// conductivity.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductorRegion {
    boxes: Vec<AxisBox>,
    sigma: f64,
}

/// Volume quadrature node inside a conductor.
#[derive(Debug, Clone, Copy)]
pub struct VolumeNode {
    pub position: Vec3,
    pub weight: f64,
    pub sigma: f64,
}

impl ConductorRegion {
    pub fn new(boxes: Vec<AxisBox>, sigma: f64) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::invalid("conductor needs at least one box"));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("conductivity must be positive, got {sigma}")));
        }
        for (i, a) in boxes.iter().enumerate() {
            for b in &boxes[i + 1..] {
                if a.interiors_overlap(b) {
                    return Err(Error::invalid("boxes of one conductor must not overlap"));
                }
            }
        }
        Ok(ConductorRegion { boxes, sigma })
    }

    pub fn single(b: AxisBox, sigma: f64) -> Result<Self> {
        Self::new(vec![b], sigma)
    }

    pub fn boxes(&self) -> &[AxisBox] {
        &self.boxes
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn volume(&self) -> f64 {
        self.boxes.iter().map(AxisBox::volume).sum()
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.boxes.iter().any(|b| b.contains(p))
    }

    pub fn distance(&self, p: &Vec3) -> f64 {
        self.boxes.iter().map(|b| b.distance(p)).fold(f64::INFINITY, f64::min)
    }

    pub fn max_norm(&self) -> f64 {
        self.boxes.iter().map(AxisBox::max_norm).fold(0.0, f64::max)
    }

    /// Volume-weighted centroid.
    pub fn centroid(&self) -> Vec3 {
        let v = self.volume();
        self.boxes.iter().map(|b| b.center * b.volume()).sum::<Vec3>() / v
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.boxes.clone(), sigma)
    }
}

/// Midpoint cells covering every box of the region; each edge of length `e`
/// is split into `ceil(e / target_h)` equal parts.
pub fn conductor_quadrature(region: &ConductorRegion, target_h: f64) -> Result<Vec<VolumeNode>> {
    if !(target_h > 0.0) {
        return Err(Error::invalid(format!("quadrature pitch must be positive, got {target_h}")));
    }
    let mut nodes = Vec::new();
    for b in region.boxes() {
        if !(b.volume() > 0.0) {
            return Err(Error::invalid("degenerate conductor box"));
        }
        // the small offset keeps exact ratios such as 0.2/0.05 from rounding up
        let n: [usize; 3] = std::array::from_fn(|i| ((b.edges[i] / target_h - 1e-9).ceil() as usize).max(1));
        let step = Vec3::new(
            b.edges.x / n[0] as f64,
            b.edges.y / n[1] as f64,
            b.edges.z / n[2] as f64,
        );
        let w = step.product();
        let lo = b.lower();
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    let position = lo
                        + Vec3::new(
                            (i as f64 + 0.5) * step.x,
                            (j as f64 + 0.5) * step.y,
                            (k as f64 + 0.5) * step.z,
                        );
                    nodes.push(VolumeNode {
                        position,
                        weight: w,
                        sigma: region.sigma(),
                    });
                }
            }
        }
    }
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_has_64_cells() {
        let r = ConductorRegion::single(AxisBox::cube(Vec3::new(0.4, 0.4, 0.0), 0.2).unwrap(), 1.0).unwrap();
        let q = conductor_quadrature(&r, 0.05).unwrap();
        assert_eq!(q.len(), 64);
        let vol: f64 = q.iter().map(|n| n.weight).sum();
        assert!((vol - 0.008).abs() < 1e-15);
    }

    #[test]
    fn l_shape_volume_is_sum_of_parts() {
        let a = AxisBox::new(Vec3::new(-0.1, -0.4, 0.0), Vec3::new(0.8, 0.2, 0.2)).unwrap();
        let b = AxisBox::new(Vec3::new(-0.4, 0.1, 0.0), Vec3::new(0.2, 0.8, 0.2)).unwrap();
        let r = ConductorRegion::new(vec![a, b], 2.0).unwrap();
        let vol: f64 = conductor_quadrature(&r, 0.03).unwrap().iter().map(|n| n.weight).sum();
        assert!((vol - (a.volume() + b.volume())).abs() < 1e-14);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(AxisBox::new(Vec3::zeros(), Vec3::new(0.1, 0.0, 0.1)).is_err());
        let b = AxisBox::cube(Vec3::zeros(), 0.1).unwrap();
        assert!(ConductorRegion::single(b, 0.0).is_err());
        assert!(ConductorRegion::new(vec![b, b], 1.0).is_err());
        let r = ConductorRegion::single(b, 1.0).unwrap();
        assert!(conductor_quadrature(&r, 0.0).is_err());
    }

    #[test]
    fn distance_and_corners() {
        let b = AxisBox::cube(Vec3::new(0.4, 0.4, 0.0), 0.2).unwrap();
        assert_eq!(b.distance(&Vec3::new(0.45, 0.35, 0.05)), 0.0);
        assert!((b.distance(&Vec3::new(0.8, 0.4, 0.0)) - 0.3).abs() < 1e-15);
        assert!((b.max_norm() - (0.5f64 * 0.5 * 2.0 + 0.01).sqrt()).abs() < 1e-15);
    }
}
