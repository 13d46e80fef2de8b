use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// G(x, y) = 1/(4π|x − y|).
pub fn green(x: &Vec3, y: &Vec3) -> Result<f64> {
    let r = (x - y).norm();
    if !(r > 0.0) {
        return Err(Error::Singular(format!("G evaluated at coincident points {:?}", x.as_slice())));
    }
    Ok(1.0 / (4.0 * PI * r))
}

/// ∇ₓG(x, y) = −(x − y)/(4π|x − y|³).
pub fn grad_green(x: &Vec3, y: &Vec3) -> Result<Vec3> {
    let d = x - y;
    let r2 = d.norm_squared();
    if !(r2 > 0.0) {
        return Err(Error::Singular(format!("∇G evaluated at coincident points {:?}", x.as_slice())));
    }
    Ok(-d / (4.0 * PI * r2 * r2.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        let o = Vec3::zeros();
        assert!((green(&Vec3::x(), &o).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-16);
        assert!((green(&(Vec3::y() * 2.0), &o).unwrap() - 1.0 / (8.0 * PI)).abs() < 1e-16);
        let g = grad_green(&Vec3::x(), &o).unwrap();
        assert!((g - Vec3::new(-1.0 / (4.0 * PI), 0.0, 0.0)).norm() < 1e-16);
    }

    #[test]
    fn coincident_points_are_singular() {
        let p = Vec3::new(0.1, 0.2, 0.3);
        assert!(matches!(green(&p, &p), Err(Error::Singular(_))));
        assert!(matches!(grad_green(&p, &p), Err(Error::Singular(_))));
    }
}
