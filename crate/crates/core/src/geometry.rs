//! Small 3-D helpers shared by the scenario and channel code.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;

/// Spherical direction of a vector: azimuth in the x-y plane measured from
/// +x, zenith measured from +z. Both in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub azimuth: f64,
    pub zenith: f64,
}

impl Direction {
    pub fn of(v: &Vec3) -> Self {
        let norm = v.norm();
        if norm == 0.0 {
            return Direction {
                azimuth: 0.0,
                zenith: std::f64::consts::FRAC_PI_2,
            };
        }
        Direction {
            azimuth: v.y.atan2(v.x),
            zenith: (v.z / norm).clamp(-1.0, 1.0).acos(),
        }
    }

    pub fn unit_vector(&self) -> Vec3 {
        let (sz, cz) = self.zenith.sin_cos();
        let (sa, ca) = self.azimuth.sin_cos();
        Vec3::new(sz * ca, sz * sa, cz)
    }
}

/// Horizontal unit vector for a body rotated by `orientation` about +z.
pub fn facing_axis(orientation: f64) -> Vec3 {
    Vec3::new(orientation.cos(), orientation.sin(), 0.0)
}

pub fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

pub fn is_finite(v: &Vec3) -> bool {
    v.iter().all(|c| c.is_finite())
}
