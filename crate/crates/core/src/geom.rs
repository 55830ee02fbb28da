//! Small 3-vector helpers on `[f64; 3]`.

use rand::Rng;
use std::f64::consts::PI;

pub type Vec3 = [f64; 3];

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn neg(a: &Vec3) -> Vec3 {
    [-a[0], -a[1], -a[2]]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn normalize(a: &Vec3) -> Vec3 {
    scale(a, 1.0 / norm(a))
}

/// Spherical angle between two unit vectors, in `[0, π]`.
///
/// Uses `2·asin(|u−v|/2)`, which stays accurate for nearly equal and
/// nearly antipodal inputs where `acos(u·v)` loses digits.
#[inline]
pub fn spherical_angle(u: &Vec3, v: &Vec3) -> f64 {
    let d = norm(&sub(u, v));
    2.0 * (0.5 * d).min(1.0).asin()
}

/// Point from polar angle (from +z) and azimuth.
#[inline]
pub fn from_polar(polar: f64, azimuth: f64) -> Vec3 {
    let s = polar.sin();
    [s * azimuth.cos(), s * azimuth.sin(), polar.cos()]
}

/// Azimuth in `[0, 2π)`.
#[inline]
pub fn azimuth(p: &Vec3) -> f64 {
    let a = p[1].atan2(p[0]);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Polar angle from +z in `[0, π]`.
#[inline]
pub fn polar(p: &Vec3) -> f64 {
    let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
    rho.atan2(p[2])
}

/// Any unit vector orthogonal to `p`.
pub fn orthogonal(p: &Vec3) -> Vec3 {
    let helper = if p[0].abs() < 0.6 {
        [1.0, 0.0, 0.0]
    } else if p[1].abs() < 0.6 {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    normalize(&cross(p, &helper))
}

/// Right-handed orthonormal frame whose third axis is `axis`.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub e1: Vec3,
    pub e2: Vec3,
    pub e3: Vec3,
}

impl Frame {
    pub fn new(axis: &Vec3) -> Self {
        let e3 = normalize(axis);
        let e1 = orthogonal(&e3);
        let e2 = cross(&e3, &e1);
        Frame { e1, e2, e3 }
    }

    /// Coordinates of `p` in this frame.
    #[inline]
    pub fn local(&self, p: &Vec3) -> Vec3 {
        [dot(p, &self.e1), dot(p, &self.e2), dot(p, &self.e3)]
    }

    /// World vector from frame coordinates.
    #[inline]
    pub fn world(&self, q: &Vec3) -> Vec3 {
        [
            q[0] * self.e1[0] + q[1] * self.e2[0] + q[2] * self.e3[0],
            q[0] * self.e1[1] + q[1] * self.e2[1] + q[2] * self.e3[1],
            q[0] * self.e1[2] + q[1] * self.e2[2] + q[2] * self.e3[2],
        ]
    }
}

/// Rotation of `p` about the unit vector `axis` by `angle` (Rodrigues).
pub fn rotate(p: &Vec3, axis: &Vec3, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    let kxp = cross(axis, p);
    let kdp = dot(axis, p);
    [
        p[0] * c + kxp[0] * s + axis[0] * kdp * (1.0 - c),
        p[1] * c + kxp[1] * s + axis[1] * kdp * (1.0 - c),
        p[2] * c + kxp[2] * s + axis[2] * kdp * (1.0 - c),
    ]
}

/// Uniformly distributed random unit vector.
pub fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..2.0 * PI);
    let r = (1.0 - z * z).max(0.0).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

/// Golden-angle spiral of `n` nearly uniform unit vectors.
pub fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Sum with pairwise (tree) accumulation; the result depends only on the
/// slice contents and order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_edge_cases() {
        let u = [0.0, 0.0, 1.0];
        assert_eq!(spherical_angle(&u, &u), 0.0);
        assert!((spherical_angle(&u, &neg(&u)) - PI).abs() < 1e-15);
        assert!((spherical_angle(&u, &[1.0, 0.0, 0.0]) - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn frame_round_trip() {
        let f = Frame::new(&normalize(&[0.3, -0.2, 0.9]));
        let p = normalize(&[0.1, 0.7, -0.2]);
        let q = f.world(&f.local(&p));
        assert!(norm(&sub(&p, &q)) < 1e-14);
        assert!(dot(&f.e1, &f.e2).abs() < 1e-15);
        assert!((dot(&cross(&f.e1, &f.e2), &f.e3) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rotation_preserves_axis_component() {
        let axis = normalize(&[1.0, 1.0, 0.5]);
        let p = normalize(&[0.2, -0.4, 0.8]);
        let q = rotate(&p, &axis, 1.234);
        assert!((dot(&p, &axis) - dot(&q, &axis)).abs() < 1e-14);
        assert!((norm(&q) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-12);
    }
}
