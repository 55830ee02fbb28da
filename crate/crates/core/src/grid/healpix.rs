//! HEALPix pixel centres in RING order.

use super::{AntipodeMap, GridKind, SphericalGrid};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use std::f64::consts::PI;

/// Pixel centres of the RING scheme for resolution `n_side`
/// (`N = 12·n_side²`).
///
/// Rings in the southern half are written as exact negations of their
/// northern mirror rings, so the antipode map is exact.
pub fn generate_healpix(n_side: usize) -> Result<SphericalGrid> {
    if n_side == 0 {
        return Err(Error::InvalidArgument("n_side must be ≥ 1".into()));
    }
    let n = n_side;
    let nf = n as f64;
    let n_rings = 4 * n - 1;
    let mut points: Vec<Vec3> = Vec::with_capacity(12 * n * n);
    let mut ring_start = Vec::with_capacity(n_rings + 1);

    let ring_len = |i: usize| if i < n { 4 * i } else if i <= 3 * n { 4 * n } else { 4 * (4 * n - i) };

    for i in 1..=n_rings {
        ring_start.push(points.len());
        let count = ring_len(i);
        if i > 2 * n {
            // mirror of ring 4n − i, shifted by half a turn
            let mirror = 4 * n - i;
            let base = ring_start[mirror - 1];
            for j in 0..count {
                let k = (j + count / 2) % count;
                let p = points[base + k];
                points.push([-p[0], -p[1], -p[2]]);
            }
            continue;
        }
        if i == 2 * n {
            // equator: second half is the negation of the first
            let fodd = if (i + n) % 2 == 1 { 1.0 } else { 0.5 };
            let base = points.len();
            for j in 1..=count / 2 {
                let phi = (j as f64 - fodd) * PI / (2.0 * nf);
                points.push([phi.cos(), phi.sin(), 0.0]);
            }
            for j in 0..count / 2 {
                let p = points[base + j];
                points.push([-p[0], -p[1], 0.0]);
            }
            continue;
        }
        let (z, fodd, per_quarter) = if i < n {
            let fi = i as f64;
            (1.0 - fi * fi / (3.0 * nf * nf), 0.5, fi)
        } else {
            let fodd = if (i + n) % 2 == 1 { 1.0 } else { 0.5 };
            (4.0 / 3.0 - 2.0 * i as f64 / (3.0 * nf), fodd, nf)
        };
        let rho = ((1.0 - z) * (1.0 + z)).sqrt();
        for j in 1..=count {
            let phi = (j as f64 - fodd) * PI / (2.0 * per_quarter);
            points.push([rho * phi.cos(), rho * phi.sin(), z]);
        }
    }
    debug_assert_eq!(points.len(), 12 * n * n);
    // renormalize so |p| = 1 to rounding
    for p in &mut points {
        let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        p[0] /= r;
        p[1] /= r;
        p[2] /= r;
    }
    let pairs = antipodal_pairs(n, &ring_start);
    SphericalGrid::with_antipodes(
        points,
        GridKind::Healpix,
        AntipodeMap {
            pairs,
            tolerance: 0.0,
        },
    )
}

fn antipodal_pairs(n: usize, ring_start: &[usize]) -> Vec<usize> {
    let n_rings = 4 * n - 1;
    let total = 12 * n * n;
    let mut pairs = vec![usize::MAX; total];
    for i in 1..=n_rings {
        let start = ring_start[i - 1];
        let count = if i < n {
            4 * i
        } else if i <= 3 * n {
            4 * n
        } else {
            4 * (4 * n - i)
        };
        let mirror = 4 * n - i;
        let mstart = ring_start[mirror - 1];
        for j in 0..count {
            pairs[start + j] = mstart + (j + count / 2) % count;
        }
    }
    pairs
}
