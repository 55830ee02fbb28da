//! Class-I geodesic subdivision of the icosahedron.

use super::{GridKind, SphericalGrid};
use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use std::collections::HashMap;

fn icosahedron() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let verts: Vec<Vec3> = raw.iter().map(geom::normalize).collect();
    // faces: triples of mutually adjacent vertices (edge length 2 before normalisation)
    let mut faces = Vec::with_capacity(20);
    let adjacent = |a: usize, b: usize| {
        let d = geom::norm(&geom::sub(&raw[a], &raw[b]));
        (d - 2.0).abs() < 1e-9
    };
    for a in 0..12 {
        for b in a + 1..12 {
            if !adjacent(a, b) {
                continue;
            }
            for c in b + 1..12 {
                if adjacent(a, c) && adjacent(b, c) {
                    // orient outward
                    let n = geom::cross(
                        &geom::sub(&verts[b], &verts[a]),
                        &geom::sub(&verts[c], &verts[a]),
                    );
                    if geom::dot(&n, &verts[a]) > 0.0 {
                        faces.push([a, b, c]);
                    } else {
                        faces.push([a, c, b]);
                    }
                }
            }
        }
    }
    debug_assert_eq!(faces.len(), 20);
    (verts, faces)
}

/// Subdivided icosahedron: vertices on the sphere and the small triangles.
///
/// Each face is split into `frequency²` planar triangles whose vertices are
/// then projected radially (gnomonic subdivision). `N = 10·f² + 2`.
pub fn goldberg_mesh(frequency: usize) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    if frequency == 0 {
        return Err(Error::InvalidArgument("frequency must be ≥ 1".into()));
    }
    let f = frequency;
    let (verts, faces) = icosahedron();
    let mut ids: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
    let mut points: Vec<Vec3> = Vec::with_capacity(10 * f * f + 2);
    let mut triangles = Vec::with_capacity(20 * f * f);

    for face in &faces {
        let mut local = vec![vec![0usize; f + 1]; f + 1];
        for i in 0..=f {
            for j in 0..=f - i {
                let k = f - i - j;
                // exact key: barycentric weights on icosahedron vertex ids
                let mut key: Vec<(usize, usize)> = [(face[0], i), (face[1], j), (face[2], k)]
                    .into_iter()
                    .filter(|&(_, w)| w > 0)
                    .collect();
                key.sort_unstable();
                let next = points.len();
                let id = *ids.entry(key).or_insert_with(|| {
                    let mut p = [0.0; 3];
                    for (v, w) in [(face[0], i), (face[1], j), (face[2], k)] {
                        p = geom::add(&p, &geom::scale(&verts[v], w as f64 / f as f64));
                    }
                    points.push(geom::normalize(&p));
                    next
                });
                local[i][j] = id;
            }
        }
        for i in 0..f {
            for j in 0..f - i {
                triangles.push([local[i][j], local[i + 1][j], local[i][j + 1]]);
                if i + j + 1 < f {
                    triangles.push([local[i + 1][j], local[i + 1][j + 1], local[i][j + 1]]);
                }
            }
        }
    }
    Ok((points, triangles))
}

/// Goldberg-type grid from the subdivided icosahedron.
pub fn generate_goldberg(frequency: usize) -> Result<SphericalGrid> {
    let (points, _) = goldberg_mesh(frequency)?;
    SphericalGrid::new(points, GridKind::Goldberg)
}
