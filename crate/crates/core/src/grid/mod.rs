//! Approximately uniform point sets on the unit sphere.

mod coulomb;
mod goldberg;
mod healpix;
mod index;
mod io;

pub use coulomb::{generate_coulomb, CoulombRun};
pub use goldberg::{generate_goldberg, goldberg_mesh};
pub use healpix::generate_healpix;
pub use index::SiteIndex;
pub use io::{load_point_set, read_point_set, write_point_set};

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

pub use crate::geom::spherical_angle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    TDesign,
    Healpix,
    Goldberg,
    Coulomb,
    Custom,
}

impl GridKind {
    pub fn token(self) -> &'static str {
        match self {
            GridKind::TDesign => "tdesign",
            GridKind::Healpix => "healpix",
            GridKind::Goldberg => "goldberg",
            GridKind::Coulomb => "coulomb",
            GridKind::Custom => "custom",
        }
    }

    /// Default antipode pairing tolerance for a grid of this kind with spacing `h`.
    pub fn default_pairing_tolerance(self, h: f64) -> f64 {
        match self {
            GridKind::Healpix | GridKind::Goldberg => 1e-6 * h,
            GridKind::TDesign | GridKind::Coulomb | GridKind::Custom => 1e-9,
        }
    }
}

impl fmt::Display for GridKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for GridKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tdesign" | "t-design" => Ok(GridKind::TDesign),
            "healpix" => Ok(GridKind::Healpix),
            "goldberg" => Ok(GridKind::Goldberg),
            "coulomb" => Ok(GridKind::Coulomb),
            "custom" => Ok(GridKind::Custom),
            other => Err(Error::MalformedFile(format!("unknown grid kind `{other}`"))),
        }
    }
}

/// Fixed-point-free involution pairing every site with its antipode.
#[derive(Debug, Clone, PartialEq)]
pub struct AntipodeMap {
    pub pairs: Vec<usize>,
    /// Largest deviation of a paired angle from π.
    pub tolerance: f64,
}

impl AntipodeMap {
    #[inline]
    pub fn partner(&self, i: usize) -> usize {
        self.pairs[i]
    }

    /// Checks the involution property.
    pub fn validate(&self) -> Result<()> {
        for (i, &j) in self.pairs.iter().enumerate() {
            if j >= self.pairs.len() || j == i || self.pairs[j] != i {
                return Err(Error::NoAntipodalStructure(format!(
                    "pairing is not a fixed-point-free involution at site {i}"
                )));
            }
        }
        Ok(())
    }
}

/// N unit vectors with average spacing `h = √(4π/N)`.
#[derive(Debug, Clone)]
pub struct SphericalGrid {
    points: Vec<Vec3>,
    spacing: f64,
    kind: GridKind,
    antipodes: Option<AntipodeMap>,
    fingerprint: String,
    index: OnceLock<SiteIndex>,
}

impl SphericalGrid {
    /// Validates and wraps a point set. Points must already be unit length
    /// within 1e-12. An antipode map is searched with the default tolerance
    /// for `kind`; grids without one simply carry `None`.
    pub fn new(points: Vec<Vec3>, kind: GridKind) -> Result<Self> {
        let mut grid = Self::new_unpaired(points, kind)?;
        let tol = kind.default_pairing_tolerance(grid.spacing);
        grid.antipodes = build_antipode_map(&grid, tol).ok();
        Ok(grid)
    }

    /// As [`SphericalGrid::new`] but with an explicit antipode map.
    pub fn with_antipodes(points: Vec<Vec3>, kind: GridKind, map: AntipodeMap) -> Result<Self> {
        let mut grid = Self::new_unpaired(points, kind)?;
        if map.pairs.len() != grid.n_sites() {
            return Err(Error::NoAntipodalStructure(
                "antipode map length differs from site count".into(),
            ));
        }
        map.validate()?;
        grid.antipodes = Some(map);
        Ok(grid)
    }

    pub(crate) fn new_unpaired(points: Vec<Vec3>, kind: GridKind) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::MalformedFile("empty point set".into()));
        }
        for (i, p) in points.iter().enumerate() {
            let n = geom::norm(p);
            if (n - 1.0).abs() > 1e-12 {
                return Err(Error::NonUnitPoint { index: i, norm: n });
            }
        }
        let n = points.len();
        let spacing = (4.0 * PI / n as f64).sqrt();
        let fingerprint = fingerprint(&points);
        let grid = SphericalGrid {
            points,
            spacing,
            kind,
            antipodes: None,
            fingerprint,
            index: OnceLock::new(),
        };
        grid.check_duplicates()?;
        Ok(grid)
    }

    fn check_duplicates(&self) -> Result<()> {
        let idx = self.index();
        for (i, p) in self.points.iter().enumerate() {
            let mut dup = None;
            idx.for_each_in_annulus(p, 0.0, 1e-12, |j, _| {
                if j != i && dup.is_none() {
                    dup = Some(j);
                }
            });
            if let Some(j) = dup {
                return Err(Error::DuplicateSite {
                    first: i.min(j),
                    second: i.max(j),
                });
            }
        }
        Ok(())
    }

    #[inline]
    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    #[inline]
    pub fn point(&self, i: usize) -> &Vec3 {
        &self.points[i]
    }

    #[inline]
    pub fn n_sites(&self) -> usize {
        self.points.len()
    }

    /// Average lattice spacing `h`.
    #[inline]
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn antipodes(&self) -> Option<&AntipodeMap> {
        self.antipodes.as_ref()
    }

    /// Identity of the point set (SHA-256 over the coordinate bits).
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Lazily built spatial index over all sites.
    pub fn index(&self) -> &SiteIndex {
        self.index
            .get_or_init(|| SiteIndex::new(self.points.iter().copied().enumerate(), self.spacing))
    }

    /// Nearest site to an arbitrary unit vector.
    pub fn nearest_site(&self, q: &Vec3) -> usize {
        self.index()
            .nearest(q)
            .map(|(i, _)| i)
            .expect("grid is never empty")
    }

    /// Smallest angle between two distinct sites.
    pub fn min_pair_angle(&self) -> f64 {
        let idx = self.index();
        self.points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut best = f64::INFINITY;
                let mut r = self.spacing;
                while best.is_infinite() && r <= 2.0 * PI {
                    idx.for_each_in_annulus(p, 0.0, r, |j, d| {
                        if j != i && d < best {
                            best = d;
                        }
                    });
                    r *= 2.0;
                }
                best
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn fingerprint(points: &[Vec3]) -> String {
    let mut hasher = Sha256::new();
    hasher.update((points.len() as u64).to_le_bytes());
    for p in points {
        for c in p {
            hasher.update(c.to_bits().to_le_bytes());
        }
    }
    hex::encode(hasher.finalize())
}

/// Pairs each site with the site nearest to its antipode.
///
/// Succeeds only if the matching is a fixed-point-free involution and every
/// pair deviates from an exact antipode by at most `tol` radians.
pub fn build_antipode_map(grid: &SphericalGrid, tol: f64) -> Result<AntipodeMap> {
    if tol < 0.0 {
        return Err(Error::InvalidArgument("pairing tolerance must be ≥ 0".into()));
    }
    let idx = grid.index();
    let mut pairs = Vec::with_capacity(grid.n_sites());
    let mut worst: f64 = 0.0;
    for (i, p) in grid.points().iter().enumerate() {
        let target = geom::neg(p);
        let (j, dev) = idx.nearest(&target).expect("non-empty grid");
        if dev > tol {
            return Err(Error::NoAntipodalStructure(format!(
                "site {i} has no partner within {tol:e} rad (closest deviates by {dev:e})"
            )));
        }
        worst = worst.max(dev);
        pairs.push(j);
    }
    let map = AntipodeMap {
        pairs,
        tolerance: worst,
    };
    map.validate()?;
    Ok(map)
}

#[cfg(test)]
pub(crate) fn octahedron() -> SphericalGrid {
    SphericalGrid::new(
        vec![
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ],
        GridKind::Custom,
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn octahedron_pairs() {
        let g = octahedron();
        let map = build_antipode_map(&g, 1e-12).unwrap();
        assert_eq!(map.pairs, vec![1, 0, 3, 2, 5, 4]);
        assert_eq!(map.tolerance, 0.0);
        assert!((g.spacing() - (4.0 * PI / 6.0).sqrt()).abs() < 1e-15);
        assert!((g.spacing().powi(2) * 6.0 - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn random_points_have_no_antipodes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<Vec3> = (0..100).map(|_| geom::random_unit(&mut rng)).collect();
        let g = SphericalGrid::new(pts, GridKind::Custom).unwrap();
        assert!(g.antipodes().is_none());
        assert!(matches!(
            build_antipode_map(&g, 1e-9),
            Err(Error::NoAntipodalStructure(_))
        ));
    }

    #[test]
    fn rejects_duplicates_and_non_unit() {
        let dup = vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]];
        assert!(matches!(
            SphericalGrid::new(dup, GridKind::Custom),
            Err(Error::DuplicateSite { first: 0, second: 2 })
        ));
        let bad = vec![[1.0, 0.0, 0.0], [0.0, 0.0, 0.5]];
        assert!(matches!(
            SphericalGrid::new(bad, GridKind::Custom),
            Err(Error::NonUnitPoint { index: 1, .. })
        ));
    }

    #[test]
    fn min_angle_of_octahedron() {
        assert!((octahedron().min_pair_angle() - PI / 2.0).abs() < 1e-15);
    }
}
