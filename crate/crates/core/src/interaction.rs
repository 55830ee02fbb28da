//! Smoothed jump kernel, per-site interaction shells and grid diagnostics.

use crate::error::{Error, Result};
use crate::geom;
use crate::grid::SphericalGrid;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Compactly supported smoothed delta profile: `¼(1 + cos(πx/2))` on
/// `|x| ≤ 2`, zero outside. Integrates to one.
#[inline]
pub fn kernel_phi(x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        0.25 * (1.0 + (0.5 * PI * x).cos())
    }
}

/// Smallest and largest resolvable jump angle on `grid`.
pub fn resolvable_range(grid: &SphericalGrid, antipodal: bool) -> (f64, f64) {
    let h = grid.spacing();
    let max = if antipodal { PI - 4.0 * h } else { PI };
    (4.0 * h, max)
}

/// Fails with `JumpUnresolvable` when `theta` is outside the resolvable range.
pub fn check_resolvable(grid: &SphericalGrid, theta: f64, antipodal: bool) -> Result<()> {
    let (min, max) = resolvable_range(grid, antipodal);
    if !(theta >= min && theta <= max) {
        return Err(Error::JumpUnresolvable { theta, min, max });
    }
    Ok(())
}

/// Sites whose mutual angle lies within the kernel support of a jump angle,
/// stored in compressed rows sorted by neighbour index.
#[derive(Debug, Clone)]
pub struct ShellTable {
    theta: f64,
    spacing: f64,
    fingerprint: String,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    weights: Vec<f64>,
}

impl ShellTable {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn n_sites(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Fingerprint of the grid the table was built on.
    pub fn grid_fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Total number of stored (directed) pairs.
    pub fn n_entries(&self) -> usize {
        self.neighbors.len()
    }

    /// Neighbour indices and weights of site `i`.
    #[inline]
    pub fn shell(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.neighbors[r.clone()], &self.weights[r])
    }

    /// Weight between `i` and `j`, zero if they do not interact.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let (nbrs, w) = self.shell(i);
        match nbrs.binary_search(&(j as u32)) {
            Ok(k) => w[k],
            Err(_) => 0.0,
        }
    }

    /// Prefactor turning the raw double sum into a probability:
    /// `4 / (sinθ · N² · h)`.
    pub fn normalization(&self) -> f64 {
        let n = self.n_sites() as f64;
        4.0 / (self.theta.sin() * n * n * self.spacing)
    }

    /// Fails with `GridMismatch` unless the table was built on `grid`.
    pub fn check_grid(&self, grid: &SphericalGrid) -> Result<()> {
        if grid.fingerprint() != self.fingerprint {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// Builds the interaction shells for `theta`.
///
/// Requires `4h ≤ θ ≤ π`; antipodal setups additionally need `θ ≤ π − 4h`,
/// which the lawn functional checks.
pub fn build_shell_table(grid: &SphericalGrid, theta: f64) -> Result<ShellTable> {
    check_resolvable(grid, theta, false)?;
    let n = grid.n_sites();
    if n > u32::MAX as usize {
        return Err(Error::InvalidArgument("grid too large for 32-bit indices".into()));
    }
    let h = grid.spacing();
    let index = grid.index();
    let r_min = (theta - 2.0 * h).max(0.0);
    let r_max = (theta + 2.0 * h).min(PI);

    let rows: Vec<(Vec<u32>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row: Vec<(u32, f64)> = Vec::new();
            index.for_each_in_annulus(grid.point(i), r_min, r_max, |j, d| {
                if j != i {
                    let w = kernel_phi((d - theta) / h);
                    if w > 0.0 {
                        row.push((j as u32, w));
                    }
                }
            });
            row.sort_unstable_by_key(|e| e.0);
            row.into_iter().unzip()
        })
        .collect();

    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let total: usize = rows.iter().map(|r| r.0.len()).sum();
    let mut neighbors = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    for (nb, w) in rows {
        neighbors.extend_from_slice(&nb);
        weights.extend_from_slice(&w);
        offsets.push(neighbors.len());
    }
    Ok(ShellTable {
        theta,
        spacing: h,
        fingerprint: grid.fingerprint().to_owned(),
        offsets,
        neighbors,
        weights,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `bins + 1` increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Distribution of per-site potential energies `E_i = Σ_j w_ij`.
#[derive(Debug, Clone, Serialize)]
pub struct PotentialEnergyReport {
    pub theta: f64,
    pub energies: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    /// Variance divided by the squared mean.
    pub relative_variance: f64,
    pub skewness: f64,
    pub histogram: Histogram,
}

const HISTOGRAM_BINS: usize = 200;

pub fn potential_energies(grid: &SphericalGrid, theta: f64) -> Result<PotentialEnergyReport> {
    let shells = build_shell_table(grid, theta)?;
    Ok(potential_energies_from(&shells))
}

pub fn potential_energies_from(shells: &ShellTable) -> PotentialEnergyReport {
    let energies: Vec<f64> = (0..shells.n_sites())
        .map(|i| geom::pairwise_sum(shells.shell(i).1))
        .collect();
    let n = energies.len() as f64;
    let mean = geom::pairwise_sum(&energies) / n;
    let dev2: Vec<f64> = energies.iter().map(|e| (e - mean).powi(2)).collect();
    let dev3: Vec<f64> = energies.iter().map(|e| (e - mean).powi(3)).collect();
    let variance = geom::pairwise_sum(&dev2) / n;
    let sigma = variance.sqrt();
    let skewness = if sigma > 0.0 {
        geom::pairwise_sum(&dev3) / n / (sigma * sigma * sigma)
    } else {
        0.0
    };
    let half_width = if sigma > 0.0 { 5.0 * sigma } else { 0.5 * mean.abs().max(1.0) };
    let lo = mean - half_width;
    let width = 2.0 * half_width / HISTOGRAM_BINS as f64;
    let edges: Vec<f64> = (0..=HISTOGRAM_BINS).map(|b| lo + b as f64 * width).collect();
    let mut counts = vec![0usize; HISTOGRAM_BINS];
    for e in &energies {
        // outliers beyond ±5σ land in the end bins
        let b = ((e - lo) / width).floor().clamp(0.0, (HISTOGRAM_BINS - 1) as f64) as usize;
        counts[b] += 1;
    }
    PotentialEnergyReport {
        theta: shells.theta(),
        mean,
        variance,
        relative_variance: if mean != 0.0 { variance / (mean * mean) } else { 0.0 },
        skewness,
        histogram: Histogram { edges, counts },
        energies,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{generate_goldberg, generate_healpix, octahedron, GridKind};
    use rand::{Rng, SeedableRng};

    #[test]
    fn kernel_values() {
        assert_eq!(kernel_phi(0.0), 0.5);
        assert!((kernel_phi(1.0) - 0.25).abs() < 1e-16);
        assert_eq!(kernel_phi(3.0), 0.0);
        assert_eq!(kernel_phi(-2.0), 0.0);
    }

    #[test]
    fn kernel_even_and_normalised() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            let x: f64 = rng.gen_range(-3.0..3.0);
            assert_eq!(kernel_phi(x), kernel_phi(-x));
        }
        let step = 1e-4;
        let n = (4.0 / step) as usize;
        let s: f64 = (0..n).map(|k| kernel_phi(-2.0 + (k as f64 + 0.5) * step)).sum();
        assert!((s * step - 1.0).abs() < 1e-8);
    }

    #[test]
    fn octahedron_right_angle_shells() {
        let g = octahedron();
        // 4h exceeds π/2 on six sites, so bypass the guard for this toy case
        let h = g.spacing();
        assert!(4.0 * h > PI / 2.0);
        let t = toy_table(&g, PI / 2.0);
        for i in 0..6 {
            let (nb, w) = t.shell(i);
            assert_eq!(nb.len(), 4);
            assert!(w.iter().all(|&x| x == 0.5));
            assert!(!nb.contains(&(g.antipodes().unwrap().partner(i) as u32)));
        }
    }

    /// Table without the resolvability guard, for tiny grids.
    fn toy_table(g: &SphericalGrid, theta: f64) -> ShellTable {
        let h = g.spacing();
        let n = g.n_sites();
        let mut offsets = vec![0];
        let mut neighbors = Vec::new();
        let mut weights = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let w = kernel_phi((geom::spherical_angle(g.point(i), g.point(j)) - theta) / h);
                // only the exact right angles for the octahedron
                if i != j && w == 0.5 {
                    neighbors.push(j as u32);
                    weights.push(w);
                }
            }
            offsets.push(neighbors.len());
        }
        ShellTable {
            theta,
            spacing: h,
            fingerprint: g.fingerprint().to_owned(),
            offsets,
            neighbors,
            weights,
        }
    }

    fn brute_force(g: &SphericalGrid, theta: f64) -> Vec<Vec<(u32, f64)>> {
        let h = g.spacing();
        (0..g.n_sites())
            .map(|i| {
                (0..g.n_sites())
                    .filter(|&j| j != i)
                    .filter_map(|j| {
                        let d = geom::spherical_angle(g.point(i), g.point(j));
                        let w = kernel_phi((d - theta) / h);
                        (w > 0.0).then_some((j as u32, w))
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn matches_brute_force_on_healpix() {
        let g = generate_healpix(16).unwrap();
        for theta in [0.3 * PI, 0.5 * PI, 0.9 * PI] {
            let t = build_shell_table(&g, theta).unwrap();
            let want = brute_force(&g, theta);
            for (i, row) in want.iter().enumerate() {
                let (nb, w) = t.shell(i);
                assert_eq!(nb.len(), row.len(), "site {i}");
                for (k, &(j, wj)) in row.iter().enumerate() {
                    assert_eq!(nb[k], j);
                    assert!((w[k] - wj).abs() <= 1e-15);
                }
            }
        }
    }

    #[test]
    fn matches_brute_force_on_random_points() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let pts: Vec<_> = (0..1500).map(|_| geom::random_unit(&mut rng)).collect();
        let g = SphericalGrid::new(pts, GridKind::Custom).unwrap();
        let t = build_shell_table(&g, 1.1).unwrap();
        let want = brute_force(&g, 1.1);
        for (i, row) in want.iter().enumerate() {
            let got: Vec<(u32, f64)> = t.shell(i).0.iter().copied().zip(t.shell(i).1.iter().copied()).collect();
            assert_eq!(&got, row);
        }
    }

    #[test]
    fn symmetric_with_bounded_weights() {
        let g = generate_goldberg(9).unwrap();
        let t = build_shell_table(&g, 0.7).unwrap();
        assert_eq!(t.n_entries() % 2, 0);
        for i in 0..g.n_sites() {
            let (nb, w) = t.shell(i);
            for (&j, &wij) in nb.iter().zip(w) {
                assert!(wij > 0.0 && wij <= 0.5);
                assert_eq!(t.weight(j as usize, i), wij);
            }
        }
    }

    #[test]
    fn rejects_unresolvable_angles() {
        let g = generate_healpix(8).unwrap();
        let h = g.spacing();
        assert!(matches!(
            build_shell_table(&g, 3.0 * h),
            Err(Error::JumpUnresolvable { .. })
        ));
        assert!(build_shell_table(&g, PI).is_ok());
        assert!(check_resolvable(&g, PI - 2.0 * h, true).is_err());
    }

    #[test]
    fn mean_energy_matches_continuum() {
        // Σ_j φ ≈ (2π sinθ / h²) · h · ∫φ = sinθ · √(πN)
        for (g, theta) in [
            (generate_healpix(16).unwrap(), 0.3 * PI),
            (generate_healpix(16).unwrap(), 0.6 * PI),
            (generate_goldberg(20).unwrap(), 0.3 * PI),
        ] {
            let r = potential_energies(&g, theta).unwrap();
            let expect = theta.sin() * (PI * g.n_sites() as f64).sqrt();
            assert!((r.mean / expect - 1.0).abs() < 0.05, "{} vs {}", r.mean, expect);
            assert_eq!(r.histogram.counts.iter().sum::<usize>(), g.n_sites());
            assert_eq!(r.histogram.edges.len(), 201);
            assert!(r.energies.iter().all(|&e| e >= 0.0));
        }
    }
}
