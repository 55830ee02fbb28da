//! Monte Carlo estimate of the success probability by simulating jumps.

use super::LawnState;
use crate::error::{Error, Result};
use crate::geom;
use crate::grid::SphericalGrid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Simulates `n_samples` jumps from uniformly chosen lawn-1 sites in
/// uniformly random directions; each landing point counts as a success when
/// its nearest grid site is a landing target.
pub fn mc_oracle_probability(
    state: &LawnState,
    grid: &SphericalGrid,
    theta: f64,
    n_samples: usize,
    seed: u64,
) -> Result<OracleEstimate> {
    state.check_grid(grid)?;
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be ≥ 1".into()));
    }
    let sources: Vec<usize> = (0..state.n_sites())
        .filter(|&i| state.spins1()[i] == 1)
        .collect();
    if sources.is_empty() {
        return Err(Error::InvalidArgument("lawn 1 is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (st, ct) = theta.sin_cos();
    let mut hits = 0usize;
    for _ in 0..n_samples {
        let i = sources[rng.gen_range(0..sources.len())];
        let p = grid.point(i);
        let frame = geom::Frame::new(p);
        let psi: f64 = rng.gen_range(0.0..2.0 * PI);
        let dir = geom::add(&geom::scale(&frame.e1, psi.cos()), &geom::scale(&frame.e2, psi.sin()));
        let landing = geom::normalize(&geom::add(&geom::scale(p, ct), &geom::scale(&dir, st)));
        if state.target(grid.nearest_site(&landing)) == 1 {
            hits += 1;
        }
    }
    let n = n_samples as f64;
    let estimate = hits as f64 / n;
    Ok(OracleEstimate {
        estimate,
        std_error: (estimate * (1.0 - estimate) / n).sqrt(),
        n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::generate_healpix;
    use crate::interaction::build_shell_table;
    use crate::lawn::{evaluate_probability, hemisphere_lawn, new_random_lawn, SetupKind};

    #[test]
    fn antipodal_lawn_never_hits_at_pi() {
        let g = generate_healpix(8).unwrap();
        let s = new_random_lawn(&g, SetupKind::AntipodalOneLawn, 4).unwrap();
        let r = mc_oracle_probability(&s, &g, PI, 2000, 1).unwrap();
        assert_eq!(r.estimate, 0.0);
    }

    #[test]
    fn hemisphere_matches_continuum() {
        let g = generate_healpix(16).unwrap();
        let s = hemisphere_lawn(&g, &[0.0, 0.6, 0.8]).unwrap();
        let r = mc_oracle_probability(&s, &g, 0.3 * PI, 200_000, 7).unwrap();
        assert!((r.estimate - 0.7).abs() < 3.0 * r.std_error + 2e-3, "{r:?}");
    }

    #[test]
    fn agrees_with_functional_on_random_lawn() {
        let g = generate_healpix(16).unwrap();
        let t = build_shell_table(&g, 0.25 * PI).unwrap();
        let s = new_random_lawn(&g, SetupKind::NonAntipodalOneLawn, 2).unwrap();
        let p = evaluate_probability(&s, &t).unwrap();
        let r = mc_oracle_probability(&s, &g, 0.25 * PI, 100_000, 3).unwrap();
        assert!((r.estimate - p).abs() < 3.0 * r.std_error + 2e-3, "{p} vs {r:?}");
    }
}
