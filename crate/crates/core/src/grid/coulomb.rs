//! "Coulomb" grids: antipodal charge pairs relaxed under 1/r repulsion.

use super::{AntipodeMap, GridKind, SphericalGrid};
use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Outcome of a Coulomb relaxation.
#[derive(Debug, Clone)]
pub struct CoulombRun {
    pub grid: SphericalGrid,
    /// Energy after each accepted step (first entry is the random start).
    pub energy_history: Vec<f64>,
    pub grad_norm: f64,
    pub converged: bool,
}

impl CoulombRun {
    /// The grid, or `NonConvergence` when the gradient tolerance was not met.
    pub fn into_result(self) -> Result<SphericalGrid> {
        if self.converged {
            Ok(self.grid)
        } else {
            Err(Error::NonConvergence {
                grad_norm: self.grad_norm,
            })
        }
    }
}

const GRAD_TOL: f64 = 1e-7;

/// Energy of the full symmetric set `{x_k, −x_k}` and per-representative
/// tangential gradients.
fn energy_and_gradient(reps: &[Vec3]) -> (f64, Vec<Vec3>) {
    let n = reps.len();
    // every point with its own antipode: distance 2
    let mut energy = n as f64 * 0.5;
    let mut grad = vec![[0.0; 3]; n];
    for k in 0..n {
        for l in k + 1..n {
            let dm = geom::sub(&reps[k], &reps[l]);
            let dp = geom::add(&reps[k], &reps[l]);
            let rm = geom::norm(&dm);
            let rp = geom::norm(&dp);
            // pairs (x_k, x_l), (−x_k, −x_l), (x_k, −x_l), (−x_k, x_l)
            energy += 2.0 / rm + 2.0 / rp;
            let gm = geom::scale(&dm, -2.0 / (rm * rm * rm));
            let gp = geom::scale(&dp, -2.0 / (rp * rp * rp));
            grad[k] = geom::add(&grad[k], &geom::add(&gm, &gp));
            grad[l] = geom::add(&grad[l], &geom::sub(&gp, &gm));
        }
    }
    for (g, x) in grad.iter_mut().zip(reps) {
        let radial = geom::dot(g, x);
        *g = geom::sub(g, &geom::scale(x, radial));
    }
    (energy, grad)
}

/// Relaxes `n_pairs` antipodal pairs by projected gradient descent on the
/// Coulomb energy. One point per pair is free; its partner is its negation.
/// Steps that raise the energy are rejected and the step size halved, so the
/// recorded energy sequence never increases.
pub fn generate_coulomb(n_pairs: usize, max_iters: usize, seed: u64) -> Result<CoulombRun> {
    if n_pairs < 2 {
        return Err(Error::InvalidArgument("n_pairs must be ≥ 2".into()));
    }
    if max_iters == 0 {
        return Err(Error::InvalidArgument("max_iters must be ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reps: Vec<Vec3> = (0..n_pairs).map(|_| geom::random_unit(&mut rng)).collect();
    let (mut energy, mut grad) = energy_and_gradient(&reps);
    let mut history = vec![energy];
    let mut step = 0.1 / (n_pairs as f64);
    let max_norm = |g: &[Vec3]| g.iter().map(geom::norm).fold(0.0, f64::max);
    let mut gnorm = max_norm(&grad);

    for _ in 0..max_iters {
        if gnorm < GRAD_TOL {
            break;
        }
        let trial: Vec<Vec3> = reps
            .iter()
            .zip(&grad)
            .map(|(x, g)| geom::normalize(&geom::sub(x, &geom::scale(g, step))))
            .collect();
        let (e, g) = energy_and_gradient(&trial);
        if e <= energy {
            reps = trial;
            energy = e;
            grad = g;
            gnorm = max_norm(&grad);
            history.push(energy);
            step *= 1.2;
        } else {
            step *= 0.5;
            if step < 1e-18 {
                break;
            }
        }
    }

    let mut points = Vec::with_capacity(2 * n_pairs);
    let mut pairs = Vec::with_capacity(2 * n_pairs);
    for (k, x) in reps.iter().enumerate() {
        points.push(*x);
        points.push(geom::neg(x));
        pairs.push(2 * k + 1);
        pairs.push(2 * k);
    }
    let grid = SphericalGrid::with_antipodes(
        points,
        GridKind::Coulomb,
        AntipodeMap {
            pairs,
            tolerance: 0.0,
        },
    )?;
    Ok(CoulombRun {
        grid,
        energy_history: history,
        grad_norm: gnorm,
        converged: gnorm < GRAD_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn six_charges_form_octahedron() {
        let run = generate_coulomb(3, 20_000, 1).unwrap();
        assert!(run.converged, "grad norm {}", run.grad_norm);
        let g = &run.grid;
        assert_eq!(g.n_sites(), 6);
        assert!((g.min_pair_angle() - PI / 2.0).abs() < 1e-6);
        // octahedron energy: 12 edges at √2 and 3 diameters at 2
        let octa = 12.0 / 2f64.sqrt() + 3.0 / 2.0;
        assert!((run.energy_history.last().unwrap() - octa).abs() < 1e-9);
    }

    #[test]
    fn energy_never_increases_and_pairs_exact() {
        for seed in 0..4 {
            let run = generate_coulomb(2 + seed as usize * 7, 500, seed).unwrap();
            for w in run.energy_history.windows(2) {
                assert!(w[1] <= w[0]);
            }
            let map = run.grid.antipodes().unwrap();
            assert_eq!(map.tolerance, 0.0);
            for i in 0..run.grid.n_sites() {
                assert_eq!(*run.grid.point(map.partner(i)), geom::neg(run.grid.point(i)));
            }
        }
    }

    #[test]
    fn two_pairs_do_not_exceed_start_energy() {
        let run = generate_coulomb(2, 100, 42).unwrap();
        assert!(run.energy_history.last().unwrap() <= &run.energy_history[0]);
    }

    #[test]
    fn reports_non_convergence() {
        let run = generate_coulomb(40, 1, 3).unwrap();
        assert!(!run.converged);
        assert!(matches!(run.into_result(), Err(Error::NonConvergence { .. })));
    }
}
