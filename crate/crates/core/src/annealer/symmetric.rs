use super::{run_chain, unit_axis, AnnealSchedule, OptimizationResult, Phase, Proposer};
use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::grid::{SiteIndex, SphericalGrid};
use crate::interaction::ShellTable;
use crate::lawn::{hemisphere_lawn, FieldTracker, LawnState};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Approximate k-fold rotation orbits of antipodal site pairs.
///
/// Each pair is represented by its member on the `+axis` side. Sites are
/// rotated back into the wedge `[0, 2π/k)` of azimuth about `axis` and
/// attached to the nearest representative inside that wedge.
#[derive(Debug, Clone)]
pub struct SymmetryOrbits {
    pub k_fold: usize,
    pub axis: Vec3,
    orbits: Vec<Vec<usize>>,
    orbit_of: Vec<usize>,
}

impl SymmetryOrbits {
    pub fn build(grid: &SphericalGrid, k_fold: usize, axis: &Vec3) -> Result<Self> {
        if k_fold == 0 {
            return Err(Error::SymmetryIncompatible("k_fold must be ≥ 1".into()));
        }
        let axis = unit_axis(axis)?;
        let north = hemisphere_lawn(grid, &axis)?;
        let frame = geom::Frame::new(&axis);
        let wedge = 2.0 * PI / k_fold as f64;
        let sector = |p: &Vec3| {
            let q = frame.local(p);
            let az = q[1].atan2(q[0]).rem_euclid(2.0 * PI);
            ((az / wedge) as usize).min(k_fold - 1)
        };
        let northern: Vec<usize> = (0..grid.n_sites())
            .filter(|&i| north.spins1()[i] == 1)
            .collect();
        let reps = SiteIndex::new(
            northern
                .iter()
                .filter(|&&i| sector(grid.point(i)) == 0)
                .map(|&i| (i, *grid.point(i))),
            grid.spacing(),
        );
        if reps.is_empty() {
            return Err(Error::SymmetryIncompatible("empty fundamental wedge".into()));
        }
        let mut orbit_id = vec![usize::MAX; grid.n_sites()];
        let mut orbits: Vec<Vec<usize>> = Vec::new();
        let mut rep_slot = std::collections::HashMap::new();
        for &i in &northern {
            let p = grid.point(i);
            let m = sector(p);
            let back = geom::rotate(p, &axis, -(m as f64) * wedge);
            let (rep, _) = reps.nearest(&back).expect("non-empty wedge");
            let slot = *rep_slot.entry(rep).or_insert_with(|| {
                orbits.push(Vec::new());
                orbits.len() - 1
            });
            orbits[slot].push(i);
            orbit_id[i] = slot;
        }
        let pairs = &grid.antipodes().expect("hemisphere lawn implies pairs").pairs;
        for &i in &northern {
            orbit_id[pairs[i]] = orbit_id[i];
        }
        Ok(SymmetryOrbits {
            k_fold,
            axis,
            orbits,
            orbit_of: orbit_id,
        })
    }

    pub fn n_orbits(&self) -> usize {
        self.orbits.len()
    }

    /// Representative (`+axis` side) sites of orbit `o`.
    pub fn orbit(&self, o: usize) -> &[usize] {
        &self.orbits[o]
    }

    pub fn orbit_of(&self, site: usize) -> usize {
        self.orbit_of[site]
    }

    /// Copies the spin of each orbit's first member to the whole orbit.
    pub fn symmetrize(&self, state: &LawnState, grid: &SphericalGrid) -> Result<LawnState> {
        let pairs = &grid
            .antipodes()
            .ok_or_else(|| Error::NoAntipodalStructure("symmetric lawns need pairs".into()))?
            .pairs;
        let fill = |src: &[u8]| {
            let mut s = src.to_vec();
            for orbit in &self.orbits {
                let v = src[orbit[0]];
                for &i in orbit {
                    s[i] = v;
                    s[pairs[i]] = 1 - v;
                }
            }
            s
        };
        let s1 = fill(state.spins1());
        let s2 = state.setup().is_two_lawn().then(|| fill(state.spins2()));
        LawnState::from_spins(grid, state.setup(), s1, s2)
    }
}

struct OrbitProposer<'o> {
    orbits: &'o SymmetryOrbits,
    two_lawn: bool,
}

impl Proposer for OrbitProposer<'_> {
    fn proposals_per_sweep(&self) -> usize {
        self.orbits.n_orbits()
    }

    fn propose(
        &mut self,
        tracker: &FieldTracker,
        rng: &mut ChaCha8Rng,
        toggles: &mut Vec<(usize, i8)>,
    ) -> Option<u8> {
        let lawn: u8 = if self.two_lawn { rng.gen_range(1..=2) } else { 1 };
        let o = rng.gen_range(0..self.orbits.n_orbits());
        let state = tracker.state();
        let s = state.spins(lawn);
        toggles.clear();
        for &i in self.orbits.orbit(o) {
            let j = state.antipode(i)?;
            let d = if s[i] == 1 { -1 } else { 1 };
            toggles.push((i, d));
            toggles.push((j, -d));
        }
        Some(lawn)
    }
}

/// Annealing constrained to lawns invariant under `k_fold` rotations about
/// `axis`. The start state is symmetrised first; each move flips a whole
/// orbit of antipodal pairs. Only antipodal setups are supported.
pub fn anneal_symmetric(
    state: LawnState,
    grid: &SphericalGrid,
    shells: &ShellTable,
    schedule: &AnnealSchedule,
    k_fold: usize,
    axis: &Vec3,
) -> Result<OptimizationResult> {
    if !state.setup().is_antipodal() {
        return Err(Error::SymmetryIncompatible(
            "orbit moves cannot conserve area without the antipodal pairing".into(),
        ));
    }
    state.check_grid(grid)?;
    let orbits = SymmetryOrbits::build(grid, k_fold, axis)?;
    let start = orbits.symmetrize(&state, grid)?;
    let mut proposer = OrbitProposer {
        orbits: &orbits,
        two_lawn: start.setup().is_two_lawn(),
    };
    run_chain(start, shells, schedule, Phase::SymmetricAnneal, &mut proposer, 5.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::generate_healpix;
    use crate::interaction::build_shell_table;
    use crate::lawn::{new_random_lawn, SetupKind};

    #[test]
    fn orbits_partition_pairs() {
        let g = generate_healpix(8).unwrap();
        let axis = geom::normalize(&[0.1, 0.2, 0.9]);
        for k in [1, 5, 7] {
            let o = SymmetryOrbits::build(&g, k, &axis).unwrap();
            let total: usize = (0..o.n_orbits()).map(|i| o.orbit(i).len()).sum();
            assert_eq!(total, g.n_sites() / 2);
            if k == 1 {
                assert_eq!(o.n_orbits(), g.n_sites() / 2);
            } else {
                let mean = total as f64 / o.n_orbits() as f64;
                assert!((mean - k as f64).abs() < 0.5 * k as f64, "k={k} mean {mean}");
            }
        }
    }

    #[test]
    fn symmetric_anneal_keeps_symmetry() {
        let g = generate_healpix(8).unwrap();
        let t = build_shell_table(&g, 0.3 * PI).unwrap();
        let s = new_random_lawn(&g, SetupKind::AntipodalOneLawn, 1).unwrap();
        let sched = AnnealSchedule {
            cooling: 0.8,
            sweeps_per_temperature: 2,
            ..AnnealSchedule::with_seed(3)
        };
        let axis = [0.0, 0.0, 1.0];
        let r = anneal_symmetric(s, &g, &t, &sched, 5, &axis).unwrap();
        r.best_state.validate().unwrap();
        let o = SymmetryOrbits::build(&g, 5, &axis).unwrap();
        for k in 0..o.n_orbits() {
            let orbit = o.orbit(k);
            assert!(orbit.iter().all(|&i| r.best_state.spins1()[i] == r.best_state.spins1()[orbit[0]]));
        }
        assert!(r.best_probability > r.initial_probability);
    }

    #[test]
    fn refuses_non_antipodal_and_zero_fold() {
        let g = generate_healpix(4).unwrap();
        let t = build_shell_table(&g, 0.4 * PI).unwrap();
        let s = new_random_lawn(&g, SetupKind::NonAntipodalOneLawn, 1).unwrap();
        let sched = AnnealSchedule::default();
        assert!(matches!(
            anneal_symmetric(s, &g, &t, &sched, 3, &[0.0, 0.0, 1.0]),
            Err(Error::SymmetryIncompatible(_))
        ));
        assert!(matches!(
            SymmetryOrbits::build(&g, 0, &[0.0, 0.0, 1.0]),
            Err(Error::SymmetryIncompatible(_))
        ));
    }
}
