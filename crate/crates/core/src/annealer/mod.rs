//! Simulated annealing over lawn states, boundary refinement, greedy descent
//! and k-fold symmetric annealing.

mod greedy;
mod symmetric;

pub use greedy::greedy_descent;
pub use symmetric::{anneal_symmetric, SymmetryOrbits};

use crate::error::{Error, Result};
use crate::geom;
use crate::grid::SphericalGrid;
use crate::interaction::ShellTable;
use crate::lawn::{evaluate_probability, FieldTracker, LawnState, SetupKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Geometric cooling schedule. Unset temperatures are tuned from the start
/// state: `t_initial` from the mean `|ΔP|` of sampled moves, `t_min` as
/// `t_initial · 1e-4`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub t_initial: Option<f64>,
    pub t_min: Option<f64>,
    pub cooling: f64,
    pub sweeps_per_temperature: usize,
    pub seed: u64,
    /// Sweeps without a new best before stopping (counted once the
    /// temperature is below `stall_ratio · t_initial`).
    pub stall_limit: usize,
    pub stall_ratio: f64,
    /// Hard cap on the number of sweeps.
    pub max_sweeps: Option<usize>,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule {
            t_initial: None,
            t_min: None,
            cooling: 0.98,
            sweeps_per_temperature: 10,
            seed: 0,
            stall_limit: 50,
            stall_ratio: 1e-2,
            max_sweeps: None,
        }
    }
}

impl AnnealSchedule {
    pub fn with_seed(seed: u64) -> Self {
        AnnealSchedule {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("schedule: {m}")));
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return bad("cooling must lie in (0, 1)");
        }
        if self.sweeps_per_temperature == 0 || self.stall_limit == 0 {
            return bad("sweep counts must be ≥ 1");
        }
        if let Some(t) = self.t_initial {
            if !(t > 0.0) {
                return bad("t_initial must be positive");
            }
        }
        if let (Some(t0), Some(t1)) = (self.t_initial, self.t_min) {
            if !(t1 < t0 && t1 > 0.0) {
                return bad("need 0 < t_min < t_initial");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    FullAnneal,
    BoundaryAnneal,
    Greedy,
    SymmetricAnneal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRecord {
    pub temperature: f64,
    pub current_p: f64,
    pub best_p: f64,
    pub acceptance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationResult {
    #[serde(skip)]
    pub best_state: LawnState,
    pub best_probability: f64,
    pub initial_probability: f64,
    pub history: Vec<SweepRecord>,
    pub phase: Phase,
    pub t_initial: f64,
    pub accepted_moves: usize,
}

/// Draws proposals as lists of spin toggles on one lawn.
pub(crate) trait Proposer {
    /// Called before each sweep with the current state.
    fn begin_sweep(&mut self, _tracker: &FieldTracker) {}
    fn proposals_per_sweep(&self) -> usize;
    /// Fills `toggles` and returns the lawn, or `None` if nothing can move.
    fn propose(
        &mut self,
        tracker: &FieldTracker,
        rng: &mut ChaCha8Rng,
        toggles: &mut Vec<(usize, i8)>,
    ) -> Option<u8>;
}

/// Plain single-move proposals for the setup.
struct UniformProposer {
    per_sweep: usize,
}

impl Proposer for UniformProposer {
    fn proposals_per_sweep(&self) -> usize {
        self.per_sweep
    }

    fn propose(
        &mut self,
        tracker: &FieldTracker,
        rng: &mut ChaCha8Rng,
        toggles: &mut Vec<(usize, i8)>,
    ) -> Option<u8> {
        let mv = tracker.state().random_move(rng);
        let (lawn, t) = tracker.state().move_toggles(&mv).ok()?;
        toggles.clear();
        toggles.extend_from_slice(&t);
        Some(lawn)
    }
}

const TUNING_SAMPLES: usize = 1000;
const REFRESH_EVERY: usize = 25;

fn tune_temperature(
    tracker: &FieldTracker,
    proposer: &mut dyn Proposer,
    rng: &mut ChaCha8Rng,
    factor: f64,
) -> Option<f64> {
    let mut toggles = Vec::new();
    let mut total = 0.0;
    let mut count = 0usize;
    for _ in 0..TUNING_SAMPLES {
        if let Some(lawn) = proposer.propose(tracker, rng, &mut toggles) {
            total += tracker.toggles_delta(lawn, &toggles).abs();
            count += 1;
        }
    }
    (count > 0 && total > 0.0).then(|| factor * total / count as f64)
}

/// Metropolis chain shared by all annealing phases.
pub(crate) fn run_chain(
    state: LawnState,
    shells: &ShellTable,
    schedule: &AnnealSchedule,
    phase: Phase,
    proposer: &mut dyn Proposer,
    tuning_factor: f64,
) -> Result<OptimizationResult> {
    schedule.validate()?;
    let mut tracker = FieldTracker::new(state, shells)?;
    let initial_probability = tracker.probability();
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    proposer.begin_sweep(&tracker);

    let unchanged = |tracker: FieldTracker, t0: f64| OptimizationResult {
        best_probability: initial_probability,
        initial_probability,
        best_state: tracker.into_state(),
        history: Vec::new(),
        phase,
        t_initial: t0,
        accepted_moves: 0,
    };

    let t_initial = match schedule.t_initial {
        Some(t) => t,
        None => match tune_temperature(&tracker, proposer, &mut rng, tuning_factor) {
            Some(t) => t,
            None => return Ok(unchanged(tracker, 0.0)),
        },
    };
    let t_min = schedule.t_min.unwrap_or(t_initial * 1e-4);
    let stall_below = schedule.stall_ratio * t_initial;

    let mut best_state = tracker.state().clone();
    let mut best_p = initial_probability;
    let mut history = Vec::new();
    let mut toggles = Vec::new();
    let mut temperature = t_initial;
    let mut stall = 0usize;
    let mut sweep = 0usize;
    let mut accepted_total = 0usize;

    'outer: while temperature >= t_min {
        for _ in 0..schedule.sweeps_per_temperature {
            if schedule.max_sweeps.is_some_and(|m| sweep >= m) {
                break 'outer;
            }
            proposer.begin_sweep(&tracker);
            let n_prop = proposer.proposals_per_sweep();
            if n_prop == 0 {
                break 'outer;
            }
            let mut accepted = 0usize;
            for _ in 0..n_prop {
                let Some(lawn) = proposer.propose(&tracker, &mut rng, &mut toggles) else {
                    continue;
                };
                let delta = tracker.toggles_delta(lawn, &toggles);
                if delta >= 0.0 || rng.gen::<f64>() < (delta / temperature).exp() {
                    tracker.apply_toggles(lawn, &toggles, delta);
                    accepted += 1;
                }
            }
            sweep += 1;
            accepted_total += accepted;
            if sweep % REFRESH_EVERY == 0 {
                tracker.refresh();
            }
            let current = tracker.probability();
            if current > best_p {
                best_p = current;
                best_state = tracker.state().clone();
                stall = 0;
            } else if temperature < stall_below {
                stall += 1;
            }
            history.push(SweepRecord {
                temperature,
                current_p: current,
                best_p,
                acceptance: accepted as f64 / n_prop as f64,
            });
            if stall >= schedule.stall_limit {
                break 'outer;
            }
        }
        temperature *= schedule.cooling;
    }

    // exact value of the stored state, free of accumulated rounding
    let exact = evaluate_probability(&best_state, shells)?;
    Ok(OptimizationResult {
        best_probability: exact,
        best_state,
        initial_probability,
        history,
        phase,
        t_initial,
        accepted_moves: accepted_total,
    })
}

/// Full simulated annealing with single-move proposals.
pub fn anneal(
    state: LawnState,
    shells: &ShellTable,
    schedule: &AnnealSchedule,
) -> Result<OptimizationResult> {
    let mut proposer = UniformProposer {
        per_sweep: (state.n_sites() / 2).max(1),
    };
    run_chain(state, shells, schedule, Phase::FullAnneal, &mut proposer, 5.0)
}

/// Restricts proposals to sites within `radius` of an opposite spin.
struct BoundaryProposer {
    near: Vec<Vec<u32>>,
    setup: SetupKind,
    per_sweep: usize,
    /// Boundary sites per lawn (index 0 → lawn 1).
    boundary: [Vec<usize>; 2],
    ones: Vec<usize>,
    zeros: Vec<usize>,
}

impl BoundaryProposer {
    fn collect(&self, spins: &[u8]) -> Vec<usize> {
        (0..spins.len())
            .filter(|&i| self.near[i].iter().any(|&j| spins[j as usize] != spins[i]))
            .collect()
    }
}

impl Proposer for BoundaryProposer {
    fn begin_sweep(&mut self, tracker: &FieldTracker) {
        let state = tracker.state();
        self.boundary[0] = self.collect(state.spins1());
        self.boundary[1] = if self.setup.is_two_lawn() {
            self.collect(state.spins2())
        } else {
            Vec::new()
        };
        if self.setup == SetupKind::NonAntipodalOneLawn {
            let s = state.spins1();
            let (ones, zeros): (Vec<usize>, Vec<usize>) =
                self.boundary[0].iter().partition(|&&i| s[i] == 1);
            self.ones = ones;
            self.zeros = zeros;
        }
    }

    fn proposals_per_sweep(&self) -> usize {
        if self.boundary[0].is_empty() && self.boundary[1].is_empty() {
            0
        } else {
            self.per_sweep
        }
    }

    fn propose(
        &mut self,
        tracker: &FieldTracker,
        rng: &mut ChaCha8Rng,
        toggles: &mut Vec<(usize, i8)>,
    ) -> Option<u8> {
        let state = tracker.state();
        toggles.clear();
        match self.setup {
            SetupKind::NonAntipodalOneLawn => {
                if self.ones.is_empty() || self.zeros.is_empty() {
                    return None;
                }
                let on = self.ones[rng.gen_range(0..self.ones.len())];
                let off = self.zeros[rng.gen_range(0..self.zeros.len())];
                // lists are refreshed per sweep; skip entries that went stale
                if state.spins1()[on] != 1 || state.spins1()[off] != 0 {
                    return None;
                }
                toggles.extend_from_slice(&[(on, -1), (off, 1)]);
                Some(1)
            }
            _ => {
                let lawn: u8 = if self.setup.is_two_lawn() { rng.gen_range(1..=2) } else { 1 };
                let list = &self.boundary[lawn as usize - 1];
                if list.is_empty() {
                    return None;
                }
                let site = list[rng.gen_range(0..list.len())];
                let mv = crate::lawn::Move::PairFlip { lawn, site };
                let (_, t) = state.move_toggles(&mv).ok()?;
                toggles.extend_from_slice(&t);
                Some(lawn)
            }
        }
    }
}

/// Sites within `radius` of each site (excluding itself).
pub(crate) fn near_lists(grid: &SphericalGrid, radius: f64) -> Vec<Vec<u32>> {
    let index = grid.index();
    (0..grid.n_sites())
        .map(|i| {
            let mut v = Vec::new();
            index.for_each_in_annulus(grid.point(i), 0.0, radius, |j, _| {
                if j != i {
                    v.push(j as u32);
                }
            });
            v.sort_unstable();
            v
        })
        .collect()
}

/// Annealing restricted to the lawn boundary: only sites within
/// `radius_factor · h` of an opposite-spin site are proposed. Starts colder
/// than a full anneal so the bulk shape is kept.
pub fn boundary_refine(
    state: LawnState,
    grid: &SphericalGrid,
    shells: &ShellTable,
    schedule: &AnnealSchedule,
    radius_factor: f64,
) -> Result<OptimizationResult> {
    if !(radius_factor >= 1.0) {
        return Err(Error::InvalidArgument("radius_factor must be ≥ 1".into()));
    }
    state.check_grid(grid)?;
    let mut proposer = BoundaryProposer {
        near: near_lists(grid, radius_factor * grid.spacing()),
        setup: state.setup(),
        per_sweep: (state.n_sites() / 2).max(1),
        boundary: [Vec::new(), Vec::new()],
        ones: Vec::new(),
        zeros: Vec::new(),
    };
    run_chain(state, shells, schedule, Phase::BoundaryAnneal, &mut proposer, 0.5)
}

/// Boundary sites of lawn 1: sites within `radius` of an opposite spin.
pub fn boundary_sites(state: &LawnState, grid: &SphericalGrid, radius: f64) -> Vec<usize> {
    let near = near_lists(grid, radius);
    let s = state.spins1();
    (0..s.len())
        .filter(|&i| near[i].iter().any(|&j| s[j as usize] != s[i]))
        .collect()
}

/// Normalised copy of a user-supplied direction.
pub(crate) fn unit_axis(axis: &geom::Vec3) -> Result<geom::Vec3> {
    let n = geom::norm(axis);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidArgument("axis must be a non-zero vector".into()));
    }
    Ok(geom::scale(axis, 1.0 / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::generate_healpix;
    use crate::interaction::build_shell_table;
    use crate::lawn::new_random_lawn;
    use std::f64::consts::PI;

    fn quick(seed: u64) -> AnnealSchedule {
        AnnealSchedule {
            cooling: 0.8,
            sweeps_per_temperature: 2,
            ..AnnealSchedule::with_seed(seed)
        }
    }

    #[test]
    fn anneal_improves_and_is_reproducible() {
        let g = generate_healpix(8).unwrap();
        let t = build_shell_table(&g, 0.3 * PI).unwrap();
        for setup in [
            SetupKind::AntipodalOneLawn,
            SetupKind::AntipodalTwoLawn,
            SetupKind::NonAntipodalOneLawn,
        ] {
            let s = new_random_lawn(&g, setup, 1).unwrap();
            let a = anneal(s.clone(), &t, &quick(5)).unwrap();
            let b = anneal(s, &t, &quick(5)).unwrap();
            assert!(a.best_probability > a.initial_probability + 0.05, "{setup}");
            assert_eq!(a.best_state, b.best_state);
            assert_eq!(a.history, b.history);
            a.best_state.validate().unwrap();
            for w in a.history.windows(2) {
                assert!(w[1].best_p >= w[0].best_p);
            }
            let exact = evaluate_probability(&a.best_state, &t).unwrap();
            assert!((exact - a.best_probability).abs() < 1e-12);
        }
    }

    #[test]
    fn initial_acceptance_is_high() {
        let g = generate_healpix(8).unwrap();
        let t = build_shell_table(&g, 0.3 * PI).unwrap();
        let s = new_random_lawn(&g, SetupKind::AntipodalOneLawn, 2).unwrap();
        let r = anneal(s, &t, &quick(1)).unwrap();
        assert!(r.history[0].acceptance >= 0.5, "{}", r.history[0].acceptance);
    }

    #[test]
    fn boundary_refine_never_loses() {
        let g = generate_healpix(8).unwrap();
        let t = build_shell_table(&g, 0.3 * PI).unwrap();
        let s = new_random_lawn(&g, SetupKind::AntipodalOneLawn, 3).unwrap();
        let a = anneal(s, &t, &quick(2)).unwrap();
        let b = boundary_refine(a.best_state.clone(), &g, &t, &quick(3), 1.5).unwrap();
        assert!(b.best_probability >= a.best_probability - 1e-12);
        let c = boundary_refine(a.best_state, &g, &t, &quick(3), 1.5).unwrap();
        assert_eq!(b.best_state, c.best_state);
        assert_eq!(b.phase, Phase::BoundaryAnneal);
    }

    #[test]
    fn schedule_validation() {
        let mut s = AnnealSchedule::default();
        s.cooling = 1.0;
        assert!(s.validate().is_err());
        let s = AnnealSchedule {
            t_initial: Some(1.0),
            t_min: Some(2.0),
            ..AnnealSchedule::default()
        };
        assert!(s.validate().is_err());
    }
}
