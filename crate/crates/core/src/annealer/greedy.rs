use super::{OptimizationResult, Phase, SweepRecord};
use crate::error::Result;
use crate::interaction::ShellTable;
use crate::lawn::{evaluate_probability, FieldTracker, LawnState, SetupKind};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Improvements smaller than this are treated as rounding noise.
const MIN_GAIN: f64 = 1e-14;

/// First-improvement hill climbing over all single moves, visited in a
/// seed-shuffled order, until a full pass changes nothing.
pub fn greedy_descent(
    state: LawnState,
    shells: &ShellTable,
    seed: u64,
) -> Result<OptimizationResult> {
    let mut tracker = FieldTracker::new(state, shells)?;
    let initial_probability = tracker.probability();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = tracker.state().n_sites();
    let setup = tracker.state().setup();
    let mut history = Vec::new();
    let mut applied_total = 0usize;

    // one representative per antipodal pair, per lawn
    let mut pair_moves: Vec<(u8, usize)> = Vec::new();
    if setup.is_antipodal() {
        let lawns: &[u8] = if setup.is_two_lawn() { &[1, 2] } else { &[1] };
        for &lawn in lawns {
            for i in 0..n {
                if tracker.state().antipode(i).is_some_and(|j| i < j) {
                    pair_moves.push((lawn, i));
                }
            }
        }
    }
    let mut sites: Vec<usize> = (0..n).collect();
    let mut partners: Vec<usize> = (0..n).collect();

    loop {
        tracker.refresh();
        let mut applied = 0usize;
        if setup == SetupKind::NonAntipodalOneLawn {
            sites.shuffle(&mut rng);
            partners.shuffle(&mut rng);
            for &on in &sites {
                if tracker.state().spins1()[on] != 1 {
                    continue;
                }
                for &off in &partners {
                    if tracker.state().spins1()[off] != 0 {
                        continue;
                    }
                    let toggles = [(on, -1i8), (off, 1i8)];
                    let delta = tracker.toggles_delta(1, &toggles);
                    if delta > MIN_GAIN {
                        tracker.apply_toggles(1, &toggles, delta);
                        applied += 1;
                        break;
                    }
                }
            }
        } else {
            pair_moves.shuffle(&mut rng);
            for &(lawn, site) in &pair_moves {
                let mv = crate::lawn::Move::PairFlip { lawn, site };
                let (_, toggles) = tracker.state().move_toggles(&mv)?;
                let delta = tracker.toggles_delta(lawn, &toggles);
                if delta > MIN_GAIN {
                    tracker.apply_toggles(lawn, &toggles, delta);
                    applied += 1;
                }
            }
        }
        applied_total += applied;
        let p = tracker.probability();
        history.push(SweepRecord {
            temperature: 0.0,
            current_p: p,
            best_p: p,
            acceptance: applied as f64,
        });
        if applied == 0 {
            break;
        }
    }
    let best_state = tracker.into_state();
    let best_probability = evaluate_probability(&best_state, shells)?;
    Ok(OptimizationResult {
        best_state,
        best_probability,
        initial_probability,
        history,
        phase: Phase::Greedy,
        t_initial: 0.0,
        accepted_moves: applied_total,
    })
}
