//! The discrete success functional and its incremental updates.
//!
//! With weights `w_ij` from the shell table and the landing indicator `t`
//! (`t = s1` for one-lawn setups, `t = 1 − s2` otherwise), the success
//! probability is `c · Σ_ij s1_i w_ij t_j` with `c = 4 / (sinθ N² h)`.

use super::{LawnState, Move, SetupKind};
use crate::error::{Error, Result};
use crate::geom;
use crate::grid::SphericalGrid;
use crate::interaction::{kernel_phi, ShellTable};
use rayon::prelude::*;
use std::f64::consts::PI;

fn check_pair(state: &LawnState, shells: &ShellTable) -> Result<()> {
    if state.grid_fingerprint() != shells.grid_fingerprint() || state.n_sites() != shells.n_sites()
    {
        return Err(Error::GridMismatch);
    }
    let theta = shells.theta();
    let h = shells.spacing();
    let max = if state.setup().is_antipodal() { PI - 4.0 * h } else { PI };
    if !(theta.sin() > 0.0 && theta <= max) {
        return Err(Error::JumpUnresolvable {
            theta,
            min: 4.0 * h,
            max,
        });
    }
    Ok(())
}

#[inline]
fn weighted_sum(shells: &ShellTable, i: usize, spins: impl Fn(usize) -> u8) -> f64 {
    let (nb, w) = shells.shell(i);
    let mut acc = 0.0;
    for (&j, &wj) in nb.iter().zip(w) {
        if spins(j as usize) == 1 {
            acc += wj;
        }
    }
    acc
}

fn raw_sum(state: &LawnState, shells: &ShellTable) -> f64 {
    let s1 = state.spins1();
    let per_site: Vec<f64> = (0..state.n_sites())
        .into_par_iter()
        .map(|i| {
            if s1[i] == 1 {
                weighted_sum(shells, i, |j| state.target(j))
            } else {
                0.0
            }
        })
        .collect();
    geom::pairwise_sum(&per_site)
}

/// Discrete success probability of `state` at the table's jump angle.
pub fn evaluate_probability(state: &LawnState, shells: &ShellTable) -> Result<f64> {
    check_pair(state, shells)?;
    Ok(shells.normalization() * raw_sum(state, shells))
}

/// Same value as [`evaluate_probability`] without storing a shell table:
/// kernel weights are recomputed on the fly, which suits grids too large
/// for a table.
pub fn evaluate_probability_streaming(
    state: &LawnState,
    grid: &SphericalGrid,
    theta: f64,
) -> Result<f64> {
    state.check_grid(grid)?;
    crate::interaction::check_resolvable(grid, theta, state.setup().is_antipodal())?;
    let h = grid.spacing();
    let index = grid.index();
    let (r_min, r_max) = ((theta - 2.0 * h).max(0.0), (theta + 2.0 * h).min(PI));
    let s1 = state.spins1();
    let per_site: Vec<f64> = (0..state.n_sites())
        .into_par_iter()
        .map(|i| {
            if s1[i] == 0 {
                return 0.0;
            }
            let mut acc = 0.0;
            index.for_each_in_annulus(grid.point(i), r_min, r_max, |j, d| {
                if j != i && state.target(j) == 1 {
                    acc += kernel_phi((d - theta) / h);
                }
            });
            acc
        })
        .collect();
    let n = state.n_sites() as f64;
    Ok(4.0 / (theta.sin() * n * n * h) * geom::pairwise_sum(&per_site))
}

/// Success probability for a jump of exactly π, where the landing point is
/// the antipode and the smoothed functional is undefined.
pub fn probability_at_antipode(state: &LawnState) -> Result<f64> {
    if state.antipode(0).is_none() {
        return Err(Error::NoAntipodalStructure(
            "jump of π needs an antipode map".into(),
        ));
    }
    let hits = (0..state.n_sites())
        .filter(|&i| state.spins1()[i] == 1)
        .filter_map(|i| state.antipode(i).map(|j| state.target(j) as usize))
        .sum::<usize>();
    Ok(hits as f64 / state.area1() as f64)
}

/// Change in probability caused by `mv`, computed from the shells of the
/// affected sites only.
pub fn delta_probability(state: &LawnState, mv: &Move, shells: &ShellTable) -> Result<f64> {
    check_pair(state, shells)?;
    let (lawn, toggles) = state.move_toggles(mv)?;
    let raw = match (state.setup(), lawn) {
        (SetupKind::AntipodalTwoLawn, 1) => toggles
            .iter()
            .map(|&(a, d)| d as f64 * weighted_sum(shells, a, |j| state.target(j)))
            .sum(),
        (SetupKind::AntipodalTwoLawn, _) => toggles
            .iter()
            .map(|&(b, d)| -(d as f64) * weighted_sum(shells, b, |j| state.spins1()[j]))
            .sum(),
        _ => {
            let linear: f64 = toggles
                .iter()
                .map(|&(a, d)| 2.0 * d as f64 * weighted_sum(shells, a, |j| state.spins1()[j]))
                .sum();
            let (a, da) = toggles[0];
            let (b, db) = toggles[1];
            linear + 2.0 * (da * db) as f64 * shells.weight(a, b)
        }
    };
    Ok(shells.normalization() * raw)
}

/// A lawn state with cached local fields for constant-time move deltas.
///
/// `field1[i] = Σ_j w_ij s1_j`; for two-lawn setups also
/// `field_target[i] = Σ_j w_ij (1 − s2_j)`.
#[derive(Debug, Clone)]
pub struct FieldTracker<'a> {
    state: LawnState,
    shells: &'a ShellTable,
    field1: Vec<f64>,
    field_target: Option<Vec<f64>>,
    raw: f64,
    norm: f64,
}

impl<'a> FieldTracker<'a> {
    pub fn new(state: LawnState, shells: &'a ShellTable) -> Result<Self> {
        check_pair(&state, shells)?;
        let mut t = FieldTracker {
            norm: shells.normalization(),
            state,
            shells,
            field1: Vec::new(),
            field_target: None,
            raw: 0.0,
        };
        t.refresh();
        Ok(t)
    }

    /// Recomputes fields and the total from scratch.
    pub fn refresh(&mut self) {
        let shells = self.shells;
        let state = &self.state;
        self.field1 = (0..state.n_sites())
            .into_par_iter()
            .map(|i| weighted_sum(shells, i, |j| state.spins1()[j]))
            .collect();
        self.field_target = state.setup().is_two_lawn().then(|| {
            (0..state.n_sites())
                .into_par_iter()
                .map(|i| weighted_sum(shells, i, |j| state.target(j)))
                .collect()
        });
        self.raw = raw_sum(state, shells);
    }

    pub fn state(&self) -> &LawnState {
        &self.state
    }

    pub fn into_state(self) -> LawnState {
        self.state
    }

    pub fn shells(&self) -> &'a ShellTable {
        self.shells
    }

    pub fn probability(&self) -> f64 {
        self.norm * self.raw
    }

    /// Probability change of toggling `toggles` (distinct sites) in `lawn`.
    pub fn toggles_delta(&self, lawn: u8, toggles: &[(usize, i8)]) -> f64 {
        let raw = match (&self.field_target, lawn) {
            (Some(g), 1) => toggles.iter().map(|&(a, d)| d as f64 * g[a]).sum(),
            (Some(_), _) => toggles
                .iter()
                .map(|&(b, d)| -(d as f64) * self.field1[b])
                .sum(),
            (None, _) => {
                let mut acc: f64 = toggles
                    .iter()
                    .map(|&(a, d)| 2.0 * d as f64 * self.field1[a])
                    .sum();
                for (k, &(a, da)) in toggles.iter().enumerate() {
                    for &(b, db) in &toggles[k + 1..] {
                        acc += 2.0 * (da * db) as f64 * self.shells.weight(a, b);
                    }
                }
                acc
            }
        };
        self.norm * raw
    }

    /// Applies toggles whose probability change `delta` is already known.
    pub fn apply_toggles(&mut self, lawn: u8, toggles: &[(usize, i8)], delta: f64) {
        let field = match (&mut self.field_target, lawn) {
            (Some(g), 2) => {
                for &(b, d) in toggles {
                    let (nb, w) = self.shells.shell(b);
                    for (&j, &wj) in nb.iter().zip(w) {
                        g[j as usize] -= d as f64 * wj;
                    }
                }
                None
            }
            _ => Some(&mut self.field1),
        };
        if let Some(f) = field {
            for &(a, d) in toggles {
                let (nb, w) = self.shells.shell(a);
                for (&j, &wj) in nb.iter().zip(w) {
                    f[j as usize] += d as f64 * wj;
                }
            }
        }
        self.state.apply_toggles(lawn, toggles);
        self.raw += delta / self.norm;
    }

    pub fn delta(&self, mv: &Move) -> Result<f64> {
        let (lawn, toggles) = self.state.move_toggles(mv)?;
        Ok(self.toggles_delta(lawn, &toggles))
    }

    /// Applies `mv` and returns its probability change.
    pub fn apply(&mut self, mv: &Move) -> Result<f64> {
        let (lawn, toggles) = self.state.move_toggles(mv)?;
        let delta = self.toggles_delta(lawn, &toggles);
        self.apply_toggles(lawn, &toggles, delta);
        Ok(delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::generate_healpix;
    use crate::interaction::build_shell_table;
    use crate::lawn::{hemisphere_lawn, new_random_lawn};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn streaming_matches_table() {
        for setup in [
            SetupKind::AntipodalOneLawn,
            SetupKind::AntipodalTwoLawn,
            SetupKind::NonAntipodalOneLawn,
        ] {
            let (g, t) = setup_grid(8, 0.37 * PI);
            let s = new_random_lawn(&g, setup, 9).unwrap();
            let a = evaluate_probability(&s, &t).unwrap();
            let b = evaluate_probability_streaming(&s, &g, 0.37 * PI).unwrap();
            assert!((a - b).abs() < 1e-13, "{setup}");
        }
    }

    fn setup_grid(n_side: usize, theta: f64) -> (SphericalGrid, ShellTable) {
        let g = generate_healpix(n_side).unwrap();
        let t = build_shell_table(&g, theta).unwrap();
        (g, t)
    }

    #[test]
    fn hemisphere_close_to_continuum() {
        let (g, t) = setup_grid(16, 0.3 * PI);
        let s = hemisphere_lawn(&g, &geom::normalize(&[0.2, 0.5, 0.8])).unwrap();
        let p = evaluate_probability(&s, &t).unwrap();
        assert!((p - 0.7).abs() < 5e-3, "{p}");
    }

    #[test]
    fn empty_second_lawn_normalises_to_one() {
        let (g, t) = setup_grid(16, 0.35 * PI);
        let s1 = new_random_lawn(&g, SetupKind::AntipodalOneLawn, 0)
            .unwrap()
            .spins1()
            .to_vec();
        let s = LawnState::from_spins_unchecked(
            &g,
            SetupKind::AntipodalTwoLawn,
            s1,
            Some(vec![0; g.n_sites()]),
        )
        .unwrap();
        let p = evaluate_probability(&s, &t).unwrap();
        assert!((p - 1.0).abs() < 1e-2, "{p}");
    }

    #[test]
    fn deltas_match_reevaluation() {
        let (g, t) = setup_grid(8, 0.4 * PI);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for setup in [
            SetupKind::AntipodalOneLawn,
            SetupKind::AntipodalTwoLawn,
            SetupKind::NonAntipodalOneLawn,
        ] {
            let mut s = new_random_lawn(&g, setup, 9).unwrap();
            let mut tracker = FieldTracker::new(s.clone(), &t).unwrap();
            for _ in 0..200 {
                let mv = s.random_move(&mut rng);
                let before = evaluate_probability(&s, &t).unwrap();
                let d = delta_probability(&s, &mv, &t).unwrap();
                let dt = tracker.apply(&mv).unwrap();
                s.apply_move(&mv).unwrap();
                let after = evaluate_probability(&s, &t).unwrap();
                assert!((before + d - after).abs() <= 1e-12 * after.abs().max(1.0));
                assert!((d - dt).abs() <= 1e-12);
                assert!((tracker.probability() - after).abs() <= 1e-11);
            }
            assert_eq!(tracker.state(), &s);
        }
    }

    #[test]
    fn inverse_moves_cancel() {
        let (g, t) = setup_grid(8, 0.3 * PI);
        let mut s = new_random_lawn(&g, SetupKind::AntipodalOneLawn, 1).unwrap();
        let mv = Move::PairFlip { lawn: 1, site: 40 };
        let d1 = delta_probability(&s, &mv, &t).unwrap();
        s.apply_move(&mv).unwrap();
        let d2 = delta_probability(&s, &mv, &t).unwrap();
        assert!((d1 + d2).abs() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_grid_and_antipodal_near_pi() {
        let (g, t) = setup_grid(8, 0.3 * PI);
        let other = generate_healpix(4).unwrap();
        let s = new_random_lawn(&other, SetupKind::AntipodalOneLawn, 1).unwrap();
        assert_eq!(evaluate_probability(&s, &t), Err(Error::GridMismatch));
        let near_pi = build_shell_table(&g, PI - 2.0 * g.spacing()).unwrap();
        let s = new_random_lawn(&g, SetupKind::AntipodalOneLawn, 1).unwrap();
        assert!(matches!(
            evaluate_probability(&s, &near_pi),
            Err(Error::JumpUnresolvable { .. })
        ));
        let full = build_shell_table(&g, PI).unwrap();
        assert!(evaluate_probability(&s, &full).is_err());
    }

    #[test]
    fn antipode_jump_values() {
        let g = generate_healpix(4).unwrap();
        let s = new_random_lawn(&g, SetupKind::AntipodalOneLawn, 2).unwrap();
        assert_eq!(probability_at_antipode(&s).unwrap(), 0.0);
        let s1 = s.spins1().to_vec();
        let same =
            LawnState::from_spins(&g, SetupKind::AntipodalTwoLawn, s1.clone(), Some(s1)).unwrap();
        assert_eq!(probability_at_antipode(&same).unwrap(), 1.0);
    }
}
