//! End-to-end optimisation runs and the hemisphere discretisation scan.

use crate::analysis::hemisphere_reference;
use crate::annealer::{
    anneal, anneal_symmetric, boundary_refine, greedy_descent, AnnealSchedule, OptimizationResult,
    Phase,
};
use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::grid::SphericalGrid;
use crate::interaction::{build_shell_table, ShellTable};
use crate::lawn::{evaluate_probability, hemisphere_lawn, LawnState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryOptions {
    pub k_fold: usize,
    pub axis: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub schedule: AnnealSchedule,
    /// Skip the full anneal and start from the given state as is.
    pub skip_anneal: bool,
    pub refine: bool,
    pub refine_radius: f64,
    pub greedy: bool,
    pub symmetry: Option<SymmetryOptions>,
}

impl PipelineOptions {
    pub fn with_seed(seed: u64) -> Self {
        PipelineOptions {
            schedule: AnnealSchedule::with_seed(seed),
            skip_anneal: false,
            refine: true,
            refine_radius: 1.5,
            greedy: true,
            symmetry: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSummary {
    pub phase: Phase,
    pub initial_p: f64,
    #[serde(rename = "bestP")]
    pub best_p: f64,
    pub sweeps: usize,
    pub accepted_moves: usize,
    pub t_initial: f64,
    pub t_final: f64,
}

impl PhaseSummary {
    fn of(r: &OptimizationResult) -> Self {
        PhaseSummary {
            phase: r.phase,
            initial_p: r.initial_probability,
            best_p: r.best_probability,
            sweeps: r.history.len(),
            accepted_moves: r.accepted_moves,
            t_initial: r.t_initial,
            t_final: r.history.last().map_or(0.0, |h| h.temperature),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub state: LawnState,
    pub initial_probability: f64,
    pub best_probability: f64,
    pub phases: Vec<PhaseSummary>,
}

impl PipelineResult {
    pub fn total_sweeps(&self) -> usize {
        self.phases.iter().map(|p| p.sweeps).sum()
    }

    pub fn final_temperature(&self) -> f64 {
        self.phases.last().map_or(0.0, |p| p.t_final)
    }
}

/// Full anneal (or symmetric anneal), boundary refinement and greedy
/// descent in turn. Later phases use seeds derived from the schedule seed.
pub fn optimize(
    start: LawnState,
    grid: &SphericalGrid,
    shells: &ShellTable,
    options: &PipelineOptions,
) -> Result<PipelineResult> {
    options.schedule.validate()?;
    start.check_grid(grid)?;
    shells.check_grid(grid)?;
    let initial_probability = evaluate_probability(&start, shells)?;
    let seed = options.schedule.seed;
    let mut phases = Vec::new();
    let mut state = start;
    if !options.skip_anneal {
        let r = match &options.symmetry {
            Some(sym) => {
                anneal_symmetric(state, grid, shells, &options.schedule, sym.k_fold, &sym.axis)?
            }
            None => anneal(state, shells, &options.schedule)?,
        };
        phases.push(PhaseSummary::of(&r));
        state = r.best_state;
    }
    if options.refine {
        let schedule = AnnealSchedule {
            seed: seed.wrapping_add(1),
            ..options.schedule.clone()
        };
        let r = boundary_refine(state, grid, shells, &schedule, options.refine_radius)?;
        phases.push(PhaseSummary::of(&r));
        state = r.best_state;
    }
    if options.greedy {
        let r = greedy_descent(state, shells, seed.wrapping_add(2))?;
        phases.push(PhaseSummary::of(&r));
        state = r.best_state;
    }
    let best_probability = evaluate_probability(&state, shells)?;
    Ok(PipelineResult {
        state,
        initial_probability,
        best_probability,
        phases,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HemisphereRow {
    pub theta: f64,
    pub reference: f64,
    pub mean: f64,
    pub std: f64,
    /// Mean of `|P − reference|` over orientations.
    pub mean_abs_dev: f64,
    pub min: f64,
    pub max: f64,
}

/// Hemisphere lawns about `orientations` random axes, evaluated at each
/// angle and compared with `1 − θ/π`. The axes are shared across angles.
pub fn hemisphere_scan(
    grid: &SphericalGrid,
    thetas: &[f64],
    orientations: usize,
    seed: u64,
) -> Result<Vec<HemisphereRow>> {
    if orientations == 0 || thetas.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one angle and one orientation".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axes: Vec<Vec3> = (0..orientations).map(|_| geom::random_unit(&mut rng)).collect();
    let lawns = axes
        .iter()
        .map(|a| hemisphere_lawn(grid, a))
        .collect::<Result<Vec<_>>>()?;
    thetas
        .iter()
        .map(|&theta| {
            let shells = build_shell_table(grid, theta)?;
            let ps = lawns
                .par_iter()
                .map(|l| evaluate_probability(l, &shells))
                .collect::<Result<Vec<f64>>>()?;
            let reference = hemisphere_reference(theta);
            let n = ps.len() as f64;
            let mean = geom::pairwise_sum(&ps) / n;
            let dev: Vec<f64> = ps.iter().map(|p| (p - mean).powi(2)).collect();
            let abs: Vec<f64> = ps.iter().map(|p| (p - reference).abs()).collect();
            Ok(HemisphereRow {
                theta,
                reference,
                mean,
                std: (geom::pairwise_sum(&dev) / n).sqrt(),
                mean_abs_dev: geom::pairwise_sum(&abs) / n,
                min: ps.iter().copied().fold(f64::INFINITY, f64::min),
                max: ps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            })
        })
        .collect()
}
