use crate::args::*;
use crate::output::{outcome, CliError, CliResult, OutDir};
use grasshopper::analysis::{
    count_cogs, count_cogs_about, count_stripes, compare_regular_stripes, default_bins,
    extract_boundary, hemisphere_reference, planar_stripe_derivative, planar_stripe_optimum,
    planar_stripe_success, alignment_axis, CogReport, StripeReport,
};
use grasshopper::annealer::AnnealSchedule;
use grasshopper::cogs::{deficit_scan, write_deficit_csv};
use grasshopper::grid::{
    generate_coulomb, generate_goldberg, generate_healpix, load_point_set, write_point_set,
};
use grasshopper::interaction::{build_shell_table, potential_energies_from, resolvable_range};
use grasshopper::lawn::{
    evaluate_probability, evaluate_probability_streaming, hemisphere_lawn, mc_oracle_probability,
    new_random_lawn, read_lawn, write_lawn, Checkpoint, LawnHeader, LawnState, SetupKind,
};
use grasshopper::pipeline::{hemisphere_scan, optimize, PipelineOptions, SymmetryOptions};
use grasshopper::spectral::{
    ell_star, parseval_residual, probability_upper_bound, sph_transform, spectral_probability,
    two_lawn_upper_bound, write_spectrum, Parity,
};
use grasshopper::{GridKind, SphericalGrid};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::Path;

/// Degree cutoff for reported spectral bounds.
const BOUND_ELL_MAX: usize = 63;
/// Above this size the functional is evaluated without a stored table.
const STREAMING_SITES: usize = 50_000;

pub fn run(cli: Cli) -> CliResult<Value> {
    match cli.command {
        Command::Grid(a) => grid(&a),
        Command::Anneal(a) => anneal(&a),
        Command::Evaluate(a) => evaluate(&a),
        Command::Diagnose(DiagnoseCommand::Hemisphere(a)) => diagnose_hemisphere(&a),
        Command::Diagnose(DiagnoseCommand::Energies(a)) => diagnose_energies(&a),
        Command::Analyze(a) => analyze(&a),
        Command::Spectral(a) => spectral(&a),
        Command::Cogs(a) => cogs(&a),
        Command::StripesModel(a) => stripes_model(&a),
        Command::Sweep(a) => sweep(&a),
    }
}

/// Builds a grid from `healpix:<n>`, `goldberg:<f>`,
/// `coulomb:<pairs>[:seed[:iters]]` or `file:<path>[:kind]`.
pub fn load_grid(spec: &str) -> CliResult<SphericalGrid> {
    let (family, rest) = spec
        .split_once(':')
        .ok_or_else(|| CliError::bad_flag(format!("grid `{spec}` needs the form <family>:<size>")))?;
    let number = |s: &str| -> CliResult<usize> {
        s.parse()
            .map_err(|_| CliError::bad_flag(format!("grid `{spec}`: `{s}` is not a count")))
    };
    let grid = match family {
        "healpix" => generate_healpix(number(rest)?)?,
        "goldberg" => generate_goldberg(number(rest)?)?,
        "coulomb" => {
            let parts: Vec<&str> = rest.split(':').collect();
            let pairs = number(parts[0])?;
            let seed = parts.get(1).map(|s| number(s)).transpose()?.unwrap_or(0) as u64;
            let iters = parts.get(2).map(|s| number(s)).transpose()?.unwrap_or(2000);
            generate_coulomb(pairs, iters, seed)?.into_result()?
        }
        "file" => {
            let (path, kind) = match rest.rsplit_once(':') {
                Some((p, k)) if k.parse::<GridKind>().is_ok() => (p, k.parse::<GridKind>()?),
                _ => (rest, GridKind::Custom),
            };
            load_point_set(path, kind)?
        }
        other => return Err(CliError::bad_flag(format!("unknown grid family `{other}`"))),
    };
    Ok(grid)
}

fn load_lawn(
    path: &Path,
    grid: &SphericalGrid,
) -> CliResult<(LawnState, LawnHeader, Option<Checkpoint>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new("Io", format!("{}: {e}", path.display())))?;
    Ok(read_lawn(&text, grid)?)
}

fn check_angle(theta: f64) -> CliResult<f64> {
    if theta > 0.0 && theta < std::f64::consts::PI {
        Ok(theta)
    } else {
        Err(CliError::bad_flag(format!("jump angle {theta} outside (0, π)")))
    }
}

/// Spectral bound on the success probability for the setup.
pub fn upper_bound(setup: SetupKind, theta: f64) -> Option<f64> {
    match setup {
        SetupKind::AntipodalOneLawn => probability_upper_bound(theta, BOUND_ELL_MAX, Parity::OddOnly).ok(),
        SetupKind::NonAntipodalOneLawn => probability_upper_bound(theta, BOUND_ELL_MAX, Parity::All).ok(),
        SetupKind::AntipodalTwoLawn => two_lawn_upper_bound(theta, BOUND_ELL_MAX).ok(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ShapeSummary {
    /// `cogs`, `stripes`, `none` or `two-lawn`.
    pub class: &'static str,
    pub count: Option<usize>,
    pub cogs: Option<CogReport>,
    pub stripes: Option<StripeReport>,
}

impl ShapeSummary {
    fn label(&self) -> String {
        match self.count {
            Some(n) => format!("{}:{n}", self.class),
            None => self.class.to_string(),
        }
    }
}

/// Cogs when the boundary has a significant wavenumber, else stripes when
/// the lawn is zonal, else `none`.
pub fn classify_shape(state: &LawnState, grid: &SphericalGrid, theta: f64) -> ShapeSummary {
    if state.setup().is_two_lawn() {
        return ShapeSummary { class: "two-lawn", count: None, cogs: None, stripes: None };
    }
    if let Ok(c) = count_cogs(state, grid, theta) {
        if c.cog_count > 0 {
            return ShapeSummary { class: "cogs", count: Some(c.cog_count), cogs: Some(c), stripes: None };
        }
    }
    if let Ok(s) = count_stripes(state, grid, theta) {
        return ShapeSummary { class: "stripes", count: Some(s.stripe_count), cogs: None, stripes: Some(s) };
    }
    ShapeSummary { class: "none", count: None, cogs: None, stripes: None }
}

fn schedule_of(s: &ScheduleArgs, seed: u64) -> AnnealSchedule {
    AnnealSchedule {
        t_initial: s.t_initial,
        t_min: s.t_min,
        cooling: s.cooling,
        sweeps_per_temperature: s.sweeps_per_temp,
        seed,
        stall_limit: s.stall_limit,
        max_sweeps: s.max_sweeps,
        ..AnnealSchedule::default()
    }
}

fn options_of(s: &ScheduleArgs, p: &PhaseArgs, seed: u64) -> CliResult<PipelineOptions> {
    let schedule = schedule_of(s, seed);
    schedule.validate()?;
    Ok(PipelineOptions {
        schedule,
        skip_anneal: p.no_anneal,
        refine: !p.no_refine,
        refine_radius: p.refine_radius,
        greedy: !p.no_greedy,
        symmetry: p.symmetry.map(|k_fold| SymmetryOptions {
            k_fold,
            axis: p.axis.unwrap_or([0.0, 0.0, 1.0]),
        }),
    })
}

fn start_state(
    init: &str,
    grid: &SphericalGrid,
    setup: SetupKind,
    seed: u64,
    axis: Option<[f64; 3]>,
) -> CliResult<LawnState> {
    match init {
        "random" => Ok(new_random_lawn(grid, setup, seed)?),
        "hemisphere" => {
            let h = hemisphere_lawn(grid, &axis.unwrap_or([0.0, 0.0, 1.0]))?;
            let s1 = h.spins1().to_vec();
            // a two-lawn jump succeeds off lawn 2, so start it as the complement
            let s2 = setup.is_two_lawn().then(|| s1.iter().map(|&v| 1 - v).collect());
            Ok(LawnState::from_spins(grid, setup, s1, s2)?)
        }
        path => {
            let (state, _, _) = load_lawn(Path::new(path), grid)?;
            if state.setup() != setup {
                return Err(CliError::bad_flag(format!(
                    "lawn file has setup {} but --setup is {setup}",
                    state.setup()
                )));
            }
            Ok(state)
        }
    }
}

fn grid(a: &GridArgs) -> CliResult<Value> {
    let g = load_grid(&a.grid)?;
    let mut out = OutDir::create(&a.out)?;
    out.write("grid.txt", &write_point_set(&g, a.with_antipodes))?;
    let (lo, hi) = resolvable_range(&g, g.antipodes().is_some());
    out.finish(
        "grid",
        a,
        None,
        Some(g.fingerprint()),
        Value::Null,
        json!({
            "kind": g.kind(),
            "n_sites": g.n_sites(),
            "spacing": g.spacing(),
            "min_pair_angle": g.min_pair_angle(),
            "antipodal": g.antipodes().is_some(),
            "resolvable": [lo, hi],
        }),
    )
}

fn anneal(a: &AnnealArgs) -> CliResult<Value> {
    let theta = check_angle(a.theta)?;
    let g = load_grid(&a.grid)?;
    let shells = build_shell_table(&g, theta)?;
    let options = options_of(&a.schedule, &a.phases, a.seed)?;
    let start = start_state(&a.init, &g, a.setup, a.seed, a.phases.axis)?;
    let result = optimize(start, &g, &shells, &options)?;
    let checkpoint = Checkpoint {
        temperature: result.final_temperature(),
        sweep: result.total_sweeps(),
        best_p: result.best_probability,
        seed: a.seed,
    };
    let shape = classify_shape(&result.state, &g, theta);
    let mut out = OutDir::create(&a.out)?;
    out.write("lawn.txt", &write_lawn(&result.state, theta, "", Some(&checkpoint)))?;
    out.finish(
        "anneal",
        a,
        Some(a.seed),
        Some(g.fingerprint()),
        json!(result.best_probability),
        json!({
            "theta": theta,
            "setup": a.setup,
            "n_sites": g.n_sites(),
            "initialP": result.initial_probability,
            "hemisphere": hemisphere_reference(theta),
            "upper_bound": upper_bound(a.setup, theta),
            "phases": result.phases,
            "shape": shape,
        }),
    )
}

fn evaluate(a: &EvaluateArgs) -> CliResult<Value> {
    let g = load_grid(&a.grid)?;
    let (state, header, _) = load_lawn(&a.lawn, &g)?;
    let theta = check_angle(a.theta.unwrap_or(header.theta))?;
    let (p, method) = if g.n_sites() >= STREAMING_SITES {
        (evaluate_probability_streaming(&state, &g, theta)?, "streaming")
    } else {
        (evaluate_probability(&state, &build_shell_table(&g, theta)?)?, "table")
    };
    let oracle = a
        .oracle_samples
        .map(|n| mc_oracle_probability(&state, &g, theta, n, a.seed))
        .transpose()?;
    OutDir::create(&a.out)?.finish(
        "evaluate",
        a,
        Some(a.seed),
        Some(g.fingerprint()),
        json!(p),
        json!({
            "theta": theta,
            "setup": state.setup(),
            "n_sites": g.n_sites(),
            "method": method,
            "hemisphere": hemisphere_reference(theta),
            "oracle": oracle,
        }),
    )
}

fn diagnose_hemisphere(a: &HemisphereArgs) -> CliResult<Value> {
    for &t in &a.thetas.0 {
        check_angle(t)?;
    }
    let g = load_grid(&a.grid)?;
    let rows = hemisphere_scan(&g, &a.thetas.0, a.orientations, a.seed)?;
    let mut csv = String::from("theta,reference,mean,std,mean_abs_dev,min,max\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            r.theta, r.reference, r.mean, r.std, r.mean_abs_dev, r.min, r.max
        );
    }
    let mut out = OutDir::create(&a.out)?;
    out.write("hemisphere.csv", &csv)?;
    let worst_dev = rows.iter().map(|r| (r.mean - r.reference).abs()).fold(0.0, f64::max);
    let worst_std = rows.iter().map(|r| r.std).fold(0.0, f64::max);
    out.finish(
        "diagnose hemisphere",
        a,
        Some(a.seed),
        Some(g.fingerprint()),
        Value::Null,
        json!({
            "n_sites": g.n_sites(),
            "rows": rows,
            "max_mean_deviation": worst_dev,
            "max_std": worst_std,
        }),
    )
}

fn diagnose_energies(a: &EnergiesArgs) -> CliResult<Value> {
    let theta = check_angle(a.theta)?;
    let g = load_grid(&a.grid)?;
    let report = potential_energies_from(&build_shell_table(&g, theta)?);
    let mut csv = String::from("lower,upper,count\n");
    for (i, c) in report.histogram.counts.iter().enumerate() {
        let e = &report.histogram.edges;
        let _ = writeln!(csv, "{},{},{c}", e[i], e[i + 1]);
    }
    let mut out = OutDir::create(&a.out)?;
    out.write("energies.csv", &csv)?;
    out.finish(
        "diagnose energies",
        a,
        None,
        Some(g.fingerprint()),
        Value::Null,
        json!({
            "theta": theta,
            "n_sites": g.n_sites(),
            "mean": report.mean,
            "variance": report.variance,
            "relative_variance": report.relative_variance,
            "skewness": report.skewness,
        }),
    )
}

fn analyze(a: &AnalyzeArgs) -> CliResult<Value> {
    let g = load_grid(&a.grid)?;
    let (state, header, _) = load_lawn(&a.lawn, &g)?;
    let theta = check_angle(a.theta.unwrap_or(header.theta))?;
    let bins = a.bins.unwrap_or_else(|| default_bins(&g));
    let axis = alignment_axis(&state, &g);
    let cogs = axis
        .clone()
        .and_then(|ax| count_cogs_about(&state, &g, theta, &ax, bins));
    let stripes = count_stripes(&state, &g, theta);
    let comparison = if a.compare {
        Some(build_shell_table(&g, theta).and_then(|t| compare_regular_stripes(&state, &g, &t)))
    } else {
        None
    };
    let mut out = OutDir::create(&a.out)?;
    if let Ok(ax) = &axis {
        if let Ok(series) = extract_boundary(&state, &g, ax, bins) {
            let mut csv = String::from("azimuth,polar,valid\n");
            for i in 0..series.bins() {
                let _ = writeln!(
                    csv,
                    "{},{},{}",
                    series.centers[i], series.polar[i], series.valid[i] as u8
                );
            }
            out.write("boundary.csv", &csv)?;
        }
    }
    out.finish(
        "analyze",
        a,
        None,
        Some(g.fingerprint()),
        Value::Null,
        json!({
            "theta": theta,
            "setup": state.setup(),
            "bins": bins,
            "axis": outcome(&axis),
            "cogs": outcome(&cogs),
            "stripes": outcome(&stripes),
            "comparison": comparison.as_ref().map(outcome),
        }),
    )
}

fn spectral(a: &SpectralArgs) -> CliResult<Value> {
    let g = load_grid(&a.grid)?;
    let (state, header, _) = load_lawn(&a.lawn, &g)?;
    let theta = check_angle(a.theta.unwrap_or(header.theta))?;
    let setup = state.setup();
    let spec1 = sph_transform(&state, &g, 1, a.ell_max)?;
    let spec2 = sph_transform(&state, &g, 2, a.ell_max)?;
    let p_spectral = spectral_probability(&spec1, &spec2, theta, setup)?;
    let p_direct = if g.n_sites() >= STREAMING_SITES {
        evaluate_probability_streaming(&state, &g, theta)?
    } else {
        evaluate_probability(&state, &build_shell_table(&g, theta)?)?
    };
    let mut out = OutDir::create(&a.out)?;
    out.write("spectrum_1.txt", &write_spectrum(&spec1))?;
    if setup.is_two_lawn() {
        out.write("spectrum_2.txt", &write_spectrum(&spec2))?;
    }
    let parity = if setup.is_antipodal() { Parity::OddOnly } else { Parity::All };
    let star = ell_star(theta, a.ell_max.max(1), parity)?;
    let power = spec1.band_power();
    let partial: Vec<f64> = power
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    out.finish(
        "spectral",
        a,
        None,
        Some(g.fingerprint()),
        json!(p_direct),
        json!({
            "theta": theta,
            "setup": setup,
            "ell_max": a.ell_max,
            "spectralP": p_spectral,
            "difference": p_spectral - p_direct,
            "monopole": spec1.coefficient(0, 0).re,
            "parseval_residual": parseval_residual(&spec1),
            "band_power": power,
            "partial_power": partial,
            "ell_star": star.0,
            "legendre_at_ell_star": star.1,
            "upper_bound": upper_bound(setup, theta),
        }),
    )
}

fn cogs(a: &CogsArgs) -> CliResult<Value> {
    let rows = deficit_scan(a.q, a.k, a.max_height, a.points)?;
    let mut out = OutDir::create(&a.out)?;
    out.write("deficit.csv", &write_deficit_csv(&rows))?;
    let d: Vec<f64> = rows.iter().map(|r| r.deficit).collect();
    let interior: Vec<usize> = (1..d.len().saturating_sub(1))
        .filter(|&i| d[i] > d[i - 1] && d[i] >= d[i + 1])
        .collect();
    let best = interior
        .iter()
        .copied()
        .max_by(|&i, &j| d[i].total_cmp(&d[j]))
        .map(|i| json!({ "height": rows[i].height, "deficit": d[i] }));
    let monotone = d.windows(2).all(|w| w[1] <= w[0]);
    out.finish(
        "cogs",
        a,
        None,
        None,
        Value::Null,
        json!({
            "theta": std::f64::consts::PI / a.q as f64,
            "points": rows.len(),
            "max_deficit": d.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            "interior_maximum": best,
            "monotone_decreasing": monotone,
        }),
    )
}

fn stripes_model(a: &StripesModelArgs) -> CliResult<Value> {
    if let Some(r) = a.r {
        if !(r > 0.0 && r.is_finite()) {
            return Err(CliError::bad_flag(format!("--r must be positive, got {r}")));
        }
    }
    let (r_opt, u_opt) = planar_stripe_optimum();
    let at = a.r.map(|r| {
        json!({ "r": r, "u": planar_stripe_success(r), "derivative": planar_stripe_derivative(r) })
    });
    OutDir::create(&a.out)?.finish(
        "stripes-model",
        a,
        None,
        None,
        Value::Null,
        json!({
            "evaluation": at,
            "optimum": { "r": r_opt, "u": u_opt },
        }),
    )
}

#[derive(Debug, Serialize)]
struct SweepRow {
    theta: f64,
    setup: SetupKind,
    #[serde(rename = "bestP")]
    best_p: f64,
    hemisphere: f64,
    upper_bound: Option<f64>,
    shape: String,
    lawn: String,
}

fn sweep(a: &SweepArgs) -> CliResult<Value> {
    for &t in &a.thetas.0 {
        check_angle(t)?;
    }
    let g = load_grid(&a.grid)?;
    let options = options_of(&a.schedule, &a.phases, a.seed)?;
    let runs = a
        .thetas
        .0
        .par_iter()
        .enumerate()
        .map(|(i, &theta)| -> CliResult<(SweepRow, String)> {
            let shells = build_shell_table(&g, theta)?;
            let start = new_random_lawn(&g, a.setup, a.seed)?;
            let r = optimize(start, &g, &shells, &options)?;
            let checkpoint = Checkpoint {
                temperature: r.final_temperature(),
                sweep: r.total_sweeps(),
                best_p: r.best_probability,
                seed: a.seed,
            };
            let shape = classify_shape(&r.state, &g, theta);
            let row = SweepRow {
                theta,
                setup: a.setup,
                best_p: r.best_probability,
                hemisphere: hemisphere_reference(theta),
                upper_bound: upper_bound(a.setup, theta),
                shape: shape.label(),
                lawn: format!("lawn_{i:03}.txt"),
            };
            Ok((row, write_lawn(&r.state, theta, "", Some(&checkpoint))))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut out = OutDir::create(&a.out)?;
    let mut csv = String::from("theta,setup,bestP,hemisphere,upper_bound,shape,lawn\n");
    for (row, lawn) in &runs {
        out.write(&row.lawn, lawn)?;
        let bound = row.upper_bound.map(|b| b.to_string()).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            row.theta, row.setup, row.best_p, row.hemisphere, bound, row.shape, row.lawn
        );
    }
    out.write("sweep.csv", &csv)?;
    let rows: Vec<&SweepRow> = runs.iter().map(|(r, _)| r).collect();
    let best: Vec<f64> = rows.iter().map(|r| r.best_p).collect();
    out.finish(
        "sweep",
        a,
        Some(a.seed),
        Some(g.fingerprint()),
        json!(best),
        json!({ "n_sites": g.n_sites(), "rows": rows }),
    )
}
