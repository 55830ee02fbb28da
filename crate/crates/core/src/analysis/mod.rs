//! Shape analysis of lawns: alignment axis, boundary profile, cogs, stripes
//! and the planar stripe model.

mod planar;
mod stripes;

pub use planar::{
    planar_stripe_angle_success, planar_stripe_derivative, planar_stripe_h, planar_stripe_optimum,
    planar_stripe_success,
};
pub use stripes::{
    compare_regular_stripes, count_stripes, fit_regular_axis, predicted_stripes, regular_stripe_lawn,
    RegularComparison, StripeReport,
};

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::grid::SphericalGrid;
use crate::lawn::{hemisphere_lawn, LawnState, SetupKind};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;
use std::f64::consts::PI;

/// Degree cutoff used for zonal power during axis alignment.
pub const ZONAL_ELL_MAX: usize = 31;
const ALIGN_CANDIDATES: usize = 512;
const SIGNIFICANCE_RATIO: f64 = 5.0;

/// `1 − θ/π`, the success probability of a hemispherical lawn.
pub fn hemisphere_reference(theta: f64) -> f64 {
    1.0 - theta / PI
}

/// Zonal band power `Σ_{1≤ℓ≤L} |a_ℓ0|²` of lawn 1 about `axis`, where
/// `a_ℓ0` is the quadrature coefficient of `Y_ℓ0` in the rotated frame.
pub fn zonal_power(state: &LawnState, grid: &SphericalGrid, axis: &Vec3, ell_max: usize) -> f64 {
    let mut acc = vec![0.0; ell_max + 1];
    for (p, &s) in grid.points().iter().zip(state.spins1()) {
        let v = s as f64 - 0.5;
        let x = geom::dot(p, axis);
        let (mut p0, mut p1) = (1.0, x);
        acc[1] += v * x;
        for (l, a) in acc.iter_mut().enumerate().skip(2) {
            let lf = l as f64;
            let p2 = ((2.0 * lf - 1.0) * x * p1 - (lf - 1.0) * p0) / lf;
            *a += v * p2;
            p0 = p1;
            p1 = p2;
        }
    }
    let w = 4.0 * PI / grid.n_sites() as f64;
    acc.iter()
        .enumerate()
        .skip(1)
        .map(|(l, a)| (2 * l + 1) as f64 / (4.0 * PI) * (w * a).powi(2))
        .sum()
}

/// Axis maximising the zonal band power of lawn 1: best of a Fibonacci scan,
/// polished by a shrinking-step pattern search. Returned with non-negative
/// leading nonzero component.
pub fn alignment_axis(state: &LawnState, grid: &SphericalGrid) -> Result<Vec3> {
    state.check_grid(grid)?;
    // antipodal axes are equivalent, so half the candidates suffice
    let candidates: Vec<Vec3> = geom::fibonacci_sphere(2 * ALIGN_CANDIDATES)
        .into_iter()
        .filter(|c| c[2] >= 0.0)
        .take(ALIGN_CANDIDATES)
        .collect();
    let scores: Vec<f64> = candidates
        .par_iter()
        .map(|c| zonal_power(state, grid, c, ZONAL_ELL_MAX))
        .collect();
    let (mut best, mut score) = candidates
        .iter()
        .zip(&scores)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(c, s)| (*c, *s))
        .expect("candidates are non-empty");
    let mut step = (4.0 * PI / (2 * ALIGN_CANDIDATES) as f64).sqrt();
    while step > 1e-7 {
        let frame = geom::Frame::new(&best);
        let trials: Vec<Vec3> = [frame.e1, geom::neg(&frame.e1), frame.e2, geom::neg(&frame.e2)]
            .iter()
            .map(|d| geom::normalize(&geom::add(&best, &geom::scale(d, step.tan()))))
            .collect();
        let improved = trials
            .par_iter()
            .map(|t| (*t, zonal_power(state, grid, t, ZONAL_ELL_MAX)))
            .collect::<Vec<_>>()
            .into_iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .filter(|(_, s)| *s > score);
        match improved {
            Some((t, s)) => {
                best = t;
                score = s;
            }
            None => step *= 0.5,
        }
    }
    let lead = best.iter().find(|c| c.abs() > 1e-12).copied().unwrap_or(1.0);
    Ok(if lead < 0.0 { geom::neg(&best) } else { best })
}

/// Boundary polar angle `Θ(φ)` about an axis, in equal azimuthal bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundarySeries {
    pub axis: Vec3,
    pub centers: Vec<f64>,
    pub polar: Vec<f64>,
    pub valid: Vec<bool>,
    /// Median over valid bins of the polar-angle spread of interface sites.
    pub median_spread: f64,
}

impl BoundarySeries {
    pub fn bins(&self) -> usize {
        self.centers.len()
    }

    pub fn valid_fraction(&self) -> f64 {
        self.valid.iter().filter(|&&v| v).count() as f64 / self.bins() as f64
    }

    /// Series with masked bins filled by periodic linear interpolation.
    pub fn filled(&self) -> Result<Vec<f64>> {
        let b = self.bins();
        let valid: Vec<usize> = (0..b).filter(|&i| self.valid[i]).collect();
        if valid.is_empty() {
            return Err(Error::DegenerateBoundary("no interface sites".into()));
        }
        let mut out = self.polar.clone();
        for (k, &i) in valid.iter().enumerate() {
            let j = valid[(k + 1) % valid.len()];
            let gap = (j + b - i) % b;
            let gap = if gap == 0 { b } else { gap };
            for s in 1..gap {
                let t = s as f64 / gap as f64;
                out[(i + s) % b] = (1.0 - t) * self.polar[i] + t * self.polar[j];
            }
        }
        Ok(out)
    }
}

/// Sites of lawn 1 within `radius` of a site of the opposite spin.
pub fn interface_sites(state: &LawnState, grid: &SphericalGrid, radius: f64) -> Vec<usize> {
    let spins = state.spins1();
    let index = grid.index();
    (0..grid.n_sites())
        .into_par_iter()
        .filter(|&i| {
            let mut hit = false;
            index.for_each_in_annulus(grid.point(i), 0.0, radius, |j, _| {
                hit |= spins[j] != spins[i];
            });
            hit
        })
        .collect()
}

/// Mean polar angle about `axis` of interface sites in each azimuthal bin.
///
/// Fails with `DegenerateBoundary` when fewer than a quarter of the bins are
/// populated, when more than a quarter are empty, or when the boundary
/// wanders so much within single bins that no `Θ(φ)` profile exists.
pub fn extract_boundary(
    state: &LawnState,
    grid: &SphericalGrid,
    axis: &Vec3,
    bins: usize,
) -> Result<BoundarySeries> {
    if bins < 64 {
        return Err(Error::InvalidArgument("at least 64 bins required".into()));
    }
    state.check_grid(grid)?;
    let axis = geom::normalize(axis);
    let frame = geom::Frame::new(&axis);
    let width = 2.0 * PI / bins as f64;
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); bins];
    for i in interface_sites(state, grid, 1.5 * grid.spacing()) {
        let q = frame.local(grid.point(i));
        let b = ((geom::azimuth(&q) / width) as usize).min(bins - 1);
        members[b].push(geom::polar(&q));
    }
    let mut polar = vec![0.0; bins];
    let mut valid = vec![false; bins];
    let mut spreads = Vec::new();
    for (b, m) in members.iter().enumerate() {
        if m.is_empty() {
            continue;
        }
        let mean = m.iter().sum::<f64>() / m.len() as f64;
        polar[b] = mean;
        valid[b] = true;
        let var = m.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m.len() as f64;
        spreads.push(var.sqrt());
    }
    spreads.sort_by(f64::total_cmp);
    let median_spread = spreads.get(spreads.len() / 2).copied().unwrap_or(0.0);
    let series = BoundarySeries {
        axis,
        centers: (0..bins).map(|b| (b as f64 + 0.5) * width).collect(),
        polar,
        valid,
        median_spread,
    };
    let frac = series.valid_fraction();
    if frac < 0.75 {
        return Err(Error::DegenerateBoundary(format!(
            "only {:.0}% of azimuthal bins contain interface sites",
            100.0 * frac
        )));
    }
    if median_spread > MAX_SPREAD {
        return Err(Error::DegenerateBoundary(format!(
            "interface sites spread over {median_spread:.3} rad within a bin"
        )));
    }
    Ok(series)
}

/// Largest median in-bin spread (radians) still read as a single boundary.
const MAX_SPREAD: f64 = 0.25;

/// Magnitudes `2|X_n|/B` of the DFT of `Θ − mean` for `n = 1..=B/2`;
/// index 0 of the result is wavenumber 1.
pub fn fourier_spectrum(series: &BoundarySeries) -> Result<Vec<f64>> {
    let values = series.filled()?;
    Ok(real_amplitudes(&values))
}

fn real_amplitudes(values: &[f64]) -> Vec<f64> {
    let b = values.len();
    let mean = values.iter().sum::<f64>() / b as f64;
    let mut buf: Vec<Complex64> = values.iter().map(|v| Complex64::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(b).process(&mut buf);
    (1..=b / 2).map(|n| 2.0 * buf[n].norm() / b as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CogReport {
    pub cog_count: usize,
    pub mode: usize,
    pub height: f64,
    pub height_std: f64,
    pub fourier_amplitudes: Vec<f64>,
    pub axis: Vec3,
}

/// Azimuthal bins for cog analysis: a power of two near the number of grid
/// spacings around a great circle, at least 64 and at most 512.
pub fn default_bins(grid: &SphericalGrid) -> usize {
    let around = 2.0 * PI / grid.spacing();
    let mut b = 64;
    while b * 2 <= 512 && (b * 2) as f64 <= around {
        b *= 2;
    }
    b
}

/// Cog count, mode and height of lawn 1 for jump angle `theta`.
///
/// The dominant boundary wavenumber counts as a cog number only if its
/// amplitude exceeds five times the median amplitude and half a grid spacing;
/// otherwise the count is zero. Antipodal setups only admit odd counts.
pub fn count_cogs(state: &LawnState, grid: &SphericalGrid, theta: f64) -> Result<CogReport> {
    let axis = alignment_axis(state, grid)?;
    count_cogs_about(state, grid, theta, &axis, default_bins(grid))
}

pub fn count_cogs_about(
    state: &LawnState,
    grid: &SphericalGrid,
    theta: f64,
    axis: &Vec3,
    bins: usize,
) -> Result<CogReport> {
    let series = extract_boundary(state, grid, axis, bins)?;
    let values = series.filled()?;
    let amps = real_amplitudes(&values);
    let odd_only = state.setup().is_antipodal();
    let (k, peak) = amps
        .iter()
        .enumerate()
        .map(|(i, &a)| (i + 1, a))
        .filter(|(n, _)| !odd_only || n % 2 == 1)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, 0.0));
    let mut sorted = amps.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let significant = peak > SIGNIFICANCE_RATIO * median && peak > 0.5 * grid.spacing();
    let mut report = CogReport {
        cog_count: 0,
        mode: 0,
        height: 0.0,
        height_std: 0.0,
        fourier_amplitudes: amps,
        axis: series.axis,
    };
    if !significant {
        return Ok(report);
    }
    let per_turn = if state.setup().is_two_lawn() { PI } else { 2.0 * PI };
    report.cog_count = k;
    report.mode = ((k as f64 * theta / per_turn).round() as usize).max(1);
    let (h, sd) = cog_heights(&values, k);
    report.height = h;
    report.height_std = sd;
    Ok(report)
}

/// Mean and standard deviation of `|extremum − π/2|` over all peaks and
/// troughs of the series restricted to harmonics of `k`.
fn cog_heights(values: &[f64], k: usize) -> (f64, f64) {
    let b = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(b).process(&mut buf);
    for (n, z) in buf.iter_mut().enumerate() {
        let w = n.min(b - n);
        if w != 0 && w % k != 0 {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(b).process(&mut buf);
    let smooth: Vec<f64> = buf.iter().map(|z| z.re / b as f64).collect();
    let mut dev = Vec::with_capacity(2 * k);
    for period in 0..k {
        let lo = period * b / k;
        let hi = ((period + 1) * b / k).max(lo + 1);
        let seg = &smooth[lo..hi];
        let max = seg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = seg.iter().cloned().fold(f64::INFINITY, f64::min);
        dev.push((max - PI / 2.0).abs());
        dev.push((min - PI / 2.0).abs());
    }
    let mean = dev.iter().sum::<f64>() / dev.len() as f64;
    let var = dev.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / dev.len() as f64;
    (mean, var.sqrt())
}

/// Lawn whose sites satisfy `inside(polar, azimuth)` about `axis`.
///
/// On paired grids the decision is taken on the `+axis` member of each pair
/// and the partner gets the opposite spin, so `inside` should be antipodally
/// odd; the result is an antipodal one-lawn state. Unpaired grids give a
/// non-antipodal state and must come out with exactly half the sites.
pub fn lawn_from_region<F>(grid: &SphericalGrid, axis: &Vec3, inside: F) -> Result<LawnState>
where
    F: Fn(f64, f64) -> bool,
{
    let frame = geom::Frame::new(axis);
    let test = |i: usize| {
        let q = frame.local(grid.point(i));
        inside(geom::polar(&q), geom::azimuth(&q))
    };
    let n = grid.n_sites();
    match grid.antipodes() {
        Some(map) => {
            let north = hemisphere_lawn(grid, axis)?;
            let mut s = vec![0u8; n];
            for i in (0..n).filter(|&i| north.spins1()[i] == 1) {
                let v = test(i) as u8;
                s[i] = v;
                s[map.partner(i)] = 1 - v;
            }
            LawnState::from_spins(grid, SetupKind::AntipodalOneLawn, s, None)
        }
        None => {
            let s = (0..n).map(|i| test(i) as u8).collect();
            LawnState::from_spins(grid, SetupKind::NonAntipodalOneLawn, s, None)
        }
    }
}

/// Cogwheel lawn `{Θ < π/2 + amplitude·sin(kφ)}` about `axis`.
pub fn sinusoidal_lawn(
    grid: &SphericalGrid,
    axis: &Vec3,
    k: usize,
    amplitude: f64,
) -> Result<LawnState> {
    lawn_from_region(grid, axis, |polar, az| {
        polar < PI / 2.0 + amplitude * (k as f64 * az).sin()
    })
}
