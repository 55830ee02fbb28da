use super::{alignment_axis, lawn_from_region, zonal_power, ZONAL_ELL_MAX};
use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::grid::SphericalGrid;
use crate::interaction::ShellTable;
use crate::lawn::{evaluate_probability, LawnState, SetupKind};
use crate::spectral::sph_transform;
use serde::Serialize;
use std::f64::consts::PI;

const RINGS: usize = 256;
/// Required ratio of zonal power to the mean power of one non-zonal order.
const STRIPE_POWER_RATIO: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularComparison {
    pub stripe_count: usize,
    pub regular_p: f64,
    pub irregular_p: f64,
    /// `regular_p − irregular_p`.
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StripeReport {
    pub stripe_count: usize,
    pub predicted: f64,
    pub axis: Vec3,
    /// `π / (2 n_s)`.
    pub width: f64,
    /// Width from the planar model, `(√3/2)(π − θ)`.
    pub planar_width: f64,
    pub regular_vs_irregular: Option<RegularComparison>,
}

/// `π / (√3 (π − θ))`, infinite at `θ ≥ π`.
pub fn predicted_stripes(theta: f64) -> f64 {
    if theta >= PI {
        f64::INFINITY
    } else {
        PI / (3f64.sqrt() * (PI - theta))
    }
}

/// Number of latitude bands of lawn 1 about its zonal axis.
///
/// Sites are binned into 256 rings of equal polar width; the zonal mean of
/// each ring is thresholded at ½ (empty rings copy the nearest populated
/// ring) and maximal runs of lawn-1 rings are counted.
pub fn count_stripes(state: &LawnState, grid: &SphericalGrid, theta: f64) -> Result<StripeReport> {
    let axis = alignment_axis(state, grid)?;
    let zonal = zonal_power(state, grid, &axis, ZONAL_ELL_MAX);
    let spec = sph_transform(state, grid, 1, ZONAL_ELL_MAX)?;
    let total: f64 = spec.band_power().iter().skip(1).sum();
    // power of each order ±m, averaged over m = 1..=L
    let mean_other = (total - zonal).max(0.0) / ZONAL_ELL_MAX as f64;
    if zonal < STRIPE_POWER_RATIO * mean_other {
        return Err(Error::NoStripeStructure(format!(
            "zonal power {zonal:.3e} against mean non-zonal order power {mean_other:.3e}"
        )));
    }
    let stripe_count = bands_about(state, grid, &axis);
    if stripe_count == 0 {
        return Err(Error::NoStripeStructure("lawn 1 occupies no band".into()));
    }
    Ok(StripeReport {
        stripe_count,
        predicted: predicted_stripes(theta),
        axis,
        width: PI / (2.0 * stripe_count as f64),
        planar_width: 3f64.sqrt() / 2.0 * (PI - theta),
        regular_vs_irregular: None,
    })
}

fn bands_about(state: &LawnState, grid: &SphericalGrid, axis: &Vec3) -> usize {
    let mut sum = [0.0f64; RINGS];
    let mut count = [0usize; RINGS];
    for (p, &s) in grid.points().iter().zip(state.spins1()) {
        let polar = geom::dot(p, axis).clamp(-1.0, 1.0).acos();
        let r = ((polar / PI * RINGS as f64) as usize).min(RINGS - 1);
        sum[r] += s as f64;
        count[r] += 1;
    }
    let populated: Vec<usize> = (0..RINGS).filter(|&r| count[r] > 0).collect();
    let on: Vec<bool> = (0..RINGS)
        .map(|r| {
            let src = *populated
                .iter()
                .min_by_key(|&&q| q.abs_diff(r))
                .expect("grid is non-empty");
            sum[src] / count[src] as f64 > 0.5
        })
        .collect();
    (0..RINGS).filter(|&r| on[r] && (r == 0 || !on[r - 1])).count()
}

/// Antipodal zonal lawn with `stripe_count` bands of lawn 1: the polar range
/// about `axis` is cut into `2·stripe_count` equal bands of alternating
/// colour, starting with lawn 1 at the `+axis` pole.
pub fn regular_stripe_lawn(
    grid: &SphericalGrid,
    axis: &Vec3,
    stripe_count: usize,
) -> Result<LawnState> {
    if stripe_count == 0 {
        return Err(Error::InvalidArgument("stripe count must be ≥ 1".into()));
    }
    let bands = 2 * stripe_count;
    let state = lawn_from_region(grid, axis, |polar, _| {
        ((polar / PI * bands as f64) as usize).min(bands - 1) % 2 == 0
    })?;
    if state.area1() * 2 != state.n_sites() {
        return Err(Error::NoAntipodalStructure(
            "regular stripes need an antipodally paired grid".into(),
        ));
    }
    Ok(state)
}

fn agreement(state: &LawnState, other: &LawnState) -> usize {
    state
        .spins1()
        .iter()
        .zip(other.spins1())
        .filter(|(a, b)| a == b)
        .count()
}

/// Axis near `start` whose regular stripe lawn agrees with `state` on as
/// many sites as possible.
///
/// Every site near a band edge asks for `p·axis` to lie inside the cosine
/// interval of a band of its own colour (its current band, or the closer
/// neighbour if the colour is wrong). In tangent-plane coordinates these are
/// half-planes; cyclic projection onto them finds an axis satisfying all of
/// them whenever one exists. The linearisation is refreshed a few times.
pub fn fit_regular_axis(
    state: &LawnState,
    grid: &SphericalGrid,
    start: &Vec3,
    stripe_count: usize,
) -> Result<Vec3> {
    let bands = 2 * stripe_count;
    let width = PI / bands as f64;
    let score_of = |a: &Vec3| -> Result<usize> {
        Ok(agreement(state, &regular_stripe_lawn(grid, a, stripe_count)?))
    };
    let mut best = geom::normalize(start);
    let mut score = score_of(&best)?;
    let mut axis = best;
    for _ in 0..4 {
        if score == state.n_sites() {
            break;
        }
        let frame = geom::Frame::new(&axis);
        // (gradient in the tangent plane, lower bound, upper bound) on p·axis
        let mut rows: Vec<([f64; 2], f64, f64, f64)> = Vec::new();
        for (p, &s) in grid.points().iter().zip(state.spins1()) {
            let z = geom::dot(p, &axis).clamp(-1.0, 1.0);
            let polar = z.acos();
            let mut band = ((polar / width) as usize).min(bands - 1);
            let want = if s == 1 { 0 } else { 1 };
            if band % 2 != want {
                let frac = polar / width - band as f64;
                band = if (frac > 0.5 && band + 1 < bands) || band == 0 {
                    band + 1
                } else {
                    band - 1
                };
            }
            let hi = (band as f64 * width).cos();
            let lo = ((band + 1) as f64 * width).cos();
            if z - lo > 0.05 && hi - z > 0.05 {
                continue;
            }
            rows.push(([geom::dot(p, &frame.e1), geom::dot(p, &frame.e2)], z, lo, hi));
        }
        let margin = 1e-12;
        let mut v = [0.0f64; 2];
        for _ in 0..2000 {
            let mut violated = false;
            for (g, z0, lo, hi) in &rows {
                let z = z0 + g[0] * v[0] + g[1] * v[1];
                let gg = g[0] * g[0] + g[1] * g[1];
                if gg < 1e-300 {
                    continue;
                }
                let shift = if z < lo + margin {
                    lo + margin - z
                } else if z > hi - margin {
                    hi - margin - z
                } else {
                    continue;
                };
                violated = true;
                v[0] += shift * g[0] / gg;
                v[1] += shift * g[1] / gg;
            }
            if !violated {
                break;
            }
        }
        axis = geom::normalize(&geom::add(
            &axis,
            &geom::add(&geom::scale(&frame.e1, v[0]), &geom::scale(&frame.e2, v[1])),
        ));
        let s = score_of(&axis)?;
        if s > score {
            best = axis;
            score = s;
        }
    }
    Ok(best)
}

/// Regular stripe lawn with the detected count and axis against `state`.
pub fn compare_regular_stripes(
    state: &LawnState,
    grid: &SphericalGrid,
    shells: &ShellTable,
) -> Result<RegularComparison> {
    if state.setup().is_two_lawn() {
        return Err(Error::InvalidArgument(
            "stripe comparison is defined for one-lawn setups".into(),
        ));
    }
    let report = count_stripes(state, grid, shells.theta())?;
    let axis = fit_regular_axis(state, grid, &report.axis, report.stripe_count)?;
    let mut regular = regular_stripe_lawn(grid, &axis, report.stripe_count)?;
    if state.setup() == SetupKind::NonAntipodalOneLawn {
        regular = LawnState::from_spins(
            grid,
            SetupKind::NonAntipodalOneLawn,
            regular.spins1().to_vec(),
            None,
        )?;
    }
    let regular_p = evaluate_probability(&regular, shells)?;
    let irregular_p = evaluate_probability(state, shells)?;
    Ok(RegularComparison {
        stripe_count: report.stripe_count,
        regular_p,
        irregular_p,
        difference: regular_p - irregular_p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::generate_healpix;
    use crate::interaction::build_shell_table;
    use crate::lawn::{hemisphere_lawn, new_random_lawn};

    #[test]
    fn predicted_values() {
        assert!((predicted_stripes(0.9 * PI) - 10.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!((predicted_stripes(PI - PI / 3f64.sqrt()) - 1.0).abs() < 1e-12);
        assert!(predicted_stripes(PI).is_infinite());
    }

    #[test]
    fn constructed_stripes_are_counted() {
        let g = generate_healpix(16).unwrap();
        let axis = geom::normalize(&[1.0, 2.0, 0.5]);
        for n in [1, 3, 5] {
            let s = regular_stripe_lawn(&g, &axis, n).unwrap();
            let r = count_stripes(&s, &g, 0.8 * PI).unwrap();
            assert_eq!(r.stripe_count, n);
            assert!(geom::dot(&r.axis, &axis).abs() > 0.999);
        }
        let h = hemisphere_lawn(&g, &axis).unwrap();
        assert_eq!(count_stripes(&h, &g, 0.8 * PI).unwrap().stripe_count, 1);
    }

    #[test]
    fn zonal_input_compares_equal() {
        let g = generate_healpix(16).unwrap();
        let t = build_shell_table(&g, 0.8 * PI).unwrap();
        for axis in [[0.3, 0.2, 0.9], [0.71, -0.3, 0.2]] {
            let s = regular_stripe_lawn(&g, &geom::normalize(&axis), 3).unwrap();
            let c = compare_regular_stripes(&s, &g, &t).unwrap();
            assert_eq!(c.stripe_count, 3);
            assert!(c.difference.abs() < 1e-6, "{}", c.difference);
        }
    }

    #[test]
    fn random_lawn_has_no_stripes() {
        let g = generate_healpix(16).unwrap();
        let s = new_random_lawn(&g, SetupKind::AntipodalOneLawn, 5).unwrap();
        assert!(matches!(
            count_stripes(&s, &g, 0.8 * PI),
            Err(Error::NoStripeStructure(_))
        ));
    }
}
