//! Spherical-harmonic coefficients of lawns and the spectral form of the
//! success probability.

use crate::error::{Error, Result};
use crate::geom;
use crate::grid::SphericalGrid;
use crate::lawn::{LawnState, SetupKind};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Legendre polynomial `P_ℓ(x)` by the three-term recurrence.
pub fn legendre_p(ell: usize, x: f64) -> f64 {
    if ell == 0 {
        return 1.0;
    }
    let (mut p0, mut p1) = (1.0, x);
    for l in 2..=ell {
        let lf = l as f64;
        let p2 = ((2.0 * lf - 1.0) * x * p1 - (lf - 1.0) * p0) / lf;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// All `P_ℓ(x)` for `ℓ = 0..=ell_max`.
pub fn legendre_table(ell_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(ell_max + 1);
    out.push(1.0);
    if ell_max >= 1 {
        out.push(x);
    }
    for l in 2..=ell_max {
        let lf = l as f64;
        out.push(((2.0 * lf - 1.0) * x * out[l - 1] - (lf - 1.0) * out[l - 2]) / lf);
    }
    out
}

#[inline]
fn idx(ell: usize, m: i64) -> usize {
    ((ell * ell + ell) as i64 + m) as usize
}

/// Orthonormal associated Legendre values `N_ℓm P_ℓ^m(cos θ)` for
/// `0 ≤ m ≤ ℓ ≤ L`, Condon–Shortley phase included, stored at
/// `ℓ(ℓ+1)/2 + m`.
pub fn normalized_legendre(ell_max: usize, cos_t: f64, sin_t: f64) -> Vec<f64> {
    let tri = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let mut out = vec![0.0; (ell_max + 1) * (ell_max + 2) / 2];
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for m in 0..=ell_max {
        if m > 0 {
            let mf = m as f64;
            pmm *= -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_t;
        }
        out[tri(m, m)] = pmm;
        if m + 1 > ell_max {
            break;
        }
        let mut p_prev = pmm;
        let mut p = (2.0 * m as f64 + 3.0).sqrt() * cos_t * pmm;
        out[tri(m + 1, m)] = p;
        for l in m + 2..=ell_max {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            let next = a * (cos_t * p - b * p_prev);
            p_prev = p;
            p = next;
            out[tri(l, m)] = p;
        }
    }
    out
}

/// Coefficients `μ̂_ℓm`, `0 ≤ ℓ ≤ L`, `−ℓ ≤ m ≤ ℓ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub ell_max: usize,
    coefficients: Vec<(f64, f64)>,
    pub source: String,
}

impl Spectrum {
    fn from_complex(ell_max: usize, c: Vec<Complex64>, source: String) -> Self {
        Spectrum {
            ell_max,
            coefficients: c.into_iter().map(|z| (z.re, z.im)).collect(),
            source,
        }
    }

    /// Spectrum with only `μ̂_00 = value`.
    pub fn monopole(ell_max: usize, value: f64) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); (ell_max + 1) * (ell_max + 1)];
        c[0] = Complex64::new(value, 0.0);
        Self::from_complex(ell_max, c, "monopole".into())
    }

    pub fn coefficient(&self, ell: usize, m: i64) -> Complex64 {
        assert!(ell <= self.ell_max && m.unsigned_abs() as usize <= ell);
        let (re, im) = self.coefficients[idx(ell, m)];
        Complex64::new(re, im)
    }

    /// `C_ℓ = Σ_m |μ̂_ℓm|²`.
    pub fn band_power(&self) -> Vec<f64> {
        (0..=self.ell_max)
            .map(|l| {
                let l = l as i64;
                (-l..=l)
                    .map(|m| self.coefficient(l as usize, m).norm_sqr())
                    .sum()
            })
            .collect()
    }

    /// Spectrum of `1 − μ`: every `ℓ ≥ 1` coefficient changes sign.
    pub fn complement(&self) -> Spectrum {
        let mut c = self.coefficients.clone();
        for z in c.iter_mut().skip(1) {
            *z = (-z.0, -z.1);
        }
        Spectrum {
            ell_max: self.ell_max,
            coefficients: c,
            source: format!("complement({})", self.source),
        }
    }

    /// Copy truncated at a smaller cutoff.
    pub fn truncated(&self, ell_max: usize) -> Spectrum {
        let l = ell_max.min(self.ell_max);
        Spectrum {
            ell_max: l,
            coefficients: self.coefficients[..(l + 1) * (l + 1)].to_vec(),
            source: self.source.clone(),
        }
    }
}

/// Transform of arbitrary site values with uniform weights `h² = 4π/N`.
pub fn sph_transform_values(
    grid: &SphericalGrid,
    values: &[f64],
    ell_max: usize,
    source: &str,
) -> Result<Spectrum> {
    if values.len() != grid.n_sites() {
        return Err(Error::InvalidArgument("one value per site expected".into()));
    }
    let n_pos = (ell_max + 1) * (ell_max + 2) / 2;
    let chunk = 256;
    let partials: Vec<Vec<Complex64>> = grid
        .points()
        .par_chunks(chunk)
        .enumerate()
        .map(|(c, pts)| {
            let mut acc = vec![Complex64::new(0.0, 0.0); n_pos];
            for (k, p) in pts.iter().enumerate() {
                let v = values[c * chunk + k];
                if v == 0.0 {
                    continue;
                }
                let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
                let plm = normalized_legendre(ell_max, p[2], rho);
                let phi = p[1].atan2(p[0]);
                // conj(e^{imφ}) built by repeated multiplication
                let step = Complex64::new(phi.cos(), -phi.sin());
                let mut e = Complex64::new(v, 0.0);
                for m in 0..=ell_max {
                    for l in m..=ell_max {
                        acc[l * (l + 1) / 2 + m] += e * plm[l * (l + 1) / 2 + m];
                    }
                    e *= step;
                }
            }
            acc
        })
        .collect();
    let w = 4.0 * PI / grid.n_sites() as f64;
    let mut full = vec![Complex64::new(0.0, 0.0); (ell_max + 1) * (ell_max + 1)];
    for l in 0..=ell_max {
        for m in 0..=l {
            let k = l * (l + 1) / 2 + m;
            let re: Vec<f64> = partials.iter().map(|p| p[k].re).collect();
            let im: Vec<f64> = partials.iter().map(|p| p[k].im).collect();
            let z = Complex64::new(geom::pairwise_sum(&re), geom::pairwise_sum(&im)) * w;
            full[idx(l, m as i64)] = z;
            if m > 0 {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                full[idx(l, -(m as i64))] = z.conj() * sign;
            }
        }
    }
    Ok(Spectrum::from_complex(ell_max, full, source.to_owned()))
}

/// Coefficients of lawn `lawn_index` (1 or 2). For one-lawn setups lawn 2
/// is the complement of lawn 1.
pub fn sph_transform(
    state: &LawnState,
    grid: &SphericalGrid,
    lawn_index: u8,
    ell_max: usize,
) -> Result<Spectrum> {
    state.check_grid(grid)?;
    let values: Vec<f64> = match (lawn_index, state.setup().is_two_lawn()) {
        (1, _) => state.spins1().iter().map(|&s| s as f64).collect(),
        (2, true) => state.spins2().iter().map(|&s| s as f64).collect(),
        (2, false) => state.spins1().iter().map(|&s| 1.0 - s as f64).collect(),
        _ => return Err(Error::InvalidArgument(format!("no lawn {lawn_index}"))),
    };
    sph_transform_values(grid, &values, ell_max, &format!("lawn{lawn_index}"))
}

/// Spectral form of the success probability.
///
/// One-lawn: `(1/2π) Σ |μ̂_ℓm|² P_ℓ(cos θ)` using `spec1`. Two-lawn:
/// `(1/2π) Re Σ μ̂¹_ℓm conj(μ̂²ᶜ_ℓm) P_ℓ(cos θ)` where `²ᶜ` is the
/// complement of lawn 2. Antipodal setups sum only `ℓ = 0` and odd `ℓ`:
/// their even degrees vanish apart from grid quadrature error.
pub fn spectral_probability(
    spec1: &Spectrum,
    spec2: &Spectrum,
    theta: f64,
    setup: SetupKind,
) -> Result<f64> {
    if spec1.ell_max != spec2.ell_max {
        return Err(Error::CutoffMismatch(spec1.ell_max, spec2.ell_max));
    }
    let legendre = legendre_table(spec1.ell_max, theta.cos());
    let other = if setup.is_two_lawn() {
        spec2.complement()
    } else {
        spec1.clone()
    };
    let mut total = 0.0;
    for (l, pl) in legendre.iter().enumerate() {
        if setup.is_antipodal() && l > 0 && l % 2 == 0 {
            continue;
        }
        let li = l as i64;
        let s: f64 = (-li..=li)
            .map(|m| (spec1.coefficient(l, m) * other.coefficient(l, m).conj()).re)
            .sum();
        total += s * pl;
    }
    Ok(total / (2.0 * PI))
}

/// `2π − Σ_{ℓ ≤ L} C_ℓ`: area not yet captured by the truncated expansion.
pub fn parseval_residual(spec: &Spectrum) -> f64 {
    2.0 * PI - spec.band_power().iter().sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    OddOnly,
    All,
}

/// Degree in `1..=ell_max` maximising `P_ℓ(cos θ)`, ties to the smaller one.
pub fn ell_star(theta: f64, ell_max: usize, parity: Parity) -> Result<(usize, f64)> {
    if ell_max == 0 {
        return Err(Error::InvalidArgument("ell_max must be ≥ 1".into()));
    }
    let table = legendre_table(ell_max, theta.cos());
    let mut best = (1, table[1]);
    for (l, &v) in table.iter().enumerate().skip(2) {
        if parity == Parity::OddOnly && l % 2 == 0 {
            continue;
        }
        if v > best.1 {
            best = (l, v);
        }
    }
    Ok(best)
}

/// `½ + ½ max_ℓ P_ℓ(cos θ)` over admissible degrees.
pub fn probability_upper_bound(theta: f64, ell_max: usize, parity: Parity) -> Result<f64> {
    let (_, v) = ell_star(theta, ell_max, parity)?;
    Ok(0.5 + 0.5 * v)
}

/// Spectrum text file: header `L=<int> lawn=<id>`, then rows `ℓ m re im`.
/// Bound for antipodal two-lawn setups: the cross spectrum is controlled
/// only in magnitude, so `½ + ½ max_{odd ℓ} |P_ℓ(cos θ)|`.
pub fn two_lawn_upper_bound(theta: f64, ell_max: usize) -> Result<f64> {
    if ell_max == 0 {
        return Err(Error::InvalidArgument("ell_max must be ≥ 1".into()));
    }
    let table = legendre_table(ell_max, theta.cos());
    let peak = table
        .iter()
        .skip(1)
        .step_by(2)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(0.5 + 0.5 * peak)
}

pub fn write_spectrum(spec: &Spectrum) -> String {
    let mut out = format!("L={} lawn={}\n", spec.ell_max, spec.source.replace(' ', "_"));
    for l in 0..=spec.ell_max {
        for m in -(l as i64)..=l as i64 {
            let z = spec.coefficient(l, m);
            let _ = writeln!(out, "{l} {m} {:e} {:e}", z.re, z.im);
        }
    }
    out
}

pub fn read_spectrum(text: &str) -> Result<Spectrum> {
    let mut lines = text.lines().map(|l| l.trim()).filter(|l| !l.is_empty());
    let head = lines
        .next()
        .ok_or_else(|| Error::MalformedFile("empty spectrum file".into()))?;
    let mut ell_max = None;
    let mut source = String::new();
    for tok in head.split_whitespace() {
        match tok.split_once('=') {
            Some(("L", v)) => ell_max = v.parse::<usize>().ok(),
            Some(("lawn", v)) => source = v.to_owned(),
            _ => {}
        }
    }
    let ell_max = ell_max.ok_or_else(|| Error::MalformedFile("missing `L=`".into()))?;
    let mut c = vec![Complex64::new(0.0, 0.0); (ell_max + 1) * (ell_max + 1)];
    let mut seen = vec![false; c.len()];
    for line in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::MalformedFile(format!("bad spectrum row `{line}`"));
        if f.len() != 4 {
            return Err(bad());
        }
        let l: usize = f[0].parse().map_err(|_| bad())?;
        let m: i64 = f[1].parse().map_err(|_| bad())?;
        if l > ell_max || m.unsigned_abs() as usize > l {
            return Err(bad());
        }
        let re: f64 = f[2].parse().map_err(|_| bad())?;
        let im: f64 = f[3].parse().map_err(|_| bad())?;
        c[idx(l, m)] = Complex64::new(re, im);
        seen[idx(l, m)] = true;
    }
    if seen.contains(&false) {
        return Err(Error::MalformedFile("spectrum rows missing".into()));
    }
    Ok(Spectrum::from_complex(ell_max, c, source))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::generate_healpix;
    use crate::interaction::build_shell_table;
    use crate::lawn::{evaluate_probability, hemisphere_lawn, new_random_lawn};

    #[test]
    fn legendre_spot_values() {
        assert_eq!(legendre_p(0, 0.7), 1.0);
        assert_eq!(legendre_p(1, 0.3), 0.3);
        assert_eq!(legendre_p(2, 0.0), -0.5);
        // P_3(x) = (5x³ − 3x)/2
        let x: f64 = 0.37;
        assert!((legendre_p(3, x) - 0.5 * (5.0 * x.powi(3) - 3.0 * x)).abs() < 1e-15);
        for l in 0..200 {
            assert!(legendre_p(l, 0.123).abs() <= 1.0);
        }
    }

    #[test]
    fn low_degree_harmonics_match_closed_forms() {
        let (t, p): (f64, f64) = (0.7, 1.9);
        let (c, s) = (t.cos(), t.sin());
        let plm = normalized_legendre(3, c, s);
        let tri = |l: usize, m: usize| l * (l + 1) / 2 + m;
        let y10 = (3.0 / (4.0 * PI)).sqrt() * c;
        let y11 = -(3.0 / (8.0 * PI)).sqrt() * s;
        let y20 = (5.0 / (16.0 * PI)).sqrt() * (3.0 * c * c - 1.0);
        let y22 = 0.25 * (15.0 / (2.0 * PI)).sqrt() * s * s;
        let y33 = -0.125 * (35.0 / PI).sqrt() * s.powi(3);
        assert!((plm[tri(1, 0)] - y10).abs() < 1e-15);
        assert!((plm[tri(1, 1)] - y11).abs() < 1e-15);
        assert!((plm[tri(2, 0)] - y20).abs() < 1e-15);
        assert!((plm[tri(2, 2)] - y22).abs() < 1e-15);
        assert!((plm[tri(3, 3)] - y33).abs() < 1e-15);
        let _ = p;
    }

    #[test]
    fn addition_theorem() {
        // Σ_m |Y_ℓm|² = (2ℓ+1)/4π, a check of normalisation at high degree
        let (c, s) = (0.31f64.cos(), 0.31f64.sin());
        let l_max = 160;
        let plm = normalized_legendre(l_max, c, s);
        for l in [10, 63, 160] {
            let mut sum = plm[l * (l + 1) / 2].powi(2);
            for m in 1..=l {
                sum += 2.0 * plm[l * (l + 1) / 2 + m].powi(2);
            }
            assert!((sum - (2 * l + 1) as f64 / (4.0 * PI)).abs() < 1e-11, "l={l}");
        }
    }

    #[test]
    fn lawn_spectra_properties() {
        let g = generate_healpix(32).unwrap();
        let s = new_random_lawn(&g, SetupKind::AntipodalOneLawn, 3).unwrap();
        let spec = sph_transform(&s, &g, 1, 31).unwrap();
        let c00 = spec.coefficient(0, 0);
        assert!((c00.re - PI.sqrt()).abs() < 1e-3 * PI.sqrt());
        for l in 0..=31usize {
            for m in 1..=l as i64 {
                let a = spec.coefficient(l, -m);
                let b = spec.coefficient(l, m).conj() * if m % 2 == 0 { 1.0 } else { -1.0 };
                assert!((a - b).norm() < 1e-10);
            }
        }
        for l in (2..=31).step_by(2) {
            for m in -(l as i64)..=l as i64 {
                assert!(spec.coefficient(l, m).norm() < 1e-3, "l={l} m={m}");
            }
        }
    }

    #[test]
    fn hemisphere_is_axisymmetric_and_matches_functional() {
        let g = generate_healpix(32).unwrap();
        let s = hemisphere_lawn(&g, &[0.0, 0.0, 1.0]).unwrap();
        let spec = sph_transform(&s, &g, 1, 63).unwrap();
        for l in 1..=63usize {
            for m in 1..=l as i64 {
                // only the split equator ring breaks the rotational symmetry
                assert!(spec.coefficient(l, m).norm() < 0.02, "l={l} m={m}");
            }
        }
        let theta = 0.3 * PI;
        let p = spectral_probability(&spec, &spec, theta, SetupKind::AntipodalOneLawn).unwrap();
        assert!((p - 0.7).abs() < 1e-2, "{p}");
        let t = build_shell_table(&g, theta).unwrap();
        let direct = evaluate_probability(&s, &t).unwrap();
        assert!((p - direct).abs() < 2e-2);
        let r31 = parseval_residual(&spec.truncated(31));
        let r63 = parseval_residual(&spec);
        assert!(r63 <= r31 + 1e-6);
        assert!(r63 > 0.0 && r63 < 0.15 * 2.0 * PI);
    }

    #[test]
    fn monopole_and_odd_symmetry() {
        let m = Spectrum::monopole(10, PI.sqrt());
        for theta in [0.1, 1.0, 2.5] {
            let p = spectral_probability(&m, &m, theta, SetupKind::AntipodalOneLawn).unwrap();
            assert!((p - 0.5).abs() < 1e-15);
        }
        assert!((parseval_residual(&m) - PI).abs() < 1e-14);
        let g = generate_healpix(8).unwrap();
        let s = new_random_lawn(&g, SetupKind::AntipodalOneLawn, 1).unwrap();
        let spec = sph_transform(&s, &g, 1, 15).unwrap();
        let a = spectral_probability(&spec, &spec, 0.8, SetupKind::AntipodalOneLawn).unwrap();
        let b = spectral_probability(&spec, &spec, PI - 0.8, SetupKind::AntipodalOneLawn).unwrap();
        let p = spectral_probability(&spec, &spec, PI / 2.0, SetupKind::AntipodalOneLawn).unwrap();
        assert!((a + b - 1.0).abs() < 1e-10);
        assert!((p - 0.5).abs() < 1e-10);
        assert_eq!(
            spectral_probability(&spec, &m, 0.5, SetupKind::AntipodalTwoLawn),
            Err(Error::CutoffMismatch(15, 10))
        );
    }

    #[test]
    fn ell_star_table() {
        assert_eq!(ell_star(0.2 * PI, 63, Parity::OddOnly).unwrap().0, 1);
        assert_eq!(ell_star(0.40 * PI, 63, Parity::OddOnly).unwrap().0, 5);
        assert_eq!(ell_star(0.58 * PI, 63, Parity::OddOnly).unwrap().0, 3);
        assert!((probability_upper_bound(PI / 2.0, 63, Parity::OddOnly).unwrap() - 0.5).abs() < 1e-15);
        assert!((probability_upper_bound(1e-6, 63, Parity::OddOnly).unwrap() - 1.0).abs() < 1e-9);
        let th = 0.7;
        assert!((probability_upper_bound(th, 1, Parity::OddOnly).unwrap() - (0.5 + 0.5 * th.cos())).abs() < 1e-15);
        for th in [0.2 * PI, 0.3 * PI] {
            let a = two_lawn_upper_bound(th, 63).unwrap();
            let b = two_lawn_upper_bound(PI - th, 63).unwrap();
            assert!((a - b).abs() < 1e-12);
            assert!(a >= probability_upper_bound(th, 63, Parity::OddOnly).unwrap());
        }
    }

    #[test]
    fn file_round_trip() {
        let g = generate_healpix(4).unwrap();
        let s = new_random_lawn(&g, SetupKind::AntipodalTwoLawn, 2).unwrap();
        let spec = sph_transform(&s, &g, 2, 7).unwrap();
        let back = read_spectrum(&write_spectrum(&spec)).unwrap();
        assert_eq!(back, spec);
        assert!(read_spectrum("L=2 lawn=x\n0 0 1 0\n").is_err());
    }
}
