//! Semi-analytic success probabilities for lawns with triangular cogs.
//!
//! The lawn is the northern hemisphere with `k` spherical triangles
//! ("teeth") added below the equator and their antipodal images ("gaps")
//! removed above it. Azimuthal slots of width `π/k` alternate tooth, gap,
//! tooth, … starting with tooth 0 centred at azimuth 0; `k` must be odd so
//! that the antipode of every tooth is a gap.

mod quadrature;

pub use quadrature::integrate;

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt::Write as _;

const TANGENT_EPS: f64 = 1e-13;
const NUDGE: f64 = 1e-11;
const MAX_PIECES: usize = 4000;

#[derive(Debug, Clone)]
struct Triangle {
    /// Inward normals of the three sides; the first side lies on the equator.
    inward: [Vec3; 3],
    vertices: [Vec3; 3],
    cap_center: Vec3,
    cap_radius: f64,
}

impl Triangle {
    fn new(a: Vec3, b: Vec3, c: Vec3) -> Self {
        let centroid = geom::normalize(&geom::add(&geom::add(&a, &b), &c));
        let orient = |n: Vec3| if geom::dot(&n, &centroid) < 0.0 { geom::neg(&n) } else { n };
        let inward = [
            orient(geom::normalize(&geom::cross(&a, &b))),
            orient(geom::normalize(&geom::cross(&b, &c))),
            orient(geom::normalize(&geom::cross(&c, &a))),
        ];
        let cap_radius = [a, b, c]
            .iter()
            .map(|v| geom::spherical_angle(v, &centroid))
            .fold(0.0, f64::max);
        Triangle {
            inward,
            vertices: [a, b, c],
            cap_center: centroid,
            cap_radius,
        }
    }

    fn contains(&self, x: &Vec3) -> bool {
        self.inward.iter().all(|n| geom::dot(n, x) >= 0.0)
    }
}

/// Triangular-cog lawn for jump `π/q`.
#[derive(Debug, Clone)]
pub struct CoggedLawnSpec {
    pub q: usize,
    pub k: usize,
    pub height: f64,
    /// One triangle per slot `0..2k`; empty when the height is zero.
    slots: Vec<Triangle>,
}

/// Part of the sphere as partitioned by a cogged lawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    /// Northern hemisphere outside the gaps.
    North,
    /// Southern hemisphere outside the teeth.
    South,
    /// Triangle in slot `s`; a tooth for even `s`, a gap for odd `s`.
    Slot(usize),
}

pub fn build_cogged_lawn(q: usize, k: usize, height: f64) -> Result<CoggedLawnSpec> {
    if q < 2 {
        return Err(Error::InvalidGeometry("q must be at least 2".into()));
    }
    if k == 0 || k % 2 == 0 {
        return Err(Error::InvalidGeometry(
            "the cog count must be odd for teeth and gaps to be antipodal".into(),
        ));
    }
    if !(0.0..PI / 2.0).contains(&height) {
        return Err(Error::InvalidGeometry(format!(
            "cog height {height} outside [0, π/2)"
        )));
    }
    let slot = PI / k as f64;
    let slots = if height == 0.0 {
        Vec::new()
    } else {
        (0..2 * k)
            .map(|s| {
                let c = s as f64 * slot;
                let apex_polar = if s % 2 == 0 {
                    PI / 2.0 + height
                } else {
                    PI / 2.0 - height
                };
                Triangle::new(
                    geom::from_polar(PI / 2.0, c - slot / 2.0),
                    geom::from_polar(PI / 2.0, c + slot / 2.0),
                    geom::from_polar(apex_polar, c),
                )
            })
            .collect()
    };
    Ok(CoggedLawnSpec { q, k, height, slots })
}

impl CoggedLawnSpec {
    pub fn theta(&self) -> f64 {
        PI / self.q as f64
    }

    pub fn n_slots(&self) -> usize {
        2 * self.k
    }

    /// Region containing `x`.
    pub fn classify(&self, x: &Vec3) -> Region {
        let north = x[2] >= 0.0;
        if self.slots.is_empty() {
            return if north { Region::North } else { Region::South };
        }
        let width = PI / self.k as f64;
        let s = ((geom::azimuth(x) / width + 0.5).floor() as usize) % self.n_slots();
        if (s % 2 == 1) == north && self.slots[s].contains(x) {
            Region::Slot(s)
        } else if north {
            Region::North
        } else {
            Region::South
        }
    }

    /// Whether `x` belongs to the lawn.
    pub fn contains(&self, x: &Vec3) -> bool {
        match self.classify(x) {
            Region::North => true,
            Region::South => false,
            Region::Slot(s) => s % 2 == 0,
        }
    }

    /// Area of one tooth.
    pub fn tooth_area(&self) -> f64 {
        match self.slots.first() {
            None => 0.0,
            Some(t) => {
                let [a, b, c] = t.vertices;
                // spherical excess via the Van Oosterom–Strackee formula
                let num = geom::dot(&a, &geom::cross(&b, &c)).abs();
                let den = 1.0 + geom::dot(&a, &b) + geom::dot(&b, &c) + geom::dot(&c, &a);
                2.0 * num.atan2(den)
            }
        }
    }

    /// Polar angle of the boundary of slot `s` at azimuth `phi`, which must
    /// lie within the slot.
    fn side_polar(&self, s: usize, phi: f64) -> f64 {
        let t = &self.slots[s];
        let centre = s as f64 * PI / self.k as f64;
        let n = if phi >= centre { t.inward[1] } else { t.inward[2] };
        let d = n[0] * phi.cos() + n[1] * phi.sin();
        let polar = if n[2] >= 0.0 {
            n[2].atan2(-d)
        } else {
            (-n[2]).atan2(d)
        };
        polar.clamp(0.0, PI)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionArc {
    /// Start and end angle about the centre, anticlockwise seen from outside.
    pub start: f64,
    pub end: f64,
    pub region: Region,
}

/// Decomposition of one jump circle into arcs by region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionArcs {
    pub arcs: Vec<RegionArc>,
    pub north: f64,
    pub south: f64,
    /// Fraction per slot, teeth at even and gaps at odd indices.
    pub slots: Vec<f64>,
    /// The jump angle was shifted by `1e-11` to escape a tangency.
    pub nudged: bool,
}

impl RegionArcs {
    /// Fraction of the circle in the northern hemisphere.
    pub fn hemisphere(&self) -> f64 {
        self.north + self.slots.iter().skip(1).step_by(2).sum::<f64>()
    }

    pub fn teeth(&self) -> f64 {
        self.slots.iter().step_by(2).sum()
    }

    pub fn gaps(&self) -> f64 {
        self.slots.iter().skip(1).step_by(2).sum()
    }

    pub fn fraction(&self, region: Region) -> f64 {
        match region {
            Region::North => self.north,
            Region::South => self.south,
            Region::Slot(s) => self.slots[s],
        }
    }
}

enum Crossings {
    Clear,
    Tangent,
}

fn circle_crossings(
    p: &Vec3,
    u: &Vec3,
    v: &Vec3,
    theta: f64,
    normal: &Vec3,
    out: &mut Vec<f64>,
) -> Crossings {
    let (s, c) = theta.sin_cos();
    let a = s * geom::dot(normal, u);
    let b = s * geom::dot(normal, v);
    let rhs = -c * geom::dot(normal, p);
    let r = a.hypot(b);
    if (r - rhs.abs()).abs() < TANGENT_EPS {
        return Crossings::Tangent;
    }
    if r < rhs.abs() {
        return Crossings::Clear;
    }
    let base = b.atan2(a);
    let delta = (rhs / r).acos();
    out.push((base - delta).rem_euclid(2.0 * PI));
    out.push((base + delta).rem_euclid(2.0 * PI));
    Crossings::Clear
}

/// Arcs of the circle of angular radius `theta` about `p`, by region.
pub fn jump_circle_region_arcs(p: &Vec3, theta: f64, spec: &CoggedLawnSpec) -> Result<RegionArcs> {
    if theta.sin() <= 0.0 {
        return Err(Error::InvalidArgument("jump angle must lie in (0, π)".into()));
    }
    match arcs_at(p, theta, spec)? {
        Some(a) => Ok(a),
        None => match arcs_at(p, theta + NUDGE, spec)? {
            Some(mut a) => {
                a.nudged = true;
                Ok(a)
            }
            None => Err(Error::TangencyUnresolved),
        },
    }
}

fn arcs_at(p: &Vec3, theta: f64, spec: &CoggedLawnSpec) -> Result<Option<RegionArcs>> {
    let p = geom::normalize(p);
    let u = geom::orthogonal(&p);
    let v = geom::cross(&p, &u);
    let mut angles = Vec::with_capacity(16);
    let equator = [0.0, 0.0, 1.0];
    if let Crossings::Tangent = circle_crossings(&p, &u, &v, theta, &equator, &mut angles) {
        return Ok(None);
    }
    for t in &spec.slots {
        let d = geom::spherical_angle(&p, &t.cap_center);
        if (d - theta).abs() > t.cap_radius + 1e-12 {
            continue;
        }
        for n in &t.inward[1..] {
            if let Crossings::Tangent = circle_crossings(&p, &u, &v, theta, n, &mut angles) {
                return Ok(None);
            }
        }
    }
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let (st, ct) = theta.sin_cos();
    let point = |psi: f64| {
        let (s, c) = psi.sin_cos();
        geom::add(
            &geom::scale(&p, ct),
            &geom::add(&geom::scale(&u, st * c), &geom::scale(&v, st * s)),
        )
    };
    let mut out = RegionArcs {
        arcs: Vec::new(),
        north: 0.0,
        south: 0.0,
        slots: vec![0.0; spec.n_slots()],
        nudged: false,
    };
    let bounds: Vec<(f64, f64)> = if angles.is_empty() {
        vec![(0.0, 2.0 * PI)]
    } else {
        (0..angles.len())
            .map(|i| {
                let a = angles[i];
                let b = if i + 1 < angles.len() {
                    angles[i + 1]
                } else {
                    angles[0] + 2.0 * PI
                };
                (a, b)
            })
            .collect()
    };
    for (a, b) in bounds {
        if b - a <= 0.0 {
            continue;
        }
        let region = spec.classify(&point(0.5 * (a + b)));
        let frac = (b - a) / (2.0 * PI);
        match region {
            Region::North => out.north += frac,
            Region::South => out.south += frac,
            Region::Slot(s) => out.slots[s] += frac,
        }
        match out.arcs.last_mut() {
            Some(last) if last.region == region => last.end = b,
            _ => out.arcs.push(RegionArc { start: a, end: b, region }),
        }
    }
    Ok(Some(out))
}

/// Source domains for pair probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Source {
    Hemisphere,
    Slot(usize),
}

/// Target sets for pair probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Target {
    Hemisphere,
    AntiHemisphere,
    Slot(usize),
}

fn target_fraction(arcs: &RegionArcs, target: Target) -> f64 {
    match target {
        Target::Hemisphere => arcs.hemisphere(),
        Target::AntiHemisphere => 1.0 - arcs.hemisphere(),
        Target::Slot(s) => arcs.slots[s],
    }
}

/// `∫∫ f(φ, ϑ) sinϑ dϑ dφ` over `φ ∈ [φ0, φ1]`, `ϑ` between `lo(φ)` and `hi(φ)`.
fn integrate_patch<F, L, H>(
    f: F,
    phi: (f64, f64),
    lo: L,
    hi: H,
    tol: f64,
) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<f64>,
    L: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    let failure = std::cell::RefCell::new(None);
    let record = |e: Error| {
        failure.borrow_mut().get_or_insert(e);
        0.0
    };
    let width = phi.1 - phi.0;
    let inner_tol = 0.1 * tol / width.max(1e-300);
    let outer = integrate(
        |ph| {
            let (a, b) = (lo(ph), hi(ph));
            integrate(
                |th| f(ph, th).map(|v| v * th.sin()).unwrap_or_else(record),
                a,
                b,
                inner_tol,
                MAX_PIECES,
            )
            .unwrap_or_else(record)
        },
        phi.0,
        phi.1,
        0.5 * tol,
        MAX_PIECES,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    outer
}

fn integrate_source<F>(spec: &CoggedLawnSpec, source: Source, f: F, tol: f64) -> Result<f64>
where
    F: Fn(&Vec3) -> Result<f64>,
{
    let g = |ph: f64, th: f64| f(&geom::from_polar(th, ph));
    match source {
        Source::Hemisphere => {
            // split at slot boundaries so cog edges fall on panel edges
            let width = PI / spec.k as f64;
            let mut total = 0.0;
            for s in 0..spec.n_slots() {
                let a = (s as f64 - 0.5) * width;
                total += integrate_patch(
                    &g,
                    (a, a + width),
                    |_| 0.0,
                    |_| PI / 2.0,
                    tol / spec.n_slots() as f64,
                )?;
            }
            Ok(total)
        }
        Source::Slot(s) => {
            if spec.slots.is_empty() {
                return Ok(0.0);
            }
            if s >= spec.n_slots() {
                return Err(Error::InvalidArgument(format!("no slot {s}")));
            }
            let width = PI / spec.k as f64;
            let c = s as f64 * width;
            let mut total = 0.0;
            for half in [(c - width / 2.0, c), (c, c + width / 2.0)] {
                total += if s % 2 == 0 {
                    integrate_patch(&g, half, |_| PI / 2.0, |ph| spec.side_polar(s, ph), tol / 2.0)?
                } else {
                    integrate_patch(&g, half, |ph| spec.side_polar(s, ph), |_| PI / 2.0, tol / 2.0)?
                };
            }
            Ok(total)
        }
    }
}

/// Jump probability from `source` to `target` with density `1/2π`, to
/// absolute tolerance `tol`.
pub fn region_pair_probability(
    spec: &CoggedLawnSpec,
    theta: f64,
    source: Source,
    target: Target,
    tol: f64,
) -> Result<f64> {
    let value = integrate_source(
        spec,
        source,
        |p| Ok(target_fraction(&jump_circle_region_arcs(p, theta, spec)?, target)),
        tol * 2.0 * PI,
    )?;
    Ok(value / (2.0 * PI))
}

/// Default absolute tolerance on probabilities.
pub const DEFAULT_TOL: f64 = 1e-10;

/// `L² − H²` at jump `theta`: `(k/π) ∫_{T₀} (north − south)` using the
/// mirror symmetry of tooth 0.
pub fn cogged_excess(spec: &CoggedLawnSpec, theta: f64, tol: f64) -> Result<f64> {
    if spec.slots.is_empty() {
        return Ok(0.0);
    }
    let width = PI / spec.k as f64;
    let g = |ph: f64, th: f64| {
        let arcs = jump_circle_region_arcs(&geom::from_polar(th, ph), theta, spec)?;
        Ok(arcs.north - arcs.south)
    };
    let scale = 2.0 * spec.k as f64 / PI;
    let half = integrate_patch(
        g,
        (0.0, width / 2.0),
        |_| PI / 2.0,
        |ph| spec.side_polar(0, ph),
        tol / scale,
    )?;
    Ok(scale * half)
}

/// Success probability of the cogged lawn at jump `theta`.
pub fn cogged_success_probability(spec: &CoggedLawnSpec, theta: f64) -> Result<f64> {
    Ok(1.0 - theta / PI + cogged_excess(spec, theta, DEFAULT_TOL)?)
}

/// Cogged success probability at `θ_q` minus the hemisphere's `1 − 1/q`.
pub fn success_deficit(q: usize, k: usize, height: f64) -> Result<f64> {
    let spec = build_cogged_lawn(q, k, height)?;
    cogged_excess(&spec, spec.theta(), DEFAULT_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeficitRow {
    pub q: usize,
    pub k: usize,
    pub height: f64,
    pub deficit: f64,
}

/// Deficits at evenly spaced heights `0, max/(n−1), …, max`.
pub fn deficit_scan(q: usize, k: usize, max_height: f64, points: usize) -> Result<Vec<DeficitRow>> {
    use rayon::prelude::*;
    if points < 2 {
        return Err(Error::InvalidArgument("a scan needs at least two heights".into()));
    }
    (0..points)
        .into_par_iter()
        .map(|i| {
            let height = max_height * i as f64 / (points - 1) as f64;
            Ok(DeficitRow {
                q,
                k,
                height,
                deficit: success_deficit(q, k, height)?,
            })
        })
        .collect()
}

/// CSV with header `q,k,height,deficit`, 15 significant digits.
pub fn write_deficit_csv(rows: &[DeficitRow]) -> String {
    let mut out = String::from("q,k,height,deficit\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{:.14e},{:.14e}", r.q, r.k, r.height, r.deficit);
    }
    out
}
