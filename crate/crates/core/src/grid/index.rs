//! Latitude-band spatial index for annulus and nearest-site queries.

use crate::geom::{self, Vec3};
use std::f64::consts::PI;

#[derive(Debug, Clone)]
struct Entry {
    azimuth: f64,
    id: usize,
    point: Vec3,
}

#[derive(Debug, Clone)]
struct Band {
    center: f64,
    entries: Vec<Entry>,
}

/// Sites bucketed into polar-angle bands, each sorted by azimuth.
#[derive(Debug, Clone)]
pub struct SiteIndex {
    band_width: f64,
    bands: Vec<Band>,
    len: usize,
}

const PAD: f64 = 1e-9;

impl SiteIndex {
    /// Builds an index over `(id, point)` pairs with bands of roughly `width`.
    pub fn new<I>(sites: I, width: f64) -> Self
    where
        I: IntoIterator<Item = (usize, Vec3)>,
    {
        let n_bands = ((PI / width).ceil() as usize).clamp(1, 1 << 16);
        let band_width = PI / n_bands as f64;
        let mut bands: Vec<Band> = (0..n_bands)
            .map(|b| Band {
                center: (b as f64 + 0.5) * band_width,
                entries: Vec::new(),
            })
            .collect();
        let mut len = 0;
        for (id, point) in sites {
            let b = ((geom::polar(&point) / band_width) as usize).min(n_bands - 1);
            bands[b].entries.push(Entry {
                azimuth: geom::azimuth(&point),
                id,
                point,
            });
            len += 1;
        }
        for band in &mut bands {
            band.entries
                .sort_by(|a, b| a.azimuth.total_cmp(&b.azimuth).then(a.id.cmp(&b.id)));
        }
        SiteIndex {
            band_width,
            bands,
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Calls `visit(id, angle)` for every indexed site whose spherical angle
    /// to `p` lies in `[r_min, r_max]`.
    pub fn for_each_in_annulus<F>(&self, p: &Vec3, r_min: f64, r_max: f64, mut visit: F)
    where
        F: FnMut(usize, f64),
    {
        let theta_p = geom::polar(p);
        let phi_p = geom::azimuth(p);
        let half = 0.5 * self.band_width;
        let lo = theta_p - r_max - half;
        let hi = theta_p + r_max + half;
        let (sp, cp) = theta_p.sin_cos();
        for band in &self.bands {
            if band.center + half < lo || band.center - half > hi || band.entries.is_empty() {
                continue;
            }
            let (sc, cc) = band.center.sin_cos();
            let denom = sp * sc;
            let outer = r_max + half + PAD;
            let inner = r_min - half - PAD;
            let (outer_half, inner_half) = if denom < 1e-12 {
                (PI, -1.0)
            } else {
                let t_out = (outer.min(PI).cos() - cp * cc) / denom;
                let o = if t_out <= -1.0 {
                    PI
                } else if t_out > 1.0 {
                    continue;
                } else {
                    (t_out.acos() + PAD).min(PI)
                };
                let i = if inner <= 0.0 {
                    -1.0
                } else {
                    let t_in = (inner.cos() - cp * cc) / denom;
                    if t_in <= -1.0 {
                        // whole band is strictly inside the inner disk
                        continue;
                    } else if t_in >= 1.0 {
                        -1.0
                    } else {
                        t_in.acos() - PAD
                    }
                };
                (o, i)
            };
            let mut scan = |a: f64, b: f64| {
                // azimuth range [a, b] inside [0, 2π)
                let start = band.entries.partition_point(|e| e.azimuth < a);
                for e in &band.entries[start..] {
                    if e.azimuth > b {
                        break;
                    }
                    let d = geom::spherical_angle(p, &e.point);
                    if d >= r_min && d <= r_max {
                        visit(e.id, d);
                    }
                }
            };
            if outer_half >= PI && inner_half <= 0.0 {
                scan(0.0, 2.0 * PI);
                continue;
            }
            let mut ranges: Vec<(f64, f64)> = Vec::with_capacity(2);
            if inner_half <= 0.0 {
                ranges.push((phi_p - outer_half, phi_p + outer_half));
            } else if outer_half >= PI {
                // one contiguous range, so the far side is not visited twice
                ranges.push((phi_p + inner_half, phi_p + 2.0 * PI - inner_half));
            } else {
                ranges.push((phi_p + inner_half, phi_p + outer_half));
                ranges.push((phi_p - outer_half, phi_p - inner_half));
            }
            for (a, b) in ranges {
                for (x, y) in wrap_range(a, b) {
                    scan(x, y);
                }
            }
        }
    }

    /// Nearest indexed site to `q` and its angle.
    pub fn nearest(&self, q: &Vec3) -> Option<(usize, f64)> {
        if self.len == 0 {
            return None;
        }
        let mut radius = self.band_width.max(1e-6);
        loop {
            let mut best: Option<(usize, f64)> = None;
            self.for_each_in_annulus(q, 0.0, radius, |id, d| match best {
                Some((bid, bd)) if d > bd || (d == bd && id > bid) => {}
                _ => best = Some((id, d)),
            });
            if best.is_some() {
                return best;
            }
            if radius >= PI {
                return None;
            }
            radius = (radius * 2.0).min(PI);
        }
    }
}

/// Splits `[a, b]` (with `b − a ≤ 2π`) into pieces inside `[0, 2π)`.
fn wrap_range(a: f64, b: f64) -> Vec<(f64, f64)> {
    let two_pi = 2.0 * PI;
    if b - a >= two_pi {
        return vec![(0.0, two_pi)];
    }
    let a0 = a.rem_euclid(two_pi);
    let b0 = a0 + (b - a);
    if b0 < two_pi {
        vec![(a0, b0)]
    } else {
        vec![(a0, two_pi), (0.0, b0 - two_pi)]
    }
}
