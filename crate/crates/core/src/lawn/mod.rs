//! Lawn configurations as binary spins, the discrete success functional and
//! moves that preserve area and antipodality.

mod functional;
mod io;
mod oracle;

pub use functional::{
    delta_probability, evaluate_probability, evaluate_probability_streaming, probability_at_antipode,
    FieldTracker,
};
pub use io::{read_lawn, write_lawn, Checkpoint, LawnHeader};
pub use oracle::{mc_oracle_probability, OracleEstimate};

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::grid::SphericalGrid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SetupKind {
    /// One antipodal lawn; the second lawn is its complement.
    AntipodalOneLawn,
    /// Two independent antipodal lawns.
    AntipodalTwoLawn,
    /// One lawn of half the area, no antipodal constraint.
    NonAntipodalOneLawn,
}

impl SetupKind {
    pub fn token(self) -> &'static str {
        match self {
            SetupKind::AntipodalOneLawn => "antipodal-one",
            SetupKind::AntipodalTwoLawn => "antipodal-two",
            SetupKind::NonAntipodalOneLawn => "non-antipodal-one",
        }
    }

    pub fn is_antipodal(self) -> bool {
        !matches!(self, SetupKind::NonAntipodalOneLawn)
    }

    pub fn is_two_lawn(self) -> bool {
        matches!(self, SetupKind::AntipodalTwoLawn)
    }
}

impl fmt::Display for SetupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for SetupKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "antipodal-one" => Ok(SetupKind::AntipodalOneLawn),
            "antipodal-two" => Ok(SetupKind::AntipodalTwoLawn),
            "non-antipodal-one" => Ok(SetupKind::NonAntipodalOneLawn),
            other => Err(Error::InvalidArgument(format!("unknown setup `{other}`"))),
        }
    }
}

/// A single update that keeps areas and antipodality intact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    /// Toggle `site` and its antipode in lawn `lawn` (1 or 2).
    PairFlip { lawn: u8, site: usize },
    /// Turn `on` (currently 1) off and `off` (currently 0) on.
    Exchange { on: usize, off: usize },
}

/// Spin configuration of one or two lawns on a grid.
///
/// For one-lawn setups only `spins1` is stored: the second lawn is the
/// complement of the first, so a jump succeeds when it lands on lawn 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LawnState {
    setup: SetupKind,
    spins1: Vec<u8>,
    spins2: Option<Vec<u8>>,
    fingerprint: String,
    antipodes: Option<Arc<[usize]>>,
    area1: usize,
    area2: usize,
}

impl LawnState {
    /// Validated state from explicit spin vectors.
    pub fn from_spins(
        grid: &SphericalGrid,
        setup: SetupKind,
        spins1: Vec<u8>,
        spins2: Option<Vec<u8>>,
    ) -> Result<Self> {
        let state = Self::from_spins_unchecked(grid, setup, spins1, spins2)?;
        state.validate()?;
        Ok(state)
    }

    /// Builds a state checking only shapes, not area or antipodality.
    /// Useful for normalisation checks of the functional.
    pub fn from_spins_unchecked(
        grid: &SphericalGrid,
        setup: SetupKind,
        spins1: Vec<u8>,
        spins2: Option<Vec<u8>>,
    ) -> Result<Self> {
        let n = grid.n_sites();
        if n % 2 != 0 {
            return Err(Error::OddSiteCount(n));
        }
        let antipodes = if setup.is_antipodal() {
            let map = grid.antipodes().ok_or_else(|| {
                Error::NoAntipodalStructure("antipodal setup needs paired sites".into())
            })?;
            Some(Arc::from(map.pairs.as_slice()))
        } else {
            grid.antipodes().map(|m| Arc::from(m.pairs.as_slice()))
        };
        let check = |s: &[u8], name: &str| -> Result<usize> {
            if s.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "{name} has {} entries, grid has {n}",
                    s.len()
                )));
            }
            if s.iter().any(|&v| v > 1) {
                return Err(Error::InvalidArgument(format!("{name} must be 0/1")));
            }
            Ok(s.iter().filter(|&&v| v == 1).count())
        };
        let area1 = check(&spins1, "spins1")?;
        let spins2 = match (setup.is_two_lawn(), spins2) {
            (true, Some(s)) => Some(s),
            (true, None) => {
                return Err(Error::InvalidArgument("two-lawn setup needs spins2".into()))
            }
            (false, Some(s)) if s == spins1 => None,
            (false, Some(_)) => {
                return Err(Error::InvalidArgument(
                    "one-lawn setup: spins2 must equal spins1".into(),
                ))
            }
            (false, None) => None,
        };
        let area2 = match &spins2 {
            Some(s) => check(s, "spins2")?,
            None => area1,
        };
        Ok(LawnState {
            setup,
            spins1,
            spins2,
            fingerprint: grid.fingerprint().to_owned(),
            antipodes,
            area1,
            area2,
        })
    }

    /// Checks area and antipodality constraints.
    pub fn validate(&self) -> Result<()> {
        let half = self.n_sites() / 2;
        if self.area1 != half || self.area2 != half {
            return Err(Error::InvalidArgument(format!(
                "lawn areas {}/{} differ from N/2 = {half}",
                self.area1, self.area2
            )));
        }
        if self.setup.is_antipodal() {
            let pairs = self.antipodes.as_ref().expect("antipodal state has a map");
            for lawn in self.lawns() {
                if let Some(i) = (0..lawn.len()).find(|&i| lawn[i] + lawn[pairs[i]] != 1) {
                    return Err(Error::InvalidArgument(format!(
                        "site {i} and its antipode {} are not complementary",
                        pairs[i]
                    )));
                }
            }
        }
        Ok(())
    }

    fn lawns(&self) -> impl Iterator<Item = &[u8]> {
        std::iter::once(self.spins1.as_slice()).chain(self.spins2.as_deref())
    }

    pub fn setup(&self) -> SetupKind {
        self.setup
    }

    pub fn n_sites(&self) -> usize {
        self.spins1.len()
    }

    pub fn spins1(&self) -> &[u8] {
        &self.spins1
    }

    /// Second lawn; for one-lawn setups this is `spins1` itself.
    pub fn spins2(&self) -> &[u8] {
        self.spins2.as_deref().unwrap_or(&self.spins1)
    }

    pub fn spins(&self, lawn: u8) -> &[u8] {
        if lawn == 2 {
            self.spins2()
        } else {
            &self.spins1
        }
    }

    pub fn area1(&self) -> usize {
        self.area1
    }

    pub fn area2(&self) -> usize {
        self.area2
    }

    pub fn grid_fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn antipode(&self, i: usize) -> Option<usize> {
        self.antipodes.as_ref().map(|p| p[i])
    }

    /// Spin of the landing indicator at site `j`: 1 when landing on `j`
    /// counts as success.
    #[inline]
    pub fn target(&self, j: usize) -> u8 {
        match &self.spins2 {
            Some(s2) => 1 - s2[j],
            None => self.spins1[j],
        }
    }

    /// Fails with `GridMismatch` unless the state lives on `grid`.
    pub fn check_grid(&self, grid: &SphericalGrid) -> Result<()> {
        if grid.fingerprint() != self.fingerprint {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Sites toggled by `mv` with their spin change (+1/−1), per lawn.
    pub fn move_toggles(&self, mv: &Move) -> Result<(u8, [(usize, i8); 2])> {
        match *mv {
            Move::PairFlip { lawn, site } => {
                if !self.setup.is_antipodal() {
                    return Err(Error::InvalidMove(
                        "pair flips need an antipodal setup".into(),
                    ));
                }
                if lawn == 0 || lawn > 2 || (lawn == 2 && !self.setup.is_two_lawn()) {
                    return Err(Error::InvalidMove(format!("no lawn {lawn} in this setup")));
                }
                if site >= self.n_sites() {
                    return Err(Error::InvalidMove(format!("site {site} out of range")));
                }
                let j = self.antipode(site).expect("antipodal map");
                let s = self.spins(lawn);
                let d = |v: u8| if v == 1 { -1 } else { 1 };
                Ok((lawn, [(site, d(s[site])), (j, d(s[j]))]))
            }
            Move::Exchange { on, off } => {
                if self.setup != SetupKind::NonAntipodalOneLawn {
                    return Err(Error::InvalidMove(
                        "exchanges are only valid without the antipodal constraint".into(),
                    ));
                }
                let n = self.n_sites();
                if on >= n || off >= n || self.spins1[on] != 1 || self.spins1[off] != 0 {
                    return Err(Error::InvalidMove(format!(
                        "exchange needs a 1 at {on} and a 0 at {off}"
                    )));
                }
                Ok((1, [(on, -1), (off, 1)]))
            }
        }
    }

    /// Applies a valid move in place.
    pub fn apply_move(&mut self, mv: &Move) -> Result<()> {
        let (lawn, toggles) = self.move_toggles(mv)?;
        self.apply_toggles(lawn, &toggles);
        Ok(())
    }

    pub(crate) fn apply_toggles(&mut self, lawn: u8, toggles: &[(usize, i8)]) {
        let (spins, area) = if lawn == 2 && self.spins2.is_some() {
            (self.spins2.as_mut().unwrap(), &mut self.area2)
        } else {
            (&mut self.spins1, &mut self.area1)
        };
        for &(i, d) in toggles {
            spins[i] = (spins[i] as i8 + d) as u8;
            if d > 0 {
                *area += 1;
            } else {
                *area -= 1;
            }
        }
        if self.spins2.is_none() {
            self.area2 = self.area1;
        }
    }

    /// Draws a uniformly random valid move.
    pub fn random_move<R: Rng + ?Sized>(&self, rng: &mut R) -> Move {
        let n = self.n_sites();
        match self.setup {
            SetupKind::AntipodalOneLawn => Move::PairFlip {
                lawn: 1,
                site: rng.gen_range(0..n),
            },
            SetupKind::AntipodalTwoLawn => Move::PairFlip {
                lawn: rng.gen_range(1..=2),
                site: rng.gen_range(0..n),
            },
            SetupKind::NonAntipodalOneLawn => loop {
                let on = rng.gen_range(0..n);
                let off = rng.gen_range(0..n);
                if self.spins1[on] == 1 && self.spins1[off] == 0 {
                    break Move::Exchange { on, off };
                }
            },
        }
    }
}

fn random_antipodal(pairs: &[usize], rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut s = vec![0u8; pairs.len()];
    for i in 0..pairs.len() {
        let j = pairs[i];
        if i < j {
            if rng.gen::<bool>() {
                s[i] = 1;
            } else {
                s[j] = 1;
            }
        }
    }
    s
}

/// Uniformly random valid configuration, deterministic in `seed`.
pub fn new_random_lawn(grid: &SphericalGrid, setup: SetupKind, seed: u64) -> Result<LawnState> {
    let n = grid.n_sites();
    if n % 2 != 0 {
        return Err(Error::OddSiteCount(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (s1, s2) = match setup {
        SetupKind::NonAntipodalOneLawn => {
            let mut s = vec![0u8; n];
            let mut ids: Vec<usize> = (0..n).collect();
            rand::seq::SliceRandom::shuffle(ids.as_mut_slice(), &mut rng);
            for &i in &ids[..n / 2] {
                s[i] = 1;
            }
            (s, None)
        }
        _ => {
            let map = grid.antipodes().ok_or_else(|| {
                Error::NoAntipodalStructure("antipodal setup needs paired sites".into())
            })?;
            let s1 = random_antipodal(&map.pairs, &mut rng);
            let s2 = setup
                .is_two_lawn()
                .then(|| random_antipodal(&map.pairs, &mut rng));
            (s1, s2)
        }
    };
    LawnState::from_spins(grid, setup, s1, s2)
}

/// Ordering key deciding which side of the great circle a site is on.
/// Exact ties on the axis fall back to two fixed perpendicular directions;
/// the key is odd in `axis`, so opposite axes give complementary lawns.
fn side_key(frame: &geom::Frame, p: &Vec3) -> [f64; 3] {
    [geom::dot(p, &frame.e3), geom::dot(p, &frame.e1), geom::dot(p, &frame.e2)]
}

fn key_cmp(a: &[f64; 3], b: &[f64; 3]) -> std::cmp::Ordering {
    a[0].total_cmp(&b[0])
        .then(a[1].total_cmp(&b[1]))
        .then(a[2].total_cmp(&b[2]))
}

/// Half-sphere lawn `{p · axis > 0}` with exactly `N/2` sites.
///
/// On antipodally paired grids the site with the larger projection of each
/// pair is taken, giving an antipodal one-lawn state. Otherwise sites closest
/// to the boundary are toggled (smallest `|p·axis|` first, ties by index)
/// until the area is exact.
pub fn hemisphere_lawn(grid: &SphericalGrid, axis: &Vec3) -> Result<LawnState> {
    let n = grid.n_sites();
    if n % 2 != 0 {
        return Err(Error::OddSiteCount(n));
    }
    let frame = geom::Frame::new(axis);
    let keys: Vec<[f64; 3]> = grid.points().iter().map(|p| side_key(&frame, p)).collect();
    let mut s = vec![0u8; n];
    if let Some(map) = grid.antipodes() {
        for i in 0..n {
            let j = map.partner(i);
            let take_i = match key_cmp(&keys[i], &keys[j]) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => i < j,
            };
            if take_i {
                s[i] = 1;
            }
        }
        return LawnState::from_spins(grid, SetupKind::AntipodalOneLawn, s, None);
    }
    for (i, k) in keys.iter().enumerate() {
        if key_cmp(k, &[0.0; 3]) == std::cmp::Ordering::Greater {
            s[i] = 1;
        }
    }
    let count = s.iter().filter(|&&v| v == 1).count();
    if count != n / 2 {
        let surplus = count > n / 2;
        let want = if surplus { 1 } else { 0 };
        let mut cand: Vec<usize> = (0..n).filter(|&i| s[i] == want).collect();
        cand.sort_by(|&a, &b| keys[a][0].abs().total_cmp(&keys[b][0].abs()).then(a.cmp(&b)));
        for &i in cand.iter().take(count.abs_diff(n / 2)) {
            s[i] = 1 - want;
        }
    }
    LawnState::from_spins(grid, SetupKind::NonAntipodalOneLawn, s, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{generate_healpix, octahedron, GridKind};

    #[test]
    fn random_octahedron_one_per_pair() {
        let g = octahedron();
        let s = new_random_lawn(&g, SetupKind::AntipodalOneLawn, 1).unwrap();
        assert_eq!(s.area1(), 3);
        for i in 0..6 {
            assert_eq!(s.spins1()[i] + s.spins1()[g.antipodes().unwrap().partner(i)], 1);
        }
        assert_eq!(s, new_random_lawn(&g, SetupKind::AntipodalOneLawn, 1).unwrap());
    }

    #[test]
    fn non_antipodal_half_area() {
        let g = generate_healpix(1).unwrap();
        let s = new_random_lawn(&g, SetupKind::NonAntipodalOneLawn, 5).unwrap();
        assert_eq!(s.area1(), 6);
        assert_eq!(s.spins2(), s.spins1());
    }

    #[test]
    fn antipodal_setup_needs_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<Vec3> = (0..20).map(|_| geom::random_unit(&mut rng)).collect();
        let g = SphericalGrid::new(pts, GridKind::Custom).unwrap();
        assert!(matches!(
            new_random_lawn(&g, SetupKind::AntipodalOneLawn, 0),
            Err(Error::NoAntipodalStructure(_))
        ));
        let odd: Vec<Vec3> = vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let g = SphericalGrid::new(odd, GridKind::Custom).unwrap();
        assert!(matches!(
            new_random_lawn(&g, SetupKind::NonAntipodalOneLawn, 0),
            Err(Error::OddSiteCount(3))
        ));
    }

    #[test]
    fn hemisphere_on_octahedron() {
        let g = octahedron();
        let s = hemisphere_lawn(&g, &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(s.area1(), 3);
        assert_eq!(s.spins1()[4], 1);
        assert_eq!(s.spins1()[5], 0);
    }

    #[test]
    fn opposite_axes_complement() {
        let g = generate_healpix(8).unwrap();
        for axis in [[0.0, 0.0, 1.0], geom::normalize(&[0.3, -0.2, 0.9]), [1.0, 0.0, 0.0]] {
            let a = hemisphere_lawn(&g, &axis).unwrap();
            let b = hemisphere_lawn(&g, &geom::neg(&axis)).unwrap();
            for i in 0..g.n_sites() {
                assert_eq!(a.spins1()[i] + b.spins1()[i], 1);
            }
        }
    }

    #[test]
    fn hemisphere_without_pairs_is_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts: Vec<Vec3> = (0..1000).map(|_| geom::random_unit(&mut rng)).collect();
        let g = SphericalGrid::new(pts, GridKind::Custom).unwrap();
        let axis = geom::random_unit(&mut rng);
        let s = hemisphere_lawn(&g, &axis).unwrap();
        assert_eq!(s.area1(), 500);
        assert_eq!(s.setup(), SetupKind::NonAntipodalOneLawn);
        // every lawn site is further above the boundary than any non-lawn site
        let lo = (0..1000).filter(|&i| s.spins1()[i] == 1).map(|i| geom::dot(g.point(i), &axis)).fold(f64::INFINITY, f64::min);
        let hi = (0..1000).filter(|&i| s.spins1()[i] == 0).map(|i| geom::dot(g.point(i), &axis)).fold(f64::NEG_INFINITY, f64::max);
        assert!(lo >= hi);
    }

    #[test]
    fn moves_preserve_constraints() {
        let g = generate_healpix(4).unwrap();
        let mut s = new_random_lawn(&g, SetupKind::AntipodalTwoLawn, 3).unwrap();
        let orig = s.clone();
        let mv = Move::PairFlip { lawn: 2, site: 17 };
        s.apply_move(&mv).unwrap();
        s.validate().unwrap();
        assert_ne!(s, orig);
        s.apply_move(&mv).unwrap();
        assert_eq!(s, orig);

        let mut t = new_random_lawn(&g, SetupKind::NonAntipodalOneLawn, 3).unwrap();
        let on = t.spins1().iter().position(|&v| v == 1).unwrap();
        let off = t.spins1().iter().position(|&v| v == 0).unwrap();
        t.apply_move(&Move::Exchange { on, off }).unwrap();
        assert_eq!(t.area1(), g.n_sites() / 2);
        assert!(matches!(
            t.apply_move(&Move::Exchange { on, off }),
            Err(Error::InvalidMove(_))
        ));
        assert!(matches!(
            t.apply_move(&Move::PairFlip { lawn: 1, site: 0 }),
            Err(Error::InvalidMove(_))
        ));
    }
}
