//! Text grid files: `N=<int> kind=<token>` header, N coordinate rows and an
//! optional `ANTIPODES` block of `<i> <j>` rows.

use super::{AntipodeMap, GridKind, SphericalGrid};
use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use std::fmt::Write as _;
use std::path::Path;

/// Reads a grid file from disk. `kind` overrides the header token.
pub fn load_point_set(path: impl AsRef<Path>, kind: GridKind) -> Result<SphericalGrid> {
    let text = std::fs::read_to_string(path)?;
    read_point_set(&text, kind)
}

fn parse_header(line: &str) -> Result<(usize, Option<GridKind>)> {
    let mut n = None;
    let mut kind = None;
    for tok in line.split_whitespace() {
        match tok.split_once('=') {
            Some(("N", v)) => {
                n = Some(v.parse::<usize>().map_err(|_| {
                    Error::MalformedFile(format!("bad site count `{v}` in header"))
                })?)
            }
            Some(("kind", v)) => kind = Some(v.parse::<GridKind>()?),
            _ => {}
        }
    }
    let n = n.ok_or_else(|| Error::MalformedFile("header lacks `N=`".into()))?;
    if n == 0 {
        return Err(Error::MalformedFile("header declares zero sites".into()));
    }
    Ok((n, kind))
}

/// Parses grid-file text.
///
/// Rows within 1e-9 of unit norm are renormalised; others are rejected.
/// A supplied `ANTIPODES` block replaces the automatic pairing.
pub fn read_point_set(text: &str, kind: GridKind) -> Result<SphericalGrid> {
    let mut lines = text
        .lines()
        .map(|l| l.trim_end_matches('\r').trim())
        .filter(|l| !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::MalformedFile("empty file".into()))?;
    let (n, _) = parse_header(header)?;

    let mut points: Vec<Vec3> = Vec::with_capacity(n);
    for i in 0..n {
        let row = lines.next().ok_or_else(|| {
            Error::MalformedFile(format!("expected {n} coordinate rows, found {i}"))
        })?;
        let vals: Vec<f64> = row
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::MalformedFile(format!("row {i}: cannot parse `{row}`")))?;
        if vals.len() != 3 || vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedFile(format!(
                "row {i}: expected three finite numbers"
            )));
        }
        let p = [vals[0], vals[1], vals[2]];
        let r = geom::norm(&p);
        if (r - 1.0).abs() > 1e-9 {
            return Err(Error::NonUnitPoint { index: i, norm: r });
        }
        // keep exact bits for rows that are already unit to rounding
        points.push(if (r - 1.0).abs() > 1e-14 { geom::scale(&p, 1.0 / r) } else { p });
    }

    match lines.next() {
        None => SphericalGrid::new(points, kind),
        Some("ANTIPODES") => {
            let mut pairs = vec![usize::MAX; n];
            for r in 0..n {
                let row = lines.next().ok_or_else(|| {
                    Error::MalformedFile(format!("ANTIPODES block has {r} of {n} rows"))
                })?;
                let ij: Vec<usize> = row
                    .split_whitespace()
                    .map(str::parse::<usize>)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::MalformedFile(format!("bad antipode row `{row}`")))?;
                if ij.len() != 2 || ij[0] >= n || ij[1] >= n {
                    return Err(Error::MalformedFile(format!("bad antipode row `{row}`")));
                }
                pairs[ij[0]] = ij[1];
            }
            if let Some(extra) = lines.next() {
                return Err(Error::MalformedFile(format!("trailing content `{extra}`")));
            }
            if pairs.contains(&usize::MAX) {
                return Err(Error::MalformedFile("ANTIPODES block misses a site".into()));
            }
            let tolerance = pairs
                .iter()
                .enumerate()
                .map(|(i, &j)| (std::f64::consts::PI - geom::spherical_angle(&points[i], &points[j])).abs())
                .fold(0.0, f64::max);
            SphericalGrid::with_antipodes(points, kind, AntipodeMap { pairs, tolerance })
        }
        Some(extra) => Err(Error::MalformedFile(format!(
            "expected {n} coordinate rows, found more (`{extra}`)"
        ))),
    }
}

/// Serialises a grid; `with_antipodes` appends the pairing block when present.
pub fn write_point_set(grid: &SphericalGrid, with_antipodes: bool) -> String {
    let mut out = String::with_capacity(grid.n_sites() * 72 + 32);
    let _ = writeln!(out, "N={} kind={}", grid.n_sites(), grid.kind());
    for p in grid.points() {
        let _ = writeln!(out, "{:.16e} {:.16e} {:.16e}", p[0], p[1], p[2]);
    }
    if with_antipodes {
        if let Some(map) = grid.antipodes() {
            out.push_str("ANTIPODES\n");
            for (i, j) in map.pairs.iter().enumerate() {
                let _ = writeln!(out, "{i} {j}");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::generate_healpix;

    const OCTA: &str = "N=6 kind=custom\n1 0 0\n-1 0 0\n0 1 0\n0 -1 0\n0 0 1\n0 0 -1\n";

    #[test]
    fn reads_octahedron() {
        let g = read_point_set(OCTA, GridKind::Custom).unwrap();
        assert_eq!(g.n_sites(), 6);
        assert!((g.spacing() - (4.0 * std::f64::consts::PI / 6.0).sqrt()).abs() < 1e-15);
        assert_eq!(g.antipodes().unwrap().pairs, vec![1, 0, 3, 2, 5, 4]);
    }

    #[test]
    fn accepts_crlf() {
        let crlf = OCTA.replace('\n', "\r\n");
        assert_eq!(read_point_set(&crlf, GridKind::Custom).unwrap().n_sites(), 6);
    }

    #[test]
    fn rejects_bad_input() {
        let short = "N=6 kind=custom\n1 0 0\n";
        assert!(matches!(read_point_set(short, GridKind::Custom), Err(Error::MalformedFile(_))));
        let half = "N=2 kind=custom\n1 0 0\n0 0 0.5\n";
        assert!(matches!(
            read_point_set(half, GridKind::Custom),
            Err(Error::NonUnitPoint { index: 1, .. })
        ));
        assert!(matches!(read_point_set("hello\n", GridKind::Custom), Err(Error::MalformedFile(_))));
        let dup = "N=2 kind=custom\n1 0 0\n1 0 0\n";
        assert!(matches!(read_point_set(dup, GridKind::Custom), Err(Error::DuplicateSite { .. })));
    }

    #[test]
    fn renormalises_near_unit_rows() {
        let text = "N=2 kind=custom\n1.0000000001 0 0\n-1 0 0\n";
        let g = read_point_set(text, GridKind::Custom).unwrap();
        assert_eq!(g.point(0)[0], 1.0);
    }

    #[test]
    fn round_trip_is_exact() {
        let g = generate_healpix(4).unwrap();
        let text = write_point_set(&g, true);
        let back = read_point_set(&text, GridKind::Healpix).unwrap();
        assert_eq!(back.fingerprint(), g.fingerprint());
        assert_eq!(back.antipodes().unwrap().pairs, g.antipodes().unwrap().pairs);
        let plain = read_point_set(&write_point_set(&g, false), GridKind::Healpix).unwrap();
        assert_eq!(plain.antipodes().unwrap().pairs, g.antipodes().unwrap().pairs);
    }

    #[test]
    fn loads_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("octa.txt");
        std::fs::write(&path, OCTA).unwrap();
        assert_eq!(load_point_set(&path, GridKind::TDesign).unwrap().kind(), GridKind::TDesign);
    }
}
