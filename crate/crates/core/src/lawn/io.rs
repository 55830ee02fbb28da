//! Text lawn files.
//!
//! ```text
//! N=<int> theta=<decimal> setup=<token> grid=<path-or-hash>
//! <N characters 0|1>            spins of lawn 1
//! <N characters 0|1>            spins of lawn 2 (two-lawn setups only)
//! T=<decimal> sweep=<int> bestP=<decimal> seed=<int>   (optional checkpoint)
//! ```

use super::{LawnState, SetupKind};
use crate::error::{Error, Result};
use crate::grid::SphericalGrid;
use serde::Serialize;
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawnHeader {
    pub n_sites: usize,
    pub theta: f64,
    pub setup: SetupKind,
    pub grid: String,
}

/// Annealer progress stored after the spin lines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Checkpoint {
    pub temperature: f64,
    pub sweep: usize,
    pub best_p: f64,
    pub seed: u64,
}

fn spin_line(s: &[u8]) -> String {
    s.iter().map(|&v| if v == 1 { '1' } else { '0' }).collect()
}

pub fn write_lawn(
    state: &LawnState,
    theta: f64,
    grid_ref: &str,
    checkpoint: Option<&Checkpoint>,
) -> String {
    let grid_ref = if grid_ref.is_empty() || grid_ref.contains(char::is_whitespace) {
        state.grid_fingerprint()
    } else {
        grid_ref
    };
    let mut out = format!(
        "N={} theta={} setup={} grid={}\n{}\n",
        state.n_sites(),
        theta,
        state.setup(),
        grid_ref,
        spin_line(state.spins1())
    );
    if state.setup().is_two_lawn() {
        out.push_str(&spin_line(state.spins2()));
        out.push('\n');
    }
    if let Some(c) = checkpoint {
        out.push_str(&format!(
            "T={} sweep={} bestP={} seed={}\n",
            c.temperature, c.sweep, c.best_p, c.seed
        ));
    }
    out
}

fn fields(line: &str) -> HashMap<&str, &str> {
    line.split_whitespace().filter_map(|t| t.split_once('=')).collect()
}

fn field<'a, T: std::str::FromStr>(map: &HashMap<&'a str, &'a str>, key: &str) -> Result<T> {
    map.get(key)
        .ok_or_else(|| Error::MalformedFile(format!("missing `{key}=`")))?
        .parse::<T>()
        .map_err(|_| Error::MalformedFile(format!("bad value for `{key}`")))
}

fn parse_spins(line: &str, n: usize) -> Result<Vec<u8>> {
    if line.len() != n {
        return Err(Error::MalformedFile(format!(
            "spin line has {} characters, expected {n}",
            line.len()
        )));
    }
    line.bytes()
        .map(|b| match b {
            b'0' => Ok(0),
            b'1' => Ok(1),
            _ => Err(Error::MalformedFile("spin lines may only hold 0 and 1".into())),
        })
        .collect()
}

fn is_hash(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| b.is_ascii_hexdigit())
}

/// Parses a lawn file against `grid`. A hash-valued `grid=` entry must match
/// the grid's fingerprint.
pub fn read_lawn(
    text: &str,
    grid: &SphericalGrid,
) -> Result<(LawnState, LawnHeader, Option<Checkpoint>)> {
    let mut lines = text
        .lines()
        .map(|l| l.trim_end_matches('\r').trim())
        .filter(|l| !l.is_empty());
    let head = fields(lines.next().ok_or_else(|| Error::MalformedFile("empty file".into()))?);
    let header = LawnHeader {
        n_sites: field(&head, "N")?,
        theta: field(&head, "theta")?,
        setup: head
            .get("setup")
            .ok_or_else(|| Error::MalformedFile("missing `setup=`".into()))?
            .parse()
            .map_err(|_| Error::MalformedFile("unknown setup token".into()))?,
        grid: field(&head, "grid")?,
    };
    if header.n_sites != grid.n_sites()
        || (is_hash(&header.grid) && header.grid != grid.fingerprint())
    {
        return Err(Error::GridMismatch);
    }
    let n = header.n_sites;
    let s1 = parse_spins(lines.next().ok_or_else(|| Error::MalformedFile("no spins".into()))?, n)?;
    let s2 = if header.setup.is_two_lawn() {
        Some(parse_spins(
            lines.next().ok_or_else(|| Error::MalformedFile("missing second lawn".into()))?,
            n,
        )?)
    } else {
        None
    };
    let checkpoint = match lines.next() {
        None => None,
        Some(line) => {
            let m = fields(line);
            Some(Checkpoint {
                temperature: field(&m, "T")?,
                sweep: field(&m, "sweep")?,
                best_p: field(&m, "bestP")?,
                seed: field(&m, "seed")?,
            })
        }
    };
    if let Some(extra) = lines.next() {
        return Err(Error::MalformedFile(format!("trailing content `{extra}`")));
    }
    let state = LawnState::from_spins(grid, header.setup, s1, s2)?;
    Ok((state, header, checkpoint))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::generate_healpix;
    use crate::lawn::new_random_lawn;

    #[test]
    fn round_trip_all_setups() {
        let g = generate_healpix(4).unwrap();
        for setup in [
            SetupKind::AntipodalOneLawn,
            SetupKind::AntipodalTwoLawn,
            SetupKind::NonAntipodalOneLawn,
        ] {
            let s = new_random_lawn(&g, setup, 11).unwrap();
            let cp = Checkpoint {
                temperature: 1.25e-5,
                sweep: 40,
                best_p: 0.7123456789012345,
                seed: 11,
            };
            let text = write_lawn(&s, 0.3 * std::f64::consts::PI, "", Some(&cp));
            let (back, header, c) = read_lawn(&text, &g).unwrap();
            assert_eq!(back, s);
            assert_eq!(header.theta, 0.3 * std::f64::consts::PI);
            assert_eq!(header.grid, g.fingerprint());
            assert_eq!(c, Some(cp));
            let crlf = write_lawn(&s, 1.0, "grids/hp4.txt", None).replace('\n', "\r\n");
            let (back, header, c) = read_lawn(&crlf, &g).unwrap();
            assert_eq!(back, s);
            assert_eq!(header.grid, "grids/hp4.txt");
            assert!(c.is_none());
        }
    }

    #[test]
    fn rejects_wrong_grid_and_bad_spins() {
        let g = generate_healpix(4).unwrap();
        let other = generate_healpix(2).unwrap();
        let s = new_random_lawn(&g, SetupKind::AntipodalOneLawn, 1).unwrap();
        let text = write_lawn(&s, 1.0, "", None);
        assert_eq!(read_lawn(&text, &other).unwrap_err(), Error::GridMismatch);
        let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
        lines[1] = lines[1].replacen('1', "2", 1);
        assert!(matches!(read_lawn(&lines.join("\n"), &g), Err(Error::MalformedFile(_))));
        lines[1].pop();
        assert!(matches!(read_lawn(&lines.join("\n"), &g), Err(Error::MalformedFile(_))));
    }
}
