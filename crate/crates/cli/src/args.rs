use clap::{Args, Parser, Subcommand};
use grasshopper::geom::Vec3;
use grasshopper::lawn::SetupKind;
use serde::Serialize;
use std::f64::consts::PI;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "grasshopper", version, about = "Spherical grasshopper problem toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a grid and report its spacing and antipodal structure.
    Grid(GridArgs),
    /// Optimise a lawn: anneal, refine the boundary, greedy descent.
    Anneal(AnnealArgs),
    /// Success probability of a stored lawn.
    Evaluate(EvaluateArgs),
    /// Discretisation diagnostics.
    #[command(subcommand)]
    Diagnose(DiagnoseCommand),
    /// Cog and stripe analysis of a stored lawn.
    Analyze(AnalyzeArgs),
    /// Spherical-harmonic spectrum and spectral probability of a stored lawn.
    Spectral(SpectralArgs),
    /// Triangular-cog deficit scan at θ = π/q.
    Cogs(CogsArgs),
    /// Planar stripe model u(r).
    StripesModel(StripesModelArgs),
    /// Independent optimisation runs over a list of jump angles.
    Sweep(SweepArgs),
}

#[derive(Debug, Subcommand)]
pub enum DiagnoseCommand {
    /// Hemisphere lawns in random orientations against 1 − θ/π.
    Hemisphere(HemisphereArgs),
    /// Distribution of per-site potential energies.
    Energies(EnergiesArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    /// `healpix:<n_side>`, `goldberg:<f>`, `coulomb:<pairs>[:seed[:iters]]` or `file:<path>[:kind]`.
    #[arg(long)]
    pub grid: String,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Write antipode indices next to the coordinates.
    #[arg(long)]
    pub with_antipodes: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScheduleArgs {
    #[arg(long, default_value_t = 0.98)]
    pub cooling: f64,
    #[arg(long, default_value_t = 10)]
    pub sweeps_per_temp: usize,
    #[arg(long, default_value_t = 50)]
    pub stall_limit: usize,
    #[arg(long)]
    pub t_initial: Option<f64>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub max_sweeps: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PhaseArgs {
    /// Skip the full anneal (useful with `--init <lawn file>`).
    #[arg(long)]
    pub no_anneal: bool,
    #[arg(long)]
    pub no_refine: bool,
    #[arg(long)]
    pub no_greedy: bool,
    /// Boundary radius in grid spacings for the refinement phase.
    #[arg(long, default_value_t = 1.5)]
    pub refine_radius: f64,
    /// Anneal within k-fold rotationally symmetric lawns.
    #[arg(long)]
    pub symmetry: Option<usize>,
    /// Symmetry or hemisphere axis as `x,y,z`.
    #[arg(long, value_parser = parse_axis)]
    pub axis: Option<Vec3>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnnealArgs {
    #[arg(long)]
    pub grid: String,
    #[arg(long, value_parser = parse_setup)]
    pub setup: SetupKind,
    /// Jump angle: radians, `<x>pi` or `pi/<n>`.
    #[arg(long, value_parser = parse_angle)]
    pub theta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// `random`, `hemisphere` or a lawn file to resume from.
    #[arg(long, default_value = "random")]
    pub init: String,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub phases: PhaseArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub grid: String,
    #[arg(long)]
    pub lawn: PathBuf,
    /// Defaults to the angle stored in the lawn file.
    #[arg(long, value_parser = parse_angle)]
    pub theta: Option<f64>,
    /// Also run the Monte Carlo jump oracle with this many samples.
    #[arg(long)]
    pub oracle_samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HemisphereArgs {
    #[arg(long)]
    pub grid: String,
    /// Comma list of angles or `start:stop:count`.
    #[arg(long, value_parser = parse_angle_list)]
    pub thetas: AngleList,
    #[arg(long, default_value_t = 100)]
    pub orientations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EnergiesArgs {
    #[arg(long)]
    pub grid: String,
    #[arg(long, value_parser = parse_angle)]
    pub theta: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub grid: String,
    #[arg(long)]
    pub lawn: PathBuf,
    #[arg(long, value_parser = parse_angle)]
    pub theta: Option<f64>,
    /// Azimuthal bins of the boundary series.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Compare against a regular stripe lawn with the detected count.
    #[arg(long)]
    pub compare: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectralArgs {
    #[arg(long)]
    pub grid: String,
    #[arg(long)]
    pub lawn: PathBuf,
    #[arg(long, default_value_t = 63)]
    pub ell_max: usize,
    #[arg(long, value_parser = parse_angle)]
    pub theta: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CogsArgs {
    #[arg(long)]
    pub q: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0.5)]
    pub max_height: f64,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StripesModelArgs {
    /// Jump length over stripe width.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub grid: String,
    #[arg(long, value_parser = parse_setup)]
    pub setup: SetupKind,
    #[arg(long, value_parser = parse_angle_list)]
    pub thetas: AngleList,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub phases: PhaseArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct AngleList(pub Vec<f64>);

fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(1.0);
    }
    match s.split_once('/') {
        Some((a, b)) => {
            let a = if a.trim().is_empty() { 1.0 } else { parse_plain(a)? };
            Ok(a / parse_plain(b)?)
        }
        None => parse_plain(s),
    }
}

fn parse_plain(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

/// Radians, or multiples of π written `0.29pi`, `pi/3`, `2pi/3`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase();
    let v = match t.find("pi") {
        Some(at) => {
            let (head, tail) = (&t[..at], &t[at + 2..]);
            let head = head.trim().trim_end_matches('*');
            let factor = parse_number(head)?;
            let divisor = match tail.trim() {
                "" => 1.0,
                rest => match rest.strip_prefix('/') {
                    Some(d) => parse_plain(d)?,
                    None => return Err(format!("cannot read angle `{s}`")),
                },
            };
            factor * PI / divisor
        }
        None => parse_plain(&t)?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("angle `{s}` is not finite"))
    }
}

/// Comma list of angles, or `start:stop:count` with both ends included.
pub fn parse_angle_list(s: &str) -> Result<AngleList, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty θ list".into());
    }
    let parts: Vec<&str> = s.split(':').collect();
    let values = match parts.as_slice() {
        [single] => single
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(parse_angle)
            .collect::<Result<Vec<_>, _>>()?,
        [a, b, n] => {
            let (a, b) = (parse_angle(a)?, parse_angle(b)?);
            let n: usize = n.trim().parse().map_err(|_| format!("bad count `{n}`"))?;
            match n {
                0 => Vec::new(),
                1 => vec![a],
                _ => (0..n)
                    .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
                    .collect(),
            }
        }
        _ => return Err(format!("cannot read angle list `{s}`")),
    };
    if values.is_empty() {
        return Err("empty θ list".into());
    }
    Ok(AngleList(values))
}

pub fn parse_setup(s: &str) -> Result<SetupKind, String> {
    s.parse().map_err(|e: grasshopper::Error| e.to_string())
}

pub fn parse_axis(s: &str) -> Result<Vec3, String> {
    let v = s
        .split(',')
        .map(parse_plain)
        .collect::<Result<Vec<f64>, _>>()?;
    match v.as_slice() {
        [x, y, z] if x * x + y * y + z * z > 0.0 => Ok([*x, *y, *z]),
        _ => Err(format!("axis `{s}` must be three numbers, not all zero")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_tokens() {
        assert_eq!(parse_angle("0.29pi").unwrap(), 0.29 * PI);
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("pi/3").unwrap(), PI / 3.0);
        assert_eq!(parse_angle("2pi/3").unwrap(), 2.0 * PI / 3.0);
        assert_eq!(parse_angle("1/3pi").unwrap(), PI / 3.0);
        assert_eq!(parse_angle("0.7").unwrap(), 0.7);
        assert_eq!(parse_angle("0.5*pi").unwrap(), 0.5 * PI);
        for bad in ["", "abc", "pi3", "pi/x", "inf"] {
            assert!(parse_angle(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn angle_lists() {
        let l = parse_angle_list("0.1pi:0.9pi:33").unwrap().0;
        assert_eq!(l.len(), 33);
        assert!((l[16] - 0.5 * PI).abs() < 1e-15);
        assert_eq!(l[32], 0.9 * PI);
        assert_eq!(parse_angle_list("0.2pi,0.8pi").unwrap().0, vec![0.2 * PI, 0.8 * PI]);
        assert_eq!(parse_angle_list("pi/3:pi/3:1").unwrap().0, vec![PI / 3.0]);
        for bad in ["", " ", ",", "0:1:0", "0:1", "a,b"] {
            assert!(parse_angle_list(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn axes_and_setups() {
        assert_eq!(parse_axis("0,0,1").unwrap(), [0.0, 0.0, 1.0]);
        assert!(parse_axis("0,0,0").is_err());
        assert!(parse_axis("1,2").is_err());
        assert_eq!(parse_setup("antipodal-two").unwrap(), SetupKind::AntipodalTwoLawn);
        assert!(parse_setup("both").is_err());
    }
}
