//! Flag parsing and small I/O helpers shared by the subcommands.

use crate::CliError;
use dagho_core::{ModelParams, Point};
use rand::{Rng, SeedableRng};
use std::io::Write;
use std::path::Path;

/// Grid spec parsed from `xmin:xmax:nx,ymin:ymax:ny`.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub xmin: f64,
    pub xmax: f64,
    pub nx: usize,
    pub ymin: f64,
    pub ymax: f64,
    pub ny: usize,
}

impl GridSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Usage(format!("invalid --grid '{s}', expected xmin:xmax:nx,ymin:ymax:ny"));
        let (xs, ys) = s.split_once(',').ok_or_else(bad)?;
        let parse_axis = |axis: &str| -> Result<(f64, f64, usize), CliError> {
            let parts: Vec<&str> = axis.split(':').collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
            let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
            let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
            Ok((lo, hi, n))
        };
        let (xmin, xmax, nx) = parse_axis(xs)?;
        let (ymin, ymax, ny) = parse_axis(ys)?;
        if nx < 2 || ny < 2 {
            return Err(CliError::Usage("grid needs nx, ny >= 2".into()));
        }
        if !(xmin < xmax) || !(ymin < ymax) {
            return Err(CliError::Usage("grid needs xmin < xmax and ymin < ymax".into()));
        }
        Ok(Self { xmin, xmax, nx, ymin, ymax, ny })
    }
}

/// Initial point: `x,y`, `random`, or `random:xmin:xmax:ymin:ymax`.
/// The default random box is `[-2a, 2a]^2`.
pub fn parse_init(spec: &str, m: &ModelParams, seed: u64) -> Result<Point, CliError> {
    if let Some(rest) = spec.strip_prefix("random") {
        let a = m.a();
        let (x0, x1, y0, y1) = if rest.is_empty() {
            (-2.0 * a, 2.0 * a, -2.0 * a, 2.0 * a)
        } else {
            let parts: Vec<&str> = rest.trim_start_matches(':').split(':').collect();
            if parts.len() != 4 {
                return Err(CliError::Usage(format!(
                    "invalid --init '{spec}', expected random:xmin:xmax:ymin:ymax"
                )));
            }
            let mut v = [0.0f64; 4];
            for (slot, p) in v.iter_mut().zip(&parts) {
                *slot = p
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("invalid --init bound '{p}'")))?;
            }
            (v[0], v[1], v[2], v[3])
        };
        if !(x0 < x1) || !(y0 < y1) {
            return Err(CliError::Usage("random init box must have positive extent".into()));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        return Ok(Point::new(rng.random_range(x0..x1), rng.random_range(y0..y1)));
    }
    let (xs, ys) = spec
        .split_once(',')
        .ok_or_else(|| CliError::Usage(format!("invalid --init '{spec}', expected x,y or random")))?;
    let x: f64 = xs
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("invalid --init x '{xs}'")))?;
    let y: f64 = ys
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("invalid --init y '{ys}'")))?;
    if !(x.is_finite() && y.is_finite()) {
        return Err(CliError::Usage("--init coordinates must be finite".into()));
    }
    Ok(Point::new(x, y))
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut buf = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::Usage(format!("serialization failed: {e}")))?;
    buf.push(b'\n');
    write_file(path, &buf)
}

pub fn emit_stdout(contents: &str) -> Result<(), CliError> {
    std::io::stdout()
        .write_all(contents.as_bytes())
        .map_err(|e| CliError::Usage(format!("cannot write to stdout: {e}")))
}
