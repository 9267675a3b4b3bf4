//! `dagho landscape`: tabulate f, h, g and grad g over a grid.

use crate::util::{write_file, GridSpec};
use crate::CliError;
use clap::Args;
use dagho_core::numfmt::fmt17;
use dagho_core::{ModelParams, Objective, PenalizedObjective, PenaltyWeight, Point, SecondMoment};
use std::path::PathBuf;

#[derive(Args, Debug)]
pub struct LandscapeArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub mu: f64,
    /// Grid spec xmin:xmax:nx,ymin:ymax:ny.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: LandscapeArgs) -> Result<(), CliError> {
    let m = ModelParams::new(args.a).map_err(|e| CliError::Usage(format!("invalid --a: {e}")))?;
    let mu = PenaltyWeight::new(args.mu)
        .map_err(|e| CliError::Usage(format!("invalid --mu: {e}")))?;
    let grid = GridSpec::parse(&args.grid)?;
    let sm = SecondMoment::population(&m);
    let obj = PenalizedObjective::new(mu, sm);

    let mut buf = String::from("x,y,f,h,g,grad_x,grad_y\n");
    for ix in 0..grid.nx {
        let x = grid.xmin + (grid.xmax - grid.xmin) * ix as f64 / (grid.nx - 1) as f64;
        for iy in 0..grid.ny {
            let y = grid.ymin + (grid.ymax - grid.ymin) * iy as f64 / (grid.ny - 1) as f64;
            let p = Point::new(x, y);
            let (gx, gy) = obj.gradient(p);
            buf.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                fmt17(x),
                fmt17(y),
                fmt17(obj.loss_term(p)),
                fmt17(obj.penalty_term(p)),
                fmt17(obj.value(p)),
                fmt17(gx),
                fmt17(gy)
            ));
        }
    }
    match &args.out {
        Some(path) => write_file(path, buf.as_bytes()),
        None => crate::util::emit_stdout(&buf),
    }
}
