//! `dagho stationary`: stationary-point analysis as JSON.

use crate::util::write_json;
use crate::CliError;
use clap::Args;
use dagho_core::{critical_tau, solve_stationary_points, stationary_report, ModelParams, PenaltyWeight};
use std::path::PathBuf;

#[derive(Args, Debug)]
pub struct StationaryArgs {
    #[arg(long)]
    pub a: f64,
    /// With --mu: the stationary set at that mu. Without: the threshold tau
    /// plus root counts at 0.5 tau, tau and 1.5 tau.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: StationaryArgs) -> Result<(), CliError> {
    let m = ModelParams::new(args.a).map_err(|e| CliError::Usage(format!("invalid --a: {e}")))?;

    let value = match args.mu {
        Some(mu) => {
            let w = PenaltyWeight::new(mu)
                .map_err(|e| CliError::Usage(format!("invalid --mu: {e}")))?;
            serde_json::to_value(stationary_report(w, &m)).expect("report serializes")
        }
        None => {
            let th = critical_tau(&m);
            let count = |mu: f64| {
                solve_stationary_points(PenaltyWeight::new(mu).unwrap(), &m)
                    .points
                    .len()
            };
            serde_json::json!({
                "a": th.a,
                "tau": th.tau,
                "root_counts": {
                    "half_tau": count(0.5 * th.tau),
                    "tau": count(th.tau),
                    "one_and_half_tau": count(1.5 * th.tau),
                },
            })
        }
    };

    match &args.out {
        Some(path) => write_json(path, &value),
        None => crate::util::emit_stdout(&format!(
            "{}\n",
            serde_json::to_string_pretty(&value).unwrap()
        )),
    }
}
