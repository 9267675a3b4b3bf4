//! `dagho compare-schedules`: the reference schedule versus a fast-decay
//! schedule from one shared initialization and mu0, with a side-by-side
//! summary of where each run ends.

use crate::logging::log_info;
use crate::util::{parse_init, write_file, write_json};
use crate::CliError;
use clap::Args;
use dagho_core::homotopy::{
    run_homotopy_flow, write_trajectory_csv, HomotopyOptions, Schedule, StopRules,
};
use dagho_core::numfmt::fmt17;
use dagho_core::{distance_to_global, ModelParams, Point, SecondMoment};
use std::path::PathBuf;

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub mu0: f64,
    /// Shared initialization for both runs.
    #[arg(long, default_value = "0.3,0.1", allow_hyphen_values = true)]
    pub init: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Divisor of the fast schedule.
    #[arg(long, default_value_t = 500.0)]
    pub decay_factor: f64,
    /// Run even when mu0 fails the reference-schedule admissibility check.
    #[arg(long)]
    pub force: bool,
    /// Output base path: writes BASE_good.csv, BASE_bad.csv, BASE_summary.json.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: CompareArgs) -> Result<(), CliError> {
    let m = ModelParams::new(args.a).map_err(|e| CliError::Usage(format!("invalid --a: {e}")))?;
    let w0 = parse_init(&args.init, &m, args.seed)?;
    let sm = SecondMoment::population(&m);

    let good_sched = Schedule::theory(&m, args.mu0);
    let bad_sched = Schedule::custom(args.mu0, args.decay_factor);
    let check = dagho_core::validate_mu0(&good_sched, &m);
    if !check.admissible && !args.force {
        return Err(CliError::Usage(format!(
            "mu0 = {} is outside [{}, {}) for the reference schedule; pass --force to compare anyway",
            args.mu0, check.lo, check.hi
        )));
    }

    let opts = HomotopyOptions {
        stop: StopRules::default(),
        record_every: Some(10),
        allow_inadmissible: true,
        ..Default::default()
    };
    let good = run_homotopy_flow(&good_sched, w0, &sm, &m, &opts)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let bad = run_homotopy_flow(&bad_sched, w0, &sm, &m, &opts)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    // shared provenance line so both trajectory files carry the same header
    let meta = format!(
        "# a={} mu0={} init={},{} seed={}\n",
        fmt17(args.a),
        fmt17(args.mu0),
        fmt17(w0.x),
        fmt17(w0.y),
        args.seed
    );
    for (suffix, out) in [("good", &good), ("bad", &bad)] {
        let mut buf = meta.clone().into_bytes();
        write_trajectory_csv(&mut buf, out.trajectory.as_deref().unwrap_or(&[]))?;
        write_file(&PathBuf::from(format!("{}_{suffix}.csv", args.out.display())), &buf)?;
    }

    let spur = m.spurious_limit();
    let dists = |p: Point| {
        serde_json::json!({
            "final": p,
            "dist_to_global": distance_to_global(p, &m),
            "dist_to_spurious": (p.x - spur.x).hypot(p.y - spur.y),
        })
    };
    let summary = serde_json::json!({
        "a": args.a,
        "mu0": args.mu0,
        "init": w0,
        "decay_factor": args.decay_factor,
        "good": dists(good.report.final_point),
        "bad": dists(bad.report.final_point),
    });
    log_info!(
        "good -> ({}, {}); bad -> ({}, {})",
        good.report.final_point.x,
        good.report.final_point.y,
        bad.report.final_point.x,
        bad.report.final_point.y
    );
    write_json(&PathBuf::from(format!("{}_summary.json", args.out.display())), &summary)
}
