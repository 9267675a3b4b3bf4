//! `dagho homotopy`: one or many warm-started homotopy runs.

use crate::logging::log_info;
use crate::util::{parse_init, write_file, write_json};
use crate::CliError;
use clap::{Args, ValueEnum};
use dagho_core::homotopy::{
    run_homotopy_flow, run_homotopy_gd, validate_mu0, write_trajectory_csv, HomotopyOptions,
    RunOutput, Schedule, ScheduleKind, StopReason, StopRules,
};
use dagho_core::{ModelParams, Point, SecondMoment};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleFlag {
    Theory,
    Practical,
    Ahat,
    Gd,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatFlag {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct HomotopyArgs {
    /// Ground-truth edge weight a > 0.
    #[arg(long)]
    pub a: f64,
    #[arg(long, value_enum, default_value = "theory")]
    pub schedule: ScheduleFlag,
    /// Initial penalty weight; defaults to the schedule's admissible midpoint.
    #[arg(long)]
    pub mu0: Option<f64>,
    /// Tolerance shape parameter for the gd schedule.
    #[arg(long, default_value_t = 0.15)]
    pub beta: f64,
    /// Guaranteed per-stage decay for the gd schedule.
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Divisor for the custom schedule: mu_{k+1} = mu_k / factor.
    #[arg(long, default_value_t = 500.0)]
    pub decay_factor: f64,
    /// `x,y`, `random`, or `random:xmin:xmax:ymin:ymax`.
    #[arg(long, default_value = "random", allow_hyphen_values = true)]
    pub init: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of independent runs with seeds seed..seed+N-1.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    #[arg(long, default_value_t = 1e-12)]
    pub mu_floor: f64,
    #[arg(long, default_value_t = 200)]
    pub max_stages: usize,
    /// Stop once the distance to (a, 0) falls below this; 0 disables.
    #[arg(long, default_value_t = 0.0)]
    pub dist_tol: f64,
    /// Run even when mu0 fails the admissibility check.
    #[arg(long)]
    pub force: bool,
    /// Output base path: writes BASE.csv and BASE.json (per seed when --seeds > 1).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Stdout payload when --out is not given.
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatFlag,
}

pub struct PreparedRun {
    pub model: ModelParams,
    pub schedule: Schedule,
    pub opts: HomotopyOptions,
    pub gd: Option<(f64, f64)>,
}

/// Resolves flags into a concrete schedule + options, enforcing
/// admissibility unless `--force` was given.
pub fn prepare(args: &HomotopyArgs) -> Result<PreparedRun, CliError> {
    let model = ModelParams::new(args.a)
        .map_err(|e| CliError::Usage(format!("invalid --a: {e}")))?;

    let schedule = match args.schedule {
        ScheduleFlag::Theory => {
            let mu0 = args.mu0.unwrap_or_else(|| {
                Schedule::admissible_midpoint(&ScheduleKind::Theory { a: args.a }, &model)
            });
            Schedule::theory(&model, mu0)
        }
        ScheduleFlag::Practical => {
            if let Some(mu0) = args.mu0 {
                if (mu0 - dagho_core::homotopy::PRACTICAL_MU0).abs() > 1e-15 {
                    return Err(CliError::Usage(
                        "the practical schedule fixes mu0 = 1/27; drop --mu0 or use --schedule ahat"
                            .into(),
                    ));
                }
            }
            Schedule::practical()
        }
        ScheduleFlag::Ahat => {
            let mu0 = args.mu0.unwrap_or_else(|| {
                Schedule::admissible_midpoint(&ScheduleKind::Theory { a: args.a }, &model)
            });
            Schedule::ahat(mu0, None)
        }
        ScheduleFlag::Gd => {
            let kind = ScheduleKind::Gd { a: args.a, beta: args.beta, delta: args.delta };
            let mu0 = args
                .mu0
                .unwrap_or_else(|| Schedule::admissible_midpoint(&kind, &model));
            Schedule::gd(&model, args.beta, args.delta, mu0)
        }
        ScheduleFlag::Custom => {
            let mu0 = args.mu0.ok_or_else(|| {
                CliError::Usage("--schedule custom requires an explicit --mu0".into())
            })?;
            Schedule::custom(mu0, args.decay_factor)
        }
    };

    let check = validate_mu0(&schedule, &model);
    if !check.admissible && !args.force {
        return Err(CliError::Usage(format!(
            "mu0 = {} is outside the admissible interval [{}, {}) for this schedule ({}); pass --force to run anyway",
            schedule.mu0, check.lo, check.hi, check.detail
        )));
    }

    let opts = HomotopyOptions {
        stop: StopRules {
            mu_floor: args.mu_floor,
            max_stages: args.max_stages,
            dist_tol: args.dist_tol,
        },
        record_every: Some(10),
        allow_inadmissible: true,
        ..Default::default()
    };
    let gd = matches!(args.schedule, ScheduleFlag::Gd).then_some((args.beta, args.delta));
    Ok(PreparedRun { model, schedule, opts, gd })
}

pub fn execute(
    prep: &PreparedRun,
    w0: Point,
    moments: &SecondMoment,
) -> Result<RunOutput, CliError> {
    let out = match prep.gd {
        Some((beta, delta)) => run_homotopy_gd(
            &prep.model,
            beta,
            delta,
            prep.schedule.mu0,
            w0,
            moments,
            &prep.opts,
        ),
        None => run_homotopy_flow(&prep.schedule, w0, moments, &prep.model, &prep.opts),
    };
    out.map_err(|e| CliError::Usage(e.to_string()))
}

pub fn report_json(out: &RunOutput, schedule: &Schedule, w0: Point) -> serde_json::Value {
    serde_json::json!({
        "schedule": schedule,
        "init": w0,
        "report": out.report,
    })
}

fn run_one(
    prep: &PreparedRun,
    args: &HomotopyArgs,
    seed: u64,
    moments: &SecondMoment,
) -> Result<(Point, RunOutput), CliError> {
    let w0 = parse_init(&args.init, &prep.model, seed)?;
    let out = execute(prep, w0, moments)?;
    log_info!(
        "seed {seed}: init ({}, {}) -> final ({}, {}), dist {:.3e}, stages {}, inner steps {}",
        w0.x,
        w0.y,
        out.report.final_point.x,
        out.report.final_point.y,
        out.report.dist_to_global,
        out.report.stages.len(),
        out.report.total_inner_steps
    );
    Ok((w0, out))
}

pub fn run(args: HomotopyArgs) -> Result<(), CliError> {
    let prep = prepare(&args)?;
    let moments = SecondMoment::population(&prep.model);

    if args.seeds <= 1 {
        let (w0, out) = run_one(&prep, &args, args.seed, &moments)?;
        emit_single(&args, &prep, w0, &out)?;
        return finish(std::slice::from_ref(&out));
    }

    if !args.init.starts_with("random") {
        return Err(CliError::Usage(
            "--seeds > 1 requires a random --init so runs differ".into(),
        ));
    }

    // independent runs in parallel, results assembled in seed order
    let seeds: Vec<u64> = (0..args.seeds).map(|i| args.seed.wrapping_add(i)).collect();
    let results: Vec<Result<(Point, RunOutput), CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&s| {
                let prep = &prep;
                let args = &args;
                let moments = &moments;
                scope.spawn(move || run_one(prep, args, s, moments))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("runner panicked")).collect()
    });

    let mut outs = Vec::with_capacity(results.len());
    let mut summary_rows = Vec::new();
    for (s, res) in seeds.iter().zip(results) {
        let (w0, out) = res?;
        if let Some(base) = &args.out {
            let stem = format!("{}_seed{}", base.display(), s);
            write_run_files(&stem, &prep, w0, &out)?;
        }
        summary_rows.push(serde_json::json!({
            "seed": s,
            "init": w0,
            "final": out.report.final_point,
            "dist_to_global": out.report.dist_to_global,
            "stop_reason": out.report.stop_reason,
            "stages": out.report.stages.len(),
            "total_inner_steps": out.report.total_inner_steps,
        }));
        outs.push(out);
    }
    let summary = serde_json::json!({
        "a": prep.model.a(),
        "schedule": prep.schedule,
        "runs": summary_rows,
    });
    match &args.out {
        Some(base) => {
            write_json(&PathBuf::from(format!("{}_summary.json", base.display())), &summary)?
        }
        None => crate::util::emit_stdout(&format!(
            "{}\n",
            serde_json::to_string_pretty(&summary).unwrap()
        ))?,
    }
    finish(&outs)
}

fn emit_single(
    args: &HomotopyArgs,
    prep: &PreparedRun,
    w0: Point,
    out: &RunOutput,
) -> Result<(), CliError> {
    match &args.out {
        Some(base) => write_run_files(&base.display().to_string(), prep, w0, out),
        None => match args.format {
            FormatFlag::Json => {
                let js = report_json(out, &prep.schedule, w0);
                crate::util::emit_stdout(&format!(
                    "{}\n",
                    serde_json::to_string_pretty(&js).unwrap()
                ))
            }
            FormatFlag::Csv => {
                let mut buf = Vec::new();
                write_trajectory_csv(&mut buf, out.trajectory.as_deref().unwrap_or(&[]))?;
                crate::util::emit_stdout(&String::from_utf8(buf).expect("csv is utf-8"))
            }
        },
    }
}

fn write_run_files(
    stem: &str,
    prep: &PreparedRun,
    w0: Point,
    out: &RunOutput,
) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, out.trajectory.as_deref().unwrap_or(&[]))?;
    write_file(&PathBuf::from(format!("{stem}.csv")), &buf)?;
    write_json(
        &PathBuf::from(format!("{stem}.json")),
        &report_json(out, &prep.schedule, w0),
    )
}

fn finish(outs: &[RunOutput]) -> Result<(), CliError> {
    if outs.iter().any(|o| o.report.stop_reason == StopReason::Failure) {
        return Err(CliError::Numeric("a run stopped with a numeric failure".into()));
    }
    Ok(())
}
