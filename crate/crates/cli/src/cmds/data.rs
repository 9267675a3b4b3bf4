//! `dagho data`: synthetic SEM sampling and dataset fitting.

use crate::logging::{log_debug, log_info};
use crate::util::{parse_init, write_file, write_json};
use crate::CliError;
use clap::{Args, Subcommand, ValueEnum};
use dagho_core::homotopy::{HomotopyOptions, Schedule, ScheduleKind};
use dagho_core::model::read_rows_csv;
use dagho_core::{
    run_homotopy_flow, run_homotopy_gd, sample_sem, ModelParams, NoiseKind, SecondMoment,
};
use std::path::{Path, PathBuf};

#[derive(Args, Debug)]
pub struct DataArgs {
    #[command(subcommand)]
    pub cmd: DataCmd,
}

#[derive(Subcommand, Debug)]
pub enum DataCmd {
    /// Draw n SEM samples and write them as x1,x2 CSV.
    Sample(SampleArgs),
    /// Estimate the edge structure and coefficient from an x1,x2 CSV.
    Fit(FitArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseFlag {
    Gaussian,
    Uniform,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub noise: NoiseFlag,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitSchedule {
    Ahat,
    Theory,
    Practical,
    Gd,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Input CSV with header x1,x2.
    #[arg(long)]
    pub input: PathBuf,
    /// Schedule family; a-dependent inputs come from the moment estimate.
    #[arg(long, value_enum, default_value = "ahat")]
    pub schedule: FitSchedule,
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long, default_value_t = 0.15)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    pub init: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: DataArgs) -> Result<(), CliError> {
    match args.cmd {
        DataCmd::Sample(a) => sample(a),
        DataCmd::Fit(f) => fit(f),
    }
}

fn sample(args: SampleArgs) -> Result<(), CliError> {
    let m = ModelParams::new(args.a).map_err(|e| CliError::Usage(format!("invalid --a: {e}")))?;
    let noise = match args.noise {
        NoiseFlag::Gaussian => NoiseKind::Gaussian,
        NoiseFlag::Uniform => NoiseKind::UniformRescaled,
    };
    let ds = sample_sem(&m, args.n, noise, args.seed)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut buf = Vec::new();
    ds.write_csv(&mut buf)?;
    match &args.out {
        Some(path) => write_file(path, &buf),
        None => crate::util::emit_stdout(&String::from_utf8(buf).expect("csv is utf-8")),
    }
}

/// Reads an `x1,x2` CSV; malformed rows are usage errors with line numbers.
pub fn read_dataset_csv(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    read_rows_csv(&text).map_err(|e| CliError::Usage(e.to_string()))
}

fn fit(args: FitArgs) -> Result<(), CliError> {
    let rows = read_dataset_csv(&args.input)?;
    let n = rows.len();
    let sm = SecondMoment::from_rows(&rows);
    let (s11, s12, s22) = (sm.s11(), sm.s12(), sm.s22());

    // regression estimate of the edge weight; drives every a-dependent input
    let a_hat = s12 / s11;
    let m_hat = ModelParams::new(a_hat.abs().max(1e-8))
        .expect("clamped estimate is positive");
    log_debug!("moments: s11={s11} s12={s12} s22={s22}; a_hat={a_hat}");

    let theory_mid = Schedule::admissible_midpoint(
        &ScheduleKind::Theory { a: m_hat.a() },
        &m_hat,
    );
    let schedule = match args.schedule {
        FitSchedule::Ahat => Schedule::ahat(args.mu0.unwrap_or(theory_mid), None),
        FitSchedule::Theory => Schedule::theory(&m_hat, args.mu0.unwrap_or(theory_mid)),
        FitSchedule::Practical => Schedule::practical(),
        FitSchedule::Gd => {
            let kind = ScheduleKind::Gd { a: m_hat.a(), beta: args.beta, delta: args.delta };
            let mu0 = args.mu0.unwrap_or_else(|| Schedule::admissible_midpoint(&kind, &m_hat));
            Schedule::gd(&m_hat, args.beta, args.delta, mu0)
        }
    };
    let check = dagho_core::validate_mu0(&schedule, &m_hat);
    if !check.admissible && !args.force {
        return Err(CliError::Usage(format!(
            "mu0 = {} is outside [{}, {}) for the estimated model; pass --force to run anyway",
            schedule.mu0, check.lo, check.hi
        )));
    }

    let w0 = parse_init(&args.init, &m_hat, args.seed)?;
    let opts = HomotopyOptions { allow_inadmissible: true, ..Default::default() };
    let out = match schedule.kind {
        ScheduleKind::Gd { beta, delta, .. } => {
            run_homotopy_gd(&m_hat, beta, delta, schedule.mu0, w0, &sm, &opts)
        }
        _ => run_homotopy_flow(&schedule, w0, &sm, &m_hat, &opts),
    }
    .map_err(|e| CliError::Usage(e.to_string()))?;

    let p = out.report.final_point;
    // structure decision: the surviving edge is the larger coefficient;
    // the other coordinate sits on the h = 0 side
    let (structure, coefficient) = if p.x.abs() >= p.y.abs() {
        ("x1->x2", p.x)
    } else {
        ("x2->x1", p.y)
    };
    log_info!("fit: structure {structure}, coefficient {coefficient}");

    let value = serde_json::json!({
        "n": n,
        "moments": { "s11": s11, "s12": s12, "s22": s22 },
        "a_hat": a_hat,
        "schedule": schedule,
        "structure": structure,
        "coefficient": coefficient,
        "final": p,
        "report": out.report,
    });
    match &args.out {
        Some(path) => write_json(path, &value),
        None => crate::util::emit_stdout(&format!(
            "{}\n",
            serde_json::to_string_pretty(&value).unwrap()
        )),
    }
}
