//! Outer path-following loop: penalty schedules, admissibility checks,
//! warm-started stage solves with gradient flow or gradient descent, the
//! outer-iteration bound, and run reporting.

use crate::dynamics::{
    gradient_descent, gradient_flow, DescentOptions, DynamicsError, FlowOptions, PathSample,
    SolveResult,
};
use crate::model::{
    smoothness_bound, ModelParams, PenaltyWeight, PenalizedObjective, Point, SecondMoment,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HomotopyError {
    #[error("mu0 = {mu0} is outside the admissible interval [{lo}, {hi}) ({detail})")]
    InadmissibleMu0 { mu0: f64, lo: f64, hi: f64, detail: String },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("eps_k = {eps} must be below a*mu_k = {amu} in the gd update")]
    EpsTooLarge { eps: f64, amu: f64 },
}

/// Penalty-decay policy for the outer loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScheduleKind {
    /// `mu_k = (2/a)^{2/3} mu_{k-1}^{4/3}` with the true `a`.
    Theory { a: f64 },
    /// `mu0 = 1/27` and `mu_k = (2/sqrt(5 mu0))^{2/3} mu_{k-1}^{4/3}`,
    /// independent of `a`.
    Practical,
    /// `a_hat = sqrt(4 (mu0 + eps))` stands in for the unknown `a`.
    AHat { eps: f64 },
    /// Gradient-descent homotopy update driven by the stage tolerances.
    Gd { a: f64, beta: f64, delta: f64 },
    /// Fixed divisor: `mu_{k+1} = mu_k / factor`.
    Custom { factor: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub mu0: f64,
}

pub const PRACTICAL_MU0: f64 = 1.0 / 27.0;

impl Schedule {
    pub fn theory(m: &ModelParams, mu0: f64) -> Self {
        Self { kind: ScheduleKind::Theory { a: m.a() }, mu0 }
    }

    pub fn practical() -> Self {
        Self { kind: ScheduleKind::Practical, mu0: PRACTICAL_MU0 }
    }

    /// `eps` defaults to `mu0/4`, which makes the update match the practical
    /// schedule (`a_hat = sqrt(5 mu0)`). `eps = 0` would freeze `mu`.
    pub fn ahat(mu0: f64, eps: Option<f64>) -> Self {
        Self { kind: ScheduleKind::AHat { eps: eps.unwrap_or(mu0 / 4.0) }, mu0 }
    }

    pub fn gd(m: &ModelParams, beta: f64, delta: f64, mu0: f64) -> Self {
        Self { kind: ScheduleKind::Gd { a: m.a(), beta, delta }, mu0 }
    }

    pub fn custom(mu0: f64, factor: f64) -> Self {
        Self { kind: ScheduleKind::Custom { factor }, mu0 }
    }

    /// Midpoint of the admissible `mu0` interval for this schedule kind.
    pub fn admissible_midpoint(kind: &ScheduleKind, m: &ModelParams) -> f64 {
        let chk = validate_mu0(&Schedule { kind: *kind, mu0: f64::NAN }, m);
        0.5 * (chk.lo + chk.hi)
    }
}

/// Result of the `mu0` admissibility check: the interval endpoints for the
/// schedule kind plus any side conditions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MuZeroCheck {
    pub admissible: bool,
    pub lo: f64,
    pub hi: f64,
    pub detail: String,
}

/// Checks `mu0` (and the kind's side conditions) against the admissible
/// interval. Diagnostic only; nothing is raised here.
pub fn validate_mu0(sched: &Schedule, m: &ModelParams) -> MuZeroCheck {
    let a = m.a();
    let a2 = a * a;
    let lo_theory = a2 / (4.0 * (a2 + 1.0).powi(3));
    let hi_theory = a2 / 4.0;
    let mu0 = sched.mu0;
    match sched.kind {
        ScheduleKind::Theory { .. } => MuZeroCheck {
            admissible: mu0 >= lo_theory && mu0 < hi_theory,
            lo: lo_theory,
            hi: hi_theory,
            detail: "theory schedule requires mu0 in [a^2/(4(a^2+1)^3), a^2/4)".into(),
        },
        ScheduleKind::Practical => {
            let a_hat = (5.0 * PRACTICAL_MU0).sqrt();
            let ok = (mu0 - PRACTICAL_MU0).abs() < 1e-15 && a > a_hat;
            MuZeroCheck {
                admissible: ok,
                lo: lo_theory,
                hi: hi_theory,
                detail: format!(
                    "practical schedule fixes mu0 = 1/27 and needs a > sqrt(5/27) = {a_hat:.6}"
                ),
            }
        }
        ScheduleKind::AHat { eps } => {
            let a_hat = (4.0 * (mu0 + eps)).sqrt();
            let hi = hi_theory - eps;
            MuZeroCheck {
                admissible: eps >= 0.0 && mu0 >= lo_theory && mu0 < hi && a_hat < a,
                lo: lo_theory,
                hi,
                detail: "a-hat schedule requires mu0 in [a^2/(4(a^2+1)^3), a^2/4 - eps) so that a_hat < a"
                    .into(),
            }
        }
        ScheduleKind::Gd { beta, delta, .. } => {
            let bp = 1.0 + beta;
            let bm = 1.0 - beta;
            let lo = lo_theory * bp.powi(4) / (bm * bm);
            let hi = hi_theory * (1.0 - delta).powi(3) * bm.powi(4) / (bp * bp);
            let params_ok = beta > 0.0
                && beta < 1.0
                && delta > 0.0
                && delta < 1.0
                && (bp / bm) * (bp / bm) <= (1.0 - delta) * (a2 + 1.0);
            MuZeroCheck {
                admissible: params_ok && mu0 >= lo && mu0 < hi,
                lo,
                hi,
                detail: "gd schedule requires beta, delta in (0,1), ((1+b)/(1-b))^2 <= (1-d)(a^2+1), and mu0 in the printed interval"
                    .into(),
            }
        }
        ScheduleKind::Custom { factor } => MuZeroCheck {
            admissible: factor > 1.0 && mu0 >= lo_theory,
            lo: lo_theory,
            hi: f64::INFINITY,
            detail: "custom schedule needs factor > 1; mu0 >= a^2/(4(a^2+1)^3) keeps stage 0 single-rooted"
                .into(),
        },
    }
}

/// One step of the schedule. `eps_k` is only consulted by the gd kind.
pub fn next_mu(sched: &Schedule, mu_k: f64, eps_k: Option<f64>) -> Result<f64, HomotopyError> {
    match sched.kind {
        ScheduleKind::Theory { a } => Ok((2.0 / a).powf(2.0 / 3.0) * mu_k.powf(4.0 / 3.0)),
        ScheduleKind::Practical => {
            let a_hat = (5.0 * sched.mu0).sqrt();
            Ok((2.0 / a_hat).powf(2.0 / 3.0) * mu_k.powf(4.0 / 3.0))
        }
        ScheduleKind::AHat { eps } => {
            let a_hat = (4.0 * (sched.mu0 + eps)).sqrt();
            Ok((2.0 / a_hat).powf(2.0 / 3.0) * mu_k.powf(4.0 / 3.0))
        }
        ScheduleKind::Gd { a, .. } => {
            let eps = eps_k.ok_or_else(|| {
                HomotopyError::InvalidSchedule("gd update needs the stage tolerance eps_k".into())
            })?;
            let ratio = eps / mu_k;
            if ratio >= a {
                return Err(HomotopyError::EpsTooLarge { eps, amu: a * mu_k });
            }
            Ok((2.0 * mu_k * mu_k).powf(2.0 / 3.0) * (a + ratio).powf(2.0 / 3.0)
                / (a - ratio).powf(4.0 / 3.0))
        }
        ScheduleKind::Custom { factor } => Ok(mu_k / factor),
    }
}

/// Admissible interval for the next theory-style step: any
/// `mu_{k+1} in [y_lb(mu_k)^2, mu_k)` preserves the warm-start containment.
pub fn theory_step_interval(mu_k: f64, m: &ModelParams) -> (f64, f64) {
    let a = m.a();
    let lower = match crate::stationary::y_curvature_bounds(
        PenaltyWeight::new(mu_k).expect("mu_k must be positive"),
        m,
    ) {
        Some(b) => b.lower * b.lower,
        None => (2.0 / a).powf(2.0 / 3.0) * mu_k.powf(4.0 / 3.0),
    };
    (lower, mu_k)
}

pub fn theory_step_admissible(mu_k: f64, mu_next: f64, m: &ModelParams) -> bool {
    let (lo, hi) = theory_step_interval(mu_k, m);
    mu_next >= lo && mu_next < hi
}

/// Stage tolerance and step size for the gd homotopy:
/// `eps_k = min(beta a mu_k, mu_k^{3/2})`, `eta_k = 1/(mu_k(a^2+1) + 3a^2)`.
pub fn gd_stage_params(mu_k: f64, m: &ModelParams, beta: f64) -> (f64, f64) {
    let a = m.a();
    let eps = (beta * a * mu_k).min(mu_k.powf(1.5));
    let eta = 1.0 / smoothness_bound(mu_k, m);
    (eps, eta)
}

/// Frobenius distance `sqrt((x-a)^2 + y^2)` from `W(p)` to the global
/// optimum `W_G = W(a, 0)`.
pub fn distance_to_global(p: Point, m: &ModelParams) -> f64 {
    (p.x - m.a()).hypot(p.y)
}

/// Outer-iteration bound `K(mu0, a, delta, eps_dist)`: the smallest stage
/// count after which the gd homotopy is `eps_dist`-close in Frobenius norm.
pub fn outer_iteration_bound(mu0: f64, a: f64, delta: f64, beta: f64, eps_dist: f64) -> u64 {
    let e2 = eps_dist * eps_dist;
    let terms = [
        (mu0 / (beta * beta * a * a)).ln(),
        (72.0 * mu0 / (a * a * (1.0 - 0.5f64.powf(0.25)))).ln(),
        (3.0 * (4.0 - delta) * mu0 / e2).ln(),
        0.5 * (46656.0 * mu0 * mu0 / (a * a * e2)).ln(),
        (46656.0 * mu0 * mu0 * mu0 / (a * a * a * a * e2)).ln() / 3.0,
    ];
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let k = max / (1.0 / (1.0 - delta)).ln();
    if k <= 0.0 {
        0
    } else {
        k.ceil() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MuFloor,
    StageCap,
    DistReached,
    Failure,
}

/// Termination rules for a homotopy run.
#[derive(Debug, Clone, Copy)]
pub struct StopRules {
    /// Stop before a stage whose `mu` would fall below this.
    pub mu_floor: f64,
    pub max_stages: usize,
    /// Stop once the distance to the global optimum drops below this;
    /// `0.0` disables the check.
    pub dist_tol: f64,
}

impl Default for StopRules {
    fn default() -> Self {
        Self { mu_floor: 1e-12, max_stages: 200, dist_tol: 0.0 }
    }
}

#[derive(Debug, Clone)]
pub struct HomotopyOptions {
    pub stop: StopRules,
    pub flow: FlowOptions,
    /// Record stage paths with this stride (1 = every step).
    pub record_every: Option<usize>,
    /// Run even when `validate_mu0` rejects the schedule.
    pub allow_inadmissible: bool,
    /// Iteration cap per gd stage.
    pub max_inner_iters: u64,
}

impl Default for HomotopyOptions {
    fn default() -> Self {
        Self {
            stop: StopRules::default(),
            flow: FlowOptions::default(),
            record_every: None,
            allow_inadmissible: false,
            max_inner_iters: 10_000_000,
        }
    }
}

/// Record of one warm-started stage solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub k: usize,
    pub mu: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    pub start: Point,
    pub end: Point,
    pub inner_steps: u64,
    pub grad_norm: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HomotopyReport {
    pub stages: Vec<StageRecord>,
    #[serde(rename = "final")]
    pub final_point: Point,
    pub dist_to_global: f64,
    pub total_inner_steps: u64,
    pub stop_reason: StopReason,
    pub mu0_admissible: bool,
}

/// One row of the concatenated per-stage trajectory.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryRow {
    pub stage: usize,
    pub mu: f64,
    pub eps: Option<f64>,
    pub eta: Option<f64>,
    pub sample: PathSample,
    pub dist_to_global: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: HomotopyReport,
    pub trajectory: Option<Vec<TrajectoryRow>>,
}

/// Writes trajectory rows as
/// `stage,mu,eps,eta,step,x,y,f,h,g,grad_norm,dist_to_global` CSV.
pub fn write_trajectory_csv<W: std::io::Write>(
    mut w: W,
    rows: &[TrajectoryRow],
) -> std::io::Result<()> {
    use crate::numfmt::fmt17;
    writeln!(w, "stage,mu,eps,eta,step,x,y,f,h,g,grad_norm,dist_to_global")?;
    for r in rows {
        let eps = r.eps.map(fmt17).unwrap_or_default();
        let eta = r.eta.map(fmt17).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.stage,
            fmt17(r.mu),
            eps,
            eta,
            r.sample.step,
            fmt17(r.sample.x),
            fmt17(r.sample.y),
            fmt17(r.sample.f),
            fmt17(r.sample.h),
            fmt17(r.sample.g),
            fmt17(r.sample.grad_norm),
            fmt17(r.dist_to_global)
        )?;
    }
    Ok(())
}

enum StageSolver {
    Flow,
    Descent { beta: f64 },
}

/// Warm-started homotopy with gradient flow as the stage solver.
pub fn run_homotopy_flow(
    sched: &Schedule,
    w0: Point,
    moments: &SecondMoment,
    m: &ModelParams,
    opts: &HomotopyOptions,
) -> Result<RunOutput, HomotopyError> {
    run_homotopy(sched, w0, moments, m, opts, StageSolver::Flow)
}

/// Warm-started homotopy driven by gradient descent, with the stage
/// tolerance and step size derived from `(beta, delta, mu_k)`. `mu0` must
/// satisfy the gd interval unless overridden.
pub fn run_homotopy_gd(
    m: &ModelParams,
    beta: f64,
    delta: f64,
    mu0: f64,
    w0: Point,
    moments: &SecondMoment,
    opts: &HomotopyOptions,
) -> Result<RunOutput, HomotopyError> {
    let sched = Schedule::gd(m, beta, delta, mu0);
    run_homotopy(&sched, w0, moments, m, opts, StageSolver::Descent { beta })
}

fn run_homotopy(
    sched: &Schedule,
    w0: Point,
    moments: &SecondMoment,
    m: &ModelParams,
    opts: &HomotopyOptions,
    solver: StageSolver,
) -> Result<RunOutput, HomotopyError> {
    let check = validate_mu0(sched, m);
    if !check.admissible && !opts.allow_inadmissible {
        return Err(HomotopyError::InadmissibleMu0 {
            mu0: sched.mu0,
            lo: check.lo,
            hi: check.hi,
            detail: check.detail,
        });
    }

    let mut stages: Vec<StageRecord> = Vec::new();
    let mut trajectory: Option<Vec<TrajectoryRow>> = opts.record_every.map(|_| Vec::new());
    let mut total_inner: u64 = 0;
    let mut current = w0;
    let mut mu_k = sched.mu0;
    let mut stop = None;

    while stop.is_none() {
        let k = stages.len();
        if k >= opts.stop.max_stages {
            stop = Some(StopReason::StageCap);
            break;
        }
        let Ok(weight) = PenaltyWeight::new(mu_k) else {
            stop = Some(StopReason::Failure);
            break;
        };
        let obj = PenalizedObjective::new(weight, *moments);

        let (eps_k, eta_k, solved): (Option<f64>, Option<f64>, Result<SolveResult, DynamicsError>) =
            match solver {
                StageSolver::Flow => {
                    let mut fo = opts.flow;
                    fo.record_every = opts.record_every;
                    (None, None, gradient_flow(&obj, current, &fo))
                }
                StageSolver::Descent { beta } => {
                    let (eps, eta) = gd_stage_params(mu_k, m, beta);
                    let dopts = DescentOptions {
                        step: eta,
                        eps,
                        max_iters: opts.max_inner_iters,
                        record_every: opts.record_every,
                    };
                    (Some(eps), Some(eta), gradient_descent(&obj, current, &dopts))
                }
            };

        let res = match solved {
            Ok(r) => r,
            Err(_) => {
                stop = Some(StopReason::Failure);
                break;
            }
        };

        total_inner += res.steps_taken;
        if let (Some(rows), Some(path)) = (trajectory.as_mut(), res.path.as_ref()) {
            for s in path {
                rows.push(TrajectoryRow {
                    stage: k,
                    mu: mu_k,
                    eps: eps_k,
                    eta: eta_k,
                    sample: *s,
                    dist_to_global: distance_to_global(Point::new(s.x, s.y), m),
                });
            }
        }
        stages.push(StageRecord {
            k,
            mu: mu_k,
            eps: eps_k,
            eta: eta_k,
            start: current,
            end: res.point,
            inner_steps: res.steps_taken,
            grad_norm: res.grad_norm,
            converged: res.converged,
        });
        current = res.point;

        if opts.stop.dist_tol > 0.0 && distance_to_global(current, m) <= opts.stop.dist_tol {
            stop = Some(StopReason::DistReached);
            break;
        }

        match next_mu(sched, mu_k, eps_k) {
            Ok(next) if next.is_finite() && next > 0.0 => {
                if next < opts.stop.mu_floor {
                    stop = Some(StopReason::MuFloor);
                } else {
                    mu_k = next;
                }
            }
            _ => stop = Some(StopReason::Failure),
        }
    }

    let report = HomotopyReport {
        final_point: current,
        dist_to_global: distance_to_global(current, m),
        total_inner_steps: total_inner,
        stop_reason: stop.unwrap_or(StopReason::StageCap),
        mu0_admissible: check.admissible,
        stages,
    };
    Ok(RunOutput { report, trajectory })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stationary::{critical_tau, solve_stationary_points, y_curvature_bounds};

    fn params(a: f64) -> ModelParams {
        ModelParams::new(a).unwrap()
    }

    fn mu(v: f64) -> PenaltyWeight {
        PenaltyWeight::new(v).unwrap()
    }

    #[test]
    fn validate_theory_intervals() {
        let chk = validate_mu0(&Schedule::theory(&params(2.0), 0.5), &params(2.0));
        assert!(chk.admissible);
        assert!((chk.lo - 0.008).abs() < 1e-15);
        assert!((chk.hi - 1.0).abs() < 1e-15);

        let chk = validate_mu0(&Schedule::theory(&params(1.0), 0.2), &params(1.0));
        assert!(chk.admissible);
        assert!((chk.lo - 1.0 / 32.0).abs() < 1e-15);
        assert!((chk.hi - 0.25).abs() < 1e-15);

        assert!(!validate_mu0(&Schedule::theory(&params(1.0), 0.3), &params(1.0)).admissible);
        assert!(!validate_mu0(&Schedule::theory(&params(1.0), 0.01), &params(1.0)).admissible);
    }

    #[test]
    fn validate_gd_interval() {
        let m = params(1.0);
        let chk = validate_mu0(&Schedule::gd(&m, 0.15, 0.05, 0.08), &m);
        assert!(chk.admissible);
        // endpoints from the closed forms
        let lo = (1.0 / 32.0) * 1.15f64.powi(4) / (0.85 * 0.85);
        let hi = 0.25 * 0.95f64.powi(3) * 0.85f64.powi(4) / (1.15 * 1.15);
        assert!((chk.lo - lo).abs() < 1e-15 && (chk.hi - hi).abs() < 1e-15);
        assert!((chk.lo - 0.0757).abs() < 1e-3 && (chk.hi - 0.0846).abs() < 1e-3);
        // incompatible beta/delta
        assert!(!validate_mu0(&Schedule::gd(&m, 0.6, 0.4, 0.08), &m).admissible);
    }

    #[test]
    fn validate_practical_and_ahat() {
        assert!(validate_mu0(&Schedule::practical(), &params(0.6)).admissible);
        assert!(!validate_mu0(&Schedule::practical(), &params(0.4)).admissible);

        let m = params(1.0);
        let mid = Schedule::admissible_midpoint(&ScheduleKind::Theory { a: 1.0 }, &m);
        assert!(validate_mu0(&Schedule::ahat(mid, None), &m).admissible);
        // eps = 0 freezes mu; the validator does not reject it, next_mu shows the stall
        let s0 = Schedule::ahat(0.1, Some(0.0));
        let n = next_mu(&s0, 0.1, None).unwrap();
        assert!((n - 0.1).abs() < 1e-15, "eps = 0 repeats mu0 exactly");
        let s = Schedule::ahat(0.1, None);
        assert!(next_mu(&s, 0.1, None).unwrap() < 0.1);
    }

    #[test]
    fn next_mu_values() {
        let s = Schedule::theory(&params(2.0), 0.5);
        let v = next_mu(&s, 0.5, None).unwrap();
        assert!((v - 0.5f64.powf(4.0 / 3.0)).abs() < 1e-15);
        assert!((v - 0.396850).abs() < 1e-6);

        let s = Schedule::practical();
        let v = next_mu(&s, PRACTICAL_MU0, None).unwrap();
        let expect = (2.0 / (5.0 / 27.0f64).sqrt()).powf(2.0 / 3.0) / 81.0;
        assert!((v - expect).abs() < 1e-15);
        assert!((v - 0.034382).abs() < 1e-5);
        assert!(v < PRACTICAL_MU0);

        // gd update against the printed formula
        let s = Schedule::gd(&params(1.0), 0.15, 0.05, 0.08);
        let v = next_mu(&s, 0.01, Some(0.001)).unwrap();
        let expect = (2.0 * 1e-4f64).powf(2.0 / 3.0) * 1.1f64.powf(2.0 / 3.0)
            / 0.9f64.powf(4.0 / 3.0);
        assert!((v - expect).abs() <= 1e-15 * expect);
        // domain error when eps >= a mu
        assert_eq!(
            next_mu(&s, 0.01, Some(0.02)),
            Err(HomotopyError::EpsTooLarge { eps: 0.02, amu: 0.01 })
        );

        let s = Schedule::custom(0.1, 500.0);
        assert!((next_mu(&s, 0.1, None).unwrap() - 0.0002).abs() < 1e-18);

        // gd update without a stage tolerance is a schedule error
        let s = Schedule::gd(&params(1.0), 0.15, 0.05, 0.08);
        assert!(matches!(next_mu(&s, 0.01, None), Err(HomotopyError::InvalidSchedule(_))));
    }

    #[test]
    fn validate_custom_schedule() {
        let m = params(1.0);
        assert!(validate_mu0(&Schedule::custom(0.1, 500.0), &m).admissible);
        // factor must shrink mu, and mu0 below the single-root floor is flagged
        assert!(!validate_mu0(&Schedule::custom(0.1, 0.5), &m).admissible);
        assert!(!validate_mu0(&Schedule::custom(0.001, 500.0), &m).admissible);
    }

    #[test]
    fn theory_interval_variant() {
        let m = params(1.0);
        let mu_k = 0.2;
        let alg2 = next_mu(&Schedule::theory(&m, mu_k), mu_k, None).unwrap();
        assert!(theory_step_admissible(mu_k, alg2, &m));
        assert!(theory_step_admissible(mu_k, mu_k * 0.999, &m));
        assert!(!theory_step_admissible(mu_k, mu_k, &m));
        let (lo, _) = theory_step_interval(mu_k, &m);
        let ylb = y_curvature_bounds(mu(mu_k), &m).unwrap().lower;
        assert!((lo - ylb * ylb).abs() < 1e-15);
        assert!(!theory_step_admissible(mu_k, lo * 0.99, &m));
    }

    #[test]
    fn gd_stage_params_values() {
        let m = params(1.0);
        let (eps, _) = gd_stage_params(0.01, &m, 0.1);
        assert!((eps - 0.001).abs() < 1e-15);
        let (_, eta) = gd_stage_params(0.05, &m, 0.1);
        assert!((eta - 1.0 / 3.1).abs() < 1e-15);
        // small mu: eps = mu^{3/2} once mu <= beta^2 a^2
        let beta = 0.5;
        let w = 0.2;
        assert!(w <= beta * beta);
        let (eps, _) = gd_stage_params(w, &m, beta);
        assert!((eps - w.powf(1.5)).abs() < 1e-15);
    }

    #[test]
    fn distance_values() {
        let m = params(1.0);
        assert_eq!(distance_to_global(Point::new(1.0, 0.0), &m), 0.0);
        assert_eq!(distance_to_global(Point::new(0.0, 0.0), &params(2.0)), 2.0);
        let d = distance_to_global(Point::new(0.0, 0.5), &m);
        assert!((d - 1.25f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn outer_bound_clamps_and_is_monotone() {
        // large eps_dist makes all log terms negative
        assert_eq!(outer_iteration_bound(1e-6, 1.0, 0.05, 0.5, 1e3), 0);
        // monotone in eps_dist (nonincreasing) and mu0 (nondecreasing)
        let mut prev = u64::MAX;
        for &e in &[1e-4, 1e-3, 1e-2, 1e-1, 1.0] {
            let k = outer_iteration_bound(0.08, 1.0, 0.05, 0.15, e);
            assert!(k <= prev);
            prev = k;
        }
        let mut prev = 0;
        for &m0 in &[0.01, 0.05, 0.08, 0.2] {
            let k = outer_iteration_bound(m0, 1.0, 0.05, 0.15, 1e-2);
            assert!(k >= prev);
            prev = k;
        }
    }

    #[test]
    fn theory_run_reaches_global_optimum() {
        let m = params(1.0);
        let sm = SecondMoment::population(&m);
        let sched = Schedule::theory(&m, 0.2);
        let out = run_homotopy_flow(
            &sched,
            Point::new(0.0, 0.0),
            &sm,
            &m,
            &HomotopyOptions::default(),
        )
        .unwrap();
        assert_eq!(out.report.stop_reason, StopReason::MuFloor);
        assert!(
            out.report.dist_to_global <= 1e-3,
            "dist = {}",
            out.report.dist_to_global
        );
        // mu strictly decreasing across stages
        for pair in out.report.stages.windows(2) {
            assert!(pair[1].mu < pair[0].mu);
        }
    }

    #[test]
    fn theory_run_warm_starts_stay_contained() {
        let m = params(1.0);
        let sm = SecondMoment::population(&m);
        let sched = Schedule::theory(&m, 0.2);
        let out =
            run_homotopy_flow(&sched, Point::new(-1.0, 1.5), &sm, &m, &HomotopyOptions::default())
                .unwrap();
        let tau = critical_tau(&m).tau;
        let stages = &out.report.stages;
        for k in 0..stages.len() - 1 {
            let end = stages[k].end;
            let mu_next = stages[k + 1].mu;
            assert!(
                end.y < mu_next.sqrt(),
                "stage {k}: y = {} vs sqrt(mu') = {}",
                end.y,
                mu_next.sqrt()
            );
            if mu_next < tau {
                let set = solve_stationary_points(mu(mu_next), &m);
                if let Some(d) = set.double_star() {
                    assert!(mu_next.sqrt() <= d.point.y);
                    assert!(end.y < d.point.y && end.x > d.point.x, "stage {k} left B");
                }
            }
        }
        // distance to global is monotone over the last stages
        let n = stages.len();
        let mut prev = f64::INFINITY;
        for s in &stages[n.saturating_sub(10)..] {
            let d = distance_to_global(s.end, &m);
            assert!(d <= prev + 1e-12);
            prev = d;
        }
    }

    #[test]
    fn practical_run_converges_for_a_above_threshold() {
        let m = params(0.6);
        let sm = SecondMoment::population(&m);
        let out = run_homotopy_flow(
            &Schedule::practical(),
            Point::new(1.0, 1.0),
            &sm,
            &m,
            &HomotopyOptions::default(),
        )
        .unwrap();
        assert!(out.report.dist_to_global <= 1e-3, "dist = {}", out.report.dist_to_global);
    }

    #[test]
    fn ahat_runs_converge() {
        for &a in &[0.5, 1.0, 2.0] {
            let m = params(a);
            let sm = SecondMoment::population(&m);
            let mid = Schedule::admissible_midpoint(&ScheduleKind::Theory { a }, &m);
            let out = run_homotopy_flow(
                &Schedule::ahat(mid, None),
                Point::new(0.0, 0.0),
                &sm,
                &m,
                &HomotopyOptions::default(),
            )
            .unwrap();
            assert!(
                out.report.dist_to_global <= 1e-3,
                "a = {a}: dist = {}",
                out.report.dist_to_global
            );
        }
    }

    #[test]
    fn fast_decay_from_spurious_basin_reaches_spurious_minimum() {
        // below the threshold with the start in the upper-left basin, a fast
        // custom decay locks the path onto the spurious branch
        let m = params(0.5);
        let sm = SecondMoment::population(&m);
        let tau = critical_tau(&m).tau;
        let mu0 = 0.01;
        assert!(mu0 < tau);
        let sched = Schedule::custom(mu0, 500.0);
        let opts = HomotopyOptions { allow_inadmissible: true, ..Default::default() };
        let out = run_homotopy_flow(&sched, Point::new(0.05, 0.45), &sm, &m, &opts).unwrap();
        let spur = m.spurious_limit();
        let p = out.report.final_point;
        let d = (p.x - spur.x).hypot(p.y - spur.y);
        assert!(d <= 1e-2, "final ({}, {}) is {d:.2e} from the spurious minimum", p.x, p.y);
        assert!(!out.report.mu0_admissible);
    }

    #[test]
    fn report_json_field_names() {
        let m = params(1.0);
        let sm = SecondMoment::population(&m);
        let out = run_homotopy_flow(
            &Schedule::theory(&m, 0.2),
            Point::new(0.0, 0.0),
            &sm,
            &m,
            &HomotopyOptions::default(),
        )
        .unwrap();
        let js = serde_json::to_value(&out.report).unwrap();
        assert!(js["final"]["x"].is_number());
        assert!(js["dist_to_global"].is_number());
        assert!(js["total_inner_steps"].is_number());
        assert_eq!(js["stop_reason"], "mu_floor");
        assert!(js["stages"][0]["mu"].is_number());
    }

    #[test]
    fn inadmissible_mu0_needs_override() {
        let m = params(1.0);
        let sm = SecondMoment::population(&m);
        let sched = Schedule::theory(&m, 0.3);
        let err = run_homotopy_flow(&sched, Point::new(0.0, 0.0), &sm, &m, &HomotopyOptions::default());
        assert!(matches!(err, Err(HomotopyError::InadmissibleMu0 { .. })));
        let opts = HomotopyOptions { allow_inadmissible: true, ..Default::default() };
        let out = run_homotopy_flow(&sched, Point::new(0.0, 0.0), &sm, &m, &opts).unwrap();
        assert!(!out.report.mu0_admissible);
    }

    #[test]
    fn gd_run_meets_distance_and_decay() {
        let m = params(1.0);
        let sm = SecondMoment::population(&m);
        let (beta, delta, mu0, eps_dist) = (0.15, 0.05, 0.08, 1e-2);
        let opts = HomotopyOptions {
            stop: StopRules { dist_tol: eps_dist, ..Default::default() },
            ..Default::default()
        };
        let out =
            run_homotopy_gd(&m, beta, delta, mu0, Point::new(-1.0, 1.0), &sm, &opts).unwrap();
        assert_eq!(out.report.stop_reason, StopReason::DistReached);
        assert!(out.report.dist_to_global <= eps_dist);
        let bound = outer_iteration_bound(mu0, 1.0, delta, beta, eps_dist);
        assert!(
            (out.report.stages.len() as u64) <= bound,
            "stages {} > bound {bound}",
            out.report.stages.len()
        );
        for pair in out.report.stages.windows(2) {
            assert!(pair[1].mu <= (1.0 - delta) * pair[0].mu + 1e-15);
        }
        // each stage end is an eps_k-stationary point inside A_{mu,eps}
        for s in &out.report.stages {
            assert!(s.grad_norm <= s.eps.unwrap());
            let flags = crate::stationary::region_membership(s.end, mu(s.mu), &m, s.eps.unwrap());
            assert!(flags.in_a_eps, "stage {} end outside A_mu_eps", s.k);
        }
    }

    #[test]
    fn trajectory_csv_schema() {
        let m = params(1.0);
        let sm = SecondMoment::population(&m);
        let opts = HomotopyOptions {
            record_every: Some(10),
            stop: StopRules { max_stages: 3, ..Default::default() },
            ..Default::default()
        };
        let out = run_homotopy_flow(
            &Schedule::theory(&m, 0.2),
            Point::new(0.0, 0.0),
            &sm,
            &m,
            &opts,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, out.trajectory.as_ref().unwrap()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "stage,mu,eps,eta,step,x,y,f,h,g,grad_norm,dist_to_global"
        );
        assert!(lines.next().unwrap().split(',').count() == 12);
    }
}
