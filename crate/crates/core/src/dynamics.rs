//! Inner solvers for one homotopy stage: continuous gradient flow integrated
//! with an embedded Dormand-Prince 4(5) pair, and fixed-step gradient descent
//! run to an eps-stationary point.

use crate::model::{Objective, Point};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("non-finite values at step {step}; last finite point ({x}, {y})")]
    NumericFailure { x: f64, y: f64, step: u64 },
    #[error("invalid solver option: {0}")]
    InvalidOptions(String),
}

/// Decimation used for path recording when the caller asks for a path but
/// does not pick a stride.
pub const DEFAULT_PATH_STRIDE: usize = 10;

/// Options for [`gradient_flow`]. The flow approximates the `t -> inf` limit
/// by stopping once the gradient norm falls below `grad_tol`.
#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    /// Stop once `|grad g| <= grad_tol`.
    pub grad_tol: f64,
    /// Integration horizon.
    pub max_time: f64,
    /// Per-step relative error control for the embedded pair.
    pub rel_step_tol: f64,
    /// Cap on attempted integrator steps.
    pub max_steps: u64,
    /// Record every k-th accepted step; `None` disables path recording.
    pub record_every: Option<usize>,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-10,
            max_time: 1e7,
            rel_step_tol: 1e-9,
            max_steps: 20_000_000,
            record_every: None,
        }
    }
}

/// Options for [`gradient_descent`].
#[derive(Debug, Clone, Copy)]
pub struct DescentOptions {
    /// Fixed step size, normally `1/L` from the smoothness bound.
    pub step: f64,
    /// Target gradient norm.
    pub eps: f64,
    pub max_iters: u64,
    /// Record every k-th iterate; `None` disables path recording.
    pub record_every: Option<usize>,
}

/// One recorded state along a solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub step: u64,
    /// Flow time for the ODE solver, iteration index for descent.
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub f: f64,
    pub h: f64,
    pub g: f64,
    pub grad_norm: f64,
}

/// Outcome of one inner solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub point: Point,
    pub grad_norm: f64,
    pub steps_taken: u64,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<PathSample>>,
    /// Number of stall perturbations applied near a saddle.
    pub saddle_perturbations: u32,
}

impl SolveResult {
    /// Writes the recorded path as `step,t,x,y,f,h,g,grad_norm` CSV rows.
    pub fn write_path_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        use crate::numfmt::fmt17;
        writeln!(w, "step,t,x,y,f,h,g,grad_norm")?;
        if let Some(path) = &self.path {
            for s in path {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    s.step,
                    fmt17(s.t),
                    fmt17(s.x),
                    fmt17(s.y),
                    fmt17(s.f),
                    fmt17(s.h),
                    fmt17(s.g),
                    fmt17(s.grad_norm)
                )?;
            }
        }
        Ok(())
    }
}

fn sample(obj: &impl Objective, step: u64, t: f64, p: Point, grad_norm: f64) -> PathSample {
    PathSample {
        step,
        t,
        x: p.x,
        y: p.y,
        f: obj.loss_term(p),
        h: obj.penalty_term(p),
        g: obj.value(p),
        grad_norm,
    }
}

// Dormand-Prince 5(4) tableau. The flow field is autonomous, so the stage
// times are not needed.
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const STALL_WINDOW: u64 = 1000;
const STALL_DECREASE: f64 = 1e-14;
const STALL_KICK: f64 = 1e-9;

/// Integrates `dz/dt = -grad g(z)` from `z0` until `|grad g| <= grad_tol` or
/// the time/step budget runs out (then `converged = false`).
pub fn gradient_flow(
    obj: &impl Objective,
    z0: Point,
    opts: &FlowOptions,
) -> Result<SolveResult, DynamicsError> {
    if !(opts.grad_tol > 0.0) || !(opts.max_time > 0.0) || opts.max_steps == 0 {
        return Err(DynamicsError::InvalidOptions(
            "grad_tol, max_time and max_steps must be positive".into(),
        ));
    }

    let rhs = |p: Point| -> (f64, f64) {
        let (gx, gy) = obj.gradient(p);
        (-gx, -gy)
    };

    let mut z = z0;
    let mut k1 = rhs(z);
    let mut grad_norm = k1.0.hypot(k1.1);
    let mut accepted: u64 = 0;
    let mut perturbations: u32 = 0;
    let mut path: Option<Vec<PathSample>> = opts.record_every.map(|_| Vec::new());
    let stride = opts.record_every.unwrap_or(DEFAULT_PATH_STRIDE).max(1);
    if let Some(p) = path.as_mut() {
        p.push(sample(obj, 0, 0.0, z, grad_norm));
    }

    if grad_norm <= opts.grad_tol {
        return Ok(SolveResult {
            point: z,
            grad_norm,
            steps_taken: 0,
            converged: true,
            path,
            saddle_perturbations: 0,
        });
    }

    let mut t = 0.0;
    let scale0 = 1.0 + z.x.hypot(z.y);
    // absolute error floor tied to the initial problem scale, so states near
    // the origin do not force microscopic steps
    let floor = 0.01 * scale0;
    let mut h = (0.01 * scale0 / (grad_norm + 1e-10))
        .min(opts.max_time * 1e-3)
        .min(1.0)
        .max(1e-12);

    // stall detection over accepted steps: compare the best gradient norm
    // reached in consecutive windows
    let mut prev_window_best = grad_norm;
    let mut window_best = grad_norm;
    let mut window_mark = 0u64;

    let mut attempts: u64 = 0;
    let mut converged = false;
    while attempts < opts.max_steps && t < opts.max_time {
        attempts += 1;
        if t + h > opts.max_time {
            h = opts.max_time - t;
        }

        let mut k = [[0.0f64; 2]; 7];
        k[0] = [k1.0, k1.1];
        for i in 1..7 {
            let mut acc = [0.0f64; 2];
            for (j, kj) in k.iter().enumerate().take(i) {
                acc[0] += A[i][j] * kj[0];
                acc[1] += A[i][j] * kj[1];
            }
            let p = Point::new(z.x + h * acc[0], z.y + h * acc[1]);
            let d = rhs(p);
            k[i] = [d.0, d.1];
        }
        let mut z5 = [z.x, z.y];
        let mut err = [0.0f64; 2];
        for (i, ki) in k.iter().enumerate() {
            z5[0] += h * B5[i] * ki[0];
            z5[1] += h * B5[i] * ki[1];
            err[0] += h * (B5[i] - B4[i]) * ki[0];
            err[1] += h * (B5[i] - B4[i]) * ki[1];
        }

        if !(z5[0].is_finite() && z5[1].is_finite()) {
            return Err(DynamicsError::NumericFailure { x: z.x, y: z.y, step: accepted });
        }

        let sc_x = opts.rel_step_tol * (floor + z.x.abs().max(z5[0].abs()));
        let sc_y = opts.rel_step_tol * (floor + z.y.abs().max(z5[1].abs()));
        let err_norm = (0.5 * ((err[0] / sc_x).powi(2) + (err[1] / sc_y).powi(2))).sqrt();

        // directional curvature over the step; caps h at the explicit
        // stability limit so the fast mode contracts instead of ringing
        // around the fixed point
        let dz = ((z5[0] - z.x).powi(2) + (z5[1] - z.y).powi(2)).sqrt();
        let df = ((k[6][0] - k[0][0]).powi(2) + (k[6][1] - k[0][1]).powi(2)).sqrt();
        let h_stab = if dz > 1e-300 && df > 0.0 { 2.5 * dz / df } else { f64::INFINITY };

        if err_norm <= 1.0 {
            // accept; k7 is the derivative at the new point (FSAL)
            t += h;
            z = Point::new(z5[0], z5[1]);
            k1 = (k[6][0], k[6][1]);
            grad_norm = k1.0.hypot(k1.1);
            accepted += 1;

            if let Some(p) = path.as_mut() {
                if accepted % stride as u64 == 0 {
                    p.push(sample(obj, accepted, t, z, grad_norm));
                }
            }

            if grad_norm <= opts.grad_tol {
                converged = true;
                break;
            }

            // saddle stall: no measurable progress over a long window
            if grad_norm < window_best {
                window_best = grad_norm;
            }
            if accepted - window_mark >= STALL_WINDOW {
                if prev_window_best - window_best < STALL_DECREASE && grad_norm > opts.grad_tol {
                    z = Point::new(z.x - STALL_KICK, z.y);
                    k1 = rhs(z);
                    grad_norm = k1.0.hypot(k1.1);
                    perturbations += 1;
                }
                window_mark = accepted;
                prev_window_best = window_best;
                window_best = grad_norm;
            }
        }

        // elementary controller plus the stability cap
        let fac = if err_norm > 0.0 {
            0.9 * err_norm.powf(-0.2)
        } else {
            5.0
        };
        h *= fac.clamp(0.2, 5.0);
        h = h.min(h_stab).max(1e-14 * (1.0 + t));
    }

    if let Some(p) = path.as_mut() {
        if p.last().map(|s| s.step) != Some(accepted) {
            p.push(sample(obj, accepted, t, z, grad_norm));
        }
    }

    Ok(SolveResult {
        point: z,
        grad_norm,
        steps_taken: accepted,
        converged,
        path,
        saddle_perturbations: perturbations,
    })
}

/// Fixed-step gradient descent `w <- w - step * grad g(w)`, returning the
/// first iterate with `|grad g| <= eps`.
pub fn gradient_descent(
    obj: &impl Objective,
    w0: Point,
    opts: &DescentOptions,
) -> Result<SolveResult, DynamicsError> {
    if !(opts.step > 0.0) || !(opts.eps > 0.0) {
        return Err(DynamicsError::InvalidOptions(
            "step and eps must be positive".into(),
        ));
    }

    let mut w = w0;
    let mut path: Option<Vec<PathSample>> = opts.record_every.map(|_| Vec::new());
    let stride = opts.record_every.unwrap_or(DEFAULT_PATH_STRIDE).max(1);

    let mut iters: u64 = 0;
    loop {
        let (gx, gy) = obj.gradient(w);
        let grad_norm = gx.hypot(gy);
        if !(w.is_finite() && grad_norm.is_finite()) {
            let last = last_finite(path.as_deref(), w0);
            return Err(DynamicsError::NumericFailure { x: last.x, y: last.y, step: iters });
        }
        if let Some(p) = path.as_mut() {
            if iters % stride as u64 == 0 {
                p.push(sample(obj, iters, iters as f64, w, grad_norm));
            }
        }
        if grad_norm <= opts.eps {
            if let Some(p) = path.as_mut() {
                if p.last().map(|s| s.step) != Some(iters) {
                    p.push(sample(obj, iters, iters as f64, w, grad_norm));
                }
            }
            return Ok(SolveResult {
                point: w,
                grad_norm,
                steps_taken: iters,
                converged: true,
                path,
                saddle_perturbations: 0,
            });
        }
        if iters >= opts.max_iters {
            return Ok(SolveResult {
                point: w,
                grad_norm,
                steps_taken: iters,
                converged: false,
                path,
                saddle_perturbations: 0,
            });
        }
        w = Point::new(w.x - opts.step * gx, w.y - opts.step * gy);
        iters += 1;
    }
}

fn last_finite(path: Option<&[PathSample]>, w0: Point) -> Point {
    path.and_then(|p| {
        p.iter()
            .rev()
            .find(|s| s.x.is_finite() && s.y.is_finite())
            .map(|s| Point::new(s.x, s.y))
    })
    .unwrap_or(w0)
}
