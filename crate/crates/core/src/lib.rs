//! Solver library for the bivariate penalized DAG-learning problem.
//!
//! The target is `min f(x, y)` subject to `h(x, y) = x^2 y^2 / 2 = 0`, where
//! `f` is the least-squares score of a two-node linear SEM. The library
//! provides the penalized objective `g_mu = mu f + h` with exact derivatives,
//! an analytic description of its stationary points as `mu` varies, inner
//! solvers (gradient flow, gradient descent), and the warm-started homotopy
//! loops that track the global optimum as `mu` decreases, together with the
//! bookkeeping needed to check each step of the convergence argument
//! numerically.

pub mod dynamics;
pub mod homotopy;
pub mod model;
pub mod numfmt;
pub mod stationary;

pub use dynamics::{
    gradient_descent, gradient_flow, DescentOptions, DynamicsError, FlowOptions, PathSample,
    SolveResult,
};
pub use homotopy::{
    distance_to_global, gd_stage_params, next_mu, outer_iteration_bound, run_homotopy_flow,
    run_homotopy_gd, validate_mu0, HomotopyError, HomotopyOptions, HomotopyReport, MuZeroCheck,
    RunOutput, Schedule, ScheduleKind, StageRecord, StopReason, StopRules,
};
pub use model::{
    acyclicity_penalty, enumeration_oracle, gradient, gradient_norm, hessian, loss_from_moments,
    penalized_objective, population_loss, sample_sem, smoothness_bound, Dataset, Hessian,
    ModelError, ModelParams, MomentOrigin, NoiseKind, Objective, PenalizedObjective,
    PenaltyWeight, Point, SecondMoment,
};
pub use stationary::{
    classify_stationary, critical_tau, eval_perturbed, eval_r, eval_t, region_membership,
    solve_stationary_points, stationary_report, x_curvature_bounds, y_curvature_bounds, Branch,
    BoundVariable, CurvatureBounds, PerturbedForm, RegionFlags, StationaryError, StationaryKind,
    StationaryPoint, StationaryReport, StationarySet, Threshold,
};
