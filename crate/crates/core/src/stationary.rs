//! Analytic landscape toolkit for `g_mu`: the one-variable stationary
//! equations `r(y; mu)` and `t(x; mu)`, their perturbed variants, the
//! phase-transition threshold `tau`, root solving with classification, and
//! the region tests used by the convergence analysis.
//!
//! All eight scalar equations share one shape, `F(v) = P/v - R/(v^2 + c)^2 - Q`,
//! which goes to `+inf` at `0+`, has at most one interior hump delimited by
//! the curvature bounds, and is negative at the right end of the region of
//! interest. Root finding is bracketed bisection on those monotone pieces.

use crate::model::{gradient_norm, hessian, ModelParams, PenaltyWeight, Point};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StationaryError {
    #[error("argument must be positive, got {0}")]
    NonPositiveArgument(f64),
    #[error("point ({x}, {y}) is not stationary at mu={mu}: |grad g| = {grad_norm}")]
    NotStationary { x: f64, y: f64, mu: f64, grad_norm: f64 },
    #[error("beta must lie in (0, 1), got {0}")]
    InvalidBeta(f64),
    #[error("eps must be nonnegative and finite, got {0}")]
    InvalidEps(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationaryKind {
    Minimum,
    Saddle,
    Degenerate,
}

/// Which root of the stationary system a point belongs to, ordered by
/// `x*** < x** < x*` (equivalently `y* < y** < y***`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Star,
    DoubleStar,
    TripleStar,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StationaryPoint {
    pub point: Point,
    pub kind: StationaryKind,
    pub branch: Branch,
    pub mu: f64,
}

/// The 1-3 stationary points of `g_mu`, ordered star, double-star, triple-star.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationarySet {
    pub mu: f64,
    pub points: Vec<StationaryPoint>,
}

impl StationarySet {
    pub fn star(&self) -> &StationaryPoint {
        &self.points[0]
    }

    pub fn double_star(&self) -> Option<&StationaryPoint> {
        self.points.get(1)
    }

    pub fn triple_star(&self) -> Option<&StationaryPoint> {
        self.points.get(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVariable {
    Y,
    X,
}

/// Interval on which the relevant one-variable equation is increasing;
/// outside it the equation is non-increasing.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CurvatureBounds {
    pub lower: f64,
    pub upper: f64,
    pub variable: BoundVariable,
}

/// Critical penalty weight: below it `g_mu` has three stationary points,
/// above it one.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Threshold {
    pub tau: f64,
    pub a: f64,
}

/// Perturbed stationary equations from the eps-stationarity analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbedForm {
    /// `r_eps`: y-equation of `x = (mu a - eps)/(mu + y^2)`, `y = (mu a + eps)/(mu(a^2+1) + x^2)`.
    REps,
    /// `t_eps`: x-equation of the same system.
    TEps,
    /// `r_eps_`: y-equation of the mirrored system (signs of eps swapped).
    REpsMinus,
    /// `t_eps_`: x-equation of the mirrored system.
    TEpsMinus,
    /// `r_beta`: worst case `eps = beta a mu` in `r_eps`.
    RBeta,
    /// `t_beta`: worst case `eps = beta a mu` in `t_eps`.
    TBeta,
}

/// Membership flags for the regions used by the convergence theory.
/// `B`-flags are `None` when `mu >= tau` (the basin is not defined there);
/// `in_a1`/`in_a2` fall back to `false` when the perturbed system lacks the
/// corresponding extremal point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegionFlags {
    pub in_a: bool,
    pub in_a_eps: bool,
    pub in_a1: bool,
    pub in_a2: bool,
    pub in_b_mu: Option<bool>,
    pub in_b_mu_eps: Option<bool>,
}

// ---------------------------------------------------------------------------
// The shared scalar family F(v) = P/v - R/(v^2 + c)^2 - Q.

#[derive(Debug, Clone, Copy)]
struct RationalEq {
    p: f64,
    r: f64,
    c: f64,
    q: f64,
}

impl RationalEq {
    fn r_shape(mu: f64, a: f64) -> Self {
        Self { p: a, r: mu * a * a, c: mu, q: a * a + 1.0 }
    }

    fn t_shape(mu: f64, a: f64) -> Self {
        Self { p: a, r: mu * a * a, c: mu * (a * a + 1.0), q: 1.0 }
    }

    /// y-equation of the system x = (mu a - eps)/(mu + y^2), y = (mu a + eps)/(mu(a^2+1) + x^2).
    fn r_eps(mu: f64, a: f64, eps: f64) -> Self {
        let d = mu * a - eps;
        Self { p: a + eps / mu, r: d * d / mu, c: mu, q: a * a + 1.0 }
    }

    fn t_eps(mu: f64, a: f64, eps: f64) -> Self {
        let d = mu * a + eps;
        Self { p: a - eps / mu, r: d * d / mu, c: mu * (a * a + 1.0), q: 1.0 }
    }

    fn r_eps_minus(mu: f64, a: f64, eps: f64) -> Self {
        let d = mu * a + eps;
        Self { p: a - eps / mu, r: d * d / mu, c: mu, q: a * a + 1.0 }
    }

    fn t_eps_minus(mu: f64, a: f64, eps: f64) -> Self {
        let d = mu * a - eps;
        Self { p: a + eps / mu, r: d * d / mu, c: mu * (a * a + 1.0), q: 1.0 }
    }

    fn r_beta(mu: f64, a: f64, beta: f64) -> Self {
        let s = 1.0 - beta;
        Self { p: a * (1.0 + beta), r: mu * a * a * s * s, c: mu, q: a * a + 1.0 }
    }

    fn t_beta(mu: f64, a: f64, beta: f64) -> Self {
        let s = 1.0 + beta;
        Self { p: a * (1.0 - beta), r: mu * a * a * s * s, c: mu * (a * a + 1.0), q: 1.0 }
    }

    fn eval(&self, v: f64) -> f64 {
        let w = v * v + self.c;
        self.p / v - self.r / (w * w) - self.q
    }

    /// Endpoints of the increasing piece: roots of `v^2 - D v + c` with
    /// `D = (4R/P)^{1/3}`. `None` when the equation is monotone decreasing.
    /// A discriminant within rounding of zero counts as the tangent case.
    fn curvature_bounds(&self) -> Option<(f64, f64)> {
        let d = (4.0 * self.r / self.p).cbrt();
        let disc = d * d - 4.0 * self.c;
        let round_off = 4.0 * f64::EPSILON * (d * d).max(4.0 * self.c);
        if disc < -round_off {
            return None;
        }
        let s = disc.max(0.0).sqrt();
        Some((0.5 * (d - s), 0.5 * (d + s)))
    }

    /// All roots in `(0, hi]`, ascending. `hi` must satisfy `F(hi) <= 0`
    /// (extended upward when it does not).
    fn roots(&self, hi0: f64) -> Vec<f64> {
        let mut hi = hi0;
        let mut guard = 0;
        while self.eval(hi) > 0.0 && guard < 200 {
            hi *= 1.5;
            guard += 1;
        }

        // lower bracket end: F -> +inf as v -> 0+
        let find_lo = |below: f64| -> f64 {
            let mut lo = (1e-15 * self.p).min(below * 0.5);
            let mut guard = 0;
            while self.eval(lo) <= 0.0 && guard < 2000 {
                lo *= 0.5;
                guard += 1;
            }
            lo
        };

        let mut out = Vec::new();
        // tangency tolerance: hump values this close to zero count as a
        // double root (mu within bisection precision of tau)
        let tangency = 1e-10 * self.q.max(1.0);
        match self.curvature_bounds() {
            None => {
                // strictly decreasing: single root
                let lo = find_lo(hi);
                out.push(bisect(|v| self.eval(v), lo, hi));
            }
            Some((vlb, vub)) => {
                let f_lb = self.eval(vlb);
                let f_ub = self.eval(vub);
                if f_lb < -tangency {
                    let lo = find_lo(vlb);
                    out.push(bisect(|v| self.eval(v), lo, vlb));
                } else if f_lb.abs() <= tangency {
                    out.push(vlb);
                }
                if f_ub > tangency {
                    if f_lb < -tangency {
                        out.push(bisect(|v| self.eval(v), vlb, vub));
                    }
                    if vub < hi {
                        out.push(bisect(|v| self.eval(v), vub, hi));
                    }
                } else if f_ub.abs() <= tangency {
                    out.push(vub);
                }
            }
        }

        // near-tangency merge: collapse pairs closer than the tie-break scale
        let merge_tol = 1e-8 * self.p.max(1.0);
        let mut merged: Vec<f64> = Vec::with_capacity(out.len());
        for v in out {
            match merged.last() {
                Some(&prev) if (v - prev).abs() < merge_tol => {
                    let last = merged.len() - 1;
                    merged[last] = 0.5 * (prev + v);
                }
                _ => merged.push(v),
            }
        }
        merged
    }
}

/// Bisection on a bracket with `f(lo) > 0 > f(hi)` by construction; runs to
/// relative width 1e-12 or 200 iterations.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    if flo < 0.0 {
        // caller guarantees the sign layout; fall back to swapping
        std::mem::swap(&mut lo, &mut hi);
        flo = f(lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= 1e-12 * mid.abs().max(f64::MIN_POSITIVE) {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// ---------------------------------------------------------------------------
// Public operations.

/// `r(y; mu) = a/y - mu a^2 / (y^2 + mu)^2 - (a^2 + 1)`.
pub fn eval_r(y: f64, mu: PenaltyWeight, m: &ModelParams) -> Result<f64, StationaryError> {
    if !(y > 0.0) {
        return Err(StationaryError::NonPositiveArgument(y));
    }
    Ok(RationalEq::r_shape(mu.get(), m.a()).eval(y))
}

/// `t(x; mu) = a/x - mu a^2 / (mu(a^2+1) + x^2)^2 - 1`.
pub fn eval_t(x: f64, mu: PenaltyWeight, m: &ModelParams) -> Result<f64, StationaryError> {
    if !(x > 0.0) {
        return Err(StationaryError::NonPositiveArgument(x));
    }
    Ok(RationalEq::t_shape(mu.get(), m.a()).eval(x))
}

/// Endpoints of the interval where `r(.; mu)` increases; `None` for
/// `mu > a^2/4`. Satisfies `lower <= sqrt(mu) <= upper`.
pub fn y_curvature_bounds(mu: PenaltyWeight, m: &ModelParams) -> Option<CurvatureBounds> {
    RationalEq::r_shape(mu.get(), m.a())
        .curvature_bounds()
        .map(|(lower, upper)| CurvatureBounds { lower, upper, variable: BoundVariable::Y })
}

/// Endpoints of the interval where `t(.; mu)` increases; `None` for
/// `mu > a^2 / (4 (a^2+1)^3)`. Satisfies `lower <= sqrt(mu (a^2+1)) <= upper`.
pub fn x_curvature_bounds(mu: PenaltyWeight, m: &ModelParams) -> Option<CurvatureBounds> {
    RationalEq::t_shape(mu.get(), m.a())
        .curvature_bounds()
        .map(|(lower, upper)| CurvatureBounds { lower, upper, variable: BoundVariable::X })
}

/// `p(mu) = r(y_ub(mu); mu)`, the value of `r` at its local maximum. Strictly
/// decreasing in `mu`; its unique zero is `tau`.
fn p_of_mu(mu: f64, a: f64) -> f64 {
    let eq = RationalEq::r_shape(mu, a);
    let (_, yub) = eq
        .curvature_bounds()
        .expect("p(mu) is only evaluated for mu <= a^2/4");
    eq.eval(yub)
}

/// Finds the threshold `tau` as the unique zero of `p(mu) = r(y_ub; mu)` by
/// bisection, to absolute tolerance `1e-14 * a^2`.
pub fn critical_tau(m: &ModelParams) -> Threshold {
    let a = m.a();
    let a2 = a * a;
    // upper bracket: tau < a^2 / (4 (a^2+1)^3) <= a^2/4, so p < 0 there
    let mut hi = a2 / (4.0 * (a2 + 1.0).powi(3));
    let mut guard = 0;
    while p_of_mu(hi, a) >= 0.0 && guard < 60 {
        hi = (hi * 1.5).min(a2 / 4.0 * (1.0 - 1e-9));
        guard += 1;
    }
    // lower bracket: p -> +inf as mu -> 0+
    let mut lo = 1e-18 * a2;
    guard = 0;
    while p_of_mu(lo, a) <= 0.0 && guard < 200 {
        lo *= 0.5;
        guard += 1;
    }
    let tol = 1e-14 * a2;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if p_of_mu(mid, a) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Threshold { tau: 0.5 * (lo + hi), a }
}

/// Solves `r(y; mu) = 0` on the monotone pieces, recovers `x = mu a / (mu + y^2)`,
/// classifies each root, and orders them star, double-star, triple-star.
pub fn solve_stationary_points(mu: PenaltyWeight, m: &ModelParams) -> StationarySet {
    let a = m.a();
    let w = mu.get();
    let eq = RationalEq::r_shape(w, a);
    let ys = eq.roots(a / (a * a + 1.0));

    let branches: &[Branch] = match ys.len() {
        1 => &[Branch::Star],
        2 => &[Branch::Star, Branch::DoubleStar],
        _ => &[Branch::Star, Branch::DoubleStar, Branch::TripleStar],
    };
    let points = ys
        .iter()
        .zip(branches)
        .map(|(&y, &branch)| {
            let x = w * a / (w + y * y);
            let point = Point::new(x, y);
            let kind = classify_unchecked(point, mu, m);
            StationaryPoint { point, kind, branch, mu: w }
        })
        .collect();
    StationarySet { mu: w, points }
}

fn classify_unchecked(p: Point, mu: PenaltyWeight, m: &ModelParams) -> StationaryKind {
    let sm = crate::model::SecondMoment::population(m);
    let det = hessian(p, mu, &sm).det();
    if det.abs() <= 1e-12 {
        StationaryKind::Degenerate
    } else if det > 0.0 {
        StationaryKind::Minimum
    } else {
        StationaryKind::Saddle
    }
}

/// Classifies a stationary point by the sign of `det(Hessian)`; the trace is
/// always positive, so `det > 0` means a local minimum.
pub fn classify_stationary(
    p: Point,
    mu: PenaltyWeight,
    m: &ModelParams,
) -> Result<StationaryKind, StationaryError> {
    let sm = crate::model::SecondMoment::population(m);
    let gn = gradient_norm(p, mu, &sm);
    let tol = 1e-6 * (1.0 + mu.get() * m.a());
    if gn > tol {
        return Err(StationaryError::NotStationary { x: p.x, y: p.y, mu: mu.get(), grad_norm: gn });
    }
    Ok(classify_unchecked(p, mu, m))
}

/// Evaluates one of the perturbed stationary equations at `y_or_x`.
/// `beta` is only read by the beta forms, `eps` only by the eps forms.
pub fn eval_perturbed(
    y_or_x: f64,
    mu: PenaltyWeight,
    m: &ModelParams,
    eps: f64,
    which: PerturbedForm,
    beta: f64,
) -> Result<f64, StationaryError> {
    if !(y_or_x > 0.0) {
        return Err(StationaryError::NonPositiveArgument(y_or_x));
    }
    let (w, a) = (mu.get(), m.a());
    let eq = match which {
        PerturbedForm::REps | PerturbedForm::TEps | PerturbedForm::REpsMinus | PerturbedForm::TEpsMinus => {
            if !(eps.is_finite() && eps >= 0.0) {
                return Err(StationaryError::InvalidEps(eps));
            }
            match which {
                PerturbedForm::REps => RationalEq::r_eps(w, a, eps),
                PerturbedForm::TEps => RationalEq::t_eps(w, a, eps),
                PerturbedForm::REpsMinus => RationalEq::r_eps_minus(w, a, eps),
                PerturbedForm::TEpsMinus => RationalEq::t_eps_minus(w, a, eps),
                _ => unreachable!(),
            }
        }
        PerturbedForm::RBeta | PerturbedForm::TBeta => {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(StationaryError::InvalidBeta(beta));
            }
            match which {
                PerturbedForm::RBeta => RationalEq::r_beta(w, a, beta),
                _ => RationalEq::t_beta(w, a, beta),
            }
        }
    };
    Ok(eq.eval(y_or_x))
}

/// Solutions `(x, y)` of the eps-perturbed stationary system
/// `x = (mu a - eps)/(mu + y^2)`, `y = (mu a + eps)/(mu(a^2+1) + x^2)`,
/// ordered like the unperturbed branches (star = largest x first).
pub fn perturbed_system_points(mu: PenaltyWeight, m: &ModelParams, eps: f64) -> Vec<Point> {
    let (w, a) = (mu.get(), m.a());
    let eq = RationalEq::r_eps(w, a, eps);
    let ys = eq.roots(a / (a * a + 1.0));
    ys.iter()
        .map(|&y| Point::new((w * a - eps) / (w + y * y), y))
        .collect()
}

/// Tests membership of `p` in the analysis regions at the given `mu`, `eps`.
pub fn region_membership(p: Point, mu: PenaltyWeight, m: &ModelParams, eps: f64) -> RegionFlags {
    let (w, a) = (mu.get(), m.a());
    let in_a = (0.0..=a).contains(&p.x) && (0.0..=a / (a * a + 1.0)).contains(&p.y);

    let x_lo = (w * a - eps) / (w + p.y * p.y);
    let x_hi = (w * a + eps) / (w + p.y * p.y);
    let y_lo = (w * a - eps) / (p.x * p.x + w * (a * a + 1.0));
    let y_hi = (w * a + eps) / (p.x * p.x + w * (a * a + 1.0));
    let in_a_eps = (x_lo..=x_hi).contains(&p.x) && (y_lo..=y_hi).contains(&p.y);

    let eps_points = perturbed_system_points(mu, m, eps);
    let star = eps_points.first();
    let double_star = eps_points.get(1);
    let in_a1 = in_a_eps
        && star.is_some_and(|s| p.x >= s.x && p.y <= s.y);
    let in_a2 = in_a_eps
        && double_star.is_some_and(|d| p.x <= d.x && p.y >= d.y);

    let below_tau = w < critical_tau(m).tau;
    let (in_b_mu, in_b_mu_eps) = if below_tau {
        let set = solve_stationary_points(mu, m);
        let b_mu = set.double_star().map(|d| {
            p.x > d.point.x && p.x <= a && p.y >= 0.0 && p.y < d.point.y
        });
        let b_mu_eps = double_star.map(|d| {
            p.x > d.x && p.x <= a && p.y >= 0.0 && p.y < d.y
        });
        (b_mu, b_mu_eps)
    } else {
        (None, None)
    };

    RegionFlags { in_a, in_a_eps, in_a1, in_a2, in_b_mu, in_b_mu_eps }
}

/// Serializable stationary analysis at one `mu`, including `tau`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationaryReport {
    pub mu: f64,
    pub tau: f64,
    pub points: Vec<StationaryPointJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationaryPointJson {
    pub x: f64,
    pub y: f64,
    pub branch: Branch,
    pub kind: StationaryKind,
}

pub fn stationary_report(mu: PenaltyWeight, m: &ModelParams) -> StationaryReport {
    let tau = critical_tau(m).tau;
    let set = solve_stationary_points(mu, m);
    StationaryReport {
        mu: set.mu,
        tau,
        points: set
            .points
            .iter()
            .map(|sp| StationaryPointJson {
                x: sp.point.x,
                y: sp.point.y,
                branch: sp.branch,
                kind: sp.kind,
            })
            .collect(),
    }
}
