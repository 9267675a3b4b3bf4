//! Bivariate linear SEM model: score function, acyclicity penalty, penalized
//! objective and derivatives, synthetic data, and the two-DAG enumeration
//! oracle.
//!
//! The model has two nodes with adjacency matrix `W(x, y) = [[0, x], [y, 0]]`
//! and ground truth `[[0, a], [0, 0]]` with `a > 0`. The score is the
//! least-squares loss evaluated through the second-moment matrix of the data,
//! so population and empirical losses share one code path.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("edge weight a must be positive and finite, got {0}")]
    InvalidEdgeWeight(f64),
    #[error("penalty weight mu must be positive and finite, got {0}")]
    InvalidPenaltyWeight(f64),
    #[error("second-moment matrix must be PSD: s11={s11}, s12={s12}, s22={s22}")]
    InvalidMoments { s11: f64, s12: f64, s22: f64 },
    #[error("sample count must be at least 2, got {0}")]
    SampleCountTooSmall(usize),
}

/// Errors from parsing `x1,x2` CSV data.
#[derive(Debug, Error, PartialEq)]
pub enum DatasetCsvError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("need at least 2 samples, found {0}")]
    TooFewRows(usize),
}

/// Ground-truth coefficient `a` of the edge `X1 -> X2`, with `a > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    a: f64,
}

impl ModelParams {
    pub fn new(a: f64) -> Result<Self, ModelError> {
        if !(a.is_finite() && a > 0.0) {
            return Err(ModelError::InvalidEdgeWeight(a));
        }
        Ok(Self { a })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Global minimizer `(a, 0)` of the constrained problem.
    pub fn global_optimum(&self) -> Point {
        Point::new(self.a, 0.0)
    }

    /// Limit `(0, a/(a^2+1))` of the spurious stationary branch.
    pub fn spurious_limit(&self) -> Point {
        Point::new(0.0, self.a / (self.a * self.a + 1.0))
    }
}

/// Candidate parameter pair `(x, y)`, i.e. the adjacency matrix `W(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Positive penalty weight `mu` multiplying the score in `g_mu = mu*f + h`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PenaltyWeight(f64);

impl PenaltyWeight {
    pub fn new(mu: f64) -> Result<Self, ModelError> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(ModelError::InvalidPenaltyWeight(mu));
        }
        Ok(Self(mu))
    }

    pub fn get(&self) -> f64 {
        self.0
    }
}

/// Where a second-moment matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentOrigin {
    Population { a: f64 },
    Empirical { n: usize },
}

/// Second-moment matrix of `X = (X1, X2)`: `s11 = E[X1^2]`, `s12 = E[X1 X2]`,
/// `s22 = E[X2^2]`. Sufficient statistic for the least-squares score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondMoment {
    s11: f64,
    s12: f64,
    s22: f64,
    origin: MomentOrigin,
}

impl SecondMoment {
    /// Population moments `(1, a, a^2+1)` implied by `X1 = N1`,
    /// `X2 = a X1 + N2` with `Cov[N] = I`.
    pub fn population(m: &ModelParams) -> Self {
        let a = m.a();
        Self {
            s11: 1.0,
            s12: a,
            s22: a * a + 1.0,
            origin: MomentOrigin::Population { a },
        }
    }

    pub fn empirical(s11: f64, s12: f64, s22: f64, n: usize) -> Result<Self, ModelError> {
        let det = s11 * s22 - s12 * s12;
        let tol = 1e-12 * (s11 * s22).abs().max(1.0);
        if !(s11.is_finite() && s12.is_finite() && s22.is_finite())
            || s11 < 0.0
            || s22 < 0.0
            || det < -tol
        {
            return Err(ModelError::InvalidMoments { s11, s12, s22 });
        }
        Ok(Self {
            s11,
            s12,
            s22,
            origin: MomentOrigin::Empirical { n },
        })
    }

    /// Uncentered moments in one pass. The model already has `E[N] = 0`, so
    /// the mean is not subtracted.
    pub fn from_rows(rows: &[(f64, f64)]) -> Self {
        let n = rows.len().max(1) as f64;
        let (mut s11, mut s12, mut s22) = (0.0, 0.0, 0.0);
        for &(x1, x2) in rows {
            s11 += x1 * x1;
            s12 += x1 * x2;
            s22 += x2 * x2;
        }
        Self {
            s11: s11 / n,
            s12: s12 / n,
            s22: s22 / n,
            origin: MomentOrigin::Empirical { n: rows.len() },
        }
    }

    pub fn from_dataset(ds: &Dataset) -> Self {
        Self::from_rows(&ds.rows)
    }

    pub fn s11(&self) -> f64 {
        self.s11
    }
    pub fn s12(&self) -> f64 {
        self.s12
    }
    pub fn s22(&self) -> f64 {
        self.s22
    }
    pub fn origin(&self) -> MomentOrigin {
        self.origin
    }

    /// Least-squares score `f(x, y) = Tr((I-W)(I-W)^T Sigma) / 2` expanded
    /// for `W(x, y)`.
    pub fn loss(&self, p: Point) -> f64 {
        0.5 * (self.s11 * (1.0 + p.x * p.x) + self.s22 * (1.0 + p.y * p.y)
            - 2.0 * self.s12 * (p.x + p.y))
    }

    /// Gradient of the score: `(s11*x - s12, s22*y - s12)`.
    pub fn loss_gradient(&self, p: Point) -> (f64, f64) {
        (self.s11 * p.x - self.s12, self.s22 * p.y - self.s12)
    }
}

/// Noise distribution for the SEM errors; both have mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    /// Uniform on `[-sqrt(3), sqrt(3)]`.
    UniformRescaled,
}

/// Synthetic sample of the SEM, reproducible from the stored seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Vec<(f64, f64)>,
    pub seed: u64,
    pub noise_kind: NoiseKind,
}

impl Dataset {
    /// Writes the samples as `x1,x2` CSV, one row per sample, LF endings.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        use crate::numfmt::fmt17;
        w.write_all(b"x1,x2\n")?;
        for &(x1, x2) in &self.rows {
            writeln!(w, "{},{}", fmt17(x1), fmt17(x2))?;
        }
        Ok(())
    }
}

/// Parses `x1,x2` CSV text back into sample rows, validating the header and
/// reporting the first malformed line. Blank lines are skipped.
pub fn read_rows_csv(text: &str) -> Result<Vec<(f64, f64)>, DatasetCsvError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "x1,x2" => {}
        Some((_, header)) => {
            return Err(DatasetCsvError::Malformed {
                line: 1,
                msg: format!("expected header 'x1,x2', got '{header}'"),
            })
        }
        None => {
            return Err(DatasetCsvError::Malformed { line: 1, msg: "empty file".into() })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (s1, s2) = line.split_once(',').ok_or_else(|| DatasetCsvError::Malformed {
            line: lineno,
            msg: "expected two comma-separated values".into(),
        })?;
        let parse = |s: &str| -> Result<f64, DatasetCsvError> {
            s.trim().parse().map_err(|_| DatasetCsvError::Malformed {
                line: lineno,
                msg: format!("invalid number '{s}'"),
            })
        };
        rows.push((parse(s1)?, parse(s2)?));
    }
    if rows.len() < 2 {
        return Err(DatasetCsvError::TooFewRows(rows.len()));
    }
    Ok(rows)
}

/// Symmetric 2x2 Hessian of the penalized objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hessian {
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl Hessian {
    pub fn det(&self) -> f64 {
        self.dxx * self.dyy - self.dxy * self.dxy
    }

    pub fn trace(&self) -> f64 {
        self.dxx + self.dyy
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        let mid = 0.5 * (self.dxx + self.dyy);
        let rad = (0.25 * (self.dxx - self.dyy) * (self.dxx - self.dyy)
            + self.dxy * self.dxy)
            .sqrt();
        (mid - rad, mid + rad)
    }

    pub fn spectral_norm(&self) -> f64 {
        let (lo, hi) = self.eigenvalues();
        lo.abs().max(hi.abs())
    }
}

/// Objective interface used by the inner solvers.
pub trait Objective {
    /// Full objective value at `p`.
    fn value(&self, p: Point) -> f64;
    /// Gradient of the objective at `p`.
    fn gradient(&self, p: Point) -> (f64, f64);
    /// Score component, for trajectory logging.
    fn loss_term(&self, p: Point) -> f64 {
        self.value(p)
    }
    /// Penalty component, for trajectory logging.
    fn penalty_term(&self, _p: Point) -> f64 {
        0.0
    }
}

/// The penalized objective `g_mu(x, y) = mu * f(x, y) + x^2 y^2 / 2`.
#[derive(Debug, Clone, Copy)]
pub struct PenalizedObjective {
    mu: PenaltyWeight,
    moments: SecondMoment,
}

impl PenalizedObjective {
    pub fn new(mu: PenaltyWeight, moments: SecondMoment) -> Self {
        Self { mu, moments }
    }

    pub fn mu(&self) -> f64 {
        self.mu.get()
    }

    pub fn moments(&self) -> &SecondMoment {
        &self.moments
    }

    pub fn hessian(&self, p: Point) -> Hessian {
        let mu = self.mu.get();
        Hessian {
            dxx: mu * self.moments.s11 + p.y * p.y,
            dxy: 2.0 * p.x * p.y,
            dyy: mu * self.moments.s22 + p.x * p.x,
        }
    }
}

impl Objective for PenalizedObjective {
    fn value(&self, p: Point) -> f64 {
        self.mu.get() * self.moments.loss(p) + acyclicity_penalty(p)
    }

    fn gradient(&self, p: Point) -> (f64, f64) {
        let (fx, fy) = self.moments.loss_gradient(p);
        let mu = self.mu.get();
        (mu * fx + p.y * p.y * p.x, mu * fy + p.x * p.x * p.y)
    }

    fn loss_term(&self, p: Point) -> f64 {
        self.moments.loss(p)
    }

    fn penalty_term(&self, p: Point) -> f64 {
        acyclicity_penalty(p)
    }
}

/// Population score `f(x, y) = ((1-ay)^2 + y^2 + (a-x)^2 + 1) / 2`.
///
/// Written out directly rather than through moments, so the two routes can
/// be checked against each other.
pub fn population_loss(p: Point, m: &ModelParams) -> f64 {
    let a = m.a();
    let u = 1.0 - a * p.y;
    let v = a - p.x;
    0.5 * (u * u + p.y * p.y + v * v + 1.0)
}

/// Score evaluated through a second-moment matrix.
pub fn loss_from_moments(p: Point, sm: &SecondMoment) -> f64 {
    sm.loss(p)
}

/// Acyclicity penalty `h(x, y) = x^2 y^2 / 2`; zero exactly on DAGs.
pub fn acyclicity_penalty(p: Point) -> f64 {
    0.5 * p.x * p.x * p.y * p.y
}

/// `g_mu(p) = mu * f(p) + h(p)`.
pub fn penalized_objective(p: Point, mu: PenaltyWeight, sm: &SecondMoment) -> f64 {
    PenalizedObjective::new(mu, *sm).value(p)
}

/// Gradient of `g_mu`; population case `(mu(x-a) + y^2 x, mu(a^2+1)y - a mu + y x^2)`.
pub fn gradient(p: Point, mu: PenaltyWeight, sm: &SecondMoment) -> (f64, f64) {
    PenalizedObjective::new(mu, *sm).gradient(p)
}

pub fn gradient_norm(p: Point, mu: PenaltyWeight, sm: &SecondMoment) -> f64 {
    let (gx, gy) = gradient(p, mu, sm);
    gx.hypot(gy)
}

/// Hessian of `g_mu`; population case `[[mu + y^2, 2xy], [2xy, mu(a^2+1) + x^2]]`.
pub fn hessian(p: Point, mu: PenaltyWeight, sm: &SecondMoment) -> Hessian {
    PenalizedObjective::new(mu, *sm).hessian(p)
}

/// Smoothness constant `mu (a^2+1) + 3 a^2` of `g_mu` on the region
/// `A = [0, a] x [0, a/(a^2+1)]`. Valid for any `mu >= 0`.
pub fn smoothness_bound(mu: f64, m: &ModelParams) -> f64 {
    assert!(mu.is_finite() && mu >= 0.0, "mu must be finite and >= 0");
    let a2 = m.a() * m.a();
    mu * (a2 + 1.0) + 3.0 * a2
}

/// Draws `n` i.i.d. samples of the SEM `X1 = N1`, `X2 = a X1 + N2`.
/// Deterministic for a fixed seed.
pub fn sample_sem(
    m: &ModelParams,
    n: usize,
    noise_kind: NoiseKind,
    seed: u64,
) -> Result<Dataset, ModelError> {
    use rand::{Rng, SeedableRng};

    if n < 2 {
        return Err(ModelError::SampleCountTooSmall(n));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let a = m.a();
    let mut rows = Vec::with_capacity(n);
    let sqrt3 = 3f64.sqrt();
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
        match noise_kind {
            NoiseKind::Gaussian => rng.sample(rand_distr::StandardNormal),
            NoiseKind::UniformRescaled => rng.random_range(-sqrt3..sqrt3),
        }
    };
    for _ in 0..n {
        let n1 = draw(&mut rng);
        let n2 = draw(&mut rng);
        let x1 = n1;
        let x2 = a * x1 + n2;
        rows.push((x1, x2));
    }
    Ok(Dataset {
        rows,
        seed,
        noise_kind,
    })
}

/// Fits the score under each of the two possible DAGs (`y = 0` and `x = 0`)
/// in closed form and returns the winner with its score.
///
/// This is the brute-force alternative to the homotopy path: with two nodes
/// there are only two DAGs to compare.
pub fn enumeration_oracle(sm: &SecondMoment) -> (Point, f64) {
    // On {y = 0}: f(x, 0) = (s11(1+x^2) + s22 - 2 s12 x)/2, minimized at x = s12/s11.
    let x_hat = if sm.s11 > 0.0 { sm.s12 / sm.s11 } else { 0.0 };
    let score_y0 = sm.loss(Point::new(x_hat, 0.0));
    // On {x = 0}: minimized at y = s12/s22.
    let y_hat = if sm.s22 > 0.0 { sm.s12 / sm.s22 } else { 0.0 };
    let score_x0 = sm.loss(Point::new(0.0, y_hat));
    if score_y0 <= score_x0 {
        (Point::new(x_hat, 0.0), score_y0)
    } else {
        (Point::new(0.0, y_hat), score_x0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mu(v: f64) -> PenaltyWeight {
        PenaltyWeight::new(v).unwrap()
    }

    fn params(a: f64) -> ModelParams {
        ModelParams::new(a).unwrap()
    }

    #[test]
    fn population_loss_values() {
        let m = params(1.0);
        assert_eq!(population_loss(Point::new(1.0, 0.0), &m), 1.0);
        assert_eq!(population_loss(Point::new(0.0, 0.0), &m), 1.5);
        assert_eq!(population_loss(Point::new(0.0, 0.5), &m), 1.25);
    }

    #[test]
    fn loss_from_moments_matches_population() {
        for &a in &[0.3, 0.5, 1.0, 2.0, 5.0] {
            let m = params(a);
            let sm = SecondMoment::population(&m);
            for &(x, y) in &[
                (a, 0.0),
                (0.0, 0.0),
                (0.0, 0.5),
                (-1.3, 2.2),
                (0.7, -0.1),
                (2.0 * a, -2.0 * a),
            ] {
                let p = Point::new(x, y);
                assert!(
                    (loss_from_moments(p, &sm) - population_loss(p, &m)).abs() <= 1e-12,
                    "mismatch at a={a}, p=({x}, {y})"
                );
            }
        }
        let sm2 = SecondMoment::population(&params(2.0));
        assert!((loss_from_moments(Point::new(0.0, 0.0), &sm2) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn penalty_values() {
        assert_eq!(acyclicity_penalty(Point::new(1.0, 0.0)), 0.0);
        assert_eq!(acyclicity_penalty(Point::new(1.0, 1.0)), 0.5);
        assert_eq!(acyclicity_penalty(Point::new(2.0, 3.0)), 18.0);
    }

    #[test]
    fn objective_is_mu_f_plus_h() {
        let m = params(1.0);
        let sm = SecondMoment::population(&m);
        assert!((penalized_objective(Point::new(1.0, 1.0), mu(1e-300), &sm) - 0.5).abs() < 1e-12);
        let g = penalized_objective(Point::new(0.0, 0.0), mu(0.01), &sm);
        assert!((g - 0.015).abs() < 1e-15);
        // exact identity at assorted points
        for &(x, y, w) in &[(0.3, -0.7, 0.2), (1.5, 2.5, 0.05), (-2.0, 2.0, 1.3)] {
            let p = Point::new(x, y);
            let lhs = penalized_objective(p, mu(w), &sm);
            let rhs = w * loss_from_moments(p, &sm) + acyclicity_penalty(p);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn gradient_values() {
        let m = params(1.0);
        let sm = SecondMoment::population(&m);
        let (gx, gy) = gradient(Point::new(1.0, 0.0), mu(0.1), &sm);
        assert!((gx - 0.0).abs() < 1e-15 && (gy + 0.1).abs() < 1e-15);
        let (gx, gy) = gradient(Point::new(0.0, 0.0), mu(0.1), &sm);
        assert!((gx + 0.1).abs() < 1e-15 && (gy + 0.1).abs() < 1e-15);
    }

    #[test]
    fn hessian_values() {
        let m = params(1.0);
        let sm = SecondMoment::population(&m);
        let h = hessian(Point::new(1.0, 1.0), mu(0.1), &sm);
        assert!((h.dxx - 1.1).abs() < 1e-15);
        assert!((h.dxy - 2.0).abs() < 1e-15);
        assert!((h.dyy - 1.2).abs() < 1e-15);
        assert!((h.det() + 2.68).abs() < 1e-12);
        let h0 = hessian(Point::new(0.0, 0.0), mu(0.5), &sm);
        assert_eq!((h0.dxx, h0.dxy, h0.dyy), (0.5, 0.0, 1.0));
        assert!(h.trace() > 0.0 && h0.trace() > 0.0);
    }

    fn fd_gradient(p: Point, w: PenaltyWeight, sm: &SecondMoment, h: f64) -> (f64, f64) {
        let gx = (penalized_objective(Point::new(p.x + h, p.y), w, sm)
            - penalized_objective(Point::new(p.x - h, p.y), w, sm))
            / (2.0 * h);
        let gy = (penalized_objective(Point::new(p.x, p.y + h), w, sm)
            - penalized_objective(Point::new(p.x, p.y - h), w, sm))
            / (2.0 * h);
        (gx, gy)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for &a in &[0.5, 1.0, 2.0] {
            let m = params(a);
            let sm = SecondMoment::population(&m);
            for _ in 0..100 {
                let p = Point::new(
                    rng.random_range(-2.0 * a..2.0 * a),
                    rng.random_range(-2.0 * a..2.0 * a),
                );
                let w = mu(rng.random_range(0.01..1.0));
                let (gx, gy) = gradient(p, w, &sm);
                let (fx, fy) = fd_gradient(p, w, &sm, 1e-5);
                let err = (gx - fx).hypot(gy - fy);
                let scale = gx.hypot(gy).max(1.0);
                assert!(err <= 1e-6 * scale, "a={a}, p={p:?}: err={err}");
            }
        }
    }

    #[test]
    fn smoothness_values_and_grid_bound() {
        let m = params(1.0);
        assert!((smoothness_bound(0.05, &m) - 3.1).abs() < 1e-15);
        assert!((smoothness_bound(0.0, &params(2.0)) - 12.0).abs() < 1e-15);

        // sampled sup of the Hessian spectral norm over region A stays under the bound
        for &a in &[0.5, 1.0, 2.0] {
            let m = params(a);
            let sm = SecondMoment::population(&m);
            for &w in &[0.01, 0.3] {
                let bound = smoothness_bound(w, &m);
                let y_top = a / (a * a + 1.0);
                let mut sup: f64 = 0.0;
                for i in 0..100 {
                    for j in 0..100 {
                        let p = Point::new(
                            a * (i as f64) / 99.0,
                            y_top * (j as f64) / 99.0,
                        );
                        sup = sup.max(hessian(p, mu(w), &sm).spectral_norm());
                    }
                }
                assert!(sup <= bound + 1e-12, "a={a}, mu={w}: sup={sup} > {bound}");
            }
        }
    }

    #[test]
    fn invalid_constructions() {
        assert!(ModelParams::new(0.0).is_err());
        assert!(ModelParams::new(-1.0).is_err());
        assert!(ModelParams::new(f64::NAN).is_err());
        assert!(PenaltyWeight::new(0.0).is_err());
        assert!(PenaltyWeight::new(f64::INFINITY).is_err());
        assert!(SecondMoment::empirical(1.0, 2.0, 1.0, 10).is_err());
        assert_eq!(
            sample_sem(&params(1.0), 1, NoiseKind::Gaussian, 0),
            Err(ModelError::SampleCountTooSmall(1))
        );
    }

    #[test]
    fn sem_sampling_is_deterministic_and_unit_scale() {
        let m = params(1.0);
        let d1 = sample_sem(&m, 100_000, NoiseKind::Gaussian, 7).unwrap();
        let d2 = sample_sem(&m, 100_000, NoiseKind::Gaussian, 7).unwrap();
        assert_eq!(d1, d2);
        let sm = SecondMoment::from_dataset(&d1);
        let ratio = sm.s12() / sm.s11();
        assert!((0.98..=1.02).contains(&ratio), "s12/s11 = {ratio}");
        // uniform noise has the same first two moments
        let du = sample_sem(&m, 100_000, NoiseKind::UniformRescaled, 7).unwrap();
        let smu = SecondMoment::from_dataset(&du);
        assert!((smu.s11() - 1.0).abs() < 0.02, "s11 = {}", smu.s11());
        assert!((smu.s22() - 2.0).abs() < 0.04, "s22 = {}", smu.s22());
    }

    #[test]
    fn empirical_loss_near_population_at_optimum() {
        let m = params(1.0);
        let d = sample_sem(&m, 100_000, NoiseKind::Gaussian, 7).unwrap();
        let sm = SecondMoment::from_dataset(&d);
        let v = loss_from_moments(Point::new(1.0, 0.0), &sm);
        assert!((v - 1.0).abs() <= 0.02, "empirical loss at (1,0): {v}");
    }

    #[test]
    fn population_loss_at_least_one_on_dags() {
        // f >= 1 holds on the feasible set h = 0 (either axis), with
        // equality exactly at (a, 0); off the axes f can dip below 1
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for &a in &[0.2, 1.0, 4.0] {
            let m = params(a);
            for _ in 0..500 {
                let v = rng.random_range(-2.0 * a..2.0 * a);
                let on_x = population_loss(Point::new(v, 0.0), &m);
                let on_y = population_loss(Point::new(0.0, v), &m);
                assert!(on_x >= 1.0 - 1e-15 && on_y >= 1.0 - 1e-15);
                if (v - a).abs() > 1e-6 {
                    assert!(on_x > 1.0);
                }
            }
            assert!((population_loss(m.global_optimum(), &m) - 1.0).abs() < 1e-15);
            let unconstrained_min = Point::new(a, a / (a * a + 1.0));
            assert!(population_loss(unconstrained_min, &m) < 1.0);
        }
    }

    #[test]
    fn enumeration_oracle_population() {
        // independent check: dense grid + refinement on each axis
        let brute = |sm: &SecondMoment, lo: f64, hi: f64, on_x_axis: bool| -> (f64, f64) {
            let mut best = (f64::INFINITY, 0.0);
            let n = 20_000;
            for i in 0..=n {
                let v = lo + (hi - lo) * (i as f64) / (n as f64);
                let p = if on_x_axis {
                    Point::new(v, 0.0)
                } else {
                    Point::new(0.0, v)
                };
                let s = loss_from_moments(p, sm);
                if s < best.0 {
                    best = (s, v);
                }
            }
            best
        };

        let mut a = 0.05f64;
        while a <= 10.0 {
            let m = params(a);
            let sm = SecondMoment::population(&m);
            let (p, score) = enumeration_oracle(&sm);
            assert!(p.y == 0.0, "winner must be the x-edge at a={a}");
            assert!((p.x - a).abs() <= 1e-12 * a.max(1.0));
            let (bs, bx) = brute(&sm, 0.0, 2.0 * a, true);
            assert!((bx - p.x).abs() <= 2.0 * 2.0 * a / 20_000.0);
            assert!(score <= bs + 1e-9);
            a *= 1.45;
        }

        let m1 = params(1.0);
        let (p1, s1) = enumeration_oracle(&SecondMoment::population(&m1));
        assert!((s1 - 1.0).abs() < 1e-12 && (p1.x - 1.0).abs() < 1e-12);
        let loser = loss_from_moments(
            Point::new(0.0, 0.5),
            &SecondMoment::population(&m1),
        );
        assert!((loser - 1.25).abs() < 1e-12);

        let (p2, s2) = enumeration_oracle(&SecondMoment::population(&params(2.0)));
        assert!((p2.x - 2.0).abs() < 1e-12 && (s2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dataset_csv_round_trip_and_errors() {
        let m = params(0.8);
        let ds = sample_sem(&m, 50, NoiseKind::Gaussian, 9).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x1,x2\n"));
        let rows = read_rows_csv(&text).unwrap();
        assert_eq!(rows, ds.rows);

        assert_eq!(
            read_rows_csv("a,b\n1,2\n"),
            Err(DatasetCsvError::Malformed { line: 1, msg: "expected header 'x1,x2', got 'a,b'".into() })
        );
        assert!(matches!(
            read_rows_csv("x1,x2\n1,2\n3,zz\n"),
            Err(DatasetCsvError::Malformed { line: 3, .. })
        ));
        assert_eq!(read_rows_csv("x1,x2\n1,2\n"), Err(DatasetCsvError::TooFewRows(1)));
    }

    #[test]
    fn enumeration_oracle_empirical() {
        let m = params(0.5);
        let d = sample_sem(&m, 10_000, NoiseKind::Gaussian, 99).unwrap();
        let sm = SecondMoment::from_dataset(&d);
        let (p, _) = enumeration_oracle(&sm);
        assert!(p.y == 0.0, "structure must match the x-edge");
        assert!((p.x - 0.5).abs() <= 0.05, "x = {}", p.x);
    }
}
