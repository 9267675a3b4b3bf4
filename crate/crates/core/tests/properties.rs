//! Property tests for the algebraic identities the rest of the crate
//! leans on.

use dagho_core::numfmt::fmt17;
use dagho_core::{
    acyclicity_penalty, enumeration_oracle, gradient, loss_from_moments, penalized_objective,
    solve_stationary_points, ModelParams, PenaltyWeight, Point, SecondMoment,
};
use proptest::prelude::*;

fn finite_range(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL.prop_map(move |v| lo + (hi - lo) * (v.abs() % 1.0))
}

proptest! {
    #[test]
    fn objective_is_exactly_mu_f_plus_h(
        a in finite_range(0.05, 5.0),
        x in finite_range(-10.0, 10.0),
        y in finite_range(-10.0, 10.0),
        w in finite_range(1e-8, 10.0),
    ) {
        let m = ModelParams::new(a).unwrap();
        let sm = SecondMoment::population(&m);
        let p = Point::new(x, y);
        let mu = PenaltyWeight::new(w).unwrap();
        let g = penalized_objective(p, mu, &sm);
        prop_assert_eq!(g, w * loss_from_moments(p, &sm) + acyclicity_penalty(p));
        prop_assert!(acyclicity_penalty(p) >= 0.0);
    }

    #[test]
    fn penalty_vanishes_exactly_on_axes(
        v in finite_range(-10.0, 10.0),
        u in finite_range(1e-6, 10.0),
    ) {
        prop_assert_eq!(acyclicity_penalty(Point::new(v, 0.0)), 0.0);
        prop_assert_eq!(acyclicity_penalty(Point::new(0.0, v)), 0.0);
        prop_assert!(acyclicity_penalty(Point::new(u, u)) > 0.0);
    }

    #[test]
    fn gradient_agrees_with_finite_differences(
        a in finite_range(0.1, 3.0),
        x in finite_range(-5.0, 5.0),
        y in finite_range(-5.0, 5.0),
        w in finite_range(0.01, 2.0),
    ) {
        let m = ModelParams::new(a).unwrap();
        let sm = SecondMoment::population(&m);
        let p = Point::new(x, y);
        let mu = PenaltyWeight::new(w).unwrap();
        let (gx, gy) = gradient(p, mu, &sm);
        let h = 1e-5;
        let fdx = (penalized_objective(Point::new(x + h, y), mu, &sm)
            - penalized_objective(Point::new(x - h, y), mu, &sm)) / (2.0 * h);
        let fdy = (penalized_objective(Point::new(x, y + h), mu, &sm)
            - penalized_objective(Point::new(x, y - h), mu, &sm)) / (2.0 * h);
        let err = (gx - fdx).hypot(gy - fdy);
        prop_assert!(err <= 1e-6 * gx.hypot(gy).max(1.0), "err = {err}");
    }

    #[test]
    fn stationary_roots_satisfy_the_coupled_system(
        a in finite_range(0.2, 4.0),
        frac in finite_range(1e-4, 4.0),
    ) {
        let m = ModelParams::new(a).unwrap();
        let w = frac * a * a / 4.0;
        let mu = PenaltyWeight::new(w).unwrap();
        let set = solve_stationary_points(mu, &m);
        prop_assert!(!set.points.is_empty() && set.points.len() <= 3);
        for sp in &set.points {
            let (x, y) = (sp.point.x, sp.point.y);
            prop_assert!((x - w * a / (w + y * y)).abs() <= 1e-9 * (1.0 + a));
            prop_assert!((y - w * a / (w * (a * a + 1.0) + x * x)).abs() <= 1e-9 * (1.0 + a));
        }
    }

    #[test]
    fn enumeration_winner_is_the_x_edge_for_population(
        a in finite_range(0.05, 10.0),
    ) {
        let m = ModelParams::new(a).unwrap();
        let sm = SecondMoment::population(&m);
        let (p, score) = enumeration_oracle(&sm);
        prop_assert_eq!(p.y, 0.0);
        prop_assert!((p.x - a).abs() <= 1e-12 * a.max(1.0));
        prop_assert!((score - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn fmt17_round_trips_and_stays_decimal(
        v in prop::num::f64::NORMAL.prop_map(|v| v % 1e18),
    ) {
        let s = fmt17(v);
        prop_assert!(!s.contains('e') && !s.contains('E'));
        let back: f64 = s.parse().unwrap();
        prop_assert_eq!(back, v);
    }
}
