use lambda1_core::geometry::{reflect_point, Direction, ShapeSpec};
use lambda1_core::moving_plane::{PlaneSweep, SweepSettings};
use proptest::prelude::*;
use std::sync::OnceLock;

fn ellipse() -> &'static PlaneSweep {
    static S: OnceLock<PlaneSweep> = OnceLock::new();
    S.get_or_init(|| {
        let d = ShapeSpec::Ellipse { a: 2.0, b: 1.0 }.build().unwrap();
        PlaneSweep::new(&d, &SweepSettings::default()).unwrap()
    })
}

fn stadium() -> &'static PlaneSweep {
    static S: OnceLock<PlaneSweep> = OnceLock::new();
    S.get_or_init(|| {
        let d = ShapeSpec::Stadium {
            length: 2.0,
            r: 1.0,
        }
        .build()
        .unwrap();
        PlaneSweep::new(&d, &SweepSettings::default()).unwrap()
    })
}

fn norm3(x: &[f64; 3]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

proptest! {
    #[test]
    fn reflection_is_an_involution(
        x in prop::array::uniform3(-10.0..10.0f64),
        n in prop::array::uniform3(-1.0..1.0f64),
        lambda in -10.0..10.0f64,
    ) {
        prop_assume!(norm3(&n) > 1e-3);
        let nu = Direction::new(n).unwrap();
        let back = reflect_point(&reflect_point(&x, &nu, lambda), &nu, lambda);
        let scale = 1.0 + norm3(&x) + lambda.abs();
        for i in 0..3 {
            prop_assert!((back[i] - x[i]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn reflection_preserves_distances(
        x in prop::array::uniform2(-10.0..10.0f64),
        y in prop::array::uniform2(-10.0..10.0f64),
        theta in 0.0..std::f64::consts::TAU,
        lambda in -10.0..10.0f64,
    ) {
        let nu = Direction::from_angle(theta);
        let (rx, ry) = (reflect_point(&x, &nu, lambda), reflect_point(&y, &nu, lambda));
        let d0 = (x[0] - y[0]).hypot(x[1] - y[1]);
        let d1 = (rx[0] - ry[0]).hypot(rx[1] - ry[1]);
        prop_assert!((d0 - d1).abs() <= 1e-12 * (1.0 + d0 + lambda.abs()));
        // Points on the plane stay fixed.
        let on = [lambda * nu.components()[0], lambda * nu.components()[1]];
        let r = reflect_point(&on, &nu, lambda);
        prop_assert!((r[0] - on[0]).abs() <= 1e-12 * (1.0 + lambda.abs()));
    }

    #[test]
    fn support_is_lipschitz_in_the_direction(t in 0.0..std::f64::consts::TAU, s in 0.0..std::f64::consts::TAU) {
        for sweep in [ellipse(), stadium()] {
            let (nu, mu) = (Direction::from_angle(t), Direction::from_angle(s));
            let (a, b) = (sweep.support_min(&nu).unwrap(), sweep.support_min(&mu).unwrap());
            let dist = (nu.components()[0] - mu.components()[0]).hypot(nu.components()[1] - mu.components()[1]);
            let tol = sweep.tolerances().tol_a;
            prop_assert!((a - b).abs() <= sweep.domain().r_max() * dist + 2.0 * tol);
        }
    }

    #[test]
    fn support_bounds_the_boundary(t in 0.0..std::f64::consts::TAU) {
        let sweep = ellipse();
        let nu = Direction::from_angle(t);
        let a = sweep.support_min(&nu).unwrap();
        let tol = sweep.tolerances().tol_a;
        for s in sweep.boundary().samples() {
            prop_assert!(nu.dot(&s.point) >= a - tol);
        }
        let exact = -((2.0 * nu.components()[0]).powi(2) + nu.components()[1].powi(2)).sqrt();
        prop_assert!((a - exact).abs() <= tol);
    }

    #[test]
    fn slab_is_nonempty_and_contains_lambda1(t in 0.0..std::f64::consts::TAU) {
        let sweep = stadium();
        let nu = Direction::from_angle(t);
        let (a, b) = sweep.slab(&nu).unwrap();
        prop_assert!(a < b);
        let r = sweep.compute_lambda1(&nu).unwrap();
        prop_assert!(r.lambda1 > a && r.lambda1 < b);
        prop_assert!(r.bracket[1] - r.bracket[0] <= sweep.tolerances().tol_lambda * (1.0 + 1e-9));
    }
}
