use cineforge_core::flow::{cfm_loss, cfm_target, euler_integrate, interpolate, FlatTensor};
use proptest::prelude::*;

fn tensor(n: usize) -> impl Strategy<Value = FlatTensor> {
    prop::collection::vec(-100.0..100.0f64, n).prop_map(|v| FlatTensor::from_vec(v).unwrap())
}

fn pair() -> impl Strategy<Value = (FlatTensor, FlatTensor)> {
    (1usize..64).prop_flat_map(|n| (tensor(n), tensor(n)))
}

/// Euler error of `dz/dt = -z` integrated from t=1 (z=1) to t=0, where the
/// exact answer is e.
fn euler_error(steps: usize) -> f64 {
    let v = |z: &FlatTensor, _t: f64| z.map(|x| -x);
    let z1 = FlatTensor::from_vec(vec![1.0]).unwrap();
    let z0 = euler_integrate(&v, &z1, 1.0, 0.0, steps).unwrap();
    (z0.values()[0] - std::f64::consts::E).abs()
}

#[test]
fn euler_converges_at_first_order() {
    for steps in [16usize, 64, 256, 1024] {
        let order = (euler_error(steps) / euler_error(2 * steps)).log2();
        assert!((0.9..=1.1).contains(&order), "order {order} at {steps} steps");
    }
}

#[test]
fn euler_error_shrinks_with_steps() {
    let errs: Vec<f64> = [1usize, 2, 4, 8, 16].iter().map(|&s| euler_error(s)).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    // one step: 1 + 1 = 2
    assert!((euler_error(1) - (std::f64::consts::E - 2.0)).abs() < 1e-15);
}

proptest! {
    #[test]
    fn interpolation_endpoints_are_exact((z0, eps) in pair()) {
        prop_assert_eq!(interpolate(&z0, &eps, 0.0).unwrap(), z0.clone());
        prop_assert_eq!(interpolate(&z0, &eps, 1.0).unwrap(), eps);
    }

    #[test]
    fn interpolation_is_affine_in_t((z0, eps) in pair(), t in 0.0..=1.0f64) {
        let zt = interpolate(&z0, &eps, t).unwrap();
        for ((a, b), z) in z0.values().iter().zip(eps.values()).zip(zt.values()) {
            prop_assert!((z - (a + t * (b - a))).abs() <= 1e-12 * (1.0 + a.abs() + b.abs()));
        }
    }

    #[test]
    fn straight_path_is_recovered_in_one_step((z0, eps) in pair()) {
        let target = cfm_target(&z0, &eps).unwrap();
        let v = |_: &FlatTensor, _: f64| target.clone();
        let back = euler_integrate(&v, &eps, 1.0, 0.0, 1).unwrap();
        // two roundings, each relative to the largest operand
        for ((a, b), e) in back.values().iter().zip(z0.values()).zip(eps.values()) {
            let scale = b.abs() + 2.0 * e.abs();
            prop_assert!((a - b).abs() <= 2.0 * f64::EPSILON * scale, "{a} vs {b}");
        }
        prop_assert_eq!(cfm_loss(&target, &z0, &eps).unwrap(), 0.0);
    }

    #[test]
    fn loss_is_non_negative((z0, eps) in pair(), p in -10.0..10.0f64) {
        let pred = z0.map(|x| x * p);
        prop_assert!(cfm_loss(&pred, &z0, &eps).unwrap() >= 0.0);
    }
}

#[test]
fn shape_and_schedule_errors() {
    let a = FlatTensor::from_vec(vec![1.0, 2.0]).unwrap();
    let b = FlatTensor::from_vec(vec![1.0]).unwrap();
    assert!(interpolate(&a, &b, 0.5).is_err());
    assert!(interpolate(&a, &a, 1.5).is_err());
    let v = |z: &FlatTensor, _: f64| z.clone();
    assert!(euler_integrate(&v, &a, 1.0, 0.0, 0).is_err());
    assert!(euler_integrate(&v, &a, 0.0, 1.0, 4).is_err());
}
