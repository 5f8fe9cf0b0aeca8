mod support;

use cineforge_core::geometry::{Box3, Vec3};
use cineforge_core::obb::{fit_min_volume_obb, fit_min_volume_obb_with, fit_obb_pca, ObbOptions, PointCloud};
use cineforge_core::par::Exec;
use proptest::prelude::*;

fn contains_all(b: &Box3, pts: &[Vec3]) -> bool {
    let tol = 1e-9 * (1.0 + b.center.max_abs() + b.half_extents.max_abs());
    pts.iter().all(|&p| b.contains(p, tol))
}

#[test]
fn fitted_volume_is_within_one_percent_of_the_euler_grid() {
    let mut rng = support::rng(2024);
    for i in 0..40 {
        let pts = support::random_cloud(&mut rng, 300);
        let (b, report) = fit_min_volume_obb(&PointCloud::new(pts.clone()).unwrap());
        let oracle = support::grid_obb_volume(&pts, 6.0);
        assert!(contains_all(&b, &pts), "cloud {i}: containment");
        assert!(report.volume <= 1.01 * oracle, "cloud {i}: fit {} vs grid {oracle}", report.volume);
        assert!((b.volume() - report.volume).abs() <= 1e-9 * report.volume.max(1e-12));
    }
}

#[test]
fn known_box_is_recovered() {
    let mut rng = support::rng(5);
    let r = support::random_rotation(&mut rng);
    let truth = Box3::new(Vec3::new(1.0, -2.0, 0.5), Vec3::new(1.5, 0.4, 0.8), r);
    let mut pts = truth.corners().to_vec();
    pts.push(truth.center);
    let (b, _) = fit_min_volume_obb(&PointCloud::new(pts).unwrap());
    assert!((b.volume() - truth.volume()).abs() < 1e-6 * truth.volume());
    assert!((b.center - truth.center).max_abs() < 1e-6);
}

#[test]
fn execution_policy_does_not_change_the_fit() {
    let mut rng = support::rng(99);
    for _ in 0..10 {
        let pc = PointCloud::new(support::random_cloud(&mut rng, 200)).unwrap();
        let seq = fit_min_volume_obb_with(&pc, &ObbOptions { exec: Exec::Sequential, ..Default::default() });
        let par = fit_min_volume_obb_with(&pc, &ObbOptions { exec: Exec::Parallel, ..Default::default() });
        assert_eq!(seq, par);
    }
}

#[test]
fn degenerate_clouds_get_floor_extents() {
    let flat: Vec<Vec3> = (0..20).map(|i| Vec3::new(i as f64 * 0.1, (i % 4) as f64 * 0.2, 0.0)).collect();
    let (b, _) = fit_min_volume_obb(&PointCloud::new(flat.clone()).unwrap());
    assert!(contains_all(&b, &flat));
    assert!(b.volume() > 0.0);
    let line: Vec<Vec3> = (0..5).map(|i| Vec3::splat(i as f64)).collect();
    let (b, _) = fit_min_volume_obb(&PointCloud::new(line.clone()).unwrap());
    assert!(contains_all(&b, &line));
    let one = vec![Vec3::new(1.0, 2.0, 3.0)];
    let (b, _) = fit_min_volume_obb(&PointCloud::new(one).unwrap());
    assert_eq!(b.center, Vec3::new(1.0, 2.0, 3.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_contains_and_beats_pca(seed in any::<u64>()) {
        let mut rng = support::rng(seed);
        let pts = support::random_cloud(&mut rng, 120);
        let pc = PointCloud::new(pts.clone()).unwrap();
        let (b, report) = fit_min_volume_obb(&pc);
        let (_, pca) = fit_obb_pca(&pc);
        prop_assert!(contains_all(&b, &pts));
        prop_assert!(report.volume <= pca.volume * (1.0 + 1e-12));
    }

    #[test]
    fn fit_is_rigidly_equivariant(seed in any::<u64>(), dx in -5.0..5.0f64, dy in -5.0..5.0f64, dz in -5.0..5.0f64) {
        let mut rng = support::rng(seed);
        let pts = support::random_cloud(&mut rng, 80);
        let d = Vec3::new(dx, dy, dz);
        let moved: Vec<Vec3> = pts.iter().map(|&p| p + d).collect();
        let (_, a) = fit_min_volume_obb(&PointCloud::new(pts).unwrap());
        let (_, b) = fit_min_volume_obb(&PointCloud::new(moved).unwrap());
        prop_assert!((a.volume - b.volume).abs() <= 1e-3 * a.volume, "{} vs {}", a.volume, b.volume);
    }
}
