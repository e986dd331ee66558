use ldpu_core::classifiers::{
    fixture, fixture_linear_2d, fixture_nn_2d, fixture_qda_2d, fixture_step_1d, qda_linf_lower_bound,
    Classifier, FnClassifier, QDA_CIRCLE_RADIUS,
};
use ldpu_core::robustness::{
    boundary_oracle_2d, expand_hyperrectangle, find_radius, hoeffding_sample_size, test_region,
    Hyperrectangle, RobustnessConfig,
};
use ldpu_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(seed: u64) -> RobustnessConfig {
    RobustnessConfig::new(0.02, 0.05, seed).unwrap()
}

/// Fraction of `region` whose label differs from `reference`, by a midpoint grid.
fn grid_misclass<C: Classifier>(m: &C, reference: usize, region: &Hyperrectangle, n: usize) -> f64 {
    let [(a, b), (c, d)] = [region.interval(0), region.interval(1)];
    let mut miss = 0usize;
    for i in 0..n {
        let u = a + (b - a) * (i as f64 + 0.5) / n as f64;
        for j in 0..n {
            let v = c + (d - c) * (j as f64 + 0.5) / n as f64;
            if m.label(&[u, v]) != reference {
                miss += 1;
            }
        }
    }
    miss as f64 / (n * n) as f64
}

/// Exact l_inf distance from `x` to the QDA circle over the unit square,
/// by bisection on the half-width with a dense check of the box perimeter.
fn qda_linf_radius(x: [f64; 2]) -> f64 {
    let inside = |p: [f64; 2]| (p[0] + 1.0).hypot(p[1] + 1.0) < QDA_CIRCLE_RADIUS;
    let want = inside(x);
    let ok = |h: f64| {
        let (a, b) = ((x[0] - h).max(0.0), (x[0] + h).min(1.0));
        let (c, d) = ((x[1] - h).max(0.0), (x[1] + h).min(1.0));
        // the circle is convex and centred off the square, so corners decide
        [[a, c], [a, d], [b, c], [b, d]].iter().all(|&p| inside(p) == want)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    if ok(1.0) {
        return 1.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid
        } else {
            hi = mid
        }
    }
    lo
}

#[test]
fn hoeffding_sizes() {
    assert_eq!(hoeffding_sample_size(0.05, 0.01).unwrap(), 18445);
    let a = hoeffding_sample_size(0.05, 0.01).unwrap() as f64;
    let b = hoeffding_sample_size(0.05, 0.005).unwrap() as f64;
    assert!((b / a - 4.0).abs() < 1e-3);
    assert!(matches!(hoeffding_sample_size(1.0, 0.1), Err(Error::Parameter(_))));
    assert!(matches!(hoeffding_sample_size(0.0, 0.1), Err(Error::Parameter(_))));
    assert!(matches!(hoeffding_sample_size(0.05, -0.1), Err(Error::Parameter(_))));
}

#[test]
fn config_validation() {
    assert!(RobustnessConfig::new(0.0, 0.05, 0).is_err());
    assert!(RobustnessConfig::new(0.02, 1.0, 0).is_err());
    assert!(config(0).with_kappa(0.0).is_err());
    assert_eq!(config(0).samples_per_test(), 18445);
}

#[test]
fn constant_classifier_region_is_accepted() {
    let m = FnClassifier::new(3, |_: &[f64]| 2);
    let r = Hyperrectangle::cube(&[0.2, 0.5, 0.9], 0.3);
    let v = test_region(&m, &[0.2, 0.5, 0.9], &r, &config(1)).unwrap();
    assert!(v.accepted);
    assert_eq!(v.misclass_rate, 0.0);
    assert_eq!(v.samples_used, hoeffding_sample_size(0.05, 0.01).unwrap());
}

#[test]
fn nn_fixture_region_verdicts_agree_with_grid_oracle() {
    let m = fixture_nn_2d();
    let x = [0.5, 0.5];
    let reference = m.label(&x);
    for (half, expect) in [(0.19, true), (0.45, false), (0.5, false)] {
        let r = Hyperrectangle::cube(&x, half);
        let v = test_region(&m, &x, &r, &config(7)).unwrap();
        let truth = grid_misclass(&m, reference, &r, 1000);
        let se = (truth.max(1e-6) * (1.0 - truth) / v.samples_used as f64).sqrt();
        assert!((v.misclass_rate - truth).abs() <= 5.0 * se + 1e-12, "half={half}");
        assert_eq!(v.accepted, expect, "half={half} rate={} truth={truth}", v.misclass_rate);
    }
    assert_eq!(grid_misclass(&m, reference, &Hyperrectangle::cube(&x, 0.19), 1000), 0.0);
}

#[test]
fn region_must_contain_anchor() {
    let m = fixture_nn_2d();
    let r = Hyperrectangle::new(vec![(0.0, 0.3), (0.0, 0.3)]).unwrap();
    assert!(matches!(test_region(&m, &[0.5, 0.5], &r, &config(0)), Err(Error::OutsideRegion { .. })));
    assert!(matches!(
        test_region(&m, &[0.5], &Hyperrectangle::unit(1), &config(0)),
        Err(Error::Dimension { .. })
    ));
}

#[test]
fn constant_classifier_radius_saturates() {
    let m = FnClassifier::new(2, |_: &[f64]| 1);
    assert_eq!(find_radius(&m, &[0.5, 0.5], &config(0)).unwrap(), 1.0);
}

#[test]
fn radius_is_deterministic_per_seed() {
    let m = fixture_nn_2d();
    let a = find_radius(&m, &[0.5, 0.5], &config(11)).unwrap();
    let b = find_radius(&m, &[0.5, 0.5], &config(11)).unwrap();
    assert_eq!(a, b);
    let ea = expand_hyperrectangle(&m, &[0.5, 0.5], a, &config(11)).unwrap();
    let eb = expand_hyperrectangle(&m, &[0.5, 0.5], b, &config(11)).unwrap();
    assert_eq!(ea, eb);
}

#[test]
fn qda_radius_respects_closed_form_bound() {
    let m = fixture_qda_2d();
    let cfg = config(3);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let x = [0.05 + 0.9 * rng.random::<f64>(), 0.05 + 0.9 * rng.random::<f64>()];
        let theta = find_radius(&m, &x, &cfg).unwrap();
        let bound = qda_linf_lower_bound(x);
        assert!(theta >= bound - cfg.kappa, "x={x:?} theta={theta} bound={bound}");
        // and against the exact l_inf distance to the circle
        assert!(theta >= qda_linf_radius(x) - cfg.kappa, "x={x:?}");
    }
    let theta = find_radius(&m, &[0.5, 0.5], &cfg).unwrap();
    assert!(theta >= qda_linf_lower_bound([0.5, 0.5]) - cfg.kappa);
}

#[test]
fn radius_matches_oracle_when_boundary_crosses_the_box_edge() {
    // Boundaries that cut a full face of the box: the accepted radius sits
    // within 2 kappa + resolution of the brute-force distance.
    let half_plane = FnClassifier::new(2, |p: &[f64]| if p[0] > 0.7 { 2 } else { 1 });
    let linear = fixture_linear_2d();
    let models: [(&str, &dyn Classifier); 2] = [("half-plane", &half_plane), ("linear2d", &linear)];
    for (name, m) in models {
        let cfg = config(5);
        let theta = find_radius(m, &[0.5, 0.5], &cfg).unwrap();
        let oracle = boundary_oracle_2d(m, 0.001).unwrap().min_linf_distance([0.5, 0.5]).unwrap();
        assert!((theta - oracle).abs() <= 2.0 * cfg.kappa + 0.001, "{name}: {theta} vs {oracle}");
    }
}

#[test]
fn monotone_acceptance_on_fixtures() {
    let cfg = config(9);
    for name in ["nn2d", "qda2d", "forest2d", "linear2d"] {
        let m = fixture(name).unwrap();
        let x = [0.5, 0.5];
        let reference = m.label(&x);
        let mut h = 0.02;
        while h <= 0.5 {
            let outer = Hyperrectangle::cube(&x, h);
            // exact zero-misclassification on the outer box (grid oracle)
            if grid_misclass(&m, reference, &outer, 200) == 0.0
                && test_region(&m, &x, &outer, &cfg).unwrap().misclass_rate == 0.0
            {
                for f in [0.25, 0.5, 0.75] {
                    let inner = Hyperrectangle::cube(&x, h * f);
                    assert!(test_region(&m, &x, &inner, &cfg).unwrap().accepted, "{name} h={h}");
                }
            }
            h += 0.04;
        }
    }
}

#[test]
fn constant_classifier_expands_to_the_cube() {
    let m = FnClassifier::new(3, |_: &[f64]| 1);
    let e = expand_hyperrectangle(&m, &[0.5, 0.2, 0.7], 0.1, &config(0)).unwrap();
    assert_eq!(e.rect, Hyperrectangle::unit(3));
    assert!(e.verdict.accepted);
}

#[test]
fn step_classifier_expands_to_its_robust_interval() {
    let m = fixture_step_1d();
    let cfg = config(13);
    let theta = find_radius(&m, &[0.5], &cfg).unwrap();
    assert!((theta - 0.3).abs() <= 2.0 * cfg.kappa, "{theta}");
    let e = expand_hyperrectangle(&m, &[0.5], theta, &cfg).unwrap();
    let (a, b) = e.rect.interval(0);
    assert!((a - 0.2).abs() <= cfg.kappa, "{a}");
    assert!((b - 0.8).abs() <= cfg.kappa, "{b}");
}

#[test]
fn expansion_is_sound_and_contains_the_start() {
    for (name, seed) in [("nn2d", 1), ("qda2d", 2), ("forest2d", 3), ("linear2d", 4)] {
        let m = fixture(name).unwrap();
        let cfg = config(seed);
        let x = [0.5, 0.5];
        let theta = find_radius(&m, &x, &cfg).unwrap();
        let e = expand_hyperrectangle(&m, &x, theta, &cfg).unwrap();
        assert!(e.verdict.accepted, "{name}");
        assert!(e.rect.contains(&x));
        assert!(e.rect.contains_rect(&Hyperrectangle::cube(&x, theta)), "{name}");
        // an independent check with an unrelated seed
        let fresh = RobustnessConfig { seed: 10_000 + seed, ..cfg };
        let v = test_region(&m, &x, &e.rect, &fresh).unwrap();
        assert!(v.misclass_rate <= cfg.tau, "{name}: {}", v.misclass_rate);
    }
}

#[test]
fn oracle_rejects_other_dimensions() {
    let m = fixture_step_1d();
    assert!(matches!(boundary_oracle_2d(&m, 0.01), Err(Error::Dimension { .. })));
    let c = FnClassifier::new(2, |_: &[f64]| 1);
    assert!(boundary_oracle_2d(&c, 0.001).unwrap().is_empty());
}
