mod common;

use ldpu_core::mechanisms::{
    compose_all, compose_pac, gaussian_sigma, gaussian_sigma_alt, Family, MechanismSpec,
    PrivacyParams,
};
use ldpu_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use common::{ks_distance, max_ldp_ratio, normal_upper_tail, total_mass, unit_grid};

const EPS_GRID: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];

fn all_at(eps: f64) -> Vec<MechanismSpec> {
    Family::ALL
        .iter()
        .map(|&f| MechanismSpec::build(f, eps, 0.1, 100).unwrap())
        .collect()
}

#[test]
fn laplace_concentration_at_eps_2() {
    let m = MechanismSpec::laplace(2.0).unwrap();
    let p = m.interval_probability(0.5, 0.2, 0.8).unwrap();
    assert!((p.value - (1.0 - (-0.6f64).exp())).abs() < 1e-12);
    assert!((p.value - 0.4512).abs() < 1e-4);
    assert!(!p.includes_left_atom && !p.includes_right_atom);
}

#[test]
fn laplace_atom_at_zero_matches_tail_and_monte_carlo() {
    let m = MechanismSpec::laplace(1.0).unwrap();
    let atom = m.pdf_at(0.5, 0.0).unwrap().atom;
    let expected = 0.5 * (-0.5f64).exp();
    assert!((atom - expected).abs() < 1e-15);
    assert!((atom - 0.3033).abs() < 1e-4);

    let s = m.sampler(0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 1_000_000;
    let zeros = (0..n).filter(|_| s.draw(&mut rng) == 0.0).count() as f64 / n as f64;
    let se = (expected * (1.0 - expected) / n as f64).sqrt();
    assert!((zeros - expected).abs() < 4.0 * se, "{zeros} vs {expected}");
}

#[test]
fn full_domain_interval_is_one_with_both_atoms() {
    for eps in EPS_GRID {
        for m in all_at(eps) {
            for x in [0.0, 0.13, 0.5, 0.97, 1.0] {
                let p = m.interval_probability(x, 0.0, 1.0).unwrap();
                assert!((p.value - 1.0).abs() < 1e-12, "{m} x={x}");
            }
        }
    }
    let p = MechanismSpec::laplace(2.0).unwrap().interval_probability(0.5, 0.0, 1.0).unwrap();
    assert!(p.includes_left_atom && p.includes_right_atom);
}

#[test]
fn gaussian_sigma_direct_evaluation() {
    let s = gaussian_sigma(1.0, 0.1).unwrap();
    // (sqrt(-2 ln 0.05) + sqrt(-2 ln 0.05 + 2)) / 2
    let c: f64 = -2.0 * 0.05f64.ln();
    assert!((s - (c.sqrt() + (c + 2.0).sqrt()) / 2.0).abs() < 1e-15);
    assert!((s - 2.6373).abs() < 1e-4, "{s}");
    // the calibrated tail bound holds
    assert!(2.0 * normal_upper_tail(s - 1.0 / (2.0 * s)) <= 0.1);
    assert_eq!(MechanismSpec::gaussian(1.0, 0.1).unwrap().sigma(), Some(s));
}

#[test]
fn gaussian_sigma_forms_agree_and_decrease_in_eps() {
    for delta in [1e-4, 0.01, 0.05, 0.1, 0.3, 0.7] {
        let mut last = f64::INFINITY;
        for eps in [0.05, 0.5, 1.0, 2.0, 4.0, 8.0, 32.0] {
            let a = gaussian_sigma(eps, delta).unwrap();
            let b = gaussian_sigma_alt(eps, delta);
            assert!(((a - b) / a).abs() < 1e-12);
            assert!(a < last);
            last = a;
        }
    }
}

#[test]
fn gaussian_pac_tail_bound_on_grid() {
    for eps in [0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
        for delta in [1e-6, 1e-3, 0.01, 0.05, 0.1, 0.5] {
            let s = gaussian_sigma(eps, delta).unwrap();
            let tail = 2.0 * normal_upper_tail(eps * s - 1.0 / (2.0 * s));
            assert!(tail <= delta, "eps={eps} delta={delta} tail={tail}");
        }
    }
}

#[test]
fn gaussian_privacy_loss_exceedance_monte_carlo() {
    let (eps, delta) = (2.0, 0.1);
    let s = gaussian_sigma(eps, delta).unwrap();
    let normal = Normal::new(0.0, s).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 1_000_000;
    // worst-case neighbours at distance 1: loss = (2 z + 1) / (2 sigma^2), both signs
    let exceed = (0..n)
        .filter(|_| {
            let z: f64 = normal.sample(&mut rng);
            (2.0 * z.abs() + 1.0) / (2.0 * s * s) > eps
        })
        .count() as f64
        / n as f64;
    assert!(exceed <= delta + 3.0 * (delta * (1.0 - delta) / n as f64).sqrt(), "{exceed}");
}

#[test]
fn pm_concentration_at_eps_2() {
    let m = MechanismSpec::pm(2.0).unwrap();
    let (p, c) = m.piecewise_constants().unwrap();
    assert!((p - 1f64.exp()).abs() < 1e-15);
    let width = 2.0 * c;
    let expected = width * p + (0.6 - width) * p / 2f64.exp();
    let got = m.interval_probability(0.5, 0.2, 0.8).unwrap().value;
    assert!((got - expected).abs() < 1e-12);
    assert!((got - 0.853).abs() < 5e-4, "{got}");
    assert!((m.pdf_at(0.5, 0.5).unwrap().density - 1f64.exp()).abs() < 1e-12);
}

#[test]
fn piecewise_density_ratio_is_exactly_e_eps() {
    for eps in EPS_GRID {
        for m in [MechanismSpec::pm(eps).unwrap(), MechanismSpec::sw(eps).unwrap()] {
            let (l, r) = m.window(0.5).unwrap();
            let hi = m.pdf_at(0.5, 0.5 * (l + r)).unwrap().density;
            let lo = m.pdf_at(0.5, if l > 0.01 { l / 2.0 } else { (r + 1.0) / 2.0 }).unwrap().density;
            assert!((hi / lo - eps.exp()).abs() < 1e-9 * eps.exp(), "{m}");
        }
    }
}

#[test]
fn piecewise_windows_follow_three_cases() {
    let m = MechanismSpec::pm(1.0).unwrap();
    let (_, c) = m.piecewise_constants().unwrap();
    assert_eq!(m.window(c / 2.0).unwrap(), (0.0, 2.0 * c));
    assert_eq!(m.window(0.5).unwrap(), (0.5 - c, 0.5 + c));
    assert_eq!(m.window(1.0 - c / 2.0).unwrap(), (1.0 - 2.0 * c, 1.0));
}

#[test]
fn krr_concentration_at_eps_2() {
    let m = MechanismSpec::krr(2.0, 100).unwrap();
    // 0.5 snaps to 50/99; grid points i/99 in [0.2, 0.8] are i = 20..=79
    let g = (0..100).map(|i| i as f64 / 99.0).filter(|&t| (0.2..=0.8).contains(&t)).count();
    assert_eq!(g, 60);
    let e2 = 2f64.exp();
    let expected = (e2 + (g as f64 - 1.0)) / (99.0 + e2);
    let got = m.interval_probability(0.5, 0.2, 0.8).unwrap().value;
    assert!((got - expected).abs() < 1e-12);
    assert!((got - 0.624).abs() < 1e-3, "{got}");
}

#[test]
fn krr_snap_is_recorded() {
    let m = MechanismSpec::krr(1.0, 100).unwrap();
    let s = m.snap(0.5).unwrap();
    assert_eq!(s.snapped, 50.0 / 99.0);
    assert!((s.distance - (50.0 / 99.0 - 0.5)).abs() < 1e-15);
}

#[test]
fn exponential_mass_ratio() {
    // with 101 grid points both 0.5 and 1.0 are exactly on the grid
    let m = MechanismSpec::exponential(2.0, 101).unwrap();
    let at = |t: f64| m.pdf_at(0.5, t).unwrap().atom;
    assert!((at(0.5) / at(1.0) - 0.5f64.exp()).abs() < 1e-12);

    // k = 100: 0.5 snaps to 50/99, farthest-right point is 1
    let m = MechanismSpec::exponential(2.0, 100).unwrap();
    let centre = 50.0 / 99.0;
    let r = m.pdf_at(0.5, centre).unwrap().atom / m.pdf_at(0.5, 1.0).unwrap().atom;
    assert!((r - (2.0 * (1.0 - centre) / 2.0).exp()).abs() < 1e-12);
}

#[test]
fn discrete_masses_sum_to_one() {
    for eps in EPS_GRID {
        for m in [MechanismSpec::krr(eps, 100).unwrap(), MechanismSpec::exponential(eps, 100).unwrap()] {
            for x in unit_grid(11) {
                let s: f64 = m.atoms(x).unwrap().iter().map(|(_, p)| p).sum();
                assert!((s - 1.0).abs() < 1e-12, "{m} x={x}");
            }
        }
    }
}

#[test]
fn continuous_families_normalize_by_quadrature() {
    for eps in EPS_GRID {
        for f in [Family::Laplace, Family::Gaussian, Family::Pm, Family::Sw] {
            let m = MechanismSpec::build(f, eps, 0.1, 100).unwrap();
            for x in [0.0, 0.05, 0.3, 0.5, 0.9, 1.0] {
                let total = total_mass(&m, x);
                assert!((total - 1.0).abs() < 1e-9, "{m} x={x} total={total}");
            }
        }
    }
}

#[test]
fn laplace_density_at_centre() {
    let m = MechanismSpec::laplace(2.0).unwrap();
    assert!((m.pdf_at(0.5, 0.5).unwrap().density - 1.0).abs() < 1e-15);
}

#[test]
fn zero_width_interior_interval_has_no_mass() {
    for m in all_at(2.0) {
        if m.family().is_discrete() {
            continue;
        }
        assert_eq!(m.interval_probability(0.5, 0.37, 0.37).unwrap().value, 0.0, "{m}");
    }
}

#[test]
fn ldp_ratio_on_coarse_grid() {
    let xs = unit_grid(21);
    for eps in [0.5, 1.0, 2.0, 4.0] {
        for f in Family::PURE {
            let m = MechanismSpec::build(f, eps, 0.0, 100).unwrap();
            let ts = if f.is_discrete() { m.grid().unwrap() } else { unit_grid(21) };
            let r = max_ldp_ratio(&m, &xs, &ts);
            assert!(r <= eps.exp() * (1.0 + 1e-9), "{m}: {r}");
        }
    }
}

#[test]
fn samplers_match_cdf_in_ks_distance() {
    for m in all_at(2.0) {
        for x in [0.1, 0.5] {
            let s = m.sampler(x).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(2024);
            let mut v: Vec<f64> = (0..100_000).map(|_| s.draw(&mut rng)).collect();
            v.sort_by(f64::total_cmp);
            let d = ks_distance(
                &v,
                |t| m.cdf_at(x, t).unwrap(),
                |t| m.cdf_at(x, t - 1e-9).unwrap(),
            );
            assert!(d < 0.01, "{m} x={x}: KS {d}");
        }
    }
}

#[test]
fn sampler_stays_in_unit_interval_and_on_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = MechanismSpec::krr(2.0, 100).unwrap();
    for _ in 0..10_000 {
        let t = m.sample(0.3, &mut rng).unwrap();
        let i = t * 99.0;
        assert!((i - i.round()).abs() < 1e-9);
    }
    for m in all_at(0.5) {
        for _ in 0..10_000 {
            let t = m.sample(0.9, &mut rng).unwrap();
            assert!((0.0..=1.0).contains(&t));
        }
    }
}

#[test]
fn pm_window_frequency_matches_binomial() {
    let m = MechanismSpec::pm(2.0).unwrap();
    let (p, c) = m.piecewise_constants().unwrap();
    let (l, r) = m.window(0.5).unwrap();
    let s = m.sampler(0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let n = 1_000_000;
    let hits = (0..n)
        .filter(|_| {
            let t = s.draw(&mut rng);
            t >= l && t <= r
        })
        .count() as f64
        / n as f64;
    let q = 2.0 * c * p;
    assert!((hits - q).abs() < 3.0 * (q * (1.0 - q) / n as f64).sqrt(), "{hits} vs {q}");
}

#[test]
fn sw_interval_matches_monte_carlo() {
    let m = MechanismSpec::sw(2.0).unwrap();
    let q = m.interval_probability(0.5, 0.2, 0.8).unwrap().value;
    let s = m.sampler(0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 1_000_000;
    let hits = (0..n).filter(|_| (0.2..=0.8).contains(&s.draw(&mut rng))).count() as f64 / n as f64;
    assert!((hits - q).abs() < 3.0 * (q * (1.0 - q) / n as f64).sqrt(), "{hits} vs {q}");
}

#[test]
fn sampling_is_deterministic_per_seed() {
    for m in all_at(1.0) {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| m.sample(0.4, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
        assert_ne!(draw(3), draw(4));
    }
}

#[test]
fn concentration_is_monotone_in_eps() {
    let eps: Vec<f64> = (1..=40).map(|i| i as f64 * 0.25).collect();
    for theta in [0.1, 0.2, 0.3] {
        for f in Family::ALL {
            let mut last = 0.0;
            for &e in &eps {
                let m = MechanismSpec::build(f, e, 0.1, 100).unwrap();
                let p = m.interval_probability(0.5, 0.5 - theta, 0.5 + theta).unwrap().value;
                assert!(p >= last - 1e-12, "{f} theta={theta} eps={e}");
                last = p;
            }
        }
    }
}

#[test]
fn indicator_mixture() {
    let inner = MechanismSpec::laplace(2.0).unwrap();
    let q = inner.interval_probability(0.5, 0.2, 0.8).unwrap().value;
    let w = inner.clone().wrap_indicator(0.1).unwrap();
    let got = w.interval_probability(0.5, 0.2, 0.8).unwrap().value;
    assert!((got - (0.1 + 0.9 * q)).abs() < 1e-15);
    assert!((got - 0.5061).abs() < 1e-4);
    // the released true value is outside [0.6, 0.9]
    let out = w.interval_probability(0.5, 0.6, 0.9).unwrap().value;
    let inner_out = inner.interval_probability(0.5, 0.6, 0.9).unwrap().value;
    assert!((out - 0.9 * inner_out).abs() < 1e-15);

    let s = w.sampler(0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 1_000_000;
    let hits = (0..n).filter(|_| (0.2..=0.8).contains(&s.draw(&mut rng))).count() as f64 / n as f64;
    assert!((hits - got).abs() < 3.0 * (got * (1.0 - got) / n as f64).sqrt());
}

#[test]
fn indicator_rejections() {
    let g = MechanismSpec::gaussian(1.0, 0.1).unwrap();
    let e = g.wrap_indicator(0.1).unwrap_err();
    assert!(matches!(e, Error::Composition(_)));
    assert!(e.to_string().contains("pure-LDP"));
    let twice = MechanismSpec::pm(1.0).unwrap().wrap_indicator(0.1).unwrap().wrap_indicator(0.1);
    assert!(matches!(twice, Err(Error::Composition(_))));
    assert!(matches!(
        MechanismSpec::pm(1.0).unwrap().wrap_indicator(0.0),
        Err(Error::Parameter(_))
    ));
}

#[test]
fn parameter_errors() {
    assert!(matches!(MechanismSpec::laplace(0.0), Err(Error::Parameter(_))));
    assert!(matches!(MechanismSpec::pm(-1.0), Err(Error::Parameter(_))));
    assert!(matches!(MechanismSpec::sw(f64::NAN), Err(Error::Parameter(_))));
    assert!(matches!(MechanismSpec::krr(1.0, 1), Err(Error::Parameter(_))));
    assert!(matches!(MechanismSpec::gaussian(1.0, 1.0), Err(Error::Parameter(_))));
    let m = MechanismSpec::laplace(1.0).unwrap();
    assert!(matches!(m.interval_probability(0.5, 0.8, 0.2), Err(Error::Interval { .. })));
    assert!(matches!(m.pdf_at(0.5, 1.5), Err(Error::Domain { .. })));
}

#[test]
fn composition() {
    let p = compose_pac(2.0, 0.0, 3).unwrap();
    assert_eq!(p, PrivacyParams { epsilon: 6.0, delta: 0.0 });
    let p = compose_pac(2.0, 0.1, 2).unwrap();
    assert_eq!(p.epsilon, 4.0);
    assert!((p.delta - 0.19).abs() < 1e-15);
    assert!(compose_pac(1.0, 0.1, 0).is_err());
    let mixed = compose_all(&[
        PrivacyParams { epsilon: 1.0, delta: 0.0 },
        PrivacyParams { epsilon: 2.0, delta: 0.1 },
        PrivacyParams { epsilon: 0.5, delta: 0.2 },
    ]);
    assert!((mixed.epsilon - 3.5).abs() < 1e-15);
    assert!((mixed.delta - (1.0 - 0.9 * 0.8)).abs() < 1e-15);
}

#[test]
fn composed_delta_never_exceeds_union_bound() {
    for i in 1..100 {
        let delta = i as f64 / 100.0;
        for d in 1..=20 {
            let p = compose_pac(1.0, delta, d).unwrap();
            assert!(p.delta <= d as f64 * delta + 1e-15);
        }
    }
}
