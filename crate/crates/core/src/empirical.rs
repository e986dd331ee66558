//! Monte-Carlo estimate of how often the prediction survives perturbation,
//! and the side-by-side comparison with the theoretical bound.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::classifiers::Classifier;
use crate::error::{Error, Result};
use crate::mechanisms::MechanismSpec;
use crate::quantify::{rho, MechanismTemplate, UtilityQuery};
use crate::robustness::Hyperrectangle;

pub const DEFAULT_SAMPLES: usize = 2000;
pub const DEFAULT_REPS: usize = 10;

/// Two-sided Hoeffding half-width at 95% confidence for `n` Bernoulli draws.
pub fn hoeffding_halfwidth(n: usize) -> f64 {
    ((2.0f64 / 0.05).ln() / (2.0 * n as f64)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalEstimate {
    pub rho_hat: f64,
    pub n: usize,
    pub preserved: usize,
    pub hoeffding_halfwidth: f64,
    pub elapsed_sampling: Duration,
    pub elapsed_inference: Duration,
}

/// Perturbs the sensitive coordinates of `x` `n` times and counts how often
/// the label is unchanged.
pub fn empirical_rho<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    mechanisms: &[(usize, MechanismSpec)],
    joint_indicator: Option<f64>,
    n: usize,
    seed: u64,
) -> Result<EmpiricalEstimate> {
    estimate(model, x, mechanisms, joint_indicator, n, seed, 0)
}

fn estimate<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    mechanisms: &[(usize, MechanismSpec)],
    joint_indicator: Option<f64>,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<EmpiricalEstimate> {
    let d = model.dimension();
    if x.len() != d {
        return Err(Error::Dimension { expected: d, got: x.len() });
    }
    if n == 0 {
        return Err(Error::Parameter("sample count n must be >= 1".into()));
    }
    if let Some((i, _)) = mechanisms.iter().find(|(i, _)| *i >= d) {
        return Err(Error::Dimension { expected: d, got: i + 1 });
    }
    if let Some(delta) = joint_indicator {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Parameter(format!(
                "indicator delta must lie in (0, 1) (got {delta})"
            )));
        }
    }

    let started = Instant::now();
    let samplers = mechanisms
        .iter()
        .map(|(i, m)| Ok((*i, m.sampler(x[*i])?)))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut points = Vec::with_capacity(n * d);
    for _ in 0..n {
        let base = points.len();
        points.extend_from_slice(x);
        let keep = joint_indicator.is_some_and(|delta| rng.random::<f64>() < delta);
        if !keep {
            for (i, s) in &samplers {
                points[base + i] = s.draw(&mut rng);
            }
        }
    }
    let elapsed_sampling = started.elapsed();

    let started = Instant::now();
    let reference = model.label(x);
    let preserved = points.par_chunks(d).filter(|p| model.label(p) == reference).count();
    let elapsed_inference = started.elapsed();

    Ok(EmpiricalEstimate {
        rho_hat: preserved as f64 / n as f64,
        n,
        preserved,
        hoeffding_halfwidth: hoeffding_halfwidth(n),
        elapsed_sampling,
        elapsed_inference,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    pub n: usize,
    pub seed: u64,
    /// Timing repetitions (medians are reported); 0 disables timing so the
    /// output is fully deterministic.
    pub reps: usize,
    pub include_slack: bool,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            n: DEFAULT_SAMPLES,
            seed: 0,
            reps: DEFAULT_REPS,
            include_slack: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub family: String,
    pub epsilon: f64,
    pub theta_or_rect: String,
    pub rho: f64,
    pub per_dim_probs: Vec<f64>,
    pub composed_eps: f64,
    pub composed_delta: f64,
    pub rho_hat: f64,
    pub halfwidth: f64,
    /// `rho > rho_hat + halfwidth`: the bound failed beyond sampling error.
    pub violation: bool,
    pub t_sample_ms: f64,
    pub t_infer_ms: f64,
    pub t_theory_ms: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Theory against practice for every (family, epsilon), in that order.
#[allow(clippy::too_many_arguments)]
pub fn compare<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    templates: &[MechanismTemplate],
    eps_grid: &[f64],
    rect: &Hyperrectangle,
    dims: &[usize],
    opts: &CompareOptions,
) -> Result<Vec<ComparisonRow>> {
    let mut rows = Vec::with_capacity(templates.len() * eps_grid.len());
    let mut stream = 0u64;
    for t in templates {
        for &eps in eps_grid {
            stream += 1;
            let theory = || -> Result<_> {
                let mech = t.build(eps)?;
                let mut q = UtilityQuery::uniform(x.to_vec(), dims, &mech, rect.clone());
                q.include_slack = opts.include_slack;
                Ok((mech, rho(&q)?))
            };
            let (mech, report) = theory()?;
            let mechanisms: Vec<_> = dims.iter().map(|&i| (i, mech.clone())).collect();
            let est = estimate(model, x, &mechanisms, None, opts.n, opts.seed, stream)?;

            let (mut t_theory, mut t_sample, mut t_infer) = (vec![], vec![], vec![]);
            for _ in 0..opts.reps {
                let started = Instant::now();
                std::hint::black_box(theory()?);
                t_theory.push(ms(started.elapsed()));
                let started = Instant::now();
                let mechanisms: Vec<_> = dims.iter().map(|&i| (i, t.build(eps).expect("built above"))).collect();
                let build = started.elapsed();
                let e = estimate(model, x, &mechanisms, None, opts.n, opts.seed, stream)?;
                t_sample.push(ms(build + e.elapsed_sampling));
                t_infer.push(ms(e.elapsed_inference));
            }

            rows.push(ComparisonRow {
                family: t.name(),
                epsilon: eps,
                theta_or_rect: rect.to_string(),
                rho: report.rho,
                per_dim_probs: report.per_dim_probs.iter().map(|p| p.probability).collect(),
                composed_eps: report.composed_privacy.epsilon,
                composed_delta: report.composed_privacy.delta,
                rho_hat: est.rho_hat,
                halfwidth: est.hoeffding_halfwidth,
                violation: report.rho > est.rho_hat + est.hoeffding_halfwidth,
                t_sample_ms: median(t_sample),
                t_infer_ms: median(t_infer),
                t_theory_ms: median(t_theory),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::FnClassifier;

    #[test]
    fn halfwidth_at_2000() {
        assert!((hoeffding_halfwidth(2000) - 0.030_37).abs() < 1e-4);
    }

    #[test]
    fn constant_model_always_preserved() {
        let m = FnClassifier::new(2, |_: &[f64]| 1);
        let mech = MechanismSpec::laplace(0.5).unwrap();
        let e = empirical_rho(&m, &[0.5, 0.5], &[(0, mech.clone()), (1, mech)], None, 500, 3).unwrap();
        assert_eq!(e.rho_hat, 1.0);
        assert_eq!(e.preserved, 500);
    }

    #[test]
    fn same_seed_same_estimate() {
        let m = FnClassifier::new(1, |p: &[f64]| if p[0] > 0.6 { 2 } else { 1 });
        let mech = vec![(0, MechanismSpec::pm(1.0).unwrap())];
        let a = empirical_rho(&m, &[0.5], &mech, None, 1000, 11).unwrap();
        let b = empirical_rho(&m, &[0.5], &mech, None, 1000, 11).unwrap();
        assert_eq!(a.preserved, b.preserved);
    }

    #[test]
    fn empty_template_list_gives_empty_table() {
        let m = FnClassifier::new(1, |_: &[f64]| 1);
        let rows = compare(&m, &[0.5], &[], &[1.0], &Hyperrectangle::unit(1), &[0], &CompareOptions::default()).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
