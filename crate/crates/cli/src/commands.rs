//! One handler per subcommand; each returns a `Report` and never prints.

use ldpu_core::classifiers::{fixture, Classifier, ClassifierModel, FIXTURE_NAMES};
use ldpu_core::empirical::{compare, empirical_rho, CompareOptions};
use ldpu_core::quantify::{rho, select_epsilon, sweep, MechanismTemplate, SweepRegion, UtilityQuery};
use ldpu_core::robustness::{
    boundary_oracle_2d, expand_hyperrectangle, find_radius, Hyperrectangle, RobustnessConfig,
};

use crate::args::*;
use crate::output::{Cell, Report};
use crate::parse::{self, usage, MechPlan, MechSpecArg, Result};

fn config(r: &Robust, seed: u64) -> Result<RobustnessConfig> {
    Ok(RobustnessConfig::new(r.tau, r.omega, seed)?
        .with_kappa(r.kappa)?
        .with_passes(r.passes))
}

fn point_for(model: &ClassifierModel, s: &str) -> Result<Vec<f64>> {
    let x = parse::numbers("--point", s)?;
    if x.len() != model.dimension() {
        return usage(format!(
            "--point has {} coordinates but the model expects {}",
            x.len(),
            model.dimension()
        ));
    }
    Ok(x)
}

fn bounds(rect: &Hyperrectangle) -> (Cell, Cell) {
    (
        rect.bounds().iter().map(|b| b.0).collect::<Vec<_>>().into(),
        rect.bounds().iter().map(|b| b.1).collect::<Vec<_>>().into(),
    )
}

/// The box a guarantee is stated for, a label for it, and whether slack applies by default.
struct ResolvedRegion {
    rect: Hyperrectangle,
    label: String,
    radius_box: bool,
}

fn resolve_region(
    region: &Region,
    model: Option<&str>,
    x: &[f64],
    robust: &Robust,
    seed: u64,
) -> Result<ResolvedRegion> {
    if let Some(r) = &region.rect {
        let rect = parse::rect(r, x.len())?;
        return Ok(ResolvedRegion { label: rect.to_string(), rect, radius_box: false });
    }
    if let Some(t) = region.theta {
        if !(0.0..=1.0).contains(&t) {
            return usage(format!("--theta must lie in [0, 1] (got {t})"));
        }
        return Ok(ResolvedRegion { rect: Hyperrectangle::cube(x, t), label: t.to_string(), radius_box: false });
    }
    let Some(name) = model else {
        return usage("no robust region: pass --model, --rect or --theta");
    };
    let model = parse::model(name)?;
    if x.len() != model.dimension() {
        return usage(format!(
            "--point has {} coordinates but the model expects {}",
            x.len(),
            model.dimension()
        ));
    }
    let cfg = config(robust, seed)?;
    let theta = find_radius(&model, x, &cfg)?;
    Ok(match region.region {
        RegionKind::Radius => ResolvedRegion { rect: Hyperrectangle::cube(x, theta), label: theta.to_string(), radius_box: true },
        RegionKind::Hyperrect => {
            let rect = expand_hyperrectangle(&model, x, theta, &cfg)?.rect;
            ResolvedRegion { label: rect.to_string(), rect, radius_box: false }
        }
    })
}

pub fn concentration(a: &ConcentrationArgs) -> Result<Report> {
    let spec = MechSpecArg::parse(&a.mech, &a.family)?;
    let mech = spec.build(a.eps)?;
    let p = mech.interval_probability(a.x, a.a, a.b)?;
    let mut r = Report::new(vec![
        "mechanism",
        "x",
        "a",
        "b",
        "probability",
        "includes_left_atom",
        "includes_right_atom",
    ]);
    r.table_in_human = false;
    r.summary.push(format!("P[{} <= M({}) <= {}] = {:.4}   ({})", a.a, a.x, a.b, p.value, mech.label()));
    let atoms: Vec<&str> = [(p.includes_left_atom, "left"), (p.includes_right_atom, "right")]
        .into_iter()
        .filter_map(|(on, s)| on.then_some(s))
        .collect();
    if !atoms.is_empty() {
        r.summary.push(format!("includes the {} boundary atom", atoms.join(" and ")));
    }
    r.push(vec![
        mech.label().into(),
        a.x.into(),
        a.a.into(),
        a.b.into(),
        p.value.into(),
        p.includes_left_atom.into(),
        p.includes_right_atom.into(),
    ]);
    Ok(r)
}

pub fn radius(a: &RadiusArgs, seed: u64) -> Result<Report> {
    let model = parse::model(&a.model)?;
    let x = point_for(&model, &a.point)?;
    let cfg = config(&a.robust, seed)?;
    let theta = find_radius(&model, &x, &cfg)?;
    let rect = Hyperrectangle::cube(&x, theta);
    let oracle = if a.oracle {
        if model.dimension() != 2 {
            return usage("--oracle needs a two-dimensional model");
        }
        let cells = boundary_oracle_2d(&model, a.resolution)?;
        Some(cells.min_linf_distance([x[0], x[1]]).unwrap_or(f64::INFINITY))
    } else {
        None
    };
    let label = model.label(&x);

    let mut r = Report::new(vec![
        "theta",
        "label",
        "rect",
        "lower",
        "upper",
        "samples_per_test",
        "tau",
        "omega",
        "kappa",
        "oracle_distance",
    ]);
    r.table_in_human = false;
    r.summary.push(format!("theta = {theta:.4} (l_inf) at {x:?}, label {label}"));
    r.summary.push(format!("robust box {rect}"));
    r.summary.push(format!(
        "{} samples per test (tau = {}, omega = {}, kappa = {})",
        cfg.samples_per_test(),
        cfg.tau,
        cfg.omega,
        cfg.kappa
    ));
    if let Some(d) = oracle {
        r.summary.push(format!("brute-force boundary distance {d:.4} (grid {})", a.resolution));
    }
    let (lo, hi) = bounds(&rect);
    r.push(vec![
        theta.into(),
        label.into(),
        rect.to_string().into(),
        lo,
        hi,
        cfg.samples_per_test().into(),
        cfg.tau.into(),
        cfg.omega.into(),
        cfg.kappa.into(),
        oracle.into(),
    ]);
    Ok(r)
}

pub fn hyperrect(a: &HyperrectArgs, seed: u64) -> Result<Report> {
    let model = parse::model(&a.model)?;
    let x = point_for(&model, &a.point)?;
    let cfg = config(&a.robust, seed)?;
    let theta = match a.theta {
        Some(t) => t,
        None => find_radius(&model, &x, &cfg)?,
    };
    let e = expand_hyperrectangle(&model, &x, theta, &cfg)?;

    let mut r = Report::new(vec![
        "theta",
        "rect",
        "lower",
        "upper",
        "accepted",
        "misclass_rate",
        "samples_used",
        "regions_tested",
    ]);
    r.table_in_human = false;
    r.summary.push(format!("start theta = {theta:.4}"));
    r.summary.push(format!("robust hyperrectangle {}", e.rect));
    r.summary.push(format!(
        "final check: misclassification {:.4} on {} samples ({}), {} regions tested",
        e.verdict.misclass_rate,
        e.verdict.samples_used,
        if e.verdict.accepted { "accepted" } else { "rejected" },
        e.regions_tested
    ));
    let (lo, hi) = bounds(&e.rect);
    r.push(vec![
        theta.into(),
        e.rect.to_string().into(),
        lo,
        hi,
        e.verdict.accepted.into(),
        e.verdict.misclass_rate.into(),
        e.verdict.samples_used.into(),
        e.regions_tested.into(),
    ]);
    Ok(r)
}

/// Shared name for a set of per-dimension mechanisms.
fn family_label(plan: &MechPlan) -> String {
    let mut names: Vec<String> = plan.0.iter().map(|(_, m)| m.family.name().to_string()).collect();
    names.dedup();
    names.join(";")
}

pub fn quantify(a: &QuantifyArgs, seed: u64) -> Result<Report> {
    let x = parse::numbers("--point", &a.point)?;
    let plan = MechPlan::parse(&a.mech, a.dims.as_deref(), x.len(), &a.family)?;
    let region = resolve_region(&a.region, a.model.as_deref(), &x, &a.robust, seed)?;
    let grid: Vec<Option<f64>> = match &a.eps {
        Some(s) => parse::numbers("--eps", s)?.into_iter().map(Some).collect(),
        None => vec![None],
    };

    let mut r = Report::new(vec![
        "family",
        "epsilon",
        "theta_or_rect",
        "rho",
        "rho_plain",
        "slack",
        "per_dim_probs",
        "composed_eps",
        "composed_delta",
        "statement",
    ]);
    r.table_in_human = false;
    r.summary.push(format!("region {}", region.rect));
    for eps in grid {
        let mechanisms = plan.build(eps)?;
        let q = UtilityQuery {
            x: x.clone(),
            mechanisms,
            joint_indicator: a.joint_indicator,
            rect: region.rect.clone(),
            omega: a.robust.omega,
            tau: a.robust.tau,
            include_slack: a.slack.unwrap_or(region.radius_box),
        };
        let rep = rho(&q)?;
        let epsilon = eps.or_else(|| {
            let e: Vec<f64> = q.mechanisms.iter().map(|(_, m)| m.epsilon()).collect();
            e.iter().all(|v| *v == e[0]).then_some(e[0])
        });
        r.summary.push(String::new());
        r.summary.push(rep.statement.clone());
        for p in &rep.per_dim_probs {
            r.summary.push(format!(
                "  dim {}: {} P[{:.4} <= M <= {:.4}] = {:.4}",
                p.dim, p.mechanism, p.a, p.b, p.probability
            ));
        }
        r.summary.push(format!(
            "  rho = {:.4} (without slack {:.4}), overall {}",
            rep.rho, rep.rho_plain, rep.composed_privacy
        ));
        r.push(vec![
            family_label(&plan).into(),
            epsilon.into(),
            region.label.clone().into(),
            rep.rho.into(),
            rep.rho_plain.into(),
            rep.slack.into(),
            rep.per_dim_probs.iter().map(|p| p.probability).collect::<Vec<_>>().into(),
            rep.composed_privacy.epsilon.into(),
            rep.composed_privacy.delta.into(),
            rep.statement.into(),
        ]);
    }
    Ok(r)
}

/// Box half-width used by `select-eps` when neither a model nor a region is given.
const DEFAULT_SELECT_THETA: f64 = 0.3;

pub fn select_eps(a: &SelectEpsArgs, seed: u64) -> Result<Report> {
    let x = parse::numbers("--point", &a.point)?;
    let spec = MechSpecArg::parse(&a.mech, &a.family)?;
    let template = MechanismTemplate { family: spec.family, delta: spec.delta, k: spec.k, indicator: spec.indicator };
    let dims = parse::dims(a.dims.as_deref(), x.len())?;
    let range = parse::range("--range", &a.range)?;
    let mut region_arg = a.region.clone();
    if region_arg.rect.is_none() && region_arg.theta.is_none() && a.model.is_none() {
        region_arg.theta = Some(DEFAULT_SELECT_THETA);
    }
    let region = resolve_region(&region_arg, a.model.as_deref(), &x, &a.robust, seed)?;
    let eps = select_epsilon(a.target, &template, &x, &dims, &region.rect, range)?;
    let achieved = rho(&UtilityQuery::uniform(x.clone(), &dims, &template.build(eps)?, region.rect.clone()))?.rho;

    let mut r = Report::new(vec!["family", "target", "epsilon", "rho", "theta_or_rect", "range_lo", "range_hi"]);
    r.table_in_human = false;
    r.summary.push(format!(
        "epsilon = {eps:.4} for {} reaches rho = {achieved:.4} >= {} on {}",
        template.name(),
        a.target,
        region.rect
    ));
    r.push(vec![
        template.name().into(),
        a.target.into(),
        eps.into(),
        achieved.into(),
        region.label.into(),
        range.0.into(),
        range.1.into(),
    ]);
    Ok(r)
}

const SWEEP_COLUMNS: [&str; 7] =
    ["family", "epsilon", "theta_or_rect", "rho", "per_dim_probs", "composed_eps", "composed_delta"];

pub fn sweep_cmd(a: &SweepArgs) -> Result<Report> {
    let x = parse::numbers("--point", &a.point)?;
    let dims = parse::dims(a.dims.as_deref(), x.len())?;
    let templates = parse::families(&a.families, &a.family)?;
    let eps = parse::numbers("--eps", &a.eps)?;
    let regions = match &a.rect {
        Some(s) => vec![SweepRegion::Rect(parse::rect(s, x.len())?)],
        None => parse::numbers("--theta", &a.theta)?.into_iter().map(SweepRegion::Theta).collect(),
    };
    let rows = sweep(&templates, &eps, &regions, &x, &dims)?;

    let mut cols = SWEEP_COLUMNS.to_vec();
    cols.push("best");
    let mut r = Report::new(cols);
    for row in rows {
        r.push(vec![
            row.family.into(),
            row.epsilon.into(),
            row.theta_or_rect.into(),
            row.rho.into(),
            row.per_dim_probs.into(),
            row.composed_eps.into(),
            row.composed_delta.into(),
            row.best.into(),
        ]);
    }
    Ok(r)
}

pub fn empirical(a: &EmpiricalArgs, seed: u64) -> Result<Report> {
    let model = parse::model(&a.model)?;
    let x = point_for(&model, &a.point)?;
    let plan = MechPlan::parse(&a.mech, a.dims.as_deref(), x.len(), &a.family)?;
    let mechanisms = plan.build(None)?;
    let e = empirical_rho(&model, &x, &mechanisms, a.joint_indicator, a.n, seed)?;
    let (ts, ti) = if a.no_timing {
        (0.0, 0.0)
    } else {
        (e.elapsed_sampling.as_secs_f64() * 1e3, e.elapsed_inference.as_secs_f64() * 1e3)
    };

    let mut r = Report::new(vec![
        "family",
        "mechanisms",
        "rho_hat",
        "n",
        "preserved",
        "halfwidth",
        "t_sample_ms",
        "t_infer_ms",
    ]);
    r.table_in_human = false;
    let labels: Vec<String> = mechanisms.iter().map(|(i, m)| format!("{}={}", i + 1, m.label())).collect();
    r.summary.push(format!(
        "rho_hat = {:.4} ({} of {} predictions preserved, +/- {:.4} at 95%)",
        e.rho_hat, e.preserved, e.n, e.hoeffding_halfwidth
    ));
    r.summary.push(format!("mechanisms {}", labels.join(",")));
    if !a.no_timing {
        r.summary.push(format!("sampling {ts:.3} ms, inference {ti:.3} ms"));
    }
    r.push(vec![
        family_label(&plan).into(),
        labels.join(",").into(),
        e.rho_hat.into(),
        e.n.into(),
        e.preserved.into(),
        e.hoeffding_halfwidth.into(),
        ts.into(),
        ti.into(),
    ]);
    Ok(r)
}

pub fn compare_cmd(a: &CompareArgs, seed: u64) -> Result<Report> {
    let model = parse::model(&a.model)?;
    let x = point_for(&model, &a.point)?;
    let dims = parse::dims(a.dims.as_deref(), x.len())?;
    let templates = parse::families(&a.families, &a.family)?;
    let eps = parse::numbers("--eps", &a.eps)?;
    let region = resolve_region(&a.region, Some(&a.model), &x, &a.robust, seed)?;
    let opts = CompareOptions {
        n: a.n,
        seed,
        reps: if a.no_timing { 0 } else { a.reps },
        include_slack: a.slack,
    };
    let rows = compare(&model, &x, &templates, &eps, &region.rect, &dims, &opts)?;

    let mut cols = SWEEP_COLUMNS.to_vec();
    cols.extend(["rho_hat", "halfwidth", "violation", "t_sample_ms", "t_infer_ms", "t_theory_ms"]);
    let mut r = Report::new(cols);
    r.summary.push(format!("region {}", region.rect));
    let violations = rows.iter().filter(|row| row.violation).count();
    for row in rows {
        r.push(vec![
            row.family.into(),
            row.epsilon.into(),
            row.theta_or_rect.into(),
            row.rho.into(),
            row.per_dim_probs.into(),
            row.composed_eps.into(),
            row.composed_delta.into(),
            row.rho_hat.into(),
            row.halfwidth.into(),
            row.violation.into(),
            row.t_sample_ms.into(),
            row.t_infer_ms.into(),
            row.t_theory_ms.into(),
        ]);
    }
    if violations > 0 {
        r.summary.push(format!("{violations} rows where rho exceeds rho_hat + halfwidth"));
    }
    Ok(r)
}

pub fn export(a: &ExportArgs) -> Result<Report> {
    let names: Vec<&str> = match &a.name {
        Some(n) if FIXTURE_NAMES.contains(&n.as_str()) => vec![n.as_str()],
        Some(n) => return usage(format!("unknown fixture '{n}' (known: {})", FIXTURE_NAMES.join(", "))),
        None => FIXTURE_NAMES.to_vec(),
    };
    std::fs::create_dir_all(&a.dir)
        .map_err(|e| anyhow::anyhow!("cannot create {}: {e}", a.dir.display()))?;
    let mut r = Report::new(vec!["name", "kind", "path"]);
    for name in names {
        let m = fixture(name).expect("listed fixture");
        let path = a.dir.join(format!("{name}.json"));
        m.save(&path)?;
        r.push(vec![name.into(), serde_json::to_value(m.kind())?.as_str().unwrap_or_default().into(), path.display().to_string().into()]);
        r.files.push(path);
    }
    Ok(r)
}
