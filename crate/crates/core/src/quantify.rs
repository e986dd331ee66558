//! The prediction-preservation bound `rho`: the probability that every
//! perturbed sensitive coordinate stays inside a robust box, optionally
//! discounted by the robustness test's own slack `(1 - omega)(1 - tau)`.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanisms::{
    compose_all, Family, MechanismSpec, PrivacyParams, DEFAULT_GRID, MIN_EPSILON,
};
use crate::robustness::Hyperrectangle;

/// Everything needed to evaluate `rho` at one anchor point.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityQuery {
    pub x: Vec<f64>,
    /// `(dimension, mechanism)` pairs, 0-based dimensions; the sensitive set.
    pub mechanisms: Vec<(usize, MechanismSpec)>,
    /// One indicator shared by all sensitive dimensions: with this
    /// probability the whole record is released unperturbed.
    pub joint_indicator: Option<f64>,
    pub rect: Hyperrectangle,
    pub omega: f64,
    pub tau: f64,
    pub include_slack: bool,
}

impl UtilityQuery {
    /// Same mechanism on every listed dimension, slack off, no joint indicator.
    pub fn uniform(x: Vec<f64>, dims: &[usize], mech: &MechanismSpec, rect: Hyperrectangle) -> Self {
        UtilityQuery {
            x,
            mechanisms: dims.iter().map(|&i| (i, mech.clone())).collect(),
            joint_indicator: None,
            rect,
            omega: 0.05,
            tau: 0.02,
            include_slack: false,
        }
    }

    fn validate(&self) -> Result<()> {
        let d = self.x.len();
        if self.mechanisms.is_empty() {
            return Err(Error::Parameter("at least one sensitive dimension is required".into()));
        }
        if self.rect.dimension() != d {
            return Err(Error::Dimension {
                expected: d,
                got: self.rect.dimension(),
            });
        }
        let mut seen = vec![false; d];
        for (i, m) in &self.mechanisms {
            if *i >= d {
                return Err(Error::Parameter(format!(
                    "mechanism assigned to dimension {} but the point has {d}",
                    i + 1
                )));
            }
            if seen[*i] {
                return Err(Error::Parameter(format!(
                    "dimension {} has more than one mechanism",
                    i + 1
                )));
            }
            seen[*i] = true;
            if self.joint_indicator.is_some() && !m.params().is_pure() {
                return Err(Error::Composition(
                    "privacy indicator requires a pure-LDP inner mechanism".into(),
                ));
            }
            let (a, b) = self.rect.interval(*i);
            let v = self.x[*i];
            if v < a - crate::mechanisms::ENDPOINT_TOL || v > b + crate::mechanisms::ENDPOINT_TOL {
                return Err(Error::OutsideRegion { point: self.x.clone() });
            }
        }
        if let Some(&v) = self.x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain { what: "point coordinate", value: v });
        }
        if let Some(delta) = self.joint_indicator {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::Parameter(format!(
                    "indicator delta must lie in (0, 1) (got {delta})"
                )));
            }
        }
        if !(self.omega > 0.0 && self.omega < 1.0 && self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Parameter("omega and tau must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimProbability {
    /// 1-based dimension.
    pub dim: usize,
    pub mechanism: String,
    pub a: f64,
    pub b: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityReport {
    pub rho: f64,
    /// `rho` before the slack factor.
    pub rho_plain: f64,
    /// `(1 - omega)(1 - tau)` when applied, otherwise 1.
    pub slack: f64,
    pub per_dim_probs: Vec<DimProbability>,
    pub joint_indicator: Option<f64>,
    pub composed_privacy: PrivacyParams,
    pub statement: String,
}

/// Evaluates the bound for `query`.
pub fn rho(query: &UtilityQuery) -> Result<UtilityReport> {
    query.validate()?;
    let mut per_dim_probs = Vec::with_capacity(query.mechanisms.len());
    let mut product = 1.0;
    for (i, mech) in &query.mechanisms {
        let (a, b) = query.rect.interval(*i);
        let p = mech.interval_probability(query.x[*i], a, b)?.value;
        product *= p;
        per_dim_probs.push(DimProbability {
            dim: i + 1,
            mechanism: mech.label(),
            a,
            b,
            probability: p,
        });
    }
    let rho_plain = match query.joint_indicator {
        Some(delta) => delta + (1.0 - delta) * product,
        None => product,
    };
    let slack = if query.include_slack {
        (1.0 - query.omega) * (1.0 - query.tau)
    } else {
        1.0
    };
    let rho = (rho_plain * slack).clamp(0.0, 1.0);

    let parts: Vec<PrivacyParams> = query.mechanisms.iter().map(|(_, m)| m.params()).collect();
    let composed_privacy = match query.joint_indicator {
        Some(delta) => PrivacyParams {
            epsilon: parts.iter().map(|p| p.epsilon).sum(),
            delta,
        },
        None => compose_all(&parts),
    };
    let statement = render_statement(query, rho, &composed_privacy);
    Ok(UtilityReport {
        rho,
        rho_plain,
        slack,
        per_dim_probs,
        joint_indicator: query.joint_indicator,
        composed_privacy,
        statement,
    })
}

fn render_statement(query: &UtilityQuery, rho: f64, privacy: &PrivacyParams) -> String {
    let point = query
        .x
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(", ");
    let dims = query
        .mechanisms
        .iter()
        .map(|(i, m)| format!("x{} by {}", i + 1, m.label()))
        .collect::<Vec<_>>()
        .join(", ");
    let slack = if query.include_slack {
        format!(" (robust region certified with tau = {}, omega = {})", query.tau, query.omega)
    } else {
        String::new()
    };
    format!(
        "With probability at least {rho:.4}, perturbing {dims} preserves the correct \
         classification result at x = ({point}){slack}; the perturbation satisfies {privacy}."
    )
}

/// A mechanism family with its non-epsilon parameters fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechanismTemplate {
    pub family: Family,
    /// Gaussian failure probability.
    pub delta: f64,
    /// Grid size for the discrete families.
    pub k: usize,
    /// Per-dimension privacy indicator wrapped around the mechanism.
    pub indicator: Option<f64>,
}

impl MechanismTemplate {
    pub fn new(family: Family) -> Self {
        MechanismTemplate {
            family,
            delta: 0.1,
            k: DEFAULT_GRID,
            indicator: None,
        }
    }

    pub fn with_indicator(mut self, delta: f64) -> Self {
        self.indicator = Some(delta);
        self
    }

    pub fn build(&self, eps: f64) -> Result<MechanismSpec> {
        let m = MechanismSpec::build(self.family, eps, self.delta, self.k)?;
        match self.indicator {
            Some(d) => m.wrap_indicator(d),
            None => Ok(m),
        }
    }

    pub fn name(&self) -> String {
        let base = self.family.name();
        match self.indicator {
            Some(d) => format!("{base}+ind{d}"),
            None => base.to_string(),
        }
    }
}

impl fmt::Display for MechanismTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

fn rho_for(
    template: &MechanismTemplate,
    eps: f64,
    x: &[f64],
    dims: &[usize],
    rect: &Hyperrectangle,
) -> Result<UtilityReport> {
    let mech = template.build(eps)?;
    rho(&UtilityQuery::uniform(x.to_vec(), dims, &mech, rect.clone()))
}

pub const EPSILON_PRECISION: f64 = 1e-3;
const PROBES: usize = 16;

/// Smallest `eps` in `range` with `rho(eps) >= target`, to within `1e-3`.
///
/// Monotonicity is checked on 16 evenly spaced probes before bisecting.
pub fn select_epsilon(
    target: f64,
    template: &MechanismTemplate,
    x: &[f64],
    dims: &[usize],
    rect: &Hyperrectangle,
    range: (f64, f64),
) -> Result<f64> {
    if !(0.0..1.0).contains(&target) {
        return Err(Error::Parameter(format!("target must lie in [0, 1) (got {target})")));
    }
    let (lo, hi) = range;
    if !(lo >= MIN_EPSILON && hi > lo && hi.is_finite()) {
        return Err(Error::Parameter(format!(
            "epsilon range must satisfy {MIN_EPSILON} <= lo < hi (got [{lo}, {hi}])"
        )));
    }
    let f = |eps: f64| rho_for(template, eps, x, dims, rect).map(|r| r.rho);

    let probes: Vec<f64> = (0..PROBES)
        .map(|i| lo + (hi - lo) * i as f64 / (PROBES - 1) as f64)
        .collect();
    let values = probes.iter().map(|&e| f(e)).collect::<Result<Vec<_>>>()?;
    for w in 0..PROBES - 1 {
        if values[w + 1] < values[w] - 1e-12 {
            return Err(Error::Unsupported(format!(
                "rho is not monotone in epsilon for {template}: rho({:.4}) = {:.6} > rho({:.4}) = {:.6}",
                probes[w], values[w], probes[w + 1], values[w + 1]
            )));
        }
    }
    if values[PROBES - 1] < target {
        return Err(Error::Infeasible(format!(
            "rho({hi}) = {:.6} is below the target {target}; widen the epsilon range or the robust region",
            values[PROBES - 1]
        )));
    }
    if values[0] >= target {
        return Ok(lo);
    }
    // bracket from the probes, then bisect
    let j = values.iter().position(|&v| v >= target).expect("last probe meets target");
    let (mut fail, mut pass) = (probes[j - 1], probes[j]);
    while pass - fail > EPSILON_PRECISION {
        let mid = 0.5 * (fail + pass);
        if f(mid)? >= target {
            pass = mid;
        } else {
            fail = mid;
        }
    }
    Ok(pass)
}

/// Region used by one sweep column.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepRegion {
    /// `B_theta(x)` clipped to the unit cube.
    Theta(f64),
    Rect(Hyperrectangle),
}

impl SweepRegion {
    fn rect(&self, x: &[f64]) -> Hyperrectangle {
        match self {
            SweepRegion::Theta(t) => Hyperrectangle::cube(x, *t),
            SweepRegion::Rect(r) => r.clone(),
        }
    }
}

impl fmt::Display for SweepRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepRegion::Theta(t) => write!(f, "{t}"),
            SweepRegion::Rect(r) => write!(f, "{r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub family: String,
    pub epsilon: f64,
    pub theta_or_rect: String,
    pub rho: f64,
    pub per_dim_probs: Vec<f64>,
    pub composed_eps: f64,
    pub composed_delta: f64,
    /// Highest `rho` among the families in this `(epsilon, region)` cell
    /// (ties within 1e-12 are all flagged).
    pub best: bool,
}

/// `rho` for every (family, epsilon, region); rows ordered region, epsilon, family.
pub fn sweep(
    templates: &[MechanismTemplate],
    eps_grid: &[f64],
    regions: &[SweepRegion],
    x: &[f64],
    dims: &[usize],
) -> Result<Vec<SweepRow>> {
    let cells: Vec<(&SweepRegion, f64, &MechanismTemplate)> = regions
        .iter()
        .flat_map(|r| eps_grid.iter().flat_map(move |&e| templates.iter().map(move |t| (r, e, t))))
        .collect();
    let mut rows = cells
        .par_iter()
        .map(|(region, eps, t)| {
            let rep = rho_for(t, *eps, x, dims, &region.rect(x))?;
            Ok(SweepRow {
                family: t.name(),
                epsilon: *eps,
                theta_or_rect: region.to_string(),
                rho: rep.rho,
                per_dim_probs: rep.per_dim_probs.iter().map(|p| p.probability).collect(),
                composed_eps: rep.composed_privacy.epsilon,
                composed_delta: rep.composed_privacy.delta,
                best: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if !templates.is_empty() {
        for cell in rows.chunks_mut(templates.len()) {
            let top = cell.iter().map(|r| r.rho).fold(f64::NEG_INFINITY, f64::max);
            for r in cell {
                r.best = r.rho >= top - 1e-12;
            }
        }
    }
    Ok(rows)
}
