//! Single-dimension LDP mechanisms on `[0, 1]` as immutable distributions.
//!
//! Every mechanism exposes its exact output law for a given input `x`: a
//! density part, a list of point masses, the closed-interval probability
//! `P[a <= M(x) <= b]`, and a seeded sampler.

pub mod discrete;
pub mod noise;
pub mod piecewise;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use discrete::{CumulativeTable, Discrete, DiscreteKind};
use noise::{ClampedNoise, Noise};
use piecewise::{Piecewise, PiecewiseKind};

pub use noise::{gaussian_sigma, gaussian_sigma_alt, standard_normal_cdf};

/// Smallest accepted privacy budget.
pub const MIN_EPSILON: f64 = 1e-6;
/// Absolute tolerance for comparisons against interval endpoints.
pub const ENDPOINT_TOL: f64 = 1e-12;
/// Default grid cardinality for the discrete families.
pub const DEFAULT_GRID: usize = 100;

/// Privacy budget `epsilon` with PAC failure probability `delta` (0 for pure LDP).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::Parameter(format!(
                "delta must lie in [0, 1) (got {delta})"
            )));
        }
        Ok(PrivacyParams { epsilon, delta })
    }

    pub fn pure(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 0.0)
    }

    pub fn is_pure(&self) -> bool {
        self.delta == 0.0
    }
}

impl fmt::Display for PrivacyParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_pure() {
            write!(f, "{}-LDP", fmt_num(self.epsilon))
        } else {
            write!(
                f,
                "({}, {})-PAC LDP",
                fmt_num(self.epsilon),
                fmt_num(self.delta)
            )
        }
    }
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps.is_finite() && eps >= MIN_EPSILON {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "epsilon must be a finite value >= {MIN_EPSILON} (got {eps})"
        )))
    }
}

fn check_unit(what: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain { what, value })
    }
}

/// `d` independent copies of an `(eps, delta)`-PAC LDP mechanism.
pub fn compose_pac(eps: f64, delta: f64, d: usize) -> Result<PrivacyParams> {
    if d < 1 {
        return Err(Error::Parameter("dimension count must be >= 1".into()));
    }
    let p = PrivacyParams::new(eps, delta)?;
    Ok(compose_all(&vec![p; d]))
}

/// Budgets add; failure probabilities combine as `1 - prod(1 - delta_i)`.
pub fn compose_all(parts: &[PrivacyParams]) -> PrivacyParams {
    let epsilon = parts.iter().map(|p| p.epsilon).sum();
    let log_keep: f64 = parts.iter().map(|p| (-p.delta).ln_1p()).sum();
    PrivacyParams {
        epsilon,
        delta: -log_keep.exp_m1(),
    }
}

/// Mechanism family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Laplace,
    Gaussian,
    Pm,
    Sw,
    Krr,
    Exponential,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Laplace,
        Family::Gaussian,
        Family::Pm,
        Family::Sw,
        Family::Krr,
        Family::Exponential,
    ];

    /// Families that satisfy pure LDP.
    pub const PURE: [Family; 5] = [
        Family::Laplace,
        Family::Pm,
        Family::Sw,
        Family::Krr,
        Family::Exponential,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Laplace => "laplace",
            Family::Gaussian => "gaussian",
            Family::Pm => "pm",
            Family::Sw => "sw",
            Family::Krr => "krr",
            Family::Exponential => "exp",
        }
    }

    pub fn parse(s: &str) -> Result<Family> {
        match s.trim().to_ascii_lowercase().as_str() {
            "laplace" | "lap" => Ok(Family::Laplace),
            "gaussian" | "gauss" => Ok(Family::Gaussian),
            "pm" | "piecewise" => Ok(Family::Pm),
            "sw" | "square-wave" => Ok(Family::Sw),
            "krr" | "k-rr" => Ok(Family::Krr),
            "exp" | "exponential" => Ok(Family::Exponential),
            other => Err(Error::Parameter(format!(
                "unknown mechanism family '{other}' (expected laplace, gaussian, pm, sw, krr or exp)"
            ))),
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Family::Krr | Family::Exponential)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Density and point mass of `M(x)` at one output value `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdfValue {
    /// Continuous density at `t` (0 for discrete families).
    pub density: f64,
    /// Point mass located exactly at `t`.
    pub atom: f64,
}

/// `P[a <= M(x) <= b]`, with flags telling whether a point mass sitting on an
/// endpoint was counted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalProbability {
    pub value: f64,
    pub includes_left_atom: bool,
    pub includes_right_atom: bool,
}

/// Where a discrete mechanism moved its input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snap {
    pub snapped: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Noise(ClampedNoise),
    Piecewise(Piecewise),
    Discrete(Discrete),
    Indicator { inner: Box<MechanismSpec>, delta: f64 },
}

/// Immutable description of one single-dimension mechanism.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanismSpec {
    params: PrivacyParams,
    kind: Kind,
}

impl MechanismSpec {
    /// Laplace noise of scale `1 / eps`, clamped to `[0, 1]`.
    pub fn laplace(eps: f64) -> Result<Self> {
        check_epsilon(eps)?;
        Ok(MechanismSpec {
            params: PrivacyParams::pure(eps)?,
            kind: Kind::Noise(ClampedNoise {
                noise: Noise::Laplace { scale: 1.0 / eps },
            }),
        })
    }

    /// Gaussian noise calibrated for `(eps, delta)`-PAC LDP, clamped to `[0, 1]`.
    pub fn gaussian(eps: f64, delta: f64) -> Result<Self> {
        let sigma = gaussian_sigma(eps, delta)?;
        Ok(MechanismSpec {
            params: PrivacyParams::new(eps, delta)?,
            kind: Kind::Noise(ClampedNoise {
                noise: Noise::Gaussian { sigma },
            }),
        })
    }

    pub fn pm(eps: f64) -> Result<Self> {
        check_epsilon(eps)?;
        Ok(MechanismSpec {
            params: PrivacyParams::pure(eps)?,
            kind: Kind::Piecewise(Piecewise::pm(eps)),
        })
    }

    pub fn sw(eps: f64) -> Result<Self> {
        check_epsilon(eps)?;
        Ok(MechanismSpec {
            params: PrivacyParams::pure(eps)?,
            kind: Kind::Piecewise(Piecewise::sw(eps)),
        })
    }

    pub fn krr(eps: f64, k: usize) -> Result<Self> {
        Self::discrete(DiscreteKind::Krr, eps, k)
    }

    pub fn exponential(eps: f64, k: usize) -> Result<Self> {
        Self::discrete(DiscreteKind::Exponential, eps, k)
    }

    fn discrete(kind: DiscreteKind, eps: f64, k: usize) -> Result<Self> {
        check_epsilon(eps)?;
        if k < 2 {
            return Err(Error::Parameter(format!("grid size k must be >= 2 (got {k})")));
        }
        Ok(MechanismSpec {
            params: PrivacyParams::pure(eps)?,
            kind: Kind::Discrete(Discrete {
                kind,
                epsilon: eps,
                k,
            }),
        })
    }

    /// Build a family member; `k` is used by the discrete families and
    /// `delta` by the Gaussian.
    pub fn build(family: Family, eps: f64, delta: f64, k: usize) -> Result<Self> {
        match family {
            Family::Laplace => Self::laplace(eps),
            Family::Gaussian => Self::gaussian(eps, delta),
            Family::Pm => Self::pm(eps),
            Family::Sw => Self::sw(eps),
            Family::Krr => Self::krr(eps, k),
            Family::Exponential => Self::exponential(eps, k),
        }
    }

    /// Release the true value with probability `delta`, otherwise run `self`.
    pub fn wrap_indicator(self, delta: f64) -> Result<Self> {
        if !self.params.is_pure() || matches!(self.kind, Kind::Indicator { .. }) {
            return Err(Error::Composition(
                "privacy indicator requires a pure-LDP inner mechanism".into(),
            ));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Parameter(format!(
                "indicator delta must lie in (0, 1) (got {delta})"
            )));
        }
        Ok(MechanismSpec {
            params: PrivacyParams::new(self.params.epsilon, delta)?,
            kind: Kind::Indicator {
                inner: Box::new(self),
                delta,
            },
        })
    }

    pub fn params(&self) -> PrivacyParams {
        self.params
    }

    pub fn epsilon(&self) -> f64 {
        self.params.epsilon
    }

    /// The family of the (inner) perturbation.
    pub fn family(&self) -> Family {
        match &self.kind {
            Kind::Noise(n) => match n.noise {
                Noise::Laplace { .. } => Family::Laplace,
                Noise::Gaussian { .. } => Family::Gaussian,
            },
            Kind::Piecewise(p) => match p.kind {
                PiecewiseKind::Pm => Family::Pm,
                PiecewiseKind::Sw => Family::Sw,
            },
            Kind::Discrete(d) => match d.kind {
                DiscreteKind::Krr => Family::Krr,
                DiscreteKind::Exponential => Family::Exponential,
            },
            Kind::Indicator { inner, .. } => inner.family(),
        }
    }

    pub fn inner(&self) -> Option<&MechanismSpec> {
        match &self.kind {
            Kind::Indicator { inner, .. } => Some(inner),
            _ => None,
        }
    }

    pub fn indicator_delta(&self) -> Option<f64> {
        match &self.kind {
            Kind::Indicator { delta, .. } => Some(*delta),
            _ => None,
        }
    }

    /// Grid size for discrete families.
    pub fn grid_size(&self) -> Option<usize> {
        match &self.kind {
            Kind::Discrete(d) => Some(d.k),
            Kind::Indicator { inner, .. } => inner.grid_size(),
            _ => None,
        }
    }

    pub fn laplace_scale(&self) -> Option<f64> {
        match &self.kind {
            Kind::Noise(ClampedNoise {
                noise: Noise::Laplace { scale },
            }) => Some(*scale),
            Kind::Indicator { inner, .. } => inner.laplace_scale(),
            _ => None,
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match &self.kind {
            Kind::Noise(ClampedNoise {
                noise: Noise::Gaussian { sigma },
            }) => Some(*sigma),
            _ => None,
        }
    }

    /// `(high density, half-width C)` of a piecewise family.
    pub fn piecewise_constants(&self) -> Option<(f64, f64)> {
        match &self.kind {
            Kind::Piecewise(p) => Some((p.high, p.half_width)),
            Kind::Indicator { inner, .. } => inner.piecewise_constants(),
            _ => None,
        }
    }

    /// High-density window `[l, r]` for input `x` (piecewise families only).
    pub fn window(&self, x: f64) -> Option<(f64, f64)> {
        match &self.kind {
            Kind::Piecewise(p) => Some(p.window(x)),
            Kind::Indicator { inner, .. } => inner.window(x),
            _ => None,
        }
    }

    /// Output support of a discrete family.
    pub fn grid(&self) -> Option<Vec<f64>> {
        match &self.kind {
            Kind::Discrete(d) => Some((0..d.k).map(|i| d.point(i)).collect()),
            Kind::Indicator { inner, .. } => inner.grid(),
            _ => None,
        }
    }

    /// Discrete families snap their input to the nearest grid point.
    pub fn snap(&self, x: f64) -> Option<Snap> {
        match &self.kind {
            Kind::Discrete(d) => {
                let snapped = d.point(d.snap_index(x));
                Some(Snap {
                    snapped,
                    distance: (snapped - x).abs(),
                })
            }
            Kind::Indicator { inner, .. } => inner.snap(x),
            _ => None,
        }
    }

    /// Compact text form, `family:eps[:delta][:k]`.
    pub fn label(&self) -> String {
        let mut s = format!("{}:{}", self.family().name(), fmt_num(self.params.epsilon));
        if !self.params.is_pure() {
            s.push_str(&format!(":{}", fmt_num(self.params.delta)));
        }
        if let Some(k) = self.grid_size() {
            s.push_str(&format!(":{k}"));
        }
        s
    }

    /// Density and point mass of `M(x)` at `t`.
    pub fn pdf_at(&self, x: f64, t: f64) -> Result<PdfValue> {
        check_unit("input x", x)?;
        check_unit("output t", t)?;
        Ok(self.pdf_unchecked(x, t))
    }

    fn pdf_unchecked(&self, x: f64, t: f64) -> PdfValue {
        match &self.kind {
            Kind::Noise(n) => {
                let atom = if t <= ENDPOINT_TOL {
                    n.atom_low(x)
                } else if t >= 1.0 - ENDPOINT_TOL {
                    n.atom_high(x)
                } else {
                    0.0
                };
                PdfValue {
                    density: n.density(x, t),
                    atom,
                }
            }
            Kind::Piecewise(p) => PdfValue {
                density: p.density(x, t),
                atom: 0.0,
            },
            Kind::Discrete(d) => {
                let atom = d
                    .index_of(t, ENDPOINT_TOL)
                    .map(|i| d.masses(x)[i])
                    .unwrap_or(0.0);
                PdfValue { density: 0.0, atom }
            }
            Kind::Indicator { inner, delta } => {
                let v = inner.pdf_unchecked(x, t);
                let own = if (t - x).abs() <= ENDPOINT_TOL { *delta } else { 0.0 };
                PdfValue {
                    density: (1.0 - delta) * v.density,
                    atom: (1.0 - delta) * v.atom + own,
                }
            }
        }
    }

    /// All point masses of `M(x)` as `(location, mass)`, sorted by location.
    pub fn atoms(&self, x: f64) -> Result<Vec<(f64, f64)>> {
        check_unit("input x", x)?;
        Ok(self.atoms_unchecked(x))
    }

    fn atoms_unchecked(&self, x: f64) -> Vec<(f64, f64)> {
        match &self.kind {
            Kind::Noise(n) => vec![(0.0, n.atom_low(x)), (1.0, n.atom_high(x))],
            Kind::Piecewise(_) => Vec::new(),
            Kind::Discrete(d) => d
                .masses(x)
                .into_iter()
                .enumerate()
                .map(|(i, m)| (d.point(i), m))
                .collect(),
            Kind::Indicator { inner, delta } => {
                let mut v: Vec<(f64, f64)> = inner
                    .atoms_unchecked(x)
                    .into_iter()
                    .map(|(t, m)| (t, (1.0 - delta) * m))
                    .collect();
                v.push((x, *delta));
                v.sort_by(|a, b| a.0.total_cmp(&b.0));
                v
            }
        }
    }

    /// Points in `[0, 1]` where the density part is not smooth (includes 0 and 1).
    pub fn breakpoints(&self, x: f64) -> Vec<f64> {
        let mut v = vec![0.0, 1.0];
        match &self.kind {
            Kind::Noise(_) => v.push(x),
            Kind::Piecewise(p) => {
                let (l, r) = p.window(x);
                v.push(l);
                v.push(r);
            }
            Kind::Discrete(_) => {}
            Kind::Indicator { inner, .. } => v.extend(inner.breakpoints(x)),
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// `P[M(x) <= t]`.
    pub fn cdf_at(&self, x: f64, t: f64) -> Result<f64> {
        check_unit("input x", x)?;
        Ok(self.cdf_unchecked(x, t))
    }

    fn cdf_unchecked(&self, x: f64, t: f64) -> f64 {
        match &self.kind {
            Kind::Noise(n) => n.cdf(x, t),
            Kind::Piecewise(p) => {
                if t < 0.0 {
                    0.0
                } else {
                    p.interval(x, 0.0, t.min(1.0))
                }
            }
            Kind::Discrete(d) => d.cdf(x, t),
            Kind::Indicator { inner, delta } => {
                let own = if x <= t { *delta } else { 0.0 };
                own + (1.0 - delta) * inner.cdf_unchecked(x, t)
            }
        }
    }

    /// `P[a <= M(x) <= b]` for a closed interval inside `[0, 1]`.
    pub fn interval_probability(&self, x: f64, a: f64, b: f64) -> Result<IntervalProbability> {
        check_unit("input x", x)?;
        if a.is_nan() || b.is_nan() || a > b || a < -ENDPOINT_TOL || b > 1.0 + ENDPOINT_TOL {
            return Err(Error::Interval { a, b });
        }
        let (a, b) = (a.max(0.0), b.min(1.0));
        let value = self.interval_unchecked(x, a, b);
        let atoms = self.atoms_unchecked(x);
        let on = |e: f64| {
            atoms
                .iter()
                .any(|&(t, m)| m > 0.0 && (t - e).abs() <= ENDPOINT_TOL)
        };
        Ok(IntervalProbability {
            value,
            includes_left_atom: on(a),
            includes_right_atom: on(b),
        })
    }

    fn interval_unchecked(&self, x: f64, a: f64, b: f64) -> f64 {
        match &self.kind {
            Kind::Noise(n) => n.interval(x, a, b, ENDPOINT_TOL),
            Kind::Piecewise(p) => p.interval(x, a, b),
            Kind::Discrete(d) => d.interval(x, a, b, ENDPOINT_TOL),
            Kind::Indicator { inner, delta } => {
                let hit = x >= a - ENDPOINT_TOL && x <= b + ENDPOINT_TOL;
                let own = if hit { *delta } else { 0.0 };
                own + (1.0 - delta) * inner.interval_unchecked(x, a, b)
            }
        }
    }

    /// A sampler for input `x`; discrete families build their cumulative table here.
    pub fn sampler(&self, x: f64) -> Result<Sampler> {
        check_unit("input x", x)?;
        Ok(self.sampler_unchecked(x))
    }

    fn sampler_unchecked(&self, x: f64) -> Sampler {
        let kind = match &self.kind {
            Kind::Noise(n) => SamplerKind::Noise(*n),
            Kind::Piecewise(p) => SamplerKind::Piecewise(*p),
            Kind::Discrete(d) => SamplerKind::Table(CumulativeTable::new(d, x)),
            Kind::Indicator { inner, delta } => SamplerKind::Indicator {
                delta: *delta,
                inner: Box::new(inner.sampler_unchecked(x)),
            },
        };
        Sampler { x, kind }
    }

    /// One draw of `M(x)`.
    pub fn sample<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> Result<f64> {
        Ok(self.sampler(x)?.draw(rng))
    }
}

impl fmt::Display for MechanismSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Seeded draws of `M(x)` for a fixed input.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampler {
    x: f64,
    kind: SamplerKind,
}

#[derive(Debug, Clone, PartialEq)]
enum SamplerKind {
    Noise(ClampedNoise),
    Piecewise(Piecewise),
    Table(CumulativeTable),
    Indicator { delta: f64, inner: Box<Sampler> },
}

impl Sampler {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            SamplerKind::Noise(n) => n.draw(self.x, rng),
            SamplerKind::Piecewise(p) => p.draw(self.x, rng),
            SamplerKind::Table(t) => t.draw(rng),
            SamplerKind::Indicator { delta, inner } => {
                if rng.random::<f64>() < *delta {
                    self.x
                } else {
                    inner.draw(rng)
                }
            }
        }
    }
}
