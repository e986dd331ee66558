//! Black-box probabilistic robustness.
//!
//! A region is accepted when the misclassification rate of `n(omega, tau/2)`
//! uniform samples is at most `tau/2`; by Hoeffding the true rate is then at
//! most `tau` with probability at least `1 - omega`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::Classifier;
use crate::error::{Error, Result};

pub const DEFAULT_KAPPA: f64 = 0.01;
pub const DEFAULT_EXPAND_PASSES: usize = 3;

// Substream bases so that every tested region draws from its own stream.
const RADIUS_STREAM: u64 = 1 << 32;
const EXPAND_STREAM: u64 = 2 << 32;
const VERIFY_STREAM: u64 = 3 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessConfig {
    pub tau: f64,
    pub omega: f64,
    pub kappa: f64,
    pub seed: u64,
    pub max_expand_passes: usize,
}

impl RobustnessConfig {
    pub fn new(tau: f64, omega: f64, seed: u64) -> Result<Self> {
        let c = RobustnessConfig {
            tau,
            omega,
            kappa: DEFAULT_KAPPA,
            seed,
            max_expand_passes: DEFAULT_EXPAND_PASSES,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        self.kappa = kappa;
        self.validate()?;
        Ok(self)
    }

    pub fn with_passes(mut self, passes: usize) -> Self {
        self.max_expand_passes = passes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Parameter(format!("tau must lie in (0, 1) (got {})", self.tau)));
        }
        if !(self.omega > 0.0 && self.omega < 1.0) {
            return Err(Error::Parameter(format!(
                "omega must lie in (0, 1) (got {})",
                self.omega
            )));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::Parameter(format!(
                "kappa must lie in (0, 1] (got {})",
                self.kappa
            )));
        }
        Ok(())
    }

    /// Samples per tested region, `n(omega, tau/2)`.
    pub fn samples_per_test(&self) -> usize {
        hoeffding_sample_size(self.omega, self.tau / 2.0).expect("validated config")
    }
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        RobustnessConfig {
            tau: 0.02,
            omega: 0.05,
            kappa: DEFAULT_KAPPA,
            seed: 0,
            max_expand_passes: DEFAULT_EXPAND_PASSES,
        }
    }
}

/// `ceil(ln(2/omega) / (2 tau^2))`.
pub fn hoeffding_sample_size(omega: f64, tau: f64) -> Result<usize> {
    if !(omega > 0.0 && omega < 1.0) {
        return Err(Error::Parameter(format!("omega must lie in (0, 1) (got {omega})")));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Parameter(format!("tau must be positive (got {tau})")));
    }
    Ok(((2.0 / omega).ln() / (2.0 * tau * tau)).ceil() as usize)
}

/// Product of closed intervals inside the unit cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperrectangle {
    bounds: Vec<(f64, f64)>,
}

impl Hyperrectangle {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Shape("hyperrectangle needs at least one dimension".into()));
        }
        for (i, &(a, b)) in bounds.iter().enumerate() {
            if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
                return Err(Error::Validation(format!(
                    "interval {} = [{a}, {b}] is not inside [0, 1]",
                    i + 1
                )));
            }
            if a > b {
                return Err(Error::Interval { a, b });
            }
        }
        Ok(Hyperrectangle { bounds })
    }

    /// `B_theta(x)` clipped to the unit cube.
    pub fn cube(x: &[f64], theta: f64) -> Self {
        Hyperrectangle {
            bounds: x
                .iter()
                .map(|&v| ((v - theta).max(0.0), (v + theta).min(1.0)))
                .collect(),
        }
    }

    pub fn unit(d: usize) -> Self {
        Hyperrectangle {
            bounds: vec![(0.0, 1.0); d],
        }
    }

    pub fn dimension(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn interval(&self, i: usize) -> (f64, f64) {
        self.bounds[i]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.bounds.len()
            && x.iter().zip(&self.bounds).all(|(v, (a, b))| {
                *v >= a - crate::mechanisms::ENDPOINT_TOL && *v <= b + crate::mechanisms::ENDPOINT_TOL
            })
    }

    pub fn contains_rect(&self, other: &Hyperrectangle) -> bool {
        self.bounds.len() == other.bounds.len()
            && self
                .bounds
                .iter()
                .zip(&other.bounds)
                .all(|((a, b), (c, d))| a <= c && d <= b)
    }

    fn draw<R: Rng>(&self, rng: &mut R, out: &mut Vec<f64>) {
        for &(a, b) in &self.bounds {
            out.push(a + (b - a) * rng.random::<f64>());
        }
    }
}

impl fmt::Display for Hyperrectangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (a, b)) in self.bounds.iter().enumerate() {
            if i > 0 {
                write!(f, " x ")?;
            }
            write!(f, "[{a:.4}, {b:.4}]")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessVerdict {
    pub accepted: bool,
    pub misclass_rate: f64,
    pub samples_used: usize,
}

fn check_anchor<C: Classifier + ?Sized>(model: &C, x: &[f64]) -> Result<()> {
    if x.len() != model.dimension() {
        return Err(Error::Dimension {
            expected: model.dimension(),
            got: x.len(),
        });
    }
    if let Some(&v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Domain { what: "point coordinate", value: v });
    }
    Ok(())
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Tests one region with `n(omega, tau/2)` fresh uniform samples.
pub fn test_region<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    region: &Hyperrectangle,
    config: &RobustnessConfig,
) -> Result<RobustnessVerdict> {
    config.validate()?;
    check_anchor(model, x)?;
    if region.dimension() != x.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: region.dimension(),
        });
    }
    if !region.contains(x) {
        return Err(Error::OutsideRegion {
            point: x.to_vec(),
        });
    }
    Ok(run_test(model, model.label(x), region, config, 0))
}

fn run_test<C: Classifier + ?Sized>(
    model: &C,
    reference: usize,
    region: &Hyperrectangle,
    config: &RobustnessConfig,
    stream: u64,
) -> RobustnessVerdict {
    let n = config.samples_per_test();
    let d = region.dimension();
    let mut rng = stream_rng(config.seed, stream);
    let mut points = Vec::with_capacity(n * d);
    for _ in 0..n {
        region.draw(&mut rng, &mut points);
    }
    let misses = points
        .par_chunks(d)
        .filter(|p| model.label(p) != reference)
        .count();
    let misclass_rate = misses as f64 / n as f64;
    RobustnessVerdict {
        accepted: misclass_rate <= config.tau / 2.0,
        misclass_rate,
        samples_used: n,
    }
}

/// Largest accepted `l_inf` half-width found by bisection on `[0, 1]`.
///
/// `theta = 1` is tried first so that constant classifiers saturate at once;
/// each tested midpoint uses its own substream.
pub fn find_radius<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    config: &RobustnessConfig,
) -> Result<f64> {
    config.validate()?;
    check_anchor(model, x)?;
    let reference = model.label(x);
    let mut stream = RADIUS_STREAM;
    let mut test = |theta: f64| {
        stream += 1;
        run_test(model, reference, &Hyperrectangle::cube(x, theta), config, stream).accepted
    };
    if test(1.0) {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut best: f64 = 0.0;
    while hi - lo > config.kappa {
        let mid = 0.5 * (lo + hi);
        if test(mid) {
            best = best.max(mid);
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

/// Outcome of growing a robust box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub rect: Hyperrectangle,
    /// The final fresh-stream check of `rect`.
    pub verdict: RobustnessVerdict,
    pub regions_tested: usize,
}

/// Grows `B_theta(x)` face by face (dimension order, lower face first).
///
/// Each face moves out by `4 kappa` while the enlarged box is accepted; a
/// rejection halves the step, and the face stops once a step of `kappa` fails.
/// The result is re-tested on a fresh stream and, if that fails, pulled back
/// towards the starting box until it passes.
pub fn expand_hyperrectangle<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    theta: f64,
    config: &RobustnessConfig,
) -> Result<Expansion> {
    config.validate()?;
    check_anchor(model, x)?;
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::Parameter(format!("theta must lie in [0, 1] (got {theta})")));
    }
    let reference = model.label(x);
    let start = Hyperrectangle::cube(x, theta);
    let mut rect = start.clone();
    let mut stream = EXPAND_STREAM;
    let mut tested = 0;
    let d = x.len();

    for _ in 0..config.max_expand_passes {
        let mut grew = false;
        for i in 0..d {
            for upper in [false, true] {
                let mut step = 4.0 * config.kappa;
                while step >= config.kappa * (1.0 - 1e-9) {
                    let (a, b) = rect.bounds[i];
                    if (upper && b >= 1.0) || (!upper && a <= 0.0) {
                        break;
                    }
                    let mut candidate = rect.clone();
                    candidate.bounds[i] = if upper {
                        (a, (b + step).min(1.0))
                    } else {
                        ((a - step).max(0.0), b)
                    };
                    stream += 1;
                    tested += 1;
                    if run_test(model, reference, &candidate, config, stream).accepted {
                        rect = candidate;
                        grew = true;
                    } else {
                        step /= 2.0;
                    }
                }
            }
        }
        if !grew {
            break;
        }
    }

    let mut verify = VERIFY_STREAM;
    let mut check = |r: &Hyperrectangle| {
        verify += 1;
        tested += 1;
        run_test(model, reference, r, config, verify)
    };
    let mut verdict = check(&rect);
    let mut t = 1.0;
    while !verdict.accepted && t > 1e-3 {
        t /= 2.0;
        let shrunk = Hyperrectangle {
            bounds: start
                .bounds
                .iter()
                .zip(&rect.bounds)
                .map(|(s, r)| (s.0 + t * (r.0 - s.0), s.1 + t * (r.1 - s.1)))
                .collect(),
        };
        verdict = check(&shrunk);
        rect = shrunk;
    }
    if !verdict.accepted {
        rect = start;
        verdict = check(&rect);
    }
    Ok(Expansion {
        rect,
        verdict,
        regions_tested: tested,
    })
}

/// Grid cells whose corners do not all share a label.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCells {
    pub resolution: f64,
    /// `(i, j)` is the cell `[i h, (i+1) h] x [j h, (j+1) h]`.
    pub cells: Vec<(usize, usize)>,
}

impl BoundaryCells {
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_bounds(&self, (i, j): (usize, usize)) -> [(f64, f64); 2] {
        let h = self.resolution;
        [
            (i as f64 * h, ((i + 1) as f64 * h).min(1.0)),
            (j as f64 * h, ((j + 1) as f64 * h).min(1.0)),
        ]
    }

    /// Smallest `l_inf` distance from `x` to any boundary cell.
    pub fn min_linf_distance(&self, x: [f64; 2]) -> Option<f64> {
        self.cells
            .iter()
            .map(|&c| {
                let b = self.cell_bounds(c);
                (0..2)
                    .map(|k| (b[k].0 - x[k]).max(x[k] - b[k].1).max(0.0))
                    .fold(0.0, f64::max)
            })
            .min_by(f64::total_cmp)
    }
}

/// Brute-force scan of a 2D classifier on a grid of spacing `resolution`.
pub fn boundary_oracle_2d<C: Classifier + ?Sized>(model: &C, resolution: f64) -> Result<BoundaryCells> {
    if model.dimension() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            got: model.dimension(),
        });
    }
    if !(resolution > 0.0 && resolution <= 0.5) {
        return Err(Error::Parameter(format!(
            "resolution must lie in (0, 0.5] (got {resolution})"
        )));
    }
    let m = (1.0 / resolution).round() as usize;
    let coord = |i: usize| (i as f64 * resolution).min(1.0);
    let labels: Vec<Vec<usize>> = (0..=m)
        .into_par_iter()
        .map(|i| (0..=m).map(|j| model.label(&[coord(i), coord(j)])).collect())
        .collect();
    let cells = (0..m)
        .into_par_iter()
        .flat_map_iter(|i| {
            let labels = &labels;
            (0..m).filter_map(move |j| {
                let l = labels[i][j];
                let same = labels[i + 1][j] == l && labels[i][j + 1] == l && labels[i + 1][j + 1] == l;
                (!same).then_some((i, j))
            })
        })
        .collect();
    Ok(BoundaryCells { resolution, cells })
}
