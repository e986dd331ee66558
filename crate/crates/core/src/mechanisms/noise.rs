//! Input-independent symmetric noise (Laplace, Gaussian) followed by clamping
//! to `[0, 1]`.
//!
//! Clamping moves the tail mass below 0 and above 1 onto point masses at the
//! domain edges, so the output law is a density on `(0, 1)` plus two atoms.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// The additive noise law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    Laplace { scale: f64 },
    Gaussian { sigma: f64 },
}

impl Noise {
    /// CDF of the raw (unclamped) noise at `z`.
    pub fn cdf(&self, z: f64) -> f64 {
        match *self {
            Noise::Laplace { scale } => {
                if z < 0.0 {
                    0.5 * (z / scale).exp()
                } else {
                    1.0 - 0.5 * (-z / scale).exp()
                }
            }
            Noise::Gaussian { sigma } => standard_normal_cdf(z / sigma),
        }
    }

    /// Lower tail `P[noise <= z]` computed without cancellation for `z <= 0`.
    fn lower_tail(&self, z: f64) -> f64 {
        if z <= 0.0 {
            self.cdf(z)
        } else {
            1.0 - self.cdf(-z)
        }
    }

    pub fn pdf(&self, z: f64) -> f64 {
        match *self {
            Noise::Laplace { scale } => (-z.abs() / scale).exp() / (2.0 * scale),
            Noise::Gaussian { sigma } => {
                let u = z / sigma;
                (-0.5 * u * u).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Noise::Laplace { scale } => {
                // inverse CDF on u in (-1/2, 1/2)
                let u: f64 = rng.random::<f64>() - 0.5;
                let mag = 1.0 - 2.0 * u.abs();
                -scale * u.signum() * mag.max(f64::MIN_POSITIVE).ln()
            }
            Noise::Gaussian { sigma } => Normal::new(0.0, sigma)
                .expect("sigma validated at construction")
                .sample(rng),
        }
    }
}

/// `Phi(z)` for the standard normal.
pub fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Noise mechanism clamped to the unit interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampedNoise {
    pub noise: Noise,
}

impl ClampedNoise {
    /// Point mass the clamp puts on 0.
    pub fn atom_low(&self, x: f64) -> f64 {
        self.noise.lower_tail(-x)
    }

    /// Point mass the clamp puts on 1 (symmetry of the noise).
    pub fn atom_high(&self, x: f64) -> f64 {
        self.noise.lower_tail(x - 1.0)
    }

    pub fn density(&self, x: f64, t: f64) -> f64 {
        if t <= 0.0 || t >= 1.0 {
            // the density lives on the open interval; the edges carry atoms
            0.0
        } else {
            self.noise.pdf(t - x)
        }
    }

    /// `P[a <= M(x) <= b]` with atoms counted when the endpoints touch 0 or 1.
    pub fn interval(&self, x: f64, a: f64, b: f64, tol: f64) -> f64 {
        let below_a = if a <= tol { 0.0 } else { self.noise.lower_tail(a - x) };
        let upto_b = if b >= 1.0 - tol {
            1.0
        } else {
            self.noise.lower_tail(b - x)
        };
        (upto_b - below_a).clamp(0.0, 1.0)
    }

    pub fn cdf(&self, x: f64, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else if t >= 1.0 {
            1.0
        } else {
            self.noise.lower_tail(t - x)
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> f64 {
        (x + self.noise.draw(rng)).clamp(0.0, 1.0)
    }
}

/// Noise scale that makes Gaussian noise `(eps, delta)`-PAC LDP on `[0, 1]`.
///
/// Positive root of `eps * s - 1 / (2 s) = sqrt(-2 ln(delta / 2))`.
pub fn gaussian_sigma(eps: f64, delta: f64) -> Result<f64> {
    if !(eps.is_finite() && eps >= super::MIN_EPSILON) {
        return Err(Error::Parameter(format!(
            "epsilon must be >= {} (got {eps})",
            super::MIN_EPSILON
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!(
            "Gaussian delta must lie in (0, 1) (got {delta})"
        )));
    }
    let c2 = -2.0 * (delta / 2.0).ln();
    Ok((c2.sqrt() + (c2 + 2.0 * eps).sqrt()) / (2.0 * eps))
}

/// The same scale written as `(sqrt2/2) (sqrt(ln(2/delta) + eps) + sqrt(ln(2/delta))) / eps`.
pub fn gaussian_sigma_alt(eps: f64, delta: f64) -> f64 {
    let l = (2.0 / delta).ln();
    std::f64::consts::FRAC_1_SQRT_2 * ((l + eps).sqrt() + l.sqrt()) / eps
}
