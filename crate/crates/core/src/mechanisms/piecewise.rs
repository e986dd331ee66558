//! Two-level piecewise-constant mechanisms on `[0, 1]` (PM and SW).
//!
//! Both put density `p` on a window `[l, r]` of width `2C` around the input and
//! density `p / e^eps` elsewhere. Near the domain edges the window is pinned to
//! `[0, 2C]` or `[1 - 2C, 1]`.

use rand::Rng;

/// Which piecewise instantiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PiecewiseKind {
    Pm,
    Sw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piecewise {
    pub kind: PiecewiseKind,
    /// Density on the window.
    pub high: f64,
    /// Density off the window, `high / e^eps`.
    pub low: f64,
    /// Half-width `C` of the window.
    pub half_width: f64,
}

impl Piecewise {
    pub fn pm(eps: f64) -> Self {
        // C = (e^{eps/2} - 1) / (2 e^eps - 2)
        let half_width = (eps / 2.0).exp_m1() / (2.0 * eps.exp_m1());
        let high = (eps / 2.0).exp();
        Piecewise {
            kind: PiecewiseKind::Pm,
            high,
            low: (-eps / 2.0).exp(),
            half_width,
        }
    }

    pub fn sw(eps: f64) -> Self {
        let high = eps.exp_m1() / eps;
        let em1 = eps.exp_m1();
        let half_width = sw_numerator(eps) / (2.0 * em1 * em1);
        Piecewise {
            kind: PiecewiseKind::Sw,
            high,
            low: high * (-eps).exp(),
            half_width,
        }
    }

    /// The high-density window `[l, r]` for input `x`.
    pub fn window(&self, x: f64) -> (f64, f64) {
        let c = self.half_width;
        if x < c {
            (0.0, 2.0 * c)
        } else if x <= 1.0 - c {
            (x - c, x + c)
        } else {
            (1.0 - 2.0 * c, 1.0)
        }
    }

    pub fn density(&self, x: f64, t: f64) -> f64 {
        if !(0.0..=1.0).contains(&t) {
            return 0.0;
        }
        let (l, r) = self.window(x);
        if t >= l && t <= r {
            self.high
        } else {
            self.low
        }
    }

    /// Integral of the two-level density over `[a, b]`.
    pub fn interval(&self, x: f64, a: f64, b: f64) -> f64 {
        let (l, r) = self.window(x);
        let overlap = (b.min(r) - a.max(l)).max(0.0);
        ((b - a) * self.low + overlap * (self.high - self.low)).clamp(0.0, 1.0)
    }

    pub fn draw<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> f64 {
        let (l, r) = self.window(x);
        let width = r - l;
        let mass_high = width * self.high;
        if rng.random::<f64>() < mass_high {
            l + width * rng.random::<f64>()
        } else {
            // uniform over [0, l) U (r, 1]
            let v = (1.0 - width) * rng.random::<f64>();
            if v < l {
                v
            } else {
                v + width
            }
        }
    }
}

/// `e^eps (eps - 1) + 1`, evaluated by its power series for small `eps`
/// where the closed form cancels.
fn sw_numerator(eps: f64) -> f64 {
    if eps > 0.1 {
        return eps.exp() * (eps - 1.0) + 1.0;
    }
    // sum_{m >= 2} eps^m (m - 1) / m!
    let mut term = eps; // eps^m / m! at m = 1
    let mut sum = 0.0;
    for m in 2..30 {
        term *= eps / m as f64;
        sum += term * (m - 1) as f64;
    }
    sum
}
