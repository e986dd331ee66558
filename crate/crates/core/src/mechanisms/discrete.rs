//! Mechanisms on the evenly spaced grid `{ i / (k - 1) : i = 0..k-1 }`.

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscreteKind {
    /// k-ary randomized response.
    Krr,
    /// Exponential mechanism with score `-|x - t|` (sensitivity 1).
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discrete {
    pub kind: DiscreteKind,
    pub epsilon: f64,
    pub k: usize,
}

impl Discrete {
    pub fn point(&self, i: usize) -> f64 {
        i as f64 / (self.k - 1) as f64
    }

    /// Index of the grid point nearest to `x` (halves round up).
    pub fn snap_index(&self, x: f64) -> usize {
        let i = (x * (self.k - 1) as f64).round();
        (i.max(0.0) as usize).min(self.k - 1)
    }

    /// Output distribution for input `x`, one mass per grid point.
    pub fn masses(&self, x: f64) -> Vec<f64> {
        let s = self.snap_index(x);
        match self.kind {
            DiscreteKind::Krr => {
                // e^eps / (k - 1 + e^eps) on the input, 1 / (k - 1 + e^eps) elsewhere,
                // written with e^-eps so large eps stays finite
                let damp = (-self.epsilon).exp();
                let denom = 1.0 + (self.k - 1) as f64 * damp;
                let keep = 1.0 / denom;
                let other = damp / denom;
                (0..self.k).map(|i| if i == s { keep } else { other }).collect()
            }
            DiscreteKind::Exponential => {
                let centre = self.point(s);
                let w: Vec<f64> = (0..self.k)
                    .map(|i| (-self.epsilon * (self.point(i) - centre).abs() / 2.0).exp())
                    .collect();
                let z: f64 = w.iter().sum();
                w.into_iter().map(|v| v / z).collect()
            }
        }
    }

    /// Sum of masses on grid points inside `[a - tol, b + tol]`.
    pub fn interval(&self, x: f64, a: f64, b: f64, tol: f64) -> f64 {
        let masses = self.masses(x);
        let p: f64 = masses
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let g = self.point(*i);
                g >= a - tol && g <= b + tol
            })
            .map(|(_, m)| m)
            .sum();
        p.clamp(0.0, 1.0)
    }

    /// Grid index within `tol` of `t`, if any.
    pub fn index_of(&self, t: f64, tol: f64) -> Option<usize> {
        let i = self.snap_index(t.clamp(0.0, 1.0));
        ((self.point(i) - t).abs() <= tol).then_some(i)
    }

    pub fn cdf(&self, x: f64, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        self.masses(x)
            .iter()
            .enumerate()
            .filter(|(i, _)| self.point(*i) <= t + super::ENDPOINT_TOL)
            .map(|(_, m)| m)
            .sum::<f64>()
            .min(1.0)
    }
}

/// Cumulative table for inversion sampling; O(k) to build, O(log k) per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeTable {
    cum: Vec<f64>,
    k: usize,
}

impl CumulativeTable {
    pub fn new(d: &Discrete, x: f64) -> Self {
        let mut acc = 0.0;
        let cum = d
            .masses(x)
            .into_iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        CumulativeTable { cum, k: d.k }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = *self.cum.last().expect("k >= 2");
        let u = rng.random::<f64>() * total;
        let i = self.cum.partition_point(|&c| c <= u).min(self.k - 1);
        i as f64 / (self.k - 1) as f64
    }
}
