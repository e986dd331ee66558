//! Independent numerical oracles shared by the integration tests. Nothing in
//! here calls into the library's own numerics.

#![allow(dead_code)]

use ldpu_core::mechanisms::MechanismSpec;

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Total mass of `M(x)`: quadrature of the density between breakpoints
/// (evaluated strictly inside each segment) plus all atoms.
pub fn total_mass(m: &MechanismSpec, x: f64) -> f64 {
    let cuts = m.breakpoints(x);
    let density = |t: f64| m.pdf_at(x, t).unwrap().density;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 1e-15 {
            continue;
        }
        let pad = (b - a) * 1e-12;
        total += simpson(&density, a + pad, b - pad, 1e-13);
    }
    total + m.atoms(x).unwrap().iter().map(|(_, p)| p).sum::<f64>()
}

/// `erfc` by the Maclaurin series of `erf` for small arguments and a
/// Lentz continued fraction for large ones.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.5 {
        let mut term = x;
        let mut sum = x;
        let x2 = x * x;
        for n in 1..200 {
            term *= -x2 / n as f64;
            let add = term / (2 * n + 1) as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        1.0 - 2.0 / std::f64::consts::PI.sqrt() * sum
    } else {
        // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + 1/2/(x + 1/(x + 3/2/(x + ...))))
        let tiny = 1e-300;
        let mut f = x;
        let mut c = x;
        let mut d = 0.0;
        for n in 1..500 {
            let an = n as f64 / 2.0;
            d = x + an * d;
            d = if d.abs() < tiny { tiny } else { d };
            c = x + an / c;
            c = if c.abs() < tiny { tiny } else { c };
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (-x * x).exp() / std::f64::consts::PI.sqrt() / f
    }
}

/// Upper tail of the standard normal.
pub fn normal_upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Kolmogorov-Smirnov distance between sorted samples and a CDF that may
/// have jumps; `left` gives `P[X < t]`.
pub fn ks_distance<F, G>(sorted: &[f64], cdf: F, left: G) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let t = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == t {
            j += 1;
        }
        let below = i as f64 / n;
        let upto = j as f64 / n;
        d = d.max((upto - cdf(t)).abs()).max((below - left(t)).abs());
        i = j;
    }
    d
}

/// Spearman rank correlation with average ranks for ties; `None` when a
/// series is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        None
    } else {
        Some(cov / (va * vb).sqrt())
    }
}

/// Largest ratio `p(x1, t) / p(x2, t)` over a grid, comparing densities with
/// densities and atoms with atoms. Entries that are zero on both sides are
/// skipped; a zero denominator with a positive numerator yields infinity.
pub fn max_ldp_ratio(m: &MechanismSpec, xs: &[f64], ts: &[f64]) -> f64 {
    let table: Vec<Vec<(f64, f64)>> = xs
        .iter()
        .map(|&x| {
            ts.iter()
                .map(|&t| {
                    let v = m.pdf_at(x, t).unwrap();
                    (v.density, v.atom)
                })
                .collect()
        })
        .collect();
    let ratio = |p: f64, q: f64| {
        if p == 0.0 && q == 0.0 {
            1.0
        } else if q == 0.0 {
            f64::INFINITY
        } else {
            p / q
        }
    };
    let mut worst: f64 = 0.0;
    for k in 0..ts.len() {
        let (mut dmax, mut dmin, mut amax, mut amin) =
            (0.0f64, f64::INFINITY, 0.0f64, f64::INFINITY);
        for row in &table {
            let (d, a) = row[k];
            dmax = dmax.max(d);
            dmin = dmin.min(d);
            amax = amax.max(a);
            amin = amin.min(a);
        }
        worst = worst.max(ratio(dmax, dmin)).max(ratio(amax, amin));
    }
    worst
}

/// Grid `{0, 1/(n-1), ..., 1}`.
pub fn unit_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}
