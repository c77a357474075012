//! Small numerical kernels shared across the crate.
//!
//! Everything here is deterministic: fixed iteration counts or fixed
//! summation order, no randomness, no thread-order dependence.

use crate::error::{Error, Result};

/// Compensated (Neumaier) summation over an iterator, in iteration order.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = NeumaierAcc::new();
    for v in values {
        acc.add(v);
    }
    acc.total()
}

/// Running compensated accumulator for incremental totals.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierAcc {
    sum: f64,
    comp: f64,
}

impl NeumaierAcc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `n` evenly spaced values from `a` to `b` inclusive. `n >= 2`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let h = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + h * i as f64 })
        .collect()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
///
/// Newton iteration on the Legendre recurrence; accurate to machine
/// precision for the orders used here (say up to 64).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess for the i-th positive root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and its derivative by upward recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = pk;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Finite-difference weights for the `m`-th derivative at `z` on the nodes
/// `xs` (Fornberg's algorithm). Exact for polynomials up to degree
/// `xs.len() - 1`.
pub fn fd_weights(z: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    assert!(n > m, "need more nodes than the derivative order");
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// First derivative of uniformly spaced samples, fourth order.
///
/// Five-point centered stencil in the interior, one-sided five-point
/// stencils at the first and last two samples. Needs at least 5 samples.
pub fn deriv_uniform(values: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 5 {
        return Err(Error::TooFewSamples { needed: 5, got: n });
    }
    let mut out = vec![0.0; n];
    // Stencils on offsets 0..5 evaluated at position p, unit spacing.
    let edge: Vec<Vec<f64>> = (0..5)
        .map(|p| fd_weights(p as f64, &[0.0, 1.0, 2.0, 3.0, 4.0], 1))
        .collect();
    for i in 0..n {
        let (base, w) = if i < 2 {
            (0, &edge[i])
        } else if i >= n - 2 {
            (n - 5, &edge[i + 5 - n])
        } else {
            (i - 2, &edge[2])
        };
        let mut s = 0.0;
        for (k, wk) in w.iter().enumerate() {
            s += wk * values[base + k];
        }
        out[i] = s / h;
    }
    Ok(out)
}

/// Max of `|v[i+s] - 2 v[i] + v[i-s]|` over the valid index range.
pub fn max_second_difference(values: &[f64], stride: usize) -> f64 {
    let n = values.len();
    if n < 2 * stride + 1 {
        return 0.0;
    }
    let mut m: f64 = 0.0;
    for i in stride..n - stride {
        m = m.max((values[i + stride] - 2.0 * values[i] + values[i - stride]).abs());
    }
    m
}

/// Cumulative integral of `f` from `x0` over `n` uniform steps of size `h`,
/// one Simpson panel per step (midpoint evaluations). Returns `n + 1`
/// values starting at 0.
pub fn cumulative_simpson_fn<F: Fn(f64) -> f64>(f: F, x0: f64, h: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = NeumaierAcc::new();
    out.push(0.0);
    for i in 0..n {
        let a = x0 + h * i as f64;
        let panel = (f(a) + 4.0 * f(a + 0.5 * h) + f(a + h)) * (h / 6.0);
        acc.add(panel);
        out.push(acc.total());
    }
    out
}

/// Cumulative integral of uniformly spaced samples, fourth order.
///
/// Each interval is integrated with the cubic through its four nearest
/// samples. Needs at least 4 samples. Returns `y.len()` values starting
/// at 0.
pub fn cumulative_integral_samples(y: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = y.len();
    if n < 4 {
        return Err(Error::TooFewSamples { needed: 4, got: n });
    }
    let mut out = Vec::with_capacity(n);
    let mut acc = NeumaierAcc::new();
    out.push(0.0);
    let c = h / 24.0;
    for i in 0..n - 1 {
        let panel = if i == 0 {
            c * (9.0 * y[0] + 19.0 * y[1] - 5.0 * y[2] + y[3])
        } else if i == n - 2 {
            c * (9.0 * y[n - 1] + 19.0 * y[n - 2] - 5.0 * y[n - 3] + y[n - 4])
        } else {
            c * (-y[i - 1] + 13.0 * y[i] + 13.0 * y[i + 1] - y[i + 2])
        };
        acc.add(panel);
        out.push(acc.total());
    }
    Ok(out)
}

/// Total integral of uniformly spaced samples, fourth order.
pub fn integral_samples(y: &[f64], h: f64) -> Result<f64> {
    Ok(*cumulative_integral_samples(y, h)?.last().unwrap())
}

/// Savitzky-Golay first derivative: local least-squares quadratic over a
/// window of `2 w + 1` samples, evaluated at each sample. Windows slide at
/// the edges. Returns the derivative and the per-point RMS fit residual.
pub fn sg_derivative(values: &[f64], h: f64, w: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = values.len();
    let len = 2 * w + 1;
    if n < len {
        return Err(Error::TooFewSamples { needed: len, got: n });
    }
    if w == 0 {
        return Err(Error::TooFewSamples { needed: 3, got: 1 });
    }
    let mut deriv = vec![0.0; n];
    let mut resid = vec![0.0; n];
    for i in 0..n {
        let i0 = i.saturating_sub(w).min(n - len);
        // Offsets are measured from the evaluation point in index units.
        let mut s = [0.0; 5];
        let mut b = [0.0; 3];
        for j in 0..len {
            let xi = (i0 + j) as f64 - i as f64;
            let mut p = 1.0;
            for sk in s.iter_mut() {
                *sk += p;
                p *= xi;
            }
            let y = values[i0 + j];
            b[0] += y;
            b[1] += y * xi;
            b[2] += y * xi * xi;
        }
        let a = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
        let c = solve3(a, b).ok_or_else(|| {
            Error::QuadratureFailure("degenerate quadratic fit window".into())
        })?;
        deriv[i] = c[1] / h;
        let mut rss = 0.0;
        for j in 0..len {
            let xi = (i0 + j) as f64 - i as f64;
            let fit = c[0] + c[1] * xi + c[2] * xi * xi;
            rss += (fit - values[i0 + j]).powi(2);
        }
        resid[i] = (rss / len as f64).sqrt();
    }
    Ok((deriv, resid))
}

/// Dense 3x3 linear solve with partial pivoting. `None` if singular.
pub fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for col in (0..3).rev() {
        let mut s = b[col];
        for k in col + 1..3 {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    Some(x)
}

/// Root of increasing `f` with `f(lo) <= target <= f(hi)`: bisection with
/// Newton acceleration. Stops when `|f(x) - target| <= ftol` or the
/// bracket collapses to rounding width, whichever comes first.
pub fn solve_increasing<F, D>(f: F, df: D, mut lo: f64, mut hi: f64, target: f64, ftol: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x) - target;
        if fx.abs() <= ftol {
            return x;
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo <= f64::EPSILON * (1.0 + lo.abs().max(hi.abs())) {
            return 0.5 * (lo + hi);
        }
        let d = df(x);
        let newton = if d > 0.0 { x - fx / d } else { f64::NAN };
        x = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    x
}

/// Argmax refinement by golden-section search on `[a, b]`.
/// Returns `(argmax, max)` after `iters` contractions.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
