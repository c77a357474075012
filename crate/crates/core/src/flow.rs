//! Characteristic curves of an intrinsic graph.
//!
//! Projected to the `(x, t)` plane, the characteristic direction `(1, g)`
//! of a graph field integrates to leaves `t'(xi) = 2 u(xi, t(xi))`: along a
//! leaf, `dt - 2u dx = 0`, and the graph map lifts the leaf to a horizontal
//! curve on the surface. Stacking leaves started from a vertical segment
//! `t = b + eps` produces a chart `G(xi, eps) = (xi, t_eps(xi))` whose
//! `eps`-derivative is positive wherever the flow is well posed.
//!
//! Along every leaf the composite `M = F(g)` changes at the rate of the
//! prescribed curvature: `dM/dxi = f`. That one-dimensional ODE drives both
//! directions implemented here: estimating `f` from a sampled surface, and
//! reconstructing a slope profile from a prescribed `f`.

use rayon::prelude::*;
use serde::Serialize;

use crate::convex::ConvexBody;
use crate::error::{Error, Result};
use crate::graph::{self, GraphField, QuadConfig, TestField};
use crate::heis::{HeisenbergCurve, HeisenbergPoint};
use crate::numerics;

/// Default smoothing half-width for [`estimate_f`].
pub const DEFAULT_WINDOW: usize = 7;

/// Scalar samples along a leaf parameter grid.
#[derive(Clone, Debug, Serialize)]
pub struct CurveScalar {
    pub params: Vec<f64>,
    pub values: Vec<f64>,
}

/// One characteristic leaf through `(a, b)`.
#[derive(Clone, Debug)]
pub struct Leaf {
    a: f64,
    b: f64,
    step: f64,
    /// Lattice index of `xs[0]` relative to `a` (xi_k = a + k step).
    k0: i64,
    xs: Vec<f64>,
    ts: Vec<f64>,
    /// Slope `g` of the graph along the leaf.
    gs: Vec<f64>,
    /// Field value `u` along the leaf.
    us: Vec<f64>,
    ode_residual: f64,
    truncated: bool,
}

impl Leaf {
    pub fn base(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ts(&self) -> &[f64] {
        &self.ts
    }

    pub fn slopes(&self) -> &[f64] {
        &self.gs
    }

    pub fn field_values(&self) -> &[f64] {
        &self.us
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Max of `|t' - 2u|` over the samples, with `t'` from differences.
    pub fn ode_residual(&self) -> f64 {
        self.ode_residual
    }

    /// True when integration stopped early because the leaf left the
    /// domain rectangle.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    fn lattice_index(&self, i: usize) -> i64 {
        self.k0 + i as i64
    }

    fn position_of(&self, k: i64) -> Option<usize> {
        let i = k - self.k0;
        if i >= 0 && (i as usize) < self.xs.len() {
            Some(i as usize)
        } else {
            None
        }
    }

    /// The leaf lifted to the surface: `(xi, u, t - xi u)`, parameterized
    /// by `xi`. Horizontal by construction.
    pub fn lift(&self) -> Result<HeisenbergCurve> {
        let points = (0..self.len())
            .map(|i| {
                HeisenbergPoint::new(
                    self.xs[i],
                    self.us[i],
                    self.ts[i] - self.xs[i] * self.us[i],
                )
            })
            .collect();
        HeisenbergCurve::new(self.xs.clone(), points)
    }

    /// The lifted leaf resampled to uniform arc length. The horizontal
    /// speed in `xi` is `sqrt(1 + g^2)`; coordinates are re-interpolated
    /// with cubic Hermite segments using the exact parametric derivatives
    /// `(1, g, u - xi g)`, so the resampled speed deviates from 1 only at
    /// interpolation order.
    pub fn lift_unit_speed(&self) -> Result<HeisenbergCurve> {
        let n = self.len();
        if n < 5 {
            return Err(Error::TooFewSamples { needed: 5, got: n });
        }
        let speeds: Vec<f64> = self.gs.iter().map(|g| (1.0 + g * g).sqrt()).collect();
        let arc = numerics::cumulative_integral_samples(&speeds, self.step)?;
        let total = arc[n - 1];
        let ys: Vec<f64> = self.us.clone();
        let ts3: Vec<f64> = (0..n).map(|i| self.ts[i] - self.xs[i] * self.us[i]).collect();
        let dy = &self.gs;
        let dt3: Vec<f64> = (0..n)
            .map(|i| self.us[i] - self.xs[i] * self.gs[i])
            .collect();

        let m = n;
        let ds = total / (m - 1) as f64;
        let mut params = Vec::with_capacity(m);
        let mut points = Vec::with_capacity(m);
        for j in 0..m {
            let s = ds * j as f64;
            // Locate the xi-interval containing arc length s.
            let seg = match arc.binary_search_by(|v| v.partial_cmp(&s).unwrap()) {
                Ok(i) => i.min(n - 2),
                Err(i) => i.saturating_sub(1).min(n - 2),
            };
            // Newton on the Hermite model of arc(xi) within the segment.
            let h = self.step;
            let (s0, s1) = (arc[seg], arc[seg + 1]);
            let (v0, v1) = (speeds[seg], speeds[seg + 1]);
            let mut z = if s1 > s0 { (s - s0) / (s1 - s0) } else { 0.5 };
            for _ in 0..4 {
                let sv = hermite(s0, s1, v0 * h, v1 * h, z);
                let dv = hermite_d(s0, s1, v0 * h, v1 * h, z) / h;
                if dv > 0.0 {
                    z -= (sv - s) / (dv * h);
                }
                z = z.clamp(0.0, 1.0);
            }
            let xi = self.xs[seg] + z * h;
            let y = hermite(ys[seg], ys[seg + 1], dy[seg] * h, dy[seg + 1] * h, z);
            let t3 = hermite(ts3[seg], ts3[seg + 1], dt3[seg] * h, dt3[seg + 1] * h, z);
            params.push(s);
            points.push(HeisenbergPoint::new(xi, y, t3));
        }
        HeisenbergCurve::new(params, points)
    }
}

/// Cubic Hermite value on `[0, 1]`; `d0, d1` are endpoint derivatives
/// already scaled by the interval length.
fn hermite(y0: f64, y1: f64, d0: f64, d1: f64, z: f64) -> f64 {
    let z2 = z * z;
    let z3 = z2 * z;
    y0 * (2.0 * z3 - 3.0 * z2 + 1.0)
        + d0 * (z3 - 2.0 * z2 + z)
        + y1 * (-2.0 * z3 + 3.0 * z2)
        + d1 * (z3 - z2)
}

fn hermite_d(y0: f64, y1: f64, d0: f64, d1: f64, z: f64) -> f64 {
    let z2 = z * z;
    y0 * (6.0 * z2 - 6.0 * z)
        + d0 * (3.0 * z2 - 4.0 * z + 1.0)
        + y1 * (-6.0 * z2 + 6.0 * z)
        + d1 * (3.0 * z2 - 2.0 * z)
}

enum Stepper {
    /// Classic fourth order; for fields with exact derivatives.
    Rk4,
    /// Heun with half-step comparison and subdivision; for sampled fields
    /// that are only Lipschitz.
    HeunAdaptive,
}

fn advance(u: &GraphField, stepper: &Stepper, xi: f64, t: f64, h: f64) -> Option<f64> {
    let rect = u.rect();
    let eval = |x: f64, t: f64| -> Option<f64> {
        if rect.contains(x, t) {
            Some(2.0 * u.value(x, t).ok()?)
        } else {
            None
        }
    };
    match stepper {
        Stepper::Rk4 => {
            let k1 = eval(xi, t)?;
            let k2 = eval(xi + 0.5 * h, t + 0.5 * h * k1)?;
            let k3 = eval(xi + 0.5 * h, t + 0.5 * h * k2)?;
            let k4 = eval(xi + h, t + h * k3)?;
            Some(t + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        }
        Stepper::HeunAdaptive => heun_adaptive(&eval, xi, t, h, 10),
    }
}

fn heun_step(eval: &dyn Fn(f64, f64) -> Option<f64>, xi: f64, t: f64, h: f64) -> Option<f64> {
    let k1 = eval(xi, t)?;
    let pred = t + h * k1;
    let k2 = eval(xi + h, pred)?;
    Some(t + 0.5 * h * (k1 + k2))
}

fn heun_adaptive(
    eval: &dyn Fn(f64, f64) -> Option<f64>,
    xi: f64,
    t: f64,
    h: f64,
    depth: usize,
) -> Option<f64> {
    let full = heun_step(eval, xi, t, h)?;
    let mid = heun_step(eval, xi, t, 0.5 * h)?;
    let two = heun_step(eval, xi + 0.5 * h, mid, 0.5 * h)?;
    if depth == 0 || (two - full).abs() <= 1e-12 * (1.0 + t.abs()) {
        Some(two)
    } else {
        let m = heun_adaptive(eval, xi, t, 0.5 * h, depth - 1)?;
        heun_adaptive(eval, xi + 0.5 * h, m, 0.5 * h, depth - 1)
    }
}

struct RawLeaf {
    k0: i64,
    xs: Vec<f64>,
    ts: Vec<f64>,
    truncated: bool,
}

/// Integrates in both directions on the lattice `xi_k = a + k step`,
/// stopping early (flagged) when the solution leaves the domain.
fn integrate_raw(
    u: &GraphField,
    a: f64,
    b: f64,
    span: (f64, f64),
    step: f64,
    stepper: &Stepper,
) -> RawLeaf {
    let tiny = 1e-9 * step;
    let n_right = ((span.1 - a) / step + tiny).floor().max(0.0) as usize;
    let n_left = ((a - span.0) / step + tiny).floor().max(0.0) as usize;

    let mut truncated = false;
    let mut right_ts = Vec::with_capacity(n_right + 1);
    right_ts.push(b);
    let mut t = b;
    for k in 0..n_right {
        let xi = a + k as f64 * step;
        match advance(u, stepper, xi, t, step) {
            Some(next) if u.rect().contains(xi + step, next) => {
                t = next;
                right_ts.push(t);
            }
            _ => {
                truncated = true;
                break;
            }
        }
    }
    let mut left_ts = Vec::with_capacity(n_left);
    t = b;
    for k in 0..n_left {
        let xi = a - k as f64 * step;
        match advance(u, stepper, xi, t, -step) {
            Some(next) if u.rect().contains(xi - step, next) => {
                t = next;
                left_ts.push(t);
            }
            _ => {
                truncated = true;
                break;
            }
        }
    }

    let k0 = -(left_ts.len() as i64);
    let mut xs = Vec::with_capacity(left_ts.len() + right_ts.len());
    let mut ts = Vec::with_capacity(left_ts.len() + right_ts.len());
    for (i, &tv) in left_ts.iter().rev().enumerate() {
        let k = k0 + i as i64;
        xs.push(a + k as f64 * step);
        ts.push(tv);
    }
    for (i, &tv) in right_ts.iter().enumerate() {
        xs.push(a + i as f64 * step);
        ts.push(tv);
    }
    RawLeaf {
        k0,
        xs,
        ts,
        truncated,
    }
}

fn stepper_for(u: &GraphField) -> Stepper {
    if u.grid_shape().is_some() {
        Stepper::HeunAdaptive
    } else {
        Stepper::Rk4
    }
}

/// Integrates the leaf through `(a, b)` across `span` with a fixed output
/// lattice of spacing `step`.
///
/// A probe started a small offset above `b` must stay strictly above the
/// leaf everywhere; scalar flows cannot cross, so a crossing means the step
/// cannot resolve the field and is reported as [`Error::StepTooLarge`].
pub fn integrate_leaf(
    u: &GraphField,
    a: f64,
    b: f64,
    span: (f64, f64),
    step: f64,
) -> Result<Leaf> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::GridMismatch(format!("bad step {step}")));
    }
    if !(span.0 <= a && a <= span.1) {
        return Err(Error::GridMismatch(format!(
            "span [{}, {}] does not contain the base abscissa {a}",
            span.0, span.1
        )));
    }
    let rect = u.rect();
    if !rect.contains(a, b) {
        return Err(Error::StartOutOfDomain { x: a, t: b });
    }
    let stepper = stepper_for(u);
    let raw = integrate_raw(u, a, b, span, step, &stepper);

    // Comparison probe: a nearby start on whichever side stays in domain.
    let delta = 1e-6 * (1.0 + b.abs());
    let (probe_b, upward) = if rect.contains(a, b + delta) {
        (b + delta, true)
    } else {
        (b - delta, false)
    };
    let probe = integrate_raw(u, a, probe_b, span, step, &stepper);
    for (i, k) in (raw.k0..raw.k0 + raw.xs.len() as i64).enumerate() {
        let pi = k - probe.k0;
        if pi < 0 || pi as usize >= probe.ts.len() {
            continue;
        }
        let ordered = if upward {
            probe.ts[pi as usize] > raw.ts[i]
        } else {
            probe.ts[pi as usize] < raw.ts[i]
        };
        if !ordered {
            return Err(Error::StepTooLarge { xi: raw.xs[i] });
        }
    }

    let n = raw.xs.len();
    let mut gs = Vec::with_capacity(n);
    let mut us = Vec::with_capacity(n);
    for i in 0..n {
        gs.push(u.slope(raw.xs[i], raw.ts[i])?);
        us.push(u.value(raw.xs[i], raw.ts[i])?);
    }
    let ode_residual = if n >= 5 {
        let dt = numerics::deriv_uniform(&raw.ts, step)?;
        dt.iter()
            .zip(&us)
            .map(|(d, uu)| (d - 2.0 * uu).abs())
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    Ok(Leaf {
        a,
        b,
        step,
        k0: raw.k0,
        xs: raw.xs,
        ts: raw.ts,
        gs,
        us,
        ode_residual,
        truncated: raw.truncated,
    })
}

/// A bundle of leaves started from the vertical segment `t = b + eps`.
#[derive(Clone, Debug)]
pub struct CharacteristicFamily {
    eps: Vec<f64>,
    leaves: Vec<Leaf>,
    /// `jacobian[i]` aligns with `leaves[i + 1]`; NaN where a neighbour
    /// leaf is truncated away.
    jacobian: Vec<Vec<f64>>,
}

/// Integrates `n_leaves` leaves with starts `b + eps` for `eps` uniform
/// over `eps_range`, then differentiates the stack in `eps`.
///
/// Adjacent leaves must stay strictly ordered at every shared abscissa;
/// the first violation is reported with its location.
pub fn build_family(
    u: &GraphField,
    a: f64,
    b: f64,
    eps_range: (f64, f64),
    n_leaves: usize,
    span: (f64, f64),
    step: f64,
) -> Result<CharacteristicFamily> {
    if n_leaves < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: n_leaves,
        });
    }
    if !(eps_range.1 > eps_range.0) {
        return Err(Error::GridMismatch("empty eps range".into()));
    }
    let d_eps = (eps_range.1 - eps_range.0) / (n_leaves - 1) as f64;
    let eps: Vec<f64> = (0..n_leaves)
        .map(|i| eps_range.0 + d_eps * i as f64)
        .collect();
    let leaves: Vec<Leaf> = eps
        .par_iter()
        .map(|&e| integrate_leaf(u, a, b + e, span, step))
        .collect::<Result<_>>()?;

    for w in leaves.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        for i in 0..lo.len() {
            let k = lo.lattice_index(i);
            if let Some(j) = hi.position_of(k) {
                if hi.ts[j] <= lo.ts[i] {
                    return Err(Error::OrderingViolation { xi: lo.xs[i] });
                }
            }
        }
    }

    let mut jacobian = Vec::with_capacity(n_leaves.saturating_sub(2));
    for i in 1..n_leaves - 1 {
        let mid = &leaves[i];
        let mut jac = vec![f64::NAN; mid.len()];
        for j in 0..mid.len() {
            let k = mid.lattice_index(j);
            if let (Some(lo), Some(hi)) = (leaves[i - 1].position_of(k), leaves[i + 1].position_of(k)) {
                jac[j] = (leaves[i + 1].ts[hi] - leaves[i - 1].ts[lo]) / (2.0 * d_eps);
            }
        }
        jacobian.push(jac);
    }

    Ok(CharacteristicFamily {
        eps,
        leaves,
        jacobian,
    })
}

impl CharacteristicFamily {
    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    /// Centered `eps`-derivative along interior leaf `i + 1`; NaN where a
    /// neighbour is truncated.
    pub fn jacobian(&self, i: usize) -> &[f64] {
        &self.jacobian[i]
    }

    pub fn interior_count(&self) -> usize {
        self.jacobian.len()
    }

    /// Smallest defined jacobian sample across the family.
    pub fn jacobian_min(&self) -> f64 {
        self.jacobian
            .iter()
            .flatten()
            .copied()
            .filter(|v| v.is_finite())
            .fold(f64::INFINITY, f64::min)
    }

    fn eps_spacing(&self) -> f64 {
        self.eps[1] - self.eps[0]
    }

    /// Jacobian at any leaf for integration purposes: centered inside,
    /// second-order one-sided at the first and last leaf.
    fn jacobian_for_integration(&self, leaf_idx: usize, k: i64) -> Option<f64> {
        let n = self.leaves.len();
        let d = self.eps_spacing();
        let t_at = |li: usize| -> Option<f64> {
            self.leaves[li]
                .position_of(k)
                .map(|p| self.leaves[li].ts[p])
        };
        if leaf_idx == 0 {
            Some((-3.0 * t_at(0)? + 4.0 * t_at(1)? - t_at(2)?) / (2.0 * d))
        } else if leaf_idx == n - 1 {
            Some((3.0 * t_at(n - 1)? - 4.0 * t_at(n - 2)? + t_at(n - 3)?) / (2.0 * d))
        } else {
            Some((t_at(leaf_idx + 1)? - t_at(leaf_idx - 1)?) / (2.0 * d))
        }
    }
}

/// Compares `integral of psi dx dt` computed directly over the support
/// with the pullback `integral of psi(G) * jacobian d(xi) d(eps)` over the
/// leaf stack. Both numbers are returned; agreement validates the chart.
pub fn change_of_variables_check(
    family: &CharacteristicFamily,
    psi: &dyn TestField,
) -> Result<(f64, f64)> {
    let sup = psi.support();
    let leaves = family.leaves();
    let step = leaves[0].step;

    // Common lattice range over all leaves.
    let k_lo = leaves
        .iter()
        .map(|l| l.k0)
        .max()
        .ok_or(Error::TooFewSamples { needed: 3, got: 0 })?;
    let k_hi = leaves
        .iter()
        .map(|l| l.k0 + l.len() as i64 - 1)
        .min()
        .unwrap();
    if k_hi - k_lo < 4 {
        return Err(Error::TooFewSamples {
            needed: 5,
            got: (k_hi - k_lo + 1).max(0) as usize,
        });
    }
    let (a, _) = leaves[0].base();
    let xi_of = |k: i64| a + k as f64 * step;

    // The support must sit inside the swept region: horizontally within
    // the common lattice, vertically between the bottom and top leaves.
    if sup.x0 < xi_of(k_lo) - 1e-12 || sup.x1 > xi_of(k_hi) + 1e-12 {
        return Err(Error::SupportOutsideChart);
    }
    let bottom = &leaves[0];
    let top = &leaves[leaves.len() - 1];
    for k in k_lo..=k_hi {
        let xi = xi_of(k);
        if xi < sup.x0 - step || xi > sup.x1 + step {
            continue;
        }
        let bi = bottom.position_of(k).ok_or(Error::SupportOutsideChart)?;
        let ti = top.position_of(k).ok_or(Error::SupportOutsideChart)?;
        if bottom.ts[bi] > sup.t0 || top.ts[ti] < sup.t1 {
            return Err(Error::SupportOutsideChart);
        }
    }

    let direct = graph::integrate(
        &sup,
        &QuadConfig {
            cells_x: 8,
            cells_t: 8,
            order: 12,
        },
        |x, t| psi.value(x, t),
    )?;

    let mut per_leaf = Vec::with_capacity(leaves.len());
    for (li, leaf) in leaves.iter().enumerate() {
        let mut integrand = Vec::with_capacity((k_hi - k_lo + 1) as usize);
        for k in k_lo..=k_hi {
            let p = leaf.position_of(k).ok_or(Error::SupportOutsideChart)?;
            let jac = family
                .jacobian_for_integration(li, k)
                .ok_or(Error::SupportOutsideChart)?;
            integrand.push(psi.value(leaf.xs[p], leaf.ts[p]) * jac);
        }
        per_leaf.push(numerics::integral_samples(&integrand, step)?);
    }
    let pulled_back = numerics::integral_samples(&per_leaf, family.eps_spacing())?;
    Ok((direct, pulled_back))
}

/// `M = F(g)` along the leaf.
pub fn m_along(leaf: &Leaf, body: &ConvexBody) -> CurveScalar {
    CurveScalar {
        params: leaf.xs.clone(),
        values: leaf.gs.iter().map(|&g| body.f_value(g)).collect(),
    }
}

/// Derivative estimate with its pointwise fit quality.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureEstimate {
    pub f: CurveScalar,
    /// Root-mean-square residual of each local quadratic fit.
    pub fit_residual: Vec<f64>,
}

/// Estimates `f = dM/dxi` by local least-squares quadratics over
/// `2 window + 1` points. Exact on affine and quadratic `M` regardless of
/// window; smoothing suppresses difference noise from grid-sourced slopes.
pub fn estimate_f(m: &CurveScalar, window: usize) -> Result<CurvatureEstimate> {
    let n = m.values.len();
    if n < 2 * window + 1 {
        return Err(Error::TooFewSamples {
            needed: 2 * window + 1,
            got: n,
        });
    }
    if m.params.len() != n {
        return Err(Error::GridMismatch("parameter/value lengths differ".into()));
    }
    let h = m.params[1] - m.params[0];
    let (deriv, residual) = numerics::sg_derivative(&m.values, h, window)?;
    Ok(CurvatureEstimate {
        f: CurveScalar {
            params: m.params.clone(),
            values: deriv,
        },
        fit_residual: residual,
    })
}

/// Second-difference behaviour of a lifted curve under coarsening.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RegularityReport {
    /// Max second difference over all coordinates, normalized by the
    /// squared spacing, at strides 1, 2 and 4.
    pub q1: f64,
    pub q2: f64,
    pub q4: f64,
    /// `q1 / q2` and `q2 / q4`; near 1 for twice-differentiable curves,
    /// near 2 at a corner (second differences scale like 1 / h there).
    pub ratio_12: f64,
    pub ratio_24: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "C2_CONSISTENT")]
    C2Consistent,
    #[serde(rename = "C2_VIOLATION")]
    C2Violation,
    #[serde(rename = "INCONCLUSIVE")]
    Inconclusive,
}

/// Coarsening ratios of normalized second differences of the coordinates
/// of `curve`: stable ratios mean the second derivative is resolved,
/// growth toward 2 per halving is the corner signature.
pub fn curve_regularity(curve: &HeisenbergCurve) -> Result<RegularityReport> {
    let n = curve.len();
    if n < 9 {
        return Err(Error::TooFewSamples { needed: 9, got: n });
    }
    let h = curve.uniform_step()?;
    let coords: [Vec<f64>; 3] = [
        curve.points().iter().map(|p| p.x).collect(),
        curve.points().iter().map(|p| p.y).collect(),
        curve.points().iter().map(|p| p.t).collect(),
    ];
    let q_at = |stride: usize| -> f64 {
        let hh = (stride as f64 * h).powi(2);
        coords
            .iter()
            .map(|c| numerics::max_second_difference(c, stride) / hh)
            .fold(0.0, f64::max)
    };
    let (q1, q2, q4) = (q_at(1), q_at(2), q_at(4));

    // Scale floor: a straight line has zero second differences; treat
    // anything at rounding level as resolved.
    let scale = coords
        .iter()
        .map(|c| c.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .fold(1.0, f64::max);
    let floor = 1e3 * f64::EPSILON * scale / (h * h);
    if q1 <= floor && q2 <= floor && q4 <= floor {
        return Ok(RegularityReport {
            q1,
            q2,
            q4,
            ratio_12: 1.0,
            ratio_24: 1.0,
            verdict: Verdict::C2Consistent,
        });
    }

    let ratio_12 = if q2 > 0.0 { q1 / q2 } else { f64::INFINITY };
    let ratio_24 = if q4 > 0.0 { q2 / q4 } else { f64::INFINITY };
    let near_one = |r: f64| (r - 1.0).abs() <= 0.1;
    let verdict = if near_one(ratio_12) && near_one(ratio_24) {
        Verdict::C2Consistent
    } else if ratio_12 >= 1.6 && ratio_24 >= 1.6 {
        Verdict::C2Violation
    } else {
        Verdict::Inconclusive
    };
    Ok(RegularityReport {
        q1,
        q2,
        q4,
        ratio_12,
        ratio_24,
        verdict,
    })
}

/// [`curve_regularity`] applied to the lifted leaf.
pub fn regularity_diagnostic(leaf: &Leaf) -> Result<RegularityReport> {
    curve_regularity(&leaf.lift()?)
}

/// Slope profile with prescribed curvature: solves `M' = f` from the
/// anchor `x0` where the slope is `g0`, then inverts `g = F^-1(M)` on the
/// lattice across `span`.
///
/// The moment `M` must stay strictly inside the range of `F`; reaching the
/// boundary means the characteristic tangent turns vertical, reported as
/// [`Error::RangeEscape`] at the first offending abscissa.
pub fn reconstruct_slope<F>(
    body: &ConvexBody,
    f: F,
    x0: f64,
    g0: f64,
    span: (f64, f64),
    step: f64,
) -> Result<CurveScalar>
where
    F: Fn(f64) -> f64,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::GridMismatch(format!("bad step {step}")));
    }
    if !(span.0 <= x0 && x0 <= span.1) {
        return Err(Error::GridMismatch(format!(
            "span [{}, {}] does not contain the anchor {x0}",
            span.0, span.1
        )));
    }
    let tiny = 1e-9 * step;
    let n_right = ((span.1 - x0) / step + tiny).floor().max(0.0) as usize;
    let n_left = ((x0 - span.0) / step + tiny).floor().max(0.0) as usize;
    let m0 = body.f_value(g0);
    let (lo, hi) = body.f_range();
    if !(m0 > lo && m0 < hi) {
        return Err(Error::OutOfRange {
            value: m0,
            lo,
            hi,
        });
    }
    let right = numerics::cumulative_simpson_fn(&f, x0, step, n_right);
    let left = numerics::cumulative_simpson_fn(&f, x0, -step, n_left);

    let mut params = Vec::with_capacity(n_left + n_right + 1);
    let mut values = Vec::with_capacity(n_left + n_right + 1);
    for i in 0..n_right + 1 {
        let xi = x0 + i as f64 * step;
        let m = m0 + right[i];
        if !(m > lo && m < hi) {
            return Err(Error::RangeEscape { xi });
        }
        params.push(xi);
        values.push(body.f_inverse(m)?);
    }
    let mut left_params = Vec::with_capacity(n_left);
    let mut left_values = Vec::with_capacity(n_left);
    for i in 1..n_left + 1 {
        let xi = x0 - i as f64 * step;
        let m = m0 + left[i];
        if !(m > lo && m < hi) {
            return Err(Error::RangeEscape { xi });
        }
        left_params.push(xi);
        left_values.push(body.f_inverse(m)?);
    }
    left_params.reverse();
    left_values.reverse();
    left_params.extend(params);
    left_values.extend(values);
    Ok(CurveScalar {
        params: left_params,
        values: left_values,
    })
}
