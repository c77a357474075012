//! The first Heisenberg group and its horizontal structure.
//!
//! Points are written in coordinates `(x, y, t)` with product
//! `(x, y, t) (x', y', t') = (x + x', y + y', t + t' + x' y - x y')`.
//! The left-invariant frame is
//! `X = (1, 0, y)`, `Y = (0, 1, -x)`, `T = (0, 0, 1)`, and the contact form
//! `omega = dt - y dx + x dy` annihilates the span of `X`, `Y`.
//!
//! A horizontal vector is stored by its frame coefficients `(a, b)` in
//! `a X + b Y`; the metric makes `X, Y` orthonormal. The complex rotation
//! `J` sends `a X + b Y` to `-b X + a Y`. Covariant differentiation of
//! horizontal fields along curves acts componentwise on the coefficients.

use crate::error::{Error, Result};
use crate::numerics;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HeisenbergPoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl HeisenbergPoint {
    pub fn new(x: f64, y: f64, t: f64) -> Self {
        Self { x, y, t }
    }

    pub fn origin() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }
}

/// Group product `p * q`.
pub fn group_product(p: HeisenbergPoint, q: HeisenbergPoint) -> HeisenbergPoint {
    HeisenbergPoint {
        x: p.x + q.x,
        y: p.y + q.y,
        t: p.t + q.t + q.x * p.y - p.x * q.y,
    }
}

/// Group inverse: `p * p^-1 = identity`.
pub fn group_inverse(p: HeisenbergPoint) -> HeisenbergPoint {
    HeisenbergPoint {
        x: -p.x,
        y: -p.y,
        t: -p.t,
    }
}

/// Left translation `L_g(p) = g * p`.
pub fn left_translate(g: HeisenbergPoint, p: HeisenbergPoint) -> HeisenbergPoint {
    group_product(g, p)
}

/// Coordinate components of the frame field `X` at `p`.
pub fn frame_x(p: HeisenbergPoint) -> [f64; 3] {
    [1.0, 0.0, p.y]
}

/// Coordinate components of the frame field `Y` at `p`.
pub fn frame_y(p: HeisenbergPoint) -> [f64; 3] {
    [0.0, 1.0, -p.x]
}

/// Coordinate components of the vertical field `T` (constant).
pub fn frame_t(_p: HeisenbergPoint) -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

/// Contact form at `p` applied to a coordinate velocity `v`:
/// `omega_p(v) = v_t - y v_x + x v_y`. Zero exactly on horizontal vectors.
pub fn contact_form(p: HeisenbergPoint, v: [f64; 3]) -> f64 {
    v[2] - p.y * v[0] + p.x * v[1]
}

/// A horizontal tangent vector by its coefficients on the frame `X`, `Y`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct HorizontalVector {
    pub a: f64,
    pub b: f64,
}

impl HorizontalVector {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    /// 90-degree rotation: `J(a X + b Y) = -b X + a Y`.
    pub fn rotate(self) -> Self {
        Self::new(-self.b, self.a)
    }

    pub fn dot(self, other: Self) -> f64 {
        self.a * other.a + self.b * other.b
    }

    pub fn norm(self) -> f64 {
        self.a.hypot(self.b)
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.a * s, self.b * s)
    }
}

/// A sampled curve in the group. Parameters must increase strictly.
#[derive(Clone, Debug)]
pub struct HeisenbergCurve {
    params: Vec<f64>,
    points: Vec<HeisenbergPoint>,
}

impl HeisenbergCurve {
    pub fn new(params: Vec<f64>, points: Vec<HeisenbergPoint>) -> Result<Self> {
        if params.len() != points.len() {
            return Err(Error::GridMismatch(format!(
                "{} parameters vs {} points",
                params.len(),
                points.len()
            )));
        }
        if params.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NonMonotoneParam);
        }
        Ok(Self { params, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn points(&self) -> &[HeisenbergPoint] {
        &self.points
    }

    /// Uniform parameter spacing; error if the grid is not uniform to a
    /// relative 1e-9.
    pub fn uniform_step(&self) -> Result<f64> {
        if self.params.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: self.params.len(),
            });
        }
        let h = self.params[1] - self.params[0];
        for w in self.params.windows(2) {
            if ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1e-300) {
                return Err(Error::GridMismatch("parameter grid is not uniform".into()));
            }
        }
        Ok(h)
    }

    /// Coordinate velocities by fourth-order finite differences.
    pub fn velocities(&self) -> Result<Vec<[f64; 3]>> {
        let h = self.uniform_step()?;
        let xs: Vec<f64> = self.points.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = self.points.iter().map(|p| p.y).collect();
        let ts: Vec<f64> = self.points.iter().map(|p| p.t).collect();
        let dx = numerics::deriv_uniform(&xs, h)?;
        let dy = numerics::deriv_uniform(&ys, h)?;
        let dt = numerics::deriv_uniform(&ts, h)?;
        Ok((0..self.len()).map(|i| [dx[i], dy[i], dt[i]]).collect())
    }

    /// Max of `|omega(velocity)|` over the samples, with difference
    /// velocities. Zero for exactly horizontal curves up to stencil error.
    pub fn horizontality_residual(&self) -> Result<f64> {
        let vels = self.velocities()?;
        Ok(self
            .points
            .iter()
            .zip(&vels)
            .map(|(&p, &v)| contact_form(p, v).abs())
            .fold(0.0, f64::max))
    }

    /// Left-translates every sample by `g`.
    pub fn left_translated(&self, g: HeisenbergPoint) -> Self {
        Self {
            params: self.params.clone(),
            points: self.points.iter().map(|&p| group_product(g, p)).collect(),
        }
    }

    /// Reverses orientation; parameters map `s -> s_max - s` reversed.
    pub fn reversed(&self) -> Self {
        let last = *self.params.last().unwrap_or(&0.0);
        let mut params: Vec<f64> = self.params.iter().rev().map(|&s| last - s).collect();
        // Guard rounding: keep strict monotonicity.
        for i in 1..params.len() {
            if params[i] <= params[i - 1] {
                params[i] = params[i - 1] + f64::EPSILON * (1.0 + params[i - 1].abs());
            }
        }
        Self {
            params,
            points: self.points.iter().rev().copied().collect(),
        }
    }
}

/// A sampled planar curve, optionally with analytic velocities.
#[derive(Clone, Debug)]
pub struct PlanarCurve {
    pub params: Vec<f64>,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Velocity samples; computed by differences when absent.
    pub dxs: Option<Vec<f64>>,
    pub dys: Option<Vec<f64>>,
}

impl PlanarCurve {
    pub fn new(params: Vec<f64>, xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if params.len() != xs.len() || xs.len() != ys.len() {
            return Err(Error::GridMismatch("planar curve sample lengths differ".into()));
        }
        if params.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NonMonotoneParam);
        }
        Ok(Self {
            params,
            xs,
            ys,
            dxs: None,
            dys: None,
        })
    }

    pub fn with_velocities(mut self, dxs: Vec<f64>, dys: Vec<f64>) -> Result<Self> {
        if dxs.len() != self.xs.len() || dys.len() != self.xs.len() {
            return Err(Error::GridMismatch("velocity sample lengths differ".into()));
        }
        self.dxs = Some(dxs);
        self.dys = Some(dys);
        Ok(self)
    }

    fn uniform_step(&self) -> Result<f64> {
        let h = self.params[1] - self.params[0];
        for w in self.params.windows(2) {
            if ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1e-300) {
                return Err(Error::GridMismatch("parameter grid is not uniform".into()));
            }
        }
        Ok(h)
    }
}

/// Horizontal lift of a planar curve starting at height `t0`:
/// `t(s) = t0 + integral of (y x' - x y')`.
///
/// The integrand is cumulated at fourth order on the sample grid; velocity
/// samples are used when present and estimated by differences otherwise.
pub fn horizontal_lift(curve: &PlanarCurve, t0: f64) -> Result<HeisenbergCurve> {
    let n = curve.xs.len();
    if n < 5 {
        return Err(Error::TooFewSamples { needed: 5, got: n });
    }
    let h = curve.uniform_step()?;
    let dxs = match &curve.dxs {
        Some(d) => d.clone(),
        None => numerics::deriv_uniform(&curve.xs, h)?,
    };
    let dys = match &curve.dys {
        Some(d) => d.clone(),
        None => numerics::deriv_uniform(&curve.ys, h)?,
    };
    let w: Vec<f64> = (0..n)
        .map(|i| curve.ys[i] * dxs[i] - curve.xs[i] * dys[i])
        .collect();
    let cum = numerics::cumulative_integral_samples(&w, h)?;
    let points = (0..n)
        .map(|i| HeisenbergPoint::new(curve.xs[i], curve.ys[i], t0 + cum[i]))
        .collect();
    HeisenbergCurve::new(curve.params.clone(), points)
}

/// Componentwise derivative of a horizontal field along a curve parameter:
/// fourth-order differences on each frame coefficient. This is the
/// covariant derivative of the field in the connection that makes the
/// horizontal frame parallel.
pub fn covariant_derivative_horizontal(
    params: &[f64],
    field: &[HorizontalVector],
) -> Result<Vec<HorizontalVector>> {
    let n = field.len();
    if n < 5 {
        return Err(Error::TooFewSamples { needed: 5, got: n });
    }
    if params.len() != n {
        return Err(Error::GridMismatch(format!(
            "{} parameters vs {} field samples",
            params.len(),
            n
        )));
    }
    if params.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::NonMonotoneParam);
    }
    let h = params[1] - params[0];
    let uniform = params
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs());
    let as_: Vec<f64> = field.iter().map(|v| v.a).collect();
    let bs: Vec<f64> = field.iter().map(|v| v.b).collect();
    if uniform {
        let da = numerics::deriv_uniform(&as_, h)?;
        let db = numerics::deriv_uniform(&bs, h)?;
        Ok((0..n).map(|i| HorizontalVector::new(da[i], db[i])).collect())
    } else {
        // Five-point windows with exact weights for the local spacing.
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let base = i.saturating_sub(2).min(n - 5);
            let xs = &params[base..base + 5];
            let w = numerics::fd_weights(params[i], xs, 1);
            let mut da = 0.0;
            let mut db = 0.0;
            for (k, wk) in w.iter().enumerate() {
                da += wk * as_[base + k];
                db += wk * bs[base + k];
            }
            out.push(HorizontalVector::new(da, db));
        }
        Ok(out)
    }
}
