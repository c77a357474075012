//! Intrinsic graphs over a rectangle in the plane `y = 0`.
//!
//! A scalar field `u(x, t)` on a rectangle `D` defines the surface
//! `(x, t) -> (x, u, t - x u)`. Its geometry is governed by the slope
//! `g = u_x + 2 u u_t`: the horizontal normal direction is `(g, -1)` in the
//! frame `X, Y`, never zero, so these surfaces have no singular points. The
//! anisotropic area of the graph is the integral of the dual norm of
//! `(g, -1)` over `D`, and its derivative along a compactly supported
//! perturbation `v` is the integral of `(v_x + 2 v u_t + 2 u v_t) F(g)`,
//! with `F` the lower-arc slope map of the body.
//!
//! The surface bounds the region above the graph. All signs here follow
//! that orientation: raising `u` shrinks the region, so the volume term in
//! curvature ratios enters with a minus sign.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::convex::ConvexBody;
use crate::error::{Error, Result};
use crate::heis::HeisenbergPoint;
use crate::numerics::{self, NeumaierAcc};

/// Closed axis-aligned rectangle `[x0, x1] x [t0, t1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub t0: f64,
    pub t1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, t0: f64, t1: f64) -> Result<Self> {
        if !(x1 > x0 && t1 > t0) || !(x0.is_finite() && x1.is_finite() && t0.is_finite() && t1.is_finite()) {
            return Err(Error::GridMismatch(format!(
                "degenerate rectangle [{x0}, {x1}] x [{t0}, {t1}]"
            )));
        }
        Ok(Self { x0, x1, t0, t1 })
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.t1 - self.t0
    }

    /// Membership with a rounding allowance of 1e-12 relative to the sides.
    pub fn contains(&self, x: f64, t: f64) -> bool {
        let ex = 1e-12 * self.width().max(1.0);
        let et = 1e-12 * self.height().max(1.0);
        x >= self.x0 - ex && x <= self.x1 + ex && t >= self.t0 - et && t <= self.t1 + et
    }

    /// Whether `inner` sits inside `self` shrunk by `(mx, mt)` on each side.
    fn contains_rect_with_margin(&self, inner: &Rect, mx: f64, mt: f64) -> bool {
        let ex = 1e-12 * self.width().max(1.0);
        let et = 1e-12 * self.height().max(1.0);
        inner.x0 >= self.x0 + mx - ex
            && inner.x1 <= self.x1 - mx + ex
            && inner.t0 >= self.t0 + mt - et
            && inner.t1 <= self.t1 - mt + et
    }
}

type Scalar2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

enum Source {
    Analytic {
        u: Scalar2,
        u_x: Scalar2,
        u_t: Scalar2,
    },
    Grid {
        nx: usize,
        nt: usize,
        values: Vec<f64>,
        // Node derivatives: centered interior, one-sided second order at
        // the edges. Interpolated bilinearly off the lattice.
        d_x: Vec<f64>,
        d_t: Vec<f64>,
    },
}

/// A scalar field on a rectangle, the height of an intrinsic graph.
///
/// Analytic sources carry their own partial derivatives; grid sources
/// interpolate samples bilinearly and differentiate on the lattice.
#[derive(Clone)]
pub struct GraphField {
    rect: Rect,
    source: Arc<Source>,
    lipschitz: f64,
}

impl fmt::Debug for GraphField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match *self.source {
            Source::Analytic { .. } => "analytic".to_string(),
            Source::Grid { nx, nt, .. } => format!("grid {nx}x{nt}"),
        };
        f.debug_struct("GraphField")
            .field("rect", &self.rect)
            .field("source", &kind)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl GraphField {
    /// Field from closures for the value and both partial derivatives.
    pub fn from_functions<U, UX, UT>(rect: Rect, u: U, u_x: UX, u_t: UT) -> Self
    where
        U: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        UX: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        UT: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        let source = Source::Analytic {
            u: Arc::new(u),
            u_x: Arc::new(u_x),
            u_t: Arc::new(u_t),
        };
        let lipschitz = sampled_lipschitz(&rect, &source);
        Self {
            rect,
            source: Arc::new(source),
            lipschitz,
        }
    }

    /// Field from samples on the regular `nx` by `nt` lattice covering
    /// `rect`, row-major with `t` fastest. Needs at least 3 nodes per axis.
    pub fn from_grid(rect: Rect, nx: usize, nt: usize, values: Vec<f64>) -> Result<Self> {
        if nx < 3 || nt < 3 {
            return Err(Error::TooFewSamples {
                needed: 3,
                got: nx.min(nt),
            });
        }
        if values.len() != nx * nt {
            return Err(Error::GridMismatch(format!(
                "{} samples for a {nx} x {nt} lattice",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::GridMismatch(format!("non-finite sample {bad}")));
        }
        let dx = rect.width() / (nx - 1) as f64;
        let dt = rect.height() / (nt - 1) as f64;
        let idx = |i: usize, j: usize| i * nt + j;
        let mut d_x = vec![0.0; nx * nt];
        let mut d_t = vec![0.0; nx * nt];
        for i in 0..nx {
            for j in 0..nt {
                d_x[idx(i, j)] = if i == 0 {
                    (-3.0 * values[idx(0, j)] + 4.0 * values[idx(1, j)] - values[idx(2, j)])
                        / (2.0 * dx)
                } else if i == nx - 1 {
                    (3.0 * values[idx(nx - 1, j)] - 4.0 * values[idx(nx - 2, j)]
                        + values[idx(nx - 3, j)])
                        / (2.0 * dx)
                } else {
                    (values[idx(i + 1, j)] - values[idx(i - 1, j)]) / (2.0 * dx)
                };
                d_t[idx(i, j)] = if j == 0 {
                    (-3.0 * values[idx(i, 0)] + 4.0 * values[idx(i, 1)] - values[idx(i, 2)])
                        / (2.0 * dt)
                } else if j == nt - 1 {
                    (3.0 * values[idx(i, nt - 1)] - 4.0 * values[idx(i, nt - 2)]
                        + values[idx(i, nt - 3)])
                        / (2.0 * dt)
                } else {
                    (values[idx(i, j + 1)] - values[idx(i, j - 1)]) / (2.0 * dt)
                };
            }
        }
        let lipschitz = d_x
            .iter()
            .zip(&d_t)
            .map(|(&a, &b)| a.hypot(b))
            .fold(0.0, f64::max);
        Ok(Self {
            rect,
            source: Arc::new(Source::Grid {
                nx,
                nt,
                values,
                d_x,
                d_t,
            }),
            lipschitz,
        })
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }

    /// Largest sampled gradient magnitude.
    pub fn lipschitz_estimate(&self) -> f64 {
        self.lipschitz
    }

    /// Grid dimensions for grid-backed fields.
    pub fn grid_shape(&self) -> Option<(usize, usize)> {
        match *self.source {
            Source::Grid { nx, nt, .. } => Some((nx, nt)),
            Source::Analytic { .. } => None,
        }
    }

    fn check_domain(&self, x: f64, t: f64) -> Result<()> {
        if self.rect.contains(x, t) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { x, t })
        }
    }

    /// `u(x, t)`.
    pub fn value(&self, x: f64, t: f64) -> Result<f64> {
        self.check_domain(x, t)?;
        Ok(self.value_unchecked(x, t))
    }

    fn value_unchecked(&self, x: f64, t: f64) -> f64 {
        match &*self.source {
            Source::Analytic { u, .. } => u(x, t),
            Source::Grid {
                nx, nt, values, ..
            } => bilinear(&self.rect, *nx, *nt, values, x, t),
        }
    }

    /// `(u_x, u_t)` at `(x, t)`.
    pub fn partials(&self, x: f64, t: f64) -> Result<(f64, f64)> {
        self.check_domain(x, t)?;
        Ok(self.partials_unchecked(x, t))
    }

    fn partials_unchecked(&self, x: f64, t: f64) -> (f64, f64) {
        match &*self.source {
            Source::Analytic { u_x, u_t, .. } => (u_x(x, t), u_t(x, t)),
            Source::Grid {
                nx, nt, d_x, d_t, ..
            } => (
                bilinear(&self.rect, *nx, *nt, d_x, x, t),
                bilinear(&self.rect, *nx, *nt, d_t, x, t),
            ),
        }
    }

    /// Slope `g = u_x + 2 u u_t`.
    pub fn slope(&self, x: f64, t: f64) -> Result<f64> {
        self.check_domain(x, t)?;
        Ok(self.slope_unchecked(x, t))
    }

    fn slope_unchecked(&self, x: f64, t: f64) -> f64 {
        let u = self.value_unchecked(x, t);
        let (ux, ut) = self.partials_unchecked(x, t);
        ux + 2.0 * u * ut
    }

    /// Largest slope difference between neighbours of an `nx` by `nt`
    /// evaluation lattice. Small for continuous-slope fields; order one
    /// across a slope jump regardless of resolution.
    pub fn slope_jump_stat(&self, nx: usize, nt: usize) -> Result<f64> {
        if nx < 2 || nt < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: nx.min(nt),
            });
        }
        let xs = numerics::linspace(self.rect.x0, self.rect.x1, nx);
        let ts = numerics::linspace(self.rect.t0, self.rect.t1, nt);
        let g: Vec<f64> = xs
            .iter()
            .flat_map(|&x| ts.iter().map(move |&t| (x, t)))
            .map(|(x, t)| self.slope_unchecked(x, t))
            .collect();
        let mut jump = 0.0f64;
        for i in 0..nx {
            for j in 0..nt {
                let here = g[i * nt + j];
                if i + 1 < nx {
                    jump = jump.max((g[(i + 1) * nt + j] - here).abs());
                }
                if j + 1 < nt {
                    jump = jump.max((g[i * nt + j + 1] - here).abs());
                }
            }
        }
        Ok(jump)
    }
}

fn sampled_lipschitz(rect: &Rect, source: &Source) -> f64 {
    match source {
        Source::Analytic { u_x, u_t, .. } => {
            let n = 129;
            let xs = numerics::linspace(rect.x0, rect.x1, n);
            let ts = numerics::linspace(rect.t0, rect.t1, n);
            let mut best = 0.0f64;
            for &x in &xs {
                for &t in &ts {
                    best = best.max(u_x(x, t).hypot(u_t(x, t)));
                }
            }
            best
        }
        Source::Grid { .. } => unreachable!("grid lipschitz computed at construction"),
    }
}

fn bilinear(rect: &Rect, nx: usize, nt: usize, data: &[f64], x: f64, t: f64) -> f64 {
    let dx = rect.width() / (nx - 1) as f64;
    let dt = rect.height() / (nt - 1) as f64;
    let fx = ((x - rect.x0) / dx).clamp(0.0, (nx - 1) as f64);
    let ft = ((t - rect.t0) / dt).clamp(0.0, (nt - 1) as f64);
    // Queries landing on a lattice node (up to rounding in the cell map)
    // return the stored sample, so a field written out and read back
    // evaluates to the same bits at the nodes.
    let (ri, rj) = (fx.round(), ft.round());
    if (fx - ri).abs() < 1e-9 && (ft - rj).abs() < 1e-9 {
        return data[ri as usize * nt + rj as usize];
    }
    let i = (fx.floor() as usize).min(nx - 2);
    let j = (ft.floor() as usize).min(nt - 2);
    let a = fx - i as f64;
    let b = ft - j as f64;
    let idx = |i: usize, j: usize| i * nt + j;
    (1.0 - a) * (1.0 - b) * data[idx(i, j)]
        + a * (1.0 - b) * data[idx(i + 1, j)]
        + (1.0 - a) * b * data[idx(i, j + 1)]
        + a * b * data[idx(i + 1, j + 1)]
}

/// Pointwise frame data of the graph map at `(x, t)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GraphPointData {
    pub x: f64,
    pub t: f64,
    /// Slope `u_x + 2 u u_t`.
    pub g: f64,
    /// Normal coefficients on `X, Y, T`: `(g, -1, u_t)`.
    pub n_tilde: [f64; 3],
    /// Horizontal normal part `(g, -1)`; second entry is exactly -1.
    pub n_tilde_h: [f64; 2],
    /// Unit horizontal normal.
    pub nu_h: [f64; 2],
    /// Characteristic direction `(1, g)` before normalization.
    pub z_tilde: [f64; 2],
    /// Unit characteristic direction.
    pub z: [f64; 2],
    /// Area element `|N| = sqrt(g^2 + 1 + u_t^2)`.
    pub jac: f64,
}

/// The graph map `(x, t) -> (x, u, t - x u)`.
pub fn graph_map(u: &GraphField, x: f64, t: f64) -> Result<HeisenbergPoint> {
    let uv = u.value(x, t)?;
    Ok(HeisenbergPoint::new(x, uv, t - x * uv))
}

/// Normal and characteristic frame of the graph at `(x, t)`.
pub fn point_data(u: &GraphField, x: f64, t: f64) -> Result<GraphPointData> {
    let uv = u.value(x, t)?;
    let (ux, ut) = u.partials(x, t)?;
    let g = ux + 2.0 * uv * ut;
    let len = (1.0 + g * g).sqrt();
    Ok(GraphPointData {
        x,
        t,
        g,
        n_tilde: [g, -1.0, ut],
        n_tilde_h: [g, -1.0],
        nu_h: [g / len, -1.0 / len],
        z_tilde: [1.0, g],
        z: [1.0 / len, g / len],
        jac: (g * g + 1.0 + ut * ut).sqrt(),
    })
}

/// Tensor Gauss-Legendre quadrature layout: `cells_x` by `cells_t` cells,
/// `order` nodes per axis per cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadConfig {
    pub cells_x: usize,
    pub cells_t: usize,
    pub order: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            cells_x: 16,
            cells_t: 16,
            order: 8,
        }
    }
}

impl QuadConfig {
    pub fn new(cells_x: usize, cells_t: usize, order: usize) -> Result<Self> {
        if cells_x == 0 || cells_t == 0 || order == 0 {
            return Err(Error::GridMismatch(
                "quadrature needs at least one cell and one node".into(),
            ));
        }
        Ok(Self {
            cells_x,
            cells_t,
            order,
        })
    }

    /// Cell widths on `rect`.
    pub fn cell_size(&self, rect: &Rect) -> (f64, f64) {
        (
            rect.width() / self.cells_x as f64,
            rect.height() / self.cells_t as f64,
        )
    }
}

/// Integrates `f` over `rect`. Cells evaluate independently (in parallel);
/// the cross-cell total is compensated in a fixed order, so the result does
/// not depend on the thread count.
pub fn integrate<F>(rect: &Rect, quad: &QuadConfig, f: F) -> Result<f64>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let (nodes, weights) = numerics::gauss_legendre(quad.order);
    let (cw, ct) = quad.cell_size(rect);
    let scale = 0.25 * cw * ct;
    let cells: Vec<usize> = (0..quad.cells_x * quad.cells_t).collect();
    let partials: Vec<Option<f64>> = cells
        .par_iter()
        .map(|&c| {
            let ci = c / quad.cells_t;
            let cj = c % quad.cells_t;
            let xl = rect.x0 + ci as f64 * cw;
            let tl = rect.t0 + cj as f64 * ct;
            let mut acc = NeumaierAcc::new();
            for (i, &xi) in nodes.iter().enumerate() {
                let x = xl + 0.5 * cw * (1.0 + xi);
                for (j, &tj) in nodes.iter().enumerate() {
                    let t = tl + 0.5 * ct * (1.0 + tj);
                    let val = f(x, t);
                    if !val.is_finite() {
                        return None;
                    }
                    acc.add(weights[i] * weights[j] * val);
                }
            }
            Some(acc.total() * scale)
        })
        .collect();
    let mut acc = NeumaierAcc::new();
    for p in partials {
        match p {
            Some(v) => acc.add(v),
            None => {
                return Err(Error::QuadratureFailure(
                    "integrand evaluated non-finite".into(),
                ))
            }
        }
    }
    Ok(acc.total())
}

/// Anisotropic area of the graph: integral of the dual norm of `(g, -1)`.
pub fn area_k(u: &GraphField, body: &ConvexBody, quad: &QuadConfig) -> Result<f64> {
    let rect = u.rect();
    integrate(&rect, quad, |x, t| {
        body.dual_norm([u.slope_unchecked(x, t), -1.0])
    })
}

/// A compactly supported perturbation field with its partial derivatives.
///
/// The value and both partials must vanish outside [`TestField::support`],
/// and the support must keep at least one quadrature cell away from the
/// domain boundary when used in a variation.
pub trait TestField: Sync {
    fn value(&self, x: f64, t: f64) -> f64;
    /// `(v_x, v_t)`.
    fn partials(&self, x: f64, t: f64) -> (f64, f64);
    fn support(&self) -> Rect;
}

/// Product bump `A (1 - zx^2)^4 (1 - zt^2)^4` on an axis-aligned box,
/// where `zx, zt` are the coordinates scaled to `[-1, 1]` over the box.
/// Three continuous derivatives vanish at the support edge.
#[derive(Clone, Copy, Debug)]
pub struct Bump {
    pub center_x: f64,
    pub center_t: f64,
    pub radius_x: f64,
    pub radius_t: f64,
    pub amplitude: f64,
}

/// Integral of `(1 - z^2)^4` over `[-1, 1]`.
const BUMP_LINE_MASS: f64 = 256.0 / 315.0;

impl Bump {
    pub fn new(center_x: f64, center_t: f64, radius_x: f64, radius_t: f64, amplitude: f64) -> Result<Self> {
        if !(radius_x > 0.0 && radius_t > 0.0) {
            return Err(Error::GridMismatch("bump radius must be positive".into()));
        }
        Ok(Self {
            center_x,
            center_t,
            radius_x,
            radius_t,
            amplitude,
        })
    }

    /// Bump whose support is the block of `span` by `span` quadrature
    /// cells with lower-left cell `(i0, j0)`. Aligning the support edge to
    /// cell boundaries keeps per-cell integrands smooth.
    pub fn over_cells(
        rect: &Rect,
        quad: &QuadConfig,
        i0: usize,
        j0: usize,
        span: usize,
        amplitude: f64,
    ) -> Result<Self> {
        if span == 0 || i0 + span > quad.cells_x || j0 + span > quad.cells_t {
            return Err(Error::GridMismatch(format!(
                "cell block ({i0}, {j0}) + {span} exceeds the {} x {} grid",
                quad.cells_x, quad.cells_t
            )));
        }
        let (cw, ct) = quad.cell_size(rect);
        let rx = 0.5 * span as f64 * cw;
        let rt = 0.5 * span as f64 * ct;
        Bump::new(
            rect.x0 + i0 as f64 * cw + rx,
            rect.t0 + j0 as f64 * ct + rt,
            rx,
            rt,
            amplitude,
        )
    }

    /// Exact integral: `A rx rt (256/315)^2`.
    pub fn mass(&self) -> f64 {
        self.amplitude * self.radius_x * self.radius_t * BUMP_LINE_MASS * BUMP_LINE_MASS
    }
}

impl TestField for Bump {
    fn value(&self, x: f64, t: f64) -> f64 {
        let zx = (x - self.center_x) / self.radius_x;
        let zt = (t - self.center_t) / self.radius_t;
        if zx.abs() >= 1.0 || zt.abs() >= 1.0 {
            return 0.0;
        }
        let px = (1.0 - zx * zx).powi(4);
        let pt = (1.0 - zt * zt).powi(4);
        self.amplitude * px * pt
    }

    fn partials(&self, x: f64, t: f64) -> (f64, f64) {
        let zx = (x - self.center_x) / self.radius_x;
        let zt = (t - self.center_t) / self.radius_t;
        if zx.abs() >= 1.0 || zt.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let px = (1.0 - zx * zx).powi(4);
        let pt = (1.0 - zt * zt).powi(4);
        let dpx = -8.0 * zx * (1.0 - zx * zx).powi(3) / self.radius_x;
        let dpt = -8.0 * zt * (1.0 - zt * zt).powi(3) / self.radius_t;
        (self.amplitude * dpx * pt, self.amplitude * px * dpt)
    }

    fn support(&self) -> Rect {
        Rect {
            x0: self.center_x - self.radius_x,
            x1: self.center_x + self.radius_x,
            t0: self.center_t - self.radius_t,
            t1: self.center_t + self.radius_t,
        }
    }
}

fn check_support(u: &GraphField, v: &dyn TestField, quad: &QuadConfig) -> Result<()> {
    let rect = u.rect();
    let (cw, ct) = quad.cell_size(&rect);
    if rect.contains_rect_with_margin(&v.support(), cw, ct) {
        Ok(())
    } else {
        Err(Error::SupportViolation)
    }
}

/// Derivative of [`area_k`] along `u + s v` at `s = 0`:
/// integral of `(v_x + 2 v u_t + 2 u v_t) F(g)`.
///
/// Evaluated on the same quadrature layout as [`area_k`], so that finite
/// differences of the area and this value differ only by the difference
/// truncation, not by quadrature error.
pub fn first_variation_area(
    u: &GraphField,
    v: &dyn TestField,
    body: &ConvexBody,
    quad: &QuadConfig,
) -> Result<f64> {
    check_support(u, v, quad)?;
    let rect = u.rect();
    integrate(&rect, quad, |x, t| {
        let uv = u.value_unchecked(x, t);
        let (_, ut) = u.partials_unchecked(x, t);
        let g = u.slope_unchecked(x, t);
        let vv = v.value(x, t);
        let (vx, vt) = v.partials(x, t);
        (vx + 2.0 * vv * ut + 2.0 * uv * vt) * body.f_value(g)
    })
}

/// Quadrature layout for integrals over a test field's own support.
const SUPPORT_CELLS: usize = 8;
const SUPPORT_ORDER: usize = 12;

/// Integral of `v` over its support. This is the rate of change of the
/// volume below the graph under `u + s v`; the region above the graph
/// changes at the opposite rate.
pub fn volume_variation(v: &dyn TestField) -> f64 {
    let quad = QuadConfig {
        cells_x: SUPPORT_CELLS,
        cells_t: SUPPORT_CELLS,
        order: SUPPORT_ORDER,
    };
    integrate(&v.support(), &quad, |x, t| v.value(x, t))
        .expect("test field evaluated non-finite on its own support")
}

/// Largest normalized residual `|Q(v) + integral of f v| / ||v||_1` over a
/// battery of test fields. Zero exactly when the graph has prescribed
/// curvature `f` against every field in the battery.
pub fn criticality_residual<F, T>(
    u: &GraphField,
    f: F,
    body: &ConvexBody,
    tests: &[T],
    quad: &QuadConfig,
) -> Result<f64>
where
    F: Fn(f64, f64) -> f64 + Sync,
    T: TestField,
{
    if tests.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let support_quad = QuadConfig {
        cells_x: SUPPORT_CELLS,
        cells_t: SUPPORT_CELLS,
        order: SUPPORT_ORDER,
    };
    let mut worst = 0.0f64;
    for v in tests {
        let q = first_variation_area(u, v, body, quad)?;
        let fv = integrate(&v.support(), &support_quad, |x, t| f(x, t) * v.value(x, t))?;
        let norm1 = integrate(&v.support(), &support_quad, |x, t| v.value(x, t).abs())?;
        if norm1 <= 0.0 {
            return Err(Error::QuadratureFailure("test field has zero mass".into()));
        }
        worst = worst.max((q + fv).abs() / norm1);
    }
    Ok(worst)
}

/// Curvature estimate from one test field: the ratio of the area variation
/// to the variation of the volume of the region above the graph, which is
/// `-volume_variation(v)`. Independent of `v` on constant-curvature graphs.
pub fn h0_estimate(
    u: &GraphField,
    body: &ConvexBody,
    v: &dyn TestField,
    quad: &QuadConfig,
) -> Result<f64> {
    let vol = volume_variation(v);
    let sup = v.support();
    if vol.abs() <= 1e-14 * sup.width() * sup.height() {
        return Err(Error::ZeroVolumeVariation);
    }
    let q = first_variation_area(u, v, body, quad)?;
    Ok(q / (-vol))
}

/// Cell-aligned bump battery: supports of 4, 6 and 8 cells per side, both
/// centers stepping by two cells, one cell clear of the boundary. Spans
/// low-frequency residuals on the default grid without a full basis.
pub fn default_battery(rect: &Rect, quad: &QuadConfig) -> Vec<Bump> {
    let mut out = Vec::new();
    for span in [4usize, 6, 8] {
        let mut i0 = 1;
        while i0 + span + 1 <= quad.cells_x {
            let mut j0 = 1;
            while j0 + span + 1 <= quad.cells_t {
                out.push(
                    Bump::over_cells(rect, quad, i0, j0, span, 1.0)
                        .expect("battery block fits by construction"),
                );
                j0 += 2;
            }
            i0 += 2;
        }
    }
    out
}
