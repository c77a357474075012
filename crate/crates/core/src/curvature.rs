//! Curvature along framed horizontal curves.
//!
//! A framed curve carries a unit planar normal `nu` at every sample; the
//! characteristic direction is `Z = J(nu)`. Two curvatures are computed by
//! pairing a covariant derivative with the curve velocity: `h_k` projects
//! the normal to the boundary of a convex body first, `h_d` differentiates
//! the normal itself. They are linked pointwise by the boundary curvature
//! at the projected point, which [`verify_ratio`] checks.

use serde::Serialize;

use crate::convex::ConvexBody;
use crate::error::{Error, Result};
use crate::flow::CurveScalar;
use crate::heis::{self, HeisenbergCurve, HorizontalVector};

/// Which side of the velocity the normal points to. `Left` is the
/// quarter-turn `J` of the unit tangent, `Right` its negative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormalSide {
    Left,
    Right,
}

/// Allowed deviation of the sample speed from 1.
const UNIT_SPEED_TOL: f64 = 1e-6;
/// Allowed deviation of the the normal length from 1.
const UNIT_NORM_TOL: f64 = 1e-9;
/// Gap tolerances carried into [`RatioReport`].
const RATIO_TOL_HK: f64 = 1e-4;
const RATIO_TOL_HD: f64 = 1e-4;

fn quarter_turn(v: [f64; 2]) -> [f64; 2] {
    [-v[1], v[0]]
}

/// A unit-speed horizontal curve with a unit normal field orthogonal to
/// the velocity at every sample.
#[derive(Clone, Debug)]
pub struct FramedCurve {
    curve: HeisenbergCurve,
    nu: Vec<[f64; 2]>,
    z: Vec<[f64; 2]>,
    /// Planar velocity components, which are also the horizontal frame
    /// coefficients of the velocity.
    vel: Vec<[f64; 2]>,
}

impl FramedCurve {
    /// Validates lengths, unit speed, unit normals and orthogonality, and
    /// attaches `Z = J(nu)`.
    pub fn new(curve: HeisenbergCurve, nu: Vec<[f64; 2]>) -> Result<Self> {
        if nu.len() != curve.len() {
            return Err(Error::GridMismatch(format!(
                "{} normals vs {} curve samples",
                nu.len(),
                curve.len()
            )));
        }
        let vel: Vec<[f64; 2]> = curve
            .velocities()?
            .iter()
            .map(|v| [v[0], v[1]])
            .collect();
        let mut speed_dev = 0.0f64;
        for v in &vel {
            speed_dev = speed_dev.max((v[0].hypot(v[1]) - 1.0).abs());
        }
        if speed_dev > UNIT_SPEED_TOL {
            return Err(Error::NotUnitSpeed { dev: speed_dev });
        }
        for n in &nu {
            let norm = n[0].hypot(n[1]);
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::NotUnit { norm });
            }
        }
        for (i, (n, v)) in nu.iter().zip(&vel).enumerate() {
            let along = n[0] * v[0] + n[1] * v[1];
            if along.abs() > UNIT_SPEED_TOL {
                return Err(Error::GridMismatch(format!(
                    "normal not orthogonal to the velocity at sample {i} \
                     (inner product {along:.3e})"
                )));
            }
        }
        let z = nu.iter().map(|&n| quarter_turn(n)).collect();
        Ok(Self { curve, nu, z, vel })
    }

    /// Frames the curve with the quarter-turn of its own unit tangent,
    /// on the requested side.
    pub fn from_velocity(curve: HeisenbergCurve, side: NormalSide) -> Result<Self> {
        let nu = curve
            .velocities()?
            .iter()
            .map(|v| {
                let norm = v[0].hypot(v[1]);
                let t = [v[0] / norm, v[1] / norm];
                match side {
                    NormalSide::Left => quarter_turn(t),
                    NormalSide::Right => {
                        let q = quarter_turn(t);
                        [-q[0], -q[1]]
                    }
                }
            })
            .collect();
        Self::new(curve, nu)
    }

    pub fn curve(&self) -> &HeisenbergCurve {
        &self.curve
    }

    pub fn nu_h(&self) -> &[[f64; 2]] {
        &self.nu
    }

    pub fn z(&self) -> &[[f64; 2]] {
        &self.z
    }

    pub fn len(&self) -> usize {
        self.curve.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curve.is_empty()
    }
}

/// Derivative of a planar sample field along the curve, paired with the
/// velocity. The pairing is quadratic in the direction of travel, so it
/// gives the same value whether the velocity runs along `+Z` or `-Z`.
fn paired_derivative(fc: &FramedCurve, field: Vec<HorizontalVector>) -> Result<CurveScalar> {
    let deriv = heis::covariant_derivative_horizontal(fc.curve.params(), &field)?;
    let values = deriv
        .iter()
        .zip(&fc.vel)
        .map(|(d, v)| d.a * v[0] + d.b * v[1])
        .collect();
    Ok(CurveScalar {
        params: fc.curve.params().to_vec(),
        values,
    })
}

/// Curvature with respect to `body`: the normal field is projected to the
/// boundary point it is normal to, and the derivative of that projected
/// point along the curve is paired with the velocity.
pub fn h_k_along(body: &ConvexBody, fc: &FramedCurve) -> Result<CurveScalar> {
    let field = fc
        .nu
        .iter()
        .map(|&n| {
            let p = body.inverse_gauss(n)?;
            Ok(HorizontalVector::new(p[0], p[1]))
        })
        .collect::<Result<Vec<_>>>()?;
    paired_derivative(fc, field)
}

/// Curvature with respect to the unit disk: derivative of the normal
/// field itself, paired with the velocity.
pub fn h_d_along(fc: &FramedCurve) -> Result<CurveScalar> {
    let field = fc.nu.iter().map(|&n| HorizontalVector::new(n[0], n[1])).collect();
    paired_derivative(fc, field)
}

/// Differential of the normal-to-boundary projection at a unit vector.
///
/// The projection is 0-homogeneous, so the differential kills the radial
/// direction and stretches the tangential one by the curvature radius:
/// `dpi = rho(theta) J(nu) J(nu)^T`, a symmetric rank-one matrix.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DpiMatrix {
    pub m: [[f64; 2]; 2],
}

impl DpiMatrix {
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn symmetry_gap(&self) -> f64 {
        (self.m[0][1] - self.m[1][0]).abs()
    }

    /// Eigenvalues, smaller magnitude first.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let tr = self.m[0][0] + self.m[1][1];
        let det = self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0];
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        let a = 0.5 * (tr - disc);
        let b = 0.5 * (tr + disc);
        if a.abs() <= b.abs() {
            [a, b]
        } else {
            [b, a]
        }
    }
}

/// Analytic differential of `v -> inverse_gauss(body, v)` at the unit
/// vector `nu`.
pub fn dpi_matrix(body: &ConvexBody, nu: [f64; 2]) -> Result<DpiMatrix> {
    let norm = nu[0].hypot(nu[1]);
    if (norm - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::NotUnit { norm });
    }
    let theta = nu[1].atan2(nu[0]);
    let rho = body.rho(theta);
    let w = quarter_turn(nu);
    Ok(DpiMatrix {
        m: [
            [rho * w[0] * w[0], rho * w[0] * w[1]],
            [rho * w[1] * w[0], rho * w[1] * w[1]],
        ],
    })
}

/// Sup-norm gaps of the two curvature identities along a framed curve
/// with prescribed curvature `f`: `h_k` against `f`, and `h_d` against
/// `kappa(projected point) * f`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RatioTolerances {
    pub hk: f64,
    pub hd: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioReport {
    pub max_gap_hd: f64,
    pub max_gap_hk: f64,
    pub n_samples: usize,
    pub body: String,
    pub tolerances: RatioTolerances,
}

pub fn verify_ratio(body: &ConvexBody, fc: &FramedCurve, f: &CurveScalar) -> Result<RatioReport> {
    let n = fc.len();
    if f.values.len() != n || f.params.len() != n {
        return Err(Error::GridMismatch(format!(
            "{} prescribed values vs {} curve samples",
            f.values.len(),
            n
        )));
    }
    for (a, b) in f.params.iter().zip(fc.curve.params()) {
        if (a - b).abs() > 1e-9 * (1.0 + b.abs()) {
            return Err(Error::GridMismatch(
                "prescribed curvature sampled on a different parameter grid".into(),
            ));
        }
    }
    let hk = h_k_along(body, fc)?;
    let hd = h_d_along(fc)?;
    let mut max_gap_hk = 0.0f64;
    let mut max_gap_hd = 0.0f64;
    for i in 0..n {
        let theta = fc.nu[i][1].atan2(fc.nu[i][0]);
        let kappa = body.curvature(theta);
        max_gap_hk = max_gap_hk.max((hk.values[i] - f.values[i]).abs());
        max_gap_hd = max_gap_hd.max((hd.values[i] - kappa * f.values[i]).abs());
    }
    Ok(RatioReport {
        max_gap_hd,
        max_gap_hk,
        n_samples: n,
        body: body.describe(),
        tolerances: RatioTolerances {
            hk: RATIO_TOL_HK,
            hd: RATIO_TOL_HD,
        },
    })
}
