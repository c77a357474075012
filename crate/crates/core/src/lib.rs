//! Numerics for sub-Finsler geometry of the first Heisenberg group.
//!
//! The toolkit models a left-invariant perimeter functional whose density is
//! the dual norm of a planar convex body with smooth, positively curved
//! boundary. It provides:
//!
//! - support-function convex bodies and their gauge/dual norms ([`convex`]),
//! - the Heisenberg group structure, horizontal lifts and covariant
//!   derivatives along curves ([`heis`]),
//! - intrinsic graphs, their area functional and first variation ([`graph`]),
//! - the characteristic foliation of a graph, leaf charts and slope
//!   reconstruction ([`flow`]),
//! - sphere-like surfaces swept by lifted boundary translates and graph
//!   patches with prescribed curvature ([`wulff`]),
//! - horizontal mean curvature along framed curves ([`curvature`]),
//! - CSV / OBJ / JSON interchange ([`io`]).
//!
//! Scalar data is `f64` throughout. Quadrature totals use compensated
//! summation in a fixed order, so results are reproducible bit for bit
//! across runs and thread counts.

pub mod convex;
pub mod curvature;
pub mod error;
pub mod flow;
pub mod graph;
pub mod heis;
pub mod io;
pub mod numerics;
pub mod wulff;

pub use convex::ConvexBody;
pub use curvature::{DpiMatrix, FramedCurve, NormalSide, RatioReport};
pub use error::{Error, Result};
pub use io::BodySpec;
pub use flow::{CharacteristicFamily, CurvatureEstimate, CurveScalar, Leaf, RegularityReport, Verdict};
pub use graph::{Bump, GraphField, GraphPointData, QuadConfig, Rect, TestField};
pub use heis::{HeisenbergCurve, HeisenbergPoint, HorizontalVector, PlanarCurve};
pub use wulff::{PatchConfig, SurfaceMesh, WulffShape};

/// Crate version, re-exported for the CLI `--version` banner.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
