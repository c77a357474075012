//! File formats: JSON body descriptions, CSV for curves, lattice fields
//! and leaves, OBJ for swept-surface meshes.
//!
//! All floats are written with `Display`, which emits the shortest decimal
//! that parses back to the same bits, so a write/read cycle is lossless
//! and repeated runs produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::convex::ConvexBody;
use crate::error::{Error, Result};
use crate::flow::{self, CharacteristicFamily, Leaf};
use crate::graph::{GraphField, Rect};
use crate::heis::{HeisenbergCurve, HeisenbergPoint};
use crate::wulff::SurfaceMesh;

/// Body description as it appears on the command line and in config files.
///
/// `disk` and `ellipse` are conveniences that expand to the same support
/// series representation used by [`ConvexBody`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BodySpec {
    Disk,
    Ellipse {
        a: f64,
        b: f64,
    },
    Fourier {
        a0: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

impl BodySpec {
    pub fn parse(src: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(src).map_err(|e| Error::BadBodySpec(e.to_string()))?;
        let spec: Self =
            serde_json::from_value(value.clone()).map_err(|e| Error::BadBodySpec(e.to_string()))?;
        // Tagged-enum deserialization drops unrecognized keys; a typo like
        // "raduis" must not pass silently.
        let allowed: &[&str] = match spec {
            BodySpec::Disk => &["kind"],
            BodySpec::Ellipse { .. } => &["kind", "a", "b"],
            BodySpec::Fourier { .. } => &["kind", "a0", "cos", "sin"],
        };
        if let Some(obj) = value.as_object() {
            for key in obj.keys() {
                if !allowed.contains(&key.as_str()) {
                    return Err(Error::BadBodySpec(format!("unknown field '{key}'")));
                }
            }
        }
        Ok(spec)
    }

    pub fn build(&self) -> Result<ConvexBody> {
        match self {
            BodySpec::Disk => Ok(ConvexBody::disk()),
            BodySpec::Ellipse { a, b } => ConvexBody::ellipse(*a, *b),
            BodySpec::Fourier { a0, cos, sin } => {
                ConvexBody::from_fourier(*a0, cos.clone(), sin.clone())
            }
        }
    }
}

const CURVE_HEADER: &str = "s,x,y,t";
const GRID_HEADER: &str = "x,t,u";
const LEAF_HEADER: &str = "xi,t,g,M,f_est";

pub fn curve_to_csv(curve: &HeisenbergCurve) -> String {
    let mut out = String::with_capacity(32 * (curve.len() + 1));
    out.push_str(CURVE_HEADER);
    out.push('\n');
    for (s, p) in curve.params().iter().zip(curve.points()) {
        writeln!(out, "{},{},{},{}", s, p.x, p.y, p.t).unwrap();
    }
    out
}

pub fn write_curve_csv(path: &Path, curve: &HeisenbergCurve) -> Result<()> {
    fs::write(path, curve_to_csv(curve))?;
    Ok(())
}

pub fn curve_from_csv(text: &str) -> Result<HeisenbergCurve> {
    let mut rows = parse_rows(text, CURVE_HEADER, 4)?;
    let mut params = Vec::with_capacity(rows.len());
    let mut points = Vec::with_capacity(rows.len());
    for (_, row) in rows.drain(..) {
        params.push(row[0]);
        points.push(HeisenbergPoint::new(row[1], row[2], row[3]));
    }
    HeisenbergCurve::new(params, points)
}

pub fn read_curve_csv(path: &Path) -> Result<HeisenbergCurve> {
    curve_from_csv(&fs::read_to_string(path)?)
}

/// Samples the field on the regular `nx` by `nt` lattice over its own
/// rectangle, one `x,t,u` row per node, `t` varying fastest.
pub fn field_to_csv(u: &GraphField, nx: usize, nt: usize) -> Result<String> {
    if nx < 3 || nt < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: nx.min(nt),
        });
    }
    let r = u.rect();
    let dx = r.width() / (nx - 1) as f64;
    let dt = r.height() / (nt - 1) as f64;
    let mut out = String::with_capacity(24 * (nx * nt + 1));
    out.push_str(GRID_HEADER);
    out.push('\n');
    for i in 0..nx {
        let x = if i + 1 == nx { r.x1 } else { r.x0 + dx * i as f64 };
        for j in 0..nt {
            let t = if j + 1 == nt { r.t1 } else { r.t0 + dt * j as f64 };
            writeln!(out, "{},{},{}", x, t, u.value(x, t)?).unwrap();
        }
    }
    Ok(out)
}

pub fn write_field_csv(path: &Path, u: &GraphField, nx: usize, nt: usize) -> Result<()> {
    fs::write(path, field_to_csv(u, nx, nt)?)?;
    Ok(())
}

/// Rebuilds a grid-backed field from `x,t,u` rows. Rows may come in any
/// order but must cover a full regular lattice, each node exactly once.
pub fn field_from_csv(text: &str) -> Result<GraphField> {
    let rows = parse_rows(text, GRID_HEADER, 3)?;
    if rows.is_empty() {
        return Err(Error::CsvFormat {
            line: 1,
            msg: "no data rows".into(),
        });
    }

    let mut xs: Vec<f64> = rows.iter().map(|(_, r)| r[0]).collect();
    let mut ts: Vec<f64> = rows.iter().map(|(_, r)| r[1]).collect();
    for v in xs.iter().chain(ts.iter()) {
        if !v.is_finite() {
            return Err(Error::GridMismatch("non-finite lattice coordinate".into()));
        }
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup();
    let (nx, nt) = (xs.len(), ts.len());
    if nx < 3 || nt < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: nx.min(nt),
        });
    }
    check_uniform(&xs, "x")?;
    check_uniform(&ts, "t")?;
    if rows.len() != nx * nt {
        return Err(Error::GridMismatch(format!(
            "{} rows cannot fill a {nx} x {nt} lattice",
            rows.len()
        )));
    }

    let mut values = vec![f64::NAN; nx * nt];
    let mut seen = vec![false; nx * nt];
    for (line, row) in &rows {
        // Exact lookup: coordinates repeat bit-for-bit across the lattice.
        let i = xs.partition_point(|&v| v < row[0]);
        let j = ts.partition_point(|&v| v < row[1]);
        debug_assert!(xs[i] == row[0] && ts[j] == row[1]);
        let idx = i * nt + j;
        if seen[idx] {
            return Err(Error::CsvFormat {
                line: *line,
                msg: format!("duplicate lattice node ({}, {})", row[0], row[1]),
            });
        }
        seen[idx] = true;
        values[idx] = row[2];
    }

    let rect = Rect::new(xs[0], xs[nx - 1], ts[0], ts[nt - 1])?;
    GraphField::from_grid(rect, nx, nt, values)
}

pub fn read_field_csv(path: &Path) -> Result<GraphField> {
    field_from_csv(&fs::read_to_string(path)?)
}

/// One `xi,t,g,M,f_est` row per sample, with `M` from the body's slope
/// moment and `f_est` from the windowed derivative fit.
pub fn leaf_to_csv(leaf: &Leaf, body: &ConvexBody, window: usize) -> Result<String> {
    let mut out = String::from(LEAF_HEADER);
    out.push('\n');
    append_leaf_rows(&mut out, leaf, body, window)?;
    Ok(out)
}

/// All leaves of the family under one header, blocks separated by a blank
/// line so plotting tools can address them individually.
pub fn family_to_csv(
    family: &CharacteristicFamily,
    body: &ConvexBody,
    window: usize,
) -> Result<String> {
    let mut out = String::from(LEAF_HEADER);
    out.push('\n');
    for (i, leaf) in family.leaves().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        append_leaf_rows(&mut out, leaf, body, window)?;
    }
    Ok(out)
}

fn append_leaf_rows(
    out: &mut String,
    leaf: &Leaf,
    body: &ConvexBody,
    window: usize,
) -> Result<()> {
    let m = flow::m_along(leaf, body);
    let est = flow::estimate_f(&m, window)?;
    for i in 0..leaf.len() {
        writeln!(
            out,
            "{},{},{},{},{}",
            leaf.xs()[i],
            leaf.ts()[i],
            leaf.slopes()[i],
            m.values[i],
            est.f.values[i]
        )
        .unwrap();
    }
    Ok(())
}

/// Wavefront OBJ with the mesh's triangle and quad faces. Vertex order is
/// preserved; face indices are 1-based as the format requires.
pub fn mesh_to_obj(mesh: &SurfaceMesh) -> String {
    let mut out = String::with_capacity(40 * mesh.vertices.len());
    for p in &mesh.vertices {
        writeln!(out, "v {} {} {}", p.x, p.y, p.t).unwrap();
    }
    for t in &mesh.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).unwrap();
    }
    for q in &mesh.quads {
        writeln!(out, "f {} {} {} {}", q[0] + 1, q[1] + 1, q[2] + 1, q[3] + 1).unwrap();
    }
    out
}

pub fn write_mesh_obj(path: &Path, mesh: &SurfaceMesh) -> Result<()> {
    fs::write(path, mesh_to_obj(mesh))?;
    Ok(())
}

/// Per-vertex scalar channels keyed by position in the OBJ vertex list
/// (0-based; add one to match an OBJ face index).
pub fn mesh_channels_csv(mesh: &SurfaceMesh) -> String {
    let mut out = String::from("vertex,h_k,horizontality\n");
    for i in 0..mesh.vertices.len() {
        writeln!(out, "{},{},{}", i, mesh.h_k[i], mesh.horizontality[i]).unwrap();
    }
    out
}

pub fn write_mesh_channels_csv(path: &Path, mesh: &SurfaceMesh) -> Result<()> {
    fs::write(path, mesh_channels_csv(mesh))?;
    Ok(())
}

/// Splits CSV text into numeric rows, checking the header and the column
/// count. Returns `(line_number, fields)` pairs; blank lines are skipped.
fn parse_rows(text: &str, header: &str, cols: usize) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim_end() == header => {}
        Some((_, first)) => {
            return Err(Error::CsvFormat {
                line: 1,
                msg: format!("expected header '{header}', got '{}'", first.trim_end()),
            });
        }
        None => {
            return Err(Error::CsvFormat {
                line: 1,
                msg: format!("empty input, expected header '{header}'"),
            });
        }
    }
    let mut rows = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let trimmed = raw.trim_end();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != cols {
            return Err(Error::CsvFormat {
                line,
                msg: format!("expected {cols} fields, got {}", fields.len()),
            });
        }
        let mut row = Vec::with_capacity(cols);
        for f in fields {
            match f.trim().parse::<f64>() {
                Ok(v) => row.push(v),
                Err(_) => {
                    return Err(Error::CsvFormat {
                        line,
                        msg: format!("not a number: '{}'", f.trim()),
                    });
                }
            }
        }
        rows.push((line, row));
    }
    Ok(rows)
}

fn check_uniform(vals: &[f64], axis: &str) -> Result<()> {
    let n = vals.len();
    let span = vals[n - 1] - vals[0];
    let step = span / (n - 1) as f64;
    for (i, &v) in vals.iter().enumerate() {
        let expect = vals[0] + step * i as f64;
        if (v - expect).abs() > 1e-9 * span.max(1.0) {
            return Err(Error::GridMismatch(format!(
                "{axis} coordinates are not a uniform lattice near {v}"
            )));
        }
    }
    Ok(())
}
