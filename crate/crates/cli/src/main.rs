//! `subfinsler`: command line front end for the sub-Finsler toolkit.
//!
//! Exit codes: 0 on success, 1 when inputs or results fail validation,
//! 2 on usage errors. With `--json`, failures are reported as a single
//! JSON object on stderr. `SUBFINSLER_THREADS` caps internal parallelism.
//! All reports are JSON on stdout; bulk samples are CSV; meshes are OBJ.

mod expr;

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use subfinsler_core::convex::ConvexBody;
use subfinsler_core::curvature::{self, RatioReport};
use subfinsler_core::flow::{self, CurveScalar, RegularityReport, DEFAULT_WINDOW};
use subfinsler_core::graph::{self, GraphField, QuadConfig, Rect};
use subfinsler_core::heis::HeisenbergPoint;
use subfinsler_core::io::{self, BodySpec};
use subfinsler_core::numerics;
use subfinsler_core::wulff::{self, PatchConfig};

const IDENTITY_NORMALS: usize = 100;
const IDENTITY_KERNEL_TOL: f64 = 1e-8;
const IDENTITY_STRETCH_TOL: f64 = 1e-6;
const IDENTITY_SYMMETRY_TOL: f64 = 1e-8;
const IDENTITY_CURVATURE_TOL: f64 = 1e-4;
const IDENTITY_APEX_TOL: f64 = 1e-6;
/// Arc-length step the identity sweep resolves when no sample count is
/// given on the command line.
const IDENTITY_SWEEP_STEP: f64 = 1e-3;

#[derive(Parser)]
#[command(
    name = "subfinsler",
    version,
    about = "Sub-Finsler geometry of the first Heisenberg group: convex body \
             validation, constant-curvature sweeps, graph areas and variations, \
             characteristic tracing, and identity suites."
)]
struct Cli {
    /// Report failures as machine-readable JSON on stderr.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Convex body validation and tables.
    Body {
        #[command(subcommand)]
        cmd: BodyCmd,
    },
    /// Constant-curvature boundary sweeps as OBJ meshes.
    Wulff {
        #[command(subcommand)]
        cmd: WulffCmd,
    },
    /// Area and first-variation computations for graph surfaces.
    Graph {
        #[command(subcommand)]
        cmd: GraphCmd,
    },
    /// Characteristic curve tracing and diagnostics.
    Flow {
        #[command(subcommand)]
        cmd: FlowCmd,
    },
    /// Graph patches with prescribed curvature.
    Synthesize {
        #[command(subcommand)]
        cmd: SynthCmd,
    },
    /// Numerical identity suites.
    Check {
        #[command(subcommand)]
        cmd: CheckCmd,
    },
}

#[derive(Subcommand)]
enum BodyCmd {
    /// Validate a body spec and print its basic constants.
    Validate {
        /// Body spec as JSON, e.g. '{"kind":"ellipse","a":2,"b":1}'.
        #[arg(long)]
        body: String,
    },
    /// Sample support, curvature and slope-moment tables as CSV.
    Show {
        #[arg(long)]
        body: String,
        /// Rows in each table.
        #[arg(long, default_value_t = 129)]
        samples: usize,
        /// Slope range LO:HI for the moment table.
        #[arg(long, default_value = "-5:5", allow_hyphen_values = true)]
        span: String,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum WulffCmd {
    /// Sweep constant-curvature curves into a closed surface mesh.
    Generate {
        #[arg(long)]
        body: String,
        /// Number of swept curves.
        #[arg(long, default_value_t = 64)]
        curves: usize,
        /// Samples per curve.
        #[arg(long, default_value_t = 1024)]
        samples: usize,
        /// OBJ output path.
        #[arg(long)]
        out: PathBuf,
    },
}

/// Field input shared by graph and flow commands: an expression over a
/// rectangle, or a CSV lattice.
#[derive(Args)]
struct FieldArgs {
    /// Analytic field u(x,t); requires --span X0:X1:T0:T1.
    #[arg(long, conflicts_with = "field", allow_hyphen_values = true)]
    expr: Option<String>,
    /// Field lattice from a CSV file with columns x,t,u.
    #[arg(long)]
    field: Option<PathBuf>,
    /// With --expr: the domain rectangle X0:X1:T0:T1.
    #[arg(long, allow_hyphen_values = true)]
    span: Option<String>,
}

#[derive(Subcommand)]
enum GraphCmd {
    /// Sub-Finsler area of a graph patch.
    Area {
        #[arg(long)]
        body: String,
        #[command(flatten)]
        field: FieldArgs,
        /// Quadrature cells per axis.
        #[arg(long, default_value_t = 8)]
        cells: usize,
        /// Gauss nodes per cell per axis.
        #[arg(long, default_value_t = 12)]
        order: usize,
    },
    /// First variation of area against a battery of interior bumps.
    Variation {
        #[arg(long)]
        body: String,
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 8)]
        cells: usize,
        #[arg(long, default_value_t = 12)]
        order: usize,
    },
    /// Test whether the field is critical for prescribed curvature f.
    Critical {
        #[arg(long)]
        body: String,
        #[command(flatten)]
        field: FieldArgs,
        /// Prescribed curvature f(x,t).
        #[arg(long = "f-expr", default_value = "1", allow_hyphen_values = true)]
        f_expr: String,
        #[arg(long, default_value_t = 8)]
        cells: usize,
        #[arg(long, default_value_t = 12)]
        order: usize,
        /// Residual tolerance for the verdict.
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
}

#[derive(Subcommand)]
enum FlowCmd {
    /// Integrate one characteristic leaf and print it as CSV.
    Trace {
        #[arg(long)]
        body: String,
        #[command(flatten)]
        field: FieldArgs,
        /// Start point A:B of the leaf.
        #[arg(long, allow_hyphen_values = true)]
        start: String,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate a transversal family of leaves and print it as CSV.
    Family {
        #[arg(long)]
        body: String,
        #[command(flatten)]
        field: FieldArgs,
        /// Central start point A:B.
        #[arg(long, allow_hyphen_values = true)]
        start: String,
        /// Transversal offset range LO:HI around the start.
        #[arg(long, allow_hyphen_values = true)]
        eps: String,
        /// Number of leaves.
        #[arg(long, default_value_t = 9)]
        curves: usize,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Second-difference regularity diagnosis of one leaf.
    Diagnose {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, allow_hyphen_values = true)]
        start: String,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
    },
}

#[derive(Subcommand)]
enum SynthCmd {
    /// Build a graph patch with prescribed curvature from transversal data.
    Patch {
        #[arg(long)]
        body: String,
        /// Prescribed curvature f(x,t).
        #[arg(long = "f-expr", default_value = "1", allow_hyphen_values = true)]
        f_expr: String,
        /// Domain rectangle X0:X1:T0:T1.
        #[arg(long, allow_hyphen_values = true)]
        span: String,
        /// Lattice size NX:NT.
        #[arg(long, default_value = "101:101")]
        samples: String,
        /// Number of characteristic leaves swept across the rectangle.
        #[arg(long, default_value_t = 129)]
        curves: usize,
        /// Transversal column; defaults to the lattice column nearest the
        /// middle of the rectangle.
        #[arg(long, allow_negative_numbers = true)]
        start: Option<f64>,
        /// Height profile u(start, t) as an expression in t.
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        u0: String,
        /// Slope profile u_x(start, t) as an expression in t.
        #[arg(long, allow_hyphen_values = true)]
        g0: Option<String>,
        /// Extra vertical margin for the leaf seeds.
        #[arg(long, default_value_t = 0.0)]
        pad: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CheckCmd {
    /// Verify projection, curvature-ratio and sweep identities.
    Identities {
        #[arg(long)]
        body: String,
        /// Samples per swept curve; 0 picks enough for the apex tolerance.
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, default_value_t = 16)]
        curves: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    Usage(String),
    Validation(String),
}

impl Failure {
    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Validation(_) => "validation",
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Validation(m) => m,
        }
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Validation(_) => 1,
        }
    }
}

impl From<subfinsler_core::Error> for Failure {
    fn from(e: subfinsler_core::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| run(cli.cmd));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if cli.json {
                let report = serde_json::json!({
                    "error": {"kind": f.kind(), "message": f.message()}
                });
                eprintln!("{report}");
            } else {
                eprintln!("error: {}", f.message());
            }
            ExitCode::from(f.code())
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("SUBFINSLER_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.parse().map_err(|_| {
        Failure::Usage(format!("SUBFINSLER_THREADS must be a positive integer, got '{raw}'"))
    })?;
    if n == 0 {
        return Err(Failure::Usage("SUBFINSLER_THREADS must be at least 1".into()));
    }
    // A second initialization only means the pool already exists.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Body { cmd } => match cmd {
            BodyCmd::Validate { body } => body_validate(&body),
            BodyCmd::Show { body, samples, span, out } => body_show(&body, samples, &span, out),
        },
        Cmd::Wulff { cmd } => match cmd {
            WulffCmd::Generate { body, curves, samples, out } => {
                wulff_generate(&body, curves, samples, &out)
            }
        },
        Cmd::Graph { cmd } => match cmd {
            GraphCmd::Area { body, field, cells, order } => graph_area(&body, &field, cells, order),
            GraphCmd::Variation { body, field, cells, order } => {
                graph_variation(&body, &field, cells, order)
            }
            GraphCmd::Critical { body, field, f_expr, cells, order, tol } => {
                graph_critical(&body, &field, &f_expr, cells, order, tol)
            }
        },
        Cmd::Flow { cmd } => match cmd {
            FlowCmd::Trace { body, field, start, step, out } => {
                flow_trace(&body, &field, &start, step, out)
            }
            FlowCmd::Family { body, field, start, eps, curves, step, out } => {
                flow_family(&body, &field, &start, &eps, curves, step, out)
            }
            FlowCmd::Diagnose { field, start, step } => flow_diagnose(&field, &start, step),
        },
        Cmd::Synthesize { cmd } => match cmd {
            SynthCmd::Patch {
                body,
                f_expr,
                span,
                samples,
                curves,
                start,
                u0,
                g0,
                pad,
                out,
            } => synthesize_patch(&body, &f_expr, &span, &samples, curves, start, &u0, g0, pad, out),
        },
        Cmd::Check { cmd } => match cmd {
            CheckCmd::Identities { body, samples, curves, seed } => {
                check_identities(&body, samples, curves, seed)
            }
        },
    }
}

fn build_body(spec: &str) -> Result<ConvexBody, Failure> {
    Ok(BodySpec::parse(spec)?.build()?)
}

/// Splits `raw` on ':' into exactly `n` finite numbers.
fn parse_floats(flag: &str, raw: &str, n: usize) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() != n {
        return Err(Failure::Usage(format!(
            "{flag} needs {n} colon-separated numbers, got '{raw}'"
        )));
    }
    let mut out = Vec::with_capacity(n);
    for p in parts {
        let v: f64 = p.trim().parse().map_err(|_| {
            Failure::Usage(format!("{flag}: '{p}' is not a number"))
        })?;
        if !v.is_finite() {
            return Err(Failure::Usage(format!("{flag}: '{p}' is not finite")));
        }
        out.push(v);
    }
    Ok(out)
}

fn parse_rect(flag: &str, raw: &str) -> Result<Rect, Failure> {
    let v = parse_floats(flag, raw, 4)?;
    Ok(Rect::new(v[0], v[1], v[2], v[3])?)
}

fn parse_expr(flag: &str, src: &str) -> Result<expr::Parsed, Failure> {
    let parsed = expr::parse_expression(src)
        .map_err(|e| Failure::Validation(format!("{flag} '{src}': {e}")))?;
    if parsed.uses_abs {
        eprintln!(
            "note: {flag} uses abs; the field is only Lipschitz there and \
             derivatives use sign(0) = 0"
        );
    }
    Ok(parsed)
}

fn analytic_field(parsed: &expr::Parsed, rect: Rect) -> GraphField {
    let (ast, dx, dt) = (parsed.ast.clone(), parsed.dx.clone(), parsed.dt.clone());
    // Evaluation faults surface as NaN and are caught by the consumers'
    // finiteness checks.
    GraphField::from_functions(
        rect,
        move |x, t| expr::eval(&ast, x, t).unwrap_or(f64::NAN),
        move |x, t| expr::eval(&dx, x, t).unwrap_or(f64::NAN),
        move |x, t| expr::eval(&dt, x, t).unwrap_or(f64::NAN),
    )
}

/// Loads the field input. Returns the field and, for CSV inputs, the
/// optional trace window parsed from --span when `window_allowed`.
fn load_field(args: &FieldArgs, window_allowed: bool) -> Result<(GraphField, Option<(f64, f64)>), Failure> {
    match (&args.expr, &args.field) {
        (Some(src), None) => {
            let raw = args.span.as_deref().ok_or_else(|| {
                Failure::Usage("--expr needs --span X0:X1:T0:T1 for the domain".into())
            })?;
            let rect = parse_rect("--span", raw)?;
            let parsed = parse_expr("--expr", src)?;
            Ok((analytic_field(&parsed, rect), None))
        }
        (None, Some(path)) => {
            let u = io::read_field_csv(path)?;
            let window = match &args.span {
                None => None,
                Some(raw) if window_allowed => {
                    let v = parse_floats("--span", raw, 2)?;
                    Some((v[0], v[1]))
                }
                Some(_) => {
                    return Err(Failure::Usage(
                        "--span only applies to --expr here; the field file fixes the domain"
                            .into(),
                    ))
                }
            };
            Ok((u, window))
        }
        _ => Err(Failure::Usage("exactly one of --expr or --field is required".into())),
    }
}

fn print_report<T: Serialize>(report: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| Failure::Validation(e.to_string()))?;
    println!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct BodyReport {
    ok: bool,
    body: String,
    rho_min: f64,
    h_min: f64,
    area: f64,
    perimeter: f64,
}

fn body_report(body: &ConvexBody) -> BodyReport {
    BodyReport {
        ok: true,
        body: body.describe(),
        rho_min: body.rho_min(),
        h_min: body.h_min(),
        area: body.area(),
        perimeter: body.perimeter(),
    }
}

fn body_validate(spec: &str) -> Result<(), Failure> {
    let body = build_body(spec)?;
    print_report(&body_report(&body))
}

fn body_show(spec: &str, samples: usize, span: &str, out: Option<PathBuf>) -> Result<(), Failure> {
    if samples < 2 {
        return Err(Failure::Usage("--samples must be at least 2".into()));
    }
    let body = build_body(spec)?;
    let range = parse_floats("--span", span, 2)?;
    if range[0] >= range[1] {
        return Err(Failure::Usage("--span needs LO < HI".into()));
    }
    let thetas = numerics::linspace(-PI, PI, samples);
    let xs = numerics::linspace(range[0], range[1], samples);
    let mut csv = String::from("theta,h,dh,rho,kappa,x,f,df\n");
    for i in 0..samples {
        let (h, dh, ddh) = body.support_all(thetas[i]);
        let rho = h + ddh;
        let kappa = 1.0 / rho;
        let x = xs[i];
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            thetas[i],
            h,
            dh,
            rho,
            kappa,
            x,
            body.f_value(x),
            body.f_derivative(x)
        ));
    }
    match out {
        Some(path) => {
            std::fs::write(&path, csv)?;
            print_report(&serde_json::json!({
                "out": path, "rows": samples, "body": body.describe()
            }))
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct WulffReport {
    out: PathBuf,
    body: String,
    curves: usize,
    samples: usize,
    vertices: usize,
    triangles: usize,
    quads: usize,
    apex: HeisenbergPoint,
    apex_gap: f64,
    h_k_gap: f64,
}

fn wulff_generate(spec: &str, curves: usize, samples: usize, out: &PathBuf) -> Result<(), Failure> {
    let body = build_body(spec)?;
    let shape = wulff::wulff_shape(&body, curves, samples)?;
    io::write_mesh_obj(out, shape.mesh())?;
    print_report(&WulffReport {
        out: out.clone(),
        body: body.describe(),
        curves,
        samples,
        vertices: shape.mesh().vertices.len(),
        triangles: shape.mesh().triangles.len(),
        quads: shape.mesh().quads.len(),
        apex: shape.apex(),
        apex_gap: shape.apex_gap(),
        h_k_gap: shape.h_k_gap(),
    })
}

fn quad_config(cells: usize, order: usize) -> Result<QuadConfig, Failure> {
    Ok(QuadConfig::new(cells, cells, order)?)
}

fn graph_area(spec: &str, field: &FieldArgs, cells: usize, order: usize) -> Result<(), Failure> {
    let body = build_body(spec)?;
    let (u, _) = load_field(field, false)?;
    let quad = quad_config(cells, order)?;
    let area = graph::area_k(&u, &body, &quad)?;
    print_report(&serde_json::json!({
        "area": area,
        "rect": u.rect(),
        "cells": cells,
        "order": order,
        "body": body.describe(),
    }))
}

#[derive(Serialize)]
struct VariationRow {
    center_x: f64,
    center_t: f64,
    radius_x: f64,
    radius_t: f64,
    first_variation: f64,
    volume_variation: f64,
    h0: f64,
}

fn graph_variation(spec: &str, field: &FieldArgs, cells: usize, order: usize) -> Result<(), Failure> {
    let body = build_body(spec)?;
    let (u, _) = load_field(field, false)?;
    let quad = quad_config(cells, order)?;
    let battery = graph::default_battery(&u.rect(), &quad);
    if battery.is_empty() {
        return Err(Failure::Validation(
            "quadrature lattice too coarse to place interior test fields; raise --cells".into(),
        ));
    }
    let mut rows = Vec::with_capacity(battery.len());
    for bump in &battery {
        let q = graph::first_variation_area(&u, bump, &body, &quad)?;
        let vol = graph::volume_variation(bump);
        rows.push(VariationRow {
            center_x: bump.center_x,
            center_t: bump.center_t,
            radius_x: bump.radius_x,
            radius_t: bump.radius_t,
            first_variation: q,
            volume_variation: vol,
            h0: graph::h0_estimate(&u, &body, bump, &quad)?,
        });
    }
    let h0_min = rows.iter().map(|r| r.h0).fold(f64::INFINITY, f64::min);
    let h0_max = rows.iter().map(|r| r.h0).fold(f64::NEG_INFINITY, f64::max);
    print_report(&serde_json::json!({
        "fields": rows,
        "h0_min": h0_min,
        "h0_max": h0_max,
        "cells": cells,
        "order": order,
    }))
}

fn graph_critical(
    spec: &str,
    field: &FieldArgs,
    f_expr: &str,
    cells: usize,
    order: usize,
    tol: f64,
) -> Result<(), Failure> {
    if !(tol > 0.0) {
        return Err(Failure::Usage("--tol must be positive".into()));
    }
    let body = build_body(spec)?;
    let (u, _) = load_field(field, false)?;
    let quad = quad_config(cells, order)?;
    let parsed = parse_expr("--f-expr", f_expr)?;
    let battery = graph::default_battery(&u.rect(), &quad);
    if battery.is_empty() {
        return Err(Failure::Validation(
            "quadrature lattice too coarse to place interior test fields; raise --cells".into(),
        ));
    }
    let f = |x: f64, t: f64| expr::eval(&parsed.ast, x, t).unwrap_or(f64::NAN);
    let residual = graph::criticality_residual(&u, f, &body, &battery, &quad)?;
    let critical = residual <= tol;
    print_report(&serde_json::json!({
        "residual": residual,
        "tol": tol,
        "critical": critical,
        "fields": battery.len(),
    }))?;
    if critical {
        Ok(())
    } else {
        Err(Failure::Validation(format!(
            "criticality residual {residual:.3e} exceeds tolerance {tol:.3e}"
        )))
    }
}

fn parse_start(raw: &str) -> Result<(f64, f64), Failure> {
    let v = parse_floats("--start", raw, 2)?;
    Ok((v[0], v[1]))
}

fn leaf_span(u: &GraphField, window: Option<(f64, f64)>) -> Result<(f64, f64), Failure> {
    let r = u.rect();
    match window {
        None => Ok((r.x0, r.x1)),
        Some((lo, hi)) => {
            if lo >= hi {
                return Err(Failure::Usage("--span needs LO < HI".into()));
            }
            Ok((lo.max(r.x0), hi.min(r.x1)))
        }
    }
}

fn flow_trace(
    spec: &str,
    field: &FieldArgs,
    start: &str,
    step: f64,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let body = build_body(spec)?;
    let (u, window) = load_field(field, true)?;
    let (a, b) = parse_start(start)?;
    let span = leaf_span(&u, window)?;
    let leaf = flow::integrate_leaf(&u, a, b, span, step)?;
    let csv = io::leaf_to_csv(&leaf, &body, DEFAULT_WINDOW)?;
    match out {
        Some(path) => {
            std::fs::write(&path, csv)?;
            print_report(&serde_json::json!({
                "out": path,
                "samples": leaf.len(),
                "truncated": leaf.truncated(),
                "ode_residual": leaf.ode_residual(),
            }))
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn flow_family(
    spec: &str,
    field: &FieldArgs,
    start: &str,
    eps: &str,
    curves: usize,
    step: f64,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let body = build_body(spec)?;
    let (u, window) = load_field(field, true)?;
    let (a, b) = parse_start(start)?;
    let e = parse_floats("--eps", eps, 2)?;
    if e[0] >= e[1] {
        return Err(Failure::Usage("--eps needs LO < HI".into()));
    }
    let span = leaf_span(&u, window)?;
    let family = flow::build_family(&u, a, b, (e[0], e[1]), curves, span, step)?;
    let csv = io::family_to_csv(&family, &body, DEFAULT_WINDOW)?;
    match out {
        Some(path) => {
            std::fs::write(&path, csv)?;
            print_report(&serde_json::json!({
                "out": path,
                "leaves": family.leaves().len(),
                "jacobian_min": family.jacobian_min(),
            }))
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct DiagnoseReport {
    samples: usize,
    truncated: bool,
    ode_residual: f64,
    #[serde(flatten)]
    regularity: RegularityReport,
}

fn flow_diagnose(field: &FieldArgs, start: &str, step: f64) -> Result<(), Failure> {
    let (u, window) = load_field(field, true)?;
    let (a, b) = parse_start(start)?;
    let span = leaf_span(&u, window)?;
    let leaf = flow::integrate_leaf(&u, a, b, span, step)?;
    let regularity = flow::regularity_diagnostic(&leaf)?;
    print_report(&DiagnoseReport {
        samples: leaf.len(),
        truncated: leaf.truncated(),
        ode_residual: leaf.ode_residual(),
        regularity,
    })
}

#[allow(clippy::too_many_arguments)]
fn synthesize_patch(
    spec: &str,
    f_expr: &str,
    span: &str,
    samples: &str,
    curves: usize,
    start: Option<f64>,
    u0: &str,
    g0: Option<String>,
    pad: f64,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let body = build_body(spec)?;
    let rect = parse_rect("--span", span)?;
    let parts: Vec<&str> = samples.split(':').collect();
    if parts.len() != 2 {
        return Err(Failure::Usage(format!(
            "--samples needs NX:NT, got '{samples}'"
        )));
    }
    let nx: usize = parts[0].trim().parse().map_err(|_| {
        Failure::Usage(format!("--samples: '{}' is not a count", parts[0]))
    })?;
    let nt: usize = parts[1].trim().parse().map_err(|_| {
        Failure::Usage(format!("--samples: '{}' is not a count", parts[1]))
    })?;
    if nx < 3 || nt < 3 {
        return Err(Failure::Usage("--samples needs at least 3 nodes per side".into()));
    }

    let f = parse_expr("--f-expr", f_expr)?;
    let u0 = parse_expr("--u0", u0)?;
    let g0 = parse_expr("--g0", g0.as_deref().unwrap_or("0"))?;
    for (flag, p) in [("--u0", &u0), ("--g0", &g0)] {
        if expr::uses_var(&p.ast, expr::Var::X) {
            return Err(Failure::Validation(format!(
                "{flag} is a profile in t and must not mention x"
            )));
        }
    }

    let a = match start {
        Some(a) => a,
        None => {
            // Nearest lattice column to the middle of the rectangle.
            let d = (rect.x1 - rect.x0) / (nx - 1).max(1) as f64;
            rect.x0 + ((nx - 1) / 2) as f64 * d
        }
    };
    let cfg = PatchConfig {
        nx,
        nt,
        n_leaves: curves,
        substeps: 4,
        pad,
    };
    let u = wulff::synthesize_graph_patch(
        &body,
        |x, t| expr::eval(&f.ast, x, t).unwrap_or(f64::NAN),
        a,
        |t| expr::eval(&u0.ast, 0.0, t).unwrap_or(f64::NAN),
        |t| expr::eval(&g0.ast, 0.0, t).unwrap_or(f64::NAN),
        rect,
        &cfg,
    )?;
    let csv = io::field_to_csv(&u, nx, nt)?;
    match out {
        Some(path) => {
            std::fs::write(&path, csv)?;
            print_report(&serde_json::json!({
                "out": path,
                "nx": nx,
                "nt": nt,
                "rect": u.rect(),
                "leaves": curves,
                "start": a,
            }))
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct ProjectionSection {
    samples: usize,
    kernel_gap: f64,
    stretch_gap: f64,
    symmetry_gap: f64,
    tol_kernel: f64,
    tol_stretch: f64,
    tol_symmetry: f64,
    pass: bool,
}

#[derive(Serialize)]
struct RatioSection {
    #[serde(flatten)]
    report: RatioReport,
    pass: bool,
}

#[derive(Serialize)]
struct SweepSection {
    curves: usize,
    samples: usize,
    h_k_gap: f64,
    apex_gap: f64,
    apex: HeisenbergPoint,
    tol_curvature: f64,
    tol_apex: f64,
    pass: bool,
}

#[derive(Serialize)]
struct IdentityReport {
    body: String,
    seed: u64,
    projection: ProjectionSection,
    ratio: RatioSection,
    sweep: SweepSection,
    pass: bool,
}

fn check_identities(spec: &str, samples: usize, curves: usize, seed: u64) -> Result<(), Failure> {
    let body = build_body(spec)?;
    let samples = if samples == 0 {
        (body.perimeter() / IDENTITY_SWEEP_STEP).ceil() as usize + 1
    } else {
        samples
    };

    // Differential of the boundary projection: annihilates the normal,
    // scales the tangent by the curvature radius, and is symmetric.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut kernel, mut stretch, mut symmetry) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..IDENTITY_NORMALS {
        let theta = rng.gen_range(-PI..PI);
        let nu = [theta.cos(), theta.sin()];
        let z = [-nu[1], nu[0]];
        let m = curvature::dpi_matrix(&body, nu)?;
        let dn = m.apply(nu);
        kernel = kernel.max(dn[0].hypot(dn[1]));
        let dz = m.apply(z);
        let kappa = body.curvature(theta);
        stretch = stretch.max((dz[0] - z[0] / kappa).hypot(dz[1] - z[1] / kappa));
        symmetry = symmetry.max(m.symmetry_gap());
    }
    let projection = ProjectionSection {
        samples: IDENTITY_NORMALS,
        kernel_gap: kernel,
        stretch_gap: stretch,
        symmetry_gap: symmetry,
        tol_kernel: IDENTITY_KERNEL_TOL,
        tol_stretch: IDENTITY_STRETCH_TOL,
        tol_symmetry: IDENTITY_SYMMETRY_TOL,
        pass: kernel <= IDENTITY_KERNEL_TOL
            && stretch <= IDENTITY_STRETCH_TOL
            && symmetry <= IDENTITY_SYMMETRY_TOL,
    };

    // Unit prescribed curvature along one swept boundary curve: the two
    // curvature notions must agree up to the boundary curvature factor.
    let fc = wulff::framed_boundary_curve(&body, 0.0, samples)?;
    let ones = CurveScalar {
        params: fc.curve().params().to_vec(),
        values: vec![1.0; fc.len()],
    };
    let report = curvature::verify_ratio(&body, &fc, &ones)?;
    let ratio_pass =
        report.max_gap_hd <= report.tolerances.hd && report.max_gap_hk <= report.tolerances.hk;
    let ratio = RatioSection {
        report,
        pass: ratio_pass,
    };

    // Full sweep: every generating curve has unit curvature and closes up
    // at the common apex.
    let shape = wulff::wulff_shape(&body, curves, samples)?;
    let sweep = SweepSection {
        curves,
        samples,
        h_k_gap: shape.h_k_gap(),
        apex_gap: shape.apex_gap(),
        apex: shape.apex(),
        tol_curvature: IDENTITY_CURVATURE_TOL,
        tol_apex: IDENTITY_APEX_TOL,
        pass: shape.h_k_gap() <= IDENTITY_CURVATURE_TOL && shape.apex_gap() <= IDENTITY_APEX_TOL,
    };

    let pass = projection.pass && ratio.pass && sweep.pass;
    print_report(&IdentityReport {
        body: body.describe(),
        seed,
        projection,
        ratio,
        sweep,
        pass,
    })?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Validation("identity gaps exceed tolerances".into()))
    }
}
