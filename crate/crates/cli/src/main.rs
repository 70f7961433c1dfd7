//! `gnat`: command-line front end for the bundle-geometry engine.
//!
//! Every command reads JSON configs, runs the requested computation and
//! emits a canonical JSON (or aligned text) report on stdout. Reports are
//! byte-identical for identical inputs regardless of thread count. Exit
//! codes: 0 success, 2 precondition/not-applicable/config errors, 1
//! internal errors.

use clap::{Args, Parser, Subcommand, ValueEnum};
use gnat_core::flat_oracle::{compare, FdConfig};
use gnat_core::frame_models::{basis_field, derived_operators, model_from_json, FrameModel};
use gnat_core::gnatural::{classify, connection_coeffs, derived_quantities, GNaturalMetric};
use gnat_core::report::canonical_json;
use gnat_core::scalarfn::SmoothFn;
use gnat_core::t1m::{
    classify_unit, hyperbolic_criteria, sol3_criteria, special_case_residual, su2_criteria,
    t1m_bitension_tensor, t1m_tension, SpecialKind, T1mError, UnitBundleParams,
};
use gnat_core::tm::{
    bitension_parallel, example_cubic_roots, g_biharmonic_residual, lambda_family_g9,
    proof_path_bitension, refine_kk_roots, scan_kk_applicable, scan_row, LambdaFamily,
    ParallelFieldSpec,
};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "gnat",
    version,
    about = "geometry of bundle metrics over flat and homogeneous bases"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Relative tolerance for oracle comparisons.
    #[arg(long, global = true, default_value_t = 1e-4)]
    tolerance: f64,
    /// Worker threads for scans (default: logical cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for randomized cross-checks (reserved; current commands are
    /// deterministic).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Non-degeneracy / signature certificate on a sample grid.
    Classify {
        #[arg(long)]
        metric: String,
        /// Interval as two numbers: min max.
        #[arg(long, num_args = 2, value_names = ["MIN", "MAX"])]
        interval: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Parallel vector fields as maps into the tangent bundle.
    Tm {
        #[command(subcommand)]
        cmd: TmCmd,
    },
    /// The profile-generated two-parameter metric family.
    Gfamily {
        #[command(subcommand)]
        cmd: GfamilyCmd,
    },
    /// Unit vector fields into the unit tangent bundle.
    T1m {
        #[command(subcommand)]
        cmd: T1mCmd,
    },
    /// Homogeneous frame models.
    Model {
        #[command(subcommand)]
        cmd: ModelCmd,
    },
}

#[derive(Subcommand)]
enum TmCmd {
    /// Tension and bitension factors of a parallel field.
    Bitension(TmPoint),
    /// Classification of a parallel field.
    ClassifyParallel(TmPoint),
    /// Scan the squared norm and locate obstruction roots.
    Scan {
        #[arg(long)]
        metric: String,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        rho_min: f64,
        #[arg(long)]
        rho_max: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
    },
    /// Compare the closed form against the finite-difference and
    /// frame-contraction oracles.
    Oracle {
        #[command(flatten)]
        point: TmPoint,
        #[arg(long, default_value_t = 1e-3)]
        fd_step: f64,
        #[arg(long, default_value_t = 1)]
        richardson: usize,
    },
    /// Residual of the restricted-bienergy criticality condition.
    GResidual(TmPoint),
}

#[derive(Args)]
struct TmPoint {
    #[arg(long)]
    metric: String,
    #[arg(long)]
    rho: f64,
    #[arg(long)]
    dim: usize,
}

#[derive(Subcommand)]
enum GfamilyCmd {
    /// Build the family from a profile and report its invariants on a grid.
    Build {
        /// Path to a profile expression (JSON).
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        k: f64,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 100)]
        grid_points: usize,
    },
    /// Evaluate the published ninth-display bracket with engine
    /// cross-validation.
    G9 {
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        k: f64,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        rho: f64,
    },
    /// Positive roots of the published cubic for the profile a t e^{bt}.
    Cubic {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        dim: usize,
        /// Also evaluate the published bracket at each root.
        #[arg(long)]
        cross_check: bool,
    },
}

#[derive(Subcommand)]
enum T1mCmd {
    /// Horizontal and vertical tension of a unit frame field.
    Tension(T1mPoint),
    /// The biharmonicity tensor of a unit frame field.
    Bitension(T1mPoint),
    /// Classification of a unit frame field.
    Classify(T1mPoint),
    /// Closed-form criteria for the built-in models.
    Criteria {
        #[arg(long, value_enum)]
        kind: CriteriaKind,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<f64>,
        /// Frame-field index (1-based) for the solvable model.
        #[arg(long)]
        field_index: Option<usize>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        lambda3: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        d: Option<f64>,
    },
    /// Special-case residuals (classical reduction, geodesic, Killing, Reeb).
    Special {
        #[command(flatten)]
        point: T1mPoint,
        #[arg(long, value_enum)]
        kind: SpecialArg,
    },
}

#[derive(Args)]
struct T1mPoint {
    #[arg(long)]
    model: String,
    #[arg(long)]
    params: String,
    /// Comma-separated frame coefficients, e.g. `0,0,1`.
    #[arg(long)]
    field: String,
}

#[derive(Copy, Clone, ValueEnum)]
enum CriteriaKind {
    Hyperbolic,
    Sol3,
    Su2,
}

#[derive(Copy, Clone, ValueEnum)]
enum SpecialArg {
    KkMetric,
    Geodesic,
    Killing,
    Reeb,
}

#[derive(Subcommand)]
enum ModelCmd {
    /// Derived tables of a frame model.
    Show {
        #[arg(long)]
        model: String,
    },
}

// ---------------------------------------------------------------------------

#[derive(Debug, thiserror::Error)]
enum CliError {
    /// Bad input or a mathematically inapplicable request: exit 2.
    #[error("{0}")]
    Precondition(String),
    /// Engine failure that indicates a bug: exit 1.
    #[error("{0}")]
    Internal(String),
}

fn precondition<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Precondition(e.to_string())
}

fn read_json(path: &str) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Precondition(format!("cannot read {path}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::Precondition(format!(
            "malformed JSON in {path} at line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })
}

fn load_metric(path: &str) -> Result<(GNaturalMetric, Value), CliError> {
    let v = read_json(path)?;
    let g = GNaturalMetric::from_json(&v).map_err(precondition)?;
    Ok((g, v))
}

fn load_model(path: &str) -> Result<(FrameModel<f64>, Value), CliError> {
    let v = read_json(path)?;
    let m = model_from_json(&v).map_err(precondition)?;
    Ok((m, v))
}

fn load_params(path: &str) -> Result<(UnitBundleParams<f64>, Value), CliError> {
    let v = read_json(path)?;
    let p = UnitBundleParams::from_json(&v).map_err(precondition)?;
    Ok((p, v))
}

/// Frame coefficients: either `c1,c2,...` inline or a path to a JSON file
/// `{"coeffs": [...]}`.
fn parse_field(spec: &str, dim: usize) -> Result<Vec<f64>, CliError> {
    let coeffs: Vec<f64> = if std::path::Path::new(spec).is_file() {
        let v = read_json(spec)?;
        v.get("coeffs")
            .and_then(|c| c.as_array())
            .map(|a| a.iter().filter_map(|x| x.as_f64()).collect())
            .ok_or_else(|| {
                CliError::Precondition(format!("{spec} must contain {{\"coeffs\": [...]}}"))
            })?
    } else {
        let parsed: Result<Vec<f64>, _> =
            spec.split(',').map(|s| s.trim().parse::<f64>()).collect();
        parsed.map_err(|e| CliError::Precondition(format!("bad field spec `{spec}`: {e}")))?
    };
    if coeffs.len() != dim {
        return Err(CliError::Precondition(format!(
            "field has {} coefficients, model dimension is {dim}",
            coeffs.len()
        )));
    }
    Ok(coeffs)
}

fn config_hash(inputs: &Value) -> String {
    let canon = canonical_json(inputs);
    let mut h = Sha256::new();
    h.update(canon.as_bytes());
    let digest = h.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

struct Report {
    command: String,
    inputs: Value,
    results: Value,
    warnings: Vec<String>,
}

impl Report {
    fn render(&self, format: Format) -> String {
        let v = json!({
            "command": self.command,
            "config_hash": config_hash(&self.inputs),
            "inputs": self.inputs,
            "results": self.results,
            "warnings": self.warnings,
            "tool_version": TOOL_VERSION,
        });
        match format {
            Format::Json => canonical_json(&v),
            Format::Table => render_table(&v),
        }
    }
}

fn render_table(v: &Value) -> String {
    let mut out = String::new();
    fn walk(out: &mut String, prefix: &str, v: &Value) {
        match v {
            Value::Object(map) => {
                let mut keys: Vec<&String> = map.keys().collect();
                keys.sort();
                for k in keys {
                    let p = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(out, &p, &map[k]);
                }
            }
            Value::Array(items) => {
                for (i, item) in items.iter().enumerate() {
                    walk(out, &format!("{prefix}[{i}]"), item);
                }
            }
            other => {
                let shown = match other {
                    Value::Number(n) if n.is_f64() => {
                        format!("{:.12e}", n.as_f64().unwrap())
                    }
                    other => other.to_string(),
                };
                out.push_str(&format!("{prefix:<58} {shown}\n"));
            }
        }
    }
    walk(&mut out, "", v);
    out
}

// ---------------------------------------------------------------------------

fn main() {
    let cli = Cli::parse();
    let format = cli.format;
    match run(cli) {
        Ok(report) => {
            print!("{}", report.render(format));
        }
        Err(e) => {
            let (kind, code) = match &e {
                CliError::Precondition(_) => ("precondition", 2),
                CliError::Internal(_) => ("internal", 1),
            };
            let v = json!({
                "error": e.to_string(),
                "kind": kind,
                "tool_version": TOOL_VERSION,
            });
            eprint!("{}", canonical_json(&v));
            std::process::exit(code);
        }
    }
}

fn run(cli: Cli) -> Result<Report, CliError> {
    let jobs = cli.jobs.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    match cli.command {
        Command::Classify {
            metric,
            interval,
            samples,
        } => {
            let (g, mv) = load_metric(&metric)?;
            if interval.len() != 2 {
                return Err(CliError::Precondition(
                    "--interval takes two numbers".into(),
                ));
            }
            let result = classify(&g, (interval[0], interval[1]), samples).map_err(precondition)?;
            let (p1, p2, p3, alpha, phi) =
                derived_quantities(&g, 0.5 * (interval[0] + interval[1])).map_err(precondition)?;
            Ok(Report {
                command: "classify".into(),
                inputs: json!({
                    "metric": mv,
                    "interval": interval,
                    "samples": samples,
                }),
                results: json!({
                    "classification": result,
                    "midpoint_derived": {
                        "phi1": p1.value, "phi2": p2.value, "phi3": p3.value,
                        "alpha": alpha.value, "phi": phi.value,
                    },
                }),
                warnings: vec![],
            })
        }
        Command::Tm { cmd } => run_tm(cmd, jobs, cli.tolerance),
        Command::Gfamily { cmd } => run_gfamily(cmd),
        Command::T1m { cmd } => run_t1m(cmd),
        Command::Model { cmd } => run_model(cmd),
    }
}

fn run_tm(cmd: TmCmd, jobs: usize, tolerance: f64) -> Result<Report, CliError> {
    match cmd {
        TmCmd::Bitension(pt) => {
            let (g, mv) = load_metric(&pt.metric)?;
            let spec = ParallelFieldSpec {
                dim: pt.dim,
                rho: pt.rho,
            };
            let bt = bitension_parallel(&g, &spec).map_err(precondition)?;
            let coeffs = connection_coeffs(&g, pt.rho).map_err(precondition)?;
            Ok(Report {
                command: "tm bitension".into(),
                inputs: json!({"metric": mv, "rho": pt.rho, "dim": pt.dim}),
                results: json!({"bitension": bt, "connection_coefficients": coeffs}),
                warnings: vec![],
            })
        }
        TmCmd::ClassifyParallel(pt) => {
            let (g, mv) = load_metric(&pt.metric)?;
            let spec = ParallelFieldSpec {
                dim: pt.dim,
                rho: pt.rho,
            };
            let bt = bitension_parallel(&g, &spec).map_err(precondition)?;
            let class = gnat_core::tm::classify_parallel(&g, &spec).map_err(precondition)?;
            Ok(Report {
                command: "tm classify-parallel".into(),
                inputs: json!({"metric": mv, "rho": pt.rho, "dim": pt.dim}),
                results: json!({
                    "classification": class,
                    "c_h": bt.c_h, "c_v": bt.c_v,
                    "tau2h_factor": bt.tau2h_factor, "tau2v_factor": bt.tau2v_factor,
                }),
                warnings: vec![],
            })
        }
        TmCmd::Scan {
            metric,
            dim,
            rho_min,
            rho_max,
            steps,
        } => {
            let (g, mv) = load_metric(&metric)?;
            if !(rho_min < rho_max) || steps < 1 {
                return Err(CliError::Precondition(
                    "need rho_min < rho_max and steps >= 1".into(),
                ));
            }
            let kk = scan_kk_applicable(&g, 0.5 * (rho_min + rho_max));
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| CliError::Internal(e.to_string()))?;
            let rows: Vec<_> = pool.install(|| {
                use rayon::prelude::*;
                (0..=steps)
                    .into_par_iter()
                    .map(|i| {
                        let rho = rho_min + (rho_max - rho_min) * i as f64 / steps as f64;
                        scan_row(&g, dim, rho, kk)
                    })
                    .collect()
            });
            let roots = refine_kk_roots(&g, &rows);
            let warnings: Vec<String> = rows
                .iter()
                .filter_map(|r| r.warning.clone().map(|w| format!("rho={}: {w}", r.rho)))
                .collect();
            Ok(Report {
                command: "tm scan".into(),
                inputs: json!({
                    "metric": mv, "dim": dim,
                    "rho_min": rho_min, "rho_max": rho_max, "steps": steps,
                }),
                results: json!({"rows": rows, "kk_lhs_roots": roots}),
                warnings,
            })
        }
        TmCmd::Oracle {
            point,
            fd_step,
            richardson,
        } => {
            let (g, mv) = load_metric(&point.metric)?;
            let cfg = FdConfig {
                step: fd_step,
                richardson_levels: richardson,
            };
            let rep =
                compare(&g, point.dim, point.rho, &cfg, tolerance, 1e-8).map_err(precondition)?;
            let spec = ParallelFieldSpec {
                dim: point.dim,
                rho: point.rho,
            };
            let (ph, pv) = proof_path_bitension(&g, &spec).map_err(precondition)?;
            let mut warnings = Vec::new();
            let scale = 1.0 + rep.fd_h.abs().max(rep.fd_v.abs());
            if !rep.fd_error_estimate.is_finite() || rep.fd_error_estimate > tolerance * scale {
                warnings.push(format!(
                    "finite-difference extrapolation not converged: achieved error estimate {:.3e}",
                    rep.fd_error_estimate
                ));
            }
            Ok(Report {
                command: "tm oracle".into(),
                inputs: json!({
                    "metric": mv, "rho": point.rho, "dim": point.dim,
                    "fd_step": fd_step, "richardson": richardson, "tolerance": tolerance,
                }),
                results: json!({
                    "closed_form": {"tau2h": rep.closed_h, "tau2v": rep.closed_v},
                    "finite_difference": {"tau2h": rep.fd_h, "tau2v": rep.fd_v,
                                           "error_estimate": rep.fd_error_estimate},
                    "frame_contraction": {"tau2h": ph, "tau2v": pv},
                    "rel_error": {"tau2h": rep.rel_error_h, "tau2v": rep.rel_error_v},
                    "pass": rep.pass,
                }),
                warnings,
            })
        }
        TmCmd::GResidual(pt) => {
            let (g, mv) = load_metric(&pt.metric)?;
            let spec = ParallelFieldSpec {
                dim: pt.dim,
                rho: pt.rho,
            };
            let (residual, is_g) = g_biharmonic_residual(&g, &spec).map_err(precondition)?;
            Ok(Report {
                command: "tm g-residual".into(),
                inputs: json!({"metric": mv, "rho": pt.rho, "dim": pt.dim}),
                results: json!({"residual": residual, "is_g_biharmonic": is_g}),
                warnings: vec![],
            })
        }
    }
}

fn run_gfamily(cmd: GfamilyCmd) -> Result<Report, CliError> {
    match cmd {
        GfamilyCmd::Build {
            lambda,
            k,
            eta,
            dim,
            grid_points,
        } => {
            let lv = read_json(&lambda)?;
            let lam = SmoothFn::from_json(&lv).map_err(precondition)?;
            let fam = LambdaFamily::build(lam, k, eta, dim).map_err(precondition)?;
            let mut rows = Vec::new();
            let mut warnings = Vec::new();
            for i in 0..grid_points {
                let t = eta + 9.0 * eta * i as f64 / (grid_points.max(2) - 1) as f64;
                match fam.g3_residual(t) {
                    Ok((res, scale)) => rows.push(json!({
                        "t": t,
                        "identity_residual": res,
                        "scale": scale,
                    })),
                    Err(e) => warnings.push(format!("t={t}: {e}")),
                }
            }
            let (alpha2_probe, nonvanishing) = fam.alpha2_near_zero().map_err(precondition)?;
            Ok(Report {
                command: "gfamily build".into(),
                inputs: json!({"lambda": lv, "K": k, "eta": eta, "m": dim,
                                "grid_points": grid_points}),
                results: json!({
                    "alpha2_near_zero": alpha2_probe,
                    "alpha2_nonvanishing_on_cutoff": nonvanishing,
                    "cutoff_sign": fam.sign_w,
                    "grid": rows,
                }),
                warnings,
            })
        }
        GfamilyCmd::G9 {
            lambda,
            k,
            eta,
            dim,
            rho,
        } => {
            let lv = read_json(&lambda)?;
            let lam = SmoothFn::from_json(&lv).map_err(precondition)?;
            let fam = LambdaFamily::build(lam, k, eta, dim).map_err(precondition)?;
            let rep = lambda_family_g9(&fam, rho).map_err(precondition)?;
            Ok(Report {
                command: "gfamily g9".into(),
                inputs: json!({"lambda": lv, "K": k, "eta": eta, "m": dim, "rho": rho}),
                results: serde_json::to_value(&rep).unwrap(),
                warnings: vec![],
            })
        }
        GfamilyCmd::Cubic {
            a,
            b,
            dim,
            cross_check,
        } => {
            let roots = example_cubic_roots(a, b, dim).map_err(precondition)?;
            let mut checks = Vec::new();
            if cross_check {
                let lam = SmoothFn::mul(vec![
                    SmoothFn::constant(a),
                    SmoothFn::t(),
                    SmoothFn::exp(SmoothFn::t().scaled(b)),
                ]);
                for &r in &roots {
                    let lj = lam.eval_jet2(r).map_err(precondition)?;
                    let g9 = g9_bracket_at(lj.value, lj.d1, lj.d2, dim as f64, r);
                    checks.push(json!({"root": r, "g9_at_root": g9}));
                }
            }
            Ok(Report {
                command: "gfamily cubic".into(),
                inputs: json!({"a": a, "b": b, "m": dim, "cross_check": cross_check}),
                results: json!({"positive_roots": roots, "cross_check": checks}),
                warnings: vec![],
            })
        }
    }
}

fn g9_bracket_at(l: f64, ld: f64, ldd: f64, mf: f64, t: f64) -> f64 {
    let w = l + t * ld;
    let wd = 2.0 * ld + t * ldd;
    t * t * w * w - t * ((1.0 + t) * l * l * l + 3.0 * l * l * ld - t * l * l * l * wd)
        + 3.0
            * mf
            * l
            * l
            * (t * t * l * ldd
                + (4.0 / mf - 1.0) * t * l * ld
                + (2.0 / mf - 2.0) * t * t * ld * ld
                + (2.0 / mf - 1.0) * l * l)
        - mf * l * (l * l + 2.0 * t * l * ld) * w
        + mf * t * l * l * l * wd
}

fn run_t1m(cmd: T1mCmd) -> Result<Report, CliError> {
    match cmd {
        T1mCmd::Tension(pt) => {
            let (model, mv) = load_model(&pt.model)?;
            let (params, pv) = load_params(&pt.params)?;
            let field = parse_field(&pt.field, model.dim)?;
            let (th, tv) = t1m_tension(&model, &field, &params);
            Ok(Report {
                command: "t1m tension".into(),
                inputs: json!({"model": mv, "params": pv, "field": field}),
                results: json!({"tau_h": th, "tau_v": tv}),
                warnings: vec![],
            })
        }
        T1mCmd::Bitension(pt) => {
            let (model, mv) = load_model(&pt.model)?;
            let (params, pv) = load_params(&pt.params)?;
            let field = parse_field(&pt.field, model.dim)?;
            let t = t1m_bitension_tensor(&model, &field, &params);
            Ok(Report {
                command: "t1m bitension".into(),
                inputs: json!({"model": mv, "params": pv, "field": field}),
                results: json!({"t_tensor": t}),
                warnings: vec![],
            })
        }
        T1mCmd::Classify(pt) => {
            let (model, mv) = load_model(&pt.model)?;
            let (params, pv) = load_params(&pt.params)?;
            let field = parse_field(&pt.field, model.dim)?;
            let rep = classify_unit(&model, &field, &params).map_err(t1m_err)?;
            Ok(Report {
                command: "t1m classify".into(),
                inputs: json!({"model": mv, "params": pv, "field": field}),
                results: serde_json::to_value(&rep).unwrap(),
                warnings: vec![],
            })
        }
        T1mCmd::Criteria {
            kind,
            n,
            k,
            field_index,
            sigma,
            lambda3,
            a,
            b,
            c,
            d,
        } => {
            let need = |name: &str, v: Option<f64>| {
                v.ok_or_else(|| CliError::Precondition(format!("--{name} is required")))
            };
            let report = match kind {
                CriteriaKind::Hyperbolic => {
                    let n = n.ok_or_else(|| CliError::Precondition("--n is required".into()))?;
                    hyperbolic_criteria(
                        n,
                        need("k", k)?,
                        need("a", a)?,
                        need("c", c)?,
                        need("d", d)?,
                    )
                }
                CriteriaKind::Sol3 => {
                    let idx = field_index.ok_or_else(|| {
                        CliError::Precondition("--field-index is required".into())
                    })?;
                    if idx == 0 || idx > 3 {
                        return Err(CliError::Precondition("--field-index is 1, 2 or 3".into()));
                    }
                    sol3_criteria(idx - 1, need("a", a)?, need("c", c)?, need("d", d)?)
                        .map_err(t1m_err)?
                }
                CriteriaKind::Su2 => su2_criteria(
                    need("sigma", sigma)?,
                    need("lambda3", lambda3)?,
                    need("a", a)?,
                    need("c", c)?,
                    need("b", b)?,
                )
                .map_err(t1m_err)?,
            };
            Ok(Report {
                command: "t1m criteria".into(),
                inputs: json!({
                    "kind": match kind {
                        CriteriaKind::Hyperbolic => "hyperbolic",
                        CriteriaKind::Sol3 => "sol3",
                        CriteriaKind::Su2 => "su2",
                    },
                    "n": n, "k": k, "field_index": field_index,
                    "sigma": sigma, "lambda3": lambda3,
                    "a": a, "b": b, "c": c, "d": d,
                }),
                results: serde_json::to_value(&report).unwrap(),
                warnings: vec![],
            })
        }
        T1mCmd::Special { point, kind } => {
            let (model, mv) = load_model(&point.model)?;
            let (params, pv) = load_params(&point.params)?;
            let field = parse_field(&point.field, model.dim)?;
            let skind = match kind {
                SpecialArg::KkMetric => SpecialKind::KkMetric,
                SpecialArg::Geodesic => SpecialKind::GeodesicConstCurv,
                SpecialArg::Killing => SpecialKind::Killing,
                SpecialArg::Reeb => SpecialKind::Reeb,
            };
            let residual =
                special_case_residual(skind, &model, &field, &params).map_err(t1m_err)?;
            let norm = residual.iter().map(|x| x * x).sum::<f64>().sqrt();
            Ok(Report {
                command: "t1m special".into(),
                inputs: json!({"model": mv, "params": pv, "field": field,
                                "kind": format!("{skind:?}")}),
                results: json!({"residual": residual, "residual_norm": norm,
                                 "condition_holds": norm <= 1e-9}),
                warnings: vec![],
            })
        }
    }
}

fn t1m_err(e: T1mError) -> CliError {
    match e {
        T1mError::NotApplicable(_) | T1mError::Degenerate(_) | T1mError::Invalid(_) => {
            CliError::Precondition(e.to_string())
        }
    }
}

fn run_model(cmd: ModelCmd) -> Result<Report, CliError> {
    match cmd {
        ModelCmd::Show { model } => {
            let (m, mv) = load_model(&model)?;
            let mut fields = Vec::new();
            for i in 0..m.dim {
                let u = basis_field::<f64>(m.dim, i);
                let ops = derived_operators(&m, &u);
                fields.push(json!({
                    "field": format!("e{}", i + 1),
                    "q": ops.q,
                    "laplacian": ops.laplacian,
                    "s": ops.s,
                    "div": ops.div,
                    "grad_norm_sq": ops.grad_norm_sq,
                    "killing": m.is_killing(&u),
                }));
            }
            Ok(Report {
                command: "model show".into(),
                inputs: json!({"model": mv}),
                results: json!({
                    "dim": m.dim,
                    "connection": m.conn,
                    "curvature": m.curv,
                    "frame_fields": fields,
                }),
                warnings: vec![],
            })
        }
    }
}
