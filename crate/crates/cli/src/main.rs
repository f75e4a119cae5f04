//! Command-line front end: instance I/O and report emission for model
//! profiles, needle checks, localization, isoperimetric estimation and
//! Brunn–Minkowski checks.

use clap::{Args, Parser, Subcommand};
use needles::comparison::EffectiveDim;
use needles::io::{parse_ext_real, LocalizeSpec, NeedleCheckSpec, NormSpec};
use needles::isoperimetry::{
    check_brunn_minkowski_discrete, check_brunn_minkowski_line, estimate_profile,
    verify_main_inequality, IsoInstance, LineWeight,
};
use needles::localization::{
    check_cyclical_monotonicity, check_per_ray_mean_zero, check_saturated_mean_zero, decompose,
    default_eps_tight, solve_potential, tight_graph,
};
use needles::model_profiles::{
    bakry_ledoux_profile, levy_gromov_profile, numerical_model_profile, Profile, ProfileSpec,
};
use needles::needle1d::{check_cd_density, check_differential_form, check_mcp_ratio, DIFF_SLACK};
use needles::norms::CircleStructure;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "needles",
    version,
    about = "Needle decompositions and isoperimetric profiles on asymmetric spaces"
)]
struct CliArgs {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Report output path (JSON). Stdout carries a short summary.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for sampled checks; recorded in every report.
    #[arg(long, default_value_t = 271828)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Model isoperimetric profile values.
    Profile {
        #[arg(long = "K", allow_hyphen_values = true)]
        k: f64,
        /// Effective dimension: a number or "inf".
        #[arg(long = "N", allow_hyphen_values = true)]
        n: String,
        /// Diameter bound: a number, "pi" or "inf".
        #[arg(long = "D", default_value = "inf")]
        d: String,
        /// Volume fractions to evaluate.
        #[arg(long = "theta", required = true)]
        thetas: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Curvature checks on a needle density instance (JSON).
    NeedleCheck {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Solve the mean-zero problem and decompose into transport rays.
    Localize {
        #[arg(long)]
        input: PathBuf,
        /// Repair triangle-inequality failures by shortest-path closure.
        #[arg(long)]
        metric_repair: bool,
        /// Tightness threshold override.
        #[arg(long)]
        eps_tight: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Estimate an isoperimetric profile and certify the model bound.
    Isoperimetry {
        /// Built-in instance: "circle" or "randers-gauss".
        #[arg(long)]
        instance: String,
        #[arg(long = "D", default_value_t = 1.0)]
        d: f64,
        #[arg(long = "Lambda", default_value_t = 1.0)]
        lambda: f64,
        /// Grid sites (circle) or side length (plane).
        #[arg(long)]
        points: Option<usize>,
        /// Randers drift magnitude along the first axis.
        #[arg(long, default_value_t = 0.3)]
        drift: f64,
        /// Gaussian weight parameter K.
        #[arg(long = "K", default_value_t = 1.0)]
        k: f64,
        #[arg(long = "theta", num_args = 0.., default_values_t = [0.25, 0.5, 0.75])]
        thetas: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Brunn–Minkowski check from a JSON instance.
    BmCheck {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Norm diagnostics: reversibility constant and axiom sweep.
    NormInfo {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Emit gnuplot-ready CSV columns from an isoperimetry report.
    EmitPlotData {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Command outcomes map to exit codes: parse failures exit 2, invariant
/// violations exit 1.
enum CmdError {
    Parse(String),
    Invariant(String),
}

impl CmdError {
    fn emit(&self) -> ExitCode {
        let (kind, msg, code) = match self {
            CmdError::Parse(m) => ("parse-error", m, 2),
            CmdError::Invariant(m) => ("invariant-violation", m, 1),
        };
        eprintln!("{}", json!({ "error": kind, "message": msg }));
        ExitCode::from(code)
    }
}

fn main() -> ExitCode {
    let cli = CliArgs::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.emit(),
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CmdError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CmdError::Parse(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CmdError::Parse(format!("bad JSON: {e}")))
}

fn write_report(out: &Option<PathBuf>, report: &serde_json::Value) -> Result<(), CmdError> {
    if let Some(path) = out {
        let text =
            serde_json::to_string_pretty(report).map_err(|e| CmdError::Parse(e.to_string()))?;
        std::fs::write(path, text)
            .map_err(|e| CmdError::Parse(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn run(cmd: Command) -> Result<(), CmdError> {
    match cmd {
        Command::Profile { k, n, d, thetas, common } => profile_cmd(k, &n, &d, &thetas, &common),
        Command::NeedleCheck { input, trials, common } => needle_check_cmd(&input, trials, &common),
        Command::Localize { input, metric_repair, eps_tight, common } => {
            localize_cmd(&input, metric_repair, eps_tight, &common)
        }
        Command::Isoperimetry { instance, d, lambda, points, drift, k, thetas, common } => {
            isoperimetry_cmd(&instance, d, lambda, points, drift, k, &thetas, &common)
        }
        Command::BmCheck { input, common } => bm_check_cmd(&input, &common),
        Command::NormInfo { input, common } => norm_info_cmd(&input, &common),
        Command::EmitPlotData { report, out } => emit_plot_data_cmd(&report, &out),
    }
}

fn profile_cmd(
    k: f64,
    n_str: &str,
    d_str: &str,
    thetas: &[f64],
    common: &Common,
) -> Result<(), CmdError> {
    let n = parse_ext_real(n_str).map_err(|e| CmdError::Parse(e.to_string()))?;
    let d = parse_ext_real(d_str).map_err(|e| CmdError::Parse(e.to_string()))?;
    if thetas.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
        return Err(CmdError::Parse("theta must lie in [0, 1]".into()));
    }
    let sphere_branch = n.is_finite()
        && n > 1.0
        && k > 0.0
        && d >= std::f64::consts::PI * ((n - 1.0) / k).sqrt();
    let values: Vec<f64> = if n.is_infinite() && k > 0.0 && d.is_infinite() {
        thetas.iter().map(|&t| bakry_ledoux_profile(k, t)).collect()
    } else if sphere_branch {
        thetas.iter().map(|&t| levy_gromov_profile(k, n, t)).collect()
    } else {
        let eff = if n.is_infinite() { EffectiveDim::Infinite } else { EffectiveDim::Finite(n) };
        let params = needles::comparison::CdParams::needle(k, eff)
            .map_err(|e| CmdError::Parse(e.to_string()))?;
        let inner: Vec<f64> = thetas.iter().cloned().filter(|&t| t > 0.0 && t < 1.0).collect();
        let spec = ProfileSpec::new(params, d, inner.clone());
        let prof =
            numerical_model_profile(&spec).map_err(|e| CmdError::Parse(e.to_string()))?;
        thetas
            .iter()
            .map(|&t| {
                if t == 0.0 || t == 1.0 {
                    0.0
                } else {
                    prof.values[inner.iter().position(|&u| u == t).unwrap()]
                }
            })
            .collect()
    };
    for v in &values {
        println!("{v:.7}");
    }
    let report = json!({
        "version": VERSION,
        "command": "profile",
        "seed": common.seed,
        "k": k, "n": n_str, "d": d_str,
        "thetas": thetas,
        "values": values,
    });
    // A .csv output takes the plain (theta, value) rows.
    if let Some(path) = &common.out {
        if path.extension().is_some_and(|e| e == "csv") {
            let prof = Profile { thetas: thetas.to_vec(), values };
            return std::fs::write(path, prof.to_csv())
                .map_err(|e| CmdError::Parse(format!("cannot write {}: {e}", path.display())));
        }
    }
    write_report(&common.out, &report)
}

fn needle_check_cmd(
    input: &Path,
    trials_override: Option<usize>,
    common: &Common,
) -> Result<(), CmdError> {
    let spec: NeedleCheckSpec = read_json(input)?;
    let rho = spec.density.build().map_err(|e| CmdError::Parse(e.to_string()))?;
    let params = spec.params.build().map_err(|e| CmdError::Parse(e.to_string()))?;
    let trials = trials_override.unwrap_or(spec.trials);
    let mut sections = serde_json::Map::new();
    let mut violations = 0usize;
    for check in &spec.checks {
        match check.as_str() {
            "cd" => {
                let rep = check_cd_density(&rho, &params, trials, common.seed);
                violations += rep.violations;
                sections.insert("cd".into(), serde_json::to_value(&rep).unwrap());
            }
            "mcp" => {
                let rep = check_mcp_ratio(&rho, &params, trials, common.seed);
                violations += rep.violations;
                sections.insert("mcp".into(), serde_json::to_value(&rep).unwrap());
            }
            "differential" => {
                let rep = check_differential_form(&rho, &params, DIFF_SLACK)
                    .map_err(|e| CmdError::Parse(e.to_string()))?;
                violations += rep.violations;
                sections.insert("differential".into(), serde_json::to_value(&rep).unwrap());
            }
            other => return Err(CmdError::Parse(format!("unknown check '{other}'"))),
        }
    }
    let mut mollified = Vec::new();
    for &eps in &spec.mollify_eps {
        let sm = rho.mollify(&params, eps).map_err(|e| CmdError::Parse(e.to_string()))?;
        let relaxed = needles::comparison::CdParams::new(
            params.k() - 1e-3,
            params.n_eff(),
            params.n_top(),
        )
        .map_err(|e| CmdError::Parse(e.to_string()))?;
        let rep = check_differential_form(&sm, &relaxed, DIFF_SLACK)
            .map_err(|e| CmdError::Parse(e.to_string()))?;
        violations += rep.violations;
        mollified.push(json!({ "eps": eps, "differential": rep }));
    }
    let report = json!({
        "version": VERSION,
        "command": "needle-check",
        "seed": common.seed,
        "trials": trials,
        "params": { "k": params.k(), "n": params.n_eff().to_string() },
        "checks": sections,
        "mollified": mollified,
        "violations": violations,
    });
    println!("violations: {violations}");
    write_report(&common.out, &report)?;
    if violations > 0 {
        return Err(CmdError::Invariant(format!("{violations} sampled violations")));
    }
    Ok(())
}

fn localize_cmd(
    input: &Path,
    metric_repair: bool,
    eps_override: Option<f64>,
    common: &Common,
) -> Result<(), CmdError> {
    let spec: LocalizeSpec = read_json(input)?;
    let (space, f) = spec.build(metric_repair).map_err(|e| CmdError::Parse(e.to_string()))?;
    let sol = solve_potential(&space, &f).map_err(|e| CmdError::Invariant(e.to_string()))?;
    let eps_tight = eps_override.unwrap_or_else(|| default_eps_tight(&space));
    let dec =
        decompose(&space, &sol.phi, eps_tight).map_err(|e| CmdError::Invariant(e.to_string()))?;
    let structure_ok = dec.validate(&space, &sol.phi, eps_tight * 4.0);
    let mean_zero = check_per_ray_mean_zero(&space, &f, &dec);
    let all: Vec<usize> = (0..space.len()).collect();
    let total_residual = check_saturated_mean_zero(&space, &sol.phi, &f, &all, eps_tight)
        .map_err(|e| CmdError::Invariant(e.to_string()))?;
    let skeleton = tight_graph(&space, &sol.phi, eps_tight);
    let sample: Vec<(usize, usize)> = skeleton.edges.iter().take(24).cloned().collect();
    let monotone = check_cyclical_monotonicity(&space, &sample, 1, 3);
    let dual: f64 = (0..space.len()).map(|i| f[i] * space.weight(i) * sol.phi[i]).sum();
    let gap = (sol.objective - dual).abs();
    let label =
        |set: &[usize]| -> Vec<String> { set.iter().map(|&i| space.labels()[i].clone()).collect() };
    let report = json!({
        "version": VERSION,
        "command": "localize",
        "seed": common.seed,
        "eps_tight": eps_tight,
        "objective": sol.objective,
        "duality_gap": gap,
        "rays": dec.rays.iter().map(|r| json!({
            "points": label(&r.points),
            "params": r.params,
            "v_weight": r.v_weight,
            "mu": r.mu,
        })).collect::<Vec<_>>(),
        "d_set": label(&dec.d_set),
        "t_set_size": dec.t_set.len(),
        "b_plus": label(&dec.b_plus),
        "b_minus": label(&dec.b_minus),
        "b_mass": dec.b_mass,
        "max_ray_residual": mean_zero.max_ray_residual,
        "d_residual": mean_zero.d_residual,
        "total_mean_zero_residual": total_residual,
        "structure_valid": structure_ok,
        "skeleton_cyclically_monotone": monotone,
    });
    println!(
        "rays: {}  D: {}  B+: {}  B-: {}  gap: {:.3e}",
        dec.rays.len(),
        dec.d_set.len(),
        dec.b_plus.len(),
        dec.b_minus.len(),
        gap
    );
    write_report(&common.out, &report)?;
    if !structure_ok || !monotone {
        return Err(CmdError::Invariant("decomposition structure check failed".into()));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn isoperimetry_cmd(
    instance: &str,
    d: f64,
    lambda: f64,
    points: Option<usize>,
    drift: f64,
    k: f64,
    thetas: &[f64],
    common: &Common,
) -> Result<(), CmdError> {
    if thetas.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(CmdError::Parse("theta must lie strictly inside (0, 1)".into()));
    }
    let inst = match instance {
        "circle" => {
            let cs = CircleStructure::new(d, lambda);
            IsoInstance::circle(&cs, points.unwrap_or(10_000))
        }
        "randers-gauss" => {
            IsoInstance::randers_gaussian_plane([drift, 0.0], k, 4.0, points.unwrap_or(300))
        }
        other => return Err(CmdError::Parse(format!("unknown instance '{other}'"))),
    };
    if !inst.lambda_consistent() {
        return Err(CmdError::Invariant(
            "declared reversibility constant is inconsistent with the space".into(),
        ));
    }
    let profile =
        estimate_profile(&inst, thetas).map_err(|e| CmdError::Invariant(e.to_string()))?;
    let report = verify_main_inequality(&inst, &profile);
    for row in &report.rows {
        println!(
            "theta {:.4}: estimate {:.6}  bound {:.6}  margin {:+.6}",
            row.theta, row.estimate, row.bound, row.margin
        );
    }
    let doc = json!({
        "version": VERSION,
        "command": "isoperimetry",
        "seed": common.seed,
        "instance": instance,
        "points": points.unwrap_or(if instance == "circle" { 10_000 } else { 300 }),
        "eps_schedule_steps": needles::isoperimetry::EPS_STEPS,
        "lambda": report.lambda,
        "tol_grid": report.tol_grid,
        "profile": { "thetas": profile.thetas, "values": profile.values },
        "margins": report.rows,
        "flagged": report.flagged,
    });
    write_report(&common.out, &doc)?;
    if report.flagged > 0 {
        return Err(CmdError::Invariant(format!(
            "{} margins fall below -tol_grid",
            report.flagged
        )));
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum BmSpec {
    Line {
        /// Exponential weight rate; omitted means Lebesgue.
        #[serde(default)]
        exp_rate: Option<f64>,
        k: f64,
        a0: [f64; 2],
        a1: [f64; 2],
        lambdas: Vec<f64>,
    },
    Discrete {
        space: BmSpace,
        k: f64,
        a0: Vec<usize>,
        a1: Vec<usize>,
        lambdas: Vec<f64>,
        cell_tol: f64,
    },
}

#[derive(Deserialize)]
struct BmSpace {
    #[serde(default)]
    points: Vec<String>,
    d: Vec<Vec<f64>>,
    m: Vec<f64>,
}

fn bm_check_cmd(input: &Path, common: &Common) -> Result<(), CmdError> {
    let spec: BmSpec = read_json(input)?;
    let (report, kind) = match spec {
        BmSpec::Line { exp_rate, k, a0, a1, lambdas } => {
            let weight = match exp_rate {
                None => LineWeight::Lebesgue,
                Some(r) => LineWeight::ExpRate(r),
            };
            (
                check_brunn_minkowski_line(&weight, k, (a0[0], a0[1]), (a1[0], a1[1]), &lambdas),
                "line",
            )
        }
        BmSpec::Discrete { space, k, a0, a1, lambdas, cell_tol } => {
            let labels = if space.points.is_empty() {
                (0..space.d.len()).map(|i| i.to_string()).collect()
            } else {
                space.points
            };
            let s = needles::localization::FiniteAsymSpace::new(labels, space.d, space.m)
                .map_err(|e| CmdError::Parse(e.to_string()))?;
            (check_brunn_minkowski_discrete(&s, k, &a0, &a1, &lambdas, cell_tol), "discrete")
        }
    };
    println!("violations: {}", report.violations);
    let doc = json!({
        "version": VERSION,
        "command": "bm-check",
        "seed": common.seed,
        "kind": kind,
        "rows": report.rows,
        "violations": report.violations,
    });
    write_report(&common.out, &doc)?;
    if report.violations > 0 {
        return Err(CmdError::Invariant(format!("{} violations", report.violations)));
    }
    Ok(())
}

fn norm_info_cmd(input: &Path, common: &Common) -> Result<(), CmdError> {
    let spec: NormSpec = read_json(input)?;
    let norm = spec.build().map_err(|e| CmdError::Parse(e.to_string()))?;
    let lambda = norm.reversibility_constant();
    // Axiom sweep: homogeneity and the triangle inequality on a sample.
    let mut worst_hom = 0.0f64;
    let mut worst_tri = 0.0f64;
    if norm.dim() == 2 {
        for i in 0..512 {
            let th = 2.0 * std::f64::consts::PI * i as f64 / 512.0;
            let v = [th.cos(), th.sin()];
            let nv = norm.evaluate(&v);
            let scaled = norm.evaluate(&[3.0 * v[0], 3.0 * v[1]]);
            worst_hom = worst_hom.max((scaled - 3.0 * nv).abs() / (3.0 * nv));
            let u = [(2.0 * th).cos(), (2.0 * th).sin()];
            let tri = norm.evaluate(&[v[0] + u[0], v[1] + u[1]]) - nv - norm.evaluate(&u);
            worst_tri = worst_tri.max(tri);
        }
    }
    println!("lambda: {lambda:.9}");
    let doc = json!({
        "version": VERSION,
        "command": "norm-info",
        "seed": common.seed,
        "dim": norm.dim(),
        "lambda": lambda,
        "worst_homogeneity_defect": worst_hom,
        "worst_triangle_defect": worst_tri,
    });
    write_report(&common.out, &doc)?;
    if worst_hom > 1e-12 || worst_tri > 1e-10 {
        return Err(CmdError::Invariant("norm axioms fail on the sweep".into()));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct StoredMarginRow {
    theta: f64,
    estimate: f64,
    bound: f64,
    margin: f64,
}

fn emit_plot_data_cmd(report_path: &Path, out: &Path) -> Result<(), CmdError> {
    let doc: serde_json::Value = read_json(report_path)?;
    let rows: Vec<StoredMarginRow> = serde_json::from_value(
        doc.get("margins")
            .cloned()
            .ok_or_else(|| CmdError::Parse("missing field 'margins'".into()))?,
    )
    .map_err(|e| CmdError::Parse(format!("missing field: {e}")))?;
    let mut csv = String::from("theta,I_est,Lambda_inv_model,margin\n");
    for r in rows {
        csv.push_str(&format!("{},{},{},{}\n", r.theta, r.estimate, r.bound, r.margin));
    }
    std::fs::write(out, csv)
        .map_err(|e| CmdError::Parse(format!("cannot write {}: {e}", out.display())))?;
    Ok(())
}
