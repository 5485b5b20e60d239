//! File formats and subcommand drivers behind the `rigid-dmoc` binary.
//!
//! A maneuver file is TOML:
//!
//! ```toml
//! inertia = { diag = [5.0, 4.0, 3.0] }        # kg m^2, or matrix = [9 reals]
//! r0 = { matrix = [1, 0, 0, 0, 1, 0, 0, 0, 1] }
//! rN = { axis_angle = [0.0, 0.0, 1.0, 1.5707963267948966] }   # axis, angle in rad
//! omega0 = [0.0, 0.0, 0.0]                     # rad/s
//! omegaNm1 = [0.0, 0.0, 0.0]                   # rad/s
//! T = 3.0                                      # s
//! N = 32
//!
//! [solver]                                     # optional
//! tolerance = 1e-10
//! max_iterations = 200
//! derivative_mode = "dual"                     # or "complex-step", "finite-difference"
//!
//! [output]                                     # optional, relative to the file
//! csv = "quarter_turn.csv"
//! svg = "quarter_turn.svg"
//! report = "quarter_turn.toml"
//! ```
//!
//! Unknown keys are rejected. Exit codes: 0 success, 2 input error, 3
//! simulation failure, 4 solver nonconvergence, 5 validation failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrator::{simulate, DiscreteTrajectory};
use crate::liegroup::{InertiaModel, Mat3, RotationMatrix, Vec3};
use crate::optctrl::ManeuverSpec;
use crate::solver::{solve_maneuver, DerivativeMode, ManeuverSolution, SolveError, SolverOptions};
use crate::validate::{run_checks, Check, ValidateError, ValidateOptions, ValidationReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SIMULATION: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;
pub const EXIT_VALIDATION: i32 = 5;

pub const CSV_HEADER: [&str; 17] =
    ["k", "t", "R11", "R12", "R13", "R21", "R22", "R23", "R31", "R32", "R33", "wx", "wy", "wz", "tx", "ty", "tz"];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("simulation failed: {0}")]
    Simulation(String),
    #[error("{0}")]
    NotConverged(String),
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Simulation(_) => EXIT_SIMULATION,
            CliError::NotConverged(_) => EXIT_NOT_CONVERGED,
            CliError::Validation(_) => EXIT_VALIDATION,
        }
    }
}

fn input<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Input(format!("{context}: {e}"))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InertiaEntry {
    pub diag: Option<[f64; 3]>,
    pub matrix: Option<[f64; 9]>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttitudeEntry {
    pub matrix: Option<[f64; 9]>,
    pub axis_angle: Option<[f64; 4]>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub derivative_mode: Option<DerivativeMode>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

/// Raw maneuver file contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManeuverFile {
    pub inertia: InertiaEntry,
    pub r0: AttitudeEntry,
    #[serde(rename = "rN")]
    pub rn: AttitudeEntry,
    pub omega0: [f64; 3],
    #[serde(rename = "omegaNm1")]
    pub omega_nm1: [f64; 3],
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "N")]
    pub steps: usize,
    pub solver: Option<SolverBlock>,
    pub output: Option<OutputBlock>,
}

/// A parsed and validated maneuver file.
#[derive(Clone, Debug)]
pub struct Maneuver {
    pub spec: ManeuverSpec,
    pub solver: SolverOptions,
    /// Output paths, already resolved against the file's directory.
    pub output: OutputBlock,
}

fn inertia_from(e: &InertiaEntry) -> Result<InertiaModel, CliError> {
    let model = match (e.diag, e.matrix) {
        (Some(d), None) => InertiaModel::from_principal(d),
        (None, Some(m)) => InertiaModel::from_body(Mat3::from_row_slice(&m)),
        _ => return Err(CliError::Input("inertia: give exactly one of 'diag' or 'matrix'".into())),
    };
    model.map_err(input("inertia"))
}

fn attitude_from(e: &AttitudeEntry, name: &str) -> Result<RotationMatrix, CliError> {
    match (e.matrix, e.axis_angle) {
        (Some(m), None) => RotationMatrix::from_row_slice(&m).map_err(input(name)),
        (None, Some([x, y, z, angle])) => {
            let axis = Vec3::new(x, y, z);
            let n = axis.norm();
            if !(n > 0.0) || !n.is_finite() || !angle.is_finite() {
                return Err(CliError::Input(format!("{name}: axis_angle needs a nonzero finite axis and finite angle")));
            }
            RotationMatrix::from_axis_angle(&axis.scale(1.0 / n), angle).map_err(input(name))
        }
        _ => Err(CliError::Input(format!("{name}: give exactly one of 'matrix' or 'axis_angle'"))),
    }
}

impl ManeuverFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(input("maneuver file"))
    }

    /// Validate and convert. Relative output paths are resolved against `base`.
    pub fn into_maneuver(self, base: &Path) -> Result<Maneuver, CliError> {
        let inertia = inertia_from(&self.inertia)?;
        let r0 = attitude_from(&self.r0, "r0")?;
        let rn = attitude_from(&self.rn, "rN")?;
        let spec = ManeuverSpec::new(
            inertia,
            r0,
            rn,
            Vec3(self.omega0),
            Vec3(self.omega_nm1),
            self.horizon,
            self.steps,
        )
        .map_err(input("maneuver"))?;

        let mut solver = SolverOptions::default();
        if let Some(b) = self.solver {
            if let Some(t) = b.tolerance {
                solver.residual_tolerance = t;
            }
            if let Some(m) = b.max_iterations {
                solver.max_newton_iterations = m;
            }
            if let Some(d) = b.derivative_mode {
                solver.derivative_mode = d;
            }
        }
        solver.validate().map_err(input("solver"))?;

        let resolve = |p: Option<PathBuf>| p.map(|p| if p.is_relative() { base.join(p) } else { p });
        let out = self.output.unwrap_or_default();
        let output = OutputBlock { csv: resolve(out.csv), svg: resolve(out.svg), report: resolve(out.report) };
        Ok(Maneuver { spec, solver, output })
    }
}

pub fn load_maneuver(path: &Path) -> Result<Maneuver, CliError> {
    let text = fs::read_to_string(path).map_err(input(path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    ManeuverFile::parse(&text)?.into_maneuver(base)
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Trajectory as CSV text, one row per k = 0..N.
pub fn trajectory_csv(traj: &DiscreteTrajectory) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    let n = traj.steps();
    for k in 0..=n {
        let mut row = vec![k.to_string(), num(k as f64 * traj.h)];
        row.extend(traj.rotations[k].matrix().to_row_array().map(num));
        if k < n {
            row.extend(traj.omegas[k].0.map(num));
        } else {
            row.extend(std::iter::repeat_n(String::new(), 3));
        }
        row.extend(traj.torques[k].0.map(num));
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Interior torques τ_1..τ_{N−1} from CSV text with `tx,ty,tz` columns.
///
/// Accepts either N−1 interior rows or N+1 rows covering k = 0..N, in which
/// case the endpoint torques must be zero. A `k` column, when present, must
/// count up in steps of one.
pub fn read_torques(text: &str, steps: usize) -> Result<Vec<Vec3>, CliError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(input("torque file"))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(ix), Some(iy), Some(iz)) = (col("tx"), col("ty"), col("tz")) else {
        return Err(CliError::Input("torque file: need columns tx, ty, tz".into()));
    };
    let ik = col("k");

    let mut rows = Vec::new();
    let mut ks = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(input("torque file"))?;
        let field = |i: usize| -> Result<f64, CliError> {
            let s = rec.get(i).unwrap_or("").trim();
            s.parse::<f64>().map_err(|e| CliError::Input(format!("torque file row {}: '{s}': {e}", line + 1)))
        };
        rows.push(Vec3::new(field(ix)?, field(iy)?, field(iz)?));
        if let Some(i) = ik {
            let s = rec.get(i).unwrap_or("").trim();
            ks.push(s.parse::<usize>().map_err(|e| CliError::Input(format!("torque file row {}: k '{s}': {e}", line + 1)))?);
        }
    }

    let first = if rows.len() == steps + 1 {
        0
    } else if rows.len() + 1 == steps {
        1
    } else {
        return Err(CliError::Input(format!(
            "torque file has {} rows, expected {} (interior) or {} (k = 0..N)",
            rows.len(),
            steps - 1,
            steps + 1
        )));
    };
    if ik.is_some() && ks.iter().enumerate().any(|(i, &k)| k != first + i) {
        return Err(CliError::Input(format!("torque file: k column must run {first}, {}, ...", first + 1)));
    }
    if first == 0 {
        for &end in &[0, steps] {
            if rows[end] != Vec3::zeros() {
                return Err(CliError::Input(format!("torque file: endpoint torque at k = {end} must be zero")));
            }
        }
        rows.remove(steps);
        rows.remove(0);
    }
    Ok(rows)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(input(format!("writing {}", path.display())))
}

/// Forward simulation of a maneuver file under a torque history.
///
/// Writes CSV to `out`, or to the file's `output.csv`, or returns it when neither is set.
pub fn cmd_simulate(file: &Path, torques: &Path, out: Option<&Path>) -> Result<String, CliError> {
    let man = load_maneuver(file)?;
    let text = fs::read_to_string(torques).map_err(input(torques.display()))?;
    let taus = read_torques(&text, man.spec.steps)?;
    let traj = simulate(&man.spec.inertia, &man.spec.r0, &man.spec.omega0, &taus, man.spec.h())
        .map_err(|e| CliError::Simulation(e.to_string()))?;
    let csv = trajectory_csv(&traj);
    if let Some(p) = out.or(man.output.csv.as_deref()) {
        write_file(p, &csv)?;
    }
    Ok(csv)
}

/// Run report of a solve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReportFile {
    pub converged: bool,
    pub termination: String,
    pub iterations: usize,
    pub final_residual: f64,
    pub cost: f64,
    pub steps: usize,
    pub horizon: f64,
    pub step_size: f64,
    pub derivative_mode: String,
    pub initialization_note: Option<String>,
    pub residual_history: Vec<f64>,
    pub backtracks: Vec<usize>,
    pub wall_time_s: f64,
}

impl SolveReportFile {
    pub fn from_solution(sol: &ManeuverSolution, mode: DerivativeMode) -> Self {
        let r = &sol.report;
        Self {
            converged: r.converged,
            termination: r.termination.to_string(),
            iterations: r.iterations,
            final_residual: r.final_residual,
            cost: sol.cost,
            steps: sol.spec.steps,
            horizon: sol.spec.horizon,
            step_size: sol.spec.h(),
            derivative_mode: mode.to_string(),
            initialization_note: r.initialization_note.clone(),
            residual_history: r.residual_history.clone(),
            backtracks: r.backtracks.clone(),
            wall_time_s: r.wall_time.as_secs_f64(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report is plain data")
    }
}

/// Output paths for [`cmd_solve`]; unset entries fall back to the maneuver file.
#[derive(Clone, Debug, Default)]
pub struct SolveOutputs {
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

/// Solve a maneuver file and write the requested artifacts.
///
/// Artifacts are written for the best iterate even when the solver does not
/// converge; the report then says `converged = false` and the error is
/// [`CliError::NotConverged`].
pub fn cmd_solve(file: &Path, outputs: &SolveOutputs) -> Result<ManeuverSolution, CliError> {
    let man = load_maneuver(file)?;
    let (sol, converged) = match solve_maneuver(&man.spec, &man.solver) {
        Ok(s) => (s, true),
        Err(SolveError::NotConverged(s)) => (*s, false),
        Err(e) => return Err(CliError::Input(e.to_string())),
    };

    let csv_path = outputs.csv.clone().or(man.output.csv);
    let svg_path = outputs.svg.clone().or(man.output.svg);
    let report_path = outputs.report.clone().or(man.output.report);
    if let Some(p) = csv_path {
        write_file(&p, &trajectory_csv(&sol.trajectory))?;
    }
    if let Some(p) = svg_path {
        let title = if converged { "Discrete optimal maneuver" } else { "Discrete maneuver (NOT CONVERGED)" };
        write_file(&p, &trajectory_svg(&sol.trajectory, title))?;
    }
    if let Some(p) = report_path {
        write_file(&p, &SolveReportFile::from_solution(&sol, man.solver.derivative_mode).to_toml())?;
    }
    if converged {
        Ok(sol)
    } else {
        Err(CliError::NotConverged(format!(
            "solver did not converge ({}): residual {:e} after {} iterations",
            sol.report.termination, sol.report.final_residual, sol.report.iterations
        )))
    }
}

#[derive(Serialize)]
struct CheckRow<'a> {
    name: &'a str,
    passed: bool,
    value: f64,
    threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    detail: Option<&'a str>,
}

#[derive(Serialize)]
struct ValidationFile<'a> {
    passed: bool,
    metrics: &'a std::collections::BTreeMap<String, f64>,
    checks: Vec<CheckRow<'a>>,
}

pub fn validation_toml(report: &ValidationReport) -> String {
    let file = ValidationFile {
        passed: report.passed(),
        metrics: &report.metrics,
        checks: report
            .outcomes
            .iter()
            .map(|o| CheckRow {
                name: &o.name,
                passed: o.passed,
                value: o.value,
                threshold: o.threshold,
                detail: o.detail.as_deref(),
            })
            .collect(),
    };
    toml::to_string(&file).expect("report is plain data")
}

/// Parse a comma-separated check list such as `equivariance,oracle`.
pub fn parse_checks(list: &str) -> Result<Vec<Check>, CliError> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(|s| s.parse().map_err(CliError::Input)).collect()
}

/// Run checks on a maneuver file and render the report.
///
/// Failing checks still return `Ok`; pass the report to [`validation_verdict`]
/// for the exit decision. The report is also written to `report`, or to the
/// file's `output.report`, when one is set.
pub fn cmd_validate(file: &Path, checks: &[Check], report: Option<&Path>) -> Result<(ValidationReport, String), CliError> {
    let man = load_maneuver(file)?;
    let opts = ValidateOptions { checks: checks.to_vec(), solver: man.solver.clone(), ..ValidateOptions::default() };
    let rep = run_checks(&man.spec, &opts).map_err(|e| match e {
        ValidateError::Solve { source: SolveError::NotConverged(_), .. } => CliError::NotConverged(e.to_string()),
        _ => CliError::Validation(e.to_string()),
    })?;
    let text = validation_toml(&rep);
    if let Some(p) = report.or(man.output.report.as_deref()) {
        write_file(p, &text)?;
    }
    Ok((rep, text))
}

/// `Err` naming the failed checks, if any.
pub fn validation_verdict(report: &ValidationReport) -> Result<(), CliError> {
    if report.passed() {
        return Ok(());
    }
    let names: Vec<_> = report
        .failures()
        .map(|o| match &o.detail {
            Some(d) => format!("{} ({d})", o.name),
            None => format!("{} ({:e} > {:e})", o.name, o.value, o.threshold),
        })
        .collect();
    Err(CliError::Validation(names.join("; ")))
}

const SVG_W: f64 = 720.0;
const PANEL_H: f64 = 260.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 110.0;
const MARGIN_T: f64 = 40.0;
const GAP: f64 = 60.0;
const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo > 1e-12 {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

fn panel(svg: &mut String, top: f64, title: &str, labels: [&str; 3], ts: &[f64], series: &[Vec3]) {
    let x0 = MARGIN_L;
    let x1 = SVG_W - MARGIN_R;
    let (y_top, y_bot) = (top, top + PANEL_H);
    let t_max = ts.last().copied().unwrap_or(1.0).max(1e-12);
    let lo = series.iter().flat_map(|v| v.0).fold(f64::INFINITY, f64::min);
    let hi = series.iter().flat_map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() { nice_range(lo, hi) } else { (-1.0, 1.0) };
    let px = |t: f64| x0 + (x1 - x0) * t / t_max;
    let py = |v: f64| y_bot - (y_bot - y_top) * (v - lo) / (hi - lo);

    let _ = writeln!(svg, r#"<text x="{}" y="{:.1}" font-size="14" text-anchor="middle">{title}</text>"#, (x0 + x1) / 2.0, y_top - 12.0);
    let _ = writeln!(svg, r#"<rect x="{x0}" y="{y_top}" width="{}" height="{PANEL_H}" fill="none" stroke="black"/>"#, x1 - x0);
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let v = lo + f * (hi - lo);
        let y = py(v);
        let t = f * t_max;
        let x = px(t);
        let _ = writeln!(svg, r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#ddd"/>"##);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.2}" font-size="11" text-anchor="end">{v:.3}</text>"#, x0 - 6.0, y + 4.0);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{:.1}" font-size="11" text-anchor="middle">{t:.2}</text>"#, y_bot + 16.0);
    }
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">t [s]</text>"#, (x0 + x1) / 2.0, y_bot + 34.0);
    for c in 0..3 {
        let pts: Vec<String> = ts.iter().zip(series).map(|(t, v)| format!("{:.2},{:.2}", px(*t), py(v.0[c]))).collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#, COLORS[c], pts.join(" "));
        let ly = y_top + 18.0 + 18.0 * c as f64;
        let _ = writeln!(svg, r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2"/>"#, x1 + 12.0, x1 + 32.0, COLORS[c]);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" font-size="12">{}</text>"#, x1 + 38.0, ly + 4.0, labels[c]);
    }
}

/// Two-panel SVG: body angular velocity and control torque against time.
pub fn trajectory_svg(traj: &DiscreteTrajectory, title: &str) -> String {
    let h = traj.h;
    let total_h = MARGIN_T + 2.0 * PANEL_H + GAP + 60.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{total_h}" viewBox="0 0 {SVG_W} {total_h}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="18" font-size="15" text-anchor="middle">{title}</text>"#, SVG_W / 2.0);
    let tw: Vec<f64> = (0..traj.omegas.len()).map(|k| k as f64 * h).collect();
    let tt: Vec<f64> = (0..traj.torques.len()).map(|k| k as f64 * h).collect();
    panel(&mut svg, MARGIN_T + 20.0, "Angular velocity [rad/s]", ["Ω1", "Ω2", "Ω3"], &tw, &traj.omegas);
    panel(&mut svg, MARGIN_T + 20.0 + PANEL_H + GAP, "Control torque [N m]", ["τ1", "τ2", "τ3"], &tt, &traj.torques);
    svg.push_str("</svg>\n");
    svg
}
