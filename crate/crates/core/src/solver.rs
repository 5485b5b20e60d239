//! Newton–Armijo root finding with machine-precision Jacobian columns.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrator::{torque_from_step, DiscreteTrajectory};
use crate::liegroup::{exp_so3, log_so3, RotationMatrix, Vec3};
use crate::optctrl::{cost, ManeuverSpec, OptimalControlProblem, ProblemError, ResidualSystem, UnknownVector};
use crate::scalar::{Complex64, Dual};

/// Imaginary step for complex-step differentiation.
pub const COMPLEX_STEP: f64 = f64::EPSILON;

/// Base step for the central finite-difference fallback.
pub const FD_STEP: f64 = 1e-6;

const SINGULAR_PIVOT: f64 = 1e-14;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeMode {
    #[default]
    Dual,
    ComplexStep,
    FiniteDifference,
}

impl fmt::Display for DerivativeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DerivativeMode::Dual => "dual",
            DerivativeMode::ComplexStep => "complex-step",
            DerivativeMode::FiniteDifference => "finite-difference",
        })
    }
}

impl FromStr for DerivativeMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dual" => Ok(Self::Dual),
            "complex-step" => Ok(Self::ComplexStep),
            "finite-difference" => Ok(Self::FiniteDifference),
            other => Err(format!("unknown derivative mode '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Stop when ‖F‖∞ falls to this level.
    pub residual_tolerance: f64,
    pub max_newton_iterations: usize,
    /// Armijo sufficient-decrease slope α.
    pub armijo_slope: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
    pub derivative_mode: DerivativeMode,
    /// Evaluate Jacobian columns on the rayon pool.
    pub parallel: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            residual_tolerance: 1e-10,
            max_newton_iterations: 200,
            armijo_slope: 1e-4,
            backtrack_factor: 0.5,
            max_backtracks: 40,
            derivative_mode: DerivativeMode::Dual,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptionsError {
    #[error("armijo slope must lie in (0, 1), got {0}")]
    ArmijoSlope(f64),
    #[error("backtrack factor must lie in (0, 1), got {0}")]
    BacktrackFactor(f64),
    #[error("residual tolerance must be positive, got {0}")]
    Tolerance(f64),
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), OptionsError> {
        if !(self.armijo_slope > 0.0 && self.armijo_slope < 1.0) {
            return Err(OptionsError::ArmijoSlope(self.armijo_slope));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(OptionsError::BacktrackFactor(self.backtrack_factor));
        }
        if !(self.residual_tolerance > 0.0) {
            return Err(OptionsError::Tolerance(self.residual_tolerance));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIterations,
    SingularJacobian,
    LineSearchFailed,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "iteration limit reached",
            Termination::SingularJacobian => "singular Jacobian",
            Termination::LineSearchFailed => "line search failed",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub converged: bool,
    pub termination: Termination,
    pub iterations: usize,
    pub final_residual: f64,
    /// ‖F‖∞ at every iterate, starting with x0.
    pub residual_history: Vec<f64>,
    /// Step-length halvings taken at each accepted Newton step.
    pub backtracks: Vec<usize>,
    pub wall_time: Duration,
    /// Set when [`initialize`] had to route around a half-turn.
    pub initialization_note: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub report: SolveReport,
}

/// Failed solve. Carries the best iterate found so far.
#[derive(Clone, Debug, PartialEq, Error)]
#[error("{}: ‖F‖∞ = {:e} after {} iterations", .best.report.termination, .best.report.final_residual, .best.report.iterations)]
pub struct SolveFailure {
    pub best: Solution,
}

/// ∂F/∂x_k at `x`.
pub fn directional_derivative<F: ResidualSystem>(f: &F, x: &[f64], k: usize, mode: DerivativeMode) -> Vec<f64> {
    assert!(k < x.len());
    match mode {
        DerivativeMode::Dual => {
            let xd: Vec<Dual> = x.iter().enumerate().map(|(i, &v)| Dual::new(v, if i == k { 1.0 } else { 0.0 })).collect();
            f.eval(&xd).into_iter().map(|d| d.du).collect()
        }
        DerivativeMode::ComplexStep => {
            let xc: Vec<Complex64> = x
                .iter()
                .enumerate()
                .map(|(i, &v)| Complex64::new(v, if i == k { COMPLEX_STEP } else { 0.0 }))
                .collect();
            f.eval(&xc).into_iter().map(|c| c.im / COMPLEX_STEP).collect()
        }
        DerivativeMode::FiniteDifference => {
            let step = FD_STEP * x[k].abs().max(1.0);
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += step;
            xm[k] -= step;
            let dx = xp[k] - xm[k];
            let fp = f.eval(&xp);
            let fm = f.eval(&xm);
            fp.iter().zip(&fm).map(|(a, b)| (a - b) / dx).collect()
        }
    }
}

/// Jacobian assembled column by column; parallel when `parallel` is set.
pub fn jacobian<F: ResidualSystem>(f: &F, x: &[f64], mode: DerivativeMode, parallel: bool) -> DMatrix<f64> {
    let n = x.len();
    let cols: Vec<Vec<f64>> = if parallel {
        (0..n).into_par_iter().map(|k| directional_derivative(f, x, k, mode)).collect()
    } else {
        (0..n).map(|k| directional_derivative(f, x, k, mode)).collect()
    };
    assemble(f.dim(), n, cols.iter().enumerate())
}

/// Jacobian with columns evaluated sequentially in the given order.
pub fn jacobian_in_order<F: ResidualSystem>(f: &F, x: &[f64], mode: DerivativeMode, order: &[usize]) -> DMatrix<f64> {
    let cols: Vec<(usize, Vec<f64>)> = order.iter().map(|&k| (k, directional_derivative(f, x, k, mode))).collect();
    assemble(f.dim(), x.len(), cols.iter().map(|(k, c)| (*k, c)))
}

fn assemble<'a>(rows: usize, n: usize, cols: impl Iterator<Item = (usize, &'a Vec<f64>)>) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(rows, n);
    for (k, col) in cols {
        jac.column_mut(k).copy_from_slice(col);
    }
    jac
}

fn norm_inf(v: &[f64]) -> f64 {
    if v.iter().any(|x| x.is_nan()) {
        return f64::NAN;
    }
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn norm_2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Damped Newton iteration `x ← x + λd` with `J(x) d = −F(x)` solved by LU
/// with partial pivoting and λ halved until
/// `‖F(x + λd)‖₂ ≤ (1 − αλ) ‖F(x)‖₂`.
pub fn newton_armijo<F: ResidualSystem>(f: &F, x0: &[f64], opts: &SolverOptions) -> Result<Solution, SolveFailure> {
    assert_eq!(f.dim(), x0.len(), "square system required");
    let start = Instant::now();
    let mut x = x0.to_vec();
    let mut fx = f.eval(&x);
    let mut rinf = norm_inf(&fx);
    let mut history = vec![rinf];
    let mut backtracks = Vec::new();

    let finish = |x: Vec<f64>, history: Vec<f64>, backtracks: Vec<usize>, termination: Termination| {
        let final_residual = *history.last().unwrap();
        let report = SolveReport {
            converged: termination == Termination::Converged,
            termination,
            iterations: history.len() - 1,
            final_residual,
            residual_history: history,
            backtracks,
            wall_time: start.elapsed(),
            initialization_note: None,
        };
        let sol = Solution { x, report };
        if termination == Termination::Converged {
            Ok(sol)
        } else {
            Err(SolveFailure { best: sol })
        }
    };

    loop {
        if rinf <= opts.residual_tolerance {
            return finish(x, history, backtracks, Termination::Converged);
        }
        if history.len() > opts.max_newton_iterations {
            return finish(x, history, backtracks, Termination::MaxIterations);
        }

        let jac = jacobian(f, &x, opts.derivative_mode, opts.parallel);
        let scale = jac.amax();
        let lu = jac.lu();
        let min_pivot = lu.u().diagonal().amin();
        if !(min_pivot > SINGULAR_PIVOT * scale) {
            return finish(x, history, backtracks, Termination::SingularJacobian);
        }
        let rhs = -DVector::from_column_slice(&fx);
        let Some(d) = lu.solve(&rhs) else {
            return finish(x, history, backtracks, Termination::SingularJacobian);
        };

        let merit = norm_2(&fx);
        let mut lambda = 1.0;
        let mut halvings = 0;
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(d.iter()).map(|(a, b)| a + lambda * b).collect();
            let ft = f.eval(&trial);
            let tm = norm_2(&ft);
            if tm.is_finite() && tm <= (1.0 - opts.armijo_slope * lambda) * merit {
                break Some((trial, ft));
            }
            if halvings == opts.max_backtracks {
                break None;
            }
            lambda *= opts.backtrack_factor;
            halvings += 1;
        };
        let Some((trial, ft)) = accepted else {
            return finish(x, history, backtracks, Termination::LineSearchFailed);
        };
        x = trial;
        fx = ft;
        rinf = norm_inf(&fx);
        history.push(rinf);
        backtracks.push(halvings);
    }
}

/// Starting guess for [`newton_armijo`].
#[derive(Clone, Debug, PartialEq)]
pub struct Initialization {
    pub x: UnknownVector,
    /// Present when the boundary rotations differ by a half turn and the guess
    /// was routed through an intermediate attitude.
    pub note: Option<String>,
}

/// Constant-rate profile between two attitudes, or `None` for a half turn.
fn geodesic_rate(from: &RotationMatrix, to: &RotationMatrix, duration: f64) -> Option<Vec3> {
    log_so3(&from.transpose().compose(to)).ok().map(|v| v.scale(1.0 / duration))
}

/// Geodesic-rate guess blended into the boundary velocities over the first
/// and last quarter of the horizon, with torques from [`torque_from_step`] so
/// the momentum block is satisfied at the start.
pub fn initialize(spec: &ManeuverSpec) -> Initialization {
    let n = spec.steps;
    let t = spec.horizon;
    let h = spec.h();

    let (rates, note): (Box<dyn Fn(f64) -> Vec3>, Option<String>) = match geodesic_rate(&spec.r0, &spec.rn, t) {
        Some(w) => (Box::new(move |_| w), None),
        None => {
            // Half turn: route through exp(π/2 e_i) R_0, trying e_1 first.
            let mut found = None;
            for axis in 0..3 {
                let mut e = Vec3::zeros();
                e.0[axis] = std::f64::consts::FRAC_PI_2;
                let mid = exp_so3(&e).compose(&spec.r0);
                if let (Some(a), Some(b)) =
                    (geodesic_rate(&spec.r0, &mid, 0.5 * t), geodesic_rate(&mid, &spec.rn, 0.5 * t))
                {
                    found = Some((a, b, axis + 1));
                    break;
                }
            }
            let (a, b, axis) = found.expect("a half turn cannot be orthogonal to all three axes");
            let note = format!("boundary attitudes differ by a half turn; initial guess routed through exp(pi/2 e{axis}) R0");
            (Box::new(move |s| if s < 0.5 { a } else { b }), Some(note))
        }
    };

    let omegas: Vec<Vec3> = (0..n)
        .map(|k| {
            let s = k as f64 / (n - 1) as f64;
            let mid = rates(s);
            if s < 0.25 {
                let w = s / 0.25;
                spec.omega0.scale(1.0 - w) + mid.scale(w)
            } else if s > 0.75 {
                let w = (1.0 - s) / 0.25;
                spec.omega_nm1.scale(1.0 - w) + mid.scale(w)
            } else {
                mid
            }
        })
        .collect();
    let torques: Vec<Vec3> = (1..n).map(|k| torque_from_step(&spec.inertia, &omegas[k - 1], &omegas[k], h)).collect();
    Initialization { x: UnknownVector::pack(spec.layout(), &torques, &omegas[1..n - 1]), note }
}

/// Solved (or best-effort) maneuver.
#[derive(Clone, Debug)]
pub struct ManeuverSolution {
    pub spec: ManeuverSpec,
    pub x: UnknownVector,
    pub trajectory: DiscreteTrajectory,
    pub cost: f64,
    pub report: SolveReport,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Options(#[from] OptionsError),
    #[error("solver did not converge: {}", .0.report.termination)]
    NotConverged(Box<ManeuverSolution>),
}

/// Initialize and run Newton–Armijo on the full discrete system.
pub fn solve_maneuver(spec: &ManeuverSpec, opts: &SolverOptions) -> Result<ManeuverSolution, SolveError> {
    opts.validate()?;
    let problem = OptimalControlProblem::new(spec.clone())?;
    let init = initialize(spec);
    let (sol, converged) = match newton_armijo(&problem, init.x.as_slice(), opts) {
        Ok(s) => (s, true),
        Err(f) => (f.best, false),
    };
    let mut report = sol.report;
    report.initialization_note = init.note;
    let x = UnknownVector::from_vec(problem.layout(), sol.x)?;
    let trajectory = problem.trajectory(&x);
    let out = ManeuverSolution { spec: spec.clone(), cost: cost(&trajectory), x, trajectory, report };
    if converged {
        Ok(out)
    } else {
        Err(SolveError::NotConverged(Box::new(out)))
    }
}
