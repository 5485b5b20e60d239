//! Independent checks on solved maneuvers.
//!
//! Each check produces a scalar metric and a pass/fail verdict against a fixed
//! threshold. [`run_checks`] drives a selection of them and collects a
//! [`ValidationReport`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::integrator::{simulate, DiscreteTrajectory};
use crate::liegroup::{exp_so3, log_so3, RotationMatrix, Vec3};
use crate::optctrl::{check_multipliers, cost, recover_multipliers, residual_full, ManeuverSpec, OptimalControlProblem};
use crate::solver::{solve_maneuver, ManeuverSolution, SolveError, SolverOptions};

pub const EQUIVARIANCE_TOL: f64 = 1e-8;
pub const REFINEMENT_TOL: f64 = 0.05;
pub const ORACLE_COST_TOL: f64 = 1e-3;
pub const ORACLE_STATIONARITY_TOL: f64 = 1e-3;
pub const MULTIPLIER_TOL: f64 = 1e-8;
pub const DRIFT_TOL: f64 = 1e-10;

/// Continuous residual norms closer than this are treated as equal when
/// checking monotonicity.
pub const CONTINUOUS_TIE: f64 = 1e-10;

/// Largest step count the penalty oracle accepts.
pub const ORACLE_MAX_STEPS: usize = 8;

const ORACLE_FEASIBILITY: f64 = 1e-6;
const ORACLE_FD_STEP: f64 = 1e-6;
const ORACLE_MAX_ITER: usize = 200;

#[derive(Debug, Error)]
pub enum ValidateError {
    #[error("solve of the {which} maneuver failed: {source}")]
    Solve {
        which: String,
        #[source]
        source: SolveError,
    },
    #[error("oracle needs N <= {ORACLE_MAX_STEPS}, got {0}")]
    OracleTooLarge(usize),
    #[error("oracle infeasible: constraint violation {0:e}")]
    OracleInfeasible(f64),
    #[error("oracle simulation failed: {0}")]
    OracleSimulation(String),
    #[error("refinement needs a resolution pair with at least 3 steps, got N = {0}")]
    RefinementTooCoarse(usize),
}

fn solve_named(spec: &ManeuverSpec, opts: &SolverOptions, which: &str) -> Result<ManeuverSolution, ValidateError> {
    solve_maneuver(spec, opts).map_err(|source| ValidateError::Solve { which: which.to_string(), source })
}

/// Which checks to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Check {
    Equivariance,
    Refinement,
    Oracle,
    Continuous,
    Multipliers,
}

impl Check {
    pub const ALL: [Check; 5] = [Check::Equivariance, Check::Refinement, Check::Oracle, Check::Continuous, Check::Multipliers];

    pub fn name(self) -> &'static str {
        match self {
            Check::Equivariance => "equivariance",
            Check::Refinement => "refinement",
            Check::Oracle => "oracle",
            Check::Continuous => "continuous",
            Check::Multipliers => "multipliers",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| format!("unknown check '{s}' (expected one of equivariance, refinement, oracle, continuous, multipliers)"))
    }
}

/// Verdict of one named check.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: Option<String>,
}

impl CheckOutcome {
    fn below(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, passed: value <= threshold, detail: None }
    }

    fn failed(name: &str, detail: String) -> Self {
        Self { name: name.into(), value: f64::NAN, threshold: f64::NAN, passed: false, detail: Some(detail) }
    }
}

/// Named metrics plus per-check verdicts.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub metrics: BTreeMap<String, f64>,
    pub outcomes: Vec<CheckOutcome>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.outcomes.iter().filter(|o| !o.passed)
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }
}

/// Group drift and discrete spatial momentum balance of a trajectory.
///
/// The balance is `R_{k+1} I_b Ω_k − R_k I_b Ω_{k−1} − h R_k τ_k`, which reduces
/// to conservation of spatial momentum when the torque vanishes.
pub fn conservation_metrics(spec: &ManeuverSpec, traj: &DiscreteTrajectory) -> (f64, f64) {
    let pi = traj.spatial_momenta(&spec.inertia);
    let momentum = (1..traj.steps())
        .map(|k| (pi[k] - pi[k - 1] - traj.rotations[k].rotate(&traj.torques[k]).scale(traj.h)).norm_inf())
        .fold(0.0, f64::max);
    (traj.group_drift(), momentum)
}

/// Body-quantity mismatch between two solutions, plus `R_k^rot = Q R_k` mismatch.
fn equivariance_gap(base: &DiscreteTrajectory, rotated: &DiscreteTrajectory, q: &RotationMatrix) -> f64 {
    let body = base
        .omegas
        .iter()
        .zip(&rotated.omegas)
        .chain(base.torques.iter().zip(&rotated.torques))
        .map(|(a, b)| (*a - *b).norm_inf())
        .fold(0.0, f64::max);
    let attitude = base
        .rotations
        .iter()
        .zip(&rotated.rotations)
        .map(|(r, rr)| (*q.compose(r).matrix() - *rr.matrix()).norm_inf())
        .fold(0.0, f64::max);
    body.max(attitude)
}

/// Solve `spec` and its left-rotation by `q`, and compare.
pub fn check_equivariance(spec: &ManeuverSpec, q: &RotationMatrix, opts: &SolverOptions) -> Result<f64, ValidateError> {
    let base = solve_named(spec, opts, "original")?;
    equivariance_against(&base, q, opts)
}

fn equivariance_against(base: &ManeuverSolution, q: &RotationMatrix, opts: &SolverOptions) -> Result<f64, ValidateError> {
    let rotated = solve_named(&base.spec.rotated(q), opts, "rotated")?;
    Ok(equivariance_gap(&base.trajectory, &rotated.trajectory, q))
}

/// Deterministic pseudo-random rotations `exp(v)` with `‖v‖ < 3`.
pub fn random_rotations(count: usize, seed: u64) -> Vec<RotationMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let v = Vec3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            if v.norm() < 3.0 {
                break exp_so3(&v);
            }
        })
        .collect()
}

fn sup_norm(vs: impl Iterator<Item = Vec3>) -> f64 {
    vs.map(|v| v.norm_inf()).fold(0.0, f64::max)
}

fn relative(diff: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Relative sup-norm distance between a coarse solution and a fine one with
/// exactly twice the steps over the same horizon.
///
/// Torques are compared node to node, τ^c_j against τ^f_{2j}. Velocities live
/// on intervals, so Ω^c_j is compared with the mean of Ω^f_{2j} and Ω^f_{2j+1},
/// which is centred at the same time.
pub fn refinement_distance(coarse: &DiscreteTrajectory, fine: &DiscreteTrajectory) -> f64 {
    let nc = coarse.steps();
    assert_eq!(fine.steps(), 2 * nc, "fine trajectory must have twice the steps");
    let fine_w: Vec<Vec3> = (0..nc).map(|j| (fine.omegas[2 * j] + fine.omegas[2 * j + 1]).scale(0.5)).collect();
    let dw = sup_norm(coarse.omegas.iter().zip(&fine_w).map(|(a, b)| *a - *b));
    let dt = sup_norm((0..=nc).map(|j| coarse.torques[j] - fine.torques[2 * j]));
    let rw = relative(dw, sup_norm(fine_w.iter().copied()));
    let rt = relative(dt, sup_norm(fine.torques.iter().copied()));
    rw.max(rt)
}

/// Solve at N and N/2 (or at 2N and N when N is odd or too small) and compare.
pub fn check_refinement(spec: &ManeuverSpec, opts: &SolverOptions) -> Result<f64, ValidateError> {
    let (nc, nf) = refinement_pair(spec.steps)?;
    let fine = solve_named(&spec.with_steps(nf), opts, "fine")?;
    let coarse = solve_named(&spec.with_steps(nc), opts, "coarse")?;
    Ok(refinement_distance(&coarse.trajectory, &fine.trajectory))
}

fn refinement_pair(n: usize) -> Result<(usize, usize), ValidateError> {
    if n % 2 == 0 && n / 2 >= 3 {
        Ok((n / 2, n))
    } else if n >= 3 {
        Ok((n, 2 * n))
    } else {
        Err(ValidateError::RefinementTooCoarse(n))
    }
}

/// Result of the penalty-method oracle.
#[derive(Clone, Debug)]
pub struct OracleResult {
    pub trajectory: DiscreteTrajectory,
    pub cost: f64,
    /// ‖c‖∞ of the terminal constraints at the returned torques.
    pub constraint_violation: f64,
}

/// Terminal constraint `[log(R_Nᵀ R_N*), Ω_{N−1} − Ω*_{N−1}]` after forward simulation.
fn oracle_constraints(spec: &ManeuverSpec, taus: &[Vec3]) -> Result<(DiscreteTrajectory, DVector<f64>), ValidateError> {
    let traj = simulate(&spec.inertia, &spec.r0, &spec.omega0, taus, spec.h())
        .map_err(|e| ValidateError::OracleSimulation(e.to_string()))?;
    let n = spec.steps;
    let rel = traj.rotations[n].transpose().compose(&spec.rn);
    let att = log_so3(&rel).map_err(|e| ValidateError::OracleSimulation(e.to_string()))?;
    let vel = traj.omegas[n - 1] - spec.omega_nm1;
    let c = DVector::from_iterator(6, att.0.into_iter().chain(vel.0));
    Ok((traj, c))
}

fn unpack(z: &DVector<f64>) -> Vec<Vec3> {
    z.as_slice().chunks(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect()
}

/// Central-difference Jacobian of the terminal constraints in the torques.
fn oracle_constraint_jacobian(spec: &ManeuverSpec, z: &DVector<f64>) -> Result<DMatrix<f64>, ValidateError> {
    let mut jac = DMatrix::zeros(6, z.len());
    for i in 0..z.len() {
        let step = ORACLE_FD_STEP * z[i].abs().max(1.0);
        let mut zp = z.clone();
        zp[i] += step;
        let mut zm = z.clone();
        zm[i] -= step;
        let (_, cp) = oracle_constraints(spec, &unpack(&zp))?;
        let (_, cm) = oracle_constraints(spec, &unpack(&zm))?;
        jac.set_column(i, &((cp - cm) / (2.0 * step)));
    }
    Ok(jac)
}

/// Brute-force minimizer of the discrete cost over interior torques.
///
/// The dynamics are enforced by forward simulation and the terminal attitude
/// and velocity by a quadratic penalty `μ‖c‖²`, with μ = 10², 10⁴, …, 10¹⁰ and
/// warm starts. Each penalty stage runs a descent method on numerically
/// estimated gradients, scaled by the Gauss–Newton metric `I + 2μ JᵀJ` and
/// globalized by Armijo backtracking.
pub fn oracle_minimize(spec: &ManeuverSpec) -> Result<OracleResult, ValidateError> {
    let n = spec.steps;
    if n > ORACLE_MAX_STEPS {
        return Err(ValidateError::OracleTooLarge(n));
    }
    let dim = 3 * (n - 1);
    let mut z = DVector::zeros(dim);
    let penalty = |z: &DVector<f64>, mu: f64| -> Result<(f64, DVector<f64>), ValidateError> {
        let (_, c) = oracle_constraints(spec, &unpack(z))?;
        Ok((0.5 * z.norm_squared() + mu * c.norm_squared(), c))
    };

    for mu in [1e2, 1e4, 1e6, 1e8, 1e10] {
        for _ in 0..ORACLE_MAX_ITER {
            let (p, c) = penalty(&z, mu)?;
            let jac = oracle_constraint_jacobian(spec, &z)?;
            let grad = &z + jac.tr_mul(&c) * (2.0 * mu);
            let metric = DMatrix::identity(dim, dim) + jac.tr_mul(&jac) * (2.0 * mu);
            let Some(chol) = metric.cholesky() else { break };
            let d = -chol.solve(&grad);
            let slope = grad.dot(&d);
            if !(slope < 0.0) || d.amax() <= 1e-14 * z.amax().max(1.0) {
                break;
            }
            let mut lambda = 1.0;
            let mut moved = false;
            for _ in 0..40 {
                let trial = &z + &d * lambda;
                if let Ok((pt, _)) = penalty(&trial, mu) {
                    if pt <= p + 1e-4 * lambda * slope {
                        z = trial;
                        moved = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !moved {
                break;
            }
        }
    }

    let (trajectory, c) = oracle_constraints(spec, &unpack(&z))?;
    let violation = c.amax();
    if !(violation <= ORACLE_FEASIBILITY) {
        return Err(ValidateError::OracleInfeasible(violation));
    }
    Ok(OracleResult { cost: cost(&trajectory), trajectory, constraint_violation: violation })
}

/// Oracle comparison: relative cost gap and stationarity residual of the
/// oracle trajectory in the Newton system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleComparison {
    pub solver_cost: f64,
    pub oracle_cost: f64,
    pub cost_gap: f64,
    pub oracle_stationarity: f64,
}

pub fn compare_with_oracle(spec: &ManeuverSpec, opts: &SolverOptions) -> Result<OracleComparison, ValidateError> {
    let sol = solve_named(spec, opts, "oracle")?;
    let oracle = oracle_minimize(spec)?;
    let problem = OptimalControlProblem::new(spec.clone()).expect("validated by the solve above");
    let x = problem.unknowns(&oracle.trajectory);
    let r = residual_full(spec, &x).expect("layout matches");
    let oracle_stationarity = r[spec.layout().stationarity_range()].iter().map(|v| v.abs()).fold(0.0, f64::max);
    let cost_gap = (sol.cost - oracle.cost).abs() / oracle.cost.max(1e-12);
    Ok(OracleComparison { solver_cost: sol.cost, oracle_cost: oracle.cost, cost_gap, oracle_stationarity })
}

/// `¼ ad_{ad_X Y} Z = ¼ (X × Y) × Z`.
pub fn curvature(x: &Vec3, y: &Vec3, z: &Vec3) -> Vec3 {
    x.cross(y).cross(z).scale(0.25)
}

/// Residual norm of the continuous fourth-order optimality condition,
/// evaluated on a discrete solution by central differences.
///
/// With ς = τ, `Ω(t_k) ≈ (Ω_{k−1} + Ω_k)/2`, `M = I_b Ω` and `η = I_b(Ω × ς)`,
/// the residual at interior node k = 2..N−2 is
/// `I_b ς̈ + Ω × I_b ς̇ + η̇ − d/dt(M × ς) + ¼((I_b ς × Ω) × Ω) + (M × ς) × Ω − η × Ω`.
pub fn continuous_residual(spec: &ManeuverSpec, traj: &DiscreteTrajectory) -> f64 {
    continuous_residual_with(spec, traj, true)
}

/// [`continuous_residual`] with the curvature term dropped.
pub fn continuous_residual_without_curvature(spec: &ManeuverSpec, traj: &DiscreteTrajectory) -> f64 {
    continuous_residual_with(spec, traj, false)
}

fn continuous_residual_with(spec: &ManeuverSpec, traj: &DiscreteTrajectory, with_curvature: bool) -> f64 {
    let n = traj.steps();
    let h = traj.h;
    let m = &spec.inertia;
    if n < 4 {
        return 0.0;
    }
    // node values at k = 1..N−1; index 0 is unused
    let mut w = vec![Vec3::zeros(); n];
    let mut big_m = vec![Vec3::zeros(); n];
    let mut eta = vec![Vec3::zeros(); n];
    let mut coad = vec![Vec3::zeros(); n];
    for k in 1..n {
        w[k] = (traj.omegas[k - 1] + traj.omegas[k]).scale(0.5);
        big_m[k] = m.apply(&w[k]);
        eta[k] = m.apply(&w[k].cross(&traj.torques[k]));
        coad[k] = big_m[k].cross(&traj.torques[k]);
    }
    let tau = &traj.torques;
    (2..n - 1)
        .map(|k| {
            let d1 = |s: &[Vec3]| (s[k + 1] - s[k - 1]).scale(0.5 / h);
            let s2 = (tau[k + 1] - tau[k].scale(2.0) + tau[k - 1]).scale(1.0 / (h * h));
            let mut r = m.apply(&s2) + w[k].cross(&m.apply(&d1(tau))) + d1(&eta) - d1(&coad) + coad[k].cross(&w[k])
                - eta[k].cross(&w[k]);
            if with_curvature {
                r = r + curvature(&m.apply(&tau[k]), &w[k], &w[k]);
            }
            r.norm_inf()
        })
        .fold(0.0, f64::max)
}

/// Continuous residual norms of several solutions of one maneuver, ordered as given.
pub fn check_continuous_consistency(solutions: &[ManeuverSolution]) -> Vec<f64> {
    solutions.iter().map(|s| continuous_residual(&s.spec, &s.trajectory)).collect()
}

/// Resolutions used for the continuous check: N/4, N/2, N when all have at
/// least 4 steps, otherwise N and 2N.
pub fn continuous_resolutions(n: usize) -> Vec<usize> {
    if n % 4 == 0 && n / 4 >= 4 {
        vec![n / 4, n / 2, n]
    } else if n % 2 == 0 && n / 2 >= 4 {
        vec![n / 2, n]
    } else {
        vec![n, 2 * n]
    }
}

/// Maximum multiplier-form residual on a solution.
pub fn multiplier_residual(sol: &ManeuverSolution) -> f64 {
    let mult = recover_multipliers(&sol.spec, &sol.trajectory);
    check_multipliers(&sol.spec, &sol.trajectory, &mult).max()
}

/// Settings for [`run_checks`].
#[derive(Clone, Debug, PartialEq)]
pub struct ValidateOptions {
    pub checks: Vec<Check>,
    pub solver: SolverOptions,
    /// Number of random rotations in the equivariance check.
    pub rotations: usize,
    pub seed: u64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self { checks: Check::ALL.to_vec(), solver: SolverOptions::default(), rotations: 3, seed: 0x5eed }
    }
}

/// Solve the maneuver, record conservation metrics, then run the selected checks.
///
/// A check whose solves fail is recorded as failed with the error message;
/// the base solve failing is returned as an error.
pub fn run_checks(spec: &ManeuverSpec, opts: &ValidateOptions) -> Result<ValidationReport, ValidateError> {
    let mut report = ValidationReport::default();
    let base = solve_named(spec, &opts.solver, "original")?;

    let (group, momentum) = conservation_metrics(spec, &base.trajectory);
    report.metrics.insert("group_drift".into(), group);
    report.metrics.insert("momentum_drift".into(), momentum);
    report.outcomes.push(CheckOutcome::below("group_drift", group, DRIFT_TOL));
    report.outcomes.push(CheckOutcome::below("momentum_drift", momentum, DRIFT_TOL * momentum_scale(spec, &base)));

    let mut checks = opts.checks.clone();
    checks.sort();
    checks.dedup();
    for check in checks {
        let name = check.name();
        match check {
            Check::Equivariance => {
                let mut worst: f64 = 0.0;
                let mut err = None;
                for q in random_rotations(opts.rotations, opts.seed) {
                    match equivariance_against(&base, &q, &opts.solver) {
                        Ok(e) => worst = worst.max(e),
                        Err(e) => {
                            err = Some(e);
                            break;
                        }
                    }
                }
                match err {
                    None => {
                        report.metrics.insert("equivariance_error".into(), worst);
                        report.outcomes.push(CheckOutcome::below(name, worst, EQUIVARIANCE_TOL));
                    }
                    Some(e) => report.outcomes.push(CheckOutcome::failed(name, e.to_string())),
                }
            }
            Check::Refinement => match check_refinement(spec, &opts.solver) {
                Ok(d) => {
                    report.metrics.insert("refinement_error".into(), d);
                    report.outcomes.push(CheckOutcome::below(name, d, REFINEMENT_TOL));
                }
                Err(e) => report.outcomes.push(CheckOutcome::failed(name, e.to_string())),
            },
            Check::Oracle => {
                if spec.steps > ORACLE_MAX_STEPS {
                    report.outcomes.push(CheckOutcome {
                        name: name.into(),
                        value: 0.0,
                        threshold: ORACLE_COST_TOL,
                        passed: true,
                        detail: Some(format!("skipped: oracle limited to N <= {ORACLE_MAX_STEPS}")),
                    });
                    continue;
                }
                match compare_with_oracle(spec, &opts.solver) {
                    Ok(c) => {
                        report.metrics.insert("oracle_cost_gap".into(), c.cost_gap);
                        report.metrics.insert("oracle_stationarity".into(), c.oracle_stationarity);
                        let mut o = CheckOutcome::below(name, c.cost_gap, ORACLE_COST_TOL);
                        if c.oracle_stationarity > ORACLE_STATIONARITY_TOL {
                            o.passed = false;
                            o.detail = Some(format!("oracle stationarity residual {:e}", c.oracle_stationarity));
                        }
                        report.outcomes.push(o);
                    }
                    Err(e) => report.outcomes.push(CheckOutcome::failed(name, e.to_string())),
                }
            }
            Check::Continuous => {
                let mut sols = Vec::new();
                let mut err = None;
                for n in continuous_resolutions(spec.steps) {
                    if n == spec.steps {
                        sols.push(base.clone());
                        continue;
                    }
                    match solve_named(&spec.with_steps(n), &opts.solver, &format!("N = {n}")) {
                        Ok(s) => sols.push(s),
                        Err(e) => {
                            err = Some(e);
                            break;
                        }
                    }
                }
                if let Some(e) = err {
                    report.outcomes.push(CheckOutcome::failed(name, e.to_string()));
                    continue;
                }
                let norms = check_continuous_consistency(&sols);
                for (s, v) in sols.iter().zip(&norms) {
                    report.metrics.insert(format!("continuous_residual_N{}", s.spec.steps), *v);
                    let flat = continuous_residual_without_curvature(&s.spec, &s.trajectory);
                    report.metrics.insert(format!("continuous_residual_without_curvature_N{}", s.spec.steps), flat);
                }
                let rises = norms.windows(2).filter(|p| p[1] > p[0] + CONTINUOUS_TIE).count();
                let last = *norms.last().expect("at least two resolutions");
                report.outcomes.push(CheckOutcome {
                    name: name.into(),
                    value: last,
                    threshold: norms[0],
                    passed: rises == 0,
                    detail: (rises > 0).then(|| format!("residual norms not monotone in N: {norms:?}")),
                });
            }
            Check::Multipliers => {
                let r = multiplier_residual(&base);
                report.metrics.insert("multiplier_residual".into(), r);
                report.outcomes.push(CheckOutcome::below(name, r, MULTIPLIER_TOL));
            }
        }
    }
    Ok(report)
}

/// Momentum magnitude used to make the balance tolerance relative.
fn momentum_scale(spec: &ManeuverSpec, sol: &ManeuverSolution) -> f64 {
    sol.trajectory.spatial_momenta(&spec.inertia).iter().map(|p| p.norm_inf()).fold(1.0, f64::max)
}
