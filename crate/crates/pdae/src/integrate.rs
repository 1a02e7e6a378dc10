//! Time integration of the reduced evolution V' = A V + K(V) in mild
//! form: an exponential-Euler / two-step exponential stepper for
//! production, a Picard fixed-point iterator on the
//! variation-of-constants identity as an independent oracle, and a
//! blow-up monitor realizing the finite-time alternative (the norm is
//! driven past a configurable threshold and the escape time is
//! bracketed by re-integrating the final interval at dt/8).

use crate::constraint::ConstraintSolver;
use crate::error::{PdaeError, Result};
use crate::grid::{norm_e, norm_x, AlgState, DiffState, FullState, GridFn};
use crate::operators::OperatorSet;
use crate::reduced_rhs::{reduced_rhs, RhsEval};

/// Production stepping schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    ExpEuler,
    Etd2,
}

/// Which right-hand side drives the evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RhsMode {
    /// The reduced right-hand side K(V) with the constraint solved at
    /// every evaluation (the actual problem).
    #[default]
    Reduced,
    /// Componentwise square (u^2, v^2) with the algebraic field zeroed:
    /// scalar blow-up oracle u' = u^2.
    SquareTest,
    /// Identity rate (u, v): scalar growth oracle u' = u.
    IdentityTest,
    /// No nonlinearity: the pure linear evolution.
    Zero,
}

/// Fixed-point iteration parameters for the Picard oracle.
#[derive(Debug, Clone, Copy)]
pub struct PicardConfig {
    pub max_iters: usize,
    pub tol: f64,
    /// Number of trapezoid subintervals of [0, t_end].
    pub quadrature_nodes: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            max_iters: 50,
            tol: 1e-12,
            quadrature_nodes: 25,
        }
    }
}

/// Fixed-step integration parameters.
#[derive(Debug, Clone, Copy)]
pub struct StepperConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub blowup_norm_threshold: f64,
    pub output_every: usize,
    pub picard: PicardConfig,
}

impl StepperConfig {
    pub fn new(scheme: Scheme, dt: f64, t_end: f64) -> Self {
        Self {
            scheme,
            dt,
            t_end,
            blowup_norm_threshold: 1e8,
            output_every: 1,
            picard: PicardConfig::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(PdaeError::InvalidArgument(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(PdaeError::InvalidArgument(format!(
                "t_end must be nonnegative, got {}",
                self.t_end
            )));
        }
        if !(self.blowup_norm_threshold.is_finite() && self.blowup_norm_threshold > 1.0) {
            return Err(PdaeError::InvalidArgument(format!(
                "blow-up threshold must exceed 1, got {}",
                self.blowup_norm_threshold
            )));
        }
        if self.output_every == 0 {
            return Err(PdaeError::InvalidArgument(
                "output_every must be at least 1".into(),
            ));
        }
        if self.picard.quadrature_nodes == 0 || self.picard.max_iters == 0 {
            return Err(PdaeError::InvalidArgument(
                "picard iteration needs at least one node and one iteration".into(),
            ));
        }
        Ok(())
    }
}

/// Everything a step needs: operators, the cached constraint
/// factorization, the right-hand-side mode, and the test switch that
/// replaces the generator by zero.
pub struct Evolution<'a> {
    ops: &'a OperatorSet,
    solver: &'a ConstraintSolver,
    mode: RhsMode,
    a_disabled: bool,
}

impl<'a> Evolution<'a> {
    pub fn new(ops: &'a OperatorSet, solver: &'a ConstraintSolver) -> Self {
        Self {
            ops,
            solver,
            mode: RhsMode::Reduced,
            a_disabled: false,
        }
    }

    pub fn with_mode(mut self, mode: RhsMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_generator_disabled(mut self, disabled: bool) -> Self {
        self.a_disabled = disabled;
        self
    }

    pub fn ops(&self) -> &OperatorSet {
        self.ops
    }

    pub fn mode(&self) -> RhsMode {
        self.mode
    }

    /// Evaluate the driving rate at a state, together with the
    /// constraint-consistent algebraic field and its solve residual.
    pub fn rhs(&self, state: &DiffState) -> Result<RhsEval> {
        match self.mode {
            RhsMode::Reduced => reduced_rhs(state, self.solver),
            RhsMode::SquareTest => {
                let grid = state.grid().clone();
                let sq = |f: &GridFn| {
                    GridFn::new(grid.clone(), f.values().iter().map(|x| x * x).collect())
                };
                Ok(RhsEval {
                    rate: DiffState::new(sq(state.u())?, sq(state.v())?)?,
                    alg: AlgState::zeros(grid),
                    residual: 0.0,
                })
            }
            RhsMode::IdentityTest => Ok(RhsEval {
                rate: state.clone(),
                alg: AlgState::zeros(state.grid().clone()),
                residual: 0.0,
            }),
            RhsMode::Zero => Ok(RhsEval {
                rate: DiffState::zeros(state.grid().clone()),
                alg: AlgState::zeros(state.grid().clone()),
                residual: 0.0,
            }),
        }
    }

    fn propagate_values(&self, t: f64, values: &[f64]) -> Vec<f64> {
        if self.a_disabled {
            values.to_vec()
        } else {
            self.ops.decomp().apply_exp_values(t, values)
        }
    }

    fn phi1_values(&self, dt: f64, values: &[f64]) -> Vec<f64> {
        if self.a_disabled {
            values.to_vec()
        } else {
            self.ops.decomp().apply_phi1_values(dt, values)
        }
    }

    fn phi2_values(&self, dt: f64, values: &[f64]) -> Vec<f64> {
        if self.a_disabled {
            values.iter().map(|v| 0.5 * v).collect()
        } else {
            self.ops.decomp().apply_phi2_values(dt, values)
        }
    }

    /// e^{tA} applied to both components.
    pub fn propagate(&self, t: f64, state: &DiffState) -> Result<DiffState> {
        let grid = state.grid().clone();
        DiffState::new(
            GridFn::new(grid.clone(), self.propagate_values(t, state.u().values()))?,
            GridFn::new(grid, self.propagate_values(t, state.v().values()))?,
        )
    }
}

/// One accepted step: the state at t + dt and the rate evaluation at
/// the step's starting state (reused for recording and for the
/// two-step scheme's history).
pub struct StepOutcome {
    pub next: DiffState,
    pub eval: RhsEval,
}

fn finite_or_overflow(values: Vec<f64>, t: f64) -> Result<Vec<f64>> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(values)
    } else {
        Err(PdaeError::Overflow { t })
    }
}

fn assemble_component(
    ev: &Evolution,
    dt: f64,
    state: &[f64],
    rate: &[f64],
    prev_rate: Option<&[f64]>,
    t_next: f64,
) -> Result<Vec<f64>> {
    let moved = ev.propagate_values(dt, state);
    let phi1_rate = ev.phi1_values(dt, rate);
    let mut next: Vec<f64> = moved
        .iter()
        .zip(&phi1_rate)
        .map(|(m, p)| m + dt * p)
        .collect();
    if let Some(prev) = prev_rate {
        let delta: Vec<f64> = rate.iter().zip(prev).map(|(r, p)| r - p).collect();
        let phi2_delta = ev.phi2_values(dt, &delta);
        for (n, c) in next.iter_mut().zip(&phi2_delta) {
            *n += dt * c;
        }
    }
    finite_or_overflow(next, t_next)
}

/// Exponential-Euler step: V+ = e^{dt A} V + dt phi_1(dt A) K(V).
pub fn step_exp_euler(state: &DiffState, dt: f64, ev: &Evolution) -> Result<StepOutcome> {
    step_exp_euler_at(state, dt, ev, dt)
}

fn step_exp_euler_at(
    state: &DiffState,
    dt: f64,
    ev: &Evolution,
    t_next: f64,
) -> Result<StepOutcome> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(PdaeError::InvalidArgument(format!(
            "step size must be positive, got {dt}"
        )));
    }
    let eval = ev.rhs(state)?;
    let grid = state.grid().clone();
    let u = assemble_component(
        ev,
        dt,
        state.u().values(),
        eval.rate.u().values(),
        None,
        t_next,
    )?;
    let v = assemble_component(
        ev,
        dt,
        state.v().values(),
        eval.rate.v().values(),
        None,
        t_next,
    )?;
    Ok(StepOutcome {
        next: DiffState::new(GridFn::new(grid.clone(), u)?, GridFn::new(grid, v)?)?,
        eval,
    })
}

/// Two-step exponential scheme:
/// V+ = e^{dt A} V + dt phi_1(dt A) K_n + dt phi_2(dt A)(K_n - K_{n-1}).
/// Reduces to the exponential-Euler step when the rate history is
/// constant; the first step of a run falls back to it.
pub fn step_etd2(
    state: &DiffState,
    prev_rate: &DiffState,
    dt: f64,
    ev: &Evolution,
) -> Result<StepOutcome> {
    step_etd2_at(state, prev_rate, dt, ev, dt)
}

fn step_etd2_at(
    state: &DiffState,
    prev_rate: &DiffState,
    dt: f64,
    ev: &Evolution,
    t_next: f64,
) -> Result<StepOutcome> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(PdaeError::InvalidArgument(format!(
            "step size must be positive, got {dt}"
        )));
    }
    let eval = ev.rhs(state)?;
    let grid = state.grid().clone();
    let u = assemble_component(
        ev,
        dt,
        state.u().values(),
        eval.rate.u().values(),
        Some(prev_rate.u().values()),
        t_next,
    )?;
    let v = assemble_component(
        ev,
        dt,
        state.v().values(),
        eval.rate.v().values(),
        Some(prev_rate.v().values()),
        t_next,
    )?;
    Ok(StepOutcome {
        next: DiffState::new(GridFn::new(grid.clone(), u)?, GridFn::new(grid, v)?)?,
        eval,
    })
}

/// Run verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Completed,
    BlowupDetected,
}

/// Time-stamped run record: states carry the constraint-consistent
/// algebraic field, and each stored state's solve residual is kept so
/// the algebraic equation can be audited after the fact.
#[derive(Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<FullState>,
    pub constraint_residuals: Vec<f64>,
    pub verdict: Verdict,
    pub t_max_estimate: Option<f64>,
    pub steps_taken: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &FullState {
        self.states.last().expect("trajectory never empty")
    }

    pub fn max_constraint_residual(&self) -> f64 {
        self.constraint_residuals
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }
}

fn full_norm(ev: &Evolution, state: &DiffState, alg: &AlgState) -> Result<f64> {
    let full = FullState::new(state.clone(), alg.clone(), 0.0)?;
    norm_x(&full, ev.ops())
}

fn take_step(
    scheme: Scheme,
    state: &DiffState,
    prev_rate: Option<&DiffState>,
    dt: f64,
    ev: &Evolution,
    t_next: f64,
) -> Result<StepOutcome> {
    match (scheme, prev_rate) {
        (Scheme::ExpEuler, _) | (Scheme::Etd2, None) => {
            step_exp_euler_at(state, dt, ev, t_next)
        }
        (Scheme::Etd2, Some(prev)) => step_etd2_at(state, prev, dt, ev, t_next),
    }
}

/// Re-integrate the interval that crossed the threshold with dt/8 to
/// tighten the escape-time estimate. Falls back to the coarse crossing
/// time if the refined march somehow stays below the threshold.
fn refine_blowup_time(
    scheme: Scheme,
    start: &DiffState,
    t_start: f64,
    dt: f64,
    threshold: f64,
    ev: &Evolution,
    fallback: f64,
) -> f64 {
    let sub = dt / 8.0;
    let mut state = start.clone();
    let mut prev_rate: Option<DiffState> = None;
    let mut t = t_start;
    for _ in 0..64 {
        let t_next = t + sub;
        match take_step(scheme, &state, prev_rate.as_ref(), sub, ev, t_next) {
            Err(_) => return t_next,
            Ok(out) => {
                let norm = match ev.rhs(&out.next) {
                    Err(_) => return t_next,
                    Ok(eval) => full_norm(ev, &out.next, &eval.alg).unwrap_or(f64::INFINITY),
                };
                if !norm.is_finite() || norm >= threshold {
                    return t_next;
                }
                prev_rate = Some(out.eval.rate.clone());
                state = out.next;
                t = t_next;
            }
        }
    }
    fallback
}

/// March the chosen scheme to t_end with fixed steps (the final step is
/// shortened to land exactly). Every step is screened against the
/// blow-up threshold; on a crossing the run stops, the verdict flips,
/// and the escape time is refined on the final interval.
pub fn integrate(v0: &DiffState, cfg: &StepperConfig, ev: &Evolution) -> Result<Trajectory> {
    cfg.validate()?;

    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut residuals = Vec::new();

    let mut record = |t: f64, state: &DiffState, eval: &RhsEval| -> Result<()> {
        times.push(t);
        states.push(FullState::new(state.clone(), eval.alg.clone(), t)?);
        residuals.push(eval.residual);
        Ok(())
    };

    let eval0 = ev.rhs(v0)?;
    let norm0 = full_norm(ev, v0, &eval0.alg)?;
    record(0.0, v0, &eval0)?;
    if norm0 >= cfg.blowup_norm_threshold {
        return Ok(Trajectory {
            times,
            states,
            constraint_residuals: residuals,
            verdict: Verdict::BlowupDetected,
            t_max_estimate: Some(0.0),
            steps_taken: 0,
        });
    }

    let mut state = v0.clone();
    let mut prev_rate: Option<DiffState> = None;
    let mut t = 0.0_f64;
    let mut steps = 0_usize;

    while t < cfg.t_end - 1e-12 * cfg.t_end.max(1.0) {
        let dt = cfg.dt.min(cfg.t_end - t);
        let t_next = if cfg.t_end - t <= cfg.dt * (1.0 + 1e-9) {
            cfg.t_end
        } else {
            t + dt
        };

        let blowup = |t_est: f64,
                      times: Vec<f64>,
                      states: Vec<FullState>,
                      residuals: Vec<f64>,
                      steps: usize| {
            Ok(Trajectory {
                times,
                states,
                constraint_residuals: residuals,
                verdict: Verdict::BlowupDetected,
                t_max_estimate: Some(t_est),
                steps_taken: steps,
            })
        };

        let outcome = match take_step(cfg.scheme, &state, prev_rate.as_ref(), dt, ev, t_next) {
            Ok(out) => out,
            Err(PdaeError::Overflow { .. }) | Err(PdaeError::NonFinite { .. }) => {
                let t_est = refine_blowup_time(
                    cfg.scheme,
                    &state,
                    t,
                    dt,
                    cfg.blowup_norm_threshold,
                    ev,
                    t_next,
                );
                return blowup(t_est, times, states, residuals, steps);
            }
            Err(e) => return Err(e),
        };

        let next = outcome.next;
        let eval_next = match ev.rhs(&next) {
            Ok(e) => e,
            Err(PdaeError::Overflow { .. }) | Err(PdaeError::NonFinite { .. }) => {
                let t_est = refine_blowup_time(
                    cfg.scheme,
                    &state,
                    t,
                    dt,
                    cfg.blowup_norm_threshold,
                    ev,
                    t_next,
                );
                return blowup(t_est, times, states, residuals, steps);
            }
            Err(e) => return Err(e),
        };

        steps += 1;
        let norm = full_norm(ev, &next, &eval_next.alg)?;
        if !norm.is_finite() || norm >= cfg.blowup_norm_threshold {
            // record the violating state, then tighten the estimate
            record(t_next, &next, &eval_next)?;
            let t_est = refine_blowup_time(
                cfg.scheme,
                &state,
                t,
                dt,
                cfg.blowup_norm_threshold,
                ev,
                t_next,
            );
            return blowup(t_est, times, states, residuals, steps);
        }

        prev_rate = Some(outcome.eval.rate.clone());
        state = next;
        t = t_next;

        let at_end = t >= cfg.t_end - 1e-12 * cfg.t_end.max(1.0);
        if steps.is_multiple_of(cfg.output_every) || at_end {
            record(t, &state, &eval_next)?;
        }
    }

    Ok(Trajectory {
        times,
        states,
        constraint_residuals: residuals,
        verdict: Verdict::Completed,
        t_max_estimate: None,
        steps_taken: steps,
    })
}

/// Successive approximation on the variation-of-constants identity over
/// a fixed time grid.
#[derive(Debug)]
pub struct PicardSolution {
    pub trajectory: Trajectory,
    pub iterations: usize,
    pub defects: Vec<f64>,
}

/// Iterate V <- e^{tA} V0 + integral of e^{(t-s)A} K(V(s)) with
/// composite trapezoid quadrature on the stored grid, until the
/// sup-norm change drops below tolerance. Divergence is reported, not
/// guessed: exhausting the iteration budget returns the defect history.
pub fn picard_solve(
    v0: &DiffState,
    t_end: f64,
    cfg: &StepperConfig,
    ev: &Evolution,
) -> Result<PicardSolution> {
    cfg.validate()?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(PdaeError::InvalidArgument(format!(
            "picard horizon must be positive, got {t_end}"
        )));
    }
    let m = cfg.picard.quadrature_nodes;
    let delta = t_end / m as f64;
    let times: Vec<f64> = (0..=m).map(|j| j as f64 * delta).collect();

    // frozen linear part of the identity
    let base: Vec<DiffState> = times
        .iter()
        .map(|&tj| ev.propagate(tj, v0))
        .collect::<Result<_>>()?;

    let mut current = base.clone();
    let mut defects = Vec::new();
    let mut iterations = 0;

    loop {
        iterations += 1;
        let rates: Vec<DiffState> = match current
            .iter()
            .map(|vj| Ok(ev.rhs(vj)?.rate))
            .collect::<Result<_>>()
        {
            Ok(r) => r,
            // iterates escaping to infinity are divergence evidence,
            // reported with the defect history accumulated so far
            Err(PdaeError::Overflow { .. }) | Err(PdaeError::NonFinite { .. }) => {
                return Err(PdaeError::NonContraction {
                    iters: iterations,
                    last_defect: f64::INFINITY,
                    defect_history: defects,
                });
            }
            Err(e) => return Err(e),
        };

        let mut next = Vec::with_capacity(m + 1);
        next.push(v0.clone());
        for j in 1..=m {
            let mut acc = base[j].clone();
            for (i, rate) in rates.iter().enumerate().take(j + 1) {
                let coeff = if i == 0 || i == j { delta / 2.0 } else { delta };
                let moved = ev.propagate(times[j] - times[i], rate)?;
                acc = acc.lin_comb(1.0, &moved, coeff)?;
            }
            next.push(acc);
        }

        let defect = current
            .iter()
            .zip(&next)
            .map(|(a, b)| norm_e(&a.lin_comb(1.0, b, -1.0).expect("same grid")))
            .fold(0.0, f64::max);
        defects.push(defect);
        current = next;

        if defect <= cfg.picard.tol {
            break;
        }
        if iterations >= cfg.picard.max_iters {
            return Err(PdaeError::NonContraction {
                iters: iterations,
                last_defect: defect,
                defect_history: defects,
            });
        }
    }

    let mut traj_states = Vec::with_capacity(m + 1);
    let mut residuals = Vec::with_capacity(m + 1);
    for (tj, vj) in times.iter().zip(&current) {
        let eval = ev.rhs(vj)?;
        traj_states.push(FullState::new(vj.clone(), eval.alg, *tj)?);
        residuals.push(eval.residual);
    }

    Ok(PicardSolution {
        trajectory: Trajectory {
            times,
            states: traj_states,
            constraint_residuals: residuals,
            verdict: Verdict::Completed,
            t_max_estimate: None,
            steps_taken: m,
        },
        iterations,
        defects,
    })
}

/// Defect of the variation-of-constants identity at the trajectory's
/// final time, with the integral taken by trapezoid over the stored
/// states. Shrinks like the stepper's order on completed runs.
pub fn variation_of_constants_defect(traj: &Trajectory, ev: &Evolution) -> Result<f64> {
    let n = traj.times.len();
    if n < 2 {
        return Ok(0.0);
    }
    let t_final = traj.times[n - 1];
    let mut acc = ev.propagate(t_final, traj.states[0].diff())?;
    for j in 0..n {
        let rate = ev.rhs(traj.states[j].diff())?.rate;
        let left = if j == 0 {
            0.0
        } else {
            traj.times[j] - traj.times[j - 1]
        };
        let right = if j + 1 == n {
            0.0
        } else {
            traj.times[j + 1] - traj.times[j]
        };
        let coeff = 0.5 * (left + right);
        let moved = ev.propagate(t_final - traj.times[j], &rate)?;
        acc = acc.lin_comb(1.0, &moved, coeff)?;
    }
    Ok(norm_e(
        &acc.lin_comb(1.0, traj.final_state().diff(), -1.0)?,
    ))
}
