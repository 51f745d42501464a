//! Agents learning on the fast time scale while a designer adjusts the mean
//! signal distortion on the slow one.
//!
//! Outer step `k` runs `inner_steps` learning updates with step size
//! `alpha_k` against the distorted signal `y + delta`, then moves the
//! designer by a projected gradient step on the QCQP objective,
//! `delta <- Feas(delta - beta_k grad f(delta))`, where `Feas` is the radial
//! map onto the budget ellipsoid and `beta_k < alpha_k`.

use serde::{Deserialize, Serialize};

use crate::arbitrage::{assemble_qcqp, designer_objective, solve_arbitrage, QcqpData};
use crate::error::{Error, Result};
use crate::learning::{Dynamics, LearningState, StepSchedule};
use crate::model::{AttentionStructure, Conjecture, ConjectureClass, NetworkGame};
use crate::numerics::{norm2, solve_linear, sub};
use crate::trace::{Decimation, Trace, TraceRow};

/// Threshold for the last-crossing diagnostics.
pub const CROSSING_EPS: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TwoScaleConfig {
    /// Agents' step sizes `alpha_k`.
    pub fast: StepSchedule,
    /// Designer's step sizes `beta_k`.
    pub slow: StepSchedule,
    pub budget: f64,
    /// Diagonal distortion weights; `None` means all ones.
    pub a_weights: Option<Vec<f64>>,
    pub inner_steps: usize,
    /// Number of outer (designer) steps.
    pub total_steps: usize,
    pub decimation: Decimation,
    pub delta0: Option<Vec<f64>>,
    pub x0: Option<Vec<f64>>,
    pub theta0: Option<Vec<f64>>,
    pub crossing_eps: f64,
}

impl Default for TwoScaleConfig {
    fn default() -> Self {
        Self {
            fast: StepSchedule::default(),
            slow: StepSchedule { a: 0.05, k0: 10.0 },
            budget: 1.0,
            a_weights: None,
            inner_steps: 1,
            total_steps: 20_000,
            decimation: Decimation::default(),
            delta0: None,
            x0: None,
            theta0: None,
            crossing_eps: CROSSING_EPS,
        }
    }
}

impl TwoScaleConfig {
    /// Checks `beta_k < alpha_k` for every `k >= 0` (or `beta == 0`) and
    /// basic ranges.
    pub fn check(&self) -> Result<()> {
        self.fast.check()?;
        self.slow.check()?;
        if self.inner_steps == 0 {
            return Err(Error::InvalidParams("inner_steps must be at least 1".into()));
        }
        if !(self.crossing_eps > 0.0) {
            return Err(Error::InvalidParams("crossing_eps must be positive".into()));
        }
        let (a, k0) = (self.fast.a, self.fast.k0);
        let (b, k1) = (self.slow.a, self.slow.k0);
        // b (k + k0) < a (k + k1) for all k >= 0
        let separated = b == 0.0 || (b <= a && b * k0 < a * k1);
        if !separated {
            return Err(Error::InvalidParams(format!(
                "designer steps must be smaller than learning steps: beta_k = {b}/(k+{k1}) vs alpha_k = {a}/(k+{k0})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalReport {
    pub steps: usize,
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
    pub delta: Vec<f64>,
    pub delta_star: Vec<f64>,
    pub lambda_star: f64,
    /// `|delta - delta*|_2`.
    pub dist_delta_star: f64,
    /// `|x - M (b - delta*)|_2`, the local mean-field equilibrium target.
    pub dist_x_target: f64,
    /// `|x - (R + G)^{-1} (b - delta*)|_2`, the Nash-type target.
    pub dist_x_nash_target: f64,
    pub objective: f64,
    pub objective_star: f64,
    /// Last outer step with the change above `crossing_eps`; 0 if never.
    pub last_dx_above: usize,
    pub last_dtheta_above: usize,
    pub last_ddelta_above: usize,
    /// Largest `delta'A delta / budget` seen along the run.
    pub max_budget_ratio: f64,
    /// Outer steps at which `f(delta)` increased.
    pub objective_increases: usize,
}

#[derive(Debug, Clone)]
pub struct TwoScaleRun {
    pub trace: Trace,
    pub report: FinalReport,
    pub qcqp: QcqpData,
}

/// Runs the coupled learner/designer process for `config.total_steps`
/// outer steps. All agents hold local mean-field conjectures.
pub fn run_two_timescale(
    game: &NetworkGame,
    attention: &AttentionStructure,
    config: &TwoScaleConfig,
    seed: u64,
) -> Result<TwoScaleRun> {
    config.check()?;
    let n = game.n();
    let class = ConjectureClass::Homogeneous(Conjecture::LocalMeanField);
    let dynamics = Dynamics::new(game, &class, Some(attention))?;
    let weights = config.a_weights.clone().unwrap_or_else(|| vec![1.0; n]);
    let qcqp = assemble_qcqp(game, attention, &weights, config.budget)?;
    let plan = solve_arbitrage(&qcqp)?;

    let mut state = LearningState::naive(game, seed);
    for (name, src, dst) in [("x0", &config.x0, &mut state.x), ("theta0", &config.theta0, &mut state.theta)] {
        if let Some(v) = src {
            if v.len() != n {
                return Err(Error::InvalidParams(format!("{name} has {} entries, expected {n}", v.len())));
            }
            dst.clone_from(v);
        }
    }
    let mut delta = match &config.delta0 {
        Some(d) if d.len() != n => {
            return Err(Error::InvalidParams(format!("delta0 has {} entries, expected {n}", d.len())));
        }
        Some(d) => qcqp.feasible(d),
        None => vec![0.0; n],
    };

    let mut trace = Trace::default();
    let mut last = (0usize, 0usize, 0usize);
    let mut max_budget_ratio = qcqp.distortion_cost(&delta) / qcqp.budget;
    let mut objective = designer_objective(&qcqp, &delta);
    let mut objective_increases = 0;
    for k in 0..config.total_steps {
        let alpha = config.fast.at(k);
        let beta = config.slow.at(k);
        let (x_prev, theta_prev) = (state.x.clone(), state.theta.clone());
        for _ in 0..config.inner_steps {
            dynamics.step(&mut state, alpha, Some(&delta))?;
        }
        let grad = qcqp.gradient(&delta);
        let moved: Vec<f64> = delta.iter().zip(&grad).map(|(d, g)| d - beta * g).collect();
        let next = qcqp.feasible(&moved);
        let ddelta = norm2(&sub(&next, &delta));
        delta = next;

        let next_objective = designer_objective(&qcqp, &delta);
        if next_objective > objective + 1e-12 * (1.0 + objective.abs()) {
            objective_increases += 1;
        }
        objective = next_objective;
        max_budget_ratio = max_budget_ratio.max(qcqp.distortion_cost(&delta) / qcqp.budget);

        let step = k + 1;
        let dx = norm2(&sub(&state.x, &x_prev));
        let dtheta = norm2(&sub(&state.theta, &theta_prev));
        if dx > config.crossing_eps {
            last.0 = step;
        }
        if dtheta > config.crossing_eps {
            last.1 = step;
        }
        if ddelta > config.crossing_eps {
            last.2 = step;
        }
        if config.decimation.keeps(step) || step == config.total_steps {
            trace.push(TraceRow {
                k: step,
                x: state.x.clone(),
                theta: state.theta.clone(),
                delta: Some(delta.clone()),
                dx_norm: dx,
                dtheta_norm: dtheta,
                ddelta_norm: Some(ddelta),
            });
        }
    }

    let shifted = sub(game.b(), &plan.delta);
    let x_target = qcqp.m.matvec(&shifted);
    let x_nash = solve_linear(&game.r_plus(game.g()), &shifted)?;
    let report = FinalReport {
        steps: config.total_steps,
        dist_delta_star: norm2(&sub(&delta, &plan.delta)),
        dist_x_target: norm2(&sub(&state.x, &x_target)),
        dist_x_nash_target: norm2(&sub(&state.x, &x_nash)),
        objective,
        objective_star: plan.objective,
        x: state.x,
        theta: state.theta,
        delta,
        delta_star: plan.delta,
        lambda_star: plan.lambda,
        last_dx_above: last.0,
        last_dtheta_above: last.1,
        last_ddelta_above: last.2,
        max_budget_ratio,
        objective_increases,
    };
    Ok(TwoScaleRun { trace, report, qcqp })
}
