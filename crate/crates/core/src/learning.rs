//! Joint learning dynamics: stochastic-gradient conjecture updates coupled
//! with best-response actions.
//!
//! At step `k` every agent observes `y_i = sum_j g_ij x_j(k) + eta_i(k)`,
//! forms its regressor `z_i(k)` from the current profile, and updates
//!
//! ```text
//! theta_i(k+1) = theta_i(k) + alpha_k (y_i(k) - theta_i(k) z_i(k)) z_i(k)
//! x_i(k+1)     = b_i / r_i - theta_i(k+1) z_i(k) / r_i
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::equilibrium::{perceived_matrix, solve_nash};
use crate::error::{Error, Result};
use crate::model::{validate, AttentionStructure, Conjecture, ConjectureClass, NetworkGame};
use crate::numerics::{norm2, norm_inf, solve_linear, sub};
use crate::trace::{Decimation, Trace, TraceRow};

/// Step sizes `alpha_k = a / (k + k0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub a: f64,
    pub k0: f64,
}

impl StepSchedule {
    pub fn new(a: f64, k0: f64) -> Result<Self> {
        let s = Self { a, k0 };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.a >= 0.0 && self.a.is_finite()) || !(self.k0 >= 1.0 && self.k0.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "step schedule needs a >= 0 and k0 >= 1, got a={}, k0={}",
                self.a, self.k0
            )));
        }
        Ok(())
    }

    pub fn at(&self, k: usize) -> f64 {
        self.a / (k as f64 + self.k0)
    }
}

impl Default for StepSchedule {
    fn default() -> Self {
        Self { a: 1.0, k0: 10.0 }
    }
}

/// Iterate of the learning process together with its private RNG.
#[derive(Debug, Clone)]
pub struct LearningState {
    pub k: usize,
    pub theta: Vec<f64>,
    pub x: Vec<f64>,
    rng: ChaCha8Rng,
}

impl LearningState {
    pub fn new(x: Vec<f64>, theta: Vec<f64>, seed: u64) -> Self {
        Self { k: 0, theta, x, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// `theta = 0`, `x = b / r`: the best response to a zero conjecture.
    pub fn naive(game: &NetworkGame, seed: u64) -> Self {
        let x = game.b().iter().zip(game.r()).map(|(b, r)| b / r).collect();
        Self::new(x, vec![0.0; game.n()], seed)
    }
}

/// Norms of the change produced by one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDelta {
    pub dx_inf: f64,
    pub dx_norm: f64,
    pub dtheta_norm: f64,
    /// Smallest `|z_i(k)|` used in the step.
    pub min_abs_regressor: f64,
}

/// The game as seen by learning agents: who regresses on what.
#[derive(Debug, Clone)]
pub struct Dynamics<'a> {
    game: &'a NetworkGame,
    class: &'a ConjectureClass,
    attention: Option<&'a AttentionStructure>,
    blowup: f64,
}

impl<'a> Dynamics<'a> {
    pub fn new(
        game: &'a NetworkGame,
        class: &'a ConjectureClass,
        attention: Option<&'a AttentionStructure>,
    ) -> Result<Self> {
        class.check_len(game.n())?;
        if class.uses(Conjecture::LocalMeanField) {
            let att = attention.ok_or_else(|| {
                Error::InvalidAttention("local mean-field conjectures need an attention structure".into())
            })?;
            att.validate_for(game, class)?;
        }
        if class.uses(Conjecture::GlobalMeanField) && game.n() < 2 {
            return Err(Error::InvalidParams("global mean field needs at least two agents".into()));
        }
        let blowup = 1e6 * (1.0 + norm_inf(game.b()) / game.r_min());
        Ok(Self { game, class, attention, blowup })
    }

    /// Overrides the divergence threshold on `|x|_inf`.
    pub fn with_blowup(mut self, bound: f64) -> Self {
        self.blowup = bound;
        self
    }

    pub fn game(&self) -> &NetworkGame {
        self.game
    }

    /// Regressors `z_i` at profile `x`.
    pub fn regressors(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let total: f64 = x.iter().sum();
        (0..n)
            .map(|i| match self.class.of(i) {
                Conjecture::Constant => 1.0,
                Conjecture::GlobalMeanField => (total - x[i]) / (n - 1) as f64,
                Conjecture::LocalMeanField => {
                    let s = self.attention.expect("checked in Dynamics::new").subset(i);
                    s.iter().map(|&j| x[j]).sum::<f64>() / s.len() as f64
                }
            })
            .collect()
    }

    /// Advances `state` by one step with step size `alpha`. `offset` is a
    /// deterministic shift added to every observed signal.
    pub fn step(&self, state: &mut LearningState, alpha: f64, offset: Option<&[f64]>) -> Result<StepDelta> {
        let game = self.game;
        let n = game.n();
        let z = self.regressors(&state.x);
        let gx = game.g().matvec(&state.x);
        let mut theta = Vec::with_capacity(n);
        let mut x = Vec::with_capacity(n);
        for i in 0..n {
            let noise: f64 = StandardNormal.sample(&mut state.rng);
            let y = gx[i] + offset.map_or(0.0, |d| d[i]) + game.sigma()[i] * noise;
            let th = state.theta[i] + alpha * (y - state.theta[i] * z[i]) * z[i];
            x.push(game.b()[i] / game.r()[i] - th * z[i] / game.r()[i]);
            theta.push(th);
        }
        let next_k = state.k + 1;
        let x_inf = norm_inf(&x);
        if !x_inf.is_finite() || x_inf > self.blowup || theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Diverged { step: next_k, norm: x_inf });
        }
        let dx = sub(&x, &state.x);
        let delta = StepDelta {
            dx_inf: norm_inf(&dx),
            dx_norm: norm2(&dx),
            dtheta_norm: norm2(&sub(&theta, &state.theta)),
            min_abs_regressor: z.iter().fold(f64::INFINITY, |m, v| m.min(v.abs())),
        };
        state.k = next_k;
        state.x = x;
        state.theta = theta;
        Ok(delta)
    }
}

/// Single step of the dynamics with the schedule's `alpha_k`.
pub fn step(
    game: &NetworkGame,
    attention: Option<&AttentionStructure>,
    class: &ConjectureClass,
    state: &LearningState,
    schedule: &StepSchedule,
) -> Result<LearningState> {
    let dynamics = Dynamics::new(game, class, attention)?;
    let mut next = state.clone();
    dynamics.step(&mut next, schedule.at(state.k), None)?;
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub schedule: StepSchedule,
    pub max_steps: usize,
    /// Convergence threshold on `|x(k+1) - x(k)|_inf`.
    pub tol: f64,
    /// Number of trailing steps that must all be below `tol`.
    pub window: usize,
    pub decimation: Decimation,
    pub x0: Option<Vec<f64>>,
    pub theta0: Option<Vec<f64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schedule: StepSchedule::default(),
            max_steps: 200_000,
            tol: 1e-6,
            window: 100,
            decimation: Decimation::default(),
            x0: None,
            theta0: None,
        }
    }
}

impl RunConfig {
    pub fn initial_state(&self, game: &NetworkGame, seed: u64) -> Result<LearningState> {
        let mut state = LearningState::naive(game, seed);
        for (name, src, dst) in [("x0", &self.x0, &mut state.x), ("theta0", &self.theta0, &mut state.theta)] {
            if let Some(v) = src {
                if v.len() != game.n() {
                    return Err(Error::InvalidParams(format!("{name} has {} entries, expected {}", v.len(), game.n())));
                }
                dst.clone_from(v);
            }
        }
        Ok(state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "converged-to-NE")]
    ConvergedToNash,
    #[serde(rename = "converged-to-BN")]
    ConvergedToBerkNash,
    #[serde(rename = "converged-elsewhere")]
    ConvergedElsewhere,
    #[serde(rename = "not-converged")]
    NotConverged,
}

/// Picks the limit a converged run sits at. Constant conjectures prefer the
/// Nash label when both candidates coincide; every other class prefers the
/// Berk-Nash label.
pub fn classify(
    converged: bool,
    dist_ne: f64,
    dist_bn: f64,
    threshold: f64,
    class: &ConjectureClass,
) -> Verdict {
    if !converged {
        return Verdict::NotConverged;
    }
    let near_ne = dist_ne <= threshold;
    let near_bn = dist_bn <= threshold;
    let prefer_ne = class.uniform() == Some(Conjecture::Constant);
    match (near_ne, near_bn) {
        (true, true) if prefer_ne => Verdict::ConvergedToNash,
        (_, true) => Verdict::ConvergedToBerkNash,
        (true, false) => Verdict::ConvergedToNash,
        (false, false) => Verdict::ConvergedElsewhere,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LearningRun {
    #[serde(skip)]
    pub state: LearningState,
    #[serde(skip)]
    pub trace: Trace,
    pub verdict: Verdict,
    pub steps: usize,
    /// Step at which the trailing-window criterion was first met.
    pub converged_at: Option<usize>,
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
    /// `|x - x_NE|_inf`.
    pub dist_ne: f64,
    /// `|x - x_BN|_inf` for the class-specific Berk-Nash profile.
    pub dist_bn: f64,
    pub x_ne: Vec<f64>,
    pub x_bn: Vec<f64>,
    /// `|(R + G) x - b|_2` at the terminal profile.
    pub nash_residual: f64,
    /// Smallest `|z_i(k)|` seen along the run.
    pub min_abs_regressor: f64,
}

/// Iterates the dynamics until `|x(k+1) - x(k)|_inf <= tol` for `window`
/// consecutive steps or `max_steps` is reached.
pub fn run(
    game: &NetworkGame,
    class: &ConjectureClass,
    attention: Option<&AttentionStructure>,
    config: &RunConfig,
    seed: u64,
) -> Result<LearningRun> {
    config.schedule.check()?;
    if !(config.tol > 0.0) || config.window == 0 {
        return Err(Error::InvalidParams("tol must be positive and window nonzero".into()));
    }
    let dynamics = Dynamics::new(game, class, attention)?;
    if class.uses(Conjecture::LocalMeanField) {
        let report = validate(game, attention)?;
        if report.lmf_contractive() == Some(false) {
            log::warn!(
                "rho(R^-1 G~) = {:.4} >= 1; local mean-field learning may not converge",
                report.rho_r_inv_g_tilde.unwrap_or(f64::NAN)
            );
        }
    }
    let x_ne = solve_nash(game)?.x;
    let h = perceived_matrix(game, class, attention)?;
    let x_bn = solve_linear(&game.r_plus(&h), game.b())?;

    let mut state = config.initial_state(game, seed)?;
    let mut trace = Trace::default();
    let mut quiet = 0usize;
    let mut converged_at = None;
    let mut min_abs_regressor = f64::INFINITY;
    while state.k < config.max_steps {
        let alpha = config.schedule.at(state.k);
        let d = dynamics.step(&mut state, alpha, None)?;
        min_abs_regressor = min_abs_regressor.min(d.min_abs_regressor);
        quiet = if d.dx_inf <= config.tol { quiet + 1 } else { 0 };
        if quiet >= config.window {
            converged_at = Some(state.k);
        }
        if config.decimation.keeps(state.k) || converged_at.is_some() || state.k == config.max_steps {
            trace.push(TraceRow {
                k: state.k,
                x: state.x.clone(),
                theta: state.theta.clone(),
                delta: None,
                dx_norm: d.dx_norm,
                dtheta_norm: d.dtheta_norm,
                ddelta_norm: None,
            });
        }
        if converged_at.is_some() {
            break;
        }
    }

    let dist_ne = norm_inf(&sub(&state.x, &x_ne));
    let dist_bn = norm_inf(&sub(&state.x, &x_bn));
    let verdict = classify(converged_at.is_some(), dist_ne, dist_bn, 10.0 * config.tol, class);
    let residual_vec = sub(&game.r_plus(game.g()).matvec(&state.x), game.b());
    Ok(LearningRun {
        steps: state.k,
        converged_at,
        x: state.x.clone(),
        theta: state.theta.clone(),
        verdict,
        dist_ne,
        dist_bn,
        x_ne,
        x_bn,
        nash_residual: norm2(&residual_vec),
        min_abs_regressor,
        state,
        trace,
    })
}
