//! The designer's minimal-distortion problem.
//!
//! Shifting every agent's signal by a mean distortion `delta` moves the local
//! mean-field equilibrium to `x(delta) = M (b - delta)` with
//! `M = (R + G~)^{-1}`. Substituting into the aggregate cost gives the QCQP
//!
//! ```text
//! min f(delta) = delta'Q delta - 2 b'Q delta + c'delta   s.t.  delta'A delta <= budget
//! Q = 1/2 M'RM + 1/2 M'(G + G')M,   c = M'b,   A = diag(a_weights)
//! ```
//!
//! solved through `delta(lambda) = (Q + lambda A)^{-1} (Q b - c/2)` and a
//! bisection on the multiplier.

use serde::{Deserialize, Serialize};

use crate::equilibrium::{consistent_theta_shifted, EquilibriumKind, EquilibriumResult};
use crate::error::{Error, Result};
use crate::model::{sparsify, AttentionStructure, Conjecture, ConjectureClass, NetworkGame};
use crate::numerics::{dot, min_norm_solve, min_symmetric_eigenvalue, norm2, solve_linear, sub, Lu, Matrix};

/// Tolerance on `|g(lambda)| / budget` at which bisection stops.
pub const BUDGET_REL_TOL: f64 = 1e-12;
/// Cap on bracket doublings for the multiplier search.
pub const MAX_DOUBLINGS: usize = 200;
/// Default absolute tolerance for [`kkt_verify`].
pub const KKT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcqpData {
    pub q: Matrix,
    pub c: Vec<f64>,
    /// Diagonal of `A`.
    pub a_weights: Vec<f64>,
    /// `(R + G~)^{-1}`.
    pub m: Matrix,
    pub b: Vec<f64>,
    pub budget: f64,
}

impl QcqpData {
    pub fn n(&self) -> usize {
        self.c.len()
    }

    /// `Q b - c / 2`.
    pub fn target(&self) -> Vec<f64> {
        let qb = self.q.matvec(&self.b);
        qb.iter().zip(&self.c).map(|(q, c)| q - 0.5 * c).collect()
    }

    /// `delta' A delta`.
    pub fn distortion_cost(&self, delta: &[f64]) -> f64 {
        delta.iter().zip(&self.a_weights).map(|(d, a)| a * d * d).sum()
    }

    /// `grad f = 2 Q delta - 2 Q b + c`.
    pub fn gradient(&self, delta: &[f64]) -> Vec<f64> {
        let qd = self.q.matvec(delta);
        qd.iter().zip(self.target()).map(|(q, t)| 2.0 * (q - t)).collect()
    }

    /// Radial map onto `{ delta : delta'A delta <= budget }`.
    pub fn feasible(&self, delta: &[f64]) -> Vec<f64> {
        let cost = self.distortion_cost(delta);
        if cost <= self.budget || cost == 0.0 {
            return delta.to_vec();
        }
        let s = (self.budget.max(0.0) / cost).sqrt();
        delta.iter().map(|d| d * s).collect()
    }

    /// Equilibrium actions `M (b - delta)`.
    pub fn induced_actions(&self, delta: &[f64]) -> Vec<f64> {
        self.m.matvec(&sub(&self.b, delta))
    }
}

/// Builds `Q`, `c`, `A` and `M` for the local mean-field equilibrium.
pub fn assemble_qcqp(
    game: &NetworkGame,
    attention: &AttentionStructure,
    a_weights: &[f64],
    budget: f64,
) -> Result<QcqpData> {
    assemble_qcqp_with(game, &sparsify(game, attention)?, a_weights, budget)
}

/// Same as [`assemble_qcqp`] with an arbitrary perceived interaction matrix
/// `H` in place of `G~`, so `M = (R + H)^{-1}`.
pub fn assemble_qcqp_with(game: &NetworkGame, h: &Matrix, a_weights: &[f64], budget: f64) -> Result<QcqpData> {
    let n = game.n();
    if h.rows() != n || h.cols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: h.rows() });
    }
    if a_weights.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: a_weights.len() });
    }
    if let Some(i) = a_weights.iter().position(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidParams(format!("distortion weight {i} must be positive, got {}", a_weights[i])));
    }
    if !budget.is_finite() {
        return Err(Error::InvalidParams(format!("budget must be finite, got {budget}")));
    }
    let m = Lu::factor(&game.r_plus(h))?.inverse();
    let g = game.g();
    // R + G + G'
    let mut s = g.add_scaled(1.0, &g.transpose());
    s = s.add_diag(game.r());
    let q_raw = m.transpose().matmul(&s).matmul(&m).scale(0.5);
    let q = q_raw.add_scaled(1.0, &q_raw.transpose()).scale(0.5);
    let c = m.transpose().matvec(game.b());
    Ok(QcqpData { q, c, a_weights: a_weights.to_vec(), m, b: game.b().to_vec(), budget })
}

/// `f(delta) = delta'Q delta - 2 b'Q delta + c'delta`.
pub fn designer_objective(q: &QcqpData, delta: &[f64]) -> f64 {
    let qd = q.q.matvec(delta);
    dot(delta, &qd) - 2.0 * dot(&q.b, &qd) + dot(&q.c, delta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionPlan {
    pub delta: Vec<f64>,
    /// Distortion standard deviations; zero at the optimum.
    pub rho: Vec<f64>,
    pub lambda: f64,
    pub gamma_budget: f64,
    pub a_weights: Vec<f64>,
    /// Whether the budget constraint binds.
    pub active: bool,
    /// `f(delta)`.
    pub objective: f64,
}

impl DistortionPlan {
    /// A plan with the given mean distortion and no multiplier information.
    pub fn fixed(q: &QcqpData, delta: Vec<f64>) -> Self {
        let objective = designer_objective(q, &delta);
        DistortionPlan {
            rho: vec![0.0; delta.len()],
            delta,
            lambda: 0.0,
            gamma_budget: q.budget,
            a_weights: q.a_weights.clone(),
            active: false,
            objective,
        }
    }
}

fn psd_floor(q: &QcqpData) -> f64 {
    -1e-10 * q.q.max_abs().max(1.0)
}

/// Optimal distortion by multiplier bisection.
///
/// When the unconstrained minimizer fits the budget it is returned with
/// `lambda = 0`; for singular `Q` this is the minimum-norm stationary point.
/// Otherwise `lambda` is the root of `delta(lambda)'A delta(lambda) = budget`,
/// bracketed by doubling from 1.
pub fn solve_arbitrage(q: &QcqpData) -> Result<DistortionPlan> {
    if !(q.budget > 0.0) {
        return Err(Error::InfeasibleBudget(q.budget));
    }
    let min_eig = min_symmetric_eigenvalue(&q.q);
    if min_eig < psd_floor(q) {
        return Err(Error::NumericalFailure(format!("Q is not positive semidefinite (min eigenvalue {min_eig:.3e})")));
    }
    let rhs = q.target();
    let scale = norm2(&rhs).max(f64::MIN_POSITIVE);

    let unconstrained = min_norm_solve(&q.q, &rhs)?;
    let stationary = norm2(&sub(&q.q.matvec(&unconstrained), &rhs)) <= 1e-10 * scale;
    if stationary && q.distortion_cost(&unconstrained) <= q.budget {
        let mut plan = DistortionPlan::fixed(q, unconstrained);
        plan.active = false;
        return Ok(plan);
    }

    let a_diag = Matrix::from_diag(&q.a_weights);
    let delta_at = |lambda: f64| solve_linear(&q.q.add_scaled(lambda, &a_diag), &rhs);
    let excess = |delta: &[f64]| q.distortion_cost(delta) - q.budget;

    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut doublings = 0;
    while excess(&delta_at(hi)?) >= 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::NumericalFailure("could not bracket the budget multiplier".into()));
        }
    }
    let mut lambda = hi;
    let mut delta = delta_at(hi)?;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let d = delta_at(mid)?;
        let g = excess(&d);
        lambda = mid;
        delta = d;
        if g.abs() <= BUDGET_REL_TOL * q.budget {
            break;
        }
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut plan = DistortionPlan::fixed(q, delta);
    plan.lambda = lambda;
    plan.active = true;
    Ok(plan)
}

/// Equilibrium induced by a distortion plan, `x = M (b - delta)`; `theta`
/// is the consistent conjecture for the distorted signal.
pub fn induced_equilibrium(
    game: &NetworkGame,
    attention: &AttentionStructure,
    plan: &DistortionPlan,
) -> Result<EquilibriumResult> {
    if plan.delta.len() != game.n() {
        return Err(Error::DimensionMismatch { expected: game.n(), found: plan.delta.len() });
    }
    let system = game.r_plus(&sparsify(game, attention)?);
    let rhs = sub(game.b(), &plan.delta);
    let x = solve_linear(&system, &rhs)?;
    let residual = norm2(&sub(&system.matvec(&x), &rhs));
    let theta = consistent_theta_shifted(game, attention, &x, Some(&plan.delta))?;
    Ok(EquilibriumResult { kind: EquilibriumKind::BneLocalMeanField, x, theta, residual, gamma: None })
}

/// Induced equilibrium for a homogeneous constant or local mean-field
/// population. Constant conjectures absorb the whole distorted signal,
/// `theta_i = sum_j g_ij x_j + delta_i`, and play `(R + G) x = b - delta`.
pub fn induced_equilibrium_for(
    game: &NetworkGame,
    class: &ConjectureClass,
    attention: Option<&AttentionStructure>,
    plan: &DistortionPlan,
) -> Result<EquilibriumResult> {
    match class.uniform() {
        Some(Conjecture::LocalMeanField) => {
            let att = attention.ok_or_else(|| {
                Error::InvalidAttention("local mean-field conjectures need an attention structure".into())
            })?;
            induced_equilibrium(game, att, plan)
        }
        Some(Conjecture::Constant) => {
            if plan.delta.len() != game.n() {
                return Err(Error::DimensionMismatch { expected: game.n(), found: plan.delta.len() });
            }
            let system = game.r_plus(game.g());
            let rhs = sub(game.b(), &plan.delta);
            let x = solve_linear(&system, &rhs)?;
            let residual = norm2(&sub(&system.matvec(&x), &rhs));
            let gx = game.g().matvec(&x);
            let theta = gx.iter().zip(&plan.delta).map(|(g, d)| g + d).collect();
            Ok(EquilibriumResult { kind: EquilibriumKind::BneConstant, x, theta, residual, gamma: None })
        }
        _ => Err(Error::InvalidParams(
            "distortion design supports homogeneous constant or local mean-field conjectures".into(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// `|2 (Q + lambda A) delta - 2 Q b + c|_2`.
    pub stationarity: f64,
    /// `budget - delta'A delta`.
    pub primal_slack: f64,
    pub dual_feasible: bool,
    /// `|lambda (delta'A delta - budget)|`.
    pub complementarity: f64,
    pub tol: f64,
    pub passed: bool,
}

pub fn kkt_verify(q: &QcqpData, plan: &DistortionPlan) -> KktReport {
    kkt_verify_with(q, plan, KKT_TOL)
}

pub fn kkt_verify_with(q: &QcqpData, plan: &DistortionPlan, tol: f64) -> KktReport {
    let delta = &plan.delta;
    let grad = q.gradient(delta);
    let stat: Vec<f64> =
        grad.iter().zip(delta).zip(&q.a_weights).map(|((g, d), a)| g + 2.0 * plan.lambda * a * d).collect();
    let stationarity = norm2(&stat);
    let primal_slack = q.budget - q.distortion_cost(delta);
    let dual_feasible = plan.lambda >= 0.0;
    let complementarity = (plan.lambda * primal_slack).abs();
    let passed = stationarity <= tol && primal_slack >= -tol && dual_feasible && complementarity <= tol;
    KktReport { stationarity, primal_slack, dual_feasible, complementarity, tol, passed }
}
