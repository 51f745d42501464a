//! Closed-form Nash and Berk-Nash equilibria, consistent conjectures and the
//! value of misspecification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sparsify, sparsify_for, AttentionStructure, Conjecture, ConjectureClass, NetworkGame, SPECTRAL_TOL};
use crate::numerics::{norm2, norm_inf, operator_norm, solve_linear, spectral_radius, sub, Matrix};

/// Relative threshold under which a subset average counts as vanishing.
pub const DEGENERATE_REGRESSOR_TOL: f64 = 1e-12;

/// Below this magnitude the baseline cost is treated as zero.
pub const ZERO_COST_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EquilibriumKind {
    #[serde(rename = "NE")]
    Nash,
    #[serde(rename = "BNE-Constant")]
    BneConstant,
    #[serde(rename = "BNE-GMF")]
    BneGlobalMeanField,
    #[serde(rename = "BNE-LMF")]
    BneLocalMeanField,
    /// Heterogeneous conjecture assignment.
    #[serde(rename = "BNE-Mixed")]
    BneMixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub kind: EquilibriumKind,
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
    /// Euclidean residual of the linear system the actions solve.
    pub residual: f64,
    /// Row sums `gamma_i`, reported for global mean-field equilibria.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
}

/// Aggregate cost `1/2 x'Rx + x'Gx - b'x`.
pub fn aggregate_cost(game: &NetworkGame, x: &[f64]) -> f64 {
    assert_eq!(x.len(), game.n(), "action profile has wrong length");
    let quad: f64 = game.r().iter().zip(x).map(|(r, v)| 0.5 * r * v * v).sum();
    let gx = game.g().matvec(x);
    let inter: f64 = x.iter().zip(&gx).map(|(a, b)| a * b).sum();
    let lin: f64 = game.b().iter().zip(x).map(|(a, b)| a * b).sum();
    quad + inter - lin
}

fn solve_with_residual(a: &Matrix, rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let x = solve_linear(a, rhs)?;
    let residual = norm2(&sub(&a.matvec(&x), rhs));
    Ok((x, residual))
}

/// Nash equilibrium: `(R + G) x = b`.
pub fn solve_nash(game: &NetworkGame) -> Result<EquilibriumResult> {
    let (x, residual) = solve_with_residual(&game.r_plus(game.g()), game.b())?;
    let theta = game.g().matvec(&x);
    Ok(EquilibriumResult { kind: EquilibriumKind::Nash, x, theta, residual, gamma: None })
}

fn row_sums(g: &Matrix) -> Vec<f64> {
    (0..g.rows()).map(|i| g.row(i).iter().sum()).collect()
}

/// Berk-Nash equilibrium for a conjecture assignment.
///
/// * Constant: the Nash profile, with `theta_i = sum_j g_ij x_j`.
/// * Global mean field: `theta_i = gamma_i`, actions from the population-mean
///   fixed point `xbar = mean(b/r) / (1 + mean(gamma/r))`.
/// * Local mean field: `(R + G~) x = b`, with `theta` from [`consistent_theta`].
///
/// A heterogeneous assignment stacks the per-class rows into one linear
/// system; global mean-field rows read `r_i x_i + gamma_i * mean(x) = b_i`.
pub fn solve_bne(
    game: &NetworkGame,
    class: &ConjectureClass,
    attention: Option<&AttentionStructure>,
) -> Result<EquilibriumResult> {
    let n = game.n();
    class.check_len(n)?;
    let needs_attention = || {
        attention.ok_or_else(|| Error::InvalidAttention("local mean-field conjectures need an attention structure".into()))
    };
    match class.uniform() {
        Some(Conjecture::Constant) => {
            let ne = solve_nash(game)?;
            Ok(EquilibriumResult { kind: EquilibriumKind::BneConstant, ..ne })
        }
        Some(Conjecture::GlobalMeanField) => solve_gmf(game),
        Some(Conjecture::LocalMeanField) => {
            let att = needs_attention()?;
            let gt = sparsify(game, att)?;
            let (x, residual) = solve_with_residual(&game.r_plus(&gt), game.b())?;
            let theta = consistent_theta(game, att, &x)?;
            Ok(EquilibriumResult { kind: EquilibriumKind::BneLocalMeanField, x, theta, residual, gamma: None })
        }
        None => {
            let gamma = row_sums(game.g());
            let h = perceived_matrix(game, class, attention)?;
            let (x, residual) = solve_with_residual(&game.r_plus(&h), game.b())?;
            let gx = game.g().matvec(&x);
            let mut theta = Vec::with_capacity(n);
            for i in 0..n {
                theta.push(match class.of(i) {
                    Conjecture::Constant => gx[i],
                    Conjecture::GlobalMeanField => gamma[i],
                    Conjecture::LocalMeanField => theta_ratio(i, gx[i], needs_attention()?.subset(i), &x)?,
                });
            }
            let gamma = class.uses(Conjecture::GlobalMeanField).then_some(gamma);
            Ok(EquilibriumResult { kind: EquilibriumKind::BneMixed, x, theta, residual, gamma })
        }
    }
}

/// Interaction matrix `H` whose system `(R + H) x = b` yields the
/// Berk-Nash actions of `class`: rows of `G` for constant conjectures, rows
/// of `G~` for local mean field, and `gamma_i / n` across the row for global
/// mean field.
pub fn perceived_matrix(
    game: &NetworkGame,
    class: &ConjectureClass,
    attention: Option<&AttentionStructure>,
) -> Result<Matrix> {
    let n = game.n();
    class.check_len(n)?;
    let mut h = if class.uses(Conjecture::LocalMeanField) {
        let att = attention
            .ok_or_else(|| Error::InvalidAttention("local mean-field conjectures need an attention structure".into()))?;
        sparsify_for(game, att, class)?
    } else {
        game.g().clone()
    };
    let gamma = row_sums(game.g());
    for i in (0..n).filter(|&i| class.of(i) == Conjecture::GlobalMeanField) {
        h.row_mut(i).fill(gamma[i] / n as f64);
    }
    Ok(h)
}

fn solve_gmf(game: &NetworkGame) -> Result<EquilibriumResult> {
    let n = game.n();
    let nf = n as f64;
    let gamma = row_sums(game.g());
    let mean_b_over_r = game.b().iter().zip(game.r()).map(|(b, r)| b / r).sum::<f64>() / nf;
    let denom = 1.0 + gamma.iter().zip(game.r()).map(|(g, r)| g / r).sum::<f64>() / nf;
    if denom.abs() < 1e-12 {
        return Err(Error::SingularMatrix { pivot: denom.abs(), threshold: 1e-12 });
    }
    let xbar = mean_b_over_r / denom;
    let x: Vec<f64> = (0..n).map(|i| (game.b()[i] - gamma[i] * xbar) / game.r()[i]).collect();
    // residual of the equivalent system r_i x_i + gamma_i * mean(x) = b_i
    let mean_x = x.iter().sum::<f64>() / nf;
    let res: Vec<f64> = (0..n).map(|i| game.r()[i] * x[i] + gamma[i] * mean_x - game.b()[i]).collect();
    Ok(EquilibriumResult {
        kind: EquilibriumKind::BneGlobalMeanField,
        x,
        theta: gamma.clone(),
        residual: norm2(&res),
        gamma: Some(gamma),
    })
}

fn theta_ratio(agent: usize, influence: f64, subset: &[usize], x: &[f64]) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::EmptyAttention { agent });
    }
    let z = subset.iter().map(|&j| x[j]).sum::<f64>() / subset.len() as f64;
    if z == 0.0 || z.abs() < DEGENERATE_REGRESSOR_TOL * norm_inf(x) {
        return Err(Error::DegenerateRegressor { agent, value: z });
    }
    Ok(influence / z)
}

/// Consistent local mean-field conjecture at `x`: the true influence
/// `sum_j g_ij x_j` divided by the subset average `z_i`.
pub fn consistent_theta(game: &NetworkGame, attention: &AttentionStructure, x: &[f64]) -> Result<Vec<f64>> {
    consistent_theta_shifted(game, attention, x, None)
}

/// [`consistent_theta`] with an additive signal offset in the numerator.
pub fn consistent_theta_shifted(
    game: &NetworkGame,
    attention: &AttentionStructure,
    x: &[f64],
    offset: Option<&[f64]>,
) -> Result<Vec<f64>> {
    if attention.len() != game.n() {
        return Err(Error::InvalidAttention(format!("{} subsets for {} agents", attention.len(), game.n())));
    }
    let gx = game.g().matvec(x);
    (0..game.n())
        .map(|i| {
            let influence = gx[i] + offset.map_or(0.0, |d| d[i]);
            theta_ratio(i, influence, attention.subset(i), x)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VomReport {
    /// `(J(x_BN) - J(x_NE)) / J(x_NE)`, sign as computed.
    pub vom: f64,
    pub cost_ne: f64,
    pub cost_bn: f64,
    pub cost_diff: f64,
    /// `||G~ - G||_2`.
    pub delta_g_norm: f64,
    /// `(r_min - rho(G))^-2`, absent when `rho(G) >= r_min`.
    pub k1: Option<f64>,
    /// `r_min / (2 (||R|| + ||G||)^2)`, the constant in `|J(x_NE)| >= K4 ||b||^2`.
    pub k4: f64,
    /// Set when `J(x_NE) < 0`, where a positive VoM means lower cost.
    pub sign_caveat: bool,
}

struct VomParts {
    report: VomReport,
    x_ne: Vec<f64>,
    x_bn: Vec<f64>,
}

fn vom_against(game: &NetworkGame, g_tilde: &Matrix) -> Result<VomParts> {
    let x_ne = solve_nash(game)?.x;
    let x_bn = solve_linear(&game.r_plus(g_tilde), game.b())?;
    let cost_ne = aggregate_cost(game, &x_ne);
    let cost_bn = aggregate_cost(game, &x_bn);
    if cost_ne.abs() < ZERO_COST_TOL {
        return Err(Error::ZeroBaselineCost(cost_ne));
    }
    let cost_diff = cost_bn - cost_ne;
    let r_min = game.r_min();
    let r_max = game.r().iter().copied().fold(0.0, f64::max);
    let rho = spectral_radius(game.g(), SPECTRAL_TOL)?;
    let k1 = (rho < r_min).then(|| (r_min - rho).powi(-2));
    let k4 = r_min / (2.0 * (r_max + operator_norm(game.g())).powi(2));
    let report = VomReport {
        vom: cost_diff / cost_ne,
        cost_ne,
        cost_bn,
        cost_diff,
        delta_g_norm: operator_norm(&g_tilde.add_scaled(-1.0, game.g())),
        k1,
        k4,
        sign_caveat: cost_ne < 0.0,
    };
    Ok(VomParts { report, x_ne, x_bn })
}

/// Value of misspecification of the local mean-field equilibrium.
pub fn value_of_misspecification(game: &NetworkGame, attention: &AttentionStructure) -> Result<VomReport> {
    let gt = sparsify(game, attention)?;
    Ok(vom_against(game, &gt)?.report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub scale: f64,
    pub vom: f64,
    pub cost_ne: f64,
    pub cost_bn: f64,
    /// `||t (G~ - G)||_2`.
    pub delta_g_norm: f64,
    /// `||x_BN(t) - x_NE||_2`.
    pub deviation: f64,
    /// `K1 ||b||_2 ||t (G~ - G)||_2`.
    pub bound: f64,
    pub bound_ok: bool,
    /// `|VoM(t)| / (t ||G~ - G||_2)`, absent at `t = 0` or when `G~ = G`.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheckReport {
    pub k1: f64,
    /// `|J(x_NE) + 1/2 x_NE' R x_NE| / |J(x_NE)|`.
    pub identity_residual: f64,
    pub identity_ok: bool,
    /// Rows sorted by ascending scale.
    pub rows: Vec<BoundRow>,
    /// Largest factor by which any ratio departs from the ratio at the
    /// smallest positive scale.
    pub ratio_spread: Option<f64>,
}

impl BoundCheckReport {
    pub fn all_bounds_hold(&self) -> bool {
        self.rows.iter().all(|r| r.bound_ok)
    }
}

pub const IDENTITY_TOL: f64 = 1e-10;

/// Attenuates the sparsification, `G~_t = G + t (G~ - G)`, and checks the
/// Nash cost identity, the linear action-deviation bound and the linear
/// growth of VoM in `t ||G~ - G||`.
pub fn vom_bound_check(game: &NetworkGame, attention: &AttentionStructure, scales: &[f64]) -> Result<BoundCheckReport> {
    let r_min = game.r_min();
    let rho = spectral_radius(game.g(), SPECTRAL_TOL)?;
    if rho >= r_min {
        return Err(Error::InvalidParams(format!("bound check needs rho(G) < r_min, got {rho} >= {r_min}")));
    }
    if let Some(t) = scales.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::InvalidParams(format!("scale {t} outside [0, 1]")));
    }
    let gt = sparsify(game, attention)?;
    let delta = gt.add_scaled(-1.0, game.g());
    let full_norm = operator_norm(&delta);
    let k1 = (r_min - rho).powi(-2);
    let b_norm = norm2(game.b());

    let mut sorted = scales.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(sorted.len());
    let mut identity_residual = 0.0;
    for t in sorted {
        let parts = vom_against(game, &game.g().add_scaled(t, &delta))?;
        let x_ne = &parts.x_ne;
        let half_xrx: f64 = game.r().iter().zip(x_ne).map(|(r, v)| 0.5 * r * v * v).sum();
        let cost_ne = parts.report.cost_ne;
        identity_residual = f64::max(identity_residual, (cost_ne + half_xrx).abs() / cost_ne.abs());
        let delta_g_norm = t * full_norm;
        let deviation = norm2(&sub(&parts.x_bn, x_ne));
        let bound = k1 * b_norm * delta_g_norm;
        rows.push(BoundRow {
            scale: t,
            vom: parts.report.vom,
            cost_ne,
            cost_bn: parts.report.cost_bn,
            delta_g_norm,
            deviation,
            bound,
            bound_ok: deviation <= bound * (1.0 + 1e-12),
            ratio: (delta_g_norm > 0.0).then(|| parts.report.vom.abs() / delta_g_norm),
        });
    }
    let reference = rows.iter().find_map(|r| r.ratio);
    let ratio_spread = reference.filter(|&r| r > 0.0).map(|r0| {
        rows.iter().filter_map(|r| r.ratio).fold(1.0, |m: f64, r| m.max(r / r0).max(r0 / r))
    });
    Ok(BoundCheckReport {
        k1,
        identity_residual,
        identity_ok: identity_residual <= IDENTITY_TOL,
        rows,
        ratio_spread,
    })
}
