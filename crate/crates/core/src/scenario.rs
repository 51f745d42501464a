//! Random dense scenarios with a sparse attention graph.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AttentionStructure, NetworkGame, SPECTRAL_TOL};
use crate::numerics::{spectral_radius, Matrix};

/// Distribution knobs for [`generate_scenario_with`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioOptions {
    /// `r_i ~ Uniform(r_range)`.
    pub r_range: (f64, f64),
    /// `b_i ~ Uniform(b_range)`.
    pub b_range: (f64, f64),
    /// Common observation-noise scale.
    pub sigma: f64,
    /// Probability that an interaction weight is negated.
    pub sign_flip_prob: f64,
    /// Target `rho(G) / r_min` after rescaling.
    pub stability_margin: f64,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self { r_range: (1.0, 2.0), b_range: (1.0, 2.0), sigma: 0.05, sign_flip_prob: 0.0, stability_margin: 0.8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub game: NetworkGame,
    pub attention: AttentionStructure,
    /// Achieved per-agent share of absolute interaction weight inside `S_i`.
    pub coverage: Vec<f64>,
}

pub fn generate_scenario(n: usize, avg_degree: usize, weight_coverage: f64, seed: u64) -> Result<Scenario> {
    generate_scenario_with(n, avg_degree, weight_coverage, seed, &ScenarioOptions::default())
}

/// Draws a dense interaction matrix, rescales it so that
/// `rho(G) = stability_margin * r_min`, and lets every agent attend to its
/// `avg_degree` heaviest links.
///
/// Raw magnitudes are `Uniform(0, 1]`. When an agent's heaviest links would
/// cover more than `weight_coverage` of its row weight, the row is flattened
/// by a common additive shift, which keeps the ranking and brings the
/// coverage down to the target (as far as `avg_degree / (n - 1)` allows).
pub fn generate_scenario_with(
    n: usize,
    avg_degree: usize,
    weight_coverage: f64,
    seed: u64,
    opts: &ScenarioOptions,
) -> Result<Scenario> {
    if n < 2 || avg_degree == 0 || avg_degree >= n {
        return Err(Error::InvalidParams(format!("need 0 < avg_degree < n, got avg_degree={avg_degree}, n={n}")));
    }
    if !(weight_coverage > 0.0 && weight_coverage <= 1.0) {
        return Err(Error::InvalidParams(format!("weight coverage must lie in (0, 1], got {weight_coverage}")));
    }
    let (r_lo, r_hi) = opts.r_range;
    let (b_lo, b_hi) = opts.b_range;
    if !(r_lo > 0.0 && r_lo <= r_hi) || b_lo > b_hi || opts.sigma < 0.0 {
        return Err(Error::InvalidParams("invalid scenario ranges".into()));
    }
    if !(opts.stability_margin > 0.0 && opts.stability_margin < 1.0) || !(0.0..=1.0).contains(&opts.sign_flip_prob) {
        return Err(Error::InvalidParams("stability margin must lie in (0, 1) and flip probability in [0, 1]".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r: Vec<f64> = (0..n).map(|_| uniform(&mut rng, r_lo, r_hi)).collect();
    let b: Vec<f64> = (0..n).map(|_| uniform(&mut rng, b_lo, b_hi)).collect();

    let mut g = Matrix::zeros(n, n);
    let mut subsets = Vec::with_capacity(n);
    let others = (n - 1) as f64;
    let k = avg_degree as f64;
    for i in 0..n {
        let mut mags: Vec<(usize, f64)> =
            (0..n).filter(|&j| j != i).map(|j| (j, 1.0 - rng.random::<f64>())).collect();
        let ranked = rank_desc(&mags);
        let top: f64 = ranked[..avg_degree].iter().map(|&p| mags[p].1).sum();
        let total: f64 = mags.iter().map(|m| m.1).sum();
        if top / total > weight_coverage {
            let shift = if weight_coverage * others > k {
                (top - weight_coverage * total) / (weight_coverage * others - k)
            } else {
                // unreachable target; flatten completely
                f64::INFINITY
            };
            for m in &mut mags {
                m.1 = if shift.is_finite() { m.1 + shift } else { 1.0 };
            }
        }
        for &(j, mag) in &mags {
            let sign = if rng.random::<f64>() < opts.sign_flip_prob { -1.0 } else { 1.0 };
            g[(i, j)] = sign * mag;
        }
        let mut s: Vec<usize> = rank_desc(&mags)[..avg_degree].iter().map(|&p| mags[p].0).collect();
        s.sort_unstable();
        subsets.push(s);
    }

    let r_min = r.iter().copied().fold(f64::INFINITY, f64::min);
    let rho = spectral_radius(&g, SPECTRAL_TOL)?;
    if rho == 0.0 {
        return Err(Error::NumericalFailure("generated interaction matrix is nilpotent".into()));
    }
    let g = g.scale(opts.stability_margin * r_min / rho);
    let game = NetworkGame::new(g, r, b, vec![opts.sigma; n])?;
    let attention = AttentionStructure::new(subsets);
    let coverage = attention.coverage(&game);
    Ok(Scenario { game, attention, coverage })
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Positions sorted by decreasing magnitude, ties by lower neighbor index.
fn rank_desc(mags: &[(usize, f64)]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..mags.len()).collect();
    idx.sort_by(|&a, &b| mags[b].1.abs().total_cmp(&mags[a].1.abs()).then(mags[a].0.cmp(&mags[b].0)));
    idx
}
