//! The network game, attention sets and conjecture classes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{spectral_radius, Matrix};

/// Tolerance used for all stability diagnostics.
pub const SPECTRAL_TOL: f64 = 1e-12;

/// Linear-quadratic network game.
///
/// Agent `i` pays `r_i/2 x_i^2 + x_i (y_i - b_i)` where the signal is
/// `y_i = sum_j g_ij x_j + eta_i` with `eta_i ~ N(0, sigma_i^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGame", into = "RawGame")]
pub struct NetworkGame {
    g: Matrix,
    r: Vec<f64>,
    b: Vec<f64>,
    sigma: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGame {
    g: Matrix,
    r: Vec<f64>,
    b: Vec<f64>,
    sigma: Vec<f64>,
}

impl TryFrom<RawGame> for NetworkGame {
    type Error = Error;

    fn try_from(raw: RawGame) -> Result<Self> {
        NetworkGame::new(raw.g, raw.r, raw.b, raw.sigma)
    }
}

impl From<NetworkGame> for RawGame {
    fn from(game: NetworkGame) -> Self {
        RawGame { g: game.g, r: game.r, b: game.b, sigma: game.sigma }
    }
}

impl NetworkGame {
    pub fn new(g: Matrix, r: Vec<f64>, b: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        let n = r.len();
        if !g.is_square() || g.rows() != n {
            return Err(Error::InvalidGame(format!(
                "g is {}x{} but r has {} entries",
                g.rows(),
                g.cols(),
                n
            )));
        }
        for (name, v) in [("b", &b), ("sigma", &sigma)] {
            if v.len() != n {
                return Err(Error::InvalidGame(format!("{name} has {} entries, expected {n}", v.len())));
            }
        }
        if !g.is_finite() || [&r, &b, &sigma].iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidGame("all parameters must be finite".into()));
        }
        if let Some(i) = (0..n).find(|&i| g[(i, i)] != 0.0) {
            return Err(Error::InvalidGame(format!("g[{i}][{i}] = {} but self-interaction must be zero", g[(i, i)])));
        }
        if let Some(i) = r.iter().position(|&v| v <= 0.0) {
            return Err(Error::InvalidGame(format!("r[{i}] = {} must be positive", r[i])));
        }
        if let Some(i) = sigma.iter().position(|&v| v < 0.0) {
            return Err(Error::InvalidGame(format!("sigma[{i}] = {} must be nonnegative", sigma[i])));
        }
        Ok(Self { g, r, b, sigma })
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }

    pub fn g(&self) -> &Matrix {
        &self.g
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn r_min(&self) -> f64 {
        self.r.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Same game with biases replaced.
    pub fn with_b(&self, b: Vec<f64>) -> Result<Self> {
        Self::new(self.g.clone(), self.r.clone(), b, self.sigma.clone())
    }

    /// Same game with noise scales replaced.
    pub fn with_sigma(&self, sigma: Vec<f64>) -> Result<Self> {
        Self::new(self.g.clone(), self.r.clone(), self.b.clone(), sigma)
    }

    /// Neighborhood `V_i = { j != i : g_ij != 0 }`.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.g.row(i).iter().enumerate().filter(move |&(j, &v)| j != i && v != 0.0).map(|(j, _)| j)
    }

    /// `R + H` for an interaction matrix `H` of the same size.
    pub fn r_plus(&self, h: &Matrix) -> Matrix {
        h.add_diag(&self.r)
    }

    /// `R^{-1} H`.
    pub fn r_inv_times(&self, h: &Matrix) -> Matrix {
        let mut out = h.clone();
        for (i, &ri) in self.r.iter().enumerate() {
            out.row_mut(i).iter_mut().for_each(|v| *v /= ri);
        }
        out
    }
}

/// Conjecture class of a single agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conjecture {
    /// `z_i = 1`.
    Constant,
    /// `z_i` is the population mean excluding `i`.
    GlobalMeanField,
    /// `z_i` is the mean over the attention set `S_i`.
    LocalMeanField,
}

/// Conjecture assignment for the whole population.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConjectureClass {
    Homogeneous(Conjecture),
    PerAgent(Vec<Conjecture>),
}

impl From<Conjecture> for ConjectureClass {
    fn from(c: Conjecture) -> Self {
        ConjectureClass::Homogeneous(c)
    }
}

impl ConjectureClass {
    pub fn of(&self, agent: usize) -> Conjecture {
        match self {
            ConjectureClass::Homogeneous(c) => *c,
            ConjectureClass::PerAgent(v) => v[agent],
        }
    }

    /// The shared class when every agent uses the same one.
    pub fn uniform(&self) -> Option<Conjecture> {
        match self {
            ConjectureClass::Homogeneous(c) => Some(*c),
            ConjectureClass::PerAgent(v) => {
                let first = *v.first()?;
                v.iter().all(|&c| c == first).then_some(first)
            }
        }
    }

    pub fn uses(&self, kind: Conjecture) -> bool {
        match self {
            ConjectureClass::Homogeneous(c) => *c == kind,
            ConjectureClass::PerAgent(v) => v.contains(&kind),
        }
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        match self {
            ConjectureClass::PerAgent(v) if v.len() != n => Err(Error::InvalidParams(format!(
                "conjecture list has {} entries, expected {n}",
                v.len()
            ))),
            _ => Ok(()),
        }
    }
}

/// Per-agent attention sets `S_i`, zero-based neighbor indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttentionStructure {
    subsets: Vec<Vec<usize>>,
}

impl AttentionStructure {
    pub fn new(subsets: Vec<Vec<usize>>) -> Self {
        Self { subsets }
    }

    /// `S_i = V_i` for every agent.
    pub fn full(game: &NetworkGame) -> Self {
        Self::new((0..game.n()).map(|i| game.neighbors(i).collect()).collect())
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    pub fn subset(&self, agent: usize) -> &[usize] {
        &self.subsets[agent]
    }

    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    /// Checks `S_i ⊆ V_i`, `i ∉ S_i`, no duplicates, and nonempty sets for
    /// local mean-field agents.
    pub fn validate_for(&self, game: &NetworkGame, class: &ConjectureClass) -> Result<()> {
        let n = game.n();
        if self.subsets.len() != n {
            return Err(Error::InvalidAttention(format!("{} subsets for {n} agents", self.subsets.len())));
        }
        for (i, s) in self.subsets.iter().enumerate() {
            let mut seen = vec![false; n];
            for &j in s {
                if j >= n {
                    return Err(Error::InvalidAttention(format!("agent {i} attends to out-of-range index {j}")));
                }
                if j == i {
                    return Err(Error::InvalidAttention(format!("agent {i} attends to itself")));
                }
                if game.g()[(i, j)] == 0.0 {
                    return Err(Error::InvalidAttention(format!("agent {i} attends to {j}, which is not a neighbor")));
                }
                if std::mem::replace(&mut seen[j], true) {
                    return Err(Error::InvalidAttention(format!("agent {i} lists {j} twice")));
                }
            }
            if s.is_empty() && class.of(i) == Conjecture::LocalMeanField {
                return Err(Error::EmptyAttention { agent: i });
            }
        }
        Ok(())
    }

    /// Share of each agent's absolute interaction weight covered by `S_i`.
    pub fn coverage(&self, game: &NetworkGame) -> Vec<f64> {
        (0..game.n())
            .map(|i| {
                let row = game.g().row(i);
                let total: f64 = row.iter().map(|v| v.abs()).sum();
                let covered: f64 = self.subsets[i].iter().map(|&j| row[j].abs()).sum();
                if total > 0.0 {
                    covered / total
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Sparsified interaction matrix with every agent on a local mean-field
/// conjecture: `g~_ij = g_ij / |S_i|` for `j ∈ S_i`, zero otherwise.
pub fn sparsify(game: &NetworkGame, attention: &AttentionStructure) -> Result<Matrix> {
    sparsify_for(game, attention, &ConjectureClass::Homogeneous(Conjecture::LocalMeanField))
}

/// Like [`sparsify`], but rows of agents not using a local mean-field
/// conjecture are copied from `G` unchanged.
pub fn sparsify_for(game: &NetworkGame, attention: &AttentionStructure, class: &ConjectureClass) -> Result<Matrix> {
    class.check_len(game.n())?;
    attention.validate_for(game, class)?;
    let n = game.n();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        if class.of(i) != Conjecture::LocalMeanField {
            out.row_mut(i).copy_from_slice(game.g().row(i));
            continue;
        }
        let s = attention.subset(i);
        let w = 1.0 / s.len() as f64;
        for &j in s {
            out[(i, j)] = w * game.g()[(i, j)];
        }
    }
    Ok(out)
}

/// Stability diagnostics for a game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub r_min: f64,
    pub rho_g: f64,
    pub rho_r_inv_g: f64,
    /// `rho(G) < r_min`.
    pub stable: bool,
    /// `rho(R^{-1} G~)`, present when attention was supplied.
    pub rho_r_inv_g_tilde: Option<f64>,
}

impl ValidationReport {
    /// Whether the local mean-field learning hypothesis `rho(R^{-1} G~) < 1` holds.
    pub fn lmf_contractive(&self) -> Option<bool> {
        self.rho_r_inv_g_tilde.map(|rho| rho < 1.0)
    }
}

/// Reports stability margins without rejecting unstable games.
pub fn validate(game: &NetworkGame, attention: Option<&AttentionStructure>) -> Result<ValidationReport> {
    let r_min = game.r_min();
    let rho_g = spectral_radius(game.g(), SPECTRAL_TOL)?;
    let rho_r_inv_g = spectral_radius(&game.r_inv_times(game.g()), SPECTRAL_TOL)?;
    let rho_r_inv_g_tilde = match attention {
        Some(att) => {
            let gt = sparsify(game, att)?;
            Some(spectral_radius(&game.r_inv_times(&gt), SPECTRAL_TOL)?)
        }
        None => None,
    };
    Ok(ValidationReport { r_min, rho_g, rho_r_inv_g, stable: rho_g < r_min, rho_r_inv_g_tilde })
}
