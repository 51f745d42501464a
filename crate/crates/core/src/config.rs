//! JSON scenario configuration.
//!
//! One document with sections `game`, `attention`, `conjecture`, `learning`,
//! `designer` and `simulation`. Model parameters have no defaults; numerical
//! settings do.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learning::{RunConfig, StepSchedule};
use crate::model::{AttentionStructure, Conjecture, ConjectureClass, NetworkGame};
use crate::scenario::Scenario;
use crate::timescale::{TwoScaleConfig, CROSSING_EPS};
use crate::trace::Decimation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub game: NetworkGame,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attention: Option<AttentionStructure>,
    pub conjecture: ConjectureClass,
    #[serde(default)]
    pub learning: LearningSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub designer: Option<DesignerSection>,
    #[serde(default)]
    pub simulation: SimulationSection,
}

/// Agents' step schedule `alpha_k = a / (k + k0)` and stopping rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningSection {
    pub a: f64,
    pub k0: f64,
    pub tol: f64,
    pub window: usize,
    pub max_steps: usize,
}

impl Default for LearningSection {
    fn default() -> Self {
        let run = RunConfig::default();
        Self { a: run.schedule.a, k0: run.schedule.k0, tol: run.tol, window: run.window, max_steps: run.max_steps }
    }
}

/// Distortion budget, cost weights and the designer's step schedule
/// `beta_k = b_hat / (k + k1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignerSection {
    pub budget: f64,
    /// Weights on squared mean distortions (the diagonal of `A`).
    pub alpha: Vec<f64>,
    /// Weights on distortion variances; unused at the optimum, where they are zero.
    pub beta: Vec<f64>,
    #[serde(default = "default_b_hat")]
    pub b_hat: f64,
    #[serde(default = "default_k1")]
    pub k1: f64,
}

fn default_b_hat() -> f64 {
    0.05
}

fn default_k1() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    /// Seed of the first run; batch runs use `seed, seed + 1, ...`.
    pub seed: u64,
    pub seeds: usize,
    pub inner_steps: usize,
    /// Outer steps of the two-time-scale run.
    pub total_steps: usize,
    pub crossing_eps: f64,
    pub decimation: Decimation,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            seed: 0,
            seeds: 1,
            inner_steps: 1,
            total_steps: 20_000,
            crossing_eps: CROSSING_EPS,
            decimation: Decimation::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Config for a generated scenario: local mean-field agents, unit
    /// distortion weights and the given designer budget and schedule.
    pub fn from_scenario(sc: &Scenario, budget: f64, b_hat: f64, k1: f64) -> Self {
        let n = sc.game.n();
        ScenarioConfig {
            game: sc.game.clone(),
            attention: Some(sc.attention.clone()),
            conjecture: Conjecture::LocalMeanField.into(),
            learning: LearningSection::default(),
            designer: Some(DesignerSection { budget, alpha: vec![1.0; n], beta: vec![1.0; n], b_hat, k1 }),
            simulation: SimulationSection::default(),
        }
    }

    pub fn n(&self) -> usize {
        self.game.n()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        self.conjecture.check_len(n)?;
        match &self.attention {
            Some(att) => att.validate_for(&self.game, &self.conjecture)?,
            None if self.conjecture.uses(Conjecture::LocalMeanField) => {
                return Err(Error::Config("local mean-field conjectures need an `attention` section".into()));
            }
            None => {}
        }
        self.learning.schedule().check()?;
        if !(self.learning.tol > 0.0) || self.learning.window == 0 || self.learning.max_steps == 0 {
            return Err(Error::Config("learning: tol, window and max_steps must be positive".into()));
        }
        if let Some(d) = &self.designer {
            if !(d.budget >= 0.0 && d.budget.is_finite()) {
                return Err(Error::Config(format!("designer.budget must be a finite number >= 0, got {}", d.budget)));
            }
            for (name, w) in [("alpha", &d.alpha), ("beta", &d.beta)] {
                if w.len() != n {
                    return Err(Error::Config(format!("designer.{name} has {} entries, expected {n}", w.len())));
                }
                if let Some(i) = w.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
                    return Err(Error::Config(format!("designer.{name}[{i}] must be positive, got {}", w[i])));
                }
            }
            StepSchedule { a: d.b_hat, k0: d.k1 }.check()?;
        }
        let s = &self.simulation;
        if s.seeds == 0 || s.inner_steps == 0 || !(s.crossing_eps > 0.0) || s.decimation.every == 0 {
            return Err(Error::Config(
                "simulation: seeds, inner_steps, decimation.every and crossing_eps must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn designer(&self) -> Result<&DesignerSection> {
        self.designer.as_ref().ok_or_else(|| Error::Config("missing `designer` section".into()))
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            schedule: self.learning.schedule(),
            max_steps: self.learning.max_steps,
            tol: self.learning.tol,
            window: self.learning.window,
            decimation: self.simulation.decimation,
            x0: None,
            theta0: None,
        }
    }

    pub fn two_scale_config(&self) -> Result<TwoScaleConfig> {
        let d = self.designer()?;
        let cfg = TwoScaleConfig {
            fast: self.learning.schedule(),
            slow: StepSchedule { a: d.b_hat, k0: d.k1 },
            budget: d.budget,
            a_weights: Some(d.alpha.clone()),
            inner_steps: self.simulation.inner_steps,
            total_steps: self.simulation.total_steps,
            decimation: self.simulation.decimation,
            delta0: None,
            x0: None,
            theta0: None,
            crossing_eps: self.simulation.crossing_eps,
        };
        cfg.check()?;
        Ok(cfg)
    }

    /// Seeds of a batch of `count` runs.
    pub fn seeds(&self, count: usize) -> Vec<u64> {
        (0..count as u64).map(|i| self.simulation.seed.wrapping_add(i)).collect()
    }
}

impl LearningSection {
    pub fn schedule(&self) -> StepSchedule {
        StepSchedule { a: self.a, k0: self.k0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::generate_scenario;

    const PAIR: &str = r#"{
        "game": {"g": [[0, 0.5], [0.5, 0]], "r": [1, 1], "b": [1, 1], "sigma": [0, 0]},
        "attention": [[1], [0]],
        "conjecture": "local_mean_field",
        "designer": {"budget": 0.08, "alpha": [1, 1], "beta": [1, 1]}
    }"#;

    #[test]
    fn minimal_config_gets_numerical_defaults() {
        let cfg = ScenarioConfig::from_json(PAIR).unwrap();
        assert_eq!(cfg.n(), 2);
        assert_eq!(cfg.run_config(), RunConfig::default());
        let ts = cfg.two_scale_config().unwrap();
        assert_eq!(ts.slow, StepSchedule { a: 0.05, k0: 10.0 });
        assert_eq!(ts.budget, 0.08);
        assert_eq!(cfg.seeds(3), vec![0, 1, 2]);
    }

    #[test]
    fn missing_model_field_is_named() {
        let text = PAIR.replace(r#""r": [1, 1], "#, "");
        let err = ScenarioConfig::from_json(&text).unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("`r`"), "{err}");
        let text = PAIR.replace(r#""budget": 0.08, "#, "");
        assert!(ScenarioConfig::from_json(&text).unwrap_err().to_string().contains("`budget`"));
    }

    #[test]
    fn rejects_bad_values() {
        for (from, to) in [
            (r#""r": [1, 1]"#, r#""r": [1, -1]"#),
            (r#""attention": [[1], [0]]"#, r#""attention": [[1], []]"#),
            (r#""alpha": [1, 1]"#, r#""alpha": [1, 0]"#),
            (r#""budget": 0.08"#, r#""budget": -1"#),
            (r#""conjecture": "local_mean_field""#, r#""conjecture": "aggregate""#),
            (r#""conjecture": "local_mean_field""#, r#""conjecture": "local_mean_field", "extra": 1"#),
        ] {
            let text = PAIR.replace(from, to);
            assert_ne!(text, PAIR);
            let err = ScenarioConfig::from_json(&text).unwrap_err();
            assert!(err.is_validation(), "{to}: {err}");
        }
        let no_att = PAIR.replace(r#""attention": [[1], [0]],"#, "");
        assert!(ScenarioConfig::from_json(&no_att).is_err());
        let constant = no_att.replace("local_mean_field", "constant");
        assert!(ScenarioConfig::from_json(&constant).is_ok());
    }

    #[test]
    fn per_agent_conjectures() {
        let text = PAIR.replace(r#""local_mean_field""#, r#"["local_mean_field", "constant"]"#);
        let cfg = ScenarioConfig::from_json(&text).unwrap();
        assert_eq!(cfg.conjecture.of(1), Conjecture::Constant);
    }

    #[test]
    fn round_trip() {
        let sc = generate_scenario(6, 2, 0.4, 1).unwrap();
        let cfg = ScenarioConfig::from_scenario(&sc, 0.5, 0.1, 100.0);
        let text = cfg.to_json();
        let back = ScenarioConfig::from_json(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_json(), text);
    }
}
