//! The scenario file: a TOML document describing the grid world, the
//! attack, the hyperparameters and the run length. All indices in the
//! file are 1-based.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::recovery::HyperParams;
use crate::scenario::grid::GridScenarioParams;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Side length of the square cell grid (the field has side^2 cells).
    pub side: usize,
    pub agent_rows: usize,
    pub agent_cols: usize,
    /// Measurement window side, in cells; clipped at the grid boundary.
    pub measurement_window: usize,
    /// Interest window side; must be >= the measurement window.
    pub interest_window: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    /// Path to an explicit field CSV (side^2 values, row-major); when
    /// absent the field is generated from the run seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AttackSection {
    /// Number of attacked agents, drawn from the seeded shuffle.
    #[serde(default)]
    pub agents: usize,
    /// Explicit attacked agent ids (1-based); overrides `agents`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids: Option<Vec<usize>>,
    /// Every scalar measurement of an attacked agent is overridden to
    /// this reading.
    #[serde(default = "default_override")]
    pub override_value: f64,
}

fn default_override() -> f64 {
    255.0
}

impl Default for AttackSection {
    fn default() -> Self {
        Self {
            agents: 0,
            ids: None,
            override_value: default_override(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HyperSection {
    pub a: f64,
    pub b: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub gamma: f64,
    pub tau_gamma: f64,
}

impl Default for HyperSection {
    fn default() -> Self {
        let hp = HyperParams::<f64>::defaults();
        Self {
            a: hp.a,
            b: hp.b,
            tau1: hp.tau1,
            tau2: hp.tau2,
            gamma: hp.gamma,
            tau_gamma: hp.tau_gamma,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub iterations: usize,
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            iterations: 200,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid: GridSection,
    #[serde(default)]
    pub field: FieldSection,
    #[serde(default)]
    pub attack: AttackSection,
    #[serde(default)]
    pub hyperparams: HyperSection,
    #[serde(default)]
    pub run: RunSection,
}

impl ScenarioConfig {
    /// A small scenario that runs in seconds: 5x5 agents on a 55-cell
    /// grid with 2 attacked agents.
    pub fn desk_scale() -> Self {
        Self {
            grid: GridSection {
                side: 55,
                agent_rows: 5,
                agent_cols: 5,
                measurement_window: 15,
                interest_window: 25,
            },
            field: FieldSection::default(),
            attack: AttackSection {
                agents: 2,
                ..AttackSection::default()
            },
            hyperparams: HyperSection::default(),
            run: RunSection::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text)
            .map_err(|e| Error::Config(format!("scenario file: {}", e)))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e)))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    fn check(&self) -> Result<()> {
        let g = &self.grid;
        if g.side == 0 || g.agent_rows == 0 || g.agent_cols == 0 {
            return Err(Error::Config("grid dimensions must be positive".into()));
        }
        if g.measurement_window == 0 {
            return Err(Error::Config("measurement window must be positive".into()));
        }
        if g.interest_window < g.measurement_window {
            return Err(Error::Config(format!(
                "interest window {} smaller than measurement window {}",
                g.interest_window, g.measurement_window
            )));
        }
        let n = g.agent_rows * g.agent_cols;
        if let Some(ids) = &self.attack.ids {
            if ids.iter().any(|&id| id == 0 || id > n) {
                return Err(Error::Config(format!(
                    "attacked agent ids must be in 1..={}",
                    n
                )));
            }
        } else if self.attack.agents > n {
            return Err(Error::Config(format!(
                "cannot attack {} of {} agents",
                self.attack.agents, n
            )));
        }
        self.hyperparams()?;
        Ok(())
    }

    pub fn hyperparams(&self) -> Result<HyperParams<f64>> {
        let h = &self.hyperparams;
        HyperParams::new(h.a, h.b, h.tau1, h.tau2, h.gamma, h.tau_gamma)
    }

    /// Resolves the config (plus the field file, if any) into generator
    /// parameters.
    pub fn params(&self, base_dir: &std::path::Path) -> Result<GridScenarioParams<f64>> {
        let field = match &self.field.file {
            None => None,
            Some(rel) => {
                let path = base_dir.join(rel);
                Some(crate::scenario::io::load_field_file(
                    &path,
                    self.grid.side * self.grid.side,
                )?)
            }
        };
        Ok(GridScenarioParams {
            side: self.grid.side,
            agent_rows: self.grid.agent_rows,
            agent_cols: self.grid.agent_cols,
            measurement_window: self.grid.measurement_window,
            interest_window: self.grid.interest_window,
            attacked_count: self.attack.agents,
            attacked_ids: self
                .attack
                .ids
                .as_ref()
                .map(|v| v.iter().map(|&id| id - 1).collect()),
            override_value: self.attack.override_value,
            field,
            seed: self.run.seed,
        })
    }

    /// SHA-256 of the canonical serialized config; binds traces to the
    /// exact configuration and seed.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_toml().as_bytes());
        let out = h.finalize();
        out.iter().map(|b| format!("{:02x}", b)).collect()
    }
}
