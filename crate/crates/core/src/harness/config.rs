//! Scenario configuration: a flat TOML key-value file plus CLI overrides.
//!
//! ```toml
//! scenario = "fixed_povm_lhv"   # projective_choice | fixed_povm | fixed_povm_lhv | advance_announced
//! state = "singlet"             # singlet | maximally_mixed | product_00
//! quartet = "optimal"           # or four in-plane angles in degrees: [A, a, B, b]
//! mixing_weight = 0.5           # in (0, 1)
//! trials = 100000               # 0 = analytic only
//! seed = 42
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurements::{optimal_quartet, SettingsQuartet, OPTIMAL_ANGLES};
use crate::quantum_core::{maximally_mixed, product_00, singlet, DensityOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    ProjectiveChoice,
    FixedPovm,
    FixedPovmLhv,
    AdvanceAnnounced,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::ProjectiveChoice,
        Scenario::FixedPovm,
        Scenario::FixedPovmLhv,
        Scenario::AdvanceAnnounced,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::ProjectiveChoice => "projective_choice",
            Scenario::FixedPovm => "fixed_povm",
            Scenario::FixedPovmLhv => "fixed_povm_lhv",
            Scenario::AdvanceAnnounced => "advance_announced",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Scenario::ProjectiveChoice => {
                "projective measurements, one of two settings chosen per trial at each station"
            }
            Scenario::FixedPovm => {
                "one fixed four-outcome POVM per particle, no setting choices; quantum statistics"
            }
            Scenario::FixedPovmLhv => {
                "fixed POVMs with outcomes supplied by a local instruction-set model"
            }
            Scenario::AdvanceAnnounced => {
                "projective settings announced before production; source-side local model"
            }
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                Error::config(
                    "scenario",
                    format!(
                        "unknown scenario `{s}` (expected one of: {})",
                        Scenario::ALL.map(Scenario::name).join(", ")
                    ),
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateChoice {
    #[serde(rename = "singlet")]
    Singlet,
    #[serde(rename = "maximally_mixed")]
    MaximallyMixed,
    #[serde(rename = "product_00")]
    Product00,
}

impl StateChoice {
    pub fn density(self) -> DensityOperator {
        match self {
            StateChoice::Singlet => singlet(),
            StateChoice::MaximallyMixed => maximally_mixed(),
            StateChoice::Product00 => product_00(),
        }
    }
}

/// `"optimal"` or four in-plane angles in degrees ordered `A, a, B, b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QuartetSpec {
    Named(NamedQuartet),
    Angles([f64; 4]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedQuartet {
    Optimal,
}

impl QuartetSpec {
    pub fn angles(&self) -> [f64; 4] {
        match self {
            QuartetSpec::Named(NamedQuartet::Optimal) => OPTIMAL_ANGLES,
            QuartetSpec::Angles(a) => *a,
        }
    }

    pub fn resolve(&self) -> Result<SettingsQuartet> {
        match self {
            QuartetSpec::Named(NamedQuartet::Optimal) => Ok(optimal_quartet()),
            QuartetSpec::Angles(a) => SettingsQuartet::from_angles(*a)
                .map_err(|e| Error::config("quartet", e.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub state: StateChoice,
    pub quartet: QuartetSpec,
    pub mixing_weight: f64,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Default)]
struct ConfigFile {
    scenario: Option<String>,
    state: Option<StateChoice>,
    quartet: Option<QuartetSpec>,
    mixing_weight: Option<f64>,
    trials: Option<i64>,
    seed: Option<u64>,
}

const KEYS: [&str; 6] = ["scenario", "state", "quartet", "mixing_weight", "trials", "seed"];

fn take<T: serde::de::DeserializeOwned>(table: &toml::Table, key: &str) -> Result<Option<T>> {
    table
        .get(key)
        .map(|v| {
            v.clone()
                .try_into::<T>()
                .map_err(|e| Error::config(key, e.message().trim().to_string()))
        })
        .transpose()
}

impl ConfigFile {
    fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<file>", e.message().trim().to_string()))?;
        if let Some(unknown) = table.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::config(
                unknown,
                format!("unknown key (expected one of: {})", KEYS.join(", ")),
            ));
        }
        Ok(ConfigFile {
            scenario: take(&table, "scenario")?,
            state: take(&table, "state")?,
            quartet: take(&table, "quartet")?,
            mixing_weight: take(&table, "mixing_weight")?,
            trials: take(&table, "trials")?,
            seed: take(&table, "seed")?,
        })
    }
}

/// Values given on the command line; each one replaces the file's.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub scenario: Option<String>,
    pub trials: Option<i64>,
    pub seed: Option<u64>,
}

impl ScenarioConfig {
    pub const DEFAULT_WEIGHT: f64 = 0.5;

    pub fn new(scenario: Scenario) -> Self {
        ScenarioConfig {
            scenario,
            state: StateChoice::Singlet,
            quartet: QuartetSpec::Named(NamedQuartet::Optimal),
            mixing_weight: Self::DEFAULT_WEIGHT,
            trials: 0,
            seed: 0,
        }
    }

    pub fn from_toml_str(text: &str, overrides: &Overrides) -> Result<Self> {
        let file = ConfigFile::parse(text)?;
        Self::assemble(file, overrides)
    }

    pub fn from_file(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config("--config", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text, overrides)
    }

    fn assemble(file: ConfigFile, overrides: &Overrides) -> Result<Self> {
        let scenario_name = overrides
            .scenario
            .clone()
            .or(file.scenario)
            .ok_or_else(|| Error::config("scenario", "missing (set it in the file or pass --scenario)"))?;
        let mut cfg = ScenarioConfig::new(scenario_name.parse()?);
        if let Some(state) = file.state {
            cfg.state = state;
        }
        if let Some(q) = file.quartet {
            cfg.quartet = q;
        }
        if let Some(w) = file.mixing_weight {
            cfg.mixing_weight = w;
        }
        if let Some(t) = overrides.trials.or(file.trials) {
            if t < 0 {
                return Err(Error::config("trials", format!("must be >= 0, got {t}")));
            }
            cfg.trials = t as u64;
        }
        if let Some(s) = overrides.seed.or(file.seed) {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mixing_weight > 0.0 && self.mixing_weight < 1.0) {
            return Err(Error::config(
                "mixing_weight",
                format!("must lie in (0, 1), got {}", self.mixing_weight),
            ));
        }
        if let QuartetSpec::Angles(a) = self.quartet {
            if let Some(bad) = a.iter().find(|x| !x.is_finite()) {
                return Err(Error::config("quartet", format!("non-finite angle {bad}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScenarioConfig> {
        ScenarioConfig::from_toml_str(text, &Overrides::default())
    }

    #[test]
    fn full_file_parses() {
        let cfg = parse(
            r#"
            scenario = "fixed_povm"
            state = "product_00"
            quartet = [0, 90, 135.5, 45]
            mixing_weight = 0.25
            trials = 1000
            seed = 7
            "#,
        )
        .unwrap();
        assert_eq!(cfg.scenario, Scenario::FixedPovm);
        assert_eq!(cfg.state, StateChoice::Product00);
        assert_eq!(cfg.quartet, QuartetSpec::Angles([0.0, 90.0, 135.5, 45.0]));
        assert_eq!(cfg.mixing_weight, 0.25);
        assert_eq!((cfg.trials, cfg.seed), (1000, 7));
    }

    #[test]
    fn defaults_fill_missing_keys() {
        let cfg = parse(r#"scenario = "advance_announced""#).unwrap();
        assert_eq!(cfg, ScenarioConfig::new(Scenario::AdvanceAnnounced));
        assert_eq!(cfg.quartet.angles(), OPTIMAL_ANGLES);
    }

    #[test]
    fn cli_flags_win() {
        let o = Overrides {
            scenario: Some("projective_choice".into()),
            trials: Some(5),
            seed: Some(99),
        };
        let cfg = ScenarioConfig::from_toml_str(
            "scenario = \"fixed_povm\"\ntrials = 10\nseed = 1\n",
            &o,
        )
        .unwrap();
        assert_eq!(cfg.scenario, Scenario::ProjectiveChoice);
        assert_eq!((cfg.trials, cfg.seed), (5, 99));
        // scenario may come from the command line alone
        assert!(ScenarioConfig::from_toml_str("", &o).is_ok());
    }

    fn field_of(err: Error) -> String {
        match err {
            Error::Config { field, .. } => field,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn field_level_errors() {
        assert_eq!(field_of(parse("").unwrap_err()), "scenario");
        assert_eq!(field_of(parse(r#"scenario = "bogus""#).unwrap_err()), "scenario");
        assert_eq!(
            field_of(parse("scenario = \"fixed_povm\"\nmixing_weight = 1.0").unwrap_err()),
            "mixing_weight"
        );
        assert_eq!(
            field_of(parse("scenario = \"fixed_povm\"\nmixing_weight = 0").unwrap_err()),
            "mixing_weight"
        );
        assert_eq!(
            field_of(parse("scenario = \"fixed_povm\"\ntrials = -3").unwrap_err()),
            "trials"
        );
        assert_eq!(
            field_of(parse("scenario = \"fixed_povm\"\nquartet = [0, nan, 1, 2]").unwrap_err()),
            "quartet"
        );
        assert_eq!(
            field_of(parse("scenario = \"fixed_povm\"\nquartet = \"best\"").unwrap_err()),
            "quartet"
        );
        assert_eq!(
            field_of(parse("scenario = \"fixed_povm\"\nstate = \"ghz\"").unwrap_err()),
            "state"
        );
        assert_eq!(
            field_of(parse("scenario = \"fixed_povm\"\ncolour = 3").unwrap_err()),
            "colour"
        );
        assert_eq!(field_of(parse("scenario = ").unwrap_err()), "<file>");
    }
}
