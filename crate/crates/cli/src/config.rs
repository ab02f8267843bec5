//! Experiment configuration files.

use std::path::{Path, PathBuf};

use bidguard_core::adversary::{build_collusion_ring, AttackStrategy, Objective};
use bidguard_core::harness::ComparisonMode;
use bidguard_core::instance::{BidMatrix, ConferenceInstance};
use bidguard_core::rng::derive_seed;
use bidguard_core::{validate_instance, AttackScenario, DefensePolicy, SimilarityConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io::{self, Provenance};
use crate::synth::{generate_instance, SyntheticSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSource {
    /// Instance directory, relative to the config file.
    Path(PathBuf),
    Synthetic(SyntheticSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Solve,
    Attack,
    Incentive,
    RdVsPlra,
    QSweep,
    Scorecard,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Solve => "solve",
            Experiment::Attack => "attack",
            Experiment::Incentive => "incentive",
            Experiment::RdVsPlra => "rd_vs_plra",
            Experiment::QSweep => "q_sweep",
            Experiment::Scorecard => "scorecard",
        }
    }
}

/// An attack scenario with a name for reports. Reviewers and papers are
/// 0-based indices. Collusion rings may omit `targets`; they are then
/// derived from authorship.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSpec {
    pub name: String,
    pub attackers: Vec<usize>,
    #[serde(default)]
    pub targets: Vec<usize>,
    pub strategy: AttackStrategy,
    #[serde(default)]
    pub objective: Objective,
}

impl AttackSpec {
    pub fn scenario(&self, instance: &ConferenceInstance) -> Result<AttackScenario> {
        let scenario = match self.strategy {
            AttackStrategy::CollusionRing { cycle_length } if self.targets.is_empty() => {
                let mut ring = build_collusion_ring(instance, &self.attackers, cycle_length)?;
                ring.objective = self.objective;
                ring
            }
            strategy => AttackScenario {
                attackers: self.attackers.clone(),
                targets: self.targets.clone(),
                strategy,
                objective: self.objective,
            },
        };
        scenario.validate(instance)?;
        Ok(scenario)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RdVsPlraSpec {
    pub q: f64,
    #[serde(default = "exhaustive")]
    pub mode: ComparisonMode,
}

fn exhaustive() -> ComparisonMode {
    ComparisonMode::Exhaustive
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub qs: Vec<f64>,
}

fn default_trials() -> usize {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Experiments run by the `run` command, in this order.
    #[serde(default)]
    pub experiments: Vec<Experiment>,
    /// Where reports go; the command line may override it. Not part of the
    /// config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub instance: InstanceSource,
    #[serde(default)]
    pub similarity: SimilarityConfig,
    #[serde(default)]
    pub defenses: Vec<DefensePolicy>,
    #[serde(default)]
    pub attacks: Vec<AttackSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rd_vs_plra: Option<RdVsPlraSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_sweep: Option<SweepSpec>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a config file. A relative instance path is taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut config = Self::parse(&io::read_file(path)?)?;
        if let InstanceSource::Path(p) = &mut config.instance {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(config)
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(trials) = overrides.trials {
            self.trials = trials;
        }
        if let Some(dir) = &overrides.output_dir {
            self.output_dir = Some(dir.clone());
        }
    }

    /// Checks everything that can be checked without the instance.
    pub fn validate(&self) -> Result<()> {
        if self.seed == 0 || self.seed > i64::MAX as u64 {
            return Err(CliError::Config(format!("seed must be in 1..={}", i64::MAX)));
        }
        if self.trials == 0 {
            return Err(CliError::Config("trials must be positive".into()));
        }
        self.similarity.validate()?;
        for policy in &self.defenses {
            policy.validate()?;
        }
        let mut names = std::collections::BTreeSet::new();
        for attack in &self.attacks {
            if !names.insert(&attack.name) {
                return Err(CliError::Config(format!("attack name `{}` repeats", attack.name)));
            }
        }
        let mut labels = std::collections::BTreeSet::new();
        for policy in &self.defenses {
            if !labels.insert(policy.label()) {
                return Err(CliError::Config(format!("defense `{}` is listed twice", policy.label())));
            }
        }
        match &self.instance {
            InstanceSource::Path(p) if !p.join(io::INSTANCE_FILE).is_file() => {
                return Err(CliError::Config(format!(
                    "instance directory {} has no {}",
                    p.display(),
                    io::INSTANCE_FILE
                )));
            }
            InstanceSource::Synthetic(spec) => spec.validate()?,
            _ => {}
        }
        if let Some(rd) = &self.rd_vs_plra {
            if !(rd.q > 0.0 && rd.q <= 1.0) {
                return Err(CliError::Config(format!("rd_vs_plra.q = {} is outside (0, 1]", rd.q)));
            }
            if let ComparisonMode::MonteCarlo { trials: 0 } = rd.mode {
                return Err(CliError::Config("rd_vs_plra trials must be positive".into()));
            }
        }
        if let Some(sweep) = &self.q_sweep {
            if let Some(q) = sweep.qs.iter().find(|q| !(0.0..=1.0).contains(*q)) {
                return Err(CliError::Config(format!("q_sweep value {q} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialization, without the output directory.
    pub fn hash(&self) -> String {
        let canonical = ExperimentConfig {
            output_dir: None,
            ..self.clone()
        };
        let text = toml::to_string(&canonical).expect("configs serialize");
        Provenance::hash_text(&text)
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            config_hash: self.hash(),
            seed: self.seed,
        }
    }

    /// The synthetic spec with its seed filled in from the root seed if absent.
    pub fn resolved_spec(&self) -> Option<SyntheticSpec> {
        match &self.instance {
            InstanceSource::Synthetic(spec) => Some(SyntheticSpec {
                seed: Some(spec.seed.unwrap_or_else(|| derive_seed(self.seed, "instance"))),
                ..spec.clone()
            }),
            InstanceSource::Path(_) => None,
        }
    }

    /// Loads or generates the instance and honest bids, and checks the
    /// instance. A loaded instance without a bids file has no bids.
    pub fn materialize(&self) -> Result<(ConferenceInstance, BidMatrix)> {
        let (instance, bids) = match &self.instance {
            InstanceSource::Path(dir) => {
                let (instance, bids) = io::load_instance_with_bids(dir)?;
                let (m, n) = instance.dim();
                (instance, bids.unwrap_or_else(|| BidMatrix::empty(m, n)))
            }
            InstanceSource::Synthetic(_) => generate_instance(&self.resolved_spec().expect("synthetic source"))?,
        };
        let report = validate_instance(&instance);
        if !report.is_ok() {
            return Err(CliError::InvalidInstance(report.to_string()));
        }
        Ok((instance, bids))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 3
experiments = ["solve", "attack"]

[instance.synthetic]
n_reviewers = 8
n_papers = 6
paper_load = 2

[[defenses]]
kind = "standard"

[[defenses]]
kind = "plra"
q = 0.5

[[attacks]]
name = "naive"
attackers = [0]
targets = [1]
strategy = { kind = "naive" }
"#;

    #[test]
    fn parses_and_round_trips() {
        let config = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(config.trials, 1000);
        assert_eq!(config.defenses.len(), 2);
        config.validate().unwrap();
        let again = ExperimentConfig::parse(&toml::to_string(&config).unwrap()).unwrap();
        assert_eq!(again, config);
    }

    #[test]
    fn unknown_defense_is_a_config_error() {
        let text = MINIMAL.replace("kind = \"standard\"", "kind = \"magic\"");
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn hash_ignores_output_dir_but_not_seed() {
        let a = ExperimentConfig::parse(MINIMAL).unwrap();
        let mut b = a.clone();
        b.apply(&Overrides {
            output_dir: Some("elsewhere".into()),
            ..Default::default()
        });
        assert_eq!(a.hash(), b.hash());
        b.apply(&Overrides {
            seed: Some(4),
            ..Default::default()
        });
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn zero_seed_and_trials_are_rejected() {
        let mut c = ExperimentConfig::parse(MINIMAL).unwrap();
        c.seed = 0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::parse(MINIMAL).unwrap();
        c.trials = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn synthetic_seed_derives_from_root() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        let spec = c.resolved_spec().unwrap();
        assert_eq!(spec.seed, Some(derive_seed(3, "instance")));
    }
}
