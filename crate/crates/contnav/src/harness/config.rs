//! Declarative experiment configuration.
//!
//! One TOML file describes a whole experiment: benchmark generation,
//! policy dimensions, training hyperparameters and the strategy grid.
//! Unknown keys are rejected. The benchmark hash — embedded in every
//! output file — covers everything that defines the benchmark and the
//! training procedure, but not run-level strategy variations (strategy
//! kind, memory capacity, ablation flags): those vary within one
//! experiment and are recorded per run instead.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::policy::{AdamHyper, PolicyShape};
use crate::sim::{vocab, Flavor, GenParams};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerationSection {
    pub num_domains: usize,
    pub num_scenes: usize,
    pub nodes_per_scene: usize,
    pub train_episodes: usize,
    pub val_episodes: usize,
    pub feature_dim: usize,
    pub square_side: f64,
    pub connect_radius: f64,
    pub max_degree: usize,
    pub min_path_len: usize,
    pub max_path_len: usize,
    pub shift_margin: f64,
    pub landmark_scale: f64,
    pub feature_noise: f64,
}

impl Default for GenerationSection {
    fn default() -> Self {
        let g = GenParams::default();
        GenerationSection {
            num_domains: 10,
            num_scenes: g.num_scenes,
            nodes_per_scene: g.nodes_per_scene,
            train_episodes: g.train_episodes,
            val_episodes: g.val_episodes,
            feature_dim: g.feature_dim,
            square_side: g.square_side,
            connect_radius: g.connect_radius,
            max_degree: g.max_degree,
            min_path_len: g.min_path_len,
            max_path_len: g.max_path_len,
            shift_margin: g.shift_margin,
            landmark_scale: g.landmark_scale,
            feature_noise: g.feature_noise,
        }
    }
}

impl GenerationSection {
    pub fn gen_params(&self) -> GenParams {
        GenParams {
            num_scenes: self.num_scenes,
            nodes_per_scene: self.nodes_per_scene,
            train_episodes: self.train_episodes,
            val_episodes: self.val_episodes,
            feature_dim: self.feature_dim,
            square_side: self.square_side,
            connect_radius: self.connect_radius,
            max_degree: self.max_degree,
            min_path_len: self.min_path_len,
            max_path_len: self.max_path_len,
            shift_margin: self.shift_margin,
            landmark_scale: self.landmark_scale,
            feature_noise: self.feature_noise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicySection {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub action_dim: usize,
}

impl Default for PolicySection {
    fn default() -> Self {
        PolicySection {
            embed_dim: 16,
            hidden_dim: 32,
            action_dim: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub lr: f64,
    pub epochs_per_domain: usize,
    pub batch_size: usize,
    /// Step cap for greedy evaluation rollouts.
    pub eval_max_steps: usize,
}

impl Default for TrainingSection {
    fn default() -> Self {
        TrainingSection {
            lr: 2e-2,
            epochs_per_domain: 5,
            batch_size: 8,
            eval_max_steps: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    /// Seed for benchmark generation.
    pub bench_seed: u64,
    /// One sequential run per curriculum seed; reports average over them.
    pub curriculum_seeds: Vec<u64>,
    /// Replay-memory capacity for rehearsal strategies.
    pub memory_capacity: usize,
    /// Capacities exercised by the memory-size sweep.
    pub memory_sweep: Vec<usize>,
    /// Strategy keys to run when no explicit strategy is requested.
    pub strategies: Vec<String>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            bench_seed: 7,
            curriculum_seeds: vec![101, 102, 103],
            memory_capacity: 20,
            memory_sweep: vec![10, 20, 40],
            strategies: vec![
                "vanilla".into(),
                "joint".into(),
                "l2".into(),
                "adaptercl".into(),
                "agem".into(),
                "randr".into(),
                "perpr".into(),
                "esr".into(),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrategySection {
    pub lambda_l2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub adapter_rank: usize,
}

impl Default for StrategySection {
    fn default() -> Self {
        StrategySection {
            lambda_l2: 0.1,
            lambda1: 0.2,
            lambda2: 0.2,
            adapter_rank: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub flavor: String,
    pub generation: GenerationSection,
    pub policy: PolicySection,
    pub training: TrainingSection,
    pub experiment: ExperimentSection,
    pub strategies: StrategySection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            flavor: "I".into(),
            generation: GenerationSection::default(),
            policy: PolicySection::default(),
            training: TrainingSection::default(),
            experiment: ExperimentSection::default(),
            strategies: StrategySection::default(),
        }
    }
}

impl ExperimentConfig {
    /// The default benchmark for the given flavor. The dialogue flavor
    /// is smaller: fewer, sparser domains.
    pub fn default_for(flavor: Flavor) -> Self {
        let mut cfg = ExperimentConfig::default();
        if flavor == Flavor::Dialogue {
            cfg.flavor = "D".into();
            cfg.generation.num_domains = 6;
            cfg.generation.train_episodes = 40;
            cfg.generation.val_episodes = 10;
            cfg.experiment.memory_capacity = 8; // ~3% of 240 train episodes
            cfg.experiment.memory_sweep = vec![6, 8, 12];
        }
        cfg
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let cfg: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn flavor(&self) -> Result<Flavor> {
        Flavor::parse(&self.flavor)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "config schema version {} unsupported (expected {})",
                self.schema_version, CONFIG_SCHEMA_VERSION
            )));
        }
        self.flavor()?;
        if self.generation.num_domains == 0 {
            return Err(Error::Config("num_domains must be >= 1".into()));
        }
        if self.experiment.curriculum_seeds.is_empty() {
            return Err(Error::Config("need at least one curriculum seed".into()));
        }
        self.generation.gen_params().validate()?;
        if self.training.epochs_per_domain == 0 || self.training.batch_size == 0 {
            return Err(Error::Config("epochs and batch size must be >= 1".into()));
        }
        Ok(())
    }

    /// Hash over the benchmark-defining parts of the config.
    pub fn benchmark_hash(&self) -> String {
        let hashed = (
            self.schema_version,
            &self.flavor,
            &self.generation,
            &self.policy,
            &self.training,
            self.experiment.bench_seed,
            &self.experiment.curriculum_seeds,
        );
        let bytes = serde_json::to_vec(&hashed).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        hex::encode(&digest[..8])
    }

    /// Landmark tokens owned by each domain.
    pub fn landmarks_per_domain(&self) -> u32 {
        vocab::landmarks_per_domain(self.generation.num_scenes, self.generation.nodes_per_scene)
    }

    pub fn policy_shape(&self) -> PolicyShape {
        PolicyShape {
            vocab: vocab::vocab_size(self.generation.num_domains, self.landmarks_per_domain()),
            embed_dim: self.policy.embed_dim,
            feature_dim: self.generation.feature_dim,
            hidden_dim: self.policy.hidden_dim,
            action_dim: self.policy.action_dim,
            max_degree: self.generation.max_degree,
        }
    }

    pub fn adam_hyper(&self) -> AdamHyper {
        AdamHyper::with_lr(self.training.lr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates_and_round_trips() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "schema_version = 1\nflavor = \"I\"\nnot_a_key = 3\n";
        assert!(toml::from_str::<ExperimentConfig>(text).is_err());
        let nested = "[generation]\nnum_domains = 4\nbogus = true\n";
        assert!(toml::from_str::<ExperimentConfig>(nested).is_err());
    }

    #[test]
    fn hash_tracks_benchmark_but_not_capacity() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.experiment.memory_capacity = 999;
        assert_eq!(a.benchmark_hash(), b.benchmark_hash());
        let mut c = a.clone();
        c.generation.num_domains = 4;
        assert_ne!(a.benchmark_hash(), c.benchmark_hash());
        let mut d = a.clone();
        d.training.lr = 1e-4;
        assert_ne!(a.benchmark_hash(), d.benchmark_hash());
    }

    #[test]
    fn dialogue_default_is_smaller() {
        let d = ExperimentConfig::default_for(Flavor::Dialogue);
        d.validate().unwrap();
        assert_eq!(d.generation.num_domains, 6);
        assert_eq!(d.flavor, "D");
    }
}
