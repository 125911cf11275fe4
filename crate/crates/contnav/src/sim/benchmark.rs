//! A generated benchmark: the ordered collection of scene domains.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sim::{Episode, Flavor, Scene, SceneDomain};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Benchmark<S: Scalar> {
    pub flavor: Flavor,
    pub domains: Vec<SceneDomain<S>>,
}

impl<S: Scalar> Benchmark<S> {
    pub fn domain(&self, domain_id: u32) -> Result<&SceneDomain<S>> {
        self.domains
            .iter()
            .find(|d| d.domain_id == domain_id)
            .ok_or_else(|| Error::Config(format!("unknown domain {domain_id}")))
    }

    /// Resolve an episode reference to the episode and its scene.
    pub fn lookup(&self, domain_id: u32, episode_id: u32) -> Result<(&Scene<S>, &Episode)> {
        let domain = self.domain(domain_id)?;
        let episode = domain.episode(episode_id).ok_or_else(|| {
            Error::Config(format!("unknown episode {episode_id} in domain {domain_id}"))
        })?;
        Ok((domain.scene(episode.scene_id)?, episode))
    }
}
