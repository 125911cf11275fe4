//! Adapter selection by self-assessed difficulty.

use crate::error::{Error, Result};
use crate::policy::{AdapterParams, PolicyParams};
use crate::scalar::Scalar;
use crate::sim::{Episode, Scene};
use crate::strategies::perplexity::action_perplexity;

/// Pick the adapter whose activation yields the lowest action perplexity
/// on the episode; ties go to the lower index. No domain identity is
/// consulted — this is the inference-time selection rule.
pub fn adaptercl_select<S: Scalar>(
    params: &PolicyParams<S>,
    adapters: &[AdapterParams<S>],
    scene: &Scene<S>,
    episode: &Episode,
) -> Result<usize> {
    if adapters.is_empty() {
        return Err(Error::Config("adapter selection over no adapters".into()));
    }
    let mut best = 0usize;
    let mut best_ap = action_perplexity(params, Some(&adapters[0]), scene, episode)?;
    for (i, adapter) in adapters.iter().enumerate().skip(1) {
        let ap = action_perplexity(params, Some(adapter), scene, episode)?;
        if ap < best_ap {
            best = i;
            best_ap = ap;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::PolicyShape;
    use crate::sim::{generate_domain, vocab, Flavor, GenParams};

    #[test]
    fn single_adapter_selects_zero_and_ties_go_low() {
        let gen = GenParams::default();
        let domain = generate_domain::<f64>(0, 3, Flavor::InitialInstruction, &gen).unwrap();
        let shape = PolicyShape {
            vocab: vocab::vocab_size(1, gen.landmarks_per_domain()),
            embed_dim: 6,
            feature_dim: gen.feature_dim,
            hidden_dim: 8,
            action_dim: 4,
            max_degree: gen.max_degree,
        };
        let params = PolicyParams::init(shape, 5);
        let ep = &domain.train_episodes[0];
        let scene = domain.scene(ep.scene_id).unwrap();

        let one = vec![AdapterParams::init(shape.scorer_input_dim(), 4, 5, 0)];
        assert_eq!(adaptercl_select(&params, &one, scene, ep).unwrap(), 0);

        // Identical adapters: perplexities tie, index 0 wins.
        let same = vec![one[0].clone(), one[0].clone(), one[0].clone()];
        assert_eq!(adaptercl_select(&params, &same, scene, ep).unwrap(), 0);
    }
}
