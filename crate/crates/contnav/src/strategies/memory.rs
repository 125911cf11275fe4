//! Fixed-capacity replay memory.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::StoredLogits;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ReplayEntry<S: Scalar> {
    pub domain_id: u32,
    pub episode_id: u32,
    /// Action perplexity at insertion time (perplexity-managed memories).
    pub ap: Option<S>,
    /// Per-step logits recorded at snapshot time (logit-replay memories).
    pub logits: Option<StoredLogits<S>>,
    /// Curriculum position after which the entry was recorded.
    pub recorded_at_domain: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ReplayMemory<S: Scalar> {
    pub capacity: usize,
    pub per_domain_quota: usize,
    pub entries: Vec<ReplayEntry<S>>,
    /// Items seen so far by the reservoir stream.
    pub stream_counter: u64,
}

impl<S: Scalar> ReplayMemory<S> {
    pub fn new(capacity: usize, total_domains: usize) -> Self {
        ReplayMemory {
            capacity,
            per_domain_quota: if total_domains == 0 {
                0
            } else {
                capacity / total_domains
            },
            entries: Vec::new(),
            stream_counter: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Uniform sample of entry indices, with replacement.
    pub fn sample_indices(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        (0..count)
            .map(|_| rng.random_range(0..self.entries.len()))
            .collect()
    }

    /// Perplexity-managed update: insert the per-domain quota of episodes
    /// ranked by action perplexity (highest first; lowest first when
    /// `reverse`), then evict the globally worst-ranked entries until the
    /// memory is back within capacity. Ties prefer the lower episode id.
    pub fn perplexity_update(
        &mut self,
        recorded_at_domain: u32,
        domain_id: u32,
        scored: &[(u32, S)],
        reverse: bool,
    ) -> Result<()> {
        if self.per_domain_quota == 0 {
            return Err(Error::Config(
                "per-domain quota is zero; raise memory capacity".into(),
            ));
        }
        // Keep-preference: better entries sort first.
        let better = |a: &(u32, S), b: &(u32, S)| {
            let ord = if reverse {
                a.1.partial_cmp(&b.1)
            } else {
                b.1.partial_cmp(&a.1)
            };
            ord.expect("finite perplexity").then(a.0.cmp(&b.0))
        };
        let mut ranked = scored.to_vec();
        ranked.sort_by(better);
        for &(episode_id, ap) in ranked.iter().take(self.per_domain_quota) {
            self.entries.push(ReplayEntry {
                domain_id,
                episode_id,
                ap: Some(ap),
                logits: None,
                recorded_at_domain,
            });
        }
        while self.entries.len() > self.capacity {
            // Evict the worst entry under the same preference order.
            let worst = self
                .entries
                .iter()
                .enumerate()
                .max_by(|(_, a), (_, b)| {
                    let ka = (a.episode_id, a.ap.expect("scored entry"));
                    let kb = (b.episode_id, b.ap.expect("scored entry"));
                    // `better` sorts keepers first, so the max under it
                    // is the worst keeper.
                    let ord = better(&ka, &kb);
                    ord.then(a.domain_id.cmp(&b.domain_id))
                })
                .map(|(i, _)| i)
                .expect("nonempty memory");
            self.entries.remove(worst);
        }
        Ok(())
    }

    /// Logit-replay update: append pre-recorded entries for `domain_id`,
    /// then evict uniformly at random among the oldest-domain entries
    /// until within capacity.
    pub fn logit_update(
        &mut self,
        recorded_at_domain: u32,
        domain_id: u32,
        recorded: Vec<(u32, StoredLogits<S>)>,
        rng: &mut ChaCha8Rng,
    ) -> Result<()> {
        if self.per_domain_quota == 0 {
            return Err(Error::Config(
                "per-domain quota is zero; raise memory capacity".into(),
            ));
        }
        for (episode_id, logits) in recorded {
            self.entries.push(ReplayEntry {
                domain_id,
                episode_id,
                ap: None,
                logits: Some(logits),
                recorded_at_domain,
            });
        }
        while self.entries.len() > self.capacity {
            let oldest = self
                .entries
                .iter()
                .map(|e| e.recorded_at_domain)
                .min()
                .expect("nonempty memory");
            let old_indices: Vec<usize> = self
                .entries
                .iter()
                .enumerate()
                .filter(|(_, e)| e.recorded_at_domain == oldest)
                .map(|(i, _)| i)
                .collect();
            let pick = old_indices[rng.random_range(0..old_indices.len())];
            self.entries.remove(pick);
        }
        Ok(())
    }

    /// Classic reservoir sampling: the first `capacity` items are stored;
    /// item `t` then replaces a uniformly random slot with probability
    /// `capacity / t`.
    pub fn reservoir_push(
        &mut self,
        recorded_at_domain: u32,
        domain_id: u32,
        episode_id: u32,
        rng: &mut ChaCha8Rng,
    ) {
        self.stream_counter += 1;
        let entry = ReplayEntry {
            domain_id,
            episode_id,
            ap: None,
            logits: None,
            recorded_at_domain,
        };
        if self.entries.len() < self.capacity {
            self.entries.push(entry);
        } else {
            let j = rng.random_range(0..self.stream_counter);
            if (j as usize) < self.capacity {
                self.entries[j as usize] = entry;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    fn mem(capacity: usize, domains: usize) -> ReplayMemory<f64> {
        ReplayMemory::new(capacity, domains)
    }

    #[test]
    fn perplexity_update_keeps_hardest() {
        // Capacity 2, quota 2, APs {1.2, 3.4, 2.0, 5.0} -> keep 5.0, 3.4.
        let mut m = mem(2, 1);
        m.per_domain_quota = 2;
        m.perplexity_update(0, 0, &[(0, 1.2), (1, 3.4), (2, 2.0), (3, 5.0)], false)
            .unwrap();
        let mut kept: Vec<u32> = m.entries.iter().map(|e| e.episode_id).collect();
        kept.sort();
        assert_eq!(kept, vec![1, 3]);
    }

    #[test]
    fn reversed_update_keeps_easiest() {
        let mut m = mem(2, 1);
        m.per_domain_quota = 2;
        m.perplexity_update(0, 0, &[(0, 1.2), (1, 3.4), (2, 2.0), (3, 5.0)], true)
            .unwrap();
        let mut kept: Vec<u32> = m.entries.iter().map(|e| e.episode_id).collect();
        kept.sort();
        assert_eq!(kept, vec![0, 2]);
    }

    #[test]
    fn equal_scores_keep_lowest_episode_ids() {
        let mut m = mem(2, 1);
        m.per_domain_quota = 2;
        m.perplexity_update(0, 0, &[(7, 2.0), (3, 2.0), (9, 2.0), (5, 2.0)], false)
            .unwrap();
        let mut kept: Vec<u32> = m.entries.iter().map(|e| e.episode_id).collect();
        kept.sort();
        assert_eq!(kept, vec![3, 5]);
    }

    #[test]
    fn eviction_ordering_invariant() {
        // Two domains through a capacity-3 memory: every retained entry's
        // score is >= every evicted one's.
        let mut m = mem(3, 2);
        assert_eq!(m.per_domain_quota, 1);
        m.per_domain_quota = 2;
        m.perplexity_update(0, 0, &[(0, 1.0), (1, 4.0), (2, 2.0)], false)
            .unwrap();
        let before: Vec<(u32, f64)> = m
            .entries
            .iter()
            .map(|e| (e.episode_id, e.ap.unwrap()))
            .collect();
        m.perplexity_update(1, 1, &[(0, 3.0), (1, 0.5), (2, 9.0)], false)
            .unwrap();
        assert_eq!(m.entries.len(), 3);
        let retained_min = m
            .entries
            .iter()
            .map(|e| e.ap.unwrap())
            .fold(f64::INFINITY, f64::min);
        for (id, ap) in before {
            let still_there = m
                .entries
                .iter()
                .any(|e| e.domain_id == 0 && e.episode_id == id);
            if !still_there {
                assert!(ap <= retained_min);
            }
        }
    }

    #[test]
    fn quota_zero_is_configuration_error() {
        let mut m = mem(3, 5); // quota = 0
        assert!(m.perplexity_update(0, 0, &[(0, 1.0)], false).is_err());
    }

    #[test]
    fn reservoir_stores_short_streams_entirely() {
        let mut m = mem(5, 1);
        let mut rng = stream_rng(1, Stream::Reservoir, &[0]);
        for i in 0..4 {
            m.reservoir_push(0, 0, i, &mut rng);
        }
        assert_eq!(m.len(), 4);
        let ids: Vec<u32> = m.entries.iter().map(|e| e.episode_id).collect();
        assert_eq!(ids, vec![0, 1, 2, 3]);
    }

    #[test]
    fn capacity_never_exceeded() {
        let mut m = mem(5, 1);
        let mut rng = stream_rng(2, Stream::Reservoir, &[0]);
        for i in 0..200 {
            m.reservoir_push(0, 0, i, &mut rng);
            assert!(m.len() <= 5);
        }
        assert_eq!(m.stream_counter, 200);
    }

    #[test]
    fn logit_eviction_targets_oldest_domain() {
        let mut m: ReplayMemory<f64> = mem(4, 2);
        m.per_domain_quota = 2;
        let z = |n: usize| StoredLogits {
            steps: vec![
                crate::policy::StoredStep {
                    logits: vec![0.0; 2],
                    action: 1,
                };
                n
            ],
        };
        let mut rng = stream_rng(3, Stream::MemoryUpdate, &[0]);
        m.logit_update(0, 0, vec![(0, z(2)), (1, z(3))], &mut rng)
            .unwrap();
        m.logit_update(1, 1, vec![(0, z(2)), (1, z(2))], &mut rng)
            .unwrap();
        // Still within capacity: nothing evicted yet.
        assert_eq!(m.len(), 4);
        m.logit_update(2, 2, vec![(5, z(1)), (6, z(1))], &mut rng)
            .unwrap();
        assert_eq!(m.len(), 4);
        // The two evictions must have come from the oldest recording.
        let from_first = m.entries.iter().filter(|e| e.recorded_at_domain == 0).count();
        assert_eq!(from_first, 0);
    }
}
