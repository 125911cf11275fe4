//! Seeded domain orderings.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::{stream_rng, Stream};
use crate::sim::Flavor;

/// One sequential run's domain order. Domain contents are fixed by the
/// benchmark seed; curricula vary only the order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Curriculum {
    pub seed: u64,
    pub flavor: Flavor,
    /// Complete permutation of the benchmark's domain ids.
    pub domain_order: Vec<u32>,
}

impl Curriculum {
    pub fn new(seed: u64, flavor: Flavor, num_domains: usize) -> Self {
        let mut order: Vec<u32> = (0..num_domains as u32).collect();
        let mut rng = stream_rng(seed, Stream::CurriculumOrder, &[]);
        order.shuffle(&mut rng);
        Curriculum {
            seed,
            flavor,
            domain_order: order,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_a_complete_permutation() {
        let c = Curriculum::new(5, Flavor::InitialInstruction, 10);
        let mut sorted = c.domain_order.clone();
        sorted.sort();
        assert_eq!(sorted, (0..10).collect::<Vec<u32>>());
    }

    #[test]
    fn seeds_give_distinct_orders() {
        let a = Curriculum::new(1, Flavor::InitialInstruction, 10);
        let b = Curriculum::new(2, Flavor::InitialInstruction, 10);
        let a2 = Curriculum::new(1, Flavor::InitialInstruction, 10);
        assert_eq!(a, a2);
        assert_ne!(a.domain_order, b.domain_order);
    }
}
