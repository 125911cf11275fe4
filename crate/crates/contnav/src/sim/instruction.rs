//! Synthetic instruction synthesis.

use crate::scalar::Scalar;
use crate::sim::scene::Scene;
use crate::sim::vocab::{self, BOS, EOS, HINT, TARGET};
use crate::sim::Flavor;

/// Build the token sequence describing `path` in `scene`.
///
/// Initial-instruction flavor spells out the whole route: the landmark of
/// every path node with a compass token between consecutive nodes.
/// Dialogue flavor under-specifies it: the goal landmark plus hints for
/// only the first half of the route (`ceil(len/2)` nodes).
pub fn make_instruction<S: Scalar>(scene: &Scene<S>, path: &[u32], flavor: Flavor) -> Vec<u32> {
    assert!(!path.is_empty(), "instruction over empty path");
    let lm = |n: u32| scene.landmarks[n as usize];
    let mut tokens = vec![BOS];
    match flavor {
        Flavor::InitialInstruction => {
            for (i, &node) in path.iter().enumerate() {
                tokens.push(lm(node));
                if let Some(&next) = path.get(i + 1) {
                    let a = &scene.positions[node as usize];
                    let b = &scene.positions[next as usize];
                    tokens.push(vocab::direction_token(
                        (b[0] - a[0]).as_f64(),
                        (b[1] - a[1]).as_f64(),
                    ));
                }
            }
        }
        Flavor::Dialogue => {
            tokens.push(TARGET);
            tokens.push(lm(*path.last().expect("nonempty path")));
            tokens.push(HINT);
            let hint_len = path.len().div_ceil(2);
            for &node in &path[..hint_len] {
                tokens.push(lm(node));
            }
        }
    }
    tokens.push(EOS);
    tokens
}
