//! Token-id layout for synthetic instructions.
//!
//! The vocabulary is a flat `u32` space: a handful of sentinels, eight
//! compass-direction tokens, then per-domain landmark slices. Domain `d`
//! owns the contiguous slice starting at
//! `LANDMARK_BASE + d * landmarks_per_domain`, so slices of distinct
//! domains never overlap.

pub const BOS: u32 = 0;
pub const EOS: u32 = 1;
pub const TARGET: u32 = 2;
pub const HINT: u32 = 3;

/// First of the eight compass-bucket direction tokens.
pub const DIR_BASE: u32 = 4;
pub const NUM_DIRECTIONS: u32 = 8;

/// First landmark token id.
pub const LANDMARK_BASE: u32 = DIR_BASE + NUM_DIRECTIONS;

/// Landmark tokens owned by one domain (one per node).
pub fn landmarks_per_domain(num_scenes: usize, nodes_per_scene: usize) -> u32 {
    (num_scenes * nodes_per_scene) as u32
}

/// Start of the landmark slice owned by `domain_id`.
pub fn landmark_slice_start(domain_id: u32, per_domain: u32) -> u32 {
    LANDMARK_BASE + domain_id * per_domain
}

/// Total vocabulary size for a benchmark of `num_domains` domains.
pub fn vocab_size(num_domains: usize, per_domain: u32) -> usize {
    LANDMARK_BASE as usize + num_domains * per_domain as usize
}

/// Compass bucket token for the displacement `(dx, dy)`, eight 45-degree
/// sectors centered on the axes (bucket 0 = east, 2 = north, ...).
pub fn direction_token(dx: f64, dy: f64) -> u32 {
    use std::f64::consts::PI;
    let angle = dy.atan2(dx);
    let bucket = ((angle + PI / 8.0).rem_euclid(2.0 * PI) / (PI / 4.0)).floor() as u32;
    DIR_BASE + bucket.min(NUM_DIRECTIONS - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direction_buckets_cover_compass() {
        assert_eq!(direction_token(1.0, 0.0), DIR_BASE); // east
        assert_eq!(direction_token(1.0, 1.0), DIR_BASE + 1); // north-east
        assert_eq!(direction_token(0.0, 1.0), DIR_BASE + 2); // north
        assert_eq!(direction_token(-1.0, 0.0), DIR_BASE + 4); // west
        assert_eq!(direction_token(0.0, -1.0), DIR_BASE + 6); // south
    }

    #[test]
    fn landmark_slices_are_disjoint() {
        let per = landmarks_per_domain(3, 20);
        let a = landmark_slice_start(0, per);
        let b = landmark_slice_start(1, per);
        assert_eq!(b - a, per);
        assert!(a >= LANDMARK_BASE);
    }
}
