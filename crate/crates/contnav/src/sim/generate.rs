//! Procedural generation of scene domains.
//!
//! Scenes are random geometric graphs: nodes uniform in a square, edges
//! between nodes within a connection radius, pruned to a degree cap, with
//! minimum-spanning-tree edges added first so the graph is always
//! connected. Episodes are shortest paths between sampled endpoint pairs.
//!
//! Distribution shift across domains is engineered and explicit: each
//! domain owns a disjoint landmark vocabulary slice, and node features
//! are drawn around a per-domain mean that is at least `shift_margin`
//! away from every other domain's mean.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;
use crate::sim::instruction::make_instruction;
use crate::sim::scene::{euclidean, Candidate, Scene};
use crate::sim::vocab;
use crate::sim::{Episode, Flavor, SceneDomain};

/// Generation parameters for one scene domain.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GenParams {
    /// Scenes per domain.
    pub num_scenes: usize,
    /// Nodes per scene.
    pub nodes_per_scene: usize,
    /// Training episodes per domain.
    pub train_episodes: usize,
    /// Validation episodes per domain (same scenes, disjoint endpoint pairs).
    pub val_episodes: usize,
    /// Observation vector dimension F.
    pub feature_dim: usize,
    /// Side of the square the nodes are placed in, meters.
    pub square_side: f64,
    /// Connection radius for geometric edges, meters.
    pub connect_radius: f64,
    /// Maximum node degree. Must be at least 6 so spanning-tree edges
    /// (Euclidean MST degree is bounded by 6) never violate the cap.
    pub max_degree: usize,
    /// Minimum demonstration path length in edges.
    pub min_path_len: usize,
    /// Maximum demonstration path length in edges.
    pub max_path_len: usize,
    /// Minimum distance between the feature means of any two domains.
    pub shift_margin: f64,
    /// Scale of the landmark identity component in node features.
    pub landmark_scale: f64,
    /// Stddev of the isotropic feature noise.
    pub feature_noise: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        // Geometry keeps the indoor-navigation ratio of hop length to the
        // 3 m success radius: ~18 nodes in a 12 m square give hops of
        // 1.5-3 m. The connection radius spans most of the square and the
        // degree cap does the pruning (shortest edges first), which makes
        // node degrees near-uniform: per-step candidate counts then vary
        // little, so episode perplexity reflects difficulty rather than
        // branching.
        GenParams {
            num_scenes: 1,
            nodes_per_scene: 18,
            train_episodes: 60,
            val_episodes: 12,
            feature_dim: 8,
            square_side: 12.0,
            connect_radius: 6.0,
            max_degree: 4,
            min_path_len: 3,
            max_path_len: 6,
            shift_margin: 2.0,
            landmark_scale: 2.0,
            feature_noise: 0.1,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_scenes < 1 {
            return Err(Error::Config("num_scenes must be >= 1".into()));
        }
        if self.nodes_per_scene < 2 {
            return Err(Error::Config("nodes_per_scene must be >= 2".into()));
        }
        if self.train_episodes < 1 {
            return Err(Error::Config("train_episodes must be >= 1".into()));
        }
        if self.feature_dim < 2 {
            return Err(Error::Config("feature_dim must be >= 2".into()));
        }
        if self.max_degree < 4 {
            return Err(Error::Config(
                "max_degree must be >= 4 to admit spanning-tree edges".into(),
            ));
        }
        if self.min_path_len < 1 || self.max_path_len < self.min_path_len {
            return Err(Error::Config(
                "need 1 <= min_path_len <= max_path_len".into(),
            ));
        }
        if self.square_side <= 0.0 || self.connect_radius <= 0.0 {
            return Err(Error::Config("square_side/connect_radius must be > 0".into()));
        }
        Ok(())
    }

    pub fn landmarks_per_domain(&self) -> u32 {
        vocab::landmarks_per_domain(self.num_scenes, self.nodes_per_scene)
    }
}

/// The feature mean of a domain. Means are placed on scaled axis
/// vectors so that any two distinct domains are at least `shift_margin`
/// apart: domain `d = k*F + j` maps to `shift_margin * (k+1) * e_j`.
pub fn domain_feature_mean<S: Scalar>(domain_id: u32, params: &GenParams) -> Vec<S> {
    let f = params.feature_dim;
    let k = domain_id as usize / f;
    let j = domain_id as usize % f;
    let mut mean = vec![S::zero(); f];
    mean[j] = S::of(params.shift_margin * (k + 1) as f64);
    mean
}

/// Deterministic unit vector identifying a landmark token in feature
/// space. Same token, same vector, across all scenes and domains.
fn landmark_direction<S: Scalar>(seed: u64, token: u32, dim: usize) -> Vec<S> {
    let mut rng = stream_rng(seed, Stream::LandmarkDirection, &[token as u64]);
    let raw: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    raw.iter().map(|x| S::of(x / norm)).collect()
}

/// Generate one scene: layout, connectivity, landmarks and features.
fn generate_scene<S: Scalar>(
    seed: u64,
    domain_id: u32,
    scene_idx: usize,
    params: &GenParams,
) -> Result<Scene<S>> {
    let n = params.nodes_per_scene;
    let mut layout_rng = stream_rng(seed, Stream::SceneLayout, &[domain_id as u64, scene_idx as u64]);
    // Uniform placement with a minimum separation (rejection sampling),
    // so layouts have comparable hop structure across domains. The
    // separation relaxes when a draw gets tight rather than failing.
    let mut positions_f64: Vec<[f64; 2]> = Vec::with_capacity(n);
    let mut min_sep = 0.45 * params.square_side / (n as f64).sqrt();
    let mut tries = 0usize;
    while positions_f64.len() < n {
        let p = [
            layout_rng.random_range(0.0..params.square_side),
            layout_rng.random_range(0.0..params.square_side),
        ];
        let clear = positions_f64
            .iter()
            .all(|q| (p[0] - q[0]).hypot(p[1] - q[1]) >= min_sep);
        if clear {
            positions_f64.push(p);
        }
        tries += 1;
        if tries > 200 * n {
            min_sep *= 0.5;
            tries = 0;
        }
    }

    // Spanning tree over the complete Euclidean graph (Prim, deterministic
    // tie-break by node ids) guarantees connectivity even when the radius
    // graph falls apart.
    let dist = |a: usize, b: usize| -> f64 {
        let dx = positions_f64[a][0] - positions_f64[b][0];
        let dy = positions_f64[a][1] - positions_f64[b][1];
        (dx * dx + dy * dy).sqrt()
    };
    let mut in_tree = vec![false; n];
    in_tree[0] = true;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for _ in 1..n {
        let mut best: Option<(f64, usize, usize)> = None;
        for u in 0..n {
            if !in_tree[u] {
                continue;
            }
            for v in 0..n {
                if in_tree[v] {
                    continue;
                }
                let d = dist(u, v);
                let key = (d, u, v);
                if best.is_none_or(|b| (key.0, key.1, key.2) < b) {
                    best = Some(key);
                }
            }
        }
        let (_, u, v) = best.expect("tree growth");
        in_tree[v] = true;
        edges.push((u.min(v), u.max(v)));
    }

    // Radius edges, shortest first, respecting the degree cap.
    let mut degree = vec![0usize; n];
    for &(u, v) in &edges {
        degree[u] += 1;
        degree[v] += 1;
    }
    if let Some(&worst) = degree.iter().max() {
        if worst > params.max_degree {
            return Err(Error::Generation(format!(
                "domain {domain_id} scene {scene_idx}: spanning tree needs degree {worst}, \
                 cap is {}",
                params.max_degree
            )));
        }
    }
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let d = dist(u, v);
            if d <= params.connect_radius && !edges.contains(&(u, v)) {
                candidates.push((d, u, v));
            }
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).expect("finite lengths"));
    for (_, u, v) in candidates {
        if degree[u] < params.max_degree && degree[v] < params.max_degree {
            edges.push((u, v));
            degree[u] += 1;
            degree[v] += 1;
        }
    }

    let positions: Vec<[S; 2]> = positions_f64
        .iter()
        .map(|p| [S::of(p[0]), S::of(p[1])])
        .collect();
    let mut adjacency: Vec<Vec<(u32, S)>> = vec![vec![]; n];
    for &(u, v) in &edges {
        let len = euclidean(&positions[u], &positions[v]);
        adjacency[u].push((v as u32, len));
        adjacency[v].push((u as u32, len));
    }
    for nbrs in &mut adjacency {
        nbrs.sort_by_key(|&(id, _)| id);
    }

    let per_domain = params.landmarks_per_domain();
    let slice_start = vocab::landmark_slice_start(domain_id, per_domain);
    let landmarks: Vec<u32> = (0..n)
        .map(|i| slice_start + (scene_idx * n + i) as u32)
        .collect();

    let mean = domain_feature_mean::<S>(domain_id, params);
    let mut feat_rng = stream_rng(
        seed,
        Stream::SceneFeatures,
        &[domain_id as u64, scene_idx as u64],
    );
    let features: Vec<Vec<S>> = (0..n)
        .map(|i| {
            let dir = landmark_direction::<S>(seed, landmarks[i], params.feature_dim);
            (0..params.feature_dim)
                .map(|j| {
                    let noise: f64 = feat_rng.sample(StandardNormal);
                    mean[j] + S::of(params.landmark_scale) * dir[j]
                        + S::of(params.feature_noise * noise)
                })
                .collect()
        })
        .collect();

    let scene = Scene {
        scene_id: domain_id * params.num_scenes as u32 + scene_idx as u32,
        positions,
        features,
        landmarks,
        adjacency,
    };
    scene.validate(params.max_degree)?;
    Ok(scene)
}

/// Ground-truth actions for walking `path` and stopping at its end.
fn actions_for_path<S: Scalar>(scene: &Scene<S>, path: &[u32]) -> Result<Vec<usize>> {
    let mut actions = Vec::with_capacity(path.len());
    for (i, &node) in path.iter().enumerate() {
        let cands = scene.candidate_actions(node)?;
        if let Some(&next) = path.get(i + 1) {
            let idx = cands
                .iter()
                .position(|&c| c == Candidate::Move(next))
                .ok_or(Error::IllegalTrajectory {
                    from: node,
                    to: next,
                })?;
            actions.push(idx);
        } else {
            actions.push(cands.len() - 1); // STOP is always last
        }
    }
    Ok(actions)
}

/// Generate a full scene domain: scenes, then train and val episodes
/// with mutually disjoint `(scene, start, goal)` triples.
pub fn generate_domain<S: Scalar>(
    domain_id: u32,
    seed: u64,
    flavor: Flavor,
    params: &GenParams,
) -> Result<SceneDomain<S>> {
    params.validate()?;

    let scenes: Vec<Scene<S>> = (0..params.num_scenes)
        .map(|i| generate_scene(seed, domain_id, i, params))
        .collect::<Result<_>>()?;

    let total = params.train_episodes + params.val_episodes;
    let mut rng = stream_rng(seed, Stream::EpisodeSampling, &[domain_id as u64]);
    let mut used: Vec<(u32, u32, u32)> = Vec::new();
    let mut episodes: Vec<Episode> = Vec::with_capacity(total);
    let mut attempts_left = total * 200;
    while episodes.len() < total {
        if attempts_left == 0 {
            return Err(Error::Generation(format!(
                "domain {domain_id}: infeasible path length (no unused endpoint pair \
                 with {}..={} edges after bounded retries)",
                params.min_path_len, params.max_path_len
            )));
        }
        attempts_left -= 1;
        let scene_idx = rng.random_range(0..params.num_scenes);
        let scene = &scenes[scene_idx];
        let n = scene.num_nodes() as u32;
        let start = rng.random_range(0..n);
        let goal = rng.random_range(0..n);
        if start == goal || used.contains(&(scene.scene_id, start, goal)) {
            continue;
        }
        let (path, _) = scene.shortest_path(start, goal)?;
        let hops = path.len() - 1;
        if hops < params.min_path_len || hops > params.max_path_len {
            continue;
        }
        used.push((scene.scene_id, start, goal));
        let gt_actions = actions_for_path(scene, &path)?;
        let instruction = make_instruction(scene, &path, flavor);
        episodes.push(Episode {
            episode_id: episodes.len() as u32,
            scene_id: scene.scene_id,
            start,
            goal,
            instruction,
            gt_actions,
            flavor,
        });
    }
    let val_episodes = episodes.split_off(params.train_episodes);

    Ok(SceneDomain {
        domain_id,
        scenes,
        train_episodes: episodes,
        val_episodes,
        landmark_vocab_start: vocab::landmark_slice_start(domain_id, params.landmarks_per_domain()),
        landmark_vocab_len: params.landmarks_per_domain(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_params() -> GenParams {
        GenParams {
            num_scenes: 3,
            nodes_per_scene: 20,
            train_episodes: 60,
            val_episodes: 12,
            ..GenParams::default()
        }
    }

    #[test]
    fn domain_contract_holds() {
        let params = small_params();
        let domain =
            generate_domain::<f64>(0, 7, Flavor::InitialInstruction, &params).unwrap();
        assert_eq!(domain.train_episodes.len(), 60);
        assert_eq!(domain.val_episodes.len(), 12);
        for scene in &domain.scenes {
            scene.validate(params.max_degree).unwrap();
        }
        // Every episode is executable and ends at its goal.
        for ep in domain.train_episodes.iter().chain(&domain.val_episodes) {
            let scene = domain.scene(ep.scene_id).unwrap();
            let trajectory = ep.replay_ground_truth(scene).unwrap();
            assert_eq!(*trajectory.last().unwrap(), ep.goal);
            assert!(ep.num_steps() >= 1);
        }
    }

    #[test]
    fn generation_is_byte_identical() {
        let params = small_params();
        let a = generate_domain::<f64>(0, 7, Flavor::InitialInstruction, &params).unwrap();
        let b = generate_domain::<f64>(0, 7, Flavor::InitialInstruction, &params).unwrap();
        assert_eq!(
            serde_json::to_vec(&a).unwrap(),
            serde_json::to_vec(&b).unwrap()
        );
    }

    #[test]
    fn infeasible_path_length_is_reported() {
        // Four nodes cannot host a 10-edge shortest path.
        let params = GenParams {
            nodes_per_scene: 4,
            min_path_len: 10,
            max_path_len: 12,
            train_episodes: 4,
            val_episodes: 1,
            ..GenParams::default()
        };
        let err = generate_domain::<f64>(0, 7, Flavor::InitialInstruction, &params).unwrap_err();
        assert!(err.to_string().contains("infeasible path length"));
    }

    #[test]
    fn val_pairs_disjoint_from_train() {
        let domain =
            generate_domain::<f64>(1, 7, Flavor::Dialogue, &small_params()).unwrap();
        let train: Vec<_> = domain
            .train_episodes
            .iter()
            .map(|e| (e.scene_id, e.start, e.goal))
            .collect();
        for v in &domain.val_episodes {
            assert!(!train.contains(&(v.scene_id, v.start, v.goal)));
        }
    }

    #[test]
    fn domain_means_respect_shift_margin() {
        let params = small_params();
        for a in 0..12u32 {
            for b in (a + 1)..12u32 {
                let ma = domain_feature_mean::<f64>(a, &params);
                let mb = domain_feature_mean::<f64>(b, &params);
                let d2: f64 = ma
                    .iter()
                    .zip(&mb)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                assert!(
                    d2.sqrt() >= params.shift_margin - 1e-12,
                    "domains {a},{b} too close"
                );
            }
        }
    }
}
