//! Plan-based shaping reward and the plan-conditioned reward built from it.
//!
//! The shaping term rewards progress along the plan and proximity to it while
//! always staying below the binary success reward:
//!
//! ```text
//! F(s, a, s', p) = (1 - R(s, a, s', f(p))) / 2 * (k(s) + 1) / L * exp(-d^2(s, p_k) / (2 sigma^2))
//! ```
//!
//! where `f(p)` is the goal the plan leads to, `k(s)` the index of the plan
//! waypoint nearest to `s`, and `d` the Euclidean state distance over the
//! components selected by the mask (orientation excluded). `d` and `k` are
//! evaluated at the pre-transition state; the binary reward at the post
//! state. Adding the binary goal reward gives the plan-conditioned reward,
//! which is exactly 1 on success and below 1/2 otherwise.

use crate::envs::SparseSpec;
use crate::geom::Vec2;
use crate::planners::Plan;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ShapingError {
    #[error("sigma must be positive, got {0}")]
    BadSigma(f64),
    #[error("distance mask is empty")]
    EmptyMask,
    #[error("mask length {mask} does not match waypoint dimension {dim}")]
    MaskMismatch { mask: usize, dim: usize },
}

/// Width of the proximity kernel plus the state components it sees.
#[derive(Clone, Debug)]
pub struct ShapingConfig {
    pub sigma: f64,
    /// State indices entering the distance; excludes orientation components.
    pub distance_mask: Vec<usize>,
}

impl ShapingConfig {
    pub fn new(sigma: f64, distance_mask: Vec<usize>) -> Result<Self, ShapingError> {
        if !(sigma > 0.0) {
            return Err(ShapingError::BadSigma(sigma));
        }
        if distance_mask.is_empty() {
            return Err(ShapingError::EmptyMask);
        }
        Ok(ShapingConfig { sigma, distance_mask })
    }
}

/// Euclidean distance between the masked state components and a waypoint.
/// The mask must select exactly as many components as the waypoint has.
pub fn masked_distance(state: &[f64], waypoint: &[f64], mask: &[usize]) -> f64 {
    assert_eq!(
        mask.len(),
        waypoint.len(),
        "mask selects {} components but waypoint has {}",
        mask.len(),
        waypoint.len()
    );
    let mut sum = 0.0;
    for (j, &idx) in mask.iter().enumerate() {
        let diff = state[idx] - waypoint[j];
        sum += diff * diff;
    }
    sum.sqrt()
}

/// Index of the waypoint nearest to `state`; ties go to the lowest index.
pub fn nearest_index(state: &[f64], plan: &Plan, mask: &[usize]) -> usize {
    assert!(!plan.is_empty(), "plan must be non-empty");
    let mut best = 0;
    let mut best_d = masked_distance(state, plan.waypoint(0), mask);
    for i in 1..plan.len() {
        let d = masked_distance(state, plan.waypoint(i), mask);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// The goal a plan leads to. Plans store it alongside their waypoints, so any
/// plan determines its goal.
pub fn goal_of(plan: &Plan) -> Vec2 {
    plan.goal
}

/// Bundles the binary goal reward and the shaping parameters of one task so
/// online stepping, replay scoring, and offline relabeling all evaluate
/// rewards through the same arithmetic path.
#[derive(Clone, Debug)]
pub struct RewardModel {
    pub shaping: ShapingConfig,
    pub sparse: SparseSpec,
}

impl RewardModel {
    pub fn new(shaping: ShapingConfig, sparse: SparseSpec) -> Self {
        RewardModel { shaping, sparse }
    }

    pub fn sparse_reward(&self, next_state: &[f64], goal: Vec2) -> f64 {
        self.sparse.eval(next_state, goal)
    }

    /// Shaping term in `[0, 1/2]`; zero whenever the transition earns the
    /// binary reward. The action does not enter the formula but is kept in
    /// the signature to match the reward interface.
    pub fn fv_shaping(&self, state: &[f64], _action: &[f64], next_state: &[f64], plan: &Plan) -> f64 {
        let rg = self.sparse.eval(next_state, goal_of(plan));
        self.shaping_given_sparse(state, plan, rg)
    }

    fn shaping_given_sparse(&self, state: &[f64], plan: &Plan, rg: f64) -> f64 {
        let mask = &self.shaping.distance_mask;
        let k = nearest_index(state, plan, mask);
        let d = masked_distance(state, plan.waypoint(k), mask);
        let sigma = self.shaping.sigma;
        (1.0 - rg) / 2.0
            * ((k + 1) as f64 / plan.len() as f64)
            * (-(d * d) / (2.0 * sigma * sigma)).exp()
    }

    /// Plan-conditioned reward: binary goal reward plus shaping. Exactly 1 on
    /// success (shaping vanishes there), below 1/2 otherwise.
    pub fn plan_reward(&self, state: &[f64], action: &[f64], next_state: &[f64], plan: &Plan) -> f64 {
        let rg = self.sparse.eval(next_state, goal_of(plan));
        let _ = action;
        rg + self.shaping_given_sparse(state, plan, rg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{EnvConfig, EnvId};
    use crate::planners::{PlanMeta, PlannerId};

    fn toy_plan(rows: &[[f64; 6]], goal: Vec2) -> Plan {
        Plan {
            waypoints: rows.iter().flatten().copied().collect(),
            dim: 6,
            goal,
            meta: PlanMeta {
                planner: PlannerId::Manhattan2,
                start: vec![rows[0][0], rows[0][1], rows[0][3], rows[0][4]],
                intermediate: None,
            },
        }
    }

    fn push_model() -> RewardModel {
        RewardModel::new(
            ShapingConfig::new(0.5, vec![0, 1, 2, 3, 4, 5]).unwrap(),
            SparseSpec::for_env(EnvId::PushBasic, &EnvConfig::default()),
        )
    }

    #[test]
    fn distance_ignores_orientation_and_matches_pythagoras() {
        let mask = [0usize, 1, 2, 3, 4, 5];
        let mut s = vec![0.0; 7];
        s[6] = 2.3; // yaw
        let w = [0.0; 6];
        assert_eq!(masked_distance(&s, &w, &mask), 0.0);

        s[3] = 0.3;
        s[4] = 0.4;
        assert!((masked_distance(&s, &w, &mask) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn distance_matches_sum_of_squares_oracle_on_random_pairs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mask = [0usize, 1, 2, 3, 4, 5];
        for _ in 0..1000 {
            let s: Vec<f64> = (0..7).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let w: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut acc = 0.0;
            for j in 0..6 {
                acc += (s[mask[j]] - w[j]) * (s[mask[j]] - w[j]);
            }
            assert_eq!(masked_distance(&s, &w, &mask), acc.sqrt());
        }
    }

    #[test]
    #[should_panic(expected = "mask selects")]
    fn distance_rejects_dimension_mismatch() {
        masked_distance(&[0.0; 7], &[0.0; 5], &[0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn nearest_index_breaks_ties_low() {
        // waypoints at x = 0, 1, 2, ..., state at x = 0.5 ties 0 and 1
        let rows: Vec<[f64; 6]> = (0..8).map(|i| [i as f64, 0.0, 0.0, 0.0, 0.0, 0.0]).collect();
        let plan = toy_plan(&rows, [0.0, 0.0]);
        let mask = [0usize, 1, 2, 3, 4, 5];
        let mut s = vec![0.0; 7];
        s[0] = 0.5;
        assert_eq!(nearest_index(&s, &plan, &mask), 0);
        s[0] = 3.0;
        assert_eq!(nearest_index(&s, &plan, &mask), 3);
    }

    #[test]
    fn nearest_index_matches_exhaustive_scan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mask = [0usize, 1, 2, 3, 4, 5];
        for _ in 0..200 {
            let rows: Vec<[f64; 6]> = (0..30)
                .map(|_| std::array::from_fn(|_| rng.gen_range(-1.5..1.5)))
                .collect();
            let plan = toy_plan(&rows, [0.0, 0.0]);
            let s: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let brute = (0..plan.len())
                .map(|i| masked_distance(&s, plan.waypoint(i), &mask))
                .enumerate()
                .fold((0usize, f64::INFINITY), |acc, (i, d)| {
                    if d < acc.1 {
                        (i, d)
                    } else {
                        acc
                    }
                })
                .0;
            assert_eq!(nearest_index(&s, &plan, &mask), brute);
        }
    }

    #[test]
    fn shaping_vanishes_on_success_and_hits_closed_forms() {
        let model = push_model();
        let rows: Vec<[f64; 6]> = (0..50)
            .map(|i| [0.0, 0.0, 0.0, -1.0 + 0.04 * i as f64, 0.0, 0.0])
            .collect();
        let plan = toy_plan(&rows, [1.0, 0.0]);

        // success: next state's box sits on the goal
        let s = vec![0.0; 7];
        let mut s_next = vec![0.0; 7];
        s_next[3] = 1.0;
        assert_eq!(model.fv_shaping(&s, &[0.0; 3], &s_next, &plan), 0.0);
        assert_eq!(model.plan_reward(&s, &[0.0; 3], &s_next, &plan), 1.0);

        // exactly on waypoint k with no success: (k + 1) / (2 L)
        for k in [0usize, 10, 49] {
            let mut on_k = vec![0.0; 7];
            let w = plan.waypoint(k);
            for (j, &idx) in [0usize, 1, 2, 3, 4, 5].iter().enumerate() {
                on_k[idx] = w[j];
            }
            let far = vec![0.0; 7]; // box at origin, goal at (1, 0): no success
            let got = model.fv_shaping(&on_k, &[0.0; 3], &far, &plan);
            let want = (k + 1) as f64 / (2.0 * 50.0);
            assert!((got - want).abs() < 1e-15, "k={k}: {got} vs {want}");
        }

        // at distance sigma from waypoint k: (k + 1) / (2 L) * exp(-1/2)
        let mut at_sigma = vec![0.0; 7];
        at_sigma[3] = -1.0;
        at_sigma[2] = 0.5; // one body offset by sigma in z
        let far = vec![0.0; 7];
        let got = model.fv_shaping(&at_sigma, &[0.0; 3], &far, &plan);
        let want = 1.0 / (2.0 * 50.0) * (-0.5f64).exp();
        assert!((got - want).abs() < 1e-15);
    }

    #[test]
    fn plan_reward_band_and_orientation_invariance() {
        use rand::{Rng, SeedableRng};
        let model = push_model();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        for _ in 0..2000 {
            let rows: Vec<[f64; 6]> = (0..20)
                .map(|_| std::array::from_fn(|_| rng.gen_range(-1.4..1.4)))
                .collect();
            let plan = toy_plan(&rows, [rng.gen_range(-1.4..1.4), rng.gen_range(-1.4..1.4)]);
            let s: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.4..1.4)).collect();
            let s_next: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.4..1.4)).collect();
            let r = model.plan_reward(&s, &[0.0; 3], &s_next, &plan);
            let success = model.sparse_reward(&s_next, plan.goal) == 1.0;
            if success {
                assert_eq!(r, 1.0);
            } else {
                assert!((0.0..=0.5).contains(&r), "unsuccessful reward {r} out of band");
            }
            let mut spun = s.clone();
            spun[6] += rng.gen_range(-3.0..3.0);
            assert_eq!(r, model.plan_reward(&spun, &[0.0; 3], &s_next, &plan));
        }
    }
}
