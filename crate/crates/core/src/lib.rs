//! Plan-conditioned reinforcement learning laboratory.
//!
//! Crude planners turn goals into waypoint plans; a shaping reward converts
//! the goal-conditioned task into a plan-conditioned one; an off-policy soft
//! actor-critic learner with plan-replay relabeling learns a universal
//! plan-executing policy. Baselines (direct plan execution, inverse-dynamics
//! execution, planned subgoals, hindsight goal relabeling) and an experiment
//! harness with a CLI round out the crate.

pub mod baselines;
pub mod envs;
pub mod geom;
pub mod harness;
pub mod learner;
pub mod parallel;
pub mod planmdp;
pub mod planners;
pub mod replay;
pub mod shaping;

pub use envs::{make_env, EnvConfig, EnvId, Environment};
pub use planmdp::{encode_plan, PlanMdp};
pub use planners::{manhattan_plan, rrt_plan, subsample_plan, Plan, PlannerId};
pub use replay::{
    biased_replay_plans, her_replay_goals, relabel_episode, uniform_replay_plans, ReplayBuffer,
};
pub use shaping::{goal_of, masked_distance, nearest_index, RewardModel, ShapingConfig};
