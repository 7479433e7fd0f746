//! Deterministic, seedable environments: planar pushing (basic and obstacle
//! variants) and a bounded 2D maze whose obstacles are resampled each episode.
//!
//! All environments expose flattened state vectors. For the pushing family the
//! layout is `[ee_x, ee_y, ee_z, box_x, box_y, box_z, box_yaw]`; the yaw
//! component is excluded from the shaping distance via [`Environment::distance_mask`].
//! The maze state is the 2D agent position in the unit square.

pub mod maze;
pub mod pushing;

pub use maze::{maze_move, MazeEnv};
pub use pushing::{push_contact, PushingEnv};

use crate::geom::{dist, Rect, Vec2};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
    #[error("unknown environment id: {0}")]
    UnknownEnv(String),
}

/// Task family selector. Fixes state/action dimensions, the planner family,
/// the nominal plan length, and the plan-encoding dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EnvId {
    PushBasic,
    PushObstacle,
    Maze,
}

impl EnvId {
    pub fn parse(s: &str) -> Result<Self, EnvError> {
        match s {
            "push_basic" | "push" => Ok(EnvId::PushBasic),
            "push_obstacle" | "obstacle" => Ok(EnvId::PushObstacle),
            "maze" => Ok(EnvId::Maze),
            other => Err(EnvError::UnknownEnv(other.to_string())),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            EnvId::PushBasic => "push_basic",
            EnvId::PushObstacle => "push_obstacle",
            EnvId::Maze => "maze",
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            EnvId::PushBasic | EnvId::PushObstacle => 7,
            EnvId::Maze => 2,
        }
    }

    pub fn action_dim(&self) -> usize {
        match self {
            EnvId::PushBasic | EnvId::PushObstacle => 3,
            EnvId::Maze => 2,
        }
    }

    /// Nominal waypoint count of plans for this task.
    pub fn plan_len(&self) -> usize {
        match self {
            EnvId::PushBasic => 50,
            EnvId::PushObstacle => 100,
            EnvId::Maze => 20,
        }
    }

    /// Waypoint dimension: ee position + box position for pushing, agent
    /// position for the maze.
    pub fn plan_dim(&self) -> usize {
        match self {
            EnvId::PushBasic | EnvId::PushObstacle => 6,
            EnvId::Maze => 2,
        }
    }

    /// Dimension of the analytic plan encoding fed to the policy.
    pub fn encoding_dim(&self) -> usize {
        match self {
            EnvId::PushBasic => 4,
            EnvId::PushObstacle => 6,
            EnvId::Maze => 40,
        }
    }

    pub fn is_pushing(&self) -> bool {
        matches!(self, EnvId::PushBasic | EnvId::PushObstacle)
    }
}

/// Tuning knobs shared by the environment family.
#[derive(Clone, Debug)]
pub struct EnvConfig {
    /// Side length of the (square) pushing table.
    pub table_size: f64,
    /// Side length of the pushed box.
    pub box_size: f64,
    /// Radius of the spherical end effector.
    pub ee_radius: f64,
    /// Success radius around the goal position.
    pub goal_tolerance: f64,
    /// Steps per episode.
    pub episode_length: usize,
    /// Per-component actuation noise bound for the pushing envs.
    pub noise_scale: f64,
    /// Per-component actuation noise bound for the maze.
    pub maze_noise: f64,
    /// Master switch for actuation noise (off for deterministic tests).
    pub noise_enabled: bool,
    pub rng_seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            table_size: 3.0,
            box_size: 0.4,
            ee_radius: 0.06,
            goal_tolerance: 0.1,
            episode_length: 250,
            noise_scale: 0.01,
            maze_noise: 0.01,
            noise_enabled: true,
            rng_seed: 0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        let positive = [
            ("table_size", self.table_size),
            ("box_size", self.box_size),
            ("ee_radius", self.ee_radius),
            ("goal_tolerance", self.goal_tolerance),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(EnvError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.episode_length == 0 {
            return Err(EnvError::InvalidConfig("episode_length must be positive".into()));
        }
        if self.goal_tolerance >= self.box_size {
            return Err(EnvError::InvalidConfig(
                "goal_tolerance must be smaller than box_size".into(),
            ));
        }
        if self.noise_scale < 0.0 || self.maze_noise < 0.0 {
            return Err(EnvError::InvalidConfig("noise bounds must be non-negative".into()));
        }
        Ok(())
    }

    pub fn table_half(&self) -> f64 {
        self.table_size / 2.0
    }

    pub fn box_half(&self) -> f64 {
        self.box_size / 2.0
    }

    /// Height band around the box plane within which the end effector makes
    /// contact. Planned lift phases exceed this so contact breaks cleanly.
    pub fn contact_threshold(&self) -> f64 {
        1.5 * self.ee_radius
    }
}

/// Parameters of the binary goal reward, shared verbatim by the environments,
/// the shaped reward, and offline relabeling so recomputed rewards are
/// bit-identical to the ones collected online.
#[derive(Clone, Copy, Debug)]
pub struct SparseSpec {
    pub goal_tolerance: f64,
    /// Indices of the achieved planar position inside the state vector.
    pub achieved_idx: [usize; 2],
    /// Half side of the table for the pushing family; a box whose center has
    /// left the table footprint can no longer earn the reward.
    pub table_half: Option<f64>,
}

impl SparseSpec {
    pub fn for_env(id: EnvId, cfg: &EnvConfig) -> Self {
        match id {
            EnvId::PushBasic | EnvId::PushObstacle => SparseSpec {
                goal_tolerance: cfg.goal_tolerance,
                achieved_idx: [3, 4],
                table_half: Some(cfg.table_half()),
            },
            EnvId::Maze => SparseSpec {
                goal_tolerance: cfg.goal_tolerance,
                achieved_idx: [0, 1],
                table_half: None,
            },
        }
    }

    pub fn achieved(&self, state: &[f64]) -> Vec2 {
        [state[self.achieved_idx[0]], state[self.achieved_idx[1]]]
    }

    /// Binary reward: 1 iff the achieved planar position is within
    /// `goal_tolerance` of the goal (boundary inclusive) and, for the pushing
    /// family, the box is still on the table.
    pub fn eval(&self, next_state: &[f64], goal: Vec2) -> f64 {
        let p = self.achieved(next_state);
        if let Some(h) = self.table_half {
            if p[0].abs() > h || p[1].abs() > h {
                return 0.0;
            }
        }
        if dist(p, goal) <= self.goal_tolerance {
            1.0
        } else {
            0.0
        }
    }
}

pub struct ResetOut {
    pub state: Vec<f64>,
    pub goal: Vec2,
    pub obstacles: Vec<Rect>,
}

pub struct StepOut {
    pub state: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

/// Common surface of the task environments. Instances are single-threaded and
/// independently owned; run several in parallel by giving each its own seed.
pub trait Environment {
    fn env_id(&self) -> EnvId;
    fn config(&self) -> &EnvConfig;
    fn state_dim(&self) -> usize {
        self.env_id().state_dim()
    }
    fn action_dim(&self) -> usize {
        self.env_id().action_dim()
    }
    /// Per-direction velocity cap.
    fn action_bound(&self) -> f64 {
        0.1
    }
    /// State indices that enter the shaping distance (orientation excluded).
    fn distance_mask(&self) -> Vec<usize>;
    fn sparse_spec(&self) -> SparseSpec {
        SparseSpec::for_env(self.env_id(), self.config())
    }
    fn reset(&mut self) -> ResetOut;
    fn step(&mut self, action: &[f64]) -> StepOut;
    fn state(&self) -> &[f64];
    fn goal(&self) -> Vec2;
    fn obstacles(&self) -> &[Rect];
    /// Planar position compared against goals (box center or agent position).
    fn achieved_goal(&self, state: &[f64]) -> Vec2 {
        self.sparse_spec().achieved(state)
    }
    fn sparse_reward(&self, next_state: &[f64], goal: Vec2) -> f64 {
        self.sparse_spec().eval(next_state, goal)
    }
    /// Clamp an action to the environment's admissible set.
    fn clamp_action(&self, action: &[f64]) -> Vec<f64>;
    fn reseed(&mut self, seed: u64);
}

/// Instantiate an environment for a task id.
pub fn make_env(id: EnvId, cfg: EnvConfig) -> Box<dyn Environment> {
    match id {
        EnvId::PushBasic => Box::new(PushingEnv::new(cfg, false)),
        EnvId::PushObstacle => Box::new(PushingEnv::new(cfg, true)),
        EnvId::Maze => Box::new(MazeEnv::new(cfg)),
    }
}
