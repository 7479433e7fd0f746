//! Point-agent maze in the unit square. Three rectangular obstacles of random
//! size and position are drawn fresh at every reset, so the layout changes
//! from episode to episode. Moves that would cross an obstacle or leave the
//! world do nothing.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{EnvConfig, EnvId, Environment, ResetOut, StepOut};
use crate::geom::{Rect, Vec2};

pub const MAZE_OBSTACLES: usize = 3;
const HALF_EXTENT_RANGE: (f64, f64) = (0.05, 0.2);
/// Spawn clearance keeps start/goal strictly outside the planner's inflated
/// obstacle test.
const SPAWN_CLEARANCE: f64 = 0.02;

/// Apply one displacement under maze rules: the move happens only if the swept
/// segment stays inside the unit square and clear of every obstacle.
pub fn maze_move(pos: Vec2, disp: Vec2, obstacles: &[Rect]) -> Vec2 {
    let candidate = [pos[0] + disp[0], pos[1] + disp[1]];
    let inside = candidate[0] >= 0.0
        && candidate[0] <= 1.0
        && candidate[1] >= 0.0
        && candidate[1] <= 1.0;
    if !inside {
        return pos;
    }
    if obstacles.iter().any(|o| o.intersects_segment(pos, candidate)) {
        return pos;
    }
    candidate
}

/// Clamp a displacement to the admissible radius.
pub fn clamp_norm(disp: Vec2, bound: f64) -> Vec2 {
    let n = (disp[0] * disp[0] + disp[1] * disp[1]).sqrt();
    if n > bound {
        let s = bound / n;
        [disp[0] * s, disp[1] * s]
    } else {
        disp
    }
}

pub struct MazeEnv {
    cfg: EnvConfig,
    rng: ChaCha8Rng,
    state: Vec<f64>,
    goal: Vec2,
    obstacles: Vec<Rect>,
    steps: usize,
}

impl MazeEnv {
    pub fn new(cfg: EnvConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        MazeEnv {
            cfg,
            rng,
            state: vec![0.0; 2],
            goal: [0.0, 0.0],
            obstacles: Vec::new(),
            steps: 0,
        }
    }

    fn sample_obstacles(&mut self) -> Vec<Rect> {
        (0..MAZE_OBSTACLES)
            .map(|_| {
                let hx = self.rng.gen_range(HALF_EXTENT_RANGE.0..=HALF_EXTENT_RANGE.1);
                let hy = self.rng.gen_range(HALF_EXTENT_RANGE.0..=HALF_EXTENT_RANGE.1);
                let cx = self.rng.gen_range(hx..=1.0 - hx);
                let cy = self.rng.gen_range(hy..=1.0 - hy);
                Rect::new([cx, cy], [hx, hy])
            })
            .collect()
    }

    fn sample_free_point(&mut self, obstacles: &[Rect]) -> Option<Vec2> {
        for _ in 0..100 {
            let p = [self.rng.gen_range(0.0..=1.0), self.rng.gen_range(0.0..=1.0)];
            if obstacles
                .iter()
                .all(|o| !o.inflate(SPAWN_CLEARANCE).contains(p))
            {
                return Some(p);
            }
        }
        None
    }
}

impl Environment for MazeEnv {
    fn env_id(&self) -> EnvId {
        EnvId::Maze
    }

    fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    fn distance_mask(&self) -> Vec<usize> {
        vec![0, 1]
    }

    fn reset(&mut self) -> ResetOut {
        // degenerate obstacle draws (no free spawn) are resampled wholesale
        let (obstacles, agent, goal) = loop {
            let obstacles = self.sample_obstacles();
            let Some(agent) = self.sample_free_point(&obstacles) else {
                continue;
            };
            let Some(goal) = self.sample_free_point(&obstacles) else {
                continue;
            };
            break (obstacles, agent, goal);
        };
        self.obstacles = obstacles;
        self.state = vec![agent[0], agent[1]];
        self.goal = goal;
        self.steps = 0;
        ResetOut {
            state: self.state.clone(),
            goal,
            obstacles: self.obstacles.clone(),
        }
    }

    fn step(&mut self, action: &[f64]) -> StepOut {
        let a = [
            action.first().copied().unwrap_or(0.0),
            action.get(1).copied().unwrap_or(0.0),
        ];
        let mut disp = clamp_norm(a, self.action_bound());
        if self.cfg.noise_enabled && self.cfg.maze_noise > 0.0 {
            let n = self.cfg.maze_noise;
            disp[0] += self.rng.gen_range(-n..=n);
            disp[1] += self.rng.gen_range(-n..=n);
        }
        let pos = maze_move([self.state[0], self.state[1]], disp, &self.obstacles);
        self.state[0] = pos[0];
        self.state[1] = pos[1];
        self.steps += 1;

        let reward = self.sparse_reward(&self.state.clone(), self.goal);
        let done = reward == 1.0 || self.steps >= self.cfg.episode_length;
        StepOut {
            state: self.state.clone(),
            reward,
            done,
        }
    }

    fn state(&self) -> &[f64] {
        &self.state
    }

    fn goal(&self) -> Vec2 {
        self.goal
    }

    fn obstacles(&self) -> &[Rect] {
        &self.obstacles
    }

    fn clamp_action(&self, action: &[f64]) -> Vec<f64> {
        let a = [
            action.first().copied().unwrap_or(0.0),
            action.get(1).copied().unwrap_or(0.0),
        ];
        clamp_norm(a, self.action_bound()).to_vec()
    }

    fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_cfg(seed: u64) -> EnvConfig {
        EnvConfig {
            noise_enabled: false,
            rng_seed: seed,
            ..EnvConfig::default()
        }
    }

    #[test]
    fn blocked_move_does_nothing() {
        let wall = Rect::new([0.6, 0.5], [0.02, 0.2]);
        let pos = maze_move([0.5, 0.5], [0.1, 0.0], &[wall]);
        assert_eq!(pos, [0.5, 0.5]);
        let pos = maze_move([0.5, 0.5], [0.0, 0.05], &[wall]);
        assert_eq!(pos, [0.5, 0.05 + 0.5]);
    }

    #[test]
    fn border_move_does_nothing() {
        let pos = maze_move([0.95, 0.5], [0.1, 0.0], &[]);
        assert_eq!(pos, [0.95, 0.5]);
    }

    #[test]
    fn reset_resamples_obstacles_and_respects_clearance() {
        let mut env = MazeEnv::new(quiet_cfg(1));
        let a = env.reset();
        let b = env.reset();
        assert_eq!(a.obstacles.len(), MAZE_OBSTACLES);
        assert_ne!(a.obstacles, b.obstacles);
        for out in [a, b] {
            for o in &out.obstacles {
                assert!(!o.contains([out.state[0], out.state[1]]));
                assert!(!o.contains(out.goal));
                assert!(o.min()[0] >= 0.0 && o.max()[0] <= 1.0);
                assert!(o.min()[1] >= 0.0 && o.max()[1] <= 1.0);
            }
        }
    }

    #[test]
    fn same_seed_reproduces_reset_exactly() {
        let mut a = MazeEnv::new(quiet_cfg(77));
        let mut b = MazeEnv::new(quiet_cfg(77));
        let ra = a.reset();
        let rb = b.reset();
        assert_eq!(ra.state, rb.state);
        assert_eq!(ra.goal, rb.goal);
        assert_eq!(ra.obstacles, rb.obstacles);
    }

    #[test]
    fn displacement_norm_is_capped() {
        let mut env = MazeEnv::new(quiet_cfg(5));
        let before = env.reset().state;
        let out = env.step(&[10.0, 10.0]);
        let dx = out.state[0] - before[0];
        let dy = out.state[1] - before[1];
        assert!((dx * dx + dy * dy).sqrt() <= 0.1 + 1e-12);
    }
}
