//! Quasi-static planar pushing: a position-controlled spherical end effector
//! pushes a square box across a bounded table. The box moves only while
//! pushed (penetration resolution, no momentum carryover between steps).

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use super::{EnvConfig, EnvId, Environment, ResetOut, StepOut};
use crate::geom::{Rect, Vec2};

/// Rest/travel height of the end effector; above the contact band.
pub const EE_START_Z: f64 = 0.3;
/// Height of the table obstacle in the obstacle variant.
pub const OBSTACLE_HEIGHT: f64 = 0.2;
/// Upper bound of the end-effector workspace in z.
pub const EE_MAX_Z: f64 = 0.6;
/// Scales how strongly off-center contacts rotate the box.
const ROTATION_GAIN: f64 = 0.25;

/// Fixed wall in the middle of the table for the obstacle variant.
pub fn obstacle_rect() -> Rect {
    Rect::new([0.0, 0.0], [0.5, 0.1])
}

/// Resolve one end-effector displacement against the box footprint.
///
/// `ee` is the pre-move planar position of the effector disc, `ee_disp` the
/// commanded planar displacement. If the moved disc penetrates the (rotated)
/// box footprint, the box translates along the penetration-resolution
/// direction and rotates proportionally to the contact-point lever arm;
/// otherwise the pose is returned unchanged.
pub fn push_contact(
    ee_disp: Vec2,
    ee: Vec2,
    box_pos: Vec2,
    box_yaw: f64,
    box_half: f64,
    ee_radius: f64,
) -> (Vec2, f64) {
    let end = [ee[0] + ee_disp[0], ee[1] + ee_disp[1]];
    // box frame
    let (sin, cos) = box_yaw.sin_cos();
    let rel = [end[0] - box_pos[0], end[1] - box_pos[1]];
    let local = [cos * rel[0] + sin * rel[1], -sin * rel[0] + cos * rel[1]];

    let q = [
        local[0].clamp(-box_half, box_half),
        local[1].clamp(-box_half, box_half),
    ];
    let delta = [local[0] - q[0], local[1] - q[1]];
    let sep = (delta[0] * delta[0] + delta[1] * delta[1]).sqrt();

    let (depth, dir_local) = if sep >= ee_radius {
        return (box_pos, box_yaw);
    } else if sep > 1e-12 {
        // disc center outside the footprint: push along the contact normal
        (ee_radius - sep, [-delta[0] / sep, -delta[1] / sep])
    } else {
        // disc center inside the footprint: push through the nearest face
        let faces = [
            (local[0] + box_half, [1.0, 0.0]),
            (box_half - local[0], [-1.0, 0.0]),
            (local[1] + box_half, [0.0, 1.0]),
            (box_half - local[1], [0.0, -1.0]),
        ];
        let (m, dir) = faces
            .into_iter()
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
            .unwrap();
        (ee_radius + m, dir)
    };

    let shift_local = [depth * dir_local[0], depth * dir_local[1]];
    let shift_world = [
        cos * shift_local[0] - sin * shift_local[1],
        sin * shift_local[0] + cos * shift_local[1],
    ];
    let lever = q[0] * dir_local[1] - q[1] * dir_local[0];
    let yaw_delta = ROTATION_GAIN * lever * depth / (box_half * box_half);
    (
        [box_pos[0] + shift_world[0], box_pos[1] + shift_world[1]],
        box_yaw + yaw_delta,
    )
}

/// Separating-axis overlap test between the rotated box footprint and an
/// axis-aligned rectangle.
fn box_overlaps_rect(box_pos: Vec2, yaw: f64, half: f64, rect: &Rect) -> bool {
    let (sin, cos) = yaw.sin_cos();
    let axes = [[1.0, 0.0], [0.0, 1.0], [cos, sin], [-sin, cos]];
    let d = [box_pos[0] - rect.center[0], box_pos[1] - rect.center[1]];
    for ax in axes {
        let center_gap = (d[0] * ax[0] + d[1] * ax[1]).abs();
        let rect_ext = rect.half[0] * ax[0].abs() + rect.half[1] * ax[1].abs();
        let box_ext = half * (cos * ax[0] + sin * ax[1]).abs() + half * (-sin * ax[0] + cos * ax[1]).abs();
        if center_gap > rect_ext + box_ext {
            return false;
        }
    }
    true
}

pub struct PushingEnv {
    cfg: EnvConfig,
    with_obstacle: bool,
    rng: ChaCha8Rng,
    state: Vec<f64>,
    goal: Vec2,
    obstacles: Vec<Rect>,
    steps: usize,
    box_lost: bool,
    done: bool,
}

impl PushingEnv {
    pub fn new(cfg: EnvConfig, with_obstacle: bool) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        let obstacles = if with_obstacle { vec![obstacle_rect()] } else { Vec::new() };
        PushingEnv {
            cfg,
            with_obstacle,
            rng,
            state: vec![0.0; 7],
            goal: [0.0, 0.0],
            obstacles,
            steps: 0,
            box_lost: false,
            done: false,
        }
    }

    fn spawn_range(&self) -> f64 {
        self.cfg.table_half() - self.cfg.box_half()
    }

    fn sample_box_position(&mut self) -> Vec2 {
        let r = self.spawn_range();
        for _ in 0..10_000 {
            let p = [self.rng.gen_range(-r..=r), self.rng.gen_range(-r..=r)];
            let footprint = Rect::new(p, [self.cfg.box_half(), self.cfg.box_half()]);
            let clear = self.obstacles.iter().all(|o| !footprint.intersects_rect(o));
            if clear {
                return p;
            }
        }
        unreachable!("free table area dominates; box spawn cannot starve")
    }

    fn sample_goal(&mut self) -> Vec2 {
        let r = self.spawn_range();
        for _ in 0..10_000 {
            let p = [self.rng.gen_range(-r..=r), self.rng.gen_range(-r..=r)];
            let clear = self
                .obstacles
                .iter()
                .all(|o| !o.inflate(self.cfg.box_half()).contains(p));
            if clear {
                return p;
            }
        }
        unreachable!("free table area dominates; goal spawn cannot starve")
    }

    fn ee(&self) -> [f64; 3] {
        [self.state[0], self.state[1], self.state[2]]
    }

    fn box_pos(&self) -> Vec2 {
        [self.state[3], self.state[4]]
    }

    /// True once the box center has left the table footprint.
    pub fn box_lost(&self) -> bool {
        self.box_lost
    }
}

impl Environment for PushingEnv {
    fn env_id(&self) -> EnvId {
        if self.with_obstacle {
            EnvId::PushObstacle
        } else {
            EnvId::PushBasic
        }
    }

    fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    fn distance_mask(&self) -> Vec<usize> {
        vec![0, 1, 2, 3, 4, 5]
    }

    fn reset(&mut self) -> ResetOut {
        let box_pos = self.sample_box_position();
        let goal = self.sample_goal();
        self.state = vec![0.0, 0.0, EE_START_Z, box_pos[0], box_pos[1], 0.0, 0.0];
        self.goal = goal;
        self.steps = 0;
        self.box_lost = false;
        self.done = false;
        ResetOut {
            state: self.state.clone(),
            goal,
            obstacles: self.obstacles.clone(),
        }
    }

    fn step(&mut self, action: &[f64]) -> StepOut {
        let bound = self.action_bound();
        let mut disp = [0.0f64; 3];
        for i in 0..3 {
            disp[i] = action.get(i).copied().unwrap_or(0.0).clamp(-bound, bound);
        }
        if self.cfg.noise_enabled && self.cfg.noise_scale > 0.0 {
            let n = self.cfg.noise_scale;
            for d in disp.iter_mut() {
                *d += self.rng.gen_range(-n..=n);
            }
        }

        let ee = self.ee();
        let half = self.cfg.table_half();
        let mut ee_new = [
            (ee[0] + disp[0]).clamp(-half, half),
            (ee[1] + disp[1]).clamp(-half, half),
            (ee[2] + disp[2]).clamp(0.0, EE_MAX_Z),
        ];

        // the table obstacle blocks the effector while it travels low
        if self.with_obstacle && ee_new[2] - self.cfg.ee_radius < OBSTACLE_HEIGHT {
            let blocked = self
                .obstacles
                .iter()
                .any(|o| o.inflate(self.cfg.ee_radius).contains([ee_new[0], ee_new[1]]));
            if blocked {
                ee_new = ee;
            }
        }

        if !self.box_lost && (ee_new[2]).abs() <= self.cfg.contact_threshold() {
            let (new_pos, new_yaw) = push_contact(
                [ee_new[0] - ee[0], ee_new[1] - ee[1]],
                [ee[0], ee[1]],
                self.box_pos(),
                self.state[6],
                self.cfg.box_half(),
                self.cfg.ee_radius,
            );
            let hits_obstacle = self
                .obstacles
                .iter()
                .any(|o| box_overlaps_rect(new_pos, new_yaw, self.cfg.box_half(), o));
            if !hits_obstacle {
                self.state[3] = new_pos[0];
                self.state[4] = new_pos[1];
                self.state[6] = new_yaw;
            }
            if self.state[3].abs() > half || self.state[4].abs() > half {
                self.box_lost = true;
            }
        }

        self.state[0] = ee_new[0];
        self.state[1] = ee_new[1];
        self.state[2] = ee_new[2];
        self.steps += 1;

        let reward = self.sparse_reward(&self.state.clone(), self.goal);
        let done = reward == 1.0 || self.steps >= self.cfg.episode_length || self.box_lost;
        self.done = done;
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
        let bound = self.action_bound();
        (0..3)
            .map(|i| action.get(i).copied().unwrap_or(0.0).clamp(-bound, bound))
            .collect()
    }

    fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }
}
