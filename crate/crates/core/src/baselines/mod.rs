//! Comparison methods: direct plan execution with a nearest-waypoint
//! controller, plan execution through a learned inverse-dynamics model, and
//! planner-provided subgoals for a goal-conditioned agent.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::envs::Environment;
use crate::geom::{dist, Vec2};
use crate::learner::{Adam, BatchItem, Mlp, SacLearner, Workspace};
use crate::parallel::accumulate_chunked;
use crate::planners::Plan;
use crate::shaping::{nearest_index, RewardModel};

#[derive(Clone, Copy, Debug)]
pub struct RolloutResult {
    pub success: bool,
    pub steps: usize,
}

/// Planned end-effector (or agent) position of waypoint `i`.
fn guide_point(plan: &Plan, i: usize) -> Vec<f64> {
    let w = plan.waypoint(i);
    if plan.dim >= 6 {
        vec![w[0], w[1], w[2]]
    } else {
        vec![w[0], w[1]]
    }
}

/// Track a plan open-loop: at each step find the waypoint nearest to the
/// current state and move by the planned delta to its successor; the final
/// waypoint commands no motion. Stops on goal or after the episode budget.
pub fn direct_execute(
    plan: &Plan,
    env: &mut dyn Environment,
    reward: &RewardModel,
) -> RolloutResult {
    let budget = env.config().episode_length;
    let mask = reward.shaping.distance_mask.clone();
    let mut state = env.state().to_vec();
    for step in 1..=budget {
        let k = nearest_index(&state, plan, &mask);
        let action = if k + 1 < plan.len() {
            let here = guide_point(plan, k);
            let next = guide_point(plan, k + 1);
            let delta: Vec<f64> = next.iter().zip(&here).map(|(n, h)| n - h).collect();
            env.clamp_action(&delta)
        } else {
            vec![0.0; env.action_dim()]
        };
        let out = env.step(&action);
        state = out.state;
        if out.reward == 1.0 {
            return RolloutResult { success: true, steps: step };
        }
        if out.done {
            return RolloutResult { success: false, steps: step };
        }
    }
    RolloutResult { success: false, steps: budget }
}

/// Training data for the inverse model: (state, next state, action) triples
/// from random rollouts, with a fraction of steps steered at the box.
pub struct ImDataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub box_directed: usize,
    pub total: usize,
}

/// Fraction of collection steps replaced by a box-directed action.
pub const BOX_DIRECTED_FRACTION: f64 = 0.1;

pub fn collect_im_data(
    env: &mut dyn Environment,
    episodes: usize,
    rng: &mut ChaCha8Rng,
) -> ImDataset {
    assert!(env.env_id().is_pushing(), "inverse model is a pushing-family baseline");
    let bound = env.action_bound();
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    let mut box_directed = 0;
    for _ in 0..episodes {
        let mut state = env.reset().state;
        // fixed-length episodes: the env absorbs a lost box on its own, and
        // free effector motion keeps producing useful pairs
        for _ in 0..env.config().episode_length {
            let action: Vec<f64> = if rng.gen_bool(BOX_DIRECTED_FRACTION) {
                box_directed += 1;
                // head straight for the box center
                let target = [state[3], state[4], 0.0];
                (0..3).map(|i| (target[i] - state[i]).clamp(-bound, bound)).collect()
            } else {
                (0..3).map(|_| rng.gen_range(-bound..=bound)).collect()
            };
            let out = env.step(&action);
            let mut row = state.clone();
            row.extend_from_slice(&out.state);
            inputs.push(row);
            targets.push(action);
            state = out.state;
        }
    }
    let total = inputs.len();
    ImDataset { inputs, targets, box_directed, total }
}

/// Inverse dynamics model: predicts the action realizing a desired next
/// state. Inputs are normalized by training-set statistics; outputs are
/// squashed to the action bound.
pub struct InverseModel {
    net: Mlp,
    mean: Vec<f64>,
    std: Vec<f64>,
    bound: f64,
}

#[derive(Clone, Debug, Default)]
pub struct ImTrainReport {
    pub epochs_run: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

impl InverseModel {
    pub fn new(state_dim: usize, action_dim: usize, bound: f64, seed: u64) -> Self {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sizes = vec![2 * state_dim, 128, 64, action_dim];
        InverseModel {
            net: Mlp::new(sizes, &mut rng),
            mean: vec![0.0; 2 * state_dim],
            std: vec![1.0; 2 * state_dim],
            bound,
        }
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    fn normalize(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    pub fn predict(&self, state: &[f64], desired: &[f64]) -> Vec<f64> {
        let mut row = state.to_vec();
        row.extend_from_slice(desired);
        let raw = self.net.forward(&self.normalize(&row));
        raw.iter().map(|v| self.bound * v.tanh()).collect()
    }

    /// Mean-squared-error training with a held-out split; stops when the
    /// validation error plateaus.
    pub fn train(
        &mut self,
        data: &ImDataset,
        max_epochs: usize,
        batch: usize,
        lr: f64,
        rng: &mut ChaCha8Rng,
    ) -> ImTrainReport {
        assert!(!data.inputs.is_empty());
        let dim = data.inputs[0].len();
        // input statistics from the whole set
        let n = data.inputs.len() as f64;
        let mut mean = vec![0.0; dim];
        for row in &data.inputs {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x / n;
            }
        }
        let mut var = vec![0.0; dim];
        for row in &data.inputs {
            for (v, (x, m)) in var.iter_mut().zip(row.iter().zip(&mean)) {
                *v += (x - m) * (x - m) / n;
            }
        }
        self.mean = mean;
        self.std = var.iter().map(|v| v.sqrt().max(1e-8)).collect();

        let normalized: Vec<Vec<f64>> = data.inputs.iter().map(|r| self.normalize(r)).collect();
        let val_len = (normalized.len() / 10).max(1);
        let train_len = normalized.len() - val_len;

        let mut opt = Adam::new(lr, self.net.n_params());
        let mut report = ImTrainReport::default();
        let mut best_val = f64::INFINITY;
        let mut stale = 0usize;
        for epoch in 0..max_epochs {
            let mut order: Vec<usize> = (0..train_len).collect();
            for i in (1..order.len()).rev() {
                order.swap(i, rng.gen_range(0..=i));
            }
            let mut train_mse = 0.0;
            let mut seen = 0usize;
            for chunk in order.chunks(batch) {
                let (loss, grads) = self.batch_grads(chunk, &normalized, &data.targets);
                opt.step(self.net.params_mut(), &grads);
                train_mse += loss * chunk.len() as f64;
                seen += chunk.len();
            }
            report.train_mse = train_mse / seen as f64;
            let val_idx: Vec<usize> = (train_len..normalized.len()).collect();
            report.val_mse = self.eval_mse(&val_idx, &normalized, &data.targets);
            report.epochs_run = epoch + 1;
            if report.val_mse + 1e-7 < best_val {
                best_val = report.val_mse;
                stale = 0;
            } else {
                stale += 1;
                if stale >= 5 {
                    break;
                }
            }
        }
        report
    }

    fn batch_grads(
        &self,
        idx: &[usize],
        inputs: &[Vec<f64>],
        targets: &[Vec<f64>],
    ) -> (f64, Vec<f64>) {
        let n = idx.len() as f64;
        let out_dim = self.net.output_dim();
        accumulate_chunked(
            idx,
            self.net.n_params(),
            16,
            || Workspace::for_net(&self.net),
            |ws, &i, grads| {
                let raw = self.net.forward_cached(&inputs[i], ws).to_vec();
                let mut upstream = vec![0.0; out_dim];
                let mut loss = 0.0;
                for j in 0..out_dim {
                    let pred = self.bound * raw[j].tanh();
                    let err = pred - targets[i][j];
                    loss += err * err / n;
                    let t = raw[j].tanh();
                    upstream[j] = 2.0 * err * self.bound * (1.0 - t * t) / n;
                }
                self.net.backward(&inputs[i], ws, &upstream, grads, None);
                loss
            },
        )
    }

    fn eval_mse(&self, idx: &[usize], inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> f64 {
        let n = idx.len() as f64;
        let mut ws = Workspace::for_net(&self.net);
        idx.iter()
            .map(|&i| {
                let raw = self.net.forward_cached(&inputs[i], &mut ws);
                raw.iter()
                    .zip(&targets[i])
                    .map(|(r, t)| {
                        let p = self.bound * r.tanh();
                        (p - t) * (p - t) / n
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    /// Flat parameter dump with an architecture header, same style as the
    /// learner checkpoint.
    pub fn save(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        w.write_all(b"L2EIM001")?;
        w.write_all(&self.bound.to_le_bytes())?;
        let sizes = self.net.sizes();
        w.write_all(&(sizes.len() as u64).to_le_bytes())?;
        for &s in sizes {
            w.write_all(&(s as u64).to_le_bytes())?;
        }
        for arr in [&self.mean, &self.std] {
            for v in arr {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        for v in self.net.params() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load(r: &mut impl std::io::Read) -> std::io::Result<Self> {
        use std::io::{Error, ErrorKind};
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != b"L2EIM001" {
            return Err(Error::new(ErrorKind::InvalidData, "bad inverse-model magic"));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let bound = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let n_sizes = u64::from_le_bytes(b8) as usize;
        let mut sizes = Vec::with_capacity(n_sizes);
        for _ in 0..n_sizes {
            r.read_exact(&mut b8)?;
            sizes.push(u64::from_le_bytes(b8) as usize);
        }
        let read_vec = |r: &mut dyn std::io::Read, n: usize| -> std::io::Result<Vec<f64>> {
            let mut out = Vec::with_capacity(n);
            let mut b = [0u8; 8];
            for _ in 0..n {
                r.read_exact(&mut b)?;
                out.push(f64::from_le_bytes(b));
            }
            Ok(out)
        };
        let input_dim = sizes[0];
        let mean = read_vec(r, input_dim)?;
        let std = read_vec(r, input_dim)?;
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net = Mlp::new(sizes, &mut rng);
        let params = read_vec(r, net.n_params())?;
        net.params_mut().copy_from_slice(&params);
        Ok(InverseModel { net, mean, std, bound })
    }
}

/// Desired full state for waypoint `i`: planned positions with flat
/// orientation.
fn desired_state(plan: &Plan, i: usize) -> Vec<f64> {
    let w = plan.waypoint(i);
    vec![w[0], w[1], w[2], w[3], w[4], w[5], 0.0]
}

/// Track a plan with the inverse model: actions come from the model aimed at
/// the successor of the nearest waypoint.
pub fn im_execute(
    plan: &Plan,
    model: &InverseModel,
    env: &mut dyn Environment,
    reward: &RewardModel,
) -> RolloutResult {
    let budget = env.config().episode_length;
    let mask = reward.shaping.distance_mask.clone();
    let mut state = env.state().to_vec();
    for step in 1..=budget {
        let k = nearest_index(&state, plan, &mask);
        let action = if k + 1 < plan.len() {
            env.clamp_action(&model.predict(&state, &desired_state(plan, k + 1)))
        } else {
            vec![0.0; env.action_dim()]
        };
        let out = env.step(&action);
        state = out.state;
        if out.reward == 1.0 {
            return RolloutResult { success: true, steps: step };
        }
        if out.done {
            return RolloutResult { success: false, steps: step };
        }
    }
    RolloutResult { success: false, steps: budget }
}

/// Walks a plan as a sequence of subgoals: the active subgoal is the first
/// box waypoint at least `lookahead` ahead of the current box position along
/// the plan (the goal itself when none is), advancing once reached. The
/// subgoal index never moves backward.
pub struct SubgoalTracker {
    /// cumulative arc length of the planned box path
    cum: Vec<f64>,
    lookahead: f64,
    reach_tol: f64,
    current: usize,
}

impl SubgoalTracker {
    pub fn new(plan: &Plan) -> Self {
        let mut cum = vec![0.0];
        for i in 1..plan.len() {
            let d = dist(plan.body_position(i - 1), plan.body_position(i));
            cum.push(cum[i - 1] + d);
        }
        SubgoalTracker {
            cum,
            lookahead: 0.3,
            reach_tol: 0.1,
            current: 0,
        }
    }

    /// Current subgoal for the given achieved (box/agent) position.
    pub fn subgoal(&mut self, plan: &Plan, achieved: Vec2) -> Vec2 {
        // advance while the active subgoal is reached
        while self.current + 1 < plan.len()
            && dist(achieved, plan.body_position(self.current)) <= self.reach_tol
        {
            self.current += 1;
        }
        // nearest box waypoint to the achieved position
        let mut nearest = 0;
        let mut best = f64::INFINITY;
        for i in 0..plan.len() {
            let d = dist(achieved, plan.body_position(i));
            if d < best {
                best = d;
                nearest = i;
            }
        }
        let want = self.cum[nearest] + self.lookahead;
        let mut idx = plan.len() - 1;
        for i in nearest..plan.len() {
            if self.cum[i] >= want {
                idx = i;
                break;
            }
        }
        // monotone in plan index over the rollout
        self.current = self.current.max(idx.min(plan.len() - 1));
        if self.current >= plan.len() - 1 {
            plan.goal
        } else {
            plan.body_position(self.current)
        }
    }

    pub fn current_index(&self) -> usize {
        self.current
    }
}

/// One action from a goal-conditioned agent pursuing the tracker's subgoal.
pub fn subgoal_policy_step(
    plan: &Plan,
    state: &[f64],
    tracker: &mut SubgoalTracker,
    agent: &mut SacLearner,
    achieved: Vec2,
    deterministic: bool,
) -> (Vec<f64>, Vec2) {
    let sub = tracker.subgoal(plan, achieved);
    let mut input = state.to_vec();
    input.extend_from_slice(&sub);
    (agent.act(&input, deterministic), sub)
}

/// Assemble a learner batch item conditioned on a goal.
pub fn goal_conditioned_item(
    state: &[f64],
    action: &[f64],
    reward: f64,
    next_state: &[f64],
    goal: Vec2,
) -> BatchItem {
    let mut input = state.to_vec();
    input.extend_from_slice(&goal);
    let mut next_input = next_state.to_vec();
    next_input.extend_from_slice(&goal);
    BatchItem {
        input,
        action: action.to_vec(),
        reward,
        next_input,
        success: reward == 1.0,
    }
}
