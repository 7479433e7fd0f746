//! Training loops. One environment plan per episode; the finished episode is
//! appended to the buffer, replay plans are drawn from the buffer (never
//! freshly planned), relabeled copies are appended after the raw episode, and
//! only then does the learner update.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, MethodId, ReplayStrategyCfg};
use super::eval::{
    eval_direct, eval_goal_conditioned, eval_im, eval_plan_conditioned, eval_subgoal,
};
use super::metrics::MetricsWriter;
use super::{mix64, save_im_checkpoint, save_learner_checkpoint, CheckpointMeta, HarnessError};
use crate::baselines::{collect_im_data, goal_conditioned_item, InverseModel, SubgoalTracker};
use crate::envs::{make_env, SparseSpec};
use crate::geom::Vec2;
use crate::learner::{BatchItem, Losses, SacLearner};
use crate::parallel::{init_thread_pool, ordered_map, ordered_tasks};
use crate::planmdp::PlanMdp;
use crate::replay::{
    biased_replay_plans, her_replay_goals, relabel_episode, uniform_replay_plans, Cond, Episode,
    RawTransition, ReplayBuffer, Transition,
};

pub const CKPT_FILE: &str = "ckpt.bin";
pub const BUFFER_FILE: &str = "buffer.bin";

#[derive(Clone, Debug)]
pub struct AgentSummary {
    pub agent: usize,
    pub seed: u64,
    pub final_success: f64,
}

#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub run_dir: PathBuf,
    pub agents: Vec<AgentSummary>,
}

impl RunArtifacts {
    pub fn mean_success(&self) -> f64 {
        if self.agents.is_empty() {
            return 0.0;
        }
        self.agents.iter().map(|a| a.final_success).sum::<f64>() / self.agents.len() as f64
    }
}

/// Train every agent of the experiment (independent seeds, disjoint output
/// directories, parallel workers) and write the resolved config next to them.
pub fn train(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunArtifacts, HarnessError> {
    init_thread_pool();
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("config.resolved"), cfg.canonical_string())?;

    let results = ordered_tasks(cfg.agents, |agent| train_single(cfg, agent, out_dir));
    let mut agents = Vec::with_capacity(results.len());
    for r in results {
        agents.push(r?);
    }
    Ok(RunArtifacts {
        run_dir: out_dir.to_path_buf(),
        agents,
    })
}

/// Train one agent; its seed is `run.seed + agent`.
pub fn train_single(
    cfg: &ExperimentConfig,
    agent: usize,
    out_dir: &Path,
) -> Result<AgentSummary, HarnessError> {
    let seed = cfg.seed_base.wrapping_add(agent as u64);
    let dir = out_dir.join(format!("agent_{agent:02}"));
    std::fs::create_dir_all(&dir)?;
    let mut metrics = MetricsWriter::create(
        &dir,
        cfg.config_hash(),
        agent,
        cfg.method.as_str(),
        cfg.env.as_str(),
    )?;
    let final_success = match cfg.method {
        MethodId::L2e => train_l2e(cfg, seed, &dir, &mut metrics)?,
        MethodId::Her => train_goal_conditioned(cfg, seed, &dir, &mut metrics, false)?,
        MethodId::SubgoalRl => train_goal_conditioned(cfg, seed, &dir, &mut metrics, true)?,
        MethodId::Plan => eval_only_plan(cfg, seed, &mut metrics, None)?,
        MethodId::PlanIm => train_plan_im(cfg, seed, &dir, &mut metrics)?,
    };
    Ok(AgentSummary {
        agent,
        seed,
        final_success,
    })
}

fn random_action(env_action_dim: usize, bound: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..env_action_dim).map(|_| rng.gen_range(-bound..=bound)).collect()
}

fn checkpoint_meta(cfg: &ExperimentConfig, steps: u64) -> CheckpointMeta {
    CheckpointMeta {
        method: cfg.method,
        env: cfg.env,
        sigma: cfg.sigma,
        plan_density: cfg.plan_density,
        steps,
    }
}

/// Uniform-with-replacement minibatch with conditioning vectors resolved.
pub fn sample_batch(buffer: &ReplayBuffer, n: usize, rng: &mut ChaCha8Rng) -> Vec<BatchItem> {
    let len = buffer.len();
    assert!(len > 0, "cannot sample from an empty buffer");
    (0..n)
        .map(|_| {
            let t = buffer.get(rng.gen_range(0..len));
            let cond: &[f64] = match t.cond {
                Cond::Plan(id) => buffer.store().encoding(id),
                Cond::Goal(ref g) => g,
            };
            let mut input = Vec::with_capacity(t.state.len() + cond.len());
            input.extend_from_slice(&t.state);
            input.extend_from_slice(cond);
            let mut next_input = Vec::with_capacity(t.next_state.len() + cond.len());
            next_input.extend_from_slice(&t.next_state);
            next_input.extend_from_slice(cond);
            BatchItem {
                input,
                action: t.action.to_vec(),
                reward: t.reward,
                next_input,
                success: t.reward == 1.0,
            }
        })
        .collect()
}

struct UpdateDriver {
    owed: f64,
    per_step: f64,
    warmup: u64,
    batch: usize,
}

impl UpdateDriver {
    fn new(cfg: &ExperimentConfig) -> Self {
        UpdateDriver {
            owed: 0.0,
            per_step: cfg.updates_per_step,
            warmup: cfg.warmup_steps,
            batch: cfg.learner.batch,
        }
    }

    fn run(
        &mut self,
        steps_total: u64,
        collected: usize,
        learner: &mut SacLearner,
        buffer: &ReplayBuffer,
        rng: &mut ChaCha8Rng,
        last: &mut Losses,
    ) -> Result<(), HarnessError> {
        if steps_total <= self.warmup || buffer.is_empty() {
            return Ok(());
        }
        self.owed += collected as f64 * self.per_step;
        while self.owed >= 1.0 {
            self.owed -= 1.0;
            let batch = sample_batch(buffer, self.batch, rng);
            *last = learner.update(&batch)?;
        }
        Ok(())
    }
}

fn train_l2e(
    cfg: &ExperimentConfig,
    seed: u64,
    dir: &Path,
    metrics: &mut MetricsWriter,
) -> Result<f64, HarnessError> {
    let mut mdp = PlanMdp::new(cfg.env, cfg.env_config.clone(), cfg.sigma, cfg.plan_density, seed)?;
    let action_dim = cfg.env.action_dim();
    let mut learner_cfg = cfg.learner.clone();
    learner_cfg.seed = mix64(seed, 1);
    let mut learner = SacLearner::new(mdp.input_dim(), action_dim, 0.1, learner_cfg);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut replay_rng = ChaCha8Rng::seed_from_u64(mix64(seed, 2));
    let mut batch_rng = ChaCha8Rng::seed_from_u64(mix64(seed, 3));
    let mut action_rng = ChaCha8Rng::seed_from_u64(mix64(seed, 4));
    let mut driver = UpdateDriver::new(cfg);
    let mut losses = Losses::default();
    let mut steps: u64 = 0;
    let mut next_eval: u64 = 0;
    let mut last_rate = 0.0;

    loop {
        while next_eval <= steps {
            last_rate = eval_plan_conditioned(cfg, &mut learner, mix64(seed, 1000 + next_eval)).rate();
            metrics.record(next_eval, last_rate, &losses)?;
            save_learner_checkpoint(&dir.join(CKPT_FILE), &checkpoint_meta(cfg, next_eval), &learner)?;
            next_eval += cfg.eval_interval;
        }
        if steps >= cfg.total_steps {
            break;
        }

        // one environment plan per episode
        let (mut state, plan, encoding) = mdp.sample_task()?;
        let mut transitions = Vec::with_capacity(cfg.env_config.episode_length);
        loop {
            let action = if steps < cfg.warmup_steps {
                random_action(action_dim, 0.1, &mut action_rng)
            } else {
                let mut input = state.clone();
                input.extend_from_slice(&encoding);
                learner.act(&input, false)
            };
            let out = mdp.shaped_step(&action, &plan);
            transitions.push(RawTransition {
                state: state.into_boxed_slice(),
                action: action.into_boxed_slice(),
                reward: out.reward,
                next_state: out.state.clone().into_boxed_slice(),
            });
            state = out.state;
            steps += 1;
            if out.done || steps >= cfg.total_steps {
                break;
            }
        }
        let collected = transitions.len();
        let episode = Episode {
            transitions,
            plan,
            encoding,
        };
        buffer.push_episode(&episode);

        let replay_ids = match cfg.replay {
            ReplayStrategyCfg::Uniform { n } => uniform_replay_plans(&buffer, n, &mut replay_rng),
            ReplayStrategyCfg::Biased { n, m } => biased_replay_plans(
                &buffer,
                &episode.transitions,
                n,
                m,
                mdp.reward_model(),
                &mut replay_rng,
            ),
        };
        // pin the drawn plans so ring eviction cannot free them mid-relabel
        buffer.pin_plans(&replay_ids);
        let replay_plans: Vec<(u32, Arc<crate::planners::Plan>)> = replay_ids
            .iter()
            .map(|&id| (id, buffer.store().plan(id).clone()))
            .collect();
        let reward_model = mdp.reward_model().clone();
        let relabeled: Vec<Vec<RawTransition>> = ordered_map(&replay_plans, |(_, plan)| {
            relabel_episode(&episode.transitions, plan, &reward_model)
        });
        for ((id, _), batch) in replay_plans.iter().zip(relabeled) {
            for t in batch {
                buffer.push(Transition {
                    state: t.state,
                    action: t.action,
                    reward: t.reward,
                    next_state: t.next_state,
                    cond: Cond::Plan(*id),
                });
            }
        }
        buffer.unpin_plans(&replay_ids);

        if let Err(e) = driver.run(steps, collected, &mut learner, &buffer, &mut batch_rng, &mut losses)
        {
            save_learner_checkpoint(&dir.join(CKPT_FILE), &checkpoint_meta(cfg, steps), &learner)?;
            return Err(HarnessError::Halted(format!("{e} (checkpoint saved)")));
        }
    }

    save_learner_checkpoint(&dir.join(CKPT_FILE), &checkpoint_meta(cfg, cfg.total_steps), &learner)?;
    if cfg.save_buffer {
        let mut w = BufWriter::new(File::create(dir.join(BUFFER_FILE))?);
        buffer.save(&mut w)?;
    }
    Ok(last_rate)
}

fn train_goal_conditioned(
    cfg: &ExperimentConfig,
    seed: u64,
    dir: &Path,
    metrics: &mut MetricsWriter,
    subgoals: bool,
) -> Result<f64, HarnessError> {
    // the subgoal variant needs the planner, the plain one only the env
    let mut mdp = PlanMdp::new(cfg.env, cfg.env_config.clone(), cfg.sigma, cfg.plan_density, seed)?;
    let sparse = SparseSpec::for_env(cfg.env, &cfg.env_config);
    let action_dim = cfg.env.action_dim();
    let state_dim = cfg.env.state_dim();
    let mut learner_cfg = cfg.learner.clone();
    learner_cfg.seed = mix64(seed, 1);
    let mut learner = SacLearner::new(state_dim + 2, action_dim, 0.1, learner_cfg);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut her_rng = ChaCha8Rng::seed_from_u64(mix64(seed, 2));
    let mut batch_rng = ChaCha8Rng::seed_from_u64(mix64(seed, 3));
    let mut action_rng = ChaCha8Rng::seed_from_u64(mix64(seed, 4));
    let mut driver = UpdateDriver::new(cfg);
    let mut losses = Losses::default();
    let mut steps: u64 = 0;
    let mut next_eval: u64 = 0;
    let mut last_rate = 0.0;

    loop {
        while next_eval <= steps {
            let eval_seed = mix64(seed, 1000 + next_eval);
            last_rate = if subgoals {
                eval_subgoal(cfg, &mut learner, eval_seed).rate()
            } else {
                eval_goal_conditioned(cfg, &mut learner, eval_seed).rate()
            };
            metrics.record(next_eval, last_rate, &losses)?;
            save_learner_checkpoint(&dir.join(CKPT_FILE), &checkpoint_meta(cfg, next_eval), &learner)?;
            next_eval += cfg.eval_interval;
        }
        if steps >= cfg.total_steps {
            break;
        }

        let (mut state, plan, goal, mut tracker) = if subgoals {
            let (s, p, _) = mdp.sample_task()?;
            let goal = p.goal;
            let tracker = SubgoalTracker::new(&p);
            (s, Some(p), goal, Some(tracker))
        } else {
            let reset = mdp.env_mut().reset();
            (reset.state, None, reset.goal, None)
        };

        let mut transitions = Vec::with_capacity(cfg.env_config.episode_length);
        let mut conds: Vec<Vec2> = Vec::with_capacity(cfg.env_config.episode_length);
        loop {
            let cond_goal = match (&plan, &mut tracker) {
                (Some(p), Some(t)) => t.subgoal(p, sparse.achieved(&state)),
                _ => goal,
            };
            let action = if steps < cfg.warmup_steps {
                random_action(action_dim, 0.1, &mut action_rng)
            } else {
                let mut input = state.clone();
                input.extend_from_slice(&cond_goal);
                learner.act(&input, false)
            };
            let out = mdp.env_mut().step(&action);
            let reward = if subgoals {
                sparse.eval(&out.state, cond_goal)
            } else {
                out.reward
            };
            transitions.push(RawTransition {
                state: state.into_boxed_slice(),
                action: action.into_boxed_slice(),
                reward,
                next_state: out.state.clone().into_boxed_slice(),
            });
            conds.push(cond_goal);
            state = out.state;
            steps += 1;
            if out.done || steps >= cfg.total_steps {
                break;
            }
        }
        let collected = transitions.len();

        for (t, g) in transitions.iter().zip(&conds) {
            buffer.push(Transition {
                state: t.state.clone(),
                action: t.action.clone(),
                reward: t.reward,
                next_state: t.next_state.clone(),
                cond: Cond::Goal(*g),
            });
        }
        let replay_goals = her_replay_goals(
            &transitions,
            cfg.her.strategy,
            cfg.her.k,
            |s| sparse.achieved(s),
            &mut her_rng,
        );
        for (t, goals) in transitions.iter().zip(replay_goals) {
            for g in goals {
                buffer.push(Transition {
                    state: t.state.clone(),
                    action: t.action.clone(),
                    reward: sparse.eval(&t.next_state, g),
                    next_state: t.next_state.clone(),
                    cond: Cond::Goal(g),
                });
            }
        }

        if let Err(e) = driver.run(steps, collected, &mut learner, &buffer, &mut batch_rng, &mut losses)
        {
            save_learner_checkpoint(&dir.join(CKPT_FILE), &checkpoint_meta(cfg, steps), &learner)?;
            return Err(HarnessError::Halted(format!("{e} (checkpoint saved)")));
        }
    }

    save_learner_checkpoint(&dir.join(CKPT_FILE), &checkpoint_meta(cfg, cfg.total_steps), &learner)?;
    if cfg.save_buffer {
        let mut w = BufWriter::new(File::create(dir.join(BUFFER_FILE))?);
        buffer.save(&mut w)?;
    }
    Ok(last_rate)
}

/// Direct plan execution needs no training; evaluate at every boundary so the
/// curves align with the learned methods.
fn eval_only_plan(
    cfg: &ExperimentConfig,
    seed: u64,
    metrics: &mut MetricsWriter,
    model: Option<&InverseModel>,
) -> Result<f64, HarnessError> {
    let losses = Losses::default();
    let mut last_rate = 0.0;
    let mut next_eval: u64 = 0;
    while next_eval <= cfg.total_steps {
        let eval_seed = mix64(seed, 1000 + next_eval);
        last_rate = match model {
            None => eval_direct(cfg, eval_seed).rate(),
            Some(m) => eval_im(cfg, m, eval_seed).rate(),
        };
        metrics.record(next_eval, last_rate, &losses)?;
        next_eval += cfg.eval_interval;
    }
    Ok(last_rate)
}

fn train_plan_im(
    cfg: &ExperimentConfig,
    seed: u64,
    dir: &Path,
    metrics: &mut MetricsWriter,
) -> Result<f64, HarnessError> {
    let mut env_cfg = cfg.env_config.clone();
    env_cfg.rng_seed = seed;
    let mut env = make_env(cfg.env, env_cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed, 5));
    let data = collect_im_data(env.as_mut(), cfg.im_episodes, &mut rng);
    let mut model = InverseModel::new(cfg.env.state_dim(), cfg.env.action_dim(), 0.1, mix64(seed, 6));
    let report = model.train(&data, 60, cfg.learner.batch, 1e-3, &mut rng);
    std::fs::write(
        dir.join("im_training.txt"),
        format!(
            "samples={} box_directed={} epochs={} train_mse={} val_mse={}\n",
            data.total, data.box_directed, report.epochs_run, report.train_mse, report.val_mse
        ),
    )?;
    save_im_checkpoint(&dir.join(CKPT_FILE), &checkpoint_meta(cfg, data.total as u64), &model)?;
    eval_only_plan(cfg, seed, metrics, Some(&model))
}

/// Assemble a goal-conditioned batch item (re-exported convenience used by
/// tests).
pub fn goal_item(state: &[f64], action: &[f64], reward: f64, next_state: &[f64], goal: Vec2) -> BatchItem {
    goal_conditioned_item(state, action, reward, next_state, goal)
}
