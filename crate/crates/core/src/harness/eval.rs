//! Evaluation protocol: reset to fresh random tasks, run the deterministic
//! policy until the goal is reached or the episode ends, and record one
//! success flag per rollout.

use std::path::Path;

use super::config::{ExperimentConfig, MethodId};
use super::{load_checkpoint, HarnessError, LoadedPolicy};
use crate::baselines::{direct_execute, im_execute, InverseModel, SubgoalTracker};
use crate::envs::SparseSpec;
use crate::learner::SacLearner;
use crate::planmdp::PlanMdp;

#[derive(Clone, Debug, Default)]
pub struct EvalReport {
    pub successes: Vec<bool>,
}

impl EvalReport {
    pub fn rate(&self) -> f64 {
        if self.successes.is_empty() {
            return 0.0;
        }
        self.successes.iter().filter(|&&s| s).count() as f64 / self.successes.len() as f64
    }
}

fn eval_mdp(cfg: &ExperimentConfig, seed: u64) -> Result<PlanMdp, HarnessError> {
    Ok(PlanMdp::new(
        cfg.env,
        cfg.env_config.clone(),
        cfg.sigma,
        cfg.plan_density,
        seed,
    )?)
}

/// Plan-conditioned policy: success is the sparse goal check of the task the
/// plan was created for.
pub fn eval_plan_conditioned(
    cfg: &ExperimentConfig,
    learner: &mut SacLearner,
    seed: u64,
) -> EvalReport {
    let mut mdp = eval_mdp(cfg, seed).expect("eval task construction");
    let mut successes = Vec::with_capacity(cfg.eval_rollouts);
    for _ in 0..cfg.eval_rollouts {
        let (mut state, plan, encoding) = match mdp.sample_task() {
            Ok(t) => t,
            Err(_) => {
                successes.push(false);
                continue;
            }
        };
        let mut success = false;
        loop {
            let mut input = state.clone();
            input.extend_from_slice(&encoding);
            let action = learner.act(&input, true);
            let out = mdp.env_mut().step(&action);
            state = out.state;
            if out.reward == 1.0 {
                success = true;
            }
            let _ = plan.as_ref();
            if out.done {
                break;
            }
        }
        successes.push(success);
    }
    EvalReport { successes }
}

/// Goal-conditioned policy on the raw environment.
pub fn eval_goal_conditioned(
    cfg: &ExperimentConfig,
    learner: &mut SacLearner,
    seed: u64,
) -> EvalReport {
    let mut env_cfg = cfg.env_config.clone();
    env_cfg.rng_seed = seed;
    let mut env = crate::envs::make_env(cfg.env, env_cfg);
    let mut successes = Vec::with_capacity(cfg.eval_rollouts);
    for _ in 0..cfg.eval_rollouts {
        let reset = env.reset();
        let mut state = reset.state;
        let mut success = false;
        loop {
            let mut input = state.clone();
            input.extend_from_slice(&reset.goal);
            let action = learner.act(&input, true);
            let out = env.step(&action);
            state = out.state;
            if out.reward == 1.0 {
                success = true;
            }
            if out.done {
                break;
            }
        }
        successes.push(success);
    }
    EvalReport { successes }
}

/// Goal-conditioned policy walking planner subgoals; success is still the
/// episode goal.
pub fn eval_subgoal(cfg: &ExperimentConfig, learner: &mut SacLearner, seed: u64) -> EvalReport {
    let mut mdp = eval_mdp(cfg, seed).expect("eval task construction");
    let sparse = SparseSpec::for_env(cfg.env, &cfg.env_config);
    let mut successes = Vec::with_capacity(cfg.eval_rollouts);
    for _ in 0..cfg.eval_rollouts {
        let (mut state, plan, _) = match mdp.sample_task() {
            Ok(t) => t,
            Err(_) => {
                successes.push(false);
                continue;
            }
        };
        let mut tracker = SubgoalTracker::new(&plan);
        let mut success = false;
        loop {
            let sub = tracker.subgoal(&plan, sparse.achieved(&state));
            let mut input = state.clone();
            input.extend_from_slice(&sub);
            let action = learner.act(&input, true);
            let out = mdp.env_mut().step(&action);
            state = out.state;
            if out.reward == 1.0 {
                success = true;
            }
            if out.done {
                break;
            }
        }
        successes.push(success);
    }
    EvalReport { successes }
}

/// Open-loop plan tracking.
pub fn eval_direct(cfg: &ExperimentConfig, seed: u64) -> EvalReport {
    let mut mdp = eval_mdp(cfg, seed).expect("eval task construction");
    let mut successes = Vec::with_capacity(cfg.eval_rollouts);
    for _ in 0..cfg.eval_rollouts {
        match mdp.sample_task() {
            Ok((_, plan, _)) => {
                let reward = mdp.reward_model().clone();
                let result = direct_execute(&plan, mdp.env_mut(), &reward);
                successes.push(result.success);
            }
            Err(_) => successes.push(false),
        }
    }
    EvalReport { successes }
}

/// Plan tracking through the inverse model.
pub fn eval_im(cfg: &ExperimentConfig, model: &InverseModel, seed: u64) -> EvalReport {
    let mut mdp = eval_mdp(cfg, seed).expect("eval task construction");
    let mut successes = Vec::with_capacity(cfg.eval_rollouts);
    for _ in 0..cfg.eval_rollouts {
        match mdp.sample_task() {
            Ok((_, plan, _)) => {
                let reward = mdp.reward_model().clone();
                let result = im_execute(&plan, model, mdp.env_mut(), &reward);
                successes.push(result.success);
            }
            Err(_) => successes.push(false),
        }
    }
    EvalReport { successes }
}

/// Evaluate a checkpoint file: rebuild the task from its header and run the
/// stored policy for `episodes` fresh rollouts.
pub fn evaluate_checkpoint(
    ckpt: &Path,
    episodes: usize,
    seed: u64,
) -> Result<(EvalReport, MethodId), HarnessError> {
    let (meta, policy) = load_checkpoint(ckpt)?;
    let mut cfg = ExperimentConfig {
        method: meta.method,
        env: meta.env,
        sigma: meta.sigma,
        plan_density: meta.plan_density,
        eval_rollouts: episodes,
        ..ExperimentConfig::default()
    };
    cfg.env_config.rng_seed = seed;
    let report = match policy {
        LoadedPolicy::Learner(mut learner) => match meta.method {
            MethodId::L2e => eval_plan_conditioned(&cfg, &mut learner, seed),
            MethodId::Her => eval_goal_conditioned(&cfg, &mut learner, seed),
            MethodId::SubgoalRl => eval_subgoal(&cfg, &mut learner, seed),
            _ => {
                return Err(HarnessError::Config(
                    "checkpoint method does not match a learner policy".into(),
                ))
            }
        },
        LoadedPolicy::Inverse(model) => eval_im(&cfg, &model, seed),
    };
    Ok((report, meta.method))
}
