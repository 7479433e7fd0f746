//! Plan-conditioned decision process: wraps an environment, its planner
//! family, and the shaped reward into one task sampler, and provides the
//! analytic plan encoding consumed by the policy.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::envs::{make_env, EnvConfig, EnvError, EnvId, Environment, SparseSpec, StepOut};
use crate::planners::{manhattan_plan, rrt_plan, subsample_plan, Plan, PlanError, RrtParams};
use crate::shaping::{RewardModel, ShapingConfig, ShapingError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlanMdpError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Shaping(#[from] ShapingError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("no feasible task after {0} attempts")]
    TaskSamplingExhausted(usize),
    #[error("plan does not fit task {task}: {reason}")]
    TaskMismatch { task: &'static str, reason: String },
}

const TASK_RETRIES: usize = 20;

/// Analytic injective plan encoding.
///
/// Basic pushing plans are determined by the initial and final box positions
/// (4D); obstacle plans additionally by their random intermediate (6D); maze
/// plans depend on the per-episode obstacle layout, so they are passed in
/// full (flattened waypoints, 40D).
pub fn encode_plan(plan: &Plan, task: EnvId) -> Result<Vec<f64>, PlanMdpError> {
    let mismatch = |reason: String| PlanMdpError::TaskMismatch {
        task: task.as_str(),
        reason,
    };
    match task {
        EnvId::PushBasic | EnvId::PushObstacle => {
            if plan.dim != 6 {
                return Err(mismatch(format!("waypoint dim {} != 6", plan.dim)));
            }
            let w0 = plan.waypoint(0);
            let mut latent = vec![w0[3], w0[4], plan.goal[0], plan.goal[1]];
            if task == EnvId::PushObstacle {
                let mid = plan
                    .meta
                    .intermediate
                    .ok_or_else(|| mismatch("plan lacks a recorded intermediate".into()))?;
                latent.push(mid[0]);
                latent.push(mid[1]);
            }
            Ok(latent)
        }
        EnvId::Maze => {
            if plan.dim != 2 {
                return Err(mismatch(format!("waypoint dim {} != 2", plan.dim)));
            }
            if plan.len() != task.plan_len() {
                return Err(mismatch(format!(
                    "maze plans are passed in full; got length {}",
                    plan.len()
                )));
            }
            Ok(plan.waypoints.clone())
        }
    }
}

pub struct PlanMdp {
    env: Box<dyn Environment>,
    task: EnvId,
    planner_rng: ChaCha8Rng,
    rrt: RrtParams,
    reward: RewardModel,
    plan_density: Option<usize>,
}

impl PlanMdp {
    pub fn new(
        task: EnvId,
        mut env_cfg: EnvConfig,
        sigma: f64,
        plan_density: Option<usize>,
        seed: u64,
    ) -> Result<Self, PlanMdpError> {
        env_cfg.rng_seed = seed;
        env_cfg.validate()?;
        if task == EnvId::Maze {
            if let Some(n) = plan_density {
                if n != task.plan_len() {
                    return Err(PlanMdpError::TaskMismatch {
                        task: task.as_str(),
                        reason: format!("maze plans are passed in full, density {n} unsupported"),
                    });
                }
            }
        }
        if let Some(n) = plan_density {
            if n < 2 || n > task.plan_len() {
                return Err(PlanMdpError::Plan(PlanError::BadDensity {
                    n,
                    len: task.plan_len(),
                }));
            }
        }
        let env = make_env(task, env_cfg.clone());
        let shaping = ShapingConfig::new(sigma, env.distance_mask())?;
        let reward = RewardModel::new(shaping, SparseSpec::for_env(task, &env_cfg));
        Ok(PlanMdp {
            env,
            task,
            // distinct stream from the environment's own rng
            planner_rng: ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15),
            rrt: RrtParams::default(),
            reward,
            plan_density,
        })
    }

    pub fn task(&self) -> EnvId {
        self.task
    }

    pub fn env(&self) -> &dyn Environment {
        self.env.as_ref()
    }

    pub fn env_mut(&mut self) -> &mut dyn Environment {
        self.env.as_mut()
    }

    pub fn reward_model(&self) -> &RewardModel {
        &self.reward
    }

    pub fn encoding_dim(&self) -> usize {
        self.task.encoding_dim()
    }

    /// Dimension of the policy input: state plus plan encoding.
    pub fn input_dim(&self) -> usize {
        self.task.state_dim() + self.encoding_dim()
    }

    fn plan_current(&mut self) -> Result<Plan, PlanError> {
        let state = self.env.state().to_vec();
        let goal = self.env.goal();
        match self.task {
            EnvId::PushBasic => manhattan_plan(
                &state,
                goal,
                2,
                None,
                self.env.config(),
                self.task.plan_len(),
                &mut self.planner_rng,
            ),
            EnvId::PushObstacle => {
                let obstacle = self.env.obstacles()[0];
                manhattan_plan(
                    &state,
                    goal,
                    4,
                    Some(&obstacle),
                    self.env.config(),
                    self.task.plan_len(),
                    &mut self.planner_rng,
                )
            }
            EnvId::Maze => rrt_plan(
                [state[0], state[1]],
                goal,
                self.env.obstacles(),
                self.task.plan_len(),
                &self.rrt,
                &mut self.planner_rng,
            ),
        }
    }

    /// Reset the environment, draw a goal, and plan for it. Planner
    /// infeasibility (possible in the maze) triggers a bounded resample of
    /// the whole task.
    pub fn sample_task(&mut self) -> Result<(Vec<f64>, Arc<Plan>, Arc<Vec<f64>>), PlanMdpError> {
        for _ in 0..TASK_RETRIES {
            let reset = self.env.reset();
            let plan = match self.plan_current() {
                Ok(p) => p,
                Err(PlanError::Infeasible) => continue,
                Err(e) => return Err(e.into()),
            };
            let plan = match self.plan_density {
                Some(n) if n != plan.len() => subsample_plan(&plan, n)?,
                _ => plan,
            };
            let encoding = encode_plan(&plan, self.task)?;
            return Ok((reset.state, Arc::new(plan), Arc::new(encoding)));
        }
        Err(PlanMdpError::TaskSamplingExhausted(TASK_RETRIES))
    }

    /// Step the environment but report the plan-conditioned reward; episode
    /// termination is unchanged from the underlying environment.
    pub fn shaped_step(&mut self, action: &[f64], plan: &Plan) -> StepOut {
        let state = self.env.state().to_vec();
        let out = self.env.step(action);
        let reward = self.reward.plan_reward(&state, action, &out.state, plan);
        StepOut {
            state: out.state,
            reward,
            done: out.done,
        }
    }
}
