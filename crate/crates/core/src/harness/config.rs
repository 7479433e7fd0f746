//! Flat key=value experiment configuration with section prefixes
//! (`learner.lr=0.0003`). Every key is documented in the README; unknown keys
//! are rejected so typos fail fast.

use crate::envs::{EnvConfig, EnvId};
use crate::learner::{desk_scale_hidden, full_scale_hidden, LearnerConfig};
use crate::replay::HerStrategy;

use super::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodId {
    /// Plan-conditioned learner with plan replay.
    L2e,
    /// Goal-conditioned learner with hindsight goal relabeling.
    Her,
    /// Direct plan execution, no learning.
    Plan,
    /// Plan execution through a learned inverse-dynamics model.
    PlanIm,
    /// Goal-conditioned learner pursuing planner subgoals.
    SubgoalRl,
}

impl MethodId {
    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        match s {
            "l2e" => Ok(MethodId::L2e),
            "her" => Ok(MethodId::Her),
            "plan" => Ok(MethodId::Plan),
            "plan_im" => Ok(MethodId::PlanIm),
            "subgoal_rl" => Ok(MethodId::SubgoalRl),
            other => Err(HarnessError::Config(format!("unknown method {other:?}"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            MethodId::L2e => "l2e",
            MethodId::Her => "her",
            MethodId::Plan => "plan",
            MethodId::PlanIm => "plan_im",
            MethodId::SubgoalRl => "subgoal_rl",
        }
    }

    pub fn tag(&self) -> u8 {
        match self {
            MethodId::L2e => 0,
            MethodId::Her => 1,
            MethodId::Plan => 2,
            MethodId::PlanIm => 3,
            MethodId::SubgoalRl => 4,
        }
    }

    pub fn from_tag(t: u8) -> Option<Self> {
        [
            MethodId::L2e,
            MethodId::Her,
            MethodId::Plan,
            MethodId::PlanIm,
            MethodId::SubgoalRl,
        ]
        .into_iter()
        .find(|m| m.tag() == t)
    }

    pub fn is_learned(&self) -> bool {
        matches!(self, MethodId::L2e | MethodId::Her | MethodId::SubgoalRl)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReplayStrategyCfg {
    Uniform { n: usize },
    Biased { n: usize, m: usize },
}

impl ReplayStrategyCfg {
    pub fn label(&self) -> String {
        match self {
            ReplayStrategyCfg::Uniform { n } => format!("uni_{n}"),
            ReplayStrategyCfg::Biased { n, m } => format!("bias_{n}_{m}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HerCfg {
    pub strategy: HerStrategy,
    pub k: usize,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub method: MethodId,
    pub env: EnvId,
    pub replay: ReplayStrategyCfg,
    pub her: HerCfg,
    pub sigma: f64,
    pub plan_density: Option<usize>,
    pub learner: LearnerConfig,
    pub agents: usize,
    pub eval_rollouts: usize,
    pub eval_interval: u64,
    pub total_steps: u64,
    pub seed_base: u64,
    pub warmup_steps: u64,
    pub updates_per_step: f64,
    pub buffer_capacity: usize,
    pub im_episodes: usize,
    pub save_buffer: bool,
    pub env_config: EnvConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            method: MethodId::L2e,
            env: EnvId::PushBasic,
            replay: ReplayStrategyCfg::Biased { n: 10, m: 1000 },
            her: HerCfg { strategy: HerStrategy::Future, k: 1 },
            sigma: 0.5,
            plan_density: None,
            learner: LearnerConfig::default(),
            agents: 10,
            eval_rollouts: 30,
            eval_interval: 25_000,
            total_steps: 1_000_000,
            seed_base: 0,
            warmup_steps: 10_000,
            updates_per_step: 1.0,
            buffer_capacity: 1_000_000,
            im_episodes: 400,
            save_buffer: false,
            env_config: EnvConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("line {}: expected key=value, got {raw:?}", lineno + 1))
            })?;
            cfg.apply(key.trim(), value.trim())
                .map_err(|e| HarnessError::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            v.parse().map_err(|e| format!("bad value {v:?}: {e}"))
        }
        fn flag(v: &str) -> Result<bool, String> {
            match v {
                "on" | "true" | "1" => Ok(true),
                "off" | "false" | "0" => Ok(false),
                _ => Err(format!("bad flag {v:?} (use on/off)")),
            }
        }
        match key {
            "method" => self.method = MethodId::parse(value).map_err(|e| e.to_string())?,
            "env" => self.env = EnvId::parse(value).map_err(|e| e.to_string())?,
            "replay.strategy" => {
                self.replay = match value {
                    "uniform" | "uni" => {
                        let n = match self.replay {
                            ReplayStrategyCfg::Uniform { n } | ReplayStrategyCfg::Biased { n, .. } => n,
                        };
                        ReplayStrategyCfg::Uniform { n }
                    }
                    "bias" | "biased" => {
                        let (n, m) = match self.replay {
                            ReplayStrategyCfg::Biased { n, m } => (n, m),
                            ReplayStrategyCfg::Uniform { n } => (n, 1000),
                        };
                        ReplayStrategyCfg::Biased { n, m }
                    }
                    _ => return Err(format!("bad replay strategy {value:?}")),
                }
            }
            "replay.n" => {
                let n = num(value)?;
                self.replay = match self.replay {
                    ReplayStrategyCfg::Uniform { .. } => ReplayStrategyCfg::Uniform { n },
                    ReplayStrategyCfg::Biased { m, .. } => ReplayStrategyCfg::Biased { n, m },
                };
            }
            "replay.m" => {
                let m = num(value)?;
                self.replay = match self.replay {
                    ReplayStrategyCfg::Uniform { n } => ReplayStrategyCfg::Biased { n, m },
                    ReplayStrategyCfg::Biased { n, .. } => ReplayStrategyCfg::Biased { n, m },
                };
            }
            "her.strategy" => {
                self.her.strategy = HerStrategy::parse(value)
                    .ok_or_else(|| format!("bad her strategy {value:?} (future/episode)"))?
            }
            "her.k" => self.her.k = num(value)?,
            "shaping.sigma" => self.sigma = num(value)?,
            "plan.density" => {
                self.plan_density = match value {
                    "full" => None,
                    _ => Some(num(value)?),
                }
            }
            "learner.lr" => self.learner.lr = num(value)?,
            "learner.batch" => self.learner.batch = num(value)?,
            "learner.gamma" => self.learner.gamma = num(value)?,
            "learner.polyak" => self.learner.polyak = num(value)?,
            "learner.entropy_target" => {
                self.learner.entropy_target = match value {
                    "auto" => None,
                    _ => Some(num(value)?),
                }
            }
            "learner.hidden" => {
                self.learner.hidden = match value {
                    "desk" => desk_scale_hidden(),
                    "full" => full_scale_hidden(),
                    _ => value
                        .split(',')
                        .map(|v| num::<usize>(v.trim()))
                        .collect::<Result<Vec<_>, _>>()?,
                }
            }
            "learner.alpha_init" => self.learner.alpha_init = num(value)?,
            "learner.alpha_auto" => self.learner.alpha_auto = flag(value)?,
            "run.agents" => self.agents = num(value)?,
            "run.eval_rollouts" => self.eval_rollouts = num(value)?,
            "run.eval_interval" => self.eval_interval = num(value)?,
            "run.total_steps" => self.total_steps = num(value)?,
            "run.seed" => self.seed_base = num(value)?,
            "run.warmup_steps" => self.warmup_steps = num(value)?,
            "run.updates_per_step" => self.updates_per_step = num(value)?,
            "run.buffer_capacity" => self.buffer_capacity = num(value)?,
            "run.save_buffer" => self.save_buffer = flag(value)?,
            "im.episodes" => self.im_episodes = num(value)?,
            "env.noise" => self.env_config.noise_enabled = flag(value)?,
            "env.noise_scale" => self.env_config.noise_scale = num(value)?,
            "env.maze_noise" => self.env_config.maze_noise = num(value)?,
            "env.episode_length" => self.env_config.episode_length = num(value)?,
            "env.goal_tolerance" => self.env_config.goal_tolerance = num(value)?,
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.method == MethodId::PlanIm && !self.env.is_pushing() {
            return bad("plan_im requires a pushing-family env".into());
        }
        if let ReplayStrategyCfg::Biased { n, m } = self.replay {
            if n > m {
                return bad(format!("replay needs n <= m, got n={n} m={m}"));
            }
        }
        if !(self.sigma > 0.0) {
            return bad("shaping.sigma must be positive".into());
        }
        if self.her.k == 0 && matches!(self.method, MethodId::Her | MethodId::SubgoalRl) {
            return bad("her.k must be at least 1".into());
        }
        if self.agents == 0 || self.eval_rollouts == 0 {
            return bad("run.agents and run.eval_rollouts must be positive".into());
        }
        if self.eval_interval == 0 || self.total_steps == 0 {
            return bad("run.eval_interval and run.total_steps must be positive".into());
        }
        if self.buffer_capacity == 0 {
            return bad("run.buffer_capacity must be positive".into());
        }
        if !(self.updates_per_step >= 0.0) {
            return bad("run.updates_per_step must be non-negative".into());
        }
        if let Some(n) = self.plan_density {
            if self.env == EnvId::Maze && n != self.env.plan_len() {
                return bad("maze plans are passed in full; plan.density unsupported".into());
            }
            if n < 2 || n > self.env.plan_len() {
                return bad(format!(
                    "plan.density {n} outside 2..={}",
                    self.env.plan_len()
                ));
            }
        }
        self.learner.validate().map_err(HarnessError::Config)?;
        self.env_config.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }

    /// Canonical form: every key in fixed order, one per line. Also what the
    /// config hash is computed over.
    pub fn canonical_string(&self) -> String {
        let hidden: Vec<String> = self.learner.hidden.iter().map(|h| h.to_string()).collect();
        let density = match self.plan_density {
            None => "full".to_string(),
            Some(n) => n.to_string(),
        };
        let entropy = match self.learner.entropy_target {
            None => "auto".to_string(),
            Some(v) => v.to_string(),
        };
        let (strategy, n, m) = match self.replay {
            ReplayStrategyCfg::Uniform { n } => ("uniform", n, 0),
            ReplayStrategyCfg::Biased { n, m } => ("bias", n, m),
        };
        format!(
            "method={}\nenv={}\nreplay.strategy={strategy}\nreplay.n={n}\nreplay.m={m}\n\
             her.strategy={}\nher.k={}\nshaping.sigma={}\nplan.density={density}\n\
             learner.lr={}\nlearner.batch={}\nlearner.gamma={}\nlearner.polyak={}\n\
             learner.entropy_target={entropy}\nlearner.hidden={}\nlearner.alpha_init={}\n\
             learner.alpha_auto={}\nrun.agents={}\nrun.eval_rollouts={}\nrun.eval_interval={}\n\
             run.total_steps={}\nrun.seed={}\nrun.warmup_steps={}\nrun.updates_per_step={}\n\
             run.buffer_capacity={}\nrun.save_buffer={}\nim.episodes={}\nenv.noise={}\n\
             env.noise_scale={}\nenv.maze_noise={}\nenv.episode_length={}\nenv.goal_tolerance={}\n",
            self.method.as_str(),
            self.env.as_str(),
            self.her.strategy.as_str(),
            self.her.k,
            self.sigma,
            self.learner.lr,
            self.learner.batch,
            self.learner.gamma,
            self.learner.polyak,
            hidden.join(","),
            self.learner.alpha_init,
            if self.learner.alpha_auto { "on" } else { "off" },
            self.agents,
            self.eval_rollouts,
            self.eval_interval,
            self.total_steps,
            self.seed_base,
            self.warmup_steps,
            self.updates_per_step,
            self.buffer_capacity,
            if self.save_buffer { "on" } else { "off" },
            self.im_episodes,
            if self.env_config.noise_enabled { "on" } else { "off" },
            self.env_config.noise_scale,
            self.env_config.maze_noise,
            self.env_config.episode_length,
            self.env_config.goal_tolerance,
        )
    }

    pub fn config_hash(&self) -> u64 {
        let mut h = 0xcbf29ce484222325u64;
        for b in self.canonical_string().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }

    /// Short label for output files: method, env, and strategy details.
    pub fn label(&self) -> String {
        let mut label = format!("{}_{}", self.method.as_str(), self.env.as_str());
        match self.method {
            MethodId::L2e => {
                label.push('_');
                label.push_str(&self.replay.label());
                if let Some(n) = self.plan_density {
                    label.push_str(&format!("_d{n}"));
                }
            }
            MethodId::Her | MethodId::SubgoalRl => {
                label.push_str(&format!("_{}{}", self.her.strategy.as_str(), self.her.k));
            }
            _ => {}
        }
        label
    }
}
