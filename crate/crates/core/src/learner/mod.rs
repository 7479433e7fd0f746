//! Off-policy soft actor-critic over concatenated (state, conditioning)
//! inputs. The conditioning vector is a plan encoding or a goal; the learner
//! itself is agnostic to which. Actor and twin critics are plain
//! feed-forward nets with manual reverse-mode differentiation, so every loss
//! head can be checked against finite differences.

pub mod mlp;

pub use mlp::{Adam, Mlp, Workspace};

use std::io::{self, Read, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::parallel::accumulate_chunked;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("non-finite {quantity} at update {update}")]
    NonFinite { quantity: &'static str, update: u64 },
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt learner checkpoint: {0}")]
    Corrupt(String),
}

const LOG_STD_MIN: f64 = -20.0;
const LOG_STD_MAX: f64 = 2.0;
const LN_2PI: f64 = 1.8378770664093453;
/// Batch rows per gradient-accumulation chunk (fixed so results do not
/// depend on the worker count).
const GRAD_CHUNK: usize = 16;

#[derive(Clone, Debug)]
pub struct LearnerConfig {
    pub lr: f64,
    pub batch: usize,
    pub gamma: f64,
    pub polyak: f64,
    /// Entropy target; defaults to minus the action dimension.
    pub entropy_target: Option<f64>,
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
    pub alpha_init: f64,
    /// Auto-tune the entropy temperature toward the target.
    pub alpha_auto: bool,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            lr: 0.0003,
            batch: 256,
            gamma: 0.99,
            polyak: 0.005,
            entropy_target: None,
            hidden: desk_scale_hidden(),
            alpha_init: 1.0,
            alpha_auto: true,
            seed: 0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.lr > 0.0) {
            return Err("lr must be positive".into());
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return Err("gamma must lie in [0, 1)".into());
        }
        if !(self.polyak > 0.0 && self.polyak < 1.0) {
            return Err("polyak must lie in (0, 1)".into());
        }
        if self.batch == 0 {
            return Err("batch must be positive".into());
        }
        if self.hidden.is_empty() {
            return Err("need at least one hidden layer".into());
        }
        Ok(())
    }
}

/// Hidden widths decreasing geometrically from 256 to 64 over four layers;
/// small enough to train on a CPU.
pub fn desk_scale_hidden() -> Vec<usize> {
    vec![256, 161, 102, 64]
}

/// Hidden widths decreasing geometrically from 1024 to 64 over six layers.
pub fn full_scale_hidden() -> Vec<usize> {
    vec![1024, 588, 338, 194, 111, 64]
}

/// One training example with resolved conditioning.
#[derive(Clone, Debug)]
pub struct BatchItem {
    /// state ‖ conditioning
    pub input: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    /// next state ‖ same conditioning
    pub next_input: Vec<f64>,
    /// Success terminals stop bootstrapping; timeouts do not.
    pub success: bool,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Losses {
    pub critic1: f64,
    pub critic2: f64,
    pub actor: f64,
    pub alpha: f64,
    pub alpha_value: f64,
}

/// Frozen exploration noise for one update, kept explicit so losses are pure
/// functions of (parameters, batch, noise) and finite differences apply.
#[derive(Clone, Debug)]
pub struct UpdateNoise {
    /// Standard-normal draws for next-state actions, batch-major.
    pub next_eps: Vec<f64>,
    /// Standard-normal draws for the reparameterized current actions.
    pub cur_eps: Vec<f64>,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// log(1 - tanh(u)^2), numerically stable for large |u|.
fn log1m_tanh2(u: f64) -> f64 {
    2.0 * (std::f64::consts::LN_2 - u - softplus(-2.0 * u))
}

pub struct SacLearner {
    cfg: LearnerConfig,
    input_dim: usize,
    action_dim: usize,
    action_bound: f64,
    actor: Mlp,
    critic1: Mlp,
    critic2: Mlp,
    target1: Mlp,
    target2: Mlp,
    log_alpha: f64,
    opt_actor: Adam,
    opt_critic1: Adam,
    opt_critic2: Adam,
    opt_alpha: Adam,
    rng: ChaCha8Rng,
    updates: u64,
}

impl SacLearner {
    pub fn new(input_dim: usize, action_dim: usize, action_bound: f64, cfg: LearnerConfig) -> Self {
        cfg.validate().expect("invalid learner config");
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut actor_sizes = vec![input_dim];
        actor_sizes.extend_from_slice(&cfg.hidden);
        actor_sizes.push(2 * action_dim);
        let mut critic_sizes = vec![input_dim + action_dim];
        critic_sizes.extend_from_slice(&cfg.hidden);
        critic_sizes.push(1);

        let actor = Mlp::new(actor_sizes, &mut rng);
        let critic1 = Mlp::new(critic_sizes.clone(), &mut rng);
        let critic2 = Mlp::new(critic_sizes, &mut rng);
        let target1 = critic1.clone();
        let target2 = critic2.clone();
        let log_alpha = cfg.alpha_init.max(1e-12).ln();
        SacLearner {
            opt_actor: Adam::new(cfg.lr, actor.n_params()),
            opt_critic1: Adam::new(cfg.lr, critic1.n_params()),
            opt_critic2: Adam::new(cfg.lr, critic2.n_params()),
            opt_alpha: Adam::new(cfg.lr, 1),
            input_dim,
            action_dim,
            action_bound,
            actor,
            critic1,
            critic2,
            target1,
            target2,
            log_alpha,
            rng,
            updates: 0,
            cfg,
        }
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.cfg
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn action_bound(&self) -> f64 {
        self.action_bound
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    pub fn set_alpha(&mut self, alpha: f64) {
        self.log_alpha = alpha.max(1e-300).ln();
    }

    pub fn set_log_alpha(&mut self, log_alpha: f64) {
        self.log_alpha = log_alpha;
    }

    fn entropy_target(&self) -> f64 {
        self.cfg.entropy_target.unwrap_or(-(self.action_dim as f64))
    }

    fn actor_outputs(&self, ws_out: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<bool>) {
        let mean = ws_out[..self.action_dim].to_vec();
        let mut log_std = Vec::with_capacity(self.action_dim);
        let mut clamped = Vec::with_capacity(self.action_dim);
        for &raw in &ws_out[self.action_dim..] {
            let c = raw.clamp(LOG_STD_MIN, LOG_STD_MAX);
            clamped.push(c != raw);
            log_std.push(c);
        }
        (mean, log_std, clamped)
    }

    /// Squashed-Gaussian action and its log-probability for one input given
    /// frozen standard-normal draws.
    fn policy_sample(&self, input: &[f64], eps: &[f64], ws: &mut Workspace) -> (Vec<f64>, f64) {
        self.actor.forward_cached(input, ws);
        let (mean, log_std, _) = self.actor_outputs(ws.output());
        let mut action = Vec::with_capacity(self.action_dim);
        let mut log_pi = 0.0;
        for j in 0..self.action_dim {
            let std = log_std[j].exp();
            let u = mean[j] + std * eps[j];
            let t = u.tanh();
            action.push(self.action_bound * t);
            log_pi += -0.5 * eps[j] * eps[j] - log_std[j] - 0.5 * LN_2PI;
            log_pi -= log1m_tanh2(u) + self.action_bound.ln();
        }
        (action, log_pi)
    }

    /// Action for a (state ‖ conditioning) input. Stochastic actions are
    /// tanh-squashed Gaussian samples scaled to the bound; deterministic
    /// actions squash the mean. Components always lie within the bound.
    pub fn act(&mut self, input: &[f64], deterministic: bool) -> Vec<f64> {
        assert!(
            input.iter().all(|v| v.is_finite()),
            "policy input must be finite"
        );
        let out = self.actor.forward(input);
        let (mean, log_std, _) = self.actor_outputs(&out);
        (0..self.action_dim)
            .map(|j| {
                let u = if deterministic {
                    mean[j]
                } else {
                    let eps: f64 = self.rng.sample(StandardNormal);
                    mean[j] + log_std[j].exp() * eps
                };
                self.action_bound * u.tanh()
            })
            .collect()
    }

    pub fn draw_noise(&mut self, batch_len: usize) -> UpdateNoise {
        let n = batch_len * self.action_dim;
        UpdateNoise {
            next_eps: (0..n).map(|_| self.rng.sample(StandardNormal)).collect(),
            cur_eps: (0..n).map(|_| self.rng.sample(StandardNormal)).collect(),
        }
    }

    /// Critic regression targets: `r + gamma (min target-Q - alpha log pi)` on
    /// the next action sampled from the current actor; plain `r` past success
    /// terminals.
    pub fn compute_targets(&self, batch: &[BatchItem], noise: &UpdateNoise) -> Vec<f64> {
        let alpha = self.alpha();
        let mut ws_actor = Workspace::for_net(&self.actor);
        let mut ws_t1 = Workspace::for_net(&self.target1);
        let mut ws_t2 = Workspace::for_net(&self.target2);
        let mut joined = vec![0.0; self.input_dim + self.action_dim];
        batch
            .iter()
            .enumerate()
            .map(|(i, item)| {
                if item.success {
                    return item.reward;
                }
                let eps = &noise.next_eps[i * self.action_dim..(i + 1) * self.action_dim];
                let (next_action, log_pi) =
                    self.policy_sample(&item.next_input, eps, &mut ws_actor);
                joined[..self.input_dim].copy_from_slice(&item.next_input);
                joined[self.input_dim..].copy_from_slice(&next_action);
                let q1 = self.target1.forward_cached(&joined, &mut ws_t1)[0];
                let q2 = self.target2.forward_cached(&joined, &mut ws_t2)[0];
                item.reward + self.cfg.gamma * (q1.min(q2) - alpha * log_pi)
            })
            .collect()
    }

    fn critic(&self, which: usize) -> &Mlp {
        if which == 0 {
            &self.critic1
        } else {
            &self.critic2
        }
    }

    /// Mean squared error of one critic against fixed targets.
    pub fn critic_loss(&self, which: usize, batch: &[BatchItem], targets: &[f64]) -> f64 {
        let net = self.critic(which);
        let mut ws = Workspace::for_net(net);
        let mut joined = vec![0.0; self.input_dim + self.action_dim];
        let n = batch.len() as f64;
        batch
            .iter()
            .zip(targets)
            .map(|(item, &y)| {
                joined[..self.input_dim].copy_from_slice(&item.input);
                joined[self.input_dim..].copy_from_slice(&item.action);
                let q = net.forward_cached(&joined, &mut ws)[0];
                (q - y) * (q - y) / n
            })
            .sum()
    }

    /// Loss and parameter gradients of one critic head.
    pub fn critic_grads(
        &self,
        which: usize,
        batch: &[BatchItem],
        targets: &[f64],
    ) -> (f64, Vec<f64>) {
        let net = self.critic(which);
        let n = batch.len() as f64;
        let items: Vec<(usize, &BatchItem)> = batch.iter().enumerate().collect();
        accumulate_chunked(
            &items,
            net.n_params(),
            GRAD_CHUNK,
            || {
                (
                    Workspace::for_net(net),
                    vec![0.0; self.input_dim + self.action_dim],
                )
            },
            |(ws, joined), (i, item), grads| {
                joined[..self.input_dim].copy_from_slice(&item.input);
                joined[self.input_dim..].copy_from_slice(&item.action);
                let q = net.forward_cached(joined, ws)[0];
                let y = targets[*i];
                let upstream = [2.0 * (q - y) / n];
                net.backward(joined, ws, &upstream, grads, None);
                (q - y) * (q - y) / n
            },
        )
    }

    /// Actor objective: `mean(alpha log pi - min(Q1, Q2))` on reparameterized
    /// actions.
    pub fn actor_loss(&self, batch: &[BatchItem], noise: &UpdateNoise) -> f64 {
        let alpha = self.alpha();
        let mut ws_actor = Workspace::for_net(&self.actor);
        let mut ws_c1 = Workspace::for_net(&self.critic1);
        let mut ws_c2 = Workspace::for_net(&self.critic2);
        let mut joined = vec![0.0; self.input_dim + self.action_dim];
        let n = batch.len() as f64;
        batch
            .iter()
            .enumerate()
            .map(|(i, item)| {
                let eps = &noise.cur_eps[i * self.action_dim..(i + 1) * self.action_dim];
                let (action, log_pi) = self.policy_sample(&item.input, eps, &mut ws_actor);
                joined[..self.input_dim].copy_from_slice(&item.input);
                joined[self.input_dim..].copy_from_slice(&action);
                let q1 = self.critic1.forward_cached(&joined, &mut ws_c1)[0];
                let q2 = self.critic2.forward_cached(&joined, &mut ws_c2)[0];
                (alpha * log_pi - q1.min(q2)) / n
            })
            .sum()
    }

    /// Actor loss, its parameter gradients, and the batch-mean log-probability
    /// (reused by the temperature update). The mean log-probability rides in
    /// an extra accumulator slot appended to the gradient buffer.
    pub fn actor_grads(&self, batch: &[BatchItem], noise: &UpdateNoise) -> (f64, Vec<f64>, f64) {
        let alpha = self.alpha();
        let n = batch.len() as f64;
        let n_params = self.actor.n_params();
        let items: Vec<(usize, &BatchItem)> = batch.iter().enumerate().collect();
        struct Scratch {
            ws_actor: Workspace,
            ws_critic: Workspace,
            joined: Vec<f64>,
            input_grad: Vec<f64>,
            grad_sink: Vec<f64>,
        }
        let (loss, mut grads) = accumulate_chunked(
            &items,
            n_params + 1,
            GRAD_CHUNK,
            || Scratch {
                ws_actor: Workspace::for_net(&self.actor),
                ws_critic: Workspace::for_net(&self.critic1),
                joined: vec![0.0; self.input_dim + self.action_dim],
                input_grad: vec![0.0; self.input_dim + self.action_dim],
                grad_sink: vec![0.0; self.critic1.n_params()],
            },
            |sc, (i, item), grads| {
                let eps = &noise.cur_eps[i * self.action_dim..(i + 1) * self.action_dim];
                self.actor.forward_cached(&item.input, &mut sc.ws_actor);
                let (mean, log_std, clamped) = self.actor_outputs(sc.ws_actor.output());

                let mut log_pi = 0.0;
                let mut tanh_u = vec![0.0; self.action_dim];
                let mut stds = vec![0.0; self.action_dim];
                sc.joined[..self.input_dim].copy_from_slice(&item.input);
                for j in 0..self.action_dim {
                    let std = log_std[j].exp();
                    let u = mean[j] + std * eps[j];
                    let t = u.tanh();
                    stds[j] = std;
                    tanh_u[j] = t;
                    sc.joined[self.input_dim + j] = self.action_bound * t;
                    log_pi += -0.5 * eps[j] * eps[j] - log_std[j] - 0.5 * LN_2PI;
                    log_pi -= log1m_tanh2(u) + self.action_bound.ln();
                }

                let q1 = self.critic1.forward_cached(&sc.joined, &mut sc.ws_critic)[0];
                let q2 = self.critic2.forward(&sc.joined)[0];
                // differentiate through the critic attaining the min
                let (qmin, min_net) = if q1 <= q2 {
                    (q1, &self.critic1)
                } else {
                    (q2, &self.critic2)
                };
                if !std::ptr::eq(min_net, &self.critic1) {
                    min_net.forward_cached(&sc.joined, &mut sc.ws_critic);
                }
                // parameter gradients of the critic are discarded here; only
                // the input gradient w.r.t. the action is needed
                min_net.backward(
                    &sc.joined,
                    &sc.ws_critic,
                    &[1.0],
                    &mut sc.grad_sink,
                    Some(&mut sc.input_grad),
                );

                let mut upstream = vec![0.0; 2 * self.action_dim];
                for j in 0..self.action_dim {
                    let dq_da = sc.input_grad[self.input_dim + j];
                    let da_du = self.action_bound * (1.0 - tanh_u[j] * tanh_u[j]);
                    let dlogpi_du = 2.0 * tanh_u[j];
                    // d/dmean: u shifts one-to-one
                    upstream[j] = (alpha * dlogpi_du - dq_da * da_du) / n;
                    // d/dlog_std: u shifts by std * eps, plus the -log_std term
                    let du_dls = stds[j] * eps[j];
                    let mut g = (alpha * (dlogpi_du * du_dls - 1.0) - dq_da * da_du * du_dls) / n;
                    if clamped[j] {
                        g = 0.0;
                    }
                    upstream[self.action_dim + j] = g;
                }
                self.actor
                    .backward(&item.input, &sc.ws_actor, &upstream, &mut grads[..n_params], None);
                grads[n_params] += log_pi / n;

                (alpha * log_pi - qmin) / n
            },
        );
        let mean_logp = grads.pop().expect("log-probability slot");
        (loss, grads, mean_logp)
    }

    /// Temperature objective `-log_alpha * mean(log pi + target)`.
    pub fn alpha_loss(&self, mean_logp: f64) -> f64 {
        -self.log_alpha * (mean_logp + self.entropy_target())
    }

    pub fn log_alpha(&self) -> f64 {
        self.log_alpha
    }

    /// One gradient step on critics, actor, and temperature, followed by the
    /// target update. Noise is drawn from the learner's rng; see
    /// [`SacLearner::update_with_noise`] for the deterministic core.
    pub fn update(&mut self, batch: &[BatchItem]) -> Result<Losses, LearnerError> {
        assert!(!batch.is_empty(), "batch must be non-empty");
        let noise = self.draw_noise(batch.len());
        self.update_with_noise(batch, &noise)
    }

    pub fn update_with_noise(
        &mut self,
        batch: &[BatchItem],
        noise: &UpdateNoise,
    ) -> Result<Losses, LearnerError> {
        let targets = self.compute_targets(batch, noise);
        let (c1_loss, c1_grads) = self.critic_grads(0, batch, &targets);
        let (c2_loss, c2_grads) = self.critic_grads(1, batch, &targets);
        self.opt_critic1.step(self.critic1.params_mut(), &c1_grads);
        self.opt_critic2.step(self.critic2.params_mut(), &c2_grads);

        let (actor_loss, actor_grads, mean_logp) = self.actor_grads(batch, noise);
        self.opt_actor.step(self.actor.params_mut(), &actor_grads);

        let alpha_loss = self.alpha_loss(mean_logp);
        if self.cfg.alpha_auto {
            let grad = [-(mean_logp + self.entropy_target())];
            let mut la = [self.log_alpha];
            self.opt_alpha.step(&mut la, &grad);
            self.log_alpha = la[0];
        }

        self.target1.polyak_toward(&self.critic1, self.cfg.polyak);
        self.target2.polyak_toward(&self.critic2, self.cfg.polyak);
        self.updates += 1;

        let losses = Losses {
            critic1: c1_loss,
            critic2: c2_loss,
            actor: actor_loss,
            alpha: alpha_loss,
            alpha_value: self.alpha(),
        };
        for (v, name) in [
            (losses.critic1, "critic1 loss"),
            (losses.critic2, "critic2 loss"),
            (losses.actor, "actor loss"),
            (losses.alpha, "temperature loss"),
        ] {
            if !v.is_finite() {
                return Err(LearnerError::NonFinite {
                    quantity: name,
                    update: self.updates,
                });
            }
        }
        Ok(losses)
    }

    /// Mean live-critic value of a (input, action) pair; diagnostic.
    pub fn q_value(&self, input: &[f64], action: &[f64]) -> f64 {
        let mut joined = Vec::with_capacity(self.input_dim + self.action_dim);
        joined.extend_from_slice(input);
        joined.extend_from_slice(action);
        let q1 = self.critic1.forward(&joined)[0];
        let q2 = self.critic2.forward(&joined)[0];
        0.5 * (q1 + q2)
    }

    pub fn actor_net(&self) -> &Mlp {
        &self.actor
    }

    pub fn actor_net_mut(&mut self) -> &mut Mlp {
        &mut self.actor
    }

    pub fn critic_nets_mut(&mut self) -> (&mut Mlp, &mut Mlp) {
        (&mut self.critic1, &mut self.critic2)
    }

    pub fn target_distance(&self) -> f64 {
        self.critic1
            .params()
            .iter()
            .zip(self.target1.params())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

// --- checkpoint format ------------------------------------------------------

const NET_MAGIC: &[u8; 8] = b"L2ENET01";

fn write_u64(w: &mut impl Write, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_f64s(w: &mut impl Write, vals: &[f64]) -> io::Result<()> {
    for v in vals {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_f64s(r: &mut impl Read, n: usize) -> io::Result<Vec<f64>> {
    (0..n).map(|_| read_f64(r)).collect()
}

impl SacLearner {
    /// Versioned flat dump: architecture header, then parameter and optimizer
    /// arrays. Restoring reproduces the learner exactly, rng position
    /// included.
    pub fn save(&self, w: &mut impl Write) -> Result<(), LearnerError> {
        w.write_all(NET_MAGIC)?;
        write_u64(w, self.input_dim as u64)?;
        write_u64(w, self.action_dim as u64)?;
        write_f64s(w, &[self.action_bound])?;
        write_u64(w, self.cfg.hidden.len() as u64)?;
        for &h in &self.cfg.hidden {
            write_u64(w, h as u64)?;
        }
        write_f64s(
            w,
            &[
                self.cfg.lr,
                self.cfg.batch as f64,
                self.cfg.gamma,
                self.cfg.polyak,
                self.cfg.entropy_target.unwrap_or(f64::NAN),
                self.cfg.alpha_init,
                if self.cfg.alpha_auto { 1.0 } else { 0.0 },
            ],
        )?;
        write_u64(w, self.cfg.seed)?;
        write_u64(w, self.updates)?;
        write_f64s(w, &[self.log_alpha])?;
        w.write_all(&self.rng.get_seed())?;
        w.write_all(&self.rng.get_word_pos().to_le_bytes())?;

        for net in [&self.actor, &self.critic1, &self.critic2, &self.target1, &self.target2] {
            write_u64(w, net.n_params() as u64)?;
            write_f64s(w, net.params())?;
        }
        for opt in [&self.opt_actor, &self.opt_critic1, &self.opt_critic2, &self.opt_alpha] {
            let (m, v, t) = opt.state();
            write_u64(w, m.len() as u64)?;
            write_f64s(w, m)?;
            write_f64s(w, v)?;
            write_u64(w, t)?;
        }
        Ok(())
    }

    pub fn load(r: &mut impl Read) -> Result<Self, LearnerError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != NET_MAGIC {
            return Err(LearnerError::Corrupt("bad magic".into()));
        }
        let input_dim = read_u64(r)? as usize;
        let action_dim = read_u64(r)? as usize;
        let action_bound = read_f64(r)?;
        let n_hidden = read_u64(r)? as usize;
        let mut hidden = Vec::with_capacity(n_hidden);
        for _ in 0..n_hidden {
            hidden.push(read_u64(r)? as usize);
        }
        let nums = read_f64s(r, 7)?;
        let seed = read_u64(r)?;
        let cfg = LearnerConfig {
            lr: nums[0],
            batch: nums[1] as usize,
            gamma: nums[2],
            polyak: nums[3],
            entropy_target: if nums[4].is_nan() { None } else { Some(nums[4]) },
            alpha_init: nums[5],
            alpha_auto: nums[6] == 1.0,
            hidden,
            seed,
        };
        let mut learner = SacLearner::new(input_dim, action_dim, action_bound, cfg);
        learner.updates = read_u64(r)?;
        learner.log_alpha = read_f64(r)?;
        let mut rng_seed = [0u8; 32];
        r.read_exact(&mut rng_seed)?;
        let mut pos = [0u8; 16];
        r.read_exact(&mut pos)?;
        learner.rng = ChaCha8Rng::from_seed(rng_seed);
        learner.rng.set_word_pos(u128::from_le_bytes(pos));

        for net in [
            &mut learner.actor,
            &mut learner.critic1,
            &mut learner.critic2,
            &mut learner.target1,
            &mut learner.target2,
        ] {
            let n = read_u64(r)? as usize;
            if n != net.n_params() {
                return Err(LearnerError::Corrupt(format!(
                    "parameter count {n} does not match architecture ({})",
                    net.n_params()
                )));
            }
            net.params_mut().copy_from_slice(&read_f64s(r, n)?);
        }
        for opt in [
            &mut learner.opt_actor,
            &mut learner.opt_critic1,
            &mut learner.opt_critic2,
            &mut learner.opt_alpha,
        ] {
            let n = read_u64(r)? as usize;
            let m = read_f64s(r, n)?;
            let v = read_f64s(r, n)?;
            let t = read_u64(r)?;
            opt.restore(m, v, t);
        }
        Ok(learner)
    }
}
