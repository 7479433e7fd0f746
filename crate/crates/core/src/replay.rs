//! Replay machinery: a ring buffer of transitions over a reference-counted,
//! content-deduplicated plan store, the plan replay strategies (uniform and
//! reward-biased), episode relabeling, hindsight goal relabeling for the
//! goal-conditioned baselines, and a versioned binary checkpoint format.

use std::collections::HashMap;
use std::collections::VecDeque;
use std::io::{self, Read, Write};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::geom::Vec2;
use crate::parallel::ordered_map;
use crate::planners::{Plan, PlanMeta, PlannerId};
use crate::shaping::RewardModel;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt buffer checkpoint: {0}")]
    Corrupt(String),
}

pub type PlanId = u32;

/// What a stored transition was conditioned on: a shared plan for
/// plan-conditioned agents, or a goal for goal-conditioned ones.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cond {
    Plan(PlanId),
    Goal(Vec2),
}

#[derive(Clone, Debug)]
pub struct Transition {
    pub state: Box<[f64]>,
    pub action: Box<[f64]>,
    pub reward: f64,
    pub next_state: Box<[f64]>,
    pub cond: Cond,
}

/// Raw step record before conditioning is resolved against the store.
#[derive(Clone, Debug)]
pub struct RawTransition {
    pub state: Box<[f64]>,
    pub action: Box<[f64]>,
    pub reward: f64,
    pub next_state: Box<[f64]>,
}

/// One finished rollout plus the plan it followed.
pub struct Episode {
    pub transitions: Vec<RawTransition>,
    pub plan: Arc<Plan>,
    pub encoding: Arc<Vec<f64>>,
}

struct Slot {
    plan: Arc<Plan>,
    encoding: Arc<Vec<f64>>,
    refs: usize,
    hash: u64,
}

/// Content-deduplicated plan storage with reference counts. Relabeling
/// multiplies references to the same plan, so plans are stored once and
/// dropped when their last referencing transition is evicted.
#[derive(Default)]
pub struct PlanStore {
    slots: Vec<Option<Slot>>,
    free: Vec<PlanId>,
    by_hash: HashMap<u64, Vec<PlanId>>,
    /// ids with at least one live reference, in insertion order
    live: Vec<PlanId>,
    live_pos: HashMap<PlanId, usize>,
}

impl PlanStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of distinct live plans.
    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    pub fn plan(&self, id: PlanId) -> &Arc<Plan> {
        &self.slots[id as usize].as_ref().expect("live plan id").plan
    }

    pub fn encoding(&self, id: PlanId) -> &Arc<Vec<f64>> {
        &self.slots[id as usize].as_ref().expect("live plan id").encoding
    }

    /// Insert (or find) a plan by content. The returned id has no reference
    /// yet; pushing a transition that mentions it adds one.
    pub fn insert(&mut self, plan: Arc<Plan>, encoding: Arc<Vec<f64>>) -> PlanId {
        let hash = plan.content_hash();
        if let Some(ids) = self.by_hash.get(&hash) {
            for &id in ids {
                if let Some(slot) = &self.slots[id as usize] {
                    if slot.plan.as_ref() == plan.as_ref() {
                        return id;
                    }
                }
            }
        }
        let id = match self.free.pop() {
            Some(id) => {
                self.slots[id as usize] = Some(Slot { plan, encoding, refs: 0, hash });
                id
            }
            None => {
                let id = self.slots.len() as PlanId;
                self.slots.push(Some(Slot { plan, encoding, refs: 0, hash }));
                id
            }
        };
        self.by_hash.entry(hash).or_default().push(id);
        id
    }

    fn retain(&mut self, id: PlanId) {
        let slot = self.slots[id as usize].as_mut().expect("live plan id");
        if slot.refs == 0 {
            self.live_pos.insert(id, self.live.len());
            self.live.push(id);
        }
        slot.refs += 1;
    }

    fn release(&mut self, id: PlanId) {
        let slot = self.slots[id as usize].as_mut().expect("live plan id");
        slot.refs -= 1;
        if slot.refs == 0 {
            let hash = slot.hash;
            self.slots[id as usize] = None;
            self.free.push(id);
            if let Some(ids) = self.by_hash.get_mut(&hash) {
                ids.retain(|&x| x != id);
                if ids.is_empty() {
                    self.by_hash.remove(&hash);
                }
            }
            let pos = self.live_pos.remove(&id).expect("live position");
            let last = self.live.pop().expect("non-empty live list");
            if last != id {
                self.live[pos] = last;
                self.live_pos.insert(last, pos);
            }
        }
    }

    /// Up to `n` distinct plans drawn uniformly without replacement, in draw
    /// order (partial Fisher-Yates over the live set).
    pub fn sample_unique(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<PlanId> {
        let k = n.min(self.live.len());
        let mut pool = self.live.clone();
        let mut out = Vec::with_capacity(k);
        for i in 0..k {
            let j = rng.gen_range(i..pool.len());
            pool.swap(i, j);
            out.push(pool[i]);
        }
        out
    }

    fn live_ids(&self) -> &[PlanId] {
        &self.live
    }
}

/// FIFO ring of transitions with a plan store on the side.
pub struct ReplayBuffer {
    transitions: VecDeque<Transition>,
    capacity: usize,
    store: PlanStore,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        ReplayBuffer {
            transitions: VecDeque::new(),
            capacity,
            store: PlanStore::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn store(&self) -> &PlanStore {
        &self.store
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.transitions[i]
    }

    /// Append one transition, evicting exactly the oldest when full.
    pub fn push(&mut self, t: Transition) {
        if self.transitions.len() == self.capacity {
            let old = self.transitions.pop_front().expect("buffer at capacity");
            if let Cond::Plan(id) = old.cond {
                self.store.release(id);
            }
        }
        if let Cond::Plan(id) = t.cond {
            self.store.retain(id);
        }
        self.transitions.push_back(t);
    }

    /// Register a plan (deduplicated) so transitions can reference it.
    pub fn intern_plan(&mut self, plan: Arc<Plan>, encoding: Arc<Vec<f64>>) -> PlanId {
        self.store.insert(plan, encoding)
    }

    /// Temporarily hold references so eviction cannot free these plans while
    /// relabeled transitions referencing them are still being appended.
    pub fn pin_plans(&mut self, ids: &[PlanId]) {
        for &id in ids {
            self.store.retain(id);
        }
    }

    pub fn unpin_plans(&mut self, ids: &[PlanId]) {
        for &id in ids {
            self.store.release(id);
        }
    }

    /// Append a plan-conditioned episode verbatim; returns the plan id.
    pub fn push_episode(&mut self, episode: &Episode) -> PlanId {
        let id = self.intern_plan(episode.plan.clone(), episode.encoding.clone());
        for t in &episode.transitions {
            self.push(Transition {
                state: t.state.clone(),
                action: t.action.clone(),
                reward: t.reward,
                next_state: t.next_state.clone(),
                cond: Cond::Plan(id),
            });
        }
        id
    }
}

/// Uniform replay strategy: up to `n` distinct plans from the buffer's plan
/// store, uniform without replacement. An empty store yields an empty list.
pub fn uniform_replay_plans(buffer: &ReplayBuffer, n: usize, rng: &mut ChaCha8Rng) -> Vec<PlanId> {
    buffer.store.sample_unique(n, rng)
}

/// Reward-biased replay strategy: draw `m` unique plans uniformly, score each
/// by the summed plan-conditioned reward it would have produced over the
/// episode, and keep the best `n`. Ties keep the earlier draw.
pub fn biased_replay_plans(
    buffer: &ReplayBuffer,
    episode: &[RawTransition],
    n: usize,
    m: usize,
    reward: &RewardModel,
    rng: &mut ChaCha8Rng,
) -> Vec<PlanId> {
    assert!(n <= m, "biased replay needs n <= m");
    let candidates = buffer.store.sample_unique(m, rng);
    let scores = score_plans(buffer, episode, &candidates, reward);
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    order.into_iter().take(n).map(|i| candidates[i]).collect()
}

/// Episode return each candidate plan would have produced (ordered like
/// `candidates`); the inner loop fans out across plans.
pub fn score_plans(
    buffer: &ReplayBuffer,
    episode: &[RawTransition],
    candidates: &[PlanId],
    reward: &RewardModel,
) -> Vec<f64> {
    ordered_map(candidates, |&id| {
        let plan = buffer.store.plan(id);
        episode
            .iter()
            .map(|t| reward.plan_reward(&t.state, &t.action, &t.next_state, plan))
            .sum()
    })
}

/// Sequential twin of [`score_plans`] for the benchmark suite.
pub fn score_plans_sequential(
    buffer: &ReplayBuffer,
    episode: &[RawTransition],
    candidates: &[PlanId],
    reward: &RewardModel,
) -> Vec<f64> {
    crate::parallel::ordered_map_sequential(candidates, |&id| {
        let plan = buffer.store.plan(id);
        episode
            .iter()
            .map(|t| reward.plan_reward(&t.state, &t.action, &t.next_state, plan))
            .sum()
    })
}

/// Re-evaluate an episode under another plan: same dynamics content, new
/// rewards. The input episode is untouched.
pub fn relabel_episode(
    episode: &[RawTransition],
    replay_plan: &Plan,
    reward: &RewardModel,
) -> Vec<RawTransition> {
    episode
        .iter()
        .map(|t| RawTransition {
            state: t.state.clone(),
            action: t.action.clone(),
            reward: reward.plan_reward(&t.state, &t.action, &t.next_state, replay_plan),
            next_state: t.next_state.clone(),
        })
        .collect()
}

/// Hindsight goal-relabeling strategies for the goal-conditioned baselines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HerStrategy {
    /// Goals achieved at strictly later steps of the same episode.
    Future,
    /// Goals achieved anywhere in the episode.
    Episode,
}

impl HerStrategy {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "future" => Some(HerStrategy::Future),
            "episode" => Some(HerStrategy::Episode),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            HerStrategy::Future => "future",
            HerStrategy::Episode => "episode",
        }
    }
}

/// For each transition, `k` replay goals drawn from outcomes achieved during
/// the episode. `achieved` maps a post-transition state to its achieved goal.
/// Under the future strategy the final transition gets none.
pub fn her_replay_goals(
    episode: &[RawTransition],
    strategy: HerStrategy,
    k: usize,
    achieved: impl Fn(&[f64]) -> Vec2,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<Vec2>> {
    let len = episode.len();
    (0..len)
        .map(|t| match strategy {
            HerStrategy::Future => {
                if t + 1 >= len {
                    Vec::new()
                } else {
                    (0..k)
                        .map(|_| achieved(&episode[rng.gen_range(t + 1..len)].next_state))
                        .collect()
                }
            }
            HerStrategy::Episode => (0..k)
                .map(|_| achieved(&episode[rng.gen_range(0..len)].next_state))
                .collect(),
        })
        .collect()
}

// --- checkpoint format ------------------------------------------------------

const BUFFER_MAGIC: &[u8; 8] = b"L2EBUF01";

fn write_f64s(w: &mut impl Write, vals: &[f64]) -> io::Result<()> {
    for v in vals {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn write_u64(w: &mut impl Write, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn read_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> io::Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

fn read_f64s(r: &mut impl Read, n: usize) -> io::Result<Vec<f64>> {
    (0..n).map(|_| read_f64(r)).collect()
}

impl ReplayBuffer {
    /// Versioned binary dump: header (dims, counts), plan table, transition
    /// arrays. Enables resumable training.
    pub fn save(&self, w: &mut impl Write) -> Result<(), ReplayError> {
        w.write_all(BUFFER_MAGIC)?;
        write_u64(w, self.capacity as u64)?;
        write_u64(w, self.transitions.len() as u64)?;
        let (sdim, adim) = match self.transitions.front() {
            Some(t) => (t.state.len(), t.action.len()),
            None => (0, 0),
        };
        write_u64(w, sdim as u64)?;
        write_u64(w, adim as u64)?;

        let live = self.store.live_ids();
        write_u64(w, live.len() as u64)?;
        for &id in live {
            let plan = self.store.plan(id);
            let encoding = self.store.encoding(id);
            write_u64(w, id as u64)?;
            w.write_all(&[plan.meta.planner.tag()])?;
            write_u64(w, plan.dim as u64)?;
            write_u64(w, plan.len() as u64)?;
            write_f64s(w, &[plan.goal[0], plan.goal[1]])?;
            write_u64(w, plan.meta.start.len() as u64)?;
            write_f64s(w, &plan.meta.start)?;
            match plan.meta.intermediate {
                Some(mid) => {
                    w.write_all(&[1])?;
                    write_f64s(w, &mid)?;
                }
                None => w.write_all(&[0])?,
            }
            write_f64s(w, &plan.waypoints)?;
            write_u64(w, encoding.len() as u64)?;
            write_f64s(w, encoding)?;
        }

        for t in &self.transitions {
            write_f64s(w, &t.state)?;
            write_f64s(w, &t.action)?;
            write_f64s(w, &[t.reward])?;
            write_f64s(w, &t.next_state)?;
            match t.cond {
                Cond::Plan(id) => {
                    w.write_all(&[0])?;
                    write_u64(w, id as u64)?;
                }
                Cond::Goal(g) => {
                    w.write_all(&[1])?;
                    write_f64s(w, &g)?;
                }
            }
        }
        Ok(())
    }

    pub fn load(r: &mut impl Read) -> Result<Self, ReplayError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != BUFFER_MAGIC {
            return Err(ReplayError::Corrupt("bad magic".into()));
        }
        let capacity = read_u64(r)? as usize;
        let count = read_u64(r)? as usize;
        let sdim = read_u64(r)? as usize;
        let adim = read_u64(r)? as usize;
        if count > capacity {
            return Err(ReplayError::Corrupt("count exceeds capacity".into()));
        }

        let mut buffer = ReplayBuffer::new(capacity);
        let n_plans = read_u64(r)? as usize;
        let mut id_map: HashMap<PlanId, PlanId> = HashMap::new();
        for _ in 0..n_plans {
            let stored_id = read_u64(r)? as PlanId;
            let mut tag = [0u8; 1];
            r.read_exact(&mut tag)?;
            let planner = PlannerId::from_tag(tag[0])
                .ok_or_else(|| ReplayError::Corrupt(format!("bad planner tag {}", tag[0])))?;
            let dim = read_u64(r)? as usize;
            let len = read_u64(r)? as usize;
            let goal = [read_f64(r)?, read_f64(r)?];
            let start_len = read_u64(r)? as usize;
            let start = read_f64s(r, start_len)?;
            let mut has_mid = [0u8; 1];
            r.read_exact(&mut has_mid)?;
            let intermediate = if has_mid[0] == 1 {
                Some([read_f64(r)?, read_f64(r)?])
            } else {
                None
            };
            let waypoints = read_f64s(r, len * dim)?;
            let enc_len = read_u64(r)? as usize;
            let encoding = read_f64s(r, enc_len)?;
            let plan = Plan {
                waypoints,
                dim,
                goal,
                meta: PlanMeta { planner, start, intermediate },
            };
            let new_id = buffer.intern_plan(Arc::new(plan), Arc::new(encoding));
            id_map.insert(stored_id, new_id);
        }

        for _ in 0..count {
            let state = read_f64s(r, sdim)?.into_boxed_slice();
            let action = read_f64s(r, adim)?.into_boxed_slice();
            let reward = read_f64(r)?;
            let next_state = read_f64s(r, sdim)?.into_boxed_slice();
            let mut tag = [0u8; 1];
            r.read_exact(&mut tag)?;
            let cond = match tag[0] {
                0 => {
                    let stored = read_u64(r)? as PlanId;
                    let id = id_map
                        .get(&stored)
                        .ok_or_else(|| ReplayError::Corrupt(format!("unknown plan id {stored}")))?;
                    Cond::Plan(*id)
                }
                1 => Cond::Goal([read_f64(r)?, read_f64(r)?]),
                t => return Err(ReplayError::Corrupt(format!("bad cond tag {t}"))),
            };
            buffer.push(Transition { state, action, reward, next_state, cond });
        }
        Ok(buffer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{EnvConfig, EnvId, SparseSpec};
    use crate::shaping::ShapingConfig;
    use rand::SeedableRng;

    fn maze_model() -> RewardModel {
        RewardModel::new(
            ShapingConfig::new(0.5, vec![0, 1]).unwrap(),
            SparseSpec::for_env(EnvId::Maze, &EnvConfig::default()),
        )
    }

    fn line_plan(x0: f64, goal: Vec2, len: usize) -> Arc<Plan> {
        let mut waypoints = Vec::new();
        for i in 0..len {
            let t = i as f64 / (len - 1) as f64;
            waypoints.push(x0 + (goal[0] - x0) * t);
            waypoints.push(goal[1] * t);
        }
        Arc::new(Plan {
            waypoints,
            dim: 2,
            goal,
            meta: PlanMeta {
                planner: PlannerId::Rrt,
                start: vec![x0, 0.0],
                intermediate: None,
            },
        })
    }

    fn episode_along(plan: &Plan, steps: usize, reward: &RewardModel) -> Episode {
        let mut transitions = Vec::new();
        for i in 0..steps {
            let a = plan.body_position((i * (plan.len() - 1)) / steps);
            let b = plan.body_position(((i + 1) * (plan.len() - 1)) / steps);
            let s: Box<[f64]> = Box::new(a);
            let s2: Box<[f64]> = Box::new(b);
            let act: Box<[f64]> = Box::new([b[0] - a[0], b[1] - a[1]]);
            let r = reward.plan_reward(&s, &act, &s2, plan);
            transitions.push(RawTransition { state: s, action: act, reward: r, next_state: s2 });
        }
        Episode {
            transitions,
            plan: Arc::new(plan.clone()),
            encoding: Arc::new(plan.waypoints.clone()),
        }
    }

    #[test]
    fn ring_evicts_oldest_and_drops_dead_plans() {
        let model = maze_model();
        let mut buffer = ReplayBuffer::new(6);
        let p1 = line_plan(0.0, [0.5, 0.5], 20);
        let p2 = line_plan(0.1, [0.6, 0.4], 20);
        let e1 = episode_along(&p1, 4, &model);
        let e2 = episode_along(&p2, 4, &model);
        buffer.push_episode(&e1);
        assert_eq!(buffer.store().len(), 1);
        buffer.push_episode(&e2);
        // capacity 6: two of e1's four transitions were evicted
        assert_eq!(buffer.len(), 6);
        assert_eq!(buffer.store().len(), 2);
        // push four more referencing p2: e1's remaining refs die with p1
        let e3 = episode_along(&p2, 4, &model);
        buffer.push_episode(&e3);
        assert_eq!(buffer.store().len(), 1);
        assert_eq!(buffer.len(), 6);
        let first = buffer.get(0).reward;
        let recomputed = model.plan_reward(
            &buffer.get(0).state,
            &buffer.get(0).action,
            &buffer.get(0).next_state,
            buffer.store().plan(match buffer.get(0).cond {
                Cond::Plan(id) => id,
                _ => unreachable!(),
            }),
        );
        assert_eq!(first, recomputed);
    }

    #[test]
    fn interning_deduplicates_identical_plans() {
        let model = maze_model();
        let mut buffer = ReplayBuffer::new(100);
        let p = line_plan(0.0, [0.5, 0.5], 20);
        let e = episode_along(&p, 3, &model);
        let id1 = buffer.push_episode(&e);
        let id2 = buffer.push_episode(&e);
        assert_eq!(id1, id2);
        assert_eq!(buffer.store().len(), 1);
    }

    #[test]
    fn uniform_sampling_clamps_and_covers() {
        let model = maze_model();
        let mut buffer = ReplayBuffer::new(1000);
        for i in 0..5 {
            let p = line_plan(0.01 * i as f64, [0.5, 0.5], 20);
            buffer.push_episode(&episode_along(&p, 2, &model));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(uniform_replay_plans(&buffer, 5, &mut rng).len(), 5);
        let all = uniform_replay_plans(&buffer, 10, &mut rng);
        assert_eq!(all.len(), 5, "fewer stored than requested returns all");
        let empty = ReplayBuffer::new(4);
        assert!(uniform_replay_plans(&empty, 3, &mut rng).is_empty());
    }

    #[test]
    fn uniform_sampling_frequencies_within_three_sigma() {
        let model = maze_model();
        let mut buffer = ReplayBuffer::new(1000);
        for i in 0..5 {
            let p = line_plan(0.01 * i as f64, [0.5, 0.5], 20);
            buffer.push_episode(&episode_along(&p, 2, &model));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 10_000;
        let mut counts: HashMap<PlanId, usize> = HashMap::new();
        for _ in 0..draws {
            let picked = uniform_replay_plans(&buffer, 1, &mut rng);
            *counts.entry(picked[0]).or_default() += 1;
        }
        let expect = draws as f64 / 5.0;
        let sigma = (draws as f64 * 0.2 * 0.8).sqrt();
        for (&id, &c) in &counts {
            let band = 3.0 * sigma;
            assert!(
                (c as f64 - expect).abs() <= band,
                "plan {id} drawn {c} times, expected {expect} +- {band}"
            );
        }
        assert_eq!(counts.len(), 5);
    }

    #[test]
    fn biased_replay_ranks_the_traced_plan_first() {
        let model = maze_model();
        let mut buffer = ReplayBuffer::new(10_000);
        let traced = line_plan(0.0, [0.9, 0.9], 20);
        buffer.push_episode(&episode_along(&traced, 10, &model));
        // distractors share the start but run well below the episode's whole
        // diagonal path, so none of their goals is achieved in passing
        for i in 0..20 {
            let p = line_plan(0.0, [0.55 + 0.02 * i as f64, 0.2 - 0.005 * i as f64], 20);
            buffer.push_episode(&episode_along(&p, 10, &model));
        }
        let episode = episode_along(&traced, 10, &model);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let picked = biased_replay_plans(&buffer, &episode.transitions, 3, 21, &model, &mut rng);
        assert_eq!(picked.len(), 3);
        let best = buffer.store().plan(picked[0]);
        assert_eq!(best.goal, traced.goal, "episode's own plan should rank first");
        // and the ranking must agree with exhaustive recomputation
        let all: Vec<PlanId> = (0..buffer.store().len() as u32).collect();
        let scores = score_plans(&buffer, &episode.transitions, &all, &model);
        let mut order: Vec<usize> = (0..all.len()).collect();
        order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
        assert_eq!(buffer.store().plan(all[order[0]]).goal, traced.goal);
    }

    #[test]
    fn biased_replay_with_n_equal_m_is_the_uniform_draw() {
        let model = maze_model();
        let mut buffer = ReplayBuffer::new(1000);
        for i in 0..8 {
            let p = line_plan(0.1 * i as f64 / 10.0, [0.5, 0.9], 20);
            buffer.push_episode(&episode_along(&p, 5, &model));
        }
        let episode = episode_along(&line_plan(0.0, [0.9, 0.1], 20), 5, &model);
        let mut rng_a = ChaCha8Rng::seed_from_u64(11);
        let mut rng_b = ChaCha8Rng::seed_from_u64(11);
        let uniform: std::collections::HashSet<PlanId> =
            uniform_replay_plans(&buffer, 4, &mut rng_a).into_iter().collect();
        let biased: std::collections::HashSet<PlanId> =
            biased_replay_plans(&buffer, &episode.transitions, 4, 4, &model, &mut rng_b)
                .into_iter()
                .collect();
        assert_eq!(uniform, biased);
    }

    #[test]
    fn relabeling_is_pure_and_idempotent_on_own_plan() {
        let model = maze_model();
        let plan = line_plan(0.0, [0.8, 0.2], 20);
        let episode = episode_along(&plan, 6, &model);
        let before: Vec<f64> = episode.transitions.iter().map(|t| t.reward).collect();
        let relabeled = relabel_episode(&episode.transitions, &plan, &model);
        assert_eq!(relabeled.len(), episode.transitions.len());
        for (a, b) in episode.transitions.iter().zip(&relabeled) {
            assert_eq!(a.state, b.state);
            assert_eq!(a.action, b.action);
            assert_eq!(a.next_state, b.next_state);
            assert_eq!(a.reward, b.reward, "own-plan relabel must reproduce rewards");
        }
        let after: Vec<f64> = episode.transitions.iter().map(|t| t.reward).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn relabeling_with_goal_on_final_position_succeeds() {
        let model = maze_model();
        let plan = line_plan(0.0, [0.8, 0.2], 20);
        let episode = episode_along(&plan, 6, &model);
        let achieved = episode.transitions.last().unwrap().next_state.clone();
        let hindsight = line_plan(0.0, [achieved[0], achieved[1]], 20);
        let relabeled = relabel_episode(&episode.transitions, &hindsight, &model);
        assert_eq!(relabeled.last().unwrap().reward, 1.0);
    }

    #[test]
    fn her_future_draws_strictly_later_and_final_gets_none() {
        let model = maze_model();
        let plan = line_plan(0.0, [0.9, 0.0], 20);
        let episode = episode_along(&plan, 10, &model);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let goals = her_replay_goals(
            &episode.transitions,
            HerStrategy::Future,
            1,
            |s| [s[0], s[1]],
            &mut rng,
        );
        assert_eq!(goals.len(), 10);
        assert!(goals[9].is_empty());
        for (t, gs) in goals.iter().enumerate().take(9) {
            assert_eq!(gs.len(), 1);
            // achieved x positions increase along this episode, so a future
            // goal must lie strictly ahead of the transition's own outcome
            assert!(gs[0][0] > episode.transitions[t].next_state[0] - 1e-12);
        }
    }

    #[test]
    fn her_own_outcome_relabel_gives_reward_one() {
        let model = maze_model();
        let plan = line_plan(0.0, [0.9, 0.0], 20);
        let episode = episode_along(&plan, 10, &model);
        for t in &episode.transitions {
            let g = [t.next_state[0], t.next_state[1]];
            assert_eq!(model.sparse_reward(&t.next_state, g), 1.0);
        }
    }

    #[test]
    fn her_episode_strategy_is_uniform_by_chi_square() {
        // transitions with unique achieved positions so each drawn goal
        // identifies its source index exactly
        let len = 50usize;
        let transitions: Vec<RawTransition> = (0..len)
            .map(|i| RawTransition {
                state: Box::new([i as f64 / len as f64, 0.0]),
                action: Box::new([1.0 / len as f64, 0.0]),
                reward: 0.0,
                next_state: Box::new([(i + 1) as f64 / len as f64, 0.0]),
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut counts = vec![0usize; len];
        let rounds = 2000;
        for _ in 0..rounds {
            let goals = her_replay_goals(
                &transitions,
                HerStrategy::Episode,
                5,
                |s| [s[0], s[1]],
                &mut rng,
            );
            for g in &goals[0] {
                let idx = transitions
                    .iter()
                    .position(|t| t.next_state[0] == g[0])
                    .unwrap();
                counts[idx] += 1;
            }
        }
        let total: usize = counts.iter().sum();
        assert_eq!(total, rounds * 5);
        let expect = total as f64 / len as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expect).powi(2) / expect)
            .sum();
        // df = 49; Wilson-Hilferty critical value for p ~ 1e-3 is ~ 85.4
        assert!(chi2 < 85.4, "chi-square {chi2} too large for uniformity");
    }

    #[test]
    fn checkpoint_round_trips_bitwise() {
        let model = maze_model();
        let mut buffer = ReplayBuffer::new(64);
        for i in 0..4 {
            let p = line_plan(0.02 * i as f64, [0.5 + 0.01 * i as f64, 0.5], 20);
            buffer.push_episode(&episode_along(&p, 7, &model));
        }
        buffer.push(Transition {
            state: Box::new([0.1, 0.2]),
            action: Box::new([0.0, 0.05]),
            reward: 0.0,
            next_state: Box::new([0.1, 0.25]),
            cond: Cond::Goal([0.4, 0.4]),
        });
        let mut bytes = Vec::new();
        buffer.save(&mut bytes).unwrap();
        let loaded = ReplayBuffer::load(&mut bytes.as_slice()).unwrap();
        assert_eq!(loaded.len(), buffer.len());
        assert_eq!(loaded.capacity(), buffer.capacity());
        assert_eq!(loaded.store().len(), buffer.store().len());
        for i in 0..buffer.len() {
            let (a, b) = (buffer.get(i), loaded.get(i));
            assert_eq!(a.state, b.state);
            assert_eq!(a.action, b.action);
            assert_eq!(a.reward.to_bits(), b.reward.to_bits());
            assert_eq!(a.next_state, b.next_state);
            match (a.cond, b.cond) {
                (Cond::Plan(x), Cond::Plan(y)) => {
                    assert_eq!(buffer.store().plan(x).waypoints, loaded.store().plan(y).waypoints);
                    assert_eq!(buffer.store().encoding(x), loaded.store().encoding(y));
                }
                (Cond::Goal(x), Cond::Goal(y)) => assert_eq!(x, y),
                _ => panic!("cond kind changed across round trip"),
            }
        }
        assert!(ReplayBuffer::load(&mut &bytes[..bytes.len() / 2]).is_err());
    }
}
