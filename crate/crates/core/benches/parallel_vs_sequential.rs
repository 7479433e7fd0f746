//! Criterion suite comparing the rayon-backed hot paths against their
//! sequential twins: batch gradient accumulation for a critic-sized net and
//! replay-plan scoring over a full episode.
//!
//! Run with the default features for the parallel path; `--no-default-features`
//! builds the sequential-only core (both paths then coincide).

use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use l2e_core::envs::{EnvConfig, EnvId, SparseSpec};
use l2e_core::learner::{Mlp, Workspace};
use l2e_core::parallel::{accumulate_chunked, accumulate_chunked_sequential};
use l2e_core::planners::{Plan, PlanMeta, PlannerId};
use l2e_core::replay::{score_plans, score_plans_sequential, Episode, RawTransition, ReplayBuffer};
use l2e_core::shaping::{RewardModel, ShapingConfig};

fn critic_batch_fixture() -> (Mlp, Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let net = Mlp::new(vec![44, 256, 161, 102, 64, 1], &mut rng);
    let inputs: Vec<Vec<f64>> = (0..256)
        .map(|_| (0..44).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let targets: Vec<f64> = (0..256).map(|_| rng.gen_range(0.0..1.0)).collect();
    (net, inputs, targets)
}

fn bench_batch_grads(c: &mut Criterion) {
    let (net, inputs, targets) = critic_batch_fixture();
    let items: Vec<(usize, &Vec<f64>)> = inputs.iter().enumerate().collect();
    let n = items.len() as f64;
    let work = |ws: &mut Workspace, (i, input): &(usize, &Vec<f64>), grads: &mut [f64]| {
        let q = net.forward_cached(input, ws)[0];
        let err = q - targets[*i];
        net.backward(input, ws, &[2.0 * err / n], grads, None);
        err * err / n
    };

    let mut group = c.benchmark_group("critic_batch_gradients");
    group.sample_size(20);
    group.bench_function("parallel", |b| {
        b.iter(|| {
            black_box(accumulate_chunked(
                black_box(&items),
                net.n_params(),
                16,
                || Workspace::for_net(&net),
                work,
            ))
        })
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            black_box(accumulate_chunked_sequential(
                black_box(&items),
                net.n_params(),
                16,
                || Workspace::for_net(&net),
                work,
            ))
        })
    });
    group.finish();
}

fn replay_fixture() -> (ReplayBuffer, Vec<RawTransition>, Vec<u32>, RewardModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let reward = RewardModel::new(
        ShapingConfig::new(0.5, vec![0, 1]).unwrap(),
        SparseSpec::for_env(EnvId::Maze, &EnvConfig::default()),
    );
    let mut buffer = ReplayBuffer::new(200_000);
    let mut mk_plan = |seed_off: f64| {
        let mut waypoints = Vec::new();
        for i in 0..20 {
            waypoints.push(seed_off + 0.04 * i as f64);
            waypoints.push(rng.gen_range(0.0..1.0));
        }
        Arc::new(Plan {
            waypoints,
            dim: 2,
            goal: [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)],
            meta: PlanMeta {
                planner: PlannerId::Rrt,
                start: vec![seed_off, 0.0],
                intermediate: None,
            },
        })
    };
    let mut episode = Vec::new();
    let mut pos = [0.5, 0.5];
    for _ in 0..250 {
        let next = [
            (pos[0] + rng.gen_range(-0.1..0.1)).clamp(0.0, 1.0),
            (pos[1] + rng.gen_range(-0.1..0.1)).clamp(0.0, 1.0),
        ];
        episode.push(RawTransition {
            state: Box::new(pos),
            action: Box::new([next[0] - pos[0], next[1] - pos[1]]),
            reward: 0.0,
            next_state: Box::new(next),
        });
        pos = next;
    }
    let mut ids = Vec::new();
    for i in 0..200 {
        let plan = mk_plan(i as f64 * 1e-4);
        let encoding = Arc::new(plan.waypoints.clone());
        ids.push(buffer.push_episode(&Episode {
            transitions: episode[..4].to_vec(),
            plan,
            encoding,
        }));
    }
    (buffer, episode, ids, reward)
}

fn bench_replay_scoring(c: &mut Criterion) {
    let (buffer, episode, ids, reward) = replay_fixture();
    let mut group = c.benchmark_group("replay_plan_scoring");
    group.sample_size(20);
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(score_plans(&buffer, black_box(&episode), &ids, &reward)))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(score_plans_sequential(&buffer, black_box(&episode), &ids, &reward)))
    });
    group.finish();
}

criterion_group!(benches, bench_batch_grads, bench_replay_scoring);
criterion_main!(benches);
