//! Rapidly-exploring random tree planner for the maze, with shortcut
//! smoothing and arc-length resampling to a fixed waypoint count.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{resample_rows, Plan, PlanError, PlanMeta, PlannerId};
use crate::geom::{dist, lerp, Rect, Vec2};

#[derive(Clone, Copy, Debug)]
pub struct RrtParams {
    pub step: f64,
    pub goal_bias: f64,
    pub max_iters: usize,
    pub smooth_passes: usize,
    /// Obstacles are inflated by this margin during planning so the final
    /// waypoints keep clearance from the raw rectangles.
    pub margin: f64,
    /// Full planning attempts before reporting infeasibility.
    pub attempts: usize,
}

impl Default for RrtParams {
    fn default() -> Self {
        RrtParams {
            step: 0.05,
            goal_bias: 0.1,
            max_iters: 5000,
            smooth_passes: 50,
            margin: 0.01,
            attempts: 3,
        }
    }
}

fn segment_free(a: Vec2, b: Vec2, obstacles: &[Rect]) -> bool {
    obstacles.iter().all(|o| !o.intersects_segment(a, b))
}

/// Plan a collision-free polyline from `start` to `goal` and resample it to
/// exactly `plan_len` waypoints. Fails with [`PlanError::Infeasible`] when the
/// tree cannot connect within the iteration budget; callers typically resample
/// the obstacle layout in that case.
pub fn rrt_plan(
    start: Vec2,
    goal: Vec2,
    obstacles: &[Rect],
    plan_len: usize,
    params: &RrtParams,
    rng: &mut ChaCha8Rng,
) -> Result<Plan, PlanError> {
    let meta = PlanMeta {
        planner: PlannerId::Rrt,
        start: vec![start[0], start[1]],
        intermediate: None,
    };
    if dist(start, goal) <= 1e-12 {
        let mut waypoints = Vec::with_capacity(plan_len * 2);
        for _ in 0..plan_len {
            waypoints.extend_from_slice(&start);
        }
        return Ok(Plan {
            waypoints,
            dim: 2,
            goal,
            meta,
        });
    }

    let inflated: Vec<Rect> = obstacles.iter().map(|o| o.inflate(params.margin)).collect();
    for _ in 0..params.attempts {
        if let Some(path) = grow_tree(start, goal, &inflated, params, rng) {
            let path = shortcut(path, &inflated, params.smooth_passes, rng);
            let rows: Vec<Vec<f64>> = path.iter().map(|p| vec![p[0], p[1]]).collect();
            let waypoints = resample_rows(
                &rows,
                |a, b| dist([a[0], a[1]], [b[0], b[1]]),
                plan_len,
            );
            let plan = Plan {
                waypoints,
                dim: 2,
                goal,
                meta: meta.clone(),
            };
            // resampled chords may cut corners of the smoothed polyline;
            // reject against the raw obstacles and try again if they do
            let valid = (1..plan.len()).all(|i| {
                segment_free(plan.body_position(i - 1), plan.body_position(i), obstacles)
            });
            if valid {
                return Ok(plan);
            }
        }
    }
    Err(PlanError::Infeasible)
}

fn grow_tree(
    start: Vec2,
    goal: Vec2,
    obstacles: &[Rect],
    params: &RrtParams,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<Vec2>> {
    let mut nodes: Vec<Vec2> = vec![start];
    let mut parents: Vec<usize> = vec![0];
    for _ in 0..params.max_iters {
        let target = if rng.gen_bool(params.goal_bias) {
            goal
        } else {
            [rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0)]
        };
        let (nearest, _) = nodes
            .iter()
            .enumerate()
            .map(|(i, p)| (i, dist(*p, target)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        let from = nodes[nearest];
        let gap = dist(from, target);
        if gap < 1e-12 {
            continue;
        }
        let new = if gap <= params.step {
            target
        } else {
            lerp(from, target, params.step / gap)
        };
        if !segment_free(from, new, obstacles) {
            continue;
        }
        nodes.push(new);
        parents.push(nearest);
        if dist(new, goal) <= params.step && segment_free(new, goal, obstacles) {
            let mut path = vec![goal];
            let mut i = nodes.len() - 1;
            loop {
                path.push(nodes[i]);
                if i == 0 {
                    break;
                }
                i = parents[i];
            }
            path.reverse();
            return Some(path);
        }
    }
    None
}

fn shortcut(mut path: Vec<Vec2>, obstacles: &[Rect], passes: usize, rng: &mut ChaCha8Rng) -> Vec<Vec2> {
    for _ in 0..passes {
        if path.len() < 3 {
            break;
        }
        let i = rng.gen_range(0..path.len() - 2);
        let j = rng.gen_range(i + 2..path.len());
        if segment_free(path[i], path[j], obstacles) {
            path.drain(i + 1..j);
        }
    }
    path
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn oracle_collision_free(plan: &Plan, obstacles: &[Rect]) -> bool {
        // dense point-in-rectangle test, 100 samples per segment
        for i in 1..plan.len() {
            let a = plan.body_position(i - 1);
            let b = plan.body_position(i);
            for s in 0..=100 {
                let p = lerp(a, b, s as f64 / 100.0);
                if obstacles.iter().any(|o| o.contains(p)) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn free_space_plan_is_nearly_straight() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let plan = rrt_plan([0.1, 0.1], [0.9, 0.9], &[], 20, &RrtParams::default(), &mut rng)
            .unwrap();
        assert_eq!(plan.len(), 20);
        assert_eq!(plan.body_position(0), [0.1, 0.1]);
        assert_eq!(plan.body_position(19), [0.9, 0.9]);
        for i in 0..plan.len() {
            let p = plan.body_position(i);
            // distance from the straight segment y = x
            let off = (p[1] - p[0]).abs() / 2.0f64.sqrt();
            assert!(off < 0.15, "waypoint {i} strays {off} from the straight line");
        }
    }

    #[test]
    fn wall_with_gap_is_avoided() {
        let wall_lo = Rect::new([0.5, 0.2], [0.03, 0.2]);
        let wall_hi = Rect::new([0.5, 0.8], [0.03, 0.2]);
        let obstacles = [wall_lo, wall_hi];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for trial in 0..20 {
            let plan = rrt_plan(
                [0.1, 0.5],
                [0.9, 0.5],
                &obstacles,
                20,
                &RrtParams::default(),
                &mut rng,
            )
            .unwrap_or_else(|e| panic!("trial {trial}: {e}"));
            assert!(oracle_collision_free(&plan, &obstacles));
        }
    }

    #[test]
    fn identical_start_goal_repeats() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let plan = rrt_plan([0.3, 0.3], [0.3, 0.3], &[], 20, &RrtParams::default(), &mut rng)
            .unwrap();
        assert_eq!(plan.len(), 20);
        for i in 0..20 {
            assert_eq!(plan.body_position(i), [0.3, 0.3]);
        }
    }

    #[test]
    fn sealed_goal_reports_infeasible() {
        // box the goal in completely
        let obstacles = [
            Rect::new([0.8, 0.65], [0.15, 0.02]),
            Rect::new([0.8, 0.95], [0.15, 0.02]),
            Rect::new([0.67, 0.8], [0.02, 0.17]),
            Rect::new([0.93, 0.8], [0.02, 0.17]),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = RrtParams {
            max_iters: 800,
            attempts: 2,
            ..RrtParams::default()
        };
        let res = rrt_plan([0.1, 0.1], [0.8, 0.8], &obstacles, 20, &params, &mut rng);
        assert!(matches!(res, Err(PlanError::Infeasible)));
    }
}
