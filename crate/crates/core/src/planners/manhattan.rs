//! Crude manhattan-like pushing planner. The planned box path moves
//! axis-aligned (x-leg, then y-leg, per contact pair); between legs the
//! planned end effector lifts, travels behind the next push face, and lowers
//! back to contact height. Four-contact plans insert a random intermediate
//! box position, so one start/goal pair maps to many plans.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{resample_rows, Plan, PlanError, PlanMeta, PlannerId};
use crate::envs::pushing::EE_START_Z;
use crate::envs::EnvConfig;
use crate::geom::{dist, Rect, Vec2};

/// Travel height between pushing legs.
pub const LIFT_Z: f64 = EE_START_Z;
const CONTACT_Z: f64 = 0.0;

/// Plan a pushing trajectory of exactly `plan_len` waypoints.
///
/// `contacts` is 2 for direct plans or 4 for plans through a random
/// collision-free intermediate box position; the latter requires the
/// obstacle geometry.
pub fn manhattan_plan(
    start_state: &[f64],
    goal: Vec2,
    contacts: usize,
    obstacle: Option<&Rect>,
    cfg: &EnvConfig,
    plan_len: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Plan, PlanError> {
    assert!(contacts == 2 || contacts == 4, "contacts must be 2 or 4");
    let ee = [start_state[0], start_state[1], start_state[2]];
    let box_start = [start_state[3], start_state[4]];
    let planner = if contacts == 2 {
        PlannerId::Manhattan2
    } else {
        PlannerId::Manhattan4
    };
    let meta_start = vec![ee[0], ee[1], box_start[0], box_start[1]];

    // already solved: a valid constant plan whose goal stays recoverable
    if dist(box_start, goal) <= cfg.goal_tolerance {
        let row = [ee[0], ee[1], ee[2], box_start[0], box_start[1], 0.0];
        let mut waypoints = Vec::with_capacity(plan_len * 6);
        for _ in 0..plan_len {
            waypoints.extend_from_slice(&row);
        }
        return Ok(Plan {
            waypoints,
            dim: 6,
            goal,
            meta: PlanMeta {
                planner,
                start: meta_start,
                intermediate: None,
            },
        });
    }

    let intermediate = if contacts == 4 {
        let obstacle = obstacle.ok_or(PlanError::MissingObstacle)?;
        Some(sample_intermediate(obstacle, cfg, rng)?)
    } else {
        None
    };

    let mut corners = vec![box_start];
    if let Some(mid) = intermediate {
        corners.push(mid);
    }
    corners.push(goal);

    // rows are [ee_x, ee_y, ee_z, box_x, box_y, box_z]
    let offset = cfg.box_half() + cfg.ee_radius;
    let mut rows: Vec<Vec<f64>> = vec![vec![ee[0], ee[1], ee[2], box_start[0], box_start[1], 0.0]];
    let push_row =
        |e: [f64; 3], b: Vec2| -> Vec<f64> { vec![e[0], e[1], e[2], b[0], b[1], 0.0] };
    if (ee[2] - LIFT_Z).abs() > 1e-12 {
        rows.push(push_row([ee[0], ee[1], LIFT_Z], box_start));
    }

    // collect axis-aligned legs (axis, from, to)
    let mut legs: Vec<(usize, Vec2, Vec2)> = Vec::new();
    for pair in corners.windows(2) {
        let (from, to) = (pair[0], pair[1]);
        if to[0] != from[0] {
            legs.push((0, from, [to[0], from[1]]));
        }
        if to[1] != from[1] {
            legs.push((1, [to[0], from[1]], to));
        }
    }

    for (i, (axis, from, to)) in legs.iter().enumerate() {
        let s = (to[*axis] - from[*axis]).signum();
        let mut off = [0.0, 0.0];
        off[*axis] = -s * offset;
        let approach = [from[0] + off[0], from[1] + off[1]];
        let depart = [to[0] + off[0], to[1] + off[1]];
        rows.push(push_row([approach[0], approach[1], LIFT_Z], *from));
        rows.push(push_row([approach[0], approach[1], CONTACT_Z], *from));
        rows.push(push_row([depart[0], depart[1], CONTACT_Z], *to));
        if i + 1 < legs.len() {
            rows.push(push_row([depart[0], depart[1], LIFT_Z], *to));
        }
    }

    let waypoints = resample_rows(
        &rows,
        |a, b| {
            let dx = b[0] - a[0];
            let dy = b[1] - a[1];
            let dz = b[2] - a[2];
            (dx * dx + dy * dy + dz * dz).sqrt()
        },
        plan_len,
    );

    Ok(Plan {
        waypoints,
        dim: 6,
        goal,
        meta: PlanMeta {
            planner,
            start: meta_start,
            intermediate,
        },
    })
}

/// Random intermediate box position with clearance of at least the box
/// half-diagonal from the obstacle.
fn sample_intermediate(
    obstacle: &Rect,
    cfg: &EnvConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec2, PlanError> {
    let r = cfg.table_half() - cfg.box_half();
    let clearance = cfg.box_half() * 2.0f64.sqrt();
    for _ in 0..10_000 {
        let p = [rng.gen_range(-r..=r), rng.gen_range(-r..=r)];
        if obstacle.distance(p) >= clearance {
            return Ok(p);
        }
    }
    Err(PlanError::Infeasible)
}
