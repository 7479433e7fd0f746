//! Approximate planners producing fixed-length waypoint plans, plus plan
//! subsampling and the plain-text plan format used by the CLI.
//!
//! Plans are deliberately crude: the policy learns to execute them, it does
//! not need them to be dynamically feasible.

pub mod manhattan;
pub mod rrt;

pub use manhattan::manhattan_plan;
pub use rrt::{rrt_plan, RrtParams};

use crate::geom::Vec2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("planner failed to connect start and goal")]
    Infeasible,
    #[error("subsample count {n} outside 2..={len}")]
    BadDensity { n: usize, len: usize },
    #[error("four-contact planning requires obstacle geometry")]
    MissingObstacle,
    #[error("malformed plan text: {0}")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PlannerId {
    Manhattan2,
    Manhattan4,
    Rrt,
    /// Plans read back from text have no recorded provenance.
    External,
}

impl PlannerId {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlannerId::Manhattan2 => "manhattan2",
            PlannerId::Manhattan4 => "manhattan4",
            PlannerId::Rrt => "rrt",
            PlannerId::External => "external",
        }
    }

    pub fn tag(&self) -> u8 {
        match self {
            PlannerId::Manhattan2 => 0,
            PlannerId::Manhattan4 => 1,
            PlannerId::Rrt => 2,
            PlannerId::External => 3,
        }
    }

    pub fn from_tag(t: u8) -> Option<Self> {
        match t {
            0 => Some(PlannerId::Manhattan2),
            1 => Some(PlannerId::Manhattan4),
            2 => Some(PlannerId::Rrt),
            3 => Some(PlannerId::External),
            _ => None,
        }
    }
}

/// Provenance of a plan: which planner produced it and from what task.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanMeta {
    pub planner: PlannerId,
    /// Planar start positions the plan was created from
    /// (`[ee_x, ee_y, box_x, box_y]` for pushing, `[x, y]` for the maze).
    pub start: Vec<f64>,
    /// Random intermediate box position of four-contact plans.
    pub intermediate: Option<Vec2>,
}

/// Fixed-length sequence of planned waypoints together with the goal it leads
/// to. Pushing waypoints are `[ee_x, ee_y, ee_z, box_x, box_y, box_z]`, maze
/// waypoints are the 2D agent position.
#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    /// Row-major `len x dim` waypoint matrix.
    pub waypoints: Vec<f64>,
    pub dim: usize,
    pub goal: Vec2,
    pub meta: PlanMeta,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.waypoints.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn waypoint(&self, i: usize) -> &[f64] {
        &self.waypoints[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last_waypoint(&self) -> &[f64] {
        self.waypoint(self.len() - 1)
    }

    /// Planar position of the moved body in waypoint `i` (box for pushing
    /// plans, agent for maze plans).
    pub fn body_position(&self, i: usize) -> Vec2 {
        let w = self.waypoint(i);
        if self.dim >= 6 {
            [w[3], w[4]]
        } else {
            [w[0], w[1]]
        }
    }

    /// FNV-1a content hash used to deduplicate plans in the replay store.
    pub fn content_hash(&self) -> u64 {
        let mut h = 0xcbf29ce484222325u64;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        eat(&[self.meta.planner.tag()]);
        eat(&(self.dim as u64).to_le_bytes());
        eat(&self.goal[0].to_bits().to_le_bytes());
        eat(&self.goal[1].to_bits().to_le_bytes());
        for w in &self.waypoints {
            eat(&w.to_bits().to_le_bytes());
        }
        for s in &self.meta.start {
            eat(&s.to_bits().to_le_bytes());
        }
        if let Some(i) = self.meta.intermediate {
            eat(&i[0].to_bits().to_le_bytes());
            eat(&i[1].to_bits().to_le_bytes());
        }
        h
    }

    /// One waypoint per line, space-separated; header carries length,
    /// dimension and goal. Values print in shortest round-trip form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{} {} {} {}\n",
            self.len(),
            self.dim,
            self.goal[0],
            self.goal[1]
        ));
        for i in 0..self.len() {
            let row: Vec<String> = self.waypoint(i).iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Plan, PlanError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| PlanError::Parse("empty input".into()))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 4 {
            return Err(PlanError::Parse(format!(
                "header needs `len dim goal_x goal_y`, got {header:?}"
            )));
        }
        let parse_f = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| PlanError::Parse(format!("bad number {s:?}: {e}")))
        };
        let len: usize = head[0]
            .parse()
            .map_err(|e| PlanError::Parse(format!("bad length: {e}")))?;
        let dim: usize = head[1]
            .parse()
            .map_err(|e| PlanError::Parse(format!("bad dim: {e}")))?;
        let goal = [parse_f(head[2])?, parse_f(head[3])?];
        let mut waypoints = Vec::with_capacity(len * dim);
        for line in lines {
            for tok in line.split_whitespace() {
                waypoints.push(parse_f(tok)?);
            }
        }
        if waypoints.len() != len * dim {
            return Err(PlanError::Parse(format!(
                "expected {} values, found {}",
                len * dim,
                waypoints.len()
            )));
        }
        Ok(Plan {
            waypoints,
            dim,
            goal,
            meta: PlanMeta {
                planner: PlannerId::External,
                start: Vec::new(),
                intermediate: None,
            },
        })
    }
}

/// Keep first and last waypoints and select `n` evenly spaced indices in
/// between (linspace over indices, ties rounding to even).
pub fn subsample_plan(plan: &Plan, n: usize) -> Result<Plan, PlanError> {
    let len = plan.len();
    if n < 2 || n > len {
        return Err(PlanError::BadDensity { n, len });
    }
    if n == len {
        return Ok(plan.clone());
    }
    let mut waypoints = Vec::with_capacity(n * plan.dim);
    for j in 0..n {
        let idx = (j as f64 * (len - 1) as f64 / (n - 1) as f64).round_ties_even() as usize;
        waypoints.extend_from_slice(plan.waypoint(idx));
    }
    Ok(Plan {
        waypoints,
        dim: plan.dim,
        goal: plan.goal,
        meta: plan.meta.clone(),
    })
}

/// Re-sample a polyline of rows to exactly `count` rows, uniformly spaced in
/// the arc length induced by `metric` over consecutive rows. Endpoints are
/// preserved exactly; a zero-length polyline repeats its first row.
pub(crate) fn resample_rows(
    rows: &[Vec<f64>],
    metric: impl Fn(&[f64], &[f64]) -> f64,
    count: usize,
) -> Vec<f64> {
    assert!(count >= 2 && !rows.is_empty());
    let dim = rows[0].len();
    let seg_lens: Vec<f64> = rows.windows(2).map(|w| metric(&w[0], &w[1])).collect();
    let total: f64 = seg_lens.iter().sum();
    let mut out = Vec::with_capacity(count * dim);
    if total <= 1e-15 {
        for _ in 0..count {
            out.extend_from_slice(&rows[0]);
        }
        return out;
    }
    out.extend_from_slice(&rows[0]);
    let mut seg = 0;
    let mut seg_start = 0.0;
    for j in 1..count - 1 {
        let target = total * j as f64 / (count - 1) as f64;
        while seg < seg_lens.len() - 1 && seg_start + seg_lens[seg] < target {
            seg_start += seg_lens[seg];
            seg += 1;
        }
        let t = if seg_lens[seg] > 1e-15 {
            ((target - seg_start) / seg_lens[seg]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (a, b) = (&rows[seg], &rows[seg + 1]);
        out.extend((0..dim).map(|k| a[k] + (b[k] - a[k]) * t));
    }
    out.extend_from_slice(&rows[rows.len() - 1]);
    out
}
