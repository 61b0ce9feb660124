use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::map::{Cell, EnvironmentMap};
use crate::model::Pose2D;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetaPlannerParams {
    /// Sub-goal look-ahead in seconds of travel at `v_max`.
    pub horizon: f64,
    /// Pick a new sub-goal once the robot is this close to the current one, meters.
    pub replan_distance: f64,
    /// Clearance kept from obstacles on top of the robot radius, meters.
    pub clearance_margin: f64,
    /// Weight of the clearance penalty relative to path length.
    pub clearance_weight: f64,
    /// Clearance beyond the robot radius at which the penalty vanishes, meters.
    pub clearance_scale: f64,
}

impl Default for MetaPlannerParams {
    fn default() -> Self {
        MetaPlannerParams {
            horizon: 6.0,
            replan_distance: 1.0,
            clearance_margin: 0.1,
            clearance_weight: 2.0,
            clearance_scale: 0.5,
        }
    }
}

impl MetaPlannerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.replan_distance > 0.0 && self.clearance_scale > 0.0) {
            return Err(Error::invalid(
                "meta-planner horizon, re-plan distance and clearance scale must be > 0",
            ));
        }
        if !(self.clearance_margin >= 0.0 && self.clearance_weight >= 0.0) {
            return Err(Error::invalid(
                "meta-planner clearance margin and weight must be >= 0",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    index: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const NEIGHBOURS: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// Cost-to-go over the 8-connected grid of cells where the robot fits,
/// with a penalty for running close to obstacles.
#[derive(Debug, Clone)]
pub struct NavigationField {
    width: usize,
    height: usize,
    resolution: f64,
    free: Vec<bool>,
    cost: Vec<f64>,
    goal: Vec2,
}

impl NavigationField {
    pub fn build(
        env: &EnvironmentMap,
        goal: Vec2,
        robot_radius: f64,
        params: &MetaPlannerParams,
    ) -> Self {
        let (w, h) = (env.width(), env.height());
        let clearance = clearance_field(env);
        let mut free = env.inflated_free(robot_radius + params.clearance_margin);
        let goal_cell = env.cell_of(goal);
        if goal_cell.is_none_or(|c| !free[env.index(c)]) {
            // tight spots: fall back to the bare robot radius
            free = env.inflated_free(robot_radius);
        }
        let mut cost = vec![f64::INFINITY; w * h];
        let mut heap = BinaryHeap::new();
        if let Some(seed) = goal_cell.and_then(|c| nearest_free(env, &free, c)) {
            cost[seed] = 0.0;
            heap.push(Entry {
                cost: 0.0,
                index: seed,
            });
        }
        let res = env.resolution;
        while let Some(Entry { cost: c, index }) = heap.pop() {
            if c > cost[index] {
                continue;
            }
            let cell = env.cell_at(index);
            for (dc, dr) in NEIGHBOURS {
                let (nc, nr) = (cell.col as i64 + dc, cell.row as i64 + dr);
                if nc < 0 || nr < 0 || nc as usize >= w || nr as usize >= h {
                    continue;
                }
                let n = nr as usize * w + nc as usize;
                if !free[n] {
                    continue;
                }
                // no corner cutting
                if dc != 0 && dr != 0 {
                    let a = cell.row * w + nc as usize;
                    let b = nr as usize * w + cell.col;
                    if !free[a] || !free[b] {
                        continue;
                    }
                }
                let step = if dc != 0 && dr != 0 {
                    res * std::f64::consts::SQRT_2
                } else {
                    res
                };
                let slack = (clearance[n] - robot_radius).max(0.0);
                let penalty = (1.0 - slack / params.clearance_scale).max(0.0);
                let next = c + step * (1.0 + params.clearance_weight * penalty);
                if next < cost[n] {
                    cost[n] = next;
                    heap.push(Entry {
                        cost: next,
                        index: n,
                    });
                }
            }
        }
        NavigationField {
            width: w,
            height: h,
            resolution: res,
            free,
            cost,
            goal,
        }
    }

    pub fn goal(&self) -> Vec2 {
        self.goal
    }

    /// Weighted cost-to-go from the cell containing `p`.
    pub fn cost_at(&self, env: &EnvironmentMap, p: Vec2) -> f64 {
        env.cell_of(p)
            .map_or(f64::INFINITY, |c| self.cost[env.index(c)])
    }

    fn is_free_point(&self, env: &EnvironmentMap, p: Vec2) -> bool {
        env.cell_of(p).is_some_and(|c| self.free[env.index(c)])
    }

    /// Straight segment stays inside the planning free space. Samples in
    /// the cell containing `a` are skipped so a robot brushing an inflated
    /// border can still see out.
    pub fn visible(&self, env: &EnvironmentMap, a: Vec2, b: Vec2) -> bool {
        let start_cell = env.cell_of(a);
        let len = a.distance(b);
        let n = (len / (self.resolution * 0.25)).ceil().max(1.0) as usize;
        (0..=n).all(|k| {
            let p = a + (b - a) * (k as f64 / n as f64);
            let cell = env.cell_of(p);
            (cell.is_some() && cell == start_cell) || self.is_free_point(env, p)
        })
    }

    /// Descent along the cost field from `p` to the goal, as cell centres.
    /// Empty when `p` cannot reach the goal.
    pub fn path_from(&self, env: &EnvironmentMap, p: Vec2) -> Vec<Vec2> {
        let Some(start) = env
            .cell_of(p)
            .and_then(|c| nearest_free(env, &self.free, c))
        else {
            return Vec::new();
        };
        if !self.cost[start].is_finite() {
            return Vec::new();
        }
        let mut path = vec![env.cell_center(env.cell_at(start))];
        let mut current = start;
        while self.cost[current] > 0.0 {
            let cell = env.cell_at(current);
            let mut best = current;
            for (dc, dr) in NEIGHBOURS {
                let (nc, nr) = (cell.col as i64 + dc, cell.row as i64 + dr);
                if nc < 0 || nr < 0 || nc as usize >= self.width || nr as usize >= self.height {
                    continue;
                }
                let n = nr as usize * self.width + nc as usize;
                if self.cost[n] < self.cost[best] {
                    best = n;
                }
            }
            if best == current {
                break;
            }
            current = best;
            path.push(env.cell_center(env.cell_at(current)));
        }
        path.push(self.goal);
        path
    }

    /// Sub-goal for a robot at `p`: the farthest point along the planned
    /// path that is in straight line of sight and at most `reach` away.
    pub fn waypoint(&self, env: &EnvironmentMap, p: Vec2, reach: f64) -> Option<Vec2> {
        if self.visible(env, p, self.goal) {
            let d = p.distance(self.goal);
            return Some(if d <= reach {
                self.goal
            } else {
                p + (self.goal - p) * (reach / d)
            });
        }
        let path = self.path_from(env, p);
        if path.is_empty() {
            return None;
        }
        let mut best = path[0];
        for &q in &path {
            if !self.visible(env, p, q) {
                // look a little past the first occlusion for a farther visible vertex
                continue;
            }
            if p.distance(q) > reach {
                best = p + (q - p).normalize_or_zero() * reach;
                break;
            }
            best = q;
        }
        Some(best)
    }
}

/// Approximate distance from each cell centre to the nearest obstacle
/// (8-connected chamfer transform seeded at obstacle and border cells).
fn clearance_field(env: &EnvironmentMap) -> Vec<f64> {
    let (w, h) = (env.width(), env.height());
    let res = env.resolution;
    let mut dist = vec![f64::INFINITY; w * h];
    let mut heap = BinaryHeap::new();
    for row in 0..h {
        for col in 0..w {
            let i = row * w + col;
            if !env.is_free(Cell::new(col, row)) {
                dist[i] = 0.0;
            } else if row == 0 || col == 0 || row == h - 1 || col == w - 1 {
                dist[i] = 0.5 * res;
            } else {
                continue;
            }
            heap.push(Entry {
                cost: dist[i],
                index: i,
            });
        }
    }
    while let Some(Entry { cost, index }) = heap.pop() {
        if cost > dist[index] {
            continue;
        }
        let (col, row) = (index % w, index / w);
        for (dc, dr) in NEIGHBOURS {
            let (nc, nr) = (col as i64 + dc, row as i64 + dr);
            if nc < 0 || nr < 0 || nc as usize >= w || nr as usize >= h {
                continue;
            }
            let n = nr as usize * w + nc as usize;
            let step = if dc != 0 && dr != 0 {
                res * std::f64::consts::SQRT_2
            } else {
                res
            };
            if cost + step < dist[n] {
                dist[n] = cost + step;
                heap.push(Entry {
                    cost: dist[n],
                    index: n,
                });
            }
        }
    }
    dist
}

/// Index of the free cell closest to `cell` by ring search.
fn nearest_free(env: &EnvironmentMap, free: &[bool], cell: Cell) -> Option<usize> {
    let i = env.index(cell);
    if free[i] {
        return Some(i);
    }
    let (w, h) = (env.width() as i64, env.height() as i64);
    let (c0, r0) = (cell.col as i64, cell.row as i64);
    for ring in 1..w.max(h) {
        let mut best: Option<(i64, usize)> = None;
        for r in (r0 - ring)..=(r0 + ring) {
            for c in (c0 - ring)..=(c0 + ring) {
                if (r - r0).abs() != ring && (c - c0).abs() != ring {
                    continue;
                }
                if c < 0 || r < 0 || c >= w || r >= h {
                    continue;
                }
                let idx = (r * w + c) as usize;
                let d = (r - r0).pow(2) + (c - c0).pow(2);
                if free[idx] && best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, idx));
                }
            }
        }
        if let Some((_, idx)) = best {
            return Some(idx);
        }
    }
    None
}

/// One-shot sub-goal for `pose`: builds the navigation field and returns
/// the waypoint within `horizon * v_max`. Falls back to the current pose
/// when the robot cannot reach the goal.
pub fn meta_planner_waypoint(
    pose: &Pose2D,
    goal: Vec2,
    env: &EnvironmentMap,
    robot_radius: f64,
    v_max: f64,
    params: &MetaPlannerParams,
) -> Pose2D {
    let field = NavigationField::build(env, goal, robot_radius, params);
    match field.waypoint(env, pose.position(), v_max * params.horizon) {
        Some(w) => Pose2D::new(w.x, w.y, (w - pose.position()).angle()),
        None => *pose,
    }
}

/// Stateful sub-goal tracker: keeps the current waypoint until the robot
/// comes within `replan_distance` of it or loses sight of it.
#[derive(Debug, Clone)]
pub struct MetaPlanner {
    params: MetaPlannerParams,
    field: Option<NavigationField>,
    current: Option<Vec2>,
}

impl MetaPlanner {
    pub fn new(params: MetaPlannerParams) -> Self {
        MetaPlanner {
            params,
            field: None,
            current: None,
        }
    }

    pub fn reset(&mut self, env: &EnvironmentMap, goal: Vec2, robot_radius: f64) {
        self.field = Some(NavigationField::build(
            env,
            goal,
            robot_radius,
            &self.params,
        ));
        self.current = None;
    }

    pub fn current(&self) -> Option<Vec2> {
        self.current
    }

    pub fn waypoint(&mut self, env: &EnvironmentMap, p: Vec2, v_max: f64) -> Vec2 {
        let Some(field) = &self.field else {
            return p;
        };
        let keep = self.current.is_some_and(|w| {
            w == field.goal()
                || (p.distance(w) > self.params.replan_distance && field.visible(env, p, w))
        });
        if !keep {
            self.current = Some(
                field
                    .waypoint(env, p, v_max * self.params.horizon)
                    .unwrap_or(p),
            );
        }
        self.current.unwrap_or(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    fn open_env() -> EnvironmentMap {
        EnvironmentMap::open("open", 300, 200, 0.1, Vec2::ZERO).unwrap()
    }

    /// Wall along y in [5.0, 5.2) with a gap for x in [14, 16).
    fn gap_env() -> EnvironmentMap {
        let mut env = EnvironmentMap::open("gap", 200, 100, 0.1, Vec2::ZERO).unwrap();
        for col in 0..200 {
            if !(140..160).contains(&col) {
                env.set_free(Cell::new(col, 50), false);
                env.set_free(Cell::new(col, 51), false);
            }
        }
        env
    }

    #[test]
    fn open_map_waypoint_on_goal_bearing() {
        let env = open_env();
        let params = MetaPlannerParams::default();
        let pose = Pose2D::new(2.03, 3.07, 0.0);
        for goal in [
            Vec2::new(27.0, 15.0),
            Vec2::new(25.0, 3.5),
            Vec2::new(3.0, 19.0),
        ] {
            let w = meta_planner_waypoint(&pose, goal, &env, 0.23, 1.2, &params);
            let bearing = (goal - pose.position()).angle();
            let got = (w.position() - pose.position()).angle();
            assert!((got - bearing).abs() < 1f64.to_radians(), "{goal:?}");
            assert!(w.position().distance(pose.position()) <= 1.2 * 6.0 + 1e-9);
        }
    }

    #[test]
    fn goal_within_horizon_is_waypoint() {
        let env = open_env();
        let pose = Pose2D::new(5.0, 5.0, 1.0);
        let goal = Vec2::new(9.0, 8.0);
        let w = meta_planner_waypoint(&pose, goal, &env, 0.23, 1.2, &MetaPlannerParams::default());
        assert_eq!(w.position(), goal);
    }

    /// 4-connected BFS distance (in cells) from the goal over disc-clear cells.
    fn bfs_from(env: &EnvironmentMap, goal: Vec2, radius: f64) -> Vec<Option<u32>> {
        let free = env.inflated_free(radius);
        let mut dist = vec![None; free.len()];
        let g = env.index(env.cell_of(goal).unwrap());
        dist[g] = Some(0);
        let mut queue = VecDeque::from([g]);
        while let Some(i) = queue.pop_front() {
            let c = env.cell_at(i);
            let d = dist[i].unwrap();
            let mut push = |col: usize, row: usize| {
                let j = env.index(Cell::new(col, row));
                if free[j] && dist[j].is_none() {
                    dist[j] = Some(d + 1);
                    queue.push_back(j);
                }
            };
            if c.col > 0 {
                push(c.col - 1, c.row);
            }
            if c.col + 1 < env.width() {
                push(c.col + 1, c.row);
            }
            if c.row > 0 {
                push(c.col, c.row - 1);
            }
            if c.row + 1 < env.height() {
                push(c.col, c.row + 1);
            }
        }
        dist
    }

    #[test]
    fn waypoint_heads_for_the_gap() {
        let env = gap_env();
        let pose = Pose2D::new(10.0, 2.0, 0.0);
        let goal = Vec2::new(10.0, 8.0);
        let w = meta_planner_waypoint(&pose, goal, &env, 0.23, 1.2, &MetaPlannerParams::default())
            .position();
        // inside the corridor leading through the gap
        assert!((13.5..16.5).contains(&w.x), "{w:?}");
        assert!((3.5..6.5).contains(&w.y), "{w:?}");
        let (clear, _) = env.nearest_obstacle(w, 5.0).unwrap();
        assert!(clear > 0.23, "{clear}");
        // oracle: the waypoint makes geodesic progress toward the goal
        let bfs = bfs_from(&env, goal, 0.23);
        let at = |p: Vec2| bfs[env.index(env.cell_of(p).unwrap())].unwrap() as f64;
        let progress = (at(pose.position()) - at(w)) * env.resolution;
        assert!(progress > 0.8 * pose.position().distance(w), "{progress}");
    }

    #[test]
    fn enclosed_robot_keeps_pose() {
        let mut env = open_env();
        for c in 40..=60 {
            for r in [40, 60] {
                env.set_free(Cell::new(c, r), false);
                env.set_free(Cell::new(r, c), false);
            }
        }
        let pose = Pose2D::new(5.0, 5.0, 0.5);
        let w = meta_planner_waypoint(
            &pose,
            Vec2::new(20.0, 15.0),
            &env,
            0.23,
            1.2,
            &MetaPlannerParams::default(),
        );
        assert_eq!(w, pose);
    }

    #[test]
    fn stateful_planner_replans_near_waypoint() {
        let env = open_env();
        let mut mp = MetaPlanner::new(MetaPlannerParams::default());
        mp.reset(&env, Vec2::new(28.0, 3.0), 0.23);
        let first = mp.waypoint(&env, Vec2::new(2.0, 3.0), 1.2);
        assert!((first - Vec2::new(9.2, 3.0)).length() < 1e-9);
        // still far from the waypoint: keep it
        assert_eq!(mp.waypoint(&env, Vec2::new(5.0, 3.0), 1.2), first);
        // within 1 m: move on
        let next = mp.waypoint(&env, Vec2::new(8.5, 3.0), 1.2);
        assert!(next.x > first.x);
    }

    #[test]
    fn params_validation() {
        assert!(MetaPlannerParams::default().validate().is_ok());
        assert!(MetaPlannerParams {
            horizon: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
