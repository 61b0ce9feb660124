use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::model::{bearing_error, Pose2D};

/// Sum of segment lengths.
pub fn path_length(positions: &[Vec2]) -> f64 {
    positions.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Straight-line start-to-goal distance over the travelled path length.
/// Higher is better; at most 1 for paths that end on the goal.
pub fn path_length_ratio(start: Vec2, goal: Vec2, path_length: f64) -> Result<f64> {
    if !(path_length > 0.0) {
        return Err(Error::invalid(
            "path length ratio undefined for a zero-length path",
        ));
    }
    Ok(start.distance(goal) / path_length)
}

/// Remaining distance to goal as a fraction of the initial distance.
pub fn goal_traversal_ratio(start: Vec2, end: Vec2, goal: Vec2) -> Result<f64> {
    let initial = start.distance(goal);
    if !(initial > 0.0) {
        return Err(Error::invalid(
            "goal traversal ratio undefined when starting at the goal",
        ));
    }
    Ok(end.distance(goal) / initial)
}

/// Mean absolute angle between heading and goal direction over poses
/// farther than `goal_radius` from the goal.
pub fn path_irregularity(poses: &[Pose2D], goal: Vec2, goal_radius: f64) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for p in poses
        .iter()
        .filter(|p| p.position().distance(goal) > goal_radius)
    {
        sum += bearing_error(p, goal);
        n += 1;
    }
    if n == 0 {
        return Err(Error::invalid(
            "path irregularity undefined: every pose is at the goal",
        ));
    }
    Ok(sum / n as f64)
}
