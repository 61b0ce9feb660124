use crate::model::AgentState;

/// Upper bound applied to closest-pedestrian distances, in meters.
pub const CPD_SATURATION: f64 = 10.0;
/// Upper bound applied to times-to-collision, in seconds.
pub const TTC_SATURATION: f64 = 10.0;

/// Smallest surface-to-surface distance to any pedestrian, saturated at
/// 10 m. Negative while overlapping; 10 m with nobody around.
pub fn closest_pedestrian_distance(robot: &AgentState, pedestrians: &[AgentState]) -> f64 {
    pedestrians
        .iter()
        .map(|p| robot.position().distance(p.position()) - robot.radius - p.radius)
        .fold(CPD_SATURATION, f64::min)
}

/// Earliest time at which the two discs touch when both keep their current
/// velocity. Zero when already overlapping, infinite when they never meet.
pub fn pair_time_to_collision(robot: &AgentState, ped: &AgentState) -> f64 {
    let p = ped.position() - robot.position();
    let v = ped.velocity - robot.velocity;
    let r = robot.radius + ped.radius;
    let c = p.length_squared() - r * r;
    if c <= 0.0 {
        return 0.0;
    }
    let a = v.length_squared();
    let b = 2.0 * p.dot(v);
    if a == 0.0 || b >= 0.0 {
        // not approaching
        return f64::INFINITY;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    // numerically stable smaller root: 2c / (-b + sqrt(disc))
    2.0 * c / (-b + disc.sqrt())
}

/// Minimum time-to-collision over pedestrians, saturated at 10 s.
pub fn time_to_collision(robot: &AgentState, pedestrians: &[AgentState]) -> f64 {
    pedestrians
        .iter()
        .map(|p| pair_time_to_collision(robot, p))
        .fold(TTC_SATURATION, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec2;
    use crate::model::{AgentId, Pose2D};

    fn agent(x: f64, y: f64, vx: f64, vy: f64, r: f64) -> AgentState {
        AgentState::new(AgentId(0), Pose2D::new(x, y, 0.0), Vec2::new(vx, vy), r).unwrap()
    }

    #[test]
    fn cpd_examples() {
        let robot = agent(0.0, 0.0, 0.0, 0.0, 0.23);
        let d = closest_pedestrian_distance(&robot, &[agent(5.53, 0.0, 0.0, 0.0, 0.30)]);
        assert!((d - 5.0).abs() < 1e-12);
        assert_eq!(
            closest_pedestrian_distance(&robot, &[agent(30.0, 0.0, 0.0, 0.0, 0.3)]),
            10.0
        );
        let d = closest_pedestrian_distance(&robot, &[agent(0.4, 0.0, 0.0, 0.0, 0.3)]);
        assert!((d + 0.13).abs() < 1e-12);
        assert_eq!(closest_pedestrian_distance(&robot, &[]), 10.0);
    }

    #[test]
    fn ttc_examples() {
        // head-on: 5 m apart, closing at 2 m/s, radius sum 0.5
        let robot = agent(0.0, 0.0, 1.0, 0.0, 0.25);
        let ped = agent(5.0, 0.0, -1.0, 0.0, 0.25);
        assert!((time_to_collision(&robot, &[ped]) - 2.25).abs() < 1e-12);
        // same velocity, parallel
        let ped = agent(0.0, 2.0, 1.0, 0.0, 0.25);
        assert_eq!(time_to_collision(&robot, &[ped]), 10.0);
        // overlapping
        let ped = agent(0.3, 0.0, 0.0, 0.0, 0.25);
        assert_eq!(time_to_collision(&robot, &[ped]), 0.0);
        // receding
        let ped = agent(2.0, 0.0, 3.0, 0.0, 0.25);
        assert_eq!(pair_time_to_collision(&robot, &ped), f64::INFINITY);
        // miss: lateral offset larger than radius sum
        let ped = agent(5.0, 1.0, -1.0, 0.0, 0.25);
        assert_eq!(pair_time_to_collision(&robot, &ped), f64::INFINITY);
        assert_eq!(time_to_collision(&robot, &[]), 10.0);
    }

    #[test]
    fn touching_means_zero_ttc() {
        let robot = agent(0.0, 0.0, 0.0, 0.0, 0.25);
        let ped = agent(0.5, 0.0, 0.0, 1.0, 0.25);
        assert_eq!(closest_pedestrian_distance(&robot, &[ped]), 0.0);
        assert_eq!(time_to_collision(&robot, &[ped]), 0.0);
    }
}
