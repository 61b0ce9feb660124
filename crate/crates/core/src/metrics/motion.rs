use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicStats {
    /// m/s
    pub average_speed: f64,
    /// J, unit mass: sum of squared speed times dt (no 1/2 factor).
    pub energy: f64,
    /// m/s², mean magnitude of the velocity finite differences.
    pub average_acceleration: f64,
    /// m/s³, mean magnitude of the acceleration finite differences.
    pub average_jerk: f64,
}

/// Motion statistics from positions sampled every `dt` seconds.
/// Velocities are first differences of positions; acceleration and jerk are
/// successive differences of those.
pub fn kinematic_stats(positions: &[Vec2], dt: f64) -> Result<KinematicStats> {
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
    }
    if positions.len() < 4 {
        return Err(Error::invalid(format!(
            "kinematic statistics need at least 4 positions, got {}",
            positions.len()
        )));
    }
    let vel: Vec<Vec2> = positions.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
    let acc: Vec<Vec2> = vel.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
    let jerk: Vec<Vec2> = acc.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
    let mean_len = |v: &[Vec2]| v.iter().map(|x| x.length()).sum::<f64>() / v.len() as f64;
    Ok(KinematicStats {
        average_speed: mean_len(&vel),
        energy: vel.iter().map(|v| v.length_squared() * dt).sum(),
        average_acceleration: mean_len(&acc),
        average_jerk: mean_len(&jerk),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_speed(speed: f64, seconds: f64, rate: f64) -> Vec<Vec2> {
        let n = (seconds * rate).round() as usize;
        (0..=n)
            .map(|k| Vec2::new(speed * k as f64 / rate, 0.0))
            .collect()
    }

    #[test]
    fn constant_one_meter_per_second() {
        let s = kinematic_stats(&constant_speed(1.0, 10.0, 25.0), 0.04).unwrap();
        assert!((s.average_speed - 1.0).abs() < 1e-9);
        assert!((s.energy - 10.0).abs() < 1e-9);
        assert!(s.average_acceleration < 1e-9);
        assert!(s.average_jerk < 1e-6);
    }

    #[test]
    fn constant_two_meters_per_second() {
        let s = kinematic_stats(&constant_speed(2.0, 1.0, 25.0), 0.04).unwrap();
        assert!((s.energy - 4.0).abs() < 1e-9);
    }

    #[test]
    fn ramp_energy_close_to_integral() {
        // v(t) = t on [0, 1]: x(t) = t²/2, energy = ∫ t² dt = 1/3
        let pts: Vec<Vec2> = (0..=25)
            .map(|k| {
                let t = k as f64 / 25.0;
                Vec2::new(0.5 * t * t, 0.0)
            })
            .collect();
        let s = kinematic_stats(&pts, 0.04).unwrap();
        assert!(
            (s.energy - 1.0 / 3.0).abs() / (1.0 / 3.0) < 0.02,
            "{}",
            s.energy
        );
        assert!((s.average_acceleration - 1.0).abs() < 1e-9);
    }

    #[test]
    fn needs_four_samples() {
        assert!(kinematic_stats(&[Vec2::ZERO; 3], 0.04).is_err());
        assert!(kinematic_stats(&[Vec2::ZERO; 4], 0.0).is_err());
    }

    #[test]
    fn energy_doubles_when_speed_doubles_on_same_path() {
        // same 6 m path at 1 m/s and 2 m/s
        let slow = kinematic_stats(&constant_speed(1.0, 6.0, 25.0), 0.04).unwrap();
        let fast = kinematic_stats(&constant_speed(2.0, 3.0, 25.0), 0.04).unwrap();
        assert!((fast.energy / slow.energy - 2.0).abs() < 1e-9);
    }
}
