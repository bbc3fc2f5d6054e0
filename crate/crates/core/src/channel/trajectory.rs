use std::f64::consts::PI;

use super::Point3;

/// Motion of a reflector over time.
#[derive(Debug, Clone, PartialEq)]
pub enum Trajectory {
    Static(Point3),
    /// Constant velocity from `start` at time zero.
    Linear {
        start: Point3,
        velocity: Point3,
    },
    /// Sinusoidal oscillation about `center` along the unit vector `direction`.
    Oscillating {
        center: Point3,
        direction: Point3,
        amplitude: f64,
        rate_hz: f64,
    },
}

impl Trajectory {
    /// Chest motion of a breathing person facing along `direction`: 5 mm at 0.25 Hz.
    pub fn breathing(center: Point3, direction: Point3) -> Self {
        Trajectory::Oscillating {
            center,
            direction: direction.normalize(),
            amplitude: 5e-3,
            rate_hz: 0.25,
        }
    }

    pub fn position(&self, t: f64) -> Point3 {
        match self {
            Trajectory::Static(p) => *p,
            Trajectory::Linear { start, velocity } => start + velocity * t,
            Trajectory::Oscillating {
                center,
                direction,
                amplitude,
                rate_hz,
            } => center + direction * (amplitude * (2.0 * PI * rate_hz * t).sin()),
        }
    }

    pub fn is_static(&self) -> bool {
        match self {
            Trajectory::Static(_) => true,
            Trajectory::Linear { velocity, .. } => velocity.norm() == 0.0,
            Trajectory::Oscillating {
                amplitude, rate_hz, ..
            } => *amplitude == 0.0 || *rate_hz == 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions() {
        let l = Trajectory::Linear {
            start: Point3::new(1.0, 0.0, 0.0),
            velocity: Point3::new(0.5, 0.0, 0.0),
        };
        assert_eq!(l.position(2.0), Point3::new(2.0, 0.0, 0.0));
        let b = Trajectory::breathing(Point3::new(0.0, 1.0, 0.0), Point3::new(0.0, 2.0, 0.0));
        assert!((b.position(1.0).y - 1.005).abs() < 1e-12);
        assert!(!b.is_static());
        assert!(Trajectory::Static(Point3::zeros()).is_static());
    }
}
