use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::error::{ensure, Result};
use crate::ofdm::RadioConfig;

/// A position or displacement in metres.
pub type Point3 = Vector3<f64>;

/// Linear (not dB) antenna gains of the transmitter and receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaGains {
    pub tx: f64,
    pub rx: f64,
}

impl Default for AntennaGains {
    fn default() -> Self {
        Self { tx: 1.0, rx: 1.0 }
    }
}

/// Received amplitude of a reflection, `alpha = sqrt(P G_tx G_rx lambda^2 sigma / ((4 pi)^3 (R_tx R_rx)^2))`.
///
/// With `tx_power` in watts the squared result is the received power in watts.
pub fn path_gain(
    tx_range: f64,
    rx_range: f64,
    rcs: f64,
    radio: &RadioConfig,
    tx_power: f64,
    gains: AntennaGains,
) -> Result<f64> {
    ensure(tx_range > 0.0 && rx_range > 0.0, || {
        format!("path ranges must be positive, got {tx_range} and {rx_range}")
    })?;
    ensure(rcs >= 0.0 && tx_power >= 0.0, || {
        "RCS and transmit power must be non-negative".to_string()
    })?;
    let lambda = radio.wavelength();
    let num = tx_power * gains.tx * gains.rx * lambda * lambda * rcs;
    let den = (4.0 * PI).powi(3) * (tx_range * rx_range).powi(2);
    Ok((num / den).sqrt())
}

/// Amplitude of the direct Tx-Rx path over distance `los_distance`.
///
/// Chosen as `sqrt(P G_tx G_rx lambda^2 / ((4 pi)^2 L))` so that the reflection-to-direct power
/// ratio equals [`power_ratio`] exactly.
pub fn los_gain(
    los_distance: f64,
    radio: &RadioConfig,
    tx_power: f64,
    gains: AntennaGains,
) -> Result<f64> {
    ensure(los_distance > 0.0, || {
        "monostatic geometry has no direct path".to_string()
    })?;
    let lambda = radio.wavelength();
    Ok(
        (tx_power * gains.tx * gains.rx * lambda * lambda / ((4.0 * PI).powi(2) * los_distance))
            .sqrt(),
    )
}

/// Reflection-to-direct power ratio `eta = L sigma / (4 pi (R_tx R_rx)^2)` in dB.
pub fn power_ratio(los_distance: f64, tx_range: f64, rx_range: f64, rcs: f64) -> Result<f64> {
    ensure(los_distance > 0.0, || {
        "power ratio needs a bistatic geometry (L > 0)".to_string()
    })?;
    ensure(tx_range > 0.0 && rx_range > 0.0 && rcs > 0.0, || {
        "ranges and RCS must be positive".to_string()
    })?;
    Ok(10.0 * (los_distance * rcs / (4.0 * PI * (tx_range * rx_range).powi(2))).log10())
}

/// Change in total path length `|p - tx| + |p - rx|` when the target at `target` moves by `displacement`.
pub fn bistatic_projection(
    tx: &Point3,
    rx: &Point3,
    target: &Point3,
    displacement: &Point3,
) -> Result<f64> {
    let finite = |p: &Point3| p.iter().all(|v| v.is_finite());
    ensure(
        finite(tx) && finite(rx) && finite(target) && finite(displacement),
        || "positions must be finite".to_string(),
    )?;
    ensure(
        (target - tx).norm() > 1e-9 && (target - rx).norm() > 1e-9,
        || "target coincides with a radio".to_string(),
    )?;
    let moved = target + displacement;
    let before = (target - tx).norm() + (target - rx).norm();
    let after = (moved - tx).norm() + (moved - rx).norm();
    Ok(after - before)
}

/// Uniform linear receive array lying in the horizontal plane.
///
/// Element `m` sits at `position + m d e`, where `e` is perpendicular to the boresight
/// heading. Angles are measured from boresight, positive towards `e` (counter-clockwise).
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaArray {
    pub position: Point3,
    pub heading_deg: f64,
    pub n_elements: usize,
    pub spacing: f64,
}

impl AntennaArray {
    /// Three elements at half-wavelength spacing.
    pub fn half_wavelength(position: Point3, heading_deg: f64, radio: &RadioConfig) -> Self {
        Self {
            position,
            heading_deg,
            n_elements: 3,
            spacing: radio.wavelength() / 2.0,
        }
    }

    fn axes(&self) -> (Point3, Point3) {
        let h = self.heading_deg.to_radians();
        (
            Point3::new(h.cos(), h.sin(), 0.0),
            Point3::new(-h.sin(), h.cos(), 0.0),
        )
    }

    /// Sine of the arrival angle for a wave coming from `source`.
    pub fn sin_aoa(&self, source: &Point3) -> f64 {
        let d = source - self.position;
        let n = d.norm();
        if n == 0.0 {
            return 0.0;
        }
        let (_, e) = self.axes();
        (d.dot(&e) / n).clamp(-1.0, 1.0)
    }

    /// Arrival angle in degrees, in `[-90, 90]`.
    pub fn aoa_deg(&self, source: &Point3) -> f64 {
        self.sin_aoa(source).asin().to_degrees()
    }

    /// Steering phasors `exp(j 2 pi m d sin(theta) / lambda)` for each element.
    pub fn steering(&self, sin_theta: f64, wavelength: f64) -> Vec<Complex64> {
        (0..self.n_elements)
            .map(|m| {
                Complex64::from_polar(
                    1.0,
                    2.0 * PI * m as f64 * self.spacing * sin_theta / wavelength,
                )
            })
            .collect()
    }

    /// Converts a device-frame range and angle into a world position.
    pub fn to_world(&self, range: f64, aoa_deg: f64) -> Point3 {
        let (b, e) = self.axes();
        let a = aoa_deg.to_radians();
        self.position + range * (a.cos() * b + a.sin() * e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SPEED_OF_LIGHT;

    fn radio_with_wavelength(lambda: f64) -> RadioConfig {
        RadioConfig::new(SPEED_OF_LIGHT / lambda, 20e6, 64, 16).unwrap()
    }

    #[test]
    fn radar_equation_hand_value() {
        let r = radio_with_wavelength(0.125);
        let a = path_gain(2.0, 2.0, 1.0, &r, 1.0, AntennaGains::default()).unwrap();
        // 0.125^2 / ((4 pi)^3 * 16)
        let want = 0.015625 / (1_984.401_707_539_586 * 16.0);
        assert!((a * a - want).abs() / want < 1e-9);
        assert!((10.0 * (a * a).log10() + 63.08).abs() < 0.01);
        let b = path_gain(4.0, 4.0, 1.0, &r, 1.0, AntennaGains::default()).unwrap();
        assert!((a * a / (b * b) - 16.0).abs() < 1e-9);
        assert_eq!(
            path_gain(2.0, 2.0, 0.0, &r, 1.0, AntennaGains::default()).unwrap(),
            0.0
        );
        assert!(path_gain(0.0, 2.0, 1.0, &r, 1.0, AntennaGains::default()).is_err());
    }

    #[test]
    fn power_ratio_values() {
        let eta = power_ratio(2.0, 2.0, 2.0, 1.0).unwrap();
        assert!((eta - 10.0 * (2.0 / (4.0 * PI * 16.0)).log10()).abs() < 1e-12);
        assert!((eta + 20.0).abs() < 0.1);
        let four = power_ratio(2.0, 2.0, 2.0, 4.0).unwrap();
        assert!((four - eta - 6.0206).abs() < 1e-3);
        let far = power_ratio(2.0, 4.0, 2.0, 1.0).unwrap();
        assert!((eta - far - 6.0206).abs() < 1e-3);
        assert!(power_ratio(0.0, 2.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn los_gain_consistent_with_ratio() {
        let r = RadioConfig::default();
        let g = AntennaGains::default();
        let a = path_gain(2.0, 3.0, 0.5, &r, 0.1, g).unwrap();
        let l = los_gain(1.5, &r, 0.1, g).unwrap();
        let eta = power_ratio(1.5, 2.0, 3.0, 0.5).unwrap();
        assert!((10.0 * (a * a / (l * l)).log10() - eta).abs() < 1e-9);
    }

    #[test]
    fn projection_examples() {
        let o = Point3::zeros();
        let d = bistatic_projection(
            &o,
            &o,
            &Point3::new(3.0, 0.0, 0.0),
            &Point3::new(0.1, 0.0, 0.0),
        )
        .unwrap();
        assert!((d - 0.2).abs() < 1e-12);
        let d = bistatic_projection(
            &o,
            &Point3::new(2.0, 0.0, 0.0),
            &Point3::new(1.0, 1.0, 0.0),
            &Point3::new(0.0, 0.1, 0.0),
        )
        .unwrap();
        assert!((d - (2.0 * 2.21f64.sqrt() - 2.0 * 2f64.sqrt())).abs() < 1e-12);
        assert!((d - 0.1448).abs() < 1e-4);
        assert!(bistatic_projection(&o, &o, &o, &Point3::new(1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn tangent_move_is_first_order_zero() {
        let tx = Point3::new(-1.0, 0.0, 0.0);
        let rx = Point3::new(1.0, 0.0, 0.0);
        let p = Point3::new(0.3, 1.2, 0.0);
        let n = (p - tx).normalize() + (p - rx).normalize();
        let t = Point3::new(-n.y, n.x, 0.0).normalize() * 1e-5;
        let d = bistatic_projection(&tx, &rx, &p, &t).unwrap();
        assert!(d.abs() < 1e-9);
    }

    #[test]
    fn array_angles() {
        let r = RadioConfig::default();
        let a = AntennaArray::half_wavelength(Point3::zeros(), 0.0, &r);
        assert!(a.aoa_deg(&Point3::new(5.0, 0.0, 0.0)).abs() < 1e-12);
        assert!((a.aoa_deg(&Point3::new(1.0, 1.0, 0.0)) - 45.0).abs() < 1e-9);
        let p = a.to_world(5.0, 30.0);
        assert!((p.x - 4.330127).abs() < 1e-6 && (p.y - 2.5).abs() < 1e-12);
        let s = a.steering(1.0, r.wavelength());
        assert!((s[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    }
}
