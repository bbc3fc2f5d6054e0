use crate::error::{ensure, invalid, Result};
use crate::estimation::Pose;

use super::SensingMessage;

/// Axis-aligned search grid in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub cell: f64,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, cell: f64) -> Result<Self> {
        ensure(cell > 0.0, || {
            format!("cell size must be positive, got {cell}")
        })?;
        ensure(x_max > x_min && y_max > y_min, || {
            "empty grid extent".to_string()
        })?;
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
            cell,
        })
    }

    /// A 0.25 m grid over the bounding box of `points`, grown by `margin`.
    pub fn covering(points: &[[f64; 2]], margin: f64) -> Result<Self> {
        ensure(!points.is_empty(), || "no points to cover".to_string())?;
        let fold =
            |i: usize, f: fn(f64, f64) -> f64, init: f64| points.iter().map(|p| p[i]).fold(init, f);
        Self::new(
            fold(0, f64::min, f64::INFINITY) - margin,
            fold(0, f64::max, f64::NEG_INFINITY) + margin,
            fold(1, f64::min, f64::INFINITY) - margin,
            fold(1, f64::max, f64::NEG_INFINITY) + margin,
            0.25,
        )
    }

    pub fn nx(&self) -> usize {
        ((self.x_max - self.x_min) / self.cell).ceil() as usize
    }

    pub fn ny(&self) -> usize {
        ((self.y_max - self.y_min) / self.cell).ceil() as usize
    }

    pub fn center(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.x_min + (ix as f64 + 0.5) * self.cell,
            self.y_min + (iy as f64 + 0.5) * self.cell,
        ]
    }
}

/// Independent Gaussian errors on range and angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma_range_m: f64,
    pub sigma_aoa_deg: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            sigma_range_m: 0.5,
            sigma_aoa_deg: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodGrid {
    pub spec: GridSpec,
    /// Row-major over y then x: `values[iy * nx + ix]`.
    pub values: Vec<f64>,
}

impl LikelihoodGrid {
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.spec.nx() + ix]
    }

    pub fn argmax(&self) -> (usize, usize) {
        let nx = self.spec.nx();
        let (best, _) =
            self.values
                .iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
                );
        (best % nx, best / nx)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionResult {
    pub position: [f64; 2],
    pub cell: (usize, usize),
    pub log_likelihood: f64,
    pub n_used: usize,
    pub grid: LikelihoodGrid,
}

fn wrap_deg(a: f64) -> f64 {
    (a + 180.0).rem_euclid(360.0) - 180.0
}

fn observation(m: &SensingMessage) -> Option<(Pose, Option<f64>, Option<f64>)> {
    let e = m.as_estimate()?;
    let r = e.range();
    (r.is_some() || e.aoa_deg.is_some()).then_some((m.pose, r, e.aoa_deg))
}

/// Sum over messages of the Gaussian log-likelihood (up to a constant) of a target at `p`.
pub fn log_likelihood(messages: &[SensingMessage], p: [f64; 2], noise: &NoiseModel) -> f64 {
    messages
        .iter()
        .filter_map(observation)
        .map(|(pose, r, a)| {
            let dx = p[0] - pose.x;
            let dy = p[1] - pose.y;
            let mut ll = 0.0;
            if let Some(r) = r {
                let e = ((dx * dx + dy * dy).sqrt() - r) / noise.sigma_range_m;
                ll -= 0.5 * e * e;
            }
            if let Some(a) = a {
                let predicted = dy.atan2(dx).to_degrees() - pose.heading_deg;
                let e = wrap_deg(predicted - a) / noise.sigma_aoa_deg;
                ll -= 0.5 * e * e;
            }
            ll
        })
        .sum()
}

fn refine(l: f64, c: f64, r: f64) -> f64 {
    let den = l - 2.0 * c + r;
    if den < 0.0 && l.is_finite() && r.is_finite() {
        (0.5 * (l - r) / den).clamp(-0.5, 0.5)
    } else {
        0.0
    }
}

/// Grid maximum-likelihood position from the range/angle observations of several devices.
///
/// Messages without a range or angle (such as CSI summaries) are ignored. The best cell is
/// refined by a parabola through its neighbours along each axis.
pub fn fuse_ml(
    messages: &[SensingMessage],
    grid: &GridSpec,
    noise: &NoiseModel,
) -> Result<FusionResult> {
    ensure(
        noise.sigma_range_m > 0.0 && noise.sigma_aoa_deg > 0.0,
        || "noise standard deviations must be positive".to_string(),
    )?;
    let n_used = messages.iter().filter(|m| observation(m).is_some()).count();
    if n_used == 0 {
        return invalid("no message carries a usable range or angle");
    }
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut values = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            values.push(log_likelihood(messages, grid.center(ix, iy), noise));
        }
    }
    let lg = LikelihoodGrid {
        spec: *grid,
        values,
    };
    let (ix, iy) = lg.argmax();
    let c = lg.get(ix, iy);
    let at = |x: isize, y: isize| {
        if x < 0 || y < 0 || x as usize >= nx || y as usize >= ny {
            f64::NEG_INFINITY
        } else {
            lg.get(x as usize, y as usize)
        }
    };
    let (xi, yi) = (ix as isize, iy as isize);
    let ox = refine(at(xi - 1, yi), c, at(xi + 1, yi));
    let oy = refine(at(xi, yi - 1), c, at(xi, yi + 1));
    let center = grid.center(ix, iy);
    Ok(FusionResult {
        position: [center[0] + ox * grid.cell, center[1] + oy * grid.cell],
        cell: (ix, iy),
        log_likelihood: c,
        n_used,
        grid: lg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::SensingEstimate;
    use crate::SPEED_OF_LIGHT;

    fn observe(dev: usize, pose: Pose, target: [f64; 2]) -> SensingMessage {
        let dx = target[0] - pose.x;
        let dy = target[1] - pose.y;
        let est = SensingEstimate {
            tof: Some(2.0 * (dx * dx + dy * dy).sqrt() / SPEED_OF_LIGHT),
            aoa_deg: Some(wrap_deg(dy.atan2(dx).to_degrees() - pose.heading_deg)),
            velocity: None,
            confidence: 1.0,
        };
        SensingMessage::estimate(dev, 0.0, pose, est)
    }

    #[test]
    fn argmax_beats_every_cell() {
        let grid = GridSpec::new(0.0, 4.0, 0.0, 3.0, 0.25).unwrap();
        let msgs = [observe(0, Pose::new(0.0, 0.0, 45.0), [2.3, 1.9])];
        let r = fuse_ml(&msgs, &grid, &NoiseModel::default()).unwrap();
        assert!(r.grid.values.iter().all(|&v| v <= r.log_likelihood));
    }

    #[test]
    fn empty_set_rejected() {
        let grid = GridSpec::new(0.0, 4.0, 0.0, 3.0, 0.25).unwrap();
        assert!(fuse_ml(&[], &grid, &NoiseModel::default()).is_err());
    }

    #[test]
    fn wrap_is_symmetric() {
        assert!((wrap_deg(190.0) + 170.0).abs() < 1e-12);
        assert!((wrap_deg(-190.0) - 170.0).abs() < 1e-12);
    }
}
