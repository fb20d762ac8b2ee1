//! Ball state estimation from camera fixes and the chaser pursuit law.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::GuidanceConfig;
use nalgebra::{Matrix3, Vector3};

use crate::Vec3;

/// Least-squares constant-velocity fit over a sliding window of world-frame
/// position fixes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BallEstimator {
    fixes: VecDeque<(f64, Vec3)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallEstimate {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
}

impl BallEstimator {
    pub fn push(&mut self, time: f64, position: Vec3) {
        self.fixes.push_back((time, position));
    }

    pub fn clear(&mut self) {
        self.fixes.clear();
    }

    pub fn len(&self) -> usize {
        self.fixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixes.is_empty()
    }

    /// Drops fixes older than both windows and extrapolates to `now`.
    ///
    /// Position and velocity come from a line fit over `lookback`. The
    /// acceleration comes from a parabola fit over `accel_lookback` and is
    /// zero when that window holds too few fixes or is disabled (zero).
    pub fn estimate(
        &mut self,
        now: f64,
        lookback: f64,
        accel_lookback: f64,
    ) -> Option<BallEstimate> {
        let keep = lookback.max(accel_lookback);
        while let Some(&(t, _)) = self.fixes.front() {
            if now - t > keep {
                self.fixes.pop_front();
            } else {
                break;
            }
        }
        let recent: Vec<(f64, Vec3)> = self
            .fixes
            .iter()
            .filter(|f| now - f.0 <= lookback)
            .copied()
            .collect();
        let (position, velocity) = line_fit(&recent, now)?;
        let acceleration = if accel_lookback > 0.0 {
            let window: Vec<(f64, Vec3)> = self
                .fixes
                .iter()
                .filter(|f| now - f.0 <= accel_lookback)
                .copied()
                .collect();
            let span = window.last().map_or(0.0, |l| l.0) - window.first().map_or(0.0, |f| f.0);
            if window.len() >= MIN_ACCEL_FIXES && span >= 0.5 * accel_lookback {
                parabola_curvature(&window).unwrap_or_else(Vec3::zeros)
            } else {
                Vec3::zeros()
            }
        } else {
            Vec3::zeros()
        };
        Some(BallEstimate {
            position,
            velocity,
            acceleration,
        })
    }
}

/// Fixes needed before the acceleration fit is trusted.
const MIN_ACCEL_FIXES: usize = 8;

fn line_fit(fixes: &[(f64, Vec3)], now: f64) -> Option<(Vec3, Vec3)> {
    let n = fixes.len();
    if n == 0 {
        return None;
    }
    let nf = n as f64;
    let t_mean = fixes.iter().map(|f| f.0).sum::<f64>() / nf;
    let p_mean = fixes.iter().fold(Vec3::zeros(), |a, f| a + f.1) / nf;
    let mut stt = 0.0;
    let mut stp = Vec3::zeros();
    for (t, p) in fixes {
        let dt = t - t_mean;
        stt += dt * dt;
        stp += (p - p_mean) * dt;
    }
    let velocity = if stt > 0.0 { stp / stt } else { Vec3::zeros() };
    Some((p_mean + velocity * (now - t_mean), velocity))
}

/// Second derivative of the least-squares parabola through the fixes.
fn parabola_curvature(fixes: &[(f64, Vec3)]) -> Option<Vec3> {
    let nf = fixes.len() as f64;
    let t_mean = fixes.iter().map(|f| f.0).sum::<f64>() / nf;
    let mut ata = Matrix3::zeros();
    let mut atb = Matrix3::zeros();
    for (t, p) in fixes {
        let s = t - t_mean;
        let row = Vector3::new(1.0, s, 0.5 * s * s);
        ata += row * row.transpose();
        atb += row * p.transpose();
    }
    let coef = ata.lu().solve(&atb)?;
    Some(Vec3::new(coef[(2, 0)], coef[(2, 1)], coef[(2, 2)]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GuidanceMode {
    /// Brake to a hover.
    Loiter,
    /// Hold the capture centre `gap` behind the ball along the heading.
    Track { gap: f64 },
    /// Close through the ball along the heading, centred on it laterally.
    Engage,
    /// Zero command.
    Coast,
    /// Fly the chaser to a point, speed-capped.
    GoTo { target: Vec3, speed: f64 },
}

/// Where the capture centre is and how it is moving, world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaptureFrame {
    pub centre: Vec3,
    pub velocity: Vec3,
    /// Horizontal unit heading.
    pub forward: Vec3,
}

pub fn saturate(a: Vec3, max: f64) -> Vec3 {
    let n = a.norm();
    if n > max {
        a * (max / n)
    } else {
        a
    }
}

/// Commanded chaser acceleration, norm clamped to `max_accel`. Modes that
/// need the ball fall back to [`GuidanceMode::Loiter`] without an estimate.
pub fn guidance_command(
    mode: &GuidanceMode,
    ball: Option<&BallEstimate>,
    chaser_position: &Vec3,
    chaser_velocity: &Vec3,
    frame: &CaptureFrame,
    cfg: &GuidanceConfig,
    max_accel: f64,
) -> Vec3 {
    let loiter = -*chaser_velocity * cfg.k_d;
    let a = match (mode, ball) {
        (GuidanceMode::Coast, _) => Vec3::zeros(),
        (GuidanceMode::Loiter, _) => loiter,
        (GuidanceMode::GoTo { target, speed }, _) => {
            let want = saturate((target - chaser_position) * (cfg.k_p / cfg.k_d), *speed);
            (want - chaser_velocity) * cfg.k_d
        }
        (GuidanceMode::Track { gap }, Some(b)) => {
            let err = b.position - frame.forward * *gap - frame.centre;
            err * cfg.k_p + (b.velocity - frame.velocity) * cfg.k_d + b.acceleration
        }
        (GuidanceMode::Engage, Some(b)) => {
            let f = frame.forward;
            let lateral = |v: Vec3| v - f * v.dot(&f);
            let err = lateral(b.position - frame.centre);
            let rel = lateral(b.velocity - frame.velocity);
            let closing = b.velocity.dot(&f) + cfg.engage_speed - frame.velocity.dot(&f);
            err * cfg.k_p + rel * cfg.k_d + f * (closing * cfg.k_d) + b.acceleration
        }
        (_, None) => loiter,
    };
    saturate(a, max_accel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frame() -> CaptureFrame {
        CaptureFrame {
            centre: Vec3::new(0.0, 1.1, 10.0),
            velocity: Vec3::zeros(),
            forward: Vec3::x(),
        }
    }

    #[test]
    fn equilibrium_zero_command() {
        let f = frame();
        let b = BallEstimate {
            position: f.centre,
            velocity: Vec3::zeros(),
            acceleration: Vec3::zeros(),
        };
        let a = guidance_command(
            &GuidanceMode::Track { gap: 0.0 },
            Some(&b),
            &Vec3::zeros(),
            &Vec3::zeros(),
            &f,
            &GuidanceConfig::default(),
            4.0,
        );
        assert_eq!(a, Vec3::zeros());
    }

    #[test]
    fn proportional_pull() {
        let f = frame();
        let b = BallEstimate {
            position: f.centre + Vec3::x(),
            velocity: Vec3::zeros(),
            acceleration: Vec3::zeros(),
        };
        let cfg = GuidanceConfig {
            k_p: 2.0,
            ..Default::default()
        };
        let a = guidance_command(
            &GuidanceMode::Track { gap: 0.0 },
            Some(&b),
            &Vec3::zeros(),
            &Vec3::zeros(),
            &f,
            &cfg,
            4.0,
        );
        assert!((a - Vec3::new(2.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn no_estimate_loiters() {
        let v = Vec3::new(1.0, 0.0, 0.0);
        let a = guidance_command(
            &GuidanceMode::Engage,
            None,
            &Vec3::zeros(),
            &v,
            &frame(),
            &GuidanceConfig::default(),
            4.0,
        );
        assert!(a.x < 0.0);
    }

    #[test]
    fn estimator_recovers_line() {
        let mut e = BallEstimator::default();
        let v = Vec3::new(6.0, -1.0, 0.5);
        for k in 0..20 {
            let t = k as f64 / 30.0;
            e.push(t, Vec3::new(1.0, 2.0, 3.0) + v * t);
        }
        let now = 19.0 / 30.0 + 0.01;
        let est = e.estimate(now, 0.3, 0.0).unwrap();
        assert!((est.velocity - v).norm() < 1e-9);
        assert!((est.position - (Vec3::new(1.0, 2.0, 3.0) + v * now)).norm() < 1e-9);
        // window pruned to the last 0.3 s
        assert!(e.len() <= 10);
    }

    #[test]
    fn estimator_recovers_parabola() {
        let mut e = BallEstimator::default();
        let a = Vec3::new(-0.9, 0.3, 0.0);
        let v = Vec3::new(6.0, 0.0, 0.0);
        let p = |t: f64| v * t + a * (0.5 * t * t);
        for k in 0..40 {
            let t = k as f64 / 30.0;
            e.push(t, p(t));
        }
        let est = e.estimate(39.0 / 30.0, 0.3, 1.0).unwrap();
        assert!((est.acceleration - a).norm() < 1e-8);
        // too short a history gives no acceleration
        let mut short = BallEstimator::default();
        for k in 0..4 {
            short.push(k as f64 / 30.0, p(k as f64 / 30.0));
        }
        assert_eq!(
            short.estimate(0.1, 0.3, 1.0).unwrap().acceleration,
            Vec3::zeros()
        );
    }

    #[test]
    fn estimator_empty_after_lookback() {
        let mut e = BallEstimator::default();
        e.push(0.0, Vec3::zeros());
        assert!(e.estimate(0.1, 0.3, 1.0).is_some());
        assert!(e.estimate(1.0, 0.3, 1.0).is_none());
    }

    proptest! {
        #[test]
        fn command_is_saturated(
            px in -50.0f64..50.0, py in -50.0f64..50.0, pz in -50.0f64..50.0,
            vx in -20.0f64..20.0, vy in -20.0f64..20.0,
            max in 0.5f64..8.0, mode in 0usize..4,
        ) {
            let b = BallEstimate { position: Vec3::new(px, py, pz), velocity: Vec3::new(vx, vy, 0.0), acceleration: Vec3::new(vy, px, 0.0) };
            let m = [
                GuidanceMode::Loiter,
                GuidanceMode::Track { gap: 0.5 },
                GuidanceMode::Engage,
                GuidanceMode::GoTo { target: Vec3::new(py, px, 3.0), speed: 6.0 },
            ][mode];
            let a = guidance_command(&m, Some(&b), &Vec3::zeros(), &Vec3::new(vy, vx, 0.0), &frame(), &GuidanceConfig::default(), max);
            prop_assert!(a.norm() <= max * (1.0 + 1e-12));
        }
    }
}
