//! Magnetic attachment between the ball and the carrier rod.
//!
//! The magnet resists up to a direction-dependent threshold: full strength for
//! an axial pull, a fraction `peel` of it for a pure shear pull. While the
//! applied force is at or above that threshold the joint separates and the
//! work done on it accumulates; the ball comes free once that work reaches
//! `force · distance`.

use serde::{Deserialize, Serialize};

use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Magnet {
    /// Axial detachment force [N].
    pub force: f64,
    /// Separation travel [m].
    pub distance: f64,
    /// Shear-to-axial threshold ratio, in (0, 1].
    pub peel: f64,
}

impl Magnet {
    pub fn work_required(&self) -> f64 {
        self.force * self.distance
    }

    /// Force needed to make the joint slip when pulled at angle `alpha` to
    /// the magnet axis, given `cos_alpha`.
    pub fn threshold(&self, cos_alpha: f64) -> f64 {
        self.force * (self.peel + (1.0 - self.peel) * cos_alpha.abs().min(1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DetachmentProgress {
    /// Joint separation so far [m].
    pub separation: f64,
    /// Work done on the joint so far [J].
    pub work: f64,
    pub detached: bool,
}

/// Pull applied to the joint over one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactLoad {
    /// Force on the ball [N].
    pub force: Vec3,
    /// Unit vector along the magnet axis, pointing from rod to ball.
    pub magnet_axis: Vec3,
    /// Displacement imposed on the joint during the step [m].
    pub travel: f64,
}

pub fn detachment_update(
    progress: &DetachmentProgress,
    magnet: &Magnet,
    load: &ContactLoad,
) -> DetachmentProgress {
    let mut next = *progress;
    if next.detached {
        return next;
    }
    let f = load.force.norm();
    if f == 0.0 || load.travel <= 0.0 {
        return next;
    }
    let cos_alpha = load.force.dot(&load.magnet_axis) / f;
    if f >= magnet.threshold(cos_alpha) {
        next.separation += load.travel;
        next.work += f * load.travel;
        if next.work >= magnet.work_required() {
            next.detached = true;
        }
    }
    next
}
