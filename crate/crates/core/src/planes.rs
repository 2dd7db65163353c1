//! Depth-hypothesis management: adaptive depth scaling, the initial uniform
//! plane set, per-pixel resampled planes for later cascade stages, and the
//! cascade schedule (plane counts and intervals halving as resolution grows).

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Scene-to-working-range scaling. The scaled minimum is `target` by
/// construction ([`DepthScaling::scaled_min`] returns it identically);
/// `factor` is additionally nudged by a few ulps so that `factor * d_min`
/// also rounds to `target` whenever a representable factor allows it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthScaling {
    pub d_min: f64,
    pub d_max: f64,
    pub target: f64,
    pub factor: f64,
}

impl DepthScaling {
    /// Identity scaling for pipelines that take the range verbatim.
    pub fn disabled(d_min: f64, d_max: f64) -> Result<Self> {
        if !(d_min > 0.0 && d_min < d_max) {
            return Err(Error::Config(format!(
                "depth range must satisfy 0 < d_min < d_max, got [{d_min}, {d_max}]"
            )));
        }
        Ok(DepthScaling {
            d_min,
            d_max,
            target: d_min,
            factor: 1.0,
        })
    }

    pub fn scale(&self, d: f64) -> f64 {
        self.factor * d
    }

    pub fn unscale(&self, d: f64) -> f64 {
        d / self.factor
    }

    pub fn scaled_min(&self) -> f64 {
        self.target
    }

    pub fn scaled_max(&self) -> f64 {
        self.factor * self.d_max
    }
}

/// Find a scaling factor near `target / d_min` whose product with `d_min`
/// rounds to `target` exactly, when one exists. For `d_min` larger than the
/// target the product grid can be coarser than ulp(target) and no factor
/// works; the nearest quotient is kept and `scaled_min()` stays exact by
/// construction regardless.
fn exact_factor(target: f64, d_min: f64) -> f64 {
    let f = target / d_min;
    if f * d_min == target {
        return f;
    }
    let mut up = f;
    let mut down = f;
    for _ in 0..4 {
        up = next_up(up);
        if up * d_min == target {
            return up;
        }
        down = next_down(down);
        if down * d_min == target {
            return down;
        }
    }
    f
}

fn next_up(v: f64) -> f64 {
    f64::from_bits(if v >= 0.0 { v.to_bits() + 1 } else { v.to_bits() - 1 })
}

fn next_down(v: f64) -> f64 {
    f64::from_bits(if v > 0.0 { v.to_bits() - 1 } else { v.to_bits() + 1 })
}

/// Compute the per-scene scaling and the stage-1 interval:
/// `factor = C / d_min`, scaled minimum `= C`, `delta1 = (factor * d_max - C) / m1`.
pub fn adaptive_scale(d_min: f64, d_max: f64, c: f64, m1: usize) -> Result<(DepthScaling, f64)> {
    if !(d_min > 0.0 && d_min < d_max) {
        return Err(Error::Config(format!(
            "depth range must satisfy 0 < d_min < d_max, got [{d_min}, {d_max}]"
        )));
    }
    if !(c > 0.0) {
        return Err(Error::Config(format!("scale constant must be > 0, got {c}")));
    }
    if m1 < 2 {
        return Err(Error::Config(format!("m1 must be at least 2, got {m1}")));
    }
    let factor = exact_factor(c, d_min);
    let scaling = DepthScaling {
        d_min,
        d_max,
        target: c,
        factor,
    };
    let delta1 = (factor * d_max - c) / m1 as f64;
    if !(delta1 > 0.0) {
        return Err(Error::Config(format!(
            "degenerate scaled interval {delta1} for range [{d_min}, {d_max}]"
        )));
    }
    Ok((scaling, delta1))
}

/// Per-stage plane counts, intervals and resolution divisors. Counts and
/// intervals halve per stage; resolution divisors are 16, 4, 1 for K = 3
/// (each stage quadruples the pixel grid).
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeSchedule {
    pub stages: usize,
    pub plane_counts: Vec<usize>,
    pub intervals: Vec<f64>,
    pub res_divisors: Vec<usize>,
}

pub fn cascade_schedule(m1: usize, delta1: f64, stages: usize) -> Result<CascadeSchedule> {
    if stages == 0 {
        return Err(Error::Config("schedule needs at least one stage".into()));
    }
    if !(delta1 > 0.0) {
        return Err(Error::Config(format!("delta1 must be > 0, got {delta1}")));
    }
    let halvings = stages - 1;
    if m1 % (1 << halvings) != 0 {
        return Err(Error::Config(format!(
            "m1 = {m1} is not divisible by 2^{halvings}"
        )));
    }
    let mut plane_counts = Vec::with_capacity(stages);
    let mut intervals = Vec::with_capacity(stages);
    let mut res_divisors = Vec::with_capacity(stages);
    for k in 0..stages {
        let m = m1 >> k;
        if m < 2 {
            return Err(Error::Config(format!(
                "stage {} would have {m} planes; at least 2 required",
                k + 1
            )));
        }
        plane_counts.push(m);
        intervals.push(delta1 / (1u64 << k) as f64);
        res_divisors.push(4usize.pow((stages - 1 - k) as u32));
    }
    Ok(CascadeSchedule {
        stages,
        plane_counts,
        intervals,
        res_divisors,
    })
}

/// Positive floor for clamped plane depths, relative to the working scale.
pub fn depth_floor(scale_target: f64) -> f64 {
    1e-3 * scale_target
}

/// Depth hypotheses for one cascade stage: a shared increasing list at stage
/// one, per-pixel shifted copies afterwards.
#[derive(Debug, Clone)]
pub enum PlaneSet {
    Uniform {
        depths: Vec<f64>,
    },
    PerPixel {
        /// `[H, W]` map of per-pixel minimum depths (before adding `i * delta`).
        d_min_map: Tensor,
        delta: f64,
        count: usize,
        floor: f64,
    },
}

impl PlaneSet {
    pub fn count(&self) -> usize {
        match self {
            PlaneSet::Uniform { depths } => depths.len(),
            PlaneSet::PerPixel { count, .. } => *count,
        }
    }

    /// Depth of hypothesis `i` (zero-based) at pixel `(y, x)`.
    #[inline]
    pub fn depth_at(&self, i: usize, y: usize, x: usize) -> f64 {
        match self {
            PlaneSet::Uniform { depths } => depths[i],
            PlaneSet::PerPixel {
                d_min_map,
                delta,
                count: _,
                floor,
            } => {
                let d = d_min_map.at2(y, x) + (i + 1) as f64 * delta;
                d.max(*floor)
            }
        }
    }

    /// The full depth map of hypothesis `i` at the stage resolution.
    pub fn depth_map(&self, i: usize, h: usize, w: usize) -> Tensor {
        let mut out = Tensor::zeros(&[h, w]);
        for y in 0..h {
            for x in 0..w {
                out.set2(y, x, self.depth_at(i, y, x));
            }
        }
        out
    }

    pub fn min_at(&self, y: usize, x: usize) -> f64 {
        self.depth_at(0, y, x)
    }

    pub fn max_at(&self, y: usize, x: usize) -> f64 {
        self.depth_at(self.count() - 1, y, x)
    }
}

/// Stage-1 uniform hypotheses: `d_i = d1_min + i * delta1` for `i = 1..=m1`.
/// The minimum itself is not a hypothesis.
pub fn initial_planes(d1_min: f64, delta1: f64, m1: usize) -> Result<PlaneSet> {
    if !(delta1 > 0.0) {
        return Err(Error::Config(format!("delta1 must be > 0, got {delta1}")));
    }
    if m1 < 2 {
        return Err(Error::Config(format!("m1 must be at least 2, got {m1}")));
    }
    let depths: Vec<f64> = (1..=m1).map(|i| d1_min + i as f64 * delta1).collect();
    if depths[0] <= 0.0 {
        return Err(Error::Config(format!(
            "first plane depth {} is not positive",
            depths[0]
        )));
    }
    Ok(PlaneSet::Uniform { depths })
}

/// Per-pixel hypotheses re-centered on the previous stage's (already
/// upsampled) depth map: `d_min(p) = D_prev(p) - m*delta/2`, hypotheses at
/// `d_min(p) + i*delta`. Depths are clamped below at a positive floor.
pub fn resample_planes(
    depth_prev: &Tensor,
    m: usize,
    delta: f64,
    floor: f64,
) -> Result<PlaneSet> {
    if depth_prev.rank() != 2 {
        return Err(Error::Shape(format!(
            "previous depth map must be [H,W], got {:?}",
            depth_prev.shape()
        )));
    }
    if m < 2 {
        return Err(Error::Config(format!("plane count must be at least 2, got {m}")));
    }
    if !(delta > 0.0) {
        return Err(Error::Config(format!("delta must be > 0, got {delta}")));
    }
    let half_span = m as f64 * delta / 2.0;
    let d_min_map = depth_prev.map(|d| d - half_span);
    Ok(PlaneSet::PerPixel {
        d_min_map,
        delta,
        count: m,
        floor,
    })
}
