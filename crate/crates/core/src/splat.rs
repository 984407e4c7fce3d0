//! Forward-flow reversal by softmax splatting.
//!
//! The backward flow is the importance-weighted average of the negated
//! forward flow, splatted along the forward flow:
//!
//! ```text
//! f(t -> tj) = splat(exp(Z) * -f(tj -> t), f) / splat(exp(Z), f)
//! ```
//!
//! Splatting is a scatter; sources are replayed in row-major order so every
//! output bucket accumulates in the same sequence on every run.

use crate::error::{Error, Result};
use crate::frame::{FlowField2D, Frame};
use crate::warp::backward_warp_bilinear;

/// Denominator threshold below which a target pixel is a hole.
pub const DEFAULT_EPS: f64 = 1e-9;

/// Affine stand-in for the importance network: `Z = alpha * e + beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImportanceConfig {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for ImportanceConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
        }
    }
}

/// Per-pixel trust score of each source pixel; higher wins collisions.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceMask {
    pub height: usize,
    pub width: usize,
    pub z: Vec<f64>,
}

impl ImportanceMask {
    pub fn new(height: usize, width: usize, z: Vec<f64>) -> Result<Self> {
        if height * width == 0 || z.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "importance mask {height}x{width} needs {} values, got {}",
                height * width,
                z.len()
            )));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch(
                "importance mask must be finite".into(),
            ));
        }
        Ok(Self { height, width, z })
    }

    pub fn uniform(height: usize, width: usize, value: f64) -> Self {
        Self {
            height,
            width,
            z: vec![value; height * width],
        }
    }
}

/// Result of a flow reversal: the backward flow and the pixels that
/// received no splat mass (their flow is zero-filled).
#[derive(Debug, Clone, PartialEq)]
pub struct Reversal {
    pub flow: FlowField2D,
    pub holes: Vec<bool>,
}

impl Reversal {
    pub fn hole_fraction(&self) -> f64 {
        self.holes.iter().filter(|&&h| h).count() as f64 / self.holes.len() as f64
    }
}

/// Bilinear summation splatting of `values` (`C x H x W`) along `flow`.
/// Contributions landing outside the frame are dropped.
pub fn summation_splat(values: &[f64], channels: usize, flow: &FlowField2D) -> Result<Vec<f64>> {
    let (h, w) = (flow.height(), flow.width());
    let n = h * w;
    if channels == 0 || values.len() != channels * n {
        return Err(Error::ShapeMismatch(format!(
            "splat values have {} entries, flow {h}x{w} with {channels} channels needs {}",
            values.len(),
            channels * n
        )));
    }
    let mut out = vec![0.0; channels * n];
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            let tx = x as f64 + flow.dx[p];
            let ty = y as f64 + flow.dy[p];
            let (x0, y0) = (tx.floor(), ty.floor());
            let (fx, fy) = (tx - x0, ty - y0);
            let (x0, y0) = (x0 as i64, y0 as i64);
            let taps = [
                (x0, y0, (1.0 - fx) * (1.0 - fy)),
                (x0 + 1, y0, fx * (1.0 - fy)),
                (x0, y0 + 1, (1.0 - fx) * fy),
                (x0 + 1, y0 + 1, fx * fy),
            ];
            for (qx, qy, wt) in taps {
                if qx < 0 || qy < 0 || qx >= w as i64 || qy >= h as i64 || wt == 0.0 {
                    continue;
                }
                let q = qy as usize * w + qx as usize;
                for c in 0..channels {
                    out[c * n + q] += wt * values[c * n + p];
                }
            }
        }
    }
    Ok(out)
}

/// Photometric-consistency importance: `e` is minus the mean, over the
/// neighbors, of the channel-averaged L1 error between `reference` and each
/// neighbor backward-warped by `flows[i]` (`f(tj -> ti)`).
pub fn importance_mask(
    reference: &Frame,
    neighbors: &[Frame],
    flows: &[FlowField2D],
    cfg: &ImportanceConfig,
) -> Result<ImportanceMask> {
    if neighbors.is_empty() || neighbors.len() != flows.len() {
        return Err(Error::ShapeMismatch(format!(
            "importance mask needs k >= 1 neighbors with one flow each, got {} / {}",
            neighbors.len(),
            flows.len()
        )));
    }
    let (h, w, ch) = (reference.height(), reference.width(), reference.channels());
    let n = h * w;
    let mut err = vec![0.0; n];
    for (nb, flow) in neighbors.iter().zip(flows) {
        reference.ensure_same_shape(nb, "importance neighbor")?;
        let warped = backward_warp_bilinear(nb, flow)?;
        for (p, e) in err.iter_mut().enumerate() {
            let mut l1 = 0.0;
            for c in 0..ch {
                l1 += (reference.data()[c * n + p] - warped.data()[c * n + p]).abs();
            }
            *e += l1 / ch as f64;
        }
    }
    let k = neighbors.len() as f64;
    let z = err
        .into_iter()
        .map(|e| cfg.alpha * (-e / k) + cfg.beta)
        .collect();
    ImportanceMask::new(h, w, z)
}

/// Reverses the forward flow `f(tj -> t)` into `f(t -> tj)`.
pub fn softmax_splat_reverse(
    forward: &FlowField2D,
    importance: &ImportanceMask,
    eps: f64,
) -> Result<Reversal> {
    let (h, w) = (forward.height(), forward.width());
    if importance.height != h || importance.width != w {
        return Err(Error::ShapeMismatch(format!(
            "importance mask is {}x{}, flow is {h}x{w}",
            importance.height, importance.width
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let n = h * w;
    let zmax = importance
        .z
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut values = vec![0.0; 3 * n];
    for p in 0..n {
        let e = (importance.z[p] - zmax).exp();
        values[p] = -e * forward.dx[p];
        values[n + p] = -e * forward.dy[p];
        values[2 * n + p] = e;
    }
    let acc = summation_splat(&values, 3, forward)?;
    let mut dx = vec![0.0; n];
    let mut dy = vec![0.0; n];
    let mut holes = vec![false; n];
    for p in 0..n {
        let den = acc[2 * n + p];
        if den > eps {
            dx[p] = acc[p] / den;
            dy[p] = acc[n + p] / den;
        } else {
            holes[p] = true;
        }
    }
    Ok(Reversal {
        flow: FlowField2D::new(h, w, dx, dy)?,
        holes,
    })
}
