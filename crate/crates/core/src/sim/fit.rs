//! Direct voxel-flow fitting by gradient descent on the warp residual.
//!
//! This stands in for a learned motion decoder: it searches the weighted
//! trilinear warp family for the flows that best predict a target frame,
//! using the analytic warp gradients with per-parameter Adam steps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::frame::{FlowField2D, Frame, FrameVolume, VoxelChannel, VoxelFlowStack};
use crate::warp::{weighted_voxel_warp, weighted_voxel_warp_backward, WarpConfig};

/// Geometric step-size decay from `initial` to `final_step` over the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub initial: f64,
    pub final_step: f64,
}

impl StepSchedule {
    pub fn at(&self, iter: usize, iters: usize) -> f64 {
        if iters <= 1 {
            return self.initial;
        }
        let frac = iter as f64 / (iters - 1) as f64;
        self.initial * (self.final_step / self.initial).powf(frac)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitParams {
    pub m: usize,
    pub iters: usize,
    pub schedule: StepSchedule,
    pub seed: u64,
    /// Half-width of the uniform spatial perturbation (pixels) of flows 1..M.
    pub spatial_jitter: f64,
    /// Half-width of the uniform depth perturbation of flows 1..M.
    pub temporal_jitter: f64,
    /// Half-width of the uniform logit perturbation of flows 1..M.
    pub logit_jitter: f64,
    /// Starting logit of flows 1..M relative to flow 0.
    pub secondary_logit: f64,
}

impl Default for FitParams {
    fn default() -> Self {
        Self {
            m: crate::warp::DEFAULT_FLOW_COUNT,
            iters: 100,
            schedule: StepSchedule {
                initial: 0.1,
                final_step: 0.01,
            },
            seed: 0,
            spatial_jitter: 1.0,
            temporal_jitter: 0.5,
            logit_jitter: 0.1,
            secondary_logit: -8.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub flows: VoxelFlowStack,
    /// Residual MSE of the returned flows.
    pub mse: f64,
    /// Residual MSE of the initialization.
    pub initial_mse: f64,
}

/// Builds the starting stack. Flow 0 is the unperturbed initialization
/// (`init` spatial flow, depth `anchor_depth`, logit 0); flow `i > 0` adds a
/// perturbation drawn from its own RNG stream, so the first `M'` flows of an
/// `M`-flow initialization equal the `M'`-flow initialization.
pub fn initial_stack(
    volume: &FrameVolume,
    init: Option<&FlowField2D>,
    anchor_depth: usize,
    params: &FitParams,
) -> Result<VoxelFlowStack> {
    let depth = vec![anchor_depth as f64; volume.height() * volume.width()];
    initial_stack_with_depth(volume, init, &depth, params)
}

/// Like [`initial_stack`] with a per-pixel starting depth.
pub fn initial_stack_with_depth(
    volume: &FrameVolume,
    init: Option<&FlowField2D>,
    depth: &[f64],
    params: &FitParams,
) -> Result<VoxelFlowStack> {
    let (h, w) = (volume.height(), volume.width());
    if let Some(f) = init {
        f.ensure_matches(h, w, "fit initialization")?;
    }
    let zmax = (volume.depth() - 1) as f64;
    if depth.len() != h * w {
        return Err(Error::ShapeMismatch(format!(
            "starting depth has {} entries for {h}x{w} pixels",
            depth.len()
        )));
    }
    if let Some(z) = depth.iter().find(|z| !(0.0..=zmax).contains(*z)) {
        return Err(Error::ShapeMismatch(format!(
            "starting depth {z} outside volume of depth {}",
            volume.depth()
        )));
    }
    let mut stack = VoxelFlowStack::zeros(params.m, h, w)?;
    for i in 0..params.m {
        if let Some(f) = init {
            stack.field_mut(i, VoxelChannel::Gx).copy_from_slice(&f.dx);
            stack.field_mut(i, VoxelChannel::Gy).copy_from_slice(&f.dy);
        }
        stack.field_mut(i, VoxelChannel::Gz).copy_from_slice(depth);
        if i == 0 {
            continue;
        }
        stack
            .field_mut(i, VoxelChannel::Gw)
            .fill(params.secondary_logit);
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(i as u64);
        let jitter = [
            (VoxelChannel::Gx, params.spatial_jitter),
            (VoxelChannel::Gy, params.spatial_jitter),
            (VoxelChannel::Gz, params.temporal_jitter),
            (VoxelChannel::Gw, params.logit_jitter),
        ];
        for (ch, amp) in jitter {
            for v in stack.field_mut(i, ch) {
                if amp > 0.0 {
                    *v += rng.gen_range(-amp..=amp);
                }
            }
        }
        for v in stack.field_mut(i, VoxelChannel::Gz) {
            *v = v.clamp(0.0, zmax);
        }
    }
    Ok(stack)
}

fn residual_mse(pred: &Frame, target: &Frame) -> f64 {
    let n = pred.data().len() as f64;
    pred.data()
        .iter()
        .zip(target.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n
}

/// Fits `params.m` voxel flows so that warping `volume` approximates `target`.
/// Returns the iterate with the lowest residual MSE.
pub fn fit_voxel_flows(
    volume: &FrameVolume,
    target: &Frame,
    init: Option<&FlowField2D>,
    anchor_depth: usize,
    params: &FitParams,
) -> Result<FitResult> {
    if anchor_depth >= volume.depth() {
        return Err(Error::ShapeMismatch(format!(
            "anchor depth {anchor_depth} outside volume of depth {}",
            volume.depth()
        )));
    }
    let depth = vec![anchor_depth as f64; volume.height() * volume.width()];
    fit_voxel_flows_with_depth(volume, target, init, &depth, params)
}

/// Like [`fit_voxel_flows`] with a per-pixel starting depth.
pub fn fit_voxel_flows_with_depth(
    volume: &FrameVolume,
    target: &Frame,
    init: Option<&FlowField2D>,
    depth: &[f64],
    params: &FitParams,
) -> Result<FitResult> {
    volume.frame(0).ensure_same_shape(target, "fit target")?;
    if params.m == 0 {
        return Err(Error::EmptyStack);
    }
    let cfg = WarpConfig::default();
    let zmax = (volume.depth() - 1) as f64;
    let mut flows = initial_stack_with_depth(volume, init, depth, params)?;
    let len = flows.data().len();
    let (mut m1, mut m2) = (vec![0.0; len], vec![0.0; len]);
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const ADAM_EPS: f64 = 1e-10;

    let mut pred = weighted_voxel_warp(volume, &flows, &cfg)?;
    let initial_mse = residual_mse(&pred, target);
    let mut best = (initial_mse, flows.clone());
    let n = flows.pixels();
    let m = flows.m();
    for iter in 0..params.iters {
        // per-pixel squared error; pixels are independent so no 1/N scaling
        let grad_out: Vec<f64> = pred
            .data()
            .iter()
            .zip(target.data())
            .map(|(p, t)| 2.0 * (p - t))
            .collect();
        let grad_out = Frame::new(target.height(), target.width(), target.channels(), grad_out)?;
        let grads = weighted_voxel_warp_backward(volume, &flows, &cfg, &grad_out)?;
        let lr = params.schedule.at(iter, params.iters);
        let t = (iter + 1) as i32;
        let (c1, c2) = (1.0 - BETA1.powi(t), 1.0 - BETA2.powi(t));
        let data = flows.data_mut();
        for i in 0..m {
            for ch in VoxelChannel::ALL {
                let g = &grads.field(ch)[i * n..(i + 1) * n];
                let off = (i * 4 + ch as usize) * n;
                for p in 0..n {
                    let k = off + p;
                    m1[k] = BETA1 * m1[k] + (1.0 - BETA1) * g[p];
                    m2[k] = BETA2 * m2[k] + (1.0 - BETA2) * g[p] * g[p];
                    let step = lr * (m1[k] / c1) / ((m2[k] / c2).sqrt() + ADAM_EPS);
                    data[k] -= step;
                    if ch == VoxelChannel::Gz {
                        data[k] = data[k].clamp(0.0, zmax);
                    }
                }
            }
        }
        pred = weighted_voxel_warp(volume, &flows, &cfg)?;
        let mse = residual_mse(&pred, target);
        if mse < best.0 {
            best = (mse, flows.clone());
        }
    }
    Ok(FitResult {
        flows: best.1,
        mse: best.0,
        initial_mse,
    })
}
