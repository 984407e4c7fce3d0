//! Per-pixel summaries of a fitted voxel-flow stack.

use crate::error::Result;
use crate::frame::{VoxelChannel, VoxelFlowStack};
use crate::tensor_io::Tensor;
use crate::warp::softmax_weights;

/// Weighted centroid and dispersion of the voxel flows at every pixel,
/// with weights `softmax(g_w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticMaps {
    pub height: usize,
    pub width: usize,
    /// `sum_i w_i * g_z`, with `g_z` clamped to `[0, depth - 1]`.
    pub mean_temporal_flow: Vec<f64>,
    pub mean_spatial_flow: [Vec<f64>; 2],
    pub std_spatial_flow: [Vec<f64>; 2],
}

impl DiagnosticMaps {
    /// `5 x H x W`: mean g_z, mean g_x, mean g_y, std g_x, std g_y.
    pub fn to_tensor(&self) -> Tensor {
        let data = [
            &self.mean_temporal_flow,
            &self.mean_spatial_flow[0],
            &self.mean_spatial_flow[1],
            &self.std_spatial_flow[0],
            &self.std_spatial_flow[1],
        ]
        .iter()
        .flat_map(|v| v.iter().map(|&x| x as f32))
        .collect();
        Tensor {
            dims: vec![5, self.height, self.width],
            data,
        }
    }
}

/// Weighted mean and standard deviation, computed relative to the first
/// sample so identical samples give exactly zero spread.
fn weighted_moments(values: &[f64], weights: &[f64]) -> (f64, f64) {
    let base = values[0];
    let wsum: f64 = weights.iter().sum();
    let shift: f64 = values
        .iter()
        .zip(weights)
        .map(|(v, w)| w * (v - base))
        .sum::<f64>()
        / wsum;
    let mean = base + shift;
    let var: f64 = values
        .iter()
        .zip(weights)
        .map(|(v, w)| {
            let d = (v - base) - shift;
            w * d * d
        })
        .sum::<f64>()
        / wsum;
    (mean, var.max(0.0).sqrt())
}

/// `depth` is the number of slices of the volume the flows address.
pub fn diagnostics(flows: &VoxelFlowStack, depth: usize) -> Result<DiagnosticMaps> {
    let (m, n) = (flows.m(), flows.pixels());
    let weights = softmax_weights(&flows.logits(), m)?;
    let zmax = depth.saturating_sub(1) as f64;
    let mut mean_z = vec![0.0; n];
    let mut mean_xy = [vec![0.0; n], vec![0.0; n]];
    let mut std_xy = [vec![0.0; n], vec![0.0; n]];
    let mut w = vec![0.0; m];
    let mut vals = vec![0.0; m];
    for p in 0..n {
        for i in 0..m {
            w[i] = weights[i * n + p];
        }
        for i in 0..m {
            vals[i] = flows.at(i, VoxelChannel::Gz, p).clamp(0.0, zmax);
        }
        mean_z[p] = weighted_moments(&vals, &w).0.clamp(0.0, zmax);
        for (axis, ch) in [VoxelChannel::Gx, VoxelChannel::Gy].into_iter().enumerate() {
            for i in 0..m {
                vals[i] = flows.at(i, ch, p);
            }
            let (mu, sd) = weighted_moments(&vals, &w);
            mean_xy[axis][p] = mu;
            std_xy[axis][p] = sd;
        }
    }
    Ok(DiagnosticMaps {
        height: flows.height(),
        width: flows.width(),
        mean_temporal_flow: mean_z,
        mean_spatial_flow: mean_xy,
        std_spatial_flow: std_xy,
    })
}
