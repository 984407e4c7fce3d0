//! Histogram-entropy rate proxies and the GOP rate-distortion aggregate.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::frame::{Frame, VoxelChannel, VoxelFlowStack};

/// Quantization step for voxel-flow fields in the flow rate proxy (1/16 pixel).
pub const FLOW_QUANT_STEP: f64 = 1.0 / 16.0;

/// Empirical Shannon entropy, in bits per symbol, of the quantized values
/// `round(v / step)`.
pub fn entropy_bits(values: &[f64], step: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut hist: BTreeMap<i64, usize> = BTreeMap::new();
    for &v in values {
        *hist.entry((v / step).round() as i64).or_insert(0) += 1;
    }
    let n = values.len() as f64;
    let h: f64 = hist
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    // a single-symbol histogram gives -0.0
    h.max(0.0)
}

/// Entropy of the residual quantized at `quant_step`, pooled over every
/// channel sample of the frame (bits per sample).
pub fn residual_entropy_proxy(residual: &Frame, quant_step: f64) -> f64 {
    assert!(quant_step > 0.0, "quant_step must be positive");
    entropy_bits(residual.data(), quant_step)
}

/// Bits per pixel to describe all `4M` voxel-flow channels: each channel
/// kind is quantized at [`FLOW_QUANT_STEP`] and its entropy pooled across
/// the `M` flows.
pub fn flow_rate_proxy(flows: &VoxelFlowStack) -> f64 {
    VoxelChannel::ALL
        .iter()
        .map(|&ch| {
            let pooled: Vec<f64> = (0..flows.m())
                .flat_map(|i| flows.field(i, ch).iter().copied())
                .collect();
            flows.m() as f64 * entropy_bits(&pooled, FLOW_QUANT_STEP)
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistortionMetric {
    #[default]
    Mse,
    /// `1 - MS-SSIM`.
    MsSsim,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdConfig {
    pub lambda: f64,
    pub quant_step: f64,
    pub distortion_metric: DistortionMetric,
}

impl Default for RdConfig {
    fn default() -> Self {
        Self {
            lambda: 256.0,
            quant_step: 1.0 / 255.0,
            distortion_metric: DistortionMetric::Mse,
        }
    }
}

impl RdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if !(self.quant_step > 0.0) || !self.quant_step.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "quant_step must be > 0, got {}",
                self.quant_step
            )));
        }
        Ok(())
    }
}

/// Per-frame decomposition of the GOP objective.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameReport {
    pub display_index: usize,
    pub coding_order: usize,
    pub is_intra: bool,
    pub prediction_psnr: f64,
    pub residual_entropy_bits_per_pixel: f64,
    pub flow_bits_per_pixel: f64,
    /// `residual + flow` bits per pixel.
    pub rate_proxy: f64,
    pub distortion: f64,
    pub rd_cost: f64,
    pub hole_fraction: f64,
    /// PSNR of each flow-predicted frame, one per warp reference.
    pub gfp_psnr: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdSummary {
    pub frames: usize,
    pub mean_rate: f64,
    pub mean_distortion: f64,
    pub mean_cost: f64,
}

/// Mean of `rate + lambda * distortion` over the given frames.
pub fn rd_report(reports: &[FrameReport], lambda: f64) -> Result<RdSummary> {
    if reports.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = reports.len() as f64;
    let mean = |f: &dyn Fn(&FrameReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    Ok(RdSummary {
        frames: reports.len(),
        mean_rate: mean(&|r| r.rate_proxy),
        mean_distortion: mean(&|r| r.distortion),
        mean_cost: mean(&|r| r.rate_proxy + lambda * r.distortion),
    })
}
