//! Codec simulation: flow estimation, voxel-flow fitting, residual coding
//! proxies, quality metrics and the closed-loop sequence driver.

pub mod block_match;
pub mod diagnostics;
pub mod fit;
pub mod metrics;
pub mod pipeline;
pub mod rate;
pub mod synth;

pub use block_match::estimate_flow_block_matching;
pub use diagnostics::{diagnostics, DiagnosticMaps};
pub use fit::{fit_voxel_flows, fit_voxel_flows_with_depth, FitParams, FitResult, StepSchedule};
pub use metrics::{ms_ssim, mse, psnr, MsSsim};
pub use pipeline::{simulate_dir, simulate_sequence, FlowSource, SimConfig, SimOutput};
pub use rate::{
    flow_rate_proxy, rd_report, residual_entropy_proxy, DistortionMetric, FrameReport, RdConfig,
    RdSummary,
};
