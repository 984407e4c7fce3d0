//! Motion compensation and flow prediction kernels for learned-style video
//! coding, without any neural network.
//!
//! - [`warp`]: trilinear sampling and weighted multi-voxel-flow warping with
//!   analytic gradients.
//! - [`trajectory`]: per-pixel polynomial motion trajectories and backward
//!   flow prediction.
//! - [`splat`]: summation and softmax splatting for flow reversal.
//! - [`gop`]: LDP / LDB / RA coding schedules.
//! - [`sim`]: block matching, voxel-flow fitting, rate proxies, metrics and
//!   the closed-loop codec simulator.
//! - [`tensor_io`]: `.vten` tensors and binary PPM frames.

pub mod error;
pub mod frame;
pub mod gop;
pub mod sim;
pub mod splat;
pub mod tensor_io;
pub mod trajectory;
pub mod warp;

pub use error::{Error, Result};
pub use frame::{FlowField2D, Frame, FrameVolume, VoxelChannel, VoxelFlowStack};
