//! Trilinear sampling and weighted multi-voxel-flow warping.
//!
//! Each output pixel `p` is `sum_i w_i(p) * X[p.x + gx_i, p.y + gy_i, gz_i]`
//! where `w = softmax(gw)` across the `M` flows and `X` is sampled
//! trilinearly with clamp-to-edge on all three axes. `gz` is an absolute
//! depth coordinate, not an offset.
//!
//! Accumulation per output pixel is sequential in flow order then corner
//! order; rows are processed in parallel, which keeps results bitwise
//! independent of the thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::{FlowField2D, Frame, FrameVolume, VoxelChannel, VoxelFlowStack};

/// Default number of voxel flows.
pub const DEFAULT_FLOW_COUNT: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryMode {
    /// Coordinates are clamped to the valid range before neighbor selection.
    #[default]
    Clamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WarpConfig {
    pub boundary_mode: BoundaryMode,
}

/// Gradients of a scalar loss with respect to every voxel-flow field,
/// each laid out `M x H x W`.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpGradients {
    pub m: usize,
    pub height: usize,
    pub width: usize,
    pub d_gx: Vec<f64>,
    pub d_gy: Vec<f64>,
    pub d_gz: Vec<f64>,
    pub d_gw_logit: Vec<f64>,
}

impl WarpGradients {
    pub fn field(&self, ch: VoxelChannel) -> &[f64] {
        match ch {
            VoxelChannel::Gx => &self.d_gx,
            VoxelChannel::Gy => &self.d_gy,
            VoxelChannel::Gz => &self.d_gz,
            VoxelChannel::Gw => &self.d_gw_logit,
        }
    }
}

/// Softmax across `m` maps of logits laid out `M x P`.
pub fn softmax_weights(logits: &[f64], m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::EmptyStack);
    }
    if logits.len() % m != 0 {
        return Err(Error::ShapeMismatch(format!(
            "{} logits do not split into {m} maps",
            logits.len()
        )));
    }
    let p = logits.len() / m;
    let mut out = vec![0.0; logits.len()];
    let mut buf = vec![0.0; m];
    for px in 0..p {
        for (i, b) in buf.iter_mut().enumerate() {
            *b = logits[i * p + px];
        }
        softmax_in_place(&mut buf);
        for (i, &b) in buf.iter().enumerate() {
            out[i * p + px] = b;
        }
    }
    Ok(out)
}

#[inline]
fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

/// Lower/upper neighbor, fractional weight and clamp-derivative along one axis.
#[derive(Debug, Clone, Copy)]
struct Axis {
    i0: usize,
    i1: usize,
    frac: f64,
    /// d(clamped coordinate)/d(coordinate), right-derivative convention.
    slope: f64,
}

#[inline]
fn axis(v: f64, n: usize) -> Axis {
    let hi = (n - 1) as f64;
    let vc = v.clamp(0.0, hi);
    let slope = if v >= 0.0 && v < hi { 1.0 } else { 0.0 };
    let i0 = vc.floor() as usize;
    if i0 >= n - 1 {
        Axis {
            i0: n - 1,
            i1: n - 1,
            frac: 0.0,
            slope,
        }
    } else {
        Axis {
            i0,
            i1: i0 + 1,
            frac: vc - i0 as f64,
            slope,
        }
    }
}

/// The 8 trilinear corners of one sampling point, in the fixed order
/// `(z, y, x)` with `x` varying fastest.
#[derive(Debug, Clone, Copy)]
struct Corners {
    depth: [usize; 2],
    offset: [usize; 4],
    wz: [f64; 2],
    wy: [f64; 2],
    wx: [f64; 2],
    sx: f64,
    sy: f64,
    sz: f64,
}

impl Corners {
    #[inline]
    fn new(vol: &FrameVolume, x: f64, y: f64, z: f64) -> Self {
        let (w, h, d) = (vol.width(), vol.height(), vol.depth());
        let ax = axis(x, w);
        let ay = axis(y, h);
        let az = axis(z, d);
        Corners {
            depth: [az.i0, az.i1],
            offset: [
                ay.i0 * w + ax.i0,
                ay.i0 * w + ax.i1,
                ay.i1 * w + ax.i0,
                ay.i1 * w + ax.i1,
            ],
            wz: [1.0 - az.frac, az.frac],
            wy: [1.0 - ay.frac, ay.frac],
            wx: [1.0 - ax.frac, ax.frac],
            sx: ax.slope,
            sy: ay.slope,
            sz: az.slope,
        }
    }

    #[inline]
    fn values(&self, vol: &FrameVolume, c: usize) -> [f64; 8] {
        let n = vol.height() * vol.width();
        let mut v = [0.0; 8];
        for (dz, &d) in self.depth.iter().enumerate() {
            let plane = &vol.frame(d).data()[c * n..(c + 1) * n];
            for (k, &o) in self.offset.iter().enumerate() {
                v[dz * 4 + k] = plane[o];
            }
        }
        v
    }

    #[inline]
    fn sample(&self, v: &[f64; 8]) -> f64 {
        let mut acc = 0.0;
        for dz in 0..2 {
            for dy in 0..2 {
                for dx in 0..2 {
                    acc += self.wz[dz] * self.wy[dy] * self.wx[dx] * v[dz * 4 + dy * 2 + dx];
                }
            }
        }
        acc
    }

    /// Sample value and its partial derivatives `(s, ds/dx, ds/dy, ds/dz)`.
    #[inline]
    fn sample_with_grad(&self, v: &[f64; 8]) -> (f64, f64, f64, f64) {
        const DW: [f64; 2] = [-1.0, 1.0];
        let (mut s, mut gx, mut gy, mut gz) = (0.0, 0.0, 0.0, 0.0);
        for dz in 0..2 {
            for dy in 0..2 {
                for dx in 0..2 {
                    let val = v[dz * 4 + dy * 2 + dx];
                    s += self.wz[dz] * self.wy[dy] * self.wx[dx] * val;
                    gx += self.wz[dz] * self.wy[dy] * DW[dx] * val;
                    gy += self.wz[dz] * DW[dy] * self.wx[dx] * val;
                    gz += DW[dz] * self.wy[dy] * self.wx[dx] * val;
                }
            }
        }
        (s, gx * self.sx, gy * self.sy, gz * self.sz)
    }
}

/// Trilinear interpolation of `volume` at `(x, y, z)` in channel `c`,
/// with clamp-to-edge on every axis.
pub fn trilinear_sample(volume: &FrameVolume, x: f64, y: f64, z: f64, c: usize) -> f64 {
    let corners = Corners::new(volume, x, y, z);
    corners.sample(&corners.values(volume, c))
}

fn check_shapes(volume: &FrameVolume, flows: &VoxelFlowStack) -> Result<()> {
    if flows.height() != volume.height() || flows.width() != volume.width() {
        return Err(Error::ShapeMismatch(format!(
            "voxel flows are {}x{}, volume is {}x{}",
            flows.height(),
            flows.width(),
            volume.height(),
            volume.width()
        )));
    }
    Ok(())
}

#[inline]
fn pixel_weights(flows: &VoxelFlowStack, p: usize, out: &mut [f64]) {
    for (i, w) in out.iter_mut().enumerate() {
        *w = flows.at(i, VoxelChannel::Gw, p);
    }
    softmax_in_place(out);
}

/// Warps the reference volume with `M` weighted voxel flows.
pub fn weighted_voxel_warp(
    volume: &FrameVolume,
    flows: &VoxelFlowStack,
    _cfg: &WarpConfig,
) -> Result<Frame> {
    check_shapes(volume, flows)?;
    let (h, w, ch, m) = (
        volume.height(),
        volume.width(),
        volume.channels(),
        flows.m(),
    );
    let rows: Vec<Vec<f64>> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut row = vec![0.0; ch * w];
            let mut weights = vec![0.0; m];
            for x in 0..w {
                let p = y * w + x;
                pixel_weights(flows, p, &mut weights);
                for (i, &wi) in weights.iter().enumerate() {
                    let corners = Corners::new(
                        volume,
                        x as f64 + flows.at(i, VoxelChannel::Gx, p),
                        y as f64 + flows.at(i, VoxelChannel::Gy, p),
                        flows.at(i, VoxelChannel::Gz, p),
                    );
                    for c in 0..ch {
                        row[c * w + x] += wi * corners.sample(&corners.values(volume, c));
                    }
                }
            }
            row
        })
        .collect();
    let mut data = vec![0.0; ch * h * w];
    for (y, row) in rows.iter().enumerate() {
        for c in 0..ch {
            data[(c * h + y) * w..(c * h + y + 1) * w].copy_from_slice(&row[c * w..(c + 1) * w]);
        }
    }
    Frame::new(h, w, ch, data)
}

/// Analytic gradients of `L` given `grad_output = dL/d(warp output)`.
pub fn weighted_voxel_warp_backward(
    volume: &FrameVolume,
    flows: &VoxelFlowStack,
    _cfg: &WarpConfig,
    grad_output: &Frame,
) -> Result<WarpGradients> {
    check_shapes(volume, flows)?;
    let (h, w, ch, m) = (
        volume.height(),
        volume.width(),
        volume.channels(),
        flows.m(),
    );
    if grad_output.height() != h || grad_output.width() != w || grad_output.channels() != ch {
        return Err(Error::ShapeMismatch(format!(
            "grad_output is {}x{}x{}, expected {ch}x{h}x{w}",
            grad_output.channels(),
            grad_output.height(),
            grad_output.width()
        )));
    }
    let n = h * w;
    // per row: 4 fields x M flows x W pixels
    let rows: Vec<Vec<f64>> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut row = vec![0.0; 4 * m * w];
            let mut weights = vec![0.0; m];
            let mut gsample = vec![0.0; m];
            for x in 0..w {
                let p = y * w + x;
                pixel_weights(flows, p, &mut weights);
                let mut gout = 0.0;
                for i in 0..m {
                    let corners = Corners::new(
                        volume,
                        x as f64 + flows.at(i, VoxelChannel::Gx, p),
                        y as f64 + flows.at(i, VoxelChannel::Gy, p),
                        flows.at(i, VoxelChannel::Gz, p),
                    );
                    let (mut gs, mut gx, mut gy, mut gz) = (0.0, 0.0, 0.0, 0.0);
                    for c in 0..ch {
                        let g = grad_output.data()[c * n + p];
                        let (s, dsx, dsy, dsz) =
                            corners.sample_with_grad(&corners.values(volume, c));
                        gs += g * s;
                        gx += g * dsx;
                        gy += g * dsy;
                        gz += g * dsz;
                    }
                    gsample[i] = gs;
                    gout += weights[i] * gs;
                    row[i * w + x] = weights[i] * gx;
                    row[(m + i) * w + x] = weights[i] * gy;
                    row[(2 * m + i) * w + x] = weights[i] * gz;
                }
                for i in 0..m {
                    row[(3 * m + i) * w + x] = weights[i] * (gsample[i] - gout);
                }
            }
            row
        })
        .collect();
    let mut fields = [
        vec![0.0; m * n],
        vec![0.0; m * n],
        vec![0.0; m * n],
        vec![0.0; m * n],
    ];
    for (y, row) in rows.iter().enumerate() {
        for (k, field) in fields.iter_mut().enumerate() {
            for i in 0..m {
                let src = &row[(k * m + i) * w..(k * m + i + 1) * w];
                field[i * n + y * w..i * n + (y + 1) * w].copy_from_slice(src);
            }
        }
    }
    let [d_gx, d_gy, d_gz, d_gw_logit] = fields;
    Ok(WarpGradients {
        m,
        height: h,
        width: w,
        d_gx,
        d_gy,
        d_gz,
        d_gw_logit,
    })
}

/// Bilinear backward warp: `out[p] = frame[p + flow(p)]`, clamped to the frame.
pub fn backward_warp_bilinear(frame: &Frame, flow: &FlowField2D) -> Result<Frame> {
    let (h, w, ch) = (frame.height(), frame.width(), frame.channels());
    flow.ensure_matches(h, w, "backward warp")?;
    let n = h * w;
    let mut out = vec![0.0; ch * n];
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            let ax = axis(x as f64 + flow.dx[p], w);
            let ay = axis(y as f64 + flow.dy[p], h);
            let idx = [
                ay.i0 * w + ax.i0,
                ay.i0 * w + ax.i1,
                ay.i1 * w + ax.i0,
                ay.i1 * w + ax.i1,
            ];
            let wts = [
                (1.0 - ay.frac) * (1.0 - ax.frac),
                (1.0 - ay.frac) * ax.frac,
                ay.frac * (1.0 - ax.frac),
                ay.frac * ax.frac,
            ];
            for c in 0..ch {
                let plane = frame.plane(c);
                let mut acc = 0.0;
                for k in 0..4 {
                    acc += wts[k] * plane[idx[k]];
                }
                out[c * n + p] = acc;
            }
        }
    }
    Frame::new(h, w, ch, out)
}
