//! Reference oracles shared by the integration and acceptance tests.
//!
//! Everything here is written directly from the defining formulas, one
//! pixel at a time, with no code shared with the library.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use voxflow::{FlowField2D, Frame, FrameVolume, VoxelFlowStack};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Clamp-to-edge linear interpolation weights along one axis.
fn lerp_taps(v: f64, n: usize) -> [(usize, f64); 2] {
    let hi = (n - 1) as f64;
    let v = v.max(0.0).min(hi);
    let i0 = v.floor() as usize;
    let i1 = (i0 + 1).min(n - 1);
    let t = v - i0 as f64;
    [(i0, 1.0 - t), (i1, t)]
}

pub fn oracle_trilinear(vol: &FrameVolume, c: usize, x: f64, y: f64, z: f64) -> f64 {
    let mut acc = 0.0;
    for (zi, wz) in lerp_taps(z, vol.depth()) {
        for (yi, wy) in lerp_taps(y, vol.height()) {
            for (xi, wx) in lerp_taps(x, vol.width()) {
                acc += wz * wy * wx * vol.frame(zi).get(c, yi, xi);
            }
        }
    }
    acc
}

/// Scalar weighted voxel warp: one pixel, one flow, one channel at a time.
pub fn oracle_warp(vol: &FrameVolume, flows: &VoxelFlowStack) -> Frame {
    let (h, w, m) = (vol.height(), vol.width(), flows.m());
    let n = h * w;
    let at = |i: usize, ch: usize, p: usize| flows.data()[(i * 4 + ch) * n + p];
    Frame::from_fn(h, w, vol.channels(), |c, y, x| {
        let p = y * w + x;
        let logits: Vec<f64> = (0..m).map(|i| at(i, 3, p)).collect();
        let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
        let s: f64 = e.iter().sum();
        (0..m)
            .map(|i| {
                let sx = x as f64 + at(i, 0, p);
                let sy = y as f64 + at(i, 1, p);
                e[i] / s * oracle_trilinear(vol, c, sx, sy, at(i, 2, p))
            })
            .sum()
    })
}

/// Naive bilinear scatter of `C x H x W` values along `flow`, dropping
/// out-of-frame taps.
pub fn oracle_splat(values: &[f64], channels: usize, flow: &FlowField2D) -> Vec<f64> {
    let (h, w) = (flow.height(), flow.width());
    let n = h * w;
    let mut out = vec![0.0; channels * n];
    for sy in 0..h {
        for sx in 0..w {
            let p = sy * w + sx;
            let tx = sx as f64 + flow.dx[p];
            let ty = sy as f64 + flow.dy[p];
            for qy in 0..h {
                for qx in 0..w {
                    let wx = 1.0 - (tx - qx as f64).abs();
                    let wy = 1.0 - (ty - qy as f64).abs();
                    if wx > 0.0 && wy > 0.0 {
                        for c in 0..channels {
                            out[c * n + qy * w + qx] += wx * wy * values[c * n + p];
                        }
                    }
                }
            }
        }
    }
    out
}

const MS_W: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];

fn gauss2d() -> Vec<Vec<f64>> {
    let mut k = vec![vec![0.0; 11]; 11];
    let mut s = 0.0;
    for (i, row) in k.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            *v = (-(di * di + dj * dj) / (2.0 * 1.5 * 1.5)).exp();
            s += *v;
        }
    }
    for row in k.iter_mut() {
        for v in row.iter_mut() {
            *v /= s;
        }
    }
    k
}

/// Mean (contrast-structure, SSIM) over all valid 11x11 windows, each
/// window's moments computed directly.
fn window_stats(a: &[Vec<f64>], b: &[Vec<f64>], k: &[Vec<f64>]) -> (f64, f64) {
    let (c1, c2) = (1e-4, 9e-4);
    let (h, w) = (a.len(), a[0].len());
    let (mut cs_sum, mut ss_sum, mut count) = (0.0, 0.0, 0.0);
    for y in 0..=h - 11 {
        for x in 0..=w - 11 {
            let (mut ma, mut mb) = (0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    ma += k[i][j] * a[y + i][x + j];
                    mb += k[i][j] * b[y + i][x + j];
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    let (da, db) = (a[y + i][x + j] - ma, b[y + i][x + j] - mb);
                    va += k[i][j] * da * da;
                    vb += k[i][j] * db * db;
                    cov += k[i][j] * da * db;
                }
            }
            let cs = (2.0 * cov + c2) / (va + vb + c2);
            let l = (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
            cs_sum += cs;
            ss_sum += l * cs;
            count += 1.0;
        }
    }
    (cs_sum / count, ss_sum / count)
}

fn pool(p: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..p.len() / 2)
        .map(|y| {
            (0..p[0].len() / 2)
                .map(|x| {
                    (p[2 * y][2 * x]
                        + p[2 * y][2 * x + 1]
                        + p[2 * y + 1][2 * x]
                        + p[2 * y + 1][2 * x + 1])
                        / 4.0
                })
                .collect()
        })
        .collect()
}

/// Multi-scale SSIM: contrast-structure at the finer scales, full SSIM at
/// the coarsest, 2x2 average pooling between scales, channel mean.
pub fn oracle_ms_ssim(a: &Frame, b: &Frame) -> f64 {
    let k = gauss2d();
    let mut scales = 0;
    let (mut h, mut w) = (a.height(), a.width());
    while scales < 5 && h >= 11 && w >= 11 {
        scales += 1;
        h /= 2;
        w /= 2;
    }
    let wsum: f64 = MS_W[..scales].iter().sum();
    let mut total = 0.0;
    for c in 0..a.channels() {
        let plane = |f: &Frame| -> Vec<Vec<f64>> {
            (0..f.height())
                .map(|y| (0..f.width()).map(|x| f.get(c, y, x)).collect())
                .collect()
        };
        let (mut pa, mut pb) = (plane(a), plane(b));
        let mut v = 1.0;
        for s in 0..scales {
            let (cs, ss) = window_stats(&pa, &pb, &k);
            let term: f64 = if s + 1 == scales { ss } else { cs };
            v *= term.max(0.0).powf(MS_W[s] / wsum);
            pa = pool(&pa);
            pb = pool(&pb);
        }
        total += v;
    }
    total / a.channels() as f64
}

pub fn random_frame(r: &mut impl Rng, h: usize, w: usize, c: usize) -> Frame {
    Frame::from_fn(h, w, c, |_, _, _| r.gen_range(0.0..1.0))
}

pub fn random_volume(r: &mut impl Rng, d: usize, h: usize, w: usize, c: usize) -> FrameVolume {
    FrameVolume::from_frames((0..d).map(|_| random_frame(r, h, w, c)).collect()).unwrap()
}

/// Random voxel flows, including samples outside the volume on every axis.
pub fn random_stack(r: &mut impl Rng, m: usize, d: usize, h: usize, w: usize) -> VoxelFlowStack {
    let n = h * w;
    let mut data = vec![0.0; m * 4 * n];
    for i in 0..m {
        for p in 0..n {
            data[(i * 4) * n + p] = r.gen_range(-(w as f64) - 1.0..w as f64 + 1.0);
            data[(i * 4 + 1) * n + p] = r.gen_range(-(h as f64) - 1.0..h as f64 + 1.0);
            data[(i * 4 + 2) * n + p] = r.gen_range(-1.0..d as f64);
            data[(i * 4 + 3) * n + p] = r.gen_range(-3.0..3.0);
        }
    }
    VoxelFlowStack::new(m, h, w, data).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
