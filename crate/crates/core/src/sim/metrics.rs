//! PSNR and multi-scale SSIM on `[0, 1]` frames.

use crate::error::{Error, Result};
use crate::frame::Frame;

/// PSNR reported for identical frames.
pub const PSNR_CAP_DB: f64 = 99.0;

/// Per-scale exponents of the standard five-scale construction.
pub const MS_SSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
pub const WINDOW_SIZE: usize = 11;
pub const WINDOW_SIGMA: f64 = 1.5;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

pub fn mse(a: &Frame, b: &Frame) -> Result<f64> {
    a.ensure_same_shape(b, "mse")?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// `-10 log10(MSE)`, capped at [`PSNR_CAP_DB`].
pub fn psnr(a: &Frame, b: &Frame) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP_DB
    } else {
        (-10.0 * mse.log10()).min(PSNR_CAP_DB)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsSsim {
    pub value: f64,
    /// Number of scales actually used (5 for frames of at least 176 pixels).
    pub scales: usize,
}

fn gaussian_window() -> [f64; WINDOW_SIZE] {
    let mut g = [0.0; WINDOW_SIZE];
    let c = (WINDOW_SIZE / 2) as f64;
    for (i, v) in g.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp();
    }
    let s: f64 = g.iter().sum();
    g.iter_mut().for_each(|v| *v /= s);
    g
}

/// Separable "valid" Gaussian filtering of an `h x w` plane.
fn filter_valid(
    plane: &[f64],
    h: usize,
    w: usize,
    g: &[f64; WINDOW_SIZE],
) -> (Vec<f64>, usize, usize) {
    let (oh, ow) = (h + 1 - WINDOW_SIZE, w + 1 - WINDOW_SIZE);
    let mut tmp = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            let row = &plane[y * w + x..y * w + x + WINDOW_SIZE];
            tmp[y * ow + x] = row.iter().zip(g).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (k, gk) in g.iter().enumerate() {
                acc += gk * tmp[(y + k) * ow + x];
            }
            out[y * ow + x] = acc;
        }
    }
    (out, oh, ow)
}

/// 2x2 average pooling; a trailing odd row/column is dropped.
fn downsample(plane: &[f64], h: usize, w: usize) -> (Vec<f64>, usize, usize) {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            let i = 2 * y * w + 2 * x;
            out[y * ow + x] = 0.25 * (plane[i] + plane[i + 1] + plane[i + w] + plane[i + w + 1]);
        }
    }
    (out, oh, ow)
}

/// Mean contrast-structure and mean full SSIM at one scale.
fn scale_stats(a: &[f64], b: &[f64], h: usize, w: usize, g: &[f64; WINDOW_SIZE]) -> (f64, f64) {
    let prod = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).collect::<Vec<_>>();
    let (mu_a, oh, ow) = filter_valid(a, h, w, g);
    let (mu_b, ..) = filter_valid(b, h, w, g);
    let (aa, ..) = filter_valid(&prod(a, a), h, w, g);
    let (bb, ..) = filter_valid(&prod(b, b), h, w, g);
    let (ab, ..) = filter_valid(&prod(a, b), h, w, g);
    let (mut cs_sum, mut ssim_sum) = (0.0, 0.0);
    for i in 0..oh * ow {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = aa[i] - ma * ma;
        let vb = bb[i] - mb * mb;
        let cov = ab[i] - ma * mb;
        let cs = (2.0 * cov + C2) / (va + vb + C2);
        let l = (2.0 * ma * mb + C1) / (ma * ma + mb * mb + C1);
        cs_sum += cs;
        ssim_sum += l * cs;
    }
    let n = (oh * ow) as f64;
    (cs_sum / n, ssim_sum / n)
}

/// Number of scales whose plane is still at least one window wide.
pub fn ms_ssim_scales(height: usize, width: usize) -> usize {
    let (mut h, mut w, mut s) = (height, width, 0);
    while s < MS_SSIM_WEIGHTS.len() && h >= WINDOW_SIZE && w >= WINDOW_SIZE {
        s += 1;
        h /= 2;
        w /= 2;
    }
    s
}

/// Multi-scale SSIM averaged over channels.
///
/// Negative per-scale terms are clamped to zero before exponentiation.
/// Frames smaller than 176 pixels use fewer scales with the leading weights
/// renormalized to sum to one.
pub fn ms_ssim(a: &Frame, b: &Frame) -> Result<MsSsim> {
    a.ensure_same_shape(b, "ms_ssim")?;
    let scales = ms_ssim_scales(a.height(), a.width());
    if scales == 0 {
        return Err(Error::TooSmall {
            height: a.height(),
            width: a.width(),
        });
    }
    let wsum: f64 = MS_SSIM_WEIGHTS[..scales].iter().sum();
    let weights: Vec<f64> = MS_SSIM_WEIGHTS[..scales].iter().map(|w| w / wsum).collect();
    let g = gaussian_window();
    let mut total = 0.0;
    for c in 0..a.channels() {
        let (mut pa, mut pb) = (a.plane(c).to_vec(), b.plane(c).to_vec());
        let (mut h, mut w) = (a.height(), a.width());
        let mut value = 1.0;
        for (j, &wj) in weights.iter().enumerate() {
            let (cs, ssim) = scale_stats(&pa, &pb, h, w, &g);
            let term = if j + 1 == scales { ssim } else { cs };
            value *= term.max(0.0).powf(wj);
            if j + 1 < scales {
                let (da, nh, nw) = downsample(&pa, h, w);
                let (db, ..) = downsample(&pb, h, w);
                pa = da;
                pb = db;
                h = nh;
                w = nw;
            }
        }
        total += value;
    }
    Ok(MsSsim {
        value: total / a.channels() as f64,
        scales,
    })
}
