//! Procedural test sequences: smooth textures under known motion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::frame::Frame;

/// A smooth, seeded sum-of-sinusoids texture defined on the whole plane.
#[derive(Debug, Clone)]
pub struct Texture {
    /// per channel: (kx, ky, phase, amplitude)
    waves: Vec<Vec<(f64, f64, f64, f64)>>,
}

impl Texture {
    pub fn new(seed: u64, channels: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let waves = (0..channels)
            .map(|_| {
                (0..6)
                    .map(|_| {
                        let freq = rng.gen_range(0.2..0.7);
                        let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                        (
                            freq * angle.cos(),
                            freq * angle.sin(),
                            rng.gen_range(0.0..std::f64::consts::TAU),
                            rng.gen_range(0.5..1.0),
                        )
                    })
                    .collect()
            })
            .collect();
        Self { waves }
    }

    /// Value in `[0.15, 0.85]` at continuous position `(x, y)`.
    pub fn sample(&self, c: usize, x: f64, y: f64) -> f64 {
        let waves = &self.waves[c];
        let total: f64 = waves.iter().map(|w| w.3).sum();
        let s: f64 = waves
            .iter()
            .map(|&(kx, ky, ph, a)| a * (kx * x + ky * y + ph).sin())
            .sum();
        0.5 + 0.35 * s / total
    }
}

fn smoothstep(e0: f64, e1: f64, v: f64) -> f64 {
    let t = ((v - e0) / (e1 - e0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// A texture that fades to a flat 0.5 within `margin` pixels of the border
/// of a `height x width` window, so translations by less than `margin`
/// stay exactly representable under clamp-to-edge sampling.
#[derive(Debug, Clone)]
pub struct FramedTexture {
    pub texture: Texture,
    pub height: usize,
    pub width: usize,
    pub margin: f64,
}

impl FramedTexture {
    pub fn sample(&self, c: usize, x: f64, y: f64) -> f64 {
        let ramp = 4.0;
        let win = |v: f64, n: usize| {
            let hi = (n - 1) as f64 - self.margin;
            smoothstep(self.margin, self.margin + ramp, v) * (1.0 - smoothstep(hi - ramp, hi, v))
        };
        let t = self.texture.sample(c, x, y);
        0.5 + win(x, self.width) * win(y, self.height) * (t - 0.5)
    }
}

/// Frames `t = 0..shifts.len()` where frame `t` is the framed texture
/// translated by `shifts[t]`.
pub fn translating_sequence(
    height: usize,
    width: usize,
    shifts: &[(f64, f64)],
    seed: u64,
    margin: f64,
) -> Vec<Frame> {
    let tex = FramedTexture {
        texture: Texture::new(seed, 3),
        height,
        width,
        margin,
    };
    shifts
        .iter()
        .map(|&(sx, sy)| {
            Frame::from_fn(height, width, 3, |c, y, x| {
                tex.sample(c, x as f64 - sx, y as f64 - sy)
            })
        })
        .collect()
}

/// Constant-acceleration global translation: `shift(t) = v t + c t^2`
/// with integer `v` and `c`, so every frame-to-frame displacement is integral.
pub fn accelerating_sequence(
    height: usize,
    width: usize,
    len: usize,
    velocity: (i64, i64),
    accel: (i64, i64),
    seed: u64,
) -> Vec<Frame> {
    let shifts: Vec<(f64, f64)> = (0..len as i64)
        .map(|t| {
            (
                (velocity.0 * t + accel.0 * t * t) as f64,
                (velocity.1 * t + accel.1 * t * t) as f64,
            )
        })
        .collect();
    let max_shift = shifts
        .iter()
        .map(|s| s.0.abs().max(s.1.abs()))
        .fold(0.0, f64::max);
    translating_sequence(height, width, &shifts, seed, max_shift + 1.0)
}

/// A textured square moving with integer velocity over a static textured
/// background; the square occludes and disoccludes background pixels.
#[derive(Debug, Clone)]
pub struct OcclusionScene {
    pub height: usize,
    pub width: usize,
    pub size: usize,
    pub start: (i64, i64),
    pub velocity: (i64, i64),
    background: Texture,
    foreground: Texture,
}

impl OcclusionScene {
    pub fn random(height: usize, width: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0cc1);
        let size = height.min(width) * 5 / 16;
        let mut vel = || {
            let v: i64 = rng.gen_range(2..=3);
            if rng.gen_bool(0.5) {
                v
            } else {
                -v
            }
        };
        let velocity = (vel(), vel());
        let cx = (width as i64 - size as i64) / 2;
        let cy = (height as i64 - size as i64) / 2;
        Self {
            height,
            width,
            size,
            start: (cx - 2 * velocity.0, cy - 2 * velocity.1),
            velocity,
            background: Texture::new(seed.wrapping_mul(2).wrapping_add(1), 3),
            foreground: Texture::new(seed.wrapping_mul(2).wrapping_add(2), 3),
        }
    }

    pub fn frame(&self, t: i64) -> Frame {
        let px = self.start.0 + self.velocity.0 * t;
        let py = self.start.1 + self.velocity.1 * t;
        let s = self.size as i64;
        Frame::from_fn(self.height, self.width, 3, |c, y, x| {
            let (lx, ly) = (x as i64 - px, y as i64 - py);
            if (0..s).contains(&lx) && (0..s).contains(&ly) {
                // high-contrast foreground so occlusion boundaries matter
                let v = self.foreground.sample(c, lx as f64, ly as f64);
                (2.0 * v - 0.5).clamp(0.0, 1.0)
            } else {
                self.background.sample(c, x as f64, y as f64)
            }
        })
    }

    pub fn frames(&self, len: usize) -> Vec<Frame> {
        (0..len as i64).map(|t| self.frame(t)).collect()
    }
}
