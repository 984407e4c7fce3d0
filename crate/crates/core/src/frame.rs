//! Dense planar data model shared by every kernel.
//!
//! All maps are stored row-major; multi-channel data is channel-major
//! (`c * H * W + y * W + x`). Values are `f64` in memory and `f32` on disk.

use crate::error::{Error, Result};

/// A planar floating-point image. Pixel values are nominally in `[0, 1]`
/// but residual frames may hold any finite value.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Frame {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::ShapeMismatch(format!(
                "frame dimensions must be nonzero, got {channels}x{height}x{width}"
            )));
        }
        if data.len() != channels * height * width {
            return Err(Error::ShapeMismatch(format!(
                "frame {channels}x{height}x{width} needs {} values, got {}",
                channels * height * width,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch("frame values must be finite".into()));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0 && channels > 0, "zero-sized frame");
        Self {
            height,
            width,
            channels,
            data: vec![value; height * width * channels],
        }
    }

    /// Builds a frame from a per-sample function `f(c, y, x)`.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(height * width * channels);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Self::new(height, width, channels, data).expect("from_fn produced an invalid frame")
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.pixels();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn same_shape(&self, other: &Frame) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    pub(crate) fn ensure_same_shape(&self, other: &Frame, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{what}: {}x{}x{} vs {}x{}x{}",
                self.channels, self.height, self.width, other.channels, other.height, other.width
            )))
        }
    }
}

/// `D` reference frames of identical shape stacked along a depth axis.
/// Depth index `d` corresponds to display index `timestamps[d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameVolume {
    frames: Vec<Frame>,
    timestamps: Vec<i64>,
}

impl FrameVolume {
    pub fn new(frames: Vec<Frame>, timestamps: Vec<i64>) -> Result<Self> {
        let Some(first) = frames.first() else {
            return Err(Error::ShapeMismatch(
                "volume needs at least one frame".into(),
            ));
        };
        if frames.len() != timestamps.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} frames but {} timestamps",
                frames.len(),
                timestamps.len()
            )));
        }
        for f in &frames[1..] {
            first.ensure_same_shape(f, "volume member")?;
        }
        if timestamps.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig(
                "volume timestamps must be distinct".into(),
            ));
        }
        Ok(Self { frames, timestamps })
    }

    /// Stacks frames with timestamps `0..D`.
    pub fn from_frames(frames: Vec<Frame>) -> Result<Self> {
        let ts = (0..frames.len() as i64).collect();
        Self::new(frames, ts)
    }

    #[inline]
    pub fn depth(&self) -> usize {
        self.frames.len()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.frames[0].channels()
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame(&self, depth: usize) -> &Frame {
        &self.frames[depth]
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    /// Depth index of the slice whose timestamp is nearest to `t`
    /// (earlier slice on ties).
    pub fn nearest_depth(&self, t: i64) -> usize {
        let mut best = 0;
        for (d, &ts) in self.timestamps.iter().enumerate() {
            let (cur, bts) = ((ts - t).abs(), self.timestamps[best]);
            let bd = (bts - t).abs();
            if cur < bd || (cur == bd && ts < bts) {
                best = d;
            }
        }
        best
    }
}

/// Per-pixel 2D displacement field in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField2D {
    height: usize,
    width: usize,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

impl FlowField2D {
    pub fn new(height: usize, width: usize, dx: Vec<f64>, dy: Vec<f64>) -> Result<Self> {
        let n = height * width;
        if n == 0 || dx.len() != n || dy.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "flow {height}x{width} needs {n} values per axis, got {} / {}",
                dx.len(),
                dy.len()
            )));
        }
        if dx.iter().chain(&dy).any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch("flow values must be finite".into()));
        }
        Ok(Self {
            height,
            width,
            dx,
            dy,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::uniform(height, width, 0.0, 0.0)
    }

    pub fn uniform(height: usize, width: usize, dx: f64, dy: f64) -> Self {
        Self {
            height,
            width,
            dx: vec![dx; height * width],
            dy: vec![dy; height * width],
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn matches(&self, height: usize, width: usize) -> bool {
        self.height == height && self.width == width
    }

    pub(crate) fn ensure_matches(&self, height: usize, width: usize, what: &str) -> Result<()> {
        if self.matches(height, width) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{what}: flow is {}x{}, expected {height}x{width}",
                self.height, self.width
            )))
        }
    }
}

/// Which of the four per-flow channels of a voxel flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoxelChannel {
    Gx = 0,
    Gy = 1,
    Gz = 2,
    Gw = 3,
}

impl VoxelChannel {
    pub const ALL: [VoxelChannel; 4] = [
        VoxelChannel::Gx,
        VoxelChannel::Gy,
        VoxelChannel::Gz,
        VoxelChannel::Gw,
    ];
}

/// `M` voxel flows, each a 4-channel field `(g_x, g_y, g_z, g_w)`.
///
/// Memory layout is `M x 4 x H x W`, which is also the `(4M) x H x W`
/// on-disk channel order. `g_z` is an absolute depth coordinate into the
/// reference volume and `g_w` an unnormalized weight logit.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelFlowStack {
    m: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl VoxelFlowStack {
    pub fn new(m: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::EmptyStack);
        }
        if height == 0 || width == 0 || data.len() != m * 4 * height * width {
            return Err(Error::ShapeMismatch(format!(
                "voxel stack {m}x4x{height}x{width} needs {} values, got {}",
                m * 4 * height * width,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch(
                "voxel flow values must be finite".into(),
            ));
        }
        Ok(Self {
            m,
            height,
            width,
            data,
        })
    }

    pub fn zeros(m: usize, height: usize, width: usize) -> Result<Self> {
        Self::new(m, height, width, vec![0.0; m * 4 * height * width])
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn field(&self, flow: usize, ch: VoxelChannel) -> &[f64] {
        let n = self.pixels();
        let off = (flow * 4 + ch as usize) * n;
        &self.data[off..off + n]
    }

    pub fn field_mut(&mut self, flow: usize, ch: VoxelChannel) -> &mut [f64] {
        let n = self.pixels();
        let off = (flow * 4 + ch as usize) * n;
        &mut self.data[off..off + n]
    }

    /// Value of channel `ch` of flow `flow` at linear pixel index `p`.
    #[inline]
    pub fn at(&self, flow: usize, ch: VoxelChannel, p: usize) -> f64 {
        self.data[(flow * 4 + ch as usize) * self.pixels() + p]
    }

    /// Logits of every flow, gathered into an `M x H x W` buffer.
    pub fn logits(&self) -> Vec<f64> {
        (0..self.m)
            .flat_map(|i| self.field(i, VoxelChannel::Gw).iter().copied())
            .collect()
    }
}
