//! `.vten` dense tensor files and binary PPM frames.
//!
//! `.vten` layout (all integers little-endian):
//!
//! ```text
//! "VTEN" | version: u8 = 1 | dtype: u8 = 0 (f32) | ndim: u8 | dims: ndim x u32 | payload: f32 x prod(dims)
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::{FlowField2D, Frame, FrameVolume, VoxelFlowStack};

pub const MAGIC: &[u8; 4] = b"VTEN";
pub const VERSION: u8 = 1;
pub const DTYPE_F32: u8 = 0;

/// A dense row-major `f32` array with its dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        check_dims(&dims, data.len())?;
        Ok(Self { dims, data })
    }

    pub fn from_frame(frame: &Frame) -> Self {
        Self {
            dims: vec![frame.channels(), frame.height(), frame.width()],
            data: frame.data().iter().map(|&v| v as f32).collect(),
        }
    }

    /// Interprets a `C x H x W` (or `H x W`, as one channel) tensor as a frame.
    pub fn to_frame(&self) -> Result<Frame> {
        let (c, h, w) = match self.dims[..] {
            [h, w] => (1, h, w),
            [c, h, w] => (c, h, w),
            _ => {
                return Err(Error::DimMismatch(format!(
                    "expected a CxHxW frame tensor, got dims {:?}",
                    self.dims
                )))
            }
        };
        Frame::new(h, w, c, widen(&self.data))
    }

    pub fn from_flow(flow: &FlowField2D) -> Self {
        let data = flow.dx.iter().chain(&flow.dy).map(|&v| v as f32).collect();
        Self {
            dims: vec![2, flow.height(), flow.width()],
            data,
        }
    }

    /// Interprets a `2 x H x W` tensor (channel order dx, dy) as a flow field.
    pub fn to_flow(&self) -> Result<FlowField2D> {
        let [2, h, w] = self.dims[..] else {
            return Err(Error::DimMismatch(format!(
                "expected a 2xHxW flow tensor, got dims {:?}",
                self.dims
            )));
        };
        let n = h * w;
        FlowField2D::new(h, w, widen(&self.data[..n]), widen(&self.data[n..]))
    }

    pub fn from_voxel_flows(stack: &VoxelFlowStack) -> Self {
        Self {
            dims: vec![4 * stack.m(), stack.height(), stack.width()],
            data: stack.data().iter().map(|&v| v as f32).collect(),
        }
    }

    /// Interprets a `(4M) x H x W` tensor as `M` voxel flows.
    pub fn to_voxel_flows(&self) -> Result<VoxelFlowStack> {
        match self.dims[..] {
            [c, h, w] if c % 4 == 0 && c > 0 => VoxelFlowStack::new(c / 4, h, w, widen(&self.data)),
            _ => Err(Error::DimMismatch(format!(
                "expected a (4M)xHxW voxel-flow tensor, got dims {:?}",
                self.dims
            ))),
        }
    }

    pub fn from_volume(volume: &FrameVolume) -> Self {
        let data = volume
            .frames()
            .iter()
            .flat_map(|f| f.data().iter().map(|&v| v as f32))
            .collect();
        Self {
            dims: vec![
                volume.depth(),
                volume.channels(),
                volume.height(),
                volume.width(),
            ],
            data,
        }
    }

    /// Interprets a `D x C x H x W` (or `D x H x W`) tensor as a volume with
    /// timestamps `0..D`.
    pub fn to_volume(&self) -> Result<FrameVolume> {
        let (d, c, h, w) = match self.dims[..] {
            [d, h, w] => (d, 1, h, w),
            [d, c, h, w] => (d, c, h, w),
            _ => {
                return Err(Error::DimMismatch(format!(
                    "expected a DxCxHxW volume tensor, got dims {:?}",
                    self.dims
                )))
            }
        };
        let n = c * h * w;
        let frames = (0..d)
            .map(|i| Frame::new(h, w, c, widen(&self.data[i * n..(i + 1) * n])))
            .collect::<Result<Vec<_>>>()?;
        FrameVolume::from_frames(frames)
    }

    /// A `1 x H x W` mask of 0/1 values.
    pub fn from_mask(mask: &[bool], height: usize, width: usize) -> Self {
        Self {
            dims: vec![1, height, width],
            data: mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }

    /// Serializes into the `.vten` byte layout.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(7 + 4 * self.dims.len() + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(DTYPE_F32);
        out.push(self.dims.len() as u8);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = bytes.get(..7).ok_or(Error::TruncatedPayload {
            expected: 7,
            found: bytes.len(),
        })?;
        let magic: [u8; 4] = header[..4].try_into().unwrap();
        if &magic != MAGIC {
            return Err(Error::BadMagic(magic));
        }
        let (version, dtype, ndim) = (header[4], header[5], header[6] as usize);
        if version != VERSION || dtype != DTYPE_F32 {
            return Err(Error::UnsupportedVersion { version, dtype });
        }
        if ndim == 0 {
            return Err(Error::DimMismatch("ndim must be at least 1".into()));
        }
        let dims_end = 7 + 4 * ndim;
        let dim_bytes = bytes.get(7..dims_end).ok_or(Error::TruncatedPayload {
            expected: dims_end,
            found: bytes.len(),
        })?;
        let dims: Vec<usize> = dim_bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
            .collect();
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::DimMismatch(format!("dims {dims:?} overflow")))?;
        let expected = dims_end + 4 * count;
        if bytes.len() < expected {
            return Err(Error::TruncatedPayload {
                expected,
                found: bytes.len(),
            });
        }
        if bytes.len() > expected {
            return Err(Error::DimMismatch(format!(
                "{} trailing bytes after payload",
                bytes.len() - expected
            )));
        }
        let data = bytes[dims_end..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { dims, data })
    }
}

fn widen(data: &[f32]) -> Vec<f64> {
    data.iter().map(|&v| v as f64).collect()
}

fn check_dims(dims: &[usize], len: usize) -> Result<()> {
    if dims.is_empty() || dims.len() > u8::MAX as usize {
        return Err(Error::DimMismatch(format!(
            "ndim must be in 1..=255, got {}",
            dims.len()
        )));
    }
    if dims.iter().any(|&d| d > u32::MAX as usize) {
        return Err(Error::DimMismatch(format!("dims {dims:?} exceed u32")));
    }
    let product: usize = dims.iter().product();
    if product != len {
        return Err(Error::DimMismatch(format!(
            "dims {dims:?} describe {product} values, array has {len}"
        )));
    }
    Ok(())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Tensor::from_bytes(&bytes)
}

pub fn write_tensor(data: &[f32], dims: &[usize], path: impl AsRef<Path>) -> Result<()> {
    check_dims(dims, data.len())?;
    let t = Tensor {
        dims: dims.to_vec(),
        data: data.to_vec(),
    };
    let path = path.as_ref();
    fs::write(path, t.to_bytes()).map_err(|e| Error::io(path, e))
}

impl Tensor {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_tensor(&self.data, &self.dims, path)
    }
}

/// Quantizes a `[0, 1]` value to a byte with round-half-up.
#[inline]
pub fn to_byte(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn decode_ppm(bytes: &[u8]) -> Result<Frame> {
    let mut pos = 0usize;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        // whitespace and comments between header tokens
        while pos < bytes.len() {
            match bytes[pos] {
                b if b.is_ascii_whitespace() => pos += 1,
                b'#' => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(Error::BadHeader("unexpected end of header".into()));
        }
        fields.push(&bytes[start..pos]);
    }
    if fields[0] != b"P6" {
        return Err(Error::BadHeader(format!(
            "expected P6 magic, found {:?}",
            String::from_utf8_lossy(fields[0])
        )));
    }
    let num = |b: &[u8], what: &str| -> Result<u32> {
        std::str::from_utf8(b)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::BadHeader(format!("invalid {what}")))
    };
    let width = num(fields[1], "width")? as usize;
    let height = num(fields[2], "height")? as usize;
    let maxval = num(fields[3], "maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedMaxval(maxval));
    }
    if width == 0 || height == 0 {
        return Err(Error::BadHeader("zero-sized image".into()));
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::BadHeader("missing whitespace after maxval".into()));
    }
    pos += 1;
    let n = width * height;
    let pixels = &bytes[pos..];
    if pixels.len() < 3 * n {
        return Err(Error::TruncatedPayload {
            expected: 3 * n,
            found: pixels.len(),
        });
    }
    let mut data = vec![0.0; 3 * n];
    for (p, rgb) in pixels[..3 * n].chunks_exact(3).enumerate() {
        for c in 0..3 {
            data[c * n + p] = rgb[c] as f64 / 255.0;
        }
    }
    Frame::new(height, width, 3, data)
}

pub fn encode_ppm(frame: &Frame) -> Result<Vec<u8>> {
    if frame.channels() != 3 {
        return Err(Error::ShapeMismatch(format!(
            "PPM output needs 3 channels, frame has {}",
            frame.channels()
        )));
    }
    let n = frame.pixels();
    let mut out = format!("P6\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.reserve(3 * n);
    for p in 0..n {
        for c in 0..3 {
            out.push(to_byte(frame.data()[c * n + p]));
        }
    }
    Ok(out)
}

pub fn read_frame_ppm(path: impl AsRef<Path>) -> Result<Frame> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ppm(&bytes)
}

pub fn write_frame_ppm(frame: &Frame, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_ppm(frame)?;
    let path = path.as_ref();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
