//! Images, pixel descriptors and the per-traverse feature set.
//!
//! Every descriptor that reaches the matcher, whether it is a layer of CNN
//! activations exported by an external tool or a downsampled pixel patch
//! computed here, is stored as a [`FeatureSet`]: one vector per frame, in
//! traversal order.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VprError};

/// Side length of the square images fed to the descriptor stage.
pub const PREPROCESSED_SIDE: usize = 256;

/// Highest CNN layer tag; tag 0 marks non-CNN descriptors.
pub const MAX_LAYER_TAG: u32 = 21;

/// 8-bit image, row-major, interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(VprError::invalid(format!(
                "image must have 1 or 3 channels, got {channels}"
            )));
        }
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| VprError::invalid("image dimensions overflow"))?;
        if pixels.len() != expected {
            return Err(VprError::invalid(format!(
                "{width}x{height}x{channels} image needs {expected} bytes, got {}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    pub fn gray(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        Self::new(width, height, 1, pixels)
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            channels: 1,
            pixels: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    /// Intensity at (x, y) of a single-channel image.
    pub fn at(&self, x: usize, y: usize) -> u8 {
        debug_assert_eq!(self.channels, 1);
        self.pixels[y * self.width + x]
    }
}

/// Converts to gray using luma weights 0.299 R + 0.587 G + 0.114 B, rounded.
pub fn to_grayscale(img: &Image) -> Image {
    if img.channels == 1 {
        return img.clone();
    }
    let pixels = img
        .pixels
        .chunks_exact(3)
        .map(|px| {
            let luma = 0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64;
            luma.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    Image {
        width: img.width,
        height: img.height,
        channels: 1,
        pixels,
    }
}

/// Global min-max contrast stretch to [0, 255]. A constant image maps to all zeros.
pub fn contrast_stretch(img: &Image) -> Image {
    let (lo, hi) = img
        .pixels
        .iter()
        .fold((u8::MAX, u8::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let pixels = if img.pixels.is_empty() || lo == hi {
        vec![0; img.pixels.len()]
    } else {
        let range = (hi - lo) as f64;
        img.pixels
            .iter()
            .map(|&v| ((v - lo) as f64 * 255.0 / range).round() as u8)
            .collect()
    };
    Image {
        pixels,
        ..img.clone()
    }
}

/// Bilinear resampling with pixel-centre alignment; same-size resizes are the identity.
pub fn resize_bilinear(img: &Image, width: usize, height: usize) -> Result<Image> {
    if img.width == 0 || img.height == 0 || width == 0 || height == 0 {
        return Err(VprError::invalid("cannot resize a zero-sized image"));
    }
    if img.width == width && img.height == height {
        return Ok(img.clone());
    }
    let ch = img.channels;
    let sx = img.width as f64 / width as f64;
    let sy = img.height as f64 / height as f64;
    let axis = |dst: usize, scale: f64, len: usize| {
        let src = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f64);
        let i0 = src.floor() as usize;
        let i1 = (i0 + 1).min(len - 1);
        (i0, i1, src - i0 as f64)
    };
    let cols: Vec<_> = (0..width).map(|x| axis(x, sx, img.width)).collect();
    let mut pixels = Vec::with_capacity(width * height * ch);
    for y in 0..height {
        let (y0, y1, fy) = axis(y, sy, img.height);
        for &(x0, x1, fx) in &cols {
            for c in 0..ch {
                let p = |x: usize, y: usize| img.pixels[(y * img.width + x) * ch + c] as f64;
                let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
                let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
                let v = top * (1.0 - fy) + bottom * fy;
                pixels.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Ok(Image {
        width,
        height,
        channels: ch,
        pixels,
    })
}

/// Grayscale conversion, resize to 256x256, then min-max contrast stretch.
///
/// The stretch runs last so that the output always spans the full range and a
/// second application is a no-op.
pub fn preprocess_image(img: &Image) -> Result<Image> {
    if img.width == 0 || img.height == 0 {
        return Err(VprError::invalid(format!(
            "zero-sized image ({}x{})",
            img.width, img.height
        )));
    }
    let gray = to_grayscale(img);
    let resized = resize_bilinear(&gray, PREPROCESSED_SIDE, PREPROCESSED_SIDE)?;
    Ok(contrast_stretch(&resized))
}

/// Block-averages a single-channel image down to `side`x`side` and flattens it row-major.
///
/// When `side` does not divide the image size, block `b` along an axis of
/// length `n` covers `[b*n/side, (b+1)*n/side)`.
pub fn pixel_descriptor(img: &Image, side: usize) -> Result<FeatureVector> {
    if img.channels != 1 {
        return Err(VprError::invalid(
            "pixel descriptor needs a single-channel image",
        ));
    }
    if side == 0 || side > img.width.min(img.height) {
        return Err(VprError::invalid(format!(
            "descriptor side {side} must be in 1..={}",
            img.width.min(img.height)
        )));
    }
    let bounds = |n: usize| -> Vec<(usize, usize)> {
        (0..side).map(|b| (b * n / side, (b + 1) * n / side)).collect()
    };
    let xb = bounds(img.width);
    let yb = bounds(img.height);
    let mut values = Vec::with_capacity(side * side);
    for &(y0, y1) in &yb {
        for &(x0, x1) in &xb {
            let sum: u64 = (y0..y1)
                .flat_map(|y| &img.pixels[y * img.width + x0..y * img.width + x1])
                .map(|&v| v as u64)
                .sum();
            let count = ((y1 - y0) * (x1 - x0)) as f64;
            values.push((sum as f64 / count) as f32);
        }
    }
    FeatureVector::new(values)
}

/// A non-empty vector of finite 32-bit floats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f32>", into = "Vec<f32>")]
pub struct FeatureVector(Vec<f32>);

impl FeatureVector {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(VprError::invalid("feature vector must have dimension >= 1"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(VprError::invalid(format!(
                "feature vector component {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }
}

impl TryFrom<Vec<f32>> for FeatureVector {
    type Error = VprError;

    fn try_from(values: Vec<f32>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<FeatureVector> for Vec<f32> {
    fn from(v: FeatureVector) -> Self {
        v.0
    }
}

impl AsRef<[f32]> for FeatureVector {
    fn as_ref(&self) -> &[f32] {
        &self.0
    }
}

/// Storage type of a feature file. Values are always handled as `f32` in memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    Float32,
    /// Non-negative integers up to 65535, stored as-is without scaling.
    Uint16,
}

impl Dtype {
    pub fn code(self) -> u32 {
        match self {
            Dtype::Float32 => 0,
            Dtype::Uint16 => 1,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(Dtype::Float32),
            1 => Some(Dtype::Uint16),
            _ => None,
        }
    }
}

/// Ordered per-frame feature vectors for one traverse at one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    layer_tag: u32,
    dtype: Dtype,
    dim: usize,
    frames: Vec<FeatureVector>,
    source_label: String,
}

impl FeatureSet {
    pub fn new(
        layer_tag: u32,
        dtype: Dtype,
        dim: usize,
        frames: Vec<FeatureVector>,
        source_label: impl Into<String>,
    ) -> Result<Self> {
        if layer_tag > MAX_LAYER_TAG {
            return Err(VprError::invalid(format!(
                "layer tag {layer_tag} outside 0..={MAX_LAYER_TAG}"
            )));
        }
        if dim == 0 {
            return Err(VprError::invalid("feature dimension must be >= 1"));
        }
        if let Some((i, v)) = frames.iter().enumerate().find(|(_, v)| v.dim() != dim) {
            return Err(VprError::invalid(format!(
                "frame {i} has dimension {}, expected {dim}",
                v.dim()
            )));
        }
        if dtype == Dtype::Uint16 {
            for (i, v) in frames.iter().enumerate() {
                if let Some(x) = v.as_slice().iter().find(|x| !is_u16_value(**x)) {
                    return Err(VprError::invalid(format!(
                        "frame {i} holds {x}, not representable as uint16"
                    )));
                }
            }
        }
        Ok(Self {
            layer_tag,
            dtype,
            dim,
            frames,
            source_label: source_label.into(),
        })
    }

    /// Builds a float32 set, taking the dimension from the first frame.
    pub fn from_frames(
        layer_tag: u32,
        frames: Vec<FeatureVector>,
        source_label: impl Into<String>,
    ) -> Result<Self> {
        let dim = frames
            .first()
            .map(FeatureVector::dim)
            .ok_or_else(|| VprError::invalid("feature set needs at least one frame"))?;
        Self::new(layer_tag, Dtype::Float32, dim, frames, source_label)
    }

    /// Rounds and clamps every value into uint16 range and marks the set as uint16.
    pub fn quantize_u16(&self) -> Self {
        let frames = self
            .frames
            .iter()
            .map(|v| {
                FeatureVector(
                    v.as_slice()
                        .iter()
                        .map(|x| x.round().clamp(0.0, u16::MAX as f32))
                        .collect(),
                )
            })
            .collect();
        Self {
            dtype: Dtype::Uint16,
            frames,
            ..self.clone()
        }
    }

    pub fn layer_tag(&self) -> u32 {
        self.layer_tag
    }

    pub fn dtype(&self) -> Dtype {
        self.dtype
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[FeatureVector] {
        &self.frames
    }

    pub fn frame(&self, index: usize) -> &FeatureVector {
        &self.frames[index]
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn with_source_label(mut self, label: impl Into<String>) -> Self {
        self.source_label = label.into();
        self
    }
}

pub(crate) fn is_u16_value(x: f32) -> bool {
    x >= 0.0 && x <= u16::MAX as f32 && x.fract() == 0.0
}
