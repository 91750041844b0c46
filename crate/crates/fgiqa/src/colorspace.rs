//! RGB to YCbCr conversion.
//!
//! The metric operates on the same color space the JPEG family of codecs
//! uses internally. Conversion is kept in full floating point: no rounding,
//! no clamping, so fine-grained score differences are not polluted by
//! quantization noise.

use crate::error::{Error, Result};
use crate::plane::Plane;

/// An RGB image held as three real-valued planes.
///
/// Values are expected in `[0, 255]`. 8-bit sources map exactly; 16-bit
/// sources are rescaled by `255 / 65535` at load time, so the planes may
/// hold non-integer values.
#[derive(Debug, Clone)]
pub struct RgbImage {
    pub r: Plane,
    pub g: Plane,
    pub b: Plane,
}

impl RgbImage {
    pub fn new(r: Plane, g: Plane, b: Plane) -> Result<Self> {
        if !r.same_dimensions(&g) || !r.same_dimensions(&b) {
            return Err(Error::invalid_input(
                "RGB channels must share identical dimensions",
            ));
        }
        Ok(RgbImage { r, g, b })
    }

    /// Builds an image from interleaved 8-bit RGB samples.
    pub fn from_rgb8(width: usize, height: usize, samples: &[u8]) -> Result<Self> {
        if samples.len() != width * height * 3 {
            return Err(Error::invalid_input(format!(
                "expected {} interleaved samples for {}x{}, got {}",
                width * height * 3,
                width,
                height,
                samples.len()
            )));
        }
        let channel = |offset: usize| {
            Plane::from_fn(width, height, |x, y| {
                f64::from(samples[(y * width + x) * 3 + offset])
            })
        };
        Ok(RgbImage {
            r: channel(0),
            g: channel(1),
            b: channel(2),
        })
    }

    /// Builds an image from interleaved 16-bit RGB samples, rescaled to the
    /// `[0, 255]` range the metric constants are calibrated for.
    pub fn from_rgb16(width: usize, height: usize, samples: &[u16]) -> Result<Self> {
        if samples.len() != width * height * 3 {
            return Err(Error::invalid_input(format!(
                "expected {} interleaved samples for {}x{}, got {}",
                width * height * 3,
                width,
                height,
                samples.len()
            )));
        }
        let scale = 255.0 / 65535.0;
        let channel = |offset: usize| {
            Plane::from_fn(width, height, |x, y| {
                f64::from(samples[(y * width + x) * 3 + offset]) * scale
            })
        };
        Ok(RgbImage {
            r: channel(0),
            g: channel(1),
            b: channel(2),
        })
    }

    pub fn width(&self) -> usize {
        self.r.width()
    }

    pub fn height(&self) -> usize {
        self.r.height()
    }

    pub fn same_dimensions(&self, other: &RgbImage) -> bool {
        self.r.same_dimensions(&other.r)
    }
}

/// Luma plus blue/red-difference chroma planes produced by [`rgb_to_ycbcr`].
#[derive(Debug, Clone)]
pub struct YcbcrImage {
    pub y: Plane,
    pub cb: Plane,
    pub cr: Plane,
}

impl YcbcrImage {
    pub fn width(&self) -> usize {
        self.y.width()
    }

    pub fn height(&self) -> usize {
        self.y.height()
    }
}

/// Converts an RGB image to real-valued Y, Cb, Cr planes.
///
/// Each output pixel is the exact affine combination
///
/// ```text
/// Y  =  0.257 R + 0.564 G + 0.098 B +  16
/// Cb = -0.148 R - 0.291 G + 0.439 B + 128
/// Cr =  0.439 R - 0.368 G - 0.071 B + 128
/// ```
///
/// evaluated in floating point with no rounding and no clamping. Both chroma
/// coefficient rows sum to zero, so gray inputs map to Cb = Cr = 128.
pub fn rgb_to_ycbcr(img: &RgbImage) -> YcbcrImage {
    let combine = |cr: f64, cg: f64, cb: f64, offset: f64| {
        Plane::from_fn(img.width(), img.height(), |x, y| {
            cr * img.r.get(x, y) + cg * img.g.get(x, y) + cb * img.b.get(x, y) + offset
        })
    };
    YcbcrImage {
        y: combine(0.257, 0.564, 0.098, 16.0),
        cb: combine(-0.148, -0.291, 0.439, 128.0),
        cr: combine(0.439, -0.368, -0.071, 128.0),
    }
}
