//! Minimal float image type with 16-bit PNG I/O and area resampling.

use std::path::Path;

use image::codecs::png::PngEncoder;
use image::{DynamicImage, ImageBuffer, ImageFormat, Rgb};

use crate::error::{Error, Result};

/// Interleaved float image, channel values nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        Self {
            data: vec![value; width * height * channels],
            ..Self::new(width, height, channels)
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f32) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn check_same_shape(&self, other: &Image) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::Shape(format!(
                "{}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.channels, other.width, other.height, other.channels
            )));
        }
        Ok(())
    }

    /// Rec. 601 luma for 3-channel images; the single channel otherwise.
    pub fn luma(&self) -> Vec<f64> {
        match self.channels {
            3 => self
                .data
                .chunks_exact(3)
                .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
                .collect(),
            1 => self.data.iter().map(|&v| v as f64).collect(),
            n => self
                .data
                .chunks_exact(n)
                .map(|p| p.iter().map(|&v| v as f64).sum::<f64>() / n as f64)
                .collect(),
        }
    }

    /// 16-bit code values, `round(clamp(v) * 65535)`.
    pub fn to_u16(&self) -> Vec<u16> {
        self.data
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) as f64 * 65535.0).round() as u16)
            .collect()
    }

    pub fn from_u16(width: usize, height: usize, channels: usize, codes: &[u16]) -> Self {
        Self {
            width,
            height,
            channels,
            data: codes.iter().map(|&v| (v as f64 / 65535.0) as f32).collect(),
        }
    }

    /// Encodes a 3-channel image as a 16-bit RGB PNG.
    pub fn encode_png16(&self) -> Result<Vec<u8>> {
        if self.channels != 3 {
            return Err(Error::Shape(format!("PNG export needs 3 channels, got {}", self.channels)));
        }
        let buf: ImageBuffer<Rgb<u16>, Vec<u16>> =
            ImageBuffer::from_raw(self.width as u32, self.height as u32, self.to_u16())
                .ok_or_else(|| Error::Shape("image buffer size mismatch".into()))?;
        let mut out = Vec::new();
        buf.write_with_encoder(PngEncoder::new(&mut out))
            .map_err(|e| Error::Numerical(format!("png encode: {e}")))?;
        Ok(out)
    }

    /// Decodes any PNG into a 3-channel float image in `[0, 1]`.
    pub fn decode_png(bytes: &[u8], path: &Path) -> Result<Self> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(Self::from_dynamic(&img))
    }

    pub fn from_dynamic(img: &DynamicImage) -> Self {
        match img {
            DynamicImage::ImageRgb16(buf) => {
                Self::from_u16(buf.width() as usize, buf.height() as usize, 3, buf.as_raw())
            }
            _ => {
                let rgb = img.to_rgb32f();
                Self {
                    width: rgb.width() as usize,
                    height: rgb.height() as usize,
                    channels: 3,
                    data: rgb.into_raw(),
                }
            }
        }
    }
}

/// Source-pixel coverage weights of each output pixel along one axis.
fn area_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let (a, b) = (i as f64 * scale, (i + 1) as f64 * scale);
            let mut w = Vec::new();
            let mut j = a.floor() as usize;
            while (j as f64) < b && j < src {
                let overlap = (b.min(j as f64 + 1.0) - a.max(j as f64)).max(0.0);
                if overlap > 0.0 {
                    w.push((j, overlap / scale));
                }
                j += 1;
            }
            w
        })
        .collect()
}

/// Resamples by exact box-area averaging (separable).
pub fn resize_area(img: &Image, width: usize, height: usize) -> Image {
    if img.width == width && img.height == height {
        return img.clone();
    }
    let ch = img.channels;
    let wx = area_weights(img.width, width);
    let wy = area_weights(img.height, height);
    // horizontal pass
    let mut tmp = vec![0.0f64; width * img.height * ch];
    for y in 0..img.height {
        for (x, ws) in wx.iter().enumerate() {
            for c in 0..ch {
                tmp[(y * width + x) * ch + c] = ws.iter().map(|&(sx, w)| w * img.get(sx, y, c) as f64).sum();
            }
        }
    }
    let mut out = Image::new(width, height, ch);
    for (y, ws) in wy.iter().enumerate() {
        for x in 0..width {
            for c in 0..ch {
                let v: f64 = ws.iter().map(|&(sy, w)| w * tmp[(sy * width + x) * ch + c]).sum();
                out.set(x, y, c, v as f32);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_within_quantization() {
        let img = Image::from_fn(7, 5, 3, |x, y, c| ((x * 31 + y * 17 + c * 7) % 101) as f32 / 100.0);
        let bytes = img.encode_png16().unwrap();
        let back = Image::decode_png(&bytes, Path::new("mem.png")).unwrap();
        assert!(back.same_shape(&img));
        let err = img.data.iter().zip(&back.data).map(|(a, b)| (a - b).abs()).fold(0.0, f32::max);
        assert!(err as f64 <= 1.0 / 65535.0, "{err}");
    }

    #[test]
    fn area_downscale_of_checkerboard_is_grey() {
        let img = Image::from_fn(16, 16, 1, |x, y, _| ((x + y) % 2) as f32);
        let out = resize_area(&img, 8, 8);
        assert!(out.data.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn area_resize_keeps_constants() {
        let img = Image::filled(30, 20, 3, 0.3);
        let out = resize_area(&img, 7, 9);
        assert!(out.data.iter().all(|&v| (v - 0.3).abs() < 1e-6));
    }

    #[test]
    fn luma_weights() {
        let img = Image::from_fn(1, 1, 3, |_, _, c| [1.0, 0.0, 0.0][c]);
        assert!((img.luma()[0] - 0.299).abs() < 1e-12);
    }
}
