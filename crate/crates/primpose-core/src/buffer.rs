//! Raster buffers shared by the renderer, loss kernels, and dataset code.
//!
//! `ImageBuffer` holds row-major RGB float intensities in [0,1] with pixel
//! centers at integer (u,v). PNG export quantizes as round(value*255); depth
//! exports as 16-bit millimeters with 0 marking uncovered pixels.

use std::io::Cursor;
use std::path::Path;

use image::codecs::png::PngEncoder;
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageReader};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

/// Three-channel float image, row-major, values in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    /// All-black image.
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, [0.0; 3])
    }

    /// Constant-color image.
    pub fn filled(width: usize, height: usize, color: [f64; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&color);
        }
        ImageBuffer { width, height, data }
    }

    /// Wraps raw row-major RGB data; length and [0,1] range are enforced.
    pub fn from_data(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::ShapeMismatch(format!(
                "image data length {} != {}x{}x3",
                data.len(),
                width,
                height
            )));
        }
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidInput("image values must lie in [0,1]".into()));
        }
        Ok(ImageBuffer { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn index(&self, u: usize, v: usize) -> usize {
        debug_assert!(u < self.width && v < self.height);
        (v * self.width + u) * 3
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> [f64; 3] {
        let i = self.index(u, v);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, rgb: [f64; 3]) {
        debug_assert!(rgb.iter().all(|c| (0.0..=1.0).contains(c)));
        let i = self.index(u, v);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Bilinear sample at real-valued (x,y) pixel coordinates, edge-clamped.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> [f64; 3] {
        let clamp = |t: f64, hi: usize| t.clamp(0.0, (hi - 1) as f64);
        let x = clamp(x, self.width);
        let y = clamp(y, self.height);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let p00 = self.get(x0, y0);
        let p10 = self.get(x1, y0);
        let p01 = self.get(x0, y1);
        let p11 = self.get(x1, y1);
        let mut out = [0.0; 3];
        for c in 0..3 {
            let top = p00[c] * (1.0 - fx) + p10[c] * fx;
            let bot = p01[c] * (1.0 - fx) + p11[c] * fx;
            out[c] = top * (1.0 - fy) + bot * fy;
        }
        out
    }

    /// Quantized 8-bit view, round(value*255).
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|v| (v * 255.0).round() as u8).collect()
    }

    /// Encodes as 8-bit RGB PNG.
    pub fn encode_png(&self) -> Vec<u8> {
        let mut out = Vec::new();
        PngEncoder::new(&mut out)
            .write_image(&self.to_u8(), self.width as u32, self.height as u32, ExtendedColorType::Rgb8)
            .expect("in-memory png encode cannot fail");
        out
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode_png()).map_err(|e| Error::io(path, e))
    }

    pub fn decode_png(bytes: &[u8], source: &Path) -> Result<Self> {
        let img = image::load_from_memory(bytes)
            .map_err(|e| Error::parse(source, format!("png decode: {e}")))?
            .to_rgb8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        let data = img.as_raw().iter().map(|&b| b as f64 / 255.0).collect();
        Ok(ImageBuffer { width: w, height: h, data })
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode_png(&bytes, path)
    }
}

/// Per-pixel boolean coverage raster.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskBuffer {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl MaskBuffer {
    pub fn new(width: usize, height: usize) -> Self {
        MaskBuffer { width, height, data: vec![false; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> bool {
        self.data[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, on: bool) {
        self.data[v * self.width + u] = on;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Centroid of covered pixel centers.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let mut n = 0usize;
        let (mut su, mut sv) = (0.0, 0.0);
        for v in 0..self.height {
            for u in 0..self.width {
                if self.get(u, v) {
                    su += u as f64;
                    sv += v as f64;
                    n += 1;
                }
            }
        }
        (n > 0).then(|| (su / n as f64, sv / n as f64))
    }

    /// Tight bound of covered pixels: [min_u, max_u+1) x [min_v, max_v+1),
    /// so the half-open box contains exactly the covered pixel centers.
    pub fn tight_bbox(&self) -> Option<BoundingBox> {
        let (mut u0, mut v0) = (usize::MAX, usize::MAX);
        let (mut u1, mut v1) = (0usize, 0usize);
        let mut any = false;
        for v in 0..self.height {
            for u in 0..self.width {
                if self.get(u, v) {
                    any = true;
                    u0 = u0.min(u);
                    v0 = v0.min(v);
                    u1 = u1.max(u);
                    v1 = v1.max(v);
                }
            }
        }
        any.then(|| {
            BoundingBox::new(u0 as f64, v0 as f64, (u1 + 1) as f64, (v1 + 1) as f64)
                .expect("tight bbox of nonempty mask is valid")
        })
    }

    /// Encodes as 8-bit gray PNG, 255 = covered.
    pub fn encode_png(&self) -> Vec<u8> {
        let bytes: Vec<u8> = self.data.iter().map(|&b| if b { 255 } else { 0 }).collect();
        let mut out = Vec::new();
        PngEncoder::new(&mut out)
            .write_image(&bytes, self.width as u32, self.height as u32, ExtendedColorType::L8)
            .expect("in-memory png encode cannot fail");
        out
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode_png()).map_err(|e| Error::io(path, e))
    }

    pub fn decode_png(bytes: &[u8], source: &Path) -> Result<Self> {
        let img = image::load_from_memory(bytes)
            .map_err(|e| Error::parse(source, format!("png decode: {e}")))?
            .to_luma8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        let data = img.as_raw().iter().map(|&b| b >= 128).collect();
        Ok(MaskBuffer { width: w, height: h, data })
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode_png(&bytes, path)
    }
}

/// Per-pixel camera-space depth in meters; +inf where uncovered.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthBuffer {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl DepthBuffer {
    pub fn new(width: usize, height: usize) -> Self {
        DepthBuffer { width, height, data: vec![f64::INFINITY; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, z: f64) {
        self.data[v * self.width + u] = z;
    }

    /// Encodes as 16-bit gray PNG in millimeters; uncovered pixels become 0.
    pub fn encode_png_mm(&self) -> Vec<u8> {
        let px: Vec<u16> = self
            .data
            .iter()
            .map(|&z| if z.is_finite() { (z * 1000.0).round().clamp(0.0, 65535.0) as u16 } else { 0 })
            .collect();
        let img = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(
            self.width as u32,
            self.height as u32,
            px,
        )
        .expect("dimensions match buffer");
        let mut out = Cursor::new(Vec::new());
        DynamicImage::ImageLuma16(img)
            .write_to(&mut out, image::ImageFormat::Png)
            .expect("in-memory png encode cannot fail");
        out.into_inner()
    }

    pub fn save_png_mm(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode_png_mm()).map_err(|e| Error::io(path, e))
    }

    pub fn load_png_mm(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let img = ImageReader::new(Cursor::new(&bytes))
            .with_guessed_format()
            .map_err(|e| Error::io(path, e))?
            .decode()
            .map_err(|e| Error::parse(path, format!("png decode: {e}")))?
            .to_luma16();
        let (w, h) = (img.width() as usize, img.height() as usize);
        let data = img
            .as_raw()
            .iter()
            .map(|&mm| if mm == 0 { f64::INFINITY } else { mm as f64 / 1000.0 })
            .collect();
        Ok(DepthBuffer { width: w, height: h, data })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_data_rejects_bad_shape_and_range() {
        assert!(matches!(
            ImageBuffer::from_data(2, 2, vec![0.0; 11]),
            Err(Error::ShapeMismatch(_))
        ));
        let mut ok = vec![0.5; 12];
        ok[3] = 1.5;
        assert!(matches!(ImageBuffer::from_data(2, 2, ok), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn png_roundtrip_is_lossless_on_quantized_values() {
        let mut img = ImageBuffer::new(5, 3);
        for v in 0..3 {
            for u in 0..5 {
                let q = |x: usize| (x as f64 * 17.0 % 256.0).round() / 255.0;
                img.set(u, v, [q(u + v).min(1.0), q(u * 2), q(v * 3)]);
            }
        }
        // Quantize to the representable grid first, then expect exact recovery.
        let quantized: Vec<f64> = img.data().iter().map(|&x| (x * 255.0).round() / 255.0).collect();
        let img = ImageBuffer::from_data(5, 3, quantized).unwrap();
        let back = ImageBuffer::decode_png(&img.encode_png(), Path::new("mem")).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn bilinear_at_integer_coordinates_is_exact() {
        let mut img = ImageBuffer::new(4, 4);
        img.set(2, 1, [0.25, 0.5, 0.75]);
        assert_eq!(img.sample_bilinear(2.0, 1.0), [0.25, 0.5, 0.75]);
        // Halfway between two pixels averages them.
        let s = img.sample_bilinear(1.5, 1.0);
        assert!((s[0] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn mask_tight_bbox_covers_exactly_the_set_pixels() {
        let mut m = MaskBuffer::new(8, 6);
        m.set(2, 1, true);
        m.set(5, 4, true);
        let b = m.tight_bbox().unwrap();
        assert_eq!((b.u_min, b.v_min, b.u_max, b.v_max), (2.0, 1.0, 6.0, 5.0));
        assert!(b.contains(2.0, 1.0) && b.contains(5.0, 4.0));
        assert!(!b.contains(6.0, 4.0));
        assert!(MaskBuffer::new(3, 3).tight_bbox().is_none());
    }

    #[test]
    fn depth_png_roundtrips_at_millimeter_resolution() {
        let mut d = DepthBuffer::new(3, 2);
        d.set(0, 0, 1.234);
        d.set(2, 1, 0.5);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.png");
        d.save_png_mm(&p).unwrap();
        let back = DepthBuffer::load_png_mm(&p).unwrap();
        assert_eq!(back.get(0, 0), 1.234);
        assert_eq!(back.get(2, 1), 0.5);
        assert!(back.get(1, 0).is_infinite());
    }
}
