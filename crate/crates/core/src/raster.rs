//! Minimal in-memory rasters and the pixel operations rendering needs.

use alloc::vec;
use alloc::vec::Vec;

use crate::layout::IntRect;
use crate::num;

/// 8-bit RGBA, row-major, no padding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbaImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl RgbaImage {
    pub fn new(width: u32, height: u32, fill: [u8; 4]) -> Self {
        let mut data = vec![0u8; width as usize * height as usize * 4];
        for px in data.chunks_exact_mut(4) {
            px.copy_from_slice(&fill);
        }
        RgbaImage {
            width,
            height,
            data,
        }
    }

    /// Wraps raw RGBA bytes; `None` if the length does not match.
    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Option<Self> {
        (data.len() == width as usize * height as usize * 4).then_some(RgbaImage {
            width,
            height,
            data,
        })
    }

    #[inline]
    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 4
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 4] {
        let o = self.offset(x, y);
        [
            self.data[o],
            self.data[o + 1],
            self.data[o + 2],
            self.data[o + 3],
        ]
    }

    pub fn put(&mut self, x: u32, y: u32, px: [u8; 4]) {
        let o = self.offset(x, y);
        self.data[o..o + 4].copy_from_slice(&px);
    }

    /// Source-over compositing of a straight-alpha color.
    pub fn blend(&mut self, x: u32, y: u32, src: [u8; 4]) {
        let a = src[3] as u32;
        if a == 255 {
            self.put(x, y, src);
            return;
        }
        if a == 0 {
            return;
        }
        let dst = self.get(x, y);
        let inv = 255 - a;
        let mix = |s: u8, d: u8| ((s as u32 * a + d as u32 * inv + 127) / 255) as u8;
        let out_a = a + (dst[3] as u32 * inv + 127) / 255;
        self.put(
            x,
            y,
            [
                mix(src[0], dst[0]),
                mix(src[1], dst[1]),
                mix(src[2], dst[2]),
                out_a.min(255) as u8,
            ],
        );
    }

    pub fn fill_rect(&mut self, rect: IntRect, color: [u8; 4]) {
        let r = rect.clip(self.width, self.height);
        for y in r.top..r.bottom {
            for x in r.left..r.right {
                self.blend(x as u32, y as u32, color);
            }
        }
    }

    /// Draws a `thickness`-pixel frame just inside `rect`.
    pub fn stroke_rect(&mut self, rect: IntRect, thickness: i64, color: [u8; 4]) {
        if thickness <= 0 || rect.is_empty() {
            return;
        }
        let t = thickness.min(rect.width()).min(rect.height());
        let edges = [
            IntRect {
                bottom: rect.top + t,
                ..rect
            },
            IntRect {
                top: rect.bottom - t,
                ..rect
            },
            IntRect {
                top: rect.top + t,
                bottom: rect.bottom - t,
                right: rect.left + t,
                ..rect
            },
            IntRect {
                top: rect.top + t,
                bottom: rect.bottom - t,
                left: rect.right - t,
                ..rect
            },
        ];
        for e in edges {
            self.fill_rect(e, color);
        }
    }

    /// Copies the pixels inside `rect` (clipped to the image).
    pub fn crop(&self, rect: IntRect) -> RgbaImage {
        let r = rect.clip(self.width, self.height);
        let (w, h) = (r.width() as u32, r.height() as u32);
        let mut out = RgbaImage::new(w, h, [0; 4]);
        for y in 0..h {
            let src = self.offset(r.left as u32, r.top as u32 + y);
            let dst = out.offset(0, y);
            out.data[dst..dst + w as usize * 4]
                .copy_from_slice(&self.data[src..src + w as usize * 4]);
        }
        out
    }

    /// Bilinear resampling with pixel-center alignment. Same-size resizes copy exactly.
    pub fn resize_bilinear(&self, width: u32, height: u32) -> RgbaImage {
        if width == self.width && height == self.height {
            return self.clone();
        }
        let mut out = RgbaImage::new(width, height, [0; 4]);
        if self.width == 0 || self.height == 0 {
            return out;
        }
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        for y in 0..height {
            let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
            let y0 = num::floor(fy) as u32;
            let y1 = (y0 + 1).min(self.height - 1);
            let ty = fy - y0 as f64;
            for x in 0..width {
                let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
                let x0 = num::floor(fx) as u32;
                let x1 = (x0 + 1).min(self.width - 1);
                let tx = fx - x0 as f64;
                let (p00, p10, p01, p11) = (
                    self.get(x0, y0),
                    self.get(x1, y0),
                    self.get(x0, y1),
                    self.get(x1, y1),
                );
                let mut px = [0u8; 4];
                for c in 0..4 {
                    let top = p00[c] as f64 * (1.0 - tx) + p10[c] as f64 * tx;
                    let bot = p01[c] as f64 * (1.0 - tx) + p11[c] as f64 * tx;
                    px[c] = num::round(top * (1.0 - ty) + bot * ty).clamp(0.0, 255.0) as u8;
                }
                out.put(x, y, px);
            }
        }
        out
    }

    /// Composites `src` with its top-left corner at `(x, y)`.
    pub fn draw_image(&mut self, src: &RgbaImage, x: i64, y: i64) {
        for sy in 0..src.height {
            let ty = y + sy as i64;
            if ty < 0 || ty >= self.height as i64 {
                continue;
            }
            for sx in 0..src.width {
                let tx = x + sx as i64;
                if tx < 0 || tx >= self.width as i64 {
                    continue;
                }
                self.blend(tx as u32, ty as u32, src.get(sx, sy));
            }
        }
    }

    /// Like [`draw_image`](Self::draw_image) but replaces pixels instead of blending.
    pub fn paste(&mut self, src: &RgbaImage, x: i64, y: i64) {
        for sy in 0..src.height {
            let ty = y + sy as i64;
            if ty < 0 || ty >= self.height as i64 {
                continue;
            }
            for sx in 0..src.width {
                let tx = x + sx as i64;
                if tx < 0 || tx >= self.width as i64 {
                    continue;
                }
                self.put(tx as u32, ty as u32, src.get(sx, sy));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn opaque_blend_replaces_and_transparent_keeps() {
        let mut img = RgbaImage::new(2, 1, [255, 255, 255, 255]);
        img.blend(0, 0, [255, 0, 0, 255]);
        img.blend(1, 0, [255, 0, 0, 0]);
        assert_eq!(img.get(0, 0), [255, 0, 0, 255]);
        assert_eq!(img.get(1, 0), [255, 255, 255, 255]);
        img.blend(1, 0, [0, 0, 0, 128]);
        assert_eq!(img.get(1, 0), [127, 127, 127, 255]);
    }

    #[test]
    fn resize_identity_and_constant() {
        let mut img = RgbaImage::new(3, 2, [10, 20, 30, 255]);
        img.put(1, 1, [200, 0, 0, 255]);
        assert_eq!(img.resize_bilinear(3, 2), img);
        let flat = RgbaImage::new(4, 4, [9, 8, 7, 255]).resize_bilinear(7, 3);
        assert!(flat.data.chunks(4).all(|p| p == [9, 8, 7, 255]));
    }

    #[test]
    fn crop_and_paste_round_trip() {
        let mut img = RgbaImage::new(5, 5, [0, 0, 0, 255]);
        img.put(2, 3, [1, 2, 3, 255]);
        let rect = IntRect {
            left: 1,
            top: 2,
            right: 4,
            bottom: 5,
        };
        let patch = img.crop(rect);
        assert_eq!((patch.width, patch.height), (3, 3));
        assert_eq!(patch.get(1, 1), [1, 2, 3, 255]);
        let mut copy = RgbaImage::new(5, 5, [0, 0, 0, 255]);
        copy.paste(&patch, 1, 2);
        assert_eq!(copy, img);
    }

    #[test]
    fn stroke_stays_inside() {
        let mut img = RgbaImage::new(10, 10, [0, 0, 0, 255]);
        let r = IntRect {
            left: 2,
            top: 2,
            right: 8,
            bottom: 8,
        };
        img.stroke_rect(r, 1, [255, 255, 255, 255]);
        let lit = img.data.chunks(4).filter(|p| p[0] == 255).count();
        assert_eq!(lit, 6 * 4 - 4);
        assert_eq!(img.get(4, 4), [0, 0, 0, 255]);
    }
}
