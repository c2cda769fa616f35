use image::imageops::{self, FilterType};
use image::RgbImage;

use super::{RenderConfig, RenderedCarrier};

/// Pixels at or above this luminance (0-255) count as empty background.
pub const BACKGROUND_LUMINANCE: f32 = 250.0;

/// Rec. 601 luma.
#[inline]
pub fn luminance(p: &image::Rgb<u8>) -> f32 {
    0.299 * f32::from(p.0[0]) + 0.587 * f32::from(p.0[1]) + 0.114 * f32::from(p.0[2])
}

#[inline]
pub fn is_content(p: &image::Rgb<u8>) -> bool {
    luminance(p) < BACKGROUND_LUMINANCE
}

/// Inclusive bounding box `(x0, y0, x1, y1)` of content pixels.
pub fn content_bbox(img: &RgbImage) -> Option<(u32, u32, u32, u32)> {
    let mut bbox: Option<(u32, u32, u32, u32)> = None;
    for (x, y, p) in img.enumerate_pixels() {
        if is_content(p) {
            bbox = Some(match bbox {
                None => (x, y, x, y),
                Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
            });
        }
    }
    bbox
}

/// Size that fits `width × height` into `cap` pixels, preserving aspect ratio
/// up to integer rounding. Returns the input size when it already fits.
pub fn capped_size(width: u32, height: u32, cap: u64) -> (u32, u32) {
    let area = u64::from(width) * u64::from(height);
    if area <= cap {
        return (width, height);
    }
    let s = (cap as f64 / area as f64).sqrt();
    let mut w = ((f64::from(width) * s).floor() as u64).max(1);
    let mut h = ((f64::from(height) * s).floor() as u64).max(1);
    if w * h > cap {
        // Only reachable for extreme aspect ratios where one side hit the floor of 1.
        if w == 1 {
            h = cap;
        } else {
            w = cap;
        }
    }
    (w as u32, h as u32)
}

/// Downscales `img` so its area is at most `cap`.
pub fn enforce_pixel_cap(img: RgbImage, cap: u64) -> RgbImage {
    let (w, h) = capped_size(img.width(), img.height(), cap);
    if (w, h) == img.dimensions() {
        img
    } else {
        imageops::resize(&img, w, h, FilterType::Triangle)
    }
}

/// Crops to the content bounding box grown by `trim_padding` (clamped to the
/// image), then enforces the pixel cap. Blank images keep their size and are
/// flagged.
pub fn trim_margins(mut carrier: RenderedCarrier, config: &RenderConfig) -> RenderedCarrier {
    match content_bbox(&carrier.image) {
        None => carrier.blank = true,
        Some((x0, y0, x1, y1)) => {
            let pad = config.trim_padding;
            let (w, h) = carrier.image.dimensions();
            let left = x0.saturating_sub(pad);
            let top = y0.saturating_sub(pad);
            let right = (x1 + pad).min(w - 1);
            let bottom = (y1 + pad).min(h - 1);
            if (left, top, right, bottom) != (0, 0, w - 1, h - 1) {
                carrier.image = imageops::crop_imm(
                    &carrier.image,
                    left,
                    top,
                    right - left + 1,
                    bottom - top + 1,
                )
                .to_image();
            }
        }
    }
    carrier.image = enforce_pixel_cap(std::mem::take(&mut carrier.image), config.pixel_cap);
    carrier
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::Route;
    use image::Rgb;

    fn carrier(img: RgbImage) -> RenderedCarrier {
        RenderedCarrier::new(img, Route::Text, "x")
    }

    fn square_on_white(size: u32, square: u32) -> RgbImage {
        let off = (size - square) / 2;
        RgbImage::from_fn(size, size, |x, y| {
            if (off..off + square).contains(&x) && (off..off + square).contains(&y) {
                Rgb([0, 0, 0])
            } else {
                Rgb([255, 255, 255])
            }
        })
    }

    #[test]
    fn centered_square_crops_to_padded_box() {
        let out = trim_margins(carrier(square_on_white(200, 50)), &RenderConfig::default());
        assert_eq!(out.image.dimensions(), (70, 70));
        assert!(!out.blank);
        let ink = out.image.pixels().filter(|p| is_content(p)).count();
        assert_eq!(ink, 2500);
    }

    #[test]
    fn padding_is_clamped_at_edges() {
        let mut img = RgbImage::from_pixel(30, 30, Rgb([255, 255, 255]));
        img.put_pixel(2, 3, Rgb([0, 0, 0]));
        let out = trim_margins(carrier(img), &RenderConfig::default());
        assert_eq!(out.image.dimensions(), (13, 14));
    }

    #[test]
    fn blank_image_is_flagged_and_unchanged() {
        let img = RgbImage::from_pixel(40, 20, Rgb([255, 255, 255]));
        let out = trim_margins(carrier(img.clone()), &RenderConfig::default());
        assert!(out.blank);
        assert_eq!(out.image, img);
    }

    #[test]
    fn near_white_is_background() {
        let mut img = RgbImage::from_pixel(30, 30, Rgb([255, 255, 255]));
        img.put_pixel(5, 5, Rgb([252, 252, 252]));
        assert!(content_bbox(&img).is_none());
    }

    #[test]
    fn cap_arithmetic() {
        assert_eq!(capped_size(4000, 1000, 2_560_000), (3200, 800));
        assert_eq!(capped_size(800, 600, 2_560_000), (800, 600));
        let (w, h) = capped_size(1, 10_000_000, 2_560_000);
        assert!(u64::from(w) * u64::from(h) <= 2_560_000);
    }

    #[test]
    fn oversized_render_is_downscaled() {
        let mut img = RgbImage::from_pixel(4000, 1000, Rgb([255, 255, 255]));
        for x in 0..4000 {
            img.put_pixel(x, 0, Rgb([0, 0, 0]));
            img.put_pixel(x, 999, Rgb([0, 0, 0]));
        }
        let cfg = RenderConfig {
            trim_padding: 0,
            ..RenderConfig::default()
        };
        let out = trim_margins(carrier(img), &cfg);
        let (w, h) = out.image.dimensions();
        assert!(u64::from(w) * u64::from(h) <= 2_560_000);
        assert!((f64::from(w) - 4.0 * f64::from(h)).abs() <= 4.0);
    }
}
