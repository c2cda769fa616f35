use image::{Rgb, RgbImage};

const WHITE: [f64; 3] = [255.0, 255.0, 255.0];

/// Canvas size of a `width × height` image rotated by `angle_deg`.
pub fn rotated_extent(width: u32, height: u32, angle_deg: f64) -> (u32, u32) {
    let (s, c) = angle_deg.to_radians().sin_cos();
    let (w, h) = (f64::from(width), f64::from(height));
    let nw = (w * c.abs() + h * s.abs() - 1e-6).ceil().max(1.0);
    let nh = (w * s.abs() + h * c.abs() - 1e-6).ceil().max(1.0);
    (nw as u32, nh as u32)
}

fn sample_bilinear(img: &RgbImage, x: f64, y: f64) -> [f64; 3] {
    let (w, h) = (i64::from(img.width()), i64::from(img.height()));
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as i64, y0 as i64);
    let fetch = |xi: i64, yi: i64| -> [f64; 3] {
        if xi < 0 || yi < 0 || xi >= w || yi >= h {
            WHITE
        } else {
            let p = img.get_pixel(xi as u32, yi as u32).0;
            [f64::from(p[0]), f64::from(p[1]), f64::from(p[2])]
        }
    };
    let (a, b, c, d) = (fetch(x0, y0), fetch(x0 + 1, y0), fetch(x0, y0 + 1), fetch(x0 + 1, y0 + 1));
    std::array::from_fn(|i| {
        a[i] * (1.0 - fx) * (1.0 - fy) + b[i] * fx * (1.0 - fy) + c[i] * (1.0 - fx) * fy + d[i] * fx * fy
    })
}

fn to_pixel(v: [f64; 3]) -> Rgb<u8> {
    Rgb(v.map(|c| c.round().clamp(0.0, 255.0) as u8))
}

/// Rotates counter-clockwise by `angle_deg` about the centre. The canvas grows
/// to the rotated bounding box and uncovered area is white. Multiples of 90°
/// are exact pixel permutations.
pub fn rotate(img: &RgbImage, angle_deg: f64) -> RgbImage {
    let (w, h) = img.dimensions();
    let norm = angle_deg.rem_euclid(360.0);
    if norm.rem_euclid(90.0) == 0.0 {
        return match norm as u32 {
            90 => RgbImage::from_fn(h, w, |x, y| *img.get_pixel(w - 1 - y, x)),
            180 => RgbImage::from_fn(w, h, |x, y| *img.get_pixel(w - 1 - x, h - 1 - y)),
            270 => RgbImage::from_fn(h, w, |x, y| *img.get_pixel(y, h - 1 - x)),
            _ => img.clone(),
        };
    }
    let (nw, nh) = rotated_extent(w, h, norm);
    let (s, c) = norm.to_radians().sin_cos();
    let (cx, cy) = ((f64::from(w) - 1.0) / 2.0, (f64::from(h) - 1.0) / 2.0);
    let (ncx, ncy) = ((f64::from(nw) - 1.0) / 2.0, (f64::from(nh) - 1.0) / 2.0);
    RgbImage::from_fn(nw, nh, |x, y| {
        let dx = f64::from(x) - ncx;
        let dy = f64::from(y) - ncy;
        to_pixel(sample_bilinear(img, cx + dx * c - dy * s, cy + dx * s + dy * c))
    })
}

/// Extra canvas rows added by a wave of amplitude `amplitude`.
pub fn wave_growth(amplitude: f64) -> u32 {
    (2.0 * amplitude).ceil() as u32
}

/// Vertical sine displacement `y' = y + A + A·sin(2πx/λ)` with linear
/// resampling along y. The canvas grows by `ceil(2A)` rows; uncovered area is
/// white.
pub fn wave(img: &RgbImage, amplitude: f64, wavelength: f64) -> RgbImage {
    let (w, h) = img.dimensions();
    let nh = h + wave_growth(amplitude);
    let two_pi = 2.0 * std::f64::consts::PI;
    RgbImage::from_fn(w, nh, |x, y| {
        let shift = amplitude + amplitude * (two_pi * f64::from(x) / wavelength).sin();
        to_pixel(sample_bilinear(img, f64::from(x), f64::from(y) - shift))
    })
}
