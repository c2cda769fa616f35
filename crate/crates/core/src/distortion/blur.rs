//! Gaussian, box and motion blur with clamped (replicated) edges.
//!
//! Convolution runs on `f64` planes; the `u8` entry point rounds once at the end.

use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::DistortionError;

pub const GAUSSIAN_SIGMA: (f64, f64) = (0.5, 2.0);
pub const BOX_SIZES: [u32; 2] = [3, 5];
pub const MOTION_LENGTH: (u32, u32) = (5, 15);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlurKind {
    Gaussian { sigma: f64 },
    Box { size: u32 },
    /// `angle` in degrees, counter-clockwise from the +x axis.
    Motion { length: u32, angle: f64 },
}

impl BlurKind {
    pub fn validate(&self) -> Result<(), DistortionError> {
        match *self {
            BlurKind::Gaussian { sigma } => {
                if !(GAUSSIAN_SIGMA.0..=GAUSSIAN_SIGMA.1).contains(&sigma) {
                    return Err(DistortionError::out_of_range("gaussian sigma", sigma, "[0.5, 2.0]"));
                }
            }
            BlurKind::Box { size } => {
                if !BOX_SIZES.contains(&size) {
                    return Err(DistortionError::out_of_range("box size", f64::from(size), "{3, 5}"));
                }
            }
            BlurKind::Motion { length, angle } => {
                if !(MOTION_LENGTH.0..=MOTION_LENGTH.1).contains(&length) {
                    return Err(DistortionError::out_of_range(
                        "motion length",
                        f64::from(length),
                        "[5, 15]",
                    ));
                }
                if !(0.0..180.0).contains(&angle) {
                    return Err(DistortionError::out_of_range("motion angle", angle, "[0, 180)"));
                }
            }
        }
        Ok(())
    }
}

/// One image channel as `f64` samples, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, fill: f64) -> Self {
        Self {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    fn clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }
}

/// Normalized 1-D Gaussian taps over radius `ceil(3σ)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

pub fn box_kernel(size: u32) -> Vec<f64> {
    vec![1.0 / f64::from(size); size as usize]
}

/// Square 2-D kernel (side `2r+1`) tracing a line of `length` pixels through
/// the centre, splatted bilinearly and normalized.
pub fn motion_kernel(length: u32, angle_deg: f64) -> (Vec<f64>, usize) {
    let half = (f64::from(length) - 1.0) / 2.0;
    let r = half.ceil() as usize + 1;
    let side = 2 * r + 1;
    let mut k = vec![0.0; side * side];
    let (s, c) = angle_deg.to_radians().sin_cos();
    for i in 0..length {
        let t = f64::from(i) - half;
        let x = r as f64 + t * c;
        let y = r as f64 - t * s;
        let (x0, y0) = (x.floor(), y.floor());
        let (fx, fy) = (x - x0, y - y0);
        for (dx, dy, w) in [
            (0, 0, (1.0 - fx) * (1.0 - fy)),
            (1, 0, fx * (1.0 - fy)),
            (0, 1, (1.0 - fx) * fy),
            (1, 1, fx * fy),
        ] {
            let xi = x0 as usize + dx;
            let yi = y0 as usize + dy;
            if xi < side && yi < side {
                k[yi * side + xi] += w;
            }
        }
    }
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    (k, r)
}

/// Separable convolution: `kx` along rows, then `ky` along columns.
pub fn convolve_separable(plane: &Plane, kx: &[f64], ky: &[f64]) -> Plane {
    let (w, h) = (plane.width, plane.height);
    let rx = (kx.len() / 2) as isize;
    let ry = (ky.len() / 2) as isize;
    let mut tmp = Plane::new(w, h, 0.0);
    for y in 0..h {
        for x in 0..w {
            let acc: f64 = kx
                .iter()
                .enumerate()
                .map(|(i, k)| k * plane.clamped(x as isize + i as isize - rx, y as isize))
                .sum();
            tmp.set(x, y, acc);
        }
    }
    let mut out = Plane::new(w, h, 0.0);
    for y in 0..h {
        for x in 0..w {
            let acc: f64 = ky
                .iter()
                .enumerate()
                .map(|(i, k)| k * tmp.clamped(x as isize, y as isize + i as isize - ry))
                .sum();
            out.set(x, y, acc);
        }
    }
    out
}

/// Direct 2-D convolution with a square kernel of radius `r`.
pub fn convolve_2d(plane: &Plane, kernel: &[f64], r: usize) -> Plane {
    let side = 2 * r + 1;
    let mut out = Plane::new(plane.width, plane.height, 0.0);
    for y in 0..plane.height {
        for x in 0..plane.width {
            let mut acc = 0.0;
            for ky in 0..side {
                for kx in 0..side {
                    let k = kernel[ky * side + kx];
                    if k != 0.0 {
                        acc += k * plane.clamped(
                            x as isize + kx as isize - r as isize,
                            y as isize + ky as isize - r as isize,
                        );
                    }
                }
            }
            out.set(x, y, acc);
        }
    }
    out
}

pub fn blur_plane(plane: &Plane, kind: BlurKind) -> Plane {
    match kind {
        BlurKind::Gaussian { sigma } => {
            let k = gaussian_kernel(sigma);
            convolve_separable(plane, &k, &k)
        }
        BlurKind::Box { size } => {
            let k = box_kernel(size);
            convolve_separable(plane, &k, &k)
        }
        BlurKind::Motion { length, angle } => {
            let (k, r) = motion_kernel(length, angle);
            convolve_2d(plane, &k, r)
        }
    }
}

pub(crate) fn split_channels(img: &RgbImage) -> [Plane; 3] {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut planes = [Plane::new(w, h, 0.0), Plane::new(w, h, 0.0), Plane::new(w, h, 0.0)];
    for (i, p) in img.pixels().enumerate() {
        for c in 0..3 {
            planes[c].data[i] = f64::from(p.0[c]);
        }
    }
    planes
}

pub(crate) fn merge_channels(planes: &[Plane; 3]) -> RgbImage {
    let (w, h) = (planes[0].width as u32, planes[0].height as u32);
    let mut img = RgbImage::new(w, h);
    for (i, p) in img.pixels_mut().enumerate() {
        for c in 0..3 {
            p.0[c] = planes[c].data[i].round().clamp(0.0, 255.0) as u8;
        }
    }
    img
}

/// Blurs an RGB image; dimensions are preserved.
pub fn blur(img: &RgbImage, kind: BlurKind) -> Result<RgbImage, DistortionError> {
    kind.validate()?;
    let planes = split_channels(img);
    let blurred = [
        blur_plane(&planes[0], kind),
        blur_plane(&planes[1], kind),
        blur_plane(&planes[2], kind),
    ];
    Ok(merge_channels(&blurred))
}
