//! Edge shadows and surface stains. Both only ever darken pixels.

use image::RgbImage;
use serde::{Deserialize, Serialize};

pub const SHADOW_STRENGTH: (f64, f64) = (0.2, 0.5);
pub const STAIN_ALPHA: (f64, f64) = (0.1, 0.3);
pub const STAIN_COUNT: (u32, u32) = (1, 3);
/// Brownish stain colour.
pub const STAIN_COLOR: [f64; 3] = [110.0, 80.0, 40.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    Left,
    Right,
    Top,
    Bottom,
}

/// Elliptical stain in pixel coordinates; `rotation` in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stain {
    pub cx: f64,
    pub cy: f64,
    pub rx: f64,
    pub ry: f64,
    pub rotation: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "effect", rename_all = "snake_case")]
pub enum ShadowOrStain {
    Shadow { edge: Edge, strength: f64 },
    Stain { stains: Vec<Stain> },
}

/// Multiplicative factor of a shadow cast from `edge`: `1 - strength` on the
/// edge itself rising linearly to 1 on the opposite edge.
pub fn shadow_factor(edge: Edge, strength: f64, x: u32, y: u32, width: u32, height: u32) -> f64 {
    let strength = strength.clamp(SHADOW_STRENGTH.0, SHADOW_STRENGTH.1);
    let frac = |pos: u32, extent: u32| {
        if extent <= 1 {
            0.0
        } else {
            f64::from(pos) / f64::from(extent - 1)
        }
    };
    // Distance from the shadowed edge, 0 at the edge and 1 at the far side.
    let t = match edge {
        Edge::Left => frac(x, width),
        Edge::Right => 1.0 - frac(x, width),
        Edge::Top => frac(y, height),
        Edge::Bottom => 1.0 - frac(y, height),
    };
    1.0 - strength * (1.0 - t)
}

pub fn shadow_or_stain(img: &RgbImage, effect: &ShadowOrStain) -> RgbImage {
    let (w, h) = img.dimensions();
    let mut out = img.clone();
    match effect {
        ShadowOrStain::Shadow { edge, strength } => {
            for (x, y, p) in out.enumerate_pixels_mut() {
                let f = shadow_factor(*edge, *strength, x, y, w, h);
                for c in p.0.iter_mut() {
                    *c = (f64::from(*c) * f).round().min(f64::from(*c)) as u8;
                }
            }
        }
        ShadowOrStain::Stain { stains } => {
            for stain in stains {
                let alpha = stain.alpha.clamp(STAIN_ALPHA.0, STAIN_ALPHA.1);
                let (s, c) = stain.rotation.to_radians().sin_cos();
                let reach = stain.rx.max(stain.ry);
                let x_lo = (stain.cx - reach).floor().max(0.0) as u32;
                let y_lo = (stain.cy - reach).floor().max(0.0) as u32;
                let x_hi = ((stain.cx + reach).ceil().max(0.0) as u32).min(w);
                let y_hi = ((stain.cy + reach).ceil().max(0.0) as u32).min(h);
                for y in y_lo..y_hi {
                    for x in x_lo..x_hi {
                        let dx = f64::from(x) - stain.cx;
                        let dy = f64::from(y) - stain.cy;
                        let u = (dx * c + dy * s) / stain.rx.max(1e-9);
                        let v = (-dx * s + dy * c) / stain.ry.max(1e-9);
                        let d2 = u * u + v * v;
                        if d2 >= 1.0 {
                            continue;
                        }
                        let a = alpha * (1.0 - d2);
                        let p = out.get_pixel_mut(x, y);
                        for (ch, tint) in p.0.iter_mut().zip(STAIN_COLOR) {
                            let v = f64::from(*ch);
                            let blended = ((1.0 - a) * v + a * tint).round();
                            *ch = blended.min(v) as u8;
                        }
                    }
                }
            }
        }
    }
    out
}
