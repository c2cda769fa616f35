//! Perceptual distortion: semantics-preserving degradations of a rendered
//! image, chosen by seeded categorical sampling.
//!
//! The five options `clean`, `rotate`, `blur`, `shadow_or_stain` and `wave`
//! are drawn with equal probability. Within `rotate`, a fair coin picks a
//! quarter-turn (90/180/270) or a small tilt in `[-5°, 5°]`.

mod blur;
mod geometry;
mod shading;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::render::RenderedCarrier;
use crate::rng::SplitMix64;

pub use blur::{
    blur, blur_plane, box_kernel, convolve_2d, convolve_separable, gaussian_kernel, motion_kernel,
    BlurKind, Plane, BOX_SIZES, GAUSSIAN_SIGMA, MOTION_LENGTH,
};
pub use geometry::{rotate, rotated_extent, wave, wave_growth};
pub use shading::{
    shadow_factor, shadow_or_stain, Edge, ShadowOrStain, Stain, SHADOW_STRENGTH, STAIN_ALPHA,
    STAIN_COLOR, STAIN_COUNT,
};

#[derive(Debug, Error, PartialEq)]
pub enum DistortionError {
    #[error("{param} = {value} is outside {range}")]
    OutOfRange {
        param: &'static str,
        value: f64,
        range: &'static str,
    },
}

impl DistortionError {
    pub(crate) fn out_of_range(param: &'static str, value: f64, range: &'static str) -> Self {
        DistortionError::OutOfRange { param, value, range }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Clean,
    Rotate,
    Blur,
    ShadowOrStain,
    Wave,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Clean,
        Family::Rotate,
        Family::Blur,
        Family::ShadowOrStain,
        Family::Wave,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Clean => "clean",
            Family::Rotate => "rotate",
            Family::Blur => "blur",
            Family::ShadowOrStain => "shadow_or_stain",
            Family::Wave => "wave",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum DistortionParams {
    Clean,
    Rotate { angle: f64 },
    Blur { blur: BlurKind },
    ShadowOrStain { effect: ShadowOrStain },
    Wave { amplitude: f64, wavelength: f64 },
}

/// The sampled operation, recorded alongside every distorted image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionChoice {
    pub family: Family,
    pub params: DistortionParams,
    pub seed: u64,
}

/// Sampling ranges. Every range must lie inside the operator's own limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistortionRanges {
    /// Probability of a quarter-turn rather than a small tilt.
    pub large_rotation_prob: f64,
    pub small_rotation_max_deg: f64,
    pub gaussian_sigma: (f64, f64),
    pub box_sizes: Vec<u32>,
    pub motion_length: (u32, u32),
    pub shadow_strength: (f64, f64),
    /// Probability of a shadow rather than stains.
    pub shadow_prob: f64,
    pub stain_count: (u32, u32),
    pub stain_alpha: (f64, f64),
    /// Stain radii as fractions of the image width/height.
    pub stain_radius: (f64, f64),
    pub wave_amplitude: (f64, f64),
    pub wave_wavelength: (f64, f64),
}

impl Default for DistortionRanges {
    fn default() -> Self {
        Self {
            large_rotation_prob: 0.5,
            small_rotation_max_deg: 5.0,
            gaussian_sigma: GAUSSIAN_SIGMA,
            box_sizes: BOX_SIZES.to_vec(),
            motion_length: MOTION_LENGTH,
            shadow_strength: SHADOW_STRENGTH,
            shadow_prob: 0.5,
            stain_count: STAIN_COUNT,
            stain_alpha: STAIN_ALPHA,
            stain_radius: (0.1, 0.3),
            wave_amplitude: (2.0, 6.0),
            wave_wavelength: (80.0, 200.0),
        }
    }
}

fn within(name: &str, (lo, hi): (f64, f64), (min, max): (f64, f64)) -> Result<(), String> {
    if lo.is_finite() && hi.is_finite() && min <= lo && lo <= hi && hi <= max {
        Ok(())
    } else {
        Err(format!("{name} range ({lo}, {hi}) must satisfy {min} <= lo <= hi <= {max}"))
    }
}

impl DistortionRanges {
    pub fn validate(&self) -> Result<(), String> {
        within("large_rotation_prob", (self.large_rotation_prob, self.large_rotation_prob), (0.0, 1.0))?;
        within("shadow_prob", (self.shadow_prob, self.shadow_prob), (0.0, 1.0))?;
        within("small_rotation_max_deg", (0.0, self.small_rotation_max_deg), (0.0, 45.0))?;
        within("gaussian_sigma", self.gaussian_sigma, GAUSSIAN_SIGMA)?;
        if self.box_sizes.is_empty() || self.box_sizes.iter().any(|s| !BOX_SIZES.contains(s)) {
            return Err(format!("box_sizes {:?} must be a non-empty subset of {{3, 5}}", self.box_sizes));
        }
        let (ml, mh) = self.motion_length;
        within(
            "motion_length",
            (f64::from(ml), f64::from(mh)),
            (f64::from(MOTION_LENGTH.0), f64::from(MOTION_LENGTH.1)),
        )?;
        within("shadow_strength", self.shadow_strength, SHADOW_STRENGTH)?;
        let (cl, ch) = self.stain_count;
        within(
            "stain_count",
            (f64::from(cl), f64::from(ch)),
            (f64::from(STAIN_COUNT.0), f64::from(STAIN_COUNT.1)),
        )?;
        within("stain_alpha", self.stain_alpha, STAIN_ALPHA)?;
        within("stain_radius", self.stain_radius, (0.0, 1.0))?;
        within("wave_amplitude", self.wave_amplitude, (2.0, 6.0))?;
        within("wave_wavelength", self.wave_wavelength, (80.0, 200.0))?;
        Ok(())
    }
}

/// Draws a family uniformly from the five options, then its parameters.
/// `width`/`height` size the stain ellipses.
pub fn sample_choice(seed: u64, width: u32, height: u32, ranges: &DistortionRanges) -> DistortionChoice {
    let mut rng = SplitMix64::new(seed);
    let family = Family::ALL[rng.below(5) as usize];
    let params = match family {
        Family::Clean => DistortionParams::Clean,
        Family::Rotate => {
            let angle = if rng.next_f64() < ranges.large_rotation_prob {
                [90.0, 180.0, 270.0][rng.below(3) as usize]
            } else {
                let m = ranges.small_rotation_max_deg;
                rng.uniform(-m, m)
            };
            DistortionParams::Rotate { angle }
        }
        Family::Blur => {
            let blur = match rng.below(3) {
                0 => BlurKind::Gaussian {
                    sigma: rng.uniform(ranges.gaussian_sigma.0, ranges.gaussian_sigma.1),
                },
                1 => BlurKind::Box {
                    size: ranges.box_sizes[rng.below(ranges.box_sizes.len() as u64) as usize],
                },
                _ => BlurKind::Motion {
                    length: rng.range_inclusive(ranges.motion_length.0, ranges.motion_length.1),
                    angle: rng.uniform(0.0, 180.0),
                },
            };
            DistortionParams::Blur { blur }
        }
        Family::ShadowOrStain => {
            let effect = if rng.next_f64() < ranges.shadow_prob {
                ShadowOrStain::Shadow {
                    edge: [Edge::Left, Edge::Right, Edge::Top, Edge::Bottom][rng.below(4) as usize],
                    strength: rng.uniform(ranges.shadow_strength.0, ranges.shadow_strength.1),
                }
            } else {
                let count = rng.range_inclusive(ranges.stain_count.0, ranges.stain_count.1);
                let (w, h) = (f64::from(width), f64::from(height));
                let stains = (0..count)
                    .map(|_| Stain {
                        cx: rng.uniform(0.0, w),
                        cy: rng.uniform(0.0, h),
                        rx: w * rng.uniform(ranges.stain_radius.0, ranges.stain_radius.1),
                        ry: h * rng.uniform(ranges.stain_radius.0, ranges.stain_radius.1),
                        rotation: rng.uniform(0.0, 180.0),
                        alpha: rng.uniform(ranges.stain_alpha.0, ranges.stain_alpha.1),
                    })
                    .collect();
                ShadowOrStain::Stain { stains }
            };
            DistortionParams::ShadowOrStain { effect }
        }
        Family::Wave => DistortionParams::Wave {
            amplitude: rng.uniform(ranges.wave_amplitude.0, ranges.wave_amplitude.1),
            wavelength: rng.uniform(ranges.wave_wavelength.0, ranges.wave_wavelength.1),
        },
    };
    DistortionChoice { family, params, seed }
}

/// Applies a previously sampled choice.
pub fn apply_choice(img: &RgbImage, choice: &DistortionChoice) -> Result<RgbImage, DistortionError> {
    Ok(match &choice.params {
        DistortionParams::Clean => img.clone(),
        DistortionParams::Rotate { angle } => rotate(img, *angle),
        DistortionParams::Blur { blur: kind } => blur(img, *kind)?,
        DistortionParams::ShadowOrStain { effect } => shadow_or_stain(img, effect),
        DistortionParams::Wave {
            amplitude,
            wavelength,
        } => wave(img, *amplitude, *wavelength),
    })
}

/// Samples and applies one distortion with the default ranges.
pub fn apply_distortion(carrier: RenderedCarrier, seed: u64) -> RenderedCarrier {
    apply_distortion_with(carrier, seed, &DistortionRanges::default())
        .expect("default ranges are valid")
}

/// Samples and applies one distortion. Output is a pure function of the image
/// and the seed.
pub fn apply_distortion_with(
    mut carrier: RenderedCarrier,
    seed: u64,
    ranges: &DistortionRanges,
) -> Result<RenderedCarrier, DistortionError> {
    let choice = sample_choice(seed, carrier.width(), carrier.height(), ranges);
    carrier.image = apply_choice(&carrier.image, &choice)?;
    carrier.distortion = Some(choice);
    Ok(carrier)
}
