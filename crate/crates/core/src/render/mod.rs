//! Visual rendering: content-aware routing between the native text rasterizer
//! and an external LaTeX command, with fallback and margin trimming.

mod latex;
mod text;
mod trim;

use std::time::Duration;

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::distortion::DistortionChoice;
use crate::localizer::scan_math;

pub use latex::{
    expand_template, latex_document, render_latex, render_latex_gated, LatexError, ProcessGate,
    LATEX_CMD_ENV,
};
pub use text::{rasterize, render_text};
pub use trim::{
    capped_size, content_bbox, enforce_pixel_cap, is_content, luminance, trim_margins,
    BACKGROUND_LUMINANCE,
};

pub const BACKGROUND: Rgb<u8> = Rgb([255, 255, 255]);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    /// Body text size in pixels per em.
    pub font_size: f32,
    pub line_height: f32,
    /// Math size handed to the LaTeX route.
    pub math_font_size: f32,
    /// Width of the text area, excluding padding.
    pub max_line_width: u32,
    pub pixel_cap: u64,
    pub trim_padding: u32,
    pub latex_command_template: Option<String>,
    pub latex_timeout_secs: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            font_size: 20.0,
            line_height: 22.0,
            math_font_size: 26.0,
            max_line_width: 800,
            pixel_cap: 2_560_000,
            trim_padding: 10,
            latex_command_template: None,
            latex_timeout_secs: 10.0,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.font_size > 0.0) {
            return Err(format!("font_size must be positive, got {}", self.font_size));
        }
        if !(self.line_height >= self.font_size) {
            return Err(format!(
                "line_height ({}) must be at least font_size ({})",
                self.line_height, self.font_size
            ));
        }
        if !(self.math_font_size > 0.0) {
            return Err("math_font_size must be positive".into());
        }
        if self.pixel_cap == 0 {
            return Err("pixel_cap must be positive".into());
        }
        if self.max_line_width == 0 {
            return Err("max_line_width must be positive".into());
        }
        if !(self.latex_timeout_secs > 0.0) {
            return Err("latex_timeout_secs must be positive".into());
        }
        Ok(())
    }

    pub fn latex_timeout(&self) -> Duration {
        Duration::from_secs_f64(self.latex_timeout_secs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Text,
    Latex,
    LatexFallbackText,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::Text => "text",
            Route::Latex => "latex",
            Route::LatexFallbackText => "latex_fallback_text",
        }
    }
}

/// A rendered (and possibly distorted) image with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedCarrier {
    pub image: RgbImage,
    pub route: Route,
    pub source_span: String,
    /// Set by [`trim_margins`] when the image holds no content pixels.
    pub blank: bool,
    pub distortion: Option<DistortionChoice>,
}

impl RenderedCarrier {
    pub fn new(image: RgbImage, route: Route, source_span: &str) -> Self {
        Self {
            image,
            route,
            source_span: source_span.to_string(),
            blank: false,
            distortion: None,
        }
    }

    pub fn width(&self) -> u32 {
        self.image.width()
    }

    pub fn height(&self) -> u32 {
        self.image.height()
    }

    pub fn area(&self) -> u64 {
        u64::from(self.width()) * u64::from(self.height())
    }

    /// PNG encoding of the image (8-bit RGB).
    pub fn png_bytes(&self) -> Result<Vec<u8>, image::ImageError> {
        let mut out = std::io::Cursor::new(Vec::new());
        self.image.write_to(&mut out, image::ImageFormat::Png)?;
        Ok(out.into_inner())
    }
}

/// True when `span` holds a balanced math region or a command token. `$…$`
/// regions that only enclose a number are treated as prices.
pub fn contains_math(span: &str) -> bool {
    scan_math(span)
        .iter()
        .any(|region| !region.is_currency_like(span))
}

/// Routes `span` to LaTeX when it contains math, falling back to the text
/// rasterizer on any LaTeX failure. Never fails.
pub fn render_routed(span: &str, config: &RenderConfig) -> RenderedCarrier {
    render_routed_gated(span, config, None)
}

pub fn render_routed_gated(
    span: &str,
    config: &RenderConfig,
    gate: Option<&ProcessGate>,
) -> RenderedCarrier {
    if !contains_math(span) {
        return render_text(span, config);
    }
    match render_latex_gated(span, config, gate) {
        Ok(carrier) => carrier,
        Err(err) => {
            if !matches!(err, LatexError::Unavailable) {
                log::debug!("latex route failed, using text renderer: {err}");
            }
            let mut carrier = render_text(span, config);
            carrier.route = Route::LatexFallbackText;
            carrier
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn math_detection() {
        assert!(contains_math("area $\\pi r^2$"));
        assert!(!contains_math("plain prose"));
        assert!(!contains_math("price is $5 and $6"));
        assert!(!contains_math("exactly $5$ dollars"));
        assert!(contains_math(r"the \sqrt{2} thing"));
        assert!(contains_math(r"\[ a = b \]"));
        assert!(contains_math("$$ x $$"));
    }

    #[test]
    fn prose_routes_to_text() {
        let c = render_routed("plain prose only", &RenderConfig::default());
        assert_eq!(c.route, Route::Text);
    }

    #[test]
    fn broken_latex_falls_back() {
        let cfg = RenderConfig {
            latex_command_template: Some("exit 1".into()),
            ..RenderConfig::default()
        };
        let c = render_routed("area $\\pi r^2$", &cfg);
        assert_eq!(c.route, Route::LatexFallbackText);
        assert!(c.image.pixels().any(is_content));
        let c = render_routed("area $\\pi r^2$", &RenderConfig::default());
        assert_eq!(c.route, Route::LatexFallbackText);
    }

    #[test]
    fn config_validation() {
        assert!(RenderConfig::default().validate().is_ok());
        let bad = RenderConfig {
            line_height: 10.0,
            ..RenderConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = RenderConfig {
            pixel_cap: 0,
            ..RenderConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn png_is_rgb8() {
        let c = render_text("png", &RenderConfig::default());
        let bytes = c.png_bytes().unwrap();
        let back = image::load_from_memory(&bytes).unwrap();
        assert_eq!(back.color(), image::ColorType::Rgb8);
        assert_eq!(back.to_rgb8(), c.image);
    }
}
