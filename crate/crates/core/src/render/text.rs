//! Native text rasterizer: greedy word wrap, black glyphs on white.

use std::sync::OnceLock;

use ab_glyph::{point, Font, FontRef, GlyphId, PxScale, ScaleFont};
use image::{Rgb, RgbImage};

use super::{RenderConfig, RenderedCarrier, Route, BACKGROUND};

static FONT_BYTES: &[u8] = include_bytes!("../../assets/DejaVuSans.ttf");

fn font() -> &'static FontRef<'static> {
    static FONT: OnceLock<FontRef<'static>> = OnceLock::new();
    FONT.get_or_init(|| FontRef::try_from_slice(FONT_BYTES).expect("embedded font parses"))
}

/// A positioned glyph on one line, x in pixels from the line start.
struct Placed {
    id: GlyphId,
    x: f32,
}

struct Line {
    glyphs: Vec<Placed>,
    width: f32,
}

struct Layout<'f> {
    font: ab_glyph::PxScaleFont<&'f FontRef<'static>>,
    max_width: f32,
    replacement: GlyphId,
}

impl<'f> Layout<'f> {
    fn new(font_size: f32, max_width: f32) -> Self {
        let f = font();
        // `font_size` is pixels per em; PxScale is relative to ascent - descent.
        let units_per_em = f.units_per_em().unwrap_or(2048.0);
        let scale = PxScale::from(font_size * f.height_unscaled() / units_per_em);
        let scaled = f.as_scaled(scale);
        let mut replacement = f.glyph_id('\u{FFFD}');
        if replacement.0 == 0 {
            replacement = f.glyph_id('?');
        }
        Self {
            font: scaled,
            max_width,
            replacement,
        }
    }

    fn glyph(&self, c: char) -> GlyphId {
        let id = self.font.glyph_id(c);
        if id.0 == 0 {
            self.replacement
        } else {
            id
        }
    }

    fn word_glyphs(&self, word: &str) -> Vec<(GlyphId, f32)> {
        word.chars()
            .filter(|c| !c.is_control())
            .map(|c| {
                let id = self.glyph(c);
                (id, self.font.h_advance(id))
            })
            .collect()
    }

    fn lay_out(&self, text: &str) -> Vec<Line> {
        let space = self.glyph(' ');
        let space_advance = self.font.h_advance(space);
        let mut lines = Vec::new();
        for paragraph in text.split('\n') {
            let mut line = Line {
                glyphs: Vec::new(),
                width: 0.0,
            };
            let mut prev: Option<GlyphId> = None;
            for word in paragraph.split_whitespace() {
                let glyphs = self.word_glyphs(word);
                if glyphs.is_empty() {
                    continue;
                }
                let word_width: f32 = glyphs.iter().map(|g| g.1).sum();
                let lead = if line.glyphs.is_empty() { 0.0 } else { space_advance };
                if !line.glyphs.is_empty() && line.width + lead + word_width > self.max_width {
                    lines.push(std::mem::replace(
                        &mut line,
                        Line {
                            glyphs: Vec::new(),
                            width: 0.0,
                        },
                    ));
                    prev = None;
                }
                if !line.glyphs.is_empty() {
                    line.width += space_advance;
                    prev = Some(space);
                }
                for (id, advance) in glyphs {
                    let kern = prev.map_or(0.0, |p| self.font.kern(p, id));
                    if !line.glyphs.is_empty() && line.width + kern + advance > self.max_width {
                        // Word longer than a whole line: hard break.
                        lines.push(std::mem::replace(
                            &mut line,
                            Line {
                                glyphs: Vec::new(),
                                width: 0.0,
                            },
                        ));
                        line.glyphs.push(Placed { id, x: 0.0 });
                        line.width = advance;
                    } else {
                        line.width += kern;
                        line.glyphs.push(Placed { id, x: line.width });
                        line.width += advance;
                    }
                    prev = Some(id);
                }
            }
            lines.push(line);
        }
        lines
    }
}

/// Rasterizes `text` at its native size: `2·padding + widest line` by
/// `2·padding + lines·line_height`.
pub fn rasterize(text: &str, font_size: f32, line_height: f32, max_width: u32, padding: u32) -> RgbImage {
    let layout = Layout::new(font_size, max_width as f32);
    let lines = layout.lay_out(text);
    let widest = lines.iter().map(|l| l.width).fold(0.0f32, f32::max);
    let width = (2 * padding + widest.ceil() as u32).max(1);
    let height = (2 * padding as usize + (lines.len() as f32 * line_height).ceil() as usize).max(1) as u32;
    let mut img = RgbImage::from_pixel(width, height, BACKGROUND);

    let ascent = layout.font.ascent();
    let descent = layout.font.descent();
    // Centre the ascent..descent box inside each line box.
    let baseline = (line_height + ascent + descent) / 2.0;
    for (row, line) in lines.iter().enumerate() {
        let y = padding as f32 + row as f32 * line_height + baseline;
        for g in &line.glyphs {
            let glyph = g
                .id
                .with_scale_and_position(layout.font.scale(), point(padding as f32 + g.x, y));
            let Some(outlined) = layout.font.outline_glyph(glyph) else {
                continue;
            };
            let bounds = outlined.px_bounds();
            outlined.draw(|gx, gy, coverage| {
                let px = bounds.min.x as i64 + i64::from(gx);
                let py = bounds.min.y as i64 + i64::from(gy);
                if px < 0 || py < 0 || px >= i64::from(width) || py >= i64::from(height) {
                    return;
                }
                let ink = 255 - (coverage.clamp(0.0, 1.0) * 255.0).round() as u8;
                let pixel = img.get_pixel_mut(px as u32, py as u32);
                let v = pixel.0[0].min(ink);
                *pixel = Rgb([v, v, v]);
            });
        }
    }
    img
}

/// Renders `span` with the native rasterizer.
pub fn render_text(span: &str, config: &RenderConfig) -> RenderedCarrier {
    let image = rasterize(
        span,
        config.font_size,
        config.line_height,
        config.max_line_width,
        config.trim_padding,
    );
    RenderedCarrier::new(image, Route::Text, span)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ink(img: &RgbImage) -> usize {
        img.pixels().filter(|p| p.0[0] < 250).count()
    }

    #[test]
    fn hello_is_one_line() {
        let cfg = RenderConfig::default();
        let c = render_text("Hello", &cfg);
        assert_eq!(c.height(), 22 + 2 * 10);
        assert!(c.width() <= cfg.max_line_width + 2 * cfg.trim_padding);
        assert!(ink(&c.image) > 0);
        assert_eq!(c.route, Route::Text);
    }

    #[test]
    fn output_is_deterministic() {
        let cfg = RenderConfig::default();
        let a = render_text("Determinism check, 1 2 3.", &cfg);
        let b = render_text("Determinism check, 1 2 3.", &cfg);
        assert_eq!(a.image.as_raw(), b.image.as_raw());
    }

    #[test]
    fn long_paragraph_wraps() {
        let cfg = RenderConfig::default();
        let text = (0..500).map(|i| format!("word{i}")).collect::<Vec<_>>().join(" ");
        let c = render_text(&text, &cfg);
        assert!(c.width() <= cfg.max_line_width + 2 * cfg.trim_padding);
        let lines = (c.height() - 2 * cfg.trim_padding) / 22;
        assert!(lines > 10, "{lines} lines");
    }

    #[test]
    fn unbreakable_word_is_hard_broken() {
        let cfg = RenderConfig::default();
        let c = render_text(&"W".repeat(400), &cfg);
        assert!(c.width() <= cfg.max_line_width + 2 * cfg.trim_padding);
        assert!(c.height() > 22 + 20);
    }

    #[test]
    fn unknown_code_points_still_draw() {
        let cfg = RenderConfig::default();
        // Private-use code points have no glyph in the embedded font.
        let c = render_text("\u{E000}\u{E001}", &cfg);
        assert!(ink(&c.image) > 0);
    }

    #[test]
    fn newlines_start_new_lines() {
        let cfg = RenderConfig::default();
        let c = render_text("a\nb\nc", &cfg);
        assert_eq!(c.height(), 3 * 22 + 20);
    }
}
