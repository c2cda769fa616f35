use serde::{Deserialize, Serialize};

use super::chunk::Block;

/// Which part of the instance is rendered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionMode {
    /// First third.
    Prefix,
    /// Central third.
    #[default]
    Middle,
    /// Last third.
    Suffix,
    /// Groups 2 and 4 of five balanced groups (text, image, text, image, text).
    MultiSpan,
}

impl PositionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PositionMode::Prefix => "prefix",
            PositionMode::Middle => "middle",
            PositionMode::Suffix => "suffix",
            PositionMode::MultiSpan => "multi_span",
        }
    }
}

impl std::str::FromStr for PositionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "prefix" => Ok(PositionMode::Prefix),
            "middle" => Ok(PositionMode::Middle),
            "suffix" => Ok(PositionMode::Suffix),
            "multi_span" | "multi-span" => Ok(PositionMode::MultiSpan),
            other => Err(format!(
                "unknown position mode {other:?} (expected prefix, middle, suffix or multi_span)"
            )),
        }
    }
}

/// A contiguous piece of the source text, kept as text or rendered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub text: String,
    pub blocks: Vec<Block>,
    pub rendered: bool,
    /// Character offsets into the source.
    pub start: usize,
    pub end: usize,
}

/// Result of span localization. Single-span modes have three segments
/// (pre, mid, suf); a full multi-span split has five.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanSplit {
    pub mode: PositionMode,
    pub segments: Vec<Segment>,
}

impl SpanSplit {
    fn segment_text(&self, i: usize) -> &str {
        self.segments.get(i).map_or("", |s| s.text.as_str())
    }

    pub fn pre(&self) -> &str {
        self.segment_text(0)
    }

    pub fn mid(&self) -> &str {
        self.segment_text(1)
    }

    pub fn suf(&self) -> &str {
        self.segment_text(self.segments.len().saturating_sub(1).max(2))
    }

    /// Blocks of the (first) rendered segment.
    pub fn mid_blocks(&self) -> &[Block] {
        self.rendered().next().map_or(&[], |s| s.blocks.as_slice())
    }

    pub fn rendered(&self) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(|s| s.rendered)
    }

    pub fn reconstruct(&self) -> String {
        self.segments.iter().map(|s| s.text.as_str()).collect()
    }

    /// Character offsets of the interior segment boundaries.
    pub fn boundaries(&self) -> Vec<usize> {
        self.segments
            .iter()
            .skip(1)
            .map(|s| s.start)
            .collect()
    }

    /// The short-circuit split `(ε, x, ε)`.
    pub fn whole(text: &str, mode: PositionMode) -> Self {
        let len = text.chars().count();
        let mut blocks = Vec::new();
        if !text.is_empty() {
            blocks.push(Block::text(text));
        }
        Self {
            mode,
            segments: vec![
                empty_segment(0),
                Segment {
                    text: text.to_string(),
                    blocks,
                    rendered: true,
                    start: 0,
                    end: len,
                },
                empty_segment(len),
            ],
        }
    }
}

fn empty_segment(at: usize) -> Segment {
    Segment {
        text: String::new(),
        blocks: Vec::new(),
        rendered: false,
        start: at,
        end: at,
    }
}

/// Cumulative character offsets `c_0 = 0, …, c_n = L` of block boundaries.
fn cumulative(blocks: &[Block]) -> Vec<usize> {
    let mut cum = Vec::with_capacity(blocks.len() + 1);
    cum.push(0);
    let mut pos = 0;
    for b in blocks {
        pos += b.length;
        cum.push(pos);
    }
    cum
}

/// Index of the earliest block boundary at character position ≥ `num/den · L`.
fn first_boundary_at_or_after(cum: &[usize], num: usize, den: usize) -> usize {
    let total = *cum.last().unwrap_or(&0);
    cum.iter()
        .position(|&c| c * den >= num * total)
        .unwrap_or(cum.len() - 1)
}

/// Builds segments from boundary block indices `0 = g_0 ≤ … ≤ g_k = n`.
fn segments_from_cuts(blocks: &[Block], cum: &[usize], cuts: &[usize], rendered: &[bool]) -> Vec<Segment> {
    cuts.windows(2)
        .zip(rendered)
        .map(|(w, &r)| {
            let slice = &blocks[w[0]..w[1]];
            Segment {
                text: slice.iter().map(|b| b.content.as_str()).collect(),
                blocks: slice.to_vec(),
                rendered: r,
                start: cum[w[0]],
                end: cum[w[1]],
            }
        })
        .collect()
}

/// Selects the span(s) to render at block granularity.
///
/// Boundaries snap forward to the first block boundary at or after each
/// fractional mark. When a single long block covers both marks the rendered
/// segment is widened by one block so it is never empty.
pub fn extract_span(blocks: &[Block], mode: PositionMode) -> SpanSplit {
    let n = blocks.len();
    let cum = cumulative(blocks);
    if n == 0 {
        return SpanSplit::whole("", mode);
    }
    let f = |num, den| first_boundary_at_or_after(&cum, num, den);
    let single = [false, true, false];

    let segments = match mode {
        PositionMode::Middle => {
            let (mut i, mut j) = (f(1, 3), f(2, 3));
            if i == j {
                if j < n {
                    j += 1;
                } else {
                    i -= 1;
                }
            }
            segments_from_cuts(blocks, &cum, &[0, i, j, n], &single)
        }
        PositionMode::Prefix => {
            let i = f(1, 3).max(1);
            segments_from_cuts(blocks, &cum, &[0, 0, i, n], &single)
        }
        PositionMode::Suffix => {
            let j = f(2, 3).min(n - 1);
            segments_from_cuts(blocks, &cum, &[0, j, n, n], &single)
        }
        PositionMode::MultiSpan if n < 2 => {
            segments_from_cuts(blocks, &cum, &[0, 0, n, n], &single)
        }
        PositionMode::MultiSpan => {
            let (g1, g2, g3, g4) = (f(1, 5), f(2, 5), f(3, 5), f(4, 5));
            // Project onto g1 < g2 ≤ g3 < g4 ≤ n; identity when already valid.
            let g2 = g2.clamp(1, n - 1);
            let g1 = g1.min(g2 - 1);
            let g4 = g4.clamp(g2 + 1, n);
            let g3 = g3.clamp(g2, g4 - 1);
            segments_from_cuts(
                blocks,
                &cum,
                &[0, g1, g2, g3, g4, n],
                &[false, true, false, true, false],
            )
        }
    };
    SpanSplit { mode, segments }
}
