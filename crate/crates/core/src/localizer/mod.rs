//! Span localization: sentence counting, formula-aware chunking and
//! block-granular span extraction.

mod chunk;
mod scan;
mod span;

pub use chunk::{
    chunk_formula_aware, count_sentences, formula_extents, sentence_units, Block, BlockKind,
    ChunkSequence,
};
pub use scan::{scan_math, Delimiter, MathRegion, MAX_BRACE_DEPTH};
pub use span::{extract_span, PositionMode, Segment, SpanSplit};

/// Instances with at most this many sentences are rendered whole.
pub const SHORT_INSTANCE_SENTENCES: usize = 3;

/// Splits `x` into kept and rendered segments.
///
/// Short inputs come back as `(ε, x, ε)` whatever the mode; longer inputs are
/// chunked, refined to sentence granularity and split by [`extract_span`].
pub fn localize(x: &str, mode: PositionMode) -> SpanSplit {
    if count_sentences(x) <= SHORT_INSTANCE_SENTENCES {
        return SpanSplit::whole(x, mode);
    }
    let chunks = chunk_formula_aware(x);
    let units = sentence_units(&chunks);
    extract_span(&units, mode)
}
