use serde::{Deserialize, Serialize};

use super::scan::scan_math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Text,
    Formula,
}

/// A text or formula block with its length in characters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub kind: BlockKind,
    pub content: String,
    pub length: usize,
}

impl Block {
    pub fn new(kind: BlockKind, content: impl Into<String>) -> Self {
        let content = content.into();
        let length = content.chars().count();
        Self {
            kind,
            content,
            length,
        }
    }

    pub fn text(content: impl Into<String>) -> Self {
        Self::new(BlockKind::Text, content)
    }

    pub fn formula(content: impl Into<String>) -> Self {
        Self::new(BlockKind::Formula, content)
    }

    pub fn is_formula(&self) -> bool {
        self.kind == BlockKind::Formula
    }
}

/// Alternating text/formula blocks whose concatenation is the source text.
/// Text runs are maximal; adjacent math regions are merged into one formula.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChunkSequence {
    blocks: Vec<Block>,
    total_length: usize,
}

impl ChunkSequence {
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<Block> {
        self.blocks
    }

    pub fn total_length(&self) -> usize {
        self.total_length
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn reconstruct(&self) -> String {
        self.blocks.iter().map(|b| b.content.as_str()).collect()
    }

    /// `(start, end)` character extents of every formula block.
    pub fn formula_extents(&self) -> Vec<(usize, usize)> {
        formula_extents(&self.blocks)
    }
}

pub fn formula_extents(blocks: &[Block]) -> Vec<(usize, usize)> {
    let mut pos = 0;
    let mut out = Vec::new();
    for b in blocks {
        if b.is_formula() {
            out.push((pos, pos + b.length));
        }
        pos += b.length;
    }
    out
}

/// Splits `text` into maximal text runs and atomic formula blocks.
pub fn chunk_formula_aware(text: &str) -> ChunkSequence {
    let mut blocks: Vec<Block> = Vec::new();
    let mut cursor = 0;
    for region in scan_math(text) {
        if region.range.start > cursor {
            blocks.push(Block::text(&text[cursor..region.range.start]));
        } else if let Some(last) = blocks.last_mut().filter(|b| b.is_formula()) {
            // Directly adjacent math regions form one formula block.
            let piece = &text[region.range.clone()];
            last.content.push_str(piece);
            last.length += piece.chars().count();
            cursor = region.range.end;
            continue;
        }
        blocks.push(Block::formula(&text[region.range.clone()]));
        cursor = region.range.end;
    }
    if cursor < text.len() {
        blocks.push(Block::text(&text[cursor..]));
    }
    let total_length = blocks.iter().map(|b| b.length).sum();
    ChunkSequence {
        blocks,
        total_length,
    }
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '?' | '!')
}

/// Character positions (exclusive ends) of sentence-terminator runs that
/// count as sentence ends. `masked[i]` is true for characters inside math.
fn terminator_run_ends(chars: &[char], masked: &[bool]) -> Vec<usize> {
    let mut ends = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !masked[i] && is_terminator(chars[i]) {
            let mut j = i + 1;
            while j < chars.len() && !masked[j] && is_terminator(chars[j]) {
                j += 1;
            }
            let followed_ok = j == chars.len() || (!masked[j] && chars[j].is_whitespace());
            if followed_ok {
                ends.push(j);
            }
            i = j;
        } else {
            i += 1;
        }
    }
    ends
}

fn math_mask(text: &str) -> (Vec<char>, Vec<bool>) {
    let regions = scan_math(text);
    let mut chars = Vec::with_capacity(text.len());
    let mut masked = Vec::with_capacity(text.len());
    let mut r = regions.iter().peekable();
    for (byte, c) in text.char_indices() {
        while r.peek().is_some_and(|reg| reg.range.end <= byte) {
            r.next();
        }
        let inside = r.peek().is_some_and(|reg| reg.range.contains(&byte));
        chars.push(c);
        masked.push(inside);
    }
    (chars, masked)
}

/// Counts maximal runs of `.`, `?`, `!` outside math that are followed by
/// whitespace or end of input. Non-empty text without any such run counts as
/// one sentence.
pub fn count_sentences(text: &str) -> usize {
    if text.is_empty() {
        return 0;
    }
    let (chars, masked) = math_mask(text);
    terminator_run_ends(&chars, &masked).len().max(1)
}

/// Refines a chunk sequence for span extraction: formula blocks stay atomic
/// while each text block is cut after every sentence end (terminator run plus
/// the whitespace that follows it).
pub fn sentence_units(seq: &ChunkSequence) -> Vec<Block> {
    let mut out = Vec::new();
    for block in seq.blocks() {
        if block.is_formula() {
            out.push(block.clone());
            continue;
        }
        let chars: Vec<char> = block.content.chars().collect();
        let masked = vec![false; chars.len()];
        let mut start = 0;
        for end in terminator_run_ends(&chars, &masked) {
            let mut cut = end;
            while cut < chars.len() && chars[cut].is_whitespace() {
                cut += 1;
            }
            if cut < chars.len() && cut > start {
                out.push(Block::text(chars[start..cut].iter().collect::<String>()));
                start = cut;
            }
        }
        if start < chars.len() {
            out.push(Block::text(chars[start..].iter().collect::<String>()));
        }
    }
    out
}
