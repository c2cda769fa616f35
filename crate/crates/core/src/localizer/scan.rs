//! Math-region scanner shared by the chunker, the sentence counter and the
//! render router.
//!
//! Recognised regions, in priority order at each position:
//! `\(...\)`, `\[...\]`, a command token `\name{..}{..}`, `$$...$$` and
//! `$...$`. An opener without a matching closer is plain text.

use std::ops::Range;

/// Maximum brace nesting accepted inside a command argument.
pub const MAX_BRACE_DEPTH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    /// `$...$`
    InlineDollar,
    /// `$$...$$`
    DisplayDollar,
    /// `\(...\)`
    Paren,
    /// `\[...\]`
    Bracket,
    /// `\name` with optional braced arguments.
    Command,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MathRegion {
    /// Byte range into the scanned string.
    pub range: Range<usize>,
    pub delimiter: Delimiter,
}

impl MathRegion {
    /// Text between the delimiters (the whole token for commands).
    pub fn inner<'a>(&self, text: &'a str) -> &'a str {
        let r = &self.range;
        match self.delimiter {
            Delimiter::InlineDollar => &text[r.start + 1..r.end - 1],
            Delimiter::DisplayDollar | Delimiter::Paren | Delimiter::Bracket => {
                &text[r.start + 2..r.end - 2]
            }
            Delimiter::Command => &text[r.clone()],
        }
    }

    /// A `$...$` region holding only a number or amount, e.g. `$5$` or `$1,000.50$`.
    pub fn is_currency_like(&self, text: &str) -> bool {
        self.delimiter == Delimiter::InlineDollar
            && self
                .inner(text)
                .chars()
                .all(|c| c.is_ascii_digit() || matches!(c, '.' | ',' | ' '))
    }
}

/// Returns the math regions of `text` in order; regions never overlap.
pub fn scan_math(text: &str) -> Vec<MathRegion> {
    let bytes = text.as_bytes();
    let n = bytes.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        match bytes[i] {
            b'\\' if i + 1 < n => {
                let next = bytes[i + 1];
                if next.is_ascii_alphabetic() {
                    let end = command_end(bytes, i);
                    out.push(MathRegion {
                        range: i..end,
                        delimiter: Delimiter::Command,
                    });
                    i = end;
                } else if next == b'(' || next == b'[' {
                    let (close, delimiter) = if next == b'(' {
                        (b"\\)", Delimiter::Paren)
                    } else {
                        (b"\\]", Delimiter::Bracket)
                    };
                    match find(bytes, i + 2, close) {
                        Some(k) => {
                            out.push(MathRegion {
                                range: i..k + 2,
                                delimiter,
                            });
                            i = k + 2;
                        }
                        None => i += 2,
                    }
                } else {
                    // Escaped character, e.g. `\$`: both bytes are text.
                    i += 1 + utf8_len(next);
                }
            }
            b'$' if i + 1 < n && bytes[i + 1] == b'$' => match find(bytes, i + 2, b"$$") {
                Some(k) => {
                    out.push(MathRegion {
                        range: i..k + 2,
                        delimiter: Delimiter::DisplayDollar,
                    });
                    i = k + 2;
                }
                None => i += 2,
            },
            b'$' => match inline_dollar_close(bytes, i) {
                Some(k) => {
                    out.push(MathRegion {
                        range: i..k + 1,
                        delimiter: Delimiter::InlineDollar,
                    });
                    i = k + 1;
                }
                None => i += 1,
            },
            b => i += utf8_len(b),
        }
    }
    out
}

fn utf8_len(lead: u8) -> usize {
    match lead {
        0x00..=0x7F => 1,
        0xC0..=0xDF => 2,
        0xE0..=0xEF => 3,
        0xF0..=0xF7 => 4,
        _ => 1,
    }
}

fn find(bytes: &[u8], from: usize, pat: &[u8]) -> Option<usize> {
    if from >= bytes.len() {
        return None;
    }
    bytes[from..]
        .windows(pat.len())
        .position(|w| w == pat)
        .map(|p| p + from)
}

/// End of a command token starting at the backslash at `start`.
fn command_end(bytes: &[u8], start: usize) -> usize {
    let mut j = start + 1;
    while j < bytes.len() && bytes[j].is_ascii_alphabetic() {
        j += 1;
    }
    while j < bytes.len() && bytes[j] == b'{' {
        match brace_group_end(bytes, j) {
            Some(end) => j = end,
            None => break,
        }
    }
    j
}

/// Given `{` at `open`, the index one past its matching `}`.
fn brace_group_end(bytes: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut k = open;
    while k < bytes.len() {
        match bytes[k] {
            b'\\' => {
                k += 2;
                continue;
            }
            b'{' => {
                depth += 1;
                if depth > MAX_BRACE_DEPTH {
                    return None;
                }
            }
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(k + 1);
                }
            }
            _ => {}
        }
        k += 1;
    }
    None
}

/// Closing `$` for an inline opener at `open`, following the usual Markdown
/// rule: the opener is followed by a non-space, the closer is preceded by a
/// non-space and not followed by a digit.
fn inline_dollar_close(bytes: &[u8], open: usize) -> Option<usize> {
    let first = *bytes.get(open + 1)?;
    if first.is_ascii_whitespace() {
        return None;
    }
    let mut k = open + 1;
    while k < bytes.len() {
        match bytes[k] {
            b'\\' => {
                k += 2;
                continue;
            }
            b'$' => {
                let prev_ok = !bytes[k - 1].is_ascii_whitespace() && k > open + 1;
                let next_ok = bytes.get(k + 1).is_none_or(|b| !b.is_ascii_digit());
                if prev_ok && next_ok {
                    return Some(k);
                }
            }
            _ => {}
        }
        k += 1;
    }
    None
}
