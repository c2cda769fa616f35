//! Fixture generators shared by the integration tests.

#![allow(dead_code)]

use std::path::Path;

use lomo_core::corpus::{ContentPart, Instance};
use lomo_core::rng::SplitMix64;

const WORDS: &[&str] = &[
    "the", "value", "of", "a", "matrix", "is", "given", "by", "prove", "that", "every", "graph", "has", "naïve",
    "Ångström", "数学", "function", "limit", "series", "answer", "choose", "option", "result", "sum", "curve",
];

const MATH: &[&str] = &[
    "$x^2$",
    "$a.b + c$",
    "$\\frac{1}{2}.$",
    "$$\\sum_{i=1}^{n} i! $$",
    "\\(p \\cdot q. r\\)",
    "\\[ \\int_0^1 f(x)\\,dx ? \\]",
    "\\alpha",
    "\\sqrt{x+1}",
    "\\frac{a}{b}",
    "$e^{i\\pi} = -1$",
];

const NOISE: &[&str] = &["$\\frac{1}{2}. $", "$5", "\\$3", "$", "$$", "{", "}", "\\", "\\frac{a}{", "{{{", "..", "?!", "$x", "\\("];

pub struct Gen(pub SplitMix64);

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen(SplitMix64::new(seed))
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.0.below(n as u64) as usize
    }

    pub fn pick<'a>(&mut self, items: &[&'a str]) -> &'a str {
        items[self.below(items.len())]
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.0.uniform(lo, hi)
    }

    /// Standard normal draw (Box-Muller).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.0.next_f64();
        let u2 = self.0.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Free mix of prose, math, terminators and malformed delimiters.
    pub fn mixed_string(&mut self) -> String {
        let pieces = self.below(40);
        let mut s = String::new();
        for _ in 0..pieces {
            match self.below(10) {
                0..=4 => s.push_str(self.pick(WORDS)),
                5 | 6 => s.push_str(self.pick(MATH)),
                7 => s.push_str(self.pick(&[". ", "? ", "! ", "... ", ".", "\n"])),
                8 => s.push_str(self.pick(NOISE)),
                _ => s.push(' '),
            }
            if self.below(3) > 0 {
                s.push(' ');
            }
        }
        s
    }

    /// One sentence with exactly one terminator at its end and no stray
    /// terminators inside; may embed a formula when `math` is set.
    pub fn sentence(&mut self, words: usize, math: bool) -> String {
        let mut out: Vec<String> = (0..words.max(1)).map(|_| self.pick(WORDS).to_string()).collect();
        if math {
            let at = self.below(out.len() + 1);
            out.insert(at, self.pick(MATH).to_string());
        }
        let mut s = out.join(" ");
        s.push(if self.below(4) == 0 { '?' } else { '.' });
        s
    }

    /// Between `lo` and `lo + spread - 1` sentences.
    pub fn paragraph_between(&mut self, lo: usize, spread: usize, math_prob: f64, max_words: usize) -> String {
        let k = lo + self.below(spread);
        self.paragraph(k, math_prob, max_words)
    }

    pub fn sentence_between(&mut self, lo: usize, spread: usize, math: bool) -> String {
        let words = lo + self.below(spread);
        self.sentence(words, math)
    }

    /// `k` sentences separated by single spaces.
    pub fn paragraph(&mut self, k: usize, math_prob: f64, max_words: usize) -> String {
        (0..k)
            .map(|_| {
                let math = self.0.next_f64() < math_prob;
                let words = 1 + self.below(max_words);
                self.sentence(words, math)
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Writes `instances` as JSON Lines.
pub fn write_corpus(path: &Path, instances: &[Instance]) {
    let mut text = String::new();
    for inst in instances {
        text.push_str(&serde_json::to_string(inst).unwrap());
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

/// Writes a small valid PNG.
pub fn write_png(path: &Path, shade: u8) {
    let img = image::RgbImage::from_pixel(12, 8, image::Rgb([shade, 128, 255 - shade]));
    img.save(path).unwrap();
}

/// Text-only and image-bearing instances of varied length; image files are
/// created under `root/img`.
pub fn mixed_corpus(root: &Path, n: usize, seed: u64) -> Vec<Instance> {
    let mut g = Gen::new(seed);
    std::fs::create_dir_all(root.join("img")).unwrap();
    (0..n)
        .map(|i| {
            let id = format!("mix-{i:05}");
            let answer = format!("{}", g.below(100));
            if g.below(5) < 2 {
                let rel = format!("img/{id}.png");
                write_png(&root.join(&rel), (i % 251) as u8);
                let q = g.paragraph_between(1, 4, 0.3, 10);
                let mut parts = vec![ContentPart::image(rel)];
                parts.push(ContentPart::text(q));
                if g.below(2) == 0 {
                    parts.reverse();
                }
                Instance { id, parts, answer }
            } else {
                let k = if g.below(2) == 0 { 1 + g.below(3) } else { 4 + g.below(8) };
                let q = g.paragraph(k, 0.3, 14);
                Instance::text_only(id, q, answer)
            }
        })
        .collect()
}
