//! Tokenization, n-gram bags and ROUGE-1/2/L F1.
//!
//! Every reward and metric in the crate goes through these functions, so the
//! tokenizer rules are fixed: lowercase, split on Unicode whitespace, strip
//! leading and trailing punctuation from each chunk, drop empty tokens.

use rustc_hash::FxHashMap as HashMap;
use std::ops::Range;

/// A tokenized string.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSeq {
    pub tokens: Vec<String>,
    pub source_len_chars: usize,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token concatenation `self ⊕ other`.
    pub fn concat(&self, other: &TokenSeq) -> TokenSeq {
        let mut tokens = Vec::with_capacity(self.len() + other.len());
        tokens.extend_from_slice(&self.tokens);
        tokens.extend_from_slice(&other.tokens);
        TokenSeq {
            tokens,
            source_len_chars: self.source_len_chars + other.source_len_chars,
        }
    }

    pub fn from_tokens<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> TokenSeq {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let source_len_chars = tokens.iter().map(|t| t.chars().count()).sum();
        TokenSeq {
            tokens,
            source_len_chars,
        }
    }
}

/// Multiset of n-grams of a fixed order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramBag {
    pub n: usize,
    pub counts: HashMap<Vec<String>, usize>,
}

impl NgramBag {
    pub fn new(tokens: &[String], n: usize) -> NgramBag {
        assert!(n >= 1, "n-gram order must be at least 1");
        let mut counts = HashMap::default();
        if tokens.len() >= n {
            for window in tokens.windows(n) {
                *counts.entry(window.to_vec()).or_insert(0) += 1;
            }
        }
        NgramBag { n, counts }
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    /// Clipped overlap: each n-gram credited at most min(count_a, count_b).
    pub fn overlap(&self, other: &NgramBag) -> usize {
        let (small, large) = if self.counts.len() <= other.counts.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .counts
            .iter()
            .map(|(gram, &c)| large.counts.get(gram).map_or(0, |&o| c.min(o)))
            .sum()
    }
}

fn is_strippable(c: char) -> bool {
    c.is_ascii_punctuation() || (!c.is_alphanumeric() && !c.is_whitespace())
}

/// Byte span of each token inside `text`, alongside the token itself.
///
/// The span covers the whitespace-delimited chunk that produced the token,
/// so cutting the text at `span.end` never splits a token.
pub fn tokenize_with_spans(text: &str) -> Vec<(String, Range<usize>)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let push = |s: usize, e: usize, out: &mut Vec<(String, Range<usize>)>| {
        let chunk = &text[s..e];
        let trimmed = chunk.trim_matches(is_strippable);
        if !trimmed.is_empty() {
            out.push((trimmed.to_lowercase(), s..e));
        }
    };
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                push(s, i, &mut out);
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        push(s, text.len(), &mut out);
    }
    out
}

pub fn tokenize(text: &str) -> TokenSeq {
    TokenSeq {
        tokens: tokenize_with_spans(text)
            .into_iter()
            .map(|(t, _)| t)
            .collect(),
        source_len_chars: text.chars().count(),
    }
}

fn f1(overlap: f64, cand_total: f64, ref_total: f64) -> f64 {
    if cand_total == 0.0 || ref_total == 0.0 {
        return 0.0;
    }
    let p = overlap / cand_total;
    let r = overlap / ref_total;
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn borrowed_bag(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::with_capacity_and_hasher(tokens.len(), Default::default());
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    counts
}

/// Precision, recall and F1 of ROUGE-N with clipped counts.
pub fn rouge_n_prf(reference: &TokenSeq, candidate: &TokenSeq, n: usize) -> (f64, f64, f64) {
    assert!(n >= 1, "n-gram order must be at least 1");
    let rt = reference.len().saturating_sub(n - 1);
    let ct = candidate.len().saturating_sub(n - 1);
    if rt == 0 || ct == 0 {
        return (0.0, 0.0, 0.0);
    }
    let r = borrowed_bag(&reference.tokens, n);
    let c = borrowed_bag(&candidate.tokens, n);
    let ov: usize = c
        .iter()
        .map(|(gram, &k)| r.get(gram).map_or(0, |&o| k.min(o)))
        .sum();
    let ov = ov as f64;
    (ov / ct as f64, ov / rt as f64, f1(ov, ct as f64, rt as f64))
}

pub fn rouge_n_f1(reference: &TokenSeq, candidate: &TokenSeq, n: usize) -> f64 {
    rouge_n_prf(reference, candidate, n).2
}

pub fn rouge_1_f1(reference: &TokenSeq, candidate: &TokenSeq) -> f64 {
    rouge_n_f1(reference, candidate, 1)
}

/// Length of the longest common subsequence, O(mn) time and O(min(m,n)) space.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut row = vec![0usize; short.len() + 1];
    for x in long {
        let mut diag = 0;
        for (j, y) in short.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[short.len()]
}

pub fn rouge_l_f1(reference: &TokenSeq, candidate: &TokenSeq) -> f64 {
    if reference.is_empty() || candidate.is_empty() {
        return 0.0;
    }
    let l = lcs_len(&reference.tokens, &candidate.tokens) as f64;
    f1(l, candidate.len() as f64, reference.len() as f64)
}

/// Which ROUGE flavour to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum RougeVariant {
    R1,
    R2,
    RL,
}

impl RougeVariant {
    pub const ALL: [RougeVariant; 3] = [RougeVariant::R1, RougeVariant::R2, RougeVariant::RL];

    pub fn score(self, reference: &TokenSeq, candidate: &TokenSeq) -> f64 {
        match self {
            RougeVariant::R1 => rouge_n_f1(reference, candidate, 1),
            RougeVariant::R2 => rouge_n_f1(reference, candidate, 2),
            RougeVariant::RL => rouge_l_f1(reference, candidate),
        }
    }
}

/// Token-level F1 between a predicted answer and a gold answer (multiset overlap).
pub fn token_f1(predicted: &TokenSeq, gold: &TokenSeq) -> f64 {
    rouge_n_f1(gold, predicted, 1)
}

/// A named-entity-like span found by surface heuristics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntitySpan {
    /// Surface text as it appears in the source.
    pub text: String,
    /// Number of whitespace chunks the span covers.
    pub n_tokens: usize,
    /// Byte offset of the span in the source.
    pub start: usize,
}

const CAPITALIZED_STOPWORDS: &[&str] = &[
    "A", "An", "The", "This", "That", "These", "Those", "It", "Its", "In", "On", "At", "Of",
    "For", "And", "But", "Or", "If", "As", "By", "To", "With", "From", "We", "They", "He",
    "She", "I", "Our", "Their", "His", "Her", "When", "While", "After", "Before", "However",
    "Moreover", "Furthermore", "Additionally", "Also", "Therefore", "Thus", "Meanwhile",
    "Nevertheless", "Instead", "Consequently", "Finally", "Well", "Did", "What", "Why", "How",
    "Tell", "That's", "Go", "There", "Here", "Each", "Every", "Some", "Most", "Many", "One",
    "Two", "Both", "Such", "Since", "Although", "Because", "Yes", "No", "So", "Then",
];

fn looks_numeric(word: &str) -> bool {
    word.chars().any(|c| c.is_ascii_digit())
        && word
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | ',' | '%' | '-' | '/'))
}

fn looks_capitalized(word: &str) -> bool {
    word.chars().next().is_some_and(|c| c.is_uppercase())
}

/// Surface entity candidates: capitalized token runs (at most `max_run`
/// chunks), numbers, and double-quoted spans.
///
/// A run made only of common capitalized function words ("The", "However")
/// is not an entity, and such words are trimmed from the front of a run.
pub fn extract_entities(text: &str, max_run: usize) -> Vec<EntitySpan> {
    let mut out = Vec::new();
    // (core word, start byte, end byte)
    let mut chunks: Vec<(&str, usize, usize)> = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                chunks.push((&text[s..i], s, i));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        chunks.push((&text[s..], s, text.len()));
    }

    let core = |chunk: &str, s: usize| -> (String, usize, usize, bool, bool) {
        let lead = chunk.len() - chunk.trim_start_matches(is_strippable).len();
        let trimmed = chunk.trim_matches(is_strippable);
        let ends_phrase = chunk.ends_with([',', '.', ';', ':', '!', '?', ')', '"']);
        let starts_phrase = chunk.starts_with(['(', '"']);
        (
            trimmed.to_string(),
            s + lead,
            s + lead + trimmed.len(),
            starts_phrase,
            ends_phrase,
        )
    };

    let mut i = 0;
    while i < chunks.len() {
        let (chunk, s, _) = chunks[i];
        let (word, ws, _, _, _) = core(chunk, s);
        if word.is_empty() {
            i += 1;
            continue;
        }
        if looks_numeric(&word) {
            out.push(EntitySpan {
                text: word.clone(),
                n_tokens: 1,
                start: ws,
            });
            i += 1;
            continue;
        }
        if looks_capitalized(&word) && !CAPITALIZED_STOPWORDS.contains(&word.as_str()) {
            let mut j = i;
            let mut end = ws + word.len();
            loop {
                let (_, cs, _) = chunks[j];
                let (_, _, ce, _, ends) = core(chunks[j].0, cs);
                end = ce.max(end);
                if ends || j + 1 >= chunks.len() || j + 1 - i >= max_run {
                    break;
                }
                let (next, ns, _) = chunks[j + 1];
                let (nw, _, _, nstarts, _) = core(next, ns);
                if nw.is_empty()
                    || nstarts
                    || !looks_capitalized(&nw)
                    || CAPITALIZED_STOPWORDS.contains(&nw.as_str())
                {
                    break;
                }
                j += 1;
            }
            out.push(EntitySpan {
                text: text[ws..end].to_string(),
                n_tokens: j - i + 1,
                start: ws,
            });
            i = j + 1;
            continue;
        }
        i += 1;
    }

    // quoted spans
    let mut search = 0;
    while let Some(open) = text[search..].find('"') {
        let open = search + open;
        match text[open + 1..].find('"') {
            Some(close) => {
                let inner = &text[open + 1..open + 1 + close];
                let n_tokens = inner.split_whitespace().count();
                if n_tokens > 0 && !out.iter().any(|e| e.text == inner) {
                    out.push(EntitySpan {
                        text: inner.to_string(),
                        n_tokens,
                        start: open + 1,
                    });
                }
                search = open + close + 2;
            }
            None => break,
        }
    }
    out.sort_by_key(|e| e.start);
    out
}

/// Split text into sentences on ". ", "? " and "! ", keeping the terminal
/// punctuation, and not splitting after "e.g.", "i.e." or "et al.".
pub fn split_sentences(text: &str) -> Vec<String> {
    const GUARDS: &[&str] = &["e.g.", "i.e.", "et al."];
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut begin = 0;
    let mut i = 0;
    while i + 1 < bytes.len() {
        let c = bytes[i];
        if matches!(c, b'.' | b'?' | b'!') && bytes[i + 1] == b' ' {
            let upto = &text[..=i];
            let guarded = c == b'.'
                && GUARDS.iter().any(|g| {
                    upto.len() >= g.len()
                        && upto[upto.len() - g.len()..].eq_ignore_ascii_case(g)
                        && (upto.len() == g.len()
                            || !upto.as_bytes()[upto.len() - g.len() - 1].is_ascii_alphanumeric())
                });
            if !guarded {
                let s = text[begin..=i].trim();
                if !s.is_empty() {
                    out.push(s.to_string());
                }
                begin = i + 1;
            }
        }
        i += 1;
    }
    let tail = text[begin..].trim();
    if !tail.is_empty() {
        out.push(tail.to_string());
    }
    out
}
