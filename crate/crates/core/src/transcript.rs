//! Timestamped words, as produced by a speech-to-text front end.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Padding added on each side of a parameter token's spoken interval.
pub const DEFAULT_PADDING_MS: i64 = 300;

#[derive(Debug, Error, PartialEq)]
pub enum TranscriptError {
    #[error("transcript JSON is malformed: {0}")]
    Schema(String),
    #[error("word {index} (`{text}`) starts before the previous word ends or ends before it starts")]
    Ordering { index: usize, text: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordSpan {
    pub text: String,
    pub start_ms: i64,
    pub end_ms: i64,
}

impl WordSpan {
    pub fn new(text: impl Into<String>, start_ms: i64, end_ms: i64) -> Self {
        WordSpan {
            text: text.into(),
            start_ms,
            end_ms,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub utterance_id: String,
    pub words: Vec<WordSpan>,
}

/// Inclusive word-index range `[first, last]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSpan {
    pub first: usize,
    pub last: usize,
}

impl TokenSpan {
    pub fn new(first: usize, last: usize) -> Self {
        TokenSpan { first, last }
    }

    pub fn single(index: usize) -> Self {
        TokenSpan::new(index, index)
    }

    pub fn is_valid_for(&self, t: &Transcript) -> bool {
        self.first <= self.last && self.last < t.words.len()
    }
}

/// Closed interval in milliseconds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeInterval {
    pub start_ms: i64,
    pub end_ms: i64,
}

impl TimeInterval {
    pub fn new(start_ms: i64, end_ms: i64) -> Self {
        TimeInterval { start_ms, end_ms }
    }

    pub fn contains(&self, t_ms: i64) -> bool {
        self.start_ms <= t_ms && t_ms <= self.end_ms
    }

    pub fn contains_interval(&self, other: &TimeInterval) -> bool {
        self.start_ms <= other.start_ms && other.end_ms <= self.end_ms
    }
}

impl Transcript {
    /// Builds a transcript, checking word ordering.
    pub fn new(utterance_id: impl Into<String>, words: Vec<WordSpan>) -> Result<Self, TranscriptError> {
        let t = Transcript {
            utterance_id: utterance_id.into(),
            words,
        };
        t.validate()?;
        Ok(t)
    }

    /// Convenience constructor: words separated by whitespace, each lasting
    /// `word_ms` with `gap_ms` of silence in between, starting at `start_ms`.
    pub fn from_text(utterance_id: &str, text: &str, start_ms: i64, word_ms: i64, gap_ms: i64) -> Self {
        let words = text
            .split_whitespace()
            .enumerate()
            .map(|(i, w)| {
                let s = start_ms + i as i64 * (word_ms + gap_ms);
                WordSpan::new(w, s, s + word_ms)
            })
            .collect();
        Transcript {
            utterance_id: utterance_id.to_string(),
            words,
        }
    }

    fn validate(&self) -> Result<(), TranscriptError> {
        let mut prev_end = i64::MIN;
        for (index, w) in self.words.iter().enumerate() {
            if w.start_ms > w.end_ms || w.start_ms < prev_end {
                return Err(TranscriptError::Ordering {
                    index,
                    text: w.text.clone(),
                });
            }
            prev_end = w.end_ms;
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    /// The words joined by single spaces.
    pub fn text(&self) -> String {
        self.words
            .iter()
            .map(|w| w.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// The words of `span` with trailing punctuation stripped from the last.
    pub fn phrase(&self, span: &TokenSpan) -> String {
        let joined = self.words[span.first..=span.last]
            .iter()
            .map(|w| w.text.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        joined
            .trim_matches(|c: char| !c.is_alphanumeric())
            .to_string()
    }
}

/// Parses the transcript JSON document.
pub fn parse_transcript(text: &str) -> Result<Transcript, TranscriptError> {
    let t: Transcript =
        serde_json::from_str(text).map_err(|e| TranscriptError::Schema(e.to_string()))?;
    t.validate()?;
    Ok(t)
}

/// Time window during which the words of `span` were spoken, widened by
/// `padding_ms` on both sides and clamped at zero.
pub fn token_window(t: &Transcript, span: &TokenSpan, padding_ms: i64) -> TimeInterval {
    let start = t.words[span.first].start_ms - padding_ms;
    let end = t.words[span.last].end_ms + padding_ms;
    TimeInterval::new(start.max(0), end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_one_word() {
        let t = parse_transcript(
            r#"{"utterance_id":"u1","words":[{"text":"move","start_ms":0,"end_ms":300}]}"#,
        )
        .unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.words[0], WordSpan::new("move", 0, 300));
    }

    #[test]
    fn parse_rejects_out_of_order() {
        let text = r#"{"utterance_id":"u","words":[
            {"text":"a","start_ms":500,"end_ms":600},
            {"text":"b","start_ms":100,"end_ms":200}]}"#;
        assert_eq!(
            parse_transcript(text),
            Err(TranscriptError::Ordering {
                index: 1,
                text: "b".into()
            })
        );
        let overlap = r#"{"utterance_id":"u","words":[
            {"text":"a","start_ms":0,"end_ms":600},
            {"text":"b","start_ms":500,"end_ms":700}]}"#;
        assert!(matches!(parse_transcript(overlap), Err(TranscriptError::Ordering { .. })));
        assert!(matches!(parse_transcript("{}"), Err(TranscriptError::Schema(_))));
    }

    #[test]
    fn empty_words_are_allowed_here() {
        let t = parse_transcript(r#"{"utterance_id":"u","words":[]}"#).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn window_arithmetic() {
        let t = Transcript::new(
            "u",
            vec![WordSpan::new("a", 100, 400), WordSpan::new("here", 500, 800)],
        )
        .unwrap();
        assert_eq!(token_window(&t, &TokenSpan::single(1), 300), TimeInterval::new(200, 1100));
        assert_eq!(token_window(&t, &TokenSpan::single(0), 300), TimeInterval::new(0, 700));
        assert_eq!(token_window(&t, &TokenSpan::single(1), 0), TimeInterval::new(500, 800));
    }

    #[test]
    fn phrase_strips_punctuation() {
        let t = Transcript::from_text("u", "Hang the Starry Night painting on the wall here.", 0, 200, 50);
        assert_eq!(t.phrase(&TokenSpan::new(1, 4)), "the Starry Night painting");
        assert_eq!(t.phrase(&TokenSpan::single(8)), "here");
    }

    proptest! {
        #[test]
        fn window_is_monotone_and_nested(
            lens in prop::collection::vec((0i64..400, 0i64..300), 1..12),
            p1 in 0i64..1000, p2 in 0i64..1000,
            a in 0usize..12, b in 0usize..12, c in 0usize..12, d in 0usize..12,
        ) {
            let mut t_ms = 0;
            let words = lens.iter().map(|&(len, gap)| {
                let w = WordSpan::new("w", t_ms, t_ms + len);
                t_ms += len + gap;
                w
            }).collect::<Vec<_>>();
            let n = words.len();
            let t = Transcript::new("u", words).unwrap();
            let mut idx = [a % n, b % n, c % n, d % n];
            idx.sort();
            let outer = TokenSpan::new(idx[0], idx[3]);
            let inner = TokenSpan::new(idx[1], idx[2]);
            let (lo, hi) = (p1.min(p2), p1.max(p2));
            prop_assert!(token_window(&t, &outer, hi).contains_interval(&token_window(&t, &outer, lo)));
            prop_assert!(token_window(&t, &outer, lo).contains_interval(&token_window(&t, &inner, lo)));
        }
    }
}
