//! Rule-based sentence segmentation.
//!
//! A sentence boundary is a run of terminal punctuation (`.` `!` `?`),
//! optionally followed by closing quotes or brackets, that is followed by
//! whitespace and then an uppercase letter or digit. Splits are suppressed
//! when the word before the period is a known abbreviation (see
//! `assets/abbreviations.txt`), a single-letter initial, or when the
//! candidate boundary falls inside a protected span (entity mentions).

use std::collections::BTreeSet;
use std::ops::Range;
use std::sync::OnceLock;

const ABBREVIATIONS: &str = include_str!("../../assets/abbreviations.txt");

fn abbreviation_set() -> &'static BTreeSet<&'static str> {
    static SET: OnceLock<BTreeSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        ABBREVIATIONS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201D}' | '\u{2019}')
}

/// The word (with trailing punctuation run) ending at byte `end`.
fn word_ending_at(text: &str, end: usize) -> &str {
    let start = text[..end]
        .rfind(|c: char| c.is_whitespace())
        .map(|p| p + text[p..].chars().next().unwrap().len_utf8())
        .unwrap_or(0);
    &text[start..end]
}

fn looks_like_abbreviation(word: &str) -> bool {
    if abbreviation_set().contains(word) {
        return true;
    }
    // Single-letter initials such as the "A." in "John A. Smith".
    let mut chars = word.chars();
    matches!((chars.next(), chars.next(), chars.next()), (Some(c), Some('.'), None) if c.is_uppercase())
}

/// Splits `text` into sentence byte ranges. Boundaries strictly inside any
/// protected `[start, end)` span are suppressed.
pub fn split_sentences(text: &str, protected: &[Range<usize>]) -> Vec<Range<usize>> {
    let mut boundaries: Vec<usize> = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, ch) = chars[i];
        if !is_terminal(ch) {
            i += 1;
            continue;
        }
        // Consume the punctuation run plus trailing closers.
        let mut j = i;
        while j < chars.len() && is_terminal(chars[j].1) {
            j += 1;
        }
        let punct_end = j;
        while j < chars.len() && is_closer(chars[j].1) {
            j += 1;
        }
        // Require whitespace then an uppercase letter or digit.
        let mut k = j;
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        if k == j || k >= chars.len() {
            i = j.max(i + 1);
            continue;
        }
        let next = chars[k].1;
        if !(next.is_uppercase() || next.is_ascii_digit()) {
            i = j.max(i + 1);
            continue;
        }
        let run_end = chars[punct_end - 1].0 + chars[punct_end - 1].1.len_utf8();
        let split_at = chars[j - 1].0 + chars[j - 1].1.len_utf8();
        let word = word_ending_at(text, run_end);
        if punct_end - i == 1 && chars[i].1 == '.' && looks_like_abbreviation(word) {
            i = j.max(i + 1);
            continue;
        }
        if protected
            .iter()
            .any(|span| pos > span.start && pos < span.end)
        {
            i = j.max(i + 1);
            continue;
        }
        boundaries.push(split_at);
        i = k;
    }

    let mut ranges = Vec::new();
    let mut start = 0;
    for b in boundaries.into_iter().chain(std::iter::once(text.len())) {
        let slice = &text[start..b];
        let trimmed_start = start + (slice.len() - slice.trim_start().len());
        let trimmed_end = start + slice.trim_end().len();
        if trimmed_start < trimmed_end {
            ranges.push(trimmed_start..trimmed_end);
        }
        start = b;
    }
    ranges
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sentences(text: &str) -> Vec<&str> {
        split_sentences(text, &[])
            .into_iter()
            .map(|r| &text[r])
            .collect()
    }

    #[test]
    fn splits_plain_sentences() {
        assert_eq!(
            sentences("Ada spoke. Bo listened. Then they left."),
            vec!["Ada spoke.", "Bo listened.", "Then they left."]
        );
    }

    #[test]
    fn single_sentence_without_trailing_period() {
        assert_eq!(sentences("Ada spoke"), vec!["Ada spoke"]);
    }

    #[test]
    fn protects_abbreviations() {
        assert_eq!(
            sentences("Dr. Reyes met Mr. Cole. They spoke."),
            vec!["Dr. Reyes met Mr. Cole.", "They spoke."]
        );
        assert_eq!(
            sentences("The U.S. Senate voted. It passed."),
            vec!["The U.S. Senate voted.", "It passed."]
        );
    }

    #[test]
    fn protects_initials() {
        assert_eq!(
            sentences("John A. Smith arrived. He waved."),
            vec!["John A. Smith arrived.", "He waved."]
        );
    }

    #[test]
    fn decimal_numbers_do_not_split() {
        assert_eq!(
            sentences("Shares rose 3.5 percent. Trading closed."),
            vec!["Shares rose 3.5 percent.", "Trading closed."]
        );
    }

    #[test]
    fn lowercase_continuation_does_not_split() {
        assert_eq!(
            sentences("It happened... and then stopped. Done."),
            vec!["It happened... and then stopped.", "Done."]
        );
    }

    #[test]
    fn question_and_exclamation() {
        assert_eq!(
            sentences("Really? Yes! It was 9 p.m. on Friday."),
            vec!["Really?", "Yes!", "It was 9 p.m. on Friday."]
        );
    }

    #[test]
    fn closing_quote_stays_with_sentence() {
        assert_eq!(
            sentences("She said \"stop.\" He did."),
            vec!["She said \"stop.\"", "He did."]
        );
    }

    #[test]
    fn protected_span_suppresses_split() {
        let text = "The firm Yahoo! Inc expanded. It grew.";
        let yahoo = text.find("Yahoo! Inc").unwrap();
        let span = yahoo..yahoo + "Yahoo! Inc".len();
        let ranges = split_sentences(text, &[span]);
        let got: Vec<&str> = ranges.into_iter().map(|r| &text[r]).collect();
        assert_eq!(got, vec!["The firm Yahoo! Inc expanded.", "It grew."]);
    }
}
