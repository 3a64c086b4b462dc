//! Parsing of model output into interactions.
//!
//! The wire format is one tuple per line: `(YYYYMMDD, <sentence>)`. Parsing
//! is lossy by design: lines that cannot be used are counted, never fatal.

use std::collections::BTreeSet;

use crate::date::DateStamp;

use super::{EntityRef, Interaction, InteractionSource, Variant};

/// What the parser needs to know about the prompt that produced the output.
#[derive(Debug, Clone)]
pub struct ParseContext<'a> {
    pub variant: Variant,
    pub subject: &'a EntityRef,
    pub object: Option<&'a EntityRef>,
    /// For the subject variant: the single chunk date. For the pair variant:
    /// the unique dates of the batch, ascending.
    pub dates: &'a [DateStamp],
    /// `(article_id, source, date)` of every chunk behind the prompt.
    pub provenance: &'a [(String, String, DateStamp)],
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct ParseOutcome {
    pub interactions: Vec<Interaction>,
    pub rejected: u64,
}

fn tuple_parts(line: &str) -> Option<(&str, &str)> {
    let inner = line.strip_prefix('(')?.strip_suffix(')')?;
    let comma = inner.find(',')?;
    Some((inner[..comma].trim(), inner[comma + 1..].trim()))
}

fn contains_ci(haystack: &str, needle: &str) -> bool {
    haystack.to_lowercase().contains(&needle.to_lowercase())
}

impl<'a> ParseContext<'a> {
    fn sources_for(&self, date: DateStamp) -> Vec<InteractionSource> {
        let mut matching: BTreeSet<(String, String)> = self
            .provenance
            .iter()
            .filter(|(_, _, d)| *d == date)
            .map(|(a, s, _)| (a.clone(), s.clone()))
            .collect();
        if matching.is_empty() {
            matching = self
                .provenance
                .iter()
                .map(|(a, s, _)| (a.clone(), s.clone()))
                .collect();
        }
        matching
            .into_iter()
            .map(|(article_id, source)| InteractionSource { article_id, source })
            .collect()
    }

    fn interaction(&self, date: DateStamp, text: &str) -> Interaction {
        Interaction {
            date,
            subject: self.subject.id.clone(),
            object: self.object.map(|o| o.id.clone()),
            text: text.to_string(),
            variant: self.variant,
            provenance: self.sources_for(date),
        }
    }
}

/// Parses one model output into interactions.
///
/// Subject variant: every usable line is stamped with the chunk date (the
/// prompt covers exactly one chunk, so the chunk's timestamp is
/// authoritative even when the line carries its own).
///
/// Pair variant: a line's date must be one of the batch dates, otherwise
/// the line is rejected; a bare line with no tuple structure is treated as
/// an undated interaction and expanded to one copy per unique batch date.
///
/// In both variants a usable sentence must be non-empty and mention the
/// subject by name; `NONE` or an empty output yields no interactions.
pub fn parse_extractions(output: &str, ctx: &ParseContext<'_>) -> ParseOutcome {
    let mut outcome = ParseOutcome::default();
    let trimmed = output.trim();
    if trimmed.is_empty() || trimmed == "NONE" {
        return outcome;
    }
    for line in trimmed.lines() {
        let line = line.trim();
        if line.is_empty() || line == "NONE" {
            continue;
        }
        match tuple_parts(line) {
            Some((date_part, sentence)) => {
                if sentence.is_empty() || !contains_ci(sentence, &ctx.subject.name) {
                    outcome.rejected += 1;
                    continue;
                }
                match (ctx.variant, DateStamp::parse(date_part)) {
                    (Variant::M1, _) => {
                        outcome.interactions.push(ctx.interaction(ctx.dates[0], sentence));
                    }
                    (Variant::M2, Ok(date)) if ctx.dates.contains(&date) => {
                        outcome.interactions.push(ctx.interaction(date, sentence));
                    }
                    (Variant::M2, _) => outcome.rejected += 1,
                    (Variant::Chunk, _) => outcome.rejected += 1,
                }
            }
            None => {
                // A bare sentence: undated.
                if line.is_empty() || !contains_ci(line, &ctx.subject.name) {
                    outcome.rejected += 1;
                    continue;
                }
                match ctx.variant {
                    Variant::M1 => {
                        outcome.interactions.push(ctx.interaction(ctx.dates[0], line));
                    }
                    Variant::M2 => {
                        for &date in ctx.dates {
                            outcome.interactions.push(ctx.interaction(date, line));
                        }
                    }
                    Variant::Chunk => outcome.rejected += 1,
                }
            }
        }
    }
    outcome
}
