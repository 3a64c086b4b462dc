//! Inline entity-markup scanner.
//!
//! Article bodies arrive with mentions wrapped as `<e id="...">surface</e>`.
//! The scanner strips the tags, producing plain text plus the mention spans
//! (byte offsets into the plain text). Nesting is forbidden. A `<` that does
//! not open one of the two recognized tags is treated as literal text.

/// A mention located in the stripped (plain) body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawMention {
    pub entity_id: String,
    pub surface: String,
    /// Byte offset of the surface in the plain text.
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed entity markup at byte {at}: {reason}")]
pub struct MarkupError {
    pub at: usize,
    pub reason: String,
}

fn err(at: usize, reason: impl Into<String>) -> MarkupError {
    MarkupError {
        at,
        reason: reason.into(),
    }
}

/// Strips `<e id="...">...</e>` markup, returning plain text and mention spans.
pub fn strip_markup(body: &str) -> Result<(String, Vec<RawMention>), MarkupError> {
    let mut plain = String::with_capacity(body.len());
    let mut mentions = Vec::new();
    // (entity_id, plain offset where the surface starts, body offset of the tag)
    let mut open: Option<(String, usize, usize)> = None;

    let bytes = body.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let rest = &body[i..];
        if rest.starts_with("</e>") {
            let (id, plain_start, tag_at) = open
                .take()
                .ok_or_else(|| err(i, "closing </e> without an open tag"))?;
            let surface = plain[plain_start..].to_string();
            if surface.trim().is_empty() {
                return Err(err(tag_at, "mention has an empty surface form"));
            }
            mentions.push(RawMention {
                entity_id: id,
                surface,
                start: plain_start,
                end: plain.len(),
            });
            i += 4;
        } else if rest.starts_with("<e>") || rest.starts_with("<e ") {
            if open.is_some() {
                return Err(err(i, "nested <e> tags are not allowed"));
            }
            let tag = rest
                .strip_prefix("<e id=\"")
                .ok_or_else(|| err(i, "expected <e id=\"...\">"))?;
            let quote = tag
                .find('"')
                .ok_or_else(|| err(i, "unterminated id attribute"))?;
            let id = &tag[..quote];
            if id.is_empty() {
                return Err(err(i, "mention id is empty"));
            }
            if !tag[quote + 1..].starts_with('>') {
                return Err(err(i, "expected '>' after id attribute"));
            }
            open = Some((id.to_string(), plain.len(), i));
            i += "<e id=\"".len() + quote + 2;
        } else {
            let ch = rest.chars().next().unwrap();
            plain.push(ch);
            i += ch.len_utf8();
        }
    }
    if let Some((_, _, tag_at)) = open {
        return Err(err(tag_at, "unclosed <e> tag"));
    }
    Ok((plain, mentions))
}

/// Removes bare `<e>`, `</e>`, and `<e id="...">` tags without span tracking.
pub fn strip_tags(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < text.len() {
        let rest = &text[i..];
        if rest.starts_with("</e>") {
            i += 4;
        } else if rest.starts_with("<e>") {
            i += 3;
        } else if rest.starts_with("<e id=\"") {
            match rest.find('>') {
                Some(p) => i += p + 1,
                None => break,
            }
        } else {
            let ch = rest.chars().next().unwrap();
            out.push(ch);
            i += ch.len_utf8();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_single_tag() {
        let (plain, mentions) = strip_markup(r#"<e id="Q1">Ada</e> spoke."#).unwrap();
        assert_eq!(plain, "Ada spoke.");
        assert_eq!(mentions.len(), 1);
        assert_eq!(mentions[0].entity_id, "Q1");
        assert_eq!(mentions[0].surface, "Ada");
        assert_eq!(&plain[mentions[0].start..mentions[0].end], "Ada");
    }

    #[test]
    fn no_tags_is_identity() {
        let (plain, mentions) = strip_markup("Nothing here. x < y holds.").unwrap();
        assert_eq!(plain, "Nothing here. x < y holds.");
        assert!(mentions.is_empty());
    }

    #[test]
    fn rejects_unclosed_tag() {
        assert!(strip_markup(r#"<e id="Q1">Ada spoke."#).is_err());
    }

    #[test]
    fn rejects_nested_tags() {
        assert!(strip_markup(r#"<e id="Q1">Ada <e id="Q2">B</e></e>"#).is_err());
    }

    #[test]
    fn rejects_stray_close() {
        assert!(strip_markup("Ada</e> spoke.").is_err());
    }

    #[test]
    fn rejects_missing_id() {
        assert!(strip_markup("<e>Ada</e> spoke.").is_err());
        assert!(strip_markup(r#"<e id="">Ada</e>"#).is_err());
    }

    #[test]
    fn strip_tags_drops_markup() {
        assert_eq!(strip_tags("<e>Ada</e> met <e>Bo</e>."), "Ada met Bo.");
        assert_eq!(strip_tags(r#"<e id="Q1">Ada</e>."#), "Ada.");
    }
}
