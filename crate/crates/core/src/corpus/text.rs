//! Text normalization, sentence splitting and tokenization.

/// Abbreviations whose trailing period never ends a sentence.
const ABBREVIATIONS: &[&str] = &["sec", "u.s.c", "no", "h.r", "s"];

/// Strips markup, decodes the standard named entities, lower-cases and
/// collapses whitespace (carriage returns included). Idempotent.
pub fn normalize_text(raw: &str) -> String {
    let mut current = normalize_pass(raw);
    loop {
        let next = normalize_pass(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

fn normalize_pass(input: &str) -> String {
    let lowered = input.to_lowercase();
    let decoded = decode_entities(&lowered);
    let stripped = strip_tags(&decoded);
    collapse_whitespace(&stripped)
}

fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    const ENTITIES: [(&str, char); 5] = [
        ("&amp;", '&'),
        ("&lt;", '<'),
        ("&gt;", '>'),
        ("&quot;", '"'),
        ("&apos;", '\''),
    ];
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        match ENTITIES.iter().find(|(name, _)| tail.starts_with(name)) {
            Some((name, ch)) => {
                out.push(*ch);
                rest = &tail[name.len()..];
            }
            None => {
                out.push('&');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Replaces every `<...>` span with a space. An unmatched `<` is kept.
fn strip_tags(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(open) = rest.find('<') {
        match rest[open..].find('>') {
            Some(close) => {
                out.push_str(&rest[..open]);
                out.push(' ');
                rest = &rest[open + close + 1..];
            }
            None => break,
        }
    }
    out.push_str(rest);
    out
}

fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Splits normalized text into sentences at `.`, `!` or `?` followed by
/// whitespace or the end of input. A period after a guarded abbreviation,
/// a single letter, or a number designated by "sec." / "no." does not end a
/// sentence.
pub fn split_sentences(normalized: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let chars: Vec<(usize, char)> = normalized.char_indices().collect();
    let mut start = 0usize;
    for (k, &(byte, ch)) in chars.iter().enumerate() {
        if !matches!(ch, '.' | '!' | '?') {
            continue;
        }
        let next = chars.get(k + 1).map(|&(_, c)| c);
        if next.is_some_and(|c| !c.is_whitespace()) {
            continue;
        }
        if ch == '.' && is_guarded(&normalized[start..byte]) {
            continue;
        }
        let end = byte + ch.len_utf8();
        push_trimmed(&mut sentences, &normalized[start..end]);
        start = end;
    }
    push_trimmed(&mut sentences, &normalized[start..]);
    sentences
}

fn push_trimmed(out: &mut Vec<String>, s: &str) {
    let t = s.trim();
    if !t.is_empty() {
        out.push(t.to_string());
    }
}

/// Whether the word ending `prefix` suppresses a split on the following period.
fn is_guarded(prefix: &str) -> bool {
    let (word, before) = last_word(prefix);
    if word.is_empty() {
        return false;
    }
    if ABBREVIATIONS.contains(&word) {
        return true;
    }
    let mut chars = word.chars();
    let first = chars.next().unwrap();
    if chars.next().is_none() && first.is_alphabetic() {
        return true;
    }
    if word.chars().all(|c| c.is_ascii_digit()) {
        let (designator, _) = last_word(before.trim_end());
        return matches!(designator, "sec" | "no");
    }
    false
}

/// The trailing run of alphanumerics and periods (dots trimmed), and the text before it.
fn last_word(s: &str) -> (&str, &str) {
    let start = s
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_alphanumeric() || *c == '.')
        .last()
        .map_or(s.len(), |(i, _)| i);
    (s[start..].trim_matches('.'), &s[..start])
}

/// Maximal runs of letters and digits, in order.
pub fn tokenize(sentence: &str) -> Vec<String> {
    sentence
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_text("<b>A Bill</b>\r\nTo amend…"), "a bill to amend…");
        assert_eq!(normalize_text("HELLO   WORLD"), "hello world");
        assert_eq!(normalize_text(""), "");
        assert_eq!(normalize_text("Fish &amp; Wildlife &lt;act&gt;"), "fish & wildlife");
        assert_eq!(normalize_text("a < b"), "a < b");
        assert!(!normalize_text("x\r\ny").contains('\r'));
    }

    #[test]
    fn split_examples() {
        assert_eq!(
            split_sentences("sec. 1. short title. this act may be cited."),
            vec!["sec. 1. short title.", "this act may be cited."]
        );
        assert_eq!(split_sentences("one sentence"), vec!["one sentence"]);
        assert!(split_sentences("").is_empty());
        assert_eq!(
            split_sentences("see 42 u.s.c. 1395. amend h.r. 3590! done?"),
            vec!["see 42 u.s.c. 1395.", "amend h.r. 3590!", "done?"]
        );
        assert_eq!(
            split_sentences("subsection (a) applies. paragraph b. ends"),
            vec!["subsection (a) applies.", "paragraph b. ends"]
        );
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("sec. 1. short title"), vec!["sec", "1", "short", "title"]);
        assert_eq!(tokenize("co-sponsor"), vec!["co", "sponsor"]);
        assert!(tokenize("   ").is_empty());
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(raw in "[a-zA-Z0-9 <>&;.!?\r\n\tÉßİ]{0,60}") {
            let once = normalize_text(&raw);
            prop_assert_eq!(normalize_text(&once), once);
        }

        #[test]
        fn sentences_reconstruct_normalized_text(raw in "[a-z0-9 .!?()]{0,80}") {
            let normalized = normalize_text(&raw);
            let sentences = split_sentences(&normalized);
            prop_assert!(sentences.iter().all(|s| !s.is_empty()));
            prop_assert_eq!(sentences.join(" "), normalized);
        }
    }
}
