//! Social-media tokenizer.
//!
//! The rule table is normative and pinned by golden tests; rules apply in
//! this order:
//!
//! 1. Unicode NFC normalization.
//! 2. Lowercase.
//! 3. URLs (`http://`, `https://` or `www.` up to the next whitespace)
//!    become [`URL_MARKER`].
//! 4. @-mentions (`@` followed by ASCII letters/digits/underscores) become
//!    [`USER_MARKER`].
//! 5. Standalone numerals (digit runs, optionally with `.`/`,` groups)
//!    become [`NUMBER_MARKER`]. Digits embedded in a word (`gr8`) stay.
//! 6. Hashtags split into [`HASHTAG_MARKER`] followed by the bare tag body
//!    (`#mkr` -> `<hashtag>`, `mkr`). Tag bodies are not dictionary-split.
//! 7. Elongations collapse: runs of the same alphanumeric character longer
//!    than two shrink to two (`soooo` -> `soo`). Punctuation is exempt, so
//!    `!!!` keeps all three marks.
//! 8. Punctuation splits off, one token per punctuation character.
//! 9. Whitespace separates everything else.
//!
//! Markers pass through the tokenizer unchanged, which makes tokenization
//! idempotent on its own space-joined output. Emoticons get no special
//! class; they tokenize as punctuation runs.

use once_cell::sync::Lazy;
use regex::Regex;
use unicode_normalization::UnicodeNormalization;

pub const URL_MARKER: &str = "<url>";
pub const USER_MARKER: &str = "<user>";
pub const NUMBER_MARKER: &str = "<number>";
pub const HASHTAG_MARKER: &str = "<hashtag>";

/// Marker tokens the tokenizer can emit, in reserved-vocabulary order.
pub const ENTITY_MARKERS: [&str; 4] = [URL_MARKER, USER_MARKER, NUMBER_MARKER, HASHTAG_MARKER];

static URL_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?:https?://|www\.)\S+").unwrap());
static MENTION_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"@[a-z0-9_]+").unwrap());
static NUMBER_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"\b\d+(?:[.,]\d+)*\b").unwrap());
static HASHTAG_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"#(\w+)").unwrap());

fn is_marker(chunk: &str) -> bool {
    ENTITY_MARKERS.contains(&chunk)
}

/// Cap runs of the same alphanumeric character at two.
fn collapse_elongations(chunk: &str) -> String {
    let mut out = String::with_capacity(chunk.len());
    let mut prev: Option<char> = None;
    let mut run = 0usize;
    for ch in chunk.chars() {
        if Some(ch) == prev {
            run += 1;
        } else {
            prev = Some(ch);
            run = 1;
        }
        if run > 2 && ch.is_alphanumeric() {
            continue;
        }
        out.push(ch);
    }
    out
}

/// Split a whitespace-free chunk into word tokens and single-character
/// punctuation tokens.
fn split_punctuation(chunk: &str, out: &mut Vec<String>) {
    let mut word = String::new();
    for ch in chunk.chars() {
        if ch.is_alphanumeric() {
            word.push(ch);
        } else {
            if !word.is_empty() {
                out.push(std::mem::take(&mut word));
            }
            out.push(ch.to_string());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
}

/// Tokenize one raw message according to the rule table above.
/// Empty or whitespace-only input yields an empty sequence.
pub fn tokenize(raw: &str) -> Vec<String> {
    let normalized: String = raw.nfc().collect::<String>().to_lowercase();
    let replaced = URL_RE.replace_all(&normalized, format!(" {URL_MARKER} "));
    let replaced = MENTION_RE.replace_all(&replaced, format!(" {USER_MARKER} "));
    let replaced = NUMBER_RE.replace_all(&replaced, format!(" {NUMBER_MARKER} "));
    let replaced = HASHTAG_RE.replace_all(&replaced, format!(" {HASHTAG_MARKER} ${{1}} "));

    let mut tokens = Vec::new();
    for chunk in replaced.split_whitespace() {
        if is_marker(chunk) {
            tokens.push(chunk.to_string());
            continue;
        }
        let collapsed = collapse_elongations(chunk);
        split_punctuation(&collapsed, &mut tokens);
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(raw: &str) -> Vec<String> {
        tokenize(raw)
    }

    #[test]
    fn empty_input_gives_empty_sequence() {
        assert!(toks("").is_empty());
        assert!(toks("   \t\n").is_empty());
    }

    #[test]
    fn golden_mention_url_punctuation() {
        assert_eq!(
            toks("@user I LOVE this!!! http://t.co/x"),
            vec!["<user>", "i", "love", "this", "!", "!", "!", "<url>"]
        );
    }

    #[test]
    fn golden_hashtag_tail() {
        let tokens = toks(
            "Stop saying dumb blondes with pretty faces as you need a pretty face to pull them off !!! #mkr",
        );
        let tail: Vec<&str> = tokens.iter().rev().take(2).rev().map(String::as_str).collect();
        assert_eq!(tail, vec!["<hashtag>", "mkr"]);
        assert_eq!(&tokens[..4], &["stop", "saying", "dumb", "blondes"]);
    }

    #[test]
    fn elongations_collapse_to_two() {
        assert_eq!(toks("soooo"), vec!["soo"]);
        assert_eq!(toks("sooo gooood"), vec!["soo", "good"]);
        // Runs of exactly two survive.
        assert_eq!(toks("soo cool"), vec!["soo", "cool"]);
    }

    #[test]
    fn punctuation_runs_are_not_collapsed() {
        assert_eq!(toks("what????"), vec!["what", "?", "?", "?", "?"]);
    }

    #[test]
    fn numbers_become_markers_only_when_standalone() {
        assert_eq!(toks("call 911 now"), vec!["call", "<number>", "now"]);
        assert_eq!(toks("3.14 or 1,000"), vec!["<number>", "or", "<number>"]);
        assert_eq!(toks("gr8 m8"), vec!["gr8", "m8"]);
        assert_eq!(toks("50%"), vec!["<number>", "%"]);
    }

    #[test]
    fn urls_and_www_forms() {
        assert_eq!(toks("see https://example.com/a?b=1"), vec!["see", "<url>"]);
        assert_eq!(toks("see www.example.com now"), vec!["see", "<url>", "now"]);
    }

    #[test]
    fn mention_with_trailing_punctuation() {
        assert_eq!(toks("@Some_User!"), vec!["<user>", "!"]);
    }

    #[test]
    fn apostrophes_split_as_punctuation() {
        assert_eq!(toks("don't"), vec!["don", "'", "t"]);
    }

    #[test]
    fn unicode_is_nfc_normalized_and_lowercased() {
        // "é" as e + combining acute composes to one char, then lowercases.
        assert_eq!(toks("CafE\u{0301}"), vec!["caf\u{e9}"]);
    }

    #[test]
    fn markers_pass_through_unchanged() {
        assert_eq!(toks("<url> <user> <number> <hashtag>"),
            vec!["<url>", "<user>", "<number>", "<hashtag>"]);
    }

    #[test]
    fn idempotent_on_rejoined_output() {
        for raw in [
            "@user I LOVE this!!! http://t.co/x",
            "sooooo #MKR2015 is 100% trash, right???",
            "mixed <url> literal and #tags don't faze it",
        ] {
            let first = toks(raw);
            let second = toks(&first.join(" "));
            assert_eq!(first, second, "not idempotent for {raw:?}");
        }
    }
}
