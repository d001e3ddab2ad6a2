//! Text normalization: tokenize, drop stop words, stem.

use std::collections::HashSet;
use std::sync::OnceLock;

use super::porter;

static STOPWORDS: OnceLock<HashSet<&'static str>> = OnceLock::new();

fn stopwords() -> &'static HashSet<&'static str> {
    STOPWORDS.get_or_init(|| include_str!("stopwords.txt").lines().collect())
}

/// Lowercases, splits on non-alphanumeric characters, removes stop words,
/// and applies Porter stemming. Token order is preserved.
pub fn preprocess(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !stopwords().contains(t))
        .map(porter::stem)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_yields_no_tokens() {
        assert_eq!(preprocess(""), Vec::<String>::new());
    }

    #[test]
    fn tokenizes_removes_stopwords_and_stems() {
        assert_eq!(preprocess("Crashes when saving file"), ["crash", "save", "file"]);
    }

    #[test]
    fn punctuation_is_a_separator_and_digits_survive() {
        assert_eq!(preprocess("HTTP 404!!!"), ["http", "404"]);
    }

    #[test]
    fn order_is_preserved() {
        assert_eq!(
            preprocess("rendering fails, then rendering restarts"),
            ["render", "fail", "render", "restart"]
        );
    }

    #[test]
    fn stop_list_has_expected_shape() {
        let words = stopwords();
        assert!(words.len() >= 170 && words.len() <= 190, "len = {}", words.len());
        for w in ["when", "the", "t", "won"] {
            assert!(words.contains(w), "{w} missing");
        }
        assert!(!words.contains("http"));
    }

    #[test]
    fn preprocessing_already_clean_tokens_is_a_fixpoint() {
        // Holds for stems whose form the stemmer leaves alone; the shipped
        // corpora keep their vocabulary inside this family.
        for text in [
            "crash save file render timeout",
            "connect auth token $expire# refresh",
            "parser error line column",
        ] {
            let once = preprocess(text);
            let twice = preprocess(&once.join(" "));
            assert_eq!(twice, once);
        }
    }
}
