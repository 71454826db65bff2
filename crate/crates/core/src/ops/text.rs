//! Cleaning and tokenization of text columns.

use crate::types::Value;

/// Embedded English stopword list (the common 179-word NLTK list).
pub const STOPWORDS: &[&str] = &[
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're", "you've", "you'll",
    "you'd", "your", "yours", "yourself", "yourselves", "he", "him", "his", "himself", "she", "she's",
    "her", "hers", "herself", "it", "it's", "its", "itself", "they", "them", "their", "theirs",
    "themselves", "what", "which", "who", "whom", "this", "that", "that'll", "these", "those", "am",
    "is", "are", "was", "were", "be", "been", "being", "have", "has", "had", "having", "do", "does",
    "did", "doing", "a", "an", "the", "and", "but", "if", "or", "because", "as", "until", "while",
    "of", "at", "by", "for", "with", "about", "against", "between", "into", "through", "during",
    "before", "after", "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over",
    "under", "again", "further", "then", "once", "here", "there", "when", "where", "why", "how", "all",
    "any", "both", "each", "few", "more", "most", "other", "some", "such", "no", "nor", "not", "only",
    "own", "same", "so", "than", "too", "very", "s", "t", "can", "will", "just", "don", "don't",
    "should", "should've", "now", "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren", "aren't",
    "couldn", "couldn't", "didn", "didn't", "doesn", "doesn't", "hadn", "hadn't", "hasn", "hasn't",
    "haven", "haven't", "isn", "isn't", "ma", "mightn", "mightn't", "mustn", "mustn't", "needn",
    "needn't", "shan", "shan't", "shouldn", "shouldn't", "wasn", "wasn't", "weren", "weren't", "won",
    "won't", "wouldn", "wouldn't",
];

pub fn is_stopword(word: &str) -> bool {
    STOPWORDS.contains(&word)
}

/// Simple (one-to-one) Unicode lowercase mapping.
pub fn lowercase(s: &str) -> String {
    s.chars().map(|c| c.to_lowercase().next().unwrap_or(c)).collect()
}

pub fn strip_punct(s: &str) -> String {
    s.chars().filter(|c| !c.is_ascii_punctuation()).collect()
}

/// Drops whitespace-delimited tokens that are stopwords. Matching ignores
/// case and surrounding punctuation; kept tokens are joined by one space.
pub fn remove_stopwords(s: &str) -> String {
    s.split_whitespace()
        .filter(|tok| {
            let key = lowercase(tok.trim_matches(|c: char| c.is_ascii_punctuation() && c != '\''));
            !is_stopword(&key)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Splits on Unicode whitespace after stripping ASCII punctuation.
pub fn tokenize(s: &str) -> Vec<String> {
    strip_punct(s).split_whitespace().map(str::to_string).collect()
}

/// Token-boundary containment after lowercasing both sides.
pub fn contains_token(text: &str, needle: &str) -> bool {
    let needle = tokenize(&lowercase(needle));
    if needle.is_empty() {
        return false;
    }
    let hay = tokenize(&lowercase(text));
    hay.windows(needle.len()).any(|w| w == needle.as_slice())
}

pub(crate) fn tokens_value(tokens: Vec<String>) -> Value {
    Value::List(tokens.into_iter().map(Value::Str).collect())
}

/// Token strings of a `List(String)` cell; `Null` is an empty document.
pub(crate) fn cell_tokens(v: &Value) -> Option<Vec<&str>> {
    match v {
        Value::Null => Some(Vec::new()),
        Value::List(items) => items
            .iter()
            .map(|i| match i {
                Value::Str(s) => Some(s.as_str()),
                _ => None,
            })
            .collect(),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stopword_list_is_pinned() {
        assert_eq!(STOPWORDS.len(), 179);
        let mut sorted = STOPWORDS.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), STOPWORDS.len());
    }

    #[test]
    fn lowercase_examples() {
        assert_eq!(lowercase("Very Comfy Shoes"), "very comfy shoes");
        assert_eq!(lowercase(""), "");
        // simple mapping keeps one char per char
        assert_eq!(lowercase("İ").chars().count(), 1);
        assert_eq!(lowercase("ÄÖÜ"), "äöü");
    }

    #[test]
    fn remove_stopwords_against_membership_oracle() {
        let input = "the shoes are comfy";
        let oracle: Vec<&str> = input.split(' ').filter(|w| !STOPWORDS.contains(w)).collect();
        assert_eq!(remove_stopwords(input), oracle.join(" "));
        assert_eq!(remove_stopwords(input), "shoes comfy");
        // boundary aware: "there" is a stopword, "thereafter" is not
        assert_eq!(remove_stopwords("thereafter The"), "thereafter");
        assert_eq!(remove_stopwords("Comfy, and warm."), "Comfy, warm.");
    }

    #[test]
    fn strip_punct_is_ascii_only() {
        assert_eq!(strip_punct("comfy, shoes!"), "comfy shoes");
        assert_eq!(strip_punct("naïve—ok"), "naïve—ok");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("comfy shoes"), vec!["comfy", "shoes"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("comfy, shoes!"), vec!["comfy", "shoes"]);
        assert_eq!(tokenize(" a\tb\u{2003}c\n"), vec!["a", "b", "c"]);
    }

    #[test]
    fn tokenize_matches_reference_split() {
        // independent reference: replace ASCII punctuation by nothing, split on any whitespace run
        fn reference(s: &str) -> Vec<String> {
            let mut out = Vec::new();
            let mut cur = String::new();
            for c in s.chars() {
                if c.is_whitespace() {
                    if !cur.is_empty() {
                        out.push(std::mem::take(&mut cur));
                    }
                } else if !(c.is_ascii() && "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~".contains(c)) {
                    cur.push(c);
                }
            }
            if !cur.is_empty() {
                out.push(cur);
            }
            out
        }
        for s in ["comfy, shoes!", "Don't   buy -- seriously.", "a.b,c", "", "ünï cödé!!"] {
            assert_eq!(tokenize(s), reference(s), "{s:?}");
        }
    }

    #[test]
    fn contains_is_token_bounded() {
        assert!(contains_token("Very COMFY shoes!", "comfy"));
        assert!(!contains_token("uncomfy shoes", "comfy"));
        assert!(contains_token("so comfy, truly", "Comfy"));
        assert!(!contains_token("anything", ""));
    }
}
