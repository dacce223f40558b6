//! Tokenization and abbreviation canonicalization of free-text notes.

pub const HEPATITIS_B: &str = "hepatitis-b";
pub const HEPATITIS_C: &str = "hepatitis-c";

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-' || c == '\''
}

/// Splits lower-cased text into word tokens (alphanumerics with internal `-`
/// or `'`) and single-character punctuation tokens.
fn tokenize(text: &str) -> Vec<String> {
    let lowered: String = text
        .chars()
        .map(|c| match c {
            '\u{2018}' | '\u{2019}' | '\u{02bc}' => '\'',
            '\u{2010}'..='\u{2013}' => '-',
            _ => c,
        })
        .collect::<String>()
        .to_lowercase();

    let mut tokens = Vec::new();
    let mut word = String::new();
    for c in lowered.chars() {
        if is_word_char(c) {
            word.push(c);
            continue;
        }
        if !word.is_empty() {
            tokens.push(std::mem::take(&mut word));
        }
        if !c.is_whitespace() {
            tokens.push(c.to_string());
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}

fn single_token_alias(token: &str) -> Option<&'static str> {
    Some(match token {
        "hbv" | "hepb" | "hep-b" | "hepatitis-b" => HEPATITIS_B,
        "hcv" | "hepc" | "hep-c" | "hepatitis-c" => HEPATITIS_C,
        "hx" => "history",
        _ => return None,
    })
}

fn is_hep_stem(token: &str) -> bool {
    matches!(token, "hep" | "hepatitis")
}

/// Normalizes a note into canonical tokens.
///
/// `hep b`, `hepatitis b`, `hep. b`, `hbv` all become `hepatitis-b` (likewise
/// for C), `hx` becomes `history`, and a conjoined letter such as the `c` in
/// `hep b and c` or `hep b/c` is expanded to `hepatitis-c`. The output joined
/// with single spaces normalizes to itself.
pub fn normalize_note(text: &str) -> Vec<String> {
    let raw = tokenize(text);
    let mut out: Vec<String> = Vec::with_capacity(raw.len());
    let mut i = 0;
    while i < raw.len() {
        let tok = raw[i].as_str();
        if is_hep_stem(tok) {
            // hep b / hep . b
            let letter_at = if raw.get(i + 1).map(String::as_str) == Some(".") { i + 2 } else { i + 1 };
            match raw.get(letter_at).map(String::as_str) {
                Some("b") => {
                    out.push(HEPATITIS_B.to_string());
                    i = letter_at + 1;
                    continue;
                }
                Some("c") => {
                    out.push(HEPATITIS_C.to_string());
                    i = letter_at + 1;
                    continue;
                }
                _ => {}
            }
        }
        if let Some(alias) = single_token_alias(tok) {
            out.push(alias.to_string());
            i += 1;
            continue;
        }
        // `hepatitis-b and c`, `hepatitis-b / c`, `hepatitis-b & c`
        if (tok == "b" || tok == "c") && out.len() >= 2 {
            let joiner = out[out.len() - 1].as_str();
            let previous = out[out.len() - 2].as_str();
            let expected = if tok == "c" { HEPATITIS_B } else { HEPATITIS_C };
            if previous == expected && matches!(joiner, "and" | "/" | "&" | "," | "+" | "or") {
                out.push(if tok == "c" { HEPATITIS_C } else { HEPATITIS_B }.to_string());
                i += 1;
                continue;
            }
        }
        out.push(tok.to_string());
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(text: &str) -> Vec<String> {
        normalize_note(text)
    }

    #[test]
    fn case_whitespace_and_abbreviations() {
        assert_eq!(toks("  Known Hep C "), vec!["known", "hepatitis-c"]);
        assert_eq!(toks("HBV pos"), vec!["hepatitis-b", "pos"]);
        assert_eq!(toks("Hx hepatitis B"), vec!["history", "hepatitis-b"]);
        assert_eq!(toks("hep. c"), vec!["hepatitis-c"]);
        assert_eq!(toks("HEP-C"), vec!["hepatitis-c"]);
    }

    #[test]
    fn punctuation_isolated() {
        assert_eq!(toks("?Hep C"), vec!["?", "hepatitis-c"]);
        assert_eq!(toks("Hepatitis cause?"), vec!["hepatitis", "cause", "?"]);
        assert_eq!(toks("ARVT/ART"), vec!["arvt", "/", "art"]);
        assert_eq!(toks("Crohn\u{2019}s"), vec!["crohn's"]);
    }

    #[test]
    fn conjoined_letters() {
        assert_eq!(toks("Hep B and C"), vec!["hepatitis-b", "and", "hepatitis-c"]);
        assert_eq!(toks("hep b/c"), vec!["hepatitis-b", "/", "hepatitis-c"]);
        assert_eq!(toks("hep c & b"), vec!["hepatitis-c", "&", "hepatitis-b"]);
        // a lone letter elsewhere is untouched
        assert_eq!(toks("vitamin b and c"), vec!["vitamin", "b", "and", "c"]);
    }

    #[test]
    fn empty_and_blank() {
        assert!(toks("").is_empty());
        assert!(toks(" \t\n ").is_empty());
    }

    fn idempotent(text: &str) {
        let once = normalize_note(text);
        let twice = normalize_note(&once.join(" "));
        assert_eq!(once, twice, "input {text:?}");
    }

    #[test]
    fn idempotent_on_corpus() {
        for text in [
            "Known Hep C", "?Hep C", "Hep C?", "Hep B and C", "hep b/c", "Hx IVDA, hep c pos",
            "RANTS (routine antenatal screen)", "12-hour fast", "pre- and post-pregnancy screening",
            "H.H", "hep . b", "İstanbul", "hepatitis - b",
        ] {
            idempotent(text);
        }
    }

    proptest! {
        #[test]
        fn idempotent_on_arbitrary_text(text in "\\PC{0,40}") {
            let once = normalize_note(&text);
            prop_assert_eq!(normalize_note(&once.join(" ")), once);
        }

        #[test]
        fn idempotent_on_note_like_text(text in "(hep|hepatitis|b|c|and|/|\\?|\\.|known|hx|hcv| ){0,12}") {
            let once = normalize_note(&text);
            prop_assert_eq!(normalize_note(&once.join(" ")), once);
        }
    }
}
