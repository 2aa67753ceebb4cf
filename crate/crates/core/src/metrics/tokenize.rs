use super::TokenSeq;

/// Characters stripped from the end of a formula token.
const FORMULA_TRAILERS: &[char] = &['.', ',', ';', ':', '!', '?', '"', '\''];

/// Lowercase, split on whitespace, and peel leading and trailing punctuation
/// into separate one-character tokens. A word starting with `=` is a
/// formula and keeps its inner punctuation.
pub fn tokenize(text: &str) -> TokenSeq {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let word = word.to_lowercase();
        let chars: Vec<char> = word.chars().collect();
        let mut start = 0;
        while start < chars.len() && !chars[start].is_alphanumeric() && !(chars[start] == '=' && start + 1 < chars.len()) {
            out.push(chars[start].to_string());
            start += 1;
        }
        if start == chars.len() {
            continue;
        }
        let formula = chars[start] == '=';
        let mut end = chars.len();
        while end > start + 1 {
            let c = chars[end - 1];
            let peel = if formula { FORMULA_TRAILERS.contains(&c) } else { !c.is_alphanumeric() };
            if !peel {
                break;
            }
            end -= 1;
        }
        out.push(chars[start..end].iter().collect());
        out.extend(chars[end..].iter().map(char::to_string));
    }
    TokenSeq::from_tokens(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s).tokens().to_vec()
    }

    #[test]
    fn words_and_punctuation() {
        assert_eq!(toks("Write \"Profit\" to D1."), ["write", "\"", "profit", "\"", "to", "d1", "."]);
        assert_eq!(toks("  (a,   b)  "), ["(", "a", ",", "b", ")"]);
        assert_eq!(toks("don't stop"), ["don't", "stop"]);
    }

    #[test]
    fn formulas_stay_whole() {
        assert_eq!(toks("Use =B2-C2."), ["use", "=b2-c2", "."]);
        assert_eq!(toks("\"=SUM(A1:A3)\","), ["\"", "=sum(a1:a3)", "\"", ","]);
        assert_eq!(toks("x = y"), ["x", "=", "y"]);
    }

    #[test]
    fn pure_punctuation_words() {
        assert_eq!(toks("-- ..."), ["-", "-", ".", ".", "."]);
        assert_eq!(toks(""), Vec::<String>::new());
    }
}
