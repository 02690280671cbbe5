use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Number,
    Identifier,
    Operator,
    Paren,
    Comma,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    /// Character index of the first character of the lexeme.
    pub position: usize,
}

/// Split `source` into tokens. Whitespace separates tokens and is otherwise ignored.
pub fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = match c {
            '0'..='9' | '.' => {
                i = scan_number(&chars, i)?;
                TokenKind::Number
            }
            'a'..='z' => {
                while i < chars.len()
                    && (chars[i].is_ascii_lowercase() || chars[i].is_ascii_digit() || chars[i] == '_')
                {
                    i += 1;
                }
                TokenKind::Identifier
            }
            '+' | '-' | '*' | '/' | '^' => {
                i += 1;
                TokenKind::Operator
            }
            '(' | ')' => {
                i += 1;
                TokenKind::Paren
            }
            ',' => {
                i += 1;
                TokenKind::Comma
            }
            other => {
                return Err(ParseError::new(format!("unexpected character '{other}'"), start));
            }
        };
        tokens.push(Token {
            kind,
            lexeme: chars[start..i].iter().collect(),
            position: start,
        });
    }
    Ok(tokens)
}

// digits [ '.' digits ] [ ('e'|'E') ['+'|'-'] digits ], or '.' digits ...
fn scan_number(chars: &[char], start: usize) -> Result<usize, ParseError> {
    let mut i = start;
    let digits = |i: &mut usize| {
        let from = *i;
        while *i < chars.len() && chars[*i].is_ascii_digit() {
            *i += 1;
        }
        *i - from
    };
    let mut mantissa = digits(&mut i);
    if i < chars.len() && chars[i] == '.' {
        i += 1;
        mantissa += digits(&mut i);
    }
    if mantissa == 0 {
        return Err(ParseError::new("malformed number", start));
    }
    // The exponent is only consumed when digits follow, so `2e` lexes as `2` then `e`.
    if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
        let mut j = i + 1;
        if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
            j += 1;
        }
        if digits(&mut j) > 0 {
            i = j;
        }
    }
    Ok(i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_increase_and_lexemes_nonempty() {
        let toks = tokenize("-0.1*x1^3 - (4 + sin(t))").unwrap();
        assert!(toks.windows(2).all(|w| w[0].position < w[1].position));
        assert!(toks.iter().all(|t| !t.lexeme.is_empty()));
        assert_eq!(toks[1].lexeme, "0.1");
        assert_eq!(toks[1].kind, TokenKind::Number);
    }

    #[test]
    fn exponent_literals() {
        let toks = tokenize("1.5e-3 2E4 3e").unwrap();
        let lex: Vec<_> = toks.iter().map(|t| t.lexeme.as_str()).collect();
        assert_eq!(lex, ["1.5e-3", "2E4", "3", "e"]);
    }

    #[test]
    fn rejects_uppercase_identifiers() {
        let err = tokenize("X1 + 2").unwrap_err();
        assert_eq!(err.position, 0);
    }

    #[test]
    fn lone_dot_is_malformed() {
        assert!(tokenize("x + .").is_err());
    }
}
