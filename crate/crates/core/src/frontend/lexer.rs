use crate::lang::Loc;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    LParen,
    RParen,
    Comma,
    Amp,
    Bar,
    Guard, // |>
    Arrow, // ->
    Eq,
    Colon,
    Minus,
    Underscore,
    Kw(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Guard => "`|>`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Underscore => "`_`".into(),
            Tok::Kw(k) => format!("`{k}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

const KEYWORDS: &[&str] = &["type", "def", "in", "or", "match", "with"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{loc}: {message}")]
pub struct LexError {
    pub loc: Loc,
    pub message: String,
}

/// Splits source text into tokens. `(* … *)` comments nest.
/// With `private_names`, identifiers may carry an `@k` suffix.
pub fn tokenize(src: &str, private_names: bool) -> Result<Vec<(Tok, Loc)>, LexError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let loc = Loc::new(line, col);
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '(' && chars.get(i + 1) == Some(&'*') {
            let mut depth = 0usize;
            loop {
                if i >= chars.len() {
                    return Err(LexError { loc, message: "unterminated comment".into() });
                }
                if chars[i] == '(' && chars.get(i + 1) == Some(&'*') {
                    depth += 1;
                    bump!();
                    bump!();
                } else if chars[i] == '*' && chars.get(i + 1) == Some(&')') {
                    depth -= 1;
                    bump!();
                    bump!();
                    if depth == 0 {
                        break;
                    }
                } else {
                    bump!();
                }
            }
            continue;
        }
        let two = |a: char, b: char| c == a && chars.get(i + 1) == Some(&b);
        let tok = if two('|', '>') {
            bump!();
            bump!();
            Tok::Guard
        } else if two('-', '>') {
            bump!();
            bump!();
            Tok::Arrow
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse().map_err(|_| LexError { loc, message: format!("integer `{text}` out of range") })?;
            Tok::Int(n)
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                bump!();
            }
            if private_names
                && i + 1 < chars.len()
                && chars[i] == '@'
                && chars[i + 1].is_ascii_digit()
            {
                bump!();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump!();
                }
            }
            let text: String = chars[start..i].iter().collect();
            if text == "_" {
                Tok::Underscore
            } else if let Some(k) = KEYWORDS.iter().find(|k| **k == text) {
                Tok::Kw(k)
            } else {
                Tok::Ident(text)
            }
        } else {
            let t = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '&' => Tok::Amp,
                '|' => Tok::Bar,
                '=' => Tok::Eq,
                ':' => Tok::Colon,
                '-' => Tok::Minus,
                other => return Err(LexError { loc, message: format!("unexpected character `{other}`") }),
            };
            bump!();
            t
        };
        toks.push((tok, loc));
    }
    toks.push((Tok::Eof, Loc::new(line, col)));
    Ok(toks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_comments() {
        let toks = tokenize("def x() |> (* a (* nested *) comment *) 0 in x()", false).unwrap();
        let kinds: Vec<_> = toks.into_iter().map(|(t, _)| t).collect();
        assert_eq!(kinds[0], Tok::Kw("def"));
        assert_eq!(kinds[4], Tok::Guard);
        assert_eq!(kinds[5], Tok::Int(0));
        assert_eq!(*kinds.last().unwrap(), Tok::Eof);
    }

    #[test]
    fn private_names_only_when_enabled() {
        assert!(tokenize("State@3(z)", false).is_err());
        let toks = tokenize("State@3(z)", true).unwrap();
        assert_eq!(toks[0].0, Tok::Ident("State@3".into()));
    }

    #[test]
    fn primes_in_identifiers() {
        let toks = tokenize("z'1", false).unwrap();
        assert_eq!(toks[0].0, Tok::Ident("z'1".into()));
    }
}
