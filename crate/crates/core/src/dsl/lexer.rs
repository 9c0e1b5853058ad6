use super::{Diagnostic, SourceSpan};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    Dollar,
    LParen,
    RParen,
    Comma,
    Colon,
    Tilde,
    Arrow,
    Op(&'static str),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Int(i) => format!("number {i}"),
            Tok::Float(f) => format!("number {f}"),
            Tok::Str(_) => "string literal".into(),
            Tok::Dollar => "'$'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Colon => "':'".into(),
            Tok::Tilde => "'~'".into(),
            Tok::Arrow => "'->'".into(),
            Tok::Op(op) => format!("'{op}'"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub start: usize,
    pub end: usize,
}

pub(crate) fn lex(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |start: usize, end: usize, msg: String| {
        Err(Diagnostic::error(msg, SourceSpan::new(src, start, end)))
    };
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            Tok::Ident(src[start..i].to_string())
        } else if c.is_ascii_digit()
            || (c == b'-' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit))
        {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let mut float = false;
            if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                float = true;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    float = true;
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            if float {
                match text.parse::<f64>() {
                    Ok(f) if f.is_finite() => Tok::Float(f),
                    _ => return err(start, i, format!("float literal {text} is out of range")),
                }
            } else {
                match text.parse::<i64>() {
                    Ok(n) => Tok::Int(n),
                    Err(_) => {
                        return err(start, i, format!("integer literal {text} is out of range"))
                    }
                }
            }
        } else if c == b'"' {
            i += 1;
            let mut s = String::new();
            loop {
                let Some(ch) = src[i..].chars().next() else {
                    return err(start, i, "unterminated string literal".into());
                };
                match ch {
                    '"' => {
                        i += 1;
                        break;
                    }
                    '\\' => {
                        let esc = src[i + 1..].chars().next();
                        let decoded = match esc {
                            Some('"') => '"',
                            Some('\\') => '\\',
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some('r') => '\r',
                            Some(other) => {
                                let end = i + 1 + other.len_utf8();
                                return err(i, end, format!("unknown escape \\{other}"));
                            }
                            None => return err(start, i + 1, "unterminated string literal".into()),
                        };
                        s.push(decoded);
                        i += 2;
                    }
                    other => {
                        s.push(other);
                        i += other.len_utf8();
                    }
                }
            }
            Tok::Str(s)
        } else {
            let two = bytes.get(i + 1).copied();
            let (tok, len) = match (c, two) {
                (b'-', Some(b'>')) => (Tok::Arrow, 2),
                (b'!', Some(b'=')) => (Tok::Op("!="), 2),
                (b'<', Some(b'=')) => (Tok::Op("<="), 2),
                (b'>', Some(b'=')) => (Tok::Op(">="), 2),
                (b'=', _) => (Tok::Op("="), 1),
                (b'<', _) => (Tok::Op("<"), 1),
                (b'>', _) => (Tok::Op(">"), 1),
                (b'$', _) => (Tok::Dollar, 1),
                (b'(', _) => (Tok::LParen, 1),
                (b')', _) => (Tok::RParen, 1),
                (b',', _) => (Tok::Comma, 1),
                (b':', _) => (Tok::Colon, 1),
                (b'~', _) => (Tok::Tilde, 1),
                _ => {
                    let ch = src[i..].chars().next().expect("in bounds");
                    return err(i, i + ch.len_utf8(), format!("unexpected character {ch:?}"));
                }
            };
            i += len;
            tok
        };
        out.push(Token { tok, start, end: i });
    }
    out.push(Token {
        tok: Tok::Eof,
        start: src.len(),
        end: src.len(),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        lex(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn numbers() {
        assert_eq!(
            toks("1 -2 3.5 1e3 -0.25E-2 x-1"),
            vec![
                Tok::Int(1),
                Tok::Int(-2),
                Tok::Float(3.5),
                Tok::Float(1000.0),
                Tok::Float(-0.0025),
                Tok::Ident("x".into()),
                Tok::Int(-1),
                Tok::Eof
            ]
        );
        assert_eq!(toks("-9223372036854775808")[0], Tok::Int(i64::MIN));
        assert!(lex("9223372036854775808").is_err());
        assert!(lex("1e400").is_err());
    }

    #[test]
    fn strings_and_comments() {
        assert_eq!(
            toks("\"a\\\"b\\n\" # comment\n->"),
            vec![Tok::Str("a\"b\n".into()), Tok::Arrow, Tok::Eof]
        );
        assert!(lex("\"open").is_err());
        assert!(lex("\"bad \\q\"").is_err());
        assert!(lex("\"trailing \\").is_err());
    }

    #[test]
    fn unexpected_character_span() {
        let d = lex("ab\n  @").unwrap_err();
        assert_eq!((d.span.line, d.span.column), (2, 3));
    }
}
