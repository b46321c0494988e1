use super::{ParseDiagnostic, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    Int(i64),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Eq,
    Arrow,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Int(i) => format!("integer {i}"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    column: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

/// Splits `text` into tokens. Lexical errors become diagnostics and the
/// offending input is skipped, so the token stream always ends with `Eof`.
pub(crate) fn tokenize(text: &str, diags: &mut Vec<ParseDiagnostic>) -> Vec<Token> {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    loop {
        while cur.peek().is_some_and(char::is_whitespace) {
            cur.bump();
        }
        let (line, column) = (cur.line, cur.column);
        let span_from = |cur: &Cursor, length: u32| SourceSpan {
            line,
            column,
            length: if cur.line == line { length } else { 1 },
        };
        let Some(c) = cur.peek() else {
            out.push(Token {
                tok: Tok::Eof,
                span: SourceSpan {
                    line,
                    column,
                    length: 0,
                },
            });
            return out;
        };
        let single = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            '=' => Some(Tok::Eq),
            _ => None,
        };
        if let Some(tok) = single {
            cur.bump();
            out.push(Token {
                tok,
                span: span_from(&cur, 1),
            });
            continue;
        }
        if c == '/' {
            cur.bump();
            if cur.peek() == Some('/') {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
            } else {
                diags.push(ParseDiagnostic::error("unexpected character `/`", span_from(&cur, 1)));
            }
            continue;
        }
        if c == '"' {
            cur.bump();
            let mut value = String::new();
            let mut len = 1u32;
            let mut terminated = false;
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
                len += 1;
                match c {
                    '"' => {
                        terminated = true;
                        break;
                    }
                    '\\' => match cur.peek() {
                        Some(e @ ('"' | '\\')) => {
                            cur.bump();
                            len += 1;
                            value.push(e);
                        }
                        Some('n') => {
                            cur.bump();
                            len += 1;
                            value.push('\n');
                        }
                        _ => value.push('\\'),
                    },
                    _ => value.push(c),
                }
            }
            let span = SourceSpan {
                line,
                column,
                length: len,
            };
            if !terminated {
                diags.push(ParseDiagnostic::error("unterminated string", span));
            }
            out.push(Token {
                tok: Tok::Str(value),
                span,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut ident = String::new();
            while let Some(c) = cur.peek().filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
                cur.bump();
                ident.push(c);
            }
            let len = ident.chars().count() as u32;
            out.push(Token {
                tok: Tok::Ident(ident),
                span: span_from(&cur, len),
            });
            continue;
        }
        if c == '-' || c.is_ascii_digit() {
            let mut digits = String::new();
            if c == '-' {
                cur.bump();
                digits.push('-');
                if cur.peek() == Some('>') {
                    cur.bump();
                    out.push(Token {
                        tok: Tok::Arrow,
                        span: span_from(&cur, 2),
                    });
                    continue;
                }
                if !cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                    diags.push(ParseDiagnostic::error("unexpected character `-`", span_from(&cur, 1)));
                    continue;
                }
            }
            while let Some(d) = cur.peek().filter(char::is_ascii_digit) {
                cur.bump();
                digits.push(d);
            }
            let span = span_from(&cur, digits.len() as u32);
            match digits.parse::<i64>() {
                Ok(v) => out.push(Token { tok: Tok::Int(v), span }),
                Err(_) => diags.push(ParseDiagnostic::error("integer literal out of range", span)),
            }
            continue;
        }
        cur.bump();
        diags.push(ParseDiagnostic::error(
            format!("unexpected character `{}`", c.escape_default()),
            span_from(&cur, 1),
        ));
    }
}
