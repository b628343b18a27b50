//! Minimal S-expression reader shared by the problem parser and the SMT-LIB client.

use std::fmt;

use thiserror::Error;

/// 1-based source position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    /// Symbol, keyword or numeral. Quoted `|symbols|` arrive unquoted.
    Atom(String, Span),
    Str(String, Span),
    List(Vec<Sexp>, Span),
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{span}: {message}")]
pub struct SexpError {
    pub span: Span,
    pub message: String,
}

impl Sexp {
    pub fn span(&self) -> Span {
        match self {
            Sexp::Atom(_, s) | Sexp::Str(_, s) | Sexp::List(_, s) => *s,
        }
    }

    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a, _) => Some(a),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(l, _) => Some(l),
            _ => None,
        }
    }

    /// Head symbol of a non-empty list.
    pub fn head(&self) -> Option<&str> {
        self.list().and_then(|l| l.first()).and_then(Sexp::atom)
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a, _) => f.write_str(a),
            Sexp::Str(s, _) => write!(f, "{s:?}"),
            Sexp::List(items, _) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
        }
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl Reader<'_> {
    fn pos(&self) -> Span {
        Span {
            line: self.line,
            col: self.col,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn err<T>(&self, span: Span, message: impl Into<String>) -> Result<T, SexpError> {
        Err(SexpError {
            span,
            message: message.into(),
        })
    }

    fn read(&mut self) -> Result<Option<Sexp>, SexpError> {
        self.skip_ws();
        let start = self.pos();
        let Some(&c) = self.chars.peek() else {
            return Ok(None);
        };
        match c {
            '(' => {
                self.bump();
                let mut items = vec![];
                loop {
                    self.skip_ws();
                    match self.chars.peek() {
                        None => return self.err(start, "unclosed `(`"),
                        Some(')') => {
                            self.bump();
                            return Ok(Some(Sexp::List(items, start)));
                        }
                        Some(_) => items.push(self.read()?.expect("peeked a character")),
                    }
                }
            }
            ')' => self.err(start, "unexpected `)`"),
            '"' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return self.err(start, "unterminated string"),
                        Some('"') => {
                            // SMT-LIB escapes a quote by doubling it.
                            if self.chars.peek() == Some(&'"') {
                                self.bump();
                                s.push('"');
                            } else {
                                return Ok(Some(Sexp::Str(s, start)));
                            }
                        }
                        Some(c) => s.push(c),
                    }
                }
            }
            '|' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return self.err(start, "unterminated quoted symbol"),
                        Some('|') => return Ok(Some(Sexp::Atom(s, start))),
                        Some(c) => s.push(c),
                    }
                }
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | ';' | '"' | '|') {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(Some(Sexp::Atom(s, start)))
            }
        }
    }
}

/// Reads every S-expression in `text`.
pub fn parse_all(text: &str) -> Result<Vec<Sexp>, SexpError> {
    let mut r = Reader {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut out = vec![];
    while let Some(s) = r.read()? {
        out.push(s);
    }
    Ok(out)
}

/// Reads exactly one S-expression.
pub fn parse_one(text: &str) -> Result<Sexp, SexpError> {
    let mut all = parse_all(text)?;
    match all.len() {
        1 => Ok(all.pop().unwrap()),
        0 => Err(SexpError {
            span: Span { line: 1, col: 1 },
            message: "empty input".into(),
        }),
        _ => Err(SexpError {
            span: all[1].span(),
            message: "expected a single expression".into(),
        }),
    }
}

/// Whether `s` can be written as a plain SMT-LIB symbol without `|quotes|`.
pub fn is_simple_symbol(s: &str) -> bool {
    !s.is_empty()
        && !s.starts_with(|c: char| c.is_ascii_digit())
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_lists_with_spans() {
        let s = parse_all("; comment\n(a (b c)\n  |x y| \"s\"\"q\")").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].span(), Span { line: 2, col: 1 });
        let l = s[0].list().unwrap();
        assert_eq!(l[2].atom(), Some("x y"));
        assert_eq!(l[2].span(), Span { line: 3, col: 3 });
        assert_eq!(l[3], Sexp::Str("s\"q".into(), Span { line: 3, col: 9 }));
    }

    #[test]
    fn unclosed_paren_reports_start() {
        let e = parse_all("\n  (a (b)").unwrap_err();
        assert_eq!(e.span, Span { line: 2, col: 3 });
    }

    #[test]
    fn stray_close() {
        assert!(parse_all("a)").is_err());
    }

    #[test]
    fn simple_symbols() {
        assert!(is_simple_symbol("x_F!2"));
        assert!(!is_simple_symbol("a b"));
        assert!(!is_simple_symbol("1x"));
    }
}
