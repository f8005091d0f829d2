use super::{Diagnostic, DiagnosticKind};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(u64),
    Str(String),
    /// `#| ...` documentation line.
    Gloss(String),
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Colon,
    Dot,
    Minus,
    Lt,
    Le,
    EqEq,
    Ne,
    Ge,
    Gt,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("integer {i}"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Gloss(_) => "documentation comment".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::EqEq => "`==`".into(),
            Tok::Ne => "`!=`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
    /// Byte offsets into the source.
    pub start: usize,
    pub end: usize,
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut lx = Lexer {
        src,
        chars: src.char_indices().peekable(),
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        let t = lx.next_token()?;
        let eof = t.tok == Tok::Eof;
        out.push(t);
        if eof {
            return Ok(out);
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    col: usize,
}

impl Lexer<'_> {
    fn bump(&mut self) -> Option<(usize, char)> {
        let next = self.chars.next();
        if let Some((_, c)) = next {
            if c == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
        next
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn offset(&mut self) -> usize {
        self.chars.peek().map_or(self.src.len(), |&(i, _)| i)
    }

    fn err(&self, line: usize, col: usize, msg: String) -> Diagnostic {
        Diagnostic {
            line,
            col,
            kind: DiagnosticKind::Syntax,
            message: msg,
        }
    }

    fn next_token(&mut self) -> Result<Token, Diagnostic> {
        // whitespace and plain comments
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    let mut rest = self.chars.clone();
                    rest.next();
                    if rest.peek().map(|&(_, c)| c) == Some('|') {
                        break;
                    }
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
        let (line, col, start) = (self.line, self.col, self.offset());
        let make = |tok, end| Token {
            tok,
            line,
            col,
            start,
            end,
        };
        let Some((_, c)) = self.bump() else {
            return Ok(make(Tok::Eof, start));
        };
        let tok = match c {
            '#' => {
                self.bump(); // '|'
                let mut text = String::new();
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    text.push(c);
                    self.bump();
                }
                Tok::Gloss(text.trim().to_string())
            }
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            ':' => Tok::Colon,
            '.' => Tok::Dot,
            '-' => Tok::Minus,
            '<' | '>' | '=' | '!' => {
                let eq = self.peek() == Some('=');
                if eq {
                    self.bump();
                }
                match (c, eq) {
                    ('<', false) => Tok::Lt,
                    ('<', true) => Tok::Le,
                    ('>', false) => Tok::Gt,
                    ('>', true) => Tok::Ge,
                    ('=', true) => Tok::EqEq,
                    ('!', true) => Tok::Ne,
                    _ => {
                        return Err(self.err(
                            line,
                            col,
                            format!("unexpected `{c}`; expected a comparison operator"),
                        ))
                    }
                }
            }
            '"' => {
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None | Some((_, '\n')) => {
                            return Err(self.err(line, col, "unterminated string literal".into()))
                        }
                        Some((_, '"')) => break,
                        Some((_, '\\')) => match self.bump() {
                            Some((_, '"')) => s.push('"'),
                            Some((_, '\\')) => s.push('\\'),
                            _ => {
                                return Err(self.err(
                                    self.line,
                                    self.col,
                                    "invalid escape in string literal".into(),
                                ))
                            }
                        },
                        Some((_, c)) => s.push(c),
                    }
                }
                Tok::Str(s)
            }
            c if c.is_ascii_digit() => {
                let mut digits = c.to_string();
                while let Some(d) = self.peek().filter(char::is_ascii_digit) {
                    digits.push(d);
                    self.bump();
                }
                let v = digits
                    .parse::<u64>()
                    .ok()
                    .filter(|&v| v <= i64::MAX as u64)
                    .ok_or_else(|| self.err(line, col, format!("integer {digits} is too large")))?;
                Tok::Int(v)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = c.to_string();
                while let Some(d) = self.peek().filter(|d| d.is_ascii_alphanumeric() || *d == '_') {
                    s.push(d);
                    self.bump();
                }
                Tok::Ident(s)
            }
            other => {
                return Err(self.err(line, col, format!("unexpected character {other:?}")));
            }
        };
        let end = self.offset();
        Ok(make(tok, end))
    }
}
