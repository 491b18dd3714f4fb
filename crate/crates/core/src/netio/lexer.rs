use std::fmt;

/// Line and column (both 1-based) of a token's first character.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Word(String),
    Colon,
    Bar,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Equals,
    At,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "`{w}`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Bar => f.write_str("`|`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Equals => f.write_str("`=`"),
            Tok::At => f.write_str("`@`"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub(crate) fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '.' | '+' | '-')
}

/// Splits `text` into tokens. `#` comments run to end of line. Fails at the
/// first character that cannot start a token.
pub fn tokenize(text: &str) -> Result<Vec<Token>, (Span, char)> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1;
    let mut column = 1;
    while let Some(&c) = chars.peek() {
        let span = Span { line, column };
        if c == '\n' {
            chars.next();
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            column += 1;
            continue;
        }
        if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
            }
            continue;
        }
        let punct = match c {
            ':' => Some(Tok::Colon),
            '|' => Some(Tok::Bar),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ';' => Some(Tok::Semi),
            '=' => Some(Tok::Equals),
            '@' => Some(Tok::At),
            _ => None,
        };
        if let Some(tok) = punct {
            chars.next();
            column += 1;
            out.push(Token { tok, span });
            continue;
        }
        if !is_word_char(c) {
            return Err((span, c));
        }
        let mut word = String::new();
        while let Some(&c) = chars.peek() {
            if !is_word_char(c) {
                break;
            }
            word.push(c);
            chars.next();
            column += 1;
        }
        out.push(Token {
            tok: Tok::Word(word),
            span,
        });
    }
    Ok(out)
}
