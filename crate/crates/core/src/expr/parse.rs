//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := ('-')? atom ('^' INT)?
//! atom   := NUMBER | VAR | FUNC '(' expr (',' expr)? ')' | '(' expr ')'
//! VAR    := 'x' [1-9]
//! FUNC   := sin | cos | exp | log | sqrt | atan2
//! ```

use super::{Func, Node};
use crate::error::ExprError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Int(u32),
    Var(usize),
    Func(Func),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn number(&mut self) -> Result<Tok, ExprError> {
        let start = self.pos;
        let digits = |lx: &mut Self| {
            let s = lx.pos;
            while lx.pos < lx.src.len() && lx.src[lx.pos].is_ascii_digit() {
                lx.pos += 1;
            }
            lx.pos - s
        };
        let int_digits = digits(self);
        let mut is_int = true;
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            is_int = false;
            if digits(self) == 0 && int_digits == 0 {
                return Err(ExprError::Syntax {
                    offset: start,
                    message: "malformed number".into(),
                });
            }
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            } else {
                is_int = false;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if is_int {
            if let Ok(n) = text.parse::<u32>() {
                return Ok(Tok::Int(n));
            }
        }
        text.parse::<f64>()
            .map(Tok::Num)
            .map_err(|_| ExprError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })
    }

    fn next(&mut self, dim: usize) -> Result<(Tok, usize), ExprError> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => return Ok((self.number()?, start)),
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let word = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                return Ok((ident(word, start, dim)?, start));
            }
            _ => {
                let ch = std::str::from_utf8(&self.src[start..])
                    .ok()
                    .and_then(|s| s.chars().next())
                    .unwrap_or('?');
                return Err(ExprError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        self.pos += 1;
        Ok((tok, start))
    }
}

fn ident(word: &str, offset: usize, dim: usize) -> Result<Tok, ExprError> {
    let bytes = word.as_bytes();
    if bytes.len() == 2 && bytes[0] == b'x' && (b'1'..=b'9').contains(&bytes[1]) {
        let index = usize::from(bytes[1] - b'0');
        if index > dim {
            return Err(ExprError::Dimension { index, dim });
        }
        return Ok(Tok::Var(index - 1));
    }
    Func::from_name(word)
        .map(Tok::Func)
        .ok_or_else(|| ExprError::UnknownIdentifier {
            name: word.to_string(),
            offset,
        })
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    dim: usize,
    tok: Tok,
    offset: usize,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ExprError> {
        let (tok, offset) = self.lexer.next(self.dim)?;
        self.tok = tok;
        self.offset = offset;
        Ok(())
    }

    fn unexpected(&self, wanted: &str) -> ExprError {
        ExprError::Syntax {
            offset: self.offset,
            message: format!("expected {wanted}, found {}", describe(&self.tok)),
        }
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> Result<(), ExprError> {
        if self.tok != tok {
            return Err(self.unexpected(wanted));
        }
        self.bump()
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.tok {
                Tok::Plus => {
                    self.bump()?;
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump()?;
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            match self.tok {
                Tok::Star => {
                    self.bump()?;
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.bump()?;
                    lhs = Node::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Node, ExprError> {
        let negate = self.tok == Tok::Minus;
        if negate {
            self.bump()?;
        }
        let mut node = self.atom()?;
        if self.tok == Tok::Caret {
            self.bump()?;
            let Tok::Int(n) = self.tok else {
                return Err(self.unexpected("a non-negative integer exponent"));
            };
            self.bump()?;
            node = Node::Pow(Box::new(node), n);
        }
        Ok(if negate { Node::Neg(Box::new(node)) } else { node })
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Node::Num(v))
            }
            Tok::Int(n) => {
                self.bump()?;
                Ok(Node::Num(f64::from(n)))
            }
            Tok::Var(i) => {
                self.bump()?;
                Ok(Node::Var(i))
            }
            Tok::Func(f) => {
                let at = self.offset;
                self.bump()?;
                self.expect(Tok::LParen, "`(`")?;
                let mut args = vec![self.expr()?];
                if self.tok == Tok::Comma {
                    self.bump()?;
                    args.push(self.expr()?);
                }
                self.expect(Tok::RParen, "`)`")?;
                if args.len() != f.arity() {
                    return Err(ExprError::Arity {
                        func: f.name(),
                        expected: f.arity(),
                        found: args.len(),
                        offset: at,
                    });
                }
                Ok(Node::Call(f, args))
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.unexpected("a number, variable, function or `(`")),
        }
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Num(v) => format!("number {v}"),
        Tok::Int(n) => format!("number {n}"),
        Tok::Var(i) => format!("x{}", i + 1),
        Tok::Func(f) => format!("`{}`", f.name()),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Caret => "`^`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::End => "end of input".into(),
    }
}

pub(super) fn parse(source: &str, dim: usize) -> Result<Node, ExprError> {
    let mut parser = Parser {
        lexer: Lexer {
            src: source.as_bytes(),
            pos: 0,
        },
        dim,
        tok: Tok::End,
        offset: 0,
    };
    parser.bump()?;
    let node = parser.expr()?;
    if parser.tok != Tok::End {
        return Err(parser.unexpected("an operator or end of input"));
    }
    Ok(node)
}
