//! Recursive-descent parser for time expressions.
//!
//! ```text
//! expr      = term { ("+" | "-") term } ;
//! term      = unary { ("*" | "/") unary } ;
//! unary     = "-" unary | power ;
//! power     = atom [ "^" [ "-" ] integer ] ;
//! atom      = number | "t" | "pi" | call | "(" expr ")" ;
//! call      = ("sin" | "cos" | "abs") "(" expr ")"
//!           | "piecewise" "(" branch { "," branch } [ "," "else" ":" expr ] ")" ;
//! branch    = "t" ("<" | "<=" | ">" | ">=") expr ":" expr ;
//! ```
//!
//! The right-hand side of a guard must not depend on `t`.

use super::{Cmp, Expr, Guard, TimeFnError};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Colon,
    Cmp(Cmp),
    Eof,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, TimeFnError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (tok, at) = lx.next()?;
            let eof = tok == Tok::Eof;
            out.push((tok, at));
            if eof {
                return Ok(out);
            }
        }
    }

    fn peek_byte(&self, k: usize) -> Option<u8> {
        self.src.as_bytes().get(self.pos + k).copied()
    }

    fn next(&mut self) -> Result<(Tok, usize), TimeFnError> {
        while let Some(b) = self.peek_byte(0) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
        let start = self.pos;
        let Some(b) = self.peek_byte(0) else {
            return Ok((Tok::Eof, start));
        };
        let single = |t: Tok, lx: &mut Self| {
            lx.pos += 1;
            Ok((t, start))
        };
        match b {
            b'+' => single(Tok::Plus, self),
            b'-' => single(Tok::Minus, self),
            b'*' => single(Tok::Star, self),
            b'/' => single(Tok::Slash, self),
            b'^' => single(Tok::Caret, self),
            b'(' => single(Tok::LParen, self),
            b')' => single(Tok::RParen, self),
            b',' => single(Tok::Comma, self),
            b':' => single(Tok::Colon, self),
            b'<' | b'>' => {
                let eq = self.peek_byte(1) == Some(b'=');
                self.pos += if eq { 2 } else { 1 };
                let op = match (b, eq) {
                    (b'<', false) => Cmp::Lt,
                    (b'<', true) => Cmp::Le,
                    (b'>', false) => Cmp::Gt,
                    _ => Cmp::Ge,
                };
                Ok((Tok::Cmp(op), start))
            }
            b'0'..=b'9' | b'.' => self.number(start),
            b if b.is_ascii_alphabetic() || b == b'_' => {
                while let Some(c) = self.peek_byte(0) {
                    if c.is_ascii_alphanumeric() || c == b'_' {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                Ok((Tok::Ident(self.src[start..self.pos].to_string()), start))
            }
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                Err(TimeFnError::SyntaxError {
                    offset: start,
                    message: format!("unexpected character {ch:?}"),
                })
            }
        }
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize), TimeFnError> {
        let digits = |lx: &mut Self| {
            while matches!(lx.peek_byte(0), Some(b'0'..=b'9')) {
                lx.pos += 1;
            }
        };
        digits(self);
        if self.peek_byte(0) == Some(b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.peek_byte(0), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek_byte(0), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek_byte(0), Some(b'0'..=b'9')) {
                digits(self);
            } else {
                self.pos = save;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(|v| (Tok::Num(v), start))
            .map_err(|_| TimeFnError::SyntaxError {
                offset: start,
                message: format!("malformed number {text:?}"),
            })
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    k: usize,
}

pub(super) fn parse(src: &str) -> Result<Expr, TimeFnError> {
    let mut p = Parser {
        toks: Lexer::tokens(src)?,
        k: 0,
    };
    let e = p.expr()?;
    match p.peek() {
        Tok::Eof => Ok(e),
        other => Err(p.error(format!("unexpected {}", describe(other)))),
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("identifier {s:?}"),
        Tok::Eof => "end of input".to_string(),
        other => format!("token {other:?}"),
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.k].0
    }

    fn offset(&self) -> usize {
        self.toks[self.k].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.k].0.clone();
        if self.k + 1 < self.toks.len() {
            self.k += 1;
        }
        t
    }

    fn error(&self, message: String) -> TimeFnError {
        TimeFnError::SyntaxError {
            offset: self.offset(),
            message,
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), TimeFnError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {what}, found {}", describe(self.peek()))))
        }
    }

    fn expr(&mut self) -> Result<Expr, TimeFnError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, TimeFnError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, TimeFnError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, TimeFnError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let at = self.offset();
        match self.bump() {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => {
                let k = v as i32;
                Ok(Expr::Pow(Box::new(base), if negative { -k } else { k }))
            }
            _ => Err(TimeFnError::SyntaxError {
                offset: at,
                message: "exponent must be an integer literal".to_string(),
            }),
        }
    }

    fn atom(&mut self) -> Result<Expr, TimeFnError> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "t" => Ok(Expr::T),
                "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                "sin" | "cos" | "abs" => {
                    self.expect(Tok::LParen, "'('")?;
                    let arg = Box::new(self.expr()?);
                    self.expect(Tok::RParen, "')'")?;
                    Ok(match name.as_str() {
                        "sin" => Expr::Sin(arg),
                        "cos" => Expr::Cos(arg),
                        _ => Expr::Abs(arg),
                    })
                }
                "piecewise" => self.piecewise(),
                _ => Err(TimeFnError::UnknownIdentifier { name, offset: at }),
            },
            Tok::Eof => Err(TimeFnError::SyntaxError {
                offset: at,
                message: "unexpected end of input".to_string(),
            }),
            other => Err(TimeFnError::SyntaxError {
                offset: at,
                message: format!("unexpected {}", describe(&other)),
            }),
        }
    }

    fn piecewise(&mut self) -> Result<Expr, TimeFnError> {
        self.expect(Tok::LParen, "'('")?;
        let mut branches = Vec::new();
        let mut otherwise = None;
        loop {
            if matches!(self.peek(), Tok::Ident(s) if s == "else") {
                self.bump();
                self.expect(Tok::Colon, "':'")?;
                otherwise = Some(Box::new(self.expr()?));
                self.expect(Tok::RParen, "')' after else branch")?;
                break;
            }
            let at = self.offset();
            match self.bump() {
                Tok::Ident(s) if s == "t" => {}
                _ => {
                    return Err(TimeFnError::SyntaxError {
                        offset: at,
                        message: "guard must start with 't'".to_string(),
                    })
                }
            }
            let at = self.offset();
            let op = match self.bump() {
                Tok::Cmp(op) => op,
                _ => {
                    return Err(TimeFnError::SyntaxError {
                        offset: at,
                        message: "expected comparison operator".to_string(),
                    })
                }
            };
            let at = self.offset();
            let rhs = self.expr()?;
            let c = rhs.constant_value().ok_or(TimeFnError::SyntaxError {
                offset: at,
                message: "guard bound must be a constant".to_string(),
            })?;
            self.expect(Tok::Colon, "':'")?;
            let value = self.expr()?;
            branches.push((Guard { op, c }, value));
            match self.bump() {
                Tok::Comma => continue,
                Tok::RParen => break,
                _ => {
                    return Err(TimeFnError::SyntaxError {
                        offset: self.toks[self.k.saturating_sub(1)].1,
                        message: "expected ',' or ')' in piecewise".to_string(),
                    })
                }
            }
        }
        Ok(Expr::Piecewise {
            branches,
            otherwise,
            strict: false,
        })
    }
}
